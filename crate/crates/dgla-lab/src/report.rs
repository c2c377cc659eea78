//! Report assembly and the two output encodings. The machine encoding is
//! canonical and byte-deterministic for fixed inputs and flags (timing is a
//! text-format-only extra); parsing a machine report and re-serializing it
//! is the identity.

use crate::check::CheckList;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    entries: Vec<(String, String)>,
    failures: usize,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn push(&mut self, path: impl Into<String>, value: impl ToString) {
        self.entries.push((path.into(), value.to_string()));
    }

    pub fn push_verdict(&mut self, path: impl Into<String>, ok: bool, witness: &str) {
        if ok {
            self.entries.push((path.into(), "pass".to_string()));
        } else {
            self.failures += 1;
            let value =
                if witness.is_empty() { "FAIL".to_string() } else { format!("FAIL: {}", witness) };
            self.entries.push((path.into(), value));
        }
    }

    pub fn push_checks(&mut self, prefix: &str, checks: &CheckList) {
        for c in &checks.items {
            let path = format!("{}.{}", prefix, sanitize(&c.name));
            self.push_verdict(path, c.passed, c.witness.as_deref().unwrap_or(""));
        }
    }

    pub fn failures(&self) -> usize {
        self.failures
    }

    pub fn ok(&self) -> bool {
        self.failures == 0
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn exit_code(&self) -> i32 {
        if self.ok() {
            0
        } else {
            1
        }
    }

    pub fn to_text(&self, elapsed: Option<std::time::Duration>) -> String {
        let mut out = String::new();
        let width = self.entries.iter().map(|(p, _)| p.len()).max().unwrap_or(0);
        for (path, value) in &self.entries {
            out.push_str(&format!("{:width$}  {}\n", path, value, width = width));
        }
        out.push_str(&format!(
            "result: {} ({} entries, {} failures)\n",
            if self.ok() { "pass" } else { "FAIL" },
            self.entries.len(),
            self.failures
        ));
        if let Some(t) = elapsed {
            out.push_str(&format!("time: {:.3}s\n", t.as_secs_f64()));
        }
        out
    }

    pub fn to_machine(&self) -> String {
        let mut out = String::new();
        for (path, value) in &self.entries {
            out.push_str(&escape(path));
            out.push('\t');
            out.push_str(&escape(value));
            out.push('\n');
        }
        out
    }

    pub fn from_machine(text: &str) -> Result<Report> {
        let mut report = Report::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (path, value) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: i + 1,
                col: 1,
                msg: "machine report line without a tab separator".into(),
            })?;
            let path = unescape(path)?;
            let value = unescape(value)?;
            if value.starts_with("FAIL") {
                report.failures += 1;
            }
            report.entries.push((path, value));
        }
        Ok(report)
    }
}

fn sanitize(name: &str) -> String {
    name.replace([' ', '\t'], "-").replace(':', "")
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            other => out.push(other),
        }
    }
    out
}

fn unescape(s: &str) -> Result<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            other => {
                return Err(Error::invalid(format!("bad escape `\\{:?}`", other)));
            }
        }
    }
    Ok(out)
}
