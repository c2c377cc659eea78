//! Structured outcomes for axiom checkers: every failed identity carries a
//! witness naming the basis elements involved.

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct CheckList {
    pub items: Vec<Check>,
}

impl CheckList {
    pub fn new() -> Self {
        CheckList::default()
    }

    pub fn pass(&mut self, name: impl Into<String>) {
        self.items.push(Check { name: name.into(), passed: true, witness: None });
    }

    pub fn fail(&mut self, name: impl Into<String>, witness: impl Into<String>) {
        self.items.push(Check { name: name.into(), passed: false, witness: Some(witness.into()) });
    }

    pub fn record(&mut self, name: impl Into<String>, ok: bool, witness: impl Into<String>) {
        if ok {
            self.pass(name);
        } else {
            self.fail(name, witness);
        }
    }

    pub fn ok(&self) -> bool {
        self.items.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.items.iter().find(|c| !c.passed)
    }

    pub fn merge(&mut self, other: CheckList) {
        self.items.extend(other.items);
    }
}
