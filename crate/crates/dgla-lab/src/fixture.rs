//! The fixture file format: a line-oriented text grammar declaring graded
//! spaces, differentials, adapted subspaces, DG-Lie algebras, morphisms,
//! Cartan homotopies, period and Abel-Jacobi data, and Artin coefficient
//! algebras. Loading validates every object against its axioms before any
//! computation runs; a file that fails a check is rejected with a witness.
//!
//! ```text
//! # comment
//! space V { em1:-1 e0:0 f0:0 e1:1 }
//! d V { e0 -> e1 }
//! sub F of V { e0 e1 }
//! dgla g { space w:0 x:1 ; d w -> x ; bracket x x = 2*z ; }
//! morphism f : g -> h { x -> y }
//! cartan i : g -> End(V) { x : e0 -> f0 }
//! period P { g=g pair=(V,F) cartan=i }
//! ajdatum D { g=g sub=gt pair=(V,F) v=e0 cartan=i }
//! artin A vars=1 order=3
//! artin B { basis m1 m2 ; mul m1 m1 = m2 ; nilpotency 3 }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::artin::{ArtinAlgebra, MVec};
use crate::cartan::{AbelJacobiDatum, CartanHomotopy, PeriodDatum};
use crate::complex::{CochainComplex, DGPair};
use crate::dgla::{end_algebra, DGLAMorphism, DGLieAlgebra, EndDgla};
use crate::error::{Error, Result};
use crate::graded::{GradedMap, GradedVectorSpace, Key, Vector};
use crate::scalar::Rat;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Semi,
    Arrow,
    Equals,
    Star,
    Plus,
    Minus,
    Slash,
    Comma,
}

#[derive(Debug, Clone)]
struct Sp {
    tok: Tok,
    line: usize,
    col: usize,
}

fn tokenize(text: &str) -> Result<Vec<Sp>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        };
        let bytes: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            let col = i + 1;
            let mut push = |tok: Tok, advance: usize, i: &mut usize| {
                out.push(Sp { tok, line: lineno + 1, col });
                *i += advance;
            };
            match c {
                ' ' | '\t' | '\r' => i += 1,
                '{' => push(Tok::LBrace, 1, &mut i),
                '}' => push(Tok::RBrace, 1, &mut i),
                '(' => push(Tok::LParen, 1, &mut i),
                ')' => push(Tok::RParen, 1, &mut i),
                ':' => push(Tok::Colon, 1, &mut i),
                ';' => push(Tok::Semi, 1, &mut i),
                '=' => push(Tok::Equals, 1, &mut i),
                '*' => push(Tok::Star, 1, &mut i),
                '+' => push(Tok::Plus, 1, &mut i),
                '/' => push(Tok::Slash, 1, &mut i),
                ',' => push(Tok::Comma, 1, &mut i),
                '-' => {
                    if i + 1 < bytes.len() && bytes[i + 1] == '>' {
                        push(Tok::Arrow, 2, &mut i);
                    } else {
                        push(Tok::Minus, 1, &mut i);
                    }
                }
                c if c.is_ascii_digit() => {
                    let mut j = i;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    let s: String = bytes[i..j].iter().collect();
                    let n: i64 = s.parse().map_err(|_| Error::Parse {
                        line: lineno + 1,
                        col,
                        msg: format!("bad integer `{}`", s),
                    })?;
                    out.push(Sp { tok: Tok::Int(n), line: lineno + 1, col });
                    i = j;
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut j = i;
                    while j < bytes.len()
                        && (bytes[j].is_ascii_alphanumeric() || bytes[j] == '_' || bytes[j] == '.')
                    {
                        j += 1;
                    }
                    let s: String = bytes[i..j].iter().collect();
                    out.push(Sp { tok: Tok::Ident(s), line: lineno + 1, col });
                    i = j;
                }
                other => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        col,
                        msg: format!("unexpected character `{}`", other),
                    })
                }
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Sp>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn location(&self) -> (usize, usize) {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|s| (s.line, s.col))
            .unwrap_or((0, 0))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        let (line, col) = self.location();
        Error::Parse { line, col, msg: msg.into() }
    }

    fn next(&mut self) -> Result<Tok> {
        let t = self
            .toks
            .get(self.pos)
            .map(|s| s.tok.clone())
            .ok_or_else(|| self.err("unexpected end of file"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        let got = self.next()?;
        if got == tok {
            Ok(())
        } else {
            self.pos -= 1;
            Err(self.err(format!("expected {:?}, found {:?}", tok, got)))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.next()? {
            Tok::Ident(s) => Ok(s),
            other => {
                self.pos -= 1;
                Err(self.err(format!("expected a name, found {:?}", other)))
            }
        }
    }

    fn integer(&mut self) -> Result<i64> {
        let neg = matches!(self.peek(), Some(Tok::Minus));
        if neg {
            self.next()?;
        }
        match self.next()? {
            Tok::Int(n) => Ok(if neg { -n } else { n }),
            other => {
                self.pos -= 1;
                Err(self.err(format!("expected an integer, found {:?}", other)))
            }
        }
    }

    /// rational: int [/ int]
    fn rational(&mut self) -> Result<Rat> {
        let num = self.integer()?;
        if matches!(self.peek(), Some(Tok::Slash)) {
            self.next()?;
            let den = self.integer()?;
            if den == 0 {
                return Err(self.err("zero denominator"));
            }
            Ok(Rat::new(num.into(), den.into()))
        } else {
            Ok(Rat::from_integer(num.into()))
        }
    }

    /// linear combination: term (("+"|"-") term)*, term = [coef "*"] name | coef
    fn expr(&mut self) -> Result<Vec<(Rat, Option<String>)>> {
        let mut out = Vec::new();
        let mut sign = Rat::from_integer(1.into());
        loop {
            match self.peek() {
                Some(Tok::Minus) => {
                    self.next()?;
                    sign = -sign;
                    continue;
                }
                Some(Tok::Plus) => {
                    self.next()?;
                    continue;
                }
                _ => {}
            }
            let term = match self.peek() {
                Some(Tok::Int(_)) => {
                    let c = self.rational()?;
                    if matches!(self.peek(), Some(Tok::Star)) {
                        self.next()?;
                        let name = self.ident()?;
                        (sign.clone() * c, Some(name))
                    } else {
                        (sign.clone() * c, None)
                    }
                }
                Some(Tok::Ident(_)) => {
                    let name = self.ident()?;
                    (sign.clone(), Some(name))
                }
                other => return Err(self.err(format!("expected a term, found {:?}", other))),
            };
            out.push(term);
            sign = Rat::from_integer(1.into());
            match self.peek() {
                Some(Tok::Plus) => {
                    self.next()?;
                }
                Some(Tok::Minus) => {
                    self.next()?;
                    sign = -Rat::from_integer(1.into());
                }
                _ => break,
            }
        }
        Ok(out)
    }
}

#[derive(Debug)]
enum Stmt {
    Space { name: String, basis: Vec<(String, i32)> },
    Diff { space: String, entries: Vec<(String, Vec<(Rat, Option<String>)>)> },
    Sub { name: String, parent: String, members: Vec<String> },
    Dgla { name: String, basis: Vec<(String, i32)>, d: Vec<(String, Vec<(Rat, Option<String>)>)>, brackets: Vec<(String, String, Vec<(Rat, Option<String>)>)> },
    Morphism { name: String, source: String, target: String, entries: Vec<(String, Vec<(Rat, Option<String>)>)> },
    Cartan { name: String, g: String, v: String, entries: Vec<(String, String, Vec<(Rat, Option<String>)>)> },
    Period { name: String, g: String, space: String, sub: String, cartan: String },
    AjDatum { name: String, g: String, sub_g: String, space: String, sub: String, v: Vec<(Rat, Option<String>)>, cartan: String },
    ArtinPoly { name: String, vars: usize, order: usize },
    ArtinTable { name: String, basis: Vec<String>, muls: Vec<(String, String, Vec<(Rat, Option<String>)>)>, nilpotency: usize },
}

fn parse_statements(text: &str) -> Result<Vec<Stmt>> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    let mut out = Vec::new();
    while p.peek().is_some() {
        let kw = p.ident()?;
        match kw.as_str() {
            "space" => {
                let name = p.ident()?;
                p.expect(Tok::LBrace)?;
                let mut basis = Vec::new();
                while !matches!(p.peek(), Some(Tok::RBrace)) {
                    let n = p.ident()?;
                    p.expect(Tok::Colon)?;
                    let deg = p.integer()? as i32;
                    basis.push((n, deg));
                }
                p.expect(Tok::RBrace)?;
                out.push(Stmt::Space { name, basis });
            }
            "d" => {
                let space = p.ident()?;
                p.expect(Tok::LBrace)?;
                let mut entries = Vec::new();
                while !matches!(p.peek(), Some(Tok::RBrace)) {
                    let from = p.ident()?;
                    p.expect(Tok::Arrow)?;
                    let value = p.expr()?;
                    entries.push((from, value));
                    if matches!(p.peek(), Some(Tok::Semi)) {
                        p.next()?;
                    }
                }
                p.expect(Tok::RBrace)?;
                out.push(Stmt::Diff { space, entries });
            }
            "sub" => {
                let name = p.ident()?;
                let of = p.ident()?;
                if of != "of" {
                    return Err(p.err("expected `of`"));
                }
                let parent = p.ident()?;
                p.expect(Tok::LBrace)?;
                let mut members = Vec::new();
                while !matches!(p.peek(), Some(Tok::RBrace)) {
                    members.push(p.ident()?);
                }
                p.expect(Tok::RBrace)?;
                out.push(Stmt::Sub { name, parent, members });
            }
            "dgla" => {
                let name = p.ident()?;
                p.expect(Tok::LBrace)?;
                let mut basis = Vec::new();
                let mut d = Vec::new();
                let mut brackets = Vec::new();
                while !matches!(p.peek(), Some(Tok::RBrace)) {
                    let clause = p.ident()?;
                    match clause.as_str() {
                        "space" => {
                            while matches!(p.peek(), Some(Tok::Ident(_))) {
                                let n = p.ident()?;
                                p.expect(Tok::Colon)?;
                                let deg = p.integer()? as i32;
                                basis.push((n, deg));
                            }
                            p.expect(Tok::Semi)?;
                        }
                        "d" => {
                            let from = p.ident()?;
                            p.expect(Tok::Arrow)?;
                            d.push((from, p.expr()?));
                            p.expect(Tok::Semi)?;
                        }
                        "bracket" => {
                            let a = p.ident()?;
                            let b = p.ident()?;
                            p.expect(Tok::Equals)?;
                            brackets.push((a, b, p.expr()?));
                            p.expect(Tok::Semi)?;
                        }
                        other => return Err(p.err(format!("unknown dgla clause `{}`", other))),
                    }
                }
                p.expect(Tok::RBrace)?;
                out.push(Stmt::Dgla { name, basis, d, brackets });
            }
            "morphism" => {
                let name = p.ident()?;
                p.expect(Tok::Colon)?;
                let source = p.ident()?;
                p.expect(Tok::Arrow)?;
                let target = p.ident()?;
                p.expect(Tok::LBrace)?;
                let mut entries = Vec::new();
                while !matches!(p.peek(), Some(Tok::RBrace)) {
                    let from = p.ident()?;
                    p.expect(Tok::Arrow)?;
                    entries.push((from, p.expr()?));
                    if matches!(p.peek(), Some(Tok::Semi)) {
                        p.next()?;
                    }
                }
                p.expect(Tok::RBrace)?;
                out.push(Stmt::Morphism { name, source, target, entries });
            }
            "cartan" => {
                let name = p.ident()?;
                p.expect(Tok::Colon)?;
                let g = p.ident()?;
                p.expect(Tok::Arrow)?;
                let end = p.ident()?;
                if end != "End" {
                    return Err(p.err("cartan target must be End(<space>)"));
                }
                p.expect(Tok::LParen)?;
                let v = p.ident()?;
                p.expect(Tok::RParen)?;
                p.expect(Tok::LBrace)?;
                let mut entries = Vec::new();
                while !matches!(p.peek(), Some(Tok::RBrace)) {
                    let x = p.ident()?;
                    p.expect(Tok::Colon)?;
                    let from = p.ident()?;
                    p.expect(Tok::Arrow)?;
                    entries.push((x, from, p.expr()?));
                    if matches!(p.peek(), Some(Tok::Semi)) {
                        p.next()?;
                    }
                }
                p.expect(Tok::RBrace)?;
                out.push(Stmt::Cartan { name, g, v, entries });
            }
            "period" => {
                let name = p.ident()?;
                p.expect(Tok::LBrace)?;
                let mut g = None;
                let mut pair = None;
                let mut cartan = None;
                while !matches!(p.peek(), Some(Tok::RBrace)) {
                    let field = p.ident()?;
                    p.expect(Tok::Equals)?;
                    match field.as_str() {
                        "g" => g = Some(p.ident()?),
                        "cartan" => cartan = Some(p.ident()?),
                        "pair" => {
                            p.expect(Tok::LParen)?;
                            let sp = p.ident()?;
                            p.expect(Tok::Comma)?;
                            let sb = p.ident()?;
                            p.expect(Tok::RParen)?;
                            pair = Some((sp, sb));
                        }
                        other => return Err(p.err(format!("unknown period field `{}`", other))),
                    }
                }
                p.expect(Tok::RBrace)?;
                let (space, sub) =
                    pair.ok_or_else(|| p.err("period needs pair=(V,F)"))?;
                out.push(Stmt::Period {
                    name,
                    g: g.ok_or_else(|| p.err("period needs g=<dgla>"))?,
                    space,
                    sub,
                    cartan: cartan.ok_or_else(|| p.err("period needs cartan=<name>"))?,
                });
            }
            "ajdatum" => {
                let name = p.ident()?;
                p.expect(Tok::LBrace)?;
                let mut g = None;
                let mut sub_g = None;
                let mut pair = None;
                let mut v = None;
                let mut cartan = None;
                while !matches!(p.peek(), Some(Tok::RBrace)) {
                    let field = p.ident()?;
                    p.expect(Tok::Equals)?;
                    match field.as_str() {
                        "g" => g = Some(p.ident()?),
                        "sub" => sub_g = Some(p.ident()?),
                        "cartan" => cartan = Some(p.ident()?),
                        "v" => v = Some(p.expr()?),
                        "pair" => {
                            p.expect(Tok::LParen)?;
                            let sp = p.ident()?;
                            p.expect(Tok::Comma)?;
                            let sb = p.ident()?;
                            p.expect(Tok::RParen)?;
                            pair = Some((sp, sb));
                        }
                        other => return Err(p.err(format!("unknown ajdatum field `{}`", other))),
                    }
                }
                p.expect(Tok::RBrace)?;
                let (space, sub) = pair.ok_or_else(|| p.err("ajdatum needs pair=(V,F)"))?;
                out.push(Stmt::AjDatum {
                    name,
                    g: g.ok_or_else(|| p.err("ajdatum needs g=<dgla>"))?,
                    sub_g: sub_g.ok_or_else(|| p.err("ajdatum needs sub=<sub>"))?,
                    space,
                    sub,
                    v: v.ok_or_else(|| p.err("ajdatum needs v=<cocycle>"))?,
                    cartan: cartan.ok_or_else(|| p.err("ajdatum needs cartan=<name>"))?,
                });
            }
            "artin" => {
                let name = p.ident()?;
                if matches!(p.peek(), Some(Tok::LBrace)) {
                    p.next()?;
                    let mut basis = Vec::new();
                    let mut muls = Vec::new();
                    let mut nilpotency = None;
                    while !matches!(p.peek(), Some(Tok::RBrace)) {
                        let clause = p.ident()?;
                        match clause.as_str() {
                            "basis" => {
                                while matches!(p.peek(), Some(Tok::Ident(_))) {
                                    basis.push(p.ident()?);
                                }
                                p.expect(Tok::Semi)?;
                            }
                            "mul" => {
                                let a = p.ident()?;
                                let b = p.ident()?;
                                p.expect(Tok::Equals)?;
                                muls.push((a, b, p.expr()?));
                                p.expect(Tok::Semi)?;
                            }
                            "nilpotency" => {
                                nilpotency = Some(p.integer()? as usize);
                                if matches!(p.peek(), Some(Tok::Semi)) {
                                    p.next()?;
                                }
                            }
                            other => {
                                return Err(p.err(format!("unknown artin clause `{}`", other)))
                            }
                        }
                    }
                    p.expect(Tok::RBrace)?;
                    out.push(Stmt::ArtinTable {
                        name,
                        basis,
                        muls,
                        nilpotency: nilpotency
                            .ok_or_else(|| p.err("artin table needs nilpotency <N>"))?,
                    });
                } else {
                    let vars_kw = p.ident()?;
                    if vars_kw != "vars" {
                        return Err(p.err("expected vars=<k>"));
                    }
                    p.expect(Tok::Equals)?;
                    let vars = p.integer()? as usize;
                    let order_kw = p.ident()?;
                    if order_kw != "order" {
                        return Err(p.err("expected order=<N>"));
                    }
                    p.expect(Tok::Equals)?;
                    let order = p.integer()? as usize;
                    out.push(Stmt::ArtinPoly { name, vars, order });
                }
            }
            other => return Err(p.err(format!("unknown statement `{}`", other))),
        }
    }
    Ok(out)
}

/// A fully validated object graph.
pub struct Fixture {
    pub complexes: BTreeMap<String, Arc<CochainComplex>>,
    /// subs of spaces, as DG-pairs
    pub pairs: BTreeMap<String, DGPair>,
    /// subs of DG-Lie algebras, as adapted key sets with their parent name
    pub dgla_subs: BTreeMap<String, (String, DGPair)>,
    pub dglas: BTreeMap<String, Arc<DGLieAlgebra>>,
    pub morphisms: BTreeMap<String, DGLAMorphism>,
    pub cartans: BTreeMap<String, (String, String, CartanHomotopy, EndDgla)>,
    pub periods: BTreeMap<String, PeriodDatum>,
    pub ajdata: BTreeMap<String, AbelJacobiDatum>,
    pub artins: BTreeMap<String, Arc<ArtinAlgebra>>,
}

fn build_vector(
    space: &GradedVectorSpace,
    terms: &[(Rat, Option<String>)],
) -> Result<Vector> {
    let mut out = Vector::zero();
    for (c, name) in terms {
        match name {
            None => {
                if !c.is_zero() {
                    return Err(Error::invalid(
                        "constant terms are only allowed as the zero vector",
                    ));
                }
            }
            Some(n) => {
                let key = space
                    .lookup(n)
                    .ok_or_else(|| Error::UnknownName(n.clone()))?;
                out.add_term(key, c);
            }
        }
    }
    Ok(out)
}

pub fn parse_fixture(text: &str) -> Result<Fixture> {
    let stmts = parse_statements(text)?;
    let mut complexes: BTreeMap<String, Arc<CochainComplex>> = BTreeMap::new();
    let mut pairs = BTreeMap::new();
    let mut dgla_subs = BTreeMap::new();
    let mut dglas: BTreeMap<String, Arc<DGLieAlgebra>> = BTreeMap::new();
    let mut morphisms = BTreeMap::new();
    let mut cartans: BTreeMap<String, (String, String, CartanHomotopy, EndDgla)> = BTreeMap::new();
    let mut periods = BTreeMap::new();
    let mut ajdata = BTreeMap::new();
    let mut artins = BTreeMap::new();

    // collect space differentials first
    let mut diffs: BTreeMap<String, &Vec<(String, Vec<(Rat, Option<String>)>)>> = BTreeMap::new();
    for stmt in &stmts {
        if let Stmt::Diff { space, entries } = stmt {
            diffs.insert(space.clone(), entries);
        }
    }

    let mut rng = ChaCha12Rng::seed_from_u64(0);

    for stmt in &stmts {
        match stmt {
            Stmt::Space { name, basis } => {
                if complexes.contains_key(name) || dglas.contains_key(name) {
                    return Err(Error::DuplicateName(name.clone()));
                }
                let mut degrees: BTreeMap<i32, Vec<String>> = BTreeMap::new();
                for (n, deg) in basis {
                    degrees.entry(*deg).or_default().push(n.clone());
                }
                let space = GradedVectorSpace::new(name.clone(), degrees)?;
                let d = match diffs.get(name) {
                    None => GradedMap::zero(space.clone(), space.clone(), 1),
                    Some(entries) => {
                        let mut images: BTreeMap<Key, Vector> = BTreeMap::new();
                        for (from, value) in entries.iter() {
                            let key = space
                                .lookup(from)
                                .ok_or_else(|| Error::UnknownName(from.clone()))?;
                            images.insert(key, build_vector(&space, value)?);
                        }
                        GradedMap::from_images(space.clone(), space.clone(), 1, |k| {
                            images.get(&k).cloned().unwrap_or_default()
                        })?
                    }
                };
                let complex = CochainComplex::new(space, d)?;
                let checks = complex.check();
                if !checks.ok() {
                    let f = checks.first_failure().unwrap();
                    return Err(Error::check(name, f.witness.clone().unwrap_or_default()));
                }
                complexes.insert(name.clone(), complex);
            }
            Stmt::Diff { space, .. } => {
                if !complexes.contains_key(space) && !dglas.contains_key(space) {
                    return Err(Error::UnknownName(space.clone()));
                }
            }
            Stmt::Sub { name, parent, members } => {
                if let Some(complex) = complexes.get(parent) {
                    let mut keys = BTreeSet::new();
                    for m in members {
                        keys.insert(
                            complex
                                .space
                                .lookup(m)
                                .ok_or_else(|| Error::UnknownName(m.clone()))?,
                        );
                    }
                    let pair = DGPair::new(complex.clone(), keys, name.clone())?;
                    pairs.insert(name.clone(), pair);
                } else if let Some(g) = dglas.get(parent) {
                    let mut keys = BTreeSet::new();
                    for m in members {
                        keys.insert(
                            g.space().lookup(m).ok_or_else(|| Error::UnknownName(m.clone()))?,
                        );
                    }
                    // closure under d and bracket
                    for &k in &keys {
                        for (kk, _) in g.complex.d.apply_key(k).iter() {
                            if !keys.contains(kk) {
                                return Err(Error::check(
                                    name,
                                    format!("not closed under d at {}", g.space().basis_name(k)),
                                ));
                            }
                        }
                        for &k2 in &keys {
                            for (kk, _) in g.bracket_keys(k, k2).iter() {
                                if !keys.contains(kk) {
                                    return Err(Error::check(
                                        name,
                                        "not closed under the bracket".to_string(),
                                    ));
                                }
                            }
                        }
                    }
                    let pair = DGPair::new(g.complex.clone(), keys, name.clone())?;
                    dgla_subs.insert(name.clone(), (parent.clone(), pair));
                } else {
                    return Err(Error::UnknownName(parent.clone()));
                }
            }
            Stmt::Dgla { name, basis, d, brackets } => {
                if complexes.contains_key(name) || dglas.contains_key(name) {
                    return Err(Error::DuplicateName(name.clone()));
                }
                let mut degrees: BTreeMap<i32, Vec<String>> = BTreeMap::new();
                for (n, deg) in basis {
                    degrees.entry(*deg).or_default().push(n.clone());
                }
                let space = GradedVectorSpace::new(name.clone(), degrees)?;
                let mut images: BTreeMap<Key, Vector> = BTreeMap::new();
                for (from, value) in d {
                    let key =
                        space.lookup(from).ok_or_else(|| Error::UnknownName(from.clone()))?;
                    images.insert(key, build_vector(&space, value)?);
                }
                let dmap = GradedMap::from_images(space.clone(), space.clone(), 1, |k| {
                    images.get(&k).cloned().unwrap_or_default()
                })?;
                let complex = CochainComplex::new(space.clone(), dmap)?;
                let mut table = BTreeMap::new();
                for (a, b, value) in brackets {
                    let ka = space.lookup(a).ok_or_else(|| Error::UnknownName(a.clone()))?;
                    let kb = space.lookup(b).ok_or_else(|| Error::UnknownName(b.clone()))?;
                    table.insert((ka, kb), build_vector(&space, value)?);
                }
                let g = DGLieAlgebra::new(name.clone(), complex, table);
                let checks = g.check();
                if !checks.ok() {
                    let f = checks.first_failure().unwrap();
                    return Err(Error::check(
                        name,
                        format!("{}: {}", f.name, f.witness.clone().unwrap_or_default()),
                    ));
                }
                dglas.insert(name.clone(), g);
            }
            Stmt::Morphism { name, source, target, entries } => {
                let src =
                    dglas.get(source).ok_or_else(|| Error::UnknownName(source.clone()))?;
                let tgt =
                    dglas.get(target).ok_or_else(|| Error::UnknownName(target.clone()))?;
                let mut images: BTreeMap<Key, Vector> = BTreeMap::new();
                for (from, value) in entries {
                    let key = src
                        .space()
                        .lookup(from)
                        .ok_or_else(|| Error::UnknownName(from.clone()))?;
                    images.insert(key, build_vector(tgt.space(), value)?);
                }
                let map = GradedMap::from_images(src.space().clone(), tgt.space().clone(), 0, |k| {
                    images.get(&k).cloned().unwrap_or_default()
                })?;
                let m = DGLAMorphism::new(name.clone(), src.clone(), tgt.clone(), map);
                let checks = m.check();
                if !checks.ok() {
                    let f = checks.first_failure().unwrap();
                    return Err(Error::check(
                        name,
                        format!("{}: {}", f.name, f.witness.clone().unwrap_or_default()),
                    ));
                }
                morphisms.insert(name.clone(), m);
            }
            Stmt::Cartan { name, g, v, entries } => {
                let galg = dglas.get(g).ok_or_else(|| Error::UnknownName(g.clone()))?;
                let complex =
                    complexes.get(v).ok_or_else(|| Error::UnknownName(v.clone()))?;
                let end = end_algebra(complex, &[])?;
                let vs = complex.space.clone();
                let mut op_images: BTreeMap<Key, Vector> = BTreeMap::new();
                for (x, from, value) in entries {
                    let xk = galg
                        .space()
                        .lookup(x)
                        .ok_or_else(|| Error::UnknownName(x.clone()))?;
                    let fk = vs.lookup(from).ok_or_else(|| Error::UnknownName(from.clone()))?;
                    let img = build_vector(&vs, value)?;
                    let entry = op_images.entry(xk).or_default();
                    for (tk, c) in img.iter() {
                        let opk = end.key(fk, *tk).ok_or_else(|| {
                            Error::invalid("operator entry outside End(V)")
                        })?;
                        entry.add_term(opk, c);
                    }
                }
                let i = GradedMap::from_images(
                    galg.space().clone(),
                    end.dgla.space().clone(),
                    -1,
                    |k| op_images.get(&k).cloned().unwrap_or_default(),
                )?;
                let homotopy = CartanHomotopy::new(galg.clone(), end.dgla.clone(), i)?;
                let checks = homotopy.check(&mut rng);
                if !checks.ok() {
                    let f = checks.first_failure().unwrap();
                    return Err(Error::check(
                        name,
                        format!("{}: {}", f.name, f.witness.clone().unwrap_or_default()),
                    ));
                }
                cartans.insert(name.clone(), (g.clone(), v.clone(), homotopy, end));
            }
            Stmt::Period { name, g, space, sub, cartan } => {
                let (cg, cv, _, _) =
                    cartans.get(cartan).ok_or_else(|| Error::UnknownName(cartan.clone()))?;
                if cg != g || cv != space {
                    return Err(Error::invalid(format!(
                        "period `{}`: cartan `{}` is not from {} into End({})",
                        name, cartan, g, space
                    )));
                }
                let pair =
                    pairs.get(sub).ok_or_else(|| Error::UnknownName(sub.clone()))?.clone();
                let galg = dglas.get(g).ok_or_else(|| Error::UnknownName(g.clone()))?;
                // rebuild the homotopy against a fresh End so the datum owns it
                let (_, _, homotopy, end) = rebuild_cartan(&cartans[cartan], galg)?;
                let datum = PeriodDatum::new(galg.clone(), pair, end, homotopy)?;
                let checks = datum.validate(&mut rng);
                if !checks.ok() {
                    let f = checks.first_failure().unwrap();
                    return Err(Error::check(
                        name,
                        format!("{}: {}", f.name, f.witness.clone().unwrap_or_default()),
                    ));
                }
                periods.insert(name.clone(), datum);
            }
            Stmt::AjDatum { name, g, sub_g, space, sub, v, cartan } => {
                let (cg, cv, _, _) =
                    cartans.get(cartan).ok_or_else(|| Error::UnknownName(cartan.clone()))?;
                if cg != g || cv != space {
                    return Err(Error::invalid(format!(
                        "ajdatum `{}`: cartan `{}` is not from {} into End({})",
                        name, cartan, g, space
                    )));
                }
                let pair =
                    pairs.get(sub).ok_or_else(|| Error::UnknownName(sub.clone()))?.clone();
                let galg = dglas.get(g).ok_or_else(|| Error::UnknownName(g.clone()))?;
                let (parent, sub_pair) = dgla_subs
                    .get(sub_g)
                    .ok_or_else(|| Error::UnknownName(sub_g.clone()))?;
                if parent != g {
                    return Err(Error::invalid(format!(
                        "ajdatum `{}`: sub `{}` is not a subalgebra of {}",
                        name, sub_g, g
                    )));
                }
                let (_, _, homotopy, end) = rebuild_cartan(&cartans[cartan], galg)?;
                let vspace = complexes.get(space).unwrap().space.clone();
                let marked = build_vector(&vspace, v)?;
                let period = PeriodDatum::new(galg.clone(), pair, end, homotopy)?;
                let datum =
                    AbelJacobiDatum { period, sub_g: sub_pair.clone(), v: marked };
                let checks = datum.validate(&mut rng);
                if !checks.ok() {
                    let f = checks.first_failure().unwrap();
                    return Err(Error::check(
                        name,
                        format!("{}: {}", f.name, f.witness.clone().unwrap_or_default()),
                    ));
                }
                ajdata.insert(name.clone(), datum);
            }
            Stmt::ArtinPoly { name, vars, order } => {
                let a = ArtinAlgebra::truncated_poly(*vars, *order)?;
                let checks = a.check();
                if !checks.ok() {
                    let f = checks.first_failure().unwrap();
                    return Err(Error::check(
                        name,
                        format!("{}: {}", f.name, f.witness.clone().unwrap_or_default()),
                    ));
                }
                artins.insert(name.clone(), a);
            }
            Stmt::ArtinTable { name, basis, muls, nilpotency } => {
                let index: BTreeMap<&String, usize> =
                    basis.iter().enumerate().map(|(i, b)| (b, i)).collect();
                let mut table: BTreeMap<(usize, usize), MVec> = BTreeMap::new();
                for (a, b, value) in muls {
                    let ia = *index.get(a).ok_or_else(|| Error::UnknownName(a.clone()))?;
                    let ib = *index.get(b).ok_or_else(|| Error::UnknownName(b.clone()))?;
                    let mut mv = MVec::new();
                    for (c, n) in value {
                        match n {
                            None => {
                                if !c.is_zero() {
                                    return Err(Error::invalid(
                                        "artin products lie in the maximal ideal",
                                    ));
                                }
                            }
                            Some(nm) => {
                                let i = *index
                                    .get(nm)
                                    .ok_or_else(|| Error::UnknownName(nm.clone()))?;
                                let e = mv.entry(i).or_insert_with(Rat::zero);
                                *e += c;
                            }
                        }
                    }
                    mv.retain(|_, c| !c.is_zero());
                    let key = if ia <= ib { (ia, ib) } else { (ib, ia) };
                    table.insert(key, mv);
                }
                let a = ArtinAlgebra::from_table(name.clone(), basis.clone(), table, *nilpotency);
                let checks = a.check();
                if !checks.ok() {
                    let f = checks.first_failure().unwrap();
                    return Err(Error::check(
                        name,
                        format!("{}: {}", f.name, f.witness.clone().unwrap_or_default()),
                    ));
                }
                artins.insert(name.clone(), a);
            }
        }
    }

    Ok(Fixture {
        complexes,
        pairs,
        dgla_subs,
        dglas,
        morphisms,
        cartans,
        periods,
        ajdata,
        artins,
    })
}

/// Recreate a parsed Cartan homotopy against a fresh End(V) tied to a datum.
fn rebuild_cartan(
    entry: &(String, String, CartanHomotopy, EndDgla),
    g: &Arc<DGLieAlgebra>,
) -> Result<(String, String, CartanHomotopy, EndDgla)> {
    let (gname, vname, homotopy, end) = entry;
    let fresh = end_algebra(&end.v, &[])?;
    let i = GradedMap::from_images(
        g.space().clone(),
        fresh.dgla.space().clone(),
        -1,
        |k| {
            let img = homotopy.i.apply_key(k);
            let mut out = Vector::zero();
            for (kk, c) in img.iter() {
                let (p, q) = end.parts(*kk);
                out.add_term(fresh.key(p, q).expect("operator"), c);
            }
            out
        },
    )?;
    let rebuilt = CartanHomotopy::new(g.clone(), fresh.dgla.clone(), i)?;
    Ok((gname.clone(), vname.clone(), rebuilt, fresh))
}

pub fn load_fixture_file(path: &std::path::Path) -> Result<(String, Fixture)> {
    let text = std::fs::read_to_string(path)?;
    let fixture = parse_fixture(&text)?;
    Ok((text, fixture))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_p1_style_fixture() {
        let text = r#"
# basic pair
space V { e0:0 f0:0 e1:1 }
d V { e0 -> 0 }
sub F of V { e0 e1 }
artin A vars=1 order=3
"#;
        let f = parse_fixture(text).unwrap();
        assert_eq!(f.complexes["V"].space.dim(0), 2);
        assert!(f.pairs.contains_key("F"));
        assert_eq!(f.artins["A"].dim_m(), 2);
    }

    #[test]
    fn rejects_broken_differential() {
        let text = r#"
space W { a:0 b:1 c:2 }
d W { a -> b ; b -> c }
"#;
        match parse_fixture(text) {
            Err(Error::CheckFailed { .. }) => {}
            Err(other) => panic!("expected check failure, got {:?}", other),
            Ok(_) => panic!("expected check failure"),
        }
    }

    #[test]
    fn rejects_unknown_names() {
        let text = "sub F of V { e0 }\n";
        assert!(matches!(parse_fixture(text).err(), Some(Error::UnknownName(_))));
    }

    #[test]
    fn parses_dgla_with_brackets() {
        let text = r#"
dgla sl2 { space h:0 x:0 y:0 ; bracket h x = 2*x ; bracket h y = -2*y ; bracket x y = h ; }
"#;
        let f = parse_fixture(text).unwrap();
        let g = &f.dglas["sl2"];
        assert!(g.check().ok());
        assert_eq!(g.space().dim(0), 3);
    }

    #[test]
    fn rejects_broken_antisymmetry() {
        let text = r#"
dgla bad { space x:0 y:0 ; bracket x y = x ; bracket y x = x ; }
"#;
        assert!(matches!(parse_fixture(text).err(), Some(Error::CheckFailed { .. })));
    }

    #[test]
    fn parse_error_has_location() {
        let text = "space V { e0:0 }\nd V { e0 -> ? }\n";
        match parse_fixture(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            Err(other) => panic!("expected parse error, got {:?}", other),
            Ok(_) => panic!("expected parse error"),
        }
    }

    #[test]
    fn artin_table_form() {
        let text = r#"
artin B { basis m1 m2 ; mul m1 m1 = m2 ; nilpotency 3 }
"#;
        let f = parse_fixture(text).unwrap();
        assert_eq!(f.artins["B"].nilpotency_index(), 3);
    }
}
