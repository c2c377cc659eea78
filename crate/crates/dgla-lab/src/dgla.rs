//! DG-Lie algebras with exact axiom checking, and the constructions the
//! rest of the crate is built from: endomorphism and affine-endomorphism
//! algebras of a complex (with or without preserved subcomplexes), the
//! mapping cone of the identity, sections of Aff -> End attached to a closed
//! degree-zero vector, sub-DGLAs cut out by linear conditions, fiber
//! products and kernels.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_traits::Zero;

use crate::check::CheckList;
use crate::complex::{CochainComplex, DGPair};
use crate::error::{Error, Result};
use crate::graded::{GradedMap, GradedVectorSpace, Key, Vector};
use crate::linalg::{in_span, span_canonical, Mat};
use crate::scalar::{rat, Rat};

#[derive(Debug)]
pub struct DGLieAlgebra {
    pub complex: Arc<CochainComplex>,
    /// raw bracket table as constructed or loaded; lookups fall back to the
    /// graded-antisymmetric mirror image
    table: BTreeMap<(Key, Key), Vector>,
    name: String,
}

pub fn koszul_sign(a: i32, b: i32) -> Rat {
    if (a * b) % 2 == 0 {
        rat(1)
    } else {
        rat(-1)
    }
}

impl DGLieAlgebra {
    pub fn new(
        name: impl Into<String>,
        complex: Arc<CochainComplex>,
        mut table: BTreeMap<(Key, Key), Vector>,
    ) -> Arc<Self> {
        table.retain(|_, v| !v.is_zero());
        Arc::new(DGLieAlgebra { complex, table, name: name.into() })
    }

    pub fn abelian(name: impl Into<String>, complex: Arc<CochainComplex>) -> Arc<Self> {
        Self::new(name, complex, BTreeMap::new())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &Arc<GradedVectorSpace> {
        &self.complex.space
    }

    pub fn d(&self, x: &Vector) -> Vector {
        self.complex.d.apply(x)
    }

    pub fn raw_table(&self) -> &BTreeMap<(Key, Key), Vector> {
        &self.table
    }

    pub fn bracket_keys(&self, a: Key, b: Key) -> Vector {
        if let Some(v) = self.table.get(&(a, b)) {
            return v.clone();
        }
        if let Some(v) = self.table.get(&(b, a)) {
            // [a,b] = -(-1)^{|a||b|} [b,a]
            return v.scale(&-koszul_sign(a.deg, b.deg));
        }
        Vector::zero()
    }

    pub fn bracket(&self, x: &Vector, y: &Vector) -> Vector {
        let mut out = Vector::zero();
        for (a, ca) in x.iter() {
            for (b, cb) in y.iter() {
                let val = self.bracket_keys(*a, *b);
                if val.is_zero() {
                    continue;
                }
                let c = ca * cb;
                for (k, v) in val.iter() {
                    out.add_term(*k, &(&c * v));
                }
            }
        }
        out
    }

    /// Graded antisymmetry, degree homogeneity, Jacobi and Leibniz on all
    /// basis pairs/triples, each with a witness on failure.
    pub fn check(&self) -> CheckList {
        let mut checks = CheckList::new();
        let space = self.space();
        let keys = space.all_keys();
        let name_of = |k: Key| space.basis_name(k).to_string();

        let mut witness = None;
        for ((a, b), v) in &self.table {
            let expect = a.deg + b.deg;
            if v.iter().any(|(k, _)| k.deg != expect) {
                witness = Some(format!(
                    "[{},{}] = {} is not homogeneous of degree {}",
                    name_of(*a),
                    name_of(*b),
                    v.describe(space),
                    expect
                ));
                break;
            }
        }
        checks.record("bracket degree", witness.is_none(), witness.unwrap_or_default());

        let mut witness = None;
        'anti: for &a in &keys {
            for &b in &keys {
                let ab = self.bracket_keys(a, b);
                let ba = self.bracket_keys(b, a);
                let expected = ba.scale(&-koszul_sign(a.deg, b.deg));
                if ab != expected {
                    witness = Some(format!(
                        "[{x},{y}] = {v} but -(-1)^(|{x}||{y}|) [{y},{x}] = {w}",
                        x = name_of(a),
                        y = name_of(b),
                        v = ab.describe(space),
                        w = expected.describe(space)
                    ));
                    break 'anti;
                }
            }
        }
        checks.record("graded antisymmetry", witness.is_none(), witness.unwrap_or_default());

        let mut witness = None;
        'leib: for &a in &keys {
            for &b in &keys {
                let lhs = self.d(&self.bracket_keys(a, b));
                let rhs = self
                    .bracket(&self.complex.d.apply_key(a), &space.basis_vector(b))
                    .add(
                        &self
                            .bracket(&space.basis_vector(a), &self.complex.d.apply_key(b))
                            .scale(&koszul_sign(a.deg, 1)),
                    );
                if lhs != rhs {
                    witness = Some(format!("d[{},{}] != [dx,y] + (-1)^|x| [x,dy]", name_of(a), name_of(b)));
                    break 'leib;
                }
            }
        }
        checks.record("graded Leibniz", witness.is_none(), witness.unwrap_or_default());

        let mut witness = None;
        'jac: for &a in &keys {
            for &b in &keys {
                for &c in &keys {
                    let lhs = self.bracket(&space.basis_vector(a), &self.bracket_keys(b, c));
                    let rhs = self
                        .bracket(&self.bracket_keys(a, b), &space.basis_vector(c))
                        .add(
                            &self
                                .bracket(&space.basis_vector(b), &self.bracket_keys(a, c))
                                .scale(&koszul_sign(a.deg, b.deg)),
                        );
                    if lhs != rhs {
                        witness = Some(format!(
                            "Jacobi fails on ({}, {}, {})",
                            name_of(a),
                            name_of(b),
                            name_of(c)
                        ));
                        break 'jac;
                    }
                }
            }
        }
        checks.record("graded Jacobi", witness.is_none(), witness.unwrap_or_default());

        checks.merge(self.complex.check());
        checks
    }
}

#[derive(Debug, Clone)]
pub struct DGLAMorphism {
    pub source: Arc<DGLieAlgebra>,
    pub target: Arc<DGLieAlgebra>,
    pub map: GradedMap,
    pub name: String,
}

impl DGLAMorphism {
    pub fn new(
        name: impl Into<String>,
        source: Arc<DGLieAlgebra>,
        target: Arc<DGLieAlgebra>,
        map: GradedMap,
    ) -> Self {
        DGLAMorphism { source, target, map, name: name.into() }
    }

    pub fn zero_to(target: Arc<DGLieAlgebra>) -> Self {
        let zero_space = GradedVectorSpace::new("0", BTreeMap::new()).unwrap();
        let zero = DGLieAlgebra::abelian("0", CochainComplex::zero_differential(zero_space));
        let map = GradedMap::zero(zero.space().clone(), target.space().clone(), 0);
        DGLAMorphism { source: zero, target, map, name: "0".into() }
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        self.map.apply(x)
    }

    /// Chain map and bracket preservation on all basis pairs.
    pub fn check(&self) -> CheckList {
        let mut checks = CheckList::new();
        let src = self.source.space();
        let mut witness = None;
        for key in src.all_keys() {
            let lhs = self.map.apply(&self.source.complex.d.apply_key(key));
            let rhs = self.target.complex.d.apply(&self.map.apply_key(key));
            if lhs != rhs {
                witness = Some(format!("f(d {}) != d f({})", src.basis_name(key), src.basis_name(key)));
                break;
            }
        }
        checks.record(
            format!("{}: chain map", self.name),
            witness.is_none(),
            witness.unwrap_or_default(),
        );

        let mut witness = None;
        'outer: for a in src.all_keys() {
            for b in src.all_keys() {
                let lhs = self.map.apply(&self.source.bracket_keys(a, b));
                let rhs =
                    self.target.bracket(&self.map.apply_key(a), &self.map.apply_key(b));
                if lhs != rhs {
                    witness = Some(format!(
                        "f[{},{}] != [f{},f{}]",
                        src.basis_name(a),
                        src.basis_name(b),
                        src.basis_name(a),
                        src.basis_name(b)
                    ));
                    break 'outer;
                }
            }
        }
        checks.record(
            format!("{}: bracket preserved", self.name),
            witness.is_none(),
            witness.unwrap_or_default(),
        );
        checks
    }

    pub fn compose(&self, inner: &DGLAMorphism) -> DGLAMorphism {
        DGLAMorphism {
            source: inner.source.clone(),
            target: self.target.clone(),
            map: self.map.compose(&inner.map),
            name: format!("{}.{}", self.name, inner.name),
        }
    }
}

/// The endomorphism DG-Lie algebra End*(V; F_1, ..., F_n), materialized on
/// the elementary-matrix basis of operators preserving each F_i.
#[derive(Debug)]
pub struct EndDgla {
    pub dgla: Arc<DGLieAlgebra>,
    pub v: Arc<CochainComplex>,
    pairs: Vec<(Key, Key)>,
    key_of: HashMap<(Key, Key), Key>,
}

impl EndDgla {
    /// Basis key of the elementary operator from -> to, if it belongs.
    pub fn key(&self, from: Key, to: Key) -> Option<Key> {
        self.key_of.get(&(from, to)).copied()
    }

    pub fn parts(&self, key: Key) -> (Key, Key) {
        let space = self.dgla.space();
        let name = space.basis_name(key);
        let idx: usize = name.trim_start_matches("E").parse().expect("End basis name");
        self.pairs[idx]
    }

    /// Action of an End-element on a V-element.
    pub fn act(&self, xi: &Vector, v: &Vector) -> Vector {
        let mut out = Vector::zero();
        for (ek, c) in xi.iter() {
            let (from, to) = self.parts(*ek);
            for (vk, cv) in v.iter() {
                if *vk == from {
                    out.add_term(to, &(c * cv));
                }
            }
        }
        out
    }

    /// Encode a graded map V -> V as an element of End*(V); `None` if some
    /// matrix entry falls outside the preserved-subspace constraints.
    pub fn encode(&self, map: &GradedMap) -> Option<Vector> {
        let mut out = Vector::zero();
        for from in self.v.space.all_keys() {
            let img = map.apply_key(from);
            for (to, c) in img.iter() {
                out.add_term(self.key(from, *to)?, c);
            }
        }
        Some(out)
    }

    pub fn describe_elem(&self, xi: &Vector) -> String {
        if xi.is_zero() {
            return "0".into();
        }
        let vs = &self.v.space;
        let mut parts = Vec::new();
        for (ek, c) in xi.iter() {
            let (from, to) = self.parts(*ek);
            parts.push(format!("{}*({}->{})", c, vs.basis_name(from), vs.basis_name(to)));
        }
        parts.join(" + ")
    }
}

pub fn end_algebra(v: &Arc<CochainComplex>, subs: &[&DGPair]) -> Result<EndDgla> {
    let vs = &v.space;
    let mut pairs = Vec::new();
    for from in vs.all_keys() {
        for to in vs.all_keys() {
            let keep = subs
                .iter()
                .all(|pair| !(pair.contains(from) && !pair.contains(to)));
            if keep {
                pairs.push((from, to));
            }
        }
    }
    // deterministic order: by degree of the operator, then by source/target
    pairs.sort_by_key(|(f, t)| (t.deg - f.deg, f.deg, f.idx, t.idx));
    let mut degrees: BTreeMap<i32, Vec<String>> = BTreeMap::new();
    for (i, (f, t)) in pairs.iter().enumerate() {
        degrees.entry(t.deg - f.deg).or_default().push(format!("E{}", i));
    }
    let sub_names: Vec<String> = subs.iter().map(|p| p.name.clone()).collect();
    let name = if subs.is_empty() {
        format!("End({})", vs.name())
    } else {
        format!("End({};{})", vs.name(), sub_names.join(","))
    };
    let space = GradedVectorSpace::new(name.clone(), degrees)?;
    let mut key_of = HashMap::new();
    {
        // names are "E{i}" in insertion order per degree; recover key by scanning
        let mut by_deg: BTreeMap<i32, usize> = BTreeMap::new();
        for (i, (f, t)) in pairs.iter().enumerate() {
            let deg = t.deg - f.deg;
            let idx = by_deg.entry(deg).or_insert(0);
            key_of.insert((*f, *t), Key::new(deg, *idx));
            *idx += 1;
            let _ = i;
        }
    }
    let index_of_key: HashMap<Key, usize> = pairs
        .iter()
        .enumerate()
        .map(|(i, (f, t))| (key_of[&(*f, *t)], i))
        .collect();

    // differential: d(E_{p->q}) = sum over dq components minus Koszul times E o d
    let d = GradedMap::from_images(space.clone(), space.clone(), 1, |key| {
        let (p, q) = pairs[index_of_key[&key]];
        let mut out = Vector::zero();
        let dq = v.d.apply_key(q);
        for (u, c) in dq.iter() {
            if let Some(k) = key_of.get(&(p, *u)) {
                out.add_term(*k, c);
            }
        }
        let deg = q.deg - p.deg;
        let sign = -koszul_sign(deg, 1);
        for x in vs.all_keys() {
            let dx = v.d.apply_key(x);
            let cp = dx.coeff(p);
            if !cp.is_zero() {
                if let Some(k) = key_of.get(&(x, q)) {
                    out.add_term(*k, &(&cp * &sign));
                }
            }
        }
        out
    })?;
    let complex = CochainComplex::new(space.clone(), d)?;

    // brackets of elementary operators
    let compose = |outer: (Key, Key), inner: (Key, Key)| -> Option<(Key, Key)> {
        // (E_{p->q} o E_{r->s}) = delta_{s,p} E_{r->q}
        let (p, q) = outer;
        let (r, s) = inner;
        if s == p {
            Some((r, q))
        } else {
            None
        }
    };
    let mut table = BTreeMap::new();
    let all_keys = space.all_keys();
    for (i, &a) in all_keys.iter().enumerate() {
        for &b in all_keys.iter().skip(i) {
            let pa = pairs[index_of_key[&a]];
            let pb = pairs[index_of_key[&b]];
            let mut val = Vector::zero();
            if let Some(ab) = compose(pa, pb) {
                if let Some(k) = key_of.get(&ab) {
                    val.add_term(*k, &rat(1));
                }
            }
            if let Some(ba) = compose(pb, pa) {
                if let Some(k) = key_of.get(&ba) {
                    val.add_term(*k, &-koszul_sign(a.deg, b.deg));
                }
            }
            if !val.is_zero() {
                table.insert((a, b), val);
            }
        }
    }
    let dgla = DGLieAlgebra::new(name, complex, table);
    Ok(EndDgla { dgla, v: v.clone(), pairs, key_of })
}

/// Aff(V; F) = End(V; F) (+) F as a DG-Lie algebra; with no subcomplex,
/// Aff(V) = End(V) (+) V.
#[derive(Debug)]
pub struct AffDgla {
    pub dgla: Arc<DGLieAlgebra>,
    pub end: EndDgla,
    /// V-basis key -> Aff basis key for the translation part
    vec_key_of: HashMap<Key, Key>,
    /// End basis key -> Aff basis key
    end_key_of: HashMap<Key, Key>,
}

impl AffDgla {
    pub fn end_key(&self, k: Key) -> Key {
        self.end_key_of[&k]
    }

    pub fn vec_key(&self, k: Key) -> Option<Key> {
        self.vec_key_of.get(&k).copied()
    }

    /// Split an Aff element into its End part (in End basis keys) and its
    /// translation part (in V basis keys).
    pub fn split(&self, x: &Vector) -> (Vector, Vector) {
        let mut endpart = Vector::zero();
        let mut vecpart = Vector::zero();
        let rev_end: HashMap<Key, Key> =
            self.end_key_of.iter().map(|(a, b)| (*b, *a)).collect();
        let rev_vec: HashMap<Key, Key> =
            self.vec_key_of.iter().map(|(a, b)| (*b, *a)).collect();
        for (k, c) in x.iter() {
            if let Some(ek) = rev_end.get(k) {
                endpart.add_term(*ek, c);
            } else if let Some(vk) = rev_vec.get(k) {
                vecpart.add_term(*vk, c);
            }
        }
        (endpart, vecpart)
    }

    pub fn embed(&self, endpart: &Vector, vecpart: &Vector) -> Vector {
        let mut out = Vector::zero();
        for (k, c) in endpart.iter() {
            out.add_term(self.end_key_of[k], c);
        }
        for (k, c) in vecpart.iter() {
            out.add_term(self.vec_key_of[k], c);
        }
        out
    }
}

pub fn aff_algebra(v: &Arc<CochainComplex>, sub: Option<&DGPair>) -> Result<AffDgla> {
    let subs: Vec<&DGPair> = sub.into_iter().collect();
    let end = end_algebra(v, &subs)?;
    let vs = &v.space;
    let vec_keys: Vec<Key> = match sub {
        Some(pair) => vs.all_keys().into_iter().filter(|k| pair.contains(*k)).collect(),
        None => vs.all_keys(),
    };
    let end_space = end.dgla.space().clone();
    let mut degrees: BTreeMap<i32, Vec<String>> = BTreeMap::new();
    for k in end_space.all_keys() {
        degrees.entry(k.deg).or_default().push(format!("x.{}", end_space.basis_name(k)));
    }
    for k in &vec_keys {
        degrees.entry(k.deg).or_default().push(format!("w.{}", vs.basis_name(*k)));
    }
    let name = match sub {
        Some(pair) => format!("Aff({};{})", vs.name(), pair.name),
        None => format!("Aff({})", vs.name()),
    };
    let space = GradedVectorSpace::new(name.clone(), degrees)?;
    let mut end_key_of = HashMap::new();
    for k in end_space.all_keys() {
        let nk = space.lookup(&format!("x.{}", end_space.basis_name(k))).unwrap();
        end_key_of.insert(k, nk);
    }
    let mut vec_key_of = HashMap::new();
    for k in &vec_keys {
        let nk = space.lookup(&format!("w.{}", vs.basis_name(*k))).unwrap();
        vec_key_of.insert(*k, nk);
    }

    let lift_end = |x: &Vector| -> Vector {
        let mut out = Vector::zero();
        for (k, c) in x.iter() {
            out.add_term(end_key_of[k], c);
        }
        out
    };
    let lift_vec = |x: &Vector| -> Vector {
        let mut out = Vector::zero();
        for (k, c) in x.iter() {
            if let Some(nk) = vec_key_of.get(k) {
                out.add_term(*nk, c);
            }
        }
        out
    };

    let d = GradedMap::from_images(space.clone(), space.clone(), 1, |key| {
        let nm = space.basis_name(key);
        if let Some(base) = nm.strip_prefix("x.") {
            let ek = end_space.lookup(base).unwrap();
            lift_end(&end.dgla.complex.d.apply_key(ek))
        } else {
            let base = nm.strip_prefix("w.").unwrap();
            let vk = vs.lookup(base).unwrap();
            lift_vec(&v.d.apply_key(vk))
        }
    })?;
    let complex = CochainComplex::new(space.clone(), d)?;

    // bracket: [(xi,w),(eta,u)] = ([xi,eta], xi(u) - (-1)^{|eta||w|} eta(w))
    let mut table = BTreeMap::new();
    let all = space.all_keys();
    for (i, &a) in all.iter().enumerate() {
        for &b in all.iter().skip(i) {
            let na = space.basis_name(a).to_string();
            let nb = space.basis_name(b).to_string();
            let val = match (na.strip_prefix("x."), nb.strip_prefix("x.")) {
                (Some(ea), Some(eb)) => {
                    let ka = end_space.lookup(ea).unwrap();
                    let kb = end_space.lookup(eb).unwrap();
                    lift_end(&end.dgla.bracket_keys(ka, kb))
                }
                (Some(ea), None) => {
                    // [xi, w] = xi(w)
                    let ka = end_space.lookup(ea).unwrap();
                    let wv = vs.lookup(nb.strip_prefix("w.").unwrap()).unwrap();
                    lift_vec(&end.act(
                        &end_space.basis_vector(ka),
                        &vs.basis_vector(wv),
                    ))
                }
                (None, Some(eb)) => {
                    // [w, eta] = -(-1)^{|eta||w|} eta(w)
                    let kb = end_space.lookup(eb).unwrap();
                    let wv = vs.lookup(na.strip_prefix("w.").unwrap()).unwrap();
                    lift_vec(
                        &end
                            .act(&end_space.basis_vector(kb), &vs.basis_vector(wv))
                            .scale(&-koszul_sign(a.deg, b.deg)),
                    )
                }
                (None, None) => Vector::zero(),
            };
            if !val.is_zero() {
                table.insert((a, b), val);
            }
        }
    }
    let dgla = DGLieAlgebra::new(name, complex, table);
    Ok(AffDgla { dgla, end, vec_key_of, end_key_of })
}

/// Mapping cone of the identity: g (+) g[1] with d(bx) = x - b(dx),
/// [bx, y] = b[x,y], [bx, by] = 0.
#[derive(Debug)]
pub struct ConeAlgebra {
    pub dgla: Arc<DGLieAlgebra>,
    pub base: Arc<DGLieAlgebra>,
    base_key_of: HashMap<Key, Key>,
    flat_key_of: HashMap<Key, Key>,
}

impl ConeAlgebra {
    pub fn include_base(&self, x: &Vector) -> Vector {
        let mut out = Vector::zero();
        for (k, c) in x.iter() {
            out.add_term(self.base_key_of[k], c);
        }
        out
    }

    /// The tautological degree -1 map: flat of a base element.
    pub fn flat(&self, x: &Vector) -> Vector {
        let mut out = Vector::zero();
        for (k, c) in x.iter() {
            out.add_term(self.flat_key_of[k], c);
        }
        out
    }

    /// Split a cone element into (base part, flat part), both expressed in
    /// the base algebra.
    pub fn split(&self, x: &Vector) -> (Vector, Vector) {
        let rev_base: HashMap<Key, Key> =
            self.base_key_of.iter().map(|(a, b)| (*b, *a)).collect();
        let rev_flat: HashMap<Key, Key> =
            self.flat_key_of.iter().map(|(a, b)| (*b, *a)).collect();
        let mut base = Vector::zero();
        let mut flat = Vector::zero();
        for (k, c) in x.iter() {
            if let Some(bk) = rev_base.get(k) {
                base.add_term(*bk, c);
            } else {
                flat.add_term(rev_flat[k], c);
            }
        }
        (base, flat)
    }

    /// The three defining relations, on all basis elements, plus acyclicity.
    pub fn check(&self) -> CheckList {
        let mut checks = CheckList::new();
        let base_space = self.base.space();
        let mut witness = None;
        for k in base_space.all_keys() {
            let x = base_space.basis_vector(k);
            let lhs = self.dgla.d(&self.flat(&x));
            let rhs = self.include_base(&x).sub(&self.flat(&self.base.d(&x)));
            if lhs != rhs {
                witness = Some(format!("d(flat {}) != x - flat(dx)", base_space.basis_name(k)));
                break;
            }
        }
        checks.record("cone: d(flat x) = x - flat dx", witness.is_none(), witness.unwrap_or_default());

        let mut w1 = None;
        let mut w2 = None;
        'outer: for a in base_space.all_keys() {
            for b in base_space.all_keys() {
                let xa = base_space.basis_vector(a);
                let xb = base_space.basis_vector(b);
                let lhs = self
                    .dgla
                    .bracket(&self.flat(&xa), &self.include_base(&xb));
                let rhs = self.flat(&self.base.bracket(&xa, &xb));
                if lhs != rhs && w1.is_none() {
                    w1 = Some(format!(
                        "[flat {}, {}] != flat[x,y]",
                        base_space.basis_name(a),
                        base_space.basis_name(b)
                    ));
                }
                let ff = self.dgla.bracket(&self.flat(&xa), &self.flat(&xb));
                if !ff.is_zero() && w2.is_none() {
                    w2 = Some(format!(
                        "[flat {}, flat {}] != 0",
                        base_space.basis_name(a),
                        base_space.basis_name(b)
                    ));
                }
                if w1.is_some() && w2.is_some() {
                    break 'outer;
                }
            }
        }
        checks.record("cone: [flat x, y] = flat [x,y]", w1.is_none(), w1.unwrap_or_default());
        checks.record("cone: [flat x, flat y] = 0", w2.is_none(), w2.unwrap_or_default());

        let acyclic = self.dgla.complex.cohomology().total_dim() == 0;
        checks.record("cone: acyclic", acyclic, "cone of the identity has nonzero cohomology");
        checks
    }
}

pub fn cone_id(base: &Arc<DGLieAlgebra>) -> Result<ConeAlgebra> {
    let bs = base.space();
    let mut degrees: BTreeMap<i32, Vec<String>> = BTreeMap::new();
    for k in bs.all_keys() {
        degrees.entry(k.deg).or_default().push(format!("c.{}", bs.basis_name(k)));
    }
    for k in bs.all_keys() {
        degrees.entry(k.deg - 1).or_default().push(format!("flat.{}", bs.basis_name(k)));
    }
    let name = format!("cone(Id_{})", base.name());
    let space = GradedVectorSpace::new(name.clone(), degrees)?;
    let mut base_key_of = HashMap::new();
    let mut flat_key_of = HashMap::new();
    for k in bs.all_keys() {
        base_key_of.insert(k, space.lookup(&format!("c.{}", bs.basis_name(k))).unwrap());
        flat_key_of.insert(k, space.lookup(&format!("flat.{}", bs.basis_name(k))).unwrap());
    }
    let lift = |x: &Vector, table: &HashMap<Key, Key>| -> Vector {
        let mut out = Vector::zero();
        for (k, c) in x.iter() {
            out.add_term(table[k], c);
        }
        out
    };
    let d = GradedMap::from_images(space.clone(), space.clone(), 1, |key| {
        let nm = space.basis_name(key);
        if let Some(bn) = nm.strip_prefix("c.") {
            let bk = bs.lookup(bn).unwrap();
            lift(&base.complex.d.apply_key(bk), &base_key_of)
        } else {
            let bn = nm.strip_prefix("flat.").unwrap();
            let bk = bs.lookup(bn).unwrap();
            let x = bs.basis_vector(bk);
            lift(&x, &base_key_of).sub(&lift(&base.d(&x), &flat_key_of))
        }
    })?;
    let complex = CochainComplex::new(space.clone(), d)?;

    // bracket on basis: decompose each key as base or flat
    let part = |key: Key| -> (bool, Key) {
        let nm = space.basis_name(key);
        if let Some(bn) = nm.strip_prefix("c.") {
            (false, bs.lookup(bn).unwrap())
        } else {
            (true, bs.lookup(nm.strip_prefix("flat.").unwrap()).unwrap())
        }
    };
    let mut table = BTreeMap::new();
    let all = space.all_keys();
    for (i, &a) in all.iter().enumerate() {
        for &b in all.iter().skip(i) {
            let (fa, ka) = part(a);
            let (fb, kb) = part(b);
            let val = match (fa, fb) {
                (false, false) => lift(&base.bracket_keys(ka, kb), &base_key_of),
                (true, false) => lift(&base.bracket_keys(ka, kb), &flat_key_of),
                (false, true) => {
                    // [y, flat x] = -(-1)^{|y|(|x|-1)} flat [x, y]
                    let sign = -koszul_sign(a.deg, b.deg);
                    lift(&base.bracket_keys(kb, ka), &flat_key_of).scale(&sign)
                }
                (true, true) => Vector::zero(),
            };
            if !val.is_zero() {
                table.insert((a, b), val);
            }
        }
    }
    let dgla = DGLieAlgebra::new(name, complex, table);
    Ok(ConeAlgebra { dgla, base: base.clone(), base_key_of, flat_key_of })
}

/// The section sigma_v : End*(V) -> Aff(V), xi -> (xi, -xi(v)) attached to a
/// closed degree 0 vector v.
pub fn sigma_v(end: &EndDgla, aff: &AffDgla, v: &Vector) -> Result<DGLAMorphism> {
    if !v.is_zero() {
        if v.degree() != Some(0) {
            return Err(Error::invalid("sigma_v needs a degree 0 vector"));
        }
        if !end.v.d.apply(v).is_zero() {
            return Err(Error::invalid("sigma_v needs a closed vector"));
        }
    }
    let end_space = end.dgla.space().clone();
    let map = GradedMap::from_images(
        end_space.clone(),
        aff.dgla.space().clone(),
        0,
        |key| {
            let xi = end_space.basis_vector(key);
            let translation = end.act(&xi, v).neg();
            // the target Aff's own End part may be smaller; go through names
            let mut endpart = Vector::zero();
            for (k, c) in xi.iter() {
                let nm = end_space.basis_name(*k);
                let tk = aff
                    .end
                    .dgla
                    .space()
                    .lookup(nm)
                    .expect("sigma_v: End basis name missing in target");
                endpart.add_term(tk, c);
            }
            aff.embed(&endpart, &translation)
        },
    )?;
    Ok(DGLAMorphism::new("sigma_v", end.dgla.clone(), aff.dgla.clone(), map))
}

/// Sub-DGLA spanned by the given vectors: checks closure under d and
/// bracket, returns the algebra on a canonical basis plus the inclusion.
pub fn sub_dgla(
    parent: &Arc<DGLieAlgebra>,
    vectors: &[Vector],
    name: impl Into<String>,
) -> Result<(Arc<DGLieAlgebra>, DGLAMorphism)> {
    let name = name.into();
    let ps = parent.space();
    // canonical homogeneous spanning set per degree
    let mut by_degree: BTreeMap<i32, Vec<Vec<Rat>>> = BTreeMap::new();
    for v in vectors {
        for deg in v.degrees_present() {
            let part = v.homogeneous_part(deg);
            by_degree.entry(deg).or_default().push(part.to_dense(ps, deg));
        }
    }
    let mut basis: BTreeMap<i32, Vec<Vector>> = BTreeMap::new();
    for (deg, vecs) in by_degree {
        let canon = span_canonical(&vecs, ps.dim(deg));
        let mut list = Vec::new();
        for r in 0..canon.rows {
            list.push(Vector::from_dense(deg, canon.row(r)));
        }
        if !list.is_empty() {
            basis.insert(deg, list);
        }
    }
    let mut degrees: BTreeMap<i32, Vec<String>> = BTreeMap::new();
    for (deg, list) in &basis {
        for i in 0..list.len() {
            degrees.entry(*deg).or_default().push(format!("s{}_{}", deg, i));
        }
    }
    let space = GradedVectorSpace::new(name.clone(), degrees)?;

    let express = |v: &Vector| -> Result<Vector> {
        // write v in the sub-basis
        let mut out = Vector::zero();
        for deg in v.degrees_present() {
            let part = v.homogeneous_part(deg).to_dense(ps, deg);
            let Some(list) = basis.get(&deg) else {
                return Err(Error::check(
                    &name,
                    "not closed: a generated element leaves the span".to_string(),
                ));
            };
            let mut m = Mat::zeros(ps.dim(deg), list.len());
            for (j, b) in list.iter().enumerate() {
                let dense = b.to_dense(ps, deg);
                for i in 0..ps.dim(deg) {
                    m[(i, j)] = dense[i].clone();
                }
            }
            let sol = m
                .solve(&part)
                .ok_or_else(|| Error::check(&name, "not closed under d/bracket"))?;
            for (j, c) in sol.iter().enumerate() {
                if !c.is_zero() {
                    out.add_term(Key::new(deg, j), c);
                }
            }
        }
        Ok(out)
    };

    let mut d_images = BTreeMap::new();
    let mut incl_images = BTreeMap::new();
    for (deg, list) in &basis {
        for (i, b) in list.iter().enumerate() {
            let key = Key::new(*deg, i);
            incl_images.insert(key, b.clone());
            d_images.insert(key, express(&parent.d(b))?);
        }
    }
    let d = GradedMap::from_images(space.clone(), space.clone(), 1, |k| {
        d_images.get(&k).cloned().unwrap_or_default()
    })?;
    let complex = CochainComplex::new(space.clone(), d)?;
    let mut table = BTreeMap::new();
    let all = space.all_keys();
    for (i, &a) in all.iter().enumerate() {
        for &b in all.iter().skip(i) {
            let va = &incl_images[&a];
            let vb = &incl_images[&b];
            let val = express(&parent.bracket(va, vb))?;
            if !val.is_zero() {
                table.insert((a, b), val);
            }
        }
    }
    let sub = DGLieAlgebra::new(name.clone(), complex, table);
    let incl = GradedMap::from_images(space.clone(), ps.clone(), 0, |k| {
        incl_images.get(&k).cloned().unwrap_or_default()
    })?;
    let morphism = DGLAMorphism::new(format!("{}->{}", name, parent.name()), sub.clone(), parent.clone(), incl);
    Ok((sub, morphism))
}

/// Direct product of two DG-Lie algebras, with projections.
pub fn product_dgla(
    left: &Arc<DGLieAlgebra>,
    right: &Arc<DGLieAlgebra>,
) -> Result<(Arc<DGLieAlgebra>, DGLAMorphism, DGLAMorphism)> {
    let ls = left.space();
    let rs = right.space();
    let mut degrees: BTreeMap<i32, Vec<String>> = BTreeMap::new();
    for k in ls.all_keys() {
        degrees.entry(k.deg).or_default().push(format!("L.{}", ls.basis_name(k)));
    }
    for k in rs.all_keys() {
        degrees.entry(k.deg).or_default().push(format!("R.{}", rs.basis_name(k)));
    }
    let name = format!("{}x{}", left.name(), right.name());
    let space = GradedVectorSpace::new(name.clone(), degrees)?;
    let lift = |v: &Vector, prefix: &str, src: &GradedVectorSpace| -> Vector {
        let mut out = Vector::zero();
        for (k, c) in v.iter() {
            out.add_term(space.lookup(&format!("{}.{}", prefix, src.basis_name(*k))).unwrap(), c);
        }
        out
    };
    let split = |key: Key| -> (bool, Key) {
        let nm = space.basis_name(key);
        if let Some(base) = nm.strip_prefix("L.") {
            (true, ls.lookup(base).unwrap())
        } else {
            (false, rs.lookup(nm.strip_prefix("R.").unwrap()).unwrap())
        }
    };
    let d = GradedMap::from_images(space.clone(), space.clone(), 1, |key| {
        let (is_left, k) = split(key);
        if is_left {
            lift(&left.complex.d.apply_key(k), "L", ls)
        } else {
            lift(&right.complex.d.apply_key(k), "R", rs)
        }
    })?;
    let complex = CochainComplex::new(space.clone(), d)?;
    let mut table = BTreeMap::new();
    let all = space.all_keys();
    for (i, &a) in all.iter().enumerate() {
        for &b in all.iter().skip(i) {
            let (la, ka) = split(a);
            let (lb, kb) = split(b);
            if la != lb {
                continue;
            }
            let val = if la {
                lift(&left.bracket_keys(ka, kb), "L", ls)
            } else {
                lift(&right.bracket_keys(ka, kb), "R", rs)
            };
            if !val.is_zero() {
                table.insert((a, b), val);
            }
        }
    }
    let prod = DGLieAlgebra::new(name, complex, table);
    let pl = GradedMap::from_images(space.clone(), ls.clone(), 0, |key| {
        let (is_left, k) = split(key);
        if is_left {
            ls.basis_vector(k)
        } else {
            Vector::zero()
        }
    })?;
    let pr = GradedMap::from_images(space.clone(), rs.clone(), 0, |key| {
        let (is_left, k) = split(key);
        if is_left {
            Vector::zero()
        } else {
            rs.basis_vector(k)
        }
    })?;
    let proj_l = DGLAMorphism::new("pr_left", prod.clone(), left.clone(), pl);
    let proj_r = DGLAMorphism::new("pr_right", prod.clone(), right.clone(), pr);
    Ok((prod, proj_l, proj_r))
}

/// Fiber product g x_h l of two morphisms with common target, as a sub-DGLA
/// of the product, with the two projections.
pub fn fiber_product(
    f: &DGLAMorphism,
    g: &DGLAMorphism,
) -> Result<(Arc<DGLieAlgebra>, DGLAMorphism, DGLAMorphism)> {
    if !Arc::ptr_eq(&f.target, &g.target) {
        return Err(Error::invalid("fiber product needs a common target"));
    }
    let (prod, proj_l, proj_r) = product_dgla(&f.source, &g.source)?;
    // solve f(x) - g(y) = 0 degreewise
    let ps = prod.space();
    let ts = f.target.space();
    let mut members = Vec::new();
    for deg in ps.degrees().collect::<Vec<_>>() {
        let n = ps.dim(deg);
        let rows = ts.dim(deg);
        let mut m = Mat::zeros(rows.max(1), n);
        for (j, key) in ps.keys_of_degree(deg).into_iter().enumerate() {
            let x = proj_l.apply(&ps.basis_vector(key));
            let y = proj_r.apply(&ps.basis_vector(key));
            let val = f.apply(&x).sub(&g.apply(&y));
            let dense = val.to_dense(ts, deg);
            for i in 0..rows {
                m[(i, j)] = dense[i].clone();
            }
        }
        for sol in m.kernel_basis() {
            members.push(Vector::from_dense(deg, &sol));
        }
    }
    let (fp, incl) = sub_dgla(&prod, &members, format!("{}x_{}{}", f.source.name(), f.target.name(), g.source.name()))?;
    let to_left = proj_l.compose(&incl);
    let to_right = proj_r.compose(&incl);
    Ok((fp, to_left, to_right))
}

/// Kernel of a morphism as a sub-DGLA of the source.
pub fn kernel_dgla(f: &DGLAMorphism) -> Result<(Arc<DGLieAlgebra>, DGLAMorphism)> {
    let ss = f.source.space();
    let ts = f.target.space();
    let mut members = Vec::new();
    for deg in ss.degrees().collect::<Vec<_>>() {
        let n = ss.dim(deg);
        let rows = ts.dim(deg);
        let mut m = Mat::zeros(rows.max(1), n);
        for (j, key) in ss.keys_of_degree(deg).into_iter().enumerate() {
            let dense = f.apply(&ss.basis_vector(key)).to_dense(ts, deg);
            for i in 0..rows {
                m[(i, j)] = dense[i].clone();
            }
        }
        for sol in m.kernel_basis() {
            members.push(Vector::from_dense(deg, &sol));
        }
    }
    sub_dgla(&f.source, &members, format!("ker({})", f.name))
}

/// Inclusion morphism between End-type algebras built on the same complex,
/// matched by operator shape.
pub fn end_inclusion(smaller: &EndDgla, larger: &EndDgla) -> Result<DGLAMorphism> {
    let map = GradedMap::from_images(
        smaller.dgla.space().clone(),
        larger.dgla.space().clone(),
        0,
        |key| {
            let (from, to) = smaller.parts(key);
            let k = larger.key(from, to).expect("inclusion target misses an operator");
            larger.dgla.space().basis_vector(k)
        },
    )?;
    Ok(DGLAMorphism::new(
        format!("{}->{}", smaller.dgla.name(), larger.dgla.name()),
        smaller.dgla.clone(),
        larger.dgla.clone(),
        map,
    ))
}

/// Inclusion Aff(V;F) -> Aff(V), matching End parts by shape and vector
/// parts by name.
pub fn aff_inclusion(smaller: &AffDgla, larger: &AffDgla) -> Result<DGLAMorphism> {
    let ss = smaller.dgla.space().clone();
    let map = GradedMap::from_images(ss.clone(), larger.dgla.space().clone(), 0, |key| {
        let (endpart, vecpart) = smaller.split(&ss.basis_vector(key));
        let mut end_in_larger = Vector::zero();
        for (k, c) in endpart.iter() {
            let (from, to) = smaller.end.parts(*k);
            let lk = larger.end.key(from, to).expect("aff inclusion misses an operator");
            end_in_larger.add_term(lk, c);
        }
        larger.embed(&end_in_larger, &vecpart)
    })?;
    Ok(DGLAMorphism::new(
        format!("{}->{}", smaller.dgla.name(), larger.dgla.name()),
        smaller.dgla.clone(),
        larger.dgla.clone(),
        map,
    ))
}

/// Projection Aff(V) -> End(V), (xi, w) -> xi.
pub fn aff_projection(aff: &AffDgla, end: &EndDgla) -> Result<DGLAMorphism> {
    let ss = aff.dgla.space().clone();
    let map = GradedMap::from_images(ss.clone(), end.dgla.space().clone(), 0, |key| {
        let (endpart, _) = aff.split(&ss.basis_vector(key));
        let mut out = Vector::zero();
        for (k, c) in endpart.iter() {
            let (from, to) = aff.end.parts(*k);
            out.add_term(end.key(from, to).expect("projection misses an operator"), c);
        }
        out
    })?;
    Ok(DGLAMorphism::new(
        format!("{}->{}", aff.dgla.name(), end.dgla.name()),
        aff.dgla.clone(),
        end.dgla.clone(),
        map,
    ))
}

/// Check that an End-element's operator lies in End(V; F): every elementary
/// component must map F into F.
pub fn end_elem_preserves(end: &EndDgla, pair: &DGPair, xi: &Vector) -> bool {
    for (k, _) in xi.iter() {
        let (from, to) = end.parts(*k);
        if pair.contains(from) && !pair.contains(to) {
            return false;
        }
    }
    true
}

/// Membership of a parent-space vector in the span of a sub-DGLA image.
pub fn in_image_span(morphism: &DGLAMorphism, v: &Vector) -> bool {
    let ts = morphism.target.space();
    for deg in v.degrees_present() {
        let dense = v.homogeneous_part(deg).to_dense(ts, deg);
        let images: Vec<Vec<Rat>> = morphism
            .source
            .space()
            .keys_of_degree(deg)
            .into_iter()
            .map(|k| morphism.apply(&morphism.source.space().basis_vector(k)).to_dense(ts, deg))
            .collect();
        if !in_span(&images, &dense) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    pub fn space(name: &str, degs: &[(i32, &[&str])]) -> Arc<GradedVectorSpace> {
        let mut m = BTreeMap::new();
        for (d, names) in degs {
            m.insert(*d, names.iter().map(|s| s.to_string()).collect());
        }
        GradedVectorSpace::new(name, m).unwrap()
    }

    pub fn p1_pair() -> DGPair {
        let v = space("V", &[(0, &["e0", "f0"]), (1, &["e1"])]);
        let c = CochainComplex::zero_differential(v.clone());
        let sub: BTreeSet<Key> =
            [v.lookup("e0").unwrap(), v.lookup("e1").unwrap()].into_iter().collect();
        DGPair::new(c, sub, "F").unwrap()
    }

    pub fn sl2() -> Arc<DGLieAlgebra> {
        let s = space("sl2", &[(0, &["h", "x", "y"])]);
        let c = CochainComplex::zero_differential(s.clone());
        let h = s.lookup("h").unwrap();
        let x = s.lookup("x").unwrap();
        let y = s.lookup("y").unwrap();
        let mut table = BTreeMap::new();
        let mut v = Vector::zero();
        v.set(x, rat(2));
        table.insert((h, x), v);
        let mut v = Vector::zero();
        v.set(y, rat(-2));
        table.insert((h, y), v);
        let mut v = Vector::zero();
        v.set(h, rat(1));
        table.insert((x, y), v);
        DGLieAlgebra::new("sl2", c, table)
    }

    #[test]
    fn sl2_passes_axioms() {
        assert!(sl2().check().ok());
    }

    #[test]
    fn abelian_passes() {
        let v = space("V", &[(0, &["a"]), (1, &["b"])]);
        let g = DGLieAlgebra::abelian("ab", CochainComplex::zero_differential(v));
        assert!(g.check().ok());
    }

    #[test]
    fn broken_antisymmetry_detected() {
        let s = space("g", &[(0, &["x", "y"])]);
        let c = CochainComplex::zero_differential(s.clone());
        let x = s.lookup("x").unwrap();
        let y = s.lookup("y").unwrap();
        let mut table = BTreeMap::new();
        let mut v = Vector::zero();
        v.set(x, rat(1));
        table.insert((x, y), v.clone());
        table.insert((y, x), v);
        let g = DGLieAlgebra::new("bad", c, table);
        let checks = g.check();
        assert!(!checks.ok());
        assert!(checks.items.iter().any(|c| c.name == "graded antisymmetry" && !c.passed));
    }

    #[test]
    fn end_dimensions_and_axioms() {
        let pair = p1_pair();
        let end = end_algebra(&pair.complex, &[]).unwrap();
        // dims 2,1 in degrees 0,1: End^0 = 4+1, End^1 = 2, End^-1 = 2
        assert_eq!(end.dgla.space().dim(0), 5);
        assert_eq!(end.dgla.space().dim(1), 2);
        assert_eq!(end.dgla.space().dim(-1), 2);
        assert!(end.dgla.check().ok());

        let endf = end_algebra(&pair.complex, &[&pair]).unwrap();
        // e0->f0 excluded, f0->e0 kept, e1->f0 excluded
        assert_eq!(endf.dgla.space().dim(0), 4);
        assert!(endf.dgla.check().ok());
        let incl = end_inclusion(&endf, &end).unwrap();
        assert!(incl.check().ok());
    }

    #[test]
    fn one_dimensional_end_is_abelian_line() {
        let v = space("K", &[(0, &["u"])]);
        let c = CochainComplex::zero_differential(v);
        let end = end_algebra(&c, &[]).unwrap();
        assert_eq!(end.dgla.space().total_dim(), 1);
        assert!(end.dgla.check().ok());
        let k = end.dgla.space().all_keys()[0];
        assert!(end.dgla.bracket_keys(k, k).is_zero());
    }

    #[test]
    fn end_with_differential_satisfies_axioms() {
        // da1 = b1 (P2-shaped)
        let v = space("W", &[(0, &["a1", "a2"]), (1, &["b1", "b2"])]);
        let d = GradedMap::from_images(v.clone(), v.clone(), 1, |k| {
            let mut out = Vector::zero();
            if k == v.lookup("a1").unwrap() {
                out.set(v.lookup("b1").unwrap(), rat(1));
            }
            out
        })
        .unwrap();
        let c = CochainComplex::new(v, d).unwrap();
        let end = end_algebra(&c, &[]).unwrap();
        assert!(end.dgla.check().ok());
    }

    #[test]
    fn aff_bracket_formula() {
        let pair = p1_pair();
        let aff = aff_algebra(&pair.complex, None).unwrap();
        assert!(aff.dgla.check().ok());
        let vs = &pair.complex.space;
        let e0 = vs.lookup("e0").unwrap();
        let f0 = vs.lookup("f0").unwrap();
        // translations commute
        let w1 = aff.embed(&Vector::zero(), &vs.basis_vector(e0));
        let w2 = aff.embed(&Vector::zero(), &vs.basis_vector(f0));
        assert!(aff.dgla.bracket(&w1, &w2).is_zero());
        // [(xi,0),(0,u)] = (0, xi(u))
        let ek = aff.end.key(e0, f0).unwrap();
        let xi = aff.embed(&aff.end.dgla.space().basis_vector(ek), &Vector::zero());
        let got = aff.dgla.bracket(&xi, &w1);
        let (ep, vp) = aff.split(&got);
        assert!(ep.is_zero());
        assert_eq!(vp.coeff(f0), rat(1));
    }

    #[test]
    fn aff_matches_block_matrix_model() {
        // compare Aff bracket with commutators in End(V (+) K)
        let v = space("V", &[(0, &["e0", "f0"]), (1, &["e1"])]);
        let d = GradedMap::from_images(v.clone(), v.clone(), 1, |k| {
            let mut out = Vector::zero();
            if k == v.lookup("e0").unwrap() {
                out.set(v.lookup("e1").unwrap(), rat(1));
            }
            out
        })
        .unwrap();
        let c = CochainComplex::new(v.clone(), d).unwrap();
        let aff = aff_algebra(&c, None).unwrap();
        assert!(aff.dgla.check().ok());

        let vk = space("VK", &[(0, &["e0", "f0", "one"]), (1, &["e1"])]);
        let dk = GradedMap::from_images(vk.clone(), vk.clone(), 1, |k| {
            let mut out = Vector::zero();
            if k == vk.lookup("e0").unwrap() {
                out.set(vk.lookup("e1").unwrap(), rat(1));
            }
            out
        })
        .unwrap();
        let ck = CochainComplex::new(vk.clone(), dk).unwrap();
        let big = end_algebra(&ck, &[]).unwrap();

        // embed Aff elements as block matrices [[xi, w],[0,0]]
        let embed = |x: &Vector| -> Vector {
            let (ep, vp) = aff.split(x);
            let mut out = Vector::zero();
            for (k, cx) in ep.iter() {
                let (from, to) = aff.end.parts(*k);
                let from_k = vk.lookup(v.basis_name(from)).unwrap();
                let to_k = vk.lookup(v.basis_name(to)).unwrap();
                out.add_term(big.key(from_k, to_k).unwrap(), cx);
            }
            let one = vk.lookup("one").unwrap();
            for (k, cx) in vp.iter() {
                let to_k = vk.lookup(v.basis_name(*k)).unwrap();
                out.add_term(big.key(one, to_k).unwrap(), cx);
            }
            out
        };

        let keys = aff.dgla.space().all_keys();
        for &a in &keys {
            for &b in &keys {
                let lhs = embed(&aff.dgla.bracket_keys(a, b));
                let rhs = big.dgla.bracket(
                    &embed(&aff.dgla.space().basis_vector(a)),
                    &embed(&aff.dgla.space().basis_vector(b)),
                );
                assert_eq!(lhs, rhs, "block-matrix model disagrees");
            }
        }
    }

    #[test]
    fn cone_relations_and_acyclicity() {
        let g = sl2();
        let cone = cone_id(&g).unwrap();
        assert!(cone.check().ok());
        assert!(cone.dgla.check().ok());

        // one-dimensional abelian example: d(flat x) = x, H = 0
        let s = space("a", &[(0, &["u"])]);
        let ab = DGLieAlgebra::abelian("a", CochainComplex::zero_differential(s.clone()));
        let cone = cone_id(&ab).unwrap();
        assert!(cone.check().ok());
        let u = s.basis_vector(s.lookup("u").unwrap());
        let dfu = cone.dgla.d(&cone.flat(&u));
        assert_eq!(dfu, cone.include_base(&u));
    }

    #[test]
    fn sigma_v_section_property() {
        let pair = p1_pair();
        let end = end_algebra(&pair.complex, &[]).unwrap();
        let aff = aff_algebra(&pair.complex, None).unwrap();
        let vs = &pair.complex.space;
        let e0 = vs.basis_vector(vs.lookup("e0").unwrap());

        let sigma0 = sigma_v(&end, &aff, &Vector::zero()).unwrap();
        assert!(sigma0.check().ok());
        let sigma = sigma_v(&end, &aff, &e0).unwrap();
        assert!(sigma.check().ok());

        let proj = aff_projection(&aff, &end).unwrap();
        assert!(proj.check().ok());
        for k in end.dgla.space().all_keys() {
            let x = end.dgla.space().basis_vector(k);
            assert_eq!(proj.apply(&sigma.apply(&x)), x);
        }

        // sigma_{e0} of the elementary e0 -> f0 is (xi, -f0)
        let f0 = vs.lookup("f0").unwrap();
        let ek = end.key(vs.lookup("e0").unwrap(), f0).unwrap();
        let img = sigma.apply(&end.dgla.space().basis_vector(ek));
        let (_, vp) = aff.split(&img);
        assert_eq!(vp.coeff(f0), rat(-1));
    }

    #[test]
    fn fiber_product_over_zero_is_product() {
        let g = sl2();
        let v = space("b", &[(0, &["u"])]);
        let ab = DGLieAlgebra::abelian("b", CochainComplex::zero_differential(v));
        let zero_space = space("z", &[]);
        let zero = DGLieAlgebra::abelian("0", CochainComplex::zero_differential(zero_space));
        let f = DGLAMorphism::new(
            "g->0",
            g.clone(),
            zero.clone(),
            GradedMap::zero(g.space().clone(), zero.space().clone(), 0),
        );
        let h = DGLAMorphism::new(
            "b->0",
            ab.clone(),
            zero.clone(),
            GradedMap::zero(ab.space().clone(), zero.space().clone(), 0),
        );
        let (fp, _, _) = fiber_product(&f, &h).unwrap();
        assert_eq!(fp.space().total_dim(), 4);
        assert!(fp.check().ok());
    }

    #[test]
    fn kernel_of_identity_is_zero() {
        let g = sl2();
        let id = DGLAMorphism::new("id", g.clone(), g.clone(), GradedMap::identity(g.space().clone()));
        let (k, _) = kernel_dgla(&id).unwrap();
        assert_eq!(k.space().total_dim(), 0);
    }

    #[test]
    fn kernel_matches_end_preserving() {
        // ker(End(V) -> Hom(F, V/F)) = End(V;F)
        let pair = p1_pair();
        let end = end_algebra(&pair.complex, &[]).unwrap();
        let endf = end_algebra(&pair.complex, &[&pair]).unwrap();
        let vs = &pair.complex.space;
        // target complex Hom(F, V/F) modeled as an abelian DGLA on pairs
        let mut degrees: BTreeMap<i32, Vec<String>> = BTreeMap::new();
        let fkeys: Vec<Key> = vs.all_keys().into_iter().filter(|k| pair.contains(*k)).collect();
        let qkeys: Vec<Key> = vs.all_keys().into_iter().filter(|k| !pair.contains(*k)).collect();
        for f in &fkeys {
            for q in &qkeys {
                degrees
                    .entry(q.deg - f.deg)
                    .or_default()
                    .push(format!("h.{}.{}", vs.basis_name(*f), vs.basis_name(*q)));
            }
        }
        let hs = GradedVectorSpace::new("Hom(F,V/F)", degrees).unwrap();
        let hom = DGLieAlgebra::abelian("Hom", CochainComplex::zero_differential(hs.clone()));
        let restrict = GradedMap::from_images(
            end.dgla.space().clone(),
            hs.clone(),
            0,
            |key| {
                let (from, to) = end.parts(key);
                if pair.contains(from) && !pair.contains(to) {
                    let name = format!("h.{}.{}", vs.basis_name(from), vs.basis_name(to));
                    hs.basis_vector(hs.lookup(&name).unwrap())
                } else {
                    Vector::zero()
                }
            },
        )
        .unwrap();
        let f = DGLAMorphism::new("restr", end.dgla.clone(), hom, restrict);
        let (ker, incl) = kernel_dgla(&f).unwrap();
        assert_eq!(ker.space().total_dim(), endf.dgla.space().total_dim());
        for deg in ker.space().degrees().collect::<Vec<_>>() {
            assert_eq!(ker.space().dim(deg), endf.dgla.space().dim(deg));
        }
        // spans agree inside End(V)
        for k in ker.space().all_keys() {
            let img = incl.apply(&ker.space().basis_vector(k));
            assert!(end_elem_preserves(&end, &pair, &img));
        }
    }
}
