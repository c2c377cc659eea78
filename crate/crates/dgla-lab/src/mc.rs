//! Maurer-Cartan theory with coefficients in the maximal ideal of a local
//! Artin algebra: the gauge action, group law via the Dynkin
//! Baker-Campbell-Hausdorff series, Maurer-Cartan pairs for a morphism, and
//! order-by-order lifting probes with exact obstruction classes.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;

use crate::artin::ArtinAlgebra;
use crate::complex::DGPair;
use crate::dgla::{DGLAMorphism, DGLieAlgebra};
use crate::error::{Error, Result};
use crate::forms::artin_mul_idx;
use crate::graded::{Key, Vector};
use crate::linalg::Mat;
use crate::scalar::{factorial, rat, Rat};

/// Element of g (x) A, sparse over pairs (basis key of g, Artin index).
/// Artin index 0 is the unit of A; index i >= 1 is the (i-1)-th basis
/// element of m_A. Elements used in Maurer-Cartan theory live in g (x) m_A
/// and carry no unit component.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NilElem {
    terms: BTreeMap<(Key, usize), Rat>,
}

impl NilElem {
    pub fn zero() -> Self {
        NilElem::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(key: Key, artin_idx: usize, coeff: Rat) -> Self {
        let mut out = NilElem::zero();
        out.add_term(key, artin_idx, &coeff);
        out
    }

    pub fn from_vector(v: &Vector, artin_idx: usize) -> Self {
        let mut out = NilElem::zero();
        for (k, c) in v.iter() {
            out.add_term(*k, artin_idx, c);
        }
        out
    }

    pub fn add_term(&mut self, key: Key, artin_idx: usize, coeff: &Rat) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry((key, artin_idx)).or_insert_with(Rat::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&(key, artin_idx));
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Key, usize), &Rat)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &NilElem) -> NilElem {
        let mut out = self.clone();
        for ((k, a), c) in other.iter() {
            out.add_term(*k, *a, c);
        }
        out
    }

    pub fn sub(&self, other: &NilElem) -> NilElem {
        self.add(&other.scale(&rat(-1)))
    }

    pub fn scale(&self, c: &Rat) -> NilElem {
        let mut out = NilElem::zero();
        if c.is_zero() {
            return out;
        }
        for ((k, a), v) in self.iter() {
            out.terms.insert((*k, *a), c * v);
        }
        out
    }

    pub fn neg(&self) -> NilElem {
        self.scale(&rat(-1))
    }

    pub fn degree(&self) -> Option<i32> {
        let mut degs = self.terms.keys().map(|(k, _)| k.deg);
        let first = degs.next()?;
        if degs.all(|d| d == first) {
            Some(first)
        } else {
            None
        }
    }

    pub fn has_unit_part(&self) -> bool {
        self.terms.keys().any(|(_, a)| *a == 0)
    }

    /// Coefficient of a given Artin basis index as a plain vector.
    pub fn artin_coefficient(&self, artin_idx: usize) -> Vector {
        let mut out = Vector::zero();
        for ((k, a), c) in self.iter() {
            if *a == artin_idx {
                out.set(*k, c.clone());
            }
        }
        out
    }

    pub fn artin_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.terms.keys().map(|(_, a)| *a).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Apply a linear coefficient map key -> Vector (A-linearly).
    pub fn map_coefficients(&self, mut f: impl FnMut(Key) -> Vector) -> NilElem {
        let mut out = NilElem::zero();
        for ((k, a), c) in self.iter() {
            for (k2, v) in f(*k).iter() {
                out.add_term(*k2, *a, &(c * v));
            }
        }
        out
    }

    pub fn describe(&self, dgla: &DGLieAlgebra, artin: &ArtinAlgebra) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for ((k, a), c) in self.iter() {
            let base = dgla.space().basis_name(*k);
            if *a == 0 {
                parts.push(format!("{}*{}", c, base));
            } else {
                parts.push(format!("{}*{}@{}", c, base, artin.basis_name(*a - 1)));
            }
        }
        parts.join(" + ")
    }
}

/// Everything Maurer-Cartan: a DG-Lie algebra with the Artin coefficient
/// ring fixed.
#[derive(Clone)]
pub struct McContext {
    pub dgla: Arc<DGLieAlgebra>,
    pub artin: Arc<ArtinAlgebra>,
}

impl McContext {
    pub fn new(dgla: Arc<DGLieAlgebra>, artin: Arc<ArtinAlgebra>) -> Self {
        McContext { dgla, artin }
    }

    pub fn d(&self, x: &NilElem) -> NilElem {
        x.map_coefficients(|k| self.dgla.complex.d.apply_key(k))
    }

    pub fn bracket(&self, x: &NilElem, y: &NilElem) -> NilElem {
        let mut out = NilElem::zero();
        for ((k1, a1), c1) in x.iter() {
            for ((k2, a2), c2) in y.iter() {
                let artin_parts = artin_mul_idx(Some(&self.artin), *a1, *a2);
                if artin_parts.is_empty() {
                    continue;
                }
                let val = self.dgla.bracket_keys(*k1, *k2);
                if val.is_zero() {
                    continue;
                }
                let base = c1 * c2;
                for (k3, c3) in val.iter() {
                    for (ai, ac) in &artin_parts {
                        out.add_term(*k3, *ai, &(&base * c3 * ac));
                    }
                }
            }
        }
        out
    }

    /// dx + 1/2 [x,x], the Maurer-Cartan defect.
    pub fn mc_defect(&self, x: &NilElem) -> NilElem {
        self.d(x).add(&self.bracket(x, x).scale(&Rat::new(1.into(), 2.into())))
    }

    pub fn mc_check(&self, x: &NilElem) -> bool {
        self.mc_defect(x).is_zero()
    }

    /// Left gauge action
    /// e^a * x = x + sum_{n >= 0} ad_a^n / (n+1)! ([a,x] - da).
    pub fn gauge_act(&self, a: &NilElem, x: &NilElem) -> NilElem {
        let mut out = x.clone();
        let mut cur = self.bracket(a, x).sub(&self.d(a));
        let mut n: u64 = 0;
        let cap = self.artin.nilpotency_index() as u64 + 2;
        while !cur.is_zero() && n <= cap {
            out = out.add(&cur.scale(&Rat::new(1.into(), factorial(n + 1))));
            cur = self.bracket(a, &cur);
            n += 1;
        }
        out
    }

    /// Dynkin Baker-Campbell-Hausdorff product of logarithms; exact because
    /// the coefficients are nilpotent. Nilpotency index at most 9 keeps the
    /// precomputed weight range (<= 8) sufficient.
    pub fn bch(&self, a: &NilElem, b: &NilElem) -> Result<NilElem> {
        let max_weight = self.artin.nilpotency_index().saturating_sub(1);
        if max_weight > 8 {
            return Err(Error::invalid(
                "BCH supported up to nilpotency index 9 (series weight 8)",
            ));
        }
        let mut out = NilElem::zero();
        // sequences of pairs (r_i, s_i) != (0,0) with total weight <= max_weight
        let mut seq: Vec<(u64, u64)> = Vec::new();
        self.bch_rec(a, b, max_weight as u64, &mut seq, &mut out);
        Ok(out)
    }

    fn bch_rec(
        &self,
        a: &NilElem,
        b: &NilElem,
        budget: u64,
        seq: &mut Vec<(u64, u64)>,
        out: &mut NilElem,
    ) {
        if !seq.is_empty() {
            let n = seq.len() as i64;
            let weight: u64 = seq.iter().map(|(r, s)| r + s).sum();
            let mut denom = factorial(0);
            for (r, s) in seq.iter() {
                denom *= factorial(*r) * factorial(*s);
            }
            denom *= num_bigint::BigInt::from(weight);
            let sign = if n % 2 == 1 { rat(1) } else { rat(-1) };
            let coeff = sign * Rat::new(num_bigint::BigInt::from(1), denom * num_bigint::BigInt::from(n));
            // right-nested bracket of the word a^{r_1} b^{s_1} ... a^{r_n} b^{s_n}
            let mut letters: Vec<&NilElem> = Vec::new();
            for (r, s) in seq.iter() {
                for _ in 0..*r {
                    letters.push(a);
                }
                for _ in 0..*s {
                    letters.push(b);
                }
            }
            let mut value = letters.last().map(|l| (*l).clone()).unwrap_or_default();
            for l in letters.iter().rev().skip(1) {
                value = self.bracket(l, &value);
            }
            if !value.is_zero() {
                *out = out.add(&value.scale(&coeff));
            }
        }
        if budget == 0 {
            return;
        }
        for w in 1..=budget {
            for r in 0..=w {
                seq.push((r, w - r));
                self.bch_rec(a, b, budget - w, seq, out);
                seq.pop();
            }
        }
    }
}

/// Maurer-Cartan element of the pair functor of a morphism f: g0 -> g1:
/// (x0, e^{x1}) with x0 in MC(g0 (x) m_A) and e^{x1} * 0 = f(x0).
#[derive(Debug, Clone)]
pub struct McPair {
    pub x0: NilElem,
    pub log1: NilElem,
}

pub struct McPairContext {
    pub morphism: DGLAMorphism,
    pub source: McContext,
    pub target: McContext,
}

impl McPairContext {
    pub fn new(morphism: DGLAMorphism, artin: Arc<ArtinAlgebra>) -> Self {
        let source = McContext::new(morphism.source.clone(), artin.clone());
        let target = McContext::new(morphism.target.clone(), artin);
        McPairContext { morphism, source, target }
    }

    pub fn push(&self, x: &NilElem) -> NilElem {
        x.map_coefficients(|k| self.morphism.map.apply_key(k))
    }

    pub fn check(&self, p: &McPair) -> bool {
        if !self.source.mc_check(&p.x0) {
            return false;
        }
        let gauged = self.target.gauge_act(&p.log1, &NilElem::zero());
        gauged == self.push(&p.x0)
    }
}

/// Outcome of an order-by-order Maurer-Cartan lifting probe.
#[derive(Debug, Clone)]
pub enum LiftOutcome {
    /// A lift over QQ[eps]/(eps^order): x = sum x_k eps^k.
    Lifted(NilElem),
    /// No lift: at `order` the equation d x_k = -obstruction is unsolvable;
    /// the obstruction is a cocycle whose class is nonzero.
    Obstructed { order: usize, obstruction: Vector, class_coords: Vec<Rat> },
}

/// Lift a first-order class of a plain DG-Lie algebra along
/// QQ[eps]/(eps^2) <- ... <- QQ[eps]/(eps^target_order); the obstruction, if
/// any, is returned as an exact class in H^2(g).
pub fn mc_lift_probe(
    g: &Arc<DGLieAlgebra>,
    first_order: &Vector,
    target_order: usize,
) -> Result<LiftOutcome> {
    if target_order < 2 {
        return Err(Error::invalid("target order must be at least 2"));
    }
    if !first_order.is_zero() && first_order.degree() != Some(1) {
        return Err(Error::invalid("a first-order direction must be homogeneous of degree 1"));
    }
    if !g.d(first_order).is_zero() {
        return Err(Error::invalid("the first-order direction must be a cocycle"));
    }
    let artin = ArtinAlgebra::truncated_poly(1, target_order)?;
    let ctx = McContext::new(g.clone(), artin);
    let cohomology = g.complex.cohomology();
    let mut orders: Vec<Vector> = vec![Vector::zero(), first_order.clone()];
    for k in 2..target_order {
        let mut obstruction = Vector::zero();
        for i in 1..k {
            let j = k - i;
            if j < orders.len() && i < orders.len() {
                obstruction = obstruction.add(&g.bracket(&orders[i], &orders[j]));
            }
        }
        let obstruction = obstruction.scale(&Rat::new(1.into(), 2.into()));
        // solve d x_k = -obstruction in degree 1 -> 2
        let rhs = obstruction.neg();
        match solve_d(g, 1, &rhs) {
            Some(xk) => orders.push(xk),
            None => {
                let class = cohomology
                    .project(&obstruction, 2)
                    .ok_or_else(|| Error::invalid("obstruction is not closed"))?;
                return Ok(LiftOutcome::Obstructed { order: k, obstruction, class_coords: class });
            }
        }
    }
    let mut lift = NilElem::zero();
    for (k, v) in orders.iter().enumerate().skip(1) {
        // eps^k is Artin basis index k-1 (shifted by 1 in NilElem terms)
        for (key, c) in v.iter() {
            lift.add_term(*key, k, c);
        }
    }
    debug_assert!(ctx.mc_check(&lift));
    Ok(LiftOutcome::Lifted(lift))
}

fn solve_d(g: &DGLieAlgebra, deg: i32, rhs: &Vector) -> Option<Vector> {
    let space = g.space();
    if rhs.is_zero() {
        return Some(Vector::zero());
    }
    let block = g.complex.d.block(deg)?;
    let dense = rhs.to_dense(space, deg + 1);
    block.solve(&dense).map(|sol| Vector::from_dense(deg, &sol))
}

/// First-order directions of the pair functor of a basis-adapted inclusion:
/// representatives in g1 of a basis of H^0(g1/g0).
pub fn pair_first_order_directions(
    g1: &Arc<DGLieAlgebra>,
    sub: &DGPair,
) -> Result<Vec<Vector>> {
    let (quotient, _) = sub.quotient_complex()?;
    let h = quotient.cohomology();
    let mut out = Vec::new();
    for rep in h.representatives(0) {
        // lift by name: quotient basis names are parent names
        let mut lifted = Vector::zero();
        for (k, c) in rep.iter() {
            let name = quotient.space.basis_name(*k);
            let pk = g1.space().lookup(name).ok_or_else(|| Error::UnknownName(name.into()))?;
            lifted.set(pk, c.clone());
        }
        out.push(lifted);
    }
    Ok(out)
}

/// Lifting probe for the pair functor of a basis-adapted inclusion
/// g0 = span(sub) in g1: elements are e^{xi} with e^{xi} * 0 in g0^1 (x) m_A.
/// The obstruction lives in H^1(g1/g0).
pub fn pair_lift_probe(
    g1: &Arc<DGLieAlgebra>,
    sub: &DGPair,
    xi1: &Vector,
    target_order: usize,
) -> Result<LiftOutcome> {
    if target_order < 2 {
        return Err(Error::invalid("target order must be at least 2"));
    }
    if !xi1.is_zero() && xi1.degree() != Some(0) {
        return Err(Error::invalid("a first-order gauge direction must have degree 0"));
    }
    let (quotient, projection) = sub.quotient_complex()?;
    let qh = quotient.cohomology();
    // first-order condition: proj(d xi1) = 0
    if !projection.apply(&g1.d(xi1)).is_zero() {
        return Err(Error::invalid(
            "first-order direction fails the tangent condition: d(xi) must land in the subalgebra",
        ));
    }
    let space = g1.space();
    let artin = ArtinAlgebra::truncated_poly(1, target_order)?;
    let ctx = McContext::new(g1.clone(), artin.clone());
    let mut orders: Vec<Vector> = vec![Vector::zero(), xi1.clone()];
    for k in 2..target_order {
        // assemble xi with a zero eps^k slot and inspect the eps^k failure
        let mut xi = NilElem::zero();
        for (ord, v) in orders.iter().enumerate().skip(1) {
            for (key, c) in v.iter() {
                xi.add_term(*key, ord, c);
            }
        }
        let value = ctx.gauge_act(&xi, &NilElem::zero());
        let failure = value.artin_coefficient(k); // eps^k has Artin index k
        let failure_q = projection.apply(&failure);
        // want proj(-d xi_k) to cancel failure_q: solve proj(d xi_k) = failure_q
        match solve_projected_d(g1, &projection, &quotient, &failure_q) {
            Some(xik) => orders.push(xik),
            None => {
                let class = qh
                    .project(&failure_q, 1)
                    .ok_or_else(|| Error::invalid("pair obstruction is not closed in g1/g0"))?;
                return Ok(LiftOutcome::Obstructed {
                    order: k,
                    obstruction: failure_q,
                    class_coords: class,
                });
            }
        }
    }
    let mut lift = NilElem::zero();
    for (ord, v) in orders.iter().enumerate().skip(1) {
        for (key, c) in v.iter() {
            lift.add_term(*key, ord, c);
        }
    }
    let value = ctx.gauge_act(&lift, &NilElem::zero());
    let ok = value.artin_indices().iter().all(|&a| {
        projection.apply(&value.artin_coefficient(a)).is_zero()
    });
    debug_assert!(ok, "pair lift does not satisfy the membership condition");
    let _ = space;
    Ok(LiftOutcome::Lifted(lift))
}

fn solve_projected_d(
    g1: &DGLieAlgebra,
    projection: &crate::graded::GradedMap,
    quotient: &Arc<crate::complex::CochainComplex>,
    rhs_q: &Vector,
) -> Option<Vector> {
    let space = g1.space();
    let n = space.dim(0);
    let rows = quotient.space.dim(1);
    if rhs_q.is_zero() {
        return Some(Vector::zero());
    }
    if n == 0 || rows == 0 {
        return None;
    }
    let mut m = Mat::zeros(rows, n);
    for (j, key) in space.keys_of_degree(0).into_iter().enumerate() {
        let img = projection.apply(&g1.complex.d.apply_key(key));
        let dense = img.to_dense(&quotient.space, 1);
        for i in 0..rows {
            m[(i, j)] = dense[i].clone();
        }
    }
    let dense = rhs_q.to_dense(&quotient.space, 1);
    m.solve(&dense).map(|sol| Vector::from_dense(0, &sol))
}

/// sum f_n xi^n applied through a nilpotent operator action; `coeffs[n]` is
/// the Taylor coefficient f_n.
pub fn operator_series(
    coeffs: impl Fn(u64) -> Rat,
    mut apply: impl FnMut(&NilElem) -> NilElem,
    x: &NilElem,
    cap: usize,
) -> NilElem {
    let mut out = x.scale(&coeffs(0));
    let mut cur = x.clone();
    for n in 1..=cap as u64 {
        cur = apply(&cur);
        if cur.is_zero() {
            break;
        }
        out = out.add(&cur.scale(&coeffs(n)));
    }
    out
}

/// Taylor coefficients of (e^{-z} - 1)/z = -1 + z/2 - z^2/6 + ...:
/// f_n = (-1)^{n+1} / (n+1)!.
pub fn exp_neg_minus_one_over(n: u64) -> Rat {
    let sign = if n % 2 == 1 { rat(1) } else { rat(-1) };
    sign * Rat::new(1.into(), factorial(n + 1))
}

/// Koszul-aware check utility used by property suites: gauge elements and
/// Maurer-Cartan elements sampled from a seeded generator.
pub fn random_nil_elem(
    ctx: &McContext,
    degree: i32,
    rng: &mut impl rand::Rng,
    density: f64,
    max_abs: i64,
) -> NilElem {
    let mut out = NilElem::zero();
    for key in ctx.dgla.space().keys_of_degree(degree) {
        for a in 1..=ctx.artin.dim_m() {
            if rng.random::<f64>() < density {
                let num = rng.random_range(-max_abs..=max_abs);
                if num != 0 {
                    let den = rng.random_range(1..=3);
                    out.add_term(key, a, &Rat::new(num.into(), den.into()));
                }
            }
        }
    }
    out
}
