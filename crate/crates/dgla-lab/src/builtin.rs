//! The bundled fixture corpus, constructed programmatically. The same
//! objects are shipped as fixture files (see the fixtures directory); the
//! parser tests cross-check the two presentations.
//!
//! - P1: basic pair, V = <e0, f0; e1> with zero differential, F = <e0, e1>.
//! - P2: the obstructed Grassmannian pair, dim V^0 = dim V^1 = 2 with a
//!   rank-1 differential and F = ker d (+) d(V^0); deformations of F are
//!   two lines meeting transversally.
//! - A1/A2: synthetic Abel-Jacobi data over a four-dimensional complex.
//! - FILT: a three-step filtration pair carrying an obstructed DG-Lie
//!   algebra and a period datum annihilating its obstruction.
//! - SL2: the classical rank-one simple Lie algebra in degree 0.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::cartan::{AbelJacobiDatum, CartanHomotopy, PeriodDatum};
use crate::complex::{CochainComplex, DGPair};
use crate::dgla::{end_algebra, DGLieAlgebra};
use crate::error::Result;
use crate::graded::{GradedMap, GradedVectorSpace, Key, Vector};
use crate::scalar::rat;

pub fn space(name: &str, degs: &[(i32, &[&str])]) -> Arc<GradedVectorSpace> {
    let mut m = BTreeMap::new();
    for (d, names) in degs {
        m.insert(*d, names.iter().map(|s| s.to_string()).collect());
    }
    GradedVectorSpace::new(name, m).expect("fixture space")
}

pub fn p1_pair() -> DGPair {
    let v = space("V", &[(0, &["e0", "f0"]), (1, &["e1"])]);
    let c = CochainComplex::zero_differential(v.clone());
    let sub: BTreeSet<Key> =
        [v.lookup("e0").unwrap(), v.lookup("e1").unwrap()].into_iter().collect();
    DGPair::new(c, sub, "F").expect("P1")
}

pub fn p2_pair() -> DGPair {
    let v = space("V", &[(0, &["a1", "a2"]), (1, &["b1", "b2"])]);
    let d = GradedMap::from_images(v.clone(), v.clone(), 1, |k| {
        let mut out = Vector::zero();
        if k == v.lookup("a1").unwrap() {
            out.set(v.lookup("b1").unwrap(), rat(1));
        }
        out
    })
    .expect("\u{0064} P2");
    let c = CochainComplex::new(v.clone(), d).expect("P2");
    let sub: BTreeSet<Key> =
        [v.lookup("a2").unwrap(), v.lookup("b1").unwrap()].into_iter().collect();
    DGPair::new(c, sub, "F").expect("P2 pair")
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

/// A1: g = <w deg 0, x deg 1> abelian with zero differential;
/// V = <em1 deg -1; e0, f0 deg 0; e1 deg 1>, d = 0; F = <e0, e1>;
/// i_w = (e0 -> em1), i_x = (e0 -> f0); v = e0; g~ = 0.
pub fn a1_datum() -> Result<AbelJacobiDatum> {
    let gs = space("g", &[(0, &["w"]), (1, &["x"])]);
    let g = DGLieAlgebra::abelian("g", CochainComplex::zero_differential(gs.clone()));
    let vs = space("V", &[(-1, &["em1"]), (0, &["e0", "f0"]), (1, &["e1"])]);
    let vc = CochainComplex::zero_differential(vs.clone());
    let sub: BTreeSet<Key> =
        [vs.lookup("e0").unwrap(), vs.lookup("e1").unwrap()].into_iter().collect();
    let pair = DGPair::new(vc.clone(), sub, "F")?;
    let end = end_algebra(&vc, &[])?;
    let e0 = vs.lookup("e0").unwrap();
    let f0 = vs.lookup("f0").unwrap();
    let em1 = vs.lookup("em1").unwrap();
    let i = GradedMap::from_images(gs.clone(), end.dgla.space().clone(), -1, |k| {
        let mut out = Vector::zero();
        if k == gs.lookup("w").unwrap() {
            out.set(end.key(e0, em1).unwrap(), rat(1));
        } else if k == gs.lookup("x").unwrap() {
            out.set(end.key(e0, f0).unwrap(), rat(1));
        }
        out
    })?;
    let homotopy = CartanHomotopy::new(g.clone(), end.dgla.clone(), i)?;
    let period = PeriodDatum::new(g.clone(), pair, end, homotopy)?;
    let sub_g = DGPair::new(g.complex.clone(), BTreeSet::new(), "gt")?;
    Ok(AbelJacobiDatum { period, sub_g, v: vs.basis_vector(e0) })
}

/// A2: A1 enlarged by a degree-1 generator y with d(w) = y and g~ = <y>;
/// i_y = (e1 -> e1) annihilates v = e0 and preserves F.
pub fn a2_datum() -> Result<AbelJacobiDatum> {
    let gs = space("g", &[(0, &["w"]), (1, &["x", "y"])]);
    let gd = GradedMap::from_images(gs.clone(), gs.clone(), 1, |k| {
        let mut out = Vector::zero();
        if k == gs.lookup("w").unwrap() {
            out.set(gs.lookup("y").unwrap(), rat(1));
        }
        out
    })?;
    let gc = CochainComplex::new(gs.clone(), gd)?;
    let g = DGLieAlgebra::abelian("g", gc);
    let vs = space("V", &[(-1, &["em1"]), (0, &["e0", "f0"]), (1, &["e1"])]);
    let vc = CochainComplex::zero_differential(vs.clone());
    let sub: BTreeSet<Key> =
        [vs.lookup("e0").unwrap(), vs.lookup("e1").unwrap()].into_iter().collect();
    let pair = DGPair::new(vc.clone(), sub, "F")?;
    let end = end_algebra(&vc, &[])?;
    let e0 = vs.lookup("e0").unwrap();
    let f0 = vs.lookup("f0").unwrap();
    let em1 = vs.lookup("em1").unwrap();
    let e1 = vs.lookup("e1").unwrap();
    let i = GradedMap::from_images(gs.clone(), end.dgla.space().clone(), -1, |k| {
        let mut out = Vector::zero();
        if k == gs.lookup("w").unwrap() {
            out.set(end.key(e0, em1).unwrap(), rat(1));
        } else if k == gs.lookup("x").unwrap() {
            out.set(end.key(e0, f0).unwrap(), rat(1));
        } else if k == gs.lookup("y").unwrap() {
            out.set(end.key(e1, e1).unwrap(), rat(1));
        }
        out
    })?;
    let homotopy = CartanHomotopy::new(g.clone(), end.dgla.clone(), i)?;
    let period = PeriodDatum::new(g.clone(), pair, end, homotopy)?;
    let sub_keys: BTreeSet<Key> = [gs.lookup("y").unwrap()].into_iter().collect();
    let sub_g = DGPair::new(g.complex.clone(), sub_keys, "gt")?;
    Ok(AbelJacobiDatum { period, sub_g, v: vs.basis_vector(e0) })
}

/// FILT: V = <f, c deg 0; wv, m deg 1> with zero differential, filtration
/// F2 = <f> inside F1 = <f, wv>; carries the obstructed algebra
/// g = <x deg 1; z, u deg 2> with [x, x] = z, i_u = (f -> wv), i_x = i_z = 0.
/// The period datum uses the deep stage (V, F2): H(F2) -> H(V) is injective,
/// the primary obstruction z of g dies under H^2(i), while u acts
/// nontrivially.
pub struct FiltFixture {
    pub pair1: DGPair,
    pub pair2: DGPair,
    pub period: PeriodDatum,
    /// the obstruction class generator and the witness class
    pub z_key: Key,
    pub u_key: Key,
}

pub fn filt_fixture() -> Result<FiltFixture> {
    let vs = space("V", &[(0, &["f", "c"]), (1, &["wv", "m"])]);
    let vc = CochainComplex::zero_differential(vs.clone());
    let f1: BTreeSet<Key> =
        [vs.lookup("f").unwrap(), vs.lookup("wv").unwrap()].into_iter().collect();
    let f2: BTreeSet<Key> = [vs.lookup("f").unwrap()].into_iter().collect();
    let pair1 = DGPair::new(vc.clone(), f1, "F1")?;
    let pair2 = DGPair::new(vc.clone(), f2, "F2")?;

    let gs = space("gobs", &[(1, &["x"]), (2, &["z", "u"])]);
    let gc = CochainComplex::zero_differential(gs.clone());
    let xk = gs.lookup("x").unwrap();
    let zk = gs.lookup("z").unwrap();
    let uk = gs.lookup("u").unwrap();
    let mut table = BTreeMap::new();
    let mut v = Vector::zero();
    v.set(zk, rat(1));
    table.insert((xk, xk), v);
    let g = DGLieAlgebra::new("gobs", gc, table);

    let end = end_algebra(&vc, &[])?;
    let fk = vs.lookup("f").unwrap();
    let wk = vs.lookup("wv").unwrap();
    let i = GradedMap::from_images(gs.clone(), end.dgla.space().clone(), -1, |k| {
        let mut out = Vector::zero();
        if k == uk {
            out.set(end.key(fk, wk).unwrap(), rat(1));
        }
        out
    })?;
    let homotopy = CartanHomotopy::new(g.clone(), end.dgla.clone(), i)?;
    let period = PeriodDatum::new(g, pair2.clone(), end, homotopy)?;
    Ok(FiltFixture { pair1, pair2, period, z_key: zk, u_key: uk })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn fixtures_validate() {
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        assert!(sl2().check().ok());
        assert!(p1_pair().validate().is_ok());
        assert!(p2_pair().validate().is_ok());
        let a1 = a1_datum().unwrap();
        assert!(a1.validate(&mut rng).ok());
        let a2 = a2_datum().unwrap();
        let checks = a2.validate(&mut rng);
        assert!(checks.ok(), "{:?}", checks.first_failure());
        assert!(a2.cube_check().ok());
        let filt = filt_fixture().unwrap();
        let checks = filt.period.validate(&mut rng);
        assert!(checks.ok(), "{:?}", checks.first_failure());
    }

    #[test]
    fn a2_mutation_fails() {
        // corrupting i_y so that i_y(e0) != 0 must break the datum
        let a2 = a2_datum().unwrap();
        let gs = a2.period.g.space().clone();
        let vs = a2.period.pair.complex.space.clone();
        let end = end_algebra(&a2.period.pair.complex, &[]).unwrap();
        let e0 = vs.lookup("e0").unwrap();
        let f0 = vs.lookup("f0").unwrap();
        let e1 = vs.lookup("e1").unwrap();
        let em1 = vs.lookup("em1").unwrap();
        let i = GradedMap::from_images(gs.clone(), end.dgla.space().clone(), -1, |k| {
            let mut out = Vector::zero();
            if k == gs.lookup("w").unwrap() {
                out.set(end.key(e0, em1).unwrap(), rat(1));
            } else if k == gs.lookup("x").unwrap() {
                out.set(end.key(e0, f0).unwrap(), rat(1));
            } else if k == gs.lookup("y").unwrap() {
                out.set(end.key(e1, e1).unwrap(), rat(1));
                // corruption
                out.set(end.key(e0, f0).unwrap(), rat(1));
            }
            out
        })
        .unwrap();
        let homotopy = CartanHomotopy::new(a2.period.g.clone(), end.dgla.clone(), i).unwrap();
        let period =
            PeriodDatum::new(a2.period.g.clone(), a2.period.pair.clone(), end, homotopy).unwrap();
        let bad = AbelJacobiDatum { period, sub_g: a2.sub_g.clone(), v: a2.v.clone() };
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert!(!bad.validate(&mut rng).ok());
        assert!(!bad.cube_check().ok());
    }
}
