//! Polynomial differential forms on the interval and on the square, with
//! coefficients in a graded space, optionally tensored with the maximal
//! ideal of an Artin algebra.
//!
//! Conventions, fixed here and used by every caller:
//! - monomials are normalized to `s^a t^b ds dt` order; `dt ds = -ds dt`;
//! - forms are written polynomial part first, and moving a differential past
//!   a coefficient of degree k costs (-1)^k;
//! - the positive orientation on the square is `ds dt`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;

use crate::artin::ArtinAlgebra;
use crate::complex::CochainComplex;
use crate::graded::{Key, Vector};
use crate::scalar::{rat, Rat};

/// Monomial s^a t^b ds^δ dt^γ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mono {
    pub s_pow: u32,
    pub t_pow: u32,
    pub ds: bool,
    pub dt: bool,
}

impl Mono {
    pub const ONE: Mono = Mono { s_pow: 0, t_pow: 0, ds: false, dt: false };

    pub fn t(pow: u32) -> Mono {
        Mono { s_pow: 0, t_pow: pow, ds: false, dt: false }
    }

    pub fn t_dt(pow: u32) -> Mono {
        Mono { s_pow: 0, t_pow: pow, ds: false, dt: true }
    }

    pub fn s(pow: u32) -> Mono {
        Mono { s_pow: pow, t_pow: 0, ds: false, dt: false }
    }

    pub fn s_ds(pow: u32) -> Mono {
        Mono { s_pow: pow, t_pow: 0, ds: true, dt: false }
    }

    pub fn form_degree(&self) -> i32 {
        (self.ds as i32) + (self.dt as i32)
    }

    /// Weight in s: polynomial power plus one for ds. Truncations cut by
    /// weight because the integration contraction preserves it.
    pub fn s_weight(&self) -> u32 {
        self.s_pow + self.ds as u32
    }

    pub fn t_weight(&self) -> u32 {
        self.t_pow + self.dt as u32
    }

    pub fn weight(&self) -> u32 {
        self.s_weight().max(self.t_weight())
    }

    /// Product of two monomials with the orientation sign, `None` if it
    /// vanishes (repeated differential).
    pub fn wedge(&self, other: &Mono) -> Option<(Mono, Rat)> {
        if (self.ds && other.ds) || (self.dt && other.dt) {
            return None;
        }
        // moving other's ds past self's dt
        let sign = if self.dt && other.ds { rat(-1) } else { rat(1) };
        Some((
            Mono {
                s_pow: self.s_pow + other.s_pow,
                t_pow: self.t_pow + other.t_pow,
                ds: self.ds || other.ds,
                dt: self.dt || other.dt,
            },
            sign,
        ))
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if self.s_pow > 0 {
            parts.push(if self.s_pow == 1 { "s".into() } else { format!("s^{}", self.s_pow) });
        }
        if self.t_pow > 0 {
            parts.push(if self.t_pow == 1 { "t".into() } else { format!("t^{}", self.t_pow) });
        }
        if self.ds {
            parts.push("ds".into());
        }
        if self.dt {
            parts.push("dt".into());
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }
}

/// Term index: monomial, coefficient basis key, Artin basis index.
/// Artin index 0 means the unit (a plain rational coefficient); indices
/// `1..=dim m_A` refer to the m_A basis shifted by one.
pub type TermKey = (Mono, Key, usize);

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Form {
    terms: BTreeMap<TermKey, Rat>,
}

impl Form {
    pub fn zero() -> Form {
        Form::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(mono: Mono, key: Key, artin_idx: usize, coeff: Rat) -> Form {
        let mut f = Form::zero();
        f.add_term(mono, key, artin_idx, &coeff);
        f
    }

    pub fn from_vector(v: &Vector, mono: Mono) -> Form {
        let mut f = Form::zero();
        for (k, c) in v.iter() {
            f.add_term(mono, *k, 0, c);
        }
        f
    }

    pub fn add_term(&mut self, mono: Mono, key: Key, artin_idx: usize, coeff: &Rat) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry((mono, key, artin_idx)).or_insert_with(Rat::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&(mono, key, artin_idx));
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TermKey, &Rat)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &Form) -> Form {
        let mut out = self.clone();
        for ((m, k, a), c) in other.iter() {
            out.add_term(*m, *k, *a, c);
        }
        out
    }

    pub fn sub(&self, other: &Form) -> Form {
        self.add(&other.scale(&rat(-1)))
    }

    pub fn scale(&self, c: &Rat) -> Form {
        let mut out = Form::zero();
        if c.is_zero() {
            return out;
        }
        for ((m, k, a), v) in self.iter() {
            out.terms.insert((*m, *k, *a), c * v);
        }
        out
    }

    pub fn neg(&self) -> Form {
        self.scale(&rat(-1))
    }

    /// Total degree of a term: coefficient degree plus form degree.
    pub fn degree(&self) -> Option<i32> {
        let mut degs = self.terms.keys().map(|(m, k, _)| k.deg + m.form_degree());
        let first = degs.next()?;
        if degs.all(|d| d == first) {
            Some(first)
        } else {
            None
        }
    }

    pub fn homogeneous_part(&self, deg: i32) -> Form {
        let mut out = Form::zero();
        for ((m, k, a), c) in self.iter() {
            if k.deg + m.form_degree() == deg {
                out.add_term(*m, *k, *a, c);
            }
        }
        out
    }

    pub fn max_weight(&self) -> u32 {
        self.terms.keys().map(|(m, _, _)| m.weight()).max().unwrap_or(0)
    }

    pub fn uses_s(&self) -> bool {
        self.terms.keys().any(|(m, _, _)| m.s_pow > 0 || m.ds)
    }

    pub fn uses_t(&self) -> bool {
        self.terms.keys().any(|(m, _, _)| m.t_pow > 0 || m.dt)
    }

    /// Multiply by s^a t^b on the left (no sign).
    pub fn mul_poly(&self, s_pow: u32, t_pow: u32) -> Form {
        let mut out = Form::zero();
        for ((m, k, a), c) in self.iter() {
            let mut m2 = *m;
            m2.s_pow += s_pow;
            m2.t_pow += t_pow;
            out.add_term(m2, *k, *a, c);
        }
        out
    }

    /// Left wedge with dt: passes ds (sign -1), kills dt-terms.
    pub fn wedge_dt_left(&self) -> Form {
        let mut out = Form::zero();
        for ((m, k, a), c) in self.iter() {
            if m.dt {
                continue;
            }
            let sign = if m.ds { rat(-1) } else { rat(1) };
            let mut m2 = *m;
            m2.dt = true;
            out.add_term(m2, *k, *a, &(c * sign));
        }
        out
    }

    /// Left wedge with ds: kills ds-terms, no sign.
    pub fn wedge_ds_left(&self) -> Form {
        let mut out = Form::zero();
        for ((m, k, a), c) in self.iter() {
            if m.ds {
                continue;
            }
            let mut m2 = *m;
            m2.ds = true;
            out.add_term(m2, *k, *a, c);
        }
        out
    }

    /// de Rham differential plus (±) coefficient differential.
    pub fn d(&self, complex: &CochainComplex) -> Form {
        let mut out = Form::zero();
        for ((m, k, a), c) in self.iter() {
            // d_poly in s: a s^{a-1} ds, entering the ds slot directly
            if m.s_pow > 0 && !m.ds {
                let mut m2 = *m;
                m2.s_pow -= 1;
                m2.ds = true;
                out.add_term(m2, *k, *a, &(c * rat(m.s_pow as i64)));
            }
            // d_poly in t: b t^{b-1} dt, passing ds costs a sign
            if m.t_pow > 0 && !m.dt {
                let sign = if m.ds { rat(-1) } else { rat(1) };
                let mut m2 = *m;
                m2.t_pow -= 1;
                m2.dt = true;
                out.add_term(m2, *k, *a, &(c * rat(m.t_pow as i64) * sign));
            }
            // coefficient differential with Koszul sign on the form part
            let sign = if m.form_degree() % 2 == 0 { rat(1) } else { rat(-1) };
            let dk = complex.d.apply_key(*k);
            for (k2, v) in dk.iter() {
                out.add_term(*m, *k2, *a, &(c * v * &sign));
            }
        }
        out
    }

    /// Substitute t = 0 or 1 and kill dt.
    pub fn restrict_t(&self, endpoint: u8) -> Form {
        let mut out = Form::zero();
        for ((m, k, a), c) in self.iter() {
            if m.dt {
                continue;
            }
            if endpoint == 0 && m.t_pow > 0 {
                continue;
            }
            let mut m2 = *m;
            m2.t_pow = 0;
            out.add_term(m2, *k, *a, c);
        }
        out
    }

    /// Substitute s = 0 or 1 and kill ds.
    pub fn restrict_s(&self, endpoint: u8) -> Form {
        let mut out = Form::zero();
        for ((m, k, a), c) in self.iter() {
            if m.ds {
                continue;
            }
            if endpoint == 0 && m.s_pow > 0 {
                continue;
            }
            let mut m2 = *m;
            m2.s_pow = 0;
            out.add_term(m2, *k, *a, c);
        }
        out
    }

    /// Integrate the dt-component over t in [0,1]; forms without dt go to 0.
    /// Whatever s-part a term carries is kept.
    pub fn integrate_t(&self) -> Form {
        let mut out = Form::zero();
        for ((m, k, a), c) in self.iter() {
            if !m.dt {
                continue;
            }
            let factor = Rat::new(1.into(), (m.t_pow as i64 + 1).into());
            let mut m2 = *m;
            m2.t_pow = 0;
            m2.dt = false;
            out.add_term(m2, *k, *a, &(c * factor));
        }
        out
    }

    /// Integrate the ds-component over s in [0,1]; requires no dt left.
    pub fn integrate_s(&self) -> Form {
        let mut out = Form::zero();
        for ((m, k, a), c) in self.iter() {
            if !m.ds || m.dt {
                continue;
            }
            let factor = Rat::new(1.into(), (m.s_pow as i64 + 1).into());
            let mut m2 = *m;
            m2.s_pow = 0;
            m2.ds = false;
            out.add_term(m2, *k, *a, &(c * factor));
        }
        out
    }

    /// Integrate the ds dt component over the square.
    pub fn integrate_st(&self) -> Form {
        self.integrate_t().integrate_s()
    }

    /// View as an element of the coefficient space (only valid when no
    /// monomial content remains).
    pub fn as_constant(&self) -> Option<BTreeMap<(Key, usize), Rat>> {
        let mut out = BTreeMap::new();
        for ((m, k, a), c) in self.iter() {
            if *m != Mono::ONE {
                return None;
            }
            out.insert((*k, *a), c.clone());
        }
        Some(out)
    }

    /// Plain (Artin-free) constant part as a Vector; `None` if any term has
    /// monomial content or a nontrivial Artin index.
    pub fn as_vector(&self) -> Option<Vector> {
        let mut out = Vector::zero();
        for ((m, k, a), c) in self.iter() {
            if *m != Mono::ONE || *a != 0 {
                return None;
            }
            out.set(*k, c.clone());
        }
        Some(out)
    }

    /// Bilinear product with Koszul signs:
    /// (mu (x) x (x) m) * (nu (x) y (x) m') =
    ///   (-1)^{|x| |nu|} (mu ^ nu) (x) pair(x,y) (x) m m'.
    pub fn product_with(
        &self,
        other: &Form,
        artin: Option<&Arc<ArtinAlgebra>>,
        mut pair: impl FnMut(Key, Key) -> Vector,
    ) -> Form {
        let mut out = Form::zero();
        for ((m1, k1, a1), c1) in self.iter() {
            for ((m2, k2, a2), c2) in other.iter() {
                let Some((mono, orient)) = m1.wedge(m2) else { continue };
                let koszul = if (k1.deg * m2.form_degree()) % 2 == 0 { rat(1) } else { rat(-1) };
                let artin_parts = artin_mul_idx(artin, *a1, *a2);
                if artin_parts.is_empty() {
                    continue;
                }
                let value = pair(*k1, *k2);
                if value.is_zero() {
                    continue;
                }
                let base = c1 * c2 * &orient * &koszul;
                for (k3, c3) in value.iter() {
                    for (aidx, ac) in &artin_parts {
                        out.add_term(mono, *k3, *aidx, &(&base * c3 * ac));
                    }
                }
            }
        }
        out
    }

    /// Apply a coefficient map of homogeneous degree `map_degree`, with the
    /// Koszul sign (-1)^{map_degree * form_degree} for moving the map past
    /// the form part.
    pub fn map_coefficients(
        &self,
        map_degree: i32,
        mut f: impl FnMut(Key) -> Vector,
    ) -> Form {
        let mut out = Form::zero();
        for ((m, k, a), c) in self.iter() {
            let img = f(*k);
            if img.is_zero() {
                continue;
            }
            let sign = if (map_degree * m.form_degree()) % 2 == 0 { rat(1) } else { rat(-1) };
            for (k2, v) in img.iter() {
                out.add_term(*m, *k2, *a, &(c * v * &sign));
            }
        }
        out
    }

    pub fn describe(&self, names: impl Fn(Key) -> String, artin: Option<&Arc<ArtinAlgebra>>) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for ((m, k, a), c) in self.iter() {
            let mut s = format!("{}*{}", c, m.describe());
            s.push_str(&format!("*{}", names(*k)));
            if *a > 0 {
                if let Some(alg) = artin {
                    s.push_str(&format!("@{}", alg.basis_name(*a - 1)));
                } else {
                    s.push_str(&format!("@#{}", a));
                }
            }
            parts.push(s);
        }
        parts.join(" + ")
    }
}

/// Product of Artin indices: 0 is the unit, i >= 1 is basis element i-1.
pub fn artin_mul_idx(
    artin: Option<&Arc<ArtinAlgebra>>,
    a: usize,
    b: usize,
) -> Vec<(usize, Rat)> {
    match (a, b) {
        (0, 0) => vec![(0, rat(1))],
        (0, j) => vec![(j, rat(1))],
        (i, 0) => vec![(i, rat(1))],
        (i, j) => {
            let alg = artin.expect("Artin-tensored terms need an Artin algebra");
            alg.mul_basis(i - 1, j - 1)
                .into_iter()
                .map(|(k, c)| (k + 1, c))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::CochainComplex;
    use crate::graded::GradedVectorSpace;
    use crate::scalar::ratq;
    use std::collections::BTreeMap as Map;

    fn space2() -> (Arc<CochainComplex>, Key, Key) {
        let mut m = Map::new();
        m.insert(0, vec!["e0".to_string()]);
        m.insert(1, vec!["e1".to_string()]);
        let v = GradedVectorSpace::new("V", m).unwrap();
        let e0 = v.lookup("e0").unwrap();
        let e1 = v.lookup("e1").unwrap();
        let d = crate::graded::GradedMap::from_images(v.clone(), v.clone(), 1, |k| {
            if k == e0 {
                let mut out = Vector::zero();
                out.set(e1, rat(1));
                out
            } else {
                Vector::zero()
            }
        })
        .unwrap();
        (CochainComplex::new(v, d).unwrap(), e0, e1)
    }

    #[test]
    fn leibniz_on_interval() {
        // d(t (x) e0) = dt (x) e0 + t (x) e1
        let (c, e0, e1) = space2();
        let f = Form::term(Mono::t(1), e0, 0, rat(1));
        let df = f.d(&c);
        assert_eq!(df.terms.get(&(Mono::t_dt(0), e0, 0)), Some(&rat(1)));
        assert_eq!(df.terms.get(&(Mono::t(1), e1, 0)), Some(&rat(1)));
        assert!(df.d(&c).is_zero());
    }

    #[test]
    fn square_differential_signs() {
        let (c, e0, _) = space2();
        // d(s t (x) e0) contains t ds + s dt (plus coefficient part)
        let f = Form::term(Mono { s_pow: 1, t_pow: 1, ds: false, dt: false }, e0, 0, rat(1));
        let df = f.d(&c);
        assert_eq!(
            df.terms.get(&(Mono { s_pow: 0, t_pow: 1, ds: true, dt: false }, e0, 0)),
            Some(&rat(1))
        );
        assert_eq!(
            df.terms.get(&(Mono { s_pow: 1, t_pow: 0, ds: false, dt: true }, e0, 0)),
            Some(&rat(1))
        );
        assert!(df.d(&c).is_zero());
        // d(t ds) = -ds dt
        let g = Form::term(Mono { s_pow: 0, t_pow: 1, ds: true, dt: false }, e0, 0, rat(1));
        let dg = g.d(&c);
        assert_eq!(
            dg.terms.get(&(Mono { s_pow: 0, t_pow: 0, ds: true, dt: true }, e0, 0)),
            Some(&rat(-1))
        );
    }

    #[test]
    fn restrictions() {
        let (_, e0, _) = space2();
        // (t^2 (x) e)|_1 = e ; (t dt (x) e)|_0 = 0 ; ((1-t) (x) e)|_0 = e
        let f = Form::term(Mono::t(2), e0, 0, rat(1));
        assert_eq!(f.restrict_t(1).as_vector().unwrap().coeff(e0), rat(1));
        let g = Form::term(Mono::t_dt(1), e0, 0, rat(1));
        assert!(g.restrict_t(0).is_zero());
        let h = Form::term(Mono::ONE, e0, 0, rat(1)).sub(&Form::term(Mono::t(1), e0, 0, rat(1)));
        assert_eq!(h.restrict_t(0).as_vector().unwrap().coeff(e0), rat(1));
        // 2-variable edges
        let w = Form::term(Mono { s_pow: 1, t_pow: 1, ds: false, dt: true }, e0, 0, rat(1));
        let at_s1 = w.restrict_s(1);
        assert_eq!(at_s1.terms.get(&(Mono::t_dt(1), e0, 0)), Some(&rat(1)));
        let ds_only = Form::term(Mono::s_ds(0), e0, 0, rat(1));
        assert!(ds_only.restrict_s(0).is_zero());
        let s2dt = Form::term(Mono { s_pow: 2, t_pow: 0, ds: false, dt: true }, e0, 0, rat(1));
        assert!(s2dt.restrict_t(1).is_zero());
    }

    #[test]
    fn integration_values() {
        let (_, e0, _) = space2();
        assert_eq!(
            Form::term(Mono::t_dt(0), e0, 0, rat(1)).integrate_t().as_vector().unwrap().coeff(e0),
            rat(1)
        );
        assert!(Form::term(Mono::t(2), e0, 0, rat(1)).integrate_t().is_zero());
        // unit square, orientation, product decomposition
        let dsdt = Form::term(Mono { s_pow: 0, t_pow: 0, ds: true, dt: true }, e0, 0, rat(1));
        assert_eq!(dsdt.integrate_st().as_vector().unwrap().coeff(e0), rat(1));
        let stdsdt = Form::term(Mono { s_pow: 1, t_pow: 1, ds: true, dt: true }, e0, 0, rat(1));
        assert_eq!(stdsdt.integrate_st().as_vector().unwrap().coeff(e0), ratq(1, 4));
    }

    #[test]
    fn orientation_sign_of_dt_ds() {
        let (_, e0, _) = space2();
        // dt ds is stored via a left dt-wedge of ds: dt ^ (ds (x) e) = -ds dt (x) e
        let ds = Form::term(Mono::s_ds(0), e0, 0, rat(1));
        let dtds = ds.wedge_dt_left();
        assert_eq!(dtds.integrate_st().as_vector().unwrap().coeff(e0), rat(-1));
    }

    #[test]
    fn beta_family_from_barycentric_expansion() {
        // integral of (1-t)^a t^b dt = a! b! / (a+b+1)!
        let (_, e0, _) = space2();
        for a in 0..=6u32 {
            for b in 0..=6u32 {
                let mut f = Form::zero();
                for j in 0..=a {
                    let c = Rat::from_integer(crate::scalar::binomial(a as u64, j as u64))
                        * if j % 2 == 0 { rat(1) } else { rat(-1) };
                    f.add_term(Mono::t_dt(b + j), e0, 0, &c);
                }
                let got = f.integrate_t().as_vector().unwrap().coeff(e0);
                assert_eq!(got, crate::scalar::beta_integral(a as u64, b as u64));
            }
        }
    }
}
