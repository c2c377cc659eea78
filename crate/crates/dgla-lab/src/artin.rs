//! Local Artin coefficient algebras A = QQ*1 (+) m_A with nilpotent maximal
//! ideal, presented by an explicit multiplication table on a basis of m_A.
//!
//! The canonical family QQ[e1..ek]/(monomials of degree >= N) covers every
//! probe in the test corpus; exotic tables can be loaded from fixture files.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;

use crate::check::CheckList;
use crate::error::{Error, Result};
use crate::linalg::span_canonical;
use crate::scalar::Rat;

/// Sparse vector over the m_A basis.
pub type MVec = BTreeMap<usize, Rat>;

#[derive(Debug)]
pub struct ArtinAlgebra {
    name: String,
    basis: Vec<String>,
    /// product of m_A basis elements i and j, stored for i <= j
    table: BTreeMap<(usize, usize), MVec>,
    nilpotency_index: usize,
}

impl ArtinAlgebra {
    pub fn from_table(
        name: impl Into<String>,
        basis: Vec<String>,
        mut table: BTreeMap<(usize, usize), MVec>,
        nilpotency_index: usize,
    ) -> Arc<Self> {
        table.retain(|_, v| {
            v.retain(|_, c| !c.is_zero());
            !v.is_empty()
        });
        Arc::new(ArtinAlgebra { name: name.into(), basis, table, nilpotency_index })
    }

    /// QQ[e1..ek] truncated at total degree `order`; basis of m_A is all
    /// monomials of degree 1..order-1 in graded-lex order.
    pub fn truncated_poly(num_vars: usize, order: usize) -> Result<Arc<Self>> {
        if num_vars < 1 {
            return Err(Error::invalid("artin_truncated_poly needs at least one variable"));
        }
        if order < 2 {
            return Err(Error::invalid(
                "artin_truncated_poly needs order >= 2 (order 1 gives m_A = 0)",
            ));
        }
        let mut monomials: Vec<Vec<usize>> = Vec::new();
        for degree in 1..order {
            let mut level = Vec::new();
            gen_monomials(num_vars, degree, &mut vec![0; num_vars], 0, degree, &mut level);
            monomials.extend(level);
        }
        let index: BTreeMap<Vec<usize>, usize> =
            monomials.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let basis: Vec<String> = monomials.iter().map(|m| monomial_name(m)).collect();
        let mut table = BTreeMap::new();
        for i in 0..monomials.len() {
            for j in i..monomials.len() {
                let product: Vec<usize> =
                    monomials[i].iter().zip(&monomials[j]).map(|(a, b)| a + b).collect();
                if product.iter().sum::<usize>() >= order {
                    continue;
                }
                let mut v = MVec::new();
                v.insert(index[&product], Rat::from_integer(1.into()));
                table.insert((i, j), v);
            }
        }
        Ok(Self::from_table(
            format!("Q[{}]/m^{}", var_list(num_vars), order),
            basis,
            table,
            order,
        ))
    }

    /// The trivial algebra A = QQ (m_A = 0).
    pub fn trivial() -> Arc<Self> {
        Self::from_table("Q", Vec::new(), BTreeMap::new(), 1)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim_m(&self) -> usize {
        self.basis.len()
    }

    pub fn nilpotency_index(&self) -> usize {
        self.nilpotency_index
    }

    pub fn basis_name(&self, i: usize) -> &str {
        &self.basis[i]
    }

    pub fn basis_index(&self, name: &str) -> Option<usize> {
        self.basis.iter().position(|b| b == name)
    }

    /// Product of two m_A basis elements as a sparse m_A vector.
    pub fn mul_basis(&self, i: usize, j: usize) -> MVec {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.table.get(&key).cloned().unwrap_or_default()
    }

    pub fn mul_mvec(&self, a: &MVec, b: &MVec) -> MVec {
        let mut out = MVec::new();
        for (&i, ca) in a {
            for (&j, cb) in b {
                let prod = ca * cb;
                for (&k, ck) in &self.mul_basis(i, j) {
                    let entry = out.entry(k).or_insert_with(Rat::zero);
                    *entry += &prod * ck;
                }
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    /// Spans of the powers m_A^1, m_A^2, ... until they become zero.
    fn power_spans(&self) -> Vec<Vec<Vec<Rat>>> {
        let n = self.dim_m();
        let mut powers: Vec<Vec<Vec<Rat>>> = Vec::new();
        let unit_vectors: Vec<MVec> = (0..n)
            .map(|i| {
                let mut v = MVec::new();
                v.insert(i, Rat::from_integer(1.into()));
                v
            })
            .collect();
        let mut current: Vec<MVec> = unit_vectors.clone();
        loop {
            let dense: Vec<Vec<Rat>> = current.iter().map(|v| mvec_dense(v, n)).collect();
            let canon = span_canonical(&dense, n);
            if canon.rows == 0 {
                powers.push(Vec::new());
                break;
            }
            powers.push((0..canon.rows).map(|r| canon.row(r).to_vec()).collect());
            if powers.len() > n + 1 {
                break;
            }
            let mut next = Vec::new();
            for v in &current {
                for u in &unit_vectors {
                    let p = self.mul_mvec(v, u);
                    if !p.is_empty() {
                        next.push(p);
                    }
                }
            }
            current = next;
            if current.is_empty() {
                powers.push(Vec::new());
                break;
            }
        }
        powers
    }

    /// Commutativity, associativity on all basis triples, and nilpotency at
    /// the stored index.
    pub fn check(&self) -> CheckList {
        let mut checks = CheckList::new();
        let n = self.dim_m();

        let mut comm_witness = None;
        for (&(i, j), _) in &self.table {
            if let Some(other) = self.table.get(&(j, i)) {
                if i != j && other != &self.mul_basis(i, j) {
                    comm_witness =
                        Some(format!("{} * {}", self.basis_name(i), self.basis_name(j)));
                    break;
                }
            }
        }
        checks.record(
            "commutativity",
            comm_witness.is_none(),
            comm_witness.unwrap_or_default(),
        );

        let mut assoc_witness = None;
        'outer: for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let ij = self.mul_basis(i, j);
                    let jk = self.mul_basis(j, k);
                    let mut ek = MVec::new();
                    ek.insert(k, Rat::from_integer(1.into()));
                    let mut ei = MVec::new();
                    ei.insert(i, Rat::from_integer(1.into()));
                    let left = self.mul_mvec(&ij, &ek);
                    let right = self.mul_mvec(&ei, &jk);
                    if left != right {
                        assoc_witness = Some(format!(
                            "({}*{})*{} != {}*({}*{})",
                            self.basis_name(i),
                            self.basis_name(j),
                            self.basis_name(k),
                            self.basis_name(i),
                            self.basis_name(j),
                            self.basis_name(k)
                        ));
                        break 'outer;
                    }
                }
            }
        }
        checks.record("associativity", assoc_witness.is_none(), assoc_witness.unwrap_or_default());

        let powers = self.power_spans();
        let vanishing_at = powers.iter().position(|p| p.is_empty()).map(|i| i + 1);
        match vanishing_at {
            Some(v) if v == self.nilpotency_index || (n == 0 && self.nilpotency_index == 1) => {
                checks.pass("nilpotency");
            }
            Some(v) => checks.fail(
                "nilpotency",
                format!("m^{} = 0 but stored nilpotency index is {}", v, self.nilpotency_index),
            ),
            None => checks.fail(
                "nilpotency",
                format!("m^{} != 0; the ideal is not nilpotent", powers.len()),
            ),
        }
        checks
    }
}

fn mvec_dense(v: &MVec, n: usize) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); n];
    for (&i, c) in v {
        out[i] = c.clone();
    }
    out
}

fn var_list(k: usize) -> String {
    (1..=k).map(|i| format!("e{}", i)).collect::<Vec<_>>().join(",")
}

fn monomial_name(exponents: &[usize]) -> String {
    let mut parts = Vec::new();
    for (i, &e) in exponents.iter().enumerate() {
        match e {
            0 => {}
            1 => parts.push(format!("e{}", i + 1)),
            _ => parts.push(format!("e{}^{}", i + 1, e)),
        }
    }
    parts.join("*")
}

fn gen_monomials(
    vars: usize,
    degree: usize,
    current: &mut Vec<usize>,
    pos: usize,
    remaining: usize,
    out: &mut Vec<Vec<usize>>,
) {
    if pos == vars {
        if remaining == 0 {
            out.push(current.clone());
        }
        return;
    }
    // graded-lex within a degree: highest power of the earliest variable first
    for e in (0..=remaining).rev() {
        current[pos] = e;
        gen_monomials(vars, degree, current, pos + 1, remaining - e, out);
    }
    current[pos] = 0;
}

/// Element of a fixed Artin algebra: a rational multiple of 1 plus a sparse
/// m_A part.
#[derive(Debug, Clone)]
pub struct ArtinElement {
    pub algebra: Arc<ArtinAlgebra>,
    pub unit: Rat,
    pub nil: MVec,
}

impl PartialEq for ArtinElement {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.algebra, &other.algebra) && self.unit == other.unit && self.nil == other.nil
    }
}

impl ArtinElement {
    pub fn zero(algebra: Arc<ArtinAlgebra>) -> Self {
        ArtinElement { algebra, unit: Rat::zero(), nil: MVec::new() }
    }

    pub fn one(algebra: Arc<ArtinAlgebra>) -> Self {
        ArtinElement { algebra, unit: Rat::from_integer(1.into()), nil: MVec::new() }
    }

    pub fn basis(algebra: Arc<ArtinAlgebra>, i: usize) -> Self {
        let mut nil = MVec::new();
        nil.insert(i, Rat::from_integer(1.into()));
        ArtinElement { algebra, unit: Rat::zero(), nil }
    }

    pub fn is_zero(&self) -> bool {
        self.unit.is_zero() && self.nil.is_empty()
    }

    fn same_parent(&self, other: &ArtinElement) -> Result<()> {
        if Arc::ptr_eq(&self.algebra, &other.algebra) {
            Ok(())
        } else {
            Err(Error::ArtinMismatch)
        }
    }

    pub fn add(&self, other: &ArtinElement) -> Result<ArtinElement> {
        self.same_parent(other)?;
        let mut nil = self.nil.clone();
        for (&i, c) in &other.nil {
            let entry = nil.entry(i).or_insert_with(Rat::zero);
            *entry += c;
        }
        nil.retain(|_, c| !c.is_zero());
        Ok(ArtinElement { algebra: self.algebra.clone(), unit: &self.unit + &other.unit, nil })
    }

    pub fn mul(&self, other: &ArtinElement) -> Result<ArtinElement> {
        self.same_parent(other)?;
        let mut nil = self.algebra.mul_mvec(&self.nil, &other.nil);
        for (&i, c) in &other.nil {
            let entry = nil.entry(i).or_insert_with(Rat::zero);
            *entry += &self.unit * c;
        }
        for (&i, c) in &self.nil {
            let entry = nil.entry(i).or_insert_with(Rat::zero);
            *entry += &other.unit * c;
        }
        nil.retain(|_, c| !c.is_zero());
        Ok(ArtinElement {
            algebra: self.algebra.clone(),
            unit: &self.unit * &other.unit,
            nil,
        })
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if !self.unit.is_zero() {
            parts.push(format!("{}", self.unit));
        }
        for (&i, c) in &self.nil {
            parts.push(format!("{}*{}", c, self.algebra.basis_name(i)));
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn dual_numbers() {
        let a = ArtinAlgebra::truncated_poly(1, 2).unwrap();
        assert_eq!(a.dim_m(), 1);
        assert!(a.mul_basis(0, 0).is_empty());
        assert!(a.check().ok());
    }

    #[test]
    fn eps_cubed() {
        let a = ArtinAlgebra::truncated_poly(1, 3).unwrap();
        assert_eq!(a.dim_m(), 2);
        let e = ArtinElement::basis(a.clone(), 0);
        let e2 = e.mul(&e).unwrap();
        assert_eq!(e2, ArtinElement::basis(a.clone(), 1));
        assert!(e2.mul(&e).unwrap().is_zero());
        assert!(a.check().ok());
    }

    #[test]
    fn two_vars_order_three() {
        let a = ArtinAlgebra::truncated_poly(2, 3).unwrap();
        assert_eq!(a.dim_m(), 5);
        assert_eq!(a.basis_name(0), "e1");
        assert_eq!(a.basis_name(1), "e2");
        assert_eq!(a.basis_name(2), "e1^2");
        assert_eq!(a.basis_name(3), "e1*e2");
        assert_eq!(a.basis_name(4), "e2^2");
        assert!(a.check().ok());
        assert_eq!(a.nilpotency_index(), 3);

        // (e1+e2)^2 = e1^2 + 2 e1 e2 + e2^2
        let s = ArtinElement::basis(a.clone(), 0).add(&ArtinElement::basis(a.clone(), 1)).unwrap();
        let sq = s.mul(&s).unwrap();
        assert_eq!(sq.nil.get(&2), Some(&rat(1)));
        assert_eq!(sq.nil.get(&3), Some(&rat(2)));
        assert_eq!(sq.nil.get(&4), Some(&rat(1)));
    }

    #[test]
    fn order_one_rejected() {
        assert!(ArtinAlgebra::truncated_poly(1, 1).is_err());
    }

    #[test]
    fn idempotent_table_fails_nilpotency() {
        let mut table = BTreeMap::new();
        let mut v = MVec::new();
        v.insert(0, rat(1));
        table.insert((0, 0), v);
        let a = ArtinAlgebra::from_table("bad", vec!["e".to_string()], table, 2);
        let checks = a.check();
        assert!(!checks.ok());
        assert!(checks.items.iter().any(|c| c.name == "nilpotency" && !c.passed));
    }

    #[test]
    fn parent_mismatch_rejected() {
        let a = ArtinAlgebra::truncated_poly(1, 3).unwrap();
        let b = ArtinAlgebra::truncated_poly(1, 3).unwrap();
        let x = ArtinElement::basis(a, 0);
        let y = ArtinElement::basis(b, 0);
        assert!(x.mul(&y).is_err());
    }
}
