//! Finite-dimensional integer-graded vector spaces, sparse elements, and
//! degree-homogeneous linear maps stored as one block per degree.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Rat;

/// Position of a basis vector: degree and index within that degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Key {
    pub deg: i32,
    pub idx: usize,
}

impl Key {
    pub fn new(deg: i32, idx: usize) -> Self {
        Key { deg, idx }
    }
}

#[derive(Debug, Clone)]
pub struct GradedVectorSpace {
    name: String,
    degrees: BTreeMap<i32, Vec<String>>,
    index: HashMap<String, Key>,
}

impl GradedVectorSpace {
    pub fn new(name: impl Into<String>, degrees: BTreeMap<i32, Vec<String>>) -> Result<Arc<Self>> {
        let name = name.into();
        let mut index = HashMap::new();
        let degrees: BTreeMap<i32, Vec<String>> =
            degrees.into_iter().filter(|(_, v)| !v.is_empty()).collect();
        for (&deg, names) in &degrees {
            for (idx, n) in names.iter().enumerate() {
                if index.insert(n.clone(), Key::new(deg, idx)).is_some() {
                    return Err(Error::DuplicateName(n.clone()));
                }
            }
        }
        Ok(Arc::new(GradedVectorSpace { name, degrees, index }))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self, deg: i32) -> usize {
        self.degrees.get(&deg).map_or(0, |v| v.len())
    }

    pub fn total_dim(&self) -> usize {
        self.degrees.values().map(|v| v.len()).sum()
    }

    pub fn degrees(&self) -> impl Iterator<Item = i32> + '_ {
        self.degrees.keys().copied()
    }

    pub fn min_degree(&self) -> Option<i32> {
        self.degrees.keys().next().copied()
    }

    pub fn max_degree(&self) -> Option<i32> {
        self.degrees.keys().next_back().copied()
    }

    /// Width of the degree window; 0 for the zero space.
    pub fn amplitude(&self) -> u32 {
        match (self.min_degree(), self.max_degree()) {
            (Some(a), Some(b)) => (b - a) as u32,
            _ => 0,
        }
    }

    pub fn basis_name(&self, key: Key) -> &str {
        &self.degrees[&key.deg][key.idx]
    }

    pub fn lookup(&self, name: &str) -> Option<Key> {
        self.index.get(name).copied()
    }

    pub fn keys_of_degree(&self, deg: i32) -> Vec<Key> {
        (0..self.dim(deg)).map(|i| Key::new(deg, i)).collect()
    }

    pub fn all_keys(&self) -> Vec<Key> {
        self.degrees
            .iter()
            .flat_map(|(&d, v)| (0..v.len()).map(move |i| Key::new(d, i)))
            .collect()
    }

    pub fn basis_vector(&self, key: Key) -> Vector {
        let mut v = Vector::zero();
        v.set(key, Rat::from_integer(1.into()));
        v
    }
}

/// Sparse element of a graded vector space; may be inhomogeneous.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vector {
    coords: BTreeMap<Key, Rat>,
}

impl Vector {
    pub fn zero() -> Self {
        Vector::default()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn set(&mut self, key: Key, value: Rat) {
        if value.is_zero() {
            self.coords.remove(&key);
        } else {
            self.coords.insert(key, value);
        }
    }

    pub fn add_term(&mut self, key: Key, value: &Rat) {
        if value.is_zero() {
            return;
        }
        let entry = self.coords.entry(key).or_insert_with(Rat::zero);
        *entry += value;
        if entry.is_zero() {
            self.coords.remove(&key);
        }
    }

    pub fn coeff(&self, key: Key) -> Rat {
        self.coords.get(&key).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Key, &Rat)> {
        self.coords.iter()
    }

    pub fn add(&self, other: &Vector) -> Vector {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            out.add_term(*k, v);
        }
        out
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            out.add_term(*k, &(-v.clone()));
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> Vector {
        if c.is_zero() {
            return Vector::zero();
        }
        let mut out = Vector::zero();
        for (k, v) in self.iter() {
            out.set(*k, c * v);
        }
        out
    }

    pub fn neg(&self) -> Vector {
        self.scale(&-Rat::from_integer(1.into()))
    }

    /// The single degree of a homogeneous element, if it is homogeneous.
    pub fn degree(&self) -> Option<i32> {
        let mut degs = self.coords.keys().map(|k| k.deg);
        let first = degs.next()?;
        if degs.all(|d| d == first) {
            Some(first)
        } else {
            None
        }
    }

    pub fn homogeneous_part(&self, deg: i32) -> Vector {
        let mut out = Vector::zero();
        for (k, v) in self.iter().filter(|(k, _)| k.deg == deg) {
            out.set(*k, v.clone());
        }
        out
    }

    pub fn degrees_present(&self) -> Vec<i32> {
        let mut degs: Vec<i32> = self.coords.keys().map(|k| k.deg).collect();
        degs.dedup();
        degs
    }

    pub fn to_dense(&self, space: &GradedVectorSpace, deg: i32) -> Vec<Rat> {
        let mut out = vec![Rat::zero(); space.dim(deg)];
        for (k, v) in self.iter() {
            if k.deg == deg {
                out[k.idx] = v.clone();
            }
        }
        out
    }

    pub fn from_dense(deg: i32, coords: &[Rat]) -> Vector {
        let mut out = Vector::zero();
        for (idx, c) in coords.iter().enumerate() {
            if !c.is_zero() {
                out.set(Key::new(deg, idx), c.clone());
            }
        }
        out
    }

    pub fn describe(&self, space: &GradedVectorSpace) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (k, v) in self.iter() {
            parts.push(format!("{}*{}", v, space.basis_name(*k)));
        }
        parts.join(" + ")
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> =
            self.iter().map(|(k, v)| format!("{}*({},{})", v, k.deg, k.idx)).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Degree-homogeneous linear map between graded spaces, one rational block
/// per source degree.
#[derive(Debug, Clone)]
pub struct GradedMap {
    pub source: Arc<GradedVectorSpace>,
    pub target: Arc<GradedVectorSpace>,
    pub degree: i32,
    /// block for source degree `i`: rows = dim target(i+degree), cols = dim source(i)
    blocks: BTreeMap<i32, Mat>,
}

impl GradedMap {
    pub fn zero(
        source: Arc<GradedVectorSpace>,
        target: Arc<GradedVectorSpace>,
        degree: i32,
    ) -> Self {
        let mut blocks = BTreeMap::new();
        for i in source.degrees() {
            if target.dim(i + degree) > 0 {
                blocks.insert(i, Mat::zeros(target.dim(i + degree), source.dim(i)));
            }
        }
        GradedMap { source, target, degree, blocks }
    }

    pub fn identity(space: Arc<GradedVectorSpace>) -> Self {
        let mut m = GradedMap::zero(space.clone(), space.clone(), 0);
        for i in space.degrees() {
            m.blocks.insert(i, Mat::identity(space.dim(i)));
        }
        m
    }

    /// Build from images of basis vectors.
    pub fn from_images<F>(
        source: Arc<GradedVectorSpace>,
        target: Arc<GradedVectorSpace>,
        degree: i32,
        mut image: F,
    ) -> Result<Self>
    where
        F: FnMut(Key) -> Vector,
    {
        let mut m = GradedMap::zero(source.clone(), target.clone(), degree);
        for key in source.all_keys() {
            let img = image(key);
            for (k, _) in img.iter() {
                if k.deg != key.deg + degree {
                    return Err(Error::invalid(format!(
                        "image of degree-{} basis vector has a component in degree {} (map degree {})",
                        key.deg, k.deg, degree
                    )));
                }
            }
            if img.is_zero() {
                continue;
            }
            let block = m.blocks.entry(key.deg).or_insert_with(|| {
                Mat::zeros(target.dim(key.deg + degree), source.dim(key.deg))
            });
            for (k, v) in img.iter() {
                block[(k.idx, key.idx)] = v.clone();
            }
        }
        Ok(m)
    }

    pub fn block(&self, source_deg: i32) -> Option<&Mat> {
        self.blocks.get(&source_deg)
    }

    pub fn set_entry(&mut self, from: Key, to: Key, value: Rat) {
        debug_assert_eq!(to.deg, from.deg + self.degree);
        let block = self.blocks.entry(from.deg).or_insert_with(|| {
            Mat::zeros(self.target.dim(from.deg + self.degree), self.source.dim(from.deg))
        });
        block[(to.idx, from.idx)] = value;
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        let mut out = Vector::zero();
        for (key, coeff) in v.iter() {
            if let Some(block) = self.blocks.get(&key.deg) {
                for row in 0..block.rows {
                    let entry = &block[(row, key.idx)];
                    if !entry.is_zero() {
                        out.add_term(Key::new(key.deg + self.degree, row), &(entry * coeff));
                    }
                }
            }
        }
        out
    }

    pub fn apply_key(&self, key: Key) -> Vector {
        let mut v = Vector::zero();
        v.set(key, Rat::from_integer(1.into()));
        self.apply(&v)
    }

    pub fn compose(&self, inner: &GradedMap) -> GradedMap {
        let mut out =
            GradedMap::zero(inner.source.clone(), self.target.clone(), self.degree + inner.degree);
        for key in inner.source.all_keys() {
            let img = self.apply(&inner.apply_key(key));
            for (k, val) in img.iter() {
                out.set_entry(key, *k, val.clone());
            }
        }
        out
    }

    pub fn add(&self, other: &GradedMap) -> GradedMap {
        assert_eq!(self.degree, other.degree);
        let mut out = GradedMap::zero(self.source.clone(), self.target.clone(), self.degree);
        for key in self.source.all_keys() {
            let img = self.apply_key(key).add(&other.apply_key(key));
            for (k, val) in img.iter() {
                out.set_entry(key, *k, val.clone());
            }
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> GradedMap {
        let mut out = GradedMap::zero(self.source.clone(), self.target.clone(), self.degree);
        for key in self.source.all_keys() {
            let img = self.apply_key(key).scale(c);
            for (k, val) in img.iter() {
                out.set_entry(key, *k, val.clone());
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.values().all(|b| b.is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    pub fn space(name: &str, degs: &[(i32, &[&str])]) -> Arc<GradedVectorSpace> {
        let mut m = BTreeMap::new();
        for (d, names) in degs {
            m.insert(*d, names.iter().map(|s| s.to_string()).collect());
        }
        GradedVectorSpace::new(name, m).unwrap()
    }

    #[test]
    fn space_indexing() {
        let v = space("V", &[(0, &["e0", "f0"]), (1, &["e1"])]);
        assert_eq!(v.dim(0), 2);
        assert_eq!(v.dim(1), 1);
        assert_eq!(v.dim(5), 0);
        assert_eq!(v.lookup("f0"), Some(Key::new(0, 1)));
        assert_eq!(v.amplitude(), 1);
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut m = BTreeMap::new();
        m.insert(0, vec!["a".to_string()]);
        m.insert(1, vec!["a".to_string()]);
        assert!(GradedVectorSpace::new("V", m).is_err());
    }

    #[test]
    fn map_apply_compose() {
        let v = space("V", &[(0, &["e0"]), (1, &["e1"])]);
        let d = GradedMap::from_images(v.clone(), v.clone(), 1, |k| {
            if k.deg == 0 {
                let mut out = Vector::zero();
                out.set(Key::new(1, 0), rat(1));
                out
            } else {
                Vector::zero()
            }
        })
        .unwrap();
        let e0 = v.basis_vector(Key::new(0, 0));
        assert_eq!(d.apply(&e0).coeff(Key::new(1, 0)), rat(1));
        let dd = d.compose(&d);
        assert!(dd.is_zero());
    }
}
