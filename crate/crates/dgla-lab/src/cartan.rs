//! Cartan homotopies and the structures built on them: the bijection with
//! morphisms out of the cone, the affine lift attached to a marked cocycle,
//! formal period data with their obstruction-annihilation property, and
//! formal Abel-Jacobi data with the induced map on cohomology.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;

use crate::check::CheckList;
use crate::complex::{Cohomology, DGPair};
use crate::dgla::{
    end_algebra, end_elem_preserves, AffDgla, ConeAlgebra, DGLAMorphism, DGLieAlgebra, EndDgla,
};
use crate::error::{Error, Result};
use crate::forms::Form;
use crate::functors::{exp_act, DeformedSubcomplex, GrassFunctor};
use crate::graded::{GradedMap, Vector};
#[cfg(test)]
use crate::graded::Key;
use crate::mc::{mc_lift_probe, LiftOutcome, McContext, NilElem};
use crate::scalar::{rat, Rat};
use crate::tw::{jacobian_square, JacobianSquare, Tw2Element};

/// A degree -1 linear map i: g -> h with [i_x, i_y] = 0 and
/// i_{[x,y]} = [i_x, d i_y]; its boundary l = d i + i d is then a morphism
/// of DG-Lie algebras.
pub struct CartanHomotopy {
    pub source: Arc<DGLieAlgebra>,
    pub target: Arc<DGLieAlgebra>,
    pub i: GradedMap,
}

impl CartanHomotopy {
    pub fn new(source: Arc<DGLieAlgebra>, target: Arc<DGLieAlgebra>, i: GradedMap) -> Result<Self> {
        if i.degree != -1 {
            return Err(Error::invalid("a Cartan homotopy has degree -1"));
        }
        Ok(CartanHomotopy { source, target, i })
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        self.i.apply(x)
    }

    /// Boundary l = d o i + i o d as a graded map of degree 0.
    pub fn boundary(&self) -> GradedMap {
        let di = self.target.complex.d.compose(&self.i);
        let id = self.i.compose(&self.source.complex.d);
        di.add(&id)
    }

    pub fn boundary_morphism(&self) -> DGLAMorphism {
        DGLAMorphism::new("l", self.source.clone(), self.target.clone(), self.boundary())
    }

    /// d_target of i_x, as an element.
    fn d_i(&self, x: &Vector) -> Vector {
        self.target.d(&self.i.apply(x))
    }

    /// The defining identities on all basis pairs, the boundary being a
    /// DGLA morphism, and the tensor extension to interval forms re-checked
    /// on sampled form pairs.
    pub fn check(&self, rng: &mut impl rand::Rng) -> CheckList {
        let mut checks = CheckList::new();
        let s = self.source.space();
        let mut w1 = None;
        let mut w2 = None;
        for a in s.all_keys() {
            for b in s.all_keys() {
                let xa = s.basis_vector(a);
                let xb = s.basis_vector(b);
                let ii = self.target.bracket(&self.i.apply(&xa), &self.i.apply(&xb));
                if !ii.is_zero() && w1.is_none() {
                    w1 = Some(format!("[i_{}, i_{}] != 0", s.basis_name(a), s.basis_name(b)));
                }
                let lhs = self.i.apply(&self.source.bracket_keys(a, b));
                let rhs = self.target.bracket(&self.i.apply(&xa), &self.d_i(&xb));
                if lhs != rhs && w2.is_none() {
                    w2 = Some(format!(
                        "i_[{x},{y}] != [i_{x}, d i_{y}]",
                        x = s.basis_name(a),
                        y = s.basis_name(b)
                    ));
                }
            }
        }
        checks.record("cartan: [i_x, i_y] = 0", w1.is_none(), w1.unwrap_or_default());
        checks.record("cartan: i_[x,y] = [i_x, d i_y]", w2.is_none(), w2.unwrap_or_default());
        checks.merge(self.boundary_morphism().check());

        // tensor extension to forms, sampled: Ii(omega (x) x) =
        // (-1)^{|omega|} omega (x) i_x keeps the identities
        let mut ext_ok = true;
        let ext = |f: &Form, this: &Self| -> Form {
            f.map_coefficients(-1, |k| this.i.apply_key(k))
        };
        let d_ext = |f: &Form, this: &Self| -> Form {
            ext(f, this).d(&this.target.complex)
        };
        for _ in 0..12 {
            let a = random_g_form(&self.source, rng);
            let b = random_g_form(&self.source, rng);
            let t = self.target.clone();
            let br_ii = ext(&a, self).product_with(&ext(&b, self), None, |k1, k2| {
                t.bracket_keys(k1, k2)
            });
            if !br_ii.is_zero() {
                ext_ok = false;
            }
            let src = self.source.clone();
            let lhs = ext(
                &a.product_with(&b, None, |k1, k2| src.bracket_keys(k1, k2)),
                self,
            );
            let rhs = ext(&a, self).product_with(&d_ext(&b, self), None, |k1, k2| {
                t.bracket_keys(k1, k2)
            });
            if lhs != rhs {
                ext_ok = false;
            }
        }
        checks.record(
            "cartan: interval-form extension keeps the identities",
            ext_ok,
            "sampled form pair violates an identity",
        );
        checks
    }

    /// The DGLA morphism cone(Id_g) -> h determined by i: base part l,
    /// flat part i.
    pub fn to_cone_morphism(&self, cone: &ConeAlgebra) -> Result<DGLAMorphism> {
        if !Arc::ptr_eq(&cone.base, &self.source) {
            return Err(Error::invalid("cone is over a different algebra"));
        }
        let l = self.boundary();
        let cone_space = cone.dgla.space().clone();
        let source = self.source.clone();
        let map = GradedMap::from_images(
            cone_space.clone(),
            self.target.space().clone(),
            0,
            |key| {
                let v = cone_space.basis_vector(key);
                let (base, flat) = cone.split(&v);
                l.apply(&base).add(&self.i.apply(&flat))
            },
        )?;
        let _ = source;
        Ok(DGLAMorphism::new("l+i[1]", cone.dgla.clone(), self.target.clone(), map))
    }

    /// Recover a Cartan homotopy from a morphism out of the cone by
    /// restriction along flat.
    pub fn from_cone_morphism(
        cone: &ConeAlgebra,
        rho: &DGLAMorphism,
    ) -> Result<CartanHomotopy> {
        let base_space = cone.base.space().clone();
        let i = GradedMap::from_images(
            base_space.clone(),
            rho.target.space().clone(),
            -1,
            |key| rho.apply(&cone.flat(&base_space.basis_vector(key))),
        )?;
        CartanHomotopy::new(cone.base.clone(), rho.target.clone(), i)
    }
}

fn random_g_form(g: &Arc<DGLieAlgebra>, rng: &mut impl rand::Rng) -> Form {
    use crate::forms::Mono;
    let mut f = Form::zero();
    for k in g.space().all_keys() {
        for mono in [Mono::t(0), Mono::t(1), Mono::t(2), Mono::t_dt(0), Mono::t_dt(1)] {
            if rng.random::<f64>() < 0.3 {
                let n = rng.random_range(-2..=2i64);
                f.add_term(mono, k, 0, &rat(n));
            }
        }
    }
    f
}

/// Lift a Cartan homotopy i: g -> End(V) along a closed degree-0 vector v:
/// i^v_x = (i_x, -i_x(v)) into Aff(V); the boundary is (l_x, -l_x(v)).
pub fn lift_iv(
    i: &CartanHomotopy,
    end: &EndDgla,
    aff: &AffDgla,
    v: &Vector,
) -> Result<CartanHomotopy> {
    if !v.is_zero() {
        if v.degree() != Some(0) {
            return Err(Error::invalid("the marked vector must have degree 0"));
        }
        if !end.v.d.apply(v).is_zero() {
            return Err(Error::invalid("the marked vector must be closed"));
        }
    }
    let source_space = i.source.space().clone();
    let map = GradedMap::from_images(
        source_space.clone(),
        aff.dgla.space().clone(),
        -1,
        |key| {
            let ix = i.i.apply_key(key);
            let translation = end.act(&ix, v).neg();
            // re-express the End part in the (possibly smaller) End of aff
            let mut endpart = Vector::zero();
            for (k, c) in ix.iter() {
                let (from, to) = end.parts(*k);
                let tk = aff.end.key(from, to).expect("aff End misses an operator");
                endpart.add_term(tk, c);
            }
            aff.embed(&endpart, &translation)
        },
    )?;
    CartanHomotopy::new(i.source.clone(), aff.dgla.clone(), map)
}

/// A formal period datum: (g, V, F, i) with l_x(F) contained in F for every
/// basis element x.
pub struct PeriodDatum {
    pub g: Arc<DGLieAlgebra>,
    pub pair: DGPair,
    pub end: EndDgla,
    pub i: CartanHomotopy,
}

impl PeriodDatum {
    pub fn new(g: Arc<DGLieAlgebra>, pair: DGPair, end: EndDgla, i: CartanHomotopy) -> Result<Self> {
        if !Arc::ptr_eq(&i.target, &end.dgla) {
            return Err(Error::invalid("period datum expects the homotopy into the given End(V)"));
        }
        Ok(PeriodDatum { g, pair, end, i })
    }

    pub fn validate(&self, rng: &mut impl rand::Rng) -> CheckList {
        let mut checks = self.i.check(rng);
        let l = self.i.boundary();
        let mut witness = None;
        for key in self.g.space().all_keys() {
            let lx = l.apply_key(key);
            if !end_elem_preserves(&self.end, &self.pair, &lx) {
                witness = Some(format!(
                    "l_{} does not preserve F",
                    self.g.space().basis_name(key)
                ));
                break;
            }
        }
        checks.record("period: l_x(F) in F", witness.is_none(), witness.unwrap_or_default());
        checks
    }

    /// i_x for a coefficient element x in g (x) m_A, as an element of
    /// End^0(V) (x) m_A.
    pub fn i_nil(&self, x: &NilElem) -> NilElem {
        x.map_coefficients(|k| self.i.i.apply_key(k))
    }

    pub fn l_nil(&self, x: &NilElem) -> NilElem {
        let l = self.i.boundary();
        x.map_coefficients(|k| l.apply_key(k))
    }

    /// The period map on Maurer-Cartan elements: x -> e^{i_x}(F (x) A).
    pub fn period_map_mc(
        &self,
        ctx: &McContext,
        x: &NilElem,
    ) -> Result<DeformedSubcomplex> {
        if !ctx.mc_check(x) {
            return Err(Error::check("period", "input fails the Maurer-Cartan equation"));
        }
        let ix = self.i_nil(x);
        let artin = ctx.artin.clone();
        let basis = self
            .pair
            .complex
            .space
            .all_keys()
            .into_iter()
            .filter(|k| self.pair.contains(*k))
            .map(|k| {
                let f = NilElem::term(k, 0, rat(1));
                (k, exp_act(&self.end, &artin, &ix, &f))
            })
            .collect();
        let out = DeformedSubcomplex { artin, basis };
        if !out.is_subcomplex(&self.pair) {
            return Err(Error::check("period", "e^{i_x}(F (x) A) is not a subcomplex"));
        }
        Ok(out)
    }

    /// The same value through the Grassmann functor: phi applied to the
    /// Maurer-Cartan pair (l_x, e^{-i_x}).
    pub fn period_map_via_phi(
        &self,
        ctx: &McContext,
        x: &NilElem,
    ) -> Result<DeformedSubcomplex> {
        let grass = GrassFunctor::new(
            self.pair.clone(),
            end_algebra(&self.pair.complex, &[])?,
            ctx.artin.clone(),
        );
        let ix = self.i_nil(x);
        let xi = translate_nil(&self.end, &grass.end, &ix).neg();
        // the pair condition e^{xi} * 0 = l_x holds for Maurer-Cartan x;
        // verify it exactly before applying phi
        let end_ctx = McContext::new(grass.end.dgla.clone(), ctx.artin.clone());
        let value = end_ctx.gauge_act(&xi, &NilElem::zero());
        let lx = translate_nil(&self.end, &grass.end, &self.l_nil(x));
        if value != lx {
            return Err(Error::check(
                "period",
                "e^{-i_x} * 0 differs from l_x; the Cartan pair is broken",
            ));
        }
        grass.phi(&xi)
    }

    /// Obstruction annihilation: every primary obstruction class of g dies
    /// under H^2(i): H^2(g) -> Hom^1(H(F), H(V/F)). Requires H(F) -> H(V)
    /// injective.
    pub fn obstruction_check(&self) -> Result<PeriodObstructionReport> {
        let f_complex = self.pair.sub_complex()?;
        let fh = f_complex.cohomology();
        let vh = self.pair.complex.cohomology();
        // injectivity of H(F) -> H(V)
        for deg in f_complex.space.degrees().collect::<Vec<_>>() {
            let mut images = Vec::new();
            for rep in fh.representatives(deg) {
                // rename into V
                let mut in_v = Vector::zero();
                for (k, c) in rep.iter() {
                    let name = f_complex.space.basis_name(*k);
                    in_v.set(self.pair.complex.space.lookup(name).unwrap(), c.clone());
                }
                let coords = vh
                    .project(&in_v, deg)
                    .ok_or_else(|| Error::check("period", "H(F) image not closed in V"))?;
                images.push(coords);
            }
            if !images.is_empty() {
                let n = images[0].len().max(1);
                let rank = crate::linalg::span_canonical(&images, n).rows;
                if rank != images.len() {
                    return Err(Error::check(
                        "period",
                        format!("H^{}(F) -> H^{}(V) is not injective", deg, deg),
                    ));
                }
            }
        }

        let gh = self.g.complex.cohomology();
        let mut entries = Vec::new();
        let mut all_annihilated = true;
        // quadratic obstruction map scanned on basis classes and pairwise
        // sums (polarization covers the whole quadric in characteristic 0)
        let reps1 = gh.representatives(1);
        let mut probes: Vec<Vector> = reps1.clone();
        for i in 0..reps1.len() {
            for j in (i + 1)..reps1.len() {
                probes.push(reps1[i].add(&reps1[j]));
            }
        }
        for probe in &probes {
            match mc_lift_probe(&self.g, probe, 3)? {
                LiftOutcome::Lifted(_) => {
                    entries.push(ObstructionEntry {
                        direction: probe.clone(),
                        obstruction: None,
                        annihilated: true,
                    });
                }
                LiftOutcome::Obstructed { obstruction, .. } => {
                    let image = self.h2i_of(&obstruction)?;
                    let annihilated = image
                        .iter()
                        .all(|(_, m)| m.iter().all(|row| row.iter().all(|c| c.is_zero())));
                    if !annihilated {
                        all_annihilated = false;
                    }
                    entries.push(ObstructionEntry {
                        direction: probe.clone(),
                        obstruction: Some(obstruction),
                        annihilated,
                    });
                }
            }
        }
        // injectivity of H(i) as maps H^k(g) -> Hom^{k-1}(H(F), H(V/F))
        let mut h_of_i_injective = true;
        for deg in self.g.space().degrees().collect::<Vec<_>>() {
            let mut rows = Vec::new();
            for rep in gh.representatives(deg) {
                let image = self.h2i_of(&rep)?;
                rows.push(flatten_hom_matrix(&image));
            }
            if rows.is_empty() {
                continue;
            }
            let width = rows[0].len().max(1);
            let rank = crate::linalg::span_canonical(&rows, width).rows;
            if rank != rows.len() {
                h_of_i_injective = false;
            }
        }
        Ok(PeriodObstructionReport { entries, all_annihilated, h_of_i_injective })
    }

    /// The induced map of a degree-k cocycle z: the chain map
    /// i_z: F -> V/F on cohomology, returned as one matrix per F-degree.
    pub fn h2i_of(&self, z: &Vector) -> Result<Vec<(i32, Vec<Vec<Rat>>)>> {
        let f_complex = self.pair.sub_complex()?;
        let fh = f_complex.cohomology();
        let (quotient, projection) = self.pair.quotient_complex()?;
        let qh = quotient.cohomology();
        let iz = self.i.i.apply(z);
        let mut out = Vec::new();
        for deg in f_complex.space.degrees().collect::<Vec<_>>() {
            let reps = fh.representatives(deg);
            if reps.is_empty() {
                continue;
            }
            let mut matrix = Vec::new();
            for rep in &reps {
                let mut in_v = Vector::zero();
                for (k, c) in rep.iter() {
                    let name = f_complex.space.basis_name(*k);
                    in_v.set(self.pair.complex.space.lookup(name).unwrap(), c.clone());
                }
                let moved = self.end.act(&iz, &in_v);
                let in_q = projection.apply(&moved);
                let target_deg = moved.degree().unwrap_or(deg + z.degree().unwrap_or(0) - 1);
                let coords = qh
                    .project(&in_q, target_deg)
                    .ok_or_else(|| Error::check("period", "i_z image is not closed in V/F"))?;
                matrix.push(coords);
            }
            out.push((deg, matrix));
        }
        Ok(out)
    }
}

fn flatten_hom_matrix(m: &[(i32, Vec<Vec<Rat>>)]) -> Vec<Rat> {
    let mut out = Vec::new();
    for (_, rows) in m {
        for row in rows {
            out.extend(row.iter().cloned());
        }
    }
    out
}

pub struct ObstructionEntry {
    pub direction: Vector,
    pub obstruction: Option<Vector>,
    pub annihilated: bool,
}

pub struct PeriodObstructionReport {
    pub entries: Vec<ObstructionEntry>,
    pub all_annihilated: bool,
    pub h_of_i_injective: bool,
}

fn translate_nil(from: &EndDgla, to: &EndDgla, x: &NilElem) -> NilElem {
    let mut out = NilElem::zero();
    for ((k, a), c) in x.iter() {
        let (p, q) = from.parts(*k);
        out.add_term(to.key(p, q).expect("operator"), *a, c);
    }
    out
}

/// A formal Abel-Jacobi datum: a period datum plus a marked 0-cocycle v in
/// F and a basis-adapted sub-DGLA annihilating it under i.
pub struct AbelJacobiDatum {
    pub period: PeriodDatum,
    /// adapted sub-DGLA of g
    pub sub_g: DGPair,
    pub v: Vector,
}

impl AbelJacobiDatum {
    pub fn validate(&self, rng: &mut impl rand::Rng) -> CheckList {
        let mut checks = self.period.validate(rng);
        let vs = &self.period.pair.complex.space;
        // v in Z^0(F)
        let mut v_ok = self.v.degree().map_or(self.v.is_zero(), |d| d == 0);
        if !self.period.pair.complex.d.apply(&self.v).is_zero() {
            v_ok = false;
        }
        for (k, _) in self.v.iter() {
            if !self.period.pair.contains(*k) {
                v_ok = false;
            }
        }
        checks.record("aj: v in Z^0(F)", v_ok, format!("v = {}", self.v.describe(vs)));

        // sub-DGLA closure
        let gs = self.period.g.space();
        let mut closed = true;
        for &k in &self.sub_g.sub_keys {
            let img = self.period.g.d(&gs.basis_vector(k));
            for (kk, _) in img.iter() {
                if !self.sub_g.contains(*kk) {
                    closed = false;
                }
            }
            for &k2 in &self.sub_g.sub_keys {
                for (kk, _) in self.period.g.bracket_keys(k, k2).iter() {
                    if !self.sub_g.contains(*kk) {
                        closed = false;
                    }
                }
            }
        }
        checks.record("aj: g~ closed under d and bracket", closed, "subalgebra not closed");

        // i_x(v) = 0 for x in g~
        let mut annihilates = true;
        let mut witness = String::new();
        for &k in &self.sub_g.sub_keys {
            let ix = self.period.i.i.apply_key(k);
            let moved = self.period.end.act(&ix, &self.v);
            if !moved.is_zero() {
                annihilates = false;
                witness = format!("i_{}(v) = {}", gs.basis_name(k), moved.describe(vs));
                break;
            }
        }
        checks.record("aj: i_x(v) = 0 on g~", annihilates, witness);
        checks
    }

    /// Face identities of the commuting cube: on g~ both l_x(v) = 0 (upper
    /// face) and i_x(v) = 0 (lower face), so the restricted maps land in the
    /// sigma_0 images.
    pub fn cube_check(&self) -> CheckList {
        let mut checks = CheckList::new();
        let gs = self.period.g.space();
        let vs = &self.period.pair.complex.space;
        let l = self.period.i.boundary();
        let mut lower = None;
        let mut upper = None;
        for &k in &self.sub_g.sub_keys {
            let ix = self.period.i.i.apply_key(k);
            let iv = self.period.end.act(&ix, &self.v);
            if !iv.is_zero() && lower.is_none() {
                lower = Some(format!(
                    "i_{}(v) = {} != 0",
                    gs.basis_name(k),
                    iv.describe(vs)
                ));
            }
            let lx = l.apply_key(k);
            let lv = self.period.end.act(&lx, &self.v);
            if !lv.is_zero() && upper.is_none() {
                upper = Some(format!(
                    "l_{}(v) = {} != 0",
                    gs.basis_name(k),
                    lv.describe(vs)
                ));
            }
        }
        checks.record(
            "cube: lower face (i^v restricted to g~ equals sigma_0 of i)",
            lower.is_none(),
            lower.unwrap_or_default(),
        );
        checks.record(
            "cube: upper face (l^v restricted to g~ equals sigma_0 of l)",
            upper.is_none(),
            upper.unwrap_or_default(),
        );
        checks
    }

    /// Quotient complex g/g~ with cohomology, and the projection.
    pub fn relative_cohomology(&self) -> Result<(Arc<crate::complex::CochainComplex>, GradedMap, Cohomology)> {
        let (q, proj) = self.sub_g.quotient_complex()?;
        let h = q.cohomology();
        Ok((q, proj, h))
    }

    /// The Abel-Jacobi map in cohomology: [x] -> -[i_x(v) mod F], as a
    /// matrix per degree from H^{n-1}(g/g~) to H^{n-2}(V/F), together with
    /// the representative data used.
    pub fn aj_cohomology(&self) -> Result<AjCohomology> {
        let (gq, _gproj, gqh) = self.relative_cohomology()?;
        let (vq, vproj) = self.period.pair.quotient_complex()?;
        let vqh = vq.cohomology();
        let mut blocks = BTreeMap::new();
        for deg in gq.space.degrees().collect::<Vec<_>>() {
            let reps = gqh.representatives(deg);
            if reps.is_empty() {
                continue;
            }
            let mut matrix = Vec::new();
            for rep in &reps {
                let lifted = self.lift_class_rep(rep)?;
                let value = self.aj_value(&lifted)?;
                let coords = vqh
                    .project(&vproj.apply(&value), deg - 1)
                    .ok_or_else(|| Error::check("aj", "-i_x(v) is not closed mod F"))?;
                matrix.push(coords);
            }
            blocks.insert(deg, matrix);
        }
        Ok(AjCohomology { blocks, gqh, vqh })
    }

    /// Lift a quotient-class representative to g by basis names.
    pub fn lift_class_rep(&self, rep: &Vector) -> Result<Vector> {
        let (gq, _, _) = self.relative_cohomology()?;
        let mut lifted = Vector::zero();
        for (k, c) in rep.iter() {
            let name = gq.space.basis_name(*k);
            let kk = self
                .period
                .g
                .space()
                .lookup(name)
                .ok_or_else(|| Error::UnknownName(name.to_string()))?;
            lifted.set(kk, c.clone());
        }
        Ok(lifted)
    }

    /// -i_x(v) in V (the raw Abel-Jacobi value before passing mod F).
    pub fn aj_value(&self, x: &Vector) -> Result<Vector> {
        let ix = self.period.i.i.apply(x);
        Ok(self.period.end.act(&ix, &self.v).neg())
    }

    /// Well-definedness: shifting the representative by d(y) + z with z in
    /// g~ leaves the class unchanged.
    pub fn representative_invariance(&self, rng: &mut impl rand::Rng) -> Result<bool> {
        let (vq, vproj) = self.period.pair.quotient_complex()?;
        let vqh = vq.cohomology();
        let (gq, _, gqh) = self.relative_cohomology()?;
        for deg in gq.space.degrees().collect::<Vec<_>>() {
            for rep in gqh.representatives(deg) {
                let lifted = self.lift_class_rep(&rep)?;
                // random shift
                let mut y = Vector::zero();
                for k in self.period.g.space().keys_of_degree(deg - 1) {
                    if rng.random::<f64>() < 0.5 {
                        y.add_term(k, &rat(rng.random_range(-2..=2i64)));
                    }
                }
                let mut z = Vector::zero();
                for &k in &self.sub_g.sub_keys {
                    if k.deg == deg && rng.random::<f64>() < 0.5 {
                        z.add_term(k, &rat(rng.random_range(-2..=2i64)));
                    }
                }
                let shifted = lifted.add(&self.period.g.d(&y)).add(&z);
                let a = vproj.apply(&self.aj_value(&lifted)?);
                let b = vproj.apply(&self.aj_value(&shifted)?);
                let ca = vqh.project(&a, deg - 1);
                let cb = vqh.project(&b, deg - 1);
                if ca != cb || ca.is_none() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// The Thom-Whitney representative of a relative class in the double
    /// fiber of the Jacobian square: the image of
    /// (d x~, s d x~ + ds flat(d x~), d(t x~), s d(t x~) + ds flat(d(t x~)))
    /// under the Cartan-calculus morphism (flat parts via i^v, base parts
    /// via l^v, first column through End instead of Aff).
    pub fn tw2_rep_from_class(
        &self,
        jac: &JacobianSquare,
        x_tilde: &Vector,
    ) -> Result<Tw2Element> {
        use crate::forms::Mono;
        let g = &self.period.g;
        let dx = g.d(x_tilde);
        for (k, _) in dx.iter() {
            if !self.sub_g.contains(*k) {
                return Err(Error::check("aj", "input is not a relative cocycle"));
            }
        }
        let l = self.period.i.boundary();
        let i = &self.period.i.i;
        let end = &self.period.end;

        // encode an End(V)-valued operator in the Jacobian square algebras
        let enc_end_f = |op: &Vector| -> Vector {
            let mut out = Vector::zero();
            for (k, c) in op.iter() {
                let (p, q) = end.parts(*k);
                out.add_term(jac.end_f.key(p, q).expect("F-preserving operator"), c);
            }
            out
        };
        let enc_end = |op: &Vector| -> Vector {
            let mut out = Vector::zero();
            for (k, c) in op.iter() {
                let (p, q) = end.parts(*k);
                out.add_term(jac.end.key(p, q).expect("operator"), c);
            }
            out
        };
        let lv = |x: &Vector, aff: &AffDgla| -> Vector {
            let lx = l.apply(x);
            let trans = end.act(&lx, &self.v).neg();
            let mut endpart = Vector::zero();
            for (k, c) in lx.iter() {
                let (p, q) = end.parts(*k);
                endpart.add_term(aff.end.key(p, q).expect("operator"), c);
            }
            aff.embed(&endpart, &trans)
        };
        let iv = |x: &Vector, aff: &AffDgla| -> Vector {
            let ix = i.apply(x);
            let trans = end.act(&ix, &self.v).neg();
            let mut endpart = Vector::zero();
            for (k, c) in ix.iter() {
                let (p, q) = end.parts(*k);
                endpart.add_term(aff.end.key(p, q).expect("operator"), c);
            }
            aff.embed(&endpart, &trans)
        };

        // w00 = l_{dx} in End(V;F)
        let w00 = enc_end_f(&l.apply(&dx));
        // w01 = s l_{dx} + ds i_{dx} in End(V)
        let w01 = Form::from_vector(&enc_end(&l.apply(&dx)), Mono::s(1))
            .add(&Form::from_vector(&enc_end(&i.apply(&dx)), Mono::s_ds(0)));
        // w10 = dt l^v_{x} + t l^v_{dx} in Aff(V;F)
        let w10 = Form::from_vector(&lv(x_tilde, &jac.aff_f), Mono::t_dt(0))
            .add(&Form::from_vector(&lv(&dx, &jac.aff_f), Mono::t(1)));
        // w11 = s dt l^v_x + s t l^v_{dx} - ds dt i^v_x + t ds i^v_{dx}
        let w11 = Form::from_vector(
            &lv(x_tilde, &jac.aff),
            Mono { s_pow: 1, t_pow: 0, ds: false, dt: true },
        )
        .add(&Form::from_vector(
            &lv(&dx, &jac.aff),
            Mono { s_pow: 1, t_pow: 1, ds: false, dt: false },
        ))
        .sub(&Form::from_vector(
            &iv(x_tilde, &jac.aff),
            Mono { s_pow: 0, t_pow: 0, ds: true, dt: true },
        ))
        .add(&Form::from_vector(
            &iv(&dx, &jac.aff),
            Mono { s_pow: 0, t_pow: 1, ds: true, dt: false },
        ));
        let e = Tw2Element { w00, w01, w10, w11 };
        jac.square.membership(&e)?;
        Ok(e)
    }
}

pub struct AjCohomology {
    /// per degree n of H^n(g/g~): rows = class representatives, columns =
    /// coordinates in H^{n-1}(V/F)
    pub blocks: BTreeMap<i32, Vec<Vec<Rat>>>,
    pub gqh: Cohomology,
    pub vqh: Cohomology,
}

/// Build the Jacobian square of the datum's pair.
pub fn jacobian_of(datum: &AbelJacobiDatum) -> Result<JacobianSquare> {
    jacobian_square(&datum.period.pair)
}

/// Map e^{eps xi} to its canonical first-order class -[xi] in H^0(g/g~).
pub fn class_of_first_order_log(
    datum: &AbelJacobiDatum,
    xi: &Vector,
) -> Result<Option<Vec<Rat>>> {
    let (gq, gproj, gqh) = datum.relative_cohomology()?;
    let _ = gq;
    let projected = gproj.apply(xi).neg();
    Ok(gqh.project(&projected, 0))
}

pub use crate::dgla::cone_id;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::CochainComplex;
    use crate::dgla::aff_algebra;
    use crate::graded::GradedVectorSpace;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use std::collections::BTreeSet;

    fn space(name: &str, degs: &[(i32, &[&str])]) -> Arc<GradedVectorSpace> {
        let mut m = BTreeMap::new();
        for (d, names) in degs {
            m.insert(*d, names.iter().map(|s| s.to_string()).collect());
        }
        GradedVectorSpace::new(name, m).unwrap()
    }

    /// Fixture A1: g = <w deg 0, x deg 1>, d = 0, brackets 0;
    /// V = <em1 deg -1; e0, f0 deg 0; e1 deg 1>, d = 0; F = <e0, e1>;
    /// i_w = e0 -> em1, i_x = e0 -> f0; v = e0; g~ = 0.
    pub fn a1() -> AbelJacobiDatum {
        let gs = space("g", &[(0, &["w"]), (1, &["x"])]);
        let g = DGLieAlgebra::abelian("g", CochainComplex::zero_differential(gs.clone()));
        let vs = space("V", &[(-1, &["em1"]), (0, &["e0", "f0"]), (1, &["e1"])]);
        let vc = CochainComplex::zero_differential(vs.clone());
        let sub: BTreeSet<Key> =
            [vs.lookup("e0").unwrap(), vs.lookup("e1").unwrap()].into_iter().collect();
        let pair = DGPair::new(vc.clone(), sub, "F").unwrap();
        let end = end_algebra(&vc, &[]).unwrap();
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
        })
        .unwrap();
        let homotopy = CartanHomotopy::new(g.clone(), end.dgla.clone(), i).unwrap();
        let period = PeriodDatum::new(g.clone(), pair, end, homotopy).unwrap();
        let sub_g = DGPair::new(g.complex.clone(), BTreeSet::new(), "gt").unwrap();
        AbelJacobiDatum { period, sub_g, v: vs.basis_vector(e0) }
    }

    #[test]
    fn a1_validates() {
        let datum = a1();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let checks = datum.validate(&mut rng);
        assert!(checks.ok(), "{:?}", checks.first_failure());
        assert!(datum.cube_check().ok());
        // l = 0 for A1
        assert!(datum.period.i.boundary().is_zero());
    }

    #[test]
    fn zero_homotopy_passes() {
        let datum = a1();
        let g = datum.period.g.clone();
        let end = end_algebra(&datum.period.pair.complex, &[]).unwrap();
        let i = GradedMap::zero(g.space().clone(), end.dgla.space().clone(), -1);
        let h = CartanHomotopy::new(g, end.dgla.clone(), i).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        assert!(h.check(&mut rng).ok());
        assert!(h.boundary().is_zero());
    }

    #[test]
    fn corrupted_homotopy_fails() {
        // i_x and i_y with [i_x, i_y] != 0
        let gs = space("g", &[(1, &["x", "y"])]);
        let g = DGLieAlgebra::abelian("g", CochainComplex::zero_differential(gs.clone()));
        let vs = space("V", &[(0, &["a", "b", "c"])]);
        let vc = CochainComplex::zero_differential(vs.clone());
        let end = end_algebra(&vc, &[]).unwrap();
        let a = vs.lookup("a").unwrap();
        let b = vs.lookup("b").unwrap();
        let c = vs.lookup("c").unwrap();
        let i = GradedMap::from_images(gs.clone(), end.dgla.space().clone(), -1, |k| {
            let mut out = Vector::zero();
            if k == gs.lookup("x").unwrap() {
                out.set(end.key(a, b).unwrap(), rat(1));
            } else {
                out.set(end.key(b, c).unwrap(), rat(1));
            }
            out
        })
        .unwrap();
        let h = CartanHomotopy::new(g, end.dgla.clone(), i).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let checks = h.check(&mut rng);
        assert!(!checks.ok());
        assert!(checks
            .items
            .iter()
            .any(|cc| cc.name.contains("[i_x, i_y]") && !cc.passed));
    }

    #[test]
    fn cone_bijection_round_trip() {
        let datum = a1();
        let cone = cone_id(&datum.period.g).unwrap();
        let rho = datum.period.i.to_cone_morphism(&cone).unwrap();
        assert!(rho.check().ok(), "l + i[1] fails to be a morphism");
        let back = CartanHomotopy::from_cone_morphism(&cone, &rho).unwrap();
        for k in datum.period.g.space().all_keys() {
            assert_eq!(
                back.i.apply_key(k),
                datum.period.i.i.apply_key(k),
                "round trip changed i"
            );
        }
        // restriction to the base is the boundary
        for k in datum.period.g.space().all_keys() {
            let x = datum.period.g.space().basis_vector(k);
            assert_eq!(rho.apply(&cone.include_base(&x)), datum.period.i.boundary().apply(&x));
        }
    }

    #[test]
    fn lift_iv_formula_and_identities() {
        let datum = a1();
        let aff = aff_algebra(&datum.period.pair.complex, None).unwrap();
        let ivh = lift_iv(&datum.period.i, &datum.period.end, &aff, &datum.v).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        assert!(ivh.check(&mut rng).ok());
        // i^v_x = (i_x, -f0) for x
        let gs = datum.period.g.space();
        let x = gs.lookup("x").unwrap();
        let img = ivh.i.apply_key(x);
        let (ep, vp) = aff.split(&img);
        assert!(!ep.is_zero());
        let vs = &datum.period.pair.complex.space;
        assert_eq!(vp.coeff(vs.lookup("f0").unwrap()), rat(-1));
        // boundary = (l, -l(v)) = 0 here
        assert!(ivh.boundary().is_zero());
        // sigma_v composition agrees: i^v = sigma_v o i
        let sigma = crate::dgla::sigma_v(&datum.period.end, &aff, &datum.v).unwrap();
        for k in gs.all_keys() {
            let lhs = ivh.i.apply_key(k);
            let rhs = sigma.apply(&datum.period.i.i.apply_key(k));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn aj_cohomology_value() {
        let datum = a1();
        let aj = datum.aj_cohomology().unwrap();
        // H^1(g/0) = <x>, H^0(g/0) = <w>: [x] -> -[f0], [w] -> -[em1]
        assert_eq!(aj.blocks[&1].len(), 1);
        assert_eq!(aj.blocks[&0].len(), 1);
        assert!(aj.blocks[&1][0].iter().any(|c| !c.is_zero()));
        assert!(aj.blocks[&0][0].iter().any(|c| !c.is_zero()));
        // check the raw values
        let gs = datum.period.g.space();
        let x = gs.basis_vector(gs.lookup("x").unwrap());
        let w = gs.basis_vector(gs.lookup("w").unwrap());
        let vs = &datum.period.pair.complex.space;
        assert_eq!(
            datum.aj_value(&x).unwrap().coeff(vs.lookup("f0").unwrap()),
            rat(-1)
        );
        assert_eq!(
            datum.aj_value(&w).unwrap().coeff(vs.lookup("em1").unwrap()),
            rat(-1)
        );
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        assert!(datum.representative_invariance(&mut rng).unwrap());
    }

    #[test]
    fn rep_route_matches_direct_formula_up_to_identification() {
        let datum = a1();
        let jac = jacobian_of(&datum).unwrap();
        let gs = datum.period.g.space();
        for name in ["w", "x"] {
            let x = gs.basis_vector(gs.lookup(name).unwrap());
            let rep = datum.tw2_rep_from_class(&jac, &x).unwrap();
            // the representative is closed
            assert!(jac.square.d(&rep).is_zero(), "rep of {} is not closed", name);
            let (raw, _) = jac.tw2_to_vf(&rep).unwrap();
            // integration gives -i^v, whose translation part is +i_x(v);
            // the direct formula is -i_x(v): relative sign -1, fixed by the
            // shift identification on the source side
            let direct = datum.aj_value(&x).unwrap();
            assert_eq!(raw, direct.neg(), "route comparison failed on {}", name);
        }
    }

    #[test]
    fn period_map_routes_agree() {
        let datum = a1();
        let artin = crate::artin::ArtinAlgebra::truncated_poly(1, 3).unwrap();
        let ctx = McContext::new(datum.period.g.clone(), artin.clone());
        // x in MC: degree 1, abelian with zero differential: anything works
        let gs = datum.period.g.space();
        let x = NilElem::from_vector(&gs.basis_vector(gs.lookup("x").unwrap()), 1);
        assert!(ctx.mc_check(&x));
        let via_exp = datum.period.period_map_mc(&ctx, &x).unwrap();
        let via_phi = datum.period.period_map_via_phi(&ctx, &x).unwrap();
        assert!(via_exp.equals(&via_phi, &datum.period.pair));
        assert!(via_exp.is_flat_of_correct_rank(&datum.period.pair));
        // x = 0 gives F (x) A
        let undeformed =
            DeformedSubcomplex::undeformed(&datum.period.pair, artin.clone());
        let value = datum.period.period_map_mc(&ctx, &NilElem::zero()).unwrap();
        assert!(value.equals(&undeformed, &datum.period.pair));
    }

    /// Period datum with obstructed g: g = <x 1, z 2, u 2>, [x,x] = z;
    /// V = <f, c deg 0; m deg 1>, d = 0, F2 = <f>; i_u = f -> m; i_x = i_z = 0.
    pub fn obstructed_period_datum() -> (PeriodDatum, Key, Key) {
        let gs = space("g", &[(1, &["x"]), (2, &["z", "u"])]);
        let gc = CochainComplex::zero_differential(gs.clone());
        let xk = gs.lookup("x").unwrap();
        let zk = gs.lookup("z").unwrap();
        let uk = gs.lookup("u").unwrap();
        let mut table = BTreeMap::new();
        let mut v = Vector::zero();
        v.set(zk, rat(1));
        table.insert((xk, xk), v);
        let g = DGLieAlgebra::new("g", gc, table);
        assert!(g.check().ok());

        let vs = space("V", &[(0, &["f", "c"]), (1, &["m"])]);
        let vc = CochainComplex::zero_differential(vs.clone());
        let fk = vs.lookup("f").unwrap();
        let mk = vs.lookup("m").unwrap();
        let sub: BTreeSet<Key> = [fk].into_iter().collect();
        let pair = DGPair::new(vc.clone(), sub, "F2").unwrap();
        let end = end_algebra(&vc, &[]).unwrap();
        let i = GradedMap::from_images(gs.clone(), end.dgla.space().clone(), -1, |k| {
            let mut out = Vector::zero();
            if k == uk {
                out.set(end.key(fk, mk).unwrap(), rat(1));
            }
            out
        })
        .unwrap();
        let h = CartanHomotopy::new(g.clone(), end.dgla.clone(), i).unwrap();
        let period = PeriodDatum::new(g, pair, end, h).unwrap();
        (period, zk, uk)
    }

    #[test]
    fn obstruction_annihilation() {
        let (period, _zk, uk) = obstructed_period_datum();
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        assert!(period.validate(&mut rng).ok());
        let report = period.obstruction_check().unwrap();
        // the x-direction is obstructed, and its obstruction dies under H^2(i)
        assert!(report.entries.iter().any(|e| e.obstruction.is_some()));
        assert!(report.all_annihilated);
        // non-vacuity: H^2(i) is a nonzero map (u acts nontrivially)
        let u = period.g.space().basis_vector(uk);
        let image = period.h2i_of(&u).unwrap();
        assert!(image.iter().any(|(_, m)| m.iter().any(|row| row.iter().any(|c| !c.is_zero()))));
    }

    #[test]
    fn obstruction_check_rejects_noninjective_hf() {
        // P2-style pair: H(F) -> H(V) is not injective
        let vs = space("V", &[(0, &["a1", "a2"]), (1, &["b1", "b2"])]);
        let d = GradedMap::from_images(vs.clone(), vs.clone(), 1, |k| {
            let mut out = Vector::zero();
            if k == vs.lookup("a1").unwrap() {
                out.set(vs.lookup("b1").unwrap(), rat(1));
            }
            out
        })
        .unwrap();
        let vc = CochainComplex::new(vs.clone(), d).unwrap();
        let sub: BTreeSet<Key> =
            [vs.lookup("a2").unwrap(), vs.lookup("b1").unwrap()].into_iter().collect();
        let pair = DGPair::new(vc.clone(), sub, "F").unwrap();
        let gs = space("h", &[(1, &["x"])]);
        let g = DGLieAlgebra::abelian("h", CochainComplex::zero_differential(gs.clone()));
        let end = end_algebra(&vc, &[]).unwrap();
        let i = GradedMap::zero(gs.clone(), end.dgla.space().clone(), -1);
        let h = CartanHomotopy::new(g.clone(), end.dgla.clone(), i).unwrap();
        let period = PeriodDatum::new(g, pair, end, h).unwrap();
        assert!(period.obstruction_check().is_err());
    }
}
