//! (Ω,G)-decompositions: sparse containers, contraction, the symmetry
//! condition, and the constructions producing decompositions from an
//! elementary sum `p = Σ_j p_j^[0](x^[0]) ⋯ p_j^[n](x^[n])`.
//!
//! Assignments `β ∈ I^(𝓕̃ᵢ)` are stored as vectors aligned with
//! `WeightedComplex::labels_at(i)`, values 0-based (1-based in JSON). Absent
//! assignments are zero locals. The scale `s` is a per-site factor: the
//! contraction is `s^(n+1) · Σ_α Π_i p^[i]_{α|i}(x^[i])`, which is how the
//! normalisations `(1/|G|)^(1/(n+1))` are absorbed into every local.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::WeightedComplex;
use crate::polynomial::{BlockPolynomial, PolynomialError, PolynomialJson, RationalPoly, SurdPoly};
use crate::scalar::{rat, Coefficient, ScalarError, ScaledScalar, ScaledScalarJson, Surd};
use crate::symmetry::{SymmetryAction, SymmetryError, DEFAULT_BLENDING_GUARD};

pub const DEFAULT_MAX_ASSIGNMENTS: u64 = 10_000_000;
const UNSET: u32 = u32::MAX;
const MAX_INDEX: u32 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompositionError {
    #[error("the complex is not connected")]
    NotConnected,
    #[error("the action is not free")]
    ActionNotFree,
    #[error("the action is not blending")]
    ActionNotBlending,
    #[error("the polynomial is not invariant under the action")]
    NotInvariant,
    #[error("contraction visited more than {0} partial assignments")]
    GuardExceeded(u64),
    #[error("size {0} exceeds the supported maximum")]
    SizeTooLarge(usize),
    #[error("expected 2 sites, got {0}")]
    NotBipartite(usize),
    #[error("invalid assignment: {0}")]
    BadAssignment(String),
    #[error("invalid local polynomial: {0}")]
    BadLocal(String),
    #[error("decompositions are incompatible: {0}")]
    Incompatible(String),
    #[error("scale {0} is not representable in this coefficient mode")]
    ScaleNotRepresentable(String),
    #[error(transparent)]
    Polynomial(#[from] PolynomialError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("json: {0}")]
    Json(String),
}

/// One summand of an elementary decomposition: a single-site polynomial per site.
pub type ElementaryTerm<C> = Vec<BlockPolynomial<C>>;

#[derive(Clone, Debug, PartialEq)]
pub struct OmegaGDecomposition<C> {
    action: SymmetryAction,
    site_vars: Vec<usize>,
    index_size: u32,
    locals: Vec<BTreeMap<Vec<u32>, BlockPolynomial<C>>>,
    scale: ScaledScalar,
}

/// Result of a contraction: the value is `residual · poly`, with `residual`
/// equal to one whenever the scale is representable in the coefficient mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Contraction<C> {
    pub poly: BlockPolynomial<C>,
    pub residual: ScaledScalar,
}

impl<C: Coefficient> Contraction<C> {
    pub fn is_exact(&self) -> bool {
        self.residual.is_one()
    }

    pub fn into_poly(self) -> Option<BlockPolynomial<C>> {
        self.residual.is_one().then_some(self.poly)
    }
}

impl<C: Coefficient> OmegaGDecomposition<C> {
    pub fn new(action: &SymmetryAction, site_vars: Vec<usize>, index_size: u32) -> Result<Self, DecompositionError> {
        let nv = action.complex().vertex_count();
        if site_vars.len() != nv {
            return Err(DecompositionError::BadLocal(format!("{} site sizes for {nv} vertices", site_vars.len())));
        }
        if index_size > MAX_INDEX {
            return Err(DecompositionError::SizeTooLarge(index_size as usize));
        }
        for g in 0..action.order() {
            for i in 0..nv {
                if site_vars[i] != site_vars[action.vertex(g, i)] {
                    return Err(PolynomialError::IncompatibleBlockSizes(format!("site sizes {site_vars:?}")).into());
                }
            }
        }
        Ok(Self {
            action: action.clone(),
            site_vars,
            index_size,
            locals: vec![BTreeMap::new(); nv],
            scale: ScaledScalar::one(),
        })
    }

    pub fn with_scale(mut self, scale: ScaledScalar) -> Self {
        self.scale = scale;
        self
    }

    pub fn set_scale(&mut self, scale: ScaledScalar) {
        self.scale = scale;
    }

    /// Add `poly` to the local at `(site, beta)`.
    pub fn insert(&mut self, site: usize, beta: Vec<u32>, poly: BlockPolynomial<C>) -> Result<(), DecompositionError> {
        let c = self.action.complex();
        if site >= c.vertex_count() {
            return Err(DecompositionError::BadAssignment(format!("site {site} out of range")));
        }
        if beta.len() != c.labels_at(site).len() {
            return Err(DecompositionError::BadAssignment(format!(
                "site {site} has {} multifacets, assignment has {}",
                c.labels_at(site).len(),
                beta.len()
            )));
        }
        if let Some(&b) = beta.iter().find(|&&b| b >= self.index_size) {
            return Err(DecompositionError::BadAssignment(format!("value {b} outside index set of size {}", self.index_size)));
        }
        if poly.sites() != [self.site_vars[site]] {
            return Err(DecompositionError::BadLocal(format!(
                "local at site {site} has layout {:?}, expected [{}]",
                poly.sites(),
                self.site_vars[site]
            )));
        }
        if poly.is_zero() {
            return Ok(());
        }
        let slot = &mut self.locals[site];
        match slot.get_mut(&beta) {
            Some(existing) => {
                existing.add_in_place(&poly)?;
                if existing.is_zero() {
                    slot.remove(&beta);
                }
            }
            None => {
                slot.insert(beta, poly);
            }
        }
        Ok(())
    }

    pub fn action(&self) -> &SymmetryAction {
        &self.action
    }

    pub fn complex(&self) -> &WeightedComplex {
        self.action.complex()
    }

    pub fn site_vars(&self) -> &[usize] {
        &self.site_vars
    }

    pub fn index_size(&self) -> u32 {
        self.index_size
    }

    pub fn scale(&self) -> &ScaledScalar {
        &self.scale
    }

    pub fn local(&self, site: usize, beta: &[u32]) -> Option<&BlockPolynomial<C>> {
        self.locals[site].get(beta)
    }

    pub fn locals_at(&self, site: usize) -> impl Iterator<Item = (&Vec<u32>, &BlockPolynomial<C>)> {
        self.locals[site].iter()
    }

    pub fn stored_count(&self) -> usize {
        self.locals.iter().map(|l| l.len()).sum()
    }

    /// Total factor `scale^(n+1)` applied by the contraction.
    pub fn total_scale(&self) -> ScaledScalar {
        self.scale.pow(self.site_vars.len() as u32)
    }

    /// `Σ_α Π_i p^[i]_{α|i}` without the scale. Enumerates assignments by a
    /// sparse join over stored locals; `guard` caps the number of visited
    /// partial assignments.
    pub fn contract_raw(&self, guard: u64) -> Result<BlockPolynomial<C>, DecompositionError> {
        let mut alpha = vec![UNSET; self.complex().label_count()];
        let mut result = BlockPolynomial::zero(self.site_vars.clone());
        let mut visited = 0u64;
        self.join(0, &mut alpha, &BlockPolynomial::one(Vec::new()), &mut result, &mut visited, guard)?;
        Ok(result)
    }

    fn join(
        &self,
        site: usize,
        alpha: &mut [u32],
        prefix: &BlockPolynomial<C>,
        result: &mut BlockPolynomial<C>,
        visited: &mut u64,
        guard: u64,
    ) -> Result<(), DecompositionError> {
        *visited += 1;
        if *visited > guard {
            return Err(DecompositionError::GuardExceeded(guard));
        }
        if site == self.site_vars.len() {
            result.add_in_place(prefix)?;
            return Ok(());
        }
        let labels = self.complex().labels_at(site);
        if labels.iter().all(|&l| alpha[l] != UNSET) {
            let beta: Vec<u32> = labels.iter().map(|&l| alpha[l]).collect();
            if let Some(p) = self.locals[site].get(&beta) {
                self.join(site + 1, alpha, &prefix.extend_site(p), result, visited, guard)?;
            }
            return Ok(());
        }
        let mut newly = Vec::with_capacity(labels.len());
        for (beta, p) in &self.locals[site] {
            if labels.iter().zip(beta).any(|(&l, &b)| alpha[l] != UNSET && alpha[l] != b) {
                continue;
            }
            newly.clear();
            for (&l, &b) in labels.iter().zip(beta) {
                if alpha[l] == UNSET {
                    alpha[l] = b;
                    newly.push(l);
                }
            }
            let res = self.join(site + 1, alpha, &prefix.extend_site(p), result, visited, guard);
            for &l in &newly {
                alpha[l] = UNSET;
            }
            res?;
        }
        Ok(())
    }

    /// `scale^(n+1) · contract_raw`; when the total scale is not representable
    /// in `C` the raw sum is returned together with the residual scale.
    pub fn contract(&self, guard: u64) -> Result<Contraction<C>, DecompositionError> {
        let raw = self.contract_raw(guard)?;
        let total = self.total_scale();
        Ok(match C::from_scaled(&total) {
            Some(s) => Contraction { poly: raw.scale(&s), residual: ScaledScalar::one() },
            None => Contraction { poly: raw, residual: total },
        })
    }

    /// Exhaustive check of `p^[i]_β = p^[gi]_{ᵍβ}` (relative `tol` in float mode).
    pub fn check_symmetry_tol(&self, tol: f64) -> bool {
        for i in 0..self.site_vars.len() {
            for g in 1..self.action.order() {
                let gi = self.action.vertex(g, i);
                let map = self.action.assignment_map(g, i);
                for (beta, p) in &self.locals[i] {
                    let gbeta: Vec<u32> = map.iter().map(|&k| beta[k]).collect();
                    match self.locals[gi].get(&gbeta) {
                        Some(q) if q.approx_eq(p, tol) => {}
                        _ => return false,
                    }
                }
            }
        }
        true
    }

    pub fn check_symmetry(&self) -> bool {
        self.check_symmetry_tol(1e-12)
    }

    pub fn map_coeffs<D: Coefficient>(&self, f: impl Fn(&C) -> D + Copy) -> OmegaGDecomposition<D> {
        OmegaGDecomposition {
            action: self.action.clone(),
            site_vars: self.site_vars.clone(),
            index_size: self.index_size,
            locals: self
                .locals
                .iter()
                .map(|m| m.iter().map(|(b, p)| (b.clone(), p.map_coeffs(f))).filter(|(_, p)| !p.is_zero()).collect())
                .collect(),
            scale: self.scale.clone(),
        }
    }

    pub fn to_float(&self) -> OmegaGDecomposition<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    /// Multiply every local by the per-site scale and reset the scale to one.
    pub fn absorb_scale(&self) -> Result<Self, DecompositionError> {
        if self.scale.is_one() {
            return Ok(self.clone());
        }
        let s = C::from_scaled(&self.scale).ok_or_else(|| DecompositionError::ScaleNotRepresentable(self.scale.to_string()))?;
        let mut out = self.map_coeffs(|c| c.times(&s));
        out.scale = ScaledScalar::one();
        Ok(out)
    }

    /// The same locals viewed under another action on the same complex.
    pub fn with_action(&self, action: &SymmetryAction) -> Result<Self, DecompositionError> {
        if action.complex() != self.complex() {
            return Err(DecompositionError::Incompatible("different complexes".into()));
        }
        let mut out = self.clone();
        out.action = action.clone();
        Ok(out)
    }

    fn check_compatible(&self, other: &Self) -> Result<(), DecompositionError> {
        if self.action != other.action {
            return Err(DecompositionError::Incompatible("different actions".into()));
        }
        if self.site_vars != other.site_vars {
            return Err(DecompositionError::Incompatible("different site layouts".into()));
        }
        Ok(())
    }

    /// Decomposition of the sum with index set `I₁ ⊔ I₂`. Both inputs need the
    /// same scale and a connected complex.
    pub fn direct_sum(&self, other: &Self) -> Result<Self, DecompositionError> {
        self.check_compatible(other)?;
        if self.scale != other.scale {
            return Err(DecompositionError::Incompatible("different scales; absorb them first".into()));
        }
        if !self.complex().is_connected() {
            return Err(DecompositionError::NotConnected);
        }
        let mut out = Self::new(&self.action, self.site_vars.clone(), self.index_size + other.index_size)?;
        out.scale = self.scale.clone();
        for i in 0..self.site_vars.len() {
            for (b, p) in &self.locals[i] {
                out.insert(i, b.clone(), p.clone())?;
            }
            for (b, p) in &other.locals[i] {
                out.insert(i, b.iter().map(|v| v + self.index_size).collect(), p.clone())?;
            }
        }
        Ok(out)
    }

    /// Decomposition of the product with index set `I₁ × I₂`, pair `(a, b)`
    /// encoded as `a·|I₂| + b`.
    pub fn tensor_product(&self, other: &Self) -> Result<Self, DecompositionError> {
        self.check_compatible(other)?;
        let size = self.index_size as u64 * other.index_size as u64;
        if size > MAX_INDEX as u64 {
            return Err(DecompositionError::SizeTooLarge(size as usize));
        }
        let mut out = Self::new(&self.action, self.site_vars.clone(), size as u32)?;
        out.scale = self.scale.mul(&other.scale);
        for i in 0..self.site_vars.len() {
            for (b1, p1) in &self.locals[i] {
                for (b2, p2) in &other.locals[i] {
                    let beta = b1.iter().zip(b2).map(|(a, b)| a * other.index_size + b).collect();
                    out.insert(i, beta, p1.mul(p2)?)?;
                }
            }
        }
        Ok(out)
    }
}

/// `Σ_j Π_i terms[j][i](x^[i])`.
pub fn elementary_sum<C: Coefficient>(
    site_vars: &[usize],
    terms: &[ElementaryTerm<C>],
) -> Result<BlockPolynomial<C>, DecompositionError> {
    let mut out = BlockPolynomial::zero(site_vars.to_vec());
    for (j, t) in terms.iter().enumerate() {
        check_term(site_vars, j, t)?;
        let refs: Vec<&BlockPolynomial<C>> = t.iter().collect();
        out.add_in_place(&BlockPolynomial::tensor(&refs))?;
    }
    Ok(out)
}

fn check_term<C: Coefficient>(site_vars: &[usize], j: usize, t: &ElementaryTerm<C>) -> Result<(), DecompositionError> {
    if t.len() != site_vars.len() || t.iter().zip(site_vars).any(|(p, &m)| p.sites() != [m]) {
        return Err(DecompositionError::BadLocal(format!("term {j} does not match site layout {site_vars:?}")));
    }
    Ok(())
}

/// Random invariant elementary sum: each of `seeds` random terms (univariate
/// locals of degree `≤ max_deg`, integer coefficients in `[-3, 3]`) together
/// with its images `(g·t)^[gi] = t^[i]` under every group element.
pub fn random_invariant_terms(
    a: &SymmetryAction,
    rng: &mut impl rand::Rng,
    seeds: usize,
    max_deg: usize,
) -> Vec<ElementaryTerm<BigRational>> {
    let nv = a.complex().vertex_count();
    let mut terms = Vec::new();
    for _ in 0..seeds {
        let base: Vec<RationalPoly> = (0..nv)
            .map(|_| {
                let c: Vec<BigRational> = (0..=max_deg).map(|_| rat(rng.random_range(-3..4), 1)).collect();
                RationalPoly::univariate(&c)
            })
            .collect();
        for g in 0..a.order() {
            let mut moved = base.clone();
            for i in 0..nv {
                moved[a.vertex(g, i)] = base[i].clone();
            }
            terms.push(moved);
        }
    }
    terms
}

/// Ω-decomposition using only the given locals: `p^[i]_β = p_j^[i]` when `β`
/// is constant `j`, zero otherwise. Connectivity forces every nonzero global
/// assignment to be constant, so the contraction is the elementary sum.
pub fn from_elementary<C: Coefficient>(
    complex: &WeightedComplex,
    site_vars: &[usize],
    terms: &[ElementaryTerm<C>],
) -> Result<OmegaGDecomposition<C>, DecompositionError> {
    if !complex.is_connected() {
        return Err(DecompositionError::NotConnected);
    }
    let action = SymmetryAction::trivial(complex);
    let mut out = OmegaGDecomposition::new(&action, site_vars.to_vec(), terms.len() as u32)?;
    for (j, t) in terms.iter().enumerate() {
        check_term(site_vars, j, t)?;
        for (i, p) in t.iter().enumerate() {
            out.insert(i, vec![j as u32; complex.labels_at(i).len()], p.clone())?;
        }
    }
    Ok(out)
}

/// (Ω,G)-decomposition of an invariant elementary sum under a free action,
/// with index set `I × G`.
pub fn symmetrize_free<C: Coefficient>(
    site_vars: &[usize],
    terms: &[ElementaryTerm<C>],
    action: &SymmetryAction,
) -> Result<OmegaGDecomposition<C>, DecompositionError> {
    if !action.is_free() {
        return Err(DecompositionError::ActionNotFree);
    }
    let q = from_elementary(action.complex(), site_vars, terms)?;
    let p = elementary_sum(site_vars, terms)?;
    if !p.is_invariant(action)? {
        return Err(DecompositionError::NotInvariant);
    }
    symmetrize_decomposition(&q, action)
}

/// Turn any Ω-decomposition `q` (its own action is ignored) into an
/// (Ω,G)-decomposition of the G-average `(1/|G|) Σ_h h·contract(q)`.
///
/// The index set is `I × G`, the pair `(j, h)` encoded as `j·|G| + h`. With
/// `z` the linearizer, the local at site `i` for `β(ℓ) = (β'(hℓ), h·z(ℓ))` is
/// `q^[hi]_{β'}` read in the variables `x^[i]`; the tags `h·z` pin one `h` per
/// global assignment on a connected complex, and each block contracts to
/// `h⁻¹·contract(q)`.
pub fn symmetrize_decomposition<C: Coefficient>(
    q: &OmegaGDecomposition<C>,
    action: &SymmetryAction,
) -> Result<OmegaGDecomposition<C>, DecompositionError> {
    if q.complex() != action.complex() {
        return Err(DecompositionError::Incompatible("decomposition and action live on different complexes".into()));
    }
    if !action.complex().is_connected() {
        return Err(DecompositionError::NotConnected);
    }
    let z = action.linearizer().map_err(|_| DecompositionError::ActionNotFree)?;
    let k = action.order() as u32;
    let nv = q.site_vars.len();
    let size = q.index_size as u64 * k as u64;
    if size > MAX_INDEX as u64 {
        return Err(DecompositionError::SizeTooLarge(size as usize));
    }
    let mut out = OmegaGDecomposition::new(action, q.site_vars.clone(), size as u32)?;
    let norm = ScaledScalar::new(BigRational::new(1.into(), (k as i64).into()), nv as u32)?;
    out.scale = q.scale.mul(&norm);
    let complex = action.complex();
    for i in 0..nv {
        let labels = complex.labels_at(i);
        for h in 0..action.order() {
            let hi = action.vertex(h, i);
            let target = complex.labels_at(hi);
            // position in labels_at(hi) of h·ℓ for each ℓ in labels_at(i)
            let pos: Vec<usize> = labels
                .iter()
                .map(|&l| target.iter().position(|&t| t == action.label(h, l)).expect("G-linear collapse"))
                .collect();
            let tags: Vec<u32> = labels.iter().map(|&l| action.mul(h, z[l]) as u32).collect();
            for (bprime, p) in &q.locals[hi] {
                let beta = pos.iter().zip(&tags).map(|(&ps, &t)| bprime[ps] * k + t).collect();
                out.insert(i, beta, p.clone())?;
            }
        }
    }
    Ok(out)
}

/// Polarization vectors `v_ε = e₀ + Σ εᵢeᵢ` with signs `Πεᵢ`, for which
/// `(1/2ⁿ) Σ_ε (Πε) v_ε^⊗(n+1)` is the indicator of `{i₀,…,iₙ} = [n]`.
pub fn symmetric_indicator_split(n: usize) -> Result<Vec<(i8, Vec<i64>)>, DecompositionError> {
    if n > 8 {
        return Err(DecompositionError::SizeTooLarge(n));
    }
    Ok((0u32..(1 << n))
        .map(|mask| {
            let mut v = vec![1i64];
            let mut sign = 1i8;
            for b in 0..n {
                if mask >> b & 1 == 1 {
                    v.push(-1);
                    sign = -sign;
                } else {
                    v.push(1);
                }
            }
            (sign, v)
        })
        .collect())
}

/// Brute-force comparison of the polarization sum with the indicator tensor
/// over all `(n+1)^(n+1)` entries.
pub fn verify_indicator_split(n: usize) -> Result<bool, DecompositionError> {
    let split = symmetric_indicator_split(n)?;
    let d = n + 1;
    let total = d.pow(d as u32);
    let scale = 1i64 << n;
    for mut code in 0..total {
        let mut idx = Vec::with_capacity(d);
        for _ in 0..d {
            idx.push(code % d);
            code /= d;
        }
        let sum: i64 = split.iter().map(|(s, v)| *s as i64 * idx.iter().map(|&i| v[i]).product::<i64>()).sum();
        let mut seen = vec![false; d];
        idx.iter().for_each(|&i| seen[i] = true);
        let indicator = if seen.iter().all(|&s| s) { scale } else { 0 };
        if sum != indicator {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Difference decomposition `p = contract(q₁) − contract(q₂)` for a blending
/// action: for each polarization vector `d` the locals on constant
/// assignments `j` are `Σ_g d[gi] · p_j^[gi](x^[i])`. The signed sum over all
/// vectors equals `2ⁿ · K · |V| · p`, with `K = Π_i |Stab(i)|` and `V` the
/// image of `G` in the vertex permutations; the per-site scale undoes it.
/// For even `n` the negative vectors are negated and moved into `q₁`.
pub fn blending_difference<C: Coefficient>(
    site_vars: &[usize],
    terms: &[ElementaryTerm<C>],
    action: &SymmetryAction,
) -> Result<(OmegaGDecomposition<C>, OmegaGDecomposition<C>), DecompositionError> {
    let complex = action.complex();
    if !complex.is_connected() {
        return Err(DecompositionError::NotConnected);
    }
    if !action.is_blending(DEFAULT_BLENDING_GUARD)? {
        return Err(DecompositionError::ActionNotBlending);
    }
    let p = elementary_sum(site_vars, terms)?;
    if !p.is_invariant(action)? {
        return Err(DecompositionError::NotInvariant);
    }
    let nv = site_vars.len();
    let n = nv - 1;
    let split = symmetric_indicator_split(n)?;
    let stab_product: u64 = (0..nv).map(|i| action.vertex_stabilizer(i).len() as u64).product();
    let kernel = (0..action.order()).filter(|&g| (0..nv).all(|i| action.vertex(g, i) == i)).count() as u64;
    let image = action.order() as u64 / kernel;
    let factor = (1u64 << n) * stab_product * image;
    let scale = ScaledScalar::new(rat(1, factor as i64), nv as u32)?;

    let mut pos_blocks: Vec<Vec<i64>> = Vec::new();
    let mut neg_blocks: Vec<Vec<i64>> = Vec::new();
    for (sign, v) in split {
        if sign > 0 {
            pos_blocks.push(v);
        } else if n % 2 == 0 {
            pos_blocks.push(v.iter().map(|x| -x).collect());
        } else {
            neg_blocks.push(v);
        }
    }
    let r = terms.len() as u32;
    let build = |blocks: &[Vec<i64>]| -> Result<OmegaGDecomposition<C>, DecompositionError> {
        let mut out = OmegaGDecomposition::new(action, site_vars.to_vec(), blocks.len() as u32 * r)?;
        out.scale = scale.clone();
        for (b, d) in blocks.iter().enumerate() {
            for (j, t) in terms.iter().enumerate() {
                for i in 0..nv {
                    let mut local = BlockPolynomial::zero(vec![site_vars[i]]);
                    for g in 0..action.order() {
                        let gi = action.vertex(g, i);
                        local.add_in_place(&t[gi].scale(&C::from_i64(d[gi])))?;
                    }
                    let value = b as u32 * r + j as u32;
                    out.insert(i, vec![value; complex.labels_at(i).len()], local)?;
                }
            }
        }
        Ok(out)
    };
    Ok((build(&pos_blocks)?, build(&neg_blocks)?))
}

/// Rank of the coefficient matrix with rows indexed by site-0 monomials and
/// columns by site-1 monomials (operator Schmidt rank), computed exactly.
pub fn bipartite_rank(p: &RationalPoly) -> Result<usize, DecompositionError> {
    if p.site_count() != 2 {
        return Err(DecompositionError::NotBipartite(p.site_count()));
    }
    let (rows, cols, entries) = coefficient_matrix(p);
    let mut m = vec![vec![<BigRational as Zero>::zero(); cols.len()]; rows.len()];
    for ((r, c), v) in entries {
        m[r][c] = v;
    }
    Ok(rational_rank(m))
}

/// Float variant with singular-value threshold `rel_tol · σ_max`.
pub fn bipartite_rank_float(p: &BlockPolynomial<f64>, rel_tol: f64) -> Result<usize, DecompositionError> {
    if p.site_count() != 2 {
        return Err(DecompositionError::NotBipartite(p.site_count()));
    }
    let (rows, cols, entries) = coefficient_matrix(p);
    if rows.is_empty() {
        return Ok(0);
    }
    let mut m = nalgebra::DMatrix::<f64>::zeros(rows.len(), cols.len());
    for ((r, c), v) in entries {
        m[(r, c)] = v;
    }
    Ok(numeric_rank(&m, rel_tol))
}

pub fn numeric_rank(m: &nalgebra::DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

type CoefficientMatrix<C> = (Vec<Vec<u32>>, Vec<Vec<u32>>, Vec<((usize, usize), C)>);

fn coefficient_matrix<C: Coefficient>(p: &BlockPolynomial<C>) -> CoefficientMatrix<C> {
    let mut rows: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    let mut cols: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    for (e, _) in p.terms() {
        let b = p.blocks(e);
        rows.entry(b[0].to_vec()).or_insert(0);
        cols.entry(b[1].to_vec()).or_insert(0);
    }
    for (k, v) in rows.values_mut().enumerate() {
        *v = k;
    }
    for (k, v) in cols.values_mut().enumerate() {
        *v = k;
    }
    let entries = p
        .terms()
        .map(|(e, c)| {
            let b = p.blocks(e);
            ((rows[b[0]], cols[b[1]]), c.clone())
        })
        .collect();
    (rows.into_keys().collect(), cols.into_keys().collect(), entries)
}

pub fn rational_rank(mut m: Vec<Vec<BigRational>>) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| !Zero::is_zero(&m[r][c])) else { continue };
        m.swap(rank, pivot);
        let inv = m[rank][c].recip();
        for r in 0..rows {
            if r != rank && !Zero::is_zero(&m[r][c]) {
                let f = &m[r][c] * &inv;
                for cc in c..cols {
                    let delta = &f * &m[rank][cc];
                    m[r][cc] -= delta;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// `{"index_size", "scale": {"r","k"}, "site_vars"?, "locals": [{"site", "beta"
/// (1-based), "poly", "factor"?}]}`; a local equals `factor · poly`, repeated
/// `(site, beta)` entries add up.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DecompositionJson {
    pub index_size: u32,
    #[serde(default = "unit_scale", skip_serializing_if = "is_unit_scale")]
    pub scale: ScaledScalarJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_vars: Option<Vec<usize>>,
    pub locals: Vec<LocalJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LocalJson {
    pub site: usize,
    pub beta: Vec<u32>,
    pub poly: PolynomialJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<ScaledScalarJson>,
}

fn unit_scale() -> ScaledScalarJson {
    ScaledScalarJson { r: "1".into(), k: 1 }
}

fn is_unit_scale(s: &ScaledScalarJson) -> bool {
    *s == unit_scale()
}

impl DecompositionJson {
    fn site_vars(&self, action: &SymmetryAction) -> Result<Vec<usize>, DecompositionError> {
        let nv = action.complex().vertex_count();
        if let Some(sv) = &self.site_vars {
            return Ok(sv.clone());
        }
        let mut sv = vec![None; nv];
        for l in &self.locals {
            if l.site >= nv || l.poly.sites.len() != 1 {
                return Err(DecompositionError::BadLocal(format!("local at site {} must be single-site", l.site)));
            }
            match sv[l.site] {
                None => sv[l.site] = Some(l.poly.sites[0]),
                Some(m) if m != l.poly.sites[0] => {
                    return Err(DecompositionError::BadLocal(format!("inconsistent variable count at site {}", l.site)))
                }
                _ => {}
            }
        }
        Ok(sv.into_iter().map(|m| m.unwrap_or(1)).collect())
    }

    fn beta(&self, l: &LocalJson) -> Result<Vec<u32>, DecompositionError> {
        l.beta
            .iter()
            .map(|&b| {
                if b == 0 || b > self.index_size {
                    Err(DecompositionError::BadAssignment(format!("value {b} outside 1..={}", self.index_size)))
                } else {
                    Ok(b - 1)
                }
            })
            .collect()
    }

    /// Exact (radical) interpretation; polynomials must be in rational mode.
    pub fn to_surd(&self, action: &SymmetryAction) -> Result<OmegaGDecomposition<Surd>, DecompositionError> {
        let mut out = OmegaGDecomposition::new(action, self.site_vars(action)?, self.index_size)?;
        out.scale = ScaledScalar::try_from(&self.scale)?;
        for l in &self.locals {
            let poly = RationalPoly::from_json(&l.poly)?;
            let factor = match &l.factor {
                Some(f) => Surd::from_scaled(ScaledScalar::try_from(f)?),
                None => Surd::from_rational(<BigRational as One>::one()),
            };
            let local = poly.map_coeffs(|c| Surd::from_rational(c.clone()).times(&factor));
            out.insert(l.site, self.beta(l)?, local)?;
        }
        Ok(out)
    }

    /// Floating-point interpretation; accepts both coefficient modes.
    pub fn to_float(&self, action: &SymmetryAction) -> Result<OmegaGDecomposition<f64>, DecompositionError> {
        let mut out = OmegaGDecomposition::new(action, self.site_vars(action)?, self.index_size)?;
        out.scale = ScaledScalar::try_from(&self.scale)?;
        for l in &self.locals {
            let poly = BlockPolynomial::<f64>::from_json(&l.poly)?;
            let factor = match &l.factor {
                Some(f) => ScaledScalar::try_from(f)?.to_f64(),
                None => 1.0,
            };
            out.insert(l.site, self.beta(l)?, poly.scale(&factor))?;
        }
        Ok(out)
    }
}

/// Write a polynomial whose coefficients share one radical line as
/// `factor · rational polynomial`.
pub fn split_surd_poly(p: &SurdPoly) -> Option<(RationalPoly, ScaledScalar)> {
    let line = p.terms().next().and_then(|(_, c)| c.terms().first().map(|(s, _)| s.clone()))?;
    let mut out = RationalPoly::zero(p.sites().to_vec());
    for (e, c) in p.terms() {
        let ratio = c.times(&Surd::from_scaled(line.inv())).as_rational()?;
        out.add_term(e.clone(), ratio);
    }
    Some((out, line))
}

impl OmegaGDecomposition<Surd> {
    pub fn to_json(&self) -> Result<DecompositionJson, DecompositionError> {
        let mut locals = Vec::new();
        for (site, m) in self.locals.iter().enumerate() {
            for (beta, p) in m {
                let (poly, factor) = split_surd_poly(p)
                    .ok_or_else(|| DecompositionError::BadLocal("local mixes radical lines".into()))?;
                locals.push(LocalJson {
                    site,
                    beta: beta.iter().map(|b| b + 1).collect(),
                    poly: poly.to_json(),
                    factor: (!factor.is_one()).then(|| ScaledScalarJson::from(&factor)),
                });
            }
        }
        Ok(DecompositionJson {
            index_size: self.index_size,
            scale: ScaledScalarJson::from(&self.scale),
            site_vars: Some(self.site_vars.clone()),
            locals,
        })
    }
}

impl OmegaGDecomposition<BigRational> {
    pub fn to_json(&self) -> DecompositionJson {
        self.to_json_with(|p| p.to_json())
    }
}

impl OmegaGDecomposition<f64> {
    pub fn to_json(&self) -> DecompositionJson {
        self.to_json_with(|p| p.to_json())
    }
}

impl<C: Coefficient> OmegaGDecomposition<C> {
    fn to_json_with(&self, f: impl Fn(&BlockPolynomial<C>) -> PolynomialJson) -> DecompositionJson {
        let locals = self
            .locals
            .iter()
            .enumerate()
            .flat_map(|(site, m)| {
                m.iter().map(move |(beta, p)| (site, beta, p))
            })
            .map(|(site, beta, p)| LocalJson { site, beta: beta.iter().map(|b| b + 1).collect(), poly: f(p), factor: None })
            .collect();
        DecompositionJson {
            index_size: self.index_size,
            scale: ScaledScalarJson::from(&self.scale),
            site_vars: Some(self.site_vars.clone()),
            locals,
        }
    }
}

pub fn parse_decomposition(text: &str) -> Result<DecompositionJson, DecompositionError> {
    serde_json::from_str(text).map_err(|e| DecompositionError::Json(e.to_string()))
}
