//! Infinity norms of multi-homogeneous polynomials, Gram norm bounds, and
//! approximate separable (Ω,G)-decompositions by empirical-mean sampling.
//!
//! Homogenization adds a variable `x₀` in front of every site, so a site with
//! `m` variables becomes one with `m + 1`. The Gram index `k` of
//! `monomial_basis(m, d)` maps to `x₀^{d−|α_k|} x^{α_k}`, so a
//! `GramRepresentation` reads the same in both pictures.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::{from_elementary, symmetrize_decomposition, DecompositionError, ElementaryTerm, OmegaGDecomposition};
use crate::polynomial::{BlockPolynomial, FloatPoly, PolynomialError};
use crate::positivity::{monomial_basis, GramRepresentation, PositivityError, PSD_TOL};
use crate::symmetry::SymmetryAction;

/// `8e⁴`.
pub const MAUREY_CONSTANT: f64 = 8.0 * 54.598_150_033_144_236;
const RECONSTRUCTION_TOL: f64 = 1e-10;
const NORMALIZED_SLACK: f64 = 1e-12;
const POLISH_ITERATIONS: usize = 200;
const MAX_SAMPLES: usize = 100_000_000;

#[derive(Debug, Error)]
pub enum ApproxError {
    #[error("polynomial is not multi-homogeneous of uniform local degree")]
    NotHomogeneous,
    #[error("the action is not free on multifacets")]
    ActionNotFree,
    #[error("witness trace {0} exceeds 1")]
    NotNormalized(f64),
    #[error("Gram matrix is not invariant under the action (deviation {0:e})")]
    NotInvariant(f64),
    #[error("bad separable witness: {0}")]
    BadWitness(String),
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("{0} samples requested, over the limit")]
    TooManySamples(f64),
    #[error(transparent)]
    Positivity(#[from] PositivityError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Polynomial(#[from] PolynomialError),
    #[error("invalid witness json: {0}")]
    Json(String),
}

/// Multi-homogenize to local degree `d`: each site block `α` becomes
/// `(d − |α|, α)`.
pub fn homogenize(p: &FloatPoly, d: u32) -> Result<FloatPoly, ApproxError> {
    let sites: Vec<usize> = p.sites().iter().map(|m| m + 1).collect();
    let mut out = BlockPolynomial::zero(sites);
    for (e, c) in p.terms() {
        let mut h = Vec::with_capacity(e.len() + p.site_count());
        for block in p.blocks(e) {
            let deg: u32 = block.iter().sum();
            if deg > d {
                return Err(ApproxError::NotHomogeneous);
            }
            h.push(d - deg);
            h.extend_from_slice(block);
        }
        out.add_term(h, *c);
    }
    Ok(out)
}

/// Common local degree of a multi-homogeneous polynomial (`None` for 0).
pub fn uniform_local_degree(p: &FloatPoly) -> Result<Option<u32>, ApproxError> {
    let mut deg = None;
    for (e, _) in p.terms() {
        for block in p.blocks(e) {
            let s: u32 = block.iter().sum();
            match deg {
                None => deg = Some(s),
                Some(t) if t != s => return Err(ApproxError::NotHomogeneous),
                _ => {}
            }
        }
    }
    Ok(deg)
}

/// `𝔪ʰ_d(a)` for one site, `a ∈ ℝ^{m+1}`.
pub fn homogeneous_monomials(d: u32, a: &[f64]) -> Vec<f64> {
    let m = a.len() - 1;
    monomial_basis(m, d)
        .iter()
        .map(|alpha| {
            let deg: u32 = alpha.iter().sum();
            a[0].powi((d - deg) as i32) * alpha.iter().zip(&a[1..]).map(|(&e, &x)| x.powi(e as i32)).product::<f64>()
        })
        .collect()
}

/// `𝔪ʰ_{n,d}(a)`, site 0 outermost.
pub fn homogeneous_monomial_vector(d: u32, point: &[Vec<f64>]) -> Vec<f64> {
    point.iter().fold(vec![1.0], |acc, a| {
        let local = homogeneous_monomials(d, a);
        acc.iter().flat_map(|x| local.iter().map(move |y| x * y)).collect()
    })
}

/// `𝔪ʰᵗ M 𝔪ʰ` as a polynomial in `m + 1` variables per site.
pub fn homogeneous_gram_map(g: &GramRepresentation) -> Result<FloatPoly, ApproxError> {
    homogenize(&g.gram_map(), 2 * g.d())
}

/// Uniform point on `𝕊ᵐ × ⋯ × 𝕊ᵐ` by normalized Gaussians.
pub fn sphere_point(rng: &mut impl Rng, sites: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..sites)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.iter().map(|x| x / norm).collect();
            }
        })
        .collect()
}

fn flatten(point: &[Vec<f64>]) -> Vec<f64> {
    point.iter().flatten().copied().collect()
}

/// `max |p(a)|` over sampled points of the sphere product, polished by
/// coordinate ascent with step halving. Every returned value is attained, so
/// it is a lower bound on `‖p‖_∞`.
pub fn infinity_norm_lower(p: &FloatPoly, samples: usize, seed: u64) -> Result<f64, ApproxError> {
    if uniform_local_degree(p)?.is_none() {
        return Ok(0.0);
    }
    let sites = p.site_count();
    let dims = p.sites().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let value = |pt: &[Vec<f64>]| p.eval(&flatten(pt)).abs();
    let mut best_pt: Vec<Vec<f64>> = dims.iter().map(|&m| (0..m).map(|c| if c == 0 { 1.0 } else { 0.0 }).collect()).collect();
    let mut best = value(&best_pt);
    for _ in 0..samples {
        let pt: Vec<Vec<f64>> = (0..sites).map(|i| sphere_point(&mut rng, 1, dims[i]).remove(0)).collect();
        let v = value(&pt);
        if v > best {
            best = v;
            best_pt = pt;
        }
    }
    let mut step = 0.25;
    for _ in 0..POLISH_ITERATIONS {
        let mut improved = false;
        for i in 0..sites {
            for c in 0..dims[i] {
                for s in [step, -step] {
                    let mut cand = best_pt.clone();
                    cand[i][c] += s;
                    let norm = cand[i].iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm < 1e-12 {
                        continue;
                    }
                    cand[i].iter_mut().for_each(|x| *x /= norm);
                    let v = value(&cand);
                    if v > best {
                        best = v;
                        best_pt = cand;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GramNorms {
    pub sigma_max: f64,
    pub schatten2: f64,
}

pub fn gram_norm_bounds(g: &GramRepresentation) -> GramNorms {
    let sigma_max = SymmetricEigen::new(g.entries().clone()).eigenvalues.amax();
    GramNorms { sigma_max, schatten2: g.entries().norm() }
}

/// One product `weight · F^[0] ⊗ ⋯ ⊗ F^[n]` with PSD factors.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableTerm {
    pub weight: f64,
    pub factors: Vec<DMatrix<f64>>,
}

impl SeparableTerm {
    pub fn trace(&self) -> f64 {
        self.weight * self.factors.iter().map(|f| f.trace()).product::<f64>()
    }

    fn kron(&self) -> DMatrix<f64> {
        let first = DMatrix::from_element(1, 1, self.weight);
        self.factors.iter().fold(first, |acc, f| acc.kronecker(f))
    }

    /// Same term with unit-trace factors.
    fn unit(&self) -> Self {
        let factors = self.factors.iter().map(|f| f / f.trace()).collect();
        Self { weight: self.trace(), factors }
    }
}

/// A Gram matrix with an explicit separable witness `M = Σ_j λ_j ⊗_i F_j^[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableGram {
    gram: GramRepresentation,
    terms: Vec<SeparableTerm>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparableGramJson {
    pub n: usize,
    pub m: usize,
    pub d: u32,
    pub terms: Vec<SeparableTermJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparableTermJson {
    pub weight: f64,
    pub factors: Vec<Vec<Vec<f64>>>,
}

impl SeparableGram {
    /// Builds `M` from the witness.
    pub fn from_terms(n: usize, m: usize, d: u32, terms: Vec<SeparableTerm>) -> Result<Self, ApproxError> {
        let mut gram = GramRepresentation::zeros(n, m, d)?;
        let b = gram.basis_size();
        let mut total = DMatrix::zeros(gram.dim(), gram.dim());
        for (j, t) in terms.iter().enumerate() {
            if !(t.weight.is_finite() && t.weight > 0.0) {
                return Err(ApproxError::BadWitness(format!("term {j} has weight {}", t.weight)));
            }
            if t.factors.len() != n + 1 || t.factors.iter().any(|f| f.nrows() != b || f.ncols() != b) {
                return Err(ApproxError::BadWitness(format!("term {j} needs {} factors of size {b}x{b}", n + 1)));
            }
            for (i, f) in t.factors.iter().enumerate() {
                let fg = GramRepresentation::new(0, m, d, f.clone())
                    .map_err(|e| ApproxError::BadWitness(format!("term {j} site {i}: {e}")))?;
                if !fg.is_psd(PSD_TOL) || f.trace() <= 0.0 {
                    return Err(ApproxError::BadWitness(format!("term {j} site {i} is not a nonzero PSD matrix")));
                }
            }
            total += t.kron();
        }
        gram = GramRepresentation::new(n, m, d, total)?;
        Ok(Self { gram, terms })
    }

    /// Checks the witness against given entries.
    pub fn new(gram: GramRepresentation, terms: Vec<SeparableTerm>) -> Result<Self, ApproxError> {
        let built = Self::from_terms(gram.n(), gram.m(), gram.d(), terms)?;
        let dev = (built.gram.entries() - gram.entries()).amax();
        if dev > RECONSTRUCTION_TOL * gram.entries().amax().max(1.0) {
            return Err(ApproxError::BadWitness(format!("witness misses the matrix by {dev:e}")));
        }
        Ok(Self { gram, terms: built.terms })
    }

    pub fn gram(&self) -> &GramRepresentation {
        &self.gram
    }

    pub fn terms(&self) -> &[SeparableTerm] {
        &self.terms
    }

    /// `Σ_j λ_j Π_i tr F_j^[i]`.
    pub fn witness_trace(&self) -> f64 {
        self.terms.iter().map(SeparableTerm::trace).sum()
    }

    pub fn is_normalized(&self) -> bool {
        self.witness_trace() <= 1.0 + NORMALIZED_SLACK
    }

    pub fn normalized(&self) -> Self {
        self.scaled(1.0 / self.witness_trace())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let terms = self.terms.iter().map(|t| SeparableTerm { weight: t.weight * factor, ..t.clone() }).collect();
        let gram = GramRepresentation::new(self.gram.n(), self.gram.m(), self.gram.d(), self.gram.entries() * factor)
            .expect("same shape");
        Self { gram, terms }
    }

    /// Witness for `M₁ + M₂`.
    pub fn combine(&self, other: &Self) -> Result<Self, ApproxError> {
        let g = &self.gram;
        let terms = self.terms.iter().chain(&other.terms).cloned().collect();
        Self::from_terms(g.n(), g.m(), g.d(), terms)
    }

    /// Every factor PSD and every weight positive.
    pub fn check_cones(&self) -> bool {
        self.terms.iter().all(|t| {
            t.weight >= 0.0
                && t.factors.iter().all(|f| {
                    GramRepresentation::new(0, self.gram.m(), self.gram.d(), f.clone()).is_ok_and(|g| g.is_psd(PSD_TOL))
                })
        })
    }

    pub fn to_json(&self) -> SeparableGramJson {
        SeparableGramJson {
            n: self.gram.n(),
            m: self.gram.m(),
            d: self.gram.d(),
            terms: self
                .terms
                .iter()
                .map(|t| SeparableTermJson {
                    weight: t.weight,
                    factors: t
                        .factors
                        .iter()
                        .map(|f| f.row_iter().map(|r| r.iter().copied().collect()).collect())
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &SeparableGramJson) -> Result<Self, ApproxError> {
        let mut terms = Vec::with_capacity(json.terms.len());
        for (j, t) in json.terms.iter().enumerate() {
            let mut factors = Vec::with_capacity(t.factors.len());
            for rows in &t.factors {
                let r = rows.len();
                if rows.iter().any(|row| row.len() != r) {
                    return Err(ApproxError::BadWitness(format!("term {j} has a non-square factor")));
                }
                factors.push(DMatrix::from_fn(r, r, |a, b| rows[a][b]));
            }
            terms.push(SeparableTerm { weight: t.weight, factors });
        }
        Self::from_terms(json.n, json.m, json.d, terms)
    }
}

pub fn parse_separable_gram(text: &str) -> Result<SeparableGram, ApproxError> {
    let json: SeparableGramJson = serde_json::from_str(text).map_err(|e| ApproxError::Json(e.to_string()))?;
    SeparableGram::from_json(&json)
}

/// Upper bound on `μ(𝒢(M))`: the trace of the supplied witness.
pub fn mu_upper(sg: &SeparableGram) -> f64 {
    sg.witness_trace()
}

/// `⌈8e⁴/ε²⌉`.
pub fn sample_budget(epsilon: f64) -> Result<usize, ApproxError> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(ApproxError::BadEpsilon(epsilon));
    }
    let k = (MAUREY_CONSTANT / (epsilon * epsilon)).ceil();
    if k > MAX_SAMPLES as f64 {
        return Err(ApproxError::TooManySamples(k));
    }
    Ok(k as usize)
}

/// `k` i.i.d. draws `j` with probability `tr(term j)/tr(M)`, returned as
/// the multiset `(j, count)` in increasing `j`.
pub fn draw_terms(sg: &SeparableGram, k: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let weights: Vec<f64> = sg.terms.iter().map(SeparableTerm::trace).collect();
    let dist = WeightedIndex::new(&weights).expect("positive weights");
    let mut counts = vec![0usize; weights.len()];
    for _ in 0..k {
        counts[dist.sample(rng)] += 1;
    }
    counts.into_iter().enumerate().filter(|&(_, c)| c > 0).collect()
}

/// `N = (tr M / k) Σ_s ⊗ F_{j_s}/tr F_{j_s}` for drawn counts.
fn empirical_terms(sg: &SeparableGram, draws: &[(usize, usize)], k: usize) -> Vec<SeparableTerm> {
    let total = sg.witness_trace();
    draws
        .iter()
        .map(|&(j, c)| {
            let u = sg.terms[j].unit();
            SeparableTerm { weight: total * c as f64 / k as f64, factors: u.factors }
        })
        .collect()
}

fn group_average(g: &GramRepresentation, a: &SymmetryAction) -> Result<DMatrix<f64>, ApproxError> {
    let mut sum = DMatrix::zeros(g.dim(), g.dim());
    for h in 0..a.order() {
        sum += g.act(a, h)?.entries();
    }
    Ok(sum / a.order() as f64)
}

/// `‖M − avg_G N‖₂` for a sample of size `k`.
pub fn sampled_error(sg: &SeparableGram, a: &SymmetryAction, k: usize, seed: u64) -> Result<f64, ApproxError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = draw_terms(sg, k, &mut rng);
    let g = &sg.gram;
    let n = SeparableGram::from_terms(g.n(), g.m(), g.d(), empirical_terms(sg, &draws, k))?;
    Ok((group_average(&n.gram, a)? - g.entries()).norm())
}

#[derive(Clone, Debug)]
pub struct ApproxResult {
    pub decomposition: OmegaGDecomposition<f64>,
    /// `⌈8e⁴/ε²⌉·|G|`.
    pub budget: usize,
    /// Index of the returned decomposition.
    pub terms_used: usize,
    pub samples: usize,
    pub verbatim: bool,
    pub error_schatten2: f64,
    /// `μ · ‖M − N‖₂` bounds the infinity-norm error of the polynomial.
    pub poly_error_bound: f64,
    /// The G-averaged approximant.
    pub approximant: GramRepresentation,
}

fn local_polys(sg: &SeparableGram, terms: &[SeparableTerm]) -> Result<Vec<ElementaryTerm<f64>>, ApproxError> {
    let (m, d) = (sg.gram.m(), sg.gram.d());
    terms
        .iter()
        .map(|t| {
            t.factors
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let f = if i == 0 { f * t.weight } else { f.clone() };
                    homogeneous_gram_map(&GramRepresentation::new(0, m, d, f)?)
                })
                .collect()
        })
        .collect()
}

/// Sampled separable (Ω,G)-decomposition of `𝒢(N)` with `‖M − N‖₂` small.
/// A witness that already fits the budget is used as is.
pub fn approx_separable(sg: &SeparableGram, a: &SymmetryAction, epsilon: f64, seed: u64) -> Result<ApproxResult, ApproxError> {
    if !a.is_free() {
        return Err(ApproxError::ActionNotFree);
    }
    if !sg.is_normalized() {
        return Err(ApproxError::NotNormalized(sg.witness_trace()));
    }
    let g = &sg.gram;
    let dev = g.invariance_error(a)?;
    if dev > 1e-9 * g.entries().amax().max(1.0) {
        return Err(ApproxError::NotInvariant(dev));
    }
    let k = sample_budget(epsilon)?;
    let budget = k * a.order();
    let (terms, samples, verbatim) = if sg.terms.len() <= k {
        (sg.terms.clone(), 0, true)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws = draw_terms(sg, k, &mut rng);
        (empirical_terms(sg, &draws, k), k, false)
    };
    let elementary = local_polys(sg, &terms)?;
    let site_vars = vec![g.m() + 1; g.site_count()];
    let q = from_elementary(a.complex(), &site_vars, &elementary)?;
    let decomposition = symmetrize_decomposition(&q, a)?;
    let n = SeparableGram::from_terms(g.n(), g.m(), g.d(), terms)?;
    let approximant = GramRepresentation::new(g.n(), g.m(), g.d(), group_average(&n.gram, a)?)?;
    let error_schatten2 = (approximant.entries() - g.entries()).norm();
    Ok(ApproxResult {
        terms_used: decomposition.index_size() as usize,
        decomposition,
        budget,
        samples,
        verbatim,
        error_schatten2,
        poly_error_bound: mu_upper(sg) * error_schatten2,
        approximant,
    })
}

/// Random PSD matrix of size `b` with rank in `1..=b`.
pub fn random_psd(b: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let rank = rng.random_range(1..=b);
    let mut f = DMatrix::<f64>::zeros(b, b);
    for _ in 0..rank {
        let v = DVector::<f64>::from_fn(b, |_, _| StandardNormal.sample(rng));
        f += &v * v.transpose();
    }
    f
}

/// Trace-one G-invariant witness: `base` random terms plus their images
/// under every group element (term count `base·|G|`).
pub fn random_invariant_witness(
    a: &SymmetryAction,
    m: usize,
    d: u32,
    base: usize,
    rng: &mut impl Rng,
) -> Result<SeparableGram, ApproxError> {
    let sites = a.complex().vertex_count();
    let b = monomial_basis(m, d).len();
    let mut terms = Vec::with_capacity(base * a.order());
    for _ in 0..base {
        let weight: f64 = rng.random_range(0.1..1.0);
        let factors: Vec<DMatrix<f64>> = (0..sites).map(|_| random_psd(b, rng)).collect();
        for g in 0..a.order() {
            let mut moved = vec![DMatrix::zeros(b, b); sites];
            for (i, f) in factors.iter().enumerate() {
                moved[a.vertex(g, i)] = f.clone();
            }
            terms.push(SeparableTerm { weight, factors: moved });
        }
    }
    Ok(SeparableGram::from_terms(sites - 1, m, d, terms)?.normalized())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeReport {
    pub ks: Vec<usize>,
    pub mean_errors: Vec<f64>,
    pub slope: f64,
}

/// Least-squares slope of `log(mean error)` against `log k`, with `trials`
/// seeded repetitions per `k` run in parallel.
pub fn error_slope(sg: &SeparableGram, a: &SymmetryAction, ks: &[usize], trials: usize, seed: u64) -> Result<SlopeReport, ApproxError> {
    let mut mean_errors = Vec::with_capacity(ks.len());
    for (ki, &k) in ks.iter().enumerate() {
        let errs: Result<Vec<f64>, ApproxError> = (0..trials)
            .into_par_iter()
            .map(|t| sampled_error(sg, a, k, trial_seed(seed, ki, t)))
            .collect();
        let errs = errs?;
        mean_errors.push(errs.iter().sum::<f64>() / trials as f64);
    }
    let xs: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();
    let ys: Vec<f64> = mean_errors.iter().map(|e| e.ln()).collect();
    Ok(SlopeReport { ks: ks.to_vec(), slope: ls_slope(&xs, &ys), mean_errors })
}

pub fn trial_seed(master: u64, group: usize, trial: usize) -> u64 {
    master ^ (group as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (trial as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F).rotate_left(17)
}

fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::DEFAULT_MAX_ASSIGNMENTS;
    use crate::symmetry::standard::{double_edge_free, double_edge_vertex_swap};
    use proptest::prelude::*;

    fn mono(sites: Vec<usize>, e: Vec<u32>) -> FloatPoly {
        FloatPoly::from_flat_terms(sites, [(e, 1.0)]).unwrap()
    }

    #[test]
    fn infinity_norm_examples() {
        for d in 1..4 {
            let p = mono(vec![2, 2], vec![0, d, 0, d]);
            let v = infinity_norm_lower(&p, 50, 1).unwrap();
            assert!((v - 1.0).abs() < 1e-9, "{v}");
        }
        assert_eq!(infinity_norm_lower(&FloatPoly::zero(vec![2, 2]), 10, 1).unwrap(), 0.0);
        let bad = FloatPoly::from_flat_terms(vec![2], [(vec![2, 0], 1.0), (vec![1, 0], 1.0)]).unwrap();
        assert!(matches!(infinity_norm_lower(&bad, 10, 1), Err(ApproxError::NotHomogeneous)));
        // x₀² − x₁² on the circle peaks at 1; (x₀ + x₁)² peaks at 2
        let p = FloatPoly::from_flat_terms(vec![2], [(vec![2, 0], 1.0), (vec![0, 2], -1.0)]).unwrap();
        assert!((infinity_norm_lower(&p, 20, 3).unwrap() - 1.0).abs() < 1e-9);
        let p = FloatPoly::from_flat_terms(vec![2], [(vec![2, 0], 1.0), (vec![1, 1], 2.0), (vec![0, 2], 1.0)]).unwrap();
        assert!((infinity_norm_lower(&p, 20, 3).unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn homogenize_examples() {
        // 1 + x + x² at d = 2 → x₀² + x₀x₁ + x₁²
        let p = FloatPoly::from_flat_terms(vec![1], [(vec![0], 1.0), (vec![1], 1.0), (vec![2], 1.0)]).unwrap();
        let h = homogenize(&p, 2).unwrap();
        let want = FloatPoly::from_flat_terms(vec![2], [(vec![2, 0], 1.0), (vec![1, 1], 1.0), (vec![0, 2], 1.0)]).unwrap();
        assert_eq!(h, want);
        assert_eq!(uniform_local_degree(&h).unwrap(), Some(2));
        assert!(homogenize(&p, 1).is_err());
    }

    #[test]
    fn gram_norm_examples() {
        let mut bb = DMatrix::zeros(4, 4);
        for (r, c) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            bb[(r, c)] = 1.0;
        }
        let g = GramRepresentation::new(1, 1, 1, bb).unwrap();
        let n = gram_norm_bounds(&g);
        assert!((n.sigma_max - 2.0).abs() < 1e-12 && (n.schatten2 - 2.0).abs() < 1e-12);
        let id = GramRepresentation::new(1, 2, 1, DMatrix::identity(9, 9)).unwrap();
        let n = gram_norm_bounds(&id);
        assert!((n.sigma_max - 1.0).abs() < 1e-12 && (n.schatten2 - 3.0).abs() < 1e-12);
        // ‖𝒢(bbᵗ)‖_∞ = max (x₀y₀ + x₁y₁)² = 1 ≤ σ_max
        let p = homogeneous_gram_map(&g).unwrap();
        let v = infinity_norm_lower(&p, 200, 5).unwrap();
        assert!((v - 1.0).abs() < 1e-6 && v <= n.sigma_max);
    }

    #[test]
    fn budget_examples() {
        assert_eq!(sample_budget(1.0).unwrap(), 437);
        assert_eq!(sample_budget(1.0).unwrap() * double_edge_free().order(), 874);
        assert_eq!(sample_budget(0.5).unwrap(), 1748);
        assert!(sample_budget(0.0).is_err());
        assert!(sample_budget(1e-5).is_err());
    }

    #[test]
    fn mu_upper_examples() {
        let a = double_edge_free();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = random_invariant_witness(&a, 1, 2, 3, &mut rng).unwrap();
        assert!((mu_upper(&w) - 1.0).abs() < 1e-12);
        assert!((mu_upper(&w.scaled(3.0)) - 3.0).abs() < 1e-12);
        let v = random_invariant_witness(&a, 1, 2, 2, &mut rng).unwrap().scaled(2.0);
        let both = w.combine(&v).unwrap();
        assert!(mu_upper(&both) <= mu_upper(&w) + mu_upper(&v) + 1e-12);
        assert!((both.gram().entries() - (w.gram().entries() + v.gram().entries())).amax() < 1e-12);
    }

    #[test]
    fn witness_validation_and_json() {
        let a = double_edge_free();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = random_invariant_witness(&a, 1, 2, 2, &mut rng).unwrap();
        let text = serde_json::to_string(&w.to_json()).unwrap();
        let back = parse_separable_gram(&text).unwrap();
        assert!((back.gram().entries() - w.gram().entries()).amax() < 1e-12);
        assert!(SeparableGram::new(w.gram().clone(), w.terms().to_vec()).is_ok());
        let shifted = GramRepresentation::new(1, 1, 2, w.gram().entries() * 1.5).unwrap();
        assert!(SeparableGram::new(shifted, w.terms().to_vec()).is_err());
        let neg = SeparableTerm { weight: 1.0, factors: vec![-DMatrix::identity(3, 3), DMatrix::identity(3, 3)] };
        assert!(SeparableGram::from_terms(1, 1, 2, vec![neg]).is_err());
        assert!(parse_separable_gram(r#"{"n":1,"m":1,"d":2,"terms":[{"weight":1,"factors":[[[1]]]}]}"#).is_err());
    }

    #[test]
    fn verbatim_when_within_budget() {
        let a = double_edge_free();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = random_invariant_witness(&a, 1, 1, 2, &mut rng).unwrap();
        let r = approx_separable(&w, &a, 1.0, 0).unwrap();
        assert!(r.verbatim);
        assert!(r.error_schatten2 < 1e-12);
        assert_eq!(r.terms_used, w.terms().len() * 2);
        assert!(r.terms_used <= r.budget);
        assert!(r.decomposition.check_symmetry_tol(1e-12));
        let c = r.decomposition.contract(DEFAULT_MAX_ASSIGNMENTS).unwrap().into_poly().unwrap();
        assert!(c.approx_eq(&homogeneous_gram_map(w.gram()).unwrap(), 1e-9));
    }

    #[test]
    fn sampled_approximation() {
        let a = double_edge_free();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random_invariant_witness(&a, 1, 1, 60, &mut rng).unwrap();
        // ε = 3 gives k = 49 < 120 terms, so sampling kicks in
        let r = approx_separable(&w, &a, 3.0, 9).unwrap();
        assert!(!r.verbatim);
        assert_eq!(r.samples, 49);
        assert!(r.terms_used <= r.budget);
        assert!(r.error_schatten2 < 3.0);
        assert!(r.decomposition.check_symmetry_tol(1e-12));
        let c = r.decomposition.contract(DEFAULT_MAX_ASSIGNMENTS).unwrap().into_poly().unwrap();
        assert!(c.approx_eq(&homogeneous_gram_map(&r.approximant).unwrap(), 1e-9));
        assert!(r.approximant.invariance_error(&a).unwrap() < 1e-12);
    }

    #[test]
    fn approx_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let free = double_edge_free();
        let w = random_invariant_witness(&free, 1, 1, 2, &mut rng).unwrap();
        assert!(matches!(approx_separable(&w, &double_edge_vertex_swap(), 1.0, 0), Err(ApproxError::ActionNotFree)));
        assert!(matches!(approx_separable(&w.scaled(2.0), &free, 1.0, 0), Err(ApproxError::NotNormalized(_))));
        let e11 = DMatrix::from_fn(2, 2, |r, c| if r == 0 && c == 0 { 1.0 } else { 0.0 });
        let lone = SeparableTerm { weight: 1.0, factors: vec![DMatrix::identity(2, 2), e11] };
        let skew = SeparableGram::from_terms(1, 1, 1, vec![lone]).unwrap().normalized();
        assert!(matches!(approx_separable(&skew, &free, 1.0, 0), Err(ApproxError::NotInvariant(_))));
    }

    #[test]
    fn error_decays_like_inverse_sqrt() {
        let a = double_edge_free();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = random_invariant_witness(&a, 1, 2, 10, &mut rng).unwrap();
        let r = error_slope(&w, &a, &[100, 1000, 10000], 24, 17).unwrap();
        assert!((r.slope + 0.5).abs() < 0.1, "{r:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn norm_chain(seed in any::<u64>(), m in 1usize..3, d in 1u32..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = monomial_basis(m, d).len();
            let raw = DMatrix::from_fn(b * b, b * b, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
            let g = GramRepresentation::new(1, m, d, &raw + raw.transpose()).unwrap();
            let norms = gram_norm_bounds(&g);
            prop_assert!(norms.sigma_max <= norms.schatten2 + 1e-12);
            let p = homogeneous_gram_map(&g).unwrap();
            for _ in 0..50 {
                let pt = sphere_point(&mut rng, 2, m + 1);
                let v = homogeneous_monomial_vector(d, &pt);
                prop_assert!(v.iter().map(|x| x * x).sum::<f64>() <= 1.0 + 1e-12);
                let val = p.eval(&flatten(&pt));
                let direct = DVector::from_vec(v.clone()).dot(&(g.entries() * DVector::from_vec(v)));
                prop_assert!((val - direct).abs() < 1e-9);
                prop_assert!(val.abs() <= norms.sigma_max + 1e-9);
            }
        }

        #[test]
        fn psd_witness_passes_cones(seed in any::<u64>()) {
            let a = double_edge_free();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = random_invariant_witness(&a, 1, 2, 3, &mut rng).unwrap();
            prop_assert!(w.check_cones());
            prop_assert!(w.gram().invariance_error(&a).unwrap() < 1e-12);
            prop_assert!(w.gram().is_psd(PSD_TOL));
        }
    }
}
