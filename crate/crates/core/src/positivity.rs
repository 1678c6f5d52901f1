//! Cones, Gram representations and positivity-certified decompositions.
//!
//! Gram layout: each site uses the monomials of degree `≤ d` in its `m`
//! variables, degree ascending and descending-lex inside one degree, so for
//! `m = 2, d = 2` the basis is `1, x₁, x₂, x₁², x₁x₂, x₂²`. The full basis is
//! the tensor product with site 0 outermost.

use std::collections::{BTreeMap, HashMap, HashSet};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_bigint::BigUint;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::{
    symmetrize_decomposition, symmetrize_free, Contraction, DecompositionError, ElementaryTerm, OmegaGDecomposition,
};
use crate::polynomial::{BlockPolynomial, FloatPoly, PolynomialError, SurdPoly};
use crate::scalar::{rat, Coefficient, ScaledScalar, Surd};
use crate::symmetry::{SymmetryAction, SymmetryError};

/// Relative PSD slack: eigenvalues down to `−PSD_TOL·(1 + trace)` count as zero.
pub const PSD_TOL: f64 = 1e-9;
const MAX_GRAM_DIM: usize = 4096;

#[derive(Debug, Error)]
pub enum PositivityError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Gram matrix is not symmetric (deviation {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("matrix or family is not invariant under the action (deviation {0:e})")]
    NotInvariant(f64),
    #[error("the represented polynomial is not invariant under the action")]
    NotInvariantPolynomial,
    #[error("sos_with_certificate needs a Gram matrix")]
    MissingCertificate,
    #[error("the action is not free")]
    ActionNotFree,
    #[error("locals not aligned: {0}")]
    LocalsNotAligned(String),
    #[error("factor {site} of term {term} fails its local cone check")]
    FactorNotInCone { term: usize, site: usize },
    #[error("missing square split: {0}")]
    MissingSquareSplits(String),
    #[error("action is not factorizable (residual {0:e})")]
    NotFactorizable(f64),
    #[error("search space too large ({0} > guard)")]
    SearchSpaceTooLarge(u64),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Polynomial(#[from] PolynomialError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error("invalid gram json: {0}")]
    Json(String),
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k.min(n));
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Exponent vectors of degree `≤ d` in `m` variables, in Gram order.
pub fn monomial_basis(m: usize, d: u32) -> Vec<Vec<u32>> {
    fn fill(rest: u32, slot: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slot + 1 == cur.len() {
            cur[slot] = rest;
            out.push(cur.clone());
            return;
        }
        for e in (0..=rest).rev() {
            cur[slot] = e;
            fill(rest - e, slot + 1, cur, out);
        }
    }
    let mut out = Vec::new();
    if m == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut cur = vec![0; m];
    for deg in 0..=d {
        fill(deg, 0, &mut cur, &mut out);
    }
    out
}

/// A symmetric matrix on `𝔪_d(x^[0]) ⊗ … ⊗ 𝔪_d(x^[n])`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramRepresentation {
    n: usize,
    m: usize,
    d: u32,
    entries: DMatrix<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GramJson {
    pub n: usize,
    pub m: usize,
    pub d: u32,
    pub entries: Vec<f64>,
}

impl GramRepresentation {
    pub fn new(n: usize, m: usize, d: u32, entries: DMatrix<f64>) -> Result<Self, PositivityError> {
        let dim = Self::dimension(n, m, d)?;
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(PositivityError::DimensionMismatch(format!(
                "{}x{} matrix, expected {dim}x{dim}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(PositivityError::DimensionMismatch("non-finite entry".into()));
        }
        let dev = (&entries - entries.transpose()).amax();
        if dev > 1e-12 * entries.amax().max(1.0) {
            return Err(PositivityError::NotSymmetric(dev));
        }
        let entries = (&entries + entries.transpose()) * 0.5;
        Ok(Self { n, m, d, entries })
    }

    pub fn zeros(n: usize, m: usize, d: u32) -> Result<Self, PositivityError> {
        let dim = Self::dimension(n, m, d)?;
        Ok(Self { n, m, d, entries: DMatrix::zeros(dim, dim) })
    }

    /// `Σ v vᵗ`.
    pub fn from_vectors(n: usize, m: usize, d: u32, vectors: &[Vec<f64>]) -> Result<Self, PositivityError> {
        let mut g = Self::zeros(n, m, d)?;
        for v in vectors {
            if v.len() != g.dim() {
                return Err(PositivityError::DimensionMismatch(format!("vector of length {}", v.len())));
            }
            let col = DVector::from_column_slice(v);
            g.entries += &col * col.transpose();
        }
        Ok(g)
    }

    fn dimension(n: usize, m: usize, d: u32) -> Result<usize, PositivityError> {
        let too_big = || PositivityError::DimensionMismatch(format!("Gram dimension for n={n} m={m} d={d} too large"));
        let base = binomial(m + d as usize, d as usize).ok_or_else(too_big)?;
        let dim = (0..=n).try_fold(1usize, |acc, _| acc.checked_mul(base)).ok_or_else(too_big)?;
        if dim > MAX_GRAM_DIM {
            return Err(too_big());
        }
        Ok(dim)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn site_count(&self) -> usize {
        self.n + 1
    }

    /// `D = C(m+d, d)`.
    pub fn basis_size(&self) -> usize {
        monomial_basis(self.m, self.d).len()
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let b = self.basis_size();
        let mut k = vec![0; self.site_count()];
        for slot in k.iter_mut().rev() {
            *slot = flat % b;
            flat /= b;
        }
        k
    }

    pub fn flat_index(&self, k: &[usize]) -> usize {
        let b = self.basis_size();
        k.iter().fold(0, |acc, &x| acc * b + x)
    }

    fn sites(&self) -> Vec<usize> {
        vec![self.m; self.site_count()]
    }

    /// Monomial `𝔪_k` as flat exponents.
    fn monomial(&self, basis: &[Vec<u32>], flat: usize) -> Vec<u32> {
        self.multi_index(flat).iter().flat_map(|&k| basis[k].iter().copied()).collect()
    }

    /// `𝔪ᵗ M 𝔪`.
    pub fn gram_map(&self) -> FloatPoly {
        let basis = monomial_basis(self.m, self.d);
        let monos: Vec<Vec<u32>> = (0..self.dim()).map(|k| self.monomial(&basis, k)).collect();
        let mut p = BlockPolynomial::zero(self.sites());
        for a in 0..self.dim() {
            for b in 0..self.dim() {
                let v = self.entries[(a, b)];
                if v != 0.0 {
                    let e = monos[a].iter().zip(&monos[b]).map(|(x, y)| x + y).collect();
                    p.add_term(e, v);
                }
            }
        }
        p
    }

    /// `q_k = Σ_k' B_{k,k'} 𝔪_k'` for every row of `B = self`.
    pub fn row_polys(&self) -> Vec<FloatPoly> {
        let basis = monomial_basis(self.m, self.d);
        let monos: Vec<Vec<u32>> = (0..self.dim()).map(|k| self.monomial(&basis, k)).collect();
        (0..self.dim())
            .map(|a| {
                let mut p = BlockPolynomial::zero(self.sites());
                for (b, mono) in monos.iter().enumerate() {
                    let v = self.entries[(a, b)];
                    if v != 0.0 {
                        p.add_term(mono.clone(), v);
                    }
                }
                p
            })
            .collect()
    }

    fn check_action(&self, a: &SymmetryAction) -> Result<(), PositivityError> {
        if a.complex().vertex_count() != self.site_count() {
            return Err(PositivityError::DimensionMismatch(format!(
                "action on {} sites, Gram matrix on {}",
                a.complex().vertex_count(),
                self.site_count()
            )));
        }
        Ok(())
    }

    /// Flat index of `gk`, `(gk)_j = k_{g⁻¹j}`.
    fn index_perm(&self, a: &SymmetryAction, g: usize) -> Vec<usize> {
        (0..self.dim())
            .map(|flat| {
                let k = self.multi_index(flat);
                let mut gk = vec![0; k.len()];
                for (i, &ki) in k.iter().enumerate() {
                    gk[a.vertex(g, i)] = ki;
                }
                self.flat_index(&gk)
            })
            .collect()
    }

    /// `(gM)_{gk,gk'} = M_{k,k'}`, so that `gram_map(gM) = g·gram_map(M)`.
    pub fn act(&self, a: &SymmetryAction, g: usize) -> Result<Self, PositivityError> {
        self.check_action(a)?;
        let perm = self.index_perm(a, g);
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                out[(perm[r], perm[c])] = self.entries[(r, c)];
            }
        }
        Ok(Self { entries: out, ..self.clone() })
    }

    /// Largest `|gM − M|` entry over the group.
    pub fn invariance_error(&self, a: &SymmetryAction) -> Result<f64, PositivityError> {
        let mut worst: f64 = 0.0;
        for g in 1..a.order() {
            worst = worst.max((&self.act(a, g)?.entries - &self.entries).amax());
        }
        Ok(worst)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.entries.clone()).eigenvalues.min()
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol * (1.0 + self.entries.trace().abs())
    }

    /// Symmetric PSD square root. Negative eigenvalues and those at the
    /// roundoff floor are set to zero; otherwise `√ε` noise leaks into `B`.
    pub fn psd_sqrt(&self) -> Self {
        let eig = SymmetricEigen::new(self.entries.clone());
        let top = eig.eigenvalues.amax();
        let floor = 64.0 * f64::EPSILON * self.dim() as f64 * top;
        let roots = eig.eigenvalues.map(|l| if l > floor { l.sqrt() } else { 0.0 });
        let b = &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose();
        let b = (&b + b.transpose()) * 0.5;
        Self { entries: b, ..self.clone() }
    }

    pub fn to_json(&self) -> GramJson {
        GramJson {
            n: self.n,
            m: self.m,
            d: self.d,
            entries: self.entries.transpose().iter().copied().collect(),
        }
    }

    pub fn from_json(json: &GramJson) -> Result<Self, PositivityError> {
        let dim = Self::dimension(json.n, json.m, json.d)?;
        if json.entries.len() != dim * dim {
            return Err(PositivityError::DimensionMismatch(format!(
                "{} entries, expected {}",
                json.entries.len(),
                dim * dim
            )));
        }
        Self::new(json.n, json.m, json.d, DMatrix::from_row_slice(dim, dim, &json.entries))
    }
}

pub fn parse_gram(text: &str) -> Result<GramRepresentation, PositivityError> {
    let json: GramJson = serde_json::from_str(text).map_err(|e| PositivityError::Json(e.to_string()))?;
    GramRepresentation::from_json(&json)
}

/// `(1/|G|) Σ_g gM`; requires the represented polynomial to be invariant.
pub fn gram_symmetrize(m: &GramRepresentation, a: &SymmetryAction) -> Result<GramRepresentation, PositivityError> {
    m.check_action(a)?;
    let p = m.gram_map();
    for g in 1..a.order() {
        if !p.act_by(a, g)?.approx_eq(&p, 1e-9) {
            return Err(PositivityError::NotInvariantPolynomial);
        }
    }
    let mut acc = m.entries.clone();
    for g in 1..a.order() {
        acc += &m.act(a, g)?.entries;
    }
    acc /= a.order() as f64;
    Ok(GramRepresentation { entries: acc, ..m.clone() })
}

/// Which cone `cone_check` tests.
#[derive(Clone, Debug, PartialEq)]
pub enum Cone {
    NnCoeff,
    SosWithCertificate,
    /// Random search for a negative value; never proves nonnegativity.
    NonnegativeSampled { samples: usize, seed: u64, radius: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Member,
    NotMember { reason: String },
    CounterexampleFound { point: Vec<f64>, value: f64 },
    NoCounterexampleFound { samples: usize },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Member | Verdict::NoCounterexampleFound { .. })
    }
}

pub fn cone_check<C: Coefficient>(
    p: &BlockPolynomial<C>,
    cone: &Cone,
    certificate: Option<&GramRepresentation>,
) -> Result<Verdict, PositivityError> {
    match cone {
        Cone::NnCoeff => Ok(if p.has_nonnegative_coeffs() {
            Verdict::Member
        } else {
            let (e, c) = p.terms().find(|(_, c)| c.is_negative()).expect("some negative coefficient");
            Verdict::NotMember { reason: format!("coefficient {} at {e:?}", c.to_f64()) }
        }),
        Cone::SosWithCertificate => {
            let m = certificate.ok_or(PositivityError::MissingCertificate)?;
            if m.sites() != p.sites() {
                return Err(PositivityError::DimensionMismatch(format!(
                    "certificate sites {:?}, polynomial sites {:?}",
                    m.sites(),
                    p.sites()
                )));
            }
            let lam = m.min_eigenvalue();
            if !m.is_psd(PSD_TOL) {
                return Ok(Verdict::NotMember { reason: format!("certificate has eigenvalue {lam:e}") });
            }
            let diff = m.gram_map().max_coeff_diff(&p.to_float());
            let scale = p.terms().map(|(_, c)| c.to_f64().abs()).fold(1.0, f64::max);
            Ok(if diff <= 1e-9 * scale {
                Verdict::Member
            } else {
                Verdict::NotMember { reason: format!("certificate represents a different polynomial (diff {diff:e})") }
            })
        }
        Cone::NonnegativeSampled { samples, seed, radius } => Ok(sample_for_negative(&p.to_float(), *samples, *seed, *radius)),
    }
}

/// Lattice points in `{−1,0,1}^N` (when few) followed by uniform samples.
fn sample_for_negative(p: &FloatPoly, samples: usize, seed: u64, radius: f64) -> Verdict {
    let nv = p.total_vars();
    let tol = 1e-12 * p.terms().map(|(_, c)| c.abs()).sum::<f64>().max(1.0);
    let mut tried = 0;
    let check = |x: Vec<f64>| {
        let v = p.eval(&x);
        (v < -tol).then_some(Verdict::CounterexampleFound { point: x, value: v })
    };
    if nv <= 8 {
        for code in 0..3usize.pow(nv as u32) {
            let x = (0..nv).map(|j| ((code / 3usize.pow(j as u32)) % 3) as f64 - 1.0).collect();
            tried += 1;
            if let Some(v) = check(x) {
                return v;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let x = (0..nv).map(|_| rng.random_range(-radius..=radius)).collect();
        tried += 1;
        if let Some(v) = check(x) {
            return v;
        }
    }
    Verdict::NoCounterexampleFound { samples: tried }
}

/// Local cones usable as certified membership tests for single-site factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalCone {
    NnCoeff,
    /// Every monomial has even exponents and a nonnegative coefficient; such
    /// a polynomial is visibly a sum of squares of monomials.
    DiagonalSos,
}

pub fn in_local_cone<C: Coefficient>(p: &BlockPolynomial<C>, cone: LocalCone) -> bool {
    match cone {
        LocalCone::NnCoeff => p.has_nonnegative_coeffs(),
        LocalCone::DiagonalSos => p.has_nonnegative_coeffs() && p.terms().all(|(e, _)| e.iter().all(|x| x % 2 == 0)),
    }
}

/// `p = Σ (√c · x^{e/2})²` for a polynomial in the diagonal sos cone.
pub fn diagonal_square_split(p: &FloatPoly) -> Option<Vec<FloatPoly>> {
    if !in_local_cone(p, LocalCone::DiagonalSos) {
        return None;
    }
    Some(
        p.terms()
            .map(|(e, c)| {
                let mut t = BlockPolynomial::zero(p.sites().to_vec());
                t.add_term(e.iter().map(|x| x / 2).collect(), c.sqrt());
                t
            })
            .collect(),
    )
}

/// Nonzero rows of the square root of a PSD Gram matrix, `Σ τ_k² = gram_map`.
pub fn gram_square_split(m: &GramRepresentation) -> Result<Vec<FloatPoly>, PositivityError> {
    if !m.is_psd(PSD_TOL) {
        return Err(PositivityError::NotPsd(m.min_eigenvalue()));
    }
    Ok(m.psd_sqrt().row_polys().into_iter().filter(|q| !q.is_zero()).collect())
}

// ---------------------------------------------------------------------------
// sos families

/// A family `(q_k)_{k ∈ S₀×…×Sₙ}`, stored flat with site 0 outermost.
#[derive(Clone, Debug, PartialEq)]
pub struct SosFamily<C> {
    site_vars: Vec<usize>,
    sizes: Vec<usize>,
    polys: Vec<BlockPolynomial<C>>,
}

fn flat_of(sizes: &[usize], k: &[usize]) -> usize {
    k.iter().zip(sizes).fold(0, |acc, (&x, &s)| acc * s + x)
}

fn multi_of(sizes: &[usize], mut flat: usize) -> Vec<usize> {
    let mut k = vec![0; sizes.len()];
    for (slot, &s) in k.iter_mut().zip(sizes).rev() {
        *slot = flat % s;
        flat /= s;
    }
    k
}

fn grid_len(sizes: &[usize]) -> Result<usize, PositivityError> {
    sizes
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .filter(|&n| n <= 1 << 24)
        .ok_or_else(|| PositivityError::DimensionMismatch(format!("family grid {sizes:?} too large")))
}

impl<C: Coefficient> SosFamily<C> {
    pub fn new(site_vars: Vec<usize>, sizes: Vec<usize>, polys: Vec<BlockPolynomial<C>>) -> Result<Self, PositivityError> {
        if sizes.len() != site_vars.len() {
            return Err(PositivityError::DimensionMismatch(format!("{} sizes for {} sites", sizes.len(), site_vars.len())));
        }
        if polys.len() != grid_len(&sizes)? {
            return Err(PositivityError::DimensionMismatch(format!("{} polynomials for grid {sizes:?}", polys.len())));
        }
        if let Some(q) = polys.iter().find(|q| q.sites() != site_vars.as_slice()) {
            return Err(PolynomialError::SiteMismatch(q.sites().to_vec(), site_vars).into());
        }
        Ok(Self { site_vars, sizes, polys })
    }

    pub fn site_vars(&self) -> &[usize] {
        &self.site_vars
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn get(&self, k: &[usize]) -> &BlockPolynomial<C> {
        &self.polys[flat_of(&self.sizes, k)]
    }

    pub fn polys(&self) -> &[BlockPolynomial<C>] {
        &self.polys
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        multi_of(&self.sizes, flat)
    }

    pub fn sum_of_squares(&self) -> BlockPolynomial<C> {
        let mut out = BlockPolynomial::zero(self.site_vars.clone());
        for q in &self.polys {
            out.add_in_place(&q.mul(q).expect("same layout")).expect("same layout");
        }
        out
    }

    fn check_action(&self, a: &SymmetryAction) -> Result<(), PositivityError> {
        let nv = a.complex().vertex_count();
        if nv != self.sizes.len() {
            return Err(PositivityError::DimensionMismatch(format!("action on {nv} sites, family on {}", self.sizes.len())));
        }
        for g in 0..a.order() {
            for i in 0..nv {
                if self.sizes[a.vertex(g, i)] != self.sizes[i] {
                    return Err(PositivityError::DimensionMismatch(format!("sizes {:?} not constant on orbits", self.sizes)));
                }
            }
        }
        Ok(())
    }

    /// `max_{g,k} |q_{gk} − g·q_k|` coefficient-wise.
    pub fn invariance_error(&self, a: &SymmetryAction) -> Result<f64, PositivityError> {
        self.check_action(a)?;
        let mut worst: f64 = 0.0;
        for g in 1..a.order() {
            for (flat, q) in self.polys.iter().enumerate() {
                let k = self.multi_index(flat);
                let mut gk = vec![0; k.len()];
                for (i, &ki) in k.iter().enumerate() {
                    gk[a.vertex(g, i)] = ki;
                }
                worst = worst.max(self.get(&gk).max_coeff_diff(&q.act_by(a, g)?));
            }
        }
        Ok(worst)
    }

    fn coeff_scale(&self) -> f64 {
        self.polys.iter().flat_map(|q| q.terms().map(|(_, c)| c.to_f64().abs())).fold(1.0, f64::max)
    }
}

/// Family of Thm.-style rows `q_k = (B 𝔪)_k` with `B = √M`.
pub fn invariant_sos_family(m: &GramRepresentation, a: &SymmetryAction, tol: f64) -> Result<SosFamily<f64>, PositivityError> {
    m.check_action(a)?;
    if !m.is_psd(tol) {
        return Err(PositivityError::NotPsd(m.min_eigenvalue()));
    }
    let dev = m.invariance_error(a)?;
    if dev > tol * (1.0 + m.entries.amax()) {
        return Err(PositivityError::NotInvariant(dev));
    }
    let b = m.psd_sqrt();
    let sizes = vec![m.basis_size(); m.site_count()];
    SosFamily::new(m.sites(), sizes, b.row_polys())
}

/// `q_k = Σ_j Π_i locals[i][k_i][j](x^[i])`: an elementary decomposition of
/// each family member whose site-`i` factors only see `k_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyElementary<C> {
    site_vars: Vec<usize>,
    sizes: Vec<usize>,
    terms: usize,
    locals: Vec<Vec<Vec<BlockPolynomial<C>>>>,
}

impl<C: Coefficient> FamilyElementary<C> {
    pub fn new(site_vars: Vec<usize>, locals: Vec<Vec<Vec<BlockPolynomial<C>>>>) -> Result<Self, PositivityError> {
        if locals.len() != site_vars.len() {
            return Err(PositivityError::LocalsNotAligned(format!("{} sites of locals, {} sites", locals.len(), site_vars.len())));
        }
        let terms = locals.first().and_then(|s| s.first()).map_or(0, |v| v.len());
        for (i, site) in locals.iter().enumerate() {
            for (t, row) in site.iter().enumerate() {
                if row.len() != terms {
                    return Err(PositivityError::LocalsNotAligned(format!("site {i} index {t}: {} terms, expected {terms}", row.len())));
                }
                if row.iter().any(|p| p.sites() != [site_vars[i]]) {
                    return Err(PositivityError::LocalsNotAligned(format!("site {i} index {t}: wrong variable layout")));
                }
            }
        }
        let sizes = locals.iter().map(|s| s.len()).collect();
        Ok(Self { site_vars, sizes, terms, locals })
    }

    /// Sparse split of `B = Σ_{(a,b)} B_ab ⊗_i E_{a_i b_i}`: one term per
    /// nonzero entry of the root, with the entry carried by site 0.
    pub fn from_root(b: &GramRepresentation, zero_tol: f64) -> Result<FamilyElementary<f64>, PositivityError> {
        let basis = monomial_basis(b.m, b.d);
        let dsize = basis.len();
        let ns = b.site_count();
        let cut = zero_tol * b.entries.amax().max(1.0);
        let mut locals = vec![vec![Vec::new(); dsize]; ns];
        for r in 0..b.dim() {
            for c in 0..b.dim() {
                let v = b.entries[(r, c)];
                if v.abs() <= cut {
                    continue;
                }
                let kr = b.multi_index(r);
                let kc = b.multi_index(c);
                for i in 0..ns {
                    for (t, slot) in locals[i].iter_mut().enumerate() {
                        let mut p = BlockPolynomial::zero(vec![b.m]);
                        if t == kr[i] {
                            p.add_term(basis[kc[i]].clone(), if i == 0 { v } else { 1.0 });
                        }
                        slot.push(p);
                    }
                }
            }
        }
        FamilyElementary::new(b.sites(), locals)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn term_count(&self) -> usize {
        self.terms
    }

    pub fn family(&self) -> Result<SosFamily<C>, PositivityError> {
        let total = grid_len(&self.sizes)?;
        let polys = (0..total)
            .map(|flat| {
                let k = multi_of(&self.sizes, flat);
                let mut q = BlockPolynomial::zero(self.site_vars.clone());
                for j in 0..self.terms {
                    let refs: Vec<&BlockPolynomial<C>> = k.iter().enumerate().map(|(i, &ki)| &self.locals[i][ki][j]).collect();
                    q.add_in_place(&BlockPolynomial::tensor(&refs)).expect("same layout");
                }
                q
            })
            .collect();
        SosFamily::new(self.site_vars.clone(), self.sizes.clone(), polys)
    }
}

/// Sos (Ω,G)-decomposition: locals `q^[i]_{t,β}` with `t ∈ Sᵢ`; member `k`
/// contracts to `q_k = scale^(n+1) Σ_α Π_i q^[i]_{kᵢ, α|i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyDecomposition<C> {
    action: SymmetryAction,
    site_vars: Vec<usize>,
    sizes: Vec<usize>,
    index_size: u32,
    locals: Vec<Vec<BTreeMap<Vec<u32>, BlockPolynomial<C>>>>,
    scale: ScaledScalar,
}

impl<C: Coefficient> FamilyDecomposition<C> {
    pub fn new(action: &SymmetryAction, site_vars: Vec<usize>, sizes: Vec<usize>, index_size: u32) -> Result<Self, PositivityError> {
        // reuse the layout validation of plain decompositions
        OmegaGDecomposition::<C>::new(action, site_vars.clone(), index_size)?;
        if sizes.len() != site_vars.len() {
            return Err(PositivityError::DimensionMismatch(format!("{} sizes for {} sites", sizes.len(), site_vars.len())));
        }
        grid_len(&sizes)?;
        for g in 0..action.order() {
            for i in 0..sizes.len() {
                if sizes[action.vertex(g, i)] != sizes[i] {
                    return Err(PositivityError::DimensionMismatch(format!("sizes {sizes:?} not constant on orbits")));
                }
            }
        }
        let locals = sizes.iter().map(|&s| vec![BTreeMap::new(); s]).collect();
        Ok(Self { action: action.clone(), site_vars, sizes, index_size, locals, scale: ScaledScalar::one() })
    }

    pub fn with_scale(mut self, scale: ScaledScalar) -> Self {
        self.scale = scale;
        self
    }

    /// Add `poly` to `q^[site]_{t, beta}`.
    pub fn insert(&mut self, site: usize, t: usize, beta: Vec<u32>, poly: BlockPolynomial<C>) -> Result<(), PositivityError> {
        if site >= self.sizes.len() || t >= self.sizes[site] {
            return Err(PositivityError::LocalsNotAligned(format!("no family index {t} at site {site}")));
        }
        let c = self.action.complex();
        if beta.len() != c.labels_at(site).len() || beta.iter().any(|&b| b >= self.index_size) {
            return Err(DecompositionError::BadAssignment(format!("{beta:?} at site {site}")).into());
        }
        if poly.sites() != [self.site_vars[site]] {
            return Err(PositivityError::LocalsNotAligned(format!("local at site {site} has layout {:?}", poly.sites())));
        }
        let slot = &mut self.locals[site][t];
        match slot.get_mut(&beta) {
            Some(p) => {
                p.add_in_place(&poly)?;
                if p.is_zero() {
                    slot.remove(&beta);
                }
            }
            None if !poly.is_zero() => {
                slot.insert(beta, poly);
            }
            None => {}
        }
        Ok(())
    }

    pub fn action(&self) -> &SymmetryAction {
        &self.action
    }

    pub fn site_vars(&self) -> &[usize] {
        &self.site_vars
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn index_size(&self) -> u32 {
        self.index_size
    }

    pub fn scale(&self) -> &ScaledScalar {
        &self.scale
    }

    pub fn local(&self, site: usize, t: usize, beta: &[u32]) -> Option<&BlockPolynomial<C>> {
        self.locals.get(site)?.get(t)?.get(beta)
    }

    pub fn member_count(&self) -> usize {
        self.sizes.iter().product()
    }

    /// The plain decomposition of member `k`.
    pub fn member(&self, k: &[usize]) -> Result<OmegaGDecomposition<C>, PositivityError> {
        if k.len() != self.sizes.len() || k.iter().zip(&self.sizes).any(|(&x, &s)| x >= s) {
            return Err(PositivityError::DimensionMismatch(format!("member {k:?} outside grid {:?}", self.sizes)));
        }
        let mut out = OmegaGDecomposition::new(&self.action, self.site_vars.clone(), self.index_size)?.with_scale(self.scale.clone());
        for (i, &ki) in k.iter().enumerate() {
            for (beta, p) in &self.locals[i][ki] {
                out.insert(i, beta.clone(), p.clone())?;
            }
        }
        Ok(out)
    }

    pub fn contract_member(&self, k: &[usize], guard: u64) -> Result<Contraction<C>, PositivityError> {
        Ok(self.member(k)?.contract(guard)?)
    }

    /// The contracted family; fails when the scale is not representable in `C`.
    pub fn family(&self, guard: u64) -> Result<SosFamily<C>, PositivityError> {
        let polys = (0..grid_len(&self.sizes)?)
            .map(|flat| {
                let c = self.contract_member(&multi_of(&self.sizes, flat), guard)?;
                let residual = c.residual.clone();
                c.into_poly()
                    .ok_or_else(|| DecompositionError::ScaleNotRepresentable(residual.to_string()).into())
            })
            .collect::<Result<Vec<_>, PositivityError>>()?;
        SosFamily::new(self.site_vars.clone(), self.sizes.clone(), polys)
    }

    /// `q^[gi]_{t, ᵍβ} = q^[i]_{t, β}` for all `g, i, t, β`.
    pub fn check_joint_symmetry(&self, tol: f64) -> bool {
        for i in 0..self.sizes.len() {
            for g in 1..self.action.order() {
                let gi = self.action.vertex(g, i);
                let map = self.action.assignment_map(g, i);
                for t in 0..self.sizes[i] {
                    if self.locals[i][t].len() != self.locals[gi][t].len() {
                        return false;
                    }
                    for (beta, p) in &self.locals[i][t] {
                        let gbeta: Vec<u32> = map.iter().map(|&k| beta[k]).collect();
                        match self.locals[gi][t].get(&gbeta) {
                            Some(q) if q.approx_eq(p, tol) => {}
                            _ => return false,
                        }
                    }
                }
            }
        }
        true
    }

    pub fn map_coeffs<D: Coefficient>(&self, f: impl Fn(&C) -> D + Copy) -> FamilyDecomposition<D> {
        FamilyDecomposition {
            action: self.action.clone(),
            site_vars: self.site_vars.clone(),
            sizes: self.sizes.clone(),
            index_size: self.index_size,
            locals: self
                .locals
                .iter()
                .map(|site| {
                    site.iter()
                        .map(|m| m.iter().map(|(b, p)| (b.clone(), p.map_coeffs(f))).collect())
                        .collect()
                })
                .collect(),
            scale: self.scale.clone(),
        }
    }

    pub fn to_float(&self) -> FamilyDecomposition<f64> {
        self.map_coeffs(|c| c.to_f64())
    }
}

/// Per-k (Ω,G)-decompositions with index set `I × G` built from an
/// elementary family decomposition of an invariant family. The family index
/// `kᵢ` rides along passively through the linearizer construction; each
/// member contracts back to `q_k` (the `1/|G|` is carried by the scale).
pub fn family_symmetrize<C: Coefficient>(
    fe: &FamilyElementary<C>,
    a: &SymmetryAction,
) -> Result<FamilyDecomposition<C>, PositivityError> {
    if !a.is_free() {
        return Err(PositivityError::ActionNotFree);
    }
    let fam = fe.family()?;
    let dev = fam.invariance_error(a)?;
    let allowed = if C::EXACT { 0.0 } else { 1e-9 * fam.coeff_scale() };
    if dev > allowed {
        return Err(PositivityError::NotInvariant(dev));
    }
    let ns = fe.site_vars.len();
    let trivial = SymmetryAction::trivial(a.complex());
    let mut out: Option<FamilyDecomposition<C>> = None;
    let tmax = fe.sizes.iter().copied().max().unwrap_or(0);
    for t in 0..tmax {
        // Ω-decomposition whose site-i locals are the t-th slice at every site
        let mut slice = OmegaGDecomposition::new(&trivial, fe.site_vars.clone(), fe.terms as u32)?;
        for i in 0..ns {
            if t < fe.sizes[i] {
                for (j, p) in fe.locals[i][t].iter().enumerate() {
                    slice.insert(i, vec![j as u32; a.complex().labels_at(i).len()], p.clone())?;
                }
            }
        }
        let sym = symmetrize_decomposition(&slice, a)?;
        let dst = match &mut out {
            Some(d) => d,
            None => out.insert(
                FamilyDecomposition::new(a, fe.site_vars.clone(), fe.sizes.clone(), sym.index_size())?.with_scale(sym.scale().clone()),
            ),
        };
        for i in 0..ns {
            if t < fe.sizes[i] {
                for (beta, p) in sym.locals_at(i) {
                    dst.insert(i, t, beta.clone(), p.clone())?;
                }
            }
        }
    }
    match out {
        Some(d) => Ok(d),
        None => Ok(FamilyDecomposition::new(a, fe.site_vars.clone(), fe.sizes.clone(), fe.terms as u32 * a.order() as u32)?),
    }
}

/// Plain decomposition with index `I × I` (pair `(a,b)` as `a·|I| + b`)
/// contracting to `Σ_k q_k²`.
pub fn sos_to_plain<C: Coefficient>(f: &FamilyDecomposition<C>) -> Result<OmegaGDecomposition<C>, PositivityError> {
    let isz = f.index_size as u64;
    let sq = isz * isz;
    if sq > u32::MAX as u64 {
        return Err(DecompositionError::SizeTooLarge(sq as usize).into());
    }
    let mut out = OmegaGDecomposition::new(&f.action, f.site_vars.clone(), sq as u32)?.with_scale(f.scale.mul(&f.scale));
    for (i, site) in f.locals.iter().enumerate() {
        for slot in site {
            for (b1, p1) in slot {
                for (b2, p2) in slot {
                    let beta = b1.iter().zip(b2).map(|(&x, &y)| x * f.index_size + y).collect();
                    out.insert(i, beta, p1.mul(p2)?)?;
                }
            }
        }
    }
    Ok(out)
}

/// The hand-built family `q₀₀ = q₁₁ = √2(1+xy)`, `q₀₁ = y`, `q₁₀ = x`, whose
/// squares sum to `x² + y² + 4(1+xy)²`.
pub fn illustrating_family() -> SosFamily<Surd> {
    let s2 = Surd::from_scaled(ScaledScalar::new(rat(2, 1), 2).expect("valid"));
    let one = Surd::one();
    let sites = vec![1, 1];
    let t = |terms: Vec<(Vec<u32>, Surd)>| SurdPoly::from_flat_terms(sites.clone(), terms).expect("valid");
    let diag = t(vec![(vec![0, 0], s2.clone()), (vec![1, 1], s2)]);
    SosFamily::new(
        sites.clone(),
        vec![2, 2],
        vec![diag.clone(), t(vec![(vec![0, 1], one.clone())]), t(vec![(vec![1, 0], one)]), diag],
    )
    .expect("valid family")
}

/// `x² + y² + 4(1+xy)²`.
pub fn illustrating_polynomial() -> BlockPolynomial<BigRational> {
    BlockPolynomial::from_flat_terms(
        vec![1, 1],
        [
            (vec![2, 0], rat(1, 1)),
            (vec![0, 2], rat(1, 1)),
            (vec![0, 0], rat(4, 1)),
            (vec![1, 1], rat(8, 1)),
            (vec![2, 2], rat(4, 1)),
        ],
    )
    .expect("valid")
}

fn surd(r: BigRational, k: u32) -> Surd {
    Surd::from_scaled(ScaledScalar::new(r, k).expect("positive radicand"))
}

fn linear(c0: Surd, c1: Surd) -> SurdPoly {
    BlockPolynomial::univariate(&[c0, c1])
}

/// Index-3 sos (Δ, C₂)-decomposition of the illustrating family: the site-0
/// locals are 3×3 matrices of linear polynomials (rows `β(𝔞)`, columns
/// `β(𝔟)`), site 1 carries the transposes, and member `(k₀,k₁)` contracts
/// to `tr(Q_{k₀}(x) Q_{k₁}(y))`.
pub fn double_edge_sos_witness() -> FamilyDecomposition<Surd> {
    let a = crate::symmetry::standard::double_edge_free();
    let z = Surd::zero;
    let q4 = surd(rat(2, 1), 4);
    let half_root = surd(rat(1, 2), 2);
    let root2 = surd(rat(2, 1), 2);
    let m0: [[SurdPoly; 3]; 3] = [
        [linear(z(), q4.clone()), linear(half_root, z()), linear(z(), z())],
        [linear(Surd::one(), z()), linear(z(), z()), linear(z(), z())],
        [linear(z(), z()), linear(z(), z()), linear(z(), z())],
    ];
    let m1: [[SurdPoly; 3]; 3] = [
        [linear(z(), z()), linear(z(), z()), linear(z(), z())],
        [linear(z(), root2), linear(z(), q4.clone()), linear(z(), z())],
        [linear(z(), z()), linear(z(), z()), linear(q4, z())],
    ];
    let mut out = FamilyDecomposition::new(&a, vec![1, 1], vec![2, 2], 3).expect("valid layout");
    for (t, m) in [m0, m1].iter().enumerate() {
        for r in 0..3 {
            for c in 0..3 {
                out.insert(0, t, vec![r as u32, c as u32], m[r][c].clone()).expect("valid");
                out.insert(1, t, vec![r as u32, c as u32], m[c][r].clone()).expect("valid");
            }
        }
    }
    out
}

/// Index-4 sos (Λ₁, C₂)-decomposition: `q^[i]_{0,·} = a + b·t`,
/// `q^[i]_{1,·} = c + d·t` on both sites, with `a,b,c` orthogonal of squared
/// length √2, `d ⟂ b,c`, `|d|² = √2` and `⟨a,d⟩ = 1`.
pub fn single_edge_sos_witness() -> FamilyDecomposition<Surd> {
    let a = crate::symmetry::standard::single_edge_swap();
    let s = surd(rat(2, 1), 4);
    let d = surd(rat(1, 2), 4);
    let z = Surd::zero;
    // rows: (constant, linear) coefficient per index value
    let rows: [Vec<(Surd, Surd)>; 2] = [
        vec![(s.clone(), z()), (z(), s.clone()), (z(), z()), (z(), z())],
        vec![(z(), d.clone()), (z(), z()), (s, z()), (z(), d)],
    ];
    let mut out = FamilyDecomposition::new(&a, vec![1, 1], vec![2, 2], 4).expect("valid layout");
    for (t, row) in rows.iter().enumerate() {
        for (alpha, (c0, c1)) in row.iter().enumerate() {
            for site in 0..2 {
                out.insert(site, t, vec![alpha as u32], linear(c0.clone(), c1.clone())).expect("valid");
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// separable decompositions, factorizability, rank-inequality constructions

/// Separable (Ω,G)-decomposition of an invariant elementary sum whose
/// factors all pass `in_cone(site, factor)`.
pub fn separable_symmetrize<C: Coefficient>(
    site_vars: &[usize],
    terms: &[ElementaryTerm<C>],
    a: &SymmetryAction,
    in_cone: impl Fn(usize, &BlockPolynomial<C>) -> bool,
) -> Result<OmegaGDecomposition<C>, PositivityError> {
    if !a.is_free() {
        return Err(PositivityError::ActionNotFree);
    }
    for (j, t) in terms.iter().enumerate() {
        for (i, p) in t.iter().enumerate() {
            if !in_cone(i, p) {
                return Err(PositivityError::FactorNotInCone { term: j, site: i });
            }
        }
    }
    Ok(symmetrize_free(site_vars, terms, a)?)
}

/// A positive solution `C^[i]_β` of `Σ_α... K_α Π_i C^[i]_{α|i} = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Factorization {
    pub index_size: u32,
    /// `C^[i]_β` for every assignment `β` at every site.
    pub values: Vec<BTreeMap<Vec<u32>, f64>>,
    /// `K_α` per global assignment.
    pub counts: BTreeMap<Vec<u32>, u64>,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FactorizabilityResult {
    Factorizable(Factorization),
    Infeasible { residual: f64 },
}

fn all_assignments(len: usize, size: u32) -> impl Iterator<Item = Vec<u32>> {
    let total = (size as u64).pow(len as u32);
    (0..total).map(move |mut code| {
        let mut v = vec![0u32; len];
        for slot in v.iter_mut().rev() {
            *slot = (code % size as u64) as u32;
            code /= size as u64;
        }
        v
    })
}

fn checked_count(size: u32, len: usize, guard: u64) -> Result<u64, PositivityError> {
    (size as u64)
        .checked_pow(len as u32)
        .filter(|&c| c <= guard)
        .ok_or(PositivityError::SearchSpaceTooLarge(guard))
}

/// Counts `K_α` and solves the log-linear system `Σ_i log C^[i]_{α|i} = −log K_α`
/// in least squares with one unknown per G-orbit of `(i, β)`.
pub fn factorizability_solve(a: &SymmetryAction, index_size: u32, guard: u64) -> Result<FactorizabilityResult, PositivityError> {
    let c = a.complex();
    let ns = c.vertex_count();
    let nl = c.label_count();
    if index_size == 0 {
        return Err(DecompositionError::BadAssignment("index size 0".into()).into());
    }
    let rows = checked_count(index_size, nl, guard)?;
    let mut cols = 0u64;
    for i in 0..ns {
        cols += checked_count(index_size, c.labels_at(i).len(), guard)?;
    }
    if cols > guard || rows.saturating_mul(cols) > 50_000_000 {
        return Err(PositivityError::SearchSpaceTooLarge(guard));
    }

    // orbits of (i, β)
    let mut orbit: HashMap<(usize, Vec<u32>), usize> = HashMap::new();
    let mut orbit_count = 0;
    for i in 0..ns {
        for beta in all_assignments(c.labels_at(i).len(), index_size) {
            if orbit.contains_key(&(i, beta.clone())) {
                continue;
            }
            for g in 0..a.order() {
                orbit.insert((a.vertex(g, i), a.act_assignment(g, i, &beta)), orbit_count);
            }
            orbit_count += 1;
        }
    }

    let stabs: Vec<Vec<usize>> = (0..ns).map(|i| a.vertex_stabilizer(i)).collect();
    let restrict = |alpha: &[u32], i: usize| -> Vec<u32> { c.labels_at(i).iter().map(|&l| alpha[l]).collect() };
    let mut counts = BTreeMap::new();
    let mut mat = DMatrix::<f64>::zeros(rows as usize, orbit_count);
    let mut rhs = DVector::<f64>::zeros(rows as usize);
    let mut visited = 0u64;
    for (r, alpha) in all_assignments(nl, index_size).enumerate() {
        let allowed: Vec<HashSet<Vec<u32>>> = (0..ns)
            .map(|i| {
                let b = restrict(&alpha, i);
                stabs[i].iter().map(|&g| a.act_assignment(g, i, &b)).collect()
            })
            .collect();
        let mut gamma = vec![u32::MAX; nl];
        let k = count_compatible(c, &allowed, 0, &mut gamma, &mut visited, guard)?;
        counts.insert(alpha.clone(), k);
        for i in 0..ns {
            mat[(r, orbit[&(i, restrict(&alpha, i))])] += 1.0;
        }
        rhs[r] = -(k as f64).ln();
    }
    let svd = mat.clone().svd(true, true);
    let x = svd.solve(&rhs, 1e-12).map_err(|e| PositivityError::DimensionMismatch(e.to_string()))?;
    let residual = (&mat * &x - &rhs).amax();
    if residual >= 1e-9 {
        return Ok(FactorizabilityResult::Infeasible { residual });
    }
    let mut values = vec![BTreeMap::new(); ns];
    for ((i, beta), o) in orbit {
        values[i].insert(beta, x[o].exp());
    }
    Ok(FactorizabilityResult::Factorizable(Factorization { index_size, values, counts, residual }))
}

fn count_compatible(
    c: &crate::complex::WeightedComplex,
    allowed: &[HashSet<Vec<u32>>],
    site: usize,
    gamma: &mut [u32],
    visited: &mut u64,
    guard: u64,
) -> Result<u64, PositivityError> {
    *visited += 1;
    if *visited > guard {
        return Err(PositivityError::SearchSpaceTooLarge(guard));
    }
    if site == allowed.len() {
        return Ok(1);
    }
    let labels = c.labels_at(site);
    let mut total = 0;
    for beta in &allowed[site] {
        if labels.iter().zip(beta).any(|(&l, &b)| gamma[l] != u32::MAX && gamma[l] != b) {
            continue;
        }
        let newly: Vec<usize> = labels.iter().copied().filter(|&l| gamma[l] == u32::MAX).collect();
        for (&l, &b) in labels.iter().zip(beta) {
            gamma[l] = b;
        }
        total += count_compatible(c, allowed, site + 1, gamma, visited, guard)?;
        for l in newly {
            gamma[l] = u32::MAX;
        }
    }
    Ok(total)
}

/// Sos (Ω,G)-decomposition from a separable one over sos locals. `split`
/// returns squares `τ_k` with `Σ τ_k² = p^[i]_β`; it is consulted once per
/// orbit representative and the result is shared along the orbit. Family
/// index `(ℓ, k)` is encoded as `ℓ·N + k` with `N` the longest split.
pub fn sep_to_sos(
    sep: &OmegaGDecomposition<f64>,
    fac: &Factorization,
    split: impl Fn(usize, &[u32], &FloatPoly) -> Option<Vec<FloatPoly>>,
) -> Result<FamilyDecomposition<f64>, PositivityError> {
    if fac.index_size != sep.index_size() {
        return Err(PositivityError::DimensionMismatch(format!(
            "factorization for index {}, decomposition index {}",
            fac.index_size,
            sep.index_size()
        )));
    }
    if !sep.check_symmetry_tol(1e-9) {
        return Err(PositivityError::NotInvariant(f64::NAN));
    }
    let a = sep.action();
    let ns = sep.site_vars().len();
    let mut orbit_of: HashMap<(usize, Vec<u32>), usize> = HashMap::new();
    let mut reps: Vec<Vec<FloatPoly>> = Vec::new();
    for i in 0..ns {
        for (beta, p) in sep.locals_at(i) {
            if orbit_of.contains_key(&(i, beta.clone())) {
                continue;
            }
            let taus = split(i, beta, p).ok_or_else(|| PositivityError::MissingSquareSplits(format!("site {i}, {beta:?}")))?;
            let mut back = BlockPolynomial::zero(p.sites().to_vec());
            for t in &taus {
                if t.sites() != p.sites() {
                    return Err(PositivityError::MissingSquareSplits(format!("site {i}, {beta:?}: wrong layout")));
                }
                back.add_in_place(&t.mul(t)?)?;
            }
            let scale = p.terms().map(|(_, c)| c.abs()).fold(1.0, f64::max);
            if back.max_coeff_diff(p) > 1e-9 * scale {
                return Err(PositivityError::MissingSquareSplits(format!("site {i}, {beta:?}: squares do not sum to the local")));
            }
            for g in 0..a.order() {
                orbit_of.insert((a.vertex(g, i), a.act_assignment(g, i, beta)), reps.len());
            }
            reps.push(taus);
        }
    }
    let n_len = reps.iter().map(Vec::len).max().unwrap_or(0).max(1);
    let size = reps.len().max(1) * n_len;
    let mut out = FamilyDecomposition::new(a, sep.site_vars().to_vec(), vec![size; ns], sep.index_size())?
        .with_scale(sep.scale().sqrt());
    for i in 0..ns {
        for (beta, _) in sep.locals_at(i) {
            let l = orbit_of[&(i, beta.clone())];
            let cval = fac.values[i].get(beta).copied().ok_or(PositivityError::NotFactorizable(f64::NAN))?;
            for (k, tau) in reps[l].iter().enumerate() {
                out.insert(i, l * n_len + k, beta.clone(), tau.scale(&cval.sqrt()))?;
            }
        }
    }
    Ok(out)
}

/// `|G| · C(d+m, d)^(n+1)`.
pub fn caratheodory_bound(m: u64, d: u64, n: u64, group_order: u64) -> BigUint {
    let mut binom = BigUint::from(1u32);
    for i in 0..d {
        binom = binom * BigUint::from(m + d - i) / BigUint::from(i + 1);
    }
    BigUint::from(group_order) * binom.pow((n + 1) as u32)
}
