//! Tensors `T ∈ ℝ^{m₀} ⊗ … ⊗ ℝ^{mₙ}` and their polynomials
//! `p_T = Σ T_j Π_i (x^[i]_{j_i})²`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::{numeric_rank, rational_rank, DecompositionError, OmegaGDecomposition};
use crate::polynomial::{coeff_to_rational, BlockPolynomial, PolynomialError};
use crate::positivity::{FamilyDecomposition, PositivityError, PSD_TOL};
use crate::scalar::{format_rational, Coefficient};
use crate::symmetry::SymmetryAction;

const MAX_ENTRIES: usize = 1 << 22;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("bad tensor shape: {0}")]
    BadShape(String),
    #[error("polynomial is not in canonical form: {0}")]
    NotCanonicalForm(String),
    #[error("negative entry in a nonnegative decomposition at site {0}")]
    NotNonnegative(usize),
    #[error("matrix {0} is not positive semidefinite")]
    NotPsd(String),
    #[error("factors are not symmetric under the action")]
    NotSymmetric,
    #[error("the vertex action is not free")]
    VertexActionNotFree,
    #[error("enumeration of {0} assignments exceeds the guard")]
    GuardExceeded(u64),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Positivity(#[from] PositivityError),
    #[error(transparent)]
    Polynomial(#[from] PolynomialError),
    #[error("invalid tensor json: {0}")]
    Json(String),
}

/// Row-major dense tensor, axis 0 outermost.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor<C> {
    dims: Vec<usize>,
    entries: Vec<C>,
}

fn entry_count(dims: &[usize]) -> Result<usize, TensorError> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(TensorError::BadShape(format!("dims {dims:?}")));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&n| n <= MAX_ENTRIES)
        .ok_or_else(|| TensorError::BadShape(format!("dims {dims:?} too large")))
}

impl<C: Coefficient> DenseTensor<C> {
    pub fn new(dims: Vec<usize>, entries: Vec<C>) -> Result<Self, TensorError> {
        let n = entry_count(&dims)?;
        if entries.len() != n {
            return Err(TensorError::BadShape(format!("{} entries for dims {dims:?}", entries.len())));
        }
        Ok(Self { dims, entries })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self, TensorError> {
        let n = entry_count(&dims)?;
        Ok(Self { dims, entries: vec![C::zero(); n] })
    }

    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> C) -> Result<Self, TensorError> {
        let mut t = Self::zeros(dims)?;
        for flat in 0..t.entries.len() {
            t.entries[flat] = f(&t.multi_index(flat));
        }
        Ok(t)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn entries(&self) -> &[C] {
        &self.entries
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut k = vec![0; self.dims.len()];
        for (slot, &d) in k.iter_mut().zip(&self.dims).rev() {
            *slot = flat % d;
            flat /= d;
        }
        k
    }

    pub fn flat_index(&self, j: &[usize]) -> usize {
        j.iter().zip(&self.dims).fold(0, |acc, (&x, &d)| acc * d + x)
    }

    pub fn get(&self, j: &[usize]) -> &C {
        &self.entries[self.flat_index(j)]
    }

    pub fn map<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> DenseTensor<D> {
        DenseTensor { dims: self.dims.clone(), entries: self.entries.iter().map(f).collect() }
    }

    pub fn to_float(&self) -> DenseTensor<f64> {
        self.map(|c| c.to_f64())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| a.minus(b).to_f64().abs()).fold(0.0, f64::max)
    }

    /// Order-2 tensors as matrices.
    pub fn to_matrix(&self) -> Result<DMatrix<f64>, TensorError> {
        if self.order() != 2 {
            return Err(TensorError::BadShape(format!("order {} is not a matrix", self.order())));
        }
        Ok(DMatrix::from_fn(self.dims[0], self.dims[1], |r, c| self.entries[r * self.dims[1] + c].to_f64()))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TensorJson {
    pub dims: Vec<usize>,
    pub entries: Vec<serde_json::Value>,
}

impl DenseTensor<BigRational> {
    pub fn from_json(json: &TensorJson) -> Result<Self, TensorError> {
        entry_count(&json.dims)?;
        let entries = json.entries.iter().map(coeff_to_rational).collect::<Result<Vec<_>, _>>()?;
        Self::new(json.dims.clone(), entries)
    }

    pub fn to_json(&self) -> TensorJson {
        TensorJson {
            dims: self.dims.clone(),
            entries: self.entries.iter().map(|c| serde_json::Value::String(format_rational(c))).collect(),
        }
    }

    /// Exact rank of an order-2 tensor.
    pub fn matrix_rank(&self) -> Result<usize, TensorError> {
        if self.order() != 2 {
            return Err(TensorError::BadShape(format!("order {} is not a matrix", self.order())));
        }
        let rows = self.entries.chunks(self.dims[1]).map(|r| r.to_vec()).collect();
        Ok(rational_rank(rows))
    }
}

impl DenseTensor<f64> {
    pub fn to_json(&self) -> TensorJson {
        TensorJson {
            dims: self.dims.clone(),
            entries: self
                .entries
                .iter()
                .map(|&c| serde_json::Number::from_f64(c).map(serde_json::Value::Number).unwrap_or(serde_json::Value::Null))
                .collect(),
        }
    }

    /// Rank with singular-value threshold `1e-8 · σ_max`.
    pub fn matrix_rank(&self) -> Result<usize, TensorError> {
        Ok(numeric_rank(&self.to_matrix()?, 1e-8))
    }
}

pub fn parse_tensor(text: &str) -> Result<DenseTensor<BigRational>, TensorError> {
    let json: TensorJson = serde_json::from_str(text).map_err(|e| TensorError::Json(e.to_string()))?;
    DenseTensor::from_json(&json)
}

fn squared_monomial(dims: &[usize], j: &[usize]) -> Vec<u32> {
    let mut e = vec![0u32; dims.iter().sum()];
    let mut off = 0;
    for (&d, &ji) in dims.iter().zip(j) {
        e[off + ji] = 2;
        off += d;
    }
    e
}

/// `p_T`.
pub fn poly_from_tensor<C: Coefficient>(t: &DenseTensor<C>) -> BlockPolynomial<C> {
    let mut p = BlockPolynomial::zero(t.dims.clone());
    for (flat, c) in t.entries.iter().enumerate() {
        p.add_term(squared_monomial(&t.dims, &t.multi_index(flat)), c.clone());
    }
    p
}

/// Inverse of `poly_from_tensor` on its image.
pub fn tensor_from_poly<C: Coefficient>(p: &BlockPolynomial<C>) -> Result<DenseTensor<C>, TensorError> {
    let dims = p.sites().to_vec();
    let mut t = DenseTensor::zeros(dims.clone())?;
    for (e, c) in p.terms() {
        let mut j = Vec::with_capacity(dims.len());
        for block in p.blocks(e) {
            let mut hits = block.iter().enumerate().filter(|(_, &x)| x != 0);
            match (hits.next(), hits.next()) {
                (Some((k, 2)), None) => j.push(k),
                _ => return Err(TensorError::NotCanonicalForm(format!("monomial {e:?}"))),
            }
        }
        let flat = t.flat_index(&j);
        t.entries[flat] = c.clone();
    }
    Ok(t)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensorPositivity {
    /// Entrywise nonnegative, equivalently `p_T` sos, equivalently `p_T ≥ 0`.
    pub nonnegative: bool,
    /// For a negative entry `T_j`: the index, the point `(e_{j₀},…,e_{jₙ})`
    /// and `p_T` there, which equals `T_j`.
    pub witness: Option<(Vec<usize>, Vec<f64>, f64)>,
}

pub fn tensor_positivity<C: Coefficient>(t: &DenseTensor<C>) -> TensorPositivity {
    match t.entries.iter().position(|c| c.is_negative()) {
        None => TensorPositivity { nonnegative: true, witness: None },
        Some(flat) => {
            let j = t.multi_index(flat);
            let point: Vec<f64> = squared_monomial(&t.dims, &j).into_iter().map(|e| if e == 2 { 1.0 } else { 0.0 }).collect();
            let value = poly_from_tensor(t).to_float().eval(&point);
            TensorPositivity { nonnegative: false, witness: Some((j, point, value)) }
        }
    }
}

// ---------------------------------------------------------------------------
// tensor-side decompositions

fn check_dims(action: &SymmetryAction, dims: &[usize]) -> Result<(), TensorError> {
    let nv = action.complex().vertex_count();
    if dims.len() != nv {
        return Err(TensorError::BadShape(format!("{} axes for {nv} sites", dims.len())));
    }
    for g in 0..action.order() {
        for i in 0..nv {
            if dims[action.vertex(g, i)] != dims[i] {
                return Err(TensorError::BadShape(format!("dims {dims:?} not constant on orbits")));
            }
        }
    }
    Ok(())
}

fn assignments(len: usize, size: u32) -> Vec<Vec<u32>> {
    let total = (size as usize).pow(len as u32);
    (0..total)
        .map(|mut code| {
            let mut v = vec![0u32; len];
            for slot in v.iter_mut().rev() {
                *slot = (code % size as usize) as u32;
                code /= size as usize;
            }
            v
        })
        .collect()
}

fn assignment_code(beta: &[u32], size: u32) -> usize {
    beta.iter().fold(0, |acc, &b| acc * size as usize + b as usize)
}

fn global_count(action: &SymmetryAction, size: u32, factor: u32, guard: u64) -> Result<u64, TensorError> {
    let labels = action.complex().label_count() as u32 * factor;
    (size as u64).checked_pow(labels).filter(|&c| c <= guard).ok_or(TensorError::GuardExceeded(guard))
}

/// Plain or nonnegative (Ω,G)-decomposition by vectors `T^[i]_β ∈ ℝ^{mᵢ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorTensorDecomposition<C> {
    action: SymmetryAction,
    dims: Vec<usize>,
    index_size: u32,
    nonnegative: bool,
    locals: Vec<BTreeMap<Vec<u32>, Vec<C>>>,
}

impl<C: Coefficient> VectorTensorDecomposition<C> {
    pub fn new(action: &SymmetryAction, dims: Vec<usize>, index_size: u32, nonnegative: bool) -> Result<Self, TensorError> {
        check_dims(action, &dims)?;
        entry_count(&dims)?;
        Ok(Self {
            action: action.clone(),
            locals: vec![BTreeMap::new(); dims.len()],
            dims,
            index_size,
            nonnegative,
        })
    }

    pub fn insert(&mut self, site: usize, beta: Vec<u32>, v: Vec<C>) -> Result<(), TensorError> {
        if site >= self.dims.len() || v.len() != self.dims[site] {
            return Err(TensorError::BadShape(format!("vector of length {} at site {site}", v.len())));
        }
        if beta.len() != self.action.complex().labels_at(site).len() || beta.iter().any(|&b| b >= self.index_size) {
            return Err(DecompositionError::BadAssignment(format!("{beta:?} at site {site}")).into());
        }
        if self.nonnegative && v.iter().any(|c| c.is_negative()) {
            return Err(TensorError::NotNonnegative(site));
        }
        if v.iter().any(|c| !c.is_zero()) {
            self.locals[site].insert(beta, v);
        } else {
            self.locals[site].remove(&beta);
        }
        Ok(())
    }

    pub fn action(&self) -> &SymmetryAction {
        &self.action
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn index_size(&self) -> u32 {
        self.index_size
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    pub fn local(&self, site: usize, beta: &[u32]) -> Option<&Vec<C>> {
        self.locals[site].get(beta)
    }

    pub fn check_symmetry(&self) -> bool {
        (0..self.dims.len()).all(|i| {
            (1..self.action.order()).all(|g| {
                let gi = self.action.vertex(g, i);
                self.locals[i].iter().all(|(b, v)| {
                    self.locals[gi]
                        .get(&self.action.act_assignment(g, i, b))
                        .is_some_and(|w| w.iter().zip(v).all(|(x, y)| x.close_to(y, 1e-12)))
                })
                    && self.locals[i].len() == self.locals[gi].len()
            })
        })
    }

    /// `Σ_α ⊗_i T^[i]_{α|i}` by direct enumeration of global assignments.
    pub fn contract(&self, guard: u64) -> Result<DenseTensor<C>, TensorError> {
        global_count(&self.action, self.index_size, 1, guard)?;
        let c = self.action.complex();
        let mut out = DenseTensor::<C>::zeros(self.dims.clone())?;
        'alpha: for alpha in assignments(c.label_count(), self.index_size) {
            let mut factors = Vec::with_capacity(self.dims.len());
            for i in 0..self.dims.len() {
                let beta: Vec<u32> = c.labels_at(i).iter().map(|&l| alpha[l]).collect();
                match self.locals[i].get(&beta) {
                    Some(v) => factors.push(v),
                    None => continue 'alpha,
                }
            }
            for flat in 0..out.entries.len() {
                let j = out.multi_index(flat);
                let mut prod = C::one();
                for (f, &ji) in factors.iter().zip(&j) {
                    prod = prod.times(&f[ji]);
                }
                out.entries[flat] = out.entries[flat].plus(&prod);
            }
        }
        Ok(out)
    }
}

/// Psd (Ω,G)-decomposition: PSD matrices `E^[i]_j` over the assignments at
/// site `i` (indexed by base-|I| code), `j < mᵢ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdTensorDecomposition {
    action: SymmetryAction,
    dims: Vec<usize>,
    index_size: u32,
    factors: Vec<Vec<DMatrix<f64>>>,
}

impl PsdTensorDecomposition {
    pub fn new(action: &SymmetryAction, dims: Vec<usize>, index_size: u32, factors: Vec<Vec<DMatrix<f64>>>) -> Result<Self, TensorError> {
        check_dims(action, &dims)?;
        entry_count(&dims)?;
        if factors.len() != dims.len() {
            return Err(TensorError::BadShape(format!("{} factor families for {} sites", factors.len(), dims.len())));
        }
        for (i, fam) in factors.iter().enumerate() {
            let k = (index_size as usize).pow(action.complex().labels_at(i).len() as u32);
            if fam.len() != dims[i] {
                return Err(TensorError::BadShape(format!("site {i}: {} matrices, expected {}", fam.len(), dims[i])));
            }
            for (j, e) in fam.iter().enumerate() {
                if e.nrows() != k || e.ncols() != k {
                    return Err(TensorError::BadShape(format!("E[{i}][{j}] is {}x{}, expected {k}x{k}", e.nrows(), e.ncols())));
                }
                let lam = SymmetricEigen::new(e.clone()).eigenvalues.min();
                if (e - e.transpose()).amax() > 1e-12 * e.amax().max(1.0) || lam < -PSD_TOL * (1.0 + e.trace().abs()) {
                    return Err(TensorError::NotPsd(format!("E[{i}][{j}]")));
                }
            }
        }
        Ok(Self { action: action.clone(), dims, index_size, factors })
    }

    pub fn action(&self) -> &SymmetryAction {
        &self.action
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn index_size(&self) -> u32 {
        self.index_size
    }

    pub fn factor(&self, site: usize, j: usize) -> &DMatrix<f64> {
        &self.factors[site][j]
    }

    /// `(E^[gi]_j)_{ᵍβ,ᵍβ'} = (E^[i]_j)_{β,β'}` within `tol`.
    pub fn check_symmetry(&self, tol: f64) -> bool {
        let c = self.action.complex();
        for i in 0..self.dims.len() {
            let betas = assignments(c.labels_at(i).len(), self.index_size);
            for g in 1..self.action.order() {
                let gi = self.action.vertex(g, i);
                let img: Vec<usize> =
                    betas.iter().map(|b| assignment_code(&self.action.act_assignment(g, i, b), self.index_size)).collect();
                for j in 0..self.dims[i] {
                    let (e, f) = (&self.factors[i][j], &self.factors[gi][j]);
                    for r in 0..betas.len() {
                        for s in 0..betas.len() {
                            if (f[(img[r], img[s])] - e[(r, s)]).abs() > tol * e.amax().max(1.0) {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }

    /// `T_j = Σ_{α,α'} Π_i (E^[i]_{jᵢ})_{α|i, α'|i}`.
    pub fn contract(&self, guard: u64) -> Result<DenseTensor<f64>, TensorError> {
        global_count(&self.action, self.index_size, 2, guard)?;
        let c = self.action.complex();
        let codes: Vec<Vec<usize>> = assignments(c.label_count(), self.index_size)
            .iter()
            .map(|alpha| {
                (0..self.dims.len())
                    .map(|i| {
                        let beta: Vec<u32> = c.labels_at(i).iter().map(|&l| alpha[l]).collect();
                        assignment_code(&beta, self.index_size)
                    })
                    .collect()
            })
            .collect();
        DenseTensor::from_fn(self.dims.clone(), |j| {
            let mut total = 0.0;
            for a in &codes {
                for b in &codes {
                    total += (0..j.len()).map(|i| self.factors[i][j[i]][(a[i], b[i])]).product::<f64>();
                }
            }
            total
        })
    }
}

/// `p^[i]_β = Σ_j (T^[i]_β)_j (x^[i]_j)²` with the same index set.
pub fn vector_to_poly<C: Coefficient>(t: &VectorTensorDecomposition<C>) -> Result<OmegaGDecomposition<C>, TensorError> {
    let mut out = OmegaGDecomposition::new(&t.action, t.dims.clone(), t.index_size)?;
    for (i, site) in t.locals.iter().enumerate() {
        for (beta, v) in site {
            let mut p = BlockPolynomial::zero(vec![t.dims[i]]);
            for (j, c) in v.iter().enumerate() {
                let mut e = vec![0u32; t.dims[i]];
                e[j] = 2;
                p.add_term(e, c.clone());
            }
            out.insert(i, beta.clone(), p)?;
        }
    }
    Ok(out)
}

/// Reverse of `vector_to_poly`; every local must be `Σ_j c_j x_j²`.
pub fn poly_to_vector<C: Coefficient>(
    d: &OmegaGDecomposition<C>,
    nonnegative: bool,
) -> Result<VectorTensorDecomposition<C>, TensorError> {
    // the per-site scale is folded into every vector
    let s = C::from_scaled(d.scale())
        .ok_or_else(|| TensorError::NotCanonicalForm(format!("scale {} not representable in this coefficient mode", d.scale())))?;
    let mut out = VectorTensorDecomposition::new(d.action(), d.site_vars().to_vec(), d.index_size(), nonnegative)?;
    for i in 0..d.site_vars().len() {
        for (beta, p) in d.locals_at(i) {
            let mut v = vec![C::zero(); d.site_vars()[i]];
            for (e, c) in p.terms() {
                let mut hits = e.iter().enumerate().filter(|(_, &x)| x != 0);
                match (hits.next(), hits.next()) {
                    (Some((k, 2)), None) => v[k] = c.times(&s),
                    _ => return Err(TensorError::NotCanonicalForm(format!("site {i} local {beta:?} has monomial {e:?}"))),
                }
            }
            out.insert(i, beta.clone(), v)?;
        }
    }
    Ok(out)
}

/// Sos (Ω,G)-decomposition of `p_T` from a psd decomposition of `T` under a
/// vertex-free action: `E_j = BᵗB` with `B` the PSD root at one site per
/// orbit, carried along the orbit, and `q^[i]_{(j,k),β} = (B^[i]_j)_{k,β} x_j`
/// with family index `j·K + k`.
pub fn psd_to_sos(t: &PsdTensorDecomposition) -> Result<FamilyDecomposition<f64>, TensorError> {
    let a = &t.action;
    if !a.is_vertex_free() {
        return Err(TensorError::VertexActionNotFree);
    }
    if !t.check_symmetry(1e-9) {
        return Err(TensorError::NotSymmetric);
    }
    let c = a.complex();
    let ns = t.dims.len();
    let ks: Vec<usize> = (0..ns).map(|i| (t.index_size as usize).pow(c.labels_at(i).len() as u32)).collect();
    let sizes: Vec<usize> = (0..ns).map(|i| t.dims[i] * ks[i]).collect();
    let mut out = FamilyDecomposition::new(a, t.dims.clone(), sizes, t.index_size)?;
    let mut done = vec![false; ns];
    for rep in 0..ns {
        if done[rep] {
            continue;
        }
        let betas = assignments(c.labels_at(rep).len(), t.index_size);
        let roots: Vec<DMatrix<f64>> = t.factors[rep].iter().map(psd_root).collect();
        for g in 0..a.order() {
            let gi = a.vertex(g, rep);
            if done[gi] {
                continue;
            }
            done[gi] = true;
            for (j, b) in roots.iter().enumerate() {
                for (col, beta) in betas.iter().enumerate() {
                    let gbeta = a.act_assignment(g, rep, beta);
                    for k in 0..ks[rep] {
                        let v = b[(k, col)];
                        if v != 0.0 {
                            let mut e = vec![0u32; t.dims[gi]];
                            e[j] = 1;
                            let q = BlockPolynomial::from_flat_terms(vec![t.dims[gi]], [(e, v)])?;
                            out.insert(gi, j * ks[rep] + k, gbeta.clone(), q)?;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn psd_root(e: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(e.clone());
    let top = eig.eigenvalues.amax();
    let floor = 64.0 * f64::EPSILON * e.nrows() as f64 * top;
    let roots = eig.eigenvalues.map(|l| if l > floor { l.sqrt() } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Psd decomposition of `T` from an sos decomposition of `p_T` whose locals
/// are linear forms `Σ_j (B^[i]_j)_{t,β} x_j`: `E^[i]_j = (B^[i]_j)ᵗ B^[i]_j`,
/// with the per-site scale folded in.
pub fn sos_to_psd(f: &FamilyDecomposition<f64>) -> Result<PsdTensorDecomposition, TensorError> {
    let a = f.action();
    let c = a.complex();
    let ns = f.site_vars().len();
    let s2 = f.scale().to_f64().powi(2);
    let mut factors = Vec::with_capacity(ns);
    for i in 0..ns {
        let m = f.site_vars()[i];
        let betas = assignments(c.labels_at(i).len(), f.index_size());
        let mut bs = vec![DMatrix::<f64>::zeros(f.sizes()[i], betas.len()); m];
        for t in 0..f.sizes()[i] {
            for (col, beta) in betas.iter().enumerate() {
                let Some(q) = f.local(i, t, beta) else { continue };
                for (e, v) in q.terms() {
                    let mut hits = e.iter().enumerate().filter(|(_, &x)| x != 0);
                    match (hits.next(), hits.next()) {
                        (Some((j, 1)), None) => bs[j][(t, col)] = *v,
                        _ => return Err(TensorError::NotCanonicalForm(format!("site {i} local ({t}, {beta:?}) has monomial {e:?}"))),
                    }
                }
            }
        }
        factors.push(bs.iter().map(|b| b.transpose() * b * s2).collect());
    }
    PsdTensorDecomposition::new(a, f.site_vars().to_vec(), f.index_size(), factors)
}

// ---------------------------------------------------------------------------
// separation instances

/// `(M_m)_{ij} = (i−j)²`, `i, j ∈ 1..=m`.
pub fn distance_matrix(m: usize) -> Result<DenseTensor<BigRational>, TensorError> {
    if m < 2 {
        return Err(TensorError::BadShape(format!("distance matrix needs m ≥ 2, got {m}")));
    }
    DenseTensor::from_fn(vec![m, m], |j| {
        let d = j[0] as i64 - j[1] as i64;
        BigRational::from_integer((d * d).into())
    })
}

/// Index-2 psd factorization of `M_m` on the single edge:
/// `E_i = (1,i)ᵗ(1,i)`, `F_j = (j,−1)ᵗ(j,−1)`, `tr(E_i F_j) = (i−j)²`.
pub fn psd_distance_factorization(m: usize) -> Result<PsdTensorDecomposition, TensorError> {
    if m < 2 {
        return Err(TensorError::BadShape(format!("distance matrix needs m ≥ 2, got {m}")));
    }
    let complex = crate::complex::WeightedComplex::standard(crate::complex::StandardKind::SingleEdge, 1)
        .map_err(|e| TensorError::BadShape(e.to_string()))?;
    let action = SymmetryAction::trivial(&complex);
    let outer = |a: f64, b: f64| DMatrix::from_row_slice(2, 2, &[a * a, a * b, a * b, b * b]);
    let e = (1..=m).map(|i| outer(1.0, i as f64)).collect();
    let f = (1..=m).map(|j| outer(j as f64, -1.0)).collect();
    PsdTensorDecomposition::new(&action, vec![m, m], 2, vec![e, f])
}

/// Slack matrix of the regular m-gon: rows are edges `a_i·x ≤ b_i` (edge `i`
/// joins vertices `i` and `i+1`), columns are vertices `v_j`.
pub fn polygon_slack(m: usize) -> Result<DenseTensor<f64>, TensorError> {
    if m < 3 {
        return Err(TensorError::BadShape(format!("polygon needs m ≥ 3, got {m}")));
    }
    let tau = std::f64::consts::TAU;
    let b = (std::f64::consts::PI / m as f64).cos();
    DenseTensor::from_fn(vec![m, m], |ij| {
        let normal = tau * (2 * ij[0] + 1) as f64 / (2 * m) as f64;
        let vertex = tau * ij[1] as f64 / m as f64;
        let s = b - (normal - vertex).cos();
        if s.abs() < 1e-12 {
            0.0
        } else {
            s
        }
    })
}

/// `⌈log₂ m⌉`, the nonnegative-rank lower bound for `M_m`.
pub fn distance_nn_lower_bound(m: usize) -> usize {
    (usize::BITS - (m.max(1) - 1).leading_zeros()) as usize
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NmfBound {
    /// Smallest inner dimension at which a factorization was found.
    pub upper_bound: usize,
    /// Relative Frobenius residual of that factorization (0 for the trivial one).
    pub residual: f64,
    pub restarts: usize,
}

/// Upper bound on the nonnegative rank by seeded NMF restarts: for each
/// inner dimension `r` from `start` upward, `restarts` seeded runs; the first
/// `r` reaching relative residual `≤ tol` is reported. Falls back to
/// `min(rows, cols)`, which is always exact.
pub fn nn_rank_upper_bound(m: &DMatrix<f64>, start: usize, restarts: usize, iters: usize, tol: f64, seed: u64) -> NmfBound {
    let trivial = m.nrows().min(m.ncols());
    let norm = m.norm().max(f64::MIN_POSITIVE);
    for r in start.max(1)..trivial {
        let best = (0..restarts)
            .into_par_iter()
            .map(|k| nmf_run(m, r, iters, seed.wrapping_add((r * restarts + k) as u64)) / norm)
            .reduce(|| f64::INFINITY, f64::min);
        if best <= tol {
            return NmfBound { upper_bound: r, residual: best, restarts };
        }
    }
    NmfBound { upper_bound: trivial, residual: 0.0, restarts }
}

/// One seeded HALS run (column-wise nonnegative least squares updates);
/// returns the absolute Frobenius residual.
fn nmf_run(m: &DMatrix<f64>, r: usize, iters: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (m.mean().max(1e-12) / r as f64).sqrt();
    let mut w = DMatrix::from_fn(m.nrows(), r, |_, _| rng.random_range(0.1..1.0) * scale);
    let mut h = DMatrix::from_fn(r, m.ncols(), |_, _| rng.random_range(0.1..1.0) * scale);
    let tiny = 1e-300;
    for _ in 0..iters {
        let wtm = w.transpose() * m;
        let wtw = w.transpose() * &w;
        for k in 0..r {
            let step = (wtm.row(k) - wtw.row(k) * &h) / wtw[(k, k)].max(tiny);
            let next = (h.row(k) + step).map(|x| x.max(0.0));
            h.set_row(k, &next);
        }
        let mht = m * h.transpose();
        let hht = &h * h.transpose();
        for k in 0..r {
            let step = (mht.column(k) - &w * hht.column(k)) / hht[(k, k)].max(tiny);
            let next = (w.column(k) + step).map(|x| x.max(0.0));
            w.set_column(k, &next);
        }
    }
    (m - &w * &h).norm()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationRow {
    pub m: usize,
    pub rank: usize,
    pub psd_index: usize,
    /// `⌈log₂ m⌉`.
    pub nn_lower_bound: usize,
    /// `max(rank, ⌈log₂ m⌉)`, since the rank also bounds the nonnegative rank.
    pub nn_lower_bound_with_rank: usize,
    pub nn_upper_bound: usize,
    pub nn_upper_residual: f64,
}

/// The distance-matrix separation table for one `m`.
pub fn distance_separation(m: usize, seed: u64) -> Result<SeparationRow, TensorError> {
    let t = distance_matrix(m)?;
    let rank = t.matrix_rank()?;
    let psd = psd_distance_factorization(m)?;
    let log_bound = distance_nn_lower_bound(m);
    let lower = rank.max(log_bound);
    let nmf = nn_rank_upper_bound(&t.to_float().to_matrix()?, lower, 50, 3000, 1e-6, seed);
    Ok(SeparationRow {
        m,
        rank,
        psd_index: psd.index_size as usize,
        nn_lower_bound: log_bound,
        nn_lower_bound_with_rank: lower,
        nn_upper_bound: nmf.upper_bound,
        nn_upper_residual: nmf.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{StandardKind, WeightedComplex};
    use crate::decomposition::{bipartite_rank, DEFAULT_MAX_ASSIGNMENTS};
    use crate::positivity::{cone_check, Cone};
    use crate::scalar::rat;
    use crate::symmetry::standard::*;
    use proptest::prelude::*;

    const G: u64 = DEFAULT_MAX_ASSIGNMENTS;

    fn r(n: i64) -> BigRational {
        rat(n, 1)
    }

    fn single_edge() -> SymmetryAction {
        SymmetryAction::trivial(&WeightedComplex::standard(StandardKind::SingleEdge, 1).unwrap())
    }

    #[test]
    fn poly_from_tensor_examples() {
        let t = DenseTensor::new(vec![1, 1], vec![r(1)]).unwrap();
        let p = poly_from_tensor(&t);
        assert_eq!(p.term_count(), 1);
        assert_eq!(p.coeff(&[2, 2]), r(1));
        let d = distance_matrix(3).unwrap();
        let pd = poly_from_tensor(&d);
        // the three diagonal entries vanish, leaving 6 squared monomials with the 9-entry layout
        assert_eq!(pd.term_count(), 6);
        for i in 0..3 {
            for j in 0..3 {
                let mut e = vec![0; 6];
                e[i] = 2;
                e[3 + j] = 2;
                assert_eq!(pd.coeff(&e), r(((i as i64) - (j as i64)).pow(2)));
            }
        }
        assert!(poly_from_tensor(&DenseTensor::<BigRational>::zeros(vec![2, 3]).unwrap()).is_zero());
    }

    #[test]
    fn distance_matrix_values() {
        let d = distance_matrix(3).unwrap();
        let want: Vec<BigRational> = [0, 1, 4, 1, 0, 1, 4, 1, 0].iter().map(|&x| r(x)).collect();
        assert_eq!(d.entries(), want.as_slice());
        assert!(distance_matrix(1).is_err());
        for m in 3..=12 {
            let d = distance_matrix(m).unwrap();
            assert_eq!(d.matrix_rank().unwrap(), 3, "m = {m}");
            assert_eq!(bipartite_rank(&poly_from_tensor(&d)).unwrap(), 3, "m = {m}");
        }
        assert_eq!(distance_matrix(2).unwrap().matrix_rank().unwrap(), 2);
        assert_eq!(distance_nn_lower_bound(8), 3);
        assert_eq!(distance_nn_lower_bound(9), 4);
        assert_eq!(distance_nn_lower_bound(2), 1);
    }

    #[test]
    fn positivity_examples() {
        let ones = DenseTensor::from_fn(vec![2, 2, 2], |_| r(1)).unwrap();
        assert!(tensor_positivity(&ones).nonnegative);
        let mut neg = ones.clone();
        neg.entries[0] = r(-1);
        let res = tensor_positivity(&neg);
        assert!(!res.nonnegative);
        let (j, point, value) = res.witness.unwrap();
        assert_eq!(j, vec![0, 0, 0]);
        assert_eq!(value, -1.0);
        assert_eq!(poly_from_tensor(&neg).to_float().eval(&point), -1.0);
        assert!(tensor_positivity(&distance_matrix(5).unwrap()).nonnegative);
        // sampled search on p_T agrees with the entry sign
        let v = cone_check(&poly_from_tensor(&neg), &Cone::NonnegativeSampled { samples: 10, seed: 0, radius: 1.0 }, None).unwrap();
        assert!(!v.holds());
    }

    #[test]
    fn tensor_json_round_trip() {
        let d = distance_matrix(4).unwrap();
        let j = serde_json::to_string(&d.to_json()).unwrap();
        assert_eq!(parse_tensor(&j).unwrap(), d);
        assert!(parse_tensor(r#"{"dims":[2,2],"entries":[1,2,3]}"#).is_err());
        assert!(parse_tensor(r#"{"dims":[0],"entries":[]}"#).is_err());
        assert!(parse_tensor(r#"{"dims":[2],"entries":["1/2", 3]}"#).is_ok());
    }

    #[test]
    fn extraction_rejects_other_monomials() {
        let p = BlockPolynomial::from_flat_terms(vec![1, 1], [(vec![1, 2], r(1))]).unwrap();
        assert!(matches!(tensor_from_poly(&p), Err(TensorError::NotCanonicalForm(_))));
    }

    #[test]
    fn distance_rank_three_split_converts() {
        // (i−j)² = i²·1 − 2i·j + 1·j² with 1-based i, j
        let m = 5;
        let a = single_edge();
        let mut t = VectorTensorDecomposition::new(&a, vec![m, m], 3, false).unwrap();
        let left: [Box<dyn Fn(i64) -> i64>; 3] = [Box::new(|i| i * i), Box::new(|i| -2 * i), Box::new(|_| 1)];
        let right: [Box<dyn Fn(i64) -> i64>; 3] = [Box::new(|_| 1), Box::new(|j| j), Box::new(|j| j * j)];
        for k in 0..3 {
            t.insert(0, vec![k as u32], (1..=m as i64).map(|i| r(left[k](i))).collect()).unwrap();
            t.insert(1, vec![k as u32], (1..=m as i64).map(|j| r(right[k](j))).collect()).unwrap();
        }
        let d = distance_matrix(m).unwrap();
        assert_eq!(t.contract(G).unwrap(), d);
        let pd = vector_to_poly(&t).unwrap();
        assert_eq!(pd.index_size(), 3);
        assert_eq!(pd.contract(G).unwrap().into_poly().unwrap(), poly_from_tensor(&d));
        let back = poly_to_vector(&pd, false).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn nonnegative_rank_one_converts() {
        let a = single_edge();
        let mut t = VectorTensorDecomposition::new(&a, vec![2, 3], 1, true).unwrap();
        t.insert(0, vec![0], vec![r(1), r(2)]).unwrap();
        t.insert(1, vec![0], vec![r(3), r(0), r(1)]).unwrap();
        let p = vector_to_poly(&t).unwrap();
        assert_eq!(p.index_size(), 1);
        for i in 0..2 {
            for (_, l) in p.locals_at(i) {
                assert!(cone_check(l, &Cone::NnCoeff, None).unwrap().holds());
            }
        }
        assert_eq!(p.contract(G).unwrap().into_poly().unwrap(), poly_from_tensor(&t.contract(G).unwrap()));
        assert!(matches!(t.insert(0, vec![0], vec![r(-1), r(0)]), Err(TensorError::NotNonnegative(0))));
        let mut plain = VectorTensorDecomposition::new(&a, vec![2, 3], 1, false).unwrap();
        plain.insert(0, vec![0], vec![r(-1), r(2)]).unwrap();
        plain.insert(1, vec![0], vec![r(1), r(1), r(1)]).unwrap();
        assert!(matches!(poly_to_vector(&vector_to_poly(&plain).unwrap(), true), Err(TensorError::NotNonnegative(_))));
    }

    #[test]
    fn psd_distance_factorization_traces() {
        for m in [2, 4, 8] {
            let f = psd_distance_factorization(m).unwrap();
            let t = f.contract(G).unwrap();
            let d = distance_matrix(m).unwrap().to_float();
            assert_eq!(t, d, "m = {m}");
        }
        let f = psd_distance_factorization(4).unwrap();
        let tr = (f.factor(0, 1) * f.factor(1, 2)).trace();
        assert_eq!(tr, 1.0);
    }

    #[test]
    fn psd_to_sos_round_trip() {
        let m = 6;
        let f = psd_distance_factorization(m).unwrap();
        let sos = psd_to_sos(&f).unwrap();
        assert_eq!(sos.index_size(), 2);
        let p = sos.family(G).unwrap().sum_of_squares();
        let want = poly_from_tensor(&distance_matrix(m).unwrap()).to_float();
        assert!(p.max_coeff_diff(&want) < 1e-9);
        let back = sos_to_psd(&sos).unwrap();
        assert!(back.contract(G).unwrap().max_abs_diff(&f.contract(G).unwrap()) < 1e-9);
        // a psd decomposition on a fixed-vertex action cannot be split symmetrically
        let fixed = double_edge_fixed_vertices();
        let k = 4;
        let id = DMatrix::<f64>::identity(k, k);
        let t = PsdTensorDecomposition::new(&fixed, vec![1, 1], 2, vec![vec![id.clone()], vec![id]]).unwrap();
        assert!(matches!(psd_to_sos(&t), Err(TensorError::VertexActionNotFree)));
    }

    #[test]
    fn psd_to_sos_free_vertex_action() {
        // symmetric psd decomposition on the double edge with the vertex swap
        let a = double_edge_free();
        let b0 = DMatrix::from_row_slice(2, 4, &[1.0, 0.5, 0.0, -1.0, 0.0, 2.0, 1.0, 0.0]);
        let e0 = b0.transpose() * &b0;
        let e1 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0, 2.0, 0.5]));
        // site 1 gets the transported copies: (E^[1])_{ᵍβ,ᵍβ'} = (E^[0])_{β,β'}
        let betas = assignments(2, 2);
        let transport = |e: &DMatrix<f64>| {
            let mut out = DMatrix::zeros(4, 4);
            for (r, br) in betas.iter().enumerate() {
                for (c, bc) in betas.iter().enumerate() {
                    let gr = assignment_code(&a.act_assignment(1, 0, br), 2);
                    let gc = assignment_code(&a.act_assignment(1, 0, bc), 2);
                    out[(gr, gc)] = e[(r, c)];
                }
            }
            out
        };
        let site1 = vec![transport(&e0), transport(&e1)];
        let t = PsdTensorDecomposition::new(&a, vec![2, 2], 2, vec![vec![e0, e1], site1]).unwrap();
        assert!(t.check_symmetry(1e-12));
        let tensor = t.contract(G).unwrap();
        let sos = psd_to_sos(&t).unwrap();
        assert!(sos.check_joint_symmetry(1e-12));
        let got = sos.family(G).unwrap().sum_of_squares();
        assert!(got.max_coeff_diff(&poly_from_tensor(&tensor)) < 1e-9);
    }

    #[test]
    fn polygon_slack_examples() {
        for m in 3..=9 {
            let s = polygon_slack(m).unwrap();
            assert!(s.entries().iter().all(|&x| x >= -1e-12));
            for i in 0..m {
                assert_eq!(*s.get(&[i, i]), 0.0);
                assert_eq!(*s.get(&[i, (i + 1) % m]), 0.0);
            }
            assert_eq!(s.matrix_rank().unwrap(), 3, "m = {m}");
        }
        let s4 = polygon_slack(4).unwrap();
        let zeros = s4.entries().iter().filter(|&&x| x == 0.0).count();
        assert_eq!(zeros, 8);
    }

    #[test]
    fn separation_table_row() {
        let row = distance_separation(6, 7).unwrap();
        assert_eq!(row.rank, 3);
        assert_eq!(row.psd_index, 2);
        assert_eq!(row.nn_lower_bound, 3);
        assert_eq!(row.nn_lower_bound_with_rank, 3);
        assert!(row.nn_upper_bound >= row.nn_lower_bound_with_rank && row.nn_upper_bound <= 6);
        let small = distance_separation(4, 7).unwrap();
        assert_eq!((small.nn_lower_bound, small.nn_lower_bound_with_rank), (2, 3));
    }

    #[test]
    fn nmf_finds_planted_factorization() {
        let w = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 2.0, 1.0, 0.0, 3.0, 1.0, 1.0]);
        let h = DMatrix::from_row_slice(2, 5, &[1.0, 2.0, 0.0, 1.0, 0.5, 0.0, 1.0, 1.0, 2.0, 0.0]);
        let bound = nn_rank_upper_bound(&(&w * &h), 1, 20, 5000, 1e-5, 3);
        assert!(bound.upper_bound <= 2);
    }

    fn small_vector_dec(site_count: usize, m: usize, isz: u32, vals: &[i64]) -> VectorTensorDecomposition<BigRational> {
        let a = SymmetryAction::trivial(&WeightedComplex::standard(StandardKind::Line, site_count - 1).unwrap());
        let mut t = VectorTensorDecomposition::new(&a, vec![m; site_count], isz, false).unwrap();
        let c = a.complex();
        let mut it = vals.iter().cycle();
        for i in 0..site_count {
            for beta in assignments(c.labels_at(i).len(), isz) {
                let v = (0..m).map(|_| r(*it.next().unwrap())).collect();
                t.insert(i, beta, v).unwrap();
            }
        }
        t
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn tensor_poly_round_trip(dims in prop::collection::vec(1usize..4, 1..4), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = DenseTensor::from_fn(dims, |_| r(rand::Rng::random_range(&mut rng, -5..6))).unwrap();
            prop_assert_eq!(tensor_from_poly(&poly_from_tensor(&t)).unwrap(), t);
        }

        #[test]
        fn conversion_preserves_contraction(
            sites in 2usize..=4,
            m in 1usize..=4,
            isz in 1u32..=3,
            vals in prop::collection::vec(-3i64..4, 1..20),
        ) {
            let t = small_vector_dec(sites, m, isz, &vals);
            let dense = t.contract(G).unwrap();
            let p = vector_to_poly(&t).unwrap();
            prop_assert_eq!(p.contract(G).unwrap().into_poly().unwrap(), poly_from_tensor(&dense));
            prop_assert_eq!(poly_to_vector(&p, false).unwrap(), t);
        }
    }
}
