//! Sparse polynomials whose variables are grouped into per-site blocks.
//!
//! Terms are keyed by the concatenation of the per-site exponent vectors, so
//! the `BTreeMap` order is the lexicographic order on concatenated blocks and
//! two polynomials with the same terms have the same representation.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{format_rational, parse_rational, Coefficient, ScalarError, Surd};
use crate::symmetry::SymmetryAction;

pub const INVARIANCE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolynomialError {
    #[error("incompatible block sizes: {0}")]
    IncompatibleBlockSizes(String),
    #[error("site layouts differ: {0:?} vs {1:?}")]
    SiteMismatch(Vec<usize>, Vec<usize>),
    #[error("exponent vector has wrong shape: {0}")]
    BadExponents(String),
    #[error("invalid coefficient: {0}")]
    BadCoefficient(String),
    #[error("unknown coefficient mode {0:?}")]
    BadMode(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("json: {0}")]
    Json(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockPolynomial<C> {
    sites: Vec<usize>,
    terms: BTreeMap<Vec<u32>, C>,
}

pub type RationalPoly = BlockPolynomial<BigRational>;
pub type FloatPoly = BlockPolynomial<f64>;
pub type SurdPoly = BlockPolynomial<Surd>;

impl<C: Coefficient> BlockPolynomial<C> {
    pub fn zero(sites: Vec<usize>) -> Self {
        Self { sites, terms: BTreeMap::new() }
    }

    pub fn constant(sites: Vec<usize>, c: C) -> Self {
        let mut p = Self::zero(sites);
        let width = p.total_vars();
        p.add_term(vec![0; width], c);
        p
    }

    pub fn one(sites: Vec<usize>) -> Self {
        Self::constant(sites, C::one())
    }

    /// The variable `x^[site]_var` (0-based indices).
    pub fn variable(sites: Vec<usize>, site: usize, var: usize) -> Self {
        let mut p = Self::zero(sites);
        let mut exps = vec![0; p.total_vars()];
        exps[p.offset(site) + var] = 1;
        p.add_term(exps, C::one());
        p
    }

    /// Build from `(per-site exponent blocks, coefficient)` pairs; repeated
    /// monomials are summed.
    pub fn from_block_terms<I>(sites: Vec<usize>, terms: I) -> Result<Self, PolynomialError>
    where
        I: IntoIterator<Item = (Vec<Vec<u32>>, C)>,
    {
        let mut p = Self::zero(sites);
        for (blocks, c) in terms {
            if blocks.len() != p.sites.len() || blocks.iter().zip(&p.sites).any(|(b, &m)| b.len() != m) {
                return Err(PolynomialError::BadExponents(format!("{blocks:?} for sites {:?}", p.sites)));
            }
            p.add_term(blocks.concat(), c);
        }
        Ok(p)
    }

    /// Build from flat (concatenated) exponent vectors.
    pub fn from_flat_terms<I>(sites: Vec<usize>, terms: I) -> Result<Self, PolynomialError>
    where
        I: IntoIterator<Item = (Vec<u32>, C)>,
    {
        let mut p = Self::zero(sites);
        let width = p.total_vars();
        for (exps, c) in terms {
            if exps.len() != width {
                return Err(PolynomialError::BadExponents(format!("length {} != {width}", exps.len())));
            }
            p.add_term(exps, c);
        }
        Ok(p)
    }

    /// Univariate single-site polynomial `Σ coeffs[e] t^e`.
    pub fn univariate(coeffs: &[C]) -> Self {
        let mut p = Self::zero(vec![1]);
        for (e, c) in coeffs.iter().enumerate() {
            p.add_term(vec![e as u32], c.clone());
        }
        p
    }

    pub fn add_term(&mut self, exps: Vec<u32>, c: C) {
        debug_assert_eq!(exps.len(), self.total_vars());
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exps) {
            Some(existing) => {
                let sum = existing.plus(&c);
                if sum.is_zero() {
                    self.terms.remove(&exps);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(exps, c);
            }
        }
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    pub fn total_vars(&self) -> usize {
        self.sites.iter().sum()
    }

    pub fn offset(&self, site: usize) -> usize {
        self.sites[..site].iter().sum()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &C)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exps: &[u32]) -> C {
        self.terms.get(exps).cloned().unwrap_or_else(C::zero)
    }

    /// Exponent blocks of a flat key, one slice per site.
    pub fn blocks<'a>(&self, exps: &'a [u32]) -> Vec<&'a [u32]> {
        let mut out = Vec::with_capacity(self.sites.len());
        let mut at = 0;
        for &m in &self.sites {
            out.push(&exps[at..at + m]);
            at += m;
        }
        out
    }

    fn check_same_sites(&self, other: &Self) -> Result<(), PolynomialError> {
        if self.sites != other.sites {
            return Err(PolynomialError::SiteMismatch(self.sites.clone(), other.sites.clone()));
        }
        Ok(())
    }

    pub fn add_in_place(&mut self, other: &Self) -> Result<(), PolynomialError> {
        self.check_same_sites(other)?;
        for (e, c) in &other.terms {
            self.add_term(e.clone(), c.clone());
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, PolynomialError> {
        self.check_same_sites(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PolynomialError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| c.negated())
    }

    pub fn scale(&self, s: &C) -> Self {
        if s.is_zero() {
            return Self::zero(self.sites.clone());
        }
        let mut out = Self::zero(self.sites.clone());
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c.times(s));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PolynomialError> {
        self.check_same_sites(other)?;
        let mut out = Self::zero(self.sites.clone());
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1.times(c2));
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one(self.sites.clone());
        for _ in 0..e {
            out = out.mul(self).expect("same sites");
        }
        out
    }

    pub fn map_coeffs<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> BlockPolynomial<D> {
        let mut out = BlockPolynomial::zero(self.sites.clone());
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }

    pub fn to_float(&self) -> FloatPoly {
        self.map_coeffs(|c| c.to_f64())
    }

    /// Evaluate at a flat point (all variables concatenated site by site).
    pub fn eval(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.total_vars(), "point has wrong length");
        self.terms
            .iter()
            .map(|(e, c)| c.to_f64() * e.iter().zip(point).map(|(&k, &x)| x.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// Maximum over sites of the total degree of that site's block.
    pub fn local_degree(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|e| self.blocks(e).into_iter().map(|b| b.iter().sum::<u32>()).collect::<Vec<_>>())
            .max()
            .unwrap_or(0)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// `(g p)(x^[0],…,x^[n]) = p(x^[g0],…,x^[gn])`: the block of site `i` moves
    /// to site `perm[i]`.
    pub fn act(&self, perm: &[usize]) -> Result<Self, PolynomialError> {
        let n = self.sites.len();
        if perm.len() != n {
            return Err(PolynomialError::IncompatibleBlockSizes(format!(
                "permutation of {} points on {n} sites",
                perm.len()
            )));
        }
        for i in 0..n {
            if perm[i] >= n || self.sites[i] != self.sites[perm[i]] {
                return Err(PolynomialError::IncompatibleBlockSizes(format!(
                    "site {i} -> {} with sizes {:?}",
                    perm[i], self.sites
                )));
            }
        }
        let offsets: Vec<usize> = (0..n).map(|i| self.offset(i)).collect();
        let mut out = Self::zero(self.sites.clone());
        for (e, c) in &self.terms {
            let mut moved = vec![0; e.len()];
            for i in 0..n {
                let m = self.sites[i];
                moved[offsets[perm[i]]..offsets[perm[i]] + m].copy_from_slice(&e[offsets[i]..offsets[i] + m]);
            }
            out.add_term(moved, c.clone());
        }
        Ok(out)
    }

    /// Tensor product of single-site polynomials: `Π_i locals[i](x^[i])`.
    pub fn tensor(locals: &[&Self]) -> Self {
        let sites: Vec<usize> = locals
            .iter()
            .map(|l| {
                assert_eq!(l.site_count(), 1, "tensor factors must be single-site");
                l.sites[0]
            })
            .collect();
        let mut acc: Vec<(Vec<u32>, C)> = vec![(Vec::new(), C::one())];
        for l in locals {
            let mut next = Vec::with_capacity(acc.len() * l.terms.len());
            for (e, c) in &acc {
                for (le, lc) in &l.terms {
                    let mut ne = e.clone();
                    ne.extend_from_slice(le);
                    next.push((ne, c.times(lc)));
                }
            }
            acc = next;
        }
        let mut out = Self::zero(sites);
        for (e, c) in acc {
            out.add_term(e, c);
        }
        out
    }

    /// Append one site: `self(x^[0..k]) · local(x^[k])`.
    pub fn extend_site(&self, local: &Self) -> Self {
        assert_eq!(local.site_count(), 1, "appended factor must be single-site");
        let mut sites = self.sites.clone();
        sites.push(local.sites[0]);
        let mut out = Self::zero(sites);
        for (e, c) in &self.terms {
            for (le, lc) in &local.terms {
                let mut ne = e.clone();
                ne.extend_from_slice(le);
                out.add_term(ne, c.times(lc));
            }
        }
        out
    }

    /// The same terms read under another block layout with equal variable count.
    pub fn with_sites(&self, sites: Vec<usize>) -> Result<Self, PolynomialError> {
        if sites.iter().sum::<usize>() != self.total_vars() {
            return Err(PolynomialError::SiteMismatch(self.sites.clone(), sites));
        }
        Ok(Self { sites, terms: self.terms.clone() })
    }

    /// `g·p` for a group element of an action on the sites.
    pub fn act_by(&self, a: &SymmetryAction, g: usize) -> Result<Self, PolynomialError> {
        self.act(a.vertex_perm(g))
    }

    /// Whether `g·p = p` for all `g` (exact in exact modes, relative `1e-12`
    /// coefficient-wise for floats).
    pub fn is_invariant(&self, a: &SymmetryAction) -> Result<bool, PolynomialError> {
        for g in 1..a.order() {
            if !self.act_by(a, g)?.approx_eq(self, INVARIANCE_TOL) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Coefficient-wise comparison with relative tolerance (exact in exact modes).
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.sites != other.sites {
            return false;
        }
        let zero = C::zero();
        let keys: std::collections::BTreeSet<&Vec<u32>> = self.terms.keys().chain(other.terms.keys()).collect();
        keys.into_iter().all(|k| {
            let a = self.terms.get(k).unwrap_or(&zero);
            let b = other.terms.get(k).unwrap_or(&zero);
            a.close_to(b, tol)
        })
    }

    /// Largest absolute coefficient of `self - other` (in floats).
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let keys: std::collections::BTreeSet<&Vec<u32>> = self.terms.keys().chain(other.terms.keys()).collect();
        keys.into_iter()
            .map(|k| {
                let a = self.terms.get(k).map(|c| c.to_f64()).unwrap_or(0.0);
                let b = other.terms.get(k).map(|c| c.to_f64()).unwrap_or(0.0);
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Whether every coefficient is nonnegative (exact for rationals).
    pub fn has_nonnegative_coeffs(&self) -> bool {
        self.terms.values().all(|c| !c.is_negative())
    }
}

impl RationalPoly {
    pub fn to_surd(&self) -> SurdPoly {
        self.map_coeffs(|c| Surd::from_rational(c.clone()))
    }
}

impl<C: Coefficient> fmt::Display for BlockPolynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let single = self.sites.iter().all(|&m| m == 1);
        for (idx, (e, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (site, block) in self.blocks(e).into_iter().enumerate() {
                for (var, &k) in block.iter().enumerate() {
                    if k == 0 {
                        continue;
                    }
                    if single {
                        write!(f, "*x{site}")?;
                    } else {
                        write!(f, "*x{site}_{var}")?;
                    }
                    if k > 1 {
                        write!(f, "^{k}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Serialized polynomial; `coeff` is a `"num/den"` string in rational mode and
/// a number in float mode.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolynomialJson {
    pub sites: Vec<usize>,
    pub mode: String,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermJson {
    pub exps: Vec<Vec<u32>>,
    pub coeff: serde_json::Value,
}

const MAX_VARS: usize = 4096;
const MAX_EXP: u32 = 1 << 16;

fn check_layout(json: &PolynomialJson) -> Result<(), PolynomialError> {
    if json.sites.iter().sum::<usize>() > MAX_VARS || json.sites.len() > MAX_VARS {
        return Err(PolynomialError::BadExponents("too many variables".into()));
    }
    for t in &json.terms {
        if t.exps.len() != json.sites.len() || t.exps.iter().zip(&json.sites).any(|(b, &m)| b.len() != m) {
            return Err(PolynomialError::BadExponents(format!("{:?} for sites {:?}", t.exps, json.sites)));
        }
        if t.exps.iter().flatten().any(|&k| k > MAX_EXP) {
            return Err(PolynomialError::BadExponents("exponent too large".into()));
        }
    }
    Ok(())
}

pub(crate) fn coeff_to_rational(v: &serde_json::Value) -> Result<BigRational, PolynomialError> {
    match v {
        serde_json::Value::String(s) => Ok(parse_rational(s)?),
        serde_json::Value::Number(n) => Ok(parse_rational(&n.to_string())?),
        other => Err(PolynomialError::BadCoefficient(other.to_string())),
    }
}

impl RationalPoly {
    pub fn from_json(json: &PolynomialJson) -> Result<Self, PolynomialError> {
        if json.mode != "rational" {
            return Err(PolynomialError::BadMode(json.mode.clone()));
        }
        check_layout(json)?;
        let terms = json
            .terms
            .iter()
            .map(|t| Ok((t.exps.clone(), coeff_to_rational(&t.coeff)?)))
            .collect::<Result<Vec<_>, PolynomialError>>()?;
        Self::from_block_terms(json.sites.clone(), terms)
    }

    pub fn to_json(&self) -> PolynomialJson {
        PolynomialJson {
            sites: self.sites.clone(),
            mode: "rational".into(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermJson {
                    exps: self.blocks(e).into_iter().map(|b| b.to_vec()).collect(),
                    coeff: serde_json::Value::String(format_rational(c)),
                })
                .collect(),
        }
    }
}

impl FloatPoly {
    pub fn from_json(json: &PolynomialJson) -> Result<Self, PolynomialError> {
        check_layout(json)?;
        let terms = json
            .terms
            .iter()
            .map(|t| {
                let c = match (&t.coeff, json.mode.as_str()) {
                    (serde_json::Value::Number(n), "float") => {
                        n.as_f64().ok_or_else(|| PolynomialError::BadCoefficient(n.to_string()))?
                    }
                    (v, "rational") | (v @ serde_json::Value::String(_), "float") => {
                        crate::scalar::rational_to_f64(&coeff_to_rational(v)?)
                    }
                    (_, mode) if mode != "float" => return Err(PolynomialError::BadMode(mode.to_string())),
                    (v, _) => return Err(PolynomialError::BadCoefficient(v.to_string())),
                };
                if !c.is_finite() {
                    return Err(PolynomialError::BadCoefficient(c.to_string()));
                }
                Ok((t.exps.clone(), c))
            })
            .collect::<Result<Vec<_>, PolynomialError>>()?;
        Self::from_block_terms(json.sites.clone(), terms)
    }

    pub fn to_json(&self) -> PolynomialJson {
        PolynomialJson {
            sites: self.sites.clone(),
            mode: "float".into(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermJson {
                    exps: self.blocks(e).into_iter().map(|b| b.to_vec()).collect(),
                    coeff: serde_json::Number::from_f64(*c).map(serde_json::Value::Number).unwrap_or(serde_json::Value::Null),
                })
                .collect(),
        }
    }
}

/// Parse a rational-mode polynomial from JSON text.
pub fn parse_rational_poly(text: &str) -> Result<RationalPoly, PolynomialError> {
    let json: PolynomialJson = serde_json::from_str(text).map_err(|e| PolynomialError::Json(e.to_string()))?;
    RationalPoly::from_json(&json)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use proptest::prelude::*;

    fn xy(terms: &[(u32, u32, i64)]) -> RationalPoly {
        RationalPoly::from_block_terms(vec![1, 1], terms.iter().map(|&(a, b, c)| (vec![vec![a], vec![b]], rat(c, 1))))
            .unwrap()
    }

    #[test]
    fn local_degree_examples() {
        let p = xy(&[(0, 0, 4), (1, 1, 8), (2, 0, 1), (0, 2, 1), (2, 2, 4)]);
        assert_eq!(p.local_degree(), 2);
        assert_eq!(p.degree(), 4);
        assert_eq!(RationalPoly::one(vec![1, 1]).local_degree(), 0);
        assert_eq!(xy(&[(3, 1, 1)]).local_degree(), 3);
    }

    #[test]
    fn act_examples() {
        let swap = [1, 0];
        assert_eq!(xy(&[(2, 1, 1)]).act(&swap).unwrap(), xy(&[(1, 2, 1)]));
        let p = xy(&[(2, 0, 1), (0, 2, 1)]);
        assert_eq!(p.act(&swap).unwrap(), p);
        assert_eq!(p.act(&[0, 1]).unwrap(), p);
        let uneven = RationalPoly::zero(vec![1, 2]);
        assert!(matches!(uneven.act(&swap), Err(PolynomialError::IncompatibleBlockSizes(_))));
    }

    #[test]
    fn tensor_product_of_locals() {
        let a = RationalPoly::univariate(&[rat(1, 2), rat(0, 1), rat(2, 1)]);
        let prod = RationalPoly::tensor(&[&a, &a]);
        // (1/2 + 2x^2)(1/2 + 2y^2)
        let expected = RationalPoly::from_block_terms(
            vec![1, 1],
            vec![
                (vec![vec![0], vec![0]], rat(1, 4)),
                (vec![vec![2], vec![0]], rat(1, 1)),
                (vec![vec![0], vec![2]], rat(1, 1)),
                (vec![vec![2], vec![2]], rat(4, 1)),
            ],
        )
        .unwrap();
        assert_eq!(prod, expected);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let p = xy(&[(0, 0, 4), (1, 1, -8)]).scale(&rat(1, 3));
        let text = serde_json::to_string(&p.to_json()).unwrap();
        assert_eq!(parse_rational_poly(&text).unwrap(), p);
        assert!(parse_rational_poly(r#"{"sites":[1],"mode":"rational","terms":[{"exps":[[1,2]],"coeff":"1"}]}"#).is_err());
        assert!(parse_rational_poly(r#"{"sites":[1],"mode":"complex","terms":[]}"#).is_err());
        let f = parse_rational_poly(r#"{"sites":[1],"mode":"rational","terms":[{"exps":[[1]],"coeff":0.5}]}"#).unwrap();
        assert_eq!(f.coeff(&[1]), rat(1, 2));
    }

    fn arb_poly(sites: Vec<usize>) -> impl Strategy<Value = RationalPoly> {
        let width: usize = sites.iter().sum();
        prop::collection::vec((prop::collection::vec(0u32..3, width), -5i64..6, 1i64..4), 0..6).prop_map(
            move |terms| {
                RationalPoly::from_flat_terms(sites.clone(), terms.into_iter().map(|(e, n, d)| (e, rat(n, d)))).unwrap()
            },
        )
    }

    fn s3() -> Vec<[usize; 3]> {
        vec![[0, 1, 2], [1, 0, 2], [0, 2, 1], [2, 1, 0], [1, 2, 0], [2, 0, 1]]
    }

    fn compose(h: &[usize; 3], g: &[usize; 3]) -> [usize; 3] {
        [h[g[0]], h[g[1]], h[g[2]]]
    }

    proptest! {
        #[test]
        fn action_is_a_homomorphism(p in arb_poly(vec![2, 2, 2]), gi in 0usize..6, hi in 0usize..6) {
            let (g, h) = (s3()[gi], s3()[hi]);
            let lhs = p.act(&g).unwrap().act(&h).unwrap();
            prop_assert_eq!(lhs, p.act(&compose(&h, &g)).unwrap());
            prop_assert_eq!(p.act(&[0, 1, 2]).unwrap(), p);
        }

        #[test]
        fn ring_laws(p in arb_poly(vec![1, 2]), q in arb_poly(vec![1, 2]), r in arb_poly(vec![1, 2])) {
            prop_assert_eq!(p.mul(&q).unwrap(), q.mul(&p).unwrap());
            let lhs = p.mul(&q.add(&r).unwrap()).unwrap();
            let rhs = p.mul(&q).unwrap().add(&p.mul(&r).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
            prop_assert!(p.sub(&p).unwrap().is_zero());
        }

        #[test]
        fn json_round_trip_is_lossless(p in arb_poly(vec![2, 1, 1])) {
            let text = serde_json::to_string(&p.to_json()).unwrap();
            prop_assert_eq!(parse_rational_poly(&text).unwrap(), p);
        }

        #[test]
        fn eval_under_block_permutation(p in arb_poly(vec![1, 1, 1]), gi in 0usize..6,
                                        pt in prop::collection::vec(-2.0f64..2.0, 3)) {
            let g = s3()[gi];
            let mut ginv = [0usize; 3];
            for i in 0..3 { ginv[g[i]] = i; }
            // (g·x)^[g i] = x^[i]
            let mut moved = vec![0.0; 3];
            for i in 0..3 { moved[g[i]] = pt[i]; }
            let lhs = p.eval(&moved);
            let rhs = p.act(&ginv).unwrap().eval(&pt);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }

        #[test]
        fn local_degree_bounds(p in arb_poly(vec![1, 1, 1])) {
            let d = p.local_degree();
            prop_assert!(d <= p.degree() && p.degree() <= 3 * d);
        }
    }
}
