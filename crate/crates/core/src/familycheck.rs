//! The circle family `p_n = Σ_α p_{α₀α₁}(x^[0]) p_{α₁α₂}(x^[1]) ⋯ p_{αₙα₀}(x^[n])`
//! with `p_{αβ}(x) = Σ_j p_{αβj} x_j²`, and a positivity check for bounded `n`.
//!
//! Positivity of `p_n` for every `n` is undecidable in general; the checker
//! only ever speaks about `n ≤ n_max`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::WeightedComplex;
use crate::decomposition::{DecompositionError, OmegaGDecomposition};
use crate::polynomial::{BlockPolynomial, RationalPoly};
use crate::symmetry::standard::circle_rotation;
use crate::tensorbridge::{DenseTensor, TensorError};

pub const DEFAULT_FAMILY_GUARD: u64 = 10_000_000;
const MAX_BOND: usize = 64;
const MAX_VARS: usize = 64;

pub const UNBOUNDED_DISCLAIMER: &str = "Whether p_n is nonnegative (equivalently sos) for all n is undecidable in general; \
     this report covers only the listed n and says nothing about larger n.";

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("bad family: {0}")]
    BadFamily(String),
    #[error("n = {n} needs {needed} steps, over the guard {guard}")]
    SizeTooLarge { n: usize, needed: u64, guard: u64 },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error("invalid family json: {0}")]
    Json(String),
}

type IntMatrix = Vec<Vec<BigInt>>;

/// Integer coefficients `p_{α,β,j}` (0-based `α, β < D`, `j < m`).
#[derive(Clone, Debug, PartialEq)]
pub struct LocalFamily {
    d: usize,
    m: usize,
    coeffs: Vec<Vec<Vec<BigInt>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalFamilyJson {
    #[serde(rename = "D")]
    pub d: usize,
    pub m: usize,
    /// Integers as JSON numbers, or decimal strings when they do not fit `i64`.
    pub coeffs: Vec<Vec<Vec<serde_json::Value>>>,
}

fn int_to_json(v: &BigInt) -> serde_json::Value {
    match i64::try_from(v) {
        Ok(x) => serde_json::Value::from(x),
        Err(_) => serde_json::Value::from(v.to_string()),
    }
}

fn int_from_json(v: &serde_json::Value) -> Result<BigInt, FamilyError> {
    let parsed = match v {
        serde_json::Value::Number(n) => n.as_i64().map(BigInt::from),
        serde_json::Value::String(s) => s.trim().parse::<BigInt>().ok(),
        _ => None,
    };
    parsed.ok_or_else(|| FamilyError::Json(format!("coefficient {v} is not an integer")))
}

impl LocalFamily {
    pub fn new(d: usize, m: usize, coeffs: Vec<Vec<Vec<BigInt>>>) -> Result<Self, FamilyError> {
        if d == 0 || m == 0 || d > MAX_BOND || m > MAX_VARS {
            return Err(FamilyError::BadFamily(format!("D = {d}, m = {m}")));
        }
        if coeffs.len() != d || coeffs.iter().any(|row| row.len() != d || row.iter().any(|v| v.len() != m)) {
            return Err(FamilyError::BadFamily(format!("coefficient array is not {d}x{d}x{m}")));
        }
        Ok(Self { d, m, coeffs })
    }

    pub fn from_i64(d: usize, m: usize, coeffs: &[Vec<Vec<i64>>]) -> Result<Self, FamilyError> {
        let big = coeffs.iter().map(|r| r.iter().map(|v| v.iter().map(|&x| BigInt::from(x)).collect()).collect()).collect();
        Self::new(d, m, big)
    }

    /// `(A_j)_{αβ} = p_{αβj}`.
    pub fn from_matrices(matrices: &[Vec<Vec<i64>>]) -> Result<Self, FamilyError> {
        let m = matrices.len();
        let d = matrices.first().map_or(0, |a| a.len());
        let coeffs: Vec<Vec<Vec<i64>>> = (0..d).map(|a| (0..d).map(|b| matrices.iter().map(|mj| mj[a][b]).collect()).collect()).collect();
        if matrices.iter().any(|a| a.len() != d || a.iter().any(|r| r.len() != d)) {
            return Err(FamilyError::BadFamily("matrices of different shapes".into()));
        }
        Self::from_i64(d, m, &coeffs)
    }

    pub fn bond(&self) -> usize {
        self.d
    }

    pub fn vars(&self) -> usize {
        self.m
    }

    pub fn coeff(&self, a: usize, b: usize, j: usize) -> &BigInt {
        &self.coeffs[a][b][j]
    }

    pub fn scaled(&self, factor: &BigInt) -> Self {
        let coeffs = self.coeffs.iter().map(|r| r.iter().map(|v| v.iter().map(|x| x * factor).collect()).collect()).collect();
        Self { coeffs, ..self.clone() }
    }

    pub fn matrices(&self) -> Vec<IntMatrix> {
        (0..self.m)
            .map(|j| (0..self.d).map(|a| (0..self.d).map(|b| self.coeffs[a][b][j].clone()).collect()).collect())
            .collect()
    }

    /// `p_{αβ}(x) = Σ_j p_{αβj} x_j²` on one site.
    pub fn local(&self, a: usize, b: usize) -> RationalPoly {
        let mut p = BlockPolynomial::zero(vec![self.m]);
        for j in 0..self.m {
            let mut e = vec![0u32; self.m];
            e[j] = 2;
            p.add_term(e, BigRational::from_integer(self.coeffs[a][b][j].clone()));
        }
        p
    }

    pub fn to_json(&self) -> LocalFamilyJson {
        let coeffs = self.coeffs.iter().map(|row| row.iter().map(|c| c.iter().map(int_to_json).collect()).collect()).collect();
        LocalFamilyJson { d: self.d, m: self.m, coeffs }
    }

    pub fn from_json(json: &LocalFamilyJson) -> Result<Self, FamilyError> {
        let coeffs = json
            .coeffs
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| c.iter().map(int_from_json).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(json.d, json.m, coeffs)
    }
}

pub fn parse_family(text: &str) -> Result<LocalFamily, FamilyError> {
    let json: LocalFamilyJson = serde_json::from_str(text).map_err(|e| FamilyError::Json(e.to_string()))?;
    LocalFamily::from_json(&json)
}

fn matmul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let d = a.len();
    (0..d)
        .map(|r| {
            (0..d)
                .map(|c| (0..d).fold(BigInt::zero(), |acc, k| acc + &a[r][k] * &b[k][c]))
                .collect()
        })
        .collect()
}

fn trace(a: &IntMatrix) -> BigInt {
    (0..a.len()).fold(BigInt::zero(), |acc, k| acc + &a[k][k])
}

fn identity(d: usize) -> IntMatrix {
    (0..d).map(|r| (0..d).map(|c| if r == c { BigInt::one() } else { BigInt::zero() }).collect()).collect()
}

/// Nodes of the depth-`n+1` prefix tree over `m` letters.
fn tree_size(m: usize, n: usize) -> Option<u64> {
    let mut total = 0u64;
    let mut level = 1u64;
    for _ in 0..=n {
        level = level.checked_mul(m as u64)?;
        total = total.checked_add(level)?;
    }
    Some(total)
}

fn check_size(f: &LocalFamily, n: usize, guard: u64) -> Result<(), FamilyError> {
    match tree_size(f.m, n) {
        Some(needed) if needed <= guard => Ok(()),
        needed => Err(FamilyError::SizeTooLarge { n, needed: needed.unwrap_or(u64::MAX), guard }),
    }
}

/// Depth-first walk over `j₀…jₙ` with cached prefix products; calls
/// `visit(j, trace(A_{j₀}⋯A_{jₙ}))` at each leaf in lexicographic order.
fn walk_traces(f: &LocalFamily, n: usize, mut visit: impl FnMut(&[usize], BigInt)) {
    let mats = f.matrices();
    let mut prefix = vec![identity(f.d)];
    let mut j = Vec::with_capacity(n + 1);
    fn rec(
        mats: &[IntMatrix],
        n: usize,
        prefix: &mut Vec<IntMatrix>,
        j: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize], BigInt),
    ) {
        if j.len() == n + 1 {
            visit(j, trace(prefix.last().expect("nonempty")));
            return;
        }
        for (k, a) in mats.iter().enumerate() {
            let next = matmul(prefix.last().expect("nonempty"), a);
            prefix.push(next);
            j.push(k);
            rec(mats, n, prefix, j, visit);
            j.pop();
            prefix.pop();
        }
    }
    rec(&mats, n, &mut prefix, &mut j, &mut visit);
}

/// `T_n` with `(T_n)_{j₀…jₙ} = tr(A_{j₀} ⋯ A_{jₙ})`, exact.
pub fn transfer_tensor(f: &LocalFamily, n: usize, guard: u64) -> Result<DenseTensor<BigRational>, FamilyError> {
    check_size(f, n, guard)?;
    let mut entries = Vec::new();
    walk_traces(f, n, |_, t| entries.push(BigRational::from_integer(t)));
    Ok(DenseTensor::new(vec![f.m; n + 1], entries)?)
}

/// `T_n` by summing over all `α₀…αₙ` directly; an oracle for `transfer_tensor`.
pub fn transfer_tensor_brute_force(f: &LocalFamily, n: usize, guard: u64) -> Result<DenseTensor<BigRational>, FamilyError> {
    let count = (f.d as u64).checked_pow(n as u32 + 1).and_then(|x| x.checked_mul((f.m as u64).pow(n as u32 + 1)));
    if count.is_none_or(|c| c > guard) {
        return Err(FamilyError::SizeTooLarge { n, needed: count.unwrap_or(u64::MAX), guard });
    }
    let alphas: Vec<Vec<usize>> = (0..f.d.pow(n as u32 + 1))
        .map(|mut code| {
            let mut a = vec![0; n + 1];
            for slot in a.iter_mut().rev() {
                *slot = code % f.d;
                code /= f.d;
            }
            a
        })
        .collect();
    Ok(DenseTensor::from_fn(vec![f.m; n + 1], |j| {
        let mut total = BigInt::zero();
        for a in &alphas {
            let mut prod = BigInt::one();
            for i in 0..=n {
                prod *= &f.coeffs[a[i]][a[(i + 1) % (n + 1)]][j[i]];
            }
            total += prod;
        }
        BigRational::from_integer(total)
    })?)
}

/// `p_n` expanded as the circular sum of products of local polynomials.
pub fn family_polynomial(f: &LocalFamily, n: usize, guard: u64) -> Result<RationalPoly, FamilyError> {
    check_size(f, n, guard)?;
    let count = (f.d as u64).checked_pow(n as u32 + 1);
    if count.is_none_or(|c| c > guard) {
        return Err(FamilyError::SizeTooLarge { n, needed: count.unwrap_or(u64::MAX), guard });
    }
    let locals: Vec<Vec<RationalPoly>> = (0..f.d).map(|a| (0..f.d).map(|b| f.local(a, b)).collect()).collect();
    let mut out = BlockPolynomial::zero(vec![f.m; n + 1]);
    for mut code in 0..f.d.pow(n as u32 + 1) {
        let mut a = vec![0; n + 1];
        for slot in a.iter_mut().rev() {
            *slot = code % f.d;
            code /= f.d;
        }
        let factors: Vec<&RationalPoly> = (0..=n).map(|i| &locals[a[i]][a[(i + 1) % (n + 1)]]).collect();
        out.add_in_place(&BlockPolynomial::tensor(&factors)).expect("same layout");
    }
    Ok(out)
}

/// The circular sum as a (circle, cyclic)-decomposition with index `D`: the
/// site-`i` local at (incoming `a`, outgoing `b`) is `p_{ab}`. Needs `n ≥ 2`.
pub fn family_decomposition(f: &LocalFamily, n: usize) -> Result<OmegaGDecomposition<BigRational>, FamilyError> {
    let sites = n + 1;
    let action = circle_rotation(sites).map_err(|e| FamilyError::BadFamily(e.to_string()))?;
    let c: &WeightedComplex = action.complex();
    let mut out = OmegaGDecomposition::new(&action, vec![f.m; sites], f.d as u32)?;
    let label_of = |u: usize, v: usize| -> usize {
        let mut verts = vec![u, v];
        verts.sort_unstable();
        let facet = c.facet_index(&verts).expect("circle edge");
        c.label_index((facet, 0)).expect("weight-one facet")
    };
    for i in 0..sites {
        let incoming = label_of((i + sites - 1) % sites, i);
        let outgoing = label_of(i, (i + 1) % sites);
        let labels = c.labels_at(i);
        for a in 0..f.d {
            for b in 0..f.d {
                let beta = labels.iter().map(|&l| if l == incoming { a as u32 } else if l == outgoing { b as u32 } else { 0 }).collect();
                out.insert(i, beta, f.local(a, b))?;
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelResult {
    pub n: usize,
    /// Exact minimum entry of `T_n`.
    pub min_entry: String,
    /// 1-based index tuple attaining the first minimum.
    pub witness: Vec<usize>,
    pub nonnegative: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyReport {
    #[serde(rename = "D")]
    pub d: usize,
    pub m: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub levels: Vec<LevelResult>,
    pub first_violation: Option<LevelResult>,
    pub verdict: String,
    pub disclaimer: String,
}

impl FamilyReport {
    pub fn violated(&self) -> bool {
        self.first_violation.is_some()
    }
}

/// Minimum entry of `T_n` for `n = n_min..=n_max`, stopping at the first
/// negative one. By the tensor/polynomial positivity correspondence a
/// negative entry means `p_n` is neither nonnegative nor sos, and a
/// nonnegative `T_n` means `p_n` is sos.
pub fn bounded_positivity_check(f: &LocalFamily, n_min: usize, n_max: usize, guard: u64) -> Result<FamilyReport, FamilyError> {
    for n in n_min..=n_max {
        check_size(f, n, guard)?;
    }
    let mut levels = Vec::new();
    let mut first_violation = None;
    for n in n_min..=n_max {
        let mut best: Option<(BigInt, Vec<usize>)> = None;
        walk_traces(f, n, |j, t| {
            if best.as_ref().is_none_or(|(b, _)| &t < b) {
                best = Some((t, j.iter().map(|x| x + 1).collect()));
            }
        });
        let (min, witness) = best.expect("m ≥ 1");
        let level = LevelResult { n, min_entry: min.to_string(), witness, nonnegative: !min.is_negative() };
        let bad = !level.nonnegative;
        levels.push(level.clone());
        if bad {
            first_violation = Some(level);
            break;
        }
    }
    let verdict = match &first_violation {
        Some(v) => format!("violation found at n = {}", v.n),
        None => format!("no violation for n = {n_min}..={n_max}"),
    };
    Ok(FamilyReport {
        d: f.d,
        m: f.m,
        n_min,
        n_max,
        levels,
        first_violation,
        verdict,
        disclaimer: UNBOUNDED_DISCLAIMER.to_string(),
    })
}

/// Integer family with `tr(A_j) ≥ 0`, `tr(A_j²) ≥ 0` but `tr(A₁A₂) = −1`, so
/// the first violation is at `n = 1` with witness `(1, 2)`.
pub fn planted_violation() -> LocalFamily {
    LocalFamily::from_matrices(&[vec![vec![1, 0], vec![0, 0]], vec![vec![-1, 1], vec![1, 1]]]).expect("valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::DEFAULT_MAX_ASSIGNMENTS;
    use crate::scalar::rat;
    use crate::tensorbridge::poly_from_tensor;
    use proptest::prelude::*;

    const G: u64 = DEFAULT_FAMILY_GUARD;

    fn ints(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| rat(x, 1)).collect()
    }

    fn d1() -> LocalFamily {
        LocalFamily::from_i64(1, 2, &[vec![vec![1, 2]]]).unwrap()
    }

    #[test]
    fn transfer_tensor_examples() {
        let t = transfer_tensor(&d1(), 1, G).unwrap();
        assert_eq!(t.entries(), ints(&[1, 2, 2, 4]).as_slice());
        let eye = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        let id = LocalFamily::from_matrices(&[eye.clone(), eye]).unwrap();
        for n in 0..4 {
            assert!(transfer_tensor(&id, n, G).unwrap().entries().iter().all(|x| *x == rat(3, 1)));
        }
        let f = LocalFamily::from_i64(2, 2, &[vec![vec![1, -2], vec![0, 3]], vec![vec![2, 1], vec![-1, 0]]]).unwrap();
        assert_eq!(transfer_tensor(&f, 3, G).unwrap(), transfer_tensor_brute_force(&f, 3, G).unwrap());
    }

    #[test]
    fn family_polynomial_examples() {
        let p = family_polynomial(&d1(), 1, G).unwrap();
        let want = RationalPoly::from_flat_terms(
            vec![2, 2],
            [
                (vec![2, 0, 2, 0], rat(1, 1)),
                (vec![2, 0, 0, 2], rat(2, 1)),
                (vec![0, 2, 2, 0], rat(2, 1)),
                (vec![0, 2, 0, 2], rat(4, 1)),
            ],
        )
        .unwrap();
        assert_eq!(p, want);
        let zero = LocalFamily::from_i64(2, 1, &[vec![vec![0], vec![0]], vec![vec![0], vec![0]]]).unwrap();
        assert!(family_polynomial(&zero, 2, G).unwrap().is_zero());
    }

    #[test]
    fn circle_decomposition_contracts_to_family() {
        let f = planted_violation();
        for n in 2..=4 {
            let d = family_decomposition(&f, n).unwrap();
            assert!(d.check_symmetry());
            let c = d.contract(DEFAULT_MAX_ASSIGNMENTS).unwrap().into_poly().unwrap();
            assert_eq!(c, family_polynomial(&f, n, G).unwrap(), "n = {n}");
        }
    }

    #[test]
    fn check_examples() {
        let nonneg = LocalFamily::from_i64(2, 2, &[vec![vec![1, 0], vec![2, 1]], vec![vec![0, 3], vec![1, 1]]]).unwrap();
        let r = bounded_positivity_check(&nonneg, 0, 5, G).unwrap();
        assert!(!r.violated());
        assert_eq!(r.levels.len(), 6);
        assert!(r.disclaimer.contains("undecidable"));

        let r = bounded_positivity_check(&planted_violation(), 0, 5, G).unwrap();
        let v = r.first_violation.clone().unwrap();
        assert_eq!(v.n, 1);
        assert_eq!(v.witness, vec![1, 2]);
        assert_eq!(v.min_entry, "-1");
        assert_eq!(r.levels.len(), 2);

        let neg = LocalFamily::from_i64(1, 2, &[vec![vec![1, -1]]]).unwrap();
        let r = bounded_positivity_check(&neg, 0, 3, G).unwrap();
        assert_eq!(r.first_violation.unwrap().n, 0);
        let r = bounded_positivity_check(&neg, 1, 3, G).unwrap();
        assert_eq!(r.first_violation.unwrap().witness, vec![1, 2]);

        assert!(matches!(
            bounded_positivity_check(&nonneg, 0, 40, G),
            Err(FamilyError::SizeTooLarge { .. })
        ));
    }

    #[test]
    fn family_json() {
        let f = planted_violation();
        let text = serde_json::to_string(&f.to_json()).unwrap();
        assert!(text.contains("\"D\":2"));
        assert_eq!(parse_family(&text).unwrap(), f);
        assert!(parse_family(r#"{"D":2,"m":1,"coeffs":[[[1]]]}"#).is_err());
        assert!(parse_family(r#"{"D":0,"m":1,"coeffs":[]}"#).is_err());
        let written = r#"{"D":2,"m":2,"coeffs":[[[1,-1],[0,1]],[[0,1],[0,1]]]}"#;
        assert_eq!(parse_family(written).unwrap(), f);
        let big = parse_family(r#"{"D":1,"m":1,"coeffs":[[["-123456789012345678901234567890"]]]}"#).unwrap();
        assert_eq!(big.coeff(0, 0, 0).to_string(), "-123456789012345678901234567890");
        assert_eq!(parse_family(&serde_json::to_string(&big.to_json()).unwrap()).unwrap(), big);
        assert!(parse_family(r#"{"D":1,"m":1,"coeffs":[[[1.5]]]}"#).is_err());
    }

    fn family_strategy() -> impl Strategy<Value = LocalFamily> {
        (1usize..=3, 1usize..=3).prop_flat_map(|(d, m)| {
            prop::collection::vec(-3i64..4, d * d * m).prop_map(move |v| {
                let coeffs: Vec<Vec<Vec<i64>>> =
                    (0..d).map(|a| (0..d).map(|b| (0..m).map(|j| v[(a * d + b) * m + j]).collect()).collect()).collect();
                LocalFamily::from_i64(d, m, &coeffs).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn traces_match_brute_force(f in family_strategy(), n in 0usize..=5) {
            prop_assume!((f.vars() as u64).pow(n as u32 + 1) * (f.bond() as u64).pow(n as u32 + 1) <= 200_000);
            prop_assert_eq!(transfer_tensor(&f, n, G).unwrap(), transfer_tensor_brute_force(&f, n, G).unwrap());
        }

        #[test]
        fn polynomial_is_cyclic_and_matches_tensor(f in family_strategy(), n in 0usize..=3) {
            let p = family_polynomial(&f, n, G).unwrap();
            prop_assert_eq!(&p, &poly_from_tensor(&transfer_tensor(&f, n, G).unwrap()));
            let shift: Vec<usize> = (0..=n).map(|i| (i + 1) % (n + 1)).collect();
            prop_assert_eq!(p.act(&shift).unwrap(), p);
        }

        #[test]
        fn verdict_is_scale_invariant(f in family_strategy(), k in 1i64..6) {
            let a = bounded_positivity_check(&f, 0, 3, G).unwrap();
            let b = bounded_positivity_check(&f.scaled(&BigInt::from(k)), 0, 3, G).unwrap();
            prop_assert_eq!(a.violated(), b.violated());
            prop_assert_eq!(a.first_violation.map(|v| (v.n, v.witness)), b.first_violation.map(|v| (v.n, v.witness)));
        }
    }
}
