//! The ten acceptance criteria, each reduced to a pass/fail line.

use std::io;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use omega_core::approx::{
    approx_separable, error_slope, random_invariant_witness, sample_budget, sampled_error, trial_seed,
};
use omega_core::decomposition::{
    bipartite_rank, blending_difference, elementary_sum, random_invariant_terms, symmetrize_free,
    DEFAULT_MAX_ASSIGNMENTS,
};
use omega_core::familycheck::{
    bounded_positivity_check, planted_violation, transfer_tensor, transfer_tensor_brute_force, LocalFamily,
    DEFAULT_FAMILY_GUARD,
};
use omega_core::polynomial::{FloatPoly, RationalPoly};
use omega_core::positivity::{
    diagonal_square_split, double_edge_sos_witness, factorizability_solve, in_local_cone, invariant_sos_family,
    separable_symmetrize, sep_to_sos, single_edge_sos_witness, sos_to_plain, FactorizabilityResult,
    FamilyDecomposition, GramRepresentation, LocalCone,
};
use omega_core::symmetry::standard::*;
use omega_core::symmetry::SymmetryAction;
use omega_core::tensorbridge::{distance_matrix, distance_separation, poly_from_tensor, psd_distance_factorization};

use crate::bundle::{parse_bundle, Decomposition};
use crate::{run_with_reader, EXIT_FAIL, EXIT_GUARD, EXIT_OK, EXIT_USAGE};

const G: u64 = DEFAULT_MAX_ASSIGNMENTS;

pub const DOUBLE_EDGE_FIXTURE: &str = include_str!("../fixtures/example-double-edge.json");
pub const MINUS_SIGN_DELTA: &str = include_str!("../fixtures/minus-sign-delta.json");
pub const MINUS_SIGN_Q_PLUS: &str = include_str!("../fixtures/minus-sign-q-plus.json");
pub const MINUS_SIGN_Q_MINUS: &str = include_str!("../fixtures/minus-sign-q-minus.json");
pub const PLANTED_FIXTURE: &str = include_str!("../fixtures/planted.json");
pub const NONNEGATIVE_FIXTURE: &str = include_str!("../fixtures/nonnegative-family.json");

#[derive(Clone, Debug, Serialize)]
pub struct Criterion {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Criterion {
    pub fn line(&self) -> String {
        format!("criterion {:>2} {} {}: {}", self.id, if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

type Check = Result<(bool, String), String>;

fn criterion(id: usize, name: &'static str, check: Check) -> Criterion {
    match check {
        Ok((passed, detail)) => Criterion { id, name, passed, detail },
        Err(e) => Criterion { id, name, passed: false, detail: format!("error: {e}") },
    }
}

fn s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn run_all(seed: u64) -> Vec<Criterion> {
    (1..=10).map(|id| run_one(id, seed)).collect()
}

pub fn run_one(id: usize, seed: u64) -> Criterion {
    match id {
        1 => criterion(1, "double-edge worked example", c1()),
        2 => criterion(2, "minus-sign suite", c2()),
        3 => criterion(3, "free symmetrization", c3(seed)),
        4 => criterion(4, "blending difference", c4(seed)),
        5 => criterion(5, "invariant sos pipeline", c5(seed)),
        6 => criterion(6, "rank separations", c6(seed)),
        7 => criterion(7, "factorizability", c7()),
        8 => criterion(8, "rank inequality chain", c8(seed)),
        9 => criterion(9, "approximate separable decomposition", c9(seed)),
        10 => criterion(10, "family checker", c10(seed)),
        _ => criterion(id, "unknown", Err(format!("no criterion {id}"))),
    }
}

/// Contract an exact bundle; `(poly, symmetric)`.
fn contract_exact(text: &str) -> Result<(RationalPoly, bool), String> {
    let b = parse_bundle(text).map_err(|e| e.message)?;
    let a = b.action(10080).map_err(|e| e.message)?;
    let Decomposition::Exact(d) = b.decomposition(&a).map_err(|e| e.message)? else {
        return Err("fixture is not exact".into());
    };
    let c = d.contract(G).map_err(s)?;
    if !c.is_exact() {
        return Err(format!("residual scale {} left over", c.residual));
    }
    let mut out = RationalPoly::zero(c.poly.sites().to_vec());
    for (e, coeff) in c.poly.terms() {
        out.add_term(e.clone(), coeff.as_rational().ok_or_else(|| format!("irrational coefficient {coeff}"))?);
    }
    Ok((out, d.check_symmetry()))
}

fn expected_of(text: &str) -> Result<RationalPoly, String> {
    let b = parse_bundle(text).map_err(|e| e.message)?;
    RationalPoly::from_json(b.expected.as_ref().ok_or("fixture has no expected polynomial")?).map_err(s)
}

fn c1() -> Check {
    let (p, sym) = contract_exact(DOUBLE_EDGE_FIXTURE)?;
    let want = expected_of(DOUBLE_EDGE_FIXTURE)?;
    Ok((p == want && sym, format!("contraction = {p}, symmetric = {sym}")))
}

fn c2() -> Check {
    let (delta, sym) = contract_exact(MINUS_SIGN_DELTA)?;
    let want = expected_of(MINUS_SIGN_DELTA)?;
    let (q1, s1) = contract_exact(MINUS_SIGN_Q_PLUS)?;
    let (q2, s2) = contract_exact(MINUS_SIGN_Q_MINUS)?;
    let diff = q1.sub(&q2).map_err(s)?;
    let ok = delta == want && sym && diff == want && s1 && s2;
    Ok((ok, format!("(Δ,C₂) gives {delta} (symmetric {sym}); (Λ₁,C₂) difference gives {diff}")))
}

fn free_instance(i: usize) -> Result<SymmetryAction, String> {
    match i % 5 {
        0 => circle_rotation(3),
        1 => circle_rotation(4),
        2 => circle_rotation(5),
        3 => simplex_symmetric(1).and_then(|a| a.free_refinement()),
        _ => simplex_symmetric(2).and_then(|a| a.free_refinement()),
    }
    .map_err(s)
}

fn c3(seed: u64) -> Check {
    let mut passed = 0;
    let mut worst = String::new();
    for i in 0..50 {
        let a = free_instance(i)?;
        let nv = a.complex().vertex_count();
        let sv = vec![1; nv];
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, 3, i));
        let terms = random_invariant_terms(&a, &mut rng, 1, 2);
        let d = symmetrize_free(&sv, &terms, &a).map_err(s)?;
        let c = d.contract(G).map_err(s)?;
        let want = elementary_sum(&sv, &terms).map_err(s)?;
        let bound = a.order() * terms.len();
        let ok = c.is_exact() && c.poly == want && (d.index_size() as usize) <= bound && d.check_symmetry();
        if ok {
            passed += 1;
        } else if worst.is_empty() {
            worst = format!("; instance {i} failed (index {} vs bound {bound})", d.index_size());
        }
    }
    Ok((passed == 50, format!("{passed}/50 exact{worst}")))
}

fn c4(seed: u64) -> Check {
    let mut passed = 0;
    let mut total = 0;
    for n in 1..=3 {
        let a = simplex_symmetric(n).map_err(s)?;
        let sv = vec![1; n + 1];
        for i in 0..20 {
            total += 1;
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, 40 + n, i));
            let terms = random_invariant_terms(&a, &mut rng, 1, 2);
            let (q1, q2) = blending_difference(&sv, &terms, &a).map_err(s)?;
            let (c1, c2) = (q1.contract(G).map_err(s)?, q2.contract(G).map_err(s)?);
            let exact = c1.is_exact() && c2.is_exact();
            let diff = c1.poly.sub(&c2.poly).map_err(s)?;
            let empty_ok = n % 2 == 1 || q2.stored_count() == 0;
            if exact && diff == elementary_sum(&sv, &terms).map_err(s)? && empty_ok && q1.check_symmetry() && q2.check_symmetry() {
                passed += 1;
            }
        }
    }
    Ok((passed == total, format!("{passed}/{total} exact, q₂ empty for even n")))
}

/// Group average of a random PSD Gram matrix of random rank.
fn random_invariant_gram(a: &SymmetryAction, d: u32, rng: &mut impl Rng) -> Result<GramRepresentation, String> {
    let b = (d + 1) as usize;
    let dim = b * b;
    let rank = rng.random_range(1..=dim);
    let vs: Vec<Vec<f64>> = (0..rank).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let m = GramRepresentation::from_vectors(1, 1, d, &vs).map_err(s)?;
    let mut sum = DMatrix::<f64>::zeros(dim, dim);
    for g in 0..a.order() {
        sum += m.act(a, g).map_err(s)?.entries();
    }
    GramRepresentation::new(1, 1, d, sum / a.order() as f64).map_err(s)
}

fn c5(seed: u64) -> Check {
    let start = Instant::now();
    let mut worst_sos: f64 = 0.0;
    let mut worst_inv: f64 = 0.0;
    for i in 0..20 {
        let a = if i % 2 == 0 { double_edge_vertex_swap() } else { double_edge_free() };
        let d = 1 + (i / 2 % 2) as u32;
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, 5, i));
        let m = random_invariant_gram(&a, d, &mut rng)?;
        let fam = invariant_sos_family(&m, &a, 1e-9).map_err(s)?;
        worst_sos = worst_sos.max(fam.sum_of_squares().max_coeff_diff(&m.gram_map()));
        worst_inv = worst_inv.max(fam.invariance_error(&a).map_err(s)?);
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst_sos < 1e-9 && worst_inv < 1e-9 && secs < 10.0;
    Ok((ok, format!("max sos error {worst_sos:.1e}, max invariance error {worst_inv:.1e}, {secs:.2} s")))
}

fn ceil_log2(m: usize) -> usize {
    let mut k = 0;
    while (1usize << k) < m {
        k += 1;
    }
    k
}

fn c6(seed: u64) -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for m in [4, 8, 12] {
        let t = distance_matrix(m).map_err(s)?;
        let rank = bipartite_rank(&poly_from_tensor(&t)).map_err(s)?;
        let f = psd_distance_factorization(m).map_err(s)?;
        let traces_exact = f.contract(G).map_err(s)? == t.to_float();
        let row = distance_separation(m, seed).map_err(s)?;
        let lb = row.nn_lower_bound;
        ok &= rank == 3 && traces_exact && lb == ceil_log2(m) && f.index_size() == 2;
        parts.push(format!("m={m}: rank {rank}, psd index {}, nn ≥ {lb}, nn ≤ {}", f.index_size(), row.nn_upper_bound));
    }
    Ok((ok, parts.join("; ")))
}

fn c7() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    match factorizability_solve(&double_edge_fixed_vertices(), 2, G).map_err(s)? {
        FactorizabilityResult::Factorizable(f) => {
            let mut vals: Vec<f64> = f.values.iter().flat_map(|m| m.values().copied()).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            let want = [1.0 / 2f64.sqrt(), 1.0];
            let matches = vals.len() == 2 && vals.iter().zip(want).all(|(v, w)| (v - w).abs() < 1e-10);
            ok &= matches && f.residual < 1e-10;
            parts.push(format!("fixed vertices: C values {vals:.6?}, residual {:.1e}", f.residual));
        }
        r => {
            ok = false;
            parts.push(format!("fixed vertices: {r:?}"));
        }
    }
    let candidates: Vec<(&str, SymmetryAction)> = vec![
        ("double edge", double_edge_free()),
        ("single edge", single_edge_swap()),
        ("circle 3", circle_rotation(3).map_err(s)?),
        ("circle 4", circle_rotation(4).map_err(s)?),
        ("circle 5", circle_rotation(5).map_err(s)?),
        ("line 1", line_reversal(1).map_err(s)?),
    ];
    let free: Vec<_> = candidates.into_iter().filter(|(_, a)| a.is_vertex_free()).collect();
    let mut ones = 0;
    for (name, a) in &free {
        match factorizability_solve(a, 2, G).map_err(s)? {
            FactorizabilityResult::Factorizable(f) if f.values.iter().flat_map(|m| m.values()).all(|&c| (c - 1.0).abs() < 1e-10) => {
                ones += 1
            }
            r => {
                ok = false;
                parts.push(format!("{name}: {r:?}"));
            }
        }
    }
    parts.push(format!("C ≡ 1 on {ones}/{} free-vertex instances", free.len()));
    Ok((ok, parts.join("; ")))
}

fn check_plain(name: &str, f: &FamilyDecomposition<f64>, parts: &mut Vec<String>) -> Result<bool, String> {
    let plain = sos_to_plain(f).map_err(s)?;
    let p = f.family(G).map_err(s)?.sum_of_squares();
    let err = plain.contract(G).map_err(s)?.poly.max_coeff_diff(&p);
    let k = f.index_size();
    let ok = plain.index_size() <= k * k && err < 1e-9;
    if !ok {
        parts.push(format!("{name}: plain index {} vs sos index {k}, error {err:.1e}", plain.index_size()));
    }
    Ok(ok)
}

fn c8(seed: u64) -> Check {
    let mut parts = Vec::new();
    let mut ok = check_plain("double edge witness", &double_edge_sos_witness().to_float(), &mut parts)?;
    ok &= check_plain("single edge witness", &single_edge_sos_witness().to_float(), &mut parts)?;
    let a = double_edge_free();
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, 8, 0));
    let mut count = 2;
    for i in 0..20 {
        let mut terms = Vec::new();
        for _ in 0..rng.random_range(1..4) {
            let (c0, c1): (f64, f64) = (rng.random_range(0.1..2.0), rng.random_range(0.1..2.0));
            let f = FloatPoly::univariate(&[c0, 0.0, c1]);
            let h = FloatPoly::univariate(&[0.0, 0.0, c0 + c1]);
            terms.push(vec![f.clone(), h.clone()]);
            terms.push(vec![h, f]);
        }
        let sep = separable_symmetrize(&[1, 1], &terms, &a, |_, p| in_local_cone(p, LocalCone::DiagonalSos)).map_err(s)?;
        let FactorizabilityResult::Factorizable(fac) = factorizability_solve(&a, sep.index_size(), G).map_err(s)? else {
            parts.push(format!("instance {i}: free action not factorizable"));
            ok = false;
            continue;
        };
        let sos = sep_to_sos(&sep, &fac, |_, _, p| diagonal_square_split(p)).map_err(s)?;
        let p = sep.contract(G).map_err(s)?.poly;
        let err = sos.family(G).map_err(s)?.sum_of_squares().max_coeff_diff(&p);
        if sos.index_size() > sep.index_size() || err >= 1e-9 {
            ok = false;
            parts.push(format!("instance {i}: sos index {} vs sep index {}, error {err:.1e}", sos.index_size(), sep.index_size()));
        }
        ok &= check_plain(&format!("instance {i}"), &sos, &mut parts)?;
        count += 1;
    }
    parts.insert(0, format!("{count} witnesses checked"));
    Ok((ok, parts.join("; ")))
}

fn c9(seed: u64) -> Check {
    let a = double_edge_free();
    let eps = 0.5;
    let k = sample_budget(eps).map_err(s)?;
    let mut within = 0;
    let mut forced_within = 0;
    let mut worst_forced: f64 = 0.0;
    let mut first = None;
    for i in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, 9, i));
        let w = random_invariant_witness(&a, 1, 2, 10, &mut rng).map_err(s)?;
        let r = approx_separable(&w, &a, eps, trial_seed(seed, 90, i)).map_err(s)?;
        if r.error_schatten2 < eps && r.terms_used <= r.budget {
            within += 1;
        }
        // the witness fits the budget verbatim; sampling at k exercises the estimator
        let e = sampled_error(&w, &a, k, trial_seed(seed, 91, i)).map_err(s)?;
        worst_forced = worst_forced.max(e);
        if e < eps {
            forced_within += 1;
        }
        first.get_or_insert(w);
    }
    let w = first.expect("20 witnesses");
    let slope = error_slope(&w, &a, &[100, 1000, 10000], 24, trial_seed(seed, 92, 0)).map_err(s)?;
    let ok = within >= 19 && forced_within >= 19 && (slope.slope + 0.5).abs() <= 0.1;
    Ok((
        ok,
        format!(
            "budget {}·|G|; {within}/20 within ε; sampled at k={k}: {forced_within}/20 within ε (max {worst_forced:.3}); slope {:.3}",
            k, slope.slope
        ),
    ))
}

fn random_family(rng: &mut impl Rng, d: usize, m: usize) -> Result<LocalFamily, String> {
    let coeffs: Vec<Vec<Vec<i64>>> =
        (0..d).map(|_| (0..d).map(|_| (0..m).map(|_| rng.random_range(-2..3)).collect()).collect()).collect();
    LocalFamily::from_i64(d, m, &coeffs).map_err(s)
}

fn exit_code_checks() -> Vec<(String, bool)> {
    let reader = |p: &str| -> io::Result<String> {
        match p {
            "planted.json" => Ok(PLANTED_FIXTURE.to_string()),
            "nonnegative.json" => Ok(NONNEGATIVE_FIXTURE.to_string()),
            "broken.json" => Ok("{\"D\": 2,".to_string()),
            _ => Err(io::Error::new(io::ErrorKind::NotFound, "no such fixture")),
        }
    };
    let cases: [(&[&str], i32); 5] = [
        (&["omega", "family", "check", "planted.json", "--n-max", "6"], EXIT_FAIL),
        (&["omega", "family", "check", "nonnegative.json", "--n-max", "4"], EXIT_OK),
        (&["omega", "family", "check", "broken.json", "--n-max", "4"], EXIT_USAGE),
        (&["omega", "family", "check", "nonnegative.json", "--n-max", "30", "--max-assignments", "1000"], EXIT_GUARD),
        (&["omega", "family", "check", "planted.json"], EXIT_USAGE),
    ];
    cases
        .iter()
        .map(|(args, want)| {
            let out = run_with_reader(args.iter().copied(), &reader);
            (format!("{} → {}", args[3..].join(" "), out.code), out.code == *want)
        })
        .collect()
}

fn c10(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, 10, 0));
    let mut cases = 0;
    let mut agree = 0;
    for d in 1..=3 {
        for m in 1..=3 {
            let f = random_family(&mut rng, d, m)?;
            for n in 0..=5 {
                cases += 1;
                let fast = transfer_tensor(&f, n, DEFAULT_FAMILY_GUARD).map_err(s)?;
                let slow = transfer_tensor_brute_force(&f, n, DEFAULT_FAMILY_GUARD).map_err(s)?;
                if fast == slow {
                    agree += 1;
                }
            }
        }
    }
    let report = bounded_positivity_check(&planted_violation(), 0, 6, DEFAULT_FAMILY_GUARD).map_err(s)?;
    let planted_ok = report.first_violation.as_ref().is_some_and(|v| v.n == 1 && v.witness == [1, 2] && v.min_entry == "-1");
    let disclaimer_ok = report.disclaimer.contains("undecidable");
    let exits = exit_code_checks();
    let exits_ok = exits.iter().all(|(_, ok)| *ok);
    let failed_exits: Vec<&str> = exits.iter().filter(|(_, ok)| !ok).map(|(s, _)| s.as_str()).collect();
    let ok = agree == cases && planted_ok && disclaimer_ok && exits_ok;
    Ok((
        ok,
        format!(
            "oracle {agree}/{cases}; planted violation at n = {:?}; disclaimer {}; exit codes {}{}",
            report.first_violation.as_ref().map(|v| v.n),
            if disclaimer_ok { "present" } else { "missing" },
            if exits_ok { "ok" } else { "wrong: " },
            failed_exits.join(", ")
        ),
    ))
}
