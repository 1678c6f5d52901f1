use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use omega_core::approx::{approx_separable, mu_upper, SeparableGram, SeparableGramJson};
use omega_core::complex::{parse_complex, ComplexJson, WeightedComplex};
use omega_core::decomposition::{blending_difference, elementary_sum, split_surd_poly, symmetrize_free, Contraction};
use omega_core::familycheck::{bounded_positivity_check, parse_family};
use omega_core::polynomial::{FloatPoly, RationalPoly, SurdPoly};
use omega_core::positivity::{
    caratheodory_bound, factorizability_solve, invariant_sos_family, parse_gram, FactorizabilityResult,
};
use omega_core::scalar::{ScaledScalarJson, Surd};
use omega_core::symmetry::{parse_action, ActionJson, SymmetryAction};
use omega_core::tensorbridge::{distance_separation, parse_tensor, poly_from_tensor};

use crate::bundle::{parse_bundle, Decomposition, Terms};
use crate::errors::{CliError, ErrorKind};
use crate::{acceptance, CommandOutput, Inputs};

#[derive(Parser, Debug)]
#[command(name = "omega", version, about = "Invariant decompositions of polynomials over weighted simplicial complexes")]
pub struct Cli {
    /// Seed for every randomized step; recorded in the report.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Also print a human-readable summary on stderr.
    #[arg(long, global = true)]
    pub pretty: bool,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub psd_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub eq_tol: f64,
    #[arg(long, global = true, default_value_t = 10_000_000)]
    pub max_assignments: u64,
    #[arg(long, global = true, default_value_t = 10080)]
    pub max_group: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Weighted simplicial complexes.
    #[command(subcommand)]
    Complex(ComplexCmd),
    /// Group actions on a complex.
    #[command(subcommand)]
    Action(ActionCmd),
    /// (Ω,G)-decompositions.
    #[command(subcommand)]
    Dec(DecCmd),
    /// Gram matrices, sos families and factorizability.
    #[command(subcommand)]
    Pos(PosCmd),
    /// Tensors and squared-monomial polynomials.
    #[command(subcommand)]
    Bridge(BridgeCmd),
    /// The circle family p_n.
    #[command(subcommand)]
    Family(FamilyCmd),
    /// Approximate separable decompositions.
    #[command(subcommand)]
    Approx(ApproxCmd),
    /// Run the acceptance suite.
    Accept,
}

#[derive(Subcommand, Debug)]
pub enum ComplexCmd {
    Build { file: String },
    Info { file: String },
}

#[derive(Subcommand, Debug)]
pub enum ActionCmd {
    Check { complex: String, action: String },
    Refine { complex: String, action: String },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SymmetrizeMode {
    Free,
    Blending,
}

#[derive(Subcommand, Debug)]
pub enum DecCmd {
    Contract { bundle: String },
    Verify { bundle: String },
    Symmetrize {
        bundle: String,
        #[arg(long, value_enum)]
        mode: SymmetrizeMode,
    },
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    #[arg(long)]
    pub m: u64,
    #[arg(long)]
    pub d: u64,
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub g: u64,
}

#[derive(Subcommand, Debug)]
pub enum PosCmd {
    GramMap { gram: String },
    SosFamily { gram: String, complex: String, action: String },
    Factorizable {
        complex: String,
        action: String,
        #[arg(long)]
        index_size: u32,
    },
    Bound(BoundArgs),
}

#[derive(Subcommand, Debug)]
pub enum BridgeCmd {
    ToPoly { tensor: String },
    Separations {
        #[arg(long = "m", required = true, num_args = 1..)]
        m: Vec<usize>,
    },
}

#[derive(Subcommand, Debug)]
pub enum FamilyCmd {
    Check {
        file: String,
        #[arg(long)]
        n_max: usize,
        #[arg(long, default_value_t = 0)]
        n_min: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum ApproxCmd {
    Run {
        witness: String,
        #[arg(long)]
        epsilon: f64,
    },
}

impl Command {
    pub fn name(&self) -> String {
        let (a, b) = match self {
            Command::Complex(c) => ("complex", match c {
                ComplexCmd::Build { .. } => "build",
                ComplexCmd::Info { .. } => "info",
            }),
            Command::Action(c) => ("action", match c {
                ActionCmd::Check { .. } => "check",
                ActionCmd::Refine { .. } => "refine",
            }),
            Command::Dec(c) => ("dec", match c {
                DecCmd::Contract { .. } => "contract",
                DecCmd::Verify { .. } => "verify",
                DecCmd::Symmetrize { .. } => "symmetrize",
            }),
            Command::Pos(c) => ("pos", match c {
                PosCmd::GramMap { .. } => "gram-map",
                PosCmd::SosFamily { .. } => "sos-family",
                PosCmd::Factorizable { .. } => "factorizable",
                PosCmd::Bound(_) => "bound",
            }),
            Command::Bridge(c) => ("bridge", match c {
                BridgeCmd::ToPoly { .. } => "to-poly",
                BridgeCmd::Separations { .. } => "separations",
            }),
            Command::Family(FamilyCmd::Check { .. }) => ("family", "check"),
            Command::Approx(ApproxCmd::Run { .. }) => ("approx", "run"),
            Command::Accept => ("accept", ""),
        };
        if b.is_empty() { a.to_string() } else { format!("{a} {b}") }
    }
}

pub fn execute(cli: &Cli, inputs: &mut Inputs) -> Result<CommandOutput, CliError> {
    match &cli.command {
        Command::Complex(c) => complex_cmd(c, inputs),
        Command::Action(c) => action_cmd(cli, c, inputs),
        Command::Dec(c) => dec_cmd(cli, c, inputs),
        Command::Pos(c) => pos_cmd(cli, c, inputs),
        Command::Bridge(c) => bridge_cmd(cli, c, inputs),
        Command::Family(FamilyCmd::Check { file, n_max, n_min }) => family_check(cli, file, *n_min, *n_max, inputs),
        Command::Approx(ApproxCmd::Run { witness, epsilon }) => approx_run(cli, witness, *epsilon, inputs),
        Command::Accept => {
            let results = acceptance::run_all(cli.seed);
            let passed = results.iter().filter(|c| c.passed).count();
            let table = results.iter().map(|c| c.line()).collect();
            Ok(CommandOutput::verdict(
                json!({"criteria": results, "passed": passed, "total": results.len()}),
                passed == results.len(),
            )
            .with_table(table))
        }
    }
}

fn load_complex(path: &str, inputs: &mut Inputs) -> Result<WeightedComplex, CliError> {
    Ok(parse_complex(&inputs.read(path)?)?)
}

fn load_action(cli: &Cli, complex: &str, action: &str, inputs: &mut Inputs) -> Result<SymmetryAction, CliError> {
    let c = load_complex(complex, inputs)?;
    Ok(parse_action(&c, &inputs.read(action)?, cli.max_group)?)
}

fn complex_summary(c: &WeightedComplex) -> Value {
    json!({
        "vertices": c.vertex_count(),
        "facets": c.facets().len(),
        "multifacets": c.label_count(),
        "multifacets_at": (0..c.vertex_count()).map(|i| c.labels_at(i).len()).collect::<Vec<_>>(),
        "connected": c.is_connected(),
    })
}

fn complex_cmd(c: &ComplexCmd, inputs: &mut Inputs) -> Result<CommandOutput, CliError> {
    match c {
        ComplexCmd::Build { file } => {
            let cx = load_complex(file, inputs)?;
            Ok(CommandOutput::ok(json!({"complex": cx.to_json(), "summary": complex_summary(&cx)})))
        }
        ComplexCmd::Info { file } => {
            let cx = load_complex(file, inputs)?;
            let s = complex_summary(&cx);
            let table = vec![
                format!("vertices    {}", cx.vertex_count()),
                format!("facets      {}", cx.facets().len()),
                format!("multifacets {}", cx.label_count()),
                format!("connected   {}", cx.is_connected()),
            ];
            Ok(CommandOutput::ok(s).with_table(table))
        }
    }
}

fn one_based(v: &[Vec<usize>]) -> Vec<Vec<usize>> {
    v.iter().map(|o| o.iter().map(|x| x + 1).collect()).collect()
}

fn action_cmd(cli: &Cli, c: &ActionCmd, inputs: &mut Inputs) -> Result<CommandOutput, CliError> {
    match c {
        ActionCmd::Check { complex, action } => {
            let a = load_action(cli, complex, action, inputs)?;
            let blending = a.is_blending(cli.max_assignments)?;
            let result = json!({
                "order": a.order(),
                "free": a.is_free(),
                "vertex_free": a.is_vertex_free(),
                "blending": blending,
                "vertex_orbits": a.vertex_orbits(),
                "multifacet_orbits": a.label_orbits(),
            });
            let table = vec![
                format!("order    {}", a.order()),
                format!("free     {}", a.is_free()),
                format!("blending {blending}"),
                format!("vertex orbits {:?}", one_based(&a.vertex_orbits())),
            ];
            Ok(CommandOutput::ok(result).with_table(table))
        }
        ActionCmd::Refine { complex, action } => {
            let a = load_action(cli, complex, action, inputs)?;
            let r = a.free_refinement()?;
            let c: ComplexJson = r.complex().to_json();
            let aj: ActionJson = r.to_json();
            Ok(CommandOutput::ok(json!({"complex": c, "action": aj, "order": r.order(), "free": r.is_free()})))
        }
    }
}

fn rational_from_surd(p: &SurdPoly) -> Option<RationalPoly> {
    let mut out = RationalPoly::zero(p.sites().to_vec());
    for (e, c) in p.terms() {
        out.add_term(e.clone(), c.as_rational()?);
    }
    Some(out)
}

fn surd_poly_json(p: &SurdPoly) -> Value {
    if let Some(r) = rational_from_surd(p) {
        return json!({"polynomial": r.to_json()});
    }
    if let Some((r, f)) = split_surd_poly(p) {
        return json!({"factor": ScaledScalarJson::from(&f), "polynomial": r.to_json()});
    }
    json!({"polynomial": p.to_float().to_json(), "rounded": true})
}

/// `residual · poly` with the radical folded into the coefficients.
fn full_surd(c: &Contraction<Surd>) -> SurdPoly {
    if c.residual.is_one() {
        c.poly.clone()
    } else {
        c.poly.scale(&Surd::from_scaled(c.residual.clone()))
    }
}

fn full_float(c: &Contraction<f64>) -> FloatPoly {
    c.poly.scale(&c.residual.to_f64())
}

fn dec_cmd(cli: &Cli, c: &DecCmd, inputs: &mut Inputs) -> Result<CommandOutput, CliError> {
    let path = match c {
        DecCmd::Contract { bundle } | DecCmd::Verify { bundle } | DecCmd::Symmetrize { bundle, .. } => bundle,
    };
    let b = parse_bundle(&inputs.read(path)?)?;
    let action = b.action(cli.max_group)?;
    match c {
        DecCmd::Contract { .. } => {
            let out = match b.decomposition(&action)? {
                Decomposition::Exact(d) => {
                    let c = d.contract(cli.max_assignments)?;
                    let mut v = surd_poly_json(&full_surd(&c));
                    v["exact"] = json!(true);
                    v["index_size"] = json!(d.index_size());
                    v
                }
                Decomposition::Float(d) => {
                    let c = d.contract(cli.max_assignments)?;
                    json!({"polynomial": full_float(&c).to_json(), "exact": false, "index_size": d.index_size()})
                }
            };
            Ok(CommandOutput::ok(out))
        }
        DecCmd::Verify { .. } => {
            let expected = b.expected.as_ref().ok_or_else(|| CliError::new(ErrorKind::Input, "bundle has no \"expected\""))?;
            let (symmetric, matches, exact) = match b.decomposition(&action)? {
                Decomposition::Exact(d) => {
                    let want = RationalPoly::from_json(expected)?.to_surd();
                    let got = full_surd(&d.contract(cli.max_assignments)?);
                    (d.check_symmetry(), got == want, true)
                }
                Decomposition::Float(d) => {
                    let want = FloatPoly::from_json(expected)?;
                    let got = full_float(&d.contract(cli.max_assignments)?);
                    (d.check_symmetry_tol(cli.eq_tol), got.approx_eq(&want, cli.eq_tol), false)
                }
            };
            let passed = symmetric && matches;
            let table = vec![format!("symmetric {symmetric}"), format!("contracts to expected {matches}"), format!("exact {exact}")];
            Ok(CommandOutput::verdict(json!({"symmetric": symmetric, "matches_expected": matches, "exact": exact}), passed)
                .with_table(table))
        }
        DecCmd::Symmetrize { mode, .. } => {
            let site_vars: Vec<usize> = b
                .terms
                .as_ref()
                .and_then(|t| t.first())
                .map(|row| row.iter().map(|p| p.sites.iter().sum()).collect())
                .ok_or_else(|| CliError::new(ErrorKind::Input, "bundle has no \"terms\""))?;
            let g = cli.max_assignments;
            match (b.terms()?, mode) {
                (Terms::Exact(terms), SymmetrizeMode::Free) => {
                    let d = symmetrize_free(&site_vars, &terms, &action)?;
                    let want = elementary_sum(&site_vars, &terms)?;
                    let got = d.contract(g)?;
                    let ok = got.is_exact() && got.poly == want;
                    Ok(CommandOutput::verdict(
                        json!({"decomposition": d.to_json(), "index_size": d.index_size(), "symmetric": d.check_symmetry(), "contracts_to_input": ok}),
                        ok && d.check_symmetry(),
                    ))
                }
                (Terms::Float(terms), SymmetrizeMode::Free) => {
                    let d = symmetrize_free(&site_vars, &terms, &action)?;
                    let want = elementary_sum(&site_vars, &terms)?;
                    let ok = full_float(&d.contract(g)?).approx_eq(&want, cli.eq_tol);
                    let sym = d.check_symmetry_tol(cli.eq_tol);
                    Ok(CommandOutput::verdict(
                        json!({"decomposition": d.to_json(), "index_size": d.index_size(), "symmetric": sym, "contracts_to_input": ok}),
                        ok && sym,
                    ))
                }
                (Terms::Exact(terms), SymmetrizeMode::Blending) => {
                    let (q1, q2) = blending_difference(&site_vars, &terms, &action)?;
                    let want = elementary_sum(&site_vars, &terms)?;
                    let (c1, c2) = (q1.contract(g)?, q2.contract(g)?);
                    let ok = c1.is_exact() && c2.is_exact() && c1.poly.sub(&c2.poly)? == want;
                    let sym = q1.check_symmetry() && q2.check_symmetry();
                    Ok(CommandOutput::verdict(
                        json!({"q1": q1.to_json(), "q2": q2.to_json(), "q2_empty": q2.stored_count() == 0, "symmetric": sym, "difference_matches_input": ok}),
                        ok && sym,
                    ))
                }
                (Terms::Float(terms), SymmetrizeMode::Blending) => {
                    let (q1, q2) = blending_difference(&site_vars, &terms, &action)?;
                    let want = elementary_sum(&site_vars, &terms)?;
                    let diff = full_float(&q1.contract(g)?).sub(&full_float(&q2.contract(g)?))?;
                    let ok = diff.approx_eq(&want, cli.eq_tol);
                    let sym = q1.check_symmetry_tol(cli.eq_tol) && q2.check_symmetry_tol(cli.eq_tol);
                    Ok(CommandOutput::verdict(
                        json!({"q1": q1.to_json(), "q2": q2.to_json(), "q2_empty": q2.stored_count() == 0, "symmetric": sym, "difference_matches_input": ok}),
                        ok && sym,
                    ))
                }
            }
        }
    }
}

fn biguint_json(b: &num_bigint::BigUint) -> Value {
    match u64::try_from(b) {
        Ok(v) => json!(v),
        Err(_) => json!(b.to_string()),
    }
}

fn pos_cmd(cli: &Cli, c: &PosCmd, inputs: &mut Inputs) -> Result<CommandOutput, CliError> {
    match c {
        PosCmd::GramMap { gram } => {
            let g = parse_gram(&inputs.read(gram)?)?;
            Ok(CommandOutput::ok(json!({"polynomial": g.gram_map().to_json(), "psd": g.is_psd(cli.psd_tol)})))
        }
        PosCmd::SosFamily { gram, complex, action } => {
            let g = parse_gram(&inputs.read(gram)?)?;
            let a = load_action(cli, complex, action, inputs)?;
            let fam = invariant_sos_family(&g, &a, cli.psd_tol)?;
            let sos_error = fam.sum_of_squares().max_coeff_diff(&g.gram_map());
            let inv_error = fam.invariance_error(&a)?;
            let passed = sos_error < cli.eq_tol && inv_error < cli.eq_tol;
            let members: Vec<_> = fam.polys().iter().map(FloatPoly::to_json).collect();
            Ok(CommandOutput::verdict(
                json!({"size": members.len(), "members": members, "sum_of_squares_error": sos_error, "invariance_error": inv_error}),
                passed,
            )
            .with_table(vec![
                format!("members              {}", fam.len()),
                format!("sum of squares error {sos_error:e}"),
                format!("invariance error     {inv_error:e}"),
            ]))
        }
        PosCmd::Factorizable { complex, action, index_size } => {
            let a = load_action(cli, complex, action, inputs)?;
            match factorizability_solve(&a, *index_size, cli.max_assignments)? {
                FactorizabilityResult::Factorizable(f) => {
                    let values: Vec<Value> = f
                        .values
                        .iter()
                        .enumerate()
                        .flat_map(|(site, m)| {
                            m.iter().map(move |(beta, c)| {
                                json!({"site": site, "beta": beta.iter().map(|b| b + 1).collect::<Vec<_>>(), "c": c})
                            })
                        })
                        .collect();
                    let counts: Vec<Value> = f
                        .counts
                        .iter()
                        .map(|(alpha, k)| json!({"alpha": alpha.iter().map(|b| b + 1).collect::<Vec<_>>(), "k": k}))
                        .collect();
                    Ok(CommandOutput::ok(json!({"factorizable": true, "residual": f.residual, "values": values, "counts": counts})))
                }
                FactorizabilityResult::Infeasible { residual } => {
                    Ok(CommandOutput::verdict(json!({"factorizable": false, "residual": residual}), false))
                }
            }
        }
        PosCmd::Bound(b) => {
            let bound = caratheodory_bound(b.m, b.d, b.n, b.g);
            Ok(CommandOutput::ok(json!({"bound": biguint_json(&bound)})).with_table(vec![bound.to_string()]))
        }
    }
}

fn bridge_cmd(cli: &Cli, c: &BridgeCmd, inputs: &mut Inputs) -> Result<CommandOutput, CliError> {
    match c {
        BridgeCmd::ToPoly { tensor } => {
            let t = parse_tensor(&inputs.read(tensor)?)?;
            Ok(CommandOutput::ok(json!({"polynomial": poly_from_tensor(&t).to_json()})))
        }
        BridgeCmd::Separations { m } => {
            let mut rows = Vec::new();
            let mut table = vec!["m     rank  psd-index  nn-lower  nn-upper".to_string()];
            for &mm in m {
                let r = distance_separation(mm, cli.seed)?;
                table.push(format!(
                    "{:<5} {:<5} {:<10} {:<9} {}",
                    r.m, r.rank, r.psd_index, r.nn_lower_bound_with_rank, r.nn_upper_bound
                ));
                rows.push(r);
            }
            Ok(CommandOutput::ok(json!({"rows": rows})).with_table(table))
        }
    }
}

fn family_check(cli: &Cli, file: &str, n_min: usize, n_max: usize, inputs: &mut Inputs) -> Result<CommandOutput, CliError> {
    if n_min > n_max {
        return Err(CliError::new(ErrorKind::Usage, format!("--n-min {n_min} exceeds --n-max {n_max}")));
    }
    let f = parse_family(&inputs.read(file)?)?;
    let report = bounded_positivity_check(&f, n_min, n_max, cli.max_assignments)?;
    let mut table: Vec<String> = report
        .levels
        .iter()
        .map(|l| format!("n = {:<3} min entry {:<8} at {:?}", l.n, l.min_entry, l.witness))
        .collect();
    table.push(report.verdict.clone());
    table.push(report.disclaimer.clone());
    let passed = !report.violated();
    Ok(CommandOutput::verdict(serde_json::to_value(&report)?, passed).with_table(table))
}

#[derive(serde::Deserialize)]
struct WitnessFile {
    #[serde(flatten)]
    witness: SeparableGramJson,
    #[serde(default)]
    complex: Option<ComplexJson>,
    #[serde(default)]
    action: Option<ActionJson>,
}

fn approx_run(cli: &Cli, path: &str, epsilon: f64, inputs: &mut Inputs) -> Result<CommandOutput, CliError> {
    let file: WitnessFile = serde_json::from_str(&inputs.read(path)?)?;
    let sg = SeparableGram::from_json(&file.witness)?;
    let sites = sg.gram().site_count();
    let complex = match &file.complex {
        Some(c) => WeightedComplex::from_json(c)?,
        None => WeightedComplex::build(sites, &[((0..sites).collect(), 1)])?,
    };
    if complex.vertex_count() != sites {
        return Err(CliError::new(ErrorKind::Input, format!("complex has {} vertices, witness has {sites} sites", complex.vertex_count())));
    }
    let action = match &file.action {
        Some(a) => SymmetryAction::from_json(&complex, a, cli.max_group)?,
        None => SymmetryAction::trivial(&complex),
    };
    let r = approx_separable(&sg, &action, epsilon, cli.seed)?;
    let passed = r.error_schatten2 < epsilon && r.terms_used <= r.budget;
    let result = json!({
        "budget": r.budget,
        "terms_used": r.terms_used,
        "samples": r.samples,
        "verbatim": r.verbatim,
        "error_schatten2": r.error_schatten2,
        "poly_error_bound": r.poly_error_bound,
        "mu_upper": mu_upper(&sg),
        "epsilon": epsilon,
    });
    let table = vec![
        format!("budget          {}", r.budget),
        format!("terms used      {}", r.terms_used),
        format!("error (2-norm)  {:e}", r.error_schatten2),
    ];
    Ok(CommandOutput::verdict(result, passed).with_table(table))
}
