use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use relmarg::estimation::{adjusted_estimate, adjustment_level, run_error_experiment, ExperimentConfig};
use relmarg::expansion::{expand_checked, noisy_expand};
use relmarg::maxent::{log_likelihood_duality_check, solve_maxent, DualityReport, MaxEntModel, SolveOptions, WorldSpace};
use relmarg::polytope::{diagnose, hull_distance, polytope_vertices, Diagnosis, MEMBERSHIP_TOL};
use relmarg::stats::{probability, MarginalConstraint, ModelKind, Theta};
use relmarg::verify::{run_suites, Fixtures, SUITES};
use relmarg::Error;

use crate::output::{csv_string, json_string, print_csv, print_json, write_file, Value};
use crate::{inputs, usage, Format, ModelArgs, SolverArgs, SpaceArgs};

/// A failure whose report has already been printed.
#[derive(Debug)]
pub struct Exit(pub u8);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exit status {}", self.0)
    }
}

impl std::error::Error for Exit {}

fn solve_options(s: &SolverArgs) -> Result<SolveOptions> {
    if !(s.tol > 0.0 && s.weight_cap > 0.0 && s.max_iter > 0) {
        bail!(usage("--tol, --max-iter and --weight-cap must be positive"));
    }
    Ok(SolveOptions {
        tol: s.tol,
        max_iter: s.max_iter,
        weight_cap: s.weight_cap,
    })
}

fn cap_guidance(e: Error) -> anyhow::Error {
    match e {
        Error::CapExceeded { .. } => anyhow::Error::new(e)
            .context("world enumeration is limited; reduce the domain size or the vocabulary"),
        e => e.into(),
    }
}

#[derive(Serialize)]
struct FormulaStats {
    formula: String,
    model_a: Value,
    /// Absent for formulas that are not universal.
    model_b: Option<Value>,
}

#[derive(Serialize)]
struct StatsReport {
    constants: usize,
    width: usize,
    formulas: Vec<FormulaStats>,
}

pub fn stats(fmt: Format, facts: &Path, formulas: &Path, width: usize) -> Result<()> {
    let ex = inputs::facts(facts)?;
    let fs = inputs::formulas(formulas)?;
    if width == 0 || width > ex.len() {
        bail!(usage(format!("--width {width} must lie in 1..={}", ex.len())));
    }
    let mut rows = Vec::with_capacity(fs.len());
    for f in &fs {
        let a = probability(f, &ex, ModelKind::A { width })?;
        let b = match f.universal_parts() {
            Ok(_) => Some(Value::new(&probability(f, &ex, ModelKind::B)?)),
            Err(Error::NotUniversal) => None,
            Err(e) => return Err(e.into()),
        };
        rows.push(FormulaStats {
            formula: f.to_string(),
            model_a: Value::new(&a),
            model_b: b,
        });
    }
    match fmt {
        Format::Json => print_json(&StatsReport {
            constants: ex.len(),
            width,
            formulas: rows,
        }),
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let (be, bd) = r
                        .model_b
                        .as_ref()
                        .map_or((String::new(), String::new()), |v| (v.exact.clone(), v.decimal.to_string()));
                    vec![r.formula.clone(), r.model_a.exact.clone(), r.model_a.decimal.to_string(), be, bd]
                })
                .collect();
            print_csv(&["formula", "model_a_exact", "model_a_decimal", "model_b_exact", "model_b_decimal"], &table)
        }
    }
}

#[derive(Serialize)]
struct ExpandReport {
    level: usize,
    base_constants: usize,
    constants: Vec<String>,
    atoms: Vec<String>,
    noise: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn expand(
    fmt: Format,
    facts: &Path,
    level: usize,
    noise: Option<f64>,
    min_level: usize,
    seed: u64,
    space: &SpaceArgs,
    out: Option<&Path>,
) -> Result<()> {
    let base = inputs::facts(facts)?;
    let rules = inputs::rules(space)?;
    let result = match noise {
        None => expand_checked(&base, level, &rules)?,
        Some(eps) => {
            let vocab = inputs::vocabulary(space, Some(&base), &[], &rules)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ex = noisy_expand(&base, level, eps, &vocab, min_level, &mut rng)?;
            relmarg::expansion::check_hard_rules(&ex, &rules)?;
            ex
        }
    };
    if let Some(path) = out {
        write_file(path, &result.to_facts())?;
    }
    let atoms: Vec<String> = result.atoms().iter().map(|a| result.atom_string(a)).collect();
    match fmt {
        Format::Json => print_json(&ExpandReport {
            level,
            base_constants: base.len(),
            constants: result.constants().to_vec(),
            atoms,
            noise,
        }),
        Format::Csv => print_csv(&["atom"], &atoms.into_iter().map(|a| vec![a]).collect::<Vec<_>>()),
    }
}

fn report_not_realizable(fmt: Format, d: &Diagnosis) -> Result<()> {
    if fmt == Format::Json {
        #[derive(Serialize)]
        struct Wrapped<'a> {
            status: &'static str,
            diagnosis: &'a Diagnosis,
        }
        print_json(&Wrapped {
            status: "not_realizable",
            diagnosis: d,
        })?;
    }
    eprintln!("error: marginals are not realizable: {d}");
    boundary_hint(Some(d));
    Err(Exit(2).into())
}

fn boundary_hint(d: Option<&Diagnosis>) {
    if d.is_some_and(|d| d.realizable && d.boundary) {
        eprintln!("hint: the targets lie on the polytope boundary; derive them from a noisy expansion (`relmarg expand --noise`) to move them inside");
    }
}

fn print_model(fmt: Format, model: &MaxEntModel, out: Option<&Path>) -> Result<()> {
    let json = json_string(model)?;
    if let Some(path) = out {
        write_file(path, &json)?;
    }
    match fmt {
        Format::Json => {
            print!("{json}");
            Ok(())
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = (0..model.formulas.len())
                .map(|i| {
                    vec![
                        model.formulas[i].clone(),
                        model.theta[i].to_string(),
                        model.weights[i].to_string(),
                        model.achieved_marginals[i].to_string(),
                    ]
                })
                .collect();
            print_csv(&["formula", "theta", "weight", "achieved"], &rows)
        }
    }
}

pub fn maxent(
    fmt: Format,
    constraints: &Path,
    size: usize,
    model: &ModelArgs,
    solver: &SolverArgs,
    space: &SpaceArgs,
    out: Option<&Path>,
) -> Result<()> {
    let kind = model.kind()?;
    let opts = solve_options(solver)?;
    let cs = inputs::constraints(constraints)?;
    let formulas: Vec<_> = cs.iter().map(|c| c.formula.clone()).collect();
    let rules = inputs::rules(space)?;
    let vocab = inputs::vocabulary(space, None, &formulas, &rules)?;
    let ws = WorldSpace::enumerate(size, &vocab, &rules).map_err(cap_guidance)?;
    match solve_maxent(&cs, &ws, kind, &opts) {
        Ok(m) => print_model(fmt, &m, out),
        Err(Error::NotRealizable(d)) => report_not_realizable(fmt, &d),
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct Query {
    theta: Vec<f64>,
    distance: f64,
    realizable: bool,
}

#[derive(Serialize)]
struct PolytopeReport {
    size: usize,
    formulas: Vec<String>,
    vertices: Vec<Vec<f64>>,
    exact_vertices: Vec<Vec<String>>,
    dim_rank: usize,
    queries: Vec<Query>,
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.parse::<Theta>().map(|t| t.value()).map_err(anyhow::Error::from))
        .collect()
}

pub fn polytope(
    fmt: Format,
    formulas: &Path,
    size: usize,
    model: &ModelArgs,
    theta: &[String],
    space: &SpaceArgs,
) -> Result<()> {
    let kind = model.kind()?;
    let (fs, cs) = inputs::formulas_or_constraints(formulas)?;
    let rules = inputs::rules(space)?;
    let vocab = inputs::vocabulary(space, None, &fs, &rules)?;
    let ws = WorldSpace::enumerate(size, &vocab, &rules).map_err(cap_guidance)?;
    let poly = polytope_vertices(&fs, &ws, kind)?;
    let mut points: Vec<Vec<f64>> = cs.iter().map(|cs| cs.iter().map(|c| c.theta.value()).collect()).collect();
    for t in theta {
        points.push(parse_point(t).with_context(|| format!("in --theta {t}"))?);
    }
    let queries = points
        .into_iter()
        .map(|p| {
            let distance = hull_distance(&p, &poly)?;
            Ok(Query {
                theta: p,
                distance,
                realizable: distance < MEMBERSHIP_TOL,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = PolytopeReport {
        size,
        formulas: poly.formulas.clone(),
        dim_rank: poly.rank(),
        exact_vertices: poly
            .exact_vertices
            .iter()
            .map(|v| v.iter().map(ToString::to_string).collect())
            .collect(),
        vertices: poly.vertices.clone(),
        queries,
    };
    match fmt {
        Format::Json => print_json(&report),
        Format::Csv => {
            let header: Vec<String> = (1..=fs.len()).map(|i| format!("f{i}")).collect();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            print_csv(&header, &report.exact_vertices)
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn estimate(
    fmt: Format,
    ground_truth: &Path,
    m: usize,
    target_n: usize,
    constraints: &Path,
    trials: usize,
    seed: u64,
    model: &ModelArgs,
    csv: Option<&Path>,
) -> Result<()> {
    let kind = model.kind()?;
    let truth = inputs::facts(ground_truth)?;
    let (formulas, _) = inputs::formulas_or_constraints(constraints)?;
    let cfg = ExperimentConfig {
        ground_truth: truth,
        sample_size: m,
        kind,
        target_n,
        formulas,
        trials,
        seed,
    };
    let report = run_error_experiment(&cfg)?;
    let header: Vec<String> = std::iter::once("trial".to_string())
        .chain((1..=report.formulas.len()).map(|i| format!("error_f{i}")))
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = report
        .per_trial
        .iter()
        .enumerate()
        .map(|(t, row)| std::iter::once(t.to_string()).chain(row.iter().map(|e| e.to_string())).collect())
        .collect();
    if let Some(path) = csv {
        write_file(path, &csv_string(&header, &rows)?)?;
    }
    match fmt {
        Format::Json => print_json(&report)?,
        Format::Csv => print_csv(&header, &rows)?,
    }
    if !report.passed {
        eprintln!("error: mean error exceeds the bound for at least one formula");
        return Err(Exit(1).into());
    }
    Ok(())
}

pub fn verify(fmt: Format, suites: &[String], fixtures: Option<&Path>) -> Result<()> {
    let fx = match fixtures {
        Some(dir) => Fixtures::load(dir)?,
        None => Fixtures::builtin(),
    };
    let names: Vec<&str> = if suites.is_empty() {
        SUITES.to_vec()
    } else {
        suites.iter().map(String::as_str).collect()
    };
    let report = run_suites(&names, &fx)?;
    match fmt {
        Format::Json => print_json(&report)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .suites
                .iter()
                .flat_map(|s| {
                    s.checks
                        .iter()
                        .map(|c| vec![s.suite.clone(), c.name.clone(), c.passed.to_string(), c.detail.clone()])
                })
                .collect();
            print_csv(&["suite", "check", "passed", "detail"], &rows)?;
        }
    }
    if !report.passed {
        eprintln!("error: failing suites: {}", report.failed_suites.join(", "));
        return Err(Exit(1).into());
    }
    Ok(())
}

#[derive(Serialize)]
struct Estimate {
    formula: String,
    #[serde(flatten)]
    value: Value,
}

#[derive(Serialize)]
struct PipelineReport {
    status: &'static str,
    training_constants: usize,
    target_n: usize,
    level: usize,
    estimates: Vec<Estimate>,
    realizability: Option<Diagnosis>,
    duality: Option<DualityReport>,
    model: Option<MaxEntModel>,
}

#[allow(clippy::too_many_arguments)]
pub fn pipeline(
    fmt: Format,
    facts: &Path,
    formulas: &Path,
    target_n: usize,
    model: &ModelArgs,
    solver: &SolverArgs,
    space: &SpaceArgs,
    out: Option<&Path>,
) -> Result<()> {
    let kind = model.kind()?;
    let opts = solve_options(solver)?;
    let train = inputs::facts(facts)?;
    let fs = inputs::formulas(formulas)?;
    let rules = inputs::rules(space)?;
    let mut report = PipelineReport {
        status: "ok",
        training_constants: train.len(),
        target_n,
        level: adjustment_level(train.len(), target_n)?,
        estimates: Vec::new(),
        realizability: None,
        duality: None,
        model: None,
    };
    let mut constraints = Vec::with_capacity(fs.len());
    for f in &fs {
        let r = adjusted_estimate(&train, f, kind, target_n)?;
        report.estimates.push(Estimate {
            formula: f.to_string(),
            value: Value::new(&r),
        });
        constraints.push(MarginalConstraint::new(f.clone(), Theta::Exact(r))?);
    }
    let vocab = inputs::vocabulary(space, Some(&train), &fs, &rules)?;
    let ws = if target_n == train.len() {
        WorldSpace::with_constants(train.constants().to_vec(), &vocab, &rules)
    } else {
        WorldSpace::enumerate(target_n, &vocab, &rules)
    };
    let ws = match ws {
        Ok(ws) => ws,
        Err(e @ Error::CapExceeded { .. }) => {
            report.status = "cap_exceeded";
            if fmt == Format::Json {
                print_json(&report)?;
            }
            eprintln!("error: {e}; the estimates above are exact, but fitting at n={target_n} needs a smaller n or vocabulary");
            return Err(Exit(3).into());
        }
        Err(e) => return Err(e.into()),
    };
    let theta: Vec<f64> = constraints.iter().map(|c| c.theta.value()).collect();
    let poly = polytope_vertices(&fs, &ws, kind)?;
    let diagnosis = diagnose(&theta, &poly, "realizability at the target size")?;
    let realizable = diagnosis.realizable;
    report.realizability = Some(diagnosis);
    if !realizable {
        report.status = "not_realizable";
        if fmt == Format::Json {
            print_json(&report)?;
        }
        eprintln!("error: estimated marginals are not realizable at n={target_n}");
        return Err(Exit(2).into());
    }
    let fitted = match fit_and_check(&train, &constraints, &fs, kind, &ws, &opts, &mut report) {
        Ok(m) => m,
        Err(Error::NotRealizable(d)) => {
            let reason = d.reason.clone();
            report.status = "not_realizable";
            report.realizability = Some(*d);
            if fmt == Format::Json {
                print_json(&report)?;
            }
            eprintln!("error: the solver did not converge at n={target_n}: {reason}");
            boundary_hint(report.realizability.as_ref());
            return Err(Exit(2).into());
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = out {
        write_file(path, &json_string(&fitted)?)?;
    }
    report.model = Some(fitted);
    match fmt {
        Format::Json => print_json(&report),
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .estimates
                .iter()
                .map(|e| vec![e.formula.clone(), e.value.exact.clone(), e.value.decimal.to_string()])
                .collect();
            print_csv(&["formula", "estimate_exact", "estimate_decimal"], &rows)
        }
    }
}

fn fit_and_check(
    train: &relmarg::data::GlobalExample,
    constraints: &[MarginalConstraint],
    formulas: &[relmarg::logic::Formula],
    kind: ModelKind,
    ws: &WorldSpace,
    opts: &SolveOptions,
    report: &mut PipelineReport,
) -> relmarg::Result<MaxEntModel> {
    if train.len() == ws.size() {
        report.duality = Some(log_likelihood_duality_check(train, formulas, kind, ws, opts)?);
    }
    solve_maxent(constraints, ws, kind, opts)
}
