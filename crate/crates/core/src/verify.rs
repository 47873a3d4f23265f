//! Property suites run by `relmarg verify`. Each suite is a list of named
//! checks over the fixtures and seeded random instances.

use std::path::Path;
use std::time::Instant;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::combin::{ratio, to_f64};
use crate::data::{random_example, GlobalExample};
use crate::error::{Error, Result};
use crate::estimation::{
    disjoint_sample_estimator, effective_sample_size, hoeffding_tail, run_error_experiment, subsample_mean_exact,
    x_process_distribution, y_process_distribution, ExperimentConfig,
};
use crate::expansion::{expand, expansion, expansion_diff_bound, mixture_check};
use crate::fixtures;
use crate::logic::{parse_formula, Formula, Vocabulary};
use crate::maxent::{
    primal_solve_oracle, shrink_distribution, solve_maxent, ExactDistribution, FeatureTable, PrimalOptions,
    SolveOptions, WorldSpace,
};
use crate::polytope::{eta_interior, interiority_margin, polytope_vertices, realizability_check};
use crate::stats::{parse_constraints, parse_formulas, probability, ModelKind};

/// Names accepted by [`run_suite`].
pub const SUITES: &[&str] = &[
    "examples", "prop1", "prop2", "prop3", "prop4", "prop5", "lemma1", "lemma2", "lemma3", "duality",
];

/// Formulas over `e/2, r/1` used by the random sweeps. Entries up to
/// [`UNIVERSAL_POOL`] are universal and also serve Model B.
pub const POOL: &[&str] = &[
    "forall X, Y: ~e(X, Y)",
    "forall X, Y: ~e(X, Y) | r(Y)",
    "forall X: r(X)",
    "forall X, Y: e(X, Y) | e(Y, X) | X = Y",
    "exists X, Y: e(X, Y) & ~e(Y, X)",
    "exists X: r(X) & e(X, X)",
    "forall X: r(X) | (exists Y: e(X, Y))",
];
pub const UNIVERSAL_POOL: usize = 4;

/// Fixture texts, either built in or read from a directory.
#[derive(Clone, Debug)]
pub struct Fixtures {
    pub friends: String,
    pub friends_formulas: String,
    pub path: String,
    pub path_formulas: String,
    pub pigeonhole: String,
    pub pigeonhole_constraints: String,
    pub triangle3: String,
    pub triangle3_constraints: String,
}

impl Fixtures {
    pub fn builtin() -> Self {
        Fixtures {
            friends: fixtures::FRIENDS.into(),
            friends_formulas: fixtures::FRIENDS_FORMULAS.into(),
            path: fixtures::PATH.into(),
            path_formulas: fixtures::PATH_FORMULAS.into(),
            pigeonhole: fixtures::PIGEONHOLE.into(),
            pigeonhole_constraints: fixtures::PIGEONHOLE_CONSTRAINTS.into(),
            triangle3: fixtures::TRIANGLE3.into(),
            triangle3_constraints: fixtures::TRIANGLE3_CONSTRAINTS.into(),
        }
    }

    /// Reads every file of [`fixtures::ALL`] from `dir`.
    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            std::fs::read_to_string(dir.join(name))
                .map_err(|e| Error::InvalidArgument(format!("{}: {e}", dir.join(name).display())))
        };
        Ok(Fixtures {
            friends: read("friends.facts")?,
            friends_formulas: read("friends.formulas")?,
            path: read("path.facts")?,
            path_formulas: read("path.formulas")?,
            pigeonhole: read("pigeonhole.facts")?,
            pigeonhole_constraints: read("pigeonhole.constraints")?,
            triangle3: read("triangle3.facts")?,
            triangle3_constraints: read("triangle3.constraints")?,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub seconds: f64,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub failed_suites: Vec<String>,
    pub suites: Vec<SuiteReport>,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn add(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.0.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    /// Records an error as a failed check.
    fn run(&mut self, name: &str, f: impl FnOnce(&mut Checks) -> Result<()>) {
        if let Err(e) = f(self) {
            self.add(name, false, e.to_string());
        }
    }
}

fn q(p: u64, r: u64) -> BigRational {
    ratio(p, r)
}

fn pool(kind: ModelKind) -> Vec<Formula> {
    let n = if kind == ModelKind::B { UNIVERSAL_POOL } else { POOL.len() };
    POOL[..n].iter().map(|s| parse_formula(s).expect("pool formula parses")).collect()
}

fn vocab_er() -> Vocabulary {
    Vocabulary::parse_spec("e/2,r/1").expect("vocabulary spec")
}

/// Runs one suite; unknown names are an error.
pub fn run_suite(name: &str, fx: &Fixtures) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut c = Checks::default();
    match name {
        "examples" => examples(&mut c, fx),
        "prop1" => prop1(&mut c, fx),
        "prop2" => prop2(&mut c),
        "prop3" => prop3(&mut c, 200),
        "prop4" => prop4(&mut c),
        "prop5" => prop5(&mut c),
        "lemma1" => lemma1(&mut c, fx),
        "lemma2" => lemma2(&mut c, fx),
        "lemma3" => lemma3(&mut c, fx),
        "duality" => duality(&mut c, fx),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown suite `{other}`; expected one of {}",
                SUITES.join(", ")
            )))
        }
    }
    Ok(SuiteReport {
        suite: name.to_string(),
        passed: !c.0.is_empty() && c.0.iter().all(|k| k.passed),
        seconds: start.elapsed().as_secs_f64(),
        checks: c.0,
    })
}

pub fn run_suites(names: &[&str], fx: &Fixtures) -> Result<VerifyReport> {
    let suites = names.iter().map(|n| run_suite(n, fx)).collect::<Result<Vec<_>>>()?;
    let failed_suites: Vec<String> = suites.iter().filter(|s| !s.passed).map(|s| s.suite.clone()).collect();
    Ok(VerifyReport {
        passed: failed_suites.is_empty(),
        failed_suites,
        suites,
    })
}

fn examples(c: &mut Checks, fx: &Fixtures) {
    c.run("worked example", |c| {
        let ex = GlobalExample::parse_facts(&fx.friends)?;
        let fs = parse_formulas(&fx.friends_formulas)?;
        if fs.len() != 2 {
            c.add("worked example", false, format!("expected 2 formulas, found {}", fs.len()));
            return Ok(());
        }
        let got = [
            probability(&fs[0], &ex, ModelKind::A { width: 2 })?,
            probability(&fs[1], &ex, ModelKind::A { width: 2 })?,
            probability(&fs[0], &ex, ModelKind::B)?,
            probability(&fs[1], &ex, ModelKind::B)?,
        ];
        let want = [q(1, 3), q(2, 3), q(1, 2), q(2, 3)];
        let shown: Vec<String> = got.iter().map(ToString::to_string).collect();
        c.add("worked example", got == want, shown.join(", "));
        Ok(())
    });
    c.run("path expansion", |c| {
        let path = GlobalExample::parse_facts(&fx.path)?;
        let fs = parse_formulas(&fx.path_formulas)?;
        let exp = expand(&path, 2)?;
        c.add("path expansion atoms", exp.atoms().len() == 8, format!("{} atoms", exp.atoms().len()));
        let kind = ModelKind::A { width: 2 };
        let (before, after) = (probability(&fs[0], &path, kind)?, probability(&fs[0], &exp, kind)?);
        c.add(
            "path empty-class shift",
            before == q(1, 3) && after == q(7, 15),
            format!("{before} -> {after}"),
        );
        let one_way = probability(&fs[1], &exp, kind)?;
        c.add("path one-way class", one_way == q(8, 15), one_way.to_string());
        Ok(())
    });
    c.run("pigeonhole", |c| {
        let base = GlobalExample::parse_facts(&fx.pigeonhole)?;
        let cs = parse_constraints(&fx.pigeonhole_constraints)?;
        let f: Vec<Formula> = cs.iter().map(|x| x.formula.clone()).collect();
        let theta: Vec<f64> = cs.iter().map(|x| x.theta.value()).collect();
        let kind = ModelKind::A { width: 2 };
        let vocab = base.vocabulary()?;
        let at2 = realizability_check(&theta, &f, &WorldSpace::enumerate(2, &vocab, &[])?, kind)?;
        let at3 = realizability_check(&theta, &f, &WorldSpace::enumerate(3, &vocab, &[])?, kind)?;
        c.add(
            "pigeonhole realizability",
            at2.realizable && !at3.realizable && (at3.distance - 1.0 / 3.0).abs() < 1e-12,
            format!("size 2 distance {:.3e}, size 3 distance {:.6}", at2.distance, at3.distance),
        );
        Ok(())
    });
    c.run("triangle3", |c| {
        let ex = GlobalExample::parse_facts(&fx.triangle3)?;
        let cs = parse_constraints(&fx.triangle3_constraints)?;
        let mut ok = true;
        for x in &cs {
            ok &= probability(&x.formula, &ex, ModelKind::A { width: 2 })? == x.theta.to_rational();
        }
        c.add("triangle3 statistics", ok && cs.len() == 3, format!("{} constraints", cs.len()));
        Ok(())
    });
}

fn prop1(c: &mut Checks, fx: &Fixtures) {
    c.run("subsample means", |c| {
        let mut worst = String::new();
        let mut ok = true;
        let ex = GlobalExample::parse_facts(&fx.friends)?;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut cases = vec![(ex, parse_formulas(&fx.friends_formulas)?)];
        for _ in 0..6 {
            cases.push((random_example(5, &vocab_er(), 0.35, &mut rng), pool(ModelKind::B)));
        }
        for (ex, fs) in &cases {
            for f in fs {
                for kind in [ModelKind::A { width: 1 }, ModelKind::A { width: 2 }, ModelKind::B] {
                    let need = if kind == ModelKind::B { f.universal_parts()?.0.len() } else { kind.width().unwrap() };
                    for m in need.max(1)..=ex.len() {
                        let mean = subsample_mean_exact(ex, f, kind, m)?;
                        let full = probability(f, ex, kind)?;
                        if mean != full {
                            ok = false;
                            worst = format!("{f} m={m}: {mean} vs {full}");
                        }
                    }
                }
            }
        }
        c.add("subsample means are exact", ok, worst);
        Ok(())
    });
}

fn prop2(c: &mut Checks) {
    c.run("shrink", |c| {
        let vocab = Vocabulary::parse_spec("e/2").expect("spec");
        let big = WorldSpace::enumerate(3, &vocab, &[])?;
        let small = WorldSpace::enumerate(2, &vocab, &[])?;
        let fa = pool(ModelKind::A { width: 2 })
            .into_iter()
            .filter(|f| f.predicates().iter().all(|(p, _)| p == "e"))
            .collect::<Vec<_>>();
        let fb: Vec<Formula> = fa.iter().filter(|f| f.universal_parts().is_ok()).cloned().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ok = true;
        for _ in 0..20 {
            let raw: Vec<u64> = (0..big.len()).map(|_| rng.gen_range(0..4u64)).collect();
            let total: u64 = raw.iter().sum::<u64>().max(1);
            let p = ExactDistribution {
                probs: raw.iter().map(|&x| ratio(x, total)).collect(),
            };
            let p = if p.total() == q(1, 1) { p } else { ExactDistribution::uniform(big.len()) };
            for (fs, kind) in [(&fa, ModelKind::A { width: 2 }), (&fb, ModelKind::B)] {
                let shrunk = shrink_distribution(&p, &big, &small, fs, kind)?;
                let before = p.marginals(&FeatureTable::new(fs, &big, kind)?);
                let after = shrunk.marginals(&FeatureTable::new(fs, &small, kind)?);
                ok &= before == after;
            }
        }
        c.add("shrink preserves marginals", ok, "20 random distributions, models A and B");
        Ok(())
    });
}

/// Random sweep of expansion distortion against the closed-form bound.
pub fn expansion_bound_sweep(cases: usize, seed: u64) -> Result<(usize, usize, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = vocab_er();
    let (mut violations, mut invalid_mixtures) = (0, 0);
    let mut detail = String::new();
    for _ in 0..cases {
        let n = rng.gen_range(1..=5usize);
        let base = random_example(n, &vocab, rng.gen_range(0.1..0.7), &mut rng);
        let level = rng.gen_range(1..=4usize);
        let kind = if rng.gen_bool(0.5) {
            ModelKind::A { width: rng.gen_range(1..=n.min(3)) }
        } else {
            ModelKind::B
        };
        let fs = pool(kind);
        let f = &fs[rng.gen_range(0..fs.len())];
        let k = match kind {
            ModelKind::A { width } => width,
            ModelKind::B => f.universal_parts()?.0.len(),
        };
        if k > n {
            continue;
        }
        let exp = expansion(&base, level)?.result;
        let before = probability(f, &base, kind)?;
        let after = probability(f, &exp, kind)?;
        let diff = to_f64(&(after - before)).abs();
        if diff > expansion_diff_bound(n, k) + 1e-15 {
            violations += 1;
            detail = format!("{f} on {base} at level {level}: {diff}");
        }
        if let ModelKind::A { width } = kind {
            if width <= 3 && !mixture_check(&base, width, level)?.valid {
                invalid_mixtures += 1;
            }
        }
    }
    Ok((violations, invalid_mixtures, detail))
}

fn prop3(c: &mut Checks, cases: usize) {
    c.run("expansion bound sweep", |c| {
        let (v, m, d) = expansion_bound_sweep(cases, 3)?;
        c.add("distortion within bound", v == 0, format!("{v} violations over {cases} cases {d}"));
        c.add("mixture residuals valid", m == 0, format!("{m} invalid"));
        Ok(())
    });
}

/// The `r/1` instances of the interiority probe test.
pub fn interiority_family() -> Vec<(Vec<Formula>, ModelKind)> {
    let p = |s: &str| parse_formula(s).expect("family formula parses");
    vec![
        (vec![p("forall X: r(X)")], ModelKind::A { width: 2 }),
        (vec![p("exists X: r(X)")], ModelKind::A { width: 2 }),
        (vec![p("forall X: r(X)")], ModelKind::A { width: 1 }),
        (vec![p("exists X: ~r(X)")], ModelKind::A { width: 1 }),
        (vec![p("forall X, Y: r(X) | r(Y)")], ModelKind::B),
        (vec![p(fixtures::PIGEONHOLE_FORMULA)], ModelKind::A { width: 2 }),
        (vec![p("forall X: r(X)"), p("exists X: r(X)")], ModelKind::A { width: 2 }),
        (vec![p("forall X: r(X)"), p("exists X, Y: X != Y & r(X) & ~r(Y)")], ModelKind::A { width: 2 }),
    ]
}

/// Outcome of the probe test: `(margin passes, implication failures, detail)`.
pub fn interiority_probe(eta: f64, grid: usize, probes: usize, seed: u64) -> Result<(usize, usize, String)> {
    let vocab = Vocabulary::parse_spec("r/1").expect("spec");
    let spaces: Vec<WorldSpace> = (3..=5).map(|n| WorldSpace::enumerate(n, &vocab, &[])).collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut passes, mut failures) = (0, 0);
    let mut detail = String::new();
    for (fs, kind) in interiority_family() {
        let k = match kind {
            ModelKind::A { width } => width,
            ModelKind::B => fs.iter().map(|f| f.universal_parts().map(|p| p.0.len())).try_fold(1, |a, v| v.map(|v| a.max(v)))?,
        };
        let polys = spaces.iter().map(|ws| polytope_vertices(&fs, ws, kind)).collect::<Result<Vec<_>>>()?;
        let margin = interiority_margin(3, k, fs.len(), eta);
        let points = grid_points(fs.len(), grid);
        for theta in &points {
            if !eta_interior(theta, margin, &polys[0], probes, &mut rng)?.passed() {
                continue;
            }
            passes += 1;
            for (size, poly) in [(4, &polys[1]), (5, &polys[2])] {
                if !eta_interior(theta, eta, poly, probes, &mut rng)?.passed() {
                    failures += 1;
                    detail = format!("{theta:?} fails at size {size}");
                }
            }
        }
    }
    Ok((passes, failures, detail))
}

fn grid_points(dim: usize, grid: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p: Vec<f64>| {
                (0..=grid).map(move |i| {
                    let mut p = p.clone();
                    p.push(i as f64 / grid as f64);
                    p
                })
            })
            .collect();
    }
    out
}

fn prop4(c: &mut Checks) {
    c.run("interiority probes", |c| {
        let (passes, failures, d) = interiority_probe(0.05, 20, 8, 4)?;
        c.add("margin test is non-vacuous", passes > 0, format!("{passes} targets pass the margin test"));
        c.add("margin implies eta-interior at sizes 4, 5", failures == 0, d);
        Ok(())
    });
}

/// Random ground truth for the error experiments.
pub fn experiment_truth(n: usize, seed: u64) -> GlobalExample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_example(n, &vocab_er(), 0.3, &mut rng)
}

fn prop5(c: &mut Checks) {
    c.run("error bound", |c| {
        let truth = experiment_truth(10, 21);
        for kind in [ModelKind::A { width: 1 }, ModelKind::A { width: 2 }, ModelKind::B] {
            let cfg = ExperimentConfig {
                ground_truth: truth.clone(),
                sample_size: 5,
                kind,
                target_n: 10,
                formulas: pool(ModelKind::B),
                trials: 60,
                seed: 8,
            };
            let rep = run_error_experiment(&cfg)?;
            let worst = rep
                .formulas
                .iter()
                .map(|f| f.mean_error / f.bound)
                .fold(0.0, f64::max);
            c.add(
                format!("mean error within bound, model {}{}", kind.label(), kind.width().map_or(String::new(), |w| format!(" k={w}"))),
                rep.passed,
                format!("worst mean/bound ratio {worst:.3}"),
            );
        }
        Ok(())
    });
}

fn lemma1(c: &mut Checks, fx: &Fixtures) {
    c.run("mixture decomposition", |c| {
        let path = GlobalExample::parse_facts(&fx.path)?;
        let m = mixture_check(&path, 2, 2)?;
        c.add("path mixture", m.valid && m.gamma == q(1, 5), format!("gamma {}", m.gamma));
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut ok = true;
        for _ in 0..30 {
            let n = rng.gen_range(2..=4usize);
            let base = random_example(n, &vocab_er(), 0.4, &mut rng);
            ok &= mixture_check(&base, rng.gen_range(1..=n.min(3)), rng.gen_range(1..=3))?.valid;
        }
        c.add("random mixtures", ok, "30 random structures");
        Ok(())
    });
}

fn lemma2(c: &mut Checks, fx: &Fixtures) {
    c.run("x and y processes", |c| {
        let ex = GlobalExample::parse_facts(&fx.friends)?;
        let fs = parse_formulas(&fx.friends_formulas)?;
        let mut ok = true;
        for f in &fs {
            ok &= x_process_distribution(&ex, f, ModelKind::A { width: 2 }, 1)?
                == y_process_distribution(&ex, f, ModelKind::A { width: 2 }, 2, 1)?;
            ok &= x_process_distribution(&ex, f, ModelKind::B, 1)? == y_process_distribution(&ex, f, ModelKind::B, 3, 1)?;
        }
        let truth = experiment_truth(4, 2);
        let r = parse_formula("forall X: r(X)").expect("formula");
        ok &= x_process_distribution(&truth, &r, ModelKind::A { width: 1 }, 3)?
            == y_process_distribution(&truth, &r, ModelKind::A { width: 1 }, 3, 3)?;
        c.add("X and Y processes agree", ok, "exhaustive, rational arithmetic");
        Ok(())
    });
}

/// Tail frequencies of the disjoint-sample estimator against Hoeffding's
/// bound plus three binomial standard errors.
pub fn disjoint_tail_frequencies(
    truth: &GlobalExample,
    alpha: &Formula,
    kind: ModelKind,
    m: usize,
    runs: usize,
    seed: u64,
) -> Result<Vec<(f64, f64, f64)>> {
    let exact = to_f64(&probability(alpha, truth, kind)?);
    let k = match kind {
        ModelKind::A { width } => width,
        ModelKind::B => alpha.universal_parts()?.0.len(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut devs = Vec::with_capacity(runs);
    for _ in 0..runs {
        let sample = crate::estimation::sample_subexample(truth, m, &mut rng)?;
        devs.push((disjoint_sample_estimator(&sample, alpha, kind, truth.len(), &mut rng)? - exact).abs());
    }
    Ok([0.1, 0.2]
        .iter()
        .map(|&eps| {
            let freq = devs.iter().filter(|&&d| d > eps).count() as f64 / runs as f64;
            let bound = hoeffding_tail(effective_sample_size(m, k), eps);
            let se = (bound.min(1.0) * (1.0 - bound.min(1.0)) / runs as f64).sqrt();
            (eps, freq, bound + 3.0 * se)
        })
        .collect())
}

fn lemma3(c: &mut Checks, fx: &Fixtures) {
    c.run("disjoint tails", |c| {
        let _ = fx;
        let truth = experiment_truth(12, 5);
        let fs = pool(ModelKind::B);
        for kind in [ModelKind::A { width: 1 }, ModelKind::A { width: 2 }, ModelKind::B] {
            for f in &fs[..2] {
                for (eps, freq, limit) in disjoint_tail_frequencies(&truth, f, kind, 6, 2000, 17)? {
                    c.add(
                        format!("tail {} eps={eps}", kind.label()),
                        freq <= limit,
                        format!("{f}: frequency {freq:.4} vs {limit:.4}"),
                    );
                }
            }
        }
        Ok(())
    });
}

fn duality(c: &mut Checks, fx: &Fixtures) {
    c.run("duality", |c| {
        let base = GlobalExample::parse_facts(&fx.pigeonhole)?;
        let vocab = base.vocabulary()?;
        let ws = WorldSpace::enumerate(3, &vocab, &[])?;
        let cs = parse_constraints("2/3 ; exists X, Y: X != Y & r(X) & ~r(Y)")?;
        let kind = ModelKind::A { width: 2 };
        let dual = solve_maxent(&cs, &ws, kind, &SolveOptions::default())?;
        let primal = primal_solve_oracle(&cs, &ws, kind, &PrimalOptions::default())?;
        let tv = primal.distribution.total_variation(dual.probabilities());
        c.add("dual and primal agree", tv < 1e-5, format!("total variation {tv:.3e}"));
        let gap = (primal.entropy + dual.dual_value()).abs();
        c.add("strong duality", gap < 1e-6, format!("entropy + dual value = {gap:.3e}"));
        Ok(())
    });
}
