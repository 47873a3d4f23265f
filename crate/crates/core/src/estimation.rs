//! Learning from a sampled sub-example: adjusted (expansion-based)
//! estimates, the error bound they satisfy, and the sampling processes
//! behind it.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::combin::{big_binomial, injective_tuples, ratio, subsets, to_f64};
use crate::data::{DenseExample, GlobalExample};
use crate::error::{Error, Result};
use crate::expansion::expand;
use crate::logic::{Formula, Vocabulary};
use crate::stats::{probability, sample_group, ModelKind, Statistic};

/// Fragment of `truth` on a uniformly random `m`-subset of its constants.
pub fn sample_subexample<R: Rng + ?Sized>(truth: &GlobalExample, m: usize, rng: &mut R) -> Result<GlobalExample> {
    if m > truth.len() {
        return Err(Error::SizeOutOfRange {
            size: m,
            min: 0,
            max: truth.len(),
        });
    }
    truth.fragment(&sample_group(rng, truth.len(), m, false))
}

/// `⌈n / |C_Υ|⌉`, at least 1.
pub fn adjustment_level(sample_size: usize, target_n: usize) -> Result<usize> {
    if sample_size == 0 {
        return Err(Error::InvalidArgument("sample has no constants".into()));
    }
    Ok(target_n.div_ceil(sample_size).max(1))
}

/// The statistic of `alpha` on the `⌈n/|C_Υ|⌉`-level expansion of `sample`.
pub fn adjusted_estimate(sample: &GlobalExample, alpha: &Formula, kind: ModelKind, target_n: usize) -> Result<BigRational> {
    let level = adjustment_level(sample.len(), target_n)?;
    if level == 1 {
        return probability(alpha, sample, kind);
    }
    probability(alpha, &expand(sample, level)?, kind)
}

/// `⌊m/k⌋`.
pub fn effective_sample_size(m: usize, k: usize) -> usize {
    assert!(k >= 1, "k must be positive");
    m / k
}

/// Bound on `E|Â_ℵ - B̂_Υ|`. The interior variant omits the expansion
/// distortion term.
pub fn expected_error_bound(m: usize, k: usize, interior: bool) -> f64 {
    assert!(1 <= k && k <= m, "need 1 <= k <= m");
    let sampling = ((1.0 + 2.0 * std::f64::consts::LN_2) / (4.0 * effective_sample_size(m, k) as f64)).sqrt();
    if interior {
        sampling
    } else {
        crate::expansion::expansion_diff_bound(m, k) + sampling
    }
}

/// Hoeffding tail `2·exp(-2·t·ε²)` for a mean of `t` indicators.
pub fn hoeffding_tail(t: usize, eps: f64) -> f64 {
    2.0 * (-2.0 * t as f64 * eps * eps).exp()
}

/// Number of constants per group: the width, or the universal prefix.
fn group_size(alpha: &Formula, kind: ModelKind) -> Result<usize> {
    match kind {
        ModelKind::A { width } => Ok(width),
        ModelKind::B => Ok(alpha.universal_parts()?.0.len()),
    }
}

struct Indicator {
    stat: Statistic,
    dense: DenseExample,
}

impl Indicator {
    fn new(alpha: &Formula, ex: &GlobalExample, kind: ModelKind) -> Result<Self> {
        let mut vocab: Vocabulary = ex.vocabulary()?;
        vocab.absorb_formula(alpha)?;
        Ok(Indicator {
            stat: Statistic::new(alpha, &vocab, kind, ex.len())?,
            dense: ex.dense(&vocab)?,
        })
    }

    fn eval(&self, group: &[usize]) -> bool {
        self.stat.indicator(&self.dense, group)
    }
}

/// The disjoint-sample estimator on `sample`: draw `⌊|C_Υ|/k⌋` groups of
/// size `k` independently from `0..universe`, map their union injectively
/// and uniformly into the sample's constants, and average the indicators.
/// Groups are subsets (Model A) or ordered tuples (Model B).
pub fn disjoint_sample_estimator<R: Rng + ?Sized>(
    sample: &GlobalExample,
    alpha: &Formula,
    kind: ModelKind,
    universe: usize,
    rng: &mut R,
) -> Result<f64> {
    let k = group_size(alpha, kind)?;
    let m = sample.len();
    if k == 0 || k > m || m > universe {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= k <= |sample| <= universe, got k={k}, |sample|={m}, universe={universe}"
        )));
    }
    let ind = Indicator::new(alpha, sample, kind)?;
    let t = effective_sample_size(m, k);
    let ordered = kind == ModelKind::B;
    let groups: Vec<Vec<usize>> = (0..t).map(|_| sample_group(rng, universe, k, ordered)).collect();
    let mut union: Vec<usize> = groups.iter().flatten().copied().collect();
    union.sort_unstable();
    union.dedup();
    let mut targets: Vec<usize> = (0..m).collect();
    let (image, _) = targets.partial_shuffle(rng, union.len());
    let image = image.to_vec();
    let map = |i: usize| image[union.binary_search(&i).expect("index in union")];
    let hits = groups
        .iter()
        .filter(|g| {
            let mapped: Vec<usize> = g.iter().map(|&i| map(i)).collect();
            ind.eval(&mapped)
        })
        .count();
    Ok(hits as f64 / t as f64)
}

/// Exact law of the indicator vector of `t` groups drawn independently and
/// uniformly from the constants of `truth`.
pub fn x_process_distribution(
    truth: &GlobalExample,
    alpha: &Formula,
    kind: ModelKind,
    t: usize,
) -> Result<BTreeMap<Vec<bool>, BigRational>> {
    let ind = Indicator::new(alpha, truth, kind)?;
    let groups = all_groups(truth.len(), group_size(alpha, kind)?, kind);
    let share = ratio(1, groups.len() as u64);
    let mut out = BTreeMap::new();
    for choice in product(groups.len(), t) {
        let v: Vec<bool> = choice.iter().map(|&g| ind.eval(&groups[g])).collect();
        let mut p = BigRational::one();
        for _ in 0..t {
            p *= &share;
        }
        *out.entry(v).or_insert_with(BigRational::zero) += p;
    }
    Ok(out)
}

/// Exact law of the same vector when a size-`m` sample is drawn first and
/// the groups are index sets mapped injectively into it.
pub fn y_process_distribution(
    truth: &GlobalExample,
    alpha: &Formula,
    kind: ModelKind,
    m: usize,
    t: usize,
) -> Result<BTreeMap<Vec<bool>, BigRational>> {
    let n = truth.len();
    let k = group_size(alpha, kind)?;
    if m > n || t * k > m {
        return Err(Error::InvalidArgument(format!("need t·k <= m <= n, got t={t}, k={k}, m={m}, n={n}")));
    }
    let ind = Indicator::new(alpha, truth, kind)?;
    let groups = all_groups(n, k, kind);
    let samples = subsets(n, m);
    let sample_share = BigRational::new(1.into(), big_binomial(n, m));
    let group_share = ratio(1, groups.len() as u64);
    let mut out = BTreeMap::new();
    for choice in product(groups.len(), t) {
        let mut union: Vec<usize> = choice.iter().flat_map(|&g| groups[g].iter().copied()).collect();
        union.sort_unstable();
        union.dedup();
        let maps = injective_tuples(m, union.len());
        let mut base = sample_share.clone() / BigRational::from_integer((maps.len() as u64).into());
        for _ in 0..t {
            base *= &group_share;
        }
        for s in &samples {
            for map in &maps {
                let v: Vec<bool> = choice
                    .iter()
                    .map(|&g| {
                        let mapped: Vec<usize> = groups[g]
                            .iter()
                            .map(|i| s[map[union.binary_search(i).expect("index in union")]])
                            .collect();
                        ind.eval(&mapped)
                    })
                    .collect();
                *out.entry(v).or_insert_with(BigRational::zero) += &base;
            }
        }
    }
    Ok(out)
}

fn all_groups(n: usize, k: usize, kind: ModelKind) -> Vec<Vec<usize>> {
    match kind {
        ModelKind::A { .. } => subsets(n, k),
        ModelKind::B => injective_tuples(n, k),
    }
}

/// All `t`-tuples over `0..base`.
fn product(base: usize, t: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = base.pow(t as u32);
    (0..total).map(move |mut code| {
        let mut v = vec![0; t];
        for slot in v.iter_mut() {
            *slot = code % base;
            code /= base;
        }
        v
    })
}

/// Average statistic over all size-`m` fragments; equals the statistic on
/// `truth` itself.
pub fn subsample_mean_exact(truth: &GlobalExample, alpha: &Formula, kind: ModelKind, m: usize) -> Result<BigRational> {
    let subs = subsets(truth.len(), m);
    let mut acc = BigRational::zero();
    for s in &subs {
        acc += probability(alpha, &truth.fragment(s)?, kind)?;
    }
    Ok(acc / BigRational::from_integer(big_binomial(truth.len(), m)))
}

/// A seeded estimation experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub ground_truth: GlobalExample,
    pub sample_size: usize,
    pub kind: ModelKind,
    pub target_n: usize,
    pub formulas: Vec<Formula>,
    pub trials: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.ground_truth.len();
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.formulas.is_empty() {
            return Err(Error::InvalidArgument("no formulas given".into()));
        }
        if self.sample_size > n {
            return Err(Error::SizeOutOfRange {
                size: self.sample_size,
                min: 1,
                max: n,
            });
        }
        for f in &self.formulas {
            let k = group_size(f, self.kind)?;
            if k == 0 || k > self.sample_size {
                return Err(Error::WidthTooLarge {
                    k,
                    n: self.sample_size,
                });
            }
        }
        Ok(())
    }

    /// The generator for trial `trial`: one ChaCha stream per trial.
    pub fn trial_rng(&self, trial: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial as u64);
        rng
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FormulaError {
    pub formula: String,
    /// Group size: the width, or the universal prefix length.
    pub k: usize,
    /// `Â_ℵ` as `p/q`.
    pub exact: String,
    pub exact_decimal: f64,
    pub mean_error: f64,
    pub max_error: f64,
    pub bound: f64,
    pub interior_bound: f64,
    pub effective_sample_size: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorReport {
    pub model: &'static str,
    pub width: Option<usize>,
    pub ground_truth_size: usize,
    pub sample_size: usize,
    pub target_n: usize,
    pub adjustment_level: usize,
    pub trials: usize,
    pub seed: u64,
    pub formulas: Vec<FormulaError>,
    /// `per_trial[t][i]` is `|Â_ℵ - B̂_Υ|` for formula `i` in trial `t`.
    pub per_trial: Vec<Vec<f64>>,
    pub passed: bool,
}

pub fn run_error_experiment(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    cfg.validate()?;
    let truth = &cfg.ground_truth;
    let exact: Vec<BigRational> = cfg
        .formulas
        .iter()
        .map(|f| probability(f, truth, cfg.kind))
        .collect::<Result<_>>()?;
    let per_trial: Vec<Vec<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = cfg.trial_rng(trial);
            let sample = sample_subexample(truth, cfg.sample_size, &mut rng)?;
            cfg.formulas
                .iter()
                .zip(&exact)
                .map(|(f, a)| {
                    let b = adjusted_estimate(&sample, f, cfg.kind, cfg.target_n)?;
                    Ok(to_f64(&(a - b)).abs())
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let m = cfg.sample_size;
    let mut formulas = Vec::with_capacity(cfg.formulas.len());
    for (i, (f, a)) in cfg.formulas.iter().zip(&exact).enumerate() {
        let k = group_size(f, cfg.kind)?;
        let errors = per_trial.iter().map(|row| row[i]);
        let mean_error = errors.clone().sum::<f64>() / cfg.trials as f64;
        let bound = expected_error_bound(m, k, false);
        formulas.push(FormulaError {
            formula: f.to_string(),
            k,
            exact: a.to_string(),
            exact_decimal: to_f64(a),
            mean_error,
            max_error: errors.fold(0.0, f64::max),
            bound,
            interior_bound: expected_error_bound(m, k, true),
            effective_sample_size: effective_sample_size(m, k),
            passed: mean_error <= bound,
        });
    }
    Ok(ErrorReport {
        model: cfg.kind.label(),
        width: cfg.kind.width(),
        ground_truth_size: truth.len(),
        sample_size: m,
        target_n: cfg.target_n,
        adjustment_level: adjustment_level(m, cfg.target_n)?,
        trials: cfg.trials,
        seed: cfg.seed,
        passed: formulas.iter().all(|f| f.passed),
        formulas,
        per_trial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::logic::parse_formula;

    fn friends() -> GlobalExample {
        GlobalExample::parse_facts(fixtures::FRIENDS).unwrap()
    }

    #[test]
    fn closed_forms() {
        assert_eq!(effective_sample_size(10, 2), 5);
        assert_eq!(effective_sample_size(10, 3), 3);
        assert_eq!(effective_sample_size(4, 4), 1);
        let c = 1.0 + 2.0 * std::f64::consts::LN_2;
        assert!((expected_error_bound(7, 1, false) - (c / 28.0).sqrt()).abs() < 1e-15);
        assert!((expected_error_bound(10, 2, false) - (0.1 + (c / 20.0).sqrt())).abs() < 1e-12);
        assert!((expected_error_bound(10, 2, true) - (c / 20.0).sqrt()).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for m in (3..100_000).step_by(997) {
            let b = expected_error_bound(m, 3, false);
            assert!(b < prev);
            prev = b;
        }
        assert!(prev < 0.02);
    }

    #[test]
    fn sampling_full_and_too_large() {
        let ex = friends();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_subexample(&ex, 3, &mut rng).unwrap(), ex);
        assert!(sample_subexample(&ex, 4, &mut rng).is_err());
    }

    #[test]
    fn singleton_fragments_are_uniform() {
        let ex = friends();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = BTreeMap::new();
        let draws = 10_000;
        for _ in 0..draws {
            *counts.entry(sample_subexample(&ex, 1, &mut rng).unwrap().constants()[0].clone()).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 3);
        let expected = draws as f64 / 3.0;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 99.9% quantile of chi-square with two degrees of freedom
        assert!(chi2 < 13.82, "chi2 = {chi2}");
    }

    #[test]
    fn adjusted_estimates() {
        let path = GlobalExample::parse_facts(fixtures::PATH).unwrap();
        let empty = parse_formula("forall X, Y: ~e(X, Y)").unwrap();
        let kind = ModelKind::A { width: 2 };
        assert_eq!(adjusted_estimate(&path, &empty, kind, 3).unwrap(), ratio(1, 3));
        assert_eq!(adjusted_estimate(&path, &empty, kind, 6).unwrap(), ratio(7, 15));
        assert_eq!(adjusted_estimate(&path, &empty, kind, 5).unwrap(), ratio(7, 15));
        assert_eq!(adjustment_level(3, 7).unwrap(), 3);
    }

    #[test]
    fn full_sample_has_no_error() {
        let ex = friends();
        let cfg = ExperimentConfig {
            ground_truth: ex.clone(),
            sample_size: 3,
            kind: ModelKind::A { width: 2 },
            target_n: 3,
            formulas: vec![parse_formula("exists X, Y: fr(X, Y)").unwrap()],
            trials: 5,
            seed: 0,
        };
        let rep = run_error_experiment(&cfg).unwrap();
        assert!(rep.per_trial.iter().flatten().all(|&e| e == 0.0));
        assert!(rep.passed);
    }

    #[test]
    fn x_and_y_processes_agree_exactly() {
        let ex = friends();
        let a = parse_formula("exists X, Y: fr(X, Y) & sm(X)").unwrap();
        let kind = ModelKind::A { width: 1 };
        let x = x_process_distribution(&ex, &parse_formula("forall X: sm(X)").unwrap(), kind, 2).unwrap();
        let y = y_process_distribution(&ex, &parse_formula("forall X: sm(X)").unwrap(), kind, 2, 2).unwrap();
        assert_eq!(x, y);
        let kind = ModelKind::A { width: 2 };
        assert_eq!(
            x_process_distribution(&ex, &a, kind, 1).unwrap(),
            y_process_distribution(&ex, &a, kind, 3, 1).unwrap()
        );
        let b = parse_formula("forall X, Y: fr(X, Y) | sm(Y)").unwrap();
        assert_eq!(
            x_process_distribution(&ex, &b, ModelKind::B, 1).unwrap(),
            y_process_distribution(&ex, &b, ModelKind::B, 2, 1).unwrap()
        );
    }

    #[test]
    fn estimator_is_unbiased() {
        let ex = friends();
        let a = parse_formula("exists X, Y: fr(X, Y) & sm(X)").unwrap();
        let kind = ModelKind::A { width: 2 };
        let exact = to_f64(&probability(&a, &ex, kind).unwrap());
        assert_eq!(subsample_mean_exact(&ex, &a, kind, 2).unwrap(), probability(&a, &ex, kind).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let runs = 100_000;
        let mean: f64 = (0..runs)
            .map(|_| disjoint_sample_estimator(&ex, &a, kind, 3, &mut rng).unwrap())
            .sum::<f64>()
            / runs as f64;
        let se = (exact * (1.0 - exact) / runs as f64).sqrt();
        assert!((mean - exact).abs() < 4.0 * se, "{mean} vs {exact}");
        // k = |C|: one group, the whole sample
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let whole = parse_formula("exists X, Y, Z: fr(X, Y) & fr(Y, Z) & X != Z").unwrap();
        let v = disjoint_sample_estimator(&ex, &whole, ModelKind::A { width: 3 }, 3, &mut rng).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn experiments_are_deterministic() {
        let cfg = ExperimentConfig {
            ground_truth: friends(),
            sample_size: 2,
            kind: ModelKind::B,
            target_n: 3,
            formulas: vec![parse_formula("forall X, Y: ~fr(X, Y) | sm(X)").unwrap()],
            trials: 20,
            seed: 7,
        };
        let a = serde_json::to_string(&run_error_experiment(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_error_experiment(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        let bad = ExperimentConfig { trials: 0, ..cfg };
        assert!(run_error_experiment(&bad).is_err());
    }
}
