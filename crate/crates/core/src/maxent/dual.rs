use serde::Serialize;

use super::{FeatureTable, WorldSpace};
use crate::combin::{ratio, to_f64};
use crate::data::GlobalExample;
use crate::error::{Error, Result};
use crate::logic::Formula;
use crate::polytope::{diagnose, Diagnosis, MarginalPolytope};
use crate::stats::{MarginalConstraint, ModelKind};

/// Stopping rule and safeguards for [`solve_maxent`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    /// Convergence when the gradient's sup-norm drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Divergence is declared once any `|w_i|` exceeds this.
    pub weight_cap: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-9,
            max_iter: 100_000,
            weight_cap: 50.0,
        }
    }
}

const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-40;
const MAX_STEP: f64 = 1e12;

struct Eval {
    log_z: f64,
    probs: Vec<f64>,
    /// `E_p[count_i]`.
    mean: Vec<f64>,
}

fn evaluate(w: &[f64], table: &FeatureTable) -> Eval {
    let scores: Vec<f64> = (0..table.len())
        .map(|u| table.row(u).iter().zip(w).map(|(&c, wi)| c as f64 * wi).sum())
        .collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= z);
    let mut mean = vec![0.0; table.dim()];
    for (u, &p) in probs.iter().enumerate() {
        for (m, &c) in mean.iter_mut().zip(table.row(u)) {
            *m += p * c as f64;
        }
    }
    Eval {
        log_z: max + z.ln(),
        probs,
        mean,
    }
}

fn targets(theta: &[f64], table: &FeatureTable) -> Result<Vec<f64>> {
    if table.is_empty() {
        return Err(Error::EmptyWorldSpace);
    }
    if theta.len() != table.dim() {
        return Err(Error::InvalidArgument(format!(
            "{} targets for {} formulas",
            theta.len(),
            table.dim()
        )));
    }
    if let Some(t) = theta.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::InvalidArgument(format!("target {t} is outside [0, 1]")));
    }
    Ok(theta.iter().zip(table.normalizers()).map(|(t, &n)| t * n as f64).collect())
}

/// Value and gradient of `sum_i w_i θ_i N_i - log Σ_Υ exp(sum_i w_i s_i(Υ))`,
/// a concave function whose maximum is minus the max-entropy value.
pub fn dual_objective(w: &[f64], theta: &[f64], table: &FeatureTable) -> Result<(f64, Vec<f64>)> {
    let t = targets(theta, table)?;
    if w.len() != t.len() {
        return Err(Error::InvalidArgument(format!("{} weights for {} formulas", w.len(), t.len())));
    }
    let e = evaluate(w, table);
    let value = w.iter().zip(&t).map(|(a, b)| a * b).sum::<f64>() - e.log_z;
    let grad = t.iter().zip(&e.mean).map(|(a, b)| a - b).collect();
    Ok((value, grad))
}

/// `f(w + t g) - f(w)` evaluated relative to the current distribution,
/// which keeps it accurate when the change is far below `|f|`.
fn increment(e: &Eval, table: &FeatureTable, g: &[f64], gg: f64, t: f64) -> f64 {
    let centered: f64 = e.mean.iter().zip(g).map(|(m, gi)| m * gi).sum();
    let mut acc = 0.0;
    for (u, &p) in e.probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let du: f64 = table.row(u).iter().zip(g).map(|(&c, gi)| c as f64 * gi).sum::<f64>() - centered;
        acc += p * (t * du).exp_m1();
    }
    t * gg - acc.ln_1p()
}

#[derive(Clone, Debug, Serialize)]
pub struct MaxEntModel {
    pub kind: &'static str,
    pub width: Option<usize>,
    pub formulas: Vec<String>,
    pub theta: Vec<f64>,
    pub weights: Vec<f64>,
    pub log_partition: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub realizable: bool,
    pub achieved_marginals: Vec<f64>,
    #[serde(skip)]
    pub diagnosis: Diagnosis,
    #[serde(skip)]
    model_kind: ModelKind,
    #[serde(skip)]
    normalizers: Vec<u64>,
    #[serde(skip)]
    probabilities: Vec<f64>,
    #[serde(skip)]
    signature: String,
}

impl MaxEntModel {
    pub fn model_kind(&self) -> ModelKind {
        self.model_kind
    }

    /// Probabilities of the worlds, aligned with the world space.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability_of_index(&self, ws: &WorldSpace, index: usize) -> Result<f64> {
        if ws.signature() != self.signature || ws.len() != self.probabilities.len() {
            return Err(Error::ForeignWorld("model was fitted on a different world space".into()));
        }
        self.probabilities
            .get(index)
            .copied()
            .ok_or_else(|| Error::ForeignWorld(format!("index {index} is out of range")))
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self.probabilities.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }

    /// Dual objective at the fitted weights.
    pub fn dual_value(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.theta)
            .zip(&self.normalizers)
            .map(|((w, t), &n)| w * t * n as f64)
            .sum::<f64>()
            - self.log_partition
    }
}

/// Probability of `world` under a fitted model.
pub fn model_probability(model: &MaxEntModel, ws: &WorldSpace, world: &GlobalExample) -> Result<f64> {
    model.probability_of_index(ws, ws.world_of(world)?)
}

fn not_realizable(theta: &[f64], table: &FeatureTable, ws: &WorldSpace, reason: String) -> Error {
    let poly = MarginalPolytope::from_table(table, ws.size());
    match diagnose(theta, &poly, reason) {
        Ok(d) => Error::NotRealizable(Box::new(d)),
        Err(e) => e,
    }
}

/// Maximizes the dual by gradient ascent with Armijo backtracking. The first
/// trial step is 1; later trials start at twice the last accepted step.
pub fn solve_with_table(theta: &[f64], table: &FeatureTable, ws: &WorldSpace, opts: &SolveOptions) -> Result<MaxEntModel> {
    let t = targets(theta, table)?;
    let h = table.dim();
    let mut w = vec![0.0; h];
    let mut step = 1.0f64;
    let mut iterations = 0;
    let (e, grad) = loop {
        let e = evaluate(&w, table);
        let g: Vec<f64> = t.iter().zip(&e.mean).map(|(a, b)| a - b).collect();
        let gn = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if gn < opts.tol {
            break (e, g);
        }
        if iterations >= opts.max_iter {
            return Err(not_realizable(
                theta,
                table,
                ws,
                format!("no convergence within {} iterations (gradient {gn:.3e})", opts.max_iter),
            ));
        }
        let gg: f64 = g.iter().map(|x| x * x).sum();
        let mut s = step;
        loop {
            let d = increment(&e, table, &g, gg, s);
            if d.is_finite() && d >= ARMIJO_C * s * gg {
                break;
            }
            s *= 0.5;
            if s < MIN_STEP {
                return Err(not_realizable(
                    theta,
                    table,
                    ws,
                    format!("line search stalled (gradient {gn:.3e})"),
                ));
            }
        }
        w.iter_mut().zip(&g).for_each(|(wi, gi)| *wi += s * gi);
        step = (2.0 * s).min(MAX_STEP);
        iterations += 1;
        if let Some(big) = w.iter().find(|x| x.abs() > opts.weight_cap) {
            return Err(not_realizable(
                theta,
                table,
                ws,
                format!("weight {big:.3} exceeded the cap {}", opts.weight_cap),
            ));
        }
    };
    let grad_norm = grad.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let poly = MarginalPolytope::from_table(table, ws.size());
    let diagnosis = diagnose(theta, &poly, "converged")?;
    Ok(MaxEntModel {
        kind: table.kind().label(),
        width: table.kind().width(),
        formulas: table.formulas().iter().map(ToString::to_string).collect(),
        theta: theta.to_vec(),
        weights: w,
        log_partition: e.log_z,
        iterations,
        grad_norm,
        realizable: diagnosis.realizable,
        achieved_marginals: table.marginals(&e.probs),
        diagnosis,
        model_kind: table.kind(),
        normalizers: table.normalizers().to_vec(),
        probabilities: e.probs,
        signature: ws.signature(),
    })
}

pub fn solve_maxent(
    constraints: &[MarginalConstraint],
    ws: &WorldSpace,
    kind: ModelKind,
    opts: &SolveOptions,
) -> Result<MaxEntModel> {
    let formulas: Vec<Formula> = constraints.iter().map(|c| c.formula.clone()).collect();
    let theta: Vec<f64> = constraints.iter().map(|c| c.theta.value()).collect();
    let table = FeatureTable::new(&formulas, ws, kind)?;
    solve_with_table(&theta, &table, ws, opts)
}

/// Fitting targets read from a training world coincides with maximum
/// likelihood for that world.
#[derive(Clone, Debug, Serialize)]
pub struct DualityReport {
    /// Exact targets `s_i(Υ̂) / N_i`.
    pub theta: Vec<String>,
    pub weights: Vec<f64>,
    pub dual_value: f64,
    pub log_likelihood: f64,
    /// Sup-norm of the log-likelihood gradient at the fitted weights.
    pub gradient_norm: f64,
    pub iterations: usize,
    pub passed: bool,
}

/// Gradient threshold for [`DualityReport::passed`].
pub const DUALITY_GRAD_TOL: f64 = 1e-6;

pub fn log_likelihood_duality_check(
    example: &GlobalExample,
    formulas: &[Formula],
    kind: ModelKind,
    ws: &WorldSpace,
    opts: &SolveOptions,
) -> Result<DualityReport> {
    if example.len() != ws.size() {
        return Err(Error::InvalidArgument(format!(
            "training example has {} constants but the world space has {}; \
             re-derive the targets on an expansion of matching size",
            example.len(),
            ws.size()
        )));
    }
    let index = ws.world_of(example)?;
    let table = FeatureTable::new(formulas, ws, kind)?;
    let counts = table.row(index).to_vec();
    let exact: Vec<_> = counts.iter().zip(table.normalizers()).map(|(&c, &n)| ratio(c, n)).collect();
    let theta: Vec<f64> = exact.iter().map(to_f64).collect();
    let model = solve_with_table(&theta, &table, ws, opts)?;
    let log_likelihood = model
        .weights
        .iter()
        .zip(&counts)
        .map(|(w, &c)| w * c as f64)
        .sum::<f64>()
        - model.log_partition;
    let mean = table.marginals(model.probabilities());
    let gradient_norm = counts
        .iter()
        .zip(&mean)
        .zip(table.normalizers())
        .map(|((&c, m), &n)| (c as f64 - m * n as f64).abs())
        .fold(0.0, f64::max);
    Ok(DualityReport {
        theta: exact.iter().map(ToString::to_string).collect(),
        dual_value: model.dual_value(),
        weights: model.weights,
        log_likelihood,
        gradient_norm,
        iterations: model.iterations,
        passed: gradient_norm < DUALITY_GRAD_TOL,
    })
}
