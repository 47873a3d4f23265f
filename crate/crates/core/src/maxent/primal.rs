use super::WorldSpace;
use crate::combin::to_f64;
use crate::error::{Error, Result};
use crate::stats::{probability, MarginalConstraint, ModelKind};

/// Largest world space the primal oracle accepts.
pub const PRIMAL_WORLD_CAP: usize = 1 << 16;

/// A probability vector aligned with a world space.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplicitDistribution {
    pub probs: Vec<f64>,
}

impl ExplicitDistribution {
    pub fn uniform(len: usize) -> Self {
        ExplicitDistribution {
            probs: vec![1.0 / len as f64; len],
        }
    }

    pub fn entropy(&self) -> f64 {
        -self.probs.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }

    pub fn total_variation(&self, other: &[f64]) -> f64 {
        0.5 * self.probs.iter().zip(other).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrimalOptions {
    /// Convergence when every constraint residual is below this.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Residual above which non-convergence is reported as infeasibility.
    pub feasibility_tol: f64,
}

impl Default for PrimalOptions {
    fn default() -> Self {
        PrimalOptions {
            tol: 1e-12,
            max_sweeps: 200_000,
            feasibility_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PrimalSolution {
    pub distribution: ExplicitDistribution,
    pub entropy: f64,
    pub sweeps: usize,
    pub residual: f64,
}

const EDGE: f64 = 1e-12;

/// Multiplicative KL projection of `p` onto `{q : E_q[a] = b}`:
/// `q ∝ p·exp(t·a)` with `t` found by safeguarded Newton iteration.
/// Returns the residual of an impossible projection.
fn project(p: &mut [f64], a: &[f64], b: f64) -> std::result::Result<(), f64> {
    let support = || p.iter().zip(a).filter(|(&pj, _)| pj > 0.0).map(|(_, &aj)| aj);
    let lo = support().fold(f64::INFINITY, f64::min);
    let hi = support().fold(f64::NEG_INFINITY, f64::max);
    if b > hi + EDGE {
        return Err(b - hi);
    }
    if b < lo - EDGE {
        return Err(lo - b);
    }
    if (b - hi).abs() <= EDGE || (b - lo).abs() <= EDGE {
        // every feasible q is supported on the extreme face
        let edge = if (b - hi).abs() <= EDGE { hi } else { lo };
        p.iter_mut().zip(a).for_each(|(pj, &aj)| {
            if (aj - edge).abs() > EDGE {
                *pj = 0.0;
            }
        });
        normalize(p);
        return Ok(());
    }
    let tilt = |t: f64| -> (f64, f64) {
        let shift = if t >= 0.0 { t * hi } else { t * lo };
        let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (&pj, &aj) in p.iter().zip(a) {
            if pj > 0.0 {
                let q = pj * (t * aj - shift).exp();
                z += q;
                m1 += q * aj;
                m2 += q * aj * aj;
            }
        }
        let mean = m1 / z;
        (mean, m2 / z - mean * mean)
    };
    let (mut t_lo, mut t_hi) = (-1.0f64, 1.0f64);
    while tilt(t_lo).0 > b {
        t_lo *= 2.0;
    }
    while tilt(t_hi).0 < b {
        t_hi *= 2.0;
    }
    let mut t = 0.0f64.clamp(t_lo, t_hi);
    for _ in 0..200 {
        let (mean, var) = tilt(t);
        let r = mean - b;
        if r.abs() < 1e-15 {
            break;
        }
        if r > 0.0 {
            t_hi = t;
        } else {
            t_lo = t;
        }
        let newton = t - r / var;
        t = if var > 0.0 && newton > t_lo && newton < t_hi {
            newton
        } else {
            0.5 * (t_lo + t_hi)
        };
    }
    let shift = if t >= 0.0 { t * hi } else { t * lo };
    p.iter_mut().zip(a).for_each(|(pj, &aj)| {
        if *pj > 0.0 {
            *pj *= (t * aj - shift).exp();
        }
    });
    normalize(p);
    Ok(())
}

fn normalize(p: &mut [f64]) {
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= z);
}

/// Entropy maximization directly over the probability simplex by cyclic
/// KL projections onto each constraint, starting from the uniform
/// distribution. Statistics are computed per world from its example, not
/// from a [`super::FeatureTable`].
pub fn primal_solve_oracle(
    constraints: &[MarginalConstraint],
    ws: &WorldSpace,
    kind: ModelKind,
    opts: &PrimalOptions,
) -> Result<PrimalSolution> {
    if ws.is_empty() {
        return Err(Error::EmptyWorldSpace);
    }
    if ws.len() > PRIMAL_WORLD_CAP {
        return Err(Error::CapExceeded {
            atoms: ws.layout().total(),
            cap: PRIMAL_WORLD_CAP.trailing_zeros() as usize,
        });
    }
    let examples: Vec<_> = (0..ws.len()).map(|i| ws.world_example(i)).collect();
    let rows: Vec<Vec<f64>> = constraints
        .iter()
        .map(|c| {
            examples
                .iter()
                .map(|ex| probability(&c.formula, ex, kind).map(|r| to_f64(&r)))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let targets: Vec<f64> = constraints.iter().map(|c| c.theta.value()).collect();
    let mut p = vec![1.0 / ws.len() as f64; ws.len()];
    let residual = |p: &[f64]| {
        rows.iter()
            .zip(&targets)
            .map(|(a, b)| (a.iter().zip(p).map(|(x, y)| x * y).sum::<f64>() - b).abs())
            .fold(0.0, f64::max)
    };
    let mut sweeps = 0;
    let mut res = residual(&p);
    while res >= opts.tol && sweeps < opts.max_sweeps {
        for (a, &b) in rows.iter().zip(&targets) {
            project(&mut p, a, b).map_err(|residual| Error::Infeasible { residual })?;
        }
        sweeps += 1;
        res = residual(&p);
    }
    if res > opts.feasibility_tol {
        return Err(Error::Infeasible { residual: res });
    }
    let distribution = ExplicitDistribution { probs: p };
    Ok(PrimalSolution {
        entropy: distribution.entropy(),
        distribution,
        sweeps,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::PIGEONHOLE_FORMULA;
    use crate::logic::{parse_formula, Vocabulary};

    fn r3() -> WorldSpace {
        WorldSpace::enumerate(3, &Vocabulary::parse_spec("r/1").unwrap(), &[]).unwrap()
    }

    fn constraint(f: &str, t: &str) -> MarginalConstraint {
        MarginalConstraint::new(parse_formula(f).unwrap(), t.parse().unwrap()).unwrap()
    }

    #[test]
    fn boundary_face_is_exact() {
        let sol = primal_solve_oracle(
            &[constraint(PIGEONHOLE_FORMULA, "2/3")],
            &r3(),
            ModelKind::A { width: 2 },
            &PrimalOptions::default(),
        )
        .unwrap();
        assert!((sol.entropy - 6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn infeasible_targets() {
        let kind = ModelKind::A { width: 2 };
        match primal_solve_oracle(&[constraint(PIGEONHOLE_FORMULA, "1")], &r3(), kind, &PrimalOptions::default()) {
            Err(Error::Infeasible { residual }) => assert!((residual - 1.0 / 3.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        // each target alone is attainable, jointly they are not
        let pair = [constraint("forall X: r(X)", "1"), constraint("exists X: ~r(X)", "1/2")];
        assert!(matches!(
            primal_solve_oracle(&pair, &r3(), kind, &PrimalOptions::default()),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn interior_targets_are_met() {
        let cs = [constraint("forall X: r(X)", "0.3"), constraint("exists X: r(X)", "0.6")];
        let sol = primal_solve_oracle(&cs, &r3(), ModelKind::A { width: 2 }, &PrimalOptions::default()).unwrap();
        assert!(sol.residual < 1e-12);
        assert!(sol.entropy < 8f64.ln());
    }
}
