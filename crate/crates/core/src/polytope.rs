//! Marginal polytopes: the convex hull of the normalized statistic vectors of
//! all admissible worlds, hull distances, and probe-based `η`-interior tests.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::logic::Formula;
use crate::maxent::{FeatureTable, WorldSpace};
use crate::stats::ModelKind;

/// Points closer than this to the hull are members.
pub const MEMBERSHIP_TOL: f64 = 1e-8;
/// Frank-Wolfe duality gap at which the nearest-point search stops.
pub const GAP_TOL: f64 = 1e-12;
/// Radius of the probe ball that classifies members as boundary points.
pub const BOUNDARY_PROBE: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct MarginalPolytope {
    pub kind: ModelKind,
    pub size: usize,
    pub formulas: Vec<String>,
    /// Distinct feature vectors; interior points may be included.
    pub vertices: Vec<Vec<f64>>,
    #[serde(skip)]
    pub exact_vertices: Vec<Vec<BigRational>>,
    /// Index in the world space of one world attaining each vertex.
    pub generators: Vec<usize>,
}

impl MarginalPolytope {
    pub fn from_table(table: &FeatureTable, size: usize) -> Self {
        let mut seen: BTreeMap<&[u64], usize> = BTreeMap::new();
        let mut generators = Vec::new();
        for w in 0..table.len() {
            seen.entry(table.row(w)).or_insert_with(|| {
                generators.push(w);
                w
            });
        }
        MarginalPolytope {
            kind: table.kind(),
            size,
            formulas: table.formulas().iter().map(ToString::to_string).collect(),
            vertices: generators.iter().map(|&w| table.feature_vector(w)).collect(),
            exact_vertices: generators.iter().map(|&w| table.exact_feature_vector(w)).collect(),
            generators,
        }
    }

    pub fn dim(&self) -> usize {
        self.formulas.len()
    }

    /// Affine rank of the vertex set.
    pub fn rank(&self) -> usize {
        affine_rank(&self.vertices, self.dim())
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.rank() == self.dim()
    }

    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        Ok(hull_distance(point, self)? < MEMBERSHIP_TOL)
    }
}

pub fn polytope_vertices(formulas: &[Formula], ws: &WorldSpace, kind: ModelKind) -> Result<MarginalPolytope> {
    let table = FeatureTable::new(formulas, ws, kind)?;
    Ok(MarginalPolytope::from_table(&table, ws.size()))
}

fn affine_rank(points: &[Vec<f64>], dim: usize) -> usize {
    if points.len() < 2 || dim == 0 {
        return 0;
    }
    let mut centroid = vec![0.0; dim];
    for p in points {
        for (c, x) in centroid.iter_mut().zip(p) {
            *c += x / points.len() as f64;
        }
    }
    let m = DMatrix::from_fn(points.len(), dim, |i, j| points[i][j] - centroid[j]);
    m.svd(false, false).singular_values.iter().filter(|&&s| s > 1e-9).count()
}

/// Result of a nearest-point computation.
#[derive(Clone, Debug)]
pub struct HullProjection {
    pub distance: f64,
    pub nearest: Vec<f64>,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimum-norm point of the affine hull of `pts`, as affine weights:
/// least squares for `q_0 + sum_i a_i (q_i - q_0)`.
fn affine_min_norm(pts: &[&[f64]]) -> Vec<f64> {
    let s = pts.len();
    if s == 1 {
        return vec![1.0];
    }
    let dim = pts[0].len();
    let y = DMatrix::from_fn(dim, s - 1, |r, c| pts[c + 1][r] - pts[0][r]);
    let rhs = DVector::from_fn(dim, |r, _| -pts[0][r]);
    let alpha = y
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .unwrap_or_else(|_| DVector::zeros(s - 1));
    let mut mu = Vec::with_capacity(s);
    mu.push(1.0 - alpha.sum());
    mu.extend(alpha.iter());
    mu
}

/// Euclidean projection of `point` onto the convex hull of `vertices` by
/// Wolfe's minimum-norm-point method: Frank-Wolfe vertex selection combined
/// with exact affine minimization over the current corral.
pub fn hull_projection(point: &[f64], vertices: &[Vec<f64>]) -> Result<HullProjection> {
    let dim = point.len();
    if vertices.is_empty() {
        return Err(Error::InvalidArgument("polytope has no vertices".into()));
    }
    if let Some(v) = vertices.iter().find(|v| v.len() != dim) {
        return Err(Error::InvalidArgument(format!(
            "point has dimension {dim}, polytope has dimension {}",
            v.len()
        )));
    }
    let q: Vec<Vec<f64>> = vertices.iter().map(|v| v.iter().zip(point).map(|(a, b)| a - b).collect()).collect();
    let start = (0..q.len())
        .min_by(|&a, &b| dot(&q[a], &q[a]).total_cmp(&dot(&q[b], &q[b])))
        .unwrap();
    let mut corral = vec![start];
    let mut lambda = vec![1.0];
    let mut x = q[start].clone();
    let mut iterations = 0;
    let max_major = 50 * (q.len() + dim + 1);
    while iterations < max_major {
        iterations += 1;
        let xx = dot(&x, &x);
        let j = (0..q.len()).min_by(|&a, &b| dot(&x, &q[a]).total_cmp(&dot(&x, &q[b]))).unwrap();
        if xx - dot(&x, &q[j]) <= GAP_TOL || corral.contains(&j) {
            break;
        }
        corral.push(j);
        lambda.push(0.0);
        loop {
            let pts: Vec<&[f64]> = corral.iter().map(|&i| q[i].as_slice()).collect();
            let mu = affine_min_norm(&pts);
            if mu.iter().all(|&m| m > 1e-15) {
                lambda = mu;
                break;
            }
            let mut theta = 1.0f64;
            for (l, m) in lambda.iter().zip(&mu) {
                if *m <= 1e-15 && l - m > 0.0 {
                    theta = theta.min(l / (l - m));
                }
            }
            for (l, m) in lambda.iter_mut().zip(&mu) {
                *l += theta * (m - *l);
            }
            let mut keep = Vec::new();
            let mut kept = Vec::new();
            for (i, &l) in lambda.iter().enumerate() {
                if l > 1e-15 {
                    keep.push(corral[i]);
                    kept.push(l);
                }
            }
            if keep.is_empty() {
                keep.push(corral[corral.len() - 1]);
                kept.push(1.0);
            }
            let total: f64 = kept.iter().sum();
            corral = keep;
            lambda = kept.into_iter().map(|l| l / total).collect();
            if corral.len() == 1 {
                break;
            }
        }
        x = vec![0.0; dim];
        for (&i, &l) in corral.iter().zip(&lambda) {
            for (xk, qk) in x.iter_mut().zip(&q[i]) {
                *xk += l * qk;
            }
        }
    }
    Ok(HullProjection {
        distance: dot(&x, &x).sqrt(),
        nearest: x.iter().zip(point).map(|(a, b)| a + b).collect(),
        iterations,
    })
}

pub fn hull_distance(point: &[f64], polytope: &MarginalPolytope) -> Result<f64> {
    Ok(hull_projection(point, &polytope.vertices)?.distance)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum EtaVerdict {
    /// Every probe stayed inside. Necessary for ball containment, not
    /// sufficient.
    InsideBallProbesPass { probes: usize },
    /// `point + eta * direction` lies outside the hull.
    Rejected { direction: Vec<f64>, distance: f64 },
    /// The vertex set spans fewer than `dim` affine dimensions; no ball fits.
    Degenerate { rank: usize, dim: usize },
}

impl EtaVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, EtaVerdict::InsideBallProbesPass { .. })
    }
}

fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let norm = dot(&v, &v).sqrt();
        if (1e-3..=1.0).contains(&norm) {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Probes `point ± eta·e_i` for every coordinate and `probes` random unit
/// directions. A rejection certifies that the `eta`-ball is not contained.
pub fn eta_interior<R: Rng + ?Sized>(
    point: &[f64],
    eta: f64,
    polytope: &MarginalPolytope,
    probes: usize,
    rng: &mut R,
) -> Result<EtaVerdict> {
    if eta <= 0.0 {
        return Err(Error::InvalidArgument("eta must be positive".into()));
    }
    let dim = polytope.dim();
    let rank = polytope.rank();
    if rank < dim || dim == 0 {
        return Ok(EtaVerdict::Degenerate { rank, dim });
    }
    let mut directions = Vec::with_capacity(2 * dim + probes);
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let mut d = vec![0.0; dim];
            d[i] = sign;
            directions.push(d);
        }
    }
    directions.extend((0..probes).map(|_| random_unit(dim, rng)));
    let total = directions.len();
    for d in directions {
        let probe: Vec<f64> = point.iter().zip(&d).map(|(p, x)| p + eta * x).collect();
        let distance = hull_distance(&probe, polytope)?;
        if distance >= MEMBERSHIP_TOL {
            return Ok(EtaVerdict::Rejected { direction: d, distance });
        }
    }
    Ok(EtaVerdict::InsideBallProbesPass { probes: total })
}

/// `eta + sqrt(l)·(1 - ((m-k+1)/m)^(k-1))` for `l` formulas.
pub fn interiority_margin(m: usize, k: usize, l: usize, eta: f64) -> f64 {
    eta + (l as f64).sqrt() * crate::expansion::expansion_diff_bound(m, k)
}

/// Outcome of a realizability test for a target vector.
#[derive(Clone, Debug, Serialize)]
pub struct Diagnosis {
    pub theta: Vec<f64>,
    pub distance: f64,
    pub realizable: bool,
    /// Realizable, but not strictly interior (or the polytope is degenerate).
    pub boundary: bool,
    pub nearest: Vec<f64>,
    pub rank: usize,
    pub dim: usize,
    pub reason: String,
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let theta: Vec<String> = self.theta.iter().map(|x| format!("{x:.6}")).collect();
        write!(
            f,
            "{}; theta=[{}] has hull distance {:.3e}",
            self.reason,
            theta.join(", "),
            self.distance
        )?;
        if self.realizable {
            write!(f, " (inside the polytope")?;
            if self.boundary {
                write!(f, ", on its boundary")?;
            }
            write!(f, ")")?;
        } else {
            write!(f, " (outside the polytope)")?;
        }
        Ok(())
    }
}

/// Hull distance plus a boundary classification by a tiny probe ball.
pub fn diagnose(theta: &[f64], polytope: &MarginalPolytope, reason: impl Into<String>) -> Result<Diagnosis> {
    let proj = hull_projection(theta, &polytope.vertices)?;
    let realizable = proj.distance < MEMBERSHIP_TOL;
    let rank = polytope.rank();
    let dim = polytope.dim();
    let boundary = realizable
        && dim > 0
        && match eta_interior(theta, BOUNDARY_PROBE, polytope, 0, &mut rand::rngs::mock::StepRng::new(0, 0))? {
            EtaVerdict::InsideBallProbesPass { .. } => false,
            EtaVerdict::Rejected { .. } | EtaVerdict::Degenerate { .. } => true,
        };
    Ok(Diagnosis {
        theta: theta.to_vec(),
        distance: proj.distance,
        realizable,
        boundary,
        nearest: proj.nearest,
        rank,
        dim,
        reason: reason.into(),
    })
}

pub fn realizability_check(theta: &[f64], formulas: &[Formula], ws: &WorldSpace, kind: ModelKind) -> Result<Diagnosis> {
    let poly = polytope_vertices(formulas, ws, kind)?;
    diagnose(theta, &poly, "realizability check")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::fixtures::PIGEONHOLE_FORMULA;
    use crate::logic::{parse_formula, Vocabulary};

    fn pigeonhole(n: usize) -> MarginalPolytope {
        let vocab = Vocabulary::parse_spec("r/1").unwrap();
        let ws = WorldSpace::enumerate(n, &vocab, &[]).unwrap();
        polytope_vertices(&[parse_formula(PIGEONHOLE_FORMULA).unwrap()], &ws, ModelKind::A { width: 2 }).unwrap()
    }

    #[test]
    fn pigeonhole_vertices() {
        let mut v3: Vec<f64> = pigeonhole(3).vertices.into_iter().map(|v| v[0]).collect();
        v3.sort_by(f64::total_cmp);
        assert_eq!(v3, [0.0, 2.0 / 3.0]);
        let mut v2: Vec<f64> = pigeonhole(2).vertices.into_iter().map(|v| v[0]).collect();
        v2.sort_by(f64::total_cmp);
        assert_eq!(v2, [0.0, 1.0]);
    }

    #[test]
    fn empty_formula_set_is_a_point() {
        let vocab = Vocabulary::parse_spec("r/1").unwrap();
        let ws = WorldSpace::enumerate(2, &vocab, &[]).unwrap();
        let poly = polytope_vertices(&[], &ws, ModelKind::A { width: 1 }).unwrap();
        assert_eq!(poly.vertices, vec![Vec::<f64>::new()]);
        assert_eq!(hull_distance(&[], &poly).unwrap(), 0.0);
    }

    #[test]
    fn one_dimensional_distances() {
        let poly = pigeonhole(3);
        assert_eq!(hull_distance(&[2.0 / 3.0], &poly).unwrap(), 0.0);
        assert!((hull_distance(&[1.0], &poly).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(hull_distance(&[1.0 / 3.0], &poly).unwrap() < 1e-15);
        assert!(hull_distance(&[1.0, 2.0], &poly).is_err());
    }

    #[test]
    fn square_and_triangle() {
        let square = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![0.5, 0.5]];
        let d = hull_projection(&[2.0, 0.5], &square).unwrap();
        assert!((d.distance - 1.0).abs() < 1e-12);
        assert!((d.nearest[0] - 1.0).abs() < 1e-12 && (d.nearest[1] - 0.5).abs() < 1e-12);
        let d = hull_projection(&[2.0, 2.0], &square).unwrap();
        assert!((d.distance - 2f64.sqrt()).abs() < 1e-12);
        let tri = vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let d = hull_projection(&[0.5, 0.5, 1.0], &tri).unwrap();
        assert!((d.distance - 1.0).abs() < 1e-12);
        let d = hull_projection(&[1.0, 1.0, 0.0], &tri).unwrap();
        assert!((d.distance - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn eta_probes() {
        let poly = pigeonhole(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(eta_interior(&[1.0 / 3.0], 0.1, &poly, 4, &mut rng).unwrap().passed());
        assert!(!eta_interior(&[2.0 / 3.0], 1e-3, &poly, 4, &mut rng).unwrap().passed());
        assert!(!eta_interior(&[1.0 / 3.0], 0.4, &poly, 4, &mut rng).unwrap().passed());
        assert!(eta_interior(&[0.3], 0.0, &poly, 0, &mut rng).is_err());
    }

    #[test]
    fn degenerate_polytopes_skip_probes() {
        let vocab = Vocabulary::parse_spec("r/1").unwrap();
        let ws = WorldSpace::enumerate(3, &vocab, &[]).unwrap();
        let f = parse_formula("forall X: r(X)").unwrap();
        // the same formula twice spans a segment in the plane
        let poly = polytope_vertices(&[f.clone(), f], &ws, ModelKind::A { width: 1 }).unwrap();
        assert_eq!((poly.rank(), poly.dim()), (1, 2));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            eta_interior(&[0.5, 0.5], 0.1, &poly, 3, &mut rng).unwrap(),
            EtaVerdict::Degenerate { rank: 1, dim: 2 }
        );
    }

    #[test]
    fn margins() {
        assert_eq!(interiority_margin(9, 1, 3, 0.2), 0.2);
        assert!((interiority_margin(3, 2, 1, 0.1) - (0.1 + 1.0 / 3.0)).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for m in 3..200 {
            let v = interiority_margin(m, 3, 2, 0.05);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn pigeonhole_realizability() {
        let vocab = Vocabulary::parse_spec("r/1").unwrap();
        let f = [parse_formula(PIGEONHOLE_FORMULA).unwrap()];
        let kind = ModelKind::A { width: 2 };
        let at2 = realizability_check(&[1.0], &f, &WorldSpace::enumerate(2, &vocab, &[]).unwrap(), kind).unwrap();
        assert!(at2.realizable && at2.distance == 0.0 && at2.boundary);
        let at3 = realizability_check(&[1.0], &f, &WorldSpace::enumerate(3, &vocab, &[]).unwrap(), kind).unwrap();
        assert!(!at3.realizable);
        assert!((at3.distance - 1.0 / 3.0).abs() < 1e-15);
        let mid = realizability_check(&[1.0 / 3.0], &f, &WorldSpace::enumerate(3, &vocab, &[]).unwrap(), kind).unwrap();
        assert!(mid.realizable && !mid.boundary);
    }

    fn random_cloud(seed: u64, count: usize, dim: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect()).collect()
    }

    /// Brute-force oracle in the plane: distance to the hull is the minimum
    /// over all vertex pairs of the distance to their segment, or zero if the
    /// point is a convex combination of some triangle.
    fn planar_oracle(p: &[f64], v: &[Vec<f64>]) -> f64 {
        let seg = |a: &[f64], b: &[f64]| {
            let ab = [b[0] - a[0], b[1] - a[1]];
            let ap = [p[0] - a[0], p[1] - a[1]];
            let len = ab[0] * ab[0] + ab[1] * ab[1];
            let t = if len == 0.0 { 0.0 } else { ((ap[0] * ab[0] + ap[1] * ab[1]) / len).clamp(0.0, 1.0) };
            ((ap[0] - t * ab[0]).powi(2) + (ap[1] - t * ab[1]).powi(2)).sqrt()
        };
        let cross = |o: &[f64], a: &[f64], b: &[f64]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                for k in j + 1..v.len() {
                    let (d1, d2, d3) = (cross(&v[i], &v[j], p), cross(&v[j], &v[k], p), cross(&v[k], &v[i], p));
                    let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
                    let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
                    if !(neg && pos) {
                        return 0.0;
                    }
                }
            }
        }
        let mut best = f64::INFINITY;
        for i in 0..v.len() {
            for j in i..v.len() {
                best = best.min(seg(&v[i], &v[j]));
            }
        }
        best
    }

    proptest! {
        #[test]
        fn matches_planar_oracle(seed in any::<u64>(), px in -1.0f64..2.0, py in -1.0f64..2.0) {
            let v = random_cloud(seed, 6, 2);
            let d = hull_projection(&[px, py], &v).unwrap().distance;
            prop_assert!((d - planar_oracle(&[px, py], &v)).abs() < 1e-9);
        }

        #[test]
        fn convex_combinations_are_members(seed in any::<u64>(), dim in 1usize..5) {
            let v = random_cloud(seed, 8, dim);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            let w: Vec<f64> = (0..v.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
            let total: f64 = w.iter().sum();
            let p: Vec<f64> = (0..dim).map(|j| v.iter().zip(&w).map(|(x, wi)| x[j] * wi / total).sum()).collect();
            prop_assert!(hull_projection(&p, &v).unwrap().distance < MEMBERSHIP_TOL);
            for x in &v {
                prop_assert!(hull_projection(x, &v).unwrap().distance < MEMBERSHIP_TOL);
            }
        }

        #[test]
        fn vertex_order_is_irrelevant(seed in any::<u64>(), dim in 1usize..4) {
            let mut v = random_cloud(seed, 7, dim);
            let p: Vec<f64> = (0..dim).map(|j| 1.5 - 0.4 * j as f64).collect();
            let d1 = hull_projection(&p, &v).unwrap().distance;
            v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let d2 = hull_projection(&p, &v).unwrap().distance;
            prop_assert!((d1 - d2).abs() < 1e-10);
        }
    }
}
