//! Model A and Model B statistics, the Model A marginal distribution over
//! local examples, and constraint files.
//!
//! Model A quantifies over the fragment's constants, *including* assignments
//! that collapse variables; Model B counts only injective groundings of a
//! universally quantified formula. On the friends/smokers fixture the two
//! give `1/3` and `1/2` for the same formula.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::combin::{self, injective_tuples, ratio, subsets};
use crate::data::{canonicalize, CanonicalForm, GlobalExample, LocalExample};
use crate::error::{Error, Result};
use crate::logic::{evaluate, parse_formula, Compiled, Formula, Interpretation, Vocabulary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "model")]
pub enum ModelKind {
    /// Fragment sampling with width `width`.
    A { width: usize },
    /// Injective substitutions; the width is the formula's variable count.
    B,
}

impl ModelKind {
    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::A { .. } => "A",
            ModelKind::B => "B",
        }
    }

    pub fn width(&self) -> Option<usize> {
        match *self {
            ModelKind::A { width } => Some(width),
            ModelKind::B => None,
        }
    }
}

/// A target probability: exact when written `p/q`, a float otherwise.
#[derive(Clone, Debug, PartialEq)]
pub enum Theta {
    Exact(BigRational),
    Real(f64),
}

impl Theta {
    pub fn value(&self) -> f64 {
        match self {
            Theta::Exact(r) => combin::to_f64(r),
            Theta::Real(x) => *x,
        }
    }

    pub fn to_rational(&self) -> BigRational {
        match self {
            Theta::Exact(r) => r.clone(),
            Theta::Real(x) => combin::from_f64(*x),
        }
    }

    fn check(self) -> Result<Self> {
        let ok = match &self {
            Theta::Exact(r) => !r.is_negative() && *r <= BigRational::one(),
            Theta::Real(x) => (0.0..=1.0).contains(x),
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidArgument(format!("theta {self} is outside [0, 1]")))
        }
    }
}

impl From<BigRational> for Theta {
    fn from(r: BigRational) -> Self {
        Theta::Exact(r)
    }
}

impl FromStr for Theta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("cannot read `{s}` as a probability"));
        let theta = if let Some((p, q)) = s.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Theta::Exact(BigRational::new(p, q))
        } else {
            let x: f64 = s.parse().map_err(|_| bad())?;
            Theta::Real(x)
        };
        theta.check()
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theta::Exact(r) => write!(f, "{r}"),
            Theta::Real(x) => write!(f, "{x}"),
        }
    }
}

/// A closed, constant-free formula with its target probability.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalConstraint {
    pub formula: Formula,
    pub theta: Theta,
}

impl MarginalConstraint {
    pub fn new(formula: Formula, theta: Theta) -> Result<Self> {
        check_constraint_formula(&formula)?;
        Ok(MarginalConstraint {
            formula,
            theta: theta.check()?,
        })
    }
}

/// Closed, constant-free, and no variable bound twice on a path.
pub fn check_constraint_formula(f: &Formula) -> Result<()> {
    f.check_binding()?;
    let free = f.vars().free;
    if !free.is_empty() {
        return Err(Error::NotClosed(free.into_iter().collect::<Vec<_>>().join(", ")));
    }
    if let Some(c) = f.constants().into_iter().next() {
        return Err(Error::NotConstantFree(c));
    }
    Ok(())
}

/// Lines without content or starting with `#` are skipped; returns the
/// 1-based line number with the text.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let t = line.trim();
        (!t.is_empty() && !t.starts_with('#')).then_some((i + 1, line))
    })
}

/// One formula per line; blank lines and `#` lines are ignored.
pub fn parse_formulas(text: &str) -> Result<Vec<Formula>> {
    content_lines(text)
        .map(|(line, s)| {
            let f = parse_formula(s).map_err(|e| e.at_line(line, 0))?;
            check_constraint_formula(&f)?;
            Ok(f)
        })
        .collect()
}

#[derive(Deserialize)]
struct RawConstraint {
    formula: String,
    theta: RawTheta,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawTheta {
    Number(f64),
    Text(String),
}

/// Reads `theta ; formula` lines, or a JSON array of `{formula, theta}`
/// objects when the first non-blank character is `[`.
pub fn parse_constraints(text: &str) -> Result<Vec<MarginalConstraint>> {
    if text.trim_start().starts_with('[') {
        let raw: Vec<RawConstraint> = serde_json::from_str(text)?;
        return raw
            .into_iter()
            .map(|r| {
                let theta = match r.theta {
                    RawTheta::Number(x) => Theta::Real(x),
                    RawTheta::Text(s) => s.parse()?,
                };
                MarginalConstraint::new(parse_formula(&r.formula)?, theta)
            })
            .collect();
    }
    content_lines(text)
        .map(|(line, s)| {
            let (theta, formula) = s
                .split_once(';')
                .ok_or_else(|| Error::syntax(line, 1, "expected `theta ; formula`"))?;
            let theta: Theta = theta
                .parse()
                .map_err(|e: Error| Error::syntax(line, 1, e.to_string()))?;
            let f = parse_formula(formula).map_err(|e| e.at_line(line, theta_len(s)))?;
            MarginalConstraint::new(f, theta)
        })
        .collect()
}

fn theta_len(line: &str) -> usize {
    line.find(';').map_or(0, |i| i + 1)
}

/// A formula compiled for repeated counting over structures with `n`
/// constants. Each *group* is a `k`-subset (Model A) or an injective tuple
/// for the universal prefix (Model B).
#[derive(Clone, Debug)]
pub struct Statistic {
    kind: ModelKind,
    compiled: Compiled,
    groups: Vec<Vec<usize>>,
}

impl Statistic {
    pub fn new(f: &Formula, vocab: &Vocabulary, kind: ModelKind, n: usize) -> Result<Self> {
        check_constraint_formula(f)?;
        match kind {
            ModelKind::A { width } => {
                if width == 0 {
                    return Err(Error::InvalidArgument("width must be at least 1".into()));
                }
                if width > n {
                    return Err(Error::WidthTooLarge { k: width, n });
                }
                Ok(Statistic {
                    kind,
                    compiled: Compiled::closed(f, vocab)?,
                    groups: subsets(n, width),
                })
            }
            ModelKind::B => {
                let (vars, body) = f.universal_parts()?;
                if vars.len() > n {
                    return Err(Error::TooManyVariables { vars: vars.len(), n });
                }
                Ok(Statistic {
                    kind,
                    compiled: Compiled::new(body, vocab, &vars, &|_| None)?,
                    groups: injective_tuples(n, vars.len()),
                })
            }
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// `C(n, k)` for Model A, `n!/(n-v)!` for Model B.
    pub fn normalizer(&self) -> u64 {
        self.groups.len() as u64
    }

    /// Size of one group: the width, or the number of universal variables.
    pub fn group_size(&self) -> usize {
        self.groups.first().map_or(0, Vec::len)
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Truth of the formula on one group: in the fragment on the subset
    /// (Model A), or of the body under the grounding (Model B).
    #[inline]
    pub fn indicator<I: Interpretation + ?Sized>(&self, interp: &I, group: &[usize]) -> bool {
        match self.kind {
            ModelKind::A { .. } => self.compiled.eval(interp, group, &[]),
            ModelKind::B => self.compiled.eval(interp, &[], group),
        }
    }

    /// `#_k(alpha, world)` for Model A, `n(alpha, world)` for Model B.
    pub fn count<I: Interpretation + ?Sized>(&self, interp: &I) -> u64 {
        self.groups.iter().filter(|g| self.indicator(interp, g)).count() as u64
    }

    pub fn probability<I: Interpretation + ?Sized>(&self, interp: &I) -> BigRational {
        ratio(self.count(interp), self.normalizer())
    }
}

fn prepared(f: &Formula, ex: &GlobalExample, kind: ModelKind) -> Result<(Statistic, crate::data::DenseExample)> {
    let mut vocab = ex.vocabulary()?;
    vocab.absorb_formula(f)?;
    let stat = Statistic::new(f, &vocab, kind, ex.len())?;
    Ok((stat, ex.dense(&vocab)?))
}

/// Number of `k`-subsets whose fragment satisfies `alpha`.
pub fn count_fragments_satisfying(alpha: &Formula, ex: &GlobalExample, k: usize) -> Result<u64> {
    let (stat, dense) = prepared(alpha, ex, ModelKind::A { width: k })?;
    Ok(stat.count(&dense))
}

/// `P_{ex,k}(alpha)`.
pub fn prob_model_a(alpha: &Formula, ex: &GlobalExample, k: usize) -> Result<BigRational> {
    let (stat, dense) = prepared(alpha, ex, ModelKind::A { width: k })?;
    Ok(stat.probability(&dense))
}

/// Number of injective groundings of the universal prefix whose body holds.
pub fn count_true_groundings(alpha: &Formula, ex: &GlobalExample) -> Result<u64> {
    let (stat, dense) = prepared(alpha, ex, ModelKind::B)?;
    Ok(stat.count(&dense))
}

/// `Q_ex(alpha)`.
pub fn prob_model_b(alpha: &Formula, ex: &GlobalExample) -> Result<BigRational> {
    let (stat, dense) = prepared(alpha, ex, ModelKind::B)?;
    Ok(stat.probability(&dense))
}

pub fn probability(alpha: &Formula, ex: &GlobalExample, kind: ModelKind) -> Result<BigRational> {
    let (stat, dense) = prepared(alpha, ex, kind)?;
    Ok(stat.probability(&dense))
}

/// Exact Model A distribution over width-`k` local examples, aggregated by
/// isomorphism class. Every member of a class has probability
/// `class mass / class size`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalDistribution {
    pub width: usize,
    pub classes: BTreeMap<CanonicalForm, BigRational>,
}

impl MarginalDistribution {
    pub fn total(&self) -> BigRational {
        self.classes.values().sum()
    }

    pub fn prob_class(&self, form: &CanonicalForm) -> BigRational {
        self.classes.get(form).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn prob_local(&self, omega: &LocalExample) -> Result<BigRational> {
        if omega.width != self.width {
            return Err(Error::InvalidArgument(format!(
                "local example has width {}, distribution has width {}",
                omega.width, self.width
            )));
        }
        let form = canonicalize(omega)?;
        let size = form.class_size();
        Ok(self.prob_class(&form) / BigRational::from_integer(size.into()))
    }

    /// Mass of the local examples satisfying the closed formula.
    pub fn prob_formula(&self, alpha: &Formula) -> Result<BigRational> {
        let mut total = BigRational::zero();
        for (form, p) in &self.classes {
            if evaluate(alpha, &form.to_local().to_global())? {
                total += p;
            }
        }
        Ok(total)
    }
}

pub fn marginal_distribution_a(ex: &GlobalExample, k: usize) -> Result<MarginalDistribution> {
    if k > ex.len() {
        return Err(Error::WidthTooLarge { k, n: ex.len() });
    }
    let groups = subsets(ex.len(), k);
    let mut counts: BTreeMap<CanonicalForm, u64> = BTreeMap::new();
    for s in &groups {
        let form = canonicalize(&ex.fragment(s)?.as_local())?;
        *counts.entry(form).or_default() += 1;
    }
    let total = groups.len() as u64;
    Ok(MarginalDistribution {
        width: k,
        classes: counts.into_iter().map(|(f, c)| (f, ratio(c, total))).collect(),
    })
}

/// A uniformly random group: a `size`-subset of `0..n` in ascending order
/// when `ordered` is false, a uniformly random injective tuple otherwise.
pub fn sample_group<R: Rng + ?Sized>(rng: &mut R, n: usize, size: usize, ordered: bool) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    let (chosen, _) = all.partial_shuffle(rng, size);
    let mut chosen = chosen.to_vec();
    if !ordered {
        chosen.sort_unstable();
    }
    chosen
}

/// Mean indicator over `samples` uniformly drawn subsets (Model A) or
/// injective groundings (Model B).
pub fn monte_carlo_estimate<R: Rng + ?Sized>(
    alpha: &Formula,
    ex: &GlobalExample,
    kind: ModelKind,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let (stat, dense) = prepared(alpha, ex, kind)?;
    let size = stat.group_size();
    let ordered = kind == ModelKind::B;
    let hits = (0..samples)
        .filter(|_| stat.indicator(&dense, &sample_group(rng, ex.len(), size, ordered)))
        .count();
    Ok(hits as f64 / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::data::{random_example, GroundAtom};
    use crate::fixtures;

    fn q(p: i64, r: i64) -> BigRational {
        BigRational::new(p.into(), r.into())
    }

    fn friends() -> GlobalExample {
        GlobalExample::parse_facts(fixtures::FRIENDS).unwrap()
    }

    fn alpha_beta() -> (Formula, Formula) {
        let fs = parse_formulas(fixtures::FRIENDS_FORMULAS).unwrap();
        (fs[0].clone(), fs[1].clone())
    }

    #[test]
    fn smokers_counts() {
        let ex = friends();
        let (a, b) = alpha_beta();
        assert_eq!(count_fragments_satisfying(&a, &ex, 2).unwrap(), 1);
        assert_eq!(count_fragments_satisfying(&b, &ex, 2).unwrap(), 2);
        assert_eq!(prob_model_a(&a, &ex, 2).unwrap(), q(1, 3));
        assert_eq!(prob_model_a(&b, &ex, 2).unwrap(), q(2, 3));
        assert_eq!(count_true_groundings(&a, &ex).unwrap(), 3);
        assert_eq!(count_true_groundings(&b, &ex).unwrap(), 4);
        assert_eq!(prob_model_b(&a, &ex).unwrap(), q(1, 2));
        assert_eq!(prob_model_b(&b, &ex).unwrap(), q(2, 3));
        let contradiction = parse_formula("forall X: sm(X) & ~sm(X)").unwrap();
        assert_eq!(count_true_groundings(&contradiction, &ex).unwrap(), 0);
        let taut = parse_formula("forall X: sm(X) | ~sm(X)").unwrap();
        for k in 1..=3 {
            assert_eq!(count_fragments_satisfying(&taut, &ex, k).unwrap(), [3, 3, 1][k - 1]);
        }
    }

    #[test]
    fn full_width_is_classical_truth() {
        let ex = friends();
        let (a, b) = alpha_beta();
        for f in [a, b] {
            let p = prob_model_a(&f, &ex, 3).unwrap();
            let truth = evaluate(&f, &ex).unwrap();
            assert_eq!(p, if truth { q(1, 1) } else { q(0, 1) });
        }
    }

    #[test]
    fn preconditions() {
        let ex = friends();
        let (a, _) = alpha_beta();
        assert!(matches!(prob_model_a(&a, &ex, 4), Err(Error::WidthTooLarge { k: 4, n: 3 })));
        let three = parse_formula("forall X, Y, Z, W: ~fr(X, Y) | sm(Z) | sm(W)").unwrap();
        assert!(matches!(prob_model_b(&three, &ex), Err(Error::TooManyVariables { vars: 4, n: 3 })));
        let ex_f = parse_formula("exists X: sm(X)").unwrap();
        assert!(matches!(prob_model_b(&ex_f, &ex), Err(Error::NotUniversal)));
        assert!(prob_model_a(&ex_f, &ex, 1).is_ok());
        let with_const = parse_formula("forall X: fr(X, bob)").unwrap();
        assert!(matches!(prob_model_a(&with_const, &ex, 2), Err(Error::NotConstantFree(_))));
    }

    #[test]
    fn path_marginals() {
        let path = GlobalExample::parse_facts(fixtures::PATH).unwrap();
        let dist = marginal_distribution_a(&path, 2).unwrap();
        assert_eq!(dist.total(), q(1, 1));
        assert_eq!(dist.prob_local(&LocalExample::empty(2)).unwrap(), q(1, 3));
        let e12 = LocalExample::new(2, [GroundAtom::new("e", vec![0, 1])]);
        let e21 = LocalExample::new(2, [GroundAtom::new("e", vec![1, 0])]);
        assert_eq!(dist.prob_local(&e12).unwrap(), q(1, 3));
        assert_eq!(dist.prob_local(&e21).unwrap(), q(1, 3));
        let empty = GlobalExample::parse_facts("").unwrap();
        let d0 = marginal_distribution_a(&empty, 0).unwrap();
        assert_eq!(d0.classes.len(), 1);
        assert_eq!(d0.total(), q(1, 1));
    }

    #[test]
    fn constraint_files() {
        let cs = parse_constraints("# c\n1/3 ; forall X: r(X)\n0.25; exists X: r(X)\n").unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[0].theta, Theta::Exact(q(1, 3)));
        assert_eq!(cs[1].theta, Theta::Real(0.25));
        let json = r#"[{"formula": "forall X: r(X)", "theta": "2/3"}, {"formula": "exists X: r(X)", "theta": 0.5}]"#;
        let cs = parse_constraints(json).unwrap();
        assert_eq!(cs[0].theta, Theta::Exact(q(2, 3)));
        assert_eq!(cs[1].theta.value(), 0.5);
        assert!(matches!(parse_constraints("1/3 forall X: r(X)"), Err(Error::Syntax { line: 1, .. })));
        assert!(matches!(parse_constraints("\n3/2 ; forall X: r(X)"), Err(Error::Syntax { line: 2, .. })));
        match parse_constraints("0.5 ; forall X: r(X") {
            Err(Error::Syntax { line: 1, column: 20, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_constraints("0.5 ; r(X)"), Err(Error::NotClosed(_))));
        assert!(parse_constraints("1/0 ; forall X: r(X)").is_err());
    }

    #[test]
    fn monte_carlo_converges() {
        let ex = friends();
        let (a, _) = alpha_beta();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples = 10_000;
        for (kind, exact) in [(ModelKind::A { width: 2 }, 1.0 / 3.0), (ModelKind::B, 0.5)] {
            let est = monte_carlo_estimate(&a, &ex, kind, samples, &mut rng).unwrap();
            let se = (exact * (1.0 - exact) / samples as f64).sqrt();
            assert!((est - exact).abs() <= 4.0 * se, "{kind:?}: {est}");
        }
        let taut = parse_formula("forall X: sm(X) | ~sm(X)").unwrap();
        assert_eq!(monte_carlo_estimate(&taut, &ex, ModelKind::A { width: 1 }, 3, &mut rng).unwrap(), 1.0);
    }

    #[test]
    fn sampled_groups_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = BTreeMap::new();
        let draws = 12_000;
        for _ in 0..draws {
            *counts.entry(sample_group(&mut rng, 4, 2, true)).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 12);
        let expected = draws as f64 / 12.0;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 11 degrees of freedom; the 0.999 quantile is 31.26
        assert!(chi2 < 31.26, "chi2 = {chi2}");
    }

    const POOL: &[&str] = &[
        "forall X, Y: ~e(X, Y) | r(Y)",
        "forall X, Y: ~e(X, Y) | e(Y, X)",
        "forall X: r(X) | (exists Y: e(X, Y))",
        "exists X, Y: X != Y & e(X, Y) & ~r(X)",
        "forall X, Y: X = Y | ~r(X) | ~r(Y)",
    ];

    proptest! {
        #[test]
        fn complements_sum_to_one(seed in any::<u64>(), fi in 0..POOL.len(), k in 1usize..4) {
            let vocab = Vocabulary::parse_spec("e/2,r/1").unwrap();
            let ex = random_example(4, &vocab, 0.4, &mut ChaCha8Rng::seed_from_u64(seed));
            let f = parse_formula(POOL[fi]).unwrap();
            let not_f = Formula::not(f.clone());
            let total = prob_model_a(&f, &ex, k).unwrap() + prob_model_a(&not_f, &ex, k).unwrap();
            prop_assert_eq!(total, q(1, 1));
            if let Ok((vars, body)) = f.universal_parts() {
                let neg = Formula::forall(vars, Formula::not(body.clone()));
                let total = prob_model_b(&f, &ex).unwrap() + prob_model_b(&neg, &ex).unwrap();
                prop_assert_eq!(total, q(1, 1));
            }
        }

        #[test]
        fn class_masses_give_formula_probabilities(seed in any::<u64>(), fi in 0..POOL.len(), k in 1usize..4) {
            let vocab = Vocabulary::parse_spec("e/2,r/1").unwrap();
            let ex = random_example(5, &vocab, 0.4, &mut ChaCha8Rng::seed_from_u64(seed));
            let dist = marginal_distribution_a(&ex, k).unwrap();
            prop_assert_eq!(dist.total(), q(1, 1));
            let f = parse_formula(POOL[fi]).unwrap();
            prop_assert_eq!(dist.prob_formula(&f).unwrap(), prob_model_a(&f, &ex, k).unwrap());
        }

        #[test]
        fn statistics_are_isomorphism_invariant(seed in any::<u64>(), fi in 0..POOL.len()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vocab = Vocabulary::parse_spec("e/2,r/1").unwrap();
            let ex = random_example(4, &vocab, 0.4, &mut rng);
            let mut perm: Vec<usize> = (0..4).collect();
            perm.shuffle(&mut rng);
            let mut renamed = GlobalExample::with_indexed_constants(4);
            for a in ex.atoms() {
                renamed.insert(a.renamed(&perm));
            }
            let f = parse_formula(POOL[fi]).unwrap();
            for k in 1..=4 {
                prop_assert_eq!(prob_model_a(&f, &ex, k).unwrap(), prob_model_a(&f, &renamed, k).unwrap());
            }
            if f.universal_parts().is_ok() {
                prop_assert_eq!(prob_model_b(&f, &ex).unwrap(), prob_model_b(&f, &renamed).unwrap());
            }
        }
    }
}
