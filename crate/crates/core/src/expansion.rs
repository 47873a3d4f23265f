//! `l`-level expansions and the closed-form bounds that control how far
//! statistics move under them.
//!
//! The expansion of an example over `c_1..c_n` lives on `c_1..c_{l·n}`, and
//! `c_i`, `c_j` are congruent when `i ≡ j (mod n)`. Every atom is copied
//! with each argument independently replaced by each of its congruent
//! constants.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};
use rand::Rng;
use serde::Serialize;

use crate::combin::{big_binomial, to_f64};
use crate::data::{AtomLayout, CanonicalForm, GlobalExample, GroundAtom};
use crate::error::{Error, Result};
use crate::logic::{evaluate, Formula, Vocabulary};
use crate::stats::{marginal_distribution_a, ModelKind};

/// Congruence of 0-based constant indices modulo the base size.
pub fn congruent(i: usize, j: usize, n: usize) -> bool {
    i % n == j % n
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expansion {
    pub base: GlobalExample,
    pub level: usize,
    pub result: GlobalExample,
}

impl Expansion {
    /// Index of the base constant congruent to constant `c` of the result.
    pub fn residue(&self, c: usize) -> usize {
        c % self.base.len()
    }

    /// The image of the result's atom under residue projection.
    pub fn project(&self, atom: &GroundAtom) -> GroundAtom {
        GroundAtom::new(atom.pred.clone(), atom.args.iter().map(|&c| self.residue(c)).collect())
    }
}

/// Names for the `l·n` constants: the base names, then `c{i}` for the new
/// positions `i = n+1..l·n`, with `_` prefixed until the name is unused.
fn expanded_constants(base: &GlobalExample, level: usize) -> Vec<String> {
    let mut taken: BTreeSet<String> = base.constants().iter().cloned().collect();
    let mut names = base.constants().to_vec();
    for i in base.len()..base.len() * level {
        let mut name = format!("c{}", i + 1);
        while taken.contains(&name) {
            name.insert(0, '_');
        }
        taken.insert(name.clone());
        names.push(name);
    }
    names
}

fn check_level(level: usize) -> Result<()> {
    if level == 0 {
        return Err(Error::InvalidArgument("expansion level must be at least 1".into()));
    }
    Ok(())
}

pub fn expansion(base: &GlobalExample, level: usize) -> Result<Expansion> {
    check_level(level)?;
    let n = base.len();
    let mut result = GlobalExample::new(expanded_constants(base, level))?;
    for atom in base.atoms() {
        let arity = atom.args.len();
        let copies = level.pow(arity as u32);
        for mut code in 0..copies {
            let mut args = Vec::with_capacity(arity);
            for &a in &atom.args {
                args.push(a + (code % level) * n);
                code /= level;
            }
            result.insert(GroundAtom::new(atom.pred.clone(), args));
        }
    }
    Ok(Expansion {
        base: base.clone(),
        level,
        result,
    })
}

pub fn expand(base: &GlobalExample, level: usize) -> Result<GlobalExample> {
    Ok(expansion(base, level)?.result)
}

/// Minimum admissible level for a constraint set: the width for Model A,
/// the largest universal prefix for Model B.
pub fn required_level(formulas: &[Formula], kind: ModelKind) -> Result<usize> {
    match kind {
        ModelKind::A { width } => Ok(width),
        ModelKind::B => formulas
            .iter()
            .map(|f| f.universal_parts().map(|(vs, _)| vs.len()))
            .try_fold(1, |acc, v| v.map(|v| acc.max(v))),
    }
}

/// Atoms over the expansion whose arguments are pairwise congruent and which
/// the plain expansion does not contain, in layout order.
pub fn noise_candidates(base: &GlobalExample, level: usize, vocab: &Vocabulary) -> Result<Vec<GroundAtom>> {
    let exp = expand(base, level)?;
    let n = base.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut vocab = vocab.clone();
    for p in base.vocabulary()?.predicates() {
        vocab.add(&p.name, p.arity)?;
    }
    let layout = AtomLayout::new(&vocab, exp.len());
    let mut out = Vec::new();
    for idx in 0..layout.total() {
        let (pred, args) = layout.decode(idx);
        if args.iter().all(|&a| congruent(a, args[0], n)) {
            let atom = GroundAtom::new(vocab.predicates()[pred].name.clone(), args);
            if !exp.atoms().contains(&atom) {
                out.push(atom);
            }
        }
    }
    Ok(out)
}

/// The expansion plus each noise candidate independently with probability
/// `epsilon`. `min_level` is the level the constraint set requires.
pub fn noisy_expand<R: Rng + ?Sized>(
    base: &GlobalExample,
    level: usize,
    epsilon: f64,
    vocab: &Vocabulary,
    min_level: usize,
    rng: &mut R,
) -> Result<GlobalExample> {
    check_level(level)?;
    if level < min_level {
        return Err(Error::LevelTooLow { level, min: min_level });
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("noise probability {epsilon} is outside [0, 1]")));
    }
    let mut out = expand(base, level)?;
    for atom in noise_candidates(base, level, vocab)? {
        if rng.gen_bool(epsilon) {
            out.insert(atom);
        }
    }
    Ok(out)
}

/// `1 - ((n-k+1)/n)^(k-1)`, with `n` the number of base constants.
pub fn expansion_diff_bound(n: usize, k: usize) -> f64 {
    to_f64(&expansion_diff_bound_exact(n, k))
}

pub fn expansion_diff_bound_exact(n: usize, k: usize) -> BigRational {
    assert!(1 <= k && k <= n, "bound needs 1 <= k <= n");
    let base = BigRational::new(BigInt::from(n - k + 1), BigInt::from(n));
    BigRational::one() - Pow::pow(base, (k - 1) as u32)
}

/// Probability that a uniform `k`-subset of the `l`-level expansion holds two
/// congruent constants: `1 - C(n,k)·l^k / C(n·l,k)`.
pub fn gamma(n: usize, k: usize, l: usize) -> f64 {
    to_f64(&gamma_exact(n, k, l))
}

pub fn gamma_exact(n: usize, k: usize, l: usize) -> BigRational {
    assert!(k <= n && l >= 1, "gamma needs k <= n and l >= 1");
    let hit = big_binomial(n, k) * Pow::pow(BigInt::from(l), k as u32);
    BigRational::one() - BigRational::new(hit, big_binomial(n * l, k))
}

/// Decomposition of the expansion's width-`k` marginal as
/// `(1-γ)·P + γ·R`.
#[derive(Clone, Debug, Serialize)]
pub struct MixtureCheck {
    #[serde(serialize_with = "crate::combin::ser_ratio")]
    pub gamma: BigRational,
    /// `R`, over every class with positive mass in `P` or `P'`. Empty when
    /// `γ = 0`.
    #[serde(skip)]
    pub residual: BTreeMap<CanonicalForm, BigRational>,
    /// `P' ≥ (1-γ)P` classwise.
    pub dominated: bool,
    /// `R` is non-negative and sums to one (or `P' = P` when `γ = 0`).
    pub valid: bool,
}

pub fn mixture_check(base: &GlobalExample, k: usize, level: usize) -> Result<MixtureCheck> {
    let p = marginal_distribution_a(base, k)?;
    let p2 = marginal_distribution_a(&expand(base, level)?, k)?;
    let g = gamma_exact(base.len(), k, level);
    let keep = BigRational::one() - &g;
    let forms: BTreeSet<&CanonicalForm> = p.classes.keys().chain(p2.classes.keys()).collect();
    let mut dominated = true;
    let mut residual = BTreeMap::new();
    for form in forms {
        let diff = p2.prob_class(form) - &keep * p.prob_class(form);
        if diff.is_negative() {
            dominated = false;
        }
        if !g.is_zero() {
            residual.insert(form.clone(), diff / &g);
        }
    }
    let valid = if g.is_zero() {
        p == p2
    } else {
        residual.values().all(|r| !r.is_negative()) && residual.values().sum::<BigRational>() == BigRational::one()
    };
    Ok(MixtureCheck {
        gamma: g,
        residual,
        dominated,
        valid,
    })
}

/// Errors with the first hard rule the example violates.
pub fn check_hard_rules(example: &GlobalExample, rules: &[Formula]) -> Result<()> {
    for (index, rule) in rules.iter().enumerate() {
        if !evaluate(rule, example)? {
            return Err(Error::HardRuleViolated {
                index,
                rule: rule.to_string(),
            });
        }
    }
    Ok(())
}

/// Expansion that refuses to return a result violating the hard rules.
pub fn expand_checked(base: &GlobalExample, level: usize, rules: &[Formula]) -> Result<GlobalExample> {
    let out = expand(base, level)?;
    check_hard_rules(&out, rules)?;
    Ok(out)
}
