use std::path::Path;

use anyhow::{Context, Result};
use relmarg::data::GlobalExample;
use relmarg::logic::{Formula, Vocabulary};
use relmarg::stats::{parse_constraints, parse_formulas, MarginalConstraint};

use crate::SpaceArgs;

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn facts(path: &Path) -> Result<GlobalExample> {
    GlobalExample::parse_facts(&read(path)?).with_context(|| format!("in {}", path.display()))
}

pub fn formulas(path: &Path) -> Result<Vec<Formula>> {
    parse_formulas(&read(path)?).with_context(|| format!("in {}", path.display()))
}

pub fn constraints(path: &Path) -> Result<Vec<MarginalConstraint>> {
    parse_constraints(&read(path)?).with_context(|| format!("in {}", path.display()))
}

/// A constraints file (`theta ; formula` lines or JSON) or a plain formulas
/// file; targets are `None` for the latter.
pub fn formulas_or_constraints(path: &Path) -> Result<(Vec<Formula>, Option<Vec<MarginalConstraint>>)> {
    let text = read(path)?;
    let is_constraints = text.trim_start().starts_with('[')
        || text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .any(|l| !l.is_empty() && l.contains(';'));
    if is_constraints {
        let cs = parse_constraints(&text).with_context(|| format!("in {}", path.display()))?;
        Ok((cs.iter().map(|c| c.formula.clone()).collect(), Some(cs)))
    } else {
        Ok((parse_formulas(&text).with_context(|| format!("in {}", path.display()))?, None))
    }
}

pub fn rules(space: &SpaceArgs) -> Result<Vec<Formula>> {
    match &space.rules {
        Some(p) => formulas(p),
        None => Ok(Vec::new()),
    }
}

/// Predicates of the optional spec, the structure, the formulas and the rules.
pub fn vocabulary(
    space: &SpaceArgs,
    facts: Option<&GlobalExample>,
    formulas: &[Formula],
    rules: &[Formula],
) -> Result<Vocabulary> {
    let mut vocab = match &space.vocab {
        Some(spec) => Vocabulary::parse_spec(spec).context("in --vocab")?,
        None => Vocabulary::new(),
    };
    if let Some(ex) = facts {
        for p in ex.vocabulary()?.predicates() {
            vocab.add(&p.name, p.arity)?;
        }
    }
    for f in formulas.iter().chain(rules) {
        vocab.absorb_formula(f)?;
    }
    Ok(vocab)
}
