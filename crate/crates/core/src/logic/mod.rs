//! Function-free first-order logic with equality.
//!
//! Variables start with an uppercase letter, constants and predicates with a
//! lowercase one. `a -> b` is desugared to `~a | b` and `s != t` to `~(s = t)`
//! while parsing, so the AST has no implication or disequality node.

mod eval;
pub(crate) mod parse;
mod print;
mod proper;
mod vocab;

use std::collections::{BTreeMap, BTreeSet};

pub use eval::{evaluate, Compiled, Interpretation};
pub use parse::parse_formula;
pub use proper::{is_proper, PROPER_ATOM_CAP};
pub use vocab::{Predicate, Vocabulary};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Var(s) | Term::Const(s) => s,
        }
    }
}

/// Formula AST. `And`/`Or` nodes produced by the parser always have at least
/// two children.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom { pred: String, args: Vec<Term> },
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Forall(Vec<String>, Box<Formula>),
    Exists(Vec<String>, Box<Formula>),
}

impl Formula {
    pub fn atom(pred: impl Into<String>, args: Vec<Term>) -> Self {
        Formula::Atom {
            pred: pred.into(),
            args,
        }
    }

    pub fn neq(a: Term, b: Term) -> Self {
        Formula::Not(Box::new(Formula::Eq(a, b)))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Or(vec![Formula::not(a), b])
    }

    pub fn forall<S: Into<String>>(vars: impl IntoIterator<Item = S>, body: Formula) -> Self {
        Formula::Forall(vars.into_iter().map(Into::into).collect(), Box::new(body))
    }

    pub fn exists<S: Into<String>>(vars: impl IntoIterator<Item = S>, body: Formula) -> Self {
        Formula::Exists(vars.into_iter().map(Into::into).collect(), Box::new(body))
    }

    pub fn vars(&self) -> VarSets {
        let mut sets = VarSets::default();
        self.collect_vars(&mut Vec::new(), &mut sets);
        sets
    }

    fn collect_vars(&self, bound: &mut Vec<String>, out: &mut VarSets) {
        let term = |t: &Term, bound: &Vec<String>, out: &mut VarSets| {
            if let Term::Var(v) = t {
                if bound.contains(v) {
                    out.bound.insert(v.clone());
                } else {
                    out.free.insert(v.clone());
                }
            }
        };
        match self {
            Formula::Atom { args, .. } => args.iter().for_each(|t| term(t, bound, out)),
            Formula::Eq(a, b) => {
                term(a, bound, out);
                term(b, bound, out);
            }
            Formula::Not(f) => f.collect_vars(bound, out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_vars(bound, out)),
            Formula::Forall(vs, body) | Formula::Exists(vs, body) => {
                let depth = bound.len();
                bound.extend(vs.iter().cloned());
                out.bound.extend(vs.iter().cloned());
                body.collect_vars(bound, out);
                bound.truncate(depth);
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.vars().free.is_empty()
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_terms(&mut |t| {
            if let Term::Const(c) = t {
                out.insert(c.clone());
            }
        });
        out
    }

    /// Predicates with the arity at each occurrence, in order of appearance.
    pub fn predicates(&self) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        self.visit(&mut |f| {
            if let Formula::Atom { pred, args } = f {
                out.push((pred.clone(), args.len()));
            }
        });
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Atom { .. } | Formula::Eq(..) => {}
            Formula::Not(g) | Formula::Forall(_, g) | Formula::Exists(_, g) => g.visit(f),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.visit(f)),
        }
    }

    fn visit_terms(&self, f: &mut impl FnMut(&Term)) {
        self.visit(&mut |g| match g {
            Formula::Atom { args, .. } => args.iter().for_each(&mut *f),
            Formula::Eq(a, b) => {
                f(a);
                f(b);
            }
            _ => {}
        });
    }

    /// Checks the "bound at most once on any root-to-leaf path" invariant.
    pub fn check_binding(&self) -> Result<()> {
        fn walk<'a>(f: &'a Formula, bound: &mut Vec<&'a str>) -> Result<()> {
            match f {
                Formula::Atom { .. } | Formula::Eq(..) => Ok(()),
                Formula::Not(g) => walk(g, bound),
                Formula::And(gs) | Formula::Or(gs) => gs.iter().try_for_each(|g| walk(g, bound)),
                Formula::Forall(vs, g) | Formula::Exists(vs, g) => {
                    let depth = bound.len();
                    for v in vs {
                        if bound.contains(&v.as_str()) {
                            return Err(Error::Rebound(v.clone()));
                        }
                        bound.push(v);
                    }
                    walk(g, bound)?;
                    bound.truncate(depth);
                    Ok(())
                }
            }
        }
        walk(self, &mut Vec::new())
    }

    /// Splits a leading block of universal quantifiers (consecutive `forall`
    /// prefixes are merged) from a quantifier-free matrix.
    pub fn universal_parts(&self) -> Result<(Vec<String>, &Formula)> {
        let mut vars = Vec::new();
        let mut cur = self;
        while let Formula::Forall(vs, body) = cur {
            vars.extend(vs.iter().cloned());
            cur = body;
        }
        if vars.is_empty() || !cur.is_quantifier_free() {
            return Err(Error::NotUniversal);
        }
        Ok((vars, cur))
    }

    pub fn is_quantifier_free(&self) -> bool {
        let mut qf = true;
        self.visit(&mut |f| {
            if matches!(f, Formula::Forall(..) | Formula::Exists(..)) {
                qf = false;
            }
        });
        qf
    }

    /// Replaces every occurrence of a covered variable by its constant.
    /// Quantifiers lose the variables that were substituted and disappear
    /// when none remain, so `(forall X, Y: body)θ` is the grounding `bodyθ`.
    pub fn apply_substitution(&self, theta: &Substitution) -> Formula {
        let sub = |t: &Term| match t {
            Term::Var(v) => match theta.get(v) {
                Some(c) => Term::Const(c.to_string()),
                None => t.clone(),
            },
            Term::Const(_) => t.clone(),
        };
        match self {
            Formula::Atom { pred, args } => Formula::Atom {
                pred: pred.clone(),
                args: args.iter().map(sub).collect(),
            },
            Formula::Eq(a, b) => Formula::Eq(sub(a), sub(b)),
            Formula::Not(f) => Formula::not(f.apply_substitution(theta)),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.apply_substitution(theta)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.apply_substitution(theta)).collect()),
            Formula::Forall(vs, body) | Formula::Exists(vs, body) => {
                let body = body.apply_substitution(theta);
                let rest: Vec<String> = vs.iter().filter(|v| theta.get(v).is_none()).cloned().collect();
                if rest.is_empty() {
                    body
                } else if matches!(self, Formula::Forall(..)) {
                    Formula::Forall(rest, Box::new(body))
                } else {
                    Formula::Exists(rest, Box::new(body))
                }
            }
        }
    }
}

/// Variables of a formula, split by whether each occurrence is in scope of a
/// binding quantifier. A variable can appear in both sets.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarSets {
    pub bound: BTreeSet<String>,
    pub free: BTreeSet<String>,
}

impl VarSets {
    pub fn all(&self) -> BTreeSet<String> {
        self.bound.union(&self.free).cloned().collect()
    }
}

/// A finite map from variables to constants.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution(BTreeMap<String, String>);

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(mut self, var: impl Into<String>, constant: impl Into<String>) -> Self {
        self.0.insert(var.into(), constant.into());
        self
    }

    pub fn get(&self, var: &str) -> Option<&str> {
        self.0.get(var).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_injective(&self) -> bool {
        let image: BTreeSet<&String> = self.0.values().collect();
        image.len() == self.0.len()
    }
}

impl<V: Into<String>, C: Into<String>> FromIterator<(V, C)> for Substitution {
    fn from_iter<T: IntoIterator<Item = (V, C)>>(iter: T) -> Self {
        Substitution(iter.into_iter().map(|(v, c)| (v.into(), c.into())).collect())
    }
}

pub fn is_injective(theta: &Substitution) -> bool {
    theta.is_injective()
}
