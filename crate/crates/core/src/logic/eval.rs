use smallvec::SmallVec;

use super::{Formula, Term, Vocabulary};
use crate::data::GlobalExample;
use crate::error::{Error, Result};

/// A finite structure: which ground atoms hold. Predicates and constants are
/// dense indices; constants are distinct by unique names.
pub trait Interpretation {
    fn holds(&self, pred: usize, args: &[usize]) -> bool;
}

impl<I: Interpretation + ?Sized> Interpretation for &I {
    fn holds(&self, pred: usize, args: &[usize]) -> bool {
        (**self).holds(pred, args)
    }
}

#[derive(Clone, Copy, Debug)]
enum Arg {
    Slot(usize),
    Const(usize),
}

#[derive(Clone, Debug)]
enum Node {
    Atom(usize, SmallVec<[Arg; 4]>),
    Eq(Arg, Arg),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Forall(SmallVec<[usize; 4]>, Box<Node>),
    Exists(SmallVec<[usize; 4]>, Box<Node>),
}

/// A formula resolved against a vocabulary and a constant table, ready for
/// repeated evaluation. Variables become slots in an environment array; the
/// first `open` slots hold the caller-supplied variables.
#[derive(Clone, Debug)]
pub struct Compiled {
    root: Node,
    slots: usize,
    open: usize,
}

struct Ctx<'a> {
    vocab: &'a Vocabulary,
    constant: &'a dyn Fn(&str) -> Option<usize>,
    scope: Vec<(String, usize)>,
    slots: usize,
}

impl Ctx<'_> {
    fn arg(&self, t: &Term) -> Result<Arg> {
        match t {
            Term::Var(v) => self
                .scope
                .iter()
                .rev()
                .find(|(name, _)| name == v)
                .map(|&(_, s)| Arg::Slot(s))
                .ok_or_else(|| Error::NotClosed(v.clone())),
            Term::Const(c) => (self.constant)(c)
                .map(Arg::Const)
                .ok_or_else(|| Error::UnknownConstant(c.clone())),
        }
    }

    fn node(&mut self, f: &Formula) -> Result<Node> {
        Ok(match f {
            Formula::Atom { pred, args } => {
                let (idx, arity) = self
                    .vocab
                    .get(pred)
                    .ok_or_else(|| Error::UnknownPredicate(pred.clone()))?;
                if arity != args.len() {
                    return Err(Error::Arity {
                        name: pred.clone(),
                        expected: arity,
                        found: args.len(),
                    });
                }
                Node::Atom(idx, args.iter().map(|t| self.arg(t)).collect::<Result<_>>()?)
            }
            Formula::Eq(a, b) => Node::Eq(self.arg(a)?, self.arg(b)?),
            Formula::Not(g) => Node::Not(Box::new(self.node(g)?)),
            Formula::And(gs) => Node::And(gs.iter().map(|g| self.node(g)).collect::<Result<_>>()?),
            Formula::Or(gs) => Node::Or(gs.iter().map(|g| self.node(g)).collect::<Result<_>>()?),
            Formula::Forall(vs, g) | Formula::Exists(vs, g) => {
                let depth = self.scope.len();
                let mut slots = SmallVec::new();
                for v in vs {
                    if self.scope.iter().any(|(name, _)| name == v) {
                        return Err(Error::Rebound(v.clone()));
                    }
                    self.scope.push((v.clone(), self.slots));
                    slots.push(self.slots);
                    self.slots += 1;
                }
                let body = Box::new(self.node(g)?);
                self.scope.truncate(depth);
                if matches!(f, Formula::Forall(..)) {
                    Node::Forall(slots, body)
                } else {
                    Node::Exists(slots, body)
                }
            }
        })
    }
}

impl Compiled {
    /// Compiles `f`, treating `open` as externally assigned variables in
    /// slots `0..open.len()`. Any other free variable is an error.
    pub fn new(
        f: &Formula,
        vocab: &Vocabulary,
        open: &[String],
        constant: &dyn Fn(&str) -> Option<usize>,
    ) -> Result<Self> {
        let mut ctx = Ctx {
            vocab,
            constant,
            scope: open.iter().cloned().zip(0..).collect(),
            slots: open.len(),
        };
        let root = ctx.node(f).map_err(|e| match e {
            Error::NotClosed(_) => Error::NotClosed(f.vars().free.into_iter().collect::<Vec<_>>().join(", ")),
            e => e,
        })?;
        Ok(Compiled {
            root,
            slots: ctx.slots,
            open: open.len(),
        })
    }

    /// Compiles a closed, constant-free formula.
    pub fn closed(f: &Formula, vocab: &Vocabulary) -> Result<Self> {
        Self::new(f, vocab, &[], &|_| None)
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn open(&self) -> usize {
        self.open
    }

    /// Evaluates with quantifiers ranging over `domain`. `open_values`
    /// supplies the open variables in order.
    pub fn eval<I: Interpretation + ?Sized>(&self, interp: &I, domain: &[usize], open_values: &[usize]) -> bool {
        debug_assert_eq!(open_values.len(), self.open);
        let mut env: SmallVec<[usize; 8]> = SmallVec::from_elem(0, self.slots);
        env[..self.open].copy_from_slice(open_values);
        eval_node(&self.root, interp, domain, &mut env)
    }
}

#[inline]
fn resolve(a: Arg, env: &[usize]) -> usize {
    match a {
        Arg::Slot(s) => env[s],
        Arg::Const(c) => c,
    }
}

fn eval_node<I: Interpretation + ?Sized>(n: &Node, interp: &I, domain: &[usize], env: &mut [usize]) -> bool {
    match n {
        Node::Atom(p, args) => {
            let vals: SmallVec<[usize; 4]> = args.iter().map(|&a| resolve(a, env)).collect();
            interp.holds(*p, &vals)
        }
        Node::Eq(a, b) => resolve(*a, env) == resolve(*b, env),
        Node::Not(g) => !eval_node(g, interp, domain, env),
        Node::And(gs) => gs.iter().all(|g| eval_node(g, interp, domain, env)),
        Node::Or(gs) => gs.iter().any(|g| eval_node(g, interp, domain, env)),
        Node::Forall(slots, body) => quantify(slots, true, body, interp, domain, env),
        Node::Exists(slots, body) => quantify(slots, false, body, interp, domain, env),
    }
}

fn quantify<I: Interpretation + ?Sized>(
    slots: &[usize],
    universal: bool,
    body: &Node,
    interp: &I,
    domain: &[usize],
    env: &mut [usize],
) -> bool {
    let Some((&first, rest)) = slots.split_first() else {
        return eval_node(body, interp, domain, env);
    };
    for &c in domain {
        env[first] = c;
        if quantify(rest, universal, body, interp, domain, env) != universal {
            return !universal;
        }
    }
    universal
}

/// Classical truth of a closed formula in a global example. Quantifiers range
/// over the example's constants; predicates absent from the example are empty.
pub fn evaluate(f: &Formula, example: &GlobalExample) -> Result<bool> {
    let mut vocab = example.vocabulary()?;
    vocab.absorb_formula(f)?;
    let compiled = Compiled::new(f, &vocab, &[], &|c| example.constant_id(c))?;
    let dense = example.dense(&vocab)?;
    let domain: Vec<usize> = (0..example.len()).collect();
    Ok(compiled.eval(&dense, &domain, &[]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::GlobalExample;
    use crate::logic::parse_formula;

    fn friends() -> GlobalExample {
        GlobalExample::parse_facts("fr(alice,bob)\nfr(bob,alice)\nfr(bob,eve)\nfr(eve,bob)\nsm(alice)").unwrap()
    }

    /// Oracle: expand every quantifier into a finite conjunction/disjunction
    /// of substituted instances, then evaluate the ground formula directly.
    fn brute(f: &Formula, ex: &GlobalExample) -> bool {
        match f {
            Formula::Atom { pred, args } => {
                let names: Vec<&str> = args.iter().map(|t| t.name()).collect();
                ex.contains_named(pred, &names)
            }
            Formula::Eq(a, b) => a.name() == b.name(),
            Formula::Not(g) => !brute(g, ex),
            Formula::And(gs) => gs.iter().all(|g| brute(g, ex)),
            Formula::Or(gs) => gs.iter().any(|g| brute(g, ex)),
            Formula::Forall(vs, body) | Formula::Exists(vs, body) => {
                let universal = matches!(f, Formula::Forall(..));
                let (v, rest) = vs.split_first().unwrap();
                let inner = if rest.is_empty() {
                    (**body).clone()
                } else if universal {
                    Formula::Forall(rest.to_vec(), body.clone())
                } else {
                    Formula::Exists(rest.to_vec(), body.clone())
                };
                let mut results = ex.constants().iter().map(|c| {
                    let theta = crate::logic::Substitution::new().bind(v.clone(), c.clone());
                    brute(&inner.apply_substitution(&theta), ex)
                });
                if universal {
                    results.all(|b| b)
                } else {
                    results.any(|b| b)
                }
            }
        }
    }

    #[test]
    fn fragment_truth_values() {
        let ex = friends();
        let alpha = parse_formula("forall X, Y: ~fr(X,Y) | sm(Y)").unwrap();
        let ae = ex.fragment_by_names(&["alice", "eve"]).unwrap();
        let ab = ex.fragment_by_names(&["alice", "bob"]).unwrap();
        assert!(evaluate(&alpha, &ae).unwrap());
        assert!(brute(&alpha, &ae));
        assert!(!evaluate(&alpha, &ab).unwrap());
        assert!(!brute(&alpha, &ab));
    }

    #[test]
    fn vacuous_truth_on_empty_world() {
        let ex = GlobalExample::parse_facts("@constants a, b, c").unwrap();
        let f = parse_formula("forall X, Y: ~p(X,Y) | q(Y)").unwrap();
        assert!(evaluate(&f, &ex).unwrap());
    }

    #[test]
    fn unique_names_equality() {
        let ex = GlobalExample::parse_facts("@constants a, b").unwrap();
        assert!(evaluate(&parse_formula("a = a").unwrap(), &ex).unwrap());
        assert!(!evaluate(&parse_formula("a = b").unwrap(), &ex).unwrap());
        assert!(evaluate(&parse_formula("exists X, Y: X != Y").unwrap(), &ex).unwrap());
        assert!(matches!(
            evaluate(&parse_formula("a = zed").unwrap(), &ex),
            Err(Error::UnknownConstant(_))
        ));
        assert!(matches!(
            evaluate(&parse_formula("r(X)").unwrap(), &ex),
            Err(Error::NotClosed(_))
        ));
    }

    #[test]
    fn matches_quantifier_expansion_oracle() {
        let ex = friends();
        for s in [
            "forall X, Y: ~fr(X,Y) | sm(X) | sm(Y)",
            "exists X: sm(X) & fr(X, bob)",
            "forall X: exists Y: fr(X, Y)",
            "exists X, Y: X != Y & ~fr(X, Y)",
            "forall X: sm(X) -> (exists Y: fr(Y, X))",
            "~(forall X, Y: fr(X, Y) -> fr(Y, X))",
        ] {
            let f = parse_formula(s).unwrap();
            assert_eq!(evaluate(&f, &ex).unwrap(), brute(&f, &ex), "{s}");
        }
    }

    #[test]
    fn renaming_bound_variables_is_irrelevant() {
        let ex = friends();
        let a = parse_formula("forall X: exists Y: fr(X, Y) | sm(X)").unwrap();
        let b = parse_formula("forall U: exists V: fr(U, V) | sm(U)").unwrap();
        assert_eq!(evaluate(&a, &ex).unwrap(), evaluate(&b, &ex).unwrap());
    }
}
