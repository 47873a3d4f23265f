use std::collections::BTreeMap;

use super::{Formula, Term};
use crate::error::{Error, Result};

/// Maximum number of distinct atom placeholders in a collapsed body.
pub const PROPER_ATOM_CAP: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Slot {
    Block(usize),
    Const(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Placeholder {
    Atom(String, Vec<Slot>),
    Eq(Slot, Slot),
}

enum Prop {
    Lit(bool),
    Var(usize),
    Not(Box<Prop>),
    And(Vec<Prop>),
    Or(Vec<Prop>),
}

impl Prop {
    fn eval(&self, assignment: u32) -> bool {
        match self {
            Prop::Lit(b) => *b,
            Prop::Var(i) => assignment >> i & 1 == 1,
            Prop::Not(p) => !p.eval(assignment),
            Prop::And(ps) => ps.iter().all(|p| p.eval(assignment)),
            Prop::Or(ps) => ps.iter().any(|p| p.eval(assignment)),
        }
    }
}

fn collapse(
    f: &Formula,
    block_of: &BTreeMap<&str, usize>,
    table: &mut BTreeMap<Placeholder, usize>,
) -> Prop {
    let slot = |t: &Term| match t {
        Term::Var(v) => Slot::Block(block_of[v.as_str()]),
        Term::Const(c) => Slot::Const(c.clone()),
    };
    let intern = |p: Placeholder, table: &mut BTreeMap<Placeholder, usize>| {
        let next = table.len();
        Prop::Var(*table.entry(p).or_insert(next))
    };
    match f {
        Formula::Atom { pred, args } => intern(Placeholder::Atom(pred.clone(), args.iter().map(slot).collect()), table),
        Formula::Eq(a, b) => match (slot(a), slot(b)) {
            (Slot::Block(x), Slot::Block(y)) => Prop::Lit(x == y),
            (Slot::Const(x), Slot::Const(y)) => Prop::Lit(x == y),
            (x, y) => {
                let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
                intern(Placeholder::Eq(lo, hi), table)
            }
        },
        Formula::Not(g) => Prop::Not(Box::new(collapse(g, block_of, table))),
        Formula::And(gs) => Prop::And(gs.iter().map(|g| collapse(g, block_of, table)).collect()),
        Formula::Or(gs) => Prop::Or(gs.iter().map(|g| collapse(g, block_of, table)).collect()),
        Formula::Forall(..) | Formula::Exists(..) => unreachable!("matrix is quantifier-free"),
    }
}

/// Calls `f` with every set partition of `0..n` as a block index per element
/// (restricted growth strings), together with the number of blocks.
fn for_each_partition(n: usize, f: &mut impl FnMut(&[usize], usize) -> Result<bool>) -> Result<bool> {
    fn rec(
        a: &mut Vec<usize>,
        n: usize,
        blocks: usize,
        f: &mut impl FnMut(&[usize], usize) -> Result<bool>,
    ) -> Result<bool> {
        if a.len() == n {
            return f(a, blocks);
        }
        for b in 0..=blocks {
            a.push(b);
            let cont = rec(a, n, blocks.max(b + 1), f)?;
            a.pop();
            if !cont {
                return Ok(false);
            }
        }
        Ok(true)
    }
    rec(&mut Vec::with_capacity(n), n, 0, f)
}

/// True iff every non-injective grounding of the universally quantified
/// formula is trivially true: for each way of collapsing variables together,
/// the collapsed body, with equalities decided by the collapse, is a
/// propositional tautology over its remaining atoms.
pub fn is_proper(f: &Formula) -> Result<bool> {
    let (vars, body) = f.universal_parts()?;
    let n = vars.len();
    for_each_partition(n, &mut |blocks, count| {
        if count == n {
            return Ok(true);
        }
        let block_of: BTreeMap<&str, usize> = vars.iter().map(String::as_str).zip(blocks.iter().copied()).collect();
        let mut table = BTreeMap::new();
        let prop = collapse(body, &block_of, &mut table);
        if table.len() > PROPER_ATOM_CAP {
            return Err(Error::PropernessCap {
                atoms: table.len(),
                cap: PROPER_ATOM_CAP,
            });
        }
        Ok((0..1u32 << table.len()).all(|a| prop.eval(a)))
    })
}
