//! Max-entropy models over an explicitly enumerated space of worlds.
//!
//! A world is a set of ground atoms over a fixed constant table, stored as a
//! bit pattern over the [`AtomLayout`]. The world space contains every
//! pattern satisfying the hard rules, in ascending bit order.

mod dual;
mod primal;
mod shrink;

use num_rational::BigRational;
use rayon::prelude::*;

use crate::combin::{ratio, to_f64};
use crate::data::{AtomLayout, GlobalExample, GroundAtom};
use crate::error::{Error, Result};
use crate::logic::{Compiled, Formula, Interpretation, Vocabulary};
use crate::stats::{ModelKind, Statistic};

pub use dual::{
    dual_objective, log_likelihood_duality_check, model_probability, solve_maxent, solve_with_table, DualityReport,
    MaxEntModel, SolveOptions,
};
pub use primal::{primal_solve_oracle, ExplicitDistribution, PrimalOptions, PrimalSolution, PRIMAL_WORLD_CAP};
pub use shrink::{shrink_distribution, ExactDistribution};

/// Largest number of ground atoms for which worlds are enumerated.
pub const WORLD_ATOM_CAP: usize = 24;

/// A world as a bit pattern; bit `i` is atom `i` of the layout.
#[derive(Clone, Copy, Debug)]
pub struct BitWorld<'a> {
    pub layout: &'a AtomLayout,
    pub bits: u32,
}

impl Interpretation for BitWorld<'_> {
    #[inline]
    fn holds(&self, pred: usize, args: &[usize]) -> bool {
        self.bits >> self.layout.index(pred, args) & 1 == 1
    }
}

#[derive(Clone, Debug)]
pub struct WorldSpace {
    constants: Vec<String>,
    vocab: Vocabulary,
    rules: Vec<Formula>,
    layout: AtomLayout,
    worlds: Vec<u32>,
}

impl WorldSpace {
    /// Worlds over constants `c1..cn`.
    pub fn enumerate(n: usize, vocab: &Vocabulary, rules: &[Formula]) -> Result<Self> {
        Self::with_constants((1..=n).map(|i| format!("c{i}")).collect(), vocab, rules)
    }

    /// Predicates of the rules are added to `vocab`. Rules must be closed
    /// and may mention the given constants.
    pub fn with_constants(constants: Vec<String>, vocab: &Vocabulary, rules: &[Formula]) -> Result<Self> {
        GlobalExample::new(constants.clone())?;
        let mut vocab = vocab.clone();
        for r in rules {
            vocab.absorb_formula(r)?;
        }
        let layout = AtomLayout::new(&vocab, constants.len());
        if layout.total() > WORLD_ATOM_CAP {
            return Err(Error::CapExceeded {
                atoms: layout.total(),
                cap: WORLD_ATOM_CAP,
            });
        }
        let lookup = |c: &str| constants.iter().position(|x| x == c);
        let compiled: Vec<Compiled> = rules
            .iter()
            .map(|r| Compiled::new(r, &vocab, &[], &lookup))
            .collect::<Result<_>>()?;
        let domain: Vec<usize> = (0..constants.len()).collect();
        let worlds = (0..1u64 << layout.total())
            .into_par_iter()
            .map(|b| b as u32)
            .filter(|&bits| {
                let w = BitWorld { layout: &layout, bits };
                compiled.iter().all(|c| c.eval(&w, &domain, &[]))
            })
            .collect();
        Ok(WorldSpace {
            constants,
            vocab,
            rules: rules.to_vec(),
            layout,
            worlds,
        })
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    /// Number of constants.
    pub fn size(&self) -> usize {
        self.constants.len()
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn rules(&self) -> &[Formula] {
        &self.rules
    }

    pub fn layout(&self) -> &AtomLayout {
        &self.layout
    }

    pub fn worlds(&self) -> &[u32] {
        &self.worlds
    }

    pub fn world(&self, index: usize) -> BitWorld<'_> {
        BitWorld {
            layout: &self.layout,
            bits: self.worlds[index],
        }
    }

    /// Index of a bit pattern, if it satisfies the hard rules.
    pub fn index_of_bits(&self, bits: u32) -> Option<usize> {
        self.worlds.binary_search(&bits).ok()
    }

    pub fn world_example(&self, index: usize) -> GlobalExample {
        let mut ex = GlobalExample::new(self.constants.clone()).expect("distinct constants");
        let bits = self.worlds[index];
        for i in 0..self.layout.total() {
            if bits >> i & 1 == 1 {
                let (pred, args) = self.layout.decode(i);
                ex.insert(GroundAtom::new(self.vocab.predicates()[pred].name.clone(), args));
            }
        }
        ex
    }

    /// Index of `ex`, whose constants must be exactly this space's constants
    /// (in any order).
    pub fn world_of(&self, ex: &GlobalExample) -> Result<usize> {
        if ex.len() != self.size() {
            return Err(Error::ForeignWorld(format!(
                "world has {} constants, the space has {}",
                ex.len(),
                self.size()
            )));
        }
        let map: Vec<usize> = ex
            .constants()
            .iter()
            .map(|c| {
                self.constants
                    .iter()
                    .position(|x| x == c)
                    .ok_or_else(|| Error::ForeignWorld(format!("constant `{c}` is not in the space")))
            })
            .collect::<Result<_>>()?;
        let mut bits = 0u32;
        for a in ex.atoms() {
            let (pred, arity) = self
                .vocab
                .get(&a.pred)
                .ok_or_else(|| Error::ForeignWorld(format!("predicate `{}` is not in the vocabulary", a.pred)))?;
            if arity != a.args.len() {
                return Err(Error::ForeignWorld(format!("atom `{}` has the wrong arity", ex.atom_string(a))));
            }
            let args: Vec<usize> = a.args.iter().map(|&c| map[c]).collect();
            bits |= 1 << self.layout.index(pred, &args);
        }
        self.index_of_bits(bits)
            .ok_or_else(|| Error::ForeignWorld("world violates the hard rules".into()))
    }

    /// Identifies the space: constants, vocabulary and hard rules.
    pub fn signature(&self) -> String {
        let rules: Vec<String> = self.rules.iter().map(ToString::to_string).collect();
        format!("{}|{}|{}", self.constants.join(","), self.vocab, rules.join(";"))
    }
}

/// Integer statistic counts of every world for every formula.
#[derive(Clone, Debug)]
pub struct FeatureTable {
    kind: ModelKind,
    formulas: Vec<Formula>,
    normalizers: Vec<u64>,
    counts: Vec<u64>,
    worlds: usize,
}

impl FeatureTable {
    pub fn new(formulas: &[Formula], ws: &WorldSpace, kind: ModelKind) -> Result<Self> {
        let stats: Vec<Statistic> = formulas
            .iter()
            .map(|f| Statistic::new(f, ws.vocabulary(), kind, ws.size()))
            .collect::<Result<_>>()?;
        let counts = ws
            .worlds()
            .par_iter()
            .flat_map_iter(|&bits| {
                let w = BitWorld { layout: ws.layout(), bits };
                stats.iter().map(move |s| s.count(&w)).collect::<Vec<_>>()
            })
            .collect();
        Ok(FeatureTable {
            kind,
            formulas: formulas.to_vec(),
            normalizers: stats.iter().map(Statistic::normalizer).collect(),
            counts,
            worlds: ws.len(),
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn formulas(&self) -> &[Formula] {
        &self.formulas
    }

    /// Number of formulas.
    pub fn dim(&self) -> usize {
        self.formulas.len()
    }

    /// Number of worlds.
    pub fn len(&self) -> usize {
        self.worlds
    }

    pub fn is_empty(&self) -> bool {
        self.worlds == 0
    }

    pub fn normalizers(&self) -> &[u64] {
        &self.normalizers
    }

    /// Raw counts of world `w`.
    pub fn row(&self, w: usize) -> &[u64] {
        let h = self.dim();
        &self.counts[w * h..(w + 1) * h]
    }

    /// Counts divided by normalizers.
    pub fn feature_vector(&self, w: usize) -> Vec<f64> {
        self.row(w).iter().zip(&self.normalizers).map(|(&c, &n)| c as f64 / n as f64).collect()
    }

    pub fn exact_feature_vector(&self, w: usize) -> Vec<BigRational> {
        self.row(w).iter().zip(&self.normalizers).map(|(&c, &n)| ratio(c, n)).collect()
    }

    /// `E_p[count_i / N_i]` for each formula.
    pub fn marginals(&self, probs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (w, &p) in probs.iter().enumerate() {
            for (o, &c) in out.iter_mut().zip(self.row(w)) {
                *o += p * c as f64;
            }
        }
        out.iter_mut().zip(&self.normalizers).for_each(|(o, &n)| *o /= n as f64);
        out
    }
}

/// Statistic vector of one world computed from its example, bypassing the
/// bit-pattern route.
pub fn feature_vector(world: &GlobalExample, formulas: &[Formula], kind: ModelKind) -> Result<Vec<f64>> {
    formulas
        .iter()
        .map(|f| crate::stats::probability(f, world, kind).map(|r| to_f64(&r)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::PIGEONHOLE_FORMULA;
    use crate::logic::parse_formula;

    #[test]
    fn enumeration_respects_rules_and_cap() {
        let vocab = Vocabulary::parse_spec("r/1").unwrap();
        assert_eq!(WorldSpace::enumerate(3, &vocab, &[]).unwrap().len(), 8);
        let at_most_one = parse_formula("forall X, Y: X = Y | ~r(X) | ~r(Y)").unwrap();
        let ws = WorldSpace::enumerate(3, &vocab, &[at_most_one]).unwrap();
        assert_eq!(ws.len(), 4);
        let pinned = parse_formula("r(c2)").unwrap();
        assert_eq!(WorldSpace::enumerate(3, &vocab, &[pinned]).unwrap().len(), 4);
        let contradiction = parse_formula("r(c1) & ~r(c1)").unwrap();
        assert!(WorldSpace::enumerate(3, &vocab, &[contradiction]).unwrap().is_empty());
        let big = Vocabulary::parse_spec("e/2").unwrap();
        assert!(WorldSpace::enumerate(4, &big, &[]).is_ok());
        assert!(matches!(
            WorldSpace::enumerate(5, &big, &[]),
            Err(Error::CapExceeded { atoms: 25, cap: 24 })
        ));
        assert!(matches!(
            WorldSpace::enumerate(2, &vocab, &[parse_formula("r(X)").unwrap()]),
            Err(Error::NotClosed(_))
        ));
    }

    #[test]
    fn world_roundtrip() {
        let vocab = Vocabulary::parse_spec("e/2,r/1").unwrap();
        let ws = WorldSpace::enumerate(2, &vocab, &[]).unwrap();
        for i in (0..ws.len()).step_by(7) {
            assert_eq!(ws.world_of(&ws.world_example(i)).unwrap(), i);
        }
        let foreign = GlobalExample::parse_facts("r(c1)\nr(c9)").unwrap();
        assert!(matches!(ws.world_of(&foreign), Err(Error::ForeignWorld(_))));
        let unknown = GlobalExample::parse_facts("q(c1)\nr(c2)").unwrap();
        assert!(matches!(ws.world_of(&unknown), Err(Error::ForeignWorld(_))));
    }

    #[test]
    fn table_matches_example_route() {
        let vocab = Vocabulary::parse_spec("r/1").unwrap();
        let ws = WorldSpace::enumerate(3, &vocab, &[]).unwrap();
        let fs = [parse_formula(PIGEONHOLE_FORMULA).unwrap(), parse_formula("forall X: r(X)").unwrap()];
        for kind in [ModelKind::A { width: 2 }, ModelKind::A { width: 3 }] {
            let table = FeatureTable::new(&fs, &ws, kind).unwrap();
            for w in 0..ws.len() {
                assert_eq!(table.feature_vector(w), feature_vector(&ws.world_example(w), &fs, kind).unwrap());
            }
        }
        let b = [parse_formula("forall X, Y: r(X) | r(Y)").unwrap()];
        let table = FeatureTable::new(&b, &ws, ModelKind::B).unwrap();
        assert_eq!(table.normalizers(), [6]);
        for w in 0..ws.len() {
            assert_eq!(table.feature_vector(w), feature_vector(&ws.world_example(w), &b, ModelKind::B).unwrap());
        }
    }
}
