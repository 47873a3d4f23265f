//! Global examples (finite relational structures), local examples over
//! `{1..k}`, fragments, isomorphism and canonical forms.

mod canon;
mod facts;
mod layout;

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::Serialize;

pub use canon::{canonicalize, is_isomorphic, local_class, CanonicalForm, ISO_WIDTH_CAP};
pub use layout::{AtomLayout, DenseExample};

use crate::error::{Error, Result};
use crate::logic::Vocabulary;

/// A ground atom; arguments are indices into the owning example's constants.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct GroundAtom {
    pub pred: String,
    pub args: Vec<usize>,
}

impl GroundAtom {
    pub fn new(pred: impl Into<String>, args: Vec<usize>) -> Self {
        GroundAtom {
            pred: pred.into(),
            args,
        }
    }

    pub fn renamed(&self, map: &[usize]) -> GroundAtom {
        GroundAtom {
            pred: self.pred.clone(),
            args: self.args.iter().map(|&a| map[a]).collect(),
        }
    }
}

/// A pair (atoms, constants). Constants are kept in first-appearance order
/// and addressed by their position.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GlobalExample {
    constants: Vec<String>,
    atoms: BTreeSet<GroundAtom>,
}

impl GlobalExample {
    pub fn new(constants: Vec<String>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for c in &constants {
            if !seen.insert(c) {
                return Err(Error::DuplicateConstant(c.clone()));
            }
        }
        Ok(GlobalExample {
            constants,
            atoms: BTreeSet::new(),
        })
    }

    /// Constants named `c1..cn`.
    pub fn with_indexed_constants(n: usize) -> Self {
        GlobalExample {
            constants: (1..=n).map(|i| format!("c{i}")).collect(),
            atoms: BTreeSet::new(),
        }
    }

    pub fn parse_facts(text: &str) -> Result<Self> {
        facts::parse(text)
    }

    pub fn to_facts(&self) -> String {
        facts::print(self)
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn atoms(&self) -> &BTreeSet<GroundAtom> {
        &self.atoms
    }

    /// Number of constants.
    pub fn len(&self) -> usize {
        self.constants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constants.is_empty()
    }

    pub fn constant_id(&self, name: &str) -> Option<usize> {
        self.constants.iter().position(|c| c == name)
    }

    pub(crate) fn intern_constant(&mut self, name: &str) -> usize {
        match self.constant_id(name) {
            Some(i) => i,
            None => {
                self.constants.push(name.to_string());
                self.constants.len() - 1
            }
        }
    }

    /// Inserts an atom; panics if an argument is not a constant index.
    pub fn insert(&mut self, atom: GroundAtom) -> bool {
        assert!(atom.args.iter().all(|&a| a < self.constants.len()), "atom argument out of range");
        self.atoms.insert(atom)
    }

    pub fn insert_named(&mut self, pred: &str, args: &[&str]) -> Result<bool> {
        let ids = args
            .iter()
            .map(|a| self.constant_id(a).ok_or_else(|| Error::UnknownConstant(a.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.insert(GroundAtom::new(pred, ids)))
    }

    pub fn contains_named(&self, pred: &str, args: &[&str]) -> bool {
        let ids: Option<Vec<usize>> = args.iter().map(|a| self.constant_id(a)).collect();
        ids.is_some_and(|args| self.atoms.contains(&GroundAtom::new(pred, args)))
    }

    /// Predicates occurring in the atoms, ordered by name.
    pub fn vocabulary(&self) -> Result<Vocabulary> {
        let mut v = Vocabulary::new();
        for a in &self.atoms {
            v.add(&a.pred, a.args.len())?;
        }
        Ok(v)
    }

    pub fn dense(&self, vocab: &Vocabulary) -> Result<DenseExample> {
        DenseExample::new(self, vocab)
    }

    /// The restriction to the constants with the given indices. Constants keep
    /// their relative order.
    pub fn fragment(&self, subset: &[usize]) -> Result<GlobalExample> {
        let mut keep: Vec<usize> = subset.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if keep.last().is_some_and(|&i| i >= self.len()) {
            return Err(Error::NotSubset);
        }
        let mut map = vec![usize::MAX; self.len()];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let atoms = self
            .atoms
            .iter()
            .filter(|a| a.args.iter().all(|&c| map[c] != usize::MAX))
            .map(|a| a.renamed(&map))
            .collect();
        Ok(GlobalExample {
            constants: keep.iter().map(|&i| self.constants[i].clone()).collect(),
            atoms,
        })
    }

    pub fn fragment_by_names(&self, names: &[&str]) -> Result<GlobalExample> {
        let ids = names
            .iter()
            .map(|n| self.constant_id(n).ok_or(Error::NotSubset))
            .collect::<Result<Vec<_>>>()?;
        self.fragment(&ids)
    }

    pub fn atom_string(&self, atom: &GroundAtom) -> String {
        let args: Vec<&str> = atom.args.iter().map(|&a| self.constants[a].as_str()).collect();
        format!("{}({})", atom.pred, args.join(","))
    }

    /// Reads the example as a local example over `{1..n}` in constant order.
    pub fn as_local(&self) -> LocalExample {
        LocalExample {
            width: self.len(),
            atoms: self.atoms.clone(),
        }
    }
}

impl fmt::Display for GlobalExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atoms: Vec<String> = self.atoms.iter().map(|a| self.atom_string(a)).collect();
        write!(f, "({{{}}}, {{{}}})", atoms.join(", "), self.constants.join(", "))
    }
}

/// A structure over the canonical constants `{1..width}`; stored 0-based.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocalExample {
    pub width: usize,
    pub atoms: BTreeSet<GroundAtom>,
}

impl LocalExample {
    pub fn new(width: usize, atoms: impl IntoIterator<Item = GroundAtom>) -> Self {
        let atoms: BTreeSet<GroundAtom> = atoms.into_iter().collect();
        assert!(atoms.iter().all(|a| a.args.iter().all(|&c| c < width)));
        LocalExample { width, atoms }
    }

    pub fn empty(width: usize) -> Self {
        LocalExample {
            width,
            atoms: BTreeSet::new(),
        }
    }

    pub fn to_global(&self) -> GlobalExample {
        GlobalExample {
            constants: (1..=self.width).map(|i| i.to_string()).collect(),
            atoms: self.atoms.clone(),
        }
    }

    pub fn renamed(&self, perm: &[usize]) -> LocalExample {
        LocalExample {
            width: self.width,
            atoms: self.atoms.iter().map(|a| a.renamed(perm)).collect(),
        }
    }
}

impl fmt::Display for LocalExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atoms: Vec<String> = self
            .atoms
            .iter()
            .map(|a| {
                let args: Vec<String> = a.args.iter().map(|c| (c + 1).to_string()).collect();
                format!("{}({})", a.pred, args.join(","))
            })
            .collect();
        let consts: Vec<String> = (1..=self.width).map(|i| i.to_string()).collect();
        write!(f, "({{{}}}, {{{}}})", atoms.join(", "), consts.join(","))
    }
}

/// A random example over `c1..cn` where every ground atom of the vocabulary
/// is included independently with probability `density`.
pub fn random_example<R: Rng + ?Sized>(n: usize, vocab: &Vocabulary, density: f64, rng: &mut R) -> GlobalExample {
    let mut ex = GlobalExample::with_indexed_constants(n);
    let layout = AtomLayout::new(vocab, n);
    for idx in 0..layout.total() {
        if rng.gen_bool(density) {
            let (pred, args) = layout.decode(idx);
            ex.insert(GroundAtom::new(vocab.predicates()[pred].name.clone(), args));
        }
    }
    ex
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn friends() -> GlobalExample {
        GlobalExample::parse_facts(crate::fixtures::FRIENDS).unwrap()
    }

    #[test]
    fn fragment_of_friends() {
        let ex = friends();
        let frag = ex.fragment_by_names(&["alice", "bob"]).unwrap();
        assert_eq!(frag.constants(), ["alice", "bob"]);
        let mut atoms: Vec<String> = frag.atoms().iter().map(|a| frag.atom_string(a)).collect();
        atoms.sort();
        assert_eq!(atoms, ["fr(alice,bob)", "fr(bob,alice)", "sm(alice)"]);
    }

    #[test]
    fn trivial_fragments() {
        let ex = friends();
        let all: Vec<usize> = (0..ex.len()).collect();
        assert_eq!(ex.fragment(&all).unwrap(), ex);
        let empty = ex.fragment(&[]).unwrap();
        assert!(empty.is_empty() && empty.atoms().is_empty());
        assert!(matches!(ex.fragment(&[7]), Err(Error::NotSubset)));
        assert!(matches!(ex.fragment_by_names(&["zed"]), Err(Error::NotSubset)));
    }

    proptest! {
        #[test]
        fn fragment_of_fragment(mask_s in 0u32..64, mask_t in 0u32..64, seed in any::<u64>()) {
            let vocab = Vocabulary::parse_spec("e/2,r/1").unwrap();
            let ex = random_example(6, &vocab, 0.4, &mut ChaCha8Rng::seed_from_u64(seed));
            let s: Vec<usize> = (0..6).filter(|i| mask_s >> i & 1 == 1).collect();
            let t: Vec<usize> = s.iter().copied().filter(|i| mask_t >> i & 1 == 1).collect();
            let fs = ex.fragment(&s).unwrap();
            let t_names: Vec<&str> = t.iter().map(|&i| ex.constants()[i].as_str()).collect();
            prop_assert_eq!(fs.fragment_by_names(&t_names).unwrap(), ex.fragment(&t).unwrap());
        }
    }
}
