use std::cmp::Ordering;
use std::collections::BTreeSet;

use itertools::Itertools;
use serde::Serialize;

use super::{GlobalExample, GroundAtom, LocalExample};
use crate::error::{Error, Result};

/// Widths above this are rejected by the exhaustive renaming search.
pub const ISO_WIDTH_CAP: usize = 8;

/// Representative of an isomorphism class of local examples: the
/// lexicographically smallest sorted atom list over all renamings.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CanonicalForm {
    pub width: usize,
    pub atoms: Vec<GroundAtom>,
    /// Number of renamings fixing the atom set; divides `width!`.
    pub automorphisms: u64,
}

impl CanonicalForm {
    /// Number of distinct local examples in the class.
    pub fn class_size(&self) -> u64 {
        factorial(self.width) / self.automorphisms
    }

    pub fn to_local(&self) -> LocalExample {
        LocalExample::new(self.width, self.atoms.iter().cloned())
    }
}

pub(crate) fn factorial(k: usize) -> u64 {
    (1..=k as u64).product()
}

fn check_width(k: usize) -> Result<()> {
    if k > ISO_WIDTH_CAP {
        return Err(Error::WidthCap {
            width: k,
            cap: ISO_WIDTH_CAP,
        });
    }
    Ok(())
}

fn renamed_sorted(atoms: &BTreeSet<GroundAtom>, perm: &[usize]) -> Vec<GroundAtom> {
    let mut v: Vec<GroundAtom> = atoms.iter().map(|a| a.renamed(perm)).collect();
    v.sort_unstable();
    v
}

pub fn canonicalize(omega: &LocalExample) -> Result<CanonicalForm> {
    let k = omega.width;
    check_width(k)?;
    let original: Vec<GroundAtom> = omega.atoms.iter().cloned().collect();
    let mut best: Option<Vec<GroundAtom>> = None;
    let mut automorphisms = 0u64;
    for perm in (0..k).permutations(k) {
        let image = renamed_sorted(&omega.atoms, &perm);
        if image == original {
            automorphisms += 1;
        }
        match &best {
            Some(b) if image.cmp(b) != Ordering::Less => {}
            _ => best = Some(image),
        }
    }
    Ok(CanonicalForm {
        width: k,
        atoms: best.unwrap_or_default(),
        automorphisms: automorphisms.max(1),
    })
}

/// All local examples of width `|S|` isomorphic to the fragment on `S`.
pub fn local_class(example: &GlobalExample, subset: &[usize]) -> Result<BTreeSet<LocalExample>> {
    let frag = example.fragment(subset)?;
    check_width(frag.len())?;
    let local = frag.as_local();
    Ok((0..local.width)
        .permutations(local.width)
        .map(|perm| local.renamed(&perm))
        .collect())
}

/// Exhaustive search for a bijection of constants mapping one atom set onto
/// the other.
pub fn is_isomorphic(a: &GlobalExample, b: &GlobalExample) -> Result<bool> {
    let k = a.len();
    check_width(k.max(b.len()))?;
    if k != b.len() || a.atoms().len() != b.atoms().len() {
        return Ok(false);
    }
    Ok((0..k)
        .permutations(k)
        .any(|perm| a.atoms().iter().all(|atom| b.atoms().contains(&atom.renamed(&perm)))))
}
