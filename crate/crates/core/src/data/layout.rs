use super::GlobalExample;
use crate::error::{Error, Result};
use crate::logic::{Interpretation, Vocabulary};

/// Dense numbering of all ground atoms over `n` constants: predicates in
/// vocabulary order, argument tuples in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomLayout {
    n: usize,
    arities: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl AtomLayout {
    pub fn new(vocab: &Vocabulary, n: usize) -> Self {
        let arities: Vec<usize> = vocab.predicates().iter().map(|p| p.arity).collect();
        let mut offsets = Vec::with_capacity(arities.len());
        let mut total = 0usize;
        for &a in &arities {
            offsets.push(total);
            total = total.saturating_add(n.saturating_pow(a as u32));
        }
        AtomLayout {
            n,
            arities,
            offsets,
            total,
        }
    }

    pub fn domain_size(&self) -> usize {
        self.n
    }

    /// Number of ground atoms.
    pub fn total(&self) -> usize {
        self.total
    }

    #[inline]
    pub fn index(&self, pred: usize, args: &[usize]) -> usize {
        debug_assert_eq!(args.len(), self.arities[pred]);
        let mut idx = 0;
        for &a in args {
            idx = idx * self.n + a;
        }
        self.offsets[pred] + idx
    }

    pub fn decode(&self, index: usize) -> (usize, Vec<usize>) {
        let pred = self.offsets.partition_point(|&o| o <= index) - 1;
        let mut rest = index - self.offsets[pred];
        let mut args = vec![0; self.arities[pred]];
        for slot in args.iter_mut().rev() {
            *slot = rest % self.n;
            rest /= self.n;
        }
        (pred, args)
    }
}

/// A global example as a bitmap over an [`AtomLayout`].
#[derive(Clone, Debug)]
pub struct DenseExample {
    layout: AtomLayout,
    bits: Vec<bool>,
}

impl DenseExample {
    pub fn new(example: &GlobalExample, vocab: &Vocabulary) -> Result<Self> {
        let layout = AtomLayout::new(vocab, example.len());
        let mut bits = vec![false; layout.total()];
        for a in example.atoms() {
            let (pred, arity) = vocab.get(&a.pred).ok_or_else(|| Error::UnknownPredicate(a.pred.clone()))?;
            if arity != a.args.len() {
                return Err(Error::Arity {
                    name: a.pred.clone(),
                    expected: arity,
                    found: a.args.len(),
                });
            }
            bits[layout.index(pred, &a.args)] = true;
        }
        Ok(DenseExample { layout, bits })
    }

    pub fn layout(&self) -> &AtomLayout {
        &self.layout
    }
}

impl Interpretation for DenseExample {
    #[inline]
    fn holds(&self, pred: usize, args: &[usize]) -> bool {
        self.bits[self.layout.index(pred, args)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_decode_roundtrip() {
        let vocab = Vocabulary::parse_spec("fr/2,sm/1,t/3").unwrap();
        let layout = AtomLayout::new(&vocab, 3);
        assert_eq!(layout.total(), 9 + 3 + 27);
        for i in 0..layout.total() {
            let (p, args) = layout.decode(i);
            assert_eq!(layout.index(p, &args), i);
        }
    }
}
