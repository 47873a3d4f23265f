use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::{FeatureTable, WorldSpace};
use crate::combin::{from_f64, ratio, big_binomial, subsets, to_f64};
use crate::error::{Error, Result};
use crate::expansion::required_level;
use crate::logic::Formula;
use crate::stats::ModelKind;

/// An exact probability vector aligned with a world space.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution {
    pub probs: Vec<BigRational>,
}

impl ExactDistribution {
    pub fn uniform(len: usize) -> Self {
        ExactDistribution {
            probs: vec![ratio(1, len as u64); len],
        }
    }

    pub fn point_mass(len: usize, index: usize) -> Self {
        let mut probs = vec![BigRational::zero(); len];
        probs[index] = ratio(1, 1);
        ExactDistribution { probs }
    }

    /// Exact image of a float vector.
    pub fn from_f64(probs: &[f64]) -> Self {
        ExactDistribution {
            probs: probs.iter().map(|&p| from_f64(p)).collect(),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.probs.iter().map(to_f64).collect()
    }

    pub fn total(&self) -> BigRational {
        self.probs.iter().sum()
    }

    /// `E_p[count_i / N_i]`.
    pub fn marginals(&self, table: &FeatureTable) -> Vec<BigRational> {
        (0..table.dim())
            .map(|i| {
                let acc: BigRational = self
                    .probs
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| !p.is_zero())
                    .map(|(w, p)| p * BigRational::from_integer(BigInt::from(table.row(w)[i])))
                    .sum();
                acc / BigRational::from_integer(BigInt::from(table.normalizers()[i]))
            })
            .collect()
    }
}

/// The distribution of the fragment on a uniformly random `m`-subset of the
/// constants, relabelled order-preservingly onto the constants of `to`.
pub fn shrink_distribution(
    p: &ExactDistribution,
    from: &WorldSpace,
    to: &WorldSpace,
    formulas: &[Formula],
    kind: ModelKind,
) -> Result<ExactDistribution> {
    if p.probs.len() != from.len() {
        return Err(Error::InvalidArgument(format!(
            "distribution has {} entries for {} worlds",
            p.probs.len(),
            from.len()
        )));
    }
    if from.vocabulary() != to.vocabulary() {
        return Err(Error::InvalidArgument("source and target vocabularies differ".into()));
    }
    let (n, m) = (from.size(), to.size());
    let min = required_level(formulas, kind)?;
    if m < min || m > n {
        return Err(Error::SizeOutOfRange { size: m, min, max: n });
    }
    let choices = subsets(n, m);
    let share = BigRational::new(BigInt::from(1), big_binomial(n, m));
    let maps: Vec<Vec<usize>> = choices
        .iter()
        .map(|sub| {
            (0..to.layout().total())
                .map(|i| {
                    let (pred, args) = to.layout().decode(i);
                    let lifted: Vec<usize> = args.iter().map(|&a| sub[a]).collect();
                    from.layout().index(pred, &lifted)
                })
                .collect()
        })
        .collect();
    let mut out = vec![BigRational::zero(); to.len()];
    for (w, pw) in p.probs.iter().enumerate() {
        if pw.is_zero() {
            continue;
        }
        let bits = from.worlds()[w];
        let part = pw * &share;
        for map in &maps {
            let mut small = 0u32;
            for (i, &src) in map.iter().enumerate() {
                small |= (bits >> src & 1) << i;
            }
            let j = to
                .index_of_bits(small)
                .ok_or_else(|| Error::ForeignWorld("a fragment violates the target's hard rules".into()))?;
            out[j] += &part;
        }
    }
    Ok(ExactDistribution { probs: out })
}
