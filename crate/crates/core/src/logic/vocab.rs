use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Formula;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Predicate {
    pub name: String,
    pub arity: usize,
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

/// Ordered predicate signature. Predicates get dense indices in order of
/// first insertion.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    preds: Vec<Predicate>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_predicates(preds: impl IntoIterator<Item = Predicate>) -> Result<Self> {
        let mut v = Self::new();
        for p in preds {
            v.add(&p.name, p.arity)?;
        }
        Ok(v)
    }

    /// Parses `name/arity` items separated by commas or whitespace.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let mut v = Self::new();
        for item in spec.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
            let (name, arity) = item
                .split_once('/')
                .ok_or_else(|| Error::InvalidArgument(format!("expected name/arity, got `{item}`")))?;
            let valid = name.chars().next().is_some_and(|c| c.is_ascii_lowercase())
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            let arity: usize = arity
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad arity in `{item}`")))?;
            if !valid || arity == 0 {
                return Err(Error::InvalidArgument(format!("bad predicate `{item}`")));
            }
            v.add(name, arity)?;
        }
        Ok(v)
    }

    /// Adds a predicate, or checks the arity of an existing one.
    pub fn add(&mut self, name: &str, arity: usize) -> Result<usize> {
        if let Some(&i) = self.index.get(name) {
            let expected = self.preds[i].arity;
            if expected != arity {
                return Err(Error::Arity {
                    name: name.to_string(),
                    expected,
                    found: arity,
                });
            }
            return Ok(i);
        }
        let i = self.preds.len();
        self.preds.push(Predicate {
            name: name.to_string(),
            arity,
        });
        self.index.insert(name.to_string(), i);
        Ok(i)
    }

    pub fn absorb_formula(&mut self, f: &Formula) -> Result<()> {
        for (name, arity) in f.predicates() {
            self.add(&name, arity)?;
        }
        Ok(())
    }

    /// Errors when the formula uses a predicate outside this vocabulary or
    /// with the wrong arity.
    pub fn check_formula(&self, f: &Formula) -> Result<()> {
        for (name, arity) in f.predicates() {
            match self.get(&name) {
                None => return Err(Error::UnknownPredicate(name)),
                Some((_, expected)) if expected != arity => {
                    return Err(Error::Arity {
                        name,
                        expected,
                        found: arity,
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<(usize, usize)> {
        self.index.get(name).map(|&i| (i, self.preds[i].arity))
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.preds
    }

    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }
}

impl fmt::Display for Vocabulary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.preds.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(","))
    }
}
