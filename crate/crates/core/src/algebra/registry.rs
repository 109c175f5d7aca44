use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mode {
    pub label: String,
    pub dim: usize,
}

/// Ordered set of bosonic modes. The order fixes the tensor-product layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeRegistry {
    modes: Vec<Mode>,
    index: HashMap<String, usize>,
}

impl ModeRegistry {
    pub fn new<S: Into<String>>(modes: impl IntoIterator<Item = (S, usize)>) -> Result<Arc<Self>> {
        let modes: Vec<Mode> = modes
            .into_iter()
            .map(|(label, dim)| Mode {
                label: label.into(),
                dim,
            })
            .collect();
        Self::from_modes(modes)
    }

    pub fn from_modes(modes: Vec<Mode>) -> Result<Arc<Self>> {
        if modes.is_empty() {
            return Err(Error::InvalidRegistry("no modes declared".into()));
        }
        let mut index = HashMap::new();
        for (i, m) in modes.iter().enumerate() {
            if !valid_label(&m.label) {
                return Err(Error::InvalidRegistry(format!("bad mode label `{}`", m.label)));
            }
            if m.dim < 2 {
                return Err(Error::InvalidRegistry(format!(
                    "mode `{}` needs truncation >= 2, got {}",
                    m.label, m.dim
                )));
            }
            if index.insert(m.label.clone(), i).is_some() {
                return Err(Error::InvalidRegistry(format!("duplicate mode `{}`", m.label)));
            }
        }
        Ok(Arc::new(ModeRegistry { modes, index }))
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn require(&self, label: &str) -> Result<usize> {
        self.index_of(label).ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    pub fn label(&self, idx: usize) -> &str {
        &self.modes[idx].label
    }

    pub fn dims(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.dim).collect()
    }

    /// Product of all truncations.
    pub fn total_dim(&self) -> usize {
        self.modes.iter().map(|m| m.dim).product()
    }

    /// Same labels in the same order; truncations may differ.
    pub fn compatible(&self, other: &ModeRegistry) -> bool {
        self.modes.len() == other.modes.len()
            && self.modes.iter().zip(&other.modes).all(|(a, b)| a.label == b.label)
    }

    pub fn with_dims(&self, dims: &[usize]) -> Result<Arc<Self>> {
        if dims.len() != self.modes.len() {
            return Err(Error::InvalidRegistry("truncation list length mismatch".into()));
        }
        Self::from_modes(
            self.modes
                .iter()
                .zip(dims)
                .map(|(m, &dim)| Mode {
                    label: m.label.clone(),
                    dim,
                })
                .collect(),
        )
    }

    /// Registry with the given mode appended.
    pub fn extended(&self, label: &str, dim: usize) -> Result<Arc<Self>> {
        let mut modes = self.modes.clone();
        modes.push(Mode {
            label: label.to_string(),
            dim,
        });
        Self::from_modes(modes)
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self.modes.iter().map(|m| format!("{}:{}", m.label, m.dim)).collect();
        format!("[{}]", parts.join(", "))
    }
}

pub(crate) fn valid_label(label: &str) -> bool {
    let mut chars = label.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_registries() {
        assert!(ModeRegistry::new([("a", 1)]).is_err());
        assert!(ModeRegistry::new([("a", 3), ("a", 3)]).is_err());
        assert!(ModeRegistry::new([("1a", 3)]).is_err());
        assert!(ModeRegistry::new(Vec::<(&str, usize)>::new()).is_err());
    }

    #[test]
    fn lookup_and_dims() {
        let r = ModeRegistry::new([("a", 3), ("c", 5)]).unwrap();
        assert_eq!(r.index_of("c"), Some(1));
        assert_eq!(r.total_dim(), 15);
        assert!(matches!(r.require("b"), Err(Error::UnknownMode(_))));
        let r2 = r.with_dims(&[4, 4]).unwrap();
        assert!(r.compatible(&r2));
        assert_ne!(*r, *r2);
    }
}
