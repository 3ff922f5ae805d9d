use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A set of selected feature indices, kept strictly increasing.
///
/// Ordering is lexicographic on the index sequence, which is the tie-break
/// used throughout the solvers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Support(Vec<usize>);

impl Support {
    /// Validates a strictly increasing, nonempty index sequence below `p`.
    pub fn new(indices: Vec<usize>, p: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidSupport("support is empty".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSupport(format!(
                "indices {indices:?} are not strictly increasing"
            )));
        }
        if let Some(&last) = indices.last() {
            if last >= p {
                return Err(Error::InvalidSupport(format!(
                    "index {last} out of range for {p} features"
                )));
            }
        }
        Ok(Self(indices))
    }

    /// Sorts `indices` first; duplicates are still rejected.
    pub fn from_unsorted(mut indices: Vec<usize>, p: usize) -> Result<Self> {
        indices.sort_unstable();
        Self::new(indices, p)
    }

    /// `{0, 1, ..., k-1}`, the lexicographically smallest support of size `k`.
    pub fn first(k: usize) -> Self {
        Self((0..k).collect())
    }

    pub(crate) fn from_sorted_unchecked(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self(indices)
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    /// Returns a new support with `j` inserted, or `None` if already present.
    pub fn with(&self, j: usize) -> Option<Self> {
        match self.0.binary_search(&j) {
            Ok(_) => None,
            Err(pos) => {
                let mut v = self.0.clone();
                v.insert(pos, j);
                Some(Self(v))
            }
        }
    }

    /// Binary indicator vector of length `p`.
    pub fn indicator(&self, p: usize) -> Vec<f64> {
        let mut s = vec![0.0; p];
        for &j in &self.0 {
            s[j] = 1.0;
        }
        s
    }
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, j) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Support::new(vec![0, 2, 5], 6).is_ok());
        assert!(Support::new(vec![0, 2, 6], 6).is_err());
        assert!(Support::new(vec![2, 2], 6).is_err());
        assert!(Support::new(vec![3, 1], 6).is_err());
        assert!(Support::new(vec![], 6).is_err());
        assert_eq!(Support::from_unsorted(vec![4, 1], 6).unwrap().indices(), &[1, 4]);
    }

    #[test]
    fn lexicographic_order() {
        let a = Support::new(vec![0, 2], 4).unwrap();
        let b = Support::new(vec![1, 2], 4).unwrap();
        assert!(a < b);
        assert!(Support::first(2) < a);
    }

    #[test]
    fn insert_and_indicator() {
        let s = Support::new(vec![1, 3], 5).unwrap();
        assert_eq!(s.with(2).unwrap().indices(), &[1, 2, 3]);
        assert!(s.with(3).is_none());
        assert_eq!(s.indicator(5), vec![0.0, 1.0, 0.0, 1.0, 0.0]);
        assert_eq!(s.to_string(), "{1,3}");
    }
}
