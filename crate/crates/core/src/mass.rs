//! Ranked mass sequences: nonincreasing nonnegative masses summing to at most one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedMassSequence {
    masses: Vec<f64>,
}

impl RankedMassSequence {
    /// Validates an already ranked sequence.
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.iter().any(|m| !(*m >= 0.0 && *m <= 1.0)) {
            return Err(Error::invalid("masses", "entries must lie in [0, 1]"));
        }
        if masses.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid("masses", "sequence is not nonincreasing"));
        }
        let sum: f64 = masses.iter().sum();
        if sum > 1.0 + SUM_SLACK {
            return Err(Error::invalid("masses", format!("total {sum} exceeds 1")));
        }
        Ok(RankedMassSequence { masses })
    }

    /// Sorts and validates.
    pub fn from_unsorted(mut masses: Vec<f64>) -> Result<Self> {
        masses.sort_by(|a, b| b.total_cmp(a));
        Self::new(masses)
    }

    pub fn empty() -> Self {
        RankedMassSequence { masses: Vec::new() }
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn largest(&self) -> f64 {
        self.masses.first().copied().unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(RankedMassSequence::new(vec![0.5, 0.3, 0.2]).is_ok());
        assert!(RankedMassSequence::new(vec![0.3, 0.5]).is_err());
        assert!(RankedMassSequence::new(vec![0.7, 0.6]).is_err());
        assert!(RankedMassSequence::new(vec![-0.1]).is_err());
        let s = RankedMassSequence::from_unsorted(vec![0.1, 0.6, 0.3]).unwrap();
        assert_eq!(s.masses(), &[0.6, 0.3, 0.1]);
        assert_eq!(RankedMassSequence::empty().largest(), 0.0);
    }
}
