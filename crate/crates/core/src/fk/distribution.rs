use crate::error::{Error, Result};

/// Tolerance on `|Σ w − 1|` accepted by [`FiniteDistribution::new`].
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A probability vector over the states `0..len`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDistribution {
    weights: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("no states".into()));
        }
        if let Some((x, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "weight {w} at state {x}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}"
            )));
        }
        Ok(Self { weights })
    }

    /// Normalizes a nonnegative vector with positive total.
    pub fn from_unnormalized(mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "total mass {total}"
            )));
        }
        for w in &mut weights {
            *w /= total;
        }
        Self::new(weights)
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution needs at least one state");
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, x: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[x] = 1.0;
        Self { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn prob(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.weights[x] > 0.0).collect()
    }

    /// `Σ_x μ(x) f(x)`; states of zero mass are skipped, so `f` may be
    /// non-finite there.
    pub fn expectation(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        self.weights
            .iter()
            .zip(f)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, v)| w * v)
            .sum()
    }

    pub fn variance(&self, f: &[f64]) -> f64 {
        let mean = self.expectation(f);
        self.weights
            .iter()
            .zip(f)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, v)| w * (v - mean) * (v - mean))
            .sum()
    }

    pub fn mass_of(&self, states: impl IntoIterator<Item = usize>) -> f64 {
        states.into_iter().map(|x| self.weights[x]).sum()
    }

    /// The conditional law given `cell`, as a distribution on the full state
    /// set.
    pub fn conditioned_on(&self, cell: &[usize]) -> Result<Self> {
        let mass = self.mass_of(cell.iter().copied());
        if mass <= 0.0 {
            return Err(Error::EmptySupport);
        }
        let mut weights = vec![0.0; self.len()];
        for &x in cell {
            weights[x] = self.weights[x] / mass;
        }
        Ok(Self { weights })
    }

    /// Total variation distance to an arbitrary nonnegative vector.
    pub fn tv_distance(&self, other: &[f64]) -> f64 {
        0.5 * self
            .weights
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_weights() {
        assert!(FiniteDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(FiniteDistribution::new(vec![1.5, -0.5]).is_err());
        assert!(FiniteDistribution::new(vec![f64::NAN, 1.0]).is_err());
        assert!(FiniteDistribution::new(vec![]).is_err());
        assert!(FiniteDistribution::from_unnormalized(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn moments() {
        let mu = FiniteDistribution::new(vec![0.25, 0.75]).unwrap();
        assert!((mu.expectation(&[1.0, 3.0]) - 2.5).abs() < 1e-15);
        assert!((mu.variance(&[1.0, 3.0]) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn zero_mass_states_are_ignored() {
        let mu = FiniteDistribution::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(mu.expectation(&[2.0, f64::NAN]), 2.0);
        assert_eq!(mu.variance(&[2.0, f64::INFINITY]), 0.0);
    }

    #[test]
    fn conditioning() {
        let mu = FiniteDistribution::new(vec![0.1, 0.3, 0.6]).unwrap();
        let c = mu.conditioned_on(&[0, 1]).unwrap();
        assert!((c.prob(0) - 0.25).abs() < 1e-15);
        assert_eq!(c.prob(2), 0.0);
    }
}
