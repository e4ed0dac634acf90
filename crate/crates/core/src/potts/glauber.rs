//! Spin configurations and single-site heat-bath (Glauber) updates.

use rand::Rng;

use crate::error::{invalid_param, Result};
use crate::rng::StreamRng;

use super::lattice::MagnetisationState;

/// Colours `0, 1, 2` of `M` spins.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    spins: Vec<u8>,
}

impl SpinConfiguration {
    pub fn new(spins: Vec<u8>) -> Result<Self> {
        if spins.is_empty() {
            return Err(invalid_param("configuration needs at least one spin"));
        }
        if let Some(&c) = spins.iter().find(|&&c| c > 2) {
            return Err(invalid_param(format!("colour {c} out of range 0..3")));
        }
        Ok(Self { spins })
    }

    /// Independent uniform colours.
    pub fn uniform(m: usize, rng: &mut StreamRng) -> Self {
        Self {
            spins: (0..m).map(|_| rng.random_range(0..3u8)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn spins(&self) -> &[u8] {
        &self.spins
    }

    pub(crate) fn spins_mut(&mut self) -> &mut [u8] {
        &mut self.spins
    }

    /// Counts of the first `k` spins.
    pub fn prefix_counts(&self, k: usize) -> [usize; 3] {
        let mut c = [0usize; 3];
        for &s in &self.spins[..k] {
            c[s as usize] += 1;
        }
        c
    }

    pub fn magnetisation(&self) -> MagnetisationState {
        MagnetisationState::new(self.prefix_counts(self.len()))
    }
}

/// Heat-bath weights `exp(2β̃ n / k)` for updates confined to the first `k`
/// spins, indexed by the count `n` of the proposed colour among the other
/// `k − 1` spins.
#[derive(Clone, Debug)]
pub struct GlauberTable {
    k: usize,
    weights: Vec<f64>,
}

impl GlauberTable {
    pub fn new(k: usize, beta: f64) -> Self {
        assert!(k >= 1, "Glauber update needs at least one spin");
        let weights = (0..k).map(|n| (2.0 * beta * n as f64 / k as f64).exp()).collect();
        Self { k, weights }
    }

    pub fn block_len(&self) -> usize {
        self.k
    }

    /// Updates one uniformly chosen spin among `spins[..k]`, keeping `counts`
    /// (the colour counts of that prefix) current. Returns the site.
    pub fn step(&self, spins: &mut [u8], counts: &mut [usize; 3], rng: &mut StreamRng) -> usize {
        let site = rng.random_range(0..self.k);
        let old = spins[site] as usize;
        counts[old] -= 1;
        let w = counts.map(|n| self.weights[n]);
        let u = rng.random::<f64>() * (w[0] + w[1] + w[2]);
        let new = if u < w[0] {
            0
        } else if u < w[0] + w[1] {
            1
        } else {
            2
        };
        counts[new] += 1;
        spins[site] = new as u8;
        site
    }
}

/// One heat-bath update of the whole configuration at inverse temperature
/// `beta`: a uniform site is redrawn from its conditional law given the other
/// spins. Returns the site.
pub fn glauber_step(sigma: &mut SpinConfiguration, beta: f64, rng: &mut StreamRng) -> usize {
    let m = sigma.len();
    let mut counts = sigma.prefix_counts(m);
    let site = rng.random_range(0..m);
    let old = sigma.spins[site] as usize;
    counts[old] -= 1;
    let w = counts.map(|n| (2.0 * beta * n as f64 / m as f64).exp());
    let u = rng.random::<f64>() * (w[0] + w[1] + w[2]);
    let new = if u < w[0] {
        0
    } else if u < w[0] + w[1] {
        1
    } else {
        2
    };
    sigma.spins[site] = new as u8;
    site
}
