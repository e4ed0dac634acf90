//! Colour counts, the exact magnetisation distribution and the magnetisation
//! chain.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid_param, Result};

use super::geometry::BarycentricGeometry;
use super::PottsParams;

/// Colour counts `(n_1, n_2, n_3)` of a configuration or of a prefix of one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MagnetisationState {
    pub counts: [usize; 3],
}

impl MagnetisationState {
    pub fn new(counts: [usize; 3]) -> Self {
        Self { counts }
    }

    /// Checks `n_1 + n_2 + n_3 = m`.
    pub fn with_size(counts: [usize; 3], m: usize) -> Result<Self> {
        let s = Self { counts };
        if s.size() != m {
            return Err(invalid_param(format!("counts {counts:?} do not sum to {m}")));
        }
        Ok(s)
    }

    pub fn size(&self) -> usize {
        self.counts.iter().sum()
    }

    /// `s = n / M`. All zeros for the empty prefix.
    pub fn fractions(&self) -> [f64; 3] {
        let m = self.size();
        if m == 0 {
            return [0.0; 3];
        }
        let m = m as f64;
        self.counts.map(|n| n as f64 / m)
    }

    /// `s^{i→j}`: one spin recoloured from `i` to `j`.
    pub fn moved(&self, i: usize, j: usize) -> Option<Self> {
        if self.counts[i] == 0 || i == j {
            return None;
        }
        let mut c = self.counts;
        c[i] -= 1;
        c[j] += 1;
        Some(Self { counts: c })
    }

    /// Position in the lattice enumeration of size `size()`.
    pub fn index(&self) -> usize {
        lattice_index(self.size(), self.counts[0], self.counts[1])
    }
}

/// Number of colour-count vectors summing to `m`.
pub fn lattice_len(m: usize) -> usize {
    (m + 1) * (m + 2) / 2
}

fn lattice_offset(m: usize, n1: usize) -> usize {
    n1 * (m + 1) - n1 * n1.saturating_sub(1) / 2
}

fn lattice_index(m: usize, n1: usize, n2: usize) -> usize {
    lattice_offset(m, n1) + n2
}

/// All count vectors of size `m` in index order.
pub fn lattice_states(m: usize) -> impl Iterator<Item = MagnetisationState> {
    (0..=m).flat_map(move |n1| (0..=m - n1).map(move |n2| MagnetisationState::new([n1, n2, m - n1 - n2])))
}

/// `ln k!` for `k ≤ n`.
#[derive(Clone, Debug)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(n: usize) -> Self {
        let table = (0..=n).map(|k| ln_gamma(k as f64 + 1.0)).collect();
        Self { table }
    }

    pub fn max(&self) -> usize {
        self.table.len() - 1
    }

    pub fn ln_factorial(&self, k: usize) -> f64 {
        self.table[k]
    }

    /// `ln (M choose n_1, n_2, n_3)`.
    pub fn ln_multinomial(&self, s: &MagnetisationState) -> f64 {
        let [a, b, c] = s.counts;
        self.table[a + b + c] - self.table[a] - self.table[b] - self.table[c]
    }
}

/// Sum with Neumaier compensation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `ln Σ exp(x_i)`; `-∞` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + neumaier_sum(xs.iter().map(|x| (x - max).exp())).ln()
}

/// Exact law of the colour counts of `M` spins at inverse temperature `β̃`.
#[derive(Clone, Debug)]
pub struct MagnetisationPmf {
    m: usize,
    beta: f64,
    log_probs: Vec<f64>,
    log_partition: f64,
}

/// Exact magnetisation distribution of `params`.
pub fn magnetisation_log_pmf(params: &PottsParams) -> MagnetisationPmf {
    MagnetisationPmf::new(params.m, params.beta_tilde, &LogFactorials::new(params.m))
}

impl MagnetisationPmf {
    /// Size-`m` law using a shared factorial table (`m = 0` gives the point
    /// mass on the empty prefix).
    pub fn new(m: usize, beta: f64, lf: &LogFactorials) -> Self {
        assert!(lf.max() >= m, "factorial table too small");
        let scale = if m == 0 { 0.0 } else { beta / m as f64 };
        let mut log_probs: Vec<f64> = lattice_states(m)
            .map(|s| {
                let sq: usize = s.counts.iter().map(|n| n * n).sum();
                lf.ln_multinomial(&s) + scale * sq as f64
            })
            .collect();
        let log_partition = log_sum_exp(&log_probs);
        for lp in &mut log_probs {
            *lp -= log_partition;
        }
        Self {
            m,
            beta,
            log_probs,
            log_partition,
        }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `ln Σ_σ exp(β̃ Σ n_c² / M)` over all `3^M` spin configurations.
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn log_prob(&self, s: &MagnetisationState) -> f64 {
        debug_assert_eq!(s.size(), self.m);
        self.log_probs[s.index()]
    }

    pub fn prob(&self, s: &MagnetisationState) -> f64 {
        self.log_prob(s).exp()
    }

    /// Log-probabilities in lattice order.
    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    /// `(state, log-probability)` pairs in lattice order.
    pub fn iter(&self) -> impl Iterator<Item = (MagnetisationState, f64)> + '_ {
        lattice_states(self.m).zip(self.log_probs.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        neumaier_sum(self.log_probs.iter().map(|lp| lp.exp()))
    }

    pub fn mass_where(&self, mut pred: impl FnMut(&MagnetisationState) -> bool) -> f64 {
        neumaier_sum(self.iter().filter(|(s, _)| pred(s)).map(|(_, lp)| lp.exp()))
    }

    /// Masses of the four modes of the full configuration.
    pub fn mode_masses(&self, geometry: &BarycentricGeometry) -> [f64; 4] {
        let mut parts: [Vec<f64>; 4] = Default::default();
        for (s, lp) in self.iter() {
            parts[geometry.mode(&s)].push(lp.exp());
        }
        parts.map(neumaier_sum)
    }

    /// Masses of the four modes of the prefix of length `m − 1`, i.e. after
    /// removing the last spin. By exchangeability the removed spin has colour
    /// `c` with probability `n_c / m`.
    pub fn prefix_mode_masses(&self, geometry: &BarycentricGeometry) -> [f64; 4] {
        assert!(self.m >= 1, "no spin to remove");
        let m = self.m as f64;
        let mut parts: [Vec<f64>; 4] = Default::default();
        for (s, lp) in self.iter() {
            let p = lp.exp();
            for c in 0..3 {
                if s.counts[c] > 0 {
                    let mut prefix = s.counts;
                    prefix[c] -= 1;
                    let mode = geometry.mode(&MagnetisationState::new(prefix));
                    parts[mode].push(p * s.counts[c] as f64 / m);
                }
            }
        }
        parts.map(neumaier_sum)
    }

    /// Law of the counts after removing one uniformly chosen spin.
    pub fn remove_one(&self) -> Vec<f64> {
        assert!(self.m >= 1, "no spin to remove");
        let m = self.m as f64;
        let mut out = vec![Vec::new(); lattice_len(self.m - 1)];
        for (s, lp) in self.iter() {
            let p = lp.exp();
            for c in 0..3 {
                if s.counts[c] > 0 {
                    let mut prefix = s.counts;
                    prefix[c] -= 1;
                    out[MagnetisationState::new(prefix).index()].push(p * s.counts[c] as f64 / m);
                }
            }
        }
        out.into_iter().map(neumaier_sum).collect()
    }
}

/// One step of the magnetisation chain induced by Glauber dynamics: a
/// uniformly chosen spin of colour `i` turns to colour `j` with probability
///
/// `P_{i→j}(s) = s_i e^{2β̃ s_j} / (e^{−2β̃/M + 2β̃ s_i} + e^{2β̃ s_j} + e^{2β̃ s_k})`.
///
/// Returns the moves `s^{i→j}` with positive count `n_i` in the order
/// `(i, j)` lexicographic, followed by the stay probability.
pub fn magnetisation_transitions(s: &MagnetisationState, beta_tilde: f64) -> Vec<(MagnetisationState, f64)> {
    let m = s.size();
    transitions_with_self_shift(s, beta_tilde, -2.0 * beta_tilde / m.max(1) as f64)
}

pub(crate) fn transitions_with_self_shift(
    s: &MagnetisationState,
    beta: f64,
    self_shift: f64,
) -> Vec<(MagnetisationState, f64)> {
    let m = s.size();
    let mut out = Vec::with_capacity(7);
    if m == 0 {
        out.push((*s, 1.0));
        return out;
    }
    let f = s.fractions();
    let e = f.map(|x| (2.0 * beta * x).exp());
    let mut moved = Vec::with_capacity(6);
    for i in 0..3 {
        if s.counts[i] == 0 {
            continue;
        }
        let denom = (self_shift + 2.0 * beta * f[i]).exp() + (0..3).filter(|&c| c != i).map(|c| e[c]).sum::<f64>();
        for j in 0..3 {
            if j != i {
                moved.push((s.moved(i, j).unwrap(), f[i] * e[j] / denom));
            }
        }
    }
    let stay = (1.0 - neumaier_sum(moved.iter().map(|(_, p)| *p))).max(0.0);
    out.extend(moved);
    out.push((*s, stay));
    out
}
