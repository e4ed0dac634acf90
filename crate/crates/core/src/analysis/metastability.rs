//! Hitting and escape times of the magnetisation chain, simulated directly on
//! the lattice of colour counts.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid_param, Result};
use crate::potts::{center_distance, MagnetisationState, CENTERS};
use crate::rng::{stream, StreamRng};

use super::series::{linear_fit, LinearFit};

/// The colour-count image of single-site Glauber dynamics: a site of colour
/// `i` is picked with probability `n_i/M` and recoloured with probability
/// proportional to `exp(2β̃ n'_c / M)`, `n'` being the counts without it.
#[derive(Clone, Debug)]
pub struct MagnetisationChain {
    counts: [usize; 3],
    weights: Vec<f64>,
}

impl MagnetisationChain {
    pub fn new(start: MagnetisationState, beta: f64) -> Result<Self> {
        let m = start.size();
        if m == 0 {
            return Err(invalid_param("the chain needs at least one spin"));
        }
        Ok(Self {
            counts: start.counts,
            weights: (0..m).map(|n| (2.0 * beta * n as f64 / m as f64).exp()).collect(),
        })
    }

    pub fn state(&self) -> MagnetisationState {
        MagnetisationState::new(self.counts)
    }

    pub fn distance_to_centres(&self) -> f64 {
        center_distance(&self.state().fractions()).0
    }

    pub fn step(&mut self, rng: &mut StreamRng) {
        let m = self.weights.len();
        let mut pick = rng.random_range(0..m);
        let mut old = 0;
        while pick >= self.counts[old] {
            pick -= self.counts[old];
            old += 1;
        }
        self.counts[old] -= 1;
        let w = self.counts.map(|n| self.weights[n]);
        let u = rng.random::<f64>() * (w[0] + w[1] + w[2]);
        let new = if u < w[0] {
            0
        } else if u < w[0] + w[1] {
            1
        } else {
            2
        };
        self.counts[new] += 1;
    }
}

/// Lattice state of size `m` closest to `s` (largest-remainder rounding).
pub(crate) fn nearest_state(s: &[f64; 3], m: usize) -> MagnetisationState {
    let raw = s.map(|x| x * m as f64);
    let mut counts = raw.map(|x| x.floor() as usize);
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())));
    let mut missing = m - counts.iter().sum::<usize>().min(m);
    for &i in order.iter().cycle() {
        if missing == 0 {
            break;
        }
        counts[i] += 1;
        missing -= 1;
    }
    MagnetisationState::new(counts)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HittingReport {
    pub m: usize,
    pub rho: f64,
    pub start: MagnetisationState,
    pub replicates: usize,
    /// Runs stopped at `step_cap` without hitting; counted as `step_cap`.
    pub censored: usize,
    pub step_cap: usize,
    pub median: f64,
    pub q90: f64,
    pub q99: f64,
    pub mean: f64,
    /// `median / (M ln M)`.
    pub scaled_median: f64,
}

/// First time `d_C ≤ ρ/2`. The start defaults to the edge midpoint
/// `(1/2, 1/2, 0)`.
pub fn hitting_experiment(
    m: usize,
    beta: f64,
    rho: f64,
    start: Option<MagnetisationState>,
    replicates: usize,
    step_cap: usize,
    seed: u64,
) -> Result<HittingReport> {
    if m < 2 || replicates == 0 || !(rho > 0.0) {
        return Err(invalid_param("need M ≥ 2, ρ > 0 and at least one replicate"));
    }
    let start = match start {
        Some(s) if s.size() != m => {
            return Err(invalid_param(format!("start has {} spins, expected {m}", s.size())));
        }
        Some(s) => s,
        None => nearest_state(&[0.5, 0.5, 0.0], m),
    };
    let target = rho / 2.0;
    let times: Vec<Option<usize>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r, 0, 0);
            let mut chain = MagnetisationChain::new(start, beta)?;
            for t in 0..=step_cap {
                if chain.distance_to_centres() <= target {
                    return Ok(Some(t));
                }
                chain.step(&mut rng);
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    let censored = times.iter().filter(|t| t.is_none()).count();
    let mut sorted: Vec<f64> = times.iter().map(|t| t.unwrap_or(step_cap) as f64).collect();
    sorted.sort_by(f64::total_cmp);
    let median = quantile(&sorted, 0.5);
    let mf = m as f64;
    Ok(HittingReport {
        m,
        rho,
        start,
        replicates,
        censored,
        step_cap,
        median,
        q90: quantile(&sorted, 0.9),
        q99: quantile(&sorted, 0.99),
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        scaled_median: median / (mf * mf.ln()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HittingScaling {
    pub reports: Vec<HittingReport>,
    /// Median against `M ln M`.
    pub fit: LinearFit,
}

/// Hitting medians over a grid of sizes with a cap of `cap_factor · M ln M`
/// steps each.
pub fn hitting_scaling(
    grid: &[usize],
    beta: f64,
    rho: f64,
    replicates: usize,
    cap_factor: f64,
    seed: u64,
) -> Result<HittingScaling> {
    if grid.len() < 2 {
        return Err(invalid_param("need at least two sizes"));
    }
    let reports = grid
        .iter()
        .map(|&m| {
            let mf = m as f64;
            let cap = (cap_factor * mf * mf.ln()).ceil() as usize;
            hitting_experiment(m, beta, rho, None, replicates, cap, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = grid.iter().map(|&m| m as f64 * (m as f64).ln()).collect();
    let y: Vec<f64> = reports.iter().map(|r| r.median).collect();
    Ok(HittingScaling {
        fit: linear_fit(&x, &y)?,
        reports,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EscapeReport {
    pub m: usize,
    pub rho: f64,
    pub centre: usize,
    pub start: MagnetisationState,
    pub steps: usize,
    pub replicates: usize,
    /// Runs in which `d_C > ρ√3` at some step.
    pub escapes: usize,
    pub escape_fraction: f64,
    /// Median first escape time among escaping runs.
    pub median_escape_time: Option<f64>,
    /// `l² exp(−0.005 ρ² M)`.
    pub bound: f64,
}

/// Runs from the lattice state nearest `C_centre` for `steps` steps.
pub fn escape_experiment(
    m: usize,
    beta: f64,
    rho: f64,
    centre: usize,
    steps: usize,
    replicates: usize,
    seed: u64,
) -> Result<EscapeReport> {
    if centre >= 4 || replicates == 0 || !(rho > 0.0) || m == 0 {
        return Err(invalid_param("need a centre in 0..4, ρ > 0, M ≥ 1 and at least one replicate"));
    }
    let start = nearest_state(&CENTERS[centre], m);
    let sqrt3 = 3f64.sqrt();
    let d0 = center_distance(&start.fractions()).0;
    if d0 > rho * sqrt3 / 2.0 {
        return Err(invalid_param(format!(
            "no lattice state within ρ√3/2 of the centre at M = {m}, ρ = {rho} (closest is {d0})"
        )));
    }
    let limit = rho * sqrt3;
    let exits: Vec<Option<usize>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r, 0, 0);
            let mut chain = MagnetisationChain::new(start, beta)?;
            for t in 1..=steps {
                chain.step(&mut rng);
                if chain.distance_to_centres() > limit {
                    return Ok(Some(t));
                }
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    let mut times: Vec<f64> = exits.iter().flatten().map(|&t| t as f64).collect();
    times.sort_by(f64::total_cmp);
    let escapes = times.len();
    let l = steps as f64;
    Ok(EscapeReport {
        m,
        rho,
        centre,
        start,
        steps,
        replicates,
        escapes,
        escape_fraction: escapes as f64 / replicates as f64,
        median_escape_time: (!times.is_empty()).then(|| quantile(&times, 0.5)),
        bound: l * l * (-0.005 * rho * rho * m as f64).exp(),
    })
}
