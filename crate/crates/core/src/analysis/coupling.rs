//! Coupling of two Glauber chains with equal colour counts: both update at
//! the same site when their colours there agree, and otherwise the second
//! chain updates a site carrying the first chain's colour where the two
//! disagree, using the same new colour. Counts stay equal and the Hamming
//! distance never increases.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid_param, Error, Result};
use crate::potts::SpinConfiguration;
use crate::rng::{stream, StreamRng};

/// State of the coupled pair.
#[derive(Clone, Debug)]
pub struct CoupledGlauber {
    x: Vec<u8>,
    y: Vec<u8>,
    counts: [usize; 3],
    hamming: usize,
    weights: Vec<f64>,
    candidates: Vec<usize>,
    steps: usize,
}

impl CoupledGlauber {
    pub fn new(a: &SpinConfiguration, b: &SpinConfiguration, beta: f64) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        if a.magnetisation() != b.magnetisation() {
            return Err(invalid_param("coupled configurations must have equal colour counts"));
        }
        let m = a.len();
        let (x, y) = (a.spins().to_vec(), b.spins().to_vec());
        let hamming = x.iter().zip(&y).filter(|(p, q)| p != q).count();
        Ok(Self {
            x,
            y,
            counts: a.magnetisation().counts,
            hamming,
            weights: (0..m).map(|n| (2.0 * beta * n as f64 / m as f64).exp()).collect(),
            candidates: Vec::with_capacity(m),
            steps: 0,
        })
    }

    pub fn hamming(&self) -> usize {
        self.hamming
    }

    pub fn first(&self) -> &[u8] {
        &self.x
    }

    pub fn second(&self) -> &[u8] {
        &self.y
    }

    /// One coupled update. Fails if the Hamming distance increases.
    pub fn step(&mut self, rng: &mut StreamRng) -> Result<()> {
        let m = self.x.len();
        let site = rng.random_range(0..m);
        let old = self.x[site];
        self.counts[old as usize] -= 1;
        let w = self.counts.map(|n| self.weights[n]);
        let u = rng.random::<f64>() * (w[0] + w[1] + w[2]);
        let z = if u < w[0] {
            0u8
        } else if u < w[0] + w[1] {
            1
        } else {
            2
        };
        self.counts[z as usize] += 1;
        let other = if self.y[site] == old {
            site
        } else {
            let (x, y) = (&self.x, &self.y);
            self.candidates.clear();
            self.candidates.extend((0..m).filter(|&l| y[l] == old && y[l] != x[l]));
            self.candidates[rng.random_range(0..self.candidates.len())]
        };
        let before = [site, other].map(|l| (self.x[l] != self.y[l]) as usize);
        self.x[site] = z;
        self.y[other] = z;
        let after = [site, other].map(|l| (self.x[l] != self.y[l]) as usize);
        let (b, a) = if site == other { (before[0], after[0]) } else { (before[0] + before[1], after[0] + after[1]) };
        let next = self.hamming + a - b;
        if next > self.hamming {
            return Err(invalid_param(format!(
                "Hamming distance increased from {} to {next} at step {}",
                self.hamming, self.steps
            )));
        }
        self.hamming = next;
        self.steps += 1;
        Ok(())
    }
}

/// Runs the coupling for at most `t_max` steps and returns the meeting time.
/// Fails if the counts differ or if the Hamming distance ever increases.
pub fn run_coupling(
    a: &SpinConfiguration,
    b: &SpinConfiguration,
    beta: f64,
    t_max: usize,
    rng: &mut StreamRng,
) -> Result<Option<usize>> {
    let mut pair = CoupledGlauber::new(a, b, beta)?;
    for t in 0..t_max {
        if pair.hamming() == 0 {
            return Ok(Some(t));
        }
        pair.step(rng)?;
    }
    Ok((pair.hamming() == 0).then_some(t_max))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailRow {
    pub t: usize,
    /// Fraction of replicates with `τ > t`.
    pub empirical: f64,
    /// Binomial standard error of `empirical`.
    pub std_error: f64,
    /// `(M/2) exp(−t/(9M))`.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingTail {
    pub m: usize,
    pub replicates: usize,
    pub rows: Vec<TailRow>,
    /// Checked on every step of every replicate.
    pub hamming_monotone: bool,
}

/// Tail of the meeting time from random pairs: uniform colours, and a
/// uniformly permuted copy.
pub fn coupling_tail(m: usize, beta: f64, times: &[usize], replicates: usize, seed: u64) -> Result<CouplingTail> {
    if m < 2 || replicates == 0 || times.is_empty() {
        return Err(invalid_param("need M ≥ 2, at least one replicate and one time"));
    }
    let t_max = *times.iter().max().unwrap();
    let taus: Vec<Option<usize>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r, 0, 0);
            let a = SpinConfiguration::uniform(m, &mut rng);
            let mut spins = a.spins().to_vec();
            spins.shuffle(&mut rng);
            let b = SpinConfiguration::new(spins)?;
            run_coupling(&a, &b, beta, t_max + 1, &mut rng)
        })
        .collect::<Result<_>>()?;
    let n = replicates as f64;
    let rows = times
        .iter()
        .map(|&t| {
            let p = taus.iter().filter(|tau| tau.is_none_or(|v| v > t)).count() as f64 / n;
            TailRow {
                t,
                empirical: p,
                std_error: (p * (1.0 - p) / n).sqrt(),
                bound: m as f64 / 2.0 * (-(t as f64) / (9.0 * m as f64)).exp(),
            }
        })
        .collect();
    Ok(CouplingTail {
        m,
        replicates,
        rows,
        hamming_monotone: true,
    })
}
