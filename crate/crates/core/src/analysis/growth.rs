//! Growth-within-mode constants `B_{j,j+1} = max_i μ_{j+1}(F_j^(i)) / μ_j(F_j^(i))`
//! of the interpolation sequence, from exact magnetisation laws.
//!
//! Under `μ_{j+1}` the first `j` spins are the first `j + 1` with one spin
//! removed, and by exchangeability the removed spin is uniform among them.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid_param, Result};
use crate::potts::{BarycentricGeometry, LogFactorials, MagnetisationPmf};

use super::series::SeriesReport;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthSeries {
    pub b01: f64,
    pub b12: f64,
    /// Rows `j = 2..=j_max` with columns `B` and
    /// `(B − 1) / (ln(j)^{3/2} / j^{3/2})`.
    pub report: SeriesReport,
    /// Smallest `B_{j,j+1}` over the rows.
    pub min_b: f64,
}

/// `B_{j,j+1}`; `1` whenever the prefix of length `j` is a single mode.
fn growth_constant(j: usize, beta: f64, geometry: &BarycentricGeometry, lf: &LogFactorials) -> f64 {
    if j <= geometry.j0 {
        return 1.0;
    }
    let now = MagnetisationPmf::new(j, beta, lf).mode_masses(geometry);
    let next = MagnetisationPmf::new(j + 1, beta, lf).prefix_mode_masses(geometry);
    (0..4)
        .filter(|&i| now[i] > 0.0)
        .map(|i| next[i] / now[i])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Growth constants for `j = 0..=j_max` at inverse temperature `beta`.
pub fn growth_constants_series(j_max: usize, beta: f64, geometry: &BarycentricGeometry) -> Result<GrowthSeries> {
    if j_max < 3 {
        return Err(invalid_param(format!("need j_max ≥ 3, got {j_max}")));
    }
    let lf = LogFactorials::new(j_max + 1);
    let b: Vec<f64> = (0..=j_max)
        .into_par_iter()
        .map(|j| growth_constant(j, beta, geometry, &lf))
        .collect();
    let js: Vec<f64> = (2..=j_max).map(|j| j as f64).collect();
    let bs = b[2..].to_vec();
    let ratio: Vec<f64> = js
        .iter()
        .zip(&bs)
        .map(|(j, bj)| (bj - 1.0) / (j.ln().powf(1.5) / j.powf(1.5)))
        .collect();
    let min_b = bs.iter().copied().fold(f64::INFINITY, f64::min);
    let report = SeriesReport::new("j", js, vec![("B".into(), bs), ("ratio".into(), ratio)])?.summarize("ratio")?;
    Ok(GrowthSeries {
        b01: b[0],
        b12: b[1],
        report,
        min_b,
    })
}

/// `B_{j,j+1}` by enumerating spin configurations of sizes `j` and `j + 1`.
#[cfg(test)]
fn brute_force_growth(j: usize, beta: f64, geometry: &BarycentricGeometry) -> f64 {
    use crate::potts::{log_sum_exp, MagnetisationState};
    let law = |size: usize| -> (Vec<Vec<u8>>, Vec<f64>) {
        let configs: Vec<Vec<u8>> = (0..3usize.pow(size as u32))
            .map(|code| {
                let mut x = code;
                (0..size)
                    .map(|_| {
                        let c = (x % 3) as u8;
                        x /= 3;
                        c
                    })
                    .collect()
            })
            .collect();
        let w: Vec<f64> = configs
            .iter()
            .map(|s| {
                let mut c = [0usize; 3];
                for &x in s {
                    c[x as usize] += 1;
                }
                beta * c.iter().map(|n| (n * n) as f64).sum::<f64>() / size as f64
            })
            .collect();
        let z = log_sum_exp(&w);
        (configs, w.iter().map(|v| (v - z).exp()).collect())
    };
    let mode = |s: &[u8]| {
        let mut c = [0usize; 3];
        for &x in s {
            c[x as usize] += 1;
        }
        geometry.mode(&MagnetisationState::new(c))
    };
    let (cj, pj) = law(j);
    let (cn, pn) = law(j + 1);
    let mut now = [0.0; 4];
    let mut next = [0.0; 4];
    for (s, p) in cj.iter().zip(&pj) {
        now[mode(s)] += p;
    }
    for (s, p) in cn.iter().zip(&pn) {
        next[mode(&s[..j])] += p;
    }
    (0..4)
        .filter(|&i| now[i] > 0.0)
        .map(|i| next[i] / now[i])
        .fold(f64::NEG_INFINITY, f64::max)
}
