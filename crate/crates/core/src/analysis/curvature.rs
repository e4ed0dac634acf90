//! Coarse Ricci curvature of the magnetisation chain restricted to `Λ^(m)`,
//! for neighbouring states under the lattice distance
//! `d_Λ(x, y) = ½ Σ |n_i(x) − n_i(y)|`.

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid_param, Result};
use crate::potts::{magnetisation_transitions, BarycentricGeometry, MagnetisationState};
use crate::rng::stream;

use super::transport::{solve_transport, TransportInstance};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairSelection {
    /// Every neighbouring pair of the region.
    Exhaustive,
    /// `count` pairs: a uniform state of the region and a uniform direction
    /// among those staying in the region.
    Sampled { count: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub m: usize,
    pub rho: f64,
    pub mode: usize,
    pub region_size: usize,
    pub pairs: usize,
    /// `M · min κ`.
    pub min_scaled_kappa: f64,
    pub witness: (MagnetisationState, MagnetisationState),
}

/// Transition law of the magnetisation chain with every move leaving
/// `Λ^(mode)` replaced by staying put.
pub fn restricted_transitions(
    s: &MagnetisationState,
    beta: f64,
    geometry: &BarycentricGeometry,
    mode: usize,
) -> Vec<(MagnetisationState, f64)> {
    let all = magnetisation_transitions(s, beta);
    let mut out = Vec::with_capacity(all.len());
    let mut stay = 0.0;
    for (t, p) in all {
        if t == *s || !geometry.in_lambda(&t, mode) {
            stay += p;
        } else {
            out.push((t, p));
        }
    }
    out.push((*s, stay));
    out
}

fn lattice_distance(a: &MagnetisationState, b: &MagnetisationState) -> f64 {
    (0..3).map(|i| a.counts[i].abs_diff(b.counts[i])).sum::<usize>() as f64 / 2.0
}

/// `W_1` between two laws on the lattice under `d_Λ`.
fn lattice_w1(px: &[(MagnetisationState, f64)], py: &[(MagnetisationState, f64)]) -> Result<f64> {
    let cost = px
        .iter()
        .map(|(a, _)| py.iter().map(|(b, _)| lattice_distance(a, b)).collect())
        .collect();
    let inst = TransportInstance {
        supply: px.iter().map(|(_, p)| *p).collect(),
        demand: py.iter().map(|(_, p)| *p).collect(),
        cost,
    };
    Ok(solve_transport(&inst)?.cost)
}

/// `κ(x, y) = 1 − W_1(P(x, ·), P(y, ·)) / d_Λ(x, y)`.
fn kappa(x: &MagnetisationState, y: &MagnetisationState, beta: f64, geometry: &BarycentricGeometry, mode: usize) -> Result<f64> {
    let px = restricted_transitions(x, beta, geometry, mode);
    let py = restricted_transitions(y, beta, geometry, mode);
    Ok(1.0 - lattice_w1(&px, &py)? / lattice_distance(x, y))
}

/// Smallest curvature over neighbouring pairs of `Λ^(mode)` at size `m`.
pub fn curvature_check(
    m: usize,
    beta: f64,
    geometry: &BarycentricGeometry,
    mode: usize,
    selection: PairSelection,
) -> Result<CurvatureReport> {
    if mode > 3 {
        return Err(invalid_param(format!("mode {mode} out of range 0..4")));
    }
    let region = geometry.lambda_states(m, mode);
    let neighbours = |x: &MagnetisationState| -> Vec<MagnetisationState> {
        (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .filter_map(|(i, j)| x.moved(i, j))
            .filter(|y| geometry.in_lambda(y, mode))
            .collect()
    };
    let pairs: Vec<(MagnetisationState, MagnetisationState)> = match selection {
        PairSelection::Exhaustive => region
            .iter()
            .flat_map(|x| neighbours(x).into_iter().map(move |y| (*x, y)))
            .collect(),
        PairSelection::Sampled { count, seed } => {
            let mut rng = stream(seed, 0, 0, 0);
            let mut out = Vec::with_capacity(count);
            if region.iter().any(|x| !neighbours(x).is_empty()) {
                while out.len() < count {
                    let x = region[rng.random_range(0..region.len())];
                    let ys = neighbours(&x);
                    if !ys.is_empty() {
                        out.push((x, ys[rng.random_range(0..ys.len())]));
                    }
                }
            }
            out
        }
    };
    if pairs.is_empty() {
        return Err(invalid_param(format!(
            "region Λ^({mode}) at M = {m}, ρ = {} has {} states and no neighbouring pair",
            geometry.rho,
            region.len()
        )));
    }
    let mut worst = (f64::INFINITY, pairs[0]);
    for (x, y) in &pairs {
        let k = kappa(x, y, beta, geometry, mode)?;
        if k < worst.0 {
            worst = (k, (*x, *y));
        }
    }
    Ok(CurvatureReport {
        m,
        rho: geometry.rho,
        mode,
        region_size: region.len(),
        pairs: pairs.len(),
        min_scaled_kappa: worst.0 * m as f64,
        witness: worst.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potts::BETA_C;

    #[test]
    fn restricted_law_is_stochastic_and_stays_inside() {
        let g = BarycentricGeometry::new(0.02, 0).unwrap();
        for s in g.lambda_states(300, 3) {
            let p = restricted_transitions(&s, BETA_C, &g, 3);
            assert!((p.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|(t, _)| g.in_lambda(t, 3)));
        }
    }

    #[test]
    fn shifted_law_has_zero_curvature() {
        // A law and its translate by a lattice edge are exactly one apart:
        // n_1 is 1-Lipschitz for d_Λ and its mean moves by one.
        let g = BarycentricGeometry::new(0.3, 0).unwrap();
        let x = MagnetisationState::new([400, 300, 300]);
        let y = x.moved(1, 0).unwrap();
        let px = restricted_transitions(&x, BETA_C, &g, 3);
        let py: Vec<(MagnetisationState, f64)> = px.iter().map(|(s, p)| (s.moved(1, 0).unwrap(), *p)).collect();
        let w1 = lattice_w1(&px, &py).unwrap();
        assert!((w1 - 1.0).abs() < 1e-15);
        assert!((1.0 - w1 / lattice_distance(&x, &y)).abs() < 1e-15);
    }

    #[test]
    fn small_region_is_rejected() {
        let g = BarycentricGeometry::new(1e-6, 0).unwrap();
        assert!(curvature_check(100, BETA_C, &g, 3, PairSelection::Exhaustive).is_err());
    }

    #[test]
    fn sampled_and_exhaustive_agree_on_a_small_region() {
        let g = BarycentricGeometry::new(1e-4, 0).unwrap();
        let ex = curvature_check(200_000, BETA_C, &g, 0, PairSelection::Exhaustive).unwrap();
        let sa = curvature_check(200_000, BETA_C, &g, 0, PairSelection::Sampled { count: 2000, seed: 1 }).unwrap();
        assert!(sa.min_scaled_kappa >= ex.min_scaled_kappa - 1e-9);
        assert!(ex.pairs > 0);
    }
}
