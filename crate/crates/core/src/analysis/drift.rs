//! One-step drift and jump variance of `d_C` under the magnetisation chain,
//! computed exactly from the transition law at every lattice state.

use serde::Serialize;

use crate::error::{invalid_param, Result};
use crate::potts::{center_distance, drift_phi, lattice_states, magnetisation_transitions, MagnetisationState};

/// `E[d_C(S(1)) − d_C(s)]` and `Var(d_C(S(1)))` from `s`.
fn jump_moments(s: &MagnetisationState, beta: f64) -> (f64, f64) {
    let d0 = center_distance(&s.fractions()).0;
    let mut mean = 0.0;
    let mut second = 0.0;
    for (t, p) in magnetisation_transitions(s, beta) {
        let delta = center_distance(&t.fractions()).0 - d0;
        mean += p * delta;
        second += p * delta * delta;
    }
    (mean, (second - mean * mean).max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftReport {
    pub m: usize,
    /// States with `d_C > 1/M`.
    pub states_checked: usize,
    pub violations: usize,
    /// Largest `E[Δd_C] − (−φ(d_C)/M + (8 + 1/(2(d_C − 1/M)))/M²)`.
    pub worst_slack: f64,
    pub witness: MagnetisationState,
    /// `(state, d_C, expected drift, bound, slack)` per checked state.
    pub rows: Vec<(MagnetisationState, f64, f64, f64, f64)>,
}

/// Checks the drift bound at every state of the size-`m` lattice that lies
/// farther than `1/M` from the centres.
pub fn drift_verify(m: usize, beta: f64) -> Result<DriftReport> {
    if m < 12 {
        return Err(invalid_param(format!("drift check needs M ≥ 12, got {m}")));
    }
    let mf = m as f64;
    let mut rows = Vec::new();
    for s in lattice_states(m) {
        let d = center_distance(&s.fractions()).0;
        if d <= 1.0 / mf {
            continue;
        }
        let (drift, _) = jump_moments(&s, beta);
        let bound = -drift_phi(d) / mf + (8.0 + 1.0 / (2.0 * (d - 1.0 / mf))) / (mf * mf);
        rows.push((s, d, drift, bound, drift - bound));
    }
    let worst = rows
        .iter()
        .max_by(|a, b| a.4.partial_cmp(&b.4).unwrap())
        .ok_or_else(|| invalid_param("no state farther than 1/M from the centres"))?;
    Ok(DriftReport {
        m,
        states_checked: rows.len(),
        violations: rows.iter().filter(|r| r.4 > 0.0).count(),
        worst_slack: worst.4,
        witness: worst.0,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpVarianceReport {
    pub m: usize,
    /// `M² · min_s Var(d_C(S(1)) | S(0) = s)`.
    pub min_scaled_variance: f64,
    pub argmin: MagnetisationState,
}

pub fn jump_variance_min(m: usize, beta: f64) -> Result<JumpVarianceReport> {
    if m == 0 {
        return Err(invalid_param("need M ≥ 1"));
    }
    let mf = m as f64;
    let (v, s) = lattice_states(m)
        .map(|s| (jump_moments(&s, beta).1, s))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .expect("lattice is non-empty");
    Ok(JumpVarianceReport {
        m,
        min_scaled_variance: v * mf * mf,
        argmin: s,
    })
}

/// Smallest `M` of the grid from which on every tested size satisfies
/// `M² · min Var ≥ v_min`, with the per-size reports. `None` when the
/// largest size fails.
pub fn jump_variance_floor(grid: &[usize], beta: f64, v_min: f64) -> Result<(Option<usize>, Vec<JumpVarianceReport>)> {
    let mut sizes = grid.to_vec();
    sizes.sort_unstable();
    let reports: Vec<JumpVarianceReport> = sizes
        .iter()
        .map(|&m| jump_variance_min(m, beta))
        .collect::<Result<_>>()?;
    let mut floor = None;
    for r in reports.iter().rev() {
        if r.min_scaled_variance >= v_min {
            floor = Some(r.m);
        } else {
            break;
        }
    }
    Ok((floor, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potts::BETA_C;

    #[test]
    fn drift_bound_holds_at_fifty() {
        let r = drift_verify(50, BETA_C).unwrap();
        assert_eq!(r.violations, 0, "witness {:?}, slack {}", r.witness, r.worst_slack);
        assert!(r.worst_slack <= 0.0);
    }

    #[test]
    fn drift_at_the_centre_pushes_out() {
        // d_C vanishes at the centre, so any move increases it by 1/M.
        let m = 3000;
        let s = MagnetisationState::new([1000, 1000, 1000]);
        let (drift, _) = jump_moments(&s, BETA_C);
        let stay = magnetisation_transitions(&s, BETA_C).last().unwrap().1;
        assert!((drift - (1.0 - stay) / m as f64).abs() < 1e-15, "{drift}");
    }

    #[test]
    fn corner_variance_comes_from_two_exits() {
        let m = 100;
        let s = MagnetisationState::new([m, 0, 0]);
        let t = magnetisation_transitions(&s, BETA_C);
        let d0 = center_distance(&s.fractions()).0;
        let p: Vec<f64> = t.iter().map(|x| x.1).collect();
        let dd: Vec<f64> = t.iter().map(|x| center_distance(&x.0.fractions()).0 - d0).collect();
        let mean: f64 = p.iter().zip(&dd).map(|(a, b)| a * b).sum();
        let var: f64 = p.iter().zip(&dd).map(|(a, b)| a * (b - mean).powi(2)).sum();
        assert!((jump_moments(&s, BETA_C).1 - var).abs() < 1e-15);
        assert!(p[0] >= 1.0 / 18.0 && p[1] >= 1.0 / 18.0);
    }

    #[test]
    fn jump_variance_at_one_hundred() {
        let r = jump_variance_min(100, BETA_C).unwrap();
        assert!(r.min_scaled_variance >= 0.001, "{r:?}");
    }

    #[test]
    fn small_sizes_rejected() {
        assert!(drift_verify(11, BETA_C).is_err());
    }
}
