//! The large-`M` log-likelihood per spin of the magnetisation law and the
//! quadratic gap below its maximum.

use serde::Serialize;

use crate::error::{invalid_param, Result};
use crate::potts::{center_distance, CENTERS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogLikForm {
    /// `Σ_i (β̃ s_i² − s_i ln s_i)`, the leading term of `ln μ^mag / M`.
    Square,
    /// `β̃ Σ_i (s_i³ − s_i ln s_i)`, kept for comparison.
    Cube,
}

fn entropy_term(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.ln()
    } else {
        0.0
    }
}

pub fn asymptotic_loglik(s: &[f64; 3], beta: f64, form: LogLikForm) -> f64 {
    match form {
        LogLikForm::Square => s.iter().map(|&x| beta * x * x + entropy_term(x)).sum(),
        LogLikForm::Cube => beta * s.iter().map(|&x| x * x * x + entropy_term(x)).sum::<f64>(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogLikReport {
    pub form: LogLikForm,
    pub resolution: usize,
    /// Values at the four centres.
    pub center_values: [f64; 4],
    /// Largest spread between the centre values.
    pub center_spread: f64,
    /// Largest value on the grid minus the value at `C_1`.
    pub grid_excess: f64,
    /// Largest `c` with `L(s) ≤ L(C_1) − c d_C(s)²` at every grid point.
    pub best_c: f64,
    /// Grid point attaining `best_c`.
    pub argmin: [f64; 3],
    /// `max_s L(s) − (L(C_1) − best_c · d_C(s)²)`.
    pub max_gap: f64,
}

/// Scans the grid `s = (a, b, c) / resolution`.
pub fn asymptotic_loglik_check(resolution: usize, beta: f64, form: LogLikForm) -> Result<LogLikReport> {
    if resolution < 100 {
        return Err(invalid_param(format!("need at least 100 points per edge, got {resolution}")));
    }
    let center_values = CENTERS.map(|c| asymptotic_loglik(&c, beta, form));
    let top = center_values[0];
    let spread = center_values.iter().fold(0.0f64, |a, v| a.max((v - top).abs()));
    let r = resolution as f64;
    let mut best_c = f64::INFINITY;
    let mut argmin = CENTERS[0];
    let mut grid_excess = f64::NEG_INFINITY;
    let mut points = Vec::new();
    for a in 0..=resolution {
        for b in 0..=resolution - a {
            let s = [a as f64 / r, b as f64 / r, (resolution - a - b) as f64 / r];
            let l = asymptotic_loglik(&s, beta, form);
            let d = center_distance(&s).0;
            grid_excess = grid_excess.max(l - top);
            if d > 0.0 {
                let c = (top - l) / (d * d);
                if c < best_c {
                    best_c = c;
                    argmin = s;
                }
            }
            points.push((l, d));
        }
    }
    let max_gap = points
        .iter()
        .map(|(l, d)| l - (top - best_c * d * d))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(LogLikReport {
        form,
        resolution,
        center_values,
        center_spread: spread,
        grid_excess,
        best_c,
        argmin,
        max_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potts::BETA_C;

    #[test]
    fn centres_share_the_maximum() {
        let v = CENTERS.map(|c| asymptotic_loglik(&c, BETA_C, LogLikForm::Square));
        for x in v {
            assert!((x - v[0]).abs() < 1e-12);
        }
        // β̃_c / 2 + ln 3 − ln 2 / 3.
        assert!((v[0] - (BETA_C / 2.0 + 3f64.ln() - 2f64.ln() / 3.0)).abs() < 1e-14);
        assert!(asymptotic_loglik(&[0.5, 0.5, 0.0], BETA_C, LogLikForm::Square) < v[0] - 1e-3);
    }

    #[test]
    fn quadratic_gap_on_a_grid() {
        let r = asymptotic_loglik_check(300, BETA_C, LogLikForm::Square).unwrap();
        assert!(r.best_c > 0.0);
        assert!(r.max_gap <= 1e-12);
        assert!(r.grid_excess <= 1e-12);
    }

    #[test]
    fn cube_form_has_unequal_centres() {
        let r = asymptotic_loglik_check(120, BETA_C, LogLikForm::Cube).unwrap();
        assert!(r.center_spread > 1e-3);
    }
}
