//! Distance between the model restricted to `Λ̃^(i)` and restricted to the
//! mode `F^(i)`, exactly at the magnetisation level (both laws have the same
//! density within a class of equal colour counts).

use serde::Serialize;

use crate::error::{invalid_param, Result};
use crate::potts::{neumaier_sum, BarycentricGeometry, LogFactorials, MagnetisationPmf};

use super::series::{linear_fit, LinearFit};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalTvRow {
    pub mode: usize,
    pub mode_mass: f64,
    pub lambda_mass: f64,
    /// `d_TV(μ|Λ̃^(i), μ^(i))`.
    pub tv: f64,
    /// `μ|Λ̃^(i)(Λ̃^(i) \ I^(i))`.
    pub border_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalTvProfile {
    pub m: usize,
    pub rho: f64,
    pub rows: Vec<LocalTvRow>,
}

/// Profile at size `m` and region scale `rho`. Modes are taken at the full
/// configuration (`j0` is ignored).
pub fn local_tv_profile(m: usize, rho: f64, beta: f64) -> Result<LocalTvProfile> {
    let geometry = BarycentricGeometry::new(rho, 0)?;
    let pmf = MagnetisationPmf::new(m, beta, &LogFactorials::new(m));
    let mut rows = Vec::with_capacity(4);
    for i in 0..4 {
        let mut in_mode = Vec::new();
        let mut in_lambda = Vec::new();
        let mut lambda_border = Vec::new();
        for (s, lp) in pmf.iter() {
            let p = lp.exp();
            let f = geometry.mode(&s) == i;
            let l = geometry.in_lambda(&s, i);
            if f {
                in_mode.push(p);
            }
            if l {
                in_lambda.push(p);
                if !(f && geometry.is_inner(&s, i)) {
                    lambda_border.push(p);
                }
            }
        }
        let (mf, ml) = (neumaier_sum(in_mode), neumaier_sum(in_lambda));
        if ml <= 0.0 || mf <= 0.0 {
            return Err(invalid_param(format!(
                "mode {i} or its region Λ̃ is empty at M = {m}, ρ = {rho}"
            )));
        }
        let tv = 0.5
            * neumaier_sum(pmf.iter().map(|(s, lp)| {
                let p = lp.exp();
                let a = if geometry.in_lambda(&s, i) { p / ml } else { 0.0 };
                let b = if geometry.mode(&s) == i { p / mf } else { 0.0 };
                (a - b).abs()
            }));
        rows.push(LocalTvRow {
            mode: i,
            mode_mass: mf,
            lambda_mass: ml,
            tv,
            border_fraction: neumaier_sum(lambda_border) / ml,
        });
    }
    Ok(LocalTvProfile { m, rho, rows })
}

impl LocalTvProfile {
    /// Fitted exponent `a` in `tv ≈ c · M^a` for one mode across profiles;
    /// `None` if some distance is zero.
    pub fn decay_exponent(profiles: &[LocalTvProfile], mode: usize) -> Option<LinearFit> {
        let (x, y): (Vec<f64>, Vec<f64>) = profiles
            .iter()
            .map(|p| ((p.m as f64).ln(), p.rows[mode].tv.ln()))
            .unzip();
        if y.iter().any(|v| !v.is_finite()) {
            return None;
        }
        linear_fit(&x, &y).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potts::BETA_C;

    #[test]
    fn colour_modes_agree() {
        let p = local_tv_profile(300, 0.05, BETA_C).unwrap();
        for i in 1..3 {
            assert!((p.rows[i].tv - p.rows[0].tv).abs() < 1e-12);
            assert!((p.rows[i].border_fraction - p.rows[0].border_fraction).abs() < 1e-12);
        }
        assert!(p.rows.iter().all(|r| r.tv >= 0.0 && r.tv <= 1.0));
    }

    #[test]
    fn tv_matches_mass_outside_when_region_is_inside_mode() {
        // Λ̃ ⊂ F: the distance is the relative mass of F outside Λ̃.
        let m = 400;
        let rho = 0.05;
        let g = BarycentricGeometry::new(rho, 0).unwrap();
        let pmf = MagnetisationPmf::new(m, BETA_C, &LogFactorials::new(m));
        let p = local_tv_profile(m, rho, BETA_C).unwrap();
        let i = 0;
        assert!(pmf.iter().all(|(s, _)| !g.in_lambda(&s, i) || g.mode(&s) == i));
        let outside = pmf.mass_where(|s| g.mode(s) == i && !g.in_lambda(s, i));
        assert!((p.rows[i].tv - outside / p.rows[i].mode_mass).abs() < 1e-12);
    }

    #[test]
    fn empty_region_is_rejected() {
        assert!(local_tv_profile(20, 1e-6, BETA_C).is_err());
    }
}
