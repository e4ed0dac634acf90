//! Riemann sums of `x^m e^{−x²}` with step `R` and offset `δ`:
//!
//! `Ψ_m(R, δ) = Σ_{k∈ℤ} e^{−(k+δ)²R²} (k+δ)^m R^{m+1}`,
//!
//! which converge to `Z_m = ∫ x^m e^{−x²} dx` faster than any power of `R`.
//!
//! The direct sum is limited by double precision once the error falls below
//! about `1e-16`. By Poisson summation the error is exactly
//!
//! `Ψ_m − Z_m = √π Σ_{ν≠0} e^{2πiνδ} e^{−π²ν²/R²} E[(G − iπν/R)^m]`,
//!
//! with `G ~ N(0, 1/2)`, and [`riemann_gauss_log10_error`] evaluates its
//! magnitude in log space.

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{invalid_param, Result};
use crate::potts::neumaier_sum;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RiemannGauss {
    pub psi: f64,
    pub limit: f64,
    /// `|Ψ_m − Z_m|` in double precision.
    pub error: f64,
    /// Terms summed.
    pub terms: usize,
}

/// `Z_m`: `Γ((m+1)/2)` for even `m`, `0` for odd `m`.
pub fn gaussian_moment_integral(m: u32) -> f64 {
    if m % 2 == 1 {
        0.0
    } else {
        gamma((m as f64 + 1.0) / 2.0)
    }
}

/// Direct summation over a window symmetric about the peak of the summand,
/// widened until both end terms fall below `1e-18` times the largest term.
pub fn riemann_gauss(m: u32, r: f64, delta: f64) -> Result<RiemannGauss> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid_param(format!("R must be positive, got {r}")));
    }
    if !delta.is_finite() {
        return Err(invalid_param("delta must be finite"));
    }
    let term = |k: i64| {
        let x = k as f64 + delta;
        (-(x * r).powi(2)).exp() * x.powi(m as i32) * r.powi(m as i32 + 1)
    };
    let centre = (-delta).round() as i64;
    // The summand peaks at |x| = √(m/2)/R; the window must reach past it.
    let peak = ((m as f64 / 2.0).sqrt() / r).ceil() as i64 + 1;
    let mut terms = vec![term(centre)];
    let mut biggest = terms[0].abs();
    let mut width = 0i64;
    loop {
        width += 1;
        let (lo, hi) = (term(centre - width), term(centre + width));
        biggest = biggest.max(lo.abs()).max(hi.abs());
        terms.push(lo);
        terms.push(hi);
        let small = lo.abs() < 1e-18 * biggest && hi.abs() < 1e-18 * biggest;
        if (small && width > peak) || width > 1_000_000_000 {
            break;
        }
    }
    let psi = neumaier_sum(terms.iter().copied());
    let limit = gaussian_moment_integral(m);
    Ok(RiemannGauss {
        psi,
        limit,
        error: (psi - limit).abs(),
        terms: terms.len(),
    })
}

/// `E[(G + b)^m]` for `G ~ N(0, 1/2)` and imaginary `b = i·y`, as `(re, im)`.
fn shifted_moment(m: u32, y: f64) -> (f64, f64) {
    // E[G^l] = (l−1)!! / 2^{l/2} for even l.
    let mut re = 0.0;
    let mut im = 0.0;
    let mut binom = 1.0f64;
    let mut gmoment = 1.0f64;
    for l in 0..=m {
        if l > 0 {
            binom = binom * (m - l + 1) as f64 / l as f64;
        }
        if l % 2 == 0 {
            if l >= 2 {
                gmoment *= (l - 1) as f64 / 2.0;
            }
            // (i y)^{m−l}
            let p = m - l;
            let mag = binom * gmoment * y.powi(p as i32);
            match p % 4 {
                0 => re += mag,
                1 => im += mag,
                2 => re -= mag,
                _ => im -= mag,
            }
        }
    }
    (re, im)
}

/// `log10 |Ψ_m(R, δ) − Z_m|` from the dual series; `-∞` when the error
/// vanishes identically (odd `m` with `δ ∈ ½ℤ`).
pub fn riemann_gauss_log10_error(m: u32, r: f64, delta: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid_param(format!("R must be positive, got {r}")));
    }
    let pi = std::f64::consts::PI;
    // Pairs ν, −ν are complex conjugates; each pair contributes
    // 2√π e^{−π²ν²/R²} Re(e^{2πiνδ} E[(G − iπν/R)^m]).
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    let mut nu = 1u64;
    loop {
        let nf = nu as f64;
        let log_mag = (2.0 * pi.sqrt()).ln() - pi * pi * nf * nf / (r * r);
        let (mre, mim) = shifted_moment(m, -pi * nf / r);
        let (c, s) = ((2.0 * pi * nf * delta).cos(), (2.0 * pi * nf * delta).sin());
        let re = c * mre - s * mim;
        let scale = mre.hypot(mim);
        let value = if re.abs() <= 1e-12 * scale { 0.0 } else { re };
        pairs.push((log_mag, value));
        // Later pairs are below e^{−745} relative to the first.
        if nu >= 2 && pi * pi * (nf * nf - 1.0) / (r * r) > 745.0 {
            break;
        }
        if nu > 10_000_000 {
            break;
        }
        nu += 1;
    }
    let Some(&(lead_log, _)) = pairs.iter().find(|(_, v)| *v != 0.0) else {
        return Ok(f64::NEG_INFINITY);
    };
    let total: f64 = pairs
        .iter()
        .filter(|(_, v)| *v != 0.0)
        .map(|(lm, v)| (lm - lead_log).exp() * v)
        .sum();
    if total == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok((lead_log + total.abs().ln()) / std::f64::consts::LN_10)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT_PI: f64 = 1.772_453_850_905_516;

    #[test]
    fn odd_moment_vanishes_by_symmetry() {
        for r in [0.3, 1.0, 2.5] {
            assert!(riemann_gauss(1, r, 0.0).unwrap().psi.abs() < 1e-15);
        }
        assert_eq!(riemann_gauss_log10_error(1, 0.7, 0.0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn small_step_is_exact_to_double_precision() {
        let g = riemann_gauss(0, 0.1, 0.3).unwrap();
        assert!((g.psi - SQRT_PI).abs() < 1e-12);
    }

    #[test]
    fn unit_step() {
        let g = riemann_gauss(0, 1.0, 0.0).unwrap();
        assert!((g.psi - 1.77264).abs() < 1e-5);
        assert!(g.error < 2e-4);
    }

    #[test]
    fn dual_series_matches_direct_sum() {
        for m in 0..5 {
            for r in [0.8, 1.0, 1.5, 2.0] {
                for delta in [0.0, 0.1, 0.3, 0.45] {
                    let direct = riemann_gauss(m, r, delta).unwrap();
                    let dual = riemann_gauss_log10_error(m, r, delta).unwrap();
                    if direct.error > 1e-11 {
                        let rel = (direct.error.log10() - dual).abs();
                        assert!(rel < 1e-6, "m={m} R={r} δ={delta}: {} vs {}", direct.error.log10(), dual);
                    }
                }
            }
        }
    }

    #[test]
    fn moments() {
        assert!((gaussian_moment_integral(0) - SQRT_PI).abs() < 1e-14);
        assert!((gaussian_moment_integral(2) - SQRT_PI / 2.0).abs() < 1e-14);
        assert_eq!(gaussian_moment_integral(3), 0.0);
        // E[(G + iy)^2] = 1/2 − y².
        let (re, im) = shifted_moment(2, 0.7);
        assert!((re - (0.5 - 0.49)).abs() < 1e-15 && im.abs() < 1e-15);
    }

    #[test]
    fn error_collapses_as_the_step_halves() {
        let ladder: Vec<f64> = [0.5, 0.25, 0.125]
            .iter()
            .map(|&r| riemann_gauss_log10_error(0, r, 0.3).unwrap())
            .collect();
        for w in ladder.windows(2) {
            assert!(w[1] < w[0] - 3.0);
        }
    }

    #[test]
    fn rejects_non_positive_step() {
        assert!(riemann_gauss(0, 0.0, 0.0).is_err());
        assert!(riemann_gauss_log10_error(0, -1.0, 0.0).is_err());
    }
}
