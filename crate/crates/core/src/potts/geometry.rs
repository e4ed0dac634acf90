//! Barycentric geometry of the magnetisation simplex: the four centres,
//! modes, inner regions and the local regions `Λ^(i)`.

use serde::Serialize;

use crate::error::{invalid_param, Result};

use super::lattice::MagnetisationState;

/// Local maxima of the critical magnetisation law; the last is the centre.
pub const CENTERS: [[f64; 3]; 4] = [
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
];

pub const CENTRAL_MODE: usize = 3;
pub const DEFAULT_RHO: f64 = 1e-6;
pub const DEFAULT_J0: usize = 10_000_000;

/// Slack for region boundaries that fall on lattice points.
const REGION_SLACK: f64 = 1e-12;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Corners `e_1, e_2, e_3` of an equilateral triangle of unit side centred
/// at the origin (each of length `√3/3`).
const BASIS: [[f64; 2]; 3] = [
    [0.0, SQRT3 / 3.0],
    [-0.5, -SQRT3 / 6.0],
    [0.5, -SQRT3 / 6.0],
];

/// Planar image `s_1 e_1 + s_2 e_2 + s_3 e_3`.
pub fn embed(s: &[f64; 3]) -> [f64; 2] {
    let mut p = [0.0; 2];
    for i in 0..3 {
        p[0] += s[i] * BASIS[i][0];
        p[1] += s[i] * BASIS[i][1];
    }
    p
}

/// `d(s, s') = ‖s − s'‖ / √2`, the planar distance for points of the simplex.
pub fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let sq: f64 = (0..3).map(|i| (a[i] - b[i]).powi(2)).sum();
    (0.5 * sq).sqrt()
}

/// `d_C(s)` and the index of the nearest centre (lowest index on ties).
pub fn center_distance(s: &[f64; 3]) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (i, c) in CENTERS.iter().enumerate() {
        let d = distance(s, c);
        if d < best.0 {
            best = (d, i);
        }
    }
    best
}

/// Piecewise-linear function with knots `(0, 0)`, `(√3/24, 0.002)`,
/// `(√3/12, 0)` and `(√3/6, 0.002)`, constant beyond the last knot.
pub fn drift_phi(t: f64) -> f64 {
    const KNOTS: [(f64, f64); 4] = [
        (0.0, 0.0),
        (SQRT3 / 24.0, 0.002),
        (SQRT3 / 12.0, 0.0),
        (SQRT3 / 6.0, 0.002),
    ];
    if t <= 0.0 {
        return 0.0;
    }
    for w in KNOTS.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if t <= x1 {
            return y0 + (y1 - y0) * (t - x0) / (x1 - x0);
        }
    }
    KNOTS[3].1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CenterGeometry {
    pub distance: f64,
    pub nearest: usize,
    pub phi: f64,
}

pub fn center_geometry(s: &[f64; 3]) -> CenterGeometry {
    let (distance, nearest) = center_distance(s);
    CenterGeometry {
        distance,
        nearest,
        phi: drift_phi(distance),
    }
}

/// Mode and region parameters: prefixes of length at most `j0` form a single
/// mode; longer prefixes are split by strict colour majority, and a prefix is
/// inner when every coordinate lies within `[−ρ/4, ρ/2]` of its mode centre.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BarycentricGeometry {
    pub rho: f64,
    pub j0: usize,
}

impl Default for BarycentricGeometry {
    fn default() -> Self {
        Self {
            rho: DEFAULT_RHO,
            j0: DEFAULT_J0,
        }
    }
}

impl BarycentricGeometry {
    pub fn new(rho: f64, j0: usize) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(invalid_param(format!("rho must be positive, got {rho}")));
        }
        Ok(Self { rho, j0 })
    }

    /// Mode of a prefix with the given counts; its length is the count sum.
    pub fn mode(&self, s: &MagnetisationState) -> usize {
        let j = s.size();
        if j <= self.j0 {
            return 0;
        }
        (0..3).find(|&c| 2 * s.counts[c] > j).unwrap_or(CENTRAL_MODE)
    }

    fn deviations_within(&self, s: &MagnetisationState, mode: usize, lo: f64, hi: f64) -> bool {
        let f = s.fractions();
        (0..3).all(|l| {
            let d = f[l] - CENTERS[mode][l];
            d >= lo - REGION_SLACK && d <= hi + REGION_SLACK
        })
    }

    /// Inner-region test relative to `mode`; always true in the single-mode
    /// regime.
    pub fn is_inner(&self, s: &MagnetisationState, mode: usize) -> bool {
        if s.size() <= self.j0 {
            return true;
        }
        self.deviations_within(s, mode, -self.rho / 4.0, self.rho / 2.0)
    }

    /// `(mode, inner)`.
    pub fn mode_and_region(&self, s: &MagnetisationState) -> (usize, bool) {
        let mode = self.mode(s);
        (mode, self.is_inner(s, mode))
    }

    /// Membership of `Λ^(i)`: `−ρ ≤ s_l − C_{i,l} ≤ 2ρ` for every `l`.
    pub fn in_lambda(&self, s: &MagnetisationState, mode: usize) -> bool {
        self.deviations_within(s, mode, -self.rho, 2.0 * self.rho)
    }

    /// Integer count range `[lo, hi]` of coordinate `l` in `Λ^(mode)` at size `m`.
    fn lambda_count_range(&self, m: usize, mode: usize, l: usize) -> (usize, usize) {
        let mf = m as f64;
        let c = CENTERS[mode][l];
        let lo = (mf * (c - self.rho) - 1e-9).ceil().max(0.0) as usize;
        let hi = ((mf * (c + 2.0 * self.rho) + 1e-9).floor() as usize).min(m);
        (lo, hi)
    }

    /// States of `Λ^(mode)` at size `m`, enumerated from the count bounds
    /// without sweeping the lattice.
    pub fn lambda_states(&self, m: usize, mode: usize) -> Vec<MagnetisationState> {
        let r = [0, 1, 2].map(|l| self.lambda_count_range(m, mode, l));
        let mut out = Vec::new();
        if r.iter().any(|(lo, hi)| lo > hi) {
            return out;
        }
        for n1 in r[0].0..=r[0].1 {
            for n2 in r[1].0..=r[1].1 {
                if n1 + n2 > m {
                    break;
                }
                let n3 = m - n1 - n2;
                if n3 >= r[2].0 && n3 <= r[2].1 {
                    out.push(MagnetisationState::new([n1, n2, n3]));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances_between_centres() {
        assert!((distance(&CENTERS[0], &CENTERS[1]) - 0.5).abs() < 1e-15);
        assert!((distance(&CENTERS[0], &CENTERS[3]) - SQRT3 / 6.0).abs() < 1e-15);
        let mid: [f64; 3] = [0, 1, 2].map(|l| 0.5 * (CENTERS[0][l] + CENTERS[3][l]));
        let g = center_geometry(&mid);
        assert!((g.distance - SQRT3 / 12.0).abs() < 1e-15);
        assert!(g.phi.abs() < 1e-15);
        assert!((drift_phi(SQRT3 / 24.0) - 0.002).abs() < 1e-18);
        assert!((drift_phi(SQRT3 / 6.0) - 0.002).abs() < 1e-18);
    }

    #[test]
    fn distance_is_planar() {
        let pts = [[0.2, 0.3, 0.5], [1.0, 0.0, 0.0], [0.1, 0.85, 0.05], CENTERS[3]];
        for a in &pts {
            for b in &pts {
                let (pa, pb) = (embed(a), embed(b));
                let planar = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
                assert!((planar - distance(a, b)).abs() < 1e-15);
            }
        }
        for e in BASIS {
            assert!(((e[0] * e[0] + e[1] * e[1]).sqrt() - SQRT3 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn modes_and_regions() {
        let g = BarycentricGeometry::default();
        let small = BarycentricGeometry::new(1e-6, 0).unwrap();
        assert_eq!(small.mode(&MagnetisationState::new([5, 0, 0])), 0);
        assert_eq!(small.mode(&MagnetisationState::new([0, 1, 0])), 1);
        assert_eq!(g.mode(&MagnetisationState::new([0, 7, 0])), 0);
        assert_eq!(small.mode_and_region(&MagnetisationState::new([4, 4, 4])), (CENTRAL_MODE, true));
        assert_eq!(small.mode_and_region(&MagnetisationState::new([51, 30, 19])), (0, false));
        // Exactly one half is not a majority.
        assert_eq!(small.mode(&MagnetisationState::new([5, 3, 2])), CENTRAL_MODE);
        assert_eq!(small.mode_and_region(&MagnetisationState::new([4, 1, 1])), (0, true));
    }

    #[test]
    fn lambda_enumeration_matches_sweep() {
        let g = BarycentricGeometry::new(0.05, 0).unwrap();
        for m in [30, 60, 61] {
            for mode in 0..4 {
                let fast = g.lambda_states(m, mode);
                let slow: Vec<MagnetisationState> = crate::potts::lattice::lattice_states(m)
                    .filter(|s| g.in_lambda(s, mode))
                    .collect();
                assert_eq!(fast, slow, "m = {m}, mode = {mode}");
            }
        }
    }
}
