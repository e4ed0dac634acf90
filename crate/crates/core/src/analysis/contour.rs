//! Exact log-probabilities of the colour fractions over the lattice, and the
//! regions where they are locally maximal.

use serde::Serialize;

use crate::error::{invalid_param, Result};
use crate::potts::{center_distance, LogFactorials, MagnetisationPmf, MagnetisationState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContourPoint {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub log_pmf: f64,
}

/// A connected set of lattice states that are all local maxima with the same
/// value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalMaximum {
    /// Mean fractions over the region.
    pub location: [f64; 3],
    pub log_pmf: f64,
    pub states: usize,
    /// Nearest barycentric centre and the distance to it.
    pub nearest_centre: usize,
    pub centre_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContourGrid {
    pub m: usize,
    pub beta: f64,
    /// Lattice points whose counts are all multiples of `stride`.
    pub stride: usize,
    pub points: Vec<ContourPoint>,
    /// Found on the full lattice, largest first.
    pub maxima: Vec<LocalMaximum>,
}

const TIE: f64 = 1e-12;

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// States within two moves. One move is not enough: along a symmetry axis
/// (two equal counts) the next axis point is two moves away, and with only
/// the six nearest neighbours axis saddles look like maxima.
fn neighbours(s: &MagnetisationState) -> impl Iterator<Item = MagnetisationState> + '_ {
    const D: [i64; 5] = [-2, -1, 0, 1, 2];
    D.iter().flat_map(move |&d0| {
        D.iter().filter_map(move |&d1| {
            let d2 = -d0 - d1;
            if d2.abs() > 2 || (d0 == 0 && d1 == 0) {
                return None;
            }
            let mut c = s.counts;
            for (n, d) in c.iter_mut().zip([d0, d1, d2]) {
                *n = usize::try_from(*n as i64 + d).ok()?;
            }
            Some(MagnetisationState { counts: c })
        })
    })
}

fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE * a.abs().max(b.abs()).max(1.0)
}

/// Exact `log μ^mag` of size `m` at `beta`. A state is a local maximum when
/// its value is at least that of every state within two moves; tied maxima
/// within two moves of each other form one region.
pub fn contour_grid(beta: f64, m: usize, stride: usize) -> Result<ContourGrid> {
    if m == 0 || stride == 0 {
        return Err(invalid_param("need M ≥ 1 and a positive stride"));
    }
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(invalid_param(format!("β̃ must be finite and non-negative, got {beta}")));
    }
    let pmf = MagnetisationPmf::new(m, beta, &LogFactorials::new(m));
    let lp = pmf.log_probs();
    let is_max: Vec<bool> = pmf
        .iter()
        .map(|(s, v)| neighbours(&s).all(|t| v >= lp[t.index()] || tied(v, lp[t.index()])))
        .collect();
    let mut parent: Vec<usize> = (0..lp.len()).collect();
    for (s, v) in pmf.iter() {
        let a = s.index();
        if !is_max[a] {
            continue;
        }
        for t in neighbours(&s) {
            let b = t.index();
            if is_max[b] && tied(v, lp[b]) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut regions: std::collections::BTreeMap<usize, (usize, [f64; 3], f64)> = Default::default();
    for (s, v) in pmf.iter() {
        let a = s.index();
        if !is_max[a] {
            continue;
        }
        let root = find(&mut parent, a);
        let e = regions.entry(root).or_insert((0, [0.0; 3], v));
        e.0 += 1;
        let f = s.fractions();
        for i in 0..3 {
            e.1[i] += f[i];
        }
        e.2 = e.2.max(v);
    }
    let mut maxima: Vec<LocalMaximum> = regions
        .into_values()
        .map(|(n, sum, v)| {
            let location = sum.map(|x| x / n as f64);
            let (d, c) = center_distance(&location);
            LocalMaximum {
                location,
                log_pmf: v,
                states: n,
                nearest_centre: c,
                centre_distance: d,
            }
        })
        .collect();
    maxima.sort_by(|a, b| b.log_pmf.total_cmp(&a.log_pmf));
    let mf = m as f64;
    let points = pmf
        .iter()
        .filter(|(s, _)| s.counts.iter().all(|n| n % stride == 0))
        .map(|(s, v)| ContourPoint {
            s1: s.counts[0] as f64 / mf,
            s2: s.counts[1] as f64 / mf,
            s3: s.counts[2] as f64 / mf,
            log_pmf: v,
        })
        .collect();
    Ok(ContourGrid {
        m,
        beta,
        stride,
        points,
        maxima,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potts::{CENTRAL_MODE, BETA_C};

    #[test]
    fn high_temperature_has_one_central_maximum() {
        let g = contour_grid(BETA_C / 2.0, 300, 10).unwrap();
        assert_eq!(g.maxima.len(), 1);
        assert_eq!(g.maxima[0].nearest_centre, CENTRAL_MODE);
        assert!(g.maxima[0].centre_distance < 0.01);
    }

    #[test]
    fn infinite_temperature_is_flat_only_at_the_centre() {
        // β̃ = 0: the multinomial law, maximal at the balanced counts.
        let g = contour_grid(0.0, 30, 1).unwrap();
        assert_eq!(g.maxima.len(), 1);
        assert_eq!(g.maxima[0].location, [1.0 / 3.0; 3]);
    }

    #[test]
    fn plateau_is_one_region() {
        // M = 4 at β̃ = 0: (2,1,1) and its permutations tie and touch.
        let g = contour_grid(0.0, 4, 1).unwrap();
        assert_eq!(g.maxima.len(), 1);
        assert_eq!(g.maxima[0].states, 3);
    }

    #[test]
    fn critical_point_has_four_maxima() {
        let g = contour_grid(BETA_C, 1000, 50).unwrap();
        assert_eq!(g.maxima.len(), 4, "{:?}", g.maxima);
        let mut centres: Vec<usize> = g.maxima.iter().map(|m| m.nearest_centre).collect();
        centres.sort();
        assert_eq!(centres, vec![0, 1, 2, CENTRAL_MODE]);
    }

    #[test]
    fn stride_subsamples() {
        let g = contour_grid(1.0, 20, 5).unwrap();
        assert_eq!(g.points.len(), 15);
        let total: f64 = contour_grid(1.0, 20, 1).unwrap().points.iter().map(|p| p.log_pmf.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
