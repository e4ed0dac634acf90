use super::distribution::FiniteDistribution;
use super::kernel::{KernelRows, SubKernel, TransitionKernel};
use super::sequence::Partition;
use crate::error::{Error, Result};

/// How the coefficients `α_r(x)` of a metastable kernel are chosen.
#[derive(Clone, Copy, Debug)]
pub enum AlphaRule<'a> {
    /// `α_r(x) = K(x, F^(r))`.
    ExitProbability(&'a TransitionKernel),
    /// `α_r(x) = μ(F^(r))`, so every row equals `μ`.
    StationaryMass,
}

/// `μ̂(x, ·) = Σ_r α_r(x) μ_r(·)` with `μ_r` the restriction of `μ` to cell `r`.
#[derive(Clone, Debug)]
pub struct MetastableKernel {
    /// `alpha[x][r]`.
    alpha: Vec<Vec<f64>>,
    local: Vec<FiniteDistribution>,
}

impl MetastableKernel {
    pub fn alpha(&self, x: usize, r: usize) -> f64 {
        self.alpha[x][r]
    }

    pub fn local_restrictions(&self) -> &[FiniteDistribution] {
        &self.local
    }

    pub fn to_sub_kernel(&self) -> SubKernel {
        let n = self.alpha.len();
        let mut data = vec![0.0; n * n];
        for (x, alpha) in self.alpha.iter().enumerate() {
            let row = &mut data[x * n..(x + 1) * n];
            for (a, mu) in alpha.iter().zip(&self.local) {
                for (v, w) in row.iter_mut().zip(mu.weights()) {
                    *v += a * w;
                }
            }
        }
        SubKernel::from_row_major(n, data).expect("coefficients sum to at most one")
    }
}

pub fn metastable_kernel(
    mu: &FiniteDistribution,
    partition: &Partition,
    rule: AlphaRule<'_>,
) -> Result<MetastableKernel> {
    let n = mu.len();
    if partition.state_count() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: partition.state_count(),
        });
    }
    let local = partition
        .cells()
        .iter()
        .enumerate()
        .map(|(r, cell)| {
            mu.conditioned_on(cell)
                .map_err(|_| Error::InvalidPartition(format!("cell {r} has zero mass")))
        })
        .collect::<Result<Vec<_>>>()?;
    let alpha = match rule {
        AlphaRule::StationaryMass => {
            let masses = partition.masses(mu);
            vec![masses; n]
        }
        AlphaRule::ExitProbability(k) => {
            if k.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: k.dim(),
                });
            }
            (0..n)
                .map(|x| partition.cells().iter().map(|c| k.mass_into(x, c)).collect())
                .collect()
        }
    };
    Ok(MetastableKernel { alpha, local })
}

/// Modes `F^(j)`, each split into an inner region `I^(j)` and a border
/// region `B^(j)`.
#[derive(Clone, Debug)]
pub struct RegionStructure {
    modes: Partition,
    is_inner: Vec<bool>,
}

impl RegionStructure {
    pub fn new(mode_labels: &[usize], is_inner: Vec<bool>) -> Result<Self> {
        if mode_labels.len() != is_inner.len() {
            return Err(Error::DimensionMismatch {
                expected: mode_labels.len(),
                found: is_inner.len(),
            });
        }
        let modes = Partition::from_labels(mode_labels)?;
        for (j, cell) in modes.cells().iter().enumerate() {
            if !cell.iter().any(|&x| is_inner[x]) {
                return Err(Error::InvalidPartition(format!(
                    "mode {j} has an empty inner region"
                )));
            }
        }
        Ok(Self { modes, is_inner })
    }

    pub fn state_count(&self) -> usize {
        self.is_inner.len()
    }

    pub fn mode_count(&self) -> usize {
        self.modes.cell_count()
    }

    pub fn modes(&self) -> &Partition {
        &self.modes
    }

    pub fn mode_of(&self, x: usize) -> usize {
        self.modes.cell_of(x)
    }

    pub fn is_inner(&self, x: usize) -> bool {
        self.is_inner[x]
    }

    pub fn border(&self) -> Vec<usize> {
        (0..self.state_count()).filter(|&x| !self.is_inner[x]).collect()
    }

    pub fn inner(&self, j: usize) -> Vec<usize> {
        self.modes
            .cell(j)
            .iter()
            .copied()
            .filter(|&x| self.is_inner[x])
            .collect()
    }

    /// `μ^(j)`: `mu` conditioned on mode `j`.
    pub fn mode_restrictions(&self, mu: &FiniteDistribution) -> Result<Vec<FiniteDistribution>> {
        if mu.len() != self.state_count() {
            return Err(Error::DimensionMismatch {
                expected: self.state_count(),
                found: mu.len(),
            });
        }
        self.modes
            .cells()
            .iter()
            .enumerate()
            .map(|(j, c)| {
                mu.conditioned_on(c)
                    .map_err(|_| Error::InvalidPartition(format!("mode {j} has zero mass")))
            })
            .collect()
    }
}

/// `q[j][x]`: probability that the chain started at `x` reaches the inner
/// region of mode `j` within `u` steps, with `q[j][x] = 1` for `x ∈ I^(j)`.
///
/// Computed by `u` sweeps of the chain with inner states made absorbing.
pub fn absorption_probabilities(
    p: &TransitionKernel,
    regions: &RegionStructure,
    u: usize,
) -> Vec<Vec<f64>> {
    let n = p.dim();
    let border = regions.border();
    (0..regions.mode_count())
        .map(|j| {
            let mut q: Vec<f64> = (0..n)
                .map(|x| (regions.is_inner(x) && regions.mode_of(x) == j) as u8 as f64)
                .collect();
            for _ in 0..u {
                let next: Vec<f64> = border
                    .iter()
                    .map(|&x| p.row(x).iter().zip(&q).map(|(a, b)| a * b).sum())
                    .collect();
                for (&x, v) in border.iter().zip(next) {
                    q[x] = v;
                }
            }
            q
        })
        .collect()
}

/// `π̂^(t)`: inner rows equal `μ^(j)`, a border row at `x` equals
/// `Σ_j q^(j)(x, ⌊t/2⌋) μ^(j)`.
pub fn metastable_t_kernel(
    p: &TransitionKernel,
    t: usize,
    regions: &RegionStructure,
    mu: &FiniteDistribution,
) -> Result<SubKernel> {
    if t == 0 {
        return Err(Error::InvalidParameter("t must be at least 1".into()));
    }
    let n = regions.state_count();
    if p.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.dim(),
        });
    }
    let local = regions.mode_restrictions(mu)?;
    let q = absorption_probabilities(p, regions, t / 2);
    let mut data = vec![0.0; n * n];
    for x in 0..n {
        let row = &mut data[x * n..(x + 1) * n];
        for (j, muj) in local.iter().enumerate() {
            let c = if regions.is_inner(x) {
                (regions.mode_of(x) == j) as u8 as f64
            } else {
                q[j][x]
            };
            if c > 0.0 {
                for (v, w) in row.iter_mut().zip(muj.weights()) {
                    *v += c * w;
                }
            }
        }
    }
    SubKernel::from_row_major(n, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fk::sup_operator_distance;

    /// Inner states 0,1 (mode 0) and 3,4 (mode 1); border state 2 in mode 0.
    /// From 2 the chain moves to 0 w.p. 0.3, to 3 w.p. 0.5 and stays w.p. 0.2.
    pub(crate) fn toy_chain() -> (TransitionKernel, RegionStructure, FiniteDistribution) {
        let p = TransitionKernel::new(vec![
            vec![0.6, 0.3, 0.1, 0.0, 0.0],
            vec![0.3, 0.6, 0.0, 0.1, 0.0],
            vec![0.3, 0.0, 0.2, 0.5, 0.0],
            vec![0.0, 0.0, 0.05, 0.5, 0.45],
            vec![0.0, 0.0, 0.0, 0.45, 0.55],
        ])
        .unwrap();
        let regions =
            RegionStructure::new(&[0, 0, 0, 1, 1], vec![true, true, false, true, true]).unwrap();
        let mu = FiniteDistribution::new(vec![0.2, 0.2, 0.1, 0.25, 0.25]).unwrap();
        (p, regions, mu)
    }

    #[test]
    fn stationary_mass_rows_equal_mu() {
        let mu = FiniteDistribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let part = Partition::from_labels(&[0, 0, 1, 1]).unwrap();
        let k = metastable_kernel(&mu, &part, AlphaRule::StationaryMass)
            .unwrap()
            .to_sub_kernel();
        for x in 0..4 {
            for y in 0..4 {
                assert!((k.entry(x, y) - mu.prob(y)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_mode_exit_rule_gives_mu() {
        let mu = FiniteDistribution::new(vec![0.1, 0.2, 0.7]).unwrap();
        let kernel = TransitionKernel::new(vec![
            vec![0.2, 0.3, 0.5],
            vec![0.0, 1.0, 0.0],
            vec![0.5, 0.5, 0.0],
        ])
        .unwrap();
        let k = metastable_kernel(&mu, &Partition::single(3), AlphaRule::ExitProbability(&kernel))
            .unwrap()
            .to_sub_kernel();
        for x in 0..3 {
            assert_eq!(k.row(x), mu.weights());
        }
    }

    #[test]
    fn exit_rule_without_inter_mode_moves_is_block_diagonal() {
        let mu = FiniteDistribution::new(vec![0.1, 0.3, 0.2, 0.4]).unwrap();
        let kernel = TransitionKernel::new(vec![
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.2, 0.8, 0.0, 0.0],
            vec![0.0, 0.0, 0.6, 0.4],
            vec![0.0, 0.0, 0.1, 0.9],
        ])
        .unwrap();
        let part = Partition::from_labels(&[0, 0, 1, 1]).unwrap();
        let m = metastable_kernel(&mu, &part, AlphaRule::ExitProbability(&kernel)).unwrap();
        assert_eq!(m.alpha(0, 0), 1.0);
        assert_eq!(m.alpha(0, 1), 0.0);
        assert_eq!(m.alpha(3, 1), 1.0);
        let k = m.to_sub_kernel();
        assert!((k.entry(1, 0) - 0.25).abs() < 1e-15);
        assert!((k.entry(2, 3) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(k.entry(0, 2), 0.0);
    }

    #[test]
    fn toy_chain_border_row() {
        let (p, regions, mu) = toy_chain();
        let pi = metastable_t_kernel(&p, 2, &regions, &mu).unwrap();
        let mu1 = [0.4, 0.4, 0.2, 0.0, 0.0];
        let mu2 = [0.0, 0.0, 0.0, 0.5, 0.5];
        for y in 0..5 {
            let expected = 0.3 * mu1[y] + 0.5 * mu2[y];
            assert!((pi.entry(2, y) - expected).abs() < 1e-15);
            assert!((pi.entry(0, y) - mu1[y]).abs() < 1e-15);
            assert!((pi.entry(4, y) - mu2[y]).abs() < 1e-15);
        }
        assert!(metastable_t_kernel(&p, 0, &regions, &mu).is_err());
    }

    #[test]
    fn one_step_exit_gives_full_mass() {
        let p = TransitionKernel::new(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let regions = RegionStructure::new(&[0, 0, 1], vec![true, false, true]).unwrap();
        let mu = FiniteDistribution::new(vec![0.5, 0.0, 0.5]).unwrap();
        for t in 2..6 {
            let pi = metastable_t_kernel(&p, t, &regions, &mu).unwrap();
            assert_eq!(pi.row(1), &[0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn empty_border_rows_are_mode_restrictions() {
        let p = TransitionKernel::identity(3);
        let regions = RegionStructure::new(&[0, 0, 1], vec![true; 3]).unwrap();
        let mu = FiniteDistribution::new(vec![0.25, 0.25, 0.5]).unwrap();
        let pi = metastable_t_kernel(&p, 7, &regions, &mu).unwrap();
        assert_eq!(pi.row(0), &[0.5, 0.5, 0.0]);
        assert_eq!(pi.row(2), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn toy_distance_matches_direct_sum() {
        let (p, regions, mu) = toy_chain();
        for t in 1..8 {
            let pt = p.power(t);
            let pi = metastable_t_kernel(&p, t, &regions, &mu).unwrap();
            let mut direct: f64 = 0.0;
            for x in 0..5 {
                let mut s = 0.0;
                for y in 0..5 {
                    s += (pt.rows()[x][y] - pi.rows()[x][y]).abs();
                }
                direct = direct.max(s);
            }
            assert!((sup_operator_distance(&pt, &pi).unwrap() - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_empty_inner_region() {
        assert!(RegionStructure::new(&[0, 1], vec![true, false]).is_err());
    }
}
