//! Random finite instances: distributions, reversible kernels, bridging
//! sequences and metastable chains. Used by the acceptance suite, the
//! property tests and the CLI.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid_param, Result};
use crate::fk::{BridgingSequence, FiniteDistribution, Partition, RegionStructure, TransitionKernel};
use crate::rng::StreamRng;

/// Strictly positive weights `exp(spread · Z)`, `Z` uniform on `[−1, 1]`.
pub fn random_distribution(n: usize, spread: f64, rng: &mut StreamRng) -> Result<FiniteDistribution> {
    if n == 0 {
        return Err(invalid_param("need at least one state"));
    }
    let w = (0..n).map(|_| (spread * rng.random_range(-1.0..=1.0)).exp()).collect();
    FiniteDistribution::from_unnormalized(w)
}

/// `μ'(x) ∝ μ(x) exp(step · Z_x)`: a neighbouring distribution whose density
/// ratio against `μ` lies within `[e^{−2·step}, e^{2·step}]`.
pub fn perturbed_distribution(mu: &FiniteDistribution, step: f64, rng: &mut StreamRng) -> Result<FiniteDistribution> {
    let w = mu
        .weights()
        .iter()
        .map(|&p| p * (step * rng.random_range(-1.0..=1.0)).exp())
        .collect();
    FiniteDistribution::from_unnormalized(w)
}

/// Uniform labels over `cells` cells, each cell nonempty.
pub fn random_partition(n: usize, cells: usize, rng: &mut StreamRng) -> Result<Partition> {
    if cells == 0 || cells > n {
        return Err(invalid_param(format!("cannot split {n} states into {cells} cells")));
    }
    let mut labels: Vec<usize> = (0..n).map(|x| if x < cells { x } else { rng.random_range(0..cells) }).collect();
    labels.shuffle(rng);
    Partition::from_labels(&labels)
}

/// Metropolis kernel for `mu` with a random symmetric proposal that only
/// connects `x` and `y` when `allowed(x, y)`. The holding probability takes
/// up the remaining mass, so the kernel is reversible with respect to `mu`.
pub fn metropolis_kernel(
    mu: &FiniteDistribution,
    rng: &mut StreamRng,
    allowed: impl Fn(usize, usize) -> bool,
) -> Result<TransitionKernel> {
    let n = mu.len();
    let mut q = vec![0.0; n * n];
    for x in 0..n {
        for y in x + 1..n {
            if allowed(x, y) {
                let v = rng.random_range(0.1..1.0);
                q[x * n + y] = v;
                q[y * n + x] = v;
            }
        }
    }
    metropolis_from_proposal(mu, &q)
}

/// Metropolis acceptance on a symmetric row-major proposal, scaled down so
/// that no row exceeds total mass one.
fn metropolis_from_proposal(mu: &FiniteDistribution, q: &[f64]) -> Result<TransitionKernel> {
    let n = mu.len();
    let scale = (0..n)
        .map(|x| q[x * n..(x + 1) * n].iter().sum::<f64>())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let p = mu.weights();
    let mut data = vec![0.0; n * n];
    for x in 0..n {
        let mut off = 0.0;
        for y in 0..n {
            if y != x && q[x * n + y] > 0.0 {
                let a = q[x * n + y] / scale * (p[y] / p[x]).min(1.0);
                data[x * n + y] = a;
                off += a;
            }
        }
        data[x * n + x] = (1.0 - off).max(0.0);
    }
    TransitionKernel::from_row_major(n, data)
}

/// `λ · (perfect mixing) + (1 − λ) · (Metropolis)`. With a partition, both
/// parts stay inside its cells: the perfect-mixing part redraws from `mu`
/// restricted to the current cell.
pub fn mixture_kernel(
    mu: &FiniteDistribution,
    lambda: f64,
    blocks: Option<&Partition>,
    rng: &mut StreamRng,
) -> Result<TransitionKernel> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(invalid_param(format!("λ = {lambda} is not in [0, 1]")));
    }
    let n = mu.len();
    let same = |x: usize, y: usize| blocks.is_none_or(|b| b.cell_of(x) == b.cell_of(y));
    let mh = metropolis_kernel(mu, rng, same)?.rows();
    let p = mu.weights();
    let mut data = vec![0.0; n * n];
    for x in 0..n {
        let cell_mass: f64 = (0..n).filter(|&y| same(x, y)).map(|y| p[y]).sum();
        for y in 0..n {
            let redraw = if same(x, y) { p[y] / cell_mass } else { 0.0 };
            data[x * n + y] = lambda * redraw + (1.0 - lambda) * mh[x][y];
        }
        // Remove rounding drift so rows sum to one.
        let s: f64 = data[x * n..(x + 1) * n].iter().sum();
        data[x * n + x] = (data[x * n + x] + 1.0 - s).max(0.0);
    }
    TransitionKernel::from_row_major(n, data)
}

/// Shape of a random bridging instance.
#[derive(Clone, Debug)]
pub struct InstanceShape {
    pub min_states: usize,
    pub max_states: usize,
    pub min_stages: usize,
    pub max_stages: usize,
    /// Spread of `μ_0` on the log scale.
    pub spread: f64,
    /// Log-scale perturbation between consecutive distributions.
    pub step: f64,
    /// Range of the perfect-mixing share `λ` of each kernel.
    pub lambda: (f64, f64),
    /// Cells of the per-stage partitions (a fixed partition when
    /// `block_preserving`).
    pub cells: usize,
    /// Kernels never leave the cells of one fixed partition.
    pub block_preserving: bool,
}

impl Default for InstanceShape {
    fn default() -> Self {
        Self {
            min_states: 4,
            max_states: 8,
            min_stages: 1,
            max_stages: 6,
            spread: 1.0,
            step: 0.3,
            lambda: (0.2, 0.8),
            cells: 2,
            block_preserving: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RandomInstance {
    pub sequence: BridgingSequence,
    pub phi: Vec<f64>,
}

/// A bridging sequence with partitions attached (one per stage, or one
/// shared partition when the kernels are block preserving) and a test
/// function with values in `[−1, 1]`.
pub fn random_instance(shape: &InstanceShape, rng: &mut StreamRng) -> Result<RandomInstance> {
    if shape.min_states > shape.max_states || shape.min_stages > shape.max_stages || shape.min_states == 0 {
        return Err(invalid_param("empty range of states or stages"));
    }
    let s = rng.random_range(shape.min_states..=shape.max_states);
    let n = rng.random_range(shape.min_stages..=shape.max_stages);
    let cells = shape.cells.clamp(1, s);
    let mut distributions = vec![random_distribution(s, shape.spread, rng)?];
    for _ in 0..n {
        let next = perturbed_distribution(distributions.last().unwrap(), shape.step, rng)?;
        distributions.push(next);
    }
    let partitions = if shape.block_preserving {
        vec![random_partition(s, cells, rng)?]
    } else {
        (0..=n).map(|_| random_partition(s, cells, rng)).collect::<Result<_>>()?
    };
    let kernels = (1..=n)
        .map(|k| {
            let lambda = rng.random_range(shape.lambda.0..=shape.lambda.1);
            let blocks = shape.block_preserving.then(|| &partitions[0]);
            mixture_kernel(&distributions[k], lambda, blocks, rng)
        })
        .collect::<Result<_>>()?;
    let phi = (0..s).map(|_| rng.random_range(-1.0..=1.0)).collect();
    Ok(RandomInstance {
        sequence: BridgingSequence::new(distributions, kernels, partitions)?,
        phi,
    })
}

#[derive(Clone, Debug)]
pub struct MetastableChain {
    pub kernel: TransitionKernel,
    pub regions: RegionStructure,
    pub mu: FiniteDistribution,
}

/// A chain with two or three modes, each with inner and border states. The
/// Metropolis proposal is strong inside a mode and weak (`leak`) between
/// border states of different modes, so `mu` is stationary and reversible.
pub fn random_metastable_chain(leak: f64, rng: &mut StreamRng) -> Result<MetastableChain> {
    let modes = rng.random_range(2..=3);
    let mut labels = Vec::new();
    let mut inner = Vec::new();
    for j in 0..modes {
        let (ni, nb) = (rng.random_range(1..=3), rng.random_range(1..=2));
        labels.extend(std::iter::repeat_n(j, ni + nb));
        inner.extend(std::iter::repeat_n(true, ni));
        inner.extend(std::iter::repeat_n(false, nb));
    }
    let n = labels.len();
    let mu = random_distribution(n, 1.0, rng)?;
    let mut q = vec![0.0; n * n];
    for x in 0..n {
        for y in x + 1..n {
            let v = if labels[x] == labels[y] {
                rng.random_range(0.2..1.0)
            } else if !inner[x] && !inner[y] {
                leak * rng.random_range(0.0..1.0)
            } else {
                0.0
            };
            q[x * n + y] = v;
            q[y * n + x] = v;
        }
    }
    Ok(MetastableChain {
        kernel: metropolis_from_proposal(&mu, &q)?,
        regions: RegionStructure::new(&labels, inner)?,
        mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fk::KernelRows;
    use crate::rng::stream;

    #[test]
    fn kernels_are_reversible() {
        let mut rng = stream(1, 0, 0, 0);
        for _ in 0..50 {
            let mu = random_distribution(6, 1.5, &mut rng).unwrap();
            let part = random_partition(6, 2, &mut rng).unwrap();
            let k = mixture_kernel(&mu, 0.4, Some(&part), &mut rng).unwrap();
            assert!(k.reversibility_defect(&mu) < 1e-14);
            for x in 0..6 {
                for y in 0..6 {
                    if part.cell_of(x) != part.cell_of(y) {
                        assert_eq!(k.row(x)[y], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn instances_build() {
        let mut rng = stream(2, 0, 0, 0);
        for block_preserving in [false, true] {
            let shape = InstanceShape {
                block_preserving,
                ..Default::default()
            };
            for _ in 0..50 {
                let inst = random_instance(&shape, &mut rng).unwrap();
                let s = inst.sequence.state_count();
                assert!((4..=8).contains(&s));
                assert!((1..=6).contains(&inst.sequence.stage_count()));
                assert_eq!(inst.phi.len(), s);
            }
        }
    }

    #[test]
    fn metastable_chain_is_reversible() {
        let mut rng = stream(3, 0, 0, 0);
        for _ in 0..50 {
            let c = random_metastable_chain(0.05, &mut rng).unwrap();
            assert!(c.kernel.reversibility_defect(&c.mu) < 1e-14);
            assert!(!c.regions.border().is_empty());
        }
    }
}
