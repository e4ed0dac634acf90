//! The particle sampler: i.i.d. initialization from `μ_0`, then for each
//! stage multinomial resampling with weights `g_{k,k+1}` followed by a
//! mutation through `K_{k+1}`.

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid_param, Error, Result};
use crate::fk::{BridgingSequence, KernelRows};
use crate::rng::{stream, StreamRng, STAGE_STREAM};

/// A bridging sequence that can be simulated.
pub trait BridgingModel: Sync {
    type State: Clone + Send + Sync;

    /// Number of bridging steps `n`.
    fn stage_count(&self) -> usize;

    /// An exact draw from `μ_0`.
    fn sample_initial(&self, rng: &mut StreamRng) -> Self::State;

    /// `g_{k,k+1}(x)` for `k` in `0..n`.
    fn weight(&self, k: usize, x: &Self::State) -> f64;

    /// One draw from `K_k(x, ·)` for `k` in `1..=n`, written over `x`.
    fn mutate(&self, k: usize, x: &mut Self::State, rng: &mut StreamRng);
}

/// Inverse-CDF sampler for a probability vector.
#[derive(Clone, Debug)]
struct CdfTable {
    cdf: Vec<f64>,
}

impl CdfTable {
    fn new(p: &[f64]) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = p
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        // Close the table at the last positive entry so that rounding never
        // selects a state of zero probability.
        if let Some(last) = p.iter().rposition(|&v| v > 0.0) {
            for c in &mut cdf[last..] {
                *c = f64::INFINITY;
            }
        }
        Self { cdf }
    }

    fn sample(&self, rng: &mut StreamRng) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u)
    }
}

/// A finite [`BridgingSequence`] as a simulation model over state indices.
pub struct FiniteModel<'a> {
    seq: &'a BridgingSequence,
    initial: CdfTable,
    rows: Vec<Vec<CdfTable>>,
}

impl<'a> FiniteModel<'a> {
    pub fn new(seq: &'a BridgingSequence) -> Self {
        let rows = (1..=seq.stage_count())
            .map(|k| {
                let kernel = seq.kernel(k);
                (0..kernel.dim()).map(|x| CdfTable::new(kernel.row(x))).collect()
            })
            .collect();
        Self {
            seq,
            initial: CdfTable::new(seq.distribution(0).weights()),
            rows,
        }
    }

    pub fn sequence(&self) -> &BridgingSequence {
        self.seq
    }
}

impl BridgingModel for FiniteModel<'_> {
    type State = usize;

    fn stage_count(&self) -> usize {
        self.seq.stage_count()
    }

    fn sample_initial(&self, rng: &mut StreamRng) -> usize {
        self.initial.sample(rng)
    }

    fn weight(&self, k: usize, x: &usize) -> f64 {
        self.seq.weight(k)[*x]
    }

    fn mutate(&self, k: usize, x: &mut usize, rng: &mut StreamRng) {
        *x = self.rows[k - 1][*x].sample(rng);
    }
}

/// When to resample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ResamplingPolicy {
    /// Multinomial resampling at every stage.
    EveryStage,
    /// Carry weights between stages and resample only when the effective
    /// sample size falls below `threshold · N`. Experimental: the variance
    /// expansion of [`crate::fk`] does not cover this mode.
    EssThreshold { threshold: f64 },
}

impl ResamplingPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::EveryStage => Ok(()),
            Self::EssThreshold { threshold } if threshold > 0.0 && threshold <= 1.0 => Ok(()),
            Self::EssThreshold { threshold } => Err(invalid_param(format!(
                "ESS threshold {threshold} outside (0, 1]"
            ))),
        }
    }

    pub fn is_experimental(&self) -> bool {
        matches!(self, Self::EssThreshold { .. })
    }
}

/// Where the random streams of a run come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SeedLineage {
    pub seed: u64,
    pub replicate: u64,
}

/// Particles at a given stage, with optional normalized weights (only in
/// ESS-threshold mode).
#[derive(Clone, Debug)]
pub struct ParticleEnsemble<S> {
    pub stage: usize,
    pub particles: Vec<S>,
    pub weights: Option<Vec<f64>>,
    pub lineage: SeedLineage,
}

#[derive(Clone, Debug)]
pub struct SmcOutput<S> {
    /// Estimate of `μ_n(φ)`.
    pub estimate: f64,
    /// ESS of the weights at stages `0..n`.
    pub ess_trace: Vec<f64>,
    /// Whether resampling happened at stages `0..n`.
    pub resampled: Vec<bool>,
    pub ensemble: ParticleEnsemble<S>,
    pub experimental: bool,
}

/// `(Σw)² / Σw²`.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}

/// `count` i.i.d. parent indices with `P(i) = w_i / Σw`.
pub fn multinomial_resample(weights: &[f64], count: usize, rng: &mut StreamRng) -> Result<Vec<usize>> {
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(invalid_param(format!("resampling weight {w}")));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(invalid_param("resampling weights sum to zero"));
    }
    let alias = WeightedAliasIndex::new(weights.to_vec())
        .map_err(|e| invalid_param(format!("resampling weights: {e}")))?;
    Ok((0..count).map(|_| alias.sample(rng)).collect())
}

/// Runs the sampler once and returns the estimate of `μ_n(φ)`.
pub fn run_smc<M, F>(
    model: &M,
    particles: usize,
    lineage: SeedLineage,
    policy: ResamplingPolicy,
    phi: &F,
) -> Result<SmcOutput<M::State>>
where
    M: BridgingModel,
    F: Fn(&M::State) -> f64 + Sync,
{
    if particles < 2 {
        return Err(invalid_param("need at least 2 particles"));
    }
    policy.validate()?;
    let SeedLineage { seed, replicate } = lineage;
    let n = model.stage_count();
    let mut xs: Vec<M::State> = (0..particles)
        .into_par_iter()
        .map(|i| model.sample_initial(&mut stream(seed, replicate, 0, i as u64)))
        .collect();
    let mut carried = vec![1.0 / particles as f64; particles];
    let mut ess_trace = Vec::with_capacity(n);
    let mut resampled = Vec::with_capacity(n);

    for k in 0..n {
        let g: Vec<f64> = xs.par_iter().map(|x| model.weight(k, x)).collect();
        let w: Vec<f64> = match policy {
            ResamplingPolicy::EveryStage => g,
            ResamplingPolicy::EssThreshold { .. } => {
                carried.iter().zip(&g).map(|(a, b)| a * b).collect()
            }
        };
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ParticleDeath { stage: k });
        }
        let ess = effective_sample_size(&w);
        ess_trace.push(ess);
        let resample = match policy {
            ResamplingPolicy::EveryStage => true,
            ResamplingPolicy::EssThreshold { threshold } => ess < threshold * particles as f64,
        };
        resampled.push(resample);
        if resample {
            let mut rng = stream(seed, replicate, k as u64, STAGE_STREAM);
            let parents = multinomial_resample(&w, particles, &mut rng)?;
            xs = parents.iter().map(|&p| xs[p].clone()).collect();
            carried.fill(1.0 / particles as f64);
        } else {
            carried = w.iter().map(|v| v / total).collect();
        }
        xs.par_iter_mut().enumerate().for_each(|(i, x)| {
            model.mutate(k + 1, x, &mut stream(seed, replicate, k as u64 + 1, i as u64))
        });
    }

    let values: Vec<f64> = xs.par_iter().map(phi).collect();
    let estimate = match policy {
        ResamplingPolicy::EveryStage => values.iter().sum::<f64>() / particles as f64,
        ResamplingPolicy::EssThreshold { .. } => {
            let total: f64 = carried.iter().sum();
            carried.iter().zip(&values).map(|(w, v)| w * v).sum::<f64>() / total
        }
    };
    Ok(SmcOutput {
        estimate,
        ess_trace,
        resampled,
        ensemble: ParticleEnsemble {
            stage: n,
            particles: xs,
            weights: policy.is_experimental().then_some(carried),
            lineage,
        },
        experimental: policy.is_experimental(),
    })
}

/// Spread of independent SMC estimates, scaled by `N`.
#[derive(Clone, Debug, Serialize)]
pub struct ReplicateVariance {
    /// Estimates of the replicates that did not die, in replicate order.
    pub estimates: Vec<f64>,
    pub mean: f64,
    /// `N` times the sample variance of `estimates`.
    pub scaled_variance: f64,
    /// Jackknife interval for `scaled_variance` at `level`; absent with fewer
    /// than three surviving replicates.
    pub ci: Option<(f64, f64)>,
    pub level: f64,
    /// Replicates lost to particle death.
    pub deaths: usize,
}

/// Runs `replicates` independent samplers (replicate ids `0..replicates`)
/// and returns `N · Var` of their estimates with a jackknife interval.
pub fn replicate_asymptotic_variance<M, F>(
    model: &M,
    phi: &F,
    particles: usize,
    replicates: usize,
    seed: u64,
    policy: ResamplingPolicy,
    level: f64,
) -> Result<ReplicateVariance>
where
    M: BridgingModel,
    F: Fn(&M::State) -> f64 + Sync,
{
    if replicates < 2 {
        return Err(invalid_param("need at least 2 replicates"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid_param(format!("confidence level {level}")));
    }
    let runs: Vec<Result<f64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            run_smc(model, particles, SeedLineage { seed, replicate: r }, policy, phi)
                .map(|o| o.estimate)
        })
        .collect();
    let mut estimates = Vec::with_capacity(replicates);
    let mut deaths = 0;
    for run in runs {
        match run {
            Ok(e) => estimates.push(e),
            Err(Error::ParticleDeath { .. }) => deaths += 1,
            Err(e) => return Err(e),
        }
    }
    let (mean, var, ci) = jackknife_variance(&estimates, level);
    let scale = particles as f64;
    Ok(ReplicateVariance {
        estimates,
        mean,
        scaled_variance: scale * var,
        ci: ci.map(|(lo, hi)| (scale * lo, scale * hi)),
        level,
        deaths,
    })
}

/// Mean, unbiased sample variance and a jackknife normal interval for the
/// variance.
pub fn jackknife_variance(xs: &[f64], level: f64) -> (f64, f64, Option<(f64, f64)>) {
    let r = xs.len();
    if r == 0 {
        return (f64::NAN, f64::NAN, None);
    }
    let mean = xs.iter().sum::<f64>() / r as f64;
    if r < 2 {
        return (mean, f64::NAN, None);
    }
    let y: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    let ss: f64 = y.iter().map(|v| v * v).sum();
    let var = ss / (r - 1) as f64;
    if r < 3 {
        return (mean, var, None);
    }
    let rf = r as f64;
    let loo: Vec<f64> = y
        .iter()
        .map(|yi| (ss - yi * yi - yi * yi / (rf - 1.0)) / (rf - 2.0))
        .collect();
    let loo_mean = loo.iter().sum::<f64>() / rf;
    let se = ((rf - 1.0) / rf * loo.iter().map(|v| (v - loo_mean).powi(2)).sum::<f64>()).sqrt();
    let z = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + level / 2.0);
    (mean, var, Some((var - z * se, var + z * se)))
}
