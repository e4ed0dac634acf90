//! Bridging sequences ending at the Potts model, with their SMC mutation
//! kernels.
//!
//! * Interpolation: `μ_k` is the `k`-spin model on the first `k` spins with
//!   the remaining `M − k` spins i.i.d. uniform (`k = 0..=M`).
//! * Tempering: `μ_i` is the `M`-spin model at `β̃ · i / n`.

use serde::Serialize;

use crate::error::{invalid_param, Result};
use crate::rng::StreamRng;
use crate::smc::BridgingModel;

use super::glauber::{GlauberTable, SpinConfiguration};
use super::lattice::{lattice_states, neumaier_sum, LogFactorials, MagnetisationPmf, MagnetisationState};
use super::{PottsParams, BETA_C};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BridgingKind {
    Interpolation,
    Tempering,
}

/// Number of Glauber steps `t_k` in the mutation kernel of stage `k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum StepSchedule {
    /// `t_k = ⌈c1 · L · ln²L⌉` with `L = k` (interpolation) or `L = M`
    /// (tempering, the same at every stage).
    PolyLog { c1: f64 },
    /// `t_1, t_2, …`; must cover every stage.
    Explicit(Vec<usize>),
}

impl StepSchedule {
    pub fn poly_log(l: usize, c1: f64) -> usize {
        if l <= 1 {
            return 0;
        }
        let lf = l as f64;
        (c1 * lf * lf.ln().powi(2)).ceil() as usize
    }
}

fn square_sum(c: &[usize; 3]) -> f64 {
    c.iter().map(|n| (n * n) as f64).sum()
}

#[derive(Clone, Debug)]
pub struct PottsBridging {
    kind: BridgingKind,
    params: PottsParams,
    /// `log Z_k` of the spin-level model of each stage.
    log_z: Vec<f64>,
    /// Inverse temperature of each stage.
    betas: Vec<f64>,
    /// `t_k` for `k = 1..=n` (entry 0 unused).
    steps: Vec<usize>,
    /// Heat-bath table of each stage's kernel (entry 0 unused).
    tables: Vec<Option<GlauberTable>>,
}

impl PottsBridging {
    /// Interpolation from i.i.d. uniform spins to `params`, with `n = M`
    /// stages.
    pub fn interpolation(params: PottsParams, schedule: &StepSchedule) -> Result<Self> {
        let m = params.m;
        let steps = Self::resolve_schedule(schedule, m, |k| k)?;
        let lf = LogFactorials::new(m);
        let log_z = (0..=m)
            .map(|k| MagnetisationPmf::new(k, params.beta_tilde, &lf).log_partition())
            .collect();
        let tables = (0..=m)
            .map(|k| (k >= 1).then(|| GlauberTable::new(k, params.beta_tilde)))
            .collect();
        Ok(Self {
            kind: BridgingKind::Interpolation,
            params,
            log_z,
            betas: vec![params.beta_tilde; m + 1],
            steps,
            tables,
        })
    }

    /// Tempering from `β̃ = 0` to `params.beta_tilde` in `stages` equal steps.
    pub fn tempering(params: PottsParams, stages: usize, schedule: &StepSchedule) -> Result<Self> {
        if stages == 0 {
            return Err(invalid_param("tempering needs at least one stage"));
        }
        let m = params.m;
        let steps = Self::resolve_schedule(schedule, stages, |_| m)?;
        let lf = LogFactorials::new(m);
        let betas: Vec<f64> = (0..=stages)
            .map(|i| params.beta_tilde * i as f64 / stages as f64)
            .collect();
        let log_z = betas
            .iter()
            .map(|&b| MagnetisationPmf::new(m, b, &lf).log_partition())
            .collect();
        let tables = betas
            .iter()
            .enumerate()
            .map(|(i, &b)| (i >= 1).then(|| GlauberTable::new(m, b)))
            .collect();
        Ok(Self {
            kind: BridgingKind::Tempering,
            params,
            log_z,
            betas,
            steps,
            tables,
        })
    }

    fn resolve_schedule(schedule: &StepSchedule, n: usize, scale: impl Fn(usize) -> usize) -> Result<Vec<usize>> {
        let mut steps = vec![0];
        match schedule {
            StepSchedule::PolyLog { c1 } => {
                if !(*c1 >= 0.0 && c1.is_finite()) {
                    return Err(invalid_param(format!("schedule constant must be ≥ 0, got {c1}")));
                }
                steps.extend((1..=n).map(|k| StepSchedule::poly_log(scale(k), *c1)));
            }
            StepSchedule::Explicit(t) => {
                if t.len() < n {
                    return Err(invalid_param(format!(
                        "step schedule has {} entries, need {n}",
                        t.len()
                    )));
                }
                steps.extend_from_slice(&t[..n]);
            }
        }
        Ok(steps)
    }

    pub fn kind(&self) -> BridgingKind {
        self.kind
    }

    pub fn params(&self) -> PottsParams {
        self.params
    }

    /// True when the target is at the critical temperature.
    pub fn is_critical(&self) -> bool {
        (self.params.beta_tilde - BETA_C).abs() < 1e-15
    }

    /// `t_k` for `k` in `1..=n`.
    pub fn steps(&self, k: usize) -> usize {
        self.steps[k]
    }

    /// Log-partition function of the spin-level Gibbs factor of stage `k`.
    pub fn log_partition(&self, k: usize) -> f64 {
        self.log_z[k]
    }

    pub fn beta_at(&self, k: usize) -> f64 {
        self.betas[k]
    }

    /// Number of spins whose colour counts the weight and kernel of stage
    /// `k` depend on.
    pub fn block_len(&self, k: usize) -> usize {
        match self.kind {
            BridgingKind::Interpolation => k,
            BridgingKind::Tempering => self.params.m,
        }
    }

    /// `g_{k,k+1}` as a function of the counts of the first `block_len(k)`
    /// spins and, for interpolation, the colour of spin `k + 1` (ignored for
    /// tempering).
    pub fn weight_from_counts(&self, k: usize, counts: &[usize; 3], next: usize) -> f64 {
        match self.kind {
            BridgingKind::Interpolation => {
                let beta = self.params.beta_tilde;
                let now = if k == 0 { 0.0 } else { beta * square_sum(counts) / k as f64 };
                let mut grown = *counts;
                grown[next] += 1;
                let later = beta * square_sum(&grown) / (k + 1) as f64;
                3.0 * (self.log_z[k] - self.log_z[k + 1] + later - now).exp()
            }
            BridgingKind::Tempering => {
                let db = self.betas[k + 1] - self.betas[k];
                (self.log_z[k] - self.log_z[k + 1] + db * square_sum(counts) / self.params.m as f64).exp()
            }
        }
    }

    /// Law of the counts that the stage-`k` weight depends on.
    pub fn stage_pmf(&self, k: usize) -> MagnetisationPmf {
        let size = self.block_len(k);
        MagnetisationPmf::new(size, self.betas[k], &LogFactorials::new(size))
    }

    /// Exact `max_x g_{k,k+1}(x)`, enumerated over colour counts.
    pub fn max_weight_exact(&self, k: usize) -> f64 {
        let colours = match self.kind {
            BridgingKind::Interpolation => 3,
            BridgingKind::Tempering => 1,
        };
        lattice_states(self.block_len(k))
            .flat_map(|s| (0..colours).map(move |c| (s, c)))
            .map(|(s, c)| self.weight_from_counts(k, &s.counts, c))
            .fold(0.0, f64::max)
    }

    /// `μ_k(g_{k,k+1})`, which is 1 exactly.
    pub fn weight_normalization(&self, k: usize) -> f64 {
        let pmf = self.stage_pmf(k);
        neumaier_sum(pmf.iter().map(|(s, lp)| {
            let g = match self.kind {
                BridgingKind::Interpolation => {
                    (0..3).map(|c| self.weight_from_counts(k, &s.counts, c)).sum::<f64>() / 3.0
                }
                BridgingKind::Tempering => self.weight_from_counts(k, &s.counts, 0),
            };
            lp.exp() * g
        }))
    }

    /// Exact law of the full colour counts under the final distribution.
    pub fn target_pmf(&self) -> MagnetisationPmf {
        MagnetisationPmf::new(self.params.m, self.params.beta_tilde, &LogFactorials::new(self.params.m))
    }

    pub fn magnetisation(sigma: &SpinConfiguration) -> MagnetisationState {
        sigma.magnetisation()
    }
}

impl BridgingModel for PottsBridging {
    type State = SpinConfiguration;

    fn stage_count(&self) -> usize {
        self.log_z.len() - 1
    }

    fn sample_initial(&self, rng: &mut StreamRng) -> SpinConfiguration {
        SpinConfiguration::uniform(self.params.m, rng)
    }

    fn weight(&self, k: usize, x: &SpinConfiguration) -> f64 {
        let len = self.block_len(k);
        let counts = x.prefix_counts(len);
        let next = match self.kind {
            BridgingKind::Interpolation => x.spins()[k] as usize,
            BridgingKind::Tempering => 0,
        };
        self.weight_from_counts(k, &counts, next)
    }

    fn mutate(&self, k: usize, x: &mut SpinConfiguration, rng: &mut StreamRng) {
        use rand::Rng;
        let len = self.block_len(k);
        let table = self.tables[k].as_ref().expect("kernel index starts at 1");
        let mut counts = x.prefix_counts(len);
        let spins = x.spins_mut();
        for _ in 0..self.steps[k] {
            table.step(spins, &mut counts, rng);
        }
        for s in &mut spins[len..] {
            *s = rng.random_range(0..3u8);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potts::{log_sum_exp, BarycentricGeometry};
    use crate::smc::{run_smc, ResamplingPolicy, SeedLineage};

    /// Spin-level log-density of stage `k` by enumeration over all `3^M`
    /// configurations.
    fn brute_log_density(b: &PottsBridging, k: usize) -> Vec<f64> {
        let m = b.params().m;
        let configs: Vec<Vec<u8>> = (0..3usize.pow(m as u32))
            .map(|code| {
                let mut x = code;
                (0..m)
                    .map(|_| {
                        let c = (x % 3) as u8;
                        x /= 3;
                        c
                    })
                    .collect()
            })
            .collect();
        let raw: Vec<f64> = configs
            .iter()
            .map(|s| {
                let sigma = SpinConfiguration::new(s.clone()).unwrap();
                let len = b.block_len(k);
                if len == 0 {
                    return 0.0;
                }
                b.beta_at(k) * square_sum(&sigma.prefix_counts(len)) / len as f64
            })
            .collect();
        let z = log_sum_exp(&raw);
        raw.iter().map(|r| r - z).collect()
    }

    fn check_against_brute_force(b: &PottsBridging) {
        let m = b.params().m;
        for k in 0..b.stage_count() {
            let now = brute_log_density(b, k);
            let next = brute_log_density(b, k + 1);
            for (code, (a, c)) in now.iter().zip(&next).enumerate() {
                let mut x = code;
                let spins: Vec<u8> = (0..m)
                    .map(|_| {
                        let c = (x % 3) as u8;
                        x /= 3;
                        c
                    })
                    .collect();
                let sigma = SpinConfiguration::new(spins).unwrap();
                let g = b.weight(k, &sigma);
                assert!((g - (c - a).exp()).abs() < 1e-11, "k = {k}");
            }
        }
    }

    #[test]
    fn weights_are_density_ratios() {
        let params = PottsParams::critical(6).unwrap();
        check_against_brute_force(&PottsBridging::interpolation(params, &StepSchedule::PolyLog { c1: 1.0 }).unwrap());
        check_against_brute_force(&PottsBridging::tempering(params, 4, &StepSchedule::PolyLog { c1: 1.0 }).unwrap());
    }

    #[test]
    fn first_weight_is_one() {
        let b = PottsBridging::interpolation(PottsParams::critical(20).unwrap(), &StepSchedule::PolyLog { c1: 1.0 }).unwrap();
        for c in 0..3 {
            assert!((b.weight_from_counts(0, &[0, 0, 0], c) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn weights_average_to_one() {
        let params = PottsParams::critical(60).unwrap();
        let b = PottsBridging::interpolation(params, &StepSchedule::PolyLog { c1: 1.0 }).unwrap();
        for k in 0..60 {
            assert!((b.weight_normalization(k) - 1.0).abs() < 1e-8, "k = {k}");
        }
        let t = PottsBridging::tempering(params, 10, &StepSchedule::PolyLog { c1: 1.0 }).unwrap();
        for k in 0..10 {
            assert!((t.weight_normalization(k) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn weights_stay_below_sixteen() {
        let b = PottsBridging::interpolation(PottsParams::critical(200).unwrap(), &StepSchedule::PolyLog { c1: 1.0 }).unwrap();
        let worst = (0..200).map(|k| b.max_weight_exact(k)).fold(0.0, f64::max);
        assert!(worst <= 16.0, "{worst}");
    }

    #[test]
    fn schedule() {
        assert_eq!(StepSchedule::poly_log(1, 1.0), 0);
        assert_eq!(StepSchedule::poly_log(10, 1.0), (10.0 * 10f64.ln().powi(2)).ceil() as usize);
        let params = PottsParams::critical(5).unwrap();
        assert!(PottsBridging::interpolation(params, &StepSchedule::Explicit(vec![1; 4])).is_err());
        let b = PottsBridging::interpolation(params, &StepSchedule::Explicit(vec![1, 2, 3, 4, 5])).unwrap();
        assert_eq!(b.steps(3), 3);
        assert_eq!(b.stage_count(), 5);
    }

    #[test]
    fn small_sampler_recovers_mode_masses() {
        let params = PottsParams::critical(12).unwrap();
        let b = PottsBridging::interpolation(params, &StepSchedule::PolyLog { c1: 1.0 }).unwrap();
        let geometry = BarycentricGeometry::new(0.02, 1).unwrap();
        let exact = b.target_pmf().mode_masses(&geometry);
        let phi = |s: &SpinConfiguration| (geometry.mode(&s.magnetisation()) == 3) as u8 as f64;
        let out = run_smc(&b, 20_000, SeedLineage { seed: 5, replicate: 0 }, ResamplingPolicy::EveryStage, &phi).unwrap();
        // Loose: a few binomial standard errors inflated for resampling.
        let sd = (exact[3] * (1.0 - exact[3]) / 20_000.0).sqrt();
        assert!((out.estimate - exact[3]).abs() < 10.0 * sd, "{} vs {}", out.estimate, exact[3]);
    }
}
