//! Upper bounds on the asymptotic variance and on the quality of metastable
//! approximations, with the constants they are built from.

mod counterexample;

pub use counterexample::{counterexample_instance, first_term_in_next_measure, Counterexample};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fk::{
    absorption_probabilities, asymptotic_variance_exact, local_mixing, metastable_kernel,
    metastable_t_kernel, mixing_constants, sup_operator_distance, AlphaRule, BridgingSequence,
    FiniteDistribution, KernelRows, Partition, RegionStructure, SubKernel, TransitionKernel,
};

/// Slack allowed when checking `exact ≤ bound`.
pub const DOMINATION_TOL: f64 = 1e-9;

fn serialize_extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v > 0.0 {
        s.serialize_str("+inf")
    } else {
        s.serialize_str(&v.to_string())
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BoundConstants {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_k_loc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_a: Option<f64>,
    /// `B_{k,k+1}` for `k = 0..n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_b: Option<Vec<f64>>,
    /// `⫴K_j − μ̂_j⫴_∞` for `j = 1..n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metastable_distances: Option<Vec<f64>>,
    /// `‖φ − μ_n(φ)‖_∞`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_sup: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_variance: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub bound_name: &'static str,
    pub constants: BoundConstants,
    pub precondition_ok: bool,
    #[serde(serialize_with = "serialize_extended")]
    pub bound_value: f64,
    pub exact_value: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl BoundReport {
    /// True unless the precondition holds and the exact value exceeds the
    /// bound by more than [`DOMINATION_TOL`].
    pub fn dominates(&self) -> bool {
        match self.exact_value {
            Some(v) if self.precondition_ok => v <= self.bound_value + DOMINATION_TOL,
            _ => true,
        }
    }
}

/// `Var / (1 − (1−γ)²Γ)`, or `+∞` when `Γ ≥ 1/(1−γ)²`.
pub fn global_bound_value(variance: f64, gamma_g: f64, gamma_k: f64) -> f64 {
    let contraction = (1.0 - gamma_k).powi(2) * gamma_g;
    if contraction < 1.0 {
        variance / (1.0 - contraction)
    } else {
        f64::INFINITY
    }
}

/// `(1 + n A Γ / (1 − (1−γ_loc)²Γ)) Var`, or `+∞` when `Γ ≥ 1/(1−γ_loc)²`.
pub fn no_mixing_bound_value(variance: f64, n: usize, a: f64, gamma_g: f64, gamma_loc: f64) -> f64 {
    let contraction = (1.0 - gamma_loc).powi(2) * gamma_g;
    if contraction < 1.0 {
        (1.0 + n as f64 * a * gamma_g / (1.0 - contraction)) * variance
    } else {
        f64::INFINITY
    }
}

fn check_phi(seq: &BridgingSequence, phi: &[f64]) -> Result<()> {
    if phi.len() != seq.state_count() {
        return Err(Error::DimensionMismatch {
            expected: seq.state_count(),
            found: phi.len(),
        });
    }
    Ok(())
}

/// Bound under a global mixing assumption on every kernel.
pub fn bound_global(seq: &BridgingSequence, phi: &[f64]) -> Result<BoundReport> {
    check_phi(seq, phi)?;
    let exact = asymptotic_variance_exact(seq, phi)?;
    let mc = mixing_constants(seq)?;
    let bound = global_bound_value(exact.target_variance, mc.gamma_g, mc.gamma_k);
    Ok(BoundReport {
        bound_name: "global-mixing",
        constants: BoundConstants {
            gamma_g: Some(mc.gamma_g),
            gamma_k: Some(mc.gamma_k),
            target_variance: Some(exact.target_variance),
            ..Default::default()
        },
        precondition_ok: bound.is_finite(),
        bound_value: bound,
        exact_value: Some(exact.total),
        notes: vec![],
    })
}

/// `A = max_{j<k, r} μ_k(F^(r)) / μ_j(F^(r))` for a partition shared by all
/// stages; `1` when there is a single stage.
pub fn growth_constant_a(seq: &BridgingSequence, partition: &Partition) -> Result<f64> {
    let masses: Vec<Vec<f64>> = seq
        .distributions()
        .iter()
        .map(|mu| partition.masses(mu))
        .collect();
    for (k, m) in masses.iter().enumerate() {
        if let Some(r) = m.iter().position(|&v| v <= 0.0) {
            return Err(Error::InvalidPartition(format!(
                "cell {r} has zero mass at stage {k}"
            )));
        }
    }
    let mut a: f64 = 1.0;
    for k in 1..masses.len() {
        for j in 0..k {
            for r in 0..partition.cell_count() {
                a = a.max(masses[k][r] / masses[j][r]);
            }
        }
    }
    Ok(a)
}

/// Bound for kernels that never move mass between the cells of a fixed
/// partition.
pub fn bound_no_mixing(seq: &BridgingSequence, partition: &Partition, phi: &[f64]) -> Result<BoundReport> {
    check_phi(seq, phi)?;
    if partition.state_count() != seq.state_count() {
        return Err(Error::DimensionMismatch {
            expected: seq.state_count(),
            found: partition.state_count(),
        });
    }
    let a = growth_constant_a(seq, partition)?;
    let parts = vec![partition; seq.stage_count()];
    let (gamma_loc, _) = local_mixing(seq, &parts)?;
    let exact = asymptotic_variance_exact(seq, phi)?;
    let gamma_g = crate::fk::max_weight(seq);
    let bound = no_mixing_bound_value(exact.target_variance, seq.stage_count(), a, gamma_g, gamma_loc);
    Ok(BoundReport {
        bound_name: "no-mixing-between-modes",
        constants: BoundConstants {
            gamma_g: Some(gamma_g),
            gamma_k_loc: Some(gamma_loc),
            growth_a: Some(a),
            target_variance: Some(exact.target_variance),
            ..Default::default()
        },
        precondition_ok: bound.is_finite(),
        bound_value: bound,
        exact_value: Some(exact.total),
        notes: vec![],
    })
}

/// `B_{k,k+1} = max_r μ_{k+1}(F_k^(r)) / μ_k(F_k^(r))` for `k = 0..n`, with
/// `partitions[k]` the partition of stage `k`.
pub fn growth_within_mode(seq: &BridgingSequence, partitions: &[Partition]) -> Result<Vec<f64>> {
    let n = seq.stage_count();
    if partitions.len() < n {
        return Err(Error::InvalidPartition(format!(
            "need partitions for stages 0..{n}, found {}",
            partitions.len()
        )));
    }
    (0..n)
        .map(|k| {
            let p = &partitions[k];
            let now = p.masses(seq.distribution(k));
            let next = p.masses(seq.distribution(k + 1));
            let mut b = f64::NEG_INFINITY;
            for r in 0..p.cell_count() {
                if now[r] <= 0.0 {
                    return Err(Error::InvalidPartition(format!(
                        "cell {r} has zero mass at stage {k}"
                    )));
                }
                b = b.max(next[r] / now[r]);
            }
            Ok(b)
        })
        .collect()
}

/// Metastable kernels `μ̂_j` for `j = 1..n` built from the sequence's own
/// partitions with the exit-probability rule (`α_r(x) = K_j(x, F_j^(r))`) or
/// the stationary-mass rule.
pub fn default_metastable_kernels(seq: &BridgingSequence, exit_rule: bool) -> Result<Vec<SubKernel>> {
    if !seq.has_partitions() {
        return Err(Error::InvalidPartition("sequence has no partitions".into()));
    }
    (1..=seq.stage_count())
        .map(|j| {
            let rule = if exit_rule {
                AlphaRule::ExitProbability(seq.kernel(j))
            } else {
                AlphaRule::StationaryMass
            };
            Ok(metastable_kernel(seq.distribution(j), seq.partition(j).unwrap(), rule)?.to_sub_kernel())
        })
        .collect()
}

/// Bound for multimodal sequences whose kernels are close (in `⫴·⫴_∞`) to
/// metastable kernels. `metastable[j-1]` is `μ̂_j`, `j = 1..n`.
///
/// The last term `V_{n,n} = Var_{μ_n}(φ)` is bounded by `‖φ − μ_n(φ)‖²_∞`.
pub fn bound_with_mixing(
    seq: &BridgingSequence,
    metastable: &[SubKernel],
    phi: &[f64],
) -> Result<BoundReport> {
    check_phi(seq, phi)?;
    let n = seq.stage_count();
    if !seq.has_partitions() {
        return Err(Error::InvalidPartition("sequence has no partitions".into()));
    }
    if metastable.len() < n.saturating_sub(1) {
        return Err(Error::InvalidParameter(format!(
            "need metastable kernels for stages 1..{}, found {}",
            n.saturating_sub(1),
            metastable.len()
        )));
    }
    let growth = growth_within_mode(seq, seq.partitions())?;
    let distances = metastable
        .iter()
        .enumerate()
        .take(n)
        .map(|(i, m)| sup_operator_distance(seq.kernel(i + 1), m))
        .collect::<Result<Vec<_>>>()?;
    let gamma_g = crate::fk::max_weight(seq);
    let target = seq.target();
    let mean = target.expectation(phi);
    let phi_sup = target
        .support()
        .iter()
        .map(|&x| (phi[x] - mean).abs())
        .fold(0.0, f64::max);
    let sq = phi_sup * phi_sup;

    // factors[j] = B_{j,j+1} + Γ ⫴K_j − μ̂_j⫴ for j = 1..n-1.
    let factor = |j: usize| growth[j] + gamma_g * distances[j - 1];
    let mut bound = sq;
    for k in 0..n {
        let product: f64 = (k + 1..n).map(factor).product();
        bound += gamma_g * product * sq;
    }
    let exact = asymptotic_variance_exact(seq, phi)?;
    Ok(BoundReport {
        bound_name: "multimodal-with-mixing",
        constants: BoundConstants {
            gamma_g: Some(gamma_g),
            growth_b: Some(growth),
            metastable_distances: Some(distances),
            phi_sup: Some(phi_sup),
            target_variance: Some(exact.target_variance),
            ..Default::default()
        },
        precondition_ok: true,
        bound_value: bound,
        exact_value: Some(exact.total),
        notes: vec!["last term bounded by the squared sup norm of the centred test function".into()],
    })
}

/// Both sides of the metastable approximation bound for `P^t`.
#[derive(Clone, Debug, Serialize)]
pub struct MetastableQuality {
    pub t: usize,
    /// `max_{x∈B} P_x(X_0, …, X_{⌊t/2⌋} ∈ B)`.
    pub stay_term: f64,
    /// `2 max_i max_{⌈t/2⌉≤r≤t} max_{x∈I^(i)} d_TV(P^r(x,·), μ^(i))`.
    pub mixing_term: f64,
    pub bound: f64,
    /// `⫴P^t − π̂^(t)⫴_∞`.
    pub distance: f64,
}

impl MetastableQuality {
    pub fn holds(&self) -> bool {
        self.distance <= self.bound + DOMINATION_TOL
    }
}

pub fn bound_metastable_quality(
    p: &TransitionKernel,
    t: usize,
    regions: &RegionStructure,
    mu: &FiniteDistribution,
) -> Result<MetastableQuality> {
    if t < 2 {
        return Err(Error::InvalidParameter(format!("t = {t}; need t ≥ 2")));
    }
    let n = regions.state_count();
    if p.dim() != n || mu.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.dim(),
        });
    }
    let u = t / 2;
    let q = absorption_probabilities(p, regions, u);
    let stay_term = regions
        .border()
        .iter()
        .map(|&x| 1.0 - q.iter().map(|qj| qj[x]).sum::<f64>())
        .fold(0.0, f64::max)
        .max(0.0);

    let local = regions.mode_restrictions(mu)?;
    let lo = t.div_ceil(2);
    let mut tv_max: f64 = 0.0;
    for (j, muj) in local.iter().enumerate() {
        for x in regions.inner(j) {
            let mut row = vec![0.0; n];
            row[x] = 1.0;
            for r in 1..=t {
                row = p.push_forward(&row);
                if r >= lo {
                    tv_max = tv_max.max(muj.tv_distance(&row));
                }
            }
        }
    }
    let mixing_term = 2.0 * tv_max;
    let pi = metastable_t_kernel(p, t, regions, mu)?;
    let distance = sup_operator_distance(&p.power(t), &pi)?;
    Ok(MetastableQuality {
        t,
        stay_term,
        mixing_term,
        bound: stay_term + mixing_term,
        distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(w: &[f64]) -> FiniteDistribution {
        FiniteDistribution::new(w.to_vec()).unwrap()
    }

    #[test]
    fn global_bound_arithmetic() {
        assert!((global_bound_value(1.0, 2.0, 0.5) - 2.0).abs() < 1e-15);
        assert_eq!(global_bound_value(1.0, 5.0, 0.5), f64::INFINITY);
        assert_eq!(global_bound_value(1.0, 4.0, 0.5), f64::INFINITY);
    }

    #[test]
    fn global_bound_with_perfect_mixing_is_the_variance() {
        let mu = dist(&[0.1, 0.2, 0.7]);
        let k = TransitionKernel::perfect_mixing(&mu);
        let seq = BridgingSequence::new(vec![mu.clone(), mu.clone(), mu.clone()], vec![k.clone(), k], vec![])
            .unwrap();
        let phi = [1.0, -2.0, 0.5];
        let r = bound_global(&seq, &phi).unwrap();
        assert!(r.precondition_ok);
        assert!((r.bound_value - mu.variance(&phi)).abs() < 1e-12);
        assert!((r.exact_value.unwrap() - mu.variance(&phi)).abs() < 1e-12);
    }

    #[test]
    fn no_mixing_bound_reduces_to_n_plus_one() {
        let mu = dist(&[0.3, 0.7]);
        let k = TransitionKernel::perfect_mixing(&mu);
        let seq = BridgingSequence::new(
            vec![mu.clone(), mu.clone(), mu.clone(), mu.clone()],
            vec![k.clone(), k.clone(), k],
            vec![],
        )
        .unwrap();
        let phi = [1.0, 0.0];
        let r = bound_no_mixing(&seq, &Partition::single(2), &phi).unwrap();
        assert_eq!(r.constants.growth_a, Some(1.0));
        assert!((r.bound_value - 4.0 * mu.variance(&phi)).abs() < 1e-12);
    }

    #[test]
    fn growth_two_mode_example() {
        let mu0 = dist(&[0.5, 0.5]);
        let mu1 = dist(&[1.0 / 3.0, 2.0 / 3.0]);
        let k = TransitionKernel::perfect_mixing(&mu1);
        let seq = BridgingSequence::new(vec![mu0, mu1], vec![k], vec![]).unwrap();
        let p = Partition::from_labels(&[0, 1]).unwrap();
        let b = growth_within_mode(&seq, &[p]).unwrap();
        assert!((b[0] - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn metastable_kernel_equal_to_k_leaves_product_of_growth() {
        let mu = dist(&[0.25, 0.25, 0.5]);
        let k = TransitionKernel::perfect_mixing(&mu);
        let seq = BridgingSequence::new(
            vec![mu.clone(), mu.clone(), mu.clone(), mu.clone()],
            vec![k.clone(), k.clone(), k],
            vec![Partition::single(3)],
        )
        .unwrap();
        let m = default_metastable_kernels(&seq, false).unwrap();
        let phi = [1.0, 0.0, 0.0];
        let r = bound_with_mixing(&seq, &m, &phi).unwrap();
        assert!(r.constants.metastable_distances.as_ref().unwrap().iter().all(|&d| d < 1e-15));
        assert!(r.constants.growth_b.as_ref().unwrap().iter().all(|&b| (b - 1.0).abs() < 1e-15));
        // Γ = 1 and all factors are 1: bound = (n + 1) ‖φ̄‖²_∞.
        assert!((r.bound_value - 4.0 * 0.75f64.powi(2)).abs() < 1e-12);
        assert!(r.dominates());
    }

    #[test]
    fn metastable_quality_trivial_cases() {
        // No border and perfectly mixed blocks: both terms vanish.
        let p = TransitionKernel::new(vec![
            vec![0.5, 0.5, 0.0],
            vec![0.5, 0.5, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let regions = RegionStructure::new(&[0, 0, 1], vec![true; 3]).unwrap();
        let mu = dist(&[0.25, 0.25, 0.5]);
        let q = bound_metastable_quality(&p, 4, &regions, &mu).unwrap();
        assert!(q.bound.abs() < 1e-15 && q.distance.abs() < 1e-15);

        // A border state that never leaves.
        let p = TransitionKernel::new(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let regions = RegionStructure::new(&[0, 0, 1], vec![true, false, true]).unwrap();
        let q = bound_metastable_quality(&p, 6, &regions, &mu).unwrap();
        assert_eq!(q.stay_term, 1.0);
        assert!(q.holds());
        assert!(bound_metastable_quality(&p, 1, &regions, &mu).is_err());
    }
}
