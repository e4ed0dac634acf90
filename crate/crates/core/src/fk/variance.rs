use serde::Serialize;

use super::kernel::{operator_gap_l2, KernelRows};
use super::sequence::{BridgingSequence, Partition};
use crate::error::{Error, Result};

/// Terms `V_{k,n}(φ)` of the asymptotic variance of the SMC estimator of
/// `μ_n(φ)`.
#[derive(Clone, Debug, Serialize)]
pub struct VarianceReport {
    /// `terms[k] = V_{k,n}(φ)` for `k = 0..=n`.
    pub terms: Vec<f64>,
    pub total: f64,
    /// `Var_{μ_n}(φ)`, which is also the last term.
    pub target_variance: f64,
}

/// Exact asymptotic variance by the backward recursion
/// `h_n = φ − μ_n(φ)`, `h_k = g_{k,k+1} · K_{k+1} h_{k+1}`,
/// `V_{k,n} = μ_k(h_k²)`.
pub fn asymptotic_variance_exact(seq: &BridgingSequence, phi: &[f64]) -> Result<VarianceReport> {
    let s = seq.state_count();
    if phi.len() != s {
        return Err(Error::DimensionMismatch {
            expected: s,
            found: phi.len(),
        });
    }
    let n = seq.stage_count();
    let target = seq.target();
    let mean = target.expectation(phi);
    let mut h: Vec<f64> = (0..s)
        .map(|x| if target.prob(x) > 0.0 { phi[x] - mean } else { 0.0 })
        .collect();
    let mut terms = vec![0.0; n + 1];
    terms[n] = square_norm(seq, n, &h);
    for k in (0..n).rev() {
        let kh = seq.kernel(k + 1).apply(&h);
        let g = seq.weight(k);
        h = (0..s).map(|x| if g[x] > 0.0 { g[x] * kh[x] } else { 0.0 }).collect();
        terms[k] = square_norm(seq, k, &h);
    }
    Ok(VarianceReport {
        total: terms.iter().sum(),
        target_variance: terms[n],
        terms,
    })
}

fn square_norm(seq: &BridgingSequence, k: usize, h: &[f64]) -> f64 {
    seq.distribution(k).expectation(&h.iter().map(|v| v * v).collect::<Vec<_>>())
}

/// Mixing constants of a bridging sequence.
#[derive(Clone, Debug, Serialize)]
pub struct MixingConstants {
    /// `Γ_g = max_k max_x g_{k,k+1}(x)`.
    pub gamma_g: f64,
    /// `γ_K = 1 − max_k ‖K_k − μ_k‖_{L²(μ_k)}`.
    pub gamma_k: f64,
    /// Operator norms for `K_1..K_n`.
    pub gaps: Vec<f64>,
    /// `γ_K^loc`, from the kernels restricted to the partition cells.
    pub gamma_k_loc: Option<f64>,
    /// `local_gaps[k-1][r]` is the norm of the restriction of `K_k` to cell `r`.
    pub local_gaps: Option<Vec<Vec<f64>>>,
}

pub fn max_weight(seq: &BridgingSequence) -> f64 {
    (0..seq.stage_count())
        .flat_map(|k| seq.weight(k).iter().copied())
        .fold(0.0, f64::max)
}

/// `Γ_g` and `γ_K`.
pub fn mixing_constants(seq: &BridgingSequence) -> Result<MixingConstants> {
    let gaps = (1..=seq.stage_count())
        .map(|k| {
            operator_gap_l2(seq.kernel(k), seq.distribution(k)).map_err(|e| match e {
                Error::NotInvariant { defect, .. } => Error::NotInvariant { stage: k, defect },
                e => e,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MixingConstants {
        gamma_g: max_weight(seq),
        gamma_k: 1.0 - gaps.iter().copied().fold(0.0, f64::max),
        gaps,
        gamma_k_loc: None,
        local_gaps: None,
    })
}

/// `Γ_g`, `γ_K` and `γ_K^loc`, using the sequence's own partitions (stage `k`
/// partition for `K_k`). Fails naming `(k, r)` if some kernel leaks mass out
/// of a cell.
pub fn mixing_constants_with_local(seq: &BridgingSequence) -> Result<MixingConstants> {
    if !seq.has_partitions() {
        return Err(Error::InvalidPartition("sequence has no partitions".into()));
    }
    let partitions: Vec<&Partition> = (1..=seq.stage_count())
        .map(|k| seq.partition(k).unwrap())
        .collect();
    let (gamma_loc, local) = local_mixing(seq, &partitions)?;
    let mut out = mixing_constants(seq)?;
    out.gamma_k_loc = Some(gamma_loc);
    out.local_gaps = Some(local);
    Ok(out)
}

/// `γ_K^loc` with `partitions[k-1]` applied to `K_k`.
pub fn local_mixing(
    seq: &BridgingSequence,
    partitions: &[&Partition],
) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut local = Vec::with_capacity(seq.stage_count());
    for k in 1..=seq.stage_count() {
        let p = partitions[k - 1];
        let mu = seq.distribution(k);
        let mut row = Vec::with_capacity(p.cell_count());
        for (r, cell) in p.cells().iter().enumerate() {
            let kr = seq.kernel(k).restricted(cell, k, r)?;
            let mass = mu.mass_of(cell.iter().copied());
            if mass <= 0.0 {
                return Err(Error::InvalidPartition(format!(
                    "cell {r} has zero mass at stage {k}"
                )));
            }
            let mur = super::FiniteDistribution::from_unnormalized(
                cell.iter().map(|&x| mu.prob(x)).collect(),
            )?;
            let gap = operator_gap_l2(&kr, &mur).map_err(|e| match e {
                Error::NotInvariant { defect, .. } => Error::NotInvariant { stage: k, defect },
                e => e,
            })?;
            row.push(gap);
        }
        local.push(row);
    }
    let worst = local.iter().flatten().copied().fold(0.0, f64::max);
    Ok((1.0 - worst, local))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fk::{FiniteDistribution, TransitionKernel};

    fn dist(w: &[f64]) -> FiniteDistribution {
        FiniteDistribution::new(w.to_vec()).unwrap()
    }

    #[test]
    fn constant_phi_has_zero_variance() {
        let mu0 = FiniteDistribution::uniform(3);
        let mu1 = dist(&[0.2, 0.3, 0.5]);
        let k = TransitionKernel::identity(3);
        let seq = BridgingSequence::new(vec![mu0, mu1], vec![k], vec![]).unwrap();
        let v = asymptotic_variance_exact(&seq, &[2.0, 2.0, 2.0]).unwrap();
        assert!(v.total.abs() < 1e-28);
    }

    #[test]
    fn two_state_hand_computation() {
        // μ_0 = (1/2, 1/2), μ_1 = (1/4, 3/4), K_1 = 1μ_1ᵀ, φ = (1, 0).
        // K_1 φ̄ = 0, so V = Var_{μ_1}(φ) = 3/16.
        let mu0 = FiniteDistribution::uniform(2);
        let mu1 = dist(&[0.25, 0.75]);
        let k = TransitionKernel::perfect_mixing(&mu1);
        let seq = BridgingSequence::new(vec![mu0.clone(), mu1.clone()], vec![k], vec![]).unwrap();
        let v = asymptotic_variance_exact(&seq, &[1.0, 0.0]).unwrap();
        assert!((v.total - 3.0 / 16.0).abs() < 1e-15);
        // With K_1 = identity, h_0 = g·φ̄ = (1/2·3/4, 3/2·(−1/4)) and
        // V_{0,1} = (1/2)(9/64) + (1/2)(9/64) = 9/64.
        let seq = BridgingSequence::new(vec![mu0, mu1], vec![TransitionKernel::identity(2)], vec![])
            .unwrap();
        let v = asymptotic_variance_exact(&seq, &[1.0, 0.0]).unwrap();
        assert!((v.terms[0] - 9.0 / 64.0).abs() < 1e-15);
        assert!((v.total - 9.0 / 64.0 - 3.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let mu = FiniteDistribution::uniform(2);
        let seq = BridgingSequence::new(vec![mu], vec![], vec![]).unwrap();
        assert!(asymptotic_variance_exact(&seq, &[1.0]).is_err());
    }

    #[test]
    fn equal_distributions_have_unit_gamma_g() {
        let mu = dist(&[0.2, 0.8]);
        let k = TransitionKernel::perfect_mixing(&mu);
        let seq = BridgingSequence::new(vec![mu.clone(), mu.clone(), mu], vec![k.clone(), k], vec![])
            .unwrap();
        let c = mixing_constants(&seq).unwrap();
        assert_eq!(c.gamma_g, 1.0);
        assert!((c.gamma_k - 1.0).abs() < 1e-14);
    }

    #[test]
    fn leaky_block_is_named() {
        let mu = FiniteDistribution::uniform(2);
        let k = TransitionKernel::perfect_mixing(&mu);
        let p = Partition::from_labels(&[0, 1]).unwrap();
        let seq = BridgingSequence::new(vec![mu.clone(), mu], vec![k], vec![p]).unwrap();
        assert!(matches!(
            mixing_constants_with_local(&seq),
            Err(Error::LeakyBlock { stage: 1, block: 0, .. })
        ));
    }
}
