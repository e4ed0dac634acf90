//! A four-state, one-step sequence in which a kernel that mixes between two
//! modes yields a larger asymptotic variance than one that does not.

use crate::error::{Error, Result};
use crate::fk::{BridgingSequence, FiniteDistribution, KernelRows, Partition, TransitionKernel};

/// Four-decimal data of the instance.
const MU1: [f64; 4] = [0.1319, 0.1778, 0.0638, 0.6265];
const PHI: [f64; 4] = [0.3973, -0.5697, -0.3222, 0.1109];
const K_MIX: [[f64; 4]; 4] = [
    [0.5520, 0.1858, 0.0413, 0.2209],
    [0.1378, 0.7837, 0.0769, 0.0016],
    [0.0853, 0.2145, 0.6311, 0.0691],
    [0.0465, 0.0004, 0.0070, 0.9460],
];
const K_NOMIX: [[f64; 4]; 4] = [
    [0.8142, 0.1858, 0.0, 0.0],
    [0.1378, 0.8622, 0.0, 0.0],
    [0.0, 0.0, 0.9309, 0.0691],
    [0.0, 0.0, 0.0070, 0.9930],
];

/// Largest `|μ(x)K(x,y) − μ(y)K(y,x)|` accepted for the rounded matrices.
const ROUNDED_REVERSIBILITY_TOL: f64 = 5e-4;

#[derive(Clone, Debug)]
pub struct Counterexample {
    pub mixing: BridgingSequence,
    pub no_mixing: BridgingSequence,
    pub phi: Vec<f64>,
    /// Modes `{0, 1}` and `{2, 3}`.
    pub partition: Partition,
    /// Factors applied to the rows of the rounded mixing kernel.
    pub row_factors_mixing: Vec<f64>,
    pub row_factors_no_mixing: Vec<f64>,
    /// Reversibility defect of the row-normalized rounded kernels.
    pub reversibility_defect_mixing: f64,
    pub reversibility_defect_no_mixing: f64,
    /// Largest entry change made to restore exact reversibility.
    pub adjustment_mixing: f64,
    pub adjustment_no_mixing: f64,
}

fn prepare(rows: &[[f64; 4]; 4], mu: &FiniteDistribution) -> Result<(TransitionKernel, Vec<f64>, f64, f64)> {
    let (k, factors) = TransitionKernel::normalized_rows(rows.iter().map(|r| r.to_vec()).collect())?;
    let defect = k.reversibility_defect(mu);
    if defect > ROUNDED_REVERSIBILITY_TOL {
        return Err(Error::InvalidKernel(format!(
            "rounded kernel far from reversible: defect {defect:.3e}"
        )));
    }
    let exact = k.reversibilized(mu)?;
    let mut adjustment: f64 = 0.0;
    for x in 0..4 {
        for y in 0..4 {
            adjustment = adjustment.max((exact.entry(x, y) - k.entry(x, y)).abs());
        }
    }
    Ok((exact, factors, defect, adjustment))
}

/// Builds the instance: `μ_0` uniform, `μ_1` and the two kernels as listed
/// above. The kernels are row-normalized and then made exactly reversible
/// for `μ_1` by averaging the probability flows `μ_1(x)K(x,y)` and
/// `μ_1(y)K(y,x)`, which moves no entry by more than a few units of the
/// fourth decimal.
pub fn counterexample_instance() -> Result<Counterexample> {
    let mu0 = FiniteDistribution::uniform(4);
    let mu1 = FiniteDistribution::from_unnormalized(MU1.to_vec())?;
    let (k_mix, f_mix, d_mix, a_mix) = prepare(&K_MIX, &mu1)?;
    let (k_nomix, f_nomix, d_nomix, a_nomix) = prepare(&K_NOMIX, &mu1)?;
    let partition = Partition::from_labels(&[0, 0, 1, 1])?;
    let mixing = BridgingSequence::new(vec![mu0.clone(), mu1.clone()], vec![k_mix], vec![partition.clone()])?;
    let no_mixing = BridgingSequence::new(vec![mu0, mu1], vec![k_nomix], vec![partition.clone()])?;
    Ok(Counterexample {
        mixing,
        no_mixing,
        phi: PHI.to_vec(),
        partition,
        row_factors_mixing: f_mix,
        row_factors_no_mixing: f_nomix,
        reversibility_defect_mixing: d_mix,
        reversibility_defect_no_mixing: d_nomix,
        adjustment_mixing: a_mix,
        adjustment_no_mixing: a_nomix,
    })
}

/// `Σ_{k<n} ‖h_k‖²_{L²(μ_{k+1})} + Var_{μ_n}(φ)` where `h_k` are the
/// functions of the variance recursion.
///
/// This differs from the asymptotic variance only in measuring each `h_k`
/// under the next distribution instead of `μ_k`. It is not a variance of
/// anything; it is kept because it reproduces the four-decimal figures
/// usually quoted for this instance (0.1669 and 0.1579), which lets the
/// discrepancy with the true asymptotic variance be shown side by side.
pub fn first_term_in_next_measure(seq: &BridgingSequence, phi: &[f64]) -> Result<f64> {
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
    let mut total = target.variance(phi);
    for k in (0..n).rev() {
        let kh = seq.kernel(k + 1).apply(&h);
        let g = seq.weight(k);
        h = (0..s).map(|x| g[x] * kh[x]).collect();
        let sq: Vec<f64> = h.iter().map(|v| v * v).collect();
        total += seq.distribution(k + 1).expectation(&sq);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fk::{asymptotic_variance_exact, mixing_constants};

    #[test]
    fn instance_data() {
        let c = counterexample_instance().unwrap();
        let k = c.no_mixing.kernel(1);
        assert!((k.entry(0, 0) - 0.8142).abs() < 5e-4);
        assert!((k.entry(0, 1) - 0.1858).abs() < 5e-4);
        assert_eq!(k.entry(0, 2), 0.0);
        assert!(c.adjustment_mixing < 5e-4 && c.adjustment_no_mixing < 5e-4);
        assert!(c.reversibility_defect_mixing < 5e-4);
        // Only the last row of the mixing kernel does not sum to one as printed.
        assert!((c.row_factors_mixing[3] - 1.0 / 0.9999).abs() < 1e-12);
        let mc = mixing_constants(&c.mixing).unwrap();
        assert!((mc.gamma_g - 4.0 * 0.6265).abs() < 1e-12);
    }

    #[test]
    fn mixing_increases_the_variance() {
        let c = counterexample_instance().unwrap();
        let mix = asymptotic_variance_exact(&c.mixing, &c.phi).unwrap().total;
        let nomix = asymptotic_variance_exact(&c.no_mixing, &c.phi).unwrap().total;
        assert!(mix > nomix);
    }

    #[test]
    fn quoted_figures_come_from_the_shifted_measure() {
        let c = counterexample_instance().unwrap();
        let mix = first_term_in_next_measure(&c.mixing, &c.phi).unwrap();
        let nomix = first_term_in_next_measure(&c.no_mixing, &c.phi).unwrap();
        assert!((mix - 0.1669).abs() < 5e-4, "{mix}");
        assert!((nomix - 0.1579).abs() < 5e-4, "{nomix}");
    }
}
