use serde::{Deserialize, Serialize};

use super::distribution::FiniteDistribution;
use super::kernel::{KernelRows, TransitionKernel, INVARIANCE_TOL};
use crate::error::{Error, Result};

/// A partition of `0..n` into nonempty cells.
///
/// Cells are numbered `0..cell_count` in increasing order of the labels the
/// partition was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    cell_of: Vec<usize>,
    cells: Vec<Vec<usize>>,
}

impl Partition {
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidPartition("no states".into()));
        }
        let mut distinct = labels.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let cell_of: Vec<usize> = labels
            .iter()
            .map(|l| distinct.binary_search(l).unwrap())
            .collect();
        let mut cells = vec![Vec::new(); distinct.len()];
        for (x, &r) in cell_of.iter().enumerate() {
            cells[r].push(x);
        }
        Ok(Self { cell_of, cells })
    }

    pub fn single(n: usize) -> Self {
        Self {
            cell_of: vec![0; n],
            cells: vec![(0..n).collect()],
        }
    }

    pub fn state_count(&self) -> usize {
        self.cell_of.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_of(&self, x: usize) -> usize {
        self.cell_of[x]
    }

    pub fn cell(&self, r: usize) -> &[usize] {
        &self.cells[r]
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn labels(&self) -> &[usize] {
        &self.cell_of
    }

    pub fn masses(&self, mu: &FiniteDistribution) -> Vec<f64> {
        self.cells
            .iter()
            .map(|c| mu.mass_of(c.iter().copied()))
            .collect()
    }
}

/// Distributions `μ_0, …, μ_n`, kernels `K_1, …, K_n` with `μ_k K_k = μ_k`,
/// the density ratios `g_{k,k+1} = μ_{k+1}/μ_k`, and optional per-stage
/// partitions.
#[derive(Clone, Debug)]
pub struct BridgingSequence {
    distributions: Vec<FiniteDistribution>,
    kernels: Vec<TransitionKernel>,
    weights: Vec<Vec<f64>>,
    partitions: Vec<Partition>,
}

impl BridgingSequence {
    /// `partitions` may be empty, hold one partition shared by every stage,
    /// or hold one partition per stage `0..=n`.
    pub fn new(
        distributions: Vec<FiniteDistribution>,
        kernels: Vec<TransitionKernel>,
        partitions: Vec<Partition>,
    ) -> Result<Self> {
        Self::with_invariance_tolerance(distributions, kernels, partitions, INVARIANCE_TOL)
    }

    pub fn with_invariance_tolerance(
        distributions: Vec<FiniteDistribution>,
        kernels: Vec<TransitionKernel>,
        partitions: Vec<Partition>,
        tol: f64,
    ) -> Result<Self> {
        let Some(first) = distributions.first() else {
            return Err(Error::InvalidDistribution("empty sequence".into()));
        };
        let s = first.len();
        let n = distributions.len() - 1;
        if kernels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: kernels.len(),
            });
        }
        for d in &distributions {
            if d.len() != s {
                return Err(Error::DimensionMismatch {
                    expected: s,
                    found: d.len(),
                });
            }
        }
        for (i, k) in kernels.iter().enumerate() {
            if k.dim() != s {
                return Err(Error::DimensionMismatch {
                    expected: s,
                    found: k.dim(),
                });
            }
            let defect = k.invariance_defect(&distributions[i + 1]);
            if defect > tol {
                return Err(Error::NotInvariant {
                    stage: i + 1,
                    defect,
                });
            }
        }
        let mut weights = Vec::with_capacity(n);
        for k in 0..n {
            let (a, b) = (distributions[k].weights(), distributions[k + 1].weights());
            let mut g = vec![0.0; s];
            for x in 0..s {
                if a[x] > 0.0 {
                    g[x] = b[x] / a[x];
                } else if b[x] > 0.0 {
                    return Err(Error::NotAbsolutelyContinuous { stage: k, state: x });
                }
            }
            weights.push(g);
        }
        let partitions = match partitions.len() {
            0 => partitions,
            1 => vec![partitions[0].clone(); n + 1],
            m if m == n + 1 => partitions,
            m => {
                return Err(Error::InvalidPartition(format!(
                    "expected 1 or {} partitions, found {m}",
                    n + 1
                )))
            }
        };
        for (k, p) in partitions.iter().enumerate() {
            if p.state_count() != s {
                return Err(Error::DimensionMismatch {
                    expected: s,
                    found: p.state_count(),
                });
            }
            if let Some(r) = p.masses(&distributions[k]).iter().position(|&m| m <= 0.0) {
                return Err(Error::InvalidPartition(format!(
                    "cell {r} has zero mass at stage {k}"
                )));
            }
        }
        Ok(Self {
            distributions,
            kernels,
            weights,
            partitions,
        })
    }

    /// Number of bridging steps `n`.
    pub fn stage_count(&self) -> usize {
        self.kernels.len()
    }

    pub fn state_count(&self) -> usize {
        self.distributions[0].len()
    }

    pub fn distribution(&self, k: usize) -> &FiniteDistribution {
        &self.distributions[k]
    }

    pub fn distributions(&self) -> &[FiniteDistribution] {
        &self.distributions
    }

    pub fn target(&self) -> &FiniteDistribution {
        self.distributions.last().unwrap()
    }

    /// `K_k` for `k` in `1..=n`.
    pub fn kernel(&self, k: usize) -> &TransitionKernel {
        &self.kernels[k - 1]
    }

    /// `g_{k,k+1}` for `k` in `0..n`.
    pub fn weight(&self, k: usize) -> &[f64] {
        &self.weights[k]
    }

    pub fn has_partitions(&self) -> bool {
        !self.partitions.is_empty()
    }

    /// Partition of stage `k`, if partitions were supplied.
    pub fn partition(&self, k: usize) -> Option<&Partition> {
        self.partitions.get(k)
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    /// Same distributions and kernels with different partitions.
    pub fn with_partitions(&self, partitions: Vec<Partition>) -> Result<Self> {
        Self::with_invariance_tolerance(
            self.distributions.clone(),
            self.kernels.clone(),
            partitions,
            f64::INFINITY,
        )
    }

    pub fn to_document(&self) -> BridgingDocument {
        BridgingDocument {
            states: self.state_count(),
            distributions: self
                .distributions
                .iter()
                .map(|d| d.weights().to_vec())
                .collect(),
            kernels: self.kernels.iter().map(|k| k.rows()).collect(),
            partitions: self.partitions.iter().map(|p| p.labels().to_vec()).collect(),
            phi: None,
        }
    }

    pub fn from_document(doc: &BridgingDocument) -> Result<Self> {
        let distributions = doc
            .distributions
            .iter()
            .map(|w| FiniteDistribution::new(w.clone()))
            .collect::<Result<Vec<_>>>()?;
        if let Some(d) = distributions.first() {
            if d.len() != doc.states {
                return Err(Error::DimensionMismatch {
                    expected: doc.states,
                    found: d.len(),
                });
            }
        }
        let kernels = doc
            .kernels
            .iter()
            .map(|k| TransitionKernel::new(k.clone()))
            .collect::<Result<Vec<_>>>()?;
        let partitions = doc
            .partitions
            .iter()
            .map(|p| Partition::from_labels(p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(distributions, kernels, partitions)
    }
}

/// JSON form of a [`BridgingSequence`]; the weights are recomputed on load.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgingDocument {
    pub states: usize,
    pub distributions: Vec<Vec<f64>>,
    pub kernels: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub partitions: Vec<Vec<usize>>,
    /// Optional test function carried alongside the sequence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<f64>>,
}

impl BridgingDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(w: &[f64]) -> FiniteDistribution {
        FiniteDistribution::new(w.to_vec()).unwrap()
    }

    #[test]
    fn partition_compacts_labels() {
        let p = Partition::from_labels(&[4, 1, 4, 7]).unwrap();
        assert_eq!(p.cell_count(), 3);
        assert_eq!(p.labels(), &[1, 0, 1, 2]);
        assert_eq!(p.cell(1), &[0, 2]);
    }

    #[test]
    fn weights_are_density_ratios() {
        let mu0 = dist(&[0.5, 0.5, 0.0]);
        let mu1 = dist(&[0.25, 0.75, 0.0]);
        let k = TransitionKernel::perfect_mixing(&mu1);
        let seq = BridgingSequence::new(vec![mu0, mu1], vec![k], vec![]).unwrap();
        assert_eq!(seq.weight(0), &[0.5, 1.5, 0.0]);
    }

    #[test]
    fn rejects_mass_appearing_from_nowhere() {
        let mu0 = dist(&[1.0, 0.0]);
        let mu1 = dist(&[0.5, 0.5]);
        let k = TransitionKernel::perfect_mixing(&mu1);
        assert!(matches!(
            BridgingSequence::new(vec![mu0, mu1], vec![k], vec![]),
            Err(Error::NotAbsolutelyContinuous { stage: 0, state: 1 })
        ));
    }

    #[test]
    fn rejects_non_invariant_kernel() {
        let mu = dist(&[0.3, 0.7]);
        let k = TransitionKernel::perfect_mixing(&FiniteDistribution::uniform(2));
        assert!(matches!(
            BridgingSequence::new(vec![mu.clone(), mu], vec![k], vec![]),
            Err(Error::NotInvariant { stage: 1, .. })
        ));
    }

    #[test]
    fn rejects_zero_mass_cell() {
        let mu = dist(&[1.0, 0.0]);
        let k = TransitionKernel::identity(2);
        let p = Partition::from_labels(&[0, 1]).unwrap();
        assert!(BridgingSequence::new(vec![mu.clone(), mu], vec![k], vec![p]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mu0 = FiniteDistribution::uniform(3);
        let mu1 = dist(&[0.2, 0.3, 0.5]);
        let k = TransitionKernel::perfect_mixing(&mu1);
        let p = Partition::from_labels(&[1, 1, 2]).unwrap();
        let seq = BridgingSequence::new(vec![mu0, mu1], vec![k], vec![p]).unwrap();
        let text = seq.to_document().to_json().unwrap();
        let back = BridgingSequence::from_document(&BridgingDocument::from_json(&text).unwrap())
            .unwrap();
        assert_eq!(back.weight(0), seq.weight(0));
        assert_eq!(back.partition(1).unwrap().cell_count(), 2);
        assert!(BridgingDocument::from_json(r#"{"states":1,"distributions":[[1]],"kernels":[],"extra":0}"#).is_err());
    }
}
