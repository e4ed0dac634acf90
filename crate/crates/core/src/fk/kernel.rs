use nalgebra::DMatrix;

use super::distribution::FiniteDistribution;
use crate::error::{Error, Result};

/// Tolerance on row sums of a stochastic matrix.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Tolerance on `max_y |(μK)(y) − μ(y)|`.
pub const INVARIANCE_TOL: f64 = 1e-10;

/// Square nonnegative matrices addressed row by row.
pub trait KernelRows {
    fn dim(&self) -> usize;
    fn row(&self, x: usize) -> &[f64];

    fn entry(&self, x: usize, y: usize) -> f64 {
        self.row(x)[y]
    }

    /// `(Kf)(x) = Σ_y K(x,y) f(y)`.
    fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|x| self.row(x).iter().zip(f).map(|(k, v)| k * v).sum())
            .collect()
    }

    /// `(νK)(y) = Σ_x ν(x) K(x,y)`.
    fn push_forward(&self, nu: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for (x, &w) in nu.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, k) in out.iter_mut().zip(self.row(x)) {
                *o += w * k;
            }
        }
        out
    }

    /// Mass sent from `x` into `cell`.
    fn mass_into(&self, x: usize, cell: &[usize]) -> f64 {
        let row = self.row(x);
        cell.iter().map(|&y| row[y]).sum()
    }
}

fn check_square(n: usize, data: &[f64]) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidKernel("no states".into()));
    }
    if data.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: data.len(),
        });
    }
    if let Some(i) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidKernel(format!(
            "entry ({}, {}) = {}",
            i / n,
            i % n,
            data[i]
        )));
    }
    Ok(())
}

fn flatten(rows: Vec<Vec<f64>>) -> Result<(usize, Vec<f64>)> {
    let n = rows.len();
    let mut data = Vec::with_capacity(n * n);
    for row in rows {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: row.len(),
            });
        }
        data.extend(row);
    }
    Ok((n, data))
}

/// A row-stochastic matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionKernel {
    n: usize,
    data: Vec<f64>,
}

impl TransitionKernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let (n, data) = flatten(rows)?;
        Self::from_row_major(n, data)
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        check_square(n, &data)?;
        for x in 0..n {
            let s: f64 = data[x * n..(x + 1) * n].iter().sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidKernel(format!("row {x} sums to {s}")));
            }
        }
        Ok(Self { n, data })
    }

    /// Divides each row by its sum, returning the kernel and the factors
    /// `1/Σ_y K(x,y)` that were applied.
    pub fn normalized_rows(rows: Vec<Vec<f64>>) -> Result<(Self, Vec<f64>)> {
        let (n, mut data) = flatten(rows)?;
        check_square(n, &data)?;
        let mut factors = Vec::with_capacity(n);
        for x in 0..n {
            let row = &mut data[x * n..(x + 1) * n];
            let s: f64 = row.iter().sum();
            if s <= 0.0 {
                return Err(Error::InvalidKernel(format!("row {x} is zero")));
            }
            row.iter_mut().for_each(|v| *v /= s);
            factors.push(1.0 / s);
        }
        Ok((Self::from_row_major(n, data)?, factors))
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for x in 0..n {
            data[x * n + x] = 1.0;
        }
        Self { n, data }
    }

    /// Every row equal to `mu`.
    pub fn perfect_mixing(mu: &FiniteDistribution) -> Self {
        let n = mu.len();
        let data = (0..n).flat_map(|_| mu.weights().iter().copied()).collect();
        Self { n, data }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    /// `(KL)(x,z) = Σ_y K(x,y) L(y,z)`.
    pub fn compose(&self, other: &Self) -> Self {
        let n = self.n;
        assert_eq!(n, other.n);
        let mut data = vec![0.0; n * n];
        for x in 0..n {
            let out = &mut data[x * n..(x + 1) * n];
            for (y, &k) in self.row(x).iter().enumerate() {
                if k == 0.0 {
                    continue;
                }
                for (o, l) in out.iter_mut().zip(other.row(y)) {
                    *o += k * l;
                }
            }
        }
        Self { n, data }
    }

    pub fn power(&self, t: usize) -> Self {
        let mut out = Self::identity(self.n);
        for _ in 0..t {
            out = out.compose(self);
        }
        out
    }

    /// `max_y |(μK)(y) − μ(y)|`.
    pub fn invariance_defect(&self, mu: &FiniteDistribution) -> f64 {
        self.push_forward(mu.weights())
            .iter()
            .zip(mu.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `max_{x,y} |μ(x)K(x,y) − μ(y)K(y,x)|`.
    pub fn reversibility_defect(&self, mu: &FiniteDistribution) -> f64 {
        let w = mu.weights();
        let mut worst: f64 = 0.0;
        for x in 0..self.n {
            for y in 0..x {
                let d = (w[x] * self.entry(x, y) - w[y] * self.entry(y, x)).abs();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// The kernel restricted to `cell`, as a matrix indexed by positions in
    /// `cell`. Fails if mass leaves the cell (beyond the stochasticity
    /// tolerance).
    pub fn restricted(&self, cell: &[usize], stage: usize, block: usize) -> Result<Self> {
        let m = cell.len();
        let mut data = Vec::with_capacity(m * m);
        for &x in cell {
            let inside = self.mass_into(x, cell);
            if 1.0 - inside > STOCHASTIC_TOL {
                return Err(Error::LeakyBlock {
                    stage,
                    block,
                    leak: 1.0 - inside,
                });
            }
            data.extend(cell.iter().map(|&y| self.entry(x, y) / inside));
        }
        Self::from_row_major(m, data)
    }

    /// Symmetrizes `μ(x)K(x,y)` and recomputes the diagonal, giving a kernel
    /// that is exactly reversible for `mu`. Only sensible when `K` is already
    /// close to reversible.
    pub fn reversibilized(&self, mu: &FiniteDistribution) -> Result<Self> {
        let n = self.n;
        let w = mu.weights();
        if w.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidDistribution(
                "reversibilization needs full support".into(),
            ));
        }
        let mut data = vec![0.0; n * n];
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    let flow = 0.5 * (w[x] * self.entry(x, y) + w[y] * self.entry(y, x));
                    data[x * n + y] = flow / w[x];
                }
            }
            let off: f64 = data[x * n..(x + 1) * n].iter().sum();
            if off > 1.0 {
                return Err(Error::InvalidKernel(format!(
                    "row {x} off-diagonal mass {off} after symmetrization"
                )));
            }
            data[x * n + x] = 1.0 - off;
        }
        Self::from_row_major(n, data)
    }
}

impl KernelRows for TransitionKernel {
    fn dim(&self) -> usize {
        self.n
    }

    fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.n..(x + 1) * self.n]
    }
}

/// A nonnegative matrix with row sums at most one.
#[derive(Clone, Debug, PartialEq)]
pub struct SubKernel {
    n: usize,
    data: Vec<f64>,
}

impl SubKernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let (n, data) = flatten(rows)?;
        Self::from_row_major(n, data)
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        check_square(n, &data)?;
        for x in 0..n {
            let s: f64 = data[x * n..(x + 1) * n].iter().sum();
            if s > 1.0 + STOCHASTIC_TOL {
                return Err(Error::InvalidKernel(format!("row {x} sums to {s} > 1")));
            }
        }
        Ok(Self { n, data })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn row_sum(&self, x: usize) -> f64 {
        self.row(x).iter().sum()
    }
}

impl KernelRows for SubKernel {
    fn dim(&self) -> usize {
        self.n
    }

    fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.n..(x + 1) * self.n]
    }
}

impl From<TransitionKernel> for SubKernel {
    fn from(k: TransitionKernel) -> Self {
        Self {
            n: k.n,
            data: k.data,
        }
    }
}

/// `max_x Σ_y |K(x,y) − L(x,y)|`, the norm of `K − L` acting on bounded
/// functions with the sup norm.
pub fn sup_operator_distance(k: &impl KernelRows, l: &impl KernelRows) -> Result<f64> {
    if k.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            found: l.dim(),
        });
    }
    Ok((0..k.dim())
        .map(|x| {
            k.row(x)
                .iter()
                .zip(l.row(x))
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max))
}

/// `‖K − 1μᵀ‖` as an operator on `L²(μ)`.
///
/// States outside the support of `mu` are dropped; on the remaining states
/// the norm is the largest singular value of `D^{1/2}(K − 1μᵀ)D^{-1/2}`.
pub fn operator_gap_l2(k: &TransitionKernel, mu: &FiniteDistribution) -> Result<f64> {
    if k.dim() != mu.len() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            found: k.dim(),
        });
    }
    let support = mu.support();
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let defect = k.invariance_defect(mu);
    if defect > INVARIANCE_TOL {
        return Err(Error::NotInvariant { stage: 0, defect });
    }
    let m = support.len();
    let w = mu.weights();
    let a = DMatrix::from_fn(m, m, |i, j| {
        let (x, y) = (support[i], support[j]);
        w[x].sqrt() * (k.entry(x, y) - w[y]) / w[y].sqrt()
    });
    Ok(a.singular_values().max())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state(p: f64) -> TransitionKernel {
        TransitionKernel::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap()
    }

    #[test]
    fn validates_rows() {
        assert!(TransitionKernel::new(vec![vec![0.5, 0.4], vec![0.0, 1.0]]).is_err());
        assert!(TransitionKernel::new(vec![vec![1.5, -0.5], vec![0.0, 1.0]]).is_err());
        assert!(TransitionKernel::new(vec![vec![1.0], vec![0.0, 1.0]]).is_err());
        assert!(SubKernel::new(vec![vec![0.5, 0.4], vec![0.0, 0.0]]).is_ok());
        assert!(SubKernel::new(vec![vec![0.7, 0.4], vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn gap_of_simple_chains() {
        let u = FiniteDistribution::uniform(2);
        assert!(operator_gap_l2(&TransitionKernel::perfect_mixing(&u), &u).unwrap() < 1e-14);
        assert!((operator_gap_l2(&TransitionKernel::identity(2), &u).unwrap() - 1.0).abs() < 1e-14);
        for p in [0.0, 0.1, 0.5, 0.8, 1.0] {
            let g = operator_gap_l2(&two_state(p), &u).unwrap();
            assert!((g - (1.0 - 2.0 * p).abs()).abs() < 1e-12, "p={p} g={g}");
        }
    }

    #[test]
    fn gap_drops_zero_mass_states() {
        let mu = FiniteDistribution::new(vec![0.5, 0.5, 0.0]).unwrap();
        let k = TransitionKernel::new(vec![
            vec![0.5, 0.5, 0.0],
            vec![0.5, 0.5, 0.0],
            vec![0.2, 0.2, 0.6],
        ])
        .unwrap();
        assert!(operator_gap_l2(&k, &mu).unwrap() < 1e-14);
    }

    #[test]
    fn gap_rejects_non_invariant_kernels() {
        let mu = FiniteDistribution::new(vec![0.9, 0.1]).unwrap();
        assert!(matches!(
            operator_gap_l2(&two_state(0.3), &mu),
            Err(Error::NotInvariant { .. })
        ));
    }

    #[test]
    fn sup_distance_examples() {
        let k = two_state(0.3);
        assert_eq!(sup_operator_distance(&k, &k).unwrap(), 0.0);
        assert!((sup_operator_distance(&k, &SubKernel::zero(2)).unwrap() - 1.0).abs() < 1e-15);
        assert!(sup_operator_distance(&k, &SubKernel::zero(3)).is_err());
    }

    #[test]
    fn restriction_detects_leaks() {
        let k = TransitionKernel::new(vec![
            vec![0.5, 0.5, 0.0],
            vec![0.4, 0.5, 0.1],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert!(matches!(
            k.restricted(&[0, 1], 3, 0),
            Err(Error::LeakyBlock { stage: 3, block: 0, .. })
        ));
        assert_eq!(k.restricted(&[2], 1, 1).unwrap().rows(), vec![vec![1.0]]);
    }

    #[test]
    fn reversibilization_is_exact() {
        let mu = FiniteDistribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let k = TransitionKernel::new(vec![
            vec![0.7, 0.15, 0.15],
            vec![0.1, 0.6, 0.3],
            vec![0.06, 0.18, 0.76],
        ])
        .unwrap();
        let r = k.reversibilized(&mu).unwrap();
        assert!(r.reversibility_defect(&mu) < 1e-16);
        assert!(r.invariance_defect(&mu) < 1e-15);
    }
}
