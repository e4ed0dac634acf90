use serde::Serialize;

use crate::error::{invalid_param, Result};

/// Ordinary least squares `y ≈ intercept + slope · x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid_param("linear fit needs two equally long series of length ≥ 2"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid_param("linear fit with constant abscissa"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub column: String,
    pub max: f64,
    pub argmax: f64,
    pub min: f64,
    pub argmin: f64,
    /// Least-squares slope of the column against the index over the rows
    /// whose index is at least a tenth of the largest index.
    pub trend_slope: Option<f64>,
}

/// An index column with named value columns of the same length.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesReport {
    pub index_name: String,
    pub index: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
    pub summary: Option<SeriesSummary>,
}

impl SeriesReport {
    pub fn new(index_name: &str, index: Vec<f64>, columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        for (name, c) in &columns {
            if c.len() != index.len() {
                return Err(invalid_param(format!(
                    "column {name} has {} rows, index has {}",
                    c.len(),
                    index.len()
                )));
            }
            if let Some(v) = c.iter().find(|v| !v.is_finite()) {
                return Err(invalid_param(format!("column {name} has non-finite entry {v}")));
            }
        }
        Ok(Self {
            index_name: index_name.into(),
            index,
            columns,
            summary: None,
        })
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_slice())
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Fills in `summary` for the named column.
    pub fn summarize(mut self, name: &str) -> Result<Self> {
        let col = self
            .column(name)
            .ok_or_else(|| invalid_param(format!("no column {name}")))?
            .to_vec();
        if col.is_empty() {
            return Ok(self);
        }
        let (mut imax, mut imin) = (0, 0);
        for (i, v) in col.iter().enumerate() {
            if *v > col[imax] {
                imax = i;
            }
            if *v < col[imin] {
                imin = i;
            }
        }
        let top = self.index.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .index
            .iter()
            .zip(&col)
            .filter(|(x, _)| **x >= top / 10.0)
            .map(|(x, y)| (*x, *y))
            .unzip();
        let trend_slope = linear_fit(&xs, &ys).ok().map(|f| f.slope);
        self.summary = Some(SeriesSummary {
            column: name.into(),
            max: col[imax],
            argmax: self.index[imax],
            min: col[imin],
            argmin: self.index[imin],
            trend_slope,
        });
        Ok(self)
    }
}
