use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// Observations stored row-major, with optional covariate rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    y: Vec<f64>,
    covariate_dim: usize,
    x: Option<Vec<f64>>,
}

impl Dataset {
    pub fn univariate(y: Vec<f64>) -> Self {
        Dataset {
            dim: 1,
            y,
            covariate_dim: 0,
            x: None,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], covariates: Option<&[Vec<f64>]>) -> Result<Self> {
        let dim = rows.first().map_or(1, |r| r.len());
        if dim == 0 {
            return Err(input("observation rows are empty"));
        }
        let mut y = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: r.len(),
                });
            }
            y.extend_from_slice(r);
        }
        let (covariate_dim, x) = match covariates {
            None => (0, None),
            Some(cs) => {
                if cs.len() != rows.len() {
                    return Err(Error::Dimension {
                        expected: rows.len(),
                        got: cs.len(),
                    });
                }
                let q = cs.first().map_or(0, |c| c.len());
                let mut x = Vec::with_capacity(cs.len() * q);
                for c in cs {
                    if c.len() != q {
                        return Err(Error::Dimension {
                            expected: q,
                            got: c.len(),
                        });
                    }
                    x.extend_from_slice(c);
                }
                (q, Some(x))
            }
        };
        Ok(Dataset {
            dim,
            y,
            covariate_dim,
            x,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn covariate_dim(&self) -> usize {
        self.covariate_dim
    }

    pub fn has_covariates(&self) -> bool {
        self.x.is_some()
    }

    pub fn y(&self, i: usize) -> &[f64] {
        &self.y[i * self.dim..(i + 1) * self.dim]
    }

    pub fn x(&self, i: usize) -> Option<&[f64]> {
        self.x
            .as_ref()
            .map(|x| &x[i * self.covariate_dim..(i + 1) * self.covariate_dim])
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.y(i)[k]).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }
}
