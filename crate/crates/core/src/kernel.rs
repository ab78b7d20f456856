//! Positive-definite kernels.
//!
//! The RBF form is `exp(-‖(x - x') / s‖²)` with a configurable scale `s`
//! (default 2). The linear kernel `⟨x, x'⟩ + c` turns functional teaching
//! into ordinary parametric gradient descent on `(w, b)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{NimtError, Result};

pub const DEFAULT_RBF_SCALE: f64 = 2.0;
pub const DEFAULT_LINEAR_OFFSET: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Kernel {
    Rbf {
        #[serde(default = "default_scale")]
        scale: f64,
    },
    Linear {
        #[serde(default = "default_offset")]
        offset: f64,
    },
}

fn default_scale() -> f64 {
    DEFAULT_RBF_SCALE
}

fn default_offset() -> f64 {
    DEFAULT_LINEAR_OFFSET
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::rbf()
    }
}

/// Axis-aligned box `[lower_d, upper_d]` per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(NimtError::arg(
                "domain box bounds must be nonempty and equal length",
            ));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite())
        {
            return Err(NimtError::arg(
                "domain box needs finite lower <= upper on every axis",
            ));
        }
        Ok(DomainBox { lower, upper })
    }

    /// The cube `[lo, hi]^dims`.
    pub fn cube(lo: f64, hi: f64, dims: usize) -> Result<Self> {
        DomainBox::new(vec![lo; dims], vec![hi; dims])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| l <= v && v <= u)
    }
}

impl Kernel {
    pub fn rbf() -> Self {
        Kernel::Rbf {
            scale: DEFAULT_RBF_SCALE,
        }
    }

    pub fn rbf_with_scale(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(NimtError::arg(format!(
                "rbf scale must be positive, got {scale}"
            )));
        }
        Ok(Kernel::Rbf { scale })
    }

    pub fn linear() -> Self {
        Kernel::Linear {
            offset: DEFAULT_LINEAR_OFFSET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Rbf { scale } => Kernel::rbf_with_scale(scale).map(|_| ()),
            Kernel::Linear { offset } if offset.is_finite() => Ok(()),
            Kernel::Linear { offset } => Err(NimtError::arg(format!(
                "linear offset must be finite, got {offset}"
            ))),
        }
    }

    /// `K(x, x')`. Errors on a dimension mismatch.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(NimtError::arg(format!(
                "kernel arguments differ in dimension ({} vs {})",
                x.len(),
                y.len()
            )));
        }
        Ok(self.eval_unchecked(x, y))
    }

    /// `K(x, x')` for callers that already guarantee equal dimensions.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::Rbf { scale } => {
                let sq: f64 = x
                    .iter()
                    .zip(y)
                    .map(|(a, b)| {
                        let d = (a - b) / scale;
                        d * d
                    })
                    .sum();
                (-sq).exp()
            }
            Kernel::Linear { offset } => x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() + offset,
        }
    }

    /// Gram matrix over `points`.
    pub fn gram_matrix(&self, points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let first = points
            .first()
            .ok_or_else(|| NimtError::arg("gram matrix needs at least one point"))?;
        if points.iter().any(|p| p.len() != first.len()) {
            return Err(NimtError::arg(
                "gram matrix points must share one dimension",
            ));
        }
        let n = points.len();
        let mut gram = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.eval_unchecked(&points[i], &points[j]);
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        Ok(gram)
    }

    /// Supremum `M_K` of the kernel over `domain`.
    ///
    /// The RBF kernel is bounded by 1 everywhere. The linear kernel is
    /// unbounded unless a box is supplied, in which case each coordinate of
    /// `⟨x, x'⟩` is maximised independently at an interval end point.
    pub fn bound(&self, domain: Option<&DomainBox>) -> Result<f64> {
        match *self {
            Kernel::Rbf { .. } => Ok(1.0),
            Kernel::Linear { offset } => {
                let domain = domain.ok_or_else(|| {
                    NimtError::arg("linear kernel is unbounded without a domain box")
                })?;
                let dot: f64 = domain
                    .lower
                    .iter()
                    .zip(&domain.upper)
                    .map(|(&l, &u)| (l * l).max(u * u).max(l * u))
                    .sum();
                Ok(dot + offset)
            }
        }
    }
}
