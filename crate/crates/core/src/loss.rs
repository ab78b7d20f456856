use serde::{Deserialize, Serialize};

use crate::error::{NimtError, Result};
use crate::kernel::{DomainBox, Kernel};

/// Pointwise convex loss `L(f(x), y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    /// `(y - f(x))²`
    Square,
    /// `max(0, 1 - y·f(x))`, labels in {-1, 1}
    Hinge,
}

impl Loss {
    fn check(&self, pred: f64, y: f64) -> Result<()> {
        if !pred.is_finite() || !y.is_finite() {
            return Err(NimtError::arg(format!(
                "loss inputs must be finite (pred {pred}, y {y})"
            )));
        }
        if *self == Loss::Hinge && y != 1.0 && y != -1.0 {
            return Err(NimtError::arg(format!(
                "hinge loss needs y in {{-1, 1}}, got {y}"
            )));
        }
        Ok(())
    }

    pub fn value(&self, pred: f64, y: f64) -> Result<f64> {
        self.check(pred, y)?;
        Ok(match self {
            Loss::Square => (y - pred) * (y - pred),
            Loss::Hinge => (1.0 - y * pred).max(0.0),
        })
    }

    /// `∂L/∂f` at `(pred, y)`. The hinge subgradient at the kink is 0.
    pub fn gradient_scalar(&self, pred: f64, y: f64) -> Result<f64> {
        self.check(pred, y)?;
        Ok(match self {
            Loss::Square => 2.0 * (pred - y),
            Loss::Hinge if y * pred < 1.0 => -y,
            Loss::Hinge => 0.0,
        })
    }

    /// Lipschitz constant of the gradient scalar, when one exists.
    pub fn smoothness(&self) -> Option<f64> {
        match self {
            Loss::Square => Some(2.0),
            Loss::Hinge => None,
        }
    }

    /// Converts a target value into the label this loss trains on: the value
    /// itself for regression, its sign (0 counts as +1) for hinge.
    pub fn label_for(&self, target_value: f64) -> f64 {
        match self {
            Loss::Square => target_value,
            Loss::Hinge if target_value < 0.0 => -1.0,
            Loss::Hinge => 1.0,
        }
    }
}

/// Largest step `1 / (2·L_L·M_K)` for which one functional-gradient step is
/// guaranteed to reduce the pointwise loss. `None` for non-smooth losses.
pub fn safe_learning_rate(
    loss: Loss,
    kernel: &Kernel,
    domain: Option<&DomainBox>,
) -> Result<Option<f64>> {
    let bound = kernel.bound(domain)?;
    Ok(loss.smoothness().map(|l| 1.0 / (2.0 * l * bound)))
}
