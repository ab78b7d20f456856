//! Per-iteration diagnostics and the inequality checks that greedy and
//! random functional teaching must satisfy.

use crate::error::{NimtError, Result};
use crate::loss::Loss;

/// Absolute slack allowed on every floating-point inequality check.
pub const CHECK_TOLERANCE: f64 = 1e-12;

/// One logged iteration. Row `t` describes the step that produced `fᵗ`
/// from `fᵗ⁻¹`: discrepancies are measured at `fᵗ⁻¹`, `m` and `lbar` at `fᵗ`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub t: usize,
    /// Taught `(x, y)` pairs in selection order.
    pub selected: Vec<(Vec<f64>, f64)>,
    /// Discrepancy at the greedy pick over the pool.
    pub s_star: f64,
    /// Discrepancy at an independent uniform pick from the same model.
    pub s_rand: f64,
    /// Discrepancy at the first taught example, under its taught label.
    pub s_taught: f64,
    pub gamma: f64,
    pub psi: f64,
    pub m: f64,
    pub lbar: f64,
    pub descent_lhs: f64,
    pub descent_rhs: f64,
    pub bound_rhs: f64,
    /// `⟨G* - G, fᵗ⁻¹ - f*⟩` for the greedy versus counterfactual pick.
    pub direction: f64,
    /// Whether the labels came from the alternative target.
    pub substituted: bool,
}

/// `S_L = (∂L/∂f)²` at `(pred, y)`.
pub fn discrepancy(loss: Loss, pred: f64, y: f64) -> Result<f64> {
    let g = loss.gradient_scalar(pred, y)?;
    Ok(g * g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GreedyRatio {
    Ratio(f64),
    /// The greedy pick already has zero discrepancy.
    Converged,
}

impl GreedyRatio {
    /// The ratio, with `Converged` counted as 1 (the random pick is exactly
    /// as good as the greedy one).
    pub fn value(self) -> f64 {
        match self {
            GreedyRatio::Ratio(r) => r,
            GreedyRatio::Converged => 1.0,
        }
    }
}

/// `γ = S_rand / S_star`.
pub fn greedy_ratio(s_rand: f64, s_star: f64) -> Result<GreedyRatio> {
    if !(s_rand >= 0.0) || !(s_star >= 0.0) {
        return Err(NimtError::arg(format!(
            "discrepancies must be nonnegative (S_rand {s_rand}, S_star {s_star})"
        )));
    }
    if s_rand > s_star + CHECK_TOLERANCE {
        return Err(NimtError::InvariantViolation(format!(
            "random pick discrepancy {s_rand} exceeds greedy pick discrepancy {s_star}"
        )));
    }
    if s_star == 0.0 {
        return Ok(GreedyRatio::Converged);
    }
    Ok(GreedyRatio::Ratio(s_rand / s_star))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentCheck {
    /// `loss_after - loss_before`
    pub lhs: f64,
    /// `-(η/2)·S`
    pub rhs: f64,
    /// `rhs - lhs`; nonnegative (up to tolerance) when the check passes.
    pub slack: f64,
    pub passed: bool,
}

/// Sufficient-descent condition `L(fᵗ⁺¹) - L(fᵗ) ≤ -(η/2)·S` at the taught
/// example.
pub fn sufficient_descent_check(
    loss_before: f64,
    loss_after: f64,
    eta: f64,
    s: f64,
) -> DescentCheck {
    let lhs = loss_after - loss_before;
    let rhs = -0.5 * eta * s;
    let slack = rhs - lhs;
    DescentCheck {
        lhs,
        rhs,
        slack,
        passed: slack >= -CHECK_TOLERANCE,
    }
}

/// `⟨G* - G, fᵗ - f*⟩_H` via the reproducing property: with
/// `G = g·K(x, ·)` the inner product with `h` is `g·h(x)`, and `h(x)` is the
/// residual `pred - y` because `y = f*(x)`.
pub fn optimal_direction_check(loss: Loss, greedy: (f64, f64), other: (f64, f64)) -> Result<f64> {
    let g_star = loss.gradient_scalar(greedy.0, greedy.1)?;
    let g = loss.gradient_scalar(other.0, other.1)?;
    Ok(g_star * (greedy.0 - greedy.1) - g * (other.0 - other.1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    pub t: usize,
    pub min_s: f64,
    /// `2·L(f⁰) / (η̃·t)`
    pub bound: f64,
    /// `2·L(f⁰) / (η̃·ψ(t))`, when ψ is tracked.
    pub bound_psi: Option<f64>,
    /// The running minimum sits above the bound.
    pub crossed: bool,
}

/// Running minimum of the taught discrepancy against the convergence-rate
/// bounds. Reported, never asserted.
pub fn bound_monitor(records: &[IterationRecord], lbar0: f64, eta_min: f64) -> Vec<BoundPoint> {
    let mut min_s = f64::INFINITY;
    records
        .iter()
        .map(|r| {
            min_s = min_s.min(r.s_taught);
            let bound = 2.0 * lbar0 / (eta_min * r.t as f64);
            let bound_psi =
                (r.psi.is_finite() && r.psi > 0.0).then(|| 2.0 * lbar0 / (eta_min * r.psi));
            BoundPoint {
                t: r.t,
                min_s,
                bound,
                bound_psi,
                crossed: min_s > bound,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn discrepancy_examples() {
        assert_eq!(discrepancy(Loss::Square, 0.4, 0.4).unwrap(), 0.0);
        assert_abs_diff_eq!(
            discrepancy(Loss::Square, 0.3, 0.1).unwrap(),
            0.16,
            epsilon = 1e-15
        );
        assert_eq!(discrepancy(Loss::Hinge, 0.2, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn greedy_ratio_examples() {
        assert_eq!(greedy_ratio(0.16, 0.16).unwrap(), GreedyRatio::Ratio(1.0));
        assert_abs_diff_eq!(
            greedy_ratio(0.04, 0.16).unwrap().value(),
            0.25,
            epsilon = 1e-15
        );
        assert_eq!(greedy_ratio(0.0, 0.0).unwrap(), GreedyRatio::Converged);
        assert!(matches!(
            greedy_ratio(0.2, 0.1),
            Err(NimtError::InvariantViolation(_))
        ));
    }

    #[test]
    fn descent_examples() {
        // e = 1, eta = 0.1: loss goes 1 -> (1 - 2·0.1)² = 0.64
        let c = sufficient_descent_check(1.0, 0.64, 0.1, 4.0);
        assert!(c.passed);
        assert_abs_diff_eq!(-c.lhs, 0.36, epsilon = 1e-15);
        assert_abs_diff_eq!(-c.rhs, 0.2, epsilon = 1e-15);

        let c = sufficient_descent_check(0.0, 0.0, 0.1, 0.0);
        assert!(c.passed);
        assert_eq!(c.slack, 0.0);

        // boundary rate 0.25: loss 1 -> 0.25
        let c = sufficient_descent_check(1.0, 0.25, 0.25, 4.0);
        assert!(c.passed);
        assert_abs_diff_eq!(-c.lhs, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(-c.rhs, 0.5, epsilon = 1e-15);

        assert!(!sufficient_descent_check(1.0, 1.0, 0.1, 4.0).passed);
    }

    #[test]
    fn direction_examples() {
        assert_eq!(
            optimal_direction_check(Loss::Square, (0.7, 0.2), (0.7, 0.2)).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            optimal_direction_check(Loss::Square, (0.5, 0.0), (0.2, 0.0)).unwrap(),
            0.42,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            optimal_direction_check(Loss::Square, (0.2, 0.0), (0.5, 0.0)).unwrap(),
            -0.42,
            epsilon = 1e-15
        );
    }

    fn record(t: usize, s: f64, psi: f64) -> IterationRecord {
        IterationRecord {
            t,
            selected: vec![],
            s_star: s,
            s_rand: s,
            s_taught: s,
            gamma: 1.0,
            psi,
            m: 0.0,
            lbar: 0.0,
            descent_lhs: 0.0,
            descent_rhs: 0.0,
            bound_rhs: 0.0,
            direction: 0.0,
            substituted: false,
        }
    }

    #[test]
    fn bound_monitor_examples() {
        let recs = vec![
            record(1, 0.5, 1.0),
            record(2, 0.7, 1.5),
            record(3, 0.1, 2.0),
        ];
        let pts = bound_monitor(&recs, 0.3, 0.01);
        assert_abs_diff_eq!(pts[0].bound, 2.0 * 0.3 / 0.01, epsilon = 1e-12);
        assert_eq!(pts[1].min_s, 0.5);
        assert_eq!(pts[2].min_s, 0.1);
        assert_abs_diff_eq!(
            pts[1].bound_psi.unwrap(),
            0.6 / (0.01 * 1.5),
            epsilon = 1e-12
        );

        let zero = bound_monitor(&[record(1, 0.0, 1.0), record(2, 0.0, 2.0)], 0.0, 0.01);
        assert!(zero
            .iter()
            .all(|p| p.bound == 0.0 && p.min_s == 0.0 && !p.crossed));

        let hundred = bound_monitor(&[record(100, 0.0, 100.0)], 0.25, 0.01);
        assert_abs_diff_eq!(hundred[0].bound, 2.0 * 0.25, epsilon = 1e-12);
    }
}
