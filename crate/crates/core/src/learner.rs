//! The gray-box learner.
//!
//! A [`Learner`] owns its model, step size and loss. Teachers only ever see a
//! [`LearnerView`], which exposes model evaluations and nothing else.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{NimtError, Result};
use crate::exec::{self, Execution};
use crate::function_space::RkhsFunction;
use crate::grid::Grid;
use crate::loss::Loss;

/// How per-example gradients in one pack are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
    Sum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub x: Vec<f64>,
    pub y: f64,
}

/// The examples a teacher hands over in one iteration.
///
/// Teachers always produce distinct points; the pack itself tolerates
/// repeats, which the mean aggregation treats as plain reweighting.
#[derive(Debug, Clone, PartialEq)]
pub struct TeachingPack {
    examples: Vec<Example>,
}

impl TeachingPack {
    pub fn new(examples: Vec<Example>) -> Result<Self> {
        if examples.is_empty() {
            return Err(NimtError::arg(
                "teaching pack must contain at least one example",
            ));
        }
        if examples
            .iter()
            .any(|e| !e.y.is_finite() || e.x.iter().any(|v| !v.is_finite()))
        {
            return Err(NimtError::arg("teaching examples must be finite"));
        }
        Ok(TeachingPack { examples })
    }

    pub fn single(x: Vec<f64>, y: f64) -> Result<Self> {
        TeachingPack::new(vec![Example { x, y }])
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Model values on the teaching grid, kept in sync with every step.
#[derive(Debug, Clone)]
struct GridCache {
    grid: Grid,
    values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Learner {
    model: RkhsFunction,
    eta: f64,
    loss: Loss,
    aggregation: Aggregation,
    step_count: usize,
    exec: Execution,
    cache: Option<GridCache>,
}

impl Learner {
    pub fn new(model: RkhsFunction, eta: f64, loss: Loss) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(NimtError::arg(format!(
                "learning rate must be positive, got {eta}"
            )));
        }
        Ok(Learner {
            model,
            eta,
            loss,
            aggregation: Aggregation::Mean,
            step_count: 0,
            exec: Execution::Parallel,
            cache: None,
        })
    }

    pub fn with_aggregation(mut self, aggregation: Aggregation) -> Self {
        self.aggregation = aggregation;
        self
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    /// Tracks model values on `grid`, updated incrementally on every step.
    pub fn with_grid(mut self, grid: Grid) -> Result<Self> {
        let values = self.model.evaluate_grid(&grid, self.exec)?;
        self.cache = Some(GridCache { grid, values });
        Ok(self)
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn model(&self) -> &RkhsFunction {
        &self.model
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn view(&self) -> LearnerView<'_> {
        LearnerView { learner: self }
    }

    /// One functional-gradient step on `pack`.
    ///
    /// Every gradient scalar is taken at the pre-step model, then each
    /// example contributes `-(η / k)·gⱼ·K(xⱼ, ·)` (or `-η·gⱼ·K(xⱼ, ·)` under
    /// sum aggregation).
    pub fn step(&mut self, pack: &TeachingPack) -> Result<()> {
        let k = pack.len();
        if k == 0 {
            return Err(NimtError::arg(
                "teaching pack must contain at least one example",
            ));
        }
        let scale = match self.aggregation {
            Aggregation::Mean => self.eta / k as f64,
            Aggregation::Sum => self.eta,
        };

        // Merge repeated centres so the cache update mirrors the model exactly.
        let mut order: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut merged: HashMap<Vec<u64>, usize> = HashMap::with_capacity(k);
        let mut coeffs: Vec<f64> = Vec::with_capacity(k);
        for example in pack.examples() {
            let pred = self.model.evaluate(&example.x)?;
            let g = self.loss.gradient_scalar(pred, example.y)?;
            let coeff = -scale * g;
            let key: Vec<u64> = example.x.iter().map(|c| (c + 0.0).to_bits()).collect();
            match merged.get(&key) {
                Some(&slot) => coeffs[slot] += coeff,
                None => {
                    merged.insert(key, order.len());
                    order.push(example.x.clone());
                    coeffs.push(coeff);
                }
            }
        }

        for (center, &coeff) in order.iter().zip(&coeffs) {
            self.model.add_term_in_place(center, coeff)?;
        }
        if let Some(cache) = self.cache.as_mut() {
            let kernel = *self.model.kernel();
            let grid = &cache.grid;
            exec::update_indexed(self.exec, &mut cache.values, |i, v| {
                let p = grid.point(i);
                *v += order
                    .iter()
                    .zip(&coeffs)
                    .map(|(c, a)| a * kernel.eval_unchecked(c, p))
                    .sum::<f64>();
            });
        }
        self.step_count += 1;
        Ok(())
    }
}

/// What a teacher may observe about the learner: evaluations of `fᵗ`.
#[derive(Debug, Clone, Copy)]
pub struct LearnerView<'a> {
    learner: &'a Learner,
}

impl<'a> LearnerView<'a> {
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.learner.model.evaluate(x)
    }

    /// Cached model values on the teaching grid, when the learner tracks one.
    pub fn grid_values(&self) -> Option<&'a [f64]> {
        self.learner.cache.as_ref().map(|c| c.values.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::{BaseFunction, Bump};
    use crate::kernel::Kernel;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn zero_learner(eta: f64) -> Learner {
        Learner::new(RkhsFunction::zero(Kernel::rbf()), eta, Loss::Square).unwrap()
    }

    #[test]
    fn single_step_from_zero() {
        let mut l = zero_learner(0.1);
        let x0 = vec![0.4];
        l.step(&TeachingPack::single(x0.clone(), 1.0).unwrap())
            .unwrap();
        assert_abs_diff_eq!(l.view().evaluate(&x0).unwrap(), 0.2, epsilon = 1e-15);
        assert_eq!(l.step_count(), 1);
    }

    #[test]
    fn converged_example_only_counts_the_step() {
        let base = BaseFunction::Plane {
            coefficients: vec![1.0, 1.0],
        };
        let mut l = Learner::new(
            RkhsFunction::new(base, Kernel::rbf()).unwrap(),
            0.1,
            Loss::Square,
        )
        .unwrap();
        l.step(&TeachingPack::single(vec![2.0], 3.0).unwrap())
            .unwrap();
        assert_eq!(l.step_count(), 1);
        for x in [-1.0, 0.0, 2.0, 5.0] {
            assert_eq!(l.view().evaluate(&[x]).unwrap(), x + 1.0);
        }
    }

    #[test]
    fn duplicate_pack_matches_single_step() {
        let mut one = zero_learner(0.1);
        let mut two = zero_learner(0.1);
        one.step(&TeachingPack::single(vec![0.5], 1.0).unwrap())
            .unwrap();
        let e = Example {
            x: vec![0.5],
            y: 1.0,
        };
        two.step(&TeachingPack::new(vec![e.clone(), e]).unwrap())
            .unwrap();
        for x in [-2.0, 0.0, 0.5, 3.0] {
            assert_abs_diff_eq!(
                one.view().evaluate(&[x]).unwrap(),
                two.view().evaluate(&[x]).unwrap(),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn sum_aggregation_scales_by_k() {
        let mut l = zero_learner(0.1).with_aggregation(Aggregation::Sum);
        let e = Example {
            x: vec![0.5],
            y: 1.0,
        };
        l.step(&TeachingPack::new(vec![e.clone(), e]).unwrap())
            .unwrap();
        assert_abs_diff_eq!(l.view().evaluate(&[0.5]).unwrap(), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(TeachingPack::new(vec![]).is_err());
        assert!(Learner::new(RkhsFunction::zero(Kernel::rbf()), 0.0, Loss::Square).is_err());
        assert!(Learner::new(RkhsFunction::zero(Kernel::rbf()), -0.1, Loss::Square).is_err());
    }

    #[test]
    fn grid_cache_tracks_model() {
        let grid = Grid::new(2, (0..40).map(|i| (i as f64) * 0.05 - 1.0).collect()).unwrap();
        let base = BaseFunction::Boundary2D {
            bumps: vec![Bump::new(1.0, 0.3, 0.5)],
        };
        let model = RkhsFunction::new(base, Kernel::rbf()).unwrap();
        let mut l = Learner::new(model, 0.05, Loss::Hinge)
            .unwrap()
            .with_grid(grid.clone())
            .unwrap();
        for i in 0..5 {
            let pack = TeachingPack::new(vec![
                Example {
                    x: grid.point(i).to_vec(),
                    y: 1.0,
                },
                Example {
                    x: grid.point(10 + i).to_vec(),
                    y: -1.0,
                },
            ])
            .unwrap();
            l.step(&pack).unwrap();
        }
        let cached = l.view().grid_values().unwrap().to_vec();
        for (i, p) in grid.points().enumerate() {
            assert_abs_diff_eq!(cached[i], l.view().evaluate(p).unwrap(), epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn one_step_pointwise_identity(
            centers in prop::collection::vec((-3.0f64..3.0, -1.0f64..1.0), 1..5),
            eta in 0.001f64..0.5,
            probes in prop::collection::vec(-5.0f64..5.0, 100),
        ) {
            let kernel = Kernel::rbf();
            let mut model = RkhsFunction::zero(kernel);
            model.add_term_in_place(&[0.3], 0.7).unwrap();
            let before = model.clone();
            let mut l = Learner::new(model, eta, Loss::Square).unwrap();
            let mut examples: Vec<Example> = Vec::new();
            for (x, y) in &centers {
                if examples.iter().all(|e| e.x[0] != *x) {
                    examples.push(Example { x: vec![*x], y: *y });
                }
            }
            let k = examples.len() as f64;
            let grads: Vec<f64> = examples
                .iter()
                .map(|e| Loss::Square.gradient_scalar(before.evaluate(&e.x).unwrap(), e.y).unwrap())
                .collect();
            l.step(&TeachingPack::new(examples.clone()).unwrap()).unwrap();
            for x in probes {
                let delta = l.view().evaluate(&[x]).unwrap() - before.evaluate(&[x]).unwrap();
                let push: f64 = examples
                    .iter()
                    .zip(&grads)
                    .map(|(e, g)| g * kernel.eval(&e.x, &[x]).unwrap())
                    .sum();
                prop_assert!((delta + eta / k * push).abs() <= 1e-12);
            }
        }

        #[test]
        fn square_loss_one_step_drop(
            err in -3.0f64..3.0,
            eta in 0.0001f64..=0.25,
            x in -4.0f64..4.0,
        ) {
            let mut model = RkhsFunction::zero(Kernel::rbf());
            model.add_term_in_place(&[1.0], 0.5).unwrap();
            let pred = model.evaluate(&[x]).unwrap();
            let y = pred - err;
            let e = pred - y;
            let before = Loss::Square.value(pred, y).unwrap();
            let mut l = Learner::new(model, eta, Loss::Square).unwrap();
            l.step(&TeachingPack::single(vec![x], y).unwrap()).unwrap();
            let after = Loss::Square.value(l.view().evaluate(&[x]).unwrap(), y).unwrap();
            let drop = before - after;
            prop_assert!((drop - 4.0 * eta * (1.0 - eta) * e * e).abs() <= 1e-10);
        }
    }
}
