//! Experiment scenarios, evaluation grids and the linear-kernel versus
//! parametric gradient-descent comparison.

use std::fmt;
use std::str::FromStr;

use crate::error::{NimtError, Result};
use crate::exec::Execution;
use crate::function_space::{empirical_l2, BaseFunction, Bump, GridFunction, RkhsFunction};
use crate::grid::Grid;
use crate::kernel::{DomainBox, Kernel};
use crate::learner::{Learner, TeachingPack};
use crate::loss::Loss;
use crate::teacher::gft_select;

/// RBF scale used on the unit-square pixel lattice of image scenarios.
pub const IMAGE_RBF_SCALE: f64 = 0.1;
/// Side length of the bundled synthetic images.
pub const SYNTHETIC_IMAGE_SIZE: usize = 28;
/// Fraction of pixels a pool-based image teacher may use.
pub const DEFAULT_POOL_RATIO: f64 = 0.8;

/// `arange(start, stop, step)` per axis; the Cartesian product, row-major,
/// for `dims > 1`.
pub fn build_grid(start: f64, stop: f64, step: f64, dims: usize) -> Result<Grid> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(NimtError::arg(format!(
            "grid step must be positive, got {step}"
        )));
    }
    if !(stop > start) || !start.is_finite() || !stop.is_finite() {
        return Err(NimtError::arg(format!(
            "grid needs finite start < stop, got [{start}, {stop})"
        )));
    }
    if dims == 0 {
        return Err(NimtError::arg("grid dimension must be at least 1"));
    }
    let count = (((stop - start) / step) - 1e-9).ceil().max(1.0) as usize;
    let axis: Vec<f64> = (0..count).map(|i| start + i as f64 * step).collect();
    let total = count.pow(dims as u32);
    let mut coords = Vec::with_capacity(total * dims);
    let mut digits = vec![0usize; dims];
    for _ in 0..total {
        coords.extend(digits.iter().map(|&d| axis[d]));
        for d in (0..dims).rev() {
            digits[d] += 1;
            if digits[d] < count {
                break;
            }
            digits[d] = 0;
        }
    }
    Grid::new(dims, coords)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioName {
    Gmm1d,
    Cls2d,
    Image,
    LinearCompare,
    Parametric3d,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 5] = [
        ScenarioName::Gmm1d,
        ScenarioName::Cls2d,
        ScenarioName::Image,
        ScenarioName::LinearCompare,
        ScenarioName::Parametric3d,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioName::Gmm1d => "gmm1d",
            ScenarioName::Cls2d => "cls2d",
            ScenarioName::Image => "image",
            ScenarioName::LinearCompare => "linear_compare",
            ScenarioName::Parametric3d => "parametric3d",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = NimtError;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| NimtError::arg(format!("unknown scenario `{s}`")))
    }
}

/// Optional replacements for a scenario's defaults.
#[derive(Debug, Clone, Default)]
pub struct ScenarioOverrides {
    pub eta: Option<f64>,
    pub epsilon: Option<f64>,
    pub max_iters: Option<usize>,
    pub kernel: Option<Kernel>,
    pub target_image: Option<GridFunction>,
    pub init_image: Option<GridFunction>,
    /// Sign of the paraboloid initialisation in `parametric3d`.
    pub init_sign: Option<f64>,
}

/// A fully specified teaching problem.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: ScenarioName,
    pub target: RkhsFunction,
    pub init: RkhsFunction,
    pub grid: Grid,
    pub loss: Loss,
    pub eta: f64,
    pub epsilon: f64,
    pub max_iters: usize,
}

impl Scenario {
    pub fn kernel(&self) -> &Kernel {
        self.init.kernel()
    }

    /// Bounding box of the teaching grid.
    pub fn domain(&self) -> DomainBox {
        let (lo, hi) = self.grid.bounds();
        DomainBox::new(lo, hi).expect("grid bounds form a valid box")
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(NimtError::arg("scenario grid is empty"));
        }
        if !(self.epsilon > 0.0) {
            return Err(NimtError::arg(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(NimtError::arg(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

fn gaussian(weights: &[f64], means: &[f64], stddevs: &[f64]) -> BaseFunction {
    BaseFunction::GaussianMixture1D {
        weights: weights.to_vec(),
        means: means.to_vec(),
        stddevs: stddevs.to_vec(),
    }
}

/// Builds a named scenario with its published defaults, then applies
/// `overrides`.
pub fn make_scenario(name: ScenarioName, overrides: &ScenarioOverrides) -> Result<Scenario> {
    struct Defaults {
        kernel: Kernel,
        target: BaseFunction,
        init: BaseFunction,
        grid: Grid,
        loss: Loss,
        eta: f64,
        epsilon: f64,
        max_iters: usize,
    }

    let d = match name {
        ScenarioName::Gmm1d => Defaults {
            kernel: Kernel::rbf(),
            target: gaussian(&[1.0 / 3.0, 2.0 / 3.0], &[-2.0, 2.0], &[1.0, 1.0]),
            init: gaussian(&[1.0], &[-10.0], &[1.0]),
            grid: build_grid(-14.0, 14.0, 0.1, 1)?,
            loss: Loss::Square,
            eta: 0.01,
            epsilon: 1e-4,
            max_iters: 5000,
        },
        ScenarioName::Cls2d => Defaults {
            kernel: Kernel::rbf(),
            target: BaseFunction::Boundary2D {
                bumps: vec![Bump::new(-1.0, 0.5, 0.5), Bump::new(1.0, -0.5, 0.5)],
            },
            init: BaseFunction::Boundary2D {
                bumps: vec![Bump::new(1.0, 0.3, 0.5), Bump::new(-1.0, -0.6, 0.5)],
            },
            grid: build_grid(-1.0, 1.0, 0.01, 2)?,
            loss: Loss::Hinge,
            eta: 0.001,
            epsilon: 1e-3,
            max_iters: 2000,
        },
        ScenarioName::Image => {
            let target = overrides
                .target_image
                .clone()
                .unwrap_or_else(|| synthetic_ring(SYNTHETIC_IMAGE_SIZE));
            let init = overrides
                .init_image
                .clone()
                .unwrap_or_else(|| synthetic_figure_eight(SYNTHETIC_IMAGE_SIZE));
            if target.shape() != init.shape() {
                return Err(NimtError::arg(format!(
                    "target image {:?} and init image {:?} differ in shape",
                    target.shape(),
                    init.shape()
                )));
            }
            Defaults {
                kernel: Kernel::rbf_with_scale(IMAGE_RBF_SCALE)?,
                grid: target.lattice(),
                target: BaseFunction::Grid(target),
                init: BaseFunction::Grid(init),
                loss: Loss::Square,
                eta: 0.01,
                epsilon: 1e-4,
                max_iters: 2000,
            }
        }
        ScenarioName::LinearCompare => Defaults {
            kernel: Kernel::linear(),
            target: BaseFunction::Plane {
                coefficients: vec![1.0, 1.0],
            },
            init: BaseFunction::Plane {
                coefficients: vec![-0.5, 0.5],
            },
            grid: build_grid(-1.0, 1.0, 0.1, 1)?,
            loss: Loss::Square,
            eta: 0.01,
            epsilon: 1e-4,
            max_iters: 50,
        },
        ScenarioName::Parametric3d => {
            let sign = overrides.init_sign.unwrap_or(-1.0);
            if sign != 1.0 && sign != -1.0 {
                return Err(NimtError::arg(format!(
                    "init_sign must be 1 or -1, got {sign}"
                )));
            }
            Defaults {
                kernel: Kernel::rbf(),
                target: BaseFunction::Plane {
                    coefficients: vec![1.0, 1.0, -8.0],
                },
                init: BaseFunction::Paraboloid {
                    sign,
                    center: vec![5.0, 5.0],
                },
                grid: build_grid(0.0, 10.0, 1.0, 2)?,
                loss: Loss::Square,
                eta: 0.01,
                epsilon: 1e-4,
                max_iters: 2000,
            }
        }
    };

    if name != ScenarioName::Image
        && (overrides.target_image.is_some() || overrides.init_image.is_some())
    {
        return Err(NimtError::arg(format!(
            "target/init images only apply to the image scenario, not `{name}`"
        )));
    }
    let kernel = overrides.kernel.unwrap_or(d.kernel);
    kernel.validate()?;
    let scenario = Scenario {
        name,
        target: RkhsFunction::new(d.target, kernel)?,
        init: RkhsFunction::new(d.init, kernel)?,
        grid: d.grid,
        loss: d.loss,
        eta: overrides.eta.unwrap_or(d.eta),
        epsilon: overrides.epsilon.unwrap_or(d.epsilon),
        max_iters: overrides.max_iters.unwrap_or(d.max_iters),
    };
    scenario.validate()?;
    Ok(scenario)
}

fn unit_square_image(size: usize, f: impl Fn(f64, f64) -> f64) -> GridFunction {
    let mut values = Vec::with_capacity(size * size);
    for r in 0..size {
        for c in 0..size {
            let u = (r as f64 + 0.5) / size as f64;
            let v = (c as f64 + 0.5) / size as f64;
            values.push(f(u, v).clamp(0.0, 1.0));
        }
    }
    GridFunction::new(size, size, values).expect("synthetic image is well formed")
}

fn ring(u: f64, v: f64, cu: f64, cv: f64, radius: f64, width: f64) -> f64 {
    let z = (((u - cu).powi(2) + (v - cv).powi(2)).sqrt() - radius) / width;
    (-z * z).exp()
}

/// A single smooth ring centred in the image ("0"-like target).
pub fn synthetic_ring(size: usize) -> GridFunction {
    unit_square_image(size, |u, v| ring(u, v, 0.5, 0.5, 0.3, 0.07))
}

/// Two stacked rings ("8"-like initialisation).
pub fn synthetic_figure_eight(size: usize) -> GridFunction {
    unit_square_image(size, |u, v| {
        ring(u, v, 0.3, 0.5, 0.17, 0.06).max(ring(u, v, 0.7, 0.5, 0.17, 0.06))
    })
}

/// Linear model on `(x, 1)` trained by plain gradient descent on the square
/// loss.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricLearner {
    /// Weights with the bias last.
    pub w: Vec<f64>,
    pub eta: f64,
}

impl ParametricLearner {
    pub fn new(w: Vec<f64>, eta: f64) -> Result<Self> {
        if w.len() < 2 || w.iter().any(|v| !v.is_finite()) {
            return Err(NimtError::arg(
                "parametric weights need a slope and a bias, all finite",
            ));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(NimtError::arg(format!(
                "learning rate must be positive, got {eta}"
            )));
        }
        Ok(ParametricLearner { w, eta })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() + 1 != self.w.len() {
            return Err(NimtError::arg(format!(
                "point has dimension {}, weights expect {}",
                x.len(),
                self.w.len() - 1
            )));
        }
        let (slopes, bias) = self.w.split_at(x.len());
        Ok(slopes.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + bias[0])
    }
}

/// `w ← w - η·2(⟨w, x̃⟩ - y)·x̃` with `x̃ = (x, 1)`.
pub fn parametric_gd_step(p: &ParametricLearner, x: &[f64], y: f64) -> Result<ParametricLearner> {
    let g = 2.0 * (p.predict(x)? - y);
    let mut w = p.w.clone();
    for (wi, xi) in w.iter_mut().zip(x.iter().chain(std::iter::once(&1.0))) {
        *wi -= p.eta * g * xi;
    }
    ParametricLearner::new(w, p.eta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearComparisonRow {
    pub t: usize,
    /// Example taught to the linear-kernel and parametric learners.
    pub x: f64,
    pub y: f64,
    /// `max over grid |f_linear(x) - ⟨w, (x, 1)⟩|` after step `t`.
    pub max_gap: f64,
    pub m_linear: f64,
    pub m_parametric: f64,
    /// Discrepancy of an RBF learner taught by its own greedy teacher.
    pub m_rbf: f64,
}

/// Teaches the `linear_compare` problem for `steps` greedy iterations to a
/// linear-kernel learner, a parametric learner fed the identical examples,
/// and an RBF learner, recording the gap between the first two.
pub fn compare_linear(steps: usize, exec: Execution) -> Result<Vec<LinearComparisonRow>> {
    let scenario = make_scenario(ScenarioName::LinearCompare, &ScenarioOverrides::default())?;
    let grid = &scenario.grid;
    let target = scenario.target.evaluate_grid(grid, exec)?;

    let mut linear = Learner::new(scenario.init.clone(), scenario.eta, scenario.loss)?
        .with_execution(exec)
        .with_grid(grid.clone())?;
    let rbf_init = RkhsFunction::new(scenario.init.base().clone(), Kernel::rbf())?;
    let mut rbf = Learner::new(rbf_init, scenario.eta, scenario.loss)?
        .with_execution(exec)
        .with_grid(grid.clone())?;
    let (w0, eta) = match scenario.init.base() {
        BaseFunction::Plane { coefficients } => (coefficients.clone(), scenario.eta),
        _ => unreachable!("linear_compare starts from a plane"),
    };
    let mut parametric = ParametricLearner::new(w0, eta)?;
    let pool: Vec<usize> = (0..grid.len()).collect();

    let mut rows = Vec::with_capacity(steps);
    for t in 1..=steps {
        let lin_vals = linear.view().grid_values().expect("grid tracked");
        let i = gft_select(lin_vals, &target, 1, &pool, exec)?[0];
        let x = grid.point(i).to_vec();
        let y = target[i];
        linear.step(&TeachingPack::single(x.clone(), y)?)?;
        parametric = parametric_gd_step(&parametric, &x, y)?;

        let rbf_vals = rbf.view().grid_values().expect("grid tracked");
        let j = gft_select(rbf_vals, &target, 1, &pool, exec)?[0];
        rbf.step(&TeachingPack::single(grid.point(j).to_vec(), target[j])?)?;

        let lin_vals = linear.view().grid_values().expect("grid tracked");
        let par_vals: Vec<f64> = grid
            .points()
            .map(|p| parametric.predict(p))
            .collect::<Result<_>>()?;
        let max_gap = lin_vals
            .iter()
            .zip(&par_vals)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        rows.push(LinearComparisonRow {
            t,
            x: x[0],
            y,
            max_gap,
            m_linear: empirical_l2(lin_vals, &target)?,
            m_parametric: empirical_l2(&par_vals, &target)?,
            m_rbf: empirical_l2(rbf.view().grid_values().expect("grid tracked"), &target)?,
        });
    }
    Ok(rows)
}
