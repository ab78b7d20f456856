//! RKHS models as an analytic (or pixel-grid) base plus a finite kernel
//! expansion `Σ αᵢ K(cᵢ, ·)`.
//!
//! Every learner update lands in the span of kernel sections, so keeping the
//! expansion explicit makes the update exact: after adding `(c, a)` the model
//! moves by exactly `a·K(c, x)` at every `x`.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{NimtError, Result};
use crate::grid::Grid;
use crate::kernel::Kernel;

/// One `sign · exp(-((x₁ - center) / width)²)` bump of a 2-D boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub sign: f64,
    pub center: f64,
    pub width: f64,
}

impl Bump {
    pub fn new(sign: f64, center: f64, width: f64) -> Self {
        Bump {
            sign,
            center,
            width,
        }
    }

    fn eval(&self, x1: f64) -> f64 {
        let z = (x1 - self.center) / self.width;
        self.sign * (-z * z).exp()
    }
}

/// Grayscale surface on a pixel lattice.
///
/// Pixel `(r, c)` sits at `((r + 0.5) / rows, (c + 0.5) / cols)` in the unit
/// square, so images of any size share one coordinate convention.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(NimtError::arg(
                "grid function needs at least one row and column",
            ));
        }
        if values.len() != rows * cols {
            return Err(NimtError::arg(format!(
                "grid function shape {rows}x{cols} does not match {} values",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(NimtError::arg("grid function values must be finite"));
        }
        Ok(GridFunction { rows, cols, values })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    /// Pixel centres in row-major order.
    pub fn lattice(&self) -> Grid {
        let mut coords = Vec::with_capacity(2 * self.rows * self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                coords.push((r as f64 + 0.5) / self.rows as f64);
                coords.push((c as f64 + 0.5) / self.cols as f64);
            }
        }
        Grid::new(2, coords).expect("lattice of a nonempty image is a valid grid")
    }

    /// Value at the lattice point nearest to `x`.
    pub fn lookup(&self, x: &[f64]) -> Result<f64> {
        if x.len() != 2 {
            return Err(NimtError::arg(format!(
                "image lookup needs a 2-D point, got dimension {}",
                x.len()
            )));
        }
        if !(0.0..=1.0).contains(&x[0]) || !(0.0..=1.0).contains(&x[1]) {
            return Err(NimtError::arg(format!(
                "image lookup point ({}, {}) lies outside the unit square",
                x[0], x[1]
            )));
        }
        let r = ((x[0] * self.rows as f64).floor() as usize).min(self.rows - 1);
        let c = ((x[1] * self.cols as f64).floor() as usize).min(self.cols - 1);
        Ok(self.get(r, c))
    }

    /// Affine map of the values so their min/max match `reference`'s.
    /// A constant image maps onto the reference midpoint.
    pub fn rescaled_to_match(&self, reference: &GridFunction) -> GridFunction {
        let (lo, hi) = min_max(&self.values);
        let (ref_lo, ref_hi) = min_max(&reference.values);
        let values = if hi > lo {
            let gain = (ref_hi - ref_lo) / (hi - lo);
            self.values
                .iter()
                .map(|v| ref_lo + (v - lo) * gain)
                .collect()
        } else {
            vec![0.5 * (ref_lo + ref_hi); self.values.len()]
        };
        GridFunction {
            rows: self.rows,
            cols: self.cols,
            values,
        }
    }
}

pub(crate) fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// The non-expansion part of a model.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseFunction {
    Zero,
    /// `Σ wᵢ N(x; μᵢ, σᵢ)` on the real line.
    GaussianMixture1D {
        weights: Vec<f64>,
        means: Vec<f64>,
        stddevs: Vec<f64>,
    },
    /// `x₂ + Σ bumpᵢ(x₁)`; its zero set is the curve `x₂ = -Σ bumpᵢ(x₁)`.
    Boundary2D {
        bumps: Vec<Bump>,
    },
    /// `Σ aᵢ xᵢ + b` with the bias stored last.
    Plane {
        coefficients: Vec<f64>,
    },
    /// `sign · ‖x - center‖²`.
    Paraboloid {
        sign: f64,
        center: Vec<f64>,
    },
    Grid(GridFunction),
}

impl BaseFunction {
    /// Input dimension fixed by the base, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            BaseFunction::Zero => None,
            BaseFunction::GaussianMixture1D { .. } => Some(1),
            BaseFunction::Boundary2D { .. } | BaseFunction::Grid(_) => Some(2),
            BaseFunction::Plane { coefficients } => Some(coefficients.len().saturating_sub(1)),
            BaseFunction::Paraboloid { center, .. } => Some(center.len()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BaseFunction::Zero | BaseFunction::Grid(_) => Ok(()),
            BaseFunction::GaussianMixture1D {
                weights,
                means,
                stddevs,
            } => {
                if weights.is_empty()
                    || weights.len() != means.len()
                    || weights.len() != stddevs.len()
                {
                    return Err(NimtError::arg(
                        "gaussian mixture needs equal, nonempty weight/mean/stddev lists",
                    ));
                }
                if stddevs.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return Err(NimtError::arg("gaussian mixture stddevs must be positive"));
                }
                if weights.iter().chain(means).any(|v| !v.is_finite())
                    || weights.iter().any(|w| *w < 0.0)
                {
                    return Err(NimtError::arg(
                        "gaussian mixture weights must be nonnegative and means finite",
                    ));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(NimtError::arg(format!(
                        "gaussian mixture weights must sum to 1, got {total}"
                    )));
                }
                Ok(())
            }
            BaseFunction::Boundary2D { bumps } => {
                if bumps
                    .iter()
                    .any(|b| !(b.width > 0.0) || !b.center.is_finite() || !b.sign.is_finite())
                {
                    return Err(NimtError::arg(
                        "boundary bumps need finite centers and positive widths",
                    ));
                }
                Ok(())
            }
            BaseFunction::Plane { coefficients } => {
                if coefficients.len() < 2 || coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(NimtError::arg(
                        "plane needs at least one slope plus a bias, all finite",
                    ));
                }
                Ok(())
            }
            BaseFunction::Paraboloid { sign, center } => {
                if center.is_empty() || !sign.is_finite() || center.iter().any(|c| !c.is_finite()) {
                    return Err(NimtError::arg(
                        "paraboloid needs a finite sign and nonempty center",
                    ));
                }
                Ok(())
            }
        }
    }

    /// Caller guarantees `x` has the base's dimension.
    fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(match self {
            BaseFunction::Zero => 0.0,
            BaseFunction::GaussianMixture1D {
                weights,
                means,
                stddevs,
            } => weights
                .iter()
                .zip(means.iter().zip(stddevs))
                .map(|(w, (m, s))| w * normal_pdf(x[0], *m, *s))
                .sum(),
            BaseFunction::Boundary2D { bumps } => {
                x[1] + bumps.iter().map(|b| b.eval(x[0])).sum::<f64>()
            }
            BaseFunction::Plane { coefficients } => {
                let (slopes, bias) = coefficients.split_at(coefficients.len() - 1);
                slopes.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + bias[0]
            }
            BaseFunction::Paraboloid { sign, center } => {
                sign * x
                    .iter()
                    .zip(center)
                    .map(|(v, c)| (v - c) * (v - c))
                    .sum::<f64>()
            }
            BaseFunction::Grid(grid) => grid.lookup(x)?,
        })
    }
}

pub fn normal_pdf(x: f64, mean: f64, stddev: f64) -> f64 {
    let z = (x - mean) / stddev;
    (-0.5 * z * z).exp() / (stddev * (2.0 * PI).sqrt())
}

/// `base(x) + Σ αᵢ K(cᵢ, x)`.
#[derive(Debug, Clone)]
pub struct RkhsFunction {
    base: BaseFunction,
    kernel: Kernel,
    dim: Option<usize>,
    centers: Vec<f64>,
    coeffs: Vec<f64>,
    slots: HashMap<Vec<u64>, usize>,
}

impl RkhsFunction {
    pub fn new(base: BaseFunction, kernel: Kernel) -> Result<Self> {
        base.validate()?;
        kernel.validate()?;
        Ok(RkhsFunction {
            dim: base.dim(),
            base,
            kernel,
            centers: Vec::new(),
            coeffs: Vec::new(),
            slots: HashMap::new(),
        })
    }

    pub fn zero(kernel: Kernel) -> Self {
        RkhsFunction::new(BaseFunction::Zero, kernel).expect("zero base is always valid")
    }

    pub fn base(&self) -> &BaseFunction {
        &self.base
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn term_count(&self) -> usize {
        self.coeffs.len()
    }

    /// `(center, coefficient)` pairs in insertion order.
    pub fn terms(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        let d = self.dim.unwrap_or(0).max(1);
        self.centers
            .chunks_exact(d)
            .zip(self.coeffs.iter().copied())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        match self.dim {
            Some(d) if d != x.len() => Err(NimtError::arg(format!(
                "point has dimension {}, model expects {d}",
                x.len()
            ))),
            _ if x.is_empty() => Err(NimtError::arg("point must have at least one coordinate")),
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let base = self.base.eval(x)?;
        Ok(base + self.expansion_at(x))
    }

    /// The expansion part alone; `x` must already be dimension-checked.
    pub(crate) fn expansion_at(&self, x: &[f64]) -> f64 {
        self.terms()
            .map(|(c, a)| a * self.kernel.eval_unchecked(c, x))
            .sum()
    }

    /// Adds `coeff · K(center, ·)` in place, merging with an existing term at
    /// the identical center.
    pub fn add_term_in_place(&mut self, center: &[f64], coeff: f64) -> Result<()> {
        if !coeff.is_finite() {
            return Err(NimtError::arg(format!(
                "expansion coefficient must be finite, got {coeff}"
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(NimtError::arg("expansion center must be finite"));
        }
        self.check_dim(center)?;
        if self.dim.is_none() {
            self.dim = Some(center.len());
        }
        if let BaseFunction::Grid(g) = &self.base {
            g.lookup(center)?;
        }
        let key: Vec<u64> = center.iter().map(|c| (c + 0.0).to_bits()).collect();
        match self.slots.get(&key) {
            Some(&slot) => self.coeffs[slot] += coeff,
            None => {
                self.slots.insert(key, self.coeffs.len());
                self.centers.extend_from_slice(center);
                self.coeffs.push(coeff);
            }
        }
        Ok(())
    }

    /// Value-returning form of [`add_term_in_place`](Self::add_term_in_place).
    pub fn add_expansion_term(&self, center: &[f64], coeff: f64) -> Result<RkhsFunction> {
        let mut next = self.clone();
        next.add_term_in_place(center, coeff)?;
        Ok(next)
    }

    /// Evaluates on every grid point.
    pub fn evaluate_grid(&self, grid: &Grid, exec: crate::exec::Execution) -> Result<Vec<f64>> {
        if let Some(first) = grid.points().next() {
            self.check_dim(first)?;
        }
        // Grid bases can fail on off-lattice points; probe them serially first.
        if let BaseFunction::Grid(_) = self.base {
            let base: Vec<f64> = grid
                .points()
                .map(|p| self.base.eval(p))
                .collect::<Result<_>>()?;
            return Ok(crate::exec::map_indexed(exec, grid.len(), |i| {
                base[i] + self.expansion_at(grid.point(i))
            }));
        }
        Ok(crate::exec::map_indexed(exec, grid.len(), |i| {
            let p = grid.point(i);
            self.base.eval(p).unwrap_or(f64::NAN) + self.expansion_at(p)
        }))
    }
}

/// Builds a model with the requested base and an empty expansion.
pub fn make_target(base: BaseFunction, kernel: Kernel) -> Result<RkhsFunction> {
    RkhsFunction::new(base, kernel)
}

/// `(1/n) · sqrt(Σ (fᵢ - gᵢ)²)`, the discrepancy used for stopping.
pub fn empirical_l2(f_values: &[f64], g_values: &[f64]) -> Result<f64> {
    if f_values.is_empty() || f_values.len() != g_values.len() {
        return Err(NimtError::arg(format!(
            "empirical L2 needs equal nonempty lengths, got {} and {}",
            f_values.len(),
            g_values.len()
        )));
    }
    let sq: f64 = f_values
        .iter()
        .zip(g_values)
        .map(|(f, g)| (f - g) * (f - g))
        .sum();
    Ok(sq.sqrt() / f_values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn gmm_target() -> BaseFunction {
        BaseFunction::GaussianMixture1D {
            weights: vec![1.0 / 3.0, 2.0 / 3.0],
            means: vec![-2.0, 2.0],
            stddevs: vec![1.0, 1.0],
        }
    }

    #[test]
    fn zero_function_is_zero() {
        let f = RkhsFunction::zero(Kernel::rbf());
        assert_eq!(f.evaluate(&[3.7]).unwrap(), 0.0);
        assert_eq!(f.evaluate(&[1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn gmm_matches_closed_form() {
        let f = make_target(gmm_target(), Kernel::rbf()).unwrap();
        // (1/3)·φ(4) + (2/3)·φ(0) with φ the standard normal pdf
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
        let expected = phi(4.0) / 3.0 + 2.0 * phi(0.0) / 3.0;
        assert_abs_diff_eq!(f.evaluate(&[2.0]).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(f.evaluate(&[2.0]).unwrap(), 0.2660061, epsilon = 1e-7);
    }

    #[test]
    fn single_component_peak() {
        let base = BaseFunction::GaussianMixture1D {
            weights: vec![1.0],
            means: vec![-10.0],
            stddevs: vec![1.0],
        };
        let f = make_target(base, Kernel::rbf()).unwrap();
        assert_abs_diff_eq!(f.evaluate(&[-10.0]).unwrap(), 0.398942, epsilon = 1e-6);
    }

    #[test]
    fn plane_and_boundary_targets() {
        let plane = make_target(
            BaseFunction::Plane {
                coefficients: vec![1.0, 1.0, -8.0],
            },
            Kernel::rbf(),
        )
        .unwrap();
        assert_eq!(plane.evaluate(&[5.0, 5.0]).unwrap(), 2.0);

        let boundary = make_target(
            BaseFunction::Boundary2D {
                bumps: vec![Bump::new(-1.0, 0.5, 0.5), Bump::new(1.0, -0.5, 0.5)],
            },
            Kernel::rbf(),
        )
        .unwrap();
        for x2 in [-0.9, -0.2, 0.0, 0.4, 1.0] {
            assert_abs_diff_eq!(boundary.evaluate(&[0.0, x2]).unwrap(), x2, epsilon = 1e-15);
        }
    }

    #[test]
    fn invalid_targets_rejected() {
        let bad = BaseFunction::GaussianMixture1D {
            weights: vec![1.0],
            means: vec![0.0],
            stddevs: vec![0.0],
        };
        assert!(make_target(bad, Kernel::rbf()).is_err());
        let unnormalised = BaseFunction::GaussianMixture1D {
            weights: vec![0.5, 0.4],
            means: vec![0.0, 1.0],
            stddevs: vec![1.0, 1.0],
        };
        assert!(make_target(unnormalised, Kernel::rbf()).is_err());
        assert!(make_target(
            BaseFunction::Plane {
                coefficients: vec![1.0]
            },
            Kernel::rbf()
        )
        .is_err());
    }

    #[test]
    fn expansion_terms() {
        let f = RkhsFunction::zero(Kernel::rbf());
        let c = [0.7];
        let g = f.add_expansion_term(&c, 0.2).unwrap();
        assert_abs_diff_eq!(g.evaluate(&c).unwrap(), 0.2, epsilon = 1e-15);

        let same = f.add_expansion_term(&c, 0.0).unwrap();
        for x in [-1.0, 0.0, 0.7, 5.0] {
            assert_eq!(same.evaluate(&[x]).unwrap(), f.evaluate(&[x]).unwrap());
        }

        let twice = f
            .add_expansion_term(&c, 0.1)
            .unwrap()
            .add_expansion_term(&c, 0.1)
            .unwrap();
        assert_eq!(twice.term_count(), 1);
        assert_abs_diff_eq!(twice.terms().next().unwrap().1, 0.2, epsilon = 1e-15);

        assert!(f.add_expansion_term(&c, f64::NAN).is_err());
        assert!(f.add_expansion_term(&c, f64::INFINITY).is_err());
        let one_d = g.clone();
        assert!(one_d.add_expansion_term(&[0.0, 1.0], 0.1).is_err());
        assert!(g.evaluate(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn empirical_l2_examples() {
        assert_eq!(empirical_l2(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(
            empirical_l2(&[3.0, 4.0, 0.0, 0.0], &[0.0; 4]).unwrap(),
            1.25
        );
        assert_eq!(empirical_l2(&[6.0, 8.0, 0.0, 0.0], &[0.0; 4]).unwrap(), 2.5);
        assert!(empirical_l2(&[], &[]).is_err());
        assert!(empirical_l2(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn grid_function_lookup_and_rescale() {
        let img = GridFunction::new(2, 3, vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let lattice = img.lattice();
        assert_eq!(lattice.len(), 6);
        for (i, p) in lattice.points().enumerate() {
            assert_eq!(img.lookup(p).unwrap(), img.values()[i]);
        }
        assert!(img.lookup(&[1.5, 0.5]).is_err());
        assert!(GridFunction::new(2, 2, vec![0.0; 3]).is_err());

        let reference = GridFunction::new(1, 2, vec![2.0, 4.0]).unwrap();
        let src = GridFunction::new(1, 3, vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(src.rescaled_to_match(&reference).values(), &[2.0, 3.0, 4.0]);
    }

    #[test]
    fn grid_base_rejects_off_domain_centers() {
        let img = GridFunction::new(2, 2, vec![0.0; 4]).unwrap();
        let f = RkhsFunction::new(BaseFunction::Grid(img), Kernel::rbf()).unwrap();
        assert!(f.add_expansion_term(&[2.0, 0.5], 0.1).is_err());
        assert!(f.add_expansion_term(&[0.25, 0.75], 0.1).is_ok());
    }

    proptest! {
        #[test]
        fn reproducing_step(
            c in -5.0f64..5.0,
            a in -2.0f64..2.0,
            probes in prop::collection::vec(-8.0f64..8.0, 100),
        ) {
            let k = Kernel::rbf();
            let before = make_target(gmm_target(), k).unwrap()
                .add_expansion_term(&[1.3], 0.4).unwrap();
            let after = before.add_expansion_term(&[c], a).unwrap();
            for x in probes {
                let diff = after.evaluate(&[x]).unwrap() - before.evaluate(&[x]).unwrap();
                prop_assert!((diff - a * k.eval(&[c], &[x]).unwrap()).abs() <= 1e-12);
            }
        }

        #[test]
        fn expansion_is_linear(
            terms in prop::collection::vec((-3.0f64..3.0, -1.0f64..1.0), 1..20),
            x in -4.0f64..4.0,
        ) {
            let k = Kernel::rbf();
            let mut f = RkhsFunction::zero(k);
            for (c, a) in &terms {
                f.add_term_in_place(&[*c], *a).unwrap();
            }
            let by_term: f64 = terms.iter().map(|(c, a)| a * k.eval(&[*c], &[x]).unwrap()).sum();
            prop_assert!((f.evaluate(&[x]).unwrap() - by_term).abs() <= 1e-10);
        }

        #[test]
        fn empirical_l2_triangle(
            vals in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0), 1..50),
        ) {
            let f: Vec<f64> = vals.iter().map(|v| v.0).collect();
            let g: Vec<f64> = vals.iter().map(|v| v.1).collect();
            let h: Vec<f64> = vals.iter().map(|v| v.2).collect();
            let fh = empirical_l2(&f, &h).unwrap();
            let fg = empirical_l2(&f, &g).unwrap();
            let gh = empirical_l2(&g, &h).unwrap();
            prop_assert!(fh <= fg + gh + 1e-10);
        }
    }
}
