//! Teacher policies: random (RFT) and greedy (GFT) functional teaching,
//! optionally confined to a pool and optionally substituting an alternative
//! target's labels.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NimtError, Result};
use crate::exec::{self, Execution};
use crate::learner::{Example, TeachingPack};
use crate::loss::Loss;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TeacherKind {
    Rft,
    Gft,
}

impl std::fmt::Display for TeacherKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TeacherKind::Rft => "rft",
            TeacherKind::Gft => "gft",
        })
    }
}

/// Examples per iteration: a count, or a fraction of the pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PackSize {
    Count(usize),
    Ratio(f64),
}

impl PackSize {
    /// Integers (including `1.0`) are counts; values in `(0, 1)` are ratios.
    pub fn from_number(value: f64) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(NimtError::arg(format!(
                "pack size must be positive, got {value}"
            )));
        }
        if value.fract() == 0.0 {
            Ok(PackSize::Count(value as usize))
        } else if value < 1.0 {
            Ok(PackSize::Ratio(value))
        } else {
            Err(NimtError::arg(format!(
                "pack size must be an integer or a ratio in (0, 1], got {value}"
            )))
        }
    }

    pub fn resolve(&self, pool_size: usize) -> Result<usize> {
        let k = match *self {
            PackSize::Count(k) => k,
            PackSize::Ratio(r) if r > 0.0 && r <= 1.0 => {
                ((r * pool_size as f64).round() as usize).max(1)
            }
            PackSize::Ratio(r) => {
                return Err(NimtError::arg(format!(
                    "pack ratio must lie in (0, 1], got {r}"
                )))
            }
        };
        if k == 0 || k > pool_size {
            return Err(NimtError::arg(format!(
                "pack size {k} must be between 1 and the pool size {pool_size}"
            )));
        }
        Ok(k)
    }
}

impl std::fmt::Display for PackSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PackSize::Count(k) => write!(f, "{k}"),
            PackSize::Ratio(r) => write!(f, "{r}"),
        }
    }
}

/// Seeded uniform subsample of `round(ratio·n)` grid indices, sorted.
pub fn sample_pool<R: Rng + ?Sized>(n: usize, ratio: f64, rng: &mut R) -> Result<Vec<usize>> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(NimtError::arg(format!(
            "pool ratio must lie in (0, 1], got {ratio}"
        )));
    }
    let size = ((ratio * n as f64).round() as usize).clamp(1, n);
    let mut pool = index::sample(rng, n, size).into_vec();
    pool.sort_unstable();
    Ok(pool)
}

/// `k` distinct pool entries drawn uniformly without replacement.
pub fn rft_select<R: Rng + ?Sized>(k: usize, pool: &[usize], rng: &mut R) -> Result<Vec<usize>> {
    if k == 0 || k > pool.len() {
        return Err(NimtError::arg(format!(
            "cannot draw {k} examples from a pool of {}",
            pool.len()
        )));
    }
    Ok(index::sample(rng, pool.len(), k)
        .into_iter()
        .map(|pos| pool[pos])
        .collect())
}

/// The `k` pool entries with the largest `|model - target|`, in decreasing
/// residual order; ties go to the smaller index.
pub fn gft_select(
    model_values: &[f64],
    target_values: &[f64],
    k: usize,
    pool: &[usize],
    exec: Execution,
) -> Result<Vec<usize>> {
    if k == 0 || k > pool.len() {
        return Err(NimtError::arg(format!(
            "cannot select {k} examples from a pool of {}",
            pool.len()
        )));
    }
    if model_values.len() != target_values.len() {
        return Err(NimtError::arg("model and target values differ in length"));
    }
    if let Some(&bad) = pool.iter().find(|&&i| i >= model_values.len()) {
        return Err(NimtError::arg(format!(
            "pool index {bad} out of range for {} values",
            model_values.len()
        )));
    }
    let residual = |i: usize| (model_values[i] - target_values[i]).abs();

    if k == 1 {
        let pos = exec::argmax_by_key(exec, pool, residual).expect("pool is nonempty");
        return Ok(vec![pool[pos]]);
    }
    let mut ranked: Vec<(f64, usize)> = pool.iter().map(|&i| (residual(i), i)).collect();
    let order = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
    if k < ranked.len() {
        ranked.select_nth_unstable_by(k - 1, order);
        ranked.truncate(k);
    }
    ranked.sort_unstable_by(order);
    Ok(ranked.into_iter().map(|(_, i)| i).collect())
}

/// Label source substituted for the target with probability `prob` per
/// iteration. `values` are its evaluations on the teaching grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AltTeaching {
    pub prob: f64,
    pub values: Vec<f64>,
}

impl AltTeaching {
    pub fn new(prob: f64, values: Vec<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&prob) {
            return Err(NimtError::arg(format!(
                "alternative teaching probability must lie in [0, 1], got {prob}"
            )));
        }
        Ok(AltTeaching { prob, values })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeacherPolicy {
    pub kind: TeacherKind,
    pub k: PackSize,
    /// Sorted grid indices the teacher may use; `None` means the whole grid.
    pub pool: Option<Vec<usize>>,
    pub alt: Option<AltTeaching>,
    pub seed: u64,
}

impl TeacherPolicy {
    pub fn new(kind: TeacherKind, k: PackSize, seed: u64) -> Self {
        TeacherPolicy {
            kind,
            k,
            pool: None,
            alt: None,
            seed,
        }
    }

    pub fn gft(k: usize, seed: u64) -> Self {
        TeacherPolicy::new(TeacherKind::Gft, PackSize::Count(k), seed)
    }

    pub fn rft(k: usize, seed: u64) -> Self {
        TeacherPolicy::new(TeacherKind::Rft, PackSize::Count(k), seed)
    }

    pub fn with_pool(mut self, pool: Vec<usize>) -> Self {
        self.pool = Some(pool);
        self
    }

    pub fn with_alt(mut self, alt: AltTeaching) -> Self {
        self.alt = Some(alt);
        self
    }

    /// The pool as an explicit sorted index list over a grid of `n` points.
    pub fn resolved_pool(&self, n: usize) -> Result<Vec<usize>> {
        match &self.pool {
            None => Ok((0..n).collect()),
            Some(pool) => {
                if pool.is_empty() {
                    return Err(NimtError::arg("teaching pool is empty"));
                }
                let mut pool = pool.clone();
                pool.sort_unstable();
                pool.dedup();
                if let Some(&bad) = pool.last().filter(|&&i| i >= n) {
                    return Err(NimtError::arg(format!(
                        "pool index {bad} out of range for a grid of {n} points"
                    )));
                }
                Ok(pool)
            }
        }
    }
}

/// Labels for the chosen indices and whether the alternative source was used.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPack {
    pub pack: TeachingPack,
    pub indices: Vec<usize>,
    pub substituted: bool,
}

/// Labels `indices` from the target values, or (after one Bernoulli draw for
/// the whole pack) from the alternative source.
pub fn label_pack<R: Rng + ?Sized>(
    indices: &[usize],
    points: &crate::grid::Grid,
    target_values: &[f64],
    alt: Option<&AltTeaching>,
    loss: Loss,
    rng: &mut R,
) -> Result<LabeledPack> {
    if let Some(&bad) = indices.iter().find(|&&i| i >= points.len()) {
        return Err(NimtError::arg(format!(
            "selected index {bad} out of range for a grid of {} points",
            points.len()
        )));
    }
    let substituted = match alt {
        Some(alt) => rng.gen::<f64>() < alt.prob,
        None => false,
    };
    let source = match alt {
        Some(alt) if substituted => &alt.values,
        _ => target_values,
    };
    let examples = indices
        .iter()
        .map(|&i| Example {
            x: points.point(i).to_vec(),
            y: loss.label_for(source[i]),
        })
        .collect();
    Ok(LabeledPack {
        pack: TeachingPack::new(examples)?,
        indices: indices.to_vec(),
        substituted,
    })
}
