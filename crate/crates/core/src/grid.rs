use crate::error::{NimtError, Result};

/// A finite set of points stored flat, row-major, `dim` coordinates each.
///
/// This is the discretised domain the teacher searches over.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    coords: Vec<f64>,
}

impl Grid {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(NimtError::arg("grid dimension must be at least 1"));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(NimtError::arg(format!(
                "grid needs a nonempty coordinate list divisible by dim {dim}, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(NimtError::arg("grid coordinates must be finite"));
        }
        Ok(Grid { dim, coords })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if points.iter().any(|p| p.len() != dim) {
            return Err(NimtError::arg("grid points must share one dimension"));
        }
        Grid::new(dim, points.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn to_points(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }

    /// Per-axis `(min, max)` of the stored points.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.points() {
            for (d, &v) in p.iter().enumerate() {
                lo[d] = lo[d].min(v);
                hi[d] = hi[d].max(v);
            }
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction() {
        let g = Grid::new(2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.point(1), &[2.0, 3.0]);
        assert_eq!(g.bounds(), (vec![0.0, 1.0], vec![2.0, 3.0]));
        assert!(Grid::new(2, vec![0.0, 1.0, 2.0]).is_err());
        assert!(Grid::new(1, vec![]).is_err());
        assert!(Grid::from_points(&[vec![0.0], vec![1.0, 2.0]]).is_err());
    }
}
