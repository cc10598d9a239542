use std::sync::Arc;

use super::{Exec, NumericsError};

/// Minimum points per axis for second-order stencils with one-sided edges.
pub const MIN_POINTS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// One-sided stencils of matching order at the edges.
    OneSided,
    /// The last point is followed by the first; `max` is excluded.
    Periodic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, min: f64, max: f64, n: usize) -> Self {
        Axis {
            name: name.into(),
            min,
            max,
            n,
        }
    }
}

/// Rectangular grid, row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
    boundary: Boundary,
    h: Vec<f64>,
    strides: Vec<usize>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>, boundary: Boundary) -> Result<Self, NumericsError> {
        if axes.is_empty() {
            return Err(NumericsError::BadGrid("a grid needs at least one axis".into()));
        }
        let mut h = Vec::with_capacity(axes.len());
        for a in &axes {
            if a.n < MIN_POINTS {
                return Err(NumericsError::GridTooCoarse {
                    axis: a.name.clone(),
                    points: a.n,
                });
            }
            if !(a.min.is_finite() && a.max.is_finite() && a.max > a.min) {
                return Err(NumericsError::BadGrid(format!(
                    "axis `{}` needs finite min < max",
                    a.name
                )));
            }
            let cells = match boundary {
                Boundary::OneSided => a.n - 1,
                Boundary::Periodic => a.n,
            };
            h.push((a.max - a.min) / cells as f64);
        }
        let mut strides = vec![1; axes.len()];
        for k in (0..axes.len() - 1).rev() {
            strides[k] = strides[k + 1] * axes[k + 1].n;
        }
        Ok(Grid {
            axes,
            boundary,
            h,
            strides,
        })
    }

    /// Convenience constructor for a (t, x) grid with one-sided edges.
    pub fn tx(nt: usize, tmin: f64, tmax: f64, nx: usize, xmin: f64, xmax: f64) -> Result<Self, NumericsError> {
        Grid::new(
            vec![Axis::new("t", tmin, tmax, nt), Axis::new("x", xmin, xmax, nx)],
            Boundary::OneSided,
        )
    }

    /// The grid with every spacing halved (`2n − 1` points per axis).
    pub fn refined(&self) -> Grid {
        let axes = self
            .axes
            .iter()
            .map(|a| Axis {
                n: match self.boundary {
                    Boundary::OneSided => 2 * a.n - 1,
                    Boundary::Periodic => 2 * a.n,
                },
                ..a.clone()
            })
            .collect();
        Grid::new(axes, self.boundary).expect("refinement keeps grid invariants")
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis_index(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.name == name)
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    pub fn h_max(&self) -> f64 {
        self.h.iter().copied().fold(0.0, f64::max)
    }

    /// Product of the spacings (cell volume).
    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Length of the innermost axis, the unit of parallel work.
    pub fn row_len(&self) -> usize {
        self.axes.last().map_or(1, |a| a.n)
    }

    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        self.axes[axis].min + k as f64 * self.h[axis]
    }

    pub fn index_along(&self, flat: usize, axis: usize) -> usize {
        (flat / self.strides[axis]) % self.axes[axis].n
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        (0..self.dim()).map(|a| self.index_along(flat, a)).collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        (0..self.dim())
            .map(|a| self.coord(a, self.index_along(flat, a)))
            .collect()
    }

    /// Whether every index is at least `layers` away from each edge
    /// (always true for periodic grids).
    pub fn is_interior(&self, flat: usize, layers: usize) -> bool {
        if self.boundary == Boundary::Periodic {
            return true;
        }
        (0..self.dim()).all(|a| {
            let k = self.index_along(flat, a);
            k >= layers && k + layers < self.axes[a].n
        })
    }
}

/// Finite samples of a scalar field on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    grid: Arc<Grid>,
    data: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Arc<Grid>, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != grid.len() {
            return Err(NumericsError::ShapeMismatch {
                expected: grid.len(),
                found: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite {
                index: grid.multi_index(i),
                value: data[i],
            });
        }
        Ok(GridField { grid, data })
    }

    pub fn constant(grid: Arc<Grid>, v: f64) -> Self {
        let n = grid.len();
        GridField { grid, data: vec![v; n] }
    }

    /// Sample `f(point)` at every grid point.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64 + Sync + Send) -> Result<Self, NumericsError> {
        GridField::from_fn_with(Exec::default(), grid, f)
    }

    pub fn from_fn_with(
        exec: Exec,
        grid: Arc<Grid>,
        f: impl Fn(&[f64]) -> f64 + Sync + Send,
    ) -> Result<Self, NumericsError> {
        let mut data = vec![0.0; grid.len()];
        let g = &grid;
        exec.for_rows(&mut data, grid.row_len(), |start, chunk| {
            for (k, v) in chunk.iter_mut().enumerate() {
                *v = f(&g.point(start + k));
            }
        });
        GridField::new(grid.clone(), data)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn at(&self, idx: &[usize]) -> f64 {
        self.data[self.grid.flat_index(idx)]
    }

    pub fn sup(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> Result<GridField, NumericsError> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && *self.grid != *other.grid {
            return Err(NumericsError::BadGrid("fields live on different grids".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect();
        GridField::new(self.grid.clone(), data)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<GridField, NumericsError> {
        GridField::new(self.grid.clone(), self.data.iter().map(|v| f(*v)).collect())
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField, NumericsError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &GridField) -> Result<GridField, NumericsError> {
        self.zip_with(other, |a, b| a + b)
    }
}
