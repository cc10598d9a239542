//! Second-order finite differences along one grid axis.

use super::{Boundary, Exec, GridField, NumericsError};

struct Stencil {
    /// Offset of the first coefficient relative to the evaluation point.
    start: isize,
    coeffs: &'static [f64],
}

const C1: &[f64] = &[-0.5, 0.0, 0.5];
const C2: &[f64] = &[1.0, -2.0, 1.0];
const C3: &[f64] = &[-0.5, 1.0, 0.0, -1.0, 0.5];
const F1: &[f64] = &[-1.5, 2.0, -0.5];
const F2: &[f64] = &[2.0, -5.0, 4.0, -1.0];
const F3: &[f64] = &[-2.5, 9.0, -12.0, 7.0, -1.5];
// third derivative one point in from the edge, on the first five points
const N3: &[f64] = &[-1.5, 5.0, -6.0, 3.0, -0.5];
const B1: &[f64] = &[0.5, -2.0, 1.5];
const B2: &[f64] = &[-1.0, 4.0, -5.0, 2.0];
const B3: &[f64] = &[1.5, -7.0, 12.0, -9.0, 2.5];
const M3: &[f64] = &[0.5, -3.0, 6.0, -5.0, 1.5];

fn stencil(order: usize, k: usize, n: usize, periodic: bool) -> Stencil {
    let central = |coeffs: &'static [f64]| Stencil {
        start: -((coeffs.len() / 2) as isize),
        coeffs,
    };
    let c = match order {
        1 => C1,
        2 => C2,
        _ => C3,
    };
    let half = c.len() / 2;
    if periodic || (k >= half && k + half < n) {
        return central(c);
    }
    let at = |start: isize, coeffs: &'static [f64]| Stencil { start, coeffs };
    match (order, k) {
        (1, 0) => at(0, F1),
        (2, 0) => at(0, F2),
        (3, 0) => at(0, F3),
        (3, 1) => at(-1, N3),
        (1, _) => at(-(B1.len() as isize - 1), B1),
        (2, _) => at(-(B2.len() as isize - 1), B2),
        _ if k + 1 == n => at(-(B3.len() as isize - 1), B3),
        _ => at(-(M3.len() as isize - 2), M3),
    }
}

/// `∂^order f / ∂(axis)^order` for `order ∈ {1, 2, 3}`.
pub fn fd_partial(f: &GridField, axis: usize, order: usize) -> Result<GridField, NumericsError> {
    fd_partial_with(Exec::default(), f, axis, order)
}

pub fn fd_partial_with(exec: Exec, f: &GridField, axis: usize, order: usize) -> Result<GridField, NumericsError> {
    let grid = f.grid();
    if !(1..=3).contains(&order) {
        return Err(NumericsError::BadOrder(order));
    }
    if axis >= grid.dim() {
        return Err(NumericsError::BadGrid(format!(
            "no axis {axis} in a {}-dimensional grid",
            grid.dim()
        )));
    }
    let n = grid.axes()[axis].n;
    let stride = grid.strides()[axis] as isize;
    let periodic = grid.boundary() == Boundary::Periodic;
    let scale = grid.h(axis).powi(order as i32).recip();
    let src = f.data();
    let mut out = vec![0.0; src.len()];
    exec.for_rows(&mut out, grid.row_len(), |start, chunk| {
        for (j, v) in chunk.iter_mut().enumerate() {
            let flat = start + j;
            let k = grid.index_along(flat, axis);
            let st = stencil(order, k, n, periodic);
            let base = flat as isize - k as isize * stride;
            let mut acc = 0.0;
            for (m, c) in st.coeffs.iter().enumerate() {
                if *c == 0.0 {
                    continue;
                }
                let mut pos = k as isize + st.start + m as isize;
                if periodic {
                    pos = pos.rem_euclid(n as isize);
                }
                acc += c * src[(base + pos * stride) as usize];
            }
            *v = acc * scale;
        }
    });
    GridField::new(grid.clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Axis, Grid};
    use std::sync::Arc;

    fn grid1(n: usize, boundary: Boundary) -> Arc<Grid> {
        let max = if boundary == Boundary::Periodic {
            std::f64::consts::TAU
        } else {
            2.0
        };
        Arc::new(Grid::new(vec![Axis::new("x", 0.0, max, n)], boundary).unwrap())
    }

    #[test]
    fn polynomials_are_differentiated_exactly() {
        let g = grid1(9, Boundary::OneSided);
        let c = GridField::constant(g.clone(), 3.0);
        for order in 1..=3 {
            assert!(fd_partial(&c, 0, order).unwrap().data().iter().all(|v| *v == 0.0));
        }
        let lin = GridField::from_fn(g.clone(), |p| p[0]).unwrap();
        assert!(fd_partial(&lin, 0, 1)
            .unwrap()
            .data()
            .iter()
            .all(|v| (v - 1.0).abs() < 1e-12));
        let sq = GridField::from_fn(g.clone(), |p| p[0] * p[0]).unwrap();
        assert!(fd_partial(&sq, 0, 2)
            .unwrap()
            .data()
            .iter()
            .all(|v| (v - 2.0).abs() < 1e-10));
        let cube = GridField::from_fn(g, |p| p[0].powi(3)).unwrap();
        assert!(fd_partial(&cube, 0, 3)
            .unwrap()
            .data()
            .iter()
            .all(|v| (v - 6.0).abs() < 1e-8));
    }

    #[test]
    fn sine_error_bound_and_order() {
        for boundary in [Boundary::OneSided, Boundary::Periodic] {
            let mut errs = Vec::new();
            for n in [41, 81] {
                let g = grid1(n, boundary);
                let h = g.h(0);
                let f = GridField::from_fn(g.clone(), |p| p[0].sin()).unwrap();
                let d = fd_partial(&f, 0, 1).unwrap();
                let err = (0..n)
                    .filter(|&k| boundary == Boundary::Periodic || (k > 0 && k + 1 < n))
                    .map(|k| (d.data()[k] - g.coord(0, k).cos()).abs())
                    .fold(0.0, f64::max);
                assert!(err <= h * h / 6.0, "{err} > {}", h * h / 6.0);
                errs.push(err);
            }
            let order = (errs[0] / errs[1]).log2();
            assert!((1.8..2.2).contains(&order), "order {order}");
        }
    }

    #[test]
    fn edge_stencils_are_second_order() {
        for order in 1..=3 {
            let mut errs = Vec::new();
            for n in [21, 41] {
                let g = grid1(n, Boundary::OneSided);
                let f = GridField::from_fn(g.clone(), |p| p[0].exp()).unwrap();
                let d = fd_partial(&f, 0, order).unwrap();
                let err = (0..n)
                    .map(|k| (d.data()[k] - g.coord(0, k).exp()).abs())
                    .fold(0.0, f64::max);
                errs.push(err);
            }
            let observed = (errs[0] / errs[1]).log2();
            assert!((1.7..2.3).contains(&observed), "order {order}: observed {observed}");
        }
    }

    #[test]
    fn mixed_axes() {
        let g = Arc::new(Grid::tx(7, 0.0, 1.0, 9, -1.0, 1.0).unwrap());
        let f = GridField::from_fn(g, |p| p[0] * p[1]).unwrap();
        let ft = fd_partial(&f, 0, 1).unwrap();
        let ftx = fd_partial(&ft, 1, 1).unwrap();
        assert!(ftx.data().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(fd_partial(&f, 2, 1).is_err());
        assert!(matches!(fd_partial(&f, 0, 4), Err(NumericsError::BadOrder(4))));
    }
}
