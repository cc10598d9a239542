use std::sync::Arc;

use routh::numerics::kdv::kdv_soliton_field;
use routh::numerics::{fd_partial_with, interior_norms, pairwise_sum, Axis, Boundary, Exec, Grid, GridField};

fn wave(g: Arc<Grid>) -> GridField {
    GridField::from_fn(g, |p| (p[0] + 2.0 * p[1]).sin() * (0.5 * p[2]).cos()).unwrap()
}

#[test]
fn mixed_partials_converge_at_second_order_in_three_dimensions() {
    let g = Arc::new(
        Grid::new(
            vec![
                Axis::new("t", 0.0, 1.0, 17),
                Axis::new("x", 0.0, 1.0, 17),
                Axis::new("y", 0.0, 2.0, 9),
            ],
            Boundary::OneSided,
        )
        .unwrap(),
    );
    let err = |g: Arc<Grid>| {
        let f = wave(g.clone());
        let ft = fd_partial_with(Exec::default(), &f, 0, 1).unwrap();
        let ftx = fd_partial_with(Exec::default(), &ft, 1, 1).unwrap();
        let exact = GridField::from_fn(g, |p| -2.0 * (p[0] + 2.0 * p[1]).sin() * (0.5 * p[2]).cos()).unwrap();
        ftx.sub(&exact).unwrap().sup()
    };
    let (coarse, fine) = (err(g.clone()), err(Arc::new(g.refined())));
    let order = (coarse / fine).log2();
    assert!((1.8..=2.2).contains(&order), "order {order}");
}

#[test]
fn parallel_and_sequential_agree_bitwise() {
    let g = Arc::new(Grid::tx(65, 0.0, 3.0, 257, -10.0, 10.0).unwrap());
    let s = kdv_soliton_field(1.3, -1.0, g).unwrap();
    for order in 1..=3 {
        let a = fd_partial_with(Exec::Sequential, &s.rho, 1, order).unwrap();
        let b = fd_partial_with(Exec::default(), &s.rho, 1, order).unwrap();
        assert_eq!(a.data(), b.data());
        assert_eq!(interior_norms(&a), interior_norms(&b));
    }
}

#[test]
fn pairwise_sum_is_accurate() {
    let v: Vec<f64> = (0..100_000).map(|i| 0.1 + (i % 7) as f64 * 1e-9).collect();
    let exact: f64 = 0.1 * 100_000.0 + (0..100_000).map(|i| (i % 7) as f64).sum::<f64>() * 1e-9;
    assert!((pairwise_sum(&v) - exact).abs() < 1e-9);
}

#[test]
fn soliton_derivative_fields_match_differences() {
    let g = Arc::new(Grid::tx(81, 0.0, 2.0, 401, -10.0, 10.0).unwrap());
    let s = kdv_soliton_field(2.0, -2.0, g).unwrap();
    let dx = fd_partial_with(Exec::default(), &s.rho, 1, 1).unwrap();
    let dt = fd_partial_with(Exec::default(), &s.rho, 0, 1).unwrap();
    let dxxx = fd_partial_with(Exec::default(), &s.rho, 1, 3).unwrap();
    assert!(dx.sub(&s.rho_x).unwrap().sup() < 1e-2);
    assert!(dt.sub(&s.rho_t).unwrap().sup() < 1e-2);
    assert!(dxxx.sub(&s.rho_xxx).unwrap().sup() < 5e-2);
}
