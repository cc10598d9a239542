use super::GridField;

/// Boundary layers excluded from residual norms.
pub const BOUNDARY_LAYERS: usize = 2;

/// Sum by recursive halving; the result depends only on the input order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Max and discrete L2 norm (`sqrt(Π h · Σ v²)`) over interior points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub max: f64,
    pub l2: f64,
}

pub fn interior_norms(f: &GridField) -> Norms {
    let g = f.grid();
    let interior: Vec<f64> = f
        .data()
        .iter()
        .enumerate()
        .filter(|(i, _)| g.is_interior(*i, BOUNDARY_LAYERS))
        .map(|(_, v)| *v)
        .collect();
    let max = interior.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let squares: Vec<f64> = interior.iter().map(|v| v * v).collect();
    Norms {
        max,
        l2: (g.cell_volume() * pairwise_sum(&squares)).sqrt(),
    }
}
