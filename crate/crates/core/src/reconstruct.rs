//! The flat condition for reduced sections and their lift back to the
//! cyclic fields by quadrature.

use std::sync::Arc;

use thiserror::Error;

use crate::expr::{Chart, Expr, ExprError, Name, Symbol};
use crate::numerics::{evaluate_on_grid, interior_norms, Exec, Grid, GridField, NumericsError, SampledFields};
use crate::routh::ConnectionData;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReconstructError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("reduced data has no samples for `{0}`")]
    MissingField(String),
    #[error("closed-form data for `{name}` depends on `{symbol}`; only coordinates and parameters are allowed")]
    NotClosedForm { name: String, symbol: String },
    #[error("flat condition fails for `{cyclic}`: max residual {max_residual:.3e} exceeds tolerance {tolerance:.3e}; the reduced section does not lift")]
    Obstruction {
        cyclic: String,
        max_residual: f64,
        tolerance: f64,
    },
    #[error("base point {0:?} is outside the grid")]
    BadBasePoint(Vec<usize>),
    #[error("axis order {0:?} is not a permutation of the grid axes")]
    BadAxisOrder(Vec<usize>),
    #[error("connection and grid disagree: {0}")]
    Mismatch(String),
}

#[derive(Clone, Debug)]
struct ClosedForm {
    shape: Vec<(Name, Expr)>,
    sigma: Vec<Vec<Expr>>,
}

/// A reduced section over a coordinate rectangle: the shape fields `u^b`
/// and the `σ^a_i`, either sampled or in closed form.
#[derive(Clone, Debug)]
pub struct ReducedSectionData {
    samples: SampledFields,
    sigma: Vec<(Name, Vec<String>)>,
    closed: Option<ClosedForm>,
}

impl ReducedSectionData {
    /// Sampled data; `sigma` names the sample of `σ^a_i` for each cyclic
    /// field `a` and base direction `i`. Shape fields are looked up by name.
    pub fn sampled(samples: SampledFields, sigma: Vec<(Name, Vec<String>)>) -> Result<Self, ReconstructError> {
        for (_, names) in &sigma {
            if names.len() != samples.grid().dim() {
                return Err(ReconstructError::Mismatch("one σ sample per base direction".into()));
            }
            for n in names {
                if samples.get(n).is_none() {
                    return Err(ReconstructError::MissingField(n.clone()));
                }
            }
        }
        Ok(ReducedSectionData {
            samples,
            sigma,
            closed: None,
        })
    }

    /// Closed-form data in the coordinates (and parameters with `values`)
    /// of `chart`; derivatives are then taken exactly.
    pub fn closed_form(
        grid: Arc<Grid>,
        chart: &Chart,
        params: &[(&str, f64)],
        shape: &[(&str, Expr)],
        sigma: &[(&str, Vec<Expr>)],
    ) -> Result<Self, ReconstructError> {
        let check = |name: &str, e: &Expr| -> Result<(), ReconstructError> {
            match e
                .symbols()
                .into_iter()
                .find(|s| !matches!(s, Symbol::Coord(_) | Symbol::Param(_)))
            {
                Some(s) => Err(ReconstructError::NotClosedForm {
                    name: name.to_string(),
                    symbol: s.to_string(),
                }),
                None => Ok(()),
            }
        };
        if chart.dim() != grid.dim() {
            return Err(ReconstructError::Mismatch("chart and grid dimensions differ".into()));
        }
        let mut samples = SampledFields::new(grid);
        for (p, v) in params {
            samples.set_param(*p, *v);
        }
        let mut closed = ClosedForm {
            shape: Vec::new(),
            sigma: Vec::new(),
        };
        for (n, e) in shape {
            check(n, e)?;
            let f = evaluate_on_grid(e, &samples, Exec::default())?.field;
            samples.insert(*n, f)?;
            closed.shape.push(((*n).into(), e.clone()));
        }
        let mut sigma_names = Vec::new();
        for (a, comps) in sigma {
            if comps.len() != chart.dim() {
                return Err(ReconstructError::Mismatch("one σ expression per base direction".into()));
            }
            let mut names = Vec::new();
            for (c, e) in chart.coords().iter().zip(comps) {
                let n = format!("sigma_{a}_{}", c.name());
                check(&n, e)?;
                let f = evaluate_on_grid(e, &samples, Exec::default())?.field;
                samples.insert(n.clone(), f)?;
                names.push(n);
            }
            sigma_names.push(((*a).into(), names));
            closed.sigma.push(comps.clone());
        }
        Ok(ReducedSectionData {
            samples,
            sigma: sigma_names,
            closed: Some(closed),
        })
    }

    pub fn samples(&self) -> &SampledFields {
        &self.samples
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.samples.grid()
    }

    pub fn is_closed_form(&self) -> bool {
        self.closed.is_some()
    }

    fn sigma_index(&self, a: &str) -> Result<usize, ReconstructError> {
        self.sigma
            .iter()
            .position(|(c, _)| &**c == a)
            .ok_or_else(|| ReconstructError::MissingField(format!("σ for `{a}`")))
    }

    /// Largest magnitude of the supplied samples, at least 1.
    pub fn scale(&self) -> f64 {
        self.samples
            .names()
            .filter_map(|n| self.samples.get(n))
            .map(GridField::sup)
            .fold(1.0, f64::max)
    }

    /// `A^a_j = σ^a_j + Γ^a_j + Σ_b Γ^a_b u^b_j`, symbolically over the
    /// shape fields with σ as a field symbol.
    fn connection_potential(&self, conn: &ConnectionData, a: &str, j: usize) -> Result<Expr, ReconstructError> {
        let k = self.sigma_index(a)?;
        let sig = Expr::symbol(Symbol::Field(self.sigma[k].1[j].as_str().into()));
        Ok(sig + conn.horizontal_jet(a, j))
    }

    /// Closed-form `A^a_j` in coordinates only.
    fn closed_potential(&self, conn: &ConnectionData, a: &str, j: usize) -> Result<Option<Expr>, ReconstructError> {
        let Some(cf) = &self.closed else { return Ok(None) };
        let k = self.sigma_index(a)?;
        let shape = |s: &Symbol| -> Result<Option<Expr>, ExprError> {
            match s {
                Symbol::Field(f) => Ok(cf.shape.iter().find(|(n, _)| n == f).map(|(_, e)| e.clone())),
                Symbol::Jet { field, index } => match cf.shape.iter().find(|(n, _)| n == field) {
                    Some((_, e)) => {
                        let mut d = e.clone();
                        for c in index {
                            d = d.total_derivative(c)?;
                        }
                        Ok(Some(d))
                    }
                    None => Ok(None),
                },
                _ => Ok(None),
            }
        };
        let a_expr = conn.horizontal_jet(a, j).try_substitute(&shape)?;
        let a_expr = a_expr + &cf.sigma[k][j];
        // a horizontal part that still mentions fields cannot be closed form
        if let Some(s) = a_expr
            .symbols()
            .into_iter()
            .find(|s| !matches!(s, Symbol::Coord(_) | Symbol::Param(_)))
        {
            return Err(ReconstructError::NotClosedForm {
                name: format!("A^{a}_{j}"),
                symbol: s.to_string(),
            });
        }
        Ok(Some(a_expr))
    }

    /// Sampled `A^a_j`; the flag reports finite-difference use.
    pub fn potential(
        &self,
        conn: &ConnectionData,
        a: &str,
        j: usize,
        exec: Exec,
    ) -> Result<(GridField, bool), ReconstructError> {
        if let Some(e) = self.closed_potential(conn, a, j)? {
            return Ok((evaluate_on_grid(&e, &self.samples, exec)?.field, false));
        }
        let e = self.connection_potential(conn, a, j)?;
        let ev = evaluate_on_grid(&e, &self.samples, exec)?;
        Ok((ev.field, ev.fd_limited))
    }
}

/// The residual `∂_j A^a_i − ∂_i A^a_j` for one cyclic field and `i < j`.
#[derive(Clone, Debug)]
pub struct FlatResidual {
    pub cyclic: Name,
    pub i: usize,
    pub j: usize,
    pub field: GridField,
    pub fd_limited: bool,
}

fn check_conn(data: &ReducedSectionData, conn: &ConnectionData) -> Result<(), ReconstructError> {
    let names: Vec<&str> = conn.coords().iter().map(|c| c.name()).collect();
    let axes: Vec<&str> = data.grid().axes().iter().map(|a| a.name.as_str()).collect();
    if names != axes {
        return Err(ReconstructError::Mismatch(format!(
            "coordinates {names:?} vs grid axes {axes:?}"
        )));
    }
    Ok(())
}

pub fn flat_residual(data: &ReducedSectionData, conn: &ConnectionData) -> Result<Vec<FlatResidual>, ReconstructError> {
    flat_residual_with(Exec::default(), data, conn)
}

pub fn flat_residual_with(
    exec: Exec,
    data: &ReducedSectionData,
    conn: &ConnectionData,
) -> Result<Vec<FlatResidual>, ReconstructError> {
    check_conn(data, conn)?;
    let m = data.grid().dim();
    let coords = conn.coords();
    let mut out = Vec::new();
    for a in conn.cyclic_fields() {
        if data.closed.is_some() {
            let pots: Vec<Expr> = (0..m)
                .map(|j| data.closed_potential(conn, a, j).map(|e| e.expect("closed form")))
                .collect::<Result<_, _>>()?;
            for i in 0..m {
                for j in i + 1..m {
                    let r = pots[i].total_derivative(&coords[j])? - pots[j].total_derivative(&coords[i])?;
                    out.push(FlatResidual {
                        cyclic: a.clone(),
                        i,
                        j,
                        field: evaluate_on_grid(&r, data.samples(), exec)?.field,
                        fd_limited: false,
                    });
                }
            }
            continue;
        }
        // sample A^a_j, then differentiate the samples
        let mut pots = SampledFields::new(data.grid().clone());
        for j in 0..m {
            let (f, _) = data.potential(conn, a, j, exec)?;
            pots.insert(format!("A{j}"), f)?;
        }
        let chart_names: Vec<String> = (0..m).map(|j| format!("A{j}")).collect();
        let coord_names: Vec<&str> = coords.iter().map(|c| c.name()).collect();
        let field_names: Vec<&str> = chart_names.iter().map(String::as_str).collect();
        let chart = Chart::new(&coord_names, &field_names)?;
        for i in 0..m {
            for j in i + 1..m {
                let r = Expr::symbol(chart.jet1(&chart_names[i], &coords[j]))
                    - Expr::symbol(chart.jet1(&chart_names[j], &coords[i]));
                let ev = evaluate_on_grid(&r, &pots, exec)?;
                out.push(FlatResidual {
                    cyclic: a.clone(),
                    i,
                    j,
                    field: ev.field,
                    fd_limited: true,
                });
            }
        }
    }
    Ok(out)
}

/// Options for [`lift_section`].
#[derive(Clone, Debug, Default)]
pub struct LiftOptions {
    /// Flat-residual gate; defaults to `10·h_max²·scale`.
    pub tolerance: Option<f64>,
    /// Axis order of the staircase path; defaults to `0, 1, …`.
    pub order: Option<Vec<usize>>,
    pub exec: Exec,
}

/// Default flat-condition tolerance `10·h_max²·scale`.
pub fn default_flat_tolerance(data: &ReducedSectionData) -> f64 {
    let h = data.grid().h_max();
    10.0 * h * h * data.scale()
}

/// A lifted section: the cyclic fields on the grid.
#[derive(Clone, Debug)]
pub struct LiftedSection {
    pub fields: Vec<(Name, GridField)>,
    /// Largest interior flat residual seen by the gate.
    pub flat_max: f64,
    pub tolerance: f64,
}

impl LiftedSection {
    pub fn get(&self, a: &str) -> Option<&GridField> {
        self.fields.iter().find(|(n, _)| &**n == a).map(|(_, f)| f)
    }
}

/// Integrate `A^a_j dx^j` from `base` (a grid multi-index) along the
/// axis-ordered staircase path, after checking the flat condition.
pub fn lift_section(
    data: &ReducedSectionData,
    conn: &ConnectionData,
    base: &[usize],
    initial: &[(&str, f64)],
    opts: &LiftOptions,
) -> Result<LiftedSection, ReconstructError> {
    let grid = data.grid().clone();
    let m = grid.dim();
    if base.len() != m || base.iter().zip(grid.axes()).any(|(b, a)| *b >= a.n) {
        return Err(ReconstructError::BadBasePoint(base.to_vec()));
    }
    let order = opts.order.clone().unwrap_or_else(|| (0..m).collect());
    let mut sorted = order.clone();
    sorted.sort_unstable();
    if sorted != (0..m).collect::<Vec<_>>() {
        return Err(ReconstructError::BadAxisOrder(order));
    }
    let tolerance = opts.tolerance.unwrap_or_else(|| default_flat_tolerance(data));
    let residuals = flat_residual_with(opts.exec, data, conn)?;
    let mut flat_max: f64 = 0.0;
    for r in &residuals {
        let max = interior_norms(&r.field).max;
        flat_max = flat_max.max(max);
        if max > tolerance {
            return Err(ReconstructError::Obstruction {
                cyclic: r.cyclic.to_string(),
                max_residual: max,
                tolerance,
            });
        }
    }
    let mut fields = Vec::new();
    for a in conn.cyclic_fields() {
        let phi0 = initial.iter().find(|(n, _)| *n == &**a).map_or(0.0, |(_, v)| *v);
        let pots: Vec<GridField> = (0..m)
            .map(|j| data.potential(conn, a, j, opts.exec).map(|(f, _)| f))
            .collect::<Result<_, _>>()?;
        let mut total = vec![phi0; grid.len()];
        for (step, &k) in order.iter().enumerate() {
            let done = &order[..step];
            let part = line_integrals(&grid, &pots[k], k, done, base, opts.exec);
            for (t, p) in total.iter_mut().zip(part) {
                *t += p;
            }
        }
        fields.push((a.clone(), GridField::new(grid.clone(), total)?));
    }
    Ok(LiftedSection {
        fields,
        flat_max,
        tolerance,
    })
}

/// `∫_{base_k}^{x_k} A(y) dy_k` with the axes in `done` at `x`, axis `k`
/// varying and every other axis at the base point (trapezoid rule).
fn line_integrals(grid: &Grid, a: &GridField, k: usize, done: &[usize], base: &[usize], exec: Exec) -> Vec<f64> {
    let shape = grid.shape();
    let lines: usize = done.iter().map(|d| shape[d.to_owned()]).product();
    let line_start = |line: usize| {
        let mut idx = base.to_vec();
        let mut rem = line;
        for &d in done.iter().rev() {
            idx[d] = rem % shape[d];
            rem /= shape[d];
        }
        idx[k] = 0;
        idx
    };
    let h = grid.h(k);
    let n = shape[k];
    let b = base[k];
    let stride = grid.strides()[k];
    let cumulative: Vec<Vec<f64>> = exec.map(lines, |line| {
        let start = grid.flat_index(&line_start(line));
        let v = |i: usize| a.data()[start + i * stride];
        let mut c = vec![0.0; n];
        for i in b + 1..n {
            c[i] = c[i - 1] + 0.5 * h * (v(i - 1) + v(i));
        }
        for i in (0..b).rev() {
            c[i] = c[i + 1] - 0.5 * h * (v(i) + v(i + 1));
        }
        c
    });
    let mut out = vec![0.0; grid.len()];
    exec.for_rows(&mut out, grid.row_len(), |start, chunk| {
        for (off, o) in chunk.iter_mut().enumerate() {
            let flat = start + off;
            let mut line = 0;
            for &d in done {
                line = line * shape[d] + grid.index_along(flat, d);
            }
            *o = cumulative[line][grid.index_along(flat, k)];
        }
    });
    out
}

/// `(∂_i φ^a − Γ^a_i − Σ_b Γ^a_b ∂_i u^b) − σ^a_i` for the lifted section:
/// the reduced data recomputed from the lift minus the input.
pub fn projection_residuals(
    data: &ReducedSectionData,
    conn: &ConnectionData,
    lifted: &LiftedSection,
    exec: Exec,
) -> Result<Vec<(Name, usize, GridField)>, ReconstructError> {
    let mut samples = data.samples().clone();
    for (a, f) in &lifted.fields {
        samples.insert(a.to_string(), f.clone())?;
    }
    let mut out = Vec::new();
    for a in conn.cyclic_fields() {
        let k = data.sigma_index(a)?;
        for i in 0..data.grid().dim() {
            let sig = Expr::symbol(Symbol::Field(data.sigma[k].1[i].as_str().into()));
            let e = conn.vertical_jet(a, i) - sig;
            out.push((a.clone(), i, evaluate_on_grid(&e, &samples, exec)?.field));
        }
    }
    Ok(out)
}
