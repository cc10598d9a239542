//! The KdV soliton and the end-to-end reduction/reconstruction check.
//!
//! The traveling wave `ρ = (c/2) sech²(√c (x − ct − x0)/2)` solves
//! `ρ_t + 6ρρ_x + ρ_xxx = 0`. The pipeline feeds it through the reduced
//! equations of the shipped KdV model, lifts it back to `φ` and checks the
//! unreduced equations and the momentum level set, at two resolutions.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::cli::{parse_model_file, ModelFileError};
use crate::expr::{Expr, ExprError};
use crate::model::{euler_lagrange, legendre_multipliers};
use crate::reconstruct::{
    flat_residual_with, lift_section, projection_residuals, LiftOptions, ReconstructError, ReducedSectionData,
};
use crate::routh::{reduce_model, reduced_euler_lagrange, ConnectionData, RouthError};
use crate::symmetry::momentum_constraint;

use super::{evaluate_on_grid, interior_norms, Exec, Grid, GridField, Norms, NumericsError, SampledFields};

/// The shipped model the pipeline reduces.
pub const KDV_MODEL: &str = include_str!("../../models/kdv.model");

/// Minimum grid points across one soliton width `2/√c`.
pub const POINTS_PER_WIDTH: f64 = 8.0;
/// Gate for stages whose inputs are all in closed form.
pub const ANALYTIC_TOL: f64 = 1e-10;
/// Accepted window for the observed convergence order.
pub const ORDER_WINDOW: (f64, f64) = (1.8, 2.2);
/// Stage tolerance factor: `50·h²·scale`.
pub const STAGE_FACTOR: f64 = 50.0;
/// Flat-condition and lift factor: `10·h²·scale`.
pub const FLAT_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KdvSoliton {
    pub c: f64,
    pub x0: f64,
}

impl KdvSoliton {
    pub fn new(c: f64, x0: f64) -> Result<Self, PipelineError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(PipelineError::Config(format!("wave speed must be positive, got {c}")));
        }
        if !x0.is_finite() {
            return Err(PipelineError::Config("x0 must be finite".into()));
        }
        Ok(KdvSoliton { c, x0 })
    }

    pub fn width(&self) -> f64 {
        2.0 / self.c.sqrt()
    }

    fn sech_tanh(&self, t: f64, x: f64) -> (f64, f64) {
        let xi = 0.5 * self.c.sqrt() * (x - self.c * t - self.x0);
        (1.0 / xi.cosh(), xi.tanh())
    }

    pub fn rho(&self, t: f64, x: f64) -> f64 {
        let (s, _) = self.sech_tanh(t, x);
        0.5 * self.c * s * s
    }

    pub fn rho_x(&self, t: f64, x: f64) -> f64 {
        let (s, th) = self.sech_tanh(t, x);
        -0.5 * self.c.powf(1.5) * s * s * th
    }

    pub fn rho_t(&self, t: f64, x: f64) -> f64 {
        -self.c * self.rho_x(t, x)
    }

    pub fn rho_xx(&self, t: f64, x: f64) -> f64 {
        let (s, _) = self.sech_tanh(t, x);
        -0.25 * self.c * self.c * s * s * (3.0 * s * s - 2.0)
    }

    pub fn rho_xxx(&self, t: f64, x: f64) -> f64 {
        let (s, th) = self.sech_tanh(t, x);
        -0.5 * self.c.powf(2.5) * s * s * th * (1.0 - 3.0 * s * s)
    }

    /// A potential with `φ_x = ρ` and `φ_t = −cρ`.
    pub fn phi(&self, t: f64, x: f64) -> f64 {
        self.c.sqrt() * self.sech_tanh(t, x).1
    }
}

/// `ρ` and its closed-form derivatives on a `(t, x)` grid.
#[derive(Clone, Debug)]
pub struct SolitonFields {
    pub rho: GridField,
    pub rho_t: GridField,
    pub rho_x: GridField,
    pub rho_xx: GridField,
    pub rho_xxx: GridField,
}

fn tx_axes(grid: &Grid) -> Result<(usize, usize), NumericsError> {
    match (grid.axis_index("t"), grid.axis_index("x"), grid.dim()) {
        (Some(t), Some(x), 2) => Ok((t, x)),
        _ => Err(NumericsError::BadGrid(
            "the soliton lives on a grid with axes `t` and `x`".into(),
        )),
    }
}

pub fn kdv_soliton_field(c: f64, x0: f64, grid: Arc<Grid>) -> Result<SolitonFields, PipelineError> {
    soliton_fields(&KdvSoliton::new(c, x0)?, grid, Exec::default())
}

fn soliton_fields(s: &KdvSoliton, grid: Arc<Grid>, exec: Exec) -> Result<SolitonFields, PipelineError> {
    let (it, ix) = tx_axes(&grid)?;
    let sample = |f: fn(&KdvSoliton, f64, f64) -> f64| {
        let s = *s;
        GridField::from_fn_with(exec, grid.clone(), move |p| f(&s, p[it], p[ix]))
    };
    Ok(SolitonFields {
        rho: sample(KdvSoliton::rho)?,
        rho_t: sample(KdvSoliton::rho_t)?,
        rho_x: sample(KdvSoliton::rho_x)?,
        rho_xx: sample(KdvSoliton::rho_xx)?,
        rho_xxx: sample(KdvSoliton::rho_xxx)?,
    })
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub c: f64,
    pub nx: usize,
    pub nt: usize,
    pub xmin: f64,
    pub xmax: f64,
    pub tmax: f64,
    /// Soliton offset; defaults to centering the trajectory in the window.
    pub x0: Option<f64>,
    /// Absolute tolerance replacing the `h²`-scaled default of every
    /// finite-difference-limited stage.
    pub tol: Option<f64>,
    pub exec: Exec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            c: 1.0,
            nx: 512,
            nt: 256,
            xmin: -20.0,
            xmax: 20.0,
            tmax: 10.0,
            x0: None,
            tol: None,
            exec: Exec::default(),
        }
    }
}

impl PipelineConfig {
    pub fn x0(&self) -> f64 {
        self.x0
            .unwrap_or(0.5 * (self.xmin + self.xmax) - 0.5 * self.c * self.tmax)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub stage: String,
    pub quantity: String,
    pub max_norm: f64,
    pub l2_norm: f64,
    pub h: f64,
    /// `log2` of the coarse/fine max-norm ratio, on the fine row of a
    /// finite-difference-limited quantity.
    pub observed_order: Option<f64>,
    pub fd_limited: bool,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

pub const CSV_HEADER: &str = "stage,quantity,max_norm,l2_norm,h,observed_order";

impl Report {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| !r.passed)
    }

    pub fn find(&self, stage: &str, quantity: &str) -> impl Iterator<Item = &ReportRow> {
        let (stage, quantity) = (stage.to_string(), quantity.to_string());
        self.rows
            .iter()
            .filter(move |r| r.stage == stage && r.quantity == quantity)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER.split(',')).expect("in-memory write");
        for r in &self.rows {
            let order = r.observed_order.map_or("NaN".to_string(), |o| format!("{o:e}"));
            w.write_record([
                r.stage.clone(),
                r.quantity.clone(),
                format!("{:e}", r.max_norm),
                format!("{:e}", r.l2_norm),
                format!("{:e}", r.h),
                order,
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    /// The first failing row as an error.
    pub fn check(&self) -> Result<(), PipelineError> {
        match self.failures().next() {
            None => Ok(()),
            Some(r) => Err(PipelineError::Tolerance {
                stage: r.stage.clone(),
                quantity: r.quantity.clone(),
                norm: r.max_norm,
                tol: r.tolerance,
                order: r.observed_order,
            }),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(
        "grid under-resolves the soliton: {points:.1} points per width along `{axis}`, at least {} needed",
        POINTS_PER_WIDTH
    )]
    Unresolved { axis: String, points: f64 },
    #[error("{stage}/{quantity}: max norm {norm:e} against tolerance {tol:e}{}", fmt_order(*order))]
    Tolerance {
        stage: String,
        quantity: String,
        norm: f64,
        tol: f64,
        order: Option<f64>,
    },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
    #[error(transparent)]
    Routh(#[from] RouthError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("shipped model: {0}")]
    Model(#[from] ModelFileError),
}

fn fmt_order(order: Option<f64>) -> String {
    order.map_or(String::new(), |o| format!(", observed order {o:.3}"))
}

/// One measured quantity at one resolution.
struct Measure {
    stage: &'static str,
    quantity: String,
    norms: Norms,
    fd_limited: bool,
    flat_gate: bool,
}

struct Level {
    h: f64,
    scale: f64,
    measures: Vec<Measure>,
}

/// Symbolic pieces of the KdV model used by every resolution.
struct Symbolic {
    unreduced: Vec<(String, Expr)>,
    reduced: Vec<(String, Expr)>,
    constraints: Vec<(String, Expr)>,
    divergence: Expr,
    closedness: Expr,
    connection: ConnectionData,
    sigma: String,
    rho: String,
}

fn symbolic() -> Result<Symbolic, PipelineError> {
    let spec = parse_model_file(KDV_MODEL)?;
    let (model, action, mu) = (&spec.model, &spec.action, &spec.momentum);
    let connection = ConnectionData::flat(model, action);
    let rm = reduce_model(model, action, &connection, mu, &spec.names)?;
    let reduced = reduced_euler_lagrange(&rm)?;
    let unreduced = euler_lagrange(model)?;
    let p = legendre_multipliers(model);
    let divergence = Expr::total_divergence(p.for_field("phi"), model.coords())?;
    let constraints = momentum_constraint(model, action, mu)
        .into_iter()
        .map(|c| {
            let name = if c.index == 0 { "pt_minus_mu2" } else { "px_plus_mu1" };
            (name.to_string(), c.equation)
        })
        .collect();
    let named = |eqs: &crate::model::ELSystem| -> Vec<(String, Expr)> {
        eqs.iter().map(|(n, e)| (format!("eq_{n}"), e.clone())).collect()
    };
    let eq_phi = unreduced.get("phi").cloned().unwrap_or_else(Expr::zero);
    let sym = Symbolic {
        unreduced: named(&unreduced),
        reduced: named(&reduced),
        constraints,
        closedness: mu.divergence("phi")?,
        connection,
        sigma: rm.sigma("phi", 0).to_string(),
        rho: rm.sigma("phi", 1).to_string(),
        divergence: divergence.clone(),
    };
    // the divergence of the current is the φ equation itself
    debug_assert_eq!(divergence, eq_phi);
    Ok(sym)
}

fn check_resolution(cfg: &PipelineConfig, sol: &KdvSoliton) -> Result<(), PipelineError> {
    let hx = (cfg.xmax - cfg.xmin) / (cfg.nx as f64 - 1.0);
    let ht = cfg.tmax / (cfg.nt as f64 - 1.0);
    // the profile moves c·h_t per time step; ask for the same resolution in t
    let checks = [("x", sol.width() / hx), ("t", sol.width() / (sol.c * ht))];
    for (axis, points) in checks {
        if points < POINTS_PER_WIDTH {
            return Err(PipelineError::Unresolved {
                axis: axis.to_string(),
                points,
            });
        }
    }
    Ok(())
}

fn level(sym: &Symbolic, sol: &KdvSoliton, grid: Arc<Grid>, exec: Exec) -> Result<Level, PipelineError> {
    let f = soliton_fields(sol, grid.clone(), exec)?;
    let c = sol.c;
    let lin = |a: &GridField, k: f64| a.map(|v| k * v);
    // σ = cρ − 6ρ² − 2ρ_xx and its closed-form x-derivative
    let sigma = f.rho.zip_with(&f.rho_xx, |r, rxx| c * r - 6.0 * r * r - 2.0 * rxx)?;
    let sigma_x = f
        .rho
        .zip_with(&f.rho_x, |r, rx| c * rx - 12.0 * r * rx)?
        .zip_with(&f.rho_xxx, |v, rxxx| v - 2.0 * rxxx)?;
    let mu1 = lin(&f.rho, -0.5 * c)?;
    let mu2 = lin(&f.rho, 0.5)?;

    let mut measures = Vec::new();
    let mut push = |stage: &'static str, quantity: &str, field: &GridField, fd_limited: bool, flat_gate: bool| {
        measures.push(Measure {
            stage,
            quantity: quantity.to_string(),
            norms: interior_norms(field),
            fd_limited,
            flat_gate,
        });
    };

    // the soliton itself
    let kdv = |rho_t: &GridField, rho_x: &GridField, rho_xxx: &GridField| -> Result<GridField, NumericsError> {
        f.rho.zip_with(rho_x, |r, rx| 6.0 * r * rx)?.add(rho_t)?.add(rho_xxx)
    };
    push(
        "soliton",
        "kdv_analytic",
        &kdv(&f.rho_t, &f.rho_x, &f.rho_xxx)?,
        false,
        false,
    );
    let (it, ix) = tx_axes(&grid)?;
    let fd_t = super::fd_partial_with(exec, &f.rho, it, 1)?;
    let fd_x = super::fd_partial_with(exec, &f.rho, ix, 1)?;
    let fd_xxx = super::fd_partial_with(exec, &f.rho, ix, 3)?;
    push("soliton", "kdv_fd", &kdv(&fd_t, &fd_x, &fd_xxx)?, true, false);

    // reduced equations: underived samples only, then with closed-form jets
    let mut data = SampledFields::new(grid.clone());
    data.insert("psi", f.rho_x.clone())?;
    data.insert(sym.sigma.clone(), sigma.clone())?;
    data.insert(sym.rho.clone(), f.rho.clone())?;
    data.insert("mu1", mu1.clone())?;
    data.insert("mu2", mu2.clone())?;
    for (name, e) in &sym.reduced {
        let ev = evaluate_on_grid(e, &data, exec)?;
        push("reduced", &format!("{name}_fd"), &ev.field, ev.fd_limited, false);
    }
    let mut exact = data.clone();
    exact.insert(format!("{}_x", sym.rho), f.rho_x.clone())?;
    exact.insert(format!("{}_t", sym.rho), f.rho_t.clone())?;
    exact.insert("psi_x", f.rho_xx.clone())?;
    for (name, e) in &sym.reduced {
        let ev = evaluate_on_grid(e, &exact, exec)?;
        push("reduced", &format!("{name}_analytic"), &ev.field, ev.fd_limited, false);
    }

    // closedness of the chosen momentum
    let ev = evaluate_on_grid(&sym.closedness, &data, exec)?;
    push("closedness", "divergence_fd", &ev.field, ev.fd_limited, false);
    let mut mu_exact = data.clone();
    mu_exact.insert("mu1_x", lin(&f.rho_x, -0.5 * c)?)?;
    mu_exact.insert("mu2_t", lin(&f.rho_t, 0.5)?)?;
    let ev = evaluate_on_grid(&sym.closedness, &mu_exact, exec)?;
    push("closedness", "divergence_analytic", &ev.field, ev.fd_limited, false);

    // flat condition and lift
    let section = ReducedSectionData::sampled(
        data.clone(),
        vec![("phi".into(), vec![sym.sigma.clone(), sym.rho.clone()])],
    )?;
    let scale = section.scale();
    for r in flat_residual_with(exec, &section, &sym.connection)? {
        push("flat", "residual", &r.field, r.fd_limited, true);
    }
    let base = vec![0, 0];
    let phi0 = sol.phi(grid.coord(it, 0), grid.coord(ix, 0));
    let opts = |order: Vec<usize>| LiftOptions {
        tolerance: Some(f64::INFINITY),
        order: Some(order),
        exec,
    };
    let lifted = lift_section(&section, &sym.connection, &base, &[("phi", phi0)], &opts(vec![it, ix]))?;
    let other = lift_section(&section, &sym.connection, &base, &[("phi", phi0)], &opts(vec![ix, it]))?;
    let phi = lifted.get("phi").expect("lifted phi").clone();
    let s = *sol;
    let phi_exact = GridField::from_fn_with(exec, grid.clone(), move |p| s.phi(p[it], p[ix]))?;
    push("lift", "phi_error", &phi.sub(&phi_exact)?, true, true);
    for (_, i, r) in projection_residuals(&section, &sym.connection, &lifted, exec)? {
        let q = format!("projection_{}", grid.axes()[i].name);
        push("lift", &q, &r, true, true);
    }
    let path = other.get("phi").expect("lifted phi").sub(&phi)?;
    push("lift", "path_independence", &path, true, true);

    // unreduced equations and momentum on the lifted section
    let mut up = SampledFields::new(grid.clone());
    up.insert("phi", phi)?;
    up.insert("psi", f.rho_x.clone())?;
    up.insert("mu1", mu1)?;
    up.insert("mu2", mu2)?;
    for (name, e) in &sym.unreduced {
        let ev = evaluate_on_grid(e, &up, exec)?;
        push("unreduced", &format!("{name}_fd"), &ev.field, ev.fd_limited, false);
    }
    let mut ua = SampledFields::new(grid.clone());
    ua.insert("psi", f.rho_x.clone())?;
    ua.insert("phi_t", sigma)?;
    ua.insert("phi_x", f.rho.clone())?;
    ua.insert("phi_tx", sigma_x)?;
    ua.insert("phi_xx", f.rho_x.clone())?;
    ua.insert("psi_x", f.rho_xx.clone())?;
    ua.insert("psi_xx", f.rho_xxx.clone())?;
    for (name, e) in &sym.unreduced {
        let ev = evaluate_on_grid(e, &ua, exec)?;
        push(
            "unreduced",
            &format!("{name}_analytic"),
            &ev.field,
            ev.fd_limited,
            false,
        );
    }
    for (name, e) in &sym.constraints {
        let ev = evaluate_on_grid(e, &up, exec)?;
        push("momentum", name, &ev.field, ev.fd_limited, false);
    }
    let ev = evaluate_on_grid(&sym.divergence, &up, exec)?;
    push("momentum", "divergence", &ev.field, ev.fd_limited, false);
    let eq_phi = sym
        .unreduced
        .iter()
        .find(|(n, _)| n == "eq_phi")
        .map(|(_, e)| e.clone())
        .unwrap_or_else(Expr::zero);
    let diff = &sym.divergence - &eq_phi;
    let ev = evaluate_on_grid(&diff, &up, exec)?;
    push("momentum", "divergence_minus_eq_phi", &ev.field, ev.fd_limited, false);

    Ok(Level {
        h: grid.h_max(),
        scale,
        measures,
    })
}

fn tolerance(cfg: &PipelineConfig, lvl: &Level, m: &Measure) -> f64 {
    if !m.fd_limited {
        return ANALYTIC_TOL;
    }
    if let Some(t) = cfg.tol {
        return t;
    }
    let factor = if m.flat_gate { FLAT_FACTOR } else { STAGE_FACTOR };
    factor * lvl.h * lvl.h * lvl.scale
}

/// Run every stage on the configured grid and on its refinement.
pub fn verify_kdv_pipeline(cfg: &PipelineConfig) -> Result<Report, PipelineError> {
    let sol = KdvSoliton::new(cfg.c, cfg.x0())?;
    if !(cfg.tmax.is_finite() && cfg.tmax > 0.0) {
        return Err(PipelineError::Config("tmax must be positive".into()));
    }
    if let Some(t) = cfg.tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(PipelineError::Config("tol must be positive".into()));
        }
    }
    let coarse = Arc::new(Grid::tx(cfg.nt, 0.0, cfg.tmax, cfg.nx, cfg.xmin, cfg.xmax)?);
    check_resolution(cfg, &sol)?;
    let fine = Arc::new(coarse.refined());
    let sym = symbolic()?;
    let lo = level(&sym, &sol, coarse, cfg.exec)?;
    let hi = level(&sym, &sol, fine, cfg.exec)?;

    let mut rows = Vec::new();
    for (a, b) in lo.measures.iter().zip(&hi.measures) {
        let tol_a = tolerance(cfg, &lo, a);
        let tol_b = tolerance(cfg, &hi, b);
        let order = (b.fd_limited && a.norms.max > ANALYTIC_TOL && b.norms.max > 0.0)
            .then(|| (a.norms.max / b.norms.max).log2());
        let order_ok = order.is_none_or(|o| (ORDER_WINDOW.0..=ORDER_WINDOW.1).contains(&o));
        rows.push(ReportRow {
            stage: a.stage.to_string(),
            quantity: a.quantity.clone(),
            max_norm: a.norms.max,
            l2_norm: a.norms.l2,
            h: lo.h,
            observed_order: None,
            fd_limited: a.fd_limited,
            tolerance: tol_a,
            passed: a.norms.max <= tol_a,
        });
        rows.push(ReportRow {
            stage: b.stage.to_string(),
            quantity: b.quantity.clone(),
            max_norm: b.norms.max,
            l2_norm: b.norms.l2,
            h: hi.h,
            observed_order: order,
            fd_limited: b.fd_limited,
            tolerance: tol_b,
            passed: b.norms.max <= tol_b && order_ok,
        });
    }
    Ok(Report { rows })
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            writeln!(
                f,
                "{:<4} {:<11} {:<26} max {:>10.3e}  tol {:>9.2e}  h {:.4}{}",
                if r.passed { "ok" } else { "FAIL" },
                r.stage,
                r.quantity,
                r.max_norm,
                r.tolerance,
                r.h,
                r.observed_order.map_or(String::new(), |o| format!("  order {o:.3}")),
            )?;
        }
        Ok(())
    }
}

/// `k²/2 · sech²(k(x − k²t − x0)/2)`, the soliton with `c = k²`, as an
/// expression in a chart with coordinates `t, x` and parameters `k, x0`.
pub fn soliton_expr(chart: &crate::expr::Chart) -> Result<Expr, ExprError> {
    crate::expr::parse_expr("k^2/2*sech(k*(x - k^2*t - x0)/2)^2", chart)
}
