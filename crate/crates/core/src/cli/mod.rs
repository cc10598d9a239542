//! Model files and the `routh` command line.

mod model_file;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};

pub use model_file::{parse_model_file, ModelFileError, ModelSpec};

use crate::model::{euler_lagrange, legendre_multipliers};
use crate::numerics::kdv::{verify_kdv_pipeline, PipelineConfig, PipelineError};
use crate::numerics::{interior_norms, Axis, Boundary, Exec, Grid, GridField, SampledFields};
use crate::reconstruct::{
    flat_residual_with, lift_section, projection_residuals, LiftOptions, ReconstructError, ReducedSectionData,
};
use crate::routh::{reduce_model, reduced_euler_lagrange, routhian, ConnectionData};
use crate::symmetry::{check_momentum_closed, momentum_constraint, momentum_map};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_TOLERANCE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "routh",
    version,
    about = "Routh reduction for first-order field theories with cyclic fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the Euler–Lagrange equations and Legendre multipliers.
    Derive { model: PathBuf },
    /// Print the momentum map, the level-set constraints and closedness.
    Momentum { model: PathBuf },
    /// Print the Routhian, the reduced Lagrangian, the gyroscopic force and
    /// the reduced equations.
    Reduce {
        model: PathBuf,
        /// Use the flat connection instead of the one in the model file.
        #[arg(long)]
        flat: bool,
    },
    /// Check the flat condition on sampled reduced data and lift it.
    Reconstruct {
        model: PathBuf,
        /// CSV with one column per coordinate, shape field and σ.
        #[arg(long)]
        data: PathBuf,
        /// Where to write the lifted cyclic fields.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Flat-condition tolerance (default 10·h²·scale).
        #[arg(long)]
        tol: Option<f64>,
        /// Numeric parameter value, `name=value`.
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        #[arg(long)]
        flat: bool,
    },
    /// Run the KdV soliton reduction/reconstruction check.
    VerifyKdv {
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 512)]
        nx: usize,
        #[arg(long, default_value_t = 256)]
        nt: usize,
        #[arg(long, default_value_t = -20.0, allow_negative_numbers = true)]
        xmin: f64,
        #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
        xmax: f64,
        #[arg(long, default_value_t = 10.0)]
        tmax: f64,
        /// Absolute tolerance for every finite-difference stage.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        x0: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Run without the thread pool.
        #[arg(long)]
        sequential: bool,
    },
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected name=value")?;
    let v: f64 = v.trim().parse().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

/// A failed command: message and exit code.
struct Failure(i32, String);

fn invalid(e: impl Display) -> Failure {
    Failure(EXIT_INVALID, e.to_string())
}

type Out<'a> = &'a mut dyn Write;

fn io(e: std::io::Error) -> Failure {
    invalid(format!("write failed: {e}"))
}

/// Run the command line `args` (including the program name), writing to
/// `out`/`err`; returns the process exit code.
pub fn run_command<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn load(path: &Path) -> Result<ModelSpec, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_model_file(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn dispatch(cmd: Command, out: Out) -> Result<i32, Failure> {
    match cmd {
        Command::Derive { model } => derive(&load(&model)?, out),
        Command::Momentum { model } => momentum(&load(&model)?, out),
        Command::Reduce { model, flat } => reduce(&load(&model)?, flat, out),
        Command::Reconstruct {
            model,
            data,
            out: dest,
            tol,
            params,
            flat,
        } => reconstruct(&load(&model)?, &data, dest.as_deref(), tol, &params, flat, out),
        Command::VerifyKdv {
            c,
            nx,
            nt,
            xmin,
            xmax,
            tmax,
            tol,
            x0,
            out: dest,
            sequential,
        } => {
            let cfg = PipelineConfig {
                c,
                nx,
                nt,
                xmin,
                xmax,
                tmax,
                x0,
                tol,
                exec: if sequential { Exec::Sequential } else { Exec::default() },
            };
            verify(&cfg, &dest, out)
        }
    }
}

fn derive(spec: &ModelSpec, out: Out) -> Result<i32, Failure> {
    let el = euler_lagrange(&spec.model).map_err(invalid)?;
    w(out, "Euler-Lagrange equations:")?;
    for (a, e) in el.iter() {
        w(out, format!("  E[{a}] = {e}"))?;
    }
    w(out, "Legendre multipliers:")?;
    let coords = spec.model.coords();
    for (a, ps) in legendre_multipliers(&spec.model).iter() {
        for (c, p) in coords.iter().zip(ps) {
            w(out, format!("  p[{a}]^{} = {p}", c.name()))?;
        }
    }
    Ok(EXIT_PASS)
}

fn w(out: Out, line: impl Display) -> Result<(), Failure> {
    writeln!(out, "{line}").map_err(io)
}

fn momentum(spec: &ModelSpec, out: Out) -> Result<i32, Failure> {
    if spec.action.cyclic_fields().is_empty() {
        w(out, "no cyclic fields declared")?;
        return Ok(EXIT_PASS);
    }
    w(out, "momentum map:")?;
    for (a, j) in momentum_map(&spec.model, &spec.action) {
        w(out, format!("  J[{a}] = {j}"))?;
    }
    w(out, "momentum value:")?;
    for line in spec.momentum.to_string().lines() {
        w(out, format!("  {line}"))?;
    }
    w(out, "constraints:")?;
    let coords = spec.model.coords();
    for c in momentum_constraint(&spec.model, &spec.action, &spec.momentum) {
        w(
            out,
            format!("  [{}^{}] {} = 0", c.field, coords[c.index].name(), c.equation),
        )?;
    }
    let verdict = check_momentum_closed(&spec.momentum).map_err(invalid)?;
    w(out, format!("closedness: {verdict}"))?;
    Ok(EXIT_PASS)
}

fn connection(spec: &ModelSpec, flat: bool) -> ConnectionData {
    if flat {
        ConnectionData::flat(&spec.model, &spec.action)
    } else {
        spec.connection.clone()
    }
}

fn reduce(spec: &ModelSpec, flat: bool, out: Out) -> Result<i32, Failure> {
    let conn = connection(spec, flat);
    let (m, a, mu) = (&spec.model, &spec.action, &spec.momentum);
    let r = routhian(m, a, &conn, mu).map_err(invalid)?;
    let rm = reduce_model(m, a, &conn, mu, &spec.names).map_err(invalid)?;
    w(
        out,
        format!("connection: {}", if conn.is_flat() { "flat" } else { "general" }),
    )?;
    w(out, format!("closedness: {}", rm.closedness()))?;
    w(out, "Routhian:")?;
    w(out, format!("  R = {r}"))?;
    w(out, "reduced Lagrangian:")?;
    w(out, format!("  R_red = {}", rm.lagrangian()))?;
    w(out, "reduced fields:")?;
    for (cyc, names) in rm.sigma_fields() {
        for (c, n) in m.coords().iter().zip(names) {
            w(out, format!("  {n} = sigma[{cyc}]_{}", c.name()))?;
        }
    }
    let g = rm.gyroscopic();
    w(out, "gyroscopic force:")?;
    w(out, format!("  d(omega_mu) = {}", g.form))?;
    if g.force.is_zero() {
        w(out, "  F = 0")?;
    }
    for (label, e) in g.force.entries() {
        w(out, format!("  {label} = {e}"))?;
    }
    let el = reduced_euler_lagrange(&rm).map_err(invalid)?;
    w(out, "reduced Euler-Lagrange equations:")?;
    for (f, e) in el.iter() {
        w(out, format!("  E[{f}] = {e}"))?;
    }
    Ok(EXIT_PASS)
}

/// Samples from a CSV with one column per coordinate; rows may come in
/// any order but must cover a uniform rectangular grid exactly once.
pub fn read_grid_csv(text: &str, coords: &[&str]) -> Result<SampledFields, String> {
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = rd
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let coord_cols: Vec<usize> = coords
        .iter()
        .map(|c| col(c).ok_or_else(|| format!("data has no column for coordinate `{c}`")))
        .collect::<Result<_, _>>()?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let vals = rec
            .iter()
            .enumerate()
            .map(|(j, v)| {
                v.parse::<f64>()
                    .map_err(|_| format!("data row {}: `{v}` in column `{}` is not a number", i + 2, headers[j]))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(vals);
    }
    let mut axes = Vec::new();
    let mut levels: Vec<Vec<f64>> = Vec::new();
    for (c, &k) in coords.iter().zip(&coord_cols) {
        let mut v: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        if v.len() < 2 {
            return Err(format!("coordinate `{c}` takes fewer than two values"));
        }
        let (lo, hi) = (v[0], v[v.len() - 1]);
        let h = (hi - lo) / (v.len() - 1) as f64;
        if v.iter()
            .enumerate()
            .any(|(i, x)| (x - (lo + i as f64 * h)).abs() > 1e-9 * (hi - lo))
        {
            return Err(format!("coordinate `{c}` is not uniformly spaced"));
        }
        axes.push(Axis::new(*c, lo, hi, v.len()));
        levels.push(v);
    }
    let grid = Arc::new(Grid::new(axes, Boundary::OneSided).map_err(|e| e.to_string())?);
    if rows.len() != grid.len() {
        return Err(format!("{} data rows for a grid of {} points", rows.len(), grid.len()));
    }
    let mut slot = vec![usize::MAX; grid.len()];
    for (r, row) in rows.iter().enumerate() {
        let idx: Vec<usize> = coord_cols
            .iter()
            .zip(&levels)
            .map(|(&k, lv)| lv.binary_search_by(|x| x.total_cmp(&row[k])).expect("value is a level"))
            .collect();
        let f = grid.flat_index(&idx);
        if slot[f] != usize::MAX {
            return Err(format!(
                "data rows {} and {} sit at the same grid point",
                slot[f] + 2,
                r + 2
            ));
        }
        slot[f] = r;
    }
    let mut samples = SampledFields::new(grid.clone());
    for (j, h) in headers.iter().enumerate() {
        if coord_cols.contains(&j) {
            continue;
        }
        let data = slot.iter().map(|&r| rows[r][j]).collect();
        let f = GridField::new(grid.clone(), data).map_err(|e| format!("column `{h}`: {e}"))?;
        samples.insert(h.clone(), f).map_err(|e| e.to_string())?;
    }
    Ok(samples)
}

fn fmt_num(v: f64) -> String {
    format!("{v:.6e}")
}

#[allow(clippy::too_many_arguments)]
fn reconstruct(
    spec: &ModelSpec,
    data: &Path,
    dest: Option<&Path>,
    tol: Option<f64>,
    params: &[(String, f64)],
    flat: bool,
    out: Out,
) -> Result<i32, Failure> {
    if spec.action.cyclic_fields().is_empty() {
        return Err(invalid("the model declares no cyclic fields"));
    }
    let conn = connection(spec, flat);
    let coords: Vec<&str> = spec.model.coords().iter().map(|c| c.name()).collect();
    let text = std::fs::read_to_string(data).map_err(|e| invalid(format!("cannot read {}: {e}", data.display())))?;
    let mut samples = read_grid_csv(&text, &coords).map_err(|e| invalid(format!("{}: {e}", data.display())))?;
    let declared: BTreeMap<&str, ()> = spec.model.chart().params().iter().map(|p| (&**p, ())).collect();
    for (k, v) in params {
        if !declared.contains_key(k.as_str()) {
            return Err(invalid(format!("`{k}` is not a declared parameter")));
        }
        samples.set_param(k.clone(), *v);
    }
    let sigma = spec
        .action
        .cyclic_fields()
        .iter()
        .map(|a| {
            (
                a.clone(),
                coords.iter().map(|c| spec.names.name(a, c).to_string()).collect(),
            )
        })
        .collect();
    let section = ReducedSectionData::sampled(samples, sigma).map_err(invalid)?;
    let grid = section.grid().clone();
    for ax in grid.axes() {
        w(
            out,
            format!(
                "axis {}: {} points on [{}, {}]",
                ax.name,
                ax.n,
                fmt_num(ax.min),
                fmt_num(ax.max)
            ),
        )?;
    }
    let exec = Exec::default();
    let opts = LiftOptions {
        tolerance: tol,
        order: None,
        exec,
    };
    for r in flat_residual_with(exec, &section, &conn).map_err(invalid)? {
        let n = interior_norms(&r.field);
        w(
            out,
            format!(
                "flat residual {} ({},{}): max {} l2 {}",
                r.cyclic,
                coords[r.i],
                coords[r.j],
                fmt_num(n.max),
                fmt_num(n.l2)
            ),
        )?;
    }
    let base = vec![0; grid.dim()];
    let lifted = match lift_section(&section, &conn, &base, &[], &opts) {
        Ok(l) => l,
        Err(ReconstructError::Obstruction {
            cyclic,
            max_residual,
            tolerance,
        }) => {
            w(
                out,
                format!(
                    "obstruction: flat residual of {cyclic} is {} above tolerance {}",
                    fmt_num(max_residual),
                    fmt_num(tolerance)
                ),
            )?;
            return Ok(EXIT_TOLERANCE);
        }
        Err(e) => return Err(invalid(e)),
    };
    w(
        out,
        format!(
            "flat condition holds: max {} within {}",
            fmt_num(lifted.flat_max),
            fmt_num(lifted.tolerance)
        ),
    )?;
    for (a, i, r) in projection_residuals(&section, &conn, &lifted, exec).map_err(invalid)? {
        w(
            out,
            format!(
                "projection residual {a} {}: max {}",
                coords[i],
                fmt_num(interior_norms(&r).max)
            ),
        )?;
    }
    if let Some(dest) = dest {
        let mut wr = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = coords.iter().map(|c| c.to_string()).collect();
        header.extend(lifted.fields.iter().map(|(a, _)| a.to_string()));
        wr.write_record(&header).map_err(invalid)?;
        for k in 0..grid.len() {
            let mut rec: Vec<String> = grid.point(k).into_iter().map(|v| v.to_string()).collect();
            rec.extend(lifted.fields.iter().map(|(_, f)| f.data()[k].to_string()));
            wr.write_record(&rec).map_err(invalid)?;
        }
        let bytes = wr.into_inner().map_err(invalid)?;
        std::fs::write(dest, bytes).map_err(|e| invalid(format!("cannot write {}: {e}", dest.display())))?;
        w(out, format!("wrote {}", dest.display()))?;
    }
    Ok(EXIT_PASS)
}

fn verify(cfg: &PipelineConfig, dest: &Path, out: Out) -> Result<i32, Failure> {
    let report = match verify_kdv_pipeline(cfg) {
        Ok(r) => r,
        Err(e @ PipelineError::Tolerance { .. }) => return Err(Failure(EXIT_TOLERANCE, e.to_string())),
        Err(e) => return Err(invalid(e)),
    };
    std::fs::write(dest, report.to_csv()).map_err(|e| invalid(format!("cannot write {}: {e}", dest.display())))?;
    write!(out, "{report}").map_err(io)?;
    match report.check() {
        Ok(()) => {
            w(
                out,
                format!(
                    "PASS: {} rows within tolerance; report written to {}",
                    report.rows.len(),
                    dest.display()
                ),
            )?;
            Ok(EXIT_PASS)
        }
        Err(e) => {
            w(out, format!("FAIL: {e}"))?;
            Ok(EXIT_TOLERANCE)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_csv_in_any_row_order() {
        let text = "x,t,u\n0,0,1\n1,0,2\n0,1,3\n1,1,4\n0.5,0,5\n0.5,1,6\n0,0.5,7\n1,0.5,8\n0.5,0.5,9\n";
        // too coarse for the stencils
        assert!(read_grid_csv(text, &["t", "x"]).is_err());
        let mut rows = vec!["t,x,u".to_string()];
        for i in (0..5).rev() {
            for j in 0..6 {
                rows.push(format!("{},{},{}", i as f64 * 0.25, j as f64 * 0.2, 10 * i + j));
            }
        }
        let s = read_grid_csv(&rows.join("\n"), &["t", "x"]).unwrap();
        assert_eq!(s.grid().shape(), vec![5, 6]);
        assert_eq!(s.get("u").unwrap().at(&[2, 3]), 23.0);
        rows.pop();
        assert!(read_grid_csv(&rows.join("\n"), &["t", "x"]).is_err());
    }

    #[test]
    fn unknown_subcommand_is_a_validation_failure() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run_command(["routh", "frobnicate"], &mut o, &mut e), EXIT_INVALID);
        assert_eq!(run_command(["routh", "--help"], &mut o, &mut e), EXIT_PASS);
        assert!(String::from_utf8(o).unwrap().contains("verify-kdv"));
    }
}
