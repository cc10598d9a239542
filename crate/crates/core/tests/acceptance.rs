//! Acceptance criteria 1–6. Runs as a plain binary so that every criterion
//! prints one PASS/FAIL line; exits non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use routh::cli::{parse_model_file, run_command, ModelSpec, EXIT_PASS};
use routh::expr::{parse_expr, Chart, Expr};
use routh::forms::{DifferentialForm, HorizontalBasis};
use routh::numerics::kdv::{verify_kdv_pipeline, PipelineConfig, ORDER_WINDOW};
use routh::numerics::{Exec, Grid};
use routh::reconstruct::{flat_residual, lift_section, LiftOptions, ReconstructError, ReducedSectionData};
use routh::routh::{reduce_model, reduced_euler_lagrange, round_trip_remainders, solve_for_function, ConnectionData};

use common::props;

/// Random models for the Noether suite.
const NOETHER_MODELS: u64 = 64;
/// Cases per kernel property.
const PROPERTY_CASES: u64 = 128;
/// Wall-clock budget of the single-threaded numeric run.
const PIPELINE_BUDGET_S: f64 = 30.0;

type Outcome = Result<String, String>;

fn model_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("models").join(name)
}

fn load(name: &str) -> ModelSpec {
    parse_model_file(&std::fs::read_to_string(model_path(name)).unwrap()).unwrap()
}

fn cli(args: &[&str]) -> Result<String, String> {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["routh"];
    argv.extend_from_slice(args);
    let code = run_command(argv, &mut out, &mut err);
    if code != EXIT_PASS {
        return Err(format!(
            "`routh {}` exited {code}: {}",
            args.join(" "),
            String::from_utf8_lossy(&err)
        ));
    }
    Ok(String::from_utf8(out).unwrap())
}

/// The right-hand side of the output line starting with `key = `.
fn value<'a>(out: &'a str, key: &str) -> Result<&'a str, String> {
    let prefix = format!("{key} = ");
    out.lines()
        .map(str::trim)
        .find_map(|l| l.strip_prefix(prefix.as_str()))
        .ok_or_else(|| format!("no `{key}` line in output"))
}

fn parsed(chart: &Chart, text: &str) -> Result<Expr, String> {
    parse_expr(text, chart).map_err(|e| format!("`{text}`: {e}"))
}

fn expect_eq(what: &str, got: &Expr, want: &Expr) -> Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got}, expected {want}"))
    }
}

/// `got = k · want` for the stated rational `k` (equations are compared
/// as equations, so an explicit overall factor is allowed).
fn expect_multiple(what: &str, got: &Expr, want: &Expr, k: &Expr) -> Result<(), String> {
    if got.ratio_to(want) == k.as_constant() {
        Ok(())
    } else {
        Err(format!("{what}: got {got}, expected ({k})·({want})"))
    }
}

fn unreduced_chart() -> Chart {
    load("kdv.model").model.chart().clone()
}

fn reduced_chart() -> Chart {
    let mut c = Chart::new(&["t", "x"], &["psi", "sigma", "rho"]).unwrap();
    for f in ["mu1", "mu2"] {
        c.add_function(f, &["t", "x"]).unwrap();
    }
    for f in ["Gt", "Gx", "Gpsi"] {
        c.add_function(f, &["t", "x", "psi"]).unwrap();
    }
    c
}

fn criterion_1() -> Outcome {
    let kdv = model_path("kdv.model");
    let kdv = kdv.to_str().unwrap();
    let u = unreduced_chart();
    let p = |s: &str| parse_expr(s, &u).unwrap();

    // (a) J = p^t dx − p^x dt with p^t = ½φ_x
    let momentum = cli(&["momentum", kdv])?;
    let spec = load("kdv.model");
    let basis = HorizontalBasis::new(spec.model.coords());
    let pt = p("1/2*phi_x");
    let px = p("1/2*phi_t + 3*phi_x^2 + psi_x");
    let current: DifferentialForm = basis.dx(1).scale(&pt).sub(&basis.dx(0).scale(&px));
    let shown = value(&momentum, "J[phi]")?;
    if shown != current.to_string() {
        return Err(format!("(a) momentum current: got {shown}, expected {current}"));
    }
    let derive = cli(&["derive", kdv])?;
    expect_eq("(a) p^t", &parsed(&u, value(&derive, "p[phi]^t")?)?, &pt)?;

    // (b) p^t = μ_2, p^x = −μ_1
    let line = constraint(&momentum, "[phi^t]")?;
    expect_eq("(b) constraint t", &parsed(&u, &line)?, &(&pt - &p("mu2")))?;
    let line = constraint(&momentum, "[phi^x]")?;
    expect_eq("(b) constraint x", &parsed(&u, &line)?, &(&px + &p("mu1")))?;

    // (c) general-Γ Routhian and its reduction
    let general = cli(&["reduce", kdv])?;
    let r_mu = p("1/2*phi_t*phi_x + phi_x^3 + phi_x*psi_x + 1/2*psi^2 + mu1*(phi_x - Gx - Gpsi*psi_x) - mu2*(phi_t - Gt - Gpsi*psi_t)");
    expect_eq("(c) R_mu", &parsed(&u, value(&general, "R")?)?, &r_mu)?;
    let rc = reduced_chart();
    let q = |s: &str| parse_expr(s, &rc).unwrap();
    let r_red = q(
        "1/2*(sigma + Gt + Gpsi*psi_t)*(rho + Gx + Gpsi*psi_x) + (rho + Gx + Gpsi*psi_x)^3 \
                   + (rho + Gx + Gpsi*psi_x)*psi_x + 1/2*psi^2 + mu1*rho - mu2*sigma",
    );
    expect_eq("(c) R_red", &parsed(&rc, value(&general, "R_red")?)?, &r_red)?;
    let half = Expr::rational(-1, 2);
    expect_multiple(
        "(c) sigma equation",
        &parsed(&rc, value(&general, "E[sigma]")?)?,
        &q("rho + Gx + Gpsi*psi_x - 2*mu2"),
        &half,
    )?;
    expect_multiple(
        "(c) rho equation",
        &parsed(&rc, value(&general, "E[rho]")?)?,
        &q("sigma + Gt + Gpsi*psi_t + 6*(rho + Gx + Gpsi*psi_x)^2 + 2*psi_x + 2*mu1"),
        &half,
    )?;

    // (d) flat Routhian
    let flat = cli(&["reduce", kdv, "--flat"])?;
    expect_eq(
        "(d) flat R_red",
        &parsed(&rc, value(&flat, "R_red")?)?,
        &q("1/2*sigma*rho + rho^3 + rho*psi_x + 1/2*psi^2 + mu1*rho - mu2*sigma"),
    )?;

    // (e) gyroscopic force, on the variant whose Γ_t, Γ_x depend on (t, x)
    let variant = model_path("kdv_base_connection.model");
    let gyro = cli(&["reduce", variant.to_str().unwrap()])?;
    let mut vc = Chart::new(&["t", "x"], &["psi", "sigma", "rho"]).unwrap();
    for f in ["mu1", "mu2", "Gt", "Gx"] {
        vc.add_function(f, &["t", "x"]).unwrap();
    }
    vc.add_function("Gpsi", &["t", "x", "psi"]).unwrap();
    let force = parse_expr("mu2*Gpsi_t - mu1*Gpsi_x", &vc).unwrap();
    expect_eq("(e) force", &parsed(&vc, value(&gyro, "F_psi")?)?, &force)?;
    let dw = value(&gyro, "d(omega_mu)")?;
    let want = format!("({force}) dt∧dx∧dpsi");
    if dw != want {
        return Err(format!("(e) dω_μ: got {dw}, expected {want}"));
    }

    // (f) flat reduced equations: ρ_x = ψ, ρ = 2μ_2, σ + 6ρ² + 2ψ_x = −2μ_1
    expect_multiple(
        "(f) psi equation",
        &parsed(&rc, value(&flat, "E[psi]")?)?,
        &q("rho_x - psi"),
        &Expr::one(),
    )?;
    expect_multiple(
        "(f) sigma equation",
        &parsed(&rc, value(&flat, "E[sigma]")?)?,
        &q("rho - 2*mu2"),
        &half,
    )?;
    expect_multiple(
        "(f) rho equation",
        &parsed(&rc, value(&flat, "E[rho]")?)?,
        &q("sigma + 6*rho^2 + 2*psi_x + 2*mu1"),
        &half,
    )?;

    // (g) eliminate ψ, impose closedness and σ_x = ρ_t: KdV
    let conn = ConnectionData::flat(&spec.model, &spec.action);
    let rm = reduce_model(&spec.model, &spec.action, &conn, &spec.momentum, &spec.names).map_err(|e| e.to_string())?;
    let chart = rm.model().chart();
    let el = reduced_euler_lagrange(&rm).map_err(|e| e.to_string())?;
    let sec = |e: &Expr| e.jets_to_sections(chart.fields(), chart.coords());
    let sym = |s: &str| {
        sec(&parse_expr(s, chart).unwrap())
            .symbols()
            .into_iter()
            .next()
            .unwrap()
    };
    let rules = vec![
        solve_for_function(&sec(el.get("psi").unwrap()), &sym("psi")).ok_or("(g) cannot solve for psi")?,
        solve_for_function(&sec(el.get("sigma").unwrap()), &sym("mu2")).ok_or("(g) cannot solve for mu2")?,
        rm.closedness().rules()[0].clone(),
        solve_for_function(&sec(&parse_expr("sigma_x - rho_t", chart).unwrap()), &sym("sigma_x"))
            .ok_or("(g) cannot impose the flat condition")?,
    ];
    let x = chart.coord("x").unwrap().clone();
    let kdv_eq = sec(el.get("rho").unwrap())
        .total_derivative(&x)
        .and_then(|e| e.apply_rules(&rules))
        .map_err(|e| e.to_string())?;
    let mut target = Chart::new(&["t", "x"], &[]).unwrap();
    target.add_function("rho", &["t", "x"]).unwrap();
    let expected = parse_expr("rho_t + 6*rho*rho_x + rho_xxx", &target).unwrap();
    expect_multiple("(g) KdV", &kdv_eq, &expected, &Expr::int(-1))?;
    Ok("(a)–(g) structurally equal".into())
}

fn constraint(out: &str, tag: &str) -> Result<String, String> {
    out.lines()
        .map(str::trim)
        .find_map(|l| l.strip_prefix(tag))
        .and_then(|l| l.trim().strip_suffix(" = 0"))
        .map(str::to_string)
        .ok_or_else(|| format!("no constraint line {tag}"))
}

fn criterion_2() -> Outcome {
    for seed in 0..NOETHER_MODELS {
        props::noether_identity(seed).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    Ok(format!("{NOETHER_MODELS} random invariant models"))
}

fn criterion_3() -> Outcome {
    let mut checked = Vec::new();
    for (name, flat) in [("kdv.model", true), ("kdv.model", false), ("wave.model", true)] {
        let s = load(name);
        let conn = if flat {
            ConnectionData::flat(&s.model, &s.action)
        } else {
            s.connection.clone()
        };
        let rm = reduce_model(&s.model, &s.action, &conn, &s.momentum, &s.names).map_err(|e| e.to_string())?;
        let (mode, rem) =
            round_trip_remainders(&s.model, &s.action, &conn, &s.momentum, &rm).map_err(|e| e.to_string())?;
        if let Some((f, r)) = rem.iter().find(|(_, r)| !r.is_zero()) {
            return Err(format!("{name}: remainder for {f} is {r}"));
        }
        checked.push(format!("{name}{} ({mode:?})", if flat { " flat" } else { "" }));
    }
    Ok(format!("zero remainders: {}", checked.join(", ")))
}

fn criterion_4() -> Outcome {
    let cfg = PipelineConfig {
        exec: Exec::Sequential,
        ..PipelineConfig::default()
    };
    let start = Instant::now();
    let report = verify_kdv_pipeline(&cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    report.check().map_err(|e| e.to_string())?;
    let orders: Vec<f64> = report.rows.iter().filter_map(|r| r.observed_order).collect();
    let worst_fd = report
        .rows
        .iter()
        .filter(|r| r.fd_limited)
        .map(|r| r.max_norm / r.tolerance)
        .fold(0.0, f64::max);
    let worst_analytic = report
        .rows
        .iter()
        .filter(|r| !r.fd_limited)
        .map(|r| r.max_norm)
        .fold(0.0, f64::max);
    if orders.iter().any(|o| *o < ORDER_WINDOW.0 || *o > ORDER_WINDOW.1) {
        return Err("convergence order outside the window".into());
    }
    if secs > PIPELINE_BUDGET_S {
        return Err(format!(
            "took {secs:.1} s single-threaded, budget {PIPELINE_BUDGET_S} s"
        ));
    }
    let lo = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = orders.iter().copied().fold(0.0, f64::max);
    Ok(format!(
        "{} rows; worst FD norm/tol {worst_fd:.2e}; analytic max {worst_analytic:.1e}; orders in [{lo:.3}, {hi:.3}]; {secs:.1} s",
        report.rows.len()
    ))
}

fn criterion_5() -> Outcome {
    let s = load("kdv.model");
    let conn = ConnectionData::flat(&s.model, &s.action);
    // a window small enough that the perturbation does not dominate the
    // tolerance scale, fine enough that 10·h²·scale < 1
    let grid = Arc::new(Grid::tx(21, 0.0, 1.0, 241, -6.0, 6.0).map_err(|e| e.to_string())?);
    let h2 = grid.h_max().powi(2);
    let mut c = Chart::new(&["t", "x"], &[]).unwrap();
    c.add_param("k").unwrap();
    c.add_param("x0").unwrap();
    let rho = routh::numerics::kdv::soliton_expr(&c).unwrap();
    let sigma = rho.scale_int(-1) * parse_expr("k^2", &c).unwrap();
    let psi = rho.total_derivative(&c.coords()[1]).unwrap();
    let perturbed = &sigma + &parse_expr("x", &c).unwrap();
    let params = [("k", 1.0), ("x0", -0.5)];
    let build = |sig: &Expr| {
        ReducedSectionData::closed_form(
            grid.clone(),
            &c,
            &params,
            &[("psi", psi.clone())],
            &[("phi", vec![sig.clone(), rho.clone()])],
        )
    };
    let mut notes = Vec::new();
    for closed in [true, false] {
        let data = build(&perturbed).map_err(|e| e.to_string())?;
        let data = if closed {
            data
        } else {
            ReducedSectionData::sampled(
                data.samples().clone(),
                vec![("phi".into(), vec!["sigma_phi_t".into(), "sigma_phi_x".into()])],
            )
            .map_err(|e| e.to_string())?
        };
        let r = flat_residual(&data, &conn).map_err(|e| e.to_string())?;
        let max = routh::numerics::interior_norms(&r[0].field).max;
        if (max - 1.0).abs() > h2 {
            return Err(format!("flat residual {max} is not 1 ± h² (h² = {h2:.2e})"));
        }
        match lift_section(&data, &conn, &[0, 0], &[], &LiftOptions::default()) {
            Err(ReconstructError::Obstruction { tolerance, .. }) if tolerance < 1.0 => {}
            other => return Err(format!("lift did not refuse: {:?}", other.map(|l| l.flat_max))),
        }
        notes.push(format!(
            "{} residual {max:.6}",
            if closed { "closed-form" } else { "sampled" }
        ));
        // the unperturbed data lifts
        let ok = build(&sigma).map_err(|e| e.to_string())?;
        lift_section(&ok, &conn, &[0, 0], &[], &LiftOptions::default()).map_err(|e| e.to_string())?;
    }
    Ok(format!("{}; lift refused, unperturbed data lifts", notes.join(", ")))
}

fn criterion_6() -> Outcome {
    let suites: [(&str, props::Check); 7] = [
        ("d∘d = 0", props::dd_zero),
        ("wedge graded-commutative", props::wedge_graded),
        ("d antiderivation", props::antiderivation),
        ("D_i D_j = D_j D_i", props::total_derivatives_commute),
        ("null-divergence EL invariance", props::null_divergence_invariance),
        ("R_0 = L", props::routhian_at_zero_momentum),
        ("flat gyroscopic force = 0", props::flat_gyroscopic_force_vanishes),
    ];
    for (name, check) in suites {
        for seed in 0..PROPERTY_CASES {
            check(seed).map_err(|e| format!("{name}, seed {seed}: {e}"))?;
        }
    }
    Ok(format!("7 properties × {PROPERTY_CASES} cases"))
}

type Criterion = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Criterion); 6] = [
        ("golden worked-example derivations", criterion_1),
        ("Noether identity on random models", criterion_2),
        ("round-trip reduction consistency", criterion_3),
        ("KdV numeric pipeline", criterion_4),
        ("reconstruction obstruction", criterion_5),
        ("kernel property suites", criterion_6),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} — {detail} [{secs:.2} s]", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} — {e} [{secs:.2} s]", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
