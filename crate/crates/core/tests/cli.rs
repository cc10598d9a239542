use std::path::PathBuf;

use routh::cli::{run_command, EXIT_INVALID, EXIT_PASS, EXIT_TOLERANCE};

fn model(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("models")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["routh"];
    argv.extend_from_slice(args);
    let code = run_command(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn output_is_deterministic() {
    for cmd in ["derive", "momentum", "reduce"] {
        let a = run(&[cmd, &model("kdv.model")]);
        let b = run(&[cmd, &model("kdv.model")]);
        assert_eq!(a.0, EXIT_PASS, "{}", a.2);
        assert_eq!(a, b);
    }
}

#[test]
fn null_divergence_does_not_change_derive() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(model("kdv.model")).unwrap();
    let with_div = text.replace(
        "[lagrangian]\n",
        "[lagrangian]\ndiv.t = sin(x*psi) + t^2*psi\ndiv.x = exp(psi)*t\n",
    );
    assert_ne!(text, with_div);
    let path = dir.path().join("div.model");
    std::fs::write(&path, with_div).unwrap();
    let plain = run(&["derive", &model("kdv.model")]);
    let shifted = run(&["derive", path.to_str().unwrap()]);
    assert_eq!(shifted.0, EXIT_PASS, "{}", shifted.2);
    let el = |s: &str| s.split("Legendre").next().unwrap().to_string();
    assert_eq!(el(&plain.1), el(&shifted.1));
    assert_ne!(plain.1, shifted.1);
}

#[test]
fn invalid_models_exit_with_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.model");
    std::fs::write(
        &path,
        "[base]\ncoords = t, x\n[fields]\nnames = phi\n[lagrangian]\nL = phi_t^2 + phi^2\n[symmetry]\ncyclic = phi\n",
    )
    .unwrap();
    let (code, _, err) = run(&["reduce", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("line 8") && err.contains("invariance"), "{err}");
    let (code, _, err) = run(&["derive", "/nonexistent.model"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("cannot read"));
    assert_eq!(run(&["verify-kdv"]).0, EXIT_INVALID);
}

#[test]
fn reconstruct_lifts_sampled_data_and_flags_obstructions() {
    let dir = tempfile::tempdir().unwrap();
    let mut good = String::from("t,x,psi,sigma,rho\n");
    let mut bad = good.clone();
    for i in 0..33 {
        for j in 0..33 {
            let (t, x) = (i as f64 / 32.0, j as f64 / 32.0);
            // φ = t·x² + t³: σ = x² + 3t², ρ = 2tx
            good.push_str(&format!("{t},{x},0,{},{}\n", x * x + 3.0 * t * t, 2.0 * t * x));
            bad.push_str(&format!("{t},{x},0,{},{}\n", x * x + 3.0 * t * t + x, 2.0 * t * x));
        }
    }
    let (gp, bp, out) = (
        dir.path().join("good.csv"),
        dir.path().join("bad.csv"),
        dir.path().join("lift.csv"),
    );
    std::fs::write(&gp, good).unwrap();
    std::fs::write(&bp, bad).unwrap();
    let kdv = model("kdv.model");
    let (code, text, err) = run(&[
        "reconstruct",
        &kdv,
        "--flat",
        "--data",
        gp.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_PASS, "{err}");
    assert!(text.contains("flat condition holds"), "{text}");
    let lifted = std::fs::read_to_string(&out).unwrap();
    let mut rows = csv::Reader::from_reader(lifted.as_bytes());
    for rec in rows.records() {
        let r: Vec<f64> = rec.unwrap().iter().map(|v| v.parse().unwrap()).collect();
        let (t, x, phi) = (r[0], r[1], r[2]);
        assert!((phi - (t * x * x + t * t * t)).abs() < 1e-3, "{t} {x} {phi}");
    }
    let (code, text, _) = run(&["reconstruct", &kdv, "--flat", "--data", bp.to_str().unwrap()]);
    assert_eq!(code, EXIT_TOLERANCE);
    assert!(text.contains("obstruction"), "{text}");
}

#[test]
fn verify_kdv_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.csv");
    let args = [
        "verify-kdv",
        "--c",
        "1",
        "--nx",
        "161",
        "--nt",
        "41",
        "--xmin",
        "-15",
        "--xmax",
        "15",
        "--tmax",
        "4",
    ];
    let mut full: Vec<&str> = args.to_vec();
    let path = out.to_str().unwrap().to_string();
    full.extend(["--out", &path]);
    let (code, text, err) = run(&full);
    assert_eq!(code, EXIT_PASS, "{err}");
    assert!(text.contains("PASS"));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("stage,quantity,max_norm,l2_norm,h,observed_order\n"));
    full.extend(["--tol", "1e-12"]);
    assert_eq!(run(&full).0, EXIT_TOLERANCE);
}
