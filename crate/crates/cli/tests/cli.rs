use std::path::{Path, PathBuf};
use std::process::Command as Process;

use nholo_cli::config::parse_config;
use nholo_cli::{run, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, EXIT_VERIFY};
use serde_json::Value;

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn write_config(dir: &tempfile::TempDir, text: &str) -> PathBuf {
    let p = dir.path().join("config.toml");
    std::fs::write(&p, text).unwrap();
    p
}

/// Runs in-process and returns the exit code and the parsed report, if one was written.
fn run_with(args: &[&str], config: &Path) -> (i32, Option<Value>) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let mut argv = vec!["nholo".to_string(), args[0].to_string(), config.display().to_string()];
    argv.extend(args[1..].iter().map(|s| s.to_string()));
    argv.extend(["--out".to_string(), out.display().to_string()]);
    let code = run(argv);
    let report = std::fs::read_to_string(&out)
        .ok()
        .map(|t| serde_json::from_str(&t).unwrap());
    (code, report)
}

/// The report with its wall time removed.
fn payload(mut v: Value) -> Value {
    v["metadata"].as_object_mut().unwrap().remove("wall_time_s");
    v
}

fn max_abs(v: &Value) -> f64 {
    match v {
        Value::Number(n) => n.as_f64().unwrap().abs(),
        Value::Array(a) => a.iter().map(max_abs).fold(0.0, f64::max),
        Value::Object(o) => o.values().map(max_abs).fold(0.0, f64::max),
        _ => 0.0,
    }
}

const MINIMAL: &str = r#"
mode = "lagrangian"
n = 2
outputs = ["einstein"]
[lagrangian]
L = "0.5*(y1^2+y2^2)"
[points]
explicit = [[0.1, 0.2, 0.3, 0.4]]
"#;

#[test]
fn minimal_lagrangian_config_is_valid() {
    let cfg = parse_config(MINIMAL).unwrap();
    assert_eq!((cfg.dims.n(), cfg.dims.m()), (2, 2));
    assert_eq!(cfg.outputs.len(), 1);
}

#[test]
fn missing_h_block_is_named() {
    let text = r#"
mode = "dmetric"
n = 1
m = 1
[dmetric]
g = [["1"]]
"#;
    let errs = parse_config(text).err().unwrap();
    assert!(errs.0.iter().any(|e| e.contains("dmetric.h")), "{errs}");
}

#[test]
fn duplicate_output_is_rejected() {
    let text = MINIMAL.replace(
        r#"outputs = ["einstein"]"#,
        r#"outputs = ["einstein", "ricci", "einstein"]"#,
    );
    let errs = parse_config(&text).err().unwrap();
    assert!(
        errs.0.iter().any(|e| e.contains("duplicate output `einstein`")),
        "{errs}"
    );
}

#[test]
fn all_validation_errors_are_reported() {
    let text = r#"
mode = "dmetric"
m = 2
outputs = ["curvature", "bogus", "semispray"]
canonical_cvv = "other"
[tolerances]
metricity = -1.0
nope = 1e-3
"#;
    let errs = parse_config(text).err().unwrap().0;
    for needle in [
        "n: missing",
        "unknown output `bogus`",
        "canonical_cvv",
        "tolerances.metricity",
        "tolerances.nope",
    ] {
        assert!(
            errs.iter().any(|e| e.contains(needle)),
            "missing `{needle}` in {errs:?}"
        );
    }
}

#[test]
fn syntax_errors_carry_a_location() {
    let errs = parse_config("mode = \"dmetric\"\nn = [\n").err().unwrap();
    assert!(errs.0[0].contains("line"), "{errs}");
    let errs = parse_config(&MINIMAL.replace("0.5*(y1^2+y2^2)", "0.5*(y1^2+"))
        .err()
        .unwrap();
    assert!(
        errs.0[0].contains("lagrangian.L") && errs.0[0].contains("at byte"),
        "{errs}"
    );
}

#[test]
fn explicit_points_must_lie_in_the_box() {
    let text = MINIMAL.replace(
        "explicit = [[0.1, 0.2, 0.3, 0.4]]",
        "explicit = [[0.1, 0.2, 0.3, 4.0]]\nbox = [[0,1],[0,1],[0,1],[0,1]]",
    );
    let errs = parse_config(&text).err().unwrap();
    assert!(errs.0.iter().any(|e| e.contains("outside the declared box")), "{errs}");
}

#[test]
fn flat_lagrangian_has_vanishing_einstein_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let (code, report) = run_with(&["compute"], &write_config(&dir, MINIMAL));
    assert_eq!(code, EXIT_OK);
    let obj = &report.unwrap()["points"][0]["objects"]["einstein"];
    assert_eq!(max_abs(&obj["tensor"]), 0.0);
}

#[test]
fn sasaki_example_blocks_are_one_half() {
    let (code, report) = run_with(&["compute"], &example("sasaki_1x1.toml"));
    assert_eq!(code, EXIT_OK);
    let report = report.unwrap();
    for p in report["points"].as_array().unwrap() {
        let c = &p["objects"]["canonical_dconnection"];
        assert!((c["L_h"][0][0][0].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert!((c["L_v"][0][0][0].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(max_abs(&c["C_h"]) + max_abs(&c["C_v"]), 0.0);
        let b = &p["objects"]["berwald_dconnection"];
        assert!((b["L_v"][0][0][0].as_f64().unwrap() - 0.5).abs() < 1e-12);
        let y = p["coords"][1].as_f64().unwrap();
        assert!((p["objects"]["semispray"][0].as_f64().unwrap() - y * y / 4.0).abs() < 1e-12);
        assert!((p["objects"]["nconnection"][0][0].as_f64().unwrap() - y / 2.0).abs() < 1e-12);
    }
}

#[test]
fn flat_one_by_one_charforms() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
mode = "lagrangian"
n = 1
outputs = ["charforms"]
[lagrangian]
L = "y1^2"
[points]
explicit = [[0.3, 1.0]]
"#;
    let (code, report) = run_with(&["compute"], &write_config(&dir, text));
    assert_eq!(code, EXIT_OK);
    let ch = &report.unwrap()["points"][0]["objects"]["charforms"];
    assert_eq!(ch["ch0"].as_f64(), Some(2.0));
    assert_eq!(max_abs(&ch["ch1"]["coeffs"]), 0.0);
    assert_eq!(max_abs(&ch["ch2"]["coeffs"]), 0.0);
}

#[test]
fn verify_passes_on_the_examples() {
    for name in [
        "flat_lagrangian.toml",
        "sasaki_1x1.toml",
        "product_spheres.toml",
        "anholonomic.toml",
        "ansatz.toml",
    ] {
        let (code, report) = run_with(&["verify"], &example(name));
        let report = report.unwrap();
        assert_eq!(code, EXIT_OK, "{name}: {}", report["summary"]);
        assert!(report["summary"]["checks"].as_u64().unwrap() > 0);
        for c in report["checks"].as_array().unwrap() {
            assert!(c["residual"].is_number() && c["tolerance"].is_number());
        }
    }
}

#[test]
fn printed_vertical_formula_fails_vv_metricity() {
    let (code, report) = run_with(&["verify"], &example("as_printed_cvv.toml"));
    assert_eq!(code, EXIT_VERIFY);
    let report = report.unwrap();
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"metricity.vv"));
    assert!(!failed.contains(&"metricity.hh"));
}

#[test]
fn seeded_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
mode = "lagrangian"
n = 2
seed = 42
outputs = ["semispray", "canonical_dconnection", "curvature"]
[lagrangian]
L = "0.5*exp(0.2*x1 - 0.1*x2)*y1^2 + 0.5*exp(0.1*x1)*y2^2 + 0.01*(y1^2 + y2^2)^2 + 0.1*x2*y1"
[points]
count = 6
box = [[-0.5, 0.5], [-0.5, 0.5], [-1, 1], [-1, 1]]
"#;
    let cfg = write_config(&dir, text);
    let (c1, r1) = run_with(&["verify"], &cfg);
    let (c2, r2) = run_with(&["verify"], &cfg);
    assert_eq!(c1, c2);
    let (r1, r2) = (payload(r1.unwrap()), payload(r2.unwrap()));
    assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());

    let (_, r3) = run_with(&["verify", "--seed", "43"], &cfg);
    let r3 = payload(r3.unwrap());
    assert_ne!(r1["points"], r3["points"]);
    assert_ne!(r1["metadata"]["config_hash"], r3["metadata"]["config_hash"]);
    for p in r3["points"].as_array().unwrap() {
        let y = &p["coords"].as_array().unwrap()[2..];
        let speed: f64 = y.iter().map(|v| v.as_f64().unwrap().powi(2)).sum::<f64>().sqrt();
        assert!(speed >= 1e-3);
    }
}

#[test]
fn flags_override_the_configuration() {
    let (code, report) = run_with(
        &[
            "compute",
            "--points",
            "2",
            "--tol",
            "metricity=1e-7",
            "--tol",
            "el=1e-5",
        ],
        &example("anholonomic.toml"),
    );
    assert_eq!(code, EXIT_OK);
    let report = report.unwrap();
    assert_eq!(report["points"].as_array().unwrap().len(), 2);
    assert_eq!(report["metadata"]["tolerances"]["metricity"].as_f64(), Some(1e-7));
    assert_eq!(report["metadata"]["tolerances"]["el"].as_f64(), Some(1e-5));

    assert_eq!(
        run_with(&["compute", "--tol", "nonsense=1"], &example("anholonomic.toml")).0,
        EXIT_USAGE
    );
    assert_eq!(
        run_with(&["compute", "--tol", "metricity"], &example("anholonomic.toml")).0,
        EXIT_USAGE
    );
}

#[test]
fn tightened_tolerance_turns_into_a_verification_failure() {
    let (code, report) = run_with(&["verify", "--tol", "el=1e-30"], &example("sasaki_1x1.toml"));
    assert_eq!(code, EXIT_VERIFY);
    assert!(report.unwrap()["summary"]["failed_checks"].as_u64().unwrap() >= 1);
}

#[test]
fn degenerate_point_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
mode = "lagrangian"
n = 1
outputs = ["semispray", "hessian_metric"]
[lagrangian]
L = "x1*y1^2"
[points]
explicit = [[1.0, 1.0], [0.0, 1.0]]
"#;
    let (code, report) = run_with(&["compute"], &write_config(&dir, text));
    assert_eq!(code, EXIT_NUMERIC);
    let report = report.unwrap();
    // partial report: the regular point is still evaluated
    assert!(report["points"][0]["objects"]["semispray"].is_array());
    assert!(report["points"][1]["errors"].as_object().is_some_and(|e| !e.is_empty()));
}

#[test]
fn geodesic_command_integrates_requests() {
    let (code, report) = run_with(&["geodesic"], &example("flat_lagrangian.toml"));
    assert_eq!(code, EXIT_OK);
    let g = &report.unwrap()["geodesics"][0];
    let last = g["trajectory"].as_array().unwrap().last().unwrap().clone();
    assert!((last["x"][0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(last["x"][1].as_f64().unwrap().abs() < 1e-12);

    assert_eq!(run_with(&["geodesic"], &example("anholonomic.toml")).0, EXIT_USAGE);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(["nholo"]), EXIT_USAGE);
    assert_eq!(run(["nholo", "frobnicate", "x.toml"]), EXIT_USAGE);
    assert_eq!(run(["nholo", "compute", "/nonexistent/config.toml"]), EXIT_USAGE);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run_with(&["compute"], &write_config(&dir, "mode = \"lagrangian\"\n")).0,
        EXIT_USAGE
    );
    assert_eq!(run(["nholo", "--version"]), EXIT_OK);
}

#[test]
fn thread_cap_does_not_change_results() {
    let bin = env!("CARGO_BIN_EXE_nholo");
    let cfg = example("anholonomic.toml");
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("r{threads}.json"));
        let status = Process::new(bin)
            .args([
                "compute",
                cfg.to_str().unwrap(),
                "--points",
                "5",
                "--out",
                out.to_str().unwrap(),
            ])
            .env("NHOLO_THREADS", threads)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(EXIT_OK));
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        outs.push(serde_json::to_string(&payload(v)).unwrap());
    }
    assert_eq!(outs[0], outs[1]);

    let status = Process::new(bin)
        .args(["compute", cfg.to_str().unwrap()])
        .env("NHOLO_THREADS", "zero")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_USAGE));
}

#[test]
fn report_goes_to_stdout_without_out() {
    let out = Process::new(env!("CARGO_BIN_EXE_nholo"))
        .args(["compute", example("sasaki_1x1.toml").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["metadata"]["command"], "compute");
    assert_eq!(v["points"].as_array().unwrap().len(), 2);
}

#[test]
fn config_fuzz_seeds_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/config_parse");
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(parse_config(&text).is_ok(), "{}", path.display());
    }
}
