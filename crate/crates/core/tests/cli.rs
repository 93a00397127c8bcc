use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

use fhn_attractor::config::RunConfig;

fn default_json() -> Value {
    serde_json::from_str(&RunConfig::default().to_json()).unwrap()
}

fn write_config(dir: &Path, cfg: &Value) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    p
}

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fhn-attractor"))
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn shipped_config_validates() {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.json");
    let o = bin(&["validate", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "ok");
}

#[test]
fn step_coarser_than_path_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = default_json();
    cfg["scheme"]["dt"] = json!(0.01);
    let p = write_config(dir.path(), &cfg);
    let o = bin(&["validate", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(
        err.contains("scheme.dt") && err.contains("path.dt"),
        "{err}"
    );

    let out = dir.path().join("out");
    let o = bin(&[
        "run",
        "--config",
        p.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn inconsistent_ladder_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = default_json();
    cfg["problem"]["ladder"] = json!({"delta0": 0.5, "delta01": 0.4, "delta1": 0.9, "b0": 0.1});
    let p = write_config(dir.path(), &cfg);
    let o = bin(&["validate", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("problem.ladder"), "{}", stderr(&o));
}

#[test]
fn equilibrium_needs_dissipation_above_growth() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = default_json();
    cfg["problem"]["nonlinearity"]["a0"] = json!(1.5);
    cfg["experiment"]["name"] = json!("equilibrium");
    let p = write_config(dir.path(), &cfg);
    let o = bin(&["validate", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("problem") && err.contains("delta"), "{err}");
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = default_json();
    cfg["grid"]["spacing"] = json!(0.1);
    let p = write_config(dir.path(), &cfg);
    let o = bin(&["validate", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unforced_simulation_passes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = default_json();
    cfg["problem"]["g"]["amplitude"] = json!(0.0);
    cfg["problem"]["h"]["amplitude"] = json!(0.0);
    cfg["experiment"]["simulate"]["t_start"] = json!(-4.0);
    cfg["experiment"]["simulate"]["t_end"] = json!(4.0);
    cfg["experiment"]["simulate"]["x0_radius"] = json!(0.0);
    let p = write_config(dir.path(), &cfg);
    let out = dir.path().join("out");
    let o = bin(&[
        "run",
        "--config",
        p.to_str().unwrap(),
        "--experiment",
        "simulate",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let energy = fs::read_to_string(out.join("energy.csv")).unwrap();
    assert_eq!(
        energy.lines().next(),
        Some("t,energy,lp_term,z,g_norm2,h_norm2,residual")
    );
    assert!(energy.lines().count() > 1);
}

#[test]
fn full_run_writes_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), &default_json());
    let out = dir.path().join("out");
    let o = bin(&[
        "run",
        "--config",
        p.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}\n{}",
        String::from_utf8_lossy(&o.stdout),
        stderr(&o)
    );

    let headers = [
        (
            "absorption.csv",
            "eps,t_back,max_endpoint_norm2,radius,absorbed",
        ),
        ("lp.csv", "eps,t_back,sup_lp_p"),
        ("truncation.csv", "eps,t_back,M,tail_mass"),
        ("cauchy.csv", "i,j,t_i,t_j,lp_distance"),
        ("continuity.csv", "eps,sup_deviation"),
        ("equilibrium.csv", "t_back,distance_to_final,spread"),
        ("invariance.csv", "t,residual"),
    ];
    for (name, header) in headers {
        let text = fs::read_to_string(out.join(name)).unwrap_or_else(|_| panic!("missing {name}"));
        assert_eq!(text.lines().next(), Some(header), "{name}");
        assert!(text.lines().count() > 1, "{name} has no rows");
    }

    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], json!(true));
    assert_eq!(summary["seed"], json!(7));
    assert!(summary["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["passed"] == json!(true)));
}

#[test]
fn blow_up_names_the_cell() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = default_json();
    cfg["experiment"]["bundles"] = json!([{"radius": 1e4, "count": 1}]);
    cfg["experiment"]["t_back_grid"] = json!([1.0, 2.0]);
    let p = write_config(dir.path(), &cfg);
    let out = dir.path().join("out");
    let o = bin(&[
        "run",
        "--config",
        p.to_str().unwrap(),
        "--experiment",
        "absorb",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("cell eps="), "{}", stderr(&o));
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], json!(false));
}
