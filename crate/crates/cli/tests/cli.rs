use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_minsurf"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn minsurf")
}

fn json(args: &[&str]) -> Value {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("json output")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("minsurf-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn multiplicities(v: &Value) -> Vec<u64> {
    v["report"]["multiplicities"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect()
}

#[test]
fn surface_examples() {
    let v = json(&["surface", "catenoid"]);
    assert_eq!(multiplicities(&v), vec![1, 1]);
    let tc = v["report"]["total_curvature"]["value"].as_f64().unwrap();
    assert!((tc / (-4.0 * std::f64::consts::PI) - 1.0).abs() < 0.01);
    assert_eq!(v["status"], "ok");

    let v = json(&["surface", "enneper", "--k", "2"]);
    assert_eq!(multiplicities(&v), vec![5]);
    assert_eq!(v["notes"].as_array().unwrap().len(), 1);

    let v = json(&["surface", "costa", "--t", "1"]);
    assert_eq!(multiplicities(&v), vec![1, 1, 1]);
    assert_eq!(v["report"]["genus"], 1);
}

#[test]
fn bound_and_enumerate_examples() {
    let v = json(&["bound", "--g", "0", "--d", "1,1"]);
    assert_eq!(v["report"]["bounds"]["lower"], "1");
    let v = json(&["bound", "--one-sided", "--g", "0", "--d", "3"]);
    assert_eq!(v["report"]["bounds"]["lower"], "4/3");
    assert_eq!(v["report"]["bounds"]["lower_ceil"], 2);
    let v = json(&["enumerate", "--budget", "3", "--embedded", "--min-ends", "3", "--min-genus", "1"]);
    let t = v["report"]["topologies"].as_array().unwrap();
    assert_eq!(t.len(), 1);
    assert_eq!(t[0]["genus"], 1);
    assert_eq!(t[0]["multiplicities"], serde_json::json!([1, 1, 1]));
    let v = json(&["bound", "--g", "1", "--d", "1,1,1"]);
    assert_eq!(v["report"]["bounds"]["lower"], "3");
    let v = json(&["sandwich", "costa"]);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["report"]["known"][0]["consistent"], true);
}

#[test]
fn index_and_forms_examples() {
    let v = json(&["index", "catenoid"]);
    assert_eq!(v["report"]["spectral"]["index_estimate"], 1);
    let v = json(&["index", "enneper", "--k", "1"]);
    assert_eq!(v["report"]["spectral"]["index_estimate"], 1);
    let v = json(&["forms", "costa", "--t", "1"]);
    assert_eq!(v["report"]["parity"]["dims"], serde_json::json!([2, 3, 3, 1]));
    assert_eq!(v["report"]["parity"]["total"], 9);
    assert_eq!(v["report"]["basis"]["harmonic_dim"], 12);
}

#[test]
fn identical_config_gives_identical_bytes() {
    for args in [&["bound", "--g", "1", "--d", "1,1,1"][..], &["index", "enneper", "--k", "2"], &["forms", "catenoid"]] {
        let a = run(args);
        let b = run(args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let a = bin().args(["index", "catenoid"]).env("MINSURF_THREADS", "1").output().unwrap();
    let b = bin().args(["index", "catenoid"]).env("MINSURF_THREADS", "2").output().unwrap();
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn provenance_block_echoes_the_config() {
    let v = json(&["index", "catenoid", "--schedule", "10,20,40", "--tol", "residue=1e-9"]);
    let p = &v["provenance"];
    assert_eq!(p["command"], "index");
    assert_eq!(p["config"]["schedule"]["radii"], serde_json::json!([10.0, 20.0, 40.0]));
    assert_eq!(p["config"]["tolerances"]["residue"], 1e-9);
    assert_eq!(p["versions"]["minsurf"], env!("CARGO_PKG_VERSION"));
    assert!(p["versions"]["modules"]["spectral"].is_string());
}

#[test]
fn csv_projection() {
    let o = run(&["index", "catenoid", "--format", "csv"]);
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.starts_with("# command: index\n# config: {"));
    let body: Vec<&str> = s.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "stage,r,delta,h,vertices,count,lowest_eigenvalue,perturbed");
    assert_eq!(body.len(), 6);
}

#[test]
fn config_file_and_overrides() {
    let cfg = tmp("run.toml");
    std::fs::write(
        &cfg,
        r#"
format = "json"

[surface]
name = "rational"

[surface.rational]
g_num = [[0.0, 0.0], [1.0, 0.0]]
g_den = [[1.0, 0.0]]
dh_num = [[1.0, 0.0]]
dh_den = [[0.0, 0.0], [1.0, 0.0]]
punctures = ["0,0", "inf"]
basepoint = [1.0, 0.0]
"#,
    )
    .unwrap();
    let v = json(&["--config", cfg.to_str().unwrap(), "surface"]);
    assert_eq!(multiplicities(&v), vec![1, 1]);
    let v = json(&["--config", cfg.to_str().unwrap(), "index"]);
    assert_eq!(v["report"]["spectral"]["index_estimate"], 1);
    // a positional name replaces the configured surface
    let v = json(&["--config", cfg.to_str().unwrap(), "surface", "enneper"]);
    assert_eq!(multiplicities(&v), vec![3]);

    let out = tmp("bound.json");
    let o = run(&["bound", "--g", "0", "--d", "1,1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success() && o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["report"]["bounds"]["upper"], "1");
}

#[test]
fn index_side_outputs() {
    let ef = tmp("ef.csv");
    let mesh = tmp("mesh.json");
    let o = run(&[
        "index",
        "catenoid",
        "--schedule",
        "10,20,40",
        "--eigenfunctions",
        ef.to_str().unwrap(),
        "--eigenfunction-count",
        "2",
        "--mesh",
        mesh.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&ef).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("re,im,x1,x2,x3,f0 (mu="));
    assert_eq!(header.split(',').count(), 7);
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&mesh).unwrap()).unwrap();
    let nv = m["vertices"].as_array().unwrap().len();
    assert_eq!(text.lines().count(), nv + 1);
    assert_eq!(m["positions"].as_array().unwrap().len(), nv);
}

#[test]
fn exit_codes() {
    // too few stages to stabilize
    assert_eq!(run(&["index", "catenoid", "--schedule", "10,20"]).status.code(), Some(3));
    // an invariant check that cannot pass at this tolerance
    assert_eq!(run(&["surface", "catenoid", "--tol", "total_curvature=1e-14"]).status.code(), Some(2));
    let bad = tmp("bad.toml");
    std::fs::write(&bad, "surfce = 1\n").unwrap();
    let o = run(&["--config", bad.to_str().unwrap(), "surface", "catenoid"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field"));
    assert_eq!(run(&["surface", "torus"]).status.code(), Some(1));
    assert_eq!(run(&["bound", "--d", "0"]).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn costa_audit_reports_every_piece() {
    let v = json(&["costa-audit", "--t", "1"]);
    let r = &v["report"];
    assert_eq!(v["status"], "ok");
    assert_eq!(r["dims"]["dims"], serde_json::json!([2, 3, 3, 1]));
    assert_eq!(r["restricted_counts"]["total"], 5);
    assert_eq!(r["nodal_domains"], 4);
    assert_eq!(r["replay"]["contradiction"], true);
    let parities: Vec<&str> = r["parity_table"].as_array().unwrap().iter().map(|x| x["parity"].as_str().unwrap()).collect();
    assert_eq!(parities, vec!["++", "--", "-+", "+-"]);
}
