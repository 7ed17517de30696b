use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shellkit"))
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

const SPHERE_IDENTITIES: &str = r#"{"surface": {"type": "Sphere", "radius": 1.0}, "grid": {"n1": 9, "n2": 9}}"#;

const MINIMIZE: &str = r#"{
  "surface": {"type": "Plane"},
  "material": {"h": 0.05, "mu": 1.0, "lambda": 1.0, "mu_c": 2.0},
  "variant": "UnconstrainedH5",
  "grid": {"n1": 6, "n2": 6, "domain": [0, 1, 0, 1]},
  "dirichlet": {"edges": ["left"], "target": {"type": "Identity"}},
  "loads": {"area": [0.0, 0.0, -0.001]},
  "optimizer": {"max_iters": 15, "perturbation": 0.01}
}"#;

#[test]
fn identities_on_the_sphere_are_below_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SPHERE_IDENTITIES);
    let o = run(&["identities", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv_rows(&String::from_utf8(o.stdout).unwrap());
    let col = header.iter().position(|h| h == "max_residual").unwrap();
    assert_eq!(rows.len(), 81);
    for row in rows {
        assert!(row[col].parse::<f64>().unwrap() <= 1e-11);
    }
}

#[test]
fn invariance_matrix_marks_infinity_flat_as_passing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", "{}");
    let o = run(&["invariance", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv_rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(header[0], "kind");
    let flat = rows.iter().find(|r| r[0] == "InfinityFlat").unwrap();
    for name in ["AR1", "AR3*", "AR3*_plate"] {
        let c = header.iter().position(|h| h == name).unwrap();
        assert_eq!(flat[c], "pass", "{name}");
    }
    let koiter = rows.iter().find(|r| r[0] == "KoiterPulled").unwrap();
    assert_eq!(koiter[header.iter().position(|h| h == "AR3*").unwrap()], "fail");
}

#[test]
fn negative_thickness_is_a_validation_error_naming_h() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"surface": {"type": "Sphere", "radius": 1.0}, "material": {"h": -0.1, "mu": 1.0, "lambda": 1.0},
            "variant": "ConstrainedH5", "grid": {"n1": 3, "n2": 3}}"#,
    );
    let o = run(&["coercivity", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`h`"), "{}", stderr(&o));
}

#[test]
fn configuration_errors_exit_with_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("missing.json", None, "cannot read"),
        ("bad.json", Some("{ not json"), "malformed"),
        ("unknown.json", Some(r#"{"surface": {"type": "Plane"}, "grid": {"n1": 3, "n2": 3}, "colour": 1}"#), "colour"),
        ("nogrid.json", Some(r#"{"surface": {"type": "Plane"}}"#), "`grid`"),
        ("mismatch.json", Some(r#"{"command": "energy", "surface": {"type": "Plane"}, "grid": {"n1": 3, "n2": 3}}"#), "`command`"),
        (
            "variant.json",
            Some(
                r#"{"surface": {"type": "Plane"}, "deformation": {"type": "Identity"}, "material": {"h": 0.1, "mu": 1, "lambda": 1}, "variant": "Nope", "grid": {"n1": 3, "n2": 3}}"#,
            ),
            "`variant`",
        ),
    ];
    for (name, body, needle) in cases {
        let path = match body {
            Some(b) => write(dir.path(), name, b),
            None => dir.path().join(name).to_str().unwrap().to_string(),
        };
        let o = run(&["identities", "--config", &path]);
        assert_eq!(o.status.code(), Some(1), "{name}");
        assert!(stderr(&o).contains(needle), "{name}: {}", stderr(&o));
    }
    let cfg = write(dir.path(), "ok.json", SPHERE_IDENTITIES);
    let o = bin().args(["identities", "--config", &cfg]).env("SHELLKIT_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("SHELLKIT_THREADS"));
}

#[test]
fn inadmissible_states_exit_with_status_two_and_name_the_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"surface": {"type": "Sphere", "radius": 1.0},
            "deformation": {"type": "Surface", "surface": {"type": "AffineImage",
                "base": {"type": "Graph", "terms": [[1, 1, 0.8], [2, 0, 0.3]]},
                "matrix": [[1.4, 0, 0], [0, 0.8, 0], [0, 0, 1]], "shift": [0, 0, 0]}},
            "material": {"h": 0.1, "mu": 1.0, "lambda": 1.0},
            "variant": "ConstrainedH5", "grid": {"n1": 3, "n2": 3}}"#,
    );
    let o = run(&["energy", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("at (0, 0.35)"), "{}", stderr(&o));
}

#[test]
fn json_reports_embed_the_resolved_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SPHERE_IDENTITIES);
    let out = dir.path().join("r.json");
    let o = run(&["identities", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["command"], "identities");
    assert_eq!(doc["config"]["surface"]["type"], "Sphere");
    assert_eq!(doc["config"]["grid"]["domain"].as_array().unwrap().len(), 4);
    assert_eq!(doc["config"]["output"]["format"], "json");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 81);
    assert!(doc["summary"]["max_residual"].as_f64().unwrap() <= 1e-11);
}

#[test]
fn minimize_is_deterministic_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", MINIMIZE);
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "4", "4"].iter().enumerate() {
        let sub = dir.path().join(format!("run{k}"));
        std::fs::create_dir(&sub).unwrap();
        let o = bin()
            .current_dir(&sub)
            .args(["minimize", "--config", &cfg, "--out", "m.csv", "--seed", "7"])
            .env("SHELLKIT_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        let summary = std::fs::read(sub.join("m.summary.json")).unwrap();
        outputs.push((std::fs::read(sub.join("m.csv")).unwrap(), summary));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    let (header, rows) = csv_rows(&String::from_utf8(outputs[0].0.clone()).unwrap());
    assert_eq!(header, ["node", "i", "j", "x1", "x2", "m_1", "m_2", "m_3", "q_w", "q_x", "q_y", "q_z"]);
    assert_eq!(rows.len(), 36);
    let summary: serde_json::Value = serde_json::from_slice(&outputs[0].1).unwrap();
    assert_eq!(summary["config"]["optimizer"]["seed"], 7);
    let history = summary["summary"]["history"].as_array().unwrap();
    assert!(history.windows(2).all(|w| w[1].as_f64().unwrap() <= w[0].as_f64().unwrap()));

    let out = dir.path().join("other.csv");
    let o = run(&["minimize", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "8"]);
    assert!(o.status.success());
    assert_ne!(std::fs::read(&out).unwrap(), outputs[0].0);
}

#[test]
fn plain_constrained_variants_cannot_be_minimized() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &MINIMIZE.replace("\"mu_c\": 2.0", "\"mu_c\": null").replace("UnconstrainedH5", "ConstrainedH5"));
    let o = run(&["minimize", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`variant`"));
}
