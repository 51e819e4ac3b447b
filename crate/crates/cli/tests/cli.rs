use std::path::Path;
use std::process::{Command, Output};

use hypertess_cli::trace::parse_trace;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hypertess"))
}

fn run(args: &[&str]) -> Output {
    bin()
        .env_remove("HYPERTESS_TOL")
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    let line = text
        .lines()
        .find(|l| l.starts_with(&format!("{key}:")))
        .unwrap();
    line.split_once(':').unwrap().1.trim().parse().unwrap()
}

const OCTAHEDRON: &str = r#"{"version": 1, "example": {"octahedron": {"c": 1.2}}}"#;

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.json", OCTAHEDRON);
    let o = run(&["verify", &ok, "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let h = report["height"].as_f64().unwrap();
    assert!((report["min_separation"].as_f64().unwrap() - 2.0 * h).abs() < 1e-12);

    let inflated = write(
        dir.path(),
        "big.json",
        &format!(
            r#"{{"version": 1, "example": {{"octahedron": {{"c": 1.2}}}}, "h": {}}}"#,
            h * 1.01
        ),
    );
    let o = run(&["verify", &inflated]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("violation: +x / +y"));

    let bad = write(dir.path(), "bad.json", "{\"version\": 1,");
    assert_eq!(run(&["verify", &bad]).status.code(), Some(2));
    assert_eq!(
        run(&["verify", "/nonexistent/scene.json"]).status.code(),
        Some(2)
    );

    let invalid = write(
        dir.path(),
        "inv.json",
        r#"{"version": 1, "vertex": [1,0,0,0], "hyperballs": [{"pole": [1,0,0,0], "height": 1}]}"#,
    );
    assert_eq!(run(&["verify", &invalid]).status.code(), Some(3));
}

#[test]
fn decompose_octahedron_and_tt() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write(dir.path(), "oct.json", OCTAHEDRON);
    let out = dir.path().join("trace.json");
    let o = run(&["decompose", &scene, "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(
        s.contains("cuts: 2\n")
            && s.contains("leaves: 4\n")
            && s.contains("lemma checks passed: yes")
    );

    let tt = write(
        dir.path(),
        "tt.json",
        r#"{"version": 1, "example": {"regular-tt": {"r": 1.3}}}"#,
    );
    let o = run(&["decompose", &tt, "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("cuts: 0\n") && stdout(&o).contains("leaves: 1\n"));

    let over = write(
        dir.path(),
        "over.json",
        r#"{"version": 1, "example": {"octahedron": {"c": 1.2}}, "h": 2.0}"#,
    );
    assert_eq!(
        run(&["decompose", &over, "-o", out.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn decompose_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write(dir.path(), "oct.json", OCTAHEDRON);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    run(&["decompose", &scene, "-o", a.to_str().unwrap()]);
    run(&["decompose", &scene, "-o", b.to_str().unwrap()]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn export_formats() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write(dir.path(), "oct.json", OCTAHEDRON);
    let trace = dir.path().join("trace.json");
    run(&["decompose", &scene, "-o", trace.to_str().unwrap()]);

    let obj = dir.path().join("mesh.obj");
    assert_eq!(
        run(&[
            "export",
            trace.to_str().unwrap(),
            "--format",
            "obj",
            "-o",
            obj.to_str().unwrap()
        ])
        .status
        .code(),
        Some(0)
    );
    let text = std::fs::read_to_string(&obj).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("o ")).count(), 4);
    assert_eq!(text.lines().filter(|l| *l == "g base").count(), 4);
    assert_eq!(text.lines().filter(|l| *l == "g polar").count(), 4);
    let verts = text.lines().filter(|l| l.starts_with("v ")).count();
    for l in text.lines().filter(|l| l.starts_with("f ")) {
        for idx in l.split_whitespace().skip(1) {
            let i: usize = idx.parse().unwrap();
            assert!(i >= 1 && i <= verts);
        }
    }

    let json = dir.path().join("again.json");
    run(&[
        "export",
        trace.to_str().unwrap(),
        "--format",
        "json",
        "-o",
        json.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read(&trace).unwrap(),
        std::fs::read(&json).unwrap()
    );
    let again = dir.path().join("again2.json");
    run(&[
        "export",
        json.to_str().unwrap(),
        "--format",
        "json",
        "-o",
        again.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read(&json).unwrap(),
        std::fs::read(&again).unwrap()
    );

    assert_ne!(
        run(&[
            "export",
            trace.to_str().unwrap(),
            "--format",
            "stl",
            "-o",
            "x"
        ])
        .status
        .code(),
        Some(0)
    );
}

#[test]
fn empty_trace_exports_zero_objects() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write(dir.path(), "oct.json", OCTAHEDRON);
    let trace = dir.path().join("trace.json");
    run(&["decompose", &scene, "-o", trace.to_str().unwrap()]);
    let mut t = parse_trace(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    t.leaves.clear();
    let empty = write(dir.path(), "empty.json", &t.to_json());
    let obj = dir.path().join("empty.obj");
    assert_eq!(
        run(&[
            "export",
            &empty,
            "--format",
            "obj",
            "-o",
            obj.to_str().unwrap()
        ])
        .status
        .code(),
        Some(0)
    );
    let text = std::fs::read_to_string(&obj).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("o ")).count(), 0);
}

#[test]
fn density_modes() {
    let o = run(&["density", "--family", "regular-tt", "--p", "7"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((field(&stdout(&o), "density") - 0.82251).abs() < 5e-4);

    let o = run(&[
        "density",
        "--family",
        "regular-tt",
        "--r",
        "1.05",
        "--h",
        "0",
    ]);
    assert_eq!(field(&stdout(&o), "density"), 0.0);

    let o = run(&[
        "density",
        "--family",
        "regular-tt",
        "--sweep",
        "1.1",
        "1.5",
        "4",
    ]);
    let s = stdout(&o);
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("r,h,density,cell_volume,piece_volume"));
    assert_eq!(lines.count(), 5);

    let o = run(&["density", "--family", "regular-tt", "--p", "7", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["version"], 1);

    assert_eq!(
        run(&["density", "--family", "regular-tt", "--p", "5"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        run(&[
            "density",
            "--family",
            "regular-tt",
            "--r",
            "1.3",
            "--h",
            "5"
        ])
        .status
        .code(),
        Some(3)
    );
    assert_eq!(
        run(&["density", "--family", "regular-tt"]).status.code(),
        Some(2)
    );
}

#[test]
fn tolerance_from_environment() {
    let o = bin()
        .env("HYPERTESS_TOL", "0")
        .args(["density", "--family", "regular-tt", "--p", "7"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin()
        .env("HYPERTESS_TOL", "0")
        .args([
            "density",
            "--family",
            "regular-tt",
            "--p",
            "7",
            "--tol",
            "1e-6",
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let o = bin()
        .env("HYPERTESS_TOL", "1e-3")
        .args(["density", "--family", "regular-tt", "--p", "7"])
        .output()
        .unwrap();
    assert!((field(&stdout(&o), "density") - 0.82251).abs() < 5e-4);
}
