use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bosepath"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const GP: &str = r#"
problem = "gp"
alpha = 0.0

[grid]
d = 2
r = 6.0
n = 128
bc = "dirichlet"

[trap]
kind = "harmonic"
"#;

const DIRAC: &str = r#"
problem = "rw-dirac"
particles = 2
lambda = 1.0
beta = 4.0
exponent = 2.0
seed = 7

[grid]
d = 1
r = 4.0
n = 32
bc = "dirichlet"

[chain]
chains = 2
steps = 400
batches = 4
"#;

#[test]
fn gp_harmonic_without_interaction_gives_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "gp.toml", GP);
    let out = dir.path().join("out");
    let o = run(&["gp", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(out.join("result.json")).unwrap()).unwrap();
    let chi = v["chi_gp"].as_f64().unwrap();
    assert!((chi - 2.0).abs() < 5e-3, "chi_gp = {chi}");
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["problem"], "gp");
    assert_eq!(m["files"].as_array().unwrap().len(), 2);
}

#[test]
fn json_config_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"problem":"scattering","dimension":3,"pair":{"kind":"square-well","c":2.0,"r0":1.0}}"#;
    let cfg = write(dir.path(), "s.json", body);
    let out = dir.path().join("out");
    let o = run(&["scattering", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(out.join("result.json")).unwrap()).unwrap();
    let alpha = v["alpha"].as_f64().unwrap();
    assert!((alpha - (1.0 - 1f64.tanh())).abs() < 1e-6);
}

#[test]
fn unknown_key_is_a_config_error_with_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &format!("{GP}\nalhpa = 1.0\n"));
    let out = dir.path().join("out");
    let o = run(&["gp", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alhpa"));
    assert!(!out.exists());

    let nested = GP.replace("kind = \"harmonic\"", "kind = \"harmonic\"\nwidth = 3.0");
    let cfg = write(dir.path(), "bad2.toml", &nested);
    let o = run(&["gp", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "d.toml", DIRAC);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for o in [&a, &b] {
        let r = run(&["rw-dirac", "--config", &cfg, "--out", o.to_str().unwrap()]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let m: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    let files = m["files"].as_array().unwrap();
    assert!(!files.is_empty());
    for f in files {
        let name = f["path"].as_str().unwrap();
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }

    let c = dir.path().join("c");
    let r = run(&["rw-dirac", "--config", &cfg, "--out", c.to_str().unwrap(), "--seed-override", "8"]);
    assert!(r.status.success());
    assert_ne!(fs::read(a.join("result.csv")).unwrap(), fs::read(c.join("result.csv")).unwrap());
}

#[test]
fn validate_accepts_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "d.toml", DIRAC);
    let o = run(&["validate", "--config", &cfg]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty(), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn validate_flags_walk_exponent_at_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let body = DIRAC.replace("exponent = 2.0", "exponent = 1.0").replace("d = 1", "d = 3");
    let cfg = write(dir.path(), "d.toml", &body);
    let o = run(&["validate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("precondition:"), "{text}");
    assert!(text.contains("p > d - 2"), "{text}");
}

#[test]
fn validate_flags_missing_potential() {
    let dir = tempfile::tempdir().unwrap();
    let body = GP.replace("[trap]\nkind = \"harmonic\"\n", "");
    let cfg = write(dir.path(), "gp.toml", &body);
    let o = run(&["validate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("schema: missing [trap] block"), "{text}");
}

#[test]
fn budget_errors_have_their_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
problem = "sweep-large-n"
ns = [2, 64]

[grid]
d = 2
r = 4.0
n = 31
bc = "dirichlet"

[trap]
kind = "harmonic"

[pair]
kind = "gaussian"
c = 0.5
sigma = 2.0
"#;
    let cfg = write(dir.path(), "l.toml", body);
    let out = dir.path().join("out");
    let o = run(&["sweep-large-n", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
}

#[test]
fn mismatched_problem_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "gp.toml", GP);
    let o = run(&["hartree", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
