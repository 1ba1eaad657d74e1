use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vlaser(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vlaser"))
        .args(args)
        .env("VLASER_OUT", out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &str = r#"
kind = "inversion_scan"
preset = "Sr88"

[[axis]]
param = "delta2"
values = ["1 Gamma3", "5 Gamma3"]

[[axis]]
param = "delta3"
from = "-1 Gamma3"
to = "1 Gamma3"
points = 3
"#;

#[test]
fn shipped_configs_validate() {
    let dir = tempfile::tempdir().unwrap();
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut args = vec!["validate".to_string()];
    for e in fs::read_dir(&configs).unwrap() {
        args.push(e.unwrap().path().display().to_string());
    }
    assert!(args.len() > 10);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = vlaser(&refs, dir.path());
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn runs_are_reproducible_and_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let cfg = cfg.to_str().unwrap();

    let o = vlaser(&["run", cfg], dir.path());
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("max inversion"));
    let res = dir.path().join("small");
    let data = fs::read(res.join("inversion.txt")).unwrap();
    let manifest = fs::read_to_string(res.join("manifest.json")).unwrap();
    let m: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    let embedded = m["config"].as_str().unwrap();
    assert_eq!(m["config_hash"], vlaser::harness::hash_text(embedded));
    assert_eq!(m["points"], 6);

    // second run reuses everything and leaves the files alone
    let o = vlaser(&["run", cfg], dir.path());
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("6 reused"), "{}", stdout(&o));
    assert_eq!(fs::read_to_string(res.join("manifest.json")).unwrap(), manifest);

    let other = dir.path().join("again");
    let o = vlaser(
        &[
            "run",
            cfg,
            "--force",
            "--workers",
            "1",
            "--out-dir",
            other.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(other.join("small/inversion.txt")).unwrap(), data);

    let o = vlaser(
        &["diff", res.to_str().unwrap(), other.join("small").to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("max relative error 0.000e0"), "{}", stdout(&o));

    // an override is a different config
    let o = vlaser(
        &[
            "run",
            cfg,
            "--param",
            "nu2=10Gamma2",
            "--out-dir",
            other.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("0 reused"));
    let o = vlaser(
        &["diff", res.to_str().unwrap(), other.join("small").to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code(&o), 3);
}

#[test]
fn config_errors_exit_with_one_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("empty", SMALL.replace(r#"["1 Gamma3", "5 Gamma3"]"#, "[]")),
        ("unitless", SMALL.replace("\"1 Gamma3\"", "1")),
        ("unknown", SMALL.replace("delta3", "delta9")),
        ("syntax", "kind = ".to_string()),
    ] {
        let cfg = dir.path().join(format!("{name}.toml"));
        fs::write(&cfg, text).unwrap();
        let o = vlaser(&["run", cfg.to_str().unwrap()], dir.path());
        assert_eq!(code(&o), 1, "{name}");
        assert!(!dir.path().join(name).exists(), "{name}");
        let o = vlaser(&["validate", cfg.to_str().unwrap()], dir.path());
        assert_eq!(code(&o), 1, "{name}");
    }
    let o = vlaser(&["run", "/nonexistent.toml"], dir.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn failed_points_set_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    // Γ₂ = 0 with no narrow drive leaves |2⟩ dark and stationary
    let partial = r#"
kind = "t95"
[params]
omega2 = "0 Gamma3"
[[axis]]
param = "gamma2"
values = ["0 Gamma2", "1 Gamma2"]
"#;
    let cfg = dir.path().join("partial.toml");
    fs::write(&cfg, partial).unwrap();
    let o = vlaser(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 3, "{}", stdout(&o));
    assert!(stdout(&o).contains("1 warned, 1 failed"));

    // failed points are retried, completed ones kept
    let o = vlaser(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).contains("1 reused"));

    let all = partial.replace(r#"["0 Gamma2", "1 Gamma2"]"#, r#"["0 Gamma2"]"#);
    let cfg = dir.path().join("all.toml");
    fs::write(&cfg, all).unwrap();
    assert_eq!(code(&vlaser(&["run", cfg.to_str().unwrap()], dir.path())), 2);
}

#[test]
fn cooling_seeds_differ_within_their_errors() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
kind = "cooling"
preset = "Sr88"
[params]
nu = "1 Gamma2"
[cooling]
trajectories = 8
t_end = 400.0
every = 400
"#;
    let cfg = dir.path().join("cool.toml");
    fs::write(&cfg, text).unwrap();
    let cfg = cfg.to_str().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(
        code(&vlaser(
            &["run", cfg, "--seed", "1", "--out-dir", a.to_str().unwrap()],
            dir.path()
        )),
        0
    );
    assert_eq!(
        code(&vlaser(
            &["run", cfg, "--seed", "2", "--out-dir", b.to_str().unwrap()],
            dir.path()
        )),
        0
    );
    let o = vlaser(
        &[
            "diff",
            a.join("cool").to_str().unwrap(),
            b.join("cool").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 3);

    let table = |p: &Path| -> Vec<Vec<f64>> {
        fs::read_to_string(p.join("cool/cooling.txt"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect())
            .collect()
    };
    let (ta, tb) = (table(&a), table(&b));
    assert_eq!(ta.len(), 21);
    for (ra, rb) in ta.iter().zip(&tb).skip(1) {
        for (col, err) in [(1, 4), (2, 5)] {
            let bound = 4.0 * (ra[err].powi(2) + rb[err].powi(2)).sqrt();
            assert!((ra[col] - rb[col]).abs() <= bound, "{ra:?} {rb:?}");
        }
    }
}

#[test]
fn presets_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let o = vlaser(&["presets"], dir.path());
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("Sr88") && s.contains("Yb174") && s.contains("kappa"));
}
