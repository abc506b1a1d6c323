use lgstab::cli::{run_args, Outcome, EXIT_CONFIG, EXIT_FAN, EXIT_OK, EXIT_WALL};
use lgstab::report::Report;
use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

fn run(args: &[&str]) -> Outcome {
    let mut all = vec!["lgstab"];
    all.extend_from_slice(args);
    run_args(all)
}

fn config(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

static COUNTER: AtomicUsize = AtomicUsize::new(0);

/// A configuration file removed again on drop.
struct TempConfig(PathBuf);

impl TempConfig {
    fn as_str(&self) -> &str {
        self.0.to_str().unwrap()
    }
}

impl Drop for TempConfig {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

fn temp_config(body: &str) -> TempConfig {
    let n = COUNTER.fetch_add(1, Ordering::Relaxed);
    let path = std::env::temp_dir().join(format!("lgstab-cli-{}-{n}.toml", std::process::id()));
    std::fs::write(&path, body).unwrap();
    TempConfig(path)
}

#[test]
fn describe_reports_slope_constant() {
    let out = run(&["describe", "--surface", "blp_p2", "--format", "json"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    match Report::from_json(out.stdout.trim()).unwrap() {
        Report::Describe(d) => {
            assert_eq!(d.mu, "10/3");
            assert!(d.toric && d.kahler && d.fano);
        }
        other => panic!("unexpected report {other:?}"),
    }
}

#[test]
fn wall_parameters_exit_with_wall_code() {
    let out = run(&["critical", "--surface", "blp_p2", "--q", "3/7"]);
    assert_eq!(out.code, EXIT_WALL);
    assert!(!out.stderr.is_empty());
}

#[test]
fn bad_inputs_exit_with_config_code() {
    for args in [
        &["describe", "--surface", "no_such_surface"][..],
        &["slope", "--surface", "blp_p2", "--z", "E", "--s", "one half"][..],
        &["slope", "--surface", "blp_p2", "--z", "E + Q", "--s", "1/2"][..],
        &["df", "--surface", "blp_p2", "--k", "5,3"][..],
        &["pairing", "--surface", "blp_p2", "--precision", "64"][..],
    ] {
        let out = run(args);
        assert_eq!(out.code, EXIT_CONFIG, "{args:?}: {}", out.stderr);
    }
}

#[test]
fn unknown_config_fields_are_rejected() {
    let path = temp_config("[surface]\nbuiltin = \"p2\"\ncolour = \"blue\"\n");
    let out = run(&["describe", "--config", path.as_str()]);
    assert_eq!(out.code, EXIT_CONFIG);
}

#[test]
fn singular_fans_exit_with_fan_code() {
    let path = temp_config(
        "[surface]\nrays = [[1, 0], [1, 2], [-1, -1]]\nnames = [\"A\", \"B\", \"C\"]\nomega = [\"1\", \"0\", \"0\"]\n",
    );
    let out = run(&["describe", "--config", path.as_str()]);
    assert_eq!(out.code, EXIT_FAN, "{}", out.stderr);
}

#[test]
fn custom_rays_reproduce_builtin_plane() {
    let path = temp_config("[surface]\nrays = [[1, 0], [0, 1], [-1, -1]]\nnames = [\"D1\", \"D2\", \"D3\"]\nomega = [\"1\", \"0\", \"0\"]\n");
    let custom = run(&["pairing", "--config", path.as_str(), "--format", "json"]);
    assert_eq!(custom.code, EXIT_OK, "{}", custom.stderr);
    match Report::from_json(custom.stdout.trim()).unwrap() {
        Report::Pairing(p) => assert!(p.pass && p.max_deviation < 1e-6),
        other => panic!("unexpected report {other:?}"),
    }
}

#[test]
fn every_config_round_trips_through_json() {
    let cases = [
        ("p2.toml", vec!["describe", "critical", "pairing", "df", "slope"]),
        ("blp_p2.toml", vec!["describe", "critical", "pairing", "slope", "futaki", "scan"]),
        ("blpq_p2.toml", vec!["describe", "critical", "pairing", "slope", "futaki"]),
        ("p1xp1_blowup.toml", vec!["describe", "critical", "pairing", "df"]),
        ("iterated_blowup.toml", vec!["describe", "critical", "slope"]),
        ("dp4.toml", vec!["describe", "critical", "slope"]),
        ("dp5.toml", vec!["describe", "critical", "slope"]),
    ];
    for (file, commands) in cases {
        let path = config(file);
        for cmd in commands {
            let out = run(&[cmd, "--config", &path, "--format", "json"]);
            assert_eq!(out.code, EXIT_OK, "{file} {cmd}: {}", out.stderr);
            let report = Report::from_json(out.stdout.trim()).unwrap_or_else(|e| panic!("{file} {cmd}: {e}"));
            let again = Report::from_json(&report.to_json()).unwrap();
            assert_eq!(report, again, "{file} {cmd}");
        }
    }
}

#[test]
fn missing_sections_are_named() {
    let out = run(&["futaki", "--config", &config("p2.toml")]);
    assert_eq!(out.code, EXIT_CONFIG);
    assert!(out.stderr.contains("futaki"), "{}", out.stderr);
}

#[test]
fn flags_override_config_values() {
    let path = config("blp_p2.toml");
    let from_file = run(&["slope", "--config", &path, "--format", "json"]);
    let overridden = run(&["slope", "--config", &path, "--s", "3/10", "--format", "json"]);
    assert_eq!(from_file.code, EXIT_OK);
    assert_eq!(overridden.code, EXIT_OK);
    let mu = |o: &Outcome| match Report::from_json(o.stdout.trim()).unwrap() {
        Report::Slope(s) => (s.s, s.mu_c),
        other => panic!("unexpected report {other:?}"),
    };
    assert_eq!(mu(&from_file), ("1/2".to_string(), "3".to_string()));
    assert_eq!(mu(&overridden).0, "3/10");
}

#[test]
fn csv_output_has_header_and_rows() {
    let out = run(&["critical", "--surface", "p2", "--k", "3", "--format", "csv"]);
    assert_eq!(out.code, EXIT_OK);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert!(lines[0].starts_with("k,family,branch"));
    assert_eq!(lines.len(), 4);
}

#[test]
fn binary_is_deterministic() {
    let bin = env!("CARGO_BIN_EXE_lgstab");
    let args = ["slope", "--surface", "blp_p2", "--z", "E", "--s", "1/2", "--format", "json"];
    let a = Command::new(bin).args(args).output().unwrap();
    let b = Command::new(bin).args(args).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    match Report::from_json(text.trim()).unwrap() {
        Report::Slope(s) => {
            assert!(s.destabilizes);
            assert_eq!(s.margin, "1/3");
        }
        other => panic!("unexpected report {other:?}"),
    }
}
