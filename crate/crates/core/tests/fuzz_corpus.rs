//! Replays the checked-in fuzz corpus through the fuzz targets' invariants.

use lgstab::builtins::builtin;
use lgstab::config::{parse_class_expr, JobConfig};
use lgstab::exp_laurent::ExpLaurentPoly;
use lgstab::num::{fmt_rational, parse_rational};
use lgstab::report::Report;
use std::collections::BTreeMap;
use std::path::PathBuf;

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<(PathBuf, String)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            let text = std::fs::read_to_string(&path).unwrap();
            (path, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn config_seeds() {
    let blpq = builtin("blpq_p2", &BTreeMap::new()).unwrap();
    let mut parsed = 0;
    for (path, text) in seeds("parse_config") {
        if let Ok(cfg) = JobConfig::parse(&text) {
            parsed += 1;
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let model = cfg.model().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            if let Some(z) = &cfg.z_divisor {
                parse_class_expr(z, &model).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            }
            cfg.quadratic(&model).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
        let _ = parse_class_expr(&text, &blpq);
    }
    assert!(parsed >= 8);
    assert!(parse_class_expr("H - E - F", &blpq).is_ok());
}

#[test]
fn rational_seeds() {
    let mut valid = 0;
    for (_, text) in seeds("parse_rational") {
        if let Some(q) = parse_rational(&text) {
            valid += 1;
            assert_eq!(parse_rational(&fmt_rational(&q)), Some(q));
        }
    }
    assert!(valid >= 4);
}

#[test]
fn laurent_seeds() {
    let mut valid = 0;
    for (path, text) in seeds("laurent_json") {
        if let Ok(p) = ExpLaurentPoly::from_json(&text) {
            valid += 1;
            let again = ExpLaurentPoly::from_json(&p.to_json()).unwrap();
            assert_eq!(again, p, "{}", path.display());
        }
    }
    assert!(valid >= 6);
}

#[test]
fn report_seeds() {
    for (path, text) in seeds("report_json") {
        let r = Report::from_json(text.trim()).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(Report::from_json(&r.to_json()).unwrap(), r, "{}", path.display());
    }
}
