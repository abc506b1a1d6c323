#![no_main]

use libfuzzer_sys::fuzz_target;
use lgstab::builtins::builtin;
use lgstab::config::{parse_class_expr, JobConfig};
use std::collections::BTreeMap;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = JobConfig::parse(text) {
        if cfg.validate().is_ok() {
            if let Ok(model) = cfg.model() {
                if let Some(z) = &cfg.z_divisor {
                    let _ = parse_class_expr(z, &model);
                }
                let _ = cfg.quadratic(&model);
            }
        }
    }
    if let Ok(model) = builtin("blpq_p2", &BTreeMap::new()) {
        let _ = parse_class_expr(text, &model);
    }
});
