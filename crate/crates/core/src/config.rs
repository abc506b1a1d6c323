//! TOML job configuration and the divisor-class expression syntax used by it.
//!
//! A class expression is a signed sum of optionally weighted names, for
//! example `H - E - F`, `1/2 D1 + 2*D3` or `omega - (H1 + L2)`. The names
//! `omega` and `antiK` refer to the polarisation and to `-K`.

use crate::builtins::{builtin, custom_toric, Model, ModelError, BUILTIN_NAMES};
use crate::num::{parse_rational, Q};
use crate::stability::TestConfigQuadratic;
use crate::surface::{DivisorClass, GeometryError};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

pub const MIN_PRECISION_BITS: u32 = 128;
pub const DEFAULT_PRECISION_BITS: u32 = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read `{path}`: {reason}")]
    Io { path: String, reason: String },
    #[error("invalid TOML: {0}")]
    Toml(String),
    #[error("`{0}` is not a rational number")]
    BadRational(String),
    #[error("malformed class expression `{expr}`: {reason}")]
    BadClassExpr { expr: String, reason: String },
    #[error("k list must be nonempty, positive and strictly increasing")]
    BadKList,
    #[error("precision must be at least {MIN_PRECISION_BITS} bits, got {0}")]
    LowPrecision(u32),
    #[error("surface must name a built-in or give rays and omega")]
    MissingSurface,
    #[error("missing `{0}` in the configuration")]
    Missing(&'static str),
    #[error("unknown output format `{0}`")]
    BadFormat(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub builtin: Option<String>,
    pub rays: Option<Vec<[i64; 2]>>,
    pub names: Option<Vec<String>>,
    /// Kähler coefficients on the rays, as rational strings.
    pub omega: Option<Vec<String>>,
    pub lenient: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticTerm {
    pub a: String,
    pub b: String,
    #[serde(default = "one")]
    pub coeff: String,
}

fn one() -> String {
    "1".into()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub param: String,
    pub lo: String,
    pub hi: String,
    pub step: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FutakiDivisorSpec {
    pub class: String,
    pub moment: f64,
    pub weight: f64,
    /// `[family, branch]` labels of the critical points carrying this divisor.
    pub at: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FutakiSpec {
    pub d: FutakiDivisorSpec,
    pub d_prime: FutakiDivisorSpec,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default)]
    pub surface: SurfaceSpec,
    #[serde(default)]
    pub kahler: BTreeMap<String, String>,
    pub z_divisor: Option<String>,
    pub s: Option<String>,
    #[serde(default)]
    pub testconfig: Vec<QuadraticTerm>,
    pub k_list: Option<Vec<f64>>,
    pub scan: Option<ScanSpec>,
    pub futaki: Option<FutakiSpec>,
    pub precision_bits: Option<u32>,
    pub format: Option<String>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(OutputFormat::Table),
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(ConfigError::BadFormat(other.into())),
        }
    }
}

pub fn rational(text: &str) -> Result<Q, ConfigError> {
    parse_rational(text).ok_or_else(|| ConfigError::BadRational(text.into()))
}

impl JobConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: JobConfig = toml::from_str(text).map_err(|e| ConfigError::Toml(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), reason: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn for_builtin(name: &str) -> Self {
        JobConfig { surface: SurfaceSpec { builtin: Some(name.into()), ..Default::default() }, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(ks) = &self.k_list {
            check_k_list(ks)?;
        }
        if let Some(p) = self.precision_bits {
            if p < MIN_PRECISION_BITS {
                return Err(ConfigError::LowPrecision(p));
            }
        }
        for v in self.kahler.values() {
            rational(v)?;
        }
        if let Some(s) = &self.s {
            rational(s)?;
        }
        if let Some(f) = &self.format {
            f.parse::<OutputFormat>()?;
        }
        if let Some(sc) = &self.scan {
            for v in [&sc.lo, &sc.hi, &sc.step] {
                rational(v)?;
            }
        }
        Ok(())
    }

    pub fn kahler_params(&self) -> Result<BTreeMap<String, Q>, ConfigError> {
        self.kahler.iter().map(|(k, v)| Ok((k.clone(), rational(v)?))).collect()
    }

    /// Builds the polarised surface and its mirror chart.
    pub fn model(&self) -> Result<Model, ConfigError> {
        let params = self.kahler_params()?;
        let mut model = match (&self.surface.builtin, &self.surface.rays) {
            (Some(name), _) => builtin(name, &params)?,
            (None, Some(rays)) => {
                let rays: Vec<(i64, i64)> = rays.iter().map(|r| (r[0], r[1])).collect();
                let names =
                    self.surface.names.clone().unwrap_or_else(|| (1..=rays.len()).map(|i| format!("D{i}")).collect());
                let omega = self.surface.omega.as_ref().ok_or(ConfigError::Missing("surface.omega"))?;
                let omega = omega.iter().map(|v| rational(v)).collect::<Result<Vec<_>, _>>()?;
                if omega.len() != rays.len() {
                    return Err(GeometryError::BasisMismatch { expected: rays.len(), found: omega.len() }.into());
                }
                custom_toric(&rays, &names, omega)?
            }
            _ => return Err(ConfigError::MissingSurface),
        };
        if self.surface.lenient == Some(true) {
            model.tie_mode = crate::critical::TieMode::Lenient;
        }
        Ok(model)
    }

    pub fn k_list_or(&self, default: &[f64]) -> Vec<f64> {
        self.k_list.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn quadratic(&self, model: &Model) -> Result<Option<TestConfigQuadratic>, ConfigError> {
        if self.testconfig.is_empty() {
            return Ok(None);
        }
        let mut tc = TestConfigQuadratic::zero(model.surface.dim());
        for term in &self.testconfig {
            let a = parse_class_expr(&term.a, model)?;
            let b = parse_class_expr(&term.b, model)?;
            let c = rational(&term.coeff)?;
            let mut p = TestConfigQuadratic::product(&a, &b);
            for row in p.a.iter_mut() {
                for v in row.iter_mut() {
                    *v *= &c;
                }
            }
            tc = tc.add(&p);
        }
        Ok(Some(tc))
    }
}

pub fn check_k_list(ks: &[f64]) -> Result<(), ConfigError> {
    if ks.is_empty() || ks.iter().any(|k| !k.is_finite() || *k <= 0.0) || ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConfigError::BadKList);
    }
    Ok(())
}

/// Names accepted by `--surface`.
pub fn builtin_names() -> &'static [&'static str] {
    &BUILTIN_NAMES
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Open,
    Close,
}

fn tokenize(expr: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let chars: Vec<char> = expr.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1
            }
            '*' => {
                out.push(Tok::Star);
                i += 1
            }
            '(' => {
                out.push(Tok::Open);
                i += 1
            }
            ')' => {
                out.push(Tok::Close);
                i += 1
            }
            d if d.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '/' || chars[i] == '.') {
                    i += 1;
                }
                out.push(Tok::Num(chars[start..i].iter().collect()));
            }
            a if a.is_alphabetic() || a == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

struct ExprParser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    model: &'a Model,
    depth: usize,
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn sum(&mut self) -> Result<DivisorClass, String> {
        let mut acc = DivisorClass::zero(self.model.surface.dim());
        let mut first = true;
        loop {
            let mut sign = Q::from(1);
            let mut saw_op = false;
            while let Some(op @ (Tok::Plus | Tok::Minus)) = self.peek() {
                if *op == Tok::Minus {
                    sign = -sign;
                }
                saw_op = true;
                self.pos += 1;
            }
            if !first && !saw_op {
                return Ok(acc);
            }
            let t = self.term()?;
            acc = acc.add(&t.scale(&sign));
            first = false;
        }
    }

    fn term(&mut self) -> Result<DivisorClass, String> {
        let mut coeff = Q::from(1);
        if let Some(Tok::Num(n)) = self.peek().cloned() {
            self.pos += 1;
            coeff = parse_rational(&n).ok_or_else(|| format!("bad coefficient `{n}`"))?;
            if self.peek() == Some(&Tok::Star) {
                self.pos += 1;
            }
            if !matches!(self.peek(), Some(Tok::Ident(_)) | Some(Tok::Open)) {
                return Err("a coefficient must multiply a class".into());
            }
        }
        let base = match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                self.named(&name)?
            }
            Some(Tok::Open) => {
                self.pos += 1;
                self.depth += 1;
                if self.depth > 64 {
                    return Err("parentheses nested too deeply".into());
                }
                let inner = self.sum()?;
                self.depth -= 1;
                if self.peek() != Some(&Tok::Close) {
                    return Err("missing `)`".into());
                }
                self.pos += 1;
                inner
            }
            Some(t) => return Err(format!("unexpected token {t:?}")),
            None => return Err("unexpected end of expression".into()),
        };
        Ok(base.scale(&coeff))
    }

    fn named(&self, name: &str) -> Result<DivisorClass, String> {
        match name {
            "omega" => Ok(self.model.omega.clone()),
            "antiK" => Ok(self.model.surface.anticanonical.clone()),
            "K" => Ok(self.model.surface.anticanonical.neg()),
            _ => self.model.class(name).map_err(|e| e.to_string()),
        }
    }
}

/// Parses a class expression against a model's named classes.
pub fn parse_class_expr(expr: &str, model: &Model) -> Result<DivisorClass, ConfigError> {
    let err = |reason: String| ConfigError::BadClassExpr { expr: expr.into(), reason };
    let toks = tokenize(expr).map_err(err)?;
    if toks.is_empty() {
        return Err(err("empty expression".into()));
    }
    let mut p = ExprParser { toks, pos: 0, model, depth: 0 };
    let out = p.sum().map_err(err)?;
    if p.pos != p.toks.len() {
        return Err(err(format!("trailing input at token {}", p.pos)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::q;

    #[test]
    fn class_expressions() {
        let m = builtin("blpq_p2", &BTreeMap::new()).unwrap();
        let z = parse_class_expr("H - E - F", &m).unwrap();
        let direct = m.class("H").unwrap().sub(&m.class("E").unwrap()).sub(&m.class("F").unwrap());
        assert_eq!(z, direct);
        let w = parse_class_expr("1/3 antiK", &m).unwrap();
        assert_eq!(w, m.surface.anticanonical.scale(&q(1, 3)));
        let nested = parse_class_expr("-(D1 - 2*D2)", &m).unwrap();
        assert_eq!(nested, m.class("D2").unwrap().scale(&q(2, 1)).sub(&m.class("D1").unwrap()));
        for bad in ["", "H +", "2", "H)", "(H", "X9", "H $"] {
            assert!(parse_class_expr(bad, &m).is_err(), "{bad}");
        }
    }

    #[test]
    fn config_round() {
        let cfg = JobConfig::parse(
            r#"
            k_list = [3.0, 5.0, 8.0]
            z_divisor = "E"
            s = "1/2"
            [surface]
            builtin = "blp_p2"
            [kahler]
            q = "1/2"
            "#,
        )
        .unwrap();
        let m = cfg.model().unwrap();
        assert_eq!(m.params["q"], q(1, 2));
        assert!(JobConfig::parse("k_list = [3.0, 2.0]").is_err());
        assert!(JobConfig::parse("precision_bits = 64").is_err());
        assert!(JobConfig::parse("bogus = 1").is_err());
    }
}
