//! Run configuration: the shipped defaults file plus an optional user overlay.
//!
//! The overlay may only set keys that exist in the defaults, with the same value type
//! (integers are accepted where floats are expected). Errors carry line numbers.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use toml::de::{DeTable, DeValue};
use toml::{Table, Value};

pub const DEFAULTS: &str = include_str!("../defaults.toml");
pub const VERSION: i64 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub threads: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSection {
    pub kind: String,
    pub circle_radius: f64,
    pub sphere_radius: f64,
    pub n_dynamics: usize,
    pub n_spectrum: usize,
    pub circle_n: usize,
    pub residual_tol: f64,
    pub eigen_tol: f64,
    pub criticality_step: f64,
    pub criticality_tol: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub monotone_dt: f64,
    pub cap: f64,
    pub rel: f64,
    pub abs: f64,
    pub min_dt: f64,
    pub noise_floor: f64,
    pub zero_horizon: f64,
    pub zero_tol: f64,
    pub trajectories: usize,
    pub amplitude: f64,
    pub horizon: f64,
    pub ode_n: usize,
    pub ode_dt: f64,
    pub ode_tol: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    pub delta: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ManifoldsSection {
    pub modes: usize,
    pub radii: Vec<f64>,
    pub directions: usize,
    pub sample_modes: usize,
    pub dt: f64,
    pub horizon: f64,
    pub center_horizon: f64,
    pub center_mode: usize,
    pub tol: f64,
    pub max_sweeps: usize,
    pub tail_tol: f64,
    pub residual_max: f64,
    pub slope_min: f64,
    pub lipschitz_max: f64,
    pub attraction_starts: usize,
    pub attraction_checkpoints: Vec<f64>,
    pub attraction_max: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ParentSection {
    pub amplitude: f64,
    pub horizon: f64,
    pub dt: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConeSection {
    pub trials: usize,
    pub pairs: usize,
    pub steps: usize,
    pub kappa: f64,
    pub c1: f64,
    pub minus_modes: usize,
    pub growth_tol: f64,
    pub eigenmode_tol: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HarnackSection {
    pub trials: usize,
    pub horizon: f64,
    pub dt: f64,
    pub bump_width: f64,
    pub initial_ratio: f64,
    pub bound: f64,
    pub tail_variation: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LiYauSection {
    pub dt: f64,
    pub window: f64,
    pub amplitude: f64,
    pub c_max: f64,
    pub refinement_tol: f64,
    pub ablation_widths: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DriftSection {
    pub runs: usize,
    pub horizon: f64,
    pub dt: f64,
    pub kappa: f64,
    pub recurrences: usize,
    pub eps_points: usize,
    pub random_modes: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GapSection {
    pub deltas: Vec<f64>,
    pub circle_deltas: Vec<f64>,
    pub t_end: f64,
    pub dt: f64,
    pub min_slope: f64,
    pub compose_sizes: Vec<f64>,
    pub compose_g: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EntropySection {
    pub t_min: f64,
    pub t_max: f64,
    pub box_scale: f64,
    pub tol: f64,
    pub max_iters: u64,
    pub s_grid: Vec<f64>,
    pub fit_tol: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    pub eta: Vec<f64>,
    pub delta: f64,
    pub kappa: f64,
    pub horizon: f64,
    pub band: Vec<f64>,
    pub gap_tol: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AncientSection {
    pub sizes: Vec<f64>,
    pub delta: f64,
    pub window: f64,
    pub cauchy_factor: f64,
    pub lp_tol: f64,
    pub minus_weight: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: i64,
    pub run: RunSection,
    pub surface: SurfaceSection,
    pub flow: FlowSection,
    pub truncation: TruncationSection,
    pub manifolds: ManifoldsSection,
    pub parent: ParentSection,
    pub cone: ConeSection,
    pub harnack: HarnackSection,
    pub liyau: LiYauSection,
    pub drift: DriftSection,
    pub gap: GapSection,
    pub entropy: EntropySection,
    pub pipeline: PipelineSection,
    pub ancient: AncientSection,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "float",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "table",
    }
}

/// Coerces `user` to the type of `default`, or explains the mismatch.
fn coerce(default: &Value, user: Value) -> std::result::Result<Value, String> {
    match (default, user) {
        (Value::Float(_), Value::Integer(i)) => Ok(Value::Float(i as f64)),
        (Value::Array(d), Value::Array(items)) => {
            let proto = d.first();
            let out: std::result::Result<Vec<Value>, String> = items
                .into_iter()
                .map(|x| match proto {
                    Some(p) => coerce(p, x),
                    None => Ok(x),
                })
                .collect();
            out.map(Value::Array)
        }
        (d, u) if std::mem::discriminant(d) == std::mem::discriminant(&u) => Ok(u),
        (d, u) => Err(format!("expected {}, found {}", type_name(d), type_name(&u))),
    }
}

fn value_span<'a>(doc: &'a DeTable, section: Option<&str>, key: &str) -> Option<std::ops::Range<usize>> {
    let table: &DeTable = match section {
        None => doc,
        Some(s) => match doc.iter().find(|(k, _)| k.get_ref() == s).map(|(_, v)| v.get_ref()) {
            Some(DeValue::Table(t)) => t,
            _ => return None,
        },
    };
    table.iter().find(|(k, _)| k.get_ref() == key).map(|(k, _)| k.span())
}

/// Merges a user overlay into the defaults table, rejecting unknown keys and type changes.
fn overlay(base: &mut Table, text: &str) -> Result<()> {
    let at = |span: Option<std::ops::Range<usize>>| span.map(|s| format!("line {}: ", line_of(text, s.start))).unwrap_or_default();
    let doc = DeTable::parse(text).map_err(|e| Error::Config(format!("{}{}", at(e.span()), e.message().trim())))?;
    let doc = doc.get_ref();
    let user: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(format!("{}{}", at(e.span()), e.message().trim())))?;
    for (name, value) in user {
        let Some(slot) = base.get_mut(&name) else {
            return Err(Error::Config(format!("{}unknown key `{name}`", at(value_span(doc, None, &name)))));
        };
        match (slot, value) {
            (Value::Table(dst), Value::Table(src)) => {
                for (key, v) in src {
                    let span = value_span(doc, Some(&name), &key);
                    let Some(d) = dst.get(&key) else {
                        return Err(Error::Config(format!("{}unknown key `{name}.{key}`", at(span))));
                    };
                    let v = coerce(d, v).map_err(|m| Error::Config(format!("{}`{name}.{key}`: {m}", at(span))))?;
                    dst.insert(key, v);
                }
            }
            (slot @ Value::Table(_), v) | (slot, v @ Value::Table(_)) => {
                let m = format!("`{name}`: expected {}, found {}", type_name(slot), type_name(&v));
                return Err(Error::Config(format!("{}{m}", at(value_span(doc, None, &name)))));
            }
            (slot, v) => {
                let span = value_span(doc, None, &name);
                *slot = coerce(slot, v).map_err(|m| Error::Config(format!("{}`{name}`: {m}", at(span))))?;
            }
        }
    }
    Ok(())
}

impl Config {
    pub fn defaults() -> Config {
        Config::load(None).expect("shipped defaults parse")
    }

    pub fn load(user: Option<&str>) -> Result<Config> {
        let mut base: Table = DEFAULTS.parse().map_err(|e: toml::de::Error| Error::Config(format!("defaults: {e}")))?;
        if let Some(text) = user {
            overlay(&mut base, text)?;
        }
        let cfg: Config = Value::Table(base).try_into().map_err(|e: toml::de::Error| Error::Config(e.message().trim().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Config::load(Some(&text)).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Canonical TOML text of the effective configuration (hashed into manifests).
    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    /// Flat key → value view for report inputs.
    pub fn flat(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        if let Ok(Value::Table(t)) = Value::try_from(self) {
            for (s, v) in t {
                match v {
                    Value::Table(inner) => {
                        for (k, x) in inner {
                            out.insert(format!("{s}.{k}"), x.to_string());
                        }
                    }
                    x => {
                        out.insert(s, x.to_string());
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.version != VERSION {
            return bad(format!("config version {} is not supported (expected {VERSION})", self.version));
        }
        if !["circle", "sphere", "torus"].contains(&self.surface.kind.as_str()) {
            return bad(format!("surface.kind `{}`: expected circle, sphere or torus", self.surface.kind));
        }
        let positive = [
            ("surface.circle_radius", self.surface.circle_radius),
            ("surface.sphere_radius", self.surface.sphere_radius),
            ("flow.monotone_dt", self.flow.monotone_dt),
            ("flow.cap", self.flow.cap),
            ("flow.min_dt", self.flow.min_dt),
            ("truncation.delta", self.truncation.delta),
            ("manifolds.dt", self.manifolds.dt),
            ("manifolds.horizon", self.manifolds.horizon),
            ("manifolds.tol", self.manifolds.tol),
            ("parent.dt", self.parent.dt),
            ("parent.horizon", self.parent.horizon),
            ("cone.kappa", self.cone.kappa),
            ("cone.c1", self.cone.c1),
            ("harnack.dt", self.harnack.dt),
            ("harnack.bump_width", self.harnack.bump_width),
            ("liyau.dt", self.liyau.dt),
            ("liyau.window", self.liyau.window),
            ("drift.dt", self.drift.dt),
            ("drift.horizon", self.drift.horizon),
            ("gap.t_end", self.gap.t_end),
            ("gap.dt", self.gap.dt),
            ("entropy.t_min", self.entropy.t_min),
            ("pipeline.delta", self.pipeline.delta),
            ("ancient.delta", self.ancient.delta),
            ("ancient.window", self.ancient.window),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{k} must be positive, got {v}"));
            }
        }
        if self.entropy.t_max <= self.entropy.t_min {
            return bad("entropy.t_max must exceed entropy.t_min".into());
        }
        if self.surface.n_dynamics < 16 || self.surface.n_dynamics % 2 != 0 || self.surface.n_spectrum % 2 != 0 {
            return bad("surface grid sizes must be even and at least 16".into());
        }
        if self.manifolds.modes == 0 || self.manifolds.modes > self.surface.n_dynamics {
            return bad(format!("manifolds.modes must lie in [1, {}]", self.surface.n_dynamics));
        }
        if self.pipeline.band.len() != 2 || !(self.pipeline.band[0] < 1.0 && self.pipeline.band[1] > 1.0) {
            return bad("pipeline.band must be [lo, hi] with lo < 1 < hi".into());
        }
        if self.ancient.sizes.len() < 3 || self.ancient.sizes.windows(2).any(|w| !(w[1] < w[0] && w[1] > 0.0)) {
            return bad("ancient.sizes needs at least three positive decreasing values".into());
        }
        if self.drift.eps_points < 3 || self.drift.recurrences == 0 {
            return bad("drift.eps_points must be at least 3 and drift.recurrences at least 1".into());
        }
        if self.cone.trials == 0 || self.harnack.trials == 0 || self.drift.runs == 0 {
            return bad("trial counts must be positive".into());
        }
        if [&self.gap.deltas, &self.gap.circle_deltas, &self.pipeline.eta, &self.entropy.s_grid].iter().any(|g| g.is_empty()) {
            return bad("parameter grids must be non-empty".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_load() {
        let c = Config::defaults();
        assert_eq!(c.version, VERSION);
        assert_eq!(c.surface.kind, "torus");
        assert_eq!(c.ancient.sizes.len(), 3);
    }

    #[test]
    fn overlay_merges_by_table() {
        let c = Config::load(Some("[cone]\ntrials = 60\n[flow]\nmonotone_dt = 1\n")).unwrap();
        assert_eq!(c.cone.trials, 60);
        assert_eq!(c.cone.pairs, 25);
        assert_eq!(c.flow.monotone_dt, 1.0);
    }

    #[test]
    fn unknown_key_reports_line() {
        let e = Config::load(Some("[cone]\ntrials = 60\n\nbogus = 3\n")).unwrap_err();
        let m = e.to_string();
        assert!(m.contains("line 4") && m.contains("cone.bogus"), "{m}");
        let e = Config::load(Some("[nosuch]\nx = 1\n")).unwrap_err().to_string();
        assert!(e.contains("line 1") && e.contains("nosuch"), "{e}");
    }

    #[test]
    fn type_mismatch_reports_line() {
        let m = Config::load(Some("\n[flow]\nmonotone_dt = \"small\"\n")).unwrap_err().to_string();
        assert!(m.contains("line 3") && m.contains("expected float"), "{m}");
    }

    #[test]
    fn syntax_error_reports_line() {
        let m = Config::load(Some("[flow]\nmonotone_dt = = 2\n")).unwrap_err().to_string();
        assert!(m.contains("line 2"), "{m}");
    }

    #[test]
    fn semantic_checks() {
        assert!(Config::load(Some("[truncation]\ndelta = -1.0\n")).is_err());
        assert!(Config::load(Some("[surface]\nkind = \"cube\"\n")).is_err());
        assert!(Config::load(Some("version = 2\n")).is_err());
    }

    #[test]
    fn toml_roundtrip() {
        let c = Config::defaults();
        let again = Config::load(Some(&c.to_toml())).unwrap();
        assert_eq!(c, again);
    }
}
