//! Strict config parsing: a versioned envelope, then a per-command body with
//! unknown keys rejected.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use factorspace::group::GroupSpec;
use factorspace::measure::SamplerSpec;
use factorspace::modulus::{FamilySpec, GridSpec};
use factorspace::region::{QuotientSet, Region};
use factorspace::specs::{DensitySpec, MapSpec, PointSpec};
use factorspace::verify::VerifyConfig;

pub const SCHEMA: &str = "1";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config: {0}")]
pub struct ConfigError(pub String);

impl ConfigError {
    pub fn new(msg: impl Into<String>) -> Self {
        ConfigError(msg.into())
    }
}

fn default_word_len() -> usize {
    factorspace::quotient::DEFAULT_MAX_WORD_LEN
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Distance {
    pub group: GroupSpec,
    /// Exactly two points.
    pub points: Vec<PointSpec>,
    #[serde(default = "default_word_len")]
    pub max_word_len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Orbit {
    pub group: GroupSpec,
    pub seed_point: PointSpec,
    pub center: PointSpec,
    pub radius: f64,
    #[serde(default = "default_word_len")]
    pub max_word_len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dirichlet {
    pub group: GroupSpec,
    pub p0: PointSpec,
    pub points: Vec<PointSpec>,
    #[serde(default = "default_word_len")]
    pub max_word_len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measure {
    /// Quotient measure of `set` when present, ball measure of `region` otherwise.
    #[serde(default)]
    pub group: Option<GroupSpec>,
    #[serde(default)]
    pub region: Option<Region>,
    #[serde(default)]
    pub set: Option<QuotientSet>,
    #[serde(default)]
    pub p0: Option<PointSpec>,
    #[serde(default)]
    pub dimension: Option<usize>,
    #[serde(default)]
    pub sampler: SamplerSpec,
    #[serde(default = "default_word_len")]
    pub max_word_len: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modulus {
    /// Paths live in the quotient of this group; in the ball when absent.
    #[serde(default)]
    pub group: Option<GroupSpec>,
    pub family: FamilySpec,
    pub grid: GridSpec,
    /// Optional closed-form value to compare against.
    #[serde(default)]
    pub reference: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dilatation {
    pub map: MapSpec,
    #[serde(default)]
    pub group: Option<GroupSpec>,
    #[serde(default)]
    pub dimension: Option<usize>,
    #[serde(default)]
    pub points: Vec<PointSpec>,
    /// Additional uniform samples in `B(0, sample_radius)`.
    #[serde(default)]
    pub samples: usize,
    #[serde(default)]
    pub sample_radius: Option<f64>,
    #[serde(default = "default_word_len")]
    pub max_word_len: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_m_tilde() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Verify {
    pub group: GroupSpec,
    pub map: MapSpec,
    pub family: FamilySpec,
    pub density: DensitySpec,
    #[serde(default = "default_m_tilde")]
    pub m_tilde: usize,
    pub verify: VerifyConfig,
}

fn default_eps_max() -> f64 {
    0.4
}

fn default_levels() -> usize {
    8
}

fn default_fmo_samples() -> usize {
    20_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fmo {
    pub group: GroupSpec,
    #[serde(rename = "Q", alias = "q")]
    pub q: DensitySpec,
    #[serde(default)]
    pub p0: Option<PointSpec>,
    /// Explicit decreasing radii; dyadic from `eps_max` otherwise.
    #[serde(default)]
    pub eps: Option<Vec<f64>>,
    #[serde(default = "default_eps_max")]
    pub eps_max: f64,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_fmo_samples")]
    pub samples: usize,
    #[serde(default = "default_word_len")]
    pub max_word_len: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_r_max() -> f64 {
    0.3
}

fn default_radii_levels() -> usize {
    5
}

fn default_probe_samples() -> usize {
    400
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Equicontinuity {
    pub group: GroupSpec,
    pub maps: Vec<MapSpec>,
    /// Inclusive range of `m` each indexed map in `maps` is expanded over.
    #[serde(default)]
    pub m_range: Option<[u32; 2]>,
    #[serde(default)]
    pub p0: Option<PointSpec>,
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_radii_levels")]
    pub levels: usize,
    #[serde(default = "default_probe_samples")]
    pub samples: usize,
    #[serde(default = "default_word_len")]
    pub max_word_len: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Distance(Distance),
    Orbit(Orbit),
    Dirichlet(Dirichlet),
    Measure(Measure),
    Modulus(Modulus),
    Dilatation(Dilatation),
    VerifyPoletsky(Verify),
    VerifyInverse(Verify),
    Fmo(Fmo),
    Equicontinuity(Equicontinuity),
}

#[derive(Debug, Clone, Serialize)]
pub struct Config {
    pub command: String,
    pub body: Command,
    /// The body as given, with the effective seed filled in.
    pub echo: Value,
    pub seed: Option<u64>,
}

fn body<T: DeserializeOwned>(v: Value) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(format!("field `{path}`: {}", e.into_inner()))
    })
}

const COMMANDS: [&str; 10] = [
    "distance",
    "orbit",
    "dirichlet",
    "measure",
    "modulus",
    "dilatation",
    "verify-poletsky",
    "verify-inverse",
    "fmo",
    "equicontinuity",
];

/// Parses a config document. `seed_override` replaces any seed in it.
pub fn parse_config(text: &str, seed_override: Option<u64>) -> Result<Config, ConfigError> {
    let mut doc: Value = serde_json::from_str(text)
        .map_err(|e| ConfigError::new(format!("malformed JSON at line {}, column {}: {e}", e.line(), e.column())))?;
    let obj = doc.as_object_mut().ok_or_else(|| ConfigError::new("top level must be an object"))?;
    match obj.remove("schema") {
        Some(Value::String(s)) if s == SCHEMA => {}
        Some(other) => return Err(ConfigError::new(format!("field `schema`: unsupported version {other}, expected \"1\""))),
        None => return Err(ConfigError::new("field `schema`: missing (expected \"1\")")),
    }
    let command = match obj.remove("command") {
        Some(Value::String(s)) => s,
        Some(_) => return Err(ConfigError::new("field `command`: expected a string")),
        None => return Err(ConfigError::new("field `command`: missing")),
    };
    if let Some(seed) = seed_override {
        obj.insert("seed".into(), Value::from(seed));
    }
    // seeds live inside the verify block for the inequality checks
    if command.starts_with("verify-") {
        if let (Some(seed), Some(Value::Object(v))) = (seed_override, obj.get_mut("verify")) {
            v.insert("seed".into(), Value::from(seed));
        }
    }
    let echo = doc.clone();
    let b = match command.as_str() {
        "distance" => Command::Distance(body(doc)?),
        "orbit" => Command::Orbit(body(doc)?),
        "dirichlet" => Command::Dirichlet(body(doc)?),
        "measure" => Command::Measure(body(doc)?),
        "modulus" => Command::Modulus(body(doc)?),
        "dilatation" => Command::Dilatation(body(doc)?),
        "verify-poletsky" => Command::VerifyPoletsky(body(doc)?),
        "verify-inverse" => Command::VerifyInverse(body(doc)?),
        "fmo" => Command::Fmo(body(doc)?),
        "equicontinuity" => Command::Equicontinuity(body(doc)?),
        other => {
            return Err(ConfigError::new(format!("field `command`: unknown command `{other}`, expected one of {}", COMMANDS.join(", "))))
        }
    };
    let seed = match &b {
        Command::Distance(_) | Command::Orbit(_) | Command::Dirichlet(_) => None,
        Command::Modulus(c) => c.seed,
        Command::Measure(c) => Some(c.seed.ok_or_else(|| missing_seed("measure"))?),
        Command::Dilatation(c) => {
            if c.samples > 0 {
                Some(c.seed.ok_or_else(|| missing_seed("dilatation with samples"))?)
            } else {
                c.seed
            }
        }
        Command::VerifyPoletsky(c) | Command::VerifyInverse(c) => Some(c.verify.seed),
        Command::Fmo(c) => Some(c.seed.ok_or_else(|| missing_seed("fmo"))?),
        Command::Equicontinuity(c) => Some(c.seed.ok_or_else(|| missing_seed("equicontinuity"))?),
    };
    validate(&b)?;
    Ok(Config { command, body: b, echo, seed })
}

fn missing_seed(what: &str) -> ConfigError {
    ConfigError::new(format!("field `seed`: required for {what} (or pass --seed)"))
}

fn positive(name: &str, v: usize) -> Result<(), ConfigError> {
    if v == 0 {
        return Err(ConfigError::new(format!("field `{name}`: must be positive")));
    }
    Ok(())
}

/// Budget positivity and shape checks that serde cannot express.
fn validate(c: &Command) -> Result<(), ConfigError> {
    match c {
        Command::Distance(d) => {
            positive("max_word_len", d.max_word_len)?;
            if d.points.len() != 2 {
                return Err(ConfigError::new("field `points`: exactly two points are required"));
            }
        }
        Command::Orbit(o) => positive("max_word_len", o.max_word_len)?,
        Command::Dirichlet(d) => positive("max_word_len", d.max_word_len)?,
        Command::Measure(m) => {
            positive("sampler.samples", m.sampler.samples)?;
            if m.region.is_some() == m.set.is_some() {
                return Err(ConfigError::new("exactly one of `region` and `set` is required"));
            }
            if m.set.is_some() && m.group.is_none() {
                return Err(ConfigError::new("field `group`: required for a quotient `set`"));
            }
        }
        Command::Modulus(m) => {
            positive("grid.resolution", m.grid.resolution)?;
            positive("grid.max_iterations", m.grid.max_iterations)?;
        }
        Command::Dilatation(d) => {
            if d.points.is_empty() && d.samples == 0 {
                return Err(ConfigError::new("give `points` or a positive `samples`"));
            }
        }
        Command::VerifyPoletsky(v) | Command::VerifyInverse(v) => {
            positive("m_tilde", v.m_tilde)?;
            positive("verify.sampler.samples", v.verify.sampler.samples)?;
            positive("verify.grid.resolution", v.verify.grid.resolution)?;
            positive("verify.max_word_len", v.verify.max_word_len)?;
        }
        Command::Fmo(f) => {
            positive("samples", f.samples)?;
            positive("levels", f.levels)?;
        }
        Command::Equicontinuity(e) => {
            positive("samples", e.samples)?;
            positive("levels", e.levels)?;
            if e.maps.is_empty() {
                return Err(ConfigError::new("field `maps`: at least one map is required"));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_is_checked() {
        let ok = r#"{"schema": "1", "command": "distance", "group": {"cyclic": {"length": 1}}, "points": [{"axis": 0}, {"axis": 0.7}]}"#;
        assert!(parse_config(ok, None).is_ok());
        let e = parse_config(&ok.replace("\"1\"", "\"2\""), None).unwrap_err();
        assert!(e.0.contains("schema"));
        let e = parse_config(&ok.replace("distance", "distanse"), None).unwrap_err();
        assert!(e.0.contains("command"));
        let e = parse_config("{\"schema\": \"1\",\n \"command\": }", None).unwrap_err();
        assert!(e.0.contains("line 2"), "{e}");
    }

    #[test]
    fn unknown_fields_are_named() {
        let cfg = r#"{"schema": "1", "command": "fmo", "group": {"cyclic": {"length": 1}}, "Q": "log_e_over_r", "seed": 1, "levles": 8}"#;
        let e = parse_config(cfg, None).unwrap_err();
        assert!(e.0.contains("levles"), "{e}");
        let cfg = r#"{"schema": "1", "command": "modulus", "family": {"annulus": {"center": [0, 0], "inner": 0.25, "outer": 0.5, "pats": 8}}, "grid": {"metric": "euclidean"}}"#;
        let e = parse_config(cfg, None).unwrap_err();
        assert!(e.0.contains("family") && e.0.contains("pats"), "{e}");
    }

    #[test]
    fn seeds_are_mandatory_and_overridable() {
        let cfg = r#"{"schema": "1", "command": "fmo", "group": {"cyclic": {"length": 1}}, "Q": "log_e_over_r"}"#;
        assert!(parse_config(cfg, None).unwrap_err().0.contains("seed"));
        let c = parse_config(cfg, Some(9)).unwrap();
        assert_eq!(c.seed, Some(9));
        assert_eq!(c.echo["seed"], 9);
    }

    #[test]
    fn budgets_must_be_positive() {
        let cfg = r#"{"schema": "1", "command": "fmo", "group": {"cyclic": {"length": 1}}, "Q": "log_e_over_r", "seed": 1, "samples": 0}"#;
        assert!(parse_config(cfg, None).unwrap_err().0.contains("samples"));
    }
}
