//! Experiment configuration: a JSON document with `model`, `run` and
//! `output` blocks.
//!
//! ```json
//! {
//!   "model": { "d": 1, "n": 2, "h": 0.25,
//!              "potential": { "kind": "alloy" },
//!              "kernel": { "kind": "compact_bump", "radius": 0.5, "height": 1.0 } },
//!   "run": { "L": [8, 16, 32, 64], "seed": 42, "grid_points": 200 },
//!   "output": { "directory": "out" }
//! }
//! ```

use std::fmt;

use idslab_core::ids::{ConvolutionOptions, ModelConfig};
use idslab_core::lattice::{BoundaryCondition, InteractionKernel, PotentialDescriptor, DEFAULT_DIM_CAP};
use idslab_core::spectral::{CountMethod, DEFAULT_DENSE_CAP};
use idslab_core::Execution;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelBlock,
    pub run: RunBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBlock {
    pub d: usize,
    pub n: usize,
    pub h: f64,
    #[serde(default)]
    pub boundary: BoundaryCondition,
    #[serde(default)]
    pub potential: PotentialDescriptor,
    #[serde(default)]
    pub kernel: InteractionKernel,
}

fn default_grid_points() -> usize {
    200
}

fn default_epsilons() -> Vec<f64> {
    vec![0.1, 0.5]
}

fn default_realizations() -> usize {
    1
}

fn default_dim_cap() -> u64 {
    DEFAULT_DIM_CAP as u64
}

fn default_dense_cap() -> usize {
    DEFAULT_DENSE_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunBlock {
    #[serde(rename = "L")]
    pub sides: Vec<f64>,
    /// `[lo, hi]`; derived from the smallest box when absent.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_epsilons")]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub method: CountMethod,
    #[serde(default)]
    pub bin_width: Option<f64>,
    #[serde(default = "default_dim_cap")]
    pub dim_cap: u64,
    #[serde(default = "default_dense_cap")]
    pub dense_cap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    /// Whitespace-separated columns with `#` comments.
    Dat,
}

fn default_directory() -> String {
    "out".into()
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputBlock {
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

/// A located configuration problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub reason: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: `{}`: {}", self.key, self.reason),
            None => write!(f, "`{}`: {}", self.key, self.reason),
        }
    }
}

/// Parsed configuration plus non-fatal warnings (unknown keys outside
/// strict mode).
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub config: ExperimentConfig,
    pub warnings: Vec<ConfigError>,
}

const TOP_KEYS: &[&str] = &["model", "run", "output"];
const MODEL_KEYS: &[&str] = &["d", "n", "h", "boundary", "potential", "kernel"];
const RUN_KEYS: &[&str] = &[
    "L",
    "window",
    "grid_points",
    "epsilon",
    "realizations",
    "seed",
    "method",
    "bin_width",
    "dim_cap",
    "dense_cap",
];
const OUTPUT_KEYS: &[&str] = &["directory", "formats"];

/// Line of the first occurrence of `"key"` in the source, 1-based.
fn locate(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}

fn located(text: &str, key: &str, reason: impl Into<String>) -> ConfigError {
    let last = key.rsplit('.').next().unwrap_or(key);
    let last = last.split('[').next().unwrap_or(last);
    ConfigError {
        line: locate(text, last),
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn unknown_keys(text: &str, value: &Value) -> Vec<ConfigError> {
    let mut out = Vec::new();
    let Some(top) = value.as_object() else {
        return out;
    };
    let mut scan = |prefix: &str, obj: &serde_json::Map<String, Value>, known: &[&str]| {
        for key in obj.keys() {
            if !known.contains(&key.as_str()) {
                let path = if prefix.is_empty() {
                    key.clone()
                } else {
                    format!("{prefix}.{key}")
                };
                out.push(located(text, &path, "unknown key"));
            }
        }
    };
    scan("", top, TOP_KEYS);
    for (block, known) in [("model", MODEL_KEYS), ("run", RUN_KEYS), ("output", OUTPUT_KEYS)] {
        if let Some(obj) = top.get(block).and_then(Value::as_object) {
            scan(block, obj, known);
        }
    }
    out
}

fn strip_unknown(value: &mut Value) {
    let Some(top) = value.as_object_mut() else {
        return;
    };
    top.retain(|k, _| TOP_KEYS.contains(&k.as_str()));
    for (block, known) in [("model", MODEL_KEYS), ("run", RUN_KEYS), ("output", OUTPUT_KEYS)] {
        if let Some(obj) = top.get_mut(block).and_then(Value::as_object_mut) {
            obj.retain(|k, _| known.contains(&k.as_str()));
        }
    }
}

/// Parses and validates a configuration document. With `strict`, unknown
/// keys are errors; otherwise they are returned as warnings.
pub fn parse_config(text: &str, strict: bool) -> Result<Parsed, Vec<ConfigError>> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| {
        vec![ConfigError {
            line: Some(e.line()),
            key: String::new(),
            reason: e.to_string(),
        }]
    })?;
    let unknown = unknown_keys(text, &value);
    if strict && !unknown.is_empty() {
        return Err(unknown);
    }
    strip_unknown(&mut value);
    let config: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        // serde reports a missing field against its parent path
        let key = match inner.strip_prefix("missing field `").and_then(|r| r.split('`').next()) {
            Some(field) if path == "." => field.to_string(),
            Some(field) => format!("{path}.{field}"),
            None => path,
        };
        vec![located(text, &key, inner)]
    })?;
    let errors = validate(text, &config);
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(Parsed {
        config,
        warnings: unknown,
    })
}

fn validate(text: &str, c: &ExperimentConfig) -> Vec<ConfigError> {
    let mut errs = Vec::new();
    let mut check = |ok: bool, key: &str, reason: &str| {
        if !ok {
            errs.push(located(text, key, reason));
        }
    };
    let m = &c.model;
    check(m.d >= 1, "model.d", "spatial dimension must be at least 1");
    check(m.n >= 1, "model.n", "particle count must be at least 1");
    check(m.h.is_finite() && m.h > 0.0, "model.h", "mesh spacing must be positive");
    if let Err(e) = m.potential.validate() {
        errs.push(located(text, "model.potential", e.to_string()));
    }
    if let Err(e) = m.kernel.validate() {
        errs.push(located(text, "model.kernel", e.to_string()));
    }

    let mut check = |ok: bool, key: &str, reason: &str| {
        if !ok {
            errs.push(located(text, key, reason));
        }
    };
    let r = &c.run;
    check(!r.sides.is_empty(), "run.L", "need at least one box size");
    check(
        r.sides.iter().all(|&l| l.is_finite() && l > 0.0),
        "run.L",
        "box sizes must be positive",
    );
    check(
        r.sides.windows(2).all(|w| w[0] < w[1]),
        "run.L",
        "box sizes must be strictly increasing",
    );
    if let Some([lo, hi]) = r.window {
        check(
            lo.is_finite() && hi.is_finite() && lo < hi,
            "run.window",
            "need lo < hi",
        );
    }
    check(r.grid_points >= 2, "run.grid_points", "need at least two grid points");
    check(
        r.epsilon.iter().all(|&e| e.is_finite() && e > 0.0),
        "run.epsilon",
        "thresholds must be positive",
    );
    check(r.realizations >= 1, "run.realizations", "need at least one realization");
    if let Some(w) = r.bin_width {
        check(w.is_finite() && w > 0.0, "run.bin_width", "must be positive");
    }
    check(r.dense_cap >= 1, "run.dense_cap", "must be positive");
    check(
        !c.output.formats.is_empty(),
        "output.formats",
        "need at least one output format",
    );
    errs
}

impl ExperimentConfig {
    /// Canonical JSON form; `parse_config(c.to_canonical_json())` returns `c`.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact canonical serialization.
    pub fn hash(&self) -> String {
        let compact = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(compact.as_bytes()))
    }

    pub fn model_config(&self, exec: Execution) -> ModelConfig {
        ModelConfig {
            d: self.model.d,
            n: self.model.n,
            h: self.model.h,
            boundary: self.model.boundary,
            potential: self.model.potential,
            seed: self.run.seed,
            dim_cap: u128::from(self.run.dim_cap),
            dense_cap: self.run.dense_cap,
            method: self.run.method,
            exec,
            convolution: ConvolutionOptions {
                bin_width: self.run.bin_width,
                ..ConvolutionOptions::default()
            },
        }
    }

    pub fn kernel(&self) -> InteractionKernel {
        self.model.kernel.resolved(self.model.h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
  "model": { "d": 1, "n": 2, "h": 0.25 },
  "run": { "L": [8, 16] }
}"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let parsed = parse_config(MINIMAL, true).unwrap();
        let c = parsed.config;
        assert_eq!(c.model.n, 2);
        assert_eq!(c.run.sides, vec![8.0, 16.0]);
        assert_eq!(c.run.grid_points, 200);
        assert_eq!(c.model.kernel, InteractionKernel::Zero);
        assert_eq!(c.output.formats, vec![OutputFormat::Csv]);
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn negative_h_names_the_key() {
        let text = MINIMAL.replace("0.25", "-0.25");
        let errs = parse_config(&text, true).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].key, "model.h");
        assert_eq!(errs[0].line, Some(2));
    }

    #[test]
    fn decreasing_sizes_are_rejected() {
        let text = MINIMAL.replace("[8, 16]", "[16, 8]");
        let errs = parse_config(&text, true).unwrap_err();
        assert_eq!(errs[0].key, "run.L");
        assert!(errs[0].reason.contains("increasing"));
    }

    #[test]
    fn missing_required_key() {
        let text = r#"{ "model": { "d": 1, "n": 2 }, "run": { "L": [8] } }"#;
        let errs = parse_config(text, true).unwrap_err();
        assert_eq!(errs[0].key, "model.h");
        assert!(errs[0].reason.contains("missing field"));
    }

    #[test]
    fn unknown_keys_depend_on_strictness() {
        let text = MINIMAL.replace("\"n\": 2", "\"n\": 2, \"colour\": 3");
        let errs = parse_config(&text, true).unwrap_err();
        assert_eq!(errs[0].key, "model.colour");
        let lenient = parse_config(&text, false).unwrap();
        assert_eq!(lenient.warnings.len(), 1);
        assert_eq!(lenient.config, parse_config(MINIMAL, true).unwrap().config);
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let errs = parse_config("{\n  \"model\": \n}", true).unwrap_err();
        assert_eq!(errs[0].line, Some(3));
    }

    #[test]
    fn descriptors_round_trip() {
        let text = r#"{
  "model": { "d": 1, "n": 2, "h": 0.25,
             "potential": { "kind": "alloy", "coupling_max": 0.5 },
             "kernel": { "kind": "yukawa" } },
  "run": { "L": [8], "window": [0.0, 4.0], "method": "inertia" }
}"#;
        let c = parse_config(text, true).unwrap().config;
        let canonical = c.to_canonical_json();
        let again = parse_config(&canonical, true).unwrap().config;
        assert_eq!(again, c);
        assert_eq!(again.to_canonical_json(), canonical);
        assert_eq!(again.hash(), c.hash());
        assert_eq!(
            c.kernel(),
            InteractionKernel::Yukawa {
                regularization: Some(0.25)
            }
        );
    }

    #[test]
    fn bad_descriptor_is_located() {
        let text = r#"{
  "model": { "d": 1, "n": 2, "h": 0.25,
             "kernel": { "kind": "compact_bump", "radius": -1.0, "height": 1.0 } },
  "run": { "L": [8] }
}"#;
        let errs = parse_config(text, true).unwrap_err();
        assert_eq!(errs[0].key, "model.kernel");
        assert_eq!(errs[0].line, Some(3));
    }
}
