//! Run configuration: a JSON document whose unknown keys are rejected.
//!
//! Every section is optional; `{}` is the small-data default run on a
//! 64×64 grid.

use std::path::PathBuf;

use oldroyd_core::diagnostics::DiagnosticParams;
use oldroyd_core::initial::{InitialData, Recipe};
use oldroyd_core::integrator::StepperConfig;
use oldroyd_core::{Grid, ModelParams};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

/// Environment variable naming the directory under which outputs are written
/// when neither `--output` nor `output.directory` is given.
pub const OUTPUT_ROOT_ENV: &str = "OLDROYD_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub d: usize,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { d: 2, n: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Snapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: Option<PathBuf>,
    /// Snapshot cadence; must be a multiple of the diagnostic interval.
    pub snapshot_interval: Option<f64>,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: None, snapshot_interval: None, formats: vec![Format::Csv, Format::Json] }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub model: ModelParams,
    pub stepper: StepperConfig,
    pub diagnostics: DiagnosticParams,
    pub initial: InitialData,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::new(self.grid.d, self.grid.n)?)
    }

    pub fn sobolev_index(&self) -> f64 {
        self.diagnostics.sobolev_index(self.grid.d)
    }
}

/// A configuration that passed validation, with the hypothesis warnings it raised.
#[derive(Debug, Clone)]
pub struct Validated {
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

/// Parses and checks a raw document. All problems are reported together.
pub fn validate_config(raw: &Value) -> Result<Validated> {
    let config: RunConfig = serde_json::from_value(raw.clone()).map_err(|e| CliError::Config(vec![e.to_string()]))?;
    check(config)
}

/// Checks an already typed configuration.
pub fn check(config: RunConfig) -> Result<Validated> {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let d = config.grid.d;
    if let Err(e) = Grid::new(d, config.grid.n) {
        errors.push(e.to_string());
    } else if config.grid.n.is_multiple_of(3) {
        warnings.push(format!(
            "grid.n = {} is a multiple of 3: products still alias onto the |k_i| = n/3 shell",
            config.grid.n
        ));
    }
    match config.model.validate() {
        Ok(w) => warnings.extend(w),
        Err(e) => errors.extend(e),
    }
    errors.extend(config.stepper.validate());
    let (e, w) = config.diagnostics.check(d, &config.model, config.model.nu > 0.0);
    errors.extend(e);
    warnings.extend(w);
    let init = &config.initial;
    if !(init.epsilon >= 0.0 && init.epsilon.is_finite()) {
        errors.push(format!("initial.epsilon must be finite and >= 0, got {}", init.epsilon));
    }
    if init.recipe == Recipe::RandomBand && !(init.band >= 1.0) {
        errors.push(format!("initial.band must be >= 1, got {}", init.band));
    }
    if let Some(si) = config.output.snapshot_interval {
        let ratio = si / config.diagnostics.interval;
        if !(si > 0.0) {
            errors.push(format!("output.snapshot_interval must be > 0, got {si}"));
        } else if (ratio - ratio.round()).abs() > 1e-9 * ratio || ratio.round() < 1.0 {
            errors.push(format!(
                "output.snapshot_interval = {si} is not a multiple of diagnostics.interval = {}",
                config.diagnostics.interval
            ));
        }
    }
    if errors.is_empty() {
        Ok(Validated { config, warnings })
    } else {
        Err(CliError::Config(errors))
    }
}

/// Sets `key` (a dotted path such as `model.nu`) to `value` inside `doc`.
/// `value` is read as JSON when it parses, otherwise as a string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let bad = |msg: String| CliError::Config(vec![msg]);
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| bad(format!("override '{assignment}' is not of the form KEY=VALUE")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad(format!("override key '{key}' has an empty segment")));
    }
    let mut node = doc;
    for part in &parts[..parts.len() - 1] {
        if !node.is_object() {
            return Err(bad(format!("override '{key}': '{part}' is inside a non-object")));
        }
        node = node
            .as_object_mut()
            .expect("checked")
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    match node.as_object_mut() {
        Some(obj) => {
            obj.insert(parts[parts.len() - 1].to_string(), value);
            Ok(())
        }
        None => Err(bad(format!("override '{key}' targets a non-object"))),
    }
}

/// Output directory: `--output`, else `output.directory`, else
/// `$OLDROYD_OUTPUT_ROOT/<name>`, else `output/<name>`.
pub fn output_dir(cli: Option<PathBuf>, config: &RunConfig, name: &str) -> PathBuf {
    cli.or_else(|| config.output.directory.clone()).unwrap_or_else(|| {
        let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("output"));
        root.join(name)
    })
}
