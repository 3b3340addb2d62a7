//! Run configuration: a TOML file overlaid with command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use causal_survey::baselines::CorrelationMethod;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Values as they appear in a config file; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub seed: Option<u64>,
    pub high: Option<f64>,
    pub low: Option<f64>,
    pub resamples: Option<usize>,
    pub corr_method: Option<String>,
    pub corr_threshold: Option<f64>,
    pub penalty: Option<f64>,
    pub out: Option<PathBuf>,
    pub max_missing: Option<f64>,
    pub neutral: Option<f64>,
    pub nodes: Option<usize>,
    pub samples: Option<usize>,
    pub degree: Option<f64>,
    pub likert: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fields set in `flags` win over fields set here.
    pub fn overlay(self, flags: FileConfig) -> FileConfig {
        FileConfig {
            input: flags.input.or(self.input),
            schema: flags.schema.or(self.schema),
            seed: flags.seed.or(self.seed),
            high: flags.high.or(self.high),
            low: flags.low.or(self.low),
            resamples: flags.resamples.or(self.resamples),
            corr_method: flags.corr_method.or(self.corr_method),
            corr_threshold: flags.corr_threshold.or(self.corr_threshold),
            penalty: flags.penalty.or(self.penalty),
            out: flags.out.or(self.out),
            max_missing: flags.max_missing.or(self.max_missing),
            neutral: flags.neutral.or(self.neutral),
            nodes: flags.nodes.or(self.nodes),
            samples: flags.samples.or(self.samples),
            degree: flags.degree.or(self.degree),
            likert: flags.likert.or(self.likert),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub seed: u64,
    pub high: f64,
    pub low: f64,
    pub resamples: usize,
    pub corr_method: CorrelationMethod,
    pub corr_threshold: f64,
    pub penalty: f64,
    pub out: PathBuf,
    pub max_missing: f64,
    pub neutral: f64,
    pub nodes: usize,
    pub samples: usize,
    pub degree: f64,
    pub likert: bool,
}

/// Settings that determine artifact contents. Paths are left out so that a
/// run is identified by input bytes rather than where they live.
#[derive(Serialize)]
struct Canonical<'a> {
    seed: u64,
    high: f64,
    low: f64,
    resamples: usize,
    corr_method: &'a str,
    corr_threshold: f64,
    penalty: f64,
    max_missing: f64,
    neutral: f64,
    nodes: usize,
    samples: usize,
    degree: f64,
    likert: bool,
}

impl RunConfig {
    pub fn resolve(file: FileConfig) -> Result<Self> {
        let corr_method = match file.corr_method.as_deref() {
            None => CorrelationMethod::Pearson,
            Some(s) => s.parse().map_err(|e: String| anyhow::anyhow!(e))?,
        };
        let cfg = RunConfig {
            input: file.input,
            schema: file.schema,
            seed: file.seed.unwrap_or(0),
            high: file.high.unwrap_or(5.0),
            low: file.low.unwrap_or(3.0),
            resamples: file.resamples.unwrap_or(1000),
            corr_method,
            corr_threshold: file.corr_threshold.unwrap_or(0.5),
            penalty: file.penalty.unwrap_or(1.0),
            out: file.out.unwrap_or_else(|| PathBuf::from("out")),
            max_missing: file.max_missing.unwrap_or(0.5),
            neutral: file.neutral.unwrap_or(4.0),
            nodes: file.nodes.unwrap_or(10),
            samples: file.samples.unwrap_or(1000),
            degree: file.degree.unwrap_or(2.0),
            likert: file.likert.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(1.0..=7.0).contains(&self.low) || !(1.0..=7.0).contains(&self.high) || self.low >= self.high {
            bail!("thresholds must satisfy 1 <= low < high <= 7 (got low {}, high {})", self.low, self.high);
        }
        if self.resamples == 0 {
            bail!("resamples must be at least 1");
        }
        if !(self.penalty > 0.0) {
            bail!("penalty must be positive");
        }
        if !(0.0..=1.0).contains(&self.max_missing) {
            bail!("max-missing must lie in [0, 1]");
        }
        if !(self.corr_threshold >= 0.0) {
            bail!("corr-threshold must be non-negative");
        }
        Ok(())
    }

    pub fn input(&self) -> Result<&Path> {
        self.input.as_deref().context("no input table given (use --input)")
    }

    pub fn schema(&self) -> Result<&Path> {
        self.schema.as_deref().context("no schema given (use --schema)")
    }

    /// SHA-256 over the canonical settings plus the input and schema bytes,
    /// first 16 hex digits.
    pub fn hash(&self) -> Result<String> {
        let canonical = Canonical {
            seed: self.seed,
            high: self.high,
            low: self.low,
            resamples: self.resamples,
            corr_method: self.corr_method.as_str(),
            corr_threshold: self.corr_threshold,
            penalty: self.penalty,
            max_missing: self.max_missing,
            neutral: self.neutral,
            nodes: self.nodes,
            samples: self.samples,
            degree: self.degree,
            likert: self.likert,
        };
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&canonical)?);
        for path in [&self.input, &self.schema] {
            h.update(b"\0");
            if let Some(p) = path {
                h.update(std::fs::read(p).with_context(|| format!("reading {}", p.display()))?);
            }
        }
        Ok(hex::encode(&h.finalize()[..8]))
    }

    /// `key = value` lines echoed into the report.
    pub fn echo(&self) -> Vec<(String, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "-".into());
        vec![
            ("input".into(), path(&self.input)),
            ("schema".into(), path(&self.schema)),
            ("seed".into(), self.seed.to_string()),
            ("high".into(), self.high.to_string()),
            ("low".into(), self.low.to_string()),
            ("resamples".into(), self.resamples.to_string()),
            ("corr-method".into(), self.corr_method.as_str().into()),
            ("corr-threshold".into(), self.corr_threshold.to_string()),
            ("penalty".into(), self.penalty.to_string()),
            ("max-missing".into(), self.max_missing.to_string()),
            ("neutral".into(), self.neutral.to_string()),
        ]
    }
}
