//! Merging of command-line flags with an optional JSON config file.
//! Explicit flags always win; the config file supplies fallbacks; built-in
//! defaults cover the rest. The fully resolved configuration is echoed
//! into `run_config.json` next to every artifact so a run can be
//! reproduced from its outputs alone.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use stylodelta::metrics::{MetricKind, MetricSpec, RtdNormalizerMode};
use stylodelta::pipeline::{
    PipelineParams, DEFAULT_DDOF, DEFAULT_EPSILON, DEFAULT_MFW, DEFAULT_VOCAB_CAP,
};
use stylodelta::standardize::ZMode;

/// Optional defaults loaded from `--config <file>`. Every field may be
/// omitted; unknown keys are rejected so typos do not silently vanish.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub manifest: Option<PathBuf>,
    pub vocab_cap: Option<usize>,
    pub mfw: Option<usize>,
    pub zscore: Option<String>,
    pub ddof: Option<u8>,
    pub epsilon: Option<f64>,
    pub metric: Option<String>,
    pub pi1: Option<f64>,
    pub alpha: Option<f64>,
    pub rtd_normalizer: Option<String>,
    pub ngram_min: Option<usize>,
    pub ngram_max: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("parsing config file {}", path.display()))
    }
}

/// Parse an optional string (flag or config value) into a library enum.
pub fn parse_opt<T>(value: Option<&str>, what: &str) -> Result<Option<T>>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    value
        .map(|v| {
            v.parse::<T>()
                .map_err(|e| anyhow::anyhow!("invalid {what}: {e}"))
        })
        .transpose()
}

/// Parse a comma-separated list with a per-item parser.
pub fn parse_list<T>(
    raw: &str,
    what: &str,
    item: impl Fn(&str) -> Result<T>,
) -> Result<Vec<T>> {
    let items: Vec<&str> = raw.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        bail!("empty entry in {what} list {raw:?}");
    }
    items.iter().map(|s| item(s)).collect()
}

/// Accept plain decimals and `a/b` fractions, so grids can be written the
/// way they are usually quoted (for example `1/12,1/3,1,2,5`).
pub fn parse_ratio(raw: &str) -> Result<f64> {
    if let Some((num, den)) = raw.split_once('/') {
        let num: f64 = num.trim().parse().context("fraction numerator")?;
        let den: f64 = den.trim().parse().context("fraction denominator")?;
        if den == 0.0 {
            bail!("zero denominator in {raw:?}");
        }
        return Ok(num / den);
    }
    raw.parse::<f64>()
        .with_context(|| format!("invalid number {raw:?}"))
}

/// Split `--authors "A,B"` into exactly two non-empty names.
pub fn parse_author_pair(raw: &str) -> Result<(String, String)> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] if !a.is_empty() && !b.is_empty() => Ok((a.to_string(), b.to_string())),
        _ => bail!("--authors expects exactly two comma-separated names, got {raw:?}"),
    }
}

/// Everything a run needs, after merging flags, config file, and defaults.
/// Serialized verbatim into `run_config.json` beside the artifacts.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub vocab_cap: usize,
    pub mfw: usize,
    pub zscore: Option<ZMode>,
    pub ddof: u8,
    pub epsilon: f64,
    pub metric: MetricKind,
    pub pi1: f64,
    pub alpha: f64,
    pub rtd_normalizer: RtdNormalizerMode,
    pub normalize_by_n: bool,
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn pipeline_params(&self) -> PipelineParams {
        let mut params = PipelineParams::new(self.mfw)
            .with_ddof(self.ddof)
            .with_epsilon(self.epsilon);
        if let Some(mode) = self.zscore {
            params = params.with_zmode(mode);
        }
        params
    }

    pub fn metric_spec(&self) -> MetricSpec {
        MetricSpec::new(self.metric)
            .with_alpha(self.alpha)
            .with_pi1(self.pi1)
            .with_rtd_normalizer(self.rtd_normalizer)
            .with_normalize_by_n(self.normalize_by_n)
    }
}

/// Flag-level inputs shared by most subcommands; `None` means "not given
/// on the command line", letting the config file fill the gap.
#[derive(Debug, Default, Clone)]
pub struct Overrides<'a> {
    pub manifest: Option<&'a Path>,
    pub vocab_cap: Option<usize>,
    pub mfw: Option<usize>,
    pub zscore: Option<&'a str>,
    pub ddof: Option<u8>,
    pub epsilon: Option<f64>,
    pub metric: Option<&'a str>,
    pub pi1: Option<f64>,
    pub alpha: Option<f64>,
    pub rtd_normalizer: Option<&'a str>,
    pub unnormalized: bool,
    pub ngram_min: Option<usize>,
    pub ngram_max: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<&'a Path>,
}

pub fn resolve(overrides: &Overrides, file: &FileConfig) -> Result<RunConfig> {
    let zscore = parse_opt::<ZMode>(
        overrides.zscore.or(file.zscore.as_deref()),
        "--zscore value",
    )?;
    let metric = parse_opt::<MetricKind>(
        overrides.metric.or(file.metric.as_deref()),
        "--metric value",
    )?
    .unwrap_or(MetricKind::Burrows);
    let rtd_normalizer = parse_opt::<RtdNormalizerMode>(
        overrides.rtd_normalizer.or(file.rtd_normalizer.as_deref()),
        "--rtd-normalizer value",
    )?
    .unwrap_or(RtdNormalizerMode::MinusHalf);
    Ok(RunConfig {
        manifest: overrides
            .manifest
            .map(Path::to_path_buf)
            .or_else(|| file.manifest.clone()),
        vocab_cap: overrides
            .vocab_cap
            .or(file.vocab_cap)
            .unwrap_or(DEFAULT_VOCAB_CAP),
        mfw: overrides.mfw.or(file.mfw).unwrap_or(DEFAULT_MFW),
        zscore,
        ddof: overrides.ddof.or(file.ddof).unwrap_or(DEFAULT_DDOF),
        epsilon: overrides
            .epsilon
            .or(file.epsilon)
            .unwrap_or(DEFAULT_EPSILON),
        metric,
        pi1: overrides.pi1.or(file.pi1).unwrap_or(0.5),
        alpha: overrides.alpha.or(file.alpha).unwrap_or(1.0),
        rtd_normalizer,
        normalize_by_n: !overrides.unnormalized,
        ngram_min: overrides.ngram_min.or(file.ngram_min).unwrap_or(1),
        ngram_max: overrides.ngram_max.or(file.ngram_max).unwrap_or(1),
        seed: overrides.seed.or(file.seed).unwrap_or(0),
        out_dir: overrides
            .out_dir
            .map(Path::to_path_buf)
            .or_else(|| file.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from(".")),
    })
}
