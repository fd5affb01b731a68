//! Run configuration, layered as flag > `SUBFRAC_*` environment > key=value
//! file > default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use subfrac::{QuadratureSpec, SamplerSpec};

use crate::error::{CliError, CliResult};

pub const ENV_PREFIX: &str = "SUBFRAC_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub quadrature: QuadratureSpec,
    pub sampler: SamplerSpec,
    pub cache_dir: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 1,
            quadrature: QuadratureSpec::default(),
            sampler: SamplerSpec::default(),
            cache_dir: None,
            format: Format::Json,
        }
    }
}

/// Every settable key, in file/env spelling.
pub const KEYS: &[&str] = &[
    "n",
    "paths",
    "steps",
    "seed",
    "cache_dir",
    "format",
    "lambda_nodes",
    "tail_tol",
    "theta_nodes",
    "sphere_nodes",
    "jacobi_nodes",
    "panel_nodes",
    "v_split",
    "alpha_min",
    "box_nodes",
];

fn parse<T: std::str::FromStr>(key: &str, v: &str, source: &str) -> CliResult<T> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{source}: cannot parse {key} = {v:?}")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, v: &str, source: &str) -> CliResult<()> {
        let q = &mut self.quadrature;
        match key {
            "n" => self.n = parse(key, v, source)?,
            "paths" => self.sampler.paths = parse(key, v, source)?,
            "steps" => self.sampler.steps = parse(key, v, source)?,
            "seed" => self.sampler.seed = parse(key, v, source)?,
            "cache_dir" => self.cache_dir = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "format" => {
                self.format = match v.trim() {
                    "json" => Format::Json,
                    "csv" => Format::Csv,
                    _ => return Err(CliError::Usage(format!("{source}: format must be json or csv, got {v:?}"))),
                }
            }
            "lambda_nodes" => q.lambda_nodes = parse(key, v, source)?,
            "tail_tol" => q.tail_tol = parse(key, v, source)?,
            "theta_nodes" => q.theta_nodes = parse(key, v, source)?,
            "sphere_nodes" => q.sphere_nodes = parse(key, v, source)?,
            "jacobi_nodes" => q.jacobi_nodes = parse(key, v, source)?,
            "panel_nodes" => q.panel_nodes = parse(key, v, source)?,
            "v_split" => q.v_split = parse(key, v, source)?,
            "alpha_min" => q.alpha_min = parse(key, v, source)?,
            "box_nodes" => q.box_nodes = parse(key, v, source)?,
            _ => return Err(CliError::Usage(format!("{source}: unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.n == 0 {
            return Err(CliError::Usage("n must be at least 1".into()));
        }
        self.quadrature.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.sampler.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, excluding where results are
    /// cached and how they are printed.
    pub fn digest(&self) -> String {
        let numeric = serde_json::json!({
            "n": self.n,
            "quadrature": self.quadrature,
            "sampler": self.sampler,
        });
        hex(&Sha256::digest(numeric.to_string().as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// `key = value` lines; `#` starts a comment.
pub fn parse_file(text: &str, path: &Path) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{}:{}: expected key = value", path.display(), k + 1)))?;
        out.insert(key.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Layered settings; later layers win.
#[derive(Debug, Default)]
pub struct Layers {
    pub file: Option<(PathBuf, BTreeMap<String, String>)>,
    pub env: BTreeMap<String, String>,
    pub flags: BTreeMap<String, String>,
}

impl Layers {
    pub fn env_from<I: IntoIterator<Item = (String, String)>>(vars: I) -> BTreeMap<String, String> {
        vars.into_iter()
            .filter_map(|(k, v)| {
                let key = k.strip_prefix(ENV_PREFIX)?.to_ascii_lowercase();
                KEYS.contains(&key.as_str()).then_some((key, v))
            })
            .collect()
    }

    pub fn resolve(&self, base: RunConfig) -> CliResult<RunConfig> {
        let mut cfg = base;
        if let Some((path, map)) = &self.file {
            let src = path.display().to_string();
            for (k, v) in map {
                cfg.set(k, v, &src)?;
            }
        }
        for (k, v) in &self.env {
            cfg.set(k, v, &format!("{ENV_PREFIX}{}", k.to_ascii_uppercase()))?;
        }
        for (k, v) in &self.flags {
            cfg.set(k, v, "command line")?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
