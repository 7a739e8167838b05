//! Default resolution: command-line flag, then config file, then the
//! `LBI_OUTPUT_DIR` environment variable (output directory only), then
//! built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lbi_core::fixed::FixedFormat;
use lbi_core::solver::DomainKind;
use serde::Deserialize;

pub const OUTPUT_DIR_ENV: &str = "LBI_OUTPUT_DIR";
pub const DEFAULT_ITERATIONS_PER_SAMPLE: u64 = 650;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileDefaults {
    pub lambda: Option<f64>,
    pub iterations_per_sample: Option<u64>,
    pub domain: Option<String>,
    pub format: Option<String>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Default)]
pub struct Defaults {
    file: FileDefaults,
    env_output_dir: Option<PathBuf>,
}

impl Defaults {
    pub fn load(config_path: Option<&Path>) -> Result<Self> {
        let file = match config_path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read config {}", path.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("invalid config {}", path.display()))?
            }
            None => FileDefaults::default(),
        };
        Ok(Defaults {
            file,
            env_output_dir: std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from),
        })
    }

    /// Lambda has no built-in default: it must come from the flag or config.
    pub fn lambda(&self, flag: Option<f64>) -> Result<f64> {
        let lambda = flag
            .or(self.file.lambda)
            .context("lambda is required: pass --lambda or set it in the config file")?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            bail!("lambda must be finite and non-negative, got {lambda}");
        }
        Ok(lambda)
    }

    pub fn iterations_per_sample(&self, flag: Option<u64>) -> u64 {
        flag.or(self.file.iterations_per_sample)
            .unwrap_or(DEFAULT_ITERATIONS_PER_SAMPLE)
    }

    pub fn format(&self, flag: Option<&str>) -> Result<FixedFormat> {
        let text = flag
            .map(str::to_string)
            .or_else(|| self.file.format.clone());
        match text {
            Some(text) => text
                .parse()
                .with_context(|| format!("invalid fixed-point format {text:?}")),
            None => Ok(FixedFormat::S4_16),
        }
    }

    /// Domain strings: "double", "fixed" (uses the configured format), or an
    /// inline "fixed:s4.16".
    pub fn domain(&self, flag: Option<&str>, format_flag: Option<&str>) -> Result<DomainKind> {
        let text = flag
            .map(str::to_string)
            .or_else(|| self.file.domain.clone())
            .unwrap_or_else(|| "double".to_string());
        match text.as_str() {
            "double" => Ok(DomainKind::Double),
            "fixed" => Ok(DomainKind::Fixed(self.format(format_flag)?)),
            other => match other.strip_prefix("fixed:") {
                Some(spec) => Ok(DomainKind::Fixed(
                    spec.parse()
                        .with_context(|| format!("invalid fixed-point format {spec:?}"))?,
                )),
                None => bail!("unknown domain {other:?}: expected double, fixed, or fixed:sI.F"),
            },
        }
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.file.output_dir.clone())
            .or_else(|| self.env_output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."))
    }
}
