//! Run settings merged from an optional TOML file and command-line flags.

use std::path::Path;

use anyhow::Result;
use bgev::{default_a_grid, BetaShape, BlendSpec, FitOptions, Model, RunConfig, MIN_WINDOW};
use clap::Args;
use serde::Deserialize;

use crate::UsageError;

/// Keys accepted in a `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSettings {
    pub model: Option<String>,
    pub a_pos: Option<f64>,
    pub b_pos: Option<f64>,
    pub a_neg: Option<f64>,
    pub b_neg: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub min_window: Option<usize>,
    pub a_grid: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub reduced: Option<bool>,
}

impl FileSettings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| UsageError(format!("bad config {}: {e}", path.display())).into())
    }
}

/// Model and blend flags shared by the data subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    /// Model to fit: gev or bgev.
    #[arg(long)]
    pub model: Option<String>,
    /// Lower blend quantile for positive shapes.
    #[arg(long)]
    pub a_pos: Option<f64>,
    /// Upper blend quantile for positive shapes.
    #[arg(long)]
    pub b_pos: Option<f64>,
    /// Upper blend quantile a for negative shapes.
    #[arg(long)]
    pub a_neg: Option<f64>,
    /// Lower blend quantile b for negative shapes; defaults to a_neg - delta.
    #[arg(long)]
    pub b_neg: Option<f64>,
    /// Beta weight shape alpha.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Beta weight shape beta.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Smallest training window.
    #[arg(long)]
    pub min_window: Option<usize>,
    /// Comma-separated a values for `sweep`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub a_grid: Option<Vec<f64>>,
    /// Gap a - b for negative-shape blends.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Looser optimizer tolerances for large batches.
    #[arg(long)]
    pub reduced: bool,
}

pub struct Settings {
    pub run: RunConfig,
    pub fit: FitOptions,
}

impl RunFlags {
    /// Flags take precedence over file values, which take precedence over defaults.
    pub fn resolve(&self, file: &FileSettings) -> Result<Settings> {
        let defaults = RunConfig::default();
        let model = match self.model.as_ref().or(file.model.as_ref()) {
            Some(m) => m.parse::<Model>().map_err(|e| UsageError(e.to_string()))?,
            None => defaults.model,
        };
        let alpha = self
            .alpha
            .or(file.alpha)
            .unwrap_or(defaults.spec_pos.shape.alpha());
        let beta = self
            .beta
            .or(file.beta)
            .unwrap_or(defaults.spec_pos.shape.beta());
        let shape = BetaShape::new(alpha, beta)
            .map_err(|e| UsageError(format!("beta weight shape: {e}")))?;
        let spec_pos = BlendSpec::new(
            self.a_pos.or(file.a_pos).unwrap_or(defaults.spec_pos.a),
            self.b_pos.or(file.b_pos).unwrap_or(defaults.spec_pos.b),
            shape,
        )
        .map_err(|e| UsageError(format!("positive-shape blend: {e}")))?;
        let delta = self.delta.or(file.delta).unwrap_or(defaults.delta);
        let a_neg = self.a_neg.or(file.a_neg).unwrap_or(defaults.spec_neg.a);
        let b_neg = self.b_neg.or(file.b_neg).unwrap_or(a_neg - delta);
        let spec_neg = BlendSpec::new(a_neg, b_neg, shape)
            .map_err(|e| UsageError(format!("negative-shape blend: {e}")))?;
        let min_window = self.min_window.or(file.min_window).unwrap_or(MIN_WINDOW);
        let a_grid = self
            .a_grid
            .clone()
            .or_else(|| file.a_grid.clone())
            .unwrap_or_else(default_a_grid);
        let fit = if self.reduced || file.reduced.unwrap_or(false) {
            FitOptions::reduced()
        } else {
            FitOptions::default()
        };
        Ok(Settings {
            run: RunConfig {
                model,
                spec_pos,
                spec_neg,
                min_window,
                a_grid,
                delta,
                seed: self.seed.or(file.seed).unwrap_or(defaults.seed),
            },
            fit,
        })
    }
}
