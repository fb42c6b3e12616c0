//! TOML configuration for the generator command.

use anyhow::{bail, Context};
use fluorocal::grid::SuperpixelGrid;
use fluorocal::synth::GenConfig;
use serde::Deserialize;
use std::path::Path;

/// On-disk generator configuration; every field is optional and falls back to
/// the reference-scale default world.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenFileConfig {
    pub seed: Option<u64>,
    pub shots: Option<usize>,
    pub mean_atoms: Option<f64>,
    pub atom_number_jitter: Option<f64>,
    pub mean_theta: Option<f64>,
    pub cavity_noise_theta: Option<f64>,
    pub counts_per_atom: Option<f64>,
    pub cloud_sigma: Option<f64>,
    pub cloud_center_jitter: Option<f64>,
    pub cloud_center_jitter_lower: Option<f64>,
    pub freq_factor_std: Option<f64>,
    pub contrast: Option<f64>,
    pub read_noise_per_superpixel: Option<f64>,
    pub shot_noise_scale: Option<f64>,
    pub prep_core_theta: Option<f64>,
    pub drive_fraction: Option<f64>,
    pub drive_theta_min: Option<f64>,
    pub drive_theta_max: Option<f64>,
    pub leak_tolerance: Option<f64>,
    pub grid: Option<GridFileConfig>,
    pub field: Option<FieldFileConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFileConfig {
    pub rows: usize,
    pub cols: usize,
    pub block_size: usize,
    pub left_cols: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFileConfig {
    pub seed: Option<u64>,
    pub amplitude: Option<f64>,
    pub correlation_length: Option<f64>,
}

/// Resolved field parameters (defaults filled in).
#[derive(Debug, Clone, Copy)]
pub struct FieldParams {
    pub seed: u64,
    pub amplitude: f64,
    pub correlation_length: f64,
}

pub fn load(path: Option<&Path>) -> anyhow::Result<GenFileConfig> {
    match path {
        None => Ok(GenFileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            let config: GenFileConfig =
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?;
            Ok(config)
        }
    }
}

/// Merge the file config with CLI overrides into the generator inputs.
pub fn resolve(
    file: &GenFileConfig,
    seed_override: Option<u64>,
) -> anyhow::Result<(GenConfig, FieldParams)> {
    let seed = seed_override.or(file.seed).unwrap_or(0);
    let mut config = GenConfig::default_world(seed);
    if let Some(grid) = &file.grid {
        config.grid = SuperpixelGrid::new(grid.rows, grid.cols, grid.block_size, grid.left_cols)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
    }
    macro_rules! opt {
        ($field:ident) => {
            if let Some(v) = file.$field {
                config.$field = v;
            }
        };
    }
    opt!(shots);
    opt!(mean_atoms);
    opt!(atom_number_jitter);
    opt!(mean_theta);
    opt!(cavity_noise_theta);
    opt!(counts_per_atom);
    opt!(cloud_sigma);
    opt!(cloud_center_jitter);
    opt!(cloud_center_jitter_lower);
    opt!(freq_factor_std);
    opt!(contrast);
    opt!(read_noise_per_superpixel);
    opt!(shot_noise_scale);
    opt!(prep_core_theta);
    opt!(drive_fraction);
    opt!(drive_theta_min);
    opt!(drive_theta_max);
    opt!(leak_tolerance);

    let field = file.field.clone().unwrap_or(FieldFileConfig {
        seed: None,
        amplitude: None,
        correlation_length: None,
    });
    let amplitude = field.amplitude.unwrap_or(0.10);
    if !(0.0..0.5).contains(&amplitude) {
        bail!("field amplitude must lie in [0, 0.5)");
    }
    Ok((
        config,
        FieldParams {
            seed: field.seed.unwrap_or(seed ^ 0xabcd),
            amplitude,
            correlation_length: field.correlation_length.unwrap_or(3.0),
        },
    ))
}
