//! Synthetic data generator with known ground truth.
//!
//! Each shot places two Gaussian atom clouds (one spin state per sensor half)
//! with jittered centers and atom numbers, images them through a static
//! multiplicative collection-efficiency field, and adds photon shot noise,
//! camera read noise, cavity readout noise, and probe-frequency drift. The
//! generating field and the per-shot truth are kept, so trained calibrations
//! can be scored against the world that produced the data.
//!
//! Shot-to-shot population differences are a mixture: a narrow core at the
//! cavity detection limit, plus a fraction of shots driven to large
//! magnitudes. The driven shots populate the region above the training
//! cutoff; their size keeps the training signal well above the detection
//! noise so the fitted weights carry no systematic shrinkage.

use crate::error::Error;
use crate::grid::SuperpixelGrid;
use crate::model::ShotRecord;
use crate::pipeline::Dataset;
use crate::Result;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Relative collection efficiency per superpixel, mean 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyField {
    values: Vec<f64>,
    seed: u64,
    amplitude: f64,
    correlation_length: f64,
}

impl EfficiencyField {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn correlation_length(&self) -> f64 {
        self.correlation_length
    }

    pub(crate) fn from_parts(
        values: Vec<f64>,
        seed: u64,
        amplitude: f64,
        correlation_length: f64,
    ) -> Self {
        Self {
            values,
            seed,
            amplitude,
            correlation_length,
        }
    }
}

// Relative strengths of the structural left-right gradient and the random
// texture modes in the generated field. The gradient mimics one-sided
// vignetting or illumination falloff and guarantees the two sensor halves
// collect at different mean rates.
const TILT_WEIGHT: f64 = 1.3;
const MODE_WEIGHT: f64 = 0.9;

/// Build a smooth band-limited efficiency field: a structural left-right
/// gradient plus low-order random harmonics no finer than the correlation
/// length, normalized to mean 1 and peak-to-peak equal to `amplitude`.
pub fn make_efficiency_field(
    grid: &SuperpixelGrid,
    seed: u64,
    amplitude: f64,
    correlation_length: f64,
) -> Result<EfficiencyField> {
    if !(0.0..0.5).contains(&amplitude) {
        return Err(Error::InvalidConfig(format!(
            "field amplitude must lie in [0, 0.5) (got {amplitude})"
        )));
    }
    if !(correlation_length >= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "correlation length must be at least one superpixel (got {correlation_length})"
        )));
    }
    let n = grid.n();
    if amplitude == 0.0 {
        return Ok(EfficiencyField::from_parts(
            vec![1.0; n],
            seed,
            amplitude,
            correlation_length,
        ));
    }

    let (rows, cols) = (grid.rows(), grid.cols());
    let mut raw = vec![0.0; n];
    for j in 0..n {
        let c = grid.col_of(j) as f64 + 0.5;
        raw[j] = TILT_WEIGHT * (std::f64::consts::PI * c / cols as f64).cos();
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kr_max = ((rows as f64) / (2.0 * correlation_length)).floor().max(1.0) as usize;
    let kc_max = ((cols as f64) / (2.0 * correlation_length)).floor().max(1.0) as usize;
    for kr in 0..=kr_max {
        for kc in 0..=kc_max {
            if (kr, kc) == (0, 0) || (kr, kc) == (0, 1) {
                continue; // (0,1) is the structural gradient above
            }
            let z: f64 = rng.sample(StandardNormal);
            let amp = MODE_WEIGHT * z / ((kr * kr + kc * kc) as f64).sqrt();
            let phase_r = rng.random::<f64>() * std::f64::consts::TAU;
            let phase_c = rng.random::<f64>() * std::f64::consts::TAU;
            for j in 0..n {
                let r = grid.row_of(j) as f64 + 0.5;
                let c = grid.col_of(j) as f64 + 0.5;
                let wave_r = (std::f64::consts::PI * kr as f64 * r / rows as f64 + phase_r).cos();
                let wave_c = (std::f64::consts::PI * kc as f64 * c / cols as f64 + phase_c).cos();
                raw[j] += amp * wave_r * wave_c;
            }
        }
    }

    let mean = raw.iter().sum::<f64>() / n as f64;
    let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let scale = if span > 0.0 { amplitude / span } else { 0.0 };
    let values: Vec<f64> = raw.iter().map(|v| 1.0 + (v - mean) * scale).collect();

    Ok(EfficiencyField::from_parts(
        values,
        seed,
        amplitude,
        correlation_length,
    ))
}

/// Ground-truth world parameters for the generator.
///
/// Angles are radians on the collective Bloch sphere; they convert to atom
/// units through `contrast * atoms / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub grid: SuperpixelGrid,
    pub shots: usize,
    pub mean_atoms: f64,
    /// Relative shot-to-shot spread of the total atom number.
    pub atom_number_jitter: f64,
    /// Mean rotation applied between the cavity measurement and the
    /// fluorescence image; offsets the imaged population difference only.
    pub mean_theta: f64,
    /// Cavity readout noise, angle-equivalent.
    pub cavity_noise_theta: f64,
    pub counts_per_atom: f64,
    /// Cloud radius per state, in superpixels.
    pub cloud_sigma: f64,
    /// Shot-to-shot center jitter of the kicked upper-state cloud, in
    /// superpixels. The momentum kick makes this the wandering one.
    pub cloud_center_jitter: f64,
    /// Center jitter of the stationary lower-state reference cloud.
    pub cloud_center_jitter_lower: f64,
    pub freq_factor_std: f64,
    pub contrast: f64,
    /// Read noise per superpixel, in counts.
    pub read_noise_per_superpixel: f64,
    /// Multiplier on the photon shot-noise amplitude; 1 is physical, 0 turns
    /// it off for noiseless reference worlds.
    pub shot_noise_scale: f64,
    /// Shot-to-shot spread of the prepared population difference around zero,
    /// angle-equivalent.
    pub prep_core_theta: f64,
    /// Fraction of shots driven to a large population difference.
    pub drive_fraction: f64,
    /// Magnitude range of driven shots, angle-equivalent.
    pub drive_theta_min: f64,
    pub drive_theta_max: f64,
    /// Largest tolerated fraction of a cloud's mass falling outside its half.
    pub leak_tolerance: f64,
    pub seed: u64,
}

impl GenConfig {
    /// Reference-scale world: 3.9e5 atoms, contrast 0.92, a 10 percent efficiency
    /// inhomogeneity imaged at 200 counts per atom, read noise set so the
    /// fluorescence detection floor sits near 690 microradians.
    pub fn default_world(seed: u64) -> Self {
        Self {
            grid: SuperpixelGrid::default_sensor(),
            shots: 600,
            mean_atoms: 390_000.0,
            atom_number_jitter: 0.02,
            mean_theta: 0.0,
            cavity_noise_theta: 310e-6,
            counts_per_atom: 200.0,
            cloud_sigma: 2.2,
            cloud_center_jitter: 0.7,
            cloud_center_jitter_lower: 0.55,
            freq_factor_std: 1e-5,
            contrast: 0.92,
            read_noise_per_superpixel: 3516.0,
            shot_noise_scale: 1.0,
            prep_core_theta: 310e-6,
            drive_fraction: 0.23,
            drive_theta_min: 6.0e-3,
            drive_theta_max: 14.0e-3,
            leak_tolerance: 0.15,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::InvalidConfig("shots must be positive".into()));
        }
        if !(self.mean_atoms > 0.0) {
            return Err(Error::InvalidConfig("mean_atoms must be positive".into()));
        }
        if !(self.contrast > 0.0 && self.contrast <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "contrast must lie in (0, 1] (got {})",
                self.contrast
            )));
        }
        if !(self.counts_per_atom > 0.0) {
            return Err(Error::InvalidConfig(
                "counts_per_atom must be positive".into(),
            ));
        }
        if !(self.cloud_sigma > 0.0) {
            return Err(Error::InvalidConfig("cloud_sigma must be positive".into()));
        }
        let dispersions = [
            ("atom_number_jitter", self.atom_number_jitter),
            ("cavity_noise_theta", self.cavity_noise_theta),
            ("cloud_center_jitter", self.cloud_center_jitter),
            ("cloud_center_jitter_lower", self.cloud_center_jitter_lower),
            ("freq_factor_std", self.freq_factor_std),
            ("read_noise_per_superpixel", self.read_noise_per_superpixel),
            ("shot_noise_scale", self.shot_noise_scale),
            ("prep_core_theta", self.prep_core_theta),
        ];
        for (name, v) in dispersions {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and nonnegative (got {v})"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.drive_fraction) {
            return Err(Error::InvalidConfig(
                "drive_fraction must lie in [0, 1]".into(),
            ));
        }
        if !(self.drive_theta_min >= 0.0 && self.drive_theta_max >= self.drive_theta_min) {
            return Err(Error::InvalidConfig(
                "drive theta range must satisfy 0 <= min <= max".into(),
            ));
        }
        Ok(())
    }
}

/// Per-shot ground truth kept by the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotTruth {
    /// Population difference seen by the fluorescence arm, atoms.
    pub true_jz: f64,
    pub true_n: f64,
    /// (row, col) cloud centers in superpixel coordinates, lower state first.
    pub cloud_centers: [(f64, f64); 2],
}

/// A generated dataset with its truth sidecar and any leak warnings.
#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub dataset: Dataset,
    pub truths: Vec<ShotTruth>,
    pub warnings: Vec<String>,
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// Integral of a unit isotropic Gaussian at `center` over block (r, c), taken
/// over the column range of one sensor half, together with the total mass the
/// half captures.
struct HalfCloud {
    masses: Vec<f64>, // one entry per block of the half, row-major within the half
    captured: f64,    // fraction of the full plane integral inside the half
}

fn half_cloud(
    grid: &SuperpixelGrid,
    col_lo: usize,
    col_hi: usize,
    center: (f64, f64),
    sigma: f64,
) -> HalfCloud {
    let (mu_r, mu_c) = center;
    let rows = grid.rows();
    let row_edges: Vec<f64> = (0..=rows)
        .map(|r| normal_cdf((r as f64 - mu_r) / sigma))
        .collect();
    let col_edges: Vec<f64> = (col_lo..=col_hi)
        .map(|c| normal_cdf((c as f64 - mu_c) / sigma))
        .collect();
    let mut masses = Vec::with_capacity(rows * (col_hi - col_lo));
    for r in 0..rows {
        let row_mass = row_edges[r + 1] - row_edges[r];
        for c in 0..(col_hi - col_lo) {
            masses.push(row_mass * (col_edges[c + 1] - col_edges[c]));
        }
    }
    let captured = (row_edges[rows] - row_edges[0]) * (col_edges[col_hi - col_lo] - col_edges[0]);
    HalfCloud { masses, captured }
}

/// Generate one dataset and its truth records. Identical seeds produce
/// bit-identical results.
pub fn generate_dataset(config: &GenConfig, field: &EfficiencyField) -> Result<GeneratedData> {
    config.validate()?;
    let grid = config.grid;
    let n = grid.n();
    if field.values().len() != n {
        return Err(Error::DimensionMismatch {
            what: "efficiency field",
            expected: format!("{n}"),
            got: format!("{}", field.values().len()),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut shots = Vec::with_capacity(config.shots);
    let mut truths = Vec::with_capacity(config.shots);
    let mut warnings = Vec::new();

    let rows = grid.rows();
    let cols = grid.cols();
    let left_cols = grid.left_cols();
    let nominal_row = rows as f64 / 2.0;
    let nominal_left_col = left_cols as f64 / 2.0;
    let nominal_right_col = left_cols as f64 + (cols - left_cols) as f64 / 2.0;

    for shot_id in 0..config.shots {
        let z_n: f64 = rng.sample(StandardNormal);
        let z_core: f64 = rng.sample(StandardNormal);
        let u_drive = rng.random::<f64>();
        let u_sign = rng.random::<f64>();
        let u_mag = rng.random::<f64>();
        let z_cav: f64 = rng.sample(StandardNormal);
        let z_freq: f64 = rng.sample(StandardNormal);
        let jit: [f64; 4] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];

        let true_n = (config.mean_atoms * (1.0 + config.atom_number_jitter * z_n)).max(1.0);
        let jz_scale = config.contrast * true_n / 2.0;

        let drive = if u_drive < config.drive_fraction {
            let sign = if u_sign < 0.5 { -1.0 } else { 1.0 };
            let magnitude = config.drive_theta_min
                + (config.drive_theta_max - config.drive_theta_min) * u_mag;
            sign * magnitude * jz_scale
        } else {
            0.0
        };
        let clamp = 0.45 * true_n;
        let jz_prep = (config.prep_core_theta * jz_scale * z_core + drive).clamp(-clamp, clamp);
        let cavity_jz = jz_prep + config.cavity_noise_theta * jz_scale * z_cav;
        let true_jz = (jz_prep + config.mean_theta * jz_scale).clamp(-clamp, clamp);
        let freq_factor = config.freq_factor_std * z_freq;

        let n_dn = true_n / 2.0 - true_jz;
        let n_up = true_n / 2.0 + true_jz;

        let left_center = (
            nominal_row + config.cloud_center_jitter_lower * jit[0],
            nominal_left_col + config.cloud_center_jitter_lower * jit[1],
        );
        let right_center = (
            nominal_row + config.cloud_center_jitter * jit[2],
            nominal_right_col + config.cloud_center_jitter * jit[3],
        );

        let left = half_cloud(&grid, 0, left_cols, left_center, config.cloud_sigma);
        let right = half_cloud(&grid, left_cols, cols, right_center, config.cloud_sigma);
        for (label, cloud) in [("lower", &left), ("upper", &right)] {
            let leak = 1.0 - cloud.captured;
            if leak > config.leak_tolerance {
                warnings.push(format!(
                    "shot {shot_id}: {label}-state cloud leaks {:.1}% of its mass outside its half",
                    100.0 * leak
                ));
            }
        }

        // atoms per block, renormalized so each state's atoms are conserved
        let mut atoms = vec![0.0; n];
        for r in 0..rows {
            for c in 0..left_cols {
                atoms[grid.index(r, c)] =
                    n_dn * left.masses[r * left_cols + c] / left.captured;
            }
            for c in left_cols..cols {
                atoms[grid.index(r, c)] =
                    n_up * right.masses[r * (cols - left_cols) + (c - left_cols)] / right.captured;
            }
        }

        let mut counts = vec![0.0; n];
        for j in 0..n {
            let z_shot: f64 = rng.sample(StandardNormal);
            let z_read: f64 = rng.sample(StandardNormal);
            let expected = atoms[j] * config.counts_per_atom * field.values()[j];
            let noisy = expected
                + config.shot_noise_scale * expected.max(0.0).sqrt() * z_shot
                + config.read_noise_per_superpixel * z_read;
            counts[j] = noisy.max(0.0);
        }

        shots.push(ShotRecord {
            shot_id: shot_id as u64,
            cavity_jz,
            freq_factor,
            counts,
        });
        truths.push(ShotTruth {
            true_jz,
            true_n,
            cloud_centers: [left_center, right_center],
        });
    }

    let dataset = Dataset::new(grid, shots, config.contrast, config.counts_per_atom)?;
    Ok(GeneratedData {
        dataset,
        truths,
        warnings,
    })
}

/// Angle-equivalent detection noise floor implied by photon shot noise and
/// read noise at the mean atom number, for an ideally calibrated uniform
/// response: photon shot noise contributes `N / counts_per_atom` and every
/// superpixel contributes its read noise, all propagated through the
/// population-difference estimate and the angle conversion.
pub fn analytic_noise_floor(config: &GenConfig) -> f64 {
    let n_blocks = config.grid.n() as f64;
    let cpa = config.counts_per_atom;
    let read = config.read_noise_per_superpixel;
    let shot_var = config.mean_atoms / cpa;
    let read_var = n_blocks * read * read / (cpa * cpa);
    let jz_var = 0.25 * (shot_var + read_var);
    jz_var.sqrt() / (config.contrast * config.mean_atoms / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{estimate_jz, estimate_n, BetaMap};
    use crate::stats;

    #[test]
    fn zero_amplitude_field_is_exactly_uniform() {
        let grid = SuperpixelGrid::default_sensor();
        let field = make_efficiency_field(&grid, 3, 0.0, 4.0).unwrap();
        assert!(field.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn default_field_has_requested_contrast() {
        let grid = SuperpixelGrid::default_sensor();
        for seed in [1u64, 2, 3, 11, 99] {
            let field = make_efficiency_field(&grid, seed, 0.10, 4.0).unwrap();
            let min = field.values().iter().cloned().fold(f64::INFINITY, f64::min);
            let max = field
                .values()
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            let ptp = max - min;
            assert!((0.08..=0.12).contains(&ptp), "peak-to-peak {ptp} for seed {seed}");
            let mean = stats::mean(field.values());
            assert!((mean - 1.0).abs() < 1e-12);
            assert!(min > 0.0);
        }
    }

    #[test]
    fn field_generation_is_deterministic() {
        let grid = SuperpixelGrid::default_sensor();
        let a = make_efficiency_field(&grid, 77, 0.10, 4.0).unwrap();
        let b = make_efficiency_field(&grid, 77, 0.10, 4.0).unwrap();
        assert_eq!(a, b);
        let c = make_efficiency_field(&grid, 78, 0.10, 4.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn field_rejects_bad_parameters() {
        let grid = SuperpixelGrid::default_sensor();
        assert!(make_efficiency_field(&grid, 0, 0.6, 4.0).is_err());
        assert!(make_efficiency_field(&grid, 0, -0.1, 4.0).is_err());
        assert!(make_efficiency_field(&grid, 0, 0.1, 0.5).is_err());
    }

    fn noiseless_config(seed: u64) -> GenConfig {
        GenConfig {
            shots: 20,
            atom_number_jitter: 0.0,
            cavity_noise_theta: 0.0,
            counts_per_atom: 1.0,
            read_noise_per_superpixel: 0.0,
            shot_noise_scale: 0.0,
            freq_factor_std: 0.0,
            prep_core_theta: 0.0,
            cloud_center_jitter: 0.0,
            cloud_center_jitter_lower: 0.0,
            ..GenConfig::default_world(seed)
        }
    }

    #[test]
    fn noiseless_uniform_world_is_an_identity() {
        let config = noiseless_config(5);
        let field = make_efficiency_field(&config.grid, 1, 0.0, 4.0).unwrap();
        let data = generate_dataset(&config, &field).unwrap();
        let beta = BetaMap::uniform(config.grid, 1.0);
        for (shot, truth) in data.dataset.shots().iter().zip(&data.truths) {
            let jz = estimate_jz(&beta, &shot.counts).unwrap();
            let total = estimate_n(&beta, &shot.counts).unwrap();
            assert!(
                (jz - truth.true_jz).abs() <= 1e-9 * truth.true_n,
                "jz {jz} vs truth {}",
                truth.true_jz
            );
            assert!((total - truth.true_n).abs() <= 1e-9 * truth.true_n);
        }
    }

    #[test]
    fn atoms_are_conserved_per_state() {
        // seen through counts: uniform field, one count per atom, no noise
        let config = noiseless_config(9);
        let field = make_efficiency_field(&config.grid, 1, 0.0, 4.0).unwrap();
        let data = generate_dataset(&config, &field).unwrap();
        let grid = config.grid;
        for (shot, truth) in data.dataset.shots().iter().zip(&data.truths) {
            let mut left = 0.0;
            let mut right = 0.0;
            for j in 0..grid.n() {
                if grid.side_sign(j).unwrap() < 0.0 {
                    left += shot.counts[j];
                } else {
                    right += shot.counts[j];
                }
            }
            let n_dn = truth.true_n / 2.0 - truth.true_jz;
            let n_up = truth.true_n / 2.0 + truth.true_jz;
            assert!((left - n_dn).abs() <= 1e-9 * truth.true_n);
            assert!((right - n_up).abs() <= 1e-9 * truth.true_n);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let config = GenConfig::default_world(1234);
        let field = make_efficiency_field(&config.grid, 7, 0.10, 4.0).unwrap();
        let a = generate_dataset(&config, &field).unwrap();
        let b = generate_dataset(&config, &field).unwrap();
        assert_eq!(a.dataset.shots(), b.dataset.shots());
        assert_eq!(a.truths, b.truths);
    }

    #[test]
    fn uncorrected_spread_exceeds_cavity_noise() {
        let config = GenConfig {
            shots: 200,
            ..GenConfig::default_world(42)
        };
        let field = make_efficiency_field(&config.grid, 7, 0.10, 4.0).unwrap();
        let data = generate_dataset(&config, &field).unwrap();
        let beta = BetaMap::uniform(config.grid, 1.0 / config.counts_per_atom);
        let thetas: Vec<f64> = data
            .dataset
            .shots()
            .iter()
            .map(|s| {
                let jz = estimate_jz(&beta, &s.counts).unwrap();
                let n = estimate_n(&beta, &s.counts).unwrap();
                let target = s.cavity_jz + s.freq_factor * n;
                (jz - target) / (config.contrast * n / 2.0)
            })
            .collect();
        let spread = stats::sample_std(&thetas);
        assert!(
            spread >= 2.0 * config.cavity_noise_theta,
            "uncorrected spread {spread:.2e} should exceed twice the cavity noise"
        );
    }

    #[test]
    fn noise_floor_reference_values() {
        let config = GenConfig::default_world(0);
        let floor = analytic_noise_floor(&config);
        assert!(
            (600e-6..=800e-6).contains(&floor),
            "default floor {floor:.3e} outside [600, 800] microradians"
        );

        // noiseless limit
        let quiet = GenConfig {
            read_noise_per_superpixel: 0.0,
            counts_per_atom: 1e12,
            ..config.clone()
        };
        assert!(analytic_noise_floor(&quiet) < 1e-8);

        // photon-shot-noise part scales as 1/sqrt(counts per atom)
        let shot_only = GenConfig {
            read_noise_per_superpixel: 0.0,
            ..config.clone()
        };
        let doubled = GenConfig {
            counts_per_atom: 2.0 * shot_only.counts_per_atom,
            ..shot_only.clone()
        };
        let ratio = analytic_noise_floor(&shot_only) / analytic_noise_floor(&doubled);
        assert!((ratio - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn rejects_empty_request_and_bad_dispersion() {
        let mut config = GenConfig::default_world(1);
        config.shots = 0;
        assert!(config.validate().is_err());
        let mut config = GenConfig::default_world(1);
        config.atom_number_jitter = -0.1;
        assert!(config.validate().is_err());
    }

    #[test]
    fn drive_fraction_populates_large_magnitudes() {
        let config = GenConfig {
            shots: 1000,
            ..GenConfig::default_world(7)
        };
        let field = make_efficiency_field(&config.grid, 7, 0.10, 4.0).unwrap();
        let data = generate_dataset(&config, &field).unwrap();
        let above = data
            .dataset
            .shots()
            .iter()
            .filter(|s| s.cavity_jz.abs() >= 200.0)
            .count();
        let fraction = above as f64 / 1000.0;
        assert!(
            (0.18..=0.32).contains(&fraction),
            "above-cutoff fraction {fraction}"
        );
    }
}
