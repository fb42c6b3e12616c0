//! End-to-end calibration on a synthetic world: generate data with a known
//! collection-efficiency field, train the per-superpixel weights, and compare
//! the angular resolution of the three analysis methods.
//!
//! Run with `cargo run --release --example calibrate`.

use fluorocal::cost::Hyperparams;
use fluorocal::optimizer::OptimizerSettings;
use fluorocal::pipeline::{
    baseline_single_ratio, baseline_uniform, evaluate, split, train, SplitOrder, SplitSpec,
};
use fluorocal::synth::{analytic_noise_floor, generate_dataset, make_efficiency_field, GenConfig};

fn main() -> fluorocal::Result<()> {
    let seed = 33;
    let config = GenConfig::default_world(seed);
    let field = make_efficiency_field(&config.grid, seed ^ 0xabcd, 0.10, 3.0)?;
    let data = generate_dataset(&config, &field)?;

    let spec = SplitSpec {
        train_count: 500,
        validation_count: 50,
        order: SplitOrder::Shuffled(seed + 1),
    };
    let (train_set, _validation, test_set) = split(&data.dataset, &spec)?;

    let hyper = Hyperparams::new(20.0, 200.0)?;
    let (beta, report) = train(&train_set, &hyper, &OptimizerSettings::default())?;
    println!(
        "trained on {} shots above the cutoff ({} iterations, {})",
        report.m_c,
        report.optimization.iterations,
        report.optimization.termination.as_str()
    );

    let uniform = baseline_uniform(&test_set, true, &hyper)?;
    let single = baseline_single_ratio(&train_set, &test_set, hyper.jz_cutoff, true, &hyper)?;
    let trained = evaluate(&beta, &test_set, true, &hyper)?;

    println!("\nangular resolution on the held-out test shots:");
    for (label, m) in [
        ("no correction", &uniform),
        ("mean-position weight", &single.metrics),
        ("supervised map", &trained),
    ] {
        println!(
            "  {label:<22} {:7.1} urad  ({:+5.1} dB vs projection noise)",
            m.delta_theta * 1e6,
            m.db_below_qpn
        );
    }

    let floor = analytic_noise_floor(&config);
    let limit = (floor.powi(2) + config.cavity_noise_theta.powi(2)).sqrt();
    println!(
        "\ndetection-limited expectation: {:.1} urad (fluorescence floor {:.1}, cavity {:.1})",
        limit * 1e6,
        floor * 1e6,
        config.cavity_noise_theta * 1e6
    );
    Ok(())
}
