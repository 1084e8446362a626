//! Denoises a noisy circle with local quadratic fits at several fixed
//! penalties and shows how regularization affects the result.
//!
//! Run with `cargo run --example denoise_circle`.

use qmf::datasets::{evaluate, generate, GenSpec, ManifoldDescriptor, Shape};
use qmf::denoise::{denoise_all, DenoiseConfig, Neighborhood};
use qmf::ridge::RegConfig;

fn main() -> qmf::Result<()> {
    let cloud = generate(&GenSpec {
        shape: Shape::UnitCircle,
        n: 240,
        noise_sigma: 0.1,
        seed: 1,
    })?;
    let truth = ManifoldDescriptor::UnitCircle;

    let noisy = evaluate(&cloud, &truth)?;
    println!("noisy input: mse = {:.6}, sd = {:.6}", noisy.mse, noisy.sd);
    println!();
    println!("{:>8} {:>12} {:>12} {:>12}", "lambda", "mse", "sd", "fallbacks");

    let mut best = (f64::INFINITY, 0.0);
    for lambda in [0.1, 0.01, 0.0] {
        let cfg = DenoiseConfig::new(1, Neighborhood::Knn(40), RegConfig::lambda(lambda));
        let output = denoise_all(&cloud, &cfg)?;
        let report = evaluate(&output.cloud, &truth)?;
        let fallbacks = output
            .reports
            .iter()
            .filter(|r| r.status != qmf::denoise::PointStatus::Denoised)
            .count();
        println!(
            "{:>8} {:>12.6} {:>12.6} {:>12}",
            lambda, report.mse, report.sd, fallbacks
        );
        if report.mse < best.0 {
            best = (report.mse, lambda);
        }
    }

    println!();
    println!(
        "best penalty: lambda = {} (mse {:.6}, noisy input was {:.6})",
        best.1, best.0, noisy.mse
    );
    println!("a moderate penalty beats both extremes: lambda = 0 overfits the");
    println!("noise and a heavy penalty flattens the local curvature");
    Ok(())
}
