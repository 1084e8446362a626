//! Global PCA reduction as a preprocessing stage: embeds a noisy circle in
//! a higher-dimensional space, reduces it back to the plane, denoises
//! there, and lifts the result.
//!
//! Run with `cargo run --example pca_reduce_pipeline`.

use nalgebra::{DMatrix, DVector};
use qmf::datasets::{evaluate, generate, GenSpec, ManifoldDescriptor, PointCloud, Shape};
use qmf::denoise::{denoise_all, pca_reduce, DenoiseConfig, Neighborhood};
use qmf::ridge::RegConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> qmf::Result<()> {
    let plane = generate(&GenSpec {
        shape: Shape::UnitCircle,
        n: 200,
        noise_sigma: 0.08,
        seed: 5,
    })?;

    // Embed the plane in R^5 with an orthonormal basis plus faint
    // out-of-plane noise.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let raw = DMatrix::from_fn(5, 2, |_, _| rng.random_range(-1.0..1.0f64));
    let basis = raw.qr().q();
    let mut ambient = &basis * &plane.points;
    for mut col in ambient.column_iter_mut() {
        col += DVector::from_fn(5, |_, _| 0.02 * rng.random_range(-1.0..1.0f64));
    }

    let reduction = pca_reduce(&ambient, 2)?;
    let residual = (&ambient - reduction.lift(&reduction.reduced)).norm()
        / ambient.norm();
    println!("ambient space: R^5, reduced space: R^2");
    println!("relative out-of-plane residual dropped by PCA: {residual:.4e}");

    // The reduced cloud is the circle again, up to an in-plane rotation, so
    // it can be denoised against the unit circle directly.
    let reduced_cloud = PointCloud::with_truth(reduction.reduced.clone(), ManifoldDescriptor::UnitCircle)?;
    let before = evaluate(&reduced_cloud, &ManifoldDescriptor::UnitCircle)?;

    let cfg = DenoiseConfig::new(1, Neighborhood::Knn(30), RegConfig::lambda(0.01));
    let output = denoise_all(&reduced_cloud, &cfg)?;
    let after = evaluate(&output.cloud, &ManifoldDescriptor::UnitCircle)?;

    println!();
    println!("reduced-space mse before denoising: {:.6}", before.mse);
    println!("reduced-space mse after denoising : {:.6}", after.mse);

    let lifted = reduction.lift(&output.cloud.points);
    println!();
    println!(
        "lifted result lives back in R^5 ({} x {}), ready for downstream use",
        lifted.nrows(),
        lifted.ncols()
    );
    assert!(after.mse < before.mse, "denoising should tighten the circle");
    Ok(())
}
