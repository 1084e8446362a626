//! Runs a small method comparison on noisy spheres: regularized quadratic
//! fits versus local PCA across several chart sizes.
//!
//! Run with `cargo run --example sphere_benchmark`. Cell sizes are kept
//! moderate so the sweep finishes in seconds; grow `n`, `ks`, or `repeats`
//! for sharper estimates.

use qmf::datasets::{benchmark_sweep, DeltaRule, GenSpec, Method, Shape};

fn main() -> qmf::Result<()> {
    let spec = GenSpec {
        shape: Shape::UnitSphere,
        n: 120,
        noise_sigma: 0.2,
        seed: 1,
    };
    let methods = [Method::RqmfE, Method::LocalPca];
    let ks = [10, 16, 22];

    let table = benchmark_sweep(&spec, &methods, &ks, &DeltaRule::SpherePaper, 2, 1)?;

    println!(
        "sphere, n = {}, sigma = {}, {} repeats per cell",
        spec.n, spec.noise_sigma, 2
    );
    println!();
    println!("{:>10} {:>4} {:>12} {:>12}", "method", "K", "mse", "sd");
    for row in &table.rows {
        println!(
            "{:>10} {:>4} {:>12.6} {:>12.6}",
            row.method.to_string(),
            row.k,
            row.mse,
            row.sd
        );
    }
    for failure in &table.failures {
        eprintln!("failed cell: {failure}");
    }

    println!();
    for &k in &ks {
        let mse_of = |method: Method| {
            table
                .rows
                .iter()
                .find(|row| row.method == method && row.k == k)
                .map(|row| row.mse)
                .unwrap_or(f64::NAN)
        };
        let quad = mse_of(Method::RqmfE);
        let pca = mse_of(Method::LocalPca);
        println!(
            "K = {k:>2}: quadratic fits {} local PCA ({:.6} vs {:.6})",
            if quad < pca { "beat" } else { "trail" },
            quad,
            pca
        );
    }
    Ok(())
}
