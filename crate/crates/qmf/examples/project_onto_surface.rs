//! Projects ambient points onto a hand-built quadratic surface and checks
//! the first-order optimality of each result.
//!
//! Run with `cargo run --example project_onto_surface`.

use nalgebra::{DMatrix, DVector};
use qmf::features::QuadModel;
use qmf::projection::ProjectionProblem;

fn main() -> qmf::Result<()> {
    // Surface f(t) = (t1, t2, 0.3 t1^2 + 0.2 t1 t2 + 0.5 t2^2): the first
    // two ambient rows are linear, the third is purely quadratic. The
    // quadratic coefficients follow the monomial order t1^2, t1 t2, t2^2.
    let c = DVector::zeros(3);
    let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    let q = DMatrix::from_row_slice(3, 3, &[
        0.0, 0.0, 0.0,
        0.0, 0.0, 0.0,
        0.3, 0.2, 0.5,
    ]);
    let model = QuadModel::new(c, a, q)?;

    let targets = [
        DVector::from_vec(vec![0.5, -0.3, 2.0]),
        DVector::from_vec(vec![-1.2, 0.8, -0.5]),
        DVector::from_vec(vec![0.3, 0.4, 1.2]),
    ];

    println!(
        "{:>24} {:>22} {:>12} {:>10} {:>12}",
        "target", "tau*", "distance", "iters", "grad norm"
    );
    for x in targets {
        let problem = ProjectionProblem::new(&model, x.clone())?;
        let projection = problem.project(None, 1e-12, 500)?;
        let foot = model.eval(&projection.tau)?;
        println!(
            "{:>24} {:>22} {:>12.6} {:>10} {:>12.2e}",
            format!("({:.2}, {:.2}, {:.2})", x[0], x[1], x[2]),
            format!("({:.4}, {:.4})", projection.tau[0], projection.tau[1]),
            (&x - &foot).norm(),
            projection.iterations,
            projection.grad_norm
        );

        // Sanity sweep: no latent grid point beats the reported minimizer.
        let best_grid = (0..=60)
            .flat_map(|i| (0..=60).map(move |j| (i, j)))
            .map(|(i, j)| {
                let tau = DVector::from_vec(vec![
                    -3.0 + 6.0 * i as f64 / 60.0,
                    -3.0 + 6.0 * j as f64 / 60.0,
                ]);
                (&x - model.eval(&tau).expect("latent dimension matches")).norm()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(
            (&x - &foot).norm() <= best_grid + 1e-9,
            "projection lost to a coarse grid"
        );
    }
    println!();
    println!("each row ends with a vanishing gradient norm, and no point of a");
    println!("61 x 61 latent grid comes closer than the reported projection");

    // A target on the bowl's symmetry axis makes the latent origin an exact
    // stationary point of the distance, so the default start cannot leave
    // it. Seeding the iteration off-axis escapes the saddle; this is why
    // the denoising pipeline initializes projections from a linear
    // least-squares estimate instead of the origin.
    let axis_target = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    let problem = ProjectionProblem::new(&model, axis_target)?;
    let stuck = problem.project(None, 1e-12, 500)?;
    let seed = DVector::from_vec(vec![0.4, 0.8]);
    let escaped = problem.project(Some(&seed), 1e-12, 500)?;
    println!();
    println!("axis target (0, 0, 1):");
    println!(
        "  from the origin : tau = ({:.4}, {:.4}), squared distance {:.6}",
        stuck.tau[0], stuck.tau[1], stuck.loss
    );
    println!(
        "  from (0.4, 0.8) : tau = ({:.4}, {:.4}), squared distance {:.6}",
        escaped.tau[0], escaped.tau[1], escaped.loss
    );
    assert!(
        escaped.loss < stuck.loss,
        "the seeded run should leave the saddle"
    );
    Ok(())
}
