//! Projection of an ambient point onto a fixed quadratic surface.
//!
//! Given a surface `f(tau) = c + A tau + B(tau, tau)` and an ambient point
//! `x`, the projection problem minimizes
//!
//! ```text
//! h(tau) = || x - c - A tau - B(tau, tau) ||^2,
//! ```
//!
//! a quartic in `tau`. The solver alternates exact minimization of the
//! bilinear surrogate
//!
//! ```text
//! g(tau, eta) = 0.5 || x - c - A tau - B(tau, eta) ||^2
//!             + 0.5 || x - c - A eta - B(tau, eta) ||^2,
//! ```
//!
//! which agrees with `h` on the diagonal and is an ordinary least-squares
//! problem in each argument with the other fixed. Each half-step solves the
//! `d x d` normal equations `gamma(eta) tau = zeta(eta)`; descent of `g` is
//! structural, and when the computable certificate of
//! [`ProjectionProblem::certificate`] holds the surrogate is strongly convex
//! on the certified ball, so the iteration has a unique fixed point there.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::features::{QuadModel, SymTensor};
use crate::linalg;

/// Default step tolerance for [`ProjectionProblem::project`].
pub const DEFAULT_PROJECT_TOL: f64 = 1e-8;

/// Default iteration cap for [`ProjectionProblem::project`].
pub const DEFAULT_PROJECT_MAX_ITER: usize = 200;

/// One ambient point paired with the surface it is being projected onto.
#[derive(Debug, Clone)]
pub struct ProjectionProblem {
    x: DVector<f64>,
    c: DVector<f64>,
    a: DMatrix<f64>,
    tensor: SymTensor,
}

/// Outcome of [`ProjectionProblem::project`].
#[derive(Debug, Clone)]
pub struct Projection {
    /// Latent minimizer candidate.
    pub tau: DVector<f64>,
    /// Partner iterate of the final surrogate step.
    pub eta: DVector<f64>,
    /// Half-step pairs performed.
    pub iterations: usize,
    /// Step criterion met and the gradient residual is small.
    pub converged: bool,
    /// `h` at the returned `tau`.
    pub loss: f64,
    /// Euclidean norm of the gradient of `h` at the returned `tau`.
    pub grad_norm: f64,
}

/// Computable strong-convexity certificate for the surrogate on the ball
/// `||tau|| <= alpha`.
#[derive(Debug, Clone, Copy)]
pub struct ConvexityCertificate {
    /// Ball radius the certificate refers to.
    pub alpha: f64,
    /// Largest spectral norm over tensor slices.
    pub slice_norm: f64,
    /// Largest slice norm for which the certificate can hold at this radius.
    pub slice_norm_bound: f64,
    /// Smallest singular value of the linear block.
    pub min_singular_linear: f64,
    /// Certified lower bound on the surrogate Hessian spectrum when satisfied.
    pub strong_convexity: f64,
    /// Whether the certificate condition holds.
    pub satisfied: bool,
}

impl ProjectionProblem {
    /// Pairs a surface with a target point.
    pub fn new(model: &QuadModel, x: DVector<f64>) -> Result<Self> {
        Self::from_parts(
            model.intercept().clone(),
            model.linear().clone(),
            model.tensor(),
            x,
        )
    }

    /// Builds the problem from raw surface components.
    pub fn from_parts(
        c: DVector<f64>,
        a: DMatrix<f64>,
        tensor: SymTensor,
        x: DVector<f64>,
    ) -> Result<Self> {
        let ambient = c.len();
        if a.nrows() != ambient || tensor.ambient_dim() != ambient || x.len() != ambient {
            return Err(Error::DimensionMismatch {
                context: "projection ambient dimension",
                expected: ambient,
                found: a.nrows().max(tensor.ambient_dim()).max(x.len()),
            });
        }
        if tensor.latent_dim() != a.ncols() {
            return Err(Error::DimensionMismatch {
                context: "projection latent dimension",
                expected: a.ncols(),
                found: tensor.latent_dim(),
            });
        }
        if ambient == 0 || a.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "projection needs positive ambient and latent dimensions".into(),
            ));
        }
        Ok(Self { x, c, a, tensor })
    }

    /// Swaps in a new target point, keeping the surface.
    pub fn set_target(&mut self, x: DVector<f64>) -> Result<()> {
        if x.len() != self.c.len() {
            return Err(Error::DimensionMismatch {
                context: "projection target length",
                expected: self.c.len(),
                found: x.len(),
            });
        }
        self.x = x;
        Ok(())
    }

    pub fn latent_dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.c.len()
    }

    fn diag_residual(&self, tau: &DVector<f64>) -> DVector<f64> {
        &self.x - &self.c - &self.a * tau - self.tensor.bilinear(tau, tau)
    }

    /// Squared distance `h(tau)` between the target and the surface point.
    pub fn loss(&self, tau: &DVector<f64>) -> f64 {
        self.diag_residual(tau).norm_squared()
    }

    /// Gradient of `h`: `-2 (A + 2 B_tau)^T r` with `r` the residual.
    pub fn grad(&self, tau: &DVector<f64>) -> DVector<f64> {
        let r = self.diag_residual(tau);
        let jac = &self.a + self.tensor.action(tau) * 2.0;
        jac.transpose() * r * -2.0
    }

    /// Bilinear surrogate `g(tau, eta)`; agrees with `h` on the diagonal.
    pub fn surrogate(&self, tau: &DVector<f64>, eta: &DVector<f64>) -> f64 {
        let cross = self.tensor.bilinear(tau, eta);
        let base = &self.x - &self.c - &cross;
        let r1 = &base - &self.a * tau;
        let r2 = &base - &self.a * eta;
        0.5 * (r1.norm_squared() + r2.norm_squared())
    }

    /// Normal matrix `gamma(eta) = (A + B_eta)^T (A + B_eta) + B_eta^T B_eta`
    /// of the half-step least-squares problem.
    pub fn normal_matrix(&self, eta: &DVector<f64>) -> DMatrix<f64> {
        let act = self.tensor.action(eta);
        let lifted = &self.a + &act;
        lifted.transpose() * &lifted + act.transpose() * &act
    }

    /// Right-hand side `zeta(eta)` of the half-step normal equations.
    pub fn normal_rhs(&self, eta: &DVector<f64>) -> DVector<f64> {
        let act = self.tensor.action(eta);
        let xc = &self.x - &self.c;
        let lifted = &self.a + &act;
        lifted.transpose() * &xc + act.transpose() * (&xc - &self.a * eta)
    }

    /// Exact minimizer of `g(., eta)`.
    fn half_step(&self, eta: &DVector<f64>) -> Result<DVector<f64>> {
        let gamma = self.normal_matrix(eta);
        let zeta = self.normal_rhs(eta);
        linalg::solve_spd_vec(&gamma, &zeta, "projection half-step")
    }

    /// Hessian of the surrogate at `(tau, eta)`, a symmetric `2d x 2d` matrix
    /// with diagonal blocks `gamma(eta)`, `gamma(tau)`.
    pub fn surrogate_hessian(&self, tau: &DVector<f64>, eta: &DVector<f64>) -> DMatrix<f64> {
        let d = self.latent_dim();
        let act_tau = self.tensor.action(tau);
        let act_eta = self.tensor.action(eta);
        let mid = &self.x - &self.c - &self.a * ((tau + eta) * 0.5) - self.tensor.bilinear(tau, eta);
        let cross = self.tensor.adjoint(&mid) * -2.0
            + act_eta.transpose() * (&self.a + &act_tau)
            + (&self.a + &act_eta).transpose() * &act_tau;

        let mut h = DMatrix::zeros(2 * d, 2 * d);
        h.view_mut((0, 0), (d, d)).copy_from(&self.normal_matrix(eta));
        h.view_mut((d, d), (d, d)).copy_from(&self.normal_matrix(tau));
        h.view_mut((0, d), (d, d)).copy_from(&cross);
        h.view_mut((d, 0), (d, d)).copy_from(&cross.transpose());
        h
    }

    /// Evaluates the strong-convexity certificate on the ball of radius
    /// `alpha` around the latent origin.
    ///
    /// With `b` the largest slice norm, `l1 = ||x - c||_1`, `a21` the sum of
    /// row norms of `A`, and `s = sigma_min(A)`, the condition is
    ///
    /// ```text
    /// (2 l1 + 4 alpha a21) b + 3 D alpha^2 b^2  <=  s^2 / 4,
    /// ```
    ///
    /// equivalently `b <= slice_norm_bound`, the positive root of the
    /// quadratic. When satisfied, the surrogate Hessian is bounded below by
    /// `s^2 / 4` on the ball.
    pub fn certificate(&self, alpha: f64) -> Result<ConvexityCertificate> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "certificate radius must be positive and finite, got {alpha}"
            )));
        }
        let ambient = self.ambient_dim() as f64;
        let b = self.tensor.max_slice_norm();
        let sigma = linalg::smallest_singular_value(&self.a);
        let l1 = (&self.x - &self.c).abs().sum();
        let a21: f64 = (0..self.a.nrows())
            .map(|i| self.a.row(i).norm())
            .sum();

        let strong = sigma * sigma / 4.0;
        let lhs = (2.0 * l1 + 4.0 * alpha * a21) * b + 3.0 * ambient * alpha * alpha * b * b;
        let den = 3.0 * ambient * alpha * alpha;
        let u = l1 + 2.0 * alpha * a21;
        let bound = ((u * u + den * strong).sqrt() - u) / den;

        Ok(ConvexityCertificate {
            alpha,
            slice_norm: b,
            slice_norm_bound: bound,
            min_singular_linear: sigma,
            strong_convexity: strong,
            satisfied: lhs <= strong,
        })
    }

    /// Projects the target onto the surface by alternating half-steps.
    ///
    /// Starts from `init` (latent origin when absent) and stops once
    /// `max(||tau_s - tau_{s-1}||, ||tau_s - eta_s||) <= tol` or after
    /// `max_iter` pairs of half-steps. The converged flag additionally
    /// requires the gradient norm of `h` at the result to be at most
    /// `10 * tol`. Without convergence the best iterate seen (by `h`) is
    /// returned instead of the last, so the reported loss never exceeds the
    /// loss at the initial point.
    pub fn project(
        &self,
        init: Option<&DVector<f64>>,
        tol: f64,
        max_iter: usize,
    ) -> Result<Projection> {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "projection tolerance must be positive and finite, got {tol}"
            )));
        }
        if max_iter == 0 {
            return Err(Error::InvalidParameter(
                "projection needs at least one iteration".into(),
            ));
        }
        let d = self.latent_dim();
        let mut tau = match init {
            Some(t) if t.len() != d => {
                return Err(Error::DimensionMismatch {
                    context: "projection init length",
                    expected: d,
                    found: t.len(),
                });
            }
            Some(t) => t.clone(),
            None => DVector::zeros(d),
        };
        let mut eta = tau.clone();

        let mut best_tau = tau.clone();
        let mut best_loss = self.loss(&tau);
        let init_loss = best_loss;

        let mut iterations = 0;
        let mut step_ok = false;
        for s in 1..=max_iter {
            iterations = s;
            let tau_prev = tau;
            tau = self.half_step(&eta)?;
            eta = self.half_step(&tau)?;

            let loss_tau = self.loss(&tau);
            if loss_tau < best_loss {
                best_loss = loss_tau;
                best_tau.copy_from(&tau);
            }
            let loss_eta = self.loss(&eta);
            if loss_eta < best_loss {
                best_loss = loss_eta;
                best_tau.copy_from(&eta);
            }

            let step = (&tau - &tau_prev).norm().max((&tau - &eta).norm());
            if step <= tol {
                step_ok = true;
                break;
            }
        }

        // Best-loss tracking includes the initial point, so the fallback
        // iterate never loses to it.
        let final_loss = self.loss(&tau);
        let use_final = step_ok && final_loss <= init_loss;
        let (out_tau, out_loss) = if use_final {
            (tau, final_loss)
        } else {
            (best_tau, best_loss)
        };
        let grad_norm = self.grad(&out_tau).norm();

        Ok(Projection {
            converged: step_ok && use_final && grad_norm <= 10.0 * tol,
            tau: out_tau,
            eta,
            iterations,
            loss: out_loss,
            grad_norm,
        })
    }
}
