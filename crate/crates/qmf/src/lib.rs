//! Quadratic matrix factorization (QMF) for manifold fitting and denoising.
//!
//! A point cloud `X` (one column per sample, ambient dimension `D`) is
//! approximated by a quadratic surface
//!
//! ```text
//! f(tau) = c + A*tau + B(tau, tau),        tau in R^d,  d < D,
//! ```
//!
//! where `B` is a symmetric quadratic form. Fitting alternates between a
//! linear least-squares update of the coefficients `(c, A, B)` and a
//! per-sample projection of each column onto the current surface, with the
//! latent coordinates kept orthonormal and centered. A ridge penalty on the
//! quadratic block (`rqmf`) tames overfitting on small neighborhoods, and a
//! one-dimensional tuning rule picks the penalty strength from the slope of
//! the regularization path.
//!
//! The crate is organized around that pipeline:
//!
//! * [`features`] - quadratic monomial layout, design matrices, and the
//!   [`QuadModel`](features::QuadModel) coefficient container.
//! * [`projection`] - projection of a single ambient point onto a fixed
//!   quadratic surface, with a computable convexity certificate.
//! * [`fit`] - the alternating solver (`fit_qmf`), its linear restriction
//!   (`fit_lmf`), and the embedding utilities they share.
//! * [`ridge`] - ridge-regularized coefficient updates, the regularization
//!   path `s(lambda)` with its derivatives, and `tune_lambda`.
//! * [`denoise`] - chart construction and per-point denoising of a cloud,
//!   with a local-PCA fallback and baseline.
//! * [`datasets`] - seeded synthetic generators, ground-truth distance
//!   metrics, and a benchmark sweep over methods and chart sizes.
//! * [`io`] - CSV/JSON readers and writers for clouds, models, tuning
//!   curves, and reports.
//!
//! # Example
//!
//! Fit a curve through a handful of noiseless samples of a parabola and
//! check that the surface reproduces them:
//!
//! ```
//! use nalgebra::{DMatrix, DVector};
//! use qmf::fit::{fit_qmf, SolverConfig};
//!
//! // Columns are points (t, t^2) for a few values of t.
//! let ts = [-1.0, -0.6, -0.2, 0.0, 0.3, 0.7, 1.1];
//! let x = DMatrix::from_fn(2, ts.len(), |i, j| if i == 0 { ts[j] } else { ts[j] * ts[j] });
//!
//! let fit = fit_qmf(&x, 1, &SolverConfig::default()).unwrap();
//! assert!(fit.converged);
//! let rel = fit.loss_trace.last().unwrap() / x.norm_squared();
//! assert!(rel < 1e-10);
//! ```

pub mod datasets;
pub mod denoise;
pub mod error;
pub mod features;
pub mod fit;
pub mod io;
mod linalg;
pub mod projection;
pub mod ridge;

pub use error::{Error, Result};
