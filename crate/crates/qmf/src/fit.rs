//! Alternating solver for quadratic matrix factorization.
//!
//! `fit_qmf` minimizes `|| X - R * T(phi) ||_F^2` over the coefficient matrix
//! `R` and latent coordinates `phi` with orthonormal, centered rows. Each
//! outer iteration solves the coefficient least-squares problem exactly,
//! projects every sample onto the updated surface, and re-normalizes the
//! latent coordinates. The loss trace records the optimal loss after each
//! coefficient solve; because the projection step never worsens a column
//! (warm starts keep the previous coordinate as a fallback) and the
//! re-normalization is an invertible reparameterization, the trace is
//! non-increasing up to solver tolerances.
//!
//! `fit_lmf` is the linear restriction (no quadratic block); it reproduces
//! an affine principal component fit and is used both as a baseline and as
//! the initializer convention for tuning diagnostics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{design_matrix, feature_len, quad_len, QuadModel};
use crate::linalg;
use crate::projection::ProjectionProblem;

/// Stop threshold on the subspace gap between consecutive embeddings.
pub const DEFAULT_EPS: f64 = 1e-6;

/// Default cap on outer iterations.
pub const DEFAULT_MAX_OUTER: usize = 100;

/// Sample count above which the spectral initializer switches from the
/// sample Gram matrix to an equivalent thin decomposition of the data.
const GRAM_EIGEN_LIMIT: usize = 512;

/// Latent coordinates with orthonormal, centered rows (`phi phi^T = I`,
/// `phi 1 = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    phi: DMatrix<f64>,
}

impl Embedding {
    /// Wraps a latent coordinate matrix, validating the constraints to 1e-10.
    pub fn try_new(phi: DMatrix<f64>) -> Result<Self> {
        let d = phi.nrows();
        let gram_err = (&phi * phi.transpose() - DMatrix::identity(d, d)).abs().max();
        let center_err = phi.column_sum().abs().max();
        if gram_err > 1e-10 || center_err > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "latent rows must be orthonormal and centered \
                 (orthonormality residual {gram_err:.3e}, centering residual {center_err:.3e})"
            )));
        }
        Ok(Self { phi })
    }

    fn new_unchecked(phi: DMatrix<f64>) -> Self {
        debug_assert!({
            let d = phi.nrows();
            (&phi * phi.transpose() - DMatrix::identity(d, d)).abs().max() < 1e-9
        });
        Self { phi }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn latent_dim(&self) -> usize {
        self.phi.nrows()
    }

    pub fn sample_count(&self) -> usize {
        self.phi.ncols()
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.phi.column(j).into_owned()
    }
}

/// Configuration shared by the alternating solvers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Subspace-gap threshold that ends the outer loop.
    pub eps: f64,
    /// Cap on outer iterations.
    pub max_outer: usize,
    /// Step tolerance of the per-sample projection.
    pub inner_tol: f64,
    /// Iteration cap of the per-sample projection.
    pub inner_max_iter: usize,
    /// Start each projection from the sample's previous latent coordinate.
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            max_outer: DEFAULT_MAX_OUTER,
            inner_tol: crate::projection::DEFAULT_PROJECT_TOL,
            inner_max_iter: crate::projection::DEFAULT_PROJECT_MAX_ITER,
            warm_start: true,
        }
    }
}

impl SolverConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must be positive and finite, got {}",
                self.eps
            )));
        }
        if self.max_outer == 0 || self.inner_max_iter == 0 {
            return Err(Error::InvalidParameter(
                "iteration caps must be at least 1".into(),
            ));
        }
        if !(self.inner_tol > 0.0) || !self.inner_tol.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "inner_tol must be positive and finite, got {}",
                self.inner_tol
            )));
        }
        Ok(())
    }
}

/// Output of the fitting routines.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: QuadModel,
    pub embedding: Embedding,
    /// Optimal loss after each coefficient solve, ending with the loss of
    /// the returned (model, embedding) pair. Regularized solvers trace the
    /// penalized objective while the penalty weight is fixed.
    pub loss_trace: Vec<f64>,
    /// Outer iterations performed.
    pub iterations: usize,
    /// Whether the subspace gap fell below `eps` before the iteration cap.
    pub converged: bool,
    /// Set when there are no more samples than coefficients per ambient
    /// row, so the unregularized fit can interpolate.
    pub interpolation_regime: bool,
    /// Ridge weight applied by the last coefficient solve, when any.
    pub lambda_used: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitResultRepr {
    model: QuadModel,
    phi: Vec<Vec<f64>>,
    loss_trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    interpolation_regime: bool,
    lambda_used: Option<f64>,
}

impl Serialize for FitResult {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let phi = self.embedding.matrix();
        FitResultRepr {
            model: self.model.clone(),
            phi: (0..phi.nrows())
                .map(|i| phi.row(i).iter().copied().collect())
                .collect(),
            loss_trace: self.loss_trace.clone(),
            iterations: self.iterations,
            converged: self.converged,
            interpolation_regime: self.interpolation_regime,
            lambda_used: self.lambda_used,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FitResult {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = FitResultRepr::deserialize(deserializer)?;
        let d = repr.phi.len();
        let m = repr.phi.first().map(|r| r.len()).unwrap_or(0);
        if repr.phi.iter().any(|r| r.len() != m) {
            return Err(D::Error::custom("ragged phi rows"));
        }
        let phi = DMatrix::from_fn(d, m, |i, j| repr.phi[i][j]);
        let embedding = Embedding::try_new(phi).map_err(D::Error::custom)?;
        Ok(FitResult {
            model: repr.model,
            embedding,
            loss_trace: repr.loss_trace,
            iterations: repr.iterations,
            converged: repr.converged,
            interpolation_regime: repr.interpolation_regime,
            lambda_used: repr.lambda_used,
        })
    }
}

pub(crate) fn validate_data(x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::InvalidParameter(
            "data matrix must have at least one row and one column".into(),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "data matrix contains non-finite entries".into(),
        ));
    }
    Ok(())
}

/// Spectral initialization: the top-`d` unit eigenvectors of the centered
/// sample Gram matrix, stacked as rows.
///
/// Eigenvector signs follow a fixed convention (the entry of largest
/// magnitude is made positive, earliest such entry deciding ties) so the
/// initializer is reproducible across runs and point orderings.
pub fn init_embedding(x: &DMatrix<f64>, d: usize) -> Result<Embedding> {
    validate_data(x)?;
    let m = x.ncols();
    if d == 0 || d > x.nrows() {
        return Err(Error::InvalidParameter(format!(
            "latent dimension must be in 1..={} (ambient), got {d}",
            x.nrows()
        )));
    }
    let (centered, _) = linalg::center_columns(x);

    // Pairs of (eigenvalue of the centered Gram, unit eigenvector).
    let pairs: Vec<(f64, DVector<f64>)> = if m <= GRAM_EIGEN_LIMIT {
        let gram = centered.transpose() * &centered;
        linalg::sym_eigen_desc(&gram).into_iter().take(d).collect()
    } else {
        // Equivalent thin route for large samples: right singular vectors of
        // the centered data are the Gram eigenvectors.
        let svd = centered.transpose().svd(true, false);
        let u = svd.u.as_ref().expect("svd factors requested");
        let mut pairs: Vec<(f64, DVector<f64>)> = svd
            .singular_values
            .iter()
            .enumerate()
            .map(|(i, &s)| (s * s, u.column(i).into_owned()))
            .collect();
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        pairs.truncate(d);
        pairs
    };

    let max_eig = pairs.first().map(|p| p.0).unwrap_or(0.0);
    let threshold = 1e-12 * max_eig.max(1.0);
    let positive = pairs.iter().filter(|p| p.0 > threshold).count();
    if positive < d {
        return Err(Error::RankDeficient {
            needed: d,
            found: positive,
        });
    }

    let mut phi = DMatrix::zeros(d, m);
    for (row, (_, vector)) in pairs.iter().enumerate() {
        let mut v = vector.clone();
        let mut lead = 0;
        for i in 1..m {
            if v[i].abs() > v[lead].abs() {
                lead = i;
            }
        }
        if v[lead] < 0.0 {
            v = -v;
        }
        phi.row_mut(row).tr_copy_from(&v);
    }
    Ok(Embedding::new_unchecked(phi))
}

/// Feature-space loss `|| x - model(phi) ||_F^2` for arbitrary latent
/// coordinates.
pub fn loss(x: &DMatrix<f64>, model: &QuadModel, phi: &DMatrix<f64>) -> Result<f64> {
    if phi.nrows() != model.latent_dim() {
        return Err(Error::DimensionMismatch {
            context: "loss latent rows",
            expected: model.latent_dim(),
            found: phi.nrows(),
        });
    }
    if x.ncols() != phi.ncols() || x.nrows() != model.ambient_dim() {
        return Err(Error::DimensionMismatch {
            context: "loss data shape",
            expected: model.ambient_dim() * phi.ncols(),
            found: x.nrows() * x.ncols(),
        });
    }
    Ok((x - model.to_flat() * design_matrix(phi)).norm_squared())
}

/// Optimal coefficients for fixed latent coordinates, by a pseudo-inverse of
/// the design matrix. `phi` need not satisfy the embedding constraints; the
/// optimal loss is invariant under invertible affine reparameterizations of
/// the latent rows.
pub fn solve_model(x: &DMatrix<f64>, phi: &DMatrix<f64>) -> Result<QuadModel> {
    validate_data(x)?;
    if x.ncols() != phi.ncols() {
        return Err(Error::DimensionMismatch {
            context: "coefficient solve sample count",
            expected: x.ncols(),
            found: phi.ncols(),
        });
    }
    let t = design_matrix(phi);
    let r = linalg::least_squares_coefficients(x, &t);
    QuadModel::from_flat(&r, phi.nrows())
}

/// Centers the rows of `phi_tilde` and whitens them by the inverse square
/// root of their covariance, restoring the embedding constraints while
/// preserving the centered row space.
pub fn orthonormalize(phi_tilde: &DMatrix<f64>) -> Result<Embedding> {
    let m = phi_tilde.ncols();
    if m == 0 {
        return Err(Error::InvalidParameter("empty latent matrix".into()));
    }
    let mut centered = phi_tilde.clone();
    for mut row in centered.row_iter_mut() {
        let mean = row.sum() / m as f64;
        row.add_scalar_mut(-mean);
    }
    let cov = &centered * centered.transpose();
    let pairs = linalg::sym_eigen_desc(&cov);
    let max_eig = pairs.first().map(|p| p.0).unwrap_or(0.0);
    let threshold = 1e-14 * max_eig.max(1.0);
    let min_eig = pairs.last().map(|p| p.0).unwrap_or(0.0);
    if min_eig < threshold {
        return Err(Error::RankCollapse {
            eigenvalue: min_eig,
            threshold,
        });
    }
    let d = phi_tilde.nrows();
    let mut whitener = DMatrix::zeros(d, d);
    for (value, vector) in &pairs {
        whitener += vector * vector.transpose() / value.sqrt();
    }
    Ok(Embedding::new_unchecked(whitener * centered))
}

/// Sine of the largest principal angle between two embeddings' row spaces,
/// computed from the `d x d` cross-Gram matrix (no sample-sized products).
pub fn subspace_gap(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.latent_dim() != b.latent_dim() || a.sample_count() != b.sample_count() {
        return Err(Error::DimensionMismatch {
            context: "subspace gap shapes",
            expected: a.latent_dim() * a.sample_count(),
            found: b.latent_dim() * b.sample_count(),
        });
    }
    let cross = a.matrix() * b.matrix().transpose();
    let smin = linalg::smallest_singular_value(&cross);
    Ok((1.0 - (smin * smin).clamp(0.0, 1.0)).sqrt())
}

/// One coefficient solve inside the alternating loop: returns the model, the
/// ridge weight it applied (if any), and the objective value recorded as the
/// trace entry for this solve.
pub(crate) type CoefficientStep<'a> =
    dyn FnMut(&DMatrix<f64>, &Embedding) -> Result<(QuadModel, Option<f64>, f64)> + 'a;

/// Shared alternating loop. After the stop test a final coefficient solve
/// re-pairs the model with the exit embedding, so the returned pair is
/// consistent and the last trace entry is its loss.
pub(crate) fn alternate(
    x: &DMatrix<f64>,
    d: usize,
    cfg: &SolverConfig,
    step: &mut CoefficientStep<'_>,
) -> Result<FitResult> {
    cfg.validate()?;
    let mut embedding = init_embedding(x, d)?;
    let m = x.ncols();
    let interpolation_regime = m <= feature_len(d);

    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_outer {
        iterations += 1;
        let (model, _, objective) = step(x, &embedding)?;
        trace.push(objective);

        let mut phi_tilde = DMatrix::zeros(d, m);
        let mut problem = ProjectionProblem::new(&model, DVector::zeros(x.nrows()))?;
        for j in 0..m {
            problem.set_target(x.column(j).into_owned())?;
            let init = cfg.warm_start.then(|| embedding.column(j));
            let proj = problem.project(init.as_ref(), cfg.inner_tol, cfg.inner_max_iter)?;
            phi_tilde.set_column(j, &proj.tau);
        }

        let next = orthonormalize(&phi_tilde)?;
        let gap = subspace_gap(&next, &embedding)?;
        embedding = next;
        if gap <= cfg.eps {
            converged = true;
            break;
        }
    }

    let (model, lambda_used, objective) = step(x, &embedding)?;
    trace.push(objective);

    Ok(FitResult {
        model,
        embedding,
        loss_trace: trace,
        iterations,
        converged,
        interpolation_regime,
        lambda_used,
    })
}

/// Fits a quadratic surface by alternating exact coefficient solves and
/// per-sample projections.
pub fn fit_qmf(x: &DMatrix<f64>, d: usize, cfg: &SolverConfig) -> Result<FitResult> {
    alternate(x, d, cfg, &mut |x, emb| {
        let model = solve_model(x, emb.matrix())?;
        let objective = loss(x, &model, emb.matrix())?;
        Ok((model, None, objective))
    })
}

/// Fits the linear restriction (quadratic block pinned to zero). Equivalent
/// to an affine principal component fit of the data.
pub fn fit_lmf(x: &DMatrix<f64>, d: usize, cfg: &SolverConfig) -> Result<FitResult> {
    alternate(x, d, cfg, &mut |x, emb| {
        let phi = emb.matrix();
        let mut lin_design = DMatrix::zeros(1 + d, phi.ncols());
        lin_design.row_mut(0).fill(1.0);
        lin_design.rows_mut(1, d).copy_from(phi);
        let r = linalg::least_squares_coefficients(x, &lin_design);
        let model = QuadModel::new(
            r.column(0).into_owned(),
            r.columns(1, d).into_owned(),
            DMatrix::zeros(x.nrows(), quad_len(d)),
        )?;
        let objective = loss(x, &model, emb.matrix())?;
        Ok((model, None, objective))
    })
}
