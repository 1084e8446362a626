//! Ridge-regularized coefficient solves and penalty tuning.
//!
//! The regularized objective is `||(X - R T(phi)) W^{1/2}||_F^2 +
//! lambda ||R J||_F^2`, where `J` selects the quadratic coefficient block and
//! `W` holds per-sample weights. For fixed latent coordinates the minimizer
//! is a ridge regression, and the penalty energy `s(lambda) = ||R(lambda)
//! J||_F^2` is smooth, non-increasing, and convex in `lambda`. The tuning
//! rule picks `lambda` so the sensitivity `-s'(lambda)` matches a prescribed
//! level `delta`, by bracketing and bisection on the monotone slope.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{design_matrix, feature_len, quad_len, QuadModel};
use crate::fit::{alternate, Embedding, FitResult, SolverConfig};
use crate::linalg;

/// Smallest penalty used by the tuner; keeps bisection away from the
/// singular `lambda = 0` regime.
pub const LAMBDA_FLOOR: f64 = 1e-12;

/// First bracket endpoint tried when hunting for the tuned penalty.
const BRACKET_START: f64 = 1e-6;

/// Largest penalty the bracket search will reach before giving up.
const BRACKET_CEILING: f64 = 1e12;

/// Relative tolerance of the tuner, applied to both the slope residual and
/// the bracket width.
const TUNE_REL_TOL: f64 = 1e-6;

/// Per-sample weights for the squared residuals (the diagonal of `W`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Weights {
    w: Vec<f64>,
}

impl Weights {
    /// Validates that weights are finite, non-negative, and not all zero.
    pub fn try_new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidParameter("weight vector is empty".into()));
        }
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "weights must be finite and non-negative".into(),
            ));
        }
        if w.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidParameter("all weights are zero".into()));
        }
        Ok(Self { w })
    }

    /// Uniform unit weights, the equal-weight objective.
    pub fn equal(m: usize) -> Self {
        Self { w: vec![1.0; m] }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    /// Number of strictly positive entries. Fits are ill-posed when this is
    /// below the feature length; callers surface that as a warning.
    pub fn positive_count(&self) -> usize {
        self.w.iter().filter(|v| **v > 0.0).count()
    }

    /// Scales the columns of `mat` by the square roots of the weights, the
    /// `M W^{1/2}` product shared by every weighted solve.
    fn scale_columns(&self, mat: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = mat.clone();
        for (j, &w) in self.w.iter().enumerate() {
            out.column_mut(j).scale_mut(w.sqrt());
        }
        out
    }
}

/// Regularization mode: a fixed penalty or a sensitivity target that the
/// tuner converts into a penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegMode {
    /// Fixed ridge penalty `lambda >= 0`.
    Lambda(f64),
    /// Pick `lambda` with `-s'(lambda) = delta`, retuned each outer
    /// iteration.
    Delta(f64),
}

impl RegMode {
    /// Checks the mode's parameter range: `lambda >= 0`, `delta > 0`.
    pub fn validate(&self) -> Result<()> {
        match *self {
            RegMode::Lambda(l) if l.is_finite() && l >= 0.0 => Ok(()),
            RegMode::Lambda(l) => Err(Error::InvalidParameter(format!(
                "lambda must be finite and non-negative, got {l}"
            ))),
            RegMode::Delta(d) if d.is_finite() && d > 0.0 => Ok(()),
            RegMode::Delta(d) => Err(Error::InvalidParameter(format!(
                "delta must be finite and positive, got {d}"
            ))),
        }
    }
}

/// Configuration for the regularized solver.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegConfig {
    pub reg: RegMode,
    /// Per-sample weights; uniform when omitted.
    #[serde(default)]
    pub weights: Option<Weights>,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl RegConfig {
    pub fn lambda(lambda: f64) -> Self {
        Self {
            reg: RegMode::Lambda(lambda),
            weights: None,
            solver: SolverConfig::default(),
        }
    }

    pub fn delta(delta: f64) -> Self {
        Self {
            reg: RegMode::Delta(delta),
            weights: None,
            solver: SolverConfig::default(),
        }
    }
}

/// Weighted data-fit term `||(X - R T(phi)) W^{1/2}||_F^2`.
pub fn loss_weighted(
    x: &DMatrix<f64>,
    model: &QuadModel,
    phi: &DMatrix<f64>,
    weights: &Weights,
) -> Result<f64> {
    if weights.len() != x.ncols() {
        return Err(Error::DimensionMismatch {
            context: "weight count",
            expected: x.ncols(),
            found: weights.len(),
        });
    }
    let resid = x - model.to_flat() * design_matrix(phi);
    Ok(resid
        .column_iter()
        .zip(weights.as_slice())
        .map(|(col, &w)| w * col.norm_squared())
        .sum())
}

/// Precomputed normal-equation blocks for one `(X, phi, W)` triple, shared
/// by coefficient solves and the `s(lambda)` curve. The system matrix is
/// `M(lambda) = T W T^T + lambda J J^T`, which adds `lambda` to the diagonal
/// of the quadratic block only.
pub struct RidgePath {
    /// `T W T^T`.
    normal: DMatrix<f64>,
    /// `T W X^T`, the transposed right-hand side.
    rhs: DMatrix<f64>,
    latent_dim: usize,
}

impl RidgePath {
    pub fn new(x: &DMatrix<f64>, emb: &Embedding, weights: &Weights) -> Result<Self> {
        crate::fit::validate_data(x)?;
        if x.ncols() != emb.sample_count() {
            return Err(Error::DimensionMismatch {
                context: "ridge sample count",
                expected: x.ncols(),
                found: emb.sample_count(),
            });
        }
        if weights.len() != x.ncols() {
            return Err(Error::DimensionMismatch {
                context: "ridge weight count",
                expected: x.ncols(),
                found: weights.len(),
            });
        }
        let tw = weights.scale_columns(&design_matrix(emb.matrix()));
        let xw = weights.scale_columns(x);
        Ok(Self {
            normal: &tw * tw.transpose(),
            rhs: &tw * xw.transpose(),
            latent_dim: emb.latent_dim(),
        })
    }

    fn quad_offset(&self) -> usize {
        1 + self.latent_dim
    }

    fn quad_len(&self) -> usize {
        quad_len(self.latent_dim)
    }

    fn system(&self, lambda: f64) -> DMatrix<f64> {
        let mut m = self.normal.clone();
        for i in self.quad_offset()..m.nrows() {
            m[(i, i)] += lambda;
        }
        m
    }

    fn factor(&self, lambda: f64) -> Result<Cholesky<f64, Dyn>> {
        Cholesky::new(self.system(lambda)).ok_or_else(|| {
            let eigs = linalg::sym_eigen_desc(&self.system(lambda));
            let max = eigs.first().map(|p| p.0.abs()).unwrap_or(0.0);
            let min = eigs.last().map(|p| p.0.abs()).unwrap_or(0.0);
            Error::SingularSystem {
                context: "ridge normal equations",
                rcond: if max > 0.0 { min / max } else { 0.0 },
            }
        })
    }

    /// Ridge coefficients at `lambda > 0` (or `lambda = 0` when the normal
    /// matrix happens to be positive definite).
    pub fn coefficients(&self, lambda: f64) -> Result<QuadModel> {
        let r_t = self.factor(lambda)?.solve(&self.rhs);
        QuadModel::from_flat(&r_t.transpose(), self.latent_dim)
    }

    /// Penalty energy `s(lambda) = ||R(lambda) J||_F^2`.
    pub fn energy(&self, lambda: f64) -> Result<f64> {
        let r_t = self.factor(lambda)?.solve(&self.rhs);
        Ok(r_t.rows(self.quad_offset(), self.quad_len()).norm_squared())
    }

    /// First derivative `s'(lambda) = -2 tr(Q N Q^T)` with
    /// `N = J^T M^{-1} J`, computed as a negated sum of squares so the sign
    /// is exact.
    pub fn slope(&self, lambda: f64) -> Result<f64> {
        let (k_qt, _) = self.slope_parts(lambda)?;
        Ok(-2.0 * k_qt.norm_squared())
    }

    /// Second derivative `s''(lambda) = 6 tr(Q N^2 Q^T)`, likewise a sum of
    /// squares.
    pub fn curvature(&self, lambda: f64) -> Result<f64> {
        let (k_qt, k) = self.slope_parts(lambda)?;
        Ok(6.0 * (k.transpose() * k_qt).norm_squared())
    }

    /// Evaluates `(s, s', s'')` sharing one factorization.
    pub fn evaluate(&self, lambda: f64) -> Result<(f64, f64, f64)> {
        let chol = self.factor(lambda)?;
        let r_t = chol.solve(&self.rhs);
        let q_t = r_t.rows(self.quad_offset(), self.quad_len()).into_owned();
        let k = self.whitened_selector(&chol);
        let k_qt = &k * &q_t;
        Ok((
            q_t.norm_squared(),
            -2.0 * k_qt.norm_squared(),
            6.0 * (k.transpose() * k_qt).norm_squared(),
        ))
    }

    /// `K = L^{-1} J` for `M = L L^T`, so that `N = K^T K` is manifestly
    /// positive semidefinite.
    fn whitened_selector(&self, chol: &Cholesky<f64, Dyn>) -> DMatrix<f64> {
        let flen = feature_len(self.latent_dim);
        let mut j = DMatrix::zeros(flen, self.quad_len());
        for i in 0..self.quad_len() {
            j[(self.quad_offset() + i, i)] = 1.0;
        }
        chol.l()
            .solve_lower_triangular(&j)
            .expect("Cholesky factor has positive diagonal")
    }

    fn slope_parts(&self, lambda: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let chol = self.factor(lambda)?;
        let r_t = chol.solve(&self.rhs);
        let q_t = r_t.rows(self.quad_offset(), self.quad_len()).into_owned();
        let k = self.whitened_selector(&chol);
        Ok((&k * q_t, k))
    }
}

fn validate_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and non-negative, got {lambda}"
        )));
    }
    Ok(())
}

/// Minimizer of the weighted ridge objective for fixed latent coordinates.
///
/// With `lambda = 0` this is the plain weighted least-squares solve and
/// requires the design matrix to have full row rank.
pub fn solve_model_ridge(
    x: &DMatrix<f64>,
    emb: &Embedding,
    lambda: f64,
    weights: &Weights,
) -> Result<QuadModel> {
    validate_lambda(lambda)?;
    if lambda == 0.0 {
        crate::fit::validate_data(x)?;
        if weights.len() != x.ncols() {
            return Err(Error::DimensionMismatch {
                context: "ridge weight count",
                expected: x.ncols(),
                found: weights.len(),
            });
        }
        let tw = weights.scale_columns(&design_matrix(emb.matrix()));
        let smax = linalg::spectral_norm(&tw);
        let smin = linalg::smallest_singular_value(&tw);
        let rcond = if smax > 0.0 { smin / smax } else { 0.0 };
        if rcond < linalg::SINGULAR_RCOND {
            return Err(Error::SingularSystem {
                context: "unregularized coefficient solve",
                rcond,
            });
        }
        let xw = weights.scale_columns(x);
        let r = linalg::least_squares_coefficients(&xw, &tw);
        return QuadModel::from_flat(&r, emb.latent_dim());
    }
    RidgePath::new(x, emb, weights)?.coefficients(lambda)
}

/// Penalty energy `s(lambda)`; see [`RidgePath::energy`].
pub fn s_lambda(x: &DMatrix<f64>, emb: &Embedding, weights: &Weights, lambda: f64) -> Result<f64> {
    validate_lambda(lambda)?;
    RidgePath::new(x, emb, weights)?.energy(lambda)
}

/// Slope `s'(lambda)`; see [`RidgePath::slope`].
pub fn s_prime(x: &DMatrix<f64>, emb: &Embedding, weights: &Weights, lambda: f64) -> Result<f64> {
    validate_lambda(lambda)?;
    RidgePath::new(x, emb, weights)?.slope(lambda)
}

/// Curvature `s''(lambda)`; see [`RidgePath::curvature`].
pub fn s_double_prime(
    x: &DMatrix<f64>,
    emb: &Embedding,
    weights: &Weights,
    lambda: f64,
) -> Result<f64> {
    validate_lambda(lambda)?;
    RidgePath::new(x, emb, weights)?.curvature(lambda)
}

/// Where the tuner's answer came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuneStatus {
    /// Bisection converged to an interior root of `s'(lambda) = -delta`.
    Interior,
    /// The curve is already flatter than `delta` at the floor penalty.
    Floored,
    /// No bracket below the ceiling: the curve stays steeper than `delta`.
    Ceiling,
}

/// Tuned penalty with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunedLambda {
    pub lambda: f64,
    pub status: TuneStatus,
}

/// Solves `s'(lambda) = -delta` for `lambda` by bracketing and bisection.
///
/// `s'` is non-decreasing (the energy is convex), so the root is unique
/// whenever it exists; flat curves fall back to the floor or ceiling.
pub fn tune_lambda(
    x: &DMatrix<f64>,
    emb: &Embedding,
    weights: &Weights,
    delta: f64,
) -> Result<TunedLambda> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "delta must be finite and positive, got {delta}"
        )));
    }
    let path = RidgePath::new(x, emb, weights)?;
    // g(lambda) = s'(lambda) + delta is non-decreasing; seek g = 0.
    let g = |lambda: f64| -> Result<f64> { Ok(path.slope(lambda)? + delta) };

    if g(LAMBDA_FLOOR)? >= 0.0 {
        return Ok(TunedLambda {
            lambda: LAMBDA_FLOOR,
            status: TuneStatus::Floored,
        });
    }
    let mut lo = LAMBDA_FLOOR;
    let mut hi = BRACKET_START;
    while g(hi)? <= 0.0 {
        lo = hi;
        hi *= 10.0;
        if hi > BRACKET_CEILING {
            return Ok(TunedLambda {
                lambda: BRACKET_CEILING,
                status: TuneStatus::Ceiling,
            });
        }
    }

    let mut mid = 0.5 * (lo + hi);
    for _ in 0..300 {
        mid = 0.5 * (lo + hi);
        let val = g(mid)?;
        if val < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        // Tight on both the residual and the bracket so the inverse map is
        // accurate to TUNE_REL_TOL in lambda as well as in slope.
        if val.abs() <= TUNE_REL_TOL * delta && (hi - lo) <= 1e-2 * TUNE_REL_TOL * mid {
            break;
        }
    }
    Ok(TunedLambda {
        lambda: mid,
        status: TuneStatus::Interior,
    })
}

/// Sampled regularization path, exportable as a diagnostics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningCurve {
    pub lambda: Vec<f64>,
    pub s: Vec<f64>,
    pub s_prime: Vec<f64>,
    pub s_double_prime: Vec<f64>,
}

/// Evaluates `(s, s', s'')` over a penalty grid.
pub fn tuning_curve(
    x: &DMatrix<f64>,
    emb: &Embedding,
    weights: &Weights,
    grid: &[f64],
) -> Result<TuningCurve> {
    let path = RidgePath::new(x, emb, weights)?;
    let mut curve = TuningCurve {
        lambda: Vec::with_capacity(grid.len()),
        s: Vec::with_capacity(grid.len()),
        s_prime: Vec::with_capacity(grid.len()),
        s_double_prime: Vec::with_capacity(grid.len()),
    };
    for &lambda in grid {
        validate_lambda(lambda)?;
        let (s, sp, spp) = path.evaluate(lambda)?;
        curve.lambda.push(lambda);
        curve.s.push(s);
        curve.s_prime.push(sp);
        curve.s_double_prime.push(spp);
    }
    Ok(curve)
}

/// Alternating solver for the regularized objective.
///
/// In fixed-`lambda` mode the loss trace records the penalized weighted
/// objective. In `delta` mode the penalty is retuned from the current latent
/// coordinates each outer iteration, so only the weighted data-fit term is
/// traced and `lambda_used` reports the last tuned value.
pub fn fit_rqmf(x: &DMatrix<f64>, d: usize, cfg: &RegConfig) -> Result<FitResult> {
    cfg.reg.validate()?;
    let weights = match &cfg.weights {
        Some(w) => {
            if w.len() != x.ncols() {
                return Err(Error::DimensionMismatch {
                    context: "rqmf weight count",
                    expected: x.ncols(),
                    found: w.len(),
                });
            }
            w.clone()
        }
        None => Weights::equal(x.ncols()),
    };

    match cfg.reg {
        RegMode::Lambda(lambda) => alternate(x, d, &cfg.solver, &mut |x, emb| {
            let model = solve_model_ridge(x, emb, lambda, &weights)?;
            let penalty = lambda * model.quad_coeffs().norm_squared();
            let objective = loss_weighted(x, &model, emb.matrix(), &weights)? + penalty;
            Ok((model, Some(lambda), objective))
        }),
        RegMode::Delta(delta) => alternate(x, d, &cfg.solver, &mut |x, emb| {
            let tuned = tune_lambda(x, emb, &weights, delta)?;
            let model = solve_model_ridge(x, emb, tuned.lambda, &weights)?;
            let objective = loss_weighted(x, &model, emb.matrix(), &weights)?;
            Ok((model, Some(tuned.lambda), objective))
        }),
    }
}

/// Gaussian kernel `exp(-||x - y||^2 / (2 h^2))`.
pub fn gaussian_kernel(x: &DVector<f64>, y: &DVector<f64>, h: f64) -> Result<f64> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::NonPositiveBandwidth(h));
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "kernel argument dimensions",
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok((-(x - y).norm_squared() / (2.0 * h * h)).exp())
}
