//! Per-point manifold denoising.
//!
//! Each target point gets its own local chart (k nearest neighbors or a
//! metric ball), a regularized quadratic fit on that chart, and a projection
//! of the target onto the fitted surface. Points whose charts defeat the
//! quadratic fit fall back to a Local PCA projection, so a batch run always
//! produces one output point per input point plus a per-point report.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::PointCloud;
use crate::error::{Error, Result};
use crate::features::feature_len;
use crate::fit::{fit_lmf, FitResult};
use crate::linalg;
use crate::projection::ProjectionProblem;
use crate::ridge::{fit_rqmf, gaussian_kernel, RegConfig, Weights};

/// Chart membership rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighborhood {
    /// The k nearest points by Euclidean distance, ties broken by lower
    /// column index.
    Knn(usize),
    /// All points within the given radius of the target.
    Radius(f64),
}

/// Per-member weighting inside a chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Equal,
    Gaussian,
}

/// Bandwidth rule for gaussian weighting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    /// `h = d_K / 3 + 3` with `d_K` the distance to the farthest member.
    SpherePaper,
    /// `h = d_K`, the distance to the farthest member.
    KnnDist,
    /// A caller-supplied constant bandwidth.
    Fixed(f64),
}

/// Configuration of the per-point pipeline.
///
/// `seed` is carried for reproducibility bookkeeping in batch reports; the
/// pipeline itself is deterministic (spectral initialization, closed-form
/// solves) and draws no random numbers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenoiseConfig {
    pub d: usize,
    pub neighborhood: Neighborhood,
    #[serde(default = "default_weighting")]
    pub weighting: Weighting,
    #[serde(default = "default_bandwidth_rule")]
    pub bandwidth_rule: BandwidthRule,
    pub reg: RegConfig,
    #[serde(default)]
    pub seed: u64,
}

fn default_weighting() -> Weighting {
    Weighting::Equal
}

fn default_bandwidth_rule() -> BandwidthRule {
    BandwidthRule::SpherePaper
}

impl DenoiseConfig {
    /// Equal-weight configuration with defaults for the remaining knobs.
    pub fn new(d: usize, neighborhood: Neighborhood, reg: RegConfig) -> Self {
        Self {
            d,
            neighborhood,
            weighting: Weighting::Equal,
            bandwidth_rule: BandwidthRule::SpherePaper,
            reg,
            seed: 0,
        }
    }

    /// Chart sizes at or below this leave the quadratic fit underdetermined
    /// and trigger a per-point warning.
    pub fn feature_threshold(&self) -> usize {
        feature_len(self.d)
    }

    fn validate(&self, cloud: &PointCloud) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidParameter(
                "latent dimension must be at least 1".into(),
            ));
        }
        if self.d >= cloud.dim() {
            return Err(Error::InvalidParameter(format!(
                "latent dimension {} must be below the ambient dimension {}",
                self.d,
                cloud.dim()
            )));
        }
        match self.neighborhood {
            Neighborhood::Knn(k) => {
                if k == 0 {
                    return Err(Error::InvalidParameter(
                        "chart needs at least one member".into(),
                    ));
                }
                if k > cloud.len() {
                    return Err(Error::InsufficientNeighbors {
                        requested: k,
                        available: cloud.len(),
                    });
                }
            }
            Neighborhood::Radius(a) => {
                if !a.is_finite() || a <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "chart radius must be positive and finite, got {a}"
                    )));
                }
            }
        }
        if let BandwidthRule::Fixed(h) = self.bandwidth_rule {
            if !h.is_finite() || h <= 0.0 {
                return Err(Error::NonPositiveBandwidth(h));
            }
        }
        Ok(())
    }
}

/// A local chart around one target point.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub target: DVector<f64>,
    pub member_indices: Vec<usize>,
    pub weights: Weights,
    /// Kernel bandwidth; absent under equal weighting.
    pub bandwidth: Option<f64>,
}

impl Chart {
    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }

    /// Gathers the member columns out of the cloud.
    pub fn members(&self, cloud: &PointCloud) -> DMatrix<f64> {
        let d = cloud.dim();
        DMatrix::from_fn(d, self.len(), |i, k| {
            cloud.points[(i, self.member_indices[k])]
        })
    }
}

/// Builds the chart for `y`: selects members per the neighborhood rule and
/// assigns weights per the weighting rule.
///
/// Gaussian weights may underflow to zero for extreme bandwidths; the chart
/// is rejected unless at least one member keeps positive weight.
pub fn build_chart(cloud: &PointCloud, y: &DVector<f64>, cfg: &DenoiseConfig) -> Result<Chart> {
    cfg.validate(cloud)?;
    if y.len() != cloud.dim() {
        return Err(Error::DimensionMismatch {
            context: "chart target dimension",
            expected: cloud.dim(),
            found: y.len(),
        });
    }

    // (distance, index) pairs sorted ascending; the index part makes the
    // tie-break deterministic.
    let mut order: Vec<(f64, usize)> = (0..cloud.len())
        .map(|i| ((cloud.points.column(i) - y).norm(), i))
        .collect();
    order.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));

    let taken: Vec<(f64, usize)> = match cfg.neighborhood {
        Neighborhood::Knn(k) => order.into_iter().take(k).collect(),
        Neighborhood::Radius(a) => {
            let inside: Vec<(f64, usize)> =
                order.into_iter().take_while(|(dist, _)| *dist <= a).collect();
            if inside.is_empty() {
                return Err(Error::EmptyChart(a));
            }
            inside
        }
    };
    let member_indices: Vec<usize> = taken.iter().map(|(_, i)| *i).collect();

    let (weights, bandwidth) = match cfg.weighting {
        Weighting::Equal => (Weights::equal(member_indices.len()), None),
        Weighting::Gaussian => {
            let d_far = taken.last().map(|(dist, _)| *dist).unwrap_or(0.0);
            let h = match cfg.bandwidth_rule {
                BandwidthRule::SpherePaper => d_far / 3.0 + 3.0,
                BandwidthRule::KnnDist => d_far,
                BandwidthRule::Fixed(h) => h,
            };
            if !h.is_finite() || h <= 0.0 {
                return Err(Error::NonPositiveBandwidth(h));
            }
            let w: Vec<f64> = member_indices
                .iter()
                .map(|&i| gaussian_kernel(&cloud.points.column(i).into_owned(), y, h))
                .collect::<Result<_>>()?;
            (Weights::try_new(w)?, Some(h))
        }
    };

    Ok(Chart {
        target: y.clone(),
        member_indices,
        weights,
        bandwidth,
    })
}

/// How a point left the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    /// Quadratic pipeline succeeded.
    Denoised,
    /// Quadratic fit failed; the Local PCA projection was emitted instead.
    Fallback,
    /// No usable chart; the input point was passed through unchanged.
    Failed,
}

/// Per-point outcome record for batch runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub index: usize,
    pub status: PointStatus,
    pub lambda_used: Option<f64>,
    pub iterations: usize,
    pub warning: Option<String>,
}

/// Batch result: one output point per input point, in input order.
#[derive(Debug, Clone)]
pub struct DenoiseOutput {
    pub cloud: PointCloud,
    pub reports: Vec<PointReport>,
}

/// Fits the chart and maps the target through the fitted surface.
fn quadratic_step(
    members: &DMatrix<f64>,
    weights: &Weights,
    y: &DVector<f64>,
    cfg: &DenoiseConfig,
) -> Result<(DVector<f64>, FitResult)> {
    // Chart-local centering keeps coordinates small; the fit itself is
    // translation invariant, so this only conditions the solve.
    let (centered, mean) = linalg::center_columns(members);
    let reg = RegConfig {
        reg: cfg.reg.reg,
        weights: Some(weights.clone()),
        solver: cfg.reg.solver.clone(),
    };
    let fit = fit_rqmf(&centered, cfg.d, &reg)?;

    let y_centered = y - &mean;
    // Linear least-squares latent estimate as the projection start.
    let linear_gap = &y_centered - fit.model.intercept();
    let init = fit
        .model
        .linear()
        .clone()
        .svd(true, true)
        .solve(&linear_gap, linalg::SINGULAR_RCOND)
        .unwrap_or_else(|_| DVector::zeros(cfg.d));
    let problem = ProjectionProblem::new(&fit.model, y_centered)?;
    let projection = problem.project(
        Some(&init),
        cfg.reg.solver.inner_tol,
        cfg.reg.solver.inner_max_iter,
    )?;
    let denoised = mean + fit.model.eval(&projection.tau)?;
    Ok((denoised, fit))
}

/// Local PCA projection on an explicit member set. Degenerate charts (rank
/// below `d`) still produce a deterministic answer: missing directions
/// contribute nothing to the projector.
fn local_pca_members(members: &DMatrix<f64>, y: &DVector<f64>, d: usize) -> DVector<f64> {
    let k = members.ncols() as f64;
    let (centered, mean) = linalg::center_columns(members);
    let cov = (&centered * centered.transpose()) / k;
    let eigen = linalg::sym_eigen_desc(&cov);
    let mut projected = DVector::zeros(y.len());
    let gap = y - &mean;
    for (_, v) in eigen.iter().take(d) {
        projected += v * v.dot(&gap);
    }
    mean + projected
}

fn denoise_target(
    cloud: &PointCloud,
    y: &DVector<f64>,
    index: usize,
    cfg: &DenoiseConfig,
) -> (DVector<f64>, PointReport) {
    let mut warnings: Vec<String> = Vec::new();

    let chart = match build_chart(cloud, y, cfg) {
        Ok(chart) => chart,
        Err(err) => {
            return (
                y.clone(),
                PointReport {
                    index,
                    status: PointStatus::Failed,
                    lambda_used: None,
                    iterations: 0,
                    warning: Some(err.to_string()),
                },
            );
        }
    };
    if chart.len() <= cfg.feature_threshold() {
        warnings.push(format!(
            "chart size {} is not above the feature dimension {}; the quadratic fit may interpolate",
            chart.len(),
            cfg.feature_threshold()
        ));
    }
    let members = chart.members(cloud);

    match quadratic_step(&members, &chart.weights, y, cfg) {
        Ok((point, fit)) => {
            if !fit.converged {
                warnings.push(format!(
                    "solver stopped at the iteration cap ({})",
                    fit.iterations
                ));
            }
            (
                point,
                PointReport {
                    index,
                    status: PointStatus::Denoised,
                    lambda_used: fit.lambda_used,
                    iterations: fit.iterations,
                    warning: combine(warnings),
                },
            )
        }
        Err(err) => {
            warnings.push(format!("quadratic fit failed: {err}; using Local PCA"));
            let point = local_pca_members(&members, y, cfg.d);
            (
                point,
                PointReport {
                    index,
                    status: PointStatus::Fallback,
                    lambda_used: None,
                    iterations: 0,
                    warning: combine(warnings),
                },
            )
        }
    }
}

fn combine(warnings: Vec<String>) -> Option<String> {
    if warnings.is_empty() {
        None
    } else {
        Some(warnings.join("; "))
    }
}

/// Denoises a single target point against the cloud.
pub fn denoise_point(
    cloud: &PointCloud,
    y: &DVector<f64>,
    cfg: &DenoiseConfig,
) -> Result<DVector<f64>> {
    cfg.validate(cloud)?;
    if y.len() != cloud.dim() {
        return Err(Error::DimensionMismatch {
            context: "target dimension",
            expected: cloud.dim(),
            found: y.len(),
        });
    }
    Ok(denoise_target(cloud, y, 0, cfg).0)
}

/// Denoises every cloud point independently. Per-point failures are recorded
/// in the report and never abort the batch; the output cloud keeps the input
/// order and the input's truth descriptor.
pub fn denoise_all(cloud: &PointCloud, cfg: &DenoiseConfig) -> Result<DenoiseOutput> {
    cfg.validate(cloud)?;
    let results: Vec<(DVector<f64>, PointReport)> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let y = cloud.points.column(i).into_owned();
            denoise_target(cloud, &y, i, cfg)
        })
        .collect();

    let mut points = DMatrix::zeros(cloud.dim(), cloud.len());
    let mut reports = Vec::with_capacity(results.len());
    for (i, (point, report)) in results.into_iter().enumerate() {
        points.set_column(i, &point);
        reports.push(report);
        debug_assert_eq!(reports[i].index, i);
    }
    Ok(DenoiseOutput {
        cloud: PointCloud {
            points,
            truth: cloud.truth.clone(),
        },
        reports,
    })
}

/// Local PCA baseline: projects `y` onto the affine span of the top `d`
/// principal directions of its k-nearest-neighbor chart.
pub fn local_pca_denoise(
    cloud: &PointCloud,
    y: &DVector<f64>,
    k: usize,
    d: usize,
) -> Result<DVector<f64>> {
    // Unlike the quadratic pipeline, d = ambient is legal here: the full
    // projector keeps the target unchanged.
    if d == 0 || d > cloud.dim() || k < d + 1 {
        return Err(Error::InvalidParameter(format!(
            "local PCA needs 1 <= d <= ambient and k >= d + 1, got k = {k}, d = {d}"
        )));
    }
    let members = nearest_members(cloud, y, k)?;
    Ok(local_pca_members(&members, y, d))
}

/// The k nearest cloud columns to `y`, ordered by the same (distance, index)
/// rule chart construction uses.
fn nearest_members(cloud: &PointCloud, y: &DVector<f64>, k: usize) -> Result<DMatrix<f64>> {
    if y.len() != cloud.dim() {
        return Err(Error::DimensionMismatch {
            context: "chart target dimension",
            expected: cloud.dim(),
            found: y.len(),
        });
    }
    if k == 0 || k > cloud.len() {
        return Err(Error::InsufficientNeighbors {
            requested: k,
            available: cloud.len(),
        });
    }
    let mut order: Vec<(f64, usize)> = (0..cloud.len())
        .map(|i| ((cloud.points.column(i) - y).norm(), i))
        .collect();
    order.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let mut members = DMatrix::zeros(cloud.dim(), k);
    for (j, (_, i)) in order.into_iter().take(k).enumerate() {
        members.set_column(j, &cloud.points.column(i));
    }
    Ok(members)
}

/// Linear (flat) baseline: fits an affine subspace to the chart and maps the
/// target through it, mirroring the quadratic pipeline with the curvature
/// block removed.
pub fn lmf_denoise_point(
    cloud: &PointCloud,
    y: &DVector<f64>,
    k: usize,
    d: usize,
) -> Result<DVector<f64>> {
    let cfg = DenoiseConfig::new(d, Neighborhood::Knn(k), RegConfig::lambda(0.0));
    let chart = build_chart(cloud, y, &cfg)?;
    let members = chart.members(cloud);
    let (centered, mean) = linalg::center_columns(&members);
    let fit = fit_lmf(&centered, d, &cfg.reg.solver)?;
    let gap = (y - &mean) - fit.model.intercept();
    let tau = fit
        .model
        .linear()
        .clone()
        .svd(true, true)
        .solve(&gap, linalg::SINGULAR_RCOND)
        .map_err(|message| Error::InvalidParameter(message.to_string()))?;
    Ok(mean + fit.model.eval(&tau)?)
}

/// Orthonormal basis and coordinates of the dominant ambient subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaReduction {
    /// D x k basis with orthonormal columns.
    pub basis: DMatrix<f64>,
    /// k x m coordinates, `basis^T * points`.
    pub reduced: DMatrix<f64>,
}

impl PcaReduction {
    /// Maps reduced coordinates back to the ambient space.
    pub fn lift(&self, reduced: &DMatrix<f64>) -> DMatrix<f64> {
        &self.basis * reduced
    }
}

/// Projects the cloud onto the top `d_target` eigenvectors of the second
/// moment `S = (1/m) sum x_i x_i^T`. `lift(reduce(X))` is the best
/// rank-`d_target` approximation of `X` under that spectrum.
pub fn pca_reduce(points: &DMatrix<f64>, d_target: usize) -> Result<PcaReduction> {
    crate::fit::validate_data(points)?;
    let dim = points.nrows();
    if d_target == 0 || d_target > dim {
        return Err(Error::InvalidParameter(format!(
            "reduction target {d_target} must be in 1..={dim}"
        )));
    }
    let second_moment = (points * points.transpose()) / points.ncols() as f64;
    let eigen = linalg::sym_eigen_desc(&second_moment);
    let mut basis = DMatrix::zeros(dim, d_target);
    for (j, (_, v)) in eigen.iter().take(d_target).enumerate() {
        basis.set_column(j, v);
    }
    let reduced = basis.transpose() * points;
    Ok(PcaReduction { basis, reduced })
}
