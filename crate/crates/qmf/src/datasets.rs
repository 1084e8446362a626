//! Seeded synthetic manifold generators and evaluation metrics.
//!
//! Point clouds are drawn near simple reference manifolds with Gaussian
//! ambient noise. Every point uses its own RNG stream derived from the seed
//! and the point index, so generation is reproducible and independent of
//! iteration order. Each generated cloud carries a truth descriptor that
//! knows how to project arbitrary points back onto the clean manifold,
//! which is what the error metrics are built on.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::denoise::{
    denoise_all, lmf_denoise_point, local_pca_denoise, BandwidthRule, DenoiseConfig, Neighborhood,
    Weighting,
};
use crate::error::{Error, Result};
use crate::fit::SolverConfig;
use crate::ridge::RegConfig;

/// Sine-curve parameter range.
const SINE_T: (f64, f64) = (PI / 3.0, 2.0 * PI / 3.0);
/// Spiral parameter range; coordinates are divided by the outer radius so
/// the cloud fits in the unit disc.
const SWISS_T: (f64, f64) = (1.5 * PI, 4.5 * PI);

/// Built-in reference manifolds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    UnitCircle,
    UnitSphere,
    SineCurve,
    SwissRoll,
}

impl Shape {
    pub fn ambient_dim(self) -> usize {
        match self {
            Shape::UnitCircle | Shape::SineCurve | Shape::SwissRoll => 2,
            Shape::UnitSphere => 3,
        }
    }

    pub fn intrinsic_dim(self) -> usize {
        match self {
            Shape::UnitSphere => 2,
            _ => 1,
        }
    }

    pub fn descriptor(self) -> ManifoldDescriptor {
        match self {
            Shape::UnitCircle => ManifoldDescriptor::UnitCircle,
            Shape::UnitSphere => ManifoldDescriptor::UnitSphere,
            Shape::SineCurve => ManifoldDescriptor::SineCurve,
            Shape::SwissRoll => ManifoldDescriptor::SwissRoll,
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Shape::UnitCircle => "unit-circle",
            Shape::UnitSphere => "unit-sphere",
            Shape::SineCurve => "sine-curve",
            Shape::SwissRoll => "swiss-roll",
        };
        f.write_str(name)
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit-circle" | "circle" => Ok(Shape::UnitCircle),
            "unit-sphere" | "sphere" => Ok(Shape::UnitSphere),
            "sine-curve" | "sine" => Ok(Shape::SineCurve),
            "swiss-roll" | "swiss" => Ok(Shape::SwissRoll),
            other => Err(Error::UnknownShape(other.to_string())),
        }
    }
}

/// Generation request: `n` points near `shape` with ambient Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    pub shape: Shape,
    pub n: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// A point set with an optional record of the clean manifold it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    /// One point per column.
    pub points: DMatrix<f64>,
    pub truth: Option<ManifoldDescriptor>,
}

impl PointCloud {
    pub fn new(points: DMatrix<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("point cloud is empty".into()));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "point cloud has non-finite entries".into(),
            ));
        }
        Ok(Self {
            points,
            truth: None,
        })
    }

    pub fn with_truth(points: DMatrix<f64>, truth: ManifoldDescriptor) -> Result<Self> {
        let mut cloud = Self::new(points)?;
        cloud.truth = Some(truth);
        Ok(cloud)
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.points.ncols() == 0
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.points.nrows()
    }
}

/// A clean manifold with a nearest-point projector.
///
/// Sphere and circle projections are closed-form; the curve variants run a
/// dense parameter scan with golden-section refinement; a sample set
/// projects to its nearest stored point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "kebab-case")]
pub enum ManifoldDescriptor {
    UnitCircle,
    UnitSphere,
    SineCurve,
    SwissRoll,
    /// Reference points, one inner vector per point.
    SampleSet(Vec<Vec<f64>>),
}

impl ManifoldDescriptor {
    /// Wraps the columns of `points` as a sample-set manifold.
    pub fn sample_set(points: &DMatrix<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("sample set is empty".into()));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "sample set has non-finite entries".into(),
            ));
        }
        Ok(Self::SampleSet(
            points
                .column_iter()
                .map(|col| col.iter().copied().collect())
                .collect(),
        ))
    }

    /// Ambient dimension the projector expects.
    pub fn ambient_dim(&self) -> usize {
        match self {
            ManifoldDescriptor::UnitSphere => 3,
            ManifoldDescriptor::SampleSet(points) => points[0].len(),
            _ => 2,
        }
    }

    /// Nearest point on the manifold.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                context: "projector input dimension",
                expected: self.ambient_dim(),
                found: x.len(),
            });
        }
        match self {
            ManifoldDescriptor::UnitCircle | ManifoldDescriptor::UnitSphere => {
                let norm = x.norm();
                if norm < 1e-12 {
                    return Err(Error::AmbiguousProjection);
                }
                Ok(x / norm)
            }
            ManifoldDescriptor::SineCurve => Ok(nearest_on_curve(
                x,
                SINE_T.0,
                SINE_T.1,
                4096,
                |t| DVector::from_vec(vec![t, t.sin()]),
            )),
            ManifoldDescriptor::SwissRoll => Ok(nearest_on_curve(
                x,
                SWISS_T.0,
                SWISS_T.1,
                32768,
                |t| DVector::from_vec(vec![t * t.cos(), t * t.sin()]) / SWISS_T.1,
            )),
            ManifoldDescriptor::SampleSet(points) => {
                let mut best = 0;
                let mut best_dist = f64::INFINITY;
                for (i, p) in points.iter().enumerate() {
                    let dist: f64 = p
                        .iter()
                        .zip(x.iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    if dist < best_dist {
                        best_dist = dist;
                        best = i;
                    }
                }
                Ok(DVector::from_vec(points[best].clone()))
            }
        }
    }

    /// Squared distance to the manifold.
    pub fn sq_dist(&self, x: &DVector<f64>) -> Result<f64> {
        Ok((x - self.project(x)?).norm_squared())
    }
}

/// Coarse scan plus golden-section refinement of `||f(t) - x||^2` over
/// `[lo, hi]`. The grid is dense enough to isolate the global basin for the
/// shipped curves, and the refinement narrows the bracket to ~1e-12 of the
/// domain length.
fn nearest_on_curve(
    x: &DVector<f64>,
    lo: f64,
    hi: f64,
    grid: usize,
    f: impl Fn(f64) -> DVector<f64>,
) -> DVector<f64> {
    let at = |k: usize| lo + (hi - lo) * k as f64 / grid as f64;
    let g = |t: f64| (f(t) - x).norm_squared();

    let mut best_k = 0;
    let mut best = f64::INFINITY;
    for k in 0..=grid {
        let val = g(at(k));
        if val < best {
            best = val;
            best_k = k;
        }
    }
    let mut a = at(best_k.saturating_sub(1));
    let mut b = at((best_k + 1).min(grid));

    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let tol = 1e-12 * (hi - lo);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    while b - a > tol {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    f(0.5 * (a + b))
}

/// RNG for one point: the seed keys the generator and the point index picks
/// the stream, so points are independent of generation order.
fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draws a noisy point cloud near the requested shape. Deterministic in the
/// seed; the clean manifold is recorded in the cloud's truth descriptor.
pub fn generate(spec: &GenSpec) -> Result<PointCloud> {
    if spec.n == 0 {
        return Err(Error::InvalidParameter(
            "generation needs at least one point".into(),
        ));
    }
    if !spec.noise_sigma.is_finite() || spec.noise_sigma < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be finite and non-negative, got {}",
            spec.noise_sigma
        )));
    }

    let dim = spec.shape.ambient_dim();
    let mut points = DMatrix::zeros(dim, spec.n);
    for i in 0..spec.n {
        let mut rng = point_rng(spec.seed, i);
        let mut point = clean_point(spec.shape, spec.n, i, &mut rng);
        for coord in point.iter_mut() {
            let noise: f64 = rng.sample(StandardNormal);
            *coord += spec.noise_sigma * noise;
        }
        points.set_column(i, &point);
    }
    PointCloud::with_truth(points, spec.shape.descriptor())
}

/// Clean sample `i` of `n`. Circle and sphere are uniform (angle and
/// normalized Gaussian respectively), the sine curve is an even parameter
/// grid, and the spiral draws its parameter uniformly.
fn clean_point(shape: Shape, n: usize, index: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    match shape {
        Shape::UnitCircle => {
            let theta = rng.random_range(0.0..2.0 * PI);
            DVector::from_vec(vec![theta.cos(), theta.sin()])
        }
        Shape::UnitSphere => loop {
            let v = DVector::from_fn(3, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = v.norm();
            if norm > 1e-12 {
                break v / norm;
            }
        },
        Shape::SineCurve => {
            let t = if n == 1 {
                0.5 * (SINE_T.0 + SINE_T.1)
            } else {
                SINE_T.0 + (SINE_T.1 - SINE_T.0) * index as f64 / (n - 1) as f64
            };
            DVector::from_vec(vec![t, t.sin()])
        }
        Shape::SwissRoll => {
            let t = rng.random_range(SWISS_T.0..SWISS_T.1);
            DVector::from_vec(vec![t * t.cos(), t * t.sin()]) / SWISS_T.1
        }
    }
}

/// Squared-distance-to-manifold summary of a cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mse: f64,
    /// Population standard deviation of the per-point squared errors.
    pub sd: f64,
    pub per_point_sq_err: Vec<f64>,
}

/// Scores a cloud against a truth manifold: per-point squared distances,
/// their mean, and their population standard deviation.
pub fn evaluate(cloud: &PointCloud, truth: &ManifoldDescriptor) -> Result<EvalReport> {
    let m = cloud.len();
    let mut per_point_sq_err = Vec::with_capacity(m);
    for col in cloud.points.column_iter() {
        per_point_sq_err.push(truth.sq_dist(&col.into_owned())?);
    }
    let mse = per_point_sq_err.iter().sum::<f64>() / m as f64;
    let var = per_point_sq_err
        .iter()
        .map(|e| (e - mse) * (e - mse))
        .sum::<f64>()
        / m as f64;
    Ok(EvalReport {
        mse,
        sd: var.sqrt(),
        per_point_sq_err,
    })
}

/// Denoising methods the benchmark can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    RqmfE,
    RqmfK,
    LocalPca,
    Lmf,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::RqmfE => "rqmf-e",
            Method::RqmfK => "rqmf-k",
            Method::LocalPca => "local-pca",
            Method::Lmf => "lmf",
        };
        f.write_str(name)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rqmf-e" => Ok(Method::RqmfE),
            "rqmf-k" => Ok(Method::RqmfK),
            "local-pca" => Ok(Method::LocalPca),
            "lmf" => Ok(Method::Lmf),
            other => Err(Error::InvalidParameter(format!(
                "unknown method {other:?} (expected rqmf-e, rqmf-k, local-pca or lmf)"
            ))),
        }
    }
}

/// Sensitivity rule for the regularized methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaRule {
    /// The spherical-benchmark presets: `max(1, 8K - 125)` for equal
    /// weighting, a flat 100 for kernel weighting.
    SpherePaper,
    /// One sensitivity for every chart and method.
    Fixed(f64),
}

impl DeltaRule {
    pub fn delta_for(&self, method: Method, k: usize) -> f64 {
        match (self, method) {
            (DeltaRule::Fixed(delta), _) => *delta,
            (DeltaRule::SpherePaper, Method::RqmfK) => 100.0,
            (DeltaRule::SpherePaper, _) => sphere_delta_preset(k),
        }
    }
}

impl FromStr for DeltaRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "sphere-paper" {
            return Ok(DeltaRule::SpherePaper);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(DeltaRule::Fixed(v)),
            _ => Err(Error::InvalidParameter(format!(
                "delta must be a positive number or \"sphere-paper\", got {s:?}"
            ))),
        }
    }
}

/// Equal-weight sensitivity preset for the spherical benchmark,
/// `max(1, 8K - 125)`.
pub fn sphere_delta_preset(k: usize) -> f64 {
    (8.0 * k as f64 - 125.0).max(1.0)
}

/// One benchmark cell: a method at one chart size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    pub k: usize,
    pub mse: f64,
    pub sd: f64,
}

/// Sweep output: rows in (method, K) order plus a log of failed runs.
/// Failed cells hold NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
    pub failures: Vec<String>,
}

fn run_method(
    cloud: &PointCloud,
    method: Method,
    k: usize,
    d: usize,
    rule: &DeltaRule,
    solver: &SolverConfig,
) -> Result<PointCloud> {
    match method {
        Method::LocalPca | Method::Lmf => {
            let mut points = DMatrix::zeros(cloud.dim(), cloud.len());
            for i in 0..cloud.len() {
                let y = cloud.points.column(i).into_owned();
                let out = match method {
                    Method::LocalPca => local_pca_denoise(cloud, &y, k, d)?,
                    _ => lmf_denoise_point(cloud, &y, k, d)?,
                };
                points.set_column(i, &out);
            }
            Ok(PointCloud {
                points,
                truth: cloud.truth.clone(),
            })
        }
        Method::RqmfE | Method::RqmfK => {
            let delta = rule.delta_for(method, k);
            let mut reg = RegConfig::delta(delta);
            reg.solver = solver.clone();
            let mut cfg = DenoiseConfig::new(d, Neighborhood::Knn(k), reg);
            if method == Method::RqmfK {
                cfg.weighting = Weighting::Gaussian;
                cfg.bandwidth_rule = BandwidthRule::SpherePaper;
            }
            Ok(denoise_all(cloud, &cfg)?.cloud)
        }
    }
}

/// Runs every (method, K) cell over `repeats` freshly seeded clouds and
/// reports the mean MSE and mean SD per cell. The same clouds are reused
/// across cells, so method comparisons are paired.
pub fn benchmark_sweep(
    spec: &GenSpec,
    methods: &[Method],
    ks: &[usize],
    rule: &DeltaRule,
    repeats: usize,
    seed: u64,
) -> Result<BenchTable> {
    benchmark_sweep_with(
        spec,
        methods,
        ks,
        rule,
        repeats,
        seed,
        &SolverConfig::default(),
    )
}

/// `benchmark_sweep` with an explicit solver budget for the quadratic cells.
/// Sweeps dominated by slowly contracting charts can cap `max_outer` well
/// below the library default without moving the reported MSE.
#[allow(clippy::too_many_arguments)]
pub fn benchmark_sweep_with(
    spec: &GenSpec,
    methods: &[Method],
    ks: &[usize],
    rule: &DeltaRule,
    repeats: usize,
    seed: u64,
    solver: &SolverConfig,
) -> Result<BenchTable> {
    if methods.is_empty() || ks.is_empty() || repeats == 0 {
        return Err(Error::InvalidParameter(
            "benchmark needs at least one method, one K, and one repeat".into(),
        ));
    }
    let d = spec.shape.intrinsic_dim();
    let truth = spec.shape.descriptor();
    let clouds: Vec<PointCloud> = (0..repeats)
        .map(|r| {
            generate(&GenSpec {
                seed: seed.wrapping_add(r as u64),
                ..*spec
            })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(methods.len() * ks.len());
    let mut failures = Vec::new();
    for &method in methods {
        for &k in ks {
            let mut mse_sum = 0.0;
            let mut sd_sum = 0.0;
            let mut failed = false;
            for (r, cloud) in clouds.iter().enumerate() {
                match run_method(cloud, method, k, d, rule, solver)
                    .and_then(|denoised| evaluate(&denoised, &truth))
                {
                    Ok(report) => {
                        mse_sum += report.mse;
                        sd_sum += report.sd;
                    }
                    Err(err) => {
                        failures.push(format!("{method} K={k} repeat {r}: {err}"));
                        failed = true;
                    }
                }
            }
            let (mse, sd) = if failed {
                (f64::NAN, f64::NAN)
            } else {
                (mse_sum / repeats as f64, sd_sum / repeats as f64)
            };
            rows.push(BenchRow { method, k, mse, sd });
        }
    }
    Ok(BenchTable { rows, failures })
}
