//! Quadratic feature maps and the coefficient layout shared by every solver.
//!
//! A latent point `tau` in `R^d` is lifted to the feature vector
//! `[1, tau, quad_monomials(tau)]`, where the quadratic block lists the
//! distinct monomials `tau_i * tau_j` (i <= j) row-major:
//! `(0,0), (0,1), ..., (0,d-1), (1,1), ..., (d-1,d-1)`.
//!
//! A fitted surface `f(tau) = c + A*tau + B(tau, tau)` is stored as a
//! [`QuadModel`] whose quadratic coefficients `Q` act on monomials. The same
//! quadratic term can be viewed as a symmetric 3-tensor ([`SymTensor`]) with
//! one symmetric `d x d` slice per ambient coordinate; both views are kept in
//! exact correspondence because the off-diagonal conversion factor is a power
//! of two.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of distinct quadratic monomials in `d` latent variables.
pub fn quad_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Length of the feature vector `[1, tau, quad_monomials(tau)]`.
pub fn feature_len(d: usize) -> usize {
    1 + d + quad_len(d)
}

/// Pairs `(i, j)` with `i <= j` in the shared monomial order.
pub fn monomial_pairs(d: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..d).flat_map(move |i| (i..d).map(move |j| (i, j)))
}

/// Position of the monomial `tau_i * tau_j` (`i <= j`) in the quadratic block.
pub fn pair_position(d: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < d);
    i * d - i * (i + 1) / 2 + j
}

/// Distinct quadratic monomials of `tau` in the shared order.
pub fn quad_monomials(tau: &DVector<f64>) -> DVector<f64> {
    let d = tau.len();
    let mut out = DVector::zeros(quad_len(d));
    for (pos, (i, j)) in monomial_pairs(d).enumerate() {
        out[pos] = tau[i] * tau[j];
    }
    out
}

/// Feature vector `[1, tau, quad_monomials(tau)]`.
pub fn feature_vector(tau: &DVector<f64>) -> DVector<f64> {
    let d = tau.len();
    let mut out = DVector::zeros(feature_len(d));
    out[0] = 1.0;
    out.rows_mut(1, d).copy_from(tau);
    out.rows_mut(1 + d, quad_len(d)).copy_from(&quad_monomials(tau));
    out
}

/// Design matrix whose columns are the feature vectors of the columns of
/// `phi` (`d x m` latent coordinates in, `feature_len(d) x m` out).
pub fn design_matrix(phi: &DMatrix<f64>) -> DMatrix<f64> {
    let (d, m) = phi.shape();
    let mut out = DMatrix::zeros(feature_len(d), m);
    for (k, col) in phi.column_iter().enumerate() {
        out.column_mut(k)
            .copy_from(&feature_vector(&col.into_owned()));
    }
    out
}

/// Selector `J` with `R * J = Q`: picks the quadratic block out of a flat
/// coefficient matrix. Shape `feature_len(d) x quad_len(d)`.
pub fn quad_selector(d: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(feature_len(d), quad_len(d));
    for k in 0..quad_len(d) {
        j[(1 + d + k, k)] = 1.0;
    }
    j
}

/// Symmetric 3-tensor view of a quadratic term: one symmetric `d x d` slice
/// per ambient coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    d: usize,
    slices: Vec<DMatrix<f64>>,
}

impl SymTensor {
    /// Builds the tensor from monomial coefficients `q`
    /// (`ambient_dim x quad_len(d)` matrix).
    ///
    /// Diagonal slice entries copy the matching coefficient; off-diagonal
    /// entries split it in half so that `tau^T B_k tau` reproduces
    /// `q_k . quad_monomials(tau)`. Halving is exact in binary floating
    /// point, which keeps [`SymTensor::to_coeffs`] an exact inverse.
    pub fn from_coeffs(q: &DMatrix<f64>, d: usize) -> Result<Self> {
        if q.ncols() != quad_len(d) {
            return Err(Error::DimensionMismatch {
                context: "quadratic coefficient columns",
                expected: quad_len(d),
                found: q.ncols(),
            });
        }
        let slices = (0..q.nrows())
            .map(|k| {
                let mut b = DMatrix::zeros(d, d);
                for (pos, (i, j)) in monomial_pairs(d).enumerate() {
                    let v = q[(k, pos)];
                    if i == j {
                        b[(i, i)] = v;
                    } else {
                        b[(i, j)] = 0.5 * v;
                        b[(j, i)] = 0.5 * v;
                    }
                }
                b
            })
            .collect();
        Ok(Self { d, slices })
    }

    /// Builds the tensor from explicit slices, validating shape and symmetry.
    pub fn try_from_slices(slices: Vec<DMatrix<f64>>) -> Result<Self> {
        let d = slices.first().map(|s| s.nrows()).unwrap_or(0);
        for (index, s) in slices.iter().enumerate() {
            if s.nrows() != d || s.ncols() != d {
                return Err(Error::DimensionMismatch {
                    context: "tensor slice shape",
                    expected: d,
                    found: s.nrows().max(s.ncols()),
                });
            }
            let asymmetry = (s - s.transpose()).abs().max();
            if asymmetry > 1e-12 * s.abs().max().max(1.0) {
                return Err(Error::NonSymmetricSlice { index, asymmetry });
            }
        }
        Ok(Self { d, slices })
    }

    /// Monomial coefficients, the exact inverse of [`SymTensor::from_coeffs`].
    pub fn to_coeffs(&self) -> DMatrix<f64> {
        let mut q = DMatrix::zeros(self.slices.len(), quad_len(self.d));
        for (k, b) in self.slices.iter().enumerate() {
            for (pos, (i, j)) in monomial_pairs(self.d).enumerate() {
                q[(k, pos)] = if i == j { b[(i, i)] } else { b[(i, j)] + b[(j, i)] };
            }
        }
        q
    }

    pub fn latent_dim(&self) -> usize {
        self.d
    }

    pub fn ambient_dim(&self) -> usize {
        self.slices.len()
    }

    pub fn slices(&self) -> &[DMatrix<f64>] {
        &self.slices
    }

    /// Matrix of the linear map `tau -> B(tau, eta)` for fixed `eta`:
    /// row `k` is `(B_k eta)^T`, shape `ambient_dim x d`.
    pub fn action(&self, eta: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.slices.len(), self.d);
        for (k, b) in self.slices.iter().enumerate() {
            out.row_mut(k).tr_copy_from(&(b * eta));
        }
        out
    }

    /// Weighted slice sum `sum_k v_k B_k`, a symmetric `d x d` matrix.
    pub fn adjoint(&self, v: &DVector<f64>) -> DMatrix<f64> {
        debug_assert_eq!(v.len(), self.slices.len());
        let mut out = DMatrix::zeros(self.d, self.d);
        for (k, b) in self.slices.iter().enumerate() {
            out += b * v[k];
        }
        out
    }

    /// Bilinear evaluation `B(tau, eta)`, one quadratic form per slice.
    pub fn bilinear(&self, tau: &DVector<f64>, eta: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.slices.len());
        for (k, b) in self.slices.iter().enumerate() {
            let mut acc = 0.0;
            for i in 0..self.d {
                for j in 0..self.d {
                    acc += tau[i] * b[(i, j)] * eta[j];
                }
            }
            out[k] = acc;
        }
        out
    }

    /// Largest spectral norm over slices.
    pub fn max_slice_norm(&self) -> f64 {
        self.slices
            .iter()
            .map(crate::linalg::spectral_norm)
            .fold(0.0, f64::max)
    }
}

/// Coefficients of one fitted quadratic surface `f(tau) = c + A tau + B(tau, tau)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadModel {
    c: DVector<f64>,
    a: DMatrix<f64>,
    q: DMatrix<f64>,
}

impl QuadModel {
    pub fn new(c: DVector<f64>, a: DMatrix<f64>, q: DMatrix<f64>) -> Result<Self> {
        let ambient = c.len();
        if a.nrows() != ambient {
            return Err(Error::DimensionMismatch {
                context: "linear block rows",
                expected: ambient,
                found: a.nrows(),
            });
        }
        if q.nrows() != ambient {
            return Err(Error::DimensionMismatch {
                context: "quadratic block rows",
                expected: ambient,
                found: q.nrows(),
            });
        }
        if q.ncols() != quad_len(a.ncols()) {
            return Err(Error::DimensionMismatch {
                context: "quadratic block columns",
                expected: quad_len(a.ncols()),
                found: q.ncols(),
            });
        }
        Ok(Self { c, a, q })
    }

    /// Splits a flat coefficient matrix `[c | A | Q]` by latent dimension.
    pub fn from_flat(r: &DMatrix<f64>, d: usize) -> Result<Self> {
        if r.ncols() != feature_len(d) {
            return Err(Error::DimensionMismatch {
                context: "flat coefficient columns",
                expected: feature_len(d),
                found: r.ncols(),
            });
        }
        Ok(Self {
            c: r.column(0).into_owned(),
            a: r.columns(1, d).into_owned(),
            q: r.columns(1 + d, quad_len(d)).into_owned(),
        })
    }

    /// Flat coefficient matrix `[c | A | Q]`, the inverse of
    /// [`QuadModel::from_flat`].
    pub fn to_flat(&self) -> DMatrix<f64> {
        let d = self.latent_dim();
        let mut r = DMatrix::zeros(self.ambient_dim(), feature_len(d));
        r.column_mut(0).copy_from(&self.c);
        r.columns_mut(1, d).copy_from(&self.a);
        r.columns_mut(1 + d, quad_len(d)).copy_from(&self.q);
        r
    }

    pub fn latent_dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.c.len()
    }

    pub fn intercept(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn linear(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn quad_coeffs(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Tensor view of the quadratic block.
    pub fn tensor(&self) -> SymTensor {
        SymTensor::from_coeffs(&self.q, self.latent_dim()).expect("validated at construction")
    }

    /// Evaluates the surface at one latent point.
    pub fn eval(&self, tau: &DVector<f64>) -> Result<DVector<f64>> {
        if tau.len() != self.latent_dim() {
            return Err(Error::DimensionMismatch {
                context: "latent point length",
                expected: self.latent_dim(),
                found: tau.len(),
            });
        }
        Ok(&self.c + &self.a * tau + &self.q * quad_monomials(tau))
    }

    /// Evaluates the surface at every column of `phi` (`d x m` in,
    /// `ambient_dim x m` out).
    pub fn eval_columns(&self, phi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if phi.nrows() != self.latent_dim() {
            return Err(Error::DimensionMismatch {
                context: "latent rows",
                expected: self.latent_dim(),
                found: phi.nrows(),
            });
        }
        Ok(self.to_flat() * design_matrix(phi))
    }
}

/// Serialized form: `c` as a flat array, `A` and `Q` as row-major nested
/// arrays, with explicit ambient (`D`) and latent (`d`) dimensions.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadModelRepr {
    d: usize,
    #[serde(rename = "D")]
    ambient: usize,
    c: Vec<f64>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], ncols: usize, context: &'static str) -> Result<DMatrix<f64>> {
    for row in rows {
        if row.len() != ncols {
            return Err(Error::DimensionMismatch {
                context,
                expected: ncols,
                found: row.len(),
            });
        }
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

impl Serialize for QuadModel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        QuadModelRepr {
            d: self.latent_dim(),
            ambient: self.ambient_dim(),
            c: self.c.as_slice().to_vec(),
            a: rows_of(&self.a),
            q: rows_of(&self.q),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QuadModel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = QuadModelRepr::deserialize(deserializer)?;
        if repr.c.len() != repr.ambient || repr.a.len() != repr.ambient || repr.q.len() != repr.ambient
        {
            return Err(D::Error::custom(format!(
                "ambient dimension {} inconsistent with row counts (c: {}, A: {}, Q: {})",
                repr.ambient,
                repr.c.len(),
                repr.a.len(),
                repr.q.len()
            )));
        }
        let a = matrix_from_rows(&repr.a, repr.d, "A row length").map_err(D::Error::custom)?;
        let q = matrix_from_rows(&repr.q, quad_len(repr.d), "Q row length")
            .map_err(D::Error::custom)?;
        QuadModel::new(DVector::from_vec(repr.c), a, q).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    pub(crate) fn random_model(rng: &mut ChaCha8Rng, ambient: usize, d: usize) -> QuadModel {
        QuadModel::new(
            random_vec(rng, ambient),
            random_mat(rng, ambient, d),
            random_mat(rng, ambient, quad_len(d)),
        )
        .unwrap()
    }

    #[test]
    fn lengths_match_closed_forms() {
        for d in 1..=8 {
            assert_eq!(quad_len(d), (d * d + d) / 2);
            assert_eq!(feature_len(d), (2 + 3 * d + d * d) / 2);
            assert_eq!(monomial_pairs(d).count(), quad_len(d));
        }
        assert_eq!(feature_len(1), 3);
        assert_eq!(feature_len(2), 6);
        assert_eq!(feature_len(3), 10);
    }

    #[test]
    fn pair_positions_enumerate_in_order() {
        for d in 1..=6 {
            for (pos, (i, j)) in monomial_pairs(d).enumerate() {
                assert_eq!(pair_position(d, i, j), pos);
            }
        }
        assert_eq!(pair_position(3, 0, 2), 2);
        assert_eq!(pair_position(3, 1, 1), 3);
        assert_eq!(pair_position(3, 2, 2), 5);
    }

    #[test]
    fn monomials_of_small_vector() {
        let tau = DVector::from_vec(vec![2.0, 3.0]);
        assert_eq!(quad_monomials(&tau).as_slice(), &[4.0, 6.0, 9.0]);
        assert_eq!(
            feature_vector(&tau).as_slice(),
            &[1.0, 2.0, 3.0, 4.0, 6.0, 9.0]
        );
    }

    #[test]
    fn design_matrix_stacks_feature_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let phi = random_mat(&mut rng, 3, 5);
        let t = design_matrix(&phi);
        assert_eq!(t.shape(), (feature_len(3), 5));
        for k in 0..5 {
            let expected = feature_vector(&phi.column(k).into_owned());
            assert_eq!(t.column(k), expected.column(0));
        }
    }

    #[test]
    fn selector_extracts_quadratic_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for d in 1..=4 {
            let model = random_model(&mut rng, 5, d);
            let extracted = model.to_flat() * quad_selector(d);
            assert_eq!(extracted, *model.quad_coeffs());
        }
    }

    #[test]
    fn coeff_tensor_roundtrip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for d in 1..=5 {
            let q = random_mat(&mut rng, 4, quad_len(d));
            let tensor = SymTensor::from_coeffs(&q, d).unwrap();
            // Bitwise equality: halving and re-doubling are exact in binary.
            assert_eq!(tensor.to_coeffs(), q);
        }
    }

    #[test]
    fn tensor_quadratic_form_matches_monomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for d in 1..=5 {
            let q = random_mat(&mut rng, 3, quad_len(d));
            let tensor = SymTensor::from_coeffs(&q, d).unwrap();
            let tau = random_vec(&mut rng, d);
            assert_relative_eq!(
                tensor.bilinear(&tau, &tau),
                &q * quad_monomials(&tau),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn action_routes_agree_and_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for d in 1..=4 {
            let q = random_mat(&mut rng, 4, quad_len(d));
            let tensor = SymTensor::from_coeffs(&q, d).unwrap();
            let tau = random_vec(&mut rng, d);
            let eta = random_vec(&mut rng, d);
            let direct = tensor.bilinear(&tau, &eta);
            assert_relative_eq!(tensor.action(&eta) * &tau, direct, epsilon = 1e-13);
            // Symmetry of the slices makes the arguments interchangeable.
            assert_relative_eq!(tensor.action(&tau) * &eta, direct, epsilon = 1e-13);
        }
    }

    #[test]
    fn adjoint_transposes_the_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for d in 1..=4 {
            let q = random_mat(&mut rng, 5, quad_len(d));
            let tensor = SymTensor::from_coeffs(&q, d).unwrap();
            let tau = random_vec(&mut rng, d);
            let eta = random_vec(&mut rng, d);
            let v = random_vec(&mut rng, 5);
            let lhs = v.dot(&tensor.bilinear(&tau, &eta));
            let rhs = (tau.transpose() * tensor.adjoint(&v) * &eta)[(0, 0)];
            assert_relative_eq!(lhs, rhs, epsilon = 1e-13);
        }
    }

    #[test]
    fn adjoint_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let q = random_mat(&mut rng, 4, quad_len(3));
        let tensor = SymTensor::from_coeffs(&q, 3).unwrap();
        let v = random_vec(&mut rng, 4);
        let adj = tensor.adjoint(&v);
        assert_eq!(adj, adj.transpose());
    }

    #[test]
    fn slices_must_be_symmetric() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let err = SymTensor::try_from_slices(vec![bad]).unwrap_err();
        assert!(matches!(err, Error::NonSymmetricSlice { index: 0, .. }), "{err}");
    }

    #[test]
    fn coeff_width_is_checked() {
        let q = DMatrix::zeros(3, 4);
        let err = SymTensor::from_coeffs(&q, 2).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }), "{err}");
    }

    #[test]
    fn model_eval_agrees_with_flat_and_tensor_routes() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        for d in 1..=4 {
            let model = random_model(&mut rng, 6, d);
            let flat = model.to_flat();
            let tensor = model.tensor();
            for _ in 0..20 {
                let tau = random_vec(&mut rng, d);
                let direct = model.eval(&tau).unwrap();
                let via_features = &flat * feature_vector(&tau);
                let via_tensor =
                    model.intercept() + model.linear() * &tau + tensor.bilinear(&tau, &tau);
                assert_relative_eq!(direct, via_features, epsilon = 1e-12);
                assert_relative_eq!(direct, via_tensor, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn eval_columns_matches_pointwise_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let model = random_model(&mut rng, 4, 2);
        let phi = random_mat(&mut rng, 2, 7);
        let all = model.eval_columns(&phi).unwrap();
        for k in 0..7 {
            let one = model.eval(&phi.column(k).into_owned()).unwrap();
            assert_relative_eq!(all.column(k).into_owned(), one, epsilon = 1e-13);
        }
    }

    #[test]
    fn flat_roundtrip_and_dimension_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let model = random_model(&mut rng, 5, 3);
        let back = QuadModel::from_flat(&model.to_flat(), 3).unwrap();
        assert_eq!(back, model);

        assert!(QuadModel::from_flat(&model.to_flat(), 2).is_err());
        assert!(model.eval(&DVector::zeros(2)).is_err());
        assert!(QuadModel::new(DVector::zeros(3), DMatrix::zeros(3, 2), DMatrix::zeros(3, 4)).is_err());
    }

    #[test]
    fn json_roundtrip_preserves_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let model = random_model(&mut rng, 3, 2);
        let text = serde_json::to_string(&model).unwrap();
        let back: QuadModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, model);

        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["d"], 2);
        assert_eq!(parsed["D"], 3);
        assert_eq!(parsed["A"].as_array().unwrap().len(), 3);
        assert_eq!(parsed["Q"][0].as_array().unwrap().len(), 3);
    }

    #[test]
    fn json_rejects_malformed_models() {
        // Row count disagrees with the declared ambient dimension.
        let bad = r#"{"d":1,"D":2,"c":[0.0,0.0],"A":[[1.0]],"Q":[[0.0],[0.0]]}"#;
        assert!(serde_json::from_str::<QuadModel>(bad).is_err());
        // Unknown key.
        let bad = r#"{"d":1,"D":1,"c":[0.0],"A":[[1.0]],"Q":[[0.0]],"extra":1}"#;
        assert!(serde_json::from_str::<QuadModel>(bad).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_exact_for_arbitrary_coeffs(
            d in 1usize..5,
            seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = DMatrix::from_fn(3, quad_len(d), |_, _| {
                // Mix magnitudes to exercise exactness across scales.
                let mant: f64 = rng.random_range(-1.0..1.0);
                let exp: i32 = rng.random_range(-12..12);
                mant * 2f64.powi(exp)
            });
            let tensor = SymTensor::from_coeffs(&q, d).unwrap();
            prop_assert_eq!(tensor.to_coeffs(), q);
        }

        #[test]
        fn bilinear_is_symmetric_in_arguments(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = 1 + (seed as usize % 4);
            let q = DMatrix::from_fn(3, quad_len(d), |_, _| rng.random_range(-1.0..1.0));
            let tensor = SymTensor::from_coeffs(&q, d).unwrap();
            let tau = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let eta = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let ab = tensor.bilinear(&tau, &eta);
            let ba = tensor.bilinear(&eta, &tau);
            prop_assert!((ab - ba).abs().max() <= 1e-13);
        }
    }
}
