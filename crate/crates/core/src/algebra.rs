//! Finite-dimensional Lie algebras and their duals.
//!
//! A [`LieStructure`] is pure data: structure constants `c[k][i][j]` with
//! `[e_i, e_j] = sum_k c[k][i][j] e_k`, an inner product `gamma` on the
//! algebra, and a list of Casimir functions on the dual. Coadjoint actions,
//! the musical isomorphism and the double-bracket drift are all derived from
//! that data, so every property test applies to every registered algebra.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Element of the Lie algebra, in the basis `e_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraVector(pub Vec<f64>);

/// Element of the dual algebra, in the dual basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalgebraVector(pub Vec<f64>);

macro_rules! vector_newtype {
    ($t:ident) => {
        impl $t {
            pub fn new(coords: Vec<f64>) -> Self {
                Self(coords)
            }

            pub fn zeros(dim: usize) -> Self {
                Self(vec![0.0; dim])
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.is_finite())
            }

            pub fn norm(&self) -> f64 {
                self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
            }

            pub fn scaled(&self, s: f64) -> Self {
                Self(self.0.iter().map(|v| v * s).collect())
            }
        }

        impl From<Vec<f64>> for $t {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }

        impl From<[f64; 3]> for $t {
            fn from(v: [f64; 3]) -> Self {
                Self(v.to_vec())
            }
        }
    };
}

vector_newtype!(AlgebraVector);
vector_newtype!(CoalgebraVector);

/// Duality pairing `<mu, xi>`.
pub fn pairing(mu: &CoalgebraVector, xi: &AlgebraVector) -> f64 {
    mu.0.iter().zip(&xi.0).map(|(a, b)| a * b).sum()
}

/// State of a semidirect-product system on `so*(3) x R^3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemidirectState {
    /// Angular momentum.
    pub mu: CoalgebraVector,
    /// Advected direction.
    pub a: [f64; 3],
}

impl SemidirectState {
    pub fn new(pi: [f64; 3], gamma: [f64; 3]) -> Self {
        Self {
            mu: CoalgebraVector(pi.to_vec()),
            a: gamma,
        }
    }

    /// Flattened `(Pi, Gamma)` coordinates, matching the semidirect algebra basis.
    pub fn to_coalgebra(&self) -> CoalgebraVector {
        let mut v = self.mu.0.clone();
        v.extend_from_slice(&self.a);
        CoalgebraVector(v)
    }

    pub fn from_coalgebra(v: &CoalgebraVector) -> Result<Self> {
        check_dim(6, v.dim())?;
        Ok(Self {
            mu: CoalgebraVector(v.0[..3].to_vec()),
            a: [v.0[3], v.0[4], v.0[5]],
        })
    }
}

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A named Casimir function on the dual algebra with its gradient.
#[derive(Clone)]
pub struct Casimir {
    pub name: String,
    value: Arc<ScalarFn>,
    gradient: Arc<GradFn>,
}

impl Casimir {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    pub fn value(&self, mu: &[f64]) -> f64 {
        (self.value)(mu)
    }

    pub fn gradient(&self, mu: &[f64]) -> Vec<f64> {
        (self.gradient)(mu)
    }
}

impl fmt::Debug for Casimir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Casimir").field("name", &self.name).finish()
    }
}

/// Which built-in family a structure belongs to. Schemes that need a
/// concrete group exponential (the coadjoint rotation scheme) dispatch on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StructureKind {
    /// `so(3)` with `[xi, eta] = xi x eta`, so `ad*_xi Pi = Pi x xi`.
    So3Body,
    /// `so(3)` with `[xi, eta] = -(xi x eta)`, so `ad*_xi Pi = xi x Pi`.
    So3Spatial,
    /// `so(3) x| R^3` acting by rotation (heavy top).
    HeavyTop,
    Custom,
}

/// Finite-dimensional Lie algebra with an inner product and Casimirs.
#[derive(Debug, Clone)]
pub struct LieStructure {
    dim: usize,
    // c[k][i][j] flattened as k * dim^2 + i * dim + j
    c: Vec<f64>,
    gamma: DMatrix<f64>,
    gamma_inv: DMatrix<f64>,
    casimirs: Vec<Casimir>,
    kind: StructureKind,
}

const STRUCTURE_TOL: f64 = 1e-12;

impl LieStructure {
    /// Builds a structure from `c[k][i][j]` and `gamma`, checking
    /// antisymmetry, the Jacobi identity and positive-definiteness.
    pub fn new(structure_constants: Vec<Vec<Vec<f64>>>, gamma: DMatrix<f64>) -> Result<Self> {
        let dim = structure_constants.len();
        if dim == 0 {
            return Err(Error::InvalidInput("algebra dimension must be positive".into()));
        }
        let mut c = vec![0.0; dim * dim * dim];
        for (k, plane) in structure_constants.iter().enumerate() {
            check_dim(dim, plane.len())?;
            for (i, row) in plane.iter().enumerate() {
                check_dim(dim, row.len())?;
                for (j, v) in row.iter().enumerate() {
                    c[k * dim * dim + i * dim + j] = *v;
                }
            }
        }
        Self::from_flat(dim, c, gamma, StructureKind::Custom)
    }

    fn from_flat(dim: usize, c: Vec<f64>, gamma: DMatrix<f64>, kind: StructureKind) -> Result<Self> {
        if gamma.nrows() != dim || gamma.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: gamma.nrows(),
            });
        }
        let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for k in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    let a = c[k * dim * dim + i * dim + j];
                    let b = c[k * dim * dim + j * dim + i];
                    if (a + b).abs() > STRUCTURE_TOL * scale {
                        return Err(Error::InvalidInput(format!(
                            "structure constants not antisymmetric at c[{k}][{i}][{j}]"
                        )));
                    }
                }
            }
        }
        let at = |k: usize, i: usize, j: usize| c[k * dim * dim + i * dim + j];
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        let mut s = 0.0;
                        for m in 0..dim {
                            s += at(m, i, j) * at(l, m, k)
                                + at(m, j, k) * at(l, m, i)
                                + at(m, k, i) * at(l, m, j);
                        }
                        if s.abs() > STRUCTURE_TOL * scale * scale {
                            return Err(Error::InvalidInput(format!(
                                "Jacobi identity violated ({s:e}) at ({i},{j},{k}) component {l}"
                            )));
                        }
                    }
                }
            }
        }
        let sym_defect = (&gamma - gamma.transpose()).abs().max();
        if sym_defect > STRUCTURE_TOL * gamma.abs().max().max(1.0) {
            return Err(Error::InvalidInput("gamma is not symmetric".into()));
        }
        let chol = gamma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidInput("gamma is not positive definite".into()))?;
        let gamma_inv = chol.inverse();
        Ok(Self {
            dim,
            c,
            gamma,
            gamma_inv,
            casimirs: Vec::new(),
            kind,
        })
    }

    /// Registers a Casimir function.
    pub fn with_casimir(mut self, casimir: Casimir) -> Self {
        self.casimirs.push(casimir);
        self
    }

    /// `so(3)` with the cross-product bracket.
    pub fn so3(gamma: Matrix3<f64>) -> Result<Self> {
        Self::so3_with_sign(gamma, 1.0, StructureKind::So3Body)
    }

    /// `so(3)` with the opposite bracket, for which `ad*_xi Pi = xi x Pi`.
    pub fn so3_spatial(gamma: Matrix3<f64>) -> Result<Self> {
        Self::so3_with_sign(gamma, -1.0, StructureKind::So3Spatial)
    }

    fn so3_with_sign(gamma: Matrix3<f64>, sign: f64, kind: StructureKind) -> Result<Self> {
        let mut c = vec![0.0; 27];
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    c[k * 9 + i * 3 + j] = sign * levi_civita(k, i, j);
                }
            }
        }
        let g = DMatrix::from_iterator(3, 3, gamma.iter().copied());
        Ok(Self::from_flat(3, c, g, kind)?.with_casimir(Casimir::new(
            "norm_sq",
            |m: &[f64]| m.iter().map(|v| v * v).sum(),
            |m: &[f64]| m.iter().map(|v| 2.0 * v).collect(),
        )))
    }

    /// Semidirect product `so(3) x| R^3` with
    /// `[(xi, u), (eta, v)] = (xi x eta, xi x v - eta x u)`.
    /// Coordinates on the dual are `(Pi, Gamma)`.
    pub fn heavy_top(gamma: DMatrix<f64>) -> Result<Self> {
        let n = 6;
        let mut c = vec![0.0; n * n * n];
        let mut set = |k: usize, i: usize, j: usize, v: f64| c[k * n * n + i * n + j] += v;
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let e = levi_civita(k, i, j);
                    // rotation-rotation
                    set(k, i, j, e);
                    // rotation acting on translation: [e_i, f_j] = e_i x f_j
                    set(3 + k, i, 3 + j, e);
                    set(3 + k, 3 + j, i, -e);
                }
            }
        }
        Ok(Self::from_flat(n, c, gamma, StructureKind::HeavyTop)?
            .with_casimir(Casimir::new(
                "gamma_norm_sq",
                |m: &[f64]| m[3] * m[3] + m[4] * m[4] + m[5] * m[5],
                |m: &[f64]| vec![0.0, 0.0, 0.0, 2.0 * m[3], 2.0 * m[4], 2.0 * m[5]],
            ))
            .with_casimir(Casimir::new(
                "pi_dot_gamma",
                |m: &[f64]| m[0] * m[3] + m[1] * m[4] + m[2] * m[5],
                |m: &[f64]| vec![m[3], m[4], m[5], m[0], m[1], m[2]],
            )))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> StructureKind {
        self.kind
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn casimir_list(&self) -> &[Casimir] {
        &self.casimirs
    }

    /// Structure constant `c[k][i][j]`.
    pub fn constant(&self, k: usize, i: usize, j: usize) -> f64 {
        self.c[k * self.dim * self.dim + i * self.dim + j]
    }

    /// Lie bracket `[xi, eta]`.
    pub fn bracket(&self, xi: &AlgebraVector, eta: &AlgebraVector) -> Result<AlgebraVector> {
        check_dim(self.dim, xi.dim())?;
        check_dim(self.dim, eta.dim())?;
        Ok(AlgebraVector(self.bracket_raw(&xi.0, &eta.0)))
    }

    /// Adjoint action, identical to the bracket.
    pub fn ad(&self, xi: &AlgebraVector, eta: &AlgebraVector) -> Result<AlgebraVector> {
        self.bracket(xi, eta)
    }

    /// Coadjoint action defined by `<ad*_xi mu, eta> = <mu, [xi, eta]>`.
    pub fn ad_star(&self, xi: &AlgebraVector, mu: &CoalgebraVector) -> Result<CoalgebraVector> {
        check_dim(self.dim, xi.dim())?;
        check_dim(self.dim, mu.dim())?;
        Ok(CoalgebraVector(self.ad_star_raw(&xi.0, &mu.0)))
    }

    /// `gamma^{-1} mu`.
    pub fn sharp(&self, mu: &CoalgebraVector) -> Result<AlgebraVector> {
        check_dim(self.dim, mu.dim())?;
        Ok(AlgebraVector(self.sharp_raw(&mu.0)))
    }

    /// `gamma xi`.
    pub fn flat(&self, xi: &AlgebraVector) -> Result<CoalgebraVector> {
        check_dim(self.dim, xi.dim())?;
        let v = &self.gamma * DVector::from_column_slice(&xi.0);
        Ok(CoalgebraVector(v.as_slice().to_vec()))
    }

    /// Inner product `gamma(xi, eta)`.
    pub fn inner(&self, xi: &AlgebraVector, eta: &AlgebraVector) -> Result<f64> {
        let g = self.flat(xi)?;
        check_dim(self.dim, eta.dim())?;
        Ok(pairing(&g, eta))
    }

    /// Co-metric `gamma^{-1}(mu, nu)`.
    pub fn cometric(&self, mu: &CoalgebraVector, nu: &CoalgebraVector) -> Result<f64> {
        let s = self.sharp(mu)?;
        check_dim(self.dim, nu.dim())?;
        Ok(pairing(nu, &s))
    }

    /// Double-bracket dissipative drift `theta ad*_{(ad*_{grad_h} mu)^sharp} mu`.
    ///
    /// Its pairing with `grad_h` equals
    /// `-theta gamma^{-1}(ad*_{grad_h} mu, ad*_{grad_h} mu) <= 0`.
    pub fn double_bracket_drift(
        &self,
        grad_h: &AlgebraVector,
        mu: &CoalgebraVector,
        theta: f64,
    ) -> Result<CoalgebraVector> {
        if !(theta >= 0.0) {
            return Err(Error::InvalidInput(format!("theta must be nonnegative, got {theta}")));
        }
        check_dim(self.dim, grad_h.dim())?;
        check_dim(self.dim, mu.dim())?;
        Ok(CoalgebraVector(self.double_bracket_raw(&grad_h.0, &mu.0, theta)))
    }

    /// Values of all registered Casimirs.
    pub fn casimirs(&self, mu: &CoalgebraVector) -> Vec<(String, f64)> {
        self.casimirs
            .iter()
            .map(|c| (c.name.clone(), c.value(&mu.0)))
            .collect()
    }

    pub(crate) fn bracket_raw(&self, xi: &[f64], eta: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        for (k, o) in out.iter_mut().enumerate() {
            let plane = &self.c[k * n * n..(k + 1) * n * n];
            let mut s = 0.0;
            for i in 0..n {
                if xi[i] == 0.0 {
                    continue;
                }
                let row = &plane[i * n..(i + 1) * n];
                s += xi[i] * row.iter().zip(eta).map(|(c, e)| c * e).sum::<f64>();
            }
            *o = s;
        }
        out
    }

    pub(crate) fn ad_star_raw(&self, xi: &[f64], mu: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        for k in 0..n {
            if mu[k] == 0.0 {
                continue;
            }
            for i in 0..n {
                if xi[i] == 0.0 {
                    continue;
                }
                let w = mu[k] * xi[i];
                let row = &self.c[k * n * n + i * n..k * n * n + (i + 1) * n];
                for (o, c) in out.iter_mut().zip(row) {
                    *o += w * c;
                }
            }
        }
        out
    }

    pub(crate) fn sharp_raw(&self, mu: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| (0..n).map(|j| self.gamma_inv[(i, j)] * mu[j]).sum())
            .collect()
    }

    pub(crate) fn double_bracket_raw(&self, grad_h: &[f64], mu: &[f64], theta: f64) -> Vec<f64> {
        if theta == 0.0 {
            return vec![0.0; self.dim];
        }
        let v = self.sharp_raw(&self.ad_star_raw(grad_h, mu));
        self.ad_star_raw(&v, mu).into_iter().map(|x| theta * x).collect()
    }
}

pub(crate) fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn identity6() -> DMatrix<f64> {
        DMatrix::identity(6, 6)
    }

    #[test]
    fn so3_bracket_of_basis_vectors() {
        let s = LieStructure::so3(Matrix3::identity()).unwrap();
        let e1 = AlgebraVector::from([1.0, 0.0, 0.0]);
        let e2 = AlgebraVector::from([0.0, 1.0, 0.0]);
        assert_eq!(s.bracket(&e1, &e2).unwrap().0, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn so3_bracket_matches_cross_product() {
        let s = LieStructure::so3(Matrix3::identity()).unwrap();
        let r = s
            .bracket(&[1.0, 2.0, 3.0].into(), &[4.0, 5.0, 6.0].into())
            .unwrap();
        assert_eq!(r.0, vec![-3.0, 6.0, -3.0]);
    }

    #[test]
    fn bracket_with_self_vanishes() {
        let s = LieStructure::heavy_top(identity6()).unwrap();
        let xi = AlgebraVector::new(vec![0.3, -1.2, 2.0, 0.7, 0.1, -0.4]);
        assert!(s.bracket(&xi, &xi).unwrap().0.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn bracket_rejects_wrong_length() {
        let s = LieStructure::so3(Matrix3::identity()).unwrap();
        let err = s
            .bracket(&AlgebraVector::new(vec![1.0, 2.0]), &[0.0, 0.0, 1.0].into())
            .unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 3, got: 2 });
    }

    #[test]
    fn spatial_ad_star_is_left_cross_product() {
        let s = LieStructure::so3_spatial(Matrix3::identity()).unwrap();
        let r = s
            .ad_star(&[0.0, 0.0, 1.0].into(), &[1.0, 0.0, 0.0].into())
            .unwrap();
        assert_eq!(r.0, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn ad_star_of_zero_is_zero() {
        let s = LieStructure::so3_spatial(Matrix3::identity()).unwrap();
        let r = s
            .ad_star(&[0.4, 1.0, -2.0].into(), &CoalgebraVector::zeros(3))
            .unwrap();
        assert_eq!(r.0, vec![0.0; 3]);
    }

    #[test]
    fn sharp_solves_metric_system() {
        let g = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 2.0, 3.0));
        let s = LieStructure::so3(g).unwrap();
        let v = s.sharp(&[1.0, 2.0, 3.0].into()).unwrap();
        for x in v.0 {
            assert_abs_diff_eq!(x, 1.0, epsilon = 1e-15);
        }
        let id = LieStructure::so3(Matrix3::identity()).unwrap();
        assert_eq!(id.sharp(&[0.5, -2.0, 7.0].into()).unwrap().0, vec![0.5, -2.0, 7.0]);
    }

    #[test]
    fn sharp_then_flat_round_trips() {
        let g = nalgebra::Matrix3::new(2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.0);
        let s = LieStructure::so3(g).unwrap();
        let mu = CoalgebraVector::from([0.3, -1.7, 2.2]);
        let back = s.flat(&s.sharp(&mu).unwrap()).unwrap();
        for (a, b) in back.0.iter().zip(&mu.0) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn double_bracket_zero_theta_is_zero() {
        let s = LieStructure::so3_spatial(Matrix3::identity()).unwrap();
        let d = s
            .double_bracket_drift(&[1.0, 2.0, 3.0].into(), &[3.0, 2.0, 1.0].into(), 0.0)
            .unwrap();
        assert_eq!(d.0, vec![0.0; 3]);
    }

    #[test]
    fn double_bracket_rejects_negative_theta() {
        let s = LieStructure::so3_spatial(Matrix3::identity()).unwrap();
        assert!(matches!(
            s.double_bracket_drift(&[1.0, 0.0, 0.0].into(), &[1.0, 0.0, 0.0].into(), -0.1),
            Err(Error::InvalidInput(_))
        ));
    }

    // Rigid body with inertia diag(1,2,3), Pi = (1,1,1). By hand:
    // Omega = (1, 1/2, 1/3), Pi x Omega = (-1/6, 2/3, -1/2),
    // I^{-1}(Pi x Omega) = (-1/6, 1/3, -1/6), Pi x that = (-1/2, 0, 1/2).
    // The dissipative drift is theta * (-1/2, 0, 1/2), whose pairing with
    // Omega is -theta/3 < 0.
    #[test]
    fn double_bracket_rigid_body_hand_value() {
        let inertia = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 2.0, 3.0));
        let s = LieStructure::so3_spatial(inertia).unwrap();
        let pi = CoalgebraVector::from([1.0, 1.0, 1.0]);
        let omega = AlgebraVector::from([1.0, 0.5, 1.0 / 3.0]);
        let theta = 0.7;
        let d = s.double_bracket_drift(&omega, &pi, theta).unwrap();
        let expected = [-0.5 * theta, 0.0, 0.5 * theta];
        for (a, b) in d.0.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(pairing(&d, &omega), -theta / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn double_bracket_vanishes_at_principal_axis() {
        let inertia = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 2.0, 3.0));
        let s = LieStructure::so3_spatial(inertia).unwrap();
        let pi = CoalgebraVector::from([0.0, 2.0, 0.0]);
        let omega = AlgebraVector::from([0.0, 1.0, 0.0]);
        let d = s.double_bracket_drift(&omega, &pi, 1.0).unwrap();
        assert_eq!(d.0, vec![0.0; 3]);
    }

    #[test]
    fn casimir_values() {
        let s = LieStructure::so3(Matrix3::identity()).unwrap();
        let c = s.casimirs(&[3.0, 4.0, 0.0].into());
        assert_eq!(c, vec![("norm_sq".to_string(), 25.0)]);

        let ht = LieStructure::heavy_top(identity6()).unwrap();
        let state = SemidirectState::new([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let c = ht.casimirs(&state.to_coalgebra());
        assert_eq!(
            c,
            vec![("gamma_norm_sq".to_string(), 1.0), ("pi_dot_gamma".to_string(), 0.0)]
        );
    }

    #[test]
    fn casimir_invariant_under_explicit_rotation() {
        let s = LieStructure::so3(Matrix3::identity()).unwrap();
        let mu = CoalgebraVector::from([0.3, -1.1, 2.5]);
        let rot = nalgebra::Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(nalgebra::Vector3::new(1.0, 2.0, -0.5)),
            1.234,
        );
        let r = rot * nalgebra::Vector3::new(0.3, -1.1, 2.5);
        let rotated = CoalgebraVector::from([r.x, r.y, r.z]);
        assert_abs_diff_eq!(s.casimirs(&mu)[0].1, s.casimirs(&rotated)[0].1, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_jacobi_constants() {
        // antisymmetric but not a Lie algebra: [e0,e1]=e2, [e1,e2]=e2, [e0,e2]=e0
        let mut c = vec![vec![vec![0.0; 3]; 3]; 3];
        c[2][0][1] = 1.0;
        c[2][1][0] = -1.0;
        c[2][1][2] = 1.0;
        c[2][2][1] = -1.0;
        c[0][0][2] = 1.0;
        c[0][2][0] = -1.0;
        let err = LieStructure::new(c, DMatrix::identity(3, 3)).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(m) if m.contains("Jacobi")));
    }

    #[test]
    fn rejects_indefinite_gamma() {
        let g = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, -1.0, 1.0));
        assert!(LieStructure::so3(g).is_err());
    }

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..3.0, 3)
    }

    fn vec6() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..3.0, 6)
    }

    proptest! {
        #[test]
        fn jacobi_holds_for_heavy_top(a in vec6(), b in vec6(), c in vec6()) {
            let s = LieStructure::heavy_top(identity6()).unwrap();
            let br = |x: &[f64], y: &[f64]| s.bracket_raw(x, y);
            let t1 = br(&a, &br(&b, &c));
            let t2 = br(&b, &br(&c, &a));
            let t3 = br(&c, &br(&a, &b));
            for k in 0..6 {
                prop_assert!((t1[k] + t2[k] + t3[k]).abs() < 1e-12);
            }
        }

        #[test]
        fn duality_pairing(xi in vec6(), mu in vec6(), eta in vec6()) {
            let s = LieStructure::heavy_top(identity6()).unwrap();
            let lhs = dot(&s.ad_star_raw(&xi, &mu), &eta);
            let rhs = dot(&mu, &s.bracket_raw(&xi, &eta));
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn duality_pairing_so3(xi in vec3(), mu in vec3(), eta in vec3()) {
            for s in [LieStructure::so3(Matrix3::identity()).unwrap(),
                      LieStructure::so3_spatial(Matrix3::identity()).unwrap()] {
                let lhs = dot(&s.ad_star_raw(&xi, &mu), &eta);
                let rhs = dot(&mu, &s.bracket_raw(&xi, &eta));
                prop_assert!((lhs - rhs).abs() < 1e-12);
            }
        }

        #[test]
        fn body_and_spatial_ad_star_are_cross_products(xi in vec3(), mu in vec3()) {
            let body = LieStructure::so3(Matrix3::identity()).unwrap();
            let spatial = LieStructure::so3_spatial(Matrix3::identity()).unwrap();
            let b = body.ad_star_raw(&xi, &mu);
            let s = spatial.ad_star_raw(&xi, &mu);
            let mxx = cross(&mu, &xi);
            let xxm = cross(&xi, &mu);
            for k in 0..3 {
                prop_assert!((b[k] - mxx[k]).abs() < 1e-12);
                prop_assert!((s[k] - xxm[k]).abs() < 1e-12);
            }
        }

        #[test]
        fn double_bracket_dissipates(
            mu in vec6(), grad in vec6(), theta in 0.0f64..5.0,
            d in prop::collection::vec(0.2f64..4.0, 6),
        ) {
            let g = DMatrix::from_diagonal(&DVector::from_vec(d));
            let s = LieStructure::heavy_top(g).unwrap();
            let drift = s.double_bracket_raw(&grad, &mu, theta);
            let p = dot(&drift, &grad);
            let adm = CoalgebraVector(s.ad_star_raw(&grad, &mu));
            let expected = -theta * s.cometric(&adm, &adm).unwrap();
            prop_assert!(p <= 1e-12);
            prop_assert!((p - expected).abs() < 1e-9 * (1.0 + expected.abs()));
        }

        #[test]
        fn casimirs_annihilate_ad_star(xi in vec6(), mu in vec6()) {
            let s = LieStructure::heavy_top(identity6()).unwrap();
            let v = s.ad_star_raw(&xi, &mu);
            for c in s.casimir_list() {
                prop_assert!(dot(&c.gradient(&mu), &v).abs() < 1e-10);
            }
        }

        #[test]
        fn so3_casimir_annihilates_ad_star(xi in vec3(), mu in vec3()) {
            let s = LieStructure::so3_spatial(Matrix3::identity()).unwrap();
            let v = s.ad_star_raw(&xi, &mu);
            let c = &s.casimir_list()[0];
            prop_assert!(dot(&c.gradient(&mu), &v).abs() < 1e-10);
        }
    }

    #[test]
    fn dissipativity_over_many_random_states() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let inertia = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 2.0, 3.0));
        let s = LieStructure::so3_spatial(inertia).unwrap();
        for _ in 0..1000 {
            let mu: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let grad: Vec<f64> = vec![mu[0], mu[1] / 2.0, mu[2] / 3.0];
            let d = s.double_bracket_raw(&grad, &mu, 0.3);
            assert!(dot(&d, &grad) <= 0.0);
        }
    }
}
