//! Real spherical harmonics on a sphere of radius `R` and the transport
//! noise fields built from them.
//!
//! Harmonics are evaluated as solid harmonics `N P_l^m(z, r^2) A_m(x, y)`
//! (or `B_m` for `m < 0`) where `A_m + i B_m = (x + i y)^m`, so their
//! ambient gradients are exact polynomials. No Condon-Shortley phase.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::cross;
use crate::error::{Error, Result};

/// One `(l, m)` mode with its Laplace-Beltrami eigenvalue `l(l+1)/R^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicMode {
    pub ell: usize,
    pub m: i64,
    pub lambda: f64,
}

/// Set of harmonic modes generating the vortex transport noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicBasis {
    radius: f64,
    ell_max: usize,
    modes: Vec<HarmonicMode>,
}

impl HarmonicBasis {
    /// All modes with `1 <= l <= ell_max`, ordered by `l` then `m = -l..=l`.
    pub fn new(radius: f64, ell_max: usize) -> Result<Self> {
        let pairs = (1..=ell_max)
            .flat_map(|l| (-(l as i64)..=l as i64).map(move |m| (l, m)))
            .collect::<Vec<_>>();
        Self::with_modes(radius, &pairs)
    }

    /// Explicit list of `(l, m)` modes. `l = 0` is rejected: the constant
    /// mode generates no flow.
    pub fn with_modes(radius: f64, pairs: &[(usize, i64)]) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
        }
        let mut modes = Vec::with_capacity(pairs.len());
        let mut ell_max = 0;
        for &(ell, m) in pairs {
            if ell == 0 {
                return Err(Error::InvalidInput("l = 0 harmonic generates no flow".into()));
            }
            if m.unsigned_abs() as usize > ell {
                return Err(Error::InvalidInput(format!("|m| = {} exceeds l = {ell}", m.abs())));
            }
            ell_max = ell_max.max(ell);
            modes.push(HarmonicMode {
                ell,
                m,
                lambda: (ell * (ell + 1)) as f64 / (radius * radius),
            });
        }
        Ok(Self { radius, ell_max, modes })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn ell_max(&self) -> usize {
        self.ell_max
    }

    pub fn modes(&self) -> &[HarmonicMode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Values of every mode at `x` (any nonzero point; evaluated at `x/|x|`
    /// on the radius-`R` sphere). Normalised so `int Y^2 dA = 1` over that sphere.
    pub fn values(&self, x: &[f64; 3]) -> Vec<f64> {
        let table = SolidTable::new(self.ell_max, x);
        let r = norm(x);
        self.modes
            .iter()
            .map(|md| {
                let (s, _) = table.solid(md.ell, md.m);
                s / (r.powi(md.ell as i32) * self.radius)
            })
            .collect()
    }

    /// Surface gradients of every mode at a point `x` with `|x| = R`.
    pub fn surface_gradients(&self, x: &[f64; 3]) -> Vec<[f64; 3]> {
        let table = SolidTable::new(self.ell_max, x);
        let r = norm(x);
        let n = [x[0] / r, x[1] / r, x[2] / r];
        self.modes
            .iter()
            .map(|md| {
                let (_, g) = table.solid(md.ell, md.m);
                let s = 1.0 / (r.powi(md.ell as i32) * self.radius);
                let gn = g[0] * n[0] + g[1] * n[1] + g[2] * n[2];
                [
                    s * (g[0] - gn * n[0]),
                    s * (g[1] - gn * n[1]),
                    s * (g[2] - gn * n[2]),
                ]
            })
            .collect()
    }

    /// Noise fields `lambda^{-1/2} (x/|x|) x grad_S Y` at `x`, one per mode.
    pub fn noise_fields(&self, x: &[f64; 3]) -> Vec<[f64; 3]> {
        let r = norm(x);
        let n = [x[0] / r, x[1] / r, x[2] / r];
        self.surface_gradients(x)
            .into_iter()
            .zip(&self.modes)
            .map(|(g, md)| {
                let c = cross(&n, &g);
                let s = md.lambda.sqrt().recip();
                [s * c[0], s * c[1], s * c[2]]
            })
            .collect()
    }

    /// Gram matrix `int_{S^2} f_a . f_b dA` of the noise fields using a
    /// product rule: `n` Gauss-Legendre nodes in `cos(theta)` and `2n`
    /// equispaced nodes in `phi`. Exact when `n > ell_max + 1`.
    pub fn gram_matrix(&self, n: usize) -> DMatrix<f64> {
        let k = self.modes.len();
        let mut g = DMatrix::zeros(k, k);
        let (nodes, weights) = gauss_legendre(n.max(2));
        let n_phi = 2 * n.max(2);
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let r = self.radius;
        for (z, w) in nodes.iter().zip(&weights) {
            let s = (1.0 - z * z).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = j as f64 * dphi;
                let x = [r * s * phi.cos(), r * s * phi.sin(), r * z];
                let f = self.noise_fields(&x);
                let wt = w * dphi * r * r;
                for a in 0..k {
                    for b in a..k {
                        let v = wt * (f[a][0] * f[b][0] + f[a][1] * f[b][1] + f[a][2] * f[b][2]);
                        g[(a, b)] += v;
                        if a != b {
                            g[(b, a)] += v;
                        }
                    }
                }
            }
        }
        g
    }
}

fn norm(x: &[f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Unnormalised Legendre parts `P_l^m(z, rho)` with `rho = r^2`, their
/// partial derivatives, and the azimuthal parts `A_m, B_m` at one point.
struct SolidTable {
    x: [f64; 3],
    // index [m][l]
    p: Vec<Vec<f64>>,
    dz: Vec<Vec<f64>>,
    drho: Vec<Vec<f64>>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl SolidTable {
    fn new(ell_max: usize, x: &[f64; 3]) -> Self {
        let (z, rho) = (x[2], x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        let l1 = ell_max + 1;
        let mut p = vec![vec![0.0; l1]; l1];
        let mut dz = vec![vec![0.0; l1]; l1];
        let mut drho = vec![vec![0.0; l1]; l1];
        let mut dfact = 1.0;
        for m in 0..=ell_max {
            if m > 0 {
                dfact *= (2 * m - 1) as f64;
            }
            p[m][m] = dfact;
            if m < ell_max {
                let c = (2 * m + 1) as f64;
                p[m][m + 1] = c * z * dfact;
                dz[m][m + 1] = c * dfact;
            }
            for l in m + 2..=ell_max {
                let a = (2 * l - 1) as f64;
                let b = (l + m - 1) as f64;
                let d = (l - m) as f64;
                p[m][l] = (a * z * p[m][l - 1] - b * rho * p[m][l - 2]) / d;
                dz[m][l] = (a * (p[m][l - 1] + z * dz[m][l - 1]) - b * rho * dz[m][l - 2]) / d;
                drho[m][l] = (a * z * drho[m][l - 1] - b * (p[m][l - 2] + rho * drho[m][l - 2])) / d;
            }
        }
        let mut a = vec![1.0; l1];
        let mut b = vec![0.0; l1];
        for m in 1..=ell_max {
            a[m] = x[0] * a[m - 1] - x[1] * b[m - 1];
            b[m] = x[0] * b[m - 1] + x[1] * a[m - 1];
        }
        Self { x: *x, p, dz, drho, a, b }
    }

    /// Normalised solid harmonic value and ambient gradient.
    fn solid(&self, ell: usize, m: i64) -> (f64, [f64; 3]) {
        let ma = m.unsigned_abs() as usize;
        let mut ratio = 1.0;
        for k in (ell - ma + 1)..=(ell + ma) {
            ratio /= k as f64;
        }
        let mut norm = ((2 * ell + 1) as f64 / (4.0 * std::f64::consts::PI) * ratio).sqrt();
        if m != 0 {
            norm *= std::f64::consts::SQRT_2;
        }
        let (pv, pz, pr) = (self.p[ma][ell], self.dz[ma][ell], self.drho[ma][ell]);
        let [x, y, z] = self.x;
        let grad_p = [2.0 * x * pr, 2.0 * y * pr, pz + 2.0 * z * pr];
        let (c, grad_c) = if m >= 0 {
            let g = if ma == 0 {
                [0.0, 0.0]
            } else {
                let k = ma as f64;
                [k * self.a[ma - 1], -k * self.b[ma - 1]]
            };
            (self.a[ma], g)
        } else {
            let k = ma as f64;
            (self.b[ma], [k * self.b[ma - 1], k * self.a[ma - 1]])
        };
        let value = norm * pv * c;
        let grad = [
            norm * (grad_p[0] * c + pv * grad_c[0]),
            norm * (grad_p[1] * c + pv * grad_c[1]),
            norm * grad_p[2] * c,
        ];
        (value, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Standard real harmonics on the unit sphere, written out by hand.
    fn closed_form(ell: usize, m: i64, p: [f64; 3]) -> f64 {
        let [x, y, z] = p;
        match (ell, m) {
            (1, -1) => (3.0 / (4.0 * PI)).sqrt() * y,
            (1, 0) => (3.0 / (4.0 * PI)).sqrt() * z,
            (1, 1) => (3.0 / (4.0 * PI)).sqrt() * x,
            (2, -2) => 0.5 * (15.0 / PI).sqrt() * x * y,
            (2, -1) => 0.5 * (15.0 / PI).sqrt() * y * z,
            (2, 0) => 0.25 * (5.0 / PI).sqrt() * (3.0 * z * z - 1.0),
            (2, 1) => 0.5 * (15.0 / PI).sqrt() * x * z,
            (2, 2) => 0.25 * (15.0 / PI).sqrt() * (x * x - y * y),
            (3, -3) => 0.25 * (35.0 / (2.0 * PI)).sqrt() * (3.0 * x * x - y * y) * y,
            (3, -2) => 0.5 * (105.0 / PI).sqrt() * x * y * z,
            (3, -1) => 0.25 * (21.0 / (2.0 * PI)).sqrt() * y * (5.0 * z * z - 1.0),
            (3, 0) => 0.25 * (7.0 / PI).sqrt() * (5.0 * z * z * z - 3.0 * z),
            (3, 1) => 0.25 * (21.0 / (2.0 * PI)).sqrt() * x * (5.0 * z * z - 1.0),
            (3, 2) => 0.25 * (105.0 / PI).sqrt() * (x * x - y * y) * z,
            (3, 3) => 0.25 * (35.0 / (2.0 * PI)).sqrt() * (x * x - 3.0 * y * y) * x,
            _ => unreachable!(),
        }
    }

    fn unit(v: [f64; 3]) -> [f64; 3] {
        let n = norm(&v);
        [v[0] / n, v[1] / n, v[2] / n]
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert_relative_eq!(s, 2.0 / 11.0, epsilon = 1e-14);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn default_basis_has_fifteen_modes() {
        assert_eq!(HarmonicBasis::new(1.0, 3).unwrap().len(), 15);
    }

    #[test]
    fn rejects_constant_mode() {
        assert!(HarmonicBasis::with_modes(1.0, &[(0, 0)]).is_err());
        assert!(HarmonicBasis::with_modes(1.0, &[(2, 3)]).is_err());
    }

    #[test]
    fn degree_one_fields_are_rotations() {
        let b = HarmonicBasis::new(1.0, 1).unwrap();
        let x = unit([0.3, -0.5, 0.8]);
        let f = b.noise_fields(&x);
        // Y_1^{-1,0,1} gradients are along e_y, e_z, e_x
        let c = (3.0 / (4.0 * PI)).sqrt() / 2f64.sqrt();
        for (k, axis) in [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]].iter().enumerate() {
            let e = cross(&x, axis);
            for d in 0..3 {
                assert_relative_eq!(f[k][d], c * e[d], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn fields_are_orthonormal_on_unit_sphere() {
        let g = HarmonicBasis::new(1.0, 3).unwrap().gram_matrix(8);
        for a in 0..15 {
            for b in 0..15 {
                let t = if a == b { 1.0 } else { 0.0 };
                assert!((g[(a, b)] - t).abs() < 1e-6, "G[{a},{b}] = {}", g[(a, b)]);
            }
        }
    }

    #[test]
    fn fields_are_orthonormal_on_scaled_sphere() {
        let g = HarmonicBasis::new(2.5, 4).unwrap().gram_matrix(10);
        let k = g.nrows();
        assert!((g - DMatrix::identity(k, k)).amax() < 1e-6);
    }

    proptest! {
        #[test]
        fn values_match_closed_forms(v in proptest::array::uniform3(-1.0..1.0f64)) {
            prop_assume!(norm(&v) > 0.1);
            let x = unit(v);
            let b = HarmonicBasis::new(1.0, 3).unwrap();
            for (md, val) in b.modes().iter().zip(b.values(&x)) {
                prop_assert!((val - closed_form(md.ell, md.m, x)).abs() < 1e-12,
                    "l={} m={}", md.ell, md.m);
            }
        }

        #[test]
        fn surface_gradient_matches_finite_differences(v in proptest::array::uniform3(-1.0..1.0f64)) {
            prop_assume!(norm(&v) > 0.1);
            let r = 1.7;
            let u = unit(v);
            let x = [r * u[0], r * u[1], r * u[2]];
            let b = HarmonicBasis::new(r, 4).unwrap();
            let grads = b.surface_gradients(&x);
            // differentiate along two tangent directions of the sphere
            let t1 = unit(cross(&u, &[0.3, 0.7, -0.2]));
            let t2 = cross(&u, &t1);
            for t in [t1, t2] {
                let h = 1e-5;
                let step = |s: f64| {
                    let p = [x[0] + s * t[0], x[1] + s * t[1], x[2] + s * t[2]];
                    let q = unit(p);
                    b.values(&[r * q[0], r * q[1], r * q[2]])
                };
                let (fp, fm) = (step(h), step(-h));
                for (k, g) in grads.iter().enumerate() {
                    let fd = (fp[k] - fm[k]) / (2.0 * h);
                    let an = g[0] * t[0] + g[1] * t[1] + g[2] * t[2];
                    prop_assert!((fd - an).abs() < 1e-6, "mode {k}: {fd} vs {an}");
                }
            }
        }

        #[test]
        fn noise_fields_are_tangent(v in proptest::array::uniform3(-1.0..1.0f64)) {
            prop_assume!(norm(&v) > 0.1);
            let u = unit(v);
            let x = [2.0 * u[0], 2.0 * u[1], 2.0 * u[2]];
            for f in HarmonicBasis::new(2.0, 3).unwrap().noise_fields(&x) {
                prop_assert!((f[0] * x[0] + f[1] * x[1] + f[2] * x[2]).abs() < 1e-12);
            }
        }
    }
}
