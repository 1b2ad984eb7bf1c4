//! The bidifferential ω₀,₂ from the Mittag-Leffler linear system.

use crate::algebra::{binom, inverse, kernel_dimension, LaurentPoly, Matrix};
use crate::curve::SpectralData;
use crate::model::{find_interaction, interactions, ModelSpec};
use crate::{Error, Real, Result};
use num_complex::Complex;
use serde::Serialize;

/// Relative pivot threshold for the Hypothesis-2 rank test.
pub const KERNEL_TOL: f64 = 1e-9;

/// Support symmetry tolerance for Hypothesis 1(ii).
pub const SYMMETRY_TOL: f64 = 1e-10;

/// `c_{k,r} = ((2r - k)/k) C(k, r)`.
pub fn c_coeff<T: Real>(k: u32, r: u32) -> T {
    T::from_i64(2 * r as i64 - k as i64).unwrap() / T::from_u32(k).unwrap() * binom::<T>(k, r)
}

/// `ν_{k,m}` for `1 ≤ k, m ≤ dim`.
pub fn nu_table<T: Real>(spec: &ModelSpec, dim: usize) -> Result<Matrix<T>> {
    let polys = interactions(spec)?;
    let mut nu = Matrix::zeros(dim, dim);
    if let Some(t02) = find_interaction(&polys, 0, 2) {
        for (e, c) in t02.monomials() {
            let (k, m) = (e[0] as usize, e[1] as usize);
            if k > dim || m > dim {
                return Err(Error::InvalidModel(format!("cylinder monomial ξ^{k} η^{m} exceeds d-1 = {dim}")));
            }
            nu[(k - 1, m - 1)] = T::lit(c);
        }
    }
    Ok(nu)
}

/// Size of the linear system: `d - 1`.
pub fn system_dim(spec: &ModelSpec) -> usize {
    (spec.d as usize).saturating_sub(1).max(1)
}

/// `A_{ik} = c_{k,(k-i)/2}` and `B_{kj} = k Σ_m ν_{k,m} γ^{k+m} C(m, (m-j)/2)`, so that
/// `a_{-i-1} = i/ζ^{i+1} - (A b)_i` and `b = B x`.
fn assemble<T: Real>(nu: &Matrix<T>, gamma: T) -> (Matrix<T>, Matrix<T>) {
    let n = nu.rows;
    let mut a = Matrix::zeros(n, n);
    let mut b = Matrix::zeros(n, n);
    for i in 1..=n {
        for k in i..=n {
            if (k - i) % 2 == 0 {
                a[(i - 1, k - 1)] = c_coeff::<T>(k as u32, ((k - i) / 2) as u32);
            }
        }
    }
    for k in 1..=n {
        for j in 1..=n {
            let mut acc = T::zero();
            for m in j..=n {
                if (m - j) % 2 == 0 {
                    acc = acc
                        + nu[(k - 1, m - 1)] * gamma.powi((k + m) as i32) * binom::<T>(m as u32, ((m - j) / 2) as u32);
                }
            }
            b[(k - 1, j - 1)] = acc * T::from_usize(k).unwrap();
        }
    }
    (a, b)
}

/// The matrix `C = I + A B` of the system `Σ_j C_ij x_j = i/ζ^{i+1}`.
pub fn build_c<T: Real>(spec: &ModelSpec, b: T) -> Result<Matrix<T>> {
    let nu = nu_table(spec, system_dim(spec))?;
    let (a, bm) = assemble(&nu, b / T::lit(2.0));
    let mut c = a.mul(&bm);
    for i in 0..c.rows {
        c[(i, i)] = c[(i, i)] + T::one();
    }
    Ok(c)
}

/// Kernel dimension of C; 0 means Hypothesis 2 holds.
pub fn check_hypothesis2<T: Real>(c: &Matrix<T>) -> usize {
    kernel_dimension(c, T::lit(KERNEL_TOL))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Omega02<T> {
    pub b: T,
    pub gamma: T,
    pub c: Matrix<T>,
    pub c_inverse: Matrix<T>,
    pub nu: Matrix<T>,
    /// `A` and `B` of [`build_c`].
    pub a_mat: Matrix<T>,
    pub b_mat: Matrix<T>,
    /// `F = 1/(ζz-1)² + Σ_{p,q} s_pq z^{-p-1} ζ^{-q-1} - B̂₀`-free part: `S = (C⁻¹ - I) diag(1..)`.
    pub s: Matrix<T>,
}

pub fn solve_f<T: Real>(spec: &ModelSpec, curve: &SpectralData<T>) -> Result<Omega02<T>> {
    if !curve.is_symmetric(T::lit(SYMMETRY_TOL) * (T::one() + curve.b.abs())) {
        return Err(Error::AsymmetricSupport(curve.a.to_f64().unwrap(), curve.b.to_f64().unwrap()));
    }
    let dim = system_dim(spec);
    let nu = nu_table(spec, dim)?;
    let gamma = curve.gamma;
    let (a_mat, b_mat) = assemble(&nu, gamma);
    let mut c = a_mat.mul(&b_mat);
    for i in 0..dim {
        c[(i, i)] = c[(i, i)] + T::one();
    }
    let kd = check_hypothesis2(&c);
    if kd > 0 {
        return Err(Error::Hypothesis2(kd));
    }
    let c_inverse = inverse(&c)?;
    let mut s = c_inverse.clone();
    for p in 0..dim {
        s[(p, p)] = s[(p, p)] - T::one();
        for q in 0..dim {
            s[(p, q)] = s[(p, q)] * T::from_usize(q + 1).unwrap();
        }
    }
    let om = Omega02 { b: curve.b, gamma, c, c_inverse, nu, a_mat, b_mat, s };
    om.assert_rhs_identity()?;
    Ok(om)
}

fn cz<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

impl<T: Real> Omega02<T> {
    pub fn dim(&self) -> usize {
        self.c.rows
    }

    pub fn x(&self, z: Complex<T>) -> Complex<T> {
        (z + z.inv()) * self.gamma
    }

    pub fn dx(&self, z: Complex<T>) -> Complex<T> {
        (cz(T::one()) - (z * z).inv()) * self.gamma
    }

    /// Unknowns `x_i(ζ) = a_{-i-1}(ζ)`.
    pub fn fourier_unknowns(&self, zeta: Complex<T>) -> Vec<Complex<T>> {
        let n = self.dim();
        let rhs: Vec<Complex<T>> = (1..=n).map(|j| zeta.powi(-(j as i32) - 1) * T::from_usize(j).unwrap()).collect();
        (0..n).map(|i| (0..n).fold(cz(T::zero()), |acc, j| acc + rhs[j] * self.c_inverse[(i, j)])).collect()
    }

    /// `b_k(ζ) = Σ_j B_kj x_j(ζ)`.
    pub fn b_coeffs(&self, zeta: Complex<T>) -> Vec<Complex<T>> {
        let x = self.fourier_unknowns(zeta);
        let n = self.dim();
        (0..n).map(|k| (0..n).fold(cz(T::zero()), |acc, j| acc + x[j] * self.b_mat[(k, j)])).collect()
    }

    pub fn q1(&self, z: Complex<T>, zeta: Complex<T>) -> Complex<T> {
        let d = zeta * z - T::one();
        (d * d).inv()
    }

    pub fn q2(&self, z: Complex<T>, zeta: Complex<T>) -> Complex<T> {
        let b = self.b_coeffs(zeta);
        let mut acc = cz(T::zero());
        for (k1, bk) in b.iter().enumerate() {
            let k = k1 as u32 + 1;
            for r in 0..=(k - 1) / 2 {
                acc = acc - *bk * z.powi(2 * r as i32 - k as i32 - 1) * c_coeff::<T>(k, r);
            }
        }
        acc
    }

    /// `F(z, ζ) = Q₁ + Q₂`.
    pub fn f(&self, z: Complex<T>, zeta: Complex<T>) -> Complex<T> {
        self.q1(z, zeta) + self.q2(z, zeta)
    }

    pub fn bhat0(&self, z: Complex<T>, zeta: Complex<T>) -> Complex<T> {
        let d = self.x(z) - self.x(zeta);
        self.dx(z) * self.dx(zeta) / (d * d)
    }

    /// Coefficient of `dz dζ` in ω₀,₂.
    pub fn eval(&self, z: Complex<T>, zeta: Complex<T>) -> Result<Complex<T>> {
        if (z - zeta).norm() <= T::epsilon() * (T::one() + z.norm()) {
            return Err(Error::Diagonal);
        }
        Ok(self.f(z, zeta) + self.bhat0(z, zeta))
    }

    /// Same density from the closed form `1/(z-ζ)² + Σ s_pq z^{-p-1} ζ^{-q-1}`.
    pub fn eval_closed(&self, z: Complex<T>, zeta: Complex<T>) -> Complex<T> {
        let d = z - zeta;
        let mut acc = (d * d).inv();
        for p in 0..self.dim() {
            for q in 0..self.dim() {
                acc = acc + z.powi(-(p as i32) - 2) * zeta.powi(-(q as i32) - 2) * self.s[(p, q)];
            }
        }
        acc
    }

    /// `b_k(ζ)` from its defining contour integral of the assembled F:
    /// the residues give `a_{-p-1} = p/ζ^{p+1} - (A b)_p` for `p ≥ 1` and nothing for `p ≤ 0`.
    pub fn b_coeffs_from_f(&self, zeta: Complex<T>) -> Vec<Complex<T>> {
        let n = self.dim();
        let b = self.b_coeffs(zeta);
        let fourier: Vec<Complex<T>> = (0..n)
            .map(|p| {
                let ab = (0..n).fold(cz(T::zero()), |acc, k| acc + b[k] * self.a_mat[(p, k)]);
                zeta.powi(-(p as i32) - 2) * T::from_usize(p + 1).unwrap() - ab
            })
            .collect();
        (0..n).map(|k| (0..n).fold(cz(T::zero()), |acc, j| acc + fourier[j] * self.b_mat[(k, j)])).collect()
    }

    /// Left side of the functional equation, which must vanish. The `b_k` in the
    /// correction term come from the contour integrals of F itself.
    pub fn functional_defect(&self, z: Complex<T>, zeta: Complex<T>) -> Complex<T> {
        let zi = z.inv();
        let w = z + zi;
        let b = self.b_coeffs_from_f(zeta);
        let mut sum = cz(T::zero());
        for (k1, bk) in b.iter().enumerate() {
            sum = sum + *bk * w.powi(k1 as i32);
        }
        self.f(z, zeta) - self.f(zi, zeta) * zi * zi + sum * (cz(T::one()) - zi * zi) + self.bhat0(z, zeta)
    }

    pub fn functional_residual(&self, points: &[(Complex<T>, Complex<T>)]) -> T {
        points.iter().map(|(z, zeta)| self.functional_defect(*z, *zeta).norm()).fold(T::zero(), |a, b| a.max(b))
    }

    /// `Q_{0;(ℓ₁,ℓ₂)} = ∮∮ x(z)^{ℓ₁} x(ζ)^{ℓ₂} F(z,ζ) dz dζ` over large circles.
    pub fn stuffed_map(&self, l1: u32, l2: u32) -> T {
        let x = LaurentPoly { min_exp: -1, coeffs: vec![self.gamma, T::zero(), self.gamma] };
        let x1 = x.pow(l1);
        let x2 = x.pow(l2);
        let mut acc = T::zero();
        for n in 0..=l1.min(l2) as i32 {
            acc = acc + T::from_i32(n).unwrap() * x1.coeff(n) * x2.coeff(n);
        }
        for p in 0..self.dim() {
            for q in 0..self.dim() {
                acc = acc + self.s[(p, q)] * x1.coeff(p as i32 + 1) * x2.coeff(q as i32 + 1);
            }
        }
        acc
    }

    /// Asserts `(1/2πi)∮_γ z^i Q₁ dz = i/ζ^{i+1}` by quadrature at a sample ζ.
    fn assert_rhs_identity(&self) -> Result<()> {
        let zeta = cz(T::lit(2.5));
        let radius = T::one() + T::lit(0.1);
        let n = 256;
        for i in 1..=self.dim() {
            let mut acc = cz(T::zero());
            for j in 0..n {
                let th = T::lit(2.0) * T::PI() * T::from_usize(j).unwrap() / T::from_usize(n).unwrap();
                let z = Complex::from_polar(radius, th);
                // dz/(2πi) = z dθ/(2π)
                acc = acc + self.q1(z, zeta) * z.powi(i as i32) * z;
            }
            acc = acc / T::from_usize(n).unwrap();
            let want = zeta.powi(-(i as i32) - 1) * T::from_usize(i).unwrap();
            if (acc - want).norm() > T::lit(1e-10) {
                return Err(Error::Missing(format!("right-hand side identity failed at i = {i}")));
            }
        }
        Ok(())
    }
}

/// Finds a sign change of `f` on `[lo, hi]` by scanning `n` cells, then bisects.
pub fn scan_root<F: FnMut(f64) -> Option<f64>>(mut f: F, lo: f64, hi: f64, n: usize, tol: f64) -> Option<f64> {
    let mut prev: Option<(f64, f64)> = None;
    for j in 0..=n {
        let x = lo + (hi - lo) * j as f64 / n as f64;
        let Some(v) = f(x) else {
            prev = None;
            continue;
        };
        if let Some((px, pv)) = prev {
            if pv.signum() != v.signum() {
                let (mut a, mut fa, mut b) = (px, pv, x);
                while (b - a).abs() > tol {
                    let m = 0.5 * (a + b);
                    let fm = f(m)?;
                    if fm.signum() == fa.signum() {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                return Some(0.5 * (a + b));
            }
        }
        prev = Some((x, v));
    }
    None
}
