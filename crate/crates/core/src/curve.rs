//! One-cut spectral curve: endpoints, moments and the Joukowski-parametrized W₀,₁.

use crate::algebra::{poly::poly_eval_real, LaurentPoly};
use crate::model::{find_interaction, interactions, ModelSpec};
use crate::{Error, Real, Result};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// Solver settings for [`solve_one_cut`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub damping: f64,
    pub endpoint_tol: f64,
    pub moment_tol: f64,
    pub max_iter: usize,
    /// Optional starting point `(center, gamma, moments m_1..)` for continuation runs.
    pub initial: Option<InitialGuess>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialGuess {
    pub center: f64,
    pub gamma: f64,
    pub moments: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { damping: 0.5, endpoint_tol: 1e-12, moment_tol: 1e-11, max_iter: 500, initial: None }
    }
}

/// Solution of the planar problem.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralData<T> {
    pub t: T,
    pub a: T,
    pub b: T,
    pub center: T,
    pub gamma: T,
    /// `m_ℓ` for `ℓ = 0..`, with `m_0 = t`.
    pub moments: Vec<T>,
    /// `W₀,₁(x(z)) = Σ_{k≥1} u_k z^{-k}`; `u[0] = 0`.
    pub u: Vec<T>,
    /// Ascending coefficients of Q and P.
    pub q_coeffs: Vec<T>,
    pub p_coeffs: Vec<T>,
    pub residual: T,
    pub iterations: usize,
}

/// `Q(ξ) = ∂T_{0,1}(ξ) + Σ c_{ab} a ξ^{a-1} m_b` over the monomials of `T_{0,2}`.
pub fn effective_q<T: Real>(spec: &ModelSpec, moments: &[T]) -> Result<Vec<T>> {
    let polys = interactions(spec)?;
    let mut q: Vec<T> = vec![];
    let mut add = |e: usize, c: T| {
        if q.len() <= e {
            q.resize(e + 1, T::zero());
        }
        q[e] = q[e] + c;
    };
    if let Some(t01) = find_interaction(&polys, 0, 1) {
        for (e, c) in t01.monomials() {
            add(e[0] as usize - 1, T::lit(c * e[0] as f64));
        }
    }
    if let Some(t02) = find_interaction(&polys, 0, 2) {
        for (e, c) in t02.monomials() {
            let (a, b) = (e[0] as usize, e[1] as usize);
            let m = *moments.get(b).ok_or_else(|| Error::Missing(format!("moment m_{b}")))?;
            add(a - 1, T::lit(c * a as f64) * m);
        }
    }
    Ok(q)
}

/// `P(x) = -Σ_j q_j Σ_{n<j} m_{j-1-n} x^n` (the finite difference quotient of Q against W₀,₁).
pub fn effective_p<T: Real>(q: &[T], moments: &[T]) -> Result<Vec<T>> {
    let mut p = vec![T::zero(); q.len().saturating_sub(1).max(1)];
    for (j, qj) in q.iter().enumerate().skip(1) {
        for n in 0..j {
            let m = *moments.get(j - 1 - n).ok_or_else(|| Error::Missing(format!("moment m_{}", j - 1 - n)))?;
            p[n] = p[n] - *qj * m;
        }
    }
    Ok(p)
}

/// Laurent polynomial of `p(c + γ(z + 1/z))`.
pub fn compose_joukowski<T: Real>(p: &[T], c: T, gamma: T) -> LaurentPoly<T> {
    let x = LaurentPoly { min_exp: -1, coeffs: vec![gamma, c, gamma] };
    let mut acc = LaurentPoly::zero();
    for coef in p.iter().rev() {
        acc = acc.mul(&x).add(&LaurentPoly::monomial(0, *coef));
    }
    acc
}

fn deriv_poly<T: Real>(p: &[T]) -> Vec<T> {
    crate::algebra::poly::poly_deriv(p)
}

/// Largest moment index that Q can depend on.
fn moments_needed(spec: &ModelSpec) -> Result<usize> {
    let polys = interactions(spec)?;
    Ok(find_interaction(&polys, 0, 2)
        .map(|p| p.coeffs.keys().flat_map(|k| k.iter().copied()).max().unwrap_or(0) as usize)
        .unwrap_or(0)
        .max(spec.d.saturating_sub(1) as usize))
}

/// Newton on `(c, γ)` for `q_0 = 0`, `q_1 = -t/γ`.
fn solve_endpoints<T: Real>(q: &[T], t: T, mut c: T, mut g: T, tol: T) -> Result<(T, T)> {
    let two = T::lit(2.0);
    let zp = LaurentPoly { min_exp: -1, coeffs: vec![T::one(), T::zero(), T::one()] };
    let dq = deriv_poly(q);
    for _ in 0..200 {
        let qz = compose_joukowski(q, c, g);
        let f1 = qz.coeff(0);
        let f2 = qz.coeff(1) + t / g;
        let dqz = compose_joukowski(&dq, c, g);
        let dqz_g = dqz.mul(&zp);
        let (j11, j12) = (dqz.coeff(0), dqz_g.coeff(0));
        let (j21, j22) = (dqz.coeff(1), dqz_g.coeff(1) - t / (g * g));
        let det = j11 * j22 - j12 * j21;
        if det.abs() < T::lit(1e-300) {
            return Err(Error::NoConvergence(0));
        }
        let mut dc = (f1 * j22 - f2 * j12) / det;
        let mut dg = (j11 * f2 - j21 * f1) / det;
        // keep γ positive
        while g - dg <= T::zero() {
            dc = dc / two;
            dg = dg / two;
        }
        c = c - dc;
        g = g - dg;
        if dc.abs().max(dg.abs()) <= tol * (T::one() + g.abs() + c.abs()) {
            return Ok((c, g));
        }
    }
    Err(Error::NoConvergence(200))
}

fn gaussian_moments<T: Real>(t: T, upto: usize) -> Vec<T> {
    (0..=upto)
        .map(|l| {
            if l % 2 == 1 {
                T::zero()
            } else {
                let k = (l / 2) as u32;
                // Catalan number times t^{k+1}
                let cat = crate::algebra::binom::<T>(2 * k, k) / T::from_u32(k + 1).unwrap();
                cat * t.powi(k as i32 + 1)
            }
        })
        .collect()
}

/// Solves the self-consistent one-cut problem.
pub fn solve_one_cut<T: Real>(spec: &ModelSpec, cfg: &SolverConfig) -> Result<SpectralData<T>> {
    spec.validate()?;
    let t = T::lit(spec.t);
    let nm = moments_needed(spec)?;
    let (mut c, mut g, mut m) = match &cfg.initial {
        Some(ig) => {
            let mut m = vec![t];
            m.extend(ig.moments.iter().map(|x| T::lit(*x)));
            m.resize(nm + 1, T::zero());
            (T::lit(ig.center), T::lit(ig.gamma), m)
        }
        None => (T::zero(), t.sqrt(), gaussian_moments(t, nm)),
    };
    let damping = T::lit(cfg.damping);
    for iter in 1..=cfg.max_iter {
        let q = effective_q(spec, &m)?;
        let (c1, g1) = solve_endpoints(&q, t, c, g, T::lit(cfg.endpoint_tol))?;
        c = c1;
        g = g1;
        let u = u_coeffs(&q, c, g);
        let fresh: Vec<T> = (0..=nm).map(|l| moment_from(&u, c, g, l as u32)).collect();
        let delta = fresh.iter().zip(&m).fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs()));
        if delta <= T::lit(cfg.moment_tol) {
            let m = fresh;
            let q = effective_q(spec, &m)?;
            let (c, g) = solve_endpoints(&q, t, c, g, T::lit(cfg.endpoint_tol))?;
            let u = u_coeffs(&q, c, g);
            let p = effective_p(&q, &m)?;
            let mut data = SpectralData {
                t,
                a: c - g - g,
                b: c + g + g,
                center: c,
                gamma: g,
                moments: m,
                u,
                q_coeffs: q,
                p_coeffs: p,
                residual: T::zero(),
                iterations: iter,
            };
            data.residual = quadratic_residual(&data, 50);
            check_positivity(&data)?;
            return Ok(data);
        }
        for (mi, fi) in m.iter_mut().zip(&fresh) {
            *mi = *mi + damping * (*fi - *mi);
        }
    }
    Err(Error::NoConvergence(cfg.max_iter))
}

fn u_coeffs<T: Real>(q: &[T], c: T, g: T) -> Vec<T> {
    let qz = compose_joukowski(q, c, g);
    let top = qz.max_exp().max(1) as usize;
    let mut u = vec![T::zero(); top + 1];
    for (k, uk) in u.iter_mut().enumerate().skip(1) {
        *uk = -qz.coeff(k as i32);
    }
    u
}

fn moment_from<T: Real>(u: &[T], c: T, g: T, l: u32) -> T {
    let w = LaurentPoly { min_exp: -(u.len() as i32 - 1), coeffs: u.iter().rev().copied().collect() };
    let x = LaurentPoly { min_exp: -1, coeffs: vec![g, c, g] };
    x.pow(l).mul(&w).mul(&x.deriv()).coeff(-1)
}

fn check_positivity<T: Real>(data: &SpectralData<T>) -> Result<()> {
    let n = 400;
    for j in 1..n {
        let theta = T::PI() * T::from_usize(j).unwrap() / T::from_usize(n).unwrap();
        let phi = density_at_angle(data, theta);
        if phi < T::lit(-1e-10) {
            return Err(Error::NegativeDensity(phi.to_f64().unwrap()));
        }
    }
    Ok(())
}

fn density_at_angle<T: Real>(data: &SpectralData<T>, theta: T) -> T {
    data.u.iter().enumerate().skip(1).fold(T::zero(), |acc, (k, uk)| acc + *uk * (T::from_usize(k).unwrap() * theta).sin())
        / T::PI()
}

impl<T: Real> SpectralData<T> {
    pub fn x_poly(&self) -> LaurentPoly<T> {
        LaurentPoly { min_exp: -1, coeffs: vec![self.gamma, self.center, self.gamma] }
    }

    /// `W₀,₁(x(z))` as a Laurent polynomial in z.
    pub fn w_poly(&self) -> LaurentPoly<T> {
        LaurentPoly { min_exp: -(self.u.len() as i32 - 1), coeffs: self.u.iter().rev().copied().collect() }
    }

    /// `m_ℓ = (1/2πi)∮ ξ^ℓ W₀,₁(ξ) dξ`, any ℓ ≥ 0.
    pub fn moment(&self, l: u32) -> T {
        moment_from(&self.u, self.center, self.gamma, l)
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.center.abs() <= tol
    }

    pub fn joukowski(&self, z: Complex<T>) -> Complex<T> {
        (z + z.inv()) * self.gamma + self.center
    }

    /// Exterior (`|z| > 1`) or interior preimage of `x`.
    pub fn inverse_joukowski(&self, x: Complex<T>, exterior: bool) -> Result<Complex<T>> {
        let w = (x - self.center) / self.gamma;
        let disc = (w * w - T::lit(4.0)).sqrt();
        let z1 = (w + disc) / T::lit(2.0);
        let z2 = (w - disc) / T::lit(2.0);
        let (big, small) = if z1.norm() >= z2.norm() { (z1, z2) } else { (z2, z1) };
        if (big.norm() - T::one()).abs() <= T::lit(1e-12) {
            return Err(Error::OnCut);
        }
        Ok(if exterior { big } else { small })
    }

    /// `W₀,₁` at a point off the cut.
    pub fn w01(&self, x: Complex<T>) -> Result<Complex<T>> {
        let z = self.inverse_joukowski(x, true)?;
        Ok(self.w_poly().eval(z))
    }

    /// `φ(s)` on the support; zero at the endpoints.
    pub fn density(&self, s: T) -> Result<T> {
        if s < self.a || s > self.b {
            return Err(Error::OutsideSupport(s.to_f64().unwrap()));
        }
        let cos = ((s - self.center) / (self.gamma + self.gamma)).max(-T::one()).min(T::one());
        Ok(density_at_angle(self, cos.acos()))
    }

    /// `∫φ` by the trapezoid rule in the angle variable.
    pub fn total_mass(&self, n: usize) -> T {
        let h = T::PI() / T::from_usize(n).unwrap();
        let two_g = self.gamma + self.gamma;
        (1..n)
            .map(|j| {
                let th = h * T::from_usize(j).unwrap();
                density_at_angle(self, th) * two_g * th.sin()
            })
            .fold(T::zero(), |a, b| a + b)
            * h
    }

    /// Max of `|W² + QW + P|` over probe points `x(z)` with `|z| ∈ [1.2, 3]`.
    pub fn quadratic_residual_at(&self, z: Complex<T>) -> T {
        let x = self.joukowski(z);
        let w = self.w_poly().eval(z);
        let ev = |p: &[T]| p.iter().rev().fold(Complex::new(T::zero(), T::zero()), |acc, c| acc * x + *c);
        (w * w + ev(&self.q_coeffs) * w + ev(&self.p_coeffs)).norm()
    }

    pub fn q_at(&self, x: T) -> T {
        poly_eval_real(&self.q_coeffs, x)
    }
}

pub fn quadratic_residual<T: Real>(data: &SpectralData<T>, probes: usize) -> T {
    (0..probes)
        .map(|j| {
            let f = T::from_usize(j).unwrap() / T::from_usize(probes).unwrap();
            let r = T::lit(1.2) + T::lit(1.8) * f;
            let th = T::lit(2.0) * T::PI() * f * T::lit(7.0);
            data.quadratic_residual_at(Complex::from_polar(r, th))
        })
        .fold(T::zero(), |a, b| a.max(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_semicircle() {
        let d: SpectralData<f64> = solve_one_cut(&ModelSpec::plain(1.0), &SolverConfig::default()).unwrap();
        assert!((d.b - 2.0).abs() < 1e-12 && (d.a + 2.0).abs() < 1e-12);
        assert!((d.moment(2) - 1.0).abs() < 1e-12);
        assert!((d.moment(4) - 2.0).abs() < 1e-12);
        assert!((d.moment(6) - 5.0).abs() < 1e-12);
        assert!((d.density(0.0).unwrap() - 1.0 / std::f64::consts::PI).abs() < 1e-12);
        assert!((d.total_mass(2000) - 1.0).abs() < 1e-10);
        assert!(d.residual < 1e-12);
    }

    #[test]
    fn quartic_q() {
        let spec = ModelSpec::plain(1.0).with_alpha(4, 0.3);
        let q = effective_q::<f64>(&spec, &[1.0]).unwrap();
        assert_eq!(q, vec![0.0, -1.0, 0.0, 0.3]);
    }

    #[test]
    fn cylinder_q_vanishes_when_symmetric() {
        let q = effective_q::<f64>(&ModelSpec::gaussian(0.5), &[0.5, 0.0]).unwrap();
        assert_eq!(q.iter().skip(2).all(|c| *c == 0.0), true);
        assert_eq!(q[0], 0.0);
        assert_eq!(q[1], -1.0);
    }

    #[test]
    fn inverse_branch() {
        let d: SpectralData<f64> = solve_one_cut(&ModelSpec::plain(1.0), &SolverConfig::default()).unwrap();
        let z = d.inverse_joukowski(Complex::new(10.0, 0.0), true).unwrap();
        assert!((z.re - (10.0 + 96f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((d.joukowski(z) - Complex::new(10.0, 0.0)).norm() < 1e-12);
        assert!(d.inverse_joukowski(Complex::new(0.3, 0.0), true).is_err());
        assert!(d.density(2.5).is_err());
    }
}
