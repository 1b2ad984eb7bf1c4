use super::laurent::{Center, LaurentSeries};
use crate::Real;
use num_complex::Complex;

/// Binomial coefficient for small arguments, exact in f64 up to n = 60.
pub fn binom<T: Real>(n: u32, k: u32) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    T::lit(acc.round())
}

/// Generalized binomial `e (e-1) ... (e-j+1) / j!` for integer `e` of either sign.
pub fn gbinom<T: Real>(e: i32, j: u32) -> T {
    let mut acc = T::one();
    for i in 0..j {
        acc = acc * T::from_i32(e - i as i32).unwrap() / T::from_u32(i + 1).unwrap();
    }
    acc
}

pub fn poly_eval<T: Real>(p: &[T], z: Complex<T>) -> Complex<T> {
    p.iter().rev().fold(Complex::new(T::zero(), T::zero()), |acc, c| acc * z + *c)
}

pub fn poly_eval_real<T: Real>(p: &[T], x: T) -> T {
    p.iter().rev().fold(T::zero(), |acc, c| acc * x + *c)
}

pub fn poly_deriv<T: Real>(p: &[T]) -> Vec<T> {
    p.iter().enumerate().skip(1).map(|(j, c)| *c * T::from_usize(j).unwrap()).collect()
}

pub fn poly_mul<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j] + *x * *y;
        }
    }
    out
}

pub fn poly_add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(T::zero()) + b.get(i).copied().unwrap_or(T::zero()))
        .collect()
}

/// Coefficients of `p(c + u)` in powers of `u`.
pub fn poly_shift<T: Real>(p: &[T], c: T) -> Vec<T> {
    let n = p.len();
    let mut out = vec![T::zero(); n];
    for (k, a) in p.iter().enumerate() {
        let mut cp = T::one();
        for j in (0..=k).rev() {
            out[j] = out[j] + *a * binom::<T>(k as u32, j as u32) * cp;
            cp = cp * c;
        }
    }
    out
}

/// Drops trailing coefficients below `tol` times the largest.
pub fn poly_trim<T: Real>(p: &mut Vec<T>, tol: T) {
    let scale = p.iter().fold(T::zero(), |m, c| m.max(c.abs()));
    while let Some(last) = p.last() {
        if last.abs() <= tol * scale || *last == T::zero() {
            p.pop();
        } else {
            break;
        }
    }
}

/// Finite Laurent polynomial `Σ coeffs[j] z^(min_exp + j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPoly<T> {
    pub min_exp: i32,
    pub coeffs: Vec<T>,
}

impl<T: Real> LaurentPoly<T> {
    pub fn zero() -> Self {
        LaurentPoly { min_exp: 0, coeffs: vec![] }
    }

    pub fn monomial(e: i32, c: T) -> Self {
        LaurentPoly { min_exp: e, coeffs: vec![c] }
    }

    pub fn from_poly(p: &[T]) -> Self {
        LaurentPoly { min_exp: 0, coeffs: p.to_vec() }
    }

    pub fn max_exp(&self) -> i32 {
        self.min_exp + self.coeffs.len() as i32 - 1
    }

    pub fn coeff(&self, e: i32) -> T {
        let j = e - self.min_exp;
        if j < 0 || j >= self.coeffs.len() as i32 {
            T::zero()
        } else {
            self.coeffs[j as usize]
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.coeffs.is_empty() {
            return o.clone();
        }
        if o.coeffs.is_empty() {
            return self.clone();
        }
        let lo = self.min_exp.min(o.min_exp);
        let hi = self.max_exp().max(o.max_exp());
        LaurentPoly { min_exp: lo, coeffs: (lo..=hi).map(|e| self.coeff(e) + o.coeff(e)).collect() }
    }

    pub fn scale(&self, c: T) -> Self {
        LaurentPoly { min_exp: self.min_exp, coeffs: self.coeffs.iter().map(|a| *a * c).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.coeffs.is_empty() || o.coeffs.is_empty() {
            return Self::zero();
        }
        LaurentPoly { min_exp: self.min_exp + o.min_exp, coeffs: poly_mul(&self.coeffs, &o.coeffs) }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = LaurentPoly::monomial(0, T::one());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// `z -> 1/z`.
    pub fn invert(&self) -> Self {
        if self.coeffs.is_empty() {
            return Self::zero();
        }
        let mut c = self.coeffs.clone();
        c.reverse();
        LaurentPoly { min_exp: -self.max_exp(), coeffs: c }
    }

    pub fn deriv(&self) -> Self {
        if self.coeffs.is_empty() {
            return Self::zero();
        }
        LaurentPoly {
            min_exp: self.min_exp - 1,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| *c * T::from_i32(self.min_exp + j as i32).unwrap())
                .collect(),
        }
    }

    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        let mut p = z.powi(self.min_exp);
        for c in &self.coeffs {
            acc = acc + p * *c;
            p = p * z;
        }
        acc
    }

    /// Taylor expansion at a nonzero point `p`, known through `(z-p)^trunc`.
    pub fn expand_at(&self, p: T, trunc: i32) -> LaurentSeries<T> {
        let center = Center::Point(p);
        if trunc < 0 {
            return LaurentSeries::zero(center, trunc);
        }
        let n = trunc as usize + 1;
        let mut out = vec![T::zero(); n];
        for (j, c) in self.coeffs.iter().enumerate() {
            if *c == T::zero() {
                continue;
            }
            let e = self.min_exp + j as i32;
            for (k, o) in out.iter_mut().enumerate() {
                *o = *o + *c * gbinom::<T>(e, k as u32) * p.powi(e - k as i32);
            }
        }
        LaurentSeries::new(center, 0, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_matches_eval() {
        let p: Vec<f64> = vec![1.0, -2.0, 0.5, 3.0];
        let s = poly_shift(&p, 0.7);
        let u = 0.3;
        assert!((poly_eval_real(&s, u) - poly_eval_real(&p, 1.0)).abs() < 1e-13);
    }

    #[test]
    fn laurent_taylor_at_one() {
        // z + 1/z at z = 1: 2 + (z-1)^2 - (z-1)^3 + ...
        let j = LaurentPoly::<f64> { min_exp: -1, coeffs: vec![1.0, 0.0, 1.0] };
        let s = j.expand_at(1.0, 4);
        let want = [2.0, 0.0, 1.0, -1.0, 1.0];
        for (k, w) in want.iter().enumerate() {
            assert!((s.coeff_u(k as i32).unwrap() - w).abs() < 1e-14);
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binom::<f64>(6, 3), 20.0);
        assert_eq!(gbinom::<f64>(-2, 3), -4.0);
    }
}
