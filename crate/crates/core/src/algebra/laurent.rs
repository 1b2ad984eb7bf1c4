use crate::{Error, Real, Result};
use num_complex::Complex;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Center<T> {
    Point(T),
    Infinity,
}

/// Truncated Laurent series in the local parameter `u = z - c` (or `u = 1/z`
/// at infinity). Coefficients are stored densely from `order_min` up to the
/// truncation order; anything beyond is unknown, not zero.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentSeries<T> {
    center: Center<T>,
    order_min: i32,
    coeffs: Vec<T>,
}

impl<T: Real> LaurentSeries<T> {
    /// `coeffs[j]` multiplies `u^(order_min + j)`; known through the last entry.
    pub fn new(center: Center<T>, order_min: i32, coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least one known coefficient");
        LaurentSeries { center, order_min, coeffs }
    }

    /// Series known to be exactly zero through `trunc` (in `u`).
    pub fn zero(center: Center<T>, trunc: i32) -> Self {
        LaurentSeries { center, order_min: trunc, coeffs: vec![T::zero()] }
    }

    pub fn constant(center: Center<T>, c: T, trunc: i32) -> Self {
        if trunc < 0 {
            return Self::zero(center, trunc);
        }
        let mut coeffs = vec![T::zero(); trunc as usize + 1];
        coeffs[0] = c;
        LaurentSeries { center, order_min: 0, coeffs }
    }

    /// `u^k` known through `trunc`.
    pub fn monomial(center: Center<T>, k: i32, trunc: i32) -> Self {
        if trunc < k {
            return Self::zero(center, trunc);
        }
        let mut coeffs = vec![T::zero(); (trunc - k) as usize + 1];
        coeffs[0] = T::one();
        LaurentSeries { center, order_min: k, coeffs }
    }

    pub fn center(&self) -> Center<T> {
        self.center
    }

    pub fn order_min(&self) -> i32 {
        self.order_min
    }

    /// Highest known power of the local parameter `u`.
    pub fn trunc_u(&self) -> i32 {
        self.order_min + self.coeffs.len() as i32 - 1
    }

    /// Truncation order in powers of `z` (at infinity: the lowest known power).
    pub fn truncation_order(&self) -> i32 {
        match self.center {
            Center::Point(_) => self.trunc_u(),
            Center::Infinity => -self.trunc_u(),
        }
    }

    pub fn coeff_u(&self, k: i32) -> Result<T> {
        if k > self.trunc_u() {
            return Err(Error::InsufficientTruncation { needed: k, have: self.trunc_u() });
        }
        if k < self.order_min {
            return Ok(T::zero());
        }
        Ok(self.coeffs[(k - self.order_min) as usize])
    }

    /// Coefficient of `(z-c)^e`, or of `z^e` at infinity.
    pub fn coeff(&self, e: i32) -> Result<T> {
        match self.center {
            Center::Point(_) => self.coeff_u(e),
            Center::Infinity => self.coeff_u(-e),
        }
    }

    /// Residue of `f dz`. At infinity this is minus the `z^{-1}` coefficient.
    pub fn residue(&self) -> Result<T> {
        match self.center {
            Center::Point(_) => self.coeff_u(-1),
            Center::Infinity => Ok(-self.coeff_u(1)?),
        }
    }

    /// Lowest order whose coefficient exceeds `tol` times the largest one.
    pub fn valuation(&self, tol: T) -> Option<i32> {
        let scale = self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.abs()));
        if scale == T::zero() {
            return None;
        }
        self.coeffs
            .iter()
            .position(|c| c.abs() > tol * scale)
            .map(|j| self.order_min + j as i32)
    }

    /// Drops leading coefficients that vanish exactly.
    fn trimmed(&self) -> Self {
        match self.coeffs.iter().position(|c| *c != T::zero()) {
            Some(0) | None => self.clone(),
            Some(j) => LaurentSeries {
                center: self.center,
                order_min: self.order_min + j as i32,
                coeffs: self.coeffs[j..].to_vec(),
            },
        }
    }

    /// Forces the coefficients below `order` to zero and drops them; used when
    /// the leading zeros are known analytically but carry rounding noise.
    pub fn with_valuation(&self, order: i32) -> Self {
        if order <= self.order_min {
            return self.clone();
        }
        if order > self.trunc_u() {
            return Self::zero(self.center, self.trunc_u());
        }
        LaurentSeries {
            center: self.center,
            order_min: order,
            coeffs: self.coeffs[(order - self.order_min) as usize..].to_vec(),
        }
    }

    /// Keeps only coefficients through `trunc`.
    pub fn truncate(&self, trunc: i32) -> Self {
        if trunc >= self.trunc_u() {
            return self.clone();
        }
        if trunc < self.order_min {
            return Self::zero(self.center, trunc);
        }
        LaurentSeries {
            center: self.center,
            order_min: self.order_min,
            coeffs: self.coeffs[..=(trunc - self.order_min) as usize].to_vec(),
        }
    }

    fn same_center(&self, other: &Self) -> Result<()> {
        if self.center == other.center {
            Ok(())
        } else {
            Err(Error::CenterMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_center(other)?;
        let lo = self.order_min.min(other.order_min);
        let hi = self.trunc_u().min(other.trunc_u());
        if hi < lo {
            return Ok(Self::zero(self.center, hi));
        }
        let coeffs = (lo..=hi)
            .map(|k| self.coeff_u(k).unwrap() + other.coeff_u(k).unwrap())
            .collect();
        Ok(LaurentSeries { center: self.center, order_min: lo, coeffs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-T::one()))
    }

    pub fn scale(&self, c: T) -> Self {
        LaurentSeries {
            center: self.center,
            order_min: self.order_min,
            coeffs: self.coeffs.iter().map(|a| *a * c).collect(),
        }
    }

    /// Multiplies by `u^k`.
    pub fn shift(&self, k: i32) -> Self {
        LaurentSeries { center: self.center, order_min: self.order_min + k, coeffs: self.coeffs.clone() }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_center(other)?;
        let a = self.trimmed();
        let b = other.trimmed();
        let lo = a.order_min + b.order_min;
        let hi = (a.trunc_u() + b.order_min).min(b.trunc_u() + a.order_min);
        if hi < lo {
            return Ok(Self::zero(self.center, hi));
        }
        let len = (hi - lo + 1) as usize;
        let mut coeffs = vec![T::zero(); len];
        for (i, ai) in a.coeffs.iter().enumerate().take(len) {
            if *ai == T::zero() {
                continue;
            }
            for (j, bj) in b.coeffs.iter().enumerate().take(len - i) {
                coeffs[i + j] = coeffs[i + j] + *ai * *bj;
            }
        }
        Ok(LaurentSeries { center: self.center, order_min: lo, coeffs })
    }

    /// Multiplicative inverse. Leading zeros of the operand must be exact;
    /// use [`with_valuation`](Self::with_valuation) to strip analytic zeros first.
    pub fn recip(&self) -> Result<Self> {
        let a = self.trimmed();
        if a.coeffs[0] == T::zero() {
            return Err(Error::ZeroDivision);
        }
        let n = a.coeffs.len();
        let mut inv = vec![T::zero(); n];
        inv[0] = T::one() / a.coeffs[0];
        for k in 1..n {
            let mut s = T::zero();
            for j in 1..=k {
                s = s + a.coeffs[j] * inv[k - j];
            }
            inv[k] = -s * inv[0];
        }
        Ok(LaurentSeries { center: a.center, order_min: -a.order_min, coeffs: inv })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.same_center(other)?;
        self.mul(&other.recip()?)
    }

    /// Derivative with respect to `u`.
    pub fn deriv_u(&self) -> Self {
        let coeffs: Vec<T> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| *c * T::from_i32(self.order_min + j as i32).unwrap())
            .collect();
        LaurentSeries { center: self.center, order_min: self.order_min - 1, coeffs }
    }

    /// Term-by-term primitive in `u` vanishing at `u = 0`.
    pub fn integrate_u(&self) -> Result<Self> {
        if self.coeff_u(-1).map(|c| c != T::zero()).unwrap_or(false) {
            return Err(Error::OutsideBasis("primitive of a u^-1 term is logarithmic".into()));
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let k = self.order_min + j as i32;
                if k == -1 {
                    T::zero()
                } else {
                    *c / T::from_i32(k + 1).unwrap()
                }
            })
            .collect();
        Ok(LaurentSeries { center: self.center, order_min: self.order_min + 1, coeffs })
    }

    /// Sum of the known terms at `z`.
    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        let u = match self.center {
            Center::Point(c) => z - Complex::new(c, T::zero()),
            Center::Infinity => z.inv(),
        };
        let mut acc = Complex::new(T::zero(), T::zero());
        let mut p = u.powi(self.order_min);
        for c in &self.coeffs {
            acc = acc + p * *c;
            p = p * u;
        }
        acc
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coeffs
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.abs()))
    }
}
