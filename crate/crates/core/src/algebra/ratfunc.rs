use super::laurent::{Center, LaurentSeries};
use super::poly::{poly_eval, poly_mul, poly_shift, poly_trim};
use crate::{Error, Real, Result};
use num_complex::Complex;

/// Relative tolerance for dropping coefficients and common factors.
pub const NORMALIZE_TOL: f64 = 1e-13;

/// Ratio of two polynomials in one variable, kept with a monic denominator
/// and no common factor above [`NORMALIZE_TOL`].
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFunction<T> {
    num: Vec<T>,
    den: Vec<T>,
    var: String,
}

fn poly_divrem<T: Real>(a: &[T], b: &[T]) -> (Vec<T>, Vec<T>) {
    let mut r = a.to_vec();
    if a.len() < b.len() {
        return (vec![], r);
    }
    let lead = *b.last().unwrap();
    let mut q = vec![T::zero(); a.len() - b.len() + 1];
    for k in (0..q.len()).rev() {
        let c = r[k + b.len() - 1] / lead;
        q[k] = c;
        for (j, bj) in b.iter().enumerate() {
            r[k + j] = r[k + j] - c * *bj;
        }
    }
    r.truncate(b.len() - 1);
    (q, r)
}

fn poly_gcd<T: Real>(a: &[T], b: &[T], tol: T) -> Vec<T> {
    let scale = a.iter().chain(b.iter()).fold(T::zero(), |m, c| m.max(c.abs()));
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    poly_trim(&mut x, tol);
    poly_trim(&mut y, tol);
    if x.len() < y.len() {
        std::mem::swap(&mut x, &mut y);
    }
    while !y.is_empty() {
        let (_, mut r) = poly_divrem(&x, &y);
        let rs = r.iter().fold(T::zero(), |m, c| m.max(c.abs()));
        if rs <= tol * scale {
            r.clear();
        } else {
            poly_trim(&mut r, tol);
        }
        x = y;
        y = r;
    }
    let lead = *x.last().unwrap_or(&T::one());
    x.iter().map(|c| *c / lead).collect()
}

impl<T: Real> RationalFunction<T> {
    pub fn new(num: Vec<T>, den: Vec<T>, var: &str) -> Result<Self> {
        let tol = T::lit(NORMALIZE_TOL);
        let mut den = den;
        poly_trim(&mut den, tol);
        if den.is_empty() {
            return Err(Error::ZeroDivision);
        }
        let mut num = num;
        poly_trim(&mut num, tol);
        let g = poly_gcd(&num, &den, tol);
        if g.len() > 1 {
            num = poly_divrem(&num, &g).0;
            den = poly_divrem(&den, &g).0;
        }
        let lead = *den.last().unwrap();
        Ok(RationalFunction {
            num: num.iter().map(|c| *c / lead).collect(),
            den: den.iter().map(|c| *c / lead).collect(),
            var: var.to_string(),
        })
    }

    pub fn polynomial(p: Vec<T>, var: &str) -> Self {
        Self::new(p, vec![T::one()], var).expect("unit denominator")
    }

    pub fn numerator(&self) -> &[T] {
        &self.num
    }

    pub fn denominator(&self) -> &[T] {
        &self.den
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        poly_eval(&self.num, z) / poly_eval(&self.den, z)
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        Self::new(poly_mul(&self.num, &o.num), poly_mul(&self.den, &o.den), &self.var)
    }

    /// Local expansion known through `trunc` (in `z-c` at a point, in `z` downward at infinity).
    pub fn laurent_expand(&self, center: Center<T>, trunc: i32) -> Result<LaurentSeries<T>> {
        let (n, d, shift) = match center {
            Center::Point(c) => (poly_shift(&self.num, c), poly_shift(&self.den, c), 0),
            Center::Infinity => {
                // f(1/u) = u^(deg d - deg n) rev(n)(u) / rev(d)(u)
                let mut n = self.num.clone();
                let mut d = self.den.clone();
                let s = d.len() as i32 - n.len() as i32;
                n.reverse();
                d.reverse();
                (n, d, s)
            }
        };
        let trunc_u = match center {
            Center::Point(_) => trunc,
            Center::Infinity => -trunc,
        };
        if n.is_empty() {
            return Ok(LaurentSeries::zero(center, trunc_u));
        }
        // enough terms so that the quotient is known through trunc_u
        let dv = d.iter().position(|c| c.abs() > T::zero()).unwrap() as i32;
        let nv = n.iter().position(|c| c.abs() > T::zero()).unwrap_or(0) as i32;
        let lead = shift + nv - dv;
        let len = (trunc_u - lead + 1).max(1) as usize;
        let pad = |p: &[T], v: i32| {
            let mut out: Vec<T> = p.iter().skip(v as usize).copied().collect();
            out.resize(len, T::zero());
            out
        };
        let ns = LaurentSeries::new(center, nv, pad(&n, nv));
        let ds = LaurentSeries::new(center, dv, pad(&d, dv));
        let q = ns.div(&ds)?.shift(shift);
        Ok(q.truncate(trunc_u))
    }

    /// Residue of `f dz` at a finite point or at infinity.
    pub fn residue(&self, point: Center<T>) -> Result<T> {
        let trunc = match point {
            Center::Point(_) => -1,
            Center::Infinity => -1,
        };
        self.laurent_expand(point, trunc)?.residue()
    }

    /// Substitutes `z -> 1/z` (as a function, no Jacobian).
    pub fn involution_pullback(&self) -> Self {
        let mut n = self.num.clone();
        let mut d = self.den.clone();
        let k = d.len() as i32 - n.len() as i32;
        n.reverse();
        d.reverse();
        if k >= 0 {
            n = poly_mul(&n, &monomial(k as usize));
        } else {
            d = poly_mul(&d, &monomial((-k) as usize));
        }
        Self::new(n, d, &self.var).expect("nonzero denominator")
    }
}

fn monomial<T: Real>(k: usize) -> Vec<T> {
    let mut v = vec![T::zero(); k + 1];
    v[k] = T::one();
    v
}

/// Residue of a Laurent series at its own center.
pub fn residue<T: Real>(s: &LaurentSeries<T>) -> Result<T> {
    s.residue()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rf(n: Vec<f64>, d: Vec<f64>) -> RationalFunction<f64> {
        RationalFunction::new(n, d, "z").unwrap()
    }

    #[test]
    fn simple_pole_residue() {
        let f = rf(vec![1.0], vec![-1.0, 1.0]);
        assert!((f.residue(Center::Point(1.0)).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn double_pole_has_no_residue() {
        let f = rf(vec![1.0], vec![1.0, -2.0, 1.0]);
        assert!(f.residue(Center::Point(1.0)).unwrap().abs() < 1e-14);
    }

    #[test]
    fn fourier_rhs_residue() {
        // z^2/(2z-1)^2 at z = 1/2 gives 2/2^3
        let f = rf(vec![0.0, 0.0, 1.0], vec![1.0, -4.0, 4.0]);
        assert!((f.residue(Center::Point(0.5)).unwrap() - 0.25).abs() < 1e-13);
    }

    #[test]
    fn geometric_series() {
        let f = rf(vec![1.0], vec![1.0, -1.0]);
        let s = f.laurent_expand(Center::Point(0.0), 3).unwrap();
        assert_eq!(s.coefficients(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn expansion_at_infinity() {
        let f = rf(vec![-1.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]);
        let s = f.laurent_expand(Center::Infinity, -4).unwrap();
        assert!((s.coeff(0).unwrap() - 1.0).abs() < 1e-15);
        assert!((s.coeff(-2).unwrap() + 1.0).abs() < 1e-15);
        assert!(s.coeff(-1).unwrap().abs() < 1e-15);
        assert!(s.coeff(-4).unwrap().abs() < 1e-15);
        assert_eq!(s.truncation_order(), -4);
    }

    #[test]
    fn squared_geometric_at_infinity() {
        let zeta = 3.0;
        // 1/(zeta z - 1)^2
        let f = rf(vec![1.0], vec![1.0, -2.0 * zeta, zeta * zeta]);
        let s = f.laurent_expand(Center::Infinity, -3).unwrap();
        assert!((s.coeff(-2).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert!((s.coeff(-3).unwrap() - 2.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn common_factor_removed() {
        let f = rf(vec![-1.0, 0.0, 1.0], vec![-1.0, 1.0]);
        assert_eq!(f.denominator(), &[1.0]);
        assert!((f.numerator()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pullback_of_square() {
        let f = RationalFunction::polynomial(vec![0.0, 0.0, 1.0], "z");
        let g = f.involution_pullback();
        assert_eq!(g.numerator(), &[1.0]);
        assert_eq!(g.denominator(), &[0.0, 0.0, 1.0]);
        assert_eq!(g.involution_pullback(), f);
    }
}
