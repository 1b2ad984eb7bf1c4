//! Series, rational functions, pole-basis forms and small dense solves.

pub mod laurent;
pub mod linalg;
pub mod polebasis;
pub mod poly;
pub mod ratfunc;

pub use laurent::{Center, LaurentSeries};
pub use linalg::{det, inverse, kernel_dimension, linsolve, rank, Matrix};
pub use num_rational::BigRational;
pub use polebasis::{basis_deriv, basis_eval, basis_moment, Basis, Pole, PoleBasisForm};
pub use poly::{binom, gbinom, LaurentPoly};
pub use ratfunc::{residue, RationalFunction};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(p: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(p))
}

/// Nearest f64, robust for huge numerators and denominators.
pub fn rat_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            let shift = r.numer().bits() as i64 - r.denom().bits() as i64;
            let scaled = if shift > 0 {
                r / BigRational::from_integer(BigInt::one() << shift as usize)
            } else {
                r * BigRational::from_integer(BigInt::one() << (-shift) as usize)
            };
            scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
        }
    }
}

/// `p/q` (or `p` when integral).
pub fn rat_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
