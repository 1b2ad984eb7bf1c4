use super::poly::{binom, LaurentPoly};
use crate::{Error, Real, Result};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pole {
    Minus,
    Plus,
    Zero,
}

impl Pole {
    pub fn value<T: Real>(self) -> T {
        match self {
            Pole::Minus => -T::one(),
            Pole::Plus => T::one(),
            Pole::Zero => T::zero(),
        }
    }

    pub fn from_value<T: Real>(p: T) -> Option<Pole> {
        if p == T::one() {
            Some(Pole::Plus)
        } else if p == -T::one() {
            Some(Pole::Minus)
        } else if p == T::zero() {
            Some(Pole::Zero)
        } else {
            None
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Pole::Minus => "-1",
            Pole::Plus => "+1",
            Pole::Zero => "0",
        }
    }
}

/// One basis factor `dz / (z - pole)^order`.
pub type Basis = (Pole, u32);

/// Value of `1/(z - pole)^order`.
pub fn basis_eval<T: Real>(b: Basis, z: Complex<T>) -> Complex<T> {
    (z - Complex::new(b.0.value::<T>(), T::zero())).powi(-(b.1 as i32))
}

/// `d/dz` of `1/(z - pole)^order`.
pub fn basis_deriv<T: Real>(b: Basis, z: Complex<T>) -> Complex<T> {
    let o = b.1 as i32;
    (z - Complex::new(b.0.value::<T>(), T::zero())).powi(-o - 1) * T::from_i32(-o).unwrap()
}

/// `(1/2πi) ∮_γ L(ζ) dζ/(ζ - pole)^order` for a Laurent polynomial `L`, all
/// poles being inside the contour.
pub fn basis_moment<T: Real>(b: Basis, l: &LaurentPoly<T>) -> T {
    let (q, o) = (b.0.value::<T>(), b.1 as i32);
    let mut acc = T::zero();
    for (j, c) in l.coeffs.iter().enumerate() {
        let e = l.min_exp + j as i32;
        if e < o - 1 {
            continue;
        }
        let k = e - o + 1;
        if q == T::zero() && k > 0 {
            continue;
        }
        acc = acc + *c * binom::<T>(e as u32, (o - 1) as u32) * q.powi(k);
    }
    acc
}

/// Multivariate form `Σ c · Π_i dz_i/(z_i - p_i)^{o_i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleBasisForm<T> {
    arity: usize,
    terms: BTreeMap<Vec<Basis>, T>,
}

impl<T: Real> PoleBasisForm<T> {
    pub fn new(arity: usize) -> Self {
        PoleBasisForm { arity, terms: BTreeMap::new() }
    }

    pub fn scalar(c: T) -> Self {
        let mut f = Self::new(0);
        f.add_term(vec![], c);
        f
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> &BTreeMap<Vec<Basis>, T> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, idx: Vec<Basis>, c: T) {
        assert_eq!(idx.len(), self.arity);
        assert!(idx.iter().all(|b| b.1 >= 1));
        let e = self.terms.entry(idx).or_insert(T::zero());
        *e = *e + c;
    }

    pub fn coeff(&self, idx: &[Basis]) -> T {
        self.terms.get(idx).copied().unwrap_or(T::zero())
    }

    /// Removes coefficients whose magnitude is at most `tol` times the largest.
    pub fn pruned(&self, tol: T) -> Self {
        let s = self.max_abs();
        PoleBasisForm {
            arity: self.arity,
            terms: self.terms.iter().filter(|(_, c)| c.abs() > tol * s).map(|(k, c)| (k.clone(), *c)).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.terms.values().fold(T::zero(), |m, c| m.max(c.abs()))
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.arity, o.arity);
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.add_term(k.clone(), *c);
        }
        out
    }

    pub fn scale(&self, c: T) -> Self {
        PoleBasisForm { arity: self.arity, terms: self.terms.iter().map(|(k, v)| (k.clone(), *v * c)).collect() }
    }

    /// Density (coefficient of `Π dz_i`) at the given points.
    pub fn eval(&self, z: &[Complex<T>]) -> Complex<T> {
        assert_eq!(z.len(), self.arity);
        let mut acc = Complex::new(T::zero(), T::zero());
        for (k, c) in &self.terms {
            let mut v = Complex::new(*c, T::zero());
            for (b, zi) in k.iter().zip(z) {
                v = v * basis_eval(*b, *zi);
            }
            acc = acc + v;
        }
        acc
    }

    /// Product form in the variables of `self` followed by those of `o`.
    pub fn tensor(&self, o: &Self) -> Self {
        let mut out = Self::new(self.arity + o.arity);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &o.terms {
                let mut idx = ka.clone();
                idx.extend_from_slice(kb);
                out.add_term(idx, *ca * *cb);
            }
        }
        out
    }

    /// Value of an arity-0 form.
    pub fn scalar_value(&self) -> T {
        assert_eq!(self.arity, 0);
        self.coeff(&[])
    }

    /// Variables reordered so that new variable `i` is old variable `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        let mut out = Self::new(self.arity);
        for (k, c) in &self.terms {
            out.add_term(perm.iter().map(|&i| k[i]).collect(), *c);
        }
        out
    }

    /// Largest coefficient difference under a transposition of two variables,
    /// over all transpositions (these generate the symmetric group).
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.arity {
            for j in i + 1..self.arity {
                let mut perm: Vec<usize> = (0..self.arity).collect();
                perm.swap(i, j);
                let p = self.permute(&perm);
                for k in self.terms.keys().chain(p.terms.keys()) {
                    worst = worst.max((self.coeff(k) - p.coeff(k)).abs());
                }
            }
        }
        worst
    }

    /// Fixes variable `var` at `z`, returning a form in the remaining variables.
    pub fn partial_eval(&self, var: usize, z: Complex<T>) -> BTreeMap<Vec<Basis>, Complex<T>> {
        let mut out: BTreeMap<Vec<Basis>, Complex<T>> = BTreeMap::new();
        for (k, c) in &self.terms {
            let mut rest = k.clone();
            let b = rest.remove(var);
            let e = out.entry(rest).or_insert(Complex::new(T::zero(), T::zero()));
            *e = *e + basis_eval(b, z) * *c;
        }
        out
    }

    /// `(1/2πi) ∮_γ L(ζ) ω(…, ζ, …)` over variable `var`.
    pub fn contract(&self, var: usize, l: &LaurentPoly<T>) -> Self {
        let mut out = Self::new(self.arity - 1);
        for (k, c) in &self.terms {
            let mut rest = k.clone();
            let b = rest.remove(var);
            let m = basis_moment(b, l);
            if m != T::zero() {
                out.add_term(rest, *c * m);
            }
        }
        out
    }

    /// Pullback under `z_var -> 1/z_var`, including the Jacobian `-dz/z²`.
    /// Poles of order ≥ 2 at 0 map to poles at infinity and are rejected.
    pub fn involution_pullback(&self, var: usize) -> Result<Self> {
        let mut out = Self::new(self.arity);
        for (k, c) in &self.terms {
            for (b, w) in pullback_basis::<T>(k[var])? {
                let mut idx = k.clone();
                idx[var] = b;
                out.add_term(idx, *c * w);
            }
        }
        Ok(out.pruned(T::lit(1e-15)))
    }

    /// Largest pole order per pole location in variable `var`.
    pub fn max_order(&self, var: usize, pole: Pole) -> u32 {
        self.terms.keys().filter(|k| k[var].0 == pole).map(|k| k[var].1).max().unwrap_or(0)
    }
}

/// Image of one basis element under the pulled-back involution.
fn pullback_basis<T: Real>(b: Basis) -> Result<Vec<(Basis, T)>> {
    let (pole, o) = b;
    match pole {
        Pole::Zero => {
            if o == 1 {
                Ok(vec![((Pole::Zero, 1), -T::one())])
            } else {
                Err(Error::OutsideBasis(format!("pullback of dz/z^{o} has a pole at infinity")))
            }
        }
        Pole::Plus | Pole::Minus => {
            let p = pole.value::<T>();
            if o == 1 {
                // dz/(z-p) -> dz/(z-p) - dz/z
                return Ok(vec![((pole, 1), T::one()), ((Pole::Zero, 1), -T::one())]);
            }
            // -z^{o-2} / ((-p)^o (z-p)^o), with z^{o-2} expanded around p
            let pref = -T::one() / (-p).powi(o as i32);
            Ok((0..=o - 2)
                .map(|j| {
                    let c = pref * binom::<T>(o - 2, j) * p.powi((o - 2 - j) as i32);
                    ((pole, o - j), c)
                })
                .collect())
        }
    }
}
