//! Stable ω_{g,n} by blobbed topological recursion, plus the loop-equation
//! and 𝒯-operator residuals used to validate them.
//!
//! Forms are stored in the pole basis `Π dz_i/(z_i - p_i)^{o_i}`, `p_i ∈ {-1, 0, 1}`.
//! Local computations at a ramification point `p` use series in `u = ζ - p`
//! whose coefficients are forms in the spectator variables.

use crate::algebra::{
    basis_deriv, basis_eval, basis_moment, gbinom, Basis, Center, LaurentPoly, LaurentSeries, Pole, PoleBasisForm,
    RationalFunction,
};
use crate::curve::SpectralData;
use crate::model::{interactions, InteractionPoly, ModelSpec};
use crate::omega2::{solve_f, Omega02};
use crate::wick::set_partitions;
use crate::{Error, Real, Result};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Coefficient asymmetry (relative to the largest coefficient, floor 1) that aborts the recursion.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Relative size below which computed coefficients are treated as rounding noise.
const PRUNE_TOL: f64 = 1e-15;

/// How the blob term enters; the last two exist for negative controls.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlobMode {
    #[default]
    Included,
    Dropped,
    Flipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BtrConfig {
    pub gmax: u32,
    pub nmax: usize,
    /// Kernel truncation beyond the pole order of E at the ramification point.
    pub margin: u32,
    /// Fixed kernel truncation order instead of the derived one.
    pub truncation: Option<u32>,
    /// The contour γ is `|z| = 1 + epsilon`.
    pub epsilon: f64,
    pub blob: BlobMode,
    /// Truncation escalations (+4 each) allowed before giving up.
    pub max_escalations: u32,
}

impl Default for BtrConfig {
    fn default() -> Self {
        BtrConfig { gmax: 1, nmax: 2, margin: 4, truncation: None, epsilon: 0.1, blob: BlobMode::Included, max_escalations: 3 }
    }
}

fn cz<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

fn factorial<T: Real>(k: usize) -> T {
    (1..=k).fold(T::one(), |a, j| a * T::from_usize(j).unwrap())
}

fn is_stable(g: u32, n: usize) -> bool {
    2 * g as i32 - 2 + n as i32 > 0
}

// ---------------------------------------------------------------------------
// scalar local series at a ramification point

fn local<T: Real>(p: T, min: i32, coeffs: Vec<T>) -> LaurentSeries<T> {
    LaurentSeries::new(Center::Point(p), min, coeffs)
}

/// `ζ^a` around `ζ = p`, known through `u^trunc`.
fn zeta_pow<T: Real>(a: i32, p: T, trunc: i32) -> LaurentSeries<T> {
    if trunc < 0 {
        return LaurentSeries::zero(Center::Point(p), trunc);
    }
    local(p, 0, (0..=trunc).map(|k| gbinom::<T>(a, k as u32) * p.powi(a - k)).collect())
}

/// `(ζ - q)^{-o}` around `ζ = p`.
fn pole_pow<T: Real>(q: Pole, o: u32, p: T, trunc: i32) -> LaurentSeries<T> {
    let oi = o as i32;
    if q == Pole::Zero {
        return zeta_pow(-oi, p, trunc);
    }
    let qv = q.value::<T>();
    if qv == p {
        return LaurentSeries::monomial(Center::Point(p), -oi, trunc);
    }
    if trunc < 0 {
        return LaurentSeries::zero(Center::Point(p), trunc);
    }
    let d = p - qv;
    local(p, 0, (0..=trunc).map(|k| gbinom::<T>(-oi, k as u32) * d.powi(-oi - k)).collect())
}

/// Local series of one basis element, or of its pullback `b(1/ζ)·(-1/ζ²)`.
fn basis_series<T: Real>(b: Basis, p: T, pulled: bool, trunc: i32) -> Result<LaurentSeries<T>> {
    let (q, o) = b;
    if !pulled {
        return Ok(pole_pow(q, o, p, trunc));
    }
    let oi = o as i32;
    if q == Pole::Zero {
        return Ok(zeta_pow(oi - 2, p, trunc).scale(-T::one()));
    }
    // 1/(1/ζ - q)^o = ζ^o / ((-q)^o (ζ - q)^o)
    let pref = -(-q.value::<T>()).powi(-oi);
    Ok(zeta_pow(oi - 2, p, trunc + oi).mul(&pole_pow(q, o, p, trunc))?.truncate(trunc).scale(pref))
}

/// `v(u) = ι(p + u) - p`, valuation one.
fn iota_shift<T: Real>(p: T, trunc: i32) -> LaurentSeries<T> {
    let s = zeta_pow(-1, p, trunc);
    let coeffs: Vec<T> = (1..=trunc).map(|k| s.coeff_u(k).unwrap()).collect();
    if coeffs.is_empty() {
        return LaurentSeries::zero(Center::Point(p), trunc);
    }
    local(p, 1, coeffs)
}

// ---------------------------------------------------------------------------
// series with form coefficients

/// Truncated Laurent series in `u = ζ - p` with coefficients that are forms in
/// spectator variables; known through `u^trunc`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormSeries<T> {
    arity: usize,
    min: i32,
    coeffs: Vec<PoleBasisForm<T>>,
}

impl<T: Real> FormSeries<T> {
    pub fn zero(arity: usize, trunc: i32) -> Self {
        FormSeries { arity, min: trunc, coeffs: vec![PoleBasisForm::new(arity)] }
    }

    /// `s(u) · form`.
    pub fn scaled(s: &LaurentSeries<T>, form: &PoleBasisForm<T>) -> Self {
        let min = s.order_min();
        let coeffs = (min..=s.trunc_u())
            .map(|k| {
                let c = s.coeff_u(k).unwrap();
                if c == T::zero() {
                    PoleBasisForm::new(form.arity())
                } else {
                    form.scale(c)
                }
            })
            .collect();
        FormSeries { arity: form.arity(), min, coeffs }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn order_min(&self) -> i32 {
        self.min
    }

    pub fn trunc(&self) -> i32 {
        self.min + self.coeffs.len() as i32 - 1
    }

    pub fn coeff(&self, k: i32) -> Result<PoleBasisForm<T>> {
        if k > self.trunc() {
            return Err(Error::InsufficientTruncation { needed: k, have: self.trunc() });
        }
        if k < self.min {
            return Ok(PoleBasisForm::new(self.arity));
        }
        Ok(self.coeffs[(k - self.min) as usize].clone())
    }

    fn coeff_ref(&self, k: i32) -> Option<&PoleBasisForm<T>> {
        if k < self.min || k > self.trunc() {
            None
        } else {
            Some(&self.coeffs[(k - self.min) as usize])
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.arity, o.arity);
        let lo = self.min.min(o.min);
        let hi = self.trunc().min(o.trunc());
        if hi < lo {
            return Self::zero(self.arity, hi);
        }
        let coeffs = (lo..=hi)
            .map(|k| match (self.coeff_ref(k), o.coeff_ref(k)) {
                (Some(a), Some(b)) => a.add(b),
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => PoleBasisForm::new(self.arity),
            })
            .collect();
        FormSeries { arity: self.arity, min: lo, coeffs }
    }

    pub fn scale(&self, c: T) -> Self {
        FormSeries { arity: self.arity, min: self.min, coeffs: self.coeffs.iter().map(|f| f.scale(c)).collect() }
    }

    /// Product whose variables are those of `self` followed by those of `o`.
    pub fn tensor(&self, o: &Self) -> Self {
        let lo = self.min + o.min;
        let hi = (self.trunc() + o.min).min(o.trunc() + self.min);
        let arity = self.arity + o.arity;
        if hi < lo {
            return Self::zero(arity, hi);
        }
        let mut coeffs = vec![PoleBasisForm::new(arity); (hi - lo + 1) as usize];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_empty() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                let k = (i + j) as i32 + lo;
                if k > hi {
                    break;
                }
                if !b.is_empty() {
                    let slot = &mut coeffs[(k - lo) as usize];
                    *slot = slot.add(&a.tensor(b));
                }
            }
        }
        FormSeries { arity, min: lo, coeffs }
    }

    pub fn permute(&self, perm: &[usize]) -> Self {
        FormSeries { arity: self.arity, min: self.min, coeffs: self.coeffs.iter().map(|f| f.permute(perm)).collect() }
    }

    /// Order of the pole at `u = 0` (0 when holomorphic), ignoring coefficients
    /// below `tol` times the largest.
    pub fn pole_order(&self, tol: T) -> u32 {
        let scale = self.coeffs.iter().fold(T::zero(), |m, f| m.max(f.max_abs()));
        for (j, f) in self.coeffs.iter().enumerate() {
            let k = self.min + j as i32;
            if k >= 0 {
                break;
            }
            if f.max_abs() > tol * scale {
                return (-k) as u32;
            }
        }
        0
    }
}

/// Recursion kernel `K(z, ζ)` at a ramification point as a series in `ζ - p`
/// whose coefficients are one-variable forms in `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSeries<T> {
    pub point: Pole,
    pub truncation: i32,
    pub series: FormSeries<T>,
}

/// `(1/2πi) ∮_γ x(ζ)^m form(ζ)` for a one-variable form; every pole lies inside γ.
pub fn gamma_moment<T: Real>(form: &PoleBasisForm<T>, x: &LaurentPoly<T>, m: u32) -> T {
    assert_eq!(form.arity(), 1);
    form.contract(0, &x.pow(m)).scalar_value()
}

/// Slot functional used when evaluating correlators `W_{g,n}` numerically.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Slot<T> {
    /// `W` at `x(z)`.
    Point(Complex<T>),
    /// `∂_x W` at `x(z)`.
    Deriv(Complex<T>),
    /// `∮ ξ^a W(ξ) dξ/2πi` around the cut.
    Moment(u32),
}

/// One factor `W_{f, |K|+|J|}(ξ_K, x_J)` of a multi-trace contour term.
#[derive(Clone, Debug, PartialEq)]
struct Block {
    f: u32,
    /// Positions of the interaction variables in this block.
    slots: Vec<usize>,
    /// Spectator indices.
    spect: Vec<usize>,
}

impl Block {
    fn topology(&self) -> (u32, usize) {
        (self.f, self.slots.len() + self.spect.len())
    }
}

/// Compositions of `total` into `parts` nonnegative parts.
fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = vec![];
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Splits `items` into blocks given as bitmasks over their positions.
fn group(masks: &[u32], items: &[usize]) -> Vec<Vec<usize>> {
    masks.iter().map(|m| items.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, x)| *x).collect()).collect()
}

/// Every way to attach the interaction variables `positions` (grouped into
/// blocks), genera summing to `genus_total`, and the spectators `0..spectators`.
fn block_terms(positions: &[usize], genus_of: impl Fn(usize) -> i32, spectators: usize) -> Vec<Vec<Block>> {
    let mut out = vec![];
    for masks in set_partitions(positions.len()) {
        let groups = group(&masks, positions);
        let nb = groups.len();
        let rem = genus_of(nb);
        if rem < 0 {
            continue;
        }
        for fs in compositions(rem as u32, nb) {
            for code in 0..nb.pow(spectators as u32) {
                let mut blocks: Vec<Block> = groups
                    .iter()
                    .zip(&fs)
                    .map(|(s, f)| Block { f: *f, slots: s.clone(), spect: vec![] })
                    .collect();
                let mut c = code;
                for i in 0..spectators {
                    blocks[c % nb].spect.push(i);
                    c /= nb;
                }
                out.push(blocks);
            }
        }
    }
    out
}

/// Permutation taking the concatenated spectator order back to `0..n`.
fn restore_order(concat: &[usize]) -> Vec<usize> {
    let mut perm = vec![0; concat.len()];
    for (pos, &i) in concat.iter().enumerate() {
        perm[i] = pos;
    }
    perm
}

/// Table of stable ω_{g,n} together with the spectral data they are built on.
#[derive(Clone, Debug)]
pub struct OmegaTable<T> {
    pub curve: SpectralData<T>,
    pub omega02: Omega02<T>,
    /// Density of ω₀,₁ = W₀,₁(x(z)) dx(z) in z.
    pub omega01: RationalFunction<T>,
    /// ω_{g,n} with variables (z, z_1, …, z_{n-1}).
    pub stable: BTreeMap<(u32, usize), PoleBasisForm<T>>,
    /// Blob part Φ_{g,n} (already included in `stable` unless dropped).
    pub blob: BTreeMap<(u32, usize), PoleBasisForm<T>>,
    /// V_{g,n}: entry `a` is the form multiplying `x^a`.
    pub potentials: BTreeMap<(u32, usize), Vec<PoleBasisForm<T>>>,
    /// Kernel truncation used at each (g,n).
    pub truncation: BTreeMap<(u32, usize), i32>,
    pub config: BtrConfig,
    polys: Vec<InteractionPoly>,
}

/// Builds ω₀,₂ for `curve` (refusing when Hypothesis 2 fails) and runs the
/// recursion for every stable (g,n) with `g ≤ gmax`, `n ≤ nmax`, plus whatever
/// those depend on.
pub fn btr_compute<T: Real>(spec: &ModelSpec, curve: &SpectralData<T>, cfg: &BtrConfig) -> Result<OmegaTable<T>> {
    if !(cfg.epsilon > 0.0) {
        return Err(Error::InvalidModel(format!("contour epsilon must be positive, got {}", cfg.epsilon)));
    }
    let omega02 = solve_f(spec, curve)?;
    let mut table = OmegaTable::new(spec, curve.clone(), omega02, cfg.clone())?;
    for (g, n) in table.schedule() {
        table.compute(g, n)?;
    }
    Ok(table)
}

impl<T: Real> OmegaTable<T> {
    pub fn new(spec: &ModelSpec, curve: SpectralData<T>, omega02: Omega02<T>, config: BtrConfig) -> Result<Self> {
        let polys = interactions(spec)?;
        let omega01 = omega01_density(&curve)?;
        Ok(OmegaTable {
            curve,
            omega02,
            omega01,
            stable: BTreeMap::new(),
            blob: BTreeMap::new(),
            potentials: BTreeMap::new(),
            truncation: BTreeMap::new(),
            config,
            polys,
        })
    }

    pub fn x_poly(&self) -> LaurentPoly<T> {
        self.curve.x_poly()
    }

    fn xpow(&self, a: u32) -> LaurentPoly<T> {
        self.x_poly().pow(a)
    }

    /// ω₀,₁ density as a one-variable form (poles at 0 only).
    pub fn omega01_form(&self) -> PoleBasisForm<T> {
        let d = self.curve.w_poly().mul(&self.x_poly().deriv());
        let mut f = PoleBasisForm::new(1);
        for (j, c) in d.coeffs.iter().enumerate() {
            let e = d.min_exp + j as i32;
            if *c != T::zero() {
                assert!(e < 0, "ω₀,₁ density has a holomorphic part");
                f.add_term(vec![(Pole::Zero, (-e) as u32)], *c);
            }
        }
        f
    }

    pub fn get(&self, g: u32, n: usize) -> Result<&PoleBasisForm<T>> {
        self.stable.get(&(g, n)).ok_or_else(|| Error::Missing(format!("ω_{{{g},{n}}}")))
    }

    fn available(&self, g: u32, n: usize) -> bool {
        !is_stable(g, n) || self.stable.contains_key(&(g, n))
    }

    /// Direct dependencies of (g,n) among stable topologies.
    fn dependencies(&self, g: u32, n: usize) -> BTreeSet<(u32, usize)> {
        let mut out = BTreeSet::new();
        if g >= 1 {
            out.insert((g - 1, n + 1));
        }
        for f in 0..=g {
            for j in 0..n {
                if (j == 0 && f == 0) || (j == n - 1 && f == g) {
                    continue;
                }
                out.insert((f, j + 1));
                out.insert((g - f, n - j));
            }
        }
        for (_, blocks) in self.potential_terms(g, n) {
            for b in blocks {
                out.insert(b.topology());
            }
        }
        out.retain(|&(a, b)| is_stable(a, b));
        out
    }

    /// Stable topologies to compute, in dependency order.
    pub fn schedule(&self) -> Vec<(u32, usize)> {
        let mut todo: Vec<(u32, usize)> = vec![];
        for g in 0..=self.config.gmax {
            for n in 1..=self.config.nmax {
                if is_stable(g, n) {
                    todo.push((g, n));
                }
            }
        }
        let mut seen = BTreeSet::new();
        while let Some(t) = todo.pop() {
            if seen.insert(t) {
                todo.extend(self.dependencies(t.0, t.1));
            }
        }
        let mut out: Vec<_> = seen.into_iter().collect();
        out.sort_by_key(|&(g, n)| (2 * g as usize + n, g));
        out
    }

    // -----------------------------------------------------------------------
    // local expansions

    /// ω₀,₂(ζ, z) (or its pullback in ζ) around `ζ = p`, as forms in `z`.
    fn omega02_slot(&self, p: Pole, pulled: bool, trunc: i32) -> Result<FormSeries<T>> {
        let pv = p.value::<T>();
        let dim = self.omega02.dim();
        let s = &self.omega02.s;
        let len = (trunc + 1).max(1) as usize;
        let mut coeffs = vec![PoleBasisForm::new(1); len];
        if trunc < 0 {
            return Ok(FormSeries::zero(1, trunc));
        }
        // diagonal part: Σ (n+1) w^n / (z-p)^{n+2}, with w = u or v(u)
        let mut wpow = LaurentSeries::constant(Center::Point(pv), T::one(), trunc);
        let (v, jac) = if pulled {
            (iota_shift(pv, trunc), zeta_pow(-2, pv, trunc).scale(-T::one()))
        } else {
            (LaurentSeries::monomial(Center::Point(pv), 1, trunc), LaurentSeries::constant(Center::Point(pv), T::one(), trunc))
        };
        for n in 0..=trunc {
            let term = wpow.mul(&jac)?.truncate(trunc);
            for k in n..=trunc {
                let c = term.coeff_u(k)?;
                if c != T::zero() {
                    coeffs[k as usize].add_term(vec![(p, n as u32 + 2)], c * T::from_i32(n + 1).unwrap());
                }
            }
            wpow = wpow.mul(&v)?.truncate(trunc);
        }
        // Σ s_ab ζ^{-a-2} z^{-b-2}; pulled: -Σ s_ab ζ^a z^{-b-2}
        for a in 0..dim {
            let ser = if pulled { zeta_pow(a as i32, pv, trunc).scale(-T::one()) } else { zeta_pow(-(a as i32) - 2, pv, trunc) };
            for b in 0..dim {
                let sab = s[(a, b)];
                if sab == T::zero() {
                    continue;
                }
                for k in 0..=trunc {
                    let c = ser.coeff_u(k)?;
                    if c != T::zero() {
                        coeffs[k as usize].add_term(vec![(Pole::Zero, b as u32 + 2)], sab * c);
                    }
                }
            }
        }
        Ok(FormSeries { arity: 1, min: 0, coeffs })
    }

    /// ω₀,₂(ζ, ι(ζ)) around `ζ = p`.
    fn omega02_diagonal(&self, p: Pole, trunc: i32) -> Result<FormSeries<T>> {
        let pv = p.value::<T>();
        let opposite = if p == Pole::Plus { Pole::Minus } else { Pole::Plus };
        // -1/(ζ²-1)² = -u^{-2} (ζ + p)^{-2}
        let mut acc = LaurentSeries::monomial(Center::Point(pv), -2, trunc)
            .mul(&pole_pow(opposite, 2, pv, trunc + 2))?
            .scale(-T::one());
        let dim = self.omega02.dim();
        for a in 0..dim {
            for b in 0..dim {
                let sab = self.omega02.s[(a, b)];
                if sab != T::zero() {
                    acc = acc.add(&zeta_pow(b as i32 - a as i32 - 2, pv, trunc).scale(-sab))?;
                }
            }
        }
        Ok(FormSeries::scaled(&acc.truncate(trunc), &PoleBasisForm::scalar(T::one())))
    }

    /// Slot `slot` of a stable form expanded at `p` (or pulled back first).
    fn expand_slot(form: &PoleBasisForm<T>, slot: usize, p: Pole, pulled: bool, trunc: i32) -> Result<FormSeries<T>> {
        let mut groups: BTreeMap<Basis, PoleBasisForm<T>> = BTreeMap::new();
        for (idx, c) in form.terms() {
            let mut rest = idx.clone();
            let b = rest.remove(slot);
            groups.entry(b).or_insert_with(|| PoleBasisForm::new(form.arity() - 1)).add_term(rest, *c);
        }
        let mut acc = FormSeries::zero(form.arity() - 1, trunc);
        for (b, rest) in groups {
            acc = acc.add(&FormSeries::scaled(&basis_series(b, p.value(), pulled, trunc)?, &rest));
        }
        Ok(acc)
    }

    /// `ω(ζ, ι(ζ), …)` for a stable form, slots 0 and 1 on the recursion variable.
    fn expand_diagonal(form: &PoleBasisForm<T>, p: Pole, trunc: i32) -> Result<FormSeries<T>> {
        let pv = p.value::<T>();
        let mut groups: BTreeMap<(Basis, Basis), PoleBasisForm<T>> = BTreeMap::new();
        for (idx, c) in form.terms() {
            let rest = idx[2..].to_vec();
            groups.entry((idx[0], idx[1])).or_insert_with(|| PoleBasisForm::new(form.arity() - 2)).add_term(rest, *c);
        }
        let mut acc = FormSeries::zero(form.arity() - 2, trunc);
        for ((b0, b1), rest) in groups {
            let pad = (b0.1 + b1.1) as i32;
            let s = basis_series(b0, pv, false, trunc + pad)?.mul(&basis_series(b1, pv, true, trunc + pad)?)?;
            acc = acc.add(&FormSeries::scaled(&s.truncate(trunc), &rest));
        }
        Ok(acc)
    }

    /// First variable of ω_{g,n} on ζ (or ι(ζ)), the rest spectators.
    fn expand_first(&self, g: u32, n: usize, p: Pole, pulled: bool, trunc: i32) -> Result<FormSeries<T>> {
        if (g, n) == (0, 2) {
            self.omega02_slot(p, pulled, trunc)
        } else {
            Self::expand_slot(self.get(g, n)?, 0, p, pulled, trunc)
        }
    }

    fn pole_bound(&self, g: u32, n: usize, p: Pole, slots: usize) -> u32 {
        if (g, n) == (0, 2) {
            return if slots == 2 { 2 } else { 0 };
        }
        self.stable.get(&(g, n)).map_or(0, |f| (0..slots).map(|s| f.max_order(s, p)).sum())
    }

    /// `E_{g,n}(ζ, ι(ζ); z_I)` around `p`, known through `u^margin`.
    pub fn e_term(&self, g: u32, n: usize, p: Pole, margin: i32) -> Result<FormSeries<T>> {
        let ns = n - 1;
        let mut pieces: Vec<(u32, usize, u32, usize, Vec<usize>)> = vec![];
        let mut bound = 0u32;
        if g >= 1 {
            bound = bound.max(self.pole_bound(g - 1, n + 1, p, 2));
        }
        for f in 0..=g {
            for mask in 0u32..(1 << ns) {
                let j: Vec<usize> = (0..ns).filter(|i| mask >> i & 1 == 1).collect();
                if (j.is_empty() && f == 0) || (j.len() == ns && f == g) {
                    continue;
                }
                let rest: Vec<usize> = (0..ns).filter(|i| mask >> i & 1 == 0).collect();
                let (a, b) = ((f, j.len() + 1), (g - f, n - j.len()));
                bound = bound.max(self.pole_bound(a.0, a.1, p, 1) + self.pole_bound(b.0, b.1, p, 1));
                let mut order = j.clone();
                order.extend(rest);
                pieces.push((a.0, a.1, b.0, b.1, order));
            }
        }
        let trunc = bound as i32 + margin;
        let mut acc = FormSeries::zero(ns, trunc);
        if g >= 1 {
            let d = if (g - 1, n + 1) == (0, 2) {
                self.omega02_diagonal(p, trunc)?
            } else {
                Self::expand_diagonal(self.get(g - 1, n + 1)?, p, trunc)?
            };
            acc = acc.add(&d);
        }
        for (fa, na, fb, nb, order) in pieces {
            let sa = self.expand_first(fa, na, p, false, trunc)?;
            let sb = self.expand_first(fb, nb, p, true, trunc)?;
            acc = acc.add(&sa.tensor(&sb).permute(&restore_order(&order)));
        }
        Ok(acc)
    }

    /// `(ω₀,₁(ζ) - ω₀,₁(ι(ζ)))/dζ` around `p`, valuation two.
    fn kernel_denominator(&self, p: Pole, trunc: i32) -> Result<LaurentSeries<T>> {
        let y = self.curve.w_poly();
        let reflected = LaurentPoly {
            min_exp: -y.max_exp(),
            coeffs: y.coeffs.iter().rev().copied().collect(),
        };
        let den = y.add(&reflected.scale(-T::one())).mul(&self.x_poly().deriv());
        let s = den.expand_at(p.value(), trunc);
        let c2 = s.coeff_u(2)?;
        let scale = s.max_abs();
        if c2.abs() <= T::lit(1e-12) * scale.max(T::one()) {
            return Err(Error::Missing(format!("ω₀,₁(ζ) - ω₀,₁(ι(ζ)) has no double zero at {}", p.label())));
        }
        Ok(s.with_valuation(2))
    }

    /// Leading coefficient `c₂` of the kernel denominator at `p`.
    pub fn denominator_leading(&self, p: Pole) -> Result<T> {
        self.kernel_denominator(p, 4)?.coeff_u(2)
    }

    /// `K(z, ζ) = ½ ∫_{ι(ζ)}^{ζ} ω₀,₂(z, ·) / (ω₀,₁(ζ) - ω₀,₁(ι(ζ)))` at `p`, known through `u^order`.
    pub fn recursion_kernel(&self, p: Pole, order: i32) -> Result<KernelSeries<T>> {
        if order < -1 {
            return Err(Error::InsufficientTruncation { needed: -1, have: order });
        }
        let pv = p.value::<T>();
        let tn = order + 3;
        // τ-density of ω₀,₂(z, τ) at τ = p and its primitive vanishing at p
        let dens = self.omega02_slot(p, false, tn)?;
        let prim: Vec<PoleBasisForm<T>> = (0..=tn)
            .map(|k| dens.coeff(k).map(|f| f.scale(T::one() / T::from_i32(k + 1).unwrap())))
            .collect::<Result<_>>()?;
        // primitive at ζ minus primitive at ι(ζ)
        let mut num = FormSeries { arity: 1, min: 1, coeffs: prim.clone() };
        let v = iota_shift(pv, tn + 1);
        let mut vpow = v.clone();
        for m in 1..=tn + 1 {
            let pm = &prim[(m - 1) as usize];
            num = num.add(&FormSeries::scaled(&vpow, pm).scale(-T::one()));
            vpow = vpow.mul(&v)?.truncate(tn + 1);
        }
        let den = self.kernel_denominator(p, tn + 3)?.recip()?;
        let k = num.tensor(&FormSeries::scaled(&den, &PoleBasisForm::scalar(T::lit(0.5))));
        if k.trunc() < order {
            return Err(Error::InsufficientTruncation { needed: order, have: k.trunc() });
        }
        let coeffs = (-1..=order).map(|j| k.coeff(j)).collect::<Result<_>>()?;
        Ok(KernelSeries { point: p, truncation: order, series: FormSeries { arity: 1, min: -1, coeffs } })
    }

    /// `Res_{ζ=p} K(z, ζ) E(ζ)`, variables (z, z_I).
    fn residue(k: &KernelSeries<T>, e: &FormSeries<T>) -> Result<PoleBasisForm<T>> {
        let mut out = PoleBasisForm::new(1 + e.arity());
        for i in -1..=k.truncation {
            let ec = e.coeff(-1 - i)?;
            if ec.is_empty() {
                continue;
            }
            out = out.add(&k.series.coeff(i)?.tensor(&ec));
        }
        Ok(out)
    }

    /// Residue part at `p` with the configured or derived truncation, escalated
    /// until a +4 recomputation agrees.
    fn residue_part(&self, g: u32, n: usize, p: Pole) -> Result<(PoleBasisForm<T>, i32)> {
        let margin = self.config.margin as i32;
        let e = self.e_term(g, n, p, margin.max(0))?;
        let pole = e.pole_order(T::lit(1e-14)) as i32;
        let mut order = match self.config.truncation {
            Some(t) => {
                if (t as i32) < pole - 1 {
                    return Err(Error::InsufficientTruncation { needed: pole - 1, have: t as i32 });
                }
                t as i32
            }
            None => pole + margin,
        };
        for _ in 0..=self.config.max_escalations {
            let r = Self::residue(&self.recursion_kernel(p, order)?, &e)?;
            let check = Self::residue(&self.recursion_kernel(p, order + 4)?, &e)?;
            let scale = r.max_abs().max(T::one());
            if r.add(&check.scale(-T::one())).max_abs() <= T::lit(1e-10) * scale {
                return Ok((r, order));
            }
            order += 4;
        }
        Err(Error::InsufficientTruncation { needed: order, have: order - 4 })
    }

    fn compute(&mut self, g: u32, n: usize) -> Result<()> {
        let mut omega = PoleBasisForm::new(n);
        let mut order = 0;
        for p in [Pole::Minus, Pole::Plus] {
            let (r, o) = self.residue_part(g, n, p)?;
            omega = omega.add(&r);
            order = order.max(o);
        }
        let v = self.potential(g, n)?;
        let phi = self.blob_term(&v, n)?;
        match self.config.blob {
            BlobMode::Included => omega = omega.add(&phi),
            BlobMode::Dropped => {}
            BlobMode::Flipped => omega = omega.add(&phi.scale(-T::one())),
        }
        let omega = omega.pruned(T::lit(PRUNE_TOL));
        let asym = omega.asymmetry();
        if asym > T::lit(SYMMETRY_TOL) * omega.max_abs().max(T::one()) {
            return Err(Error::Asymmetric(asym.to_f64().unwrap()));
        }
        self.stable.insert((g, n), omega);
        self.blob.insert((g, n), phi);
        self.potentials.insert((g, n), v);
        self.truncation.insert((g, n), order);
        Ok(())
    }

    // -----------------------------------------------------------------------
    // potentials and blob term

    /// Terms of V_{g,n} with k ≥ 2: (interaction index, blocks over ξ_2..ξ_k).
    fn potential_terms(&self, g: u32, n: usize) -> Vec<(usize, Vec<Block>)> {
        let mut out = vec![];
        for (pi, poly) in self.polys.iter().enumerate() {
            if poly.h == 0 || poly.k < 2 {
                continue;
            }
            let positions: Vec<usize> = (1..poly.k).collect();
            let (h, k) = (poly.h as i32, poly.k as i32);
            for blocks in block_terms(&positions, |nb| g as i32 - h - (k - 1) + nb as i32, n - 1) {
                out.push((pi, blocks));
            }
        }
        out
    }

    /// `∮…∮ Π_{r∈K} ξ_r^{e_r} W_{f,m}(ξ_K, x_J)` as a form in the spectators.
    fn moment_form(&self, f: u32, m: usize, exps: &[u32]) -> Result<PoleBasisForm<T>> {
        match ((f, m), exps.len()) {
            ((0, 1), 1) => Ok(PoleBasisForm::scalar(self.curve.moment(exps[0]))),
            ((0, 2), 2) => Ok(PoleBasisForm::scalar(self.omega02.stuffed_map(exps[0], exps[1]))),
            ((0, 2), 1) => Ok(self.omega02_moment_slice(exps[0])),
            _ => {
                let mut form = self.get(f, m)?.clone();
                for &e in exps {
                    form = form.contract(0, &self.xpow(e));
                }
                Ok(form)
            }
        }
    }

    /// `(1/2πi)∮_γ x(ζ)^a ω₀,₂(ζ, w)` as a form in `w` (all poles at 0).
    pub fn omega02_moment_slice(&self, a: u32) -> PoleBasisForm<T> {
        let l = self.xpow(a);
        let mut out = PoleBasisForm::new(1);
        for (j, c) in l.coeffs.iter().enumerate() {
            let e = l.min_exp + j as i32;
            if e <= -1 && *c != T::zero() {
                out.add_term(vec![(Pole::Zero, (1 - e) as u32)], *c * T::from_i32(-e).unwrap());
            }
        }
        let dim = self.omega02.dim();
        for r in 0..dim {
            let lr = l.coeff(r as i32 + 1);
            if lr == T::zero() {
                continue;
            }
            for s in 0..dim {
                let v = self.omega02.s[(r, s)];
                if v != T::zero() {
                    out.add_term(vec![(Pole::Zero, s as u32 + 2)], v * lr);
                }
            }
        }
        out
    }

    /// Potential V_{g,n}(x; z_I): entry `a` multiplies `x^a`.
    pub fn potential(&self, g: u32, n: usize) -> Result<Vec<PoleBasisForm<T>>> {
        let ns = n - 1;
        let mut out: Vec<PoleBasisForm<T>> = vec![];
        let mut add = |a: usize, f: &PoleBasisForm<T>| {
            while out.len() <= a {
                out.push(PoleBasisForm::new(ns));
            }
            out[a] = out[a].add(f);
        };
        if n == 1 && g >= 1 {
            for poly in self.polys.iter().filter(|q| q.h == g && q.k == 1) {
                for (e, c) in poly.monomials() {
                    add(e[0] as usize, &PoleBasisForm::scalar(T::lit(c)));
                }
            }
        }
        for (pi, blocks) in self.potential_terms(g, n) {
            let poly = &self.polys[pi];
            for b in &blocks {
                let (f, m) = b.topology();
                if !self.available(f, m) {
                    return Err(Error::Missing(format!("ω_{{{f},{m}}} for V_{{{g},{n}}}")));
                }
            }
            let norm = T::one() / factorial::<T>(poly.k - 1);
            for (e, c) in poly.monomials() {
                let mut form = PoleBasisForm::scalar(T::lit(c) * norm);
                let mut order = vec![];
                for b in &blocks {
                    let exps: Vec<u32> = b.slots.iter().map(|&s| e[s]).collect();
                    form = form.tensor(&self.moment_form(b.f, b.slots.len() + b.spect.len(), &exps)?);
                    order.extend(&b.spect);
                }
                add(e[0] as usize, &form.permute(&restore_order(&order)));
            }
        }
        Ok(out)
    }

    /// Φ_{g,n}(z; z_I) = Res_{ζ=0} ω₀,₂(z, ζ) V_{g,n}(x(ζ); z_I): the clockwise
    /// boundary contour of Σ contracted onto the removed disc around 0.
    pub fn blob_term(&self, v: &[PoleBasisForm<T>], n: usize) -> Result<PoleBasisForm<T>> {
        let mut out = PoleBasisForm::new(n);
        let dim = self.omega02.dim();
        for (a, va) in v.iter().enumerate() {
            if va.is_empty() {
                continue;
            }
            let l = self.xpow(a as u32);
            let mut phi = PoleBasisForm::new(1);
            for m in 1..=a as i32 {
                let c = l.coeff(-m);
                if c != T::zero() {
                    phi.add_term(vec![(Pole::Zero, m as u32 + 1)], c * T::from_i32(m).unwrap());
                }
            }
            for r in 0..dim {
                for s in 0..dim {
                    let c = l.coeff(s as i32 + 1) * self.omega02.s[(r, s)];
                    if c != T::zero() {
                        phi.add_term(vec![(Pole::Zero, r as u32 + 2)], c);
                    }
                }
            }
            out = out.add(&phi.tensor(va));
        }
        if out.terms().keys().any(|k| k[0].0 != Pole::Zero) {
            return Err(Error::OutsideBasis("blob term with a pole away from 0".into()));
        }
        Ok(out)
    }

    // -----------------------------------------------------------------------
    // generating series and residual checks

    /// `Q_{g;ℓ}`: coefficient of `Π x_i^{-ℓ_i-1}` in `W_{g,n}`.
    pub fn stuffed_map_coeffs(&self, g: u32, ls: &[u32]) -> Result<T> {
        match (g, ls.len()) {
            (_, 0) => Err(Error::Missing("at least one perimeter".into())),
            (0, 1) => Ok(self.curve.moment(ls[0])),
            (0, 2) => Ok(self.omega02.stuffed_map(ls[0], ls[1])),
            (_, n) => {
                let mut form = self.get(g, n)?.clone();
                for &l in ls {
                    form = form.contract(0, &self.xpow(l));
                }
                Ok(form.scalar_value())
            }
        }
    }

    fn dx(&self, z: Complex<T>) -> Complex<T> {
        (cz(T::one()) - (z * z).inv()) * self.curve.gamma
    }

    fn ddx(&self, z: Complex<T>) -> Complex<T> {
        z.powi(-3) * (self.curve.gamma + self.curve.gamma)
    }

    fn basis_slot(&self, b: Basis, s: Slot<T>) -> Complex<T> {
        match s {
            Slot::Point(z) => basis_eval(b, z) / self.dx(z),
            Slot::Deriv(z) => {
                let d = self.dx(z);
                (basis_deriv(b, z) * d - basis_eval(b, z) * self.ddx(z)) / (d * d * d)
            }
            Slot::Moment(a) => cz(basis_moment(b, &self.xpow(a))),
        }
    }

    /// `F(z,w) = 1/(zw-1)² + Σ s_ab z^{-a-2} w^{-b-2}` and `∂_z F`.
    fn f02(&self, z: Complex<T>, w: Complex<T>) -> (Complex<T>, Complex<T>) {
        let d = z * w - T::one();
        let mut f = (d * d).inv();
        let mut fz = -w * T::lit(2.0) / (d * d * d);
        let dim = self.omega02.dim();
        for a in 0..dim {
            for b in 0..dim {
                let s = self.omega02.s[(a, b)];
                if s == T::zero() {
                    continue;
                }
                let wb = w.powi(-(b as i32) - 2);
                f = f + z.powi(-(a as i32) - 2) * wb * s;
                fz = fz - z.powi(-(a as i32) - 3) * wb * s * T::from_usize(a + 2).unwrap();
            }
        }
        (f, fz)
    }

    fn w02(&self, s1: Slot<T>, s2: Slot<T>) -> Result<Complex<T>> {
        use Slot::*;
        match (s1, s2) {
            (Moment(a), Moment(b)) => Ok(cz(self.omega02.stuffed_map(a, b))),
            (Moment(a), other) | (other, Moment(a)) => {
                let form = self.omega02_moment_slice(a);
                Ok(form.terms().iter().map(|(k, c)| self.basis_slot(k[0], other) * *c).fold(cz(T::zero()), |x, y| x + y))
            }
            (Deriv(_), Deriv(_)) => Err(Error::Missing("second derivative of W₀,₂".into())),
            (Deriv(z), Point(w)) | (Point(w), Deriv(z)) => {
                let (f, fz) = self.f02(z, w);
                let (dz, dw) = (self.dx(z), self.dx(w));
                Ok((fz * dz - f * self.ddx(z)) / (dz * dz * dz * dw))
            }
            (Point(z), Point(w)) => Ok(self.f02(z, w).0 / (self.dx(z) * self.dx(w))),
        }
    }

    /// `W_{g,n}` with one functional per slot.
    pub fn w_eval(&self, g: u32, slots: &[Slot<T>]) -> Result<Complex<T>> {
        match (g, slots.len()) {
            (0, 1) => Ok(match slots[0] {
                Slot::Point(z) => self.curve.w_poly().eval(z),
                Slot::Deriv(z) => self.curve.w_poly().deriv().eval(z) / self.dx(z),
                Slot::Moment(a) => cz(self.curve.moment(a)),
            }),
            (0, 2) => self.w02(slots[0], slots[1]),
            (_, n) => {
                let form = self.get(g, n)?;
                let mut acc = cz(T::zero());
                for (k, c) in form.terms() {
                    let mut v = cz(*c);
                    for (b, s) in k.iter().zip(slots) {
                        v = v * self.basis_slot(*b, *s);
                    }
                    acc = acc + v;
                }
                Ok(acc)
            }
        }
    }

    /// Left side of the rank-n loop equation at order `N^{3-2g-n}`, at
    /// `x = x(z[0])`, `x_i = x(z[i])`, all points outside γ.
    pub fn sde_lhs(&self, g: u32, z: &[Complex<T>]) -> Result<Complex<T>> {
        let n = z.len();
        let ns = n - 1;
        let pt = |i: usize| Slot::Point(z[i]);
        let x = self.curve.joukowski(z[0]);
        let mut total = cz(T::zero());
        if g >= 1 {
            let mut slots = vec![pt(0), pt(0)];
            slots.extend((1..n).map(pt));
            total = total + self.w_eval(g - 1, &slots)?;
        }
        for f in 0..=g {
            for mask in 0u32..(1 << ns) {
                let j: Vec<usize> = (1..n).filter(|i| mask >> (i - 1) & 1 == 1).collect();
                let r: Vec<usize> = (1..n).filter(|i| mask >> (i - 1) & 1 == 0).collect();
                let mut sa = vec![pt(0)];
                sa.extend(j.iter().map(|&i| pt(i)));
                let mut sb = vec![pt(0)];
                sb.extend(r.iter().map(|&i| pt(i)));
                total = total + self.w_eval(f, &sa)? * self.w_eval(g - f, &sb)?;
            }
        }
        for i in 1..n {
            let others: Vec<Slot<T>> = (1..n).filter(|&k| k != i).map(pt).collect();
            let with = |s: Slot<T>| {
                let mut v = vec![s];
                v.extend(others.iter().copied());
                self.w_eval(g, &v)
            };
            let xi = self.curve.joukowski(z[i]);
            let d = x - xi;
            total = total + (with(pt(0))? - with(pt(i))?) / (d * d) - with(Slot::Deriv(z[i]))? / d;
        }
        for poly in &self.polys {
            let positions: Vec<usize> = (0..poly.k).collect();
            let (h, k) = (poly.h as i32, poly.k as i32);
            let norm = T::one() / factorial::<T>(poly.k - 1);
            for blocks in block_terms(&positions, |nb| g as i32 - h - k + nb as i32, ns) {
                if blocks.iter().any(|b| !self.available(b.topology().0, b.topology().1)) {
                    let (f, m) = blocks.iter().map(|b| b.topology()).find(|t| !self.available(t.0, t.1)).unwrap();
                    return Err(Error::Missing(format!("W_{{{f},{m}}} in the rank-{n} loop equation")));
                }
                for (e, c) in poly.monomials() {
                    if e[0] == 0 {
                        continue;
                    }
                    let coef = T::lit(c) * T::from_u32(e[0]).unwrap() * norm;
                    let b1 = e[0] - 1;
                    let mut term = cz(coef);
                    for blk in &blocks {
                        let slots_with = |first: Slot<T>| -> Vec<Slot<T>> {
                            let mut v = vec![];
                            for &s in &blk.slots {
                                v.push(if s == 0 { first } else { Slot::Moment(e[s]) });
                            }
                            v.extend(blk.spect.iter().map(|&i| pt(i + 1)));
                            v
                        };
                        let val = if blk.slots.contains(&0) {
                            // ∮ ξ^b G(ξ)/(x-ξ) = x^b G(x) - Σ_{j<b} x^{b-1-j} ∮ ξ^j G
                            let mut v = x.powu(b1) * self.w_eval(blk.f, &slots_with(Slot::Point(z[0])))?;
                            for jj in 0..b1 {
                                v = v - x.powu(b1 - 1 - jj) * self.w_eval(blk.f, &slots_with(Slot::Moment(jj)))?;
                            }
                            v
                        } else {
                            self.w_eval(blk.f, &slots_with(Slot::Moment(0)))?
                        };
                        term = term * val;
                    }
                    total = total + term;
                }
            }
        }
        Ok(total)
    }

    /// Max |loop-equation residual| over the probe tuples.
    pub fn sde_residual(&self, g: u32, n: usize, probes: &[Vec<Complex<T>>]) -> Result<T> {
        let mut worst = T::zero();
        for z in probes {
            if z.len() != n {
                return Err(Error::Missing(format!("probe with {} points for n = {n}", z.len())));
            }
            worst = worst.max(self.sde_lhs(g, z)?.norm());
        }
        Ok(worst)
    }

    /// `𝒫̂₊ω + Ôω + dV` density at `z` (on γ) with spectators `zs`.
    pub fn t_operator_defect(&self, g: u32, n: usize, z: Complex<T>, zs: &[Complex<T>]) -> Result<Complex<T>> {
        let form = self.get(g, n)?;
        let at = |w: Complex<T>| {
            let mut pts = vec![w];
            pts.extend_from_slice(zs);
            form.eval(&pts)
        };
        let zi = z.inv();
        let mut out = at(z) - at(zi) * zi * zi;
        let x = self.curve.joukowski(z);
        let dx = self.dx(z);
        let dim = self.omega02.dim();
        for m in 1..=dim {
            let mom = form.contract(0, &self.xpow(m as u32));
            let mv = mom.eval(zs);
            for k in 1..=dim {
                let nu = self.omega02.nu[(k - 1, m - 1)];
                if nu != T::zero() {
                    out = out + mv * x.powu(k as u32 - 1) * dx * nu * T::from_usize(k).unwrap();
                }
            }
        }
        let v = self.potentials.get(&(g, n)).ok_or_else(|| Error::Missing(format!("V_{{{g},{n}}}")))?;
        for (a, va) in v.iter().enumerate().skip(1) {
            if !va.is_empty() {
                out = out + va.eval(zs) * x.powu(a as u32 - 1) * dx * T::from_usize(a).unwrap();
            }
        }
        Ok(out)
    }

    /// Max 𝒯-defect over the probes (first point on γ, the rest spectators).
    pub fn t_operator_residual(&self, g: u32, n: usize, probes: &[Vec<Complex<T>>]) -> Result<T> {
        let mut worst = T::zero();
        for p in probes {
            worst = worst.max(self.t_operator_defect(g, n, p[0], &p[1..])?.norm());
        }
        Ok(worst)
    }

    /// Probe tuples for the loop equations: `count` tuples of `n` distinct
    /// points with `|z| ∈ [1.6, 2.6]`.
    pub fn exterior_probes(count: usize, n: usize) -> Vec<Vec<Complex<T>>> {
        (0..count)
            .map(|j| {
                (0..n)
                    .map(|i| {
                        let r = T::lit(1.6 + 0.1 * ((3 * j + 7 * i) % 11) as f64);
                        let th = T::lit(0.37 + 1.3 * j as f64 + 2.1 * i as f64);
                        Complex::from_polar(r, th)
                    })
                    .collect()
            })
            .collect()
    }

    /// Probe tuples for the 𝒯-check: first point on γ, spectators outside.
    /// Angles stay within π/4 of ±i, so the high-order poles at ±1 are not
    /// sampled where ω(z) and its reflection cancel to many digits.
    pub fn contour_probes(&self, count: usize, n: usize) -> Vec<Vec<Complex<T>>> {
        let radius = T::one() + T::lit(self.config.epsilon);
        let quarter = std::f64::consts::FRAC_PI_4;
        Self::exterior_probes(count, n)
            .into_iter()
            .enumerate()
            .map(|(j, mut p)| {
                let frac = (0.618_033_988_75 * (j + 1) as f64).fract();
                let side = if j % 2 == 0 { 1.0 } else { -1.0 };
                p[0] = Complex::from_polar(radius, T::lit(side * (quarter + 2.0 * quarter * frac)));
                p
            })
            .collect()
    }
}

/// ω₀,₁ density `W₀,₁(x(z)) x'(z)` as a rational function of z.
fn omega01_density<T: Real>(curve: &SpectralData<T>) -> Result<RationalFunction<T>> {
    let d = curve.w_poly().mul(&curve.x_poly().deriv());
    // d = Σ_e c_e z^e with e < 0: numerator z^{-min} d, denominator z^{-min}
    let shift = -d.min_exp;
    let mut num = vec![T::zero(); (d.max_exp() + shift + 1).max(1) as usize];
    for (j, c) in d.coeffs.iter().enumerate() {
        num[j] = *c;
    }
    let mut den = vec![T::zero(); shift as usize + 1];
    den[shift as usize] = T::one();
    RationalFunction::new(num, den, "z")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pullback_series_matches_direct_evaluation() {
        let b: Basis = (Pole::Minus, 3);
        let s = basis_series::<f64>(b, 1.0, true, 12).unwrap();
        let u = 0.05;
        let z = Complex::new(1.0 + u, 0.0);
        let want = basis_eval(b, z.inv()) * (-1.0 / (z * z));
        assert!((s.eval(z) - want).norm() < 1e-12);
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(2, 3).len(), 6);
        assert_eq!(compositions(0, 0).len(), 1);
    }
}
