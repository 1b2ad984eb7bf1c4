//! Ensemble definition, Boltzmann-weight compilation and the two action
//! evaluators (literal Dirac operator vs compiled cell expansion).

use crate::algebra::binom;
use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub type Hermitian = DMatrix<Complex64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiTrace {
    /// Weakly increasing orders `n_1 ≤ … ≤ n_s`.
    pub orders: Vec<u32>,
    pub coupling: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub t: f64,
    #[serde(rename = "N", default = "default_n")]
    pub n: usize,
    pub d: u32,
    #[serde(default)]
    pub alpha: BTreeMap<u32, f64>,
    #[serde(default)]
    pub multitrace: Vec<MultiTrace>,
    #[serde(default)]
    pub gbar: u32,
    #[serde(default)]
    pub plain_1mm: bool,
}

fn default_n() -> usize {
    8
}

impl ModelSpec {
    pub fn gaussian(t: f64) -> Self {
        ModelSpec { t, n: default_n(), d: 2, alpha: BTreeMap::new(), multitrace: vec![], gbar: 0, plain_1mm: false }
    }

    pub fn plain(t: f64) -> Self {
        ModelSpec { plain_1mm: true, ..Self::gaussian(t) }
    }

    pub fn with_alpha(mut self, n: u32, a: f64) -> Self {
        self.alpha.insert(n, a);
        self.d = self.d.max(n);
        self
    }

    pub fn with_multitrace(mut self, orders: Vec<u32>, coupling: f64) -> Self {
        self.gbar = self.gbar.max(orders.len() as u32);
        self.d = self.d.max(*orders.iter().max().unwrap_or(&2));
        self.multitrace.push(MultiTrace { orders, coupling });
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidModel(m));
        if !(self.t.is_finite() && self.t > 0.0) {
            return bad(format!("t must be positive, got {}", self.t));
        }
        if self.n == 0 {
            return bad("N must be positive".into());
        }
        if self.d < 2 {
            return bad(format!("d must be at least 2, got {}", self.d));
        }
        for (&n, a) in &self.alpha {
            if n < 3 || n > self.d {
                return bad(format!("alpha_{n} outside 3..=d (d = {})", self.d));
            }
            if !a.is_finite() {
                return bad(format!("alpha_{n} is not finite"));
            }
        }
        if self.plain_1mm && !self.multitrace.is_empty() {
            return bad("plain_1mm excludes multitrace couplings".into());
        }
        for m in &self.multitrace {
            let s = m.orders.len() as u32;
            if s == 0 || s > self.gbar {
                return bad(format!("multitrace {:?}: need 1 ≤ s ≤ gbar = {}", m.orders, self.gbar));
            }
            if m.orders.windows(2).any(|w| w[0] > w[1]) {
                return bad(format!("multitrace orders {:?} not weakly increasing", m.orders));
            }
            if m.orders.iter().any(|&o| o == 0 || o > self.d) {
                return bad(format!("multitrace orders {:?} must lie in 1..=d", m.orders));
            }
            if !m.coupling.is_finite() {
                return bad("multitrace coupling is not finite".into());
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellWeight {
    pub genus: u32,
    pub perimeters: Vec<u32>,
    pub weight: f64,
}

impl CellWeight {
    pub fn boundary_count(&self) -> usize {
        self.perimeters.len()
    }

    pub fn euler_characteristic(&self) -> i32 {
        2 - 2 * self.genus as i32 - self.perimeters.len() as i32
    }

    pub fn is_stable(&self) -> bool {
        self.euler_characteristic() < 0
    }
}

/// A monomial `coef · N^e · Π Tr H^{ℓ_i}` of the action.
type TraceMonomials = BTreeMap<(i32, Vec<u32>), f64>;

fn push(m: &mut TraceMonomials, e: i32, mut ls: Vec<u32>, c: f64) {
    ls.sort_unstable();
    *m.entry((e, ls)).or_insert(0.0) += c;
}

/// Parts of `Tr D^n = 2N Tr H^n + Σ_r C(n,r) Tr H^{n-r} Tr H^r`.
fn trace_d_parts(n: u32) -> Vec<(f64, i32, Vec<u32>)> {
    let mut parts = vec![(2.0, 1, vec![n])];
    for r in 1..n {
        parts.push((binom::<f64>(n, r), 0, vec![n - r, r]));
    }
    parts
}

/// Monomials of `S - S_0`.
fn interaction_monomials(spec: &ModelSpec) -> TraceMonomials {
    let t = spec.t;
    let mut m = TraceMonomials::new();
    if spec.plain_1mm {
        for (&n, &a) in &spec.alpha {
            push(&mut m, 1, vec![n], -a / (t * n as f64));
        }
        return m;
    }
    // Tr V(D) with V(x) = (1/2t)(x²/2 - Σ α_n x^n/n), minus the free part.
    push(&mut m, 0, vec![1, 1], 1.0 / (2.0 * t));
    for (&n, &a) in &spec.alpha {
        for (c, e, ls) in trace_d_parts(n) {
            push(&mut m, e, ls, -a * c / (2.0 * t * n as f64));
        }
    }
    for mt in &spec.multitrace {
        let s = mt.orders.len() as i32;
        let mut acc: Vec<(f64, i32, Vec<u32>)> = vec![(1.0, 0, vec![])];
        for &n in &mt.orders {
            let mut next = vec![];
            for (c0, e0, l0) in &acc {
                for (c, e, ls) in trace_d_parts(n) {
                    let mut l = l0.clone();
                    l.extend(ls);
                    next.push((c0 * c, e0 + e, l));
                }
            }
            acc = next;
        }
        let pref = -mt.coupling * t.powi(4 * s);
        for (c, e, ls) in acc {
            push(&mut m, e - 4 * s, ls, pref * c);
        }
    }
    m
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

/// Compiles `S - S_0` into Boltzmann weights `t^{(g)}_ℓ`.
pub fn compile_weights(spec: &ModelSpec) -> Result<Vec<CellWeight>> {
    spec.validate()?;
    let mut out = vec![];
    for ((e, ls), coef) in interaction_monomials(spec) {
        if coef == 0.0 {
            continue;
        }
        let k = ls.len() as i32;
        let two_g = 2 - k - e;
        if two_g < 0 || two_g % 2 != 0 {
            return Err(Error::InvalidModel(format!("monomial N^{e} Tr{ls:?} has no cell interpretation")));
        }
        let prod: f64 = ls.iter().map(|&l| l as f64).product();
        let weight = -coef * factorial(ls.len()) * prod * spec.t.powi(e);
        if !weight.is_finite() {
            return Err(Error::InvalidModel(format!("weight for {ls:?} is not finite")));
        }
        out.push(CellWeight { genus: (two_g / 2) as u32, perimeters: ls, weight });
    }
    out.sort_by(|a, b| (a.genus, a.perimeters.len(), &a.perimeters).cmp(&(b.genus, b.perimeters.len(), &b.perimeters)));
    Ok(out)
}

/// Symmetric polynomial `T_{h,k}`; `coeffs[ℓ]` (ℓ sorted) is the coefficient
/// of every distinct monomial `Π s_i^{π(ℓ)_i}` in the orbit of ℓ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionPoly {
    pub h: u32,
    pub k: usize,
    pub coeffs: BTreeMap<Vec<u32>, f64>,
}

/// Distinct permutations of a sorted multiset.
pub fn distinct_permutations(sorted: &[u32]) -> Vec<Vec<u32>> {
    let mut cur = sorted.to_vec();
    let mut out = vec![cur.clone()];
    loop {
        // next lexicographic permutation
        let n = cur.len();
        if n < 2 {
            return out;
        }
        let mut i = n - 1;
        while i > 0 && cur[i - 1] >= cur[i] {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        let mut j = n - 1;
        while cur[j] <= cur[i - 1] {
            j -= 1;
        }
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

fn stabilizer(ls: &[u32]) -> f64 {
    let mut counts = BTreeMap::new();
    for l in ls {
        *counts.entry(*l).or_insert(0usize) += 1;
    }
    counts.values().map(|&c| factorial(c)).product()
}

impl InteractionPoly {
    /// Every distinct monomial as (exponent per variable, coefficient).
    pub fn monomials(&self) -> Vec<(Vec<u32>, f64)> {
        let mut out = vec![];
        for (ls, c) in &self.coeffs {
            for p in distinct_permutations(ls) {
                out.push((p, *c));
            }
        }
        out
    }

    pub fn eval(&self, s: &[f64]) -> f64 {
        assert_eq!(s.len(), self.k);
        self.monomials()
            .iter()
            .map(|(e, c)| c * e.iter().zip(s).map(|(&a, x)| x.powi(a as i32)).product::<f64>())
            .sum()
    }

    /// Coefficient of `ξ^a η^b` (two-variable polynomials only).
    pub fn nu(&self, a: u32, b: u32) -> f64 {
        assert_eq!(self.k, 2);
        let key = if a <= b { vec![a, b] } else { vec![b, a] };
        self.coeffs.get(&key).copied().unwrap_or(0.0)
    }
}

/// `T_{h,k}` for every (h,k) that occurs, including `T_{0,1}` with its `-ξ²/2`.
pub fn interactions(spec: &ModelSpec) -> Result<Vec<InteractionPoly>> {
    let weights = compile_weights(spec)?;
    let mut map: BTreeMap<(u32, usize), BTreeMap<Vec<u32>, f64>> = BTreeMap::new();
    map.entry((0, 1)).or_default().insert(vec![2], -0.5);
    for w in &weights {
        let k = w.perimeters.len();
        let prod: f64 = w.perimeters.iter().map(|&l| l as f64).product();
        let c = w.weight / prod * stabilizer(&w.perimeters) / factorial(k);
        *map.entry((w.genus, k)).or_default().entry(w.perimeters.clone()).or_insert(0.0) += c;
    }
    Ok(map.into_iter().map(|((h, k), coeffs)| InteractionPoly { h, k, coeffs }).collect())
}

pub fn find_interaction(polys: &[InteractionPoly], h: u32, k: usize) -> Option<&InteractionPoly> {
    polys.iter().find(|p| p.h == h && p.k == k)
}

fn check_hermitian(h: &Hermitian) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::NotHermitian(f64::INFINITY));
    }
    let asym = (h - h.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if asym > 1e-12 * (1.0 + h.iter().fold(0.0f64, |m, z| m.max(z.norm()))) {
        return Err(Error::NotHermitian(asym));
    }
    Ok(())
}

/// `Tr X^k` for `k = 0..=kmax` (real parts).
pub fn power_traces(x: &Hermitian, kmax: u32) -> Vec<f64> {
    let mut out = vec![x.nrows() as f64];
    let mut p = x.clone();
    for k in 1..=kmax {
        if k > 1 {
            p = &p * x;
        }
        out.push(p.trace().re);
    }
    out
}

fn max_order(spec: &ModelSpec) -> u32 {
    let a = spec.alpha.keys().copied().max().unwrap_or(2);
    let m = spec.multitrace.iter().flat_map(|m| m.orders.iter().copied()).max().unwrap_or(2);
    a.max(m).max(2)
}

/// Literal spectral action on the Dirac operator `D = H ⊗ 1 + 1 ⊗ Hᵀ`.
/// In `plain_1mm` mode this is the single-trace action `(N/t) Tr(H²/2 - Σ α_n H^n/n)`.
pub fn action_direct(spec: &ModelSpec, h: &Hermitian) -> Result<f64> {
    spec.validate()?;
    check_hermitian(h)?;
    let n = h.nrows();
    let t = spec.t;
    let kmax = max_order(spec);
    if spec.plain_1mm {
        let tr = power_traces(h, kmax);
        let mut v = tr[2] / 2.0;
        for (&k, &a) in &spec.alpha {
            v -= a * tr[k as usize] / k as f64;
        }
        return Ok(n as f64 / t * v);
    }
    let id = Hermitian::identity(n, n);
    let d = h.kronecker(&id) + id.kronecker(&h.transpose());
    let tr = power_traces(&d, kmax);
    let mut v = tr[2] / 2.0;
    for (&k, &a) in &spec.alpha {
        v -= a * tr[k as usize] / k as f64;
    }
    let mut s = v / (2.0 * t);
    let nt = n as f64 / t;
    for mt in &spec.multitrace {
        let sc = mt.orders.len() as i32;
        let prod: f64 = mt.orders.iter().map(|&o| tr[o as usize]).product();
        s -= nt.powi(-4 * sc) * mt.coupling * prod;
    }
    Ok(s)
}

/// `S_0 + S_int` from compiled weights.
pub fn action_compiled(spec: &ModelSpec, h: &Hermitian) -> Result<f64> {
    let weights = compile_weights(spec)?;
    check_hermitian(h)?;
    let n = h.nrows() as f64;
    let t = spec.t;
    let kmax = weights.iter().flat_map(|w| w.perimeters.iter().copied()).max().unwrap_or(2).max(2);
    let tr = power_traces(h, kmax);
    Ok(action_from_traces(&weights, t, n, &tr))
}

/// Compiled action from power traces `tr[k] = Tr H^k`.
pub fn action_from_traces(weights: &[CellWeight], t: f64, n: f64, tr: &[f64]) -> f64 {
    let mut s = n / (2.0 * t) * tr[2];
    for w in weights {
        let chi = w.euler_characteristic();
        let p: f64 = w.perimeters.iter().map(|&l| tr[l as usize] / l as f64).product();
        s -= (n / t).powi(chi) / factorial(w.perimeters.len()) * w.weight * p;
    }
    s
}

/// Hermitian matrix with entries uniform in `[-scale, scale]` (real and imaginary parts).
pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Hermitian {
    let mut h = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = Complex64::new(rng.gen_range(-scale..=scale), 0.0);
        for j in i + 1..n {
            let z = Complex64::new(rng.gen_range(-scale..=scale), rng.gen_range(-scale..=scale));
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

/// Model with random couplings `|α| ≤ 0.3`, `|α̂| ≤ 0.3`, one or two traces.
pub fn random_spec<R: Rng>(rng: &mut R) -> ModelSpec {
    let mut spec = ModelSpec::gaussian(rng.gen_range(0.3..2.0));
    for n in 3..=6 {
        if rng.gen_bool(0.6) {
            spec = spec.with_alpha(n, rng.gen_range(-0.3..=0.3));
        }
    }
    for _ in 0..rng.gen_range(0..=2) {
        let s = rng.gen_range(1..=2);
        let mut orders: Vec<u32> = (0..s).map(|_| rng.gen_range(1..=4)).collect();
        orders.sort_unstable();
        spec = spec.with_multitrace(orders, rng.gen_range(-0.3..=0.3));
    }
    spec
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionCheck {
    pub trials: usize,
    /// max |direct - compiled| / (1 + |direct|).
    pub max_gap: f64,
    pub worst: Option<ModelSpec>,
}

/// Compares both action evaluators on random matrices (N = 2..=6) and random models.
pub fn action_equivalence(seed: u64, trials: usize) -> Result<ActionCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ActionCheck { trials, max_gap: 0.0, worst: None };
    for _ in 0..trials {
        let spec = random_spec(&mut rng);
        let n = rng.gen_range(2..=6);
        let h = random_hermitian(&mut rng, n, 1.0);
        let a = action_direct(&spec, &h)?;
        let gap = (a - action_compiled(&spec, &h)?).abs() / (1.0 + a.abs());
        if gap > out.max_gap || out.worst.is_none() {
            out.max_gap = out.max_gap.max(gap);
            out.worst = Some(spec);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_model_has_one_cylinder() {
        let w = compile_weights(&ModelSpec::gaussian(0.5)).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].perimeters, vec![1, 1]);
        assert_eq!(w[0].genus, 0);
        assert!((w[0].weight + 2.0).abs() < 1e-15);
    }

    #[test]
    fn plain_quartic_is_a_single_disk() {
        let w = compile_weights(&ModelSpec::plain(1.0).with_alpha(4, 0.3)).unwrap();
        assert_eq!(w, vec![CellWeight { genus: 0, perimeters: vec![4], weight: 0.3 }]);
    }

    #[test]
    fn quartic_cylinders() {
        let w = compile_weights(&ModelSpec::gaussian(2.0).with_alpha(4, 0.1)).unwrap();
        let get = |p: &[u32]| w.iter().find(|c| c.perimeters == p).unwrap().weight;
        assert!((get(&[4]) - 0.1).abs() < 1e-15);
        assert!((get(&[1, 3]) - 6.0 * 0.1 / 2.0).abs() < 1e-15);
        assert!((get(&[2, 2]) - 6.0 * 0.1 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn stable_cells_have_genus_s_plus_one() {
        let spec = ModelSpec::gaussian(0.7).with_multitrace(vec![2, 3], 0.2);
        for w in compile_weights(&spec).unwrap() {
            if w.is_stable() {
                assert_eq!(w.genus, 3);
            }
        }
    }

    #[test]
    fn t02_of_cylinder_only_model() {
        let t = 0.8;
        let polys = interactions(&ModelSpec::gaussian(t)).unwrap();
        let t02 = find_interaction(&polys, 0, 2).unwrap();
        assert!((t02.eval(&[0.3, -1.7]) - (-0.3 * -1.7 / t)).abs() < 1e-14);
        let t01 = find_interaction(&polys, 0, 1).unwrap();
        assert!((t01.eval(&[1.5]) + 1.125).abs() < 1e-15);
    }

    #[test]
    fn nu_of_square_cylinder() {
        let spec = ModelSpec::gaussian(1.0).with_alpha(4, 0.1);
        let polys = interactions(&spec).unwrap();
        let t02 = find_interaction(&polys, 0, 2).unwrap();
        let c22 = 0.6;
        assert!((t02.nu(2, 2) - c22 / 4.0).abs() < 1e-15);
        // ν_{1,3} = ν_{3,1} = t_{1,3}/6
        assert!((t02.nu(3, 1) - 0.6 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn one_by_one_dirac() {
        let h = Hermitian::from_element(1, 1, Complex64::new(0.7, 0.0));
        let s = action_direct(&ModelSpec::gaussian(2.0), &h).unwrap();
        assert!((s - 0.49 / 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut h = Hermitian::zeros(2, 2);
        h[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(action_direct(&ModelSpec::gaussian(1.0), &h), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn permutations_of_multiset() {
        assert_eq!(distinct_permutations(&[1, 1, 2]).len(), 3);
        assert_eq!(distinct_permutations(&[1, 2, 3]).len(), 6);
    }
}
