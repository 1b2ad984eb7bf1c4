//! Exact Wick-expansion oracle for correlators of the formal matrix model.

use crate::algebra::{rat_string, rat_to_f64, BigRational};
use crate::model::{compile_weights, CellWeight, ModelSpec};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

/// Finite sum `Σ c · N^a · t^b` with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct NLaurent {
    terms: BTreeMap<(i32, i32), BigRational>,
}

impl NLaurent {
    pub fn zero() -> Self {
        NLaurent::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, 0, BigRational::one())
    }

    pub fn monomial(n_exp: i32, t_exp: i32, c: BigRational) -> Self {
        let mut s = NLaurent::zero();
        s.add_term(n_exp, t_exp, c);
        s
    }

    pub fn add_term(&mut self, n_exp: i32, t_exp: i32, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry((n_exp, t_exp)).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&(n_exp, t_exp));
        }
    }

    pub fn terms(&self) -> &BTreeMap<(i32, i32), BigRational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, n_exp: i32, t_exp: i32) -> BigRational {
        self.terms.get(&(n_exp, t_exp)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for ((a, b), c) in &o.terms {
            out.add_term(*a, *b, c.clone());
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut out = NLaurent::zero();
        for ((a, b), v) in &self.terms {
            out.add_term(*a, *b, v * c);
        }
        out
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = NLaurent::zero();
        for ((a1, b1), c1) in &self.terms {
            for ((a2, b2), c2) in &o.terms {
                out.add_term(a1 + a2, b1 + b2, c1 * c2);
            }
        }
        out
    }

    /// Multiplies by `N^a t^b`.
    pub fn shift(&self, a: i32, b: i32) -> Self {
        NLaurent { terms: self.terms.iter().map(|((x, y), c)| ((x + a, y + b), c.clone())).collect() }
    }

    pub fn eval(&self, n: f64, t: f64) -> f64 {
        self.terms.iter().map(|((a, b), c)| rat_to_f64(c) * n.powi(*a) * t.powi(*b)).sum()
    }

    pub fn n_exponents(&self) -> Vec<i32> {
        let mut v: Vec<i32> = self.terms.keys().map(|k| k.0).collect();
        v.dedup();
        v
    }
}

fn double_factorial(m: u32) -> BigInt {
    // (2m-1)!!
    (1..=m).fold(BigInt::one(), |acc, j| acc * BigInt::from(2 * j - 1))
}

fn binomial(n: u32, k: u32) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, j| acc * BigInt::from(n - j) / BigInt::from(j + 1))
}

/// Loop counts of all pairings: `counts[L]` = number of pairings with L loops.
fn enumerate_pairings(powers: &[u32]) -> Vec<u64> {
    let n: usize = powers.iter().map(|&p| p as usize).sum();
    let mut gamma = vec![0u8; n];
    let mut off = 0;
    for &p in powers {
        let p = p as usize;
        for j in 0..p {
            gamma[off + j] = (off + (j + 1) % p) as u8;
        }
        off += p;
    }
    if n == 0 {
        return vec![1];
    }
    let partners: Vec<usize> = (1..n).collect();
    let results: Vec<Vec<u64>> = partners
        .par_iter()
        .map(|&j| {
            let mut sigma = vec![0u8; n];
            sigma[0] = j as u8;
            sigma[j] = 0;
            let used = 1u32 | (1u32 << j);
            let mut counts = vec![0u64; n + 1];
            recurse(&gamma, &mut sigma, used, n, &mut counts);
            counts
        })
        .collect();
    let mut total = vec![0u64; n + 1];
    for r in results {
        for (a, b) in total.iter_mut().zip(r) {
            *a += b;
        }
    }
    total
}

fn recurse(gamma: &[u8], sigma: &mut [u8], used: u32, n: usize, counts: &mut [u64]) {
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    if used == full {
        counts[faces(gamma, sigma)] += 1;
        return;
    }
    let first = (!used).trailing_zeros() as usize;
    let mut rest = full & !used & !(1u32 << first);
    while rest != 0 {
        let j = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        sigma[first] = j as u8;
        sigma[j] = first as u8;
        recurse(gamma, sigma, used | (1 << first) | (1 << j), n, counts);
    }
}

/// Number of cycles of `γ ∘ σ`.
fn faces(gamma: &[u8], sigma: &[u8]) -> usize {
    let mut seen = 0u32;
    let mut cycles = 0;
    for s in 0..gamma.len() {
        if seen & (1 << s) != 0 {
            continue;
        }
        cycles += 1;
        let mut h = s;
        while seen & (1 << h) == 0 {
            seen |= 1 << h;
            h = gamma[sigma[h] as usize] as usize;
        }
    }
    cycles
}

type MomentTable = Arc<Vec<u64>>;

/// Gaussian moments with a shared cache keyed by the sorted power list.
pub struct WickOracle {
    budget: u32,
    cache: Mutex<HashMap<Vec<u32>, MomentTable>>,
}

impl WickOracle {
    pub fn new(budget: u32) -> Self {
        assert!(budget <= 30, "half-edge labels are stored in u32 masks");
        WickOracle { budget, cache: Mutex::new(HashMap::new()) }
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    fn loop_counts(&self, sorted: &[u32]) -> MomentTable {
        if let Some(v) = self.cache.lock().unwrap().get(sorted) {
            return v.clone();
        }
        let v = Arc::new(enumerate_pairings(sorted));
        self.cache.lock().unwrap().insert(sorted.to_vec(), v.clone());
        v
    }

    /// `E[Π Tr H^{ℓ_j}]` under `E[H_ij H_kl] = (t/N) δ_il δ_jk`.
    pub fn gaussian_moment(&self, powers: &[u32]) -> Result<NLaurent> {
        let zeros = powers.iter().filter(|&&p| p == 0).count() as i32;
        let mut p: Vec<u32> = powers.iter().copied().filter(|&p| p > 0).collect();
        p.sort_unstable();
        let total: u32 = p.iter().sum();
        if total % 2 == 1 {
            return Ok(NLaurent::zero());
        }
        if total > self.budget {
            return Err(Error::Budget(format!("Gaussian moment {p:?} has {total} half-edges > {}", self.budget)));
        }
        let half = (total / 2) as i32;
        let mut out = NLaurent::zero();
        for (l, &c) in self.loop_counts(&p).iter().enumerate() {
            if c > 0 {
                out.add_term(l as i32 - half + zeros, half, BigRational::from_integer(BigInt::from(c)));
            }
        }
        Ok(out)
    }

    /// Moment under the covariance dressed by the trace coupling,
    /// `E[H_ij H_kl] = (t/N) δ_il δ_jk + κ (t/N²) δ_ij δ_kl`.
    pub fn dressed_moment(&self, powers: &[u32], kappa: &BigRational) -> Result<NLaurent> {
        if kappa.is_zero() {
            return self.gaussian_moment(powers);
        }
        let mut out = NLaurent::zero();
        let mut d = vec![0u32; powers.len()];
        loop {
            let m2: u32 = d.iter().sum();
            if m2 % 2 == 0 {
                let m = m2 / 2;
                let mult = d.iter().zip(powers).fold(double_factorial(m), |acc, (&di, &a)| acc * binomial(a, di));
                let reduced: Vec<u32> = powers.iter().zip(&d).map(|(a, di)| a - di).collect();
                let g = self.gaussian_moment(&reduced)?;
                let k = num_traits::pow(kappa.clone(), m as usize) * BigRational::from_integer(mult);
                out = out.add(&g.scale(&k).shift(-2 * m as i32, m as i32));
            }
            let mut j = 0;
            while j < d.len() {
                d[j] += 1;
                if d[j] <= powers[j] {
                    break;
                }
                d[j] = 0;
                j += 1;
            }
            if j == d.len() {
                break;
            }
        }
        Ok(out)
    }
}

/// One formal coupling of the perturbative expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingVar {
    pub cell: CellWeight,
}

impl CouplingVar {
    pub fn label(&self) -> String {
        let p: Vec<String> = self.cell.perimeters.iter().map(|l| l.to_string()).collect();
        format!("w[{};{}]", self.cell.genus, p.join(","))
    }
}

/// Series in formal couplings (one exponent per variable) truncated at total order `order`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingSeries {
    pub vars: Vec<CouplingVar>,
    pub order: u32,
    pub terms: BTreeMap<Vec<u32>, NLaurent>,
}

fn multi_degrees(nvars: usize, order: u32) -> Vec<Vec<u32>> {
    let mut out = vec![];
    let mut cur = vec![0u32; nvars];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for a in 0..=left {
            cur[i] = a;
            rec(i + 1, left - a, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, order, &mut cur, &mut out);
    out.sort_by_key(|d| (d.iter().sum::<u32>(), d.clone()));
    out
}

impl CouplingSeries {
    pub fn constant(vars: Vec<CouplingVar>, order: u32, c: NLaurent) -> Self {
        let mut terms = BTreeMap::new();
        let zero = vec![0; vars.len()];
        if !c.is_zero() {
            terms.insert(zero, c);
        }
        CouplingSeries { vars, order, terms }
    }

    pub fn get(&self, deg: &[u32]) -> NLaurent {
        self.terms.get(deg).cloned().unwrap_or_default()
    }

    fn insert(&mut self, deg: Vec<u32>, v: NLaurent) {
        if v.is_zero() {
            self.terms.remove(&deg);
        } else {
            self.terms.insert(deg, v);
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (d, v) in &o.terms {
            let s = out.get(d).add(v);
            out.insert(d.clone(), s);
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut out = self.clone();
        out.terms = self.terms.iter().map(|(d, v)| (d.clone(), v.scale(c))).filter(|(_, v)| !v.is_zero()).collect();
        out
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = CouplingSeries { vars: self.vars.clone(), order: self.order.min(o.order), terms: BTreeMap::new() };
        for (d1, v1) in &self.terms {
            for (d2, v2) in &o.terms {
                let d: Vec<u32> = d1.iter().zip(d2).map(|(a, b)| a + b).collect();
                if d.iter().sum::<u32>() > out.order {
                    continue;
                }
                let s = out.get(&d).add(&v1.mul(v2));
                out.insert(d, s);
            }
        }
        out
    }

    /// Exact division by a series whose zero-degree term is 1.
    pub fn div(&self, z: &Self) -> Result<Self> {
        let zero = vec![0; self.vars.len()];
        if z.get(&zero) != NLaurent::one() {
            return Err(Error::Missing("divisor must have unit constant term".into()));
        }
        let order = self.order.min(z.order);
        let mut out = CouplingSeries { vars: self.vars.clone(), order, terms: BTreeMap::new() };
        for d in multi_degrees(self.vars.len(), order) {
            let mut acc = self.get(&d);
            for (b, zb) in &z.terms {
                if b.iter().all(|x| *x == 0) || b.iter().zip(&d).any(|(x, y)| x > y) {
                    continue;
                }
                let rest: Vec<u32> = d.iter().zip(b).map(|(x, y)| x - y).collect();
                let q = out.get(&rest);
                if !q.is_zero() {
                    acc = acc.add(&zb.mul(&q).scale(&-BigRational::one()));
                }
            }
            out.insert(d, acc);
        }
        Ok(out)
    }

    /// Numeric value at the compiled coupling values.
    pub fn eval(&self, n: f64, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|(d, v)| {
                let w: f64 = d.iter().zip(&self.vars).map(|(a, var)| var.cell.weight.powi(*a as i32)).product();
                w * v.eval(n, t)
            })
            .sum()
    }

    /// Value of an extracted genus component (N-exponent 0 only).
    pub fn value(&self, t: f64) -> f64 {
        self.eval(1.0, t)
    }

    pub fn monomial_label(&self, deg: &[u32]) -> String {
        let parts: Vec<String> = deg
            .iter()
            .zip(&self.vars)
            .filter(|(a, _)| **a > 0)
            .map(|(a, v)| if *a == 1 { v.label() } else { format!("{}^{}", v.label(), a) })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }

    /// Rows `(monomial, N_exponent, coefficient)`; the t-power is part of the monomial.
    pub fn rows(&self) -> Vec<(String, i32, String)> {
        let mut out = vec![];
        for (d, v) in &self.terms {
            let base = self.monomial_label(d);
            for ((a, b), c) in v.terms() {
                let mono = match (base.as_str(), *b) {
                    (m, 0) => m.to_string(),
                    ("1", b) => format!("t^{b}"),
                    (m, b) => format!("{m}*t^{b}"),
                };
                out.push((mono, *a, rat_string(c)));
            }
        }
        out
    }
}

/// How the built-in trace coupling t^{(0)}_{1,1} is treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CylinderMode {
    /// Absorbed exactly into the Gaussian covariance.
    Dressed,
    /// Expanded like every other coupling.
    Perturbative,
}

/// Perturbative expansion of `ρ₀[e^{-S_int} Π Tr H^{ℓ_j}] / Z_N`.
pub struct Expansion<'a> {
    oracle: &'a WickOracle,
    vars: Vec<CouplingVar>,
    kappa: BigRational,
    order: u32,
}

impl<'a> Expansion<'a> {
    pub fn new(oracle: &'a WickOracle, spec: &ModelSpec, order: u32, mode: CylinderMode) -> Result<Self> {
        let mut kappa = BigRational::zero();
        let mut vars = vec![];
        for cell in compile_weights(spec)? {
            if mode == CylinderMode::Dressed && cell.genus == 0 && cell.perimeters == [1, 1] {
                // t·t₁₁ = -1 for the built-in term, so κ = t t₁₁ / (1 - t t₁₁) = -1/2
                let tt = cell.weight * spec.t;
                if (tt + 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidModel(format!("unexpected t·t11 = {tt}")));
                }
                kappa = BigRational::new(BigInt::from(-1), BigInt::from(2));
                continue;
            }
            vars.push(CouplingVar { cell });
        }
        Ok(Expansion { oracle, vars, kappa, order })
    }

    pub fn vars(&self) -> &[CouplingVar] {
        &self.vars
    }

    /// Disconnected, Z-normalized correlator of the given insertions.
    pub fn correlator(&self, insertions: &[u32]) -> Result<CouplingSeries> {
        let num = self.unnormalized(insertions)?;
        if insertions.is_empty() {
            return Ok(CouplingSeries::constant(self.vars.clone(), self.order, NLaurent::one()));
        }
        let z = self.unnormalized(&[])?;
        num.div(&z)
    }

    fn unnormalized(&self, insertions: &[u32]) -> Result<CouplingSeries> {
        let degs = multi_degrees(self.vars.len(), self.order);
        let terms: Vec<Result<(Vec<u32>, NLaurent)>> = degs
            .par_iter()
            .map(|d| {
                let mut powers = insertions.to_vec();
                let mut pref = NLaurent::one();
                for (a, v) in d.iter().zip(&self.vars) {
                    if *a == 0 {
                        continue;
                    }
                    let chi = v.cell.euler_characteristic();
                    let k = v.cell.perimeters.len() as u32;
                    let kf: u64 = (1..=k as u64).product();
                    let pl: u64 = v.cell.perimeters.iter().map(|&l| l as u64).product();
                    let af: u64 = (1..=*a as u64).product();
                    let den = BigInt::from(kf * pl).pow(*a) * BigInt::from(af);
                    pref = pref.mul(&NLaurent::monomial(chi * *a as i32, -chi * *a as i32, BigRational::new(BigInt::one(), den)));
                    for _ in 0..*a {
                        powers.extend(&v.cell.perimeters);
                    }
                }
                let total: u32 = powers.iter().sum();
                if total > self.oracle.budget() {
                    let s = CouplingSeries { vars: self.vars.clone(), order: self.order, terms: BTreeMap::new() };
                    return Err(Error::Budget(format!(
                        "monomial {} with insertions {insertions:?} needs {total} half-edges",
                        s.monomial_label(d)
                    )));
                }
                let m = self.oracle.dressed_moment(&powers, &self.kappa)?;
                Ok((d.clone(), pref.mul(&m)))
            })
            .collect();
        let mut out = CouplingSeries { vars: self.vars.clone(), order: self.order, terms: BTreeMap::new() };
        for r in terms {
            let (d, v) = r?;
            out.insert(d, v);
        }
        Ok(out)
    }

    /// Every sub-correlator needed for the cumulant of `insertions`, keyed by subset (bitmask).
    pub fn family(&self, insertions: &[u32]) -> Result<BTreeMap<u32, CouplingSeries>> {
        let n = insertions.len();
        let mut by_multiset: HashMap<Vec<u32>, CouplingSeries> = HashMap::new();
        let mut out = BTreeMap::new();
        for mask in 1u32..(1 << n) {
            let mut sub: Vec<u32> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| insertions[i]).collect();
            sub.sort_unstable();
            if !by_multiset.contains_key(&sub) {
                let c = self.correlator(&sub)?;
                by_multiset.insert(sub.clone(), c);
            }
            out.insert(mask, by_multiset[&sub].clone());
        }
        Ok(out)
    }

    pub fn connected_correlator(&self, insertions: &[u32]) -> Result<CouplingSeries> {
        connected(&self.family(insertions)?, insertions.len())
    }

    /// `Q_{g;ℓ}` as an exact series (N-exponent 0, t-powers absorbed).
    pub fn stuffed_map_series(&self, g: u32, insertions: &[u32]) -> Result<CouplingSeries> {
        extract_genus(&self.connected_correlator(insertions)?, g, insertions.len())
    }

    pub fn stuffed_map_value(&self, g: u32, insertions: &[u32], t: f64) -> Result<f64> {
        Ok(self.stuffed_map_series(g, insertions)?.value(t))
    }
}

/// Set partitions of `{0..n}` as lists of bitmasks.
pub fn set_partitions(n: usize) -> Vec<Vec<u32>> {
    fn rec(i: usize, n: usize, blocks: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == n {
            out.push(blocks.clone());
            return;
        }
        for b in 0..blocks.len() {
            blocks[b] |= 1 << i;
            rec(i + 1, n, blocks, out);
            blocks[b] &= !(1 << i);
        }
        blocks.push(1 << i);
        rec(i + 1, n, blocks, out);
        blocks.pop();
    }
    let mut out = vec![];
    rec(0, n, &mut vec![], &mut out);
    out
}

/// Joint cumulant from the family of disconnected correlators (keyed by subset bitmask).
pub fn connected(family: &BTreeMap<u32, CouplingSeries>, n: usize) -> Result<CouplingSeries> {
    let full = family.get(&((1u32 << n) - 1)).ok_or_else(|| Error::Missing("full correlator".into()))?;
    let mut acc = CouplingSeries { vars: full.vars.clone(), order: full.order, terms: BTreeMap::new() };
    for part in set_partitions(n) {
        let k = part.len() as i64;
        let sign: i64 = if k % 2 == 1 { 1 } else { -1 };
        let fact: i64 = (1..k).product();
        let mut prod: Option<CouplingSeries> = None;
        for b in &part {
            let s = family.get(b).ok_or_else(|| Error::Missing(format!("sub-correlator for subset {b:#b}")))?;
            prod = Some(match prod {
                None => s.clone(),
                Some(p) => p.mul(s),
            });
        }
        let c = BigRational::from_integer(BigInt::from(sign * fact));
        acc = acc.add(&prod.unwrap().scale(&c));
    }
    Ok(acc)
}

/// Disconnected correlators from cumulants: `Ŵ(S) = Σ_{π ⊢ S} Π W(B)`.
pub fn moments_from_cumulants(cumulants: &BTreeMap<u32, CouplingSeries>, n: usize) -> Result<CouplingSeries> {
    let mut acc: Option<CouplingSeries> = None;
    for part in set_partitions(n) {
        let mut prod: Option<CouplingSeries> = None;
        for b in &part {
            let s = cumulants.get(b).ok_or_else(|| Error::Missing(format!("cumulant for subset {b:#b}")))?;
            prod = Some(match prod {
                None => s.clone(),
                Some(p) => p.mul(s),
            });
        }
        let p = prod.unwrap();
        acc = Some(match acc {
            None => p,
            Some(a) => a.add(&p),
        });
    }
    acc.ok_or_else(|| Error::Missing("empty insertion set".into()))
}

/// Genus-g part of a connected n-point series, returned as `Q_{g;ℓ}`.
pub fn extract_genus(series: &CouplingSeries, g: u32, n: usize) -> Result<CouplingSeries> {
    let top = 2 - n as i32;
    let target = top - 2 * g as i32;
    let mut out = CouplingSeries { vars: series.vars.clone(), order: series.order, terms: BTreeMap::new() };
    for (d, v) in &series.terms {
        let mut q = NLaurent::zero();
        for ((a, b), c) in v.terms() {
            if *a > top || (top - a) % 2 != 0 {
                return Err(Error::Missing(format!(
                    "stray N-exponent {a} in a connected {n}-point series (monomial {})",
                    series.monomial_label(d)
                )));
            }
            if *a == target {
                q.add_term(0, b + target, c.clone());
            }
        }
        out.insert(d.clone(), q);
    }
    Ok(out)
}

/// Exact rational value of a zero-degree NLaurent at rational t (used in tests).
pub fn exact_at(v: &NLaurent, n: &BigRational, t: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for ((a, b), c) in v.terms() {
        let pw = |x: &BigRational, e: i32| {
            let p = num_traits::pow(x.clone(), e.unsigned_abs() as usize);
            if e < 0 {
                p.recip()
            } else {
                p
            }
        };
        acc += c * pw(n, *a) * pw(t, *b);
    }
    acc
}

/// Largest |coefficient| as f64 (diagnostics).
pub fn max_coeff(v: &NLaurent) -> f64 {
    v.terms().values().map(|c| c.abs().to_f64().unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
}
