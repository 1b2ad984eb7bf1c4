//! Metropolis sampling of e^{-S(H)} dH over N×N Hermitian matrices.

use crate::curve::SpectralData;
use crate::model::{action_from_traces, compile_weights, CellWeight, Hermitian, ModelSpec};
use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// How a candidate matrix is drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proposal {
    /// `H' = H + step·G`, accepted with `min(1, e^{-ΔS})`.
    RandomWalk,
    /// `H' = √(1-step²) H + step·G` with G from the Gaussian part of the
    /// action, accepted with `min(1, e^{-ΔS_int})`. Exact for Gaussian models.
    #[default]
    Crank,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainConfig {
    /// Matrix size.
    pub n: usize,
    /// Total sweeps, burn-in included.
    pub sweeps: usize,
    pub burn_in: usize,
    pub step_size: f64,
    pub seed: u64,
    /// Keep every `thin`-th sweep after burn-in.
    pub thin: usize,
    pub proposal: Proposal,
    /// Highest moment estimated.
    pub max_moment: u32,
    /// Batches for the batch-means standard errors.
    pub batches: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            n: 100,
            sweeps: 11_000,
            burn_in: 1_000,
            step_size: 0.5,
            seed: 1,
            thin: 10,
            proposal: Proposal::Crank,
            max_moment: 6,
            batches: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub order: u32,
    /// `m̂_ℓ = t · (1/N) Tr H^ℓ`, averaged over retained sweeps.
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSample {
    pub t: f64,
    pub n: usize,
    /// Sorted eigenvalues of every retained sweep.
    pub eigenvalues: Vec<Vec<f64>>,
    pub acceptance_rate: f64,
    pub moments: Vec<MomentEstimate>,
}

impl SpectrumSample {
    pub fn moment(&self, order: u32) -> Option<&MomentEstimate> {
        self.moments.iter().find(|m| m.order == order)
    }

    /// All retained eigenvalues, sorted.
    pub fn pooled(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.eigenvalues.iter().flatten().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// `Tr H^k` for `k = 0..=kmax`, using `Tr H^{a+b} = Σ (H^a)_{ij} (H^b)_{ji}` to halve the products.
fn traces(h: &Hermitian, kmax: u32) -> Vec<f64> {
    let n = h.nrows();
    let half = (kmax as usize).div_ceil(2).max(1);
    let mut powers = vec![Hermitian::identity(n, n), h.clone()];
    for k in 2..=half {
        let next = &powers[k - 1] * h;
        powers.push(next);
    }
    let pair = |a: &Hermitian, b: &Hermitian| a.iter().zip(b.transpose().iter()).map(|(x, y)| (x * y).re).sum::<f64>();
    (0..=kmax as usize)
        .map(|k| {
            let a = k.div_ceil(2);
            pair(&powers[a], &powers[k - a])
        })
        .collect()
}

/// Hermitian matrix with density ∝ exp(-N/(2t) Tr G²).
fn gue(n: usize, t: f64, rng: &mut ChaCha8Rng) -> Hermitian {
    let sd = (t / n as f64).sqrt();
    let mut g = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        let d: f64 = StandardNormal.sample(rng);
        g[(i, i)] = Complex64::new(d * sd, 0.0);
        for j in i + 1..n {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let z = Complex64::new(re, im) * (sd / std::f64::consts::SQRT_2);
            g[(i, j)] = z;
            g[(j, i)] = z.conj();
        }
    }
    g
}

struct State {
    h: Hermitian,
    tr: Vec<f64>,
    s: f64,
}

fn evaluate(h: Hermitian, weights: &[CellWeight], t: f64, kmax: u32) -> Result<State> {
    let tr = traces(&h, kmax);
    let s = action_from_traces(weights, t, h.nrows() as f64, &tr);
    if !s.is_finite() {
        return Err(Error::Overflow(format!("action {s} (coupling too large?)")));
    }
    Ok(State { h, tr, s })
}

fn gaussian_part(t: f64, n: f64, tr: &[f64]) -> f64 {
    n / (2.0 * t) * tr[2]
}

/// Batch-means standard error of the mean.
fn batch_error(xs: &[f64], batches: usize) -> f64 {
    let b = batches.min(xs.len()).max(1);
    let per = xs.len() / b;
    if b < 2 || per == 0 {
        return f64::NAN;
    }
    let means: Vec<f64> = (0..b).map(|i| xs[i * per..(i + 1) * per].iter().sum::<f64>() / per as f64).collect();
    let m = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

/// Runs the chain from a GUE start and collects spectra of retained sweeps.
/// One sweep is one proposal of the full matrix.
pub fn metropolis_run(spec: &ModelSpec, cfg: &ChainConfig) -> Result<SpectrumSample> {
    if cfg.n == 0 || cfg.n > 512 {
        return Err(Error::InvalidModel(format!("matrix size {} outside 1..=512", cfg.n)));
    }
    if !(cfg.step_size > 0.0) || (cfg.proposal == Proposal::Crank && cfg.step_size > 1.0) {
        return Err(Error::InvalidModel(format!("step size {} out of range", cfg.step_size)));
    }
    if cfg.thin == 0 {
        return Err(Error::InvalidModel("thin must be positive".into()));
    }
    if cfg.sweeps <= cfg.burn_in {
        return Err(Error::EmptySample);
    }
    let weights = compile_weights(spec)?;
    let t = spec.t;
    let nf = cfg.n as f64;
    let kmax = weights.iter().flat_map(|w| w.perimeters.iter().copied()).max().unwrap_or(2).max(2).max(cfg.max_moment);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cur = evaluate(gue(cfg.n, t, &mut rng), &weights, t, kmax)?;
    let keep = (1.0 - cfg.step_size * cfg.step_size).max(0.0).sqrt();
    let mut accepted = 0usize;
    let mut eigenvalues = vec![];
    let mut series: Vec<Vec<f64>> = vec![vec![]; cfg.max_moment as usize + 1];
    for sweep in 0..cfg.sweeps {
        let g = gue(cfg.n, t, &mut rng);
        let (cand, log_ratio) = match cfg.proposal {
            Proposal::RandomWalk => {
                let c = evaluate(&cur.h + g * Complex64::new(cfg.step_size, 0.0), &weights, t, kmax)?;
                let d = cur.s - c.s;
                (c, d)
            }
            Proposal::Crank => {
                let c = evaluate(
                    &cur.h * Complex64::new(keep, 0.0) + g * Complex64::new(cfg.step_size, 0.0),
                    &weights,
                    t,
                    kmax,
                )?;
                let d = (cur.s - gaussian_part(t, nf, &cur.tr)) - (c.s - gaussian_part(t, nf, &c.tr));
                (c, d)
            }
        };
        let u: f64 = rand::Rng::gen(&mut rng);
        if log_ratio >= 0.0 || u < log_ratio.exp() {
            cur = cand;
            accepted += 1;
        }
        if sweep >= cfg.burn_in && (sweep - cfg.burn_in) % cfg.thin == 0 {
            let mut ev: Vec<f64> = cur.h.clone().symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            eigenvalues.push(ev);
            for (l, s) in series.iter_mut().enumerate() {
                s.push(t * cur.tr[l] / nf);
            }
        }
    }
    if eigenvalues.is_empty() {
        return Err(Error::EmptySample);
    }
    let moments = (1..=cfg.max_moment)
        .map(|l| {
            let xs = &series[l as usize];
            MomentEstimate { order: l, mean: xs.iter().sum::<f64>() / xs.len() as f64, std_error: batch_error(xs, cfg.batches) }
        })
        .collect();
    Ok(SpectrumSample {
        t,
        n: cfg.n,
        eigenvalues,
        acceptance_rate: accepted as f64 / cfg.sweeps as f64,
        moments,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    /// Kolmogorov–Smirnov distance between the pooled spectrum and φ(s)ds/t.
    pub ks: f64,
    /// Fraction of eigenvalues outside [a - margin, b + margin].
    pub outside_fraction: f64,
    pub support_flag: bool,
    /// Histogram rows (bin center, empirical density, φ(s)/t).
    pub histogram: Vec<(f64, f64, f64)>,
}

/// Compares the pooled sample with the large-N density.
pub fn compare_density(sample: &SpectrumSample, curve: &SpectralData<f64>, bins: usize) -> Result<DensityReport> {
    let pooled = sample.pooled();
    if pooled.is_empty() {
        return Err(Error::EmptySample);
    }
    let t = curve.t;
    // CDF on an angle grid: s = c - 2γ cos θ, ds = 2γ sin θ dθ
    let m = 4096;
    let h = std::f64::consts::PI / m as f64;
    let point = |j: usize| curve.center - 2.0 * curve.gamma * (h * j as f64).cos();
    let weight = |j: usize| {
        let th = h * j as f64;
        if j == 0 || j == m {
            0.0
        } else {
            curve.density(point(j)).unwrap_or(0.0) * 2.0 * curve.gamma * th.sin()
        }
    };
    let mut grid = vec![(point(0), 0.0)];
    let mut acc = 0.0;
    for j in 1..=m {
        acc += 0.5 * h * (weight(j - 1) + weight(j));
        grid.push((point(j), acc / t));
    }
    let cdf = |x: f64| -> f64 {
        if x <= grid[0].0 {
            return 0.0;
        }
        if x >= grid[m].0 {
            return grid[m].1;
        }
        let k = grid.partition_point(|g| g.0 <= x);
        let (x0, y0) = grid[k - 1];
        let (x1, y1) = grid[k];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    };
    let total = pooled.len() as f64;
    let mut ks = 0.0f64;
    for (i, &x) in pooled.iter().enumerate() {
        let f = cdf(x);
        ks = ks.max((f - i as f64 / total).abs()).max(((i + 1) as f64 / total - f).abs());
    }
    let margin = 0.1 * (curve.b - curve.a);
    let outside = pooled.iter().filter(|&&x| x < curve.a - margin || x > curve.b + margin).count() as f64 / total;
    let lo = pooled[0].min(curve.a);
    let hi = pooled[pooled.len() - 1].max(curve.b);
    let width = (hi - lo) / bins.max(1) as f64;
    let nbins = bins.max(1);
    let mut counts = vec![0usize; nbins];
    for &x in &pooled {
        counts[(((x - lo) / width) as usize).min(nbins - 1)] += 1;
    }
    let histogram = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let s = lo + (i as f64 + 0.5) * width;
            (s, c as f64 / (total * width), curve.density(s).unwrap_or(0.0) / t)
        })
        .collect();
    Ok(DensityReport { ks, outside_fraction: outside, support_flag: outside > 0.01, histogram })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traces_match_direct_powers() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = gue(5, 1.0, &mut rng);
        let tr = traces(&h, 7);
        let mut p = Hermitian::identity(5, 5);
        for (k, v) in tr.iter().enumerate() {
            assert!((p.trace().re - v).abs() < 1e-12 * (1.0 + v.abs()), "k={k}");
            p = &p * &h;
        }
    }

    #[test]
    fn batch_error_of_constant_is_zero() {
        assert_eq!(batch_error(&[2.0; 40], 4), 0.0);
    }
}
