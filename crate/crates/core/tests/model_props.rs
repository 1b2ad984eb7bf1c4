use btrengine::model::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Hermitian {
    let mut h = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = Complex64::new(rng.gen_range(-1.0..1.0) * scale, 0.0);
        for j in i + 1..n {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale;
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

fn random_spec(rng: &mut ChaCha8Rng) -> ModelSpec {
    let mut spec = ModelSpec::gaussian(rng.gen_range(0.3..2.0));
    for n in 3..=5 {
        if rng.gen_bool(0.7) {
            spec = spec.with_alpha(n, rng.gen_range(-0.3..0.3));
        }
    }
    if rng.gen_bool(0.6) {
        let s = rng.gen_range(1..=2);
        let mut orders: Vec<u32> = (0..s).map(|_| rng.gen_range(1..=4)).collect();
        orders.sort();
        spec = spec.with_multitrace(orders, rng.gen_range(-0.3..0.3));
    }
    if rng.gen_bool(0.3) {
        spec = spec.with_multitrace(vec![4], rng.gen_range(-0.3..0.3));
    }
    spec
}

#[test]
fn compiled_action_matches_dirac_action() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let spec = random_spec(&mut rng);
        let n = rng.gen_range(2..=6);
        let h = random_hermitian(&mut rng, n, 1.0);
        let a = action_direct(&spec, &h).unwrap();
        let b = action_compiled(&spec, &h).unwrap();
        assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{spec:?}: {a} vs {b}");
    }
}

#[test]
fn plain_actions_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let spec = ModelSpec::plain(0.9).with_alpha(3, 0.2).with_alpha(4, -0.1);
    for _ in 0..10 {
        let h = random_hermitian(&mut rng, 4, 1.0);
        let a = action_direct(&spec, &h).unwrap();
        let b = action_compiled(&spec, &h).unwrap();
        assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }
}

fn eigenvalues(h: &Hermitian) -> Vec<f64> {
    h.clone().symmetric_eigenvalues().iter().copied().collect()
}

/// Σ_k (1/k!) Σ_{i_1..i_k} T_k(λ_{i_1},…,λ_{i_k}) summed over all index tuples.
fn interaction_sum(spec: &ModelSpec, lam: &[f64]) -> f64 {
    let n = lam.len() as f64;
    let polys = interactions(spec).unwrap();
    let mut total = 0.0;
    for p in &polys {
        let pref = (n / spec.t).powi(2 - 2 * p.h as i32 - p.k as i32);
        let fact: f64 = (1..=p.k).map(|j| j as f64).product();
        let mut idx = vec![0usize; p.k];
        loop {
            let s: Vec<f64> = idx.iter().map(|&i| lam[i]).collect();
            total += pref * p.eval(&s) / fact;
            let mut j = 0;
            while j < p.k {
                idx[j] += 1;
                if idx[j] < lam.len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == p.k {
                break;
            }
        }
    }
    total
}

#[test]
fn interaction_evaluation_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..30 {
        let spec = random_spec(&mut rng);
        let n = rng.gen_range(2..=5);
        let h = random_hermitian(&mut rng, n, 1.0);
        let s = action_direct(&spec, &h).unwrap();
        let lhs = interaction_sum(&spec, &eigenvalues(&h));
        assert!((lhs + s).abs() <= 1e-9 * (1.0 + s.abs()), "{lhs} vs {}", -s);
    }
}

#[test]
fn stable_weights_are_linear_in_couplings() {
    let a = ModelSpec::gaussian(0.6).with_multitrace(vec![1, 3], 0.1);
    let b = ModelSpec::gaussian(0.6).with_multitrace(vec![1, 3], 0.2);
    let wa = compile_weights(&a).unwrap();
    let wb = compile_weights(&b).unwrap();
    for (x, y) in wa.iter().zip(&wb) {
        assert_eq!(x.perimeters, y.perimeters);
        if x.is_stable() {
            assert!((2.0 * x.weight - y.weight).abs() < 1e-14 * y.weight.abs().max(1.0));
        } else {
            assert_eq!(x.weight, y.weight);
        }
        assert_eq!(x.is_stable(), x.euler_characteristic() < 0);
    }
}
