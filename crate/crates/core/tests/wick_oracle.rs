use btrengine::algebra::{rat, rat_int};
use btrengine::model::ModelSpec;
use btrengine::wick::*;
use num_bigint::BigInt;
use num_rational::BigRational;
use std::collections::{BTreeMap, HashMap};

/// Loop-equation recursion for Gaussian moments: contract the first H of the
/// first trace with every other H. Independent of the pairing enumerator.
fn tutte(powers: &[u32], memo: &mut HashMap<Vec<u32>, NLaurent>) -> NLaurent {
    let mut p: Vec<u32> = powers.to_vec();
    let zeros = p.iter().filter(|&&x| x == 0).count() as i32;
    p.retain(|&x| x > 0);
    if zeros > 0 {
        return tutte(&p, memo).shift(zeros, 0);
    }
    if p.is_empty() {
        return NLaurent::one();
    }
    p[1..].sort_unstable();
    if let Some(v) = memo.get(&p) {
        return v.clone();
    }
    let a = p[0];
    let rest = &p[1..];
    let mut acc = NLaurent::zero();
    // split within the same trace
    for i in 0..=a.saturating_sub(2) {
        if a < 2 {
            break;
        }
        let mut q = vec![i, a - 2 - i];
        q.extend_from_slice(rest);
        acc = acc.add(&tutte(&q, memo));
    }
    // merge with another trace
    for (j, &b) in rest.iter().enumerate() {
        let mut q = vec![a + b - 2];
        q.extend(rest.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, x)| *x));
        acc = acc.add(&tutte(&q, memo).scale(&rat_int(b as i64)));
    }
    let v = acc.shift(-1, 1);
    memo.insert(p, v.clone());
    v
}

#[test]
fn enumerator_matches_loop_equations() {
    let oracle = WickOracle::new(18);
    let mut memo = HashMap::new();
    let cases: Vec<Vec<u32>> = vec![
        vec![2],
        vec![4],
        vec![6],
        vec![8],
        vec![1, 1],
        vec![3, 1],
        vec![2, 2],
        vec![3, 3],
        vec![4, 2, 2],
        vec![2, 2, 2],
        vec![5, 3, 2],
        vec![4, 4, 4],
        vec![6, 4, 2],
        vec![1, 1, 1, 1, 2],
        vec![6, 4, 4],
        vec![10],
    ];
    for c in cases {
        assert_eq!(oracle.gaussian_moment(&c).unwrap(), tutte(&c, &mut memo), "{c:?}");
    }
}

#[test]
fn catalan_numbers() {
    let oracle = WickOracle::new(18);
    let spec = ModelSpec::plain(1.0);
    let ex = Expansion::new(&oracle, &spec, 0, CylinderMode::Dressed).unwrap();
    let catalan = [1, 2, 5, 14, 42];
    for (k, cat) in (1..=5).zip(catalan) {
        let q = ex.stuffed_map_series(0, &[2 * k]).unwrap();
        let v = q.get(&[]);
        assert_eq!(v, NLaurent::monomial(0, k as i32 + 1, rat_int(cat)), "k={k}");
    }
}

#[test]
fn gaussian_genus_components() {
    let oracle = WickOracle::new(18);
    let ex = Expansion::new(&oracle, &ModelSpec::plain(1.0), 0, CylinderMode::Dressed).unwrap();
    assert_eq!(ex.stuffed_map_series(0, &[4]).unwrap().get(&[]), NLaurent::monomial(0, 3, rat_int(2)));
    assert_eq!(ex.stuffed_map_series(1, &[4]).unwrap().get(&[]), NLaurent::monomial(0, 1, rat_int(1)));
    assert_eq!(ex.stuffed_map_series(1, &[6]).unwrap().get(&[]), NLaurent::monomial(0, 2, rat_int(10)));
    let conn = ex.connected_correlator(&[2, 2, 2]).unwrap();
    assert_eq!(conn.get(&[]), NLaurent::monomial(-1, 3, rat_int(8)));
    assert_eq!(ex.stuffed_map_series(0, &[2, 2, 2]).unwrap().get(&[]), NLaurent::monomial(0, 2, rat_int(8)));
}

#[test]
fn empty_insertions_give_unity() {
    let oracle = WickOracle::new(18);
    let spec = ModelSpec::gaussian(0.7).with_alpha(4, 0.1);
    let ex = Expansion::new(&oracle, &spec, 2, CylinderMode::Perturbative).unwrap();
    let c = ex.correlator(&[]).unwrap();
    assert_eq!(c.terms.len(), 1);
    assert_eq!(c.get(&vec![0; ex.vars().len()]), NLaurent::one());
}

/// With only t₁₁ switched on, expanding it perturbatively must agree with the
/// dressed covariance order by order: the dressed E[Tr H²] is N t + κ t/N with
/// κ = t t₁₁/(1 - t t₁₁), whose first order in t₁₁ is t² t₁₁ / N.
#[test]
fn cylinder_first_order() {
    let oracle = WickOracle::new(18);
    let spec = ModelSpec::gaussian(1.0);
    let ex = Expansion::new(&oracle, &spec, 1, CylinderMode::Perturbative).unwrap();
    assert_eq!(ex.vars().len(), 1);
    let w = ex.correlator(&[2]).unwrap();
    assert_eq!(w.get(&[0]), NLaurent::monomial(1, 1, rat_int(1)));
    assert_eq!(w.get(&[1]), NLaurent::monomial(-1, 2, rat_int(1)));

    // hand Wick at N = 2: (1/2)E[Tr H² (Tr H)²] - (1/2)E[Tr H²]E[(Tr H)²] = t²/2
    let n2 = rat_int(2);
    let t = rat_int(1);
    assert_eq!(exact_at(&w.get(&[1]), &n2, &t), rat(1, 2));
}

#[test]
fn dressed_and_perturbative_agree_to_order() {
    // κ = -1/2 corresponds to t t₁₁ = -1; the perturbative series in w = t₁₁ is
    // geometric, so compare at a small stand-in value through the exact NLaurents.
    let oracle = WickOracle::new(18);
    let spec = ModelSpec::gaussian(1.0);
    let ex = Expansion::new(&oracle, &spec, 4, CylinderMode::Perturbative).unwrap();
    let w = ex.connected_correlator(&[1, 1]).unwrap();
    // E[(Tr H)²]_conn = t/(1 - t t₁₁) = t Σ (t t₁₁)^a
    for a in 0..=4u32 {
        assert_eq!(w.get(&[a]), NLaurent::monomial(0, 1 + a as i32, rat_int(1)), "order {a}");
    }
}

#[test]
fn cumulant_inversion() {
    let oracle = WickOracle::new(18);
    let spec = ModelSpec::plain(0.8).with_alpha(4, 0.05);
    let ex = Expansion::new(&oracle, &spec, 1, CylinderMode::Dressed).unwrap();
    let ins = [2u32, 2, 4];
    let fam = ex.family(&ins).unwrap();
    let mut cumulants: BTreeMap<u32, _> = BTreeMap::new();
    for mask in 1u32..8 {
        let sub: Vec<usize> = (0..3).filter(|i| mask & (1 << i) != 0).collect();
        let mut subfam = BTreeMap::new();
        for (m, s) in &fam {
            if m & !mask == 0 {
                // relabel onto the bits of the subset
                let mut rm = 0u32;
                for (k, i) in sub.iter().enumerate() {
                    if m & (1 << i) != 0 {
                        rm |= 1 << k;
                    }
                }
                subfam.insert(rm, s.clone());
            }
        }
        cumulants.insert(mask, connected(&subfam, sub.len()).unwrap());
    }
    let back = moments_from_cumulants(&cumulants, 3).unwrap();
    assert_eq!(back.terms, fam[&7].terms);
}

#[test]
fn connected_needs_every_subset() {
    let oracle = WickOracle::new(18);
    let ex = Expansion::new(&oracle, &ModelSpec::plain(1.0), 0, CylinderMode::Dressed).unwrap();
    let mut fam = ex.family(&[2, 2]).unwrap();
    fam.remove(&1);
    assert!(connected(&fam, 2).is_err());
}

#[test]
fn stray_exponent_is_rejected() {
    let oracle = WickOracle::new(18);
    let ex = Expansion::new(&oracle, &ModelSpec::plain(1.0), 0, CylinderMode::Dressed).unwrap();
    // a disconnected 2-point object has an N² term a connected one never has
    let disc = ex.correlator(&[2, 2]).unwrap();
    assert!(extract_genus(&disc, 0, 2).is_err());
}

#[test]
fn over_budget_names_monomial() {
    let oracle = WickOracle::new(10);
    let spec = ModelSpec::plain(1.0).with_alpha(4, 0.1);
    let ex = Expansion::new(&oracle, &spec, 2, CylinderMode::Dressed).unwrap();
    match ex.correlator(&[4]) {
        Err(btrengine::Error::Budget(msg)) => assert!(msg.contains("w[0;4]"), "{msg}"),
        other => panic!("expected budget error, got {other:?}"),
    }
}

#[test]
fn rows_render_rationals() {
    let v = NLaurent::monomial(-1, 2, BigRational::new(BigInt::from(-3), BigInt::from(4)));
    let s = CouplingSeries::constant(vec![], 0, v);
    assert_eq!(s.rows(), vec![("t^2".to_string(), -1, "-3/4".to_string())]);
}
