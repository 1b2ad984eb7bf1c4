use btrengine::algebra::{det, LaurentPoly, Pole, PoleBasisForm};
use btrengine::btr::*;
use btrengine::curve::{solve_one_cut, SolverConfig};
use btrengine::model::ModelSpec;
use btrengine::omega2::{build_c, scan_root};
use btrengine::wick::{CylinderMode, Expansion, WickOracle};
use btrengine::{Error, OmegaTable};

fn table(spec: &ModelSpec, cfg: &BtrConfig) -> OmegaTable {
    let curve = solve_one_cut(spec, &SolverConfig::default()).unwrap();
    btr_compute(spec, &curve, cfg).unwrap()
}

fn cfg(gmax: u32, nmax: usize) -> BtrConfig {
    BtrConfig { gmax, nmax, ..BtrConfig::default() }
}

fn small_couplings() -> ModelSpec {
    ModelSpec::gaussian(0.5).with_alpha(4, 0.01).with_alpha(6, 0.002)
}

fn stable_coupling(c: f64) -> ModelSpec {
    ModelSpec::gaussian(0.5).with_alpha(4, 0.01).with_multitrace(vec![4], c)
}

#[test]
fn gaussian_map_counts() {
    let t = table(&ModelSpec::plain(1.0), &cfg(1, 3));
    let oracle = WickOracle::new(18);
    let ex = Expansion::new(&oracle, &ModelSpec::plain(1.0), 0, CylinderMode::Perturbative).unwrap();
    for (g, ls, want) in [(1u32, vec![4u32], 1.0), (1, vec![6], 10.0), (0, vec![2, 2, 2], 8.0)] {
        assert_eq!(ex.stuffed_map_value(g, &ls, 1.0).unwrap(), want);
        let got = t.stuffed_map_coeffs(g, &ls).unwrap();
        assert!((got - want).abs() < 1e-8, "g={g} {ls:?}: {got}");
    }
}

#[test]
fn exact_models_match_oracle() {
    let oracle = WickOracle::new(18);
    let cases: Vec<(u32, Vec<u32>)> = vec![
        (1, vec![2]),
        (1, vec![4]),
        (1, vec![6]),
        (0, vec![1, 1, 2]),
        (0, vec![2, 2, 2]),
        (0, vec![1, 2, 3]),
        (1, vec![1, 1]),
        (1, vec![2, 2]),
        (1, vec![1, 3]),
    ];
    for spec in [ModelSpec::gaussian(0.5), ModelSpec::plain(0.7)] {
        let mode = if spec.plain_1mm { CylinderMode::Perturbative } else { CylinderMode::Dressed };
        let ex = Expansion::new(&oracle, &spec, 0, mode).unwrap();
        let t = table(&spec, &cfg(1, 3));
        for (g, ls) in &cases {
            let want = ex.stuffed_map_value(*g, ls, spec.t).unwrap();
            let got = t.stuffed_map_coeffs(*g, ls).unwrap();
            assert!((got - want).abs() < 1e-10 * (1.0 + want.abs()), "g={g} {ls:?}: {got} vs {want}");
        }
    }
}

#[test]
fn quartic_tracks_oracle_order_by_order() {
    let oracle = WickOracle::new(18);
    let spec = |a: f64| ModelSpec::gaussian(0.5).with_alpha(4, a);
    for (g, ls) in [(1u32, vec![2u32]), (1, vec![4]), (0, vec![1, 1, 2]), (1, vec![1, 1])] {
        let gap = |a: f64, k: u32| {
            let s = spec(a);
            let got = table(&s, &cfg(1, 3)).stuffed_map_coeffs(g, &ls).unwrap();
            got - Expansion::new(&oracle, &s, k, CylinderMode::Dressed).unwrap().stuffed_map_value(g, &ls, 0.5).unwrap()
        };
        for (k, ratio) in [(1u32, 4.0), (2, 8.0)] {
            let r = gap(0.002, k) / gap(0.001, k);
            assert!((r / ratio - 1.0).abs() < 0.05, "g={g} {ls:?} K={k}: ratio {r}");
        }
        assert!(gap(0.001, 2).abs() < 1e-5);
    }
}

#[test]
fn stable_coupling_matches_oracle() {
    let oracle = WickOracle::new(18);
    for c in [0.2, 0.1] {
        let s = ModelSpec::gaussian(0.5).with_multitrace(vec![4], c);
        let t = table(&s, &cfg(2, 1));
        // exact in c: the coupling enters genus 2 linearly
        let ex = Expansion::new(&oracle, &s, 1, CylinderMode::Dressed).unwrap();
        for ls in [vec![2u32], vec![4]] {
            let got = t.stuffed_map_coeffs(2, &ls).unwrap();
            let want = ex.stuffed_map_value(2, &ls, 0.5).unwrap();
            assert!((got - want).abs() < 1e-10 * (1.0 + want.abs()), "c={c} {ls:?}: {got} vs {want}");
        }
    }
}

#[test]
fn blob_term_is_linear_in_stable_coupling() {
    let a = table(&stable_coupling(0.1), &cfg(2, 1));
    let b = table(&stable_coupling(0.2), &cfg(2, 1));
    let (pa, pb) = (&a.blob[&(2, 1)], &b.blob[&(2, 1)]);
    assert!(!pa.is_empty());
    assert!(pa.terms().keys().all(|k| k[0].0 == Pole::Zero));
    assert!(pa.max_order(0, Pole::Zero) as usize <= 4 + 1);
    assert!(pb.add(&pa.scale(-2.0)).max_abs() < 1e-12 * pb.max_abs());
    // no stable couplings: no blob
    let c = table(&small_couplings(), &cfg(1, 2));
    assert!(c.blob.values().all(|f| f.is_empty()));
    assert!(c.potentials.values().all(|v| v.iter().all(|f| f.is_empty())));
}

#[test]
fn forms_are_symmetric_with_expected_poles() {
    for (spec, zero_allowed) in [(ModelSpec::plain(1.0).with_alpha(4, 0.02), false), (small_couplings(), true)] {
        let t = table(&spec, &cfg(1, 3));
        for ((g, n), f) in &t.stable {
            assert!(f.asymmetry() <= 1e-10 * f.max_abs().max(1.0), "({g},{n})");
            for var in 0..*n {
                assert!(zero_allowed || f.max_order(var, Pole::Zero) == 0, "({g},{n}) pole at 0");
                let top = 2 * (3 * *g as usize + n - 3) as u32 + 2;
                for p in [Pole::Minus, Pole::Plus] {
                    assert_eq!(f.max_order(var, p), top, "({g},{n}) at {}", p.label());
                }
            }
        }
    }
}

#[test]
fn kernel_structure() {
    let t = table(&small_couplings(), &cfg(1, 1));
    for p in [Pole::Minus, Pole::Plus] {
        assert!(t.denominator_leading(p).unwrap().abs() > 1e-3);
        let k = t.recursion_kernel(p, 6).unwrap();
        assert_eq!(k.series.order_min(), -1);
        assert!(k.series.coeff(-1).unwrap().max_abs() > 1e-6);
        assert!(k.series.trunc() >= 6);
    }
}

#[test]
fn truncation_escalation_is_stable() {
    let spec = stable_coupling(0.3);
    let base = table(&spec, &cfg(2, 1));
    let used = base.truncation.values().copied().max().unwrap() as u32;
    let more = table(&spec, &BtrConfig { truncation: Some(used + 4), ..cfg(2, 1) });
    let probes: Vec<(u32, Vec<u32>)> =
        vec![(0, vec![2, 2, 2]), (0, vec![1, 3, 2]), (1, vec![4]), (1, vec![2, 2]), (2, vec![4]), (2, vec![6])];
    for (g, ls) in probes {
        let (a, b) = (base.stuffed_map_coeffs(g, &ls).unwrap(), more.stuffed_map_coeffs(g, &ls).unwrap());
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300), "g={g} {ls:?}: {a} vs {b}");
    }
}

#[test]
fn too_small_truncation_is_reported() {
    let spec = small_couplings();
    let curve = solve_one_cut::<f64>(&spec, &SolverConfig::default()).unwrap();
    let r = btr_compute(&spec, &curve, &BtrConfig { truncation: Some(0), ..cfg(1, 1) });
    assert!(matches!(r, Err(Error::InsufficientTruncation { .. })), "{r:?}");
}

#[test]
fn schedule_respects_dependencies() {
    let t = table(&stable_coupling(0.1), &cfg(2, 2));
    let s = t.schedule();
    assert!(s.windows(2).all(|w| 2 * w[0].0 as usize + w[0].1 <= 2 * w[1].0 as usize + w[1].1));
    for need in [(2, 2), (2, 1), (1, 3), (0, 4)] {
        assert!(s.contains(&need), "{need:?} missing from {s:?}");
    }
    assert!(!s.contains(&(0, 5)));
}

#[test]
fn gamma_moments() {
    let t = table(&ModelSpec::plain(1.0), &cfg(0, 3));
    let x = t.x_poly();
    let mut dz = PoleBasisForm::new(1);
    dz.add_term(vec![(Pole::Zero, 1)], 1.0);
    assert_eq!(gamma_moment(&dz, &LaurentPoly::monomial(0, 1.0), 0), 1.0);
    assert!((gamma_moment(&t.omega01_form(), &x, 2) - 1.0).abs() < 1e-12);
    assert!((gamma_moment(&t.omega01_form(), &x, 4) - 2.0).abs() < 1e-12);
    assert_eq!(gamma_moment(&PoleBasisForm::new(1), &x, 3), 0.0);
}

#[test]
fn loop_equations_hold() {
    let t = table(&small_couplings(), &cfg(1, 3));
    for (g, n) in [(0u32, 1usize), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3)] {
        let r = t.sde_residual(g, n, &OmegaTable::exterior_probes(10, n)).unwrap();
        assert!(r <= 1e-8, "({g},{n}): {r}");
    }
    for (g, n) in [(0u32, 3usize), (1, 1), (1, 2), (1, 3)] {
        let r = t.t_operator_residual(g, n, &t.contour_probes(10, n)).unwrap();
        assert!(r <= 1e-9, "({g},{n}): {r}");
    }
}

#[test]
fn blob_controls() {
    let run = |blob| table(&stable_coupling(0.5), &BtrConfig { blob, ..cfg(2, 1) });
    let residuals = |t: &OmegaTable| {
        (
            t.sde_residual(2, 1, &OmegaTable::exterior_probes(10, 1)).unwrap(),
            t.t_operator_residual(2, 1, &t.contour_probes(10, 1)).unwrap(),
        )
    };
    let (sde, tt) = residuals(&run(BlobMode::Included));
    assert!(sde <= 1e-8 && tt <= 1e-8, "{sde} {tt}");
    for mode in [BlobMode::Dropped, BlobMode::Flipped] {
        let (sde, tt) = residuals(&run(mode));
        assert!(sde >= 1e-3 && tt >= 1e-3, "{mode:?}: {sde} {tt}");
    }
}

#[test]
fn refuses_singular_system() {
    let spec = |a| ModelSpec::gaussian(1.0).with_alpha(4, a);
    let root = scan_root(|a| Some(det(&build_c(&spec(a), 2.0).unwrap())), 0.0, 1.0, 200, 1e-14).unwrap();
    let mut curve = solve_one_cut::<f64>(&ModelSpec::gaussian(1.0), &SolverConfig::default()).unwrap();
    curve.t = 1.0;
    let r = btr_compute(&spec(root), &curve, &BtrConfig::default());
    assert!(matches!(r, Err(Error::Hypothesis2(_))), "{r:?}");
}

#[test]
fn config_rejects_unknown_fields() {
    let ok: BtrConfig = serde_json::from_str(r#"{"gmax": 2, "blob": "dropped"}"#).unwrap();
    assert_eq!((ok.gmax, ok.nmax, ok.blob), (2, 2, BlobMode::Dropped));
    assert!(serde_json::from_str::<BtrConfig>(r#"{"gmx": 2}"#).is_err());
}
