use btrengine::curve::*;
use btrengine::model::ModelSpec;
use btrengine::wick::{CylinderMode, Expansion, WickOracle};
use num_complex::Complex64;

fn solve(spec: &ModelSpec) -> SpectralData<f64> {
    solve_one_cut(spec, &SolverConfig::default()).unwrap()
}

/// Curve-minus-oracle gap for `m_l`, oracle truncated at order `k`.
fn gap(spec: &ModelSpec, k: u32, l: u32) -> f64 {
    let oracle = WickOracle::new(18);
    let d = solve(spec);
    let ex = Expansion::new(&oracle, spec, k, CylinderMode::Dressed).unwrap();
    d.moment(l) - ex.stuffed_map_value(0, &[l], spec.t).unwrap()
}

#[test]
fn quartic_gap_is_next_order() {
    // first dropped terms of m_2, m_4, m_6 at K = 3: 378 α⁴, 2916 α⁴, 18225 α⁴
    let a = 0.002;
    for (l, c) in [(2u32, 378.0), (4, 2916.0), (6, 18225.0)] {
        let g = gap(&ModelSpec::plain(1.0).with_alpha(4, a), 3, l);
        let want = c * a.powi(4);
        assert!((g - want).abs() < 0.05 * want, "l={l}: gap {g} vs {want}");
    }
}

#[test]
fn cubic_gap_scaling() {
    // odd moments start one order later than even ones
    let spec = |a| ModelSpec::plain(1.0).with_alpha(3, a);
    for (l, power) in [(1u32, 5), (2, 4), (3, 5)] {
        let r = gap(&spec(0.01), 3, l) / gap(&spec(0.005), 3, l);
        let want = 2f64.powi(power);
        assert!((r / want - 1.0).abs() < 0.05, "l={l}: ratio {r}");
    }
    let d = solve(&spec(0.01));
    assert!(d.center.abs() > 1e-4);
    assert!(d.residual < 1e-9);
}

#[test]
fn cylinder_gap_scaling() {
    let spec = |a| ModelSpec::gaussian(0.5).with_alpha(4, a);
    for (k, power) in [(2u32, 3), (3, 4)] {
        let r = gap(&spec(0.002), k, 2) / gap(&spec(0.001), k, 2);
        let want = 2f64.powi(power);
        assert!((r / want - 1.0).abs() < 0.05, "K={k}: ratio {r}");
    }
}

#[test]
fn default_model_is_semicircle() {
    let d = solve(&ModelSpec::gaussian(0.5));
    assert!(d.center.abs() < 1e-14);
    assert!((d.gamma - 0.5f64.sqrt()).abs() < 1e-12);
    assert!(d.moment(1).abs() < 1e-12 && d.moment(3).abs() < 1e-12);
}

#[test]
fn multitrace_fixed_point() {
    let spec = ModelSpec::gaussian(0.5).with_alpha(3, 0.02).with_alpha(4, 0.02);
    let d = solve(&spec);
    assert!(d.residual < 1e-9, "residual {}", d.residual);
    assert!((d.u[1] - d.t / d.gamma).abs() < 1e-10);
    for l in 0..d.moments.len() {
        assert!((d.moment(l as u32) - d.moments[l]).abs() < 1e-10);
    }
    let mass = d.total_mass(4000);
    assert!((mass - d.t).abs() < 1e-8);
    assert!(d.density(d.b).unwrap().abs() < 1e-12);
}

#[test]
fn involution_symmetry() {
    let d = solve(&ModelSpec::plain(0.8).with_alpha(3, 0.05));
    for z in [Complex64::new(0.3, 1.7), Complex64::new(-2.0, 0.4)] {
        assert!((d.joukowski(z) - d.joukowski(z.inv())).norm() < 1e-13);
    }
    assert!((d.joukowski(Complex64::new(1.0, 0.0)).re - d.b).abs() < 1e-13);
    assert!((d.joukowski(Complex64::new(-1.0, 0.0)).re - d.a).abs() < 1e-13);
}

#[test]
fn too_strong_coupling_fails() {
    assert!(solve_one_cut::<f64>(&ModelSpec::plain(1.0).with_alpha(4, 0.5), &SolverConfig::default()).is_err());
}
