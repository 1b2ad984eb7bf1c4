use btrengine::curve::{solve_one_cut, SolverConfig};
use btrengine::model::ModelSpec;
use btrengine::sampler::*;
use btrengine::{Error, SpectralData};

fn curve(spec: &ModelSpec) -> SpectralData {
    solve_one_cut(spec, &SolverConfig::default()).unwrap()
}

#[test]
fn gaussian_semicircle() {
    let spec = ModelSpec::plain(1.0);
    let s = metropolis_run(&spec, &ChainConfig::default()).unwrap();
    assert_eq!(s.eigenvalues.len(), 1000);
    assert!(s.acceptance_rate > 0.999, "{}", s.acceptance_rate);
    let rep = compare_density(&s, &curve(&spec), 40).unwrap();
    assert!(rep.ks <= 0.05, "KS {}", rep.ks);
    assert!(!rep.support_flag);
    for (l, want) in [(2u32, 1.0), (4, 2.0)] {
        let m = s.moment(l).unwrap();
        assert!((m.mean - want).abs() <= 3.0 * m.std_error, "m{l} = {} ± {}", m.mean, m.std_error);
    }
    // negative control: wrong temperature
    let wrong = compare_density(&s, &curve(&ModelSpec::plain(9.0)), 40).unwrap();
    assert!(wrong.ks >= 0.2, "{}", wrong.ks);
}

#[test]
fn interacting_chain_tracks_curve() {
    let spec = ModelSpec::plain(1.0).with_alpha(4, 0.05);
    let cfg = ChainConfig { n: 40, sweeps: 4000, burn_in: 500, thin: 5, step_size: 0.3, ..ChainConfig::default() };
    let s = metropolis_run(&spec, &cfg).unwrap();
    assert!(s.acceptance_rate > 0.05 && s.acceptance_rate < 1.0, "{}", s.acceptance_rate);
    let c = curve(&spec);
    let m = s.moment(2).unwrap();
    // O(1/N²) finite-size shift is far below the statistical error here
    assert!((m.mean - c.moment(2)).abs() <= 4.0 * m.std_error + 2e-3, "{} vs {}", m.mean, c.moment(2));
    assert!(compare_density(&s, &c, 20).unwrap().ks <= 0.06);

    let rw = ChainConfig { proposal: Proposal::RandomWalk, step_size: 0.03, ..cfg };
    let s = metropolis_run(&spec, &rw).unwrap();
    assert!(s.acceptance_rate > 0.05 && s.acceptance_rate < 1.0, "{}", s.acceptance_rate);
}

#[test]
fn deterministic_with_seed() {
    let spec = ModelSpec::gaussian(0.5);
    let cfg = ChainConfig { n: 12, sweeps: 300, burn_in: 100, thin: 7, ..ChainConfig::default() };
    let a = metropolis_run(&spec, &cfg).unwrap();
    let b = metropolis_run(&spec, &cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = metropolis_run(&spec, &ChainConfig { seed: 2, ..cfg }).unwrap();
    assert_ne!(a.eigenvalues, c.eigenvalues);
}

#[test]
fn contract_errors() {
    let spec = ModelSpec::plain(1.0);
    let cfg = ChainConfig { n: 4, sweeps: 10, burn_in: 10, ..ChainConfig::default() };
    assert!(matches!(metropolis_run(&spec, &cfg), Err(Error::EmptySample)));
    let big = ModelSpec::plain(1.0).with_alpha(8, 1e308);
    let cfg = ChainConfig { n: 4, sweeps: 10, burn_in: 0, ..ChainConfig::default() };
    assert!(matches!(metropolis_run(&big, &cfg), Err(Error::Overflow(_))));
}
