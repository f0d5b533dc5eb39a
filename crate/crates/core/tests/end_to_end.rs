use std::f64::consts::{PI, TAU};

use multibaker::cell::{central_momentum_mixture, CellDims};
use multibaker::classical::{exact_distribution, transfer_distribution};
use multibaker::husimi::{husimi_grid, lattice_husimi};
use multibaker::spectral::{
    cumulative_curve, default_abscissae, eigenphase_bands, ks_distance, spacing_sample, ReferenceKind,
};
use multibaker::table::CoarseGrained;
use multibaker::transport::{
    asymptotic_current, current_series, eigendecompose_unitary, evolve_components, lattice_evolve,
    moment_via_quadrature, BlochFamily, KGrid, DEFAULT_EPS_DEG,
};

fn dims(d: usize, d1: usize) -> CellDims {
    CellDims::new(d, d1).unwrap()
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Greedy matching of two phase multisets on the circle.
fn multiset_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for &x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, &y)| (j, circular_distance(x, y)))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

#[test]
fn mirror_law_for_lattice_distributions() {
    let rho = central_momentum_mixture(20, 2).unwrap();
    let a = lattice_evolve(&rho, dims(20, 15), 40).unwrap();
    let b = lattice_evolve(&rho, dims(20, 5), 40).unwrap();
    let mut worst: f64 = 0.0;
    for t in 0..=40 {
        for x in -40..=40i64 {
            worst = worst.max((a.probability(x, t) - b.probability(-x, t)).abs());
        }
    }
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn lattice_current_approaches_spectral_current() {
    let d = dims(20, 15);
    let rho = central_momentum_mixture(20, 2).unwrap();
    let j_inf = asymptotic_current(&rho, d, KGrid::default(), DEFAULT_EPS_DEG)
        .unwrap()
        .value;
    let table = lattice_evolve(&rho, d, 160).unwrap();
    assert!(table.normalization_defect() < 1e-10);
    assert_eq!(table.light_cone_violation(), 0.0);
    let series = current_series(&table).unwrap();
    let (mean, se) = series.window_stats(40, 160).unwrap();
    let tol = (0.02 * j_inf.abs()).max(2.0 * se);
    assert!((mean - j_inf).abs() < tol, "lattice {mean} ± {se}, spectral {j_inf}");
}

#[test]
fn quadrature_first_moment_is_exact() {
    let d = dims(20, 13);
    let rho = central_momentum_mixture(20, 2).unwrap();
    let table = lattice_evolve(&rho, d, 10).unwrap();
    let q = moment_via_quadrature(&rho, d, KGrid::new(64).unwrap(), 10, 1).unwrap();
    assert!(!q.accuracy_warning);
    assert!((q.value - table.mean(10)).abs() < 1e-8);
}

#[test]
fn spectral_reflection_and_shift_symmetries() {
    let grid = KGrid::new(32).unwrap();
    let fam = BlochFamily::new(dims(30, 15));
    for j in 0..grid.len() {
        let k = grid.node(j);
        let a = eigendecompose_unitary(&fam.at(k)).unwrap().thetas;
        let b = eigendecompose_unitary(&fam.at(TAU - k)).unwrap().thetas;
        assert!(multiset_distance(&a, &b) < 1e-10, "k={k}");
    }
    for (dd, d1) in [(30, 15), (30, 29), (20, 13)] {
        let fam = BlochFamily::new(dims(dd, d1));
        for k in [0.1, 1.3, 2.9] {
            let a = eigendecompose_unitary(&fam.at(k)).unwrap().thetas;
            let b: Vec<f64> = eigendecompose_unitary(&fam.at(k + PI))
                .unwrap()
                .thetas
                .iter()
                .map(|t| t - PI)
                .collect();
            assert!(multiset_distance(&a, &b) < 1e-10);
        }
    }
}

#[test]
fn level_statistics_ordering() {
    let grid = KGrid::new(64).unwrap();
    let ks = |d1| {
        let bands = eigenphase_bands(dims(30, d1), grid).unwrap();
        let curve = cumulative_curve(&spacing_sample(&bands), &default_abscissae()).unwrap();
        (
            ks_distance(&curve, ReferenceKind::Cue),
            ks_distance(&curve, ReferenceKind::Poisson),
        )
    };
    let (cue, poisson) = ks(15);
    assert!(cue < poisson, "D1=15: cue {cue} poisson {poisson}");
    let (cue, poisson) = ks(29);
    assert!(poisson < cue, "D1=29: cue {cue} poisson {poisson}");
}

#[test]
fn classical_long_time_is_balanced() {
    for s in [0.55, 0.75, 0.9] {
        let exact = exact_distribution(s, 16).unwrap();
        let transfer = transfer_distribution(s, 200).unwrap();
        for t in 0..=16 {
            assert!(exact.mean(t).abs() < 1e-12);
            for x in -16..=16 {
                assert!((exact.probability(x, t) - transfer.probability(x, t)).abs() < 1e-12);
            }
        }
        assert!(transfer.mean(200).abs() < 1e-9);
        assert!(transfer.normalization_defect() < 1e-10);
        assert_eq!(transfer.light_cone_violation(), 0.0);
    }
}

#[test]
fn husimi_panels_respect_mirror_symmetry() {
    let d = 80;
    let rho = central_momentum_mixture(d, 8).unwrap();
    let comps = evolve_components(&rho, dims(d, 40), 3).unwrap();
    let r = 32;
    let panels = lattice_husimi(&comps, &[-3, -1, 1, 3], r).unwrap();
    for (a, b) in [(0, 3), (1, 2)] {
        let (pa, pb) = (&panels[a], &panels[b]);
        for qi in 0..r {
            for pj in 0..r {
                let mirrored = pb.value(r - 1 - qi, r - 1 - pj);
                assert!((pa.value(qi, pj) - mirrored).abs() < 1e-8);
            }
        }
    }
    let h = husimi_grid(&rho, 64).unwrap();
    assert!((d as f64 * h.mean() - 1.0).abs() < 0.02);
}
