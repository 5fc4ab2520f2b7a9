//! Property tests for the invariants of each module.

use logbesov::besov_norms::{besov_norm, BesovParams};
use logbesov::core_field::{random_field, GridSpec, SpectralField};
use logbesov::inflation::sparse::sup_norm;
use logbesov::inflation::{
    functionals, initial_data_norms, sparse_initial_data, support_audit, InflationConfig, Variant,
};
use logbesov::littlewood_paley::{lp_block, phi, psi_j};
use logbesov::navier_stokes::{divergence_defect, picard_solve, random_divergence_free, rk4_reference};
use logbesov::path_norms::{scalar_bilinear, KatoParams, TimeGrid, TimeSeries};
use num_complex::Complex64;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn grid2(size: usize) -> GridSpec {
    GridSpec::periodic(2, size).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parseval(seed in 0u64..1000, kmax in 2.0f64..20.0) {
        let u = random_field(grid2(64), 2, kmax, 1.0, seed);
        let l2 = u.lp_norm(2.0).unwrap();
        let coef = u.grid().volume() * u.energy_coefficients();
        prop_assert!(rel(l2 * l2, coef) <= 1e-10);
    }

    #[test]
    fn transform_round_trip(seed in 0u64..1000, size in prop::sample::select(vec![32usize, 64, 128])) {
        let u = random_field(grid2(size), 1, size as f64 / 3.0, 1.0, seed);
        let back = u.to_physical().unwrap().to_spectral().unwrap();
        prop_assert!(back.sub(&u).unwrap().max_abs() <= 1e-12 * u.max_abs());
    }

    #[test]
    fn multipliers_compose(seed in 0u64..1000, a in 0.1f64..3.0, b in 0.1f64..3.0) {
        let u = random_field(grid2(32), 1, 10.0, 1.0, seed);
        let m1 = |xi: [f64; 3]| Complex64::new((-a * (xi[0] * xi[0] + xi[1] * xi[1])).exp(), 0.0);
        let m2 = |xi: [f64; 3]| Complex64::new(0.0, b * xi[0]);
        let seq = u.apply_multiplier(m1).unwrap().apply_multiplier(m2).unwrap();
        let once = u.apply_multiplier(|xi| m1(xi) * m2(xi)).unwrap();
        // Coefficientwise agreement up to one rounding of the complex product.
        for (x, y) in seq.data().iter().zip(once.data()) {
            prop_assert!((x - y).norm() <= 4.0 * f64::EPSILON * x.norm().max(y.norm()));
        }
    }

    #[test]
    fn nonnegative_spectrum_sup_identity(seed in 0u64..1000) {
        let u = random_field(grid2(32), 1, 8.0, 1.0, seed);
        let mut v = u.clone();
        for c in v.data_mut() {
            *c = Complex64::new(c.norm(), 0.0);
        }
        let coef = v.supnorm_nonneg_spectrum().unwrap();
        prop_assert!(rel(coef, v.lp_norm(f64::INFINITY).unwrap()) <= 1e-8);
        let sum: f64 = u.data().iter().map(|c| c.norm()).sum();
        prop_assert!(sum >= u.lp_norm(f64::INFINITY).unwrap() - 1e-8);
    }

    #[test]
    fn windows_telescope(r in 0.0f64..5000.0, big_j in 1i32..12) {
        let sum: f64 = phi(r) + (1..=big_j).map(|j| psi_j(r, j)).sum::<f64>();
        prop_assert!((sum - phi(r * (-big_j as f64).exp2())).abs() <= 1e-14);
    }

    #[test]
    fn distant_blocks_are_orthogonal(seed in 0u64..1000, j in 1usize..4, gap in 2usize..4) {
        let u = random_field(grid2(128), 1, 60.0, 1.0, seed);
        let k = j + gap;
        prop_assume!(k <= u.grid().default_jmax());
        let both = lp_block(&lp_block(&u, j).unwrap(), k).unwrap();
        prop_assert!(both.max_abs() == 0.0);
    }

    #[test]
    fn blocks_do_not_amplify(seed in 0u64..1000, j in 1usize..6, p in prop::sample::select(vec![2.0f64, f64::INFINITY])) {
        let u = random_field(grid2(128), 1, 60.0, 1.0, seed);
        let b = lp_block(&u, j).unwrap().lp_norm(p).unwrap();
        prop_assert!(b <= 1.1 * u.lp_norm(p).unwrap());
    }

    #[test]
    fn besov_homogeneity_and_triangle(seed in 0u64..1000, alpha in -5.0f64..5.0, sigma in 0.0f64..2.0,
                                      q in prop::sample::select(vec![1.0f64, 2.0, 4.0, f64::INFINITY])) {
        let g = grid2(64);
        let u = random_field(g, 1, 20.0, 1.0, seed);
        let v = random_field(g, 1, 20.0, 1.0, seed + 7777);
        let params = BesovParams::new(-1.0, sigma, f64::INFINITY, q).unwrap();
        let nu = besov_norm(&u, &params).unwrap();
        prop_assert!(rel(besov_norm(&u.scaled(alpha), &params).unwrap(), alpha.abs() * nu) <= 1e-12);
        let nv = besov_norm(&v, &params).unwrap();
        prop_assert!(besov_norm(&u.add(&v).unwrap(), &params).unwrap() <= (nu + nv) * (1.0 + 1e-12));
    }

    #[test]
    fn besov_monotone_in_sigma_and_q(seed in 0u64..1000, s1 in 0.0f64..1.5, ds in 0.0f64..1.0) {
        let u = random_field(grid2(64), 1, 20.0, 1.0, seed);
        let n = |sigma: f64, q: f64| besov_norm(&u, &BesovParams::new(-1.0, sigma, 2.0, q).unwrap()).unwrap();
        prop_assert!(n(s1, 2.0) <= n(s1 + ds, 2.0));
        prop_assert!(n(s1, 4.0) <= n(s1, 2.0));
        prop_assert!(n(s1, f64::INFINITY) <= n(s1, 4.0));
    }

    #[test]
    fn scalar_bilinear_is_bilinear(a in -3.0f64..3.0, e1 in 0.05f64..1.0, e2 in 0.05f64..1.0) {
        let grid = TimeGrid::log_spaced(1.0, 8, 1e-4).unwrap();
        let f1 = TimeSeries::from_fn(&grid, |t| t.powf(e1));
        let f2 = TimeSeries::from_fn(&grid, |t| 1.0 + t.powf(e2));
        let g = TimeSeries::from_fn(&grid, |t| (1.0 + t).ln() + 0.5);
        let b1 = scalar_bilinear(&f1, &g).unwrap().series;
        let scaled = scalar_bilinear(&f1.scaled(a), &g).unwrap().series;
        for (x, y) in b1.values.iter().zip(&scaled.values) {
            prop_assert!((a * x - y).abs() <= 1e-12 * (a * x).abs().max(1e-300));
        }
        let sum = TimeSeries::new(grid.clone(), f1.values.iter().zip(&f2.values).map(|(x, y)| x + y).collect()).unwrap();
        let b2 = scalar_bilinear(&f2, &g).unwrap().series;
        let bs = scalar_bilinear(&sum, &g).unwrap().series;
        for ((x, y), z) in b1.values.iter().zip(&b2.values).zip(&bs.values) {
            prop_assert!((x + y - z).abs() <= 1e-12 * z.abs());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn solvers_preserve_divergence_and_energy(seed in 0u64..1000, amp in 0.1f64..1.0) {
        let g = grid2(32);
        let u0 = random_divergence_free(g, 6.0, amp, seed).unwrap();
        let rk = rk4_reference(&u0, 0.05, 1e-3).unwrap();
        let mut last = f64::INFINITY;
        for s in &rk.snapshots {
            prop_assert!(divergence_defect(s) <= 1e-10);
            let e = s.lp_norm(2.0).unwrap();
            prop_assert!(e <= last + 1e-8);
            last = e;
        }
        let horizon = 0.05;
        let times = TimeGrid::log_spaced(horizon, 8, 1e-4).unwrap();
        let (traj, diag) = picard_solve(&u0, &times, &KatoParams::new(1.0, 2.0, horizon).unwrap(), 1e-10, 40).unwrap();
        prop_assert!(diag.converged);
        prop_assert!(diag.contraction_ratios.iter().all(|&r| r < 1.0));
        prop_assert!(traj.snapshots.iter().all(|s| divergence_defect(s) <= 1e-10));
    }

    #[test]
    fn inflation_functionals_scale_with_delta_squared(m in 2usize..5, delta in 0.01f64..10.0) {
        let cfg = InflationConfig::desk(Variant::Main, m, 0.125, 0.25, 4.0).unwrap();
        let t = cfg.t_star();
        let a = functionals(&cfg, t).unwrap();
        let b = functionals(&InflationConfig { delta, ..cfg }, t).unwrap();
        for (x, y) in [(a.main, b.main), (a.cross, b.cross), (a.pressure, b.pressure)] {
            prop_assert!(rel(y, delta * delta * x) <= 1e-12);
        }
    }

    #[test]
    fn inflation_hierarchy_and_sign_structure(m in 2usize..7, eps in 0.03f64..0.125) {
        let cfg = InflationConfig::desk(Variant::Main, m, eps, 0.0, f64::INFINITY).unwrap();
        prop_assert!(support_audit(&cfg).pass);
        let f = functionals(&cfg, cfg.t_star()).unwrap();
        prop_assert!(f.cross < f.main && f.pressure < f.main);
        prop_assert!(f.main <= f.main_footnote * (1.0 + 1e-12));
        prop_assert!(f.main >= f.main_footnote * (1.0 - 1e-9));
    }

    #[test]
    fn sparse_sup_estimates_are_bracketed(m in 1usize..5) {
        let cfg = InflationConfig::desk(Variant::Main, m, 0.125, 0.0, f64::INFINITY).unwrap();
        let data = sparse_initial_data(&cfg).unwrap();
        for j in data.u1.blocks_present() {
            let s = sup_norm(&data.u1.block(j)).unwrap();
            prop_assert!(s.value <= s.upper * (1.0 + 1e-12));
            prop_assert!(s.upper <= s.coefficient_sum * (1.0 + 1e-12));
        }
    }

    #[test]
    fn norm_comparison_constant_is_bounded(m in 2usize..7, sigma in 0.0f64..1.0) {
        let cfg = InflationConfig::desk(Variant::Main, m, 0.125, sigma, 4.0).unwrap();
        let (n1, _) = initial_data_norms(&cfg).unwrap();
        let plain = initial_data_norms(&InflationConfig { sigma: 0.0, q: 2.0, ..cfg.clone() }).unwrap().0
            / InflationConfig { sigma: 0.0, q: 2.0, ..cfg.clone() }.prefactor() * cfg.prefactor();
        let c = plain / ((m as f64).powf(0.5 - 0.25 - sigma) * n1);
        prop_assert!(c.is_finite() && c > 0.0 && c < 10.0);
    }
}

#[test]
fn bilinear_quadrature_converges_under_refinement() {
    let grid = TimeGrid::log_spaced(1.0, 16, 1e-6).unwrap();
    let fine = grid.refined();
    let f = |t: f64| t.powf(0.3) * (1.0 + t);
    let g = |t: f64| 1.0 / (1.0 + t);
    let a = scalar_bilinear(&TimeSeries::from_fn(&grid, f), &TimeSeries::from_fn(&grid, g)).unwrap().series;
    let b = scalar_bilinear(&TimeSeries::from_fn(&fine, f), &TimeSeries::from_fn(&fine, g)).unwrap().series;
    let coarse_on_fine = b.restrict(&grid).unwrap();
    for (x, y) in a.values.iter().zip(&coarse_on_fine) {
        assert!(rel(*x, *y) <= 1e-6, "{x} vs {y}");
    }
}

#[test]
fn dense_initial_data_is_divergence_free() {
    let cfg = InflationConfig::dense_companion(0.25).unwrap();
    let u: SpectralField = logbesov::inflation::build_initial_data(&cfg, GridSpec::periodic(3, 32).unwrap()).unwrap();
    assert!(divergence_defect(&u) <= 1e-10);
    assert!(u.hermitian_defect() <= 1e-14);
}
