use std::sync::Arc;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use schrodinger_lab::evolve::{propagate, spacetime_norm, TimeGrid};
use schrodinger_lab::fields::{lebesgue_norm, random_field, DataFamily, FamilyKind, SpectralField};
use schrodinger_lab::lp::{apply_block, block_for_h, LPBlockSet};
use schrodinger_lab::maximal::{certified_sup, lee_rhs, lemma52_check};
use schrodinger_lab::probe::{fit_exponent, strichartz_ratio, ScalingSeries};
use schrodinger_lab::spectra::{enumerate_modes, sphere2_degree_cutoff, ModeTable, ModelKind, Point, QuadratureGrid};

fn table(model: ModelKind, size: u8) -> Arc<ModeTable> {
    let cutoff = match model {
        ModelKind::Circle => 4.0 + size as f64 * 4.0,
        ModelKind::Torus2 => 3.0 + size as f64 * 2.0,
        ModelKind::Torus3 => 2.0 + size as f64,
        ModelKind::Sphere2 => sphere2_degree_cutoff(2 + 3 * size as usize),
        _ => 4.0 + size as f64 * 6.0,
    };
    Arc::new(enumerate_modes(model, cutoff).unwrap())
}

fn model() -> impl Strategy<Value = ModelKind> {
    prop::sample::select(ModelKind::COMPACT.to_vec())
}

fn point_for(model: ModelKind, a: f64, b: f64, c: f64) -> Point {
    use std::f64::consts::PI;
    match model {
        ModelKind::Circle => Point::circle(2.0 * PI * a),
        ModelKind::Torus2 => Point::torus2(2.0 * PI * a, 2.0 * PI * b),
        ModelKind::Torus3 => Point::torus3(2.0 * PI * a, 2.0 * PI * b, 2.0 * PI * c),
        ModelKind::Sphere2 => Point::sphere(PI * a, 2.0 * PI * b),
        _ => Point::zonal(PI * a),
    }
}

fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn propagation_is_unitary(m in model(), size in 0u8..4, alpha in -1.0f64..2.0, seed: u64, t in -5.0f64..5.0) {
        let f = random_field(&table(m, size), alpha, seed);
        let u = propagate(&f, t).unwrap();
        prop_assert!((u.l2_norm() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm());
        prop_assert!((u.sobolev_norm(alpha) - f.sobolev_norm(alpha)).abs() <= 1e-12 * f.sobolev_norm(alpha));
    }

    #[test]
    fn group_law(m in model(), size in 0u8..4, seed: u64, si in -12288i32..12288, ti in -12288i32..12288) {
        let (s, t) = (si as f64 / 4096.0, ti as f64 / 4096.0);
        let f = random_field(&table(m, size), 0.0, seed);
        let a = propagate(&propagate(&f, s).unwrap(), t).unwrap();
        let b = propagate(&f, s + t).unwrap();
        prop_assert!(max_diff(&a, &b) <= 1e-13);
    }

    #[test]
    fn parseval(m in model(), size in 0u8..3, seed: u64) {
        let t = table(m, size);
        let f = random_field(&t, 0.0, seed);
        let g = QuadratureGrid::for_table(&t).unwrap();
        let l2 = lebesgue_norm(&f, 2.0, &g).unwrap();
        prop_assert!((l2 - f.l2_norm()).abs() <= 1e-8 * f.l2_norm());
    }

    #[test]
    fn norms_are_homogeneous(m in model(), seed: u64, re in -3.0f64..3.0, im in -3.0f64..3.0, p in 2.0f64..6.0) {
        let t = table(m, 1);
        let f = random_field(&t, 0.0, seed);
        let c = C64::new(re, im);
        let g = f.scaled(c);
        let grid = QuadratureGrid::for_lp(&t, p).unwrap();
        let a = lebesgue_norm(&f, p, &grid).unwrap();
        let b = lebesgue_norm(&g, p, &grid).unwrap();
        prop_assert!((b - c.norm() * a).abs() <= 1e-10 * (1.0 + b));
        prop_assert!((g.sobolev_norm(0.7) - c.norm() * f.sobolev_norm(0.7)).abs() <= 1e-12 * (1.0 + g.sobolev_norm(0.7)));
    }

    #[test]
    fn sobolev_monotone(m in model(), seed: u64, a in -2.0f64..2.0, d in 0.0f64..2.0) {
        let f = random_field(&table(m, 2), 0.0, seed);
        prop_assert!(f.sobolev_norm(a) <= f.sobolev_norm(a + d) * (1.0 + 1e-14));
    }

    #[test]
    fn partition_of_unity(s in 0.0f64..65536.0) {
        prop_assert!((LPBlockSet::new(8).partition_sum(s) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn blocks_commute_with_propagation(m in model(), seed: u64, k in 0u32..5, t in -2.0f64..2.0) {
        let f = random_field(&table(m, 3), 0.0, seed);
        let a = apply_block(&propagate(&f, t).unwrap(), k);
        let b = propagate(&apply_block(&f, k), t).unwrap();
        for ((x, y), c) in a.coeffs().iter().zip(b.coeffs()).zip(f.coeffs()) {
            prop_assert!((x - y).norm() <= 4.0 * f64::EPSILON * c.norm(), "{} vs {}", x, y);
        }
        prop_assert!(a.l2_norm() <= f.l2_norm() * (1.0 + 1e-15));
    }

    #[test]
    fn block_energy_overlap(m in model(), seed: u64) {
        let f = random_field(&table(m, 3), 0.0, seed);
        let set = LPBlockSet::covering(f.top_eigenvalue().max(1.0));
        let blocks = set.decompose(&f);
        let e: f64 = blocks.iter().map(|b| b.l2_norm().powi(2)).sum();
        let n2 = f.l2_norm().powi(2);
        prop_assert!(e >= 0.5 * n2 * (1.0 - 1e-12) && e <= n2 * (1.0 + 1e-12), "{} vs {}", e, n2);
        let sum = blocks.iter().skip(1).fold(blocks[0].clone(), |acc, b| acc.add(b).unwrap());
        prop_assert!(max_diff(&sum, &f) <= 1e-12);
    }

    #[test]
    fn enclosure_is_sound(m in model(), seed: u64, a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0, t in 0.0f64..1.0) {
        let f = random_field(&table(m, 1), 0.0, seed);
        let x = point_for(m, a, b, c);
        let e = certified_sup(&f, &x, 1e-6).unwrap();
        prop_assert!(e.lo <= e.hi);
        let ut = propagate(&f, t).unwrap().synthesize(&x).unwrap().norm();
        prop_assert!(ut <= e.hi + 1e-12, "|u(t,x)| = {} above {:?}", ut, e);
        let u0 = f.synthesize(&x).unwrap().norm();
        prop_assert!(e.hi >= u0 - 1e-6);
    }

    #[test]
    fn maximal_is_sublinear(m in model(), s1: u64, s2: u64, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let t = table(m, 1);
        let f = random_field(&t, 0.0, s1);
        let g = random_field(&t, 0.0, s2);
        let x = point_for(m, a, b, 0.5);
        let tol = 1e-6;
        let fg = certified_sup(&f.add(&g).unwrap(), &x, tol).unwrap();
        let ef = certified_sup(&f, &x, tol).unwrap();
        let eg = certified_sup(&g, &x, tol).unwrap();
        prop_assert!(fg.lo <= ef.hi + eg.hi + 1e-12);
    }

    #[test]
    fn lee_rhs_is_homogeneous(c in -5.0f64..5.0, w in 0.5f64..50.0, mu in 0.01f64..100.0, q in 1.0f64..8.0) {
        let times: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0).collect();
        let g: Vec<f64> = times.iter().map(|t| (w * t).sin()).collect();
        let dg: Vec<f64> = times.iter().map(|t| w * (w * t).cos()).collect();
        let cg: Vec<f64> = g.iter().map(|v| c * v).collect();
        let cdg: Vec<f64> = dg.iter().map(|v| c * v).collect();
        let a = lee_rhs(&times, &g, &dg, mu, q).unwrap();
        let b = lee_rhs(&times, &cg, &cdg, mu, q).unwrap();
        prop_assert!((b - c.abs() * a).abs() <= 1e-10 * (1.0 + b));
    }

    #[test]
    fn fit_recovers_power_laws(slope in -2.0f64..2.0, c in 0.01f64..100.0, n in 3usize..8) {
        let mut s = ScalingSeries::new("strichartz_5_1", "circle", 6.0, "power law");
        for k in 1..=n {
            let h = 0.5f64.powi(k as i32);
            s.push(h, c * h.powf(slope), 1).unwrap();
        }
        let fit = fit_exponent(&s).unwrap();
        prop_assert!((fit.slope - slope).abs() <= 1e-12);
        prop_assert!((fit.r2 - 1.0).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lemma_ratio_is_scale_invariant(seed: u64, re in 0.1f64..10.0, im in -10.0f64..10.0) {
        let t = Arc::new(enumerate_modes(ModelKind::Circle, 16.0).unwrap());
        let f = random_field(&t, 0.0, seed);
        let g = f.scaled(C64::new(re, im));
        let a = lemma52_check(&f, 0.125, 4.0, 0.1, 1e-3).unwrap();
        let b = lemma52_check(&g, 0.125, 4.0, 0.1, 1e-3).unwrap();
        prop_assert!((a.ratio - b.ratio).abs() <= 2e-3 * a.ratio);
    }

    #[test]
    fn spacetime_norm_is_propagation_invariant(seed: u64, s in 0.0f64..3.0) {
        let t = Arc::new(enumerate_modes(ModelKind::Torus2, 5.0).unwrap());
        let f = random_field(&t, 0.0, seed);
        let sg = QuadratureGrid::for_lp(&t, 2.0).unwrap();
        let tg = TimeGrid::gauss_for(&f, 2.0, 0.0, 1.0).unwrap();
        let a = spacetime_norm(&f, 2.0, &tg, &sg).unwrap();
        let b = spacetime_norm(&propagate(&f, s).unwrap(), 2.0, &tg, &sg).unwrap();
        prop_assert!((a - f.l2_norm()).abs() <= 1e-10 && (a - b).abs() <= 1e-10);
        let blk = block_for_h(&f, 0.5).unwrap();
        prop_assert!(blk.l2_norm() <= f.l2_norm());
    }

    #[test]
    fn ensemble_max_grows_with_trials(seed: u64, n in 1usize..5, extra in 1usize..4) {
        let fam = DataFamily::new(FamilyKind::SobolevEnsemble { alpha: 0.0, seed, trials: n + extra }, 0.0);
        let a = strichartz_ratio(ModelKind::Circle, 0.125, &fam, 6.0, n).unwrap();
        let b = strichartz_ratio(ModelKind::Circle, 0.125, &fam, 6.0, n + extra).unwrap();
        prop_assert!(b >= a);
    }

    #[test]
    fn single_mode_modulus_is_constant_in_time(m in model(), j in 0usize..9, t in -4.0f64..4.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let tab = table(m, 1);
        let f = SpectralField::single_mode(tab.clone(), j % tab.len(), C64::new(0.6, -0.8)).unwrap();
        let x = point_for(m, a, b, 0.3);
        let u0 = f.synthesize(&x).unwrap().norm();
        let ut = propagate(&f, t).unwrap().synthesize(&x).unwrap().norm();
        prop_assert!((u0 - ut).abs() <= 1e-12 * (1.0 + u0));
    }
}
