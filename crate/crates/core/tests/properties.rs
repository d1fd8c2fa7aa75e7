use proptest::prelude::*;

use rtdiff_core::autocorrelation::{
    xi_analytic_linear_mod, xi_empirical, xi_mixing, xi_rotation_irrational, xi_rotation_rational,
};
use rtdiff_core::combs::{build_comb, finite_autocorrelation, periodogram};
use rtdiff_core::convergence::{
    continued_fraction_convergents, darboux_term, xi_convergence_run, RotationNumber, RotationSequenceSpec,
};
use rtdiff_core::diffraction::{prefix_mass, rotation_diffraction_irrational, rotation_diffraction_rational};
use rtdiff_core::dynamics::orbit;
use rtdiff_core::transfer::build_ulam;
use rtdiff_core::{IntervalMap, MeasureSpec, Observable, ReferencePoint, WeightedComb, XiSequence};

fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Non-negative step functions with up to five pieces.
fn step_fn() -> impl Strategy<Value = Observable> {
    (
        proptest::collection::vec(0.001f64..0.999, 0..5),
        proptest::collection::vec(0.0f64..3.0, 6),
    )
        .prop_map(|(mut cuts, values)| {
            cuts.sort_by(|a, b| a.total_cmp(b));
            cuts.dedup();
            let mut breaks = vec![0.0];
            breaks.extend(cuts);
            breaks.push(1.0);
            let values = values[..breaks.len() - 1].to_vec();
            Observable::step(breaks, values).unwrap()
        })
}

/// A coprime pair `p/q` with `q ≤ 40`.
fn rational() -> impl Strategy<Value = (u64, u64)> {
    (1u64..=40)
        .prop_flat_map(|q| (0..q, Just(q)))
        .prop_filter("coprime", |&(p, q)| gcd(p, q) == 1)
}

fn comb() -> impl Strategy<Value = WeightedComb> {
    (any::<bool>(), proptest::collection::vec(0.0f64..2.0, 3..80)).prop_map(|(invertible, w)| {
        if invertible {
            let mut w = w;
            if w.len() % 2 == 0 {
                w.pop();
            }
            let n = (w.len() / 2) as i64;
            WeightedComb::new(-n, w, true).unwrap()
        } else {
            WeightedComb::new(0, w, false).unwrap()
        }
    })
}

fn comb_window(c: &WeightedComb) -> usize {
    if c.is_invertible() {
        c.end() as usize
    } else {
        c.weights().len() - 1
    }
}

fn assert_cauchy_schwarz(xi: &XiSequence) {
    let zero = xi.get(0).unwrap();
    for (z, v) in xi.iter() {
        assert!(
            v.abs() <= zero * (1.0 + 1e-12) + 1e-15,
            "|Xi({z})| = {v} > Xi(0) = {zero}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn finite_autocorrelation_is_even(c in comb(), frac in 0.1f64..1.0) {
        let n = ((comb_window(&c) as f64 * frac) as usize).max(1);
        let gamma = finite_autocorrelation(&c, n).unwrap();
        prop_assert_eq!(gamma.max_asymmetry(), 0.0);
    }

    #[test]
    fn periodogram_is_the_cosine_series(c in comb(), frac in 0.1f64..1.0, theta in 0.0f64..1.0) {
        let n = ((comb_window(&c) as f64 * frac) as usize).max(1);
        let gamma = finite_autocorrelation(&c, n).unwrap();
        let series: f64 = gamma
            .iter()
            .map(|(z, v)| v * (2.0 * std::f64::consts::PI * theta * z as f64).cos())
            .sum();
        let p = periodogram(&c, n, &[theta]).unwrap()[0];
        prop_assert!(p >= 0.0);
        prop_assert!((p - series).abs() <= 1e-10, "{} vs {}", p, series);
    }

    #[test]
    fn rotation_orbit_identity(alpha in 0.0f64..1.0, y in 0.0f64..1.0, m in -1_000_000i64..=1_000_000, n in -1_000_000i64..=1_000_000) {
        let map = IntervalMap::rotation(alpha).unwrap();
        let direct = map.iterate(y, m + n).unwrap();
        let composed = map.iterate(map.iterate(y, m).unwrap(), n).unwrap();
        prop_assert!(circle_dist(direct, composed) <= 1e-12);
    }

    #[test]
    fn atomic_orbit_is_rotation_invariant((p, q) in rational(), w in 0.0f64..1.0) {
        let atoms = MeasureSpec::atomic_orbit(q, w).unwrap().atoms().unwrap();
        let rotation = IntervalMap::rotation_rational(p, q).unwrap();
        for a in &atoms {
            let image = rotation.apply(*a);
            prop_assert!(atoms.iter().any(|b| circle_dist(*b, image) <= 1e-12));
        }
    }

    #[test]
    fn circle_autocorrelation_is_even(f in step_fn(), t in 0.0f64..1.0) {
        prop_assert!((f.circle_autocorrelation(t) - f.circle_autocorrelation(1.0 - t)).abs() <= 1e-10);
        let square = f.integrate_square(&MeasureSpec::Lebesgue);
        prop_assert!((f.circle_autocorrelation(0.0) - square).abs() <= 1e-10);
    }

    #[test]
    fn rational_parseval(f in step_fn(), (p, q) in rational(), w in 0.0f64..1.0) {
        let spec = rotation_diffraction_rational(p, q, w, &f).unwrap();
        let s = f.cyclic_samples(p, q, w).unwrap();
        let mean_sq = s.iter().map(|x| x * x).sum::<f64>() / q as f64;
        prop_assert!((spec.total_atom_mass() - mean_sq).abs() <= 1e-12);
    }

    #[test]
    fn irrational_masses_stay_below_the_square_mean(f in step_fn(), alpha in 0.01f64..0.99, modes in 1usize..200) {
        let spec = rotation_diffraction_irrational(alpha, &f, modes).unwrap();
        let square = f.integrate_square(&MeasureSpec::Lebesgue);
        prop_assert!(spec.total_atom_mass() <= square * (1.0 + 1e-9));
        let deficit = spec.parseval_deficit().unwrap();
        prop_assert!((spec.total_atom_mass() + deficit - square).abs() <= 1e-9 * square.max(1.0));
    }

    #[test]
    fn rotation_engines_are_even_and_bounded(f in step_fn(), (p, q) in rational(), w in 0.0f64..1.0, alpha in 0.01f64..0.99) {
        let xi = xi_rotation_rational(p, q, w, &f, 30).unwrap();
        prop_assert_eq!(xi.coefficients().max_asymmetry(), 0.0);
        assert_cauchy_schwarz(&xi);
        let xi = xi_rotation_irrational(alpha, &f, 30).unwrap();
        prop_assert_eq!(xi.coefficients().max_asymmetry(), 0.0);
        assert_cauchy_schwarz(&xi);
    }

    #[test]
    fn grid_steps_make_rational_and_irrational_engines_agree((p, q) in rational(), values in proptest::collection::vec(0.0f64..2.0, 40)) {
        // Breakpoints on the 1/q grid, reference point 0.
        let breaks: Vec<f64> = (0..=q).map(|k| k as f64 / q as f64).collect();
        let f = Observable::step(breaks, values[..q as usize].to_vec()).unwrap();
        let rational = xi_rotation_rational(p, q, 0.0, &f, 2 * q as usize).unwrap();
        let irrational = xi_rotation_irrational(p as f64 / q as f64, &f, 2 * q as usize).unwrap();
        for (z, v) in rational.iter() {
            prop_assert!((v - irrational.get(z).unwrap()).abs() <= 1e-12, "z = {}", z);
        }
    }

    #[test]
    fn mixing_engines_are_even_and_bounded(k in 2u32..=7, coeffs in proptest::collection::vec(0.0f64..1.0, 1..4)) {
        let f = Observable::polynomial(coeffs).unwrap();
        let xi = xi_analytic_linear_mod(k, &f, 12).unwrap();
        prop_assert_eq!(xi.coefficients().max_asymmetry(), 0.0);
        assert_cauchy_schwarz(&xi);
        let map = IntervalMap::linear_mod(k).unwrap();
        let xi = xi_mixing(&map, &f, 12, 32 * k as usize).unwrap();
        prop_assert_eq!(xi.coefficients().max_asymmetry(), 0.0);
        assert_cauchy_schwarz(&xi);
    }

    #[test]
    fn empirical_engine_is_even_and_bounded(f in step_fn(), k in 2u32..=7, seed in any::<u64>(), alpha in 0.01f64..0.99, y in 0.0f64..1.0) {
        let map = IntervalMap::linear_mod(k).unwrap();
        let xi = xi_empirical(&map, &MeasureSpec::Lebesgue, &f, ReferencePoint::Typical { seed }, 10, 2000).unwrap();
        prop_assert_eq!(xi.coefficients().max_asymmetry(), 0.0);
        let rot = IntervalMap::rotation(alpha).unwrap();
        let xi = xi_empirical(&rot, &MeasureSpec::Lebesgue, &f, y, 10, 2000).unwrap();
        prop_assert_eq!(xi.coefficients().max_asymmetry(), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ulam_powers_stay_stochastic(k in 2u32..=6, bins in 8usize..48) {
        let map = IntervalMap::linear_mod(k).unwrap();
        let op = build_ulam(&map, bins).unwrap();
        let a = op.dense();
        for row in &a {
            prop_assert!(row.iter().all(|&x| x >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        let mut power = a.clone();
        for _ in 0..6 {
            power = (0..bins)
                .map(|i| (0..bins).map(|j| (0..bins).map(|l| power[i][l] * a[l][j]).sum()).collect())
                .collect();
            for row in &power {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn convergents_respect_the_darboux_bound(f in step_fn(), quotients in proptest::collection::vec(1u32..=4, 6)) {
        // Bounded partial quotients followed by a golden tail keep q_6 ≤ 5^6.
        let alpha = quotients.iter().rev().fold((5f64.sqrt() - 1.0) / 2.0, |x, &a| 1.0 / (a as f64 + x));
        let conv = continued_fraction_convergents(alpha, 6).unwrap();
        let spec = RotationSequenceSpec::from_convergents(RotationNumber::irrational(alpha).unwrap(), f.clone(), &conv, 0.0).unwrap();
        let report = xi_convergence_run(&spec, 8).unwrap();
        for (row, &(_, q)) in report.rows.iter().zip(&conv) {
            prop_assert!(row.sup_dist <= row.bound * (1.0 + 1e-12) + 1e-15);
            prop_assert!(row.bound + 1e-15 >= darboux_term(&f, q, 0.0));
        }
    }
}

#[test]
fn irrational_empirical_autocorrelation_at_adversarial_points() {
    let alpha = 2f64.sqrt() - 1.0;
    let map = IntervalMap::rotation(alpha).unwrap();
    let f = Observable::step(vec![0.0, 0.25, 0.5, 1.0], vec![1.0, 0.0, 2.0]).unwrap();
    let exact = xi_rotation_irrational(alpha, &f, 16).unwrap();
    for y in [0.0, 0.25, 0.5, 1.0 - 1e-16, alpha, 1.0 - alpha, 0.5 - 1e-12] {
        let xi = xi_empirical(&map, &MeasureSpec::Lebesgue, &f, y, 16, 1_000_000).unwrap();
        let d = xi
            .iter()
            .map(|(z, v)| (v - exact.get(z).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(d < 5e-3, "y = {y}: {d}");
    }
}

#[test]
fn estimated_atom_mass_settles_under_doubling() {
    let map = IntervalMap::linear_mod(2).unwrap();
    let f = Observable::identity();
    let sizes = [1usize << 10, 1 << 11, 1 << 12, 1 << 13, 1 << 14, 1 << 15];
    let mut gaps = vec![Vec::new(); sizes.len() - 1];
    for seed in 0..15 {
        let pts = orbit(&map, ReferencePoint::Typical { seed }, 0, *sizes.last().unwrap()).unwrap();
        let w: Vec<f64> = pts.iter().map(|&x| f.eval(x)).collect();
        let masses: Vec<f64> = sizes.iter().map(|&n| prefix_mass(&w[..n], 0.5, 0.0)).collect();
        for (i, pair) in masses.windows(2).enumerate() {
            gaps[i].push((pair[1] - pair[0]).abs());
        }
    }
    let medians: Vec<f64> = gaps
        .into_iter()
        .map(|mut g| {
            g.sort_by(|a, b| a.total_cmp(b));
            g[g.len() / 2]
        })
        .collect();
    // Four consecutive doublings, and the trend across all of them.
    let last = medians.len() - 1;
    assert!(medians[last] < medians[0] / 4.0, "{medians:?}");
    let shrinking = medians.windows(2).filter(|w| w[1] < w[0]).count();
    assert!(shrinking >= 3, "{medians:?}");
}

#[test]
fn combs_from_orbits_give_non_negative_periodograms() {
    let f = Observable::step(vec![0.0, 0.3, 1.0], vec![2.0, 0.5]).unwrap();
    let grid: Vec<f64> = (0..300).map(|j| j as f64 / 300.0 + 1e-4).collect();
    for map in [
        IntervalMap::linear_mod(3).unwrap(),
        IntervalMap::rotation(0.618).unwrap(),
    ] {
        let c = build_comb(&map, &f, ReferencePoint::Typical { seed: 11 }, 700).unwrap();
        assert!(periodogram(&c, 700, &grid).unwrap().iter().all(|&p| p >= 0.0));
    }
}
