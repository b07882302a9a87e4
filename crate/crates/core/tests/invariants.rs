use cointurn::exact::{self, CoeffOptions, CoeffTable};
use cointurn::schedule::Tail;
use cointurn::simulate::{self, RescaleMode};
use cointurn::stats;
use cointurn::zigzag::{self, PointMeasure, ZigzagPath};
use cointurn::{Schedule, Sign};
use proptest::prelude::*;

fn custom_schedule(max_len: usize) -> impl Strategy<Value = Schedule> {
    (
        prop::collection::vec(0.0f64..=1.0, 0..max_len),
        0.0f64..=1.0,
        0.0f64..=1.0,
    )
        .prop_map(|(values, tail, first)| {
            Schedule::custom(values, Tail::Constant(tail))
                .unwrap()
                .with_first(first)
                .unwrap()
        })
}

fn family_schedule() -> impl Strategy<Value = Schedule> {
    prop_oneof![
        (0.01f64..0.99).prop_map(|c| Schedule::constant(c).unwrap()),
        (0.1f64..3.0, 0.05f64..0.95, 1usize..20).prop_map(|(a, g, n0)| Schedule::power_cooling(a, g, n0).unwrap()),
        (0.1f64..3.0, 1usize..20).prop_map(|(c, n0)| Schedule::critical_cooling(c, n0).unwrap()),
        (0.1f64..3.0, 1usize..20).prop_map(|(c, n0)| Schedule::harmonic_heating(c, n0).unwrap()),
        (0.1f64..3.0, 0.05f64..0.95, 1usize..20).prop_map(|(c, g, n0)| Schedule::power_heating(c, g, n0).unwrap()),
        custom_schedule(30),
    ]
}

proptest! {
    #[test]
    fn probabilities_are_valid(s in family_schedule(), n in 1usize..5000) {
        let p = s.prob(n);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(s.q(n), 1.0 - p);
    }

    #[test]
    fn config_round_trip(s in family_schedule()) {
        let back = Schedule::parse(&s.to_config()).unwrap();
        for n in 1..200 {
            prop_assert_eq!(back.prob(n), s.prob(n));
        }
    }

    #[test]
    fn correlation_cocycle(s in custom_schedule(45), i in 1usize..=40, d1 in 0usize..20, d2 in 0usize..20) {
        let j = (i + d1).min(40);
        let k = (j + d2).min(40);
        let lhs = exact::corr(&s, i, j) * exact::corr(&s, j, k);
        prop_assert!((lhs - exact::corr(&s, i, k)).abs() <= 1e-14);
        prop_assert!(exact::corr(&s, i, k).abs() <= 1.0);
    }

    #[test]
    fn dp_matches_brute_force(s in custom_schedule(14), n in 1usize..=12) {
        for y1 in [None, Some(Sign::Plus), Some(Sign::Minus)] {
            let bf = simulate::brute_force_dist(&s, n, y1).unwrap();
            let dp = simulate::dp_dist(&s, n, y1).unwrap();
            prop_assert!(bf.tv(&dp) < 1e-12);
            prop_assert!((dp.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn variance_matches_exact_law(s in custom_schedule(18), n in 1usize..=16) {
        let d = simulate::brute_force_dist(&s, n, None).unwrap();
        prop_assert!((exact::variance_exact(&s, n) - d.variance()).abs() < 1e-10);
    }

    #[test]
    fn head_prob_is_a_probability(s in family_schedule(), n in 1usize..3000) {
        for y in [Sign::Plus, Sign::Minus] {
            let h = exact::head_prob(&s, n, y);
            prop_assert!((0.0..=1.0).contains(&h));
        }
        let sum = exact::head_prob(&s, n, Sign::Plus) + exact::head_prob(&s, n, Sign::Minus);
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn walk_path_is_consistent(s in family_schedule(), n in 1usize..400, seed in any::<u64>()) {
        let w = simulate::sample_walk(&s, n, seed, None);
        prop_assert_eq!(w.sums.len(), n + 1);
        prop_assert_eq!(w.signs.len(), n);
        prop_assert_eq!(w.turns.len(), n - 1);
        prop_assert_eq!(w.sums[0], 0);
        for k in 1..=n {
            prop_assert!(w.sign(k) == 1 || w.sign(k) == -1);
            prop_assert_eq!(w.sum(k) - w.sum(k - 1), i64::from(w.sign(k)));
            if k >= 2 {
                prop_assert_eq!(w.turn(k), w.sign(k) != w.sign(k - 1));
            }
        }
        prop_assert!(w.sum(n).abs() <= n as i64);
        prop_assert_eq!((w.sum(n) - n as i64).rem_euclid(2), 0);
        prop_assert_eq!(&simulate::sample_walk(&s, n, seed, None), &w);
    }

    #[test]
    fn coefficient_increments(c in 0.05f64..0.95, n in 1usize..2000) {
        let s = Schedule::constant(c).unwrap();
        let t = CoeffTable::covering(&s, n + 1, &CoeffOptions::default()).unwrap();
        let f = 1.0 - 2.0 * s.prob(n + 1);
        prop_assert!((t.a(n) - 1.0 - f * t.a(n + 1)).abs() < 1e-9);
        prop_assert!(t.v(n + 1) >= t.v(n));
        prop_assert!(t.a(n) > 0.0);
    }

    #[test]
    fn zigzag_is_bounded_and_lipschitz(c in 0.2f64..4.0, eps in 1e-4f64..0.05, seed in any::<u64>()) {
        let z = zigzag::sample_zigzag(c, 1.0, eps, seed).unwrap();
        let grid: Vec<f64> = (0..=2000).map(|i| i as f64 / 2000.0).collect();
        let vals: Vec<f64> = grid.iter().map(|&t| z.eval(t).unwrap()).collect();
        for (&t, &v) in grid.iter().zip(&vals) {
            prop_assert!(v.abs() <= t + 1e-12);
        }
        for w in grid.windows(2).zip(vals.windows(2)) {
            let ((t0, t1), (v0, v1)) = ((w.0[0], w.0[1]), (w.1[0], w.1[1]));
            prop_assert!((v1 - v0).abs() <= (t1 - t0) + 1e-12);
        }
        prop_assert!(z.truncation_bound(0.5) <= 2.0 * eps + 1e-15);
    }

    #[test]
    fn zigzag_slopes_alternate(c in 0.5f64..4.0, seed in any::<u64>()) {
        let z = zigzag::sample_zigzag(c, 1.0, 1e-3, seed).unwrap();
        let atoms = &z.pm.atoms;
        let mut knots = vec![1e-3];
        knots.extend(atoms.iter().copied());
        knots.push(1.0);
        let mut prev_slope: Option<f64> = None;
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a < 1e-9 {
                continue;
            }
            let slope = (z.eval(b).unwrap() - z.eval(a).unwrap()) / (b - a);
            prop_assert!((slope.abs() - 1.0).abs() < 1e-6);
            if let Some(p) = prev_slope {
                prop_assert!(p * slope < 0.0);
            }
            prev_slope = Some(slope);
        }
    }

    #[test]
    fn zigzag_sign_flip(c in 0.2f64..4.0, seed in any::<u64>(), t in 0.0f64..=1.0) {
        let z = zigzag::sample_zigzag(c, 1.0, 1e-3, seed).unwrap();
        let flipped = ZigzagPath::new(z.pm.clone(), z.w.flip());
        prop_assert_eq!(flipped.eval(t).unwrap(), -z.eval(t).unwrap());
        prop_assert_eq!(flipped.zeros(0.01, 1.0).unwrap(), z.zeros(0.01, 1.0).unwrap());
    }

    #[test]
    fn ppp_atoms_in_window(c in 0.1f64..5.0, eps in 1e-4f64..0.5, seed in any::<u64>()) {
        let pm: PointMeasure = zigzag::sample_ppp(c, 1.0, eps, seed).unwrap();
        prop_assert!(pm.atoms.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(pm.atoms.iter().all(|&a| a > eps && a <= 1.0));
        prop_assert_eq!(pm.count_in(0.0, 1.0), pm.atoms.len());
    }

    #[test]
    fn beta_symmetry(a in 0.1f64..8.0, b in 0.1f64..8.0, x in 0.0f64..=1.0) {
        let lhs = stats::beta_cdf(a, b, x).unwrap();
        let rhs = 1.0 - stats::beta_cdf(b, a, 1.0 - x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn cdfs_are_monotone(a in 0.1f64..8.0, b in 0.1f64..8.0) {
        let mut prev_beta = 0.0;
        let mut prev_norm = 0.0;
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let fb = stats::beta_cdf(a, b, x).unwrap();
            let fn_ = stats::normal_cdf(8.0 * x - 4.0);
            prop_assert!((0.0..=1.0).contains(&fb));
            prop_assert!(fb >= prev_beta - 1e-14);
            prop_assert!(fn_ >= prev_norm);
            prev_beta = fb;
            prev_norm = fn_;
        }
    }

    #[test]
    fn ks_is_invariant_under_monotone_maps(xs in prop::collection::vec(0.001f64..0.999, 1..200)) {
        let d = stats::ks_one(&xs, |x| x).unwrap();
        let mapped: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        let e = stats::ks_one(&mapped, |y| y.ln()).unwrap();
        prop_assert!((d - e).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&d));
    }
}

/// Sign changes seen by sampling `x` densely; misses only pairs of zeros
/// closer than the mesh.
fn grid_zeros(z: &ZigzagPath, t0: f64, t1: f64, points: usize) -> usize {
    let mut count = 0;
    let mut last = 0.0f64;
    for i in 0..=points {
        let t = t0 + (t1 - t0) * i as f64 / points as f64;
        let v = z.eval(t).unwrap();
        if v != 0.0 {
            if last != 0.0 && v.signum() != last.signum() {
                count += 1;
            }
            last = v;
        }
    }
    count
}

#[test]
fn zeros_match_dense_grid() {
    let mut total = 0;
    for seed in 0..200u64 {
        let z = zigzag::sample_zigzag(1.0, 1.0, 1e-3, seed).unwrap();
        let fast = z.zeros(0.05, 1.0).unwrap();
        assert_eq!(fast, grid_zeros(&z, 0.05, 1.0, 200_000), "seed {seed}");
        total += fast;
    }
    assert!(total > 0);
}

#[test]
fn diffusive_rescaling_of_constant_schedule() {
    let c = 0.3;
    let n = 1000;
    let s = Schedule::constant(c).unwrap().with_first(c).unwrap();
    let k = c / (1.0 - c);
    let grid: Vec<f64> = [1, 2, 3, 4, 5, 6, 8, 9].iter().map(|&i| i as f64 / 10.0).collect();
    for seed in 0..20 {
        let w = simulate::sample_walk(&s, n, seed, None);
        let r = simulate::rescaled_path(&w, &s, RescaleMode::Diffusive { scale: n }, &grid, &CoeffOptions::default())
            .unwrap();
        let root = (n as f64).sqrt();
        for &(t, v) in &r.samples {
            let x = k * n as f64 * t;
            assert_eq!(v, w.sum(x.ceil() as usize) as f64 / root);
            assert!((v - w.sum(x.floor() as usize) as f64 / root).abs() <= 1.0 / root + 1e-12);
        }
    }
}

#[test]
fn cooling_rescaling_interpolates() {
    let s = Schedule::power_cooling(1.0, 0.5, 1).unwrap();
    let w = simulate::sample_walk(&s, 100, 7, None);
    let grid = [0.0, 0.25, 0.505, 1.0];
    let r = simulate::rescaled_path(&w, &s, RescaleMode::Cooling { scale: 100 }, &grid, &CoeffOptions::default())
        .unwrap();
    assert_eq!(r.samples[0].1, 0.0);
    assert_eq!(r.samples[1].1, w.sum(25) as f64 / 100.0);
    let mid = (w.sum(50) as f64 + 0.5 * f64::from(w.sign(51))) / 100.0;
    assert!((r.samples[2].1 - mid).abs() < 1e-12);
    assert_eq!(r.samples[3].1, w.sum(100) as f64 / 100.0);
    assert!(simulate::rescaled_path(&w, &s, RescaleMode::Cooling { scale: 50 }, &[3.0], &CoeffOptions::default()).is_err());
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let h = (b - a) / intervals as f64;
    let mut sum = f(a) + f(b);
    for i in 1..intervals {
        let x = a + i as f64 * h;
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    sum * h / 3.0
}

#[test]
fn beta_cdf_matches_quadrature() {
    for &(a, b) in &[(1.0, 1.0), (2.0, 3.0), (4.5, 2.5), (7.0, 7.0), (1.0, 3.0)] {
        let ln_b = quad_ln_beta(a, b);
        for &x in &[0.05, 0.3, 0.5, 0.77, 0.99] {
            let q = simpson(|u| ((a - 1.0) * u.ln() + (b - 1.0) * (1.0 - u).ln() - ln_b).exp(), 1e-300, x, 20_000);
            let got = stats::beta_cdf(a, b, x).unwrap();
            assert!((got - q).abs() < 1e-8, "a={a} b={b} x={x}: {got} vs {q}");
        }
    }
    // arcsine law
    for &x in &[0.001f64, 0.1, 0.5, 0.9, 0.999] {
        let want = 2.0 / std::f64::consts::PI * x.sqrt().asin();
        assert!((stats::beta_cdf(0.5, 0.5, x).unwrap() - want).abs() < 1e-12);
    }
}

/// `ln B(a, b)` by quadrature; the mesh is only accurate for smooth densities.
fn quad_ln_beta(a: f64, b: f64) -> f64 {
    simpson(|u| ((a - 1.0) * u.ln() + (b - 1.0) * (1.0 - u).ln()).exp(), 1e-300, 1.0 - 1e-16, 200_000).ln()
}

#[test]
fn normal_cdf_matches_quadrature() {
    let density = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    for &x in &[-3.0, -1.2, 0.0, 0.4, 1.959964, 5.0] {
        let q = 0.5 + simpson(density, 0.0, x, 20_000);
        assert!((stats::normal_cdf(x) - q).abs() < 1e-12, "x={x}");
    }
    assert!((stats::normal_cdf(1.959964) - 0.975).abs() < 1e-6);
    assert!((stats::normal_cdf_var(2.0, 4.0) - stats::normal_cdf(1.0)).abs() < 1e-15);
}

#[test]
fn ks_on_uniform_draws() {
    let xs: Vec<f64> = (0..10_000u64).map(|i| cointurn::rng::unit_f64(&mut cointurn::rng::seeded(i))).collect();
    assert!(stats::ks_one(&xs, |x| x.clamp(0.0, 1.0)).unwrap() < 0.02);
}
