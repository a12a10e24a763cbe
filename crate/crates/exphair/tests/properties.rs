use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

use exphair::construct::zeros_flatten_bound;
use exphair::dynamics::{
    classify_omega, default_window, find_singular_point, g_steps, orbit0, shadow_threshold, t_level, vertical_ladder_threshold, OmegaClass,
};
use exphair::hair::{eta_star, trace_point, trace_unchecked, HairError};
use exphair::itinerary::{classify_linear_growth, parse_itinerary, Block, ItinerarySpec, TailRule};
use exphair::target::{build_ladder, is_delta_vertical, passes_twice, tower_exp_map, Polyline, TargetRect, DEFAULT_SAMPLE_BUDGET};
use exphair::xnum::{exp_map, f, f_iter, inverse_branch, strip_index, tower_ln, TowerReal};

fn spec_strategy() -> impl Strategy<Value = ItinerarySpec> {
    let prefix = prop::collection::vec(-6i64..=6, 1..6);
    let zeros = 0usize..4;
    let tail = prop_oneof![
        prop::collection::vec(-3i64..=3, 1..4).prop_map(|mut p| {
            if p.iter().all(|&v| v == 0) {
                p[0] = 1;
            }
            TailRule::Period(p)
        }),
        (-5i64..5).prop_map(|start| TailRule::Arith { start }),
    ];
    (zeros, prefix, tail).prop_map(|(z, prefix, tail)| {
        let mut blocks = Vec::new();
        if z > 0 {
            blocks.push(Block::zeros(z));
        }
        blocks.push(Block::literal(prefix));
        ItinerarySpec::new(blocks, tail).unwrap()
    })
}

/// Elements of `Σ_2^1` with a bounded periodic tail.
fn sigma_strategy() -> impl Strategy<Value = ItinerarySpec> {
    (prop::collection::vec(-2i64..=2, 1..5), prop::collection::vec(-2i64..=2, 1..4)).prop_map(|(pre, mut per)| {
        if per.iter().all(|&v| v == 0) {
            per[0] = 1;
        }
        ItinerarySpec::new(vec![Block::literal(pre)], TailRule::Period(per)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exp_then_branch_returns_to_start(re in -30.0f64..600.0, im in -60.0f64..60.0, lambda in 0.5f64..4.0) {
        // Images must stay off the cut and away from 0; strip boundaries map onto the cut.
        let t = (im - PI).rem_euclid(2.0 * PI);
        prop_assume!(t > 1e-6 && t < 2.0 * PI - 1e-6);
        let z = Complex64::new(re, im);
        let w = exp_map(z, lambda).unwrap();
        let back = inverse_branch(w, strip_index(z), lambda).unwrap();
        prop_assert!((back - z).norm() < 1e-12 * (1.0 + z.norm()), "{z} -> {back}");
    }

    #[test]
    fn tower_ln_matches_machine_ln(x in 1.0f64..1e300) {
        let l = tower_ln(TowerReal::from_f64(x)).unwrap().to_f64().unwrap();
        prop_assert!((l - x.ln()).abs() <= 1e-12 * x.ln().abs().max(1e-300) + 1e-15);
    }

    #[test]
    fn f_iter_is_monotone(x in 0.5f64..50.0, y in 0.5f64..50.0, n in 0u32..=10) {
        prop_assume!(x < y);
        prop_assert!(f_iter(TowerReal::from_f64(x), n) < f_iter(TowerReal::from_f64(y), n));
    }

    #[test]
    fn orbit_derivative_bounds_imaginary_part(re in -8.0f64..3.0, im in -20.0f64..20.0, n in 1usize..=6) {
        let mut z = Complex64::new(re, im);
        let mut deriv = 1.0;
        for _ in 0..n {
            match exp_map(z, 1.0) {
                Ok(w) if w.re < 700.0 => {
                    deriv *= w.norm();
                    z = w;
                }
                _ => return Ok(()),
            }
        }
        prop_assert!(z.im.abs() <= deriv * (1.0 + 1e-12));
    }

    #[test]
    fn shift_symbol_coherence(s in spec_strategy(), n in 0u64..=64) {
        let t = s.shift(n);
        for j in 0..=64 {
            prop_assert_eq!(t.symbol_at(j), s.symbol_at(n + j));
        }
    }

    #[test]
    fn linear_growth_closed_under_shift(s in spec_strategy(), n in 0u64..20) {
        for (m, p) in [(3u64, 1u64), (6, 2), (10, 0)] {
            if classify_linear_growth(&s, m, p, 400).is_ok() {
                prop_assert!(classify_linear_growth(&s.shift(n), m + n * p, p, 400).is_ok());
            }
        }
    }

    #[test]
    fn parser_printer_round_trip(s in spec_strategy()) {
        let text = s.to_string();
        let back = parse_itinerary(&text).unwrap();
        prop_assert_eq!(back.normalized(), s.normalized());
        for j in 0..80 {
            prop_assert_eq!(back.symbol_at(j), s.symbol_at(j));
        }
    }

    #[test]
    fn delta_vertical_matches_geometry(delta in 1e-3f64..5.0, y in -200.0f64..200.0, e in 0.0f64..8.0) {
        let r = delta * 10f64.powf(e);
        let direct = y.abs() <= r && r - (r * r - y * y).sqrt() <= delta;
        let gap = (2.0 * delta * r - (y * y + delta * delta)).abs();
        if gap > 1e-12 * (y * y + delta * delta) {
            prop_assert_eq!(is_delta_vertical(TowerReal::from_f64(r), delta, y), direct);
        }
    }

    #[test]
    fn refining_a_curve_keeps_the_pass_count(
        pts in prop::collection::vec((0.0f64..40.0, -6.0f64..6.0), 2..25),
        splits in 1usize..4,
    ) {
        let rect = TargetRect { a: TowerReal::from_f64(12.0), b: TowerReal::from_f64(26.0), k: 0 };
        let coarse: Vec<Complex64> = pts.iter().map(|&(x, y)| Complex64::new(x, y)).collect();
        let mut fine = vec![coarse[0]];
        for w in coarse.windows(2) {
            for i in 1..=splits {
                fine.push(w[0] + (w[1] - w[0]) * (i as f64 / splits as f64));
            }
        }
        let a = passes_twice(&Polyline::from_complex(&coarse), &rect);
        let b = passes_twice(&Polyline::from_complex(&fine), &rect);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn functional_equation(s in sigma_strategy(), t in 0.0f64..5.0, two in any::<bool>()) {
        let lambda = if two { 2.0 } else { 1.0 };
        let eta = eta_star(&s, lambda).unwrap() + t;
        let z = trace_point(&s, eta, None, lambda).unwrap().point;
        let rhs = trace_unchecked(&s.shift(1), f(eta), None, lambda).unwrap().point;
        prop_assert!((exp_map(z, lambda).unwrap() - rhs).norm() < 1e-9);
    }

    #[test]
    fn pullback_stays_in_its_strips(s in sigma_strategy(), t in 0.0f64..5.0) {
        let mut eta = eta_star(&s, 1.0).unwrap() + t;
        for j in 0..4u64 {
            if eta > 600.0 {
                break;
            }
            let z = trace_unchecked(&s.shift(j), eta, None, 1.0).unwrap().point;
            prop_assert_eq!(strip_index(z), s.symbol_at(j), "level {}", j);
            eta = f(eta);
        }
    }

    #[test]
    fn depth_differences_shrink(s in sigma_strategy(), t in 0.0f64..3.0) {
        let eta = eta_star(&s, 1.0).unwrap() + t;
        let diff = |d: u32| match trace_unchecked(&s, eta, Some(d), 1.0) {
            Ok(p) => p.err_bound,
            Err(HairError::DepthInsufficient(x)) => x,
            Err(e) => panic!("{e}"),
        };
        let ds: Vec<f64> = (1..8).map(diff).collect();
        for w in ds.windows(2) {
            if w[0] > 1e-13 {
                prop_assert!(w[1] < w[0], "{ds:?}");
            }
        }
    }

    #[test]
    fn log_branch_contracts_outside_unit_disc(r in 1.01f64..50.0, a in -3.0f64..3.0, dr in -0.01f64..0.01, da in -0.01f64..0.01) {
        let w1 = Complex64::from_polar(r, a);
        let w2 = Complex64::from_polar(r + dr.abs(), a + da);
        let l1 = inverse_branch(w1, 0, 1.0).unwrap();
        let l2 = inverse_branch(w2, 0, 1.0).unwrap();
        prop_assert!((l1 - l2).norm() <= (w1 - w2).norm() * (1.0 + 1e-9));
    }

    #[test]
    fn shadowing_reaches_next_level(n in 0u32..=2, dx in 0.0f64..20.0, y in -40.0f64..40.0) {
        let thr = shadow_threshold(n, 1.0).unwrap();
        let mut z = Complex64::new(thr - 1e-9 - dx, y);
        let mut hit = false;
        for _ in 0..n + 4 {
            z = exp_map(z, 1.0).unwrap();
            if t_level(z.re, 1.0) == Some(n + 1) {
                hit = true;
                break;
            }
        }
        prop_assert!(hit);
    }
}

#[test]
fn comparison_sequences_are_dominated() {
    for x in [2.1, 3.0, 5.0] {
        for a in [2.1, 3.0, 5.0] {
            let y = a * x * 1.01;
            for n in 1..=6 {
                let lhs = f_iter(TowerReal::from_f64(y), n);
                // Compared through logarithms: ln(A F^n(x)) = ln A + ln F^n(x).
                let fx = f_iter(TowerReal::from_f64(x), n);
                let ln_rhs = tower_ln(fx).unwrap().add_small(a.ln());
                assert!(tower_ln(lhs).unwrap() > ln_rhs, "x {x} A {a} n {n}");
            }
        }
    }
}

#[test]
fn flatten_bound_is_monotone_and_composes() {
    for zeta in [5.0, 10.0, 30.0] {
        for k in 1..20 {
            assert!(zeros_flatten_bound(k + 1, zeta) < zeros_flatten_bound(k, zeta));
            if k > 1 {
                assert!(zeros_flatten_bound(k, zeta + 1.0) < zeros_flatten_bound(k, zeta));
            }
        }
        let step = |r: f64| (r / zeta).atan();
        for a in 0..=12usize {
            for b in 0..=12 - a {
                let mut r = zeros_flatten_bound(b + 1, zeta);
                for _ in 0..a {
                    r = step(r);
                }
                assert_eq!(r, zeros_flatten_bound(a + b + 1, zeta));
            }
        }
    }
}

#[test]
fn ladder_images_are_vertical_and_increasing() {
    let l = build_ladder(1.0, 30.0, 2, 1, 13, DEFAULT_SAMPLE_BUDGET).unwrap();
    for n in 0..=12 {
        let r = tower_exp_map(l.a_seq[n], 1.0);
        let y = (2 * l.m_at(n as u64 + 1) + 1) as f64 * PI;
        assert!(is_delta_vertical(r, 1.0, y), "n = {n}");
    }
    assert!(l.a_seq.windows(2).all(|w| w[0] < w[1]));
    assert!(l.a_seq.last().unwrap().level() >= 10);
}

#[test]
fn vertical_ladder_threshold_is_minimal() {
    let check = |np: u64| {
        (0..=6u64).all(|m| {
            let r = tower_exp_map(orbit0((np + m) as u32, 1.0).add_small(-1.0), 1.0);
            let mg = 2 + (g_steps(np, m) + 1);
            is_delta_vertical(r, 1.0, (2 * mg + 1) as f64 * PI)
        })
    };
    let n = vertical_ladder_threshold(2, 1, 1.0);
    assert!(check(n) && check(n + 1));
    assert!(n == 0 || !(check(n - 1) && check(n)));
}

#[test]
fn singular_chain_contracts_and_never_escapes() {
    let s = parse_itinerary("0^6 [1] 0^6 [-1] 0^6 [1] | period [0 0 0 0 0 0 1 0 0 0 0 0 0 -1]").unwrap();
    let c = default_window(1.0).unwrap();
    let est = find_singular_point(&s, 1.0, 3, c).unwrap();
    for w in est.measured.windows(2) {
        assert!(w[1] <= w[0] / PI * 1.1, "{:?}", est.measured);
    }
    let rep = classify_omega(est.point, Some(&s), 1.0, est.certified_prefix as usize - 1).unwrap();
    assert_ne!(rep.class, OmegaClass::Escaping);
}

#[test]
fn hair_points_are_not_singular_candidates() {
    for text in ["[1] | repeat", "[2 -1] | repeat", "[0 1] | repeat"] {
        let s = parse_itinerary(text).unwrap();
        for eta in [12.0, 20.0, 30.0] {
            let z = trace_point(&s, eta, None, 1.0).unwrap().point;
            let rep = classify_omega(z, Some(&s), 1.0, 60).unwrap();
            assert_ne!(rep.class, OmegaClass::SingularCandidate, "{text} at {eta}");
        }
    }
}
