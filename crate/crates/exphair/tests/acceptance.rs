//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use exphair::construct::{assemble_theorem_a, min_zero_block, parse_blocks, ConstructionCertificate};
use exphair::dynamics::{
    classify_omega, contraction_experiment, default_window, find_singular_point, shadow_check, shadow_threshold, OmegaClass, Side,
};
use exphair::hair::{eta_star, trace_point, trace_unchecked};
use exphair::itinerary::{
    build_fast_itinerary, classify_linear_growth, is_fast, parse_itinerary, Block, FastVerdict, ItinerarySpec, TailRule, ZeroLengths,
};
use exphair::target::{build_ladder, covering_check, is_delta_vertical, DEFAULT_SAMPLE_BUDGET};
use exphair::xnum::{exp_map, f, find_fixed_points, strip_index, TowerReal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Random element of `Σ_2^1`: a prefix with `|s_j| ≤ 2 + j` and a period bounded by 2.
fn random_itinerary(rng: &mut ChaCha8Rng) -> ItinerarySpec {
    let prefix: Vec<i64> = (0..rng.gen_range(1..6)).map(|j| rng.gen_range(-(2 + j)..=2 + j)).collect();
    let mut period: Vec<i64> = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(-2..=2)).collect();
    if period.iter().all(|&v| v == 0) {
        period[0] = 1;
    }
    ItinerarySpec::new(vec![Block::literal(prefix)], TailRule::Period(period)).unwrap()
}

fn functional_equation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let s = random_itinerary(&mut rng);
        let lambda = if i % 2 == 0 { 1.0 } else { 2.0 };
        let lo = eta_star(&s, lambda).unwrap();
        for t in [0.0, 1.7, 3.3, 5.0] {
            let eta = lo + t;
            let z = trace_point(&s, eta, None, lambda).unwrap().point;
            let lhs = exp_map(z, lambda).unwrap();
            let rhs = trace_unchecked(&s.shift(1), f(eta), None, lambda).unwrap().point;
            worst = worst.max((lhs - rhs).norm());
        }
    }
    outcome(worst < 1e-9, format!("max residual {worst:.3e}"))
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn asymptotic_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut lo_s, mut hi_s) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..20 {
        let s = random_itinerary(&mut rng);
        let lambda = if i % 2 == 0 { 1.0 } else { 2.0 };
        let e0 = eta_star(&s, lambda).unwrap();
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for k in 0..=32 {
            let eta = e0 + 8.0 * k as f64 / 32.0;
            let z = trace_point(&s, eta, None, lambda).unwrap().point;
            let asym = Complex64::new(eta - lambda.ln(), 2.0 * PI * s.symbol_at(0) as f64);
            xs.push(-eta);
            ys.push((z - asym).norm().ln());
        }
        let k = slope(&xs, &ys);
        lo_s = lo_s.min(k);
        hi_s = hi_s.max(k);
    }
    outcome(lo_s >= 0.9 && hi_s <= 1.1, format!("slopes in [{lo_s:.4}, {hi_s:.4}]"))
}

fn vertical_circles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut disagree = 0;
    for _ in 0..10_000 {
        let delta = rng.gen_range(1e-3..4.0);
        let y = rng.gen_range(-100.0..100.0);
        let r = delta * 10f64.powf(rng.gen_range(0.0..6.0));
        let fast = is_delta_vertical(TowerReal::from_f64(r), delta, y);
        // Rightmost intersection of |z| = r with Im z = y, if any.
        let direct = y.abs() <= r && r - (r * r - y * y).sqrt() <= delta;
        let gap = (2.0 * delta * r - (y * y + delta * delta)).abs();
        let band = 1e-12 * (y * y + delta * delta);
        if fast != direct && gap > band {
            disagree += 1;
        }
    }
    outcome(disagree == 0, format!("{disagree} disagreements"))
}

fn covering() -> Outcome {
    let ladder = build_ladder(1.0, 30.0, 2, 1, 12, DEFAULT_SAMPLE_BUDGET).unwrap();
    let mut failed = Vec::new();
    for n in 0..=8 {
        for k in 0..=2 {
            let c = covering_check(&ladder, n, k, 1.0);
            if !c.pass {
                failed.push((n, k));
            }
        }
    }
    outcome(failed.is_empty(), format!("failed (n,k): {failed:?}"))
}

fn pass_twice() -> Outcome {
    let ladder = build_ladder(1.0, 30.0, 2, 1, 3, DEFAULT_SAMPLE_BUDGET).unwrap();
    let rect = ladder.rect(1, 1);
    let found = min_zero_block(&ItinerarySpec::constant(1), &rect, 56, 1.0, 30.0).unwrap();
    let frozen = found.k == 13 && found.persistent();
    outcome(frozen, format!("k = {}, counts {:?}", found.k, found.counts))
}

fn assembler() -> Outcome {
    let blocks = parse_blocks("[1] [-1]").unwrap();
    let cert = assemble_theorem_a(&blocks, 1.0, 2, 1, 1, 30.0).unwrap();
    let text = cert.to_text();
    let reparsed = ConstructionCertificate::parse(&text).unwrap();
    let counts = reparsed.verify().unwrap();
    let pass = cert.crossing_counts[0] >= 2 && counts == cert.crossing_counts && reparsed == cert;
    outcome(pass, format!("crossings {:?}, re-verified {:?}", cert.crossing_counts, counts))
}

fn shadowing() -> Outcome {
    let thr = shadow_threshold(2, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bad = 0;
    for _ in 0..20 {
        let z = Complex64::new(rng.gen_range(thr - 20.0..thr), rng.gen_range(-50.0..50.0));
        let r = shadow_check(z, 2, 1.0).unwrap();
        if !(r.hypothesis && r.all_within && r.final_level == Some(3)) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("threshold {thr:.4}, {bad} failures"))
}

fn singular_point() -> Outcome {
    let s =
        parse_itinerary("0^10 [1] 0^10 [-1] 0^10 [1] 0^10 [-1] 0^10 [1] 0^10 [-1] | period [0 0 0 0 0 0 0 0 0 0 1 0 0 0 0 0 0 0 0 0 0 -1]")
            .unwrap();
    let c = default_window(1.0).unwrap();
    let est = find_singular_point(&s, 1.0, 6, c).unwrap();
    let bound_ok = est.diameter_bound <= est.window_diameter / PI.powi(7) && est.measured[6] <= est.diameter_bound;
    // Independent forward check of the strips on the certified prefix.
    let mut z = est.point;
    let mut follows = true;
    for j in 0..est.certified_prefix {
        if strip_index(z) != s.symbol_at(j) {
            follows = false;
            break;
        }
        z = exp_map(z, 1.0).unwrap();
    }
    let sixth = s.block_markers(5).unwrap();
    let prefix_ok = est.certified_prefix > sixth.d;
    let rep = classify_omega(est.point, Some(&s), 1.0, est.certified_prefix as usize - 1).unwrap();
    let pass = bound_ok && follows && prefix_ok && rep.class == OmegaClass::SingularCandidate;
    outcome(
        pass,
        format!(
            "bound {:.3e} vs {:.3e}, prefix {}, class {:?}",
            est.diameter_bound,
            est.window_diameter / PI.powi(7),
            est.certified_prefix,
            rep.class
        ),
    )
}

fn contraction() -> Outcome {
    let rep = contraction_experiment(2, 1.0, 60, Side::Plus).unwrap();
    let q = find_fixed_points(1.0).unwrap().q_plus;
    let tail = &rep.diameters[rep.m0 - 1..];
    let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
    let dist = (rep.terminal - q).norm();
    outcome(decreasing && dist < 1e-6, format!("m0 = {}, terminal distance {dist:.3e}", rep.m0))
}

/// `N` from the generator's proof: the end of literal block `t_K`, where `K` is
/// the first index with `F^K(1) > A x`. Blocks past the horizon merge into the
/// arithmetic tail, so `N` is capped at the tail start.
fn fast_start(spec: &ItinerarySpec, x: f64, a: f64) -> u64 {
    let k = (0..).find(|&k| TowerReal::from_f64(1.0).f_iter(k).to_f64().is_none_or(|v| v > a * x)).unwrap();
    spec.block_markers(k as usize).map(|m| m.d).unwrap_or(spec.prefix_len()).min(spec.prefix_len())
}

fn fast_itinerary() -> Outcome {
    let horizon = 10_000;
    let fast = build_fast_itinerary(ZeroLengths::Linear { base: 1, step: 1 }, horizon);
    let mut failures = Vec::new();
    let mut early = 0;
    for x in [2.1, 2.5, 3.0] {
        for a in [2.1, 2.5, 3.0] {
            let n0 = fast_start(&fast.spec, x, a);
            let v = is_fast(&fast.spec, x, a, n0, horizon);
            if !v.iter().all(|r| matches!(r, FastVerdict::Pass { .. })) {
                failures.push((x, a));
            }
            early += is_fast(&fast.spec, x, a, 0, n0).iter().filter(|r| !matches!(r, FastVerdict::Pass { .. })).count();
        }
    }
    let growth = classify_linear_growth(&fast.spec, 0, 1, horizon).is_ok();
    outcome(
        failures.is_empty() && growth,
        format!("non-fast (x, A): {failures:?}, linear growth {growth}, {early} non-witnessed n below N"),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, Duration, fn() -> Outcome); 10] = [
        ("functional equation", Duration::from_secs(30), functional_equation),
        ("asymptotic form", Duration::from_secs(30), asymptotic_form),
        ("vertical circles", Duration::from_secs(5), vertical_circles),
        ("covering certificates", Duration::from_secs(10), covering),
        ("pass twice", Duration::from_secs(300), pass_twice),
        ("assembler depth 1", Duration::from_secs(600), assembler),
        ("shadowing", Duration::from_secs(5), shadowing),
        ("singular point", Duration::from_secs(60), singular_point),
        ("contraction", Duration::from_secs(60), contraction),
        ("fast itinerary", Duration::from_secs(10), fast_itinerary),
    ];
    let mut failed = Vec::new();
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        let dt = t.elapsed();
        let pass = o.pass && dt <= *budget;
        println!("criterion {:>2} {:<22} {} ({}; {:.2?} of {:?})", i + 1, name, if pass { "PASS" } else { "FAIL" }, o.detail, dt, budget);
        if !pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
