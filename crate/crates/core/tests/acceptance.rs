//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured quantities (run with `--nocapture` to see them).

mod common;

use std::sync::Arc;
use std::time::Instant;

use rug::{Integer, Rational};

use ergodeq::birkhoff::{
    birkhoff_forward_from, block_average_backward, block_average_forward, cesaro_sequence,
    doubling_blocks,
};
use ergodeq::dynamics::thm2::{
    construct_thm2_potential, wilson_halfwidth, MonteCarloConfig, ScanGrid,
};
use ergodeq::dynamics::{build_blocks, minima_subsequence, RotationSystem};
use ergodeq::error::Error;
use ergodeq::lyapunov::avalanche::{
    avalanche_check, gap_demo_forward_vs_backward, gap_demo_upper_vs_lower,
};
use ergodeq::lyapunov::{
    ac_support_scan, exponents, g_closed_form, pair_norm, TransferMatrix,
};
use ergodeq::numerics::Real;
use ergodeq::operator::{
    eigenvalues, seeded_rational_levels, trace_moment_exact, truncate,
    truncated_trace_moment_exact, PotentialSource, Side,
};

use common::{charpoly_eigenvalues, log_norm_oracle, uniform01};

fn golden(u0: &str) -> RotationSystem {
    RotationSystem::golden(Real::parse_rational(u0).unwrap()).unwrap()
}

#[test]
fn criterion_01_norm_identities() {
    let t0 = Instant::now();
    let mut worst_one = 0.0f64;
    let mut worst_pair = 0.0f64;
    for i in 0..1000u64 {
        let x = 100.0 * uniform01(101, 2 * i);
        let y = 100.0 * uniform01(101, 2 * i + 1);
        let a = TransferMatrix::one_step(x, 0.0);
        let d1 = (log_norm_oracle(a.m) - g_closed_form(x)).abs();
        worst_one = worst_one.max(d1);
        let prod = TransferMatrix::one_step(x, 0.0).mul(&TransferMatrix::one_step(y, 0.0));
        let d2 = (log_norm_oracle(prod.m) - pair_norm(x, y)).abs();
        worst_pair = worst_pair.max(d2);
    }
    let elapsed = t0.elapsed();
    assert!(worst_one <= 1e-10, "one-step defect {worst_one:.3e}");
    assert!(worst_pair <= 1e-10, "pair defect {worst_pair:.3e}");
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 01 norm identities: PASS (one-step {worst_one:.2e}, pair {worst_pair:.2e}, {elapsed:?})"
    );
}

#[test]
fn criterion_02_g_inequalities() {
    let mut violations = 0usize;
    // log x <= g(x) <= log x + 1/x^2 on a 1000-point grid of x >= 1
    for i in 0..1000 {
        let x = 1.0 + 99.0 * i as f64 / 999.0;
        let g = g_closed_form(x);
        if !(x.ln() <= g && g <= x.ln() + 1.0 / (x * x)) {
            violations += 1;
        }
    }
    // three-term defect <= 4/x^2 for 1 <= x <= y over a grid of pairs
    for i in 0..40 {
        for j in i..40 {
            let x = 1.0 + 99.0 * i as f64 / 39.0;
            let y = 1.0 + 99.0 * j as f64 / 39.0;
            let defect = (g_closed_form(x) + g_closed_form(y) - pair_norm(x, y)).abs();
            if !(defect <= 4.0 / (x * x)) {
                violations += 1;
            }
        }
    }
    // mean value bound g(x + d) - g(x - d) >= d/(1 + x + d) for x > d
    let d = 2.0;
    for i in 0..1000 {
        let x = (d + 0.5) + 97.0 * i as f64 / 999.0;
        if !(g_closed_form(x + d) - g_closed_form(x - d) >= d / (1.0 + x + d)) {
            violations += 1;
        }
    }
    // derivative floor g'(x) >= 1/(2(1+x)) by central differences
    for i in 0..1000 {
        let x = 1.0 + 99.0 * i as f64 / 999.0;
        let h = 1e-6;
        let deriv = (g_closed_form(x + h) - g_closed_form(x - h)) / (2.0 * h);
        if !(deriv >= 1.0 / (2.0 * (1.0 + x)) - 1e-9) {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
    println!("ACCEPTANCE 02 g inequalities: PASS (0 violations)");
}

#[test]
fn criterion_03_first_moment_identity() {
    let t0 = Instant::now();
    for pot in 0..50u64 {
        let levels = seeded_rational_levels(pot.wrapping_mul(77).wrapping_add(5), 6, 8);
        let src = PotentialSource::seeded(pot, levels).unwrap();
        for side in [Side::Plus, Side::Minus] {
            for &n in &[4usize, 16, 64, 256] {
                let nf = Rational::from(n as u64);
                let dk = trace_moment_exact(&src, n, side, 1).unwrap() / nf.clone();
                let dktilde = truncated_trace_moment_exact(&src, n, side, 1).unwrap() / nf;
                let (from, _) = side.window(n);
                let avg = birkhoff_forward_from(&src, from, n as u64).unwrap();
                assert_eq!(dk, avg, "dk first moment, pot {pot} n {n} side {side}");
                assert_eq!(dktilde, avg, "dktilde first moment");
                // eigensolver route within N * 1e-10
                let tr = truncate(&src, n, side).unwrap();
                let evs = eigenvalues(&tr, 1e-10).unwrap();
                let sum: f64 = evs.iter().sum();
                let target = avg.to_f64() * n as f64;
                assert!(
                    (sum - target).abs() <= n as f64 * 1e-10,
                    "eigen sum {sum} vs {target} at n {n}"
                );
            }
        }
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("ACCEPTANCE 03 first-moment identity: PASS ({elapsed:?})");
}

#[test]
fn criterion_04_moment_gap_decay() {
    let schedule = [64usize, 128, 256, 512, 1024, 2048, 4096];
    // V = 0: N * gap constant across the schedule for each degree
    let free = PotentialSource::constant(Rational::new());
    for degree in 2..=5usize {
        let mut ngaps = Vec::new();
        for &n in &schedule {
            let nf = Rational::from(n as u64);
            let full = trace_moment_exact(&free, n, Side::Plus, degree).unwrap() / nf.clone();
            let cut = truncated_trace_moment_exact(&free, n, Side::Plus, degree).unwrap() / nf;
            let gap = Rational::from(&full - &cut).abs();
            let ngap = Rational::from(&gap * Rational::from(n as u64));
            ngaps.push(ngap);
        }
        let max = ngaps.iter().max().unwrap().to_f64();
        let min = ngaps.iter().min().unwrap().to_f64();
        assert!(
            max - min <= 0.2 * max.max(1e-30),
            "degree {degree}: N gap varies {min}..{max}"
        );
        if degree == 2 {
            // exact value 2 at every window size
            for g in &ngaps {
                assert_eq!(*g, Rational::from(2));
            }
        }
    }
    // random bounded V: N * gap stays bounded with no doubling trend
    let src = PotentialSource::seeded(99, seeded_rational_levels(31, 5, 4)).unwrap();
    for degree in 2..=5usize {
        let mut ngaps = Vec::new();
        for &n in &schedule {
            let nf = Rational::from(n as u64);
            let full = trace_moment_exact(&src, n, Side::Plus, degree).unwrap() / nf.clone();
            let cut = truncated_trace_moment_exact(&src, n, Side::Plus, degree).unwrap() / nf;
            ngaps.push(Rational::from(&full - &cut).abs().to_f64() * n as f64);
        }
        let first_half_max = ngaps[..3].iter().cloned().fold(0.0f64, f64::max);
        let last = *ngaps.last().unwrap();
        assert!(
            last <= 2.0 * first_half_max + 1.0,
            "degree {degree}: N gap trend {ngaps:?}"
        );
    }
    println!("ACCEPTANCE 04 moment gap O(1/N): PASS");
}

#[test]
fn criterion_05_backward_convergence() {
    let t0 = Instant::now();
    let sys = golden("0.3");
    let blocks = build_blocks(&sys, 40, 4096).unwrap();
    let mut below_005_from: Option<i64> = None;
    for k in 1..=40 {
        let b = block_average_backward(&blocks, k).unwrap();
        assert!(b.certificate_ok, "Cauchy-Schwarz certificate failed at k = {k}");
        if b.cs_bound.hi_f64() < 0.05 && below_005_from.is_none() {
            below_005_from = Some(k);
        }
    }
    let from = below_005_from.expect("bound never fell below 0.05");
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 05 backward convergence: PASS (bound < 0.05 from k = {from}, {elapsed:?})"
    );
}

#[test]
fn criterion_06_forward_witness() {
    let sys = golden("0.3");
    let minima = minima_subsequence(&sys, 80).unwrap();
    assert!(minima.s.len() >= 3, "found only {:?}", minima.s);
    let take: Vec<i64> = minima.s.iter().take(3).cloned().collect();
    let blocks = build_blocks(&sys, *take.last().unwrap(), 4096).unwrap();
    let mut prev_ratio: Option<ergodeq::numerics::RatioInterval> = None;
    let mut last_avg_lo = 0.0f64;
    for &n in &take {
        let w = block_average_forward(&blocks, n).unwrap();
        // A >= 1/(1 + t_n/q_n), certified
        assert!(
            w.average.lo_f64() >= w.lower_bound.lo_f64() - 1e-15,
            "witness bound violated at n = {n}"
        );
        if let Some(prev) = &prev_ratio {
            assert!(
                w.tn_over_qn.certainly_lt(prev),
                "t_n/q_n did not decrease at n = {n}"
            );
        }
        last_avg_lo = w.average.lo_f64();
        prev_ratio = Some(w.tn_over_qn.clone());
    }
    assert!(last_avg_lo > 0.9, "final witness average {last_avg_lo}");
    println!(
        "ACCEPTANCE 06 forward witness: PASS (S starts {take:?}, final average > {last_avg_lo:.6})"
    );
}

#[test]
fn criterion_07_shell_oscillation() {
    let t0 = Instant::now();
    let sys = golden("0.3");
    let mc = MonteCarloConfig::new(1000, 20260809);
    let c = construct_thm2_potential(&sys, 3, &mc, ScanGrid::PowersOfThree).unwrap();
    let samples = 400usize;
    for k in 1..=3usize {
        let n_k = c.n_seq()[k];
        let eps = 0.5f64.powi(k as i32);
        let mut violations = 0usize;
        for i in 0..samples {
            // fresh seed stream, independent of the construction search
            let u = loop {
                let v = uniform01(777, i as u64);
                if v > 0.0 {
                    break v;
                }
            };
            let a = c.average_from_base(u, n_k).unwrap();
            let bad = if k % 2 == 0 { a < 1.0 - eps } else { a > eps };
            if bad {
                violations += 1;
            }
        }
        let frac = violations as f64 / samples as f64;
        let margin = wilson_halfwidth(violations, samples, 1.96);
        assert!(
            frac < eps + margin,
            "k = {k}: violating fraction {frac} vs {eps} + {margin}"
        );
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 07 shell oscillation: PASS (stages {:?}, {elapsed:?})",
        c.n_seq()
    );
}

#[test]
fn criterion_08_eigensolver_oracle() {
    for pot in 0..100u64 {
        let n = 8usize;
        let levels = seeded_rational_levels(pot.wrapping_mul(13).wrapping_add(3), 7, 4);
        let src = PotentialSource::seeded(pot, levels).unwrap();
        let tr = truncate(&src, n, Side::Plus).unwrap();
        let mine = eigenvalues(&tr, 1e-10).unwrap();
        let oracle = charpoly_eigenvalues(&tr.diag_exact, 1e-10);
        assert_eq!(mine.len(), oracle.len());
        for (a, b) in mine.iter().zip(oracle.iter()) {
            assert!((a - b).abs() <= 1e-8, "pot {pot}: {a} vs {b}");
        }
        // range bound
        let bound = tr.spectral_bound();
        assert!(mine.iter().all(|e| e.abs() <= bound + 1e-9));
        // Cauchy interlacing against the size-7 truncation
        let tr7 = truncate(&src, n - 1, Side::Plus).unwrap();
        let evs7 = eigenvalues(&tr7, 1e-10).unwrap();
        for j in 0..n - 1 {
            assert!(
                mine[j] <= evs7[j] + 1e-9 && evs7[j] <= mine[j + 1] + 1e-9,
                "interlacing failed at pot {pot}, j = {j}"
            );
        }
    }
    println!("ACCEPTANCE 08 eigensolver oracle: PASS (100 potentials, N = 8)");
}

#[test]
fn criterion_09_cesaro_counterexample() {
    let (lengths, values) = doubling_blocks(20);
    let series = cesaro_sequence(&lengths, &values).unwrap();
    let max = series.s.iter().max().unwrap();
    let min = series.s.iter().min().unwrap();
    let spread = Rational::from(max - min);
    assert!(
        spread >= Rational::from((1, 4)),
        "limsup - liminf = {spread} below 1/4"
    );
    println!(
        "ACCEPTANCE 09 Cesaro counterexample: PASS (spread = {} ~ {:.4})",
        spread,
        spread.to_f64()
    );
}

#[test]
fn criterion_10_exponent_structure() {
    // constant potential: four estimates agree and match the closed rate
    let free = PotentialSource::constant(Rational::new());
    let rate = ((3.0 + 5f64.sqrt()) / 2.0).ln();
    let est = exponents(3.0, &free, 26).unwrap();
    for v in [
        est.lbar_plus,
        est.lunder_plus,
        est.lbar_minus,
        est.lunder_minus,
    ] {
        assert!((v - rate).abs() <= 1e-4, "{v} vs {rate}");
    }
    assert!((est.lbar_plus - est.lunder_plus).abs() <= 1e-6);
    assert!((est.lbar_minus - est.lunder_minus).abs() <= 1e-6);
    assert!((est.lbar_plus - 0.96242).abs() <= 1e-4);

    // free operator inside the band: all estimates below 1e-2 at 3^10
    for i in 0..50 {
        let e = -1.96 + 3.92 * i as f64 / 49.0;
        let est = exponents(e, &free, 10).unwrap();
        for v in [
            est.lbar_plus,
            est.lunder_plus,
            est.lbar_minus,
            est.lunder_minus,
        ] {
            assert!(v.abs() < 1e-2, "E = {e}: estimate {v}");
        }
    }

    // ordering inequalities on a 50-point grid for a random bounded
    // potential (statistically alike in both directions) and the free one
    let src = PotentialSource::seeded(5, seeded_rational_levels(11, 5, 4)).unwrap();
    for i in 0..50 {
        let e = -3.0 + 6.0 * i as f64 / 49.0;
        for s in [&free, &src] {
            let est = exponents(e, s, 10).unwrap();
            assert!(est.lunder_plus <= est.lbar_plus + 1e-12);
            assert!(est.lunder_minus <= est.lbar_minus + 1e-12);
            assert!(
                est.lunder_minus <= est.lbar_plus + 1e-9,
                "E = {e}: cross ordering minus-under vs plus-bar"
            );
            assert!(
                est.lunder_plus <= est.lbar_minus + 1e-9,
                "E = {e}: cross ordering plus-under vs minus-bar"
            );
        }
    }
    println!("ACCEPTANCE 10 exponent structure: PASS (rate {:.5})", est.lbar_plus);
}

#[test]
fn criterion_11_gap_demonstrations() {
    // upper vs lower on the shell construction at E = 20, delta = 2
    let sys = golden("0.3");
    let mc = MonteCarloConfig::new(1000, 20260809);
    let c = Arc::new(construct_thm2_potential(&sys, 5, &mc, ScanGrid::PowersOfThree).unwrap());
    let rep = gap_demo_upper_vs_lower(20.0, 1.0, c, 0.3, 10).unwrap();
    let floor = 0.5 * (g_closed_form(22.0) - g_closed_form(18.0));
    assert!(
        rep.observed_gap >= floor,
        "forward oscillation {} below {floor}",
        rep.observed_gap
    );

    // forward vs backward on the scaled tower at matched schedules
    let blocks = Arc::new(build_blocks(&sys, 8, 4096).unwrap());
    let rep2 = gap_demo_forward_vs_backward(20.0, 2.0, blocks, 16).unwrap();
    assert!(
        rep2.observed_gap >= 0.1,
        "forward-backward gap {}",
        rep2.observed_gap
    );
    println!(
        "ACCEPTANCE 11 gap demonstrations: PASS (upper-vs-lower {:.4} >= {floor:.4}, forward-vs-backward {:.4} >= 0.1)",
        rep.observed_gap, rep2.observed_gap
    );
}

#[test]
fn criterion_12_avalanche_checker() {
    // 1000 randomized admissible sequences at mu >= 1e3 with C1 = 10
    let mu = 1e3f64;
    let gamma = 0.5 * mu.ln();
    let mut min_slack = f64::INFINITY;
    for seq in 0..1000u64 {
        let n = 27usize;
        let mats: Vec<TransferMatrix> = (0..n)
            .map(|j| {
                let t = uniform01(seq.wrapping_mul(31).wrapping_add(7), j as u64);
                // norms >= x >= mu, log-uniform up to mu^2
                let x = mu * 1.05 * mu.powf(t);
                TransferMatrix::one_step(x.min(1e120), 0.0)
            })
            .collect();
        let rep = avalanche_check(&mats, mu, gamma, 10.0).unwrap();
        min_slack = min_slack.min(rep.slack);
        assert!(rep.slack >= 0.0, "product bound violated on sequence {seq}");
    }
    // seeded negative tests: violations always detected
    for seq in 0..50u64 {
        let mut mats: Vec<TransferMatrix> = (0..9)
            .map(|j| {
                let t = uniform01(seq, j as u64);
                TransferMatrix::one_step(mu * (1.1 + t), 0.0)
            })
            .collect();
        let bad = (uniform01(seq, 100) * 9.0) as usize;
        if seq % 2 == 0 {
            // norm floor violation
            mats[bad] = TransferMatrix::one_step(3.0, 0.0);
        } else {
            // cancellation: insert the inverse of a neighbor
            let idx = bad.min(7);
            let x = mu * (1.1 + uniform01(seq, idx as u64));
            mats[idx] = TransferMatrix::one_step(x, 0.0);
            mats[idx + 1] = TransferMatrix::one_step_inverse(x, 0.0);
        }
        match avalanche_check(&mats, mu, gamma, 10.0) {
            Err(Error::HypothesisViolated { .. }) => {}
            other => panic!("violation not detected: {other:?}"),
        }
    }
    println!("ACCEPTANCE 12 avalanche checker: PASS (min slack {min_slack:.3})");
}

#[test]
fn criterion_13_ac_support_scan() {
    let free = PotentialSource::constant(Rational::new());
    let step = 0.01;
    let grid: Vec<f64> = (-300..=300).map(|i| i as f64 * step).collect();
    let cand = ac_support_scan(&free, &grid, 9, 0.05).unwrap();
    // symmetric difference with [-2, 2] in measure
    let mut sym_diff = 0.0f64;
    for &e in &grid {
        let in_band = e.abs() <= 2.0 + 1e-12;
        let in_cand = cand.iter().any(|c| (c - e).abs() < 1e-12);
        if in_band != in_cand {
            sym_diff += step;
        }
    }
    assert!(sym_diff < 0.1, "symmetric difference measure {sym_diff}");
    println!("ACCEPTANCE 13 ac support scan: PASS (symmetric difference {sym_diff:.3})");
}
