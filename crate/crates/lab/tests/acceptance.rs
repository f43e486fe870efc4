//! Acceptance criteria 1–10: one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines are always printed. The
//! process fails if any criterion outside [`KNOWN_RED`] fails, or if a known
//! red criterion starts passing (so the list cannot go stale silently).

use std::time::{Duration, Instant};

use num_complex::Complex64;

use nls_core::construction::{build_background, build_phi_n, check_conditions, select_parameters_log2, threshold_log2, BackgroundProfile};
use nls_core::duhamel::{duhamel_integral, lwp_radius, xi1_exact, DuhamelEngine, QuadratureSpec};
use nls_core::lattice::{fl_norm, propagate, LatticePoint};
use nls_core::oracle::{evolve, relative_l2, StepperConfig};
use nls_core::trees::{count_trees, enumerate_trees, growth_constant};
use nls_core::SparseSpectrum;
use nls_lab::commands::lemmas::convolution_min_ratio;
use nls_lab::{run, Config, Report};

/// Criteria that cannot hold at desk scale; see the README for the analysis.
const KNOWN_RED: &[usize] = &[9];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn cfg(pairs: &[&str]) -> Config {
    pairs.iter().fold(Config::default(), |c, p| c.with(p).expect("valid assignment"))
}

fn value(report: &Report, key: &str) -> f64 {
    report.get(key).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN)
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let within = elapsed <= limit;
    Outcome {
        pass: out.pass && within,
        detail: format!("{} [{:.2}s of {}s{}]", out.detail, elapsed.as_secs_f64(), limit.as_secs(), if within { "" } else { ", too slow" }),
    }
}

fn fl1(f: &SparseSpectrum) -> f64 {
    fl_norm(f, 1.0).unwrap()
}

fn c1() -> Outcome {
    let expected = [1u128, 1, 3, 12, 55, 273];
    let counts: Vec<u128> = (0..=5).map(count_trees).collect();
    let enumerated = (0..=5).all(|j| enumerate_trees(j).unwrap().len() as u128 == count_trees(j));
    let c0 = growth_constant();
    let bound = (0..=8).all(|j| count_trees(j) as f64 * ((1 + j) as f64).powi(2) <= c0.powi(j as i32));
    outcome(counts == expected && enumerated && bound, format!("counts {counts:?}, enumeration {enumerated}, bound {bound}"))
}

fn c2() -> Outcome {
    let phi = build_phi_n(1, 8, 2, 1.0).unwrap();
    let t = 1e-3;
    let exact = xi1_exact(&phi, t).unwrap();
    let flow = |s: f64| Ok(propagate(&phi, s));
    let err = |m: usize| fl1(&exact.sub(&duhamel_integral(&flow, &flow, &flow, t, QuadratureSpec::new(m).unwrap()).unwrap()).unwrap());
    let fine = err(4096);
    let coarse: Vec<f64> = [16, 32, 64].iter().map(|&m| err(m)).collect();
    let ratios: Vec<f64> = coarse.windows(2).map(|w| w[0] / w[1]).collect();
    let pass = fine <= 1e-8 && ratios.iter().all(|&r| r >= 3.5);
    outcome(pass, format!("error at M=4096 {fine:.2e}, doubling ratios {ratios:.2?}"))
}

fn c3() -> Outcome {
    let phi = SparseSpectrum::from_entries(
        1,
        [(LatticePoint::new(&[0]).unwrap(), Complex64::new(1.0, 0.0)), (LatticePoint::new(&[1]).unwrap(), Complex64::new(1.0, 0.0))],
    )
    .unwrap();
    let engine = DuhamelEngine::default();
    let q = QuadratureSpec::new(16).unwrap();
    let t = 0.2;
    let table = engine.build_series(&phi, 3, t, q).unwrap();
    let worst = (0..=3)
        .map(|j| {
            let trees = engine.tree_sum(&phi, j, t, q).unwrap();
            fl1(&table.final_term(j).sub(&trees).unwrap()) / fl1(&trees)
        })
        .fold(0.0, f64::max);
    outcome(worst <= 1e-8, format!("max relative FL1 gap {worst:.2e}"))
}

fn c4() -> Outcome {
    let report = run("oracle-compare", &Config::default()).unwrap();
    let series_ok = report.passed();
    let final_err = value(&report, "final_error");
    let (k, a, t) = (2i64, 1.0, 0.1);
    let plane = SparseSpectrum::single_mode(LatticePoint::new(&[k]).unwrap(), Complex64::new(a, 0.0));
    let u = evolve(&plane, t, StepperConfig::new(1e-4, false).unwrap(), 8).unwrap();
    let exact = Complex64::from_polar(a, t * ((k * k) as f64 + a * a));
    let plane_err = (u.get(&LatticePoint::new(&[k]).unwrap()) - exact).norm() + relative_l2(&u, &u.restrict(|p| p.coords()[0] == k as i32)).unwrap();
    let u0 = build_background(1, BackgroundProfile::Gaussian { amplitude: 0.5, width: 1.0 }).unwrap();
    let tt = lwp_radius(&u0) / 2.0;
    let v = evolve(&u0, tt, StepperConfig::for_time(tt, false).unwrap(), 64).unwrap();
    let (m0, m1) = (fl_norm(&u0, 2.0).unwrap(), fl_norm(&v, 2.0).unwrap());
    let drift = ((m1 - m0) / m0).abs();
    outcome(
        series_ok && plane_err <= 1e-8 && drift <= 1e-8,
        format!("J=4 error {final_err:.2e} monotone={}, plane wave {plane_err:.1e}, mass drift {drift:.1e}", report.get("monotone").unwrap_or("?")),
    )
}

fn c5() -> Outcome {
    let report = run("verify-lemmas", &cfg(&["families=gaussian"])).unwrap();
    let single = value(&report, "single_mode_ratio");
    let spread = value(&report, "max_spread");
    outcome(
        report.passed() && (single - 1.0).abs() <= 1e-12 && spread < 2.0,
        format!("single-mode ratio {single:.15}, max spread across j {spread:.3}"),
    )
}

fn c6() -> Outcome {
    let mut worst = f64::INFINITY;
    for d in [1, 2] {
        for side in [4, 8, 16] {
            worst = worst.min(convolution_min_ratio(d, side).unwrap());
        }
    }
    outcome(worst >= 0.25, format!("min normalized convolution {worst}"))
}

fn c7() -> Outcome {
    let r = run("xi1-bound", &cfg(&["d=1", "s=-0.5", "N=32,64,128,256", "c=0.01"])).unwrap();
    outcome(
        r.passed(),
        format!(
            "ratio in [{:.3}, {:.3}] (band {:.3}), min Re K / t {:.4}",
            value(&r, "ratio_min"),
            value(&r, "ratio_max"),
            value(&r, "ratio_band"),
            value(&r, "min_re_k_over_t")
        ),
    )
}

fn c8() -> Outcome {
    let runs = [
        ("t", vec!["axis=t", "d=1"]),
        ("R", vec!["axis=R", "d=1"]),
        ("A d=1", vec!["axis=A", "d=1", "s=-0.3"]),
        ("A d=2", vec!["axis=A", "d=2", "s=-0.5"]),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, pairs) in runs {
        let r = run("sweep", &cfg(&pairs)).unwrap();
        pass &= r.passed();
        parts.push(format!("{label}: {:.6}", value(&r, "slope")));
    }
    outcome(pass, parts.join(", "))
}

/// Dominance ratios and data distances along an N-sweep of `inflate`.
fn inflation_trend(base: &[&str], carriers: &[u64]) -> (Vec<f64>, Vec<f64>) {
    let mut dominance = Vec::new();
    let mut dist = Vec::new();
    for n in carriers {
        let mut pairs = base.to_vec();
        let key = format!("N={n}");
        pairs.push(&key);
        let r = run("inflate", &cfg(&pairs)).unwrap();
        dominance.push(value(&r, "dominance_ratio"));
        dist.push(value(&r, "data_dist_hs"));
    }
    (dominance, dist)
}

fn trend_ok(dominance: &[f64], dist: &[f64]) -> bool {
    dominance.last().copied().unwrap_or(0.0) > 1.0
        && dominance.windows(2).all(|w| w[1] > w[0])
        && dist.windows(2).all(|w| w[1] < w[0])
}

fn c9() -> Outcome {
    let (dom1, dist1) = inflation_trend(&["d=1", "s=-0.5", "J=3", "u0=gaussian(1,1)"], &[64, 128, 256]);
    let (dom2, dist2) = inflation_trend(&["d=2", "s=-0.5", "J=3", "M=64", "wick=true", "u0=gaussian(1,1)"], &[8, 16, 32]);
    outcome(
        trend_ok(&dom1, &dist1) && trend_ok(&dom2, &dist2),
        format!("cubic d=1 dominance {dom1:.4?} dist {dist1:.4?}; wick d=2 dominance {dom2:.4?} dist {dist2:.4?}"),
    )
}

fn c10() -> Outcome {
    let u0 = build_background(1, BackgroundProfile::default()).unwrap();
    let u0_2 = build_background(2, BackgroundProfile::default()).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, s, d, bg) in [("Case1", -1.0, 1, &u0), ("Case2", -0.5, 1, &u0), ("Case3", -0.5, 2, &u0_2)] {
        let k0 = threshold_log2(1, s, d, bg, 10.0).unwrap();
        let probes: Vec<f64> = if k0 < 1e6 {
            (0..=40).map(|i| k0 + i as f64).chain([2.0 * k0, 10.0 * k0]).collect()
        } else {
            vec![k0, k0 * 2.0, k0 * 1e3]
        };
        let mut case_ok = true;
        for k in probes {
            let report = check_conditions(&select_parameters_log2(1, s, d, k).unwrap(), bg, 10.0).unwrap();
            case_ok &= report.all_pass();
        }
        // (iv) mirrors (ii) wherever (ii) holds, including below N0.
        let lows: Vec<f64> = if k0 < 1e6 { (1..(k0 as usize)).map(|k| k as f64).collect() } else { vec![64.0, 1e10, 1e31] };
        for k in lows {
            if let Ok(p) = select_parameters_log2(1, s, d, k) {
                let r = check_conditions(&p, bg, 10.0).unwrap();
                let (ii, iv) = (r.get("ii").unwrap().pass(), r.get("iv").unwrap().pass());
                case_ok &= !ii || iv == ii;
            }
        }
        pass &= case_ok;
        parts.push(format!("{label} N0=2^{k0:e}"));
    }
    outcome(pass, parts.join(", "))
}

/// Criterion number, runtime limit in seconds, check.
type Criterion = (usize, u64, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, 1, c1),
        (2, 10, c2),
        (3, 30, c3),
        (4, 60, c4),
        (5, 60, c5),
        (6, 10, c6),
        (7, 120, c7),
        (8, 300, c8),
        (9, 600, c9),
        (10, 60, c10),
    ];
    let mut unexpected = Vec::new();
    for (id, limit, f) in criteria {
        let out = timed(Duration::from_secs(limit), f);
        let known = KNOWN_RED.contains(&id);
        println!("criterion {id:>2}: {} {}{}", if out.pass { "PASS" } else { "FAIL" }, out.detail, if known { " (known red)" } else { "" });
        if out.pass == known {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("criteria with unexpected outcome: {unexpected:?}");
        std::process::exit(1);
    }
}
