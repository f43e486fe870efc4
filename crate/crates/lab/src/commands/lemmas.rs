use num_complex::Complex64;
use rayon::prelude::*;

use nls_core::construction::{build_background, build_phi_n, BackgroundProfile};
use nls_core::convolution::{ConvolutionKernel, DirectKernel};
use nls_core::duhamel::{lwp_radius, xi1_exact, DuhamelEngine};
use nls_core::lattice::{cube_indicator, fl_norm, sobolev_norm, LatticePoint};
use nls_core::SparseSpectrum;

use super::strategy;
use crate::report::{num, Report, Table};
use crate::{Config, Experiment, LabError, LabResult};

/// Empirical constants of the multilinear estimates on fixed data families.
pub struct VerifyLemmas;

/// Orders j at which the constants are fitted.
const ORDERS: [usize; 3] = [1, 2, 3];

struct Family {
    name: &'static str,
    data: SparseSpectrum,
}

fn single_mode() -> LabResult<SparseSpectrum> {
    Ok(SparseSpectrum::single_mode(LatticePoint::new(&[3])?, Complex64::new(0.6, 0.3)))
}

fn families() -> LabResult<Vec<Family>> {
    Ok(vec![
        Family { name: "single-mode", data: single_mode()? },
        Family {
            name: "two-mode",
            data: SparseSpectrum::from_entries(
                1,
                [(LatticePoint::new(&[1])?, Complex64::new(0.5, 0.0)), (LatticePoint::new(&[-2])?, Complex64::new(0.0, 0.4))],
            )?,
        },
        Family {
            name: "gaussian",
            data: build_background(1, BackgroundProfile::Gaussian { amplitude: 0.5, width: 1.0 })?,
        },
        Family { name: "cubes", data: build_phi_n(1, 8, 2, 0.5)? },
    ])
}

/// Per-order ratios LHS/RHS-shape and the constants C_j = ratio^{1/j}.
#[derive(Debug, Clone)]
struct ConstantFit {
    lemma: &'static str,
    family: String,
    ratios: Vec<f64>,
}

impl ConstantFit {
    fn constants(&self) -> Vec<f64> {
        self.ratios.iter().zip(ORDERS).map(|(r, j)| r.powf(1.0 / j as f64)).collect()
    }

    fn max_constant(&self) -> f64 {
        self.constants().into_iter().fold(0.0, f64::max)
    }

    /// max/min of the fitted constants across j; 1 when all vanish.
    fn spread(&self) -> f64 {
        let c = self.constants();
        let max = c.iter().copied().fold(0.0, f64::max);
        let min = c.iter().copied().fold(f64::INFINITY, f64::min);
        if max == 0.0 {
            1.0
        } else {
            max / min
        }
    }
}

fn series_terms(engine: &DuhamelEngine, phi: &SparseSpectrum, t: f64, cfg_nodes: nls_core::duhamel::QuadratureSpec) -> LabResult<Vec<SparseSpectrum>> {
    let table = engine.build_series(phi, ORDERS[ORDERS.len() - 1], t, cfg_nodes)?;
    Ok(ORDERS.iter().map(|&j| table.final_term(j).clone()).collect())
}

/// min over ξ ∈ a+b+Q_A of (1_{a+Q_A} * 1_{b+Q_A})(ξ) / A^d, with a = N e₁
/// and b = 2N e₁ as in the construction.
pub fn convolution_min_ratio(d: usize, side: u64) -> LabResult<f64> {
    let n = 4 * side as i64;
    let one = Complex64::new(1.0, 0.0);
    let a = LatticePoint::on_axis(d, n)?;
    let b = LatticePoint::on_axis(d, 2 * n)?;
    let conv = DirectKernel.convolve(&cube_indicator(a, side, one)?, &cube_indicator(b, side, one)?)?;
    let target = cube_indicator(LatticePoint::on_axis(d, 3 * n)?, side, one)?;
    let volume = (side as f64).powi(d as i32);
    Ok(target.support().map(|xi| conv.get(&xi).re / volume).fold(f64::INFINITY, f64::min))
}

impl Experiment for VerifyLemmas {
    fn name(&self) -> &'static str {
        "verify-lemmas"
    }

    fn about(&self) -> &'static str {
        "fit the constants of the multilinear, difference and convolution estimates"
    }

    fn keys(&self) -> &'static [&'static str] {
        &["ceiling", "spread", "t_fraction", "M", "kernel", "wick", "conv_sides", "s", "families"]
    }

    fn execute(&self, cfg: &Config) -> LabResult<Report> {
        let ceiling: f64 = cfg.get("ceiling", 10.0)?;
        let max_spread: f64 = cfg.get("spread", 2.0)?;
        let fraction: f64 = cfg.get("t_fraction", 0.1)?;
        let s: f64 = cfg.get("s", -0.5)?;
        let sides: Vec<u64> = cfg.get_list("conv_sides", vec![4, 8, 16])?;
        let all = families()?;
        let names: Vec<String> = cfg.get_list("families", all.iter().map(|f| f.name.to_string()).collect())?;
        if let Some(bad) = names.iter().find(|n| !all.iter().any(|f| f.name == n.as_str())) {
            let known: Vec<&str> = all.iter().map(|f| f.name).collect();
            return Err(LabError::Config(format!("unknown data family '{bad}' (known: {})", known.join(", "))));
        }
        let fams: Vec<Family> = all.into_iter().filter(|f| names.iter().any(|n| n == f.name)).collect();
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(LabError::Config(format!("t_fraction must lie in (0,1), got {fraction}")));
        }
        let opts = strategy(cfg, 256)?;
        let engine = opts.engine()?;
        let q = opts.quadrature;
        let mut report = Report::new("verify-lemmas");
        let mut table = Table::new(&["lemma", "family", "c_j1", "c_j2", "c_j3", "max_constant", "spread"]);
        let mut fits = Vec::new();

        // Single-mode Ξ₁ is resonant: exactly t|a|³ in FL¹.
        let single = single_mode()?;
        let t_single = fraction * lwp_radius(&single);
        let a1 = fl_norm(&single, 1.0)?;
        let exact_ratio = fl_norm(&xi1_exact(&single, t_single)?, 1.0)? / (t_single * a1.powi(3));
        report.line(format!("single-mode |Xi1|_FL1 / (t |phi|_FL1^3) = {exact_ratio:.15}"));
        report.kv("single_mode_ratio", num(exact_ratio));
        if (exact_ratio - 1.0).abs() > 1e-12 {
            report.fail(format!("single-mode ratio {exact_ratio} differs from 1"));
        }

        let per_family: Vec<LabResult<Vec<ConstantFit>>> = fams
            .par_iter()
            .map(|fam| {
                let phi = &fam.data;
                let t = fraction * lwp_radius(phi);
                let terms = series_terms(&engine, phi, t, q)?;
                let l1 = fl_norm(phi, 1.0)?;
                let l2 = fl_norm(phi, 2.0)?;
                let mut a = Vec::new();
                let mut b = Vec::new();
                for (term, j) in terms.iter().zip(ORDERS) {
                    let tj = t.powi(j as i32);
                    a.push(fl_norm(term, 1.0)? / (tj * l1.powi(2 * j as i32 + 1)));
                    b.push(fl_norm(term, f64::INFINITY)? / (tj * l1.powi(2 * j as i32 - 1) * l2 * l2));
                }
                Ok(vec![
                    ConstantFit { lemma: "FL1", family: fam.name.into(), ratios: a },
                    ConstantFit { lemma: "FLinf", family: fam.name.into(), ratios: b },
                ])
            })
            .collect();
        for f in per_family {
            fits.extend(f?);
        }

        // Difference estimate with p ∈ {1, 2}.
        let u0 = build_background(1, BackgroundProfile::Gaussian { amplitude: 0.3, width: 1.0 })?;
        for fam in &fams {
            let phi = &fam.data;
            let sum = u0.add(phi)?;
            let t = fraction * lwp_radius(&sum);
            let with = series_terms(&engine, &sum, t, q)?;
            let without = series_terms(&engine, phi, t, q)?;
            let u1 = fl_norm(&u0, 1.0)?;
            let p1 = fl_norm(phi, 1.0)?;
            for p in [1.0, 2.0] {
                let up = fl_norm(&u0, p)?;
                let mut ratios = Vec::new();
                for ((w, wo), j) in with.iter().zip(&without).zip(ORDERS) {
                    let rhs = t.powi(j as i32) * up * (u1.powi(2 * j as i32) + p1.powi(2 * j as i32));
                    ratios.push(fl_norm(&w.sub(wo)?, p)? / rhs);
                }
                fits.push(ConstantFit { lemma: if p == 1.0 { "diff-FL1" } else { "diff-FL2" }, family: fam.name.into(), ratios });
            }
        }

        // With u₀ = 0 the difference vanishes identically.
        let phi = build_phi_n(1, 8, 2, 0.5)?;
        let zero = SparseSpectrum::zero(1)?;
        let t0 = fraction * lwp_radius(&phi);
        let zero_lhs = (1..=3)
            .map(|j| Ok(fl_norm(&engine.xi_diff(&zero, &phi, j, t0, q)?, 1.0)?))
            .collect::<LabResult<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        report.line(format!("zero background: max_j |Xi_j(0+phi) - Xi_j(phi)|_FL1 = {zero_lhs:e}"));
        report.kv("zero_background_lhs", num(zero_lhs));
        if zero_lhs != 0.0 {
            report.fail(format!("difference with zero background is {zero_lhs}, not 0"));
        }

        for fit in &fits {
            let c = fit.constants();
            report.line(format!(
                "{:<9} {:<12} C_j = {:.4} {:.4} {:.4}  spread {:.3}",
                fit.lemma, fit.family, c[0], c[1], c[2], fit.spread()
            ));
            if fit.max_constant() > ceiling {
                report.fail(format!("{} constant {} on {} exceeds ceiling {ceiling}", fit.lemma, fit.max_constant(), fit.family));
            }
            if fit.spread() > max_spread {
                report.fail(format!("{} constant on {} varies by {}x across j", fit.lemma, fit.family, fit.spread()));
            }
            table.push(vec![
                fit.lemma.into(),
                fit.family.clone(),
                num(c[0]),
                num(c[1]),
                num(c[2]),
                num(fit.max_constant()),
                num(fit.spread()),
            ]);
        }

        // Ξ₁ difference in H^s against t‖u₀‖_{L²}R²A^{2d}.
        let mut hs13_max: f64 = 0.0;
        let u0 = build_background(1, BackgroundProfile::default())?;
        for n in [8u64, 16, 32] {
            let side = n / 4;
            let phi = build_phi_n(1, n, side, 1.0)?;
            let t = 0.01 / (n * n) as f64;
            let diff = engine.xi_diff(&u0, &phi, 1, t, q)?;
            let ratio = sobolev_norm(&diff, s) / (t * fl_norm(&u0, 2.0)? * (side as f64).powi(2));
            report.line(format!("Xi1 difference in H^{s}: N={n} A={side} ratio={ratio:.4}"));
            hs13_max = hs13_max.max(ratio);
        }
        report.kv("hs_difference_max_ratio", num(hs13_max));
        if hs13_max > ceiling {
            report.fail(format!("H^s difference ratio {hs13_max} exceeds ceiling {ceiling}"));
        }

        let mut conv_min = f64::INFINITY;
        for d in [1usize, 2] {
            for &side in &sides {
                let r = convolution_min_ratio(d, side)?;
                report.line(format!("cube convolution d={d} A={side}: min ratio {r:.4}"));
                conv_min = conv_min.min(r);
            }
        }
        report.kv("convolution_min_ratio", num(conv_min));
        if conv_min < 0.25 {
            report.fail(format!("cube convolution ratio {conv_min} below 0.25"));
        }
        let max_c = fits.iter().map(ConstantFit::max_constant).fold(0.0, f64::max);
        let max_s = fits.iter().map(ConstantFit::spread).fold(0.0, f64::max);
        report.kv("max_constant", num(max_c));
        report.kv("max_spread", num(max_s));
        report.table = Some(table);
        Ok(report)
    }
}
