use nls_core::construction::{build_background, BackgroundProfile};
use nls_core::duhamel::lwp_radius;
use nls_core::oracle::relative_l2;
use nls_core::registry::solvers;

use super::{background, dimension, strategy};
use crate::report::{num, Report, Table};
use crate::{Config, Experiment, LabError, LabResult};

/// Required accuracy of the J = 4 partial sum in the standard scenario.
pub const TARGET_ERROR: f64 = 1e-4;

/// Partial sums of the tree series against an independent reference solver.
pub struct OracleCompare;

impl Experiment for OracleCompare {
    fn name(&self) -> &'static str {
        "oracle-compare"
    }

    fn about(&self) -> &'static str {
        "compare series partial sums with a split-step reference solution"
    }

    fn keys(&self) -> &'static [&'static str] {
        &["d", "u0", "t_fraction", "J", "M", "steps", "cutoff", "wick", "kernel", "reference", "order_check"]
    }

    fn execute(&self, cfg: &Config) -> LabResult<Report> {
        let d = dimension(cfg, 1)?;
        let profile = background(cfg, BackgroundProfile::Gaussian { amplitude: 0.5, width: 1.0 })?;
        let fraction: f64 = cfg.get("t_fraction", 0.5)?;
        let jmax: usize = cfg.get("J", 4)?;
        let reference_name: String = cfg.get("reference", "split-step".to_string())?;
        let order_check = cfg.get_bool("order_check", false)?;
        let mut opts = strategy(cfg, 256)?;
        opts.steps = cfg.get("steps", opts.steps)?;
        opts.cutoff = cfg.get("cutoff", opts.cutoff)?;
        if !(fraction > 0.0 && fraction <= 0.5) {
            return Err(LabError::Config(format!("t_fraction must lie in (0, 0.5], got {fraction}")));
        }
        let u0 = build_background(d, profile)?;
        if u0.is_empty() {
            return Err(LabError::Config("oracle comparison needs nonzero data".into()));
        }
        let t = fraction * lwp_radius(&u0);
        let engine = opts.engine()?;
        let reference = solvers().build(&reference_name, &opts)?;

        let errors_at = |t: f64| -> LabResult<Vec<f64>> {
            let exact = reference.solve(&u0, t)?;
            let table = engine.build_series(&u0, jmax, t, opts.quadrature)?;
            let mut errs = Vec::with_capacity(jmax + 1);
            let mut sum = nls_core::SparseSpectrum::zero(d)?;
            for j in 0..=jmax {
                sum = sum.add(table.final_term(j))?;
                errs.push(relative_l2(&sum, &exact)?);
            }
            Ok(errs)
        };
        let errors = errors_at(t)?;

        let mut report = Report::new("oracle-compare");
        let mut table = Table::new(&["J", "relative_l2_error"]);
        report.line(format!("u0={profile} t={t:.6e} reference={} nonlinearity={}", reference.name(), opts.nonlinearity));
        for (j, e) in errors.iter().enumerate() {
            report.line(format!("J={j} relative L2 error {e:.4e}"));
            table.push(vec![j.to_string(), num(*e)]);
        }
        let monotone = errors.windows(2).all(|w| w[1] < w[0]);
        report.kv("t", num(t));
        report.kv("final_error", num(errors[jmax]));
        report.kv("monotone", monotone);
        if !monotone {
            report.fail("errors do not decrease monotonically in J");
        }
        if jmax >= 4 && errors[4] > TARGET_ERROR {
            report.fail(format!("J=4 error {} exceeds {TARGET_ERROR}", errors[4]));
        }
        if order_check {
            let half = errors_at(t / 2.0)?;
            let gain = errors[jmax] / half[jmax];
            report.line(format!("halving t: J={jmax} error {:.4e} -> {:.4e}, gain {gain:.2}", errors[jmax], half[jmax]));
            report.kv("halving_gain", num(gain));
        }
        report.table = Some(table);
        Ok(report)
    }
}
