use rayon::prelude::*;

use nls_core::construction::build_phi_n;
use nls_core::lattice::sobolev_norm;
use nls_core::registry::xi1_evaluators;

use super::{dimension, strategy};
use crate::fit::loglog_fit;
use crate::report::{num, Report, Table};
use crate::{Config, Experiment, LabError, LabResult};

pub const MIN_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Time,
    Amplitude,
    Side,
}

impl Axis {
    pub fn parse(text: &str) -> LabResult<Self> {
        match text {
            "t" => Ok(Axis::Time),
            "R" => Ok(Axis::Amplitude),
            "A" => Ok(Axis::Side),
            other => Err(LabError::Config(format!("sweep axis must be t, R or A, got '{other}'"))),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Axis::Time => "t",
            Axis::Amplitude => "R",
            Axis::Side => "A",
        }
    }

    /// Predicted exponent and its tolerance.
    pub fn expected(self, d: usize, s: f64) -> (f64, f64) {
        match self {
            Axis::Time => (1.0, 0.05),
            Axis::Amplitude => (3.0, 1e-10),
            Axis::Side => (2.0 * d as f64 + (d as f64 / 2.0 + s).max(0.0), 0.15),
        }
    }

    fn default_values(self) -> Vec<f64> {
        match self {
            Axis::Time => vec![0.001, 0.002, 0.004, 0.008],
            Axis::Amplitude => vec![1.0, 2.0, 4.0, 8.0],
            Axis::Side => vec![16.0, 32.0, 64.0, 128.0],
        }
    }
}

/// Log-log slope of ‖Ξ₁(φ_n)(t)‖_{H^s} along one of t, R or A.
pub struct ScalingSweep;

impl Experiment for ScalingSweep {
    fn name(&self) -> &'static str {
        "sweep"
    }

    fn about(&self) -> &'static str {
        "fit scaling exponents of the first series term in t, R or A"
    }

    fn keys(&self) -> &'static [&'static str] {
        &["axis", "values", "d", "s", "N", "A", "R", "c", "evaluator", "M", "wick", "kernel"]
    }

    fn execute(&self, cfg: &Config) -> LabResult<Report> {
        let axis = Axis::parse(&cfg.get("axis", "t".to_string())?)?;
        let d = dimension(cfg, 1)?;
        let s: f64 = cfg.get("s", -0.5)?;
        let carrier: u64 = cfg.get("N", 1 << 16)?;
        let side: u64 = cfg.get("A", 16)?;
        let amplitude: f64 = cfg.get("R", 1.0)?;
        let c: f64 = cfg.get("c", 0.01)?;
        let values: Vec<f64> = cfg.get_list("values", axis.default_values())?;
        let evaluator_name: String = cfg.get("evaluator", "quadrature".to_string())?;
        let opts = strategy(cfg, 8)?;
        if values.len() < MIN_POINTS {
            return Err(LabError::Config(format!("sweep needs at least {MIN_POINTS} points, got {}", values.len())));
        }
        let evaluator = xi1_evaluators().build(&evaluator_name, &opts)?;
        let base_t = |c: f64| c / (carrier as f64).powi(2);

        let norms = values
            .par_iter()
            .map(|&v| {
                let (t, r, a) = match axis {
                    Axis::Time => (base_t(v), amplitude, side),
                    Axis::Amplitude => (base_t(c), v, side),
                    Axis::Side => {
                        if v.fract() != 0.0 || v < 2.0 {
                            return Err(LabError::Config(format!("cube side must be an integer >= 2, got {v}")));
                        }
                        (base_t(c), amplitude, v as u64)
                    }
                };
                let phi = build_phi_n(d, carrier, a, r)?;
                Ok(sobolev_norm(&evaluator.evaluate(&phi, t)?, s))
            })
            .collect::<LabResult<Vec<f64>>>()?;
        let fit = loglog_fit(&values, &norms, MIN_POINTS)?;
        let (expected, tol) = axis.expected(d, s);

        let mut report = Report::new("sweep");
        let mut table = Table::new(&[axis.label(), "xi1_hs"]);
        for (v, n) in values.iter().zip(&norms) {
            report.line(format!("{}={v:<12e} |Xi1|_Hs={n:.6e}", axis.label()));
            table.push(vec![num(*v), num(*n)]);
        }
        report.line(format!(
            "slope in {} = {:.6} +- {:.2e} (expected {expected} +- {tol}), evaluator {}",
            axis.label(),
            fit.slope,
            fit.residual,
            evaluator.name()
        ));
        report.kv("axis", axis.label());
        report.kv("slope", num(fit.slope));
        report.kv("residual", num(fit.residual));
        report.kv("expected", num(expected));
        if (fit.slope - expected).abs() > tol {
            report.fail(format!("{}-slope {} differs from {expected} by more than {tol}", axis.label(), fit.slope));
        }
        report.table = Some(table);
        Ok(report)
    }
}
