use nls_core::trees::{count_trees, enumerate_trees, growth_constant};

use crate::report::{num, Report, Table};
use crate::{Config, Experiment, LabError, LabResult};

/// Largest j for counting.
pub const COUNT_CAP: usize = 8;
/// Largest j cross-checked by explicit enumeration.
pub const ENUMERATE_CAP: usize = 5;

/// Tree counts #𝐓(j), enumeration cross-check and the growth bound.
pub struct Trees;

impl Experiment for Trees {
    fn name(&self) -> &'static str {
        "trees"
    }

    fn about(&self) -> &'static str {
        "count ternary trees, cross-check by enumeration, test the exponential bound"
    }

    fn keys(&self) -> &'static [&'static str] {
        &["jmax"]
    }

    fn execute(&self, cfg: &Config) -> LabResult<Report> {
        let jmax: usize = cfg.get("jmax", 5)?;
        if jmax > COUNT_CAP {
            return Err(LabError::Numerical(format!("tree counting capped at jmax <= {COUNT_CAP}, got {jmax}")));
        }
        let c0 = growth_constant();
        let mut report = Report::new("trees");
        let mut table = Table::new(&["j", "count", "enumerated", "cross_check", "bound_ratio"]);
        let mut worst: f64 = 0.0;
        for j in 0..=jmax {
            let count = count_trees(j);
            let enumerated = if j <= ENUMERATE_CAP { Some(enumerate_trees(j)?.len() as u128) } else { None };
            let agrees = enumerated.is_none_or(|e| e == count);
            let ratio = count as f64 * ((1 + j) as f64).powi(2) / c0.powi(j as i32);
            worst = worst.max(ratio);
            report.line(format!(
                "j={j:<2} #T(j)={count:<8} enumerated={:<8} bound_ratio={ratio:.6}",
                enumerated.map_or("-".to_string(), |e| e.to_string())
            ));
            if !agrees {
                report.fail(format!("enumeration gives {} trees at j={j}, recursion gives {count}", enumerated.unwrap_or(0)));
            }
            if ratio > 1.0 {
                report.fail(format!("#T({j})(1+j)^2 exceeds C0^j (ratio {ratio})"));
            }
            table.push(vec![
                j.to_string(),
                count.to_string(),
                enumerated.map_or(String::new(), |e| e.to_string()),
                agrees.to_string(),
                num(ratio),
            ]);
        }
        report.kv("jmax", jmax);
        report.kv("c0", num(c0));
        report.kv("max_bound_ratio", num(worst));
        report.table = Some(table);
        Ok(report)
    }
}
