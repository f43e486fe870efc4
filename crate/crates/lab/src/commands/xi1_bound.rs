use rayon::prelude::*;

use nls_core::construction::{build_phi_n, f_of_a, select_parameters};
use nls_core::duhamel::{phase_scan, xi1_exact_with};
use nls_core::lattice::{cube_indicator, sobolev_norm, LatticePoint};
use nls_core::SparseSpectrum;

use super::dimension;
use crate::report::{num, Report, Table};
use crate::{Config, Experiment, LabError, LabResult};

/// Largest admissible constant in the rule t = c·N⁻².
pub const MAX_T_CONSTANT: f64 = 0.01;
/// Allowed max/min spread of the normalized ratio across the sweep.
pub const BAND: f64 = 4.0;
pub const RATIO_FLOOR: f64 = 0.1;
/// Triples scanned by the exhaustive phase check.
const PHASE_SCAN_LIMIT: f64 = 2e10;

/// Lower bound for ‖Ξ₁(φ_n)(t)‖_{H^s} at t = c·N⁻² along an N-sweep.
pub struct Xi1Bound;

#[derive(Debug, Clone)]
struct Row {
    n: u64,
    side: u64,
    amplitude: f64,
    t: f64,
    hs: f64,
    predictor: f64,
    cube_min: f64,
    min_re_k: f64,
    max_phase: f64,
}

fn evaluate(d: usize, s: f64, n: u64, c: f64, amplitude: Option<f64>, wick: bool) -> LabResult<Row> {
    let params = select_parameters(1, s, d, n)?;
    let side = params.cube_side().ok_or_else(|| LabError::Numerical("cube side not representable".into()))?;
    let r = amplitude.unwrap_or_else(|| params.amplitude());
    if r < 0.0 {
        return Err(LabError::Config(format!("amplitude R must be nonnegative, got {r}")));
    }
    let t = c / (n * n) as f64;
    let phi = if r == 0.0 { SparseSpectrum::zero(d)? } else { build_phi_n(d, n, side, r)? };
    let xi1 = xi1_exact_with(&phi, t, wick)?;
    let a = side as f64;
    let scale = t * r.powi(3) * a.powi(2 * d as i32);
    let predictor = scale * f_of_a(a, s, d);
    let cube = cube_indicator(LatticePoint::origin(d), side, num_complex::Complex64::new(1.0, 0.0))?;
    let cube_min = cube.support().map(|xi| xi1.get(&xi).norm()).fold(f64::INFINITY, f64::min) / scale;
    let triples = (phi.len() as f64).powi(3);
    if triples > PHASE_SCAN_LIMIT {
        return Err(LabError::Numerical(format!("phase scan over {triples:e} triples exceeds the limit")));
    }
    let (min_re_k, max_phase) = if phi.is_empty() { (t, 0.0) } else { phase_scan(&phi, t) };
    Ok(Row { n, side, amplitude: r, t, hs: sobolev_norm(&xi1, s), predictor, cube_min, min_re_k, max_phase })
}

impl Experiment for Xi1Bound {
    fn name(&self) -> &'static str {
        "xi1-bound"
    }

    fn about(&self) -> &'static str {
        "measure the first-order high-to-low transfer against its predicted size"
    }

    fn keys(&self) -> &'static [&'static str] {
        &["d", "s", "N", "c", "R", "wick"]
    }

    fn execute(&self, cfg: &Config) -> LabResult<Report> {
        let d = dimension(cfg, 1)?;
        let s: f64 = cfg.get("s", -0.5)?;
        let ns: Vec<u64> = cfg.get_list("N", vec![32, 64, 128, 256])?;
        let c: f64 = cfg.get("c", MAX_T_CONSTANT)?;
        let wick = cfg.get_bool("wick", false)?;
        let amplitude: Option<f64> = match cfg.raw("R") {
            None => None,
            Some(_) => Some(cfg.get("R", 1.0)?),
        };
        if !(c > 0.0 && c <= MAX_T_CONSTANT) {
            return Err(LabError::Config(format!("t-rule constant c must lie in (0, {MAX_T_CONSTANT}], got {c}")));
        }
        if ns.is_empty() {
            return Err(LabError::Config("empty N list".into()));
        }
        let rows = ns
            .par_iter()
            .map(|&n| evaluate(d, s, n, c, amplitude, wick))
            .collect::<LabResult<Vec<Row>>>()?;

        let mut report = Report::new("xi1-bound");
        let mut table =
            Table::new(&["N", "A", "R", "t", "xi1_hs", "predictor", "ratio", "cube_min_ratio", "min_re_k_over_t", "max_phase"]);
        let degenerate = rows.iter().all(|r| r.amplitude == 0.0);
        let ratios: Vec<f64> = rows.iter().map(|r| if r.predictor > 0.0 { r.hs / r.predictor } else { 0.0 }).collect();
        for (row, ratio) in rows.iter().zip(&ratios) {
            report.line(format!(
                "N={:<5} A={:<5} t={:.3e} |Xi1|_Hs={:.4e} predictor={:.4e} ratio={:.4} cube_min={:.4} ReK/t>={:.4} max|t w|={:.4}",
                row.n, row.side, row.t, row.hs, row.predictor, ratio, row.cube_min, row.min_re_k / row.t, row.max_phase
            ));
            table.push(vec![
                row.n.to_string(),
                row.side.to_string(),
                num(row.amplitude),
                num(row.t),
                num(row.hs),
                num(row.predictor),
                num(*ratio),
                num(row.cube_min),
                num(row.min_re_k / row.t),
                num(row.max_phase),
            ]);
            if row.min_re_k < row.t / 2.0 {
                report.fail(format!("phase positivity fails at N={}: min Re K = {} < t/2", row.n, row.min_re_k));
            }
        }
        if degenerate {
            let max_hs = rows.iter().map(|r| r.hs).fold(0.0, f64::max);
            report.kv("max_xi1_hs", num(max_hs));
            if max_hs != 0.0 {
                report.fail(format!("zero amplitude produced output of norm {max_hs}"));
            }
        } else {
            let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let max = ratios.iter().copied().fold(0.0, f64::max);
            report.kv("ratio_min", num(min));
            report.kv("ratio_max", num(max));
            report.kv("ratio_band", num(max / min));
            if max / min > BAND {
                report.fail(format!("normalized ratio spans a factor {} > {BAND}", max / min));
            }
            if min < RATIO_FLOOR {
                report.fail(format!("normalized ratio drops to {min} < {RATIO_FLOOR}"));
            }
        }
        let min_re = rows.iter().map(|r| r.min_re_k / r.t).fold(f64::INFINITY, f64::min);
        let max_phase = rows.iter().map(|r| r.max_phase).fold(0.0, f64::max);
        report.kv("min_re_k_over_t", num(min_re));
        report.kv("max_phase", num(max_phase));
        report.table = Some(table);
        Ok(report)
    }
}
