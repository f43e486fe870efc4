use nls_core::construction::{build_background, check_conditions, select_parameters, threshold_log2, BackgroundProfile, DEFAULT_MARGIN};
use nls_core::lattice::sobolev_norm;
use nls_core::SparseSpectrum;

use super::{background, dimension, strategy};
use crate::report::{num, Report, Table};
use crate::{Config, Experiment, LabError, LabResult};

pub const COLUMNS: [&str; 9] = [
    "t",
    "xi0_hs",
    "xi1_phi_hs",
    "xi1_diff_hs",
    "tail_hs",
    "partial_sum_hs",
    "data_dist_hs",
    "tail_bound",
    "dominance_ratio",
];

/// Norm-inflation pipeline: u₀ + φ_n expanded in the tree series.
pub struct Inflate;

/// Roughly log-spaced grid indices in 1..=last, always ending at `last`.
pub fn log_nodes(last: usize, points: usize) -> Vec<usize> {
    if last == 0 || points <= 1 {
        return vec![last];
    }
    let mut nodes: Vec<usize> = (0..points)
        .map(|i| ((last as f64).powf(i as f64 / (points - 1) as f64)).round() as usize)
        .map(|m| m.clamp(1, last))
        .collect();
    nodes.dedup();
    if nodes.last() != Some(&last) {
        nodes.push(last);
    }
    nodes
}

/// One row of the four-term decomposition at time t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub t: f64,
    pub xi0: f64,
    pub xi1_phi: f64,
    pub xi1_diff: f64,
    pub tail: f64,
    pub partial_sum: f64,
    pub data_dist: f64,
    pub tail_bound: f64,
}

impl Decomposition {
    pub fn dominance_ratio(&self) -> f64 {
        self.xi1_phi / (self.xi0 + self.xi1_diff + self.tail)
    }

    /// Triangle-inequality lower bound on the measured partial sum.
    pub fn lower_bound(&self) -> f64 {
        self.xi1_phi - self.xi0 - self.xi1_diff - self.tail
    }

    pub fn row(&self) -> Vec<String> {
        [
            self.t,
            self.xi0,
            self.xi1_phi,
            self.xi1_diff,
            self.tail,
            self.partial_sum,
            self.data_dist,
            self.tail_bound,
            self.dominance_ratio(),
        ]
        .into_iter()
        .map(num)
        .collect()
    }

    /// Reads a row back from a table with [`COLUMNS`].
    pub fn from_row(values: &[f64]) -> Self {
        Self {
            t: values[0],
            xi0: values[1],
            xi1_phi: values[2],
            xi1_diff: values[3],
            tail: values[4],
            partial_sum: values[5],
            data_dist: values[6],
            tail_bound: values[7],
        }
    }
}

/// Closeness threshold for ‖u_{0,n} − u₀‖_{H^s}.
pub fn closeness_threshold(u0_hs: f64) -> f64 {
    if u0_hs > 0.0 {
        u0_hs / 10.0
    } else {
        0.1
    }
}

fn sum_terms(terms: &[SparseSpectrum], dim: usize) -> LabResult<SparseSpectrum> {
    let mut acc = SparseSpectrum::zero(dim)?;
    for term in terms {
        acc = acc.add(term)?;
    }
    Ok(acc)
}

impl Experiment for Inflate {
    fn name(&self) -> &'static str {
        "inflate"
    }

    fn about(&self) -> &'static str {
        "expand u0 + phi_n in the tree series and measure the four-term lower bound"
    }

    fn keys(&self) -> &'static [&'static str] {
        &["d", "s", "N", "n", "J", "M", "u0", "wick", "kernel", "margin", "enforce_conditions", "points"]
    }

    fn execute(&self, cfg: &Config) -> LabResult<Report> {
        let d = dimension(cfg, 1)?;
        let s: f64 = cfg.get("s", -0.5)?;
        let carrier: u64 = cfg.get("N", 256)?;
        let target: u32 = cfg.get("n", 1)?;
        let order: usize = cfg.get("J", 3)?;
        let margin: f64 = cfg.get("margin", DEFAULT_MARGIN)?;
        let enforce = cfg.get_bool("enforce_conditions", false)?;
        let points: usize = cfg.get("points", 16)?;
        if order < 1 {
            return Err(LabError::Config("J must be at least 1".into()));
        }
        let opts = strategy(cfg, 256)?;
        let engine = opts.engine()?;
        let profile = background(cfg, BackgroundProfile::default())?;

        let params = select_parameters(target, s, d, carrier)?;
        let u0 = build_background(d, profile)?;
        let phi = params.phi_n()?;
        let u0n = u0.add(&phi)?;
        let conditions = check_conditions(&params, &u0, margin)?;
        let n0 = threshold_log2(target, s, d, &u0, margin)?;

        let mut report = Report::new("inflate");
        report.line(format!(
            "regime {} d={d} s={s} N={carrier} A={} R={:.6} T={:.6e} u0={profile} nonlinearity={}",
            params.regime,
            params.cube_side().unwrap_or(0),
            params.amplitude(),
            params.time(),
            opts.nonlinearity
        ));
        report.line(format!("conditions at margin {margin}:"));
        for line in conditions.to_string().lines() {
            report.line(format!("  {line}"));
        }
        report.line(format!("all conditions pass from N0 = 2^{n0}"));
        if enforce && !conditions.all_pass() {
            let names: Vec<String> =
                conditions.failures().iter().map(|c| format!("({}) {}", c.label, c.description)).collect();
            return Err(LabError::Check(format!("condition(s) {} fail at margin {margin}", names.join(", "))));
        }

        let big_t = params.time();
        let q = opts.quadrature;
        let nodes = log_nodes(q.nodes() - 1, points);
        let full = engine.build_series_at(&u0n, order, big_t, q, &nodes)?;
        let first = engine.build_series_at(&phi, 1, big_t, q, &nodes)?;

        let a = params.cube_side().unwrap_or(0) as f64;
        let r = params.amplitude();
        let f = params.ln_f().exp();
        let data_dist = sobolev_norm(&phi, s);
        let mut rows = Vec::with_capacity(nodes.len());
        for (k, _) in nodes.iter().enumerate() {
            let t = full.grid[full.nodes[k]];
            let terms = &full.terms[k];
            let xi1_phi = &first.terms[k][1];
            let tail = sum_terms(&terms[2..], d)?;
            let total = sum_terms(terms, d)?;
            rows.push(Decomposition {
                t,
                xi0: sobolev_norm(&terms[0], s),
                xi1_phi: sobolev_norm(xi1_phi, s),
                xi1_diff: sobolev_norm(&terms[1].sub(xi1_phi)?, s),
                tail: sobolev_norm(&tail, s),
                partial_sum: sobolev_norm(&total, s),
                data_dist,
                tail_bound: t * t * r.powi(5) * a.powi(4 * d as i32) * f,
            });
        }

        let mut table = Table::new(&COLUMNS);
        for row in &rows {
            table.push(row.row());
        }
        let at_t = *rows.last().expect("at least one node");
        let argmax = rows.iter().max_by(|x, y| x.partial_sum.total_cmp(&y.partial_sum)).expect("nonempty");
        let u0_hs = sobolev_norm(&u0, s);
        let threshold = closeness_threshold(u0_hs);
        let dominance = at_t.dominance_ratio();
        report.line(format!(
            "at T: |Xi1(phi)|={:.4e} |Xi0|={:.4e} |diff|={:.4e} |tail|={:.4e} |sum|={:.4e} dominance={:.4}",
            at_t.xi1_phi, at_t.xi0, at_t.xi1_diff, at_t.tail, at_t.partial_sum, dominance
        ));
        report.line(format!("|u0n - u0|_Hs = {data_dist:.4e} (threshold {threshold:.4e}); argmax_t |sum|_Hs = {:.4e}", argmax.t));
        report.kv("regime", params.regime);
        report.kv("N", carrier);
        report.kv("A", params.cube_side().unwrap_or(0));
        report.kv("R", num(r));
        report.kv("T", num(big_t));
        report.kv("t_argmax", num(argmax.t));
        report.kv("log2_N0", num(n0));
        report.kv("conditions_pass", conditions.all_pass());
        report.kv("dominance_ratio", num(dominance));
        report.kv("data_dist_hs", num(data_dist));
        report.kv("inflation_ratio", num(at_t.partial_sum / data_dist));
        report.kv("lower_bound", num(at_t.lower_bound()));
        if !(dominance > 1.0) {
            report.fail(format!("Xi1(phi_n) does not dominate at T (ratio {dominance})"));
        }
        if !(data_dist < threshold) {
            report.fail(format!("|u0n - u0|_Hs = {data_dist} is not below {threshold}"));
        }
        report.table = Some(table);
        Ok(report)
    }
}
