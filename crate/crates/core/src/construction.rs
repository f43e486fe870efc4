//! Inflation data φ_n, the weight f(A), the three parameter regimes and the
//! checker for the sufficient conditions (i)–(vi).
//!
//! Parameters are stored as natural logarithms so that thresholds far beyond
//! floating-point range (N = 2^(10^32) in the critical case) stay exact
//! enough to compare. Integer values are materialized only when representable.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{cube_indicator, fl_norm, LatticePoint, SparseSpectrum, MAX_DIM};

/// Tolerance for recognising the endpoint s = −d/2.
pub const CRITICAL_TOL: f64 = 1e-12;

pub const DEFAULT_MARGIN: f64 = 10.0;

/// Largest log₂ N for which N is materialized as an integer.
const MAX_EXACT_LOG2: f64 = 62.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// s < −d/2
    Case1,
    /// s = −d/2
    Case2,
    /// −d/2 < s < 0, d ≥ 2
    Case3,
}

impl Regime {
    /// Regime of an admissible (s, d); inadmissible pairs are domain errors.
    pub fn classify(s: f64, d: usize) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::Domain(format!("dimension must be 1..={MAX_DIM}, got {d}")));
        }
        if !s.is_finite() || s >= 0.0 {
            return Err(Error::Domain(format!("Sobolev index must be negative, got {s}")));
        }
        let edge = -(d as f64) / 2.0;
        if (s - edge).abs() <= CRITICAL_TOL {
            Ok(Regime::Case2)
        } else if s < edge {
            Ok(Regime::Case1)
        } else if d >= 2 {
            Ok(Regime::Case3)
        } else {
            Err(Error::Domain(format!("s = {s} is not admissible in d = 1 (need s <= -1/2)")))
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Case1 => "Case1",
            Regime::Case2 => "Case2",
            Regime::Case3 => "Case3",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "Case1" => Ok(Regime::Case1),
            "Case2" => Ok(Regime::Case2),
            "Case3" => Ok(Regime::Case3),
            other => Err(Error::Domain(format!("unknown regime '{other}'"))),
        }
    }
}

/// f(A): 1 below the endpoint, (log A)^{1/2} at s = −d/2, A^{d/2+s} above.
pub fn f_of_a(a: f64, s: f64, d: usize) -> f64 {
    ln_f_of_a(a.ln(), s, d).exp()
}

/// log f(A) given log A.
pub fn ln_f_of_a(ln_a: f64, s: f64, d: usize) -> f64 {
    let edge = -(d as f64) / 2.0;
    if (s - edge).abs() <= CRITICAL_TOL {
        0.5 * ln_a.ln()
    } else if s < edge {
        0.0
    } else {
        (d as f64 / 2.0 + s) * ln_a
    }
}

/// α·ln N + β. Keeping the two parts apart lets condition ratios cancel the
/// ln N terms exactly even when ln N is far beyond 2^53.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LogLinear {
    pub alpha: f64,
    pub beta: f64,
}

impl LogLinear {
    pub const fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    pub const fn constant(beta: f64) -> Self {
        Self { alpha: 0.0, beta }
    }

    pub fn eval(&self, ln_n: f64) -> f64 {
        if self.alpha == 0.0 {
            self.beta
        } else {
            self.alpha * ln_n + self.beta
        }
    }

    fn plus(self, o: Self) -> Self {
        Self::new(self.alpha + o.alpha, self.beta + o.beta)
    }

    fn times(self, k: f64) -> Self {
        Self::new(k * self.alpha, k * self.beta)
    }
}

/// Parameters n, N, A, R, T with regime exponents. N = 2^k.
#[derive(Debug, Clone, PartialEq)]
pub struct InflationParams {
    pub n: u32,
    pub d: usize,
    pub s: f64,
    /// k with N = 2^k.
    pub log2_n: f64,
    pub log_a: LogLinear,
    pub log_r: LogLinear,
    pub log_t: LogLinear,
    pub delta: f64,
    pub theta: f64,
    pub regime: Regime,
}

impl InflationParams {
    pub fn ln_n(&self) -> f64 {
        self.log2_n * std::f64::consts::LN_2
    }

    pub fn ln_a(&self) -> f64 {
        self.log_a.eval(self.ln_n())
    }

    pub fn ln_r(&self) -> f64 {
        self.log_r.eval(self.ln_n())
    }

    pub fn ln_t(&self) -> f64 {
        self.log_t.eval(self.ln_n())
    }

    /// N as an integer when it fits.
    pub fn carrier(&self) -> Option<u64> {
        (self.log2_n <= MAX_EXACT_LOG2 && self.log2_n.fract() == 0.0).then(|| 1u64 << self.log2_n as u32)
    }

    /// A as an integer when it was materialized.
    pub fn cube_side(&self) -> Option<u64> {
        let ln_a = self.ln_a();
        if ln_a > 52.0 * std::f64::consts::LN_2 {
            return None;
        }
        let a = ln_a.exp().round();
        ((a.ln() - ln_a).abs() < 1e-12).then_some(a as u64)
    }

    pub fn amplitude(&self) -> f64 {
        self.ln_r().exp()
    }

    pub fn time(&self) -> f64 {
        self.ln_t().exp()
    }

    pub fn ln_f(&self) -> f64 {
        ln_f_of_a(self.ln_a(), self.s, self.d)
    }

    /// Scaling-critical index d/2 − 1.
    pub fn s_crit(&self) -> f64 {
        self.d as f64 / 2.0 - 1.0
    }

    /// Regime consistency and A ≤ N.
    pub fn validate(&self) -> Result<()> {
        let expected = Regime::classify(self.s, self.d)?;
        if expected != self.regime {
            return Err(Error::Domain(format!("s = {} in d = {} belongs to {expected}, not {}", self.s, self.d, self.regime)));
        }
        match self.regime {
            Regime::Case1 if !(self.s < -0.5 - 1.5 * self.delta) => {
                return Err(Error::Domain("Case1 requires s < -1/2 - (3/2) delta".into()));
            }
            Regime::Case3 => {
                let d = self.d as f64;
                if !(-2.0 * self.s > d * self.delta + self.theta && -self.s * self.delta > 2.0 * self.theta) {
                    return Err(Error::Domain("Case3 requires -2s > d delta + theta and -s delta > 2 theta".into()));
                }
            }
            _ => {}
        }
        if self.log_a.plus(LogLinear::new(-1.0, 0.0)).eval(self.ln_n()) > 1e-12 {
            return Err(Error::Domain("cube side A exceeds the carrier N".into()));
        }
        Ok(())
    }

    /// φ_n for these parameters; requires N and A to be representable.
    pub fn phi_n(&self) -> Result<SparseSpectrum> {
        let n = self.carrier().ok_or_else(|| Error::Resource("carrier N too large to materialize".into()))?;
        let a = self.cube_side().ok_or_else(|| Error::Resource("cube side A too large to materialize".into()))?;
        build_phi_n(self.d, n, a, self.amplitude())
    }
}

/// Plain decimal when representable, otherwise `N^α*exp(β)`.
fn fmt_log(q: LogLinear, ln_n: f64) -> String {
    let ln = q.eval(ln_n);
    let v = ln.exp();
    if v.is_normal() && ln.abs() < 700.0 {
        format!("{v:?}")
    } else {
        format!("N^{:?}*exp({:?})", q.alpha, q.beta)
    }
}

fn parse_log(key: &str, text: &str) -> Result<LogLinear> {
    let bad = || Error::Domain(format!("cannot parse {key} = '{text}'"));
    if let Some(rest) = text.strip_prefix("N^") {
        let (alpha, beta) = rest.split_once("*exp(").ok_or_else(bad)?;
        let beta = beta.strip_suffix(')').ok_or_else(bad)?;
        return Ok(LogLinear::new(alpha.trim().parse().map_err(|_| bad())?, beta.trim().parse().map_err(|_| bad())?));
    }
    let v: f64 = text.parse().map_err(|_| bad())?;
    if v <= 0.0 {
        return Err(bad());
    }
    Ok(LogLinear::constant(v.ln()))
}

impl fmt::Display for InflationParams {
    /// Key=value block, one pair per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n={}", self.n)?;
        writeln!(f, "d={}", self.d)?;
        writeln!(f, "s={:?}", self.s)?;
        match self.carrier() {
            Some(n) => writeln!(f, "N={n}")?,
            None => writeln!(f, "N=2^{:?}", self.log2_n)?,
        }
        match self.cube_side() {
            Some(a) => writeln!(f, "A={a}")?,
            None => writeln!(f, "A=N^{:?}*exp({:?})", self.log_a.alpha, self.log_a.beta)?,
        }
        writeln!(f, "R={}", fmt_log(self.log_r, self.ln_n()))?;
        writeln!(f, "T={}", fmt_log(self.log_t, self.ln_n()))?;
        writeln!(f, "delta={:?}", self.delta)?;
        writeln!(f, "theta={:?}", self.theta)?;
        writeln!(f, "regime={}", self.regime)
    }
}

impl FromStr for InflationParams {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: idx + 1, msg: format!("expected key=value, got '{line}'") })?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| map.get(k).map(String::as_str).ok_or_else(|| Error::Domain(format!("missing key '{k}'")));
        let num = |k: &str| -> Result<f64> { get(k)?.parse::<f64>().map_err(|_| Error::Domain(format!("cannot parse {k}"))) };
        let n_text = get("N")?;
        let log2_n = match n_text.strip_prefix("2^") {
            Some(e) => e.parse::<f64>().map_err(|_| Error::Domain(format!("cannot parse N = '{n_text}'")))?,
            None => {
                let n: u64 = n_text.parse().map_err(|_| Error::Domain(format!("cannot parse N = '{n_text}'")))?;
                if !n.is_power_of_two() {
                    return Err(Error::Domain(format!("N must be a power of 2, got {n}")));
                }
                n.trailing_zeros() as f64
            }
        };
        let params = InflationParams {
            n: get("n")?.parse().map_err(|_| Error::Domain("cannot parse n".into()))?,
            d: get("d")?.parse().map_err(|_| Error::Domain("cannot parse d".into()))?,
            s: num("s")?,
            log2_n,
            log_a: parse_log("A", get("A")?)?,
            log_r: parse_log("R", get("R")?)?,
            log_t: parse_log("T", get("T")?)?,
            delta: num("delta")?,
            theta: num("theta")?,
            regime: get("regime")?.parse()?,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Floor A to an even integer when it is small enough to be materialized,
/// folding the rounding into the constant part. A relative nudge of 1e-9
/// absorbs the error of exp(α ln N).
fn materialize_even(log_a: LogLinear, ln_n: f64) -> Result<LogLinear> {
    let ln_a = log_a.eval(ln_n);
    if ln_a > 52.0 * std::f64::consts::LN_2 {
        return Ok(log_a);
    }
    let a = 2.0 * (ln_a.exp() * (1.0 + 1e-9) / 2.0).floor();
    if a < 2.0 {
        return Err(Error::Domain(format!("N too small: cube side A = {:.3} rounds below 2", ln_a.exp())));
    }
    Ok(LogLinear::constant(a.ln()))
}

/// Regime parameters for N = 2^k. See [`select_parameters`].
pub fn select_parameters_log2(n: u32, s: f64, d: usize, log2_n: f64) -> Result<InflationParams> {
    if n == 0 {
        return Err(Error::Domain("inflation target n must be positive".into()));
    }
    if !(log2_n >= 1.0) || log2_n.fract() != 0.0 {
        return Err(Error::Domain(format!("N must be a power of 2 with N >= 2, got 2^{log2_n}")));
    }
    let regime = Regime::classify(s, d)?;
    let df = d as f64;
    let ln_n = log2_n * std::f64::consts::LN_2;
    let lin = |alpha: f64| LogLinear::new(alpha, 0.0);
    let (log_a, log_r, log_t, delta, theta) = match regime {
        Regime::Case1 => {
            let delta = if d == 1 { (0.1f64).min((-2.0 * s - 1.0) / 3.0 - 0.01) } else { 0.1 };
            if delta <= 0.0 {
                return Err(Error::Domain(format!("s = {s} too close to -1/2 for a positive delta")));
            }
            (lin((1.0 - delta) / df), lin(2.0 * delta), lin(-2.0 - 3.0 * delta), delta, 0.0)
        }
        Regime::Case2 => {
            if ln_n <= 1.0 {
                return Err(Error::Domain("N too small: log N must exceed 1 in the critical case".into()));
            }
            let lln = ln_n.ln();
            (LogLinear::new(1.0 / df, -lln / (16.0 * df)), LogLinear::default(), LogLinear::new(-2.0, -lln / 8.0), 0.0, 0.0)
        }
        Regime::Case3 => {
            let delta = (0.1f64).min(-s / df);
            let theta = (delta / 10.0).min(-s * delta / 4.0).min((-2.0 * s - df * delta) / 2.0 * 0.9);
            (
                lin(2.0 / df - delta),
                lin(-1.0 - s + df * delta / 2.0 - theta),
                lin(-2.0 + 2.0 * s + df * delta + theta),
                delta,
                theta,
            )
        }
    };
    let log_a = materialize_even(log_a, ln_n)?;
    if log_a.plus(lin(-1.0)).eval(ln_n) > 1e-12 {
        return Err(Error::Domain(format!("N too small: cube side A exceeds N = 2^{log2_n}")));
    }
    Ok(InflationParams { n, d, s, log2_n, log_a, log_r, log_t, delta, theta, regime })
}

/// Parameters of the regime selected by (s, d) for a power-of-two carrier N.
pub fn select_parameters(n: u32, s: f64, d: usize, carrier: u64) -> Result<InflationParams> {
    if !carrier.is_power_of_two() {
        return Err(Error::Domain(format!("N must be a power of 2, got {carrier}")));
    }
    select_parameters_log2(n, s, d, carrier.trailing_zeros() as f64)
}

/// One comparison of the condition list, held in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub label: &'static str,
    pub description: &'static str,
    /// log of the quantity that must be large.
    pub ln_big: f64,
    /// log of the quantity that must be small.
    pub ln_small: f64,
    /// log(big/small), computed before evaluating at ln N to avoid cancellation.
    pub ln_ratio: f64,
    pub margin: f64,
    /// Implied by another condition; reported for completeness.
    pub derived: bool,
}

impl ConditionCheck {
    /// big / small, possibly 0 or ∞ outside floating-point range.
    pub fn ratio(&self) -> f64 {
        self.ln_ratio.exp()
    }

    pub fn pass(&self) -> bool {
        self.ln_ratio >= self.margin.ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub margin: f64,
    pub checks: Vec<ConditionCheck>,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(ConditionCheck::pass)
    }

    pub fn failures(&self) -> Vec<&ConditionCheck> {
        self.checks.iter().filter(|c| !c.pass()).collect()
    }

    pub fn get(&self, label: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.label == label)
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<6} {:<32} ln_ratio={:>14.6e} {}{}",
                c.label,
                c.description,
                c.ln_ratio,
                if c.pass() { "pass" } else { "FAIL" },
                if c.derived { " (derived)" } else { "" }
            )?;
        }
        Ok(())
    }
}

/// Evaluates conditions (i)–(vi) with "≫" read as ratio ≥ `margin`.
pub fn check_conditions(params: &InflationParams, u0: &SparseSpectrum, margin: f64) -> Result<ConditionReport> {
    if !(margin >= 1.0) {
        return Err(Error::Domain(format!("margin must be at least 1, got {margin}")));
    }
    let d = params.d as f64;
    let ln_n = params.ln_n();
    let (a, r, t) = (params.log_a, params.log_r, params.log_t);
    let n_log = LogLinear::new(1.0, 0.0);
    // f(A) is not linear in ln N at the endpoint; its value is small enough
    // to carry as a constant.
    let f = LogLinear::constant(params.ln_f());
    let target = LogLinear::constant((params.n as f64).ln());
    let u1 = LogLinear::constant(fl_norm(u0, 1.0)?.ln());
    let u2 = LogLinear::constant(fl_norm(u0, 2.0)?.ln());
    let one = LogLinear::default();
    let growth = t.plus(r.times(3.0)).plus(a.times(2.0 * d)).plus(f);
    let check = |label, description, big: LogLinear, small: LogLinear, derived| {
        let diff = big.plus(small.times(-1.0));
        // Infinite endpoints (zero background) need no cancellation care.
        let ln_ratio = if small.beta.is_infinite() || big.beta.is_infinite() {
            big.eval(ln_n) - small.eval(ln_n)
        } else {
            diff.eval(ln_n)
        };
        ConditionCheck { label, description, ln_big: big.eval(ln_n), ln_small: small.eval(ln_n), ln_ratio, margin, derived }
    };
    let checks = vec![
        check("i", "R A^(d/2) N^s << 1/n", target.times(-1.0), r.plus(a.times(d / 2.0)).plus(n_log.times(params.s)), false),
        check("ii", "T R^2 A^(2d) << 1", one, t.plus(r.times(2.0)).plus(a.times(2.0 * d)), false),
        check("iii", "T R^3 A^(2d) f(A) >> n", growth, target, false),
        check(
            "iv",
            "T R^3 A^2d f >> T^2 R^5 A^4d f",
            growth,
            t.times(2.0).plus(r.times(5.0)).plus(a.times(4.0 * d)).plus(f),
            true,
        ),
        check("v", "T << N^-2", n_log.times(-2.0), t, false),
        check("vi.a", "R A^d >> |u0|_FL1", r.plus(a.times(d)), u1, false),
        check("vi.b", "A << N", n_log, a, false),
        check("vi.c", "R f(A) >> |u0|_L2", r.plus(f), u2, false),
    ];
    Ok(ConditionReport { margin, checks })
}

/// Smallest log₂ N₀ found by exponential search and bisection such that the
/// selected parameters pass every condition at `margin`.
pub fn threshold_log2(n: u32, s: f64, d: usize, u0: &SparseSpectrum, margin: f64) -> Result<f64> {
    let passes = |k: f64| -> Result<bool> {
        match select_parameters_log2(n, s, d, k) {
            Ok(p) => Ok(check_conditions(&p, u0, margin)?.all_pass()),
            Err(Error::Domain(msg)) if msg.starts_with("N too small") => Ok(false),
            Err(e) => Err(e),
        }
    };
    Regime::classify(s, d)?;
    let mut hi = 1.0f64;
    while !passes(hi)? {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Divergence("no passing carrier below 2^(1e300)".into()));
        }
    }
    let mut lo = hi / 2.0;
    if hi == 1.0 {
        return Ok(1.0);
    }
    // Invariant: lo fails, hi passes. Integer steps while they are exact.
    while hi - lo > 1.0 && (hi - lo) / hi > 1e-12 {
        let mid = ((lo + hi) / 2.0).floor();
        if mid <= lo || mid >= hi {
            break;
        }
        if passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// φ̂_n = R(1_{Ne₁+Q_A} + 1_{2Ne₁+Q_A}).
pub fn build_phi_n(d: usize, carrier: u64, side: u64, amplitude: f64) -> Result<SparseSpectrum> {
    if side == 0 || side % 2 == 1 {
        return Err(Error::Domain(format!("cube side A must be even and positive, got {side}")));
    }
    if side > carrier {
        return Err(Error::Domain(format!("cubes overlap: A = {side} exceeds N = {carrier}")));
    }
    if !(amplitude > 0.0) {
        return Err(Error::Domain(format!("amplitude R must be positive, got {amplitude}")));
    }
    if carrier > i32::MAX as u64 / 4 {
        return Err(Error::Resource(format!("carrier N = {carrier} exceeds the lattice range")));
    }
    let r = Complex64::new(amplitude, 0.0);
    let first = cube_indicator(LatticePoint::on_axis(d, carrier as i64)?, side, r)?;
    let second = cube_indicator(LatticePoint::on_axis(d, 2 * carrier as i64)?, side, r)?;
    first.add(&second)
}

/// Background datum u₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BackgroundProfile {
    Zero,
    Gaussian { amplitude: f64, width: f64 },
}

impl Default for BackgroundProfile {
    fn default() -> Self {
        BackgroundProfile::Gaussian { amplitude: 1.0, width: 1.0 }
    }
}

impl fmt::Display for BackgroundProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackgroundProfile::Zero => write!(f, "zero"),
            BackgroundProfile::Gaussian { amplitude, width } => write!(f, "gaussian({amplitude},{width})"),
        }
    }
}

impl FromStr for BackgroundProfile {
    type Err = Error;
    fn from_str(text: &str) -> Result<Self> {
        let t = text.trim();
        if t == "zero" {
            return Ok(BackgroundProfile::Zero);
        }
        let bad = || Error::Domain(format!("background must be 'zero' or 'gaussian(a,w)', got '{t}'"));
        let inner = t.strip_prefix("gaussian(").and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
        let (a, w) = inner.split_once(',').ok_or_else(bad)?;
        Ok(BackgroundProfile::Gaussian {
            amplitude: a.trim().parse().map_err(|_| bad())?,
            width: w.trim().parse().map_err(|_| bad())?,
        })
    }
}

/// û₀(ξ) = a e^{−|ξ|²/w²} on |ξ|_∞ ≤ 4w, or the empty spectrum.
pub fn build_background(d: usize, profile: BackgroundProfile) -> Result<SparseSpectrum> {
    match profile {
        BackgroundProfile::Zero => SparseSpectrum::zero(d),
        BackgroundProfile::Gaussian { amplitude, width } => {
            if !(width >= 1.0) || !width.is_finite() {
                return Err(Error::Domain(format!("gaussian width must be >= 1, got {width}")));
            }
            let k = (4.0 * width).floor() as i64;
            let box_ = cube_indicator(LatticePoint::origin(d), (2 * k + 1) as u64, Complex64::new(1.0, 0.0))?;
            // The odd-sided cube spans −k..=k.
            Ok(box_.map_amplitudes(|p, _| Complex64::new(amplitude * (-(p.norm_sq() as f64) / (width * width)).exp(), 0.0)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::sobolev_norm;

    fn pt(x: &[i64]) -> LatticePoint {
        LatticePoint::new(x).unwrap()
    }

    #[test]
    fn phi_n_examples() {
        let phi = build_phi_n(1, 8, 2, 1.0).unwrap();
        let support: Vec<i32> = phi.support().map(|p| p.coords()[0]).collect();
        assert_eq!(support, vec![7, 8, 15, 16]);
        assert_eq!(fl_norm(&phi, 1.0).unwrap(), 4.0);
        assert_eq!(fl_norm(&phi, 2.0).unwrap(), 2.0);
        let phi2 = build_phi_n(2, 8, 2, 3.0).unwrap();
        assert_eq!(phi2.len(), 8);
        assert_eq!(fl_norm(&phi2, 1.0).unwrap(), 24.0);
        assert!(build_phi_n(1, 8, 3, 1.0).is_err());
        assert!(build_phi_n(1, 8, 10, 1.0).is_err());
        assert!(build_phi_n(1, 8, 2, 0.0).is_err());
        // Largest admissible side: the cubes touch but stay disjoint.
        assert_eq!(build_phi_n(1, 8, 8, 1.0).unwrap().len(), 16);
    }

    #[test]
    fn exact_counts() {
        for (d, n, a, r) in [(1, 64, 16, 2.5), (2, 32, 8, 0.5), (3, 16, 4, 1.0)] {
            let phi = build_phi_n(d, n, a, r).unwrap();
            let vol = (a as f64).powi(d as i32);
            assert_eq!(fl_norm(&phi, 1.0).unwrap(), 2.0 * r * vol);
            assert!((fl_norm(&phi, 2.0).unwrap() - r * (2.0 * vol).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn sobolev_sandwich() {
        for (d, s) in [(1usize, -1.0), (1, -0.5), (2, -0.5)] {
            for k in 6..=10u32 {
                let p = select_parameters(1, s, d, 1 << k).unwrap();
                let phi = p.phi_n().unwrap();
                let a = p.cube_side().unwrap() as f64;
                let scale = p.amplitude() * a.powf(d as f64 / 2.0) * ((1u64 << k) as f64).powf(s);
                let ratio = sobolev_norm(&phi, s) / scale;
                assert!(ratio >= 2f64.powf(s) * 0.5 && ratio <= 4.0, "d={d} s={s} k={k}: {ratio}");
            }
        }
    }

    #[test]
    fn weight_examples() {
        assert_eq!(f_of_a(1234.0, -1.0, 1), 1.0);
        assert!((f_of_a(4f64.exp(), -0.5, 1) - 2.0).abs() < 1e-12);
        assert!((f_of_a(16.0, -0.3, 1) - 16f64.powf(0.2)).abs() < 1e-12);
        assert!((f_of_a(16.0, -1.0 + 1e-14, 2) - 16f64.ln().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn case1_example() {
        let p = select_parameters(1, -1.0, 1, 1 << 20).unwrap();
        assert_eq!(p.regime, Regime::Case1);
        assert_eq!(p.delta, 0.1);
        assert_eq!(p.cube_side(), Some(1 << 18));
        assert!((p.amplitude() - 16.0).abs() < 1e-9);
        assert!((p.time() / 2f64.powi(-46) - 1.0).abs() < 1e-12);
        assert_eq!(p.carrier(), Some(1 << 20));
    }

    #[test]
    fn case1_margins_at_moderate_carrier() {
        // At N = 2^20 conditions (ii) and (iii) have ratio exactly 4 < 10.
        let zero = SparseSpectrum::zero(1).unwrap();
        let p = select_parameters(1, -1.0, 1, 1 << 20).unwrap();
        let r = check_conditions(&p, &zero, DEFAULT_MARGIN).unwrap();
        assert!((r.get("ii").unwrap().ratio() - 4.0).abs() < 1e-9);
        assert!((r.get("iii").unwrap().ratio() - 4.0).abs() < 1e-9);
        assert!(!r.all_pass());
        let k0 = threshold_log2(1, -1.0, 1, &zero, DEFAULT_MARGIN).unwrap();
        assert_eq!(k0, 34.0);
        let p0 = select_parameters_log2(1, -1.0, 1, k0).unwrap();
        assert!(check_conditions(&p0, &zero, DEFAULT_MARGIN).unwrap().all_pass());
    }

    #[test]
    fn case2_example() {
        let p = select_parameters(1, -0.5, 1, 1 << 10).unwrap();
        assert_eq!(p.regime, Regime::Case2);
        assert_eq!(p.amplitude(), 1.0);
        let a = p.cube_side().unwrap();
        assert_eq!(a % 2, 0);
        let expect = 1024.0 / (1024f64.ln()).powf(1.0 / 16.0);
        assert!((a as f64) <= expect && (a as f64) > expect - 2.0);
    }

    #[test]
    fn case3_example() {
        let p = select_parameters(1, -0.5, 2, 1 << 12).unwrap();
        assert_eq!(p.regime, Regime::Case3);
        let d = 2.0;
        assert!(-2.0 * p.s > d * p.delta + p.theta);
        assert!(-p.s * p.delta > 2.0 * p.theta);
        p.validate().unwrap();
        let u0 = build_background(2, BackgroundProfile::default()).unwrap();
        let report = check_conditions(&p, &u0, DEFAULT_MARGIN).unwrap();
        assert_eq!(report.checks.len(), 8);
        let k0 = threshold_log2(1, -0.5, 2, &u0, DEFAULT_MARGIN).unwrap();
        let p0 = select_parameters_log2(1, -0.5, 2, k0).unwrap();
        assert!(check_conditions(&p0, &u0, DEFAULT_MARGIN).unwrap().all_pass());
        let below = select_parameters_log2(1, -0.5, 2, k0 - 1.0).unwrap();
        assert!(!check_conditions(&below, &u0, DEFAULT_MARGIN).unwrap().all_pass());
    }

    #[test]
    fn critical_threshold_is_astronomical() {
        let u0 = build_background(1, BackgroundProfile::default()).unwrap();
        let k0 = threshold_log2(1, -0.5, 1, &u0, DEFAULT_MARGIN).unwrap();
        // (i) needs (log N)^{1/32} >= 10: log₂ N >= 10^32 / ln 2.
        assert!((k0 / (1e32 / std::f64::consts::LN_2) - 1.0).abs() < 1e-6, "{k0}");
    }

    #[test]
    fn admissibility() {
        assert!(select_parameters(1, -0.3, 1, 1024).is_err());
        assert!(select_parameters(1, 0.2, 2, 1024).is_err());
        assert!(select_parameters(1, -1.0, 4, 1024).is_err());
        assert!(select_parameters(1, -1.0, 1, 1000).is_err());
        assert!(select_parameters(0, -1.0, 1, 1024).is_err());
        assert!(matches!(select_parameters(1, -1.0, 1, 2), Err(Error::Domain(m)) if m.contains("N too small")));
    }

    #[test]
    fn condition_examples() {
        let zero = SparseSpectrum::zero(1).unwrap();
        let mut p = select_parameters(1, -1.0, 1, 1 << 40).unwrap();
        p.log_t = LogLinear::new(-2.0, 0.0);
        let r = check_conditions(&p, &zero, DEFAULT_MARGIN).unwrap();
        assert!(!r.get("v").unwrap().pass());
        assert!((r.get("v").unwrap().ratio() - 1.0).abs() < 1e-9);
        for k in [10.0, 20.0, 40.0, 80.0] {
            let p = select_parameters_log2(1, -1.0, 1, k).unwrap();
            let r = check_conditions(&p, &zero, DEFAULT_MARGIN).unwrap();
            let (ii, iv) = (r.get("ii").unwrap(), r.get("iv").unwrap());
            assert_eq!(ii.pass(), iv.pass());
            assert!(iv.derived);
        }
    }

    #[test]
    fn params_round_trip() {
        for p in [
            select_parameters(3, -1.0, 1, 1 << 20).unwrap(),
            select_parameters(1, -0.5, 2, 1 << 12).unwrap(),
            select_parameters_log2(1, -0.5, 1, 1e32).unwrap(),
        ] {
            let text = p.to_string();
            let back: InflationParams = text.parse().unwrap();
            assert_eq!(back.n, p.n);
            assert_eq!(back.regime, p.regime);
            assert_eq!(back.log2_n, p.log2_n);
            assert_eq!(back.cube_side(), p.cube_side());
            for (x, y) in [(back.ln_a(), p.ln_a()), (back.ln_r(), p.ln_r()), (back.ln_t(), p.ln_t())] {
                assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0), "{text}");
            }
        }
        assert!("n=1\nd=1".parse::<InflationParams>().is_err());
    }

    #[test]
    fn s_crit_accessor() {
        assert_eq!(select_parameters(1, -1.0, 1, 1024).unwrap().s_crit(), -0.5);
        assert_eq!(select_parameters(1, -0.5, 2, 1024).unwrap().s_crit(), 0.0);
    }

    #[test]
    fn background_examples() {
        let z = build_background(1, BackgroundProfile::Zero).unwrap();
        assert!(z.is_empty());
        assert_eq!(fl_norm(&z, 1.0).unwrap(), 0.0);
        let g = build_background(1, BackgroundProfile::default()).unwrap();
        assert!(g.support().all(|p| p.coords()[0].abs() <= 4));
        assert_eq!(g.len(), 9);
        assert_eq!(g.get(&pt(&[0])), Complex64::new(1.0, 0.0));
        let g3 = build_background(2, BackgroundProfile::Gaussian { amplitude: 3.0, width: 1.5 }).unwrap();
        let g1 = build_background(2, BackgroundProfile::Gaussian { amplitude: 1.0, width: 1.5 }).unwrap();
        assert!((fl_norm(&g3, 1.0).unwrap() - 3.0 * fl_norm(&g1, 1.0).unwrap()).abs() < 1e-12);
        assert!(build_background(1, BackgroundProfile::Gaussian { amplitude: 1.0, width: 0.5 }).is_err());
        assert_eq!("gaussian(0.5, 1)".parse::<BackgroundProfile>().unwrap(), BackgroundProfile::Gaussian { amplitude: 0.5, width: 1.0 });
        assert!("lorentz".parse::<BackgroundProfile>().is_err());
    }
}
