//! Least-squares line fits in log-log coordinates.

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

/// Ordinary least squares of `y` against `x`; needs `min_points` finite pairs.
pub fn linear_fit(x: &[f64], y: &[f64], min_points: usize) -> LabResult<LineFit> {
    if x.len() != y.len() {
        return Err(LabError::Config(format!("fit needs paired data, got {} and {}", x.len(), y.len())));
    }
    if x.len() < min_points.max(2) {
        return Err(LabError::Config(format!("fit needs at least {} points, got {}", min_points.max(2), x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(LabError::Numerical("non-finite value in fit data".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(LabError::Config("fit abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    Ok(LineFit { slope, intercept, residual })
}

/// Fit of ln y against ln x.
pub fn loglog_fit(x: &[f64], y: &[f64], min_points: usize) -> LabResult<LineFit> {
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return Err(LabError::Numerical("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly, min_points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 5.0 * v.powi(3)).collect();
        let f = loglog_fit(&x, &y, 4).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-14 && f.residual < 1e-14);
        assert!(loglog_fit(&x[..3], &y[..3], 4).is_err());
        assert!(loglog_fit(&[1.0, 1.0], &[1.0, 2.0], 2).is_err());
    }

    proptest! {
        #[test]
        fn recovers_lines(a in -5.0f64..5.0, b in -5.0f64..5.0, n in 2usize..20) {
            let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let f = linear_fit(&x, &y, 2).unwrap();
            prop_assert!((f.slope - a).abs() < 1e-9 && (f.intercept - b).abs() < 1e-9);
        }
    }
}
