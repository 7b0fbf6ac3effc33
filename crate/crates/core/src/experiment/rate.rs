//! Least-squares fit of `log err` against `log N`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Standard error of the slope; zero for an exact two-parameter fit.
    pub stderr: f64,
    /// 95% confidence interval of the slope.
    pub band: [f64; 2],
    pub points: usize,
    /// Particle numbers dropped for a nonpositive or non-finite error.
    pub excluded: Vec<usize>,
}

/// OLS on `(ln N, ln err)`. Needs at least three usable points.
pub fn fit_rate(errs: &[f64], n_list: &[usize]) -> Result<RateFit> {
    if errs.len() != n_list.len() {
        return Err(Error::DimensionMismatch {
            expected: n_list.len(),
            found: errs.len(),
        });
    }
    let mut excluded = Vec::new();
    let mut pts = Vec::new();
    for (&e, &n) in errs.iter().zip(n_list) {
        if e > 0.0 && e.is_finite() && n > 0 {
            pts.push(((n as f64).ln(), e.ln()));
        } else {
            excluded.push(n);
        }
    }
    if pts.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "rate fit needs three positive errors, got {} (excluded N = {excluded:?})",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("rate fit needs distinct particle numbers".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let dof = k - 2.0;
    let stderr = (sse / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::InvalidInput(e.to_string()))?.inverse_cdf(0.975);
    Ok(RateFit {
        slope,
        intercept,
        r2,
        stderr,
        band: [slope - t * stderr, slope + t * stderr],
        points: pts.len(),
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let ns = [6, 8, 12, 16, 24];
        let errs: Vec<f64> = ns.iter().map(|&n| 0.3 * (n as f64).powf(-0.5)).collect();
        let fit = fit_rate(&errs, &ns).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!(fit.stderr < 1e-12);
    }

    #[test]
    fn constant_errors_give_zero_slope() {
        let fit = fit_rate(&[0.1; 4], &[2, 4, 8, 16]).unwrap();
        assert!(fit.slope.abs() < 1e-14);
    }

    #[test]
    fn nonpositive_errors_are_excluded() {
        let fit = fit_rate(&[0.0, 0.4, 0.2, 0.1], &[1, 2, 4, 8]).unwrap();
        assert_eq!(fit.excluded, vec![1]);
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!(fit_rate(&[0.0, -1.0, 0.2, 0.1], &[1, 2, 4, 8]).is_err());
    }
}
