//! Confidence bounds for pass/fail verification data.
//!
//! With `N` trials of which `M` passed, a strategy with spectral gap `ν`
//! certifies fidelity at least `1 − ε` with confidence `1 − δ` where
//!
//! ```text
//! δ ≤ exp(−D(M/N ‖ 1 − εν)·N),   valid for ε ≥ (1 − M/N)/ν,
//! ```
//!
//! and `D` is the binary relative entropy in nats. For `M = N` this is
//! `(1 − εν)^N ≤ exp(−εNν)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bisection stops once the bracket is narrower than this.
pub const BISECTION_TOL: f64 = 1e-12;

/// Binary relative entropy `x ln(x/y) + (1−x) ln((1−x)/(1−y))`, with `0·ln 0 = 0`.
pub fn kl_divergence(x: f64, y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::DomainError(format!("D({x} || {y})")));
    }
    let term = |a: f64, b: f64| -> Result<f64> {
        if a == 0.0 {
            Ok(0.0)
        } else if b == 0.0 {
            Err(Error::DomainError(format!("D({x} || {y}) is infinite")))
        } else {
            Ok(a * (a / b).ln())
        }
    };
    Ok((term(x, y)? + term(1.0 - x, 1.0 - y)?).max(0.0))
}

fn check_nu(nu: f64) -> Result<()> {
    if nu > 0.0 && nu <= 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("spectral gap {nu} not in (0, 1]")))
    }
}

/// `exp(−ε N ν)`, the bound when every trial passed.
pub fn delta_bound_perfect(epsilon: f64, n: u64, nu: f64) -> Result<f64> {
    check_nu(nu)?;
    if n == 0 {
        return Err(Error::OutOfRange("N must be positive".into()));
    }
    if !(0.0..=1.0 / nu).contains(&epsilon) {
        return Err(Error::OutOfRange(format!("epsilon {epsilon} not in (0, 1/nu]")));
    }
    Ok((-epsilon * n as f64 * nu).exp())
}

/// `exp(−D(M/N ‖ 1 − εν)·N)`.
pub fn delta_bound(m: u64, n: u64, epsilon: f64, nu: f64) -> Result<f64> {
    check_nu(nu)?;
    if n == 0 || m > n {
        return Err(Error::OutOfRange(format!("M = {m}, N = {n}")));
    }
    if !(epsilon <= 1.0 / nu) {
        return Err(Error::OutOfRange(format!("epsilon {epsilon} exceeds 1/nu")));
    }
    let x = m as f64 / n as f64;
    let minimum = (1.0 - x) / nu;
    if epsilon < minimum - 1e-15 {
        return Err(Error::EpsilonTooSmall { epsilon, minimum });
    }
    let y = (1.0 - epsilon * nu).clamp(0.0, 1.0);
    if y == 0.0 {
        // D(x‖0) is infinite unless x = 0
        return Ok(if x > 0.0 { 0.0 } else { 1.0 });
    }
    if y >= x {
        // only reachable at the boundary ε = (1 − M/N)/ν
        return Ok(1.0);
    }
    Ok((-kl_divergence(x, y)? * n as f64).exp())
}

/// Smallest `ε` with `delta_bound(m, n, ε, ν) ≤ δ`.
///
/// Errors with `NotCertifiable` when no `ε < 1` qualifies, since a bound of
/// `ε ≥ 1` says nothing about the fidelity.
pub fn epsilon_at_confidence(m: u64, n: u64, delta: f64, nu: f64) -> Result<f64> {
    check_nu(nu)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange(format!("delta {delta} not in (0, 1)")));
    }
    if n == 0 || m > n {
        return Err(Error::OutOfRange(format!("M = {m}, N = {n}")));
    }
    let mut lo = (1.0 - m as f64 / n as f64) / nu;
    let mut hi = 1.0 / nu;
    if lo >= 1.0 {
        return Err(Error::NotCertifiable(format!(
            "pass fraction {m}/{n} is below 1 − ν; every ε ≥ 1"
        )));
    }
    if delta_bound(m, n, hi, nu)? > delta {
        return Err(Error::NotCertifiable(format!(
            "bound exceeds δ = {delta} even at ε = 1/ν"
        )));
    }
    if delta_bound(m, n, lo, nu)? <= delta {
        return Ok(lo);
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if delta_bound(m, n, mid, nu)? <= delta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if hi >= 1.0 {
        return Err(Error::NotCertifiable(format!("certified ε = {hi} is vacuous")));
    }
    Ok(hi)
}

/// `⌈ln(1/δ)/(εν)⌉`, the sample count that certifies `ε` when nothing fails.
pub fn min_samples_perfect(epsilon: f64, delta: f64, nu: f64) -> Result<u64> {
    check_nu(nu)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange(format!("delta {delta} not in (0, 1)")));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0 / nu) {
        return Err(Error::OutOfRange(format!("epsilon {epsilon} not in (0, 1/nu]")));
    }
    Ok(((1.0 / delta).ln() / (epsilon * nu)).ceil() as u64)
}

/// Outcome of certifying one batch of trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationResult {
    #[serde(rename = "N")]
    pub n_trials: u64,
    #[serde(rename = "M")]
    pub n_passed: u64,
    pub delta: f64,
    pub nu: f64,
    /// Certified infidelity bound; `1.0` (vacuous) when not certifiable.
    pub epsilon: f64,
    pub certified: bool,
}

impl VerificationResult {
    pub fn from_counts(n_passed: u64, n_trials: u64, delta: f64, nu: f64) -> Result<Self> {
        let (epsilon, certified) = match epsilon_at_confidence(n_passed, n_trials, delta, nu) {
            Ok(e) => (e, true),
            Err(Error::NotCertifiable(_)) => (1.0, false),
            Err(e) => return Err(e),
        };
        Ok(Self {
            n_trials,
            n_passed,
            delta,
            nu,
            epsilon,
            certified,
        })
    }

    pub fn fidelity_lower_bound(&self) -> f64 {
        1.0 - self.epsilon
    }
}

/// Least-squares fit of `ln ε = intercept + slope · ln N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    #[serde(rename = "stderr")]
    pub slope_stderr: f64,
    /// Smallest and largest `N` actually used.
    #[serde(rename = "range")]
    pub fit_range: (f64, f64),
    pub n_points: usize,
}

/// Unweighted OLS in log-log space over points with `lo ≤ N < hi` and `ε > 0`.
pub fn loglog_fit(points: &[(f64, f64)], range: (f64, f64)) -> Result<ScalingFit> {
    let used: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(n, e)| n >= range.0 && n < range.1 && n > 0.0 && e > 0.0 && e.is_finite())
        .collect();
    if used.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            got: used.len(),
        });
    }
    let xs: Vec<f64> = used.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: 1,
        });
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let slope_stderr = if used.len() > 2 {
        (ssr / (k - 2.0) / sxx).max(0.0).sqrt()
    } else {
        0.0
    };
    let n_min = used.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let n_max = used.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(ScalingFit {
        slope,
        intercept,
        slope_stderr,
        fit_range: (n_min, n_max),
        n_points: used.len(),
    })
}

/// Sample mean and (n−1) standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    const NU: f64 = 2.0 / 3.0;

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(0.3, 0.3).unwrap(), 0.0);
        let t: f64 = 0.07;
        assert!((kl_divergence(1.0, 1.0 - t).unwrap() + (1.0 - t).ln()).abs() < 1e-15);
        // 0.9 ln(0.9/0.98) + 0.1 ln(5), evaluated by hand
        let expected = 0.9 * (0.9f64 / 0.98).ln() + 0.1 * 5f64.ln();
        assert!((expected - 0.0843017637371339).abs() < 1e-15);
        assert!((kl_divergence(0.9, 0.98).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn kl_domain() {
        assert!(kl_divergence(0.5, 0.0).is_err());
        assert!(kl_divergence(0.5, 1.0).is_err());
        assert_eq!(kl_divergence(0.0, 0.0).unwrap(), 0.0);
        assert!(kl_divergence(1.2, 0.5).is_err());
    }

    #[test]
    fn perfect_bound_examples() {
        let d = delta_bound_perfect(0.03, 231, NU).unwrap();
        assert!((d - (-4.62f64).exp()).abs() < 1e-12 && d < 0.01);
        assert!((delta_bound_perfect(1e-12, 10, NU).unwrap() - 1.0).abs() < 1e-10);
        let d = delta_bound_perfect(0.03, 365, NU).unwrap();
        assert!((d - 6.75e-4).abs() < 1e-6);
        assert!(delta_bound_perfect(2.0, 10, NU).is_err());
        assert!(delta_bound_perfect(0.1, 10, 1.5).is_err());
    }

    #[test]
    fn general_bound_examples() {
        let eps = 0.06;
        let exact = (1.0 - eps * NU).powi(100);
        assert!((delta_bound(100, 100, eps, NU).unwrap() - exact).abs() < 1e-12);
        assert!(delta_bound(100, 100, eps, NU).unwrap() <= delta_bound_perfect(eps, 100, NU).unwrap());

        let d = delta_bound(980, 1000, 0.06, NU).unwrap();
        // D(0.98 || 0.96) computed independently
        let kl = 0.98 * (0.98f64 / 0.96).ln() + 0.02 * (0.02f64 / 0.04).ln();
        assert!((d - (-kl * 1000.0).exp()).abs() < 1e-12);
        assert!((kl * 1000.0 - 6.343957847481992).abs() < 1e-9);

        assert!(matches!(
            delta_bound(900, 1000, 0.1, NU),
            Err(Error::EpsilonTooSmall { .. })
        ));
    }

    #[test]
    fn inversion_examples() {
        let e = epsilon_at_confidence(231, 231, 0.01, NU).unwrap();
        let closed = (1.0 - 0.01f64.powf(1.0 / 231.0)) / NU;
        assert!((e - closed).abs() < 1e-9);
        assert!((e - 0.0296).abs() < 1e-4);

        let mut prev = f64::INFINITY;
        for m in 900..=1000 {
            let e = epsilon_at_confidence(m, 1000, 0.01, NU).unwrap();
            assert!(e < prev);
            prev = e;
        }
    }

    #[test]
    fn not_certifiable_cases() {
        assert!(matches!(
            epsilon_at_confidence(30, 100, 0.01, NU),
            Err(Error::NotCertifiable(_))
        ));
        assert!(matches!(
            epsilon_at_confidence(0, 100, 0.01, NU),
            Err(Error::NotCertifiable(_))
        ));
        // one trial: (1 − εν) ≤ 0.01 needs ε ≥ 1.485
        assert!(matches!(
            epsilon_at_confidence(1, 1, 0.01, NU),
            Err(Error::NotCertifiable(_))
        ));
        let r = VerificationResult::from_counts(30, 100, 0.01, NU).unwrap();
        assert!(!r.certified && r.epsilon == 1.0);
    }

    #[test]
    fn min_samples_examples() {
        assert_eq!(min_samples_perfect(0.03, 0.01, NU).unwrap(), 231);
        assert_eq!(min_samples_perfect(0.01, 0.01, NU).unwrap(), 691);
        assert_eq!(min_samples_perfect(0.03, 0.01, 1.0).unwrap(), 154);
        assert!(min_samples_perfect(0.0, 0.01, NU).is_err());
    }

    #[test]
    fn fit_examples() {
        let pts: Vec<(f64, f64)> = [10.0, 20.0, 50.0, 100.0, 400.0]
            .iter()
            .map(|&n| (n, 3.0 / n))
            .collect();
        let fit = loglog_fit(&pts, (0.0, 500.0)).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!(fit.slope_stderr < 1e-7);
        assert_eq!(fit.fit_range, (10.0, 400.0));

        let pts: Vec<(f64, f64)> = [10.0, 20.0, 50.0].iter().map(|&n: &f64| (n, 0.4 / n.sqrt())).collect();
        assert!((loglog_fit(&pts, (0.0, 500.0)).unwrap().slope + 0.5).abs() < 1e-12);

        assert!(matches!(
            loglog_fit(&pts, (15.0, 500.0)),
            Err(Error::InsufficientPoints { got: 2, .. })
        ));
    }

    #[test]
    fn summary_stats() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
