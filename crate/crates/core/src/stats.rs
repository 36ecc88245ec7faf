//! Welch's unequal-variance t-test, standard errors and boxplot summaries.
//!
//! The Student-t CDF is evaluated through the regularized incomplete beta
//! function, I_x(a, b), using the modified Lentz continued fraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Significance level used for the reported flag.
pub const ALPHA: f64 = 0.05;

const CF_REL_TOL: f64 = 1e-12;
const CF_MAX_ITER: usize = 100_000;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx).
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> Result<f64> {
    let tiny = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_REL_TOL {
            return Ok(h);
        }
    }
    Err(Error::Domain(format!("incomplete beta continued fraction did not converge for a = {a}, b = {b}, x = {x}")))
}

/// Regularized incomplete beta function I_x(a, b).
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("incomplete beta needs a, b > 0 and x ∈ [0, 1], got {a}, {b}, {x}")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_continued_fraction(a, b, x)? / a)
    } else {
        Ok(1.0 - front * beta_continued_fraction(b, a, 1.0 - x)? / b)
    }
}

/// Student-t cumulative distribution with `dof` degrees of freedom.
pub fn student_t_cdf(t: f64, dof: f64) -> Result<f64> {
    if !(dof > 0.0) {
        return Err(Error::Domain(format!("degrees of freedom must be positive, got {dof}")));
    }
    if t.is_infinite() {
        return Ok(if t > 0.0 { 1.0 } else { 0.0 });
    }
    let tail = 0.5 * regularized_incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t))?;
    Ok(if t > 0.0 { 1.0 - tail } else { tail })
}

/// Two-sided p-value for statistic `t`.
pub fn student_t_two_sided(t: f64, dof: f64) -> Result<f64> {
    if !(dof > 0.0) {
        return Err(Error::Domain(format!("degrees of freedom must be positive, got {dof}")));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    regularized_incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t)).map(|p| p.clamp(0.0, 1.0))
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance (n − 1 denominator).
pub fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

fn require_two(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "each sample needs at least 2 values, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Domain("samples contain non-finite values".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t_stat: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub dof: f64,
    pub p_two_sided: f64,
    /// mean(x) − mean(y).
    pub mean_difference: f64,
}

impl WelchResult {
    pub fn significant(&self) -> bool {
        self.p_two_sided < ALPHA
    }
}

/// Welch's two-sample t-test of H0: mean(x) = mean(y).
pub fn welch_t(x: &[f64], y: &[f64]) -> Result<WelchResult> {
    require_two(x, y)?;
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (vx, vy) = (sample_variance(x) / nx, sample_variance(y) / ny);
    let se2 = vx + vy;
    if se2 == 0.0 {
        return Err(Error::InsufficientData("both samples have zero variance".into()));
    }
    let diff = mean(x) - mean(y);
    let t_stat = diff / se2.sqrt();
    let dof = se2 * se2 / (vx * vx / (nx - 1.0) + vy * vy / (ny - 1.0));
    let p_two_sided = student_t_two_sided(t_stat, dof)?;
    Ok(WelchResult { t_stat, dof, p_two_sided, mean_difference: diff })
}

/// Standard error of the difference of means, √(s²ₓ/nₓ + s²ᵧ/nᵧ).
pub fn combined_se(x: &[f64], y: &[f64]) -> Result<f64> {
    require_two(x, y)?;
    Ok((sample_variance(x) / x.len() as f64 + sample_variance(y) / y.len() as f64).sqrt())
}

/// Quantile by linear interpolation between order statistics (Hyndman–Fan type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Boxplot summary: quartiles (type 7) with whiskers at the most extreme data
/// inside 1.5·IQR of the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: Vec<f64>,
}

impl BoxSummary {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

pub fn box_summary(x: &[f64]) -> Result<BoxSummary> {
    if x.is_empty() {
        return Err(Error::InsufficientData("box summary of an empty sample".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("sample contains non-finite values".into()));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let fence = 1.5 * (q3 - q1);
    let (lo_fence, hi_fence) = (q1 - fence, q3 + fence);
    let inside = sorted.iter().copied().filter(|v| *v >= lo_fence && *v <= hi_fence);
    // Interpolated quartiles can sit between an outlier and its neighbour.
    let whisker_lo = inside.clone().next().map_or(q1, |v| v.min(q1));
    let whisker_hi = inside.last().map_or(q3, |v| v.max(q3));
    let outliers = sorted.iter().copied().filter(|v| *v < lo_fence || *v > hi_fence).collect();
    Ok(BoxSummary { median, q1, q3, whisker_lo, whisker_hi, outliers })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, 1) = x; I_x(a, 1) = x^a.
        assert!((regularized_incomplete_beta(1.0, 1.0, 0.3).unwrap() - 0.3).abs() < 1e-14);
        assert!((regularized_incomplete_beta(2.5, 1.0, 0.4).unwrap() - 0.4f64.powf(2.5)).abs() < 1e-13);
        assert!(regularized_incomplete_beta(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn t_cdf_cauchy_case() {
        // One degree of freedom is the Cauchy distribution.
        for t in [-3.0, -0.5, 0.0, 0.7, 12.0] {
            let exact = 0.5 + f64::atan(t) / std::f64::consts::PI;
            assert!((student_t_cdf(t, 1.0).unwrap() - exact).abs() < 1e-12, "{t}");
        }
    }

    #[test]
    fn welch_identical_samples() {
        let x = [1.0, 2.0, 4.0, 7.0];
        let r = welch_t(&x, &x).unwrap();
        assert_eq!(r.t_stat, 0.0);
        assert_eq!(r.p_two_sided, 1.0);
        assert!(!r.significant());
    }

    #[test]
    fn welch_degenerate() {
        assert!(welch_t(&[1.0], &[1.0, 2.0]).is_err());
        assert!(welch_t(&[1.0, 1.0], &[2.0, 2.0]).is_err());
        assert!(combined_se(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn se_constant_sample() {
        let x = [3.0; 5];
        let y = [1.0, 2.0, 3.0, 4.0];
        let se = combined_se(&x, &y).unwrap();
        assert!((se - (sample_variance(&y) / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn box_examples() {
        let b = box_summary(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (2.0, 3.0, 4.0));
        assert!(b.outliers.is_empty());
        let flat = box_summary(&[2.5; 7]).unwrap();
        assert_eq!(flat.iqr(), 0.0);
        assert!(flat.outliers.is_empty());
        assert!(box_summary(&[]).is_err());
    }

    #[test]
    fn box_outlier() {
        let mut x = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0];
        let base = box_summary(&x).unwrap();
        let far = base.q3 + 10.0 * base.iqr();
        x.push(far);
        let b = box_summary(&x).unwrap();
        assert_eq!(b.outliers, vec![far]);
        assert_eq!(b.whisker_hi, 9.0);
        assert_eq!(b.whisker_lo, 1.0);
    }
}
