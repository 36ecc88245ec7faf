//! Least-squares fitting: Levenberg–Marquardt for decay curves and an
//! active-set nonnegative solver for linear models.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const MAX_ITER: usize = 500;
const STEP_TOL: f64 = 1e-14;

/// Outcome of a nonlinear least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LmSolution {
    pub params: DVector<f64>,
    /// Residual sum of squares.
    pub rss: f64,
    /// s²·(JᵀJ)⁻¹ with s² = rss/(n − p).
    pub covariance: DMatrix<f64>,
    pub iterations: usize,
}

/// Minimizes Σ rᵢ(p)² by Levenberg–Marquardt with Marquardt's diagonal scaling.
/// `residuals` fills r and the Jacobian ∂r/∂p for the given parameters.
pub fn levenberg_marquardt<F>(initial: DVector<f64>, n_obs: usize, mut residuals: F) -> Result<LmSolution>
where
    F: FnMut(&DVector<f64>, &mut DVector<f64>, &mut DMatrix<f64>),
{
    let n_par = initial.len();
    if n_obs <= n_par {
        return Err(Error::Fit(format!("{n_obs} observations cannot constrain {n_par} parameters")));
    }
    let mut p = initial;
    let mut r = DVector::zeros(n_obs);
    let mut jac = DMatrix::zeros(n_obs, n_par);
    residuals(&p, &mut r, &mut jac);
    let mut rss = r.norm_squared();
    if !rss.is_finite() {
        return Err(Error::Fit("non-finite residuals at the initial guess".into()));
    }
    let mut lambda = 1e-3;
    let mut r_try = DVector::zeros(n_obs);
    let mut jac_try = DMatrix::zeros(n_obs, n_par);
    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > MAX_ITER {
            return Err(Error::Fit(format!(
                "Levenberg–Marquardt did not converge in {MAX_ITER} iterations (rss = {rss:.3e}, λ = {lambda:.1e})"
            )));
        }
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let mut damped = jtj.clone();
        for i in 0..n_par {
            damped[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
        }
        let step = match damped.cholesky() {
            Some(ch) => ch.solve(&(-&grad)),
            None => {
                lambda *= 10.0;
                if lambda > 1e20 {
                    return Err(Error::Fit("normal equations are singular".into()));
                }
                continue;
            }
        };
        let p_try = &p + &step;
        residuals(&p_try, &mut r_try, &mut jac_try);
        let rss_try = r_try.norm_squared();
        if rss_try.is_finite() && rss_try < rss {
            let small_step = step.iter().zip(p.iter()).all(|(s, v)| s.abs() <= STEP_TOL * (v.abs() + STEP_TOL));
            let small_gain = rss - rss_try <= 1e-15 * rss;
            p = p_try;
            std::mem::swap(&mut r, &mut r_try);
            std::mem::swap(&mut jac, &mut jac_try);
            rss = rss_try;
            lambda = (lambda / 10.0).max(1e-15);
            if small_step || small_gain || rss == 0.0 {
                break;
            }
        } else {
            lambda *= 10.0;
            // No downhill step exists at working precision: a minimum.
            if lambda > 1e16 {
                break;
            }
        }
    }
    let jtj = jac.transpose() * &jac;
    let s2 = rss / (n_obs - n_par) as f64;
    let covariance = jtj
        .try_inverse()
        .ok_or_else(|| Error::Fit("singular Jacobian at the solution; parameters are not identifiable".into()))?
        * s2;
    Ok(LmSolution { params: p, rss, covariance, iterations })
}

/// Single-exponential fit y = a·exp(−Γt) + c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    pub rate: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub rate_sigma: f64,
    pub amplitude_sigma: f64,
    pub offset_sigma: f64,
    /// Covariance of (rate, amplitude, offset).
    pub covariance: [[f64; 3]; 3],
    pub rss: f64,
}

/// Gaussian-times-exponential fit y = a·exp(−Γt − (Γ_g t)²) + c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussExpFit {
    pub rate: f64,
    pub gauss_rate: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub rate_sigma: f64,
    pub rss: f64,
}

fn check_data(t: &[f64], y: &[f64], min_points: usize) -> Result<f64> {
    if t.len() != y.len() {
        return Err(Error::Fit(format!("{} times but {} samples", t.len(), y.len())));
    }
    if t.len() < min_points {
        return Err(Error::Fit(format!("need at least {min_points} points, got {}", t.len())));
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite data".into()));
    }
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(1e-300) {
        return Err(Error::Fit("degenerate trace: signal is constant".into()));
    }
    let t_max = t.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if t_max == 0.0 {
        return Err(Error::Fit("degenerate time grid".into()));
    }
    Ok(t_max)
}

/// Initial (amplitude, scaled rate, offset) from a log-linear fit of the
/// early decay, taking the offset from the tail.
fn initial_guess(ts: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = y.len();
    let tail = (n / 10).max(1);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| ts[i].total_cmp(&ts[j]));
    let c0 = order[n - tail..].iter().map(|&i| y[i]).sum::<f64>() / tail as f64;
    let head = (n / 10).max(1);
    let y0 = order[..head].iter().map(|&i| y[i]).sum::<f64>() / head as f64;
    let a0 = y0 - c0;
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &i in &order {
        let v = (y[i] - c0) / a0;
        if v > 0.1 {
            let ln = v.ln();
            sx += ts[i];
            sy += ln;
            sxx += ts[i] * ts[i];
            sxy += ts[i] * ln;
            m += 1.0;
        }
    }
    let slope = if m >= 2.0 { (m * sxy - sx * sy) / (m * sxx - sx * sx) } else { -1.0 };
    let rate = if slope.is_finite() && slope < 0.0 { -slope } else { 1.0 };
    (a0, rate, c0)
}

/// Fits a·exp(−Γt) + c by Levenberg–Marquardt on time scaled to [0, 1].
pub fn fit_exponential_xy(t: &[f64], y: &[f64]) -> Result<ExpFit> {
    let t_max = check_data(t, y, 5)?;
    let ts: Vec<f64> = t.iter().map(|v| v / t_max).collect();
    let (a0, k0, c0) = initial_guess(&ts, y);
    let sol = levenberg_marquardt(DVector::from_vec(vec![a0, k0, c0]), y.len(), |p, r, jac| {
        let (a, k, c) = (p[0], p[1], p[2]);
        for (i, (&x, &obs)) in ts.iter().zip(y).enumerate() {
            let e = (-k * x).exp();
            r[i] = a * e + c - obs;
            jac[(i, 0)] = e;
            jac[(i, 1)] = -a * x * e;
            jac[(i, 2)] = 1.0;
        }
    })?;
    let (a, k, c) = (sol.params[0], sol.params[1], sol.params[2]);
    if !(a.is_finite() && k.is_finite() && c.is_finite()) {
        return Err(Error::Fit("fit diverged".into()));
    }
    if a.abs() <= 1e-9 * c.abs().max(1e-300) {
        return Err(Error::Fit("degenerate fit: decay amplitude vanishes".into()));
    }
    // Parameter order in the covariance: (amplitude, scaled rate, offset) → (rate, amplitude, offset).
    let idx = [1usize, 0, 2];
    let scale = [1.0 / t_max, 1.0, 1.0];
    let mut covariance = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            covariance[i][j] = sol.covariance[(idx[i], idx[j])] * scale[i] * scale[j];
        }
    }
    Ok(ExpFit {
        rate: k / t_max,
        amplitude: a,
        offset: c,
        rate_sigma: covariance[0][0].sqrt(),
        amplitude_sigma: covariance[1][1].sqrt(),
        offset_sigma: covariance[2][2].sqrt(),
        covariance,
        rss: sol.rss,
    })
}

/// Fits a·exp(−Γt − (Γ_g t)²) + c; a negative curvature estimate is reported as Γ_g = 0.
pub fn fit_gauss_exponential_xy(t: &[f64], y: &[f64]) -> Result<GaussExpFit> {
    let t_max = check_data(t, y, 6)?;
    let ts: Vec<f64> = t.iter().map(|v| v / t_max).collect();
    let start = fit_exponential_xy(t, y)?;
    let init = DVector::from_vec(vec![start.amplitude, 0.5 * start.rate * t_max, 0.25 * (start.rate * t_max).powi(2), start.offset]);
    let sol = levenberg_marquardt(init, y.len(), |p, r, jac| {
        let (a, k, q, c) = (p[0], p[1], p[2], p[3]);
        for (i, (&x, &obs)) in ts.iter().zip(y).enumerate() {
            let e = (-k * x - q * x * x).exp();
            r[i] = a * e + c - obs;
            jac[(i, 0)] = e;
            jac[(i, 1)] = -a * x * e;
            jac[(i, 2)] = -a * x * x * e;
            jac[(i, 3)] = 1.0;
        }
    })?;
    let (a, k, q, c) = (sol.params[0], sol.params[1], sol.params[2], sol.params[3]);
    Ok(GaussExpFit {
        rate: k / t_max,
        gauss_rate: q.max(0.0).sqrt() / t_max,
        amplitude: a,
        offset: c,
        rate_sigma: sol.covariance[(1, 1)].sqrt() / t_max,
        rss: sol.rss,
    })
}

/// Nonnegative least squares min ‖Ax − b‖ subject to x ≥ 0 (Lawson–Hanson active set).
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::Domain(format!("NNLS dimension mismatch: {m} rows but {} targets", b.len())));
    }
    let tol = 10.0 * f64::EPSILON * a.norm() * (m.max(n) as f64);
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let solve_passive = |passive: &[bool]| -> Option<DVector<f64>> {
        let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let sub = a.select_columns(&cols);
        let sol = sub.clone().svd(true, true).solve(b, 1e-14).ok()?;
        let mut z = DVector::zeros(n);
        for (k, &j) in cols.iter().enumerate() {
            z[j] = sol[k];
        }
        Some(z)
    };
    for _ in 0..(3 * n + 10) {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else {
            return Ok(x);
        };
        passive[j] = true;
        loop {
            let z = solve_passive(&passive).ok_or_else(|| Error::Fit("NNLS subproblem is singular".into()))?;
            if (0..n).filter(|&k| passive[k]).all(|k| z[k] > 0.0) {
                x = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for k in (0..n).filter(|&k| passive[k] && z[k] <= 0.0) {
                alpha = alpha.min(x[k] / (x[k] - z[k]));
            }
            x = &x + (z - &x) * alpha;
            for k in 0..n {
                if passive[k] && x[k].abs() <= tol {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
        }
    }
    Err(Error::Fit("NNLS active-set iteration did not terminate".into()))
}
