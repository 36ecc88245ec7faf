//! Adaptive Gauss–Kronrod (G7/K15) quadrature on finite intervals.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of interval bisections per call.
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-10,
            max_subdivisions: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// One 15-point Kronrod evaluation with the embedded 7-point Gauss error estimate.
pub fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Estimate {
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Globally adaptive integration of `f` over `[a, b]`: the interval with the
/// largest error estimate is bisected until the total error meets the tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let first = gauss_kronrod_15(&f, a, b);
    let mut intervals = vec![(a, b, first)];
    let mut total = first;
    for _ in 0..cfg.max_subdivisions {
        let tol = cfg.abs_tol.max(cfg.rel_tol * total.value.abs());
        if total.error <= tol {
            return Ok(total);
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.error.total_cmp(&y.1 .2.error))
            .expect("at least one interval");
        let (lo, hi, est) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let left = gauss_kronrod_15(&f, lo, mid);
        let right = gauss_kronrod_15(&f, mid, hi);
        total.value += left.value + right.value - est.value;
        total.error += left.error + right.error - est.error;
        intervals.push((lo, mid, left));
        intervals.push((mid, hi, right));
    }
    // Recompute from scratch to shed accumulated rounding in the running sums.
    let value = intervals.iter().map(|i| i.2.value).sum::<f64>();
    let error = intervals.iter().map(|i| i.2.error).sum::<f64>();
    let tol = cfg.abs_tol.max(cfg.rel_tol * value.abs());
    if error <= tol {
        Ok(Estimate { value, error })
    } else {
        Err(Error::Quadrature { achieved: error, requested: tol })
    }
}

/// Integrates over consecutive panels `[edges[i], edges[i+1]]`, each adaptively,
/// with the tolerance split evenly in absolute terms.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: F, edges: &[f64], cfg: &QuadratureConfig) -> Result<Estimate> {
    let mut value = 0.0;
    let mut error = 0.0;
    for w in edges.windows(2) {
        let est = integrate(&f, w[0], w[1], cfg)?;
        value += est.value;
        error += est.error;
    }
    Ok(Estimate { value, error })
}
