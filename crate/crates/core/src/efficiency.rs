//! Annotation-efficiency analysis: how many manual annotations a
//! semi-supervised model needs to match supervised performance.
//!
//! Performance between measured annotation budgets is piecewise
//! logarithmically interpolated: on a log-n axis the interpolant is a
//! straight segment between adjacent budget points. There is no
//! extrapolation beyond the measured range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One measured (annotation budget, performance) point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetPoint {
    pub n_manual: u64,
    pub performance: f64,
}

impl BudgetPoint {
    pub fn new(n_manual: u64, performance: f64) -> Result<Self> {
        if n_manual == 0 {
            return Err(Error::invalid("annotation budget must be at least 1"));
        }
        if !performance.is_finite() {
            return Err(Error::invalid("performance must be finite"));
        }
        Ok(BudgetPoint { n_manual, performance })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequiredAnnotations {
    pub n_semi: f64,
    /// indices of the bracketing points used
    pub bracket: (usize, usize),
    /// true when more than one bracket contained the target and the
    /// lowest-n one was chosen (non-monotone budget curve)
    pub ambiguous: bool,
}

/// Solve `N_a * (N_b / N_a)^((p - perf_a) / (perf_b - perf_a))` on the
/// bracketing budget pair around `perf_supervised`. Points must be sorted
/// ascending by `n_manual`; with a non-monotone performance curve the
/// lowest-n bracket wins and the result is flagged ambiguous.
pub fn required_annotations(
    points: &[BudgetPoint],
    perf_supervised: f64,
) -> Result<RequiredAnnotations> {
    if points.len() < 2 {
        return Err(Error::invalid("need at least 2 budget points"));
    }
    if points.windows(2).any(|w| w[0].n_manual >= w[1].n_manual) {
        return Err(Error::invalid("budget points must be strictly increasing in n_manual"));
    }
    let mut brackets = Vec::new();
    for (i, w) in points.windows(2).enumerate() {
        let (lo, hi) = (w[0].performance.min(w[1].performance), w[0].performance.max(w[1].performance));
        if lo <= perf_supervised && perf_supervised <= hi {
            if w[0].performance == w[1].performance {
                return Err(Error::invalid(format!(
                    "flat bracket at n = {}..{}: cannot invert interpolation",
                    w[0].n_manual, w[1].n_manual
                )));
            }
            brackets.push(i);
        }
    }
    let Some(&i) = brackets.first() else {
        let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| {
            (l.min(p.performance), h.max(p.performance))
        });
        return Err(Error::invalid(format!(
            "target {perf_supervised} outside measured performance range [{lo}, {hi}]; \
             no extrapolation"
        )));
    };
    let (a, b) = (points[i], points[i + 1]);
    let exponent = (perf_supervised - a.performance) / (b.performance - a.performance);
    let n_semi = a.n_manual as f64 * (b.n_manual as f64 / a.n_manual as f64).powf(exponent);
    Ok(RequiredAnnotations { n_semi, bracket: (i, i + 1), ambiguous: brackets.len() > 1 })
}

/// Annotation-efficiency ratio `R = N_supervised / N_semi-supervised`.
pub fn efficiency_ratio(n_supervised: f64, n_semi: f64) -> Result<f64> {
    if !(n_supervised > 0.0) || !(n_semi > 0.0) {
        return Err(Error::invalid("annotation counts must be positive"));
    }
    Ok(n_supervised / n_semi)
}

/// Sample the piecewise log-linear interpolant at `samples_per_segment`
/// evenly log-spaced n values per segment (plus the endpoints). Used for
/// plotting the budget curve.
pub fn interpolated_curve(points: &[BudgetPoint], samples_per_segment: usize) -> Result<Vec<(f64, f64)>> {
    if points.len() < 2 {
        return Err(Error::invalid("need at least 2 budget points"));
    }
    let mut out = Vec::new();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (la, lb) = ((a.n_manual as f64).ln(), (b.n_manual as f64).ln());
        for s in 0..samples_per_segment.max(1) {
            let t = s as f64 / samples_per_segment.max(1) as f64;
            let n = (la + t * (lb - la)).exp();
            let p = a.performance + t * (b.performance - a.performance);
            out.push((n, p));
        }
    }
    let last = points[points.len() - 1];
    out.push((last.n_manual as f64, last.performance));
    Ok(out)
}
