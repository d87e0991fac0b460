//! Bracketed 1-D extremum search: uniform grid scan followed by golden-section
//! refinement around the best grid point.

use thiserror::Error;

pub const DEFAULT_SCAN_POINTS: usize = 2001;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtremumError {
    #[error("search interval [{lo}, {hi}] is empty or not finite")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("extremum lies on the search boundary at {at}")]
    OnBoundary { at: f64 },

    #[error("objective is not finite at {at}")]
    NonFinite { at: f64 },
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes a unimodal `f` on `[lo, hi]` down to an interval of width `tol`.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Global minimum of `f` over `[lo, hi]`: scans `points` equally spaced
/// samples, then refines inside the neighbouring cells of the best sample.
///
/// Returns [`ExtremumError::OnBoundary`] when the best sample is an endpoint.
pub fn scan_minimize<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    points: usize,
    tol: f64,
) -> Result<f64, ExtremumError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || points < 3 {
        return Err(ExtremumError::InvalidInterval { lo, hi });
    }
    let step = (hi - lo) / (points - 1) as f64;
    let at = |i: usize| if i == points - 1 { hi } else { lo + step * i as f64 };

    let mut best = (0, f64::INFINITY);
    for i in 0..points {
        let x = at(i);
        let v = f(x);
        if v.is_nan() {
            return Err(ExtremumError::NonFinite { at: x });
        }
        if v < best.1 {
            best = (i, v);
        }
    }
    let (i, _) = best;
    if i == 0 || i == points - 1 {
        return Err(ExtremumError::OnBoundary { at: at(i) });
    }
    Ok(golden_section_min(f, at(i - 1), at(i + 1), tol))
}

/// Global maximum of `f` over `[lo, hi]`; see [`scan_minimize`].
pub fn scan_maximize<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    points: usize,
    tol: f64,
) -> Result<f64, ExtremumError> {
    scan_minimize(|x| -f(x), lo, hi, points, tol)
}
