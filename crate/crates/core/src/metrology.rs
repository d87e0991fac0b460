//! Intensity-difference measurement `M = n_b − n_a`: signal, noise,
//! refractive-index precision and the enhancement ratio over a product
//! coherent reference.
//!
//! Mode `a` passes the sensor with intensity transmission `|r_sp|² η_a²`,
//! mode `b` is the reference with `η_b²`. For a twin-mode input with `N`
//! photons per mode, Mandel parameter `Q_M` and correlation degree `σ`:
//!
//! ```text
//! ⟨M⟩  = (η_b² − |r|² η_a²) N
//! ⟨ΔM⟩ = √N [(η_b² − |r|²η_a²)² Q_M + 2|r|²η_a²η_b² σ + η_b² + |r|²η_a²(1 − 2η_b²)]^½
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fresnel::{self, FresnelError, IncidenceGeometry, KretschmannStack};
use crate::quantum_states::{PhotonStatistics, StateError, StateFamily};

/// Radicands down to this (relative) negative size are rounding noise.
const RADICAND_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetrologyError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("ratio requires balanced efficiencies, got η_a = {eta_a}, η_b = {eta_b}")]
    Unbalanced { eta_a: f64, eta_b: f64 },

    #[error("ratio diverges: {0}")]
    Divergent(String),

    #[error("signal slope vanishes at n = {n_analyte}; pick an operating point off the reflectance extremum")]
    DegenerateOperatingPoint { n_analyte: f64 },

    #[error(transparent)]
    Fresnel(#[from] FresnelError),

    #[error(transparent)]
    State(#[from] StateError),
}

/// Amplitude transmissions of the two arms, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelEfficiencies {
    pub eta_a: f64,
    pub eta_b: f64,
}

impl ChannelEfficiencies {
    pub fn new(eta_a: f64, eta_b: f64) -> Result<Self, MetrologyError> {
        for (name, eta) in [("η_a", eta_a), ("η_b", eta_b)] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(MetrologyError::Domain(format!("{name} = {eta} outside [0, 1]")));
            }
        }
        Ok(Self { eta_a, eta_b })
    }

    pub fn balanced(eta: f64) -> Result<Self, MetrologyError> {
        Self::new(eta, eta)
    }

    pub fn is_balanced(&self) -> bool {
        self.eta_a == self.eta_b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementStats {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionResult {
    /// RIU
    pub delta_n: f64,
    /// photons per RIU
    pub signal_slope: f64,
    /// photons
    pub noise: f64,
}

fn check_reflectivity(r_abs: f64) -> Result<(), MetrologyError> {
    if (0.0..=1.0).contains(&r_abs) {
        Ok(())
    } else {
        Err(MetrologyError::Domain(format!("|r_sp| = {r_abs} outside [0, 1]")))
    }
}

fn check_photons(photons: f64) -> Result<(), MetrologyError> {
    if photons.is_finite() && photons >= 0.0 {
        Ok(())
    } else {
        Err(MetrologyError::Domain(format!("photon number {photons} must be non-negative")))
    }
}

fn checked_sqrt(radicand: f64, scale: f64, what: &str) -> Result<f64, MetrologyError> {
    if radicand >= 0.0 {
        Ok(radicand.sqrt())
    } else if radicand >= -RADICAND_SLACK * scale.max(1.0) {
        Ok(0.0)
    } else {
        Err(MetrologyError::Domain(format!("negative {what} {radicand}")))
    }
}

/// `⟨M⟩ = (η_b² − |r|²η_a²) N`.
pub fn signal_mean(r_abs: f64, eff: ChannelEfficiencies, photons: f64) -> f64 {
    let r2 = r_abs * r_abs;
    (eff.eta_b * eff.eta_b - r2 * eff.eta_a * eff.eta_a) * photons
}

/// `⟨ΔM⟩` for a twin-mode input with statistics `(N, Q_M, σ)`.
pub fn signal_std(
    r_abs: f64,
    eff: ChannelEfficiencies,
    photons: f64,
    q_mandel: f64,
    sigma: f64,
) -> Result<f64, MetrologyError> {
    check_reflectivity(r_abs)?;
    check_photons(photons)?;
    let ta = r_abs * r_abs * eff.eta_a * eff.eta_a;
    let tb = eff.eta_b * eff.eta_b;
    // (T_b − T_a)²Q + 2T_aT_bσ + T_a + T_b − 2T_aT_b regrouped so that each
    // term is non-negative for Q ≥ −1, σ ≥ 0 and nothing cancels
    let radicand =
        (tb - ta).powi(2) * (1.0 + q_mandel) + 2.0 * ta * tb * sigma + ta * (1.0 - ta) + tb * (1.0 - tb);
    let scale = (tb - ta).powi(2) * (1.0 + q_mandel.abs()) + 2.0 * ta * tb * sigma.abs() + tb + ta;
    Ok(photons.sqrt() * checked_sqrt(radicand, scale, "noise radicand")?)
}

/// Enhancement ratio `R = ⟨ΔM⟩_coherent / ⟨ΔM⟩` for balanced efficiency `η`:
///
/// `R = [(1 + |r|²) / ((1 − |r|²)²η²Q_M + 2|r|²η²σ + 1 + |r|²(1 − 2η²))]^½`
pub fn ratio(r_abs: f64, eff: ChannelEfficiencies, q_mandel: f64, sigma: f64) -> Result<f64, MetrologyError> {
    ratio_perturbed(r_abs, eff, q_mandel, sigma, 0.0)
}

/// [`ratio`] with `offset` added to the denominator. Used by the validation
/// suite as a negative control; production callers want [`ratio`].
#[doc(hidden)]
pub fn ratio_perturbed(
    r_abs: f64,
    eff: ChannelEfficiencies,
    q_mandel: f64,
    sigma: f64,
    offset: f64,
) -> Result<f64, MetrologyError> {
    check_reflectivity(r_abs)?;
    if !eff.is_balanced() {
        return Err(MetrologyError::Unbalanced {
            eta_a: eff.eta_a,
            eta_b: eff.eta_b,
        });
    }
    let r2 = r_abs * r_abs;
    let eta2 = eff.eta_a * eff.eta_a;
    // same regrouping as in signal_std
    let den = (1.0 - r2).powi(2) * eta2 * (1.0 + q_mandel)
        + 2.0 * r2 * eta2 * sigma
        + (1.0 - eta2) * (1.0 + r2 * r2)
        + r2 * (1.0 - r2)
        + offset;
    if !(den > 0.0) {
        return Err(MetrologyError::Domain(format!(
            "ratio denominator {den} is not positive at |r|² = {r2}"
        )));
    }
    Ok(((1.0 + r2) / den).sqrt())
}

/// Twin Fock closed form at η = 1: `R_NN = [(1 + |r|²)/(|r|² − |r|⁴)]^½`,
/// independent of the photon number.
pub fn ratio_twin_fock(r_abs: f64) -> Result<f64, MetrologyError> {
    check_reflectivity(r_abs)?;
    let r2 = r_abs * r_abs;
    let den = r2 * (1.0 - r2);
    if !(den > 0.0) {
        return Err(MetrologyError::Divergent(format!(
            "twin Fock ratio is unbounded at |r|² = {r2}"
        )));
    }
    Ok(((1.0 + r2) / den).sqrt())
}

/// Two-mode squeezed vacuum closed form at η = 1:
/// `R = [(1 + |r|²)/(1 − |r|² + N(1 − |r|²)²)]^½`.
pub fn ratio_tmsv(r_abs: f64, photons: f64) -> Result<f64, MetrologyError> {
    check_reflectivity(r_abs)?;
    check_photons(photons)?;
    let r2 = r_abs * r_abs;
    let den = 1.0 - r2 + photons * (1.0 - r2).powi(2);
    if !(den > 0.0) {
        return Err(MetrologyError::Divergent(format!(
            "TMSV ratio is unbounded at |r|² = {r2}, N = {photons}"
        )));
    }
    Ok(((1.0 + r2) / den).sqrt())
}

/// Linear error propagation `δn = ⟨ΔM⟩ / |∂⟨M⟩/∂n|` at analyte index `n`.
///
/// The slope is a central difference of `⟨M⟩` through the Fresnel model with
/// step `h`; the noise is evaluated at `|r_sp(n)|`.
pub fn precision(
    stack: &KretschmannStack,
    geom: IncidenceGeometry,
    n_analyte: f64,
    stats: &PhotonStatistics,
    eff: ChannelEfficiencies,
    h: f64,
) -> Result<PrecisionResult, MetrologyError> {
    let photons = stats.mean();
    let mean_at = |n: f64| -> Result<f64, MetrologyError> {
        let r = fresnel::reflection_at_index(stack, geom, n)?;
        Ok(signal_mean(r.amplitude(), eff, photons))
    };
    let signal_slope = (mean_at(n_analyte + h)? - mean_at(n_analyte - h)?) / (2.0 * h);
    let r_abs = fresnel::reflection_at_index(stack, geom, n_analyte)?.amplitude();
    let noise = signal_std(r_abs.min(1.0), eff, photons, stats.q_mandel, stats.sigma)?;
    if !(signal_slope.abs() > 0.0 && signal_slope.is_finite()) {
        return Err(MetrologyError::DegenerateOperatingPoint { n_analyte });
    }
    Ok(PrecisionResult {
        delta_n: noise / signal_slope.abs(),
        signal_slope,
        noise,
    })
}

/// Outcome of a sweep: rows that evaluated, plus the points that failed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome<T> {
    pub rows: Vec<T>,
    pub failures: Vec<SweepFailure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    /// The swept coordinate (analyte index or angle) that failed.
    pub at: f64,
    pub error: MetrologyError,
}

impl<T> SweepOutcome<T> {
    fn collect(results: Vec<(f64, Result<T, MetrologyError>)>) -> Self {
        let mut rows = Vec::with_capacity(results.len());
        let mut failures = Vec::new();
        for (at, result) in results {
            match result {
                Ok(row) => rows.push(row),
                Err(error) => failures.push(SweepFailure { at, error }),
            }
        }
        Self { rows, failures }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub n_analyte: f64,
    #[serde(rename = "R")]
    pub ratio: f64,
}

/// `R(n)` over `n_grid` at fixed incidence and balanced efficiency `eta`.
pub fn sweep_ratio(
    stack: &KretschmannStack,
    geom: IncidenceGeometry,
    n_grid: &[f64],
    stats: &PhotonStatistics,
    eta: f64,
) -> Result<SweepOutcome<RatioPoint>, MetrologyError> {
    let eff = ChannelEfficiencies::balanced(eta)?;
    let results = n_grid
        .par_iter()
        .map(|&n| {
            let point = fresnel::reflection_at_index(stack, geom, n)
                .map_err(MetrologyError::from)
                .and_then(|r| ratio(r.amplitude().min(1.0), eff, stats.q_mandel, stats.sigma))
                .map(|ratio| RatioPoint { n_analyte: n, ratio });
            (n, point)
        })
        .collect();
    Ok(SweepOutcome::collect(results))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRow {
    pub theta_deg: f64,
    pub n_inf: f64,
    pub state: StateFamily,
    #[serde(rename = "N")]
    pub photons: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    pub delta_n: f64,
    pub slope: f64,
    pub noise: f64,
}

/// Numerical knobs shared by the inflection search and precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Finite-difference step, RIU.
    pub h: f64,
    /// Inflection-point tolerance, RIU.
    pub tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            h: fresnel::DEFAULT_INDEX_STEP,
            tol: 1e-7,
        }
    }
}

/// For each angle, locate the inflection index in `n_range` and evaluate
/// the precision there for every state family. Rows are ordered by angle,
/// then by `states`. Angles whose inflection search fails are reported as
/// failures and skipped.
pub fn sweep_precision_vs_angle(
    stack: &KretschmannStack,
    theta_grid: &[f64],
    states: &[StateFamily],
    photons: f64,
    eta: f64,
    n_range: (f64, f64),
    options: SearchOptions,
) -> Result<SweepOutcome<PrecisionRow>, MetrologyError> {
    let eff = ChannelEfficiencies::balanced(eta)?;
    sweep_precision_vs_angle_with(stack, theta_grid, states, photons, eff, n_range, options)
}

/// [`sweep_precision_vs_angle`] with independent channel efficiencies.
pub fn sweep_precision_vs_angle_with(
    stack: &KretschmannStack,
    theta_grid: &[f64],
    states: &[StateFamily],
    photons: f64,
    eff: ChannelEfficiencies,
    n_range: (f64, f64),
    options: SearchOptions,
) -> Result<SweepOutcome<PrecisionRow>, MetrologyError> {
    let stats: Vec<(StateFamily, PhotonStatistics)> = states
        .iter()
        .map(|&family| Ok((family, family.statistics(photons)?)))
        .collect::<Result<_, MetrologyError>>()?;

    let per_angle: Vec<(f64, Result<Vec<PrecisionRow>, MetrologyError>)> = theta_grid
        .par_iter()
        .map(|&theta| {
            let rows = (|| {
                let geom = IncidenceGeometry::from_degrees(theta)?;
                let n_inf = fresnel::inflection_index_with_step(stack, geom, n_range, options.tol, options.h)?;
                stats
                    .iter()
                    .map(|(family, st)| {
                        let p = precision(stack, geom, n_inf, st, eff, options.h)?;
                        Ok(PrecisionRow {
                            theta_deg: theta,
                            n_inf,
                            state: *family,
                            photons,
                            eta_a: eff.eta_a,
                            eta_b: eff.eta_b,
                            delta_n: p.delta_n,
                            slope: p.signal_slope,
                            noise: p.noise,
                        })
                    })
                    .collect::<Result<Vec<_>, MetrologyError>>()
            })();
            (theta, rows)
        })
        .collect();

    let nested = SweepOutcome::collect(per_angle);
    Ok(SweepOutcome {
        rows: nested.rows.into_iter().flatten().collect(),
        failures: nested.failures,
    })
}
