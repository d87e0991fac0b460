//! Truncated two-mode Fock states `Σ C_{n,m} |n, m⟩` and their photon-number
//! statistics.
//!
//! All constructors are parameterized by the mean photon number per mode.
//! Statistics depend on `|C_{n,m}|²` only; phases are stored but never read
//! by any downstream quantity.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest acceptable `1 − Σ|C|²` for a fixed cutoff.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-10;

/// Target `1 − Σ|C|²` when the cutoff is grown automatically.
pub const AUTO_TRUNCATION_TARGET: f64 = 1e-14;

/// Upper bound on automatically chosen cutoffs.
pub const MAX_AUTO_CUTOFF: usize = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("cutoff {cutoff} leaves truncation weight {weight:.3e} above {tol:.1e}; try a cutoff of at least {suggested}")]
    Truncation {
        cutoff: usize,
        weight: f64,
        tol: f64,
        suggested: usize,
    },

    #[error("cutoff {cutoff} cannot hold {required} photons in one mode")]
    Capacity { cutoff: usize, required: usize },

    #[error("invalid state parameter: {0}")]
    InvalidParameter(String),

    #[error("coefficients are not normalizable: Σ|C|² = {0}")]
    NotNormalized(f64),

    #[error("photon statistics undefined: {0}")]
    UndefinedStatistics(String),

    #[error("state dump line {line}: {message}")]
    Dump { line: usize, message: String },
}

/// How many photons per mode to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cutoff {
    /// Keep `0..=n`; the truncation weight must stay below [`DEFAULT_TRUNCATION_TOL`].
    Fixed(usize),
    /// Grow until the truncation weight drops below [`AUTO_TRUNCATION_TARGET`].
    Auto,
}

/// Coefficients `C_{n,m}` for `0 ≤ n, m ≤ cutoff`, row-major in `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockCoefficients {
    cutoff: usize,
    coeffs: Vec<Complex64>,
}

impl FockCoefficients {
    /// Builds a state from a generator; fails if `Σ|C|² > 1`.
    pub fn from_fn<F>(cutoff: usize, mut f: F) -> Result<Self, StateError>
    where
        F: FnMut(usize, usize) -> Complex64,
    {
        let dim = cutoff + 1;
        let mut coeffs = Vec::with_capacity(dim * dim);
        for n in 0..dim {
            for m in 0..dim {
                coeffs.push(f(n, m));
            }
        }
        let state = Self { cutoff, coeffs };
        let total = state.total_weight();
        if !(total.is_finite() && total <= 1.0 + 1e-12) {
            return Err(StateError::NotNormalized(total));
        }
        Ok(state)
    }

    /// Builds a state from sparse `(n, m, C)` entries.
    pub fn from_entries<I>(cutoff: usize, entries: I) -> Result<Self, StateError>
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let dim = cutoff + 1;
        let mut dense = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (n, m, c) in entries {
            if n > cutoff || m > cutoff {
                return Err(StateError::Capacity {
                    cutoff,
                    required: n.max(m),
                });
            }
            dense[n * dim + m] = c;
        }
        Self::from_fn(cutoff, |n, m| dense[n * dim + m])
    }

    /// Rescales so that `Σ|C|² = 1`.
    pub fn normalized(mut self) -> Result<Self, StateError> {
        let total = self.total_weight();
        if !(total > 0.0 && total.is_finite()) {
            return Err(StateError::NotNormalized(total));
        }
        let scale = total.sqrt().recip();
        self.coeffs.iter_mut().for_each(|c| *c *= scale);
        Ok(self)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn coefficient(&self, n: usize, m: usize) -> Complex64 {
        if n > self.cutoff || m > self.cutoff {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[n * (self.cutoff + 1) + m]
    }

    /// `|C_{n,m}|²`.
    pub fn probability(&self, n: usize, m: usize) -> f64 {
        self.coefficient(n, m).norm_sqr()
    }

    /// Iterates `(n, m, |C_{n,m}|²)` over the stored block.
    pub fn probabilities(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let dim = self.cutoff + 1;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (i / dim, i % dim, c.norm_sqr()))
    }

    pub fn total_weight(&self) -> f64 {
        compensated_sum(self.coeffs.iter().map(|c| c.norm_sqr()))
    }

    /// `1 − Σ|C|²`, clamped at zero.
    pub fn truncation_weight(&self) -> f64 {
        (1.0 - self.total_weight()).max(0.0)
    }

    /// `max ||C_{n,m}| − |C_{m,n}|| ≤ tol`.
    pub fn is_twin_mode(&self, tol: f64) -> bool {
        let dim = self.cutoff + 1;
        (0..dim).all(|n| {
            (n + 1..dim).all(|m| (self.coefficient(n, m).norm() - self.coefficient(m, n).norm()).abs() <= tol)
        })
    }

    /// Path symmetry `C_{n,m} = C*_{m,n} e^{−2iχ₀}`.
    pub fn is_path_symmetric(&self, chi0: f64, tol: f64) -> bool {
        let phase = Complex64::from_polar(1.0, -2.0 * chi0);
        let dim = self.cutoff + 1;
        (0..dim).all(|n| {
            (0..dim).all(|m| (self.coefficient(n, m) - self.coefficient(m, n).conj() * phase).norm() <= tol)
        })
    }

    /// Writes non-zero coefficients as `n,m,re,im` CSV rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,m,re,im")?;
        let dim = self.cutoff + 1;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.re != 0.0 || c.im != 0.0 {
                writeln!(out, "{},{},{:e},{:e}", i / dim, i % dim, c.re, c.im)?;
            }
        }
        Ok(())
    }

    /// Reads the format produced by [`FockCoefficients::write_csv`]; the
    /// cutoff is the largest photon number present.
    pub fn read_csv<R: Read>(source: R) -> Result<Self, StateError> {
        let mut entries = Vec::new();
        for (idx, line) in BufReader::new(source).lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| StateError::Dump {
                line: line_no,
                message: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (line_no == 1 && line.starts_with('n')) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |message: String| StateError::Dump {
                line: line_no,
                message,
            };
            if fields.len() != 4 {
                return Err(bad(format!("expected 4 columns, found {}", fields.len())));
            }
            let n: usize = fields[0].parse().map_err(|_| bad(format!("bad n {:?}", fields[0])))?;
            let m: usize = fields[1].parse().map_err(|_| bad(format!("bad m {:?}", fields[1])))?;
            let re: f64 = fields[2].parse().map_err(|_| bad(format!("bad re {:?}", fields[2])))?;
            let im: f64 = fields[3].parse().map_err(|_| bad(format!("bad im {:?}", fields[3])))?;
            entries.push((n, m, Complex64::new(re, im)));
        }
        let cutoff = entries.iter().map(|&(n, m, _)| n.max(m)).max().unwrap_or(0);
        Self::from_entries(cutoff, entries)
    }
}

/// Product of two per-mode amplitude sequences, `C_{n,m} = a_n b_m`.
fn product_state(a: &[Complex64], b: &[Complex64]) -> FockCoefficients {
    let cutoff = a.len() - 1;
    let dim = cutoff + 1;
    let mut coeffs = Vec::with_capacity(dim * dim);
    for &x in a {
        coeffs.extend(b.iter().map(|&y| x * y));
    }
    FockCoefficients { cutoff, coeffs }
}

fn diagonal_state(d: &[Complex64]) -> FockCoefficients {
    let cutoff = d.len() - 1;
    let dim = cutoff + 1;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); dim * dim];
    for (n, &c) in d.iter().enumerate() {
        coeffs[n * dim + n] = c;
    }
    FockCoefficients { cutoff, coeffs }
}

/// Builds a state whose tail decays with the cutoff, honouring `policy`.
fn truncated<F>(policy: Cutoff, minimum: usize, build: F) -> Result<FockCoefficients, StateError>
where
    F: Fn(usize) -> FockCoefficients,
{
    match policy {
        Cutoff::Fixed(cutoff) => {
            let state = build(cutoff);
            let weight = state.truncation_weight();
            if weight > DEFAULT_TRUNCATION_TOL {
                let suggested = (minimum.max(cutoff)..=MAX_AUTO_CUTOFF)
                    .find(|&k| build(k).truncation_weight() <= DEFAULT_TRUNCATION_TOL)
                    .unwrap_or(MAX_AUTO_CUTOFF);
                return Err(StateError::Truncation {
                    cutoff,
                    weight,
                    tol: DEFAULT_TRUNCATION_TOL,
                    suggested,
                });
            }
            Ok(state)
        }
        Cutoff::Auto => {
            let mut cutoff = minimum.max(8);
            loop {
                let state = build(cutoff);
                let weight = state.truncation_weight();
                if weight < AUTO_TRUNCATION_TARGET {
                    return Ok(state);
                }
                if cutoff >= MAX_AUTO_CUTOFF {
                    return Err(StateError::Truncation {
                        cutoff,
                        weight,
                        tol: AUTO_TRUNCATION_TARGET,
                        suggested: MAX_AUTO_CUTOFF,
                    });
                }
                cutoff = (cutoff + cutoff / 2).min(MAX_AUTO_CUTOFF);
            }
        }
    }
}

/// Neumaier summation; the plain sum of ~10⁶ probabilities drifts by more
/// than the auto-cutoff target.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn check_mean(mean_photons: f64) -> Result<(), StateError> {
    if mean_photons.is_finite() && mean_photons >= 0.0 {
        Ok(())
    } else {
        Err(StateError::InvalidParameter(format!(
            "mean photon number must be finite and non-negative, got {mean_photons}"
        )))
    }
}

/// Product coherent state `|α, α⟩`, `C_{n,m} = e^{−|α|²} αⁿ⁺ᵐ / √(n! m!)`.
pub fn coherent_product(alpha: Complex64, cutoff: Cutoff) -> Result<FockCoefficients, StateError> {
    check_mean(alpha.norm_sqr())?;
    let amplitudes = |k: usize| {
        let mut a = Vec::with_capacity(k + 1);
        let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..=k {
            a.push(c);
            c = c * alpha / ((n + 1) as f64).sqrt();
        }
        a
    };
    truncated(cutoff, alpha.norm_sqr().ceil() as usize, |k| {
        let a = amplitudes(k);
        product_state(&a, &a)
    })
}

/// Twin Fock state `|N, N⟩`.
pub fn twin_fock(photons: usize, cutoff: Cutoff) -> Result<FockCoefficients, StateError> {
    let cutoff = match cutoff {
        Cutoff::Fixed(c) if c < photons => {
            return Err(StateError::Capacity {
                cutoff: c,
                required: photons,
            })
        }
        Cutoff::Fixed(c) => c,
        Cutoff::Auto => photons,
    };
    FockCoefficients::from_entries(cutoff, [(photons, photons, Complex64::new(1.0, 0.0))])
}

/// Two-mode squeezed vacuum with `sinh² r = N`:
/// `C_{n,n} = √(1 − λ²) λⁿ`, `λ = tanh r`.
pub fn tmsv(mean_photons: f64, cutoff: Cutoff) -> Result<FockCoefficients, StateError> {
    check_mean(mean_photons)?;
    let lambda = (mean_photons / (1.0 + mean_photons)).sqrt();
    let c0 = (1.0 - lambda * lambda).sqrt();
    truncated(cutoff, mean_photons.ceil() as usize, |k| {
        let diag: Vec<Complex64> = (0..=k)
            .scan(c0, |c, _| {
                let out = *c;
                *c *= lambda;
                Some(Complex64::new(out, 0.0))
            })
            .collect();
        diagonal_state(&diag)
    })
}

/// NOON state `(|2N, 0⟩ + |0, 2N⟩)/√2`, mean `N` photons per mode.
pub fn noon(photons: usize, cutoff: Cutoff) -> Result<FockCoefficients, StateError> {
    if photons == 0 {
        return Err(StateError::InvalidParameter("NOON state needs N ≥ 1".into()));
    }
    let total = 2 * photons;
    let cutoff = match cutoff {
        Cutoff::Fixed(c) if c < total => {
            return Err(StateError::Capacity {
                cutoff: c,
                required: total,
            })
        }
        Cutoff::Fixed(c) => c,
        Cutoff::Auto => total,
    };
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    FockCoefficients::from_entries(cutoff, [(total, 0, amp), (0, total, amp)])
}

/// Product of single-mode squeezed vacua `|ξ, ξ⟩` with `sinh² r = N` per
/// mode and squeezing phase zero:
/// `s_{2k} = √((2k)!)/(2ᵏ k!) (−tanh r)ᵏ / √(cosh r)`, odd terms vanish.
pub fn squeezed_product(mean_photons: f64, cutoff: Cutoff) -> Result<FockCoefficients, StateError> {
    check_mean(mean_photons)?;
    let cosh_r = (1.0 + mean_photons).sqrt();
    let tanh_r = (mean_photons / (1.0 + mean_photons)).sqrt();
    truncated(cutoff, mean_photons.ceil() as usize, |k| {
        let mut s = vec![Complex64::new(0.0, 0.0); k + 1];
        let mut c = 1.0 / cosh_r.sqrt();
        let mut j = 0usize;
        while 2 * j <= k {
            s[2 * j] = Complex64::new(c, 0.0);
            let kf = j as f64;
            c *= -tanh_r * ((2.0 * kf + 1.0) * (2.0 * kf + 2.0)).sqrt() / (2.0 * (kf + 1.0));
            j += 1;
        }
        product_state(&s, &s)
    })
}

/// Named input-state families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateFamily {
    Coherent,
    TwinFock,
    Tmsv,
    Noon,
    SqueezedProduct,
}

impl StateFamily {
    pub const ALL: [StateFamily; 5] = [
        StateFamily::Coherent,
        StateFamily::TwinFock,
        StateFamily::Tmsv,
        StateFamily::Noon,
        StateFamily::SqueezedProduct,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StateFamily::Coherent => "coherent",
            StateFamily::TwinFock => "twin-fock",
            StateFamily::Tmsv => "tmsv",
            StateFamily::Noon => "noon",
            StateFamily::SqueezedProduct => "squeezed-product",
        }
    }

    /// Builds the family member with `mean_photons` per mode. Twin Fock and
    /// NOON need an integer photon number.
    pub fn build(self, mean_photons: f64, cutoff: Cutoff) -> Result<FockCoefficients, StateError> {
        check_mean(mean_photons)?;
        let integer = || {
            if mean_photons.fract() == 0.0 {
                Ok(mean_photons as usize)
            } else {
                Err(StateError::InvalidParameter(format!(
                    "{} state needs an integer photon number, got {mean_photons}",
                    self.name()
                )))
            }
        };
        match self {
            StateFamily::Coherent => coherent_product(Complex64::new(mean_photons.sqrt(), 0.0), cutoff),
            StateFamily::TwinFock => twin_fock(integer()?, cutoff),
            StateFamily::Tmsv => tmsv(mean_photons, cutoff),
            StateFamily::Noon => noon(integer()?, cutoff),
            StateFamily::SqueezedProduct => squeezed_product(mean_photons, cutoff),
        }
    }

    /// Statistics of the auto-truncated family member.
    pub fn statistics(self, mean_photons: f64) -> Result<PhotonStatistics, StateError> {
        statistics(&self.build(mean_photons, Cutoff::Auto)?)
    }
}

impl fmt::Display for StateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StateFamily {
    type Err = StateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StateFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| StateError::InvalidParameter(format!("unknown state family {s:?}")))
    }
}

/// Per-mode means, Mandel-Q of mode `a`, correlation degree `σ` and the
/// intermode (Pearson) correlation `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonStatistics {
    pub mean_a: f64,
    pub mean_b: f64,
    pub q_mandel: f64,
    pub sigma: f64,
    pub j_corr: f64,
}

impl PhotonStatistics {
    /// Statistics of a twin-mode beam given directly by `(N, Q_M, σ)`;
    /// `J` follows from `σ = (1 + Q_M)(1 − J)`.
    pub fn twin_mode(mean: f64, q_mandel: f64, sigma: f64) -> Self {
        let j_corr = if 1.0 + q_mandel > 0.0 {
            1.0 - sigma / (1.0 + q_mandel)
        } else {
            1.0
        };
        Self {
            mean_a: mean,
            mean_b: mean,
            q_mandel,
            sigma,
            j_corr,
        }
    }

    /// Mean photon number per mode, averaged over the two modes.
    pub fn mean(&self) -> f64 {
        0.5 * (self.mean_a + self.mean_b)
    }
}

/// Direct summation of the number moments over `|C_{n,m}|²`, normalized by
/// the retained weight `Σ|C|²`.
///
/// `J` is reported as 1 when either mode has vanishing number variance.
pub fn statistics(state: &FockCoefficients) -> Result<PhotonStatistics, StateError> {
    let total = state.total_weight();
    if !(total > 0.0) {
        return Err(StateError::UndefinedStatistics("state has zero norm".into()));
    }
    let (mut sa, mut sb) = (0.0, 0.0);
    for (n, m, p) in state.probabilities() {
        sa += n as f64 * p;
        sb += m as f64 * p;
    }
    let mean_a = sa / total;
    let mean_b = sb / total;
    if mean_a <= 0.0 || mean_b <= 0.0 {
        return Err(StateError::UndefinedStatistics(format!(
            "mean photon numbers must be positive, got ({mean_a}, {mean_b})"
        )));
    }

    let (mut var_a, mut var_b, mut cov, mut var_diff) = (0.0, 0.0, 0.0, 0.0);
    for (n, m, p) in state.probabilities() {
        let da = n as f64 - mean_a;
        let db = m as f64 - mean_b;
        var_a += da * da * p;
        var_b += db * db * p;
        cov += da * db * p;
        var_diff += (db - da) * (db - da) * p;
    }
    var_a /= total;
    var_b /= total;
    cov /= total;
    var_diff /= total;

    let negligible = |var: f64, mean: f64| var <= 1e-14 * (1.0 + mean * mean);
    let j_corr = if negligible(var_a, mean_a) || negligible(var_b, mean_b) {
        1.0
    } else {
        (cov / (var_a.sqrt() * var_b.sqrt())).clamp(-1.0, 1.0)
    };

    Ok(PhotonStatistics {
        mean_a,
        mean_b,
        q_mandel: var_a / mean_a - 1.0,
        sigma: var_diff / (mean_a + mean_b),
        j_corr,
    })
}
