//! Complex permittivity of the metal film.
//!
//! Two sources are supported: a tabulated `(wavelength, n, k)` dispersion
//! table, linearly interpolated in `n` and `k` separately, and an analytic
//! Drude-Lorentz model. Fields evolve as `exp(-iωt)`, so a lossy medium has
//! `Im ε ≥ 0`.

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Read};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in vacuum, nm/s.
const SPEED_OF_LIGHT_NM_PER_S: f64 = 2.997_924_58e17;

/// Converts photon energy in eV to angular frequency in rad/s.
pub const EV_TO_RAD_PER_S: f64 = 1.519_267_447e15;

const BUNDLED_GOLD_CSV: &str = include_str!("../data/gold_johnson_christy.csv");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid dispersion table: {0}")]
    Validation(String),

    #[error("wavelength {wavelength_nm} nm is outside the table range [{min}, {max}] nm")]
    OutOfRange {
        wavelength_nm: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid Drude-Lorentz parameters: {0}")]
    InvalidModel(String),

    #[error("wavelength must be positive and finite, got {0}")]
    InvalidWavelength(f64),
}

/// Complex relative permittivity `ε = re + i·im`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexPermittivity {
    pub re: f64,
    pub im: f64,
}

impl ComplexPermittivity {
    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    /// Lossless dielectric with refractive index `n`.
    pub fn from_index(n: f64) -> Self {
        Self::new(n * n, 0.0)
    }

    /// `ε = (n + ik)²`.
    pub fn from_nk(n: f64, k: f64) -> Self {
        Self::from(Complex64::new(n, k).powi(2))
    }

    pub fn value(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl From<Complex64> for ComplexPermittivity {
    fn from(z: Complex64) -> Self {
        Self::new(z.re, z.im)
    }
}

impl From<ComplexPermittivity> for Complex64 {
    fn from(eps: ComplexPermittivity) -> Self {
        eps.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionEntry {
    pub wavelength_nm: f64,
    pub n: f64,
    pub k: f64,
}

/// Tabulated complex refractive index of a passive medium.
///
/// Wavelengths are strictly increasing, there are at least two rows and every
/// extinction coefficient is non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionTable {
    entries: Vec<DispersionEntry>,
    source_label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispersionFormat {
    Csv,
}

impl DispersionTable {
    /// Validates and sorts the entries.
    pub fn new(
        mut entries: Vec<DispersionEntry>,
        source_label: impl Into<String>,
    ) -> Result<Self, MaterialError> {
        if entries.len() < 2 {
            return Err(MaterialError::Validation(format!(
                "need at least 2 entries, got {}",
                entries.len()
            )));
        }
        for e in &entries {
            if !(e.wavelength_nm.is_finite() && e.n.is_finite() && e.k.is_finite()) {
                return Err(MaterialError::Validation(format!(
                    "non-finite value at {} nm",
                    e.wavelength_nm
                )));
            }
            if e.wavelength_nm <= 0.0 {
                return Err(MaterialError::Validation(format!(
                    "wavelength must be positive, got {}",
                    e.wavelength_nm
                )));
            }
            if e.k < 0.0 {
                return Err(MaterialError::Validation(format!(
                    "negative extinction coefficient k = {} at {} nm (medium must be passive)",
                    e.k, e.wavelength_nm
                )));
            }
        }
        entries.sort_by(|a, b| a.wavelength_nm.total_cmp(&b.wavelength_nm));
        if let Some(w) = entries
            .windows(2)
            .find(|w| w[0].wavelength_nm == w[1].wavelength_nm)
        {
            return Err(MaterialError::Validation(format!(
                "duplicate wavelength {} nm",
                w[0].wavelength_nm
            )));
        }
        Ok(Self {
            entries,
            source_label: source_label.into(),
        })
    }

    /// The gold table shipped with the crate (Johnson & Christy, 300-1090 nm).
    pub fn bundled_gold() -> Self {
        load_dispersion(
            BUNDLED_GOLD_CSV.as_bytes(),
            DispersionFormat::Csv,
            "Au, Johnson & Christy (1972)",
        )
        .expect("bundled gold table is valid")
    }

    pub fn entries(&self) -> &[DispersionEntry] {
        &self.entries
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    /// Tabulated wavelength span `(min, max)` in nm.
    pub fn range(&self) -> (f64, f64) {
        (
            self.entries[0].wavelength_nm,
            self.entries[self.entries.len() - 1].wavelength_nm,
        )
    }

    /// Linearly interpolated `(n, k)` at `wavelength_nm`. No extrapolation.
    pub fn index_at(&self, wavelength_nm: f64) -> Result<(f64, f64), MaterialError> {
        let (min, max) = self.range();
        if !(wavelength_nm >= min && wavelength_nm <= max) {
            return Err(MaterialError::OutOfRange {
                wavelength_nm,
                min,
                max,
            });
        }
        // first entry with wavelength >= query
        let hi = self
            .entries
            .partition_point(|e| e.wavelength_nm < wavelength_nm);
        let upper = self.entries[hi];
        if upper.wavelength_nm == wavelength_nm {
            return Ok((upper.n, upper.k));
        }
        let lower = self.entries[hi - 1];
        let t = (wavelength_nm - lower.wavelength_nm) / (upper.wavelength_nm - lower.wavelength_nm);
        Ok((
            lower.n + t * (upper.n - lower.n),
            lower.k + t * (upper.k - lower.k),
        ))
    }

    /// `ε = (n + ik)²` with `n`, `k` interpolated at `wavelength_nm`.
    pub fn permittivity_at(&self, wavelength_nm: f64) -> Result<ComplexPermittivity, MaterialError> {
        let (n, k) = self.index_at(wavelength_nm)?;
        Ok(ComplexPermittivity::from_nk(n, k))
    }
}

/// Parses a dispersion table from `source`.
///
/// CSV rows are `wavelength_nm,n,k`. Blank lines and lines starting with `#`
/// are skipped; the first data-bearing line is treated as a header when its
/// first field is not numeric.
pub fn load_dispersion<R: Read>(
    source: R,
    format: DispersionFormat,
    source_label: impl Into<String>,
) -> Result<DispersionTable, MaterialError> {
    match format {
        DispersionFormat::Csv => parse_csv(source, source_label.into()),
    }
}

fn parse_csv<R: Read>(source: R, label: String) -> Result<DispersionTable, MaterialError> {
    let reader = BufReader::new(source);
    let mut entries = Vec::new();
    let mut seen_content = false;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| MaterialError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let trimmed = line.trim().trim_start_matches('\u{feff}');
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();

        if !seen_content {
            seen_content = true;
            if fields[0].parse::<f64>().is_err() {
                continue;
            }
        }

        if fields.len() != 3 {
            return Err(MaterialError::Parse {
                line: line_no,
                message: format!("expected 3 columns (wavelength_nm,n,k), found {}", fields.len()),
            });
        }
        let mut values = [0.0; 3];
        for (slot, field) in values.iter_mut().zip(&fields) {
            *slot = field.parse::<f64>().map_err(|_| MaterialError::Parse {
                line: line_no,
                message: format!("non-numeric value {field:?}"),
            })?;
        }
        entries.push(DispersionEntry {
            wavelength_nm: values[0],
            n: values[1],
            k: values[2],
        });
    }

    DispersionTable::new(entries, label)
}

/// One Lorentz oscillator term `f ω₀² / (ω₀² − ω² − iΓω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzOscillator {
    pub strength: f64,
    /// rad/s
    pub resonance: f64,
    /// rad/s
    pub width: f64,
}

/// Drude free-electron term plus Lorentz oscillators, all rates in rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrudeLorentzParams {
    pub plasma_frequency: f64,
    pub damping_rate: f64,
    pub oscillators: Vec<LorentzOscillator>,
    pub epsilon_infinity: f64,
}

impl DrudeLorentzParams {
    pub fn validate(&self) -> Result<(), MaterialError> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.plasma_frequency) {
            return Err(MaterialError::InvalidModel(format!(
                "plasma frequency must be positive, got {}",
                self.plasma_frequency
            )));
        }
        if !positive(self.damping_rate) {
            return Err(MaterialError::InvalidModel(format!(
                "damping rate must be positive, got {}",
                self.damping_rate
            )));
        }
        for (j, osc) in self.oscillators.iter().enumerate() {
            if !(positive(osc.resonance) && positive(osc.width)) || !osc.strength.is_finite() {
                return Err(MaterialError::InvalidModel(format!(
                    "oscillator {j}: resonance and width must be positive"
                )));
            }
        }
        Ok(())
    }

    /// Lorentz-Drude gold from Rakić et al., Appl. Opt. 37, 5271 (1998).
    ///
    /// The published form is `1 − f₀ωp²/(ω(ω + iΓ₀)) + Σ fⱼωp²/(ωⱼ² − ω² − iωΓⱼ)`;
    /// here it is rewritten with the Drude plasma frequency `√f₀·ωp` and
    /// oscillator strengths `fⱼωp²/ωⱼ²`.
    pub fn gold_rakic() -> Self {
        const OMEGA_P_EV: f64 = 9.03;
        const F0: f64 = 0.760;
        const GAMMA0_EV: f64 = 0.053;
        // (f_j, Γ_j eV, ω_j eV)
        const TERMS: [(f64, f64, f64); 5] = [
            (0.024, 0.241, 0.415),
            (0.010, 0.345, 0.830),
            (0.071, 0.870, 2.969),
            (0.601, 2.494, 4.304),
            (4.384, 2.214, 13.32),
        ];
        let wp2 = OMEGA_P_EV * OMEGA_P_EV;
        Self {
            plasma_frequency: F0.sqrt() * OMEGA_P_EV * EV_TO_RAD_PER_S,
            damping_rate: GAMMA0_EV * EV_TO_RAD_PER_S,
            oscillators: TERMS
                .iter()
                .map(|&(f, gamma, w)| LorentzOscillator {
                    strength: f * wp2 / (w * w),
                    resonance: w * EV_TO_RAD_PER_S,
                    width: gamma * EV_TO_RAD_PER_S,
                })
                .collect(),
            epsilon_infinity: 1.0,
        }
    }
}

/// Angular frequency (rad/s) of vacuum wavelength `wavelength_nm`.
pub fn angular_frequency(wavelength_nm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT_NM_PER_S / wavelength_nm
}

/// `ε(ω) = ε∞ − ωp²/(ω² + iγω) + Σ fⱼωⱼ²/(ωⱼ² − ω² − iΓⱼω)`, `ω = 2πc/λ`.
pub fn drude_lorentz_permittivity(
    params: &DrudeLorentzParams,
    wavelength_nm: f64,
) -> Result<ComplexPermittivity, MaterialError> {
    if !(wavelength_nm.is_finite() && wavelength_nm > 0.0) {
        return Err(MaterialError::InvalidWavelength(wavelength_nm));
    }
    Ok(drude_lorentz_at_frequency(params, angular_frequency(wavelength_nm)))
}

pub(crate) fn drude_lorentz_at_frequency(params: &DrudeLorentzParams, omega: f64) -> ComplexPermittivity {
    let i = Complex64::i();
    let wp2 = params.plasma_frequency * params.plasma_frequency;
    let mut eps = Complex64::new(params.epsilon_infinity, 0.0)
        - wp2 / (omega * omega + i * params.damping_rate * omega);
    for osc in &params.oscillators {
        let w02 = osc.resonance * osc.resonance;
        eps += osc.strength * w02 / (w02 - omega * omega - i * osc.width * omega);
    }
    eps.into()
}

/// Source of the metal film permittivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MetalModel {
    Table(DispersionTable),
    DrudeLorentz(DrudeLorentzParams),
    /// Wavelength-independent permittivity, mostly for tests and idealized stacks.
    Constant(ComplexPermittivity),
}

impl MetalModel {
    pub fn permittivity(&self, wavelength_nm: f64) -> Result<ComplexPermittivity, MaterialError> {
        match self {
            MetalModel::Table(table) => table.permittivity_at(wavelength_nm),
            MetalModel::DrudeLorentz(params) => drude_lorentz_permittivity(params, wavelength_nm),
            MetalModel::Constant(eps) => Ok(*eps),
        }
    }

    pub fn label(&self) -> String {
        match self {
            MetalModel::Table(table) => table.source_label().to_owned(),
            MetalModel::DrudeLorentz(_) => "Drude-Lorentz model".to_owned(),
            MetalModel::Constant(eps) => format!("constant ε = {} + {}i", eps.re, eps.im),
        }
    }
}

impl Default for MetalModel {
    fn default() -> Self {
        MetalModel::Table(DispersionTable::bundled_gold())
    }
}
