//! TM reflection of the prism / metal film / analyte (Kretschmann) stack.
//!
//! The tangential wavevector `k_x = (2π/λ)·n_prism·sin θ` is conserved across
//! layers and each layer's normal component is `k_z = √(ε k₀² − k_x²)` on the
//! branch with `Im k_z ≥ 0` (ties broken towards `Re k_z ≥ 0`). Interface
//! coefficients use the TM admittances `k_z/ε`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::materials::{ComplexPermittivity, MaterialError, MetalModel};
use crate::optimize::{self, ExtremumError, DEFAULT_SCAN_POINTS};

/// Default central-difference step in refractive-index units.
pub const DEFAULT_INDEX_STEP: f64 = 1e-6;

/// Gap kept below the critical analyte index `n_p sin θ` by the inflection
/// search. The reflectance has a square-root kink there and `|∂R/∂n|`
/// diverges, so the window is cut off before it.
pub const CRITICAL_INDEX_MARGIN: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FresnelError {
    #[error("invalid stack: {0}")]
    InvalidStack(String),

    #[error("incidence angle must lie in (0°, 90°), got {0}°")]
    InvalidAngle(f64),

    #[error("singular TM coefficient at the interface between layers {upper} and {lower}")]
    Singular { upper: usize, lower: usize },

    #[error("transfer matrix needs at least 2 layers, got {0}")]
    TooFewLayers(usize),

    #[error("no interior reflectance minimum: {0}")]
    NoInteriorMinimum(ExtremumError),

    #[error("no interior sensitivity maximum: {0}")]
    NoInteriorMaximum(ExtremumError),

    #[error(transparent)]
    Material(#[from] MaterialError),
}

/// Prism (layer 1), metal film (layer 2) and analyte (layer 3) at a fixed
/// vacuum wavelength.
#[derive(Debug, Clone)]
pub struct KretschmannStack {
    n_prism: f64,
    metal: Arc<MetalModel>,
    metal_eps: ComplexPermittivity,
    thickness_nm: f64,
    n_analyte: f64,
    wavelength_nm: f64,
}

impl KretschmannStack {
    pub fn new(
        n_prism: f64,
        metal: MetalModel,
        thickness_nm: f64,
        n_analyte: f64,
        wavelength_nm: f64,
    ) -> Result<Self, FresnelError> {
        if !(n_prism.is_finite() && n_prism > 1.0) {
            return Err(FresnelError::InvalidStack(format!(
                "prism index must exceed 1, got {n_prism}"
            )));
        }
        if !(thickness_nm.is_finite() && thickness_nm >= 0.0) {
            return Err(FresnelError::InvalidStack(format!(
                "film thickness must be non-negative, got {thickness_nm} nm"
            )));
        }
        if !(wavelength_nm.is_finite() && wavelength_nm > 0.0) {
            return Err(FresnelError::InvalidStack(format!(
                "wavelength must be positive, got {wavelength_nm} nm"
            )));
        }
        let metal_eps = metal.permittivity(wavelength_nm)?;
        let stack = Self {
            n_prism,
            metal: Arc::new(metal),
            metal_eps,
            thickness_nm,
            n_analyte: 1.0,
            wavelength_nm,
        };
        stack.with_analyte(n_analyte)
    }

    /// The operating point used throughout: BK7-like prism `n = 1.5107`,
    /// 810 nm, 50 nm of bundled gold, water-like analyte.
    pub fn reference(n_analyte: f64) -> Result<Self, FresnelError> {
        Self::new(1.5107, MetalModel::default(), 50.0, n_analyte, 810.0)
    }

    /// Same stack with a different analyte index.
    pub fn with_analyte(&self, n_analyte: f64) -> Result<Self, FresnelError> {
        if !(n_analyte.is_finite() && n_analyte > 0.0 && n_analyte < self.n_prism) {
            return Err(FresnelError::InvalidStack(format!(
                "analyte index {n_analyte} must be positive and below the prism index {}",
                self.n_prism
            )));
        }
        Ok(Self {
            n_analyte,
            ..self.clone()
        })
    }

    /// Same stack with a different film thickness; zero is allowed.
    pub fn with_thickness(&self, thickness_nm: f64) -> Result<Self, FresnelError> {
        if !(thickness_nm.is_finite() && thickness_nm >= 0.0) {
            return Err(FresnelError::InvalidStack(format!(
                "film thickness must be non-negative, got {thickness_nm} nm"
            )));
        }
        Ok(Self {
            thickness_nm,
            ..self.clone()
        })
    }

    pub fn n_prism(&self) -> f64 {
        self.n_prism
    }

    pub fn n_analyte(&self) -> f64 {
        self.n_analyte
    }

    pub fn thickness_nm(&self) -> f64 {
        self.thickness_nm
    }

    pub fn wavelength_nm(&self) -> f64 {
        self.wavelength_nm
    }

    pub fn metal(&self) -> &MetalModel {
        &self.metal
    }

    pub fn metal_permittivity(&self) -> ComplexPermittivity {
        self.metal_eps
    }

    /// Layer permittivities `[ε₁, ε₂, ε₃]`.
    pub fn permittivities(&self) -> [ComplexPermittivity; 3] {
        [
            ComplexPermittivity::from_index(self.n_prism),
            self.metal_eps,
            ComplexPermittivity::from_index(self.n_analyte),
        ]
    }
}

/// Angle of incidence inside the prism, degrees in the open interval (0, 90).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidenceGeometry {
    theta_deg: f64,
}

impl IncidenceGeometry {
    pub fn from_degrees(theta_deg: f64) -> Result<Self, FresnelError> {
        if theta_deg > 0.0 && theta_deg < 90.0 {
            Ok(Self { theta_deg })
        } else {
            Err(FresnelError::InvalidAngle(theta_deg))
        }
    }

    pub fn degrees(self) -> f64 {
        self.theta_deg
    }

    pub fn radians(self) -> f64 {
        self.theta_deg.to_radians()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionResult {
    pub r_sp: Complex64,
}

impl ReflectionResult {
    pub fn amplitude(&self) -> f64 {
        self.r_sp.norm()
    }

    /// Phase in (−π, π].
    pub fn phase(&self) -> f64 {
        self.r_sp.arg()
    }

    pub fn reflectance(&self) -> f64 {
        self.r_sp.norm_sqr()
    }
}

fn vacuum_wavenumber(wavelength_nm: f64) -> f64 {
    2.0 * PI / wavelength_nm
}

/// `k_x = (2π/λ)·n·sin θ` in rad/nm for incidence from a medium of index `n`.
pub fn tangential_wavevector_raw(n_incident: f64, theta_deg: f64, wavelength_nm: f64) -> f64 {
    vacuum_wavenumber(wavelength_nm) * n_incident * theta_deg.to_radians().sin()
}

pub fn tangential_wavevector(stack: &KretschmannStack, geom: IncidenceGeometry) -> f64 {
    tangential_wavevector_raw(stack.n_prism, geom.degrees(), stack.wavelength_nm)
}

/// Normal wavevector component `√(ε k₀² − k_x²)` with `Im ≥ 0`, and
/// `Re ≥ 0` when the imaginary part vanishes.
pub fn wavevector_z(epsilon: ComplexPermittivity, k_x: f64, wavelength_nm: f64) -> Complex64 {
    let k0 = vacuum_wavenumber(wavelength_nm);
    let kz = (epsilon.value() * k0 * k0 - k_x * k_x).sqrt();
    // principal sqrt has Re ≥ 0; flip into the upper half plane
    if kz.im < 0.0 || (kz.im == 0.0 && kz.re < 0.0) {
        -kz
    } else {
        kz
    }
}

/// TM Fresnel coefficient `[k_lz/ε_l − k_mz/ε_m] / [k_lz/ε_l + k_mz/ε_m]`.
pub fn interface_reflection(
    eps_l: ComplexPermittivity,
    eps_m: ComplexPermittivity,
    k_lz: Complex64,
    k_mz: Complex64,
) -> Result<Complex64, FresnelError> {
    tm_coefficient(eps_l.value(), eps_m.value(), k_lz, k_mz).ok_or(FresnelError::Singular {
        upper: 0,
        lower: 1,
    })
}

fn tm_coefficient(eps_l: Complex64, eps_m: Complex64, k_lz: Complex64, k_mz: Complex64) -> Option<Complex64> {
    if eps_l == Complex64::new(0.0, 0.0) || eps_m == Complex64::new(0.0, 0.0) {
        return None;
    }
    let ql = k_lz / eps_l;
    let qm = k_mz / eps_m;
    let den = ql + qm;
    if den.norm() == 0.0 || !den.is_finite() {
        return None;
    }
    Some((ql - qm) / den)
}

/// Airy sum for the three-layer stack at a given analyte index.
fn three_layer_reflection(
    eps: [Complex64; 3],
    thickness_nm: f64,
    k_x: f64,
    wavelength_nm: f64,
) -> Result<Complex64, FresnelError> {
    let kz: Vec<Complex64> = eps
        .iter()
        .map(|&e| wavevector_z(e.into(), k_x, wavelength_nm))
        .collect();
    let r12 = tm_coefficient(eps[0], eps[1], kz[0], kz[1]).ok_or(FresnelError::Singular { upper: 1, lower: 2 })?;
    let r23 = tm_coefficient(eps[1], eps[2], kz[1], kz[2]).ok_or(FresnelError::Singular { upper: 2, lower: 3 })?;
    let phase = (Complex64::i() * 2.0 * kz[1] * thickness_nm).exp();
    let den = phase * r23 * r12 + 1.0;
    if den.norm() == 0.0 {
        return Err(FresnelError::Singular { upper: 1, lower: 3 });
    }
    Ok((phase * r23 + r12) / den)
}

/// `r_sp = (e^{2ik₂d} r₂₃ + r₁₂) / (e^{2ik₂d} r₂₃ r₁₂ + 1)`.
pub fn reflection_coefficient(
    stack: &KretschmannStack,
    geom: IncidenceGeometry,
) -> Result<ReflectionResult, FresnelError> {
    reflection_at_index(stack, geom, stack.n_analyte)
}

/// Reflection with the analyte index overridden, without re-validating the
/// stack; used by finite differences that straddle the configured index.
pub(crate) fn reflection_at_index(
    stack: &KretschmannStack,
    geom: IncidenceGeometry,
    n_analyte: f64,
) -> Result<ReflectionResult, FresnelError> {
    let eps = [
        Complex64::new(stack.n_prism * stack.n_prism, 0.0),
        stack.metal_eps.value(),
        Complex64::new(n_analyte * n_analyte, 0.0),
    ];
    let k_x = tangential_wavevector(stack, geom);
    let r_sp = three_layer_reflection(eps, stack.thickness_nm, k_x, stack.wavelength_nm)?;
    Ok(ReflectionResult { r_sp })
}

pub(crate) fn reflectance_at_index(
    stack: &KretschmannStack,
    geom: IncidenceGeometry,
    n_analyte: f64,
) -> Result<f64, FresnelError> {
    Ok(reflection_at_index(stack, geom, n_analyte)?.reflectance())
}

/// One planar layer for the transfer-matrix oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub permittivity: ComplexPermittivity,
    /// Ignored for the two semi-infinite bounding media.
    pub thickness_nm: f64,
}

impl Layer {
    pub fn new(permittivity: ComplexPermittivity, thickness_nm: f64) -> Self {
        Self {
            permittivity,
            thickness_nm,
        }
    }
}

/// TM reflection amplitude of an N-layer stack from 2×2 characteristic
/// matrices of the tangential fields `(H_y, E_x)`.
pub fn transfer_matrix_reflection(
    layers: &[Layer],
    k_x: f64,
    wavelength_nm: f64,
) -> Result<Complex64, FresnelError> {
    if layers.len() < 2 {
        return Err(FresnelError::TooFewLayers(layers.len()));
    }
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let admittance = |layer: &Layer| {
        let kz = wavevector_z(layer.permittivity, k_x, wavelength_nm);
        (kz, kz / layer.permittivity.value())
    };

    let mut m = [[one, zero], [zero, one]];
    for (idx, layer) in layers[1..layers.len() - 1].iter().enumerate() {
        if layer.permittivity.value() == zero {
            return Err(FresnelError::Singular {
                upper: idx + 1,
                lower: idx + 2,
            });
        }
        let (kz, q) = admittance(layer);
        let beta = kz * layer.thickness_nm;
        let (c, s) = (beta.cos(), beta.sin());
        let layer_m = [[c, -i * s / q], [-i * q * s, c]];
        // q → 0 with β → 0 has a finite limit; only the thick-layer case is singular
        if !(layer_m[0][1].is_finite()) {
            if layer.thickness_nm == 0.0 {
                continue;
            }
            return Err(FresnelError::Singular {
                upper: idx + 1,
                lower: idx + 2,
            });
        }
        m = [
            [
                m[0][0] * layer_m[0][0] + m[0][1] * layer_m[1][0],
                m[0][0] * layer_m[0][1] + m[0][1] * layer_m[1][1],
            ],
            [
                m[1][0] * layer_m[0][0] + m[1][1] * layer_m[1][0],
                m[1][0] * layer_m[0][1] + m[1][1] * layer_m[1][1],
            ],
        ];
    }

    let first = &layers[0];
    let last = &layers[layers.len() - 1];
    if first.permittivity.value() == zero || last.permittivity.value() == zero {
        return Err(FresnelError::Singular {
            upper: 1,
            lower: layers.len(),
        });
    }
    let (_, q_in) = admittance(first);
    let (_, q_out) = admittance(last);
    let b = m[0][0] + m[0][1] * q_out;
    let c = m[1][0] + m[1][1] * q_out;
    let den = q_in * b + c;
    if den.norm() == 0.0 || !den.is_finite() {
        return Err(FresnelError::Singular {
            upper: 1,
            lower: layers.len(),
        });
    }
    Ok((q_in * b - c) / den)
}

/// Incidence angle (degrees) of the reflectance minimum inside `theta_range`.
pub fn resonance_angle(
    stack: &KretschmannStack,
    theta_range: (f64, f64),
    tol_deg: f64,
) -> Result<f64, FresnelError> {
    let (lo, hi) = theta_range;
    IncidenceGeometry::from_degrees(lo)?;
    IncidenceGeometry::from_degrees(hi)?;
    let reflectance = |theta: f64| {
        IncidenceGeometry::from_degrees(theta)
            .and_then(|g| reflection_coefficient(stack, g))
            .map(|r| r.reflectance())
            .unwrap_or(f64::NAN)
    };
    optimize::scan_minimize(reflectance, lo, hi, DEFAULT_SCAN_POINTS, tol_deg)
        .map_err(FresnelError::NoInteriorMinimum)
}

/// Central difference `(R(n+h) − R(n−h)) / 2h` of the reflectance with
/// respect to the analyte index, in 1/RIU.
pub fn sensitivity(
    stack: &KretschmannStack,
    geom: IncidenceGeometry,
    n: f64,
    h: f64,
) -> Result<f64, FresnelError> {
    let up = reflectance_at_index(stack, geom, n + h)?;
    let down = reflectance_at_index(stack, geom, n - h)?;
    Ok((up - down) / (2.0 * h))
}

/// Analyte index below which layer 3 is totally internally reflecting.
pub fn critical_index(stack: &KretschmannStack, geom: IncidenceGeometry) -> f64 {
    stack.n_prism() * geom.radians().sin()
}

/// Analyte index in `n_range` maximizing `|∂R/∂n|` at fixed incidence.
///
/// Only the attenuated-total-reflection regime is searched: the upper end of
/// `n_range` is lowered to `critical_index − CRITICAL_INDEX_MARGIN`.
pub fn inflection_index(
    stack: &KretschmannStack,
    geom: IncidenceGeometry,
    n_range: (f64, f64),
    tol: f64,
) -> Result<f64, FresnelError> {
    inflection_index_with_step(stack, geom, n_range, tol, DEFAULT_INDEX_STEP)
}

pub fn inflection_index_with_step(
    stack: &KretschmannStack,
    geom: IncidenceGeometry,
    n_range: (f64, f64),
    tol: f64,
    h: f64,
) -> Result<f64, FresnelError> {
    let hi = n_range.1.min(critical_index(stack, geom) - CRITICAL_INDEX_MARGIN);
    let slope = |n: f64| sensitivity(stack, geom, n, h).map(f64::abs).unwrap_or(f64::NAN);
    optimize::scan_maximize(slope, n_range.0, hi, DEFAULT_SCAN_POINTS, tol)
        .map_err(FresnelError::NoInteriorMaximum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gold_stack(n_analyte: f64) -> KretschmannStack {
        KretschmannStack::reference(n_analyte).unwrap()
    }

    fn deg(theta: f64) -> IncidenceGeometry {
        IncidenceGeometry::from_degrees(theta).unwrap()
    }

    #[test]
    fn tangential_wavevector_limits() {
        assert_eq!(tangential_wavevector_raw(1.5107, 0.0, 810.0), 0.0);
        let grazing = tangential_wavevector_raw(1.5107, 90.0, 810.0);
        assert_relative_eq!(grazing, 2.0 * PI / 810.0 * 1.5107, max_relative = 1e-15);
        // (2π/810)·1.5107·sin 73°
        let kx = tangential_wavevector(&gold_stack(1.33), deg(73.0));
        assert_relative_eq!(kx, 0.011_206_484_488_508_866, max_relative = 1e-12);
    }

    #[test]
    fn incidence_layer_kz_is_cosine_form() {
        let stack = gold_stack(1.33);
        let g = deg(73.0);
        let kx = tangential_wavevector(&stack, g);
        let kz = wavevector_z(ComplexPermittivity::from_index(1.5107), kx, 810.0);
        let expected = 2.0 * PI / 810.0 * 1.5107 * g.radians().cos();
        assert_relative_eq!(kz.re, expected, max_relative = 1e-12);
        assert_eq!(kz.im, 0.0);
    }

    #[test]
    fn evanescent_branch() {
        let kx = tangential_wavevector_raw(1.5107, 73.0, 810.0);
        let kz = wavevector_z(ComplexPermittivity::from_index(1.333), kx, 810.0);
        assert!(kz.re.abs() < 1e-15);
        assert!(kz.im > 0.0);
    }

    #[test]
    fn gold_film_kz_decays() {
        let stack = gold_stack(1.33);
        let kx = tangential_wavevector(&stack, deg(73.0));
        let kz = wavevector_z(stack.metal_permittivity(), kx, 810.0);
        assert!(kz.im > 0.0);
        // ε ≈ −24.88 + 1.56i: nearly pure decay, |k_z| ≈ k₀·√(|ε| + n²sin²θ)
        assert!(kz.im > 0.04 && kz.im < 0.05, "{kz}");
    }

    #[test]
    fn interface_identities() {
        let e = ComplexPermittivity::new(2.0, 0.1);
        let k = Complex64::new(0.01, 0.002);
        assert_eq!(interface_reflection(e, e, k, k).unwrap(), Complex64::new(0.0, 0.0));

        let stack = gold_stack(1.33);
        let kx = tangential_wavevector(&stack, deg(73.0));
        let [e1, e2, _] = stack.permittivities();
        let k1 = wavevector_z(e1, kx, 810.0);
        let k2 = wavevector_z(e2, kx, 810.0);
        let r12 = interface_reflection(e1, e2, k1, k2).unwrap();
        let r21 = interface_reflection(e2, e1, k2, k1).unwrap();
        assert_relative_eq!((r12 + r21).norm(), 0.0, epsilon = 1e-15);
        assert!(r12.norm() < 1.0);
    }

    #[test]
    fn singular_interface() {
        let e = ComplexPermittivity::new(0.0, 0.0);
        let k = Complex64::new(0.01, 0.0);
        assert!(matches!(
            interface_reflection(e, ComplexPermittivity::new(1.0, 0.0), k, k),
            Err(FresnelError::Singular { .. })
        ));
    }

    #[test]
    fn zero_thickness_reduces_to_single_interface() {
        let stack = gold_stack(1.36).with_thickness(0.0).unwrap();
        let g = deg(60.0);
        let r = reflection_coefficient(&stack, g).unwrap().r_sp;
        let kx = tangential_wavevector(&stack, g);
        let [e1, _, e3] = stack.permittivities();
        let r13 = interface_reflection(e1, e3, wavevector_z(e1, kx, 810.0), wavevector_z(e3, kx, 810.0)).unwrap();
        assert!((r - r13).norm() < 1e-12);
    }

    #[test]
    fn film_matching_prism_collapses_to_r23() {
        let prism = ComplexPermittivity::from_index(1.5107);
        let stack =
            KretschmannStack::new(1.5107, MetalModel::Constant(prism), 50.0, 1.333, 810.0).unwrap();
        for theta in [30.0, 50.0, 73.0] {
            let g = deg(theta);
            let r = reflection_coefficient(&stack, g).unwrap();
            let kx = tangential_wavevector(&stack, g);
            let e3 = ComplexPermittivity::from_index(1.333);
            let r23 =
                interface_reflection(prism, e3, wavevector_z(prism, kx, 810.0), wavevector_z(e3, kx, 810.0)).unwrap();
            assert_relative_eq!(r.amplitude(), r23.norm(), max_relative = 1e-12);
        }
    }

    #[test]
    fn transfer_matrix_matches_airy_sum() {
        let stack = gold_stack(1.38);
        let [e1, e2, e3] = stack.permittivities();
        let layers = [Layer::new(e1, 0.0), Layer::new(e2, 50.0), Layer::new(e3, 0.0)];
        for i in 1..200 {
            let theta = 89.0 * i as f64 / 200.0;
            let g = deg(theta);
            let kx = tangential_wavevector(&stack, g);
            let tmm = transfer_matrix_reflection(&layers, kx, 810.0).unwrap();
            let airy = reflection_coefficient(&stack, g).unwrap().r_sp;
            assert!((tmm - airy).norm() < 1e-10, "θ = {theta}: {tmm} vs {airy}");
        }
    }

    #[test]
    fn transfer_matrix_degenerate_cases() {
        let stack = gold_stack(1.38);
        let [e1, e2, e3] = stack.permittivities();
        let kx = tangential_wavevector(&stack, deg(72.0));
        let two = transfer_matrix_reflection(&[Layer::new(e1, 0.0), Layer::new(e3, 0.0)], kx, 810.0).unwrap();
        let direct = interface_reflection(e1, e3, wavevector_z(e1, kx, 810.0), wavevector_z(e3, kx, 810.0)).unwrap();
        assert!((two - direct).norm() < 1e-14);

        let three = [Layer::new(e1, 0.0), Layer::new(e2, 50.0), Layer::new(e3, 0.0)];
        let dummy = ComplexPermittivity::new(3.7, 0.2);
        let four = [
            Layer::new(e1, 0.0),
            Layer::new(e2, 50.0),
            Layer::new(dummy, 0.0),
            Layer::new(e3, 0.0),
        ];
        let a = transfer_matrix_reflection(&three, kx, 810.0).unwrap();
        let b = transfer_matrix_reflection(&four, kx, 810.0).unwrap();
        assert!((a - b).norm() < 1e-13);
        assert!(matches!(
            transfer_matrix_reflection(&three[..1], kx, 810.0),
            Err(FresnelError::TooFewLayers(1))
        ));
    }

    #[test]
    fn lossless_total_internal_reflection_is_unity() {
        let stack = KretschmannStack::new(
            1.5107,
            MetalModel::Constant(ComplexPermittivity::new(-24.0, 0.0)),
            50.0,
            1.333,
            810.0,
        )
        .unwrap();
        for theta in [62.0, 70.0, 73.0, 80.0] {
            let r = reflection_coefficient(&stack, deg(theta)).unwrap();
            assert!((r.reflectance() - 1.0).abs() < 1e-10, "θ = {theta}: {}", r.reflectance());
        }
    }

    #[test]
    fn resonance_shifts_to_larger_angle() {
        let a = resonance_angle(&gold_stack(1.39), (65.5, 83.5), 1e-6).unwrap();
        let b = resonance_angle(&gold_stack(1.395), (65.5, 83.5), 1e-6).unwrap();
        assert!(a > 65.5 && a < 83.5);
        assert!(b > a, "{b} <= {a}");
    }

    #[test]
    fn resonance_outside_window_is_error() {
        let err = resonance_angle(&gold_stack(1.39), (40.0, 60.0), 1e-6).unwrap_err();
        assert!(matches!(err, FresnelError::NoInteriorMinimum(_)));
    }

    #[test]
    fn sensitivity_properties() {
        let stack = gold_stack(1.38);
        let g = deg(73.0);
        let n_min = optimize::scan_minimize(
            |n| reflectance_at_index(&stack, g, n).unwrap(),
            1.333,
            1.4422,
            2001,
            1e-9,
        )
        .unwrap();
        let h = 1e-4;
        let at_min = sensitivity(&stack, g, n_min, h).unwrap();
        let flank = sensitivity(&stack, g, 1.37, h).unwrap();
        assert!(flank < 0.0);
        // the extremum is located to 1e-9 so the residual slope is ~curvature·1e-9
        assert!(at_min.abs() < 1e-3 * flank.abs(), "{at_min} vs {flank}");

        // halving h changes the derivative by O(h²): ratio of successive changes ≈ 4
        let s = |h: f64| sensitivity(&stack, g, 1.375, h).unwrap();
        let d1 = s(4e-3) - s(2e-3);
        let d2 = s(2e-3) - s(1e-3);
        assert_relative_eq!(d1 / d2, 4.0, max_relative = 0.05);
    }

    #[test]
    fn inflection_is_on_steepest_flank() {
        let stack = gold_stack(1.38);
        let g = deg(73.0);
        let n_inf = inflection_index(&stack, g, (1.333, 1.4422), 1e-7).unwrap();
        let n_min = optimize::scan_minimize(
            |n| reflectance_at_index(&stack, g, n).unwrap(),
            1.333,
            1.4422,
            2001,
            1e-9,
        )
        .unwrap();
        // with the bundled gold data the rising flank is the steeper one
        assert!(n_inf > n_min && n_inf - n_min < 0.01, "{n_inf} vs {n_min}");
        let s_inf = sensitivity(&stack, g, n_inf, 1e-6).unwrap();
        assert!(s_inf > 100.0);
        for n in [1.34, 1.36, 1.38, n_min, 1.40, 1.42] {
            assert!(sensitivity(&stack, g, n, 1e-6).unwrap().abs() < s_inf);
        }
    }

    #[test]
    fn inflection_search_stops_before_critical_index() {
        // at 70° the critical index lies inside the window and |∂R/∂n| blows up there
        let stack = gold_stack(1.38);
        let g = deg(70.0);
        let nc = critical_index(&stack, g);
        assert!(nc > 1.333 && nc < 1.4422);
        let n_inf = inflection_index(&stack, g, (1.333, 1.4422), 1e-7).unwrap();
        assert!((n_inf - 1.3687).abs() < 1e-3, "{n_inf}");
        assert!(matches!(
            inflection_index(&stack, g, (1.43, 1.4422), 1e-7),
            Err(FresnelError::NoInteriorMaximum(_))
        ));
    }

    #[test]
    fn planted_inflection() {
        // smooth step with steepest point at 1.38
        let f = |n: f64| (200.0 * (n - 1.38)).tanh();
        let slope = |n: f64| ((f(n + 1e-6) - f(n - 1e-6)) / 2e-6).abs();
        let n = optimize::scan_maximize(slope, 1.333, 1.4422, 2001, 1e-7).unwrap();
        assert!((n - 1.38).abs() < 1e-6);
    }

    #[test]
    fn stack_validation() {
        assert!(KretschmannStack::reference(1.6).is_err());
        assert!(KretschmannStack::new(0.9, MetalModel::default(), 50.0, 0.5, 810.0).is_err());
        assert!(KretschmannStack::new(1.5, MetalModel::default(), -1.0, 1.3, 810.0).is_err());
        // outside the bundled table
        assert!(matches!(
            KretschmannStack::new(1.5, MetalModel::default(), 50.0, 1.3, 2000.0),
            Err(FresnelError::Material(_))
        ));
        assert!(IncidenceGeometry::from_degrees(0.0).is_err());
        assert!(IncidenceGeometry::from_degrees(90.0).is_err());
    }
}
