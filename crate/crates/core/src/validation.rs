//! Cross-checks between independent computational routes.
//!
//! - `moments`: closed-form `⟨M⟩`, `⟨ΔM⟩` against the binomial-thinning oracle.
//! - `ratio`: closed-form enhancement ratio against the oracle's noise ratio.
//! - `fresnel-tmm`: Airy three-layer sum against the transfer-matrix recursion.
//! - `fresnel-thin-limit`: zero-thickness film against the bare interface.

use crate::fock_oracle;
use crate::fresnel::{self, IncidenceGeometry, KretschmannStack, Layer};
use crate::materials::{ComplexPermittivity, DrudeLorentzParams, MetalModel};
use crate::metrology::{self, ChannelEfficiencies, MetrologyError};
use crate::quantum_states::{statistics, Cutoff, FockCoefficients, StateFamily};

/// Relative tolerance for states with an infinite photon-number support.
pub const MOMENT_TOL_TRUNCATED: f64 = 1e-8;
/// Relative tolerance for twin Fock and NOON states.
pub const MOMENT_TOL_FINITE: f64 = 1e-12;
pub const TMM_TOL: f64 = 1e-10;
pub const THIN_LIMIT_TOL: f64 = 1e-12;
pub const RATIO_TOL: f64 = 1e-8;

/// Denominator offset applied by the negative-control fault.
pub const RATIO_FAULT_OFFSET: f64 = 1e-3;

pub const REFLECTANCE_GRID: [f64; 5] = [0.05, 0.3, 0.5, 0.7, 0.95];
pub const EFFICIENCY_GRID: [(f64, f64); 3] = [(1.0, 1.0), (0.8, 0.8), (0.9, 0.6)];

/// `(family, mean photons per mode)` points covered by the moment check.
pub const STATE_GRID: [(StateFamily, f64); 13] = [
    (StateFamily::Coherent, 0.5),
    (StateFamily::Coherent, 1.0),
    (StateFamily::Coherent, 2.0),
    (StateFamily::TwinFock, 1.0),
    (StateFamily::TwinFock, 2.0),
    (StateFamily::TwinFock, 3.0),
    (StateFamily::Tmsv, 0.5),
    (StateFamily::Tmsv, 1.0),
    (StateFamily::Tmsv, 2.0),
    (StateFamily::Noon, 1.0),
    (StateFamily::Noon, 2.0),
    (StateFamily::SqueezedProduct, 0.5),
    (StateFamily::SqueezedProduct, 1.0),
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ValidationOptions {
    /// Perturb the closed-form ratio denominator by [`RATIO_FAULT_OFFSET`].
    pub inject_ratio_fault: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub points: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Errors raised while evaluating a point; any entry fails the check.
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckReport>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Accumulates the worst scaled error of a check.
struct Tracker {
    name: &'static str,
    tolerance: f64,
    points: usize,
    worst_ratio: f64,
    max_error: f64,
    errors: Vec<String>,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            points: 0,
            worst_ratio: 0.0,
            max_error: 0.0,
            errors: Vec::new(),
        }
    }

    /// Records an error measured against its own tolerance.
    fn record(&mut self, error: f64, tolerance: f64) {
        self.points += 1;
        let scaled = if error.is_nan() { f64::INFINITY } else { error / tolerance };
        if scaled > self.worst_ratio {
            self.worst_ratio = scaled;
        }
        if error.is_nan() || error > self.max_error {
            self.max_error = error;
        }
    }

    fn fail(&mut self, message: String) {
        self.points += 1;
        self.errors.push(message);
    }

    fn finish(self) -> CheckReport {
        CheckReport {
            name: self.name,
            points: self.points,
            max_error: self.max_error,
            tolerance: self.tolerance,
            passed: self.errors.is_empty() && self.worst_ratio <= 1.0,
            errors: self.errors,
        }
    }
}

fn relative_error(value: f64, reference: f64) -> f64 {
    let scale = value.abs().max(reference.abs());
    if scale == 0.0 {
        0.0
    } else {
        (value - reference).abs() / scale
    }
}

fn finite_support(family: StateFamily) -> bool {
    matches!(family, StateFamily::TwinFock | StateFamily::Noon)
}

fn grid_states() -> Result<Vec<(StateFamily, f64, FockCoefficients)>, String> {
    STATE_GRID
        .iter()
        .map(|&(family, n)| {
            family
                .build(n, Cutoff::Auto)
                .map(|s| (family, n, s))
                .map_err(|e| format!("{family} N={n}: {e}"))
        })
        .collect()
}

fn moments_check() -> CheckReport {
    let mut tracker = Tracker::new("moments", MOMENT_TOL_TRUNCATED);
    let states = match grid_states() {
        Ok(s) => s,
        Err(e) => {
            tracker.fail(e);
            return tracker.finish();
        }
    };
    for (family, n, state) in &states {
        let tol = if finite_support(*family) {
            MOMENT_TOL_FINITE
        } else {
            MOMENT_TOL_TRUNCATED
        };
        let st = match statistics(state) {
            Ok(st) => st,
            Err(e) => {
                tracker.fail(format!("{family} N={n}: {e}"));
                continue;
            }
        };
        for &r2 in &REFLECTANCE_GRID {
            let r_abs = r2.sqrt();
            for &(eta_a, eta_b) in &EFFICIENCY_GRID {
                let eff = ChannelEfficiencies { eta_a, eta_b };
                let outcome = (|| -> Result<(f64, f64), String> {
                    let oracle = fock_oracle::oracle_measurement(state, r_abs, eff).map_err(|e| e.to_string())?;
                    let mean = metrology::signal_mean(r_abs, eff, st.mean());
                    let std = metrology::signal_std(r_abs, eff, st.mean(), st.q_mandel, st.sigma)
                        .map_err(|e| e.to_string())?;
                    Ok((relative_error(oracle.mean, mean), relative_error(oracle.std, std)))
                })();
                match outcome {
                    Ok((e_mean, e_std)) => {
                        tracker.record(e_mean, tol);
                        tracker.record(e_std, tol);
                    }
                    Err(e) => tracker.fail(format!("{family} N={n} |r|²={r2} η=({eta_a},{eta_b}): {e}")),
                }
            }
        }
    }
    tracker.finish()
}

fn ratio_check(options: ValidationOptions) -> CheckReport {
    let mut tracker = Tracker::new("ratio", RATIO_TOL);
    let offset = if options.inject_ratio_fault {
        RATIO_FAULT_OFFSET
    } else {
        0.0
    };
    let states = match grid_states() {
        Ok(s) => s,
        Err(e) => {
            tracker.fail(e);
            return tracker.finish();
        }
    };
    for (family, n, state) in &states {
        let st = match statistics(state) {
            Ok(st) => st,
            Err(e) => {
                tracker.fail(format!("{family} N={n}: {e}"));
                continue;
            }
        };
        for &r2 in &REFLECTANCE_GRID {
            let r_abs = r2.sqrt();
            for eta in [1.0, 0.8] {
                let eff = ChannelEfficiencies { eta_a: eta, eta_b: eta };
                let closed = metrology::ratio_perturbed(r_abs, eff, st.q_mandel, st.sigma, offset);
                let oracle = fock_oracle::oracle_ratio(state, st.mean(), r_abs, eta);
                match (closed, oracle) {
                    (Ok(a), Ok(b)) => tracker.record(relative_error(a, b), RATIO_TOL),
                    (Err(MetrologyError::Divergent(_)), Err(fock_oracle::OracleError::Divergent)) => {
                        tracker.record(0.0, RATIO_TOL)
                    }
                    (a, b) => tracker.fail(format!("{family} N={n} |r|²={r2} η={eta}: {a:?} vs {b:?}")),
                }
            }
        }
    }
    tracker.finish()
}

/// Stacks spanning metals, thicknesses and analytes for the Fresnel checks.
fn validation_stacks() -> Vec<KretschmannStack> {
    let gold = MetalModel::default();
    let specs: [(f64, MetalModel, f64, f64, f64); 5] = [
        (1.5107, gold.clone(), 50.0, 1.38, 810.0),
        (1.5107, gold.clone(), 35.0, 1.333, 633.0),
        (1.72, gold, 62.5, 1.42, 950.0),
        (1.5107, MetalModel::DrudeLorentz(DrudeLorentzParams::gold_rakic()), 45.0, 1.36, 700.0),
        (
            1.6,
            MetalModel::Constant(ComplexPermittivity::new(-12.0, 0.9)),
            20.0,
            1.0,
            550.0,
        ),
    ];
    specs
        .into_iter()
        .map(|(np, metal, d, na, wl)| KretschmannStack::new(np, metal, d, na, wl).expect("validation stack is valid"))
        .collect()
}

fn theta_grid(points: usize) -> impl Iterator<Item = IncidenceGeometry> {
    (1..=points).map(move |i| IncidenceGeometry::from_degrees(89.9 * i as f64 / (points + 1) as f64).unwrap())
}

fn tmm_check() -> CheckReport {
    let mut tracker = Tracker::new("fresnel-tmm", TMM_TOL);
    for stack in validation_stacks() {
        let [e1, e2, e3] = stack.permittivities();
        let layers = [
            Layer::new(e1, 0.0),
            Layer::new(e2, stack.thickness_nm()),
            Layer::new(e3, 0.0),
        ];
        for geom in theta_grid(200) {
            let kx = fresnel::tangential_wavevector(&stack, geom);
            let airy = fresnel::reflection_coefficient(&stack, geom);
            let tmm = fresnel::transfer_matrix_reflection(&layers, kx, stack.wavelength_nm());
            match (airy, tmm) {
                (Ok(a), Ok(b)) => tracker.record((a.r_sp - b).norm(), TMM_TOL),
                (a, b) => tracker.fail(format!("θ={}: {a:?} vs {b:?}", geom.degrees())),
            }
        }
    }
    tracker.finish()
}

fn thin_limit_check() -> CheckReport {
    let mut tracker = Tracker::new("fresnel-thin-limit", THIN_LIMIT_TOL);
    for stack in validation_stacks() {
        let bare = stack.with_thickness(0.0).expect("zero thickness is valid");
        let [e1, _, e3] = stack.permittivities();
        for geom in theta_grid(200) {
            let kx = fresnel::tangential_wavevector(&stack, geom);
            let wl = stack.wavelength_nm();
            let r13 = fresnel::interface_reflection(
                e1,
                e3,
                fresnel::wavevector_z(e1, kx, wl),
                fresnel::wavevector_z(e3, kx, wl),
            );
            match (fresnel::reflection_coefficient(&bare, geom), r13) {
                (Ok(a), Ok(b)) => tracker.record((a.r_sp - b).norm(), THIN_LIMIT_TOL),
                (a, b) => tracker.fail(format!("θ={}: {a:?} vs {b:?}", geom.degrees())),
            }
        }
    }
    tracker.finish()
}

/// Runs every check.
pub fn run(options: ValidationOptions) -> ValidationReport {
    ValidationReport {
        checks: vec![moments_check(), ratio_check(options), tmm_check(), thin_limit_check()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_run_passes() {
        let report = run(ValidationOptions::default());
        for c in &report.checks {
            assert!(c.passed, "{c:?}");
            assert!(c.points > 0);
        }
    }

    #[test]
    fn injected_fault_is_detected() {
        let report = run(ValidationOptions {
            inject_ratio_fault: true,
        });
        assert!(!report.passed());
        let ratio = report.checks.iter().find(|c| c.name == "ratio").unwrap();
        assert!(!ratio.passed);
        assert!(ratio.max_error > 1e-5);
    }
}
