//! Brute-force moments of the intensity-difference measurement.
//!
//! Each arm's loss is a beam splitter with a vacuum ancilla, whose exact
//! action on photon numbers is binomial thinning. Since `M = n_b − n_a` and
//! `M²` are diagonal in the joint number basis, the joint distribution
//! `P(n, m) = |C_{n,m}|²` carries everything needed, and the moments are
//! plain sums over the thinned distribution.
//!
//! Nothing here uses photon-statistics parameters or closed-form moment
//! expressions; the module only consumes coefficients and transmittances.

use num_complex::Complex64;
use thiserror::Error;

use crate::metrology::{ChannelEfficiencies, MeasurementStats};
use crate::quantum_states::{coherent_product, Cutoff, FockCoefficients, StateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("transmittance {0} outside [0, 1]")]
    InvalidTransmittance(f64),

    #[error("|r_sp| = {0} outside [0, 1]")]
    InvalidReflectivity(f64),

    #[error("state noise vanishes; the precision ratio diverges")]
    Divergent,

    #[error(transparent)]
    State(#[from] StateError),
}

/// Joint photon-number distribution `P(k, l)` for `0 ≤ k, l ≤ cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointNumberDistribution {
    cutoff: usize,
    probs: Vec<f64>,
}

impl JointNumberDistribution {
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(cutoff: usize, mut f: F) -> Self {
        let dim = cutoff + 1;
        let probs = (0..dim * dim).map(|i| f(i / dim, i % dim)).collect();
        Self { cutoff, probs }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        if k > self.cutoff || l > self.cutoff {
            return 0.0;
        }
        self.probs[k * (self.cutoff + 1) + l]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `1 − ΣP`.
    pub fn leakage(&self) -> f64 {
        1.0 - self.total()
    }

    /// `(⟨k⟩, ⟨l⟩)` as raw sums.
    pub fn marginal_means(&self) -> (f64, f64) {
        let dim = self.cutoff + 1;
        self.probs.iter().enumerate().fold((0.0, 0.0), |(a, b), (i, &p)| {
            (a + (i / dim) as f64 * p, b + (i % dim) as f64 * p)
        })
    }
}

/// `P(n, m) = |C_{n,m}|²`.
pub fn joint_distribution(state: &FockCoefficients) -> JointNumberDistribution {
    JointNumberDistribution::from_fn(state.cutoff(), |n, m| state.probability(n, m))
}

/// `B[n][k] = C(n, k) Tᵏ (1 − T)ⁿ⁻ᵏ` for `0 ≤ k ≤ n ≤ cutoff`, built row by
/// row with Pascal's recursion so that no factorials appear.
fn binomial_kernel(cutoff: usize, t: f64) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(cutoff + 1);
    rows.push(vec![1.0]);
    for n in 1..=cutoff {
        let prev = &rows[n - 1];
        let row: Vec<f64> = (0..=n)
            .map(|k| {
                let stay = if k < n { (1.0 - t) * prev[k] } else { 0.0 };
                let pass = if k > 0 { t * prev[k - 1] } else { 0.0 };
                stay + pass
            })
            .collect();
        rows.push(row);
    }
    rows
}

/// Independent loss on both modes:
/// `P'(k, l) = Σ_{n≥k, m≥l} P(n, m) Bin(k; n, T_a) Bin(l; m, T_b)`.
pub fn binomial_thinning(
    dist: &JointNumberDistribution,
    t_a: f64,
    t_b: f64,
) -> Result<JointNumberDistribution, OracleError> {
    for t in [t_a, t_b] {
        if !(0.0..=1.0).contains(&t) {
            return Err(OracleError::InvalidTransmittance(t));
        }
    }
    let dim = dist.cutoff + 1;
    let ka = binomial_kernel(dist.cutoff, t_a);
    let kb = binomial_kernel(dist.cutoff, t_b);

    // thin mode b first: Q(n, l) = Σ_m P(n, m) Bin(l; m, T_b)
    let mut partial = vec![0.0; dim * dim];
    for n in 0..dim {
        for m in 0..dim {
            let p = dist.probs[n * dim + m];
            if p == 0.0 {
                continue;
            }
            for (l, &w) in kb[m].iter().enumerate() {
                partial[n * dim + l] += p * w;
            }
        }
    }
    // then mode a: P'(k, l) = Σ_n Bin(k; n, T_a) Q(n, l)
    let mut out = vec![0.0; dim * dim];
    for n in 0..dim {
        for (k, &w) in ka[n].iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for l in 0..dim {
                out[k * dim + l] += w * partial[n * dim + l];
            }
        }
    }
    Ok(JointNumberDistribution {
        cutoff: dist.cutoff,
        probs: out,
    })
}

/// Mean and standard deviation of `l − k` over a distribution, by direct
/// (two-pass) summation.
pub fn difference_moments(dist: &JointNumberDistribution) -> MeasurementStats {
    let dim = dist.cutoff + 1;
    let diff = |i: usize| (i % dim) as f64 - (i / dim) as f64;
    let mean: f64 = dist.probs.iter().enumerate().map(|(i, &p)| diff(i) * p).sum();
    let second: f64 = dist
        .probs
        .iter()
        .enumerate()
        .map(|(i, &p)| (diff(i) - mean).powi(2) * p)
        .sum();
    MeasurementStats {
        mean,
        std: second.max(0.0).sqrt(),
    }
}

/// Moments of `M = n_b − n_a` after mode `a` is thinned by `|r|²η_a²` and
/// mode `b` by `η_b²`.
pub fn oracle_measurement(
    state: &FockCoefficients,
    r_abs: f64,
    eff: ChannelEfficiencies,
) -> Result<MeasurementStats, OracleError> {
    if !(0.0..=1.0).contains(&r_abs) {
        return Err(OracleError::InvalidReflectivity(r_abs));
    }
    let t_a = r_abs * r_abs * eff.eta_a * eff.eta_a;
    let t_b = eff.eta_b * eff.eta_b;
    let thinned = binomial_thinning(&joint_distribution(state), t_a, t_b)?;
    Ok(difference_moments(&thinned))
}

/// Ratio of the product-coherent reference noise (`|α|² = reference_photons`)
/// to the state's noise, both from [`oracle_measurement`] with balanced `eta`.
pub fn oracle_ratio(
    state: &FockCoefficients,
    reference_photons: f64,
    r_abs: f64,
    eta: f64,
) -> Result<f64, OracleError> {
    let eff = ChannelEfficiencies {
        eta_a: eta,
        eta_b: eta,
    };
    if !(0.0..=1.0).contains(&eta) {
        return Err(OracleError::InvalidTransmittance(eta));
    }
    let reference = coherent_product(Complex64::new(reference_photons.sqrt(), 0.0), Cutoff::Auto)?;
    let ref_std = oracle_measurement(&reference, r_abs, eff)?.std;
    let std = oracle_measurement(state, r_abs, eff)?.std;
    if !(std > 1e-12 * ref_std.max(f64::MIN_POSITIVE)) {
        return Err(OracleError::Divergent);
    }
    Ok(ref_std / std)
}
