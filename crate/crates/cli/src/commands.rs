use anyhow::{bail, Result};
use plasmon_core::fresnel::{self, inflection_index_with_step, reflection_coefficient};
use plasmon_core::metrology::{sweep_precision_vs_angle_with, sweep_ratio, PrecisionRow, SweepFailure};
use plasmon_core::quantum_states::{statistics, StateFamily};
use plasmon_core::validation::{self, ValidationOptions};
use plasmon_core::{ChannelEfficiencies, IncidenceGeometry};
use serde::Serialize;

use crate::config::{Settings, DEFAULT_INFLECTION_WINDOW};
use crate::output::write_rows;

#[derive(Debug, Serialize)]
pub struct ReflectanceRow {
    pub n_analyte: f64,
    pub theta_deg: f64,
    pub reflectance: f64,
}

#[derive(Debug, Serialize)]
pub struct IndexSweepRow {
    pub n_analyte: f64,
    pub reflectance: f64,
    pub sensitivity: f64,
}

#[derive(Debug, Serialize)]
pub struct InflectionRow {
    pub theta_deg: f64,
    pub n_inf: f64,
}

#[derive(Debug, Serialize)]
pub struct RatioRow {
    pub state: StateFamily,
    #[serde(rename = "N")]
    pub photons: f64,
    pub eta: f64,
    pub n_analyte: f64,
    #[serde(rename = "R")]
    pub ratio: f64,
}

#[derive(Debug, Serialize)]
pub struct CheckRow {
    pub check: &'static str,
    pub points: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn report_failures(context: &str, failures: &[SweepFailure]) {
    for f in failures {
        eprintln!("warning: {context}: skipped {}: {}", f.at, f.error);
    }
}

fn save<T: Serialize>(settings: &Settings, rows: &[T]) -> Result<()> {
    write_rows(rows, settings.format, settings.out.as_deref())
}

pub fn reflectance(settings: &Settings) -> Result<()> {
    let mut rows = Vec::with_capacity(settings.n_analyte.len() * settings.theta_grid.len());
    for &n in &settings.n_analyte {
        let stack = settings.stack(n)?;
        for &theta in &settings.theta_grid {
            let r = reflection_coefficient(&stack, IncidenceGeometry::from_degrees(theta)?)?;
            rows.push(ReflectanceRow {
                n_analyte: n,
                theta_deg: theta,
                reflectance: r.reflectance(),
            });
        }
    }
    save(settings, &rows)
}

pub fn index_sweep(settings: &Settings) -> Result<()> {
    let geom = IncidenceGeometry::from_degrees(settings.theta)?;
    let base = settings.base_stack()?;
    let mut rows = Vec::with_capacity(settings.n_grid.len());
    for &n in &settings.n_grid {
        let stack = base.with_analyte(n)?;
        rows.push(IndexSweepRow {
            n_analyte: n,
            reflectance: reflection_coefficient(&stack, geom)?.reflectance(),
            sensitivity: fresnel::sensitivity(&stack, geom, n, settings.search.h)?,
        });
    }
    save(settings, &rows)
}

pub fn inflection(settings: &Settings) -> Result<()> {
    let stack = settings.base_stack()?;
    let window = settings.n_range.unwrap_or(DEFAULT_INFLECTION_WINDOW);
    let mut rows = Vec::new();
    for &theta in &settings.theta_grid {
        let geom = IncidenceGeometry::from_degrees(theta)?;
        match inflection_index_with_step(&stack, geom, window, settings.search.tol, settings.search.h) {
            Ok(n_inf) => rows.push(InflectionRow { theta_deg: theta, n_inf }),
            Err(e) => eprintln!("warning: inflection: skipped θ = {theta}: {e}"),
        }
    }
    if rows.is_empty() {
        bail!("no angle has an interior inflection point in [{}, {}]", window.0, window.1);
    }
    save(settings, &rows)
}

pub fn ratio(settings: &Settings) -> Result<()> {
    if let Some(eff) = settings.unbalanced {
        if !eff.is_balanced() {
            bail!(
                "the enhancement ratio needs balanced efficiencies, got eta_a = {}, eta_b = {}",
                eff.eta_a,
                eff.eta_b
            );
        }
    }
    let states = settings
        .states
        .clone()
        .unwrap_or_else(|| vec![StateFamily::TwinFock, StateFamily::Tmsv]);
    let photons = settings.photons.clone().unwrap_or_else(|| vec![1.0, 2.0, 5.0, 10.0]);
    let etas = match (&settings.eta, settings.unbalanced) {
        (Some(etas), _) => etas.clone(),
        (None, Some(eff)) => vec![eff.eta_a],
        (None, None) => vec![1.0],
    };
    let stack = settings.base_stack()?;
    let geom = IncidenceGeometry::from_degrees(settings.theta)?;

    let mut rows = Vec::new();
    for &family in &states {
        for &n in &photons {
            let stats = statistics(&family.build(n, settings.cutoff)?)?;
            for &eta in &etas {
                let out = sweep_ratio(&stack, geom, &settings.n_grid, &stats, eta)?;
                report_failures(&format!("ratio {family} N={n} eta={eta}"), &out.failures);
                rows.extend(out.rows.into_iter().map(|p| RatioRow {
                    state: family,
                    photons: n,
                    eta,
                    n_analyte: p.n_analyte,
                    ratio: p.ratio,
                }));
            }
        }
    }
    save(settings, &rows)
}

pub fn precision(settings: &Settings) -> Result<()> {
    let states = settings.states.clone().unwrap_or_else(|| StateFamily::ALL.to_vec());
    let photons = settings.photons.clone().unwrap_or_else(|| vec![1.0, 2.0]);
    let effs: Vec<ChannelEfficiencies> = match (&settings.eta, settings.unbalanced) {
        (Some(etas), _) => etas
            .iter()
            .map(|&e| ChannelEfficiencies::balanced(e))
            .collect::<Result<_, _>>()?,
        (None, Some(eff)) => vec![eff],
        (None, None) => vec![ChannelEfficiencies::balanced(1.0)?],
    };
    let stack = settings.base_stack()?;
    let window = settings.n_range.unwrap_or(DEFAULT_INFLECTION_WINDOW);

    let mut rows: Vec<PrecisionRow> = Vec::new();
    for &n in &photons {
        for &eff in &effs {
            let out = sweep_precision_vs_angle_with(
                &stack,
                &settings.theta_grid,
                &states,
                n,
                eff,
                window,
                settings.search,
            )?;
            report_failures(&format!("precision N={n}"), &out.failures);
            rows.extend(out.rows);
        }
    }
    if rows.is_empty() {
        bail!("no angle produced a precision estimate");
    }
    save(settings, &rows)
}

/// Returns whether every check passed.
pub fn validate(settings: &Settings, inject_fault: bool) -> Result<bool> {
    let report = validation::run(ValidationOptions {
        inject_ratio_fault: inject_fault,
    });
    let rows: Vec<CheckRow> = report
        .checks
        .iter()
        .map(|c| CheckRow {
            check: c.name,
            points: c.points,
            max_error: c.max_error,
            tolerance: c.tolerance,
            passed: c.passed,
        })
        .collect();
    for c in &report.checks {
        eprintln!(
            "{:<20} {:>5} points  max error {:.3e}  tol {:.0e}  {}",
            c.name,
            c.points,
            c.max_error,
            c.tolerance,
            if c.passed { "ok" } else { "FAILED" }
        );
        for e in &c.errors {
            eprintln!("    {e}");
        }
    }
    save(settings, &rows)?;
    Ok(report.passed())
}
