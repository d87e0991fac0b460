//! Run configuration: a flat JSON file, overridden field by field by flags.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use plasmon_core::materials::{load_dispersion, DispersionFormat, DrudeLorentzParams};
use plasmon_core::metrology::SearchOptions;
use plasmon_core::quantum_states::{Cutoff, StateFamily};
use plasmon_core::{ChannelEfficiencies, KretschmannStack, MetalModel};
use serde::Deserialize;

pub const DISPERSION_DIR_ENV: &str = "PLASMON_DISPERSION_DIR";

pub const DEFAULT_N_PRISM: f64 = 1.5107;
pub const DEFAULT_WAVELENGTH_NM: f64 = 810.0;
pub const DEFAULT_THICKNESS_NM: f64 = 50.0;
pub const DEFAULT_THETA: f64 = 73.0;
pub const DEFAULT_THETA_RANGE: (f64, f64, usize) = (65.5, 83.5, 361);
pub const DEFAULT_N_RANGE: (f64, f64, usize) = (1.333, 1.4422, 1093);
/// Index window searched for inflection points. Wider than the default
/// grid because the steepest flank leaves [1.333, 1.4422] near 65.5° and
/// 83.5°; the search also stops short of the critical index.
pub const DEFAULT_INFLECTION_WINDOW: (f64, f64) = (1.30, 1.50);
pub const DEFAULT_REFLECTANCE_INDICES: [f64; 2] = [1.39, 1.395];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Either a single value or a list, so `"photons": 1` and
/// `"photons": [1, 2]` both parse.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> From<OneOrMany<T>> for Vec<T> {
    fn from(v: OneOrMany<T>) -> Self {
        match v {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(xs) => xs,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CutoffSpec {
    Fixed(usize),
    Named(String),
}

/// Config file contents. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_prism: Option<f64>,
    pub thickness_nm: Option<f64>,
    pub wavelength_nm: Option<f64>,
    /// Path to an n,k table, or one of the model names `gold`, `gold-drude-lorentz`.
    pub dispersion: Option<String>,
    pub state: Option<OneOrMany<StateFamily>>,
    pub photons: Option<OneOrMany<f64>>,
    pub cutoff: Option<CutoffSpec>,
    pub eta: Option<OneOrMany<f64>>,
    pub eta_a: Option<f64>,
    pub eta_b: Option<f64>,
    pub theta: Option<f64>,
    pub theta_min: Option<f64>,
    pub theta_max: Option<f64>,
    pub theta_steps: Option<usize>,
    pub n_min: Option<f64>,
    pub n_max: Option<f64>,
    pub n_steps: Option<usize>,
    pub n_analyte: Option<OneOrMany<f64>>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub h: Option<f64>,
    pub tol: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).with_context(|| format!("cannot open config {}", path.display()))?;
        serde_json::from_reader(BufReader::new(file)).with_context(|| format!("invalid config {}", path.display()))
    }
}

/// Flags shared by every subcommand; set flags win over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat JSON config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (stdout if omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// n,k CSV table, or `gold` / `gold-drude-lorentz`
    #[arg(long)]
    pub dispersion: Option<String>,
    #[arg(long)]
    pub n_prism: Option<f64>,
    /// Film thickness in nm
    #[arg(long)]
    pub thickness: Option<f64>,
    /// Vacuum wavelength in nm
    #[arg(long)]
    pub wavelength: Option<f64>,
    /// Incidence angle in degrees
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub theta_min: Option<f64>,
    #[arg(long)]
    pub theta_max: Option<f64>,
    #[arg(long)]
    pub theta_steps: Option<usize>,
    #[arg(long)]
    pub n_min: Option<f64>,
    #[arg(long)]
    pub n_max: Option<f64>,
    #[arg(long)]
    pub n_steps: Option<usize>,
    /// Analyte indices for `reflectance`
    #[arg(long, value_delimiter = ',')]
    pub n_analyte: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub state: Option<Vec<StateFamily>>,
    /// Mean photon number(s) per mode
    #[arg(long, value_delimiter = ',')]
    pub photons: Option<Vec<f64>>,
    /// Photon-number cutoff per mode, or `auto`
    #[arg(long)]
    pub cutoff: Option<String>,
    /// Balanced channel efficiency (list allowed for `ratio`)
    #[arg(long, value_delimiter = ',')]
    pub eta: Option<Vec<f64>>,
    #[arg(long, requires = "eta_b")]
    pub eta_a: Option<f64>,
    #[arg(long, requires = "eta_a")]
    pub eta_b: Option<f64>,
    /// Finite-difference step in RIU
    #[arg(long)]
    pub h: Option<f64>,
    /// Inflection-point tolerance in RIU
    #[arg(long)]
    pub tol: Option<f64>,
}

/// Fully resolved settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub n_prism: f64,
    pub thickness_nm: f64,
    pub wavelength_nm: f64,
    pub metal: MetalModel,
    pub theta: f64,
    pub theta_grid: Vec<f64>,
    /// `None` when neither the file nor the flags set an index range.
    pub n_range: Option<(f64, f64)>,
    pub n_grid: Vec<f64>,
    pub n_analyte: Vec<f64>,
    pub states: Option<Vec<StateFamily>>,
    pub photons: Option<Vec<f64>>,
    pub cutoff: Cutoff,
    pub eta: Option<Vec<f64>>,
    pub unbalanced: Option<ChannelEfficiencies>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub search: SearchOptions,
}

impl Settings {
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };

        let n_prism = args.n_prism.or(file.n_prism).unwrap_or(DEFAULT_N_PRISM);
        let thickness_nm = args.thickness.or(file.thickness_nm).unwrap_or(DEFAULT_THICKNESS_NM);
        let wavelength_nm = args.wavelength.or(file.wavelength_nm).unwrap_or(DEFAULT_WAVELENGTH_NM);
        let metal = match args.dispersion.clone().or(file.dispersion) {
            None => MetalModel::default(),
            Some(spec) => metal_model(&spec)?,
        };

        let theta = args.theta.or(file.theta).unwrap_or(DEFAULT_THETA);
        let theta_grid = linspace(
            args.theta_min.or(file.theta_min).unwrap_or(DEFAULT_THETA_RANGE.0),
            args.theta_max.or(file.theta_max).unwrap_or(DEFAULT_THETA_RANGE.1),
            args.theta_steps.or(file.theta_steps).unwrap_or(DEFAULT_THETA_RANGE.2),
            "theta",
        )?;

        let n_min = args.n_min.or(file.n_min);
        let n_max = args.n_max.or(file.n_max);
        let n_range = match (n_min, n_max) {
            (None, None) => None,
            (lo, hi) => Some((lo.unwrap_or(DEFAULT_N_RANGE.0), hi.unwrap_or(DEFAULT_N_RANGE.1))),
        };
        let (lo, hi) = n_range.unwrap_or((DEFAULT_N_RANGE.0, DEFAULT_N_RANGE.1));
        let n_grid = linspace(lo, hi, args.n_steps.or(file.n_steps).unwrap_or(DEFAULT_N_RANGE.2), "n")?;

        let n_analyte = args
            .n_analyte
            .clone()
            .or(file.n_analyte.map(Vec::from))
            .unwrap_or_else(|| DEFAULT_REFLECTANCE_INDICES.to_vec());
        if n_analyte.is_empty() {
            bail!("no analyte index given");
        }

        let cutoff = match args.cutoff.clone().map(CutoffSpec::Named).or(file.cutoff) {
            None => Cutoff::Auto,
            Some(spec) => parse_cutoff(spec)?,
        };

        let eta = args.eta.clone().or(file.eta.map(Vec::from));
        let unbalanced = match (args.eta_a.or(file.eta_a), args.eta_b.or(file.eta_b)) {
            (None, None) => None,
            (Some(a), Some(b)) => {
                if eta.is_some() {
                    bail!("give either eta or eta_a/eta_b, not both");
                }
                Some(ChannelEfficiencies::new(a, b)?)
            }
            _ => bail!("eta_a and eta_b must be given together"),
        };
        if let Some(etas) = &eta {
            for &e in etas {
                ChannelEfficiencies::balanced(e)?;
            }
        }

        let defaults = SearchOptions::default();
        let search = SearchOptions {
            h: args.h.or(file.h).unwrap_or(defaults.h),
            tol: args.tol.or(file.tol).unwrap_or(defaults.tol),
        };
        if !(search.h > 0.0 && search.tol > 0.0) {
            bail!("h and tol must be positive");
        }

        Ok(Self {
            n_prism,
            thickness_nm,
            wavelength_nm,
            metal,
            theta,
            theta_grid,
            n_range,
            n_grid,
            n_analyte,
            states: args.state.clone().or(file.state.map(Vec::from)),
            photons: args.photons.clone().or(file.photons.map(Vec::from)),
            cutoff,
            eta,
            unbalanced,
            out: args.out.clone().or(file.out),
            format: args.format.or(file.format).unwrap_or_default(),
            search,
        })
    }

    /// Stack with the analyte set to `n_analyte`.
    pub fn stack(&self, n_analyte: f64) -> Result<KretschmannStack> {
        Ok(KretschmannStack::new(
            self.n_prism,
            self.metal.clone(),
            self.thickness_nm,
            n_analyte,
            self.wavelength_nm,
        )?)
    }

    /// A stack whose analyte index is irrelevant to the caller.
    pub fn base_stack(&self) -> Result<KretschmannStack> {
        let n = self.n_grid.first().copied().unwrap_or(DEFAULT_N_RANGE.0).min(self.n_prism - 1e-3);
        self.stack(n)
    }
}

fn parse_cutoff(spec: CutoffSpec) -> Result<Cutoff> {
    match spec {
        CutoffSpec::Fixed(k) => Ok(Cutoff::Fixed(k)),
        CutoffSpec::Named(s) if s == "auto" => Ok(Cutoff::Auto),
        CutoffSpec::Named(s) => match s.parse::<usize>() {
            Ok(k) => Ok(Cutoff::Fixed(k)),
            Err(_) => bail!("cutoff must be a non-negative integer or \"auto\", got {s:?}"),
        },
    }
}

fn linspace(lo: f64, hi: f64, steps: usize, what: &str) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) {
        bail!("{what} range must be finite");
    }
    match steps {
        0 => bail!("{what} grid is empty"),
        1 => Ok(vec![lo]),
        _ => {
            if hi <= lo {
                bail!("{what} range [{lo}, {hi}] is empty");
            }
            Ok((0..steps)
                .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
                .collect())
        }
    }
}

/// Resolves a dispersion argument to a metal model. Relative paths that do
/// not exist are looked up again under `$PLASMON_DISPERSION_DIR`.
pub fn metal_model(spec: &str) -> Result<MetalModel> {
    match spec {
        "gold" => return Ok(MetalModel::default()),
        "gold-drude-lorentz" => return Ok(MetalModel::DrudeLorentz(DrudeLorentzParams::gold_rakic())),
        _ => {}
    }
    let path = find_dispersion(Path::new(spec))?;
    let file = File::open(&path).with_context(|| format!("cannot open dispersion table {}", path.display()))?;
    let table = load_dispersion(BufReader::new(file), DispersionFormat::Csv, path.display().to_string())
        .with_context(|| format!("invalid dispersion table {}", path.display()))?;
    Ok(MetalModel::Table(table))
}

fn find_dispersion(path: &Path) -> Result<PathBuf> {
    if path.is_file() {
        return Ok(path.to_path_buf());
    }
    if path.is_relative() {
        if let Some(dir) = std::env::var_os(DISPERSION_DIR_ENV) {
            let candidate = Path::new(&dir).join(path);
            if candidate.is_file() {
                return Ok(candidate);
            }
        }
    }
    bail!("dispersion table {} not found", path.display())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_operating_point() {
        let s = Settings::resolve(&CommonArgs::default()).unwrap();
        assert_eq!((s.n_prism, s.wavelength_nm, s.thickness_nm, s.theta), (1.5107, 810.0, 50.0, 73.0));
        assert_eq!(s.theta_grid.len(), 361);
        assert_eq!(s.n_grid.len(), 1093);
        assert!((s.n_grid[1] - s.n_grid[0] - 1e-4).abs() < 1e-12);
        assert_eq!(*s.n_grid.last().unwrap(), 1.4422);
        assert!(s.n_range.is_none());
    }

    #[test]
    fn one_or_many() {
        let c: RunConfig = serde_json::from_str(r#"{"photons": 2, "state": ["tmsv", "twin-fock"]}"#).unwrap();
        assert_eq!(Vec::from(c.photons.unwrap()), vec![2.0]);
        assert_eq!(Vec::from(c.state.unwrap()), vec![StateFamily::Tmsv, StateFamily::TwinFock]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"n_prims": 1.5}"#).is_err());
    }

    #[test]
    fn cutoff_specs() {
        assert_eq!(parse_cutoff(CutoffSpec::Fixed(30)).unwrap(), Cutoff::Fixed(30));
        assert_eq!(parse_cutoff(CutoffSpec::Named("auto".into())).unwrap(), Cutoff::Auto);
        assert_eq!(parse_cutoff(CutoffSpec::Named("12".into())).unwrap(), Cutoff::Fixed(12));
        assert!(parse_cutoff(CutoffSpec::Named("big".into())).is_err());
    }

    #[test]
    fn grids() {
        assert!(linspace(1.0, 2.0, 0, "n").is_err());
        assert_eq!(linspace(1.0, 2.0, 1, "n").unwrap(), vec![1.0]);
        assert!(linspace(2.0, 1.0, 5, "n").is_err());
    }
}
