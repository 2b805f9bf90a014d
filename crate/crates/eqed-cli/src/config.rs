//! TOML run configuration.

use std::path::{Path, PathBuf};

use eqed::lattice::LatticeConfig;
use eqed::momentum::{GridSpec, RelliumConfig};
use serde::Deserialize;

use crate::CliError;

/// Largest lattice side accepted by `build` and `compile`.
pub const MAX_LATTICE_SIDE: usize = 4;
/// Largest momentum grid accepted by any subcommand.
pub const MAX_GRID_POINTS: usize = 32;

/// Gold atomic radius used for the default cutoff box, in bohr.
#[allow(clippy::approx_constant)]
const GOLD_RADIUS_BOHR: f64 = 3.14;

/// sqrt(4 pi alpha) in natural units.
pub fn physical_charge() -> f64 {
    (4.0 * std::f64::consts::PI / eqed::resources::C_AU).sqrt()
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: Option<SystemSection>,
    #[serde(default)]
    pub trotter: TrotterSection,
    #[serde(default)]
    pub qpe: QpeSection,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub estimate: EstimateSection,
    #[serde(default)]
    pub cutoff: CutoffSection,
    pub stateprep: Option<StatePrepSection>,
    #[serde(default)]
    pub output: OutputSection,
    /// Directory of the config file; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Lattice,
    Momentum,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub basis: Basis,
    pub n_side: Option<usize>,
    #[serde(rename = "E_cut")]
    pub e_cut: Option<f64>,
    /// Alternative to `E_cut`: the first `grid_points` momenta by |nu|^2.
    pub grid_points: Option<usize>,
    #[serde(rename = "L")]
    pub l: f64,
    pub m: f64,
    pub e: f64,
    #[serde(default)]
    pub delta_m: f64,
    #[serde(default, rename = "Lambda_vac")]
    pub lambda_vac: f64,
    #[serde(default = "yes")]
    pub include_pair_terms: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrotterSection {
    pub order: u32,
    pub dt: f64,
    pub steps: u32,
    #[serde(default)]
    pub dense_one_body: bool,
}

impl Default for TrotterSection {
    fn default() -> Self {
        Self { order: 2, dt: 0.1, steps: 1, dense_one_body: false }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpeSection {
    pub epsilon: f64,
}

impl Default for QpeSection {
    fn default() -> Self {
        Self { epsilon: 1.6e-3 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Samples {
    Single(u64),
    Runs(Vec<u64>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    /// Samples per run; a list gives one run per entry.
    pub samples: Samples,
    pub seed: u64,
    /// Grid sizes (origin excluded, nearest first) of the systems to sample.
    pub systems: Vec<usize>,
}

impl Default for McSection {
    fn default() -> Self {
        Self { samples: Samples::Single(100_000), seed: 0, systems: vec![6, 10, 14, 18] }
    }
}

impl McSection {
    pub fn sample_counts(&self) -> Vec<u64> {
        match &self.samples {
            Samples::Single(n) => vec![*n],
            Samples::Runs(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub n_s: Vec<u64>,
    #[serde(rename = "A")]
    pub a: f64,
    pub b: f64,
}

impl Default for EstimateSection {
    fn default() -> Self {
        Self { n_s: vec![10, 20, 40, 60, 80, 100], a: 0.3, b: 4.3 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSection {
    #[serde(rename = "Z")]
    pub z: u32,
    pub n: u32,
    pub j: f64,
    #[serde(rename = "L")]
    pub l: f64,
    /// Planewave count the unit conventions are compared against.
    pub reference: f64,
}

impl Default for CutoffSection {
    fn default() -> Self {
        Self { z: 79, n: 1, j: 0.5, l: 2.0 * GOLD_RADIUS_BOHR, reference: 3.08e7 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fill {
    #[default]
    Unoccupied,
    Occupied,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatePrepSection {
    /// CSV file with the orbital coefficient matrix.
    pub slater: PathBuf,
    #[serde(default)]
    pub n_positron: usize,
    #[serde(default)]
    pub fill: Fill,
    pub mrci: Option<MrciSection>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MrciSection {
    pub n_ras1: u32,
    pub n_cas: u32,
    pub n_ras3: u32,
    pub n_e: u32,
    #[serde(default = "two")]
    pub m_h: u32,
    #[serde(default = "two")]
    pub m_e: u32,
}

fn two() -> u32 {
    2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Txt,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), formats: vec![Format::Json] }
    }
}

fn require(ok: bool, key: &str, msg: impl std::fmt::Display) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("{key}: {msg}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(s) = &self.system {
            require(s.l > 0.0, "system.L", format!("must be positive, got {}", s.l))?;
            require(s.m >= 0.0, "system.m", format!("must be nonnegative, got {}", s.m))?;
            require(s.e.is_finite(), "system.e", "must be finite")?;
            require(s.delta_m.is_finite(), "system.delta_m", "must be finite")?;
            require(s.lambda_vac.is_finite(), "system.Lambda_vac", "must be finite")?;
            match s.basis {
                Basis::Lattice => {
                    let n = s.n_side.ok_or_else(|| CliError::Config("system.n_side: required for the lattice basis".into()))?;
                    require(n >= 2 && n % 2 == 0, "system.n_side", format!("must be even and at least 2, got {n}"))?;
                    require(s.e_cut.is_none() && s.grid_points.is_none(), "system.E_cut", "only valid for the momentum basis")?;
                }
                Basis::Momentum => {
                    require(s.n_side.is_none(), "system.n_side", "only valid for the lattice basis")?;
                    match (s.e_cut, s.grid_points) {
                        (Some(e), None) => require(e > 0.0, "system.E_cut", format!("must be positive, got {e}"))?,
                        (None, Some(g)) => require(g > 0, "system.grid_points", "must be positive")?,
                        _ => return Err(CliError::Config("system.E_cut: give exactly one of E_cut and grid_points".into())),
                    }
                }
            }
        }
        let t = &self.trotter;
        require(t.order == 1 || t.order % 2 == 0, "trotter.order", format!("must be 1 or even, got {}", t.order))?;
        require(t.dt > 0.0, "trotter.dt", format!("must be positive, got {}", t.dt))?;
        require(t.steps > 0, "trotter.steps", "must be positive")?;
        require(self.qpe.epsilon > 0.0, "qpe.epsilon", format!("must be positive, got {}", self.qpe.epsilon))?;
        let counts = self.mc.sample_counts();
        require(!counts.is_empty() && counts.iter().all(|&n| n > 0), "mc.samples", "must be positive")?;
        require(self.mc.systems.iter().all(|&n| n > 0), "mc.systems", "grid sizes must be positive")?;
        require(self.estimate.a > 0.0, "estimate.A", "must be positive")?;
        require(self.estimate.n_s.iter().all(|&n| n > 0), "estimate.n_s", "must be positive")?;
        let c = &self.cutoff;
        require(c.l > 0.0, "cutoff.L", format!("must be positive, got {}", c.l))?;
        require(c.n >= 1, "cutoff.n", "must be at least 1")?;
        require(c.j > 0.0 && (2.0 * c.j).fract() == 0.0, "cutoff.j", "must be a positive half-integer")?;
        require(c.reference > 0.0, "cutoff.reference", "must be positive")?;
        require(!self.output.formats.is_empty(), "output.formats", "must list at least one format")?;
        Ok(())
    }

    pub fn system(&self) -> Result<&SystemSection, CliError> {
        self.system.as_ref().ok_or_else(|| CliError::Config("system: section is required for this subcommand".into()))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

impl SystemSection {
    pub fn lattice(&self) -> Result<LatticeConfig, CliError> {
        let n = self.n_side.unwrap_or(0);
        if n > MAX_LATTICE_SIDE {
            return Err(CliError::ResourceLimit(format!("system.n_side = {n} exceeds the limit of {MAX_LATTICE_SIDE}")));
        }
        Ok(LatticeConfig::new(n, self.l, self.m, self.e))
    }

    pub fn rellium(&self) -> Result<RelliumConfig, CliError> {
        let grid = match (self.e_cut, self.grid_points) {
            (Some(e_cut), _) => GridSpec::Cutoff { e_cut, include_origin: true },
            (None, Some(n)) => GridSpec::Nearest(n),
            (None, None) => return Err(CliError::Config("system.E_cut: required for the momentum basis".into())),
        };
        let points = grid.points(self.l).map_err(|e| CliError::Config(format!("system.E_cut: {e}")))?;
        if points.len() > MAX_GRID_POINTS {
            return Err(CliError::ResourceLimit(format!("{} grid points exceed the limit of {MAX_GRID_POINTS}", points.len())));
        }
        let mut cfg = RelliumConfig::new(self.l, GridSpec::Explicit(points), self.m, self.e);
        cfg.delta_m = self.delta_m;
        cfg.lambda_vac = self.lambda_vac;
        cfg.include_pair_terms = self.include_pair_terms;
        Ok(cfg)
    }
}
