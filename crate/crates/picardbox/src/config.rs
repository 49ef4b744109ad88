//! Flat `key = value` run configuration shared by all CLI subcommands.
//!
//! Recognized keys (defaults in parentheses):
//! `grid.n_points` (32), `grid.box_length` (2π), `nu` (0.1), `rho.c` (0.1),
//! `steps` (1), `cutoff.epsilon` (box_length/16), `cutoff.style`
//! (smooth_bump), `picard.tol` (1e-10), `picard.kmax` (30), `substeps` (32),
//! `padding` (2), `initial.kind` (beltrami; one of beltrami, colehopf,
//! nsf1-file, random-solenoidal), `initial.amplitude` (0.3), `initial.file`
//! (path stem for nsf1-file data), `seed` (7), `output.dump_fields` (false).
//! Lines starting with `#` are comments.

use crate::burgers::BurgersConfig;
use crate::diagnostics::corpus_rng;
use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, VectorField};
use crate::kernels::{CutoffSpec, CutoffStyle};
use crate::leray::LerayPath;
use crate::navier_stokes::NsConfig;
use crate::oracles::beltrami;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    Beltrami,
    ColeHopf,
    Nsf1File,
    RandomSolenoidal,
}

impl std::str::FromStr for InitialKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<InitialKind> {
        match s {
            "beltrami" => Ok(InitialKind::Beltrami),
            "colehopf" => Ok(InitialKind::ColeHopf),
            "nsf1-file" => Ok(InitialKind::Nsf1File),
            "random-solenoidal" => Ok(InitialKind::RandomSolenoidal),
            other => Err(Error::Config(format!("unknown initial.kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    pub n_points: usize,
    pub box_length: f64,
    pub nu: f64,
    pub rho_c: f64,
    pub steps: usize,
    pub cutoff_epsilon: Option<f64>,
    pub cutoff_style: CutoffStyle,
    pub picard_tol: f64,
    pub picard_kmax: usize,
    pub substeps: usize,
    pub padding: usize,
    pub initial_kind: InitialKind,
    pub initial_amplitude: f64,
    pub initial_file: Option<PathBuf>,
    pub seed: u64,
    pub dump_fields: bool,
}

impl Default for Config {
    fn default() -> Config {
        Config {
            n_points: 32,
            box_length: 2.0 * std::f64::consts::PI,
            nu: 0.1,
            rho_c: 0.1,
            steps: 1,
            cutoff_epsilon: None,
            cutoff_style: CutoffStyle::SmoothBump,
            picard_tol: 1e-10,
            picard_kmax: 30,
            substeps: 32,
            padding: 2,
            initial_kind: InitialKind::Beltrami,
            initial_amplitude: 0.3,
            initial_file: None,
            seed: 7,
            dump_fields: false,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        if !path.exists() {
            return Err(Error::Config("not found".into()));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("unreadable: {e}")))?;
        Config::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| Error::Config(format!("line {}: bad {what} `{value}`", lineno + 1));
            match key {
                "grid.n_points" => cfg.n_points = value.parse().map_err(|_| bad("integer"))?,
                "grid.box_length" => cfg.box_length = value.parse().map_err(|_| bad("real"))?,
                "nu" => cfg.nu = value.parse().map_err(|_| bad("real"))?,
                "rho.c" => cfg.rho_c = value.parse().map_err(|_| bad("real"))?,
                "steps" => cfg.steps = value.parse().map_err(|_| bad("integer"))?,
                "cutoff.epsilon" => {
                    cfg.cutoff_epsilon = Some(value.parse().map_err(|_| bad("real"))?)
                }
                "cutoff.style" => cfg.cutoff_style = value.parse()?,
                "picard.tol" => cfg.picard_tol = value.parse().map_err(|_| bad("real"))?,
                "picard.kmax" => cfg.picard_kmax = value.parse().map_err(|_| bad("integer"))?,
                "substeps" => cfg.substeps = value.parse().map_err(|_| bad("integer"))?,
                "padding" => cfg.padding = value.parse().map_err(|_| bad("integer"))?,
                "initial.kind" => cfg.initial_kind = value.parse()?,
                "initial.amplitude" => {
                    cfg.initial_amplitude = value.parse().map_err(|_| bad("real"))?
                }
                "initial.file" => cfg.initial_file = Some(PathBuf::from(value)),
                "seed" => cfg.seed = value.parse().map_err(|_| bad("integer"))?,
                "output.dump_fields" => {
                    cfg.dump_fields = value.parse().map_err(|_| bad("boolean"))?
                }
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n_points, self.box_length)
    }

    pub fn cutoff_spec(&self, grid: Grid) -> CutoffSpec {
        CutoffSpec::new(
            self.cutoff_epsilon.unwrap_or(grid.box_length() / 16.0),
            self.cutoff_style,
        )
    }

    pub fn burgers(&self) -> BurgersConfig {
        BurgersConfig {
            nu: self.nu,
            c: self.rho_c,
            tol: self.picard_tol,
            kmax: self.picard_kmax,
            substeps: self.substeps,
        }
    }

    pub fn ns(&self) -> NsConfig {
        NsConfig {
            nu: self.nu,
            c: self.rho_c,
            tol: self.picard_tol,
            kmax: self.picard_kmax,
            substeps: self.substeps,
            leray: LerayPath::Spectral,
        }
    }

    /// Beltrami amplitude triple (A, B, C) = amplitude · (1, 0.8, 0.6).
    pub fn beltrami_amps(&self) -> (f64, f64, f64) {
        let a = self.initial_amplitude;
        (a, 0.8 * a, 0.6 * a)
    }

    /// Cole-Hopf potential φ₀ = amplitude · (sin x + sin y + sin z).
    pub fn cole_hopf_potential(&self, grid: Grid) -> ScalarField {
        let a = self.initial_amplitude;
        ScalarField::from_fn(grid, move |x, y, z| a * (x.sin() + y.sin() + z.sin()))
    }

    /// Initial velocity per `initial.kind`.
    pub fn initial_velocity(&self, grid: Grid) -> Result<VectorField> {
        match self.initial_kind {
            InitialKind::Beltrami => Ok(beltrami(grid, 0.0, self.nu, self.beltrami_amps()).0),
            InitialKind::ColeHopf => {
                let phi = self.cole_hopf_potential(grid);
                VectorField::new([
                    phi.derivative(0)?,
                    phi.derivative(1)?,
                    phi.derivative(2)?,
                ])
            }
            InitialKind::RandomSolenoidal => {
                let mut rng = corpus_rng(self.seed);
                Ok(crate::diagnostics::random_solenoidal(
                    grid,
                    &mut rng,
                    self.initial_amplitude,
                ))
            }
            InitialKind::Nsf1File => {
                let stem = self.initial_file.as_ref().ok_or_else(|| {
                    Error::Config("initial.kind = nsf1-file requires initial.file".into())
                })?;
                let read = |suffix: &str| {
                    crate::io::read_scalar(
                        &PathBuf::from(format!("{}_{suffix}.nsf1", stem.display())),
                        self.box_length,
                    )
                };
                VectorField::new([read("x")?, read("y")?, read("z")?])
            }
        }
    }
}
