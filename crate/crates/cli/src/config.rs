//! Plain-text `key = value` configuration with optional `[section]` headers,
//! merged with command-line flags (flags win).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use curvflow::ambient::{ModelDescriptor, ModelKind};
use curvflow::immersion::Family;
use curvflow::parallel::Direction;
use curvflow::flow::Stepper;
use curvflow::{Error, Result};
use sha2::{Digest, Sha256};

/// Keys accepted in config files; section names are free-form grouping.
const KNOWN_KEYS: &[&str] = &[
    "example", "r0", "grid-file", "model", "spacing", "wrap", "orientation", "size", "h", "dt", "t-max", "steps",
    "direction", "stepper", "source", "rho-tol", "delta", "kappa", "identity-tol", "residual-tol", "out", "seed",
    "n", "ca", "rnorm", "supmu", "grid", "samples", "suites",
];

#[derive(Debug, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", k + 1)))?;
            let key = key.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("line {}: unknown key '{key}'", k + 1)));
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", k + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

/// Command-line flags shared by every subcommand; unset flags fall back to
/// the config file, then to the subcommand default.
#[derive(Args, Debug, Default, Clone)]
#[command(allow_negative_numbers = true)]
pub struct Flags {
    /// key = value configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in example, e.g. sphere-r3 or cp2-perturbed(7, 0.05)
    #[arg(long)]
    pub example: Option<String>,
    /// Radius override for examples that take one
    #[arg(long)]
    pub r0: Option<f64>,
    /// Tabulated immersion instead of an example
    #[arg(long)]
    pub grid_file: Option<PathBuf>,
    /// Ambient model for grid files: kind,c,dim (e.g. cp,4,4)
    #[arg(long)]
    pub model: Option<String>,
    /// Parameter spacing for grid files, comma separated
    #[arg(long)]
    pub spacing: Option<String>,
    /// Periodic axes for grid files, comma separated booleans
    #[arg(long)]
    pub wrap: Option<String>,
    #[arg(long)]
    pub orientation: Option<f64>,
    /// Patch size in grid points per axis
    #[arg(long)]
    pub size: Option<usize>,
    /// Grid spacing
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// forward | backward
    #[arg(long)]
    pub direction: Option<String>,
    /// euler | rk2
    #[arg(long)]
    pub stepper: Option<String>,
    /// pde | parallel
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long)]
    pub rho_tol: Option<f64>,
    /// Focal guard on the Jacobi coefficient
    #[arg(long)]
    pub delta: Option<f64>,
    /// Parabolic stability factor
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub identity_tol: Option<f64>,
    #[arg(long)]
    pub residual_tol: Option<f64>,
    /// Output directory (CURVFLOW_OUT overrides the config file)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Hypersurface dimension for the maximum-principle constant
    #[arg(long)]
    pub n: Option<usize>,
    /// Space-time bound on |A|
    #[arg(long)]
    pub ca: Option<f64>,
    /// Ambient curvature norm
    #[arg(long)]
    pub rnorm: Option<f64>,
    /// Supremum of mu
    #[arg(long)]
    pub supmu: Option<f64>,
    /// Periodic grid size for the maximum-principle check
    #[arg(long)]
    pub grid: Option<usize>,
    /// Number of random initial data
    #[arg(long)]
    pub samples: Option<usize>,
    /// Suites run by `report`, comma separated
    #[arg(long)]
    pub suites: Option<String>,
}

/// Flag, config and default values resolved into one place.
pub struct Resolver {
    flags: Flags,
    file: ConfigFile,
    /// Every value actually used, for the manifest and its hash.
    used: BTreeMap<String, String>,
}

fn parse_value<T: FromStr>(key: &str, s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Config(format!("bad value '{s}' for {key}")))
}

impl Resolver {
    pub fn new(flags: Flags) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        Ok(Self { flags, file, used: BTreeMap::new() })
    }

    pub fn flags(&self) -> &Flags {
        &self.flags
    }

    fn record(&mut self, key: &str, v: String) {
        self.used.insert(key.to_string(), v);
    }

    /// Flag if given, else config entry, else `default`.
    pub fn value<T: FromStr + ToString>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        let v = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(s) => parse_value(key, s)?,
                None => default,
            },
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn optional<T: FromStr + ToString>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        let v = match flag {
            Some(v) => Some(v),
            None => self.file.get(key).map(|s| parse_value(key, s)).transpose()?,
        };
        if let Some(v) = &v {
            self.record(key, v.to_string());
        }
        Ok(v)
    }

    pub fn positive(&mut self, key: &str, flag: Option<f64>, default: f64) -> Result<f64> {
        let v = self.value(key, flag, default)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("{key} must be positive, got {v}")));
        }
        Ok(v)
    }

    pub fn optional_positive(&mut self, key: &str, flag: Option<f64>) -> Result<Option<f64>> {
        let v = self.optional(key, flag)?;
        if let Some(x) = v {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Config(format!("{key} must be positive, got {x}")));
            }
        }
        Ok(v)
    }

    pub fn direction(&mut self) -> Result<Direction> {
        let s = self.value("direction", self.flags.direction.clone(), "forward".to_string())?;
        match s.as_str() {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            other => Err(Error::Config(format!("direction must be forward or backward, got '{other}'"))),
        }
    }

    pub fn stepper(&mut self) -> Result<Stepper> {
        let s = self.value("stepper", self.flags.stepper.clone(), "rk2".to_string())?;
        match s.as_str() {
            "euler" => Ok(Stepper::Euler),
            "rk2" => Ok(Stepper::Rk2),
            other => Err(Error::Config(format!("stepper must be euler or rk2, got '{other}'"))),
        }
    }

    /// Example family, with the `r0` override applied.
    pub fn family(&mut self, default: &str) -> Result<Family> {
        let name = self.value("example", self.flags.example.clone(), default.to_string())?;
        let fam = Family::parse(&name)?;
        let r0 = self.optional("r0", self.flags.r0)?;
        let Some(r) = r0 else { return Ok(fam) };
        let with = match fam {
            Family::SphereR3 { .. } => Family::SphereR3 { r0: r },
            Family::HyperbolicSphereH3 { .. } => Family::HyperbolicSphereH3 { r0: r },
            Family::Cp2GeodesicSphere { .. } => Family::Cp2GeodesicSphere { r0: r },
            Family::Cp2Perturbed { seed, amplitude, .. } => Family::Cp2Perturbed { r0: r, seed, amplitude },
            other => return Err(Error::Config(format!("{} takes no radius", other.name()))),
        };
        with.validate()?;
        Ok(with)
    }

    pub fn grid_file(&mut self) -> Option<PathBuf> {
        let p = self.flags.grid_file.clone().or_else(|| self.file.get("grid-file").map(PathBuf::from))?;
        self.record("grid-file", p.display().to_string());
        Some(p)
    }

    pub fn model(&mut self) -> Result<ModelDescriptor> {
        let s = self
            .optional("model", self.flags.model.clone())?
            .ok_or_else(|| Error::Config("grid files need --model kind,c,dim".into()))?;
        parse_model(&s)
    }

    pub fn float_list(&mut self, key: &str, flag: Option<String>) -> Result<Option<Vec<f64>>> {
        self.optional(key, flag)?
            .map(|s| s.split(',').map(|t| parse_value(key, t)).collect())
            .transpose()
    }

    pub fn bool_list(&mut self, key: &str, flag: Option<String>) -> Result<Option<Vec<bool>>> {
        self.optional(key, flag)?
            .map(|s| s.split(',').map(|t| parse_value(key, t)).collect())
            .transpose()
    }

    /// Output directory: flag, then CURVFLOW_OUT, then config, then `curvflow-out`.
    pub fn out_dir(&self) -> PathBuf {
        self.flags
            .out
            .clone()
            .or_else(|| std::env::var_os("CURVFLOW_OUT").map(PathBuf::from))
            .or_else(|| self.file.get("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("curvflow-out"))
    }

    /// Resolved configuration (output directory excluded, so that the same
    /// run written to two places hashes identically).
    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.used
    }

    /// Takes over another resolver's values under `prefix.`.
    pub fn absorb(&mut self, prefix: &str, other: &Resolver) {
        for (k, v) in &other.used {
            self.used.insert(format!("{prefix}.{k}"), v.clone());
        }
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.used {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// `kind,c,dim`, e.g. `euclidean,0,3` or `cp,4,4` (real dimension).
pub fn parse_model(s: &str) -> Result<ModelDescriptor> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("model '{s}' must be kind,c,dim")));
    }
    Ok(ModelDescriptor {
        kind: ModelKind::parse(parts[0])?,
        c: parse_value("model curvature", parts[1])?,
        dim: parse_value("model dimension", parts[2])?,
    })
}
