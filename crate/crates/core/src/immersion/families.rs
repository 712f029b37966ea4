//! Built-in test immersions and the tabulated grid-file format.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::{ParametrizedImmersion, DEFAULT_GRAM_EPS};
use crate::ambient::AmbientModel;
use crate::error::{Error, Result};
use crate::parallel::{IsoparametricSpectrum, SpectrumEntry};
use crate::tensor::Vector;

/// Named immersion families with closed-form parametrizations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    PlaneR3,
    SphereR3 { r0: f64 },
    CliffordTorusS3,
    /// Totally geodesic S^n in the unit S^{n+1}, n ∈ {2, 3}.
    EquatorSphere { n: usize },
    HyperbolicSphereH3 { r0: f64 },
    /// Geodesic sphere of radius r0 in CP² with holomorphic curvature 4.
    Cp2GeodesicSphere { r0: f64 },
    Cp2Perturbed { r0: f64, seed: u64, amplitude: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyInfo {
    pub name: String,
    pub ambient: String,
    pub dim: usize,
    pub status: String,
}

/// Radius used by the perturbed CP² example.
const CP2_PERTURBED_RADIUS: f64 = 0.7;

fn parse_args(s: &str) -> Result<(String, Vec<String>)> {
    let s = s.trim();
    match s.find('(') {
        None => Ok((s.to_string(), vec![])),
        Some(open) => {
            if !s.ends_with(')') {
                return Err(Error::Config(format!("unbalanced parentheses in '{s}'")));
            }
            let args = s[open + 1..s.len() - 1]
                .split(',')
                .map(|a| a.trim().to_string())
                .filter(|a| !a.is_empty())
                .collect();
            Ok((s[..open].trim().to_string(), args))
        }
    }
}

fn num<T: std::str::FromStr>(args: &[String], i: usize, default: Option<T>, what: &str) -> Result<T> {
    match args.get(i) {
        Some(a) => a.parse().map_err(|_| Error::Config(format!("bad {what} '{a}'"))),
        None => default.ok_or_else(|| Error::Config(format!("missing {what}"))),
    }
}

impl Family {
    /// Parses names such as `sphere-r3(1.0)` or `cp2-perturbed(7, 0.05)`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, args) = parse_args(s)?;
        let fam = match name.as_str() {
            "plane-r3" => Family::PlaneR3,
            "sphere-r3" => Family::SphereR3 { r0: num(&args, 0, Some(1.0), "radius")? },
            "clifford-torus-s3" => Family::CliffordTorusS3,
            "equator-s3" => Family::EquatorSphere { n: 2 },
            "equator-s4" => Family::EquatorSphere { n: 3 },
            "equator-s" => Family::EquatorSphere { n: num::<usize>(&args, 0, Some(3), "dimension")? - 1 },
            "hyperbolic-sphere-h3" => Family::HyperbolicSphereH3 { r0: num(&args, 0, Some(1.0), "radius")? },
            "cp2-geodesic-sphere" => Family::Cp2GeodesicSphere { r0: num(&args, 0, Some(0.7), "radius")? },
            "cp2-perturbed" => Family::Cp2Perturbed {
                r0: CP2_PERTURBED_RADIUS,
                seed: num(&args, 0, Some(1), "seed")?,
                amplitude: num(&args, 1, Some(0.05), "amplitude")?,
            },
            other => return Err(Error::Config(format!("unknown example '{other}'"))),
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        match *self {
            Family::SphereR3 { r0 } | Family::HyperbolicSphereH3 { r0 } if !(r0 > 0.0 && r0.is_finite()) => {
                bad("radius must be positive")
            }
            Family::Cp2GeodesicSphere { r0 } if !(r0 > 0.0 && r0 < PI / 2.0) => bad("CP² radius must lie in (0, π/2)"),
            Family::EquatorSphere { n } if !(2..=3).contains(&n) => bad("equator dimension must be 2 or 3"),
            Family::Cp2Perturbed { amplitude, .. } if !(amplitude.abs() < 0.5) => bad("amplitude must be below 0.5"),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Family::PlaneR3 => "plane-r3".into(),
            Family::SphereR3 { r0 } => format!("sphere-r3({r0})"),
            Family::CliffordTorusS3 => "clifford-torus-s3".into(),
            Family::EquatorSphere { n } => format!("equator-s{}", n + 1),
            Family::HyperbolicSphereH3 { r0 } => format!("hyperbolic-sphere-h3({r0})"),
            Family::Cp2GeodesicSphere { r0 } => format!("cp2-geodesic-sphere({r0})"),
            Family::Cp2Perturbed { seed, amplitude, .. } => format!("cp2-perturbed({seed}, {amplitude})"),
        }
    }

    /// Parameter dimension n.
    pub fn dim(&self) -> usize {
        match self {
            Family::PlaneR3 | Family::SphereR3 { .. } | Family::CliffordTorusS3 | Family::HyperbolicSphereH3 { .. } => 2,
            Family::EquatorSphere { n } => *n,
            Family::Cp2GeodesicSphere { .. } | Family::Cp2Perturbed { .. } => 3,
        }
    }

    pub fn ambient(&self) -> AmbientModel {
        let m = match self {
            Family::PlaneR3 | Family::SphereR3 { .. } => Ok(AmbientModel::euclidean(3)),
            Family::CliffordTorusS3 => AmbientModel::sphere(1.0, 3),
            Family::EquatorSphere { n } => AmbientModel::sphere(1.0, n + 1),
            Family::HyperbolicSphereH3 { .. } => AmbientModel::hyperbolic(-1.0, 3),
            Family::Cp2GeodesicSphere { .. } | Family::Cp2Perturbed { .. } => AmbientModel::complex_projective(4.0, 2),
        };
        m.expect("built-in ambient models are valid")
    }

    pub fn status(&self) -> &'static str {
        match self {
            Family::PlaneR3 => "curvature-adapted (trivially)",
            Family::SphereR3 { .. }
            | Family::CliffordTorusS3
            | Family::EquatorSphere { .. }
            | Family::HyperbolicSphereH3 { .. } => "curvature-adapted (real space form)",
            Family::Cp2GeodesicSphere { .. } => "curvature-adapted (Hopf)",
            Family::Cp2Perturbed { .. } => "generically not curvature-adapted",
        }
    }

    pub fn info(&self) -> FamilyInfo {
        let amb = self.ambient();
        FamilyInfo {
            name: self.name(),
            ambient: format!("{}(c={}, dim={})", amb.kind().name(), amb.c(), amb.dim()),
            dim: self.dim(),
            status: self.status().into(),
        }
    }

    pub fn default_shape(&self) -> Vec<usize> {
        vec![if self.dim() == 2 { 64 } else { 24 }; self.dim()]
    }

    /// Parameter box `(lo, hi, wrap)`; periodic axes exclude `hi`.
    pub fn domain(&self) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
        let polar = (FRAC_PI_4, 3.0 * FRAC_PI_4);
        match self {
            Family::PlaneR3 => (vec![-1.0, -1.0], vec![1.0, 1.0], vec![false, false]),
            Family::SphereR3 { .. } | Family::HyperbolicSphereH3 { .. } | Family::EquatorSphere { n: 2 } => {
                (vec![polar.0, 0.0], vec![polar.1, TAU], vec![false, true])
            }
            Family::EquatorSphere { .. } => {
                (vec![polar.0, polar.0, 0.0], vec![polar.1, polar.1, TAU], vec![false, false, true])
            }
            Family::CliffordTorusS3 => (vec![0.0, 0.0], vec![TAU, TAU], vec![true, true]),
            Family::Cp2GeodesicSphere { .. } | Family::Cp2Perturbed { .. } => {
                (vec![PI / 8.0, 0.0, 0.0], vec![3.0 * PI / 8.0, TAU, TAU], vec![false, true, true])
            }
        }
    }

    /// Orientation making ξ outward (H > 0 on the round spheres).
    pub fn orientation(&self) -> f64 {
        1.0
    }

    /// The chart map at parameter `u`.
    pub fn map(&self, u: &[f64]) -> Vector {
        let polar_sphere = |rho: f64, th: f64, ph: f64| {
            Vector::from_vec(vec![rho * th.sin() * ph.cos(), rho * th.sin() * ph.sin(), rho * th.cos()])
        };
        match self {
            Family::PlaneR3 => Vector::from_vec(vec![u[0], u[1], 0.0]),
            Family::SphereR3 { r0 } => polar_sphere(*r0, u[0], u[1]),
            Family::HyperbolicSphereH3 { r0 } => polar_sphere(2.0 * (r0 / 2.0).tanh(), u[0], u[1]),
            Family::EquatorSphere { n: 2 } => polar_sphere(2.0, u[0], u[1]),
            Family::EquatorSphere { .. } => {
                let (a, b, ph) = (u[0], u[1], u[2]);
                Vector::from_vec(vec![
                    2.0 * a.sin() * b.sin() * ph.cos(),
                    2.0 * a.sin() * b.sin() * ph.sin(),
                    2.0 * a.sin() * b.cos(),
                    2.0 * a.cos(),
                ])
            }
            Family::CliffordTorusS3 => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let y = [s * u[0].cos(), s * u[0].sin(), s * u[1].cos(), s * u[1].sin()];
                let k = 2.0 / (1.0 - y[3]);
                Vector::from_vec(vec![k * y[0], k * y[1], k * y[2]])
            }
            Family::Cp2GeodesicSphere { r0 } => cp2_sphere_point(*r0, u),
            Family::Cp2Perturbed { r0, seed, amplitude } => {
                let r = r0 * (1.0 + amplitude * perturbation(*seed, u));
                cp2_sphere_point(r, u)
            }
        }
    }

    pub fn build(&self, shape: &[usize]) -> Result<ParametrizedImmersion> {
        let (lo, hi, wrap) = self.domain();
        if shape.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: shape.len() });
        }
        let grid = Grid::spanning(shape, &lo, &hi, &wrap)?;
        ParametrizedImmersion::from_fn(grid, self.ambient(), self.orientation(), |u| self.map(u))
    }

    pub fn build_default(&self) -> Result<ParametrizedImmersion> {
        self.build(&self.default_shape())
    }

    /// A small non-periodic patch of `size` points per axis with spacing `h`,
    /// centred at parameter `center`.
    pub fn build_patch(&self, center: &[f64], h: f64, size: usize) -> Result<ParametrizedImmersion> {
        let n = self.dim();
        let half = (size as f64 - 1.0) / 2.0;
        let origin: Vec<f64> = center.iter().map(|c| c - half * h).collect();
        let grid = Grid::new(vec![size; n], origin, vec![h; n], vec![false; n])?;
        ParametrizedImmersion::from_fn(grid, self.ambient(), self.orientation(), |u| self.map(u))
    }

    /// The parallel hypersurface at normal offset `r`, for families closed
    /// under the end-point map.
    pub fn with_offset(&self, r: f64) -> Result<Family> {
        let radius = |r0: f64| {
            if r0 + r > 0.0 {
                Ok(r0 + r)
            } else {
                Err(Error::Focal { r, coefficient: r0 + r })
            }
        };
        match self {
            Family::SphereR3 { r0 } => Ok(Family::SphereR3 { r0: radius(*r0)? }),
            Family::HyperbolicSphereH3 { r0 } => Ok(Family::HyperbolicSphereH3 { r0: radius(*r0)? }),
            Family::Cp2GeodesicSphere { r0 } if *r0 + r < FRAC_PI_2 => {
                Ok(Family::Cp2GeodesicSphere { r0: radius(*r0)? })
            }
            Family::PlaneR3 | Family::CliffordTorusS3 | Family::EquatorSphere { .. } if r == 0.0 => Ok(self.clone()),
            _ => Err(Error::Input(format!("{} has no closed-form parallel family at offset {r}", self.name()))),
        }
    }

    /// Principal data (λ, ν, multiplicity) when the family is isoparametric.
    pub fn spectrum(&self) -> Option<IsoparametricSpectrum> {
        let e = |lambda: f64, nu: f64, mult: usize| SpectrumEntry { lambda, nu, mult };
        let amb = self.ambient().kind().name().to_string();
        let entries = match self {
            Family::PlaneR3 => vec![e(0.0, 0.0, 2)],
            Family::SphereR3 { r0 } => vec![e(1.0 / r0, 0.0, 2)],
            Family::CliffordTorusS3 => vec![e(1.0, 1.0, 1), e(-1.0, 1.0, 1)],
            Family::EquatorSphere { n } => vec![e(0.0, 1.0, *n)],
            Family::HyperbolicSphereH3 { r0 } => vec![e(1.0 / r0.tanh(), -1.0, 2)],
            Family::Cp2GeodesicSphere { r0 } => return IsoparametricSpectrum::cp2_geodesic_sphere(*r0).ok(),
            Family::Cp2Perturbed { .. } => return None,
        };
        IsoparametricSpectrum::new(entries, amb).ok()
    }

    /// A parameter point well inside the domain, used as a patch centre.
    pub fn sample_center(&self) -> Vec<f64> {
        match self.dim() {
            2 => vec![1.3, 0.7],
            _ => vec![0.7, 0.9, 2.1],
        }
    }
}

fn cp2_sphere_point(r: f64, u: &[f64]) -> Vector {
    let t = r.tan();
    let (eta, p1, p2) = (u[0], u[1], u[2]);
    Vector::from_vec(vec![
        t * eta.cos() * p1.cos(),
        t * eta.cos() * p1.sin(),
        t * eta.sin() * p2.cos(),
        t * eta.sin() * p2.sin(),
    ])
}

/// A smooth seeded function on (η, φ₁, φ₂), periodic in the angles, |·| ≤ 1.
fn perturbation(seed: u64, u: &[f64]) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = 4;
    let mut s = 0.0;
    for _ in 0..modes {
        let m1 = rng.gen_range(-2i32..=2) as f64;
        let m2 = rng.gen_range(-2i32..=2) as f64;
        let k = rng.gen_range(1i32..=3) as f64;
        let phase = rng.gen::<f64>() * TAU;
        let amp = rng.gen::<f64>();
        s += amp * (m1 * u[1] + m2 * u[2] + 4.0 * k * u[0] + phase).cos();
    }
    s / modes as f64
}

/// Listing of all built-in families with their expected adaptedness status.
pub fn catalog() -> Vec<FamilyInfo> {
    [
        Family::PlaneR3,
        Family::SphereR3 { r0: 1.0 },
        Family::CliffordTorusS3,
        Family::EquatorSphere { n: 3 },
        Family::HyperbolicSphereH3 { r0: 1.0 },
        Family::Cp2GeodesicSphere { r0: 0.7 },
        Family::Cp2Perturbed { r0: CP2_PERTURBED_RADIUS, seed: 1, amplitude: 0.05 },
    ]
    .iter()
    .map(Family::info)
    .collect()
}

/// Parses a tabulated immersion: one line per grid point, `i j [k] x₁ … x_{n+1}`,
/// whitespace separated, `#` starts a comment. Parameter origin is 0.
pub fn parse_grid_file(
    text: &str,
    ambient: AmbientModel,
    spacing: &[f64],
    wrap: &[bool],
    orientation: f64,
) -> Result<ParametrizedImmersion> {
    let mut rows: Vec<(Vec<usize>, Vec<f64>)> = Vec::new();
    let mut n = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() % 2 == 0 || toks.len() < 5 {
            return Err(Error::Input(format!("line {}: expected 'i j [k] x1 .. x(n+1)'", lineno + 1)));
        }
        let dim = (toks.len() - 1) / 2;
        if *n.get_or_insert(dim) != dim {
            return Err(Error::Input(format!("line {}: inconsistent column count", lineno + 1)));
        }
        let idx = toks[..dim]
            .iter()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Input(format!("line {}: bad grid index", lineno + 1)))?;
        let x = toks[dim..]
            .iter()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Input(format!("line {}: bad coordinate", lineno + 1)))?;
        rows.push((idx, x));
    }
    let n = n.ok_or_else(|| Error::Input("grid file has no data".into()))?;
    if spacing.len() != n || wrap.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: spacing.len() });
    }
    let shape: Vec<usize> = (0..n).map(|d| rows.iter().map(|r| r.0[d]).max().unwrap_or(0) + 1).collect();
    let grid = Grid::new(shape, vec![0.0; n], spacing.to_vec(), wrap.to_vec())?;
    let mut points: Vec<Option<Vector>> = vec![None; grid.len()];
    for (idx, x) in rows {
        let k = grid.index(&idx);
        if points[k].replace(Vector::from_vec(x)).is_some() {
            return Err(Error::Input(format!("duplicate grid point {idx:?}")));
        }
    }
    let points = points
        .into_iter()
        .enumerate()
        .map(|(k, p)| p.ok_or_else(|| Error::Input(format!("missing grid point {:?}", grid.multi(k)))))
        .collect::<Result<Vec<_>>>()?;
    ParametrizedImmersion::new(grid, points, ambient, orientation, DEFAULT_GRAM_EPS)
}
