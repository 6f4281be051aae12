//! Coefficient functions on `[0, 1]`: step functions, sampled grids,
//! closed-form parametric families and affine blends of these.
//!
//! [`Coefficient`] allows any sign (potentials `q`); [`Density`] wraps a
//! coefficient that is strictly positive everywhere (`rho`, `p`).
//!
//! JSON form (internally tagged by `"type"`):
//!
//! ```json
//! {"type": "step", "breaks": [0.5], "values": [4.0, 1.0]}
//! {"type": "grid", "samples": [1.0, 2.0, 3.0]}
//! {"type": "table", "x": [0.0, 0.5, 0.5, 1.0], "values": [1.0, 2.0, 3.0, 3.0]}
//! {"type": "family", "name": "quadratic", "params": [1.0, 1.0, 0.3]}
//! {"type": "blend", "terms": [{"weight": 0.5, "coefficient": {...}}, ...]}
//! ```
//!
//! Family parameter vectors:
//!
//! | name          | params                                   | value                                              |
//! |---------------|------------------------------------------|----------------------------------------------------|
//! | `constant`    | `[c]`                                    | `c`                                                |
//! | `linear`      | `[a, b]`                                 | `a + b x`                                          |
//! | `quadratic`   | `[c, a, x0]`                             | `c + a (x - x0)^2`                                 |
//! | `power`       | `[c, a_left, a_right, x0, p_left, p_right]` | `c + a_left (x0 - x)^p_left` left of `x0`, `c + a_right (x - x0)^p_right` right of it (`p >= 1`) |
//! | `exponential` | `[c, k]`                                 | `c exp(k x)`                                       |
//! | `sine`        | `[c, a, k, phase]`                       | `c + a sin(k pi x + phase)`                        |

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{self, Profile, Side};

/// Resolution used when positivity of a closed form has to be checked by sampling.
const POSITIVITY_RESOLUTION: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Constant,
    Linear,
    #[serde(alias = "quadratic-well")]
    Quadratic,
    Power,
    Exponential,
    Sine,
}

impl FamilyKind {
    fn arity(self) -> usize {
        match self {
            FamilyKind::Constant => 1,
            FamilyKind::Linear | FamilyKind::Exponential => 2,
            FamilyKind::Quadratic => 3,
            FamilyKind::Sine => 4,
            FamilyKind::Power => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub name: FamilyKind,
    pub params: Vec<f64>,
}

impl Family {
    fn validate(&self) -> Result<()> {
        if self.params.len() != self.name.arity() {
            return Err(Error::InvalidCoefficient(format!(
                "family {:?} takes {} parameters, got {}",
                self.name,
                self.name.arity(),
                self.params.len()
            )));
        }
        if self.params.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCoefficient("non-finite family parameter".into()));
        }
        if self.name == FamilyKind::Power {
            let x0 = self.params[3];
            if !(0.0..=1.0).contains(&x0) {
                return Err(Error::InvalidCoefficient(format!("power family x0 = {x0} outside [0, 1]")));
            }
            if self.params[4] < 1.0 || self.params[5] < 1.0 {
                return Err(Error::InvalidCoefficient("power family exponents must be >= 1".into()));
            }
        }
        Ok(())
    }

    fn eval(&self, x: f64, side: Side) -> f64 {
        let p = &self.params;
        match self.name {
            FamilyKind::Constant => p[0],
            FamilyKind::Linear => p[0] + p[1] * x,
            FamilyKind::Quadratic => p[0] + p[1] * (x - p[2]).powi(2),
            FamilyKind::Power => {
                let x0 = p[3];
                if x < x0 || (x == x0 && side == Side::Left) {
                    p[0] + p[1] * (x0 - x).powf(p[4])
                } else {
                    p[0] + p[2] * (x - x0).powf(p[5])
                }
            }
            FamilyKind::Exponential => p[0] * (p[1] * x).exp(),
            FamilyKind::Sine => p[0] + p[1] * (p[2] * PI * x + p[3]).sin(),
        }
    }

    fn slope(&self, x: f64, side: Side) -> f64 {
        let p = &self.params;
        match self.name {
            FamilyKind::Constant => 0.0,
            FamilyKind::Linear => p[1],
            FamilyKind::Quadratic => 2.0 * p[1] * (x - p[2]),
            FamilyKind::Power => {
                let x0 = p[3];
                if x < x0 || (x == x0 && side == Side::Left) {
                    -p[1] * p[4] * (x0 - x).powf(p[4] - 1.0)
                } else {
                    p[2] * p[5] * (x - x0).powf(p[5] - 1.0)
                }
            }
            FamilyKind::Exponential => p[0] * p[1] * (p[1] * x).exp(),
            FamilyKind::Sine => p[1] * p[2] * PI * (p[2] * PI * x + p[3]).cos(),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self.name {
            FamilyKind::Power if self.params[3] > 0.0 && self.params[3] < 1.0 => vec![self.params[3]],
            _ => vec![],
        }
    }

    fn reflect(&self) -> Family {
        let p = &self.params;
        let params = match self.name {
            FamilyKind::Constant => p.clone(),
            FamilyKind::Linear => vec![p[0] + p[1], -p[1]],
            FamilyKind::Quadratic => vec![p[0], p[1], 1.0 - p[2]],
            FamilyKind::Power => vec![p[0], p[2], p[1], 1.0 - p[3], p[5], p[4]],
            FamilyKind::Exponential => vec![p[0] * p[1].exp(), -p[1]],
            FamilyKind::Sine => vec![p[0], -p[1], p[2], -p[2] * PI - p[3]],
        };
        Family { name: self.name, params }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlendTerm {
    pub weight: f64,
    pub coefficient: Coefficient,
}

/// A real function on `[0, 1]` in one of the supported representations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", try_from = "RawCoefficient")]
pub enum Coefficient {
    /// Piecewise constant, right-continuous; `values.len() == breaks.len() + 1`.
    Step { breaks: Vec<f64>, values: Vec<f64> },
    /// Uniform samples on `[0, 1]`, linearly interpolated.
    Grid { samples: Vec<f64> },
    /// Piecewise linear through `(x_i, values_i)`; `x` runs from `0` to `1`,
    /// and a knot repeated twice marks a jump.
    Table { x: Vec<f64>, values: Vec<f64> },
    Family(Family),
    /// `sum(weight_i * coefficient_i)`.
    Blend { terms: Vec<BlendTerm> },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
enum RawCoefficient {
    Step { breaks: Vec<f64>, values: Vec<f64> },
    Grid { samples: Vec<f64> },
    Table { x: Vec<f64>, values: Vec<f64> },
    Family(Family),
    Blend { terms: Vec<BlendTerm> },
}

impl TryFrom<RawCoefficient> for Coefficient {
    type Error = Error;

    fn try_from(raw: RawCoefficient) -> Result<Self> {
        let c = match raw {
            RawCoefficient::Step { breaks, values } => Coefficient::Step { breaks, values },
            RawCoefficient::Grid { samples } => Coefficient::Grid { samples },
            RawCoefficient::Table { x, values } => Coefficient::Table { x, values },
            RawCoefficient::Family(f) => Coefficient::Family(f),
            RawCoefficient::Blend { terms } => Coefficient::Blend { terms },
        };
        c.validate()?;
        Ok(c)
    }
}

impl Coefficient {
    pub fn constant(c: f64) -> Self {
        Coefficient::Family(Family { name: FamilyKind::Constant, params: vec![c] })
    }

    pub fn step(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let c = Coefficient::Step { breaks, values };
        c.validate()?;
        Ok(c)
    }

    pub fn grid(samples: Vec<f64>) -> Result<Self> {
        let c = Coefficient::Grid { samples };
        c.validate()?;
        Ok(c)
    }

    pub fn table(x: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let c = Coefficient::Table { x, values };
        c.validate()?;
        Ok(c)
    }

    pub fn family(name: FamilyKind, params: Vec<f64>) -> Result<Self> {
        let c = Coefficient::Family(Family { name, params });
        c.validate()?;
        Ok(c)
    }

    pub fn blend(terms: Vec<(f64, Coefficient)>) -> Result<Self> {
        let c = Coefficient::Blend {
            terms: terms.into_iter().map(|(weight, coefficient)| BlendTerm { weight, coefficient }).collect(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Coefficient::Step { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    return Err(Error::InvalidCoefficient(format!(
                        "step with {} breakpoints needs {} values, got {}",
                        breaks.len(),
                        breaks.len() + 1,
                        values.len()
                    )));
                }
                if breaks.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
                    return Err(Error::InvalidCoefficient("step breakpoints must lie in (0, 1)".into()));
                }
                if breaks.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidCoefficient("step breakpoints must be strictly increasing".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidCoefficient("non-finite step value".into()));
                }
            }
            Coefficient::Grid { samples } => {
                if samples.len() < 3 {
                    return Err(Error::InvalidCoefficient(format!(
                        "grid needs at least 3 samples, got {}",
                        samples.len()
                    )));
                }
                if samples.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidCoefficient("non-finite grid sample".into()));
                }
            }
            Coefficient::Table { x, values } => {
                if x.len() < 2 || x.len() != values.len() {
                    return Err(Error::InvalidCoefficient(format!(
                        "table needs matching knots and values (at least 2), got {} and {}",
                        x.len(),
                        values.len()
                    )));
                }
                if x[0] != 0.0 || x[x.len() - 1] != 1.0 {
                    return Err(Error::InvalidCoefficient("table knots must run from 0 to 1".into()));
                }
                if x.windows(2).any(|w| !(w[0] <= w[1])) || x.windows(3).any(|w| w[0] == w[2]) {
                    return Err(Error::InvalidCoefficient(
                        "table knots must be nondecreasing with at most two copies of each".into(),
                    ));
                }
                if x[0] == x[1] || x[x.len() - 2] == x[x.len() - 1] {
                    return Err(Error::InvalidCoefficient("table jumps must be interior".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidCoefficient("non-finite table value".into()));
                }
            }
            Coefficient::Family(f) => f.validate()?,
            Coefficient::Blend { terms } => {
                if terms.is_empty() {
                    return Err(Error::InvalidCoefficient("blend needs at least one term".into()));
                }
                for t in terms {
                    if !t.weight.is_finite() {
                        return Err(Error::InvalidCoefficient("non-finite blend weight".into()));
                    }
                    t.coefficient.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Checked evaluation: right-continuous, with the last piece at `x = 1`.
    pub fn eval_at(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain { x });
        }
        Ok(self.eval(x, Side::Right))
    }

    /// The mirror image `x -> 1 - x`.
    pub fn reflect(&self) -> Coefficient {
        match self {
            Coefficient::Step { breaks, values } => Coefficient::Step {
                breaks: breaks.iter().rev().map(|b| 1.0 - b).collect(),
                values: values.iter().rev().copied().collect(),
            },
            Coefficient::Grid { samples } => Coefficient::Grid { samples: samples.iter().rev().copied().collect() },
            Coefficient::Table { x, values } => Coefficient::Table {
                x: x.iter().rev().map(|t| 1.0 - t).collect(),
                values: values.iter().rev().copied().collect(),
            },
            Coefficient::Family(f) => Coefficient::Family(f.reflect()),
            Coefficient::Blend { terms } => Coefficient::Blend {
                terms: terms
                    .iter()
                    .map(|t| BlendTerm { weight: t.weight, coefficient: t.coefficient.reflect() })
                    .collect(),
            },
        }
    }

    /// `self + weight * other`.
    pub fn plus(&self, weight: f64, other: &Coefficient) -> Coefficient {
        Coefficient::Blend {
            terms: vec![
                BlendTerm { weight: 1.0, coefficient: self.clone() },
                BlendTerm { weight, coefficient: other.clone() },
            ],
        }
    }

    fn grid_cell(samples: &[f64], x: f64, side: Side) -> (usize, f64) {
        let cells = samples.len() - 1;
        let s = x.clamp(0.0, 1.0) * cells as f64;
        let mut i = s.floor() as usize;
        if (side == Side::Left && s == i as f64 && i > 0) || i >= cells {
            i = i.saturating_sub(1).min(cells - 1);
        }
        (i, s - i as f64)
    }

    /// Segment `[x_i, x_{i+1}]` of positive length holding `t` on `side`.
    fn table_segment(x: &[f64], t: f64, side: Side) -> usize {
        let below = match side {
            Side::Right => x.partition_point(|&k| k <= t),
            Side::Left => x.partition_point(|&k| k < t),
        };
        below.saturating_sub(1).min(x.len() - 2)
    }
}

impl Profile for Coefficient {
    fn eval(&self, x: f64, side: Side) -> f64 {
        match self {
            Coefficient::Step { breaks, values } => {
                let i = match side {
                    Side::Right => breaks.partition_point(|&b| b <= x),
                    Side::Left => breaks.partition_point(|&b| b < x),
                };
                values[i]
            }
            Coefficient::Grid { samples } => {
                let (i, t) = Self::grid_cell(samples, x, side);
                samples[i] + t * (samples[i + 1] - samples[i])
            }
            Coefficient::Table { x: knots, values } => {
                let i = Self::table_segment(knots, x, side);
                let (x0, x1) = (knots[i], knots[i + 1]);
                let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
                values[i] + t * (values[i + 1] - values[i])
            }
            Coefficient::Family(f) => f.eval(x, side),
            Coefficient::Blend { terms } => terms.iter().map(|t| t.weight * t.coefficient.eval(x, side)).sum(),
        }
    }

    fn slope(&self, x: f64, side: Side) -> f64 {
        match self {
            Coefficient::Step { .. } => 0.0,
            Coefficient::Grid { samples } => {
                let (i, _) = Self::grid_cell(samples, x, side);
                (samples[i + 1] - samples[i]) * (samples.len() - 1) as f64
            }
            Coefficient::Table { x: knots, values } => {
                let i = Self::table_segment(knots, x, side);
                (values[i + 1] - values[i]) / (knots[i + 1] - knots[i])
            }
            Coefficient::Family(f) => f.slope(x, side),
            Coefficient::Blend { terms } => terms.iter().map(|t| t.weight * t.coefficient.slope(x, side)).sum(),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Coefficient::Step { breaks, .. } => breaks.clone(),
            Coefficient::Grid { samples } => {
                let cells = samples.len() - 1;
                (1..cells).map(|i| i as f64 / cells as f64).collect()
            }
            Coefficient::Table { x, .. } => {
                let mut b: Vec<f64> = x[1..x.len() - 1].to_vec();
                b.dedup();
                b
            }
            Coefficient::Family(f) => f.breakpoints(),
            Coefficient::Blend { terms } => {
                let sets: Vec<Vec<f64>> = terms.iter().map(|t| t.coefficient.breakpoints()).collect();
                profile::merge_points(&sets)
            }
        }
    }
}

/// A strictly positive coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Coefficient", into = "Coefficient")]
pub struct Density(Coefficient);

impl TryFrom<Coefficient> for Density {
    type Error = Error;

    fn try_from(c: Coefficient) -> Result<Self> {
        Density::new(c)
    }
}

impl From<Density> for Coefficient {
    fn from(d: Density) -> Coefficient {
        d.0
    }
}

impl Density {
    pub fn new(c: Coefficient) -> Result<Self> {
        c.validate()?;
        let min = match &c {
            Coefficient::Step { values, .. } => values.iter().copied().fold(f64::INFINITY, f64::min),
            Coefficient::Grid { samples } => samples.iter().copied().fold(f64::INFINITY, f64::min),
            Coefficient::Table { values, .. } => values.iter().copied().fold(f64::INFINITY, f64::min),
            _ => profile::bounds(&c, POSITIVITY_RESOLUTION).0,
        };
        if !(min > 0.0) {
            return Err(Error::InvalidCoefficient(format!("density must be positive, minimum is {min}")));
        }
        Ok(Density(c))
    }

    pub fn constant(c: f64) -> Result<Self> {
        Density::new(Coefficient::constant(c))
    }

    pub fn step(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Density::new(Coefficient::step(breaks, values)?)
    }

    pub fn grid(samples: Vec<f64>) -> Result<Self> {
        Density::new(Coefficient::grid(samples)?)
    }

    pub fn table(x: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Density::new(Coefficient::table(x, values)?)
    }

    pub fn family(name: FamilyKind, params: Vec<f64>) -> Result<Self> {
        Density::new(Coefficient::family(name, params)?)
    }

    /// `tau * a + (1 - tau) * b`.
    pub fn blend(a: &Density, b: &Density, tau: f64) -> Result<Self> {
        Density::new(Coefficient::blend(vec![(tau, a.0.clone()), (1.0 - tau, b.0.clone())])?)
    }

    pub fn coefficient(&self) -> &Coefficient {
        &self.0
    }

    pub fn eval_at(&self, x: f64) -> Result<f64> {
        self.0.eval_at(x)
    }

    pub fn reflect(&self) -> Density {
        Density(self.0.reflect())
    }

    pub fn is_step(&self) -> bool {
        matches!(self.0, Coefficient::Step { .. })
    }

    /// Sampled `(min, max)`; exact for steps and grids.
    pub fn bounds(&self) -> (f64, f64) {
        match &self.0 {
            Coefficient::Step { values, .. } => minmax(values),
            Coefficient::Grid { samples } => minmax(samples),
            Coefficient::Table { values, .. } => minmax(values),
            c => profile::bounds(c, 1024),
        }
    }
}

fn minmax(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

impl Profile for Density {
    fn eval(&self, x: f64, side: Side) -> f64 {
        self.0.eval(x, side)
    }
    fn slope(&self, x: f64, side: Side) -> f64 {
        self.0.slope(x, side)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.0.breakpoints()
    }
}

/// Coefficients of `-(p y')' + q y = lambda rho y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub p: Density,
    pub q: Coefficient,
    pub rho: Density,
}

impl CoefficientSet {
    /// The string equation `-y'' = lambda rho y`.
    pub fn string(rho: Density) -> Self {
        CoefficientSet { p: Density::constant(1.0).expect("constant"), q: Coefficient::constant(0.0), rho }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    DirichletDirichlet,
    NeumannNeumann,
    /// `y(a) = 0`, `y'(b) = 0`.
    DirichletNeumann,
    /// `y'(a) = 0`, `y(b) = 0`.
    NeumannDirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub kind: BoundaryKind,
    pub interval: (f64, f64),
}

impl BoundarySpec {
    pub fn new(kind: BoundaryKind, a: f64, b: f64) -> Result<Self> {
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(Error::InvalidCoefficient(format!("interval [{a}, {b}] is not inside [0, 1]")));
        }
        Ok(BoundarySpec { kind, interval: (a, b) })
    }

    /// `y(0) = y(1) = 0`.
    pub fn dirichlet() -> Self {
        BoundarySpec { kind: BoundaryKind::DirichletDirichlet, interval: (0.0, 1.0) }
    }

    /// `y(0) = y'(1/2) = 0`.
    pub fn hat() -> Self {
        BoundarySpec { kind: BoundaryKind::DirichletNeumann, interval: (0.0, 0.5) }
    }

    /// `y'(1/2) = y(1) = 0`.
    pub fn tilde() -> Self {
        BoundarySpec { kind: BoundaryKind::NeumannDirichlet, interval: (0.5, 1.0) }
    }

    pub fn neumann_left_half() -> Self {
        BoundarySpec { kind: BoundaryKind::NeumannNeumann, interval: (0.0, 0.5) }
    }

    pub fn neumann_right_half() -> Self {
        BoundarySpec { kind: BoundaryKind::NeumannNeumann, interval: (0.5, 1.0) }
    }

    pub fn dirichlet_left(&self) -> bool {
        matches!(self.kind, BoundaryKind::DirichletDirichlet | BoundaryKind::DirichletNeumann)
    }

    pub fn dirichlet_right(&self) -> bool {
        matches!(self.kind, BoundaryKind::DirichletDirichlet | BoundaryKind::NeumannDirichlet)
    }
}
