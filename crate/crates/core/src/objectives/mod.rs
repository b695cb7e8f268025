//! Benchmark objectives: analytic test functions with optional shift and
//! rotation, the one-dimensional demo function, and external processes
//! speaking a line-oriented stdio protocol.

mod analytic;
mod external;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use crate::doe::SearchBox;
use crate::error::{config_err, contract_err, Error, Result};
use crate::scalar::Scalar;

pub use analytic::{ackley, ellipsoid, fig1_demo, griewank, levy, rastrigin, rosenbrock, sphere};
pub use external::{external_eval, ExternalObjective};

/// Anything the optimizers can query.
pub trait Objective<T>: Send {
    fn dim(&self) -> usize;
    fn evaluate(&mut self, x: &[T]) -> Result<T>;
}

/// Adapts a closure into an [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<T, F> Objective<T> for FnObjective<F>
where
    F: FnMut(&[T]) -> T + Send,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&mut self, x: &[T]) -> Result<T> {
        Ok((self.f)(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    Sphere,
    Ellipsoid,
    Rosenbrock,
    Ackley,
    Rastrigin,
    Griewank,
    Levy,
    Fig1Demo,
    External,
}

impl ObjectiveKind {
    pub const ANALYTIC: [ObjectiveKind; 8] = [
        ObjectiveKind::Sphere,
        ObjectiveKind::Ellipsoid,
        ObjectiveKind::Rosenbrock,
        ObjectiveKind::Ackley,
        ObjectiveKind::Rastrigin,
        ObjectiveKind::Griewank,
        ObjectiveKind::Levy,
        ObjectiveKind::Fig1Demo,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            ObjectiveKind::Sphere => "sphere",
            ObjectiveKind::Ellipsoid => "ellipsoid",
            ObjectiveKind::Rosenbrock => "rosenbrock",
            ObjectiveKind::Ackley => "ackley",
            ObjectiveKind::Rastrigin => "rastrigin",
            ObjectiveKind::Griewank => "griewank",
            ObjectiveKind::Levy => "levy",
            ObjectiveKind::Fig1Demo => "fig1-demo",
            ObjectiveKind::External => "external",
        }
    }

    /// Conventional per-coordinate domain.
    pub fn default_interval(&self) -> Option<(f64, f64)> {
        Some(match self {
            ObjectiveKind::Sphere | ObjectiveKind::Ellipsoid => (-100.0, 100.0),
            ObjectiveKind::Ackley => (-32.768, 32.768),
            ObjectiveKind::Rastrigin => (-5.12, 5.12),
            ObjectiveKind::Griewank => (-600.0, 600.0),
            ObjectiveKind::Levy => (-10.0, 10.0),
            ObjectiveKind::Rosenbrock => (-5.0, 10.0),
            ObjectiveKind::Fig1Demo => (-5.0, 5.0),
            ObjectiveKind::External => return None,
        })
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ObjectiveKind::ANALYTIC
            .into_iter()
            .chain([ObjectiveKind::External])
            .find(|k| k.tag() == s)
            .ok_or_else(|| config_err!("unknown objective kind '{s}'"))
    }
}

/// Command line and per-request timeout of an external objective.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalCommand {
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec<T> {
    pub kind: ObjectiveKind,
    pub bounds: SearchBox<T>,
    pub shift: Option<Vec<T>>,
    /// Row-major orthogonal matrix applied after the shift.
    pub rotation: Option<Vec<Vec<T>>>,
    pub external: Option<ExternalCommand>,
}

impl<T: Scalar> ObjectiveSpec<T> {
    /// Untransformed analytic objective on its default domain.
    pub fn analytic(kind: ObjectiveKind, dim: usize) -> Result<Self> {
        let (lo, hi) = kind
            .default_interval()
            .ok_or_else(|| config_err!("{kind} has no default domain"))?;
        if kind == ObjectiveKind::Fig1Demo && dim != 1 {
            return Err(config_err!("fig1-demo is one-dimensional"));
        }
        Ok(Self {
            kind,
            bounds: SearchBox::uniform(dim, T::lit(lo), T::lit(hi))?,
            shift: None,
            rotation: None,
            external: None,
        })
    }

    pub fn external(command: ExternalCommand, bounds: SearchBox<T>) -> Self {
        Self {
            kind: ObjectiveKind::External,
            bounds,
            shift: None,
            rotation: None,
            external: Some(command),
        }
    }

    pub fn with_shift(mut self, shift: Vec<T>) -> Result<Self> {
        if !self.bounds.contains(&shift) {
            return Err(config_err!("shift must lie inside the search box"));
        }
        self.shift = Some(shift);
        Ok(self)
    }

    pub fn with_rotation(mut self, rotation: Vec<Vec<T>>) -> Result<Self> {
        let dim = self.dim();
        if rotation.len() != dim || rotation.iter().any(|r| r.len() != dim) {
            return Err(config_err!("rotation must be {dim}×{dim}"));
        }
        let tol = T::lit(1e-10).max(T::epsilon() * T::lit(64.0 * dim as f64));
        for i in 0..dim {
            for j in 0..dim {
                let v: T = (0..dim).map(|k| rotation[k][i] * rotation[k][j]).sum();
                let target = if i == j { T::one() } else { T::zero() };
                if (v - target).abs() > tol {
                    return Err(config_err!("rotation is not orthogonal at ({i}, {j})"));
                }
            }
        }
        self.rotation = Some(rotation);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    /// `Q (x − s)`, identity parts omitted.
    pub fn transform(&self, x: &[T]) -> Vec<T> {
        let shifted: Vec<T> = match &self.shift {
            Some(s) => x.iter().zip(s).map(|(a, b)| *a - *b).collect(),
            None => x.to_vec(),
        };
        match &self.rotation {
            Some(q) => q.iter().map(|row| crate::scalar::dot(row, &shifted)).collect(),
            None => shifted,
        }
    }

    /// Analytic value at `x`; external kinds must go through [`Self::build`].
    pub fn evaluate(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dim() {
            return Err(contract_err!("point of dimension {} for a {}-d objective", x.len(), self.dim()));
        }
        let z = self.transform(x);
        Ok(match self.kind {
            ObjectiveKind::Sphere => sphere(&z),
            ObjectiveKind::Ellipsoid => ellipsoid(&z),
            ObjectiveKind::Rosenbrock => rosenbrock(&z),
            ObjectiveKind::Ackley => ackley(&z),
            ObjectiveKind::Rastrigin => rastrigin(&z),
            ObjectiveKind::Griewank => griewank(&z),
            ObjectiveKind::Levy => levy(&z),
            ObjectiveKind::Fig1Demo => fig1_demo(z[0]),
            ObjectiveKind::External => {
                return Err(contract_err!("external objectives need a running process; use build()"))
            }
        })
    }

    /// Instantiates a queryable objective. External kinds spawn their process.
    pub fn build(&self) -> Result<Box<dyn Objective<T>>> {
        match (&self.kind, &self.external) {
            (ObjectiveKind::External, Some(cmd)) => Ok(Box::new(ExternalObjective::spawn(cmd, self.dim())?)),
            (ObjectiveKind::External, None) => Err(config_err!("external objective without a command")),
            _ => Ok(Box::new(AnalyticObjective { spec: self.clone() })),
        }
    }
}

struct AnalyticObjective<T> {
    spec: ObjectiveSpec<T>,
}

impl<T: Scalar> Objective<T> for AnalyticObjective<T> {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn evaluate(&mut self, x: &[T]) -> Result<T> {
        self.spec.evaluate(x)
    }
}

/// Evaluates `spec` at `x`.
pub fn evaluate<T: Scalar>(spec: &ObjectiveSpec<T>, x: &[T]) -> Result<T> {
    spec.evaluate(x)
}
