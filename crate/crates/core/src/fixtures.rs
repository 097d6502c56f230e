//! Catalog of closed-form space-time fields used as forward data, twin
//! references and audit test functions.

use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::grid::{ComplexField, StripGrid, TimeWindow};
use crate::jet::Jet;
use crate::profile::{Profile1D, ProfileContext};
use crate::scalar::{Cx, Real};

/// Field with closed-form derivatives.
pub trait ExactSolution<R: Real>: Send + Sync + Debug {
    fn name(&self) -> &str;

    /// Jet of the field: time derivatives to order 3, spatial to order 2.
    fn jet(&self, t: R, x1: R, x2: R) -> Jet<R>;

    /// Jet of the spatial Laplacian of the field.
    fn laplacian_jet(&self, t: R, x1: R, x2: R) -> Jet<R>;

    fn value(&self, t: R, x1: R, x2: R) -> Cx<R> {
        self.jet(t, x1, x2).value()
    }

    /// `false` when the field is known not to vary in `x1`.
    fn depends_on_x1(&self) -> bool {
        true
    }

    fn sample(&self, grid: StripGrid<R>, window: TimeWindow) -> ComplexField<R> {
        ComplexField::from_fn(grid, window, |n, i, j| self.value(grid.t(n), grid.x1(i), grid.x2(j)))
    }
}

/// Complex time factor of a separable term.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeFactor<R> {
    Const,
    /// `exp(i ω t)`.
    Phase { omega: R },
    /// Smooth bump supported in `|t| < half_width`.
    Bump { half_width: R },
}

impl<R: Real> TimeFactor<R> {
    /// `[f, f', f'', f''']`.
    pub fn derivatives(&self, t: R) -> [Cx<R>; 4] {
        let z = Cx::new(R::zero(), R::zero());
        match self {
            TimeFactor::Const => [Cx::new(R::one(), R::zero()), z, z, z],
            TimeFactor::Phase { omega } => {
                let e = Cx::new(R::zero(), *omega * t).exp();
                let iw = Cx::new(R::zero(), *omega);
                [e, e * iw, e * iw * iw, e * iw * iw * iw]
            }
            TimeFactor::Bump { half_width } => {
                let d = Profile1D::Bump { center: R::zero(), half_width: *half_width }.derivatives(t);
                [0, 1, 2, 3].map(|k| Cx::new(d[k], R::zero()))
            }
        }
    }
}

/// One term `c · f(t) · g(x1) · h(x2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableTerm<R> {
    pub coef: Cx<R>,
    pub time: TimeFactor<R>,
    pub x1: Profile1D<R>,
    pub x2: Profile1D<R>,
}

/// Finite sum of separable terms.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableSolution<R> {
    name: String,
    terms: Vec<SeparableTerm<R>>,
}

// (x1 order, x2 order) of the six jet slots
const SLOTS: [(usize, usize); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];

impl<R: Real> SeparableSolution<R> {
    pub fn new(name: impl Into<String>, terms: Vec<SeparableTerm<R>>) -> Self {
        SeparableSolution { name: name.into(), terms }
    }

    fn build(&self, t: R, x1: R, x2: R, lap: bool) -> Jet<R> {
        let zero = Cx::new(R::zero(), R::zero());
        let mut d = [[zero; 6]; 4];
        for term in &self.terms {
            let ft = term.time.derivatives(t);
            let f = term.x1.derivatives(x1);
            let g = term.x2.derivatives(x2);
            for (s, &(a, b)) in SLOTS.iter().enumerate() {
                let sp = if lap { f[a + 2] * g[b] + f[a] * g[b + 2] } else { f[a] * g[b] };
                if sp == R::zero() {
                    continue;
                }
                for k in 0..4 {
                    d[k][s] = d[k][s] + term.coef * ft[k] * sp;
                }
            }
        }
        Jet::from_derivatives(d)
    }
}

impl<R: Real> ExactSolution<R> for SeparableSolution<R> {
    fn name(&self) -> &str {
        &self.name
    }

    fn jet(&self, t: R, x1: R, x2: R) -> Jet<R> {
        self.build(t, x1, x2, false)
    }

    fn laplacian_jet(&self, t: R, x1: R, x2: R) -> Jet<R> {
        self.build(t, x1, x2, true)
    }

    fn value(&self, t: R, x1: R, x2: R) -> Cx<R> {
        self.terms.iter().fold(Cx::new(R::zero(), R::zero()), |acc, term| {
            acc + term.coef * term.time.derivatives(t)[0] * (term.x1.value(x1) * term.x2.value(x2))
        })
    }

    fn depends_on_x1(&self) -> bool {
        self.terms.iter().any(|t| !matches!(t.x1, Profile1D::Const(_)))
    }
}

pub const FIXTURE_NAMES: &[&str] = &["paper", "zero", "pure-phase", "bump", "time-independent"];

fn one<R: Real>() -> Cx<R> {
    Cx::new(R::one(), R::zero())
}

/// `e^{-it} + x2² + 5`.
pub fn paper_fixture<R: Real>() -> SeparableSolution<R> {
    SeparableSolution::new(
        "paper",
        vec![
            SeparableTerm {
                coef: one(),
                time: TimeFactor::Phase { omega: -R::one() },
                x1: Profile1D::Const(R::one()),
                x2: Profile1D::Const(R::one()),
            },
            SeparableTerm {
                coef: one(),
                time: TimeFactor::Const,
                x1: Profile1D::Const(R::one()),
                x2: Profile1D::Poly(vec![R::lit(5.0), R::zero(), R::one()]),
            },
        ],
    )
}

/// Audit test function `sin(π(x2-d)/d) · bump(x1) · bump(t)`; with
/// `time_bump = false` the time factor is dropped.
pub fn audit_fixture<R: Real>(grid: &StripGrid<R>, time_bump: bool) -> SeparableSolution<R> {
    let ctx = ProfileContext { width: grid.width(), half_length: grid.half_length() };
    let (name, time) = if time_bump {
        ("bump", TimeFactor::Bump { half_width: R::lit(0.9) * grid.horizon() })
    } else {
        ("time-independent", TimeFactor::Const)
    };
    SeparableSolution::new(
        name,
        vec![SeparableTerm { coef: one(), time, x1: ctx.x1_bump(), x2: ctx.sin_bump(R::one()) }],
    )
}

/// Resolves a catalog name against a grid.
pub fn fixture_by_name<R: Real>(name: &str, grid: &StripGrid<R>) -> Result<Arc<dyn ExactSolution<R>>> {
    let x1 = || Profile1D::Const(R::one());
    Ok(match name {
        "paper" => Arc::new(paper_fixture()),
        "zero" => Arc::new(SeparableSolution::new("zero", vec![])),
        "pure-phase" => Arc::new(SeparableSolution::new(
            "pure-phase",
            vec![SeparableTerm {
                coef: one(),
                time: TimeFactor::Phase { omega: -R::one() },
                x1: x1(),
                x2: x1(),
            }],
        )),
        "bump" => Arc::new(audit_fixture(grid, true)),
        "time-independent" => Arc::new(audit_fixture(grid, false)),
        other => {
            return Err(LabError::Config(format!(
                "unknown fixture `{other}`; known fixtures: {}",
                FIXTURE_NAMES.join(", ")
            )))
        }
    })
}

/// Forward data: a closed-form field or values tabulated on the grid.
#[derive(Debug, Clone)]
pub enum DataSource<R: Real> {
    Exact(Arc<dyn ExactSolution<R>>),
    Sampled { name: String, field: ComplexField<R> },
}

impl<R: Real> DataSource<R> {
    pub fn name(&self) -> &str {
        match self {
            DataSource::Exact(f) => f.name(),
            DataSource::Sampled { name, .. } => name,
        }
    }

    /// Closed form, or the error raised when only samples exist.
    pub fn exact(&self) -> Result<&dyn ExactSolution<R>> {
        match self {
            DataSource::Exact(f) => Ok(f.as_ref()),
            DataSource::Sampled { name, .. } => Err(LabError::FixtureNotAnalytic(name.clone())),
        }
    }

    /// Value at grid node `(n, i, j)`.
    pub fn at(&self, grid: &StripGrid<R>, n: usize, i: usize, j: usize) -> Result<Cx<R>> {
        match self {
            DataSource::Exact(f) => Ok(f.value(grid.t(n), grid.x1(i), grid.x2(j))),
            DataSource::Sampled { field, name } => {
                if !field.grid().same_as(grid) {
                    return Err(LabError::GridMismatch(format!("table `{name}` was sampled on another grid")));
                }
                if !field.has_level(n) {
                    return Err(LabError::GridMismatch(format!("table `{name}` has no time level {n}")));
                }
                Ok(field.at(n, i, j))
            }
        }
    }
}
