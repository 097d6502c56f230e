//! Coefficient fields `a(x)`, `b(x)` sampled with their derivatives on the
//! spatial nodes of a grid.

use crate::error::{LabError, Result};
use crate::grid::StripGrid;
use crate::profile::{Profile, SpatialJet};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct CoefficientField<R: Real> {
    grid: StripGrid<R>,
    a_profile: Profile<R>,
    b_profile: Profile<R>,
    a: Vec<SpatialJet<R>>,
    b: Vec<SpatialJet<R>>,
    a_min: R,
}

impl<R: Real> CoefficientField<R> {
    /// Samples both profiles; fails unless `a` has a positive lower bound
    /// and every stored derivative is finite.
    pub fn new(a: Profile<R>, b: Profile<R>, grid: &StripGrid<R>) -> Result<Self> {
        let mut aj = Vec::with_capacity(grid.space_len());
        let mut bj = Vec::with_capacity(grid.space_len());
        for i in 0..=grid.n1() {
            for j in 0..=grid.n2() {
                let (x1, x2) = (grid.x1(i), grid.x2(j));
                aj.push(a.jet(x1, x2));
                bj.push(b.jet(x1, x2));
            }
        }
        if let Some(p) = aj.iter().chain(&bj).position(|j| !j.is_finite()) {
            return Err(LabError::Config(format!("coefficient derivatives not finite at node {}", p % aj.len())));
        }
        let a_min = aj.iter().fold(R::infinity(), |m, j| m.min(j.value));
        if !(a_min > R::zero()) {
            return Err(LabError::Assumption(format!(
                "diffusion coefficient `{}` must satisfy a >= a_min > 0, found min a = {a_min}",
                a.name()
            )));
        }
        Ok(CoefficientField { grid: *grid, a_profile: a, b_profile: b, a: aj, b: bj, a_min })
    }

    /// `(a + sign·da, b + sign·db)` on the same grid.
    pub fn shifted(&self, da: &Profile<R>, db: &Profile<R>, sign: R) -> Result<Self> {
        let a = Profile::sum(
            format!("{} + {sign}*({})", self.a_profile.name(), da.name()),
            vec![self.a_profile.clone(), da.scaled(sign)],
        );
        let b = Profile::sum(
            format!("{} + {sign}*({})", self.b_profile.name(), db.name()),
            vec![self.b_profile.clone(), db.scaled(sign)],
        );
        Self::new(a, b, &self.grid)
    }

    pub fn grid(&self) -> &StripGrid<R> {
        &self.grid
    }

    pub fn a_profile(&self) -> &Profile<R> {
        &self.a_profile
    }

    pub fn b_profile(&self) -> &Profile<R> {
        &self.b_profile
    }

    /// `a` at flat spatial index `p`.
    #[inline]
    pub fn a(&self, p: usize) -> R {
        self.a[p].value
    }

    #[inline]
    pub fn b(&self, p: usize) -> R {
        self.b[p].value
    }

    #[inline]
    pub fn a_jet(&self, p: usize) -> &SpatialJet<R> {
        &self.a[p]
    }

    #[inline]
    pub fn b_jet(&self, p: usize) -> &SpatialJet<R> {
        &self.b[p]
    }

    pub fn a_min(&self) -> R {
        self.a_min
    }

    pub fn depends_on_x1(&self) -> bool {
        self.a_profile.depends_on_x1() || self.b_profile.depends_on_x1()
    }

    pub fn a_depends_on_x1(&self) -> bool {
        self.a_profile.depends_on_x1()
    }

    /// Largest `|∂^k a|` over the nodes for `k = 0..=3`.
    pub fn a_derivative_bounds(&self) -> [R; 4] {
        let mut out = [R::zero(); 4];
        for i in 0..=self.grid.n1() {
            for j in 0..=self.grid.n2() {
                let (x1, x2) = (self.grid.x1(i), self.grid.x2(j));
                for (k, o) in out.iter_mut().enumerate() {
                    *o = o.max(self.a_profile.max_partial_of_order(x1, x2, k));
                }
            }
        }
        out
    }

    pub fn check_grid(&self, grid: &StripGrid<R>) -> Result<()> {
        if self.grid.same_as(grid) {
            Ok(())
        } else {
            Err(LabError::GridMismatch("coefficients were sampled on another grid".into()))
        }
    }
}
