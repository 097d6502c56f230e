//! Crank–Nicolson solver for `i ∂_t q + a Δq + b q = 0` on the truncated
//! strip with Dirichlet data on all four sides, plus the post-processing
//! the audits need.

use std::sync::Arc;

use serde::Serialize;

use crate::banded::{BandedLu, BandedMatrix};
use crate::coeffs::CoefficientField;
use crate::error::{LabError, Result};
use crate::fixtures::{DataSource, ExactSolution};
use crate::grid::{Boundary, ComplexField, ComplexTrace, StripGrid, TimeWindow};
use crate::jet::Spatial;
use crate::scalar::{Cx, Real};
use crate::stencil;

#[derive(Debug, Clone)]
pub struct ForwardProblem<R: Real> {
    pub grid: StripGrid<R>,
    pub coeffs: Arc<CoefficientField<R>>,
    /// Supplies the boundary values `F` and, unless overridden, `q0`.
    pub data: DataSource<R>,
    /// Initial datum on the spatial grid, flat-indexed.
    pub initial: Option<Vec<Cx<R>>>,
}

impl<R: Real> ForwardProblem<R> {
    pub fn new(grid: StripGrid<R>, coeffs: Arc<CoefficientField<R>>, data: DataSource<R>) -> Self {
        ForwardProblem { grid, coeffs, data, initial: None }
    }

    fn initial_level(&self) -> Result<Vec<Cx<R>>> {
        let g = &self.grid;
        let n0 = g.zero_level();
        let mut from_data = Vec::with_capacity(g.space_len());
        for i in 0..=g.n1() {
            for j in 0..=g.n2() {
                from_data.push(self.data.at(g, n0, i, j)?);
            }
        }
        let Some(q0) = &self.initial else { return Ok(from_data) };
        if q0.len() != g.space_len() {
            return Err(LabError::GridMismatch(format!(
                "initial datum has {} values, grid level has {}",
                q0.len(),
                g.space_len()
            )));
        }
        let tol = R::lit(1e-12);
        for i in 0..=g.n1() {
            for j in 0..=g.n2() {
                let p = g.sidx(i, j);
                if g.is_space_boundary(i, j) && (q0[p] - from_data[p]).norm() > tol * (R::one() + q0[p].norm()) {
                    return Err(LabError::Precondition(format!(
                        "initial datum disagrees with boundary data at x = ({}, {})",
                        g.x1(i),
                        g.x2(j)
                    )));
                }
            }
        }
        Ok(q0.clone())
    }
}

#[derive(Debug, Clone)]
pub struct ForwardSolution<R: Real> {
    /// Solution on `[0, T]`.
    pub field: ComplexField<R>,
    /// Largest residual of the discrete scheme over all steps and interior
    /// nodes, in units of the equation.
    pub max_step_residual: R,
    pub pivot_ratio: R,
}

fn interior_index<R: Real>(g: &StripGrid<R>, i: usize, j: usize) -> usize {
    (i - 1) * (g.n2() - 1) + (j - 1)
}

/// `L_h q = a Δ_h q + b q` at interior node `(i, j)`.
#[inline]
fn spatial_operator<R: Real>(g: &StripGrid<R>, c: &CoefficientField<R>, lvl: &[Cx<R>], i: usize, j: usize) -> Cx<R> {
    let p = g.sidx(i, j);
    stencil::laplacian(g, lvl, i, j) * c.a(p) + lvl[p] * c.b(p)
}

fn step_matrix<R: Real>(g: &StripGrid<R>, c: &CoefficientField<R>) -> Result<BandedLu<R>> {
    let m = g.n2() - 1;
    let n = (g.n1() - 1) * m;
    let half = Cx::new(R::zero(), g.dt() / R::lit(2.0));
    let mut a = BandedMatrix::zeros(n, m, m);
    let (ih1, ih2) = (R::one() / (g.h1() * g.h1()), R::one() / (g.h2() * g.h2()));
    let one = Cx::new(R::one(), R::zero());
    for i in 1..g.n1() {
        for j in 1..g.n2() {
            let p = g.sidx(i, j);
            let k = interior_index(g, i, j);
            let (cx, cy) = (c.a(p) * ih1, c.a(p) * ih2);
            let diag = -(cx + cy) * R::lit(2.0) + c.b(p);
            a.set(k, k, one - half * diag);
            if j > 1 {
                a.set(k, k - 1, -half * cy);
            }
            if j + 1 < g.n2() {
                a.set(k, k + 1, -half * cy);
            }
            if i > 1 {
                a.set(k, k - m, -half * cx);
            }
            if i + 1 < g.n1() {
                a.set(k, k + m, -half * cx);
            }
        }
    }
    a.factor()
}

/// Runs the scheme from `t = 0` to `t = T`.
pub fn solve_forward<R: Real>(p: &ForwardProblem<R>) -> Result<ForwardSolution<R>> {
    let g = p.grid;
    let c = p.coeffs.as_ref();
    c.check_grid(&g)?;
    let lu = step_matrix(&g, c)?;
    let mut field = ComplexField::zeros(g, TimeWindow::Forward);
    let n0 = g.zero_level();
    field.level_mut(n0).copy_from_slice(&p.initial_level()?);
    let half = Cx::new(R::zero(), g.dt() / R::lit(2.0));
    let i_over_dt = Cx::new(R::zero(), R::one() / g.dt());
    let m = g.n2() - 1;
    let mut rhs = vec![Cx::new(R::zero(), R::zero()); (g.n1() - 1) * m];
    let mut max_res = R::zero();
    let (ih1, ih2) = (R::one() / (g.h1() * g.h1()), R::one() / (g.h2() * g.h2()));
    for n in n0..g.nt() {
        let mut next = vec![Cx::new(R::zero(), R::zero()); g.space_len()];
        for i in 0..=g.n1() {
            for j in 0..=g.n2() {
                if g.is_space_boundary(i, j) {
                    next[g.sidx(i, j)] = p.data.at(&g, n + 1, i, j)?;
                }
            }
        }
        let cur = field.level(n);
        for i in 1..g.n1() {
            for j in 1..g.n2() {
                let q = g.sidx(i, j);
                let mut r = cur[q] + half * spatial_operator(&g, c, cur, i, j);
                // known boundary neighbours at the new level
                let (cx, cy) = (c.a(q) * ih1, c.a(q) * ih2);
                if i == 1 {
                    r = r + half * next[g.sidx(0, j)] * cx;
                }
                if i + 1 == g.n1() {
                    r = r + half * next[g.sidx(g.n1(), j)] * cx;
                }
                if j == 1 {
                    r = r + half * next[g.sidx(i, 0)] * cy;
                }
                if j + 1 == g.n2() {
                    r = r + half * next[g.sidx(i, g.n2())] * cy;
                }
                rhs[interior_index(&g, i, j)] = r;
            }
        }
        lu.solve_in_place(&mut rhs);
        for i in 1..g.n1() {
            for j in 1..g.n2() {
                next[g.sidx(i, j)] = rhs[interior_index(&g, i, j)];
            }
        }
        if next.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(LabError::LinearSolve { level: n + 1, reason: "non-finite solution".into() });
        }
        let cur = field.level(n);
        for i in 1..g.n1() {
            for j in 1..g.n2() {
                let q = g.sidx(i, j);
                let res = (next[q] - cur[q]) * i_over_dt
                    + (spatial_operator(&g, c, &next, i, j) + spatial_operator(&g, c, cur, i, j)) / R::lit(2.0);
                max_res = max_res.max(res.norm());
            }
        }
        field.level_mut(n + 1).copy_from_slice(&next);
    }
    Ok(ForwardSolution { field, max_step_residual: max_res, pivot_ratio: lu.pivot_ratio() })
}

/// Extends a `[0, T]` solution to `[-T, T]` by `q(x, -t) = conj q(x, t)`.
pub fn extend_symmetric<R: Real>(q: &ComplexField<R>) -> Result<ComplexField<R>> {
    if q.window() != TimeWindow::Forward {
        return Err(LabError::GridMismatch("symmetric extension expects a field on [0, T]".into()));
    }
    let g = *q.grid();
    let n0 = g.zero_level();
    let im = q.level(n0).iter().fold(R::zero(), |m, v| m.max(v.im.abs()));
    if im > R::lit(1e-12) {
        return Err(LabError::NonRealInitialSlice(im.to_f64_lossy()));
    }
    Ok(ComplexField::from_fn(g, TimeWindow::Full, |n, i, j| {
        if n >= n0 {
            q.at(n, i, j)
        } else {
            q.at(g.nt() - n, i, j).conj()
        }
    }))
}

/// Restriction of a full-window field to `[0, T]`.
pub fn restrict_forward<R: Real>(q: &ComplexField<R>) -> ComplexField<R> {
    ComplexField::from_fn(*q.grid(), TimeWindow::Forward, |n, i, j| q.at(n, i, j))
}

/// `max |i ∂_t q + a Δq + b q|` over the nodes of `window`, from closed forms.
pub fn manufactured_residual<R: Real>(
    data: &DataSource<R>,
    coeffs: &CoefficientField<R>,
    window: TimeWindow,
) -> Result<R> {
    let q = data.exact()?;
    let g = *coeffs.grid();
    let iu = Cx::new(R::zero(), R::one());
    let mut m = R::zero();
    for n in g.levels(window) {
        for i in 0..=g.n1() {
            for j in 0..=g.n2() {
                let p = g.sidx(i, j);
                let jet = q.jet(g.t(n), g.x1(i), g.x2(j));
                let r = iu * jet.deriv(1, Spatial::None) + jet.laplacian_value() * coeffs.a(p) + jet.value() * coeffs.b(p);
                m = m.max(r.norm());
            }
        }
    }
    Ok(m)
}

/// Outward normal derivative on a horizontal boundary, 3-point one-sided.
pub fn normal_derivative_trace<R: Real>(q: &ComplexField<R>, boundary: Boundary) -> ComplexTrace<R> {
    let g = *q.grid();
    let two_h = R::lit(2.0) * g.h2();
    let (three, four) = (R::lit(3.0), R::lit(4.0));
    let sign = boundary.outward_sign::<R>();
    ComplexTrace::from_fn(g, q.window(), boundary, |n, i| {
        // ∂2 at the boundary row, then project on the outward normal
        let d2 = match boundary {
            Boundary::Top => {
                let j = g.n2();
                (q.at(n, i, j) * three - q.at(n, i, j - 1) * four + q.at(n, i, j - 2)) / two_h
            }
            Boundary::Bottom => (q.at(n, i, 1) * four - q.at(n, i, 0) * three - q.at(n, i, 2)) / two_h,
        };
        d2 * sign
    })
}

/// `∂_t²` of a trace: centred inside, 4-point one-sided at the ends.
pub fn trace_second_time_derivative<R: Real>(tr: &ComplexTrace<R>) -> ComplexTrace<R> {
    let g = *tr.grid();
    let range = g.levels(tr.window());
    let (first, last) = (*range.start(), *range.end());
    let dt2 = g.dt() * g.dt();
    let (two, four, five) = (R::lit(2.0), R::lit(4.0), R::lit(5.0));
    ComplexTrace::from_fn(g, tr.window(), tr.boundary(), |n, i| {
        let f = |k: usize| tr.at(k, i);
        if n == first {
            (f(n) * two - f(n + 1) * five + f(n + 2) * four - f(n + 3)) / dt2
        } else if n == last {
            (f(n) * two - f(n - 1) * five + f(n - 2) * four - f(n - 3)) / dt2
        } else {
            (f(n + 1) - f(n) * two + f(n - 1)) / dt2
        }
    })
}

/// Lower bounds behind the chain divisions.
#[derive(Debug, Clone, Serialize)]
pub struct QTildeReport {
    /// `min |q̃|`.
    pub min_q: f64,
    /// `min |∂_t(Δq̃/q̃)|`.
    pub min_g: f64,
    /// `min |Δq̃|`.
    pub min_lap: f64,
    /// `min |∂_t(q̃/Δq̃)|`.
    pub min_h: f64,
    pub threshold: f64,
    pub pass: bool,
}

pub const DIVISOR_THRESHOLD: f64 = 1e-8;

pub fn check_qtilde_assumptions<R: Real>(data: &DataSource<R>, grid: &StripGrid<R>) -> Result<QTildeReport> {
    let q = data.exact()?;
    let mut mins = [f64::INFINITY; 4];
    let finite_norm = |v: Cx<R>| {
        let n = v.norm().to_f64_lossy();
        if n.is_finite() {
            n
        } else {
            0.0
        }
    };
    for n in grid.levels(TimeWindow::Full) {
        for i in 0..=grid.n1() {
            for j in 0..=grid.n2() {
                let (t, x1, x2) = (grid.t(n), grid.x1(i), grid.x2(j));
                let p = q.jet(t, x1, x2);
                let lp = q.laplacian_jet(t, x1, x2);
                let (pv, lv) = (finite_norm(p.value()), finite_norm(lp.value()));
                let g = if pv > 0.0 { finite_norm((lp / p).deriv(1, Spatial::None)) } else { 0.0 };
                let h = if lv > 0.0 { finite_norm((p / lp).deriv(1, Spatial::None)) } else { 0.0 };
                for (m, v) in mins.iter_mut().zip([pv, g, lv, h]) {
                    *m = m.min(v);
                }
            }
        }
    }
    let pass = mins.iter().all(|&m| m >= DIVISOR_THRESHOLD);
    Ok(QTildeReport {
        min_q: mins[0],
        min_g: mins[1],
        min_lap: mins[2],
        min_h: mins[3],
        threshold: DIVISOR_THRESHOLD,
        pass,
    })
}

/// One row of a refinement study against a closed-form solution.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n1: usize,
    pub n2: usize,
    pub nt: usize,
    pub h2: f64,
    pub dt: f64,
    pub max_error: f64,
    pub max_step_residual: f64,
    /// `log2` of the error ratio to the previous row.
    pub order: Option<f64>,
}

/// Solves on each grid and compares with the exact field on `[0, T]`.
pub fn convergence_study<R: Real>(
    exact: Arc<dyn ExactSolution<R>>,
    coeffs_on: impl Fn(&StripGrid<R>) -> Result<CoefficientField<R>>,
    grids: &[StripGrid<R>],
) -> Result<Vec<ConvergenceRow>> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(grids.len());
    for g in grids {
        let coeffs = Arc::new(coeffs_on(g)?);
        let sol = solve_forward(&ForwardProblem::new(*g, coeffs, DataSource::Exact(exact.clone())))?;
        let mut err = R::zero();
        for n in g.levels(TimeWindow::Forward) {
            for i in 0..=g.n1() {
                for j in 0..=g.n2() {
                    let e = sol.field.at(n, i, j) - exact.value(g.t(n), g.x1(i), g.x2(j));
                    err = err.max(e.norm());
                }
            }
        }
        let max_error = err.to_f64_lossy();
        let order = rows.last().map(|r| (r.max_error / max_error).log2());
        rows.push(ConvergenceRow {
            n1: g.n1(),
            n2: g.n2(),
            nt: g.nt(),
            h2: g.h2().to_f64_lossy(),
            dt: g.dt().to_f64_lossy(),
            max_error,
            max_step_residual: sol.max_step_residual.to_f64_lossy(),
            order,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{fixture_by_name, paper_fixture};
    use crate::profile::{Profile, ProfileContext, ProfileSpec};

    fn paper_coeffs(g: &StripGrid<f64>, b: f64) -> CoefficientField<f64> {
        let ctx = ProfileContext { width: g.width(), half_length: g.half_length() };
        CoefficientField::new(ProfileSpec::named("paper-a").resolve(&ctx).unwrap(), Profile::constant(b), g).unwrap()
    }

    fn paper_source() -> DataSource<f64> {
        DataSource::Exact(Arc::new(paper_fixture()))
    }

    #[test]
    fn paper_fixture_is_reproduced() {
        let g = StripGrid::new(2.0, 1.0, 1.0, 8, 10, 40).unwrap();
        let p = ForwardProblem::new(g, Arc::new(paper_coeffs(&g, -1.0)), paper_source());
        let sol = solve_forward(&p).unwrap();
        let f = paper_fixture::<f64>();
        let mut err: f64 = 0.0;
        for n in g.levels(TimeWindow::Forward) {
            for i in 0..=g.n1() {
                for j in 0..=g.n2() {
                    err = err.max((sol.field.at(n, i, j) - f.value(g.t(n), g.x1(i), g.x2(j))).norm());
                }
            }
        }
        // pure time error: the 5-point Laplacian is exact on x2²
        assert!(err < 2e-4, "{err}");
        assert!(sol.max_step_residual < 1e-9);
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = StripGrid::new(1.0, 1.0, 1.0, 6, 6, 8).unwrap();
        let c = CoefficientField::new(Profile::constant(1.0), Profile::constant(0.0), &g).unwrap();
        let zero = fixture_by_name::<f64>("zero", &g).unwrap();
        let sol = solve_forward(&ForwardProblem::new(g, Arc::new(c), DataSource::Exact(zero))).unwrap();
        assert_eq!(sol.field.max_abs(), 0.0);
    }

    #[test]
    fn mass_is_conserved_for_constant_diffusion() {
        let g = StripGrid::new(1.0, 1.0, 1.0, 12, 12, 40).unwrap();
        let c = CoefficientField::new(Profile::constant(0.8), Profile::constant(0.3), &g).unwrap();
        let bump = fixture_by_name::<f64>("time-independent", &g).unwrap();
        // initial datum from the bump, zero boundary data
        let mut p = ForwardProblem::new(g, Arc::new(c), DataSource::Exact(fixture_by_name("zero", &g).unwrap()));
        let mut q0 = vec![Cx::new(0.0, 0.0); g.space_len()];
        for i in 1..g.n1() {
            for j in 1..g.n2() {
                q0[g.sidx(i, j)] = bump.value(0.0, g.x1(i), g.x2(j));
            }
        }
        p.initial = Some(q0);
        let sol = solve_forward(&p).unwrap();
        let mass = |n: usize| sol.field.level(n).iter().map(|v| v.norm_sqr()).sum::<f64>();
        let m0 = mass(g.zero_level());
        for n in g.levels(TimeWindow::Forward) {
            assert!(((mass(n) - m0) / m0).abs() <= 1e-10);
        }
    }

    #[test]
    fn incompatible_initial_datum_rejected() {
        let g = StripGrid::new(1.0, 1.0, 1.0, 6, 6, 8).unwrap();
        let mut p = ForwardProblem::new(g, Arc::new(paper_coeffs(&g, -1.0)), paper_source());
        p.initial = Some(vec![Cx::new(0.0, 0.0); g.space_len()]);
        assert!(matches!(solve_forward(&p), Err(LabError::Precondition(_))));
    }

    #[test]
    fn symmetric_extension_of_paper_fixture() {
        let g = StripGrid::new(1.0, 1.0, 1.0, 4, 4, 8).unwrap();
        let f = paper_fixture::<f64>();
        let fwd = f.sample(g, TimeWindow::Forward);
        let full = extend_symmetric(&fwd).unwrap();
        for n in g.levels(TimeWindow::Full) {
            let v = f.value(g.t(n), g.x1(1), g.x2(2));
            assert!((full.at(n, 1, 2) - v).norm() < 1e-14);
        }
        let again = extend_symmetric(&restrict_forward(&full)).unwrap();
        assert_eq!(again, full);
    }

    #[test]
    fn non_real_initial_slice_rejected() {
        let g = StripGrid::new(1.0, 1.0, 1.0, 4, 4, 8).unwrap();
        let f = ComplexField::from_fn(g, TimeWindow::Forward, |_, _, _| Cx::new(1.0, 0.1));
        assert!(matches!(extend_symmetric(&f), Err(LabError::NonRealInitialSlice(_))));
    }

    #[test]
    fn manufactured_residuals() {
        let g = StripGrid::new(1.0, 1.0, 1.0, 4, 8, 8).unwrap();
        let r = manufactured_residual(&paper_source(), &paper_coeffs(&g, -1.0), TimeWindow::Full).unwrap();
        assert!(r <= 1e-12, "{r}");
        let wrong = manufactured_residual(&paper_source(), &paper_coeffs(&g, 1.0), TimeWindow::Full).unwrap();
        assert!(wrong >= 2.0 * (1.0 + 4.0));
        let zero = DataSource::Exact(fixture_by_name("zero", &g).unwrap());
        assert_eq!(manufactured_residual(&zero, &paper_coeffs(&g, 1.0), TimeWindow::Full).unwrap(), 0.0);
        let sampled = DataSource::Sampled { name: "t".into(), field: ComplexField::zeros(g, TimeWindow::Full) };
        assert!(matches!(
            manufactured_residual(&sampled, &paper_coeffs(&g, 1.0), TimeWindow::Full),
            Err(LabError::FixtureNotAnalytic(_))
        ));
    }

    #[test]
    fn normal_derivative_of_quadratic() {
        let g = StripGrid::new(1.0, 1.0, 1.0, 4, 10, 4).unwrap();
        let q = ComplexField::from_fn(g, TimeWindow::Full, |_, _, j| Cx::new(g.x2(j) * g.x2(j), 0.0));
        let top = normal_derivative_trace(&q, Boundary::Top);
        assert!((top.at(2, 1) - Cx::new(4.0, 0.0)).norm() < 1e-12);
        let bottom = normal_derivative_trace(&q, Boundary::Bottom);
        assert!((bottom.at(2, 1) - Cx::new(-2.0, 0.0)).norm() < 1e-12);
        let c = ComplexField::from_fn(g, TimeWindow::Full, |_, _, _| Cx::new(3.0, -1.0));
        assert!(normal_derivative_trace(&c, Boundary::Top).at(0, 0).norm() < 1e-12);
        let paper = paper_fixture::<f64>().sample(g, TimeWindow::Full);
        let tr = normal_derivative_trace(&paper, Boundary::Top);
        for n in g.levels(TimeWindow::Full) {
            assert!((tr.at(n, 2) - Cx::new(4.0, 0.0)).norm() < 1e-11);
        }
    }

    #[test]
    fn second_time_derivative_of_cubic() {
        let g = StripGrid::new(1.0, 1.0, 1.0, 4, 4, 10).unwrap();
        let tr = ComplexTrace::from_fn(g, TimeWindow::Full, Boundary::Top, |n, _| {
            let t = g.t(n);
            Cx::new(t * t * t, t * t)
        });
        let d2 = trace_second_time_derivative(&tr);
        for n in g.levels(TimeWindow::Full) {
            assert!((d2.at(n, 0) - Cx::new(6.0 * g.t(n), 2.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn qtilde_report_for_paper_and_pure_phase() {
        let g = StripGrid::new(1.0, 1.0, 1.0, 4, 8, 8).unwrap();
        let r = check_qtilde_assumptions(&paper_source(), &g).unwrap();
        assert!(r.pass);
        assert!((r.min_lap - 2.0).abs() < 1e-14);
        assert!((r.min_h - 0.5).abs() < 1e-14);
        assert!(r.min_q >= 5.0 - 1e-12);
        let pure = DataSource::Exact(fixture_by_name("pure-phase", &g).unwrap());
        let r = check_qtilde_assumptions(&pure, &g).unwrap();
        assert!(!r.pass);
        assert_eq!(r.min_lap, 0.0);
    }

    #[test]
    fn solver_is_linear() {
        let g = StripGrid::new(2.0, 1.0, 0.5, 8, 8, 10).unwrap();
        let c = Arc::new(paper_coeffs(&g, -1.0));
        let f1: Arc<dyn ExactSolution<f64>> = Arc::new(paper_fixture());
        let f2 = fixture_by_name("time-independent", &g).unwrap();
        let s1 = solve_forward(&ForwardProblem::new(g, c.clone(), DataSource::Exact(f1.clone()))).unwrap();
        let s2 = solve_forward(&ForwardProblem::new(g, c.clone(), DataSource::Exact(f2.clone()))).unwrap();
        let combo = SumFixture(f1, f2);
        let s = solve_forward(&ForwardProblem::new(g, c, DataSource::Exact(Arc::new(combo)))).unwrap();
        for (k, v) in s.field.values().iter().enumerate() {
            let expect = s1.field.values()[k] * 2.0 - s2.field.values()[k] * 3.0;
            assert!((v - expect).norm() < 1e-11);
        }
    }

    #[test]
    fn refinement_is_second_order_in_time() {
        let grids: Vec<StripGrid<f64>> =
            [20, 40, 80].iter().map(|&nt| StripGrid::new(1.0, 1.0, 1.0, 4, 8, nt).unwrap()).collect();
        let rows = convergence_study(Arc::new(paper_fixture()), |g| Ok(paper_coeffs(g, -1.0)), &grids).unwrap();
        for r in &rows[1..] {
            assert!(r.order.unwrap() >= 1.9, "{rows:?}");
        }
    }

    #[derive(Debug)]
    struct SumFixture(Arc<dyn ExactSolution<f64>>, Arc<dyn ExactSolution<f64>>);

    impl ExactSolution<f64> for SumFixture {
        fn name(&self) -> &str {
            "2a-3b"
        }
        fn jet(&self, t: f64, x1: f64, x2: f64) -> crate::jet::Jet<f64> {
            self.0.jet(t, x1, x2).scale(Cx::new(2.0, 0.0)) - self.1.jet(t, x1, x2).scale(Cx::new(3.0, 0.0))
        }
        fn laplacian_jet(&self, t: f64, x1: f64, x2: f64) -> crate::jet::Jet<f64> {
            self.0.laplacian_jet(t, x1, x2).scale(Cx::new(2.0, 0.0))
                - self.1.laplacian_jet(t, x1, x2).scale(Cx::new(3.0, 0.0))
        }
        fn value(&self, t: f64, x1: f64, x2: f64) -> Cx<f64> {
            self.0.value(t, x1, x2) * 2.0 - self.1.value(t, x1, x2) * 3.0
        }
    }
}
