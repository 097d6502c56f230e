//! Twin experiments, the two division chains and the reconstruction of the
//! coefficient gaps `α = ã - a` and `γ = b̃ - b`.
//!
//! The twin `q̃` solves the equation with `(ã, b̃)` and has a closed form; `q`
//! solves it with `(a, b)`, the same initial datum and the same boundary
//! values. `u = q - q̃` then satisfies `i∂_t u + aΔu + bu = αΔq̃ + γq̃`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::coeffs::CoefficientField;
use crate::error::{LabError, Result};
use crate::fixtures::{DataSource, ExactSolution};
use crate::forward::{extend_symmetric, normal_derivative_trace, solve_forward, trace_second_time_derivative, ForwardProblem, DIVISOR_THRESHOLD};
use crate::grid::{Boundary, ComplexField, ComplexTrace, StripGrid, TimeWindow};
use crate::jet::Jet;
use crate::profile::{Profile, SpatialJet};
use crate::quadrature::{boundary_sum, space_weights, sum_over, Region};
use crate::scalar::{Cx, Real};
use crate::stencil;
use crate::weights::CarlemanWeights;

#[derive(Debug, Clone)]
pub struct TwinExperiment<R: Real> {
    pub grid: StripGrid<R>,
    /// `(a, b)`, the coefficients of `q`.
    pub base: Arc<CoefficientField<R>>,
    /// `(ã, b̃)`, the coefficients of `q̃`.
    pub perturbed: Arc<CoefficientField<R>>,
    /// Closed form of `q̃`; supplies the shared initial and boundary data.
    pub reference: Arc<dyn ExactSolution<R>>,
}

impl<R: Real> TwinExperiment<R> {
    /// Base coefficients obtained by removing the planted gaps from `(ã, b̃)`.
    pub fn planted(
        grid: StripGrid<R>,
        perturbed: CoefficientField<R>,
        alpha: &Profile<R>,
        gamma: &Profile<R>,
        reference: Arc<dyn ExactSolution<R>>,
    ) -> Result<Self> {
        let base = perturbed.shifted(alpha, gamma, -R::one())?;
        Ok(TwinExperiment { grid, base: Arc::new(base), perturbed: Arc::new(perturbed), reference })
    }
}

#[derive(Debug, Clone)]
pub struct TwinRun<R: Real> {
    pub q: ComplexField<R>,
    pub q_tilde: ComplexField<R>,
    pub u: ComplexField<R>,
    /// Larger of the two solvers' step residuals.
    pub noise_floor: R,
}

/// Solves both twins on `[0, T]`, extends them to `[-T, T]` and subtracts.
pub fn run_twin<R: Real>(exp: &TwinExperiment<R>) -> Result<TwinRun<R>> {
    let data = DataSource::Exact(exp.reference.clone());
    let q = solve_forward(&ForwardProblem::new(exp.grid, exp.base.clone(), data.clone()))?;
    let qt = solve_forward(&ForwardProblem::new(exp.grid, exp.perturbed.clone(), data))?;
    let noise_floor = q.max_step_residual.max(qt.max_step_residual);
    let q = extend_symmetric(&q.field)?;
    let q_tilde = extend_symmetric(&qt.field)?;
    let u = q.zip_map(&q_tilde, |a, b| a - b)?;
    Ok(TwinRun { q, q_tilde, u, noise_floor })
}

/// `max |i∂_t u + aΔu + bu - (αΔq̃ + γq̃)|` over valid nodes, with `q̃` and
/// the gaps in closed form. The time derivative is centred over two steps
/// and the spatial terms are averaged `(1, 2, 1)/4`, the combination of two
/// consecutive Crank–Nicolson steps.
pub fn twin_source_residual<R: Real>(exp: &TwinExperiment<R>, u: &ComplexField<R>) -> Result<R> {
    let g = exp.grid;
    exp.base.check_grid(u.grid())?;
    let c = exp.base.as_ref();
    let iu = Cx::new(R::zero(), R::one());
    let dt2 = g.dt() + g.dt();
    let quarter = R::lit(0.25);
    let spatial = |n: usize, i: usize, j: usize| {
        let p = g.sidx(i, j);
        let (t, x1, x2) = (g.t(n), g.x1(i), g.x2(j));
        let alpha = exp.perturbed.a(p) - c.a(p);
        let gamma = exp.perturbed.b(p) - c.b(p);
        stencil::laplacian(&g, u.level(n), i, j) * c.a(p) + u.at_flat(n, p) * c.b(p)
            - exp.reference.laplacian_jet(t, x1, x2).value() * alpha
            - exp.reference.value(t, x1, x2) * gamma
    };
    let mut worst = R::zero();
    for n in 1..g.nt() {
        for i in 1..g.n1() {
            for j in 1..g.n2() {
                let p = g.sidx(i, j);
                let r = iu * (u.at_flat(n + 1, p) - u.at_flat(n - 1, p)) / dt2
                    + (spatial(n - 1, i, j) + spatial(n, i, j) * R::lit(2.0) + spatial(n + 1, i, j)) * quarter;
                worst = worst.max(r.norm());
            }
        }
    }
    Ok(worst)
}

/// Which divisor the chain starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainKind {
    /// Divides by `q̃`; isolates `α`.
    U,
    /// Divides by `Δq̃`; isolates `γ`.
    V,
}

impl ChainKind {
    fn divisor_names(self) -> (&'static str, &'static str) {
        match self {
            ChainKind::U => ("q_tilde", "d_t(lap q_tilde / q_tilde)"),
            ChainKind::V => ("lap q_tilde", "d_t(q_tilde / lap q_tilde)"),
        }
    }
}

/// Coefficients of the chain equations at one node. `a[k][i]` multiplies
/// `u_{i+1}` in the equation for `u_{k+1}`; `b[k][i]` multiplies `∇u_{i+1}`.
#[derive(Debug, Clone, Copy)]
pub struct ChainCoefficients<R> {
    pub a: [[Cx<R>; 4]; 4],
    pub b: [[[Cx<R>; 2]; 4]; 4],
    pub p: Cx<R>,
    pub g: Cx<R>,
}

fn spatial_jet<R: Real>(a: &SpatialJet<R>) -> Jet<R> {
    Jet::spatial(a.value, a.grad, a.hess)
}

/// Builds every coefficient from the jets of the divisor `p`, its Laplacian
/// and the ratio `r` whose time derivative is `g`.
pub fn chain_coefficients<R: Real>(p: Jet<R>, lap_p: Jet<R>, r: Jet<R>, a: &SpatialJet<R>) -> ChainCoefficients<R> {
    let iu = Cx::new(R::zero(), R::one());
    let two = Cx::new(R::lit(2.0), R::zero());
    let aj = spatial_jet(a);
    let inv_p = p.recip();
    let g = r.dt();
    let gt = g.dt();
    let inv_g = g.recip();
    let grad = |f: &Jet<R>| [f.d1(), f.d2()];
    let mapv = |v: [Jet<R>; 2], f: &dyn Fn(Jet<R>) -> Jet<R>| [f(v[0]), f(v[1])];

    let a11 = (p.dt() * iu + aj * lap_p) * inv_p;
    let b11 = mapv(grad(&p), &|d| aj * d * two * inv_p);
    let (a12, a22) = (a11.dt(), a11);
    let (b12, b22) = (mapv(b11, &|v| v.dt()), b11);
    let a13 = a12 * inv_g;
    let a23 = a22 * inv_g;
    let a33 = (gt * iu + aj * g.laplacian()) * inv_g;
    let b13 = mapv(b12, &|v| v * inv_g);
    let b23 = mapv(b22, &|v| v * inv_g);
    let b33 = mapv(grad(&g), &|d| aj * d * two * inv_g);
    let (gg, ggt) = (grad(&g), grad(&gt));
    let a14 = a13.dt();
    let a24 = a23.dt() + a13;
    let a34 = a33.dt() + a23 * gt + b23[0] * ggt[0] + b23[1] * ggt[1];
    let a44 = a23 * g + a33 + b23[0] * gg[0] + b23[1] * gg[1];
    let b14 = mapv(b13, &|v| v.dt());
    let b24 = [b23[0].dt() + b13[0], b23[1].dt() + b13[1]];
    let b34 = [b33[0].dt() + gt * b23[0], b33[1].dt() + gt * b23[1]];
    let b44 = [b33[0] + g * b23[0], b33[1] + g * b23[1]];

    let z = Cx::new(R::zero(), R::zero());
    let v = |j: &Jet<R>| j.value();
    let vv = |j: &[Jet<R>; 2]| [j[0].value(), j[1].value()];
    let zz = [z, z];
    ChainCoefficients {
        a: [
            [v(&a11), z, z, z],
            [v(&a12), v(&a22), z, z],
            [v(&a13), v(&a23), v(&a33), z],
            [v(&a14), v(&a24), v(&a34), v(&a44)],
        ],
        b: [
            [vv(&b11), zz, zz, zz],
            [vv(&b12), vv(&b22), zz, zz],
            [vv(&b13), vv(&b23), vv(&b33), zz],
            [vv(&b14), vv(&b24), vv(&b34), vv(&b44)],
        ],
        p: p.value(),
        g: g.value(),
    }
}

fn node_jets<R: Real>(kind: ChainKind, f: &dyn ExactSolution<R>, t: R, x1: R, x2: R) -> (Jet<R>, Jet<R>, Jet<R>) {
    match kind {
        ChainKind::U => {
            let p = f.jet(t, x1, x2);
            let lp = f.laplacian_jet(t, x1, x2);
            (p, lp, lp / p)
        }
        ChainKind::V => {
            let p = f.laplacian_jet(t, x1, x2);
            (p, p.laplacian(), f.jet(t, x1, x2) / p)
        }
    }
}

/// Chain variables `u1..u4` and their coefficients for one divisor.
#[derive(Debug, Clone)]
pub struct ChainBundle<R: Real> {
    pub kind: ChainKind,
    pub u: ComplexField<R>,
    /// `[u1, u2, u3, u4]`.
    pub chain: [ComplexField<R>; 4],
    coeffs: Arc<CoefficientField<R>>,
    reference: Arc<dyn ExactSolution<R>>,
    /// Per `(n, j)` when nothing varies in `x1`.
    cache: Option<Vec<ChainCoefficients<R>>>,
}

fn guard<R: Real>(name: &'static str, v: Cx<R>, t: R, x1: R, x2: R) -> Result<()> {
    let m = v.norm().to_f64_lossy();
    if m >= DIVISOR_THRESHOLD {
        Ok(())
    } else {
        Err(LabError::DivisorGuard {
            name,
            value: m,
            threshold: DIVISOR_THRESHOLD,
            t: t.to_f64_lossy(),
            x1: x1.to_f64_lossy(),
            x2: x2.to_f64_lossy(),
        })
    }
}

impl<R: Real> ChainBundle<R> {
    pub fn build(
        kind: ChainKind,
        u: &ComplexField<R>,
        reference: Arc<dyn ExactSolution<R>>,
        coeffs: Arc<CoefficientField<R>>,
        smooth: bool,
    ) -> Result<Self> {
        if u.window() != TimeWindow::Full {
            return Err(LabError::GridMismatch("chain input must live on [-T, T]".into()));
        }
        coeffs.check_grid(u.grid())?;
        let g = *u.grid();
        let mut bundle = ChainBundle {
            kind,
            u: if smooth { stencil::smooth_121(u) } else { u.clone() },
            chain: std::array::from_fn(|_| ComplexField::zeros(g, TimeWindow::Full)),
            coeffs: coeffs.clone(),
            reference,
            cache: None,
        };
        if !bundle.reference.depends_on_x1() && !coeffs.a_depends_on_x1() {
            let mut cache = Vec::with_capacity((g.nt() + 1) * (g.n2() + 1));
            for n in 0..=g.nt() {
                for j in 0..=g.n2() {
                    cache.push(bundle.compute(n, 0, j)?);
                }
            }
            bundle.cache = Some(cache);
        }
        let (pn, gn) = kind.divisor_names();
        let mut divisors = ComplexField::zeros(g, TimeWindow::Full);
        let mut c1 = ComplexField::zeros(g, TimeWindow::Full);
        for n in 0..=g.nt() {
            for i in 0..=g.n1() {
                for j in 0..=g.n2() {
                    let (p, gv) = bundle.divisors(n, i, j)?;
                    let (t, x1, x2) = (g.t(n), g.x1(i), g.x2(j));
                    guard(pn, p, t, x1, x2)?;
                    guard(gn, gv, t, x1, x2)?;
                    c1.set(n, i, j, bundle.u.at(n, i, j) / p);
                    divisors.set(n, i, j, gv);
                }
            }
        }
        let c2 = stencil::time_derivative(&c1);
        let c3 = c2.zip_map(&divisors, |a, b| a / b)?;
        let c4 = stencil::time_derivative(&c3);
        bundle.chain = [c1, c2, c3, c4];
        if !bundle.chain.iter().all(|c| c.all_finite()) {
            return Err(LabError::Precondition("chain variables are not finite".into()));
        }
        Ok(bundle)
    }

    fn compute(&self, n: usize, i: usize, j: usize) -> Result<ChainCoefficients<R>> {
        let g = *self.u.grid();
        let (t, x1, x2) = (g.t(n), g.x1(i), g.x2(j));
        let (p, lp, r) = node_jets(self.kind, self.reference.as_ref(), t, x1, x2);
        let (pn, gn) = self.kind.divisor_names();
        guard(pn, p.value(), t, x1, x2)?;
        guard(gn, r.dt().value(), t, x1, x2)?;
        Ok(chain_coefficients(p, lp, r, self.coeffs.a_jet(g.sidx(i, j))))
    }

    fn divisors(&self, n: usize, i: usize, j: usize) -> Result<(Cx<R>, Cx<R>)> {
        let g = *self.u.grid();
        match &self.cache {
            Some(c) => {
                let k = &c[n * (g.n2() + 1) + j];
                Ok((k.p, k.g))
            }
            None => {
                let (p, _, r) = node_jets(self.kind, self.reference.as_ref(), g.t(n), g.x1(i), g.x2(j));
                Ok((p.value(), r.dt().value()))
            }
        }
    }

    /// Chain coefficients at node `(n, i, j)`.
    pub fn coefficients(&self, n: usize, i: usize, j: usize) -> Result<ChainCoefficients<R>> {
        match &self.cache {
            Some(c) => Ok(c[n * (self.u.grid().n2() + 1) + j]),
            None => self.compute(n, i, j),
        }
    }

    pub fn grid(&self) -> &StripGrid<R> {
        self.u.grid()
    }

    /// Spatial part of the third chain equation at level `n`, interior nodes.
    fn spatial_residual(&self, n: usize) -> Result<Vec<Cx<R>>> {
        let g = *self.grid();
        let c = &self.coeffs;
        let [c1, c2, c3, _] = &self.chain;
        let mut out = vec![Cx::new(R::zero(), R::zero()); g.space_len()];
        for i in 1..g.n1() {
            for j in 1..g.n2() {
                let p = g.sidx(i, j);
                let k = self.coefficients(n, i, j)?;
                let mut e = stencil::laplacian(&g, c3.level(n), i, j) * c.a(p) + c3.at_flat(n, p) * c.b(p);
                for (m, f) in [c1, c2, c3].into_iter().enumerate() {
                    let gr = stencil::gradient(&g, f.level(n), i, j);
                    e = e + k.a[2][m] * f.at_flat(n, p) + k.b[2][m][0] * gr[0] + k.b[2][m][1] * gr[1];
                }
                out[p] = e;
            }
        }
        Ok(out)
    }
}

pub fn build_u_chain<R: Real>(
    u: &ComplexField<R>,
    reference: Arc<dyn ExactSolution<R>>,
    coeffs: Arc<CoefficientField<R>>,
    smooth: bool,
) -> Result<ChainBundle<R>> {
    ChainBundle::build(ChainKind::U, u, reference, coeffs, smooth)
}

pub fn build_v_chain<R: Real>(
    u: &ComplexField<R>,
    reference: Arc<dyn ExactSolution<R>>,
    coeffs: Arc<CoefficientField<R>>,
    smooth: bool,
) -> Result<ChainBundle<R>> {
    ChainBundle::build(ChainKind::V, u, reference, coeffs, smooth)
}

/// Recovered gap on the spatial grid; boundary nodes hold zero.
#[derive(Debug, Clone)]
pub struct Reconstruction<R: Real> {
    pub kind: ChainKind,
    pub grid: StripGrid<R>,
    pub values: Vec<R>,
    pub imag: Vec<R>,
    pub max_imag: R,
    /// First and last time level of the average.
    pub levels: (usize, usize),
}

impl<R: Real> Reconstruction<R> {
    /// Interior trapezoid `L²` norm of `f`.
    fn norm(&self, f: impl Fn(usize) -> R) -> R {
        let g = &self.grid;
        let w = space_weights(g);
        let mut acc = R::zero();
        for i in 1..g.n1() {
            for j in 1..g.n2() {
                let p = g.sidx(i, j);
                let v = f(p);
                acc += w[p] * v * v;
            }
        }
        acc.sqrt()
    }

    pub fn l2_norm(&self) -> R {
        self.norm(|p| self.values[p])
    }

    pub fn max_abs(&self) -> R {
        self.values.iter().fold(R::zero(), |m, v| m.max(v.abs()))
    }

    /// `‖recovered - truth‖ / ‖truth‖` over interior nodes.
    pub fn relative_l2_error(&self, truth: &[R]) -> R {
        let num = self.norm(|p| self.values[p] - truth[p]);
        let den = self.norm(|p| truth[p]);
        if den > R::zero() {
            num / den
        } else {
            num
        }
    }
}

/// Middle half of the time levels, `nt/4 ..= 3nt/4`.
pub fn averaging_levels<R: Real>(g: &StripGrid<R>) -> (usize, usize) {
    (g.nt() / 4, 3 * g.nt() / 4)
}

/// Left side of the third chain equation, time-averaged. The time
/// derivative is centred over two steps and the spatial part is averaged
/// `(1, 2, 1)/4` over the same three levels, which keeps the evaluation
/// consistent with the Crank–Nicolson data.
pub fn reconstruct<R: Real>(bundle: &ChainBundle<R>) -> Result<Reconstruction<R>> {
    let g = *bundle.grid();
    let (lo, hi) = averaging_levels(&g);
    if lo < 2 || hi + 2 > g.nt() {
        return Err(LabError::Config(format!("grid.nt = {} too small to reconstruct", g.nt())));
    }
    let c3 = &bundle.chain[2];
    let iu = Cx::new(R::zero(), R::one());
    let dt2 = g.dt() + g.dt();
    let quarter = R::lit(0.25);
    let mut prev = bundle.spatial_residual(lo - 1)?;
    let mut cur = bundle.spatial_residual(lo)?;
    let mut sum = vec![Cx::new(R::zero(), R::zero()); g.space_len()];
    for n in lo..=hi {
        let next = bundle.spatial_residual(n + 1)?;
        for i in 1..g.n1() {
            for j in 1..g.n2() {
                let p = g.sidx(i, j);
                let dt = iu * (c3.at_flat(n + 1, p) - c3.at_flat(n - 1, p)) / dt2;
                sum[p] = sum[p] + dt + (prev[p] + cur[p] * R::lit(2.0) + next[p]) * quarter;
            }
        }
        prev = std::mem::replace(&mut cur, next);
    }
    let count = R::from_usize_lossy(hi - lo + 1);
    let values: Vec<R> = sum.iter().map(|v| v.re / count).collect();
    let imag: Vec<R> = sum.iter().map(|v| v.im / count).collect();
    if values.iter().chain(&imag).any(|v| !v.is_finite()) {
        return Err(LabError::Precondition("reconstruction is not finite".into()));
    }
    let max_imag = imag.iter().fold(R::zero(), |m, v| m.max(v.abs()));
    Ok(Reconstruction { kind: bundle.kind, grid: g, values, imag, max_imag, levels: (lo, hi) })
}

pub fn reconstruct_alpha<R: Real>(bundle: &ChainBundle<R>) -> Result<Reconstruction<R>> {
    if bundle.kind != ChainKind::U {
        return Err(LabError::Config("alpha is recovered from the u-chain".into()));
    }
    reconstruct(bundle)
}

pub fn reconstruct_gamma<R: Real>(bundle: &ChainBundle<R>) -> Result<Reconstruction<R>> {
    if bundle.kind != ChainKind::V {
        return Err(LabError::Config("gamma is recovered from the v-chain".into()));
    }
    reconstruct(bundle)
}

/// Values of a profile on the spatial nodes.
pub fn sample_profile<R: Real>(f: &Profile<R>, g: &StripGrid<R>) -> Vec<R> {
    let mut out = Vec::with_capacity(g.space_len());
    for i in 0..=g.n1() {
        for j in 0..=g.n2() {
            out.push(f.value(g.x1(i), g.x2(j)));
        }
    }
    out
}

/// `∂_ν ∂_t² u` on Γ⁺.
pub fn observation_trace<R: Real>(u: &ComplexField<R>) -> ComplexTrace<R> {
    trace_second_time_derivative(&normal_derivative_trace(u, Boundary::Top))
}

/// Adds complex Gaussian noise of standard deviation `level · rms(trace)`.
pub fn add_observation_noise<R: Real>(trace: &ComplexTrace<R>, level: R, seed: u64) -> Result<ComplexTrace<R>> {
    if !(level >= R::zero()) || !level.is_finite() {
        return Err(LabError::Config(format!("noise level must be nonnegative, got {level}")));
    }
    let mut out = trace.clone();
    if level == R::zero() {
        return Ok(out);
    }
    let sigma = (level * trace.rms()).to_f64_lossy() / std::f64::consts::SQRT_2;
    let normal = Normal::new(0.0, sigma).map_err(|e| LabError::Config(format!("noise: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in out.values_mut() {
        let (re, im) = (normal.sample(&mut rng), normal.sample(&mut rng));
        *v = *v + Cx::new(R::lit(re), R::lit(im));
    }
    Ok(out)
}

/// Both sides of the stability inequality for one `(s, λ)`, each term times
/// `e^{-log_scale}`.
#[derive(Debug, Clone, Serialize)]
pub struct StabilitySides {
    pub s: f64,
    pub lambda: f64,
    pub lhs: f64,
    pub rhs_boundary: f64,
    pub rhs_initial: f64,
    pub ratio: f64,
    /// Smallest `∂_ν β` on Γ⁺ with the adopted orientation.
    pub min_dnu_beta: f64,
    pub log_scale: f64,
}

/// Pointwise sum of the squared `t = 0` quantities of `u`.
pub fn initial_energy<R: Real>(u: &ComplexField<R>) -> Vec<R> {
    let g = *u.grid();
    let n0 = g.zero_level();
    let (dt, dt2) = (g.dt(), g.dt() * g.dt());
    let two = R::lit(2.0);
    let (l0, lm, lp) = (u.level(n0), u.level(n0 - 1), u.level(n0 + 1));
    let ut: Vec<Cx<R>> = (0..g.space_len()).map(|p| (lp[p] - lm[p]) / (two * dt)).collect();
    let mut out = vec![R::zero(); g.space_len()];
    for i in 1..g.n1() {
        for j in 1..g.n2() {
            let p = g.sidx(i, j);
            let utt = (lp[p] - l0[p] * two + lm[p]) / dt2;
            let gu = stencil::gradient(&g, l0, i, j);
            let gut = stencil::gradient(&g, &ut, i, j);
            let lut = stencil::laplacian(&g, &ut, i, j);
            out[p] = l0[p].norm_sqr()
                + ut[p].norm_sqr()
                + utt.norm_sqr()
                + gu[0].norm_sqr()
                + gu[1].norm_sqr()
                + gut[0].norm_sqr()
                + gut[1].norm_sqr()
                + lut.norm_sqr();
        }
    }
    out
}

/// Evaluates every term of the stability inequality. `alpha` and `gamma` are
/// flat spatial samples; `observation` is `∂_ν ∂_t² u` on Γ⁺.
pub fn stability_sides<R: Real>(
    u: &ComplexField<R>,
    observation: &ComplexTrace<R>,
    alpha: &[R],
    gamma: &[R],
    w: &CarlemanWeights<R>,
) -> Result<StabilitySides> {
    let g = *u.grid();
    w.check_grid(&g)?;
    if observation.boundary() != Boundary::Top || observation.window() != TimeWindow::Full {
        return Err(LabError::GridMismatch("observation must be a full-window trace on the top boundary".into()));
    }
    if alpha.len() != g.space_len() || gamma.len() != g.space_len() {
        return Err(LabError::GridMismatch("gap samples do not match the spatial grid".into()));
    }
    let f0 = initial_energy(u);
    let lhs = sum_over(&g, TimeWindow::Full, Region::Interior, |n, _, _, p| {
        w.scaled_weight(n, p) * (alpha[p] * alpha[p] + gamma[p] * gamma[p])
    });
    let init = sum_over(&g, TimeWindow::Full, Region::Interior, |n, _, _, p| w.scaled_weight(n, p) * f0[p]);
    let jt = Boundary::Top.x2_index(&g);
    let bnd = boundary_sum(&g, TimeWindow::Full, Region::Interior, |n, i| {
        let p = g.sidx(i, jt);
        let wt = w.scaled_weight(n, p);
        if wt == R::zero() {
            R::zero()
        } else {
            w.phi(n, p) * wt * w.dnu_beta(Boundary::Top, i) * observation.at(n, i).norm_sqr()
        }
    });
    let min_dnu_beta = (0..=g.n1()).map(|i| w.dnu_beta(Boundary::Top, i).to_f64_lossy()).fold(f64::INFINITY, f64::min);
    let (s, lam) = (w.s().to_f64_lossy(), w.lambda().to_f64_lossy());
    let lhs = lhs.to_f64_lossy();
    let rhs_boundary = s * lam * lam * bnd.to_f64_lossy();
    let rhs_initial = lam * init.to_f64_lossy();
    let rhs = rhs_boundary + rhs_initial;
    let ratio = if rhs > 0.0 {
        lhs / rhs
    } else if lhs > 0.0 {
        return Err(LabError::InequalityViolation(lhs));
    } else {
        0.0
    };
    Ok(StabilitySides {
        s,
        lambda: lam,
        lhs,
        rhs_boundary,
        rhs_initial,
        ratio,
        min_dnu_beta,
        log_scale: w.log_shift().to_f64_lossy(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{paper_fixture, SeparableSolution, SeparableTerm, TimeFactor};
    use crate::jet::Spatial;
    use crate::profile::{Profile1D, ProfileContext, ProfileSpec};
    use crate::weights::{build_weights, WeightSpec};

    fn ctx(g: &StripGrid<f64>) -> ProfileContext<f64> {
        ProfileContext { width: g.width(), half_length: g.half_length() }
    }

    fn paper_coeffs(g: &StripGrid<f64>) -> CoefficientField<f64> {
        CoefficientField::new(ProfileSpec::named("paper-a").resolve(&ctx(g)).unwrap(), Profile::constant(-1.0), g)
            .unwrap()
    }

    fn twin(g: StripGrid<f64>, alpha: f64, gamma: f64) -> TwinExperiment<f64> {
        let c = ctx(&g);
        let al = ProfileSpec::SinBump { amp: alpha }.resolve(&c).unwrap();
        let ga = ProfileSpec::CosBump { amp: gamma }.resolve(&c).unwrap();
        TwinExperiment::planted(g, paper_coeffs(&g), &al, &ga, Arc::new(paper_fixture())).unwrap()
    }

    #[test]
    fn identical_twins_give_zero() {
        let g = StripGrid::new(2.0, 1.0, 1.0, 8, 10, 40).unwrap();
        let run = run_twin(&twin(g, 0.0, 0.0)).unwrap();
        assert_eq!(run.u.max_abs(), 0.0);
        let reference: Arc<dyn ExactSolution<f64>> = Arc::new(paper_fixture());
        let bu = build_u_chain(&run.u, reference.clone(), Arc::new(paper_coeffs(&g)), false).unwrap();
        assert!(bu.chain.iter().all(|c| c.max_abs() == 0.0));
        let a = reconstruct_alpha(&bu).unwrap();
        assert_eq!(a.max_abs(), 0.0);
        let bv = build_v_chain(&run.u, reference, Arc::new(paper_coeffs(&g)), false).unwrap();
        assert_eq!(reconstruct_gamma(&bv).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn twin_difference_is_linear_in_gap() {
        let g = StripGrid::new(2.0, 1.0, 1.0, 8, 10, 40).unwrap();
        let u1 = run_twin(&twin(g, 0.01, 0.0)).unwrap().u;
        let u2 = run_twin(&twin(g, 0.02, 0.0)).unwrap().u;
        let (n1, n2) = (u1.max_abs(), u2.max_abs());
        assert!(n1 > 0.0);
        assert!((n2 / n1 - 2.0).abs() < 0.2, "{}", n2 / n1);
    }

    #[test]
    fn twin_satisfies_source_equation() {
        let coarse = StripGrid::new(2.0, 1.0, 1.0, 8, 10, 40).unwrap();
        let fine = StripGrid::new(2.0, 1.0, 1.0, 16, 20, 80).unwrap();
        let r: Vec<f64> = [coarse, fine]
            .iter()
            .map(|&g| {
                let e = twin(g, 0.05, 0.05);
                twin_source_residual(&e, &run_twin(&e).unwrap().u).unwrap()
            })
            .collect();
        // the source itself is of size 0.1; what remains is the time error of
        // the numerical q̃ against its closed form
        assert!(r[0] < 1e-4 && r[1] < r[0] / 2.0, "{r:?}");
    }

    #[test]
    fn paper_divisor_closed_forms() {
        // g = 2i e^{-it} / q̃², and ∂_t(q̃/Δq̃) = -i e^{-it}/2
        let f = paper_fixture::<f64>();
        for &(t, x2) in &[(0.3, 1.2), (-0.7, 1.9)] {
            let q = f.value(t, 0.0, x2);
            let e = Cx::new(0.0, -t).exp();
            let (_, _, r) = node_jets(ChainKind::U, &f, t, 0.0, x2);
            let expect = Cx::new(0.0, 2.0) * e / (q * q);
            assert!((r.dt().value() - expect).norm() < 1e-13);
            let (_, _, r) = node_jets(ChainKind::V, &f, t, 0.0, x2);
            assert!((r.dt().value() - Cx::new(0.0, -0.5) * e).norm() < 1e-13);
        }
    }

    #[test]
    fn second_chain_variable_two_ways() {
        let g = StripGrid::<f64>::new(2.0, 1.0, 1.0, 4, 10, 200).unwrap();
        let reference: Arc<dyn ExactSolution<f64>> = Arc::new(paper_fixture());
        let u = ComplexField::from_fn(g, TimeWindow::Full, |n, _, j| {
            let t = g.t(n);
            Cx::new(t.sin() * g.x2(j), t * t)
        });
        let b = build_u_chain(&u, reference.clone(), Arc::new(paper_coeffs(&g)), false).unwrap();
        let mut worst: f64 = 0.0;
        for n in 1..g.nt() {
            let (t, x2) = (g.t(n), g.x2(3));
            let uv = Cx::new(t.sin() * x2, t * t);
            let ut = Cx::new(t.cos() * x2, 2.0 * t);
            let q = reference.jet(t, 0.0, x2);
            let exact = (ut * q.value() - uv * q.deriv(1, Spatial::None)) / (q.value() * q.value());
            worst = worst.max((b.chain[1].at(n, 2, 3) - exact).norm());
        }
        assert!(worst < 5e-4, "{worst}");
    }

    #[test]
    fn divisor_guard_reports_location() {
        let g = StripGrid::new(2.0, 1.0, 1.0, 4, 4, 8).unwrap();
        let flat: Arc<dyn ExactSolution<f64>> = Arc::new(SeparableSolution::new(
            "flat",
            vec![SeparableTerm {
                coef: Cx::new(1.0, 0.0),
                time: TimeFactor::Const,
                x1: Profile1D::Const(1.0),
                x2: Profile1D::Const(1.0),
            }],
        ));
        let u = ComplexField::zeros(g, TimeWindow::Full);
        let err = build_u_chain(&u, flat, Arc::new(paper_coeffs(&g)), false).unwrap_err();
        assert!(matches!(err, LabError::DivisorGuard { name: "d_t(lap q_tilde / q_tilde)", .. }), "{err}");
    }

    /// `u = c(x)(e^{-it} - 1)` with `c = ε sin(π(x2-d)/d)` solves the source
    /// equation with the closed-form gaps below.
    fn manufactured(g: StripGrid<f64>, eps: f64) -> (ComplexField<f64>, Vec<f64>, Vec<f64>) {
        let c = |x2: f64| eps * (std::f64::consts::PI * (x2 - 1.0)).sin();
        let lap_c = |x2: f64| -std::f64::consts::PI.powi(2) * c(x2);
        let a = |x2: f64| (x2 * x2 + 5.0) / 2.0;
        let b = -1.0;
        let u = ComplexField::from_fn(g, TimeWindow::Full, |n, _, j| {
            c(g.x2(j)) * (Cx::new(0.0, -g.t(n)).exp() - 1.0)
        });
        let mut al = vec![0.0; g.space_len()];
        let mut ga = vec![0.0; g.space_len()];
        for i in 0..=g.n1() {
            for j in 0..=g.n2() {
                let x2 = g.x2(j);
                let gamma = c(x2) + a(x2) * lap_c(x2) + b * c(x2);
                ga[g.sidx(i, j)] = gamma;
                al[g.sidx(i, j)] = -(a(x2) * lap_c(x2) + b * c(x2) + gamma * (x2 * x2 + 5.0)) / 2.0;
            }
        }
        (u, al, ga)
    }

    #[test]
    fn manufactured_alpha_converges_at_second_order() {
        let reference: Arc<dyn ExactSolution<f64>> = Arc::new(paper_fixture());
        let mut errs = Vec::new();
        for k in [1usize, 2, 4] {
            let g = StripGrid::new(2.0, 1.0, 1.0, 4, 10 * k, 40 * k).unwrap();
            let (u, al, _) = manufactured(g, 0.05);
            let b = build_u_chain(&u, reference.clone(), Arc::new(paper_coeffs(&g)), false).unwrap();
            errs.push(reconstruct_alpha(&b).unwrap().relative_l2_error(&al));
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
        }
    }

    #[test]
    fn manufactured_gamma_is_recovered() {
        let reference: Arc<dyn ExactSolution<f64>> = Arc::new(paper_fixture());
        let g = StripGrid::new(2.0, 1.0, 1.0, 4, 20, 80).unwrap();
        let (u, _, ga) = manufactured(g, 0.05);
        let b = build_v_chain(&u, reference, Arc::new(paper_coeffs(&g)), false).unwrap();
        let r = reconstruct_gamma(&b).unwrap();
        assert!(r.relative_l2_error(&ga) < 0.01, "{}", r.relative_l2_error(&ga));
    }

    #[test]
    fn noise_statistics() {
        let g = StripGrid::<f64>::new(2.0, 1.0, 1.0, 64, 4, 200).unwrap();
        let tr = ComplexTrace::from_fn(g, TimeWindow::Full, Boundary::Top, |n, i| Cx::new(1.0 + g.t(n), g.x1(i)));
        assert_eq!(add_observation_noise(&tr, 0.0, 1).unwrap().values(), tr.values());
        let a = add_observation_noise(&tr, 0.01, 7).unwrap();
        let b = add_observation_noise(&tr, 0.01, 7).unwrap();
        assert_eq!(a.values(), b.values());
        let diff = ComplexTrace::from_fn(g, TimeWindow::Full, Boundary::Top, |n, i| a.at(n, i) - tr.at(n, i));
        let rel = diff.rms() / (0.01 * tr.rms());
        assert!((rel - 1.0).abs() < 0.2, "{rel}");
        assert!(add_observation_noise(&tr, -1.0, 1).is_err());
    }

    #[test]
    fn stability_sides_of_identical_twins_vanish() {
        let g = StripGrid::new(2.0, 1.0, 1.0, 8, 10, 40).unwrap();
        let run = run_twin(&twin(g, 0.0, 0.0)).unwrap();
        let bt = ProfileSpec::named("exp-decreasing").resolve(&ctx(&g)).unwrap();
        let w = build_weights(&WeightSpec { beta_tilde: bt, m: 2.0, lambda: 1.0, s: 8.0 }, &g).unwrap();
        let zero = vec![0.0; g.space_len()];
        let s = stability_sides(&run.u, &observation_trace(&run.u), &zero, &zero, &w).unwrap();
        assert_eq!((s.lhs, s.rhs_boundary, s.rhs_initial, s.ratio), (0.0, 0.0, 0.0, 0.0));
        assert!(s.min_dnu_beta > 0.0);
    }
}
