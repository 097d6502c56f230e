//! The operator `H`, its conjugated parts `M1`, `M2`, and numerical audits
//! of the weighted estimates.
//!
//! Every weighted integral uses `e^{-2sη - log_scale}` so that large `s` stays
//! representable; ratios are unaffected and `log_scale` is reported.

use rayon::prelude::*;
use serde::Serialize;

use crate::coeffs::CoefficientField;
use crate::error::{LabError, Result};
use crate::forward::normal_derivative_trace;
use crate::grid::{Boundary, ComplexField, StripGrid, TimeWindow};
use crate::profile::Profile;
use crate::quadrature::{boundary_sum, sum_over, Region};
use crate::scalar::{Cx, Real};
use crate::stencil;
use crate::weights::{build_weights, CarlemanWeights, WeightSpec};

/// Magnitude below which `ψ` is not probed by [`conjugation_residual`].
pub const PSI_FLOOR: f64 = 1e-14;

/// Largest boundary value accepted by [`carleman_sides`].
pub const TRACE_TOL: f64 = 1e-12;

fn full_window<R: Real>(f: &ComplexField<R>, what: &str) -> Result<()> {
    if f.window() == TimeWindow::Full {
        Ok(())
    } else {
        Err(LabError::GridMismatch(format!("{what} must live on the full window [-T, T]")))
    }
}

#[inline]
fn valid<R: Real>(g: &StripGrid<R>, n: usize, i: usize, j: usize) -> bool {
    n > 0 && n < g.nt() && i > 0 && i < g.n1() && j > 0 && j < g.n2()
}

#[inline]
fn dt_centred<R: Real>(f: &ComplexField<R>, n: usize, p: usize) -> Cx<R> {
    let dt = f.grid().dt();
    (f.at_flat(n + 1, p) - f.at_flat(n - 1, p)) / (dt + dt)
}

/// Centred-difference `Hq = i∂_t q + aΔq + bq`; zero on the invalid layers.
pub fn apply_h<R: Real>(q: &ComplexField<R>, c: &CoefficientField<R>) -> Result<ComplexField<R>> {
    full_window(q, "q")?;
    c.check_grid(q.grid())?;
    let g = *q.grid();
    let iu = Cx::new(R::zero(), R::one());
    Ok(ComplexField::from_fn(g, TimeWindow::Full, |n, i, j| {
        if !valid(&g, n, i, j) {
            return Cx::new(R::zero(), R::zero());
        }
        let p = g.sidx(i, j);
        iu * dt_centred(q, n, p) + stencil::laplacian(&g, q.level(n), i, j) * c.a(p) + q.at_flat(n, p) * c.b(p)
    }))
}

fn check_pair<R: Real>(psi: &ComplexField<R>, c: &CoefficientField<R>, w: &CarlemanWeights<R>) -> Result<()> {
    full_window(psi, "psi")?;
    c.check_grid(psi.grid())?;
    w.check_grid(psi.grid())
}

#[inline]
fn m1_at<R: Real>(psi: &ComplexField<R>, c: &CoefficientField<R>, w: &CarlemanWeights<R>, n: usize, i: usize, j: usize) -> Cx<R> {
    let g = psi.grid();
    let p = g.sidx(i, j);
    let s = w.s();
    let aj = c.a_jet(p);
    let ge = w.grad_eta(n, p);
    let v = psi.at_flat(n, p);
    let zero_order = s * s * aj.value * (ge[0] * ge[0] + ge[1] * ge[1]) + c.b(p)
        - s * (ge[0] * aj.grad[0] + ge[1] * aj.grad[1]);
    Cx::new(R::zero(), R::one()) * dt_centred(psi, n, p) + stencil::laplacian(g, psi.level(n), i, j) * aj.value + v * zero_order
}

#[inline]
fn m2_at<R: Real>(psi: &ComplexField<R>, c: &CoefficientField<R>, w: &CarlemanWeights<R>, n: usize, i: usize, j: usize) -> Cx<R> {
    let g = psi.grid();
    let p = g.sidx(i, j);
    let s = w.s();
    let aj = c.a_jet(p);
    let ge = w.grad_eta(n, p);
    let gr = stencil::gradient(g, psi.level(n), i, j);
    let v = psi.at_flat(n, p);
    Cx::new(R::zero(), s * w.dt_eta(n, p)) * v
        + (gr[0] * ge[0] + gr[1] * ge[1]) * (R::lit(2.0) * aj.value * s)
        + v * (s * w.div_a_grad_eta(n, p, aj))
}

/// `M1ψ = i∂_tψ + aΔψ + s²a|∇η|²ψ + (b - s∇η·∇a)ψ`.
pub fn apply_m1<R: Real>(psi: &ComplexField<R>, c: &CoefficientField<R>, w: &CarlemanWeights<R>) -> Result<ComplexField<R>> {
    check_pair(psi, c, w)?;
    let g = *psi.grid();
    Ok(ComplexField::from_fn(g, TimeWindow::Full, |n, i, j| {
        if valid(&g, n, i, j) {
            m1_at(psi, c, w, n, i, j)
        } else {
            Cx::new(R::zero(), R::zero())
        }
    }))
}

/// `M2ψ = is∂_tη ψ + 2as∇η·∇ψ + s∇·(a∇η)ψ`.
pub fn apply_m2<R: Real>(psi: &ComplexField<R>, c: &CoefficientField<R>, w: &CarlemanWeights<R>) -> Result<ComplexField<R>> {
    check_pair(psi, c, w)?;
    let g = *psi.grid();
    Ok(ComplexField::from_fn(g, TimeWindow::Full, |n, i, j| {
        if valid(&g, n, i, j) {
            m2_at(psi, c, w, n, i, j)
        } else {
            Cx::new(R::zero(), R::zero())
        }
    }))
}

/// `max |M1ψ + M2ψ - e^{-sη} H(e^{sη}ψ)|` over valid nodes where
/// `|ψ| ≥ 1e-14`. The conjugated operator is evaluated with neighbour
/// factors `e^{s(η_k - η_c)}` so no weight is formed on its own.
pub fn conjugation_residual<R: Real>(psi: &ComplexField<R>, c: &CoefficientField<R>, w: &CarlemanWeights<R>) -> Result<R> {
    check_pair(psi, c, w)?;
    let g = *psi.grid();
    let s = w.s();
    let floor = R::lit(PSI_FLOOR);
    let (dt2, h1s, h2s) = (g.dt() + g.dt(), g.h1() * g.h1(), g.h2() * g.h2());
    let iu = Cx::new(R::zero(), R::one());
    let zero = Cx::new(R::zero(), R::zero());
    let mut worst = R::zero();
    for n in 1..g.nt() {
        for i in 1..g.n1() {
            for j in 1..g.n2() {
                let p = g.sidx(i, j);
                let v = psi.at_flat(n, p);
                if v.norm() < floor {
                    continue;
                }
                let ec = w.eta(n, p);
                let shifted = |m: usize, q: usize| -> Result<Cx<R>> {
                    let u = psi.at_flat(m, q);
                    if u.re == R::zero() && u.im == R::zero() {
                        return Ok(zero);
                    }
                    let f = (s * (w.eta(m, q) - ec)).exp();
                    if !f.is_finite() {
                        return Err(LabError::WeightOverflow(format!(
                            "e^(s eta) not representable at level {m} where psi = {:e}",
                            u.norm()
                        )));
                    }
                    Ok(u * f)
                };
                let st = g.n2() + 1;
                let conj = iu * (shifted(n + 1, p)? - shifted(n - 1, p)?) / dt2
                    + ((shifted(n, p + st)? - v * R::lit(2.0) + shifted(n, p - st)?) / h1s
                        + (shifted(n, p + 1)? - v * R::lit(2.0) + shifted(n, p - 1)?) / h2s)
                        * c.a(p)
                    + v * c.b(p);
                let r = (m1_at(psi, c, w, n, i, j) + m2_at(psi, c, w, n, i, j) - conj).norm();
                if !r.is_finite() {
                    return Err(LabError::WeightOverflow(format!("non-finite residual at ({n}, {i}, {j})")));
                }
                worst = worst.max(r);
            }
        }
    }
    Ok(worst)
}

/// Which of the two Carleman inequalities is audited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Variant {
    /// Without the evolution term.
    First,
    /// With `(sλ)^{-1} ∫ e^{-2sη} |i∂_t q + aΔq|²` on the left.
    Second,
}

impl Variant {
    pub fn from_index(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Variant::First),
            2 => Ok(Variant::Second),
            _ => Err(LabError::Config(format!("variant must be 1 or 2, got {k}"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Variant::First => 1,
            Variant::Second => 2,
        }
    }
}

/// Both sides of one Carleman inequality, each term times `e^{-log_scale}`.
#[derive(Debug, Clone, Serialize)]
pub struct CarlemanSides {
    pub variant: u8,
    pub s: f64,
    pub lambda: f64,
    pub lhs_q: f64,
    pub lhs_grad: f64,
    pub lhs_m1: f64,
    pub lhs_m2: f64,
    /// Zero for the first variant.
    pub lhs_evol: f64,
    pub rhs_boundary: f64,
    pub rhs_source: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub log_scale: f64,
}

/// Evaluates every term of the inequality for `q` vanishing on the lateral
/// boundary.
pub fn carleman_sides<R: Real>(
    q: &ComplexField<R>,
    c: &CoefficientField<R>,
    w: &CarlemanWeights<R>,
    variant: Variant,
) -> Result<CarlemanSides> {
    check_pair(q, c, w)?;
    let trace = q.max_abs_on_space_boundary();
    if trace > R::lit(TRACE_TOL) {
        return Err(LabError::NonzeroTrace(trace.to_f64_lossy()));
    }
    let g = *q.grid();
    let (s, lam) = (w.s(), w.lambda());
    let two = R::lit(2.0);
    let iu = Cx::new(R::zero(), R::one());
    let mut acc = [R::zero(); 7];
    // one pass per term keeps the closures simple; all share the same nodes
    let mut integrate = |k: usize, f: &dyn Fn(usize, usize, usize, usize) -> R| {
        acc[k] = sum_over(&g, TimeWindow::Full, Region::Interior, |n, i, j, p| {
            let wt = w.scaled_weight(n, p);
            if wt == R::zero() {
                R::zero()
            } else {
                wt * f(n, i, j, p)
            }
        });
    };
    integrate(0, &|n, _, _, p| q.at_flat(n, p).norm_sqr());
    integrate(1, &|n, i, j, _| {
        let gr = stencil::gradient(&g, q.level(n), i, j);
        gr[0].norm_sqr() + gr[1].norm_sqr()
    });
    // M1ψ, M2ψ with ψ = e^{-sη} q, written in q so that only e^{-2sη} appears
    integrate(2, &|n, i, j, p| {
        let aj = c.a_jet(p);
        let (ge, le, et) = (w.grad_eta(n, p), w.lap_eta(n, p), w.dt_eta(n, p));
        let v = q.at_flat(n, p);
        let gr = stencil::gradient(&g, q.level(n), i, j);
        let ge2 = ge[0] * ge[0] + ge[1] * ge[1];
        let m1 = iu * (dt_centred(q, n, p) - v * (s * et))
            + (stencil::laplacian(&g, q.level(n), i, j) - (gr[0] * ge[0] + gr[1] * ge[1]) * (two * s)
                + v * (s * s * ge2 - s * le))
                * aj.value
            + v * (s * s * aj.value * ge2 + c.b(p) - s * (ge[0] * aj.grad[0] + ge[1] * aj.grad[1]));
        m1.norm_sqr()
    });
    integrate(3, &|n, i, j, p| {
        let aj = c.a_jet(p);
        let ge = w.grad_eta(n, p);
        let v = q.at_flat(n, p);
        let gr = stencil::gradient(&g, q.level(n), i, j);
        let m2 = iu * v * (s * w.dt_eta(n, p))
            + ((gr[0] - v * (s * ge[0])) * ge[0] + (gr[1] - v * (s * ge[1])) * ge[1]) * (two * aj.value * s)
            + v * (s * w.div_a_grad_eta(n, p, aj));
        m2.norm_sqr()
    });
    if variant == Variant::Second {
        integrate(4, &|n, i, j, p| {
            (iu * dt_centred(q, n, p) + stencil::laplacian(&g, q.level(n), i, j) * c.a(p)).norm_sqr()
        });
    }
    integrate(5, &|n, i, j, p| {
        (iu * dt_centred(q, n, p) + stencil::laplacian(&g, q.level(n), i, j) * c.a(p) + q.at_flat(n, p) * c.b(p))
            .norm_sqr()
    });
    let dn = normal_derivative_trace(q, Boundary::Top);
    let jt = Boundary::Top.x2_index(&g);
    acc[6] = boundary_sum(&g, TimeWindow::Full, Region::Interior, |n, i| {
        let wt = w.scaled_weight(n, g.sidx(i, jt));
        if wt == R::zero() {
            R::zero()
        } else {
            wt * dn.at(n, i).norm_sqr() * w.dnu_beta(Boundary::Top, i)
        }
    });
    let f = |v: R| v.to_f64_lossy();
    let (s64, l64) = (f(s), f(lam));
    let lhs_q = s64.powi(3) * l64.powi(4) * f(acc[0]);
    let lhs_grad = s64 * l64 * f(acc[1]);
    let lhs_evol = if variant == Variant::Second { f(acc[4]) / (s64 * l64) } else { 0.0 };
    let rhs_boundary = s64 * l64 * f(acc[6]);
    let rhs_source = f(acc[5]);
    let lhs = lhs_q + lhs_grad + f(acc[2]) + f(acc[3]) + lhs_evol;
    let rhs = rhs_boundary + rhs_source;
    let ratio = if rhs > 0.0 {
        lhs / rhs
    } else if lhs > 0.0 {
        return Err(LabError::InequalityViolation(lhs));
    } else {
        0.0
    };
    Ok(CarlemanSides {
        variant: variant.index(),
        s: s64,
        lambda: l64,
        lhs_q,
        lhs_grad,
        lhs_m1: f(acc[2]),
        lhs_m2: f(acc[3]),
        lhs_evol,
        rhs_boundary,
        rhs_source,
        lhs,
        rhs,
        ratio,
        log_scale: f(w.log_shift()),
    })
}

/// Carleman sides over every `(λ, s)` pair, evaluated in parallel and
/// returned sorted by `(s, λ)`.
pub fn carleman_sweep<R: Real>(
    q: &ComplexField<R>,
    c: &CoefficientField<R>,
    beta_tilde: &Profile<R>,
    m: R,
    lambdas: &[R],
    ss: &[R],
    variant: Variant,
) -> Result<Vec<CarlemanSides>> {
    let points: Vec<(R, R)> = lambdas.iter().flat_map(|&l| ss.iter().map(move |&s| (l, s))).collect();
    let mut rows = points
        .par_iter()
        .map(|&(lambda, s)| {
            let spec = WeightSpec { beta_tilde: beta_tilde.clone(), m, lambda, s };
            let w = build_weights(&spec, q.grid())?;
            carleman_sides(q, c, &w, variant)
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.s.total_cmp(&b.s).then(a.lambda.total_cmp(&b.lambda)));
    Ok(rows)
}

/// `max / min` of the ratios of a sweep; infinite if some ratio vanishes.
pub fn ratio_spread(rows: &[CarlemanSides]) -> f64 {
    spread(rows.iter().map(|r| r.ratio))
}

pub(crate) fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// `∫_0^t q(x, ξ) dξ` by cumulative trapezoid from `t = 0` in both directions.
pub fn time_antiderivative<R: Real>(q: &ComplexField<R>) -> Result<ComplexField<R>> {
    full_window(q, "q")?;
    let g = *q.grid();
    let n0 = g.zero_level();
    let half = g.dt() / R::lit(2.0);
    let mut out = ComplexField::zeros(g, TimeWindow::Full);
    for n in n0 + 1..=g.nt() {
        for p in 0..g.space_len() {
            let v = out.at_flat(n - 1, p) + (q.at_flat(n, p) + q.at_flat(n - 1, p)) * half;
            out.level_mut(n)[p] = v;
        }
    }
    for n in (0..n0).rev() {
        for p in 0..g.space_len() {
            let v = out.at_flat(n + 1, p) - (q.at_flat(n, p) + q.at_flat(n + 1, p)) * half;
            out.level_mut(n)[p] = v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaRow {
    pub s: f64,
    pub lambda: f64,
    /// `∫∫ |∫_0^t q|² e^{-2sη}`, scaled by `e^{-log_scale}`.
    pub lhs: f64,
    /// `∫∫ |q|² e^{-2sη}`, same scaling.
    pub rhs: f64,
    pub kappa_hat: f64,
    pub log_scale: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub rows: Vec<LemmaRow>,
    /// Largest `kappa_hat`: the measured constant.
    pub kappa_max: f64,
    /// `max / min` of `kappa_hat`.
    pub kappa_spread: f64,
    /// Ratios `(lhs/rhs)(s_k) / (lhs/rhs)(s_{k+1})` between consecutive rows.
    pub decay_factors: Vec<f64>,
}

/// Measures `s · lhs/rhs` of the time-antiderivative inequality at every `s`.
pub fn lemma_audit<R: Real>(q: &ComplexField<R>, weights: &CarlemanWeights<R>, ss: &[R]) -> Result<LemmaReport> {
    weights.check_grid(q.grid())?;
    let big_q = time_antiderivative(q)?;
    let g = *q.grid();
    let mut rows = Vec::with_capacity(ss.len());
    for &s in ss {
        let w = weights.with_s(s)?;
        let lhs = sum_over(&g, TimeWindow::Full, Region::All, |n, _, _, p| {
            w.scaled_weight(n, p) * big_q.at_flat(n, p).norm_sqr()
        });
        let rhs = sum_over(&g, TimeWindow::Full, Region::All, |n, _, _, p| {
            w.scaled_weight(n, p) * q.at_flat(n, p).norm_sqr()
        });
        let (lhs, rhs) = (lhs.to_f64_lossy(), rhs.to_f64_lossy());
        let kappa_hat = if rhs > 0.0 { s.to_f64_lossy() * lhs / rhs } else { 0.0 };
        rows.push(LemmaRow {
            s: s.to_f64_lossy(),
            lambda: w.lambda().to_f64_lossy(),
            lhs,
            rhs,
            kappa_hat,
            log_scale: w.log_shift().to_f64_lossy(),
        });
    }
    rows.sort_by(|a, b| a.s.total_cmp(&b.s));
    let kappa_max = rows.iter().fold(0.0f64, |m, r| m.max(r.kappa_hat));
    let kappa_spread = spread(rows.iter().map(|r| r.kappa_hat));
    let decay_factors = rows
        .windows(2)
        .map(|p| {
            let (a, b) = (p[0].lhs / p[0].rhs, p[1].lhs / p[1].rhs);
            a / b
        })
        .collect();
    Ok(LemmaReport { rows, kappa_max, kappa_spread, decay_factors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{audit_fixture, ExactSolution};
    use crate::profile::{ProfileContext, ProfileSpec};

    fn grid() -> StripGrid<f64> {
        StripGrid::new(4.0, 1.0, 1.0, 16, 20, 40).unwrap()
    }

    fn paper_pair(g: &StripGrid<f64>, b: f64) -> (CoefficientField<f64>, Profile<f64>) {
        let ctx = ProfileContext { width: g.width(), half_length: g.half_length() };
        let a = ProfileSpec::named("paper-a").resolve(&ctx).unwrap();
        let c = CoefficientField::new(a, Profile::constant(b), g).unwrap();
        (c, ProfileSpec::named("exp-decreasing").resolve(&ctx).unwrap())
    }

    fn weights(g: &StripGrid<f64>, bt: &Profile<f64>, lambda: f64, s: f64) -> CarlemanWeights<f64> {
        build_weights(&WeightSpec { beta_tilde: bt.clone(), m: 2.0, lambda, s }, g).unwrap()
    }

    #[test]
    fn h_of_phase_with_matching_potential_vanishes() {
        let g = grid();
        let c = CoefficientField::new(Profile::constant(2.0), Profile::constant(-1.0), &g).unwrap();
        let q = ComplexField::from_fn(g, TimeWindow::Full, |n, _, _| Cx::new(0.0, -g.t(n)).exp());
        let h = apply_h(&q, &c).unwrap();
        // time error only: i δ_t e^{-it} = e^{-it} sin(dt)/dt
        assert!(h.max_abs() < g.dt() * g.dt());
        let k = ComplexField::from_fn(g, TimeWindow::Full, |_, _, _| Cx::new(3.0, 1.0));
        let c0 = CoefficientField::new(Profile::constant(2.0), Profile::constant(0.0), &g).unwrap();
        assert!(apply_h(&k, &c0).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn zero_psi_gives_zero() {
        let g = grid();
        let (c, bt) = paper_pair(&g, -1.0);
        let w = weights(&g, &bt, 2.0, 8.0);
        let z = ComplexField::zeros(g, TimeWindow::Full);
        assert_eq!(apply_m1(&z, &c, &w).unwrap().max_abs(), 0.0);
        assert_eq!(apply_m2(&z, &c, &w).unwrap().max_abs(), 0.0);
        assert_eq!(conjugation_residual(&z, &c, &w).unwrap(), 0.0);
        let sides = carleman_sides(&z, &c, &w, Variant::Second).unwrap();
        assert_eq!(sides.lhs, 0.0);
        assert_eq!(sides.ratio, 0.0);
    }

    #[test]
    fn small_s_limit() {
        let g = grid();
        let (c, bt) = paper_pair(&g, -1.0);
        let w = weights(&g, &bt, 1.0, 1e-9);
        let psi = audit_fixture(&g, true).sample(g, TimeWindow::Full);
        let m1 = apply_m1(&psi, &c, &w).unwrap();
        let m2 = apply_m2(&psi, &c, &w).unwrap();
        let h = apply_h(&psi, &c).unwrap();
        for k in 0..h.values().len() {
            assert!((m1.values()[k] - h.values()[k]).norm() < 1e-5);
        }
        assert!(m2.max_abs() < 1e-5);
    }

    fn residual(n1: usize, n2: usize, nt: usize, constant_a: bool) -> f64 {
        let g = StripGrid::new(4.0, 1.0, 1.0, n1, n2, nt).unwrap();
        let (mut c, bt) = paper_pair(&g, -1.0);
        if constant_a {
            c = CoefficientField::new(Profile::constant(3.0), Profile::constant(-1.0), &g).unwrap();
        }
        let psi = audit_fixture(&g, true).sample(g, TimeWindow::Full);
        conjugation_residual(&psi, &c, &weights(&g, &bt, 2.0, 8.0)).unwrap()
    }

    #[test]
    fn conjugation_identity_converges() {
        for constant_a in [false, true] {
            let coarse = residual(8, 40, 200, constant_a);
            let fine = residual(16, 80, 400, constant_a);
            assert!(coarse / fine >= 3.5, "{coarse} {fine}");
        }
    }

    #[test]
    fn nonzero_trace_rejected() {
        let g = grid();
        let (c, bt) = paper_pair(&g, -1.0);
        let q = ComplexField::from_fn(g, TimeWindow::Full, |_, _, _| Cx::new(1.0, 0.0));
        let err = carleman_sides(&q, &c, &weights(&g, &bt, 1.0, 8.0), Variant::First).unwrap_err();
        assert!(matches!(err, LabError::NonzeroTrace(_)));
    }

    #[test]
    fn sides_scale_quadratically() {
        let g = grid();
        let (c, bt) = paper_pair(&g, -1.0);
        let w = weights(&g, &bt, 1.0, 16.0);
        let q = audit_fixture(&g, true).sample(g, TimeWindow::Full);
        let a = carleman_sides(&q, &c, &w, Variant::Second).unwrap();
        let b = carleman_sides(&q.scale(Cx::new(3.0, -4.0)), &c, &w, Variant::Second).unwrap();
        for (x, y) in [(a.lhs_q, b.lhs_q), (a.lhs_m1, b.lhs_m1), (a.rhs_boundary, b.rhs_boundary), (a.lhs, b.lhs)] {
            assert!((y - 25.0 * x).abs() <= 1e-10 * y.abs(), "{x} {y}");
        }
        assert!((a.ratio - b.ratio).abs() <= 1e-10 * a.ratio);
        for t in [a.lhs_q, a.lhs_grad, a.lhs_m1, a.lhs_m2, a.lhs_evol, a.rhs_boundary, a.rhs_source] {
            assert!(t >= 0.0);
        }
    }

    #[test]
    fn sweep_is_sorted() {
        let g = StripGrid::new(4.0, 1.0, 1.0, 8, 10, 20).unwrap();
        let (c, bt) = paper_pair(&g, -1.0);
        let q = audit_fixture(&g, true).sample(g, TimeWindow::Full);
        let rows = carleman_sweep(&q, &c, &bt, 2.0, &[2.0, 1.0], &[16.0, 8.0], Variant::First).unwrap();
        let keys: Vec<(f64, f64)> = rows.iter().map(|r| (r.s, r.lambda)).collect();
        assert_eq!(keys, vec![(8.0, 1.0), (8.0, 2.0), (16.0, 1.0), (16.0, 2.0)]);
    }

    #[test]
    fn antiderivative_of_constant_is_t() {
        let g = StripGrid::new(1.0, 1.0, 1.0, 4, 4, 10).unwrap();
        let q = ComplexField::from_fn(g, TimeWindow::Full, |_, _, _| Cx::new(2.0, 1.0));
        let big = time_antiderivative(&q).unwrap();
        for n in g.levels(TimeWindow::Full) {
            assert!((big.at(n, 2, 2) - Cx::new(2.0, 1.0) * g.t(n)).norm() < 1e-13);
        }
    }

    #[test]
    fn lemma_on_time_independent_field() {
        let g = StripGrid::new(4.0, 1.0, 1.0, 8, 20, 100).unwrap();
        let (_, bt) = paper_pair(&g, -1.0);
        let w = weights(&g, &bt, 1.0, 8.0);
        let q = audit_fixture(&g, false).sample(g, TimeWindow::Full);
        let rep = lemma_audit(&q, &w, &[8.0, 16.0]).unwrap();
        for r in &rep.rows {
            // weighted mean of t² lies in [0, T²]
            assert!(r.lhs / r.rhs <= 1.0 + 1e-12);
            assert!(r.lhs <= rep.kappa_max / r.s * r.rhs * (1.0 + 1e-12));
        }
        assert!(rep.decay_factors[0] > 1.5);
        let z = ComplexField::zeros(g, TimeWindow::Full);
        assert_eq!(lemma_audit(&z, &w, &[8.0]).unwrap().kappa_max, 0.0);
    }
}
