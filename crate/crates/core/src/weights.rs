//! Carleman weight functions and the checks on the weight `β̃`.
//!
//! With `β = β̃ + K`, `K = m‖β̃‖∞` and `θ(t) = 1/((T+t)(T-t))`:
//! `φ = e^{λβ} θ`, `η = (e^{2λK} - e^{λβ}) θ`. Spatial arrays are stored
//! once and combined with `θ` on demand.

use std::sync::Arc;

use serde::Serialize;

use crate::coeffs::CoefficientField;
use crate::error::{LabError, Result};
use crate::grid::{Boundary, RealField, StripGrid, TimeWindow};
use crate::profile::{Profile, SpatialJet};
use crate::scalar::Real;

/// Largest exponent the weights are allowed to reach.
pub const LOG_CAP: f64 = 700.0;

/// Positivity threshold used for `C0` and the pseudo-convexity margin.
pub const MARGIN_EPS: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct WeightSpec<R: Real> {
    pub beta_tilde: Profile<R>,
    pub m: R,
    pub lambda: R,
    pub s: R,
}

impl<R: Real> WeightSpec<R> {
    pub fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.m > R::one()) {
            return Err(LabError::Config(format!("weights.m must exceed 1, got {}", self.m)));
        }
        if !(self.lambda.is_finite() && self.lambda > R::zero()) {
            return Err(LabError::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.s.is_finite() && self.s > R::zero()) {
            return Err(LabError::Config(format!("s must be positive, got {}", self.s)));
        }
        Ok(())
    }
}

/// Orientation of the normal used for `∂_ν` on the horizontal boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// Outward normal: `-e2` on Γ⁻, `+e2` on Γ⁺.
    Outward,
    /// Inward normal, adopted when only it satisfies the Γ⁻ sign test.
    Inward,
}

impl Orientation {
    pub fn sign<R: Real>(self) -> R {
        match self {
            Orientation::Outward => R::one(),
            Orientation::Inward => -R::one(),
        }
    }
}

/// Γ⁻ sign test under both orientations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaMinusSign {
    /// `max ∂_ν β̃` on Γ⁻ with the outward normal.
    pub outward: f64,
    /// Same with the inward normal.
    pub inward: f64,
    pub adopted: Orientation,
}

impl GammaMinusSign {
    pub fn adopted_value(&self) -> f64 {
        match self.adopted {
            Orientation::Outward => self.outward,
            Orientation::Inward => self.inward,
        }
    }

    /// The literal outward test fails but the inward one passes.
    pub fn discrepancy(&self) -> bool {
        self.adopted == Orientation::Inward
    }
}

pub fn gamma_minus_sign<R: Real>(beta_tilde: &Profile<R>, grid: &StripGrid<R>) -> GammaMinusSign {
    let x2 = grid.width();
    let mut outward = f64::NEG_INFINITY;
    let mut inward = f64::NEG_INFINITY;
    for i in 0..=grid.n1() {
        let d2 = beta_tilde.partial(grid.x1(i), x2, 0, 1).to_f64_lossy();
        outward = outward.max(-d2);
        inward = inward.max(d2);
    }
    let adopted = if outward <= 0.0 || inward > 0.0 { Orientation::Outward } else { Orientation::Inward };
    GammaMinusSign { outward, inward, adopted }
}

#[derive(Debug)]
struct SpatialPart<R> {
    beta: Vec<R>,
    /// `e^{2λK} - e^{λβ}`.
    alpha: Vec<R>,
    e_beta: Vec<R>,
    grad_beta: Vec<[R; 2]>,
    lap_beta: Vec<R>,
    alpha_min: R,
}

/// Weight functions for one `(λ, s)` pair.
#[derive(Debug, Clone)]
pub struct CarlemanWeights<R: Real> {
    grid: StripGrid<R>,
    lambda: R,
    s: R,
    m: R,
    k: R,
    sup_beta_tilde: R,
    orientation: Orientation,
    spatial: Arc<SpatialPart<R>>,
    theta: Arc<Vec<R>>,
    log_shift: R,
}

/// `sup |β̃|` over the `x1` nodes and an `x2` grid four times finer.
pub fn sup_norm<R: Real>(beta_tilde: &Profile<R>, grid: &StripGrid<R>) -> (R, R) {
    let fine = 4 * grid.n2();
    let h = grid.width() / R::from_usize_lossy(fine);
    let (mut sup, mut min) = (R::zero(), R::infinity());
    for i in 0..=grid.n1() {
        for j in 0..=fine {
            let x2 = if j == fine { grid.width() + grid.width() } else { grid.width() + h * R::from_usize_lossy(j) };
            let v = beta_tilde.value(grid.x1(i), x2);
            sup = sup.max(v.abs());
            min = min.min(v);
        }
    }
    (sup, min)
}

pub fn build_weights<R: Real>(spec: &WeightSpec<R>, grid: &StripGrid<R>) -> Result<CarlemanWeights<R>> {
    spec.validate()?;
    let (sup, min) = sup_norm(&spec.beta_tilde, grid);
    if !(min > R::zero()) || !sup.is_finite() {
        return Err(LabError::Config(format!(
            "beta_tilde `{}` must be positive and bounded on the strip (min {min}, sup {sup})",
            spec.beta_tilde.name()
        )));
    }
    let k = spec.m * sup;
    let lam = spec.lambda;
    let top = R::lit(2.0) * lam * k;
    if top > R::lit(LOG_CAP) {
        return Err(LabError::WeightOverflow(format!("2 lambda K = {top} exceeds the log-space cap {LOG_CAP}")));
    }
    let e2k = top.exp();
    let n = grid.space_len();
    let mut sp = SpatialPart {
        beta: Vec::with_capacity(n),
        alpha: Vec::with_capacity(n),
        e_beta: Vec::with_capacity(n),
        grad_beta: Vec::with_capacity(n),
        lap_beta: Vec::with_capacity(n),
        alpha_min: R::infinity(),
    };
    for i in 0..=grid.n1() {
        for j in 0..=grid.n2() {
            let jet = spec.beta_tilde.jet(grid.x1(i), grid.x2(j));
            let beta = jet.value + k;
            let eb = (lam * beta).exp();
            sp.beta.push(beta);
            sp.e_beta.push(eb);
            sp.alpha.push(e2k - eb);
            sp.alpha_min = sp.alpha_min.min(e2k - eb);
            sp.grad_beta.push(jet.grad);
            sp.lap_beta.push(jet.laplacian());
        }
    }
    let t2 = grid.horizon() * grid.horizon();
    let theta = (0..=grid.nt())
        .map(|n| {
            if n == 0 || n == grid.nt() {
                R::infinity()
            } else {
                let t = grid.t(n);
                R::one() / (t2 - t * t)
            }
        })
        .collect();
    let orientation = gamma_minus_sign(&spec.beta_tilde, grid).adopted;
    let mut w = CarlemanWeights {
        grid: *grid,
        lambda: lam,
        s: spec.s,
        m: spec.m,
        k,
        sup_beta_tilde: sup,
        orientation,
        spatial: Arc::new(sp),
        theta: Arc::new(theta),
        log_shift: R::zero(),
    };
    w.log_shift = w.max_log_weight();
    Ok(w)
}

impl<R: Real> CarlemanWeights<R> {
    /// Same `β̃`, `λ`, `m` with another `s`.
    pub fn with_s(&self, s: R) -> Result<Self> {
        if !(s.is_finite() && s > R::zero()) {
            return Err(LabError::Config(format!("s must be positive, got {s}")));
        }
        let mut w = self.clone();
        w.s = s;
        w.log_shift = w.max_log_weight();
        Ok(w)
    }

    fn max_log_weight(&self) -> R {
        // η is smallest at t = 0 where θ = 1/T²
        let t2 = self.grid.horizon() * self.grid.horizon();
        -R::lit(2.0) * self.s * self.spatial.alpha_min / t2
    }

    pub fn grid(&self) -> &StripGrid<R> {
        &self.grid
    }

    pub fn lambda(&self) -> R {
        self.lambda
    }

    pub fn s(&self) -> R {
        self.s
    }

    pub fn m(&self) -> R {
        self.m
    }

    pub fn k(&self) -> R {
        self.k
    }

    pub fn sup_beta_tilde(&self) -> R {
        self.sup_beta_tilde
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    #[inline]
    pub fn beta(&self, p: usize) -> R {
        self.spatial.beta[p]
    }

    /// `θ(t_n)`; infinite at the two end levels.
    #[inline]
    pub fn theta(&self, n: usize) -> R {
        self.theta[n]
    }

    #[inline]
    pub fn phi(&self, n: usize, p: usize) -> R {
        self.spatial.e_beta[p] * self.theta[n]
    }

    #[inline]
    pub fn eta(&self, n: usize, p: usize) -> R {
        self.spatial.alpha[p] * self.theta[n]
    }

    /// `e^{2λK} - e^{λβ}` at node `p`.
    #[inline]
    pub fn alpha(&self, p: usize) -> R {
        self.spatial.alpha[p]
    }

    /// `∇η = -λ φ ∇β`.
    #[inline]
    pub fn grad_eta(&self, n: usize, p: usize) -> [R; 2] {
        let c = -self.lambda * self.phi(n, p);
        let g = self.spatial.grad_beta[p];
        [c * g[0], c * g[1]]
    }

    /// `Δη = -λ φ (Δβ + λ|∇β|²)`.
    #[inline]
    pub fn lap_eta(&self, n: usize, p: usize) -> R {
        let g = self.spatial.grad_beta[p];
        -self.lambda * self.phi(n, p) * (self.spatial.lap_beta[p] + self.lambda * (g[0] * g[0] + g[1] * g[1]))
    }

    /// `∂_t η = (e^{2λK} - e^{λβ}) 2t θ²`.
    #[inline]
    pub fn dt_eta(&self, n: usize, p: usize) -> R {
        let th = self.theta[n];
        self.spatial.alpha[p] * R::lit(2.0) * self.grid.t(n) * th * th
    }

    /// `∇·(a∇η)` from the coefficient jet at the same node.
    #[inline]
    pub fn div_a_grad_eta(&self, n: usize, p: usize, a: &SpatialJet<R>) -> R {
        let ge = self.grad_eta(n, p);
        a.grad[0] * ge[0] + a.grad[1] * ge[1] + a.value * self.lap_eta(n, p)
    }

    /// `∂_ν β` on a horizontal boundary at column `i`, with the adopted
    /// orientation.
    pub fn dnu_beta(&self, boundary: Boundary, i: usize) -> R {
        let p = self.grid.sidx(i, boundary.x2_index(&self.grid));
        boundary.outward_sign::<R>() * self.orientation.sign::<R>() * self.spatial.grad_beta[p][1]
    }

    /// `e^{-2sη}` with the overflow guard: zero when `2sη > 700` and at `|t| = T`.
    #[inline]
    pub fn exp_weight(&self, n: usize, p: usize) -> R {
        let th = self.theta[n];
        if !th.is_finite() {
            return R::zero();
        }
        let e = R::lit(2.0) * self.s * self.spatial.alpha[p] * th;
        if e > R::lit(LOG_CAP) {
            R::zero()
        } else {
            (-e).exp()
        }
    }

    /// `log_scale`: the largest value of `-2sη` on the grid.
    pub fn log_shift(&self) -> R {
        self.log_shift
    }

    /// `e^{-2sη - log_scale}`, in `[0, 1]`, with the same guard applied to
    /// the shifted exponent.
    #[inline]
    pub fn scaled_weight(&self, n: usize, p: usize) -> R {
        let th = self.theta[n];
        if !th.is_finite() {
            return R::zero();
        }
        let e = R::lit(2.0) * self.s * self.spatial.alpha[p] * th + self.log_shift;
        if e > R::lit(LOG_CAP) {
            R::zero()
        } else {
            (-e).exp()
        }
    }

    pub fn exp_weight_field(&self) -> RealField<R> {
        let g = self.grid;
        RealField::from_fn(g, TimeWindow::Full, |n, i, j| self.exp_weight(n, g.sidx(i, j)))
    }

    pub fn eta_field(&self) -> RealField<R> {
        let g = self.grid;
        RealField::from_fn(g, TimeWindow::Full, |n, i, j| self.eta(n, g.sidx(i, j)))
    }

    pub fn check_grid(&self, grid: &StripGrid<R>) -> Result<()> {
        if self.grid.same_as(grid) {
            Ok(())
        } else {
            Err(LabError::GridMismatch("weights were built on another grid".into()))
        }
    }
}

fn pc_matrix<R: Real>(a: &SpatialJet<R>, bt: &SpatialJet<R>) -> [R; 3] {
    // D_ij = ∂_i(a² ∂_j β̃) = 2a ∂_i a ∂_j β̃ + a² ∂_ij β̃
    let two = R::lit(2.0);
    let a2 = a.value * a.value;
    let h = |i: usize, j: usize| bt.hess[i + j];
    let d = |i: usize, j: usize| two * a.value * a.grad[i] * bt.grad[j] + a2 * h(i, j);
    let dot = a.grad[0] * bt.grad[0] + a.grad[1] * bt.grad[1];
    let s11 = two * d(0, 0) - dot + two * a2 * bt.grad[0] * bt.grad[0];
    let s12 = d(0, 1) + d(1, 0) + two * a2 * bt.grad[0] * bt.grad[1];
    let s22 = two * d(1, 1) - dot + two * a2 * bt.grad[1] * bt.grad[1];
    [s11, s12, s22]
}

fn min_eigenvalue<R: Real>(s: [R; 3]) -> R {
    let half = R::lit(0.5);
    let mean = (s[0] + s[2]) * half;
    let rad = ((s[0] - s[2]) * half).hypot(s[1]);
    mean - rad
}

/// Smallest eigenvalue of the pseudo-convexity matrix at every spatial node.
#[derive(Debug, Clone)]
pub struct MarginField<R> {
    pub values: Vec<R>,
    pub min: R,
    pub argmin: (usize, usize),
}

pub fn pseudo_convexity_margin<R: Real>(
    coeffs: &CoefficientField<R>,
    beta_tilde: &Profile<R>,
    grid: &StripGrid<R>,
) -> Result<MarginField<R>> {
    coeffs.check_grid(grid)?;
    let mut values = Vec::with_capacity(grid.space_len());
    let (mut min, mut argmin) = (R::infinity(), (0, 0));
    for i in 0..=grid.n1() {
        for j in 0..=grid.n2() {
            let p = grid.sidx(i, j);
            let bt = beta_tilde.jet(grid.x1(i), grid.x2(j));
            if !bt.is_finite() {
                return Err(LabError::DerivativeUnavailable(format!(
                    "beta_tilde derivatives not finite at x = ({}, {})",
                    grid.x1(i),
                    grid.x2(j)
                )));
            }
            let v = min_eigenvalue(pc_matrix(coeffs.a_jet(p), &bt));
            if v < min {
                min = v;
                argmin = (i, j);
            }
            values.push(v);
        }
    }
    Ok(MarginField { values, min, argmin })
}

/// The two reduced conditions for data depending on `x2` only, one value per
/// `x2` node.
#[derive(Debug, Clone)]
pub struct ReducedConditions<R> {
    pub a_field: Vec<R>,
    pub second: Vec<R>,
    pub min_a: R,
    pub min_second: R,
}

fn varies_in_x1<R: Real>(f: &Profile<R>, grid: &StripGrid<R>) -> bool {
    let tol = R::lit(1e-12);
    (0..=grid.n2()).any(|j| {
        let x2 = grid.x2(j);
        let r = f.jet(grid.x1(0), x2);
        (1..=grid.n1()).any(|i| {
            let o = f.jet(grid.x1(i), x2);
            let scale = R::one().max(r.value.abs());
            (o.value - r.value).abs() > tol * scale
                || (o.grad[1] - r.grad[1]).abs() > tol * R::one().max(r.grad[1].abs())
        })
    })
}

pub fn reduced_1d_conditions<R: Real>(
    coeffs: &CoefficientField<R>,
    beta_tilde: &Profile<R>,
    grid: &StripGrid<R>,
) -> Result<ReducedConditions<R>> {
    coeffs.check_grid(grid)?;
    if varies_in_x1(coeffs.a_profile(), grid) || varies_in_x1(beta_tilde, grid) {
        return Err(LabError::NotApplicable("reduced conditions need a and beta_tilde independent of x1".into()));
    }
    let two = R::lit(2.0);
    let mut a_field = Vec::with_capacity(grid.n2() + 1);
    let mut second = Vec::with_capacity(grid.n2() + 1);
    for j in 0..=grid.n2() {
        let x2 = grid.x2(j);
        let a = coeffs.a_jet(grid.sidx(0, j));
        let bt = beta_tilde.jet(grid.x1(0), x2);
        let a2 = a.value * a.value;
        // ∂2(a² ∂2 β̃) and ∂1(a² ∂2 β̃)
        let d22 = two * a.value * a.grad[1] * bt.grad[1] + a2 * bt.hess[2];
        let d12 = two * a.value * a.grad[0] * bt.grad[1] + a2 * bt.hess[1];
        let cross = a.grad[1] * bt.grad[1];
        let big_a = two * d22 - cross + two * a2 * bt.grad[1] * bt.grad[1];
        a_field.push(big_a);
        second.push(-(d12 * d12) / big_a - cross);
    }
    let min = |v: &[R]| v.iter().fold(R::infinity(), |m, &x| m.min(x));
    Ok(ReducedConditions { min_a: min(&a_field), min_second: min(&second), a_field, second })
}

/// Outcome of the weight and coefficient checks.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub a_min: f64,
    /// `max |∂^k a|` for `k = 0..=3`.
    pub a_derivative_bounds: [f64; 4],
    pub b_max: f64,
    pub beta_tilde_min: f64,
    pub c0: f64,
    pub gamma_minus: GammaMinusSign,
    /// Γ⁻ value under the adopted orientation.
    pub gamma_minus_sign: f64,
    pub cpc: f64,
    pub cpc_at: (f64, f64),
    pub reduced_1d_a: Option<f64>,
    pub reduced_1d_second: Option<f64>,
    /// `Some(false)` when the eigenvalue margin and the reduced conditions
    /// disagree in sign.
    pub reduced_agrees: Option<bool>,
    pub pass: bool,
    pub failures: Vec<String>,
}

pub fn check_assumptions<R: Real>(
    coeffs: &CoefficientField<R>,
    beta_tilde: &Profile<R>,
    grid: &StripGrid<R>,
) -> Result<AssumptionReport> {
    coeffs.check_grid(grid)?;
    let mut c0 = R::infinity();
    let mut b_max = R::zero();
    for i in 0..=grid.n1() {
        for j in 0..=grid.n2() {
            let bt = beta_tilde.jet(grid.x1(i), grid.x2(j));
            c0 = c0.min(bt.grad_norm());
            b_max = b_max.max(coeffs.b(grid.sidx(i, j)).abs());
        }
    }
    let (_, bt_min) = sup_norm(beta_tilde, grid);
    let gm = gamma_minus_sign(beta_tilde, grid);
    let margin = pseudo_convexity_margin(coeffs, beta_tilde, grid)?;
    let reduced = match reduced_1d_conditions(coeffs, beta_tilde, grid) {
        Ok(r) => Some(r),
        Err(LabError::NotApplicable(_)) => None,
        Err(e) => return Err(e),
    };
    let eps = MARGIN_EPS;
    let c0f = c0.to_f64_lossy();
    let cpc = margin.min.to_f64_lossy();
    let gms = gm.adopted_value();
    let mut failures = Vec::new();
    if !(c0f > eps) {
        failures.push(format!("|grad beta_tilde| >= C0 > 0 fails: min |grad beta_tilde| = {c0f:e}"));
    }
    if !(gms <= 0.0) {
        failures.push(format!(
            "d_nu beta_tilde <= 0 on gamma_minus fails under both orientations (outward max {:e}, inward max {:e})",
            gm.outward, gm.inward
        ));
    }
    if !(cpc > eps) {
        failures.push(format!(
            "pseudo-convexity fails: min eigenvalue {cpc:e} at x = ({}, {})",
            grid.x1(margin.argmin.0),
            grid.x2(margin.argmin.1)
        ));
    }
    let (ra, rs, agrees) = match &reduced {
        Some(r) => {
            let (ra, rs) = (r.min_a.to_f64_lossy(), r.min_second.to_f64_lossy());
            if !(rs > eps) {
                failures.push(format!("reduced condition -a' beta_tilde' > 0 fails: min {rs:e}"));
            }
            if !(ra > eps) {
                failures.push(format!("reduced condition A > 0 fails: min {ra:e}"));
            }
            (Some(ra), Some(rs), Some((ra.min(rs) > eps) == (cpc > eps)))
        }
        None => (None, None, None),
    };
    let pass = c0f > eps && gms <= 0.0 && cpc > eps;
    Ok(AssumptionReport {
        a_min: coeffs.a_min().to_f64_lossy(),
        a_derivative_bounds: coeffs.a_derivative_bounds().map(|v| v.to_f64_lossy()),
        b_max: b_max.to_f64_lossy(),
        beta_tilde_min: bt_min.to_f64_lossy(),
        c0: c0f,
        gamma_minus: gm,
        gamma_minus_sign: gms,
        cpc,
        cpc_at: (grid.x1(margin.argmin.0).to_f64_lossy(), grid.x2(margin.argmin.1).to_f64_lossy()),
        reduced_1d_a: ra,
        reduced_1d_second: rs,
        reduced_agrees: agrees,
        pass,
        failures,
    })
}
