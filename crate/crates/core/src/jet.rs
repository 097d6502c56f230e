//! Truncated Taylor arithmetic used to get exact derivatives of closed-form
//! fixtures and of the quotients built from them.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::{Cx, Real};

/// Univariate Taylor polynomial of degree 4: `Σ c_k (z - z0)^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Taylor1<R> {
    c: [R; 5],
}

impl<R: Real> Taylor1<R> {
    pub fn constant(v: R) -> Self {
        let mut c = [R::zero(); 5];
        c[0] = v;
        Taylor1 { c }
    }

    /// The independent variable expanded at `z0`.
    pub fn var(z0: R) -> Self {
        let mut c = [R::zero(); 5];
        c[0] = z0;
        c[1] = R::one();
        Taylor1 { c }
    }

    pub fn value(&self) -> R {
        self.c[0]
    }

    /// `[f, f', f'', f''', f'''']`.
    pub fn derivatives(&self) -> [R; 5] {
        let mut d = self.c;
        let mut fact = R::one();
        for (k, dk) in d.iter_mut().enumerate().skip(1) {
            fact *= R::from_usize_lossy(k);
            *dk *= fact;
        }
        d
    }

    pub fn scale(self, s: R) -> Self {
        Taylor1 { c: self.c.map(|v| v * s) }
    }

    pub fn exp(self) -> Self {
        let mut e = [R::zero(); 5];
        e[0] = self.c[0].exp();
        for k in 1..5 {
            let mut acc = R::zero();
            for i in 1..=k {
                acc += R::from_usize_lossy(i) * self.c[i] * e[k - i];
            }
            e[k] = acc / R::from_usize_lossy(k);
        }
        Taylor1 { c: e }
    }

    pub fn sin_cos(self) -> (Self, Self) {
        let mut s = [R::zero(); 5];
        let mut c = [R::zero(); 5];
        s[0] = self.c[0].sin();
        c[0] = self.c[0].cos();
        for k in 1..5 {
            let (mut as_, mut ac) = (R::zero(), R::zero());
            for i in 1..=k {
                let w = R::from_usize_lossy(i) * self.c[i];
                as_ += w * c[k - i];
                ac += w * s[k - i];
            }
            s[k] = as_ / R::from_usize_lossy(k);
            c[k] = -ac / R::from_usize_lossy(k);
        }
        (Taylor1 { c: s }, Taylor1 { c })
    }
}

impl<R: Real> Add for Taylor1<R> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(o.c) {
            *a += b;
        }
        Taylor1 { c }
    }
}

impl<R: Real> Sub for Taylor1<R> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o.scale(-R::one())
    }
}

impl<R: Real> Mul for Taylor1<R> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut c = [R::zero(); 5];
        for k in 0..5 {
            for i in 0..=k {
                c[k] += self.c[i] * o.c[k - i];
            }
        }
        Taylor1 { c }
    }
}

impl<R: Real> Div for Taylor1<R> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let mut c = [R::zero(); 5];
        for k in 0..5 {
            let mut acc = self.c[k];
            for i in 1..=k {
                acc -= o.c[i] * c[k - i];
            }
            c[k] = acc / o.c[0];
        }
        Taylor1 { c }
    }
}

/// Spatial monomials kept by [`Jet`]: `1, x1, x2, x1², x1 x2, x2²`.
const MONO_DEG: [u8; 6] = [0, 1, 1, 2, 2, 2];
/// Product table of spatial monomials, `None` past total degree 2.
const MONO_MUL: [[Option<usize>; 6]; 6] = {
    let mut t = [[None; 6]; 6];
    // exponents (a, b) of x1^a x2^b
    let e: [(u8, u8); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];
    let mut p = 0;
    while p < 6 {
        let mut q = 0;
        while q < 6 {
            let a = e[p].0 + e[q].0;
            let b = e[p].1 + e[q].1;
            let mut r = 0;
            while r < 6 {
                if e[r].0 == a && e[r].1 == b {
                    t[p][q] = Some(r);
                }
                r += 1;
            }
            q += 1;
        }
        p += 1;
    }
    t
};

pub const T_ORDER: u8 = 3;
pub const X_ORDER: u8 = 2;

/// Complex Taylor expansion in `(t, x1, x2)` around a node, truncated at
/// time degree 3 and total spatial degree 2.
///
/// Differentiation lowers the range of coefficients that remain exact;
/// `t_ord` / `x_ord` track it and [`Jet::deriv`] refuses to read past it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<R> {
    c: [[Cx<R>; 6]; 4],
    t_ord: u8,
    x_ord: u8,
}

/// Spatial multi-index selector for [`Jet::deriv`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spatial {
    None,
    D1,
    D2,
    D11,
    D12,
    D22,
}

impl Spatial {
    fn slot(self) -> (usize, u8, u8) {
        // (monomial, degree, factorial factor)
        match self {
            Spatial::None => (0, 0, 1),
            Spatial::D1 => (1, 1, 1),
            Spatial::D2 => (2, 1, 1),
            Spatial::D11 => (3, 2, 2),
            Spatial::D12 => (4, 2, 1),
            Spatial::D22 => (5, 2, 2),
        }
    }
}

impl<R: Real> Jet<R> {
    pub fn zero() -> Self {
        Jet { c: [[Cx::new(R::zero(), R::zero()); 6]; 4], t_ord: T_ORDER, x_ord: X_ORDER }
    }

    pub fn constant(v: Cx<R>) -> Self {
        let mut j = Self::zero();
        j.c[0][0] = v;
        j
    }

    /// Builds a jet from its derivatives: `d[k][s]` is `∂_t^k ∂^s f`.
    pub fn from_derivatives(d: [[Cx<R>; 6]; 4]) -> Self {
        let mut j = Self::zero();
        let mut tf = R::one();
        for k in 0..4 {
            if k > 0 {
                tf *= R::from_usize_lossy(k);
            }
            for m in 0..6 {
                let sf = if m == 3 || m == 5 { R::lit(2.0) } else { R::one() };
                j.c[k][m] = d[k][m] / (tf * sf);
            }
        }
        j
    }

    /// Time-independent real spatial jet from value, gradient and Hessian.
    pub fn spatial(value: R, grad: [R; 2], hess: [R; 3]) -> Self {
        let z = R::zero();
        let mut j = Self::zero();
        let half = R::lit(0.5);
        j.c[0] = [
            Cx::new(value, z),
            Cx::new(grad[0], z),
            Cx::new(grad[1], z),
            Cx::new(hess[0] * half, z),
            Cx::new(hess[1], z),
            Cx::new(hess[2] * half, z),
        ];
        j
    }

    pub fn t_order(&self) -> u8 {
        self.t_ord
    }

    pub fn x_order(&self) -> u8 {
        self.x_ord
    }

    pub fn value(&self) -> Cx<R> {
        self.c[0][0]
    }

    /// `∂_t^k ∂^s f` at the expansion point.
    pub fn deriv(&self, k: usize, s: Spatial) -> Cx<R> {
        let (m, deg, sf) = s.slot();
        assert!(
            k as u8 <= self.t_ord && deg <= self.x_ord,
            "jet derivative (t^{k}, {s:?}) beyond exact range (t<={}, x<={})",
            self.t_ord,
            self.x_ord
        );
        let mut f = R::from_u8(sf).expect("small");
        for i in 2..=k {
            f *= R::from_usize_lossy(i);
        }
        self.c[k][m] * f
    }

    pub fn grad(&self) -> [Cx<R>; 2] {
        [self.deriv(0, Spatial::D1), self.deriv(0, Spatial::D2)]
    }

    pub fn laplacian_value(&self) -> Cx<R> {
        self.deriv(0, Spatial::D11) + self.deriv(0, Spatial::D22)
    }

    pub fn scale(mut self, s: Cx<R>) -> Self {
        for row in self.c.iter_mut() {
            for v in row.iter_mut() {
                *v = *v * s;
            }
        }
        self
    }

    pub fn dt(&self) -> Self {
        assert!(self.t_ord >= 1, "time derivative of a jet with no time range left");
        let mut out = Self::zero();
        for k in 0..3 {
            for m in 0..6 {
                out.c[k][m] = self.c[k + 1][m] * R::from_usize_lossy(k + 1);
            }
        }
        out.t_ord = self.t_ord - 1;
        out.x_ord = self.x_ord;
        out
    }

    pub fn d1(&self) -> Self {
        self.spatial_shift([(0, 1, 1), (1, 3, 2), (2, 4, 1)])
    }

    pub fn d2(&self) -> Self {
        self.spatial_shift([(0, 2, 1), (1, 4, 1), (2, 5, 2)])
    }

    pub fn laplacian(&self) -> Self {
        assert!(self.x_ord >= 2, "laplacian of a jet with spatial range {}", self.x_ord);
        let mut out = Self::zero();
        let two = R::lit(2.0);
        for k in 0..4 {
            out.c[k][0] = (self.c[k][3] + self.c[k][5]) * two;
        }
        out.t_ord = self.t_ord;
        out.x_ord = 0;
        out
    }

    fn spatial_shift(&self, map: [(usize, usize, usize); 3]) -> Self {
        assert!(self.x_ord >= 1, "spatial derivative of a jet with no spatial range left");
        let mut out = Self::zero();
        for k in 0..4 {
            for &(dst, src, f) in &map {
                out.c[k][dst] = self.c[k][src] * R::from_usize_lossy(f);
            }
        }
        out.t_ord = self.t_ord;
        out.x_ord = self.x_ord - 1;
        out
    }

    pub fn recip(&self) -> Self {
        let f0 = self.c[0][0];
        let inv0 = Cx::new(R::one(), R::zero()) / f0;
        // ε = f/f0 - 1 has no constant term; its powers vanish past degree 5.
        let mut eps = self.scale(inv0);
        eps.c[0][0] = Cx::new(R::zero(), R::zero());
        let mut acc = Self::constant(Cx::new(R::one(), R::zero()));
        let mut term = acc;
        for n in 1..=5 {
            term = term * eps;
            let sign = if n % 2 == 1 { -R::one() } else { R::one() };
            acc = acc + term.scale(Cx::new(sign, R::zero()));
        }
        let mut out = acc.scale(inv0);
        out.t_ord = self.t_ord;
        out.x_ord = self.x_ord;
        out
    }
}

impl<R: Real> Add for Jet<R> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for k in 0..4 {
            for m in 0..6 {
                self.c[k][m] = self.c[k][m] + o.c[k][m];
            }
        }
        self.t_ord = self.t_ord.min(o.t_ord);
        self.x_ord = self.x_ord.min(o.x_ord);
        self
    }
}

impl<R: Real> Neg for Jet<R> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(Cx::new(-R::one(), R::zero()))
    }
}

impl<R: Real> Sub for Jet<R> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<R: Real> Mul for Jet<R> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = Self::zero();
        for ka in 0..4 {
            for kb in 0..4 - ka {
                for ma in 0..6 {
                    let a = self.c[ka][ma];
                    if a.re == R::zero() && a.im == R::zero() {
                        continue;
                    }
                    for mb in 0..6 {
                        if MONO_DEG[ma] + MONO_DEG[mb] > X_ORDER {
                            continue;
                        }
                        if let Some(m) = MONO_MUL[ma][mb] {
                            out.c[ka + kb][m] = out.c[ka + kb][m] + a * o.c[kb][mb];
                        }
                    }
                }
            }
        }
        out.t_ord = self.t_ord.min(o.t_ord);
        out.x_ord = self.x_ord.min(o.x_ord);
        out
    }
}

impl<R: Real> Div for Jet<R> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<R: Real> Mul<Cx<R>> for Jet<R> {
    type Output = Self;
    fn mul(self, s: Cx<R>) -> Self {
        self.scale(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Cx::new(re, im)
    }

    /// Jet of exp(i ω t) * p(x) built by hand for checking products.
    fn sample(t: f64, x1: f64, x2: f64) -> (Jet<f64>, impl Fn(f64, f64, f64) -> Cx<f64>) {
        let f = move |t: f64, x1: f64, x2: f64| c(0.0, -1.3 * t).exp() * (2.0 + x1 * x2 + x2 * x2);
        let mut d = [[c(0.0, 0.0); 6]; 4];
        let p = 2.0 + x1 * x2 + x2 * x2;
        let dp = [x2, x1 + 2.0 * x2];
        let hp = [0.0, 1.0, 2.0];
        for (k, row) in d.iter_mut().enumerate() {
            let e = c(0.0, -1.3).powu(k as u32) * c(0.0, -1.3 * t).exp();
            *row = [e * p, e * dp[0], e * dp[1], e * hp[0], e * hp[1], e * hp[2]];
        }
        (Jet::from_derivatives(d), f)
    }

    #[test]
    fn univariate_derivatives_of_exp_sin() {
        let z = Taylor1::var(0.3_f64);
        let f = (z.scale(2.0)).exp();
        let d = f.derivatives();
        for (k, dk) in d.iter().enumerate() {
            let exact = 2f64.powi(k as i32) * (0.6f64).exp();
            assert!((dk - exact).abs() < 1e-12);
        }
        let (s, co) = z.sin_cos();
        let ds = s.derivatives();
        let dc = co.derivatives();
        assert!((ds[3] + 0.3f64.cos()).abs() < 1e-13);
        assert!((dc[4] - 0.3f64.cos()).abs() < 1e-13);
        let q = s / co;
        // tan' = 1 + tan^2
        assert!((q.derivatives()[1] - (1.0 + 0.3f64.tan().powi(2))).abs() < 1e-12);
    }

    #[test]
    fn quotient_jet_matches_finite_differences() {
        let (t, x1, x2) = (0.2, 0.4, 1.3);
        let (j, f) = sample(t, x1, x2);
        let q = Jet::constant(c(1.0, 0.0)) / j;
        let g = |t: f64, x1: f64, x2: f64| c(1.0, 0.0) / f(t, x1, x2);
        let h = 1e-3;
        let dt_fd = (g(t + h, x1, x2) - g(t - h, x1, x2)) / (2.0 * h);
        assert!((q.deriv(1, Spatial::None) - dt_fd).norm() < 1e-6);
        let d12_fd = (g(t, x1 + h, x2 + h) - g(t, x1 + h, x2 - h) - g(t, x1 - h, x2 + h) + g(t, x1 - h, x2 - h))
            / (4.0 * h * h);
        assert!((q.deriv(0, Spatial::D12) - d12_fd).norm() < 1e-5);
        let lap_fd = (g(t, x1 + h, x2) + g(t, x1 - h, x2) + g(t, x1, x2 + h) + g(t, x1, x2 - h)
            - g(t, x1, x2) * 4.0)
            / (h * h);
        assert!((q.laplacian().value() - lap_fd).norm() < 1e-5);
        let dtt_fd = (g(t + h, x1, x2) - g(t, x1, x2) * 2.0 + g(t - h, x1, x2)) / (h * h);
        assert!((q.dt().dt().value() - dtt_fd).norm() < 1e-5);
    }

    #[test]
    fn product_rule_holds() {
        let (a, _) = sample(0.1, -0.2, 1.1);
        let (b, _) = sample(-0.3, 0.5, 1.7);
        let p = a * b;
        let lhs = p.dt().d2();
        let rhs = a.dt().d2() * b + a.dt() * b.d2() + a.d2() * b.dt() + a * b.dt().d2();
        assert!((lhs.value() - rhs.value()).norm() < 1e-12);
    }

    #[test]
    #[should_panic]
    fn reading_past_range_panics() {
        let (a, _) = sample(0.0, 0.0, 1.0);
        let l = a.laplacian();
        let _ = l.deriv(0, Spatial::D1);
    }
}
