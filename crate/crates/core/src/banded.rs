//! Complex banded LU factorisation with partial pivoting.
//!
//! Rows are stored with a fixed column offset so that row `r` holds columns
//! `r - kl ..= r + kl + ku`; the extra `kl` upper diagonals absorb pivoting
//! fill-in.

use crate::error::{LabError, Result};
use crate::scalar::{Cx, Real};

#[derive(Debug, Clone)]
pub struct BandedMatrix<R> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<Cx<R>>,
}

impl<R: Real> BandedMatrix<R> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandedMatrix { n, kl, ku, width, data: vec![Cx::new(R::zero(), R::zero()); n * width] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, r: usize, c: usize) -> usize {
        r * self.width + (c + self.kl - r)
    }

    fn in_band(&self, r: usize, c: usize) -> bool {
        c + self.kl >= r && c <= r + self.ku
    }

    /// Sets `A[r][c]`; panics outside the declared band.
    pub fn set(&mut self, r: usize, c: usize, v: Cx<R>) {
        assert!(r < self.n && c < self.n && self.in_band(r, c), "entry ({r}, {c}) outside band");
        let s = self.slot(r, c);
        self.data[s] = v;
    }

    pub fn get(&self, r: usize, c: usize) -> Cx<R> {
        if r < self.n && c < self.n && c + self.kl >= r && c <= r + self.kl + self.ku {
            self.data[self.slot(r, c)]
        } else {
            Cx::new(R::zero(), R::zero())
        }
    }

    /// `y = A x` for the unfactored matrix.
    pub fn mul_vec(&self, x: &[Cx<R>]) -> Vec<Cx<R>> {
        (0..self.n)
            .map(|r| {
                let lo = r.saturating_sub(self.kl);
                let hi = (r + self.ku).min(self.n - 1);
                (lo..=hi).fold(Cx::new(R::zero(), R::zero()), |acc, c| acc + self.get(r, c) * x[c])
            })
            .collect()
    }

    /// Factors in place; the factors keep the band layout.
    pub fn factor(mut self) -> Result<BandedLu<R>> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut piv = vec![0usize; n];
        let mut umax = R::zero();
        let mut umin = R::infinity();
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).norm();
            for r in k + 1..=last_row {
                let v = self.get(r, k).norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > R::zero()) || !best.is_finite() {
                return Err(LabError::LinearSolve {
                    level: 0,
                    reason: format!("zero or non-finite pivot in column {k}"),
                });
            }
            piv[k] = p;
            if p != k {
                for c in k..=last_col {
                    let (a, b) = (self.slot(k, c), self.slot(p, c));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            umax = umax.max(best);
            umin = umin.min(best);
            for r in k + 1..=last_row {
                let sr = self.slot(r, k);
                let l = self.data[sr] / pivot;
                self.data[sr] = l;
                if l.re == R::zero() && l.im == R::zero() {
                    continue;
                }
                for c in k + 1..=last_col {
                    let (dst, src) = (self.slot(r, c), self.slot(k, c));
                    let u = self.data[src];
                    self.data[dst] = self.data[dst] - l * u;
                }
            }
        }
        let ratio = umin / umax;
        if ratio < R::epsilon() * R::from_usize_lossy(n.max(1)) {
            return Err(LabError::LinearSolve {
                level: 0,
                reason: format!("ill-conditioned step matrix: pivot ratio {ratio:e}"),
            });
        }
        Ok(BandedLu { m: self, piv, pivot_ratio: ratio })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu<R> {
    m: BandedMatrix<R>,
    piv: Vec<usize>,
    pivot_ratio: R,
}

impl<R: Real> BandedLu<R> {
    /// `min |u_kk| / max |u_kk|`, a cheap conditioning indicator.
    pub fn pivot_ratio(&self) -> R {
        self.pivot_ratio
    }

    /// Overwrites `b` with the solution of `A x = b`.
    pub fn solve_in_place(&self, b: &mut [Cx<R>]) {
        let m = &self.m;
        let (n, kl, ku) = (m.n, m.kl, m.ku);
        assert_eq!(b.len(), n, "right-hand side length");
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for r in k + 1..=(k + kl).min(n - 1) {
                b[r] = b[r] - m.data[m.slot(r, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for c in k + 1..=(k + kl + ku).min(n - 1) {
                acc = acc - m.data[m.slot(k, c)] * b[c];
            }
            b[k] = acc / m.data[m.slot(k, k)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type C = Cx<f64>;

    fn dense_solve(a: &[Vec<C>], b: &[C]) -> Vec<C> {
        // Gaussian elimination with partial pivoting on a dense copy
        let n = b.len();
        let mut m: Vec<Vec<C>> = a.to_vec();
        let mut x = b.to_vec();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| m[i][k].norm().partial_cmp(&m[j][k].norm()).unwrap()).unwrap();
            m.swap(k, p);
            x.swap(k, p);
            for r in k + 1..n {
                let l = m[r][k] / m[k][k];
                for c in k..n {
                    let u = m[k][c];
                    m[r][c] -= l * u;
                }
                let xk = x[k];
                x[r] -= l * xk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            for c in k + 1..n {
                acc -= m[k][c] * x[c];
            }
            x[k] = acc / m[k][k];
        }
        x
    }

    fn build(n: usize, kl: usize, ku: usize, vals: &[(f64, f64)]) -> (BandedMatrix<f64>, Vec<Vec<C>>) {
        let mut band = BandedMatrix::zeros(n, kl, ku);
        let mut dense = vec![vec![C::new(0.0, 0.0); n]; n];
        let mut it = vals.iter().cycle();
        for r in 0..n {
            for c in r.saturating_sub(kl)..=(r + ku).min(n - 1) {
                let &(re, im) = it.next().unwrap();
                let v = C::new(re, im);
                band.set(r, c, v);
                dense[r][c] = v;
            }
        }
        (band, dense)
    }

    #[test]
    fn pivoting_needed_case() {
        // zero leading diagonal forces a row swap
        let vals = [(0.0, 0.0), (1.0, 2.0), (3.0, -1.0), (2.0, 0.5), (-1.0, 1.0)];
        let (band, dense) = build(6, 1, 1, &vals);
        let b: Vec<C> = (0..6).map(|k| C::new(k as f64, 1.0)).collect();
        let lu = band.clone().factor().unwrap();
        let mut x = b.clone();
        lu.solve_in_place(&mut x);
        let y = dense_solve(&dense, &b);
        for k in 0..6 {
            assert!((x[k] - y[k]).norm() < 1e-12);
        }
        let r = band.mul_vec(&x);
        for k in 0..6 {
            assert!((r[k] - b[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_reported() {
        let band = BandedMatrix::<f64>::zeros(4, 1, 1);
        assert!(matches!(band.factor(), Err(LabError::LinearSolve { .. })));
    }

    proptest! {
        #[test]
        fn matches_dense_oracle(
            n in 3usize..12,
            kl in 0usize..3,
            ku in 0usize..3,
            vals in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 8..40),
        ) {
            let (mut band, mut dense) = build(n, kl, ku, &vals);
            // diagonal shift keeps the random matrix safely invertible
            for k in 0..n {
                let v = band.get(k, k) + C::new(10.0, 3.0);
                band.set(k, k, v);
                dense[k][k] = v;
            }
            let b: Vec<C> = (0..n).map(|k| C::new(1.0 + k as f64, -(k as f64))).collect();
            let mut x = b.clone();
            band.factor().unwrap().solve_in_place(&mut x);
            let y = dense_solve(&dense, &b);
            for k in 0..n {
                prop_assert!((x[k] - y[k]).norm() < 1e-10 * (1.0 + y[k].norm()));
            }
        }
    }
}
