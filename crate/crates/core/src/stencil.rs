//! Finite-difference stencils on grid levels.

use crate::grid::{ComplexField, StripGrid};
use crate::scalar::{Cx, Real};

/// 5-point Laplacian at interior node `(i, j)` of a level.
#[inline]
pub fn laplacian<R: Real>(g: &StripGrid<R>, lvl: &[Cx<R>], i: usize, j: usize) -> Cx<R> {
    let p = g.sidx(i, j);
    let c = lvl[p] * R::lit(2.0);
    let s = g.n2() + 1;
    let h1 = g.h1() * g.h1();
    let h2 = g.h2() * g.h2();
    (lvl[p + s] - c + lvl[p - s]) / h1 + (lvl[p + 1] - c + lvl[p - 1]) / h2
}

/// Centred gradient at interior node `(i, j)`.
#[inline]
pub fn gradient<R: Real>(g: &StripGrid<R>, lvl: &[Cx<R>], i: usize, j: usize) -> [Cx<R>; 2] {
    let p = g.sidx(i, j);
    let s = g.n2() + 1;
    let two = R::lit(2.0);
    [(lvl[p + s] - lvl[p - s]) / (two * g.h1()), (lvl[p + 1] - lvl[p - 1]) / (two * g.h2())]
}

/// Time derivative of a field: centred inside, second-order one-sided at
/// the first and last level.
pub fn time_derivative<R: Real>(f: &ComplexField<R>) -> ComplexField<R> {
    let g = *f.grid();
    let (first, last) = (f.first_level(), f.last_level());
    let dt = g.dt();
    let two = R::lit(2.0);
    let three = R::lit(3.0);
    let four = R::lit(4.0);
    ComplexField::from_fn(g, f.window(), |n, i, j| {
        if n == first {
            (f.at(n + 1, i, j) * four - f.at(n, i, j) * three - f.at(n + 2, i, j)) / (two * dt)
        } else if n == last {
            (f.at(n, i, j) * three - f.at(n - 1, i, j) * four + f.at(n - 2, i, j)) / (two * dt)
        } else {
            (f.at(n + 1, i, j) - f.at(n - 1, i, j)) / (two * dt)
        }
    })
}

/// `(f[n-1] + 2 f[n] + f[n+1]) / 4` in time; end levels are left unchanged.
pub fn smooth_121<R: Real>(f: &ComplexField<R>) -> ComplexField<R> {
    let (first, last) = (f.first_level(), f.last_level());
    let q = R::lit(0.25);
    let two = R::lit(2.0);
    ComplexField::from_fn(*f.grid(), f.window(), |n, i, j| {
        if n == first || n == last {
            f.at(n, i, j)
        } else {
            (f.at(n - 1, i, j) + f.at(n, i, j) * two + f.at(n + 1, i, j)) * q
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeWindow;

    #[test]
    fn quadratic_is_differentiated_exactly() {
        let g = StripGrid::new(1.0, 1.0, 1.0, 8, 8, 8).unwrap();
        let f = ComplexField::from_fn(g, TimeWindow::Full, |n, i, j| {
            let (t, x1, x2) = (g.t(n), g.x1(i), g.x2(j));
            Cx::new(x1 * x1 + 3.0 * x2 * x2 + t * t, x1 * x2)
        });
        let lvl = f.level(3);
        let lap = laplacian(&g, lvl, 4, 5);
        assert!((lap - Cx::new(8.0, 0.0)).norm() < 1e-10);
        let gr = gradient(&g, lvl, 4, 5);
        assert!((gr[0] - Cx::new(2.0 * g.x1(4), g.x2(5))).norm() < 1e-12);
        let ft = time_derivative(&f);
        for n in [0, 4, 8] {
            assert!((ft.at(n, 2, 2) - Cx::new(2.0 * g.t(n), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn smoother_preserves_linear_in_time() {
        let g = StripGrid::new(1.0, 1.0, 1.0, 4, 4, 8).unwrap();
        let f = ComplexField::from_fn(g, TimeWindow::Full, |n, _, _| Cx::new(g.t(n), 1.0));
        let s = smooth_121(&f);
        assert!((s.at(3, 1, 1) - f.at(3, 1, 1)).norm() < 1e-15);
    }
}
