//! Composite trapezoid quadrature over the space-time grid and over the
//! horizontal boundaries.

use crate::error::{LabError, Result};
use crate::grid::{ComplexField, ComplexTrace, RealField, RealTrace, StripGrid, TimeWindow};
use crate::scalar::Real;

/// Node set a quadrature sums over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Every node of the field.
    All,
    /// Drops one node at every spatial boundary and the first and last time
    /// level of the window: the layers where centred stencils are undefined.
    Interior,
}

/// Trapezoid weight of node `k` out of `0..=n` with spacing `h`.
#[inline]
pub fn trapezoid_weight<R: Real>(k: usize, n: usize, h: R) -> R {
    if k == 0 || k == n {
        h / R::lit(2.0)
    } else {
        h
    }
}

/// Spatial trapezoid weights, flat-indexed like a level.
pub fn space_weights<R: Real>(grid: &StripGrid<R>) -> Vec<R> {
    let mut w = Vec::with_capacity(grid.space_len());
    for i in 0..=grid.n1() {
        let wi = trapezoid_weight(i, grid.n1(), grid.h1());
        for j in 0..=grid.n2() {
            w.push(wi * trapezoid_weight(j, grid.n2(), grid.h2()));
        }
    }
    w
}

/// Trapezoid weight of time level `n` inside `window`.
pub fn time_weight<R: Real>(grid: &StripGrid<R>, window: TimeWindow, n: usize) -> R {
    let range = grid.levels(window);
    let (first, last) = (*range.start(), *range.end());
    if n == first || n == last {
        grid.dt() / R::lit(2.0)
    } else {
        grid.dt()
    }
}

/// Sum of `w_n w_p f(n, p)` over the region, where `p` is the flat spatial
/// index. Used by every weighted integral in the crate.
pub fn sum_over<R: Real>(
    grid: &StripGrid<R>,
    window: TimeWindow,
    region: Region,
    mut f: impl FnMut(usize, usize, usize, usize) -> R,
) -> R {
    let sw = space_weights(grid);
    let range = grid.levels(window);
    let (first, last) = (*range.start(), *range.end());
    let mut total = R::zero();
    for n in first..=last {
        if region == Region::Interior && (n == first || n == last) {
            continue;
        }
        let wt = time_weight(grid, window, n);
        let mut level = R::zero();
        for i in 0..=grid.n1() {
            for j in 0..=grid.n2() {
                if region == Region::Interior && grid.is_space_boundary(i, j) {
                    continue;
                }
                let p = grid.sidx(i, j);
                level += sw[p] * f(n, i, j, p);
            }
        }
        total += wt * level;
    }
    total
}

/// Trapezoid approximation of `∫∫ |f|² w dx dt` over the whole field.
pub fn integrate_space_time<R: Real>(f: &ComplexField<R>, w: Option<&RealField<R>>) -> Result<R> {
    integrate_space_time_region(f, w, Region::All)
}

pub fn integrate_space_time_region<R: Real>(
    f: &ComplexField<R>,
    w: Option<&RealField<R>>,
    region: Region,
) -> Result<R> {
    if let Some(w) = w {
        f.check_compatible(w)?;
        if let Some(bad) = w.values().iter().find(|v| !(**v >= R::zero())) {
            return Err(LabError::Precondition(format!("quadrature weight must be nonnegative, found {bad}")));
        }
    }
    let grid = *f.grid();
    Ok(sum_over(&grid, f.window(), region, |n, _, _, p| {
        let m = f.at_flat(n, p).norm_sqr();
        match w {
            Some(w) => m * w.at_flat(n, p),
            None => m,
        }
    }))
}

/// Trapezoid approximation of `∫∫_Γ |g|² w dσ dt` on one horizontal boundary.
pub fn integrate_boundary<R: Real>(g: &ComplexTrace<R>, w: Option<&RealTrace<R>>) -> Result<R> {
    integrate_boundary_region(g, w, Region::All)
}

/// Boundary quadrature; `Region::Interior` drops the time end levels and the
/// two corner columns `x1 = ±L`.
pub fn integrate_boundary_region<R: Real>(
    g: &ComplexTrace<R>,
    w: Option<&RealTrace<R>>,
    region: Region,
) -> Result<R> {
    if let Some(w) = w {
        g.check_compatible(w)?;
        if let Some(bad) = w.values().iter().find(|v| !(**v >= R::zero())) {
            return Err(LabError::Precondition(format!("boundary weight must be nonnegative, found {bad}")));
        }
    }
    let grid = *g.grid();
    Ok(boundary_sum(&grid, g.window(), region, |n, i| {
        let m = g.at(n, i).norm_sqr();
        match w {
            Some(w) => m * w.at(n, i),
            None => m,
        }
    }))
}

pub(crate) fn boundary_sum<R: Real>(
    grid: &StripGrid<R>,
    window: TimeWindow,
    region: Region,
    mut f: impl FnMut(usize, usize) -> R,
) -> R {
    let range = grid.levels(window);
    let (first, last) = (*range.start(), *range.end());
    let mut total = R::zero();
    for n in first..=last {
        if region == Region::Interior && (n == first || n == last) {
            continue;
        }
        let wt = time_weight(grid, window, n);
        let mut line = R::zero();
        for i in 0..=grid.n1() {
            if region == Region::Interior && (i == 0 || i == grid.n1()) {
                continue;
            }
            line += trapezoid_weight(i, grid.n1(), grid.h1()) * f(n, i);
        }
        total += wt * line;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, GridFunction};
    use crate::scalar::Cx;

    fn ones(g: StripGrid<f64>) -> ComplexField<f64> {
        GridFunction::from_fn(g, TimeWindow::Full, |_, _, _| Cx::new(1.0, 0.0))
    }

    #[test]
    fn zero_field_integrates_to_zero() {
        let g = StripGrid::new(2.0, 1.0, 1.0, 8, 8, 8).unwrap();
        let f = ComplexField::zeros(g, TimeWindow::Full);
        assert_eq!(integrate_space_time(&f, None).unwrap(), 0.0);
    }

    #[test]
    fn unit_field_gives_box_volume() {
        // (-2,2) x (1,2) x (-1,1): 4 * 1 * 2 = 8 per unit integrand; |f|^2 w with w = 2 gives 16.
        let g = StripGrid::new(2.0, 1.0, 1.0, 16, 8, 10).unwrap();
        let w = RealField::from_fn(g, TimeWindow::Full, |_, _, _| 2.0);
        let v = integrate_space_time(&ones(g), Some(&w)).unwrap();
        assert!((v - 16.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn multi_affine_weight_is_exact() {
        let g = StripGrid::new(1.5, 0.7, 0.9, 6, 5, 8).unwrap();
        let w = RealField::from_fn(g, TimeWindow::Full, |n, i, j| {
            (2.0 + g.x1(i)) * (1.0 + 3.0 * g.x2(j)) * (4.0 - g.t(n))
        });
        let v = integrate_space_time(&ones(g), Some(&w)).unwrap();
        // ∫(2+x1) over (-1.5,1.5) = 6; ∫(1+3x2) over (0.7,1.4) = 0.7 + 1.5*(1.96-0.49) = 2.905; ∫(4-t) over (-0.9,0.9) = 7.2
        let exact = 6.0 * 2.905 * 7.2;
        assert!(((v - exact) / exact).abs() <= 1e-12, "{v} vs {exact}");
    }

    #[test]
    fn negative_weight_rejected() {
        let g = StripGrid::new(2.0, 1.0, 1.0, 8, 8, 8).unwrap();
        let w = RealField::from_fn(g, TimeWindow::Full, |n, _, _| if n == 3 { -1.0 } else { 1.0 });
        assert!(matches!(integrate_space_time(&ones(g), Some(&w)), Err(LabError::Precondition(_))));
        let bt = ComplexTrace::from_fn(g, TimeWindow::Full, Boundary::Top, |_, _| Cx::new(1.0, 0.0));
        let bw = RealTrace::from_fn(g, TimeWindow::Full, Boundary::Top, |_, i| if i == 2 { -0.5 } else { 1.0 });
        assert!(matches!(integrate_boundary(&bt, Some(&bw)), Err(LabError::Precondition(_))));
    }

    #[test]
    fn grid_mismatch_rejected() {
        let g = StripGrid::new(2.0, 1.0, 1.0, 8, 8, 8).unwrap();
        let h = StripGrid::new(2.0, 1.0, 1.0, 8, 8, 10).unwrap();
        let w = RealField::from_fn(h, TimeWindow::Full, |_, _, _| 1.0);
        assert!(matches!(integrate_space_time(&ones(g), Some(&w)), Err(LabError::GridMismatch(_))));
        let top = ComplexTrace::from_fn(g, TimeWindow::Full, Boundary::Top, |_, _| Cx::new(1.0, 0.0));
        let bottom = RealTrace::from_fn(g, TimeWindow::Full, Boundary::Bottom, |_, _| 1.0);
        assert!(matches!(integrate_boundary(&top, Some(&bottom)), Err(LabError::GridMismatch(_))));
    }

    #[test]
    fn boundary_unit_integral() {
        let g = StripGrid::<f64>::new(2.0, 1.0, 1.0, 40, 8, 20).unwrap();
        let zero = ComplexTrace::from_fn(g, TimeWindow::Full, Boundary::Top, |_, _| Cx::new(0.0, 0.0));
        assert_eq!(integrate_boundary(&zero, None).unwrap(), 0.0);
        let one = ComplexTrace::from_fn(g, TimeWindow::Full, Boundary::Top, |_, _| Cx::new(1.0, 0.0));
        let v = integrate_boundary(&one, None).unwrap();
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn smooth_field_converges_at_second_order() {
        let f = |g: StripGrid<f64>| {
            GridFunction::from_fn(g, TimeWindow::Full, |n, i, j| {
                let (t, x1, x2) = (g.t(n), g.x1(i), g.x2(j));
                Cx::new((x1 * 0.7).cos() * (x2 * 1.3).exp() * (1.0 + t * t).sqrt(), (t * x1).sin())
            })
        };
        let g0 = StripGrid::new(1.0, 1.0, 1.0, 6, 6, 6).unwrap();
        let gs = [g0, g0.refined(), g0.refined().refined()];
        let vals: Vec<f64> = gs.iter().map(|g| integrate_space_time(&f(*g), None).unwrap()).collect();
        let order = ((vals[1] - vals[0]) / (vals[2] - vals[1])).abs().log2();
        assert!(order >= 1.9, "order {order}");
    }

    #[test]
    fn f32_quadrature_agrees() {
        let g = StripGrid::new(2.0f32, 1.0, 1.0, 8, 8, 8).unwrap();
        let f = GridFunction::from_fn(g, TimeWindow::Full, |_, _, _| Cx::new(1.0f32, 0.0));
        let v = integrate_space_time(&f, None).unwrap();
        assert!((v - 8.0).abs() < 1e-5);
    }
}
