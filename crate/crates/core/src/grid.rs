//! Truncated strip geometry: `(-L, L) x (d, 2d) x (-T, T)` sampled on a
//! vertex-centred uniform grid with boundary nodes included.

use std::io::Write;

use crate::error::{LabError, Result};
use crate::scalar::{Cx, Real};

/// Uniform space-time grid over the truncated strip.
///
/// `nt` must be even so that `t = 0` is a grid level; the forward solver
/// starts there and the symmetric extension mirrors around it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripGrid<R> {
    half_length: R,
    width: R,
    horizon: R,
    n1: usize,
    n2: usize,
    nt: usize,
}

impl<R: Real> StripGrid<R> {
    pub fn new(half_length: R, width: R, horizon: R, n1: usize, n2: usize, nt: usize) -> Result<Self> {
        for (name, v) in [("L", half_length), ("d", width), ("T", horizon)] {
            if !(v.is_finite() && v > R::zero()) {
                return Err(LabError::Config(format!("grid.{name} must be positive and finite, got {v}")));
            }
        }
        for (name, n) in [("n1", n1), ("n2", n2), ("nt", nt)] {
            if n < 4 {
                return Err(LabError::Config(format!("grid.{name} must be at least 4, got {n}")));
            }
        }
        if nt % 2 != 0 {
            return Err(LabError::Config(format!("grid.nt must be even so that t = 0 is a level, got {nt}")));
        }
        let grid = StripGrid { half_length, width, horizon, n1, n2, nt };
        for (name, h) in [("h1", grid.h1()), ("h2", grid.h2()), ("dt", grid.dt())] {
            if !(h.is_finite() && h > R::zero()) {
                return Err(LabError::Config(format!("spacing {name} degenerate: {h}")));
            }
        }
        Ok(grid)
    }

    pub fn half_length(&self) -> R {
        self.half_length
    }

    /// Strip offset `d`; the strip is `d < x2 < 2d`.
    pub fn width(&self) -> R {
        self.width
    }

    pub fn horizon(&self) -> R {
        self.horizon
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn h1(&self) -> R {
        (self.half_length + self.half_length) / R::from_usize_lossy(self.n1)
    }

    pub fn h2(&self) -> R {
        self.width / R::from_usize_lossy(self.n2)
    }

    pub fn dt(&self) -> R {
        (self.horizon + self.horizon) / R::from_usize_lossy(self.nt)
    }

    pub fn x1(&self, i: usize) -> R {
        if i == self.n1 {
            return self.half_length;
        }
        -self.half_length + R::from_usize_lossy(i) * self.h1()
    }

    pub fn x2(&self, j: usize) -> R {
        if j == self.n2 {
            return self.width + self.width;
        }
        self.width + R::from_usize_lossy(j) * self.h2()
    }

    /// Time of level `n`; level `nt/2` is exactly `t = 0`.
    pub fn t(&self, n: usize) -> R {
        let mid = self.zero_level();
        if n == self.nt {
            self.horizon
        } else if n == 0 {
            -self.horizon
        } else if n >= mid {
            R::from_usize_lossy(n - mid) * self.dt()
        } else {
            -R::from_usize_lossy(mid - n) * self.dt()
        }
    }

    pub fn zero_level(&self) -> usize {
        self.nt / 2
    }

    pub fn space_len(&self) -> usize {
        (self.n1 + 1) * (self.n2 + 1)
    }

    /// Flat index of the spatial node `(i, j)`; `x2` runs fastest.
    #[inline]
    pub fn sidx(&self, i: usize, j: usize) -> usize {
        i * (self.n2 + 1) + j
    }

    #[inline]
    pub fn is_space_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n1 || j == self.n2
    }

    /// Boundary component a node with this `x2` index lies on, if any.
    pub fn horizontal_boundary(&self, j: usize) -> Option<Boundary> {
        if j == self.n2 {
            Some(Boundary::Top)
        } else if j == 0 {
            Some(Boundary::Bottom)
        } else {
            None
        }
    }

    pub fn levels(&self, window: TimeWindow) -> std::ops::RangeInclusive<usize> {
        match window {
            TimeWindow::Full => 0..=self.nt,
            TimeWindow::Forward => self.zero_level()..=self.nt,
        }
    }

    pub fn level_count(&self, window: TimeWindow) -> usize {
        match window {
            TimeWindow::Full => self.nt + 1,
            TimeWindow::Forward => self.nt - self.zero_level() + 1,
        }
    }

    /// Grid with every spacing halved.
    pub fn refined(&self) -> Self {
        StripGrid { n1: self.n1 * 2, n2: self.n2 * 2, nt: self.nt * 2, ..*self }
    }

    pub(crate) fn same_as(&self, other: &Self) -> bool {
        self == other
    }
}

/// Horizontal boundary components: `Top` is `Γ⁺ = {x2 = 2d}`, `Bottom` is
/// `Γ⁻ = {x2 = d}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Boundary {
    Top,
    Bottom,
}

impl Boundary {
    pub fn x2_index<R: Real>(self, grid: &StripGrid<R>) -> usize {
        match self {
            Boundary::Top => grid.n2(),
            Boundary::Bottom => 0,
        }
    }

    /// `x2`-component of the outward unit normal.
    pub fn outward_sign<R: Real>(self) -> R {
        match self {
            Boundary::Top => R::one(),
            Boundary::Bottom => -R::one(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Boundary::Top => "gamma_plus",
            Boundary::Bottom => "gamma_minus",
        }
    }
}

/// Range of time levels a field covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeWindow {
    /// `[-T, T]`.
    Full,
    /// `[0, T]`, the range the forward solver produces.
    Forward,
}

/// Field sampled on every node of the space-time grid, indexed `(t, x1, x2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<R, T> {
    grid: StripGrid<R>,
    window: TimeWindow,
    values: Vec<T>,
}

pub type ComplexField<R> = GridFunction<R, Cx<R>>;
pub type RealField<R> = GridFunction<R, R>;

impl<R: Real, T: Copy + Default> GridFunction<R, T> {
    pub fn zeros(grid: StripGrid<R>, window: TimeWindow) -> Self {
        let len = grid.level_count(window) * grid.space_len();
        GridFunction { grid, window, values: vec![T::default(); len] }
    }

    /// Builds a field from `f(n, i, j)` with `n` the absolute time level.
    pub fn from_fn(grid: StripGrid<R>, window: TimeWindow, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.level_count(window) * grid.space_len());
        for n in grid.levels(window) {
            for i in 0..=grid.n1() {
                for j in 0..=grid.n2() {
                    values.push(f(n, i, j));
                }
            }
        }
        GridFunction { grid, window, values }
    }

    pub fn from_values(grid: StripGrid<R>, window: TimeWindow, values: Vec<T>) -> Result<Self> {
        let expected = grid.level_count(window) * grid.space_len();
        if values.len() != expected {
            return Err(LabError::GridMismatch(format!(
                "field has {} values, grid expects {expected}",
                values.len()
            )));
        }
        Ok(GridFunction { grid, window, values })
    }

    pub fn grid(&self) -> &StripGrid<R> {
        &self.grid
    }

    pub fn window(&self) -> TimeWindow {
        self.window
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn first_level(&self) -> usize {
        *self.grid.levels(self.window).start()
    }

    pub fn last_level(&self) -> usize {
        self.grid.nt()
    }

    pub fn has_level(&self, n: usize) -> bool {
        n >= self.first_level() && n <= self.last_level()
    }

    #[inline]
    pub fn index(&self, n: usize, i: usize, j: usize) -> usize {
        (n - self.first_level()) * self.grid.space_len() + self.grid.sidx(i, j)
    }

    #[inline]
    pub fn at(&self, n: usize, i: usize, j: usize) -> T {
        self.values[self.index(n, i, j)]
    }

    #[inline]
    pub fn at_flat(&self, n: usize, p: usize) -> T {
        self.values[(n - self.first_level()) * self.grid.space_len() + p]
    }

    pub fn set(&mut self, n: usize, i: usize, j: usize, v: T) {
        let k = self.index(n, i, j);
        self.values[k] = v;
    }

    /// All spatial values at level `n`.
    pub fn level(&self, n: usize) -> &[T] {
        let s = self.grid.space_len();
        let k = (n - self.first_level()) * s;
        &self.values[k..k + s]
    }

    pub fn level_mut(&mut self, n: usize) -> &mut [T] {
        let s = self.grid.space_len();
        let k = (n - self.first_level()) * s;
        &mut self.values[k..k + s]
    }

    pub fn map<U: Copy + Default>(&self, f: impl Fn(T) -> U) -> GridFunction<R, U> {
        GridFunction { grid: self.grid, window: self.window, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map<U: Copy + Default, V: Copy + Default>(
        &self,
        other: &GridFunction<R, U>,
        f: impl Fn(T, U) -> V,
    ) -> Result<GridFunction<R, V>> {
        self.check_compatible(other)?;
        Ok(GridFunction {
            grid: self.grid,
            window: self.window,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn check_compatible<U>(&self, other: &GridFunction<R, U>) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(LabError::GridMismatch("fields live on different grids".into()));
        }
        if self.window != other.window {
            return Err(LabError::GridMismatch(format!(
                "time windows differ: {:?} vs {:?}",
                self.window, other.window
            )));
        }
        Ok(())
    }
}

impl<R: Real> ComplexField<R> {
    pub fn max_abs(&self) -> R {
        self.values.iter().fold(R::zero(), |m, v| m.max(v.norm()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn scale(&self, c: Cx<R>) -> Self {
        self.map(|v| v * c)
    }

    /// Largest modulus on the spatial boundary over all levels.
    pub fn max_abs_on_space_boundary(&self) -> R {
        let g = self.grid;
        let mut m = R::zero();
        for n in g.levels(self.window) {
            for i in 0..=g.n1() {
                for j in 0..=g.n2() {
                    if g.is_space_boundary(i, j) {
                        m = m.max(self.at(n, i, j).norm());
                    }
                }
            }
        }
        m
    }

    /// Writes one row per node: `t,x1,x2,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x1,x2,re,im")?;
        let g = self.grid;
        for n in g.levels(self.window) {
            for i in 0..=g.n1() {
                for j in 0..=g.n2() {
                    let v = self.at(n, i, j);
                    writeln!(w, "{},{},{},{:e},{:e}", g.t(n), g.x1(i), g.x2(j), v.re, v.im)?;
                }
            }
        }
        Ok(())
    }
}

impl<R: Real> ComplexField<R> {
    /// Reads rows written by [`ComplexField::write_csv`] for this grid and
    /// window; node coordinates must match the grid.
    pub fn read_csv(grid: StripGrid<R>, window: TimeWindow, text: &str) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.level_count(window) * grid.space_len());
        let mut nodes = grid.levels(window).flat_map(|n| {
            (0..=grid.n1()).flat_map(move |i| (0..=grid.n2()).map(move |j| (n, i, j)))
        });
        let tol = R::lit(1e-9);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('t') {
                continue;
            }
            let cols: std::result::Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
            let cols = cols.map_err(|e| LabError::Config(format!("line {}: {e}", lineno + 1)))?;
            if cols.len() != 5 {
                return Err(LabError::Config(format!("line {}: expected t,x1,x2,re,im", lineno + 1)));
            }
            let (n, i, j) = nodes
                .next()
                .ok_or_else(|| LabError::GridMismatch(format!("line {}: more rows than grid nodes", lineno + 1)))?;
            let expect = [grid.t(n), grid.x1(i), grid.x2(j)];
            for (k, e) in expect.iter().enumerate() {
                if (R::lit(cols[k]) - *e).abs() > tol * (R::one() + e.abs()) {
                    return Err(LabError::GridMismatch(format!(
                        "line {}: node coordinate {} does not match grid value {e}",
                        lineno + 1,
                        cols[k]
                    )));
                }
            }
            values.push(Cx::new(R::lit(cols[3]), R::lit(cols[4])));
        }
        if nodes.next().is_some() {
            return Err(LabError::GridMismatch("table has fewer rows than grid nodes".into()));
        }
        Self::from_values(grid, window, values)
    }
}

impl<R: Real> RealField<R> {
    pub fn min_value(&self) -> R {
        self.values.iter().fold(R::infinity(), |m, &v| m.min(v))
    }
}

/// Values on one horizontal boundary, indexed `(t, x1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace<R, T> {
    grid: StripGrid<R>,
    window: TimeWindow,
    boundary: Boundary,
    values: Vec<T>,
}

pub type ComplexTrace<R> = BoundaryTrace<R, Cx<R>>;
pub type RealTrace<R> = BoundaryTrace<R, R>;

impl<R: Real, T: Copy + Default> BoundaryTrace<R, T> {
    pub fn from_fn(
        grid: StripGrid<R>,
        window: TimeWindow,
        boundary: Boundary,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Self {
        let mut values = Vec::with_capacity(grid.level_count(window) * (grid.n1() + 1));
        for n in grid.levels(window) {
            for i in 0..=grid.n1() {
                values.push(f(n, i));
            }
        }
        BoundaryTrace { grid, window, boundary, values }
    }

    pub fn grid(&self) -> &StripGrid<R> {
        &self.grid
    }

    pub fn window(&self) -> TimeWindow {
        self.window
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn first_level(&self) -> usize {
        *self.grid.levels(self.window).start()
    }

    #[inline]
    pub fn at(&self, n: usize, i: usize) -> T {
        self.values[(n - self.first_level()) * (self.grid.n1() + 1) + i]
    }

    pub fn check_compatible<U>(&self, other: &BoundaryTrace<R, U>) -> Result<()> {
        if !self.grid.same_as(&other.grid) || self.window != other.window {
            return Err(LabError::GridMismatch("traces live on different grids".into()));
        }
        if self.boundary != other.boundary {
            return Err(LabError::GridMismatch(format!(
                "trace on {} paired with trace on {}",
                self.boundary.label(),
                other.boundary.label()
            )));
        }
        Ok(())
    }

    pub fn map<U: Copy + Default>(&self, f: impl Fn(T) -> U) -> BoundaryTrace<R, U> {
        BoundaryTrace {
            grid: self.grid,
            window: self.window,
            boundary: self.boundary,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl<R: Real> ComplexTrace<R> {
    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn rms(&self) -> R {
        if self.values.is_empty() {
            return R::zero();
        }
        let s: R = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s / R::from_usize_lossy(self.values.len())).sqrt()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x1,re,im")?;
        let g = self.grid;
        for n in g.levels(self.window) {
            for i in 0..=g.n1() {
                let v = self.at(n, i);
                writeln!(w, "{},{},{:e},{:e}", g.t(n), g.x1(i), v.re, v.im)?;
            }
        }
        Ok(())
    }
}
