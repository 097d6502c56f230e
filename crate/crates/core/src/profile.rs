//! Closed-form spatial profiles for coefficients, weight functions and
//! planted gaps.
//!
//! A [`Profile`] is a finite sum of separable terms `f(x1) g(x2)`, which is
//! enough for every fixture the lab uses and makes all mixed partials exact.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::jet::Taylor1;
use crate::scalar::Real;

/// Tabulated function of one variable with its first two derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Table1D<R> {
    z: Vec<R>,
    value: Vec<R>,
    d1: Vec<R>,
    d2: Vec<R>,
}

impl<R: Real> Table1D<R> {
    pub fn new(z: Vec<R>, value: Vec<R>, d1: Vec<R>, d2: Vec<R>) -> Result<Self> {
        let n = z.len();
        if n < 2 || value.len() != n || d1.len() != n || d2.len() != n {
            return Err(LabError::Config("tabulated profile needs at least two complete rows".into()));
        }
        if z.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LabError::Config("tabulated profile abscissae must be strictly increasing".into()));
        }
        if z.iter().chain(&value).chain(&d1).chain(&d2).any(|v| !v.is_finite()) {
            return Err(LabError::Config("tabulated profile contains non-finite entries".into()));
        }
        Ok(Table1D { z, value, d1, d2 })
    }

    /// Reads `x2,value,d/dx2,d2/dx2^2` rows; a header line and `#` comments
    /// are skipped.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read profile table {}: {e}", path.display())))?;
        Self::from_csv_str(&text).map_err(|e| match e {
            LabError::Config(m) => LabError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let (mut z, mut v, mut d1, mut d2) = (vec![], vec![], vec![], vec![]);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> = cols.iter().map(|c| c.parse::<f64>()).collect();
            match parsed {
                Ok(vals) if vals.len() == 4 => {
                    z.push(R::lit(vals[0]));
                    v.push(R::lit(vals[1]));
                    d1.push(R::lit(vals[2]));
                    d2.push(R::lit(vals[3]));
                }
                Ok(vals) => {
                    return Err(LabError::Config(format!(
                        "line {}: expected 4 columns (x2,value,d1,d2), found {}",
                        lineno + 1,
                        vals.len()
                    )))
                }
                Err(_) if z.is_empty() => continue, // header
                Err(e) => return Err(LabError::Config(format!("line {}: {e}", lineno + 1))),
            }
        }
        Self::new(z, v, d1, d2)
    }

    pub fn range(&self) -> (R, R) {
        (self.z[0], self.z[self.z.len() - 1])
    }

    fn derivatives(&self, z: R) -> [R; 5] {
        let n = self.z.len();
        let k = match self.z.iter().position(|&zk| zk > z) {
            Some(0) => 0,
            Some(k) => k - 1,
            None => n - 2,
        };
        let (z0, z1) = (self.z[k], self.z[k + 1]);
        let w = ((z - z0) / (z1 - z0)).max(R::zero()).min(R::one());
        let lerp = |a: &[R]| a[k] + (a[k + 1] - a[k]) * w;
        let d3 = (self.d2[k + 1] - self.d2[k]) / (z1 - z0);
        [lerp(&self.value), lerp(&self.d1), lerp(&self.d2), d3, R::zero()]
    }
}

/// Function of a single coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile1D<R> {
    Const(R),
    /// `Σ c_k z^k`.
    Poly(Vec<R>),
    /// `amp * exp(rate * z)`.
    Exp { amp: R, rate: R },
    /// `amp * sin(freq * (z - shift))`.
    Sin { amp: R, freq: R, shift: R },
    /// `amp * cos(freq * (z - shift))`.
    Cos { amp: R, freq: R, shift: R },
    /// `exp(1 - 1/(1 - r²))` with `r = (z - center)/half_width`, zero for `|r| ≥ 1`.
    Bump { center: R, half_width: R },
    Table(Arc<Table1D<R>>),
    /// Constant multiple of another profile.
    Scaled(R, Box<Profile1D<R>>),
}

impl<R: Real> Profile1D<R> {
    /// `[f, f', f'', f''', f'''']` at `z`.
    pub fn derivatives(&self, z: R) -> [R; 5] {
        match self {
            Profile1D::Const(c) => [*c, R::zero(), R::zero(), R::zero(), R::zero()],
            Profile1D::Poly(coef) => {
                let x = Taylor1::var(z);
                let mut acc = Taylor1::constant(R::zero());
                for &ck in coef.iter().rev() {
                    acc = acc * x + Taylor1::constant(ck);
                }
                acc.derivatives()
            }
            Profile1D::Exp { amp, rate } => Taylor1::var(z).scale(*rate).exp().scale(*amp).derivatives(),
            Profile1D::Sin { amp, freq, shift } => {
                let arg = (Taylor1::var(z) - Taylor1::constant(*shift)).scale(*freq);
                arg.sin_cos().0.scale(*amp).derivatives()
            }
            Profile1D::Cos { amp, freq, shift } => {
                let arg = (Taylor1::var(z) - Taylor1::constant(*shift)).scale(*freq);
                arg.sin_cos().1.scale(*amp).derivatives()
            }
            Profile1D::Bump { center, half_width } => {
                let r0 = (z - *center) / *half_width;
                if r0.abs() >= R::one() {
                    return [R::zero(); 5];
                }
                let r = (Taylor1::var(z) - Taylor1::constant(*center)).scale(R::one() / *half_width);
                let one = Taylor1::constant(R::one());
                let inner = one - one / (one - r * r);
                inner.exp().derivatives()
            }
            Profile1D::Table(t) => t.derivatives(z),
            Profile1D::Scaled(c, inner) => inner.derivatives(z).map(|v| v * *c),
        }
    }

    pub fn value(&self, z: R) -> R {
        self.derivatives(z)[0]
    }

    fn is_constant(&self) -> bool {
        match self {
            Profile1D::Const(_) => true,
            Profile1D::Poly(c) => c.iter().skip(1).all(|v| *v == R::zero()),
            Profile1D::Exp { rate, .. } => *rate == R::zero(),
            Profile1D::Scaled(_, inner) => inner.is_constant(),
            _ => false,
        }
    }
}

/// Value and partial derivatives of a spatial field at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpatialJet<R> {
    pub value: R,
    /// `[∂1, ∂2]`.
    pub grad: [R; 2],
    /// `[∂11, ∂12, ∂22]`.
    pub hess: [R; 3],
    /// `[∂111, ∂112, ∂122, ∂222]`.
    pub third: [R; 4],
}

impl<R: Real> SpatialJet<R> {
    pub fn laplacian(&self) -> R {
        self.hess[0] + self.hess[2]
    }

    pub fn grad_norm(&self) -> R {
        self.grad[0].hypot(self.grad[1])
    }

    pub fn is_finite(&self) -> bool {
        std::iter::once(self.value)
            .chain(self.grad)
            .chain(self.hess)
            .chain(self.third)
            .all(|v| v.is_finite())
    }

    pub fn scaled(&self, c: R) -> Self {
        SpatialJet {
            value: self.value * c,
            grad: self.grad.map(|v| v * c),
            hess: self.hess.map(|v| v * c),
            third: self.third.map(|v| v * c),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let z = |a: [R; 4], b: [R; 4]| [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]];
        SpatialJet {
            value: self.value - o.value,
            grad: [self.grad[0] - o.grad[0], self.grad[1] - o.grad[1]],
            hess: [self.hess[0] - o.hess[0], self.hess[1] - o.hess[1], self.hess[2] - o.hess[2]],
            third: z(self.third, o.third),
        }
    }
}

/// Sum of separable terms `Σ f_k(x1) g_k(x2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<R> {
    name: String,
    terms: Vec<(Profile1D<R>, Profile1D<R>)>,
}

impl<R: Real> Profile<R> {
    pub fn new(name: impl Into<String>, terms: Vec<(Profile1D<R>, Profile1D<R>)>) -> Self {
        Profile { name: name.into(), terms }
    }

    /// Profile depending on `x2` only.
    pub fn of_x2(name: impl Into<String>, g: Profile1D<R>) -> Self {
        Self::new(name, vec![(Profile1D::Const(R::one()), g)])
    }

    pub fn constant(c: R) -> Self {
        Self::of_x2(format!("const({c})"), Profile1D::Const(c))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn terms(&self) -> &[(Profile1D<R>, Profile1D<R>)] {
        &self.terms
    }

    pub fn sum(name: impl Into<String>, parts: Vec<Profile<R>>) -> Self {
        Profile { name: name.into(), terms: parts.into_iter().flat_map(|p| p.terms).collect() }
    }

    pub fn scaled(&self, c: R) -> Self {
        Profile {
            name: format!("{c}*({})", self.name),
            terms: self.terms.iter().map(|(f, g)| (f.clone(), scale_1d(g, c))).collect(),
        }
    }

    pub fn depends_on_x1(&self) -> bool {
        self.terms.iter().any(|(f, _)| !f.is_constant())
    }

    /// `∂1^a ∂2^b` at `(x1, x2)` for `a + b ≤ 4`.
    pub fn partial(&self, x1: R, x2: R, a: usize, b: usize) -> R {
        self.terms
            .iter()
            .map(|(f, g)| f.derivatives(x1)[a] * g.derivatives(x2)[b])
            .sum()
    }

    pub fn value(&self, x1: R, x2: R) -> R {
        self.partial(x1, x2, 0, 0)
    }

    pub fn jet(&self, x1: R, x2: R) -> SpatialJet<R> {
        let mut out = SpatialJet::default();
        for (f, g) in &self.terms {
            let df = f.derivatives(x1);
            let dg = g.derivatives(x2);
            out.value += df[0] * dg[0];
            out.grad[0] += df[1] * dg[0];
            out.grad[1] += df[0] * dg[1];
            out.hess[0] += df[2] * dg[0];
            out.hess[1] += df[1] * dg[1];
            out.hess[2] += df[0] * dg[2];
            out.third[0] += df[3] * dg[0];
            out.third[1] += df[2] * dg[1];
            out.third[2] += df[1] * dg[2];
            out.third[3] += df[0] * dg[3];
        }
        out
    }

    /// Largest `|∂^α f|` over `|α| = order` at `(x1, x2)`.
    pub fn max_partial_of_order(&self, x1: R, x2: R, order: usize) -> R {
        (0..=order).fold(R::zero(), |m, a| m.max(self.partial(x1, x2, a, order - a).abs()))
    }
}

fn scale_1d<R: Real>(g: &Profile1D<R>, c: R) -> Profile1D<R> {
    match g {
        Profile1D::Const(v) => Profile1D::Const(*v * c),
        Profile1D::Poly(v) => Profile1D::Poly(v.iter().map(|x| *x * c).collect()),
        Profile1D::Exp { amp, rate } => Profile1D::Exp { amp: *amp * c, rate: *rate },
        Profile1D::Sin { amp, freq, shift } => Profile1D::Sin { amp: *amp * c, freq: *freq, shift: *shift },
        Profile1D::Cos { amp, freq, shift } => Profile1D::Cos { amp: *amp * c, freq: *freq, shift: *shift },
        Profile1D::Scaled(f, inner) => Profile1D::Scaled(*f * c, inner.clone()),
        Profile1D::Bump { .. } | Profile1D::Table(_) => Profile1D::Scaled(c, Box::new(g.clone())),
    }
}

/// Geometry a named profile is resolved against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileContext<R> {
    /// Strip offset `d`.
    pub width: R,
    /// Truncation half-length `L`.
    pub half_length: R,
}

impl<R: Real> ProfileContext<R> {
    /// x1 cut-off used by bump profiles: support `|x1| < 0.75 L`.
    pub fn x1_bump(&self) -> Profile1D<R> {
        Profile1D::Bump { center: R::zero(), half_width: R::lit(0.75) * self.half_length }
    }

    /// `sin(π (x2 - d)/d)`, vanishing on both horizontal boundaries.
    pub fn sin_bump(&self, amp: R) -> Profile1D<R> {
        Profile1D::Sin { amp, freq: R::PI() / self.width, shift: self.width }
    }

    pub fn cos_bump(&self, amp: R) -> Profile1D<R> {
        Profile1D::Cos { amp, freq: R::PI() / self.width, shift: self.width }
    }
}

/// Profile as written in a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    /// Catalog name: `paper-a`, `exp-decreasing`, `exp-increasing`,
    /// `linear`, `zero`, `one`.
    Named(String),
    Const {
        #[serde(rename = "const")]
        value: f64,
    },
    /// `amp * sin(π (x2 - d)/d)`.
    SinBump {
        #[serde(rename = "sin-bump")]
        amp: f64,
    },
    /// `amp * cos(π (x2 - d)/d) * bump(x1)`.
    CosBump {
        #[serde(rename = "cos-bump")]
        amp: f64,
    },
    /// Tabulated `x2,value,d1,d2` CSV.
    File { file: PathBuf },
    Sum { sum: Vec<ProfileSpec> },
}

pub const CATALOG_NAMES: &[&str] = &["paper-a", "exp-decreasing", "exp-increasing", "linear", "zero", "one"];

impl ProfileSpec {
    pub fn named(name: &str) -> Self {
        ProfileSpec::Named(name.to_string())
    }

    pub fn resolve<R: Real>(&self, ctx: &ProfileContext<R>) -> Result<Profile<R>> {
        Ok(match self {
            ProfileSpec::Named(name) => match name.as_str() {
                "paper-a" => Profile::of_x2(name.clone(), Profile1D::Poly(vec![R::lit(2.5), R::zero(), R::lit(0.5)])),
                "exp-decreasing" => Profile::of_x2(name.clone(), Profile1D::Exp { amp: R::one(), rate: -R::one() }),
                "exp-increasing" => Profile::of_x2(name.clone(), Profile1D::Exp { amp: R::one(), rate: R::one() }),
                "linear" => Profile::of_x2(name.clone(), Profile1D::Poly(vec![R::zero(), R::one()])),
                "zero" => Profile::of_x2(name.clone(), Profile1D::Const(R::zero())),
                "one" => Profile::of_x2(name.clone(), Profile1D::Const(R::one())),
                other => {
                    return Err(LabError::Config(format!(
                        "unknown profile `{other}`; known names: {}",
                        CATALOG_NAMES.join(", ")
                    )))
                }
            },
            ProfileSpec::Const { value } => Profile::constant(R::lit(*value)),
            ProfileSpec::SinBump { amp } => Profile::of_x2(format!("sin-bump({amp})"), ctx.sin_bump(R::lit(*amp))),
            ProfileSpec::CosBump { amp } => {
                Profile::new(format!("cos-bump({amp})"), vec![(ctx.x1_bump(), ctx.cos_bump(R::lit(*amp)))])
            }
            ProfileSpec::File { file } => {
                let table = Table1D::from_csv_path(file)?;
                let (lo, hi) = table.range();
                let tol = R::lit(1e-12) * ctx.width;
                if lo > ctx.width + tol || hi < ctx.width + ctx.width - tol {
                    return Err(LabError::Config(format!(
                        "profile table {} covers [{lo}, {hi}] but the strip needs [{}, {}]",
                        file.display(),
                        ctx.width,
                        ctx.width + ctx.width
                    )));
                }
                Profile::of_x2(file.display().to_string(), Profile1D::Table(Arc::new(table)))
            }
            ProfileSpec::Sum { sum } => {
                let parts = sum.iter().map(|p| p.resolve(ctx)).collect::<Result<Vec<_>>>()?;
                let name = parts.iter().map(|p| p.name().to_string()).collect::<Vec<_>>().join(" + ");
                Profile::sum(name, parts)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> ProfileContext<f64> {
        ProfileContext { width: 1.0, half_length: 4.0 }
    }

    #[test]
    fn paper_coefficient_and_weight() {
        let a = ProfileSpec::named("paper-a").resolve(&ctx()).unwrap();
        let j = a.jet(0.3, 1.5);
        assert!((j.value - 3.625).abs() < 1e-14);
        assert!((j.grad[1] - 1.5).abs() < 1e-14);
        assert!((j.hess[2] - 1.0).abs() < 1e-14);
        assert_eq!(j.grad[0], 0.0);
        let b = ProfileSpec::named("exp-decreasing").resolve(&ctx()).unwrap();
        let jb = b.jet(0.0, 1.0);
        assert!((jb.value - (-1f64).exp()).abs() < 1e-15);
        assert!((jb.grad[1] + (-1f64).exp()).abs() < 1e-15);
        assert!((b.partial(0.0, 1.0, 0, 4) - (-1f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn bumps_vanish_where_expected() {
        let s = ProfileSpec::SinBump { amp: 0.05 }.resolve(&ctx()).unwrap();
        assert!(s.value(0.0, 1.0).abs() < 1e-15);
        assert!(s.value(0.0, 2.0).abs() < 1e-15);
        assert!((s.value(0.0, 1.5) - 0.05).abs() < 1e-15);
        let c = ProfileSpec::CosBump { amp: 0.05 }.resolve(&ctx()).unwrap();
        assert!((c.value(0.0, 1.0) - 0.05).abs() < 1e-15);
        assert_eq!(c.value(3.0, 1.5), 0.0);
        assert!(c.depends_on_x1());
        assert!(!s.depends_on_x1());
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let b = Profile1D::<f64>::Bump { center: 0.2, half_width: 1.5 };
        let z = 0.7;
        let h = 1e-4;
        let d = b.derivatives(z);
        let fd1 = (b.value(z + h) - b.value(z - h)) / (2.0 * h);
        let fd2 = (b.value(z + h) - 2.0 * b.value(z) + b.value(z - h)) / (h * h);
        assert!((d[1] - fd1).abs() < 1e-7);
        assert!((d[2] - fd2).abs() < 1e-5);
    }

    #[test]
    fn table_interpolates_rows() {
        let t = Table1D::<f64>::from_csv_str("x2,value,d1,d2\n1,1,0,2\n2,4,2,2\n").unwrap();
        let p = Profile::of_x2("t", Profile1D::Table(Arc::new(t)));
        let j = p.jet(0.0, 1.5);
        assert_eq!(j.value, 2.5);
        assert_eq!(j.hess[2], 2.0);
        assert!(Table1D::<f64>::from_csv_str("1,2,3\n").is_err());
        assert!(Table1D::<f64>::from_csv_str("2,1,0,0\n1,1,0,0\n").is_err());
    }

    #[test]
    fn config_forms_parse() {
        #[derive(Deserialize)]
        struct W {
            a: ProfileSpec,
            b: ProfileSpec,
            c: ProfileSpec,
        }
        let w: W = toml::from_str(
            "a = \"paper-a\"\nb = { const = -1.0 }\nc = { sum = [\"paper-a\", { sin-bump = -0.05 }] }\n",
        )
        .unwrap();
        assert_eq!(w.a, ProfileSpec::named("paper-a"));
        assert_eq!(w.b, ProfileSpec::Const { value: -1.0 });
        let c = w.c.resolve(&ctx()).unwrap();
        assert!((c.value(0.0, 1.5) - (3.625 - 0.05)).abs() < 1e-14);
        assert!(ProfileSpec::named("nope").resolve::<f64>(&ctx()).is_err());
    }
}
