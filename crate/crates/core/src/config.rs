//! Run configuration read from TOML.
//!
//! Every block and field is optional; missing entries take the defaults
//! below. Unknown fields are rejected so that typos surface as errors.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::auditor::Variant;
use crate::coeffs::CoefficientField;
use crate::error::{LabError, Result};
use crate::fixtures::{fixture_by_name, ExactSolution};
use crate::grid::StripGrid;
use crate::profile::{Profile, ProfileContext, ProfileSpec};
use crate::scalar::Real;

/// Environment variable overriding `seed`.
pub const SEED_ENV: &str = "CARLEMAN_LAB_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub grid: GridConfig,
    pub weights: WeightsConfig,
    pub coefficients: CoefficientsConfig,
    pub fixture: FixtureConfig,
    pub forward: ForwardConfig,
    pub audit: AuditConfig,
    pub inverse: InverseConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 20240101,
            grid: GridConfig::default(),
            weights: WeightsConfig::default(),
            coefficients: CoefficientsConfig::default(),
            fixture: FixtureConfig::default(),
            forward: ForwardConfig::default(),
            audit: AuditConfig::default(),
            inverse: InverseConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// `L`: the strip is truncated to `|x1| < L`.
    #[serde(rename = "L")]
    pub half_length: f64,
    /// `d`: the strip is `d < x2 < 2d`.
    pub d: f64,
    /// `T`: time runs over `(-T, T)`.
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n1: usize,
    pub n2: usize,
    pub nt: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { half_length: 4.0, d: 1.0, horizon: 1.0, n1: 32, n2: 40, nt: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightsConfig {
    pub beta_tilde: ProfileSpec,
    pub m: f64,
    pub lambdas: Vec<f64>,
    pub ss: Vec<f64>,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        WeightsConfig {
            beta_tilde: ProfileSpec::named("exp-decreasing"),
            m: 2.0,
            lambdas: vec![1.0, 2.0, 4.0],
            ss: vec![8.0, 16.0, 32.0, 64.0],
        }
    }
}

/// `a`, `b` are the coefficients of `q̃`; the twin `q` uses `a - alpha`,
/// `b - gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientsConfig {
    pub a: ProfileSpec,
    pub b: ProfileSpec,
    pub alpha: ProfileSpec,
    pub gamma: ProfileSpec,
}

impl Default for CoefficientsConfig {
    fn default() -> Self {
        CoefficientsConfig {
            a: ProfileSpec::named("paper-a"),
            b: ProfileSpec::Const { value: -1.0 },
            alpha: ProfileSpec::SinBump { amp: 0.05 },
            gamma: ProfileSpec::CosBump { amp: 0.05 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixtureConfig {
    /// Closed-form `q̃` for the forward and inverse commands.
    pub reference: String,
    /// Test fields for the audits, each vanishing on the lateral boundary.
    pub audit: Vec<String>,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig { reference: "paper".into(), audit: vec!["bump".into(), "time-independent".into()] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForwardConfig {
    /// Number of grids in the refinement study, each halving the spacings.
    pub levels: usize,
    /// Refine in `x1` too; off suits data that do not depend on `x1`.
    pub refine_x1: bool,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        ForwardConfig { levels: 3, refine_x1: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditConfig {
    /// Carleman inequality variant, 1 or 2.
    pub variant: u8,
    /// `λ` for the lemma and stability audits.
    pub lambda: f64,
    /// `(s, λ)` for the conjugation residual.
    pub conjugation_s: f64,
    pub conjugation_lambda: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig { variant: 2, lambda: 1.0, conjugation_s: 8.0, conjugation_lambda: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InverseConfig {
    /// Multiplies both planted gaps.
    pub gap_scale: f64,
    /// Relative observation noise level.
    pub noise: f64,
    /// 1-2-1 time smoother on `u` before the chains.
    pub smooth: bool,
}

impl Default for InverseConfig {
    fn default() -> Self {
        InverseConfig { gap_scale: 1.0, noise: 0.0, smooth: false }
    }
}

/// Configuration objects resolved against the grid.
#[derive(Debug, Clone)]
pub struct Setup<R: Real> {
    pub grid: StripGrid<R>,
    pub coeffs: CoefficientField<R>,
    pub alpha: Profile<R>,
    pub gamma: Profile<R>,
    pub beta_tilde: Profile<R>,
    pub reference: Arc<dyn ExactSolution<R>>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| LabError::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a file; relative profile tables resolve against its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            LabError::Config(m) => LabError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let Some(dir) = path.parent() {
            cfg.rebase(dir);
        }
        Ok(cfg)
    }

    /// Applies `CARLEMAN_LAB_SEED` when set.
    pub fn apply_env(&mut self) -> Result<()> {
        match std::env::var(SEED_ENV) {
            Ok(v) => {
                self.seed = v
                    .trim()
                    .parse()
                    .map_err(|_| LabError::Config(format!("{SEED_ENV}=`{v}` is not an unsigned integer")))?;
                Ok(())
            }
            Err(std::env::VarError::NotPresent) => Ok(()),
            Err(e) => Err(LabError::Config(format!("{SEED_ENV}: {e}"))),
        }
    }

    fn rebase(&mut self, dir: &Path) {
        let c = &mut self.coefficients;
        for spec in [&mut self.weights.beta_tilde, &mut c.a, &mut c.b, &mut c.alpha, &mut c.gamma] {
            rebase_spec(spec, dir);
        }
    }

    /// Checks ranges and cross references without building any field.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(LabError::Config(format!("{field}: {msg}")));
        if self.weights.lambdas.is_empty() || self.weights.lambdas.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return bad("weights.lambdas", format!("need positive values, got {:?}", self.weights.lambdas));
        }
        if self.weights.ss.is_empty() || self.weights.ss.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return bad("weights.ss", format!("need positive values, got {:?}", self.weights.ss));
        }
        if !self.weights.m.is_finite() {
            return bad("weights.m", format!("not finite: {}", self.weights.m));
        }
        Variant::from_index(self.audit.variant).map_err(|e| LabError::Config(format!("audit.variant: {e}")))?;
        for (field, v) in [
            ("audit.lambda", self.audit.lambda),
            ("audit.conjugation_s", self.audit.conjugation_s),
            ("audit.conjugation_lambda", self.audit.conjugation_lambda),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(field, format!("must be positive, got {v}"));
            }
        }
        if self.forward.levels < 2 {
            return bad("forward.levels", format!("need at least 2 grids, got {}", self.forward.levels));
        }
        if !self.inverse.gap_scale.is_finite() {
            return bad("inverse.gap_scale", format!("not finite: {}", self.inverse.gap_scale));
        }
        if !(self.inverse.noise.is_finite() && self.inverse.noise >= 0.0) {
            return bad("inverse.noise", format!("must be nonnegative, got {}", self.inverse.noise));
        }
        if self.fixture.audit.is_empty() {
            return bad("fixture.audit", "need at least one fixture".into());
        }
        let g = self.grid::<f64>()?;
        fixture_by_name(&self.fixture.reference, &g).map_err(|e| LabError::Config(format!("fixture.reference: {e}")))?;
        for name in &self.fixture.audit {
            fixture_by_name(name, &g).map_err(|e| LabError::Config(format!("fixture.audit: {e}")))?;
        }
        Ok(())
    }

    pub fn grid<R: Real>(&self) -> Result<StripGrid<R>> {
        let c = &self.grid;
        StripGrid::new(R::lit(c.half_length), R::lit(c.d), R::lit(c.horizon), c.n1, c.n2, c.nt)
    }

    pub fn profile_context<R: Real>(&self) -> ProfileContext<R> {
        ProfileContext { width: R::lit(self.grid.d), half_length: R::lit(self.grid.half_length) }
    }

    /// Resolves every profile and fixture on `grid`.
    pub fn setup_on<R: Real>(&self, grid: StripGrid<R>) -> Result<Setup<R>> {
        let ctx = ProfileContext { width: grid.width(), half_length: grid.half_length() };
        let field = |name: &str, spec: &ProfileSpec| {
            spec.resolve(&ctx).map_err(|e| match e {
                LabError::Config(m) => LabError::Config(format!("{name}: {m}")),
                other => other,
            })
        };
        let c = &self.coefficients;
        let scale = R::lit(self.inverse.gap_scale);
        Ok(Setup {
            coeffs: CoefficientField::new(field("coefficients.a", &c.a)?, field("coefficients.b", &c.b)?, &grid)?,
            alpha: field("coefficients.alpha", &c.alpha)?.scaled(scale),
            gamma: field("coefficients.gamma", &c.gamma)?.scaled(scale),
            beta_tilde: field("weights.beta_tilde", &self.weights.beta_tilde)?,
            reference: fixture_by_name(&self.fixture.reference, &grid)?,
            grid,
        })
    }

    pub fn setup<R: Real>(&self) -> Result<Setup<R>> {
        self.setup_on(self.grid()?)
    }

    /// Canonical TOML of the resolved configuration, defaults included.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// SHA-256 of [`RunConfig::canonical`].
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

fn rebase_spec(spec: &mut ProfileSpec, dir: &Path) {
    match spec {
        ProfileSpec::File { file } if file.is_relative() => *file = PathBuf::from(dir).join(&*file),
        ProfileSpec::Sum { sum } => sum.iter_mut().for_each(|s| rebase_spec(s, dir)),
        _ => {}
    }
}
