//! The command-line surface: one function per subcommand, each producing a
//! [`Report`].

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use crate::auditor::{carleman_sweep, conjugation_residual, lemma_audit, ratio_spread, CarlemanSides, Variant};
use crate::config::{RunConfig, Setup};
use crate::error::{LabError, Result};
use crate::fixtures::{fixture_by_name, DataSource};
use crate::forward::{check_qtilde_assumptions, convergence_study, manufactured_residual};
use crate::grid::{StripGrid, TimeWindow};
use crate::inverse::{
    add_observation_noise, build_u_chain, build_v_chain, observation_trace, reconstruct_alpha, reconstruct_gamma,
    run_twin, sample_profile, stability_sides, StabilitySides, TwinExperiment, TwinRun,
};
use crate::report::{Cell, Check, Report, Table};
use crate::weights::{build_weights, check_assumptions, reduced_1d_conditions, WeightSpec, MARGIN_EPS};

/// Bounds the audit commands compare against.
pub mod bounds {
    pub const FORWARD_ORDER: f64 = 1.9;
    pub const CARLEMAN_SPREAD: f64 = 5.0;
    pub const KAPPA_SPREAD: f64 = 3.0;
    /// Allowed relative deviation of each lemma decay factor from 2.
    pub const LEMMA_DECAY: f64 = 0.25;
    pub const RECONSTRUCTION: f64 = 0.15;
    /// Identical twins: reconstructions against the solver noise floor.
    pub const FLOOR_MULTIPLE: f64 = 10.0;
    pub const STABILITY_SPREAD: f64 = 5.0;
    /// Relative deviation of the lhs growth from 4 when the gaps double.
    pub const GAP_SCALING: f64 = 0.2;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    CheckWeights,
    Forward,
    CarlemanAudit,
    LemmaAudit,
    Invert,
    StabilityAudit,
    Sweep,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::CheckWeights,
        Command::Forward,
        Command::CarlemanAudit,
        Command::LemmaAudit,
        Command::Invert,
        Command::StabilityAudit,
        Command::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::CheckWeights => "check-weights",
            Command::Forward => "forward",
            Command::CarlemanAudit => "carleman-audit",
            Command::LemmaAudit => "lemma-audit",
            Command::Invert => "invert",
            Command::StabilityAudit => "stability-audit",
            Command::Sweep => "sweep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub json: PathBuf,
}

/// Runs `cmd` and writes its files to `out`.
///
/// `check-weights` writes its report before failing with an assumption
/// error when any check fails; the other commands record their checks and
/// succeed unless the computation itself fails.
pub fn run(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let t0 = Instant::now();
    let report = match cmd {
        Command::CheckWeights => check_weights(cfg)?,
        Command::Forward => forward(cfg)?,
        Command::CarlemanAudit => carleman_audit(cfg)?,
        Command::LemmaAudit => lemma(cfg)?,
        Command::Invert => invert(cfg)?,
        Command::StabilityAudit => stability(cfg)?,
        Command::Sweep => sweep(cfg)?,
    };
    let json = report.write(out, cfg, t0.elapsed().as_secs_f64())?;
    if cmd == Command::CheckWeights && !report.pass() {
        let failed: Vec<String> =
            report.checks().iter().filter(|c| !c.pass).map(|c| format!("{} (got {:e})", c.name, c.value)).collect();
        return Err(LabError::Assumption(failed.join("; ")));
    }
    Ok(Outcome { report, json })
}

fn spec(cfg: &RunConfig, s: &Setup<f64>, lambda: f64, sv: f64) -> Result<WeightSpec<f64>> {
    let spec = WeightSpec { beta_tilde: s.beta_tilde.clone(), m: cfg.weights.m, lambda, s: sv };
    spec.validate()?;
    Ok(spec)
}

pub fn check_weights(cfg: &RunConfig) -> Result<Report> {
    let s = cfg.setup::<f64>()?;
    spec(cfg, &s, cfg.weights.lambdas[0], cfg.weights.ss[0])?;
    let a = check_assumptions(&s.coeffs, &s.beta_tilde, &s.grid)?;
    let mut r = Report::new(Command::CheckWeights.name());
    let mut t = Table::new(&["quantity", "value"]);
    let rows: [(&str, f64); 7] = [
        ("a_min", a.a_min),
        ("b_max", a.b_max),
        ("beta_tilde_min", a.beta_tilde_min),
        ("c0", a.c0),
        ("gamma_minus_sign", a.gamma_minus_sign),
        ("pseudo_convexity_margin", a.cpc),
        ("reduced_a_min", a.reduced_1d_a.unwrap_or(f64::NAN)),
    ];
    for (k, v) in rows {
        t.push(vec![k.into(), v.into()]);
    }
    t.push(vec!["reduced_second_min".into(), a.reduced_1d_second.unwrap_or(f64::NAN).into()]);
    r.table("assumptions", t);
    if let Ok(red) = reduced_1d_conditions(&s.coeffs, &s.beta_tilde, &s.grid) {
        let mut t = Table::new(&["x2", "reduced_a", "reduced_second"]);
        for j in 0..=s.grid.n2() {
            t.push(vec![s.grid.x2(j).into(), red.a_field[j].into(), red.second[j].into()]);
        }
        r.table("reduced", t);
    }
    let eps = MARGIN_EPS;
    r.check(Check { name: "min |grad beta_tilde| > 0".into(), value: a.c0, bound: eps, pass: a.c0 > eps });
    r.check(Check::at_most("max d_nu beta_tilde on gamma_minus", a.gamma_minus_sign, 0.0));
    r.check(Check { name: "pseudo-convexity margin > 0".into(), value: a.cpc, bound: eps, pass: a.cpc > eps });
    if !a.pass {
        r.summary("failures", &a.failures);
    }
    r.summary("assumptions", &a);
    Ok(r)
}

fn refinements(cfg: &RunConfig, base: StripGrid<f64>) -> Result<Vec<StripGrid<f64>>> {
    let mut grids = vec![base];
    for _ in 1..cfg.forward.levels {
        let g = *grids.last().unwrap();
        let n1 = if cfg.forward.refine_x1 { 2 * g.n1() } else { g.n1() };
        grids.push(StripGrid::new(g.half_length(), g.width(), g.horizon(), n1, 2 * g.n2(), 2 * g.nt())?);
    }
    Ok(grids)
}

pub fn forward(cfg: &RunConfig) -> Result<Report> {
    let s = cfg.setup::<f64>()?;
    let data = DataSource::Exact(s.reference.clone());
    let mut r = Report::new(Command::Forward.name());
    r.summary("fixture", s.reference.name());
    r.summary("manufactured_residual", manufactured_residual(&data, &s.coeffs, TimeWindow::Forward)?);
    r.summary("divisors", check_qtilde_assumptions(&data, &s.grid)?);
    let grids = refinements(cfg, s.grid)?;
    let rows = convergence_study(s.reference.clone(), |g| Ok(cfg.setup_on(*g)?.coeffs), &grids)?;
    let mut t = Table::new(&["n1", "n2", "nt", "h2", "dt", "max_error", "max_step_residual", "order"]);
    for row in &rows {
        t.push(vec![
            row.n1.into(),
            row.n2.into(),
            row.nt.into(),
            row.h2.into(),
            row.dt.into(),
            row.max_error.into(),
            row.max_step_residual.into(),
            row.order.unwrap_or(f64::NAN).into(),
        ]);
    }
    r.table("convergence", t);
    let min_order = rows.iter().filter_map(|x| x.order).fold(f64::INFINITY, f64::min);
    r.check(Check::at_least("min convergence order", min_order, bounds::FORWARD_ORDER));
    r.summary("rows", &rows);
    Ok(r)
}

const SIDES_HEADER: [&str; 17] = [
    "fixture", "variant", "s", "lambda", "lhs_q", "lhs_grad", "lhs_m1", "lhs_m2", "lhs_evol", "rhs_boundary",
    "rhs_source", "lhs", "rhs", "ratio", "log_scale", "nonnegative", "holds",
];

fn push_sides(t: &mut Table, fixture: &str, x: &CarlemanSides, ratio_max: f64) {
    let terms = [x.lhs_q, x.lhs_grad, x.lhs_m1, x.lhs_m2, x.lhs_evol, x.rhs_boundary, x.rhs_source];
    let nonneg = terms.iter().all(|&v| v >= 0.0);
    let mut cells: Vec<Cell> = vec![fixture.into(), x.variant.into(), x.s.into(), x.lambda.into()];
    cells.extend(terms.iter().map(|&v| Cell::F(v)));
    cells.extend([x.lhs.into(), x.rhs.into(), x.ratio.into(), x.log_scale.into(), nonneg.into()]);
    cells.push((x.lhs <= ratio_max * x.rhs * (1.0 + 1e-12)).into());
    t.push(cells);
}

fn audit_sweep(cfg: &RunConfig, s: &Setup<f64>, name: &str, variant: Variant) -> Result<Vec<CarlemanSides>> {
    let q = fixture_by_name(name, &s.grid)?.sample(s.grid, TimeWindow::Full);
    spec(cfg, s, cfg.weights.lambdas[0], cfg.weights.ss[0])?;
    carleman_sweep(&q, &s.coeffs, &s.beta_tilde, cfg.weights.m, &cfg.weights.lambdas, &cfg.weights.ss, variant)
}

pub fn carleman_audit(cfg: &RunConfig) -> Result<Report> {
    let s = cfg.setup::<f64>()?;
    let variant = Variant::from_index(cfg.audit.variant)?;
    let mut r = Report::new(Command::CarlemanAudit.name());
    let mut t = Table::new(&SIDES_HEADER);
    let mut summary = serde_json::Map::new();
    for name in &cfg.fixture.audit {
        let q = fixture_by_name(name, &s.grid)?.sample(s.grid, TimeWindow::Full);
        let w = build_weights(&spec(cfg, &s, cfg.audit.conjugation_lambda, cfg.audit.conjugation_s)?, &s.grid)?;
        // fields that do not vanish at t = ±T have no conjugated form
        let conj = match conjugation_residual(&q, &s.coeffs, &w) {
            Ok(v) => json!(v),
            Err(LabError::WeightOverflow(m)) => json!({ "not_applicable": m }),
            Err(e) => return Err(e),
        };
        let rows = audit_sweep(cfg, &s, name, variant)?;
        let ratio_max = rows.iter().map(|x| x.ratio).fold(0.0, f64::max);
        let spread = ratio_spread(&rows);
        for x in &rows {
            push_sides(&mut t, name, x, ratio_max);
        }
        let nonneg = rows.iter().all(|x| {
            [x.lhs_q, x.lhs_grad, x.lhs_m1, x.lhs_m2, x.lhs_evol, x.rhs_boundary, x.rhs_source].iter().all(|&v| v >= 0.0)
        });
        r.check(Check::at_most(&format!("{name}: ratio spread"), spread, bounds::CARLEMAN_SPREAD));
        r.check(Check { name: format!("{name}: every term nonnegative"), value: 0.0, bound: 0.0, pass: nonneg });
        summary.insert(
            name.clone(),
            json!({ "ratio_max": ratio_max, "ratio_spread": spread, "conjugation_residual": conj }),
        );
    }
    r.table("carleman", t);
    r.summary("variant", variant.index());
    r.summary("fixtures", summary);
    Ok(r)
}

pub fn lemma(cfg: &RunConfig) -> Result<Report> {
    let s = cfg.setup::<f64>()?;
    let w = build_weights(&spec(cfg, &s, cfg.audit.lambda, cfg.weights.ss[0])?, &s.grid)?;
    let mut r = Report::new(Command::LemmaAudit.name());
    let mut t = Table::new(&["fixture", "s", "lambda", "lhs", "rhs", "kappa_hat", "log_scale"]);
    let mut summary = serde_json::Map::new();
    for name in &cfg.fixture.audit {
        let q = fixture_by_name(name, &s.grid)?.sample(s.grid, TimeWindow::Full);
        let rep = lemma_audit(&q, &w, &cfg.weights.ss)?;
        for x in &rep.rows {
            t.push(vec![
                name.as_str().into(),
                x.s.into(),
                x.lambda.into(),
                x.lhs.into(),
                x.rhs.into(),
                x.kappa_hat.into(),
                x.log_scale.into(),
            ]);
        }
        r.check(Check::at_most(&format!("{name}: kappa_hat spread"), rep.kappa_spread, bounds::KAPPA_SPREAD));
        // the decay factors are per s-doubling only when the s list doubles
        let worst = rep.decay_factors.iter().map(|f| (f / 2.0 - 1.0).abs()).fold(0.0, f64::max);
        r.check(Check::at_most(&format!("{name}: decay factor deviation from 2"), worst, bounds::LEMMA_DECAY));
        summary.insert(name.clone(), serde_json::to_value(&rep).unwrap_or_default());
    }
    r.table("lemma", t);
    r.summary("fixtures", summary);
    Ok(r)
}

fn twin(s: &Setup<f64>) -> Result<(TwinExperiment<f64>, TwinRun<f64>)> {
    let exp = TwinExperiment::planted(s.grid, s.coeffs.clone(), &s.alpha, &s.gamma, s.reference.clone())?;
    let run = run_twin(&exp)?;
    Ok((exp, run))
}

pub fn invert(cfg: &RunConfig) -> Result<Report> {
    let s = cfg.setup::<f64>()?;
    let g = s.grid;
    let mut r = Report::new(Command::Invert.name());
    let data = DataSource::Exact(s.reference.clone());
    r.summary("divisors", check_qtilde_assumptions(&data, &g)?);
    r.summary("manufactured_residual", manufactured_residual(&data, &s.coeffs, TimeWindow::Full)?);
    let (exp, run) = twin(&s)?;
    let ra = reconstruct_alpha(&build_u_chain(&run.u, s.reference.clone(), exp.base.clone(), cfg.inverse.smooth)?)?;
    let rg = reconstruct_gamma(&build_v_chain(&run.u, s.reference.clone(), exp.base.clone(), cfg.inverse.smooth)?)?;
    let (ta, tg) = (sample_profile(&s.alpha, &g), sample_profile(&s.gamma, &g));
    let mut t = Table::new(&["x1", "x2", "alpha", "alpha_hat", "alpha_imag", "gamma", "gamma_hat", "gamma_imag"]);
    for i in 0..=g.n1() {
        for j in 0..=g.n2() {
            let p = g.sidx(i, j);
            t.push(vec![
                g.x1(i).into(),
                g.x2(j).into(),
                ta[p].into(),
                ra.values[p].into(),
                ra.imag[p].into(),
                tg[p].into(),
                rg.values[p].into(),
                rg.imag[p].into(),
            ]);
        }
    }
    r.table("reconstruction", t);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let floor = run.noise_floor;
    if norm(&ta) > 0.0 {
        r.check(Check::at_most("alpha relative L2 error", ra.relative_l2_error(&ta), bounds::RECONSTRUCTION));
    } else {
        r.check(Check::at_most("max |alpha_hat| / noise floor", ra.max_abs() / floor, bounds::FLOOR_MULTIPLE));
    }
    if norm(&tg) > 0.0 {
        r.check(Check::at_most("gamma relative L2 error", rg.relative_l2_error(&tg), bounds::RECONSTRUCTION));
    } else {
        r.check(Check::at_most("max |gamma_hat| / noise floor", rg.max_abs() / floor, bounds::FLOOR_MULTIPLE));
    }
    r.summary(
        "reconstruction",
        json!({
            "noise_floor": floor,
            "alpha": { "l2": ra.l2_norm(), "max_abs": ra.max_abs(), "max_imag": ra.max_imag, "truth_l2": norm(&ta) },
            "gamma": { "l2": rg.l2_norm(), "max_abs": rg.max_abs(), "max_imag": rg.max_imag, "truth_l2": norm(&tg) },
            "averaging_levels": ra.levels,
        }),
    );
    Ok(r)
}

fn stability_rows(cfg: &RunConfig, s: &Setup<f64>, run: &TwinRun<f64>) -> Result<Vec<StabilitySides>> {
    let obs = add_observation_noise(&observation_trace(&run.u), cfg.inverse.noise, cfg.seed)?;
    let (ta, tg) = (sample_profile(&s.alpha, &s.grid), sample_profile(&s.gamma, &s.grid));
    let points: Vec<(f64, f64)> =
        cfg.weights.lambdas.iter().flat_map(|&l| cfg.weights.ss.iter().map(move |&sv| (l, sv))).collect();
    let mut rows = points
        .par_iter()
        .map(|&(l, sv)| {
            let w = build_weights(&spec(cfg, s, l, sv)?, &s.grid)?;
            stability_sides(&run.u, &obs, &ta, &tg, &w)
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.s.total_cmp(&b.s)));
    Ok(rows)
}

fn spread_at(rows: &[StabilitySides], lambda: f64) -> f64 {
    let (lo, hi) = rows
        .iter()
        .filter(|x| x.lambda == lambda)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x.ratio), hi.max(x.ratio)));
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

pub fn stability(cfg: &RunConfig) -> Result<Report> {
    let s = cfg.setup::<f64>()?;
    let (_, run) = twin(&s)?;
    let rows = stability_rows(cfg, &s, &run)?;
    let mut doubled = cfg.clone();
    doubled.inverse.gap_scale *= 2.0;
    let s2 = doubled.setup::<f64>()?;
    let (_, run2) = twin(&s2)?;
    let rows2 = stability_rows(&doubled, &s2, &run2)?;

    let mut r = Report::new(Command::StabilityAudit.name());
    let mut t = Table::new(&[
        "gap_scale", "s", "lambda", "lhs", "rhs_boundary", "rhs_initial", "ratio", "min_dnu_beta", "log_scale",
    ]);
    for (c, set) in [(cfg.inverse.gap_scale, &rows), (doubled.inverse.gap_scale, &rows2)] {
        for x in set.iter() {
            t.push(vec![
                c.into(),
                x.s.into(),
                x.lambda.into(),
                x.lhs.into(),
                x.rhs_boundary.into(),
                x.rhs_initial.into(),
                x.ratio.into(),
                x.min_dnu_beta.into(),
                x.log_scale.into(),
            ]);
        }
    }
    r.table("stability", t);
    let lam = cfg.audit.lambda;
    let spreads: Vec<(f64, f64)> = cfg.weights.lambdas.iter().map(|&l| (l, spread_at(&rows, l))).collect();
    let own = if cfg.weights.lambdas.contains(&lam) { spread_at(&rows, lam) } else { f64::NAN };
    r.check(Check::at_most(&format!("ratio spread over s at lambda = {lam}"), own, bounds::STABILITY_SPREAD));
    let growth: Vec<f64> = rows.iter().zip(&rows2).map(|(a, b)| b.lhs / a.lhs).collect();
    let rhs_growth: Vec<f64> = rows
        .iter()
        .zip(&rows2)
        .map(|(a, b)| (b.rhs_boundary + b.rhs_initial) / (a.rhs_boundary + a.rhs_initial))
        .collect();
    let worst = growth.iter().map(|g| (g / 4.0 - 1.0).abs()).fold(0.0, f64::max);
    r.check(Check::at_most("lhs growth under doubled gaps, deviation from 4", worst, bounds::GAP_SCALING));
    r.summary("spread_by_lambda", spreads);
    r.summary("lhs_growth", growth);
    r.summary("rhs_growth", rhs_growth);
    r.summary("noise_floor", run.noise_floor);
    r.summary("observation_noise", json!({ "level": cfg.inverse.noise, "seed": cfg.seed }));
    Ok(r)
}

pub fn sweep(cfg: &RunConfig) -> Result<Report> {
    let s = cfg.setup::<f64>()?;
    let mut r = Report::new(Command::Sweep.name());
    let mut t = Table::new(&SIDES_HEADER);
    let mut summary = serde_json::Map::new();
    for variant in [Variant::First, Variant::Second] {
        for name in &cfg.fixture.audit {
            let rows = audit_sweep(cfg, &s, name, variant)?;
            let ratio_max = rows.iter().map(|x| x.ratio).fold(0.0, f64::max);
            for x in &rows {
                push_sides(&mut t, name, x, ratio_max);
            }
            summary.insert(
                format!("{name}/variant-{}", variant.index()),
                json!({ "ratio_max": ratio_max, "ratio_spread": ratio_spread(&rows) }),
            );
        }
    }
    r.table("sweep", t);
    r.summary("series", summary);
    Ok(r)
}
