//! Historical and counterfactual series, policy sweeps, and the
//! model-implied regressions.

use crate::aggregates::AggregateStats;
use crate::econometrics::{ols_nw, RegressionResult};
use crate::equilibrium::{solve_core, verify, Equilibrium, Regime};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::par::{self, Exec};
use crate::policy::PolicyPoint;
use crate::roots;

/// One period of observed policy and credit data.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRow {
    pub period: String,
    pub i: f64,
    pub i_r: f64,
    pub chi: f64,
    pub uc_over_y_obs: f64,
}

impl ScenarioRow {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| Err(Error::InvalidParameter { name, value, reason });
        if !(self.i >= 0.0 && self.i.is_finite()) {
            return bad("i", self.i, "nominal rate must be >= 0");
        }
        if !(self.i_r >= 0.0 && self.i_r.is_finite()) {
            return bad("i_r", self.i_r, "interest on reserves must be >= 0");
        }
        if !(self.chi > 0.0 && self.chi <= 1.0) {
            return bad("chi", self.chi, "reserve requirement must lie in (0, 1]");
        }
        if !(self.uc_over_y_obs >= 0.0 && self.uc_over_y_obs.is_finite()) {
            return bad("uc_over_y", self.uc_over_y_obs, "credit ratio must be >= 0");
        }
        Ok(())
    }

    pub fn year(&self) -> Option<i32> {
        period_year(&self.period)
    }
}

/// Leading four-digit year of a period label such as `1987` or `1987Q3`.
pub fn period_year(label: &str) -> Option<i32> {
    let digits: String = label.chars().take_while(|c| c.is_ascii_digit()).collect();
    if digits.len() >= 4 {
        digits[..4].parse().ok()
    } else {
        None
    }
}

/// Replacement for one policy input across a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum Override {
    Const(f64),
    Series(Vec<f64>),
}

impl Override {
    fn at(&self, row: usize) -> f64 {
        match self {
            Override::Const(v) => *v,
            Override::Series(v) => v[row],
        }
    }

    fn len_ok(&self, n: usize) -> bool {
        match self {
            Override::Const(_) => true,
            Override::Series(v) => v.len() == n,
        }
    }
}

/// Declarative counterfactual: each field, when set, replaces that input in
/// every row. The credit limit is always backed out on the observed policy
/// unless it is overridden itself.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Overrides {
    pub i: Option<Override>,
    pub i_r: Option<Override>,
    pub chi: Option<Override>,
    pub delta_bar: Option<Override>,
}

impl Overrides {
    /// Parses `key=value`, where value is a number or a comma-separated
    /// list with one entry per row. Keys: `i`, `i_r`, `chi`, `delta_bar`.
    pub fn set(&mut self, spec: &str) -> Result<()> {
        let (key, value) = spec
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{spec}` is not key=value")))?;
        let nums: std::result::Result<Vec<f64>, _> =
            value.split(',').map(|v| v.trim().parse::<f64>()).collect();
        let nums = nums.map_err(|_| Error::Config(format!("override `{spec}` has a non-numeric value")))?;
        let ov = if nums.len() == 1 {
            Override::Const(nums[0])
        } else {
            Override::Series(nums)
        };
        let slot = match key.trim() {
            "i" => &mut self.i,
            "i_r" | "ir" => &mut self.i_r,
            "chi" => &mut self.chi,
            "delta_bar" => &mut self.delta_bar,
            other => {
                return Err(Error::Config(format!(
                    "unknown override key `{other}` (expected i, i_r, chi or delta_bar)"
                )))
            }
        };
        *slot = Some(ov);
        Ok(())
    }

    fn check(&self, n: usize) -> Result<()> {
        for (name, o) in [
            ("i", &self.i),
            ("i_r", &self.i_r),
            ("chi", &self.chi),
            ("delta_bar", &self.delta_bar),
        ] {
            if let Some(o) = o {
                if !o.len_ok(n) {
                    return Err(Error::Config(format!(
                        "override series for {name} must have {n} entries"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Credit limit δ̄ at which the model's unsecured-credit ratio equals
/// `target`. The policy's own δ̄ is ignored.
pub fn backout_delta(model: &Model, policy: &PolicyPoint, target: f64) -> Result<f64> {
    if !(target >= 0.0 && target.is_finite()) {
        return Err(Error::Domain {
            what: "uc_over_y",
            value: target,
            domain: "[0, inf)",
        });
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let core = solve_core(&model.prefs, &model.costs, policy)?;
    let ratio = |delta_bar: f64| {
        let p = PolicyPoint { delta_bar, ..*policy };
        model.aggregates(&core.assemble(&p)).uc_over_y
    };
    // Credit above the liquidity need is never drawn, so the ratio is flat
    // beyond δ̂.
    let cap = core.delta_hat;
    let sup = ratio(cap);
    if target > sup {
        return Err(Error::InfeasibleTarget {
            target: "uc_over_y",
            value: target,
            supremum: sup,
        });
    }
    if target == sup {
        return Ok(cap);
    }
    roots::bisect(|d| ratio(d) - target, 0.0, cap, 0.0, "credit-limit back-out")
}

/// One period of model output.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRecord {
    pub period: String,
    pub policy: PolicyPoint,
    pub regime: Regime,
    pub stats: AggregateStats,
    pub m: f64,
    pub welfare: f64,
}

fn record(model: &Model, period: &str, eq: &Equilibrium) -> SeriesRecord {
    SeriesRecord {
        period: period.to_string(),
        policy: eq.policy,
        regime: eq.regime,
        stats: model.aggregates(eq),
        m: eq.m,
        welfare: model.welfare(eq).total,
    }
}

fn solve_row(model: &Model, row: &ScenarioRow, idx: usize, ov: &Overrides) -> Result<Equilibrium> {
    row.validate()?;
    let observed = model.policy(row.i, row.i_r, row.chi, 0.0);
    let delta_bar = match &ov.delta_bar {
        Some(o) => o.at(idx),
        None => backout_delta(model, &observed, row.uc_over_y_obs)?,
    };
    let mut policy = PolicyPoint { delta_bar, ..observed };
    if let Some(o) = &ov.i {
        policy.i = o.at(idx);
    }
    if let Some(o) = &ov.i_r {
        policy.i_r = o.at(idx);
    }
    if let Some(o) = &ov.chi {
        policy.chi = o.at(idx);
    }
    let eq = solve_core(&model.prefs, &model.costs, &policy)?.assemble(&policy);
    verify(&eq, &model.prefs, &model.costs)?;
    Ok(eq)
}

fn row_error(e: Error, idx: usize, row: &ScenarioRow) -> Error {
    let label = format!(
        "{} (i = {}, i_r = {}, chi = {}, uc_over_y = {})",
        row.period, row.i, row.i_r, row.chi, row.uc_over_y_obs
    );
    e.at_row(idx + 1, &label)
}

/// Solves every row (in parallel when `exec` allows) and returns records in
/// input order. The first failing row, by position, is reported.
pub fn run_series(
    model: &Model,
    scenario: &[ScenarioRow],
    overrides: &Overrides,
    exec: Exec,
) -> Result<Vec<SeriesRecord>> {
    overrides.check(scenario.len())?;
    let idx: Vec<usize> = (0..scenario.len()).collect();
    par::map(exec, &idx, |&k| {
        let row = &scenario[k];
        solve_row(model, row, k, overrides)
            .map(|eq| record(model, &row.period, &eq))
            .map_err(|e| row_error(e, k, row))
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub i: f64,
    pub i_r: f64,
    pub delta_bar: f64,
    pub regime: Regime,
    pub r: f64,
    /// Cash plus reserves plus banknotes, `m + r + ℓ`.
    pub aggregate: f64,
    pub zeta: f64,
}

/// Reserve and monetary-aggregate demand over `i` for each `(i_r, δ̄)`.
/// Rows are ordered by `i_r`, then `δ̄`, then `i`.
pub fn sweep_policy(
    model: &Model,
    chi: f64,
    i_grid: &[f64],
    i_r_list: &[f64],
    delta_list: &[f64],
    exec: Exec,
) -> Result<Vec<SweepRecord>> {
    let mut points = Vec::with_capacity(i_grid.len() * i_r_list.len() * delta_list.len());
    for &i_r in i_r_list {
        for &d in delta_list {
            for &i in i_grid {
                points.push(model.policy(i, i_r, chi, d));
            }
        }
    }
    par::map(exec, &points, |p| {
        let eq = model.solve(p)?;
        let s = model.aggregates(&eq);
        Ok(SweepRecord {
            i: p.i,
            i_r: p.i_r,
            delta_bar: p.delta_bar,
            regime: eq.regime,
            r: eq.r,
            aggregate: s.m1,
            zeta: s.zeta,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WelfareRecord {
    pub i: f64,
    pub chi: f64,
    pub i_r: f64,
    pub regime: Regime,
    pub total: f64,
    pub jb: [f64; 3],
    pub js: [f64; 3],
    pub dispersion: f64,
}

/// Welfare over `i` for each `(χ, i_r)` pair; rows ordered by pair, then `i`.
pub fn welfare_surface(
    model: &Model,
    delta_bar: f64,
    i_grid: &[f64],
    pairs: &[(f64, f64)],
    exec: Exec,
) -> Result<Vec<WelfareRecord>> {
    let mut points = Vec::with_capacity(i_grid.len() * pairs.len());
    for &(chi, i_r) in pairs {
        for &i in i_grid {
            points.push(model.policy(i, i_r, chi, delta_bar));
        }
    }
    par::map(exec, &points, |p| {
        let eq = model.solve(p)?;
        let w = model.welfare(&eq);
        Ok(WelfareRecord {
            i: p.i,
            chi: p.chi,
            i_r: p.i_r,
            regime: eq.regime,
            total: w.total,
            jb: w.jb,
            js: w.js,
            dispersion: w.dispersion,
        })
    })
    .into_iter()
    .collect()
}

/// True when total welfare falls strictly along `i` within every `(χ, i_r)`
/// curve of a surface built with an increasing grid.
pub fn welfare_decreasing_in_i(records: &[WelfareRecord]) -> bool {
    records.windows(2).all(|w| {
        let same_curve = w[0].chi == w[1].chi && w[0].i_r == w[1].i_r;
        !same_curve || w[1].i <= w[0].i || w[1].total < w[0].total
    })
}

/// Inclusive year windows for the regressions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Windows {
    pub pre: (i32, i32),
    pub post: (i32, i32),
}

impl Default for Windows {
    fn default() -> Self {
        Windows {
            pre: (1968, 2007),
            post: (2009, 2017),
        }
    }
}

/// Rates enter the regressions in percentage points.
pub const RATE_SCALE: f64 = 100.0;

/// Newey-West lag used for the model-implied regressions.
pub const REGRESSION_LAG: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ImpliedRegressions {
    /// Reserves/output on unsecured credit/output and the nominal rate.
    pub reserves: RegressionResult,
    /// Money multiplier on the nominal rate and interest on reserves.
    pub multiplier: RegressionResult,
    /// Excess reserves/deposits on the nominal rate and interest on reserves.
    pub excess: RegressionResult,
}

impl ImpliedRegressions {
    /// Slope signs in the order (reserves, multiplier, excess).
    pub fn signs(&self) -> [(f64, f64); 3] {
        let s = |r: &RegressionResult| (r.coefficients[1].signum(), r.coefficients[2].signum());
        [s(&self.reserves), s(&self.multiplier), s(&self.excess)]
    }

    /// Whether slopes follow (-,-), (+,-), (-,+).
    pub fn expected_signs(&self) -> bool {
        self.signs() == [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)]
    }
}

fn in_window(rec: &SeriesRecord, w: (i32, i32)) -> Result<bool> {
    let year = period_year(&rec.period)
        .ok_or_else(|| Error::Regression(format!("period `{}` does not start with a year", rec.period)))?;
    Ok(year >= w.0 && year <= w.1)
}

/// Runs the three regressions on model output. The credit ratio regressor
/// is the model's own unsecured-credit/output series.
pub fn model_implied_regressions(series: &[SeriesRecord], windows: Windows) -> Result<ImpliedRegressions> {
    let mut pre = Vec::new();
    let mut post = Vec::new();
    for rec in series {
        if in_window(rec, windows.pre)? {
            pre.push(rec);
        }
        if in_window(rec, windows.post)? {
            post.push(rec);
        }
    }
    let col = |rows: &[&SeriesRecord], f: &dyn Fn(&SeriesRecord) -> f64| -> Vec<f64> {
        rows.iter().map(|r| f(r)).collect()
    };
    let ry = col(&pre, &|r| r.stats.r_over_y);
    let uc = col(&pre, &|r| r.stats.uc_over_y);
    let i_pre = col(&pre, &|r| r.policy.i * RATE_SCALE);
    let reserves = ols_nw(&ry, &[&uc, &i_pre], REGRESSION_LAG)?;

    let zeta = col(&post, &|r| r.stats.zeta);
    let excess = col(&post, &|r| r.stats.excess_ratio.unwrap_or(0.0));
    let i_post = col(&post, &|r| r.policy.i * RATE_SCALE);
    let ir_post = col(&post, &|r| r.policy.i_r * RATE_SCALE);
    let multiplier = ols_nw(&zeta, &[&i_post, &ir_post], REGRESSION_LAG)?;
    let excess = ols_nw(&excess, &[&i_post, &ir_post], REGRESSION_LAG)?;
    Ok(ImpliedRegressions {
        reserves,
        multiplier,
        excess,
    })
}
