use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use moneymult::calibration::{calibrate, PARAM_NAMES};
use moneymult::econometrics::{chow_f, RegressionResult};
use moneymult::equilibrium::thresholds;
use moneymult::io::{fmt_num, fmt_opt, load_scenario, Config};
use moneymult::series::{
    model_implied_regressions, period_year, run_series, sweep_policy, welfare_surface, Overrides, SeriesRecord,
    Windows,
};
use moneymult::{Error, Exec, Model};

#[derive(Parser)]
#[command(name = "moneymult", version, about = "Monetary equilibria with fractional-reserve banking")]
struct Cli {
    /// Flat TOML parameter file; missing keys take the calibrated defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for grids and scenarios; 1 runs sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct PointArgs {
    #[arg(long, allow_hyphen_values = true)]
    i: f64,
    #[arg(long, allow_hyphen_values = true)]
    ir: f64,
    #[arg(long, allow_hyphen_values = true)]
    chi: f64,
    #[arg(long = "delta-bar", default_value_t = 0.0, allow_hyphen_values = true)]
    delta_bar: f64,
}

#[derive(Args)]
struct ScenarioArgs {
    /// CSV with columns period,i,i_r,chi,uc_over_y.
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one policy point.
    Solve(PointArgs),
    /// Regime thresholds in the nominal rate for given i_r and chi.
    Thresholds {
        #[arg(long, allow_hyphen_values = true)]
        ir: f64,
        #[arg(long, allow_hyphen_values = true)]
        chi: f64,
    },
    /// Reserves and monetary aggregates over a grid of nominal rates.
    Sweep {
        #[arg(long, default_value_t = 0.1)]
        chi: f64,
        /// lo:hi:n
        #[arg(long = "i-grid", default_value = "0:0.16:33")]
        i_grid: String,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        ir: Vec<f64>,
        #[arg(long = "delta-bar", value_delimiter = ',', default_value = "0")]
        delta_bar: Vec<f64>,
    },
    /// Welfare over a grid of nominal rates for (chi, i_r) pairs.
    Welfare {
        #[arg(long = "i-grid", default_value = "0:0.16:33")]
        i_grid: String,
        /// chi:i_r pairs, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0.1:0")]
        pairs: Vec<String>,
        #[arg(long = "delta-bar", default_value_t = 0.0)]
        delta_bar: f64,
    },
    /// Fit the free parameters to the configured targets over a scenario.
    Calibrate(ScenarioArgs),
    /// Model series for an observed scenario.
    Simulate(ScenarioArgs),
    /// Model series with policy inputs replaced.
    Counterfactual {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// key=value with key in i, i_r, chi, delta_bar; value a number or a
        /// comma-separated list with one entry per row.
        #[arg(long = "override", required = true)]
        overrides: Vec<String>,
    },
    /// Model-implied regressions on the simulated scenario.
    Regress {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// first:last years of the reserves regression sample.
        #[arg(long, default_value = "1968:2007")]
        pre: String,
        /// first:last years of the multiplier and excess-reserve samples.
        #[arg(long, default_value = "2009:2017")]
        post: String,
        /// First year of the second segment in the Chow test of the
        /// reserves equation over both windows.
        #[arg(long = "chow-break", default_value_t = 2008)]
        chow_break: i32,
    },
}

fn parse_grid(s: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::Config(format!("grid `{s}` must be lo:hi:n with n >= 2"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if n < 2 || hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return Err(bad());
    }
    Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect())
}

fn parse_years(s: &str) -> Result<(i32, i32), Error> {
    let bad = || Error::Config(format!("year window `{s}` must be first:last"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?))
}

fn parse_pair(s: &str) -> Result<(f64, f64), Error> {
    let bad = || Error::Config(format!("pair `{s}` must be chi:i_r"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?))
}

fn csv_line(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

const SERIES_COLUMNS: [&str; 18] = [
    "period",
    "i",
    "i_r",
    "chi",
    "delta_bar",
    "regime",
    "m",
    "zeta",
    "excess",
    "excess_ratio",
    "cd_ratio",
    "c_over_y",
    "r_over_y",
    "uc_over_y",
    "uc_over_dm",
    "markup",
    "pi_over_y",
    "welfare",
];

fn series_csv(recs: &[SeriesRecord]) -> String {
    let mut out = String::new();
    csv_line(&mut out, &SERIES_COLUMNS.map(String::from));
    for r in recs {
        let s = &r.stats;
        csv_line(
            &mut out,
            &[
                r.period.clone(),
                fmt_num(r.policy.i),
                fmt_num(r.policy.i_r),
                fmt_num(r.policy.chi),
                fmt_num(r.policy.delta_bar),
                r.regime.to_string(),
                fmt_num(r.m),
                fmt_num(s.zeta),
                fmt_num(s.excess),
                fmt_opt(s.excess_ratio),
                fmt_opt(s.cd_ratio),
                fmt_num(s.c_over_y),
                fmt_num(s.r_over_y),
                fmt_num(s.uc_over_y),
                fmt_num(s.uc_over_dm),
                fmt_num(s.markup),
                fmt_num(s.pi_over_y),
                fmt_num(r.welfare),
            ],
        );
    }
    out
}

fn solve_csv(model: &Model, p: &PointArgs) -> Result<String, Error> {
    let policy = model.policy(p.i, p.ir, p.chi, p.delta_bar);
    let eq = model.solve(&policy)?;
    let s = model.aggregates(&eq);
    let w = model.welfare(&eq);
    let b = &eq.bank;
    let mut out = String::new();
    let head = [
        "regime", "i", "i_r", "chi", "delta_bar", "i_d", "i_l", "lambda_l", "n", "r_tilde", "l_tilde", "m", "r", "l",
        "delta_hat", "q1", "q2", "q3", "zeta", "excess", "excess_ratio", "cd_ratio", "c_over_y", "r_over_y",
        "uc_over_y", "uc_over_dm", "markup", "pi_over_y", "pi_over_d", "welfare", "dispersion",
    ];
    csv_line(&mut out, &head.map(String::from));
    let mut row = vec![eq.regime.to_string()];
    row.extend(
        [
            p.i, p.ir, p.chi, p.delta_bar, b.i_d, b.i_l, b.lambda_l, b.n, b.r_tilde, b.l_tilde, eq.m, eq.r, eq.l,
            eq.delta_hat, eq.meetings[0].q, eq.meetings[1].q, eq.meetings[2].q, s.zeta, s.excess,
        ]
        .map(fmt_num),
    );
    row.push(fmt_opt(s.excess_ratio));
    row.push(fmt_opt(s.cd_ratio));
    row.extend([s.c_over_y, s.r_over_y, s.uc_over_y, s.uc_over_dm, s.markup, s.pi_over_y].map(fmt_num));
    row.push(fmt_opt(s.pi_over_d));
    row.push(fmt_num(w.total));
    row.push(fmt_num(w.dispersion));
    csv_line(&mut out, &row);
    Ok(out)
}

fn regression_block(out: &mut String, name: &str, regressors: &[&str], r: &RegressionResult) {
    let _ = writeln!(out, "[{name}]");
    let _ = writeln!(out, "n = {}", r.n);
    let _ = writeln!(out, "newey_west_lag = {}", r.lag);
    for (k, label) in std::iter::once("intercept").chain(regressors.iter().copied()).enumerate() {
        let _ = writeln!(out, "{label} = {}", fmt_num(r.coefficients[k]));
        let _ = writeln!(out, "{label}_se = {}", fmt_num(r.std_errors[k]));
    }
    let _ = writeln!(out, "r_squared = {}", fmt_num(r.r_squared));
    if let Some(f) = r.chow_f {
        let _ = writeln!(out, "chow_f = {}", fmt_num(f));
    }
    out.push('\n');
}

fn regress_report(
    recs: &[SeriesRecord],
    windows: Windows,
    chow_break: i32,
) -> Result<String, Error> {
    let mut reg = model_implied_regressions(recs, windows)?;
    let inside = |y: i32, w: (i32, i32)| y >= w.0 && y <= w.1;
    let pooled: Vec<&SeriesRecord> = recs
        .iter()
        .filter(|r| period_year(&r.period).is_some_and(|y| inside(y, windows.pre) || inside(y, windows.post)))
        .collect();
    let split = pooled
        .iter()
        .position(|r| period_year(&r.period).is_some_and(|y| y >= chow_break));
    if let Some(b) = split.filter(|&b| b > 0) {
        let y: Vec<f64> = pooled.iter().map(|r| r.stats.r_over_y).collect();
        let uc: Vec<f64> = pooled.iter().map(|r| r.stats.uc_over_y).collect();
        let i: Vec<f64> = pooled.iter().map(|r| r.policy.i * moneymult::series::RATE_SCALE).collect();
        match chow_f(&y, &[&uc, &i], &[b]) {
            Ok(f) => reg.reserves.chow_f = Some(f),
            Err(e) => log::warn!("chow test skipped: {e}"),
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "# rates in percentage points");
    let _ = writeln!(out, "sign_pattern_expected = {}\n", reg.expected_signs());
    regression_block(&mut out, "reserves_over_output", &["uc_over_y", "i"], &reg.reserves);
    regression_block(&mut out, "money_multiplier", &["i", "i_r"], &reg.multiplier);
    regression_block(&mut out, "excess_reserve_ratio", &["i", "i_r"], &reg.excess);
    Ok(out)
}

fn calibrate_report(cfg: &Config, scenario_path: &Path, exec: Exec) -> Result<String, Error> {
    let mut spec = cfg.calibration_spec(load_scenario(scenario_path)?);
    spec.exec = exec;
    let res = calibrate(&spec)?;
    let mut out = String::new();
    let _ = writeln!(out, "objective = {}", fmt_num(res.objective));
    let _ = writeln!(out, "starts = {}", res.starts.len());
    let _ = writeln!(out, "seed = {}\n", spec.seed);
    let _ = writeln!(out, "[params]");
    for (name, v) in PARAM_NAMES.iter().zip(res.params.to_array()) {
        let _ = writeln!(out, "{name} = {}", fmt_num(v));
    }
    let _ = writeln!(out, "\n[targets]");
    for t in &res.residuals {
        let _ = writeln!(
            out,
            "{} = {{ target = {}, weight = {}, model = {}, relative = {} }}",
            t.target.name(),
            fmt_num(t.value),
            fmt_num(t.weight),
            t.model.map(fmt_num).unwrap_or_else(|| "\"absent\"".into()),
            t.relative().map(fmt_num).unwrap_or_else(|| "\"absent\"".into()),
        );
    }
    let _ = writeln!(out, "\n[starts]");
    for s in &res.starts {
        let _ = writeln!(
            out,
            "start_{} = {{ start_objective = {}, objective = {}, evals = {} }}",
            s.index,
            fmt_num(s.start_objective),
            fmt_num(s.objective),
            s.evals
        );
    }
    Ok(out)
}

fn exec_for(threads: Option<usize>) -> Result<Exec, Error> {
    match threads {
        None => Ok(Exec::default()),
        Some(0) => Err(Error::Config("--threads must be at least 1".into())),
        Some(1) => Ok(Exec::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::Config(format!("--threads {n}: {e}")))?;
            Ok(Exec::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(n) => {
            log::warn!("--threads {n} ignored: built without the `parallel` feature");
            Ok(Exec::Sequential)
        }
    }
}

fn run(cli: Cli) -> Result<String, Error> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let model = cfg.model()?;
    let exec = exec_for(cli.threads)?;
    match &cli.cmd {
        Cmd::Solve(p) => solve_csv(&model, p),
        Cmd::Thresholds { ir, chi } => {
            let probe = model.policy(0.0, *ir, *chi, 0.0);
            probe.validate()?;
            let th = thresholds(&model.costs, *ir, *chi)?;
            let mut out = String::new();
            csv_line(
                &mut out,
                &["i_r", "chi", "i_lower", "i_hat", "i_bar", "i_entry", "r_hat", "r_lower", "gamma_prime_r_hat"]
                    .map(String::from),
            );
            csv_line(
                &mut out,
                &[*ir, *chi, th.i_lower, th.i_hat, th.i_bar, th.i_entry, th.r_hat, th.r_lower, th.gamma_prime_r_hat]
                    .map(fmt_num),
            );
            Ok(out)
        }
        Cmd::Sweep {
            chi,
            i_grid,
            ir,
            delta_bar,
        } => {
            let recs = sweep_policy(&model, *chi, &parse_grid(i_grid)?, ir, delta_bar, exec)?;
            let mut out = String::new();
            csv_line(
                &mut out,
                &["i", "i_r", "delta_bar", "regime", "r", "aggregate", "zeta"].map(String::from),
            );
            for r in recs {
                let mut row = vec![fmt_num(r.i), fmt_num(r.i_r), fmt_num(r.delta_bar), r.regime.to_string()];
                row.extend([r.r, r.aggregate, r.zeta].map(fmt_num));
                csv_line(&mut out, &row);
            }
            Ok(out)
        }
        Cmd::Welfare {
            i_grid,
            pairs,
            delta_bar,
        } => {
            let pairs = pairs.iter().map(|s| parse_pair(s)).collect::<Result<Vec<_>, _>>()?;
            let recs = welfare_surface(&model, *delta_bar, &parse_grid(i_grid)?, &pairs, exec)?;
            let mut out = String::new();
            csv_line(
                &mut out,
                &["i", "chi", "i_r", "regime", "total", "jb1", "jb2", "jb3", "js1", "js2", "js3", "dispersion"]
                    .map(String::from),
            );
            for r in recs {
                let mut row = vec![fmt_num(r.i), fmt_num(r.chi), fmt_num(r.i_r), r.regime.to_string()];
                row.push(fmt_num(r.total));
                row.extend(r.jb.map(fmt_num));
                row.extend(r.js.map(fmt_num));
                row.push(fmt_num(r.dispersion));
                csv_line(&mut out, &row);
            }
            Ok(out)
        }
        Cmd::Calibrate(s) => calibrate_report(&cfg, &s.scenario, exec),
        Cmd::Simulate(s) => {
            let rows = load_scenario(&s.scenario)?;
            Ok(series_csv(&run_series(&model, &rows, &Overrides::default(), exec)?))
        }
        Cmd::Counterfactual { scenario, overrides } => {
            let rows = load_scenario(&scenario.scenario)?;
            let mut ov = Overrides::default();
            for o in overrides {
                ov.set(o)?;
            }
            Ok(series_csv(&run_series(&model, &rows, &ov, exec)?))
        }
        Cmd::Regress {
            scenario,
            pre,
            post,
            chow_break,
        } => {
            let rows = load_scenario(&scenario.scenario)?;
            let recs = run_series(&model, &rows, &Overrides::default(), exec)?;
            let windows = Windows {
                pre: parse_years(pre)?,
                post: parse_years(post)?,
            };
            regress_report(&recs, windows, *chow_break)
        }
    }
}

/// 1 for bad input, 2 for a solver inconsistency.
fn exit_code(e: &Error) -> u8 {
    if e.is_internal() {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out_path = cli.out.clone();
    match run(cli) {
        Ok(text) => {
            let written = match &out_path {
                Some(p) => std::fs::write(p, text.as_bytes())
                    .map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
                None => std::io::stdout().write_all(text.as_bytes()).map_err(Error::from),
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 1);
        assert_eq!(exit_code(&Error::Inconsistency("x".into())), 2);
        let row = Error::Row {
            row: 3,
            period: "1999".into(),
            source: Box::new(Error::Inconsistency("x".into())),
        };
        assert_eq!(exit_code(&row), 2);
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:1:3").unwrap(), [0.0, 0.5, 1.0]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("1:0:3").is_err());
        assert!(parse_grid("0:1:1").is_err());
        assert_eq!(parse_pair("0.1:0.02").unwrap(), (0.1, 0.02));
        assert_eq!(parse_years("1968:2007").unwrap(), (1968, 2007));
    }
}
