//! Scenario CSV files and the flat TOML configuration.

use std::io::{Read, Write};
use std::path::Path;

use crate::aggregates::{OutputDef, WelfareShare};
use crate::calibration::{default_targets, CalibrationSpec, FreeParams, Target, TargetSpec, PARAM_NAMES};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::series::ScenarioRow;

pub const SCENARIO_COLUMNS: [&str; 5] = ["period", "i", "i_r", "chi", "uc_over_y"];

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

pub fn read_scenario<R: Read>(reader: R) -> Result<Vec<ScenarioRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?
        .clone();
    let mut index = [0usize; 5];
    for (k, name) in SCENARIO_COLUMNS.iter().enumerate() {
        index[k] = headers.iter().position(|h| h == *name).ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("missing column `{name}` (expected header {})", SCENARIO_COLUMNS.join(",")),
        })?;
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let num = |k: usize| -> Result<f64> {
            let cell = rec.get(index[k]).unwrap_or("");
            cell.parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("column `{}`: `{cell}` is not a number", SCENARIO_COLUMNS[k]),
            })
        };
        let row = ScenarioRow {
            period: rec.get(index[0]).unwrap_or("").to_string(),
            i: num(1)?,
            i_r: num(2)?,
            chi: num(3)?,
            uc_over_y_obs: num(4)?,
        };
        row.validate().map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn load_scenario(path: &Path) -> Result<Vec<ScenarioRow>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_scenario(file).map_err(|e| match e {
        Error::Parse { line, msg } => Error::Parse {
            line,
            msg: format!("{}: {msg}", path.display()),
        },
        other => other,
    })
}

pub fn write_scenario<W: Write>(mut out: W, rows: &[ScenarioRow]) -> Result<()> {
    writeln!(out, "{}", SCENARIO_COLUMNS.join(","))?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.period,
            fmt_num(r.i),
            fmt_num(r.i_r),
            fmt_num(r.chi),
            fmt_num(r.uc_over_y_obs)
        )?;
    }
    Ok(())
}

/// Parameters and settings read from a flat TOML file. Every key is
/// optional; missing parameters default to the calibrated values.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: FreeParams,
    pub a: f64,
    pub sigma3: f64,
    pub output: OutputDef,
    pub share: WelfareShare,
    pub starts: usize,
    pub seed: u64,
    pub max_evals: usize,
    pub spread: f64,
    /// Start the search around `params` rather than across the whole box.
    pub start_from_params: bool,
    pub targets: Vec<TargetSpec>,
    pub bounds: [(f64, f64); 7],
}

impl Default for Config {
    fn default() -> Self {
        let spec = CalibrationSpec::new(Vec::new());
        Config {
            params: FreeParams::calibrated(),
            a: spec.a,
            sigma3: spec.sigma3,
            output: spec.output,
            share: spec.share,
            starts: spec.starts,
            seed: spec.seed,
            max_evals: spec.max_evals,
            spread: spec.spread,
            start_from_params: false,
            targets: default_targets(),
            bounds: spec.bounds,
        }
    }
}

fn key_err(key: &str, want: &str) -> Error {
    Error::Config(format!("key `{key}` must be {want}"))
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(key_err(key, "a number")),
    }
}

fn as_count(key: &str, v: &toml::Value) -> Result<u64> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(key_err(key, "a non-negative integer")),
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut cfg = Config::default();
        let mut params = cfg.params.to_array();
        for (key, v) in &table {
            if let Some(k) = PARAM_NAMES.iter().position(|n| n == key) {
                params[k] = as_f64(key, v)?;
                continue;
            }
            if let Some(name) = key.strip_prefix("target_") {
                let t = Target::from_name(name).ok_or_else(|| Error::Config(format!("unknown target in `{key}`")))?;
                let value = as_f64(key, v)?;
                cfg.target_mut(t).value = value;
                continue;
            }
            if let Some(name) = key.strip_prefix("weight_") {
                let t = Target::from_name(name).ok_or_else(|| Error::Config(format!("unknown target in `{key}`")))?;
                let w = as_f64(key, v)?;
                cfg.target_mut(t).weight = w;
                continue;
            }
            if let Some(name) = key.strip_prefix("bounds_") {
                let k = PARAM_NAMES
                    .iter()
                    .position(|n| *n == name)
                    .ok_or_else(|| Error::Config(format!("unknown parameter in `{key}`")))?;
                let arr = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| key_err(key, "a two-element array"))?;
                cfg.bounds[k] = (as_f64(key, &arr[0])?, as_f64(key, &arr[1])?);
                continue;
            }
            match key.as_str() {
                "a" => cfg.a = as_f64(key, v)?,
                "sigma3" => cfg.sigma3 = as_f64(key, v)?,
                "spread" => cfg.spread = as_f64(key, v)?,
                "starts" => cfg.starts = as_count(key, v)? as usize,
                "seed" => cfg.seed = as_count(key, v)?,
                "max_evals" => cfg.max_evals = as_count(key, v)? as usize,
                "start_from_params" => {
                    cfg.start_from_params = v.as_bool().ok_or_else(|| key_err(key, "true or false"))?
                }
                "output" => {
                    cfg.output = match v.as_str() {
                        Some("literal") => OutputDef::Literal,
                        Some("unit") => OutputDef::Unit,
                        _ => return Err(key_err(key, "\"literal\" or \"unit\"")),
                    }
                }
                "welfare_share" => {
                    cfg.share = match v.as_str() {
                        Some("one_minus_theta") => WelfareShare::OneMinusTheta,
                        Some("theta") => WelfareShare::Theta,
                        _ => return Err(key_err(key, "\"one_minus_theta\" or \"theta\"")),
                    }
                }
                _ => return Err(Error::Config(format!("unknown key `{key}`"))),
            }
        }
        cfg.params = FreeParams::from_array(params);
        cfg.model()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Config::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn target_mut(&mut self, t: Target) -> &mut TargetSpec {
        let pos = self.targets.iter().position(|s| s.target == t).expect("all targets present");
        &mut self.targets[pos]
    }

    pub fn model(&self) -> Result<Model> {
        self.params.model(self.sigma3, self.a, self.output, self.share)
    }

    pub fn calibration_spec(&self, scenario: Vec<ScenarioRow>) -> CalibrationSpec {
        let mut spec = CalibrationSpec::new(scenario);
        spec.bounds = self.bounds;
        spec.sigma3 = self.sigma3;
        spec.a = self.a;
        spec.targets = self.targets.clone();
        spec.starts = self.starts;
        spec.seed = self.seed;
        spec.max_evals = self.max_evals;
        spec.spread = self.spread;
        spec.output = self.output;
        spec.share = self.share;
        spec.initial = self.start_from_params.then_some(self.params);
        spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_calibrated() {
        let c = Config::parse("").unwrap();
        assert_eq!(c.model().unwrap(), Model::calibrated());
    }

    #[test]
    fn unknown_key_rejected() {
        let err = Config::parse("thetta = 0.4").unwrap_err().to_string();
        assert!(err.contains("thetta"), "{err}");
        assert!(Config::parse("target_markupp = 1.0").is_err());
    }

    #[test]
    fn invalid_parameter_rejected_at_load() {
        assert!(Config::parse("b = 1.5").is_err());
        assert!(Config::parse("sigma1 = 0.5").is_err());
    }

    #[test]
    fn keys_apply() {
        let c = Config::parse(
            "theta = 0.5\nB = 1\nweight_pi_over_d = 2.0\noutput = \"unit\"\nbounds_b = [0.1, 0.9]\nseed = 7\n",
        )
        .unwrap();
        assert_eq!(c.params.theta, 0.5);
        assert_eq!(c.params.big_b, 1.0);
        assert_eq!(c.output, OutputDef::Unit);
        assert_eq!(c.bounds[3], (0.1, 0.9));
        assert_eq!(c.seed, 7);
        let w = c.targets.iter().find(|t| t.target == Target::PiOverD).unwrap();
        assert_eq!(w.weight, 2.0);
    }
}
