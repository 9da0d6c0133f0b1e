//! Run configuration: a `key = value` file overlaid with command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use divlab::ExactRational;
use serde::Serialize;

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown format '{other}'")),
        }
    }
}

/// Every knob the subcommands read. Rationals are kept exact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub n: u32,
    pub m: Option<u32>,
    #[serde(serialize_with = "ser_opt_rat")]
    pub alpha_min: Option<ExactRational>,
    #[serde(serialize_with = "ser_opt_rat")]
    pub alpha_max: Option<ExactRational>,
    #[serde(serialize_with = "ser_rat")]
    pub step: ExactRational,
    #[serde(serialize_with = "ser_opt_rat")]
    pub u1: Option<ExactRational>,
    #[serde(serialize_with = "ser_opt_rat")]
    pub u2: Option<ExactRational>,
    #[serde(serialize_with = "ser_opt_rat")]
    pub u3: Option<ExactRational>,
    #[serde(rename = "R")]
    pub r_list: Vec<f64>,
    pub bump_c: f64,
    pub seed: u64,
    pub samples: usize,
    pub n_max: u32,
    pub q_max: u64,
    pub tol_slope: f64,
    pub tol_dim: f64,
    pub tol_degenerate: f64,
    #[serde(serialize_with = "ser_rats")]
    pub sweep_u2: Vec<ExactRational>,
    #[serde(serialize_with = "ser_rats")]
    pub sweep_u3: Vec<ExactRational>,
    pub out: PathBuf,
    pub format: Vec<Format>,
}

fn ser_rat<S: serde::Serializer>(v: &ExactRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn ser_opt_rat<S: serde::Serializer>(v: &Option<ExactRational>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}

fn ser_rats<S: serde::Serializer>(v: &[ExactRational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| r.to_string()))
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 15,
            m: None,
            alpha_min: None,
            alpha_max: None,
            step: divlab::rat(1, 16),
            u1: None,
            u2: None,
            u3: None,
            r_list: (10..=16).map(|k| 2f64.powi(k)).collect(),
            bump_c: 0.1,
            seed: 0x5EED,
            samples: 1_000_000,
            n_max: 30,
            q_max: 999,
            tol_slope: 0.07,
            tol_dim: 0.15,
            tol_degenerate: 0.1,
            sweep_u2: vec![divlab::rat(5, 8), divlab::rat(11, 16), divlab::rat(3, 4)],
            sweep_u3: vec![divlab::rat(1, 4)],
            out: PathBuf::from("out"),
            format: vec![Format::Csv, Format::Json, Format::Svg],
        }
    }
}

pub const KEYS: &[&str] = &[
    "n",
    "m",
    "alpha_min",
    "alpha_max",
    "step",
    "u1",
    "u2",
    "u3",
    "R",
    "bump_c",
    "seed",
    "samples",
    "n_max",
    "q_max",
    "tol_slope",
    "tol_dim",
    "tol_degenerate",
    "sweep_u2",
    "sweep_u3",
    "out",
    "format",
];

fn parse_rat(key: &str, v: &str) -> Result<ExactRational, Failure> {
    v.trim()
        .parse()
        .map_err(|_| Failure::Config(format!("{key}: '{v}' is not a rational")))
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, Failure> {
    v.trim()
        .parse()
        .map_err(|_| Failure::Config(format!("{key}: cannot parse '{v}'")))
}

fn parse_seed(v: &str) -> Result<u64, Failure> {
    let v = v.trim();
    let parsed = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => v.parse().ok(),
    };
    parsed.ok_or_else(|| Failure::Config(format!("seed: cannot parse '{v}'")))
}

/// A single scale: `4096`, `2^12`.
fn parse_scale(v: &str) -> Result<f64, Failure> {
    let v = v.trim();
    let r = match v.split_once('^') {
        Some((b, e)) => {
            let b: f64 = parse_num("R", b)?;
            let e: i32 = parse_num("R", e)?;
            b.powi(e)
        }
        None => parse_num("R", v)?,
    };
    if !(r >= 2.0) {
        return Err(Failure::Config(format!("R: scale {v} below 2")));
    }
    Ok(r)
}

/// `2^10..2^16` (dyadic range) or a comma-separated list of scales.
pub fn parse_r_list(v: &str) -> Result<Vec<f64>, Failure> {
    if let Some((a, b)) = v.split_once("..") {
        let (a, b) = (parse_scale(a)?, parse_scale(b)?);
        let mut out = Vec::new();
        let mut r = a;
        while r <= b * (1.0 + 1e-12) {
            out.push(r);
            r *= 2.0;
        }
        if out.is_empty() {
            return Err(Failure::Config(format!("R: empty range '{v}'")));
        }
        return Ok(out);
    }
    v.split(',').map(parse_scale).collect()
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Failure> {
        let v = value.trim();
        match key {
            "n" => self.n = parse_num(key, v)?,
            "m" => self.m = Some(parse_num(key, v)?),
            "alpha_min" => self.alpha_min = Some(parse_rat(key, v)?),
            "alpha_max" => self.alpha_max = Some(parse_rat(key, v)?),
            "step" => self.step = parse_rat(key, v)?,
            "u1" => self.u1 = Some(parse_rat(key, v)?),
            "u2" => self.u2 = Some(parse_rat(key, v)?),
            "u3" => self.u3 = Some(parse_rat(key, v)?),
            "R" => self.r_list = parse_r_list(v)?,
            "bump_c" => self.bump_c = parse_num(key, v)?,
            "seed" => self.seed = parse_seed(v)?,
            "samples" => self.samples = parse_num(key, v)?,
            "n_max" => self.n_max = parse_num(key, v)?,
            "q_max" => self.q_max = parse_num(key, v)?,
            "tol_slope" => self.tol_slope = parse_num(key, v)?,
            "tol_dim" => self.tol_dim = parse_num(key, v)?,
            "tol_degenerate" => self.tol_degenerate = parse_num(key, v)?,
            "sweep_u2" => {
                self.sweep_u2 = v.split(',').map(|x| parse_rat(key, x)).collect::<Result<_, _>>()?
            }
            "sweep_u3" => {
                self.sweep_u3 = v.split(',').map(|x| parse_rat(key, x)).collect::<Result<_, _>>()?
            }
            "out" => self.out = PathBuf::from(v),
            "format" => {
                let mut f = v
                    .split(',')
                    .map(|x| x.parse::<Format>().map_err(Failure::Config))
                    .collect::<Result<Vec<_>, _>>()?;
                f.sort();
                f.dedup();
                self.format = f;
            }
            other => return Err(Failure::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_text(text: &str) -> Result<BTreeMap<String, String>, Failure> {
        let mut out = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Failure::Config(format!("line {}: expected key = value", i + 1)))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(Failure::Config(format!("line {}: unknown key '{k}'", i + 1)));
            }
            out.insert(k.to_string(), v.trim().to_string());
        }
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = RunConfig::default();
        for (k, v) in Self::parse_text(&text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn wants(&self, f: Format) -> bool {
        self.format.contains(&f)
    }

    /// `[n/2, n]` unless overridden.
    pub fn alpha_range(&self) -> (ExactRational, ExactRational) {
        let n = self.n as i64;
        (
            self.alpha_min.clone().unwrap_or_else(|| divlab::rat(n, 2)),
            self.alpha_max
                .clone()
                .unwrap_or_else(|| ExactRational::from_integer(n)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_list_forms() {
        assert_eq!(parse_r_list("2^10..2^12").unwrap(), vec![1024.0, 2048.0, 4096.0]);
        assert_eq!(parse_r_list("1024, 2^11").unwrap(), vec![1024.0, 2048.0]);
        assert!(parse_r_list("1").is_err());
    }

    #[test]
    fn text_parsing() {
        let kv = RunConfig::parse_text("# header\nn = 4  # trailing\n\nstep=1/8\n").unwrap();
        assert_eq!(kv.get("n").map(String::as_str), Some("4"));
        assert_eq!(kv.get("step").map(String::as_str), Some("1/8"));
        assert!(RunConfig::parse_text("bogus = 1").is_err());
        assert!(RunConfig::parse_text("n 4").is_err());
    }

    #[test]
    fn seeds() {
        assert_eq!(parse_seed("0x5EED").unwrap(), 0x5EED);
        assert_eq!(parse_seed("17").unwrap(), 17);
    }
}
