//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. The six game parameters are
//! required; everything else has a default. Serializing writes every key in
//! a fixed order with 17 significant digits, so the text (and its hash)
//! identifies a run exactly.

use perimeter_core::engagement::{Branch, GameParams, DEFAULT_ARC_SAMPLES, DEFAULT_BOUNDARY_SAMPLES, DEFAULT_RESOLUTION};
use perimeter_core::game::{BranchPolicy, DEFAULT_DT};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, key: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            key: key.map(str::to_owned),
            message: message.into(),
        }
    }

    fn key(key: &str, message: impl Into<String>) -> Self {
        Self {
            line: None,
            key: Some(key.to_owned()),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "key '{key}': ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: GameParams,
    pub resolution: usize,
    pub arc_samples: usize,
    pub boundary_samples: usize,
    pub dt: f64,
    pub seed: u64,
    pub arrivals: usize,
    pub trials: usize,
    pub capture_branch: BranchPolicy,
    /// Scripted arrival angles; replace random arrivals when present.
    pub angles: Option<Vec<f64>>,
    pub out_dir: PathBuf,
}

const PARAM_KEYS: [&str; 6] = ["r_t", "rho_t", "rho_a", "nu", "omega_d", "omega_a"];
const OPTIONAL_KEYS: [&str; 9] = [
    "resolution",
    "arc_samples",
    "boundary_samples",
    "dt",
    "seed",
    "arrivals",
    "trials",
    "capture_branch",
    "angles",
];
const OUT_KEY: &str = "out_dir";

fn parse_f64(key: &str, raw: &str) -> Result<f64, ConfigError> {
    let v: f64 = raw
        .parse()
        .map_err(|_| ConfigError::key(key, format!("expected a number, got '{raw}'")))?;
    if !v.is_finite() {
        return Err(ConfigError::key(key, format!("must be finite, got '{raw}'")));
    }
    Ok(v)
}

fn parse_count(key: &str, raw: &str) -> Result<usize, ConfigError> {
    raw.parse()
        .map_err(|_| ConfigError::key(key, format!("expected a non-negative integer, got '{raw}'")))
}

pub fn parse_angles(raw: &str) -> Result<Vec<f64>, ConfigError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64("angles", s))
        .collect()
}

fn parse_branch(raw: &str) -> Result<BranchPolicy, ConfigError> {
    match raw {
        "random" => Ok(BranchPolicy::Random),
        "ccw" => Ok(BranchPolicy::Fixed(Branch::Ccw)),
        "cw" => Ok(BranchPolicy::Fixed(Branch::Cw)),
        other => Err(ConfigError::key(
            "capture_branch",
            format!("expected random, ccw or cw, got '{other}'"),
        )),
    }
}

fn branch_name(policy: BranchPolicy) -> &'static str {
    match policy {
        BranchPolicy::Random => "random",
        BranchPolicy::Fixed(Branch::Ccw) => "ccw",
        BranchPolicy::Fixed(Branch::Cw) => "cw",
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (k, raw_line) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::at(line_no, None, format!("expected 'key = value', got '{line}'")));
            };
            let (key, value) = (key.trim(), value.trim());
            let known = PARAM_KEYS.contains(&key) || OPTIONAL_KEYS.contains(&key) || key == OUT_KEY;
            if !known {
                return Err(ConfigError::at(line_no, Some(key), "unknown key"));
            }
            // an empty angle list is a valid script of zero arrivals
            if value.is_empty() && key != "angles" {
                return Err(ConfigError::at(line_no, Some(key), "missing value"));
            }
            if let Some((first, _)) = entries.get(key) {
                return Err(ConfigError::at(line_no, Some(key), format!("duplicate key (first set on line {first})")));
            }
            entries.insert(key.to_owned(), (line_no, value.to_owned()));
        }

        let with_line = |key: &str, e: ConfigError| match entries.get(key) {
            Some((line, _)) => ConfigError { line: Some(*line), ..e },
            None => e,
        };
        let get = |key: &str| entries.get(key).map(|(_, v)| v.as_str());
        let required = |key: &str| -> Result<f64, ConfigError> {
            let raw = get(key).ok_or_else(|| ConfigError::key(key, "required key is missing"))?;
            parse_f64(key, raw).map_err(|e| with_line(key, e))
        };
        let count = |key: &str, default: usize| -> Result<usize, ConfigError> {
            get(key).map_or(Ok(default), |raw| parse_count(key, raw).map_err(|e| with_line(key, e)))
        };

        let params = GameParams {
            r_t: required("r_t")?,
            rho_t: required("rho_t")?,
            rho_a: required("rho_a")?,
            nu: required("nu")?,
            omega_d: required("omega_d")?,
            omega_a: required("omega_a")?,
        };
        let config = RunConfig {
            params,
            resolution: count("resolution", DEFAULT_RESOLUTION)?,
            arc_samples: count("arc_samples", DEFAULT_ARC_SAMPLES)?,
            boundary_samples: count("boundary_samples", DEFAULT_BOUNDARY_SAMPLES)?,
            dt: get("dt").map_or(Ok(DEFAULT_DT), |raw| parse_f64("dt", raw).map_err(|e| with_line("dt", e)))?,
            seed: get("seed").map_or(Ok(0), |raw| {
                raw.parse()
                    .map_err(|_| with_line("seed", ConfigError::key("seed", format!("expected a 64-bit unsigned integer, got '{raw}'"))))
            })?,
            arrivals: count("arrivals", 200)?,
            trials: count("trials", 100)?,
            capture_branch: get("capture_branch")
                .map_or(Ok(BranchPolicy::Random), |raw| parse_branch(raw).map_err(|e| with_line("capture_branch", e)))?,
            angles: get("angles")
                .map(|raw| parse_angles(raw).map_err(|e| with_line("angles", e)))
                .transpose()?,
            out_dir: PathBuf::from(get(OUT_KEY).unwrap_or("out")),
        };
        config.check().map_err(|e| e.key.clone().map_or(e.clone(), |k| with_line(&k, e)))?;
        Ok(config)
    }

    /// Value checks that also apply after command-line overrides.
    pub fn check(&self) -> Result<(), ConfigError> {
        if let Err(e) = self.params.validate() {
            let key = match e {
                perimeter_core::Error::SpeedRatio(_) => "nu",
                _ => PARAM_KEYS
                    .iter()
                    .copied()
                    .find(|k| matches!(&e, perimeter_core::Error::InvalidParameter(m) if m.starts_with(&format!("{k} "))))
                    .unwrap_or("rho_a"),
            };
            return Err(ConfigError::key(key, e.to_string()));
        }
        let positive = [
            ("resolution", self.resolution < perimeter_core::reachability::MIN_RESOLUTION, "must be >= 16"),
            ("arc_samples", self.arc_samples < perimeter_core::engagement::MIN_ARC_SAMPLES, "must be >= 360"),
            ("boundary_samples", self.boundary_samples == 0, "must be > 0"),
            ("trials", self.trials == 0, "must be > 0"),
        ];
        for (key, bad, msg) in positive {
            if bad {
                return Err(ConfigError::key(key, msg));
            }
        }
        if self.dt <= 0.0 {
            return Err(ConfigError::key("dt", "must be > 0"));
        }
        Ok(())
    }

    /// Canonical text form: every key, fixed order, full precision.
    pub fn serialize(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        for (key, v) in [
            ("r_t", p.r_t),
            ("rho_t", p.rho_t),
            ("rho_a", p.rho_a),
            ("nu", p.nu),
            ("omega_d", p.omega_d),
            ("omega_a", p.omega_a),
        ] {
            out.push_str(&format!("{key} = {}\n", num(v)));
        }
        out.push_str(&format!("resolution = {}\n", self.resolution));
        out.push_str(&format!("arc_samples = {}\n", self.arc_samples));
        out.push_str(&format!("boundary_samples = {}\n", self.boundary_samples));
        out.push_str(&format!("dt = {}\n", num(self.dt)));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("arrivals = {}\n", self.arrivals));
        out.push_str(&format!("trials = {}\n", self.trials));
        out.push_str(&format!("capture_branch = {}\n", branch_name(self.capture_branch)));
        if let Some(angles) = &self.angles {
            let list: Vec<String> = angles.iter().map(|a| num(*a)).collect();
            out.push_str(format!("angles = {}", list.join(", ")).trim_end());
            out.push('\n');
        }
        out.push_str(&format!("out_dir = {}\n", self.out_dir.display()));
        out
    }

    /// Canonical text without the output directory: everything that
    /// determines the results and nothing else.
    pub fn run_text(&self) -> String {
        self.serialize()
            .lines()
            .filter(|l| !l.starts_with(OUT_KEY))
            .map(|l| format!("{l}\n"))
            .collect()
    }

    /// SHA-256 of [`RunConfig::run_text`], so the same run written to two
    /// places hashes the same.
    pub fn hash(&self) -> String {
        Sha256::digest(self.run_text().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
