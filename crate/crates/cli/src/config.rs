//! Flat `key = value` experiment files.
//!
//! Keys mirror the experiment configuration field names. Blank lines and lines
//! starting with `#` are ignored. Grid keys accept comma-separated lists, which
//! expand into one configuration per combination.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ckws_core::attack::Norm;
use ckws_core::corpus::{Stemmer, StopwordList};
use ckws_core::experiment::{expand_grid, ExperimentConfig, Grid};

use crate::error::CliError;

pub const KEYS: &[&str] = &[
    "corpus_path",
    "email_mode",
    "stemmer",
    "stopwords",
    "d",
    "allow_large_arity",
    "v_real",
    "mode",
    "similar_fraction",
    "p",
    "query_fraction",
    "k_known",
    "ref_speed",
    "norm",
    "epsilon_floor",
    "repetitions",
    "base_seed",
    "memory_budget",
];

const GRID_KEYS: &[&str] = &["d", "v_real", "k_known", "p", "similar_fraction", "ref_speed"];

/// Raw key/value assignments, later ones winning.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignments(BTreeMap<String, String>);

impl Assignments {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut out = Self::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!("{origin}:{}: expected key = value", no + 1))
            })?;
            out.set(key.trim(), value.trim())
                .map_err(|e| CliError::usage(format!("{origin}:{}: {e}", no + 1)))?;
        }
        Ok(out)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let key = canonical_key(key)?;
        if value.contains(',') && !GRID_KEYS.contains(&key) {
            return Err(format!("{key} does not take a list"));
        }
        self.0.insert(key.to_owned(), value.to_owned());
        Ok(())
    }

    /// Parses `key=value`.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), CliError> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("expected key=value, got {pair:?}")))?;
        self.set(key.trim(), value.trim()).map_err(CliError::usage)
    }

    pub fn merge(&mut self, other: &Assignments) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// The base configuration plus the grid spanned by list-valued keys.
    pub fn resolve(&self) -> Result<(ExperimentConfig, Grid), CliError> {
        let mut c = ExperimentConfig::default();
        let mut grid = Grid::default();
        for (key, raw) in &self.0 {
            let bad = |e: String| CliError::usage(format!("{key} = {raw}: {e}"));
            match key.as_str() {
                "corpus_path" => c.corpus_path = PathBuf::from(raw),
                "email_mode" => c.extraction.email_mode = parse_bool(raw).map_err(bad)?,
                "stemmer" => {
                    c.extraction.stemmer = match raw.as_str() {
                        "porter" => Stemmer::Porter,
                        "none" => Stemmer::None,
                        _ => return Err(bad("expected porter or none".into())),
                    }
                }
                "stopwords" => {
                    c.extraction.stopwords = match raw.as_str() {
                        "english" => StopwordList::English,
                        "none" => StopwordList::None,
                        _ => return Err(bad("expected english or none".into())),
                    }
                }
                "allow_large_arity" => c.allow_large_arity = parse_bool(raw).map_err(bad)?,
                "mode" => c.mode = raw.parse().map_err(|e| bad(format!("{e}")))?,
                "query_fraction" => c.query_fraction = parse(raw).map_err(bad)?,
                "norm" => c.attack.norm = parse_norm(raw).map_err(bad)?,
                "epsilon_floor" => c.attack.epsilon_floor = parse(raw).map_err(bad)?,
                "repetitions" => c.repetitions = parse(raw).map_err(bad)?,
                "base_seed" => c.base_seed = parse(raw).map_err(bad)?,
                "memory_budget" => c.memory_budget = parse_bytes(raw).map_err(bad)?,
                "d" => grid_axis(raw, &mut c.d, &mut grid.d).map_err(bad)?,
                "v_real" => grid_axis(raw, &mut c.v_real, &mut grid.v_real).map_err(bad)?,
                "k_known" => grid_axis(raw, &mut c.k_known, &mut grid.k_known).map_err(bad)?,
                "p" => grid_axis(raw, &mut c.p, &mut grid.p).map_err(bad)?,
                "similar_fraction" => {
                    grid_axis(raw, &mut c.similar_fraction, &mut grid.similar_fraction)
                        .map_err(bad)?
                }
                "ref_speed" => {
                    grid_axis(raw, &mut c.attack.ref_speed, &mut grid.ref_speed).map_err(bad)?
                }
                _ => unreachable!("keys are canonicalized on insertion"),
            }
        }
        Ok((c, grid))
    }

    pub fn expand(&self) -> Result<Vec<ExperimentConfig>, CliError> {
        let (base, grid) = self.resolve()?;
        Ok(expand_grid(&base, &grid))
    }
}

fn canonical_key(key: &str) -> Result<&'static str, String> {
    let key = key.replace('-', "_");
    let alias = match key.as_str() {
        "corpus" | "dir" => "corpus_path",
        "v" => "v_real",
        "k" => "k_known",
        "seed" => "base_seed",
        other => other,
    };
    KEYS.iter()
        .find(|k| **k == alias)
        .copied()
        .ok_or_else(|| format!("unknown key {key:?}"))
}

fn parse<T: FromStr>(raw: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    raw.trim().parse().map_err(|e: T::Err| e.to_string())
}

fn grid_axis<T: FromStr>(raw: &str, base: &mut T, axis: &mut Vec<T>) -> Result<(), String>
where
    T::Err: std::fmt::Display,
{
    let mut values = raw
        .split(',')
        .map(|s| parse::<T>(s))
        .collect::<Result<Vec<T>, String>>()?;
    if values.len() == 1 {
        *base = values.pop().expect("one value");
    } else {
        *axis = values;
    }
    Ok(())
}

fn parse_bool(raw: &str) -> Result<bool, String> {
    match raw {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}

pub fn parse_norm(raw: &str) -> Result<Norm, String> {
    match raw.to_ascii_lowercase().as_str() {
        "l2" => Ok(Norm::L2),
        "l1" => Ok(Norm::L1),
        _ => Err("expected l1 or l2".into()),
    }
}

/// Plain byte counts or a `K`, `M`, `G`, `T` suffix (powers of 1024, optional `iB`/`B`).
pub fn parse_bytes(raw: &str) -> Result<u64, String> {
    let s = raw.trim();
    let digits = s.trim_end_matches(|c: char| c.is_ascii_alphabetic());
    let unit = s[digits.len()..].to_ascii_lowercase();
    let shift = match unit.trim_end_matches("ib").trim_end_matches('b') {
        "" => 0,
        "k" => 10,
        "m" => 20,
        "g" => 30,
        "t" => 40,
        other => return Err(format!("unknown size unit {other:?}")),
    };
    let n: f64 = digits.trim().parse().map_err(|_| format!("bad size {s:?}"))?;
    let bytes = n * (1u64 << shift) as f64;
    if !(bytes >= 1.0 && bytes < u64::MAX as f64) {
        return Err(format!("size {s:?} out of range"));
    }
    Ok(bytes as u64)
}

fn norm_name(n: Norm) -> &'static str {
    match n {
        Norm::L2 => "l2",
        Norm::L1 => "l1",
    }
}

/// The complete effective configuration in the same flat format, seeds listed in a comment.
pub fn render(c: &ExperimentConfig) -> String {
    let stemmer = match c.extraction.stemmer {
        Stemmer::Porter => "porter",
        Stemmer::None => "none",
    };
    let stopwords = match c.extraction.stopwords {
        StopwordList::English => "english",
        StopwordList::None => "none",
    };
    let mut out = String::new();
    let _ = writeln!(out, "# config_hash {}", c.hash());
    let _ = writeln!(
        out,
        "# seeds {}..={}",
        c.seed(0),
        c.seed(c.repetitions.saturating_sub(1))
    );
    let pairs: [(&str, String); 18] = [
        ("corpus_path", c.corpus_path.display().to_string()),
        ("email_mode", c.extraction.email_mode.to_string()),
        ("stemmer", stemmer.into()),
        ("stopwords", stopwords.into()),
        ("d", c.d.to_string()),
        ("allow_large_arity", c.allow_large_arity.to_string()),
        ("v_real", c.v_real.to_string()),
        ("mode", c.mode.to_string()),
        ("similar_fraction", c.similar_fraction.to_string()),
        ("p", c.p.to_string()),
        ("query_fraction", c.query_fraction.to_string()),
        ("k_known", c.k_known.to_string()),
        ("ref_speed", c.attack.ref_speed.to_string()),
        ("norm", norm_name(c.attack.norm).into()),
        ("epsilon_floor", c.attack.epsilon_floor.to_string()),
        ("repetitions", c.repetitions.to_string()),
        ("base_seed", c.base_seed.to_string()),
        ("memory_budget", c.memory_budget.to_string()),
    ];
    for (k, v) in pairs {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}
