//! Flat `key = value` configuration for `simulate`.
//!
//! Blank lines and `#` comments are skipped. Recognized keys: `family`,
//! `ks`, `n`, `r`, `seeds`, `output`, `summary`.

use std::path::PathBuf;
use std::str::FromStr;

use nefkit_core::family::Family;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimulateConfig {
    pub family: Option<Family>,
    pub ks: Option<Vec<usize>>,
    pub n: Option<usize>,
    pub r: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub output: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

impl SimulateConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| format!("line {}: {msg}", lineno + 1);
            let (key, value) = line.split_once('=').ok_or_else(|| at(format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "family" => cfg.family = Some(Family::from_str(value).map_err(|e| at(e.to_string()))?),
                "ks" => cfg.ks = Some(parse_list(value).map_err(at)?),
                "n" => cfg.n = Some(parse_one(value).map_err(at)?),
                "r" => cfg.r = Some(parse_one(value).map_err(at)?),
                "seeds" => cfg.seeds = Some(parse_seeds(value).map_err(at)?),
                "output" => cfg.output = Some(PathBuf::from(value)),
                "summary" => cfg.summary = Some(PathBuf::from(value)),
                other => return Err(at(format!("unknown key {other:?}"))),
            }
        }
        Ok(cfg)
    }

    /// Fields set in `other` win.
    pub fn overlay(self, other: SimulateConfig) -> Self {
        Self {
            family: other.family.or(self.family),
            ks: other.ks.or(self.ks),
            n: other.n.or(self.n),
            r: other.r.or(self.r),
            seeds: other.seeds.or(self.seeds),
            output: other.output.or(self.output),
            summary: other.summary.or(self.summary),
        }
    }
}

fn parse_one<T: FromStr>(s: &str) -> Result<T, String> {
    s.trim().parse().map_err(|_| format!("cannot parse {s:?}"))
}

/// Comma-separated values.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String> {
    let out: Vec<T> = s.split(',').map(parse_one).collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

/// `a..=b`, `a-b` (both inclusive) or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let s = s.trim();
    let range = s.split_once("..=").or_else(|| s.split_once('-'));
    match range {
        Some((a, b)) => {
            let (a, b): (u64, u64) = (parse_one(a)?, parse_one(b)?);
            if a > b {
                return Err(format!("empty seed range {s:?}"));
            }
            Ok((a..=b).collect())
        }
        None => parse_list(s),
    }
}
