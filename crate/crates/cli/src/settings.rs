//! Value resolution: command-line flag, then config file, then default.
//!
//! Config files hold one `key = value` per line, keys spelled like the
//! long flags (`snr-db = -20:5:40`). `#` starts a comment.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use arqkey::fec::{DecisionMode, GenieMode, PacketSpec, Puncture};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
    consumed: RefCell<BTreeSet<String>>,
    origin: Option<PathBuf>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl Settings {
    pub fn parse(text: &str, origin: Option<&Path>) -> Result<Self, CliError> {
        let where_ = |n: usize| match origin {
            Some(p) => format!("{}:{}", p.display(), n + 1),
            None => format!("line {}", n + 1),
        };
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{}: expected key = value", where_(n))))?;
            let key = normalize(k);
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(CliError::Usage(format!(
                    "{}: duplicate key {key}",
                    where_(n)
                )));
            }
        }
        Ok(Self {
            values,
            consumed: RefCell::default(),
            origin: origin.map(Path::to_path_buf),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, Some(path))
    }

    fn lookup(&self, key: &str) -> Option<&str> {
        self.consumed.borrow_mut().insert(key.to_string());
        self.values.get(key).map(String::as_str)
    }

    fn convert<T: FromStr>(&self, key: &str, raw: &str, from_flag: bool) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        raw.parse().map_err(|e| {
            let src = match (&self.origin, from_flag) {
                (_, true) => "--".to_string() + key,
                (Some(p), false) => format!("{key} in {}", p.display()),
                (None, false) => key.to_string(),
            };
            CliError::Usage(format!("invalid value {raw:?} for {src}: {e}"))
        })
    }

    pub fn optional<T: FromStr>(&self, key: &str, flag: Option<&str>) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        let from_config = self.lookup(key);
        match (flag, from_config) {
            (Some(f), _) => self.convert(key, f, true).map(Some),
            (None, Some(c)) => self.convert(key, c, false).map(Some),
            (None, None) => Ok(None),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str, flag: Option<&str>, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        Ok(self.optional(key, flag)?.unwrap_or(default))
    }

    /// Rejects config keys no resolution asked for.
    pub fn finish(&self) -> Result<(), CliError> {
        let consumed = self.consumed.borrow();
        let unknown: Vec<&str> = self
            .values
            .keys()
            .filter(|k| !consumed.contains(*k))
            .map(String::as_str)
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Usage(format!(
                "unknown config key(s) for this command: {}",
                unknown.join(", ")
            )))
        }
    }
}

/// Comma-separated reals; an item `start:step:stop` expands to the
/// inclusive arithmetic sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FloatList(pub Vec<f64>);

impl FromStr for FloatList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| -> Result<f64, String> {
            let v: f64 = t
                .trim()
                .parse()
                .map_err(|_| format!("{t:?} is not a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("{t:?} is not finite"))
            }
        };
        let mut out = Vec::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let parts: Vec<&str> = item.split(':').collect();
            match parts.as_slice() {
                [one] => out.push(num(one)?),
                [a, step, b] => {
                    let (a, step, b) = (num(a)?, num(step)?, num(b)?);
                    if step <= 0.0 || b < a {
                        return Err(format!("range {item:?} needs step > 0 and stop >= start"));
                    }
                    let n = ((b - a) / step + 1e-9).floor() as u64;
                    if n > 100_000 {
                        return Err(format!("range {item:?} has too many points"));
                    }
                    out.extend((0..=n).map(|i| a + i as f64 * step));
                }
                _ => return Err(format!("{item:?} is neither a number nor start:step:stop")),
            }
        }
        if out.is_empty() {
            return Err("empty list".into());
        }
        Ok(FloatList(out))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SchemeList(#[serde(serialize_with = "schemes_as_names")] pub Vec<PacketSpec>);

fn schemes_as_names<S: serde::Serializer>(v: &[PacketSpec], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(ToString::to_string))
}

impl FromStr for SchemeList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<PacketSpec>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        if v.is_empty() {
            return Err("empty list".into());
        }
        Ok(SchemeList(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Summary,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "summary" => Ok(Format::Summary),
            _ => Err("expected csv or summary".into()),
        }
    }
}

/// Accepts `true/false`, `yes/no`, `1/0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flag(pub bool);

impl FromStr for Flag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "true" | "yes" | "1" => Ok(Flag(true)),
            "false" | "no" | "0" => Ok(Flag(false)),
            _ => Err("expected true or false".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenieArg(pub GenieMode);

impl FromStr for GenieArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "post" => Ok(GenieArg(GenieMode::PostDecoding)),
            "pre" => Ok(GenieArg(GenieMode::PreDecoding)),
            _ => Err("expected post or pre".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionArg(pub DecisionMode);

impl FromStr for DecisionArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "soft" => Ok(DecisionArg(DecisionMode::Soft)),
            "hard" => Ok(DecisionArg(DecisionMode::Hard)),
            _ => Err("expected soft or hard".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PunctureArg(pub Puncture);

impl FromStr for PunctureArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1/2" => Ok(PunctureArg(Puncture::Rate1_2)),
            "2/3" => Ok(PunctureArg(Puncture::Rate2_3)),
            "3/4" => Ok(PunctureArg(Puncture::Rate3_4)),
            _ => Err("expected 1/2, 2/3 or 3/4".into()),
        }
    }
}
