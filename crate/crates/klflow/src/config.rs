//! Flat `key = value` experiment configuration.

use anyhow::{anyhow, bail, Context, Result};
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    Linear,
    Lemniscate,
    Logistic,
    Sines,
    TwoLayer,
}

impl Case {
    pub const ALL: [Case; 5] = [Case::Linear, Case::Lemniscate, Case::Logistic, Case::Sines, Case::TwoLayer];

    pub fn name(self) -> &'static str {
        match self {
            Case::Linear => "linear",
            Case::Lemniscate => "lemniscate",
            Case::Logistic => "logistic",
            Case::Sines => "sines",
            Case::TwoLayer => "twolayer",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Case {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Case::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| anyhow!("unknown case `{s}`"))
    }
}

/// Raw parameters as read from a config file, in file order of keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params(BTreeMap<String, String>);

impl Params {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected `key = value`", n + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                bail!("line {}: empty key", n + 1);
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                bail!("line {}: duplicate key `{k}`", n + 1);
            }
        }
        Ok(Params(map))
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.0.insert(key.to_string(), value.to_string());
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| anyhow!("`{key} = {v}`: {e}")),
        }
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str, default: &[T]) -> Result<Vec<T>>
    where
        T: Clone,
        T::Err: fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse().map_err(|e| anyhow!("`{key} = {v}`: {e}")))
                .collect(),
        }
    }

    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        for k in self.keys() {
            if !allowed.contains(&k) {
                bail!("unknown key `{k}`; expected one of: {}", allowed.join(", "));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub case: Case,
    pub params: Params,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub jobs: usize,
}

impl ExperimentConfig {
    pub fn new(case: Case) -> Self {
        ExperimentConfig { case, params: Params::default(), seed: 0, output_dir: PathBuf::from("out"), jobs: 1 }
    }

    /// Reads a config file. `case`, `seed` and `output_dir` may appear in the
    /// file; everything else is a case parameter.
    pub fn from_file(case: Case, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_text(case, &text).with_context(|| format!("in {}", path.display()))
    }

    pub fn from_text(case: Case, text: &str) -> Result<Self> {
        let mut params = Params::parse(text)?;
        let mut cfg = ExperimentConfig::new(case);
        if let Some(c) = params.remove("case") {
            let named: Case = c.parse()?;
            if named != case {
                bail!("config is for `{named}`, not `{case}`");
            }
        }
        if let Some(s) = params.remove("seed") {
            cfg.seed = s.parse().map_err(|e| anyhow!("`seed = {s}`: {e}"))?;
        }
        if let Some(o) = params.remove("output_dir") {
            cfg.output_dir = PathBuf::from(o);
        }
        cfg.params = params;
        Ok(cfg)
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.set(key, value);
        self
    }
}
