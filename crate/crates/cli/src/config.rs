//! Run configuration: a flat key-value file with sections, overridable by flags.
//!
//! ```text
//! # comments start with '#' or ';'
//! [space]
//! space = lp:p=2
//!
//! [operator]
//! operator = identity-noise:eps=0.02
//!
//! [params]
//! delta = 0.9
//! eta = 0.5
//! resolution = 12
//! seed = 5
//! restarts = 8
//! ```

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Config {
    pub space: String,
    pub operator: String,
    pub delta: f64,
    pub eta: f64,
    pub resolution: u32,
    pub seed: u64,
    pub restarts: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            space: "lp:p=2".into(),
            operator: "identity".into(),
            delta: 0.5,
            eta: 0.5,
            resolution: 10,
            seed: 1,
            restarts: 8,
        }
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("space", &["space"]),
    ("operator", &["operator"]),
    ("params", &["delta", "eta", "resolution", "seed", "restarts"]),
];

impl Config {
    pub fn from_file(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Config::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        let mut section: Option<&str> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                section = Some(
                    SECTIONS
                        .iter()
                        .find(|(s, _)| *s == name)
                        .map(|(s, _)| *s)
                        .ok_or_else(|| anyhow!("line {}: unknown section [{name}]", lineno + 1))?,
                );
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section.ok_or_else(|| anyhow!("line {}: `{key}` outside a section", lineno + 1))?;
            let allowed = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            if !allowed.contains(&key) {
                bail!("line {}: `{key}` does not belong in [{sec}]", lineno + 1);
            }
            cfg.set(key, value).with_context(|| format!("line {}", lineno + 1))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |e: &dyn std::fmt::Display| anyhow!("{key} = {value}: {e}");
        match key {
            "space" => self.space = value.to_string(),
            "operator" => self.operator = value.to_string(),
            "delta" => self.delta = value.parse().map_err(|e| bad(&e))?,
            "eta" => self.eta = value.parse().map_err(|e| bad(&e))?,
            "resolution" => self.resolution = value.parse().map_err(|e| bad(&e))?,
            "seed" => self.seed = value.parse().map_err(|e| bad(&e))?,
            "restarts" => self.restarts = value.parse().map_err(|e| bad(&e))?,
            _ => bail!("unknown key `{key}`"),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let cfg = Config::parse(
            "# run\n[space]\nspace = lp:p=3\n\n[operator]\noperator = identity-noise:eps=0.02\n[params]\n; numbers\ndelta = 0.9\neta=0.05\nresolution = 12\nseed = 5\nrestarts = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.space, "lp:p=3");
        assert_eq!(cfg.operator, "identity-noise:eps=0.02");
        assert_eq!((cfg.delta, cfg.eta, cfg.resolution, cfg.seed, cfg.restarts), (0.9, 0.05, 12, 5, 2));
    }

    #[test]
    fn rejects_misplaced_and_unknown_keys() {
        assert!(Config::parse("[space]\ndelta = 1\n").is_err());
        assert!(Config::parse("delta = 1\n").is_err());
        assert!(Config::parse("[nope]\n").is_err());
        assert!(Config::parse("[params]\nseed = -1\n").is_err());
        assert!(Config::parse("[params]\nseed\n").is_err());
    }
}
