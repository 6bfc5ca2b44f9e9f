//! Builtin scenarios plus an optional registry directory of `*.toml` files.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{parse_raw, ConfigError, ScenarioConfig};

macro_rules! builtin {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../scenarios/", $name, ".toml")))),*]
    };
}

/// (name, file contents) for every scenario shipped with the binary.
pub const BUILTIN: &[(&str, &str)] = builtin![
    "calculus-lemma",
    "flat-exp-defect",
    "flat-identity",
    "fmt-square",
    "fmt-square-one",
    "ldl-battery",
    "poincare-ricci",
    "product-ricci",
    "pullback-square",
    "sandwich-p2",
    "smt-p1-four",
    "smt-p1-three",
    "smt-p2-lines",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Builtin,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioEntry {
    pub name: String,
    pub description: String,
    pub source: Source,
}

fn registry_files(dir: &Path) -> Result<Vec<PathBuf>, ConfigError> {
    let io = |e: std::io::Error| ConfigError::Io { path: dir.display().to_string(), message: e.to_string() };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let p = entry.map_err(io)?.path();
        if p.extension().is_some_and(|e| e == "toml") {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

/// Builtins followed by registry scenarios; a registry file shadows a builtin of the same name.
pub fn list_builtin_scenarios(registry: Option<&Path>) -> Result<Vec<ScenarioEntry>, ConfigError> {
    let mut out: Vec<ScenarioEntry> = BUILTIN
        .iter()
        .map(|(name, text)| ScenarioEntry {
            name: (*name).to_string(),
            description: parse_raw(text).map(|r| r.description).unwrap_or_default(),
            source: Source::Builtin,
        })
        .collect();
    if let Some(dir) = registry {
        for p in registry_files(dir)? {
            let text = fs::read_to_string(&p)
                .map_err(|e| ConfigError::Io { path: p.display().to_string(), message: e.to_string() })?;
            let raw = parse_raw(&text)?;
            out.retain(|e| e.name != raw.name);
            out.push(ScenarioEntry { name: raw.name, description: raw.description, source: Source::File(p) });
        }
    }
    Ok(out)
}

/// Loads `spec` as a file path if it exists, otherwise as a scenario name.
pub fn resolve(spec: &str, registry: Option<&Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = Path::new(spec);
    if path.is_file() {
        return crate::config::load_config(path);
    }
    for e in list_builtin_scenarios(registry)? {
        if e.name == spec {
            return match e.source {
                Source::File(p) => crate::config::load_config(&p),
                Source::Builtin => {
                    let text = BUILTIN.iter().find(|(n, _)| *n == spec).expect("listed").1;
                    ScenarioConfig::from_str(text)
                }
            };
        }
    }
    Err(ConfigError::UnknownScenario(spec.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_validates_under_its_own_name() {
        for (name, text) in BUILTIN {
            let cfg = ScenarioConfig::from_str(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(&cfg.name, name);
            assert!(!cfg.description.is_empty(), "{name}");
        }
    }

    #[test]
    fn listing_includes_required_names() {
        let names: Vec<String> = list_builtin_scenarios(None).unwrap().into_iter().map(|e| e.name).collect();
        for n in ["flat-identity", "flat-exp-defect", "poincare-ricci", "smt-p2-lines"] {
            assert!(names.iter().any(|m| m == n), "{n}");
        }
    }
}
