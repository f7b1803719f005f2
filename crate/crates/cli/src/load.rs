//! Configuration files and command-line overrides.
//!
//! A configuration file is flat INI with the sections `[system]`, `[bath1]`,
//! `[bath2]`, `[numerics]` and `[run]`; a key `k` in section `s` sets the
//! configuration key `s.k`. `run.preset` names a preset that fills every key
//! the file leaves out. Without a preset the physical sections must be
//! complete; numerical and run keys fall back to their defaults.

use std::collections::BTreeSet;
use std::path::Path;

use ini::Ini;
use spinboson::config::CONFIG_KEYS;
use spinboson::ModelConfig;

use crate::error::{CliError, CliResult};
use crate::record::RunRecord;

const SECTIONS: [&str; 5] = ["system", "bath1", "bath2", "numerics", "run"];
const PRESET_KEY: &str = "run.preset";

/// Where a run's configuration comes from. Later sources win.
#[derive(Debug, Clone, Default)]
pub struct ConfigSource<'a> {
    pub preset: Option<&'a str>,
    pub file: Option<&'a Path>,
    /// A run record whose configuration snapshot is the starting point.
    pub record: Option<&'a Path>,
    /// `key=value` overrides.
    pub overrides: &'a [String],
}

fn parse_ini(text: &str, origin: &str) -> CliResult<Vec<(String, String)>> {
    let ini = Ini::load_from_str(text).map_err(|e| CliError::config(format!("{origin}: {e}")))?;
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if let Some((k, _)) = props.iter().next() {
                return Err(CliError::config(format!("{origin}: key `{k}` appears outside a section")));
            }
            continue;
        };
        if !SECTIONS.contains(&section) {
            return Err(CliError::config(format!(
                "{origin}: unknown section [{section}]; expected one of {}",
                SECTIONS.join(", ")
            )));
        }
        for (k, v) in props.iter() {
            let key = format!("{section}.{k}");
            if key != PRESET_KEY && !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(CliError::config(format!("{origin}: unknown key `{key}`")));
            }
            if !seen.insert(key.clone()) {
                return Err(CliError::config(format!("{origin}: key `{key}` is set twice")));
            }
            entries.push((key, v.to_string()));
        }
    }
    Ok(entries)
}

fn apply(cfg: &mut ModelConfig, key: &str, value: &str, from_preset: bool) -> CliResult<()> {
    if from_preset {
        let old = cfg.get(key)?;
        cfg.set(key, value)?;
        let new = cfg.get(key)?;
        if old != new {
            log::info!("`{key}` = {new} overrides the preset value {old}");
        }
        Ok(())
    } else {
        cfg.set(key, value).map_err(CliError::from)
    }
}

/// Reads and validates a configuration file. `preset` is used when the file
/// does not name one itself.
pub fn load_config(path: &Path, preset: Option<&str>) -> CliResult<ModelConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let origin = path.display().to_string();
    let entries = parse_ini(&text, &origin)?;
    let file_preset = entries.iter().find(|(k, _)| k == PRESET_KEY).map(|(_, v)| v.as_str());
    let base = match (file_preset, preset) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::config(format!(
                "{origin} names preset `{a}` but `{b}` was requested"
            )))
        }
        (Some(p), _) | (None, Some(p)) => Some(p),
        (None, None) => None,
    };
    let mut cfg = match base {
        Some(p) => ModelConfig::preset(p)?,
        None => {
            let missing: Vec<&str> = CONFIG_KEYS
                .iter()
                .copied()
                .filter(|k| k.starts_with("system.") || k.starts_with("bath"))
                .filter(|k| !entries.iter().any(|(e, _)| e == k))
                .collect();
            if !missing.is_empty() {
                return Err(CliError::config(format!(
                    "{origin}: missing keys {} (or name a preset with `preset` under [run])",
                    missing.join(", ")
                )));
            }
            ModelConfig::preset("WWW")?
        }
    };
    for (k, v) in entries.iter().filter(|(k, _)| k != PRESET_KEY) {
        apply(&mut cfg, k, v, base.is_some())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Builds the run configuration from preset, file, run record and overrides.
pub fn resolve(src: &ConfigSource<'_>) -> CliResult<ModelConfig> {
    let mut cfg = match (src.record, src.file) {
        (Some(_), Some(_)) => return Err(CliError::config("give either a config file or a run record, not both")),
        (Some(r), None) => {
            let text = std::fs::read_to_string(r)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", r.display())))?;
            let rec: RunRecord = serde_json::from_str(&text)
                .map_err(|e| CliError::config(format!("{} is not a run record: {e}", r.display())))?;
            rec.config
                .ok_or_else(|| CliError::config(format!("{} holds no configuration", r.display())))?
        }
        (None, Some(f)) => load_config(f, src.preset)?,
        (None, None) => ModelConfig::preset(src.preset.unwrap_or("WWW"))?,
    };
    for kv in src.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("override `{kv}` is not of the form key=value")))?;
        apply(&mut cfg, k.trim(), v.trim(), true)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_keys_and_sections() {
        assert!(parse_ini("[system]\nepsilon3 = 1\n", "t").is_err());
        assert!(parse_ini("[sytem]\nepsilon1 = 1\n", "t").is_err());
        assert!(parse_ini("epsilon1 = 1\n", "t").is_err());
        assert!(parse_ini("[system]\nepsilon1 = 1\nepsilon1 = 2\n", "t").is_err());
    }

    #[test]
    fn overrides_win_over_presets() {
        let sets = vec!["bath1.alpha=0".to_string(), "system.J = 0.2".to_string()];
        let cfg = resolve(&ConfigSource { preset: Some("SWS"), overrides: &sets, ..Default::default() }).unwrap();
        assert_eq!(cfg.bath1.alpha, 0.0);
        assert_eq!(cfg.j, 0.2);
        assert_eq!(cfg.bath2.alpha, ModelConfig::preset("SWS").unwrap().bath2.alpha);
    }

    #[test]
    fn malformed_override_is_a_config_error() {
        let sets = vec!["bath1.alpha".to_string()];
        let e = resolve(&ConfigSource { overrides: &sets, ..Default::default() }).unwrap_err();
        assert_eq!(e.code, crate::error::EXIT_CONFIG);
    }
}
