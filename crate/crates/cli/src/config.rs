//! Loading experiment configurations from TOML with `--set` overrides.

use std::path::Path;

use halftaper::experiment::{ExperimentConfig, ExperimentKind, Scale};
use halftaper::Error;
use toml::{Table, Value};

/// Parses the right-hand side of `key=value` as a TOML value, falling back
/// to a bare string.
fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Applies `a.b.c=value` to `root`, creating intermediate tables.
pub fn apply_override(root: &mut Table, assignment: &str) -> Result<(), Error> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').map(str::trim).collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("bad override key `{path}`")));
    }
    let mut table = root;
    for k in &keys[..keys.len() - 1] {
        let entry = table.entry(k.to_string()).or_insert_with(|| Value::Table(Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{k}` in `{path}` is not a table")))?;
    }
    table.insert(keys[keys.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

/// Resolves the configuration: the file if given, otherwise the preset for
/// `default_kind`, then overrides, then the seed flag. The result is
/// validated.
pub fn load(
    path: Option<&Path>,
    default_kind: Option<ExperimentKind>,
    scale: Scale,
    overrides: &[String],
    seed: Option<u64>,
) -> Result<ExperimentConfig, Error> {
    let mut table: Table = match (path, default_kind) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            text.parse()
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        (None, Some(kind)) => Table::try_from(ExperimentConfig::preset(kind, scale))
            .map_err(|e| Error::Config(e.to_string()))?,
        (None, None) => return Err(Error::Config("either --config or --kind is required".into())),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let mut cfg: ExperimentConfig = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse_values() {
        let mut t = Table::new();
        apply_override(&mut t, "ensemble.n_samples=12").unwrap();
        apply_override(&mut t, "ensemble.ratios=[0.5, 1.0]").unwrap();
        apply_override(&mut t, "ensemble.covariance.model=matern(nu=1)").unwrap();
        apply_override(&mut t, "seed = 9").unwrap();
        assert_eq!(t["seed"].as_integer(), Some(9));
        let e = t["ensemble"].as_table().unwrap();
        assert_eq!(e["n_samples"].as_integer(), Some(12));
        assert_eq!(e["ratios"].as_array().unwrap().len(), 2);
        assert_eq!(e["covariance"]["model"].as_str(), Some("matern(nu=1)"));
        assert!(apply_override(&mut t, "novalue").is_err());
        assert!(apply_override(&mut t, "seed.x=1").is_err());
    }

    #[test]
    fn presets_round_trip_through_toml() {
        for kind in ExperimentKind::ALL {
            let cfg = load(None, Some(kind), Scale::Desk, &[], None).unwrap();
            assert_eq!(cfg, ExperimentConfig::preset(kind, Scale::Desk));
        }
    }

    #[test]
    fn invalid_override_is_config_error() {
        let r = load(
            None,
            Some(ExperimentKind::Profile1d),
            Scale::Desk,
            &["ensemble.n_samples=\"many\"".into()],
            None,
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
