//! JSON experiment configs.
//!
//! A config file is a [`SimConfig`] object plus a `schema_version` field.
//! Unknown fields are rejected.

use std::path::Path;

use degenloop_core::SimConfig;
use serde_json::{Map, Value};

use crate::error::CliError;

pub const SCHEMA_VERSION: u64 = 1;

pub fn parse_config(text: &str) -> Result<SimConfig, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let Value::Object(mut fields) = value else {
        return Err(CliError::Config("config must be a JSON object".into()));
    };
    match fields.remove("schema_version") {
        None => return Err(CliError::Config("missing field `schema_version`".into())),
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION) => {}
        Some(v) => return Err(CliError::Config(format!("unsupported schema_version {v}, expected {SCHEMA_VERSION}"))),
    }
    let config: SimConfig =
        serde_json::from_value(Value::Object(fields)).map_err(|e| CliError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<SimConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// The config as a versioned JSON object, loadable by [`parse_config`].
pub fn echo(config: &SimConfig) -> Value {
    let mut out = Map::new();
    out.insert("schema_version".into(), SCHEMA_VERSION.into());
    if let Ok(Value::Object(fields)) = serde_json::to_value(config) {
        out.extend(fields);
    }
    Value::Object(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use degenloop_core::{PolicyKind, PolicyTag};

    const MINIMAL: &str = r#"{"schema_version":1,"policy":{"tag":"random"},"m0":10,"l":2,
        "horizon":100,"delta_range":[-0.01,0.01],"mu0_range":[-1,1],"report_interval":10,"n_runs":1}"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config = parse_config(MINIMAL).unwrap();
        assert_eq!(config.policy, PolicyKind::new(PolicyTag::Random));
        assert_eq!(config.eta, 0.0);
        assert_eq!(config.master_seed, degenloop_core::engine::DEFAULT_MASTER_SEED);
    }

    #[test]
    fn echo_round_trips() {
        let config = parse_config(MINIMAL).unwrap();
        let text = serde_json::to_string(&echo(&config)).unwrap();
        assert_eq!(parse_config(&text).unwrap(), config);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let missing = MINIMAL.replace(r#""l":2,"#, "");
        let err = parse_config(&missing).unwrap_err().to_string();
        assert!(err.contains("`l`"), "{err}");
        let unknown = MINIMAL.replace(r#""l":2,"#, r#""l":2,"ell":3,"#);
        assert!(parse_config(&unknown).unwrap_err().to_string().contains("ell"));
        let too_many = MINIMAL.replace(r#""l":2,"#, r#""l":20,"#);
        assert!(parse_config(&too_many).unwrap_err().to_string().contains("`l`"));
        let unversioned = MINIMAL.replace(r#""schema_version":1,"#, "");
        assert!(parse_config(&unversioned).unwrap_err().to_string().contains("schema_version"));
        let future = MINIMAL.replace(r#""schema_version":1"#, r#""schema_version":2"#);
        assert!(matches!(parse_config(&future), Err(CliError::Config(_))));
    }
}
