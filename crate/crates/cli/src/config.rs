//! Overlay of command-line flags on a TOML config file.
//!
//! The file holds one table per subcommand (`[tvmg]`, `[aggregate-tv]`, ...)
//! whose keys are the flag names with underscores. A flag given on the command
//! line always wins; a boolean switch counts as given only when set.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

pub fn merge<T>(flags: &T, config: Option<&Path>, section: &str) -> Result<T, CliError>
where
    T: Serialize + DeserializeOwned,
{
    let Some(path) = config else {
        return clone_via_json(flags);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config `{}`: {e}", path.display())))?;
    let table: toml::Table =
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config `{}`: {}", path.display(), one_line(&e))))?;
    let mut merged = serde_json::to_value(flags).map_err(internal)?;
    let Some(section_value) = table.get(section) else {
        return clone_via_json(flags);
    };
    let file_values = serde_json::to_value(section_value).map_err(internal)?;
    let (Value::Object(target), Value::Object(source)) = (&mut merged, file_values) else {
        return Err(CliError::Usage(format!("config section `[{section}]` must be a table")));
    };
    for (key, value) in source {
        let slot = target
            .get_mut(&key)
            .ok_or_else(|| CliError::Usage(format!("config section `[{section}]`: unknown key `{key}`")))?;
        if matches!(slot, Value::Null | Value::Bool(false)) {
            *slot = value;
        }
    }
    serde_json::from_value(merged).map_err(|e| CliError::Usage(format!("config section `[{section}]`: {e}")))
}

fn clone_via_json<T: Serialize + DeserializeOwned>(v: &T) -> Result<T, CliError> {
    serde_json::from_value(serde_json::to_value(v).map_err(internal)?).map_err(internal)
}

fn internal(e: serde_json::Error) -> CliError {
    CliError::Usage(format!("configuration: {e}"))
}

fn one_line(e: &toml::de::Error) -> String {
    e.message().replace('\n', " ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::TvmgArgs;
    use std::io::Write;

    #[test]
    fn flags_override_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "[tvmg]\nalpha = 0.6\nlevel = 0.95\ncv = true\noutcome = \"y\"").unwrap();
        let mut flags = TvmgArgs::default();
        flags.smoothing.alpha = Some(0.4);
        let merged = merge(&flags, Some(f.path()), "tvmg").unwrap();
        assert_eq!(merged.smoothing.alpha, Some(0.4));
        assert_eq!(merged.level, Some(0.95));
        assert!(merged.smoothing.cv);
        assert_eq!(merged.data.outcome.as_deref(), Some("y"));
    }

    #[test]
    fn unknown_key_is_usage_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "[tvmg]\nalhpa = 0.6").unwrap();
        let err = merge(&TvmgArgs::default(), Some(f.path()), "tvmg").unwrap_err();
        assert!(matches!(err, CliError::Usage(m) if m.contains("alhpa")));
    }
}
