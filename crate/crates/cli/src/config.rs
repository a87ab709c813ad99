//! Config-file merging and the resolved-config sidecar.
//!
//! Precedence is command-line flag, then config file, then environment
//! fallback, then built-in default. The file is TOML: top-level `seed` and
//! `out_dir`, plus one table per subcommand path such as `[adapt]` or
//! `[generate.negatives]` whose keys are the long flag names.

use clap::parser::ValueSource;
use clap::ArgMatches;
use sdjc_core::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use std::fs;
use std::path::Path;

pub const SIDECAR: &str = "resolved_config.json";

pub fn load(path: &Path) -> Result<toml::Table> {
    let text = fs::read_to_string(path)?;
    text.parse::<toml::Table>()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// The table for a subcommand path, if the file has one.
pub fn section<'a>(table: &'a toml::Table, path: &[&str]) -> Result<Option<&'a toml::Table>> {
    let mut cur = table;
    for key in path {
        match cur.get(*key) {
            None => return Ok(None),
            Some(toml::Value::Table(t)) => cur = t,
            Some(_) => return Err(Error::Config(format!("`{key}` must be a table"))),
        }
    }
    Ok(Some(cur))
}

fn from_command_line(matches: &ArgMatches, id: &str) -> bool {
    matches.try_get_raw(id).ok().flatten().is_some()
        && matches.value_source(id) == Some(ValueSource::CommandLine)
}

/// Overlays config-file values onto parsed arguments, except where a flag was
/// given explicitly. `skip` lists keys that belong to another layer.
pub fn overlay<T: Serialize + DeserializeOwned>(
    args: &T,
    matches: &ArgMatches,
    table: Option<&toml::Table>,
    skip: &[&str],
) -> Result<T> {
    let mut value = serde_json::to_value(args)?;
    let Some(table) = table else {
        return Ok(serde_json::from_value(value)?);
    };
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Error::Config("arguments are not a record".into()))?;
    for (raw_key, v) in table {
        let key = raw_key.replace('-', "_");
        if skip.contains(&key.as_str()) || v.is_table() {
            continue;
        }
        if !obj.contains_key(&key) {
            return Err(Error::Config(format!("unknown config key `{raw_key}`")));
        }
        if from_command_line(matches, &key) {
            continue;
        }
        obj.insert(key, serde_json::to_value(v)?);
    }
    serde_json::from_value(value).map_err(|e| Error::Config(format!("bad config value: {e}")))
}

/// Writes the sidecar describing everything that determines this run's outputs.
pub fn write_sidecar<T: Serialize>(dir: &Path, command: &str, seed: u64, args: &T) -> Result<()> {
    let mut obj = Map::new();
    obj.insert("command".into(), Value::String(command.into()));
    obj.insert("seed".into(), Value::from(seed));
    obj.insert("args".into(), serde_json::to_value(args)?);
    let text = serde_json::to_string_pretty(&Value::Object(obj))?;
    fs::write(dir.join(SIDECAR), text + "\n")?;
    Ok(())
}
