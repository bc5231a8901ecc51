//! Flat `key = value` config files.
//!
//! Each entry becomes `--key value` inserted right after the subcommand, so
//! anything given on the command line later in argv takes precedence.
//! `key = true` becomes a bare `--key`; `key = false` is dropped.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Parses config text into `(key, value)` pairs. Blank lines and lines
/// starting with `#` are ignored; keys may use `_` or `-`.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::usage(format!(
                "config line {}: expected key = value",
                lineno + 1
            )));
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key.starts_with('-') {
            return Err(CliError::usage(format!("config line {}: bad key", lineno + 1)));
        }
        if key == "config" {
            return Err(CliError::usage(format!(
                "config line {}: nested config files are not supported",
                lineno + 1
            )));
        }
        let value = value.trim().trim_matches('"').to_string();
        entries.push((key, value));
    }
    Ok(entries)
}

fn to_flags(entries: &[(String, String)]) -> Vec<OsString> {
    let mut out = Vec::new();
    for (key, value) in entries {
        match value.as_str() {
            "false" => {}
            "true" => out.push(format!("--{key}").into()),
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    out
}

/// Finds `--config FILE` / `--config=FILE` and the position of the
/// subcommand token.
fn scan(argv: &[OsString]) -> (Option<PathBuf>, Option<usize>) {
    let mut config = None;
    let mut subcommand = None;
    let mut i = 1;
    while i < argv.len() {
        let arg = argv[i].to_string_lossy();
        if arg == "--config" {
            config = argv.get(i + 1).map(PathBuf::from);
            i += 2;
            continue;
        }
        if let Some(path) = arg.strip_prefix("--config=") {
            config = Some(PathBuf::from(path));
        } else if subcommand.is_none() && !arg.starts_with('-') {
            subcommand = Some(i);
        }
        i += 1;
    }
    (config, subcommand)
}

fn read(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
    parse(&text)
}

/// Returns argv with the config file's flags spliced in after the
/// subcommand. Without `--config` the input is returned unchanged.
pub fn expand_args(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let (Some(path), Some(at)) = scan(&argv) else {
        return Ok(argv);
    };
    let flags = to_flags(&read(&path)?);
    let mut out = Vec::with_capacity(argv.len() + flags.len());
    out.extend_from_slice(&argv[..=at]);
    out.extend(flags);
    out.extend_from_slice(&argv[at + 1..]);
    Ok(out)
}
