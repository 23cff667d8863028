//! Flat `key = value` config files.
//!
//! Keys are long flag names of the chosen subcommand (`font-db` or
//! `font_db`). Entries become ordinary arguments inserted right after the
//! subcommand, and any flag also given on the command line is left out, so
//! flags always win.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::ArgAction;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("config line {line}: unknown key {key:?} for `{command}`")]
    UnknownKey { line: usize, key: String, command: String },
    #[error("config line {line}: {key} expects true or false, got {value:?}")]
    NotABool { line: usize, key: String, value: String },
    #[error("--config needs a file name")]
    MissingPath,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn parse(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1 });
        }
        let value = value.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .unwrap_or(value);
        out.push(Entry {
            line: i + 1,
            key,
            value: value.to_string(),
        });
    }
    Ok(out)
}

/// Path given with `--config FILE` or `--config=FILE`, if any.
pub fn config_path(argv: &[OsString]) -> Result<Option<PathBuf>, ConfigError> {
    let mut iter = argv.iter().skip(1);
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return iter.next().map(|p| Some(PathBuf::from(p))).ok_or(ConfigError::MissingPath);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Ok(Some(PathBuf::from(p)));
        }
    }
    Ok(None)
}

fn given_on_command_line(argv: &[OsString], long: &str) -> bool {
    let flag = format!("--{long}");
    let with_value = format!("--{long}=");
    argv.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&with_value)
    })
}

/// Position right after the subcommand path and the leaf command it names.
fn subcommand_end<'a>(argv: &[OsString], root: &'a clap::Command) -> (usize, &'a clap::Command) {
    let mut cmd = root;
    let mut end = 1;
    for (i, arg) in argv.iter().enumerate().skip(1) {
        let s = arg.to_string_lossy();
        if s.starts_with('-') {
            continue;
        }
        match cmd.find_subcommand(s.as_ref()) {
            Some(sub) => {
                cmd = sub;
                end = i + 1;
            }
            None => break,
        }
    }
    (end, cmd)
}

/// Insert the entries of `--config` (if present) into `argv`.
pub fn apply(argv: Vec<OsString>, root: &clap::Command) -> Result<Vec<OsString>, ConfigError> {
    let Some(path) = config_path(&argv)? else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Read {
        path: path.clone(),
        source,
    })?;
    expand(argv, &parse(&text)?, root, &path)
}

fn expand(argv: Vec<OsString>, entries: &[Entry], root: &clap::Command, path: &Path) -> Result<Vec<OsString>, ConfigError> {
    let (at, leaf) = subcommand_end(&argv, root);
    let mut injected: Vec<OsString> = Vec::new();
    for e in entries {
        let arg = leaf
            .get_arguments()
            .find(|a| a.get_long() == Some(e.key.as_str()) && e.key != "config")
            .ok_or_else(|| ConfigError::UnknownKey {
                line: e.line,
                key: e.key.clone(),
                command: leaf.get_name().to_string(),
            })?;
        if given_on_command_line(&argv, &e.key) {
            log::debug!("{}: {} overridden on the command line", path.display(), e.key);
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue | ArgAction::SetFalse => {
                let on = match e.value.to_ascii_lowercase().as_str() {
                    "true" | "yes" | "1" | "on" => true,
                    "false" | "no" | "0" | "off" => false,
                    _ => {
                        return Err(ConfigError::NotABool {
                            line: e.line,
                            key: e.key.clone(),
                            value: e.value.clone(),
                        })
                    }
                };
                if on {
                    injected.push(format!("--{}", e.key).into());
                }
            }
            _ => injected.push(format!("--{}={}", e.key, e.value).into()),
        }
    }
    let mut out = argv;
    out.splice(at..at, injected);
    Ok(out)
}
