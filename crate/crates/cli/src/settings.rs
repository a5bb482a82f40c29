use std::path::{Path, PathBuf};
use std::str::FromStr;

use mvrbm::config::{parse_dims, Config};
use mvrbm::Error;

pub const USAGE: u8 = 1;
pub const DATA: u8 = 2;
pub const DIVERGED: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: USAGE, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => USAGE,
            Error::Diverged { .. } => DIVERGED,
            _ => DATA,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self { code: DATA, message: e.to_string() }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

/// Flag values layered over an optional config file.
pub struct Settings {
    file: Config,
}

impl Settings {
    /// Loads `path` (if any) and rejects keys outside `known`.
    pub fn load(path: Option<&Path>, known: &[&str]) -> CliResult<Self> {
        let file = match path {
            Some(p) => Config::load(p).map_err(|e| CliError::usage(e.to_string()))?,
            None => Config::default(),
        };
        file.ensure_known(known).map_err(|e| CliError::usage(e.to_string()))?;
        Ok(Self { file })
    }

    pub fn opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.file.get(key).map_err(|e| CliError::usage(e.to_string())),
        }
    }

    pub fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T> {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }

    pub fn required<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<T> {
        self.opt(flag, key)?
            .ok_or_else(|| CliError::usage(format!("missing required setting --{}", key.replace('_', "-"))))
    }

    pub fn switch(&self, flag: bool, key: &str) -> CliResult<bool> {
        Ok(flag || self.opt::<bool>(None, key)?.unwrap_or(false))
    }

    pub fn path(&self, flag: Option<PathBuf>, key: &str) -> CliResult<Option<PathBuf>> {
        Ok(flag.or_else(|| self.file.raw(key).map(PathBuf::from)))
    }

    pub fn required_path(&self, flag: Option<PathBuf>, key: &str) -> CliResult<PathBuf> {
        self.path(flag, key)?
            .ok_or_else(|| CliError::usage(format!("missing required setting --{}", key.replace('_', "-"))))
    }

    pub fn dims(&self, flag: Option<String>, key: &str, default: (usize, usize)) -> CliResult<(usize, usize)> {
        match self.opt::<String>(flag, key)? {
            Some(s) => parse_dims(&s)
                .ok_or_else(|| CliError::usage(format!("invalid size for --{}: {s:?}", key.replace('_', "-")))),
            None => Ok(default),
        }
    }

    /// `none` disables thresholding.
    pub fn threshold(&self, flag: Option<String>, default: Option<f64>) -> CliResult<Option<f64>> {
        match self.opt::<String>(flag, "threshold")? {
            None => Ok(default),
            Some(s) if s == "none" => Ok(None),
            Some(s) => s.parse().map(Some).map_err(|_| CliError::usage(format!("invalid threshold {s:?}"))),
        }
    }
}

/// Creates the output directory.
pub fn out_dir(settings: &Settings, flag: Option<PathBuf>) -> CliResult<PathBuf> {
    let dir = settings.required_path(flag, "out")?;
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError { code: DATA, message: format!("cannot create {}: {e}", dir.display()) })?;
    Ok(dir)
}
