use std::fmt;
use std::path::Path;

use serde::Serialize;

/// Failure mapped to a process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad input or configuration (exit 2).
    Validation(String),
    /// A fit or estimate failed numerically (exit 3).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<pdpfi::Error> for CliError {
    fn from(e: pdpfi::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

#[derive(Debug, Clone, Serialize)]
pub struct Software {
    pub name: &'static str,
    pub version: &'static str,
}

pub const SOFTWARE: Software = Software { name: "pdpfi", version: env!("CARGO_PKG_VERSION") };

/// Seed after applying the `PDPFI_SEED` override.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeedChoice {
    pub seed: u64,
    pub source: &'static str,
}

pub fn resolve_seed(flag: u64) -> CliResult<SeedChoice> {
    match std::env::var("PDPFI_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(|seed| SeedChoice { seed, source: "PDPFI_SEED" })
            .map_err(|_| invalid(format!("PDPFI_SEED=`{v}` is not a non-negative integer"))),
        Err(_) => Ok(SeedChoice { seed: flag, source: "--seed" }),
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Files are assembled in memory and only written once everything succeeded,
/// so a failed run leaves the output directory untouched.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, String)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn write(self, dir: &Path) -> CliResult<()> {
        std::fs::create_dir_all(dir).map_err(|e| invalid(format!("cannot create {}: {e}", dir.display())))?;
        for (name, contents) in self.files {
            let path = dir.join(&name);
            std::fs::write(&path, contents).map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(())
    }
}

/// File-name-safe form of a column name.
pub fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems() {
        assert_eq!(file_stem("fixed acidity"), "fixed_acidity");
        assert_eq!(file_stem("x1"), "x1");
        assert_eq!(file_stem("a/b.c"), "a_b_c");
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(pdpfi::Error::TooFewSplits(1)).exit_code(), 2);
        assert_eq!(CliError::from(pdpfi::Error::DegenerateDesign).exit_code(), 3);
    }
}
