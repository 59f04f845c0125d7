use std::fmt;

use tvmg_core::{Error as CoreError, ErrorKind};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => m,
        };
        f.write_str(&msg.replace('\n', " "))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match (&e, e.kind()) {
            (CoreError::Parameter(_), _) => CliError::Usage(e.to_string()),
            (_, ErrorKind::Numeric) => CliError::Numeric(e.to_string()),
            (_, ErrorKind::Data) => CliError::Data(e.to_string()),
        }
    }
}

pub fn require<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("missing required option --{flag}")))
}
