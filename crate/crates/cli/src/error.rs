use std::fmt;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or inputs; the message names the flag.
    Config { flag: &'static str, msg: String },
    /// The library reported a failure.
    Numerical(problin::Error),
    /// A check ran but at least one gap exceeded its tolerance.
    CheckFailed(usize),
    Output(std::io::Error),
}

impl CliError {
    pub fn config(flag: &'static str, msg: impl Into<String>) -> Self {
        CliError::Config {
            flag,
            msg: msg.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config { .. } => ExitCode::from(2),
            _ => ExitCode::from(1),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { flag, msg } => write!(f, "{flag}: {msg}"),
            CliError::Numerical(e) => write!(f, "{e}"),
            CliError::CheckFailed(n) => write!(f, "{n} check(s) exceeded their tolerance"),
            CliError::Output(e) => write!(f, "writing output: {e}"),
        }
    }
}

impl From<problin::Error> for CliError {
    fn from(e: problin::Error) -> Self {
        CliError::Numerical(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
