use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input. Exit code 2.
    Input(String),
    /// Well-formed input that violates a contract. Exit code 3.
    Contract(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Contract(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Contract(m) => f.write_str(m),
        }
    }
}

impl From<owdist::Error> for CliError {
    fn from(e: owdist::Error) -> Self {
        match e {
            owdist::Error::Parse { .. } | owdist::Error::Io(_) => CliError::Input(e.to_string()),
            _ => CliError::Contract(e.to_string()),
        }
    }
}
