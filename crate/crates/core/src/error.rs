use thiserror::Error;

/// A single failed invariant on an input field.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub value: f64,
    pub reason: &'static str,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} = {:e}: {}", self.field, self.value, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("phase magnitude {0:e} rad exceeds the supported range")]
    Range(f64),

    #[error("pair separation must be strictly positive")]
    SingularSeparation,

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("validation failed: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("grid has {points} points, limit is {limit}")]
    GridTooLarge { points: u128, limit: u128 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
