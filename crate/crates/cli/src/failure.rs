//! Error classes and their exit codes.

use divlab::evolution::EvolutionError;
use divlab::exponents::ExponentError;
use divlab::numbertheory::NumberTheoryError;
use divlab::optimizer::OracleError;
use divlab::slabs::SlabError;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cost guard tripped: {0}")]
    CostGuard(String),
    #[error("{0}")]
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::CostGuard(_) => 3,
            Failure::Runtime(_) => 1,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<ExponentError> for Failure {
    fn from(e: ExponentError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BadStep(_) => Failure::Config(e.to_string()),
            OracleError::Exponent(x) => x.into(),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<NumberTheoryError> for Failure {
    fn from(e: NumberTheoryError) -> Self {
        match e {
            NumberTheoryError::CostGuard(_) => Failure::CostGuard(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<EvolutionError> for Failure {
    fn from(e: EvolutionError) -> Self {
        match e {
            EvolutionError::CostGuard(_) => Failure::CostGuard(e.to_string()),
            EvolutionError::NonConvergent(_) => Failure::Runtime(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<SlabError> for Failure {
    fn from(e: SlabError) -> Self {
        match e {
            SlabError::CostGuard(_) => Failure::CostGuard(e.to_string()),
            SlabError::Evolution(x) => x.into(),
            SlabError::Exponent(x) => x.into(),
            other => Failure::Config(other.to_string()),
        }
    }
}
