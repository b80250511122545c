use std::io;

use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed route: {0}")]
    MalformedRoute(String),

    #[error("instance failed validation: {}", format_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("visited markets cannot cover demand of product {product}: supply {supply} < demand {demand}")]
    InfeasibleRoute {
        product: usize,
        supply: i64,
        demand: i64,
    },

    #[error("purchase plan references market {market} / product {product} without an offer")]
    UnknownOffer { market: usize, product: usize },

    #[error("illegal action {action}: {reason}")]
    IllegalAction { action: usize, reason: &'static str },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("structural error: {0}")]
    Structure(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("instance too large for exact search: {size} markets (limit {limit})")]
    TooLarge { size: usize, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
