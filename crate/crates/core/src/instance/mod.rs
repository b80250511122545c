//! Instance sources: the synthetic generator, the canonical text format and
//! the TPPLIB importer.

pub mod format;
pub mod generate;
pub mod tpplib;

pub use format::{read_instance, write_instance};
pub use generate::{
    demand_from_supplies, generate, generate_rtpp, generate_set, generate_utpp, GeneratorSpec,
};
pub use tpplib::{import_tpplib, import_tpplib_with, ImportOptions, ImportReport};

use std::path::Path;

use crate::error::Result;
use crate::model::TppInstance;

/// Reads an instance file in the canonical format, or in the TPPLIB layout
/// when the first non-blank line is not the `TPP` header.
pub fn load_instance(path: &Path) -> Result<TppInstance> {
    let text = std::fs::read_to_string(path)?;
    let first = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    if first.split_whitespace().next() == Some(format::MAGIC) {
        format::from_str(&text)
    } else {
        import_tpplib(text.as_bytes())
    }
}
