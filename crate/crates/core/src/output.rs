//! Text formats shared by reports and the CLI.

pub use crate::numtheory::format_rational;

/// A float with 17 significant digits (round-trips exactly).
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}
