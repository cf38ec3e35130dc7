//! Command implementations behind the `flyer-sdnn` binary.

pub mod commands;
pub mod exit;
pub mod verify;

pub use exit::CliError;
