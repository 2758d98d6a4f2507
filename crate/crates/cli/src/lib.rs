//! Command-line front end for matrix-weighted consensus analysis.
//!
//! Scenarios are TOML files (see [`scenario`]); every subcommand writes a JSON
//! report named after the scenario into the output directory.

pub mod args;
pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;

pub use error::CliError;
pub use scenario::Scenario;

const BUILTINS: [(&str, &str); 4] = [
    ("example1", include_str!("../fixtures/example1.toml")),
    ("cluster9_case1", include_str!("../fixtures/cluster9_case1.toml")),
    ("cluster9_case2", include_str!("../fixtures/cluster9_case2.toml")),
    ("bearing_square", include_str!("../fixtures/bearing_square.toml")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(name, _)| *name)
}

/// One of the bundled scenarios, by name.
pub fn builtin(name: &str) -> Result<Scenario, CliError> {
    let (_, text) = BUILTINS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| CliError::UnknownBuiltin(name.to_string()))?;
    Scenario::parse(text, name)
}

/// Exit status: 0 on success, 1 for bad input or I/O failure, 2 when the
/// predictions disagree with each other or with the simulation.
pub fn exit_code(result: &Result<commands::Outcome, CliError>) -> u8 {
    match result {
        Ok(o) if o.agreement => 0,
        Ok(_) => 2,
        Err(_) => 1,
    }
}
