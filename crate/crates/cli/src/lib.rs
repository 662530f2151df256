//! Config-driven experiment harness around `otoc-core`: every run reads a
//! versioned JSON config, writes CSV/JSON/SVG results plus a manifest, and
//! reports rigorous-bound violations through its exit status.

pub mod commands;
pub mod config;
pub mod output;
pub mod regression;

pub use commands::{run, RunOptions, RunReport};
pub use config::{load, ConfigError, RunConfig};

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VIOLATION: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const RUNTIME: i32 = 3;
}

/// Maps an error to [`exit::CONFIG`] when the input was at fault and to
/// [`exit::RUNTIME`] otherwise.
pub fn exit_code_for(err: &anyhow::Error) -> i32 {
    use otoc_core::Error as E;
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return exit::CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InvalidLattice(_)
                | E::SiteOutOfRange { .. }
                | E::InvalidDecayExponent { .. }
                | E::PauliParse { .. }
                | E::ThresholdViolation { .. }
                | E::EmptyRegion
                | E::DegenerateRegion => exit::CONFIG,
                _ => exit::RUNTIME,
            };
        }
    }
    exit::RUNTIME
}
