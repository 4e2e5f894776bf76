//! Scenarios, synthetic designs, sufficient statistics and diagnostics.

mod design;
mod diagnostics;
pub mod rules;
mod scenario;
mod simulate;

pub use design::{build_design, Basis, DenseDesign, DesignSpec, GramSpectrum};
pub use diagnostics::{diagnostics, Diagnostics, TruthDiagnostics};
pub use rules::{Magnitude, PRule, VectorRule};
pub use scenario::{PriorConstants, Scenario, SCHEMA_VERSION};
pub use simulate::{mle_sup_error, simulate_stats, SimulationMode, SufficientStats};
