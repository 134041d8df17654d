//! Bottom-up residential electricity load simulation.
//!
//! Appliances are two-state machines driven by per-step starting
//! probabilities. Households are fleets of such machines. The crate provides
//! a Monte Carlo engine, an exact expected-value oracle for the same chain,
//! analytics for monthly energy and peak windows, and CSV I/O.

pub mod analytics;
pub mod appliance;
pub mod cli;
pub mod data_io;
pub mod engine;
pub mod error;
pub mod oracle;

pub use analytics::{
    compare_to_benchmark, find_peaks, monthly_from_profile, profile_error_metrics, rebin,
    BenchmarkEntry, BenchmarkKind, BenchmarkSet, ErrorMetrics, Peak, SimulatedMonthly,
    ValidationReport,
};
pub use appliance::{
    compute_p_start, compute_p_step, reconstruct_p_hour, rescale_table, ApplianceKey,
    ApplianceSpec, HouseholdArchetype, StartProbability, StartProbabilityTable, StepMinutes,
};
pub use data_io::{FixtureLibrary, IntervalSeries};
pub use engine::{
    derive_substream_seed, prepare, simulate_fleet, simulate_fleet_with_threads,
    simulate_household, step_appliance, ApplianceState, FleetResult, FleetStats, LoadProfile,
    OwnershipMode, ProbabilitySource, SimulationConfig, StandbyMode,
};
pub use error::{Error, Result};
pub use oracle::{
    exact_on_probability, expected_daily_energy_exact, expected_monthly_energy_eq2, Eq2Energy,
    ExpectedEnergy,
};
