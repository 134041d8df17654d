//! Closed-form versus exact expectation over the shipped archetypes.

use loadsim::data_io::FixtureLibrary;
use loadsim::engine::{OwnershipMode, ProbabilitySource, SimulationConfig, StandbyMode};
use loadsim::oracle::{expected_daily_energy_exact, expected_monthly_energy_eq2};

// The closed form ignores blocking, so it bounds the exact chain from above.
#[test]
fn closed_form_bounds_exact_expectation() {
    let lib = FixtureLibrary::shipped().unwrap();
    for name in ["r12", "r3", "r4", "r5"] {
        let table = lib.table(name).unwrap();
        let (arch, _) = lib.archetype(name).unwrap().with_hourly_from_table(table).unwrap();
        let eq2 = expected_monthly_energy_eq2(&arch);
        assert!(eq2.corrected_kwh() > eq2.literal_kwh());
        for (step_min, probability_source) in [(5, ProbabilitySource::FromTable), (1, ProbabilitySource::FromParameters)] {
            let cfg = SimulationConfig {
                step_min,
                probability_source,
                ownership_mode: OwnershipMode::ProbabilityScaling,
                standby_mode: StandbyMode::Continuous,
                ..SimulationConfig::default()
            };
            let exact = expected_daily_energy_exact(&arch, Some(table), &cfg).unwrap();
            assert!(
                eq2.corrected_kwh() >= exact.total_kwh_per_month(),
                "{name} step {step_min}: {} < {}",
                eq2.corrected_kwh(),
                exact.total_kwh_per_month()
            );
        }
    }
}

#[test]
fn table_and_recovered_parameters_agree() {
    let lib = FixtureLibrary::shipped().unwrap();
    for name in ["r12", "r3", "r4", "r5"] {
        let table = lib.table(name).unwrap();
        let (arch, flagged) = lib.archetype(name).unwrap().with_hourly_from_table(table).unwrap();
        assert!(flagged.is_empty(), "{name}: {flagged:?}");
        let run = |probability_source| {
            let cfg = SimulationConfig {
                probability_source,
                ..SimulationConfig::default()
            };
            expected_daily_energy_exact(&arch, Some(table), &cfg).unwrap().total_kwh_per_day()
        };
        let (t, p) = (run(ProbabilitySource::FromTable), run(ProbabilitySource::FromParameters));
        assert!((t - p).abs() <= 1e-9 * t, "{name}: {t} vs {p}");
    }
}
