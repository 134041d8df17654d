//! Per-appliance on/off state machines and household/fleet load curves.
//!
//! Power is accounted in integer microwatts: every appliance's nominal and
//! standby draw is quantized once when the household is prepared, so the
//! profile integral and the per-appliance energy ledger are both exact sums
//! of integers and agree bit for bit. Fleet aggregates are integer sums too,
//! which makes them independent of thread count and reduction order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::appliance::{
    compute_p_start, rescale_table, ApplianceKey, HouseholdArchetype, StartProbability,
    StartProbabilityTable, StepMinutes, HOURS_PER_DAY,
};
use crate::error::{Error, Result};

pub const DAYS_PER_MONTH: f64 = 30.0;
const MICRO: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApplianceStatus {
    Off,
    On,
}

/// State of one appliance at the beginning of a step.
///
/// `On` with `remaining_steps = 1` is the step at which the on-cycle ends:
/// the appliance switches off at the start of that step, draws no nominal
/// power and is eligible to start again on the following step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApplianceState {
    pub status: ApplianceStatus,
    pub remaining_steps: u32,
}

impl ApplianceState {
    pub const OFF: ApplianceState = ApplianceState {
        status: ApplianceStatus::Off,
        remaining_steps: 0,
    };

    pub fn on(remaining_steps: u32) -> Self {
        debug_assert!(remaining_steps >= 1);
        ApplianceState {
            status: ApplianceStatus::On,
            remaining_steps,
        }
    }

    pub fn is_off(self) -> bool {
        self.status == ApplianceStatus::Off
    }
}

impl Default for ApplianceState {
    fn default() -> Self {
        ApplianceState::OFF
    }
}

/// Advances one appliance by one step.
///
/// An `Off` appliance starts when `p_start > u`; it is then active for
/// `cycle_steps` steps including the current one. Returns the state for the
/// next step and whether nominal power is drawn during this step.
pub fn step_appliance(
    state: ApplianceState,
    p_start: f64,
    u: f64,
    cycle_steps: u32,
) -> (ApplianceState, bool) {
    match state.status {
        ApplianceStatus::Off => {
            if p_start > u {
                (ApplianceState::on(cycle_steps.max(1)), true)
            } else {
                (ApplianceState::OFF, false)
            }
        }
        ApplianceStatus::On => {
            let left = state.remaining_steps.saturating_sub(1);
            if left == 0 {
                (ApplianceState::OFF, false)
            } else {
                (ApplianceState::on(left), true)
            }
        }
    }
}

/// Seed of household `household_index`'s random stream.
///
/// SplitMix64: the finalizer is applied to
/// `base_seed + (household_index + 1) * 0x9E3779B97F4A7C15 (mod 2^64)`.
/// The gamma is odd and the finalizer is a bijection, so distinct indices
/// always give distinct seeds for the same base seed.
pub fn derive_substream_seed(base_seed: u64, household_index: u64) -> u64 {
    const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut z = base_seed.wrapping_add(household_index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbabilitySource {
    /// Starting probabilities computed from the appliance parameters.
    FromParameters,
    /// Starting probabilities read from a tabulated table.
    FromTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OwnershipMode {
    /// Every appliance present; saturation scales the starting probability
    /// and the standby draw.
    ProbabilityScaling,
    /// Presence sampled once per household with probability `p_sat`; a
    /// present appliance runs without the saturation factor and with full
    /// standby.
    BernoulliPresence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StandbyMode {
    /// Standby drawn at every step, on-cycles included.
    Continuous,
    /// Standby drawn only while the appliance is not active.
    OffTimeOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub step_min: u32,
    pub warmup_days: u32,
    pub sim_days: u32,
    pub households: u32,
    pub base_seed: u64,
    pub probability_source: ProbabilitySource,
    pub ownership_mode: OwnershipMode,
    pub standby_mode: StandbyMode,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            step_min: 5,
            warmup_days: 1,
            sim_days: 30,
            households: 100,
            base_seed: 42,
            probability_source: ProbabilitySource::FromTable,
            ownership_mode: OwnershipMode::ProbabilityScaling,
            standby_mode: StandbyMode::Continuous,
        }
    }
}

impl SimulationConfig {
    pub fn step(&self) -> Result<StepMinutes> {
        StepMinutes::new(self.step_min)
    }

    pub fn validate(&self) -> Result<()> {
        self.step()?;
        if self.sim_days == 0 {
            return Err(Error::input("sim_days must be >= 1"));
        }
        if self.households == 0 {
            return Err(Error::input("households must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProfileMeta {
    pub archetype: String,
    pub households: u32,
    pub seed: u64,
}

/// Uniformly sampled power series in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfile {
    pub step_min: u32,
    pub samples: Vec<f64>,
    pub meta: ProfileMeta,
}

impl LoadProfile {
    pub fn new(step_min: u32, samples: Vec<f64>, meta: ProfileMeta) -> Result<Self> {
        StepMinutes::new(step_min)?;
        if let Some(bad) = samples.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::input(format!("profile sample {bad} is negative")));
        }
        Ok(LoadProfile {
            step_min,
            samples,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn steps_per_day(&self) -> usize {
        (24 * 60 / self.step_min) as usize
    }

    pub fn duration_days(&self) -> f64 {
        self.samples.len() as f64 / self.steps_per_day() as f64
    }

    pub fn energy_kwh(&self) -> f64 {
        let step_h = f64::from(self.step_min) / 60.0;
        self.samples.iter().sum::<f64>() * step_h / 1000.0
    }

    /// Folds a whole number of days into one mean day.
    pub fn day_mean(&self) -> Result<LoadProfile> {
        let spd = self.steps_per_day();
        if self.samples.is_empty() || !self.samples.len().is_multiple_of(spd) {
            return Err(Error::input(format!(
                "profile of {} steps is not a whole number of {spd}-step days",
                self.samples.len()
            )));
        }
        let days = self.samples.len() / spd;
        let mut mean = vec![0.0; spd];
        for day in self.samples.chunks_exact(spd) {
            for (m, v) in mean.iter_mut().zip(day) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= days as f64;
        }
        Ok(LoadProfile {
            step_min: self.step_min,
            samples: mean,
            meta: self.meta.clone(),
        })
    }
}

/// One appliance ready to simulate at a fixed step.
#[derive(Debug, Clone, PartialEq)]
pub struct ApplianceModel {
    pub key: ApplianceKey,
    pub nominal_uw: u64,
    /// Standby draw while present, already scaled in `ProbabilityScaling` mode.
    pub standby_uw: u64,
    /// Probability the appliance is present in a household.
    pub presence: f64,
    pub cycle_steps: u32,
    /// Starting probability for every step of a day.
    pub p_by_step: Vec<f64>,
}

/// An archetype compiled against a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedHousehold {
    pub archetype: String,
    pub step: StepMinutes,
    pub standby_mode: StandbyMode,
    pub appliances: Vec<ApplianceModel>,
    /// Hourly starting probabilities that exceeded 1 and were clamped.
    pub clamp_count: usize,
    /// Appliances whose cycle was rounded up to a whole number of steps.
    pub rounded_cycles: Vec<ApplianceKey>,
}

fn to_micro(watts: f64) -> u64 {
    (watts * MICRO).round() as u64
}

/// Compiles `archetype` for simulation under `config`.
pub fn prepare(
    archetype: &HouseholdArchetype,
    table: Option<&StartProbabilityTable>,
    config: &SimulationConfig,
) -> Result<PreparedHousehold> {
    let step = config.step()?;
    let sph = step.steps_per_hour();
    let bernoulli = config.ownership_mode == OwnershipMode::BernoulliPresence;
    let mut clamp_count = 0;

    let rescaled = match config.probability_source {
        ProbabilitySource::FromTable => {
            let table = table.ok_or_else(|| {
                Error::input(format!(
                    "archetype {}: table mode needs a starting-probability table",
                    archetype.name
                ))
            })?;
            table.check_covers(archetype)?;
            let r = rescale_table(table, step.minutes())?;
            clamp_count += r.clamped;
            Some(r.table)
        }
        ProbabilitySource::FromParameters => None,
    };

    let mut appliances = Vec::with_capacity(archetype.appliances.len());
    let mut rounded_cycles = Vec::new();
    for spec in &archetype.appliances {
        let key = spec.key();
        let mut hourly = [0.0; HOURS_PER_DAY];
        match &rescaled {
            Some(t) => {
                let row = t.row(&key).expect("coverage checked above");
                for (dst, &p) in hourly.iter_mut().zip(row) {
                    let p = if !bernoulli {
                        StartProbability::clamp(p)
                    } else if spec.p_sat > 0.0 {
                        StartProbability::clamp(p / spec.p_sat)
                    } else {
                        StartProbability::clamp(0.0)
                    };
                    clamp_count += usize::from(p.clamped);
                    *dst = p.value;
                }
            }
            None => {
                let mut s = spec.clone();
                if bernoulli {
                    s.p_sat = 1.0;
                }
                for (h, dst) in hourly.iter_mut().enumerate() {
                    let p = compute_p_start(&s, h + 1, step.minutes())?;
                    clamp_count += usize::from(p.clamped);
                    *dst = p.value;
                }
            }
        }
        let p_by_step = hourly
            .iter()
            .flat_map(|&p| std::iter::repeat_n(p, sph))
            .collect();
        if spec.cycle_min % step.minutes() != 0 {
            rounded_cycles.push(key.clone());
        }
        let (presence, standby_w) = if bernoulli {
            (spec.p_sat, spec.standby_w)
        } else {
            (1.0, spec.standby_w * spec.p_sat)
        };
        appliances.push(ApplianceModel {
            key,
            nominal_uw: to_micro(spec.nominal_w),
            standby_uw: to_micro(standby_w),
            presence,
            cycle_steps: step.steps_covering(spec.cycle_min),
            p_by_step,
        });
    }
    Ok(PreparedHousehold {
        archetype: archetype.name.clone(),
        step,
        standby_mode: config.standby_mode,
        appliances,
        clamp_count,
        rounded_cycles,
    })
}

/// Per-appliance energy accounting over the reported horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApplianceLedger {
    pub key: ApplianceKey,
    pub present: bool,
    pub starts: u64,
    pub active_steps: u64,
    pub standby_steps: u64,
    pub nominal_uw: u64,
    pub standby_uw: u64,
}

impl ApplianceLedger {
    /// Energy in microwatt-steps.
    pub fn energy_uw_steps(&self) -> u128 {
        u128::from(self.active_steps) * u128::from(self.nominal_uw)
            + u128::from(self.standby_steps) * u128::from(self.standby_uw)
    }
}

/// Raw result of one household simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdRun {
    /// Household power per reported step, in microwatts.
    pub power_uw: Vec<u64>,
    pub ledger: Vec<ApplianceLedger>,
}

impl HouseholdRun {
    pub fn total_uw_steps(&self) -> u128 {
        self.power_uw.iter().map(|&p| u128::from(p)).sum()
    }

    pub fn ledger_uw_steps(&self) -> u128 {
        self.ledger.iter().map(ApplianceLedger::energy_uw_steps).sum()
    }
}

impl PreparedHousehold {
    pub fn steps_per_day(&self) -> usize {
        self.step.steps_per_day()
    }

    /// Simulates `warmup_days + sim_days` days from an all-off start and
    /// returns the last `sim_days`.
    pub fn simulate(&self, seed: u64, warmup_days: u32, sim_days: u32) -> HouseholdRun {
        let spd = self.steps_per_day();
        let warm = warmup_days as usize * spd;
        let report = sim_days as usize * spd;
        let total = warm + report;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let present: Vec<bool> = self
            .appliances
            .iter()
            .map(|a| a.presence >= 1.0 || (a.presence > 0.0 && rng.gen::<f64>() < a.presence))
            .collect();

        let mut power_uw = vec![0u64; report];
        let mut ledger = Vec::with_capacity(self.appliances.len());
        for (app, &present) in self.appliances.iter().zip(&present) {
            let mut entry = ApplianceLedger {
                key: app.key.clone(),
                present,
                starts: 0,
                active_steps: 0,
                standby_steps: 0,
                nominal_uw: app.nominal_uw,
                standby_uw: app.standby_uw,
            };
            if present {
                let mut state = ApplianceState::OFF;
                for t in 0..total {
                    let p = app.p_by_step[t % spd];
                    let u = if state.is_off() && p > 0.0 {
                        rng.gen::<f64>()
                    } else {
                        1.0
                    };
                    let was_off = state.is_off();
                    let (next, active) = step_appliance(state, p, u, app.cycle_steps);
                    state = next;
                    if t < warm {
                        continue;
                    }
                    let slot = &mut power_uw[t - warm];
                    if active {
                        if was_off {
                            entry.starts += 1;
                        }
                        entry.active_steps += 1;
                        *slot += app.nominal_uw;
                    }
                    if app.standby_uw > 0
                        && (self.standby_mode == StandbyMode::Continuous || !active)
                    {
                        entry.standby_steps += 1;
                        *slot += app.standby_uw;
                    }
                }
            }
            ledger.push(entry);
        }
        HouseholdRun { power_uw, ledger }
    }
}

/// One simulated household with its profile.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdSimulation {
    pub profile: LoadProfile,
    pub run: HouseholdRun,
    pub clamp_count: usize,
    pub rounded_cycles: Vec<ApplianceKey>,
}

fn uw_to_profile(power_uw: &[u64], divisor: f64) -> Vec<f64> {
    power_uw.iter().map(|&p| p as f64 / divisor).collect()
}

/// Simulates one household on the random stream seeded by `seed`.
pub fn simulate_household(
    archetype: &HouseholdArchetype,
    table: Option<&StartProbabilityTable>,
    config: &SimulationConfig,
    seed: u64,
) -> Result<HouseholdSimulation> {
    config.validate()?;
    let prepared = prepare(archetype, table, config)?;
    let run = prepared.simulate(seed, config.warmup_days, config.sim_days);
    let profile = LoadProfile {
        step_min: config.step_min,
        samples: uw_to_profile(&run.power_uw, MICRO),
        meta: ProfileMeta {
            archetype: archetype.name.clone(),
            households: 1,
            seed,
        },
    };
    Ok(HouseholdSimulation {
        profile,
        run,
        clamp_count: prepared.clamp_count,
        rounded_cycles: prepared.rounded_cycles,
    })
}

/// Energy summary of one household in a fleet.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdSummary {
    pub index: u32,
    pub seed: u64,
    pub daily_kwh: f64,
    pub monthly_kwh: f64,
    pub starts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetStats {
    pub archetype: String,
    pub households: u32,
    pub sim_days: u32,
    pub mean_monthly_kwh: f64,
    pub sd_monthly_kwh: f64,
    pub se_monthly_kwh: f64,
    pub mean_daily_kwh: f64,
    pub se_daily_kwh: f64,
    pub clamp_count: usize,
    pub rounded_cycles: Vec<ApplianceKey>,
    /// Mean realized starts per household-day, per appliance.
    pub starts_per_day: Vec<(ApplianceKey, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetResult {
    pub mean_profile: LoadProfile,
    pub stats: FleetStats,
    pub households: Vec<HouseholdSummary>,
}

struct FleetAccumulator {
    sum_uw: Vec<u64>,
    summaries: Vec<HouseholdSummary>,
}

impl FleetAccumulator {
    fn new(len: usize) -> Self {
        FleetAccumulator {
            sum_uw: vec![0; len],
            summaries: Vec::new(),
        }
    }

    fn merge(mut self, other: FleetAccumulator) -> Self {
        for (a, b) in self.sum_uw.iter_mut().zip(&other.sum_uw) {
            *a += b;
        }
        self.summaries.extend(other.summaries);
        self
    }
}

/// Mean and sample standard deviation (`n - 1`), zero deviation for `n < 2`.
pub fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Simulates `config.households` households on independent substreams using
/// the current rayon pool.
pub fn simulate_fleet(
    archetype: &HouseholdArchetype,
    table: Option<&StartProbabilityTable>,
    config: &SimulationConfig,
) -> Result<FleetResult> {
    config.validate()?;
    let prepared = prepare(archetype, table, config)?;
    Ok(run_fleet(&prepared, config))
}

/// Same as [`simulate_fleet`] on a dedicated pool of `threads` workers.
pub fn simulate_fleet_with_threads(
    archetype: &HouseholdArchetype,
    table: Option<&StartProbabilityTable>,
    config: &SimulationConfig,
    threads: usize,
) -> Result<FleetResult> {
    config.validate()?;
    let prepared = prepare(archetype, table, config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::input(format!("thread pool: {e}")))?;
    Ok(pool.install(|| run_fleet(&prepared, config)))
}

fn run_fleet(prepared: &PreparedHousehold, config: &SimulationConfig) -> FleetResult {
    let len = config.sim_days as usize * prepared.steps_per_day();
    let step_h = prepared.step.hours();
    let days = f64::from(config.sim_days);
    let acc = (0..config.households)
        .into_par_iter()
        .map(|i| {
            let seed = derive_substream_seed(config.base_seed, u64::from(i));
            (i, seed, prepared.simulate(seed, config.warmup_days, config.sim_days))
        })
        .fold(
            || FleetAccumulator::new(len),
            |mut acc, (index, seed, run)| {
                for (a, b) in acc.sum_uw.iter_mut().zip(&run.power_uw) {
                    *a += b;
                }
                let kwh = run.total_uw_steps() as f64 * step_h / MICRO / 1000.0;
                let daily_kwh = kwh / days;
                acc.summaries.push(HouseholdSummary {
                    index,
                    seed,
                    daily_kwh,
                    monthly_kwh: daily_kwh * DAYS_PER_MONTH,
                    starts: run.ledger.iter().map(|l| l.starts).collect(),
                });
                acc
            },
        )
        .reduce(|| FleetAccumulator::new(len), FleetAccumulator::merge);

    let mut households = acc.summaries;
    households.sort_by_key(|h| h.index);
    let n = households.len() as f64;

    let monthly: Vec<f64> = households.iter().map(|h| h.monthly_kwh).collect();
    let (mean_monthly, sd_monthly) = mean_and_sd(&monthly);
    let se_monthly = sd_monthly / n.sqrt();

    let starts_per_day = prepared
        .appliances
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let total: u64 = households.iter().map(|h| h.starts[j]).sum();
            (a.key.clone(), total as f64 / (n * days))
        })
        .collect();

    let divisor = MICRO * f64::from(config.households);
    let mean_profile = LoadProfile {
        step_min: config.step_min,
        samples: uw_to_profile(&acc.sum_uw, divisor),
        meta: ProfileMeta {
            archetype: prepared.archetype.clone(),
            households: config.households,
            seed: config.base_seed,
        },
    };

    FleetResult {
        mean_profile,
        stats: FleetStats {
            archetype: prepared.archetype.clone(),
            households: config.households,
            sim_days: config.sim_days,
            mean_monthly_kwh: mean_monthly,
            sd_monthly_kwh: sd_monthly,
            se_monthly_kwh: se_monthly,
            mean_daily_kwh: mean_monthly / DAYS_PER_MONTH,
            se_daily_kwh: se_monthly / DAYS_PER_MONTH,
            clamp_count: prepared.clamp_count,
            rounded_cycles: prepared.rounded_cycles.clone(),
            starts_per_day,
        },
        households,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appliance::ApplianceSpec;
    use proptest::prelude::*;

    fn constant_table(name: &str, p: f64, step: u32) -> StartProbabilityTable {
        StartProbabilityTable::new("T", step, vec![(ApplianceKey::new(name, 1), [p; 24])]).unwrap()
    }

    fn single(name: &str, p_sat: f64, nominal: f64, standby: f64, cycle_min: u32) -> HouseholdArchetype {
        let spec = ApplianceSpec::new(name, 1, p_sat, nominal, standby, 1.0, cycle_min).unwrap();
        HouseholdArchetype::new("T", vec![spec]).unwrap()
    }

    #[test]
    fn step_examples() {
        assert_eq!(step_appliance(ApplianceState::OFF, 0.0, 0.0, 3), (ApplianceState::OFF, false));
        assert_eq!(step_appliance(ApplianceState::OFF, 1.0, 0.5, 3), (ApplianceState::on(3), true));
        assert_eq!(step_appliance(ApplianceState::on(1), 1.0, 0.0, 3), (ApplianceState::OFF, false));
        assert_eq!(step_appliance(ApplianceState::on(2), 0.0, 0.9, 3), (ApplianceState::on(1), true));
        // Strict comparison.
        assert!(!step_appliance(ApplianceState::OFF, 0.5, 0.5, 3).1);
    }

    #[test]
    fn cycle_draws_exactly_cycle_steps() {
        let mut state = ApplianceState::OFF;
        let mut active = Vec::new();
        for _ in 0..6 {
            let (next, a) = step_appliance(state, 1.0, 0.0, 3);
            state = next;
            active.push(a);
        }
        // On for 3 steps, switch-off step, then immediately restarts.
        assert_eq!(active, [true, true, true, false, true, true]);
    }

    #[test]
    fn seeds_are_deterministic_and_distinct() {
        assert_eq!(derive_substream_seed(7, 3), derive_substream_seed(7, 3));
        assert_ne!(derive_substream_seed(7, 0), derive_substream_seed(7, 1));
        let seeds: std::collections::HashSet<u64> =
            (0..10_000).map(|i| derive_substream_seed(42, i)).collect();
        assert_eq!(seeds.len(), 10_000);
    }

    #[test]
    fn standby_floor_only() {
        let arch = single("Refrigerator", 1.0, 110.0, 8.1, 12);
        let table = constant_table("Refrigerator", 0.0, 5);
        let cfg = SimulationConfig {
            sim_days: 2,
            ..Default::default()
        };
        let sim = simulate_household(&arch, Some(&table), &cfg, 1).unwrap();
        assert_eq!(sim.profile.len(), 2 * 288);
        assert!(sim.profile.samples.iter().all(|&v| v == 8.1));
        assert_eq!(sim.rounded_cycles, vec![ApplianceKey::new("Refrigerator", 1)]);
    }

    #[test]
    fn table_mode_requires_rows() {
        let arch = single("A", 1.0, 10.0, 0.0, 5);
        let table = constant_table("B", 0.1, 5);
        let cfg = SimulationConfig::default();
        assert!(simulate_household(&arch, Some(&table), &cfg, 1).is_err());
        assert!(simulate_household(&arch, None, &cfg, 1).is_err());
    }

    #[test]
    fn single_household_fleet_matches_household() {
        let arch = single("A", 1.0, 100.0, 2.0, 15);
        let table = constant_table("A", 0.05, 5);
        let cfg = SimulationConfig {
            households: 1,
            sim_days: 3,
            base_seed: 9,
            ..Default::default()
        };
        let fleet = simulate_fleet(&arch, Some(&table), &cfg).unwrap();
        let seed = derive_substream_seed(9, 0);
        let one = simulate_household(&arch, Some(&table), &cfg, seed).unwrap();
        assert_eq!(fleet.mean_profile.samples, one.profile.samples);
    }

    #[test]
    fn fleet_is_thread_count_independent() {
        let arch = single("A", 0.7, 1200.0, 3.0, 30);
        let table = constant_table("A", 0.01, 5);
        let cfg = SimulationConfig {
            households: 37,
            sim_days: 2,
            ..Default::default()
        };
        let one = simulate_fleet_with_threads(&arch, Some(&table), &cfg, 1).unwrap();
        let four = simulate_fleet_with_threads(&arch, Some(&table), &cfg, 4).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn two_state_chain_active_fraction() {
        // cycle = 1 step, constant p: renewal cycles of N draws + 1 switch-off step,
        // N geometric, so the long-run active fraction is p / (1 + p).
        let p = 0.3;
        let arch = single("A", 1.0, 1000.0, 0.0, 5);
        let table = constant_table("A", p, 5);
        let cfg = SimulationConfig {
            sim_days: 400,
            ..Default::default()
        };
        let sim = simulate_household(&arch, Some(&table), &cfg, 5).unwrap();
        let active: Vec<f64> = sim.run.power_uw.iter().map(|&w| (w > 0) as u8 as f64).collect();
        assert!(active.len() >= 100_000);
        let batch_means: Vec<f64> = active
            .chunks(active.len() / 100)
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect();
        let (mean, sd) = mean_and_sd(&batch_means);
        let se = sd / (batch_means.len() as f64).sqrt();
        let expected = p / (1.0 + p);
        assert!((mean - expected).abs() < 4.0 * se, "{mean} vs {expected} (se {se})");
    }

    #[test]
    fn bernoulli_presence_samples_ownership() {
        let arch = single("A", 0.5, 100.0, 10.0, 5);
        let table = constant_table("A", 0.0, 5);
        let cfg = SimulationConfig {
            households: 2000,
            sim_days: 1,
            warmup_days: 0,
            ownership_mode: OwnershipMode::BernoulliPresence,
            ..Default::default()
        };
        let fleet = simulate_fleet(&arch, Some(&table), &cfg).unwrap();
        let owners = fleet.households.iter().filter(|h| h.daily_kwh > 0.0).count() as f64;
        // Binomial(2000, 0.5): sd ~ 22.
        assert!((owners - 1000.0).abs() < 100.0, "{owners}");
        // Present appliances get full standby.
        assert!(fleet.households.iter().all(|h| h.daily_kwh == 0.0 || (h.daily_kwh - 0.24).abs() < 1e-12));
    }

    #[test]
    fn offtime_standby_excludes_active_steps() {
        let arch = single("A", 1.0, 100.0, 10.0, 5);
        let table = constant_table("A", 1.0, 5);
        let cfg = SimulationConfig {
            sim_days: 1,
            standby_mode: StandbyMode::OffTimeOnly,
            ..Default::default()
        };
        let sim = simulate_household(&arch, Some(&table), &cfg, 3).unwrap();
        for &v in &sim.profile.samples {
            assert!(v == 100.0 || v == 10.0, "{v}");
        }
    }

    #[test]
    fn day_mean_folds_days() {
        let p = LoadProfile::new(720, vec![1.0, 3.0, 3.0, 5.0], ProfileMeta::default());
        assert!(p.is_err(), "720 min is not a divisor of 60");
        let samples: Vec<f64> = (0..48).map(|i| i as f64).collect();
        let p = LoadProfile::new(60, samples, ProfileMeta::default()).unwrap();
        let m = p.day_mean().unwrap();
        assert_eq!(m.samples[0], 12.0);
        assert_eq!(m.samples[23], 35.0);
        let partial = LoadProfile::new(60, vec![1.0; 30], ProfileMeta::default()).unwrap();
        assert!(partial.day_mean().is_err());
    }

    fn arb_archetype() -> impl Strategy<Value = (HouseholdArchetype, StartProbabilityTable)> {
        let appliance = (
            0.0f64..=1.0,
            0.0f64..3000.0,
            0.0f64..20.0,
            1u32..200,
            prop::array::uniform24(0.0f64..0.2),
        );
        prop::collection::vec(appliance, 1..6).prop_map(|apps| {
            let mut specs = Vec::new();
            let mut rows = Vec::new();
            for (i, (p_sat, nominal, standby, cycle, row)) in apps.into_iter().enumerate() {
                let name = format!("App{i}");
                specs.push(ApplianceSpec::new(&name, 1, p_sat, nominal, standby, 1.0, cycle).unwrap());
                rows.push((ApplianceKey::new(name, 1), row));
            }
            (
                HouseholdArchetype::new("R", specs).unwrap(),
                StartProbabilityTable::new("R", 5, rows).unwrap(),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn continuous_standby_is_a_floor(
            (arch, table) in arb_archetype(),
            seed in any::<u64>(),
        ) {
            let cfg = SimulationConfig { sim_days: 1, ..Default::default() };
            let prepared = prepare(&arch, Some(&table), &cfg).unwrap();
            let floor: u64 = prepared.appliances.iter().map(|a| a.standby_uw).sum();
            let run = prepared.simulate(seed, 1, 1);
            prop_assert!(run.power_uw.iter().all(|&p| p >= floor));
        }
    }
}
