//! Exact expected load without sampling.
//!
//! Each appliance is a finite Markov chain over `{Off, On(r) : r = 1..=cycle}`
//! whose transition probabilities repeat every day. The state distribution
//! is pushed through whole days until the start-of-day distribution stops
//! moving (periodic steady state), which matches the warm-up used by the
//! Monte Carlo engine. Blocking (an appliance cannot start while on) is
//! handled exactly by the chain.

use crate::appliance::{ApplianceKey, HouseholdArchetype, StartProbabilityTable};
use crate::engine::{prepare, ApplianceModel, PreparedHousehold, SimulationConfig, StandbyMode, DAYS_PER_MONTH};
use crate::error::{Error, Result};

/// Total-variation change of the start-of-day distribution below which the
/// chain is considered periodic-stationary.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-9;
pub const MAX_DAY_ITERATIONS: usize = 10_000;

/// Standby seconds per day charged by the corrected closed form.
pub const STANDBY_SECONDS_CORRECTED: f64 = 86_400.0;
/// Standby seconds per day as printed in the literal closed form.
pub const STANDBY_SECONDS_LITERAL: f64 = 3_600.0;
const JOULES_PER_KWH: f64 = 3.6e6;

/// Periodic steady-state behaviour of one appliance over a day.
#[derive(Debug, Clone, PartialEq)]
pub struct OnProbabilityProfile {
    /// Probability that the appliance draws nominal power, per step.
    pub on_probability: Vec<f64>,
    pub expected_starts_per_day: f64,
    pub day_iterations: usize,
}

impl OnProbabilityProfile {
    pub fn on_fraction(&self) -> f64 {
        self.on_probability.iter().sum::<f64>() / self.on_probability.len() as f64
    }
}

/// Distribution over `[Off, On(1), ..., On(cycle)]`.
struct ChainDay<'a> {
    p_by_step: &'a [f64],
    cycle: usize,
}

impl ChainDay<'_> {
    /// Pushes `dist` through one day; optionally records per-step on-probability.
    fn evolve(&self, dist: &mut Vec<f64>, scratch: &mut Vec<f64>, mut record: Option<&mut Vec<f64>>) -> f64 {
        let c = self.cycle;
        let mut starts = 0.0;
        for &p in self.p_by_step {
            let off = dist[0];
            let started = off * p;
            let still_on: f64 = dist[2..].iter().sum();
            if let Some(rec) = record.as_deref_mut() {
                rec.push(started + still_on);
            }
            starts += started;
            scratch.iter_mut().for_each(|v| *v = 0.0);
            scratch[0] = off - started + dist[1];
            for r in 2..=c {
                scratch[r - 1] += dist[r];
            }
            scratch[c] += started;
            std::mem::swap(dist, scratch);
        }
        starts
    }
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Exact per-step on-probability for a daily-periodic starting probability.
pub fn exact_on_probability(p_by_step: &[f64], cycle_steps: u32) -> Result<OnProbabilityProfile> {
    if p_by_step.is_empty() {
        return Err(Error::input("empty starting-probability day"));
    }
    if cycle_steps == 0 {
        return Err(Error::input("cycle must last at least one step"));
    }
    if let Some(bad) = p_by_step.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::input(format!("starting probability {bad} outside [0, 1]")));
    }
    let chain = ChainDay {
        p_by_step,
        cycle: cycle_steps as usize,
    };
    let n = chain.cycle + 1;
    let mut dist = vec![0.0; n];
    dist[0] = 1.0;
    let mut scratch = vec![0.0; n];
    let mut prev = dist.clone();
    for iteration in 1..=MAX_DAY_ITERATIONS {
        chain.evolve(&mut dist, &mut scratch, None);
        if total_variation(&dist, &prev) < CONVERGENCE_TOLERANCE {
            let mut on_probability = Vec::with_capacity(p_by_step.len());
            let expected_starts_per_day = chain.evolve(&mut dist, &mut scratch, Some(&mut on_probability));
            return Ok(OnProbabilityProfile {
                on_probability,
                expected_starts_per_day,
                day_iterations: iteration,
            });
        }
        prev.copy_from_slice(&dist);
    }
    Err(Error::Numerical(format!(
        "on-probability did not converge within {MAX_DAY_ITERATIONS} days"
    )))
}

/// Expected daily energy of one appliance.
#[derive(Debug, Clone, PartialEq)]
pub struct ApplianceExpectation {
    pub key: ApplianceKey,
    pub active_kwh_per_day: f64,
    pub standby_kwh_per_day: f64,
    /// Expected starts per household-day, presence included.
    pub expected_starts_per_day: f64,
    pub on: OnProbabilityProfile,
}

impl ApplianceExpectation {
    pub fn total_kwh_per_day(&self) -> f64 {
        self.active_kwh_per_day + self.standby_kwh_per_day
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedEnergy {
    pub archetype: String,
    pub per_appliance: Vec<ApplianceExpectation>,
}

impl ExpectedEnergy {
    pub fn total_kwh_per_day(&self) -> f64 {
        self.per_appliance.iter().map(ApplianceExpectation::total_kwh_per_day).sum()
    }

    pub fn total_kwh_per_month(&self) -> f64 {
        self.total_kwh_per_day() * DAYS_PER_MONTH
    }

    /// Expected household power per step of a day, in watts.
    pub fn expected_day_profile_w(&self, prepared: &PreparedHousehold) -> Vec<f64> {
        let spd = prepared.steps_per_day();
        let mut out = vec![0.0; spd];
        for (app, exp) in prepared.appliances.iter().zip(&self.per_appliance) {
            let nominal = app.nominal_uw as f64 / 1e6;
            let standby = app.standby_uw as f64 / 1e6;
            for (t, slot) in out.iter_mut().enumerate() {
                let on = exp.on.on_probability[t];
                let standby_share = match prepared.standby_mode {
                    StandbyMode::Continuous => 1.0,
                    StandbyMode::OffTimeOnly => 1.0 - on,
                };
                *slot += app.presence * (nominal * on + standby * standby_share);
            }
        }
        out
    }
}

/// Expected energy of one prepared appliance.
pub fn appliance_expectation(
    app: &ApplianceModel,
    step_hours: f64,
    standby_mode: StandbyMode,
) -> Result<ApplianceExpectation> {
    let on = exact_on_probability(&app.p_by_step, app.cycle_steps)?;
    let on_steps: f64 = on.on_probability.iter().sum();
    let steps = on.on_probability.len() as f64;
    let nominal_kw = app.nominal_uw as f64 / 1e9;
    let standby_kw = app.standby_uw as f64 / 1e9;
    let standby_steps = match standby_mode {
        StandbyMode::Continuous => steps,
        StandbyMode::OffTimeOnly => steps - on_steps,
    };
    Ok(ApplianceExpectation {
        key: app.key.clone(),
        active_kwh_per_day: app.presence * nominal_kw * on_steps * step_hours,
        standby_kwh_per_day: app.presence * standby_kw * standby_steps * step_hours,
        expected_starts_per_day: app.presence * on.expected_starts_per_day,
        on,
    })
}

/// Exact expected daily energy of a prepared household.
pub fn expected_energy_prepared(prepared: &PreparedHousehold) -> Result<ExpectedEnergy> {
    let step_h = prepared.step.hours();
    let per_appliance = prepared
        .appliances
        .iter()
        .map(|a| appliance_expectation(a, step_h, prepared.standby_mode))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExpectedEnergy {
        archetype: prepared.archetype.clone(),
        per_appliance,
    })
}

/// Exact expected daily energy per appliance and in total.
pub fn expected_daily_energy_exact(
    archetype: &HouseholdArchetype,
    table: Option<&StartProbabilityTable>,
    config: &SimulationConfig,
) -> Result<ExpectedEnergy> {
    let prepared = prepare(archetype, table, config)?;
    expected_energy_prepared(&prepared)
}

/// Closed-form monthly energy of one appliance.
#[derive(Debug, Clone, PartialEq)]
pub struct Eq2Appliance {
    pub key: ApplianceKey,
    pub corrected_kwh: f64,
    pub literal_kwh: f64,
}

/// Closed-form monthly energy, ignoring blocking.
///
/// `corrected` charges 24 h of standby per day; `literal` charges the one
/// hour of standby seconds the printed formula uses. Both weight each
/// appliance by its saturation.
#[derive(Debug, Clone, PartialEq)]
pub struct Eq2Energy {
    pub archetype: String,
    pub per_appliance: Vec<Eq2Appliance>,
}

impl Eq2Energy {
    pub fn corrected_kwh(&self) -> f64 {
        self.per_appliance.iter().map(|a| a.corrected_kwh).sum()
    }

    pub fn literal_kwh(&self) -> f64 {
        self.per_appliance.iter().map(|a| a.literal_kwh).sum()
    }
}

fn monthly_closed_form(standby_seconds: f64, p_sat: f64, standby_w: f64, f: f64, nominal_w: f64, cycle_min: u32) -> f64 {
    let joules_per_day = standby_seconds * standby_w + f * nominal_w * f64::from(cycle_min) * 60.0;
    DAYS_PER_MONTH * p_sat * joules_per_day / JOULES_PER_KWH
}

pub fn expected_monthly_energy_eq2(archetype: &HouseholdArchetype) -> Eq2Energy {
    let per_appliance = archetype
        .appliances
        .iter()
        .map(|s| Eq2Appliance {
            key: s.key(),
            corrected_kwh: monthly_closed_form(
                STANDBY_SECONDS_CORRECTED,
                s.p_sat,
                s.standby_w,
                s.f_per_day,
                s.nominal_w,
                s.cycle_min,
            ),
            literal_kwh: monthly_closed_form(
                STANDBY_SECONDS_LITERAL,
                s.p_sat,
                s.standby_w,
                s.f_per_day,
                s.nominal_w,
                s.cycle_min,
            ),
        })
        .collect();
    Eq2Energy {
        archetype: archetype.name.clone(),
        per_appliance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appliance::ApplianceSpec;

    #[test]
    fn zero_probability_never_on() {
        let on = exact_on_probability(&[0.0; 288], 3).unwrap();
        assert!(on.on_probability.iter().all(|&p| p == 0.0));
        assert_eq!(on.expected_starts_per_day, 0.0);
    }

    #[test]
    fn two_state_closed_form() {
        for p in [1e-4, 0.01, 0.3, 0.5, 0.9] {
            let on = exact_on_probability(&[p; 288], 1).unwrap();
            for &v in &on.on_probability {
                assert!((v - p / (1.0 + p)).abs() < 1e-12, "p={p}: {v}");
            }
        }
        // p = 1 alternates on and off, so only the day average is 1/2.
        let on = exact_on_probability(&[1.0; 288], 1).unwrap();
        assert!((on.on_fraction() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn longer_cycle_closed_form() {
        // Constant p, cycle c: renewal of geometric draws, c on-steps and one
        // switch-off step, so on-fraction = c p / (1 + c p) in steady state.
        let (p, c) = (0.05, 4u32);
        let on = exact_on_probability(&[p; 288], c).unwrap();
        let expected = c as f64 * p / (1.0 + c as f64 * p);
        assert!((on.on_fraction() - expected).abs() < 1e-9);
    }

    #[test]
    fn converged_profile_is_a_fixed_point() {
        let p: Vec<f64> = (0..288).map(|t| 0.2 * ((t as f64) / 288.0 * std::f64::consts::TAU).sin().abs()).collect();
        let a = exact_on_probability(&p, 6).unwrap();
        let mut twice = p.clone();
        twice.extend_from_slice(&p);
        let b = exact_on_probability(&twice, 6).unwrap();
        for t in 0..288 {
            assert!((a.on_probability[t] - b.on_probability[t + 288]).abs() < 1e-9);
        }
    }

    #[test]
    fn blocking_reduces_starts() {
        let p = [0.140738; 288];
        let on = exact_on_probability(&p, 3).unwrap();
        assert!(on.expected_starts_per_day < 0.140738 * 288.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(exact_on_probability(&[], 1).is_err());
        assert!(exact_on_probability(&[0.1], 0).is_err());
        assert!(exact_on_probability(&[1.5], 1).is_err());
    }

    fn fridge(p_sat: f64) -> ApplianceSpec {
        ApplianceSpec::new("Refrigerator", 1, p_sat, 110.0, 8.1, 40.5, 12).unwrap()
    }

    #[test]
    fn eq2_refrigerator() {
        let arch = HouseholdArchetype::new("F", vec![fridge(1.0)]).unwrap();
        let e = expected_monthly_energy_eq2(&arch);
        // (86400 * 8.1 + 40.5 * 110 * 720) * 30 / 3.6e6
        assert!((e.corrected_kwh() - 32.562).abs() < 1e-9, "{}", e.corrected_kwh());
        // (3600 * 8.1 + 40.5 * 110 * 720) * 30 / 3.6e6
        assert!((e.literal_kwh() - 26.973).abs() < 1e-9, "{}", e.literal_kwh());
    }

    #[test]
    fn eq2_microwave_and_zero() {
        let mw = ApplianceSpec::new("Microwave oven", 1, 0.93, 1500.0, 0.0, 5.0, 5).unwrap();
        let arch = HouseholdArchetype::new("M", vec![mw]).unwrap();
        assert!((expected_monthly_energy_eq2(&arch).corrected_kwh() - 17.4375).abs() < 1e-9);

        let zero = ApplianceSpec::new("Z", 1, 0.0, 0.0, 0.0, 0.0, 1).unwrap();
        let arch = HouseholdArchetype::new("Z", vec![zero]).unwrap();
        assert_eq!(expected_monthly_energy_eq2(&arch).corrected_kwh(), 0.0);
    }

    #[test]
    fn refrigerator_standby_is_exact() {
        let arch = HouseholdArchetype::new("F", vec![fridge(1.0)]).unwrap();
        let cfg = SimulationConfig {
            probability_source: crate::engine::ProbabilitySource::FromParameters,
            ..Default::default()
        };
        let e = expected_daily_energy_exact(&arch, None, &cfg).unwrap();
        assert!((e.per_appliance[0].standby_kwh_per_day - 0.1944).abs() < 1e-12);
    }

    #[test]
    fn totals_are_linear_in_appliances() {
        let mut b = fridge(0.5);
        b.instance = 2;
        let both = HouseholdArchetype::new("F", vec![fridge(1.0), b.clone()]).unwrap();
        let cfg = SimulationConfig {
            probability_source: crate::engine::ProbabilitySource::FromParameters,
            ..Default::default()
        };
        let total = expected_daily_energy_exact(&both, None, &cfg).unwrap().total_kwh_per_day();
        let a = expected_daily_energy_exact(&HouseholdArchetype::new("F", vec![fridge(1.0)]).unwrap(), None, &cfg)
            .unwrap()
            .total_kwh_per_day();
        let b = expected_daily_energy_exact(&HouseholdArchetype::new("F", vec![b]).unwrap(), None, &cfg)
            .unwrap()
            .total_kwh_per_day();
        assert!((total - (a + b)).abs() < 1e-12);
    }
}
