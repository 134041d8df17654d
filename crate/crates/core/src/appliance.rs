//! Appliance parameters, household archetypes and the per-step starting
//! probability.
//!
//! The starting probability of an appliance at a given hour is the product
//! of its hourly activity factor, its mean daily starting frequency, a step
//! scaling factor and its saturation level, clamped to `[0, 1]`. The step
//! factor is `step_min / 60`, so that summing the unclamped probability over
//! every step of a day gives back `f_per_day * p_sat` when the hourly
//! factors sum to one.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

pub const HOURS_PER_DAY: usize = 24;
pub const MINUTES_PER_HOUR: u32 = 60;

/// Relative deviation of a reconstructed hourly profile sum from 1 that gets flagged.
pub const HOURLY_SUM_FLAG_TOLERANCE: f64 = 0.05;

/// A validated computational time step: a positive divisor of 60 minutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StepMinutes(u32);

impl StepMinutes {
    pub fn new(minutes: u32) -> Result<Self> {
        if minutes == 0 || !MINUTES_PER_HOUR.is_multiple_of(minutes) {
            return Err(Error::input(format!(
                "step of {minutes} min is not a positive divisor of 60"
            )));
        }
        Ok(StepMinutes(minutes))
    }

    pub fn minutes(self) -> u32 {
        self.0
    }

    pub fn steps_per_hour(self) -> usize {
        (MINUTES_PER_HOUR / self.0) as usize
    }

    pub fn steps_per_day(self) -> usize {
        self.steps_per_hour() * HOURS_PER_DAY
    }

    /// Step length in hours.
    pub fn hours(self) -> f64 {
        f64::from(self.0) / f64::from(MINUTES_PER_HOUR)
    }

    /// Number of whole steps needed to cover `minutes`, rounding up.
    pub fn steps_covering(self, minutes: u32) -> u32 {
        minutes.div_ceil(self.0)
    }
}

impl fmt::Display for StepMinutes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} min", self.0)
    }
}

/// Identifies one appliance row of an archetype, e.g. the second "Lighting".
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ApplianceKey {
    pub name: String,
    pub instance: u32,
}

impl ApplianceKey {
    pub fn new(name: impl Into<String>, instance: u32) -> Self {
        ApplianceKey {
            name: name.into(),
            instance,
        }
    }
}

impl fmt::Display for ApplianceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.name, self.instance)
    }
}

/// Static parameters of one appliance in one household type.
#[derive(Debug, Clone, PartialEq)]
pub struct ApplianceSpec {
    pub name: String,
    pub instance: u32,
    /// Probability that a household of this type owns/uses the appliance.
    pub p_sat: f64,
    pub nominal_w: f64,
    pub standby_w: f64,
    /// Mean number of starts per day.
    pub f_per_day: f64,
    pub cycle_min: u32,
    /// Hourly activity factor, index 0 is 00:00-01:00.
    pub p_hour: [f64; HOURS_PER_DAY],
    /// When set, `p_hour` sums to one.
    pub p_hour_normalized: bool,
}

impl ApplianceSpec {
    /// Builds a spec with a flat hourly profile (1/24 every hour).
    pub fn new(
        name: impl Into<String>,
        instance: u32,
        p_sat: f64,
        nominal_w: f64,
        standby_w: f64,
        f_per_day: f64,
        cycle_min: u32,
    ) -> Result<Self> {
        let spec = ApplianceSpec {
            name: name.into(),
            instance,
            p_sat,
            nominal_w,
            standby_w,
            f_per_day,
            cycle_min,
            p_hour: [1.0 / HOURS_PER_DAY as f64; HOURS_PER_DAY],
            p_hour_normalized: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_p_hour(mut self, p_hour: [f64; HOURS_PER_DAY], normalized: bool) -> Result<Self> {
        self.p_hour = p_hour;
        self.p_hour_normalized = normalized;
        self.validate()?;
        Ok(self)
    }

    pub fn key(&self) -> ApplianceKey {
        ApplianceKey::new(self.name.clone(), self.instance)
    }

    pub fn validate(&self) -> Result<()> {
        let key = self.key();
        if self.name.trim().is_empty() {
            return Err(Error::input("appliance name is empty"));
        }
        if self.instance == 0 {
            return Err(Error::input(format!("{key}: instance must be positive")));
        }
        if !(0.0..=1.0).contains(&self.p_sat) {
            return Err(Error::input(format!(
                "{key}: p_sat {} outside [0, 1]",
                self.p_sat
            )));
        }
        for (label, value) in [
            ("nominal_w", self.nominal_w),
            ("standby_w", self.standby_w),
            ("f_per_day", self.f_per_day),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::input(format!("{key}: {label} {value} must be >= 0")));
            }
        }
        if self.cycle_min == 0 {
            return Err(Error::input(format!("{key}: cycle_min must be >= 1")));
        }
        if let Some(bad) = self.p_hour.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::input(format!("{key}: p_hour entry {bad} is negative")));
        }
        if self.p_hour_normalized {
            let sum: f64 = self.p_hour.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::input(format!(
                    "{key}: p_hour marked normalized but sums to {sum}"
                )));
            }
        }
        Ok(())
    }
}

/// A named flat type and its ordered appliance list.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdArchetype {
    pub name: String,
    pub appliances: Vec<ApplianceSpec>,
}

impl HouseholdArchetype {
    pub fn new(name: impl Into<String>, appliances: Vec<ApplianceSpec>) -> Result<Self> {
        let name = name.into();
        if appliances.is_empty() {
            return Err(Error::input(format!("archetype {name} has no appliances")));
        }
        let mut seen = HashSet::new();
        for spec in &appliances {
            spec.validate()?;
            if !seen.insert(spec.key()) {
                return Err(Error::input(format!(
                    "archetype {name}: duplicate appliance {}",
                    spec.key()
                )));
            }
        }
        Ok(HouseholdArchetype { name, appliances })
    }

    pub fn keys(&self) -> impl Iterator<Item = ApplianceKey> + '_ {
        self.appliances.iter().map(ApplianceSpec::key)
    }

    /// Replaces every appliance's hourly profile by the one recovered from
    /// `table`. Returns the keys whose recovered profile sum was flagged.
    pub fn with_hourly_from_table(
        &self,
        table: &StartProbabilityTable,
    ) -> Result<(HouseholdArchetype, Vec<ApplianceKey>)> {
        table.check_covers(self)?;
        let mut flagged = Vec::new();
        let mut appliances = Vec::with_capacity(self.appliances.len());
        for spec in &self.appliances {
            let key = spec.key();
            let row = table.row(&key).expect("coverage checked above");
            let rec = reconstruct_p_hour(row, spec.f_per_day, spec.p_sat, table.ref_step_min)?;
            if rec.flagged {
                flagged.push(key);
            }
            let normalized = (rec.sum - 1.0).abs() <= 1e-9;
            appliances.push(spec.clone().with_p_hour(rec.p_hour, normalized)?);
        }
        Ok((
            HouseholdArchetype {
                name: self.name.clone(),
                appliances,
            },
            flagged,
        ))
    }
}

/// Tabulated per-step starting probabilities for an archetype, valid at
/// `ref_step_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct StartProbabilityTable {
    pub archetype: String,
    pub ref_step_min: u32,
    pub rows: Vec<(ApplianceKey, [f64; HOURS_PER_DAY])>,
}

impl StartProbabilityTable {
    pub fn new(
        archetype: impl Into<String>,
        ref_step_min: u32,
        rows: Vec<(ApplianceKey, [f64; HOURS_PER_DAY])>,
    ) -> Result<Self> {
        let archetype = archetype.into();
        StepMinutes::new(ref_step_min)?;
        let mut seen = HashSet::new();
        for (key, row) in &rows {
            if !seen.insert(key.clone()) {
                return Err(Error::input(format!(
                    "table {archetype}: duplicate row {key}"
                )));
            }
            if let Some((h, v)) = row
                .iter()
                .enumerate()
                .find(|(_, v)| !(0.0..=1.0).contains(*v))
            {
                return Err(Error::input(format!(
                    "table {archetype}: {key} hour {} value {v} outside [0, 1]",
                    h + 1
                )));
            }
        }
        Ok(StartProbabilityTable {
            archetype,
            ref_step_min,
            rows,
        })
    }

    pub fn row(&self, key: &ApplianceKey) -> Option<&[f64; HOURS_PER_DAY]> {
        self.rows.iter().find(|(k, _)| k == key).map(|(_, r)| r)
    }

    /// Fails unless every appliance of `archetype` has a row here.
    pub fn check_covers(&self, archetype: &HouseholdArchetype) -> Result<()> {
        match archetype.keys().find(|k| self.row(k).is_none()) {
            Some(missing) => Err(Error::input(format!(
                "starting-probability table {} has no row for {missing}",
                self.archetype
            ))),
            None => Ok(()),
        }
    }
}

/// A starting probability together with whether it had to be clamped to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartProbability {
    pub value: f64,
    pub clamped: bool,
}

impl StartProbability {
    pub fn clamp(raw: f64) -> Self {
        if raw > 1.0 {
            StartProbability {
                value: 1.0,
                clamped: true,
            }
        } else if raw < 0.0 {
            StartProbability {
                value: 0.0,
                clamped: true,
            }
        } else {
            StartProbability {
                value: raw,
                clamped: false,
            }
        }
    }
}

/// Step scaling factor: `step_min / 60`.
pub fn compute_p_step(step_min: u32) -> Result<f64> {
    Ok(StepMinutes::new(step_min)?.hours())
}

/// Starting probability of `spec` during `hour` (1..=24) at the given step.
pub fn compute_p_start(spec: &ApplianceSpec, hour: usize, step_min: u32) -> Result<StartProbability> {
    let raw = unclamped_p_start(spec, hour, step_min)?;
    Ok(StartProbability::clamp(raw))
}

/// The raw product before clamping.
pub fn unclamped_p_start(spec: &ApplianceSpec, hour: usize, step_min: u32) -> Result<f64> {
    if !(1..=HOURS_PER_DAY).contains(&hour) {
        return Err(Error::input(format!("hour {hour} outside 1..=24")));
    }
    let p_step = compute_p_step(step_min)?;
    Ok(spec.p_hour[hour - 1] * spec.f_per_day * p_step * spec.p_sat)
}

/// Result of rescaling a table to a new step.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledTable {
    pub table: StartProbabilityTable,
    /// Number of entries that exceeded 1 and were clamped.
    pub clamped: usize,
}

/// Rescales every entry linearly from the table's reference step to `step_min`.
pub fn rescale_table(table: &StartProbabilityTable, step_min: u32) -> Result<RescaledTable> {
    StepMinutes::new(step_min)?;
    if step_min == table.ref_step_min {
        return Ok(RescaledTable {
            table: table.clone(),
            clamped: 0,
        });
    }
    let factor = f64::from(step_min) / f64::from(table.ref_step_min);
    let mut clamped = 0;
    let rows = table
        .rows
        .iter()
        .map(|(key, row)| {
            let mut out = [0.0; HOURS_PER_DAY];
            for (dst, src) in out.iter_mut().zip(row) {
                let p = StartProbability::clamp(src * factor);
                clamped += usize::from(p.clamped);
                *dst = p.value;
            }
            (key.clone(), out)
        })
        .collect();
    Ok(RescaledTable {
        table: StartProbabilityTable {
            archetype: table.archetype.clone(),
            ref_step_min: step_min,
            rows,
        },
        clamped,
    })
}

/// Hourly profile recovered from a tabulated row.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedHourly {
    pub p_hour: [f64; HOURS_PER_DAY],
    pub sum: f64,
    /// Set when `sum` deviates from 1 by more than [`HOURLY_SUM_FLAG_TOLERANCE`].
    pub flagged: bool,
}

/// Inverts the starting-probability product for one tabulated row.
pub fn reconstruct_p_hour(
    row: &[f64; HOURS_PER_DAY],
    f_per_day: f64,
    p_sat: f64,
    ref_step_min: u32,
) -> Result<ReconstructedHourly> {
    let denom = f_per_day * p_sat * compute_p_step(ref_step_min)?;
    if denom.is_nan() || denom <= 0.0 || !denom.is_finite() {
        return Err(Error::input(format!(
            "cannot reconstruct hourly profile: f * p_sat * p_step = {denom}"
        )));
    }
    let mut p_hour = [0.0; HOURS_PER_DAY];
    for (dst, src) in p_hour.iter_mut().zip(row) {
        *dst = src / denom;
    }
    let sum: f64 = p_hour.iter().sum();
    Ok(ReconstructedHourly {
        p_hour,
        sum,
        flagged: (sum - 1.0).abs() > HOURLY_SUM_FLAG_TOLERANCE,
    })
}
