//! Python bindings: fleet simulation, exact expectation, closed-form
//! estimates and peak analysis over the shipped archetypes.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use loadsim::analytics;
use loadsim::appliance::{self, ApplianceSpec, HouseholdArchetype, StartProbabilityTable, HOURS_PER_DAY};
use loadsim::engine::{self, ApplianceState, LoadProfile, OwnershipMode, ProbabilitySource, SimulationConfig, StandbyMode};
use loadsim::{oracle, FixtureLibrary};

fn py_err(e: loadsim::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn config(step_min: u32, mode: &str, ownership: &str, standby: &str) -> PyResult<SimulationConfig> {
    let probability_source = match mode {
        "table" => ProbabilitySource::FromTable,
        "eq1" => ProbabilitySource::FromParameters,
        m => return Err(PyValueError::new_err(format!("mode must be 'table' or 'eq1', got {m:?}"))),
    };
    let ownership_mode = match ownership {
        "scaling" => OwnershipMode::ProbabilityScaling,
        "bernoulli" => OwnershipMode::BernoulliPresence,
        o => return Err(PyValueError::new_err(format!("ownership must be 'scaling' or 'bernoulli', got {o:?}"))),
    };
    let standby_mode = match standby {
        "continuous" => StandbyMode::Continuous,
        "offtime" => StandbyMode::OffTimeOnly,
        s => return Err(PyValueError::new_err(format!("standby must be 'continuous' or 'offtime', got {s:?}"))),
    };
    Ok(SimulationConfig {
        step_min,
        probability_source,
        ownership_mode,
        standby_mode,
        ..SimulationConfig::default()
    })
}

/// Shipped archetype and table, with hourly profiles recovered for eq1 mode.
fn shipped(name: &str, cfg: &SimulationConfig) -> PyResult<(HouseholdArchetype, Option<StartProbabilityTable>)> {
    let lib = FixtureLibrary::shipped().map_err(py_err)?;
    let arch = lib
        .archetype(name)
        .cloned()
        .ok_or_else(|| PyValueError::new_err(format!("unknown archetype {name:?}; expected r12, r3, r4 or r5")))?;
    let table = lib.table(name).cloned();
    let arch = match (&cfg.probability_source, &table) {
        (ProbabilitySource::FromParameters, Some(t)) => arch.with_hourly_from_table(t).map_err(py_err)?.0,
        _ => arch,
    };
    Ok((arch, table))
}

/// Names of the shipped archetypes.
#[pyfunction]
fn archetypes() -> PyResult<Vec<String>> {
    let lib = FixtureLibrary::shipped().map_err(py_err)?;
    Ok(lib.names().iter().map(|n| n.to_ascii_lowercase()).collect())
}

/// Per-step starting probability of one appliance at `hour` (1..=24).
#[pyfunction]
#[pyo3(signature = (f_per_day, p_sat, hour, step_min=5, p_hour=None, cycle_min=1, nominal_w=0.0))]
fn compute_p_start(
    f_per_day: f64,
    p_sat: f64,
    hour: usize,
    step_min: u32,
    p_hour: Option<Vec<f64>>,
    cycle_min: u32,
    nominal_w: f64,
) -> PyResult<f64> {
    let mut spec = ApplianceSpec::new("appliance", 1, p_sat, nominal_w, 0.0, f_per_day, cycle_min).map_err(py_err)?;
    if let Some(p) = p_hour {
        let arr: [f64; HOURS_PER_DAY] = p
            .try_into()
            .map_err(|v: Vec<f64>| PyValueError::new_err(format!("p_hour needs 24 values, got {}", v.len())))?;
        let normalized = (arr.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        spec = spec.with_p_hour(arr, normalized).map_err(py_err)?;
    }
    Ok(appliance::compute_p_start(&spec, hour, step_min).map_err(py_err)?.value)
}

/// One step of the appliance state machine. `remaining` is 0 when Off.
/// Returns the next `remaining` and whether the appliance drew nominal power.
#[pyfunction]
fn step_appliance(remaining: u32, p: f64, u: f64, cycle_steps: u32) -> (u32, bool) {
    let state = if remaining == 0 { ApplianceState::OFF } else { ApplianceState::on(remaining) };
    let (next, active) = engine::step_appliance(state, p, u, cycle_steps);
    (next.remaining_steps, active)
}

#[pyclass(frozen, get_all)]
struct FleetSummary {
    archetype: String,
    households: u32,
    days: u32,
    step_min: u32,
    mean_monthly_kwh: f64,
    se_monthly_kwh: f64,
    mean_daily_kwh: f64,
    clamp_count: usize,
    /// Fleet mean power, W, one value per step.
    profile: Vec<f64>,
}

#[pymethods]
impl FleetSummary {
    fn __repr__(&self) -> String {
        format!(
            "FleetSummary(archetype={:?}, households={}, days={}, mean_monthly_kwh={:.3}, se_monthly_kwh={:.3})",
            self.archetype, self.households, self.days, self.mean_monthly_kwh, self.se_monthly_kwh
        )
    }
}

/// Simulates a fleet of households of a shipped archetype.
#[pyfunction]
#[pyo3(signature = (archetype, days=30, households=100, seed=42, step_min=5, warmup_days=1, mode="table", ownership="scaling", standby="continuous"))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    archetype: &str,
    days: u32,
    households: u32,
    seed: u64,
    step_min: u32,
    warmup_days: u32,
    mode: &str,
    ownership: &str,
    standby: &str,
) -> PyResult<FleetSummary> {
    let mut cfg = config(step_min, mode, ownership, standby)?;
    cfg.sim_days = days;
    cfg.households = households;
    cfg.base_seed = seed;
    cfg.warmup_days = warmup_days;
    let (arch, table) = shipped(archetype, &cfg)?;
    let fleet = py
        .detach(|| engine::simulate_fleet(&arch, table.as_ref(), &cfg))
        .map_err(py_err)?;
    let s = fleet.stats;
    Ok(FleetSummary {
        archetype: s.archetype,
        households: s.households,
        days: s.sim_days,
        step_min,
        mean_monthly_kwh: s.mean_monthly_kwh,
        se_monthly_kwh: s.se_monthly_kwh,
        mean_daily_kwh: s.mean_daily_kwh,
        clamp_count: s.clamp_count,
        profile: fleet.mean_profile.samples,
    })
}

type ExpectedTuple = (f64, f64, Vec<(String, f64)>);

/// Exact expected energy: (kWh per day, kWh per month, [(appliance, kWh per day)]).
#[pyfunction]
#[pyo3(signature = (archetype, step_min=5, mode="table", ownership="scaling", standby="continuous"))]
fn expected(
    archetype: &str,
    step_min: u32,
    mode: &str,
    ownership: &str,
    standby: &str,
) -> PyResult<ExpectedTuple> {
    let cfg = config(step_min, mode, ownership, standby)?;
    let (arch, table) = shipped(archetype, &cfg)?;
    let e = oracle::expected_daily_energy_exact(&arch, table.as_ref(), &cfg).map_err(py_err)?;
    let per = e
        .per_appliance
        .iter()
        .map(|a| (a.key.to_string(), a.total_kwh_per_day()))
        .collect();
    Ok((e.total_kwh_per_day(), e.total_kwh_per_month(), per))
}

/// Closed-form monthly energy: (86400 s standby variant, 3600 s variant).
#[pyfunction]
fn eq2(archetype: &str) -> PyResult<(f64, f64)> {
    let (arch, _) = shipped(archetype, &SimulationConfig::default())?;
    let e = oracle::expected_monthly_energy_eq2(&arch);
    Ok((e.corrected_kwh(), e.literal_kwh()))
}

fn profile(samples: Vec<f64>, step_min: u32) -> PyResult<LoadProfile> {
    LoadProfile::new(step_min, samples, Default::default()).map_err(py_err)
}

/// Mean daily energy of a power profile (W per step) times 30, kWh.
#[pyfunction]
#[pyo3(signature = (samples, step_min=5))]
fn monthly(samples: Vec<f64>, step_min: u32) -> PyResult<f64> {
    analytics::monthly_from_profile(&profile(samples, step_min)?).map_err(py_err)
}

/// Top peak windows of a one-day profile as (start_min, end_min, mean_w).
#[pyfunction]
#[pyo3(signature = (samples, step_min=5, bin_min=30, top_k=2))]
fn find_peaks(samples: Vec<f64>, step_min: u32, bin_min: u32, top_k: usize) -> PyResult<Vec<(u32, u32, f64)>> {
    let peaks = analytics::find_peaks(&profile(samples, step_min)?, bin_min, top_k).map_err(py_err)?;
    Ok(peaks.into_iter().map(|p| (p.start_min, p.end_min, p.mean_w)).collect())
}

#[pymodule]
fn loadsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<FleetSummary>()?;
    m.add_function(wrap_pyfunction!(archetypes, m)?)?;
    m.add_function(wrap_pyfunction!(compute_p_start, m)?)?;
    m.add_function(wrap_pyfunction!(step_appliance, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(expected, m)?)?;
    m.add_function(wrap_pyfunction!(eq2, m)?)?;
    m.add_function(wrap_pyfunction!(monthly, m)?)?;
    m.add_function(wrap_pyfunction!(find_peaks, m)?)?;
    Ok(())
}
