//! CSV ingestion and emission for appliance tables, starting-probability
//! tables, load profiles and measured interval data, plus the shipped
//! fixture library.
//!
//! Parsers reject malformed input instead of repairing it. The only
//! substitution is `NA` (any case) in the `standby_w` column, read as 0 W.
//! Lines starting with `#` are comments. Decimals always use `.`.

use std::collections::HashSet;
use std::fmt::Write as _;

use csv::{ReaderBuilder, StringRecord, Trim};

use crate::analytics::{BenchmarkEntry, BenchmarkSet};
use crate::appliance::{
    ApplianceKey, ApplianceSpec, HouseholdArchetype, StartProbabilityTable, StepMinutes,
    HOURS_PER_DAY,
};
use crate::engine::{LoadProfile, ProfileMeta};
use crate::error::{Error, Result};

pub const APPLIANCE_HEADER: [&str; 8] = [
    "archetype",
    "appliance",
    "instance",
    "p_sat",
    "nominal_w",
    "standby_w",
    "f_per_day",
    "cycle_min",
];
pub const PSTART_FIXED_COLUMNS: [&str; 4] = ["archetype", "appliance", "instance", "ref_step_min"];
pub const PROFILE_HEADER: [&str; 2] = ["t_min", "power_w"];
pub const INTERVAL_HEADER: [&str; 2] = ["interval_start_min", "energy_kwh"];
pub const BENCHMARK_HEADER: [&str; 3] = ["archetype", "ema_kwh", "published_sim_kwh"];

/// Appliance parameters for every shipped archetype.
pub const APPLIANCES_CSV: &str = include_str!("../fixtures/appliances.csv");
/// Starting-probability tables for every shipped archetype.
pub const PSTART_CSV: &str = include_str!("../fixtures/pstart.csv");

fn pstart_header() -> Vec<String> {
    PSTART_FIXED_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((1..=HOURS_PER_DAY).map(|h| format!("h{h:02}")))
        .collect()
}

/// Record iterator that tracks line numbers and checks the header.
struct Records {
    name: &'static str,
    header: Vec<String>,
    rows: Vec<(u64, StringRecord)>,
}

impl Records {
    fn read(name: &'static str, text: &str, expected: &[String]) -> Result<Self> {
        let mut reader = ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .flexible(true)
            .trim(Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        let mut header = None;
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            if header.is_none() {
                let got: Vec<String> = rec.iter().map(str::to_string).collect();
                if got != expected {
                    return Err(Error::parse(
                        name,
                        line,
                        "header",
                        format!("expected `{}`, found `{}`", expected.join(","), got.join(",")),
                    ));
                }
                header = Some(got);
                continue;
            }
            if rec.len() != expected.len() {
                return Err(Error::parse(
                    name,
                    line,
                    "*",
                    format!("expected {} columns, found {}", expected.len(), rec.len()),
                ));
            }
            rows.push((line, rec));
        }
        let header = header.ok_or_else(|| Error::parse(name, 1, "header", "missing header row"))?;
        Ok(Records { name, header, rows })
    }

    fn field<'r>(&self, line: u64, rec: &'r StringRecord, col: usize) -> Result<&'r str> {
        let v = &rec[col];
        if v.is_empty() {
            return Err(Error::parse(self.name, line, self.header[col].clone(), "empty value"));
        }
        Ok(v)
    }

    fn float(&self, line: u64, rec: &StringRecord, col: usize) -> Result<f64> {
        let raw = self.field(line, rec, col)?;
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::parse(
                self.name,
                line,
                self.header[col].clone(),
                format!("`{raw}` is not a finite decimal number"),
            )),
        }
    }

    fn uint(&self, line: u64, rec: &StringRecord, col: usize) -> Result<u32> {
        let raw = self.field(line, rec, col)?;
        raw.parse::<u32>().map_err(|_| {
            Error::parse(
                self.name,
                line,
                self.header[col].clone(),
                format!("`{raw}` is not a non-negative integer"),
            )
        })
    }

    fn fail(&self, line: u64, col: usize, msg: impl std::fmt::Display) -> Error {
        Error::parse(self.name, line, self.header[col].clone(), msg)
    }
}

fn group_by_archetype<T>(items: Vec<(String, T)>) -> Vec<(String, Vec<T>)> {
    let mut groups: Vec<(String, Vec<T>)> = Vec::new();
    for (arch, item) in items {
        match groups.iter_mut().find(|(a, _)| *a == arch) {
            Some((_, v)) => v.push(item),
            None => groups.push((arch, vec![item])),
        }
    }
    groups
}

/// Parses an appliance table that may hold several archetypes, in order of
/// first appearance.
pub fn parse_appliance_tables(text: &str) -> Result<Vec<HouseholdArchetype>> {
    let header: Vec<String> = APPLIANCE_HEADER.iter().map(|s| s.to_string()).collect();
    let recs = Records::read("appliance table", text, &header)?;
    let mut seen = HashSet::new();
    let mut specs = Vec::new();
    for (line, rec) in &recs.rows {
        let line = *line;
        let archetype = recs.field(line, rec, 0)?.to_string();
        let name = recs.field(line, rec, 1)?.to_string();
        let instance = recs.uint(line, rec, 2)?;
        if instance == 0 {
            return Err(recs.fail(line, 2, "instance must be >= 1"));
        }
        let p_sat = recs.float(line, rec, 3)?;
        if !(0.0..=1.0).contains(&p_sat) {
            return Err(recs.fail(line, 3, format!("p_sat {p_sat} outside [0, 1]")));
        }
        let nominal_w = recs.float(line, rec, 4)?;
        let standby_w = if recs.field(line, rec, 5)?.eq_ignore_ascii_case("na") {
            0.0
        } else {
            recs.float(line, rec, 5)?
        };
        let f_per_day = recs.float(line, rec, 6)?;
        let cycle_min = recs.uint(line, rec, 7)?;
        for (col, v) in [(4, nominal_w), (5, standby_w), (6, f_per_day)] {
            if v < 0.0 {
                return Err(recs.fail(line, col, format!("{v} must be >= 0")));
            }
        }
        if cycle_min == 0 {
            return Err(recs.fail(line, 7, "cycle_min must be >= 1"));
        }
        if !seen.insert((archetype.clone(), name.clone(), instance)) {
            return Err(recs.fail(line, 1, format!("duplicate appliance {name}#{instance} in {archetype}")));
        }
        let spec = ApplianceSpec::new(name, instance, p_sat, nominal_w, standby_w, f_per_day, cycle_min)?;
        specs.push((archetype, spec));
    }
    group_by_archetype(specs)
        .into_iter()
        .map(|(name, apps)| HouseholdArchetype::new(name, apps))
        .collect()
}

/// Parses an appliance table holding exactly one archetype.
pub fn parse_appliance_table(text: &str) -> Result<HouseholdArchetype> {
    let mut all = parse_appliance_tables(text)?;
    match all.len() {
        0 => Err(Error::input("appliance table has no rows; an archetype needs at least one appliance")),
        1 => Ok(all.remove(0)),
        n => Err(Error::input(format!("appliance table holds {n} archetypes, expected one"))),
    }
}

/// Parses a starting-probability table that may hold several archetypes.
pub fn parse_pstart_tables(text: &str) -> Result<Vec<StartProbabilityTable>> {
    let recs = Records::read("starting-probability table", text, &pstart_header())?;
    let mut rows = Vec::new();
    for (line, rec) in &recs.rows {
        let line = *line;
        let archetype = recs.field(line, rec, 0)?.to_string();
        let name = recs.field(line, rec, 1)?.to_string();
        let instance = recs.uint(line, rec, 2)?;
        let ref_step = recs.uint(line, rec, 3)?;
        StepMinutes::new(ref_step).map_err(|e| recs.fail(line, 3, e))?;
        let mut values = [0.0; HOURS_PER_DAY];
        for (h, dst) in values.iter_mut().enumerate() {
            let v = recs.float(line, rec, 4 + h)?;
            if !(0.0..=1.0).contains(&v) {
                return Err(recs.fail(line, 4 + h, format!("{v} outside [0, 1]")));
            }
            *dst = v;
        }
        rows.push((archetype, (line, ref_step, ApplianceKey::new(name, instance), values)));
    }
    group_by_archetype(rows)
        .into_iter()
        .map(|(archetype, rows)| {
            let ref_step = rows[0].1;
            if let Some((line, step, ..)) = rows.iter().find(|r| r.1 != ref_step) {
                return Err(recs.fail(
                    *line,
                    3,
                    format!("{archetype}: ref_step_min {step} differs from {ref_step}"),
                ));
            }
            let rows = rows.into_iter().map(|(_, _, k, v)| (k, v)).collect();
            StartProbabilityTable::new(archetype, ref_step, rows)
        })
        .collect()
}

/// Parses a starting-probability table holding exactly one archetype.
pub fn parse_pstart_table(text: &str) -> Result<StartProbabilityTable> {
    let mut all = parse_pstart_tables(text)?;
    match all.len() {
        0 => Err(Error::input("starting-probability table has no rows")),
        1 => Ok(all.remove(0)),
        n => Err(Error::input(format!("starting-probability table holds {n} archetypes, expected one"))),
    }
}

pub fn write_appliance_tables(archetypes: &[HouseholdArchetype]) -> String {
    let mut out = APPLIANCE_HEADER.join(",");
    out.push('\n');
    for a in archetypes {
        for s in &a.appliances {
            let standby = if s.standby_w == 0.0 {
                "NA".to_string()
            } else {
                s.standby_w.to_string()
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                a.name, s.name, s.instance, s.p_sat, s.nominal_w, standby, s.f_per_day, s.cycle_min
            );
        }
    }
    out
}

pub fn write_pstart_tables(tables: &[StartProbabilityTable]) -> String {
    let mut out = pstart_header().join(",");
    out.push('\n');
    for t in tables {
        for (key, row) in &t.rows {
            let _ = write!(out, "{},{},{},{}", t.archetype, key.name, key.instance, t.ref_step_min);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_benchmarks_csv(set: &BenchmarkSet) -> String {
    let mut out = BENCHMARK_HEADER.join(",");
    out.push('\n');
    for e in &set.entries {
        let _ = writeln!(out, "{},{},{}", e.archetype, e.ema_kwh, e.published_sim_kwh);
    }
    out
}

pub fn parse_benchmarks_csv(text: &str) -> Result<BenchmarkSet> {
    let header: Vec<String> = BENCHMARK_HEADER.iter().map(|s| s.to_string()).collect();
    let recs = Records::read("benchmark table", text, &header)?;
    let entries = recs
        .rows
        .iter()
        .map(|(line, rec)| {
            Ok(BenchmarkEntry {
                archetype: recs.field(*line, rec, 0)?.to_string(),
                ema_kwh: recs.float(*line, rec, 1)?,
                published_sim_kwh: recs.float(*line, rec, 2)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    BenchmarkSet::new(entries)
}

/// Formats `v` with six significant digits in positional notation.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{:.5}", if v.is_finite() { 0.0 } else { v });
    }
    let digits = |x: f64| x.abs().log10().floor() as i32 + 1;
    let mut decimals = (6 - digits(v)).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // Rounding can carry into a new leading digit (999.9996 -> 1000.000).
    let rounded: f64 = s.parse().unwrap_or(v);
    if rounded != 0.0 && digits(rounded) > digits(v) && decimals > 0 {
        decimals -= 1;
        return format!("{v:.decimals$}");
    }
    s
}

/// Profile CSV: `t_min,power_w`, one row per step, six significant digits.
pub fn write_profile_csv(profile: &LoadProfile) -> String {
    let mut out = String::with_capacity(16 * (profile.len() + 1));
    out.push_str("t_min,power_w\n");
    for (i, v) in profile.samples.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i as u64 * u64::from(profile.step_min), format_sig6(*v));
    }
    out
}

/// Reads a profile CSV; the step is inferred from the first two rows.
pub fn read_profile_csv(text: &str) -> Result<LoadProfile> {
    let header: Vec<String> = PROFILE_HEADER.iter().map(|s| s.to_string()).collect();
    let recs = Records::read("profile", text, &header)?;
    let mut times = Vec::with_capacity(recs.rows.len());
    let mut samples = Vec::with_capacity(recs.rows.len());
    for (line, rec) in &recs.rows {
        times.push((*line, recs.uint(*line, rec, 0)?));
        let w = recs.float(*line, rec, 1)?;
        if w < 0.0 {
            return Err(recs.fail(*line, 1, format!("power {w} is negative")));
        }
        samples.push(w);
    }
    let step = uniform_spacing(&recs, &times, 0)?;
    StepMinutes::new(step).map_err(|e| recs.fail(times[1].0, 0, e))?;
    LoadProfile::new(step, samples, ProfileMeta::default())
}

fn uniform_spacing(recs: &Records, times: &[(u64, u32)], col: usize) -> Result<u32> {
    if times.len() < 2 {
        return Err(Error::input(format!(
            "{}: need at least two rows to infer the spacing",
            recs.name
        )));
    }
    let spacing = times[1].1.checked_sub(times[0].1).filter(|d| *d > 0).ok_or_else(|| {
        recs.fail(times[1].0, col, "times must increase")
    })?;
    if times[0].1 != 0 && col == 0 && recs.name == "profile" {
        return Err(recs.fail(times[0].0, col, "profile must start at t_min 0"));
    }
    for w in times.windows(2) {
        if w[1].1.checked_sub(w[0].1) != Some(spacing) {
            return Err(recs.fail(
                w[1].0,
                col,
                format!("spacing {} min differs from {spacing} min", i64::from(w[1].1) - i64::from(w[0].1)),
            ));
        }
    }
    Ok(spacing)
}

/// Measured interval energy, e.g. 30-minute smart-meter readings.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSeries {
    pub start_min: u32,
    pub bin_min: u32,
    pub energy_kwh: Vec<f64>,
}

impl IntervalSeries {
    pub fn duration_days(&self) -> f64 {
        self.energy_kwh.len() as f64 * f64::from(self.bin_min) / 1440.0
    }

    pub fn monthly_kwh(&self) -> f64 {
        self.energy_kwh.iter().sum::<f64>() / self.duration_days() * crate::engine::DAYS_PER_MONTH
    }

    /// Mean power per bin, as a profile sampled at the bin width.
    pub fn to_profile(&self) -> Result<LoadProfile> {
        let hours = f64::from(self.bin_min) / 60.0;
        LoadProfile::new(
            self.bin_min,
            self.energy_kwh.iter().map(|e| e * 1000.0 / hours).collect(),
            ProfileMeta::default(),
        )
    }

    /// Folds a whole number of days into one mean day.
    pub fn day_mean(&self) -> Result<IntervalSeries> {
        if self.bin_min == 0 || 1440 % self.bin_min != 0 {
            return Err(Error::input(format!("bin of {} min does not divide a day", self.bin_min)));
        }
        let per_day = (1440 / self.bin_min) as usize;
        if self.energy_kwh.is_empty() || !self.energy_kwh.len().is_multiple_of(per_day) {
            return Err(Error::input(format!(
                "{} bins are not a whole number of days",
                self.energy_kwh.len()
            )));
        }
        let days = (self.energy_kwh.len() / per_day) as f64;
        let mut mean = vec![0.0; per_day];
        for day in self.energy_kwh.chunks_exact(per_day) {
            for (m, v) in mean.iter_mut().zip(day) {
                *m += v / days;
            }
        }
        Ok(IntervalSeries {
            start_min: 0,
            bin_min: self.bin_min,
            energy_kwh: mean,
        })
    }
}

pub fn read_interval_csv(text: &str) -> Result<IntervalSeries> {
    let header: Vec<String> = INTERVAL_HEADER.iter().map(|s| s.to_string()).collect();
    let recs = Records::read("interval series", text, &header)?;
    let mut times = Vec::with_capacity(recs.rows.len());
    let mut energy = Vec::with_capacity(recs.rows.len());
    for (line, rec) in &recs.rows {
        times.push((*line, recs.uint(*line, rec, 0)?));
        let e = recs.float(*line, rec, 1)?;
        if e < 0.0 {
            return Err(recs.fail(*line, 1, format!("energy {e} is negative")));
        }
        energy.push(e);
    }
    let bin = uniform_spacing(&recs, &times, 0)?;
    Ok(IntervalSeries {
        start_min: times[0].1,
        bin_min: bin,
        energy_kwh: energy,
    })
}

pub fn write_interval_csv(series: &IntervalSeries) -> String {
    let mut out = INTERVAL_HEADER.join(",");
    out.push('\n');
    for (i, e) in series.energy_kwh.iter().enumerate() {
        let _ = writeln!(out, "{},{}", series.start_min + i as u32 * series.bin_min, e);
    }
    out
}

/// Shipped archetypes, starting-probability tables and benchmarks.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureLibrary {
    pub archetypes: Vec<HouseholdArchetype>,
    pub tables: Vec<StartProbabilityTable>,
    pub benchmarks: BenchmarkSet,
}

impl FixtureLibrary {
    pub fn shipped() -> Result<Self> {
        Self::from_csv(APPLIANCES_CSV, PSTART_CSV, BenchmarkSet::shipped())
    }

    pub fn from_csv(appliances: &str, pstart: &str, benchmarks: BenchmarkSet) -> Result<Self> {
        let archetypes = parse_appliance_tables(appliances)?;
        let tables = parse_pstart_tables(pstart)?;
        for a in &archetypes {
            if let Some(t) = tables.iter().find(|t| t.archetype == a.name) {
                t.check_covers(a)?;
                if t.rows.len() != a.appliances.len() {
                    return Err(Error::input(format!(
                        "table {} has {} rows for {} appliances",
                        t.archetype,
                        t.rows.len(),
                        a.appliances.len()
                    )));
                }
            }
        }
        Ok(FixtureLibrary {
            archetypes,
            tables,
            benchmarks,
        })
    }

    pub fn names(&self) -> Vec<&str> {
        self.archetypes.iter().map(|a| a.name.as_str()).collect()
    }

    pub fn archetype(&self, name: &str) -> Option<&HouseholdArchetype> {
        self.archetypes.iter().find(|a| a.name.eq_ignore_ascii_case(name))
    }

    pub fn table(&self, name: &str) -> Option<&StartProbabilityTable> {
        self.tables.iter().find(|t| t.archetype.eq_ignore_ascii_case(name))
    }
}
