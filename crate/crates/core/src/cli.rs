//! Command-line front end.
//!
//! [`run`] parses arguments and writes results to `stdout` (or `--out`) and
//! diagnostics to `stderr`. It returns the process exit code: 0 on success,
//! 1 when a `validate` comparison misses its tolerance, 2 on input or usage
//! errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytics::{
    clock, compare_to_benchmark, find_peaks, profile_error_metrics, BenchmarkKind, BenchmarkSet,
    SimulatedMonthly, ValidationReport,
};
use crate::appliance::{HouseholdArchetype, StartProbabilityTable};
use crate::data_io::{
    parse_appliance_tables, parse_pstart_tables, read_interval_csv, write_appliance_tables,
    write_benchmarks_csv, write_profile_csv, write_pstart_tables, FixtureLibrary,
};
use crate::engine::{
    simulate_fleet, simulate_fleet_with_threads, FleetResult, OwnershipMode, ProbabilitySource,
    SimulationConfig, StandbyMode,
};
use crate::error::{Error, Result};
use crate::oracle::{expected_daily_energy_exact, expected_monthly_energy_eq2};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "loadsim", version, about = "Bottom-up residential load profile simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a fleet and write its mean load profile as CSV.
    Simulate(SimulateArgs),
    /// Print exact expected energy next to the closed-form estimates.
    Expected(ExpectedArgs),
    /// Simulate a fleet and compare its monthly energy to a benchmark.
    Validate(ValidateArgs),
    /// Report the largest peak windows of the mean daily profile.
    Peaks(PeaksArgs),
    /// List or dump the shipped fixture tables.
    Fixtures(FixturesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Tabulated starting probabilities.
    Table,
    /// Starting probabilities computed from appliance parameters.
    Eq1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Ownership {
    Scaling,
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Standby {
    Continuous,
    Offtime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Benchmark {
    Ema,
    PaperSim,
}

impl From<Benchmark> for BenchmarkKind {
    fn from(b: Benchmark) -> Self {
        match b {
            Benchmark::Ema => BenchmarkKind::Ema,
            Benchmark::PaperSim => BenchmarkKind::PublishedSim,
        }
    }
}

/// Archetype selection and model options shared by every subcommand that
/// builds a household.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Archetype name: r12, r3, r4 or r5 (or a name from --appliances).
    #[arg(long)]
    pub archetype: String,
    #[arg(long, default_value_t = 5)]
    pub step_min: u32,
    #[arg(long, value_enum, default_value_t = Mode::Table)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t = Ownership::Scaling)]
    pub ownership: Ownership,
    #[arg(long, value_enum, default_value_t = Standby::Continuous)]
    pub standby: Standby,
    /// Appliance table replacing the shipped one.
    #[arg(long)]
    pub appliances: Option<PathBuf>,
    /// Starting-probability table replacing the shipped one.
    #[arg(long)]
    pub pstart: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FleetArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 30)]
    pub days: u32,
    #[arg(long, default_value_t = 100)]
    pub households: u32,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub warmup_days: u32,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub fleet: FleetArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExpectedArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub fleet: FleetArgs,
    #[arg(long, value_enum, default_value_t = Benchmark::Ema)]
    pub benchmark: Benchmark,
    /// Relative tolerance; defaults to 0.10 for ema and 0.05 for paper-sim.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, default_value_t = 30)]
    pub bin_min: u32,
    #[arg(long, default_value_t = 2)]
    pub top_k: usize,
    /// Measured interval CSV compared bin by bin with the mean simulated day.
    #[arg(long)]
    pub measured: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PeaksArgs {
    #[command(flatten)]
    pub fleet: FleetArgs,
    #[arg(long, default_value_t = 30)]
    pub bin_min: u32,
    #[arg(long, default_value_t = 2)]
    pub top_k: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    /// Write appliances.csv, pstart.csv and benchmarks.csv.
    #[arg(long)]
    pub dump: bool,
    /// Output directory for --dump; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first) and executes the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{rendered}");
                EXIT_OK
            };
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            // I/O and numerical failures share the input-error code.
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Simulate(a) => {
            let fleet = run_fleet(&a.fleet, stderr)?;
            emit(a.out.as_deref(), &write_profile_csv(&fleet.mean_profile), stdout)?;
        }
        Command::Expected(a) => {
            let text = expected_table(&a.model, stderr)?;
            emit(a.out.as_deref(), &text, stdout)?;
        }
        Command::Validate(a) => return validate(a, stdout, stderr),
        Command::Peaks(a) => {
            let fleet = run_fleet(&a.fleet, stderr)?;
            let day = fleet.mean_profile.day_mean()?;
            let peaks = find_peaks(&day, a.bin_min, a.top_k)?;
            let mut text = String::from("rank,start,end,mean_w\n");
            for (i, p) in peaks.iter().enumerate() {
                text.push_str(&format!(
                    "{},{},{},{:.3}\n",
                    i + 1,
                    clock(p.start_min),
                    clock(p.end_min),
                    p.mean_w
                ));
            }
            emit(a.out.as_deref(), &text, stdout)?;
        }
        Command::Fixtures(a) => fixtures(a, stdout)?,
    }
    Ok(EXIT_OK)
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

struct Model {
    archetype: HouseholdArchetype,
    table: Option<StartProbabilityTable>,
    config: SimulationConfig,
}

fn load_library(model: &ModelArgs) -> Result<FixtureLibrary> {
    let mut lib = FixtureLibrary::shipped()?;
    if let Some(path) = &model.appliances {
        lib.archetypes = parse_appliance_tables(&fs::read_to_string(path)?)?;
        // Shipped tables only make sense for shipped appliance lists.
        lib.tables.clear();
    }
    if let Some(path) = &model.pstart {
        lib.tables = parse_pstart_tables(&fs::read_to_string(path)?)?;
    }
    Ok(lib)
}

fn build_model(model: &ModelArgs, stderr: &mut dyn Write) -> Result<Model> {
    let lib = load_library(model)?;
    let archetype = lib.archetype(&model.archetype).cloned().ok_or_else(|| {
        Error::input(format!(
            "unknown archetype `{}`; expected one of: {}",
            model.archetype,
            lib.names()
                .iter()
                .map(|n| n.to_ascii_lowercase())
                .collect::<Vec<_>>()
                .join(", ")
        ))
    })?;
    let table = lib.table(&archetype.name).cloned();
    let config = SimulationConfig {
        step_min: model.step_min,
        probability_source: match model.mode {
            Mode::Table => ProbabilitySource::FromTable,
            Mode::Eq1 => ProbabilitySource::FromParameters,
        },
        ownership_mode: match model.ownership {
            Ownership::Scaling => OwnershipMode::ProbabilityScaling,
            Ownership::Bernoulli => OwnershipMode::BernoulliPresence,
        },
        standby_mode: match model.standby {
            Standby::Continuous => StandbyMode::Continuous,
            Standby::Offtime => StandbyMode::OffTimeOnly,
        },
        ..SimulationConfig::default()
    };
    config.step()?;
    let archetype = match (model.mode, &table) {
        (Mode::Eq1, Some(t)) => {
            let (a, flagged) = archetype.with_hourly_from_table(t)?;
            for key in flagged {
                let _ = writeln!(stderr, "warning: recovered hourly profile of {key} does not sum to 1");
            }
            a
        }
        (Mode::Eq1, None) => {
            let _ = writeln!(stderr, "warning: no table for {}; using uniform hourly profiles", archetype.name);
            archetype
        }
        (Mode::Table, _) => archetype,
    };
    Ok(Model {
        archetype,
        table,
        config,
    })
}

fn run_fleet(args: &FleetArgs, stderr: &mut dyn Write) -> Result<FleetResult> {
    let mut model = build_model(&args.model, stderr)?;
    model.config.sim_days = args.days;
    model.config.households = args.households;
    model.config.base_seed = args.seed;
    model.config.warmup_days = args.warmup_days;
    let fleet = if args.threads == 0 {
        simulate_fleet(&model.archetype, model.table.as_ref(), &model.config)?
    } else {
        simulate_fleet_with_threads(&model.archetype, model.table.as_ref(), &model.config, args.threads)?
    };
    let s = &fleet.stats;
    for key in &s.rounded_cycles {
        let _ = writeln!(
            stderr,
            "warning: cycle of {key} rounded up to a whole number of {}-minute steps",
            model.config.step_min
        );
    }
    if s.clamp_count > 0 {
        let _ = writeln!(stderr, "warning: {} starting probabilities clamped to 1", s.clamp_count);
    }
    let _ = writeln!(
        stderr,
        "{}: {} households x {} days, mean {:.2} kWh/month (sd {:.2}, se {:.2})",
        s.archetype, s.households, s.sim_days, s.mean_monthly_kwh, s.sd_monthly_kwh, s.se_monthly_kwh
    );
    Ok(fleet)
}

fn expected_table(args: &ModelArgs, stderr: &mut dyn Write) -> Result<String> {
    let model = build_model(args, stderr)?;
    let exact = expected_daily_energy_exact(&model.archetype, model.table.as_ref(), &model.config)?;
    let eq2 = expected_monthly_energy_eq2(&model.archetype);
    let mut s = String::from(
        "appliance,starts_per_day,exact_kwh_per_month,closed_form_86400_kwh_per_month,closed_form_3600_kwh_per_month\n",
    );
    for (e, c) in exact.per_appliance.iter().zip(&eq2.per_appliance) {
        s.push_str(&format!(
            "{},{:.4},{:.4},{:.4},{:.4}\n",
            e.key,
            e.expected_starts_per_day,
            e.total_kwh_per_day() * crate::engine::DAYS_PER_MONTH,
            c.corrected_kwh,
            c.literal_kwh
        ));
    }
    s.push_str(&format!(
        "TOTAL,{:.4},{:.4},{:.4},{:.4}\n",
        exact.per_appliance.iter().map(|e| e.expected_starts_per_day).sum::<f64>(),
        exact.total_kwh_per_month(),
        eq2.corrected_kwh(),
        eq2.literal_kwh()
    ));
    Ok(s)
}

fn validate(a: ValidateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let which = BenchmarkKind::from(a.benchmark);
    let tolerance = a.tolerance.unwrap_or_else(|| which.default_tolerance());
    let fleet = run_fleet(&a.fleet, stderr)?;
    let benchmarks = BenchmarkSet::shipped();
    let mut report: ValidationReport =
        compare_to_benchmark(&SimulatedMonthly::from(&fleet.stats), &benchmarks, which, tolerance)?;
    let day = fleet.mean_profile.day_mean()?;
    report.peaks = find_peaks(&day, a.bin_min, a.top_k)?;
    let mut text = report.to_text();
    if let Some(path) = &a.measured {
        let measured = read_interval_csv(&fs::read_to_string(path)?)?.day_mean()?;
        let m = profile_error_metrics(&day, &measured)?;
        text.push_str(&format!(
            "measured       {} bins of {} min, MAPE {:.2}%, RMSE {:.4} kWh, energy ratio {:.4}\n",
            m.bins, measured.bin_min, m.mape_pct, m.rmse_kwh, m.energy_ratio
        ));
    }
    emit(a.out.as_deref(), &text, stdout)?;
    Ok(if report.passed {
        EXIT_OK
    } else {
        EXIT_VALIDATION_FAILED
    })
}

fn fixtures(a: FixturesArgs, stdout: &mut dyn Write) -> Result<()> {
    let lib = FixtureLibrary::shipped()?;
    if !a.dump {
        let mut s = String::from("archetype,appliances,has_table,ema_kwh,published_sim_kwh\n");
        for arch in &lib.archetypes {
            let b = lib.benchmarks.get(&arch.name);
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                arch.name.to_ascii_lowercase(),
                arch.appliances.len(),
                lib.table(&arch.name).is_some(),
                b.map_or(String::new(), |b| b.ema_kwh.to_string()),
                b.map_or(String::new(), |b| b.published_sim_kwh.to_string()),
            ));
        }
        return emit(a.out.as_deref(), &s, stdout);
    }
    let files = [
        ("appliances.csv", write_appliance_tables(&lib.archetypes)),
        ("pstart.csv", write_pstart_tables(&lib.tables)),
        ("benchmarks.csv", write_benchmarks_csv(&lib.benchmarks)),
    ];
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for (name, text) in &files {
                fs::write(dir.join(name), text)?;
            }
        }
        None => {
            for (name, text) in &files {
                writeln!(stdout, "# {name}")?;
                stdout.write_all(text.as_bytes())?;
            }
        }
    }
    Ok(())
}
