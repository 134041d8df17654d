//! Monthly energy, peak windows, benchmark comparison and
//! model-versus-measured error metrics.

use std::fmt;

use crate::data_io::IntervalSeries;
use crate::engine::{FleetStats, LoadProfile, DAYS_PER_MONTH};
use crate::error::{Error, Result};

pub const MINUTES_PER_DAY: u32 = 24 * 60;
pub const DEFAULT_EMA_TOLERANCE: f64 = 0.10;
pub const DEFAULT_PUBLISHED_SIM_TOLERANCE: f64 = 0.05;

/// Mean daily energy of `profile` times 30, in kWh.
pub fn monthly_from_profile(profile: &LoadProfile) -> Result<f64> {
    if profile.is_empty() {
        return Err(Error::input("cannot compute monthly energy of an empty profile"));
    }
    Ok(profile.energy_kwh() / profile.duration_days() * DAYS_PER_MONTH)
}

/// Mean power per `bin_min` bin.
pub fn rebin(profile: &LoadProfile, bin_min: u32) -> Result<Vec<f64>> {
    if bin_min == 0 || !bin_min.is_multiple_of(profile.step_min) {
        return Err(Error::input(format!(
            "bin of {bin_min} min is not a multiple of the {} min step",
            profile.step_min
        )));
    }
    let per_bin = (bin_min / profile.step_min) as usize;
    if !profile.samples.len().is_multiple_of(per_bin) {
        return Err(Error::input(format!(
            "{} samples do not fill whole {bin_min} min bins",
            profile.samples.len()
        )));
    }
    Ok(profile
        .samples
        .chunks_exact(per_bin)
        .map(|c| c.iter().sum::<f64>() / per_bin as f64)
        .collect())
}

/// A peak window, in minutes from the start of the profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Peak {
    pub start_min: u32,
    /// Exclusive end; may exceed the profile length for a window that wraps.
    pub end_min: u32,
    pub mean_w: f64,
}

/// `HH:MM` time of day of a minute offset.
pub fn clock(min: u32) -> String {
    let m = min % MINUTES_PER_DAY;
    format!("{:02}:{:02}", m / 60, m % 60)
}

impl fmt::Display for Peak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{} {:.1} W",
            clock(self.start_min),
            clock(self.end_min),
            self.mean_w
        )
    }
}

/// Top `top_k` strict local maxima of the rebinned profile, treated as
/// cyclic, ordered by magnitude and then by start time.
///
/// A run of equal bins counts as one candidate whose neighbours are the bins
/// just outside the run; it is a peak when it is strictly greater than both.
pub fn find_peaks(profile: &LoadProfile, bin_min: u32, top_k: usize) -> Result<Vec<Peak>> {
    let bins = rebin(profile, bin_min)?;
    let n = bins.len();
    let Some(anchor) = (0..n).find(|&i| bins[i] != bins[(i + n - 1) % n]) else {
        return Ok(Vec::new());
    };
    let mut peaks = Vec::new();
    let mut i = anchor;
    loop {
        let value = bins[i];
        let mut len = 1;
        while bins[(i + len) % n] == value {
            len += 1;
        }
        let left = bins[(i + n - 1) % n];
        let right = bins[(i + len) % n];
        if value > left && value > right {
            let start_min = i as u32 * bin_min;
            peaks.push(Peak {
                start_min,
                end_min: start_min + len as u32 * bin_min,
                mean_w: value,
            });
        }
        i = (i + len) % n;
        if i == anchor {
            break;
        }
    }
    peaks.sort_by(|a, b| b.mean_w.total_cmp(&a.mean_w).then(a.start_min.cmp(&b.start_min)));
    peaks.truncate(top_k);
    Ok(peaks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkKind {
    /// Utility-statistics average monthly consumption.
    Ema,
    /// Previously published simulated monthly consumption.
    PublishedSim,
}

impl BenchmarkKind {
    pub fn label(self) -> &'static str {
        match self {
            BenchmarkKind::Ema => "ema",
            BenchmarkKind::PublishedSim => "paper-sim",
        }
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            BenchmarkKind::Ema => DEFAULT_EMA_TOLERANCE,
            BenchmarkKind::PublishedSim => DEFAULT_PUBLISHED_SIM_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkEntry {
    pub archetype: String,
    pub ema_kwh: f64,
    pub published_sim_kwh: f64,
}

/// Reference monthly consumption per archetype.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSet {
    pub entries: Vec<BenchmarkEntry>,
}

impl BenchmarkSet {
    pub fn new(entries: Vec<BenchmarkEntry>) -> Result<Self> {
        for e in &entries {
            if !(e.ema_kwh > 0.0 && e.published_sim_kwh > 0.0) {
                return Err(Error::input(format!(
                    "benchmark {} must have positive values",
                    e.archetype
                )));
            }
        }
        Ok(BenchmarkSet { entries })
    }

    /// Utility averages and published simulated values for the four flat types.
    pub fn shipped() -> Self {
        let entry = |a: &str, ema, sim| BenchmarkEntry {
            archetype: a.to_string(),
            ema_kwh: ema,
            published_sim_kwh: sim,
        };
        BenchmarkSet {
            entries: vec![
                entry("R12", 153.8, 148.4),
                entry("R3", 278.2, 284.2),
                entry("R4", 379.6, 347.7),
                entry("R5", 465.0, 447.8),
            ],
        }
    }

    pub fn get(&self, archetype: &str) -> Option<&BenchmarkEntry> {
        self.entries
            .iter()
            .find(|e| e.archetype.eq_ignore_ascii_case(archetype))
    }

    pub fn value(&self, archetype: &str, which: BenchmarkKind) -> Result<f64> {
        let e = self
            .get(archetype)
            .ok_or_else(|| Error::input(format!("no benchmark for archetype {archetype}")))?;
        Ok(match which {
            BenchmarkKind::Ema => e.ema_kwh,
            BenchmarkKind::PublishedSim => e.published_sim_kwh,
        })
    }
}

/// A simulated monthly value to compare against a benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedMonthly {
    pub archetype: String,
    pub mean_kwh: f64,
    pub standard_error_kwh: f64,
    pub clamp_count: usize,
}

impl From<&FleetStats> for SimulatedMonthly {
    fn from(s: &FleetStats) -> Self {
        SimulatedMonthly {
            archetype: s.archetype.clone(),
            mean_kwh: s.mean_monthly_kwh,
            standard_error_kwh: s.se_monthly_kwh,
            clamp_count: s.clamp_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub archetype: String,
    pub simulated_kwh: f64,
    pub standard_error_kwh: f64,
    pub benchmark: BenchmarkKind,
    pub benchmark_kwh: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub clamp_count: usize,
    pub peaks: Vec<Peak>,
}

pub fn relative_error(simulated: f64, benchmark: f64) -> f64 {
    (simulated - benchmark).abs() / benchmark
}

pub fn compare_to_benchmark(
    sim: &SimulatedMonthly,
    benchmarks: &BenchmarkSet,
    which: BenchmarkKind,
    tolerance: f64,
) -> Result<ValidationReport> {
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(Error::input(format!("tolerance {tolerance} must be >= 0")));
    }
    let bench = benchmarks.value(&sim.archetype, which)?;
    let rel = relative_error(sim.mean_kwh, bench);
    Ok(ValidationReport {
        archetype: sim.archetype.clone(),
        simulated_kwh: sim.mean_kwh,
        standard_error_kwh: sim.standard_error_kwh,
        benchmark: which,
        benchmark_kwh: bench,
        relative_error: rel,
        tolerance,
        passed: rel <= tolerance,
        clamp_count: sim.clamp_count,
        peaks: Vec::new(),
    })
}

impl ValidationReport {
    pub const CSV_HEADER: &'static str = "archetype,simulated_kwh,standard_error_kwh,benchmark,benchmark_kwh,relative_error,tolerance,passed,clamp_count,peaks";

    pub fn to_csv_row(&self) -> String {
        let peaks: Vec<String> = self
            .peaks
            .iter()
            .map(|p| format!("{}-{}", clock(p.start_min), clock(p.end_min)))
            .collect();
        format!(
            "{},{:.4},{:.4},{},{},{:.6},{},{},{},{}",
            self.archetype,
            self.simulated_kwh,
            self.standard_error_kwh,
            self.benchmark.label(),
            self.benchmark_kwh,
            self.relative_error,
            self.tolerance,
            if self.passed { "pass" } else { "fail" },
            self.clamp_count,
            peaks.join(";")
        )
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "archetype      {}\nsimulated      {:.1} kWh/month (se {:.2})\nbenchmark      {} {:.1} kWh/month\nrelative error {:.2}% (tolerance {:.2}%)\nresult         {}\n",
            self.archetype,
            self.simulated_kwh,
            self.standard_error_kwh,
            self.benchmark.label(),
            self.benchmark_kwh,
            self.relative_error * 100.0,
            self.tolerance * 100.0,
            if self.passed { "PASS" } else { "FAIL" },
        );
        if self.clamp_count > 0 {
            s.push_str(&format!("clamped        {} probabilities\n", self.clamp_count));
        }
        for (i, p) in self.peaks.iter().enumerate() {
            s.push_str(&format!("peak {}         {p}\n", i + 1));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMetrics {
    /// Mean absolute percentage error over bins with non-zero measured energy, in percent.
    pub mape_pct: f64,
    /// Root mean square error of per-bin energy, kWh.
    pub rmse_kwh: f64,
    /// Simulated over measured total energy.
    pub energy_ratio: f64,
    pub bins: usize,
    pub skipped_bins: usize,
}

/// Energy per `bin_min` bin of a power profile, kWh.
pub fn bin_energy_kwh(profile: &LoadProfile, bin_min: u32) -> Result<Vec<f64>> {
    let hours = f64::from(bin_min) / 60.0;
    Ok(rebin(profile, bin_min)?.into_iter().map(|w| w * hours / 1000.0).collect())
}

pub fn profile_error_metrics(sim: &LoadProfile, measured: &IntervalSeries) -> Result<ErrorMetrics> {
    let sim_bins = bin_energy_kwh(sim, measured.bin_min)?;
    if sim_bins.len() != measured.energy_kwh.len() {
        return Err(Error::input(format!(
            "simulated profile covers {} bins of {} min, measured series has {}",
            sim_bins.len(),
            measured.bin_min,
            measured.energy_kwh.len()
        )));
    }
    if sim_bins.is_empty() {
        return Err(Error::input("no bins to compare"));
    }
    let mut ape_sum = 0.0;
    let mut ape_n = 0usize;
    let mut sq = 0.0;
    for (s, m) in sim_bins.iter().zip(&measured.energy_kwh) {
        sq += (s - m).powi(2);
        if *m != 0.0 {
            ape_sum += ((s - m) / m).abs();
            ape_n += 1;
        }
    }
    let n = sim_bins.len();
    let measured_total: f64 = measured.energy_kwh.iter().sum();
    let sim_total: f64 = sim_bins.iter().sum();
    Ok(ErrorMetrics {
        mape_pct: if ape_n > 0 { 100.0 * ape_sum / ape_n as f64 } else { f64::NAN },
        rmse_kwh: (sq / n as f64).sqrt(),
        energy_ratio: sim_total / measured_total,
        bins: n,
        skipped_bins: n - ape_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::ProfileMeta;
    use proptest::prelude::*;

    fn profile(step: u32, samples: Vec<f64>) -> LoadProfile {
        LoadProfile::new(step, samples, ProfileMeta::default()).unwrap()
    }

    #[test]
    fn monthly_examples() {
        let p = profile(5, vec![1000.0; 288]);
        assert!((monthly_from_profile(&p).unwrap() - 720.0).abs() < 1e-9);
        assert_eq!(monthly_from_profile(&profile(5, vec![0.0; 288])).unwrap(), 0.0);
        assert!(monthly_from_profile(&profile(5, vec![])).is_err());
    }

    #[test]
    fn constant_profile_has_no_peaks() {
        assert!(find_peaks(&profile(5, vec![300.0; 288]), 30, 3).unwrap().is_empty());
    }

    #[test]
    fn two_bumps_are_recovered() {
        let mut s = vec![200.0; 288];
        s[90..102].fill(900.0); // 07:30-08:30
        s[246..258].fill(1200.0); // 20:30-21:30
        let peaks = find_peaks(&profile(5, s), 30, 5).unwrap();
        let windows: Vec<(u32, u32)> = peaks.iter().map(|p| (p.start_min, p.end_min)).collect();
        assert_eq!(windows, vec![(1230, 1290), (450, 510)]);
        assert_eq!(peaks[1].to_string(), "07:30-08:30 900.0 W");
    }

    #[test]
    fn peaks_wrap_around_midnight() {
        let mut s = vec![100.0; 24];
        s[23] = 500.0;
        s[0] = 500.0;
        s[10] = 300.0;
        let peaks = find_peaks(&profile(60, s), 60, 5).unwrap();
        assert_eq!(peaks.len(), 2);
        assert_eq!((peaks[0].start_min, peaks[0].end_min), (23 * 60, 25 * 60));
        assert_eq!(peaks[0].to_string(), "23:00-01:00 500.0 W");
    }

    #[test]
    fn peaks_tie_break_by_time_and_top_k() {
        let mut s = vec![0.0; 24];
        s[15] = 5.0;
        s[3] = 5.0;
        s[8] = 7.0;
        let peaks = find_peaks(&profile(60, s), 60, 2).unwrap();
        assert_eq!(peaks.iter().map(|p| p.start_min / 60).collect::<Vec<_>>(), vec![8, 3]);
    }

    #[test]
    fn rebin_rejects_misaligned_bins() {
        let p = profile(5, vec![1.0; 288]);
        assert!(rebin(&p, 7).is_err());
        assert!(rebin(&p, 0).is_err());
        assert!(rebin(&profile(5, vec![1.0; 5]), 30).is_err());
    }

    #[test]
    fn benchmark_examples() {
        let set = BenchmarkSet::shipped();
        let sim = |a: &str, v| SimulatedMonthly {
            archetype: a.into(),
            mean_kwh: v,
            standard_error_kwh: 0.0,
            clamp_count: 0,
        };
        let r = compare_to_benchmark(&sim("R12", 148.4), &set, BenchmarkKind::Ema, 0.10).unwrap();
        assert!(r.passed);
        assert!((r.relative_error - 0.0351).abs() < 1e-4);

        let r = compare_to_benchmark(&sim("R4", 347.7), &set, BenchmarkKind::Ema, 0.05).unwrap();
        assert!(!r.passed);
        assert!((r.relative_error - 0.0840).abs() < 1e-4);

        let r = compare_to_benchmark(&sim("r5", 465.0), &set, BenchmarkKind::Ema, 0.0).unwrap();
        assert_eq!(r.relative_error, 0.0);
        assert!(r.passed);

        assert!(compare_to_benchmark(&sim("R9", 1.0), &set, BenchmarkKind::Ema, 0.1).is_err());
    }

    #[test]
    fn report_renderings() {
        let set = BenchmarkSet::shipped();
        let sim = SimulatedMonthly {
            archetype: "R12".into(),
            mean_kwh: 150.0,
            standard_error_kwh: 0.5,
            clamp_count: 2,
        };
        let r = compare_to_benchmark(&sim, &set, BenchmarkKind::PublishedSim, 0.05).unwrap();
        let row = r.to_csv_row();
        assert_eq!(row.split(',').count(), ValidationReport::CSV_HEADER.split(',').count());
        assert!(row.starts_with("R12,150.0000,0.5000,paper-sim,148.4,"));
        assert!(r.to_text().contains("PASS"));
        assert!(r.to_text().contains("clamped        2"));
    }

    #[test]
    fn shipped_benchmark_ratios() {
        let set = BenchmarkSet::shipped();
        let r4 = set.get("R4").unwrap().ema_kwh;
        assert!((100.0 * set.get("R12").unwrap().ema_kwh / r4 - 40.5).abs() < 0.1);
        assert!((100.0 * set.get("R3").unwrap().ema_kwh / r4 - 73.3).abs() < 0.1);
    }

    fn series(bin: u32, energy: Vec<f64>) -> IntervalSeries {
        IntervalSeries { start_min: 0, bin_min: bin, energy_kwh: energy }
    }

    #[test]
    fn error_metric_examples() {
        // 1 kW for 30 min is 0.5 kWh per bin.
        let sim = profile(5, vec![1000.0; 288]);
        let m = profile_error_metrics(&sim, &series(30, vec![0.5; 48])).unwrap();
        assert!(m.mape_pct.abs() < 1e-12 && m.rmse_kwh.abs() < 1e-12);
        assert!((m.energy_ratio - 1.0).abs() < 1e-12);

        let m = profile_error_metrics(&sim, &series(30, vec![0.25; 48])).unwrap();
        assert!((m.energy_ratio - 2.0).abs() < 1e-12);
        assert!((m.mape_pct - 100.0).abs() < 1e-9);

        let mut measured = vec![0.5; 48];
        measured[0] = 0.0;
        let m = profile_error_metrics(&sim, &series(30, measured)).unwrap();
        assert_eq!(m.skipped_bins, 1);

        assert!(profile_error_metrics(&sim, &series(30, vec![0.5; 47])).is_err());
    }

    proptest! {
        #[test]
        fn monthly_is_linear_and_rebin_invariant(
            samples in prop::collection::vec(0.0f64..5000.0, 288),
            k in 0.0f64..10.0,
        ) {
            let p = profile(5, samples.clone());
            let m = monthly_from_profile(&p).unwrap();
            let scaled = profile(5, samples.iter().map(|v| v * k).collect());
            prop_assert!((monthly_from_profile(&scaled).unwrap() - k * m).abs() <= 1e-9 * (1.0 + k * m));
            let rebinned = profile(30, rebin(&p, 30).unwrap());
            prop_assert!((monthly_from_profile(&rebinned).unwrap() - m).abs() <= 1e-9 * (1.0 + m));
        }

        #[test]
        fn peaks_are_disjoint_strict_maxima(samples in prop::collection::vec(0u32..20, 48)) {
            let p = profile(30, samples.iter().map(|&v| v as f64).collect());
            let peaks = find_peaks(&p, 30, usize::MAX).unwrap();
            let bins = rebin(&p, 30).unwrap();
            let n = bins.len();
            let mut covered = vec![false; n];
            for pk in &peaks {
                let first = (pk.start_min / 30) as usize;
                let len = ((pk.end_min - pk.start_min) / 30) as usize;
                for j in 0..len {
                    let idx = (first + j) % n;
                    prop_assert!(!covered[idx]);
                    covered[idx] = true;
                    prop_assert_eq!(bins[idx], pk.mean_w);
                }
                prop_assert!(bins[(first + n - 1) % n] < pk.mean_w);
                prop_assert!(bins[(first + len) % n] < pk.mean_w);
            }
        }

        #[test]
        fn pass_is_monotone_in_tolerance(sim in 50.0f64..600.0, t1 in 0.0f64..0.5, t2 in 0.0f64..0.5) {
            let set = BenchmarkSet::shipped();
            let s = SimulatedMonthly { archetype: "R3".into(), mean_kwh: sim, standard_error_kwh: 0.0, clamp_count: 0 };
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let a = compare_to_benchmark(&s, &set, BenchmarkKind::Ema, lo).unwrap().passed;
            let b = compare_to_benchmark(&s, &set, BenchmarkKind::Ema, hi).unwrap().passed;
            prop_assert!(!a || b);
        }
    }
}
