//! Audit of the shipped fixture tables and CSV round trips.

use loadsim::appliance::ApplianceKey;
use loadsim::data_io::{
    parse_appliance_tables, parse_benchmarks_csv, parse_pstart_tables, read_interval_csv, write_appliance_tables,
    write_benchmarks_csv, write_interval_csv, write_pstart_tables, FixtureLibrary, IntervalSeries, APPLIANCES_CSV,
    PSTART_CSV,
};
use sha2::{Digest, Sha256};

fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

// Any edit to a fixture must update these digests deliberately.
#[test]
fn fixture_digests_are_pinned() {
    assert_eq!(digest(APPLIANCES_CSV), "49797c91ea83ba46e2147dd14d87ff06d4c5a12059463940ecf88db02c136e02");
    assert_eq!(digest(PSTART_CSV), "e7550d64e5ae99f91a07cbfc81027880c0b467ed51e567c4b6bbf1c05b87cc5b");
}

#[test]
fn shipped_library_shape() {
    let lib = FixtureLibrary::shipped().unwrap();
    let mut names = lib.names();
    names.sort_unstable();
    assert_eq!(names, ["R12", "R3", "R4", "R5"]);
    let count = |n: &str| lib.archetype(n).unwrap().appliances.len();
    assert_eq!(count("r12"), 15);
    assert_eq!(count("r5"), 19);
    for name in ["r12", "r3", "r4", "r5"] {
        let arch = lib.archetype(name).unwrap();
        let table = lib.table(name).unwrap();
        assert_eq!(table.rows.len(), arch.appliances.len(), "{name}");
        assert_eq!(table.ref_step_min, 5);
        assert!(lib.benchmarks.get(name).is_some());
    }
}

#[test]
fn transcribed_cells_spot_check() {
    let lib = FixtureLibrary::shipped().unwrap();
    let fridge = lib.table("R12").unwrap().row(&ApplianceKey::new("Refrigerator", 1)).unwrap();
    assert_eq!(fridge[0], 0.140738);
    assert_eq!(fridge[3], 0.003475);
    let coffee = lib.table("R12").unwrap().row(&ApplianceKey::new("Coffee Maker", 1)).unwrap();
    assert!(coffee.contains(&2.78e-5));
    let spec = &lib.archetype("R12").unwrap().appliances[1];
    assert_eq!((spec.name.as_str(), spec.f_per_day, spec.standby_w, spec.cycle_min), ("Refrigerator", 40.5, 8.1, 12));
}

#[test]
fn dumped_tables_reingest_identically() {
    let lib = FixtureLibrary::shipped().unwrap();
    let apps = write_appliance_tables(&lib.archetypes);
    let pstart = write_pstart_tables(&lib.tables);
    let bench = write_benchmarks_csv(&lib.benchmarks);
    assert_eq!(parse_appliance_tables(&apps).unwrap(), lib.archetypes);
    assert_eq!(parse_pstart_tables(&pstart).unwrap(), lib.tables);
    assert_eq!(parse_benchmarks_csv(&bench).unwrap(), lib.benchmarks);
    // Writing is idempotent.
    assert_eq!(write_appliance_tables(&parse_appliance_tables(&apps).unwrap()), apps);
}

#[test]
fn interval_round_trip() {
    let s = IntervalSeries {
        start_min: 0,
        bin_min: 30,
        energy_kwh: (0..96).map(|i| 0.1 + f64::from(i) * 0.013).collect(),
    };
    let back = read_interval_csv(&write_interval_csv(&s)).unwrap();
    assert_eq!(back, s);
    let day = back.day_mean().unwrap();
    assert_eq!(day.energy_kwh.len(), 48);
    assert!((day.energy_kwh[0] - (0.1 + 0.1 + 48.0 * 0.013) / 2.0).abs() < 1e-12);
}
