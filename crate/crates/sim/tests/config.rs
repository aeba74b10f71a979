use dopplerfi::config::{CodeChoice, ExperimentConfig};
use dopplerfi::experiment::{GridPoint, Scenario};
use dopplerfi::Direction;
use dopplerfi_core::band::BleChannel;

fn parse(text: &str) -> dopplerfi::Result<ExperimentConfig> {
    let c = ExperimentConfig::from_toml(text)?;
    c.validate()?;
    Ok(c)
}

#[test]
fn empty_file_is_the_default() {
    let c = parse("").unwrap();
    assert_eq!(c.direction, Direction::W2b);
    assert_eq!(c.wifi_channel, 1);
    assert_eq!(c.shifts.wifi_khz, [-130.0, 100.0]);
    assert_eq!(c.shifts.ble_khz, [-80.0, 80.0]);
    assert_eq!(c.eta.default, 8);
    assert_eq!(c.timing.wifi_airtime_us, 100.0);
    assert_eq!(c.timing.wifi_interval_us, 40.0);
    assert!((c.wifi_period() - 140e-6).abs() < 1e-15);
}

#[test]
fn full_file_round_trips_its_fields() {
    let c = parse(
        r#"
direction = "b2w"
seed = 7
trials = 3
payload_bits = 44
code = "h1511"
wifi_channel = 6
duty_cycle = 0.5
snr_db = [5.0, inf]
gain_db = -6.0

[hops]
channels = [14, 15]

[shifts]
ble_khz = [-100.0, 100.0]

[receiver]
csi_rule = "median_mad"
csi_k = 4.0
"#,
    )
    .unwrap();
    assert_eq!(c.direction, Direction::B2w);
    assert_eq!(c.seed, 7);
    assert_eq!(c.code, CodeChoice::H1511);
    assert_eq!(c.hop_set().unwrap(), vec![BleChannel::new(14).unwrap(), BleChannel::new(15).unwrap()]);
    assert!(c.snr_db[1].is_infinite());
    assert_eq!(c.shift_map().unwrap().ble.bit1, 100e3);
}

#[test]
fn rejects_inconsistent_files() {
    let cases = [
        ("trials = 0", "trials"),
        ("payload_bits = 10\ncode = \"h74\"", "multiple"),
        ("duty_cycle = 0.0", "duty_cycle"),
        ("snr_db = []", "snr_db"),
        ("wifi_channel = 36", "channel"),
        ("[hops]\nchannels = [20, 30]", "overlaps"),
        ("[shifts]\nwifi_khz = [-50.0, 50.0]", "separated"),
        ("[shifts]\nwifi_khz = [-700.0, 100.0]", "625"),
        ("[eta]\ndefault = 20", "eta"),
        ("unknown_key = 1", "unknown"),
        ("[sweep]\ndistances_m = [0.0]", "distances"),
    ];
    for (text, needle) in cases {
        let err = parse(text).expect_err(text).to_string();
        assert!(err.contains(needle), "`{text}` gave `{err}`");
    }
}

#[test]
fn sweep_shifts_may_go_below_the_design_separation() {
    let c = parse("[sweep]\nshifts_khz = [20.0]").unwrap();
    let sc = Scenario::new(&c, GridPoint { shift_khz: Some(20.0), snr_db: 20.0, distance_m: None }).unwrap();
    assert_eq!(sc.map.wifi_default.bit0, -20e3);
    assert!(parse("[sweep]\nshifts_khz = [0.0]").is_err());
}

#[test]
fn calibrated_gates_sit_between_the_two_counts() {
    let c = parse("[hops]\nchannels = [3, 5]").unwrap();
    let sc = Scenario::new(&c, GridPoint { shift_khz: None, snr_db: f64::INFINITY, distance_m: None }).unwrap();
    for ch in [3, 5] {
        let eta = sc.ble_rx.eta_overrides[&BleChannel::new(ch).unwrap()];
        assert!(eta > 0 && eta < 16, "ch{ch}: {eta}");
    }
}

#[test]
fn eta_override_beats_calibration() {
    let c = parse("[hops]\nchannels = [3]\n[eta]\noverrides = { \"3\" = 5 }").unwrap();
    let sc = Scenario::new(&c, GridPoint { shift_khz: None, snr_db: f64::INFINITY, distance_m: None }).unwrap();
    assert_eq!(sc.ble_rx.eta_for(Some(BleChannel::new(3).unwrap())), 5);
}

#[test]
fn shipped_configs_are_valid() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let c = ExperimentConfig::load(&path).unwrap();
            c.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 5);
}
