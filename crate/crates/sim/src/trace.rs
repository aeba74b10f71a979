//! Trace dumps for one channel: demodulator intermediates of a W2B packet
//! per bit value, CSI of a B2W slot per bit value, the wideband capture
//! behind the first, the DSK log of trial 0 and the Hamming golden vectors.

use std::path::{Path, PathBuf};

use dopplerfi_core::band::BleChannel;
use dopplerfi_core::ble_rx::DemodTrace;
use dopplerfi_core::codec::{self, Code};

use crate::config::{Direction, ExperimentConfig};
use crate::experiment::{GridPoint, Scenario};
use crate::export;
use crate::{Error, Result};

/// First hop channel that overlaps the Wi-Fi channel.
pub fn trace_channel(cfg: &ExperimentConfig) -> Result<BleChannel> {
    let overlap = dopplerfi_core::dsk::overlap_set(cfg.wifi()?);
    cfg.hop_set()?
        .into_iter()
        .find(|c| overlap.contains(c))
        .ok_or_else(|| Error::Config("no hop channel overlaps the Wi-Fi channel".into()))
}

fn with_direction(cfg: &ExperimentConfig, direction: Direction) -> ExperimentConfig {
    ExperimentConfig { direction, ..cfg.clone() }
}

/// Writes every trace file into `out` and returns the paths written.
pub fn write_traces(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let channel = trace_channel(cfg)?;
    let (snr_db, distance_m) = cfg.snr_points()[0];
    let point = GridPoint { shift_khz: None, snr_db, distance_m };
    let mut written = Vec::new();
    let mut push = |name: &str| {
        let p = out.join(name);
        written.push(p.clone());
        p
    };

    let w2b = Scenario::new(&with_direction(cfg, Direction::W2b), point)?;
    let noise_seed = w2b.noise_seed(0);
    let pair = w2b.map.wifi_pair(channel);
    for (bit, shift) in [(0, pair.bit0), (1, pair.bit1)] {
        let (wide, narrow) = w2b.w2b_capture(channel, Some(shift), noise_seed, bit)?;
        let trace = DemodTrace::capture(&narrow, &w2b.ble_rx, 2);
        export::write_demod_trace(&push(&format!("demod_trace_bit{bit}.csv")), &trace)?;
        if bit == 0 {
            let iq = push("w2b_capture.cf32");
            export::write_iq(&iq, &wide)?;
            push(&format!("{}", export::header_path(Path::new("w2b_capture.cf32")).display()));
        }
    }

    let b2w = Scenario::new(&with_direction(cfg, Direction::B2w), point)?;
    let noise_seed = b2w.noise_seed(0);
    for (bit, shift) in [(0usize, b2w.map.ble.bit0), (1, b2w.map.ble.bit1)] {
        let (_, csi) = b2w.b2w_capture(bit, channel, Some(shift), noise_seed)?;
        export::write_csi_stream(&push(&format!("csi_bit{bit}.csv")), &csi)?;
    }

    if matches!(cfg.direction, Direction::W2b | Direction::B2w) {
        let sc = if cfg.direction == Direction::W2b { &w2b } else { &b2w };
        let payload = sc.payload(0);
        let tx = codec::frame_encode(&payload, sc.code)?;
        let (_, _, state) = sc.schedule(0, &tx);
        export::write_emitted_log(&push("emitted_log.csv"), &state.emitted_log)?;
    }

    export::write_golden(&push("golden_h74.txt"), Code::H74)?;
    export::write_golden(&push("golden_h1511.txt"), Code::H1511)?;
    let script = export::trace_plot_script("demod_trace_bit0.csv", "csi_bit0.csv");
    let p = push("plot_trace.gp");
    std::fs::write(&p, script).map_err(|source| Error::Io { path: p.clone(), source })?;
    Ok(written)
}
