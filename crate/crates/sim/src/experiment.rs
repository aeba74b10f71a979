//! One Monte-Carlo trial: payload → framing → DSK → waveforms → shared band
//! → receiver → framing, for either side-channel direction.
//!
//! W2B opportunities are Wi-Fi packets, one every airtime + interval. The
//! BLE receiver listens on the channel of the slot the packet starts in.
//! B2W opportunities are BLE slots; the Wi-Fi receiver takes CSI from every
//! legacy Wi-Fi frame whose LTF ends inside the slot.
//!
//! Both receivers know the hop sequence (a connected peer shares the
//! channel map) and only read slots whose channel is in the overlap set.

use std::collections::{BTreeMap, BTreeSet};

use dopplerfi_core::band::{self, BleChannel, WifiChannel, BLE_CHANNEL_WIDTH, WIFI_OCCUPIED_HALF_WIDTH};
use dopplerfi_core::ble_rx::{self, BleRxConfig, Extraction};
use dopplerfi_core::codec::{self, Code};
use dopplerfi_core::dsk::{self, DskState, LogEntry, ShiftMap, ShiftPair, Side, SLOT_DURATION};
use dopplerfi_core::medium::{self, BandTimeline, Emission, ImpairmentSpec};
use dopplerfi_core::rng;
use dopplerfi_core::waveforms::{self, BlePacketSpec, WifiFrameLayout, WifiFrameSpec};
use dopplerfi_core::wifi_rx::{self, CsiVector, WifiRxConfig};
use dopplerfi_core::IqBuffer;
use rand::Rng;
use rayon::prelude::*;

use crate::config::{Direction, ExperimentConfig};
use crate::{Error, Result};

/// Silence before the Wi-Fi frame in a W2B capture.
pub const FRAME_LEAD: f64 = 20e-6;
/// A B2W capture starts this long before its slot.
pub const SLOT_LEAD: f64 = 20e-6;
/// LTF end relative to the frame start.
const LTF_END: f64 = 16e-6;

/// All signals are generated at unit power; the SNR refers to that.
const REFERENCE_POWER: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    /// Symmetric shift magnitude for the sending side; `None` keeps the
    /// configured map.
    pub shift_khz: Option<f64>,
    pub snr_db: f64,
    pub distance_m: Option<f64>,
}

/// What a receiver made of one opportunity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reading {
    Idle,
    Bit(bool),
    /// A packet was seen but the decision tied.
    Erasure,
}

impl Reading {
    /// Stream entry for framing. An erasure still occupies a bit position.
    pub fn as_stream(self) -> Option<bool> {
        match self {
            Reading::Idle => None,
            Reading::Bit(b) => Some(b),
            Reading::Erasure => Some(false),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    /// Side-channel bits put on the air.
    pub bits_sent: usize,
    /// Sent bits read wrongly, missed or erased.
    pub bit_errors: usize,
    pub erasures: usize,
    /// Framed bits that never left the queue before the opportunity cap.
    pub bits_unsent: usize,
    pub frame_ok: bool,
    pub payload_bits: usize,
    pub opportunities: usize,
    pub seconds: f64,
    pub log: Vec<LogEntry>,
    pub readings: Vec<Reading>,
}

impl TrialRecord {
    /// Payload bits delivered in a correctly decoded frame.
    pub fn delivered_bits(&self) -> usize {
        if self.frame_ok {
            self.payload_bits
        } else {
            0
        }
    }

    pub fn throughput_bps(&self) -> f64 {
        if self.seconds > 0.0 {
            self.delivered_bits() as f64 / self.seconds
        } else {
            0.0
        }
    }
}

/// A configuration resolved at one grid point, ready to run trials.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub direction: Direction,
    pub wifi: WifiChannel,
    pub hop_set: Vec<BleChannel>,
    pub overlap: BTreeSet<BleChannel>,
    pub map: ShiftMap,
    pub ble_rx: BleRxConfig,
    pub point: GridPoint,
    pub code: Code,
    pub payload_bits: usize,
    pub duty_cycle: f64,
    pub seed: u64,
    pub hop_seed: Option<u64>,
    pub gain_db: f64,
    pub random_offsets: bool,
    pub layout: WifiFrameLayout,
    pub wifi_period: f64,
    pub wifi_airtime: f64,
    pub wifi_payload_bits: usize,
    pub ble_payload_bits: usize,
    cfg: ExperimentConfig,
}

fn stream(seed: u64, name: &str, index: u64) -> rng::Stream {
    rng::stream(seed, rng::salt(name), index)
}

fn random_bits(r: &mut impl Rng, n: usize) -> Vec<bool> {
    (0..n).map(|_| r.random()).collect()
}

fn wifi_bandwidth() -> f64 {
    2.0 * WIFI_OCCUPIED_HALF_WIDTH
}

impl Scenario {
    pub fn new(cfg: &ExperimentConfig, point: GridPoint) -> Result<Self> {
        if !matches!(cfg.direction, Direction::W2b | Direction::B2w) {
            return Err(Error::Config(format!("{} is not a side-channel direction", cfg.direction.name())));
        }
        let wifi = cfg.wifi()?;
        let mut map = cfg.shift_map()?;
        if let Some(s) = point.shift_khz {
            // Sweeps deliberately go below the design separation.
            if !(s.is_finite() && s != 0.0) {
                return Err(Error::Config(format!("sweep shift {s} kHz must be finite and non-zero")));
            }
            let pair = ShiftPair::new(-s.abs() * 1e3, s.abs() * 1e3);
            match cfg.direction {
                Direction::W2b => {
                    map.wifi_default = pair;
                    map.wifi_overrides.clear();
                }
                _ => map.ble = pair,
            }
        }
        let layout = cfg.wifi_layout()?;
        let mut sc = Scenario {
            direction: cfg.direction,
            wifi,
            hop_set: cfg.hop_set()?,
            overlap: dsk::overlap_set(wifi),
            map,
            ble_rx: cfg.ble_rx(),
            point,
            code: cfg.code(),
            payload_bits: cfg.payload_bits,
            duty_cycle: cfg.duty_cycle,
            seed: cfg.seed,
            hop_seed: cfg.hops.seed,
            gain_db: cfg.gain_db,
            random_offsets: cfg.random_offsets,
            layout,
            wifi_period: cfg.wifi_period(),
            wifi_airtime: cfg.timing.wifi_airtime_us * 1e-6,
            wifi_payload_bits: cfg.timing.wifi_payload_bits,
            ble_payload_bits: cfg.timing.ble_payload_bits,
            cfg: cfg.clone(),
        };
        if sc.direction == Direction::W2b {
            let overrides = cfg.eta_overrides()?;
            let mut table = BTreeMap::new();
            for &ch in sc.overlap.iter().filter(|c| sc.hop_set.contains(c)) {
                if let Some(&eta) = overrides.get(&ch) {
                    table.insert(ch, eta);
                } else if cfg.eta.calibrate {
                    let pair = sc.map.wifi_pair(ch);
                    let swapped = ShiftPair::new(pair.bit1, pair.bit0);
                    if let Some(eta) = sc.calibrate_pair(ch, pair)? {
                        table.insert(ch, eta);
                    } else if cfg.shifts.adjust {
                        // The slicer polarity only fits one orientation.
                        if let Some(eta) = sc.calibrate_pair(ch, swapped)? {
                            sc.map.wifi_overrides.insert(ch, swapped);
                            table.insert(ch, eta);
                        }
                    }
                }
            }
            sc.ble_rx.eta_overrides = table;
            sc.ble_rx.validate()?;
        }
        Ok(sc)
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    /// Gate halfway between the noiseless ones counts of the two shifts, or
    /// `None` when the bit-0 shift does not produce more ones (or the gate
    /// would be zero).
    pub fn calibrate_eta(&self, channel: BleChannel) -> Result<Option<u32>> {
        self.calibrate_pair(channel, self.map.wifi_pair(channel))
    }

    fn calibrate_pair(&self, channel: BleChannel, pair: ShiftPair) -> Result<Option<u32>> {
        let ones = |shift: f64| -> Result<Option<u32>> {
            let frame = self.wifi_frame(vec![false; self.wifi_payload_bits], shift)?;
            let wide = self.w2b_band(Some(frame), None, ImpairmentSpec::noiseless())?;
            let narrow = waveforms::ble_channelize(&wide, channel)?;
            Ok(ble_rx::gfsk_extract(&narrow, &self.ble_rx)?.map(|e| e.ones()))
        };
        match (ones(pair.bit0)?, ones(pair.bit1)?) {
            (Some(o0), Some(o1)) if o0 > o1 && o0 + o1 >= 2 => Ok(Some((o0 + o1) / 2)),
            _ => Ok(None),
        }
    }

    pub fn snr_db(&self) -> f64 {
        self.point.snr_db
    }

    fn impairment(&self, noise_seed: u64, index: u64) -> ImpairmentSpec {
        let spec = ImpairmentSpec::awgn(self.point.snr_db, noise_seed, index).with_reference_power(REFERENCE_POWER);
        if self.random_offsets {
            spec.with_random_offsets()
        } else {
            spec
        }
    }

    pub fn wifi_frame(&self, payload: Vec<bool>, shift_hz: f64) -> Result<IqBuffer> {
        let spec = WifiFrameSpec { airtime: self.wifi_airtime, ..WifiFrameSpec::new(payload, self.wifi) }.with_shift(shift_hz);
        Ok(waveforms::gen_wifi_frame(&spec)?)
    }

    fn w2b_capture_len(&self) -> f64 {
        self.wifi_period.max(2.0 * FRAME_LEAD + self.wifi_airtime)
    }

    /// Wideband capture around one Wi-Fi packet opportunity.
    fn w2b_band(&self, frame: Option<IqBuffer>, gain_db: Option<f64>, spec: ImpairmentSpec) -> Result<IqBuffer> {
        let mut tl = BandTimeline::new(self.wifi.center_hz(), self.w2b_capture_len());
        if let Some(frame) = frame {
            let e = Emission::at_center(frame, FRAME_LEAD, self.wifi.center_hz(), wifi_bandwidth());
            tl.push(e.with_gain(gain_db.unwrap_or(0.0)));
        }
        Ok(medium::impair(&medium::render(&tl)?, &spec))
    }

    /// W2B capture for one opportunity: the wideband band and the BLE
    /// receiver's channelized view. `shift` is `None` when no frame is sent.
    pub fn w2b_capture(&self, channel: BleChannel, shift: Option<f64>, noise_seed: u64, index: u64) -> Result<(IqBuffer, IqBuffer)> {
        let frame = match shift {
            Some(s) => {
                let mut r = stream(noise_seed, "harness.legacy", index);
                Some(self.wifi_frame(random_bits(&mut r, self.wifi_payload_bits), s)?)
            }
            None => None,
        };
        let wide = self.w2b_band(frame, Some(self.gain_db), self.impairment(noise_seed, index))?;
        let narrow = waveforms::ble_channelize(&wide, channel)?;
        Ok((wide, narrow))
    }

    fn w2b_read(&self, channel: BleChannel, shift: Option<f64>, noise_seed: u64, index: u64) -> Result<Reading> {
        if shift.is_none() && !self.point.snr_db.is_finite() {
            return Ok(Reading::Idle);
        }
        let (_, narrow) = self.w2b_capture(channel, shift, noise_seed, index)?;
        Ok(match ble_rx::gfsk_extract(&narrow, &self.ble_rx) {
            Ok(Some(Extraction { bits, .. })) => Reading::Bit(ble_rx::gfsk_demap(&bits, self.ble_rx.eta_for(Some(channel)))),
            Ok(None) | Err(dopplerfi_core::Error::TooShort { .. }) => Reading::Idle,
            Err(e) => return Err(e.into()),
        })
    }

    /// Start times of the Wi-Fi frames whose LTF ends inside slot `s`.
    fn slot_frames(&self, s: usize) -> Vec<f64> {
        let slot_start = s as f64 * SLOT_DURATION;
        let lo = slot_start - LTF_END;
        let hi = slot_start + SLOT_DURATION - LTF_END;
        let first = (lo / self.wifi_period).ceil().max(0.0) as u64;
        (first..)
            .map(|k| k as f64 * self.wifi_period)
            .take_while(|&t| t < hi)
            .filter(|&t| t >= lo)
            .collect()
    }

    /// B2W capture for one slot: the wideband band and the CSI of every
    /// Wi-Fi frame assigned to the slot. `shift` is `None` when BLE stays
    /// silent.
    pub fn b2w_capture(&self, s: usize, channel: BleChannel, shift: Option<f64>, noise_seed: u64) -> Result<(IqBuffer, Vec<CsiVector>)> {
        let origin = s as f64 * SLOT_DURATION - SLOT_LEAD;
        let frames = self.slot_frames(s);
        let ble = match shift {
            Some(shift) => {
                let mut r = stream(noise_seed, "harness.ble_payload", s as u64);
                let spec = BlePacketSpec::new(random_bits(&mut r, self.ble_payload_bits), channel).with_shift(shift);
                Some(waveforms::gen_ble_packet(&spec)?)
            }
            None => None,
        };
        let frames_end = frames.last().map_or(0.0, |t| t - origin + self.wifi_airtime);
        let ble_end = ble.as_ref().map_or(0.0, |b| SLOT_LEAD + b.duration());
        let mut tl = BandTimeline::new(self.wifi.center_hz(), frames_end.max(ble_end) + 1e-6);
        for &t in &frames {
            let k = (t / self.wifi_period).round() as u64;
            let mut r = stream(noise_seed, "harness.legacy", k);
            let frame = self.wifi_frame(random_bits(&mut r, self.wifi_payload_bits), 0.0)?;
            tl.push(Emission::at_center(frame, t - origin, self.wifi.center_hz(), wifi_bandwidth()));
        }
        if let Some(b) = ble {
            tl.push(Emission::at_center(b, SLOT_LEAD, self.wifi.center_hz(), BLE_CHANNEL_WIDTH).with_gain(self.gain_db));
        }
        let wide = medium::impair(&medium::render(&tl)?, &self.impairment(noise_seed, s as u64));
        let frame_len = self.layout.len();
        let csi = frames
            .iter()
            .map(|&t| {
                let start = tl.index_of(t - origin);
                wifi_rx::estimate_csi_at(&wide.slice(start..start + frame_len), t)
            })
            .collect();
        Ok((wide, csi))
    }

    pub fn wifi_rx_config(&self, channel: BleChannel) -> WifiRxConfig {
        self.cfg.wifi_rx(band::nominal_subcarrier(self.wifi, channel))
    }

    fn b2w_read(&self, s: usize, channel: BleChannel, shift: Option<f64>, noise_seed: u64) -> Result<Reading> {
        if shift.is_none() && !self.point.snr_db.is_finite() {
            return Ok(Reading::Idle);
        }
        let (_, csi) = self.b2w_capture(s, channel, shift, noise_seed)?;
        let cfg = self.wifi_rx_config(channel);
        let hits = wifi_rx::csi_extract(&csi, &cfg);
        if hits.is_empty() {
            return Ok(Reading::Idle);
        }
        Ok(match wifi_rx::csi_demap(&hits, &cfg) {
            Ok(b) => Reading::Bit(b),
            Err(_) => Reading::Erasure,
        })
    }

    fn opportunity_period(&self) -> f64 {
        match self.direction {
            Direction::W2b => self.wifi_period,
            _ => SLOT_DURATION,
        }
    }

    fn hop_rng(&self, trial: u64) -> rng::Stream {
        stream(self.hop_seed.unwrap_or(self.seed), "harness.hops", trial)
    }

    /// Trial noise seed; also keys the legacy payloads.
    pub fn noise_seed(&self, trial: u64) -> u64 {
        stream(self.seed, "harness.noise", trial).random()
    }

    pub fn payload(&self, trial: u64) -> Vec<bool> {
        random_bits(&mut stream(self.seed, "harness.payload", trial), self.payload_bits)
    }

    /// Runs the sender side: which channel every opportunity uses and what
    /// the DSK decided for it (`None` entries had no traffic).
    pub fn schedule(&self, trial: u64, tx: &[bool]) -> (Vec<BleChannel>, Vec<Option<LogEntry>>, DskState) {
        let side = match self.direction {
            Direction::W2b => Side::Wifi,
            _ => Side::Ble,
        };
        let mut state = DskState::with_overlap(self.overlap.clone(), side, self.map.clone());
        state.submit(tx.iter().copied());
        let mut hop_rng = self.hop_rng(trial);
        let mut duty_rng = stream(self.seed, "harness.duty", trial);
        let mut hops: Vec<BleChannel> = Vec::new();
        let mut channels = Vec::new();
        let mut decisions = Vec::new();
        let cap = 64 * tx.len() + 10_000;
        let period = self.opportunity_period();
        while !state.pending_bits.is_empty() && channels.len() < cap {
            let k = channels.len();
            let slot = ((k as f64 * period + 1e-12) / SLOT_DURATION).floor() as usize;
            while hops.len() <= slot {
                hops.push(self.hop_set[hop_rng.random_range(0..self.hop_set.len())]);
            }
            let channel = hops[slot];
            let traffic = duty_rng.random::<f64>() < self.duty_cycle;
            channels.push(channel);
            decisions.push(traffic.then(|| {
                state.step(channel);
                *state.emitted_log.last().expect("just stepped")
            }));
        }
        (channels, decisions, state)
    }

    pub fn run_trial(&self, trial: u64) -> Result<TrialRecord> {
        let payload = self.payload(trial);
        let tx = codec::frame_encode(&payload, self.code)?;
        let (channels, decisions, state) = self.schedule(trial, &tx);
        let noise_seed = self.noise_seed(trial);
        let readings = (0..channels.len())
            .into_par_iter()
            .map(|k| {
                let ch = channels[k];
                if !self.overlap.contains(&ch) {
                    return Ok(Reading::Idle);
                }
                let shift = decisions[k].map(|e| e.shift_hz);
                match self.direction {
                    Direction::W2b => self.w2b_read(ch, shift, noise_seed, k as u64),
                    _ => self.b2w_read(k, ch, shift, noise_seed),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut bits_sent = 0;
        let mut bit_errors = 0;
        let mut erasures = 0;
        for (d, r) in decisions.iter().zip(&readings) {
            if let Some(bit) = d.and_then(|e| e.bit) {
                bits_sent += 1;
                if *r == Reading::Erasure {
                    erasures += 1;
                }
                if *r != Reading::Bit(bit) {
                    bit_errors += 1;
                }
            }
        }
        let stream: Vec<Option<bool>> = readings.iter().map(|r| r.as_stream()).collect();
        let frame_ok = codec::frame_decode(&stream, self.code, self.payload_bits)?.is_some_and(|d| d.data == payload);
        let bits_unsent = state.pending_bits.len();
        Ok(TrialRecord {
            trial,
            bits_sent,
            bit_errors: bit_errors + bits_unsent,
            erasures,
            bits_unsent,
            frame_ok,
            payload_bits: self.payload_bits,
            opportunities: channels.len(),
            seconds: channels.len() as f64 * self.opportunity_period(),
            log: state.emitted_log,
            readings,
        })
    }

    /// Trials `0..n` in parallel, returned in trial order.
    pub fn run_trials(&self, n: usize) -> Result<Vec<TrialRecord>> {
        (0..n as u64).into_par_iter().map(|t| self.run_trial(t)).collect()
    }
}
