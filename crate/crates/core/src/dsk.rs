//! Doppler shift keying: the BLE hop sequence decides which slots may carry
//! a side-channel bit, and a FIFO holds bits until an overlapping hop comes
//! along.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;

use rand::Rng;

use crate::band::{self, BleChannel, WifiChannel, BLE_CHANNEL_COUNT, SUBCARRIER_SPACING};
use crate::{Error, Result};

pub const SLOT_DURATION: f64 = 625e-6;

/// Smallest allowed distance between the two shifts of a pair.
pub const MIN_PAIR_SEPARATION: f64 = SUBCARRIER_SPACING / 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct HopPlan {
    pub sequence: Vec<BleChannel>,
    pub slot_duration: f64,
}

impl HopPlan {
    /// `slots` hops drawn uniformly over the 40 channels.
    pub fn uniform<R: Rng + ?Sized>(slots: usize, rng: &mut R) -> Self {
        let sequence = (0..slots)
            .map(|_| BleChannel::new(rng.random_range(0..BLE_CHANNEL_COUNT)).expect("index below 40"))
            .collect();
        HopPlan { sequence, slot_duration: SLOT_DURATION }
    }

    /// Hops drawn uniformly from `channels` only.
    pub fn uniform_over<R: Rng + ?Sized>(slots: usize, channels: &[BleChannel], rng: &mut R) -> Self {
        assert!(!channels.is_empty(), "hop set must not be empty");
        let sequence = (0..slots).map(|_| channels[rng.random_range(0..channels.len())]).collect();
        HopPlan { sequence, slot_duration: SLOT_DURATION }
    }

    pub fn fixed(sequence: Vec<BleChannel>) -> Self {
        HopPlan { sequence, slot_duration: SLOT_DURATION }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Ble,
    Wifi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftPair {
    pub bit0: f64,
    pub bit1: f64,
}

impl ShiftPair {
    pub const fn new(bit0: f64, bit1: f64) -> Self {
        ShiftPair { bit0, bit1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !((self.bit1 - self.bit0).abs() >= MIN_PAIR_SEPARATION) {
            return Err(Error::ShiftPairTooClose { bit0_hz: self.bit0, bit1_hz: self.bit1, min_hz: MIN_PAIR_SEPARATION });
        }
        Ok(())
    }

    pub fn for_bit(&self, bit: bool) -> f64 {
        if bit {
            self.bit1
        } else {
            self.bit0
        }
    }
}

/// Bit to shift mapping for both directions. The Wi-Fi pair can be
/// overridden per BLE channel, because the slicer bias flips where the
/// shift cancels the mean offset of that channel's STF tones.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftMap {
    pub ble: ShiftPair,
    pub wifi_default: ShiftPair,
    pub wifi_overrides: BTreeMap<BleChannel, ShiftPair>,
}

impl Default for ShiftMap {
    fn default() -> Self {
        ShiftMap {
            ble: ShiftPair::new(-80e3, 80e3),
            wifi_default: ShiftPair::new(-130e3, 100e3),
            wifi_overrides: BTreeMap::new(),
        }
    }
}

impl ShiftMap {
    /// Default map with the Wi-Fi pair mirrored to (−100, +130) kHz on every
    /// usable channel whose STF tones sit below the BLE center on average.
    pub fn adjusted(wifi: WifiChannel) -> Self {
        ShiftMap::default().mirrored_below(wifi)
    }

    /// Adds an override with the mirrored default pair for every usable
    /// channel whose STF tones sit below the BLE center on average.
    pub fn mirrored_below(mut self, wifi: WifiChannel) -> Self {
        let mirrored = ShiftPair::new(-self.wifi_default.bit1, -self.wifi_default.bit0);
        for ch in overlap_set(wifi) {
            if band::stf_mean_offset_hz(wifi, ch).is_some_and(|m| m < 0.0) {
                self.wifi_overrides.insert(ch, mirrored);
            }
        }
        self
    }

    pub fn wifi_pair(&self, ble_channel: BleChannel) -> ShiftPair {
        self.wifi_overrides.get(&ble_channel).copied().unwrap_or(self.wifi_default)
    }

    pub fn pair(&self, side: Side, ble_channel: BleChannel) -> ShiftPair {
        match side {
            Side::Ble => self.ble,
            Side::Wifi => self.wifi_pair(ble_channel),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ble.validate()?;
        self.wifi_default.validate()?;
        self.wifi_overrides.values().try_for_each(ShiftPair::validate)
    }
}

/// Signed shift for one bit. `channel` is the BLE channel in use; the BLE
/// side ignores it.
pub fn shift_for_bit(bit: bool, side: Side, channel: BleChannel, map: &ShiftMap) -> f64 {
    map.pair(side, channel).for_bit(bit)
}

/// BLE channels that overlap the Wi-Fi channel and see at least one non-zero
/// STF subcarrier.
pub fn overlap_set(wifi: WifiChannel) -> BTreeSet<BleChannel> {
    band::geometric_overlap(wifi)
        .into_iter()
        .filter(|&b| !band::stf_subcarriers_in(wifi, b).is_empty())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub slot: usize,
    pub channel: BleChannel,
    pub bit: Option<bool>,
    pub shift_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DskState {
    pub pending_bits: VecDeque<bool>,
    pub overlap_set: BTreeSet<BleChannel>,
    pub emitted_log: Vec<LogEntry>,
    side: Side,
    map: ShiftMap,
}

impl DskState {
    pub fn new(wifi: WifiChannel, side: Side, map: ShiftMap) -> Self {
        DskState { pending_bits: VecDeque::new(), overlap_set: overlap_set(wifi), emitted_log: Vec::new(), side, map }
    }

    pub fn with_overlap(overlap: BTreeSet<BleChannel>, side: Side, map: ShiftMap) -> Self {
        DskState { pending_bits: VecDeque::new(), overlap_set: overlap, emitted_log: Vec::new(), side, map }
    }

    pub fn submit(&mut self, bits: impl IntoIterator<Item = bool>) {
        self.pending_bits.extend(bits);
    }

    pub fn shift_map(&self) -> &ShiftMap {
        &self.map
    }

    /// Pops the oldest pending bit if this slot overlaps; logs the slot.
    pub fn step(&mut self, slot_channel: BleChannel) -> Option<bool> {
        let bit = if self.overlap_set.contains(&slot_channel) { self.pending_bits.pop_front() } else { None };
        let shift_hz = bit.map_or(0.0, |b| shift_for_bit(b, self.side, slot_channel, &self.map));
        self.emitted_log.push(LogEntry { slot: self.emitted_log.len(), channel: slot_channel, bit, shift_hz });
        bit
    }

    pub fn run(&mut self, plan: &HopPlan) -> Vec<Option<bool>> {
        plan.sequence.iter().map(|&c| self.step(c)).collect()
    }
}

/// Value-style transition.
pub fn dsk_step(mut state: DskState, slot_channel: BleChannel) -> (Option<bool>, DskState) {
    let bit = state.step(slot_channel);
    (bit, state)
}
