use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sample rate must be positive, got {0}")]
    InvalidSampleRate(f64),
    #[error("artificial shift {shift_hz} Hz exceeds the {limit_hz} Hz cap")]
    ShiftOutOfRange { shift_hz: f64, limit_hz: f64 },
    #[error("payload of {bits} bits does not fit ({capacity} available)")]
    PayloadTooLong { bits: usize, capacity: usize },
    #[error("Wi-Fi channel {0} is not a 2.4 GHz channel")]
    InvalidWifiChannel(u8),
    #[error("BLE channel {0} is outside 0..=39")]
    InvalidBleChannel(u8),
    #[error("channel at {offset_hz} Hz lies outside the {span_hz} Hz wideband span")]
    OutsideSpan { offset_hz: f64, span_hz: f64 },
    #[error("emission {index} does not fit the timeline: {reason}")]
    EmissionOutOfBounds { index: usize, reason: &'static str },
    #[error("sample rate {from} Hz cannot be mixed onto a {to} Hz timeline")]
    RateMismatch { from: f64, to: f64 },
    #[error("input length {len} is not a multiple of {block}")]
    BlockLength { len: usize, block: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("shift pair ({bit0_hz}, {bit1_hz}) Hz is separated by less than {min_hz} Hz")]
    ShiftPairTooClose { bit0_hz: f64, bit1_hz: f64, min_hz: f64 },
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("averaged peak index sits on the nominal index; bit erased")]
    Erasure,
}
