//! File formats: CSV tables with a header row, raw IQ dumps with a text
//! sidecar, Hamming golden vectors and gnuplot scripts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use dopplerfi_core::ble_rx::DemodTrace;
use dopplerfi_core::codec::{self, Code};
use dopplerfi_core::dsk::LogEntry;
use dopplerfi_core::wifi_rx::CsiVector;
use dopplerfi_core::{Complex64, IqBuffer};
use serde::Serialize;

use crate::experiment::TrialRecord;
use crate::legacy::LegacyRow;
use crate::sweep::SweepRow;
use crate::{Error, Result};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_owned(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |e| Error::Csv { path: path.to_owned(), message: e.to_string() }
}

/// Writes `rows` with a header taken from the row type's field names.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Header-only tables for empty row sets, so readers always find columns.
fn write_raw(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(&r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_emitted_log(path: &Path, log: &[LogEntry]) -> Result<()> {
    let rows = log.iter().map(|e| {
        vec![
            e.slot.to_string(),
            e.channel.index().to_string(),
            e.bit.map_or(String::new(), |b| u8::from(b).to_string()),
            e.shift_hz.to_string(),
        ]
    });
    write_raw(path, &["slot", "channel", "bit", "shift_hz"], rows)
}

/// One row per phase step; `rssi` is taken at the sample the step ends on.
pub fn write_demod_trace(path: &Path, trace: &DemodTrace) -> Result<()> {
    let rows = trace.phi.iter().enumerate().map(|(n, phi)| {
        let rssi = trace.rssi.get(n + 1).copied().unwrap_or(0.0);
        vec![n.to_string(), phi.to_string(), rssi.to_string(), u8::from(trace.slicer_bits[n]).to_string()]
    });
    write_raw(path, &["n", "phi", "rssi", "o"], rows)
}

/// Amplitude of every subcarrier of every vector, in stream order.
pub fn write_csi_stream(path: &Path, stream: &[CsiVector]) -> Result<()> {
    let rows = stream.iter().flat_map(|v| {
        CsiVector::subcarriers().zip(v.amplitudes()).map(move |(k, a)| vec![v.packet_time.to_string(), k.to_string(), a.to_string()])
    });
    write_raw(path, &["time", "k", "amplitude"], rows)
}

#[derive(Serialize)]
struct TrialRow {
    trial: u64,
    bits_sent: usize,
    bit_errors: usize,
    erasures: usize,
    bits_unsent: usize,
    frame_ok: bool,
    delivered_bits: usize,
    opportunities: usize,
    seconds: f64,
    throughput_bps: f64,
}

pub fn write_trials(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let rows: Vec<TrialRow> = records
        .iter()
        .map(|r| TrialRow {
            trial: r.trial,
            bits_sent: r.bits_sent,
            bit_errors: r.bit_errors,
            erasures: r.erasures,
            bits_unsent: r.bits_unsent,
            frame_ok: r.frame_ok,
            delivered_bits: r.delivered_bits(),
            opportunities: r.opportunities,
            seconds: r.seconds,
            throughput_bps: r.throughput_bps(),
        })
        .collect();
    write_rows(path, &rows)
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_rows(path, rows)
}

pub fn write_legacy(path: &Path, rows: &[LegacyRow]) -> Result<()> {
    write_rows(path, rows)
}

/// Sidecar path: the dump path with `.hdr` appended.
pub fn header_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".hdr");
    PathBuf::from(s)
}

/// Interleaved I/Q as little-endian f32, plus a `key=value` sidecar.
pub fn write_iq(path: &Path, buf: &IqBuffer) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for s in buf.samples() {
        w.write_all(&(s.re as f32).to_le_bytes()).map_err(io_err(path))?;
        w.write_all(&(s.im as f32).to_le_bytes()).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    let hdr = header_path(path);
    let text = format!(
        "sample_rate={}\ncenter_freq={}\nformat=cf32_le\nsamples={}\n",
        buf.sample_rate(),
        buf.center_freq(),
        buf.len()
    );
    fs::write(&hdr, text).map_err(io_err(&hdr))
}

pub fn read_iq(path: &Path) -> Result<IqBuffer> {
    let hdr = header_path(path);
    let text = fs::read_to_string(&hdr).map_err(io_err(&hdr))?;
    let field = |key: &str| -> Result<f64> {
        text.lines()
            .filter_map(|l| l.split_once('='))
            .find(|(k, _)| k.trim() == key)
            .and_then(|(_, v)| v.trim().parse().ok())
            .ok_or_else(|| Error::Format(format!("{}: missing or bad `{key}`", hdr.display())))
    };
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format(format!("{}: length {} is not a whole number of samples", path.display(), bytes.len())));
    }
    let f = |b: &[u8]| f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64;
    let samples = bytes.chunks_exact(8).map(|c| Complex64::new(f(&c[..4]), f(&c[4..]))).collect();
    Ok(IqBuffer::new(samples, field("sample_rate")?, field("center_freq")?)?)
}

/// Every data word of `code` with its codeword, one "data_hex codeword_hex"
/// line each.
pub fn golden_text(code: Code) -> String {
    codec::golden_vectors(code).into_iter().map(|(d, c)| format!("{d} {c}\n")).collect()
}

pub fn write_golden(path: &Path, code: Code) -> Result<()> {
    fs::write(path, golden_text(code)).map_err(io_err(path))
}

pub fn parse_golden(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut it = l.split_whitespace();
            match (it.next(), it.next(), it.next()) {
                (Some(d), Some(c), None) => Ok((d.to_owned(), c.to_owned())),
                _ => Err(Error::Format(format!("bad golden line `{l}`"))),
            }
        })
        .collect()
}

/// gnuplot script drawing BER and throughput against SNR from `csv_name`.
pub fn sweep_plot_script(csv_name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set terminal pngcairo size 900,600\n\
         set output 'ber.png'\n\
         set xlabel 'SNR (dB)'\n\
         set ylabel 'BER'\n\
         set logscale y\n\
         plot '{csv_name}' using 4:9 with linespoints title 'BER'\n\
         unset logscale y\n\
         set output 'throughput.png'\n\
         set ylabel 'throughput (bit/s)'\n\
         plot '{csv_name}' using 4:13 with linespoints title 'throughput'\n"
    )
}

pub fn trace_plot_script(trace_csv: &str, csi_csv: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 900,600\n\
         set output 'demod_trace.png'\n\
         set xlabel 'sample'\n\
         plot '{trace_csv}' using 1:2 with steps title 'phase step', '' using 1:4 with steps title 'slicer'\n\
         set output 'csi.png'\n\
         set xlabel 'subcarrier'\n\
         set ylabel 'amplitude'\n\
         plot '{csi_csv}' using 2:3 with points title 'CSI'\n"
    )
}
