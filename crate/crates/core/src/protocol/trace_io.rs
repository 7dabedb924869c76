//! Line-oriented trace files.
//!
//! ```text
//! # arqkey-trace v1 r0=4 rc=2 power=1000 k=10 payload_bits=128 max_frames=10000 seed=0 mean_gain_bob=1 mean_gain_eve=1
//! index,h_b,h_e,acked,intercepted,payload
//! # exchange 0
//! 0,0.8312,1.094,1,1,3fa0...
//! ```
//!
//! One frame per line. `acked` and `intercepted` are `0`/`1`, `payload` is
//! [`Bits::to_hex`]. Gains use Rust's shortest round-trip float formatting,
//! so a parsed trace reproduces the written one exactly.

use std::io::{BufRead, Write};

use thiserror::Error;

use super::{ExchangeRun, ExchangeTrace, FrameRecord, ProtocolParams};
use crate::analysis::OperatingPoint;
use crate::bits::Bits;
use crate::fading::{bob_decodes, eve_erased, BlockGains, ChannelSpec};

const MAGIC: &str = "# arqkey-trace v1";
pub const COLUMNS: &str = "index,h_b,h_e,acked,intercepted,payload";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Everything needed to re-derive a trace's flags from its gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceHeader {
    pub params: ProtocolParams,
    pub mean_gain_bob: f64,
    pub mean_gain_eve: f64,
}

impl TraceHeader {
    pub fn new(params: &ProtocolParams, spec: &ChannelSpec) -> Self {
        Self {
            params: *params,
            mean_gain_bob: spec.mean_gain_bob(),
            mean_gain_eve: spec.mean_gain_eve(),
        }
    }

    fn line(&self) -> String {
        let p = &self.params;
        format!(
            "{MAGIC} r0={} rc={} power={} k={} payload_bits={} max_frames={} seed={} mean_gain_bob={} mean_gain_eve={}",
            p.point.r0,
            p.point.rc,
            p.point.power,
            p.point.k,
            p.payload_bits,
            p.max_frames,
            p.seed,
            self.mean_gain_bob,
            self.mean_gain_eve
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub header: TraceHeader,
    /// Frames of each exchange, in file order.
    pub exchanges: Vec<Vec<FrameRecord>>,
}

pub fn write_trace<W: Write>(
    w: &mut W,
    header: &TraceHeader,
    traces: &[ExchangeTrace],
) -> std::io::Result<()> {
    write_trace_header(w, header)?;
    for (i, t) in traces.iter().enumerate() {
        write_exchange(w, i as u64, t)?;
    }
    Ok(())
}

/// Header and column rows; follow with one [`write_exchange`] per exchange.
pub fn write_trace_header<W: Write>(w: &mut W, header: &TraceHeader) -> std::io::Result<()> {
    writeln!(w, "{}", header.line())?;
    writeln!(w, "{COLUMNS}")
}

pub fn write_exchange<W: Write>(
    w: &mut W,
    index: u64,
    trace: &ExchangeTrace,
) -> std::io::Result<()> {
    writeln!(w, "# exchange {index}")?;
    for f in &trace.frames {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            f.index,
            f.gains.h_b,
            f.gains.h_e,
            u8::from(f.bob_acked),
            u8::from(f.eve_intercepted),
            f.payload.to_hex()
        )?;
    }
    Ok(())
}

pub fn read_trace<R: BufRead>(r: R) -> Result<TraceFile, TraceError> {
    let mut lines = r.lines().enumerate();
    let err = |line: usize, msg: &str| TraceError::Parse {
        line: line + 1,
        msg: msg.to_string(),
    };

    let (n, first) = lines.next().ok_or_else(|| err(0, "empty trace"))?;
    let first = first?;
    let rest = first
        .strip_prefix(MAGIC)
        .ok_or_else(|| err(n, "missing trace header"))?;
    let header = parse_header(rest).map_err(|m| err(n, &m))?;

    let (n, cols) = lines.next().ok_or_else(|| err(1, "missing column row"))?;
    if cols?.trim() != COLUMNS {
        return Err(err(n, "unexpected column row"));
    }

    let width = header.params.payload_bits;
    let mut exchanges: Vec<Vec<FrameRecord>> = Vec::new();
    for (n, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with("# exchange") {
            exchanges.push(Vec::new());
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let current = exchanges
            .last_mut()
            .ok_or_else(|| err(n, "frame before any exchange marker"))?;
        current.push(parse_frame(line, width).map_err(|m| err(n, &m))?);
    }
    Ok(TraceFile { header, exchanges })
}

fn parse_header(rest: &str) -> Result<TraceHeader, String> {
    let mut get = std::collections::HashMap::new();
    for kv in rest.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or(format!("bad header field {kv:?}"))?;
        get.insert(k, v);
    }
    fn field<T: std::str::FromStr>(
        m: &std::collections::HashMap<&str, &str>,
        k: &str,
    ) -> Result<T, String> {
        m.get(k)
            .ok_or(format!("header lacks {k}"))?
            .parse()
            .map_err(|_| format!("header field {k} is malformed"))
    }
    let point = OperatingPoint::new(
        field(&get, "r0")?,
        field(&get, "rc")?,
        field(&get, "power")?,
        field(&get, "k")?,
    )
    .map_err(|e| e.to_string())?;
    let params = ProtocolParams::new(point, field(&get, "seed")?)
        .with_payload_bits(field(&get, "payload_bits")?)
        .with_max_frames(field(&get, "max_frames")?);
    Ok(TraceHeader {
        params,
        mean_gain_bob: field(&get, "mean_gain_bob")?,
        mean_gain_eve: field(&get, "mean_gain_eve")?,
    })
}

fn parse_frame(line: &str, width: usize) -> Result<FrameRecord, String> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 6 {
        return Err(format!("expected 6 fields, found {}", f.len()));
    }
    let flag = |s: &str| match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(format!("bad flag {s:?}")),
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| format!("bad number {s:?}"));
    Ok(FrameRecord {
        index: f[0].parse().map_err(|_| format!("bad index {:?}", f[0]))?,
        gains: BlockGains {
            h_b: num(f[1])?,
            h_e: num(f[2])?,
        },
        bob_acked: flag(f[3])?,
        eve_intercepted: flag(f[4])?,
        payload: Bits::from_hex(f[5], width).map_err(|e| e.to_string())?,
    })
}

/// Frames whose recorded flags disagree with the thresholds applied to
/// their recorded gains. Each entry is `(exchange, frame index)`.
pub fn inconsistent_frames(file: &TraceFile) -> Vec<(usize, u64)> {
    let pt = file.header.params.point;
    let mut bad = Vec::new();
    for (e, frames) in file.exchanges.iter().enumerate() {
        for f in frames {
            let acked = bob_decodes(pt.r0, f.gains.h_b, pt.power);
            let heard = !eve_erased(pt.r0, pt.rc, f.gains.h_e, pt.power);
            if acked != f.bob_acked || heard != f.eve_intercepted {
                bad.push((e, f.index));
            }
        }
    }
    bad
}

impl TraceFile {
    pub fn traces(&self) -> Vec<ExchangeTrace> {
        self.exchanges
            .iter()
            .cloned()
            .map(ExchangeTrace::from_frames)
            .collect()
    }

    /// Traces with completion judged by whether `k` frames were ACKed.
    pub fn runs(&self) -> Vec<ExchangeRun> {
        let k = self.header.params.point.k as usize;
        self.traces()
            .into_iter()
            .map(|trace| ExchangeRun {
                completed: trace.acked_indices.len() >= k,
                trace,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::run_exchange;
    use crate::rng::stream;

    fn sample() -> (TraceHeader, Vec<ExchangeTrace>) {
        let point = OperatingPoint::new(4.0, 2.0, 30.0, 3).unwrap();
        let params = ProtocolParams::new(point, 42).with_payload_bits(13);
        let spec = ChannelSpec::symmetric(30.0).unwrap();
        let traces = (0..5)
            .map(|i| run_exchange(&params, &spec, &mut stream(42, i)).unwrap())
            .collect();
        (TraceHeader::new(&params, &spec), traces)
    }

    #[test]
    fn roundtrip_is_exact() {
        let (header, traces) = sample();
        let mut buf = Vec::new();
        write_trace(&mut buf, &header, &traces).unwrap();
        let file = read_trace(buf.as_slice()).unwrap();
        assert_eq!(file.header, header);
        assert_eq!(file.traces(), traces);
        assert!(inconsistent_frames(&file).is_empty());

        let mut again = Vec::new();
        write_trace(&mut again, &file.header, &file.traces()).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn tampered_flags_are_detected() {
        let (header, traces) = sample();
        let mut buf = Vec::new();
        write_trace(&mut buf, &header, &traces).unwrap();
        let mut file = read_trace(buf.as_slice()).unwrap();
        let f = &mut file.exchanges[1][0];
        f.bob_acked = !f.bob_acked;
        assert_eq!(inconsistent_frames(&file), vec![(1, 0)]);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(read_trace("".as_bytes()).is_err());
        assert!(read_trace("index,h_b\n".as_bytes()).is_err());
        let (header, _) = sample();
        let bad = format!("{}\n{COLUMNS}\n0,1,1,1,1,0000\n", header.line());
        assert!(matches!(
            read_trace(bad.as_bytes()),
            Err(TraceError::Parse { line: 3, .. })
        ));
        let bad = format!(
            "{}\n{COLUMNS}\n# exchange 0\n0,1,1,2,1,0000\n",
            header.line()
        );
        assert!(read_trace(bad.as_bytes()).is_err());
    }
}
