//! Trace and ledger files.
//!
//! Traces are JSON-lines, one round per line with keys `a`, `b`, `mu`, `x`.
//! Ledger files prepend a header line `{"K0": ...}` and then add `M`, `K`,
//! `discard` to each round line. Numbers are written in shortest round-trip
//! decimal form, so reading a file back yields bit-identical values for all
//! finite doubles.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{CapitalLedger, ProtocolError, Round, RoundRecord, Trace};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: ProtocolError,
    },
    #[error("ledger file missing K0 header line")]
    MissingHeader,
    #[error("ledger has {ledger} rounds but trace has {trace}")]
    LengthMismatch { ledger: usize, trace: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct LedgerHeader {
    #[serde(rename = "K0")]
    k0: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct LedgerLine {
    a: f64,
    b: f64,
    mu: f64,
    x: f64,
    #[serde(rename = "M")]
    tickets: f64,
    #[serde(rename = "K")]
    capital: f64,
    discard: f64,
}

pub fn write_trace<W: Write>(mut w: W, trace: &Trace) -> Result<(), IoError> {
    for round in trace.rounds() {
        let record = RoundRecord::from(round);
        serde_json::to_writer(&mut w, &record).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_trace_records<R: BufRead>(r: R) -> Result<Vec<RoundRecord>, IoError> {
    let mut records = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RoundRecord =
            serde_json::from_str(&line).map_err(|source| IoError::Parse { line: i + 1, source })?;
        records.push(record);
    }
    Ok(records)
}

pub fn read_trace<R: BufRead>(r: R) -> Result<Trace, IoError> {
    let records = read_trace_records(r)?;
    crate::protocol::trace_from_records(&records)
        .map_err(|source| IoError::Invalid { line: 0, source })
}

pub fn write_ledger<W: Write>(
    mut w: W,
    trace: &Trace,
    ledger: &CapitalLedger,
) -> Result<(), IoError> {
    if trace.len() != ledger.entries().len() {
        return Err(IoError::LengthMismatch { ledger: ledger.entries().len(), trace: trace.len() });
    }
    serde_json::to_writer(&mut w, &LedgerHeader { k0: ledger.initial() })
        .map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    for (round, entry) in trace.rounds().iter().zip(ledger.entries()) {
        let line = LedgerLine {
            a: round.forecast().lower(),
            b: round.forecast().upper(),
            mu: round.forecast().mean(),
            x: round.outcome(),
            tickets: entry.tickets,
            capital: entry.capital_after,
            discard: entry.discarded,
        };
        serde_json::to_writer(&mut w, &line).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_ledger<R: BufRead>(r: R) -> Result<(Trace, CapitalLedger), IoError> {
    let mut lines = r.lines().enumerate();
    let (_, header_line) = lines.next().ok_or(IoError::MissingHeader)?;
    let header: LedgerHeader = serde_json::from_str(&header_line?)
        .map_err(|source| IoError::Parse { line: 1, source })?;
    let mut trace = Trace::new();
    let mut ledger = CapitalLedger::new(header.k0);
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LedgerLine =
            serde_json::from_str(&line).map_err(|source| IoError::Parse { line: i + 1, source })?;
        let forecast = crate::protocol::Forecast::new(rec.a, rec.b, rec.mu)
            .map_err(|source| IoError::Invalid { line: i + 1, source })?;
        let round = Round::new(forecast, rec.x)
            .map_err(|source| IoError::Invalid { line: i + 1, source })?;
        trace.push(round);
        ledger.push_raw(rec.tickets, rec.capital, rec.discard);
    }
    Ok((trace, ledger))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{new_game, play_round, Forecast};

    fn sample_state() -> crate::protocol::GameState {
        let f1 = Forecast::new(-1.0, 1.0, 0.1).unwrap();
        let f2 = Forecast::new(0.0, 2.5, 1.0 / 3.0 + 0.5).unwrap();
        let s = new_game(1.0);
        let s = play_round(s, f1, 0.123456789012345, 0.3333333333333333, 0.0).unwrap();
        play_round(s, f2, -2.5, 2.1, 0.0625).unwrap()
    }

    #[test]
    fn trace_round_trip_is_value_exact() {
        let s = sample_state();
        let mut buf = Vec::new();
        write_trace(&mut buf, s.trace()).unwrap();
        let back = read_trace(buf.as_slice()).unwrap();
        assert_eq!(s.trace(), &back);
        for (r1, r2) in s.trace().rounds().iter().zip(back.rounds()) {
            assert_eq!(r1.outcome().to_bits(), r2.outcome().to_bits());
        }
    }

    #[test]
    fn ledger_round_trip_is_value_exact() {
        let s = sample_state();
        let mut buf = Vec::new();
        write_ledger(&mut buf, s.trace(), s.ledger()).unwrap();
        let (trace, ledger) = read_ledger(buf.as_slice()).unwrap();
        assert_eq!(s.trace(), &trace);
        assert_eq!(s.ledger(), &ledger);
    }

    #[test]
    fn invalid_round_rejected_with_line_number() {
        let text = "{\"a\":-1.0,\"b\":1.0,\"mu\":0.0,\"x\":2.0}\n";
        let err = read_trace(text.as_bytes()).unwrap_err();
        assert!(matches!(err, IoError::Invalid { .. }));
    }
}
