//! Snapshot export of per-node accumulators.
//!
//! CSV: header `row,col,t_left,t_total,input`, one line per node.
//!
//! Binary (little-endian): magic `RILLSNAP`, `u32` format version (1),
//! `u8` value kind (0 = u64, 1 = f64), `u64` time, `u32` width, `u32` depth,
//! then per node in row-major order `u32 row`, `u32 col` and three 8-byte
//! values `t_left`, `t_total`, `input`.

use std::collections::BTreeSet;
use std::io::{self, Write};

use super::{Observer, Sediment, SimState};

pub const MAGIC: &[u8; 8] = b"RILLSNAP";
pub const VERSION: u32 = 1;

pub fn write_csv<S: Sediment, W: Write>(state: &SimState<S>, out: &mut W) -> io::Result<()> {
    writeln!(out, "row,col,t_left,t_total,input")?;
    let g = state.geometry();
    for i in 0..g.node_count() {
        let v = g.node(i);
        writeln!(
            out,
            "{},{},{},{},{}",
            v.row,
            v.col,
            state.t_left()[i].to_csv(),
            state.t_total()[i].to_csv(),
            state.input()[i].to_csv()
        )?;
    }
    Ok(())
}

pub fn write_binary<S: Sediment, W: Write>(state: &SimState<S>, out: &mut W) -> io::Result<()> {
    let g = state.geometry();
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&[S::KIND])?;
    out.write_all(&state.time().to_le_bytes())?;
    out.write_all(&(g.width() as u32).to_le_bytes())?;
    out.write_all(&(g.depth() as u32).to_le_bytes())?;
    for i in 0..g.node_count() {
        let v = g.node(i);
        out.write_all(&(v.row as u32).to_le_bytes())?;
        out.write_all(&(v.col as u32).to_le_bytes())?;
        out.write_all(&Sediment::to_le_bytes(state.t_left()[i]))?;
        out.write_all(&Sediment::to_le_bytes(state.t_total()[i]))?;
        out.write_all(&Sediment::to_le_bytes(state.input()[i]))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotFormat {
    Csv,
    Binary,
}

/// Serializes the state at each requested time into memory.
#[derive(Debug, Clone)]
pub struct SnapshotRecorder {
    times: BTreeSet<u64>,
    format: SnapshotFormat,
    pub snapshots: Vec<(u64, Vec<u8>)>,
}

impl SnapshotRecorder {
    pub fn new(times: impl IntoIterator<Item = u64>, format: SnapshotFormat) -> Self {
        Self {
            times: times.into_iter().collect(),
            format,
            snapshots: Vec::new(),
        }
    }

    pub fn capture<S: Sediment>(&mut self, state: &SimState<S>) {
        let mut buf = Vec::new();
        match self.format {
            SnapshotFormat::Csv => write_csv(state, &mut buf),
            SnapshotFormat::Binary => write_binary(state, &mut buf),
        }
        .expect("writing to memory");
        self.snapshots.push((state.time(), buf));
    }
}

impl<S: Sediment> Observer<S> for SnapshotRecorder {
    fn observe(&mut self, state: &SimState<S>) {
        if self.times.contains(&state.time()) {
            self.capture(state);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::init;
    use crate::lattice::GridGeometry;

    #[test]
    fn csv_layout() {
        let g = GridGeometry::new(4, 2).unwrap();
        let mut s = init::<u64>(g, 1.0, 1, 0).unwrap();
        s.step(&mut []).unwrap();
        let mut out = Vec::new();
        write_csv(&s, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "row,col,t_left,t_total,input");
        assert_eq!(lines.len(), 9);
        assert!(lines[1].starts_with("1,0,"));
        assert!(lines[1].ends_with(",1,1"));
    }

    #[test]
    fn binary_layout() {
        let g = GridGeometry::new(6, 3).unwrap();
        let mut s = init::<u64>(g, 1.0, 1, 0).unwrap();
        s.run(4, &mut []).unwrap();
        let mut out = Vec::new();
        write_binary(&s, &mut out).unwrap();
        assert_eq!(&out[..8], MAGIC);
        assert_eq!(out.len(), 8 + 4 + 1 + 8 + 4 + 4 + 18 * 32);
        assert_eq!(u64::from_le_bytes(out[13..21].try_into().unwrap()), 4);
        // Last record's input field.
        let tail = &out[out.len() - 8..];
        assert_eq!(u64::from_le_bytes(tail.try_into().unwrap()), *s.input().last().unwrap());
    }

    #[test]
    fn recorder_times() {
        let g = GridGeometry::new(4, 2).unwrap();
        let mut s = init::<f64>(g, 1.0, 1.0, 0).unwrap();
        let mut rec = SnapshotRecorder::new([2, 5], SnapshotFormat::Csv);
        s.run(6, &mut [&mut rec]).unwrap();
        let times: Vec<_> = rec.snapshots.iter().map(|(t, _)| *t).collect();
        assert_eq!(times, vec![2, 5]);
    }
}
