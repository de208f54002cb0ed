//! CSV emitters. Every file starts with a header row; reals are printed
//! with nine significant digits so reruns are byte-identical.

use std::io::{self, Write};

use crate::fmt::sig9;

use super::histogram::{Histogram, LoadHistogram};

pub const LOAD_HISTOGRAM_HEADER: &str = "row,load,count";
pub const CORRELATION_HEADER: &str = "eta,n,K";
pub const BINNED_HEADER: &str = "row,bin_lo,bin_hi,mass";
pub const LARGE_FLOOD_HEADER: &str = "eta,row,large_flood_fraction";
pub const SWITCH_HEADER: &str = "eta,row,switch_rate";
pub const CATASTROPHE_HEADER: &str = "eta,row,events,flooded,fraction";

pub fn write_load_histograms<W: Write>(out: &mut W, hists: &[LoadHistogram]) -> io::Result<()> {
    writeln!(out, "{LOAD_HISTOGRAM_HEADER}")?;
    for h in hists {
        for (load, &count) in h.counts.iter().enumerate().filter(|(_, &c)| c > 0) {
            writeln!(out, "{},{load},{count}", h.row)?;
        }
    }
    Ok(())
}

pub fn write_correlation<W: Write>(out: &mut W, rows: &[(f64, u64, f64)]) -> io::Result<()> {
    writeln!(out, "{CORRELATION_HEADER}")?;
    for &(eta, n, k) in rows {
        writeln!(out, "{},{n},{}", sig9(eta), sig9(k))?;
    }
    Ok(())
}

/// Binned measure per row; each row is prefixed by its label.
pub fn write_binned<W: Write>(out: &mut W, rows: &[(String, &Histogram)]) -> io::Result<()> {
    writeln!(out, "{BINNED_HEADER}")?;
    for (label, h) in rows {
        for i in 0..h.counts().len() {
            let (lo, hi) = h.bounds(i);
            writeln!(out, "{label},{},{},{}", sig9(lo), sig9(hi), sig9(h.mass(i)))?;
        }
    }
    Ok(())
}

pub fn write_large_flood<W: Write>(out: &mut W, rows: &[(f64, usize, f64)]) -> io::Result<()> {
    writeln!(out, "{LARGE_FLOOD_HEADER}")?;
    for &(eta, row, f) in rows {
        writeln!(out, "{},{row},{}", sig9(eta), sig9(f))?;
    }
    Ok(())
}

pub fn write_switch_rates<W: Write>(out: &mut W, rows: &[(f64, usize, f64)]) -> io::Result<()> {
    writeln!(out, "{SWITCH_HEADER}")?;
    for &(eta, row, s) in rows {
        writeln!(out, "{},{row},{}", sig9(eta), sig9(s))?;
    }
    Ok(())
}

pub fn write_catastrophe<W: Write>(out: &mut W, rows: &[(f64, usize, u64, u64)]) -> io::Result<()> {
    writeln!(out, "{CATASTROPHE_HEADER}")?;
    for &(eta, row, events, flooded) in rows {
        let frac = if events == 0 { 0.0 } else { flooded as f64 / events as f64 };
        writeln!(out, "{},{row},{events},{flooded},{}", sig9(eta), sig9(frac))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headers_and_rows() {
        let mut h = LoadHistogram::new(2);
        h.add(1);
        h.add(3);
        h.add(3);
        let mut buf = Vec::new();
        write_load_histograms(&mut buf, &[h]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "row,load,count\n2,1,1\n2,3,2\n");

        let mut buf = Vec::new();
        write_correlation(&mut buf, &[(0.1, 49, 1.0 / 3.0)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "eta,n,K\n0.1,49,0.333333333\n");

        let mut hist = Histogram::uniform(0.0, 1.0, 2).unwrap();
        hist.add(0.2);
        let mut buf = Vec::new();
        write_binned(&mut buf, &[("1".into(), &hist)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "row,bin_lo,bin_hi,mass\n1,0,0.5,1\n1,0.5,1,0\n");

        let mut buf = Vec::new();
        write_catastrophe(&mut buf, &[(1.0, 3, 4, 1)]).unwrap();
        assert!(String::from_utf8(buf).unwrap().ends_with("1,3,4,1,0.25\n"));
    }
}
