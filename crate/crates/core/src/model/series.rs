use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Count series observed at consecutive integer times starting at `start`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub start: i64,
    pub counts: Vec<u64>,
}

#[derive(Debug, Deserialize)]
struct Row {
    t: i64,
    y: f64,
}

impl TimeSeries {
    pub fn new(start: i64, counts: Vec<u64>) -> Self {
        Self { start, counts }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Time index of the last observation.
    pub fn end(&self) -> i64 {
        self.start + self.counts.len() as i64 - 1
    }

    pub fn times(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.counts.len()).map(move |i| self.start + i as i64)
    }

    /// Position of time `t` in `counts`.
    pub fn position(&self, t: i64) -> Option<usize> {
        if t < self.start || t > self.end() {
            None
        } else {
            Some((t - self.start) as usize)
        }
    }

    pub fn at(&self, t: i64) -> Option<u64> {
        self.position(t).map(|i| self.counts[i])
    }

    /// Observations with time `<= t`.
    pub fn truncated(&self, t: i64) -> TimeSeries {
        let keep = (t - self.start + 1).clamp(0, self.counts.len() as i64) as usize;
        TimeSeries::new(self.start, self.counts[..keep].to_vec())
    }

    /// Copy with `window` written over the observations starting at time `from`.
    pub fn spliced(&self, from: i64, window: &[u64]) -> Result<TimeSeries> {
        let i = self
            .position(from)
            .filter(|i| i + window.len() <= self.counts.len())
            .ok_or_else(|| {
                Error::input(format!(
                    "window at t={from} of length {} lies outside the series",
                    window.len()
                ))
            })?;
        let mut counts = self.counts.clone();
        counts[i..i + window.len()].copy_from_slice(window);
        Ok(TimeSeries::new(self.start, counts))
    }

    /// Parses a `t,y` CSV. Times must be consecutive; counts non-negative integers.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "y"] {
            return Err(Error::input(format!(
                "expected header `t,y`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut start = None;
        let mut counts = Vec::new();
        for (line, row) in rdr.deserialize::<Row>().enumerate() {
            let row = row?;
            let expected = start.map_or(row.t, |s: i64| s + counts.len() as i64);
            if row.t != expected {
                return Err(Error::input(format!(
                    "row {}: expected t={expected}, got t={}",
                    line + 1,
                    row.t
                )));
            }
            if !(row.y >= 0.0 && row.y.fract() == 0.0 && row.y <= u64::MAX as f64) {
                return Err(Error::input(format!(
                    "row {}: count must be a non-negative integer, got {}",
                    line + 1,
                    row.y
                )));
            }
            start.get_or_insert(row.t);
            counts.push(row.y as u64);
        }
        let start = start.ok_or_else(|| Error::input("series is empty"))?;
        Ok(Self::new(start, counts))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "y"])?;
        for (t, y) in self.times().zip(&self.counts) {
            w.write_record([t.to_string(), y.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_uses_lf_and_header() {
        let s = TimeSeries::new(3, vec![0, 5, 12]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "t,y\n3,0\n4,5\n5,12\n");
        assert_eq!(TimeSeries::read_csv(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn rejects_negative_or_fractional_counts() {
        assert!(TimeSeries::read_csv("t,y\n0,-1\n".as_bytes()).is_err());
        assert!(TimeSeries::read_csv("t,y\n0,1.5\n".as_bytes()).is_err());
        assert!(TimeSeries::read_csv("t,y\n0,1\n2,1\n".as_bytes()).is_err());
        assert!(TimeSeries::read_csv("t,y\n".as_bytes()).is_err());
        assert!(TimeSeries::read_csv("time,y\n0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn splice_and_truncate() {
        let s = TimeSeries::new(10, vec![1, 2, 3, 4, 5]);
        assert_eq!(s.end(), 14);
        assert_eq!(s.spliced(12, &[9, 9]).unwrap().counts, vec![1, 2, 9, 9, 5]);
        assert!(s.spliced(14, &[9, 9]).is_err());
        assert!(s.spliced(9, &[9]).is_err());
        assert_eq!(s.truncated(11).counts, vec![1, 2]);
        assert_eq!(s.truncated(100).counts.len(), 5);
        assert!(s.truncated(0).is_empty());
    }
}
