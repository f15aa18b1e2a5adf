use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 7] = ["iter", "f", "grad_factor_norm", "dist", "rel_err", "eta", "elapsed_s"];

/// State at iterate `k`, before the step that produces `k + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub f: f64,
    pub grad_factor_norm: f64,
    pub dist: Option<f64>,
    pub rel_err: Option<f64>,
    pub eta: f64,
    /// Algorithm time since the run started; reference metrics are excluded.
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterRecord>,
}

impl IterationTrace {
    pub fn push(&mut self, rec: IterRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.iter < rec.iter));
        self.records.push(rec);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterRecord> {
        self.records.last()
    }

    pub fn dists(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.dist).collect()
    }

    pub fn rel_errs(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.rel_err).collect()
    }

    /// Time between consecutive records.
    pub fn iteration_times(&self) -> Vec<f64> {
        self.records.windows(2).map(|w| w[1].elapsed_s - w[0].elapsed_s).collect()
    }

    /// First iteration whose relative error is at most `target`.
    pub fn first_below(&self, target: f64) -> Option<usize> {
        self.records.iter().find(|r| r.rel_err.is_some_and(|e| e <= target)).map(|r| r.iter)
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(TRACE_HEADER)?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for r in &self.records {
            wtr.write_record([
                r.iter.to_string(),
                format!("{:e}", r.f),
                format!("{:e}", r.grad_factor_norm),
                opt(r.dist),
                opt(r.rel_err),
                format!("{:e}", r.eta),
                format!("{:e}", r.elapsed_s),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Parses and validates a trace CSV: exact header, seven columns, strictly
    /// increasing `iter`, non-negative times.
    pub fn read_csv(r: impl Read) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        if header.iter().ne(TRACE_HEADER.iter().copied()) {
            return Err(Error::Parse(format!("unexpected trace header {header:?}")));
        }
        let num =
            |s: &str, what: &str| -> Result<f64> { s.parse::<f64>().map_err(|e| Error::Parse(format!("{what}: {e}"))) };
        let opt = |s: &str, what: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s, what).map(Some)
            }
        };
        let mut trace = IterationTrace::default();
        for row in rdr.records() {
            let row = row?;
            if row.len() != TRACE_HEADER.len() {
                return Err(Error::Parse(format!("row with {} columns", row.len())));
            }
            let iter: usize = row[0].parse().map_err(|e| Error::Parse(format!("iter: {e}")))?;
            if trace.last().is_some_and(|l| l.iter >= iter) {
                return Err(Error::Parse(format!("iter {iter} not increasing")));
            }
            let rec = IterRecord {
                iter,
                f: num(&row[1], "f")?,
                grad_factor_norm: num(&row[2], "grad_factor_norm")?,
                dist: opt(&row[3], "dist")?,
                rel_err: opt(&row[4], "rel_err")?,
                eta: num(&row[5], "eta")?,
                elapsed_s: num(&row[6], "elapsed_s")?,
            };
            if rec.elapsed_s < 0.0 {
                return Err(Error::Parse(format!("negative time at iter {iter}")));
            }
            trace.records.push(rec);
        }
        Ok(trace)
    }
}
