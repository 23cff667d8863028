use std::io::{BufRead, Write};

use super::Checkpoint;
use crate::losses::LossWeights;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub sds: f64,
    pub ocr: f64,
    pub acap: f64,
    pub total: f64,
    pub gradient_norm: f64,
    pub learning_rate: f64,
}

/// Per-iteration loss history of a run plus its checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub weights: LossWeights,
    pub records: Vec<TraceRecord>,
    pub checkpoints: Vec<Checkpoint>,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("trace line {line}: {message}")]
    Parse { line: usize, message: String },
}

const COLUMNS: &str = "iteration\tl_sds\tl_ocr\tl_acap\ttotal\tgrad_norm\tlr";

impl RunTrace {
    pub fn new(weights: LossWeights) -> Self {
        Self {
            weights,
            records: Vec::new(),
            checkpoints: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn totals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.total).collect()
    }

    /// Trailing moving average of the total loss over `window` records.
    pub fn moving_average(&self, window: usize) -> Vec<f64> {
        let totals = self.totals();
        if window == 0 || totals.len() < window {
            return Vec::new();
        }
        totals.windows(window).map(|w| w.iter().sum::<f64>() / window as f64).collect()
    }

    pub fn write_tsv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "# glyphmorph run trace")?;
        writeln!(
            out,
            "# weights\tsds={}\tocr={}\tacap={}",
            self.weights.sds, self.weights.ocr, self.weights.acap
        )?;
        writeln!(out, "{COLUMNS}")?;
        for r in &self.records {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.iteration, r.sds, r.ocr, r.acap, r.total, r.gradient_norm, r.learning_rate
            )?;
        }
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8")
    }

    /// Parse a trace written by [`write_tsv`](Self::write_tsv). Checkpoints
    /// are stored separately and come back empty.
    pub fn read_tsv(input: impl BufRead) -> Result<Self, TraceError> {
        let mut weights = None;
        let mut records = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let err = |message: String| TraceError::Parse { line: i + 1, message };
            if let Some(rest) = line.strip_prefix("# weights") {
                let mut w = LossWeights::new(f64::NAN, f64::NAN, f64::NAN);
                for field in rest.split('\t').filter(|f| !f.is_empty()) {
                    let (k, v) = field.split_once('=').ok_or_else(|| err(format!("bad weight field {field:?}")))?;
                    let v: f64 = v.parse().map_err(|_| err(format!("bad weight value {v:?}")))?;
                    match k {
                        "sds" => w.sds = v,
                        "ocr" => w.ocr = v,
                        "acap" => w.acap = v,
                        _ => return Err(err(format!("unknown weight {k:?}"))),
                    }
                }
                weights = Some(w);
                continue;
            }
            if line.starts_with('#') || line == COLUMNS || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 7 {
                return Err(err(format!("expected 7 columns, got {}", f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number {s:?}")));
            records.push(TraceRecord {
                iteration: f[0].parse().map_err(|_| err(format!("bad iteration {:?}", f[0])))?,
                sds: num(f[1])?,
                ocr: num(f[2])?,
                acap: num(f[3])?,
                total: num(f[4])?,
                gradient_norm: num(f[5])?,
                learning_rate: num(f[6])?,
            });
        }
        let weights = weights.ok_or_else(|| TraceError::Parse {
            line: 0,
            message: "missing weights header".into(),
        })?;
        Ok(Self {
            weights,
            records,
            checkpoints: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_round_trip() {
        let mut t = RunTrace::new(LossWeights::for_region(3));
        for i in 0..3 {
            t.records.push(TraceRecord {
                iteration: i,
                sds: 0.1 * i as f64,
                ocr: 1.0 / 3.0,
                acap: 1e-12,
                total: 2.5,
                gradient_norm: 7.0,
                learning_rate: 0.02,
            });
        }
        let text = t.to_tsv();
        assert!(text.contains("ocr=1.5\tacap=0.5"));
        let back = RunTrace::read_tsv(text.as_bytes()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn moving_average_length() {
        let mut t = RunTrace::new(LossWeights::new(1.0, 0.0, 0.0));
        for i in 0..25 {
            t.records.push(TraceRecord {
                iteration: i,
                sds: 0.0,
                ocr: 0.0,
                acap: 0.0,
                total: i as f64,
                gradient_norm: 0.0,
                learning_rate: 0.0,
            });
        }
        let ma = t.moving_average(20);
        assert_eq!(ma.len(), 6);
        assert_eq!(ma[0], 9.5);
    }
}
