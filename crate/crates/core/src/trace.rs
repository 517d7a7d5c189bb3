//! Per-iteration episode record and its CSV form. Metadata travels in
//! leading `# key=value` lines, followed by a header row.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::personalizer::Branch;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub theta_applied: f64,
    pub theta_hat: f64,
    #[serde(rename = "J")]
    pub performance: f64,
    #[serde(rename = "u_theta_f")]
    pub filtered: Option<f64>,
    pub grad_est: Option<f64>,
    pub curv_est: Option<f64>,
    pub branch: Option<Branch>,
}

impl TraceRow {
    /// Row for tuners that only record the synergy and the response.
    pub fn plain(iteration: usize, theta_applied: f64, theta_hat: f64, performance: f64) -> Self {
        Self {
            iteration,
            theta_applied,
            theta_hat,
            performance,
            filtered: None,
            grad_est: None,
            curv_est: None,
            branch: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TraceMeta {
    pub config_hash: String,
    pub seed: u64,
    pub subject: String,
    pub algorithm: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeTrace {
    pub meta: TraceMeta,
    pub rows: Vec<TraceRow>,
}

impl EpisodeTrace {
    pub fn validate(&self) -> Result<()> {
        for (k, r) in self.rows.iter().enumerate() {
            if r.iteration != k {
                return Err(Error::Trace(format!("row {k} carries iteration {}", r.iteration)));
            }
        }
        Ok(())
    }

    pub fn theta_hat(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.theta_hat).collect()
    }

    pub fn performance(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.performance).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let m = &self.meta;
        writeln!(out, "# config_hash={}", m.config_hash)?;
        writeln!(out, "# seed={}", m.seed)?;
        writeln!(out, "# subject={}", m.subject)?;
        writeln!(out, "# algorithm={}", m.algorithm)?;
        let mut w = csv::Writer::from_writer(out);
        if self.rows.is_empty() {
            w.write_record([
                "iteration", "theta_applied", "theta_hat", "J", "u_theta_f", "grad_est", "curv_est", "branch",
            ])?;
        }
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = BufReader::new(input);
        let mut meta = TraceMeta::default();
        let mut body = String::new();
        let mut line = String::new();
        while reader.read_line(&mut line)? > 0 {
            match line.strip_prefix("# ") {
                Some(kv) => {
                    let (k, v) = kv
                        .trim_end_matches(['\n', '\r'])
                        .split_once('=')
                        .ok_or_else(|| Error::Trace(format!("bad metadata line `{}`", line.trim_end())))?;
                    match k {
                        "config_hash" => meta.config_hash = v.to_string(),
                        "seed" => meta.seed = v.parse().map_err(|_| Error::Trace(format!("bad seed `{v}`")))?,
                        "subject" => meta.subject = v.to_string(),
                        "algorithm" => meta.algorithm = v.to_string(),
                        _ => {}
                    }
                }
                None => body.push_str(&line),
            }
            line.clear();
        }
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let rows = r.deserialize().collect::<std::result::Result<Vec<TraceRow>, _>>()?;
        let trace = Self { meta, rows };
        trace.validate()?;
        Ok(trace)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(fs::File::open(path)?)
    }
}
