//! Append-only JSON-lines run ledger.
//!
//! One [`ResultRecord`] per line, written as each run finishes. Wall-clock
//! times go to a separate `timings.jsonl` next to the ledger so that the
//! ledger itself is byte-identical across reruns of the same spec.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::Method;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub dataset: String,
    /// Fraction of the training split kept (1.0 for full data).
    pub fraction: f64,
    pub horizon: usize,
    pub method: Method,
    pub seed: u64,
    pub mse: f64,
    pub mae: f64,
    pub best_epoch: usize,
    /// Seconds; kept out of the ledger line.
    #[serde(skip)]
    pub wall_time: f64,
}

/// Identity of one (dataset, fraction, horizon, method, seed) run.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RunKey {
    pub dataset: String,
    pub fraction_bits: u64,
    pub horizon: usize,
    pub method: Method,
    pub seed: u64,
}

impl RunKey {
    pub fn new(dataset: &str, fraction: f64, horizon: usize, method: Method, seed: u64) -> Self {
        Self {
            dataset: dataset.to_string(),
            fraction_bits: fraction.to_bits(),
            horizon,
            method,
            seed,
        }
    }
}

impl ResultRecord {
    pub fn key(&self) -> RunKey {
        RunKey::new(
            &self.dataset,
            self.fraction,
            self.horizon,
            self.method,
            self.seed,
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mse", self.mse), ("mae", self.mae)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!(
                    "record {:?}: {name} = {v} is not a finite non-negative value",
                    self.key()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct Timing<'a> {
    dataset: &'a str,
    fraction: f64,
    horizon: usize,
    method: Method,
    seed: u64,
    wall_time: f64,
}

pub struct Ledger {
    path: PathBuf,
    records: Vec<ResultRecord>,
    keys: BTreeSet<RunKey>,
}

impl Ledger {
    /// Opens (or creates) a ledger. A torn final line left by an interrupted
    /// write is dropped; any other malformed line is an error.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let mut records = Vec::new();
        if path.exists() {
            let lines: Vec<String> = BufReader::new(File::open(&path)?)
                .lines()
                .collect::<std::io::Result<_>>()?;
            let n = lines.len();
            let mut torn = false;
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<ResultRecord>(line) {
                    Ok(r) => records.push(r),
                    Err(_) if i + 1 == n => torn = true,
                    Err(e) => {
                        return Err(Error::Json(e).context(format!(
                            "{}:{}",
                            path.display(),
                            i + 1
                        )));
                    }
                }
            }
            if torn {
                let mut f = File::create(&path)?;
                for r in &records {
                    writeln!(f, "{}", serde_json::to_string(r)?)?;
                }
            }
        }
        let keys = records.iter().map(ResultRecord::key).collect();
        Ok(Self {
            path,
            records,
            keys,
        })
    }

    /// Reads a ledger without creating or repairing anything.
    pub fn read(path: impl AsRef<Path>) -> Result<Vec<ResultRecord>> {
        let path = path.as_ref();
        let file = File::open(path)
            .map_err(|e| Error::Io(e).context(format!("opening {}", path.display())))?;
        let mut out = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let r: ResultRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Json(e).context(format!("{}:{}", path.display(), i + 1)))?;
            out.push(r);
        }
        Ok(out)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn contains(&self, key: &RunKey) -> bool {
        self.keys.contains(key)
    }

    pub fn get(&self, key: &RunKey) -> Option<&ResultRecord> {
        self.records.iter().find(|r| &r.key() == key)
    }

    pub fn records(&self) -> &[ResultRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn timings_path(&self) -> PathBuf {
        self.path.with_file_name("timings.jsonl")
    }

    /// Appends one record (and its timing) and flushes it to disk.
    pub fn append(&mut self, record: ResultRecord) -> Result<()> {
        record.validate()?;
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)?;
        writeln!(f, "{}", serde_json::to_string(&record)?)?;
        f.sync_data()?;
        let timing = Timing {
            dataset: &record.dataset,
            fraction: record.fraction,
            horizon: record.horizon,
            method: record.method,
            seed: record.seed,
            wall_time: record.wall_time,
        };
        let mut t = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.timings_path())?;
        writeln!(t, "{}", serde_json::to_string(&timing)?)?;
        self.keys.insert(record.key());
        self.records.push(record);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(seed: u64) -> ResultRecord {
        ResultRecord {
            dataset: "d".into(),
            fraction: 1.0,
            horizon: 24,
            method: Method::WaveMix,
            seed,
            mse: 0.5 + seed as f64,
            mae: 0.25,
            best_epoch: 3,
            wall_time: 1.5,
        }
    }

    #[test]
    fn append_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/ledger.jsonl");
        let mut l = Ledger::open(&path).unwrap();
        l.append(record(0)).unwrap();
        l.append(record(1)).unwrap();
        let l = Ledger::open(&path).unwrap();
        assert_eq!(l.len(), 2);
        assert!(l.contains(&record(1).key()));
        assert!(!l.contains(&record(2).key()));
        assert_eq!(l.get(&record(0).key()).unwrap().wall_time, 0.0);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.contains("wall_time"));
        assert!(
            std::fs::read_to_string(dir.path().join("sub/timings.jsonl"))
                .unwrap()
                .contains("wall_time")
        );
    }

    #[test]
    fn torn_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        let mut l = Ledger::open(&path).unwrap();
        l.append(record(0)).unwrap();
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        write!(f, "{{\"dataset\":\"d\",\"fra").unwrap();
        drop(f);
        let l = Ledger::open(&path).unwrap();
        assert_eq!(l.len(), 1);
        assert_eq!(Ledger::read(&path).unwrap().len(), 1);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        std::fs::write(&path, "garbage\n{}\n").unwrap();
        assert!(Ledger::open(&path).is_err());
    }

    #[test]
    fn rejects_non_finite_metrics() {
        let dir = tempfile::tempdir().unwrap();
        let mut l = Ledger::open(dir.path().join("l.jsonl")).unwrap();
        let mut r = record(0);
        r.mse = f64::NAN;
        assert!(l.append(r).is_err());
    }
}
