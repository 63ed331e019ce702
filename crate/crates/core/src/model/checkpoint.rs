//! Plain-text parameter checkpoints.
//!
//! ```text
//! wavaug-dlinear 1
//! lookback <L>
//! horizon <H>
//! kernel <K>
//! w_trend <H> <L>
//! <H lines of L values>
//! b_trend <H>
//! <1 line of H values>
//! w_resid <H> <L>
//! <H lines of L values>
//! b_resid <H>
//! <1 line of H values>
//! ```
//!
//! Values are space separated and written in shortest round-trip exponent
//! notation, so a save/load cycle is bit exact.

use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::DLinearParams;
use crate::error::{Error, Result};

const MAGIC: &str = "wavaug-dlinear";
const VERSION: u32 = 1;

fn write_row<W: Write>(w: &mut W, row: impl IntoIterator<Item = f64>) -> std::io::Result<()> {
    let mut first = true;
    for v in row {
        if !first {
            w.write_all(b" ")?;
        }
        write!(w, "{v:e}")?;
        first = false;
    }
    w.write_all(b"\n")
}

impl DLinearParams {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let (h, l) = (self.horizon(), self.lookback());
        writeln!(w, "{MAGIC} {VERSION}")?;
        writeln!(w, "lookback {l}")?;
        writeln!(w, "horizon {h}")?;
        writeln!(w, "kernel {}", self.kernel)?;
        for (name, weights, bias) in [
            ("trend", &self.w_trend, &self.b_trend),
            ("resid", &self.w_resid, &self.b_resid),
        ] {
            writeln!(w, "w_{name} {h} {l}")?;
            for row in weights.rows() {
                write_row(&mut w, row.iter().copied())?;
            }
            writeln!(w, "b_{name} {h}")?;
            write_row(&mut w, bias.iter().copied())?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = |what: &str| -> Result<String> {
            lines.next().transpose()?.ok_or_else(|| {
                Error::Checkpoint(format!("unexpected end of file, expected {what}"))
            })
        };
        let header = next("header")?;
        if header != format!("{MAGIC} {VERSION}") {
            return Err(Error::Checkpoint(format!("unsupported header `{header}`")));
        }
        let field = |line: String, key: &str| -> Result<Vec<usize>> {
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(Error::Checkpoint(format!(
                    "expected `{key}`, found `{line}`"
                )));
            }
            parts
                .map(|p| {
                    p.parse()
                        .map_err(|_| Error::Checkpoint(format!("bad integer `{p}` in `{line}`")))
                })
                .collect()
        };
        let scalar = |v: Vec<usize>, key: &str| -> Result<usize> {
            match v.as_slice() {
                [x] => Ok(*x),
                _ => Err(Error::Checkpoint(format!("`{key}` takes one value"))),
            }
        };
        let lookback = scalar(field(next("lookback")?, "lookback")?, "lookback")?;
        let horizon = scalar(field(next("horizon")?, "horizon")?, "horizon")?;
        let kernel = scalar(field(next("kernel")?, "kernel")?, "kernel")?;

        let parse_row = |line: String, n: usize| -> Result<Vec<f64>> {
            let vals = line
                .split_whitespace()
                .map(|p| {
                    p.parse::<f64>()
                        .map_err(|_| Error::Checkpoint(format!("bad value `{p}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != n {
                return Err(Error::Checkpoint(format!(
                    "expected {n} values, found {}",
                    vals.len()
                )));
            }
            Ok(vals)
        };

        let mut p = DLinearParams::zeros(lookback, horizon, kernel);
        for name in ["trend", "resid"] {
            let dims = field(next("weights")?, &format!("w_{name}"))?;
            if dims != [horizon, lookback] {
                return Err(Error::Checkpoint(format!("w_{name} has shape {dims:?}")));
            }
            let mut flat = Vec::with_capacity(horizon * lookback);
            for _ in 0..horizon {
                flat.extend(parse_row(next("weight row")?, lookback)?);
            }
            let w = Array2::from_shape_vec((horizon, lookback), flat).expect("sized above");
            let n = scalar(field(next("bias")?, &format!("b_{name}"))?, "bias")?;
            if n != horizon {
                return Err(Error::Checkpoint(format!("b_{name} has length {n}")));
            }
            let b = Array1::from(parse_row(next("bias row")?, horizon)?);
            if name == "trend" {
                p.w_trend = w;
                p.b_trend = b;
            } else {
                p.w_resid = w;
                p.b_resid = b;
            }
        }
        Ok(p)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut p = DLinearParams::init(7, 3, 5, &mut ChaCha8Rng::seed_from_u64(3));
        p.w_trend[[0, 0]] = 1e-300;
        p.b_resid[2] = -123456.789;
        let mut buf = Vec::new();
        p.write_to(&mut buf).unwrap();
        let q = DLinearParams::read_from(buf.as_slice()).unwrap();
        assert_eq!(p, q);
        let mut again = Vec::new();
        q.write_to(&mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn rejects_corruption() {
        let p = DLinearParams::zeros(2, 2, 1);
        let mut buf = Vec::new();
        p.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(
            DLinearParams::read_from(text.replace("wavaug-dlinear 1", "other 9").as_bytes())
                .is_err()
        );
        assert!(
            DLinearParams::read_from(text.replace("w_trend 2 2", "w_trend 2 3").as_bytes())
                .is_err()
        );
        let truncated: String = text.lines().take(6).collect::<Vec<_>>().join("\n");
        assert!(DLinearParams::read_from(truncated.as_bytes()).is_err());
    }
}
