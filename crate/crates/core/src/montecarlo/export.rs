//! Terminal samples on disk.
//!
//! Text: `#`-prefixed JSON header line, then one level per line (with its
//! weight after a comma when weights are present).
//!
//! Binary: the 8-byte magic `FXMCSMP1`, a little-endian `u64` header length,
//! the JSON header, then `paths` little-endian `f64` levels followed by
//! `paths` weights when present.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig12;

use super::{McConfig, SampleFlags, TerminalSample};

const MAGIC: &[u8; 8] = b"FXMCSMP1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleHeader {
    pub config: McConfig,
    pub s0: f64,
    pub rate_differential: f64,
    pub maturity: f64,
    pub flags: SampleFlags,
    pub paths: usize,
    pub has_weights: bool,
}

impl SampleHeader {
    pub fn of(sample: &TerminalSample) -> Self {
        Self {
            config: sample.config,
            s0: sample.s0,
            rate_differential: sample.rate_differential,
            maturity: sample.maturity,
            flags: sample.flags,
            paths: sample.values.len(),
            has_weights: sample.rn_weights.is_some(),
        }
    }
}

pub fn write_csv<W: Write>(sample: &TerminalSample, mut out: W) -> Result<()> {
    writeln!(out, "# {}", serde_json::to_string(&SampleHeader::of(sample))?)?;
    match &sample.rn_weights {
        Some(w) => {
            writeln!(out, "level,weight")?;
            for (s, l) in sample.values.iter().zip(w) {
                writeln!(out, "{},{}", sig12(*s), sig12(*l))?;
            }
        }
        None => {
            writeln!(out, "level")?;
            for s in &sample.values {
                writeln!(out, "{}", sig12(*s))?;
            }
        }
    }
    Ok(())
}

pub fn write_binary<W: Write>(sample: &TerminalSample, mut out: W) -> Result<()> {
    let header = serde_json::to_vec(&SampleHeader::of(sample))?;
    out.write_all(MAGIC)?;
    out.write_all(&(header.len() as u64).to_le_bytes())?;
    out.write_all(&header)?;
    for v in &sample.values {
        out.write_all(&v.to_le_bytes())?;
    }
    if let Some(w) = &sample.rn_weights {
        for v in w {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of eight bytes")))
        .collect())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<TerminalSample> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse("not a terminal-sample file".into()));
    }
    let len = read_u64(&mut input)? as usize;
    let mut header = vec![0u8; len];
    input.read_exact(&mut header)?;
    let h: SampleHeader = serde_json::from_slice(&header)?;
    let values = read_f64s(&mut input, h.paths)?;
    let rn_weights = if h.has_weights {
        Some(read_f64s(&mut input, h.paths)?)
    } else {
        None
    };
    Ok(TerminalSample {
        values,
        rn_weights,
        config: h.config,
        s0: h.s0,
        rate_differential: h.rate_differential,
        maturity: h.maturity,
        flags: h.flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::{simulate_jump_gbm_exact, JumpModel};

    fn sample() -> TerminalSample {
        simulate_jump_gbm_exact(1.2, 0.01, 0.1, &JumpModel::None, 1.0, &McConfig::exact(50, 1)).unwrap()
    }

    #[test]
    fn binary_round_trip() {
        let s = sample();
        let mut buf = Vec::new();
        write_binary(&s, &mut buf).unwrap();
        assert_eq!(read_binary(buf.as_slice()).unwrap(), s);
        assert!(read_binary(&b"garbage!........"[..]).is_err());
    }

    #[test]
    fn text_layout() {
        let s = sample();
        let mut buf = Vec::new();
        write_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let head = lines.next().unwrap();
        assert!(head.starts_with("# {"));
        let h: SampleHeader = serde_json::from_str(&head[2..]).unwrap();
        assert_eq!(h.paths, 50);
        assert_eq!(lines.next(), Some("level,weight"));
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert!((first[0] - s.values[0]).abs() <= 1e-11 * s.values[0]);
        assert_eq!(text.lines().count(), 52);
    }
}
