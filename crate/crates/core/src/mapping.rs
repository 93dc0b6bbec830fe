//! The ensemble as a k-bit mapping machine.
//!
//! Input string `s` drives electrode `inputs[i]` iff bit `i` of `s` is set;
//! output bit `j` is set iff a spike is detected at electrode `outputs[j]`
//! inside the decoding window. Bit strings are printed with bit 0 first.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boolean::BooleanFunction;
use crate::electrode::{stimulate, TrialSetup};
use crate::error::{config_err, Error, Result};
use crate::spikes::{detect_spikes, DetectorConfig};

/// Largest k driven exhaustively.
pub const MAX_EXHAUSTIVE_K: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MappingRecord {
    pub k: usize,
    /// `table[s]` is the output for input `s`.
    pub table: Vec<u64>,
    pub provenance: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MappingSetup {
    pub k: usize,
    /// 1-based electrode numbers receiving input bits.
    pub inputs: Vec<usize>,
    /// 1-based electrode numbers read as output bits.
    pub outputs: Vec<usize>,
    pub allow_shared_electrodes: bool,
    /// Decoding window `[start, end)` in iterations; `None` reads the whole trial.
    pub window: Option<(u64, u64)>,
}

impl Default for MappingSetup {
    fn default() -> Self {
        Self {
            k: 4,
            inputs: vec![6, 7, 10, 11],
            outputs: vec![1, 4, 13, 16],
            allow_shared_electrodes: false,
            window: None,
        }
    }
}

impl MappingSetup {
    pub fn validate(&self, electrodes: usize) -> Result<()> {
        if self.k == 0 || self.k > 64 {
            return Err(config_err(format!("k must be in 1..=64, got {}", self.k)));
        }
        if self.inputs.len() != self.k || self.outputs.len() != self.k {
            return Err(config_err(format!(
                "k = {} needs {0} input and {0} output electrodes, got {} and {}",
                self.k,
                self.inputs.len(),
                self.outputs.len()
            )));
        }
        for &e in self.inputs.iter().chain(&self.outputs) {
            if e == 0 || e > electrodes {
                return Err(config_err(format!("electrode E{e} does not exist")));
            }
        }
        if !self.allow_shared_electrodes && self.inputs.iter().any(|e| self.outputs.contains(e)) {
            return Err(config_err(
                "input and output electrodes overlap; set allow_shared_electrodes to permit it",
            ));
        }
        if let Some((a, b)) = self.window {
            if a >= b {
                return Err(config_err("decoding window must satisfy start < end"));
            }
        }
        Ok(())
    }
}

fn respond(setup: &TrialSetup<'_>, map: &MappingSetup, detector: &DetectorConfig, input: u64) -> Result<u64> {
    let driven: Vec<usize> = (0..map.k)
        .filter(|&i| input >> i & 1 == 1)
        .map(|i| map.inputs[i] - 1)
        .collect();
    let schedule = stimulate(&driven, setup.medium, setup.array, setup.stim);
    let traces = setup.run_schedule(&schedule, &mut [])?;
    let (lo, hi) = map.window.unwrap_or((0, u64::MAX));
    let mut out = 0u64;
    for (j, &e) in map.outputs.iter().enumerate() {
        let train = detect_spikes(&traces[e - 1], detector)?;
        if train.times.iter().any(|&t| lo <= t && t < hi) {
            out |= 1 << j;
        }
    }
    Ok(out)
}

/// Drives all `2^k` inputs. Trials run in parallel on the current rayon pool.
pub fn build_mapping(
    setup: &TrialSetup<'_>,
    map: &MappingSetup,
    detector: &DetectorConfig,
    provenance: impl Into<String>,
) -> Result<MappingRecord> {
    map.validate(setup.array.len())?;
    if map.k > MAX_EXHAUSTIVE_K {
        return Err(Error::MappingTooLarge {
            k: map.k,
            max: MAX_EXHAUSTIVE_K,
        });
    }
    let table = (0..1u64 << map.k)
        .into_par_iter()
        .map(|s| respond(setup, map, detector, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(MappingRecord {
        k: map.k,
        table,
        provenance: provenance.into(),
    })
}

/// Responses for an explicit list of inputs, for k too large to enumerate.
pub fn sample_mapping(
    setup: &TrialSetup<'_>,
    map: &MappingSetup,
    detector: &DetectorConfig,
    inputs: &[u64],
) -> Result<Vec<(u64, u64)>> {
    map.validate(setup.array.len())?;
    if let Some(&bad) = inputs.iter().find(|&&s| map.k < 64 && s >> map.k != 0) {
        return Err(config_err(format!("input {bad} has more than {} bits", map.k)));
    }
    inputs
        .par_iter()
        .map(|&s| respond(setup, map, detector, s).map(|o| (s, o)))
        .collect()
}

pub fn bits(value: u64, k: usize) -> String {
    (0..k).map(|i| if value >> i & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn parse_bits(s: &str) -> Option<u64> {
    if s.is_empty() || s.len() > 64 {
        return None;
    }
    s.chars().enumerate().try_fold(0u64, |acc, (i, c)| match c {
        '0' => Some(acc),
        '1' => Some(acc | 1 << i),
        _ => None,
    })
}

impl MappingRecord {
    pub fn new(k: usize, table: Vec<u64>, provenance: impl Into<String>) -> Result<Self> {
        if k == 0 || k > MAX_EXHAUSTIVE_K {
            return Err(config_err(format!("mapping k must be in 1..={MAX_EXHAUSTIVE_K}")));
        }
        if table.len() != 1 << k || table.iter().any(|&o| o >> k != 0) {
            return Err(config_err(format!("mapping table must hold 2^{k} k-bit outputs")));
        }
        Ok(Self {
            k,
            table,
            provenance: provenance.into(),
        })
    }

    pub fn successors(&self) -> Vec<usize> {
        self.table.iter().map(|&o| o as usize).collect()
    }

    pub fn project(&self, j: usize) -> Result<BooleanFunction> {
        if j >= self.k {
            return Err(config_err(format!("output bit {j} out of range for k = {}", self.k)));
        }
        BooleanFunction::new(self.k, self.table.iter().map(|&o| o >> j & 1 == 1).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("input_bits,output_bits\n");
        for (s, &o) in self.table.iter().enumerate() {
            let _ = writeln!(out, "{},{}", bits(s as u64, self.k), bits(o, self.k));
        }
        out
    }

    /// Reads a mapping CSV; rows may come in any order but must cover every input once.
    pub fn parse_csv(text: &str, provenance: impl Into<String>) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some("input_bits,output_bits") {
            return Err(Error::Load("mapping header must be `input_bits,output_bits`".into()));
        }
        let rows: Vec<(&str, &str)> = lines
            .map(|l| l.split_once(',').ok_or_else(|| Error::Load(format!("malformed mapping row {l:?}"))))
            .collect::<Result<_>>()?;
        let k = rows.first().map_or(0, |r| r.0.len());
        if k == 0 || k > MAX_EXHAUSTIVE_K || rows.len() != 1 << k {
            return Err(Error::Load(format!("mapping has {} rows, not 2^k for k <= 16", rows.len())));
        }
        let mut table = vec![None; 1 << k];
        for (i, o) in rows {
            let (i, o) = (i.trim(), o.trim());
            if i.len() != k || o.len() != k {
                return Err(Error::Load(format!("row {i},{o} is not {k} bits wide")));
            }
            let (s, t) = parse_bits(i)
                .zip(parse_bits(o))
                .ok_or_else(|| Error::Load(format!("row {i},{o} is not binary")))?;
            if table[s as usize].replace(t).is_some() {
                return Err(Error::Load(format!("input {i} appears twice")));
            }
        }
        let table = table.into_iter().map(|o| o.expect("row count equals 2^k")).collect();
        Self::new(k, table, provenance)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::parse_csv(&std::fs::read_to_string(path)?, format!("replay:{}", path.display()))
    }

    pub fn edge_list(&self) -> String {
        let mut out = String::from("source,target\n");
        for (s, &o) in self.table.iter().enumerate() {
            let _ = writeln!(out, "{},{}", bits(s as u64, self.k), bits(o, self.k));
        }
        out
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph mapping {\n");
        for (s, &o) in self.table.iter().enumerate() {
            let _ = writeln!(out, "  \"{}\" -> \"{}\";", bits(s as u64, self.k), bits(o, self.k));
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_strings() {
        assert_eq!(bits(0b0110, 4), "0110");
        assert_eq!(bits(0b0001, 4), "1000");
        assert_eq!(parse_bits("1000"), Some(1));
        assert_eq!(parse_bits("10x0"), None);
        for v in 0..16 {
            assert_eq!(parse_bits(&bits(v, 4)), Some(v));
        }
    }

    #[test]
    fn projections() {
        let id = MappingRecord::new(3, (0..8).collect(), "t").unwrap();
        let p0 = id.project(0).unwrap();
        assert_eq!(p0.weight(), 4);
        assert!((0..8).all(|s| p0.eval(s) == (s & 1 == 1)));
        assert!(id.project(3).is_err());

        let zero = MappingRecord::new(3, vec![0; 8], "t").unwrap();
        assert_eq!(zero.project(2).unwrap().weight(), 0);

        // E(s) = (AND(s), XOR(s)).
        let table = (0..4u64)
            .map(|s| {
                let (x, y) = (s & 1, s >> 1 & 1);
                (x & y) | (x ^ y) << 1
            })
            .collect();
        let e = MappingRecord::new(2, table, "t").unwrap();
        assert_eq!(e.project(0).unwrap().table(), &[false, false, false, true]);
        assert_eq!(e.project(1).unwrap().table(), &[false, true, true, false]);
    }

    #[test]
    fn csv_round_trip_and_validation() {
        let e = MappingRecord::new(2, vec![3, 0, 2, 1], "replay").unwrap();
        let csv = e.to_csv();
        assert_eq!(csv, "input_bits,output_bits\n00,11\n10,00\n01,01\n11,10\n");
        assert_eq!(MappingRecord::parse_csv(&csv, "replay").unwrap(), e);
        assert!(MappingRecord::parse_csv("input_bits,output_bits\n00,11\n00,00\n01,01\n11,10\n", "").is_err());
        assert!(MappingRecord::parse_csv("input_bits,output_bits\n0,1\n", "").is_err());
        assert!(MappingRecord::parse_csv("input_bits,output_bits\n1,1\n0,1\n", "").is_ok());
        assert!(MappingRecord::new(2, vec![0, 1, 2], "").is_err());
        assert!(MappingRecord::new(2, vec![0, 1, 2, 4], "").is_err());
        assert!(e.to_dot().contains("\"00\" -> \"11\";"));
    }

    #[test]
    fn setup_validation() {
        let mut m = MappingSetup::default();
        m.validate(16).unwrap();
        m.outputs[0] = m.inputs[0];
        assert!(m.validate(16).is_err());
        m.allow_shared_electrodes = true;
        m.validate(16).unwrap();
        m.inputs.pop();
        assert!(m.validate(16).is_err());
        assert!(MappingSetup { window: Some((5, 5)), ..MappingSetup::default() }.validate(16).is_err());
    }
}
