//! Boolean gates read off spike presence across the (01), (10) and (11) trials.
//!
//! An electrode realises a gate in an event window when the set of trials in
//! which it spiked matches that gate's truth table on the three non-zero
//! inputs. The input (0,0) is never applied; every gate here maps it to 0.

use std::fmt::{self, Write as _};

use crate::electrode::InputPair;
use crate::error::{config_err, Result};
use crate::spikes::{simultaneity_groups, EventConfig, SpikeTrain};

/// Whether an electrode spiked under inputs (0,1), (1,0) and (1,1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PresenceTriple {
    pub s01: bool,
    pub s10: bool,
    pub s11: bool,
}

impl PresenceTriple {
    pub const fn new(s01: bool, s10: bool, s11: bool) -> Self {
        Self { s01, s10, s11 }
    }

    pub fn all() -> impl Iterator<Item = PresenceTriple> {
        (0u8..8).map(|b| Self::new(b & 4 != 0, b & 2 != 0, b & 1 != 0))
    }

    pub fn get(&self, pair: InputPair) -> bool {
        match (pair.x, pair.y) {
            (false, true) => self.s01,
            (true, false) => self.s10,
            (true, true) => self.s11,
            (false, false) => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gate {
    Or,
    SelectY,
    Xor,
    SelectX,
    NotAnd,
    AndNot,
    And,
    None,
}

impl Gate {
    /// The seven gates in census column order.
    pub const CENSUS: [Gate; 7] = [
        Gate::Or,
        Gate::SelectY,
        Gate::Xor,
        Gate::SelectX,
        Gate::NotAnd,
        Gate::AndNot,
        Gate::And,
    ];

    pub fn column(&self) -> Option<usize> {
        Self::CENSUS.iter().position(|g| g == self)
    }

    pub fn column_name(&self) -> &'static str {
        match self {
            Gate::Or => "or",
            Gate::SelectY => "sel_y",
            Gate::Xor => "xor",
            Gate::SelectX => "sel_x",
            Gate::NotAnd => "notand",
            Gate::AndNot => "andnot",
            Gate::And => "and",
            Gate::None => "none",
        }
    }

    pub fn eval(&self, x: bool, y: bool) -> bool {
        match self {
            Gate::Or => x | y,
            Gate::SelectY => y,
            Gate::Xor => x ^ y,
            Gate::SelectX => x,
            Gate::NotAnd => !x & y,
            Gate::AndNot => x & !y,
            Gate::And => x & y,
            Gate::None => false,
        }
    }

    pub fn is_select(&self) -> bool {
        matches!(self, Gate::SelectX | Gate::SelectY)
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Gate::Or => "OR",
            Gate::SelectY => "SELECT-Y",
            Gate::Xor => "XOR",
            Gate::SelectX => "SELECT-X",
            Gate::NotAnd => "NOT-AND",
            Gate::AndNot => "AND-NOT",
            Gate::And => "AND",
            Gate::None => "NONE",
        };
        f.write_str(name)
    }
}

pub fn classify_gate(t: PresenceTriple) -> Gate {
    match (t.s01, t.s10, t.s11) {
        (true, true, true) => Gate::Or,
        (true, false, true) => Gate::SelectY,
        (true, true, false) => Gate::Xor,
        (false, true, true) => Gate::SelectX,
        (true, false, false) => Gate::NotAnd,
        (false, true, false) => Gate::AndNot,
        (false, false, true) => Gate::And,
        (false, false, false) => Gate::None,
    }
}

/// Spike trains of the three mining trials over the same electrodes.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialSet {
    pub duration: u64,
    /// Indexed like [`InputPair::TRIALS`]: (01), (10), (11).
    pub trials: [Vec<SpikeTrain>; 3],
}

impl TrialSet {
    pub fn new(duration: u64, trials: [Vec<SpikeTrain>; 3]) -> Result<Self> {
        let labels = |ts: &[SpikeTrain]| ts.iter().map(|t| t.label.clone()).collect::<Vec<_>>();
        let reference = labels(&trials[0]);
        if trials.iter().any(|t| labels(t) != reference) {
            return Err(config_err("trials must cover the same electrodes in the same order"));
        }
        if trials.iter().flatten().any(|t| t.times.last().is_some_and(|&last| last > duration)) {
            return Err(config_err("spike beyond the trial duration"));
        }
        Ok(Self { duration, trials })
    }

    pub fn labels(&self) -> Vec<String> {
        self.trials[0].iter().map(|t| t.label.clone()).collect()
    }

    pub fn electrode_count(&self) -> usize {
        self.trials[0].len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateRecord {
    pub electrode: usize,
    pub start: u64,
    pub end: u64,
    pub triple: PresenceTriple,
    pub gate: Gate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateCensus {
    pub labels: Vec<String>,
    /// One row per electrode, columns in [`Gate::CENSUS`] order.
    pub counts: Vec<[usize; 7]>,
    pub records: Vec<GateRecord>,
}

impl GateCensus {
    pub fn electrode_total(&self, electrode: usize) -> usize {
        self.counts[electrode].iter().sum()
    }

    pub fn gate_total(&self, gate: Gate) -> usize {
        gate.column().map_or(0, |c| self.counts.iter().map(|row| row[c]).sum())
    }

    pub fn grand_total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Table with one row per electrode and a trailing totals row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("electrode");
        for g in Gate::CENSUS {
            let _ = write!(out, ",{}", g.column_name());
        }
        out.push_str(",total\n");
        for (label, row) in self.labels.iter().zip(&self.counts) {
            out.push_str(label);
            for c in row {
                let _ = write!(out, ",{c}");
            }
            let _ = writeln!(out, ",{}", row.iter().sum::<usize>());
        }
        out.push_str("total");
        for g in Gate::CENSUS {
            let _ = write!(out, ",{}", self.gate_total(g));
        }
        let _ = writeln!(out, ",{}", self.grand_total());
        out
    }

    pub fn records_csv(&self) -> String {
        let mut out = String::from("electrode,start,end,s01,s10,s11,gate\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.labels[r.electrode],
                r.start,
                r.end,
                r.triple.s01 as u8,
                r.triple.s10 as u8,
                r.triple.s11 as u8,
                r.gate
            );
        }
        out
    }
}

pub fn mine_gates(trials: &TrialSet, events: &EventConfig) -> Result<GateCensus> {
    events.validate()?;
    let n = trials.electrode_count();
    let mut counts = vec![[0usize; 7]; n];
    let mut records = Vec::new();
    for (e, row) in counts.iter_mut().enumerate() {
        let per_trial: Vec<(usize, &[u64])> = (0..3).map(|i| (i, &trials.trials[i][e].times[..])).collect();
        for window in simultaneity_groups(&per_trial, events) {
            let triple = PresenceTriple::new(
                window.present.contains(&0),
                window.present.contains(&1),
                window.present.contains(&2),
            );
            let gate = classify_gate(triple);
            if let Some(c) = gate.column() {
                row[c] += 1;
            }
            records.push(GateRecord {
                electrode: e,
                start: window.start,
                end: window.end,
                triple,
                gate,
            });
        }
    }
    Ok(GateCensus {
        labels: trials.labels(),
        counts,
        records,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Circuit {
    HalfAdder,
    Toffoli,
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Circuit::HalfAdder => "HALF-ADDER",
            Circuit::Toffoli => "TOFFOLI",
        })
    }
}

pub fn name_circuit(a: Gate, b: Gate) -> Option<Circuit> {
    let pair = |p: Gate, q: Gate| (a == p && b == q) || (a == q && b == p);
    if pair(Gate::And, Gate::Xor) {
        Some(Circuit::HalfAdder)
    } else if (a.is_select() && b == Gate::Xor) || (b.is_select() && a == Gate::Xor) {
        Some(Circuit::Toffoli)
    } else {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoOutputGate {
    pub start: u64,
    pub end: u64,
    pub first: Gate,
    pub second: Gate,
    pub circuit: Option<Circuit>,
}

/// Pairs the gates of two electrodes whose event windows overlap once each is
/// widened by `slack` iterations on both sides.
pub fn find_two_output_gates(
    records: &[GateRecord],
    first: usize,
    second: usize,
    slack: u64,
) -> Vec<TwoOutputGate> {
    let of = |e: usize| records.iter().filter(move |r| r.electrode == e && r.gate != Gate::None);
    let mut out = Vec::new();
    for a in of(first) {
        for b in of(second) {
            if a.start <= b.end.saturating_add(slack) && b.start <= a.end.saturating_add(slack) {
                out.push(TwoOutputGate {
                    start: a.start.min(b.start),
                    end: a.end.max(b.end),
                    first: a.gate,
                    second: b.gate,
                    circuit: name_circuit(a.gate, b.gate),
                });
            }
        }
    }
    out
}

pub fn two_output_csv(rows: &[(String, String, TwoOutputGate)]) -> String {
    let mut out = String::from("electrode_a,electrode_b,start,end,gate_a,gate_b,circuit\n");
    for (a, b, g) in rows {
        let circuit = g.circuit.map_or_else(String::new, |c| c.to_string());
        let _ = writeln!(out, "{a},{b},{},{},{},{},{circuit}", g.start, g.end, g.first, g.second);
    }
    out
}
