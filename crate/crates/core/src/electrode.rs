//! Simulated micro-electrode array: stimulation coding and potential sampling.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::medium::{self, FhnParams, FieldState, Medium, Observer, StimulusEntry, StimulusSchedule};

/// Electrode centers on the node lattice, labelled `E1..En` in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElectrodeArray {
    pub centers: Vec<(usize, usize)>,
    /// Nodes strictly closer than this contribute to a reading.
    pub sensing_radius: f64,
}

impl ElectrodeArray {
    pub const DEFAULT_SENSING_RADIUS: f64 = 2.0;

    /// 4x4 lattice over the central 60% of the grid, row-major from the top left.
    pub fn default_layout(width: usize, height: usize) -> Self {
        let axis = |extent: usize, i: usize| -> usize {
            let span = extent as f64 * 0.6;
            let lo = extent as f64 * 0.2;
            (lo + span * i as f64 / 3.0).round() as usize
        };
        let centers = (0..4)
            .flat_map(|row| (0..4).map(move |col| (col, row)))
            .map(|(col, row)| (axis(width, col), axis(height, row)))
            .collect();
        Self {
            centers,
            sensing_radius: Self::DEFAULT_SENSING_RADIUS,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn label(&self, index: usize) -> String {
        format!("E{}", index + 1)
    }

    /// Index of an electrode given its 1-based number.
    pub fn index_of(&self, number: usize) -> Result<usize> {
        if number == 0 || number > self.len() {
            return Err(config_err(format!(
                "electrode E{number} does not exist (array has {})",
                self.len()
            )));
        }
        Ok(number - 1)
    }

    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if !(self.sensing_radius.is_finite() && self.sensing_radius > 0.0) {
            return Err(config_err("sensing_radius must be positive"));
        }
        for (i, &(x, y)) in self.centers.iter().enumerate() {
            if x >= width || y >= height {
                return Err(config_err(format!(
                    "{} at ({x}, {y}) lies outside the {width}x{height} grid",
                    self.label(i)
                )));
            }
        }
        Ok(())
    }

    fn center_f64(&self, index: usize) -> (f64, f64) {
        let (x, y) = self.centers[index];
        (x as f64, y as f64)
    }

    /// Conductive nodes sensed by electrode `index`.
    pub fn sensed_nodes(&self, medium: &Medium, index: usize) -> Vec<usize> {
        let r2 = self.sensing_radius * self.sensing_radius;
        medium.nodes_near(self.center_f64(index), self.sensing_radius, |d2| d2 < r2)
    }
}

/// Stimulus applied through an electrode, plus the electrodes that carry the two inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StimParams {
    pub amplitude: f64,
    /// Nodes within this distance (inclusive) of the center are driven.
    pub radius: f64,
    /// Iterations, starting at 0.
    pub duration: u64,
    /// 1-based electrode number carrying input x.
    pub x_electrode: usize,
    /// 1-based electrode number carrying input y.
    pub y_electrode: usize,
}

impl Default for StimParams {
    fn default() -> Self {
        Self {
            amplitude: 0.5,
            radius: 4.0,
            duration: 500,
            x_electrode: 9,
            y_electrode: 3,
        }
    }
}

impl StimParams {
    pub fn validate(&self, array: &ElectrodeArray) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(config_err("stimulus amplitude must be finite"));
        }
        if !(self.radius.is_finite() && self.radius >= 0.0) {
            return Err(config_err("stimulus radius must be non-negative"));
        }
        array.index_of(self.x_electrode)?;
        array.index_of(self.y_electrode)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InputPair {
    pub x: bool,
    pub y: bool,
}

impl InputPair {
    pub const fn new(x: bool, y: bool) -> Self {
        Self { x, y }
    }

    /// The three pairs used for gate mining, in (01), (10), (11) order.
    pub const TRIALS: [InputPair; 3] = [
        InputPair::new(false, true),
        InputPair::new(true, false),
        InputPair::new(true, true),
    ];

    /// Two-character code such as `"01"`.
    pub fn code(&self) -> String {
        format!("{}{}", self.x as u8, self.y as u8)
    }
}

impl std::str::FromStr for InputPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bit = |c: char| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(config_err(format!("input pair must be two bits like 01, got {s:?}"))),
        };
        let mut chars = s.trim().chars();
        match (chars.next(), chars.next(), chars.next()) {
            (Some(a), Some(b), None) => Ok(Self::new(bit(a)?, bit(b)?)),
            _ => Err(config_err(format!("input pair must be two bits like 01, got {s:?}"))),
        }
    }
}

/// Potential at one electrode: sum of `u - v` over the sensed conductive nodes.
pub fn measure(state: &FieldState, medium: &Medium, array: &ElectrodeArray, electrode: usize) -> f64 {
    array
        .sensed_nodes(medium, electrode)
        .into_iter()
        .fold(0.0, |acc, n| acc + (state.u[n] - state.v[n]))
}

/// Schedule that drives each listed electrode (0-based) from iteration 0.
pub fn stimulate(
    electrodes: &[usize],
    medium: &Medium,
    array: &ElectrodeArray,
    stim: &StimParams,
) -> StimulusSchedule {
    let r2 = stim.radius * stim.radius;
    let entries = electrodes
        .iter()
        .map(|&e| StimulusEntry {
            nodes: medium.nodes_near(array.center_f64(e), stim.radius, |d2| d2 <= r2),
            current: stim.amplitude,
            start: 0,
            end: stim.duration,
        })
        .collect();
    StimulusSchedule { entries }
}

pub fn encode_input(
    pair: InputPair,
    medium: &Medium,
    array: &ElectrodeArray,
    stim: &StimParams,
) -> Result<StimulusSchedule> {
    stim.validate(array)?;
    let mut driven = Vec::new();
    if pair.x {
        driven.push(array.index_of(stim.x_electrode)?);
    }
    if pair.y {
        driven.push(array.index_of(stim.y_electrode)?);
    }
    Ok(stimulate(&driven, medium, array, stim))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialTrace {
    pub label: String,
    /// `(iteration, potential)` with strictly increasing iterations.
    pub samples: Vec<(u64, f64)>,
}

impl PotentialTrace {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|&(_, p)| p)
    }
}

/// Observer recording every electrode at a fixed cadence.
pub struct ElectrodeSampler {
    cadence: u64,
    sensed: Vec<Vec<usize>>,
    traces: Vec<PotentialTrace>,
}

impl ElectrodeSampler {
    pub fn new(medium: &Medium, array: &ElectrodeArray, cadence: u64) -> Self {
        let sensed = (0..array.len()).map(|e| array.sensed_nodes(medium, e)).collect();
        let traces = (0..array.len())
            .map(|e| PotentialTrace {
                label: array.label(e),
                samples: Vec::new(),
            })
            .collect();
        Self {
            cadence,
            sensed,
            traces,
        }
    }

    pub fn into_traces(self) -> Vec<PotentialTrace> {
        self.traces
    }
}

impl Observer for ElectrodeSampler {
    fn cadence(&self) -> u64 {
        self.cadence
    }

    fn observe(&mut self, _medium: &Medium, state: &FieldState) -> Result<()> {
        for (nodes, trace) in self.sensed.iter().zip(&mut self.traces) {
            let p = nodes.iter().fold(0.0, |acc, &n| acc + (state.u[n] - state.v[n]));
            trace.samples.push((state.t, p));
        }
        Ok(())
    }
}

/// Settings shared by every trial.
#[derive(Clone, Debug)]
pub struct TrialSetup<'a> {
    pub medium: &'a Medium,
    pub params: FhnParams,
    pub array: &'a ElectrodeArray,
    pub stim: &'a StimParams,
    pub duration: u64,
    pub sample_cadence: u64,
}

impl TrialSetup<'_> {
    /// Runs one trial with `schedule`, sampling all electrodes, plus any extra observers.
    pub fn run_schedule(
        &self,
        schedule: &StimulusSchedule,
        extra: &mut [&mut dyn Observer],
    ) -> Result<Vec<PotentialTrace>> {
        if self.sample_cadence == 0 {
            return Err(config_err("sampling cadence must be >= 1"));
        }
        self.array.validate(self.medium.width(), self.medium.height())?;
        let mut sampler = ElectrodeSampler::new(self.medium, self.array, self.sample_cadence);
        {
            let mut observers: Vec<&mut dyn Observer> = Vec::with_capacity(extra.len() + 1);
            observers.push(&mut sampler);
            for o in extra.iter_mut() {
                observers.push(&mut **o);
            }
            medium::run(
                self.medium,
                self.params,
                schedule,
                FieldState::zeros(self.medium),
                self.duration,
                &mut observers,
            )?;
        }
        Ok(sampler.into_traces())
    }
}

pub fn record_trial(
    setup: &TrialSetup<'_>,
    pair: InputPair,
    extra: &mut [&mut dyn Observer],
) -> Result<Vec<PotentialTrace>> {
    let schedule = encode_input(pair, setup.medium, setup.array, setup.stim)?;
    setup.run_schedule(&schedule, extra)
}

/// Formats a value with 9 significant digits.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let mag = v.abs();
    if !(1e-6..1e9).contains(&mag) {
        return format!("{v:.8e}");
    }
    let exponent = mag.log10().floor() as i32;
    let decimals = (8 - exponent).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn traces_to_csv(traces: &[PotentialTrace]) -> String {
    let mut out = String::from("iteration");
    for t in traces {
        out.push(',');
        out.push_str(&t.label);
    }
    out.push('\n');
    let rows = traces.first().map_or(0, |t| t.samples.len());
    for row in 0..rows {
        let _ = write!(out, "{}", traces[0].samples[row].0);
        for t in traces {
            out.push(',');
            out.push_str(&format_sig9(t.samples[row].1));
        }
        out.push('\n');
    }
    out
}

pub fn parse_traces_csv(text: &str) -> Result<Vec<PotentialTrace>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Load("empty trace file".into()))?;
    let mut cols = header.split(',').map(str::trim);
    if cols.next() != Some("iteration") {
        return Err(Error::Load("trace header must start with `iteration`".into()));
    }
    let mut traces: Vec<PotentialTrace> = cols
        .map(|label| PotentialTrace {
            label: label.to_string(),
            samples: Vec::new(),
        })
        .collect();
    for (lineno, line) in lines.enumerate() {
        let bad = || Error::Load(format!("malformed trace row {}", lineno + 2));
        let mut fields = line.split(',').map(str::trim);
        let it: u64 = fields.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let mut count = 0;
        for (trace, field) in traces.iter_mut().zip(&mut fields) {
            trace.samples.push((it, field.parse().map_err(|_| bad())?));
            count += 1;
        }
        if count != traces.len() || fields.next().is_some() {
            return Err(bad());
        }
    }
    Ok(traces)
}

pub fn read_traces_csv(path: &Path) -> Result<Vec<PotentialTrace>> {
    parse_traces_csv(&std::fs::read_to_string(path)?)
}
