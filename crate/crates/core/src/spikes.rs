//! Spike detection on potential traces and spike-train statistics.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::electrode::{format_sig9, PotentialTrace};
use crate::error::{config_err, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpikeTrain {
    pub label: String,
    /// Strictly increasing iterations.
    pub times: Vec<u64>,
}

impl SpikeTrain {
    pub fn new(label: impl Into<String>, times: Vec<u64>) -> Self {
        Self {
            label: label.into(),
            times,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn intervals(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| (w[1] - w[0]) as f64).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Fixed level given by `absolute_threshold`.
    Absolute,
    /// Baseline mean plus `k` baseline standard deviations.
    Baseline,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub mode: ThresholdMode,
    pub absolute_threshold: f64,
    pub k: f64,
    /// Leading samples used to estimate the baseline.
    pub baseline_window: usize,
    /// Minimum distance of the threshold above the baseline mean.
    pub min_excursion: f64,
    /// Iterations after a spike during which further crossings are ignored.
    pub refractory: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            mode: ThresholdMode::Baseline,
            absolute_threshold: 1.0,
            k: 4.0,
            baseline_window: 1000,
            min_excursion: 0.0,
            refractory: 100,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.refractory < 1 {
            return Err(config_err("refractory must be >= 1 iteration"));
        }
        if self.mode == ThresholdMode::Baseline && self.baseline_window < 2 {
            return Err(config_err("baseline window must cover at least 2 samples"));
        }
        if !(self.k.is_finite() && self.min_excursion.is_finite() && self.absolute_threshold.is_finite()) {
            return Err(config_err("detector levels must be finite"));
        }
        Ok(())
    }

    /// Threshold for a given trace.
    pub fn threshold(&self, values: &[f64]) -> Result<f64> {
        match self.mode {
            ThresholdMode::Absolute => Ok(self.absolute_threshold),
            ThresholdMode::Baseline => {
                if self.baseline_window > values.len() {
                    return Err(config_err(format!(
                        "baseline window of {} samples exceeds trace length {}",
                        self.baseline_window,
                        values.len()
                    )));
                }
                let base = &values[..self.baseline_window];
                let (mean, sd) = mean_and_population_sd(base);
                Ok(mean + (self.k * sd).max(self.min_excursion))
            }
        }
    }
}

fn mean_and_population_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// A spike is the first sample of each upward crossing strictly above the
/// threshold; crossings within `refractory` iterations of the previous spike
/// are ignored. A trace that starts above threshold spikes at its first sample.
pub fn detect_spikes(trace: &PotentialTrace, config: &DetectorConfig) -> Result<SpikeTrain> {
    config.validate()?;
    let values: Vec<f64> = trace.values().collect();
    let threshold = config.threshold(&values)?;
    let mut times = Vec::new();
    let mut below = true;
    let mut last: Option<u64> = None;
    for &(t, p) in &trace.samples {
        let above = p > threshold;
        if above && below && last.is_none_or(|l| t - l >= config.refractory) {
            times.push(t);
            last = Some(t);
        }
        below = !above;
    }
    Ok(SpikeTrain::new(trace.label.clone(), times))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsiStats {
    pub intervals: usize,
    /// Population coefficient of variation; `None` with fewer than 3 spikes.
    pub cv: Option<f64>,
    /// Serial correlation at lags `1..=max_lag`; `None` where there are
    /// fewer than `lag + 2` intervals.
    pub serial_correlation: Vec<Option<f64>>,
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, sx) = mean_and_population_sd(xs);
    let (my, sy) = mean_and_population_sd(ys);
    if sx == 0.0 || sy == 0.0 {
        return 0.0;
    }
    let cov = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.len() as f64;
    (cov / (sx * sy)).clamp(-1.0, 1.0)
}

pub fn isi_stats(train: &SpikeTrain, max_lag: usize) -> IsiStats {
    let isi = train.intervals();
    let cv = (isi.len() >= 2).then(|| {
        let (mean, sd) = mean_and_population_sd(&isi);
        sd / mean
    });
    let serial_correlation = (1..=max_lag)
        .map(|lag| (isi.len() >= lag + 2).then(|| pearson(&isi[..isi.len() - lag], &isi[lag..])))
        .collect();
    IsiStats {
        intervals: isi.len(),
        cv,
        serial_correlation,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Burst {
    pub start: u64,
    pub end: u64,
    pub count: usize,
    /// Spikes per iteration, `(count - 1) / (end - start)`.
    pub frequency: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BurstSummary {
    pub bursts: Vec<Burst>,
    pub isolated: usize,
}

pub fn group_bursts(train: &SpikeTrain, max_gap: u64) -> BurstSummary {
    let mut summary = BurstSummary::default();
    let flush = |run: &[u64], summary: &mut BurstSummary| match run {
        [] => {}
        [_] => summary.isolated += 1,
        [first, .., last] => summary.bursts.push(Burst {
            start: *first,
            end: *last,
            count: run.len(),
            frequency: (run.len() - 1) as f64 / (last - first) as f64,
        }),
    };
    let mut run_start = 0;
    for i in 1..=train.times.len() {
        if i == train.times.len() || train.times[i] - train.times[i - 1] > max_gap {
            flush(&train.times[run_start..i], &mut summary);
            run_start = i;
        }
    }
    summary
}

/// What to do with a gap that is neither simultaneous nor separated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapPolicy {
    MergeIntoEarlier,
    Split,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventConfig {
    /// Spikes closer than this are simultaneous.
    pub window: u64,
    /// Spikes farther apart than this belong to distinct events.
    pub separation: u64,
    pub gap_policy: GapPolicy,
}

impl Default for EventConfig {
    fn default() -> Self {
        Self {
            window: 200,
            separation: 1000,
            gap_policy: GapPolicy::MergeIntoEarlier,
        }
    }
}

impl EventConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window >= self.separation {
            return Err(config_err(format!(
                "simultaneity window {} must be smaller than separation {}",
                self.window, self.separation
            )));
        }
        Ok(())
    }
}

/// Spikes from several trials at one electrode grouped into one event.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventWindow<K: Ord> {
    pub start: u64,
    pub end: u64,
    /// Trials that spiked inside the window.
    pub present: BTreeSet<K>,
}

/// Merges the spikes of several trials into event windows.
///
/// Spikes are sorted by time and linked to the running event while the gap to
/// the event's latest spike is below `window`; a gap above `separation` always
/// opens a new event; intermediate gaps follow `gap_policy`.
pub fn simultaneity_groups<K: Ord + Copy>(trials: &[(K, &[u64])], config: &EventConfig) -> Vec<EventWindow<K>> {
    let mut spikes: Vec<(u64, K)> = trials
        .iter()
        .flat_map(|&(k, times)| times.iter().map(move |&t| (t, k)))
        .collect();
    spikes.sort_unstable();

    let mut events: Vec<EventWindow<K>> = Vec::new();
    for (t, k) in spikes {
        let join = events.last().is_some_and(|e| {
            let gap = t - e.end;
            if gap < config.window {
                true
            } else if gap > config.separation {
                false
            } else {
                config.gap_policy == GapPolicy::MergeIntoEarlier
            }
        });
        if join {
            let e = events.last_mut().expect("checked above");
            e.end = t;
            e.present.insert(k);
        } else {
            events.push(EventWindow {
                start: t,
                end: t,
                present: BTreeSet::from([k]),
            });
        }
    }
    events
}

pub fn spikes_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a SpikeTrain)>) -> String {
    let mut out = String::from("electrode,trial,iteration\n");
    for (trial, train) in rows {
        for t in &train.times {
            let _ = writeln!(out, "{},{},{}", train.label, trial, t);
        }
    }
    out
}

pub fn isi_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a SpikeTrain)>, max_lag: usize) -> String {
    let mut out = String::from("electrode,trial,spikes,cv");
    for lag in 1..=max_lag {
        let _ = write!(out, ",serial_lag{lag}");
    }
    out.push('\n');
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), format_sig9);
    for (trial, train) in rows {
        let stats = isi_stats(train, max_lag);
        let _ = write!(out, "{},{},{},{}", train.label, trial, train.len(), opt(stats.cv));
        for r in stats.serial_correlation {
            let _ = write!(out, ",{}", opt(r));
        }
        out.push('\n');
    }
    out
}

pub fn bursts_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a SpikeTrain)>, max_gap: u64) -> String {
    let mut out = String::from("electrode,trial,bursts,isolated,burst_spikes,mean_intra_burst_frequency\n");
    for (trial, train) in rows {
        let summary = group_bursts(train, max_gap);
        let burst_spikes: usize = summary.bursts.iter().map(|b| b.count).sum();
        let mean_freq = if summary.bursts.is_empty() {
            "NA".to_string()
        } else {
            format_sig9(summary.bursts.iter().map(|b| b.frequency).sum::<f64>() / summary.bursts.len() as f64)
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            train.label,
            trial,
            summary.bursts.len(),
            summary.isolated,
            burst_spikes,
            mean_freq
        );
    }
    out
}
