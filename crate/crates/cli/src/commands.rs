use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use proteinoid::electrode::{record_trial, traces_to_csv, ElectrodeArray, InputPair, PotentialTrace, TrialSetup};
use proteinoid::ensemble::{self, ConductiveMask, DiscSet};
use proteinoid::gates::{self, find_two_output_gates, two_output_csv, TrialSet};
use proteinoid::graph::graph_metrics;
use proteinoid::mapping::{build_mapping, MappingRecord};
use proteinoid::medium::{Medium, Observer};
use proteinoid::snapshot::SnapshotEmitter;
use proteinoid::spikes::{self, detect_spikes, SpikeTrain};
use proteinoid::{Error, Result};
use rayon::prelude::*;

use crate::config::RunConfig;

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

/// Saves the effective config and a provenance record next to the outputs.
fn record_run(cfg: &RunConfig, command: &str) -> Result<()> {
    let out = &cfg.run.out;
    write(&out.join("config.toml"), &cfg.to_toml())?;
    let mut prov = String::new();
    let _ = writeln!(prov, "tool=proteinoid {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(prov, "command={command}");
    let _ = writeln!(prov, "config_sha256={}", cfg.digest());
    let _ = writeln!(prov, "rng_seed={}", cfg.ensemble.rng_seed);
    if let Some(img) = &cfg.run.mask_image {
        let _ = writeln!(prov, "mask_image={}", img.display());
    }
    write(&out.join("provenance.txt"), &prov)
}

fn discs_csv(discs: &DiscSet) -> String {
    let mut out = String::from("x,y\n");
    for (x, y) in &discs.centers {
        let _ = writeln!(out, "{x},{y}");
    }
    out
}

fn build_mask(cfg: &RunConfig) -> Result<(ConductiveMask, Option<DiscSet>)> {
    match &cfg.run.mask_image {
        Some(path) => Ok((ensemble::load_mask(path)?, None)),
        None => {
            let discs = ensemble::generate_ensemble(&cfg.ensemble)?;
            let mask = ensemble::rasterize(&discs, cfg.ensemble.grid_width, cfg.ensemble.grid_height);
            Ok((mask, Some(discs)))
        }
    }
}

struct Prepared {
    medium: Medium,
    array: ElectrodeArray,
}

fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let (mask, _) = build_mask(cfg)?;
    let array = cfg.electrode_array(mask.width(), mask.height());
    cfg.validate_array(&array, mask.width(), mask.height())?;
    Ok(Prepared {
        medium: Medium::from_mask(&mask),
        array,
    })
}

fn setup<'a>(cfg: &'a RunConfig, p: &'a Prepared) -> TrialSetup<'a> {
    TrialSetup {
        medium: &p.medium,
        params: cfg.fhn,
        array: &p.array,
        stim: &cfg.stimulus,
        duration: cfg.run.duration,
        sample_cadence: cfg.run.sample_cadence,
    }
}

fn detect_all(traces: &[PotentialTrace], cfg: &RunConfig) -> Result<Vec<SpikeTrain>> {
    traces.iter().map(|t| detect_spikes(t, &cfg.detector)).collect()
}

pub fn gen_ensemble(cfg: &RunConfig) -> Result<()> {
    let (mask, discs) = build_mask(cfg)?;
    let dir = cfg.run.out.join("mask");
    fs::create_dir_all(&dir)?;
    if let Some(discs) = &discs {
        write(&dir.join("discs.csv"), &discs_csv(discs))?;
        println!("discs {}", discs.centers.len());
    }
    mask.write_pbm(&dir.join("mask.pbm"))?;
    let total = mask.width() * mask.height();
    println!(
        "conductive {} of {} nodes ({:.1}%)",
        mask.count(),
        total,
        100.0 * mask.count() as f64 / total as f64
    );
    record_run(cfg, "gen-ensemble")
}

pub fn simulate(cfg: &RunConfig, input: InputPair) -> Result<()> {
    let prepared = prepare(cfg)?;
    let code = input.code();
    let mut frames = Vec::new();
    let traces = if cfg.run.snapshot_cadence > 0 {
        let mut emitter = SnapshotEmitter::new(
            cfg.run.out.join("frames").join(&code),
            cfg.run.snapshot_cadence,
            cfg.run.excited_level,
        )?;
        let traces = record_trial(&setup(cfg, &prepared), input, &mut [&mut emitter as &mut dyn Observer])?;
        frames = emitter.written().to_vec();
        traces
    } else {
        record_trial(&setup(cfg, &prepared), input, &mut [])?
    };
    write(&cfg.run.out.join("traces").join(format!("trace_{code}.csv")), &traces_to_csv(&traces))?;
    let trains = detect_all(&traces, cfg)?;
    write(
        &cfg.run.out.join("traces").join(format!("spikes_{code}.csv")),
        &spikes::spikes_csv(trains.iter().map(|t| (code.as_str(), t))),
    )?;
    println!("trial {code}: {} iterations, {} frames", cfg.run.duration, frames.len());
    for t in &trains {
        println!("{} spikes {}", t.label, t.len());
    }
    record_run(cfg, &format!("simulate --input {code}"))
}

pub fn mine_gates(cfg: &RunConfig) -> Result<()> {
    let prepared = prepare(cfg)?;
    let setup = setup(cfg, &prepared);
    let traces: Vec<Vec<PotentialTrace>> = InputPair::TRIALS
        .par_iter()
        .map(|&pair| record_trial(&setup, pair, &mut []))
        .collect::<Result<_>>()?;
    let trains: Vec<Vec<SpikeTrain>> = traces.iter().map(|t| detect_all(t, cfg)).collect::<Result<_>>()?;
    let codes: Vec<String> = InputPair::TRIALS.iter().map(InputPair::code).collect();

    let out = &cfg.run.out;
    if cfg.run.write_traces {
        for (code, t) in codes.iter().zip(&traces) {
            write(&out.join("traces").join(format!("trace_{code}.csv")), &traces_to_csv(t))?;
        }
    }
    let [a, b, c]: [Vec<SpikeTrain>; 3] = trains.try_into().expect("three trials");
    let set = TrialSet::new(cfg.run.duration, [a, b, c])?;
    let census = gates::mine_gates(&set, &cfg.events)?;

    let spike_rows = codes.iter().zip(&set.trials).flat_map(|(code, ts)| ts.iter().map(move |t| (code.as_str(), t)));
    write(&out.join("gates").join("spikes.csv"), &spikes::spikes_csv(spike_rows))?;
    write(&out.join("gates").join("census.csv"), &census.to_csv())?;
    write(&out.join("gates").join("gates.csv"), &census.records_csv())?;
    let labels = &census.labels;
    let mut pairs = Vec::new();
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            for g in find_two_output_gates(&census.records, i, j, cfg.events.window) {
                pairs.push((labels[i].clone(), labels[j].clone(), g));
            }
        }
    }
    write(&out.join("gates").join("two_output.csv"), &two_output_csv(&pairs))?;

    print!("{}", census.to_csv());
    let with_gates = (0..labels.len()).filter(|&e| census.electrode_total(e) > 0).count();
    println!("electrodes with gates: {with_gates} of {}", labels.len());
    record_run(cfg, "mine-gates")
}

pub fn map(cfg: &RunConfig, replay: Option<&Path>) -> Result<()> {
    let record = match replay {
        Some(path) => MappingRecord::read_csv(path)?,
        None => {
            let prepared = prepare(cfg)?;
            let provenance = format!("simulated; config_sha256={}", cfg.digest());
            build_mapping(&setup(cfg, &prepared), &cfg.mapping, &cfg.detector, provenance)?
        }
    };
    let dir = cfg.run.out.join("mapping");
    write(&dir.join("mapping.csv"), &record.to_csv())?;
    write(&dir.join("graph.csv"), &record.edge_list())?;
    write(&dir.join("graph.dot"), &record.to_dot())?;

    let metrics = graph_metrics(&record.successors());
    let mut report = metrics.report();
    for j in 0..record.k {
        report.push_str(&record.project(j)?.metrics().report(&format!("output{j}.")));
    }
    write(&dir.join("metrics.txt"), &report)?;
    if let Some(d) = metrics.distance_csv() {
        write(&dir.join("distances.csv"), &d)?;
    }
    print!("{report}");
    let command = match replay {
        Some(p) => format!("map --replay {}", p.display()),
        None => "map".to_string(),
    };
    record_run(cfg, &command)
}

/// `trace_01.csv` is reported as trial `01`; other names keep their stem.
fn trial_name(path: &Path) -> String {
    let stem = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    stem.strip_prefix("trace_").map(str::to_string).unwrap_or(stem)
}

pub fn analyze_spikes(cfg: &RunConfig, paths: &[PathBuf]) -> Result<()> {
    let mut rows: Vec<(String, SpikeTrain)> = Vec::new();
    for path in paths {
        let traces = proteinoid::electrode::read_traces_csv(path)?;
        if traces.is_empty() {
            return Err(Error::Config(format!("{} holds no traces", path.display())));
        }
        let name = trial_name(path);
        for t in detect_all(&traces, cfg)? {
            rows.push((name.clone(), t));
        }
    }
    let view = || rows.iter().map(|(n, t)| (n.as_str(), t));
    let dir = cfg.run.out.join("analysis");
    write(&dir.join("spikes.csv"), &spikes::spikes_csv(view()))?;
    write(&dir.join("isi.csv"), &spikes::isi_csv(view(), cfg.run.isi_max_lag))?;
    write(&dir.join("bursts.csv"), &spikes::bursts_csv(view(), cfg.run.burst_max_gap))?;
    for (name, t) in &rows {
        println!("{name} {} spikes {}", t.label, t.len());
    }
    record_run(cfg, "analyze-spikes")
}
