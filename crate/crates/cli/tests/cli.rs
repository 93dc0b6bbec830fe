#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use proteinoid::electrode::ElectrodeArray;
use proteinoid::ensemble::{self, ConductiveMask, DiscSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn proteinoid(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proteinoid"))
        .args(args)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "[events]\nwindow = 5000\n");
    let o = proteinoid(dir.path(), &["gen-ensemble", "--config", &bad]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let unknown = write_config(dir.path(), "[fhn]\nbogus = 1\n");
    assert_eq!(proteinoid(dir.path(), &["gen-ensemble", "--config", &unknown]).status.code(), Some(2));
    assert_eq!(proteinoid(dir.path(), &["simulate", "--input", "21"]).status.code(), Some(2));
    assert_eq!(proteinoid(dir.path(), &["no-such-command"]).status.code(), Some(2));

    let huge = write_config(
        dir.path(),
        "[ensemble]\ngrid_width = 60\ngrid_height = 60\ncandidate_count = 4000\ndensity_scale = 1000.0\n\
         [run]\nduration = 200\nsnapshot_cadence = 0\n[stimulus]\namplitude = 1e300\n",
    );
    let o = proteinoid(dir.path(), &["simulate", "--input", "10", "--config", &huge]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("blew up"));
}

#[test]
fn default_ensemble_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = proteinoid(dir.path(), &["gen-ensemble", "--seed", "7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let mask = ensemble::load_mask(&out.join("mask/mask.pbm")).unwrap();
    assert_eq!((mask.width(), mask.height()), (1000, 960));

    let text = fs::read_to_string(out.join("mask/discs.csv")).unwrap();
    let centers: Vec<(usize, usize)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (x, y) = l.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect();
    let again = ensemble::rasterize(&DiscSet { centers, diameter: 7 }, 1000, 960);
    assert_eq!(again, mask);

    let config = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(config.contains("rng_seed = 7"));
    let prov = fs::read_to_string(out.join("provenance.txt")).unwrap();
    assert!(prov.contains("config_sha256="));

    let o = proteinoid(dir.path(), &["gen-ensemble", "--seed", "8"]);
    assert!(o.status.success());
    assert_ne!(fs::read_to_string(out.join("mask/discs.csv")).unwrap(), text);
}

#[test]
fn empty_ensemble_is_fine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[ensemble]\ncandidate_count = 0\n");
    let o = proteinoid(dir.path(), &["gen-ensemble", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mask = ensemble::load_mask(&dir.path().join("out/mask/mask.pbm")).unwrap();
    assert_eq!(mask.count(), 0);
}

const SMALL: &str = "[ensemble]\ngrid_width = 120\ngrid_height = 100\ncandidate_count = 20000\ndensity_scale = 1000.0\n\
                     [run]\nduration = 3000\nsnapshot_cadence = 500\n";

#[test]
fn simulate_writes_traces_and_frames() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = proteinoid(dir.path(), &["simulate", "--input", "00", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let trace = fs::read_to_string(out.join("traces/trace_00.csv")).unwrap();
    assert_eq!(trace.lines().count(), 3001);
    assert!(trace.lines().skip(1).all(|l| l.split(',').skip(1).all(|v| v == "0")));
    assert_eq!(fs::read_dir(out.join("frames/00")).unwrap().count(), 6);

    let o = proteinoid(dir.path(), &["simulate", "--input", "10", "--config", &cfg]);
    assert!(o.status.success());
    let first = fs::read(out.join("traces/trace_10.csv")).unwrap();
    let o = proteinoid(dir.path(), &["simulate", "--input", "10", "--config", &cfg]);
    assert!(o.status.success());
    assert_eq!(fs::read(out.join("traces/trace_10.csv")).unwrap(), first);

    let o = proteinoid(dir.path(), &["analyze-spikes", "--traces", &out.join("traces/trace_10.csv").to_string_lossy(), "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let isi = fs::read_to_string(out.join("analysis/isi.csv")).unwrap();
    assert!(isi.starts_with("electrode,trial,spikes,cv,serial_lag1"));
    assert!(isi.lines().nth(1).unwrap().split(',').nth(1) == Some("10"));
}

#[test]
fn dead_mask_gives_empty_census() {
    let dir = tempfile::tempdir().unwrap();
    ConductiveMask::new(100, 100).write_pbm(&dir.path().join("dead.pbm")).unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("[run]\nmask_image = {:?}\nduration = 500\n", dir.path().join("dead.pbm")),
    );
    let o = proteinoid(dir.path(), &["mine-gates", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let census = fs::read_to_string(dir.path().join("out/gates/census.csv")).unwrap();
    assert_eq!(census.lines().count(), 18);
    assert_eq!(census.lines().last().unwrap(), "total,0,0,0,0,0,0,0,0");
}

/// Census row for `label` as (column name, count) pairs.
fn census_row(census: &str, label: &str) -> Vec<(String, usize)> {
    let mut lines = census.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row = lines.find(|l| l.split(',').next() == Some(label)).unwrap();
    header[1..header.len() - 1]
        .iter()
        .zip(row.split(',').skip(1))
        .map(|(h, v)| (h.to_string(), v.parse().unwrap()))
        .collect()
}

#[test]
fn corridor_carries_only_the_x_input() {
    let (w, h) = (200, 200);
    let array = ElectrodeArray::default_layout(w, h);
    let (e9, e13, e3) = (array.centers[8], array.centers[12], array.centers[2]);
    assert_eq!(e9.0, e13.0);
    let mut mask = ConductiveMask::new(w, h);
    for y in e9.1 - 6..=e13.1 + 6 {
        for x in e9.0 - 4..=e9.0 + 4 {
            mask.set(x, y, true);
        }
    }
    mask.paint_disc(e3, 10.0);

    let dir = tempfile::tempdir().unwrap();
    let image = dir.path().join("corridor.pbm");
    mask.write_pbm(&image).unwrap();
    let cfg = write_config(dir.path(), &format!("[run]\nmask_image = {image:?}\nduration = 40000\n"));
    let o = proteinoid(dir.path(), &["mine-gates", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let census = fs::read_to_string(dir.path().join("out/gates/census.csv")).unwrap();

    let row = census_row(&census, "E13");
    assert!(row.iter().map(|(_, n)| n).sum::<usize>() > 0, "{census}");
    for (gate, n) in &row {
        if *n > 0 {
            assert!(gate == "sel_x" || gate == "andnot", "{census}");
        }
    }
    // The island around E3 answers only to y.
    for (gate, n) in census_row(&census, "E3") {
        if n > 0 {
            assert!(gate == "sel_y" || gate == "notand", "{census}");
        }
    }
}

fn parse_report(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[test]
fn replayed_mapping_matches_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for round in 0..5 {
        let succ: Vec<usize> = (0..16).map(|_| rng.gen_range(0..16)).collect();
        let dir = tempfile::tempdir().unwrap();
        let mut csv = String::from("input_bits,output_bits\n");
        for (s, t) in succ.iter().enumerate() {
            let bits = |v: usize| (0..4).map(|i| if v >> i & 1 == 1 { '1' } else { '0' }).collect::<String>();
            csv.push_str(&format!("{},{}\n", bits(s), bits(*t)));
        }
        let path = dir.path().join("mapping.csv");
        fs::write(&path, &csv).unwrap();
        let o = proteinoid(dir.path(), &["map", "--replay", &path.to_string_lossy()]);
        assert!(o.status.success(), "{}", stderr(&o));
        let out = dir.path().join("out/mapping");

        assert_eq!(fs::read_to_string(out.join("mapping.csv")).unwrap(), csv);
        let dist = oracles::bfs_distances(&succ);
        let (ecc, radius, diameter) = oracles::eccentricities(&dist);
        let matrix = fs::read_to_string(out.join("distances.csv")).unwrap();
        for (row, expect) in matrix.lines().zip(&dist) {
            let got: Vec<Option<u32>> = row.split(',').map(|c| c.parse().ok()).collect();
            assert_eq!(&got, expect, "round {round}");
        }
        let report = parse_report(&fs::read_to_string(out.join("metrics.txt")).unwrap());
        let get = |k: &str| report.iter().find(|(key, _)| key == k).unwrap().1.clone();
        assert_eq!(get("graph.radius"), radius.to_string());
        assert_eq!(get("graph.diameter"), diameter.to_string());
        let ecc_list: Vec<String> = ecc.iter().map(usize::to_string).collect();
        assert_eq!(get("graph.eccentricity"), ecc_list.join(","));
        for j in 0..4 {
            let table: Vec<bool> = succ.iter().map(|&t| t >> j & 1 == 1).collect();
            let nl = oracles::nonlinearity_by_enumeration(&table, 4);
            assert_eq!(get(&format!("output{j}.nonlinearity")), nl.to_string());
            assert_eq!(get(&format!("output{j}.weight")), table.iter().filter(|&&b| b).count().to_string());
            assert_eq!(get(&format!("output{j}.sensitivity")), oracles::sensitivity_brute(&table, 4).to_string());
        }
        assert!(out.join("graph.dot").exists());
        assert!(out.join("graph.csv").exists());
    }
}
