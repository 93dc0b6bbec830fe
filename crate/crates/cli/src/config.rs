//! Run configuration: one TOML file with a section per stage.

use std::path::{Path, PathBuf};

use proteinoid::electrode::{ElectrodeArray, StimParams};
use proteinoid::ensemble::EnsembleConfig;
use proteinoid::mapping::MappingSetup;
use proteinoid::medium::FhnParams;
use proteinoid::snapshot;
use proteinoid::spikes::{DetectorConfig, EventConfig, ThresholdMode};
use proteinoid::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Iterations per mining trial.
pub const DEFAULT_DURATION: u64 = 142_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub ensemble: EnsembleConfig,
    pub fhn: FhnParams,
    pub electrodes: ElectrodeSection,
    pub stimulus: StimParams,
    pub detector: DetectorConfig,
    pub events: EventConfig,
    pub mapping: MappingSetup,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Output directory.
    pub out: PathBuf,
    /// Use this image as the mask instead of generating an ensemble.
    pub mask_image: Option<PathBuf>,
    /// Iterations per trial.
    pub duration: u64,
    /// Electrode sampling period in iterations.
    pub sample_cadence: u64,
    /// Snapshot period for `simulate`; 0 disables frames.
    pub snapshot_cadence: u64,
    pub excited_level: f64,
    /// Write the full potential traces of every mining trial.
    pub write_traces: bool,
    /// Largest serial-correlation lag reported by `analyze-spikes`.
    pub isi_max_lag: usize,
    /// Largest gap between spikes of one burst.
    pub burst_max_gap: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            out: PathBuf::from("out"),
            mask_image: None,
            duration: DEFAULT_DURATION,
            sample_cadence: 1,
            snapshot_cadence: snapshot::DEFAULT_CADENCE,
            excited_level: snapshot::EXCITED_LEVEL,
            write_traces: true,
            isi_max_lag: 3,
            burst_max_gap: 2000,
        }
    }
}

/// Electrode centers; `None` selects the default 4x4 layout for the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElectrodeSection {
    pub centers: Option<Vec<(usize, usize)>>,
    pub sensing_radius: f64,
}

impl Default for ElectrodeSection {
    fn default() -> Self {
        Self {
            centers: None,
            sensing_radius: ElectrodeArray::DEFAULT_SENSING_RADIUS,
        }
    }
}

/// Simulated traces start at rest, so the pre-stimulus baseline is exactly
/// zero and a baseline-relative threshold reduces to a fixed level.
pub fn default_detector() -> DetectorConfig {
    DetectorConfig {
        mode: ThresholdMode::Absolute,
        absolute_threshold: 2.0,
        ..DetectorConfig::default()
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            run: RunSection::default(),
            ensemble: EnsembleConfig::default(),
            fhn: FhnParams::default(),
            electrodes: ElectrodeSection::default(),
            stimulus: StimParams::default(),
            detector: default_detector(),
            events: EventConfig::default(),
            mapping: MappingSetup::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the serialized effective config.
    pub fn digest(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Grid size: the ensemble grid, or the image size when a mask image is given.
    pub fn electrode_array(&self, width: usize, height: usize) -> ElectrodeArray {
        let mut array = ElectrodeArray::default_layout(width, height);
        if let Some(centers) = &self.electrodes.centers {
            array.centers = centers.clone();
        }
        array.sensing_radius = self.electrodes.sensing_radius;
        array
    }

    /// Checks that do not need the mask.
    pub fn validate(&self) -> Result<()> {
        self.ensemble.validate()?;
        self.fhn.validate()?;
        self.detector.validate()?;
        self.events.validate()?;
        let r = &self.run;
        if r.sample_cadence == 0 {
            return Err(Error::Config("run.sample_cadence must be >= 1".into()));
        }
        if r.duration == 0 {
            return Err(Error::Config("run.duration must be >= 1".into()));
        }
        if !r.excited_level.is_finite() {
            return Err(Error::Config("run.excited_level must be finite".into()));
        }
        if self.detector.mode == ThresholdMode::Baseline
            && self.detector.baseline_window as u64 > r.duration / r.sample_cadence
        {
            return Err(Error::Config(format!(
                "detector.baseline_window ({}) exceeds the {} samples of a trial",
                self.detector.baseline_window,
                r.duration / r.sample_cadence
            )));
        }
        if self.mask_size().is_none() {
            let array = self.electrode_array(self.ensemble.grid_width, self.ensemble.grid_height);
            self.validate_array(&array, self.ensemble.grid_width, self.ensemble.grid_height)?;
        }
        Ok(())
    }

    /// Checks that depend on the grid size.
    pub fn validate_array(&self, array: &ElectrodeArray, width: usize, height: usize) -> Result<()> {
        array.validate(width, height)?;
        self.stimulus.validate(array)?;
        if self.stimulus.x_electrode == self.stimulus.y_electrode {
            return Err(Error::Config("stimulus.x_electrode and y_electrode must differ".into()));
        }
        self.mapping.validate(array.len())
    }

    fn mask_size(&self) -> Option<&Path> {
        self.run.mask_image.as_deref()
    }
}
