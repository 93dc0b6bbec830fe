//! Grayscale frames of the excitation pattern.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, GrayImage, ImageEncoder};

use crate::error::{Error, Result};
use crate::medium::{FieldState, Medium, Observer};

/// Default `u` level above which a conductive node is drawn as excited.
pub const EXCITED_LEVEL: f64 = 0.04;
pub const DEFAULT_CADENCE: u64 = 100;

pub const EXCITED: u8 = 0;
pub const RESTING: u8 = 160;
pub const BACKGROUND: u8 = 255;

/// Excited nodes are black, resting conductive nodes gray, the rest white.
pub fn render_frame(medium: &Medium, state: &FieldState, excited_level: f64) -> GrayImage {
    let mut img = GrayImage::from_pixel(medium.width() as u32, medium.height() as u32, image::Luma([BACKGROUND]));
    for (n, &u) in state.u.iter().enumerate() {
        let (x, y) = medium.coords(n);
        let level = if u > excited_level { EXCITED } else { RESTING };
        img.put_pixel(x as u32, y as u32, image::Luma([level]));
    }
    img
}

pub fn write_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    let writer = BufWriter::new(File::create(path)?);
    PnmEncoder::new(writer)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(img.as_raw(), img.width(), img.height(), ExtendedColorType::L8)
        .map_err(|e| Error::Io(std::io::Error::other(e)))
}

/// Observer that writes `frame_<iteration>.pgm` into a directory.
pub struct SnapshotEmitter {
    dir: PathBuf,
    cadence: u64,
    excited_level: f64,
    written: Vec<PathBuf>,
}

impl SnapshotEmitter {
    pub fn new(dir: impl Into<PathBuf>, cadence: u64, excited_level: f64) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            cadence,
            excited_level,
            written: Vec::new(),
        })
    }

    pub fn frame_path(&self, iteration: u64) -> PathBuf {
        self.dir.join(format!("frame_{iteration:07}.pgm"))
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

impl Observer for SnapshotEmitter {
    fn cadence(&self) -> u64 {
        self.cadence
    }

    fn observe(&mut self, medium: &Medium, state: &FieldState) -> Result<()> {
        let path = self.frame_path(state.t);
        write_pgm(&render_frame(medium, state, self.excited_level), &path)?;
        self.written.push(path);
        Ok(())
    }
}
