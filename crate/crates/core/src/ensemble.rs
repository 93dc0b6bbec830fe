//! Random microsphere ensembles and the conductive masks derived from them.
//!
//! An ensemble is a list of disc centers on a node lattice. Candidate centers
//! are drawn uniformly over the grid and accepted with probability
//! `exp(-d / density_scale)`, where `d` is the distance to the grid center, so
//! the ensemble is densest in the middle. Discs may touch or overlap.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`. Uniform variates are formed from the top 53 bits of
//! `next_u64`, so the center list is identical on every platform.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, RgbImage};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};

/// Channel values at or above this are not conductive.
pub const DARK_THRESHOLD: u8 = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub grid_width: usize,
    pub grid_height: usize,
    /// Disc diameter in nodes; odd.
    pub disc_diameter: usize,
    /// Default packs the grid densely enough (about 96% of nodes covered)
    /// for excitation to travel between neighbouring electrodes.
    pub candidate_count: usize,
    /// Length scale of the acceptance decay, in nodes.
    pub density_scale: f64,
    pub rng_seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            grid_width: 1000,
            grid_height: 960,
            disc_diameter: 7,
            candidate_count: 250_000,
            density_scale: 400.0,
            rng_seed: 1,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.disc_diameter == 0 || self.disc_diameter.is_multiple_of(2) {
            return Err(config_err(format!(
                "disc_diameter must be odd and >= 1, got {}",
                self.disc_diameter
            )));
        }
        if self.grid_width < self.disc_diameter || self.grid_height < self.disc_diameter {
            return Err(config_err(format!(
                "grid {}x{} is smaller than the disc diameter {}",
                self.grid_width, self.grid_height, self.disc_diameter
            )));
        }
        if !(self.density_scale.is_finite() && self.density_scale > 0.0) {
            return Err(config_err("density_scale must be positive and finite"));
        }
        Ok(())
    }

    /// Continuous grid center used for the acceptance distance.
    pub fn center(&self) -> (f64, f64) {
        (
            (self.grid_width as f64 - 1.0) / 2.0,
            (self.grid_height as f64 - 1.0) / 2.0,
        )
    }

    pub fn acceptance_probability(&self, x: usize, y: usize) -> f64 {
        let (cx, cy) = self.center();
        let d = (x as f64 - cx).hypot(y as f64 - cy);
        (-d / self.density_scale).exp()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscSet {
    /// Centers in generation order.
    pub centers: Vec<(usize, usize)>,
    pub diameter: usize,
}

fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn generate_ensemble(config: &EnsembleConfig) -> Result<DiscSet> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut centers = Vec::new();
    for _ in 0..config.candidate_count {
        let x = ((unit_f64(&mut rng) * config.grid_width as f64) as usize).min(config.grid_width - 1);
        let y =
            ((unit_f64(&mut rng) * config.grid_height as f64) as usize).min(config.grid_height - 1);
        if unit_f64(&mut rng) < config.acceptance_probability(x, y) {
            centers.push((x, y));
        }
    }
    Ok(DiscSet {
        centers,
        diameter: config.disc_diameter,
    })
}

/// Boolean grid of conductive nodes, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct ConductiveMask {
    width: usize,
    height: usize,
    cells: Vec<bool>,
}

impl std::fmt::Debug for ConductiveMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConductiveMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("conductive", &self.count())
            .finish()
    }
}

impl ConductiveMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            cells: vec![false; width * height],
        }
    }

    pub fn filled(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            cells: vec![true; width * height],
        }
    }

    pub fn from_cells(width: usize, height: usize, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != width * height {
            return Err(config_err(format!(
                "mask has {} cells, expected {}x{}",
                cells.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            cells,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height && self.cells[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.cells[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Marks every node within `radius` (inclusive) of `center`, clipped to the grid.
    pub fn paint_disc(&mut self, center: (usize, usize), radius: f64) {
        let reach = radius.floor() as isize;
        let r2 = radius * radius;
        let (cx, cy) = (center.0 as isize, center.1 as isize);
        for dy in -reach..=reach {
            let y = cy + dy;
            if y < 0 || y >= self.height as isize {
                continue;
            }
            for dx in -reach..=reach {
                let x = cx + dx;
                if x < 0 || x >= self.width as isize {
                    continue;
                }
                if (dx * dx + dy * dy) as f64 <= r2 {
                    self.cells[y as usize * self.width + x as usize] = true;
                }
            }
        }
    }

    /// Writes the mask as a binary portable bitmap; conductive nodes are black (1).
    pub fn write_pbm(&self, path: &Path) -> Result<()> {
        // The encoder takes luma-like samples: 0 is written as a black (set) bit.
        let luma: Vec<u8> = self.cells.iter().map(|&c| u8::from(!c)).collect();
        let writer = BufWriter::new(File::create(path)?);
        PnmEncoder::new(writer)
            .with_subtype(PnmSubtype::Bitmap(SampleEncoding::Binary))
            .write_image(
                &luma,
                self.width as u32,
                self.height as u32,
                ExtendedColorType::L8,
            )
            .map_err(|e| Error::Load(e.to_string()))
    }
}

pub fn rasterize(discs: &DiscSet, width: usize, height: usize) -> ConductiveMask {
    let mut mask = ConductiveMask::new(width, height);
    let radius = discs.diameter as f64 / 2.0;
    for &center in &discs.centers {
        mask.paint_disc(center, radius);
    }
    mask
}

pub fn mask_from_image(pixels: &RgbImage) -> ConductiveMask {
    let cells = pixels
        .pixels()
        .map(|p| p.0.iter().all(|&c| c < DARK_THRESHOLD))
        .collect();
    ConductiveMask {
        width: pixels.width() as usize,
        height: pixels.height() as usize,
        cells,
    }
}

/// Loads a mask from a PBM/PGM/PPM file (ASCII or binary).
pub fn load_mask(path: &Path) -> Result<ConductiveMask> {
    let img = image::ImageReader::open(path)?
        .with_guessed_format()?
        .decode()
        .map_err(|e| Error::Load(format!("{}: {e}", path.display())))?;
    Ok(mask_from_image(&img.to_rgb8()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    fn small_config() -> EnsembleConfig {
        EnsembleConfig {
            grid_width: 200,
            grid_height: 180,
            candidate_count: 2000,
            density_scale: 50.0,
            rng_seed: 7,
            ..EnsembleConfig::default()
        }
    }

    #[test]
    fn no_candidates_gives_empty_set() {
        let cfg = EnsembleConfig {
            candidate_count: 0,
            ..small_config()
        };
        assert!(generate_ensemble(&cfg).unwrap().centers.is_empty());
    }

    #[test]
    fn generation_is_reproducible() {
        let a = generate_ensemble(&small_config()).unwrap();
        let b = generate_ensemble(&small_config()).unwrap();
        assert_eq!(a, b);
        assert!(!a.centers.is_empty());
        let c = generate_ensemble(&EnsembleConfig {
            rng_seed: 8,
            ..small_config()
        })
        .unwrap();
        assert_ne!(a.centers, c.centers);
    }

    #[test]
    fn centers_stay_inside_grid() {
        let cfg = small_config();
        let set = generate_ensemble(&cfg).unwrap();
        assert!(set
            .centers
            .iter()
            .all(|&(x, y)| x < cfg.grid_width && y < cfg.grid_height));
    }

    #[test]
    fn rejects_even_or_oversized_discs() {
        let even = EnsembleConfig {
            disc_diameter: 6,
            ..small_config()
        };
        assert!(matches!(generate_ensemble(&even), Err(Error::Config(_))));
        let big = EnsembleConfig {
            grid_width: 5,
            ..small_config()
        };
        assert!(big.validate().is_err());
    }

    #[test]
    fn single_disc_stencil_has_37_nodes() {
        // Independent count of lattice offsets inside the closed disc of radius 3.5.
        let expected = (-3i32..=3)
            .flat_map(|dx| (-3i32..=3).map(move |dy| (dx, dy)))
            .filter(|&(dx, dy)| 4 * (dx * dx + dy * dy) <= 49)
            .count();
        assert_eq!(expected, 37);
        let discs = DiscSet {
            centers: vec![(20, 20)],
            diameter: 7,
        };
        assert_eq!(rasterize(&discs, 40, 40).count(), expected);
    }

    #[test]
    fn duplicate_centers_are_idempotent() {
        let one = DiscSet {
            centers: vec![(10, 12)],
            diameter: 7,
        };
        let two = DiscSet {
            centers: vec![(10, 12), (10, 12)],
            diameter: 7,
        };
        assert_eq!(rasterize(&one, 30, 30), rasterize(&two, 30, 30));
        assert_eq!(rasterize(&DiscSet { centers: vec![], diameter: 7 }, 30, 30).count(), 0);
    }

    #[test]
    fn discs_clip_at_border() {
        let discs = DiscSet {
            centers: vec![(0, 0)],
            diameter: 7,
        };
        // Quarter of the stencil including both axes through the center.
        assert_eq!(rasterize(&discs, 10, 10).count(), 13);
    }

    #[test]
    fn image_threshold_is_strict() {
        let mut img = RgbImage::from_pixel(3, 1, Rgb([0, 0, 0]));
        img.put_pixel(1, 0, Rgb([19, 19, 19]));
        img.put_pixel(2, 0, Rgb([20, 19, 19]));
        let mask = mask_from_image(&img);
        assert_eq!(mask.cells(), &[true, true, false]);

        assert_eq!(mask_from_image(&RgbImage::from_pixel(4, 4, Rgb([0, 0, 0]))).count(), 16);
        assert_eq!(mask_from_image(&RgbImage::from_pixel(4, 4, Rgb([255, 255, 255]))).count(), 0);
    }

    #[test]
    fn pbm_round_trip() {
        let dir = std::env::temp_dir().join(format!("pbm-rt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("mask.pbm");
        let mask = rasterize(&generate_ensemble(&small_config()).unwrap(), 200, 180);
        mask.write_pbm(&path).unwrap();
        assert_eq!(load_mask(&path).unwrap(), mask);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn ascii_pnm_inputs() {
        let dir = std::env::temp_dir().join(format!("pnm-ascii-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let pbm = dir.join("a.pbm");
        std::fs::write(&pbm, "P1\n3 2\n1 0 1\n0 0 1\n").unwrap();
        assert_eq!(
            load_mask(&pbm).unwrap().cells(),
            &[true, false, true, false, false, true]
        );
        let ppm = dir.join("a.ppm");
        std::fs::write(&ppm, "P3\n2 1\n255\n19 19 19 20 0 0\n").unwrap();
        assert_eq!(load_mask(&ppm).unwrap().cells(), &[true, false]);
        let bad = dir.join("bad.ppm");
        std::fs::write(&bad, "P3\n4 4\n255\n0 0 0\n").unwrap();
        assert!(matches!(load_mask(&bad), Err(Error::Load(_))));
        std::fs::remove_dir_all(&dir).ok();
    }
}
