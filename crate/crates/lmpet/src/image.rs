//! 2D activity/reconstruction images and their on-disk format.
//!
//! Pixels are row-major with index `j = y*W + x`. World coordinates place the
//! image center on the scanner center: pixel `(x, y)` is centered at
//! `((x - (W-1)/2) * pixel_size, (y - (H-1)/2) * pixel_size)` mm.
//!
//! File format (`.img2`, little-endian): magic `IMG2`, `u32 W`, `u32 H`,
//! `f64 pixel_size_mm`, then `W*H` `f64` values row-major.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Point2;

const MAGIC: &[u8; 4] = b"IMG2";

/// Pixel grid shared by images and projection operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    /// Square pixel edge length (mm).
    pub pixel_size: f64,
}

impl Grid {
    pub fn new(width: usize, height: usize, pixel_size: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("grid dimensions must be >= 1".into()));
        }
        if !(pixel_size > 0.0) || !pixel_size.is_finite() {
            return Err(Error::InvalidArgument(format!("pixel_size = {} must be > 0", pixel_size)));
        }
        Ok(Grid { width, height, pixel_size })
    }

    pub fn n_pixels(&self) -> usize {
        self.width * self.height
    }

    /// World position of the pixel center `(x, y)`.
    pub fn pixel_center(&self, x: usize, y: usize) -> Point2 {
        Point2::new(
            (x as f64 - (self.width as f64 - 1.0) / 2.0) * self.pixel_size,
            (y as f64 - (self.height as f64 - 1.0) / 2.0) * self.pixel_size,
        )
    }

    /// Continuous pixel coordinates of a world point (pixel centers at integers).
    pub fn to_pixel_coords(&self, p: Point2) -> (f64, f64) {
        (
            p.x / self.pixel_size + (self.width as f64 - 1.0) / 2.0,
            p.y / self.pixel_size + (self.height as f64 - 1.0) / 2.0,
        )
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }
}

/// W×H activity image on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Image2D {
    pub grid: Grid,
    values: Vec<f64>,
}

impl Image2D {
    pub fn zeros(grid: Grid) -> Self {
        Image2D { grid, values: vec![0.0; grid.n_pixels()] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_pixels() {
            return Err(Error::LengthMismatch(format!(
                "image expects {} values, got {}",
                grid.n_pixels(),
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("image contains non-finite values".into()));
        }
        Ok(Image2D { grid, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[self.grid.index(x, y)]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        let j = self.grid.index(x, y);
        self.values[j] = v;
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    pub fn same_grid(&self, other: &Image2D) -> bool {
        self.grid == other.grid
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(20 + self.values.len() * 8);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&(self.grid.width as u32).to_le_bytes());
        buf.extend_from_slice(&(self.grid.height as u32).to_le_bytes());
        buf.extend_from_slice(&self.grid.pixel_size.to_le_bytes());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        atomic_write(path, &buf)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut header = [0u8; 20];
        file.read_exact(&mut header).map_err(|e| Error::io(path, e))?;
        if &header[0..4] != MAGIC {
            return Err(Error::format(path, "bad magic, expected IMG2"));
        }
        let width = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let height = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let pixel_size = f64::from_le_bytes(header[12..20].try_into().unwrap());
        let grid = Grid::new(width, height, pixel_size)
            .map_err(|e| Error::format(path, format!("bad grid header: {}", e)))?;
        let mut data = vec![0u8; grid.n_pixels() * 8];
        file.read_exact(&mut data).map_err(|e| Error::io(path, e))?;
        let values: Vec<f64> = data
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Image2D::from_values(grid, values).map_err(|e| Error::format(path, format!("{}", e)))
    }
}

/// Write via a temp file + rename so partially written outputs never appear.
pub(crate) fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp.partial");
    {
        let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
