//! TOF-weighted Joseph projector for list-mode events.
//!
//! Each event's system-matrix row is computed independently: step along the
//! driving axis (the axis best aligned with the LOR), interpolate between the
//! two pixels adjacent to the intersection midpoint, and weight by the TOF
//! kernel and the step length. Rows are stored sparse; the dense float32
//! footprints quoted by `estimate_memory` are accounting, not allocation.
//!
//! Back-projection accumulates contributions in 128-bit fixed point with a
//! data-independent quantum, which makes the result exactly independent of
//! summation order — and therefore of both worker count and event order.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::events::EventList;
use crate::geometry::{Lor, ScannerConfig, TofBin, SPEED_OF_LIGHT_MM_PER_PS};
use crate::image::{Grid, Image2D};
use crate::parallel::PAR_CHUNK;

/// FWHM-to-sigma conversion for a Gaussian kernel.
const FWHM_TO_SIGMA: f64 = 2.3548;

/// TOF kernel standard deviation in mm for the configured timing resolution.
///
/// The timing FWHM maps to a spatial FWHM of `c * dt / 2`.
pub fn tof_sigma_mm(cfg: &ScannerConfig) -> f64 {
    SPEED_OF_LIGHT_MM_PER_PS * cfg.tof_resolution / 2.0 / FWHM_TO_SIGMA
}

/// Gaussian TOF weight at signed offset `s_mid_offset` (mm from the LOR
/// midpoint, toward the second crystal) for TOF bin `tof`.
///
/// Returns exactly 0 beyond 3 sigma.
pub fn tof_weight(cfg: &ScannerConfig, s_mid_offset: f64, tof: TofBin) -> f64 {
    let d = s_mid_offset - tof.center_offset(cfg);
    truncated_gaussian(d, tof_sigma_mm(cfg))
}

fn truncated_gaussian(d: f64, sigma: f64) -> f64 {
    if d.abs() > 3.0 * sigma {
        0.0
    } else {
        (-d * d / (2.0 * sigma * sigma)).exp()
    }
}

/// One sparse row of the projection matrix: `(pixel index, weight)` entries,
/// sorted by pixel index, weights nonnegative, duplicates merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseRow {
    pub entries: Vec<(u32, f64)>,
}

impl SparseRow {
    pub fn dot(&self, values: &[f64]) -> f64 {
        self.entries.iter().map(|&(j, w)| w * values[j as usize]).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Joseph-method row for one (LOR, TOF bin) pair on `grid`.
///
/// A LOR that misses the image yields an empty row.
pub fn joseph_row(cfg: &ScannerConfig, grid: Grid, lor: &Lor, tof: TofBin) -> Result<SparseRow> {
    if tof.0 >= cfg.n_tof_bins {
        return Err(Error::TofBinOutOfRange { bin: tof.0, n_bins: cfg.n_tof_bins });
    }
    let length = lor.length();
    if !(length > 0.0) {
        return Err(Error::DegenerateLor(lor.c1.0));
    }
    let u = lor.direction();
    let sigma = tof_sigma_mm(cfg);
    let tof_center = tof.center_offset(cfg);
    let px = grid.pixel_size;

    let mut entries: Vec<(u32, f64)> = Vec::with_capacity(2 * grid.width.max(grid.height));

    // Walk one step per pixel plane of the driving axis. `drive`/`perp` are
    // the world coordinates of p1 along those axes.
    let x_driven = u.x.abs() >= u.y.abs();
    let (n_drive, n_perp, u_drive, u_perp, p_drive, p_perp) = if x_driven {
        (grid.width, grid.height, u.x, u.y, lor.p1.x, lor.p1.y)
    } else {
        (grid.height, grid.width, u.y, u.x, lor.p1.y, lor.p1.x)
    };
    let half_extent_drive = (n_drive as f64 - 1.0) / 2.0;
    let half_extent_perp = (n_perp as f64 - 1.0) / 2.0;
    let step_length = px / u_drive.abs();

    for i in 0..n_drive {
        let plane_world = (i as f64 - half_extent_drive) * px;
        let s_from_p1 = (plane_world - p_drive) / u_drive;
        if s_from_p1 < 0.0 || s_from_p1 > length {
            continue;
        }
        let eps = truncated_gaussian(s_from_p1 - length / 2.0 - tof_center, sigma);
        if eps == 0.0 {
            continue;
        }
        let perp_world = p_perp + s_from_p1 * u_perp;
        let perp_coord = perp_world / px + half_extent_perp;
        let lo = perp_coord.floor();
        let frac = perp_coord - lo;
        let lo = lo as i64;
        let mut push = |perp_idx: i64, w: f64| {
            if w > 0.0 && perp_idx >= 0 && perp_idx < n_perp as i64 {
                let (x, y) = if x_driven { (i, perp_idx as usize) } else { (perp_idx as usize, i) };
                entries.push((grid.index(x, y) as u32, w));
            }
        };
        push(lo, eps * (1.0 - frac) * step_length);
        push(lo + 1, eps * frac * step_length);
    }

    entries.sort_unstable_by_key(|&(j, _)| j);
    entries.dedup_by(|b, a| {
        if a.0 == b.0 {
            a.1 += b.1;
            true
        } else {
            false
        }
    });
    Ok(SparseRow { entries })
}

/// Sparse per-event projection operator: one row per list-mode event.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    pub grid: Grid,
    rows: Vec<SparseRow>,
}

impl ProjectionMatrix {
    pub fn n_events(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &SparseRow {
        &self.rows[i]
    }

    /// Assemble from precomputed rows (used by tests and by callers that
    /// stream rows from the geometry enumeration).
    pub fn from_rows(grid: Grid, rows: Vec<SparseRow>) -> Self {
        ProjectionMatrix { grid, rows }
    }
}

/// Build the projection matrix for `events`, one Joseph row per event,
/// in parallel. The result is identical for any worker count.
pub fn build_projection_matrix(
    cfg: &ScannerConfig,
    grid: Grid,
    events: &EventList,
) -> Result<ProjectionMatrix> {
    events.validate(cfg)?;
    let rows: Result<Vec<SparseRow>> = events
        .events
        .par_iter()
        .enumerate()
        .map(|(index, ev)| {
            let lor = Lor::new(cfg, ev.c1, ev.c2)
                .map_err(|e| Error::InvalidEvent { index, source: Box::new(e) })?;
            joseph_row(cfg, grid, &lor, ev.tof)
                .map_err(|e| Error::InvalidEvent { index, source: Box::new(e) })
        })
        .collect();
    Ok(ProjectionMatrix { grid, rows: rows? })
}

/// Forward projection `h = P f`: per-event dot products.
pub fn forward_project(matrix: &ProjectionMatrix, image: &Image2D) -> Result<Vec<f64>> {
    if image.grid != matrix.grid {
        return Err(Error::GridMismatch(format!(
            "matrix grid {:?} vs image grid {:?}",
            matrix.grid, image.grid
        )));
    }
    let values = image.values();
    Ok(matrix.rows.par_iter().map(|row| row.dot(values)).collect())
}

/// Back projection `f = P^T h`.
///
/// Exact adjoint of [`forward_project`]; the fixed-point accumulation makes
/// the output independent of event order and worker count, bit for bit.
pub fn back_project(matrix: &ProjectionMatrix, h: &[f64]) -> Result<Image2D> {
    if h.len() != matrix.rows.len() {
        return Err(Error::LengthMismatch(format!(
            "back_project expects {} values, got {}",
            matrix.rows.len(),
            h.len()
        )));
    }
    // |P_ij| <= step_length <= sqrt(2) * pixel_size bounds every contribution.
    let h_max = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !h_max.is_finite() {
        return Err(Error::Numeric("back_project input contains non-finite values".into()));
    }
    let bound = h_max * matrix.grid.pixel_size * std::f64::consts::SQRT_2;
    let mut accum = FixedPointImage::new(matrix.grid, bound);
    if bound > 0.0 {
        let partials: Vec<Vec<i128>> = matrix
            .rows
            .par_chunks(PAR_CHUNK)
            .zip(h.par_chunks(PAR_CHUNK))
            .map(|(rows, hs)| {
                let mut bins = vec![0i128; matrix.grid.n_pixels()];
                for (row, &hi) in rows.iter().zip(hs) {
                    if hi != 0.0 {
                        for &(j, w) in &row.entries {
                            bins[j as usize] += accum.quantize(w * hi);
                        }
                    }
                }
                bins
            })
            .collect();
        for partial in partials {
            accum.merge(&partial);
        }
    }
    Ok(accum.into_image())
}

/// Image accumulator in 2^-scaled 128-bit fixed point.
///
/// Every contribution is quantized once (independently of any other term) and
/// summed with exact integer arithmetic, so the final image is a function of
/// the contribution multiset only. `bound` must dominate every |contribution|.
pub(crate) struct FixedPointImage {
    grid: Grid,
    inv_quantum: f64,
    quantum: f64,
    bins: Vec<i128>,
}

impl FixedPointImage {
    pub(crate) fn new(grid: Grid, bound: f64) -> Self {
        // Quantum = 2^(e-70) where 2^e ~ bound: 70 fractional bits below the
        // largest term, exact power-of-two scaling either way.
        let exp = if bound > 0.0 && bound.is_finite() {
            (bound.log2().floor() as i32).clamp(-900, 970)
        } else {
            0
        };
        let qexp = (exp - 70) as f64;
        FixedPointImage {
            grid,
            inv_quantum: (-qexp).exp2(),
            quantum: qexp.exp2(),
            bins: vec![0i128; grid.n_pixels()],
        }
    }

    #[inline]
    pub(crate) fn quantize(&self, value: f64) -> i128 {
        (value * self.inv_quantum).round() as i128
    }

    #[inline]
    pub(crate) fn add(&mut self, j: usize, value: f64) {
        self.bins[j] += self.quantize(value);
    }

    pub(crate) fn merge(&mut self, other: &[i128]) {
        for (b, o) in self.bins.iter_mut().zip(other) {
            *b += o;
        }
    }

    pub(crate) fn into_image(self) -> Image2D {
        let values: Vec<f64> = self.bins.iter().map(|&b| b as f64 * self.quantum).collect();
        Image2D::from_values(self.grid, values).expect("accumulated image is finite")
    }
}

/// Dense float32 operator footprint in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorShape {
    /// Histogrammed data: `rad * view * tofbin` rows.
    Sinogram { n_rad: u64, n_view: u64, n_tof: u64, width: u64, height: u64 },
    /// List-mode data: one row per event.
    ListMode { n_events: u64, width: u64, height: u64 },
}

/// Bytes a dense float32 operator of the given shape would occupy.
pub fn estimate_memory(shape: OperatorShape) -> u64 {
    match shape {
        OperatorShape::Sinogram { n_rad, n_view, n_tof, width, height } => {
            n_rad * n_view * n_tof * width * height * 4
        }
        OperatorShape::ListMode { n_events, width, height } => n_events * width * height * 4,
    }
}
