//! Scanner geometry: crystal ring, lines of response, TOF binning.
//!
//! The scanner is a single 2D ring of point crystals at the arc centers of a
//! uniform tiling. Every other module consumes LOR endpoints and TOF-bin
//! centers from here.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Millimetres per picosecond of photon flight.
pub const SPEED_OF_LIGHT_MM_PER_PS: f64 = 0.2998;

/// A 2D point or vector in scanner coordinates (mm), origin at ring center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn sub(self, other: Point2) -> Point2 {
        Point2::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(self, other: Point2) -> Point2 {
        Point2::new(self.x + other.x, self.y + other.y)
    }

    pub fn scale(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Cylindrical 2D scanner description.
///
/// `ring_radius` defaults to the radius at which the crystals exactly tile
/// the circumference: `N_c * crystal_pitch / (2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScannerConfig {
    pub n_modules: u32,
    pub crystals_per_module: u32,
    /// Crystal pitch along the ring arc (mm).
    pub crystal_pitch: f64,
    /// Ring radius (mm).
    pub ring_radius: f64,
    /// Number of TOF bins per LOR; must be odd so a centered bin exists.
    pub n_tof_bins: u32,
    /// Length of one TOF bin along the LOR (mm).
    pub tof_bin_length: f64,
    /// Coincidence timing resolution FWHM (ps).
    pub tof_resolution: f64,
}

impl ScannerConfig {
    /// Build a config with the default (circumference-tiling) ring radius.
    pub fn new(
        n_modules: u32,
        crystals_per_module: u32,
        crystal_pitch: f64,
        n_tof_bins: u32,
        tof_bin_length: f64,
        tof_resolution: f64,
    ) -> Result<Self> {
        let n_c = n_modules as f64 * crystals_per_module as f64;
        let cfg = ScannerConfig {
            n_modules,
            crystals_per_module,
            crystal_pitch,
            ring_radius: n_c * crystal_pitch / (2.0 * PI),
            n_tof_bins,
            tof_bin_length,
            tof_resolution,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Small scanner used throughout the test suite: 8 modules of 8 crystals,
    /// 4 mm pitch, 9 TOF bins of 15 mm, 400 ps timing.
    pub fn desk_default() -> Self {
        ScannerConfig::new(8, 8, 4.0, 9, 15.0, 400.0).expect("desk default config is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_modules < 1 || self.crystals_per_module < 1 {
            return fail("n_modules and crystals_per_module must be >= 1".into());
        }
        if self.n_crystals() < 8 {
            return fail(format!("total crystal count {} < 8", self.n_crystals()));
        }
        if self.n_tof_bins % 2 == 0 || self.n_tof_bins == 0 {
            return fail(format!("n_tof_bins = {} must be odd", self.n_tof_bins));
        }
        if !(self.tof_bin_length > 0.0) {
            return fail(format!("tof_bin_length = {} must be > 0", self.tof_bin_length));
        }
        if !(self.tof_resolution > 0.0) {
            return fail(format!("tof_resolution = {} must be > 0", self.tof_resolution));
        }
        if !(self.ring_radius > 0.0) {
            return fail(format!("ring_radius = {} must be > 0", self.ring_radius));
        }
        if !(self.crystal_pitch > 0.0) {
            return fail(format!("crystal_pitch = {} must be > 0", self.crystal_pitch));
        }
        Ok(())
    }

    pub fn n_crystals(&self) -> u32 {
        self.n_modules * self.crystals_per_module
    }

    /// Index of the TOF bin centered on the LOR midpoint.
    pub fn center_tof_bin(&self) -> u32 {
        (self.n_tof_bins - 1) / 2
    }

    /// Load from a flat `key = value` text file. Unknown keys are rejected;
    /// `ring_radius` may be omitted to get the tiling default.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut fields: std::collections::HashMap<&str, f64> = std::collections::HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::format(path, format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            let value: f64 = value.trim().parse().map_err(|_| {
                Error::format(path, format!("line {}: bad numeric value for `{}`", lineno + 1, key))
            })?;
            if fields.insert(key, value).is_some() {
                return Err(Error::format(path, format!("duplicate key `{}`", key)));
            }
        }
        let take_count = |fields: &std::collections::HashMap<&str, f64>, key: &str| -> Result<u32> {
            let v = *fields
                .get(key)
                .ok_or_else(|| Error::format(path, format!("missing key `{}`", key)))?;
            if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
                return Err(Error::format(path, format!("`{}` must be a nonnegative integer", key)));
            }
            Ok(v as u32)
        };
        let take_len = |fields: &std::collections::HashMap<&str, f64>, key: &str| -> Result<f64> {
            fields
                .get(key)
                .copied()
                .ok_or_else(|| Error::format(path, format!("missing key `{}`", key)))
        };
        let known = [
            "n_modules",
            "crystals_per_module",
            "crystal_pitch",
            "ring_radius",
            "n_tof_bins",
            "tof_bin_length",
            "tof_resolution",
        ];
        for key in fields.keys() {
            if !known.contains(key) {
                return Err(Error::format(path, format!("unknown key `{}`", key)));
            }
        }
        let mut cfg = ScannerConfig::new(
            take_count(&fields, "n_modules")?,
            take_count(&fields, "crystals_per_module")?,
            take_len(&fields, "crystal_pitch")?,
            take_count(&fields, "n_tof_bins")?,
            take_len(&fields, "tof_bin_length")?,
            take_len(&fields, "tof_resolution")?,
        )?;
        if let Some(&r) = fields.get("ring_radius") {
            cfg.ring_radius = r;
            cfg.validate()?;
        }
        Ok(cfg)
    }

    /// Serialize in the same flat `key = value` format accepted by [`ScannerConfig::load`].
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n_modules = {}", self.n_modules);
        let _ = writeln!(s, "crystals_per_module = {}", self.crystals_per_module);
        let _ = writeln!(s, "crystal_pitch = {}", self.crystal_pitch);
        let _ = writeln!(s, "ring_radius = {}", self.ring_radius);
        let _ = writeln!(s, "n_tof_bins = {}", self.n_tof_bins);
        let _ = writeln!(s, "tof_bin_length = {}", self.tof_bin_length);
        let _ = writeln!(s, "tof_resolution = {}", self.tof_resolution);
        s
    }

    /// Stable hash of the geometry fields, used to key cached artifacts.
    pub fn fingerprint(&self) -> u64 {
        let mut h = crate::fnv1a_init();
        for v in [
            self.n_modules as u64,
            self.crystals_per_module as u64,
            self.crystal_pitch.to_bits(),
            self.ring_radius.to_bits(),
            self.n_tof_bins as u64,
            self.tof_bin_length.to_bits(),
            self.tof_resolution.to_bits(),
        ] {
            h = crate::fnv1a_add(h, v);
        }
        h
    }
}

/// Index of one crystal in `[0, N_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CrystalIndex(pub u32);

impl CrystalIndex {
    pub fn checked(cfg: &ScannerConfig, index: u32) -> Result<Self> {
        if index >= cfg.n_crystals() {
            return Err(Error::CrystalOutOfRange { index, n_crystals: cfg.n_crystals() });
        }
        Ok(CrystalIndex(index))
    }
}

/// Index of one TOF bin in `[0, n_tof_bins)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TofBin(pub u32);

impl TofBin {
    pub fn checked(cfg: &ScannerConfig, bin: u32) -> Result<Self> {
        if bin >= cfg.n_tof_bins {
            return Err(Error::TofBinOutOfRange { bin, n_bins: cfg.n_tof_bins });
        }
        Ok(TofBin(bin))
    }

    /// Signed offset of this bin's center from the LOR midpoint (mm),
    /// positive toward the second crystal.
    pub fn center_offset(self, cfg: &ScannerConfig) -> f64 {
        (self.0 as f64 - cfg.center_tof_bin() as f64) * cfg.tof_bin_length
    }
}

/// Position of a crystal center on the ring.
///
/// Crystals sit at arc centers: angle `2π (c + 0.5) / N_c`.
pub fn crystal_position(cfg: &ScannerConfig, c: CrystalIndex) -> Result<Point2> {
    if c.0 >= cfg.n_crystals() {
        return Err(Error::CrystalOutOfRange { index: c.0, n_crystals: cfg.n_crystals() });
    }
    let phi = 2.0 * PI * (c.0 as f64 + 0.5) / cfg.n_crystals() as f64;
    Ok(Point2::new(cfg.ring_radius * phi.cos(), cfg.ring_radius * phi.sin()))
}

/// A line of response between two distinct crystals, with cached endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lor {
    pub c1: CrystalIndex,
    pub c2: CrystalIndex,
    pub p1: Point2,
    pub p2: Point2,
}

impl Lor {
    pub fn new(cfg: &ScannerConfig, c1: CrystalIndex, c2: CrystalIndex) -> Result<Self> {
        if c1 == c2 {
            return Err(Error::DegenerateLor(c1.0));
        }
        Ok(Lor { c1, c2, p1: crystal_position(cfg, c1)?, p2: crystal_position(cfg, c2)? })
    }

    pub fn length(&self) -> f64 {
        self.p2.sub(self.p1).norm()
    }

    pub fn midpoint(&self) -> Point2 {
        self.p1.add(self.p2).scale(0.5)
    }

    /// Unit vector from the `c1` endpoint toward the `c2` endpoint.
    pub fn direction(&self) -> Point2 {
        let d = self.p2.sub(self.p1);
        d.scale(1.0 / d.norm())
    }
}

/// Point on the LOR at the center of TOF bin `t`.
///
/// The centered bin sits on the LOR midpoint; offsets grow toward the `c2`
/// endpoint.
pub fn tof_bin_center(cfg: &ScannerConfig, lor: &Lor, t: TofBin) -> Result<Point2> {
    if t.0 >= cfg.n_tof_bins {
        return Err(Error::TofBinOutOfRange { bin: t.0, n_bins: cfg.n_tof_bins });
    }
    let offset = t.center_offset(cfg);
    Ok(lor.midpoint().add(lor.direction().scale(offset)))
}

/// Deterministic, duplicate-free enumeration of every unordered crystal pair
/// crossed with every TOF bin. Yields `C(N_c, 2) * n_tof_bins` items.
pub fn all_lor_tof_pairs(cfg: &ScannerConfig) -> impl Iterator<Item = (Lor, TofBin)> + '_ {
    let n_c = cfg.n_crystals();
    (0..n_c).flat_map(move |c1| {
        (c1 + 1..n_c).flat_map(move |c2| {
            (0..cfg.n_tof_bins).map(move |t| {
                let lor = Lor::new(cfg, CrystalIndex(c1), CrystalIndex(c2))
                    .expect("enumerated pair is valid");
                (lor, TofBin(t))
            })
        })
    })
}

/// Number of items `all_lor_tof_pairs` yields, without enumerating.
pub fn lor_tof_pair_count(cfg: &ScannerConfig) -> u64 {
    let n = cfg.n_crystals() as u64;
    n * (n - 1) / 2 * cfg.n_tof_bins as u64
}
