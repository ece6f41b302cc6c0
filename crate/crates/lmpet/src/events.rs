//! List-mode event data and its on-disk format.
//!
//! File format (`.lmev`, little-endian): 16-byte header of magic `LMEV`,
//! `u32 version = 1`, `u32 n`, `u32 reserved = 0`, followed by `n` records of
//! `(u32 c1, u32 c2, u32 tof_bin)`.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{CrystalIndex, ScannerConfig, TofBin};

const MAGIC: &[u8; 4] = b"LMEV";
const VERSION: u32 = 1;

/// One coincidence: a crystal pair plus the TOF bin it fell in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub c1: CrystalIndex,
    pub c2: CrystalIndex,
    pub tof: TofBin,
}

impl Event {
    pub fn validate(&self, cfg: &ScannerConfig) -> Result<()> {
        CrystalIndex::checked(cfg, self.c1.0)?;
        CrystalIndex::checked(cfg, self.c2.0)?;
        TofBin::checked(cfg, self.tof.0)?;
        if self.c1 == self.c2 {
            return Err(Error::DegenerateLor(self.c1.0));
        }
        Ok(())
    }
}

/// Ordered list-mode data; event order is significant and preserved.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventList {
    pub events: Vec<Event>,
}

impl EventList {
    pub fn new(events: Vec<Event>) -> Self {
        EventList { events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Check every event against the scanner; the error names the first
    /// offending index.
    pub fn validate(&self, cfg: &ScannerConfig) -> Result<()> {
        for (index, ev) in self.events.iter().enumerate() {
            ev.validate(cfg)
                .map_err(|e| Error::InvalidEvent { index, source: Box::new(e) })?;
        }
        Ok(())
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(16 + self.events.len() * 12);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.events.len() as u32).to_le_bytes());
        buf.extend_from_slice(&0u32.to_le_bytes());
        for ev in &self.events {
            buf.extend_from_slice(&ev.c1.0.to_le_bytes());
            buf.extend_from_slice(&ev.c2.0.to_le_bytes());
            buf.extend_from_slice(&ev.tof.0.to_le_bytes());
        }
        crate::image::atomic_write(path, &buf)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut header = [0u8; 16];
        file.read_exact(&mut header).map_err(|e| Error::io(path, e))?;
        if &header[0..4] != MAGIC {
            return Err(Error::format(path, "bad magic, expected LMEV"));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::format(path, format!("unsupported version {}", version)));
        }
        let n = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let mut data = vec![0u8; n * 12];
        file.read_exact(&mut data).map_err(|e| Error::io(path, e))?;
        let events = data
            .chunks_exact(12)
            .map(|rec| Event {
                c1: CrystalIndex(u32::from_le_bytes(rec[0..4].try_into().unwrap())),
                c2: CrystalIndex(u32::from_le_bytes(rec[4..8].try_into().unwrap())),
                tof: TofBin(u32::from_le_bytes(rec[8..12].try_into().unwrap())),
            })
            .collect();
        Ok(EventList { events })
    }

    /// Uniformly random valid events; handy for benchmarks and property tests.
    pub fn random(cfg: &ScannerConfig, n: usize, seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n_c = cfg.n_crystals();
        let events = (0..n)
            .map(|_| {
                let c1 = rng.gen_range(0..n_c);
                let mut c2 = rng.gen_range(0..n_c - 1);
                if c2 >= c1 {
                    c2 += 1;
                }
                Event {
                    c1: CrystalIndex(c1),
                    c2: CrystalIndex(c2),
                    tof: TofBin(rng.gen_range(0..cfg.n_tof_bins)),
                }
            })
            .collect();
        EventList { events }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_order_and_bits() {
        let cfg = ScannerConfig::desk_default();
        let list = EventList::random(&cfg, 257, 42);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.lmev");
        list.write_file(&path).unwrap();
        let back = EventList::read_file(&path).unwrap();
        assert_eq!(back, list);
        back.validate(&cfg).unwrap();
    }

    #[test]
    fn header_is_16_bytes_and_versioned() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.lmev");
        EventList::default().write_file(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 16);
        assert_eq!(&bytes[0..4], b"LMEV");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);

        let mut bad = bytes.clone();
        bad[4] = 9;
        std::fs::write(&path, &bad).unwrap();
        assert!(EventList::read_file(&path).is_err());
    }

    #[test]
    fn validate_names_offending_index() {
        let cfg = ScannerConfig::desk_default();
        let mut list = EventList::random(&cfg, 5, 7);
        list.events[3].tof = TofBin(99);
        match list.validate(&cfg) {
            Err(Error::InvalidEvent { index, .. }) => assert_eq!(index, 3),
            other => panic!("expected InvalidEvent, got {:?}", other),
        }
    }
}
