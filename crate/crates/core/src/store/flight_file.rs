//! Binary flight-path file, all little-endian:
//!
//! ```text
//! "FLSP" | version u16 | fps f64 | fls_count u32
//!   per FLS:     segment_count u32
//!   per segment: interval_count u32, (start f64, end f64)*, l h d f64, r g b a u8
//! ```
//!
//! Colors are stored as `round(channel * 255)`.

use std::path::Path;

use super::StoreError;
use crate::geom::{ColorRGBA, Coordinate};
use crate::pathgen::{FlightPathSet, FlightSegment};

pub const FLIGHT_MAGIC: [u8; 4] = *b"FLSP";
pub const FLIGHT_VERSION: u16 = 1;

// smallest encodings, used to reject absurd counts before allocating
const MIN_FLS_BYTES: usize = 4;
const MIN_SEGMENT_BYTES: usize = 4 + 24 + 4;
const INTERVAL_BYTES: usize = 16;

pub fn quantize(channel: f64) -> u8 {
    (channel.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn encode_flight_paths(paths: &FlightPathSet) -> Result<Vec<u8>, StoreError> {
    if !paths.is_well_formed() {
        return Err(StoreError::InvalidFlightPaths(
            "fps must be > 0 and intervals sorted, non-empty and disjoint".into(),
        ));
    }
    let count =
        |n: usize, what: &str| u32::try_from(n).map_err(|_| StoreError::InvalidFlightPaths(format!("too many {what}")));
    let mut out = Vec::new();
    out.extend_from_slice(&FLIGHT_MAGIC);
    out.extend_from_slice(&FLIGHT_VERSION.to_le_bytes());
    out.extend_from_slice(&paths.fps.to_le_bytes());
    out.extend_from_slice(&count(paths.paths.len(), "FLSs")?.to_le_bytes());
    for segs in &paths.paths {
        out.extend_from_slice(&count(segs.len(), "segments")?.to_le_bytes());
        for seg in segs {
            out.extend_from_slice(&count(seg.intervals.len(), "intervals")?.to_le_bytes());
            for &(s, e) in &seg.intervals {
                out.extend_from_slice(&s.to_le_bytes());
                out.extend_from_slice(&e.to_le_bytes());
            }
            for v in [seg.coord.l, seg.coord.h, seg.coord.d] {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out.extend(seg.color.channels().map(quantize));
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], StoreError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(StoreError::TruncatedFile {
            offset: self.bytes.len(),
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], StoreError> {
        Ok(self.take(N)?.try_into().expect("take returns N bytes"))
    }

    fn u16(&mut self) -> Result<u16, StoreError> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32, StoreError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64, StoreError> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    /// Reads a count of items that each need at least `min` bytes.
    fn count(&mut self, min: usize) -> Result<usize, StoreError> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min) > self.remaining() {
            return Err(StoreError::TruncatedFile {
                offset: self.bytes.len(),
            });
        }
        Ok(n)
    }

    fn invalid(&self, at: usize, reason: &str) -> StoreError {
        StoreError::InvalidFlightData {
            offset: at,
            reason: reason.into(),
        }
    }
}

pub fn decode_flight_paths(bytes: &[u8]) -> Result<FlightPathSet, StoreError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic: [u8; 4] = r.array()?;
    if magic != FLIGHT_MAGIC {
        return Err(StoreError::BadMagic(magic));
    }
    let version = r.u16()?;
    if version != FLIGHT_VERSION {
        return Err(StoreError::VersionUnsupported(version));
    }
    let at = r.pos;
    let fps = r.f64()?;
    if !(fps.is_finite() && fps > 0.0) {
        return Err(r.invalid(at, "fps must be finite and > 0"));
    }
    let fls_count = r.count(MIN_FLS_BYTES)?;
    let mut paths = Vec::with_capacity(fls_count);
    for _ in 0..fls_count {
        let seg_count = r.count(MIN_SEGMENT_BYTES)?;
        let mut segs = Vec::with_capacity(seg_count);
        for _ in 0..seg_count {
            let n = r.count(INTERVAL_BYTES)?;
            let mut intervals = Vec::with_capacity(n);
            let mut last_end = f64::NEG_INFINITY;
            for _ in 0..n {
                let at = r.pos;
                let (s, e) = (r.f64()?, r.f64()?);
                if !(s.is_finite() && e.is_finite() && s < e && s >= last_end) {
                    return Err(r.invalid(at, "interval is empty, non-finite or out of order"));
                }
                last_end = e;
                intervals.push((s, e));
            }
            if intervals.is_empty() {
                return Err(r.invalid(r.pos, "segment without intervals"));
            }
            let coord = Coordinate::new(r.f64()?, r.f64()?, r.f64()?);
            let [cr, cg, cb, ca] = r.array::<4>()?.map(|b| b as f64 / 255.0);
            segs.push(FlightSegment {
                intervals,
                coord,
                color: ColorRGBA::new(cr, cg, cb, ca),
            });
        }
        paths.push(segs);
    }
    if r.remaining() > 0 {
        return Err(StoreError::TrailingBytes { offset: r.pos });
    }
    Ok(FlightPathSet {
        fps,
        fls_spec: None,
        paths,
    })
}

pub fn write_flight_paths(paths: &FlightPathSet, path: impl AsRef<Path>) -> Result<(), StoreError> {
    let path = path.as_ref();
    let bytes = encode_flight_paths(paths)?;
    std::fs::write(path, bytes).map_err(|e| StoreError::io(path, e))
}

pub fn read_flight_paths(path: impl AsRef<Path>) -> Result<FlightPathSet, StoreError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| StoreError::io(path, e))?;
    decode_flight_paths(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> FlightPathSet {
        FlightPathSet {
            fps: 24.0,
            fls_spec: None,
            paths: vec![vec![FlightSegment {
                intervals: vec![(0.0, 1.0 / 24.0)],
                coord: Coordinate::new(1.0, 2.0, 3.0),
                color: ColorRGBA::new(1.0, 0.0, 51.0 / 255.0, 1.0),
            }]],
        }
    }

    #[test]
    fn single_interval_file_is_70_bytes() {
        let bytes = encode_flight_paths(&one()).unwrap();
        assert_eq!(bytes.len(), 70);
        assert_eq!(&bytes[..4], b"FLSP");
        assert_eq!(&bytes[66..], &[255, 0, 51, 255]);
    }

    #[test]
    fn round_trip_is_a_fixed_point() {
        let bytes = encode_flight_paths(&one()).unwrap();
        let back = decode_flight_paths(&bytes).unwrap();
        assert_eq!(back, one());
        assert_eq!(encode_flight_paths(&back).unwrap(), bytes);
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = encode_flight_paths(&one()).unwrap();
        bytes[0] = b'X';
        assert!(matches!(decode_flight_paths(&bytes), Err(StoreError::BadMagic(m)) if &m == b"XLSP"));
        let mut bytes = encode_flight_paths(&one()).unwrap();
        bytes[4] = 9;
        assert!(matches!(
            decode_flight_paths(&bytes),
            Err(StoreError::VersionUnsupported(9))
        ));
    }

    #[test]
    fn every_truncation_is_reported() {
        let bytes = encode_flight_paths(&one()).unwrap();
        for n in 0..bytes.len() {
            let err = decode_flight_paths(&bytes[..n]).unwrap_err();
            assert!(matches!(err, StoreError::TruncatedFile { .. }), "{n}: {err}");
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(
            decode_flight_paths(&long),
            Err(StoreError::TrailingBytes { offset: 70 })
        ));
    }

    #[test]
    fn huge_counts_do_not_allocate() {
        let mut bytes = encode_flight_paths(&one()).unwrap();
        bytes[14..18].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(matches!(
            decode_flight_paths(&bytes),
            Err(StoreError::TruncatedFile { .. })
        ));
    }

    #[test]
    fn malformed_sets_are_not_written() {
        let mut p = one();
        p.paths[0][0].intervals = vec![(1.0, 0.5)];
        assert!(matches!(
            encode_flight_paths(&p),
            Err(StoreError::InvalidFlightPaths(_))
        ));
    }
}
