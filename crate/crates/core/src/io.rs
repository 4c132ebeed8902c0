//! Binary field files with a fixed little-endian layout and a CRC-32
//! payload checksum.
//!
//! Layout:
//!
//! ```text
//! offset  size  content
//!      0     8  magic "LQFIELD\0"
//!      8     4  format version (u32)
//!     12     1  kind: 0 gauge, 1 spinor
//!     13     1  precision: 0 single, 1 double
//!     14     1  compression flag: 0 full links, 1 compressed links
//!     15     1  reserved, must be 0
//!     16    16  extents t, x, y, z (u32 each)
//!     32     8  payload length in bytes (u64)
//!     40     4  CRC-32 of the payload
//!     44     -  payload
//! ```
//!
//! Spinor payloads hold 24 reals per site (spin-major, then color, real part
//! before imaginary). Full gauge payloads hold 4 links per site (axis-major,
//! row-major entries, 18 reals each). Compressed gauge payloads prefix every
//! link with one flag byte, 0 for a 10-real compressed record and 1 for an
//! 18-real raw fallback, so pivot-rejected links survive a round trip
//! bitwise. All words are IEEE little-endian at the field's precision, which
//! makes saved files byte-identical across platforms for the same field.
//!
//! Loading re-verifies what can be verified: the checksum guards every byte,
//! and gauge links are checked against the special-unitarity tolerance of
//! the stored precision before a field is handed back.

use std::fmt;
use std::fs;
use std::path::Path;

use num_complex::Complex;
use thiserror::Error;

use crate::algebra::{ColorMatrix, Cplx, Precision, Real, Spinor};
use crate::fields::{CompressedGaugeField, FieldError, GaugeField, SpinorField};
use crate::geometry::{GeometryError, LatticeDims};
use crate::su3::{self, CompressedLink, StoredLink};

const MAGIC: [u8; 8] = *b"LQFIELD\0";

/// Bumped whenever the layout changes; loaders refuse anything else.
pub const FORMAT_VERSION: u32 = 1;

/// Header size in bytes; the payload starts right after.
pub const HEADER_BYTES: usize = 44;

const FLAG_COMPRESSED_LINK: u8 = 0;
const FLAG_RAW_LINK: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Gauge,
    Spinor,
}

impl FieldKind {
    fn code(self) -> u8 {
        match self {
            FieldKind::Gauge => 0,
            FieldKind::Spinor => 1,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(FieldKind::Gauge),
            1 => Some(FieldKind::Spinor),
            _ => None,
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldKind::Gauge => "gauge",
            FieldKind::Spinor => "spinor",
        })
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a field file (bad magic)")]
    BadMagic,
    #[error("unsupported format version {got}, this build reads version {want}")]
    UnsupportedVersion { got: u32, want: u32 },
    #[error("corrupt header: {0}")]
    BadHeader(String),
    #[error("file holds a {got} field, expected {want}")]
    KindMismatch { want: FieldKind, got: FieldKind },
    #[error("file precision is {got}, expected {want}")]
    PrecisionMismatch { want: Precision, got: Precision },
    #[error("file compression flag is {got}, expected {want}")]
    CompressionMismatch { want: bool, got: bool },
    #[error("payload is {got} bytes, header says {want}")]
    Truncated { want: u64, got: u64 },
    #[error("payload checksum {got:#010x} does not match recorded {want:#010x}")]
    ChecksumMismatch { want: u32, got: u32 },
    #[error("payload ended in the middle of a record")]
    ShortPayload,
    #[error("payload has {0} trailing bytes after the last record")]
    TrailingBytes(usize),
    #[error("unknown link flag byte {0}")]
    BadLinkFlag(u8),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Everything the fixed-size header records about a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldFileHeader {
    pub version: u32,
    pub kind: FieldKind,
    pub precision: Precision,
    pub compressed: bool,
    pub extents: [u32; 4],
    pub payload_len: u64,
    pub checksum: u32,
}

impl FieldFileHeader {
    pub fn geometry(&self) -> Result<LatticeDims, GeometryError> {
        let [t, x, y, z] = self.extents;
        LatticeDims::new(t as usize, x as usize, y as usize, z as usize)
    }

    fn encode(&self) -> [u8; HEADER_BYTES] {
        let mut out = [0u8; HEADER_BYTES];
        out[0..8].copy_from_slice(&MAGIC);
        out[8..12].copy_from_slice(&self.version.to_le_bytes());
        out[12] = self.kind.code();
        out[13] = match self.precision {
            Precision::Single => 0,
            Precision::Double => 1,
        };
        out[14] = self.compressed as u8;
        out[15] = 0;
        for (i, e) in self.extents.iter().enumerate() {
            out[16 + 4 * i..20 + 4 * i].copy_from_slice(&e.to_le_bytes());
        }
        out[32..40].copy_from_slice(&self.payload_len.to_le_bytes());
        out[40..44].copy_from_slice(&self.checksum.to_le_bytes());
        out
    }

    fn decode(bytes: &[u8]) -> Result<Self, IoError> {
        if bytes.len() < HEADER_BYTES {
            return Err(IoError::BadHeader(format!(
                "file is {} bytes, shorter than the {HEADER_BYTES}-byte header",
                bytes.len()
            )));
        }
        if bytes[0..8] != MAGIC {
            return Err(IoError::BadMagic);
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(IoError::UnsupportedVersion {
                got: version,
                want: FORMAT_VERSION,
            });
        }
        let kind = FieldKind::from_code(bytes[12])
            .ok_or_else(|| IoError::BadHeader(format!("unknown kind byte {}", bytes[12])))?;
        let precision = match bytes[13] {
            0 => Precision::Single,
            1 => Precision::Double,
            other => {
                return Err(IoError::BadHeader(format!(
                    "unknown precision byte {other}"
                )))
            }
        };
        let compressed = match bytes[14] {
            0 => false,
            1 => true,
            other => {
                return Err(IoError::BadHeader(format!(
                    "unknown compression byte {other}"
                )))
            }
        };
        if bytes[15] != 0 {
            return Err(IoError::BadHeader(format!(
                "reserved byte is {}, expected 0",
                bytes[15]
            )));
        }
        let mut extents = [0u32; 4];
        for (i, e) in extents.iter_mut().enumerate() {
            *e = u32::from_le_bytes(bytes[16 + 4 * i..20 + 4 * i].try_into().expect("4 bytes"));
        }
        let payload_len = u64::from_le_bytes(bytes[32..40].try_into().expect("8 bytes"));
        let checksum = u32::from_le_bytes(bytes[40..44].try_into().expect("4 bytes"));
        Ok(FieldFileHeader {
            version,
            kind,
            precision,
            compressed,
            extents,
            payload_len,
            checksum,
        })
    }
}

/// Reads and validates just the header, for dispatching typed loads.
pub fn read_header(path: impl AsRef<Path>) -> Result<FieldFileHeader, IoError> {
    let bytes = fs::read(path)?;
    FieldFileHeader::decode(&bytes)
}

fn header_for(geom: LatticeDims, kind: FieldKind, precision: Precision, compressed: bool) -> FieldFileHeader {
    let e = geom.extents();
    FieldFileHeader {
        version: FORMAT_VERSION,
        kind,
        precision,
        compressed,
        extents: [e[0] as u32, e[1] as u32, e[2] as u32, e[3] as u32],
        payload_len: 0,
        checksum: 0,
    }
}

fn write_file(path: impl AsRef<Path>, mut header: FieldFileHeader, payload: Vec<u8>) -> Result<(), IoError> {
    header.payload_len = payload.len() as u64;
    header.checksum = crc32fast::hash(&payload);
    let mut bytes = Vec::with_capacity(HEADER_BYTES + payload.len());
    bytes.extend_from_slice(&header.encode());
    bytes.extend_from_slice(&payload);
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a file, checks magic, version, checksum and the expected kind,
/// precision and compression flag, and returns header plus payload.
fn read_checked<R: Real>(
    path: impl AsRef<Path>,
    kind: FieldKind,
    compressed: bool,
) -> Result<(FieldFileHeader, Vec<u8>), IoError> {
    let mut bytes = fs::read(path)?;
    let header = FieldFileHeader::decode(&bytes)?;
    let payload = bytes.split_off(HEADER_BYTES);
    if payload.len() as u64 != header.payload_len {
        return Err(IoError::Truncated {
            want: header.payload_len,
            got: payload.len() as u64,
        });
    }
    let got = crc32fast::hash(&payload);
    if got != header.checksum {
        return Err(IoError::ChecksumMismatch {
            want: header.checksum,
            got,
        });
    }
    if header.kind != kind {
        return Err(IoError::KindMismatch {
            want: kind,
            got: header.kind,
        });
    }
    if header.precision != R::PRECISION {
        return Err(IoError::PrecisionMismatch {
            want: R::PRECISION,
            got: header.precision,
        });
    }
    if header.compressed != compressed {
        return Err(IoError::CompressionMismatch {
            want: compressed,
            got: header.compressed,
        });
    }
    Ok((header, payload))
}

fn put_cplx<R: Real>(z: Cplx<R>, out: &mut Vec<u8>) {
    z.re.put_le(out);
    z.im.put_le(out);
}

fn take_cplx<R: Real>(bytes: &[u8], pos: &mut usize) -> Result<Cplx<R>, IoError> {
    let re = R::take_le(bytes, pos).ok_or(IoError::ShortPayload)?;
    let im = R::take_le(bytes, pos).ok_or(IoError::ShortPayload)?;
    Ok(Complex::new(re, im))
}

fn take_matrix<R: Real>(bytes: &[u8], pos: &mut usize) -> Result<ColorMatrix<R>, IoError> {
    let mut m = ColorMatrix::zero();
    for row in 0..3 {
        for col in 0..3 {
            m.0[row][col] = take_cplx(bytes, pos)?;
        }
    }
    Ok(m)
}

fn finish_payload(bytes: &[u8], pos: usize) -> Result<(), IoError> {
    if pos != bytes.len() {
        return Err(IoError::TrailingBytes(bytes.len() - pos));
    }
    Ok(())
}

pub fn save_spinor<R: Real>(field: &SpinorField<R>, path: impl AsRef<Path>) -> Result<(), IoError> {
    let geom = field.geometry();
    let mut payload = Vec::with_capacity(geom.volume() * 24 * R::PRECISION.word_bytes());
    for s in field.as_slice() {
        for cv in &s.0 {
            for z in &cv.0 {
                put_cplx(*z, &mut payload);
            }
        }
    }
    write_file(path, header_for(geom, FieldKind::Spinor, R::PRECISION, false), payload)
}

pub fn load_spinor<R: Real>(path: impl AsRef<Path>) -> Result<SpinorField<R>, IoError> {
    let (header, payload) = read_checked::<R>(path, FieldKind::Spinor, false)?;
    let geom = header.geometry()?;
    let mut pos = 0;
    let mut data = Vec::with_capacity(geom.volume());
    for _ in 0..geom.volume() {
        let mut s = Spinor::zero();
        for cv in &mut s.0 {
            for z in &mut cv.0 {
                *z = take_cplx(&payload, &mut pos)?;
            }
        }
        data.push(s);
    }
    finish_payload(&payload, pos)?;
    Ok(SpinorField::from_vec(geom, data)?)
}

pub fn save_gauge<R: Real>(field: &GaugeField<R>, path: impl AsRef<Path>) -> Result<(), IoError> {
    let geom = field.geometry();
    let mut payload = Vec::with_capacity(geom.volume() * 4 * 18 * R::PRECISION.word_bytes());
    for u in field.links() {
        for row in &u.0 {
            for z in row {
                put_cplx(*z, &mut payload);
            }
        }
    }
    write_file(path, header_for(geom, FieldKind::Gauge, R::PRECISION, false), payload)
}

/// Loads a full gauge field; every link is re-checked against the
/// special-unitarity tolerance of `R`.
pub fn load_gauge<R: Real>(path: impl AsRef<Path>) -> Result<GaugeField<R>, IoError> {
    let (header, payload) = read_checked::<R>(path, FieldKind::Gauge, false)?;
    let geom = header.geometry()?;
    let mut pos = 0;
    let mut links = Vec::with_capacity(geom.volume() * 4);
    for _ in 0..geom.volume() * 4 {
        links.push(take_matrix(&payload, &mut pos)?);
    }
    finish_payload(&payload, pos)?;
    Ok(GaugeField::from_links(geom, links)?)
}

pub fn save_gauge_compressed<R: Real>(
    field: &CompressedGaugeField<R>,
    path: impl AsRef<Path>,
) -> Result<(), IoError> {
    let geom = field.geometry();
    let mut payload = Vec::new();
    for link in field.stored_links() {
        match link {
            StoredLink::Compressed(c) => {
                payload.push(FLAG_COMPRESSED_LINK);
                for w in c.to_words() {
                    w.put_le(&mut payload);
                }
            }
            StoredLink::Raw(u) => {
                payload.push(FLAG_RAW_LINK);
                for row in &u.0 {
                    for z in row {
                        put_cplx(*z, &mut payload);
                    }
                }
            }
        }
    }
    write_file(path, header_for(geom, FieldKind::Gauge, R::PRECISION, true), payload)
}

/// Loads a compressed gauge field. Stored records round-trip bitwise; on top
/// of the checksum, every link is unpacked once and its reconstruction is
/// re-checked against the special-unitarity tolerance of `R`.
pub fn load_gauge_compressed<R: Real>(
    path: impl AsRef<Path>,
) -> Result<CompressedGaugeField<R>, IoError> {
    let (header, payload) = read_checked::<R>(path, FieldKind::Gauge, true)?;
    let geom = header.geometry()?;
    let mut pos = 0;
    let mut links = Vec::with_capacity(geom.volume() * 4);
    for _ in 0..geom.volume() * 4 {
        let flag = *payload.get(pos).ok_or(IoError::ShortPayload)?;
        pos += 1;
        let link = match flag {
            FLAG_COMPRESSED_LINK => {
                let mut words = [R::zero(); 10];
                for w in &mut words {
                    *w = R::take_le(&payload, &mut pos).ok_or(IoError::ShortPayload)?;
                }
                StoredLink::Compressed(CompressedLink::from_words(words))
            }
            FLAG_RAW_LINK => StoredLink::Raw(take_matrix(&payload, &mut pos)?),
            other => return Err(IoError::BadLinkFlag(other)),
        };
        links.push(link);
    }
    finish_payload(&payload, pos)?;
    let tol = su3::su3_tolerance(R::PRECISION);
    for (idx, link) in links.iter().enumerate() {
        let u = link.unpack();
        let defect = u.unitarity_defect().max(u.det_defect());
        // Negated so NaN defects from corrupt words fail too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(defect <= tol) {
            return Err(IoError::Field(FieldError::BadLink {
                site: idx / 4,
                axis: idx % 4,
                source: su3::Su3Error::NotSpecialUnitary { defect, tol },
            }));
        }
    }
    Ok(CompressedGaugeField::from_stored(geom, links)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{CompressedGaugeField, GaugeField, SpinorField};

    fn dims(t: usize, x: usize, y: usize, z: usize) -> LatticeDims {
        LatticeDims::new(t, x, y, z).unwrap()
    }

    #[test]
    fn spinor_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let geom = dims(2, 2, 2, 2);
        let field = SpinorField::<f64>::gaussian(geom, 11);
        let path = dir.path().join("s.lqf");
        save_spinor(&field, &path).unwrap();
        let back = load_spinor::<f64>(&path).unwrap();
        assert_eq!(field, back);

        let single = field.convert::<f32>();
        let path32 = dir.path().join("s32.lqf");
        save_spinor(&single, &path32).unwrap();
        assert_eq!(single, load_spinor::<f32>(&path32).unwrap());
    }

    #[test]
    fn saving_twice_yields_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let field = SpinorField::<f64>::gaussian(dims(2, 2, 2, 2), 3);
        let a = dir.path().join("a.lqf");
        let b = dir.path().join("b.lqf");
        save_spinor(&field, &a).unwrap();
        save_spinor(&field, &b).unwrap();
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
    }

    #[test]
    fn gauge_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let field = GaugeField::<f64>::hot_start(dims(2, 2, 2, 2), 5);
        let path = dir.path().join("g.lqf");
        save_gauge(&field, &path).unwrap();
        assert_eq!(field, load_gauge::<f64>(&path).unwrap());
    }

    #[test]
    fn compressed_round_trip_keeps_raw_fallbacks() {
        let dir = tempfile::tempdir().unwrap();
        // Cold links hit the pivot fallback, so this exercises both flags.
        let cold = GaugeField::<f64>::cold_start(dims(2, 2, 2, 2));
        let stored = CompressedGaugeField::from_gauge(&cold).unwrap();
        assert_eq!(stored.raw_count(), 64);
        let path = dir.path().join("c.lqf");
        save_gauge_compressed(&stored, &path).unwrap();
        let back = load_gauge_compressed::<f64>(&path).unwrap();
        assert_eq!(stored, back);
    }

    #[test]
    fn compressed_file_reconstructs_close_to_source() {
        let dir = tempfile::tempdir().unwrap();
        let geom = dims(2, 2, 2, 2);
        let hot = GaugeField::<f64>::hot_start(geom, 17);
        let stored = CompressedGaugeField::from_gauge(&hot).unwrap();
        assert_eq!(stored.raw_count(), 0);
        let path = dir.path().join("hc.lqf");
        save_gauge_compressed(&stored, &path).unwrap();
        let expanded = load_gauge_compressed::<f64>(&path).unwrap().expand().unwrap();
        let mut worst = 0.0f64;
        for (a, b) in hot.links().iter().zip(expanded.links()) {
            worst = worst.max(a.max_abs_diff(b));
        }
        assert!(worst <= 1e-12, "worst entry deviation {worst:e}");
    }

    #[test]
    fn header_reports_file_contents() {
        let dir = tempfile::tempdir().unwrap();
        let geom = dims(2, 4, 2, 2);
        let field = SpinorField::<f32>::gaussian(geom, 1);
        let path = dir.path().join("h.lqf");
        save_spinor(&field, &path).unwrap();
        let header = read_header(&path).unwrap();
        assert_eq!(header.version, FORMAT_VERSION);
        assert_eq!(header.kind, FieldKind::Spinor);
        assert_eq!(header.precision, Precision::Single);
        assert!(!header.compressed);
        assert_eq!(header.extents, [2, 4, 2, 2]);
        assert_eq!(header.payload_len, 32 * 24 * 4);
        assert_eq!(header.geometry().unwrap(), geom);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let field = SpinorField::<f64>::gaussian(dims(2, 2, 2, 2), 9);
        let path = dir.path().join("t.lqf");
        save_spinor(&field, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 5);
        fs::write(&path, bytes).unwrap();
        match load_spinor::<f64>(&path) {
            Err(IoError::Truncated { .. }) => {}
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn flipped_payload_bit_fails_the_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let field = SpinorField::<f64>::gaussian(dims(2, 2, 2, 2), 9);
        let path = dir.path().join("flip.lqf");
        save_spinor(&field, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        let idx = HEADER_BYTES + 100;
        bytes[idx] ^= 0x40;
        fs::write(&path, bytes).unwrap();
        match load_spinor::<f64>(&path) {
            Err(IoError::ChecksumMismatch { .. }) => {}
            other => panic!("expected checksum error, got {other:?}"),
        }
    }

    #[test]
    fn kind_precision_and_compression_must_match() {
        let dir = tempfile::tempdir().unwrap();
        let geom = dims(2, 2, 2, 2);
        let spinor = SpinorField::<f64>::gaussian(geom, 2);
        let sp = dir.path().join("k.lqf");
        save_spinor(&spinor, &sp).unwrap();
        assert!(matches!(
            load_gauge::<f64>(&sp),
            Err(IoError::KindMismatch { .. })
        ));
        assert!(matches!(
            load_spinor::<f32>(&sp),
            Err(IoError::PrecisionMismatch { .. })
        ));

        let gauge = GaugeField::<f64>::hot_start(geom, 2);
        let gp = dir.path().join("g.lqf");
        save_gauge(&gauge, &gp).unwrap();
        assert!(matches!(
            load_gauge_compressed::<f64>(&gp),
            Err(IoError::CompressionMismatch { .. })
        ));
    }

    #[test]
    fn bad_magic_and_version_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let field = SpinorField::<f64>::gaussian(dims(2, 2, 2, 2), 4);
        let path = dir.path().join("m.lqf");
        save_spinor(&field, &path).unwrap();

        let mut bytes = fs::read(&path).unwrap();
        bytes[0] = b'X';
        let bad_magic = dir.path().join("bad_magic.lqf");
        fs::write(&bad_magic, &bytes).unwrap();
        assert!(matches!(load_spinor::<f64>(&bad_magic), Err(IoError::BadMagic)));

        let mut bytes = fs::read(&path).unwrap();
        bytes[8..12].copy_from_slice(&99u32.to_le_bytes());
        let bad_version = dir.path().join("bad_version.lqf");
        fs::write(&bad_version, &bytes).unwrap();
        assert!(matches!(
            load_spinor::<f64>(&bad_version),
            Err(IoError::UnsupportedVersion { got: 99, .. })
        ));
    }

    #[test]
    fn tampered_gauge_payload_fails_unitarity_even_with_fixed_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let gauge = GaugeField::<f64>::hot_start(dims(2, 2, 2, 2), 8);
        let path = dir.path().join("tamper.lqf");
        save_gauge(&gauge, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        // Overwrite one word with 2.0 and recompute the checksum, so only
        // the unitarity re-check can catch it.
        let word = HEADER_BYTES + 18 * 8 * 3;
        bytes[word..word + 8].copy_from_slice(&2.0f64.to_le_bytes());
        let crc = crc32fast::hash(&bytes[HEADER_BYTES..]);
        bytes[40..44].copy_from_slice(&crc.to_le_bytes());
        fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_gauge::<f64>(&path),
            Err(IoError::Field(FieldError::BadLink { .. }))
        ));
    }

    #[test]
    fn nan_words_cannot_sneak_past_validation() {
        let dir = tempfile::tempdir().unwrap();
        let gauge = GaugeField::<f64>::hot_start(dims(2, 2, 2, 2), 8);
        let path = dir.path().join("nan.lqf");
        save_gauge(&gauge, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[HEADER_BYTES..HEADER_BYTES + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        let crc = crc32fast::hash(&bytes[HEADER_BYTES..]);
        bytes[40..44].copy_from_slice(&crc.to_le_bytes());
        fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_gauge::<f64>(&path),
            Err(IoError::Field(FieldError::BadLink { .. }))
        ));
    }

    #[test]
    fn trailing_bytes_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let field = SpinorField::<f64>::gaussian(dims(2, 2, 2, 2), 6);
        let path = dir.path().join("trail.lqf");
        save_spinor(&field, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.extend_from_slice(&[0u8; 8]);
        let len = (bytes.len() - HEADER_BYTES) as u64;
        bytes[32..40].copy_from_slice(&len.to_le_bytes());
        let crc = crc32fast::hash(&bytes[HEADER_BYTES..]);
        bytes[40..44].copy_from_slice(&crc.to_le_bytes());
        fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_spinor::<f64>(&path),
            Err(IoError::TrailingBytes(8))
        ));
    }

    #[test]
    fn header_layout_is_pinned() {
        let header = FieldFileHeader {
            version: 1,
            kind: FieldKind::Gauge,
            precision: Precision::Double,
            compressed: true,
            extents: [2, 3, 4, 5],
            payload_len: 0x1122334455667788,
            checksum: 0xdeadbeef,
        };
        let enc = header.encode();
        assert_eq!(&enc[0..8], b"LQFIELD\0");
        assert_eq!(enc[8..12], [1, 0, 0, 0]);
        assert_eq!(enc[12..16], [0, 1, 1, 0]);
        assert_eq!(enc[16..20], [2, 0, 0, 0]);
        assert_eq!(enc[28..32], [5, 0, 0, 0]);
        assert_eq!(enc[32..40], 0x1122334455667788u64.to_le_bytes());
        assert_eq!(enc[40..44], 0xdeadbeefu32.to_le_bytes());
        assert_eq!(FieldFileHeader::decode(&enc).unwrap(), header);
    }

    #[test]
    fn spinor_words_are_spin_major_little_endian() {
        let dir = tempfile::tempdir().unwrap();
        let geom = dims(2, 2, 2, 2);
        let mut field = SpinorField::<f64>::zeros(geom);
        field.site_mut(crate::geometry::SiteIndex(0)).0[1].0[2] = Complex::new(0.25, -0.5);
        let path = dir.path().join("layout.lqf");
        save_spinor(&field, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        // Site 0, spin 1, color 2 starts at word (1*3 + 2)*2 = 10.
        let off = HEADER_BYTES + 10 * 8;
        assert_eq!(bytes[off..off + 8], 0.25f64.to_le_bytes());
        assert_eq!(bytes[off + 8..off + 16], (-0.5f64).to_le_bytes());
    }
}
