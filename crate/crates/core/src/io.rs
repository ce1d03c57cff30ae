//! File formats: CSV matrices, ASCII grayscale PGM heatmaps, and the binary
//! `SPEC1` (spectrum) and `BMPS1` (bundled MPS) caches.
//!
//! Binary containers are little-endian, start with a five-byte magic string
//! and end with a SHA-256 digest of everything before it. All writes go to a
//! temporary file in the destination directory that is then renamed into
//! place.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::linalg::DenseMatrix;
use crate::mps::{BundledMPS, SiteTensor};
use crate::spin::{ModelKind, ModelSpec, Spectrum};
use crate::{Error, Result};

pub const SPECTRUM_MAGIC: &[u8; 5] = b"SPEC1";
pub const MPS_MAGIC: &[u8; 5] = b"BMPS1";
const DIGEST_LEN: usize = 32;

/// Writes `bytes` to `path` through a temporary sibling file and a rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Row-major CSV, one matrix row per record, 17 significant digits.
pub fn matrix_to_csv(m: &DenseMatrix) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(|v| format!("{v:.16e}")))?;
    }
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

pub fn write_matrix_csv(path: &Path, m: &DenseMatrix) -> Result<()> {
    atomic_write(path, &matrix_to_csv(m)?)
}

pub fn read_matrix_csv(path: &Path) -> Result<DenseMatrix> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in r.records() {
        let record = record?;
        if *cols.get_or_insert(record.len()) != record.len() {
            return Err(Error::Format {
                kind: "CSV",
                reason: format!("row {} has {} fields", rows + 1, record.len()),
            });
        }
        for field in record.iter() {
            data.push(field.trim().parse::<f64>().map_err(|e| Error::Format {
                kind: "CSV",
                reason: format!("row {}: {e}", rows + 1),
            })?);
        }
        rows += 1;
    }
    Ok(DenseMatrix::new(rows, cols.unwrap_or(0), data)?)
}

/// 8-bit grayscale image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// Row-major.
    pub pixels: Vec<u16>,
}

/// Maps `floor` to 0 and the matrix maximum to 255, linearly in between.
pub fn quantize(m: &DenseMatrix, floor: f64) -> GrayImage {
    let top = m.as_slice().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = top - floor;
    let pixels = m
        .as_slice()
        .iter()
        .map(|&v| {
            if span.is_nan() || span <= 0.0 {
                0
            } else {
                (255.0 * (v - floor) / span).round().clamp(0.0, 255.0) as u16
            }
        })
        .collect();
    GrayImage {
        width: m.cols(),
        height: m.rows(),
        maxval: 255,
        pixels,
    }
}

/// Plain (P2) PGM text, one image row per line.
pub fn pgm_bytes(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P2\n{} {}\n{}\n", img.width, img.height, img.maxval);
    for row in img.pixels.chunks(img.width.max(1)) {
        let line: Vec<String> = row.iter().map(u16::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    atomic_write(path, &pgm_bytes(img))
}

pub fn parse_pgm(text: &str) -> Result<GrayImage> {
    let bad = |reason: String| Error::Format { kind: "PGM", reason };
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    if tokens.next() != Some("P2") {
        return Err(bad("missing P2 magic".into()));
    }
    let mut number = |what: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| bad(format!("missing {what}")))?
            .parse::<usize>()
            .map_err(|e| bad(format!("bad {what}: {e}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval == 0 || maxval > u16::MAX as usize {
        return Err(bad(format!("maxval {maxval} out of range")));
    }
    let mut pixels = Vec::with_capacity(width * height);
    for _ in 0..width * height {
        let p = number("pixel")?;
        if p > maxval {
            return Err(bad(format!("pixel {p} exceeds maxval {maxval}")));
        }
        pixels.push(p as u16);
    }
    Ok(GrayImage {
        width,
        height,
        maxval: maxval as u16,
        pixels,
    })
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    parse_pgm(&fs::read_to_string(path)?)
}

fn seal(mut body: Vec<u8>) -> Vec<u8> {
    let digest = Sha256::digest(&body);
    body.extend_from_slice(&digest);
    body
}

/// Checks the magic and trailing digest, returning the payload after the magic.
fn unseal<'a>(bytes: &'a [u8], magic: &[u8; 5], path: &Path) -> Result<&'a [u8]> {
    let integrity = |reason: &str| Error::Integrity {
        path: path.to_path_buf(),
        reason: reason.into(),
    };
    if bytes.len() < magic.len() + DIGEST_LEN {
        return Err(integrity("file is truncated"));
    }
    if &bytes[..magic.len()] != magic {
        return Err(integrity("wrong magic string"));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(integrity("SHA-256 digest mismatch"));
    }
    Ok(&body[magic.len()..])
}

struct Cursor<'a> {
    bytes: &'a [u8],
    kind: &'static str,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(Error::Format {
                kind: self.kind,
                reason: "unexpected end of data".into(),
            });
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Format {
            kind: self.kind,
            reason: "length overflow".into(),
        })?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn finish(&self) -> Result<()> {
        if self.bytes.is_empty() {
            Ok(())
        } else {
            Err(Error::Format {
                kind: self.kind,
                reason: format!("{} trailing bytes", self.bytes.len()),
            })
        }
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::validation(format!("{v} does not fit in 32 bits")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_f64s(out: &mut Vec<u8>, vs: &[f64]) {
    for v in vs {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn model_code(spec: &ModelSpec) -> (u8, f64) {
    match spec.kind {
        ModelKind::Tfim { hx } => (0, hx),
        ModelKind::Xxz { delta } => (1, delta),
    }
}

pub fn spectrum_bytes(s: &Spectrum) -> Result<Vec<u8>> {
    let m = s.len();
    let mut out = Vec::with_capacity(26 + 8 * (m + m * m) + DIGEST_LEN);
    out.extend_from_slice(SPECTRUM_MAGIC);
    let (code, param) = model_code(&s.model);
    out.push(code);
    put_u32(&mut out, s.model.sites)?;
    out.extend_from_slice(&param.to_le_bytes());
    put_u32(&mut out, m)?;
    put_f64s(&mut out, &s.energies);
    put_f64s(&mut out, s.states.as_slice());
    Ok(seal(out))
}

pub fn parse_spectrum(bytes: &[u8], path: &Path) -> Result<Spectrum> {
    let mut c = Cursor {
        bytes: unseal(bytes, SPECTRUM_MAGIC, path)?,
        kind: "SPEC1",
    };
    let code = c.u8()?;
    let sites = c.u32()?;
    let param = c.f64()?;
    let kind = match code {
        0 => ModelKind::Tfim { hx: param },
        1 => ModelKind::Xxz { delta: param },
        other => {
            return Err(Error::Format {
                kind: "SPEC1",
                reason: format!("unknown model code {other}"),
            })
        }
    };
    let model = ModelSpec::new(kind, sites)?;
    let m = c.u32()?;
    if m != model.dimension() {
        return Err(Error::Format {
            kind: "SPEC1",
            reason: format!("{m} states recorded for dimension {}", model.dimension()),
        });
    }
    let energies = c.f64s(m)?;
    let states = DenseMatrix::new(m, m, c.f64s(m * m)?)?;
    c.finish()?;
    Spectrum::from_parts(model, energies, states)
}

pub fn write_spectrum(path: &Path, s: &Spectrum) -> Result<()> {
    atomic_write(path, &spectrum_bytes(s)?)
}

pub fn read_spectrum(path: &Path) -> Result<Spectrum> {
    parse_spectrum(&fs::read(path)?, path)
}

/// Cache file name encoding the model kind, size and exact parameter bits.
pub fn spectrum_cache_name(spec: &ModelSpec) -> String {
    let (code, param) = model_code(spec);
    let kind = if code == 0 { "tfim" } else { "xxz" };
    format!("{kind}-n{}-{:016x}.spec1", spec.sites, param.to_bits())
}

pub fn mps_bytes(mps: &BundledMPS) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MPS_MAGIC);
    put_u32(&mut out, mps.sites())?;
    put_u32(&mut out, mps.g())?;
    put_u32(&mut out, mps.center())?;
    put_u32(&mut out, mps.state_indices().len())?;
    for &k in mps.state_indices() {
        put_u32(&mut out, k)?;
    }
    for t in mps.tensors() {
        for dim in [t.left_dim(), t.phys_dim(), t.bundle_dim(), t.right_dim()] {
            put_u32(&mut out, dim)?;
        }
    }
    for t in mps.tensors() {
        put_f64s(&mut out, t.data());
    }
    Ok(seal(out))
}

pub fn parse_mps(bytes: &[u8], path: &Path) -> Result<BundledMPS> {
    let mut c = Cursor {
        bytes: unseal(bytes, MPS_MAGIC, path)?,
        kind: "BMPS1",
    };
    let sites = c.u32()?;
    let g = c.u32()?;
    let center = c.u32()?;
    let labels = (0..c.u32()?).map(|_| c.u32()).collect::<Result<Vec<_>>>()?;
    let dims = (0..sites)
        .map(|_| Ok([c.u32()?, c.u32()?, c.u32()?, c.u32()?]))
        .collect::<Result<Vec<_>>>()?;
    let mut tensors = Vec::with_capacity(sites);
    for [l, p, x, r] in dims {
        let len = l
            .checked_mul(p)
            .and_then(|v| v.checked_mul(x))
            .and_then(|v| v.checked_mul(r))
            .ok_or_else(|| Error::Format {
                kind: "BMPS1",
                reason: "tensor size overflow".into(),
            })?;
        tensors.push(SiteTensor::new(l, p, x, r, c.f64s(len)?)?);
    }
    c.finish()?;
    BundledMPS::from_parts(tensors, center, g, labels)
}

pub fn write_mps(path: &Path, mps: &BundledMPS) -> Result<()> {
    atomic_write(path, &mps_bytes(mps)?)
}

pub fn read_mps(path: &Path) -> Result<BundledMPS> {
    parse_mps(&fs::read(path)?, path)
}

/// Verifies the digest and structure of a `SPEC1` or `BMPS1` file.
pub fn check_cache_file(path: &Path) -> Result<()> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(SPECTRUM_MAGIC) {
        parse_spectrum(&bytes, path).map(|_| ())
    } else if bytes.starts_with(MPS_MAGIC) {
        parse_mps(&bytes, path).map(|_| ())
    } else {
        Err(Error::Integrity {
            path: path.to_path_buf(),
            reason: "unrecognized magic string".into(),
        })
    }
}
