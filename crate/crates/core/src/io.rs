//! On-disk formats.
//!
//! Feature files come in two equivalent flavours. The text form:
//!
//! ```text
//! FEAT v1
//! image <id>
//! size <w> <h>
//! count <n> dim <D>
//! <x> <y> <score> <d_1> ... <d_D>      (n rows)
//! ```
//!
//! and a binary container starting with the magic bytes `FEATBIN1`, followed
//! by little-endian fields: `u32` id length, id bytes, `f32` width, `f32`
//! height, `u32` count, `u32` dim, then `count` rows of `3 + dim` `f32`s.
//!
//! Holistic descriptor files (`HDAGGHV1`) hold one encoder fingerprint and a
//! list of `f32` vectors. Similarity matrices, ground truth, PR curves and
//! sweep tables are CSV; metadata lines start with `#`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::aggregate::{DescriptorKind, EncoderMeta, HolisticDescriptor};
use crate::error::{Error, Result};
use crate::eval::{GroundTruth, PrPoint, SimilarityMatrix};
use crate::experiments::SweepTable;
use crate::features::{Feature, FeatureSet};
use crate::hypervector::HdVector;

pub const FEATURE_MAGIC: &[u8; 8] = b"FEATBIN1";
pub const HOLISTIC_MAGIC: &[u8; 8] = b"HDAGGHV1";
pub const HOLISTIC_VERSION: u16 = 1;

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a feature file in either format.
pub fn read_feature_file(path: impl AsRef<Path>) -> Result<FeatureSet> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    let fs = if bytes.starts_with(FEATURE_MAGIC) {
        parse_feature_binary(&bytes, path)?
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::format(path, "not UTF-8 text"))?;
        parse_feature_text(&text, path)?
    };
    fs.validate().map_err(|e| Error::format(path, e.to_string()))?;
    Ok(fs)
}

/// Parses the text feature format; `path` only labels errors.
pub fn parse_feature_text(text: &str, path: &Path) -> Result<FeatureSet> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::parse(path, 0, format!("unexpected end of file, expected {what}")))
    };
    let num = |line: usize, s: &str, what: &str| -> Result<f64> {
        let v: f64 = s
            .parse()
            .map_err(|_| Error::parse(path, line, format!("invalid {what} `{s}`")))?;
        if !v.is_finite() {
            return Err(Error::parse(path, line, format!("non-finite {what}")));
        }
        Ok(v)
    };
    let int = |line: usize, s: &str, what: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::parse(path, line, format!("invalid {what} `{s}`")))
    };

    let (line, header) = next("`FEAT v1` header")?;
    if header != "FEAT v1" {
        return Err(Error::parse(path, line, format!("expected `FEAT v1`, found `{header}`")));
    }
    let (line, image) = next("`image` line")?;
    let id = image
        .strip_prefix("image")
        .filter(|rest| rest.starts_with(char::is_whitespace))
        .map(str::trim)
        .ok_or_else(|| Error::parse(path, line, "expected `image <id>`"))?;

    let (line, size) = next("`size` line")?;
    let parts: Vec<&str> = size.split_whitespace().collect();
    if parts.len() != 3 || parts[0] != "size" {
        return Err(Error::parse(path, line, "expected `size <w> <h>`"));
    }
    let (width, height) = (num(line, parts[1], "width")?, num(line, parts[2], "height")?);

    let (line, count) = next("`count` line")?;
    let parts: Vec<&str> = count.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "count" || parts[2] != "dim" {
        return Err(Error::parse(path, line, "expected `count <n> dim <D>`"));
    }
    let (n, dim) = (int(line, parts[1], "count")?, int(line, parts[3], "dim")?);
    if dim == 0 {
        return Err(Error::parse(path, line, "dim must be at least 1"));
    }

    let mut fs = FeatureSet::new(id, width, height);
    for (line, row) in lines {
        let fields: Vec<&str> = row.split_whitespace().collect();
        if fields.len() != dim + 3 {
            return Err(Error::parse(
                path,
                line,
                format!("expected {} values, found {}", dim + 3, fields.len()),
            ));
        }
        let descriptor = fields[3..]
            .iter()
            .map(|s| {
                let v: f32 = s
                    .parse()
                    .map_err(|_| Error::parse(path, line, format!("invalid descriptor value `{s}`")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::parse(path, line, "non-finite descriptor value"))
                }
            })
            .collect::<Result<Vec<f32>>>()?;
        fs.features.push(Feature {
            x: num(line, fields[0], "x")?,
            y: num(line, fields[1], "y")?,
            score: num(line, fields[2], "score")?,
            descriptor,
        });
    }
    if fs.features.len() != n {
        return Err(Error::parse(
            path,
            0,
            format!("header declares {n} features but {} rows follow", fs.features.len()),
        ));
    }
    Ok(fs)
}

/// Text form of a feature set. Positions and scores keep full precision,
/// descriptors are `f32`.
pub fn format_feature_text(fs: &FeatureSet) -> Result<String> {
    fs.validate()?;
    let dim = fs.descriptor_dim().unwrap_or(1);
    let mut out = String::new();
    let _ = writeln!(out, "FEAT v1");
    let _ = writeln!(out, "image {}", fs.image_id);
    let _ = writeln!(out, "size {} {}", fs.width, fs.height);
    let _ = writeln!(out, "count {} dim {dim}", fs.len());
    for f in &fs.features {
        let _ = write!(out, "{} {} {}", f.x, f.y, f.score);
        for v in &f.descriptor {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    Ok(out)
}

fn check_id(id: &str) -> Result<()> {
    if id.is_empty() || id.chars().any(|c| c.is_whitespace() || c == ',') {
        return Err(Error::invalid(format!("image id `{id}` must be non-empty without whitespace or commas")));
    }
    Ok(())
}

pub fn write_feature_text(path: impl AsRef<Path>, fs: &FeatureSet) -> Result<()> {
    check_id(&fs.image_id)?;
    write_bytes(path.as_ref(), format_feature_text(fs)?.as_bytes())
}

pub fn write_feature_binary(path: impl AsRef<Path>, fs: &FeatureSet) -> Result<()> {
    fs.validate()?;
    check_id(&fs.image_id)?;
    let dim = fs.descriptor_dim().unwrap_or(1);
    let mut out = Vec::with_capacity(32 + fs.len() * (dim + 3) * 4);
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&(fs.image_id.len() as u32).to_le_bytes());
    out.extend_from_slice(fs.image_id.as_bytes());
    out.extend_from_slice(&(fs.width as f32).to_le_bytes());
    out.extend_from_slice(&(fs.height as f32).to_le_bytes());
    out.extend_from_slice(&(fs.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for f in &fs.features {
        for v in [f.x as f32, f.y as f32, f.score as f32].iter().chain(&f.descriptor) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    write_bytes(path.as_ref(), &out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format(self.path, format!("truncated file at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::format(self.path, "string is not UTF-8"))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::format(
                self.path,
                format!("{} trailing bytes", self.bytes.len() - self.pos),
            ));
        }
        Ok(())
    }
}

fn parse_feature_binary(bytes: &[u8], path: &Path) -> Result<FeatureSet> {
    let mut r = Reader { bytes, pos: FEATURE_MAGIC.len(), path };
    let id = r.string()?;
    let width = f64::from(r.f32()?);
    let height = f64::from(r.f32()?);
    let n = r.u32()? as usize;
    let dim = r.u32()? as usize;
    if dim == 0 {
        return Err(Error::format(path, "dim must be at least 1"));
    }
    let mut fs = FeatureSet::new(id, width, height);
    for _ in 0..n {
        let x = f64::from(r.f32()?);
        let y = f64::from(r.f32()?);
        let score = f64::from(r.f32()?);
        let descriptor = (0..dim).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
        fs.features.push(Feature { descriptor, x, y, score });
    }
    r.finish()?;
    Ok(fs)
}

/// Writes descriptors that all share one fingerprint.
pub fn write_holistic(path: impl AsRef<Path>, descriptors: &[HolisticDescriptor]) -> Result<()> {
    let path = path.as_ref();
    let first = descriptors.first().ok_or(Error::Empty("holistic descriptor list"))?;
    for h in descriptors {
        first.check_compatible(h)?;
        check_id(&h.id)?;
    }
    let fingerprint = first.fingerprint();
    let dim = first.vector.dim();
    let mut out = Vec::with_capacity(64 + descriptors.len() * (dim * 4 + 16));
    out.extend_from_slice(HOLISTIC_MAGIC);
    out.extend_from_slice(&HOLISTIC_VERSION.to_le_bytes());
    out.extend_from_slice(&(fingerprint.len() as u32).to_le_bytes());
    out.extend_from_slice(fingerprint.as_bytes());
    out.extend_from_slice(&(descriptors.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for h in descriptors {
        out.push(u8::from(h.degenerate));
        out.extend_from_slice(&(h.id.len() as u32).to_le_bytes());
        out.extend_from_slice(h.id.as_bytes());
        for &v in h.vector.as_slice() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    write_bytes(path, &out)
}

/// Splits `kind=<kind>;<encoder fingerprint>`.
pub fn parse_descriptor_fingerprint(s: &str) -> Result<(DescriptorKind, EncoderMeta)> {
    let rest = s
        .strip_prefix("kind=")
        .ok_or_else(|| Error::invalid(format!("malformed fingerprint `{s}`")))?;
    let (kind, meta) = rest
        .split_once(';')
        .ok_or_else(|| Error::invalid(format!("malformed fingerprint `{s}`")))?;
    Ok((kind.parse()?, EncoderMeta::parse_fingerprint(meta)?))
}

pub fn read_holistic(path: impl AsRef<Path>) -> Result<Vec<HolisticDescriptor>> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    if !bytes.starts_with(HOLISTIC_MAGIC) {
        return Err(Error::format(path, "not a holistic descriptor file"));
    }
    let mut r = Reader { bytes: &bytes, pos: HOLISTIC_MAGIC.len(), path };
    let version = r.u16()?;
    if version != HOLISTIC_VERSION {
        return Err(Error::format(
            path,
            format!("unsupported version {version}, expected {HOLISTIC_VERSION}"),
        ));
    }
    let fingerprint = r.string()?;
    let (kind, meta) = parse_descriptor_fingerprint(&fingerprint).map_err(|e| Error::format(path, e.to_string()))?;
    let count = r.u32()? as usize;
    let dim = r.u32()? as usize;
    if dim != meta.dim || dim == 0 {
        return Err(Error::format(
            path,
            format!("vector length {dim} disagrees with fingerprint d={}", meta.dim),
        ));
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let degenerate = match r.u8()? {
            0 => false,
            1 => true,
            other => return Err(Error::format(path, format!("invalid degenerate flag {other}"))),
        };
        let id = r.string()?;
        let values = (0..dim)
            .map(|_| r.f32().map(f64::from))
            .collect::<Result<Vec<_>>>()?;
        let vector = HdVector::new(values).map_err(|e| Error::format(path, e.to_string()))?;
        out.push(HolisticDescriptor {
            id,
            vector,
            kind,
            meta: meta.clone(),
            degenerate,
        });
    }
    r.finish()?;
    Ok(out)
}

/// [`read_holistic`] that also insists on a specific encoder configuration.
pub fn read_holistic_expect(path: impl AsRef<Path>, expected: &EncoderMeta) -> Result<Vec<HolisticDescriptor>> {
    let hs = read_holistic(path.as_ref())?;
    if let Some(h) = hs.first() {
        if &h.meta != expected {
            return Err(Error::FingerprintMismatch {
                left: h.meta.fingerprint(),
                right: expected.fingerprint(),
            });
        }
    }
    Ok(hs)
}

fn metadata_header(out: &mut String, pairs: &[(&str, &str)]) {
    for (k, v) in pairs {
        let _ = writeln!(out, "# {k}={v}");
    }
}

type Metadata = Vec<(String, String)>;

/// Splits `#key=value` lines from numbered body lines.
fn strip_metadata(text: &str) -> (Metadata, Vec<(usize, &str)>) {
    let mut meta = Vec::new();
    let mut body = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(m) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = m.trim().split_once('=') {
                meta.push((k.trim().to_owned(), v.trim().to_owned()));
            }
        } else if !trimmed.is_empty() {
            body.push((i + 1, trimmed));
        }
    }
    (meta, body)
}

pub fn format_similarity_csv(m: &SimilarityMatrix) -> String {
    let mut out = String::new();
    let shape = format!("{}x{}", m.n_db(), m.n_q());
    metadata_header(
        &mut out,
        &[("method", &m.method), ("fingerprint", &m.fingerprint), ("shape", &shape)],
    );
    out.push_str("db_id");
    for q in &m.q_ids {
        let _ = write!(out, ",{q}");
    }
    out.push('\n');
    for (i, id) in m.db_ids.iter().enumerate() {
        out.push_str(id);
        for v in m.row(i) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_similarity_csv(path: impl AsRef<Path>, m: &SimilarityMatrix) -> Result<()> {
    for id in m.db_ids.iter().chain(&m.q_ids) {
        check_id(id)?;
    }
    write_bytes(path.as_ref(), format_similarity_csv(m).as_bytes())
}

pub fn read_similarity_csv(path: impl AsRef<Path>) -> Result<SimilarityMatrix> {
    let path = path.as_ref();
    let text = String::from_utf8(read_bytes(path)?).map_err(|_| Error::format(path, "not UTF-8 text"))?;
    let (meta, body) = strip_metadata(&text);
    let get = |key: &str| meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone()).unwrap_or_default();
    let mut rows = body.into_iter();
    let (line, header) = rows.next().ok_or_else(|| Error::parse(path, 0, "missing header row"))?;
    let mut cols = header.split(',');
    if cols.next() != Some("db_id") {
        return Err(Error::parse(path, line, "header must start with `db_id`"));
    }
    let q_ids: Vec<String> = cols.map(str::to_owned).collect();
    let mut db_ids = Vec::new();
    let mut values = Vec::new();
    for (line, row) in rows {
        let mut fields = row.split(',');
        db_ids.push(fields.next().unwrap_or_default().to_owned());
        let before = values.len();
        for f in fields {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::parse(path, line, format!("invalid similarity `{f}`")))?;
            if !v.is_finite() {
                return Err(Error::parse(path, line, "non-finite similarity"));
            }
            values.push(v);
        }
        if values.len() - before != q_ids.len() {
            return Err(Error::parse(
                path,
                line,
                format!("expected {} values, found {}", q_ids.len(), values.len() - before),
            ));
        }
    }
    SimilarityMatrix::new(values, db_ids, q_ids, get("method"), get("fingerprint"))
        .map_err(|e| Error::format(path, e.to_string()))
}

pub fn format_ground_truth_csv(gt: &GroundTruth) -> String {
    let mut out = String::from("db_index,query_index\n");
    for (i, j) in gt.positives() {
        let _ = writeln!(out, "{i},{j}");
    }
    out
}

pub fn write_ground_truth_csv(path: impl AsRef<Path>, gt: &GroundTruth) -> Result<()> {
    write_bytes(path.as_ref(), format_ground_truth_csv(gt).as_bytes())
}

/// Reads `db_index,query_index` rows (an optional header row is skipped).
pub fn read_ground_truth_csv(path: impl AsRef<Path>, n_db: usize, n_q: usize) -> Result<GroundTruth> {
    let path = path.as_ref();
    let text = String::from_utf8(read_bytes(path)?).map_err(|_| Error::format(path, "not UTF-8 text"))?;
    let (_, body) = strip_metadata(&text);
    let mut pairs = Vec::new();
    for (k, (line, row)) in body.into_iter().enumerate() {
        if k == 0 && row.starts_with("db_index") {
            continue;
        }
        let (a, b) = row
            .split_once(',')
            .ok_or_else(|| Error::parse(path, line, "expected `db_index,query_index`"))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::parse(path, line, format!("invalid index `{s}`")))
        };
        pairs.push((parse(a)?, parse(b)?));
    }
    GroundTruth::new(n_db, n_q, pairs).map_err(|e| Error::format(path, e.to_string()))
}

pub fn format_pr_curve_csv(points: &[PrPoint], fingerprint: &str) -> String {
    let mut out = String::new();
    metadata_header(&mut out, &[("fingerprint", fingerprint)]);
    out.push_str("threshold,precision,recall\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.threshold, p.precision, p.recall);
    }
    out
}

pub fn write_pr_curve_csv(path: impl AsRef<Path>, points: &[PrPoint], fingerprint: &str) -> Result<()> {
    write_bytes(path.as_ref(), format_pr_curve_csv(points, fingerprint).as_bytes())
}

pub fn format_sweep_csv(table: &SweepTable, metadata: &[(&str, &str)]) -> String {
    let mut out = String::new();
    metadata_header(&mut out, metadata);
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_sweep_csv(path: impl AsRef<Path>, table: &SweepTable, metadata: &[(&str, &str)]) -> Result<()> {
    write_bytes(path.as_ref(), format_sweep_csv(table, metadata).as_bytes())
}

/// Regular files directly inside `dir`, sorted by name.
pub fn list_files(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
