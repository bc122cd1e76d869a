//! NIfTI-1 single-file (`.nii` / `.nii.gz`) reader and writer.
//!
//! Files store axis 0 fastest; in memory axis 2 is fastest, so payloads are
//! transposed on the way in and out. Scalars are written as float32, labels
//! as uint8 and channel volumes as 4D (x, y, z, 3) payloads.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::volume::{
    AxisDirection, ChannelMask, Channels, Geometry, Label, LabelCodes, LabelVolume, ProbabilityVolume, ScalarVolume,
    Volume,
};

pub const HEADER_SIZE: usize = 348;
/// Header plus the 4-byte empty extension block.
pub const VOX_OFFSET: usize = 352;

const DT_UINT8: i16 = 2;
const DT_INT16: i16 = 4;
const DT_INT32: i16 = 8;
const DT_FLOAT32: i16 = 16;
const DT_FLOAT64: i16 = 64;
const DT_INT8: i16 = 256;
const DT_UINT16: i16 = 512;
const DT_UINT32: i16 = 768;
const DT_INT64: i16 = 1024;
const DT_UINT64: i16 = 1280;

/// Decoded subset of the NIfTI-1 header.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    /// `dim[1..=dim[0]]`.
    pub dims: Vec<usize>,
    pub datatype: i16,
    pub pixdim: [f32; 8],
    pub vox_offset: usize,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub qform_code: i16,
    pub sform_code: i16,
    pub quatern: [f32; 3],
    pub qoffset: [f32; 3],
    pub srow: [[f32; 4]; 3],
}

impl Header {
    /// Geometry of the first three axes, preferring qform over sform.
    pub fn geometry(&self) -> Result<Geometry> {
        let shape = [self.dims[0], self.dims[1], self.dims[2]];
        let mut spacing = [0.0f64; 3];
        for a in 0..3 {
            let s = f64::from(self.pixdim[a + 1]).abs();
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::Format {
                    field: "pixdim",
                    reason: format!("pixdim[{}] = {} is not a positive spacing", a + 1, s),
                });
            }
            spacing[a] = s;
        }

        let (columns, origin, field) = if self.qform_code > 0 {
            let qfac = if self.pixdim[0] < 0.0 { -1.0 } else { 1.0 };
            let r = quaternion_to_rotation(self.quatern.map(f64::from), qfac);
            (r, self.qoffset.map(f64::from), "qform")
        } else if self.sform_code > 0 {
            let mut m = [[0.0; 3]; 3];
            for (r, row) in self.srow.iter().enumerate() {
                for c in 0..3 {
                    m[r][c] = f64::from(row[c]);
                }
            }
            let origin = [f64::from(self.srow[0][3]), f64::from(self.srow[1][3]), f64::from(self.srow[2][3])];
            (m, origin, "sform")
        } else {
            let mut identity = [[0.0; 3]; 3];
            for (a, row) in identity.iter_mut().enumerate() {
                row[a] = 1.0;
            }
            (identity, [0.0; 3], "pixdim")
        };

        let orientation = orientation_from_matrix(&columns).ok_or_else(|| Error::Format {
            field,
            reason: "voxel axes do not map onto distinct anatomical axes".into(),
        })?;
        let geometry = Geometry { shape, spacing, orientation, origin };
        geometry.validate().map_err(|e| Error::Format { field: "dim", reason: e.to_string() })?;
        Ok(geometry)
    }

    fn bytes_per_voxel(&self) -> usize {
        match self.datatype {
            DT_UINT8 | DT_INT8 => 1,
            DT_INT16 | DT_UINT16 => 2,
            DT_INT32 | DT_UINT32 | DT_FLOAT32 => 4,
            DT_FLOAT64 | DT_INT64 | DT_UINT64 => 8,
            _ => 0,
        }
    }

    fn voxel_count(&self) -> usize {
        self.dims.iter().product()
    }
}

/// Dominant signed world axis of each matrix column.
fn orientation_from_matrix(m: &[[f64; 3]; 3]) -> Option<[AxisDirection; 3]> {
    let mut out = [AxisDirection::LeftToRight; 3];
    let mut used = [false; 3];
    for (c, slot) in out.iter_mut().enumerate() {
        let (row, value) = (0..3).map(|r| (r, m[r][c])).max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
        if value == 0.0 || !value.is_finite() || used[row] {
            return None;
        }
        used[row] = true;
        *slot = AxisDirection::from_world(row, value > 0.0);
    }
    Some(out)
}

fn orientation_matrix(orientation: &[AxisDirection; 3]) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for (c, d) in orientation.iter().enumerate() {
        m[d.world_axis()][c] = if d.is_positive() { 1.0 } else { -1.0 };
    }
    m
}

fn quaternion_to_rotation([b, c, d]: [f64; 3], qfac: f64) -> [[f64; 3]; 3] {
    let a2 = 1.0 - (b * b + c * c + d * d);
    let (a, b, c, d) = if a2 < 1e-7 {
        let norm = (b * b + c * c + d * d).sqrt();
        (0.0, b / norm, c / norm, d / norm)
    } else {
        (a2.sqrt(), b, c, d)
    };
    [
        [a * a + b * b - c * c - d * d, 2.0 * (b * c - a * d), qfac * 2.0 * (b * d + a * c)],
        [2.0 * (b * c + a * d), a * a + c * c - b * b - d * d, qfac * 2.0 * (c * d - a * b)],
        [2.0 * (b * d - a * c), 2.0 * (c * d + a * b), qfac * (a * a + d * d - c * c - b * b)],
    ]
}

/// Quaternion (b, c, d) and qfac for an orthonormal matrix with det ±1.
fn rotation_to_quaternion(mut m: [[f64; 3]; 3]) -> ([f64; 3], f64) {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let qfac = if det < 0.0 { -1.0 } else { 1.0 };
    if qfac < 0.0 {
        for row in m.iter_mut() {
            row[2] = -row[2];
        }
    }
    let trace = m[0][0] + m[1][1] + m[2][2] + 1.0;
    let (a, mut b, mut c, mut d);
    if trace > 0.5 {
        a = 0.5 * trace.sqrt();
        b = 0.25 * (m[2][1] - m[1][2]) / a;
        c = 0.25 * (m[0][2] - m[2][0]) / a;
        d = 0.25 * (m[1][0] - m[0][1]) / a;
    } else {
        let xd = 1.0 + m[0][0] - (m[1][1] + m[2][2]);
        let yd = 1.0 + m[1][1] - (m[0][0] + m[2][2]);
        let zd = 1.0 + m[2][2] - (m[0][0] + m[1][1]);
        if xd > 1.0 {
            b = 0.5 * xd.sqrt();
            c = 0.25 * (m[0][1] + m[1][0]) / b;
            d = 0.25 * (m[0][2] + m[2][0]) / b;
            a = 0.25 * (m[2][1] - m[1][2]) / b;
        } else if yd > 1.0 {
            c = 0.5 * yd.sqrt();
            b = 0.25 * (m[0][1] + m[1][0]) / c;
            d = 0.25 * (m[1][2] + m[2][1]) / c;
            a = 0.25 * (m[0][2] - m[2][0]) / c;
        } else {
            d = 0.5 * zd.sqrt();
            b = 0.25 * (m[0][2] + m[2][0]) / d;
            c = 0.25 * (m[1][2] + m[2][1]) / d;
            a = 0.25 * (m[1][0] - m[0][1]) / d;
        }
        if a < 0.0 {
            b = -b;
            c = -c;
            d = -d;
        }
    }
    ([b, c, d], qfac)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path)?;
    if raw.len() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b {
        let mut out = Vec::new();
        MultiGzDecoder::new(&raw[..]).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    swap: bool,
}

impl Reader<'_> {
    fn i16(&self, off: usize) -> i16 {
        let b = [self.bytes[off], self.bytes[off + 1]];
        if self.swap {
            i16::from_be_bytes(b)
        } else {
            i16::from_le_bytes(b)
        }
    }

    fn f32(&self, off: usize) -> f32 {
        let b: [u8; 4] = self.bytes[off..off + 4].try_into().unwrap();
        if self.swap {
            f32::from_be_bytes(b)
        } else {
            f32::from_le_bytes(b)
        }
    }
}

/// Parse the 348-byte header; returns the header and whether the file is big-endian.
pub fn parse_header(bytes: &[u8]) -> Result<(Header, bool)> {
    if bytes.len() < HEADER_SIZE {
        return Err(Error::Format {
            field: "sizeof_hdr",
            reason: format!("file holds {} bytes, need at least {HEADER_SIZE}", bytes.len()),
        });
    }
    let size: [u8; 4] = bytes[0..4].try_into().unwrap();
    let swap = if i32::from_le_bytes(size) == HEADER_SIZE as i32 {
        false
    } else if i32::from_be_bytes(size) == HEADER_SIZE as i32 {
        true
    } else {
        return Err(Error::Format {
            field: "sizeof_hdr",
            reason: format!("expected 348, found {}", i32::from_le_bytes(size)),
        });
    };
    if &bytes[344..348] != b"n+1\0" {
        return Err(Error::Format {
            field: "magic",
            reason: format!(
                "expected single-file magic \"n+1\", found {:?}",
                String::from_utf8_lossy(&bytes[344..347])
            ),
        });
    }
    let r = Reader { bytes, swap };

    let ndim = r.i16(40);
    if !(1..=7).contains(&ndim) {
        return Err(Error::Format { field: "dim", reason: format!("dim[0] = {ndim} outside 1..=7") });
    }
    let mut dims = Vec::with_capacity(ndim as usize);
    for a in 1..=ndim as usize {
        let n = r.i16(40 + 2 * a);
        if n < 1 {
            return Err(Error::Format { field: "dim", reason: format!("dim[{a}] = {n} is not positive") });
        }
        dims.push(n as usize);
    }
    // Trailing singleton axes do not add dimensionality.
    while dims.len() > 3 && dims.last() == Some(&1) {
        dims.pop();
    }
    while dims.len() < 3 {
        dims.push(1);
    }

    let mut pixdim = [0f32; 8];
    for (a, p) in pixdim.iter_mut().enumerate() {
        *p = r.f32(76 + 4 * a);
    }
    let vox_offset = r.f32(108);
    if !(vox_offset >= VOX_OFFSET as f32) || vox_offset.fract() != 0.0 {
        return Err(Error::Format {
            field: "vox_offset",
            reason: format!("{vox_offset} is not an integer offset >= {VOX_OFFSET}"),
        });
    }
    let mut srow = [[0f32; 4]; 3];
    for (row, values) in srow.iter_mut().enumerate() {
        for (c, v) in values.iter_mut().enumerate() {
            *v = r.f32(280 + row * 16 + c * 4);
        }
    }
    let header = Header {
        dims,
        datatype: r.i16(70),
        pixdim,
        vox_offset: vox_offset as usize,
        scl_slope: r.f32(112),
        scl_inter: r.f32(116),
        qform_code: r.i16(252),
        sform_code: r.i16(254),
        quatern: [r.f32(256), r.f32(260), r.f32(264)],
        qoffset: [r.f32(268), r.f32(272), r.f32(276)],
        srow,
    };
    if header.bytes_per_voxel() == 0 {
        return Err(Error::Format {
            field: "datatype",
            reason: format!("unsupported datatype code {}", header.datatype),
        });
    }
    Ok((header, swap))
}

/// Read only the header of a `.nii` / `.nii.gz` file.
pub fn read_header(path: impl AsRef<Path>) -> Result<Header> {
    let bytes = read_bytes(path.as_ref())?;
    Ok(parse_header(&bytes)?.0)
}

struct Decoded {
    header: Header,
    geometry: Geometry,
    /// Raw stored values in file order (axis 0 fastest), unscaled.
    values: Vec<f64>,
}

fn decode(path: &Path) -> Result<Decoded> {
    let bytes = read_bytes(path)?;
    let (header, swap) = parse_header(&bytes)?;
    let geometry = header.geometry()?;
    let n = header.voxel_count();
    let width = header.bytes_per_voxel();
    let start = header.vox_offset;
    let end = start + n * width;
    if bytes.len() < end {
        return Err(Error::Format {
            field: "dim",
            reason: format!(
                "payload needs {} bytes after offset {start}, file has {}",
                n * width,
                bytes.len().saturating_sub(start)
            ),
        });
    }
    let payload = &bytes[start..end];
    macro_rules! conv {
        ($t:ty) => {{
            const W: usize = std::mem::size_of::<$t>();
            payload
                .chunks_exact(W)
                .map(|c| {
                    let b: [u8; W] = c.try_into().unwrap();
                    (if swap { <$t>::from_be_bytes(b) } else { <$t>::from_le_bytes(b) }) as f64
                })
                .collect::<Vec<f64>>()
        }};
    }
    let values = match header.datatype {
        DT_UINT8 => conv!(u8),
        DT_INT8 => conv!(i8),
        DT_INT16 => conv!(i16),
        DT_UINT16 => conv!(u16),
        DT_INT32 => conv!(i32),
        DT_UINT32 => conv!(u32),
        DT_INT64 => conv!(i64),
        DT_UINT64 => conv!(u64),
        DT_FLOAT32 => conv!(f32),
        DT_FLOAT64 => conv!(f64),
        _ => unreachable!("datatype validated in parse_header"),
    };
    Ok(Decoded { header, geometry, values })
}

/// Scatter one file-order 3D block into a row-major volume buffer.
fn file_to_memory<V: Copy>(g: &Geometry, block: &[f64], mut f: impl FnMut(usize, f64) -> Result<V>) -> Result<Vec<V>> {
    let [n0, n1, n2] = g.shape;
    let mut out = Vec::with_capacity(block.len());
    for i in 0..n0 {
        for j in 0..n1 {
            for k in 0..n2 {
                let file_idx = i + n0 * (j + n1 * k);
                out.push(f(file_idx, block[file_idx])?);
            }
        }
    }
    Ok(out)
}

fn file_coords(g: &Geometry, file_idx: usize) -> [usize; 3] {
    let [n0, n1, _] = g.shape;
    [file_idx % n0, (file_idx / n0) % n1, file_idx / (n0 * n1)]
}

fn scaling(header: &Header) -> Option<(f64, f64)> {
    let (slope, inter) = (f64::from(header.scl_slope), f64::from(header.scl_inter));
    if slope == 0.0 || !slope.is_finite() || (slope == 1.0 && inter == 0.0) {
        None
    } else {
        Some((slope, if inter.is_finite() { inter } else { 0.0 }))
    }
}

fn require_3d(header: &Header) -> Result<()> {
    if header.dims.len() > 3 {
        return Err(Error::UnsupportedDimensionality(header.dims.len()));
    }
    Ok(())
}

/// Load a 3D intensity volume, applying `scl_slope` / `scl_inter` when set.
pub fn load_scalar<T: Real>(path: impl AsRef<Path>) -> Result<ScalarVolume<T>> {
    let d = decode(path.as_ref())?;
    require_3d(&d.header)?;
    let scale = scaling(&d.header);
    let data = file_to_memory(&d.geometry, &d.values, |_, v| {
        Ok(T::of(match scale {
            Some((s, i)) => v * s + i,
            None => v,
        }))
    })?;
    Volume::from_vec(d.geometry, data)
}

fn decode_label(g: &Geometry, codes: &LabelCodes, file_idx: usize, v: f64) -> Result<Label> {
    let unknown = |code: i64| Error::UnknownLabel { code, index: file_coords(g, file_idx) };
    if v.fract() != 0.0 || !v.is_finite() {
        return Err(unknown(v as i64));
    }
    codes.decode(v as i64).ok_or_else(|| unknown(v as i64))
}

/// Load a 3D label map, validating every voxel against `codes`.
pub fn load_labels(path: impl AsRef<Path>, codes: &LabelCodes) -> Result<LabelVolume> {
    let d = decode(path.as_ref())?;
    require_3d(&d.header)?;
    let g = d.geometry.clone();
    let data = file_to_memory(&d.geometry, &d.values, |idx, v| decode_label(&g, codes, idx, v))?;
    Volume::from_vec(d.geometry, data)
}

fn load_channels_raw(path: &Path) -> Result<(Decoded, usize)> {
    let d = decode(path)?;
    match d.header.dims.len() {
        4 if d.header.dims[3] == 3 => {}
        4 => {
            return Err(Error::Format {
                field: "dim",
                reason: format!("channel volume needs dim[4] = 3, found {}", d.header.dims[3]),
            })
        }
        n if n > 4 => return Err(Error::UnsupportedDimensionality(n)),
        n => {
            return Err(Error::Format {
                field: "dim",
                reason: format!("channel volume must be 4D (x, y, z, 3), found {n}D"),
            })
        }
    }
    let block = d.geometry.len();
    Ok((d, block))
}

/// Load a (WT, TC, ET) probability volume stored as a 4D payload.
pub fn load_probability<T: Real>(path: impl AsRef<Path>) -> Result<ProbabilityVolume<T>> {
    let (d, block) = load_channels_raw(path.as_ref())?;
    let scale = scaling(&d.header);
    let prob = Channels::try_from_fn(|c| {
        let slice = &d.values[c as usize * block..(c as usize + 1) * block];
        let data = file_to_memory(&d.geometry, slice, |_, v| {
            Ok(T::of(match scale {
                Some((s, i)) => v * s + i,
                None => v,
            }))
        })?;
        Volume::from_vec(d.geometry.clone(), data)
    })?;
    prob.validate_range()?;
    Ok(prob)
}

/// Load a binary (WT, TC, ET) mask stored as a 4D payload; nonzero is foreground.
pub fn load_channel_mask(path: impl AsRef<Path>) -> Result<ChannelMask> {
    let (d, block) = load_channels_raw(path.as_ref())?;
    Channels::try_from_fn(|c| {
        let slice = &d.values[c as usize * block..(c as usize + 1) * block];
        let data = file_to_memory(&d.geometry, slice, |_, v| Ok(v != 0.0))?;
        Volume::from_vec(d.geometry.clone(), data)
    })
}

fn build_header(g: &Geometry, channels: usize, datatype: i16) -> Vec<u8> {
    let mut h = vec![0u8; VOX_OFFSET];
    let put_i16 = |h: &mut Vec<u8>, off: usize, v: i16| h[off..off + 2].copy_from_slice(&v.to_le_bytes());
    let put_f32 = |h: &mut Vec<u8>, off: usize, v: f32| h[off..off + 4].copy_from_slice(&v.to_le_bytes());

    h[0..4].copy_from_slice(&(HEADER_SIZE as i32).to_le_bytes());
    h[38] = b'r';
    let ndim: i16 = if channels > 1 { 4 } else { 3 };
    put_i16(&mut h, 40, ndim);
    for a in 0..3 {
        put_i16(&mut h, 42 + 2 * a, g.shape[a] as i16);
    }
    for a in 3..7 {
        put_i16(&mut h, 42 + 2 * a, if a == 3 { channels as i16 } else { 1 });
    }
    put_i16(&mut h, 70, datatype);
    let bitpix: i16 = if datatype == DT_UINT8 { 8 } else { 32 };
    put_i16(&mut h, 72, bitpix);

    let m = orientation_matrix(&g.orientation);
    let (quatern, qfac) = rotation_to_quaternion(m);
    put_f32(&mut h, 76, qfac as f32);
    for a in 0..3 {
        put_f32(&mut h, 80 + 4 * a, g.spacing[a] as f32);
    }
    for a in 3..7 {
        put_f32(&mut h, 80 + 4 * a, 1.0);
    }
    put_f32(&mut h, 108, VOX_OFFSET as f32);
    put_f32(&mut h, 112, 1.0);
    put_f32(&mut h, 116, 0.0);
    // NIFTI_UNITS_MM
    h[123] = 2;
    let descrip = b"lesionkit";
    h[148..148 + descrip.len()].copy_from_slice(descrip);
    put_i16(&mut h, 252, 1);
    put_i16(&mut h, 254, 1);
    for a in 0..3 {
        put_f32(&mut h, 256 + 4 * a, quatern[a] as f32);
        put_f32(&mut h, 268 + 4 * a, g.origin[a] as f32);
    }
    for r in 0..3 {
        for c in 0..3 {
            put_f32(&mut h, 280 + r * 16 + c * 4, (m[r][c] * g.spacing[c]) as f32);
        }
        put_f32(&mut h, 280 + r * 16 + 12, g.origin[r] as f32);
    }
    h[344..348].copy_from_slice(b"n+1\0");
    h
}

/// Append one row-major volume to `out` in file order.
fn append_file_order<V: Copy>(out: &mut Vec<u8>, vol: &Volume<V>, mut encode: impl FnMut(&mut Vec<u8>, V)) {
    let g = vol.geometry();
    let [n0, n1, n2] = g.shape;
    let data = vol.data();
    for k in 0..n2 {
        for j in 0..n1 {
            for i in 0..n0 {
                encode(out, data[(i * n1 + j) * n2 + k]);
            }
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let gz = path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(".gz"));
    let file = fs::File::create(path)?;
    let mut writer = std::io::BufWriter::new(file);
    if gz {
        let mut enc = GzEncoder::new(writer, Compression::default());
        enc.write_all(bytes)?;
        enc.finish()?.flush()?;
    } else {
        writer.write_all(bytes)?;
        writer.flush()?;
    }
    Ok(())
}

fn check_dims_fit(g: &Geometry) -> Result<()> {
    if g.shape.iter().any(|&n| n > i16::MAX as usize) {
        return Err(Error::validation(format!(
            "shape {:?} exceeds the NIfTI-1 per-axis limit of {}",
            g.shape,
            i16::MAX
        )));
    }
    Ok(())
}

fn check_finite<T: Real>(vol: &ScalarVolume<T>) -> Result<()> {
    if let Some(idx) = vol.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::validation(format!("non-finite value at voxel {:?}", vol.geometry().coords(idx))));
    }
    Ok(())
}

/// Save an intensity volume as float32. `.gz` suffix selects gzip.
pub fn save_scalar<T: Real>(vol: &ScalarVolume<T>, path: impl AsRef<Path>) -> Result<()> {
    check_finite(vol)?;
    check_dims_fit(vol.geometry())?;
    let mut bytes = build_header(vol.geometry(), 1, DT_FLOAT32);
    bytes.reserve(vol.len() * 4);
    append_file_order(&mut bytes, vol, |out, v| out.extend_from_slice(&v.as_f32().to_le_bytes()));
    write_file(path.as_ref(), &bytes)
}

/// Save a label map as uint8 using `codes`.
pub fn save_labels(vol: &LabelVolume, path: impl AsRef<Path>, codes: &LabelCodes) -> Result<()> {
    check_dims_fit(vol.geometry())?;
    let mut bytes = build_header(vol.geometry(), 1, DT_UINT8);
    bytes.reserve(vol.len());
    append_file_order(&mut bytes, vol, |out, l| out.push(codes.encode(l)));
    write_file(path.as_ref(), &bytes)
}

/// Save a probability volume as a 4D float32 payload.
pub fn save_probability<T: Real>(vol: &ProbabilityVolume<T>, path: impl AsRef<Path>) -> Result<()> {
    for (_, c) in vol.iter() {
        check_finite(c)?;
    }
    check_dims_fit(vol.geometry())?;
    let mut bytes = build_header(vol.geometry(), 3, DT_FLOAT32);
    for (_, c) in vol.iter() {
        append_file_order(&mut bytes, c, |out, v| out.extend_from_slice(&v.as_f32().to_le_bytes()));
    }
    write_file(path.as_ref(), &bytes)
}

/// Save a binary channel mask as a 4D uint8 payload.
pub fn save_channel_mask(mask: &ChannelMask, path: impl AsRef<Path>) -> Result<()> {
    check_dims_fit(mask.geometry())?;
    let mut bytes = build_header(mask.geometry(), 3, DT_UINT8);
    for (_, c) in mask.iter() {
        append_file_order(&mut bytes, c, |out, b| out.push(u8::from(b)));
    }
    write_file(path.as_ref(), &bytes)
}
