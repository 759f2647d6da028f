//! 3D scalar volumes with physical voxel spacing, bit-exact two-file I/O
//! and 3D connected-component labelling.
//!
//! A volume is stored on disk as a pair of files: `<name>.json` holding the
//! header (dims, spacing, dtype, storage order, kind) and `<name>.raw`
//! holding the payload as IEEE-754 32-bit little-endian scalars in
//! x-fastest order (`index = x + nx*(y + ny*z)`).

use std::collections::VecDeque;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neighbourhood used for 3D connected-component labelling and blob growth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    #[serde(rename = "6")]
    Six,
    #[serde(rename = "18")]
    Eighteen,
    #[serde(rename = "26")]
    TwentySix,
}

impl Default for Connectivity {
    fn default() -> Self {
        Connectivity::TwentySix
    }
}

impl Connectivity {
    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            6 => Ok(Connectivity::Six),
            18 => Ok(Connectivity::Eighteen),
            26 => Ok(Connectivity::TwentySix),
            _ => Err(Error::invalid(format!("connectivity must be 6, 18 or 26, got {v}"))),
        }
    }

    /// Neighbour offsets as (dx, dy, dz) triples.
    pub fn offsets(self) -> Vec<(i64, i64, i64)> {
        let mut out = Vec::new();
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 && dz == 0 {
                        continue;
                    }
                    let manhattan = dx.abs() + dy.abs() + dz.abs();
                    let keep = match self {
                        Connectivity::Six => manhattan == 1,
                        Connectivity::Eighteen => manhattan <= 2,
                        Connectivity::TwentySix => true,
                    };
                    if keep {
                        out.push((dx, dy, dz));
                    }
                }
            }
        }
        out
    }
}

/// What the scalars in a volume mean. Confidence volumes are range-checked
/// to [0, 1] on load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeKind {
    Confidence,
    Label,
}

#[derive(Debug, Serialize, Deserialize)]
struct VolumeHeader {
    dims: [usize; 3],
    spacing_mm: [f64; 3],
    dtype: String,
    order: String,
    kind: VolumeKind,
}

/// A 3D scalar field with physical voxel spacing, stored x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: (usize, usize, usize),
    spacing_mm: (f64, f64, f64),
    data: Vec<f32>,
}

fn check_dims_spacing(dims: (usize, usize, usize), spacing: (f64, f64, f64)) -> Result<()> {
    if dims.0 == 0 || dims.1 == 0 || dims.2 == 0 {
        return Err(Error::invalid(format!("dims must be positive, got {dims:?}")));
    }
    for s in [spacing.0, spacing.1, spacing.2] {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::invalid(format!(
                "spacing components must be strictly positive and finite, got {spacing:?}"
            )));
        }
    }
    Ok(())
}

impl Volume {
    pub fn new(
        dims: (usize, usize, usize),
        spacing_mm: (f64, f64, f64),
        data: Vec<f32>,
    ) -> Result<Self> {
        check_dims_spacing(dims, spacing_mm)?;
        let expected = dims.0 * dims.1 * dims.2;
        if data.len() != expected {
            return Err(Error::LengthMismatch { expected, got: data.len() });
        }
        Ok(Volume { dims, spacing_mm, data })
    }

    /// Validates the [0, 1] range on top of the structural checks.
    pub fn new_confidence(
        dims: (usize, usize, usize),
        spacing_mm: (f64, f64, f64),
        data: Vec<f32>,
    ) -> Result<Self> {
        let v = Volume::new(dims, spacing_mm, data)?;
        v.check_confidence_range()?;
        Ok(v)
    }

    pub fn check_confidence_range(&self) -> Result<()> {
        for (i, &v) in self.data.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::ConfidenceRange { index: i, value: v });
            }
        }
        Ok(())
    }

    pub fn filled(dims: (usize, usize, usize), spacing_mm: (f64, f64, f64), value: f32) -> Result<Self> {
        check_dims_spacing(dims, spacing_mm)?;
        let n = dims.0 * dims.1 * dims.2;
        Ok(Volume { dims, spacing_mm, data: vec![value; n] })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn spacing_mm(&self) -> (f64, f64, f64) {
        self.spacing_mm
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims.0 * (y + self.dims.1 * z)
    }

    pub fn coords(&self, index: usize) -> (usize, usize, usize) {
        let (nx, ny, _) = self.dims;
        (index % nx, (index / nx) % ny, index / (nx * ny))
    }

    /// Linear indices of in-grid neighbours of `index` under `conn`.
    pub fn neighbours(&self, index: usize, conn: Connectivity) -> Vec<usize> {
        let (nx, ny, nz) = self.dims;
        let (x, y, z) = self.coords(index);
        let mut out = Vec::new();
        for (dx, dy, dz) in conn.offsets() {
            let xx = x as i64 + dx;
            let yy = y as i64 + dy;
            let zz = z as i64 + dz;
            if xx >= 0 && yy >= 0 && zz >= 0 && (xx as usize) < nx && (yy as usize) < ny && (zz as usize) < nz {
                out.push(self.index(xx as usize, yy as usize, zz as usize));
            }
        }
        out
    }

    pub fn same_grid(&self, other: &Volume) -> bool {
        self.dims == other.dims && self.spacing_mm == other.spacing_mm
    }

    /// Global maximum with deterministic tie-breaking by lowest linear index.
    pub fn argmax(&self) -> (usize, f32) {
        let mut best = 0usize;
        let mut best_v = self.data[0];
        for (i, &v) in self.data.iter().enumerate() {
            if v > best_v {
                best = i;
                best_v = v;
            }
        }
        (best, best_v)
    }
}

/// Integer label map on the same grid layout as [`Volume`]; 0 is background,
/// components carry contiguous labels `1..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    dims: (usize, usize, usize),
    spacing_mm: (f64, f64, f64),
    data: Vec<u32>,
}

impl LabelVolume {
    pub fn new(
        dims: (usize, usize, usize),
        spacing_mm: (f64, f64, f64),
        data: Vec<u32>,
    ) -> Result<Self> {
        check_dims_spacing(dims, spacing_mm)?;
        let expected = dims.0 * dims.1 * dims.2;
        if data.len() != expected {
            return Err(Error::LengthMismatch { expected, got: data.len() });
        }
        Ok(LabelVolume { dims, spacing_mm, data })
    }

    pub fn zeros(dims: (usize, usize, usize), spacing_mm: (f64, f64, f64)) -> Result<Self> {
        let n = dims.0 * dims.1 * dims.2;
        LabelVolume::new(dims, spacing_mm, vec![0u32; n])
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn spacing_mm(&self) -> (f64, f64, f64) {
        self.spacing_mm
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u32] {
        &mut self.data
    }

    pub fn num_labels(&self) -> u32 {
        self.data.iter().copied().max().unwrap_or(0)
    }

    /// Voxel index sets per label, in label order `1..=K`.
    pub fn label_voxels(&self) -> Vec<Vec<usize>> {
        let k = self.num_labels() as usize;
        let mut out = vec![Vec::new(); k];
        for (i, &l) in self.data.iter().enumerate() {
            if l > 0 {
                out[(l - 1) as usize].push(i);
            }
        }
        out
    }

    pub fn same_grid_as_volume(&self, v: &Volume) -> bool {
        self.dims == v.dims() && self.spacing_mm == v.spacing_mm()
    }
}

fn split_volume_path(path: &Path) -> (PathBuf, PathBuf) {
    let base = match path.extension().and_then(|e| e.to_str()) {
        Some("json") | Some("raw") => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    (base.with_extension("json"), base.with_extension("raw"))
}

/// Read a volume from the two-file format. `path` may point at the header,
/// the payload, or the shared base name.
pub fn read_volume(path: &Path) -> Result<(Volume, VolumeKind)> {
    let (header_path, raw_path) = split_volume_path(path);
    let header: VolumeHeader = serde_json::from_str(&fs::read_to_string(&header_path)?)?;
    if header.dtype != "f32le" {
        return Err(Error::Header(format!("unsupported dtype {:?}", header.dtype)));
    }
    if header.order != "x-fastest" {
        return Err(Error::Header(format!("unsupported order {:?}", header.order)));
    }
    let dims = (header.dims[0], header.dims[1], header.dims[2]);
    let spacing = (header.spacing_mm[0], header.spacing_mm[1], header.spacing_mm[2]);
    check_dims_spacing(dims, spacing).map_err(|e| Error::Header(e.to_string()))?;

    let bytes = fs::read(&raw_path)?;
    let expected = dims.0 * dims.1 * dims.2;
    if bytes.len() != expected * 4 {
        return Err(Error::LengthMismatch { expected, got: bytes.len() / 4 });
    }
    let mut data = Vec::with_capacity(expected);
    for chunk in bytes.chunks_exact(4) {
        data.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]));
    }
    let volume = Volume::new(dims, spacing, data)?;
    if header.kind == VolumeKind::Confidence {
        volume.check_confidence_range()?;
    }
    Ok((volume, header.kind))
}

/// Read a volume and require `kind = confidence`.
pub fn read_confidence_volume(path: &Path) -> Result<Volume> {
    let (v, kind) = read_volume(path)?;
    if kind != VolumeKind::Confidence {
        return Err(Error::Header(format!("expected kind=confidence at {}", path.display())));
    }
    Ok(v)
}

/// Write a volume in the two-file format. Round trips bit-exactly.
pub fn write_volume(v: &Volume, kind: VolumeKind, path: &Path) -> Result<()> {
    let (header_path, raw_path) = split_volume_path(path);
    let header = VolumeHeader {
        dims: [v.dims.0, v.dims.1, v.dims.2],
        spacing_mm: [v.spacing_mm.0, v.spacing_mm.1, v.spacing_mm.2],
        dtype: "f32le".into(),
        order: "x-fastest".into(),
        kind,
    };
    if kind == VolumeKind::Confidence {
        v.check_confidence_range()?;
    }
    fs::write(&header_path, serde_json::to_string_pretty(&header)?)?;
    let mut bytes = Vec::with_capacity(v.data.len() * 4);
    for &value in &v.data {
        bytes.extend_from_slice(&value.to_le_bytes());
    }
    fs::write(&raw_path, bytes)?;
    Ok(())
}

/// Read a label volume stored via [`write_label_volume`].
pub fn read_label_volume(path: &Path) -> Result<LabelVolume> {
    let (v, kind) = read_volume(path)?;
    if kind != VolumeKind::Label {
        return Err(Error::Header(format!("expected kind=label at {}", path.display())));
    }
    let mut data = Vec::with_capacity(v.len());
    for (i, &value) in v.data().iter().enumerate() {
        if value < 0.0 || value.fract() != 0.0 {
            return Err(Error::invalid(format!(
                "label volume holds non-integer value {value} at voxel {i}"
            )));
        }
        data.push(value as u32);
    }
    LabelVolume::new(v.dims(), v.spacing_mm(), data)
}

/// Labels are stored as exact small integers in f32 payload.
pub fn write_label_volume(l: &LabelVolume, path: &Path) -> Result<()> {
    let data: Vec<f32> = l.data.iter().map(|&v| v as f32).collect();
    let v = Volume::new(l.dims, l.spacing_mm, data)?;
    write_volume(&v, VolumeKind::Label, path)
}

/// Label maximal connected regions of a binary mask. Components are numbered
/// `1..=K` in deterministic order: descending size, ties broken by the
/// smallest linear index contained in the component.
pub fn connected_components(mask: &Volume, conn: Connectivity) -> Result<LabelVolume> {
    for (i, &v) in mask.data().iter().enumerate() {
        if v != 0.0 && v != 1.0 {
            return Err(Error::NonBinaryMask { index: i, value: v });
        }
    }
    let n = mask.len();
    let mut visited = vec![false; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if visited[start] || mask.data()[start] == 0.0 {
            continue;
        }
        let mut voxels = Vec::new();
        let mut queue = VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            voxels.push(v);
            for nb in mask.neighbours(v, conn) {
                if !visited[nb] && mask.data()[nb] == 1.0 {
                    visited[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
        voxels.sort_unstable();
        components.push(voxels);
    }
    // first voxel is minimal after the sort above
    components.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    let mut data = vec![0u32; n];
    for (label0, comp) in components.iter().enumerate() {
        for &v in comp {
            data[v] = label0 as u32 + 1;
        }
    }
    LabelVolume::new(mask.dims(), mask.spacing_mm(), data)
}

/// Physical volume of one voxel in cm^3.
pub fn voxel_volume_cm3(spacing_mm: (f64, f64, f64)) -> f64 {
    spacing_mm.0 * spacing_mm.1 * spacing_mm.2 / 1000.0
}
