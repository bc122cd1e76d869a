//! 3D connected-component labeling and binary dilation.
//!
//! Labeling is a two-pass raster scan with union-find over provisional
//! labels. The second pass renumbers roots in first-encounter scan order,
//! so ids are dense and deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{BoundingBox, Geometry, Mask, Volume};

/// Voxel neighbourhood: faces (6), faces and edges (18), or the full 3×3×3 cube (26).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Connectivity {
    Six,
    Eighteen,
    #[default]
    TwentySix,
}

impl Connectivity {
    pub fn neighbors(self) -> u8 {
        match self {
            Connectivity::Six => 6,
            Connectivity::Eighteen => 18,
            Connectivity::TwentySix => 26,
        }
    }

    fn max_nonzero(self) -> usize {
        match self {
            Connectivity::Six => 1,
            Connectivity::Eighteen => 2,
            Connectivity::TwentySix => 3,
        }
    }

    /// All neighbour offsets of this connectivity.
    pub fn offsets(self) -> Vec<[isize; 3]> {
        let mut out = Vec::with_capacity(26);
        for di in -1isize..=1 {
            for dj in -1isize..=1 {
                for dk in -1isize..=1 {
                    let nz = [di, dj, dk].iter().filter(|&&d| d != 0).count();
                    if nz > 0 && nz <= self.max_nonzero() {
                        out.push([di, dj, dk]);
                    }
                }
            }
        }
        out
    }

    /// Offsets that precede the centre voxel in raster order.
    fn causal_offsets(self) -> Vec<[isize; 3]> {
        self.offsets()
            .into_iter()
            .filter(|&[di, dj, dk]| di < 0 || (di == 0 && (dj < 0 || (dj == 0 && dk < 0))))
            .collect()
    }
}

impl TryFrom<u8> for Connectivity {
    type Error = Error;

    fn try_from(n: u8) -> Result<Self> {
        match n {
            6 => Ok(Connectivity::Six),
            18 => Ok(Connectivity::Eighteen),
            26 => Ok(Connectivity::TwentySix),
            _ => Err(Error::validation(format!("connectivity must be 6, 18 or 26, got {n}"))),
        }
    }
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        c.neighbors()
    }
}

#[inline]
fn offset_coords(c: [usize; 3], d: [isize; 3], shape: [usize; 3]) -> Option<[usize; 3]> {
    let mut out = [0usize; 3];
    for a in 0..3 {
        let v = c[a] as isize + d[a];
        if v < 0 || v >= shape[a] as isize {
            return None;
        }
        out[a] = v as usize;
    }
    Some(out)
}

/// Per-voxel component ids plus per-component statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentLabeling {
    ids: Volume<u32>,
    sizes: Vec<usize>,
    bounding_boxes: Vec<BoundingBox>,
}

impl ComponentLabeling {
    pub fn geometry(&self) -> &Geometry {
        self.ids.geometry()
    }

    /// Component id per voxel; 0 is background, components are `1..=count`.
    pub fn ids(&self) -> &Volume<u32> {
        &self.ids
    }

    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Voxel counts, `sizes()[id - 1]` for component `id`.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, id: u32) -> usize {
        self.sizes[id as usize - 1]
    }

    pub fn bounding_boxes(&self) -> &[BoundingBox] {
        &self.bounding_boxes
    }

    pub fn bounding_box(&self, id: u32) -> BoundingBox {
        self.bounding_boxes[id as usize - 1]
    }

    pub fn component_ids(&self) -> impl Iterator<Item = u32> {
        1..=self.count() as u32
    }

    /// Linear voxel indices of every component, `voxels()[id - 1]`.
    pub fn voxels(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.sizes.iter().map(|&n| Vec::with_capacity(n)).collect();
        for (idx, &id) in self.ids.data().iter().enumerate() {
            if id > 0 {
                out[id as usize - 1].push(idx);
            }
        }
        out
    }

    fn check_id(&self, id: u32) -> Result<()> {
        if id == 0 || id as usize > self.count() {
            return Err(Error::validation(format!("component id {id} out of range 1..={}", self.count())));
        }
        Ok(())
    }

    /// Binary mask of exactly the voxels holding `id`.
    pub fn extract_component(&self, id: u32) -> Result<Mask> {
        self.check_id(id)?;
        Ok(self.ids.map(|&v| v == id))
    }

    /// Mask of every voxel whose component satisfies `keep`.
    pub fn select(&self, mut keep: impl FnMut(u32) -> bool) -> Mask {
        let flags: Vec<bool> = std::iter::once(false).chain(self.component_ids().map(&mut keep)).collect();
        self.ids.map(|&v| flags[v as usize])
    }
}

#[inline]
fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

/// Label the foreground of `mask` into maximal connected components.
pub fn connected_components(mask: &Mask, conn: Connectivity) -> ComponentLabeling {
    let g = mask.geometry().clone();
    let shape = g.shape;
    let stride = [(shape[1] * shape[2]) as isize, shape[2] as isize, 1isize];
    let causal: Vec<([isize; 3], isize)> =
        conn.causal_offsets().into_iter().map(|d| (d, d[0] * stride[0] + d[1] * stride[1] + d[2])).collect();

    let data = mask.data();
    let mut provisional = vec![0u32; data.len()];
    // parent[0] is unused so provisional label 0 stays "background".
    let mut parent: Vec<u32> = vec![0];

    let mut idx = 0usize;
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            for k in 0..shape[2] {
                if data[idx] {
                    let mut label = 0u32;
                    for &(d, delta) in &causal {
                        let inside = (i as isize + d[0]) >= 0
                            && (j as isize + d[1]) >= 0
                            && (j as isize + d[1]) < shape[1] as isize
                            && (k as isize + d[2]) >= 0
                            && (k as isize + d[2]) < shape[2] as isize;
                        if !inside {
                            continue;
                        }
                        let n = (idx as isize + delta) as usize;
                        let other = provisional[n];
                        if other == 0 {
                            continue;
                        }
                        if label == 0 {
                            label = find(&mut parent, other);
                        } else {
                            let a = find(&mut parent, label);
                            let b = find(&mut parent, other);
                            if a != b {
                                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                                parent[hi as usize] = lo;
                                label = lo;
                            }
                        }
                    }
                    if label == 0 {
                        label = parent.len() as u32;
                        parent.push(label);
                    }
                    provisional[idx] = label;
                }
                idx += 1;
            }
        }
    }

    let mut final_id = vec![0u32; parent.len()];
    let mut sizes = Vec::new();
    let mut boxes: Vec<BoundingBox> = Vec::new();
    for (idx, slot) in provisional.iter_mut().enumerate() {
        if *slot == 0 {
            continue;
        }
        let root = find(&mut parent, *slot) as usize;
        if final_id[root] == 0 {
            sizes.push(0);
            boxes.push(BoundingBox::of_voxel(g.coords(idx)));
            final_id[root] = sizes.len() as u32;
        }
        let id = final_id[root];
        *slot = id;
        sizes[id as usize - 1] += 1;
        boxes[id as usize - 1].include(g.coords(idx));
    }

    ComponentLabeling {
        ids: Volume::from_vec(g, provisional).expect("labeling keeps the mask geometry"),
        sizes,
        bounding_boxes: boxes,
    }
}

/// `radius`-fold iterated unit dilation with the structuring element of `conn`.
pub fn dilate(mask: &Mask, radius: usize, conn: Connectivity) -> Mask {
    let mut out = mask.clone();
    if radius == 0 {
        return out;
    }
    let g = mask.geometry().clone();
    let offsets = conn.offsets();
    let mut frontier: Vec<usize> = mask.data().iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect();
    for _ in 0..radius {
        let mut next = Vec::new();
        let data = out.data_mut();
        for &idx in &frontier {
            let c = g.coords(idx);
            for &d in &offsets {
                if let Some(n) = offset_coords(c, d, g.shape) {
                    let ni = g.index(n);
                    if !data[ni] {
                        data[ni] = true;
                        next.push(ni);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    out
}
