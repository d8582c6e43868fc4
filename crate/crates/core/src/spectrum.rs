//! Per-direction slot grids, first-fit search, allocation and fragmentation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{DirectedLink, PhysicalTopology};

/// Lower clamp of the normalized network entropy index.
pub const ENTROPY_FLOOR: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum SpectrumError {
    #[error("block [{start}, {end}) does not fit a grid of {slots} slots")]
    OutOfRange {
        start: usize,
        end: usize,
        slots: usize,
    },
    #[error("slot {slot} on directed link {link} is already occupied")]
    Collision { link: usize, slot: usize },
    #[error("slot {slot} on directed link {link} is already free")]
    NotAllocated { link: usize, slot: usize },
    #[error("route is empty")]
    EmptyRoute,
}

/// Contiguous reservation: `data_len` carrier slots followed by
/// `guard_len` guard slots on the upper side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpectrumBlock {
    pub start: usize,
    pub data_len: usize,
    pub guard_len: usize,
}

impl SpectrumBlock {
    pub fn footprint(&self) -> usize {
        self.data_len + self.guard_len
    }

    pub fn end(&self) -> usize {
        self.start + self.footprint()
    }
}

/// Occupancy of one fiber direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotGrid {
    len: usize,
    words: Vec<u64>,
    occupied: usize,
    f_ext: f64,
    f_ent: f64,
}

impl SlotGrid {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
            occupied: 0,
            f_ext: 0.0,
            f_ent: 0.0,
        }
    }

    /// Grid with the given occupancy pattern (`true` = occupied).
    pub fn from_occupancy(pattern: &[bool]) -> Self {
        let mut g = Self::new(pattern.len());
        for (i, &o) in pattern.iter().enumerate() {
            if o {
                g.words[i / 64] |= 1 << (i % 64);
            }
        }
        g.refresh();
        g
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_occupied(&self, slot: usize) -> bool {
        self.words[slot / 64] >> (slot % 64) & 1 == 1
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied
    }

    pub fn free_count(&self) -> usize {
        self.len - self.occupied
    }

    pub fn occupancy(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.is_occupied(i)).collect()
    }

    /// Maximal runs of free slots as `(start, len)`, in slot order.
    pub fn free_blocks(&self) -> Vec<(usize, usize)> {
        free_runs(&self.words, self.len)
    }

    pub fn f_ext(&self) -> f64 {
        self.f_ext
    }

    pub fn f_ent(&self) -> f64 {
        self.f_ent
    }

    fn range_state(&self, start: usize, end: usize) -> (bool, bool) {
        let (mut any_free, mut any_used) = (false, false);
        for i in start..end {
            if self.is_occupied(i) {
                any_used = true;
            } else {
                any_free = true;
            }
        }
        (any_free, any_used)
    }

    fn set_range(&mut self, start: usize, end: usize, value: bool) {
        for i in start..end {
            let bit = 1u64 << (i % 64);
            if value {
                self.words[i / 64] |= bit;
            } else {
                self.words[i / 64] &= !bit;
            }
        }
        self.refresh();
    }

    fn refresh(&mut self) {
        self.occupied = self.words.iter().map(|w| w.count_ones() as usize).sum();
        let blocks = self.free_blocks();
        self.f_ext = external_fragmentation(&blocks);
        self.f_ent = entropy_fragmentation(&blocks, self.len);
    }
}

/// Position of the first bit `>= from` equal to `want`, below `len`.
fn next_bit(words: &[u64], len: usize, from: usize, want: bool) -> Option<usize> {
    if from >= len {
        return None;
    }
    let mut wi = from / 64;
    let mut w = if want { words[wi] } else { !words[wi] };
    w &= u64::MAX << (from % 64);
    loop {
        if w != 0 {
            let pos = wi * 64 + w.trailing_zeros() as usize;
            return (pos < len).then_some(pos);
        }
        wi += 1;
        if wi == words.len() {
            return None;
        }
        w = if want { words[wi] } else { !words[wi] };
    }
}

fn free_runs(occupied: &[u64], len: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(start) = next_bit(occupied, len, pos, false) {
        let end = next_bit(occupied, len, start, true).unwrap_or(len);
        out.push((start, end - start));
        pos = end;
    }
    out
}

fn external_fragmentation(blocks: &[(usize, usize)]) -> f64 {
    let total: usize = blocks.iter().map(|b| b.1).sum();
    if total == 0 {
        return 0.0;
    }
    let largest = blocks.iter().map(|b| b.1).max().unwrap_or(0);
    1.0 - largest as f64 / total as f64
}

fn entropy_fragmentation(blocks: &[(usize, usize)], slots: usize) -> f64 {
    if slots == 0 {
        return 0.0;
    }
    let d = slots as f64;
    let h: f64 = blocks
        .iter()
        .map(|&(_, len)| {
            let p = len as f64 / d;
            -p * p.ln()
        })
        .sum();
    // a single block covering the grid gives -0.0
    h.max(0.0)
}

/// `1 - largest free block / total free slots`; 0 when nothing is free.
pub fn f_ext(grid: &SlotGrid) -> f64 {
    external_fragmentation(&grid.free_blocks())
}

/// Shannon entropy of the free blocks, each weighted by its share of the
/// whole grid (not of the free space).
pub fn f_ent(grid: &SlotGrid) -> f64 {
    entropy_fragmentation(&grid.free_blocks(), grid.len())
}

/// Lowest start at which `data_len + guard_len` slots are free on every grid.
pub fn first_fit(grids: &[&SlotGrid], data_len: usize, guard_len: usize) -> Option<SpectrumBlock> {
    let first = grids.first()?;
    let len = first.len();
    let mut union = first.words.clone();
    for g in &grids[1..] {
        debug_assert_eq!(g.len(), len);
        for (u, w) in union.iter_mut().zip(&g.words) {
            *u |= w;
        }
    }
    let need = data_len + guard_len;
    let mut pos = 0;
    while let Some(start) = next_bit(&union, len, pos, false) {
        if start + need > len {
            return None;
        }
        let end = next_bit(&union, len, start, true).unwrap_or(len);
        if end - start >= need {
            return Some(SpectrumBlock {
                start,
                data_len,
                guard_len,
            });
        }
        pos = end;
    }
    None
}

/// Slot grids of every directed link in a network.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumState {
    slots: usize,
    grids: Vec<SlotGrid>,
}

impl SpectrumState {
    pub fn new(directed_links: usize, slots: usize) -> Self {
        Self {
            slots,
            grids: vec![SlotGrid::new(slots); directed_links],
        }
    }

    pub fn for_topology(topo: &PhysicalTopology, slots: usize) -> Self {
        Self::new(topo.directed_link_count(), slots)
    }

    pub fn slots_per_link(&self) -> usize {
        self.slots
    }

    pub fn grid(&self, link: DirectedLink) -> &SlotGrid {
        &self.grids[link.0]
    }

    pub fn grids(&self) -> &[SlotGrid] {
        &self.grids
    }

    pub fn first_fit(&self, route: &[DirectedLink], data_len: usize, guard_len: usize) -> Option<SpectrumBlock> {
        let grids: Vec<&SlotGrid> = route.iter().map(|l| &self.grids[l.0]).collect();
        first_fit(&grids, data_len, guard_len)
    }

    fn check_range(&self, block: &SpectrumBlock) -> Result<(), SpectrumError> {
        if block.end() > self.slots {
            return Err(SpectrumError::OutOfRange {
                start: block.start,
                end: block.end(),
                slots: self.slots,
            });
        }
        Ok(())
    }

    /// Occupies the block's footprint on every link of the route, or on none.
    pub fn allocate(&mut self, route: &[DirectedLink], block: &SpectrumBlock) -> Result<(), SpectrumError> {
        if route.is_empty() {
            return Err(SpectrumError::EmptyRoute);
        }
        self.check_range(block)?;
        for l in route {
            let g = &self.grids[l.0];
            if g.range_state(block.start, block.end()).1 {
                let slot = (block.start..block.end())
                    .find(|&i| g.is_occupied(i))
                    .expect("some slot is occupied");
                return Err(SpectrumError::Collision { link: l.0, slot });
            }
        }
        for l in route {
            self.grids[l.0].set_range(block.start, block.end(), true);
        }
        Ok(())
    }

    /// Frees the block's footprint on every link of the route, or on none.
    pub fn release(&mut self, route: &[DirectedLink], block: &SpectrumBlock) -> Result<(), SpectrumError> {
        if route.is_empty() {
            return Err(SpectrumError::EmptyRoute);
        }
        self.check_range(block)?;
        for l in route {
            let g = &self.grids[l.0];
            if g.range_state(block.start, block.end()).0 {
                let slot = (block.start..block.end())
                    .find(|&i| !g.is_occupied(i))
                    .expect("some slot is free");
                return Err(SpectrumError::NotAllocated { link: l.0, slot });
            }
        }
        for l in route {
            self.grids[l.0].set_range(block.start, block.end(), false);
        }
        Ok(())
    }

    /// Mean external fragmentation over all directed links.
    pub fn network_f_ext(&self) -> f64 {
        if self.grids.is_empty() {
            return 0.0;
        }
        self.grids.iter().map(SlotGrid::f_ext).sum::<f64>() / self.grids.len() as f64
    }

    /// Sum of per-link entropy over all directed links.
    pub fn network_f_ent_raw(&self) -> f64 {
        self.grids.iter().map(SlotGrid::f_ent).sum()
    }

    /// Network entropy index in `[ENTROPY_FLOOR, 1]`.
    ///
    /// Each link's entropy is divided by `ln(S/2)`, the links are averaged
    /// and the result is clamped. Grids of two slots or fewer have no usable
    /// normalizer and count as fully fragmented whenever their entropy is
    /// positive.
    pub fn network_f_ent_normalized(&self) -> f64 {
        if self.grids.is_empty() {
            return ENTROPY_FLOOR;
        }
        let norm = (self.slots as f64 / 2.0).ln();
        let mean = self
            .grids
            .iter()
            .map(|g| {
                if norm > 0.0 {
                    g.f_ent() / norm
                } else if g.f_ent() > 0.0 {
                    1.0
                } else {
                    0.0
                }
            })
            .sum::<f64>()
            / self.grids.len() as f64;
        mean.clamp(ENTROPY_FLOOR, 1.0)
    }

    pub fn total_occupied(&self) -> usize {
        self.grids.iter().map(SlotGrid::occupied_count).sum()
    }

    pub fn is_all_free(&self) -> bool {
        self.total_occupied() == 0
    }

    /// Text dump of every directed link, one line each:
    ///
    /// `<index> <from>-><to> <occupied>/<slots> <map>`
    ///
    /// where `<map>` has one character per slot, `#` occupied and `.` free.
    pub fn snapshot(&self, topo: &PhysicalTopology) -> String {
        let mut out = String::new();
        for (i, g) in self.grids.iter().enumerate() {
            let (from, to) = topo.endpoints(DirectedLink(i));
            let map: String = (0..g.len())
                .map(|s| if g.is_occupied(s) { '#' } else { '.' })
                .collect();
            let _ = writeln!(out, "{i} {from}->{to} {}/{} {map}", g.occupied_count(), g.len());
        }
        out
    }
}
