//! Partitions of the coordinate set `[n]`, given implicitly by a map from
//! coordinate to part identifier.

use crate::error::{invalid, Result};

pub trait Partition: Send + Sync {
    /// Dimension `n` of the ambient signal.
    fn dim(&self) -> usize;

    /// Part holding coordinate `i`, or `None` when `i` lies outside the
    /// domain this partition covers.
    fn part_of(&self, i: usize) -> Option<u64>;

    fn part_count(&self) -> u64;

    /// Every part identifier, ascending.
    fn parts(&self) -> Box<dyn Iterator<Item = u64> + '_>;

    fn contains_part(&self, part: u64) -> bool;
}

impl<P: Partition + ?Sized> Partition for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn part_of(&self, i: usize) -> Option<u64> {
        (**self).part_of(i)
    }
    fn part_count(&self) -> u64 {
        (**self).part_count()
    }
    fn parts(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        (**self).parts()
    }
    fn contains_part(&self, part: u64) -> bool {
        (**self).contains_part(part)
    }
}

impl<P: Partition + ?Sized> Partition for std::sync::Arc<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn part_of(&self, i: usize) -> Option<u64> {
        (**self).part_of(i)
    }
    fn part_count(&self) -> u64 {
        (**self).part_count()
    }
    fn parts(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        (**self).parts()
    }
    fn contains_part(&self, part: u64) -> bool {
        (**self).contains_part(part)
    }
}

/// Contiguous intervals `{0..w}, {w..2w}, ...` of `[n]`; the last may be short.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IntervalPartition {
    n: usize,
    width: usize,
}

impl IntervalPartition {
    pub fn new(n: usize, width: usize) -> Result<Self> {
        if n == 0 || width == 0 {
            return Err(invalid("interval partition needs n >= 1 and width >= 1"));
        }
        Ok(Self { n, width })
    }

    /// Intervals of width `ceil(n / parts)`.
    pub fn with_parts(n: usize, parts: usize) -> Result<Self> {
        if parts == 0 || parts > n.max(1) {
            return Err(invalid(format!("cannot split n = {n} into {parts} parts")));
        }
        Self::new(n, n.div_ceil(parts))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Coordinates of part `p`.
    pub fn span(&self, p: u64) -> std::ops::Range<usize> {
        let start = p as usize * self.width;
        start..(start + self.width).min(self.n)
    }
}

impl Partition for IntervalPartition {
    fn dim(&self) -> usize {
        self.n
    }
    fn part_of(&self, i: usize) -> Option<u64> {
        (i < self.n).then(|| (i / self.width) as u64)
    }
    fn part_count(&self) -> u64 {
        self.n.div_ceil(self.width) as u64
    }
    fn parts(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        Box::new(0..self.part_count())
    }
    fn contains_part(&self, part: u64) -> bool {
        part < self.part_count()
    }
}

/// A partition given by an explicit coordinate-to-part table over `0..count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitPartition {
    table: Vec<u64>,
    count: u64,
}

impl ExplicitPartition {
    pub fn new(table: Vec<u64>, count: u64) -> Result<Self> {
        if let Some(bad) = table.iter().find(|&&p| p >= count) {
            return Err(invalid(format!("part {bad} outside 0..{count}")));
        }
        Ok(Self { table, count })
    }
}

impl Partition for ExplicitPartition {
    fn dim(&self) -> usize {
        self.table.len()
    }
    fn part_of(&self, i: usize) -> Option<u64> {
        self.table.get(i).copied()
    }
    fn part_count(&self) -> u64 {
        self.count
    }
    fn parts(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        Box::new(0..self.count)
    }
    fn contains_part(&self, part: u64) -> bool {
        part < self.count
    }
}
