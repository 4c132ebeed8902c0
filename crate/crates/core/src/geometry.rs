//! 4D periodic lattice addressing.
//!
//! Sites live on a torus of extents `nt × nx × ny × nz` (direction 0 is
//! time). The canonical linear ordering is lexicographic with t slowest and
//! z fastest, so `index = ((t·nx + x)·ny + y)·nz + z`. Boundary conditions
//! are periodic in all four directions.

use thiserror::Error;

/// Errors produced by lattice addressing.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    /// Extents below 2 make forward and backward neighbours coincide with
    /// the site itself and are rejected.
    #[error("extent {extent} along axis {axis} is below the minimum of 2")]
    ExtentTooSmall { axis: usize, extent: usize },
    #[error("lattice volume overflows the platform index range")]
    VolumeOverflow,
    #[error("coordinate {value} out of range [0, {extent}) along axis {axis}")]
    CoordOutOfRange {
        axis: usize,
        value: usize,
        extent: usize,
    },
    #[error("site index {index} out of range for volume {volume}")]
    SiteOutOfRange { index: usize, volume: usize },
}

/// The four lattice axes; `T` is direction 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    T = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::T, Axis::X, Axis::Y, Axis::Z];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Axis> {
        Axis::ALL.get(i).copied()
    }
}

/// Hop orientation along an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    Forward,
    Backward,
}

/// One of the eight nearest-neighbour directions (axis μ plus orientation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Direction {
    pub axis: Axis,
    pub orientation: Orientation,
}

impl Direction {
    pub const fn forward(axis: Axis) -> Self {
        Direction {
            axis,
            orientation: Orientation::Forward,
        }
    }

    pub const fn backward(axis: Axis) -> Self {
        Direction {
            axis,
            orientation: Orientation::Backward,
        }
    }

    /// All 8 directions, forward/backward per axis, axis-major.
    pub fn all() -> impl Iterator<Item = Direction> {
        Axis::ALL.into_iter().flat_map(|axis| {
            [Direction::forward(axis), Direction::backward(axis)].into_iter()
        })
    }

    pub fn reversed(self) -> Self {
        Direction {
            axis: self.axis,
            orientation: match self.orientation {
                Orientation::Forward => Orientation::Backward,
                Orientation::Backward => Orientation::Forward,
            },
        }
    }

    pub fn is_forward(self) -> bool {
        self.orientation == Orientation::Forward
    }
}

/// Linear site index in `[0, V)` under the canonical lexicographic ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteIndex(pub usize);

impl SiteIndex {
    #[inline]
    pub fn as_usize(self) -> usize {
        self.0
    }
}

/// Site coordinates `(t, x, y, z)`.
pub type Coords = [usize; 4];

/// Validated lattice extents. All four must be at least 2 and the volume
/// must fit in `usize`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeDims {
    extents: [usize; 4],
    volume: usize,
}

impl LatticeDims {
    pub fn new(nt: usize, nx: usize, ny: usize, nz: usize) -> Result<Self, GeometryError> {
        let extents = [nt, nx, ny, nz];
        for (axis, &extent) in extents.iter().enumerate() {
            if extent < 2 {
                return Err(GeometryError::ExtentTooSmall { axis, extent });
            }
        }
        let volume = extents
            .iter()
            .try_fold(1usize, |acc, &e| acc.checked_mul(e))
            .ok_or(GeometryError::VolumeOverflow)?;
        Ok(LatticeDims { extents, volume })
    }

    /// Hypercubic lattice `l⁴`.
    pub fn hypercubic(l: usize) -> Result<Self, GeometryError> {
        LatticeDims::new(l, l, l, l)
    }

    #[inline]
    pub fn extents(&self) -> [usize; 4] {
        self.extents
    }

    #[inline]
    pub fn extent(&self, axis: Axis) -> usize {
        self.extents[axis.index()]
    }

    /// Number of sites `nt·nx·ny·nz`.
    #[inline]
    pub fn volume(&self) -> usize {
        self.volume
    }

    /// Linear index of a coordinate tuple; errors identify the offending axis.
    pub fn index_of(&self, coords: Coords) -> Result<SiteIndex, GeometryError> {
        for (axis, (&c, &e)) in coords.iter().zip(self.extents.iter()).enumerate() {
            if c >= e {
                return Err(GeometryError::CoordOutOfRange {
                    axis,
                    value: c,
                    extent: e,
                });
            }
        }
        let [t, x, y, z] = coords;
        let [_, nx, ny, nz] = self.extents;
        Ok(SiteIndex(((t * nx + x) * ny + y) * nz + z))
    }

    /// Coordinates of a linear index (inverse of [`index_of`](Self::index_of)).
    pub fn coords_of(&self, site: SiteIndex) -> Result<Coords, GeometryError> {
        if site.0 >= self.volume {
            return Err(GeometryError::SiteOutOfRange {
                index: site.0,
                volume: self.volume,
            });
        }
        let [_, nx, ny, nz] = self.extents;
        let z = site.0 % nz;
        let y = (site.0 / nz) % ny;
        let x = (site.0 / (nz * ny)) % nx;
        let t = site.0 / (nz * ny * nx);
        Ok([t, x, y, z])
    }

    /// Nearest neighbour of `site` in direction `d`, with periodic wrap.
    pub fn neighbor(&self, site: SiteIndex, d: Direction) -> Result<SiteIndex, GeometryError> {
        let mut coords = self.coords_of(site)?;
        let a = d.axis.index();
        let e = self.extents[a];
        coords[a] = match d.orientation {
            Orientation::Forward => (coords[a] + 1) % e,
            Orientation::Backward => (coords[a] + e - 1) % e,
        };
        self.index_of(coords)
    }

    /// Iterator over all sites in canonical order.
    pub fn sites(&self) -> impl Iterator<Item = SiteIndex> {
        (0..self.volume).map(SiteIndex)
    }

    /// Compact `TxXxYxZ` label, e.g. `12x8x8x8`.
    pub fn label(&self) -> String {
        let [t, x, y, z] = self.extents;
        format!("{t}x{x}x{y}x{z}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_extents() {
        assert_eq!(
            LatticeDims::new(1, 2, 2, 2),
            Err(GeometryError::ExtentTooSmall { axis: 0, extent: 1 })
        );
        assert_eq!(
            LatticeDims::new(4, 4, 0, 4),
            Err(GeometryError::ExtentTooSmall { axis: 2, extent: 0 })
        );
    }

    #[test]
    fn origin_and_last_site() {
        let dims = LatticeDims::new(2, 2, 2, 2).unwrap();
        assert_eq!(dims.index_of([0, 0, 0, 0]).unwrap(), SiteIndex(0));
        assert_eq!(dims.index_of([1, 1, 1, 1]).unwrap(), SiteIndex(15));
        assert_eq!(dims.volume(), 16);
    }

    #[test]
    fn index_matches_enumerated_lexicographic_order() {
        // Independent oracle: enumerate all 256 coordinate tuples in
        // lexicographic order (t slowest, z fastest) and locate the tuple.
        let dims = LatticeDims::new(4, 4, 4, 4).unwrap();
        let mut enumerated = Vec::new();
        for t in 0..4 {
            for x in 0..4 {
                for y in 0..4 {
                    for z in 0..4 {
                        enumerated.push([t, x, y, z]);
                    }
                }
            }
        }
        let target = [1, 2, 3, 0];
        let expected = enumerated.iter().position(|c| *c == target).unwrap();
        assert_eq!(dims.index_of(target).unwrap(), SiteIndex(expected));

        // Full bijection against the same enumeration.
        for (i, coords) in enumerated.iter().enumerate() {
            assert_eq!(dims.index_of(*coords).unwrap(), SiteIndex(i));
            assert_eq!(dims.coords_of(SiteIndex(i)).unwrap(), *coords);
        }
    }

    #[test]
    fn out_of_range_coordinate_names_axis() {
        let dims = LatticeDims::new(4, 4, 4, 4).unwrap();
        assert_eq!(
            dims.index_of([0, 4, 0, 0]),
            Err(GeometryError::CoordOutOfRange {
                axis: 1,
                value: 4,
                extent: 4
            })
        );
    }

    #[test]
    fn forward_neighbor_and_wraparound() {
        let dims = LatticeDims::new(2, 2, 2, 2).unwrap();
        let origin = dims.index_of([0, 0, 0, 0]).unwrap();
        let fwd_t = dims.neighbor(origin, Direction::forward(Axis::T)).unwrap();
        assert_eq!(dims.coords_of(fwd_t).unwrap(), [1, 0, 0, 0]);
        let wrapped = dims.neighbor(fwd_t, Direction::forward(Axis::T)).unwrap();
        assert_eq!(wrapped, origin);
    }

    #[test]
    fn neighbors_match_modular_arithmetic_oracle() {
        // Independent oracle: coordinate-wise (c ± 1) mod L.
        let dims = LatticeDims::new(4, 4, 4, 4).unwrap();
        let site = dims.index_of([3, 0, 2, 1]).unwrap();
        for d in Direction::all() {
            let got = dims.neighbor(site, d).unwrap();
            let mut expect = [3usize, 0, 2, 1];
            let a = d.axis.index();
            let l = dims.extents()[a];
            expect[a] = if d.is_forward() {
                (expect[a] + 1) % l
            } else {
                (expect[a] + l - 1) % l
            };
            assert_eq!(dims.coords_of(got).unwrap(), expect);
        }
    }

    #[test]
    fn neighbor_involution_all_sites() {
        for dims in [
            LatticeDims::new(2, 2, 2, 2).unwrap(),
            LatticeDims::new(3, 2, 4, 5).unwrap(),
            LatticeDims::new(4, 2, 3, 2).unwrap(),
        ] {
            for site in dims.sites() {
                for d in Direction::all() {
                    let there = dims.neighbor(site, d).unwrap();
                    let back = dims.neighbor(there, d.reversed()).unwrap();
                    assert_eq!(back, site, "dims {:?} site {:?} dir {:?}", dims, site, d);
                }
            }
        }
    }

    #[test]
    fn neighbor_distinctness_depends_on_extent() {
        // All extents ≥ 3: the 8 neighbours of any site are pairwise distinct.
        let dims = LatticeDims::new(3, 3, 3, 3).unwrap();
        for site in dims.sites() {
            let n: Vec<_> = Direction::all()
                .map(|d| dims.neighbor(site, d).unwrap())
                .collect();
            for i in 0..8 {
                for j in 0..i {
                    assert_ne!(n[i], n[j]);
                }
            }
        }
        // Extent 2: forward and backward along that axis coincide.
        let dims = LatticeDims::new(2, 3, 3, 3).unwrap();
        let site = dims.index_of([0, 1, 1, 1]).unwrap();
        let f = dims.neighbor(site, Direction::forward(Axis::T)).unwrap();
        let b = dims.neighbor(site, Direction::backward(Axis::T)).unwrap();
        assert_eq!(f, b);
    }
}
