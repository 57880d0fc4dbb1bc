use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vec2;

pub const MIN_RESOLUTION: usize = 8;

/// Rectangular node lattice over a 2-D chart.
///
/// Nodes are stored row-major with axis 0 as the slow index. A periodic axis
/// of length `n` covers `[a, b)` with spacing `(b - a) / n`; index `n` is
/// identified with index 0, so there is no duplicated seam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartGrid {
    extents: [[f64; 2]; 2],
    resolution: [usize; 2],
    periodic: [bool; 2],
}

impl ChartGrid {
    pub fn new(extents: [[f64; 2]; 2], resolution: [usize; 2], periodic: [bool; 2]) -> Result<Self> {
        for axis in 0..2 {
            let [a, b] = extents[axis];
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::InvalidGrid(format!("axis {axis}: extent [{a}, {b}] is empty")));
            }
            if resolution[axis] < MIN_RESOLUTION {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: resolution {} below minimum {MIN_RESOLUTION}",
                    resolution[axis]
                )));
            }
        }
        Ok(ChartGrid { extents, resolution, periodic })
    }

    pub fn extents(&self) -> [[f64; 2]; 2] {
        self.extents
    }

    pub fn resolution(&self) -> [usize; 2] {
        self.resolution
    }

    pub fn periodic(&self) -> [bool; 2] {
        self.periodic
    }

    pub fn len(&self) -> usize {
        self.resolution[0] * self.resolution[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let [a, b] = self.extents[axis];
        let n = self.resolution[axis];
        if self.periodic[axis] {
            (b - a) / n as f64
        } else {
            (b - a) / (n - 1) as f64
        }
    }

    pub fn spacings(&self) -> [f64; 2] {
        [self.spacing(0), self.spacing(1)]
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing(0).min(self.spacing(1))
    }

    pub fn period(&self, axis: usize) -> f64 {
        self.extents[axis][1] - self.extents[axis][0]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.resolution[1] + j
    }

    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx / self.resolution[1], idx % self.resolution[1])
    }

    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        self.extents[axis][0] + k as f64 * self.spacing(axis)
    }

    pub fn node_point(&self, i: usize, j: usize) -> Vec2 {
        [self.coord(0, i), self.coord(1, j)]
    }

    pub fn point(&self, idx: usize) -> Vec2 {
        let (i, j) = self.ij(idx);
        self.node_point(i, j)
    }

    /// Index offset along one axis with wrap-around on periodic axes.
    pub fn offset(&self, axis: usize, k: usize, delta: isize) -> Option<usize> {
        let n = self.resolution[axis] as isize;
        let t = k as isize + delta;
        if self.periodic[axis] {
            Some(t.rem_euclid(n) as usize)
        } else if (0..n).contains(&t) {
            Some(t as usize)
        } else {
            None
        }
    }

    pub fn neighbor(&self, i: usize, j: usize, di: isize, dj: isize) -> Option<usize> {
        let ni = self.offset(0, i, di)?;
        let nj = self.offset(1, j, dj)?;
        Some(self.index(ni, nj))
    }

    /// True when the node sits on the edge of a non-periodic axis.
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        let on = |axis: usize, k: usize| !self.periodic[axis] && (k == 0 || k + 1 == self.resolution[axis]);
        on(0, i) || on(1, j)
    }

    /// Number of cells along an axis (periodic axes close the last cell).
    pub fn cells(&self, axis: usize) -> usize {
        if self.periodic[axis] {
            self.resolution[axis]
        } else {
            self.resolution[axis] - 1
        }
    }

    /// Canonical representative of a coordinate on a periodic axis.
    pub fn wrap(&self, axis: usize, x: f64) -> f64 {
        if !self.periodic[axis] {
            return x;
        }
        let [a, _] = self.extents[axis];
        let p = self.period(axis);
        let w = a + (x - a).rem_euclid(p);
        if w >= a + p {
            a
        } else {
            w
        }
    }

    pub fn wrap_point(&self, p: Vec2) -> Vec2 {
        [self.wrap(0, p[0]), self.wrap(1, p[1])]
    }

    /// Shortest chart displacement `b - a`, using the minimal image on periodic axes.
    pub fn displacement(&self, a: Vec2, b: Vec2) -> Vec2 {
        let mut d = [b[0] - a[0], b[1] - a[1]];
        for (axis, dk) in d.iter_mut().enumerate() {
            if self.periodic[axis] {
                let p = self.period(axis);
                *dk -= p * (*dk / p).round();
            }
        }
        d
    }

    pub fn chart_distance(&self, a: Vec2, b: Vec2) -> f64 {
        let d = self.displacement(a, b);
        d[0].hypot(d[1])
    }

    pub fn contains(&self, p: Vec2) -> bool {
        (0..2).all(|axis| self.periodic[axis] || (p[axis] >= self.extents[axis][0] && p[axis] <= self.extents[axis][1]))
    }

    /// Cell containing `p` and the fractional offsets inside it.
    pub fn locate(&self, p: Vec2) -> Option<([usize; 2], [f64; 2])> {
        if !self.contains(p) {
            return None;
        }
        let mut cell = [0usize; 2];
        let mut frac = [0.0; 2];
        for axis in 0..2 {
            let x = self.wrap(axis, p[axis]);
            let h = self.spacing(axis);
            let t = (x - self.extents[axis][0]) / h;
            let ncell = self.cells(axis);
            let mut k = t.floor().max(0.0) as usize;
            if k >= ncell {
                k = ncell - 1;
            }
            cell[axis] = k;
            frac[axis] = (t - k as f64).clamp(0.0, 1.0);
        }
        Some((cell, frac))
    }

    /// The four corner node indices of a cell, ordered (0,0), (1,0), (1,1), (0,1).
    pub fn cell_corners(&self, cell: [usize; 2]) -> [usize; 4] {
        let i1 = self.offset(0, cell[0], 1).expect("cell index in range");
        let j1 = self.offset(1, cell[1], 1).expect("cell index in range");
        [
            self.index(cell[0], cell[1]),
            self.index(i1, cell[1]),
            self.index(i1, j1),
            self.index(cell[0], j1),
        ]
    }

    /// Bilinear interpolation of node data at a chart point.
    pub fn interpolate(&self, values: &[f64], p: Vec2) -> Option<f64> {
        let (cell, [fx, fy]) = self.locate(p)?;
        let [c00, c10, c11, c01] = self.cell_corners(cell);
        Some(
            (1.0 - fx) * (1.0 - fy) * values[c00]
                + fx * (1.0 - fy) * values[c10]
                + fx * fy * values[c11]
                + (1.0 - fx) * fy * values[c01],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_depends_on_periodicity() {
        let g = ChartGrid::new([[0.0, 1.0], [0.0, 1.0]], [11, 10], [false, true]).unwrap();
        assert!((g.spacing(0) - 0.1).abs() < 1e-15);
        assert!((g.spacing(1) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_coarse_or_empty() {
        assert!(ChartGrid::new([[0.0, 1.0], [0.0, 1.0]], [4, 10], [false; 2]).is_err());
        assert!(ChartGrid::new([[1.0, 1.0], [0.0, 1.0]], [10, 10], [false; 2]).is_err());
    }

    #[test]
    fn periodic_wrap_identifies_seam() {
        let g = ChartGrid::new([[0.0, 1.0], [-1.0, 1.0]], [9, 8], [false, true]).unwrap();
        assert_eq!(g.offset(1, 7, 1), Some(0));
        assert_eq!(g.offset(1, 0, -1), Some(7));
        assert_eq!(g.offset(0, 8, 1), None);
        assert!((g.wrap(1, 1.25) - (-0.75)).abs() < 1e-15);
        let d = g.displacement([0.0, 0.9], [0.0, -0.9]);
        assert!((d[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn interpolation_is_exact_for_bilinear_data() {
        let g = ChartGrid::new([[0.0, 1.0], [0.0, 2.0]], [9, 9], [false, false]).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|k| {
            let p = g.point(k);
            1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1]
        }).collect();
        let p = [0.37, 1.21];
        let v = g.interpolate(&vals, p).unwrap();
        assert!((v - (1.0 + 0.74 - 1.21 + 0.5 * 0.37 * 1.21)).abs() < 1e-13);
    }
}
