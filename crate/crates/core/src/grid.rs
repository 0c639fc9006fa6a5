//! Regular Cartesian grids. Storage order is x-fastest:
//! `index = i + nx * (j + ny * k)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::Vec3;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub shape: [usize; 3],
    pub origin: Vec3,
    pub spacing: [f64; 3],
}

impl GridSpec {
    pub fn new(shape: [usize; 3], origin: Vec3, spacing: [f64; 3]) -> Self {
        GridSpec { shape, origin, spacing }
    }

    /// Cubic grid of `n³` points with spacing `h`, centred on the origin so
    /// that the points are `(i - n/2) h`.
    pub fn centered_cube(n: usize, h: f64) -> Self {
        let o = -(n as f64 / 2.0) * h;
        GridSpec { shape: [n; 3], origin: Vec3::new(o, o, o), spacing: [h; 3] }
    }

    pub fn is_valid(&self) -> bool {
        self.shape.iter().all(|n| *n > 0)
            && self.spacing.iter().all(|h| *h > 0.0 && h.is_finite())
            && self.origin.is_finite()
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1] * self.shape[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    /// Edge lengths of the periodic box spanned by the grid.
    pub fn box_lengths(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.shape[a] as f64 * self.spacing[a])
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.shape[0] * (j + self.shape[1] * k)
    }

    /// Index with periodic wrap-around on every axis.
    #[inline]
    pub fn index_wrapped(&self, i: isize, j: isize, k: isize) -> usize {
        let w = |v: isize, n: usize| v.rem_euclid(n as isize) as usize;
        self.index(w(i, self.shape[0]), w(j, self.shape[1]), w(k, self.shape[2]))
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.shape[0];
        let r = idx / self.shape[0];
        [i, r % self.shape[1], r / self.shape[1]]
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.position_frac(i as f64, j as f64, k as f64)
    }

    #[inline]
    pub fn position_frac(&self, i: f64, j: f64, k: f64) -> Vec3 {
        self.origin + Vec3::new(i * self.spacing[0], j * self.spacing[1], k * self.spacing[2])
    }

    pub fn position_of(&self, idx: usize) -> Vec3 {
        let [i, j, k] = self.coords(idx);
        self.position(i, j, k)
    }

    /// Fractional grid coordinates of a point.
    pub fn to_frac(&self, p: Vec3) -> [f64; 3] {
        let d = p - self.origin;
        [d.x / self.spacing[0], d.y / self.spacing[1], d.z / self.spacing[2]]
    }

    /// Whether `p` lies inside the closed bounding box of the grid points.
    pub fn contains(&self, p: Vec3) -> bool {
        let f = self.to_frac(p);
        (0..3).all(|a| f[a] >= 0.0 && f[a] <= (self.shape[a] - 1) as f64)
    }

    pub fn positions(&self) -> Vec<Vec3> {
        (0..self.len()).map(|i| self.position_of(i)).collect()
    }
}

/// A vector field sampled on a grid with an optional validity mask.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorGrid {
    pub spec: GridSpec,
    pub data: Vec<Vec3>,
    /// `false` marks points where the field was not evaluated.
    pub mask: Option<Vec<bool>>,
}

impl VectorGrid {
    pub fn zeros(spec: GridSpec) -> Self {
        VectorGrid { spec, data: vec![Vec3::ZERO; spec.len()], mask: None }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.data[self.spec.index(i, j, k)]
    }

    pub fn is_valid_at(&self, idx: usize) -> bool {
        self.mask.as_ref().map_or(true, |m| m[idx])
    }

    /// Second-order central-difference divergence at interior point
    /// (i, j, k), or `None` on the boundary or next to masked points.
    pub fn divergence_at(&self, i: usize, j: usize, k: usize) -> Option<f64> {
        let [nx, ny, nz] = self.spec.shape;
        if i == 0 || j == 0 || k == 0 || i + 1 >= nx || j + 1 >= ny || k + 1 >= nz {
            return None;
        }
        let s = &self.spec;
        let ids = [
            s.index(i + 1, j, k),
            s.index(i - 1, j, k),
            s.index(i, j + 1, k),
            s.index(i, j - 1, k),
            s.index(i, j, k + 1),
            s.index(i, j, k - 1),
        ];
        if ids.iter().any(|&id| !self.is_valid_at(id)) {
            return None;
        }
        let d = &self.data;
        let h = s.spacing;
        Some(
            (d[ids[0]].x - d[ids[1]].x) / (2.0 * h[0])
                + (d[ids[2]].y - d[ids[3]].y) / (2.0 * h[1])
                + (d[ids[4]].z - d[ids[5]].z) / (2.0 * h[2]),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let g = GridSpec::new([3, 4, 5], Vec3::ZERO, [1.0; 3]);
        for idx in 0..g.len() {
            let [i, j, k] = g.coords(idx);
            assert_eq!(g.index(i, j, k), idx);
        }
        assert_eq!(g.index(1, 0, 0), 1);
        assert_eq!(g.index(0, 1, 0), 3);
        assert_eq!(g.index_wrapped(-1, 4, 5), g.index(2, 0, 0));
    }

    #[test]
    fn centered_cube_positions() {
        let g = GridSpec::centered_cube(4, 0.5);
        assert_eq!(g.position(2, 2, 2), Vec3::ZERO);
        assert_eq!(g.position(0, 0, 0), Vec3::new(-1.0, -1.0, -1.0));
        assert_eq!(g.box_lengths(), [2.0; 3]);
    }

    #[test]
    fn linear_field_divergence() {
        let g = GridSpec::new([5, 5, 5], Vec3::ZERO, [0.5, 1.0, 2.0]);
        let mut v = VectorGrid::zeros(g);
        for idx in 0..g.len() {
            let p = g.position_of(idx);
            v.data[idx] = Vec3::new(2.0 * p.x, -p.y, 3.0 * p.z);
        }
        assert!((v.divergence_at(2, 2, 2).unwrap() - 4.0).abs() < 1e-12);
        assert!(v.divergence_at(0, 2, 2).is_none());
    }
}
