use crate::error::{Error, Result};
use crate::geometry::mesh::{Aabb, Vec3};

/// Dense scalar occupancy volume. Sample `(i, j, k)` sits at
/// `origin + (i, j, k) * spacing` and is stored x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    dims: [usize; 3],
    origin: Vec3,
    spacing: Vec3,
    values: Vec<f64>,
}

impl VoxelGrid {
    /// Builds a grid, clamping values into `[0, 1]`. Non-finite values are rejected.
    pub fn new(dims: [usize; 3], origin: Vec3, spacing: Vec3, mut values: Vec<f64>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidInput(format!("grid dims {dims:?} must be positive")));
        }
        let n = dims[0] * dims[1] * dims[2];
        if values.len() != n {
            return Err(Error::DimMismatch(format!(
                "{} grid values for dims {dims:?}",
                values.len()
            )));
        }
        if !(0..3).all(|k| spacing[k] > 0.0 && spacing[k].is_finite()) {
            return Err(Error::InvalidInput("grid spacing must be positive".into()));
        }
        if !origin.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput("grid origin must be finite".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("grid contains non-finite values".into()));
        }
        values.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        Ok(VoxelGrid {
            dims,
            origin,
            spacing,
            values,
        })
    }

    pub fn filled(dims: [usize; 3], origin: Vec3, spacing: Vec3, value: f64) -> Result<Self> {
        let n = dims.iter().product();
        Self::new(dims, origin, spacing, vec![value; n])
    }

    /// Grid of `n³` cells tiling `bounds`, with samples at cell centres.
    pub fn cell_centered(n: usize, bounds: &Aabb) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("grid resolution must be positive".into()));
        }
        let spacing = bounds.extent() / n as f64;
        let origin = bounds.min + spacing * 0.5;
        Self::filled([n, n, n], origin, spacing, 0.0)
    }

    /// Samples a scalar field at every grid point.
    pub fn from_fn(
        dims: [usize; 3],
        origin: Vec3,
        spacing: Vec3,
        f: impl Fn(Vec3) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(dims.iter().product());
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    values.push(f(origin + spacing.component_mul(&Vec3::new(i as f64, j as f64, k as f64))));
                }
            }
        }
        Self::new(dims, origin, spacing, values)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn spacing(&self) -> Vec3 {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let idx = self.index(i, j, k);
        self.values[idx] = v.clamp(0.0, 1.0);
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + self.spacing.component_mul(&Vec3::new(i as f64, j as f64, k as f64))
    }

    /// Region covered by the grid cells (half a spacing beyond the outer samples).
    pub fn cell_bounds(&self) -> Aabb {
        let half = self.spacing * 0.5;
        let last = self.point(self.dims[0] - 1, self.dims[1] - 1, self.dims[2] - 1);
        Aabb {
            min: self.origin - half,
            max: last + half,
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Copy with every value replaced by `1 - v`.
    pub fn complement(&self) -> VoxelGrid {
        VoxelGrid {
            values: self.values.iter().map(|v| 1.0 - v).collect(),
            ..self.clone()
        }
    }

    pub fn same_layout(&self, other: &VoxelGrid) -> bool {
        self.dims == other.dims && self.origin == other.origin && self.spacing == other.spacing
    }

    pub fn occupied_count(&self, iso: f64) -> usize {
        self.values.iter().filter(|&&v| v > iso).count()
    }

    /// Copy surrounded by one extra layer of `value` on every side; the
    /// original samples keep their world positions.
    pub fn padded(&self, value: f64) -> VoxelGrid {
        let [nx, ny, nz] = self.dims;
        let dims = [nx + 2, ny + 2, nz + 2];
        let mut values = vec![value.clamp(0.0, 1.0); dims.iter().product()];
        for k in 0..nz {
            for j in 0..ny {
                let src = self.index(0, j, k);
                let dst = 1 + dims[0] * ((j + 1) + dims[1] * (k + 1));
                values[dst..dst + nx].copy_from_slice(&self.values[src..src + nx]);
            }
        }
        VoxelGrid {
            dims,
            origin: self.origin - self.spacing,
            spacing: self.spacing,
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding_keeps_sample_positions() {
        let g = VoxelGrid::from_fn([2, 3, 4], Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.5, 0.25, 1.0), |p| {
            (p.x + p.y + p.z) / 10.0
        })
        .unwrap();
        let p = g.padded(0.0);
        assert_eq!(p.dims(), [4, 5, 6]);
        for (i, j, k) in [(0, 0, 0), (1, 2, 3), (0, 1, 2)] {
            assert_eq!(p.get(i + 1, j + 1, k + 1), g.get(i, j, k));
            assert!((p.point(i + 1, j + 1, k + 1) - g.point(i, j, k)).norm() < 1e-15);
        }
        assert_eq!(p.occupied_count(0.0), g.occupied_count(0.0));
    }

    #[test]
    fn construction_clamps_and_validates() {
        let g = VoxelGrid::new([2, 1, 1], Vec3::zeros(), Vec3::repeat(1.0), vec![-0.5, 1.5]).unwrap();
        assert_eq!(g.values(), &[0.0, 1.0]);
        assert!(VoxelGrid::new([2, 1, 1], Vec3::zeros(), Vec3::repeat(1.0), vec![0.0]).is_err());
        assert!(VoxelGrid::new([1, 1, 1], Vec3::zeros(), Vec3::zeros(), vec![0.0]).is_err());
        assert!(VoxelGrid::new([1, 1, 1], Vec3::zeros(), Vec3::repeat(1.0), vec![f64::NAN]).is_err());
        assert!(VoxelGrid::new([0, 1, 1], Vec3::zeros(), Vec3::repeat(1.0), vec![]).is_err());
    }

    #[test]
    fn indexing_is_x_fastest() {
        let g = VoxelGrid::filled([3, 4, 5], Vec3::zeros(), Vec3::repeat(1.0), 0.0).unwrap();
        assert_eq!(g.index(1, 0, 0), 1);
        assert_eq!(g.index(0, 1, 0), 3);
        assert_eq!(g.index(0, 0, 1), 12);
    }

    #[test]
    fn cell_centered_bounds_round_trip() {
        let b = Aabb::cube(1.0);
        let g = VoxelGrid::cell_centered(8, &b).unwrap();
        let cb = g.cell_bounds();
        assert!((cb.min - b.min).norm() < 1e-12 && (cb.max - b.max).norm() < 1e-12);
    }
}
