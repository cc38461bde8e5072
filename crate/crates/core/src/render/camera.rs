use crate::error::{Error, Result};
use crate::geometry::mesh::Vec3;

/// Orthographic camera looking down −z with +y up. Depth is `-z`, so
/// nearer surfaces have smaller depth; only depths in `[near, far]` render.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub center: [f64; 2],
    pub half_extent: [f64; 2],
    pub width: usize,
    pub height: usize,
    pub near: f64,
    pub far: f64,
}

impl Default for Camera {
    fn default() -> Self {
        Camera::square(1.1, 128)
    }
}

impl Camera {
    /// Square view of `[-half, half]²` at `size × size` pixels.
    pub fn square(half: f64, size: usize) -> Self {
        Camera {
            center: [0.0, 0.0],
            half_extent: [half, half],
            width: size,
            height: size,
            near: -100.0,
            far: 100.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_extent[0] > 0.0 && self.half_extent[1] > 0.0) {
            return Err(Error::InvalidConfig("camera view rectangle has zero area".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidConfig("camera image size must be positive".into()));
        }
        if !(self.near < self.far) {
            return Err(Error::InvalidConfig("camera near plane must be before far plane".into()));
        }
        Ok(())
    }

    /// Continuous pixel coordinates of a world point; pixel `(i, j)` covers
    /// `[i, i + 1) × [j, j + 1)`, row 0 at the top.
    #[inline]
    pub fn to_pixel(&self, p: &Vec3) -> (f64, f64) {
        let x0 = self.center[0] - self.half_extent[0];
        let y1 = self.center[1] + self.half_extent[1];
        (
            (p.x - x0) / (2.0 * self.half_extent[0]) * self.width as f64,
            (y1 - p.y) / (2.0 * self.half_extent[1]) * self.height as f64,
        )
    }

    /// World `(x, y)` of the centre of pixel `(i, j)`.
    pub fn pixel_center(&self, i: usize, j: usize) -> (f64, f64) {
        let x0 = self.center[0] - self.half_extent[0];
        let y1 = self.center[1] + self.half_extent[1];
        (
            x0 + (i as f64 + 0.5) * 2.0 * self.half_extent[0] / self.width as f64,
            y1 - (j as f64 + 0.5) * 2.0 * self.half_extent[1] / self.height as f64,
        )
    }

    /// Normalised image coordinates in `[0, 1]²` of a world point.
    pub fn to_uv(&self, p: &Vec3) -> [f64; 2] {
        let (px, py) = self.to_pixel(p);
        [px / self.width as f64, py / self.height as f64]
    }

    #[inline]
    pub fn depth(&self, p: &Vec3) -> f64 {
        -p.z
    }

    pub fn with_size(mut self, width: usize, height: usize) -> Self {
        self.width = width;
        self.height = height;
        self
    }
}
