use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Row-major RGB image with channels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("image dimensions must be positive".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::DimMismatch(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if pixels.iter().flatten().any(|c| !c.is_finite() || *c < 0.0 || *c > 1.0) {
            return Err(Error::InvalidInput("pixel channels must lie in [0, 1]".into()));
        }
        Ok(Image { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Result<Self> {
        Self::new(width, height, vec![rgb; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [f64; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let c = f(x, y);
                pixels.push([c[0].clamp(0.0, 1.0), c[1].clamp(0.0, 1.0), c[2].clamp(0.0, 1.0)]);
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }

    pub(crate) fn set(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        self.pixels[y * self.width + x] = rgb;
    }

    /// Bilinear sample at continuous pixel-centre coordinates; samples
    /// outside the image clamp to the nearest edge.
    pub fn sample_bilinear(&self, u: f64, v: f64) -> [f64; 3] {
        let u = u.clamp(0.0, (self.width - 1) as f64);
        let v = v.clamp(0.0, (self.height - 1) as f64);
        let x0 = u.floor() as usize;
        let y0 = v.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = u - x0 as f64;
        let fy = v - y0 as f64;
        let (a, b, c, d) = (self.get(x0, y0), self.get(x1, y0), self.get(x0, y1), self.get(x1, y1));
        let mut out = [0.0; 3];
        for k in 0..3 {
            let top = a[k] + (b[k] - a[k]) * fx;
            let bottom = c[k] + (d[k] - c[k]) * fx;
            out[k] = (top + (bottom - top) * fy).clamp(0.0, 1.0);
        }
        out
    }

    /// 8-bit representation, as written to PPM.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|p| p.map(|c| (c * 255.0).round() as u8))
            .collect()
    }

    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != width * height * 3 {
            return Err(Error::DimMismatch("rgb8 buffer size".into()));
        }
        let pixels = bytes
            .chunks_exact(3)
            .map(|c| [c[0] as f64 / 255.0, c[1] as f64 / 255.0, c[2] as f64 / 255.0])
            .collect();
        Self::new(width, height, pixels)
    }

    /// Image snapped to the 8-bit grid.
    pub fn quantized(&self) -> Image {
        Self::from_rgb8(self.width, self.height, &self.to_rgb8()).expect("same dimensions")
    }

    /// Content id: SHA-256 over the dimensions and the 8-bit pixels, so an
    /// image and its PPM copy share an id.
    pub fn content_id(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.width as u64).to_le_bytes());
        h.update((self.height as u64).to_le_bytes());
        h.update(self.to_rgb8());
        hex::encode(h.finalize())
    }

    /// Box-filtered grayscale (channel mean) at `size × size`.
    pub fn to_gray(&self, size: usize) -> Vec<f64> {
        let mut out = vec![0.0; size * size];
        for (oy, row) in out.chunks_exact_mut(size).enumerate() {
            let y0 = oy * self.height / size;
            let y1 = ((oy + 1) * self.height / size).max(y0 + 1);
            for (ox, cell) in row.iter_mut().enumerate() {
                let x0 = ox * self.width / size;
                let x1 = ((ox + 1) * self.width / size).max(x0 + 1);
                let mut acc = 0.0;
                for y in y0..y1 {
                    for x in x0..x1 {
                        let p = self.get(x, y);
                        acc += (p[0] + p[1] + p[2]) / 3.0;
                    }
                }
                *cell = acc / ((y1 - y0) * (x1 - x0)) as f64;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_hits_pixel_centres() {
        let img = Image::from_fn(4, 3, |x, y| [x as f64 / 3.0, y as f64 / 2.0, 0.5]).unwrap();
        assert_eq!(img.sample_bilinear(2.0, 1.0), img.get(2, 1));
        let mid = img.sample_bilinear(1.5, 0.0);
        assert!((mid[0] - 0.5).abs() < 1e-15);
        assert_eq!(img.sample_bilinear(-5.0, 10.0), img.get(0, 2));
    }

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(Image::new(1, 1, vec![[1.5, 0.0, 0.0]]).is_err());
        assert!(Image::new(0, 1, vec![]).is_err());
        assert!(Image::new(2, 1, vec![[0.0; 3]]).is_err());
    }

    #[test]
    fn content_id_survives_quantization() {
        let img = Image::from_fn(5, 4, |x, y| [x as f64 * 0.21, y as f64 * 0.13, 0.333]).unwrap();
        assert_eq!(img.content_id(), img.quantized().content_id());
        let other = Image::filled(5, 4, [0.0; 3]).unwrap();
        assert_ne!(img.content_id(), other.content_id());
    }

    #[test]
    fn gray_downsample_averages_blocks() {
        let img = Image::from_fn(4, 4, |x, _| if x < 2 { [0.0; 3] } else { [1.0; 3] }).unwrap();
        assert_eq!(img.to_gray(2), vec![0.0, 1.0, 0.0, 1.0]);
    }
}
