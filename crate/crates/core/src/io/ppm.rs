//! Binary PPM (P6, maxval 255).

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::render::Image;

fn err(msg: impl Into<String>) -> Error {
    Error::format("PPM", msg)
}

pub fn write_ppm<W: Write>(mut w: W, image: &Image) -> Result<()> {
    let mut buf = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    buf.extend_from_slice(&image.to_rgb8());
    w.write_all(&buf).map_err(|e| Error::io("<ppm>", e))
}

pub fn read_ppm<R: Read>(mut r: R) -> Result<Image> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io("<ppm>", e))?;
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(err("truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P6" {
        return Err(err("only binary P6 is supported"));
    }
    let mut num = || -> Result<usize> { token()?.parse().map_err(|_| err("bad header number")) };
    let (w, h, maxval) = (num()?, num()?, num()?);
    if maxval != 255 {
        return Err(err(format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    let data = bytes.get(pos + 1..).ok_or_else(|| err("missing raster"))?;
    if data.len() != 3 * w * h {
        return Err(err(format!("expected {} raster bytes, found {}", 3 * w * h, data.len())));
    }
    Image::from_rgb8(w, h, data)
}

pub fn write_ppm_file(path: &Path, image: &Image) -> Result<()> {
    let mut w = super::create(path)?;
    write_ppm(&mut w, image)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_ppm_file(path: &Path) -> Result<Image> {
    read_ppm(super::open(path)?).map_err(|e| super::vxg::with_path(e, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_of_quantized_image() {
        let img = Image::from_fn(5, 3, |x, y| [x as f64 / 4.0, y as f64 / 2.0, 0.3]).unwrap().quantized();
        let mut buf = Vec::new();
        write_ppm(&mut buf, &img).unwrap();
        assert!(buf.starts_with(b"P6\n5 3\n255\n"));
        assert_eq!(read_ppm(buf.as_slice()).unwrap(), img);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut buf = b"P6 # comment\n2 1\n# another\n255\n".to_vec();
        buf.extend_from_slice(&[255, 0, 0, 0, 0, 255]);
        let img = read_ppm(buf.as_slice()).unwrap();
        assert_eq!(img.get(0, 0), [1.0, 0.0, 0.0]);
        assert_eq!(img.get(1, 0), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_ascii_and_short_raster() {
        assert!(read_ppm(&b"P3\n1 1\n255\n0 0 0\n"[..]).is_err());
        assert!(read_ppm(&b"P6\n2 2\n255\n\0\0\0"[..]).is_err());
    }
}
