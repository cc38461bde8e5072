//! File formats: VXG1 grids, ASCII OBJ meshes with a landmark sidecar, and
//! binary PPM images.

mod obj;
mod ppm;
mod vxg;

use std::path::Path;

use crate::error::{Error, Result};

pub use obj::{read_landmarks, read_obj, read_obj_file, write_landmarks, write_obj, write_obj_file};
pub use ppm::{read_ppm, read_ppm_file, write_ppm, write_ppm_file};
pub use vxg::{
    read_vxg, read_vxg_file, read_vxg_raw, write_depth_file, write_vxg, write_vxg_file,
    write_vxg_raw, RawVolume, VXG_MAGIC, VXG_VERSION,
};

pub(crate) fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}

pub(crate) fn open(path: &Path) -> Result<std::io::BufReader<std::fs::File>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufReader::new(f))
}

/// Landmark sidecar path for an OBJ file: `face.obj` -> `face.landmarks.txt`.
pub fn landmark_path(obj: &Path) -> std::path::PathBuf {
    obj.with_extension("landmarks.txt")
}
