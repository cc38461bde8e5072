//! Synthetic face datasets on disk: one photo (PPM), ground-truth volume
//! (VXG1) and posed mesh (OBJ plus landmark sidecar) per sample, sharing a
//! file stem, listed in `manifest.csv`.

use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{read_ppm_file, read_vxg_file, read_obj_file, write_obj_file, write_ppm_file, write_vxg_file};
use crate::recon::{generate_synthetic_face, photograph_face, ReconGrid, SyntheticFaceSpec};
use crate::render::Camera;
use crate::viewgen::csv_err;

pub const SYNTH_MANIFEST: &str = "manifest.csv";

const HEADER: [&str; 6] = ["image", "grid", "mesh", "yaw_deg", "pitch_deg", "face_seed"];

/// One manifest row; paths are relative to the dataset directory.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRecord {
    pub image: String,
    pub grid: String,
    pub mesh: String,
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub face_seed: u64,
}

impl SyntheticRecord {
    fn new(face_seed: u64, yaw_deg: f64, pitch_deg: f64) -> Self {
        let stem = format!(
            "face_{face_seed:016x}_y{:+04}_p{:+03}",
            yaw_deg.round() as i64,
            pitch_deg.round() as i64
        );
        SyntheticRecord {
            image: format!("{stem}.ppm"),
            grid: format!("{stem}.vxg"),
            mesh: format!("{stem}.obj"),
            yaw_deg,
            pitch_deg,
            face_seed,
        }
    }
}

/// Photographs every face seed at every `(yaw, pitch)` pose and writes the
/// dataset, face-major. Returns the manifest rows.
pub fn write_synthetic_dataset(
    dir: &Path,
    face_seeds: &[u64],
    poses: &[(f64, f64)],
    grid: &ReconGrid,
    camera: &Camera,
) -> Result<Vec<SyntheticRecord>> {
    camera.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let per_face: Vec<Result<Vec<SyntheticRecord>>> = face_seeds
        .par_iter()
        .map(|&seed| {
            let spec = SyntheticFaceSpec::random(seed);
            let face = generate_synthetic_face(&spec)?;
            poses
                .iter()
                .map(|&(yaw, pitch)| {
                    let rec = SyntheticRecord::new(seed, yaw, pitch);
                    let (image, posed) = photograph_face(&spec, &face, yaw, pitch, camera)?;
                    write_ppm_file(&dir.join(&rec.image), &image)?;
                    write_vxg_file(&dir.join(&rec.grid), &grid.voxelize(&posed)?)?;
                    write_obj_file(&dir.join(&rec.mesh), &posed)?;
                    Ok(rec)
                })
                .collect()
        })
        .collect();
    let records: Vec<SyntheticRecord> = per_face.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();

    let manifest = dir.join(SYNTH_MANIFEST);
    let file = std::fs::File::create(&manifest).map_err(|e| Error::io(&manifest, e))?;
    let mut wr = csv::Writer::from_writer(file);
    wr.write_record(HEADER).map_err(csv_err)?;
    for r in &records {
        wr.write_record([
            r.image.clone(),
            r.grid.clone(),
            r.mesh.clone(),
            r.yaw_deg.to_string(),
            r.pitch_deg.to_string(),
            r.face_seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wr.flush().map_err(|e| Error::io(&manifest, e))?;
    Ok(records)
}

pub fn read_synthetic_manifest(dir: &Path) -> Result<Vec<SyntheticRecord>> {
    let manifest = dir.join(SYNTH_MANIFEST);
    let file = std::fs::File::open(&manifest).map_err(|e| Error::io(&manifest, e))?;
    let mut rd = csv::Reader::from_reader(file);
    let bad = |m: String| Error::format("synthetic manifest", m);
    let headers = rd.headers().map_err(csv_err)?;
    if headers.iter().ne(HEADER) {
        return Err(bad(format!("unexpected header {headers:?}")));
    }
    rd.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != HEADER.len() {
                return Err(bad(format!("expected {} columns, found {}", HEADER.len(), rec.len())));
            }
            let num = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(format!("bad number `{}`", &rec[i])));
            Ok(SyntheticRecord {
                image: rec[0].to_string(),
                grid: rec[1].to_string(),
                mesh: rec[2].to_string(),
                yaw_deg: num(3)?,
                pitch_deg: num(4)?,
                face_seed: rec[5].parse().map_err(|_| bad(format!("bad seed `{}`", &rec[5])))?,
            })
        })
        .collect()
}

/// Checks that every file listed in the manifest loads.
pub fn verify_synthetic_dataset(dir: &Path, records: &[SyntheticRecord]) -> Result<()> {
    for r in records {
        read_ppm_file(&dir.join(&r.image))?;
        read_vxg_file(&dir.join(&r.grid))?;
        read_obj_file(&dir.join(&r.mesh))?;
    }
    Ok(())
}
