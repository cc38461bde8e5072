//! Pair datasets on disk: `manifest.csv` plus one PPM image and one VXG1
//! grid per pair, with paths relative to the directory.

use std::path::Path;

use crate::bootstrap::{PairProvenance, TrainingPair};
use crate::error::{Error, Result};
use crate::io::{read_ppm_file, read_vxg_file, write_ppm_file, write_vxg_file};
use crate::viewgen::{csv_err, RigidTransform};

pub const PAIR_MANIFEST: &str = "manifest.csv";

const HEADER: [&str; 19] = [
    "image", "grid", "source_index", "source_id", "yaw_deg", "pitch_deg", "r00", "r01", "r02", "r10",
    "r11", "r12", "r20", "r21", "r22", "tx", "ty", "tz", "pair",
];

/// Writes every pair and the manifest. Images must already be 8-bit exact
/// (as produced by pair generation) for a lossless round trip.
pub fn write_pair_dir(dir: &Path, pairs: &[TrainingPair]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = dir.join(PAIR_MANIFEST);
    let file = std::fs::File::create(&manifest).map_err(|e| Error::io(&manifest, e))?;
    let mut wr = csv::Writer::from_writer(file);
    wr.write_record(HEADER).map_err(csv_err)?;
    for (k, p) in pairs.iter().enumerate() {
        let image = format!("pair_{k:05}.ppm");
        let grid = format!("pair_{k:05}.vxg");
        write_ppm_file(&dir.join(&image), &p.image)?;
        write_vxg_file(&dir.join(&grid), &p.target)?;
        let pv = &p.provenance;
        let mut rec = vec![
            image,
            grid,
            pv.source_index.to_string(),
            pv.source_id.clone(),
            pv.yaw_deg.to_string(),
            pv.pitch_deg.to_string(),
        ];
        rec.extend(pv.transform.to_row().iter().map(|v| v.to_string()));
        rec.push(k.to_string());
        wr.write_record(&rec).map_err(csv_err)?;
    }
    wr.flush().map_err(|e| Error::io(&manifest, e))
}

pub fn read_pair_dir(dir: &Path) -> Result<Vec<TrainingPair>> {
    let manifest = dir.join(PAIR_MANIFEST);
    let file = std::fs::File::open(&manifest).map_err(|e| Error::io(&manifest, e))?;
    let mut rd = csv::Reader::from_reader(file);
    let bad = |m: String| Error::format("pair manifest", m);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != HEADER.len() {
            return Err(bad(format!("expected {} columns, found {}", HEADER.len(), rec.len())));
        }
        let num = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(format!("bad number `{}`", &rec[i])));
        let row: Vec<f64> = (6..18).map(num).collect::<Result<_>>()?;
        let transform = RigidTransform::from_row(&row)?;
        out.push(TrainingPair {
            image: read_ppm_file(&dir.join(&rec[0]))?,
            target: read_vxg_file(&dir.join(&rec[1]))?,
            provenance: PairProvenance {
                source_index: rec[2].parse().map_err(|_| bad("bad source index".into()))?,
                source_id: rec[3].to_string(),
                transform,
                yaw_deg: num(4)?,
                pitch_deg: num(5)?,
            },
        });
    }
    Ok(out)
}
