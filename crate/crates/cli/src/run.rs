//! Run bookkeeping: deterministic manifests and a separate timing log.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use boot3d::config::PipelineConfig;
use boot3d::{Error, Result};
use sha2::{Digest, Sha256};

pub const RUN_MANIFEST: &str = "run_manifest.csv";
pub const RUN_LOG: &str = "run.log";

/// Where a run writes: a directory, or a single file whose manifest and log
/// sit next to it.
pub enum Output<'a> {
    Dir(&'a Path),
    File(&'a Path),
}

pub struct Run {
    command: &'static str,
    params: Vec<(String, String)>,
    config_hash: String,
    seed: u64,
    started: SystemTime,
    clock: Instant,
}

impl Run {
    pub fn start(command: &'static str, cfg: &PipelineConfig) -> Self {
        Run {
            command,
            params: Vec::new(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            started: SystemTime::now(),
            clock: Instant::now(),
        }
    }

    /// Records a parameter that affects the outputs.
    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.params.push((key.to_string(), value.to_string()));
    }

    /// Writes the manifest (with digests of every output file) and the log.
    pub fn finish(self, out: Output<'_>) -> Result<()> {
        let (manifest, log, files) = match out {
            Output::Dir(dir) => {
                let mut files = Vec::new();
                collect_files(dir, dir, &mut files)?;
                files.retain(|(rel, _)| rel != RUN_MANIFEST && rel != RUN_LOG);
                (dir.join(RUN_MANIFEST), dir.join(RUN_LOG), files)
            }
            Output::File(path) => {
                let mut files = vec![(file_name(path), path.to_path_buf())];
                let sidecar = boot3d::io::landmark_path(path);
                if sidecar.is_file() {
                    files.push((file_name(&sidecar), sidecar));
                }
                (suffixed(path, ".manifest.csv"), suffixed(path, ".log"), files)
            }
        };
        let f = std::fs::File::create(&manifest).map_err(|e| Error::io(&manifest, e))?;
        let mut wr = csv::Writer::from_writer(f);
        let csv_err = |e: csv::Error| Error::format("csv", e.to_string());
        wr.write_record(["kind", "name", "value"]).map_err(csv_err)?;
        wr.write_record(["run", "tool", concat!("boot3d ", env!("CARGO_PKG_VERSION"))])
            .map_err(csv_err)?;
        wr.write_record(["run", "command", self.command]).map_err(csv_err)?;
        wr.write_record(["run", "config_hash", &self.config_hash]).map_err(csv_err)?;
        wr.write_record(["run", "seed", &self.seed.to_string()]).map_err(csv_err)?;
        for (k, v) in &self.params {
            wr.write_record(["param", k, v]).map_err(csv_err)?;
        }
        for (rel, path) in &files {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            wr.write_record(["output", rel, &hex::encode(Sha256::digest(&bytes))])
                .map_err(csv_err)?;
        }
        wr.flush().map_err(|e| Error::io(&manifest, e))?;

        let unix = |t: SystemTime| t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        let text = format!(
            "command {}\nstarted_unix {:.3}\nfinished_unix {:.3}\nelapsed_s {:.3}\nthreads {}\n",
            self.command,
            unix(self.started),
            unix(SystemTime::now()),
            self.clock.elapsed().as_secs_f64(),
            rayon::current_num_threads(),
        );
        std::fs::write(&log, text).map_err(|e| Error::io(&log, e))
    }
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn suffixed(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Files under `dir`, as (`/`-separated relative path, full path), sorted.
fn collect_files(root: &Path, dir: &Path, out: &mut Vec<(String, PathBuf)>) -> Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else {
            let rel = p.strip_prefix(root).unwrap_or(&p);
            let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            out.push((rel, p));
        }
    }
    out.sort();
    Ok(())
}
