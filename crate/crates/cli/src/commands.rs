//! Subcommand implementations.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use boot3d::bootstrap::{
    generate_pairs, self_reconstruction_experiment, write_pair_dir, BenchmarkRun, SelfReconOptions,
    YAW_BUCKET_EDGES,
};
use boot3d::config::PipelineConfig;
use boot3d::geometry::{marching_cubes, TriangleMesh};
use boot3d::io::{read_obj_file, read_ppm_file, read_vxg_file, write_obj_file, write_ppm_file};
use boot3d::metrics::{bar_chart_svg, evaluate_pairs, EvalPair, NmeReport};
use boot3d::pose::estimate_face_frame;
use boot3d::recon::{
    read_synthetic_manifest, read_toy_file, write_synthetic_dataset, write_toy_file, OracleReconstructor,
    Reconstructor, Trainable, SYNTH_MANIFEST,
};
use boot3d::render::{project_colors, render_sweep, Image};
use boot3d::viewgen::build_schedule;
use boot3d::{Error, Result};

use crate::run::{Output, Run};
use crate::{Command, GlobalArgs, ScheduleArgs};

pub fn dispatch(global: &GlobalArgs, command: Command) -> Result<()> {
    let mut cfg = match &global.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    match command {
        Command::ExtractMesh { grid, iso, output } => extract_mesh(&cfg, &grid, iso, &output),
        Command::EstimatePose { mesh, output } => estimate_pose(&cfg, &mesh, &output),
        Command::RenderSweep {
            mesh,
            image,
            schedule,
            output,
        } => {
            override_schedule(&mut cfg, &schedule);
            render_sweep_cmd(&cfg, &mesh, &image, &output)
        }
        Command::GenPairs {
            recon,
            images,
            schedule,
            output,
        } => {
            if let Some(y) = schedule.yaw_set {
                cfg.bootstrap.yaw_set = y;
            }
            if let Some(p) = schedule.pitch_limit {
                cfg.bootstrap.pitch_limit_deg = p;
            }
            gen_pairs(&cfg, &recon, &images, &output)
        }
        Command::BootstrapRun { output } => bootstrap_run(&cfg, &output),
        Command::Evaluate {
            pred,
            gt,
            icp,
            no_icp,
            output,
        } => {
            if icp {
                cfg.eval.align = true;
            }
            if no_icp {
                cfg.eval.align = false;
            }
            evaluate(&cfg, &pred, &gt, &output)
        }
        Command::SelfRecon {
            recon,
            images,
            schedule,
            align,
            output,
        } => {
            override_schedule(&mut cfg, &schedule);
            self_recon(&cfg, &recon, &images, align, &output)
        }
        Command::SynthFaces {
            count,
            yaws,
            pitches,
            output,
        } => synth_faces(&cfg, count, &yaws, &pitches, &output),
    }
}

fn override_schedule(cfg: &mut PipelineConfig, args: &ScheduleArgs) {
    if let Some(y) = &args.yaw_set {
        cfg.schedule.yaw_set = Some(y.clone());
    }
    if let Some(p) = args.pitch_limit {
        cfg.schedule.pitch_limit_deg = p;
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn join_list(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn extract_mesh(cfg: &PipelineConfig, grid: &Path, iso: Option<f64>, output: &Path) -> Result<()> {
    cfg.validate()?;
    let iso = iso.unwrap_or(cfg.grid.iso);
    let mut run = Run::start("extract-mesh", cfg);
    run.param("iso", iso);
    let volume = read_vxg_file(grid)?;
    let mesh = marching_cubes(&volume, iso)?;
    write_obj_file(output, &mesh)?;
    println!("{}: {} vertices, {} triangles", output.display(), mesh.vertices.len(), mesh.triangles.len());
    run.finish(Output::File(output))
}

fn estimate_pose(cfg: &PipelineConfig, mesh: &Path, output: &Path) -> Result<()> {
    cfg.validate()?;
    let run = Run::start("estimate-pose", cfg);
    let frame = estimate_face_frame(&read_obj_file(mesh)?)?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let file = std::fs::File::create(output).map_err(|e| Error::io(output, e))?;
    frame.write_csv(file)?;
    if frame.tie {
        log::warn!("lateral and vertical axes are nearly tied; orientation is unreliable");
    }
    run.finish(Output::File(output))
}

fn render_sweep_cmd(cfg: &PipelineConfig, mesh: &Path, image: &Path, output: &Path) -> Result<()> {
    cfg.validate()?;
    let mut run = Run::start("render-sweep", cfg);
    if let Some(y) = &cfg.schedule.yaw_set {
        run.param("yaw_set", join_list(y));
    }
    run.param("pitch_limit_deg", cfg.schedule.pitch_limit_deg);
    let camera = cfg.camera();
    let source = read_ppm_file(image)?;
    let mesh = read_obj_file(mesh)?;
    let colored = match mesh.vertex_colors {
        Some(_) => mesh,
        None => project_colors(&mesh, &source, &camera)?,
    };
    let frame = estimate_face_frame(&colored)?;
    let schedule = build_schedule(&frame, &cfg.schedule_params())?;
    let views = render_sweep(&colored, &frame, &source, &schedule, &camera)?;
    create_dir(output)?;
    for (k, v) in views.iter().enumerate() {
        let name = format!(
            "view_{k:03}_y{:+04}_p{:+03}.ppm",
            v.yaw_deg.round() as i64,
            v.pitch_deg.round() as i64
        );
        write_ppm_file(&output.join(name), &v.image.quantized())?;
    }
    let path = output.join("schedule.csv");
    schedule.write_csv(std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?)?;
    println!("{}: {} views", output.display(), views.len());
    run.finish(Output::Dir(output))
}

/// `.ppm` files of `dir`, sorted by name, as (stem, path).
fn list_images(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "ppm") {
            let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            out.push((stem, path));
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(Error::InvalidInput(format!("no .ppm images in {}", dir.display())));
    }
    Ok(out)
}

/// Loads the images of `dir` and builds the requested reconstructor. The
/// oracle registers each image with the same-stem `.obj` next to it.
fn load_recon(cfg: &PipelineConfig, spec: &str, dir: &Path) -> Result<(Box<dyn Reconstructor>, Vec<Image>)> {
    let files = list_images(dir)?;
    let images: Vec<Image> = files.iter().map(|(_, p)| read_ppm_file(p)).collect::<Result<_>>()?;
    if spec == "oracle" {
        let mut oracle = OracleReconstructor::new(cfg.oracle_grid());
        for ((stem, _), image) in files.iter().zip(&images) {
            let mesh_path = dir.join(format!("{stem}.obj"));
            if !mesh_path.is_file() {
                return Err(Error::InvalidInput(format!(
                    "oracle needs a mesh for every image; missing {}",
                    mesh_path.display()
                )));
            }
            oracle.register(image, read_obj_file(&mesh_path)?);
        }
        Ok((Box::new(oracle), images))
    } else if let Some(path) = spec.strip_prefix("toy:") {
        Ok((Box::new(read_toy_file(Path::new(path))?), images))
    } else {
        Err(Error::InvalidConfig(format!("unknown reconstructor `{spec}` (expected oracle or toy:<file>)")))
    }
}

fn gen_pairs(cfg: &PipelineConfig, recon: &str, images: &Path, output: &Path) -> Result<()> {
    cfg.validate()?;
    let mut run = Run::start("gen-pairs", cfg);
    run.param("recon", recon);
    run.param("yaw_set", join_list(&cfg.bootstrap.yaw_set));
    run.param("pitch_limit_deg", cfg.bootstrap.pitch_limit_deg);
    let (model, images) = load_recon(cfg, recon, images)?;
    let set = generate_pairs(model.as_ref(), &images, &cfg.bootstrap_config(), &cfg.camera())?;
    write_pair_dir(output, &set.pairs)?;
    let mut skipped = String::from("source_index,reason\n");
    for (i, reason) in &set.skipped {
        skipped.push_str(&format!("{i},\"{}\"\n", reason.replace('"', "'")));
    }
    write_text(&output.join("skipped.csv"), &skipped)?;
    println!("{}: {} pairs, {} images skipped", output.display(), set.pairs.len(), set.skipped.len());
    run.finish(Output::Dir(output))
}

fn bucket_labels() -> Vec<String> {
    YAW_BUCKET_EDGES.windows(2).map(|w| format!("{}-{}", w[0], w[1])).collect()
}

/// max/min over finite bucket means.
fn bucket_ratio(means: &[f64]) -> f64 {
    let finite: Vec<f64> = means.iter().copied().filter(|m| m.is_finite()).collect();
    let max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

fn summary_row(name: &str, yaw_set: &str, pairs: &str, best: &str, report: &NmeReport) -> String {
    let means = report.abs_yaw_means(&YAW_BUCKET_EDGES);
    let cols: Vec<String> = means.iter().map(|m| m.to_string()).collect();
    format!(
        "{name},{yaw_set},{pairs},{best},{},{},{}\n",
        report.mean,
        cols.join(","),
        bucket_ratio(&means)
    )
}

fn bootstrap_run(cfg: &PipelineConfig, output: &Path) -> Result<()> {
    cfg.validate()?;
    let bench = cfg.benchmark_config()?;
    let run = Run::start("bootstrap-run", cfg);
    let (result, base) = BenchmarkRun::execute(&bench, &cfg.benchmark.yaw_sets)?;

    create_dir(output)?;
    write_text(&output.join("config.toml"), &cfg.to_toml())?;
    let mut fit = String::from("epoch,lr,train_loss\n");
    for e in &result.fit_log {
        fit.push_str(&format!("{},{},{}\n", e.epoch, e.lr, e.train_loss));
    }
    write_text(&output.join("fit_log.csv"), &fit)?;
    write_toy_file(&output.join("model_base.toy"), &base)?;
    result.before.write_bundle(&output.join("before"))?;

    let labels = bucket_labels();
    let mut summary = format!("model,yaw_set,pairs,best_epoch,mean,{},max_min_ratio\n", labels.join(","));
    summary.push_str(&summary_row("before", "", "0", "", &result.before));
    let mut bars = Vec::new();
    for (l, m) in labels.iter().zip(result.before.abs_yaw_means(&YAW_BUCKET_EDGES)) {
        bars.push((format!("before {l}"), m));
    }
    for (k, v) in result.variants.iter().enumerate() {
        let name = format!("bootstrap_{k}");
        let dir = output.join(&name);
        v.report.write_bundle(&dir)?;
        let log_path = dir.join("finetune_log.csv");
        v.fine_tune
            .write_log_csv(std::fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?)?;
        write_toy_file(&dir.join("model_best.toy"), &v.model)?;
        if let Some(snap) = v.fine_tune.fixed_epoch_snapshot() {
            let mut fixed = base.clone();
            fixed.restore(snap)?;
            write_toy_file(&dir.join("model_epoch10.toy"), &fixed)?;
        }
        let best = v.fine_tune.best_epoch.map(|e| e.to_string()).unwrap_or_default();
        summary.push_str(&summary_row(&name, &join_list(&v.yaw_set), &v.pairs.to_string(), &best, &v.report));
        for (l, m) in labels.iter().zip(v.report.abs_yaw_means(&YAW_BUCKET_EDGES)) {
            bars.push((format!("{name} {l}"), m));
        }
    }
    write_text(&output.join("summary.csv"), &summary)?;
    write_text(
        &output.join("summary.svg"),
        &bar_chart_svg("Mean NME by |yaw| bucket", "model and |yaw| bucket (deg)", "mean NME", &bars),
    )?;
    print!("{summary}");
    run.finish(Output::Dir(output))
}

/// `.obj` files of `dir` by stem.
fn list_meshes(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "obj") {
            out.push((path.file_stem().unwrap_or_default().to_string_lossy().into_owned(), path));
        }
    }
    out.sort();
    Ok(out)
}

/// Pose of a ground-truth mesh: from a synthetic manifest when the
/// directory has one, else from the estimated gaze direction.
fn gt_pose(mesh: &TriangleMesh, file: &str, manifest: &HashMap<String, (f64, f64)>) -> (f64, f64) {
    if let Some(&p) = manifest.get(file) {
        return p;
    }
    match estimate_face_frame(mesh) {
        Ok(f) => {
            let g = f.gaze;
            (
                g.x.atan2(g.y.hypot(g.z)).to_degrees(),
                (-g.y).atan2(g.z).to_degrees(),
            )
        }
        Err(_) => (f64::NAN, f64::NAN),
    }
}

fn evaluate(cfg: &PipelineConfig, pred: &Path, gt: &Path, output: &Path) -> Result<()> {
    cfg.validate()?;
    let mut run = Run::start("evaluate", cfg);
    run.param("align", cfg.eval.align);
    let manifest: HashMap<String, (f64, f64)> = if gt.join(SYNTH_MANIFEST).is_file() {
        read_synthetic_manifest(gt)?
            .into_iter()
            .map(|r| (r.mesh, (r.yaw_deg, r.pitch_deg)))
            .collect()
    } else {
        HashMap::new()
    };
    let mut pairs = Vec::new();
    for (stem, gt_path) in list_meshes(gt)? {
        let pred_path = pred.join(format!("{stem}.obj"));
        if !pred_path.is_file() {
            log::warn!("no prediction for {stem}");
            continue;
        }
        let gt_mesh = read_obj_file(&gt_path)?;
        let file = gt_path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let (yaw, pitch) = gt_pose(&gt_mesh, &file, &manifest);
        pairs.push(EvalPair {
            id: stem,
            pred: read_obj_file(&pred_path)?,
            gt: gt_mesh,
            yaw_deg: yaw,
            pitch_deg: pitch,
        });
    }
    let report = evaluate_pairs(&pairs, &cfg.eval_options()?)?;
    report.write_bundle(output)?;
    println!(
        "{}: {} pairs, {} scored, mean NME {:.6}",
        output.display(),
        report.rows.len(),
        report.valid_count(),
        report.mean
    );
    run.finish(Output::Dir(output))
}

fn self_recon(cfg: &PipelineConfig, recon: &str, images: &Path, align: bool, output: &Path) -> Result<()> {
    cfg.validate()?;
    let mut run = Run::start("self-recon", cfg);
    run.param("recon", recon);
    run.param("align", align);
    if let Some(y) = &cfg.schedule.yaw_set {
        run.param("yaw_set", join_list(y));
    }
    run.param("pitch_limit_deg", cfg.schedule.pitch_limit_deg);
    let (model, images) = load_recon(cfg, recon, images)?;
    let eval = cfg.eval_options()?;
    let options = SelfReconOptions {
        align,
        mode: eval.mode,
        icp: eval.icp,
        schedule: None,
    };
    let report = self_reconstruction_experiment(model.as_ref(), &images, &cfg.schedule_params(), &cfg.camera(), &options)?;
    report.write_bundle(output)?;
    println!(
        "{}: {} views, {} scored, mean NME {:.6}",
        output.display(),
        report.rows.len(),
        report.valid_count(),
        report.mean
    );
    run.finish(Output::Dir(output))
}

fn synth_faces(cfg: &PipelineConfig, count: usize, yaws: &[f64], pitches: &[f64], output: &Path) -> Result<()> {
    cfg.validate()?;
    let mut run = Run::start("synth-faces", cfg);
    run.param("count", count);
    run.param("yaws", join_list(yaws));
    run.param("pitches", join_list(pitches));
    let seeds: Vec<u64> = (0..count)
        .map(|i| boot3d::bootstrap::face_seed(cfg.seed, boot3d::bootstrap::FaceRole::Source, i))
        .collect();
    let poses: Vec<(f64, f64)> = yaws.iter().flat_map(|&y| pitches.iter().map(move |&p| (y, p))).collect();
    let records = write_synthetic_dataset(output, &seeds, &poses, &cfg.oracle_grid(), &cfg.camera())?;
    println!("{}: {} samples", output.display(), records.len());
    run.finish(Output::Dir(output))
}
