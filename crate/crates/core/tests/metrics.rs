mod common;

use boot3d::geometry::{mesh_bounds, TriangleMesh, Vec3, EYE_OUTER_LEFT, EYE_OUTER_RIGHT};
use boot3d::metrics::{
    closest_point_on_triangle, evaluate_pairs, icp_align, interocular_distance, interocular_proxy, nme, BvhIndex,
    EvalOptions, EvalPair, IcpParams, NmeReport, NmeRow, NormalizerMode, PROXY_FRACTION,
};
use boot3d::recon::{generate_synthetic_face, SyntheticFaceSpec};
use boot3d::viewgen::{apply_transform, RigidTransform};
use boot3d::Error;
use common::{brute_distance, brute_nme, brute_triangle_point, random_rotation, random_soup, rotation_angle_deg};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn face(seed: u64) -> TriangleMesh {
    generate_synthetic_face(&SyntheticFaceSpec::random(seed)).unwrap()
}

/// Regular `n × n` grid over `[-half, half]²` at height `z`.
fn plane(n: usize, half: f64, z: f64) -> TriangleMesh {
    let mut v = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            let s = |k: usize| -half + 2.0 * half * k as f64 / n as f64;
            v.push(Vec3::new(s(i), s(j), z));
        }
    }
    let id = |i: usize, j: usize| (j * (n + 1) + i) as u32;
    let mut t = Vec::new();
    for j in 0..n {
        for i in 0..n {
            t.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            t.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriangleMesh::new(v, t).unwrap()
}

/// Plane with eye landmarks on the vertices at `x = ±half/2`, `y = 0`.
fn plane_with_eyes(n: usize, half: f64) -> TriangleMesh {
    assert!(n.is_multiple_of(4));
    let mut m = plane(n, half, 0.0);
    let row = n / 2 * (n + 1);
    m.landmarks.insert(EYE_OUTER_LEFT.into(), (row + n / 4) as u32);
    m.landmarks.insert(EYE_OUTER_RIGHT.into(), (row + 3 * n / 4) as u32);
    m
}

fn row(id: &str, yaw: f64, nme: Option<f64>) -> NmeRow {
    NmeRow {
        id: id.into(),
        yaw_deg: yaw,
        pitch_deg: 0.0,
        nme,
        aligned: false,
        flags: vec![],
    }
}

fn unaligned(mode: NormalizerMode) -> EvalOptions {
    EvalOptions { align: false, mode, ..Default::default() }
}

#[test]
fn bvh_matches_brute_force_on_random_queries() {
    let mesh = random_soup(11, 300, 500);
    let index = BvhIndex::new(&mesh).unwrap();
    assert!(index.check_invariants());
    assert_eq!(index.triangle_count(), 500);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let q = Vec3::new(rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5));
        let hit = index.closest_point(&q);
        let truth = brute_distance(&q, &mesh);
        assert!((hit.distance - truth).abs() < 1e-12, "{} vs {truth}", hit.distance);
        assert!(((hit.point - q).norm() - hit.distance).abs() < 1e-12);
    }
}

#[test]
fn closest_point_cases() {
    let big = [Vec3::new(-100.0, -100.0, 0.0), Vec3::new(100.0, -100.0, 0.0), Vec3::new(0.0, 100.0, 0.0)];
    let q = Vec3::new(0.3, 0.2, 0.7);
    assert!(((closest_point_on_triangle(&q, &big) - q).norm() - 0.7).abs() < 1e-12);
    let on = Vec3::new(1.0, -2.0, 0.0);
    assert_eq!(closest_point_on_triangle(&on, &big), on);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..500 {
        let t: [Vec3; 3] = std::array::from_fn(|_| Vec3::new(rng.random(), rng.random(), rng.random()));
        let p = Vec3::new(rng.random_range(-1.0..2.0), rng.random_range(-1.0..2.0), rng.random_range(-1.0..2.0));
        let a = closest_point_on_triangle(&p, &t);
        let b = brute_triangle_point(&p, &t);
        assert!(((a - p).norm() - (b - p).norm()).abs() < 1e-12);
    }
    assert!(BvhIndex::new(&TriangleMesh::default()).is_err());
}

#[test]
fn nme_of_identical_and_offset_planes() {
    let gt = plane(8, 2.0, 0.0);
    assert_eq!(nme(&gt, &gt, 0.37).unwrap(), 0.0);
    let pred = plane(6, 1.0, 0.02);
    assert!((nme(&pred, &gt, 1.0).unwrap() - 0.02).abs() < 1e-15);
    assert!(matches!(nme(&pred, &gt, 0.0), Err(Error::InvalidInput(_))));
    assert!(matches!(nme(&pred, &gt, -1.0), Err(Error::InvalidInput(_))));
}

#[test]
fn nme_matches_double_loop_oracle() {
    let pred = random_soup(21, 300, 100);
    let gt = random_soup(22, 150, 200);
    let fast = nme(&pred, &gt, 0.8).unwrap();
    let slow = brute_nme(&pred, &gt, 0.8);
    assert!((fast - slow).abs() < 1e-12);
}

#[test]
fn interocular_distance_and_proxy() {
    let m = plane_with_eyes(8, 0.6);
    assert!((interocular_distance(&m).unwrap() - 0.6).abs() < 1e-15);
    assert!((interocular_distance(&m.scaled(2.0)).unwrap() - 1.2).abs() < 1e-15);
    let mut bare = face(3);
    bare.landmarks.clear();
    assert!(matches!(interocular_distance(&bare), Err(Error::MissingLandmark(_))));
    // The face is symmetric about x = 0, so its lateral axis is x.
    let b = mesh_bounds(&bare).unwrap();
    let expect = PROXY_FRACTION * (b.max.x - b.min.x);
    let got = interocular_proxy(&bare).unwrap();
    assert!((got - expect).abs() / expect < 1e-6, "{got} vs {expect}");
}

#[test]
fn icp_recovers_a_known_motion() {
    let src = face(4);
    let diag = mesh_bounds(&src).unwrap().diagonal();
    let truth = RigidTransform::about_axis(&Vec3::new(0.2, 1.0, 0.3), 15f64.to_radians(), &Vec3::new(0.1, 0.0, 0.2));
    let truth = RigidTransform { translation: truth.translation + Vec3::new(0.05, -0.03, 0.02), ..truth };
    let dst = apply_transform(&src, &truth);
    let fit = icp_align(&src, &dst, &IcpParams::default()).unwrap();
    assert!(rotation_angle_deg(&(fit.transform.rotation.transpose() * truth.rotation)) < 0.5);
    assert!((fit.transform.translation - truth.translation).norm() < 1e-3 * diag);
    assert!(fit.residual < 1e-6, "residual {}", fit.residual);
    for w in fit.history.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", fit.history);
    }
}

#[test]
fn icp_of_identical_meshes_is_identity() {
    let m = face(1);
    let fit = icp_align(&m, &m, &IcpParams::default()).unwrap();
    assert!((fit.transform.rotation - nalgebra::Matrix3::identity()).abs().max() < 1e-9);
    assert!(fit.transform.translation.norm() < 1e-9);
    assert!(fit.residual < 1e-9);
    assert_eq!(fit.iters, 1);
}

#[test]
fn icp_under_vertex_noise() {
    let dst = face(6);
    let diag = mesh_bounds(&dst).unwrap().diagonal();
    let sigma = 1e-3 * diag;
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut src = dst.clone();
    for v in &mut src.vertices {
        *v += Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
    }
    let fit = icp_align(&src, &dst, &IcpParams::default()).unwrap();
    let expect = sigma * 3f64.sqrt();
    assert!(fit.residual > expect / 2.0 && fit.residual < expect * 2.0, "{} vs {expect}", fit.residual);
    assert!(fit.transform.rotation_angle_deg() < 1.0);
    for w in fit.history.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12));
    }
}

#[test]
fn icp_rejects_empty_and_flat_inputs() {
    assert!(icp_align(&TriangleMesh::default(), &face(0), &IcpParams::default()).is_err());
    let line = TriangleMesh::new(
        vec![Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0, Vec3::x() * 3.0],
        vec![[0, 1, 2], [1, 2, 3]],
    )
    .unwrap();
    let fit = icp_align(&line, &plane(4, 1.0, 0.5), &IcpParams::default());
    assert!(matches!(fit, Err(Error::DegenerateAlignment(_))));
}

#[test]
fn known_offsets_aggregate_to_their_mean_and_median() {
    let gt = plane_with_eyes(8, 2.0);
    let d = interocular_distance(&gt).unwrap();
    let pairs: Vec<EvalPair> = [0.01, 0.02, 0.03]
        .iter()
        .enumerate()
        .map(|(i, &k)| EvalPair {
            id: format!("p{i}"),
            pred: plane(4, 1.0, k * d),
            gt: gt.clone(),
            yaw_deg: 0.0,
            pitch_deg: 0.0,
        })
        .collect();
    let rep = evaluate_pairs(&pairs, &unaligned(NormalizerMode::Landmark)).unwrap();
    assert!((rep.mean - 0.02).abs() < 1e-12);
    assert!((rep.median - 0.02).abs() < 1e-12);
}

#[test]
fn identical_pairs_give_a_flat_curve_at_zero() {
    let m = face(2);
    let pairs: Vec<EvalPair> = (0..3)
        .map(|i| EvalPair { id: format!("{i}"), pred: m.clone(), gt: m.clone(), yaw_deg: 0.0, pitch_deg: 0.0 })
        .collect();
    let rep = evaluate_pairs(&pairs, &EvalOptions::default()).unwrap();
    assert!(rep.rows.iter().all(|r| r.nme.unwrap() < 1e-9));
    assert_eq!(rep.curve.len(), 1);
    assert_eq!(rep.curve[0].1, 1.0);
}

#[test]
fn yaw_buckets_count_members() {
    let rows = [-25.0, -15.0, 5.0, 5.0, 44.0].iter().enumerate().map(|(i, &y)| row(&i.to_string(), y, Some(0.01))).collect();
    let rep = NmeReport::from_rows(rows);
    let got: Vec<(f64, f64, usize)> = rep.buckets.iter().map(|b| (b.lo, b.hi, b.count)).collect();
    assert_eq!(got, vec![(-30.0, -20.0, 1), (-20.0, -10.0, 1), (0.0, 10.0, 2), (40.0, 50.0, 1)]);
}

#[test]
fn failed_pairs_are_flagged_rows() {
    let gt = face(1);
    let mut bare = gt.clone();
    bare.landmarks.clear();
    let pairs = vec![
        EvalPair { id: "a".into(), pred: gt.clone(), gt: bare.clone(), yaw_deg: 0.0, pitch_deg: 0.0 },
        EvalPair { id: "b".into(), pred: TriangleMesh::default(), gt: gt.clone(), yaw_deg: 0.0, pitch_deg: 0.0 },
    ];
    let strict = evaluate_pairs(&pairs, &unaligned(NormalizerMode::Landmark)).unwrap();
    assert!(strict.rows.iter().all(|r| r.nme.is_none() && r.flags.iter().any(|f| f.starts_with("error:"))));
    let lenient = evaluate_pairs(&pairs, &unaligned(NormalizerMode::LandmarkOrProxy)).unwrap();
    assert_eq!(lenient.rows[0].nme, Some(0.0));
    assert!(lenient.rows[0].flags.contains(&"proxy_d".to_string()));
    assert!(evaluate_pairs(&[], &EvalOptions::default()).is_err());
}

#[test]
fn rows_csv_round_trip() {
    let rows = vec![row("x", 12.5, Some(0.031)), row("y", -40.0, None)];
    let rep = NmeReport::from_rows(rows);
    let mut buf = Vec::new();
    rep.write_rows_csv(&mut buf).unwrap();
    let back = NmeReport::read_rows_csv(&buf[..]).unwrap();
    assert_eq!(back.rows, rep.rows);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn nme_is_rigid_invariant(seed in any::<u64>(), t in prop::array::uniform3(-3.0..3.0f64)) {
        let pred = random_soup(seed, 40, 30);
        let gt = random_soup(seed ^ 0x5555, 40, 30);
        let r = random_rotation(&mut ChaCha8Rng::seed_from_u64(seed), 180.0);
        let tr = RigidTransform::new(r, Vec3::from(t)).unwrap();
        let a = nme(&pred, &gt, 0.5).unwrap();
        let b = nme(&apply_transform(&pred, &tr), &apply_transform(&gt, &tr), 0.5).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn nme_scales_inversely_with_d(seed in any::<u64>(), d in 0.01..10.0f64) {
        let pred = random_soup(seed, 30, 20);
        let gt = random_soup(seed.wrapping_add(1), 30, 20);
        prop_assert_eq!(nme(&pred, &gt, 2.0 * d).unwrap(), nme(&pred, &gt, d).unwrap() / 2.0);
    }

    #[test]
    fn bvh_exact_on_random_soups(seed in any::<u64>(), nt in 1usize..200) {
        let mesh = random_soup(seed, 60, nt);
        let index = BvhIndex::new(&mesh).unwrap();
        prop_assert!(index.check_invariants());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let q = Vec3::new(rng.random_range(-1.0..2.0), rng.random_range(-1.0..2.0), rng.random_range(-1.0..2.0));
            prop_assert!((index.closest_point(&q).distance - brute_distance(&q, &mesh)).abs() < 1e-12);
        }
    }

    #[test]
    fn curve_is_monotone_and_buckets_partition(
        rows in prop::collection::vec((-90.0..90.0f64, prop::option::of(0.0..0.2f64)), 1..60)
    ) {
        let n = rows.len();
        let rep = NmeReport::from_rows(rows.into_iter().enumerate().map(|(i, (y, v))| row(&format!("{i:03}"), y, v)).collect());
        prop_assert_eq!(rep.buckets.iter().map(|b| b.count).sum::<usize>(), n);
        prop_assert_eq!(rep.buckets.iter().map(|b| b.valid).sum::<usize>(), rep.valid_count());
        for w in rep.curve.windows(2) {
            prop_assert!(w[0].0 < w[1].0 && w[0].1 <= w[1].1);
        }
        prop_assert!(rep.curve.iter().all(|&(_, f)| (0.0..=1.0).contains(&f)));
        if let Some(last) = rep.curve.last() {
            prop_assert_eq!(last.1, 1.0);
        }
    }
}
