mod common;

use boot3d::geometry::{icosphere, TriangleMesh, Vec3};
use boot3d::pose::{
    eigen_symmetric3, estimate_face_frame, sample_covariance, symmetry_score, FaceFrame, SymmetricMatrix3,
};
use boot3d::recon::{generate_synthetic_face, SyntheticFaceSpec};
use boot3d::viewgen::{apply_transform, RigidTransform};
use boot3d::Error;
use common::{angle_deg, random_rotation};
use nalgebra::Matrix3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn face(seed: u64) -> TriangleMesh {
    generate_synthetic_face(&SyntheticFaceSpec::random(seed)).unwrap()
}

fn rotated(mesh: &TriangleMesh, r: Matrix3<f64>, t: Vec3) -> TriangleMesh {
    apply_transform(mesh, &RigidTransform::new(r, t).unwrap())
}

fn axes(f: &FaceFrame) -> [Vec3; 3] {
    [f.lateral, f.vertical, f.gaze]
}

/// Points drawn uniformly on the unit sphere, stretched to an ellipsoid.
fn ellipsoid_cloud(seed: u64, semi: Vec3, n: usize) -> TriangleMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec3> = (0..n)
        .map(|_| loop {
            let p = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let r = p.norm();
            if r > 0.05 && r <= 1.0 {
                break (p / r).component_mul(&semi);
            }
        })
        .collect();
    let tris = (0..n as u32 / 3).map(|k| [3 * k, 3 * k + 1, 3 * k + 2]).collect();
    TriangleMesh::new(pts, tris).unwrap()
}

#[test]
fn ellipsoid_principal_axis_follows_longest_semi_axis() {
    let cloud = ellipsoid_cloud(7, Vec3::new(1.0, 2.0, 0.3), 6000);
    let (_, cov) = sample_covariance(&cloud).unwrap();
    let eig = eigen_symmetric3(&cov);
    assert!(angle_deg(&eig[0].vector, &Vec3::y()).min(angle_deg(&-eig[0].vector, &Vec3::y())) < 1.0);
    assert!(angle_deg(&eig[2].vector, &Vec3::z()).min(angle_deg(&-eig[2].vector, &Vec3::z())) < 1.0);
}

#[test]
fn diagonal_and_identity_eigen_systems() {
    let d = SymmetricMatrix3 { xx: 3.0, yy: 2.0, zz: 1.0, xy: 0.0, xz: 0.0, yz: 0.0 };
    let e = eigen_symmetric3(&d);
    let expect = [Vec3::x(), Vec3::y(), Vec3::z()];
    for k in 0..3 {
        assert!((e[k].value - (3 - k) as f64).abs() < 1e-12);
        assert!((e[k].vector.dot(&expect[k]).abs() - 1.0).abs() < 1e-12);
    }
    let id = SymmetricMatrix3::from_matrix(&Matrix3::identity());
    let e = eigen_symmetric3(&id);
    let v = Matrix3::from_columns(&[e[0].vector, e[1].vector, e[2].vector]);
    assert!((v.transpose() * v - Matrix3::identity()).norm() < 1e-10);
    assert!(e.iter().all(|p| (p.value - 1.0).abs() < 1e-12));
}

#[test]
fn canonical_face_frame_matches_generator_axes() {
    for seed in 0..5 {
        let f = estimate_face_frame(&face(seed)).unwrap();
        assert!(angle_deg(&f.lateral, &Vec3::x()) < 2.0, "seed {seed}: lateral {:?}", f.lateral);
        assert!(angle_deg(&f.vertical, &Vec3::y()) < 2.0, "seed {seed}: vertical {:?}", f.vertical);
        assert!(angle_deg(&f.gaze, &Vec3::z()) < 2.0, "seed {seed}: gaze {:?}", f.gaze);
        assert!(!f.tie);
    }
}

#[test]
fn canonical_face_smallest_eigenvector_is_depth() {
    let (_, cov) = sample_covariance(&face(3)).unwrap();
    let e = eigen_symmetric3(&cov);
    assert!(angle_deg(&e[2].vector, &Vec3::z()).min(angle_deg(&-e[2].vector, &Vec3::z())) < 2.0);
}

#[test]
fn face_frame_without_landmarks_keeps_signs() {
    let mut m = face(11);
    m.landmarks.clear();
    let f = estimate_face_frame(&m).unwrap();
    assert!(angle_deg(&f.gaze, &Vec3::z()) < 2.0);
    assert!(angle_deg(&f.vertical, &Vec3::y()) < 2.0);
}

#[test]
fn rotated_face_frame_follows_rotation() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let base = face(5);
    for _ in 0..5 {
        let r = random_rotation(&mut rng, 180.0);
        let f = estimate_face_frame(&rotated(&base, r, Vec3::new(0.3, -1.0, 2.0))).unwrap();
        for (got, canon) in axes(&f).iter().zip([Vec3::x(), Vec3::y(), Vec3::z()]) {
            assert!(angle_deg(got, &(r * canon)) < 2.0);
        }
    }
}

#[test]
fn true_plane_beats_perturbed_planes() {
    let m = face(9);
    let (c, _) = sample_covariance(&m).unwrap();
    let plane_point = Vec3::new(0.0, c.y, c.z);
    let truth = symmetry_score(&m, &plane_point, &Vec3::x()).unwrap();
    assert!(truth < 1e-9, "true plane score {truth}");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        // Random tilt of at least 5 degrees about a random axis orthogonal to x.
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let axis = Vec3::new(0.0, phi.cos(), phi.sin());
        let deg: f64 = rng.random_range(5.0..60.0);
        let n = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), deg.to_radians()) * Vec3::x();
        let s = symmetry_score(&m, &plane_point, &n).unwrap();
        assert!(truth <= s, "{deg} degree tilt scored {s} below {truth}");
    }
    let yawed = nalgebra::Rotation3::from_axis_angle(&Vec3::y_axis(), 30f64.to_radians()) * Vec3::x();
    assert!(symmetry_score(&m, &plane_point, &yawed).unwrap() > truth);
}

#[test]
fn sphere_is_degenerate_or_tied() {
    match estimate_face_frame(&icosphere(Vec3::zeros(), 1.0, 3)) {
        Err(Error::DegenerateInput(_)) => {}
        Ok(f) => assert!(f.tie),
        Err(e) => panic!("unexpected error {e}"),
    }
}

#[test]
fn coplanar_mesh_is_degenerate() {
    let flat = TriangleMesh::new(
        vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::new(1.0, 1.0, 0.0), Vec3::new(2.0, 0.5, 0.0)],
        vec![[0, 1, 2], [1, 3, 2], [1, 4, 3]],
    )
    .unwrap();
    assert!(matches!(estimate_face_frame(&flat), Err(Error::DegenerateInput(_))));
}

fn symmetric_matrix() -> impl Strategy<Value = SymmetricMatrix3> {
    prop::array::uniform6(-5.0..5.0f64).prop_map(|a| SymmetricMatrix3 {
        xx: a[0],
        yy: a[1],
        zz: a[2],
        xy: a[3],
        xz: a[4],
        yz: a[5],
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigen_decomposition_reconstructs(m in symmetric_matrix()) {
        let a = m.to_matrix();
        let e = eigen_symmetric3(&m);
        let v = Matrix3::from_columns(&[e[0].vector, e[1].vector, e[2].vector]);
        let l = Matrix3::from_diagonal(&Vec3::new(e[0].value, e[1].value, e[2].value));
        prop_assert!((v * l * v.transpose() - a).norm() < 1e-9);
        prop_assert!((v.transpose() * v - Matrix3::identity()).abs().max() < 1e-10);
        prop_assert!(e[0].value >= e[1].value && e[1].value >= e[2].value);
        for p in &e {
            prop_assert!((a * p.vector - p.vector * p.value).norm() <= 1e-10 * a.norm().max(1e-300));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn frame_is_equivariant_under_rigid_motion(
        seed in 0u64..1000,
        rot_seed in any::<u64>(),
        t in prop::array::uniform3(-3.0..3.0f64),
    ) {
        let base = face(seed);
        let f0 = estimate_face_frame(&base).unwrap();
        let r = random_rotation(&mut ChaCha8Rng::seed_from_u64(rot_seed), 180.0);
        let f1 = estimate_face_frame(&rotated(&base, r, Vec3::from(t))).unwrap();
        for (a, b) in axes(&f0).iter().zip(axes(&f1)) {
            prop_assert!((r * a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn frame_is_scale_invariant_and_orthonormal(seed in 0u64..1000, s in 0.1..10.0f64) {
        let base = face(seed);
        let f0 = estimate_face_frame(&base).unwrap();
        let f1 = estimate_face_frame(&base.scaled(s)).unwrap();
        for (a, b) in axes(&f0).iter().zip(axes(&f1)) {
            prop_assert!((a - b).norm() < 1e-9);
        }
        for f in [f0, f1] {
            prop_assert!(f.orthonormality_error() < 1e-9);
            prop_assert!(f.eigenvalues[0] >= f.eigenvalues[1] && f.eigenvalues[1] >= f.eigenvalues[2]);
            prop_assert!(f.eigenvalues[2] >= 0.0);
        }
    }
}

#[test]
fn icosphere_mirrors_onto_itself_across_coordinate_planes() {
    let s = icosphere(Vec3::zeros(), 1.0, 3);
    for n in [Vec3::x(), Vec3::y(), Vec3::z()] {
        assert!(symmetry_score(&s, &Vec3::zeros(), &n).unwrap() < 1e-9);
    }
}
