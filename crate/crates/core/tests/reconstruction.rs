use multiport::interference::visibility_matrix;
use multiport::matrix::{canonical_gauge, gauge_equivalent, ideal_4x4, random_unitary};
use multiport::reconstruct::{reconstruct, residual_report, residual_table, ReconstructionMode};
use multiport::{Error, MagnitudeGrid, ReconstructionOptions, TransitionMatrix};

fn options(starts: usize, threads: Option<usize>) -> ReconstructionOptions {
    ReconstructionOptions {
        starts,
        seed: 11,
        threads,
        ..Default::default()
    }
}

#[test]
fn worker_count_does_not_change_result() {
    let u = random_unitary(4, 77).unwrap();
    let measured = visibility_matrix(&u).unwrap();
    let mags = MagnitudeGrid::from_matrix(&u);
    let reference = reconstruct(&measured, &mags, &options(12, Some(1))).unwrap();
    for threads in [Some(2), Some(5), None] {
        let other = reconstruct(&measured, &mags, &options(12, threads)).unwrap();
        assert_eq!(other.matrix.entries(), reference.matrix.entries());
        assert_eq!(other.objective.to_bits(), reference.objective.to_bits());
        assert_eq!(other.per_start_objectives, reference.per_start_objectives);
        assert_eq!(other.best_start, reference.best_start);
    }
}

#[test]
fn conjugate_device_gives_same_representative() {
    let u = random_unitary(4, 5).unwrap();
    let mags = MagnitudeGrid::from_matrix(&u);
    let a = reconstruct(&visibility_matrix(&u).unwrap(), &mags, &options(20, None)).unwrap();
    let b = reconstruct(&visibility_matrix(&u.conj()).unwrap(), &mags, &options(20, None)).unwrap();
    assert!(a.matrix.max_abs_diff(&b.matrix).unwrap() < 1e-6);
    assert!(gauge_equivalent(&a.matrix, &u, 1e-4).unwrap());
    assert!(!canonical_gauge(&a.matrix).unwrap().conjugated);
}

#[test]
fn different_seeds_agree_on_identifiable_device() {
    let ideal = ideal_4x4(1.1).unwrap();
    let measured = visibility_matrix(&ideal).unwrap();
    let mags = MagnitudeGrid::from_matrix(&ideal);
    for seed in [0, 1, 99] {
        let opts = ReconstructionOptions {
            seed,
            ..Default::default()
        };
        let result = reconstruct(&measured, &mags, &opts).unwrap();
        assert!(result.objective < 1e-6);
        assert!(gauge_equivalent(&result.matrix, &ideal, 1e-4).unwrap());
    }
}

#[test]
fn joint_refinement_absorbs_magnitude_error() {
    let u = random_unitary(4, 21).unwrap();
    let measured = visibility_matrix(&u).unwrap();
    let noisy: Vec<Vec<f64>> = u
        .rows()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(k, z)| z.norm() * (1.0 + 0.02 * ((i + 2 * k) % 3) as f64 - 0.02))
                .collect()
        })
        .collect();
    let mags = MagnitudeGrid::new(noisy, None).unwrap();
    let fixed = reconstruct(&measured, &mags, &ReconstructionOptions::default()).unwrap();
    let joint = reconstruct(
        &measured,
        &mags,
        &ReconstructionOptions {
            mode: ReconstructionMode::JointRefinement,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(
        joint.objective < fixed.objective,
        "{} vs {}",
        joint.objective,
        fixed.objective
    );
}

#[test]
fn excluded_cells_are_reported_last() {
    let device = TransitionMatrix::identity(3).unwrap();
    let measured = visibility_matrix(&device).unwrap();
    let rows = residual_table(&device, &measured, 1e-9).unwrap();
    assert_eq!(rows.len(), 9);
    let first_excluded = rows
        .iter()
        .position(|r| !r.included)
        .expect("identity has undefined cells");
    assert!(rows[first_excluded..]
        .iter()
        .all(|r| !r.included && r.residual.is_none()));
    assert!(rows[..first_excluded].iter().all(|r| r.residual == Some(0.0)));
}

#[test]
fn report_sorted_by_residual() {
    let u = random_unitary(4, 8).unwrap();
    let measured = visibility_matrix(&u).unwrap();
    let result = reconstruct(&measured, &MagnitudeGrid::from_matrix(&u), &options(4, None)).unwrap();
    let rows = residual_report(&result, &measured).unwrap();
    assert_eq!(rows.len(), 36);
    let abs: Vec<f64> = rows.iter().map(|r| r.residual.unwrap().abs()).collect();
    assert!(abs.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn mismatched_dimensions_rejected() {
    let measured = visibility_matrix(&random_unitary(4, 1).unwrap()).unwrap();
    let mags = MagnitudeGrid::from_matrix(&random_unitary(3, 1).unwrap());
    assert!(matches!(
        reconstruct(&measured, &mags, &ReconstructionOptions::default()),
        Err(Error::Shape(_))
    ));
}
