use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use multiport::dipmodel::{
    self, correct_accidentals, dip_envelope_fwhm, fit_dip, jitter_visibility, synthesize_trace, DipSample, DipTrace,
    SpectralSetup, TraceSynthesis,
};
use multiport::interference::{all_pairs, permanent, permanent_bruteforce, quantum_coincidence, visibility_matrix};
use multiport::matrix::{canonical_gauge, gauge_equivalent, ideal_2x2, ideal_4x4, random_unitary};
use multiport::{ModePair, TransitionMatrix};

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

/// Square matrix whose first row and column stay clear of zero.
fn anchored_matrix(n: usize) -> impl Strategy<Value = TransitionMatrix> {
    (
        prop::collection::vec((0.1f64..1.0, -PI..PI), 2 * n - 1),
        prop::collection::vec(complex(), (n - 1) * (n - 1)),
    )
        .prop_map(move |(anchors, interior)| {
            let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
            for (idx, (mag, phase)) in anchors.into_iter().enumerate() {
                let pos = if idx < n { idx } else { (idx - n + 1) * n };
                entries[pos] = Complex64::from_polar(mag, phase);
            }
            for (idx, z) in interior.into_iter().enumerate() {
                entries[(idx / (n - 1) + 1) * n + idx % (n - 1) + 1] = z;
            }
            TransitionMatrix::from_row_major(n, n, entries).unwrap()
        })
}

fn unit_phases(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-PI..PI).prop_map(|t| Complex64::from_polar(1.0, t)), n)
}

fn setup() -> impl Strategy<Value = SpectralSetup> {
    (700.0f64..1600.0, 0.1f64..10.0, 0.1f64..10.0).prop_map(|(c, a, b)| SpectralSetup::from_nm(c, a, b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ideal_devices_are_unitary(theta in -10.0f64..10.0) {
        prop_assert!(ideal_4x4(theta).unwrap().is_unitary(1e-12));
        prop_assert!(ideal_2x2().is_unitary(1e-12));
    }

    #[test]
    fn visibilities_are_bounded(seed in any::<u64>(), n in 2usize..6) {
        let m = random_unitary(n, seed).unwrap();
        let scaled = m.scaled(Complex64::new(0.7, 0.2));
        for v in [visibility_matrix(&m).unwrap(), visibility_matrix(&scaled).unwrap()] {
            for row in v.values() {
                for x in row.iter().flatten() {
                    prop_assert!((-1.0..=1.0).contains(x), "{x}");
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn canonical_gauge_is_idempotent(m in anchored_matrix(4)) {
        let once = canonical_gauge(&m).unwrap();
        let twice = canonical_gauge(&once.representative).unwrap();
        prop_assert!(!twice.conjugated);
        prop_assert!(once.representative.max_abs_diff(&twice.representative).unwrap() <= 1e-12);
    }

    #[test]
    fn canonical_gauge_keeps_magnitudes(m in anchored_matrix(4)) {
        let canon = canonical_gauge(&m).unwrap().representative;
        for (a, b) in m.magnitudes().iter().zip(canon.magnitudes()) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn rephasing_stays_in_gauge_class(m in anchored_matrix(4), d1 in unit_phases(4), d2 in unit_phases(4)) {
        let moved = m.rephased(&d1, &d2).unwrap();
        prop_assert!(gauge_equivalent(&m, &moved, 1e-9).unwrap());
        prop_assert!(gauge_equivalent(&m, &moved.conj(), 1e-9).unwrap());
    }

    #[test]
    fn visibilities_ignore_gauge_and_conjugation(seed in any::<u64>(), d1 in unit_phases(4), d2 in unit_phases(4)) {
        let m = random_unitary(4, seed).unwrap();
        let base = visibility_matrix(&m).unwrap();
        for other in [m.rephased(&d1, &d2).unwrap(), m.conj()] {
            let v = visibility_matrix(&other).unwrap();
            for (r0, r1) in base.values().iter().zip(v.values()) {
                for (a, b) in r0.iter().zip(r1) {
                    prop_assert!((a.unwrap() - b.unwrap()).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn ryser_matches_permutation_sum(n in 1usize..8, grid in prop::collection::vec(complex(), 49)) {
        let entries = &grid[..n * n];
        let fast = permanent(n, entries).unwrap();
        let slow = permanent_bruteforce(n, entries).unwrap();
        prop_assert!((fast - slow).norm() <= 1e-10 * slow.norm().max(1e-300));
    }

    #[test]
    fn pair_probabilities_match_submatrix_permanent(m in anchored_matrix(4)) {
        for ip in all_pairs(4) {
            for op in all_pairs(4) {
                let q = quantum_coincidence(&m, ip, op).unwrap();
                let (i, j, k, l) = (ip.first() - 1, ip.second() - 1, op.first() - 1, op.second() - 1);
                let sub = [m.at(i, k), m.at(i, l), m.at(j, k), m.at(j, l)];
                let via_perm = permanent(2, &sub).unwrap().norm_sqr();
                prop_assert!((q - via_perm).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn two_photon_outputs_sum_to_one(seed in any::<u64>()) {
        let m = random_unitary(4, seed).unwrap();
        for ip in all_pairs(4) {
            let (i, j) = (ip.first() - 1, ip.second() - 1);
            let separated: f64 = all_pairs(4).into_iter().map(|op| quantum_coincidence(&m, ip, op).unwrap()).sum();
            let bunched: f64 = (0..4).map(|k| 2.0 * (m.at(i, k) * m.at(j, k)).norm_sqr()).sum();
            prop_assert!((separated + bunched - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn fwhm_scales_inversely_with_bandwidth(s in setup(), factor in 0.1f64..10.0) {
        let scaled = SpectralSetup::new(
            s.center_wavelength_um,
            s.bandwidth_a_um * factor,
            s.bandwidth_b_um * factor,
        );
        // scaled bandwidths may exceed the center wavelength
        if let Ok(scaled) = scaled {
            let ratio = dip_envelope_fwhm(&scaled) * factor / dip_envelope_fwhm(&s);
            prop_assert!((ratio - 1.0).abs() <= 1e-12, "{ratio}");
        }
    }

    #[test]
    fn accidental_correction_never_adds_counts(
        rows in prop::collection::vec((0.0f64..1e4, 0.0f64..1e3), 1..40),
    ) {
        let samples: Vec<DipSample> = rows
            .iter()
            .enumerate()
            .map(|(k, &(c, a))| DipSample { delay_um: k as f64, coincidences: c, accidentals: Some(a) })
            .collect();
        let trace = DipTrace::new(samples).unwrap();
        let once = correct_accidentals(&trace).unwrap();
        for (before, after) in trace.samples().iter().zip(once.samples()) {
            prop_assert!(after.coincidences <= before.coincidences);
            prop_assert!(after.coincidences >= 0.0);
        }
        let twice = correct_accidentals(&once).unwrap();
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn noise_free_fit_recovers_parameters(
        s in (700.0f64..1000.0, 0.5f64..4.0, 0.5f64..4.0),
        v_source in 0.3f64..1.0,
        scale in 100.0f64..1e5,
        slope in -0.05f64..0.05,
    ) {
        let setup = SpectralSetup::from_nm(s.0, s.1, s.2).unwrap();
        let mut params = TraceSynthesis::new(setup, scale);
        params.source_visibility = v_source;
        params.slope = slope;
        let half_span = 3.0 * dip_envelope_fwhm(&setup);
        let pair = ModePair::new(1, 2).unwrap();
        let trace = synthesize_trace(&ideal_2x2(), pair, pair, &params, &dipmodel::delay_grid(half_span, 121)).unwrap();
        let fit = fit_dip(&trace).unwrap();
        let rel = |got: f64, want: f64| (got - want).abs() / want.abs().max(1e-12);
        prop_assert!(rel(fit.visibility, v_source) <= 1e-6, "V {} vs {}", fit.visibility, v_source);
        prop_assert!(rel(fit.fwhm_um, dip_envelope_fwhm(&setup)) <= 1e-6);
        prop_assert!(rel(fit.baseline, scale / 2.0) <= 1e-6);
        prop_assert!((fit.slope - slope).abs() <= 1e-6 * slope.abs().max(1e-3));
        prop_assert!(fit.center_um.abs() <= 1e-6 * dip_envelope_fwhm(&setup));
    }
}

#[test]
fn narrower_filters_raise_visibility() {
    let widths = [0.2, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0];
    let jitter = 150e-15;
    let v = |a: f64, b: f64| jitter_visibility(0.985, jitter, &SpectralSetup::from_nm(804.0, a, b).unwrap()).unwrap();
    for &a in &widths {
        for pair in widths.windows(2) {
            assert!(v(a, pair[0]) > v(a, pair[1]), "a={a} b={:?}", pair);
            assert!(v(pair[0], a) > v(pair[1], a), "b={a} a={:?}", pair);
        }
    }
}
