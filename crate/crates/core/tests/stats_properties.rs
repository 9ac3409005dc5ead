use volembed::randgen::{gaussian_cloud, sample_chi_square, RandomSeed};
use volembed::stats::{ordering_violation, verify_gordon, verify_stability};

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len();
    if m % 2 == 1 {
        xs[m / 2]
    } else {
        0.5 * (xs[m / 2 - 1] + xs[m / 2])
    }
}

#[test]
fn chi_square_samples_are_ordered_by_degrees_of_freedom() {
    for d in [3u32, 8, 16] {
        let smaller =
            sample_chi_square(d, 100_000, RandomSeed::with_stream(u64::from(d), 0)).unwrap();
        let larger =
            sample_chi_square(d + 1, 100_000, RandomSeed::with_stream(u64::from(d), 1)).unwrap();
        let v = ordering_violation(&smaller, &larger);
        assert!(v <= 0.01, "d {d}: violation {v}");
        // The reverse ordering is clearly violated.
        assert!(ordering_violation(&larger, &smaller) > 0.05, "d {d}");
    }
}

#[test]
fn gordon_violation_shrinks_with_more_repetitions() {
    let run = |reps: usize| -> f64 {
        median(
            (0..10)
                .map(|i| {
                    verify_gordon(10, 4, reps, 0.01, RandomSeed::with_stream(i, reps as u64))
                        .unwrap()
                        .max_violation
                })
                .collect(),
        )
    };
    let (few, many) = (run(1_000), run(100_000));
    assert!(many < few, "median at 1e5 reps {many}, at 1e3 reps {few}");
}

#[test]
fn gordon_passes_on_several_shapes() {
    for (d, s) in [(10, 4), (6, 3), (8, 4), (12, 2), (5, 1)] {
        let r =
            verify_gordon(d, s, 100_000, 0.01, RandomSeed::new(u64::from(d * 100 + s))).unwrap();
        assert!(r.pass, "d {d} s {s}: {r:?}");
    }
}

#[test]
fn stability_ignores_point_set_scale() {
    let a = gaussian_cloud(6, 10, RandomSeed::new(1)).unwrap();
    let b = gaussian_cloud(6, 40, RandomSeed::new(2)).unwrap();
    let seed = RandomSeed::new(3);
    let plain = verify_stability(&a, &b, 9, 4, 10_000, seed).unwrap();
    let scaled = verify_stability(&a, &b.scaled(1e3).unwrap(), 9, 4, 10_000, seed).unwrap();
    assert!(plain.ks_ab < 0.02, "{plain:?}");
    assert!(scaled.ks_ab < 0.02, "{scaled:?}");
    assert!(scaled.ks_a_product < 0.02, "{scaled:?}");
}
