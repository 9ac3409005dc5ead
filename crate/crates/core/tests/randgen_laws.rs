use volembed::gamma::chi_square_cdf;
use volembed::randgen::{gaussian_matrix, sample_chi_square, sample_normal, RandomSeed};
use volembed::stats::{ks_one_sample, ks_two_sample};

const DRAWS: usize = 100_000;

fn normal_cdf(x: f64) -> f64 {
    // Φ(x) = P(1/2, x²/2)/2 + 1/2 for x ≥ 0, by symmetry below zero.
    let half = 0.5 * volembed::gamma::regularized_lower_incomplete_gamma(0.5, 0.5 * x * x).unwrap();
    if x >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

#[test]
fn normal_draws_follow_the_normal_law() {
    let xs = sample_normal(DRAWS, RandomSeed::new(1));
    let ks = ks_one_sample(&xs, normal_cdf);
    assert!(ks < 0.006, "KS {ks}");
}

#[test]
fn matrix_entries_follow_the_normal_law() {
    let m = gaussian_matrix(100, 1000, RandomSeed::new(2)).unwrap();
    let ks = ks_one_sample(m.matrix().as_slice(), normal_cdf);
    assert!(ks < 0.006, "KS {ks}");
}

#[test]
fn chi_square_draws_follow_the_chi_square_law() {
    for dof in [1, 3, 8, 30] {
        let xs = sample_chi_square(dof, DRAWS, RandomSeed::new(u64::from(dof))).unwrap();
        let ks = ks_one_sample(&xs, |x| chi_square_cdf(dof, x.max(0.0)).unwrap());
        assert!(ks < 0.006, "dof {dof}: KS {ks}");
    }
}

#[test]
fn chi_square_matches_sums_of_squared_normals() {
    let dof = 6usize;
    let m = gaussian_matrix(DRAWS, dof, RandomSeed::new(7)).unwrap();
    let sums: Vec<f64> = m
        .matrix()
        .row_iter()
        .map(|r| r.iter().map(|x| x * x).sum())
        .collect();
    let direct = sample_chi_square(dof as u32, DRAWS, RandomSeed::new(8)).unwrap();
    let ks = ks_two_sample(&sums, &direct);
    assert!(ks < 0.01, "KS {ks}");
}

#[test]
fn distinct_streams_are_uncorrelated_and_identically_distributed() {
    let a = sample_normal(DRAWS, RandomSeed::with_stream(5, 0));
    let b = sample_normal(DRAWS, RandomSeed::with_stream(5, 1));
    let c = sample_normal(DRAWS, RandomSeed::new(5).derive(3));
    for (x, y) in [(&a, &b), (&a, &c), (&b, &c)] {
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let cov: f64 = x
            .iter()
            .zip(y.iter())
            .map(|(p, q)| (p - mx) * (q - my))
            .sum();
        let vx: f64 = x.iter().map(|p| (p - mx) * (p - mx)).sum();
        let vy: f64 = y.iter().map(|q| (q - my) * (q - my)).sum();
        let corr = cov / (vx * vy).sqrt();
        assert!(corr.abs() < 0.01, "correlation {corr}");
        // 1% critical value of the two-sample KS statistic: 1.63·sqrt(2/m).
        let ks = ks_two_sample(x, y);
        assert!(ks < 1.63 * (2.0 / n).sqrt(), "KS {ks}");
    }
}

#[test]
fn equal_seeds_are_bit_identical() {
    let s = RandomSeed::with_stream(42, 9);
    assert_eq!(sample_normal(10_000, s), sample_normal(10_000, s));
    assert_eq!(
        sample_chi_square(4, 10_000, s).unwrap(),
        sample_chi_square(4, 10_000, s).unwrap()
    );
    assert_eq!(
        gaussian_matrix(5, 7, s).unwrap(),
        gaussian_matrix(5, 7, s).unwrap()
    );
}
