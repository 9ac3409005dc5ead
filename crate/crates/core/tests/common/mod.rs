#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use nalgebra::DMatrix;

/// `ln` of the volume of the simplex spanned by `points`, from the
/// Cayley–Menger determinant of their squared pairwise distances.
pub fn cayley_menger_log_volume(points: &[&[f64]]) -> f64 {
    let m = points.len();
    let s = m - 1;
    let mut cm = DMatrix::<f64>::zeros(m + 1, m + 1);
    for i in 0..m {
        cm[(0, i + 1)] = 1.0;
        cm[(i + 1, 0)] = 1.0;
        for j in 0..m {
            cm[(i + 1, j + 1)] = points[i]
                .iter()
                .zip(points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
        }
    }
    let sign = if (s + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    let factorial: f64 = (1..=s).map(|i| i as f64).product();
    let squared = sign * cm.determinant() / (2f64.powi(s as i32) * factorial * factorial);
    0.5 * squared.ln()
}

/// Runs the `volembed` binary in `dir`.
pub fn volembed(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_volembed"))
        .args(args)
        .current_dir(dir)
        .env_remove("VOLEMBED_SEED")
        .output()
        .expect("binary runs")
}
