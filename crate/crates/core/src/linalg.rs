//! Point sets, linear maps, and simplex volumes.
//!
//! Volumes are only ever handled as natural logarithms. The volume of the
//! simplex spanned by `k` points `p_1..p_k` is `sqrt(det(PᵀP)) / (k-1)!`
//! where `P = [p_2 - p_1, ..., p_k - p_1]` is the `N×(k-1)` difference
//! matrix. The determinant is never formed: `P` is reduced by Householder
//! QR and the singular values of the triangular factor are obtained with
//! one-sided Jacobi rotations, so `log vol = Σ log σ_i - log((k-1)!)`.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Default relative rank tolerance: a singular value below
/// `DEFAULT_RANK_TOL * σ_max` marks the simplex as degenerate.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 60;

/// An ordered collection of `n ≥ 2` points in `R^N`, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if let Some((i, p)) = points.iter().enumerate().find(|(_, p)| p.len() != dim) {
            return Err(Error::InvalidInput(format!(
                "point {i} has dimension {} but point 0 has dimension {dim}",
                p.len()
            )));
        }
        Self::from_flat(dim, points.into_iter().flatten().collect())
    }

    /// Builds a point set from row-major coordinates (`coords.len() = n * dim`).
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput(
                "ambient dimension must be at least 1".into(),
            ));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        let n = coords.len() / dim;
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 points, got {n}"
            )));
        }
        if let Some(x) = coords.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite coordinate {x}")));
        }
        Ok(Self { dim, coords })
    }

    /// Number of points `n`.
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Ambient dimension `N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Vec<&[f64]> {
        indices.iter().map(|&i| self.point(i)).collect()
    }

    /// Shifts every point by `shift`.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "shift has dimension {} but points have dimension {}",
                shift.len(),
                self.dim
            )));
        }
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().zip(shift).map(|(x, v)| x + v))
            .collect();
        Self::from_flat(self.dim, coords)
    }

    /// Multiplies every coordinate by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_flat(self.dim, self.coords.iter().map(|x| x * factor).collect())
    }
}

/// A linear map `x ↦ scale · (matrix · x)` from `R^N` to `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
    scale: f64,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>, scale: f64) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::InvalidInput("map matrix must be non-empty".into()));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Self { matrix, scale })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
            scale: 1.0,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Output dimension `d`.
    pub fn target_dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Input dimension `N`.
    pub fn source_dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Same matrix, scale multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.matrix.clone(), self.scale * factor)
    }

    /// The matrix with the scale folded in.
    pub fn effective_matrix(&self) -> DMatrix<f64> {
        &self.matrix * self.scale
    }

    fn apply_into(&self, x: &[f64], out: &mut Vec<f64>) {
        let (d, n) = self.matrix.shape();
        for r in 0..d {
            let mut acc = 0.0;
            for (c, xc) in x.iter().enumerate().take(n) {
                acc += self.matrix[(r, c)] * xc;
            }
            out.push(self.scale * acc);
        }
    }
}

/// Natural log of a simplex volume, or a marker for zero volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogVolume {
    value: f64,
    degenerate: bool,
}

impl LogVolume {
    pub fn new(value: f64) -> Self {
        Self {
            value,
            degenerate: false,
        }
    }

    pub fn degenerate() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            degenerate: true,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// `None` when the volume is zero.
    pub fn value(&self) -> Option<f64> {
        (!self.degenerate).then_some(self.value)
    }
}

fn check_same_dim(points: &[&[f64]]) -> Result<usize> {
    let dim = points.first().map(|p| p.len()).unwrap_or(0);
    if dim == 0 {
        return Err(Error::InvalidInput(
            "points must have dimension at least 1".into(),
        ));
    }
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: {} vs {dim}",
            p.len()
        )));
    }
    Ok(dim)
}

/// The `N×(k-1)` matrix whose column `j` is `p_{j+1} - p_1`.
pub fn difference_matrix(points: &[&[f64]]) -> Result<DMatrix<f64>> {
    if points.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    let dim = check_same_dim(points)?;
    let base = points[0];
    Ok(DMatrix::from_fn(dim, points.len() - 1, |r, c| {
        points[c + 1][r] - base[r]
    }))
}

/// Log of the `(k-1)`-dimensional volume of the simplex spanned by `points`.
pub fn log_simplex_volume(points: &[&[f64]], rank_tol: f64) -> Result<LogVolume> {
    if points.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    let dim = check_same_dim(points)?;
    let mut ws = VolumeWorkspace::default();
    Ok(ws.log_volume(points.iter().copied(), dim, rank_tol))
}

/// Applies `f` to every point of `points`.
pub fn apply_map(f: &LinearMap, points: &PointSet) -> Result<PointSet> {
    if f.source_dim() != points.dim() {
        return Err(Error::InvalidInput(format!(
            "map expects dimension {} but points have dimension {}",
            f.source_dim(),
            points.dim()
        )));
    }
    let mut coords = Vec::with_capacity(points.len() * f.target_dim());
    for p in points.iter() {
        f.apply_into(p, &mut coords);
    }
    PointSet::from_flat(f.target_dim(), coords)
}

/// Checks that every subset of size `2..=k` is affinely independent.
///
/// Sizes are scanned in increasing order, so a returned witness is a
/// smallest offending subset (as indices into `points`).
pub fn general_position_check(
    points: &PointSet,
    k: usize,
    rank_tol: f64,
) -> (bool, Option<Vec<usize>>) {
    let k = k.min(points.len());
    let mut ws = VolumeWorkspace::default();
    for size in 2..=k {
        for subset in crate::subsets::Combinations::new(points.len(), size) {
            let vol = ws.log_volume(
                subset.iter().map(|&i| points.point(i)),
                points.dim(),
                rank_tol,
            );
            if vol.is_degenerate() {
                return (false, Some(subset));
            }
        }
    }
    (true, None)
}

/// Scratch buffers for repeated volume evaluations without reallocation.
#[derive(Debug, Default, Clone)]
pub struct VolumeWorkspace {
    cols: Vec<f64>,
    tri: Vec<f64>,
}

impl VolumeWorkspace {
    /// Log volume of the simplex spanned by `points` (each of length `dim`).
    pub fn log_volume<'a, I>(&mut self, points: I, dim: usize, rank_tol: f64) -> LogVolume
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut it = points.into_iter();
        let Some(base) = it.next() else {
            return LogVolume::degenerate();
        };
        self.cols.clear();
        let mut ncols = 0;
        for p in it {
            self.cols.extend(p.iter().zip(base).map(|(x, b)| x - b));
            ncols += 1;
        }
        match log_det_gram_sqrt(&mut self.cols, &mut self.tri, dim, ncols, rank_tol) {
            Some(logdet) => LogVolume::new(logdet - ln_factorial(ncols)),
            None => LogVolume::degenerate(),
        }
    }
}

fn ln_factorial(m: usize) -> f64 {
    (2..=m).map(|i| (i as f64).ln()).sum()
}

/// `log sqrt(det(AᵀA))` for a column-major `rows×cols` matrix `a`, or `None`
/// if `A` is numerically rank deficient. Destroys `a`.
fn log_det_gram_sqrt(
    a: &mut [f64],
    tri: &mut Vec<f64>,
    rows: usize,
    cols: usize,
    rank_tol: f64,
) -> Option<f64> {
    if cols == 0 {
        return Some(0.0);
    }
    if cols > rows {
        return None;
    }
    householder_r(a, rows, cols);

    // Copy the upper-triangular factor into a dense cols×cols buffer.
    tri.clear();
    tri.resize(cols * cols, 0.0);
    for c in 0..cols {
        for r in 0..=c {
            tri[c * cols + r] = a[c * rows + r];
        }
    }
    jacobi_orthogonalize(tri, cols);

    let mut sigma_max = 0.0f64;
    let mut log_sum = 0.0;
    let mut sigma_min = f64::INFINITY;
    for c in 0..cols {
        let sigma = norm(&tri[c * cols..(c + 1) * cols]);
        sigma_max = sigma_max.max(sigma);
        sigma_min = sigma_min.min(sigma);
        log_sum += sigma.ln();
    }
    if !(sigma_max > 0.0) || sigma_min < rank_tol * sigma_max {
        return None;
    }
    Some(log_sum)
}

fn norm(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let ss: f64 = v.iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * ss.sqrt()
}

/// In-place Householder reduction of a column-major `rows×cols` matrix; on
/// return the upper triangle holds `R`.
fn householder_r(a: &mut [f64], rows: usize, cols: usize) {
    for k in 0..cols {
        let col = &a[k * rows + k..(k + 1) * rows];
        let alpha = norm(col);
        if alpha == 0.0 {
            continue;
        }
        let x0 = col[0];
        let beta = if x0 >= 0.0 { -alpha } else { alpha };
        // v = x - beta e1, stored in place of the column below the diagonal.
        let v0 = x0 - beta;
        let mut vnorm2 = v0 * v0;
        for r in k + 1..rows {
            vnorm2 += a[k * rows + r] * a[k * rows + r];
        }
        a[k * rows + k] = v0;
        if vnorm2 > 0.0 {
            for j in k + 1..cols {
                let mut dot = 0.0;
                for r in k..rows {
                    dot += a[k * rows + r] * a[j * rows + r];
                }
                let f = 2.0 * dot / vnorm2;
                for r in k..rows {
                    a[j * rows + r] -= f * a[k * rows + r];
                }
            }
        }
        a[k * rows + k] = beta;
        for r in k + 1..rows {
            a[k * rows + r] = 0.0;
        }
    }
}

/// One-sided Jacobi: rotates the columns of the column-major `n×n` matrix
/// until they are mutually orthogonal; the column norms are then the
/// singular values.
fn jacobi_orthogonalize(m: &mut [f64], n: usize) {
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for r in 0..n {
                    let x = m[p * n + r];
                    let y = m[q * n + r];
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..n {
                    let x = m[p * n + r];
                    let y = m[q * n + r];
                    m[p * n + r] = c * x - s * y;
                    m[q * n + r] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn vol(points: &[&[f64]]) -> LogVolume {
        log_simplex_volume(points, DEFAULT_RANK_TOL).unwrap()
    }

    #[test]
    fn difference_matrix_columns() {
        let m = difference_matrix(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert_eq!(m, DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]));

        let m = difference_matrix(&[&[5.0, 5.0], &[5.0, 5.0]]).unwrap();
        assert_eq!(m, DMatrix::zeros(2, 1));

        let m = difference_matrix(&[&[1.0, 2.0, 3.0], &[4.0, 6.0, 3.0]]).unwrap();
        assert_eq!(m.column(0).as_slice(), &[3.0, 4.0, 0.0]);
    }

    #[test]
    fn difference_matrix_rejects_mixed_dimensions() {
        let err = difference_matrix(&[&[0.0, 0.0], &[1.0]]).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn known_volumes() {
        assert_relative_eq!(
            vol(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]])
                .value()
                .unwrap(),
            0.5f64.ln(),
            epsilon = 1e-14
        );
        assert_relative_eq!(
            vol(&[&[0.0, 0.0, 0.0], &[3.0, 4.0, 0.0]]).value().unwrap(),
            5.0f64.ln(),
            epsilon = 1e-14
        );
        let h = 3.0f64.sqrt() / 2.0;
        // ln(sqrt(3)/4), from Heron's formula with unit sides.
        let expected = -0.836_988_216_785_835_8;
        assert_relative_eq!(
            vol(&[&[0.0, 0.0], &[1.0, 0.0], &[0.5, h]]).value().unwrap(),
            expected,
            epsilon = 1e-14
        );
    }

    #[test]
    fn collinear_points_are_degenerate() {
        assert!(vol(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]]).is_degenerate());
        assert!(vol(&[&[1.0, 2.0], &[1.0, 2.0]]).is_degenerate());
        // More points than the dimension allows.
        assert!(vol(&[&[0.0], &[1.0], &[3.0]]).is_degenerate());
    }

    #[test]
    fn apply_map_examples() {
        let p = PointSet::new(vec![vec![1.0, -2.0], vec![0.5, 3.0], vec![7.0, 0.0]]).unwrap();
        assert_eq!(apply_map(&LinearMap::identity(2), &p).unwrap(), p);

        let zero = LinearMap::new(DMatrix::zeros(3, 2), 1.0).unwrap();
        let img = apply_map(&zero, &p).unwrap();
        assert_eq!(img.dim(), 3);
        assert!(img.coords().iter().all(|&x| x == 0.0));

        let double = LinearMap::identity(2).rescaled(2.0).unwrap();
        let img = apply_map(&double, &p).unwrap();
        assert_eq!(img.coords(), p.scaled(2.0).unwrap().coords());

        let wrong = LinearMap::identity(3);
        assert!(matches!(apply_map(&wrong, &p), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn general_position_examples() {
        let line = PointSet::new(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(
            general_position_check(&line, 3, DEFAULT_RANK_TOL),
            (false, Some(vec![0, 1, 2]))
        );

        let square = PointSet::new(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(
            general_position_check(&square, 2, DEFAULT_RANK_TOL),
            (true, None)
        );
        assert_eq!(
            general_position_check(&square, 4, DEFAULT_RANK_TOL),
            (false, Some(vec![0, 1, 2, 3]))
        );
    }

    #[test]
    fn point_set_validation() {
        assert!(PointSet::new(vec![vec![1.0]]).is_err());
        assert!(PointSet::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(PointSet::new(vec![vec![], vec![]]).is_err());
        assert!(LinearMap::new(DMatrix::identity(2, 2), 0.0).is_err());
    }

    fn points_strategy() -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
        (1usize..=6, 2usize..=5).prop_flat_map(|(dim, k)| {
            (
                Just(dim),
                prop::collection::vec(prop::collection::vec(-10.0f64..10.0, dim), k),
            )
        })
    }

    proptest! {
        #[test]
        fn translation_and_permutation_invariance(
            (dim, pts) in points_strategy(),
            shift in prop::collection::vec(-100.0f64..100.0, 6),
            rot in 0usize..5,
        ) {
            let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
            let base = vol(&refs);
            prop_assume!(!base.is_degenerate());
            let moved: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().zip(&shift[..dim]).map(|(x, v)| x + v).collect()).collect();
            let moved_refs: Vec<&[f64]> = moved.iter().map(Vec::as_slice).collect();
            let shifted = vol(&moved_refs);
            prop_assert!((shifted.value().unwrap() - base.value().unwrap()).abs() < 1e-9);

            let mut perm = refs.clone();
            perm.rotate_left(rot % refs.len());
            perm.reverse();
            prop_assert!((vol(&perm).value().unwrap() - base.value().unwrap()).abs() < 1e-9);
        }
    }
}
