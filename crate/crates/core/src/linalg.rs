//! Small dense linear-algebra helpers shared by the geometric modules.

use nalgebra::{DMatrix, DVector};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn bracket(x: &Mat, y: &Mat) -> Mat {
    x * y - y * x
}

/// `e_{ij}` in an `n x n` real matrix space.
pub fn unit(n: usize, i: usize, j: usize) -> Mat {
    let mut m = Mat::zeros(n, n);
    m[(i, j)] = 1.0;
    m
}

/// Orthonormal basis (as columns) of the null space of `c`, computed from
/// the eigen-decomposition of `c^T c`.
pub fn null_space(c: &Mat, rel_tol: f64) -> Mat {
    let gram = c.transpose() * c;
    let eig = gram.clone().symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let cols: Vec<Vector> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() <= rel_tol * scale)
        .map(|(k, _)| eig.eigenvectors.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        return Mat::zeros(c.ncols(), 0);
    }
    Mat::from_columns(&cols)
}

/// Unit vector spanning the null space of `a` (rows < cols allowed), or
/// `None` when the null space is not one-dimensional.
pub fn null_vector(a: &Mat, rel_tol: f64) -> Option<Vector> {
    let n = a.ncols();
    let mut sq = Mat::zeros(n.max(a.nrows()), n);
    sq.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let svd = sq.svd(false, true);
    let vt = svd.v_t?;
    let sv = &svd.singular_values;
    let smax = sv.max();
    let small: Vec<usize> = (0..sv.len()).filter(|&k| sv[k] <= rel_tol * smax.max(1e-300)).collect();
    if small.len() != 1 {
        return None;
    }
    Some(vt.row(small[0]).transpose())
}

/// Least-squares coordinates of vectors in a fixed (linearly independent)
/// family of matrices.
#[derive(Debug, Clone)]
pub struct SpanSolver {
    columns: Mat,
    gram_inv: Mat,
    rows: usize,
    cols: usize,
}

impl SpanSolver {
    pub fn new(family: &[Mat]) -> Option<Self> {
        let (rows, cols) = family.first().map(|m| m.shape())?;
        let flat: Vec<Vector> = family
            .iter()
            .map(|m| Vector::from_column_slice(m.as_slice()))
            .collect();
        let columns = Mat::from_columns(&flat);
        let gram_inv = (columns.transpose() * &columns).try_inverse()?;
        Some(Self {
            columns,
            gram_inv,
            rows,
            cols,
        })
    }

    pub fn len(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.ncols() == 0
    }

    /// Coordinates and the relative residual `|x - sum c_i b_i| / max(|x|, 1e-300)`.
    pub fn coords(&self, x: &Mat) -> (Vector, f64) {
        let v = Vector::from_column_slice(x.as_slice());
        let c = &self.gram_inv * (self.columns.transpose() * &v);
        let resid = (&self.columns * &c - &v).norm();
        let scale = v.norm().max(1e-300);
        (c, resid / scale)
    }

    pub fn combine(&self, c: &Vector) -> Mat {
        let v = &self.columns * c;
        Mat::from_column_slice(self.rows, self.cols, v.as_slice())
    }
}

/// Extracts a maximal linearly independent subfamily (greedy, in order).
/// Residual norms are compared against `rel_tol` times the largest norm in
/// the family, so near-zero members are dropped as noise.
pub fn independent_subset(family: &[Mat], rel_tol: f64) -> Vec<Mat> {
    let scale = family.iter().fold(0.0_f64, |m, x| m.max(x.norm()));
    let mut kept: Vec<Mat> = Vec::new();
    let mut ortho: Vec<Vector> = Vec::new();
    for m in family {
        let mut v = Vector::from_column_slice(m.as_slice());
        if v.norm() == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &ortho {
                let d = q.dot(&v);
                v -= q * d;
            }
        }
        let n = v.norm();
        if n > rel_tol * scale {
            ortho.push(v / n);
            kept.push(m.clone());
        }
    }
    kept
}

/// Smallest eigenvalue of a symmetric matrix together with its eigenvector.
pub fn min_eigen(m: &Mat) -> (f64, Vector) {
    let eig = m.clone().symmetric_eigen();
    let (k, v) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
    (v, eig.eigenvectors.column(k).into_owned())
}

/// Largest absolute entry.
pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

/// `exp(x)`; exact finite series when `x` is nilpotent.
pub fn expm(x: &Mat) -> Mat {
    let n = x.nrows();
    let mut power = Mat::identity(n, n);
    let mut acc = Mat::identity(n, n);
    for k in 1..=n {
        power = &power * x / k as f64;
        if max_abs(&power) == 0.0 {
            return acc;
        }
        acc += &power;
    }
    if max_abs(&power) < 1e-300 {
        return acc;
    }
    x.clone().exp()
}

/// `Ad_g x = g x g^{-1}`.
pub fn conjugate(g: &Mat, g_inv: &Mat, x: &Mat) -> Mat {
    g * x * g_inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_rank_one() {
        let c = Mat::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let ns = null_space(&c, 1e-12);
        assert_eq!(ns.ncols(), 2);
        assert!((c * ns).norm() < 1e-12);
    }

    #[test]
    fn null_vector_of_wide_matrix() {
        let a = Mat::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let v = null_vector(&a, 1e-12).unwrap();
        assert!((a * &v).norm() < 1e-14);
        assert!((v.norm() - 1.0).abs() < 1e-14);
        assert!(null_vector(&Mat::from_row_slice(1, 3, &[1.0, 0.0, 0.0]), 1e-12).is_none());
    }

    #[test]
    fn nilpotent_exponential_is_exact() {
        let x = Mat::from_row_slice(3, 3, &[0.0, 2.0, 1.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0]);
        let e = expm(&x);
        // I + X + X^2/2
        let expected = Mat::identity(3, 3) + &x + &x * &x / 2.0;
        assert_eq!(e, expected);
    }

    #[test]
    fn span_solver_recovers_coordinates() {
        let fam = vec![unit(2, 0, 0), unit(2, 0, 1) + unit(2, 1, 0)];
        let s = SpanSolver::new(&fam).unwrap();
        let x = unit(2, 0, 0) * 3.0 + (unit(2, 0, 1) + unit(2, 1, 0)) * -2.0;
        let (c, res) = s.coords(&x);
        assert!((c[0] - 3.0).abs() < 1e-14 && (c[1] + 2.0).abs() < 1e-14);
        assert!(res < 1e-14);
        let (_, res) = s.coords(&unit(2, 1, 1));
        assert!(res > 0.5);
    }
}
