//! The slice coordinates of N-invariant functions.
//!
//! An N-invariant `f` on `D` is determined by `f~(H) = f(exp(H) K)` on `a`, and
//! by `f^(y) = f~(sum_j (ln y_j / 2) A_j)` on `Omega` in the positive octant.
//! Here `H` is always written in the `A_j` basis: `a_j = ln(y_j) / 2`.

use serde::{Deserialize, Serialize};

use crate::domains::DomainBase;
use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};

/// `a_j = ln(y_j) / 2`.
pub fn ell(y: &[f64]) -> Result<Vector> {
    check_positive(y)?;
    Ok(Vector::from_iterator(y.len(), y.iter().map(|v| 0.5 * v.ln())))
}

/// `y_j = exp(2 a_j)`.
pub fn ell_inv(h: &[f64]) -> Vector {
    Vector::from_iterator(h.len(), h.iter().map(|a| (2.0 * a).exp()))
}

fn check_positive(y: &[f64]) -> Result<()> {
    match y.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        Some((index, &value)) => Err(Error::NonPositive { index, value }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlicePoint {
    pub y: Vector,
    pub h: Vector,
}

impl SlicePoint {
    pub fn from_y(y: &[f64]) -> Result<Self> {
        Ok(SlicePoint { y: Vector::from_column_slice(y), h: ell(y)? })
    }

    pub fn from_h(h: &[f64]) -> Self {
        SlicePoint { y: ell_inv(h), h: Vector::from_column_slice(h) }
    }

    pub fn rank(&self) -> usize {
        self.y.len()
    }
}

/// A function `f^` on (a subset of) the positive octant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BaseFunction {
    /// `c . y + d`
    Affine { c: Vec<f64>, d: f64 },
    /// `-sum_j alpha_j ln y_j`
    LogBarrier { alpha: Vec<f64> },
    /// `sum_j 1 / y_j`
    Reciprocal { rank: usize },
    /// `-ln d_Omega(y)` for a half-space domain.
    NegLogDist { domain: DomainBase },
    /// Multilinear interpolation of node values on a tensor grid. `points`
    /// holds the increasing node coordinates per axis; `values` is row-major
    /// with the first axis slowest.
    Grid { points: Vec<Vec<f64>>, values: Vec<f64> },
    /// `sum_k w_k f_k`
    Sum { terms: Vec<(f64, BaseFunction)> },
}

impl BaseFunction {
    pub fn reciprocal(rank: usize) -> Self {
        BaseFunction::Reciprocal { rank }
    }

    pub fn constant(rank: usize, d: f64) -> Self {
        BaseFunction::Affine { c: vec![0.0; rank], d }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: BaseFunction = serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BaseFunction::Grid { points, values } => {
                if points.is_empty() {
                    return Err(Error::InvalidInput("grid without axes".into()));
                }
                for axis in points {
                    if axis.len() < 2 || axis.windows(2).any(|w| !(w[1] > w[0])) {
                        return Err(Error::InvalidInput("grid axes need at least two increasing nodes".into()));
                    }
                    if axis[0] <= 0.0 {
                        return Err(Error::NonPositive { index: 0, value: axis[0] });
                    }
                }
                let count: usize = points.iter().map(|a| a.len()).product();
                if count != values.len() {
                    return Err(Error::DimensionMismatch { expected: count, got: values.len() });
                }
                Ok(())
            }
            BaseFunction::Sum { terms } => {
                let r = self.rank();
                for (_, f) in terms {
                    f.validate()?;
                    if f.rank() != r {
                        return Err(Error::RankMismatch { model: r, function: f.rank() });
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            BaseFunction::Affine { c, .. } => c.len(),
            BaseFunction::LogBarrier { alpha } => alpha.len(),
            BaseFunction::Reciprocal { rank } => *rank,
            BaseFunction::NegLogDist { domain } => domain.rank,
            BaseFunction::Grid { points, .. } => points.len(),
            BaseFunction::Sum { terms } => terms.first().map_or(0, |(_, f)| f.rank()),
        }
    }

    pub fn is_sampled(&self) -> bool {
        match self {
            BaseFunction::Grid { .. } => true,
            BaseFunction::Sum { terms } => terms.iter().any(|(_, f)| f.is_sampled()),
            _ => false,
        }
    }

    /// Whether `f^` is defined at `y`.
    pub fn contains(&self, y: &[f64]) -> bool {
        if y.len() != self.rank() || y.iter().any(|v| !(*v > 0.0)) {
            return false;
        }
        match self {
            BaseFunction::NegLogDist { domain } => domain.contains(y),
            BaseFunction::Grid { points, .. } => {
                points.iter().zip(y).all(|(axis, v)| *v >= axis[0] && *v <= axis[axis.len() - 1])
            }
            BaseFunction::Sum { terms } => terms.iter().all(|(_, f)| f.contains(y)),
            _ => true,
        }
    }

    fn check(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.rank() {
            return Err(Error::DimensionMismatch { expected: self.rank(), got: y.len() });
        }
        check_positive(y)?;
        if !self.contains(y) {
            return Err(Error::OutsideDomain(y.to_vec()));
        }
        Ok(())
    }

    pub fn value(&self, y: &[f64]) -> Result<f64> {
        self.check(y)?;
        Ok(match self {
            BaseFunction::Affine { c, d } => c.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() + d,
            BaseFunction::LogBarrier { alpha } => -alpha.iter().zip(y).map(|(a, b)| a * b.ln()).sum::<f64>(),
            BaseFunction::Reciprocal { .. } => y.iter().map(|v| 1.0 / v).sum(),
            BaseFunction::NegLogDist { domain } => -domain.distance_to_boundary(y)?.ln(),
            BaseFunction::Grid { points, values } => grid_interpolate(points, values, y),
            BaseFunction::Sum { terms } => {
                let mut acc = 0.0;
                for (w, f) in terms {
                    acc += w * f.value(y)?;
                }
                acc
            }
        })
    }

    pub fn gradient(&self, y: &[f64]) -> Result<Vector> {
        self.check(y)?;
        let r = y.len();
        Ok(match self {
            BaseFunction::Affine { c, .. } => Vector::from_column_slice(c),
            BaseFunction::LogBarrier { alpha } => Vector::from_fn(r, |j, _| -alpha[j] / y[j]),
            BaseFunction::Reciprocal { .. } => Vector::from_fn(r, |j, _| -1.0 / (y[j] * y[j])),
            BaseFunction::NegLogDist { domain } => {
                let (n, d) = active_distance_normal(domain, y)?;
                n / d
            }
            BaseFunction::Grid { points, values } => grid_derivatives(points, values, y)?.0,
            BaseFunction::Sum { terms } => {
                let mut acc = Vector::zeros(r);
                for (w, f) in terms {
                    acc += f.gradient(y)? * *w;
                }
                acc
            }
        })
    }

    pub fn hessian(&self, y: &[f64]) -> Result<Mat> {
        self.check(y)?;
        let r = y.len();
        Ok(match self {
            BaseFunction::Affine { .. } => Mat::zeros(r, r),
            BaseFunction::LogBarrier { alpha } => Mat::from_fn(r, r, |j, l| if j == l { alpha[j] / (y[j] * y[j]) } else { 0.0 }),
            BaseFunction::Reciprocal { .. } => {
                Mat::from_fn(r, r, |j, l| if j == l { 2.0 / (y[j] * y[j] * y[j]) } else { 0.0 })
            }
            BaseFunction::NegLogDist { domain } => {
                // u = -ln(s/|n|) on the active face: grad u = n/(|n| d), Hess u = grad u grad u^T.
                let (n, d) = active_distance_normal(domain, y)?;
                let g = n / d;
                &g * g.transpose()
            }
            BaseFunction::Grid { points, values } => grid_derivatives(points, values, y)?.1,
            BaseFunction::Sum { terms } => {
                let mut acc = Mat::zeros(r, r);
                for (w, f) in terms {
                    acc += f.hessian(y)? * *w;
                }
                acc
            }
        })
    }

    /// `f~(H) = f^(exp(2 a_1), ..)`.
    pub fn tilde_value(&self, h: &[f64]) -> Result<f64> {
        self.value(ell_inv(h).as_slice())
    }
}

/// Unit normal of the nearest face (octant faces included) and the distance.
/// Ties are broken by the first face in order; there the distance is not
/// differentiable anyway.
fn active_distance_normal(domain: &DomainBase, y: &[f64]) -> Result<(Vector, f64)> {
    let rows = domain.all_halfspaces()?;
    let mut best: Option<(usize, f64)> = None;
    for (i, h) in rows.iter().enumerate() {
        let d = h.slack(y) / h.normal_norm();
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    let (i, d) = best.ok_or_else(|| Error::InvalidInput("domain without faces".into()))?;
    if d <= 0.0 {
        return Err(Error::OutsideDomain(y.to_vec()));
    }
    let h = &rows[i];
    Ok((Vector::from_column_slice(&h.n) / h.normal_norm(), d))
}

fn grid_strides(points: &[Vec<f64>]) -> Vec<usize> {
    let mut strides = vec![1; points.len()];
    for k in (0..points.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * points[k + 1].len();
    }
    strides
}

fn grid_interpolate(points: &[Vec<f64>], values: &[f64], y: &[f64]) -> f64 {
    let strides = grid_strides(points);
    let mut cell = Vec::with_capacity(points.len());
    for (axis, v) in points.iter().zip(y) {
        let i = axis.partition_point(|x| x <= v).clamp(1, axis.len() - 1) - 1;
        let t = (v - axis[i]) / (axis[i + 1] - axis[i]);
        cell.push((i, t));
    }
    let r = points.len();
    let mut acc = 0.0;
    for corner in 0..(1usize << r) {
        let mut w = 1.0;
        let mut idx = 0;
        for (k, &(i, t)) in cell.iter().enumerate() {
            let up = (corner >> k) & 1 == 1;
            w *= if up { t } else { 1.0 - t };
            idx += (i + usize::from(up)) * strides[k];
        }
        if w != 0.0 {
            acc += w * values[idx];
        }
    }
    acc
}

/// Central differences of node values at an interior node. Non-uniform
/// spacing uses the three-point formulas.
fn grid_derivatives(points: &[Vec<f64>], values: &[f64], y: &[f64]) -> Result<(Vector, Mat)> {
    let r = points.len();
    let strides = grid_strides(points);
    let mut node = Vec::with_capacity(r);
    for (axis, v) in points.iter().zip(y) {
        let i = axis
            .iter()
            .position(|x| (x - v).abs() <= 1e-9 * x.abs().max(1.0))
            .ok_or_else(|| Error::NotApplicable("grid derivatives exist only at grid nodes".into()))?;
        if i == 0 || i + 1 == axis.len() {
            return Err(Error::NotApplicable("grid derivatives exist only at interior nodes".into()));
        }
        node.push(i);
    }
    let at = |offsets: &[(usize, isize)]| -> f64 {
        let mut idx: isize = node.iter().zip(&strides).map(|(i, s)| (*i * *s) as isize).sum();
        for &(k, o) in offsets {
            idx += o * strides[k] as isize;
        }
        values[idx as usize]
    };
    let mut grad = Vector::zeros(r);
    let mut hess = Mat::zeros(r, r);
    let f0 = at(&[]);
    for k in 0..r {
        let a = &points[k];
        let i = node[k];
        let (hm, hp) = (a[i] - a[i - 1], a[i + 1] - a[i]);
        let (fm, fp) = (at(&[(k, -1)]), at(&[(k, 1)]));
        grad[k] = (fp * hm * hm - fm * hp * hp + f0 * (hp * hp - hm * hm)) / (hm * hp * (hm + hp));
        hess[(k, k)] = 2.0 * (fp * hm + fm * hp - f0 * (hm + hp)) / (hm * hp * (hm + hp));
    }
    for k in 0..r {
        for l in (k + 1)..r {
            let dk = points[k][node[k] + 1] - points[k][node[k] - 1];
            let dl = points[l][node[l] + 1] - points[l][node[l] - 1];
            let v = (at(&[(k, 1), (l, 1)]) - at(&[(k, 1), (l, -1)]) - at(&[(k, -1), (l, 1)])
                + at(&[(k, -1), (l, -1)]))
                / (dk * dl);
            hess[(k, l)] = v;
            hess[(l, k)] = v;
        }
    }
    Ok((grad, hess))
}

/// `df~/da_j = 2 y_j df^/dy_j` at `y = exp(2H)`.
pub fn grad_tilde_from_hat(f: &BaseFunction, h: &[f64]) -> Result<Vector> {
    let y = ell_inv(h);
    let g = f.gradient(y.as_slice())?;
    Ok(g.component_mul(&y) * 2.0)
}

/// `d2f~/da_j da_l = 4 y_j y_l d2f^/dy_j dy_l + 4 delta_jl y_j df^/dy_j`.
pub fn hess_tilde_from_hat(f: &BaseFunction, h: &[f64]) -> Result<Mat> {
    let y = ell_inv(h);
    let g = f.gradient(y.as_slice())?;
    let hs = f.hessian(y.as_slice())?;
    let r = y.len();
    Ok(Mat::from_fn(r, r, |j, l| {
        let diag = if j == l { 4.0 * y[j] * g[j] } else { 0.0 };
        4.0 * y[j] * y[l] * hs[(j, l)] + diag
    }))
}

/// Default finite-difference step `1e-4 * max(1, |x|)`.
pub fn default_step(x: &[f64]) -> f64 {
    1e-4 * x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0)
}

/// Central-difference gradient and Hessian, both `O(h^2)`. `f` returns `None`
/// outside its domain; any stencil point there is an error.
pub fn finite_diff_oracle<F>(f: F, x: &[f64], h: Option<f64>) -> Result<(Vector, Mat)>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let h = h.unwrap_or_else(|| default_step(x));
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("step must be positive, got {h}")));
    }
    let r = x.len();
    let eval = |offsets: &[(usize, f64)]| -> Result<f64> {
        let mut p = x.to_vec();
        for &(k, o) in offsets {
            p[k] += o * h;
        }
        f(&p).ok_or(Error::OutsideDomain(p))
    };
    let f0 = eval(&[])?;
    let mut grad = Vector::zeros(r);
    let mut hess = Mat::zeros(r, r);
    for k in 0..r {
        let fp = eval(&[(k, 1.0)])?;
        let fm = eval(&[(k, -1.0)])?;
        grad[k] = (fp - fm) / (2.0 * h);
        hess[(k, k)] = (fp - 2.0 * f0 + fm) / (h * h);
    }
    for k in 0..r {
        for l in (k + 1)..r {
            let v = (eval(&[(k, 1.0), (l, 1.0)])? - eval(&[(k, 1.0), (l, -1.0)])? - eval(&[(k, -1.0), (l, 1.0)])?
                + eval(&[(k, -1.0), (l, -1.0)])?)
                / (4.0 * h * h);
            hess[(k, l)] = v;
            hess[(l, k)] = v;
        }
    }
    Ok((grad, hess))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::HalfSpace;

    #[test]
    fn ell_roundtrip() {
        assert_eq!(ell(&[1.0, 1.0]).unwrap().as_slice(), &[0.0, 0.0]);
        let h = ell(&[std::f64::consts::E.powi(2), 1.0]).unwrap();
        assert!((h[0] - 1.0).abs() < 1e-15 && h[1] == 0.0);
        assert!(ell(&[1.0, 0.0]).is_err());
        let y = [0.3, 7.5];
        let back = ell_inv(ell(&y).unwrap().as_slice());
        assert!((back[0] - 0.3).abs() < 1e-15 && (back[1] - 7.5).abs() < 1e-14);
    }

    #[test]
    fn reciprocal_chain_rule_at_identity() {
        let f = BaseFunction::reciprocal(3);
        let g = grad_tilde_from_hat(&f, &[0.0; 3]).unwrap();
        assert!(g.iter().all(|v| (v + 2.0).abs() < 1e-15));
        // 4 Hess h^(1) = 8 id
        let lhs = hess_tilde_from_hat(&f, &[0.0; 3]).unwrap() - Mat::from_diagonal(&(g * 2.0));
        assert!((lhs - Mat::identity(3, 3) * 8.0).norm() < 1e-14);
    }

    #[test]
    fn affine_hessian_tilde() {
        let f = BaseFunction::Affine { c: vec![1.5, -2.0], d: 4.0 };
        let h = [0.2, -0.4];
        let y = ell_inv(&h);
        let hs = hess_tilde_from_hat(&f, &h).unwrap();
        assert!((hs[(0, 0)] - 4.0 * 1.5 * y[0]).abs() < 1e-14);
        assert!((hs[(1, 1)] + 4.0 * 2.0 * y[1]).abs() < 1e-14);
        assert_eq!(hs[(0, 1)], 0.0);
        let c = BaseFunction::constant(2, 3.0);
        assert_eq!(grad_tilde_from_hat(&c, &h).unwrap().norm(), 0.0);
        assert_eq!(hess_tilde_from_hat(&c, &h).unwrap().norm(), 0.0);
    }

    #[test]
    fn oracle_on_square() {
        let (g, h) = finite_diff_oracle(|x| Some(x[0] * x[0]), &[3.0], Some(1e-4)).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);
        assert!((h[(0, 0)] - 2.0).abs() < 1e-4);
        let rec = BaseFunction::reciprocal(2);
        let (g, _) = finite_diff_oracle(|y| rec.value(y).ok(), &[1.0, 1.0], None).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-7 && (g[1] + 1.0).abs() < 1e-7);
        let aff = BaseFunction::Affine { c: vec![2.0, -1.0], d: 0.5 };
        let (_, h) = finite_diff_oracle(|y| aff.value(y).ok(), &[1.0, 2.0], None).unwrap();
        assert!(h.norm() < 1e-8);
        assert!(finite_diff_oracle(|y| rec.value(y).ok(), &[1e-5, 1.0], Some(1e-4)).is_err());
    }

    #[test]
    fn neg_log_dist_derivatives() {
        let dom = DomainBase::hrep(2, false, vec![HalfSpace::new(vec![-1.0, -1.0], -3.0)]).unwrap();
        let f = BaseFunction::NegLogDist { domain: dom };
        let y = [2.5, 1.5];
        let (g, h) = finite_diff_oracle(|p| f.value(p).ok(), &y, None).unwrap();
        assert!((f.gradient(&y).unwrap() - g).norm() < 1e-6);
        assert!((f.hessian(&y).unwrap() - h).norm() < 1e-5);
        assert!(f.value(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn grid_interpolates_and_differentiates() {
        let axis: Vec<f64> = (0..6).map(|i| 1.0 + 0.5 * i as f64).collect();
        let quad = |y: &[f64]| 3.0 * y[0] * y[0] - y[0] * y[1] + 2.0 * y[1];
        let mut values = Vec::new();
        for a in &axis {
            for b in &axis {
                values.push(quad(&[*a, *b]));
            }
        }
        let g = BaseFunction::Grid { points: vec![axis.clone(), axis.clone()], values };
        g.validate().unwrap();
        assert!((g.value(&[2.0, 2.5]).unwrap() - quad(&[2.0, 2.5])).abs() < 1e-12);
        let grad = g.gradient(&[2.0, 2.5]).unwrap();
        assert!((grad[0] - (12.0 - 2.5)).abs() < 1e-12 && (grad[1] - 0.0).abs() < 1e-12);
        let hess = g.hessian(&[2.0, 2.5]).unwrap();
        assert!((hess[(0, 0)] - 6.0).abs() < 1e-10 && (hess[(0, 1)] + 1.0).abs() < 1e-10);
        assert!(g.gradient(&[1.0, 2.0]).is_err());
        assert!(g.gradient(&[2.1, 2.0]).is_err());
        assert!(g.value(&[0.5, 2.0]).is_err());
    }

    #[test]
    fn json_schema() {
        let f = BaseFunction::from_json(r#"{"kind":"logbarrier","alpha":[2.0,3.0]}"#).unwrap();
        assert_eq!(f, BaseFunction::LogBarrier { alpha: vec![2.0, 3.0] });
        let g = BaseFunction::from_json(r#"{"kind":"grid","points":[[1,2,3]],"values":[1,0.5,0.2]}"#).unwrap();
        assert_eq!(g.rank(), 1);
        assert!(BaseFunction::from_json(r#"{"kind":"grid","points":[[1,2]],"values":[1]}"#).is_err());
        assert!(BaseFunction::from_json(r#"{"kind":"reciprocal","rank":2,"x":1}"#).is_err());
        let s = BaseFunction::from_json(
            r#"{"kind":"sum","terms":[[1.0,{"kind":"reciprocal","rank":2}],[2.0,{"kind":"affine","c":[-1,0],"d":0}]]}"#,
        )
        .unwrap();
        assert!((s.value(&[1.0, 2.0]).unwrap() - (1.5 - 2.0)).abs() < 1e-15);
    }
}
