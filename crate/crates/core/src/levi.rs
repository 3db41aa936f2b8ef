//! Levi form of an N-invariant function at a slice point, and the
//! (strict) plurisubharmonicity test on base functions.

use serde::Serialize;

use crate::algebra::{LieModel, RootLabel};
use crate::coords::{grad_tilde_from_hat, hess_tilde_from_hat, BaseFunction, SlicePoint};
use crate::domains::ConeSpec;
use crate::error::{Error, Result};
use crate::linalg::{min_eigen, Mat, Vector};

/// Relative threshold below which an eigenvalue counts as zero.
pub const PSD_TOL: f64 = 1e-9;

/// Diagonal entry of the Levi form on one basis vector outside `a + Ja`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootEntry {
    pub index: usize,
    pub label: String,
    pub norm_sq: f64,
    pub value: f64,
    /// Filled in through J-invariance rather than a direct formula.
    pub derived: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeviForm {
    pub point: SlicePoint,
    /// `h(A_j, A_l) = -2 delta_jl df~/da_l + d2f~/da_j da_l`.
    pub a_block: Mat,
    /// `h(E^j, E^l) = a_block / 4`, since `J E^j = A_j / 2`.
    pub e_block: Mat,
    pub entries: Vec<RootEntry>,
    /// The form on the whole basis of `s`, in the model's basis order.
    pub full: Mat,
}

impl LeviForm {
    pub fn min_eigenvalue(&self) -> f64 {
        min_eigen(&self.full).0
    }

    pub fn is_positive_semidefinite(&self) -> bool {
        psd_margin(&self.full) >= 0.0
    }

    pub fn is_positive_definite(&self) -> bool {
        let scale = spectral_scale(&self.full);
        scale > 0.0 && self.min_eigenvalue() > PSD_TOL * scale
    }

    /// Block labels with dimension and eigenvalues, for spectrum plots.
    pub fn block_spectra(&self) -> Vec<(String, usize, Vec<f64>)> {
        let eig = |m: &Mat| {
            let mut v: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            v.sort_by(|a, b| a.total_cmp(b));
            v
        };
        let mut out = vec![
            ("a".to_string(), self.a_block.nrows(), eig(&self.a_block)),
            ("Ja".to_string(), self.e_block.nrows(), eig(&self.e_block)),
        ];
        for e in &self.entries {
            match out.iter_mut().find(|(l, _, _)| *l == e.label) {
                Some(block) => {
                    block.1 += 1;
                    block.2.push(e.value);
                }
                None => out.push((e.label.clone(), 1, vec![e.value])),
            }
        }
        out
    }

    pub fn spectra_csv(&self) -> String {
        let mut s = String::from("block,dim,eigenvalue\n");
        for (label, dim, vals) in self.block_spectra() {
            for v in vals {
                s.push_str(&format!("{label},{dim},{v:.16e}\n"));
            }
        }
        s
    }
}

fn spectral_scale(m: &Mat) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

/// `lambda_min + tol * |M|`; nonnegative iff `M` passes the PSD test.
fn psd_margin(m: &Mat) -> f64 {
    min_eigen(m).0 + PSD_TOL * spectral_scale(m)
}

pub fn assemble_levi(model: &LieModel, f: &BaseFunction, y: &[f64]) -> Result<LeviForm> {
    if f.rank() != model.rank {
        return Err(Error::RankMismatch { model: model.rank, function: f.rank() });
    }
    let point = SlicePoint::from_y(y)?;
    if !f.contains(y) {
        return Err(Error::OutsideDomain(y.to_vec()));
    }
    let h = point.h.as_slice();
    let grad = grad_tilde_from_hat(f, h)?;
    let hess = hess_tilde_from_hat(f, h)?;
    let r = model.rank;
    let a_block = Mat::from_fn(r, r, |j, l| hess[(j, l)] - if j == l { 2.0 * grad[l] } else { 0.0 });
    let e_block = &a_block * 0.25;

    let dim = model.dim_s();
    let mut full = Mat::zeros(dim, dim);
    let mut entries = Vec::new();
    for (i, v) in model.basis.iter().enumerate() {
        match v.label {
            RootLabel::Cartan(j) => {
                for l in 0..r {
                    full[(i, l)] = a_block[(j, l)];
                }
            }
            RootLabel::Long(j) => {
                for l in 0..r {
                    full[(i, r + l)] = e_block[(j, l)];
                }
            }
            RootLabel::Diff(j, _) | RootLabel::Short(j) | RootLabel::Sum(j, _) => {
                // On e_j + e_l the vector is J X for X in e_j - e_l, and h(JX, JX) = h(X, X).
                let derived = matches!(v.label, RootLabel::Sum(..));
                let source = if derived { &model.basis[v.j_partner] } else { v };
                let value = -2.0 * source.norm_sq / model.b * grad[j];
                full[(i, i)] = value;
                entries.push(RootEntry { index: i, label: v.label.to_string(), norm_sq: v.norm_sq, value, derived });
            }
        }
    }
    Ok(LeviForm { point, a_block, e_block, entries, full })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PshClass {
    StrictlyPsh,
    Psh,
    NotPsh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    /// The Hessian of `f^` has a negative eigenvalue along `direction`.
    Hessian,
    /// `f^` increases along the cone generator `direction`.
    Increasing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PshWitness {
    pub point: Vec<f64>,
    pub direction: Vec<f64>,
    pub kind: WitnessKind,
    /// Offending value: eigenvalue, directional derivative or value increase.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PshVerdict {
    pub verdict: PshClass,
    pub witness: Option<PshWitness>,
    pub samples: usize,
}

/// Classifies `f^` on the samples by: Hessian positive (semi)definite and
/// `grad f^ . v` (strictly) negative on the cone generators.
pub fn classify_psh(model: &LieModel, f: &BaseFunction, samples: &[Vec<f64>]) -> Result<PshVerdict> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if f.rank() != model.rank {
        return Err(Error::RankMismatch { model: model.rank, function: f.rank() });
    }
    let cone = ConeSpec::new(model.rank, model.tube);
    let gens = cone.generators();
    let mut strict = true;
    for y in samples {
        if !f.contains(y) {
            return Err(Error::OutsideDomain(y.clone()));
        }
        let hess = f.hessian(y)?;
        let (lambda, dir) = min_eigen(&hess);
        let scale = spectral_scale(&hess);
        if lambda < -PSD_TOL * scale {
            return Ok(PshVerdict {
                verdict: PshClass::NotPsh,
                witness: Some(PshWitness {
                    point: y.clone(),
                    direction: dir.as_slice().to_vec(),
                    kind: WitnessKind::Hessian,
                    value: lambda,
                }),
                samples: samples.len(),
            });
        }
        if !(scale > 0.0 && lambda > PSD_TOL * scale) {
            strict = false;
        }
        if let Some(w) = decrease_witness(f, y, &gens)? {
            return Ok(PshVerdict { verdict: PshClass::NotPsh, witness: Some(w), samples: samples.len() });
        }
        if f.is_sampled() {
            if !gens.is_empty() {
                // Grid data only certifies weak monotonicity.
                strict = false;
            }
        } else {
            let g = f.gradient(y)?;
            if gens.iter().any(|v| g.dot(v) >= 0.0) {
                strict = false;
            }
        }
    }
    let verdict = if strict { PshClass::StrictlyPsh } else { PshClass::Psh };
    Ok(PshVerdict { verdict, witness: None, samples: samples.len() })
}

/// A generator along which `f^` increases at `y`, if any.
fn decrease_witness(f: &BaseFunction, y: &[f64], gens: &[Vector]) -> Result<Option<PshWitness>> {
    if let BaseFunction::Grid { points, .. } = f {
        for g in gens {
            let k = g.iamax();
            let axis = &points[k];
            let start = axis.partition_point(|x| *x < y[k] - 1e-9 * y[k].abs().max(1.0));
            let mut prev = f.value(y)?;
            for node in &axis[start..] {
                if *node <= y[k] {
                    continue;
                }
                let mut p = y.to_vec();
                p[k] = *node;
                let v = f.value(&p)?;
                if v > prev + 1e-12 * prev.abs().max(1.0) {
                    return Ok(Some(PshWitness {
                        point: y.to_vec(),
                        direction: g.as_slice().to_vec(),
                        kind: WitnessKind::Increasing,
                        value: v - prev,
                    }));
                }
                prev = v;
            }
        }
        return Ok(None);
    }
    let grad = f.gradient(y)?;
    let scale = grad.amax().max(1e-300);
    for g in gens {
        let d = grad.dot(g);
        if d > 1e-12 * scale {
            return Ok(Some(PshWitness {
                point: y.to_vec(),
                direction: g.as_slice().to_vec(),
                kind: WitnessKind::Increasing,
                value: d,
            }));
        }
    }
    Ok(None)
}

/// Whether `f^` is non-increasing along every direction of the closed cone at
/// the samples: a gradient test for analytic kinds, node-by-node monotonicity
/// along generator grid lines for sampled kinds.
pub fn is_cbar_decreasing(f: &BaseFunction, samples: &[Vec<f64>], cone: &ConeSpec) -> Result<bool> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if f.rank() != cone.rank {
        return Err(Error::RankMismatch { model: cone.rank, function: f.rank() });
    }
    let gens = cone.generators();
    for y in samples {
        if !f.contains(y) {
            return Err(Error::OutsideDomain(y.clone()));
        }
        if decrease_witness(f, y, &gens)?.is_some() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Family;

    #[test]
    fn constant_gives_zero_form() {
        let m = LieModel::build(Family::Sp { r: 2 }).unwrap();
        let form = assemble_levi(&m, &BaseFunction::constant(2, 7.0), &[1.3, 0.4]).unwrap();
        assert_eq!(form.full.norm(), 0.0);
    }

    #[test]
    fn reciprocal_at_ones() {
        let m = LieModel::build(Family::Sp { r: 2 }).unwrap();
        let form = assemble_levi(&m, &BaseFunction::reciprocal(2), &[1.0, 1.0]).unwrap();
        // a_block = 4 y_j y_l Hess h^ = 8 id at y = 1.
        assert!((&form.a_block - Mat::identity(2, 2) * 8.0).norm() < 1e-12);
        for e in &form.entries {
            assert!((e.value - 4.0 * e.norm_sq / m.b).abs() < 1e-12);
        }
        assert!(form.is_positive_definite());
    }

    #[test]
    fn rank_mismatch() {
        let m = LieModel::build(Family::Sl2R).unwrap();
        assert!(matches!(
            assemble_levi(&m, &BaseFunction::reciprocal(2), &[1.0, 1.0]),
            Err(Error::RankMismatch { .. })
        ));
    }

    #[test]
    fn classification_examples() {
        let su = LieModel::build(Family::Su { p: 2, q: 3 }).unwrap();
        let samples = vec![vec![1.0, 2.0], vec![0.5, 0.7]];
        let v = classify_psh(&su, &BaseFunction::reciprocal(2), &samples).unwrap();
        assert_eq!(v.verdict, PshClass::StrictlyPsh);
        let up = BaseFunction::Affine { c: vec![1.0, 0.0], d: 0.0 };
        let v = classify_psh(&su, &up, &samples).unwrap();
        assert_eq!(v.verdict, PshClass::NotPsh);
        let w = v.witness.unwrap();
        assert_eq!(w.direction, vec![1.0, 0.0]);
        assert_eq!(w.kind, WitnessKind::Increasing);

        // Tube case: e_2 is not a cone direction.
        let sp = LieModel::build(Family::Sp { r: 2 }).unwrap();
        let rho_plus = BaseFunction::Sum {
            terms: vec![
                (1.0, BaseFunction::LogBarrier { alpha: vec![3.0, 3.0] }),
                (1.0, BaseFunction::Affine { c: vec![0.0, 4.0], d: 1.0 }),
            ],
        };
        assert_eq!(classify_psh(&sp, &rho_plus, &samples).unwrap().verdict, PshClass::StrictlyPsh);
        assert_eq!(classify_psh(&su, &rho_plus, &samples).unwrap().verdict, PshClass::NotPsh);
        assert!(classify_psh(&sp, &rho_plus, &[]).is_err());
    }

    #[test]
    fn grid_monotonicity() {
        let axis: Vec<f64> = (1..=6).map(f64::from).collect();
        let dec = BaseFunction::Grid { points: vec![axis.clone()], values: axis.iter().map(|y| 1.0 / y).collect() };
        let inc = BaseFunction::Grid { points: vec![axis.clone()], values: axis.clone() };
        let cone = ConeSpec::new(1, false);
        let nodes = vec![vec![2.0], vec![4.0]];
        assert!(is_cbar_decreasing(&dec, &nodes, &cone).unwrap());
        assert!(!is_cbar_decreasing(&inc, &nodes, &cone).unwrap());
        let m = LieModel::build(Family::Su { p: 1, q: 2 }).unwrap();
        assert_eq!(classify_psh(&m, &dec, &nodes).unwrap().verdict, PshClass::Psh);
    }
}
