//! The N-invariant potential of the Killing metric, its moment map, and the
//! affine family of all N-invariant potentials.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{Family, LieModel, RootLabel};
use crate::coords::BaseFunction;
use crate::error::{Error, Result};
use crate::levi::assemble_levi;
use crate::linalg::{expm, Mat};
use crate::report::CheckReport;
use crate::siegel::udu_diagonal;

/// Agreement required between the two moment-map formulas.
pub const MOMENT_TOL: f64 = 1e-8;
/// Per-entry agreement of Levi forms in `is_killing_potential`.
pub const LEVI_ENTRY_TOL: f64 = 1e-7;

/// `-(b/4) sum_j ln y_j`.
pub fn rho_hat(model: &LieModel, y: &[f64]) -> Result<f64> {
    if y.len() != model.rank {
        return Err(Error::DimensionMismatch { expected: model.rank, got: y.len() });
    }
    if let Some((index, &value)) = y.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositive { index, value });
    }
    Ok(-model.b / 4.0 * y.iter().map(|v| v.ln()).sum::<f64>())
}

pub fn rho_function(model: &LieModel) -> BaseFunction {
    BaseFunction::LogBarrier { alpha: vec![model.b / 4.0; model.rank] }
}

/// The potential at `S + iT` in the Siegel upper half-space (`sp` models),
/// computed through the slice coordinates `e^{2a_j}` of `T` and checked
/// against `-(b/4) ln det T`.
pub fn siegel_rho(model: &LieModel, t: &Mat) -> Result<f64> {
    if matches!(model.family, Family::Su { .. }) {
        return Err(Error::NotApplicable("the symmetric-matrix realization is for sp models".into()));
    }
    let r = model.rank;
    if t.shape() != (r, r) {
        return Err(Error::DimensionMismatch { expected: r, got: t.nrows() });
    }
    if (t - t.transpose()).amax() > 1e-12 * t.amax().max(1.0) {
        return Err(Error::InvalidInput("T is not symmetric".into()));
    }
    let tc = t.map(|v| num_complex::Complex64::new(v, 0.0));
    let y = udu_diagonal(&tc).ok_or_else(|| Error::InvalidInput("T is not positive definite".into()))?;
    let coord = rho_hat(model, &y)?;
    let det = -model.b / 4.0 * t.determinant().ln();
    if (coord - det).abs() > 1e-10 * det.abs().max(1.0) {
        return Err(Error::Inconsistent(format!("coordinate route {coord} vs determinant route {det}")));
    }
    Ok(coord)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentValue {
    /// `-(b/4) sum_j e^{-2a_j} (E^j)^*(Ad_{n^-1} X)`
    pub dual_sum: f64,
    /// `B(Ad_{n^-1} X, Ad_a Z_0)`
    pub killing: f64,
    /// `B(Ad_{(na)^-1} X, Z_0)`
    pub restriction: f64,
}

impl MomentValue {
    pub fn discrepancy(&self) -> f64 {
        let scale = self.dual_sum.abs().max(1.0);
        (self.dual_sum - self.killing).abs().max((self.dual_sum - self.restriction).abs()) / scale
    }
}

fn in_n(model: &LieModel, x: &Mat, what: &str) -> Result<()> {
    let c = model.s_coords(x)?;
    let scale = c.amax().max(1e-300);
    for (i, v) in model.basis.iter().enumerate() {
        if matches!(v.label, RootLabel::Cartan(_)) && c[i].abs() > 1e-9 * scale {
            return Err(Error::NotInSubspace(what.to_string()));
        }
    }
    Ok(())
}

/// Moment map of the potential at `n a K`, `n = exp(n_log)`, `a = exp(sum h_j A_j)`,
/// evaluated on `X` in `n`.
pub fn moment_map(model: &LieModel, n_log: &Mat, h: &[f64], x: &Mat) -> Result<MomentValue> {
    in_n(model, n_log, "n")?;
    let v = moment_map_at(model, &expm(n_log), h, x)?;
    if v.discrepancy() > MOMENT_TOL {
        return Err(Error::Inconsistent(format!("moment map formulas disagree: {v:?}")));
    }
    Ok(v)
}

fn moment_map_at(model: &LieModel, n: &Mat, h: &[f64], x: &Mat) -> Result<MomentValue> {
    if h.len() != model.rank {
        return Err(Error::DimensionMismatch { expected: model.rank, got: h.len() });
    }
    in_n(model, x, "n")?;
    let n_inv = n.clone().try_inverse().ok_or_else(|| Error::InvalidInput("singular group element".into()))?;
    let ad_x = &n_inv * x * n;
    let dual_sum = -model.b / 4.0 * (0..model.rank).map(|j| (-2.0 * h[j]).exp() * model.dual_e(j, &ad_x)).sum::<f64>();
    let hm = model.a.iter().zip(h).fold(Mat::zeros(model.matrix_dim, model.matrix_dim), |acc, (a, c)| acc + a * *c);
    let a = expm(&hm);
    let a_inv = expm(&-&hm);
    let killing = model.killing_form(&ad_x, &(&a * &model.z0 * &a_inv))?;
    let restriction = model.killing_form(&(&a_inv * &ad_x * &a), &model.z0)?;
    Ok(MomentValue { dual_sum, killing, restriction })
}

fn random_n<R: Rng + ?Sized>(model: &LieModel, rng: &mut R) -> Mat {
    model
        .basis
        .iter()
        .filter(|v| !matches!(v.label, RootLabel::Cartan(_)))
        .fold(Mat::zeros(model.matrix_dim, model.matrix_dim), |acc, v| acc + &v.matrix * rng.gen_range(-1.0..1.0))
}

/// Dual-formula agreement, the restriction identity, and `N`-equivariance
/// `mu(n' z)(X) = mu(z)(Ad_{n'^-1} X)` on random samples.
pub fn verify_moment_map(model: &LieModel, trials: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut dual, mut restr, mut equiv) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..trials {
        let n = expm(&random_n(model, &mut rng));
        let h: Vec<f64> = (0..model.rank).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = random_n(model, &mut rng);
        let v = moment_map_at(model, &n, &h, &x)?;
        let scale = v.dual_sum.abs().max(1.0);
        dual.push((v.dual_sum - v.killing).abs() / scale);
        restr.push((v.dual_sum - v.restriction).abs() / scale);
        let m = expm(&random_n(model, &mut rng));
        let m_inv = m.clone().try_inverse().expect("unipotent");
        let moved = moment_map_at(model, &(&m * &n), &h, &x)?;
        let pulled = moment_map_at(model, &n, &h, &(&m_inv * &x * &m))?;
        equiv.push((moved.dual_sum - pulled.dual_sum).abs() / moved.dual_sum.abs().max(1.0));
    }
    Ok(vec![
        CheckReport::from_residuals("moment_map_dual_formulas_agree", MOMENT_TOL, &dual),
        CheckReport::from_residuals("moment_map_restriction_identity", MOMENT_TOL, &restr),
        CheckReport::from_residuals("moment_map_n_equivariant", MOMENT_TOL, &equiv),
    ])
}

/// `sigma^(y) = rho^(y) + c y_r + d`; `c` must vanish outside the tube case.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialSpec {
    pub rank: usize,
    pub tube: bool,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl PotentialSpec {
    pub fn rho_hat(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.rank {
            return Err(Error::DimensionMismatch { expected: self.rank, got: y.len() });
        }
        if let Some((index, &value)) = y.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositive { index, value });
        }
        Ok(-self.b / 4.0 * y.iter().map(|v| v.ln()).sum::<f64>())
    }

    pub fn value(&self, y: &[f64]) -> Result<f64> {
        Ok(self.rho_hat(y)? + self.c * y[self.rank - 1] + self.d)
    }

    pub fn base_function(&self) -> BaseFunction {
        let mut c = vec![0.0; self.rank];
        c[self.rank - 1] = self.c;
        BaseFunction::Sum {
            terms: vec![
                (1.0, BaseFunction::LogBarrier { alpha: vec![self.b / 4.0; self.rank] }),
                (1.0, BaseFunction::Affine { c, d: self.d }),
            ],
        }
    }
}

pub fn potential_family(model: &LieModel, c: f64, d: f64) -> Result<PotentialSpec> {
    if !model.tube && c != 0.0 {
        return Err(Error::NotApplicable("non-tube potentials differ from rho only by a constant".into()));
    }
    Ok(PotentialSpec { rank: model.rank, tube: model.tube, b: model.b, c, d })
}

/// Whether `f^` has the Levi form of the potential at every sample.
pub fn is_killing_potential(model: &LieModel, f: &BaseFunction, samples: &[Vec<f64>]) -> Result<bool> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let rho = rho_function(model);
    for y in samples {
        let lf = assemble_levi(model, f, y)?;
        let lr = assemble_levi(model, &rho, y)?;
        if lf.full.iter().zip(lr.full.iter()).any(|(a, b)| (a - b).abs() > LEVI_ENTRY_TOL * b.abs().max(1.0)) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineFit {
    pub c: f64,
    pub d: f64,
    pub max_residual: f64,
}

/// Least-squares fit of `f^ - rho^ = c y_r + d` over the samples.
pub fn fit_affine_offset(model: &LieModel, f: &BaseFunction, samples: &[Vec<f64>]) -> Result<AffineFit> {
    if samples.len() < 2 {
        return Err(Error::EmptySamples);
    }
    let r = model.rank;
    let mut design = DMatrix::zeros(samples.len(), 2);
    let mut rhs = nalgebra::DVector::zeros(samples.len());
    for (i, y) in samples.iter().enumerate() {
        design[(i, 0)] = y[r - 1];
        design[(i, 1)] = 1.0;
        rhs[i] = f.value(y)? - rho_hat(model, y)?;
    }
    let sol = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let max_residual = (&design * &sol - &rhs).amax();
    Ok(AffineFit { c: sol[0], d: sol[1], max_residual })
}

/// The Levi form of the potential against the inner product `B(phi X, phi Y)`
/// on all basis pairs of `s`, at each point.
pub fn verify_killing_identity(model: &LieModel, points: &[Vec<f64>]) -> Result<CheckReport> {
    if points.is_empty() {
        return Err(Error::EmptySamples);
    }
    let rho = rho_function(model);
    let dim = model.dim_s();
    let mut res = Vec::with_capacity(points.len());
    for y in points {
        let lf = assemble_levi(model, &rho, y)?;
        res.push((&lf.full - &model.gram).amax() / model.b);
    }
    // The literal -B(X, theta Y)/2 agrees off a and is half of B(X, Y) on a.
    let mut literal = 0.0_f64;
    for i in 0..dim {
        for k in 0..dim {
            let v = model.half_killing_theta(&model.basis[i].matrix, &model.basis[k].matrix)?;
            let on_a = matches!(model.basis[i].label, RootLabel::Cartan(_)) && matches!(model.basis[k].label, RootLabel::Cartan(_));
            let expect = if on_a { 0.5 * model.gram[(i, k)] } else { model.gram[(i, k)] };
            literal = literal.max((v - expect).abs() / model.b);
        }
    }
    let mut report = CheckReport::from_residuals("killing_potential_levi_form", 1e-8, &res);
    if literal > 1e-10 {
        report.pass = false;
    }
    Ok(report.with_detail(format!("-B(X,theta Y)/2 equals the inner product off a, half of it on a (residual {literal:.1e})")))
}

pub fn random_slice_points(rank: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..rank).map(|_| rng.gen_range(0.1..5.0)).collect()).collect()
}
