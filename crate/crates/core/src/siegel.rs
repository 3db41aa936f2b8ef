//! The Siegel-domain picture of `G/K`: the grading `s = s_0 + s_1/2 + s_1` by
//! `ad A_0`, the cone `V` in `s_1`, the `V`-valued Hermitian form `F` on
//! `s_1/2`, and the affine action of `N` on `s_1^C + s_1/2`.
//!
//! `s_1` is identified with Hermitian `r x r` matrices (real symmetric for
//! `sp`): the top-right block of the model matrix, times `-i` for `su(p,q)`.
//! Under this identification `V` is the positive definite cone, `E^j` is the
//! diagonal unit `e_jj`, and `Ad` of `exp(n_0)` acts by `S -> U S U^*` with `U`
//! unit upper triangular. The slice coordinates of `Y in V` are the diagonal
//! of `D` in `S = U D U^*`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{Family, LieModel, RootLabel};
use crate::coords::ell;
use crate::domains::DomainBase;
use crate::error::{Error, Result};
use crate::linalg::{bracket, expm, max_abs, Mat};
use crate::report::CheckReport;

pub type CMat = DMatrix<Complex64>;

/// Seed for the orbit sampling that validates the cone identification.
pub const CONE_CHECK_SEED: u64 = 6;

#[derive(Debug, Clone)]
pub struct Grading {
    /// Basis indices of `s_0`, `s_1/2`, `s_1`.
    pub s0: Vec<usize>,
    pub s_half: Vec<usize>,
    pub s1: Vec<usize>,
    /// Basis indices of `n_0` (the `e_j - e_l` spaces).
    pub n0: Vec<usize>,
    /// `A_0 = (A_1 + ... + A_r) / 2`.
    pub a0: Mat,
    /// `E_0 = E^1 + ... + E^r`.
    pub e0: Mat,
    pub max_eigen_residual: f64,
}

pub fn grade(model: &LieModel) -> Result<Grading> {
    let a0 = model.a.iter().fold(Mat::zeros(model.matrix_dim, model.matrix_dim), |acc, a| acc + a) * 0.5;
    let e0 = model.e.iter().fold(Mat::zeros(model.matrix_dim, model.matrix_dim), |acc, e| acc + e);
    let (mut s0, mut s_half, mut s1, mut n0) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut max_res = 0.0_f64;
    for (i, v) in model.basis.iter().enumerate() {
        let lambda = v.label.grade();
        let res = (bracket(&a0, &v.matrix) - &v.matrix * lambda).norm() / v.matrix.norm();
        max_res = max_res.max(res);
        if res > 1e-10 {
            return Err(Error::Inconsistent(format!("basis vector {i} is not an ad A_0 eigenvector")));
        }
        match lambda {
            0.0 => s0.push(i),
            0.5 => s_half.push(i),
            _ => s1.push(i),
        }
        if matches!(v.label, RootLabel::Diff(..)) {
            n0.push(i);
        }
    }
    if s_half.is_empty() != model.tube {
        return Err(Error::Inconsistent("s_1/2 vanishes exactly for tube type".into()));
    }
    Ok(Grading { s0, s_half, s1, n0, a0, e0, max_eigen_residual: max_res })
}

/// A point `(Z, W)`, `Z = re + i im` with `re, im` in `s_1`, `W` in `s_1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiegelPoint {
    pub re: Mat,
    pub im: Mat,
    pub w: Mat,
}

/// `n = (s, a, b)` acting by `(Z, W) -> (Ad_s Z + a + 2i F(Ad_s W, b) + i F(b, b), Ad_s W + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NElement {
    pub s: Mat,
    pub s_inv: Mat,
    pub a: Mat,
    pub b: Mat,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointCoords {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub w: Vec<f64>,
}

pub struct Siegel<'a> {
    pub model: &'a LieModel,
    pub grading: Grading,
}

impl<'a> Siegel<'a> {
    /// Grades the model and validates the cone identification on 100 orbit
    /// samples `Ad_{exp X} E_0`, `X` random in `s_0`.
    pub fn new(model: &'a LieModel) -> Result<Self> {
        let grading = grade(model)?;
        let sg = Siegel { model, grading };
        let mut rng = ChaCha8Rng::seed_from_u64(CONE_CHECK_SEED);
        for _ in 0..100 {
            let x = sg.random_in(&sg.grading.s0, &mut rng);
            let y = sg.ad_exp(&x, &sg.grading.e0);
            if !sg.cone_membership(&y)? {
                return Err(Error::Inconsistent("orbit of E_0 leaves the positive definite cone".into()));
            }
        }
        Ok(sg)
    }

    pub fn rank(&self) -> usize {
        self.model.rank
    }

    pub fn random_in<R: Rng + ?Sized>(&self, idx: &[usize], rng: &mut R) -> Mat {
        let n = self.model.matrix_dim;
        idx.iter().fold(Mat::zeros(n, n), |acc, &i| acc + &self.model.basis[i].matrix * rng.gen_range(-1.0..1.0))
    }

    /// `sum_j x_j E^j`.
    pub fn diagonal_element(&self, x: &[f64]) -> Mat {
        let n = self.model.matrix_dim;
        self.model.e.iter().zip(x).fold(Mat::zeros(n, n), |acc, (e, c)| acc + e * *c)
    }

    /// `Ad_{exp x} y`.
    pub fn ad_exp(&self, x: &Mat, y: &Mat) -> Mat {
        expm(x) * y * expm(&-x)
    }

    fn supported_on(&self, x: &Mat, idx: &[usize], what: &str) -> Result<()> {
        let c = self.model.s_coords(x)?;
        let scale = c.amax().max(1e-300);
        for i in 0..c.len() {
            if !idx.contains(&i) && c[i].abs() > 1e-9 * scale {
                return Err(Error::NotInSubspace(what.to_string()));
            }
        }
        Ok(())
    }

    pub fn check_s1(&self, y: &Mat) -> Result<()> {
        self.supported_on(y, &self.grading.s1, "s_1")
    }

    pub fn check_s_half(&self, w: &Mat) -> Result<()> {
        self.supported_on(w, &self.grading.s_half, "s_1/2")
    }

    pub fn check_s0(&self, x: &Mat) -> Result<()> {
        self.supported_on(x, &self.grading.s0, "s_0")
    }

    /// The Hermitian matrix attached to `Y` in `s_1`.
    pub fn cone_matrix(&self, y: &Mat) -> Result<CMat> {
        self.check_s1(y)?;
        let r = self.rank();
        Ok(match self.model.family {
            Family::Sl2R | Family::Sp { .. } => CMat::from_fn(r, r, |j, l| Complex64::new(y[(j, r + l)], 0.0)),
            Family::Su { p, q } => {
                let n = p + q;
                // S = -i M, M the complex x/w block.
                CMat::from_fn(r, r, |j, l| Complex64::new(y[(j, q + l)], y[(n + j, q + l)]) * Complex64::new(0.0, -1.0))
            }
        })
    }

    /// Diagonal of `D` in `S = U D U^*`, `U` unit upper triangular; `None` when
    /// `S` is not positive definite.
    pub fn slice_coords(&self, y: &Mat) -> Result<Option<Vec<f64>>> {
        let s = self.cone_matrix(y)?;
        Ok(udu_diagonal(&s))
    }

    pub fn cone_membership(&self, y: &Mat) -> Result<bool> {
        Ok(self.slice_coords(y)?.is_some())
    }

    /// Smallest eigenvalue of the Hermitian matrix of `Y` (membership in the closure of `V`).
    pub fn cone_min_eigenvalue(&self, y: &Mat) -> Result<f64> {
        let s = self.cone_matrix(y)?;
        let h = (&s + s.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min))
    }

    /// `F(W, W') = ([J W', W] - i [W', W]) / 4`, returned as `(Re, Im)`.
    pub fn hermitian_f(&self, w: &Mat, w2: &Mat) -> Result<(Mat, Mat)> {
        self.check_s_half(w)?;
        self.check_s_half(w2)?;
        let jw2 = self.model.apply_j(w2)?;
        Ok((bracket(&jw2, w) * 0.25, bracket(w2, w) * -0.25))
    }

    /// `(E^j)^*` coordinates of `Y` in `s_1`.
    pub fn project_p(&self, y: &Mat) -> Result<Vec<f64>> {
        self.check_s1(y)?;
        Ok((0..self.rank()).map(|j| self.model.dual_e(j, y)).collect())
    }

    pub fn project_ptilde(&self, z: &SiegelPoint) -> Result<Vec<f64>> {
        self.project_p(&z.im)
    }

    /// `Im Z - F(W, W)`.
    pub fn defect(&self, z: &SiegelPoint) -> Result<Mat> {
        let (f, _) = self.hermitian_f(&z.w, &z.w)?;
        Ok(&z.im - f)
    }

    /// Membership in `D(V, F)`; with `slice`, also requires the slice
    /// coordinates of `Im Z - F(W,W)` to lie in it.
    pub fn in_domain(&self, z: &SiegelPoint, slice: Option<&DomainBase>) -> Result<bool> {
        let y = self.defect(z)?;
        Ok(match self.slice_coords(&y)? {
            None => false,
            Some(d) => slice.is_none_or(|s| s.contains(&d)),
        })
    }

    /// `(i sum_j y_j E^j, 0)`.
    pub fn base_point(&self, y: &[f64]) -> SiegelPoint {
        let n = self.model.matrix_dim;
        SiegelPoint { re: Mat::zeros(n, n), im: self.diagonal_element(y), w: Mat::zeros(n, n) }
    }

    pub fn identity(&self) -> NElement {
        let n = self.model.matrix_dim;
        NElement { s: Mat::identity(n, n), s_inv: Mat::identity(n, n), a: Mat::zeros(n, n), b: Mat::zeros(n, n) }
    }

    /// Group element from `log s` in `s_0`, `a` in `s_1`, `b` in `s_1/2`.
    pub fn element(&self, s_log: &Mat, a: &Mat, b: &Mat) -> Result<NElement> {
        self.check_s0(s_log)?;
        self.check_s1(a)?;
        self.check_s_half(b)?;
        Ok(NElement { s: expm(s_log), s_inv: expm(&-s_log), a: a.clone(), b: b.clone() })
    }

    fn ad(&self, g: &NElement, x: &Mat) -> Mat {
        &g.s * x * &g.s_inv
    }

    pub fn n_action(&self, g: &NElement, z: &SiegelPoint) -> Result<SiegelPoint> {
        let sw = self.ad(g, &z.w);
        let (fr, fi) = self.hermitian_f(&sw, &g.b)?;
        let (fbb, _) = self.hermitian_f(&g.b, &g.b)?;
        // 2i F(sW, b) = 2i Fr - 2 Fi; i F(b, b) is purely imaginary.
        let re = self.ad(g, &z.re) + &g.a - fi * 2.0;
        let im = self.ad(g, &z.im) + fr * 2.0 + fbb;
        Ok(SiegelPoint { re, im, w: sw + &g.b })
    }

    /// `g1 g2`, acting as `g1` after `g2`.
    pub fn compose(&self, g1: &NElement, g2: &NElement) -> Result<NElement> {
        let sb2 = self.ad(g1, &g2.b);
        let (_, fi) = self.hermitian_f(&sb2, &g1.b)?;
        Ok(NElement {
            s: &g1.s * &g2.s,
            s_inv: &g2.s_inv * &g1.s_inv,
            a: &g1.a + self.ad(g1, &g2.a) - fi * 2.0,
            b: sb2 + &g1.b,
        })
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R, s_part: &[usize]) -> NElement {
        let s_log = self.random_in(s_part, rng);
        let a = self.random_in(&self.grading.s1, rng);
        let b = self.random_in(&self.grading.s_half, rng);
        NElement { s: expm(&s_log), s_inv: expm(&-s_log), a, b }
    }

    pub fn point_coords(&self, z: &SiegelPoint) -> Result<PointCoords> {
        let pick = |m: &Mat, idx: &[usize]| -> Result<Vec<f64>> {
            let c = self.model.s_coords(m)?;
            Ok(idx.iter().map(|&i| c[i]).collect())
        };
        Ok(PointCoords {
            re: pick(&z.re, &self.grading.s1)?,
            im: pick(&z.im, &self.grading.s1)?,
            w: pick(&z.w, &self.grading.s_half)?,
        })
    }

    fn random_positive(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.rank()).map(|_| rng.gen_range(0.2..2.0)).collect()
    }

    /// Orbits of `n_0`: projections shift into the cone, brackets along `e_j - e_l`
    /// are multiples of `E^j`, and projection commutes with convex hulls.
    pub fn verify_n0_orbits(&self, trials: usize, seed: u64) -> Vec<CheckReport> {
        let r = self.rank();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cone_res = Vec::with_capacity(trials);
        let mut last_res = Vec::with_capacity(trials);
        for _ in 0..trials {
            let x = self.random_positive(&mut rng);
            let e = self.diagonal_element(&x);
            let n = self.random_in(&self.grading.n0, &mut rng);
            let p = self.project_p(&self.ad_exp(&n, &e)).expect("orbit stays in s_1");
            // p - x must lie in the closed cone (R>=0)^{r-1} x {0}.
            let mut res = 0.0_f64;
            for j in 0..r {
                let d = p[j] - x[j];
                res = res.max(if j + 1 == r { d.abs() } else { (-d).max(0.0) });
            }
            cone_res.push(res);
            let t: f64 = rng.gen_range(-3.0..3.0);
            let q = self.project_p(&self.ad_exp(&(&n * t), &e)).expect("orbit stays in s_1");
            last_res.push((q[r - 1] - x[r - 1]).abs());
        }

        let mut bracket_res = Vec::new();
        let mut positive = true;
        for label in self.model.root_labels() {
            if let RootLabel::Diff(j, l) = label {
                for _ in 0..trials {
                    let x = self.model.random_root_vector(label, &mut rng);
                    let br = bracket(&bracket(&self.model.e[l], &x), &x);
                    let s = self.model.dual_e(j, &br);
                    positive &= s > 0.0;
                    bracket_res.push((&br - &self.model.e[j] * s).norm() / br.norm().max(1e-300));
                }
            }
        }

        let mut hull_res = Vec::with_capacity(trials);
        let mut hull_inside = 0;
        for _ in 0..trials {
            let pts: Vec<Mat> = (0..5)
                .map(|_| {
                    let x = self.random_positive(&mut rng);
                    let n = self.random_in(&self.grading.n0, &mut rng);
                    self.ad_exp(&n, &self.diagonal_element(&x))
                })
                .collect();
            let mut lam: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..1.0)).collect();
            let total: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|v| *v /= total);
            let combo = pts.iter().zip(&lam).fold(Mat::zeros(self.model.matrix_dim, self.model.matrix_dim), |acc, (p, l)| acc + p * *l);
            let lhs = self.project_p(&combo).expect("s_1");
            let mut rhs = vec![0.0; r];
            for (p, l) in pts.iter().zip(&lam) {
                for (k, v) in self.project_p(p).expect("s_1").into_iter().enumerate() {
                    rhs[k] += l * v;
                }
            }
            hull_res.push(lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
            if self.cone_membership(&combo).unwrap_or(false) {
                hull_inside += 1;
            }
        }

        let mut s_check = CheckReport::from_residuals("orbit_n0_bracket_multiple_of_e", 1e-8, &bracket_res);
        if !positive {
            s_check.pass = false;
            s_check = s_check.with_detail("non-positive coefficient");
        }
        if bracket_res.is_empty() {
            s_check = s_check.with_detail("rank 1: no e_j - e_l root spaces");
        }
        let mut hull = CheckReport::from_residuals("orbit_n0_projection_commutes_with_hull", 1e-8, &hull_res);
        if hull_inside != trials {
            hull.pass = false;
            hull = hull.with_detail(format!("{} convex combinations left V", trials - hull_inside));
        }
        vec![
            CheckReport::from_residuals("orbit_n0_projection_in_shifted_cone", 1e-8, &cone_res),
            CheckReport::from_residuals("orbit_n0_last_coordinate_invariant", 1e-8, &last_res),
            s_check,
            hull,
        ]
    }

    /// Projections of the `N`-orbit of `(i E, 0)` lie in `i(E + closed cone)`,
    /// and `F(W, W)` lies in the closure of `V`. Non-tube models only.
    pub fn verify_n_orbits(&self, trials: usize, seed: u64) -> Result<Vec<CheckReport>> {
        if self.model.tube {
            return Err(Error::NotApplicable("the orbit statement concerns non-tube type".into()));
        }
        let r = self.rank();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut orbit_res = Vec::with_capacity(trials);
        let mut grows = vec![false; r];
        for _ in 0..trials {
            let x = self.random_positive(&mut rng);
            let g = self.random_element(&mut rng, &self.grading.n0);
            let z = self.n_action(&g, &self.base_point(&x))?;
            let p = self.project_ptilde(&z)?;
            let mut res = 0.0_f64;
            for j in 0..r {
                let d = p[j] - x[j];
                res = res.max((-d).max(0.0));
                if d > 1e-6 {
                    grows[j] = true;
                }
            }
            orbit_res.push(res);
        }
        let mut psd_res = Vec::with_capacity(trials);
        let mut jbb_res = Vec::with_capacity(trials);
        for _ in 0..trials {
            let w = self.random_in(&self.grading.s_half, &mut rng);
            let (f, fi) = self.hermitian_f(&w, &w)?;
            let lam = self.cone_min_eigenvalue(&f)?;
            psd_res.push((-lam).max(0.0).max(max_abs(&fi)));
            // [J b, b] for b in a single e_j space is a positive multiple of E^j.
            let j = rng.gen_range(0..r);
            let b = self.model.random_root_vector(RootLabel::Short(j), &mut rng);
            let jbb = bracket(&self.model.apply_j(&b)?, &b);
            let s = self.model.dual_e(j, &jbb);
            let off = (&jbb - &self.model.e[j] * s).norm() / jbb.norm().max(1e-300);
            jbb_res.push(if s > 0.0 { off } else { f64::INFINITY });
        }
        let mut orbit = CheckReport::from_residuals("orbit_n_projection_in_shifted_cone", 1e-8, &orbit_res);
        if grows.iter().any(|g| !g) {
            orbit = orbit.with_detail(format!("coordinates reached above E: {grows:?}"));
        }
        Ok(vec![
            orbit,
            CheckReport::from_residuals("hermitian_form_values_in_closed_cone", 1e-10, &psd_res),
            CheckReport::from_residuals("jb_b_positive_multiple_of_e", 1e-9, &jbb_res),
        ])
    }

    /// Conjugate symmetry and sesquilinearity of `F`.
    pub fn verify_hermitian_f(&self, trials: usize, seed: u64) -> Result<Vec<CheckReport>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sym = Vec::new();
        let mut lin = Vec::new();
        for _ in 0..trials {
            let w = self.random_in(&self.grading.s_half, &mut rng);
            let w2 = self.random_in(&self.grading.s_half, &mut rng);
            let (fr, fi) = self.hermitian_f(&w, &w2)?;
            let (gr, gi) = self.hermitian_f(&w2, &w)?;
            sym.push(max_abs(&(&fr - gr)).max(max_abs(&(&fi + gi))));
            // Complex linear in the first argument: F(JW, W') = i F(W, W').
            let (hr, hi) = self.hermitian_f(&self.model.apply_j(&w)?, &w2)?;
            lin.push(max_abs(&(hr + &fi)).max(max_abs(&(hi - &fr))));
        }
        Ok(vec![
            CheckReport::from_residuals("hermitian_form_conjugate_symmetric", 1e-10, &sym),
            CheckReport::from_residuals("hermitian_form_complex_linear", 1e-10, &lin),
        ])
    }

    /// Identity, translations, composition and preservation of `D(V, F)`.
    pub fn verify_action(&self, trials: usize, seed: u64) -> Result<Vec<CheckReport>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut ident, mut trans, mut comp) = (Vec::new(), Vec::new(), Vec::new());
        let mut left = 0;
        for _ in 0..trials {
            let x = self.random_positive(&mut rng);
            let g0 = self.random_element(&mut rng, &self.grading.n0);
            let z = self.n_action(&g0, &self.base_point(&x))?;
            let zi = self.n_action(&self.identity(), &z)?;
            ident.push(max_abs(&(&zi.re - &z.re)).max(max_abs(&(&zi.im - &z.im))).max(max_abs(&(&zi.w - &z.w))));
            let mut t = self.identity();
            t.a = self.random_in(&self.grading.s1, &mut rng);
            let zt = self.n_action(&t, &z)?;
            trans.push(max_abs(&(&zt.im - &z.im)));
            let g1 = self.random_element(&mut rng, &self.grading.s0);
            let g2 = self.random_element(&mut rng, &self.grading.s0);
            let lhs = self.n_action(&g1, &self.n_action(&g2, &z)?)?;
            let rhs = self.n_action(&self.compose(&g1, &g2)?, &z)?;
            let scale = max_abs(&lhs.re).max(max_abs(&lhs.im)).max(1.0);
            comp.push(
                max_abs(&(&lhs.re - &rhs.re)).max(max_abs(&(&lhs.im - &rhs.im))).max(max_abs(&(&lhs.w - &rhs.w))) / scale,
            );
            if !(self.in_domain(&z, None)? && self.in_domain(&self.n_action(&g1, &z)?, None)?) {
                left += 1;
            }
        }
        Ok(vec![
            CheckReport::from_residuals("action_identity", 1e-12, &ident),
            CheckReport::from_residuals("action_translation_keeps_imaginary_part", 1e-12, &trans),
            CheckReport::from_residuals("action_composition", 1e-9, &comp),
            CheckReport::from_failures("action_preserves_domain", trials, left),
        ])
    }

    /// `exp(sum x_j E^j) exp(sum ln(y_k) A_k / 2)` applied to `(i E_0, 0)` gives
    /// `(sum x_j E^j + i Ad_a E_0, 0)`; reading back `x` and `ell(p~)` recovers
    /// the slice coordinates.
    pub fn verify_inverse_map(&self, trials: usize, seed: u64) -> Result<CheckReport> {
        let r = self.rank();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ones = vec![1.0; r];
        let mut res = Vec::with_capacity(trials);
        for _ in 0..trials {
            let x: Vec<f64> = (0..r).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..r).map(|_| rng.gen_range(0.1..5.0)).collect();
            let h = ell(&y)?;
            let a_log = self.model.a.iter().zip(h.iter()).fold(Mat::zeros(self.model.matrix_dim, self.model.matrix_dim), |acc, (a, c)| acc + a * *c);
            let a_el = self.element(&a_log, &Mat::zeros(self.model.matrix_dim, self.model.matrix_dim), &Mat::zeros(self.model.matrix_dim, self.model.matrix_dim))?;
            let mut n_el = self.identity();
            n_el.a = self.diagonal_element(&x);
            let z = self.n_action(&self.compose(&n_el, &a_el)?, &self.base_point(&ones))?;
            let xr = self.project_p(&z.re)?;
            let back = ell(&self.project_ptilde(&z)?)?;
            let mut worst = max_abs(&z.w);
            for j in 0..r {
                worst = worst.max((xr[j] - x[j]).abs()).max((back[j] - h[j]).abs());
            }
            res.push(worst);
        }
        Ok(CheckReport::from_residuals("inverse_map_identity", 1e-10, &res))
    }

    /// Random convex combinations of points of `D = N . i slice` stay in `D`.
    pub fn verify_convex_combinations(&self, slice: &DomainBase, samples: usize, seed: u64) -> Result<CheckReport> {
        if slice.rank != self.rank() {
            return Err(Error::RankMismatch { model: self.rank(), function: slice.rank });
        }
        let (center, radius) = slice.interior_point()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut ChaCha8Rng| -> Result<SiegelPoint> {
            loop {
                let y: Vec<f64> = center.iter().map(|c| c + rng.gen_range(-1.0..3.0) * radius.max(0.5)).collect();
                if slice.contains(&y) {
                    let g = self.random_element(rng, &self.grading.n0);
                    return self.n_action(&g, &self.base_point(&y));
                }
            }
        };
        let pairs: Vec<(SiegelPoint, SiegelPoint, f64)> = (0..samples)
            .map(|_| Ok((draw(&mut rng)?, draw(&mut rng)?, rng.gen_range(0.0..1.0))))
            .collect::<Result<_>>()?;
        let failures = pairs
            .par_iter()
            .filter(|(p, q, t)| {
                let z = SiegelPoint {
                    re: &p.re * *t + &q.re * (1.0 - t),
                    im: &p.im * *t + &q.im * (1.0 - t),
                    w: &p.w * *t + &q.w * (1.0 - t),
                };
                !self.in_domain(p, Some(slice)).unwrap_or(false)
                    || !self.in_domain(q, Some(slice)).unwrap_or(false)
                    || !self.in_domain(&z, Some(slice)).unwrap_or(false)
            })
            .count();
        Ok(CheckReport::from_failures("convex_combinations_stay_in_domain", samples, failures))
    }

    /// Ratio `<X, X> / (-f_0([J X, X]))` over the basis, `f_0 = B(., Z_0)`.
    /// Returns the common constant and the spread of the ratios.
    pub fn f0_constant(&self) -> Result<(f64, f64)> {
        let mut ratios = Vec::new();
        for v in &self.model.basis {
            let jx = self.model.apply_j(&v.matrix)?;
            let f = -self.model.killing_form(&bracket(&jx, &v.matrix), &self.model.z0)?;
            ratios.push(v.norm_sq / f);
        }
        let c = ratios[0];
        let spread = ratios.iter().map(|x| (x - c).abs() / c.abs()).fold(0.0, f64::max);
        Ok((c, spread))
    }
}

/// Diagonal of `D` in `S = U D U^*` (unit upper triangular `U`), eliminating
/// from the last index; `None` if a pivot is not positive.
pub fn udu_diagonal(s: &CMat) -> Option<Vec<f64>> {
    let r = s.nrows();
    let mut u = CMat::identity(r, r);
    let mut d = vec![0.0; r];
    let scale = s.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    for k in (0..r).rev() {
        let mut dk = s[(k, k)].re;
        for m in (k + 1)..r {
            dk -= u[(k, m)].norm_sqr() * d[m];
        }
        if !(dk > 1e-14 * scale) {
            return None;
        }
        d[k] = dk;
        for j in 0..k {
            let mut v = s[(j, k)];
            for m in (k + 1)..r {
                v -= u[(j, m)] * d[m] * u[(k, m)].conj();
            }
            u[(j, k)] = v / dk;
        }
    }
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grading_dimensions() {
        let sp = LieModel::build(Family::Sp { r: 2 }).unwrap();
        let g = grade(&sp).unwrap();
        assert!(g.s_half.is_empty());
        assert_eq!(g.s1.len(), 3);
        let sl = LieModel::build(Family::Sl2R).unwrap();
        let g = grade(&sl).unwrap();
        assert_eq!((g.s0.len(), g.s1.len()), (1, 1));
        let su = LieModel::build(Family::Su { p: 2, q: 3 }).unwrap();
        assert!(!grade(&su).unwrap().s_half.is_empty());
    }

    #[test]
    fn cone_examples() {
        let m = LieModel::build(Family::Su { p: 2, q: 3 }).unwrap();
        let sg = Siegel::new(&m).unwrap();
        assert!(sg.cone_membership(&sg.grading.e0).unwrap());
        assert!(!sg.cone_membership(&-&sg.grading.e0).unwrap());
        assert_eq!(sg.project_p(&sg.grading.e0).unwrap(), vec![1.0, 1.0]);
        assert!(sg.cone_membership(&m.a[0]).is_err());
    }

    #[test]
    fn udu_matches_two_by_two_formula() {
        let (t1, t2, t3) = (3.0, 2.0, 1.2);
        let s = CMat::from_row_slice(2, 2, &[t1, t3, t3, t2].map(|v| Complex64::new(v, 0.0)));
        let d = udu_diagonal(&s).unwrap();
        assert!((d[0] - (t1 - t3 * t3 / t2)).abs() < 1e-15 && (d[1] - t2).abs() < 1e-15);
    }

    #[test]
    fn hermitian_form_basics() {
        let m = LieModel::build(Family::Su { p: 2, q: 3 }).unwrap();
        let sg = Siegel::new(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = sg.random_in(&sg.grading.s_half, &mut rng);
        let zero = Mat::zeros(10, 10);
        let (a, b) = sg.hermitian_f(&zero, &w).unwrap();
        assert_eq!(max_abs(&a) + max_abs(&b), 0.0);
        for r in sg.verify_hermitian_f(20, 3).unwrap() {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn action_checks() {
        for fam in [Family::Sp { r: 2 }, Family::Su { p: 2, q: 3 }] {
            let m = LieModel::build(fam).unwrap();
            let sg = Siegel::new(&m).unwrap();
            for r in sg.verify_action(20, 5).unwrap() {
                assert!(r.pass, "{fam:?} {r:?}");
            }
            assert!(sg.verify_inverse_map(20, 1).unwrap().pass);
        }
    }

    #[test]
    fn f0_gives_the_inner_product() {
        let m = LieModel::build(Family::Su { p: 2, q: 3 }).unwrap();
        let (c, spread) = Siegel::new(&m).unwrap().f0_constant().unwrap();
        assert!((c - 1.0).abs() < 1e-10 && spread < 1e-10);
    }

    #[test]
    fn orbit_statements_hold() {
        for fam in [Family::Sp { r: 3 }, Family::Su { p: 2, q: 3 }, Family::Sl2R] {
            let m = LieModel::build(fam).unwrap();
            let sg = Siegel::new(&m).unwrap();
            for r in sg.verify_n0_orbits(30, 7) {
                assert!(r.pass, "{fam:?} {r:?}");
            }
        }
        let m = LieModel::build(Family::Su { p: 2, q: 3 }).unwrap();
        for r in Siegel::new(&m).unwrap().verify_n_orbits(30, 8).unwrap() {
            assert!(r.pass, "{r:?}");
        }
        let sp = LieModel::build(Family::Sp { r: 2 }).unwrap();
        assert!(Siegel::new(&sp).unwrap().verify_n_orbits(3, 8).is_err());
    }

    #[test]
    fn convex_slice_gives_convex_domain() {
        let m = LieModel::build(Family::Sp { r: 2 }).unwrap();
        let sg = Siegel::new(&m).unwrap();
        let slice = DomainBase::hrep(2, true, vec![crate::domains::HalfSpace { n: vec![-1.0, -1.0], c: -1.0 }]).unwrap();
        assert!(sg.verify_convex_combinations(&slice, 500, 4).unwrap().pass);
        let bounded = DomainBase::hrep(2, true, vec![crate::domains::HalfSpace { n: vec![1.0, 1.0], c: 3.0 }]).unwrap();
        let r = sg.verify_convex_combinations(&bounded, 500, 4).unwrap();
        assert!(!r.pass, "{r:?}");
    }
}
