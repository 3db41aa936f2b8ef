//! Concrete matrix models of the Hermitian Lie algebras `sl(2,R)`, `sp(2r,R)`
//! and `su(p,q)` together with their normalized restricted-root data.
//!
//! Every model is realized by real matrices: `su(p,q)` is embedded in
//! `gl(2(p+q), R)` through `Z = X + iY -> [[X, -Y], [Y, X]]`, which turns the
//! Cartan involution `X -> -X^*` into `X -> -X^T` for all families.
//!
//! Conventions fixed by the model:
//! * `A_j = [theta E^j, E^j]` and `[A_j, E^l] = 2 delta_{jl} E^l`;
//! * `b = B(A_j, A_j)` where `B` is the Killing form, computed from traces of
//!   adjoint maps when the model is built;
//! * `Z_0` spans the center of `k` and is scaled so that
//!   `[Z_0, E^j - theta E^j] = A_j`;
//! * `J = phi^{-1} o ad(Z_0) o phi` on `s = n + a`, with `phi(X) = (X - theta X)/2`;
//! * `<X, Y> = B(phi X, phi Y)`. On `n` and on mixed `a x n` pairs this equals
//!   `-B(X, theta Y)/2`; on `a x a` it equals `B(X, Y)`, twice that expression.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{bracket, independent_subset, max_abs, null_space, unit, Mat, SpanSolver, Vector};

/// Relative tolerance for "X lies in the root space g^alpha".
pub const ROOT_TOL: f64 = 1e-9;
/// Tolerance on `J^2 + id` over the basis of `s`.
pub const J_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum Family {
    #[serde(rename = "sl2")]
    Sl2R,
    #[serde(rename = "sp")]
    Sp { r: usize },
    #[serde(rename = "su")]
    Su { p: usize, q: usize },
}

impl Family {
    /// Parses either a JSON descriptor (`{"family":"sp","r":2}`) or the short
    /// forms `sl2`, `sp:2`, `su:2:3` / `su:2,3`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t.starts_with('{') {
            return serde_json::from_str(t).map_err(|e| Error::InvalidModel(e.to_string()));
        }
        let parts: Vec<&str> = t.split([':', ',', ' ']).filter(|s| !s.is_empty()).collect();
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::InvalidModel(format!("bad integer {s:?} in {t:?}")))
        };
        match parts.as_slice() {
            ["sl2"] => Ok(Family::Sl2R),
            ["sp", r] => Ok(Family::Sp { r: num(r)? }),
            ["su", p, q] => Ok(Family::Su { p: num(p)?, q: num(q)? }),
            _ => Err(Error::InvalidModel(format!("unsupported model descriptor {t:?}"))),
        }
    }

    pub fn descriptor(&self) -> String {
        serde_json::to_string(self).expect("family serializes")
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Sl2R => write!(f, "sl(2,R)"),
            Family::Sp { r } => write!(f, "sp({},R)", 2 * r),
            Family::Su { p, q } => write!(f, "su({p},{q})"),
        }
    }
}

/// Positive restricted roots appearing in `s`, plus `a` itself. Indices are
/// zero-based: `Diff(0, 1)` is `e_1 - e_2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RootLabel {
    Cartan(usize),
    Long(usize),
    Diff(usize, usize),
    Sum(usize, usize),
    Short(usize),
}

impl RootLabel {
    /// Values `alpha(A_k)` for `k = 0..r`. `Cartan` has weight zero.
    pub fn weights(&self, r: usize) -> Vec<f64> {
        let mut w = vec![0.0; r];
        match *self {
            RootLabel::Cartan(_) => {}
            RootLabel::Long(j) => w[j] = 2.0,
            RootLabel::Diff(j, l) => {
                w[j] = 1.0;
                w[l] = -1.0;
            }
            RootLabel::Sum(j, l) => {
                w[j] = 1.0;
                w[l] = 1.0;
            }
            RootLabel::Short(j) => w[j] = 1.0,
        }
        w
    }

    /// Root space that `J` maps this one onto.
    pub fn j_image(&self) -> RootLabel {
        match *self {
            RootLabel::Cartan(j) => RootLabel::Long(j),
            RootLabel::Long(j) => RootLabel::Cartan(j),
            RootLabel::Diff(j, l) => RootLabel::Sum(j, l),
            RootLabel::Sum(j, l) => RootLabel::Diff(j, l),
            RootLabel::Short(j) => RootLabel::Short(j),
        }
    }

    /// Eigenvalue of `ad A_0`, `A_0 = (A_1 + ... + A_r)/2`.
    pub fn grade(&self) -> f64 {
        match self {
            RootLabel::Cartan(_) | RootLabel::Diff(..) => 0.0,
            RootLabel::Short(_) => 0.5,
            RootLabel::Long(_) | RootLabel::Sum(..) => 1.0,
        }
    }

    fn from_weights(w: &[f64]) -> Option<RootLabel> {
        let near = |x: f64, t: f64| (x - t).abs() < 1e-6;
        let nonzero: Vec<(usize, f64)> =
            w.iter().copied().enumerate().filter(|(_, v)| !near(*v, 0.0)).collect();
        match nonzero.as_slice() {
            [(j, v)] if near(*v, 2.0) => Some(RootLabel::Long(*j)),
            [(j, v)] if near(*v, 1.0) => Some(RootLabel::Short(*j)),
            [(j, a), (l, c)] if near(*a, 1.0) && near(*c, -1.0) => Some(RootLabel::Diff(*j, *l)),
            [(j, a), (l, c)] if near(*a, 1.0) && near(*c, 1.0) => Some(RootLabel::Sum(*j, *l)),
            _ => None,
        }
    }
}

impl fmt::Display for RootLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RootLabel::Cartan(j) => write!(f, "a{}", j + 1),
            RootLabel::Long(j) => write!(f, "2e{}", j + 1),
            RootLabel::Diff(j, l) => write!(f, "e{}-e{}", j + 1, l + 1),
            RootLabel::Sum(j, l) => write!(f, "e{}+e{}", j + 1, l + 1),
            RootLabel::Short(j) => write!(f, "e{}", j + 1),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BasisVector {
    pub label: RootLabel,
    pub matrix: Mat,
    /// `<X, X>`, stored unnormalized.
    pub norm_sq: f64,
    /// Index of the basis vector spanning the same complex line (`J X` up to scale).
    pub j_partner: usize,
}

/// Matrix of `J` in the ordered basis of `s`.
#[derive(Debug, Clone)]
pub struct ComplexStructureJ {
    pub matrix: Mat,
}

impl ComplexStructureJ {
    pub fn apply(&self, coords: &Vector) -> Vector {
        &self.matrix * coords
    }
}

#[derive(Debug, Clone)]
pub struct LieModel {
    pub family: Family,
    pub rank: usize,
    pub matrix_dim: usize,
    pub tube: bool,
    /// `B(X, Y) = kappa * tr(XY)`, checked against ad-traces at build time.
    pub kappa: f64,
    pub b: f64,
    pub a: Vec<Mat>,
    pub e: Vec<Mat>,
    pub z0: Mat,
    pub basis: Vec<BasisVector>,
    /// Gram matrix of `<.,.>` in the basis of `s`.
    pub gram: Mat,
    pub j: ComplexStructureJ,
    /// Basis of the full algebra `g`.
    pub g_basis: Vec<Mat>,
    /// Max deviation between ad-trace Killing form and `kappa * tr` on `g`.
    pub killing_residual: f64,
    s_solver: SpanSolver,
    form: Mat,
}

struct FamilyData {
    rank: usize,
    n: usize,
    tube: bool,
    form: Mat,
    params: Vec<Mat>,
    trace_blocks: bool,
    a: Vec<Mat>,
    e: Vec<Mat>,
    /// Spanning vectors of the root spaces of `n` other than the `2e_j`,
    /// grouped per root in the order the final basis uses.
    candidates: Vec<(RootLabel, Vec<Mat>)>,
    /// Spanning vectors of the `e_j + e_l` root spaces; only used to solve for `J`.
    sums: Vec<Mat>,
}

fn symplectic_data(r: usize) -> FamilyData {
    let n = 2 * r;
    let mut form = Mat::zeros(n, n);
    for i in 0..r {
        form[(i, r + i)] = 1.0;
        form[(r + i, i)] = -1.0;
    }
    let a = (0..r).map(|j| unit(n, j, j) - unit(n, r + j, r + j)).collect();
    let e = (0..r).map(|j| unit(n, j, r + j)).collect();
    let mut candidates = Vec::new();
    let mut sums = Vec::new();
    for j in 0..r {
        for l in (j + 1)..r {
            candidates.push((RootLabel::Diff(j, l), vec![unit(n, j, l) - unit(n, r + l, r + j)]));
            sums.push(unit(n, j, r + l) + unit(n, l, r + j));
        }
    }
    let params = (0..n).flat_map(|i| (0..n).map(move |k| unit(n, i, k))).collect();
    FamilyData { rank: r, n, tube: true, form, params, trace_blocks: false, a, e, candidates, sums }
}

fn realify(re: &Mat, im: &Mat) -> Mat {
    let n = re.nrows();
    let mut m = Mat::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(re);
    m.view_mut((n, n), (n, n)).copy_from(re);
    m.view_mut((0, n), (n, n)).copy_from(&(-im));
    m.view_mut((n, 0), (n, n)).copy_from(im);
    m
}

/// `su(p,q)` for the Hermitian form `sum_k (x_k conj(w_k) + w_k conj(x_k)) - |z|^2`,
/// coordinates ordered `(x_1..x_p, z_1..z_{q-p}, w_1..w_p)`. In this basis the
/// split Cartan subspace is diagonal.
fn unitary_data(p: usize, q: usize) -> FamilyData {
    let n = p + q;
    let xi = |k: usize| k;
    let zi = |m: usize| p + m;
    let wi = |k: usize| q + k;
    let sigma = |i: usize| {
        if i < p {
            q + i
        } else if i >= q {
            i - q
        } else {
            i
        }
    };
    let sign = |i: usize| if i >= p && i < q { -1.0 } else { 1.0 };

    let mut qform = Mat::zeros(n, n);
    for k in 0..p {
        qform[(xi(k), wi(k))] = 1.0;
        qform[(wi(k), xi(k))] = 1.0;
    }
    for m in 0..(q - p) {
        qform[(zi(m), zi(m))] = -1.0;
    }
    let zero = Mat::zeros(n, n);
    let form = realify(&qform, &zero);

    // Element of su(Q) supported on position (c,d) and its partner, for
    // lambda = 1 (imaginary = false) or lambda = i.
    let element = |c: usize, d: usize, imaginary: bool| -> Mat {
        let mut re = Mat::zeros(n, n);
        let mut im = Mat::zeros(n, n);
        let (pc, pd) = (sigma(d), sigma(c));
        let s = -sign(c) * sign(d);
        if imaginary {
            im[(c, d)] = 1.0;
            if (pc, pd) != (c, d) {
                // partner entry = s * conj(i) = -s i
                im[(pc, pd)] = -s;
            }
        } else {
            re[(c, d)] = 1.0;
            re[(pc, pd)] = s;
        }
        realify(&re, &im)
    };

    let a = (0..p)
        .map(|j| {
            let re = unit(n, xi(j), xi(j)) - unit(n, wi(j), wi(j));
            realify(&re, &zero)
        })
        .collect();
    let e = (0..p).map(|j| element(xi(j), wi(j), true)).collect();

    let mut candidates = Vec::new();
    let mut sums = Vec::new();
    for j in 0..p {
        for l in (j + 1)..p {
            sums.push(element(xi(j), wi(l), false));
            sums.push(element(xi(j), wi(l), true));
            candidates.push((
                RootLabel::Diff(j, l),
                vec![element(xi(j), xi(l), false), element(xi(j), xi(l), true)],
            ));
        }
    }
    for j in 0..p {
        let mut v = Vec::new();
        for m in 0..(q - p) {
            v.push(element(xi(j), zi(m), false));
            v.push(element(xi(j), zi(m), true));
        }
        if !v.is_empty() {
            candidates.push((RootLabel::Short(j), v));
        }
    }

    let mut params = Vec::new();
    for i in 0..n {
        for k in 0..n {
            params.push(realify(&unit(n, i, k), &zero));
            params.push(realify(&zero, &unit(n, i, k)));
        }
    }
    FamilyData { rank: p, n: 2 * n, tube: p == q, form, params, trace_blocks: true, a, e, candidates, sums }
}

impl LieModel {
    pub fn build(family: Family) -> Result<Self> {
        let data = match family {
            Family::Sl2R => symplectic_data(1),
            Family::Sp { r } => {
                if r == 0 {
                    return Err(Error::InvalidModel("sp(2r,R) needs r >= 1".into()));
                }
                symplectic_data(r)
            }
            Family::Su { p, q } => {
                if p == 0 || p > q {
                    return Err(Error::InvalidModel(format!("su(p,q) needs 1 <= p <= q, got ({p},{q})")));
                }
                unitary_data(p, q)
            }
        };
        Self::from_data(family, data)
    }

    fn constraint(data: &FamilyData, x: &Mat) -> Vec<f64> {
        let c = x.transpose() * &data.form + &data.form * x;
        let mut out: Vec<f64> = c.as_slice().to_vec();
        if data.trace_blocks {
            let h = data.n / 2;
            out.push((0..h).map(|i| x[(i, i)]).sum());
            out.push((0..h).map(|i| x[(h + i, i)]).sum());
        } else {
            out.push(x.trace());
        }
        out
    }

    fn from_data(family: Family, data: FamilyData) -> Result<Self> {
        let r = data.rank;
        let n = data.n;
        let theta = |x: &Mat| -x.transpose();

        // Basis of g: null space of the defining constraints over the parameter family.
        let cols: Vec<Vector> =
            data.params.iter().map(|u| Vector::from_vec(Self::constraint(&data, u))).collect();
        let cmat = Mat::from_columns(&cols);
        let ns = null_space(&cmat, 1e-12);
        let g_basis: Vec<Mat> = (0..ns.ncols())
            .map(|k| {
                data.params
                    .iter()
                    .zip(ns.column(k).iter())
                    .fold(Mat::zeros(n, n), |acc, (u, c)| acc + u * *c)
            })
            .collect();
        let dim_g = g_basis.len();
        let g_solver = SpanSolver::new(&g_basis)
            .ok_or_else(|| Error::Inconsistent("degenerate basis of g".into()))?;

        let in_g = |x: &Mat| -> bool {
            let c = Self::constraint(&data, x);
            c.iter().fold(0.0_f64, |m, v| m.max(v.abs())) <= 1e-10 * max_abs(x).max(1.0)
        };

        // Killing form from adjoint traces, then fitted to kappa * tr(XY).
        let ad: Vec<Mat> = g_basis
            .iter()
            .map(|x| {
                let cols: Vec<Vector> = g_basis.iter().map(|y| g_solver.coords(&bracket(x, y)).0).collect();
                Mat::from_columns(&cols)
            })
            .collect();
        let mut num = 0.0;
        let mut den = 0.0;
        let mut pairs = Vec::with_capacity(dim_g * dim_g);
        for i in 0..dim_g {
            for k in 0..dim_g {
                let bk = (&ad[i] * &ad[k]).trace();
                let tr = (&g_basis[i] * &g_basis[k]).trace();
                num += bk * tr;
                den += tr * tr;
                pairs.push((bk, tr));
            }
        }
        let kappa = num / den;
        let killing_residual = pairs.iter().fold(0.0_f64, |m, (bk, tr)| m.max((bk - kappa * tr).abs()));
        let bscale = pairs.iter().fold(1.0_f64, |m, (bk, _)| m.max(bk.abs()));
        if killing_residual > 1e-9 * bscale {
            return Err(Error::Inconsistent(format!(
                "Killing form is not proportional to the trace form (residual {killing_residual:e})"
            )));
        }
        let killing = |x: &Mat, y: &Mat| kappa * (x * y).trace();

        // Normalization of the sl2-triples.
        for j in 0..r {
            if !in_g(&data.a[j]) || !in_g(&data.e[j]) {
                return Err(Error::Inconsistent(format!("A_{0} or E^{0} is not in g", j + 1)));
            }
            let aj = bracket(&theta(&data.e[j]), &data.e[j]);
            if max_abs(&(&aj - &data.a[j])) > 1e-12 {
                return Err(Error::Inconsistent(format!("[theta E^{0}, E^{0}] != A_{0}", j + 1)));
            }
            for l in 0..r {
                let expect = if j == l { &data.e[l] * 2.0 } else { Mat::zeros(n, n) };
                if max_abs(&(bracket(&data.a[j], &data.e[l]) - expect)) > 1e-12 {
                    return Err(Error::Inconsistent(format!("[A_{}, E^{}] normalization", j + 1, l + 1)));
                }
            }
        }
        let b = killing(&data.a[0], &data.a[0]);
        for j in 1..r {
            let bj = killing(&data.a[j], &data.a[j]);
            if (bj - b).abs() > 1e-10 * b {
                return Err(Error::Inconsistent(format!("B(A_j, A_j) differs across j: {b} vs {bj}")));
            }
        }
        if b <= 0.0 {
            return Err(Error::Inconsistent(format!("b = {b} is not positive")));
        }

        // Z_0: spans the center of k, scaled by [Z_0, E^1 - theta E^1] = A_1.
        let k_family: Vec<Mat> = g_basis.iter().map(|x| (x + theta(x)) * 0.5).collect();
        let k_basis = independent_subset(&k_family, 1e-9);
        let mut center_cols = Vec::new();
        for ki in &k_basis {
            let mut v = Vec::new();
            for kk in &k_basis {
                v.extend_from_slice(bracket(ki, kk).as_slice());
            }
            center_cols.push(Vector::from_vec(v));
        }
        let cns = null_space(&Mat::from_columns(&center_cols), 1e-12);
        if cns.ncols() != 1 {
            return Err(Error::Inconsistent(format!("center of k has dimension {}", cns.ncols())));
        }
        let z_raw = k_basis
            .iter()
            .zip(cns.column(0).iter())
            .fold(Mat::zeros(n, n), |acc, (k, c)| acc + k * *c);
        let p1 = &data.e[0] - theta(&data.e[0]);
        let img = bracket(&z_raw, &p1);
        let lambda = img.dot(&data.a[0]) / data.a[0].dot(&data.a[0]);
        let z0 = z_raw / lambda;
        for j in 0..r {
            let pj = &data.e[j] - theta(&data.e[j]);
            if max_abs(&(bracket(&z0, &pj) - &data.a[j])) > 1e-10 {
                return Err(Error::Inconsistent(format!("[Z_0, E^{0} - theta E^{0}] != A_{0}", j + 1)));
            }
        }

        // J on s through phi, expressed on the spanning candidates.
        let phi = |x: &Mat| (x - theta(x)) * 0.5;
        let mut cand: Vec<Mat> = Vec::new();
        cand.extend(data.a.iter().cloned());
        cand.extend(data.e.iter().cloned());
        for (_, v) in &data.candidates {
            cand.extend(v.iter().cloned());
        }
        cand.extend(data.sums.iter().cloned());
        let phi_cand: Vec<Mat> = cand.iter().map(phi).collect();
        let phi_solver = SpanSolver::new(&phi_cand)
            .ok_or_else(|| Error::Inconsistent("phi(s) candidates are dependent".into()))?;
        let cand_solver = SpanSolver::new(&cand)
            .ok_or_else(|| Error::Inconsistent("s candidates are dependent".into()))?;
        let j_op = |x: &Mat| -> Result<Mat> {
            let (c, res) = phi_solver.coords(&bracket(&z0, &phi(x)));
            if res > 1e-10 {
                return Err(Error::Inconsistent(format!("ad Z_0 does not preserve p (residual {res:e})")));
            }
            Ok(cand_solver.combine(&c))
        };
        let inner = |x: &Mat, y: &Mat| killing(&phi(x), &phi(y));

        // Final J-stable, orthogonal basis of s.
        let mut basis: Vec<BasisVector> = Vec::new();
        let push = |basis: &mut Vec<BasisVector>, label: RootLabel, m: Mat, partner: usize| {
            let norm_sq = inner(&m, &m);
            basis.push(BasisVector { label, matrix: m, norm_sq, j_partner: partner });
        };
        for j in 0..r {
            push(&mut basis, RootLabel::Cartan(j), data.a[j].clone(), r + j);
        }
        for j in 0..r {
            push(&mut basis, RootLabel::Long(j), data.e[j].clone(), j);
        }
        let orthogonalize = |v: &Mat, against: &[Mat]| -> Mat {
            against.iter().fold(v.clone(), |acc, u| {
                let c = inner(&acc, u) / inner(u, u);
                acc - u * c
            })
        };
        for (label, vecs) in &data.candidates {
            match *label {
                RootLabel::Diff(j, l) => {
                    let mut xs: Vec<Mat> = Vec::new();
                    for v in vecs {
                        let w = orthogonalize(v, &xs);
                        if w.norm() > 1e-8 * v.norm() {
                            xs.push(w);
                        }
                    }
                    let start = basis.len();
                    let k = xs.len();
                    let jx: Vec<Mat> = xs.iter().map(&j_op).collect::<Result<_>>()?;
                    for (i, x) in xs.into_iter().enumerate() {
                        push(&mut basis, RootLabel::Diff(j, l), x, start + k + i);
                    }
                    for (i, y) in jx.into_iter().enumerate() {
                        push(&mut basis, RootLabel::Sum(j, l), y, start + i);
                    }
                }
                RootLabel::Short(j) => {
                    let mut acc: Vec<Mat> = Vec::new();
                    for v in vecs {
                        let w = orthogonalize(v, &acc);
                        if w.norm() > 1e-8 * v.norm() {
                            let jw = j_op(&w)?;
                            let idx = basis.len();
                            push(&mut basis, RootLabel::Short(j), w.clone(), idx + 1);
                            push(&mut basis, RootLabel::Short(j), jw.clone(), idx);
                            acc.push(w);
                            acc.push(jw);
                        }
                    }
                }
                _ => unreachable!("candidate lists only hold e_j - e_l and e_j"),
            }
        }

        let mats: Vec<Mat> = basis.iter().map(|v| v.matrix.clone()).collect();
        let s_solver =
            SpanSolver::new(&mats).ok_or_else(|| Error::Inconsistent("basis of s is dependent".into()))?;
        let dim_s = mats.len();
        let mut gram = Mat::zeros(dim_s, dim_s);
        for i in 0..dim_s {
            for k in 0..dim_s {
                gram[(i, k)] = inner(&mats[i], &mats[k]);
            }
        }
        let mut jcols = Vec::with_capacity(dim_s);
        for m in &mats {
            let jm = j_op(m)?;
            let (c, res) = s_solver.coords(&jm);
            if res > 1e-10 {
                return Err(Error::Inconsistent(format!("J leaves s (residual {res:e})")));
            }
            jcols.push(c);
        }
        let jmat = Mat::from_columns(&jcols);
        let jsq = &jmat * &jmat + Mat::identity(dim_s, dim_s);
        if max_abs(&jsq) > J_TOL {
            return Err(Error::Inconsistent(format!("J^2 + id = {:e} on the basis", max_abs(&jsq))));
        }

        let model = LieModel {
            family,
            rank: r,
            matrix_dim: n,
            tube: data.tube,
            kappa,
            b,
            a: data.a,
            e: data.e,
            z0,
            basis,
            gram,
            j: ComplexStructureJ { matrix: jmat },
            g_basis,
            killing_residual,
            s_solver,
            form: data.form,
        };
        for v in &model.basis {
            if model.root_of(&v.matrix) != Some(v.label) {
                return Err(Error::Inconsistent(format!("basis vector not in g^{}", v.label)));
            }
        }
        Ok(model)
    }

    pub fn dim_s(&self) -> usize {
        self.basis.len()
    }

    pub fn dim_g(&self) -> usize {
        self.g_basis.len()
    }

    pub fn theta(&self, x: &Mat) -> Mat {
        -x.transpose()
    }

    pub fn phi(&self, x: &Mat) -> Mat {
        (x - self.theta(x)) * 0.5
    }

    fn check_shape(&self, x: &Mat) -> Result<()> {
        if x.nrows() != self.matrix_dim || x.ncols() != self.matrix_dim {
            return Err(Error::DimensionMismatch { expected: self.matrix_dim, got: x.nrows().max(x.ncols()) });
        }
        Ok(())
    }

    /// True when `x` satisfies the defining equations of `g`.
    pub fn contains(&self, x: &Mat) -> bool {
        if self.check_shape(x).is_err() {
            return false;
        }
        let c = x.transpose() * &self.form + &self.form * x;
        max_abs(&c) <= 1e-10 * max_abs(x).max(1.0)
    }

    pub fn killing_form(&self, x: &Mat, y: &Mat) -> Result<f64> {
        self.check_shape(x)?;
        self.check_shape(y)?;
        Ok(self.kappa * (x * y).trace())
    }

    /// Killing form computed directly as `tr(ad X ad Y)` on `g`.
    pub fn killing_form_ad(&self, x: &Mat, y: &Mat) -> Result<f64> {
        self.check_shape(x)?;
        self.check_shape(y)?;
        let solver = SpanSolver::new(&self.g_basis).expect("g basis independent");
        let ad = |z: &Mat| {
            let cols: Vec<Vector> = self.g_basis.iter().map(|g| solver.coords(&bracket(z, g)).0).collect();
            Mat::from_columns(&cols)
        };
        Ok((ad(x) * ad(y)).trace())
    }

    /// Coordinates of `x` in the basis of `s`.
    pub fn s_coords(&self, x: &Mat) -> Result<Vector> {
        self.check_shape(x)?;
        let (c, res) = self.s_solver.coords(x);
        if res > ROOT_TOL && max_abs(x) > 0.0 {
            return Err(Error::NotInSubspace(format!("s (relative residual {res:e})")));
        }
        Ok(c)
    }

    pub fn from_s_coords(&self, c: &Vector) -> Mat {
        self.s_solver.combine(c)
    }

    /// `<X, Y> = B(phi X, phi Y)` for `X, Y` in `s`.
    pub fn inner_product(&self, x: &Mat, y: &Mat) -> Result<f64> {
        let cx = self.s_coords(x)?;
        let cy = self.s_coords(y)?;
        Ok((cx.transpose() * &self.gram * cy)[(0, 0)])
    }

    /// `-B(X, theta Y)/2`, the alternative expression of the inner product.
    pub fn half_killing_theta(&self, x: &Mat, y: &Mat) -> Result<f64> {
        Ok(-0.5 * self.killing_form(x, &self.theta(y))?)
    }

    pub fn complex_structure(&self) -> &ComplexStructureJ {
        &self.j
    }

    pub fn apply_j(&self, x: &Mat) -> Result<Mat> {
        let c = self.s_coords(x)?;
        Ok(self.from_s_coords(&self.j.apply(&c)))
    }

    /// Root space of `s` containing `x`, by the ad-`a` eigenvalue test.
    /// `None` when `x` is zero or not an ad-`a` eigenvector with a positive root.
    pub fn root_of(&self, x: &Mat) -> Option<RootLabel> {
        let nx = x.norm();
        if nx == 0.0 {
            return None;
        }
        let mut w = Vec::with_capacity(self.rank);
        for a in &self.a {
            let ax = bracket(a, x);
            let alpha = ax.dot(x) / x.dot(x);
            if (ax - x * alpha).norm() > ROOT_TOL * nx {
                return None;
            }
            w.push(alpha);
        }
        if w.iter().all(|v| v.abs() < 1e-6) {
            // Weight zero: only a belongs to s.
            let c = self.s_coords(x).ok()?;
            let j = (0..self.rank).max_by(|&i, &k| c[i].abs().total_cmp(&c[k].abs()))?;
            return Some(RootLabel::Cartan(j));
        }
        RootLabel::from_weights(&w)
    }

    pub fn in_root_space(&self, x: &Mat, label: RootLabel) -> bool {
        let nx = x.norm();
        if nx == 0.0 {
            return true;
        }
        let w = label.weights(self.rank);
        let ok = self.a.iter().zip(&w).all(|(a, &alpha)| (bracket(a, x) - x * alpha).norm() <= ROOT_TOL * nx);
        ok && (!matches!(label, RootLabel::Cartan(_)) || self.s_coords(x).is_ok())
    }

    /// Indices of the basis vectors spanning a root space.
    pub fn root_space(&self, label: RootLabel) -> Vec<usize> {
        let same = |l: &RootLabel| match (l, &label) {
            (RootLabel::Cartan(_), RootLabel::Cartan(_)) => true,
            _ => *l == label,
        };
        self.basis.iter().enumerate().filter(|(_, v)| same(&v.label)).map(|(i, _)| i).collect()
    }

    /// Root spaces present in the model (one label per root, `a` as `Cartan(0)`).
    pub fn root_labels(&self) -> Vec<RootLabel> {
        let mut out: Vec<RootLabel> = Vec::new();
        for v in &self.basis {
            let l = match v.label {
                RootLabel::Cartan(_) => RootLabel::Cartan(0),
                other => other,
            };
            if !out.contains(&l) {
                out.push(l);
            }
        }
        out
    }

    pub fn root_multiplicity(&self, label: RootLabel) -> usize {
        self.root_space(label).len()
    }

    /// `(E^j)^*(X) = B(X, theta E^j) / B(E^j, theta E^j)`.
    pub fn dual_e(&self, j: usize, x: &Mat) -> f64 {
        let te = self.theta(&self.e[j]);
        (x * &te).trace() / (&self.e[j] * &te).trace()
    }

    /// Random element of a root space: uniform `[-1,1]` coefficients on its basis.
    pub fn random_root_vector<R: Rng + ?Sized>(&self, label: RootLabel, rng: &mut R) -> Mat {
        self.root_space(label)
            .into_iter()
            .fold(Mat::zeros(self.matrix_dim, self.matrix_dim), |acc, i| {
                acc + &self.basis[i].matrix * rng.gen_range(-1.0..1.0)
            })
    }

    /// Coefficient `s` with `[JX, X] = s E^j` for `X` in `g^{e_j - e_l}` or `g^{e_j}`.
    pub fn bracket_constant(&self, x: &Mat) -> Result<f64> {
        self.check_shape(x)?;
        if max_abs(x) == 0.0 {
            return Err(Error::InvalidInput("bracket constant of the zero vector".into()));
        }
        let j = match self.root_of(x) {
            Some(RootLabel::Diff(j, _)) | Some(RootLabel::Short(j)) => j,
            Some(other) => {
                return Err(Error::NotApplicable(format!("bracket constant on g^{other}")));
            }
            None => return Err(Error::NotInSubspace("a single root space e_j - e_l or e_j".into())),
        };
        let jx = self.apply_j(x)?;
        let br = bracket(&jx, x);
        let s = self.dual_e(j, &br);
        let resid = (&br - &self.e[j] * s).norm();
        if resid > 1e-9 * br.norm().max(1e-300) {
            return Err(Error::Inconsistent(format!("[JX, X] is not a multiple of E^{}", j + 1)));
        }
        let expected = 4.0 * self.inner_product(x, x)? / self.b;
        if s <= 0.0 || (s - expected).abs() > 1e-8 * s.abs() {
            return Err(Error::Inconsistent(format!("bracket constant {s} differs from 4|X|^2/b = {expected}")));
        }
        Ok(s)
    }

    /// Checks `[J X', X] = 0` for the partner `X'` of `X` in `g^{e_j - e_l}`:
    /// the vector of the same length orthogonal to `X` inside the (two-dimensional)
    /// root space.
    pub fn orthogonality_check(&self, x: &Mat) -> Result<bool> {
        self.check_shape(x)?;
        if max_abs(x) == 0.0 {
            return Ok(true);
        }
        let (j, l) = match self.root_of(x) {
            Some(RootLabel::Diff(j, l)) => (j, l),
            _ => return Err(Error::NotInSubspace("a root space e_j - e_l".into())),
        };
        let x_prime = self.paired_vector(x, RootLabel::Diff(j, l))?;
        let jxp = self.apply_j(&x_prime)?;
        Ok(bracket(&jxp, x).norm() <= 1e-10 * x.norm().max(1.0) * x_prime.norm().max(1.0))
    }

    /// The partner `X'` of `X` inside a two-dimensional root space.
    pub fn paired_vector(&self, x: &Mat, label: RootLabel) -> Result<Mat> {
        let idx = self.root_space(label);
        if idx.len() < 2 {
            return Err(Error::NotApplicable(format!(
                "g^{label} has real dimension {}; no paired vector",
                idx.len()
            )));
        }
        let nx = self.inner_product(x, x)?;
        let mut best: Option<Mat> = None;
        for &i in &idx {
            let v = &self.basis[i].matrix;
            let w = v - x * (self.inner_product(v, x)? / nx);
            let nw = self.inner_product(&w, &w)?;
            if nw > 1e-12 * self.basis[i].norm_sq && best.as_ref().is_none_or(|b| b.norm() < w.norm()) {
                best = Some(w * (nx / nw).sqrt());
            }
        }
        best.ok_or_else(|| Error::Inconsistent("no orthogonal partner found".into()))
    }

    /// Flattened basis of `s` as CSV: `index,label,norm_sq,m00,m01,...` (row-major).
    pub fn basis_csv(&self) -> String {
        let n = self.matrix_dim;
        let mut out = String::from("index,label,norm_sq");
        for i in 0..n {
            for k in 0..n {
                out.push_str(&format!(",m{i}_{k}"));
            }
        }
        out.push('\n');
        for (idx, v) in self.basis.iter().enumerate() {
            out.push_str(&format!("{idx},{},{:.16e}", v.label, v.norm_sq));
            for i in 0..n {
                for k in 0..n {
                    out.push_str(&format!(",{:.16e}", v.matrix[(i, k)]));
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parse_descriptors() {
        assert_eq!(Family::parse("sl2").unwrap(), Family::Sl2R);
        assert_eq!(Family::parse("sp:2").unwrap(), Family::Sp { r: 2 });
        assert_eq!(Family::parse("su 2 3").unwrap(), Family::Su { p: 2, q: 3 });
        assert_eq!(Family::parse(r#"{"family":"sp","r":3}"#).unwrap(), Family::Sp { r: 3 });
        assert!(Family::parse("so:5").is_err());
        assert!(Family::parse(r#"{"family":"e6"}"#).is_err());
    }

    #[test]
    fn rejects_degenerate_parameters() {
        assert!(LieModel::build(Family::Sp { r: 0 }).is_err());
        assert!(LieModel::build(Family::Su { p: 0, q: 2 }).is_err());
        assert!(LieModel::build(Family::Su { p: 3, q: 2 }).is_err());
    }

    #[test]
    fn sl2_constants() {
        let m = LieModel::build(Family::Sl2R).unwrap();
        assert_eq!(m.rank, 1);
        assert!((m.b - 8.0).abs() < 1e-12);
        assert!((m.kappa - 4.0).abs() < 1e-12);
        assert_eq!(m.dim_g(), 3);
        assert_eq!(m.dim_s(), 2);
    }

    #[test]
    fn sp4_killing_values() {
        let m = LieModel::build(Family::Sp { r: 2 }).unwrap();
        assert!((m.b - 12.0).abs() < 1e-12);
        assert!(m.killing_form(&m.a[0], &m.a[1]).unwrap().abs() < 1e-12);
        let v = m.killing_form(&m.e[0], &m.theta(&m.e[0])).unwrap();
        assert!((v + 6.0).abs() < 1e-12);
        let ad = m.killing_form_ad(&m.a[0], &m.a[0]).unwrap();
        assert!((ad - 12.0).abs() < 1e-9);
    }

    #[test]
    fn su23_dimensions() {
        let m = LieModel::build(Family::Su { p: 2, q: 3 }).unwrap();
        assert_eq!(m.rank, 2);
        assert!(!m.tube);
        assert_eq!(m.dim_g(), 24);
        assert_eq!(m.dim_s(), 12);
        assert_eq!(m.root_multiplicity(RootLabel::Diff(0, 1)), 2);
        assert_eq!(m.root_multiplicity(RootLabel::Short(0)), 2);
        // b from the Killing form: B = 2n tr_C on su(n), b = 4n.
        assert!((m.b - 20.0).abs() < 1e-9);
    }

    #[test]
    fn complex_structure_on_cartan_pairs() {
        let m = LieModel::build(Family::Sp { r: 2 }).unwrap();
        for j in 0..2 {
            let je = m.apply_j(&m.e[j]).unwrap();
            assert!(max_abs(&(je - &m.a[j] * 0.5)) < 1e-12);
            let ja = m.apply_j(&m.a[j]).unwrap();
            assert!(max_abs(&(ja + &m.e[j] * 2.0)) < 1e-12);
        }
    }

    #[test]
    fn j_on_difference_roots_is_bracket_with_e() {
        for fam in [Family::Sp { r: 3 }, Family::Su { p: 2, q: 3 }] {
            let m = LieModel::build(fam).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for label in m.root_labels() {
                if let RootLabel::Diff(j, l) = label {
                    let x = m.random_root_vector(label, &mut rng);
                    let jx = m.apply_j(&x).unwrap();
                    assert!(max_abs(&(&jx - bracket(&m.e[l], &x))) < 1e-10);
                    assert_eq!(m.root_of(&jx), Some(RootLabel::Sum(j, l)));
                    let back = m.apply_j(&jx).unwrap();
                    assert!(max_abs(&(&back - bracket(&m.theta(&m.e[l]), &jx))) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn inner_product_on_cartan_is_b() {
        let m = LieModel::build(Family::Sp { r: 2 }).unwrap();
        let v = m.inner_product(&m.a[0], &m.a[0]).unwrap();
        assert!((v - m.b).abs() < 1e-12);
        // The -B(X, theta Y)/2 expression gives half of it on a.
        let alt = m.half_killing_theta(&m.a[0], &m.a[0]).unwrap();
        assert!((alt - m.b / 2.0).abs() < 1e-12);
        assert!(m.inner_product(&m.a[0], &m.a[1]).unwrap().abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = m.random_root_vector(RootLabel::Diff(0, 1), &mut rng);
        let jx = m.apply_j(&x).unwrap();
        assert!(m.inner_product(&x, &jx).unwrap().abs() < 1e-12);
        assert!(m.inner_product(&m.z0, &m.z0).is_err());
    }

    #[test]
    fn bracket_constants() {
        let m = LieModel::build(Family::Sp { r: 3 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = m.random_root_vector(RootLabel::Diff(0, 1), &mut rng);
        let s = m.bracket_constant(&x).unwrap();
        let expected = 4.0 * m.inner_product(&x, &x).unwrap() / m.b;
        assert!((s - expected).abs() < 1e-10 * s);
        let s2 = m.bracket_constant(&(&x * 2.0)).unwrap();
        assert!((s2 - 4.0 * s).abs() < 1e-10 * s2);
        assert!(m.bracket_constant(&m.e[0]).is_err());
        assert!(m.bracket_constant(&Mat::zeros(6, 6)).is_err());

        let su = LieModel::build(Family::Su { p: 2, q: 3 }).unwrap();
        let y = su.random_root_vector(RootLabel::Short(1), &mut rng);
        let t = su.bracket_constant(&y).unwrap();
        assert!(t > 0.0);
    }

    #[test]
    fn orthogonality_of_pairs() {
        let m = LieModel::build(Family::Su { p: 2, q: 2 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = m.random_root_vector(RootLabel::Diff(0, 1), &mut rng);
        assert!(m.orthogonality_check(&x).unwrap());
        assert!(m.orthogonality_check(&(&x * -3.5)).unwrap());
        assert!(m.orthogonality_check(&Mat::zeros(8, 8)).unwrap());
        let sp = LieModel::build(Family::Sp { r: 2 }).unwrap();
        let y = sp.random_root_vector(RootLabel::Diff(0, 1), &mut rng);
        assert!(matches!(sp.orthogonality_check(&y), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn basis_csv_has_one_row_per_vector() {
        let m = LieModel::build(Family::Sl2R).unwrap();
        let csv = m.basis_csv();
        assert_eq!(csv.lines().count(), 1 + m.dim_s());
        assert!(csv.starts_with("index,label,norm_sq,m0_0"));
    }
}
