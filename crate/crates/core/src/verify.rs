//! Verification suites over a model: structure, Levi form, Siegel picture and
//! potential. Each returns a list of named checks with residuals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{Family, LieModel, RootLabel};
use crate::coords::{finite_diff_oracle, BaseFunction};
use crate::domains::{ConeSpec, DomainBase, HalfSpace};
use crate::error::{Error, Result};
use crate::levi::{assemble_levi, classify_psh, PshClass, WitnessKind};
use crate::linalg::{bracket, Mat};
use crate::potential::{
    fit_affine_offset, is_killing_potential, potential_family, random_slice_points, rho_function, rho_hat, siegel_rho,
    verify_killing_identity, verify_moment_map,
};
use crate::report::{all_pass, CheckReport};
use crate::siegel::Siegel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Structure,
    Levi,
    Siegel,
    Potential,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "structure" => Ok(Suite::Structure),
            "levi" => Ok(Suite::Levi),
            "siegel" => Ok(Suite::Siegel),
            "potential" => Ok(Suite::Potential),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidInput(format!("unknown suite {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub model: Family,
    pub suite: Suite,
    pub pass: bool,
    pub checks: Vec<CheckReport>,
}

pub fn run_suite(model: &LieModel, suite: Suite, seed: u64) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Structure => structure_suite(model, seed)?,
        Suite::Levi => levi_suite(model, seed)?,
        Suite::Siegel => siegel_suite(model, seed)?,
        Suite::Potential => potential_suite(model, seed)?,
        Suite::All => {
            let mut all = structure_suite(model, seed)?;
            all.extend(levi_suite(model, seed)?);
            all.extend(siegel_suite(model, seed)?);
            all.extend(potential_suite(model, seed)?);
            all
        }
    };
    Ok(SuiteReport { model: model.family, suite, pass: all_pass(&checks), checks })
}

/// The value of `b` stated for the two worked examples.
pub fn known_b(family: Family) -> Option<f64> {
    match family {
        Family::Sl2R => Some(8.0),
        Family::Sp { r: 2 } => Some(12.0),
        _ => None,
    }
}

pub fn b_check(model: &LieModel) -> Result<CheckReport> {
    // Independent route: the ad-trace Killing form on A_1.
    let ad = model.killing_form_ad(&model.a[0], &model.a[0])?;
    let mut res = vec![(model.b - ad).abs() / ad.abs()];
    if let Some(b) = known_b(model.family) {
        res.push((model.b - b).abs() / b);
    }
    Ok(CheckReport::from_residuals("constant_b", 1e-9, &res).with_detail(format!("b = {}", model.b)))
}

/// `[JX, X] = (4|X|^2 / b) E^j` with a positive coefficient, on every root
/// space outside `a`.
pub fn bracket_constant_check(model: &LieModel, per_space: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut res = Vec::new();
    let mut nonpositive = 0;
    for label in model.root_labels() {
        let j = match label {
            RootLabel::Cartan(_) => continue,
            RootLabel::Long(j) | RootLabel::Short(j) | RootLabel::Diff(j, _) | RootLabel::Sum(j, _) => j,
        };
        for _ in 0..per_space {
            let x = model.random_root_vector(label, &mut rng);
            let br = bracket(&model.apply_j(&x)?, &x);
            let s = 4.0 * model.inner_product(&x, &x)? / model.b;
            if !(model.dual_e(j, &br) > 0.0) {
                nonpositive += 1;
            }
            res.push((&br - &model.e[j] * s).norm() / br.norm().max(1e-300));
        }
    }
    let mut report = CheckReport::from_residuals("bracket_constants_4_norm_over_b", 1e-8, &res);
    if nonpositive > 0 {
        report.pass = false;
        report = report.with_detail(format!("{nonpositive} non-positive coefficients"));
    }
    Ok(report)
}

pub fn structure_suite(model: &LieModel, seed: u64) -> Result<Vec<CheckReport>> {
    let r = model.rank;
    let mut cartan = Vec::new();
    for j in 0..r {
        for l in 0..r {
            let expect = if j == l { &model.e[l] * 2.0 } else { Mat::zeros(model.matrix_dim, model.matrix_dim) };
            cartan.push((bracket(&model.a[j], &model.e[l]) - expect).amax());
        }
    }
    let dim = model.dim_s();
    let j2 = (&model.j.matrix * &model.j.matrix + Mat::identity(dim, dim)).amax();

    let mut wrong_root = 0;
    for v in &model.basis {
        let jx = model.apply_j(&v.matrix)?;
        if !model.in_root_space(&jx, v.label.j_image()) {
            wrong_root += 1;
        }
    }

    let mut j_isometry = Vec::new();
    let jt_g_j = model.j.matrix.transpose() * &model.gram * &model.j.matrix;
    j_isometry.push((jt_g_j - &model.gram).amax() / model.b);

    let mut phi_j = Vec::new();
    for v in &model.basis {
        // phi(J X) = ad Z_0 phi(X)
        let lhs = model.phi(&model.apply_j(&v.matrix)?);
        let rhs = bracket(&model.z0, &model.phi(&v.matrix));
        phi_j.push((lhs - rhs).amax() / v.matrix.amax());
    }

    let mut inner = Vec::new();
    for (i, v) in model.basis.iter().enumerate() {
        for (k, w) in model.basis.iter().enumerate() {
            let direct = model.killing_form(&model.phi(&v.matrix), &model.phi(&w.matrix))?;
            inner.push((direct - model.gram[(i, k)]).abs() / model.b);
        }
    }

    Ok(vec![
        CheckReport::from_residuals("cartan_brackets_2_delta_e", 1e-12, &cartan),
        CheckReport::from_residuals("j_squared_minus_identity", 1e-10, &[j2]),
        CheckReport::from_failures("j_maps_root_spaces", model.basis.len(), wrong_root),
        CheckReport::from_residuals("j_is_isometry", 1e-10, &j_isometry),
        CheckReport::from_residuals("j_intertwines_ad_z0", 1e-10, &phi_j),
        CheckReport::from_residuals("inner_product_is_b_phi_phi", 1e-10, &inner),
        CheckReport::from_residuals("killing_form_trace_scaling", 1e-9, &[model.killing_residual]),
        b_check(model)?,
        bracket_constant_check(model, 100, seed)?,
    ])
}

pub fn levi_suite(model: &LieModel, seed: u64) -> Result<Vec<CheckReport>> {
    let r = model.rank;
    let pts = random_slice_points(r, 20, seed);
    let candidates = [
        ("reciprocal", BaseFunction::reciprocal(r)),
        ("log_barrier", rho_function(model)),
        (
            "mixed",
            BaseFunction::Sum {
                terms: vec![
                    (0.5, BaseFunction::reciprocal(r)),
                    (2.0, BaseFunction::LogBarrier { alpha: (1..=r).map(|k| k as f64).collect() }),
                ],
            },
        ),
    ];

    // a-block against finite differences of f~(H) = f^(e^{2H}).
    let mut fd = Vec::new();
    let mut j_inv = Vec::new();
    let mut psd_fail = 0;
    for (_, f) in &candidates {
        for y in &pts {
            let lf = assemble_levi(model, f, y)?;
            let h: Vec<f64> = y.iter().map(|v| 0.5 * v.ln()).collect();
            let (g, hs) = finite_diff_oracle(|x: &[f64]| f.tilde_value(x).ok(), &h, None)?;
            let oracle = Mat::from_fn(r, r, |j, l| hs[(j, l)] - if j == l { 2.0 * g[l] } else { 0.0 });
            fd.push((&lf.a_block - &oracle).amax() / oracle.amax().max(1.0));
            let jm = &model.j.matrix;
            j_inv.push((jm.transpose() * &lf.full * jm - &lf.full).amax() / lf.full.amax().max(1.0));
            if !lf.is_positive_semidefinite() {
                psd_fail += 1;
            }
        }
    }

    let mut class_fail = 0;
    for (_, f) in &candidates {
        if classify_psh(model, f, &pts)?.verdict == PshClass::NotPsh {
            class_fail += 1;
        }
    }
    // Increasing along the cone: rejected with an Increasing witness, unless
    // the cone is trivial (rank-one tube), where it is pluriharmonic.
    let cone_trivial = ConeSpec::new(r, model.tube).generators().is_empty();
    let bad = BaseFunction::Affine { c: vec![1.0; r], d: 0.0 };
    let v = classify_psh(model, &bad, &pts)?;
    let rejected = v.verdict == PshClass::NotPsh
        && v.witness.as_ref().is_some_and(|w| w.kind == WitnessKind::Increasing);
    let increasing_ok = if cone_trivial { v.verdict != PshClass::NotPsh } else { rejected };
    // Concave in y: rejected with a Hessian witness.
    let concave = BaseFunction::LogBarrier { alpha: vec![-1.0; r] };
    let v = classify_psh(model, &concave, &pts)?;
    let rejected_hess =
        v.verdict == PshClass::NotPsh && v.witness.as_ref().is_some_and(|w| w.kind == WitnessKind::Hessian);

    Ok(vec![
        CheckReport::from_residuals("levi_a_block_matches_finite_differences", 1e-5, &fd),
        CheckReport::from_residuals("levi_form_j_invariant", 1e-10, &j_inv),
        CheckReport::from_failures("convex_decreasing_functions_psd", candidates.len() * pts.len(), psd_fail),
        CheckReport::from_failures("convex_decreasing_functions_classified_psh", candidates.len(), class_fail),
        CheckReport::from_failures("increasing_function_rejected", 1, usize::from(!increasing_ok)),
        CheckReport::from_failures("concave_function_rejected", 1, usize::from(!rejected_hess)),
    ])
}

pub fn siegel_suite(model: &LieModel, seed: u64) -> Result<Vec<CheckReport>> {
    let sg = Siegel::new(model)?;
    let mut out = vec![CheckReport::from_residuals("grading_eigenvalues", 1e-10, &[sg.grading.max_eigen_residual])];
    if !model.tube {
        out.extend(sg.verify_hermitian_f(100, seed)?);
    }
    out.extend(sg.verify_action(100, seed)?);
    out.extend(sg.verify_n0_orbits(100, seed));
    if !model.tube {
        out.extend(sg.verify_n_orbits(100, seed)?);
    }
    out.push(sg.verify_inverse_map(1000, seed)?);
    let slice = DomainBase::hrep(
        model.rank,
        model.tube,
        (0..model.rank)
            .map(|j| {
                let mut n = vec![0.0; model.rank];
                n[j] = -1.0;
                HalfSpace::new(n, -0.5)
            })
            .collect(),
    )?;
    out.push(sg.verify_convex_combinations(&slice, 10_000, seed)?);
    let (c, spread) = sg.f0_constant()?;
    out.push(
        CheckReport::from_residuals("f0_inner_product_constant", 1e-10, &[spread, (c - 1.0).abs()])
            .with_detail(format!("<X,X> = {c} * (-f0([JX,X]))")),
    );
    Ok(out)
}

fn random_spd(r: usize, rng: &mut ChaCha8Rng) -> Mat {
    let m = Mat::from_fn(r, r, |_, _| rng.gen_range(-1.0..1.0));
    &m * m.transpose() + Mat::identity(r, r) * 0.1
}

/// Potential at `S + iT` against `-(b/4) ln det T` on random positive definite `T`.
pub fn siegel_potential_check(model: &LieModel, trials: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut res = Vec::with_capacity(trials);
    for _ in 0..trials {
        let t = random_spd(model.rank, &mut rng);
        let det_route = -model.b / 4.0 * t.determinant().ln();
        res.push(match siegel_rho(model, &t) {
            Ok(v) => (v - det_route).abs() / det_route.abs().max(1.0),
            Err(_) => f64::INFINITY,
        });
    }
    Ok(CheckReport::from_residuals("siegel_potential_det_route", 1e-10, &res))
}

pub fn potential_suite(model: &LieModel, seed: u64) -> Result<Vec<CheckReport>> {
    let r = model.rank;
    let mut out = vec![b_check(model)?];
    let ones = vec![1.0; r];
    out.push(CheckReport::from_residuals("rho_hat_vanishes_at_one", 1e-15, &[rho_hat(model, &ones)?.abs()]));
    out.push(verify_killing_identity(model, &random_slice_points(r, 5, seed))?);
    out.extend(verify_moment_map(model, 1000, seed)?);
    if !matches!(model.family, Family::Su { .. }) {
        out.push(siegel_potential_check(model, 100, seed)?);
    }
    let pts = random_slice_points(r, 20, seed ^ 1);
    let shifted = potential_family(model, 0.0, 5.0)?.base_function();
    out.push(CheckReport::from_failures("constant_shift_is_potential", 1, usize::from(!is_killing_potential(model, &shifted, &pts)?)));
    if model.tube {
        let f = potential_family(model, 3.0, -2.0)?.base_function();
        out.push(CheckReport::from_failures("tube_linear_shift_is_potential", 1, usize::from(!is_killing_potential(model, &f, &pts)?)));
        let fit = fit_affine_offset(model, &f, &pts)?;
        out.push(CheckReport::from_residuals(
            "affine_offset_recovered",
            1e-6,
            &[(fit.c - 3.0).abs(), (fit.d + 2.0).abs()],
        ));
        if r > 1 {
            let mut c = vec![0.0; r];
            c[0] = 3.0;
            let off = BaseFunction::Sum { terms: vec![(1.0, rho_function(model)), (1.0, BaseFunction::Affine { c, d: 0.0 })] };
            out.push(CheckReport::from_failures("first_coordinate_shift_rejected", 1, usize::from(is_killing_potential(model, &off, &pts)?)));
        }
    } else {
        out.push(CheckReport::from_failures("non_tube_linear_shift_rejected", 1, usize::from(potential_family(model, 1.0, 0.0).is_ok())));
        let mut c = vec![0.0; r];
        c[r - 1] = 3.0;
        let off = BaseFunction::Sum { terms: vec![(1.0, rho_function(model)), (1.0, BaseFunction::Affine { c, d: 0.0 })] };
        out.push(CheckReport::from_failures("non_tube_last_coordinate_shift_not_potential", 1, usize::from(is_killing_potential(model, &off, &pts)?)));
    }
    let psh = classify_psh(model, &rho_function(model), &pts)?;
    out.push(CheckReport::from_failures("potential_strictly_psh", 1, usize::from(psh.verdict != PshClass::StrictlyPsh)));
    Ok(out)
}
