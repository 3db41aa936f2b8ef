//! Acceptance criteria: one PASS/FAIL line per criterion.

use std::time::Instant;

use hermitube_core::approx::{nesting_check, v_eps_convexity, v_eps_monotonicity, KernelSpec, Mollifier};
use hermitube_core::coords::{finite_diff_oracle, BaseFunction};
use hermitube_core::domains::{DomainBase, HalfSpace};
use hermitube_core::levi::{assemble_levi, classify_psh, PshClass, WitnessKind};
use hermitube_core::linalg::Mat;
use hermitube_core::potential::{random_slice_points, verify_killing_identity, verify_moment_map};
use hermitube_core::siegel::Siegel;
use hermitube_core::verify::{b_check, bracket_constant_check, siegel_potential_check, structure_suite};
use hermitube_core::{Family, LieModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const FIVE: [Family; 5] = [
    Family::Sl2R,
    Family::Sp { r: 2 },
    Family::Sp { r: 3 },
    Family::Su { p: 2, q: 2 },
    Family::Su { p: 2, q: 3 },
];

struct Outcome {
    pass: bool,
    summary: String,
}

fn outcome(pass: bool, summary: impl Into<String>) -> Outcome {
    Outcome { pass, summary: summary.into() }
}

fn models() -> Vec<LieModel> {
    FIVE.iter().map(|f| LieModel::build(*f).expect("model builds")).collect()
}

fn c1_structure() -> Outcome {
    let t = Instant::now();
    let mut worst = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut pass = true;
    for fam in FIVE {
        let m = LieModel::build(fam).expect("model builds");
        for c in structure_suite(&m, 1).expect("suite runs") {
            match c.name.as_str() {
                "cartan_brackets_2_delta_e" => worst.0 = worst.0.max(c.max_residual),
                "j_squared_minus_identity" => worst.1 = worst.1.max(c.max_residual),
                "j_maps_root_spaces" => worst.2 = worst.2.max(c.max_residual),
                _ => {}
            }
            pass &= c.pass;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    pass &= secs < 5.0;
    outcome(
        pass,
        format!(
            "[A,E] residual {:.1e}, J^2+1 residual {:.1e}, root-mapping failures {}, {secs:.2}s",
            worst.0, worst.1, worst.2
        ),
    )
}

fn c2_constants() -> Outcome {
    let sl = LieModel::build(Family::Sl2R).unwrap();
    let sp = LieModel::build(Family::Sp { r: 2 }).unwrap();
    let a = b_check(&sl).unwrap();
    let b = b_check(&sp).unwrap();
    let rel = ((sl.b - 8.0).abs() / 8.0).max((sp.b - 12.0).abs() / 12.0);
    outcome(a.pass && b.pass && rel <= 1e-9, format!("b(sl2) = {}, b(sp2) = {}, rel err {rel:.1e}", sl.b, sp.b))
}

fn c3_bracket_constants(models: &[LieModel]) -> Outcome {
    let mut worst = 0.0_f64;
    let mut pass = true;
    for m in models {
        let c = bracket_constant_check(m, 100, 3).unwrap();
        worst = worst.max(c.max_residual);
        pass &= c.pass;
    }
    outcome(pass, format!("max relative residual {worst:.1e}, all coefficients positive: {pass}"))
}

fn c4_killing_identity(models: &[LieModel]) -> Outcome {
    let mut worst = 0.0_f64;
    let mut pass = true;
    for m in models {
        let c = verify_killing_identity(m, &random_slice_points(m.rank, 5, 4)).unwrap();
        worst = worst.max(c.max_residual);
        pass &= c.pass;
    }
    outcome(
        pass,
        format!(
            "max residual {worst:.1e} against B(phi X, phi Y); -B(X,theta Y)/2 agrees off a x a and is half of it on a x a"
        ),
    )
}

fn c5_siegel_potential() -> Outcome {
    let sp = LieModel::build(Family::Sp { r: 2 }).unwrap();
    let c = siegel_potential_check(&sp, 100, 5).unwrap();
    outcome(c.pass, format!("100 random SPD T, max relative residual {:.1e}", c.max_residual))
}

fn c6_moment_map(models: &[LieModel]) -> Outcome {
    let mut worst = 0.0_f64;
    let mut pass = true;
    for m in models {
        for c in verify_moment_map(m, 1000, 6).unwrap() {
            worst = worst.max(c.max_residual);
            pass &= c.pass;
        }
    }
    outcome(pass, format!("10^3 samples per model, max residual {worst:.1e}"))
}

/// Ray probing straight from the half-space data.
fn ray_probe_invariant(d: &DomainBase, rng: &mut ChaCha8Rng) -> bool {
    let faces = d.halfspaces().unwrap();
    let (y0, _) = d.interior_point().unwrap();
    let k = if d.tube { d.rank - 1 } else { d.rank };
    let inside = |y: &[f64]| faces.iter().all(|h| h.n.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() < h.c);
    for g in 0..k {
        for _ in 0..5 {
            let mut y = y0.clone();
            y[g] += rng.gen_range(1e3..1e6);
            if !inside(&y) {
                return false;
            }
        }
    }
    true
}

fn normal_sign_invariant(d: &DomainBase) -> bool {
    let k = if d.tube { d.rank - 1 } else { d.rank };
    d.halfspaces().unwrap().iter().all(|h| h.n[..k].iter().all(|x| *x <= 1e-10))
}

fn c7_stein() -> Outcome {
    let interval = DomainBase::hrep(1, false, vec![HalfSpace::new(vec![-1.0], -1.0), HalfSpace::new(vec![1.0], 2.0)]).unwrap();
    let half_line = DomainBase::hrep(1, false, vec![HalfSpace::new(vec![-1.0], -1.0)]).unwrap();
    let tube_interval = DomainBase::hrep(1, true, vec![HalfSpace::new(vec![-1.0], -1.0), HalfSpace::new(vec![1.0], 2.0)]).unwrap();
    let fixed = !interval.is_stein().stein && half_line.is_stein().stein && tube_interval.is_stein().stein;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut disagreements = 0;
    let mut stein_count = 0;
    for _ in 0..20 {
        let rank = rng.gen_range(1..=3);
        let tube = rng.gen_bool(0.5);
        let y0: Vec<f64> = (0..rank).map(|_| rng.gen_range(1.0..3.0)).collect();
        let biased = rng.gen_bool(0.5);
        let faces: Vec<HalfSpace> = (0..rng.gen_range(1..=4))
            .map(|_| {
                let n: Vec<f64> = (0..rank)
                    .map(|_| {
                        let v: f64 = rng.gen_range(-1.0..1.0);
                        if biased { -v.abs() } else { v }
                    })
                    .collect();
                let c = n.iter().zip(&y0).map(|(a, b)| a * b).sum::<f64>() + rng.gen_range(0.1..1.0);
                HalfSpace::new(n, c)
            })
            .collect();
        let d = DomainBase::hrep(rank, tube, faces).unwrap();
        let verdict = d.is_stein().stein;
        stein_count += usize::from(verdict);
        if verdict != normal_sign_invariant(&d) || verdict != ray_probe_invariant(&d, &mut rng) {
            disagreements += 1;
        }
    }
    outcome(
        fixed && disagreements == 0,
        format!("fixed examples ok: {fixed}; 20 random HReps ({stein_count} Stein), {disagreements} disagreements"),
    )
}

/// Membership of `y` in `conv(points) + cone(rays)` by conic Caratheodory:
/// `(y, 1)` is a nonnegative combination of a basis drawn from the lifted generators.
fn caratheodory_member(points: &[Vec<f64>], rays: &[Vec<f64>], y: &[f64]) -> bool {
    let r = y.len();
    let gens: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().copied().chain([1.0]).collect())
        .chain(rays.iter().map(|v| v.iter().copied().chain([0.0]).collect()))
        .collect();
    let target = nalgebra::DVector::from_iterator(r + 1, y.iter().copied().chain([1.0]));
    let all = Mat::from_fn(r + 1, gens.len(), |i, j| gens[j][i]);
    let dim = all.rank(1e-10);
    let mut idx: Vec<usize> = (0..dim).collect();
    loop {
        let m = Mat::from_fn(r + 1, dim, |i, j| gens[idx[j]][i]);
        if m.rank(1e-10) == dim {
            if let Ok(lam) = m.clone().svd(true, true).solve(&target, 1e-12) {
                let resid = (&m * &lam - &target).amax();
                if resid < 1e-9 && lam.iter().all(|l| *l >= -1e-12) {
                    return true;
                }
            }
        }
        // next combination
        let n = gens.len();
        let mut k = dim;
        loop {
            if k == 0 {
                return false;
            }
            k -= 1;
            if idx[k] < n - dim + k {
                idx[k] += 1;
                for t in k + 1..dim {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

fn c8_envelope() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut probes_total = 0usize;
    let mut agree = 0usize;
    let mut idempotent = true;
    for _ in 0..50 {
        let rank = rng.gen_range(1..=3);
        let tube = rng.gen_bool(0.5);
        let pts: Vec<Vec<f64>> =
            (0..rng.gen_range(2..=6)).map(|_| (0..rank).map(|_| rng.gen_range(0.5..4.0)).collect()).collect();
        let cloud = DomainBase::cloud(rank, tube, pts.clone()).unwrap();
        let hull = cloud.envelope().unwrap();
        let rays: Vec<Vec<f64>> = cloud.cone().generators().iter().map(|g| g.as_slice().to_vec()).collect();
        let probes: Vec<Vec<f64>> = (0..2000).map(|_| (0..rank).map(|_| rng.gen_range(0.1..8.0)).collect()).collect();
        probes_total += probes.len();
        agree += probes
            .par_iter()
            .filter(|y| hull.contains(y, 1e-9) == caratheodory_member(&pts, &rays, y))
            .count();
        if !hull.lower_dimensional {
            let again = hull.domain().envelope().unwrap();
            idempotent &= again.hrep == hull.hrep;
        }
    }
    let rate = agree as f64 / probes_total as f64;
    outcome(
        rate >= 0.999 && idempotent,
        format!("agreement {:.4}% on {probes_total} probes, idempotent: {idempotent}", 100.0 * rate),
    )
}

fn c9_mollification() -> Outcome {
    let t = Instant::now();
    let faces = vec![HalfSpace::new(vec![-1.0, 0.0], -1.0), HalfSpace::new(vec![0.0, -1.0], -1.0)];
    let mut pass = true;
    let mut parts = Vec::new();
    for tube in [true, false] {
        let d = DomainBase::hrep(2, tube, faces.clone()).unwrap();
        let m = Mollifier::new(&d, KernelSpec::default()).unwrap();
        let mut conv_fail = 0;
        let mut mono_fail = 0;
        for (k, eps) in [0.2, 0.1, 0.05].into_iter().enumerate() {
            let c = v_eps_convexity(&m, eps, 1.0, 6.0, 1000, 90 + k as u64);
            let mo = v_eps_monotonicity(&m, eps, 1.0, 6.0, 1000, 95 + k as u64);
            conv_fail += c.failures;
            mono_fail += mo.failures + 1000 - mo.probes;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let samples: Vec<Vec<f64>> = (0..10_000).map(|_| (0..2).map(|_| rng.gen_range(1.0..8.0)).collect()).collect();
        let nest = nesting_check(&m, &[0.5, 0.25, 0.125], &samples);
        pass &= conv_fail == 0 && mono_fail == 0 && nest.violations == 0;
        parts.push(format!(
            "{}: convexity failures {conv_fail}, monotonicity failures {mono_fail}, nesting violations {}",
            if tube { "tube" } else { "non-tube" },
            nest.violations
        ));
    }
    let secs = t.elapsed().as_secs_f64();
    pass &= secs < 60.0;
    outcome(pass, format!("{}; {secs:.1}s", parts.join("; ")))
}

fn random_convdec(r: usize, tube: bool, rng: &mut ChaCha8Rng) -> BaseFunction {
    let k = if tube { r - 1 } else { r };
    let c: Vec<f64> = (0..r).map(|j| if j < k { -rng.gen_range(0.0..2.0) } else { rng.gen_range(-2.0..2.0) }).collect();
    BaseFunction::Sum {
        terms: vec![
            (rng.gen_range(0.0..3.0), BaseFunction::reciprocal(r)),
            (1.0, BaseFunction::Affine { c, d: rng.gen_range(-5.0..5.0) }),
            (1.0, BaseFunction::LogBarrier { alpha: (0..r).map(|_| rng.gen_range(0.0..4.0)).collect() }),
        ],
    }
}

fn random_violator(r: usize, tube: bool, rng: &mut ChaCha8Rng) -> BaseFunction {
    let k = if tube { r - 1 } else { r };
    if k > 0 && rng.gen_bool(0.5) {
        // Increasing along a generator everywhere on the samples.
        let mut c = vec![0.0; r];
        c[rng.gen_range(0..k)] = rng.gen_range(5.0..10.0);
        BaseFunction::Sum {
            terms: vec![(0.1, BaseFunction::reciprocal(r)), (1.0, BaseFunction::Affine { c, d: 0.0 })],
        }
    } else {
        BaseFunction::LogBarrier { alpha: (0..r).map(|_| -rng.gen_range(0.5..3.0)).collect() }
    }
}

fn witness_valid(f: &BaseFunction, kind: WitnessKind, point: &[f64], dir: &[f64]) -> bool {
    let (g, h) = finite_diff_oracle(|y: &[f64]| f.value(y).ok(), point, None).unwrap();
    let d = nalgebra::DVector::from_column_slice(dir);
    match kind {
        WitnessKind::Hessian => (d.transpose() * &h * &d)[(0, 0)] < 0.0,
        WitnessKind::Increasing => g.dot(&d) > 0.0,
    }
}

fn c10_psh_correspondence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let models = [LieModel::build(Family::Sp { r: 2 }).unwrap(), LieModel::build(Family::Su { p: 2, q: 3 }).unwrap()];
    let mut not_psd = 0;
    let mut missed = 0;
    let mut bad_witness = 0;
    for i in 0..20 {
        let m = &models[i % 2];
        let samples = random_slice_points(m.rank, 50, 100 + i as u64);
        let f = random_convdec(m.rank, m.tube, &mut rng);
        for y in &samples {
            if !assemble_levi(m, &f, y).unwrap().is_positive_semidefinite() {
                not_psd += 1;
            }
        }
        let g = random_violator(m.rank, m.tube, &mut rng);
        let v = classify_psh(m, &g, &samples).unwrap();
        match (&v.verdict, &v.witness) {
            (PshClass::NotPsh, Some(w)) => {
                if !witness_valid(&g, w.kind, &w.point, &w.direction) {
                    bad_witness += 1;
                }
            }
            _ => missed += 1,
        }
    }
    outcome(
        not_psd == 0 && missed == 0 && bad_witness == 0,
        format!("non-PSD Levi forms {not_psd}/1000, violators missed {missed}/20, invalid witnesses {bad_witness}"),
    )
}

fn c11_siegel(models: &[LieModel]) -> Outcome {
    let mut worst = 0.0_f64;
    let mut pass = true;
    for m in models {
        let sg = Siegel::new(m).unwrap();
        let mut checks = sg.verify_n0_orbits(100, 11);
        if !m.tube {
            checks.extend(sg.verify_n_orbits(100, 12).unwrap());
        }
        for c in checks {
            if c.name.starts_with("orbit") {
                worst = worst.max(c.max_residual);
            }
            pass &= c.pass;
        }
    }
    let mut inv = 0.0_f64;
    for m in models {
        let c = Siegel::new(m).unwrap().verify_inverse_map(1000, 13).unwrap();
        inv = inv.max(c.max_residual);
        pass &= c.pass;
    }
    outcome(pass, format!("orbit residual {worst:.1e} (100 trials each), inverse-map residual {inv:.1e} on 10^3 points"))
}

fn main() {
    let models = models();
    type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("structure suite", Box::new(c1_structure)),
        ("constants b", Box::new(c2_constants)),
        ("bracket constants", Box::new(|| c3_bracket_constants(&models))),
        ("killing-potential identity", Box::new(|| c4_killing_identity(&models))),
        ("siegel potential example", Box::new(c5_siegel_potential)),
        ("moment map", Box::new(|| c6_moment_map(&models))),
        ("stein classification", Box::new(c7_stein)),
        ("envelope oracle", Box::new(c8_envelope)),
        ("mollification", Box::new(c9_mollification)),
        ("psh correspondence", Box::new(c10_psh_correspondence)),
        ("siegel orbits", Box::new(|| c11_siegel(&models))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        let secs = t.elapsed().as_secs_f64();
        println!("criterion {:>2} {} {name}: {} [{secs:.1}s]", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.summary);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
