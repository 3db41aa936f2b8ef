//! Smoothing of `u = -ln d_Omega` by a radial bump kernel and the resulting
//! smooth convex C-invariant exhaustion of a Stein base.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{ConeSpec, DomainBase, HalfSpace};
use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Seed of the Monte Carlo node set used from rank 4 on.
pub const KERNEL_SEED: u64 = 0x5eed_b0b5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    /// Midpoint nodes per axis on `[-1, 1]` (tensor rule, rank <= 3) or the
    /// Monte Carlo sample count is `nodes^3` (rank >= 4).
    pub nodes: usize,
    pub profile: Profile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Bump,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec { nodes: 21, profile: Profile::Bump }
    }
}

/// `exp(1/(s-1))` for `s = R^2 < 1`, zero otherwise.
pub fn bump_profile(s: f64) -> f64 {
    if s < 1.0 {
        (1.0 / (s - 1.0)).exp()
    } else {
        0.0
    }
}

/// Derivative of [`bump_profile`] in `s`: `-exp(1/(s-1)) / (s-1)^2`, negative on `[0, 1)`.
pub fn bump_profile_derivative(s: f64) -> f64 {
    if s < 1.0 {
        -(1.0 / (s - 1.0)).exp() / ((s - 1.0) * (s - 1.0))
    } else {
        0.0
    }
}

/// Surface area of the unit sphere in `R^r`.
fn sphere_area(r: usize) -> f64 {
    // 2 pi^{r/2} / Gamma(r/2), by the recurrence S_{r+1} = 2 pi S_{r-1} / (r - 1).
    match r {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI * sphere_area(r - 2) / (r as f64 - 2.0),
    }
}

/// `1 / int_{|w|<1} exp(1/(|w|^2-1)) dw`, from the radial integral by composite Simpson.
pub fn bump_normalization(r: usize) -> f64 {
    let n = 20_000;
    let h = 1.0 / n as f64;
    let g = |rho: f64| bump_profile(rho * rho) * rho.powi(r as i32 - 1);
    let mut acc = g(0.0) + g(1.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(i as f64 * h);
    }
    1.0 / (sphere_area(r) * acc * h / 3.0)
}

#[derive(Debug, Clone)]
pub struct MollifierKernel {
    pub rank: usize,
    pub spec: KernelSpec,
    pub normalization: f64,
    /// Nodes in the unit ball and their weights, summing to one.
    pub nodes: Vec<(Vec<f64>, f64)>,
    /// Raw quadrature of the normalized kernel before rescaling the weights.
    pub raw_mass: f64,
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

impl MollifierKernel {
    pub fn new(rank: usize, spec: KernelSpec) -> Result<Self> {
        if rank == 0 || spec.nodes == 0 {
            return Err(Error::InvalidInput("kernel needs positive rank and node count".into()));
        }
        let c = bump_normalization(rank);
        let mut nodes = Vec::new();
        let raw_mass;
        if rank <= 3 {
            let m = spec.nodes;
            let step = 2.0 / m as f64;
            let cell = step.powi(rank as i32);
            let axis: Vec<f64> = (0..m).map(|i| -1.0 + (i as f64 + 0.5) * step).collect();
            let mut idx = vec![0usize; rank];
            loop {
                let w: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
                let s: f64 = w.iter().map(|x| x * x).sum();
                if s < 1.0 {
                    nodes.push((w, c * bump_profile(s) * cell));
                }
                let mut k = 0;
                while k < rank {
                    idx[k] += 1;
                    if idx[k] < m {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == rank {
                    break;
                }
            }
            let ws: Vec<f64> = nodes.iter().map(|(_, w)| *w).collect();
            raw_mass = pairwise_sum(&ws);
        } else {
            let count = spec.nodes.pow(3);
            let mut rng = ChaCha8Rng::seed_from_u64(KERNEL_SEED);
            let cube = 2f64.powi(rank as i32);
            for _ in 0..count {
                let w: Vec<f64> = (0..rank).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let s: f64 = w.iter().map(|x| x * x).sum();
                if s < 1.0 {
                    nodes.push((w, c * bump_profile(s) * cube / count as f64));
                }
            }
            let ws: Vec<f64> = nodes.iter().map(|(_, w)| *w).collect();
            raw_mass = pairwise_sum(&ws);
        }
        for n in &mut nodes {
            n.1 /= raw_mass;
        }
        Ok(MollifierKernel { rank, spec, normalization: c, nodes, raw_mass })
    }

    /// Kernel density `sigma(w)`.
    pub fn density(&self, w: &[f64]) -> f64 {
        self.normalization * bump_profile(w.iter().map(|x| x * x).sum())
    }
}

/// `Omega_eps = {d_Omega > eps}`: every offset moves in by `eps |n_i|`, octant
/// faces included. Parallel faces are merged, keeping the tighter one.
/// `None` when the result is empty.
pub fn shrink(domain: &DomainBase, eps: f64) -> Result<Option<DomainBase>> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let rows = domain.all_halfspaces()?;
    let mut out: Vec<HalfSpace> = Vec::new();
    for h in rows {
        let norm = h.normal_norm();
        let shifted = HalfSpace::new(h.n.clone(), h.c - eps * norm);
        let unit: Vec<f64> = h.n.iter().map(|x| x / norm).collect();
        let offset = shifted.c / norm;
        let same = out.iter().position(|g| {
            let gn = g.normal_norm();
            g.n.iter().zip(&unit).all(|(a, b)| (a / gn - b).abs() <= 1e-12)
        });
        match same {
            Some(i) => {
                let gn = out[i].normal_norm();
                if offset < out[i].c / gn {
                    out[i] = shifted;
                }
            }
            None => out.push(shifted),
        }
    }
    match DomainBase::hrep(domain.rank, domain.tube, out) {
        Ok(d) => Ok(Some(d)),
        Err(Error::InvalidInput(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `u`, `u_eps` and `v_eps = u_eps + eps * sum 1/y_j` for a convex half-space domain.
#[derive(Debug, Clone)]
pub struct Mollifier {
    pub domain: DomainBase,
    pub kernel: MollifierKernel,
    faces: Vec<(Vec<f64>, f64)>,
}

impl Mollifier {
    pub fn new(domain: &DomainBase, spec: KernelSpec) -> Result<Self> {
        let faces = domain
            .all_halfspaces()?
            .into_iter()
            .map(|h| {
                let norm = h.normal_norm();
                (h.n.iter().map(|x| x / norm).collect(), h.c / norm)
            })
            .collect();
        Ok(Mollifier { domain: domain.clone(), kernel: MollifierKernel::new(domain.rank, spec)?, faces })
    }

    fn distance(&self, y: &[f64]) -> f64 {
        self.faces
            .iter()
            .map(|(n, c)| c - n.iter().zip(y).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// `u(y) = -ln d_Omega(y)`.
    pub fn u(&self, y: &[f64]) -> Result<f64> {
        let d = self.distance(y);
        if !(d > 0.0) || y.len() != self.domain.rank {
            return Err(Error::OutsideDomain(y.to_vec()));
        }
        Ok(-d.ln())
    }

    /// `u_eps(y) = sum_i w_i u(y + eps w_i)`; needs `y` in `Omega_eps`.
    pub fn u_eps(&self, eps: f64, y: &[f64]) -> Result<f64> {
        if y.len() != self.domain.rank {
            return Err(Error::DimensionMismatch { expected: self.domain.rank, got: y.len() });
        }
        if !(self.distance(y) > eps) {
            return Err(Error::OutsideDomain(y.to_vec()));
        }
        let mut p = vec![0.0; y.len()];
        let terms: Vec<f64> = self
            .kernel
            .nodes
            .iter()
            .map(|(w, weight)| {
                for k in 0..p.len() {
                    p[k] = y[k] + eps * w[k];
                }
                -weight * self.distance(&p).ln()
            })
            .collect();
        Ok(pairwise_sum(&terms))
    }

    pub fn v_eps(&self, eps: f64, y: &[f64]) -> Result<f64> {
        Ok(self.u_eps(eps, y)? + eps * y.iter().map(|v| 1.0 / v).sum::<f64>())
    }

    /// Directional derivative of `v_eps` by central differences.
    pub fn v_eps_directional(&self, eps: f64, y: &[f64], dir: &[f64]) -> Result<f64> {
        let h = 1e-5 * eps;
        let p: Vec<f64> = y.iter().zip(dir).map(|(a, b)| a + h * b).collect();
        let m: Vec<f64> = y.iter().zip(dir).map(|(a, b)| a - h * b).collect();
        Ok((self.v_eps(eps, &p)? - self.v_eps(eps, &m)?) / (2.0 * h))
    }
}

/// `delta_eps = -ln(3 eps)`.
pub fn level_threshold(eps: f64) -> f64 {
    -(3.0 * eps).ln()
}

/// `{y in Omega_eps : v_eps(y) < delta_eps}` with sampled boundary points.
#[derive(Debug, Clone)]
pub struct ExhaustionLevel {
    pub eps: f64,
    pub delta: f64,
    pub shrunk: Option<DomainBase>,
    pub boundary: Vec<Vec<f64>>,
    /// Boundary points that lie strictly inside `Omega_eps`.
    pub boundary_inside: usize,
    /// Boundary points where the derivative of `v_eps` along the cone diagonal is negative.
    pub gradient_nonvanishing: usize,
    /// Seeds whose search line never met the level set.
    pub missed_seeds: usize,
}

impl ExhaustionLevel {
    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    pub fn checks_pass(&self) -> bool {
        !self.boundary.is_empty()
            && self.boundary_inside == self.boundary.len()
            && self.gradient_nonvanishing == self.boundary.len()
    }

    pub fn boundary_csv(&self) -> String {
        let r = self.boundary.first().map_or(0, |p| p.len());
        let mut s = (0..r).map(|k| format!("y{}", k + 1)).collect::<Vec<_>>().join(",");
        s.push('\n');
        for p in &self.boundary {
            s.push_str(&p.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }
}

pub fn level_contains(m: &Mollifier, eps: f64, y: &[f64]) -> bool {
    match m.v_eps(eps, y) {
        Ok(v) => v < level_threshold(eps),
        Err(_) => false,
    }
}

/// Orthonormal basis of the complement of `d` in `R^r`.
fn complement(d: &Vector) -> Vec<Vector> {
    let r = d.len();
    let u = d.normalize();
    let mut out: Vec<Vector> = Vec::new();
    for k in 0..r {
        let mut v = Vector::zeros(r);
        v[k] = 1.0;
        v -= &u * u.dot(&v);
        for w in &out {
            v -= w * w.dot(&v);
        }
        if v.norm() > 1e-8 {
            out.push(v.normalize());
        }
        if out.len() == r - 1 {
            break;
        }
    }
    out
}

/// Seeds spread over the hyperplane through `center` orthogonal to `d`.
fn seeds(center: &[f64], d: &Vector, per_axis: usize, radius: f64) -> Vec<Vec<f64>> {
    let comp = complement(d);
    let mut out = vec![center.to_vec()];
    for u in &comp {
        let mut next = Vec::new();
        for p in &out {
            for i in 0..per_axis {
                let t = if per_axis == 1 { 0.0 } else { -radius + 2.0 * radius * i as f64 / (per_axis - 1) as f64 };
                next.push(p.iter().zip(u.iter()).map(|(a, b)| a + t * b).collect());
            }
        }
        out = next;
    }
    out
}

/// Builds `Omega~_eps` and samples its boundary by bisection along the cone
/// diagonal from seeds on a transverse hyperplane.
pub fn smooth_exhaustion_level(m: &Mollifier, eps: f64, per_axis: usize) -> Result<ExhaustionLevel> {
    let cone = m.domain.cone();
    if !m.domain.is_stein().stein {
        return Err(Error::NotApplicable("exhaustion needs a convex C-invariant base".into()));
    }
    let delta = level_threshold(eps);
    let shrunk = shrink(&m.domain, eps)?;
    let Some(inner) = shrunk.clone() else {
        return Ok(ExhaustionLevel {
            eps,
            delta,
            shrunk,
            boundary: Vec::new(),
            boundary_inside: 0,
            gradient_nonvanishing: 0,
            missed_seeds: 0,
        });
    };
    let (center, _) = inner.interior_point()?;
    let diag = if cone.generators().is_empty() { Vector::from_element(m.domain.rank, 1.0) } else { cone.diagonal() };
    let scale = center.iter().map(|v| v.abs()).fold(1.0_f64, f64::max);
    let seed_pts = seeds(&center, &diag, per_axis, 4.0 * scale);
    let inside = |y: &[f64]| level_contains(m, eps, y);
    let along = |s: &[f64], t: f64| -> Vec<f64> { s.iter().zip(diag.iter()).map(|(a, b)| a + t * b).collect() };

    let results: Vec<Option<Vec<f64>>> = seed_pts
        .par_iter()
        .map(|s| {
            // Find a member on the line, walking forward along the diagonal.
            let mut t_in = None;
            let mut t = 0.0;
            for step in 0..48 {
                if inside(&along(s, t)) {
                    t_in = Some(t);
                    break;
                }
                t = scale * 2f64.powi(step / 2 - 2) * if step % 2 == 0 { 1.0 } else { 1.5 };
            }
            let t_in = t_in?;
            // Walk backwards until membership fails.
            let mut back = scale * 0.25;
            let mut t_out = t_in - back;
            let mut tries = 0;
            while inside(&along(s, t_out)) {
                back *= 2.0;
                t_out = t_in - back;
                tries += 1;
                if tries > 60 {
                    return None;
                }
            }
            let (mut lo, mut hi) = (t_out, t_in);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if inside(&along(s, mid)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-13 * hi.abs().max(1.0) {
                    break;
                }
            }
            Some(along(s, 0.5 * (lo + hi)))
        })
        .collect();
    let missed_seeds = results.iter().filter(|r| r.is_none()).count();
    let boundary: Vec<Vec<f64>> = results.into_iter().flatten().collect();
    let boundary_inside = boundary.iter().filter(|p| inner.contains(p)).count();
    let dir: Vec<f64> = diag.iter().copied().collect();
    let gradient_nonvanishing = boundary
        .par_iter()
        .filter(|p| matches!(m.v_eps_directional(eps, p, &dir), Ok(g) if g < 0.0))
        .count();
    Ok(ExhaustionLevel { eps, delta, shrunk, boundary, boundary_inside, gradient_nonvanishing, missed_seeds })
}

/// `n = 1, 2, 4, ...` up to `n_max`.
pub fn dyadic_schedule(n_max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut n = 1;
    while n <= n_max {
        out.push(n);
        n *= 2;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestingReport {
    pub samples: usize,
    pub violations: usize,
    /// First sample that lies in a level but not in a later one.
    pub witness: Option<Vec<f64>>,
}

/// Checks `Omega~_{eps_0} subset Omega~_{eps_1} subset ...` (eps decreasing) on samples.
pub fn nesting_check(m: &Mollifier, eps: &[f64], samples: &[Vec<f64>]) -> NestingReport {
    let flags: Vec<Vec<bool>> =
        samples.par_iter().map(|y| eps.iter().map(|e| level_contains(m, *e, y)).collect()).collect();
    let mut violations = 0;
    let mut witness = None;
    for (y, f) in samples.iter().zip(&flags) {
        let bad = f.windows(2).any(|w| w[0] && !w[1]);
        if bad {
            violations += 1;
            if witness.is_none() {
                witness = Some(y.clone());
            }
        }
    }
    NestingReport { samples: samples.len(), violations, witness }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub probes: usize,
    pub failures: usize,
    pub worst: f64,
}

/// Midpoint convexity of `v_eps` on random pairs of `Omega_eps` in `[lo, hi]^r`.
pub fn v_eps_convexity(m: &Mollifier, eps: f64, lo: f64, hi: f64, probes: usize, seed: u64) -> ProbeReport {
    let r = m.domain.rank;
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(probes);
        while out.len() < probes {
            let a: Vec<f64> = (0..r).map(|_| rng.gen_range(lo..hi)).collect();
            let b: Vec<f64> = (0..r).map(|_| rng.gen_range(lo..hi)).collect();
            if m.distance(&a) > eps && m.distance(&b) > eps {
                out.push((a, b));
            }
        }
        out
    };
    let gaps: Vec<f64> = pairs
        .par_iter()
        .map(|(a, b)| {
            let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
            let va = m.v_eps(eps, a).expect("sampled inside");
            let vb = m.v_eps(eps, b).expect("sampled inside");
            let vm = m.v_eps(eps, &mid).expect("convex domain");
            vm - 0.5 * (va + vb)
        })
        .collect();
    let failures = gaps.iter().filter(|g| **g > 1e-8).count();
    ProbeReport { probes, failures, worst: gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max) }
}

/// Strict decrease `v_eps(y + v) < v_eps(y)` for random `y` and nonzero `v` in the closed cone.
pub fn v_eps_monotonicity(m: &Mollifier, eps: f64, lo: f64, hi: f64, probes: usize, seed: u64) -> ProbeReport {
    let r = m.domain.rank;
    let cone = ConeSpec::new(r, m.domain.tube);
    let gens = cone.generators();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(probes);
    while cases.len() < probes && !gens.is_empty() {
        let y: Vec<f64> = (0..r).map(|_| rng.gen_range(lo..hi)).collect();
        if m.distance(&y) <= eps {
            continue;
        }
        let coeffs: Vec<f64> = gens.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut v = vec![0.0; r];
        for (c, g) in coeffs.iter().zip(&gens) {
            for k in 0..r {
                v[k] += c * g[k];
            }
        }
        if v.iter().all(|x| *x == 0.0) {
            continue;
        }
        let scale: f64 = rng.gen_range(0.01..2.0);
        cases.push((y, v.into_iter().map(|x| x * scale).collect::<Vec<f64>>()));
    }
    let gaps: Vec<f64> = cases
        .par_iter()
        .map(|(y, v)| {
            let yv: Vec<f64> = y.iter().zip(v).map(|(a, b)| a + b).collect();
            m.v_eps(eps, &yv).expect("C-invariant") - m.v_eps(eps, y).expect("sampled inside")
        })
        .collect();
    let failures = gaps.iter().filter(|g| !(**g < 0.0)).count();
    ProbeReport { probes: cases.len(), failures, worst: gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_line() -> DomainBase {
        DomainBase::hrep(1, false, vec![HalfSpace::new(vec![-1.0], -1.0)]).unwrap()
    }

    #[test]
    fn profile_is_decreasing() {
        for i in 0..100 {
            let s = i as f64 / 100.0;
            assert!(bump_profile_derivative(s) < 0.0);
            let h = 1e-6;
            if s > h && s + h < 1.0 {
                let fd = (bump_profile(s + h) - bump_profile(s - h)) / (2.0 * h);
                assert!((fd - bump_profile_derivative(s)).abs() < 1e-6);
            }
        }
        assert_eq!(bump_profile(1.0), 0.0);
    }

    #[test]
    fn kernel_mass_against_fine_quadrature() {
        // A much finer midpoint rule of the normalized density integrates to one.
        for (r, m) in [(1usize, 4001usize), (2, 801)] {
            let c = bump_normalization(r);
            let step = 2.0 / m as f64;
            let axis: Vec<f64> = (0..m).map(|i| -1.0 + (i as f64 + 0.5) * step).collect();
            let mass: f64 = if r == 1 {
                axis.iter().map(|x| c * bump_profile(x * x) * step).sum()
            } else {
                axis.iter()
                    .flat_map(|x| axis.iter().map(move |y| c * bump_profile(x * x + y * y) * step * step))
                    .sum()
            };
            assert!((mass - 1.0).abs() < 1e-6, "rank {r}: {mass}");
        }
        let k = MollifierKernel::new(2, KernelSpec::default()).unwrap();
        let total: f64 = k.nodes.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert!((k.raw_mass - 1.0).abs() < 1e-3);
    }

    #[test]
    fn shrink_offsets() {
        let s = shrink(&half_line(), 0.5).unwrap().unwrap();
        assert!(s.contains(&[1.6]) && !s.contains(&[1.4]));
        let box2 = DomainBase::hrep(1, false, vec![HalfSpace::new(vec![1.0], 2.0), HalfSpace::new(vec![-1.0], -1.0)])
            .unwrap();
        assert!(shrink(&box2, 0.6).unwrap().is_none());
    }

    #[test]
    fn shrink_composes() {
        let d = DomainBase::hrep(2, false, vec![HalfSpace::new(vec![-1.0, -2.0], -3.0)]).unwrap();
        let twice = shrink(&shrink(&d, 0.2).unwrap().unwrap(), 0.3).unwrap().unwrap();
        let once = shrink(&d, 0.5).unwrap().unwrap();
        let (a, b) = (twice.halfspaces().unwrap(), once.halfspaces().unwrap());
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.n, y.n);
            assert!((x.c - y.c).abs() < 1e-12);
        }
    }

    #[test]
    fn v_eps_decreases_to_u() {
        let m = Mollifier::new(&half_line(), KernelSpec::default()).unwrap();
        let vals: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|e| m.v_eps(*e, &[2.0]).unwrap()).collect();
        assert!(vals[0] > vals[1] && vals[1] > vals[2] && vals[2] > 0.0);
        assert!(vals[2] < 0.03);
        assert!(m.v_eps(0.5, &[1.2]).is_err());
    }

    #[test]
    fn half_line_exhaustion() {
        let m = Mollifier::new(&half_line(), KernelSpec::default()).unwrap();
        let lvl = smooth_exhaustion_level(&m, 0.1, 3).unwrap();
        assert_eq!(lvl.boundary.len(), 1);
        assert!(lvl.checks_pass());
        let b = lvl.boundary[0][0];
        assert!(level_contains(&m, 0.1, &[b + 1e-6]) && !level_contains(&m, 0.1, &[b - 1e-6]));
        assert_eq!(dyadic_schedule(4), vec![1, 2, 4]);
        assert_eq!(dyadic_schedule(1), vec![1]);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSummary {
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    pub boundary_points: usize,
    pub boundary_inside: usize,
    pub gradient_nonvanishing: usize,
    pub missed_seeds: usize,
    pub checks_pass: bool,
}

pub struct ExhaustRun {
    pub levels: Vec<(usize, ExhaustionLevel)>,
    pub nesting: NestingReport,
}

impl ExhaustRun {
    pub fn summaries(&self) -> Vec<LevelSummary> {
        self.levels
            .iter()
            .map(|(n, l)| LevelSummary {
                n: *n,
                eps: l.eps,
                delta: l.delta,
                boundary_points: l.boundary.len(),
                boundary_inside: l.boundary_inside,
                gradient_nonvanishing: l.gradient_nonvanishing,
                missed_seeds: l.missed_seeds,
                checks_pass: l.checks_pass(),
            })
            .collect()
    }

    pub fn pass(&self) -> bool {
        self.nesting.violations == 0 && self.levels.iter().all(|(_, l)| l.checks_pass())
    }
}

/// Levels `Omega~_{1/n}` for the dyadic `n <= n_max`, with a nesting check on
/// `samples` random points of a box around the domain.
pub fn exhaust(domain: &DomainBase, n_max: usize, per_axis: usize, samples: usize, seed: u64) -> Result<ExhaustRun> {
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let m = Mollifier::new(domain, KernelSpec::default())?;
    let schedule = dyadic_schedule(n_max);
    let levels = schedule
        .iter()
        .map(|&n| Ok((n, smooth_exhaustion_level(&m, 1.0 / n as f64, per_axis)?)))
        .collect::<Result<Vec<_>>>()?;
    let (center, _) = domain.interior_point()?;
    let hi = center.iter().fold(1.0_f64, |a, c| a.max(*c)) * 3.0 + 5.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..samples).map(|_| (0..domain.rank).map(|_| rng.gen_range(0.0..hi)).collect()).collect();
    let eps: Vec<f64> = schedule.iter().map(|&n| 1.0 / n as f64).collect();
    Ok(ExhaustRun { levels, nesting: nesting_check(&m, &eps, &pts) })
}
