//! Bases `Omega` of N-invariant domains: half-space and point-cloud
//! representations, the cone `C`, Stein classification, distance to the
//! boundary and the convex C-invariant hull.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{null_vector, Mat, Vector};

/// Coordinates with absolute value below this are snapped to zero before
/// sign tests on normals.
pub const SNAP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub rank: usize,
    pub tube: bool,
}

impl ConeSpec {
    pub fn new(rank: usize, tube: bool) -> Self {
        ConeSpec { rank, tube }
    }

    /// `e_1..e_r` (non-tube) or `e_1..e_{r-1}` (tube).
    pub fn generators(&self) -> Vec<Vector> {
        let k = if self.tube { self.rank - 1 } else { self.rank };
        (0..k)
            .map(|j| {
                let mut v = Vector::zeros(self.rank);
                v[j] = 1.0;
                v
            })
            .collect()
    }

    /// Membership of `v` in the closed cone.
    pub fn contains_closed(&self, v: &[f64], tol: f64) -> bool {
        let last_ok = !self.tube || v[self.rank - 1].abs() <= tol;
        last_ok && v.iter().all(|x| *x >= -tol)
    }

    /// Sum of the generators: `(1,..,1)` or `(1,..,1,0)`.
    pub fn diagonal(&self) -> Vector {
        self.generators().iter().fold(Vector::zeros(self.rank), |acc, g| acc + g)
    }
}

/// The open half-space `n . y < c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfSpace {
    pub n: Vec<f64>,
    pub c: f64,
}

impl HalfSpace {
    pub fn new(n: Vec<f64>, c: f64) -> Self {
        HalfSpace { n, c }
    }

    pub fn slack(&self, y: &[f64]) -> f64 {
        self.c - dot(&self.n, y)
    }

    pub fn normal_norm(&self) -> f64 {
        self.n.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    /// Intersection of the open half-spaces with the open positive octant.
    HRep(Vec<HalfSpace>),
    /// Finite sample of a domain; the represented set is its convex hull.
    Cloud(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainSpec", into = "DomainSpec")]
pub struct DomainBase {
    pub rank: usize,
    pub tube: bool,
    pub repr: Representation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainSpec {
    rank: usize,
    tube: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hrep: Option<Vec<HalfSpace>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cloud: Option<Vec<Vec<f64>>>,
}

impl TryFrom<DomainSpec> for DomainBase {
    type Error = Error;

    fn try_from(s: DomainSpec) -> Result<Self> {
        match (s.hrep, s.cloud) {
            (Some(h), None) => DomainBase::hrep(s.rank, s.tube, h),
            (None, Some(c)) => DomainBase::cloud(s.rank, s.tube, c),
            _ => Err(Error::InvalidInput("domain needs exactly one of \"hrep\" or \"cloud\"".into())),
        }
    }
}

impl From<DomainBase> for DomainSpec {
    fn from(d: DomainBase) -> Self {
        let (hrep, cloud) = match d.repr {
            Representation::HRep(h) => (Some(h), None),
            Representation::Cloud(c) => (None, Some(c)),
        };
        DomainSpec { rank: d.rank, tube: d.tube, hrep, cloud }
    }
}

/// A ray leaving the domain: `point + t * direction` exits for `t >= exit_t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayWitness {
    pub point: Vec<f64>,
    pub direction: Vec<f64>,
    pub exit_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CInvariance {
    pub invariant: bool,
    /// True when the verdict comes from probing a point cloud.
    pub sampled: bool,
    pub witness: Option<RayWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteinVerdict {
    pub convex: bool,
    pub c_invariant: bool,
    pub stein: bool,
    pub sampled: bool,
    pub witness: Option<RayWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullResult {
    pub rank: usize,
    pub tube: bool,
    /// Facets `n . y <= c` of the closed hull, sorted lexicographically.
    pub hrep: Vec<HalfSpace>,
    pub vertices: Vec<Vec<f64>>,
    pub rays: Vec<Vec<f64>>,
    /// The hull spans less than the full dimension; `hrep` then contains
    /// opposite pairs encoding the affine span.
    pub lower_dimensional: bool,
    /// The hull meets the boundary of the positive octant and was clipped to it.
    pub clipped: bool,
}

impl HullResult {
    pub fn domain(&self) -> DomainBase {
        DomainBase { rank: self.rank, tube: self.tube, repr: Representation::HRep(self.hrep.clone()) }
    }

    /// Closed membership with absolute slack `tol`.
    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.hrep.iter().all(|h| h.slack(y) >= -tol)
    }

    /// Boundary of the hull inside the box `[0, extent]^2`, as a closed
    /// counter-clockwise polygon (rank 2 only).
    pub fn boundary_polygon(&self, extent: f64) -> Option<Vec<[f64; 2]>> {
        if self.rank != 2 {
            return None;
        }
        let mut poly = vec![[0.0, 0.0], [extent, 0.0], [extent, extent], [0.0, extent]];
        for h in &self.hrep {
            let val = |p: &[f64; 2]| h.n[0] * p[0] + h.n[1] * p[1] - h.c;
            let mut out = Vec::with_capacity(poly.len() + 1);
            for i in 0..poly.len() {
                let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
                let (vp, vq) = (val(&p), val(&q));
                if vp <= 0.0 {
                    out.push(p);
                }
                if (vp < 0.0 && vq > 0.0) || (vp > 0.0 && vq < 0.0) {
                    let t = vp / (vp - vq);
                    out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
                }
            }
            poly = out;
            if poly.is_empty() {
                return Some(poly);
            }
        }
        Some(poly)
    }

    /// Polygon of [`boundary_polygon`](Self::boundary_polygon) as `y1,y2` CSV.
    pub fn boundary_csv(&self, extent: f64) -> Option<String> {
        let poly = self.boundary_polygon(extent)?;
        let mut s = String::from("y1,y2\n");
        for p in poly.iter().chain(poly.first()) {
            s.push_str(&format!("{:.16e},{:.16e}\n", p[0], p[1]));
        }
        Some(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityCheck {
    pub convex: bool,
    pub pairs_checked: usize,
    /// Violating pair `(y, y')`: `u((y+y')/2) > (u(y)+u(y'))/2 + slack`.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn snap(x: f64) -> f64 {
    if x.abs() < SNAP_TOL {
        0.0
    } else {
        x
    }
}

/// Snap to zero, then round to 12 significant digits so hull output is
/// reproducible and free of last-bit noise.
fn canon(x: f64) -> f64 {
    let x = snap(x);
    if x == 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(11 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

impl DomainBase {
    pub fn hrep(rank: usize, tube: bool, halfspaces: Vec<HalfSpace>) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidInput("rank must be positive".into()));
        }
        for h in &halfspaces {
            if h.n.len() != rank {
                return Err(Error::DimensionMismatch { expected: rank, got: h.n.len() });
            }
            if h.n.iter().chain(std::iter::once(&h.c)).any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("non-finite half-space data".into()));
            }
        }
        let d = DomainBase { rank, tube, repr: Representation::HRep(halfspaces) };
        d.interior_point()?;
        Ok(d)
    }

    pub fn cloud(rank: usize, tube: bool, points: Vec<Vec<f64>>) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidInput("rank must be positive".into()));
        }
        if points.is_empty() {
            return Err(Error::EmptySamples);
        }
        for p in &points {
            if p.len() != rank {
                return Err(Error::DimensionMismatch { expected: rank, got: p.len() });
            }
            if let Some((index, &value)) = p.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
                return Err(Error::NonPositive { index, value });
            }
        }
        Ok(DomainBase { rank, tube, repr: Representation::Cloud(points) })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn cone(&self) -> ConeSpec {
        ConeSpec::new(self.rank, self.tube)
    }

    pub fn halfspaces(&self) -> Result<&[HalfSpace]> {
        match &self.repr {
            Representation::HRep(h) => Ok(h),
            Representation::Cloud(_) => Err(Error::NotApplicable("operation needs a half-space representation".into())),
        }
    }

    /// Half-spaces together with the octant faces `-y_k < 0`.
    pub fn all_halfspaces(&self) -> Result<Vec<HalfSpace>> {
        let mut rows = self.halfspaces()?.to_vec();
        rows.extend(octant_faces(self.rank));
        Ok(rows)
    }

    /// Open membership. For clouds: closed membership in the convex hull.
    pub fn contains(&self, y: &[f64]) -> bool {
        if y.len() != self.rank || y.iter().any(|v| !(*v > 0.0)) {
            return false;
        }
        match &self.repr {
            Representation::HRep(h) => h.iter().all(|hs| hs.slack(y) > 0.0),
            Representation::Cloud(pts) => match hull_of(self.rank, pts, &[]) {
                Ok(hull) => hull.contains(y, 1e-12 * (1.0 + norm(y))),
                Err(_) => false,
            },
        }
    }

    /// Chebyshev center of the (capped) domain and its inradius. Fails when
    /// the interior is empty.
    pub fn interior_point(&self) -> Result<(Vec<f64>, f64)> {
        match &self.repr {
            Representation::HRep(_) => {
                let rows = self.all_halfspaces()?;
                chebyshev_center(self.rank, &rows)
                    .ok_or_else(|| Error::InvalidInput("half-space representation has empty interior".into()))
            }
            Representation::Cloud(pts) => {
                let mut c = vec![0.0; self.rank];
                for p in pts {
                    for (ci, pi) in c.iter_mut().zip(p) {
                        *ci += pi / pts.len() as f64;
                    }
                }
                Ok((c, 0.0))
            }
        }
    }

    /// Distance from `y` to the boundary of a half-space domain, octant faces included.
    pub fn distance_to_boundary(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.rank {
            return Err(Error::DimensionMismatch { expected: self.rank, got: y.len() });
        }
        let rows = self.all_halfspaces()?;
        if !self.contains(y) {
            return Err(Error::OutsideDomain(y.to_vec()));
        }
        Ok(rows.iter().map(|h| h.slack(y) / h.normal_norm()).fold(f64::INFINITY, f64::min))
    }

    pub fn is_convex(&self) -> bool {
        // Half-space intersections and convex hulls are convex.
        true
    }

    pub fn is_c_invariant(&self) -> CInvariance {
        let gens = self.cone().generators();
        match &self.repr {
            Representation::HRep(h) => {
                for hs in h {
                    for g in &gens {
                        let pairing: f64 = hs.n.iter().map(|x| snap(*x)).zip(g.iter()).map(|(a, b)| a * b).sum();
                        if pairing > 0.0 {
                            let (y0, _) = self.interior_point().expect("validated at construction");
                            let exit_t = hs.slack(&y0) / pairing;
                            return CInvariance {
                                invariant: false,
                                sampled: false,
                                witness: Some(RayWitness { point: y0, direction: g.as_slice().to_vec(), exit_t }),
                            };
                        }
                    }
                }
                CInvariance { invariant: true, sampled: false, witness: None }
            }
            Representation::Cloud(pts) => {
                let hull = match hull_of(self.rank, pts, &[]) {
                    Ok(h) => h,
                    Err(_) => return CInvariance { invariant: gens.is_empty(), sampled: true, witness: None },
                };
                // Probe each sample along each generator by more than the hull's extent.
                let extent = pts
                    .iter()
                    .flat_map(|p| pts.iter().map(move |q| norm(&sub(p, q))))
                    .fold(0.0_f64, f64::max)
                    .max(1.0);
                for p in pts {
                    for g in &gens {
                        let t = 2.0 * extent;
                        let probe: Vec<f64> = p.iter().zip(g.iter()).map(|(a, b)| a + t * b).collect();
                        if !hull.contains(&probe, 1e-9) {
                            return CInvariance {
                                invariant: false,
                                sampled: true,
                                witness: Some(RayWitness {
                                    point: p.clone(),
                                    direction: g.as_slice().to_vec(),
                                    exit_t: t,
                                }),
                            };
                        }
                    }
                }
                CInvariance { invariant: true, sampled: true, witness: None }
            }
        }
    }

    pub fn is_stein(&self) -> SteinVerdict {
        let convex = self.is_convex();
        let ci = self.is_c_invariant();
        SteinVerdict {
            convex,
            c_invariant: ci.invariant,
            stein: convex && ci.invariant,
            sampled: ci.sampled,
            witness: ci.witness,
        }
    }

    /// Vertices and extreme rays of the closure (intersected with the closed octant).
    #[allow(clippy::type_complexity)]
    pub fn v_representation(&self) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        match &self.repr {
            Representation::Cloud(p) => Ok((p.clone(), Vec::new())),
            Representation::HRep(_) => {
                let rows = self.all_halfspaces()?;
                Ok((enumerate_vertices(self.rank, &rows), enumerate_rays(self.rank, &rows)))
            }
        }
    }

    /// Convex, C-invariant hull: `conv(Omega) + closed cone`.
    pub fn envelope(&self) -> Result<HullResult> {
        let (points, mut rays) = self.v_representation()?;
        if points.is_empty() {
            return Err(Error::InvalidInput("domain has no vertices".into()));
        }
        for g in self.cone().generators() {
            rays.push(g.as_slice().to_vec());
        }
        let mut hull = hull_of(self.rank, &points, &rays)?;
        hull.tube = self.tube;
        if let Representation::HRep(_) = &self.repr {
            // Report facets that coincide with an input face as that face, so
            // the envelope of an envelope reproduces it exactly.
            let inputs: Vec<HalfSpace> = self.all_halfspaces()?.iter().map(canonical_face).collect();
            for f in hull.hrep.iter_mut() {
                let close = |g: &&HalfSpace| {
                    g.n.iter().zip(&f.n).all(|(x, y)| (x - y).abs() <= 1e-8) && (g.c - f.c).abs() <= 1e-8 * (1.0 + f.c.abs())
                };
                if let Some(g) = inputs.iter().find(close) {
                    *f = g.clone();
                }
            }
            hull.hrep.sort_by(|a, b| a.n.partial_cmp(&b.n).expect("finite").then(a.c.partial_cmp(&b.c).expect("finite")));
        }
        Ok(hull)
    }
}

fn octant_faces(rank: usize) -> Vec<HalfSpace> {
    (0..rank)
        .map(|k| {
            let mut n = vec![0.0; rank];
            n[k] = -1.0;
            HalfSpace::new(n, 0.0)
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn solve_square(a: Mat, b: Vector) -> Option<Vector> {
    let svd = a.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax == 0.0 || smin <= 1e-12 * smax {
        return None;
    }
    a.lu().solve(&b)
}

/// Largest ball inside `rows` (closure, all rows `n.y <= c`), radius capped.
fn chebyshev_center(rank: usize, rows: &[HalfSpace]) -> Option<(Vec<f64>, f64)> {
    let scale = rows
        .iter()
        .map(|h| h.c.abs() / h.normal_norm().max(1e-300))
        .fold(1.0_f64, f64::max);
    let mut ext: Vec<(Vec<f64>, f64)> = rows
        .iter()
        .map(|h| {
            let mut n = h.n.clone();
            n.push(h.normal_norm());
            (n, h.c)
        })
        .collect();
    let mut cap = vec![0.0; rank + 1];
    cap[rank] = 1.0;
    ext.push((cap, scale));
    let mut best: Option<(Vec<f64>, f64)> = None;
    for idx in subsets(ext.len(), rank + 1) {
        let a = Mat::from_fn(rank + 1, rank + 1, |i, k| ext[idx[i]].0[k]);
        let b = Vector::from_fn(rank + 1, |i, _| ext[idx[i]].1);
        let Some(x) = solve_square(a, b) else { continue };
        let feasible = ext.iter().all(|(n, c)| dot(n, x.as_slice()) <= c + 1e-9 * (1.0 + c.abs()));
        if !feasible {
            continue;
        }
        let t = x[rank];
        let y: Vec<f64> = x.as_slice()[..rank].to_vec();
        let better = match &best {
            None => true,
            Some((by, bt)) => t > bt + 1e-12 || ((t - bt).abs() <= 1e-12 && y < *by),
        };
        if better {
            best = Some((y, t));
        }
    }
    best.filter(|(_, t)| *t > 1e-12)
}

fn enumerate_vertices(rank: usize, rows: &[HalfSpace]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for idx in subsets(rows.len(), rank) {
        let a = Mat::from_fn(rank, rank, |i, k| rows[idx[i]].n[k]);
        let b = Vector::from_fn(rank, |i, _| rows[idx[i]].c);
        let Some(x) = solve_square(a, b) else { continue };
        let y = x.as_slice().to_vec();
        if rows.iter().all(|h| h.slack(&y) >= -1e-9 * (1.0 + h.c.abs())) {
            push_unique(&mut out, y.into_iter().map(canon).collect());
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    out
}

fn enumerate_rays(rank: usize, rows: &[HalfSpace]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for idx in subsets(rows.len(), rank - 1) {
        let v = if idx.is_empty() {
            if rank != 1 {
                continue;
            }
            Vector::from_element(1, 1.0)
        } else {
            let a = Mat::from_fn(idx.len(), rank, |i, k| rows[idx[i]].n[k]);
            match null_vector(&a, 1e-12) {
                Some(v) => v,
                None => continue,
            }
        };
        for sign in [1.0, -1.0] {
            let d: Vec<f64> = v.iter().map(|x| sign * x).collect();
            if rows.iter().all(|h| dot(&h.n, &d) <= 1e-10) {
                push_unique(&mut out, normalize_inf(&d));
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    out
}

fn normalize_inf(v: &[f64]) -> Vec<f64> {
    let m = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    v.iter().map(|x| canon(x / m)).collect()
}

fn canonical_face(h: &HalfSpace) -> HalfSpace {
    let m = h.n.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    HalfSpace::new(h.n.iter().map(|x| canon(x / m)).collect(), canon(h.c / m))
}

fn push_unique(out: &mut Vec<Vec<f64>>, v: Vec<f64>) {
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + x.abs()));
    if !out.iter().any(|w| close(w, &v)) {
        out.push(v);
    }
}

/// Closed hull `conv(points) + cone(rays)` in `R^rank`, computed as the
/// polyhedral cone over the lifted generators `(p, 1)` and `(v, 0)`.
pub fn hull_of(rank: usize, points: &[Vec<f64>], rays: &[Vec<f64>]) -> Result<HullResult> {
    if points.is_empty() {
        return Err(Error::EmptySamples);
    }
    let dim = rank + 1;
    let mut gens: Vec<Vector> = Vec::new();
    for p in points {
        let mut v = p.clone();
        v.push(1.0);
        gens.push(Vector::from_vec(v));
    }
    for r in rays {
        let mut v = r.clone();
        v.push(0.0);
        gens.push(Vector::from_vec(v));
    }
    let gmat = Mat::from_columns(&gens);
    // Orthonormal basis of the span of the lifted generators and of its complement.
    let eig = (&gmat * gmat.transpose()).symmetric_eigen();
    let smax = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut span_cols = Vec::new();
    let mut perp_cols = Vec::new();
    for (k, ev) in eig.eigenvalues.iter().enumerate() {
        let col = eig.eigenvectors.column(k).into_owned();
        if *ev > 1e-14 * smax {
            span_cols.push(col);
        } else {
            perp_cols.push(col);
        }
    }
    let k = span_cols.len();
    let basis = Mat::from_columns(&span_cols);
    let proj: Vec<Vector> = gens.iter().map(|g| basis.transpose() * g).collect();
    let scale = gens.iter().map(|g| g.norm()).fold(0.0_f64, f64::max);

    let mut facets: Vec<Vector> = Vec::new();
    for idx in subsets(proj.len(), k - 1) {
        let a = if idx.is_empty() {
            Vector::from_element(1, 1.0)
        } else {
            let a = Mat::from_fn(idx.len(), k, |i, c| proj[idx[i]][c]);
            match null_vector(&a, 1e-12) {
                Some(v) => v,
                None => continue,
            }
        };
        let vals: Vec<f64> = proj.iter().map(|g| a.dot(g)).collect();
        let tol = 1e-10 * scale;
        let oriented = if vals.iter().all(|v| *v <= tol) {
            a
        } else if vals.iter().all(|v| *v >= -tol) {
            -a
        } else {
            continue;
        };
        facets.push(&basis * oriented);
    }
    let lower_dimensional = k < dim;
    for u in &perp_cols {
        facets.push(u.clone());
        facets.push(-u);
    }

    let mut hrep: Vec<HalfSpace> = Vec::new();
    for f in facets {
        // a . (y, 1) <= 0  <=>  a_y . y <= -a_t
        let ny = &f.as_slice()[..rank];
        let m = ny.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        if m <= 1e-12 * f.norm() {
            continue;
        }
        let n: Vec<f64> = ny.iter().map(|x| canon(x / m)).collect();
        let c = canon(-f[rank] / m);
        let h = HalfSpace::new(n, c);
        let dup = hrep.iter().any(|g| {
            g.n.iter().zip(&h.n).all(|(x, y)| (x - y).abs() <= 1e-9) && (g.c - h.c).abs() <= 1e-9 * (1.0 + h.c.abs())
        });
        if !dup {
            hrep.push(h);
        }
    }
    hrep.sort_by(|a, b| a.n.partial_cmp(&b.n).expect("finite").then(a.c.partial_cmp(&b.c).expect("finite")));

    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut kept_rays: Vec<Vec<f64>> = Vec::new();
    if !lower_dimensional {
        let closed: Vec<HalfSpace> = hrep.clone();
        vertices = enumerate_vertices(rank, &closed);
        kept_rays = enumerate_rays(rank, &closed);
    } else {
        for p in points {
            push_unique(&mut vertices, p.clone());
        }
        for r in rays {
            push_unique(&mut kept_rays, normalize_inf(r));
        }
    }
    let clipped = vertices.iter().any(|v| v.iter().any(|x| *x <= 1e-12));
    if clipped {
        for f in octant_faces(rank) {
            if !hrep.contains(&f) {
                hrep.push(f);
            }
        }
        hrep.sort_by(|a, b| a.n.partial_cmp(&b.n).expect("finite").then(a.c.partial_cmp(&b.c).expect("finite")));
    }
    Ok(HullResult { rank, tube: false, hrep, vertices, rays: kept_rays, lower_dimensional, clipped })
}

/// Midpoint convexity of `u` over all pairs from `points`, within `slack`.
/// Pairs whose midpoint `u` cannot evaluate are skipped only if `u` is
/// undefined at an endpoint as well; otherwise they count as violations.
pub fn midpoint_convexity<F>(u: F, points: &[Vec<f64>], slack: f64) -> ConvexityCheck
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let mut pairs = 0;
    for i in 0..points.len() {
        for k in (i + 1)..points.len() {
            let (a, b) = (&points[i], &points[k]);
            let (Some(ua), Some(ub)) = (u(a), u(b)) else { continue };
            let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
            pairs += 1;
            let ok = match u(&mid) {
                Some(um) => um <= 0.5 * (ua + ub) + slack,
                None => false,
            };
            if !ok {
                return ConvexityCheck { convex: false, pairs_checked: pairs, witness: Some((a.clone(), b.clone())) };
            }
        }
    }
    ConvexityCheck { convex: true, pairs_checked: pairs, witness: None }
}

/// Midpoint convexity of `-ln d_Omega` on a grid of interior points.
pub fn log_dist_convexity_check(domain: &DomainBase, grid: &[Vec<f64>]) -> Result<ConvexityCheck> {
    domain.halfspaces()?;
    if let Some(p) = grid.iter().find(|p| !domain.contains(p)) {
        return Err(Error::OutsideDomain(p.clone()));
    }
    let u = |y: &[f64]| domain.distance_to_boundary(y).ok().map(|d| -d.ln());
    Ok(midpoint_convexity(u, grid, 1e-9))
}

/// Uniform tensor grid with `per_axis` nodes on `[lo_k, hi_k]` per axis.
pub fn tensor_grid(lo: &[f64], hi: &[f64], per_axis: usize) -> Vec<Vec<f64>> {
    let r = lo.len();
    let mut out = vec![Vec::new()];
    for k in 0..r {
        let mut next = Vec::new();
        for p in &out {
            for i in 0..per_axis {
                let t = if per_axis == 1 { 0.5 } else { i as f64 / (per_axis - 1) as f64 };
                let mut q = p.clone();
                q.push(lo[k] + t * (hi[k] - lo[k]));
                next.push(q);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hs(n: &[f64], c: f64) -> HalfSpace {
        HalfSpace::new(n.to_vec(), c)
    }

    #[test]
    fn cone_generators() {
        assert_eq!(ConeSpec::new(3, true).generators().len(), 2);
        assert_eq!(ConeSpec::new(3, false).generators().len(), 3);
        assert!(ConeSpec::new(1, true).generators().is_empty());
        assert_eq!(ConeSpec::new(2, true).diagonal().as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn c_invariance_by_normals() {
        let d = DomainBase::hrep(2, false, vec![hs(&[1.0, 1.0], 1.0)]).unwrap();
        let ci = d.is_c_invariant();
        assert!(!ci.invariant);
        let w = ci.witness.unwrap();
        let exit: Vec<f64> = w.point.iter().zip(&w.direction).map(|(p, v)| p + (w.exit_t + 0.1) * v).collect();
        assert!(!d.contains(&exit));

        let d = DomainBase::hrep(2, false, vec![hs(&[-1.0, 0.0], -1.0)]).unwrap();
        assert!(d.is_c_invariant().invariant);
        let d = DomainBase::hrep(2, true, vec![hs(&[0.0, 1.0], 5.0), hs(&[-1.0, 0.0], -1.0)]).unwrap();
        assert!(d.is_c_invariant().invariant);
    }

    #[test]
    fn stein_in_rank_one() {
        let interval = vec![hs(&[-1.0], -1.0), hs(&[1.0], 2.0)];
        let half_line = vec![hs(&[-1.0], -1.0)];
        assert!(DomainBase::hrep(1, true, interval.clone()).unwrap().is_stein().stein);
        assert!(!DomainBase::hrep(1, false, interval).unwrap().is_stein().stein);
        assert!(DomainBase::hrep(1, false, half_line).unwrap().is_stein().stein);
    }

    #[test]
    fn empty_interior_rejected() {
        assert!(DomainBase::hrep(1, false, vec![hs(&[1.0], 1.0), hs(&[-1.0], -1.0)]).is_err());
        assert!(DomainBase::hrep(2, false, vec![hs(&[1.0, 1.0], -1.0)]).is_err());
    }

    #[test]
    fn distances() {
        let d = DomainBase::hrep(1, false, vec![hs(&[-1.0], -1.0)]).unwrap();
        assert!((d.distance_to_boundary(&[3.0]).unwrap() - 2.0).abs() < 1e-15);
        let d = DomainBase::hrep(2, false, vec![hs(&[-1.0, 0.0], -1.0), hs(&[0.0, -1.0], -1.0)]).unwrap();
        assert!((d.distance_to_boundary(&[2.0, 4.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(d.distance_to_boundary(&[0.5, 4.0]).is_err());
        // octant face is active here
        let d = DomainBase::hrep(2, false, vec![hs(&[1.0, 1.0], 10.0)]).unwrap();
        assert!((d.distance_to_boundary(&[0.25, 3.0]).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn envelope_of_two_points() {
        let d = DomainBase::cloud(2, false, vec![vec![1.0, 3.0], vec![3.0, 1.0]]).unwrap();
        let h = d.envelope().unwrap();
        assert_eq!(
            h.hrep,
            vec![hs(&[-1.0, -1.0], -4.0), hs(&[-1.0, 0.0], -1.0), hs(&[0.0, -1.0], -1.0)]
        );
        assert_eq!(h.vertices, vec![vec![1.0, 3.0], vec![3.0, 1.0]]);
        assert!(!h.lower_dimensional && !h.clipped);
    }

    #[test]
    fn envelope_rank_one() {
        let d = DomainBase::cloud(1, false, vec![vec![1.5], vec![2.5]]).unwrap();
        let h = d.envelope().unwrap();
        assert_eq!(h.hrep, vec![hs(&[-1.0], -1.5)]);
        let single = DomainBase::cloud(1, false, vec![vec![1.5]]).unwrap().envelope().unwrap();
        assert_eq!(single.hrep, vec![hs(&[-1.0], -1.5)]);
    }

    #[test]
    fn envelope_is_idempotent_and_stein() {
        let d = DomainBase::hrep(2, false, vec![hs(&[1.0, 1.0], 4.0), hs(&[-1.0, 0.0], -1.0), hs(&[0.0, -1.0], -0.5)])
            .unwrap();
        let h1 = d.envelope().unwrap();
        let h2 = h1.domain().envelope().unwrap();
        assert_eq!(h1.hrep, h2.hrep);
        assert!(h1.domain().is_stein().stein);
        assert_eq!(h1.hrep, vec![hs(&[-1.0, 0.0], -1.0), hs(&[0.0, -1.0], -0.5)]);
    }

    #[test]
    fn envelope_clips_at_octant() {
        let d = DomainBase::hrep(2, false, vec![hs(&[1.0, 1.0], 1.0)]).unwrap();
        let h = d.envelope().unwrap();
        assert!(h.clipped);
        assert!(h.domain().is_stein().stein);
    }

    #[test]
    fn degenerate_cloud_is_flagged() {
        let d = DomainBase::cloud(2, true, vec![vec![1.0, 2.0], vec![2.0, 2.0]]).unwrap();
        let h = d.envelope().unwrap();
        assert!(h.lower_dimensional);
        assert!(h.contains(&[5.0, 2.0], 1e-9));
        assert!(!h.contains(&[5.0, 2.1], 1e-9));
    }

    #[test]
    fn cloud_probing() {
        let d = DomainBase::cloud(2, false, vec![vec![1.0, 1.0], vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let ci = d.is_c_invariant();
        assert!(!ci.invariant && ci.sampled);
        assert!(DomainBase::cloud(1, true, vec![vec![1.0], vec![3.0]]).unwrap().is_stein().stein);
    }

    #[test]
    fn log_distance_convexity() {
        let d = DomainBase::hrep(2, false, vec![hs(&[1.0, 2.0], 9.0), hs(&[-1.0, 0.0], -1.0)]).unwrap();
        let grid = tensor_grid(&[1.2, 0.3], &[4.0, 3.0], 6);
        let grid: Vec<Vec<f64>> = grid.into_iter().filter(|p| d.contains(p)).collect();
        assert!(log_dist_convexity_check(&d, &grid).unwrap().convex);
    }

    #[test]
    fn json_roundtrip() {
        let text = r#"{"rank":2,"tube":false,"hrep":[{"n":[-1,0],"c":-1}]}"#;
        let d = DomainBase::from_json(text).unwrap();
        let back: DomainBase = serde_json::from_value(serde_json::to_value(&d).unwrap()).unwrap();
        assert_eq!(d, back);
        assert!(DomainBase::from_json(r#"{"tube":false,"hrep":[]}"#).is_err());
        assert!(DomainBase::from_json(r#"{"rank":1,"tube":false,"hrep":[],"extra":1}"#).is_err());
        assert!(DomainBase::from_json(r#"{"rank":1,"tube":false,"cloud":[[-1.0]]}"#).is_err());
    }
}
