//! Discrete harmonic maps from geodesic disks of `ℍ²` into `Y_d`.
//!
//! The disk is triangulated along geodesic-polar rings and carries cotangent
//! weights computed from hyperbolic edge lengths. A map is discretely
//! harmonic when every interior value is the weighted barycenter of its
//! neighbours; the solver relaxes towards that by over-relaxed vertex
//! updates, one color class at a time.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::embedding::EmbeddingHandle;
use crate::error::domain;
use crate::hyp2::{hyp_distance, polar_point, HypPoint};
use crate::linalg::{frobenius, Mat};
use crate::spd::{distance, karcher_mean, quad_cr_bound_check, SpdPoint, KAPPA};
use crate::{Error, Result};

/// Floor for nonpositive cotangent weights.
pub const WEIGHT_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct DiskMesh {
    pub center: HypPoint,
    pub radius: f64,
    pub delta: f64,
    pub vertices: Vec<HypPoint>,
    /// Ring index of each vertex; ring 0 is the center.
    pub ring: Vec<usize>,
    pub ring_radius: Vec<f64>,
    pub boundary: Vec<bool>,
    pub triangles: Vec<[usize; 3]>,
    /// Undirected edges `(i, j, w)` with `i < j`.
    pub edges: Vec<(usize, usize, f64)>,
    /// One third of the adjacent (piecewise Euclidean) triangle areas.
    pub vertex_area: Vec<f64>,
    /// Weights clamped up to [`WEIGHT_FLOOR`].
    pub clamped: usize,
    offsets: Vec<usize>,
    adjacency: Vec<(usize, f64)>,
    colors: Vec<Vec<usize>>,
}

/// Ring `j` sits at radius `jΔ` with `⌈2π sinh(jΔ)/Δ⌉` vertices (at least
/// six); the outermost ring is moved to `R` exactly, absorbing a remainder
/// shorter than `Δ/2` into the previous spacing.
pub fn build_mesh(center: &HypPoint, radius: f64, delta: f64) -> Result<DiskMesh> {
    if !(delta > 0.0 && delta <= radius) || !radius.is_finite() {
        return Err(domain("mesh needs 0 < delta <= R"));
    }
    let mut m = (radius / delta - 1e-9).ceil() as usize;
    if m >= 2 && radius - (m - 1) as f64 * delta < 0.5 * delta {
        m -= 1;
    }
    let ring_radius: Vec<f64> = (0..=m).map(|j| if j == m { radius } else { j as f64 * delta }).collect();
    let mut vertices = vec![*center];
    let mut ring = vec![0];
    let mut starts = vec![0, 1];
    for (j, &r) in ring_radius.iter().enumerate().skip(1) {
        let n = ((2.0 * PI * r.sinh() / delta).ceil() as usize).max(6);
        for k in 0..n {
            vertices.push(polar_point(center, r, 2.0 * PI * k as f64 / n as f64));
            ring.push(j);
        }
        starts.push(vertices.len());
    }
    let boundary: Vec<bool> = ring.iter().map(|&j| j == m).collect();

    let mut triangles = Vec::new();
    for j in 0..m {
        let (a0, na) = (starts[j], starts[j + 1] - starts[j]);
        let (b0, nb) = (starts[j + 1], starts[j + 2] - starts[j + 1]);
        if na == 1 {
            for k in 0..nb {
                triangles.push([a0, b0 + k, b0 + (k + 1) % nb]);
            }
            continue;
        }
        // Zip the two rings together by angle.
        let (mut i, mut k) = (0, 0);
        while i < na || k < nb {
            let next_a = (i + 1) as f64 / na as f64;
            let next_b = (k + 1) as f64 / nb as f64;
            if i < na && (k == nb || next_a <= next_b) {
                triangles.push([a0 + i, a0 + (i + 1) % na, b0 + k % nb]);
                i += 1;
            } else {
                triangles.push([a0 + i % na, b0 + k, b0 + (k + 1) % nb]);
                k += 1;
            }
        }
    }

    flip_to_delaunay(&vertices, &mut triangles);

    let nv = vertices.len();
    let mut vertex_area = vec![0.0; nv];
    let mut edge_w: alloc::collections::BTreeMap<(usize, usize), f64> = alloc::collections::BTreeMap::new();
    for t in &triangles {
        let l: [f64; 3] = core::array::from_fn(|s| hyp_distance(&vertices[t[(s + 1) % 3]], &vertices[t[(s + 2) % 3]]));
        // Side s is opposite corner s.
        let p = 0.5 * (l[0] + l[1] + l[2]);
        let area = (p * (p - l[0]) * (p - l[1]) * (p - l[2])).max(0.0).sqrt();
        for &v in t {
            vertex_area[v] += area / 3.0;
        }
        for s in 0..3 {
            let (a, b, c) = (l[s], l[(s + 1) % 3], l[(s + 2) % 3]);
            let cot = (b * b + c * c - a * a) / (4.0 * area);
            let (u, v) = (t[(s + 1) % 3], t[(s + 2) % 3]);
            *edge_w.entry((u.min(v), u.max(v))).or_insert(0.0) += 0.5 * cot;
        }
    }
    let mut clamped = 0;
    let edges: Vec<(usize, usize, f64)> = edge_w
        .into_iter()
        .map(|((i, j), w)| {
            if !(w > WEIGHT_FLOOR) {
                clamped += 1;
                (i, j, WEIGHT_FLOOR)
            } else {
                (i, j, w)
            }
        })
        .collect();

    let mut degree = vec![0; nv];
    for &(i, j, _) in &edges {
        degree[i] += 1;
        degree[j] += 1;
    }
    let mut offsets = vec![0; nv + 1];
    for v in 0..nv {
        offsets[v + 1] = offsets[v] + degree[v];
    }
    let mut fill = offsets.clone();
    let mut adjacency = vec![(0, 0.0); offsets[nv]];
    for &(i, j, w) in &edges {
        adjacency[fill[i]] = (j, w);
        fill[i] += 1;
        adjacency[fill[j]] = (i, w);
        fill[j] += 1;
    }

    // Greedy coloring in vertex order; the mesh is not bipartite.
    let mut color = vec![usize::MAX; nv];
    let mut colors: Vec<Vec<usize>> = Vec::new();
    for v in 0..nv {
        let mut used = [false; 16];
        for &(u, _) in &adjacency[offsets[v]..offsets[v + 1]] {
            if color[u] < used.len() {
                used[color[u]] = true;
            }
        }
        let c = used.iter().position(|&x| !x).ok_or_else(|| domain("vertex degree too large to color"))?;
        color[v] = c;
        if colors.len() <= c {
            colors.resize(c + 1, Vec::new());
        }
        if !boundary[v] {
            colors[c].push(v);
        }
    }

    Ok(DiskMesh {
        center: *center,
        radius,
        delta,
        vertices,
        ring,
        ring_radius,
        boundary,
        triangles,
        edges,
        vertex_area,
        clamped,
        offsets,
        adjacency,
        colors,
    })
}

/// Lawson flips on the piecewise Euclidean metric with hyperbolic edge
/// lengths: an interior edge whose opposite angles sum past π (negative
/// cotangent weight) is replaced by the other diagonal of its quadrilateral.
fn flip_to_delaunay(vertices: &[HypPoint], triangles: &mut [[usize; 3]]) {
    use alloc::collections::BTreeMap;
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let len = |a: usize, b: usize| hyp_distance(&vertices[a], &vertices[b]);
    // Cotangent of the angle at `c` opposite the edge `ab`.
    let cot = |a: usize, b: usize, c: usize| {
        let (e, x, y) = (len(a, b), len(b, c), len(c, a));
        let p = 0.5 * (e + x + y);
        let area = (p * (p - e) * (p - x) * (p - y)).max(0.0).sqrt();
        (x * x + y * y - e * e) / (4.0 * area)
    };
    let mut owners: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (n, t) in triangles.iter().enumerate() {
        for s in 0..3 {
            owners.entry(key(t[s], t[(s + 1) % 3])).or_default().push(n);
        }
    }
    let mut stack: Vec<(usize, usize)> = owners.keys().copied().collect();
    let mut budget = 20 * triangles.len();
    while let Some((a, b)) = stack.pop() {
        if budget == 0 {
            break;
        }
        let Some(own) = owners.get(&(a, b)) else { continue };
        if own.len() != 2 {
            continue;
        }
        let (t1, t2) = (own[0], own[1]);
        let apex = |t: usize| triangles[t].iter().copied().find(|&v| v != a && v != b).unwrap();
        let (c, d) = (apex(t1), apex(t2));
        if c == d || owners.contains_key(&key(c, d)) || cot(a, b, c) + cot(a, b, d) >= -1e-12 {
            continue;
        }
        budget -= 1;
        owners.remove(&(a, b));
        triangles[t1] = [a, d, c];
        triangles[t2] = [b, c, d];
        for (e, from, to) in [(key(a, d), t2, t1), (key(b, c), t1, t2)] {
            if let Some(o) = owners.get_mut(&e) {
                for x in o.iter_mut() {
                    if *x == from {
                        *x = to;
                    }
                }
            }
        }
        owners.insert(key(c, d), alloc::vec![t1, t2]);
        stack.extend([key(a, c), key(a, d), key(b, c), key(b, d)]);
    }
}

impl DiskMesh {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Interior vertices grouped so that no two in a group are adjacent.
    pub fn color_classes(&self) -> &[Vec<usize>] {
        &self.colors
    }

    /// Vertices whose ring radius is at most `r`.
    pub fn within(&self, r: f64) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&v| self.ring_radius[self.ring[v]] <= r + 1e-9)
    }
}

/// Values of a map on the mesh vertices, indexed by vertex id.
#[derive(Clone, Debug)]
pub struct VertexMap<const D: usize> {
    pub values: Vec<SpdPoint<D>>,
}

impl<const D: usize> VertexMap<D> {
    pub fn constant(mesh: &DiskMesh, p: SpdPoint<D>) -> Self {
        Self { values: vec![p; mesh.len()] }
    }

    pub fn from_fn(mesh: &DiskMesh, f: impl Fn(&HypPoint) -> Result<SpdPoint<D>>) -> Result<Self> {
        Ok(Self { values: mesh.vertices.iter().map(f).collect::<Result<_>>()? })
    }

    /// `½ Σ w_uv d(h(u), h(v))²` over the edges.
    pub fn energy(&self, mesh: &DiskMesh) -> f64 {
        energy_of(mesh, &self.values)
    }

    /// Largest `d(h(u), h(v)) / d(u, v)` over the edges.
    pub fn edge_lipschitz(&self, mesh: &DiskMesh) -> f64 {
        mesh.edges
            .iter()
            .map(|&(i, j, _)| {
                distance(&self.values[i], &self.values[j]) / hyp_distance(&mesh.vertices[i], &mesh.vertices[j])
            })
            .fold(0.0, f64::max)
    }

    pub fn sup_distance(&self, other: &Self, vertices: impl Iterator<Item = usize>) -> f64 {
        vertices.map(|v| distance(&self.values[v], &other.values[v])).fold(0.0, f64::max)
    }
}

fn energy_of<const D: usize>(mesh: &DiskMesh, values: &[SpdPoint<D>]) -> f64 {
    mesh.edges.iter().map(|&(i, j, w)| 0.5 * w * distance(&values[i], &values[j]).powi(2)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MollifyReport {
    /// Largest distance from `f(v)` to a sample value around `v`.
    pub sample_spread: f64,
    /// Largest `d(f(v), f⁽¹⁾(v))`.
    pub displacement: f64,
    pub samples_per_vertex: usize,
}

/// `pairs` points at equal-area radii of the ball `B(v, radius)` along a
/// golden-angle spiral, each with its reflection through `v`.
pub fn ball_samples(v: &HypPoint, radius: f64, pairs: usize) -> Vec<HypPoint> {
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut out = Vec::with_capacity(2 * pairs);
    for k in 0..pairs {
        let r = (1.0 + (k as f64 + 0.5) / pairs as f64 * (radius.cosh() - 1.0)).acosh();
        let theta = golden * k as f64;
        out.push(polar_point(v, r, theta));
        out.push(polar_point(v, r, theta + PI));
    }
    out
}

/// `f⁽¹⁾(v)`: the barycenter of `f` over quasi-uniform samples of the ball of
/// the given radius about `v`.
pub fn mollify<const D: usize>(
    f: impl Fn(&HypPoint) -> Result<SpdPoint<D>>,
    mesh: &DiskMesh,
    radius: f64,
    pairs: usize,
) -> Result<(VertexMap<D>, MollifyReport)> {
    if pairs == 0 || !(radius > 0.0) {
        return Err(domain("mollifier needs a positive radius and samples"));
    }
    let mut report = MollifyReport { sample_spread: 0.0, displacement: 0.0, samples_per_vertex: 2 * pairs };
    let weights = vec![1.0; 2 * pairs];
    let mut values = Vec::with_capacity(mesh.len());
    for v in &mesh.vertices {
        let here = f(v)?;
        let pts: Vec<SpdPoint<D>> = ball_samples(v, radius, pairs).iter().map(&f).collect::<Result<_>>()?;
        for p in &pts {
            report.sample_spread = report.sample_spread.max(distance(&here, p));
        }
        let mean = karcher_mean(&pts, &weights, 1e-12, 500)?;
        report.displacement = report.displacement.max(distance(&here, &mean));
        values.push(mean);
    }
    Ok((VertexMap { values }, report))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Stop once the largest vertex move of a sweep is at most this.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Fixed relaxation factor; `None` estimates one from the first sweeps.
    pub omega: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_sweeps: 100_000, omega: None }
    }
}

#[derive(Clone, Debug)]
pub struct Solution<const D: usize> {
    pub map: VertexMap<D>,
    pub sweeps: usize,
    /// Largest vertex move per accepted sweep.
    pub moves: Vec<f64>,
    /// Energy after each accepted sweep.
    pub energies: Vec<f64>,
    pub omega: f64,
    /// Sweeps whose energy went up and were redone with a smaller factor.
    pub rejected_sweeps: usize,
}

/// Sweeps used to estimate the Gauss-Seidel contraction before relaxing.
const PROBE_SWEEPS: usize = 12;
/// Accepted sweeps between re-estimates of the relaxation factor.
const TUNE_SWEEPS: usize = 30;
const OMEGA_MAX: f64 = 1.99;
const ENERGY_SLACK: f64 = 1e-12;

/// Update `h(v)` towards `exp_{h(v)}(ω Σ w log h(u) / Σ w)`; the fixed
/// points are exactly the discretely harmonic maps. Returns the move length.
fn relax_vertex<const D: usize>(mesh: &DiskMesh, values: &mut [SpdPoint<D>], v: usize, omega: f64) -> f64 {
    let h = values[v];
    let mut x = Mat::<D>::zeros();
    let mut total = 0.0;
    for &(u, w) in mesh.neighbors(v) {
        x += h.log_frame(&values[u]) * w;
        total += w;
    }
    x *= omega / total;
    values[v] = h.exp_frame(&x);
    KAPPA * frobenius(&x)
}

fn sweep<const D: usize>(mesh: &DiskMesh, values: &mut [SpdPoint<D>], omega: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for class in mesh.color_classes() {
        for &v in class {
            worst = worst.max(relax_vertex(mesh, values, v, omega));
        }
    }
    worst
}

/// Discrete Dirichlet problem: boundary vertices keep the values of
/// `boundary`, interior vertices start from `init`.
///
/// With `omega: None` the solver runs plain Gauss-Seidel sweeps, estimates
/// their contraction `ρ` from the moves and switches to `ω = 2/(1+√(1-ρ))`.
/// Early sweeps contract faster than the asymptotic rate, so the factor is
/// re-estimated as the run goes on. A sweep that raises the energy is undone
/// and the factor pulled towards one (and capped there), so the accepted
/// energies never increase.
pub fn solve_dirichlet<const D: usize>(
    mesh: &DiskMesh,
    boundary: &VertexMap<D>,
    init: &VertexMap<D>,
    opts: &SolverOptions,
) -> Result<Solution<D>> {
    if boundary.values.len() != mesh.len() || init.values.len() != mesh.len() {
        return Err(domain("vertex maps must cover the mesh"));
    }
    let mut values: Vec<SpdPoint<D>> =
        (0..mesh.len()).map(|v| if mesh.boundary[v] { boundary.values[v] } else { init.values[v] }).collect();
    let mut energy = energy_of(mesh, &values);
    let mut omega = opts.omega.unwrap_or(1.0);
    let mut moves = Vec::new();
    let mut energies = Vec::new();
    let mut rejected = 0;
    let mut backup = values.clone();
    let mut sweeps = 0;
    let mut cap = OMEGA_MAX;
    let mut tuned_at = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        backup.copy_from_slice(&values);
        let mv = sweep(mesh, &mut values, omega);
        let e = energy_of(mesh, &values);
        if e > energy * (1.0 + ENERGY_SLACK) + f64::MIN_POSITIVE && omega > 1.0 {
            values.copy_from_slice(&backup);
            omega = 1.0 + 0.5 * (omega - 1.0);
            if omega < 1.01 {
                omega = 1.0;
            }
            cap = omega;
            tuned_at = moves.len();
            rejected += 1;
            continue;
        }
        energy = e;
        moves.push(mv);
        energies.push(e);
        if mv <= opts.tol {
            return Ok(Solution {
                map: VertexMap { values },
                sweeps,
                moves,
                energies,
                omega,
                rejected_sweeps: rejected,
            });
        }
        if opts.omega.is_none() && moves.len() == PROBE_SWEEPS && omega == 1.0 {
            let k = PROBE_SWEEPS / 2;
            let rho = (moves[PROBE_SWEEPS - 1] / moves[PROBE_SWEEPS - 1 - k]).powf(1.0 / k as f64);
            if rho < 1.0 {
                omega = (2.0 / (1.0 + (1.0 - rho).sqrt())).min(cap);
                tuned_at = moves.len();
            }
        } else if opts.omega.is_none() && omega > 1.0 && moves.len() >= tuned_at + TUNE_SWEEPS {
            // Past the optimum the contraction is exactly ω - 1. Below it,
            // Young's relation (λ + ω - 1)² = λω²μ² recovers the Jacobi
            // radius μ from the observed contraction λ.
            let n = moves.len();
            let k = TUNE_SWEEPS / 2;
            let lambda = (moves[n - 1] / moves[n - 1 - k]).powf(1.0 / k as f64);
            tuned_at = n;
            if lambda < 1.0 && lambda > omega - 1.0 + 0.01 {
                let mu2 = (lambda + omega - 1.0).powi(2) / (lambda * omega * omega);
                if mu2 < 1.0 {
                    omega = (2.0 / (1.0 + (1.0 - mu2).sqrt())).min(cap).max(omega);
                }
            }
        }
    }
    Err(Error::Stalled { sweeps, history: moves })
}

/// `energies` errors if any accepted sweep raised the energy.
pub fn check_energy_monotone(energies: &[f64]) -> Result<()> {
    for (k, w) in energies.windows(2).enumerate() {
        if w[1] > w[0] * (1.0 + ENERGY_SLACK) + f64::MIN_POSITIVE {
            return Err(domain(alloc::format!("energy rose at sweep {}: {:e} -> {:e}", k + 2, w[0], w[1])));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadiusReport {
    pub radius: f64,
    pub vertices: usize,
    pub sweeps: usize,
    pub omega: f64,
    pub energy: f64,
    pub clamped_weights: usize,
    pub mollify: MollifyReport,
    /// `sup d(h_R, f)` over the disk of radius `R - 2`.
    pub interior_sup: f64,
    /// `sup d(h_R, h_prev)` over the disk of radius `R_prev - 2`, from the
    /// second radius on.
    pub successive_sup: Option<f64>,
}

/// Solves on `B(center, R)` for each `R`, with boundary values `f⁽¹⁾` and the
/// interior started from `f⁽¹⁾`. Consecutive meshes share their inner rings
/// when the radii are multiples of `delta`.
pub fn exhaust<const D: usize>(
    e: &EmbeddingHandle<D>,
    center: &HypPoint,
    radii: &[f64],
    delta: f64,
    mollify_pairs: usize,
    opts: &SolverOptions,
) -> Result<Vec<RadiusReport>> {
    exhaust_with(e, center, radii, delta, mollify_pairs, opts, |_, _, _| Ok(()))
}

/// [`exhaust`], handing each mesh, its boundary data `f⁽¹⁾` and the solution
/// to `visit` before moving on.
pub fn exhaust_with<const D: usize>(
    e: &EmbeddingHandle<D>,
    center: &HypPoint,
    radii: &[f64],
    delta: f64,
    mollify_pairs: usize,
    opts: &SolverOptions,
    mut visit: impl FnMut(&DiskMesh, &VertexMap<D>, &Solution<D>) -> Result<()>,
) -> Result<Vec<RadiusReport>> {
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii.is_empty() {
        return Err(domain("radii must be nonempty and increasing"));
    }
    let f = |z: &HypPoint| e.evaluate(z);
    let mut out = Vec::new();
    let mut prev: Option<(DiskMesh, VertexMap<D>)> = None;
    for &r in radii {
        let mesh = build_mesh(center, r, delta)?;
        let (moll, mreport) = mollify(f, &mesh, 1.0, mollify_pairs)?;
        let sol = solve_dirichlet(&mesh, &moll, &moll, opts)?;
        visit(&mesh, &moll, &sol)?;
        let raw = VertexMap::from_fn(&mesh, f)?;
        let interior_sup = sol.map.sup_distance(&raw, mesh.within((r - 2.0).max(0.0)));
        let successive_sup = match &prev {
            Some((pm, ph)) => {
                let mut sup: f64 = 0.0;
                for v in pm.within((pm.radius - 2.0).max(0.0)) {
                    if hyp_distance(&pm.vertices[v], &mesh.vertices[v]) > 1e-9 {
                        return Err(domain("meshes do not share their inner rings"));
                    }
                    sup = sup.max(distance(&ph.values[v], &sol.map.values[v]));
                }
                Some(sup)
            }
            None => None,
        };
        out.push(RadiusReport {
            radius: r,
            vertices: mesh.len(),
            sweeps: sol.sweeps,
            omega: sol.omega,
            energy: *sol.energies.last().unwrap_or(&0.0),
            clamped_weights: mesh.clamped,
            mollify: mreport,
            interior_sup,
            successive_sup,
        });
        prev = Some((mesh, sol.map));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    /// `min (Δ(d_y∘h)² - 4e)` over interior vertices.
    pub ks_defect_min: f64,
    /// `min Δ(d_y∘h)` over interior vertices.
    pub subharmonic_min: f64,
    pub max_gradient: f64,
    /// `sup |∇h| / √(d_y(h(center)))`.
    pub harnack_ratio: f64,
    pub quad_checked: usize,
    pub quad_violations: usize,
    /// Largest `(F - D + F' - D') - 2EE'/D`.
    pub quad_worst_excess: f64,
}

/// Pointwise inequalities for a solved `h`, and the quadrilateral bound on
/// `(f(x), f(z), h(x), h(z))` for the given vertex pairs.
pub fn diagnostics<const D: usize>(
    h: &VertexMap<D>,
    mesh: &DiskMesh,
    f: &VertexMap<D>,
    y: &SpdPoint<D>,
    pairs: &[(usize, usize)],
) -> Diagnostics {
    let dy: Vec<f64> = h.values.iter().map(|p| distance(y, p)).collect();
    let mut out = Diagnostics {
        ks_defect_min: f64::INFINITY,
        subharmonic_min: f64::INFINITY,
        max_gradient: 0.0,
        harnack_ratio: 0.0,
        quad_checked: 0,
        quad_violations: 0,
        quad_worst_excess: f64::NEG_INFINITY,
    };
    for v in 0..mesh.len() {
        let area = mesh.vertex_area[v];
        let mut lap_sq = 0.0;
        let mut lap = 0.0;
        let mut stretch = 0.0;
        for &(u, w) in mesh.neighbors(v) {
            lap_sq += w * (dy[u] * dy[u] - dy[v] * dy[v]);
            lap += w * (dy[u] - dy[v]);
            stretch += w * distance(&h.values[u], &h.values[v]).powi(2);
        }
        // Σ w d² counts each edge from both ends, so it is 2|∇h|²·area.
        out.max_gradient = out.max_gradient.max((stretch / (2.0 * area)).sqrt());
        if !mesh.boundary[v] {
            out.ks_defect_min = out.ks_defect_min.min((lap_sq - stretch) / area);
            out.subharmonic_min = out.subharmonic_min.min(lap / area);
        }
    }
    out.harnack_ratio = out.max_gradient / dy[0].sqrt();
    for &(x, z) in pairs {
        if let Ok((lhs, rhs)) = quad_cr_bound_check(&[f.values[x], f.values[z], h.values[x], h.values[z]]) {
            out.quad_checked += 1;
            let excess = lhs - rhs;
            out.quad_worst_excess = out.quad_worst_excess.max(excess);
            if excess > 1e-9 {
                out.quad_violations += 1;
            }
        }
    }
    out
}
