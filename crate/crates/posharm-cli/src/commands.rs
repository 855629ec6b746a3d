//! Subcommand bodies, generic over the dimension.

use posharm::curves::{self, build_curve, PiecewiseMonotone, PositiveCurve, QsGrid};
use posharm::embedding::{sample_pairs, EmbeddingHandle, Section};
use posharm::flags;
use posharm::harmonic::{self, build_mesh, DiskMesh, SolverOptions, VertexMap};
use posharm::hyp2::{hyp_distance, ExtReal, HypPoint, Mobius};
use posharm::linalg::{Mat, Vector};
use posharm::spd::{self, CartanVector, IdealPoint, SpdPoint, KAPPA};
use posharm::stability::{self, CertifyOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigError, RunConfig, SectionName};
use crate::curve_file::CurveFile;
use crate::report::{Outcome, Table};
use crate::{row, Command, CurveAction, EmbedAction, GeometryAction, HarmonicAction, StabilityAction};

/// Window half-width used when neither the config nor a curve file sets one.
const DEFAULT_WINDOW: f64 = 32.0;

pub enum Failure {
    Config(ConfigError),
    Numerical(posharm::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<posharm::Error> for Failure {
    fn from(e: posharm::Error) -> Self {
        Failure::Numerical(e)
    }
}

type Out = Result<Outcome, Failure>;

pub fn execute(command: &Command, cfg: &RunConfig) -> Out {
    match cfg.d {
        2 => Runner::<2>::new(cfg).run(command),
        3 => Runner::<3>::new(cfg).run(command),
        4 => Runner::<4>::new(cfg).run(command),
        5 => Runner::<5>::new(cfg).run(command),
        6 => Runner::<6>::new(cfg).run(command),
        d => Err(ConfigError { path: "d".into(), message: format!("must lie in 2..=6, got {d}") }.into()),
    }
}

fn matrix_cells<const D: usize>(m: &Mat<D>) -> Vec<String> {
    (0..D).flat_map(|i| (0..D).map(move |j| (i, j))).map(|(i, j)| format!("{:?}", m[(i, j)])).collect()
}

fn matrix_header<const D: usize>(prefix: &str) -> Vec<String> {
    (0..D).flat_map(|i| (0..D).map(move |j| format!("{prefix}{}{}", i + 1, j + 1))).collect()
}

fn rows_of<const D: usize>(m: &Mat<D>) -> Vec<Vec<f64>> {
    (0..D).map(|i| (0..D).map(|j| m[(i, j)]).collect()).collect()
}

fn ideal_json<const D: usize>(eta: &IdealPoint<D>) -> serde_json::Value {
    json!({ "type": eta.type_vec().as_vector().iter().collect::<Vec<_>>(), "frame": rows_of(eta.frame()) })
}

#[derive(Serialize)]
struct Suite {
    checked: usize,
    violations: usize,
    worst_excess: f64,
}

impl Suite {
    fn new() -> Self {
        Self { checked: 0, violations: 0, worst_excess: f64::NEG_INFINITY }
    }

    fn record(&mut self, lhs: f64, rhs: f64, tol: f64) {
        self.checked += 1;
        self.worst_excess = self.worst_excess.max(lhs - rhs);
        if lhs - rhs > tol {
            self.violations += 1;
        }
    }
}

struct Runner<'a, const D: usize> {
    cfg: &'a RunConfig,
    rng: ChaCha8Rng,
}

impl<'a, const D: usize> Runner<'a, D> {
    fn new(cfg: &'a RunConfig) -> Self {
        Self { cfg, rng: ChaCha8Rng::seed_from_u64(cfg.seed) }
    }

    fn run(&mut self, command: &Command) -> Out {
        match *command {
            Command::Geometry { action: GeometryAction::Selftest } => self.selftest(),
            Command::Curve { action: CurveAction::Build } => self.curve_build(),
            Command::Curve { action: CurveAction::CheckQs } => self.check_qs(),
            Command::Curve { action: CurveAction::CountNontransverse } => self.count_nontransverse(),
            Command::Embed { action: EmbedAction::Run } => self.embed_run(),
            Command::Embed { action: EmbedAction::Constants } => self.embed_constants(),
            Command::Embed { action: EmbedAction::Morse } => self.embed_morse(),
            Command::Harmonic { action: HarmonicAction::Solve } => self.harmonic_solve(),
            Command::Harmonic { action: HarmonicAction::Exhaust } => self.harmonic_exhaust(),
            Command::Harmonic { action: HarmonicAction::Diagnostics } => self.harmonic_diagnostics(),
            Command::Stability { action: StabilityAction::Certify } => self.certify(),
            Command::Stability { action: StabilityAction::Drift } => self.drift(),
        }
    }

    fn center(&self) -> Result<HypPoint, Failure> {
        Ok(HypPoint::new(self.cfg.center[0], self.cfg.center[1])?)
    }

    fn maps(&self) -> Result<(Vec<PiecewiseMonotone>, (f64, f64)), Failure> {
        let file = match &self.cfg.curve {
            Some(p) => CurveFile::load(p)?,
            None => CurveFile::identity(D, self.cfg.window.unwrap_or(DEFAULT_WINDOW)),
        };
        let maps = file.maps(D)?;
        let window = match self.cfg.window {
            Some(t) => (-t, t),
            None => (file.window[0], file.window[1]),
        };
        Ok((maps, window))
    }

    fn curve(&self) -> Result<PositiveCurve<D>, Failure> {
        let (maps, window) = self.maps()?;
        Ok(build_curve::<D>(&maps, window)?)
    }

    fn embedding(&self) -> Result<EmbeddingHandle<D>, Failure> {
        let section = match self.cfg.section {
            SectionName::Standard => Section::Standard,
            SectionName::Symmetric => Section::Symmetric,
        };
        Ok(EmbeddingHandle::new(self.curve()?, section))
    }

    fn solver_options(&self) -> SolverOptions {
        SolverOptions { tol: self.cfg.tolerances.solver, max_sweeps: self.cfg.tolerances.max_sweeps, omega: None }
    }

    fn ideal_points(&mut self) -> Result<Vec<IdealPoint<D>>, Failure> {
        Ok(stability::sample_ideal_points::<D, _>(&mut self.rng, self.cfg.quadrature.ideal_samples)?)
    }

    fn certify_options(&self) -> CertifyOptions {
        CertifyOptions { n: self.cfg.quadrature.circle_n, refine: self.cfg.quadrature.refine, m_hat: self.cfg.m_hat }
    }

    /// Type with every simple root at least a quarter of its largest
    /// possible share, where the truncated Busemann limit converges fast.
    fn regular_ideal(&mut self) -> Result<IdealPoint<D>, Failure> {
        let best = 2.0_f64.sqrt() * (12.0 / (D * (D * D - 1)) as f64).sqrt();
        loop {
            let v = Vector::<D>::from_fn(|_, _| StandardNormal.sample(&mut self.rng));
            let u = CartanVector::project(&v);
            let n = u.norm();
            let even = (1..D).map(|i| u.alpha(i)).fold(f64::INFINITY, f64::min) / n;
            if even >= 0.25 * best {
                let k = spd::random_orthogonal::<D, _>(&mut self.rng);
                return Ok(IdealPoint::from_direction(&k, u.as_vector())?);
            }
        }
    }

    fn selftest(&mut self) -> Out {
        let n = self.cfg.quadrature.selftest_samples;
        let tol = &self.cfg.tolerances;
        let ip = |x: &Mat<D>, y: &Mat<D>| KAPPA * KAPPA * x.component_mul(y).sum();

        // Random tangent planes, then one root plane, which is the most
        // negatively curved.
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let planes = n.min(200);
        for _ in 0..planes {
            let x = spd::random_unit_tangent::<D, _>(&mut self.rng);
            let y = spd::random_unit_tangent::<D, _>(&mut self.rng);
            let y = y - x * ip(&x, &y);
            let y = y / ip(&y, &y).sqrt();
            let k = spd::comparison_curvature(&x, &y, 0.05);
            lo = lo.min(k);
            hi = hi.max(k);
        }
        let mut h = Mat::<D>::zeros();
        h[(0, 0)] = 1.0;
        h[(1, 1)] = -1.0;
        let mut s = Mat::<D>::zeros();
        s[(0, 1)] = 1.0;
        s[(1, 0)] = 1.0;
        let root_plane = spd::comparison_curvature(&h, &s, 0.05);

        let mut ptolemy = Suite::new();
        let mut quad = Suite::new();
        let mut samples = Table::new("inequalities", ["sample", "ptolemy_lhs", "ptolemy_rhs", "quad_lhs", "quad_rhs"]);
        for i in 0..n {
            let q: [SpdPoint<D>; 4] = core::array::from_fn(|_| spd::random_point(&mut self.rng, 3.0));
            let (pl, pr) = spd::ptolemy_check(&q);
            ptolemy.record(pl, pr, tol.inequality);
            let (ql, qr) = match spd::quad_cr_bound_check(&q) {
                Ok((l, r)) => {
                    quad.record(l, r, tol.inequality);
                    (l, r)
                }
                Err(_) => (f64::NAN, f64::NAN),
            };
            samples.push(row![i, pl, pr, ql, qr]);
        }

        let mut sep_table = Table::new("separation", ["d", "separation", "expected"]);
        let mut table = Vec::new();
        for k in 2..=6usize {
            let v = spd::separation(k, &(1..k).collect::<Vec<_>>())?;
            sep_table.push(row![k, v, 1.0 / (k - 1) as f64]);
            table.push(json!({ "d": k, "separation": v, "expected": 1.0 / (k - 1) as f64 }));
        }
        let separation = spd::separation(D, &(1..D).collect::<Vec<_>>())?;

        let pairs = n.min(1000);
        let mut worst: f64 = 0.0;
        for _ in 0..pairs {
            let eta = self.regular_ideal()?;
            let p = spd::random_point::<D, _>(&mut self.rng, 2.0);
            let exact = spd::busemann(&eta, &p);
            let limit = spd::busemann_truncated(&eta, &p, tol.busemann_horizon);
            worst = worst.max((exact - limit).abs());
        }

        Ok(Outcome::new(json!({
            "d": D,
            "curvature": { "planes": planes, "min": lo, "max": hi, "root_plane": root_plane },
            "ptolemy": ptolemy,
            "quadrilateral": quad,
            "separation": separation,
            "separation_table": table,
            "busemann": { "pairs": pairs, "max_difference": worst, "within_tolerance": worst <= tol.busemann },
        }))
        .table(sep_table)
        .table(samples))
    }

    fn curve_build(&mut self) -> Out {
        let curve = self.curve()?;
        let (lo, hi) = curve.window();
        let n = self.cfg.quadrature.curve_samples;
        let mut header = ["t", "step_margin"].map(String::from).to_vec();
        header.extend(matrix_header::<D>("n"));
        let mut table = Table::new("samples", &header);
        let mut min_margin = f64::INFINITY;
        let mut prev = lo;
        for k in 0..n {
            let t = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            let u = curve.from_start(t)?;
            let margin = if k == 0 {
                f64::NAN
            } else {
                let (_, rep) = flags::totally_positive(&curve.between(prev, t))?;
                min_margin = min_margin.min(rep.margin);
                rep.margin
            };
            let mut r = row![t, margin];
            r.extend(matrix_cells(u.as_matrix()));
            table.push(r);
            prev = t;
        }
        // n_{i,i+1}(t) against φᵢ(t) - φᵢ(t₀) at the knots.
        let mut superdiagonal: f64 = 0.0;
        for &t in curve.knots() {
            let u = curve.from_start(t)?;
            for i in 0..D - 1 {
                let want = curve.phi(i, t) - curve.phi(i, lo);
                superdiagonal = superdiagonal.max((u.superdiagonal(i + 1) - want).abs() / want.abs().max(1.0));
            }
        }
        let file = CurveFile::from_curve(&curve);
        let mut out = Outcome::new(json!({
            "d": D,
            "window": [lo, hi],
            "knots": curve.knots().len(),
            "zero_slope_intervals": curve.zero_slope_intervals(),
            "min_step_margin": min_margin,
            "positive": min_margin > 0.0 && curve.zero_slope_intervals() == 0,
            "superdiagonal_error": superdiagonal,
        }))
        .table(table);
        out.files.push(("curve.json".into(), serde_json::to_value(file).expect("curve serializes")));
        Ok(out)
    }

    fn check_qs(&mut self) -> Out {
        let (maps, window) = self.maps()?;
        let curve = build_curve::<D>(&maps, window)?;
        let reach = 0.25 * window.0.abs().min(window.1);
        let m = self.cfg.quadrature.qs_grid;
        let grid = QsGrid { x_min: -reach, x_max: reach, nx: m, t_min: 1e-2, t_max: reach, nt: m };
        let mut table = Table::new("maps", ["map", "qs_constant"]);
        let mut constants = Vec::new();
        for (i, phi) in maps.iter().enumerate() {
            let k = curves::qs_constant(phi, &grid);
            table.push(row![i + 1, k]);
            constants.push(k);
        }
        let extra = [Mobius::new(0.0, 1.0, -1.0, 0.0)?, Mobius::new(1.0, -1.0, 1.0, 1.0)?];
        let (k, used, skipped) = curves::curve_qs_constant(&curve, &grid, &extra);
        Ok(Outcome::new(json!({
            "d": D,
            "grid": { "x": [-reach, reach], "t": [1e-2, reach], "points": m * m },
            "map_constants": constants,
            "curve_constant": k,
            "quadruples_used": used,
            "quadruples_skipped": skipped,
        }))
        .table(table))
    }

    fn count_nontransverse(&mut self) -> Out {
        let curve = self.curve()?;
        let q = &self.cfg.quadrature;
        let mut table = Table::new("counts", ["trial", "k", "count", "bound", "roots"]);
        let mut per_k = Vec::new();
        let mut worst = vec![0usize; D];
        let mut exceeded = vec![0usize; D];
        for trial in 0..q.subspaces {
            for k in 1..D {
                let v = Mat::<D>::from_fn(|_, _| StandardNormal.sample(&mut self.rng));
                let (count, roots) = curve.count_nontransverse(&v, k, q.curve_samples)?;
                let bound = k * (D - k);
                worst[k] = worst[k].max(count);
                if count > bound {
                    exceeded[k] += 1;
                }
                let roots: Vec<String> = roots.iter().map(|r| format!("{r:?}")).collect();
                table.push(row![trial, k, count, bound, roots.join(";")]);
            }
        }
        for k in 1..D {
            per_k.push(json!({ "k": k, "max_count": worst[k], "bound": k * (D - k), "exceeded": exceeded[k] }));
        }
        Ok(Outcome::new(json!({
            "d": D,
            "subspaces": q.subspaces,
            "samples": q.curve_samples,
            "per_k": per_k,
            "bound_is_empirical": true,
        }))
        .table(table))
    }

    fn mesh(&self) -> Result<DiskMesh, Failure> {
        Ok(build_mesh(&self.center()?, self.cfg.radius, self.cfg.delta)?)
    }

    fn embed_run(&mut self) -> Out {
        let e = self.embedding()?;
        let mesh = self.mesh()?;
        let f = VertexMap::from_fn(&mesh, |z| e.evaluate(z))?;
        let mut header = ["vertex", "x", "y", "ring", "boundary"].map(String::from).to_vec();
        header.extend(matrix_header::<D>("m"));
        let mut table = Table::new("values", &header);
        for (v, z) in mesh.vertices.iter().enumerate() {
            let mut r = row![v, z.x, z.y, mesh.ring[v], mesh.boundary[v]];
            r.extend(matrix_cells(&f.values[v].matrix()));
            table.push(r);
        }
        let mut stretch: f64 = 0.0;
        for &(i, j, _) in &mesh.edges {
            let ratio = spd::distance(&f.values[i], &f.values[j]) / hyp_distance(&mesh.vertices[i], &mesh.vertices[j]);
            stretch = stretch.max(ratio);
        }
        let spread = f.values.iter().map(|p| spd::distance(&f.values[0], p)).fold(0.0, f64::max);
        Ok(Outcome::new(json!({
            "d": D,
            "vertices": mesh.len(),
            "radius": mesh.radius,
            "delta": mesh.delta,
            "max_edge_stretch": stretch,
            "max_distance_from_center_value": spread,
        }))
        .table(table))
    }

    fn embed_constants(&mut self) -> Out {
        let e = self.embedding()?;
        let center = self.center()?;
        let pairs = sample_pairs(&mut self.rng, &center, self.cfg.radius, self.cfg.quadrature.constant_pairs);
        let c = e.estimate_constants(&pairs)?;
        let mut table = Table::new("pairs", ["x1", "y1", "x2", "y2", "d_domain", "d_target"]);
        for (a, b) in &pairs {
            let dy = match (e.evaluate(a), e.evaluate(b)) {
                (Ok(p), Ok(q)) => spd::distance(&p, &q),
                _ => f64::NAN,
            };
            table.push(row![a.x, a.y, b.x, b.y, hyp_distance(a, b), dy]);
        }
        Ok(Outcome::new(json!({
            "d": D,
            "l_hat": c.l_hat,
            "m_hat": c.m_hat,
            "pairs_used": c.pairs_used,
            "pairs_skipped": c.pairs_skipped,
        }))
        .table(table))
    }

    fn embed_morse(&mut self) -> Out {
        let e = self.embedding()?;
        let (lo, hi) = e.curve().window();
        let reach = 0.25 * lo.abs().min(hi);
        let q = &self.cfg.quadrature;
        let mut table = Table::new("geodesics", ["a", "b", "defect"]);
        let mut worst: f64 = 0.0;
        for g in 0..q.morse_geodesics {
            let (a, b) = if g == 0 {
                (ExtReal::Finite(0.0), ExtReal::Infinity)
            } else {
                let s: f64 = self.rng.random_range(-reach..reach);
                let t: f64 = self.rng.random_range(-reach..reach);
                (ExtReal::Finite(s.min(t)), ExtReal::Finite(s.max(t)))
            };
            let defect = e.morse_defect(a, b, self.cfg.radius, q.morse_samples)?;
            worst = worst.max(defect);
            let cell = |t: ExtReal| t.finite().map_or_else(|| "inf".to_string(), |v| format!("{v:?}"));
            table.push(row![cell(a), cell(b), defect]);
        }
        Ok(Outcome::new(json!({
            "d": D,
            "geodesics": q.morse_geodesics,
            "half_length": self.cfg.radius,
            "samples": q.morse_samples,
            "max_defect": worst,
        }))
        .table(table))
    }

    fn solve(
        &self,
        e: &EmbeddingHandle<D>,
        mesh: &DiskMesh,
    ) -> Result<(VertexMap<D>, harmonic::MollifyReport, harmonic::Solution<D>), Failure> {
        let (moll, mrep) = harmonic::mollify(|z| e.evaluate(z), mesh, 1.0, self.cfg.quadrature.mollify_pairs)?;
        let sol = harmonic::solve_dirichlet(mesh, &moll, &moll, &self.solver_options())?;
        Ok((moll, mrep, sol))
    }

    fn harmonic_solve(&mut self) -> Out {
        let e = self.embedding()?;
        let mesh = self.mesh()?;
        let (_, mrep, sol) = self.solve(&e, &mesh)?;
        let raw = VertexMap::from_fn(&mesh, |z| e.evaluate(z))?;
        let mut header = ["vertex", "x", "y", "boundary", "d_to_f"].map(String::from).to_vec();
        header.extend(matrix_header::<D>("h"));
        let mut table = Table::new("solution", &header);
        for (v, z) in mesh.vertices.iter().enumerate() {
            let mut r = row![v, z.x, z.y, mesh.boundary[v], spd::distance(&sol.map.values[v], &raw.values[v])];
            r.extend(matrix_cells(&sol.map.values[v].matrix()));
            table.push(r);
        }
        let mut sweeps = Table::new("sweeps", ["sweep", "max_move", "energy"]);
        for (k, (m, en)) in sol.moves.iter().zip(&sol.energies).enumerate() {
            sweeps.push(row![k + 1, *m, *en]);
        }
        Ok(Outcome::new(json!({
            "d": D,
            "vertices": mesh.len(),
            "clamped_weights": mesh.clamped,
            "sweeps": sol.sweeps,
            "rejected_sweeps": sol.rejected_sweeps,
            "omega": sol.omega,
            "energy": sol.energies.last(),
            "final_move": sol.moves.last(),
            "sup_distance_to_f": sol.map.sup_distance(&raw, 0..mesh.len()),
            "mollify": { "samples_per_vertex": mrep.samples_per_vertex, "sample_spread": mrep.sample_spread, "displacement": mrep.displacement },
        }))
        .table(table)
        .table(sweeps))
    }

    fn harmonic_exhaust(&mut self) -> Out {
        let e = self.embedding()?;
        let reports = harmonic::exhaust(
            &e,
            &self.center()?,
            &self.cfg.radii,
            self.cfg.delta,
            self.cfg.quadrature.mollify_pairs,
            &self.solver_options(),
        )?;
        let mut table = Table::new(
            "radii",
            [
                "radius",
                "vertices",
                "sweeps",
                "omega",
                "energy",
                "clamped",
                "displacement",
                "interior_sup",
                "successive_sup",
            ],
        );
        let mut list = Vec::new();
        for r in &reports {
            let succ = r.successive_sup.unwrap_or(f64::NAN);
            table.push(row![
                r.radius,
                r.vertices,
                r.sweeps,
                r.omega,
                r.energy,
                r.clamped_weights,
                r.mollify.displacement,
                r.interior_sup,
                succ
            ]);
            list.push(json!({
                "radius": r.radius,
                "vertices": r.vertices,
                "sweeps": r.sweeps,
                "omega": r.omega,
                "energy": r.energy,
                "clamped_weights": r.clamped_weights,
                "mollify_displacement": r.mollify.displacement,
                "interior_sup": r.interior_sup,
                "successive_sup": r.successive_sup,
            }));
        }
        let growth = match reports.as_slice() {
            [.., a, b] => Some(b.interior_sup / a.interior_sup - 1.0),
            _ => None,
        };
        Ok(Outcome::new(json!({ "d": D, "delta": self.cfg.delta, "radii": list, "last_growth": growth })).table(table))
    }

    fn harmonic_diagnostics(&mut self) -> Out {
        let e = self.embedding()?;
        let mesh = self.mesh()?;
        let (moll, _, sol) = self.solve(&e, &mesh)?;
        let tol = &self.cfg.tolerances;
        let monotone = harmonic::check_energy_monotone(&sol.energies).is_ok();
        let n = mesh.len();
        let pairs: Vec<(usize, usize)> = (0..self.cfg.quadrature.diagnostic_pairs)
            .map(|_| (self.rng.random_range(0..n), self.rng.random_range(0..n)))
            .collect();
        let y = spd::random_point::<D, _>(&mut self.rng, 2.0);
        let diag = harmonic::diagnostics(&sol.map, &mesh, &moll, &y, &pairs);

        // Maximum principle for d(y, h) at a few random points y.
        let mut table = Table::new("max_principle", ["probe", "interior_max", "boundary_max"]);
        let mut max_principle = true;
        for probe in 0..8 {
            let y = spd::random_point::<D, _>(&mut self.rng, 3.0);
            let (mut inner, mut outer): (f64, f64) = (0.0, 0.0);
            for v in 0..n {
                let d = spd::distance(&y, &sol.map.values[v]);
                if mesh.boundary[v] {
                    outer = outer.max(d);
                } else {
                    inner = inner.max(d);
                }
            }
            max_principle &= inner <= outer + tol.max_principle;
            table.push(row![probe, inner, outer]);
        }
        Ok(Outcome::new(json!({
            "d": D,
            "vertices": n,
            "sweeps": sol.sweeps,
            "energy_monotone": monotone,
            "ks_defect_min": diag.ks_defect_min,
            "subharmonic_min": diag.subharmonic_min,
            "subharmonic_ok": diag.subharmonic_min >= -tol.subharmonic,
            "max_gradient": diag.max_gradient,
            "harnack_ratio": diag.harnack_ratio,
            "max_principle": max_principle,
            "quadrilateral": {
                "checked": diag.quad_checked,
                "violations": diag.quad_violations,
                "worst_excess": diag.quad_worst_excess,
            },
        }))
        .table(table))
    }

    fn certify(&mut self) -> Out {
        let e = self.embedding()?;
        let x = self.center()?;
        let etas = self.ideal_points()?;
        let opts = self.certify_options();
        let f = |z: &HypPoint| e.evaluate(z);
        let report = stability::certify(f, &[x], self.cfg.radius, &etas, &opts, &mut self.rng)?;
        let profile = stability::stability_profile(f, &x, self.cfg.radius, &etas, opts.n)?;
        let mut header = ["x", "y", "r", "eta", "s", "error"].map(String::from).to_vec();
        header.extend((0..D).map(|i| format!("type{}", i + 1)));
        header.extend(matrix_header::<D>("k"));
        let mut table = Table::new("samples", &header);
        for (i, (eta, s)) in etas.iter().zip(&profile).enumerate() {
            let mut r = row![x.x, x.y, self.cfg.radius, i, s.value, s.error];
            r.extend(eta.type_vec().as_vector().iter().map(|v| format!("{v:?}")));
            r.extend(matrix_cells(eta.frame()));
            table.push(r);
        }
        let c = &report.centers[0];
        Ok(Outcome::new(json!({
            "d": D,
            "center": [x.x, x.y],
            "r": self.cfg.radius,
            "inf_s": report.inf_s,
            "inf_s_over_r": report.inf_s_over_r,
            "threshold": report.threshold,
            "pass": report.pass,
            "argmin": ideal_json(&c.argmin),
            "quad_error": c.quad_error,
            "ideal_samples": report.ideal_samples,
            "circle_points": report.circle_points,
        }))
        .table(table))
    }

    fn drift(&mut self) -> Out {
        let e = self.embedding()?;
        let x = self.center()?;
        let etas = self.ideal_points()?;
        let opts = self.certify_options();
        let d = stability::drift_proxy(|z| e.evaluate(z), &[x], &self.cfg.radii, &etas, &opts, &mut self.rng)?;
        let mut table = Table::new("drift", ["r", "inf_s_over_r"]);
        for (r, q) in d.radii.iter().zip(&d.ratios) {
            table.push(row![*r, *q]);
        }
        Ok(Outcome::new(json!({
            "d": D,
            "center": [x.x, x.y],
            "radii": d.radii,
            "ratios": d.ratios,
            "reference": d.reference,
            "ideal_samples": etas.len() + opts.refine,
        }))
        .table(table))
    }
}
