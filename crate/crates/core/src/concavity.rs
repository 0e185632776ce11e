//! Certification of α-parabolic p-concavity.
//!
//! A nonnegative `u` on `Ω̄ × [0, T]` is α-parabolically p-concave when
//!
//! ```text
//! u((1-λ)x1 + λx2, M_α(t1, t2; λ)) ≥ M_p(u(x1, t1), u(x2, t2); λ)
//! ```
//!
//! for all `x1, x2 ∈ Ω̄`, `t1, t2`, `λ ∈ (0, 1)`. With `τ = t^α` the time
//! mean becomes the arithmetic mean of `τ`, so fields are interpolated
//! multilinearly in `(x, τ)` and every test below is a midpoint test in
//! those coordinates. The defect of a triple is `M_p(u1, u2; λ) - u(mid)`;
//! a check fails when the worst defect exceeds the tolerance.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::domain::{Domain, Point, SpaceGrid};
use crate::hull::upper_concave_envelope;
use crate::means::{mean2, mean_unchecked, Exponent, Weights};
use crate::sampling::Rd;
use crate::solver::{bracket, SourceSpec, SpaceTimeField};
use crate::{Error, Result};

/// Default constant in the certification tolerance.
pub const DEFAULT_C_TOL: f64 = 5.0;
/// λ values of the deterministic sweeps.
pub const LAMBDA_SWEEP: [f64; 3] = [0.25, 0.5, 0.75];
const LAMBDA_EDGE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// Parameters of a sampled check.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConcavityQuery {
    pub alpha: f64,
    pub p: Exponent,
    /// Number of quasi-random triples, on top of the deterministic sweeps.
    pub samples: usize,
    /// Absolute defect threshold; `None` uses [`default_tolerance`].
    pub tolerance: Option<f64>,
    pub c_tol: f64,
    pub seed: u64,
}

impl ConcavityQuery {
    pub fn new(alpha: f64, p: impl Into<Exponent>) -> Self {
        ConcavityQuery {
            alpha,
            p: p.into(),
            samples: 4000,
            tolerance: None,
            c_tol: DEFAULT_C_TOL,
            seed: 0,
        }
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = Some(tolerance);
        self
    }

    pub fn with_p(mut self, p: impl Into<Exponent>) -> Self {
        self.p = p.into();
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "α = {} must be a positive real",
                self.alpha
            )));
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0) {
                return Err(Error::InvalidArgument(format!("tolerance {t} must be positive")));
            }
        }
        if !(self.c_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "C_tol = {} must be positive",
                self.c_tol
            )));
        }
        Ok(())
    }
}

/// Two space-time points and a weight. `v` carries the third coordinate of
/// structure-function samples.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Triple {
    pub x1: Point,
    pub t1: f64,
    pub x2: Point,
    pub t2: f64,
    pub lambda: f64,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub v: Option<[f64; 2]>,
}

impl Triple {
    fn new(x1: Point, t1: f64, x2: Point, t2: f64, lambda: f64) -> Self {
        Triple {
            x1,
            t1,
            x2,
            t2,
            lambda,
            v: None,
        }
    }

    pub(crate) fn new_curve(t1: f64, t2: f64, lambda: f64) -> Self {
        Triple::new([0.0; 2], t1, [0.0; 2], t2, lambda)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConcavityReport {
    pub verdict: Verdict,
    pub worst_defect: f64,
    pub worst: Option<Triple>,
    pub samples: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub p: Exponent,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub alpha: Option<f64>,
}

/// Folds per-sample defects into a report.
pub(crate) fn build_report(
    triples: &[Triple],
    defects: &[f64],
    tolerance: f64,
    seed: u64,
    p: Exponent,
    alpha: Option<f64>,
) -> Result<ConcavityReport> {
    if triples.is_empty() {
        return Err(Error::EmptySample);
    }
    let (i, &worst) = defects
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    Ok(ConcavityReport {
        verdict: if worst > tolerance {
            Verdict::Fail
        } else {
            Verdict::Pass
        },
        worst_defect: worst,
        worst: Some(triples[i].clone()),
        samples: triples.len(),
        tolerance,
        seed,
        p,
        alpha,
    })
}

/// `C_tol · (h² + dt^{min(1, 2α)}) · max u`.
pub fn default_tolerance(u: &SpaceTimeField, alpha: f64, c_tol: f64) -> f64 {
    let h = u.grid().spacing();
    let dt = u.meta().dt;
    let dt_term = if dt > 0.0 { dt.powf((2.0 * alpha).min(1.0)) } else { 0.0 };
    c_tol * (h * h + dt_term) * u.max_value()
}

/// `u` in the coordinates `(x, τ = t^α)`.
struct Transformed<'a> {
    u: &'a SpaceTimeField,
    taus: Vec<f64>,
    alpha: f64,
}

impl<'a> Transformed<'a> {
    fn new(u: &'a SpaceTimeField, alpha: f64) -> Self {
        Transformed {
            u,
            taus: u.times().iter().map(|t| t.powf(alpha)).collect(),
            alpha,
        }
    }

    fn tau_max(&self) -> f64 {
        *self.taus.last().expect("nonempty")
    }

    fn at(&self, x: Point, tau: f64) -> Result<f64> {
        let st = self.u.grid().stencil(x)?;
        let (k, s) = bracket(&self.taus, tau)
            .ok_or_else(|| Error::OutsideCylinder(format!("τ = {tau} outside [0, {}]", self.tau_max())))?;
        let lo = st.apply(self.u.slice(k));
        Ok(if s == 0.0 {
            lo
        } else {
            (1.0 - s) * lo + s * st.apply(self.u.slice(k + 1))
        })
    }

    fn defect(&self, tr: &Triple, p: Exponent) -> Result<f64> {
        let (tau1, tau2) = (tr.t1.powf(self.alpha), tr.t2.powf(self.alpha));
        let l = tr.lambda;
        let u1 = self.at(tr.x1, tau1)?;
        let u2 = self.at(tr.x2, tau2)?;
        let xm = [(1.0 - l) * tr.x1[0] + l * tr.x2[0], (1.0 - l) * tr.x1[1] + l * tr.x2[1]];
        let um = self.at(xm, (1.0 - l) * tau1 + l * tau2)?;
        Ok(mean2(u1, u2, l, p) - um)
    }
}

fn lerp(a: Point, b: Point, s: f64) -> Point {
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

fn geometric(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 || hi <= lo {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp().clamp(lo, hi))
        .collect()
}

/// Up to `count` node indices spread evenly over `nodes`.
fn spread(nodes: &[usize], count: usize) -> Vec<usize> {
    if nodes.len() <= count {
        return nodes.to_vec();
    }
    (0..count)
        .map(|k| nodes[k * (nodes.len() - 1) / (count - 1).max(1)])
        .collect()
}

/// Draws a point uniformly from `Ω` by rejection from its bounding box.
fn draw_point(domain: &Domain, lo: Point, hi: Point, r: &[f64]) -> Option<Point> {
    let x = [lo[0] + r[0] * (hi[0] - lo[0]), lo[1] + r[1] * (hi[1] - lo[1])];
    domain.contains_point(x).then_some(x)
}

/// Quasi-random triples in `Ω × [t_min, T]` plus deterministic sweeps along
/// the time axis, the space axis and fans leaving boundary corners of the
/// cylinder.
pub fn sample_triples(u: &SpaceTimeField, q: &ConcavityQuery, t_min: f64) -> Result<Vec<Triple>> {
    q.validate()?;
    let grid = u.grid();
    let domain = grid.domain();
    let t_end = u.t_end();
    let dt = u.meta().dt;
    if t_min < 2.0 * dt * (1.0 - 1e-9) || !(t_min < t_end) {
        return Err(Error::InvalidArgument(format!(
            "t_min = {t_min} must lie in [2·dt, T) = [{}, {t_end})",
            2.0 * dt
        )));
    }
    let alpha = q.alpha;
    let (tau_lo, tau_hi) = (t_min.powf(alpha), t_end.powf(alpha));
    let from_tau = |tau: f64| tau.powf(1.0 / alpha).clamp(t_min, t_end);
    let dim = grid.dim();
    let (lo, hi) = domain.bounding_box();
    let mut out = Vec::with_capacity(q.samples + 4096);

    // quasi-random triples
    let mut rd = Rd::new(2 * 2 + 3, q.seed);
    let mut r = [0.0; 7];
    let mut attempts = 0usize;
    while out.len() < q.samples {
        attempts += 1;
        if attempts > 100 * q.samples + 1000 {
            break;
        }
        rd.next_into(&mut r);
        let r1 = [r[0], if dim == 2 { r[1] } else { 0.0 }];
        let r2 = [r[2], if dim == 2 { r[3] } else { 0.0 }];
        let (Some(x1), Some(x2)) = (draw_point(domain, lo, hi, &r1), draw_point(domain, lo, hi, &r2)) else {
            continue;
        };
        let t1 = from_tau(tau_lo + r[4] * (tau_hi - tau_lo));
        let t2 = from_tau(tau_lo + r[5] * (tau_hi - tau_lo));
        let l = LAMBDA_EDGE + r[6] * (1.0 - 2.0 * LAMBDA_EDGE);
        out.push(Triple::new(x1, t1, x2, t2, l));
    }

    let interior = grid.unknowns();
    let times = geometric(t_min, t_end, 8);

    // time axis
    for &n in &spread(interior, 16) {
        let x = grid.coords()[n];
        for (i, &t1) in times.iter().enumerate() {
            for &t2 in &times[i + 1..] {
                for l in LAMBDA_SWEEP {
                    out.push(Triple::new(x, t1, x, t2, l));
                }
            }
        }
    }

    // space axis, including boundary nodes
    let closure: Vec<usize> = (0..grid.len())
        .filter(|&n| domain.in_closure(grid.coords()[n]))
        .collect();
    let nodes = spread(&closure, 12);
    for &t in &geometric(t_min, t_end, 6) {
        for (i, &a) in nodes.iter().enumerate() {
            for &b in &nodes[i + 1..] {
                for l in LAMBDA_SWEEP {
                    out.push(Triple::new(grid.coords()[a], t, grid.coords()[b], t, l));
                }
            }
        }
    }

    // fans from the parabolic corner: x1 = b + δν at t_min, x2 = b + ρν at t2
    let h = grid.spacing();
    let centre = domain.center();
    let fan_times = geometric(t_min, t_end, 10);
    for b in domain.boundary_points(if dim == 1 { 2 } else { 16 }) {
        let d = [centre[0] - b[0], centre[1] - b[1]];
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if !(len > 4.0 * h) {
            continue;
        }
        let nu = [d[0] / len, d[1] / len];
        for delta in [0.0, 4.0 * h] {
            let x1 = [b[0] + delta * nu[0], b[1] + delta * nu[1]];
            for rho in geometric(4.0 * h, 2.0 * len, 12) {
                let x2 = [b[0] + rho * nu[0], b[1] + rho * nu[1]];
                if rho <= delta || !domain.in_closure(x2) {
                    continue;
                }
                for &t2 in &fan_times[1..] {
                    for l in LAMBDA_SWEEP {
                        out.push(Triple::new(x1, t_min, x2, t2, l));
                    }
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(out)
}

/// Defect `M_p(u1, u2; λ) - u(mid)` of each triple.
pub fn triple_defects(u: &SpaceTimeField, alpha: f64, p: Exponent, triples: &[Triple]) -> Result<Vec<f64>> {
    let tf = Transformed::new(u, alpha);
    triples.iter().map(|tr| tf.defect(tr, p)).collect()
}

/// Sampled test of α-parabolic p-concavity on `Ω̄ × [t_min, T]`.
pub fn check_parabolic_concavity(u: &SpaceTimeField, q: &ConcavityQuery, t_min: f64) -> Result<ConcavityReport> {
    let triples = sample_triples(u, q, t_min)?;
    let defects = triple_defects(u, q.alpha, q.p, &triples)?;
    let tol = q.tolerance.unwrap_or_else(|| default_tolerance(u, q.alpha, q.c_tol));
    build_report(&triples, &defects, tol, q.seed, q.p, Some(q.alpha))
}

/// Midpoint test of p-concavity of one nodal function on `Ω̄`.
/// The default tolerance is `C_tol · h² · max w`.
pub fn check_slice_concavity(
    grid: &SpaceGrid,
    values: &[f64],
    p: Exponent,
    samples: usize,
    tolerance: Option<f64>,
    seed: u64,
) -> Result<ConcavityReport> {
    if values.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    let domain = grid.domain();
    let dim = grid.dim();
    let (lo, hi) = domain.bounding_box();
    let mut triples = Vec::with_capacity(samples + 1024);
    let mut rd = Rd::new(5, seed);
    let mut r = [0.0; 5];
    let mut attempts = 0usize;
    while triples.len() < samples && attempts < 100 * samples + 1000 {
        attempts += 1;
        rd.next_into(&mut r);
        let r1 = [r[0], if dim == 2 { r[1] } else { 0.0 }];
        let r2 = [r[2], if dim == 2 { r[3] } else { 0.0 }];
        if let (Some(x1), Some(x2)) = (draw_point(domain, lo, hi, &r1), draw_point(domain, lo, hi, &r2)) {
            triples.push(Triple::new(
                x1,
                0.0,
                x2,
                0.0,
                LAMBDA_EDGE + r[4] * (1.0 - 2.0 * LAMBDA_EDGE),
            ));
        }
    }
    let closure: Vec<usize> = (0..grid.len())
        .filter(|&n| domain.in_closure(grid.coords()[n]))
        .collect();
    let nodes = spread(&closure, 24);
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            for l in LAMBDA_SWEEP {
                triples.push(Triple::new(grid.coords()[a], 0.0, grid.coords()[b], 0.0, l));
            }
        }
    }
    if triples.is_empty() {
        return Err(Error::EmptySample);
    }
    let defects = triples
        .iter()
        .map(|tr| {
            let w1 = grid.interpolate(values, tr.x1)?;
            let w2 = grid.interpolate(values, tr.x2)?;
            let wm = grid.interpolate(values, lerp(tr.x1, tr.x2, tr.lambda))?;
            Ok(mean2(w1, w2, tr.lambda, p) - wm)
        })
        .collect::<Result<Vec<f64>>>()?;
    let h = grid.spacing();
    let max = values.iter().copied().fold(0.0, f64::max);
    let tol = tolerance.unwrap_or(DEFAULT_C_TOL * h * h * max);
    build_report(&triples, &defects, tol, seed, p, None)
}

/// Spatial p-concavity of the slice `u(·, t)`, interpolated linearly in `t`.
pub fn check_spatial_concavity(
    u: &SpaceTimeField,
    t: f64,
    p: Exponent,
    samples: usize,
    tolerance: Option<f64>,
    seed: u64,
) -> Result<ConcavityReport> {
    let slice = u.slice_at(t)?;
    let mut rep = check_slice_concavity(u.grid(), &slice, p, samples, tolerance, seed)?;
    if let Some(tr) = rep.worst.as_mut() {
        tr.t1 = t;
        tr.t2 = t;
    }
    Ok(rep)
}

/// Result of an envelope computation; `values` has the field's layout.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeResult {
    pub values: Vec<f64>,
    /// `max (envelope - u)` over nodes.
    pub max_gap: f64,
    /// `max_gap / max u` (0 for the zero field).
    pub relative_gap: f64,
    /// `(x, t)` where the gap is attained.
    pub gap_location: Option<(Point, f64)>,
    /// Nodes where no admissible non-trivial combination exists.
    pub flagged: usize,
}

impl EnvelopeResult {
    fn from_values(u: &SpaceTimeField, values: Vec<f64>, flagged: usize) -> Self {
        let n = u.grid().len();
        let mut max_gap = 0.0;
        let mut at = None;
        for (i, (e, v)) in values.iter().zip(u.values()).enumerate() {
            if e - v > max_gap {
                max_gap = e - v;
                at = Some(i);
            }
        }
        let max_u = u.max_value();
        EnvelopeResult {
            gap_location: at.map(|i| (u.grid().coords()[i % n], u.times()[i / n])),
            relative_gap: if max_u > 0.0 { max_gap / max_u } else { 0.0 },
            max_gap,
            values,
            flagged,
        }
    }

    /// The envelope as a field on the grid and times of `u`.
    pub fn to_field(&self, u: &SpaceTimeField) -> Result<SpaceTimeField> {
        let mut meta = u.meta().clone();
        meta.scheme = "envelope".to_string();
        SpaceTimeField::from_parts(u.grid().clone(), u.times().to_vec(), self.values.clone(), meta)
    }
}

fn check_envelope_args(alpha: f64, p: Exponent) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("α = {alpha} must be a positive real")));
    }
    match p {
        Exponent::Finite(p) if p > 0.0 && p <= 1.0 => Ok(p),
        _ => Err(Error::InvalidArgument(format!("envelopes need p ∈ (0, 1], got {p}"))),
    }
}

/// Smallest α-parabolically p-concave majorant on the grid: the upper
/// concave envelope of `(x, τ, u^p)` with `τ = t^α`, mapped back by
/// `( · )^{1/p}`. Nodes outside `Ω̄` keep their values.
pub fn full_envelope(u: &SpaceTimeField, alpha: f64, p: impl Into<Exponent>) -> Result<EnvelopeResult> {
    let p = check_envelope_args(alpha, p.into())?;
    let grid = u.grid();
    let domain = grid.domain();
    let nodes: Vec<usize> = (0..grid.len())
        .filter(|&n| domain.in_closure(grid.coords()[n]))
        .collect();
    let times = u.times();
    let heights = match grid.dim() {
        1 => {
            let mut pts = Vec::with_capacity(nodes.len() * times.len());
            for (k, t) in times.iter().enumerate() {
                let slice = u.slice(k);
                for &n in &nodes {
                    pts.push([grid.coords()[n][0], t.powf(alpha), slice[n].powf(p)]);
                }
            }
            upper_concave_envelope(&pts)?
        }
        _ => {
            let mut pts = Vec::with_capacity(nodes.len() * times.len());
            for (k, t) in times.iter().enumerate() {
                let slice = u.slice(k);
                for &n in &nodes {
                    let x = grid.coords()[n];
                    pts.push([x[0], x[1], t.powf(alpha), slice[n].powf(p)]);
                }
            }
            upper_concave_envelope(&pts)?
        }
    };
    let mut values = u.values().to_vec();
    let n = grid.len();
    for (k, chunk) in heights.chunks(nodes.len()).enumerate() {
        for (&node, &hgt) in nodes.iter().zip(chunk) {
            let v = &mut values[k * n + node];
            if hgt > v.powf(p) {
                *v = v.max(hgt.powf(1.0 / p));
            }
        }
    }
    Ok(EnvelopeResult::from_values(u, values, 0))
}

/// Search controls for [`lambda_envelope`].
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaSearch {
    /// Initial stride over lattice indices and snapshots.
    pub coarse_stride: usize,
    /// Upper bound on coarse candidate tuples per node; strides grow to fit.
    pub budget: usize,
    pub refine_sweeps: usize,
}

impl Default for LambdaSearch {
    fn default() -> Self {
        LambdaSearch {
            coarse_stride: 4,
            budget: 4096,
            refine_sweeps: 50,
        }
    }
}

/// One free support point: a node and a snapshot.
type Support = (usize, usize);

struct LambdaProblem<'a> {
    tf: Transformed<'a>,
    w: Vec<f64>,
    p: Exponent,
}

impl LambdaProblem<'_> {
    /// Value of the tuple with free points `free` and the last point solved
    /// from the constraints; `None` if the last point leaves the cylinder.
    fn value(&self, x: Point, tau: f64, free: &[Support], buf: &mut Vec<f64>) -> Option<f64> {
        let grid = self.tf.u.grid();
        let m = self.w.len();
        let last = self.w[m - 1];
        let (mut y, mut s) = (x, tau);
        buf.clear();
        for (i, &(node, k)) in free.iter().enumerate() {
            let c = grid.coords()[node];
            y[0] -= self.w[i] * c[0];
            y[1] -= self.w[i] * c[1];
            s -= self.w[i] * self.tf.taus[k];
            buf.push(self.tf.u.slice(k)[node]);
        }
        y = [y[0] / last, y[1] / last];
        s /= last;
        let scale = self.tf.tau_max().max(1.0);
        if s < -1e-12 * scale || s > self.tf.tau_max() + 1e-12 * scale {
            return None;
        }
        if !grid.domain().in_closure(y) {
            return None;
        }
        buf.push(self.tf.at(y, s.clamp(0.0, self.tf.tau_max())).ok()?);
        Some(mean_unchecked(buf, &self.w, self.p))
    }
}

/// The α-parabolically p-concave λ-envelope: at each node, the largest
/// `M_p(u(y_1, t_1), …, u(y_{n+1}, t_{n+1}); λ)` over tuples with
/// `Σ λ_i y_i = x` and `M_α(t; λ) = t`.
///
/// The first `n` support points range over grid nodes and snapshots
/// (coarse strided search, then coordinate descent at stride 1); the last
/// is solved from the constraints and interpolated. Nodes where only the
/// trivial tuple is admissible keep `u` and are counted in `flagged`.
pub fn lambda_envelope(
    u: &SpaceTimeField,
    alpha: f64,
    p: impl Into<Exponent>,
    weights: &Weights,
    search: &LambdaSearch,
) -> Result<EnvelopeResult> {
    let p = p.into();
    check_envelope_args(alpha, p)?;
    let grid = u.grid();
    let dim = grid.dim();
    if weights.len() != dim + 1 {
        return Err(Error::DimensionMismatch {
            expected: dim + 1,
            got: weights.len(),
        });
    }
    let domain = grid.domain();
    let nodes: Vec<usize> = (0..grid.len())
        .filter(|&n| domain.in_closure(grid.coords()[n]))
        .collect();
    let snaps = u.times().len();

    // coarse candidate set, strided so that |C|^dim ≤ budget
    let per_point = (search.budget.max(1) as f64).powf(1.0 / dim as f64).floor().max(1.0) as usize;
    let mut stride = search.coarse_stride.max(1);
    let candidates = loop {
        let c: Vec<Support> = nodes
            .iter()
            .filter(|&&n| {
                let [i, j] = grid.lattice_index(n);
                i.rem_euclid(stride as i64) == 0 && j.rem_euclid(stride as i64) == 0
            })
            .flat_map(|&n| (0..snaps).step_by(stride).map(move |k| (n, k)))
            .collect();
        if c.len() <= per_point || stride > grid.len().max(snaps) {
            break c;
        }
        stride *= 2;
    };

    let prob = LambdaProblem {
        tf: Transformed::new(u, alpha),
        w: weights.as_slice().to_vec(),
        p,
    };
    let n = grid.len();
    let mut values = u.values().to_vec();
    let mut flagged = 0;
    let mut buf = Vec::with_capacity(dim + 1);
    let mut free: Vec<Support> = vec![(0, 0); dim];
    let mut idx = vec![0usize; dim];
    for k in 1..snaps {
        let tau = prob.tf.taus[k];
        for &node in grid.unknowns() {
            let x = grid.coords()[node];
            let own = u.slice(k)[node];
            let mut best: Option<(f64, Vec<Support>)> = None;
            idx.iter_mut().for_each(|v| *v = 0);
            'outer: loop {
                for (f, &i) in free.iter_mut().zip(&idx) {
                    *f = candidates[i];
                }
                if free.iter().any(|&(m, kk)| m != node || kk != k) {
                    if let Some(v) = prob.value(x, tau, &free, &mut buf) {
                        if best.as_ref().is_none_or(|b| v > b.0) {
                            best = Some((v, free.clone()));
                        }
                    }
                }
                let mut d = 0;
                loop {
                    if d == dim {
                        break 'outer;
                    }
                    idx[d] += 1;
                    if idx[d] < candidates.len() {
                        break;
                    }
                    idx[d] = 0;
                    d += 1;
                }
            }
            let Some((mut val, mut at)) = best else {
                flagged += 1;
                continue;
            };
            for _ in 0..search.refine_sweeps {
                let mut improved = false;
                for i in 0..dim {
                    let (m0, k0) = at[i];
                    let mut moves: Vec<Support> = grid.neighbours(m0).map(|m| (m, k0)).collect();
                    if k0 > 0 {
                        moves.push((m0, k0 - 1));
                    }
                    if k0 + 1 < snaps {
                        moves.push((m0, k0 + 1));
                    }
                    for mv in moves {
                        let mut trial = at.clone();
                        trial[i] = mv;
                        if let Some(v) = prob.value(x, tau, &trial, &mut buf) {
                            if v > val {
                                val = v;
                                at = trial;
                                improved = true;
                            }
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            values[k * n + node] = own.max(val);
        }
    }
    Ok(EnvelopeResult::from_values(u, values, flagged))
}

/// Pointwise supremum of λ-envelopes over a list of weight vectors.
pub fn sup_lambda_envelope(
    u: &SpaceTimeField,
    alpha: f64,
    p: impl Into<Exponent>,
    lambdas: &[Weights],
    search: &LambdaSearch,
) -> Result<EnvelopeResult> {
    let p = p.into();
    let mut values = u.values().to_vec();
    let mut flagged = 0;
    for w in lambdas {
        let e = lambda_envelope(u, alpha, p, w, search)?;
        for (a, b) in values.iter_mut().zip(&e.values) {
            *a = a.max(*b);
        }
        flagged = flagged.max(e.flagged);
    }
    Ok(EnvelopeResult::from_values(u, values, flagged))
}

/// `max |a - b|` between two envelopes of the same field.
pub fn envelope_difference(a: &EnvelopeResult, b: &EnvelopeResult) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Bisection for the largest `p` at which [`check_parabolic_concavity`]
/// passes. All evaluations reuse one sample set, on which the verdict is
/// monotone in `p`. Returns the midpoint of the final bracket.
pub fn estimate_max_exponent(
    u: &SpaceTimeField,
    q: &ConcavityQuery,
    t_min: f64,
    p_lo: f64,
    p_hi: f64,
    tol_p: f64,
) -> Result<f64> {
    if !(p_lo < p_hi && tol_p > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need p_lo < p_hi and tol_p > 0, got [{p_lo}, {p_hi}], {tol_p}"
        )));
    }
    let triples = sample_triples(u, q, t_min)?;
    let tol = q.tolerance.unwrap_or_else(|| default_tolerance(u, q.alpha, q.c_tol));
    let tf = Transformed::new(u, q.alpha);
    let passes = |p: f64| -> Result<bool> {
        for tr in &triples {
            if tf.defect(tr, Exponent::Finite(p))? > tol {
                return Ok(false);
            }
        }
        Ok(true)
    };
    if !passes(p_lo)? {
        return Err(Error::NoSignChange {
            lo: p_lo,
            hi: p_hi,
            detail: "fails at the lower end",
        });
    }
    if passes(p_hi)? {
        return Err(Error::NoSignChange {
            lo: p_lo,
            hi: p_hi,
            detail: "passes at the upper end",
        });
    }
    let (mut lo, mut hi) = (p_lo, p_hi);
    while hi - lo > tol_p {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sampling box for the structure function.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StructureRegion {
    pub t: (f64, f64),
    pub v: (f64, f64),
}

impl Default for StructureRegion {
    fn default() -> Self {
        StructureRegion {
            t: (1e-3, 1.0),
            v: (1e-3, 1.0),
        }
    }
}

/// A boundary point used as the centre of radial sample pairs.
fn anchor(domain: &Domain) -> Point {
    match domain {
        Domain::Interval { a, .. } => [*a, 0.0],
        Domain::Disk { center, radius } => [center[0] - radius, center[1]],
        Domain::Polygon { vertices } => vertices[0],
    }
}

/// Midpoint concavity test of
/// `g(x, t, v) = v^{3 - 1/p} f(x, t^{1/α}, v^{1/p})` over `Ω × region`.
///
/// Pairs are quasi-random, plus radial pairs `z, z_b + c (z - z_b)` with
/// `z_b = (x_b, 0, 0)` for a boundary point `x_b` and `c ∈ {1/2, 1/4}`,
/// which expose superlinear homogeneity at the corner. The default
/// tolerance is `1e-9 · max |g|` over the samples.
#[allow(clippy::too_many_arguments)]
pub fn check_structure_condition(
    source: &SourceSpec,
    domain: &Domain,
    alpha: f64,
    p: f64,
    region: &StructureRegion,
    samples: usize,
    tolerance: Option<f64>,
    seed: u64,
) -> Result<ConcavityReport> {
    source.validate()?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} outside (0, 1)")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("α = {alpha} must be a positive real")));
    }
    let ((t_lo, t_hi), (v_lo, v_hi)) = (region.t, region.v);
    if !(t_lo > 0.0 && t_hi > t_lo && v_lo > 0.0 && v_hi > v_lo) {
        return Err(Error::InvalidArgument(
            "structure region must be a positive box".to_string(),
        ));
    }
    let g = |x: Point, t: f64, v: f64| -> Result<f64> {
        Ok(v.powf(3.0 - 1.0 / p) * source.eval(domain, x, t.powf(1.0 / alpha), v.powf(1.0 / p))?)
    };
    let dim = domain.dim();
    let (lo, hi) = domain.bounding_box();
    let xb = anchor(domain);
    let mut triples = Vec::with_capacity(2 * samples);
    let mut rd = Rd::new(9, seed);
    let mut r = [0.0; 9];
    let mut attempts = 0usize;
    let mut random = 0usize;
    while random < samples && attempts < 100 * samples + 1000 {
        attempts += 1;
        rd.next_into(&mut r);
        let r1 = [r[0], if dim == 2 { r[1] } else { 0.0 }];
        let r2 = [r[2], if dim == 2 { r[3] } else { 0.0 }];
        let (Some(x1), Some(x2)) = (draw_point(domain, lo, hi, &r1), draw_point(domain, lo, hi, &r2)) else {
            continue;
        };
        random += 1;
        let t1 = t_lo + r[4] * (t_hi - t_lo);
        let t2 = t_lo + r[5] * (t_hi - t_lo);
        let v1 = v_lo + r[6] * (v_hi - v_lo);
        let v2 = v_lo + r[7] * (v_hi - v_lo);
        let l = LAMBDA_EDGE + r[8] * (1.0 - 2.0 * LAMBDA_EDGE);
        let mut tr = Triple::new(x1, t1, x2, t2, l);
        tr.v = Some([v1, v2]);
        triples.push(tr);
        for c in [0.5, 0.25] {
            let (tc, vc) = (c * t1, c * v1);
            if tc < t_lo || vc < v_lo {
                continue;
            }
            let xc = lerp(xb, x1, c);
            if !domain.in_closure(xc) {
                continue;
            }
            let mut tr = Triple::new(x1, t1, xc, tc, LAMBDA_SWEEP[(random + (c == 0.25) as usize) % 3]);
            tr.v = Some([v1, vc]);
            triples.push(tr);
        }
    }
    if triples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut gmax: f64 = 0.0;
    let mut defects = Vec::with_capacity(triples.len());
    for tr in &triples {
        let [v1, v2] = tr.v.expect("structure samples carry v");
        let l = tr.lambda;
        let g1 = g(tr.x1, tr.t1, v1)?;
        let g2 = g(tr.x2, tr.t2, v2)?;
        let gm = g(
            lerp(tr.x1, tr.x2, l),
            (1.0 - l) * tr.t1 + l * tr.t2,
            (1.0 - l) * v1 + l * v2,
        )?;
        gmax = gmax.max(g1.abs()).max(g2.abs()).max(gm.abs());
        defects.push((1.0 - l) * g1 + l * g2 - gm);
    }
    let tol = tolerance.unwrap_or(1e-9 * gmax.max(f64::MIN_POSITIVE));
    build_report(&triples, &defects, tol, seed, Exponent::ONE, Some(alpha))
}

/// Outcome of one property of the suite.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PropertyVerdict {
    pub property: String,
    pub passed: bool,
    pub detail: String,
}

/// Inputs of [`property_suite`]: `u` is α-parabolically p-concave and
/// time-nondecreasing, `w` is α-parabolically q-concave on the same grid
/// and times.
pub struct PropertyInputs<'a> {
    pub u: &'a SpaceTimeField,
    pub w: &'a SpaceTimeField,
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub t_min: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Checks the structural properties of α-parabolic concavity on sampled
/// triples:
/// - (b) the time-constant extension of a p-concave function is
///   α-parabolically p-concave for every α;
/// - (d) a pass at p implies a pass at every `q ≤ p` on the same samples;
/// - (e) for time-nondecreasing `u`, a pass at α implies a pass at `β ≥ α`;
/// - (g) `u·w` is α-parabolically r-concave with `1/r = 1/p + 1/q`.
pub fn property_suite(inp: &PropertyInputs<'_>) -> Result<Vec<PropertyVerdict>> {
    let u = inp.u;
    if u.grid() != inp.w.grid() || u.times() != inp.w.times() {
        return Err(Error::InvalidArgument(
            "property suite needs fields on one grid".to_string(),
        ));
    }
    let base = ConcavityQuery::new(inp.alpha, inp.p)
        .with_samples(inp.samples)
        .with_seed(inp.seed);
    let mut out = Vec::new();

    // (b) time-constant extension of the last slice of w
    let last = inp.w.slice(inp.w.times().len() - 1).to_vec();
    let ext = SpaceTimeField::constant_in_time(u.grid().clone(), u.times().to_vec(), &last)?;
    let mut ok = true;
    let mut detail = String::new();
    for a in [0.25, 0.5, 1.0] {
        let q = base.clone().with_p(inp.q);
        let q = ConcavityQuery { alpha: a, ..q };
        let mut rep = check_parabolic_concavity(&ext, &q, inp.t_min)?;
        if rep.worst_defect <= 0.0 {
            rep.verdict = Verdict::Pass;
        }
        ok &= rep.verdict.passed();
        detail += &format!("α={a}: defect {:.3e}; ", rep.worst_defect);
    }
    out.push(PropertyVerdict {
        property: "(b) time-constant extension".to_string(),
        passed: ok,
        detail,
    });

    // (d) downgrade p → q ≤ p on identical samples
    let triples = sample_triples(u, &base, inp.t_min)?;
    let tol = default_tolerance(u, inp.alpha, DEFAULT_C_TOL);
    let at_p = triple_defects(u, inp.alpha, Exponent::Finite(inp.p), &triples)?;
    let pass_p = at_p.iter().all(|&d| d <= tol);
    let mut ok = pass_p;
    let mut detail = format!(
        "p={}: max defect {:.3e}; ",
        inp.p,
        at_p.iter().copied().fold(f64::MIN, f64::max)
    );
    for lower in [Exponent::Finite(0.5 * inp.p), Exponent::ZERO, Exponent::NegInf] {
        let d = triple_defects(u, inp.alpha, lower, &triples)?;
        let monotone = d
            .iter()
            .zip(&at_p)
            .all(|(a, b)| *a <= b + 1e-12 * u.max_value().max(1.0));
        let pass = d.iter().all(|&x| x <= tol);
        ok &= monotone && (!pass_p || pass);
        detail += &format!("{lower}: monotone {monotone}, pass {pass}; ");
    }
    out.push(PropertyVerdict {
        property: "(d) exponent downgrade".to_string(),
        passed: ok,
        detail,
    });

    // (e) α → β ≥ α under time monotonicity
    let mono = crate::solver::time_monotonicity_check(u, None);
    let mut ok = mono.passed;
    let mut detail = format!("∂t u ≥ 0: {}; ", mono.passed);
    for beta in [inp.alpha, 0.5 * (inp.alpha + 1.0), 1.0] {
        let q = ConcavityQuery {
            alpha: beta,
            ..base.clone()
        };
        let rep = check_parabolic_concavity(u, &q, inp.t_min)?;
        ok &= rep.verdict.passed();
        detail += &format!(
            "β={beta}: defect {:.3e} / tol {:.3e}; ",
            rep.worst_defect, rep.tolerance
        );
    }
    out.push(PropertyVerdict {
        property: "(e) time exponent upgrade".to_string(),
        passed: ok,
        detail,
    });

    // (g) product rule
    let r = 1.0 / (1.0 / inp.p + 1.0 / inp.q);
    let prod = u.product(inp.w)?;
    let rep = check_parabolic_concavity(&prod, &base.clone().with_p(r), inp.t_min)?;
    out.push(PropertyVerdict {
        property: "(g) product rule".to_string(),
        passed: rep.verdict.passed(),
        detail: format!("r={r}: defect {:.3e} / tol {:.3e}", rep.worst_defect, rep.tolerance),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_parabolic, FieldMeta};

    fn torch(h: f64, dt: f64, t_end: f64) -> SpaceTimeField {
        solve_parabolic(
            &Domain::interval(0.0, 1.0).unwrap(),
            &SourceSpec::Constant { c: 1.0 },
            h,
            dt,
            t_end,
        )
        .unwrap()
    }

    fn field(grid: SpaceGrid, times: Vec<f64>, f: impl Fn(Point, f64) -> f64) -> SpaceTimeField {
        let values = times
            .iter()
            .flat_map(|&t| grid.coords().iter().map(move |&x| (x, t)).collect::<Vec<_>>())
            .map(|(x, t)| f(x, t))
            .collect();
        SpaceTimeField::from_parts(
            grid,
            times,
            values,
            FieldMeta {
                scheme: "hand-built".into(),
                dt: 0.01,
                source: None,
                clamped: 0,
            },
        )
        .unwrap()
    }

    fn unit_grid(h: f64) -> SpaceGrid {
        Domain::interval(0.0, 1.0).unwrap().build_grid(h).unwrap()
    }

    #[test]
    fn torch_is_half_concave_and_fails_above() {
        let u = torch(1.0 / 32.0, 1e-3, 0.5);
        let q = ConcavityQuery::new(0.5, 0.5).with_samples(2000);
        let rep = check_parabolic_concavity(&u, &q, 0.02).unwrap();
        assert!(rep.verdict.passed(), "{rep:?}");
        let rep = check_parabolic_concavity(&u, &q.clone().with_p(0.8), 0.02).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        assert!(rep.samples > 2000);
    }

    #[test]
    fn min_mean_passes_for_monotone_quasiconcave_fields() {
        let u = torch(1.0 / 16.0, 1e-2, 0.5);
        let q = ConcavityQuery::new(1.0, Exponent::NegInf).with_samples(500);
        assert!(check_parabolic_concavity(&u, &q, 0.02).unwrap().verdict.passed());
    }

    #[test]
    fn t_min_precondition() {
        let u = torch(1.0 / 16.0, 1e-2, 0.5);
        let q = ConcavityQuery::new(0.5, 0.5);
        assert!(check_parabolic_concavity(&u, &q, 0.01).is_err());
        assert!(check_parabolic_concavity(&u, &q, 0.5).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_seeded() {
        let u = torch(1.0 / 16.0, 1e-2, 0.5);
        let q = ConcavityQuery::new(0.5, 0.5).with_samples(300);
        let a = sample_triples(&u, &q, 0.02).unwrap();
        let b = sample_triples(&u, &q, 0.02).unwrap();
        let c = sample_triples(&u, &q.clone().with_seed(1), 0.02).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for tr in &a {
            assert!(tr.t1 >= 0.02 - 1e-12 && tr.t2 <= 0.5 + 1e-12);
            assert!(tr.lambda > 0.0 && tr.lambda < 1.0);
        }
    }

    #[test]
    fn transform_consistency() {
        // defects in u agree with plain midpoint defects of v = u(x, τ^{1/α})^p
        let u = torch(1.0 / 32.0, 1e-3, 0.3);
        let (alpha, p) = (0.5, 0.7);
        let q = ConcavityQuery::new(alpha, p).with_samples(500);
        let triples = sample_triples(&u, &q, 0.01).unwrap();
        let defects = triple_defects(&u, alpha, Exponent::Finite(p), &triples).unwrap();
        let grid = u.grid();
        let taus: Vec<f64> = u.times().iter().map(|t| t.powf(alpha)).collect();
        // independent bilinear evaluation of v on the (x, τ) lattice
        let v_at = |x: f64, tau: f64| -> f64 {
            let k = taus.partition_point(|&s| s <= tau).clamp(1, taus.len() - 1) - 1;
            let s = ((tau - taus[k]) / (taus[k + 1] - taus[k])).clamp(0.0, 1.0);
            let i = ((x / grid.spacing()).floor() as usize).min(grid.len() - 2);
            let r = x / grid.spacing() - i as f64;
            let at = |kk: usize| (1.0 - r) * u.slice(kk)[i] + r * u.slice(kk)[i + 1];
            ((1.0 - s) * at(k) + s * at(k + 1)).powf(p)
        };
        for (tr, d) in triples.iter().zip(&defects) {
            let (t1, t2) = (tr.t1.powf(alpha), tr.t2.powf(alpha));
            let l = tr.lambda;
            let vm = v_at((1.0 - l) * tr.x1[0] + l * tr.x2[0], (1.0 - l) * t1 + l * t2);
            let v_defect = (1.0 - l) * v_at(tr.x1[0], t1) + l * v_at(tr.x2[0], t2) - vm;
            let um = vm.powf(1.0 / p);
            let mapped = (um + d).max(0.0).powf(p) - um.powf(p);
            assert!((mapped - v_defect).abs() < 1e-10, "{mapped} vs {v_defect}");
        }
    }

    #[test]
    fn verdicts_monotone_in_p() {
        let u = torch(1.0 / 32.0, 1e-3, 0.3);
        let q = ConcavityQuery::new(0.5, 0.5).with_samples(800);
        let triples = sample_triples(&u, &q, 0.01).unwrap();
        let tol = default_tolerance(&u, 0.5, DEFAULT_C_TOL);
        let mut failed = false;
        for p in [0.2, 0.4, 0.5, 0.55, 0.6, 0.8, 1.0] {
            let d = triple_defects(&u, 0.5, Exponent::Finite(p), &triples).unwrap();
            let fail = d.iter().any(|&x| x > tol);
            assert!(!failed || fail, "fail below p = {p} but pass at p");
            failed |= fail;
        }
        assert!(failed);
    }

    #[test]
    fn spatial_examples() {
        let grid = unit_grid(1.0 / 64.0);
        let steady: Vec<f64> = grid.coords().iter().map(|x| x[0] * (1.0 - x[0]) / 2.0).collect();
        let rep = check_slice_concavity(&grid, &steady, Exponent::Finite(0.5), 2000, None, 0).unwrap();
        assert!(rep.verdict.passed());
        let flat = vec![0.3; grid.len()];
        for p in [Exponent::NegInf, Exponent::ZERO, Exponent::ONE, Exponent::PosInf] {
            let rep = check_slice_concavity(&grid, &flat, p, 200, None, 0).unwrap();
            assert!(rep.worst_defect.abs() < 1e-15);
        }
    }

    #[test]
    fn spatial_failure_of_dist_squared_slice() {
        let dom = Domain::interval(0.0, 1.0).unwrap();
        let u = solve_parabolic(
            &dom,
            &SourceSpec::DistPower { d: 2.0, gamma: 0.0 },
            1.0 / 64.0,
            1e-4,
            0.01,
        )
        .unwrap();
        let slice = u.slice(u.times().len() - 1);
        // brute-force oracle: a positive second difference somewhere
        let convex = slice.windows(3).any(|w| w[0] - 2.0 * w[1] + w[2] > 1e-12);
        assert!(convex);
        let rep = check_spatial_concavity(&u, 0.01, Exponent::ONE, 2000, Some(1e-12), 0).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        let rep = check_spatial_concavity(&u, 0.01, Exponent::NegInf, 2000, Some(1e-12), 0).unwrap();
        assert!(rep.verdict.passed(), "{rep:?}");
    }

    #[test]
    fn full_envelope_of_torch() {
        let u = torch(1.0 / 32.0, 1e-3, 1.0);
        let e = full_envelope(&u, 0.5, 0.5).unwrap();
        assert!(e.relative_gap < 0.02, "gap {}", e.relative_gap);
        for (a, b) in e.values.iter().zip(u.values()) {
            assert!(a >= &(b - 1e-12));
        }
        let e7 = full_envelope(&u, 0.5, 0.7).unwrap();
        assert!(e7.relative_gap > 0.02, "gap {}", e7.relative_gap);
        // idempotence
        let again = full_envelope(&e7.to_field(&u).unwrap(), 0.5, 0.7).unwrap();
        assert!(again.max_gap < 1e-8 * u.max_value(), "{}", again.max_gap);
    }

    #[test]
    fn full_envelope_of_constant_field() {
        let grid = unit_grid(0.125);
        let u = field(grid, vec![0.0, 0.5, 1.0], |_, _| 0.7);
        let e = full_envelope(&u, 0.5, 0.5).unwrap();
        assert_eq!(e.values, u.values());
        assert_eq!(e.max_gap, 0.0);
    }

    #[test]
    fn dent_is_filled_by_envelopes() {
        let grid = unit_grid(0.0625);
        let times: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
        let u = field(grid, times, |x, t| {
            let base = x[0] * (1.0 - x[0]) * t;
            if (x[0] - 0.5).abs() < 0.07 && t > 0.3 {
                0.3 * base
            } else {
                base
            }
        });
        let full = full_envelope(&u, 1.0, 1.0).unwrap();
        assert!(full.max_gap > 0.05);
        let lam = lambda_envelope(&u, 1.0, 1.0, &Weights::pair(0.5).unwrap(), &LambdaSearch::default()).unwrap();
        assert!(lam.max_gap > 0.05);
        for ((l, f), v) in lam.values.iter().zip(&full.values).zip(u.values()) {
            assert!(l >= v);
            assert!(*l <= f + 1e-9, "λ-envelope above the full envelope");
        }
    }

    #[test]
    fn lambda_envelope_of_concave_torch_has_small_gap() {
        let u = torch(1.0 / 16.0, 1e-2, 0.6);
        let e = lambda_envelope(&u, 0.5, 0.5, &Weights::pair(0.5).unwrap(), &LambdaSearch::default()).unwrap();
        let tol = default_tolerance(&u, 0.5, DEFAULT_C_TOL);
        assert!(e.max_gap <= tol, "gap {} tol {tol}", e.max_gap);
        let sup = sup_lambda_envelope(
            &u,
            0.5,
            0.5,
            &[Weights::pair(0.25).unwrap(), Weights::pair(0.5).unwrap()],
            &LambdaSearch::default(),
        )
        .unwrap();
        assert!(sup.max_gap >= e.max_gap);
        let full = full_envelope(&u, 0.5, 0.5).unwrap();
        assert!(envelope_difference(&sup, &full) <= full.max_gap.max(sup.max_gap) + 1e-12);
    }

    #[test]
    fn estimate_max_exponent_for_torch() {
        let u = torch(1.0 / 64.0, 2.5e-4, 1.0);
        let q = ConcavityQuery::new(0.5, 0.5).with_samples(2000);
        let p = estimate_max_exponent(&u, &q, 5e-3, 0.3, 0.8, 0.005).unwrap();
        assert!((p - 0.5).abs() < 0.05, "p = {p}");
        assert!(matches!(
            estimate_max_exponent(&u, &q, 5e-3, 0.6, 0.8, 0.01),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn structure_examples() {
        let dom = Domain::interval(0.0, 1.0).unwrap();
        let region = StructureRegion::default();
        let tw = |gamma: f64| SourceSpec::TimeWeighted {
            gamma,
            profile: crate::solver::Profile::Constant { c: 1.0 },
        };
        // p < 1/(2(1+γ)) with 3 - 1/p ≥ 0
        let rep = check_structure_condition(&tw(0.25), &dom, 0.5, 0.38, &region, 2000, None, 0).unwrap();
        assert!(rep.verdict.passed(), "{rep:?}");
        let rep = check_structure_condition(&SourceSpec::Constant { c: 1.0 }, &dom, 0.5, 0.9, &region, 2000, None, 0)
            .unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        // semilinear u^γ, p ∈ ((1-γ)/3, (1-γ)/2)
        let rep = check_structure_condition(
            &SourceSpec::SemilinearPower { gamma: 0.5 },
            &dom,
            0.5,
            0.2,
            &region,
            2000,
            None,
            0,
        )
        .unwrap();
        assert!(rep.verdict.passed(), "{rep:?}");
        assert!(check_structure_condition(
            &SourceSpec::Tabulated { values: vec![] },
            &dom,
            0.5,
            0.4,
            &region,
            10,
            None,
            0
        )
        .is_err());
    }

    #[test]
    fn property_suite_on_torch() {
        let u = torch(1.0 / 32.0, 1e-3, 0.5);
        let grid = u.grid().clone();
        let dist: Vec<f64> = grid.boundary_distances().to_vec();
        let w = SpaceTimeField::constant_in_time(grid, u.times().to_vec(), &dist).unwrap();
        let verdicts = property_suite(&PropertyInputs {
            u: &u,
            w: &w,
            alpha: 0.5,
            p: 0.5,
            q: 1.0,
            t_min: 0.01,
            samples: 1000,
            seed: 3,
        })
        .unwrap();
        assert_eq!(verdicts.len(), 4);
        for v in verdicts {
            assert!(v.passed, "{v:?}");
        }
    }
}
