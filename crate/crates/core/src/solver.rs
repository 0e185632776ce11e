//! IMEX finite-difference solver for `∂t u = Δu + f(x, t, u)` on `Ω × (0, T]`
//! with `u = 0` on the parabolic boundary, and steady solves of `Δv + f = 0`.
//!
//! Diffusion uses the second-order central Laplacian advanced by backward
//! Euler; the source is evaluated at the previous time level. The system
//! matrix `I + Δt·(-Δ_h)` is an M-matrix, so nonnegative sources give
//! nonnegative, comparison-ordered iterates.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::domain::{Domain, Point, SpaceGrid};
use crate::linalg::{BandedSym, Cholesky};
use crate::{Error, Result};

/// Values below `-NEGATIVE_FLOOR` are clamped to zero and counted.
const NEGATIVE_FLOOR: f64 = 1e-12;

/// Spatial factor of a time-weighted source.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Profile {
    Constant {
        c: f64,
    },
    /// `dist(x, ∂Ω)^d`.
    DistPower {
        d: f64,
    },
    /// One nonnegative value per grid node.
    Tabulated {
        values: Vec<f64>,
    },
}

/// The source families handled by the solver. None depends on `∇u`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum SourceSpec {
    Constant {
        c: f64,
    },
    /// `t^γ dist(x, ∂Ω)^d`.
    DistPower {
        d: f64,
        gamma: f64,
    },
    /// `t^γ f(x)`.
    TimeWeighted {
        gamma: f64,
        profile: Profile,
    },
    /// `u^γ`.
    SemilinearPower {
        gamma: f64,
    },
    /// `(u + ε)^γ`.
    SemilinearRegularized {
        gamma: f64,
        eps: f64,
    },
    /// Time-independent `f(x)`, one value per grid node.
    Tabulated {
        values: Vec<f64>,
    },
}

fn check_time_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&gamma) {
        return Err(Error::InvalidSource(format!(
            "time exponent γ = {gamma} outside [0, 1/2]"
        )));
    }
    Ok(())
}

fn check_semilinear_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidSource(format!(
            "semilinear exponent γ = {gamma} outside (0, 1)"
        )));
    }
    Ok(())
}

fn check_table(values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidSource(format!("tabulated source has invalid value {v}")));
    }
    Ok(())
}

impl Profile {
    fn validate(&self) -> Result<()> {
        match self {
            Profile::Constant { c } if !(*c >= 0.0 && c.is_finite()) => {
                Err(Error::InvalidSource(format!("constant profile c = {c} must be ≥ 0")))
            }
            Profile::DistPower { d } if !(*d >= 0.0 && d.is_finite()) => {
                Err(Error::InvalidSource(format!("distance power d = {d} must be ≥ 0")))
            }
            Profile::Tabulated { values } => check_table(values),
            _ => Ok(()),
        }
    }

    fn at(&self, domain: &Domain, x: Point) -> Result<f64> {
        match self {
            Profile::Constant { c } => Ok(*c),
            Profile::DistPower { d } => Ok(dist_power(domain.signed_distance(x).max(0.0), *d)),
            Profile::Tabulated { .. } => Err(Error::InvalidSource(
                "tabulated profiles are only defined on grid nodes".to_string(),
            )),
        }
    }
}

fn dist_power(dist: f64, d: f64) -> f64 {
    if d == 0.0 {
        1.0
    } else {
        dist.powf(d)
    }
}

fn time_power(t: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        1.0
    } else {
        t.max(0.0).powf(gamma)
    }
}

impl SourceSpec {
    /// Checks the parameter ranges of each family.
    pub fn validate(&self) -> Result<()> {
        match self {
            SourceSpec::Constant { c } => {
                if !(*c >= 0.0 && c.is_finite()) {
                    return Err(Error::InvalidSource(format!("constant c = {c} must be ≥ 0")));
                }
            }
            SourceSpec::DistPower { d, gamma } => {
                check_time_gamma(*gamma)?;
                Profile::DistPower { d: *d }.validate()?;
            }
            SourceSpec::TimeWeighted { gamma, profile } => {
                check_time_gamma(*gamma)?;
                profile.validate()?;
            }
            SourceSpec::SemilinearPower { gamma } => check_semilinear_gamma(*gamma)?,
            SourceSpec::SemilinearRegularized { gamma, eps } => {
                check_semilinear_gamma(*gamma)?;
                if !(*eps > 0.0 && eps.is_finite()) {
                    return Err(Error::InvalidSource(format!("regularization ε = {eps} must be > 0")));
                }
            }
            SourceSpec::Tabulated { values } => check_table(values)?,
        }
        Ok(())
    }

    pub fn is_semilinear(&self) -> bool {
        matches!(
            self,
            SourceSpec::SemilinearPower { .. } | SourceSpec::SemilinearRegularized { .. }
        )
    }

    fn table(&self) -> Option<&[f64]> {
        match self {
            SourceSpec::Tabulated { values }
            | SourceSpec::TimeWeighted {
                profile: Profile::Tabulated { values },
                ..
            } => Some(values),
            _ => None,
        }
    }

    /// `f(x, t, u)` at an arbitrary point of `Ω̄`. Tabulated sources are
    /// only defined on grid nodes and return an error.
    pub fn eval(&self, domain: &Domain, x: Point, t: f64, u: f64) -> Result<f64> {
        Ok(match self {
            SourceSpec::Constant { c } => *c,
            SourceSpec::DistPower { d, gamma } => {
                time_power(t, *gamma) * dist_power(domain.signed_distance(x).max(0.0), *d)
            }
            SourceSpec::TimeWeighted { gamma, profile } => time_power(t, *gamma) * profile.at(domain, x)?,
            SourceSpec::SemilinearPower { gamma } => u.max(0.0).powf(*gamma),
            SourceSpec::SemilinearRegularized { gamma, eps } => (u.max(0.0) + eps).powf(*gamma),
            SourceSpec::Tabulated { .. } => {
                return Err(Error::InvalidSource(
                    "tabulated sources are only defined on grid nodes".to_string(),
                ))
            }
        })
    }
}

/// Source restricted to the interior unknowns of a grid.
struct SourcePlan {
    spatial: Vec<f64>,
    time_gamma: f64,
    semilinear: Option<(f64, f64)>,
}

impl SourcePlan {
    fn new(source: &SourceSpec, grid: &SpaceGrid) -> Result<Self> {
        source.validate()?;
        if let Some(table) = source.table() {
            if table.len() != grid.len() {
                return Err(Error::InvalidSource(format!(
                    "tabulated source has {} values for a grid of {} nodes",
                    table.len(),
                    grid.len()
                )));
            }
        }
        let dist = grid.boundary_distances();
        let spatial_of = |profile: &Profile| -> Vec<f64> {
            grid.unknowns()
                .iter()
                .map(|&n| match profile {
                    Profile::Constant { c } => *c,
                    Profile::DistPower { d } => dist_power(dist[n], *d),
                    Profile::Tabulated { values } => values[n],
                })
                .collect()
        };
        let m = grid.unknowns().len();
        Ok(match source {
            SourceSpec::Constant { c } => SourcePlan {
                spatial: vec![*c; m],
                time_gamma: 0.0,
                semilinear: None,
            },
            SourceSpec::DistPower { d, gamma } => SourcePlan {
                spatial: spatial_of(&Profile::DistPower { d: *d }),
                time_gamma: *gamma,
                semilinear: None,
            },
            SourceSpec::TimeWeighted { gamma, profile } => SourcePlan {
                spatial: spatial_of(profile),
                time_gamma: *gamma,
                semilinear: None,
            },
            SourceSpec::Tabulated { values } => SourcePlan {
                spatial: grid.unknowns().iter().map(|&n| values[n]).collect(),
                time_gamma: 0.0,
                semilinear: None,
            },
            SourceSpec::SemilinearPower { gamma } => SourcePlan {
                spatial: Vec::new(),
                time_gamma: 0.0,
                semilinear: Some((*gamma, 0.0)),
            },
            SourceSpec::SemilinearRegularized { gamma, eps } => SourcePlan {
                spatial: Vec::new(),
                time_gamma: 0.0,
                semilinear: Some((*gamma, *eps)),
            },
        })
    }

    /// `rhs += tau * f(t, u)`.
    fn add_rate(&self, t: f64, u: &[f64], tau: f64, rhs: &mut [f64]) {
        match self.semilinear {
            Some((gamma, eps)) => {
                for (r, &v) in rhs.iter_mut().zip(u) {
                    *r += tau * (v.max(0.0) + eps).powf(gamma);
                }
            }
            None => {
                let w = tau * time_power(t, self.time_gamma);
                for (r, &s) in rhs.iter_mut().zip(&self.spatial) {
                    *r += w * s;
                }
            }
        }
    }
}

/// `I·shift + scale·(-Δ_h)` on the interior unknowns.
fn system_matrix(grid: &SpaceGrid, shift: f64, scale: f64) -> BandedSym {
    let unknowns = grid.unknowns();
    let mut bw = 0;
    for (a, &n) in unknowns.iter().enumerate() {
        for nb in grid.neighbours(n) {
            if let Some(b) = grid.unknown_of(nb) {
                bw = bw.max(a.abs_diff(b));
            }
        }
    }
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let mut m = BandedSym::zeros(unknowns.len(), bw);
    for (a, &n) in unknowns.iter().enumerate() {
        m.add(a, a, shift + scale * grid.stencil_size() as f64 * inv_h2);
        for nb in grid.neighbours(n) {
            if let Some(b) = grid.unknown_of(nb) {
                if b < a {
                    m.add(a, b, -scale * inv_h2);
                }
            }
        }
    }
    m
}

/// Provenance of a computed field.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldMeta {
    pub scheme: String,
    pub dt: f64,
    pub source: Option<SourceSpec>,
    /// Number of nodal values below `-1e-12` that were clamped to zero.
    pub clamped: usize,
}

/// Gridded `u` on `Ω × [0, T]`, stored as snapshots at increasing times.
#[derive(Clone, Debug)]
pub struct SpaceTimeField {
    grid: SpaceGrid,
    times: Vec<f64>,
    values: Vec<f64>,
    meta: FieldMeta,
}

impl SpaceTimeField {
    /// Builds a field from snapshots; `values` holds `times.len()` slices of
    /// `grid.len()` node values each.
    pub fn from_parts(grid: SpaceGrid, times: Vec<f64>, values: Vec<f64>, meta: FieldMeta) -> Result<Self> {
        if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) || times[0] < 0.0 {
            return Err(Error::InvalidArgument(
                "times must be nonnegative and strictly increasing".to_string(),
            ));
        }
        if values.len() != times.len() * grid.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len() * grid.len(),
                got: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "field values must be finite and ≥ 0, found {v}"
            )));
        }
        Ok(SpaceTimeField {
            grid,
            times,
            values,
            meta,
        })
    }

    /// The time-constant extension `ũ(x, t) = w(x)`.
    pub fn constant_in_time(grid: SpaceGrid, times: Vec<f64>, spatial: &[f64]) -> Result<Self> {
        if spatial.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: spatial.len(),
            });
        }
        let values = times.iter().flat_map(|_| spatial.iter().copied()).collect();
        let dt = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
        Self::from_parts(
            grid,
            times,
            values,
            FieldMeta {
                scheme: "time-constant extension".to_string(),
                dt,
                source: None,
                clamped: 0,
            },
        )
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("times are nonempty")
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Pointwise map preserving grid, times and metadata.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_parts(
            self.grid.clone(),
            self.times.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
            self.meta.clone(),
        )
    }

    /// Pointwise product with a field on the same grid and times.
    pub fn product(&self, other: &SpaceTimeField) -> Result<Self> {
        if self.grid.len() != other.grid.len() || self.times != other.times {
            return Err(Error::InvalidArgument("fields live on different grids".to_string()));
        }
        Self::from_parts(
            self.grid.clone(),
            self.times.clone(),
            self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
            FieldMeta {
                scheme: "product".to_string(),
                dt: self.meta.dt,
                source: None,
                clamped: 0,
            },
        )
    }

    /// Bracketing snapshot `k` and weight `s` with `t = (1 - s) t_k + s t_{k+1}`.
    pub(crate) fn time_bracket(&self, t: f64) -> Result<(usize, f64)> {
        bracket(&self.times, t)
            .ok_or_else(|| Error::OutsideCylinder(format!("t = {t} outside [{}, {}]", self.times[0], self.t_end())))
    }

    /// `u(x, t)`, multilinear in space and linear in `t`.
    pub fn value_at(&self, x: Point, t: f64) -> Result<f64> {
        let st = self.grid.stencil(x)?;
        let (k, s) = self.time_bracket(t)?;
        let lo = st.apply(self.slice(k));
        if s == 0.0 {
            return Ok(lo);
        }
        Ok((1.0 - s) * lo + s * st.apply(self.slice(k + 1)))
    }

    /// The slice at time `t`, interpolated linearly between snapshots.
    pub fn slice_at(&self, t: f64) -> Result<Vec<f64>> {
        let (k, s) = self.time_bracket(t)?;
        if s == 0.0 {
            return Ok(self.slice(k).to_vec());
        }
        Ok(self
            .slice(k)
            .iter()
            .zip(self.slice(k + 1))
            .map(|(a, b)| (1.0 - s) * a + s * b)
            .collect())
    }
}

/// Index `k` and weight `s ∈ [0, 1)` with `x = (1 - s) xs[k] + s xs[k+1]`,
/// or `s = 0` at the last point.
pub(crate) fn bracket(xs: &[f64], x: f64) -> Option<(usize, f64)> {
    let n = xs.len();
    let tol = 1e-12 * xs[n - 1].abs().max(1.0);
    if !(x >= xs[0] - tol && x <= xs[n - 1] + tol) {
        return None;
    }
    if x >= xs[n - 1] {
        return Some((n - 1, 0.0));
    }
    if x <= xs[0] {
        return Some((0, 0.0));
    }
    let k = xs.partition_point(|&v| v <= x) - 1;
    Some((k, (x - xs[k]) / (xs[k + 1] - xs[k])))
}

/// Steady solution `v` of `Δv + f = 0`, `v = 0` on `∂Ω`.
#[derive(Clone, Debug)]
pub struct SteadyField {
    pub grid: SpaceGrid,
    pub values: Vec<f64>,
    /// Final residual `‖Δ_h v + f(v)‖_∞` over interior nodes.
    pub residual: f64,
    pub iterations: usize,
}

/// Time stepping and snapshot schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    /// The first step of size `dt` is split into this many substeps to
    /// resolve the initial layer.
    pub initial_substeps: usize,
    /// Every step up to this count is stored.
    pub dense_steps: usize,
    /// Approximate number of snapshots stored after the dense window.
    pub max_snapshots: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            initial_substeps: 10,
            dense_steps: 500,
            max_snapshots: 400,
        }
    }
}

/// Solves `∂t u = Δu + f` with zero Dirichlet data and `u(·, 0) = 0`.
pub fn solve_parabolic(domain: &Domain, source: &SourceSpec, h: f64, dt: f64, t_end: f64) -> Result<SpaceTimeField> {
    solve_parabolic_with(domain, source, h, dt, t_end, &SolveOptions::default())
}

/// [`solve_parabolic`] with explicit stepping options. The final time is
/// `⌈T / dt⌉·dt`.
pub fn solve_parabolic_with(
    domain: &Domain,
    source: &SourceSpec,
    h: f64,
    dt: f64,
    t_end: f64,
    opts: &SolveOptions,
) -> Result<SpaceTimeField> {
    if !(dt > 0.0 && dt.is_finite() && t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need dt > 0 and T > 0, got dt = {dt}, T = {t_end}"
        )));
    }
    let grid = domain.build_grid(h)?;
    let plan = SourcePlan::new(source, &grid)?;
    let substeps = opts.initial_substeps.max(1);
    let full = system_matrix(&grid, 1.0, dt).cholesky()?;
    let sub = if substeps > 1 {
        Some(system_matrix(&grid, 1.0, dt / substeps as f64).cholesky()?)
    } else {
        None
    };

    let n_nodes = grid.len();
    let m = grid.unknowns().len();
    let n_steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let dense = opts.dense_steps.max(1);
    let stride = if n_steps > dense {
        (n_steps - dense).div_ceil(opts.max_snapshots.max(1))
    } else {
        1
    };

    let mut times = vec![0.0];
    let mut values = vec![0.0; n_nodes];
    let mut u = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    let mut clamped = 0usize;

    let record = |u: &[f64], t: f64, times: &mut Vec<f64>, values: &mut Vec<f64>| {
        times.push(t);
        let start = values.len();
        values.resize(start + n_nodes, 0.0);
        for (&node, &v) in grid.unknowns().iter().zip(u) {
            values[start + node] = v;
        }
    };
    let mut advance = |u: &mut Vec<f64>, t: f64, tau: f64, chol: &Cholesky, step: usize| -> Result<()> {
        rhs.copy_from_slice(u);
        plan.add_rate(t, u, tau, &mut rhs);
        chol.solve(&mut rhs);
        for (dst, &v) in u.iter_mut().zip(rhs.iter()) {
            if !v.is_finite() {
                return Err(Error::NonFinite { step });
            }
            *dst = if v < 0.0 {
                if v < -NEGATIVE_FLOOR {
                    clamped += 1;
                }
                0.0
            } else {
                v
            };
        }
        Ok(())
    };

    match &sub {
        Some(chol) => {
            let tau = dt / substeps as f64;
            for s in 0..substeps {
                advance(&mut u, s as f64 * tau, tau, chol, 1)?;
                let t = if s + 1 == substeps { dt } else { (s + 1) as f64 * tau };
                record(&u, t, &mut times, &mut values);
            }
        }
        None => {
            advance(&mut u, 0.0, dt, &full, 1)?;
            record(&u, dt, &mut times, &mut values);
        }
    }
    for k in 2..=n_steps {
        advance(&mut u, (k - 1) as f64 * dt, dt, &full, k)?;
        if k <= dense || (k - dense).is_multiple_of(stride) || k == n_steps {
            record(&u, k as f64 * dt, &mut times, &mut values);
        }
    }

    Ok(SpaceTimeField {
        grid,
        times,
        values,
        meta: FieldMeta {
            scheme: "imex-backward-euler".to_string(),
            dt,
            source: Some(source.clone()),
            clamped,
        },
    })
}

/// Steady-state options for the semilinear fixed point.
#[derive(Clone, Debug, PartialEq)]
pub struct SteadyOptions {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Iterations without a new best residual before reporting stagnation.
    pub patience: usize,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        SteadyOptions {
            damping: 0.9,
            tolerance: 1e-10,
            max_iterations: 2000,
            patience: 40,
        }
    }
}

/// Solves `Δv + f = 0` in `Ω`, `v = 0` on `∂Ω`.
///
/// Linear sources (constant, time-independent distance powers, tabulated)
/// use one direct solve; `v^γ` uses a damped fixed-point iteration
/// `v ← (1-ω) v + ω (-Δ_h)^{-1} v^γ` started from the solution with `f = 1`.
pub fn solve_steady(domain: &Domain, source: &SourceSpec, h: f64) -> Result<SteadyField> {
    solve_steady_with(domain, source, h, &SteadyOptions::default())
}

pub fn solve_steady_with(domain: &Domain, source: &SourceSpec, h: f64, opts: &SteadyOptions) -> Result<SteadyField> {
    let grid = domain.build_grid(h)?;
    match source {
        SourceSpec::DistPower { gamma, .. } | SourceSpec::TimeWeighted { gamma, .. } if *gamma != 0.0 => {
            return Err(Error::InvalidSource(
                "steady solves need a time-independent source (γ = 0)".to_string(),
            ))
        }
        SourceSpec::SemilinearRegularized { .. } => {
            return Err(Error::InvalidSource(
                "steady solves support u^γ but not (u + ε)^γ".to_string(),
            ))
        }
        _ => {}
    }
    let plan = SourcePlan::new(source, &grid)?;
    let a = system_matrix(&grid, 0.0, 1.0);
    let chol = a.clone().cholesky()?;
    let m = grid.unknowns().len();
    let scatter = |u: &[f64]| {
        let mut out = vec![0.0; grid.len()];
        for (&node, &v) in grid.unknowns().iter().zip(u) {
            out[node] = v;
        }
        out
    };
    let residual = |v: &[f64], f: &[f64]| {
        let mut av = vec![0.0; m];
        a.mul(v, &mut av);
        av.iter().zip(f).map(|(x, y)| (y - x).abs()).fold(0.0, f64::max)
    };

    let Some((gamma, _)) = plan.semilinear else {
        let mut f = vec![0.0; m];
        plan.add_rate(0.0, &vec![0.0; m], 1.0, &mut f);
        let mut v = f.clone();
        chol.solve(&mut v);
        let r = residual(&v, &f);
        return Ok(SteadyField {
            values: scatter(&v),
            grid,
            residual: r,
            iterations: 1,
        });
    };

    let mut v = vec![1.0; m];
    chol.solve(&mut v);
    let omega = opts.damping.clamp(1e-3, 1.0);
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    for it in 1..=opts.max_iterations {
        let f: Vec<f64> = v.iter().map(|x| x.max(0.0).powf(gamma)).collect();
        let r = residual(&v, &f);
        if r < opts.tolerance {
            return Ok(SteadyField {
                values: scatter(&v),
                grid,
                residual: r,
                iterations: it,
            });
        }
        if r < best * 0.999 {
            best = r;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > opts.patience {
                return Err(Error::Stagnation {
                    iterations: it,
                    residual: r,
                });
            }
        }
        let mut next = f;
        chol.solve(&mut next);
        for (x, y) in v.iter_mut().zip(&next) {
            *x = (1.0 - omega) * *x + omega * y;
        }
    }
    let f: Vec<f64> = v.iter().map(|x| x.max(0.0).powf(gamma)).collect();
    Err(Error::Stagnation {
        iterations: opts.max_iterations,
        residual: residual(&v, &f),
    })
}

/// Result of the ε-regularized sweep for `∂t u = Δu + u^γ`.
#[derive(Clone, Debug)]
pub struct MaximalSolution {
    /// Field for the smallest ε.
    pub field: SpaceTimeField,
    pub eps: Vec<f64>,
    /// `max |u_{ε_last} - u_{ε_prev}|` over all nodes and times.
    pub cauchy_gap: f64,
    /// Largest `u_{ε_small} - u_{ε_large}` over consecutive pairs.
    pub ordering_violation: f64,
}

/// Tolerance on the ε-ordering of the sweep.
pub const ORDERING_TOLERANCE: f64 = 1e-10;

/// Approximates the maximal solution of `∂t u = Δu + u^γ` as the limit of
/// solutions with source `(u + ε)^γ` over a decreasing ε sequence.
pub fn solve_semilinear_maximal(
    domain: &Domain,
    gamma: f64,
    h: f64,
    dt: f64,
    t_end: f64,
    eps: &[f64],
) -> Result<MaximalSolution> {
    solve_semilinear_maximal_with(domain, gamma, h, dt, t_end, eps, &SolveOptions::default())
}

pub fn solve_semilinear_maximal_with(
    domain: &Domain,
    gamma: f64,
    h: f64,
    dt: f64,
    t_end: f64,
    eps: &[f64],
    opts: &SolveOptions,
) -> Result<MaximalSolution> {
    check_semilinear_gamma(gamma)?;
    if eps.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "ε sequence needs at least 3 values, got {}",
            eps.len()
        )));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) || eps[eps.len() - 1] < 1e-8 {
        return Err(Error::InvalidArgument(
            "ε sequence must be strictly decreasing with floor ≥ 1e-8".to_string(),
        ));
    }
    let mut prev: Option<SpaceTimeField> = None;
    let mut violation = f64::NEG_INFINITY;
    let mut gap = 0.0;
    for (k, &e) in eps.iter().enumerate() {
        let field = solve_parabolic_with(
            domain,
            &SourceSpec::SemilinearRegularized { gamma, eps: e },
            h,
            dt,
            t_end,
            opts,
        )?;
        if let Some(larger) = &prev {
            let mut v = f64::NEG_INFINITY;
            let mut g: f64 = 0.0;
            for (small, large) in field.values.iter().zip(&larger.values) {
                v = v.max(small - large);
                g = g.max((small - large).abs());
            }
            if v > ORDERING_TOLERANCE {
                return Err(Error::MonotonicityViolation {
                    eps_small: e,
                    eps_large: eps[k - 1],
                    violation: v,
                });
            }
            violation = violation.max(v);
            gap = g;
        }
        prev = Some(field);
    }
    Ok(MaximalSolution {
        field: prev.expect("at least three ε values"),
        eps: eps.to_vec(),
        cauchy_gap: gap,
        ordering_violation: violation,
    })
}

/// Outcome of [`time_monotonicity_check`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MonotonicityReport {
    pub passed: bool,
    /// `min u(x, t_{k+1}) - u(x, t_k)` over nodes and consecutive snapshots.
    pub margin: f64,
    pub tolerance: f64,
    /// `(node, k)` where the margin is attained.
    pub worst: Option<(usize, usize)>,
}

/// Checks `∂t u ≥ 0` on the stored snapshots. The default tolerance is
/// `1e-10 · max u`.
pub fn time_monotonicity_check(u: &SpaceTimeField, tolerance: Option<f64>) -> MonotonicityReport {
    let tol = tolerance.unwrap_or(1e-10 * u.max_value());
    let mut margin = f64::INFINITY;
    let mut worst = None;
    for k in 0..u.times.len().saturating_sub(1) {
        for (node, (a, b)) in u.slice(k).iter().zip(u.slice(k + 1)).enumerate() {
            if b - a < margin {
                margin = b - a;
                worst = Some((node, k));
            }
        }
    }
    if !margin.is_finite() {
        margin = 0.0;
    }
    MonotonicityReport {
        passed: margin >= -tol,
        margin,
        tolerance: tol,
        worst,
    }
}

/// Least-squares fit of `log u(x* + νρ, ρ^{1/α})` against `log ρ`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalingFit {
    pub exponent: f64,
    pub rhos: Vec<f64>,
    pub values: Vec<f64>,
}

/// Fits the boundary growth exponent `s` in `u(x* + νρ, ρ^{1/α}) ~ ρ^s` over
/// `ρ ∈ [4h, 16h]`, with `ν` the unit vector from `x*` to `y*` (0 if equal).
pub fn boundary_scaling_exponent(u: &SpaceTimeField, x_star: &[f64], y_star: &[f64], alpha: f64) -> Result<ScalingFit> {
    let h = u.grid.spacing();
    boundary_scaling_exponent_with(u, x_star, y_star, alpha, (4.0 * h, 16.0 * h), 9)
}

pub fn boundary_scaling_exponent_with(
    u: &SpaceTimeField,
    x_star: &[f64],
    y_star: &[f64],
    alpha: f64,
    rho_range: (f64, f64),
    count: usize,
) -> Result<ScalingFit> {
    let dim = u.grid.dim();
    for p in [x_star, y_star] {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
    }
    if !(alpha > 0.0) || !(rho_range.0 > 0.0 && rho_range.1 > rho_range.0) || count < 2 {
        return Err(Error::InvalidArgument(format!(
            "need α > 0, 0 < ρ_lo < ρ_hi and ≥ 2 samples (α = {alpha}, ρ ∈ {rho_range:?})"
        )));
    }
    let pt = |v: &[f64]| -> Point {
        if dim == 1 {
            [v[0], 0.0]
        } else {
            [v[0], v[1]]
        }
    };
    let (xs, ys) = (pt(x_star), pt(y_star));
    let dir = [ys[0] - xs[0], ys[1] - xs[1]];
    let len = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
    let nu = if len > 0.0 {
        [dir[0] / len, dir[1] / len]
    } else {
        [0.0, 0.0]
    };

    let (lo, hi) = (rho_range.0.ln(), rho_range.1.ln());
    let mut rhos = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count);
    for k in 0..count {
        let rho = (lo + (hi - lo) * k as f64 / (count - 1) as f64).exp();
        let x = [xs[0] + nu[0] * rho, xs[1] + nu[1] * rho];
        let v = u.value_at(x, rho.powf(1.0 / alpha))?;
        if !(v > 0.0) {
            return Err(Error::VanishingSolution { rho });
        }
        rhos.push(rho);
        values.push(v);
    }
    let lx: Vec<f64> = rhos.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = count as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(ScalingFit {
        exponent: sxy / sxx,
        rhos,
        values,
    })
}
