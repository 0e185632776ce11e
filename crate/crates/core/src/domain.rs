//! Bounded convex domains in one and two dimensions and their lattices.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result};

/// Points within this distance of the boundary count as boundary points.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// A point in the plane; one-dimensional points use the first coordinate only.
pub type Point = [f64; 2];

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "shape", rename_all = "snake_case"))]
pub enum Domain {
    Interval {
        a: f64,
        b: f64,
    },
    Disk {
        center: Point,
        radius: f64,
    },
    /// Convex polygon with counterclockwise vertices.
    Polygon {
        vertices: Vec<Point>,
    },
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn norm(v: Point) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        let d = Domain::Interval { a, b };
        d.validate()?;
        Ok(d)
    }

    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        let d = Domain::Disk { center, radius };
        d.validate()?;
        Ok(d)
    }

    /// Clockwise input is reversed; non-convex or degenerate input is rejected.
    pub fn polygon(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() >= 3 && signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        let d = Domain::Polygon { vertices };
        d.validate()?;
        Ok(d)
    }

    pub fn unit_square() -> Self {
        Domain::Polygon {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        }
    }

    /// Checks the shape invariants. Deserialized domains must pass this
    /// before use.
    pub fn validate(&self) -> Result<()> {
        match self {
            Domain::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::InvalidDomain(format!("interval needs a < b, got ({a}, {b})")));
                }
            }
            Domain::Disk { center, radius } => {
                if !(center.iter().all(|c| c.is_finite()) && radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidDomain(format!("disk needs radius > 0, got {radius}")));
                }
            }
            Domain::Polygon { vertices } => {
                let n = vertices.len();
                if n < 3 {
                    return Err(Error::InvalidDomain("polygon needs at least 3 vertices".to_string()));
                }
                if !vertices.iter().flatten().all(|c| c.is_finite()) {
                    return Err(Error::InvalidDomain("non-finite polygon vertex".to_string()));
                }
                let area = signed_area(vertices);
                if area <= 0.0 {
                    return Err(Error::InvalidDomain(format!(
                        "polygon must be counterclockwise with positive area, signed area {area}"
                    )));
                }
                for i in 0..n {
                    let c = cross(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
                    if c <= 0.0 {
                        return Err(Error::InvalidDomain(format!(
                            "polygon is not strictly convex at vertex {}",
                            (i + 1) % n
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            _ => 2,
        }
    }

    fn point(&self, x: &[f64]) -> Result<Point> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(if x.len() == 1 { [x[0], 0.0] } else { [x[0], x[1]] })
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    /// Exact for intervals, disks, and for polygons inside the closure.
    pub(crate) fn signed_distance(&self, x: Point) -> f64 {
        match self {
            Domain::Interval { a, b } => (x[0] - a).min(b - x[0]),
            Domain::Disk { center, radius } => radius - norm([x[0] - center[0], x[1] - center[1]]),
            Domain::Polygon { vertices } => {
                let n = vertices.len();
                let mut inside = f64::INFINITY;
                let mut outside: f64 = 0.0;
                for i in 0..n {
                    let (p, q) = (vertices[i], vertices[(i + 1) % n]);
                    let len = norm([q[0] - p[0], q[1] - p[1]]);
                    let line = cross(p, q, x) / len;
                    inside = inside.min(line);
                    if line < 0.0 {
                        outside = outside.max(segment_distance(p, q, x));
                    }
                }
                if inside >= 0.0 {
                    // min over edge segments equals min over supporting lines here
                    (0..n)
                        .map(|i| segment_distance(vertices[i], vertices[(i + 1) % n], x))
                        .fold(f64::INFINITY, f64::min)
                } else {
                    -outside
                }
            }
        }
    }

    /// True iff `x` lies in the open domain, more than `1e-12` from the boundary.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.contains_point(self.point(x)?))
    }

    pub(crate) fn contains_point(&self, x: Point) -> bool {
        self.signed_distance(x) > BOUNDARY_TOL
    }

    pub(crate) fn in_closure(&self, x: Point) -> bool {
        self.signed_distance(x) >= -BOUNDARY_TOL
    }

    /// Euclidean distance from `x ∈ Ω̄` to `∂Ω`.
    pub fn boundary_distance(&self, x: &[f64]) -> Result<f64> {
        let p = self.point(x)?;
        let d = self.signed_distance(p);
        if d < -BOUNDARY_TOL {
            return Err(Error::OutsideDomain { excess: -d });
        }
        Ok(d.max(0.0))
    }

    /// Radius of the largest inscribed ball.
    pub fn inradius(&self) -> f64 {
        match self {
            Domain::Interval { a, b } => 0.5 * (b - a),
            Domain::Disk { radius, .. } => *radius,
            Domain::Polygon { vertices } => chebyshev_center(vertices).1,
        }
    }

    /// A point that is as deep inside the domain as possible.
    pub fn center(&self) -> Point {
        match self {
            Domain::Interval { a, b } => [0.5 * (a + b), 0.0],
            Domain::Disk { center, .. } => *center,
            Domain::Polygon { vertices } => chebyshev_center(vertices).0,
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            Domain::Interval { a, b } => ([*a, 0.0], [*b, 0.0]),
            Domain::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Domain::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// A handful of boundary points spread around `∂Ω`.
    pub fn boundary_points(&self, count: usize) -> Vec<Point> {
        match self {
            Domain::Interval { a, b } => vec![[*a, 0.0], [*b, 0.0]],
            Domain::Disk { center, radius } => (0..count.max(1))
                .map(|k| {
                    let th = core::f64::consts::TAU * k as f64 / count.max(1) as f64;
                    [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
                })
                .collect(),
            Domain::Polygon { vertices } => {
                let n = vertices.len();
                let mut out = Vec::new();
                let per_edge = count.div_ceil(n).max(1);
                for i in 0..n {
                    let (p, q) = (vertices[i], vertices[(i + 1) % n]);
                    for k in 0..per_edge {
                        let s = (k as f64 + 0.5) / per_edge as f64;
                        out.push([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]);
                    }
                }
                out
            }
        }
    }

    /// Origin of the lattice used by [`Domain::build_grid`].
    fn lattice_origin(&self) -> Point {
        match self {
            Domain::Disk { center, .. } => *center,
            _ => self.bounding_box().0,
        }
    }

    /// Uniform lattice of spacing `h` clipped to the domain.
    ///
    /// Nodes are the lattice points of the closed domain together with the
    /// lattice neighbours of interior nodes lying outside it; every node that
    /// is not strictly inside carries the Dirichlet value 0.
    pub fn build_grid(&self, h: f64) -> Result<SpaceGrid> {
        self.validate()?;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grid spacing must be positive, got {h}"
            )));
        }
        let inradius = self.inradius();
        if h > inradius {
            return Err(Error::GridTooCoarse {
                h,
                reason: format!("exceeds the inradius {inradius}"),
            });
        }
        let dim = self.dim();
        let origin = self.lattice_origin();
        let (lo, hi) = self.bounding_box();
        let index_range = |k: usize| -> (i64, i64) {
            if k >= dim {
                return (0, 0);
            }
            let a = ((lo[k] - origin[k]) / h).floor() as i64 - 1;
            let b = ((hi[k] - origin[k]) / h).ceil() as i64 + 1;
            (a, b)
        };
        let (i0, i1) = index_range(0);
        let (j0, j1) = index_range(1);
        let nx = (i1 - i0 + 1) as usize;
        let ny = (j1 - j0 + 1) as usize;
        let coord = |i: i64, j: i64| -> Point {
            [
                origin[0] + i as f64 * h,
                if dim == 2 { origin[1] + j as f64 * h } else { 0.0 },
            ]
        };

        // classify every lattice point: 2 = interior, 1 = closure, 0 = outside
        let mut class = vec![0u8; nx * ny];
        for jj in 0..ny {
            for ii in 0..nx {
                let p = coord(i0 + ii as i64, j0 + jj as i64);
                let d = self.signed_distance(p);
                class[jj * nx + ii] = if d > BOUNDARY_TOL {
                    2
                } else if d >= -BOUNDARY_TOL {
                    1
                } else {
                    0
                };
            }
        }
        let neighbours = |ii: usize, jj: usize| -> Vec<(usize, usize)> {
            let mut v = Vec::with_capacity(4);
            if ii > 0 {
                v.push((ii - 1, jj));
            }
            if ii + 1 < nx {
                v.push((ii + 1, jj));
            }
            if dim == 2 {
                if jj > 0 {
                    v.push((ii, jj - 1));
                }
                if jj + 1 < ny {
                    v.push((ii, jj + 1));
                }
            }
            v
        };
        let mut keep = class.iter().map(|&c| c > 0).collect::<Vec<_>>();
        for jj in 0..ny {
            for ii in 0..nx {
                if class[jj * nx + ii] == 2 {
                    for (a, b) in neighbours(ii, jj) {
                        keep[b * nx + a] = true;
                    }
                }
            }
        }

        let mut grid = SpaceGrid {
            domain: self.clone(),
            dim,
            h,
            origin,
            lattice_min: [i0, j0],
            shape: [nx, ny],
            coords: Vec::new(),
            lattice: Vec::new(),
            interior: Vec::new(),
            distance: Vec::new(),
            lookup: vec![NO_NODE; nx * ny],
            unknown_of: Vec::new(),
            unknowns: Vec::new(),
        };
        for jj in 0..ny {
            for ii in 0..nx {
                let cell = jj * nx + ii;
                if !keep[cell] {
                    continue;
                }
                let (i, j) = (i0 + ii as i64, j0 + jj as i64);
                let p = coord(i, j);
                let node = grid.coords.len();
                grid.lookup[cell] = node as u32;
                grid.coords.push(p);
                grid.lattice.push([i, j]);
                let inside = class[cell] == 2;
                grid.interior.push(inside);
                grid.distance.push(if inside { self.signed_distance(p) } else { 0.0 });
                if inside {
                    grid.unknown_of.push(grid.unknowns.len());
                    grid.unknowns.push(node);
                } else {
                    grid.unknown_of.push(usize::MAX);
                }
            }
        }
        if grid.unknowns.is_empty() {
            return Err(Error::GridTooCoarse {
                h,
                reason: "no lattice point lies strictly inside the domain".to_string(),
            });
        }
        Ok(grid)
    }
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n)
        .map(|i| v[i][0] * v[(i + 1) % n][1] - v[(i + 1) % n][0] * v[i][1])
        .sum::<f64>()
}

fn segment_distance(p: Point, q: Point, x: Point) -> f64 {
    let d = [q[0] - p[0], q[1] - p[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let s = (((x[0] - p[0]) * d[0] + (x[1] - p[1]) * d[1]) / len2).clamp(0.0, 1.0);
    norm([x[0] - p[0] - s * d[0], x[1] - p[1] - s * d[1]])
}

/// Largest inscribed disk of a convex polygon: the optimum of the linear
/// program `max r` s.t. every edge line is at distance `≥ r`, found by
/// enumerating vertices of the feasible set (three active constraints).
fn chebyshev_center(v: &[Point]) -> (Point, f64) {
    let n = v.len();
    // inward unit normals n_i and offsets c_i with n_i·x - c_i = line distance
    let lines: Vec<(Point, f64)> = (0..n)
        .map(|i| {
            let (p, q) = (v[i], v[(i + 1) % n]);
            let len = norm([q[0] - p[0], q[1] - p[1]]);
            let nrm = [-(q[1] - p[1]) / len, (q[0] - p[0]) / len];
            (nrm, nrm[0] * p[0] + nrm[1] * p[1])
        })
        .collect();
    let mut best = (v[0], 0.0);
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                // n_k·x - r = c_k for k in {a, b, c}
                let rows = [lines[a], lines[b], lines[c]];
                let m = [
                    [rows[0].0[0], rows[0].0[1], -1.0],
                    [rows[1].0[0], rows[1].0[1], -1.0],
                    [rows[2].0[0], rows[2].0[1], -1.0],
                ];
                let rhs = [rows[0].1, rows[1].1, rows[2].1];
                if let Some(sol) = solve3(m, rhs) {
                    let x = [sol[0], sol[1]];
                    let r = sol[2];
                    let feasible = lines
                        .iter()
                        .all(|(nn, cc)| nn[0] * x[0] + nn[1] * x[1] - cc >= r - 1e-12);
                    if feasible && r > best.1 {
                        best = (x, r);
                    }
                }
            }
        }
    }
    best
}

fn solve3(m: [[f64; 3]; 3], r: [f64; 3]) -> Option<[f64; 3]> {
    let det = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(m);
    if d.abs() < 1e-14 {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for row in 0..3 {
            mk[row][k] = r[row];
        }
        *o = det(mk) / d;
    }
    Some(out)
}

const NO_NODE: u32 = u32::MAX;

/// Interpolation stencil: up to four `(node, weight)` pairs. Missing lattice
/// points carry the Dirichlet value 0 and are dropped.
#[derive(Clone, Copy, Debug, Default)]
pub struct Stencil {
    pub nodes: [usize; 4],
    pub weights: [f64; 4],
    pub len: usize,
}

impl Stencil {
    #[inline]
    pub fn apply(&self, values: &[f64]) -> f64 {
        (0..self.len).map(|k| self.weights[k] * values[self.nodes[k]]).sum()
    }

    fn push(&mut self, node: usize, weight: f64) {
        if weight != 0.0 {
            self.nodes[self.len] = node;
            self.weights[self.len] = weight;
            self.len += 1;
        }
    }
}

/// A uniform lattice clipped to a convex domain.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceGrid {
    domain: Domain,
    dim: usize,
    h: f64,
    origin: Point,
    lattice_min: [i64; 2],
    shape: [usize; 2],
    coords: Vec<Point>,
    lattice: Vec<[i64; 2]>,
    interior: Vec<bool>,
    distance: Vec<f64>,
    lookup: Vec<u32>,
    unknown_of: Vec<usize>,
    unknowns: Vec<usize>,
}

impl SpaceGrid {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn is_interior(&self, node: usize) -> bool {
        self.interior[node]
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior
    }

    /// Distance to `∂Ω` per node (0 on boundary-flagged nodes).
    pub fn boundary_distances(&self) -> &[f64] {
        &self.distance
    }

    /// Node indices of the interior nodes, in unknown order.
    pub fn unknowns(&self) -> &[usize] {
        &self.unknowns
    }

    pub(crate) fn unknown_of(&self, node: usize) -> Option<usize> {
        let u = self.unknown_of[node];
        (u != usize::MAX).then_some(u)
    }

    pub fn lattice_index(&self, node: usize) -> [i64; 2] {
        self.lattice[node]
    }

    /// Lattice index range `[min, max]` per axis (axis 1 is `[0, 0]` in 1D).
    pub fn lattice_bounds(&self) -> ([i64; 2], [i64; 2]) {
        (
            self.lattice_min,
            [
                self.lattice_min[0] + self.shape[0] as i64 - 1,
                self.lattice_min[1] + self.shape[1] as i64 - 1,
            ],
        )
    }

    /// Node at lattice index `(i, j)`, if it belongs to the grid.
    pub fn node_at(&self, i: i64, j: i64) -> Option<usize> {
        let ii = i - self.lattice_min[0];
        let jj = j - self.lattice_min[1];
        if ii < 0 || jj < 0 || ii as usize >= self.shape[0] || jj as usize >= self.shape[1] {
            return None;
        }
        let n = self.lookup[jj as usize * self.shape[0] + ii as usize];
        (n != NO_NODE).then_some(n as usize)
    }

    /// Lattice neighbours of `node` that belong to the grid.
    pub fn neighbours(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        let [i, j] = self.lattice[node];
        let offsets: &[(i64, i64)] = if self.dim == 1 {
            &[(-1, 0), (1, 0)]
        } else {
            &[(-1, 0), (1, 0), (0, -1), (0, 1)]
        };
        offsets.iter().filter_map(move |(di, dj)| self.node_at(i + di, j + dj))
    }

    /// Number of lattice neighbours a node has in the full lattice.
    pub(crate) fn stencil_size(&self) -> usize {
        2 * self.dim
    }

    /// Fractional lattice coordinates of `x`.
    pub fn lattice_coords(&self, x: Point) -> [f64; 2] {
        [
            (x[0] - self.origin[0]) / self.h,
            if self.dim == 2 {
                (x[1] - self.origin[1]) / self.h
            } else {
                0.0
            },
        ]
    }

    /// Multilinear interpolation weights at `x`, which must lie in `Ω̄`.
    pub fn stencil(&self, x: Point) -> Result<Stencil> {
        let d = self.domain.signed_distance(x);
        if d < -1e-9 * self.h.max(1.0) {
            return Err(Error::OutsideDomain { excess: -d });
        }
        Ok(self.stencil_unchecked(x))
    }

    pub(crate) fn stencil_unchecked(&self, x: Point) -> Stencil {
        let [fx, fy] = self.lattice_coords(x);
        let i = fx.floor();
        let sx = fx - i;
        let mut st = Stencil::default();
        if self.dim == 1 {
            let i = i as i64;
            if let Some(n) = self.node_at(i, 0) {
                st.push(n, 1.0 - sx);
            }
            if let Some(n) = self.node_at(i + 1, 0) {
                st.push(n, sx);
            }
        } else {
            let j = fy.floor();
            let sy = fy - j;
            let (i, j) = (i as i64, j as i64);
            for (di, dj, w) in [
                (0, 0, (1.0 - sx) * (1.0 - sy)),
                (1, 0, sx * (1.0 - sy)),
                (0, 1, (1.0 - sx) * sy),
                (1, 1, sx * sy),
            ] {
                if let Some(n) = self.node_at(i + di, j + dj) {
                    st.push(n, w);
                }
            }
        }
        st
    }

    /// Interpolates nodal `values` at `x ∈ Ω̄`.
    pub fn interpolate(&self, values: &[f64], x: Point) -> Result<f64> {
        Ok(self.stencil(x)?.apply(values))
    }
}
