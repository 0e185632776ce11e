//! Convex hulls in dimension `D ≤ 5` (quickhull) and upper concave
//! envelopes of point clouds `(y, v) ∈ R^{D-1} × R`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result};

/// Distance below which a point counts as on a facet, in coordinates
/// normalized to the unit box.
pub const HULL_EPS: f64 = 1e-10;

#[derive(Clone, Debug)]
struct Facet<const D: usize> {
    verts: [usize; D],
    normal: [f64; D],
    offset: f64,
    /// `neighbors[i]` shares the ridge opposite `verts[i]`.
    neighbors: [usize; D],
    outside: Vec<usize>,
    alive: bool,
}

impl<const D: usize> Facet<D> {
    fn distance(&self, x: &[f64; D]) -> f64 {
        dot(&self.normal, x) - self.offset
    }
}

fn dot<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Determinant of the leading `n × n` block, by partial pivoting.
fn det(m: &mut [[f64; 4]; 4], n: usize) -> f64 {
    let mut d = 1.0;
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
            .unwrap_or(c);
        if m[piv][c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            m.swap(piv, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    d
}

/// Unit normal through `verts`, oriented away from `inside`.
fn plane<const D: usize>(pts: &[[f64; D]], verts: &[usize; D], inside: &[f64; D]) -> ([f64; D], f64) {
    let base = pts[verts[0]];
    let mut rows = [[0.0; D]; D];
    for j in 1..D {
        for k in 0..D {
            rows[j - 1][k] = pts[verts[j]][k] - base[k];
        }
    }
    let mut normal = [0.0; D];
    for (i, n) in normal.iter_mut().enumerate() {
        let mut m = [[0.0; 4]; 4];
        for r in 0..D - 1 {
            for (c2, c) in (0..D).filter(|&c| c != i).enumerate() {
                m[r][c2] = rows[r][c];
            }
        }
        let d = det(&mut m, D - 1);
        *n = if i % 2 == 0 { d } else { -d };
    }
    let len = dot(&normal, &normal).sqrt();
    if len > 0.0 {
        normal.iter_mut().for_each(|v| *v /= len);
    }
    let mut offset = dot(&normal, &base);
    if dot(&normal, inside) > offset {
        normal.iter_mut().for_each(|v| *v = -*v);
        offset = -offset;
    }
    (normal, offset)
}

/// Ridge key: sorted vertex indices padded with `usize::MAX`.
fn ridge_key<const D: usize>(verts: &[usize; D], skip: usize) -> [usize; D] {
    let mut key = [usize::MAX; D];
    let mut k = 0;
    for (i, &v) in verts.iter().enumerate() {
        if i != skip {
            key[k] = v;
            k += 1;
        }
    }
    key[..k].sort_unstable();
    key
}

/// Convex hull of a point set, simplicial facets with outward unit normals.
#[derive(Clone, Debug)]
pub struct Hull<const D: usize> {
    points: Vec<[f64; D]>,
    facets: Vec<Facet<D>>,
}

/// Greedy initial simplex; `None` if the points span less than `D`
/// dimensions.
fn initial_simplex<const D: usize>(pts: &[[f64; D]]) -> Option<Vec<usize>> {
    let first = (0..pts.len()).min_by(|&a, &b| pts[a][0].total_cmp(&pts[b][0]))?;
    let mut chosen = vec![first];
    let mut basis: Vec<[f64; D]> = Vec::new();
    let origin = pts[first];
    for _ in 0..D {
        let mut best = (0.0, usize::MAX, [0.0; D]);
        for (i, p) in pts.iter().enumerate() {
            let mut r = [0.0; D];
            for k in 0..D {
                r[k] = p[k] - origin[k];
            }
            for b in &basis {
                let c = dot(&r, b);
                for k in 0..D {
                    r[k] -= c * b[k];
                }
            }
            let n = dot(&r, &r).sqrt();
            if n > best.0 {
                best = (n, i, r);
            }
        }
        if best.0 <= HULL_EPS {
            return None;
        }
        let (n, i, mut r) = best;
        r.iter_mut().for_each(|v| *v /= n);
        basis.push(r);
        chosen.push(i);
    }
    Some(chosen)
}

impl<const D: usize> Hull<D> {
    /// Builds the hull; `Ok(None)` when the points are affinely degenerate.
    pub fn build(points: &[[f64; D]]) -> Result<Option<Self>> {
        assert!((2..=5).contains(&D), "hull dimension must be in 2..=5");
        let pts = points.to_vec();
        let Some(simplex) = initial_simplex(&pts) else {
            return Ok(None);
        };
        let mut inside = [0.0; D];
        for &v in &simplex {
            for k in 0..D {
                inside[k] += pts[v][k] / (D + 1) as f64;
            }
        }

        let mut facets: Vec<Facet<D>> = Vec::new();
        for omit in 0..=D {
            let mut verts = [0; D];
            let mut neighbors = [0; D];
            let mut k = 0;
            for (j, &v) in simplex.iter().enumerate() {
                if j != omit {
                    verts[k] = v;
                    neighbors[k] = j;
                    k += 1;
                }
            }
            let (normal, offset) = plane(&pts, &verts, &inside);
            facets.push(Facet {
                verts,
                normal,
                offset,
                neighbors,
                outside: Vec::new(),
                alive: true,
            });
        }
        let in_simplex = |i: usize| simplex.contains(&i);
        for i in 0..pts.len() {
            if in_simplex(i) {
                continue;
            }
            if let Some(f) = facets.iter_mut().find(|f| f.distance(&pts[i]) > HULL_EPS) {
                f.outside.push(i);
            }
        }

        let mut hull = Hull { points: pts, facets };
        hull.expand(inside)?;
        hull.facets.retain(|f| f.alive);
        Ok(Some(hull))
    }

    fn expand(&mut self, inside: [f64; D]) -> Result<()> {
        let mut stack: Vec<usize> = (0..self.facets.len())
            .filter(|&i| !self.facets[i].outside.is_empty())
            .collect();
        let mut visible_mark: Vec<u32> = vec![0; self.facets.len()];
        let mut seen_mark: Vec<u32> = vec![0; self.facets.len()];
        let mut epoch = 0u32;
        while let Some(fi) = stack.pop() {
            if !self.facets[fi].alive || self.facets[fi].outside.is_empty() {
                continue;
            }
            epoch += 1;
            let apex = {
                let f = &self.facets[fi];
                *f.outside
                    .iter()
                    .max_by(|&&a, &&b| f.distance(&self.points[a]).total_cmp(&f.distance(&self.points[b])))
                    .expect("nonempty outside set")
            };
            let p = self.points[apex];

            let mut visible = vec![fi];
            visible_mark[fi] = epoch;
            seen_mark[fi] = epoch;
            let mut head = 0;
            while head < visible.len() {
                let f = visible[head];
                head += 1;
                for nb in self.facets[f].neighbors {
                    if seen_mark[nb] == epoch {
                        continue;
                    }
                    seen_mark[nb] = epoch;
                    if self.facets[nb].distance(&p) > HULL_EPS {
                        visible_mark[nb] = epoch;
                        visible.push(nb);
                    }
                }
            }

            let first_new = self.facets.len();
            let mut ridges: BTreeMap<[usize; D], (usize, usize)> = BTreeMap::new();
            for &f in &visible {
                for i in 0..D {
                    let nb = self.facets[f].neighbors[i];
                    if visible_mark[nb] == epoch {
                        continue;
                    }
                    let mut verts = [0; D];
                    let mut k = 0;
                    for (j, &v) in self.facets[f].verts.iter().enumerate() {
                        if j != i {
                            verts[k] = v;
                            k += 1;
                        }
                    }
                    verts[D - 1] = apex;
                    let (normal, offset) = plane(&self.points, &verts, &inside);
                    let id = self.facets.len();
                    let mut neighbors = [usize::MAX; D];
                    neighbors[D - 1] = nb;
                    let slot = self.facets[nb]
                        .neighbors
                        .iter()
                        .position(|&x| x == f)
                        .ok_or_else(|| Error::Hull(format!("facet {nb} lost its link to {f}")))?;
                    self.facets[nb].neighbors[slot] = id;
                    for k in 0..D - 1 {
                        let key = ridge_key(&verts, k);
                        if let Some((other, other_slot)) = ridges.remove(&key) {
                            neighbors[k] = other;
                            self.facets[other].neighbors[other_slot] = id;
                        } else {
                            ridges.insert(key, (id, k));
                        }
                    }
                    self.facets.push(Facet {
                        verts,
                        normal,
                        offset,
                        neighbors,
                        outside: Vec::new(),
                        alive: true,
                    });
                }
            }
            if !ridges.is_empty() {
                return Err(Error::Hull(format!("{} unmatched horizon ridges", ridges.len())));
            }
            visible_mark.resize(self.facets.len(), 0);
            seen_mark.resize(self.facets.len(), 0);

            let mut orphans = Vec::new();
            for &f in &visible {
                self.facets[f].alive = false;
                orphans.append(&mut self.facets[f].outside);
            }
            for q in orphans {
                if q == apex {
                    continue;
                }
                let x = self.points[q];
                if let Some(f) = (first_new..self.facets.len()).find(|&f| self.facets[f].distance(&x) > HULL_EPS) {
                    self.facets[f].outside.push(q);
                }
            }
            stack.extend((first_new..self.facets.len()).filter(|&f| !self.facets[f].outside.is_empty()));
        }
        Ok(())
    }

    pub fn facet_count(&self) -> usize {
        self.facets.len()
    }

    /// Sorted indices of the input points that are hull vertices.
    pub fn vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.facets.iter().flat_map(|f| f.verts).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Outward unit normals and offsets, `n·x ≤ c` inside.
    pub fn planes(&self) -> impl Iterator<Item = (&[f64; D], f64)> + '_ {
        self.facets.iter().map(|f| (&f.normal, f.offset))
    }

    /// Checks that facets are distinct and every ridge borders exactly two
    /// facets.
    pub fn is_consistent(&self) -> bool {
        let index: BTreeMap<[usize; D], usize> = self
            .facets
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let mut k = f.verts;
                k.sort_unstable();
                (k, i)
            })
            .collect();
        if index.len() != self.facets.len() {
            return false;
        }
        let mut ridges: BTreeMap<[usize; D], usize> = BTreeMap::new();
        for f in &self.facets {
            for i in 0..D {
                *ridges.entry(ridge_key(&f.verts, i)).or_default() += 1;
            }
        }
        ridges.values().all(|&c| c == 2)
    }
}

/// Upper concave envelope of `(y_i, v_i)`, evaluated at every input point.
///
/// Coordinates are normalized to the unit box first (the hull is affine
/// invariant). Returns `max(v_i, envelope(y_i))`; for affinely degenerate
/// inputs the values themselves.
pub fn upper_concave_envelope<const D: usize>(points: &[[f64; D]]) -> Result<Vec<f64>> {
    let heights: Vec<f64> = points.iter().map(|p| p[D - 1]).collect();
    if points.len() <= D {
        return Ok(heights);
    }
    let mut lo = [f64::INFINITY; D];
    let mut hi = [f64::NEG_INFINITY; D];
    for p in points {
        for k in 0..D {
            if !p[k].is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite hull coordinate {}", p[k])));
            }
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if (0..D).any(|k| !(hi[k] > lo[k])) {
        return Ok(heights);
    }
    let scaled: Vec<[f64; D]> = points
        .iter()
        .map(|p| {
            let mut q = [0.0; D];
            for k in 0..D {
                q[k] = (p[k] - lo[k]) / (hi[k] - lo[k]);
            }
            q
        })
        .collect();
    let Some(hull) = Hull::build(&scaled)? else {
        return Ok(heights);
    };
    let upper = UpperEnvelope::new(&hull);
    let span = hi[D - 1] - lo[D - 1];
    Ok(scaled
        .iter()
        .zip(&heights)
        .map(|(q, &h)| {
            let e = upper.eval(&q[..D - 1]).map_or(h, |v| lo[D - 1] + v * span);
            e.max(h)
        })
        .collect())
}

/// Upper facets as height functions with a bucket index over their
/// projected bounding boxes.
struct UpperEnvelope<const D: usize> {
    /// `v = (c - Σ n_i y_i) / n_last`.
    planes: Vec<([f64; D], f64)>,
    boxes: Vec<([f64; D], [f64; D])>,
    cells: usize,
    buckets: Vec<Vec<u32>>,
}

const BOX_SLACK: f64 = 1e-9;

impl<const D: usize> UpperEnvelope<D> {
    fn new(hull: &Hull<D>) -> Self {
        let mut planes = Vec::new();
        let mut boxes = Vec::new();
        for f in &hull.facets {
            if f.normal[D - 1] <= 1e-12 {
                continue;
            }
            let mut lo = [f64::INFINITY; D];
            let mut hi = [f64::NEG_INFINITY; D];
            for &v in &f.verts {
                for k in 0..D - 1 {
                    lo[k] = lo[k].min(hull.points[v][k]);
                    hi[k] = hi[k].max(hull.points[v][k]);
                }
            }
            planes.push((f.normal, f.offset));
            boxes.push((lo, hi));
        }
        let dims = D - 1;
        let cells = ((planes.len() as f64).powf(1.0 / dims as f64).ceil() as usize).clamp(1, 256);
        let total = cells.pow(dims as u32);
        let mut buckets = vec![Vec::new(); total];
        let cell_of = |x: f64| ((x * cells as f64).floor().max(0.0) as usize).min(cells - 1);
        for (id, (lo, hi)) in boxes.iter().enumerate() {
            let mut a = [0usize; D];
            let mut b = [0usize; D];
            for k in 0..dims {
                a[k] = cell_of(lo[k] - BOX_SLACK);
                b[k] = cell_of(hi[k] + BOX_SLACK);
            }
            let mut idx = a;
            loop {
                let mut flat = 0;
                for k in (0..dims).rev() {
                    flat = flat * cells + idx[k];
                }
                buckets[flat].push(id as u32);
                let mut k = 0;
                while k < dims {
                    if idx[k] < b[k] {
                        idx[k] += 1;
                        break;
                    }
                    idx[k] = a[k];
                    k += 1;
                }
                if k == dims {
                    break;
                }
            }
        }
        UpperEnvelope {
            planes,
            boxes,
            cells,
            buckets,
        }
    }

    fn height(&self, id: usize, y: &[f64]) -> f64 {
        let (n, c) = &self.planes[id];
        let s: f64 = y.iter().zip(n).map(|(a, b)| a * b).sum();
        (c - s) / n[D - 1]
    }

    fn eval(&self, y: &[f64]) -> Option<f64> {
        if self.planes.is_empty() {
            return None;
        }
        let dims = D - 1;
        let mut flat = 0;
        for k in (0..dims).rev() {
            let c = ((y[k] * self.cells as f64).floor().max(0.0) as usize).min(self.cells - 1);
            flat = flat * self.cells + c;
        }
        let mut best = f64::INFINITY;
        for &id in &self.buckets[flat] {
            let (lo, hi) = &self.boxes[id as usize];
            if (0..dims).all(|k| y[k] >= lo[k] - BOX_SLACK && y[k] <= hi[k] + BOX_SLACK) {
                best = best.min(self.height(id as usize, y));
            }
        }
        if best.is_finite() {
            return Some(best);
        }
        (0..self.planes.len()).map(|id| self.height(id, y)).reduce(f64::min)
    }
}
