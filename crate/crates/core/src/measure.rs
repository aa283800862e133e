//! Points, datasets, dissimilarity measures and the cost function.
//!
//! A [`Measure`] is a dissimilarity together with the constants the solver
//! relies on: the approximate triangle-inequality factor `alpha`, the
//! approximate symmetry factor `beta`, and the sample-size function `f(γ, δ)`
//! of the sampling property. The constants are declared, not verified; the
//! `check_*` functions spot-check them on caller-supplied tuples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense point with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        validate_coords(&coords)?;
        Ok(Self(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Point::new(coords)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

fn validate_coords(coords: &[f64]) -> Result<()> {
    if coords.is_empty() {
        return Err(Error::ZeroDimension);
    }
    if let Some((position, &value)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { position, value });
    }
    Ok(())
}

/// Row-major storage shared by [`Dataset`] and [`CenterSet`].
#[derive(Debug, Clone, PartialEq)]
struct Rows {
    dim: usize,
    coords: Vec<f64>,
}

impl Rows {
    fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if dim == 0 && !rows.is_empty() {
            return Err(Error::ZeroDimension);
        }
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
            validate_coords(row)?;
            coords.extend_from_slice(row);
        }
        Ok(Self { dim, coords })
    }

    fn len(&self) -> usize {
        self.coords.len().checked_div(self.dim).unwrap_or(0)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size; an empty center set has dim > 0 anyway.
        self.coords.chunks_exact(self.dim.max(1))
    }

    fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }
}

/// An indexed collection of `n ≥ 1` points sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Rows,
}

impl Dataset {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        Ok(Self { rows: Rows::from_rows(rows)? })
    }

    pub fn from_points(points: &[Point]) -> Result<Self> {
        Self::from_rows(points)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Always false; kept for the `len`/`is_empty` pairing.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.rows.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.rows.row(i)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.rows.iter()
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.rows.to_vecs()
    }

    /// The same points in the order given by `order` (a permutation of `0..n`).
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let rows: Vec<&[f64]> = order.iter().map(|&i| self.point(i)).collect();
        Self::from_rows(&rows)
    }
}

/// An ordered, possibly empty, set of centers of a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterSet {
    rows: Rows,
}

impl CenterSet {
    pub fn empty(dim: usize) -> Self {
        Self { rows: Rows { dim, coords: Vec::new() } }
    }

    pub fn from_rows<R: AsRef<[f64]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let mut set = Self::empty(dim);
        for row in rows {
            set.push(row.as_ref())?;
        }
        Ok(set)
    }

    pub fn push(&mut self, center: &[f64]) -> Result<()> {
        if center.len() != self.rows.dim {
            return Err(Error::DimensionMismatch { expected: self.rows.dim, got: center.len() });
        }
        validate_coords(center)?;
        self.rows.coords.extend_from_slice(center);
        Ok(())
    }

    /// Removes the most recently pushed center.
    pub fn pop(&mut self) -> bool {
        let len = self.rows.coords.len();
        if len == 0 {
            return false;
        }
        self.rows.coords.truncate(len - self.rows.dim);
        true
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.dim
    }

    pub fn center(&self, i: usize) -> &[f64] {
        self.rows.row(i)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.rows.iter()
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.rows.to_vecs()
    }
}

/// A dissimilarity measure with its declared approximation constants.
pub trait Measure: Sync {
    /// `D(p, q)`. Callers guarantee equal lengths.
    fn dissimilarity(&self, p: &[f64], q: &[f64]) -> f64;

    /// Factor of the approximate triangle inequality, `alpha ≥ 1`.
    fn alpha(&self) -> f64;

    /// Factor of the approximate symmetry, `0 < beta ≤ 1`.
    fn beta(&self) -> f64;

    /// Integer sample size `f(γ, δ)` for the sampling property.
    fn sample_size(&self, gamma: f64, delta: f64) -> u64;
}

/// Squared Euclidean distance, the k-means measure.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SquaredEuclidean;

impl Measure for SquaredEuclidean {
    #[inline]
    fn dissimilarity(&self, p: &[f64], q: &[f64]) -> f64 {
        sq_dist(p, q)
    }

    fn alpha(&self) -> f64 {
        2.0
    }

    fn beta(&self) -> f64 {
        1.0
    }

    /// `ceil(1 / (γ·δ))`.
    fn sample_size(&self, gamma: f64, delta: f64) -> u64 {
        ceil_to_count(1.0 / (gamma * delta))
    }
}

/// Ceiling that treats values within 1e-9 relative of an integer as that integer,
/// so that e.g. `1 / (0.03125 · 0.2)` yields 160 rather than 161.
pub(crate) fn ceil_to_count(x: f64) -> u64 {
    let nearest = x.round();
    let snapped = if (x - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) { nearest } else { x.ceil() };
    // `as` saturates for out-of-range floats.
    snapped.max(1.0) as u64
}

/// Unchecked squared Euclidean distance between equal-length slices.
#[inline]
pub fn sq_dist(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn sq_euclidean(p: &Point, q: &Point) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    Ok(sq_dist(p.as_slice(), q.as_slice()))
}

/// Index and dissimilarity of the center nearest to `p`; first index wins ties.
pub fn nearest_center<M: Measure + ?Sized>(p: &[f64], centers: &CenterSet, measure: &M) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = measure.dissimilarity(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// `Δ(P, C)`: the sum over points of the dissimilarity to the nearest center.
pub fn cost<M: Measure + ?Sized>(data: &Dataset, centers: &CenterSet, measure: &M) -> Result<f64> {
    if centers.is_empty() {
        return Err(Error::Empty("center set"));
    }
    if centers.dim() != data.dim() {
        return Err(Error::DimensionMismatch { expected: data.dim(), got: centers.dim() });
    }
    Ok(data.iter().map(|p| nearest_center(p, centers, measure).1).sum())
}

/// Coordinate-wise mean of a nonempty multiset; duplicates count with multiplicity.
pub fn centroid<R: AsRef<[f64]>>(points: &[R]) -> Result<Point> {
    let first = points.first().ok_or(Error::Empty("centroid input"))?.as_ref();
    let mut sum = vec![0.0; first.len()];
    for p in points {
        let p = p.as_ref();
        if p.len() != sum.len() {
            return Err(Error::DimensionMismatch { expected: sum.len(), got: p.len() });
        }
        for (s, x) in sum.iter_mut().zip(p) {
            *s += x;
        }
    }
    let count = points.len() as f64;
    sum.iter_mut().for_each(|s| *s /= count);
    Point::new(sum)
}

/// Writes the mean of `data[indices]` into `out`.
pub(crate) fn centroid_of_indices(data: &Dataset, indices: impl ExactSizeIterator<Item = usize>, out: &mut [f64]) {
    out.fill(0.0);
    let count = indices.len() as f64;
    for i in indices {
        for (o, x) in out.iter_mut().zip(data.point(i)) {
            *o += x;
        }
    }
    out.iter_mut().for_each(|o| *o /= count);
}

/// Spot-checks `Δ(P, c) = Δ(P, Γ(P)) + |P|·D(Γ(P), c)` at relative tolerance `rel_tol`.
pub fn check_centroid_property<M: Measure + ?Sized>(
    data: &Dataset,
    c: &[f64],
    measure: &M,
    rel_tol: f64,
) -> Result<bool> {
    Ok(centroid_property_gap(data, c, measure)? <= rel_tol)
}

/// Relative gap between the two sides of the centroid identity, scaled by `max(1, Δ(P, c))`.
pub fn centroid_property_gap<M: Measure + ?Sized>(data: &Dataset, c: &[f64], measure: &M) -> Result<f64> {
    if c.len() != data.dim() {
        return Err(Error::DimensionMismatch { expected: data.dim(), got: c.len() });
    }
    let mean = centroid(&data.iter().collect::<Vec<_>>())?;
    let mean = mean.as_slice();
    let lhs: f64 = data.iter().map(|p| measure.dissimilarity(p, c)).sum();
    let one_center: f64 = data.iter().map(|p| measure.dissimilarity(p, mean)).sum();
    let rhs = one_center + data.len() as f64 * measure.dissimilarity(mean, c);
    Ok((lhs - rhs).abs() / lhs.max(1.0))
}

/// Slack applied to the triangle-inequality comparison to absorb one rounding step.
const TRIANGLE_ROUNDING_SLACK: f64 = 1e-12;

/// Outcome of checking approximate symmetry and the approximate triangle inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TupleCheck {
    pub tuples: usize,
    pub symmetry_violations: usize,
    pub triangle_violations: usize,
    /// Largest observed `D(p,q) / (D(p,r) + D(r,q))`; at most `alpha` when the inequality holds.
    pub worst_triangle_ratio: f64,
}

impl TupleCheck {
    pub fn passed(&self) -> bool {
        self.symmetry_violations == 0 && self.triangle_violations == 0
    }
}

/// Checks each `(p, q, r)`: `β·D(q,p) ≤ D(p,q) ≤ D(q,p)/β` and `D(p,q) ≤ α·(D(p,r) + D(r,q))`.
pub fn inspect_tuples<M: Measure + ?Sized, R: AsRef<[f64]>>(triples: &[(R, R, R)], measure: &M) -> TupleCheck {
    let (alpha, beta) = (measure.alpha(), measure.beta());
    let mut check = TupleCheck { tuples: triples.len(), symmetry_violations: 0, triangle_violations: 0, worst_triangle_ratio: 0.0 };
    for (p, q, r) in triples {
        let (p, q, r) = (p.as_ref(), q.as_ref(), r.as_ref());
        let pq = measure.dissimilarity(p, q);
        let qp = measure.dissimilarity(q, p);
        if !(beta * qp <= pq && pq <= qp / beta) {
            check.symmetry_violations += 1;
        }
        let detour = measure.dissimilarity(p, r) + measure.dissimilarity(r, q);
        if pq > alpha * detour * (1.0 + TRIANGLE_ROUNDING_SLACK) {
            check.triangle_violations += 1;
        }
        if detour > 0.0 {
            check.worst_triangle_ratio = check.worst_triangle_ratio.max(pq / detour);
        }
    }
    check
}

pub fn check_symmetry_and_triangle<M: Measure + ?Sized, R: AsRef<[f64]>>(triples: &[(R, R, R)], measure: &M) -> bool {
    inspect_tuples(triples, measure).passed()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn ds(rows: &[&[f64]]) -> Dataset {
        Dataset::from_rows(rows).unwrap()
    }

    #[test]
    fn sq_euclidean_examples() {
        assert_eq!(sq_euclidean(&pt(&[0.0, 0.0]), &pt(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(sq_euclidean(&pt(&[0.0, 0.0]), &pt(&[3.0, 4.0])).unwrap(), 25.0);
        let (a, b) = (pt(&[1.0, 2.0]), pt(&[-0.5, 7.25]));
        assert_eq!(sq_euclidean(&a, &b).unwrap(), sq_euclidean(&b, &a).unwrap());
    }

    #[test]
    fn sq_euclidean_rejects_mismatched_dims() {
        let err = sq_euclidean(&pt(&[0.0]), &pt(&[0.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 1, got: 2 }));
    }

    #[test]
    fn point_validation() {
        assert!(matches!(Point::new(vec![]), Err(Error::ZeroDimension)));
        assert!(matches!(Point::new(vec![1.0, f64::NAN]), Err(Error::NonFinite { position: 1, .. })));
        assert!(matches!(Point::new(vec![f64::INFINITY]), Err(Error::NonFinite { position: 0, .. })));
    }

    #[test]
    fn dataset_validation() {
        assert!(matches!(Dataset::from_rows::<Vec<f64>>(&[]), Err(Error::Empty(_))));
        let err = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0]]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, got: 1 }));
        let data = ds(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        assert_eq!((data.len(), data.dim()), (3, 2));
        assert_eq!(data.point(1), &[3.0, 4.0]);
    }

    #[test]
    fn cost_examples() {
        let m = SquaredEuclidean;
        let data = ds(&[&[0.0, 0.0], &[3.0, 4.0]]);
        let c = CenterSet::from_rows(2, &[[0.0, 0.0]]).unwrap();
        assert_eq!(cost(&data, &c, &m).unwrap(), 25.0);

        let same = ds(&[&[1.5, -2.0], &[1.5, -2.0], &[1.5, -2.0]]);
        let c = CenterSet::from_rows(2, &[[1.5, -2.0]]).unwrap();
        assert_eq!(cost(&same, &c, &m).unwrap(), 0.0);

        let line = ds(&[&[0.0], &[1.0], &[3.0]]);
        let c = CenterSet::from_rows(1, &[[0.0], [3.0]]).unwrap();
        assert_eq!(cost(&line, &c, &m).unwrap(), 1.0);
    }

    #[test]
    fn cost_rejects_empty_centers() {
        let data = ds(&[&[0.0]]);
        assert!(matches!(cost(&data, &CenterSet::empty(1), &SquaredEuclidean), Err(Error::Empty(_))));
    }

    #[test]
    fn centroid_examples() {
        assert_eq!(centroid(&[[0.0, 0.0], [2.0, 0.0]]).unwrap().as_slice(), &[1.0, 0.0]);
        assert_eq!(centroid(&[[4.5, -1.0]]).unwrap().as_slice(), &[4.5, -1.0]);
        assert_eq!(centroid(&[[0.0, 0.0], [0.0, 0.0], [3.0, 0.0]]).unwrap().as_slice(), &[1.0, 0.0]);
        assert!(matches!(centroid::<[f64; 2]>(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn centroid_property_examples() {
        let m = SquaredEuclidean;
        let data = ds(&[&[0.0, 0.0], &[2.0, 0.0]]);
        assert!(check_centroid_property(&data, &[1.0, 1.0], &m, 1e-12).unwrap());
        assert_eq!(centroid_property_gap(&data, &[1.0, 1.0], &m).unwrap(), 0.0);
        assert!(check_centroid_property(&data, &[1.0, 0.0], &m, 1e-12).unwrap());
    }

    #[test]
    fn tuple_check_examples() {
        let m = SquaredEuclidean;
        // p = 0, q = 2, r = 1: D(p,q) = 4 = 2·(1 + 1), tight.
        let check = inspect_tuples(&[([0.0], [2.0], [1.0])], &m);
        assert!(check.passed());
        assert_eq!(check.worst_triangle_ratio, 2.0);
        assert!(check_symmetry_and_triangle(&[([3.0, 1.0], [3.0, 1.0], [3.0, 1.0])], &m));
    }

    #[test]
    fn tuple_check_catches_a_bad_alpha() {
        struct Tight;
        impl Measure for Tight {
            fn dissimilarity(&self, p: &[f64], q: &[f64]) -> f64 {
                sq_dist(p, q)
            }
            fn alpha(&self) -> f64 {
                1.0
            }
            fn beta(&self) -> f64 {
                1.0
            }
            fn sample_size(&self, _: f64, _: f64) -> u64 {
                1
            }
        }
        let check = inspect_tuples(&[([0.0], [2.0], [1.0])], &Tight);
        assert_eq!(check.triangle_violations, 1);
        assert!(!check.passed());
    }

    #[test]
    fn sample_size_rounds_up() {
        let m = SquaredEuclidean;
        assert_eq!(m.sample_size(0.5, 0.2), 10);
        assert_eq!(m.sample_size(1.0 / 32.0, 0.2), 160);
        assert_eq!(m.sample_size(0.3, 0.2), 17);
        assert_eq!(ceil_to_count(0.1), 1);
    }
}
