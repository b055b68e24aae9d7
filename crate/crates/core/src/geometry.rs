//! Points, Euclidean distances and point-set statistics.
//!
//! Every other module reads distances through a [`DistMatrix`], either the cached
//! Euclidean matrix of a [`PointSet`] or the weight matrix of a host network.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::game::StrategyProfile;

/// The random engine used by every generator: ChaCha8 seeded with
/// `ChaCha8Rng::seed_from_u64(seed)`; uniform reals come from `Rng::gen::<f64>()`.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Self { coords }
    }
}

/// Euclidean distance between two points of equal dimension.
pub fn distance(u: &Point, v: &Point) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            left: u.dim(),
            right: v.dim(),
        });
    }
    Ok(euclid(&u.coords, &v.coords))
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Dense symmetric n x n matrix of nonnegative weights with zero diagonal.
/// An infinite entry marks a pair that cannot be linked directly.
#[derive(Clone, Debug, PartialEq)]
pub struct DistMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let w = f(i, j);
                data[i * n + j] = w;
                data[j * n + i] = w;
            }
        }
        Self { n, data }
    }

    /// Builds from a full row-major matrix. Symmetry is not checked here.
    pub fn from_rows(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Largest entry.
    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest positive off-diagonal entry.
    pub fn min_positive(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let w = self.get(i, j);
                if w > 0.0 && best.is_none_or(|b| w < b) {
                    best = Some(w);
                }
            }
        }
        best
    }
}

/// An immutable point set with its cached distance matrix and statistics.
#[derive(Clone, Debug)]
pub struct PointSet {
    points: Vec<Point>,
    dim: usize,
    dist: DistMatrix,
    w_max: f64,
    w_min: f64,
}

impl PointSet {
    /// Validates the points and computes the distance matrix, `w_max`, `w_min`
    /// and the aspect ratio. Exactly co-located points are rejected.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return input(format!("need at least 2 points, got {}", points.len()));
        }
        let dim = points[0].dim();
        if dim == 0 {
            return input("points must have dimension >= 1");
        }
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: p.dim(),
                });
            }
            if p.coords.iter().any(|c| !c.is_finite()) {
                return input("non-finite coordinate");
            }
        }
        let n = points.len();
        let dist = DistMatrix::from_fn(n, |i, j| euclid(&points[i].coords, &points[j].coords));
        let w_max = dist.max();
        let w_min = dist
            .min_positive()
            .ok_or_else(|| Error::Input("all points coincide; w_min undefined".into()))?;
        for i in 0..n {
            for j in (i + 1)..n {
                if dist.get(i, j) == 0.0 {
                    return input(format!("points {i} and {j} are co-located"));
                }
            }
        }
        Ok(Self {
            points,
            dim,
            dist,
            w_max,
            w_min,
        })
    }

    pub fn from_coords(coords: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(coords.into_iter().map(Point::new).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn distances(&self) -> &DistMatrix {
        &self.dist
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist.get(i, j)
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    pub fn w_min(&self) -> f64 {
        self.w_min
    }

    /// Aspect ratio `w_max / w_min`.
    pub fn aspect_ratio(&self) -> f64 {
        self.w_max / self.w_min
    }
}

/// `n` i.i.d. uniform points in the unit square, reproducible from `seed`.
pub fn random_unit_square(n: usize, seed: u64) -> PointSet {
    assert!(n >= 2, "random_unit_square needs n >= 2");
    let mut rng = seeded_rng(seed);
    let pts = (0..n)
        .map(|_| Point::new(vec![rng.gen::<f64>(), rng.gen::<f64>()]))
        .collect();
    PointSet::new(pts).expect("uniform sample produced co-located points")
}

/// All integer lattice points of `[0,b_1] x ... x [0,b_d]`, in lexicographic
/// order with the last coordinate varying fastest.
pub fn integer_grid(bounds: &[u32]) -> Result<PointSet> {
    if bounds.is_empty() || bounds.contains(&0) {
        return input("grid bounds must be a non-empty list of positive integers");
    }
    let mut pts: Vec<Vec<f64>> = vec![vec![]];
    for &b in bounds {
        pts = pts
            .into_iter()
            .flat_map(|prefix| {
                (0..=b).map(move |x| {
                    let mut p = prefix.clone();
                    p.push(x as f64);
                    p
                })
            })
            .collect();
    }
    PointSet::from_coords(pts)
}

/// Counts of points inside the four corner squares of side 1/4 of the unit
/// square (bottom-left, bottom-right, top-left, top-right). Each corner square
/// sits in its own quadrant, and every point of a quadrant is at distance at
/// least `sqrt(2)/4` from the corner square of the opposite quadrant.
pub fn corner_square_occupancy(points: &PointSet) -> [usize; 4] {
    let mut counts = [0usize; 4];
    for p in points.points() {
        let (x, y) = (p.coords[0], p.coords[1]);
        let lo = |v: f64| v <= 0.25;
        let hi = |v: f64| v >= 0.75;
        if lo(x) && lo(y) {
            counts[0] += 1;
        } else if hi(x) && lo(y) {
            counts[1] += 1;
        } else if lo(x) && hi(y) {
            counts[2] += 1;
        } else if hi(x) && hi(y) {
            counts[3] += 1;
        }
    }
    counts
}

/// Positive game parameter `alpha` (the 2-norm is fixed).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    pub alpha: f64,
}

impl GameParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return input(format!("alpha must be positive and finite, got {alpha}"));
        }
        Ok(Self { alpha })
    }
}

/// The JSON instance file: `{ "dim", "points", "alpha", "seed" }`, with an
/// optional map of named strategy profiles attached by the construction presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub alpha: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub profiles: BTreeMap<String, StrategyProfile>,
}

impl InstanceFile {
    pub fn new(points: &PointSet, alpha: f64, seed: u64) -> Self {
        Self {
            dim: points.dim(),
            points: points.points().iter().map(|p| p.coords.clone()).collect(),
            alpha,
            seed,
            profiles: BTreeMap::new(),
        }
    }

    pub fn point_set(&self) -> Result<PointSet> {
        if self.points.iter().any(|p| p.len() != self.dim) {
            return input("instance file: point dimension differs from \"dim\"");
        }
        PointSet::from_coords(self.points.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec())
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&p(&[0.0, 0.0]), &p(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(distance(&p(&[0.0, 0.0]), &p(&[3.0, 4.0])).unwrap(), 5.0);
        let d = distance(&p(&[0.0, 0.0]), &p(&[1.0, 1.0])).unwrap();
        assert!((d - 1.414_213_56).abs() < 1e-8);
        assert!(matches!(
            distance(&p(&[0.0]), &p(&[0.0, 1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn stats_on_line_and_square() {
        let s = PointSet::from_coords(vec![vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        assert_eq!((s.w_max(), s.w_min(), s.aspect_ratio()), (3.0, 1.0, 3.0));

        let sq = PointSet::from_coords(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        assert_eq!(sq.w_max(), 2f64.sqrt());
        assert_eq!(sq.w_min(), 1.0);
        assert_eq!(sq.aspect_ratio(), 2f64.sqrt());

        let two = PointSet::from_coords(vec![vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(two.aspect_ratio(), 1.0);
    }

    #[test]
    fn rejects_degenerate_sets() {
        assert!(PointSet::from_coords(vec![vec![1.0], vec![1.0]]).is_err());
        assert!(PointSet::from_coords(vec![vec![1.0]]).is_err());
        assert!(PointSet::from_coords(vec![vec![0.0], vec![0.0], vec![2.0]]).is_err());
        assert!(PointSet::from_coords(vec![vec![0.0], vec![f64::NAN]]).is_err());
    }

    #[test]
    fn random_square_is_reproducible_and_in_range() {
        let a = random_unit_square(2, 17);
        let b = random_unit_square(2, 17);
        assert_eq!(a.points(), b.points());
        let big = random_unit_square(10_000, 3);
        assert!(big
            .points()
            .iter()
            .all(|p| p.coords.iter().all(|&c| (0.0..=1.0).contains(&c))));
    }

    #[test]
    fn corner_squares_hold_enough_points() {
        // (1 - 1/2) n / 16 per corner square; failure probability <= 4 exp(-n/128).
        let n = 10_000;
        let s = random_unit_square(n, 11);
        for count in corner_square_occupancy(&s) {
            assert!(count as f64 >= 0.5 * n as f64 / 16.0, "{count}");
        }
    }

    #[test]
    fn grids() {
        let g = integer_grid(&[1]).unwrap();
        assert_eq!(g.len(), 2);
        let g = integer_grid(&[1, 1]).unwrap();
        assert_eq!(g.len(), 4);
        let g = integer_grid(&[2, 1]).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.w_max(), 5f64.sqrt());
        assert_eq!(integer_grid(&[3, 3]).unwrap().len(), 16);
        assert!(integer_grid(&[]).is_err());
    }

    #[test]
    fn instance_json_round_trip_is_exact() {
        let s = random_unit_square(20, 5);
        let f = InstanceFile::new(&s, 0.1 + 0.2, 5);
        let back = InstanceFile::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(f, back);
        assert_eq!(back.point_set().unwrap().points(), s.points());
    }

    proptest! {
        #[test]
        fn triangle_inequality(pts in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 3), 3)) {
            let ps: Vec<Point> = pts.into_iter().map(Point::new).collect();
            let d = |a: usize, b: usize| distance(&ps[a], &ps[b]).unwrap();
            prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-9);
            prop_assert_eq!(d(0, 1), d(1, 0));
        }

        #[test]
        fn stats_are_consistent(seed in 0u64..1000, n in 2usize..40) {
            let s = random_unit_square(n, seed);
            prop_assert!(s.w_min() <= s.w_max());
            prop_assert_eq!(s.aspect_ratio(), s.w_max() / s.w_min());
            prop_assert!(s.aspect_ratio() >= 1.0);
        }
    }
}
