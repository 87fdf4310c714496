//! The set of discretization centers: interior/boundary classification,
//! boundary locations, neighbor queries and initial point generation.

use crate::geometry::{BoundaryLocation, Domain};
use crate::kdtree::KdTree;
use crate::{Point2, Real};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CenterError {
    #[error("initial spacing must be positive and finite")]
    InvalidSpacing,
    #[error("h0 too large: no interior centers fit the domain")]
    H0TooLarge,
    #[error("center {index} is neither inside the domain nor on its boundary")]
    OutsideDomain { index: usize },
    #[error("center {index} is classified as boundary but does not lie on any boundary segment")]
    NotOnBoundary { index: usize },
    #[error("centers {first} and {second} coincide")]
    Duplicate { first: usize, second: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CenterKind {
    Interior,
    Boundary,
}

impl CenterKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CenterKind::Interior => "interior",
            CenterKind::Boundary => "boundary",
        }
    }
}

/// Minimum separation between two distinct centers.
pub fn coincidence_tol<T: Real>() -> T {
    T::geom_eps()
}

/// Distance from a segment under which a point is classified as boundary.
fn boundary_tol<T: Real>(domain: &Domain<T>) -> T {
    T::lit(1e-10).max(T::geom_eps()) * domain.diameter().max(T::one())
}

#[derive(Clone, Debug)]
pub struct CenterSet<T> {
    points: Vec<Point2<T>>,
    kinds: Vec<CenterKind>,
    locations: Vec<Vec<BoundaryLocation<T>>>,
    index: KdTree<T>,
}

impl<T: Real> Default for CenterSet<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> CenterSet<T> {
    pub fn new() -> Self {
        Self {
            points: Vec::new(),
            kinds: Vec::new(),
            locations: Vec::new(),
            index: KdTree::new(),
        }
    }

    /// Classifies `points` against `domain`: points on a boundary segment
    /// become boundary centers, everything else must lie inside.
    pub fn from_points(domain: &Domain<T>, points: &[Point2<T>]) -> Result<Self, CenterError> {
        let tol = boundary_tol(domain);
        let kinds: Vec<CenterKind> = points
            .iter()
            .map(|&p| {
                if domain.dist_to_boundary(p) <= tol {
                    CenterKind::Boundary
                } else {
                    CenterKind::Interior
                }
            })
            .collect();
        Self::from_classified(domain, points, &kinds)
    }

    /// Rebuilds a set from points with known kinds, e.g. a center dump.
    pub fn from_classified(domain: &Domain<T>, points: &[Point2<T>], kinds: &[CenterKind]) -> Result<Self, CenterError> {
        assert_eq!(points.len(), kinds.len());
        let tol = boundary_tol(domain);
        let mut set = Self::new();
        for (index, (&p, &kind)) in points.iter().zip(kinds).enumerate() {
            match kind {
                CenterKind::Boundary => {
                    let locs = domain.locate_on_boundary(p, tol);
                    if locs.is_empty() {
                        return Err(CenterError::NotOnBoundary { index });
                    }
                    set.points.push(p);
                    set.kinds.push(kind);
                    set.locations.push(locs);
                }
                CenterKind::Interior => {
                    if !domain.contains(p) {
                        return Err(CenterError::OutsideDomain { index });
                    }
                    set.points.push(p);
                    set.kinds.push(kind);
                    set.locations.push(Vec::new());
                }
            }
        }
        set.rebuild_index();
        for i in 0..set.len() {
            let near = set.index.nearest_filtered(set.points[i], 1, |j| j != i);
            if let Some(&(d2, j)) = near.first() {
                if d2.sqrt() < coincidence_tol::<T>() {
                    return Err(CenterError::Duplicate {
                        first: i.min(j),
                        second: i.max(j),
                    });
                }
            }
        }
        Ok(set)
    }

    pub fn push_interior(&mut self, p: Point2<T>) -> usize {
        self.points.push(p);
        self.kinds.push(CenterKind::Interior);
        self.locations.push(Vec::new());
        self.index.insert(p)
    }

    pub fn push_boundary(&mut self, p: Point2<T>, locations: Vec<BoundaryLocation<T>>) -> usize {
        debug_assert!(!locations.is_empty());
        self.points.push(p);
        self.kinds.push(CenterKind::Boundary);
        self.locations.push(locations);
        self.index.insert(p)
    }

    /// Rebalances the spatial index.
    pub fn rebuild_index(&mut self) {
        self.index = KdTree::build(&self.points);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point2<T>] {
        &self.points
    }

    pub fn point(&self, id: usize) -> Point2<T> {
        self.points[id]
    }

    pub fn kind(&self, id: usize) -> CenterKind {
        self.kinds[id]
    }

    pub fn kinds(&self) -> &[CenterKind] {
        &self.kinds
    }

    pub fn is_boundary(&self, id: usize) -> bool {
        self.kinds[id] == CenterKind::Boundary
    }

    pub fn is_interior(&self, id: usize) -> bool {
        self.kinds[id] == CenterKind::Interior
    }

    /// Boundary locations of a center; several at domain vertices, none for
    /// interior centers.
    pub fn locations(&self, id: usize) -> &[BoundaryLocation<T>] {
        &self.locations[id]
    }

    pub fn interior_ids(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.is_interior(i))
    }

    pub fn boundary_ids(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.is_boundary(i))
    }

    pub fn n_interior(&self) -> usize {
        self.kinds.iter().filter(|&&k| k == CenterKind::Interior).count()
    }

    pub fn n_boundary(&self) -> usize {
        self.len() - self.n_interior()
    }

    /// The `count` centers nearest to `query`, sorted by distance with ties
    /// broken by id. `exclude` drops one id (normally the query center) and
    /// `visibility` drops centers hidden behind the boundary. Returns fewer
    /// ids when the set runs out.
    pub fn knn(&self, query: Point2<T>, count: usize, visibility: Option<&Domain<T>>, exclude: Option<usize>) -> Vec<usize> {
        self.index
            .nearest_filtered(query, count, |id| {
                Some(id) != exclude && visibility.is_none_or(|d| !d.segment_blocked(query, self.points[id]))
            })
            .into_iter()
            .map(|(_, id)| id)
            .collect()
    }

    /// Nearest centers with their distances, no visibility filtering.
    pub fn nearest_with_distance(&self, query: Point2<T>, count: usize, exclude: Option<usize>) -> Vec<(usize, T)> {
        self.index
            .nearest_filtered(query, count, |id| Some(id) != exclude)
            .into_iter()
            .map(|(d2, id)| (id, d2.sqrt()))
            .collect()
    }

    /// `dist(query, set)`; infinite for an empty set.
    pub fn distance_to_set(&self, query: Point2<T>) -> T {
        self.nearest_with_distance(query, 1, None)
            .first()
            .map_or(T::infinity(), |&(_, d)| d)
    }
}

/// Options for [`initial_centers`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialOptions<T> {
    /// Random displacement of lattice points, as a fraction of `h0`.
    pub jitter: T,
    /// Minimum distance of interior points from the boundary, as a fraction
    /// of `h0`.
    pub clearance: T,
    pub seed: u64,
}

impl<T: Real> Default for InitialOptions<T> {
    fn default() -> Self {
        Self {
            jitter: T::lit(0.25),
            clearance: T::lit(0.5),
            seed: 0x5eed,
        }
    }
}

/// Initial non-adaptive center set with spacing about `h0`.
///
/// Every boundary segment is split into equal parameter steps of length at
/// most `h0` (vertices always included). The interior is filled with a
/// triangular lattice of spacing `h0`, displaced by a seeded random jitter and
/// clipped to points at least `clearance * h0` away from the boundary.
pub fn initial_centers<T: Real>(domain: &Domain<T>, h0: T, opts: &InitialOptions<T>) -> Result<CenterSet<T>, CenterError> {
    if !(h0 > T::zero()) || !h0.is_finite() {
        return Err(CenterError::InvalidSpacing);
    }
    let mut set = CenterSet::new();
    for v in domain.vertices() {
        set.push_boundary(v.point, v.incidences.clone());
    }
    for (segment, s) in domain.segments().iter().enumerate() {
        let n = (s.length() / h0 - T::lit(1e-9)).ceil().max(T::one()).to_usize().unwrap_or(1);
        for i in 1..n {
            let t = T::from_count(i) / T::from_count(n);
            set.push_boundary(s.point_at(t), vec![BoundaryLocation { segment, t }]);
        }
    }

    let (min, max) = domain.bounding_box();
    let dy = h0 * T::lit(3.0).sqrt() * T::lit(0.5);
    let amp = opts.jitter * h0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut any = false;
    let mut j = 0usize;
    loop {
        let y = min.y + dy * T::from_count(j);
        if y > max.y {
            break;
        }
        let offset = if j % 2 == 1 { h0 * T::lit(0.5) } else { T::zero() };
        let mut i = 0usize;
        loop {
            let x = min.x + offset + h0 * T::from_count(i);
            if x > max.x {
                break;
            }
            let jx: f64 = rng.gen_range(-1.0..=1.0);
            let jy: f64 = rng.gen_range(-1.0..=1.0);
            let p = Point2::new(x + amp * T::lit(jx), y + amp * T::lit(jy));
            if domain.contains(p) && domain.dist_to_boundary(p) >= opts.clearance * h0 {
                set.push_interior(p);
                any = true;
            }
            i += 1;
        }
        j += 1;
    }
    if !any {
        return Err(CenterError::H0TooLarge);
    }
    set.rebuild_index();
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::parse_domain;

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    fn grid3() -> (Domain<f64>, CenterSet<f64>) {
        let d = parse_domain("loop -1,-1 1,-1 1,1 -1,1").unwrap();
        let pts: Vec<_> = (0..3)
            .flat_map(|j| (0..3).map(move |i| p(-0.5 + 0.5 * i as f64, -0.5 + 0.5 * j as f64)))
            .collect();
        let set = CenterSet::from_points(&d, &pts).unwrap();
        (d, set)
    }

    #[test]
    fn knn_axis_neighbors() {
        let (d, set) = grid3();
        let n = set.knn(set.point(4), 4, Some(&d), Some(4));
        assert_eq!(n, vec![1, 3, 5, 7]);
        for &i in &n {
            assert!((set.point(i).dist(set.point(4)) - 0.5).abs() < 1e-15);
        }
        // more than available
        assert_eq!(set.knn(set.point(4), 50, Some(&d), Some(4)).len(), 8);
    }

    #[test]
    fn knn_hides_points_behind_slit() {
        let d = parse_domain("loop 1,0 1,1 -1,1 -1,-1 1,-1; slit 0,0 1,0").unwrap();
        let pts = vec![p(0.5, 0.05), p(0.5, -0.05), p(0.5, 0.3), p(-0.2, 0.0)];
        let set = CenterSet::from_points(&d, &pts).unwrap();
        let n = set.knn(set.point(0), 3, Some(&d), Some(0));
        assert_eq!(n, vec![2, 3]);
        // without visibility the point below the slit is nearest
        assert_eq!(set.knn(set.point(0), 1, None, Some(0)), vec![1]);
    }

    #[test]
    fn unit_square_boundary_count() {
        let d = parse_domain("loop 0,0 1,0 1,1 0,1").unwrap();
        let set = initial_centers(&d, 0.25, &InitialOptions::default()).unwrap();
        assert_eq!(set.n_boundary(), 16);
        for i in set.boundary_ids() {
            for loc in set.locations(i) {
                assert!(d.segment(loc.segment).point_at(loc.t).dist(set.point(i)) < 1e-12);
            }
        }
        let corners = set.boundary_ids().filter(|&i| set.locations(i).len() == 2).count();
        assert_eq!(corners, 4);
    }

    #[test]
    fn too_coarse_spacing_fails() {
        let d = parse_domain("loop 0,0 1,0 1,1 0,1").unwrap();
        assert_eq!(initial_centers(&d, 5.0, &InitialOptions::default()).unwrap_err(), CenterError::H0TooLarge);
        assert_eq!(initial_centers(&d, -1.0, &InitialOptions::default()).unwrap_err(), CenterError::InvalidSpacing);
    }

    #[test]
    fn deterministic_generation() {
        let d = parse_domain("loop 0,0 1,0 1,1 0,1").unwrap();
        let a = initial_centers(&d, 0.1, &InitialOptions::default()).unwrap();
        let b = initial_centers(&d, 0.1, &InitialOptions::default()).unwrap();
        assert_eq!(a.points(), b.points());
    }

    #[test]
    fn rejects_duplicates_and_outside_points() {
        let d = parse_domain("loop 0,0 1,0 1,1 0,1").unwrap();
        assert!(matches!(
            CenterSet::from_points(&d, &[p(0.5, 0.5), p(0.5, 0.5)]),
            Err(CenterError::Duplicate { first: 0, second: 1 })
        ));
        assert!(matches!(
            CenterSet::from_points(&d, &[p(1.5, 0.5)]),
            Err(CenterError::OutsideDomain { index: 0 })
        ));
        assert!(matches!(
            CenterSet::from_classified(&d, &[p(0.5, 0.5)], &[CenterKind::Boundary]),
            Err(CenterError::NotOnBoundary { index: 0 })
        ));
    }
}
