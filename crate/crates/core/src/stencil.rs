//! Meshless stencil support selection and the angular/distance uniformity
//! measures of the resulting stencils.
//!
//! Selection starts from the `k` nearest visible centers and walks outward
//! through more distant candidates, swapping one in whenever that lowers the
//! sum of squared angles `μ = Σ αᵢ²` between consecutive rays. The walk stops
//! once the largest angle is within a factor `v` of the smallest, or once the
//! next candidate is more than `c` times farther away than the current
//! stencil's mean spoke/rim length.

use crate::centers::CenterSet;
use crate::geometry::Domain;
use crate::{Point2, Real};
use rayon::prelude::*;
use std::cmp::Ordering;
use std::collections::HashMap;

/// Stencil points lying on one straight boundary segment before the distance
/// stop is suspended.
const STRAIGHT_BOUNDARY_LIMIT: usize = 3;
/// Candidate index from which the distance stop applies unconditionally.
const OVERRIDE_CUTOFF: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StencilParams<T> {
    /// Number of neighbors per stencil.
    pub k: usize,
    /// Angle uniformity tolerance (> 1).
    pub v: T,
    /// Distance tolerance (> 1).
    pub c: T,
    /// Initial size of the local candidate cloud; doubled when exhausted.
    pub m: usize,
}

impl<T: Real> Default for StencilParams<T> {
    fn default() -> Self {
        Self {
            k: 6,
            v: T::lit(2.5),
            c: T::lit(3.0),
            m: 50,
        }
    }
}

impl<T: Real> StencilParams<T> {
    pub fn validate(&self) -> Result<(), String> {
        if self.k < 2 {
            return Err(format!("k must be at least 2, got {}", self.k));
        }
        if !(self.v > T::one()) {
            return Err(format!("v must exceed 1, got {}", self.v));
        }
        if !(self.c > T::one()) {
            return Err(format!("c must exceed 1, got {}", self.c));
        }
        if self.m <= self.k {
            return Err(format!("m must exceed k, got m={} k={}", self.m, self.k));
        }
        Ok(())
    }
}

/// How the selection loop ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Termination {
    /// Angle ratio within `v`.
    Angles,
    /// Next candidate too far away.
    Distance,
    /// Every visible center was tried without meeting either criterion.
    Exhausted,
    /// Fewer than `k` visible centers exist.
    TooFew,
}

/// A center together with its neighbors in counterclockwise order.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil<T> {
    pub center: usize,
    pub neighbors: Vec<usize>,
    /// `angles[i]` is the counterclockwise angle from ray `i` to ray `i + 1`
    /// (cyclic).
    pub angles: Vec<T>,
    pub termination: Termination,
}

impl<T: Real> Stencil<T> {
    /// The center followed by its neighbors.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.center).chain(self.neighbors.iter().copied())
    }

    pub fn is_degraded(&self) -> bool {
        matches!(self.termination, Termination::Exhausted | Termination::TooFew)
    }
}

#[derive(Clone, Copy, Debug)]
struct Ray<T> {
    id: usize,
    p: Point2<T>,
    dist: T,
    theta: T,
}

fn ray<T: Real>(center: Point2<T>, id: usize, p: Point2<T>) -> Ray<T> {
    let d = p - center;
    Ray {
        id,
        p,
        dist: d.norm(),
        theta: d.angle_2pi(),
    }
}

fn ccw_cmp<T: Real>(a: &Ray<T>, b: &Ray<T>) -> Ordering {
    a.theta
        .partial_cmp(&b.theta)
        .unwrap_or(Ordering::Equal)
        .then(a.dist.partial_cmp(&b.dist).unwrap_or(Ordering::Equal))
        .then(a.id.cmp(&b.id))
}

/// Cyclic gaps between consecutive polar angles of rays sorted ccw.
fn gaps<T: Real>(rays: &[Ray<T>]) -> Vec<T> {
    let n = rays.len();
    (0..n)
        .map(|i| {
            if i + 1 < n {
                rays[i + 1].theta - rays[i].theta
            } else {
                rays[0].theta + T::TAU() - rays[i].theta
            }
        })
        .collect()
}

/// Sorts `points` (tagged with ids) counterclockwise around `center`,
/// starting from polar angle 0. Equal angles are ordered by distance, then
/// id. Returns the ordered ids and the cyclic angles between consecutive
/// rays, which sum to `2pi`.
pub fn ccw_order<T: Real>(center: Point2<T>, points: &[(usize, Point2<T>)]) -> (Vec<usize>, Vec<T>) {
    let mut rays: Vec<Ray<T>> = points.iter().map(|&(id, p)| ray(center, id, p)).collect();
    rays.sort_by(ccw_cmp);
    let angles = gaps(&rays);
    (rays.into_iter().map(|r| r.id).collect(), angles)
}

/// Angle uniformity measure `Σ αᵢ²`.
pub fn mu_measure<T: Real>(angles: &[T]) -> T {
    angles.iter().map(|&a| a * a).sum()
}

/// Ratio of the largest to the smallest angle.
pub fn angle_ratio<T: Real>(angles: &[T]) -> T {
    let (lo, hi) = angles
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &a| (lo.min(a), hi.max(a)));
    hi / lo
}

/// Mean of spoke and rim lengths, `(1/2n) Σ (|ζⱼ - ζ| + |ζⱼ - ζⱼ₊₁|)`, for
/// neighbors given in ccw order.
fn mean_edge<T: Real>(center: Point2<T>, ordered: &[Point2<T>]) -> T {
    let n = ordered.len();
    let total: T = (0..n)
        .map(|j| ordered[j].dist(center) + ordered[j].dist(ordered[(j + 1) % n]))
        .sum();
    total / T::from_count(2 * n)
}

/// Farthest neighbor distance over the mean spoke/rim length.
pub fn distance_quotient<T: Real>(center: Point2<T>, ordered: &[Point2<T>]) -> T {
    let far = ordered.iter().map(|q| q.dist(center)).fold(T::zero(), T::max);
    far / mean_edge(center, ordered)
}

struct Selector<'a, T> {
    set: &'a CenterSet<T>,
    domain: &'a Domain<T>,
    params: &'a StencilParams<T>,
    center: usize,
    zeta: Point2<T>,
    straight: Vec<bool>,
}

impl<'a, T: Real> Selector<'a, T> {
    fn cloud(&self, m: usize) -> Vec<Ray<T>> {
        self.set
            .knn(self.zeta, m, Some(self.domain), Some(self.center))
            .into_iter()
            .map(|id| ray(self.zeta, id, self.set.point(id)))
            .collect()
    }

    /// More than the allowed number of current stencil points on a single
    /// straight boundary segment.
    fn crowded_straight_boundary(&self, current: &[Ray<T>]) -> bool {
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for r in current {
            if !self.set.is_boundary(r.id) {
                continue;
            }
            for loc in self.set.locations(r.id) {
                if self.straight[loc.segment] {
                    *counts.entry(loc.segment).or_default() += 1;
                }
            }
        }
        counts.values().any(|&n| n > STRAIGHT_BOUNDARY_LIMIT)
    }

    fn finish(&self, rays: Vec<Ray<T>>, termination: Termination) -> Stencil<T> {
        let angles = gaps(&rays);
        Stencil {
            center: self.center,
            neighbors: rays.iter().map(|r| r.id).collect(),
            angles,
            termination,
        }
    }

    fn run(&self) -> Stencil<T> {
        let k = self.params.k;
        let total = self.set.len() - 1;
        let mut m = self.params.m.min(total);
        let mut cloud = self.cloud(m);
        if cloud.len() < k {
            let mut rays = cloud;
            rays.sort_by(ccw_cmp);
            return self.finish(rays, Termination::TooFew);
        }

        let mut current: Vec<Ray<T>> = cloud[..k].to_vec();
        current.sort_by(ccw_cmp);
        let mut angles = gaps(&current);
        if angle_ratio(&angles) <= self.params.v {
            return self.finish(current, Termination::Angles);
        }
        let mut mu = mu_measure(&angles);

        let mut idx = k;
        loop {
            while idx < cloud.len() {
                let cand = cloud[idx];
                // 1-based candidate number
                let i = idx + 1;

                let pts: Vec<Point2<T>> = current.iter().map(|r| r.p).collect();
                let bound = self.params.c * mean_edge(self.zeta, &pts);
                let suspended = i < OVERRIDE_CUTOFF && self.crowded_straight_boundary(&current);
                if cand.dist >= bound && !suspended {
                    return self.finish(current, Termination::Distance);
                }

                let mut ext = current.clone();
                let q = ext.partition_point(|r| ccw_cmp(r, &cand) == Ordering::Less);
                ext.insert(q, cand);
                let ext_angles = gaps(&ext);
                let n = ext.len();
                let min_angle = ext_angles.iter().copied().fold(T::infinity(), T::min);
                let before = ext_angles[(q + n - 1) % n];
                let after = ext_angles[q];
                if before > min_angle && after > min_angle {
                    let j = ext_angles
                        .iter()
                        .position(|&a| a == min_angle)
                        .expect("minimum present");
                    let prev = ext_angles[(j + n - 1) % n];
                    let next = ext_angles[(j + 1) % n];
                    let p = if prev < next { j } else { (j + 1) % n };
                    debug_assert_ne!(p, q, "the new ray is never the one dropped");
                    let mut trial = ext;
                    trial.remove(p);
                    let trial_angles = gaps(&trial);
                    let trial_mu = mu_measure(&trial_angles);
                    if trial_mu < mu {
                        current = trial;
                        angles = trial_angles;
                        mu = trial_mu;
                        if angle_ratio(&angles) <= self.params.v {
                            return self.finish(current, Termination::Angles);
                        }
                    }
                }
                idx += 1;
            }
            if m >= total || cloud.len() < m {
                log::warn!(
                    "stencil selection for center {} exhausted all {} visible centers",
                    self.center,
                    cloud.len()
                );
                return self.finish(current, Termination::Exhausted);
            }
            m = (2 * m).min(total);
            cloud = self.cloud(m);
        }
    }
}

/// Selects the stencil of interior center `center`.
pub fn select_stencil<T: Real>(set: &CenterSet<T>, center: usize, params: &StencilParams<T>, domain: &Domain<T>) -> Stencil<T> {
    let straight = domain.segments().iter().map(|s| s.is_straight()).collect();
    select_with(set, center, params, domain, straight)
}

fn select_with<T: Real>(
    set: &CenterSet<T>,
    center: usize,
    params: &StencilParams<T>,
    domain: &Domain<T>,
    straight: Vec<bool>,
) -> Stencil<T> {
    Selector {
        set,
        domain,
        params,
        center,
        zeta: set.point(center),
        straight,
    }
    .run()
}

/// Stencils of all interior centers, in increasing center id.
pub fn select_all<T: Real>(set: &CenterSet<T>, params: &StencilParams<T>, domain: &Domain<T>) -> Vec<Stencil<T>> {
    let straight: Vec<bool> = domain.segments().iter().map(|s| s.is_straight()).collect();
    let ids: Vec<usize> = set.interior_ids().collect();
    ids.par_iter()
        .map(|&id| select_with(set, id, params, domain, straight.clone()))
        .collect()
}

/// Maximum and average of the angle ratio and the distance quotient over a
/// collection of stencils.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformityStats<T> {
    pub v_max: T,
    pub v_aver: T,
    pub c_max: T,
    pub c_aver: T,
}

pub fn uniformity_stats<T: Real>(set: &CenterSet<T>, stencils: &[Stencil<T>]) -> Option<UniformityStats<T>> {
    let usable: Vec<&Stencil<T>> = stencils.iter().filter(|s| !s.neighbors.is_empty()).collect();
    if usable.is_empty() {
        return None;
    }
    let mut v_max = T::zero();
    let mut c_max = T::zero();
    let mut v_sum = T::zero();
    let mut c_sum = T::zero();
    for s in &usable {
        let v = angle_ratio(&s.angles);
        let pts: Vec<Point2<T>> = s.neighbors.iter().map(|&i| set.point(i)).collect();
        let c = distance_quotient(set.point(s.center), &pts);
        v_max = v_max.max(v);
        c_max = c_max.max(c);
        v_sum += v;
        c_sum += c;
    }
    let n = T::from_count(usable.len());
    Some(UniformityStats {
        v_max,
        v_aver: v_sum / n,
        c_max,
        c_aver: c_sum / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::parse_domain;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn big_box() -> Domain<f64> {
        parse_domain("loop -10,-10 10,-10 10,10 -10,10").unwrap()
    }

    fn cloud(points: &[Point2<f64>]) -> (Domain<f64>, CenterSet<f64>) {
        let domain = big_box();
        let set = CenterSet::from_points(&domain, points).unwrap();
        (domain, set)
    }

    fn polar(r: f64, deg: f64) -> Point2<f64> {
        Point2::from_angle(deg.to_radians()) * r
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn ccw_examples() {
        let o = Point2::origin();
        let axes = [
            (0, Point2::new(0.0, 1.0)),
            (1, Point2::new(-1.0, 0.0)),
            (2, Point2::new(1.0, 0.0)),
            (3, Point2::new(0.0, -1.0)),
        ];
        let (ids, angles) = ccw_order(o, &axes);
        assert_eq!(ids, vec![2, 0, 1, 3]);
        assert!(close(&angles, &[PI / 2.0; 4]));

        let (_, single) = ccw_order(o, &[(0, Point2::new(0.3, -2.0))]);
        assert!(close(&single, &[2.0 * PI]));

        let three = [(0, polar(1.0, 0.0)), (1, polar(2.0, 90.0)), (2, polar(0.5, 270.0))];
        assert!(close(&ccw_order(o, &three).1, &[PI / 2.0, PI, PI / 2.0]));
    }

    #[test]
    fn ccw_ties_by_distance_then_id() {
        let pts = [(7, polar(2.0, 45.0)), (3, polar(1.0, 45.0)), (5, polar(2.0, 45.0))];
        assert_eq!(ccw_order(Point2::origin(), &pts).0, vec![3, 5, 7]);
    }

    #[test]
    fn mu_examples() {
        assert!((mu_measure(&[PI / 3.0; 6]) - 2.0 * PI * PI / 3.0).abs() < 1e-12);
        assert!((mu_measure(&[PI / 2.0; 4]) - PI * PI).abs() < 1e-12);
        assert!((mu_measure(&[PI, PI / 2.0, PI / 2.0]) - 1.5 * PI * PI).abs() < 1e-12);
        assert!((mu_measure(&[PI / 3.0; 6]) - 6.57974).abs() < 1e-5);
    }

    #[test]
    fn angle_ratio_example() {
        let a = [PI / 2.0, PI / 2.0, PI / 2.0, PI / 6.0, PI / 6.0, PI / 6.0];
        assert!((angle_ratio(&a) - 3.0).abs() < 1e-12);
    }

    fn hex_lattice() -> Vec<Point2<f64>> {
        let mut pts = vec![Point2::origin()];
        for j in -4i32..=4 {
            for i in -4i32..=4 {
                let p = Point2::new(i as f64 + 0.5 * j as f64, j as f64 * 3f64.sqrt() / 2.0);
                if p.norm() > 1e-9 && p.norm() < 3.5 {
                    pts.push(p);
                }
            }
        }
        pts
    }

    #[test]
    fn hexagonal_lattice_gives_ring() {
        let (domain, set) = cloud(&hex_lattice());
        let s = select_stencil(&set, 0, &StencilParams::default(), &domain);
        assert_eq!(s.termination, Termination::Angles);
        assert_eq!(s.neighbors.len(), 6);
        for &id in &s.neighbors {
            assert!((set.point(id).norm() - 1.0).abs() < 1e-12);
        }
        assert!(s.angles.iter().all(|a| (a - PI / 3.0).abs() < 1e-12));
        let stats = uniformity_stats(&set, &[s]).unwrap();
        for v in [stats.v_max, stats.v_aver, stats.c_max, stats.c_aver] {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    fn half_plane_cluster(far: f64) -> Vec<Point2<f64>> {
        let mut pts = vec![Point2::origin()];
        for (i, deg) in [10.0, 38.0, 70.0, 100.0, 130.0, 160.0].into_iter().enumerate() {
            pts.push(polar(1.0 + 0.01 * i as f64, deg));
        }
        pts.push(polar(far, 270.0));
        pts
    }

    #[test]
    fn opposite_point_is_swapped_in() {
        // ext angles 28,32,30,30,30,110,100 degrees; the minimum sits between
        // the rays at 10 and 38, and its flanks are 100 (before) and 32
        // (after), so the 38 degree ray is removed
        let (domain, set) = cloud(&half_plane_cluster(1.5));
        let s = select_stencil(&set, 0, &StencilParams::default(), &domain);
        assert_eq!(s.neighbors, vec![1, 3, 4, 5, 6, 7]);
        assert!(!s.neighbors.contains(&2));
        let initial: Vec<(usize, Point2<f64>)> = (1..=6).map(|i| (i, set.point(i))).collect();
        let mu0 = mu_measure(&ccw_order(Point2::origin(), &initial).1);
        assert!(mu_measure(&s.angles) < mu0);
        let expected: Vec<f64> = [60.0, 30.0, 30.0, 30.0, 110.0, 100.0].iter().map(|d: &f64| d.to_radians()).collect();
        assert!(s.angles.iter().zip(&expected).all(|(a, b)| (a - b).abs() < 1e-12));
        assert_eq!(s.termination, Termination::Exhausted);
    }

    #[test]
    fn far_candidate_stops_selection() {
        let (domain, set) = cloud(&half_plane_cluster(10.0));
        let params = StencilParams::default();
        let s = select_stencil(&set, 0, &params, &domain);
        assert_eq!(s.termination, Termination::Distance);
        assert_eq!(s.neighbors, vec![1, 2, 3, 4, 5, 6]);
        assert!(angle_ratio(&s.angles) > params.v);
    }

    #[test]
    fn crowded_straight_wall_suspends_distance_stop() {
        let domain = parse_domain("loop 0,0 1,0 1,1 0,1").unwrap();
        let mut pts = vec![Point2::new(0.5, 0.02)];
        pts.extend((0..=40).map(|i| Point2::new(0.3 + 0.01 * i as f64, 0.0)));
        pts.extend([Point2::new(0.5, 0.12), Point2::new(0.4, 0.1), Point2::new(0.6, 0.1)]);
        pts.extend([Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0), Point2::new(0.0, 1.0)]);
        let set = CenterSet::from_points(&domain, &pts).unwrap();
        let s = select_stencil(&set, 0, &StencilParams::default(), &domain);
        assert!(s.neighbors.iter().any(|&i| set.point(i).y > 0.05), "{s:?}");
    }

    #[test]
    fn too_few_visible_centers() {
        let (domain, set) = cloud(&[Point2::origin(), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]);
        let s = select_stencil(&set, 0, &StencilParams::default(), &domain);
        assert_eq!(s.termination, Termination::TooFew);
        assert_eq!(s.neighbors.len(), 2);
    }

    fn random_cloud() -> impl Strategy<Value = Vec<Point2<f64>>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12..60).prop_map(|v| {
            std::iter::once(Point2::origin())
                .chain(v.into_iter().map(|(x, y)| Point2::new(x, y)))
                .filter(|p| p.norm() > 1e-3 || p.norm() == 0.0)
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn selection_invariants(pts in random_cloud()) {
            prop_assume!(pts.len() > 7);
            let (domain, set) = cloud(&pts);
            let params = StencilParams::default();
            let s = select_stencil(&set, 0, &params, &domain);
            prop_assert_eq!(s.neighbors.len(), params.k);
            let sum: f64 = s.angles.iter().sum();
            prop_assert!((sum - 2.0 * PI).abs() < 1e-9);
            prop_assert!(s.angles.iter().all(|&a| a > 0.0));
            let mut ids = s.neighbors.clone();
            ids.sort_unstable();
            ids.dedup();
            prop_assert_eq!(ids.len(), params.k);
            prop_assert!(!s.neighbors.contains(&0));

            let nearest = set.knn(Point2::origin(), params.k, Some(&domain), Some(0));
            let tagged: Vec<_> = nearest.iter().map(|&i| (i, set.point(i))).collect();
            let (initial_ids, initial_angles) = ccw_order(Point2::origin(), &tagged);
            prop_assert!(mu_measure(&s.angles) <= mu_measure(&initial_angles));
            if angle_ratio(&initial_angles) <= params.v {
                prop_assert_eq!(&s.neighbors, &initial_ids);
            }
            prop_assert_eq!(select_stencil(&set, 0, &params, &domain), s);
        }

        #[test]
        fn parallel_matches_sequential(pts in random_cloud()) {
            prop_assume!(pts.len() > 7);
            let (domain, set) = cloud(&pts);
            let params = StencilParams::default();
            let all = select_all(&set, &params, &domain);
            for s in &all {
                prop_assert_eq!(&select_stencil(&set, s.center, &params, &domain), s);
            }
        }
    }
}
