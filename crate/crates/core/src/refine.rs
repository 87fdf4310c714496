//! Edge-based error indicators and adaptive center refinement.
//!
//! Every pair `(ζ, ξ)` of an interior center and one of its stencil
//! neighbors is an edge. Edges whose indicator reaches a threshold (a fixed
//! fraction of the largest indicator) are marked, and new centers are placed
//! at the edge midpoint and at the two points offset perpendicular to the
//! edge by half its length, subject to separation tests. When fewer than a
//! given percentage of new interior centers results, the threshold is
//! lowered and the edges are processed again.

use crate::centers::{CenterKind, CenterSet};
use crate::dense::{Lu, Matrix};
use crate::geometry::{BoundaryLocation, Domain};
use crate::stencil::Stencil;
use crate::system::DiscreteSolution;
use crate::{Point2, Real};
use rayon::prelude::*;
use std::collections::{BTreeMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefineError {
    #[error("invalid refinement parameters: {0}")]
    Params(String),
    #[error("stencil of center {center} is collinear, no linear fit")]
    Collinear { center: usize },
    #[error("refinement stalled: no center inserted after {rounds} threshold reductions")]
    Stalled { rounds: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Indicator {
    /// `|û_ζ − û_ξ|`
    Eps0,
    /// `|(û_ζ − û_ξ) − bᵀ(ζ − ξ)|` with `b` a least-squares gradient on the
    /// stencil of ζ.
    Eps1,
}

impl Indicator {
    pub fn as_str(self) -> &'static str {
        match self {
            Indicator::Eps0 => "eps0",
            Indicator::Eps1 => "eps1",
        }
    }
}

impl std::str::FromStr for Indicator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "eps0" => Ok(Indicator::Eps0),
            "eps1" => Ok(Indicator::Eps1),
            other => Err(format!("unknown indicator `{other}` (expected eps0 or eps1)")),
        }
    }
}

/// `ℓ(x) = a + bᵀ(x − ζ)`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit<T> {
    pub zeta: Point2<T>,
    pub a: T,
    pub b: Point2<T>,
}

impl<T: Real> LinearFit<T> {
    pub fn eval(&self, x: Point2<T>) -> T {
        self.a + self.b.dot(x - self.zeta)
    }
}

/// Least-squares linear fit of `values` at `points` (which include ζ),
/// computed from the normal equations in coordinates centered at ζ and
/// scaled by the point spread. `None` when the points are collinear.
pub fn linear_fit<T: Real>(zeta: Point2<T>, points: &[Point2<T>], values: &[T]) -> Option<LinearFit<T>> {
    debug_assert_eq!(points.len(), values.len());
    let rho = points.iter().map(|p| p.dist(zeta)).fold(T::zero(), T::max);
    if points.len() < 3 || !(rho > T::zero()) {
        return None;
    }
    let mut n = Matrix::zeros(3);
    let mut rhs = [T::zero(); 3];
    for (&p, &u) in points.iter().zip(values) {
        let q = (p - zeta) * (T::one() / rho);
        let row = [T::one(), q.x, q.y];
        for i in 0..3 {
            rhs[i] += row[i] * u;
            for j in 0..3 {
                n.set(i, j, n.get(i, j) + row[i] * row[j]);
            }
        }
    }
    let lu = Lu::factor(&n).ok()?;
    if !(lu.condition() < T::one() / (T::epsilon() * T::lit(1e4))) {
        return None;
    }
    let beta = lu.solve(&rhs);
    Some(LinearFit {
        zeta,
        a: beta[0],
        b: Point2::new(beta[1], beta[2]) * (T::one() / rho),
    })
}

/// Fit over the support of `stencil`.
pub fn fit_stencil<T: Real>(set: &CenterSet<T>, stencil: &Stencil<T>, u: &DiscreteSolution<T>) -> Option<LinearFit<T>> {
    let pts: Vec<Point2<T>> = stencil.support().map(|i| set.point(i)).collect();
    let vals: Vec<T> = stencil.support().map(|i| u.value(i)).collect();
    linear_fit(set.point(stencil.center), &pts, &vals)
}

pub fn eps0<T: Real>(u_zeta: T, u_xi: T) -> T {
    (u_zeta - u_xi).abs()
}

pub fn eps1<T: Real>(zeta: Point2<T>, xi: Point2<T>, u_zeta: T, u_xi: T, fit: &LinearFit<T>) -> T {
    ((u_zeta - u_xi) - fit.b.dot(zeta - xi)).abs()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeIndicator<T> {
    /// Interior center ζ.
    pub center: usize,
    /// Stencil neighbor ξ.
    pub neighbor: usize,
    pub value: T,
}

/// Indicators of all edges, ordered by center id and then by the ccw order
/// of each stencil.
pub fn edge_indicators<T: Real>(
    set: &CenterSet<T>,
    stencils: &[Stencil<T>],
    u: &DiscreteSolution<T>,
    indicator: Indicator,
) -> Result<Vec<EdgeIndicator<T>>, RefineError> {
    let mut order: Vec<&Stencil<T>> = stencils.iter().collect();
    order.sort_by_key(|s| s.center);
    let per: Result<Vec<Vec<EdgeIndicator<T>>>, RefineError> = order
        .par_iter()
        .map(|s| {
            let z = set.point(s.center);
            let uz = u.value(s.center);
            let fit = match indicator {
                Indicator::Eps0 => None,
                Indicator::Eps1 => Some(fit_stencil(set, s, u).ok_or(RefineError::Collinear { center: s.center })?),
            };
            Ok(s.neighbors
                .iter()
                .map(|&n| {
                    let value = match &fit {
                        None => eps0(uz, u.value(n)),
                        Some(f) => eps1(z, set.point(n), uz, u.value(n), f),
                    };
                    EdgeIndicator {
                        center: s.center,
                        neighbor: n,
                        value,
                    }
                })
                .collect())
        })
        .collect();
    Ok(per?.into_iter().flatten().collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineParams<T> {
    /// Marking tolerance γ.
    pub gamma: T,
    /// Separation tolerance μ.
    pub mu: T,
    /// Minimum percentage of new interior centers per call.
    pub percent: T,
    pub indicator: Indicator,
    /// Halve the previous threshold when it is below the new one.
    pub reduction_regime: bool,
    pub max_rounds: usize,
}

impl<T: Real> Default for RefineParams<T> {
    fn default() -> Self {
        Self {
            gamma: T::lit(0.5),
            mu: T::lit(0.8),
            percent: T::lit(15.0),
            indicator: Indicator::Eps1,
            reduction_regime: false,
            max_rounds: 30,
        }
    }
}

impl<T: Real> RefineParams<T> {
    pub fn validate(&self) -> Result<(), RefineError> {
        let unit = |x: T| x > T::zero() && x < T::one();
        if !unit(self.gamma) {
            return Err(RefineError::Params(format!("gamma must lie in (0,1), got {}", self.gamma)));
        }
        if !unit(self.mu) {
            return Err(RefineError::Params(format!("mu must lie in (0,1), got {}", self.mu)));
        }
        if !(self.percent > T::zero()) {
            return Err(RefineError::Params(format!("percent must be positive, got {}", self.percent)));
        }
        if self.max_rounds == 0 {
            return Err(RefineError::Params("max_rounds must be at least 1".into()));
        }
        Ok(())
    }
}

/// Which acceptance test admitted an inserted center.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Acceptance<T> {
    /// Near an interior neighbor: `dist(ξ', Ξ') ≥ μ·sep` with the recorded
    /// local separation.
    Separation { sep: T },
    /// Near a boundary neighbor: `dist(ξ', Ξ') ≥ d/2`.
    HalfEdge,
    /// Boundary midpoint between two boundary centers.
    BoundaryMidpoint,
}

/// One inserted center and the state it was tested against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Insertion<T> {
    pub id: usize,
    pub point: Point2<T>,
    pub kind: CenterKind,
    pub edge: (usize, usize),
    pub round: usize,
    /// Number of centers in `Ξ'` when the test was made (the first
    /// `set_len` centers of the output).
    pub set_len: usize,
    /// `‖ζ − ξ‖ / 2`
    pub d: T,
    pub dist_to_set: T,
    pub dist_to_boundary: T,
    pub acceptance: Acceptance<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundLog<T> {
    /// 0 for the first pass.
    pub round: usize,
    pub threshold: T,
    pub edges_marked: usize,
    pub interior_added: usize,
    pub boundary_added: usize,
}

#[derive(Clone, Debug)]
pub struct RefineOutcome<T> {
    pub centers: CenterSet<T>,
    /// Threshold of the final pass.
    pub threshold: T,
    /// Largest indicator over all edges.
    pub max_indicator: T,
    pub rounds: Vec<RoundLog<T>>,
    pub insertions: Vec<Insertion<T>>,
}

impl<T> RefineOutcome<T> {
    pub fn interior_added(&self) -> usize {
        self.rounds.iter().map(|r| r.interior_added).sum()
    }

    pub fn boundary_added(&self) -> usize {
        self.rounds.iter().map(|r| r.boundary_added).sum()
    }

    pub fn edges_marked(&self) -> usize {
        self.rounds.iter().map(|r| r.edges_marked).sum()
    }
}

/// Local separation: mean nearest-neighbor distance of the (up to) four
/// centers of `set` closest to `p`.
pub fn local_separation<T: Real>(set: &CenterSet<T>, p: Point2<T>) -> T {
    let near = set.nearest_with_distance(p, 4, None);
    if near.is_empty() {
        return T::zero();
    }
    let total: T = near
        .iter()
        .map(|&(id, _)| {
            set.nearest_with_distance(set.point(id), 1, Some(id))
                .first()
                .map_or(T::zero(), |&(_, d)| d)
        })
        .sum();
    total / T::from_count(near.len())
}

/// Indicator magnitude treated as zero, relative to the largest `|û|`.
pub fn noise_floor<T: Real>(u: &DiscreteSolution<T>) -> T {
    let scale = u
        .values
        .iter()
        .filter(|v| v.is_finite())
        .fold(T::zero(), |m, v| m.max(v.abs()));
    T::lit(1e-10).max(T::epsilon() * T::lit(100.0)) * scale
}

/// Refines `set` from the stencils and discrete solution of the current step.
pub fn refine<T: Real>(
    set: &CenterSet<T>,
    stencils: &[Stencil<T>],
    u: &DiscreteSolution<T>,
    params: &RefineParams<T>,
    domain: &Domain<T>,
    prev_threshold: Option<T>,
) -> Result<RefineOutcome<T>, RefineError> {
    params.validate()?;
    let edges = edge_indicators(set, stencils, u, params.indicator)?;
    refine_edges(set, &edges, params, domain, prev_threshold, noise_floor(u))
}

/// Refinement driven by precomputed edge indicators, processed in the given
/// order. Indicator values at or below `noise` are never marked.
pub fn refine_edges<T: Real>(
    set: &CenterSet<T>,
    edges: &[EdgeIndicator<T>],
    params: &RefineParams<T>,
    domain: &Domain<T>,
    prev_threshold: Option<T>,
    noise: T,
) -> Result<RefineOutcome<T>, RefineError> {
    params.validate()?;
    let max_indicator = edges.iter().map(|e| e.value).fold(T::zero(), T::max);
    let mut threshold = params.gamma * max_indicator;
    if params.reduction_regime {
        if let Some(prev) = prev_threshold {
            if prev < threshold {
                threshold = prev / T::lit(2.0);
            }
        }
    }
    let mut state = Inserter::new(set, domain, params.mu);
    let target = params.percent * T::from_count(set.n_interior()) / T::lit(100.0);
    let mut rounds = Vec::new();
    for round in 0..params.max_rounds {
        let before = (state.interior_added, state.boundary_added);
        let mut marked = 0;
        for e in edges {
            if e.value >= threshold && e.value > noise {
                marked += 1;
                state.process(e.center, e.neighbor, round);
            }
        }
        rounds.push(RoundLog {
            round,
            threshold,
            edges_marked: marked,
            interior_added: state.interior_added - before.0,
            boundary_added: state.boundary_added - before.1,
        });
        if T::from_count(state.interior_added) >= target {
            break;
        }
        if round + 1 < params.max_rounds {
            threshold *= params.gamma;
        }
    }
    if state.interior_added == 0 && state.boundary_added == 0 {
        return Err(RefineError::Stalled {
            rounds: params.max_rounds,
        });
    }
    if T::from_count(state.interior_added) < target {
        log::warn!(
            "refinement added {} interior centers after {} rounds, below the requested {}%",
            state.interior_added,
            params.max_rounds,
            params.percent
        );
    }
    Ok(RefineOutcome {
        centers: state.out,
        threshold,
        max_indicator,
        rounds,
        insertions: state.insertions,
    })
}

struct Inserter<'a, T> {
    original: &'a CenterSet<T>,
    domain: &'a Domain<T>,
    mu: T,
    out: CenterSet<T>,
    /// Original boundary centers per segment, sorted by parameter.
    on_segment: BTreeMap<usize, Vec<(T, usize)>>,
    refined_pairs: HashSet<(usize, usize)>,
    insertions: Vec<Insertion<T>>,
    interior_added: usize,
    boundary_added: usize,
}

impl<'a, T: Real> Inserter<'a, T> {
    fn new(set: &'a CenterSet<T>, domain: &'a Domain<T>, mu: T) -> Self {
        let mut on_segment: BTreeMap<usize, Vec<(T, usize)>> = BTreeMap::new();
        for id in set.boundary_ids() {
            for loc in set.locations(id) {
                on_segment.entry(loc.segment).or_default().push((loc.t, id));
            }
        }
        for list in on_segment.values_mut() {
            list.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
        }
        Self {
            original: set,
            domain,
            mu,
            out: set.clone(),
            on_segment,
            refined_pairs: HashSet::new(),
            insertions: Vec::new(),
            interior_added: 0,
            boundary_added: 0,
        }
    }

    fn process(&mut self, zeta_id: usize, xi_id: usize, round: usize) {
        let zeta = self.original.point(zeta_id);
        let xi = self.original.point(xi_id);
        let mid = zeta.midpoint(xi);
        let d = zeta.dist(xi) / T::lit(2.0);
        let nu = (xi - zeta).perp() * (T::one() / (d + d));
        let candidates = [mid, mid + nu * d, mid - nu * d];
        let half = d / T::lit(2.0);
        let set_len = self.out.len();
        let mut chosen: Vec<(Point2<T>, T, T, Acceptance<T>)> = Vec::new();

        if self.original.is_interior(xi_id) {
            for &c in &candidates {
                if !self.domain.contains(c) {
                    continue;
                }
                let db = self.domain.dist_to_boundary(c);
                if db < half {
                    continue;
                }
                let ds = self.out.distance_to_set(c);
                let sep = local_separation(&self.out, c);
                if ds >= self.mu * sep {
                    chosen.push((c, ds, db, Acceptance::Separation { sep }));
                }
            }
            self.commit_interior(&chosen, (zeta_id, xi_id), round, set_len, d);
            return;
        }

        for &c in &candidates {
            if !self.domain.contains(c) {
                continue;
            }
            let db = self.domain.dist_to_boundary(c);
            let ds = self.out.distance_to_set(c);
            if db >= half && ds >= half {
                chosen.push((c, ds, db, Acceptance::HalfEdge));
            }
        }
        let add_midpoints = !chosen.is_empty() || self.domain.dist_to_boundary(mid) < half;
        self.commit_interior(&chosen, (zeta_id, xi_id), round, set_len, d);
        if add_midpoints {
            self.boundary_midpoints(xi_id, mid, d, (zeta_id, xi_id), round);
        }
    }

    fn commit_interior(&mut self, chosen: &[(Point2<T>, T, T, Acceptance<T>)], edge: (usize, usize), round: usize, set_len: usize, d: T) {
        for &(p, ds, db, acceptance) in chosen {
            let id = self.out.push_interior(p);
            self.interior_added += 1;
            self.insertions.push(Insertion {
                id,
                point: p,
                kind: CenterKind::Interior,
                edge,
                round,
                set_len,
                d,
                dist_to_set: ds,
                dist_to_boundary: db,
                acceptance,
            });
        }
    }

    /// Neighbors of boundary center `xi` among the original boundary centers,
    /// one per direction along each incident segment.
    fn boundary_neighbors(&self, xi: usize) -> Vec<(usize, usize, T, T)> {
        let mut found = Vec::new();
        for loc in self.original.locations(xi) {
            let Some(list) = self.on_segment.get(&loc.segment) else {
                continue;
            };
            let pos = list.iter().position(|&(_, id)| id == xi);
            let Some(pos) = pos else { continue };
            if pos > 0 {
                let (t, id) = list[pos - 1];
                found.push((loc.segment, id, t, loc.t));
            }
            if pos + 1 < list.len() {
                let (t, id) = list[pos + 1];
                found.push((loc.segment, id, loc.t, t));
            }
        }
        found
    }

    fn boundary_midpoints(&mut self, xi_id: usize, mid: Point2<T>, d: T, edge: (usize, usize), round: usize) {
        let xi = self.original.point(xi_id);
        let neighbors = self.boundary_neighbors(xi_id);
        let points: Vec<(Point2<T>, usize, usize, T)> = neighbors
            .iter()
            .map(|&(seg, other, t1, t2)| (self.domain.boundary_midpoint(seg, t1, t2), seg, other, (t1 + t2) / T::lit(2.0)))
            .collect();
        let mut keep = vec![true; points.len()];
        if points.len() == 2 {
            let (minus, plus) = (points[0].0, points[1].0);
            let spread = xi.dist(minus) + xi.dist(plus) <= T::lit(2.0) * plus.dist(minus);
            let suppressed = |a: Point2<T>, b: Point2<T>| {
                a.dist(mid) >= b.dist(mid) && xi.dist(a) <= d.min(T::lit(2.0) * xi.dist(b)) && spread
            };
            keep[0] = !suppressed(minus, plus);
            keep[1] = !suppressed(plus, minus);
        }
        for ((p, seg, other, t), keep) in points.into_iter().zip(keep) {
            let pair = (xi_id.min(other), xi_id.max(other));
            if !keep || self.refined_pairs.contains(&pair) {
                continue;
            }
            self.refined_pairs.insert(pair);
            let set_len = self.out.len();
            let ds = self.out.distance_to_set(p);
            let id = self.out.push_boundary(p, vec![BoundaryLocation { segment: seg, t }]);
            self.boundary_added += 1;
            self.insertions.push(Insertion {
                id,
                point: p,
                kind: CenterKind::Boundary,
                edge,
                round,
                set_len,
                d,
                dist_to_set: ds,
                dist_to_boundary: T::zero(),
                acceptance: Acceptance::BoundaryMidpoint,
            });
        }
    }
}
