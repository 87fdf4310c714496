use super::{GeometryError, Point2, Segment};
use crate::Real;
use std::ops::Range;

/// Closed-form membership test for the benchmark shapes. Used instead of the
/// winding number when present so that corners are classified exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region<T> {
    /// Open axis-aligned rectangle.
    Rect { min: Point2<T>, max: Point2<T> },
    /// `{ r < radius, angle in (start, start + sweep) }` around `center`.
    Sector {
        center: Point2<T>,
        radius: T,
        start_angle: T,
        sweep: T,
    },
    /// Open rectangle intersected with the wedge `0 < phi < omega`, where
    /// `phi in [0, 2pi)` is the polar angle about the origin.
    RectWedge { min: Point2<T>, max: Point2<T>, omega: T },
}

impl<T: Real> Region<T> {
    pub fn contains(&self, p: Point2<T>) -> bool {
        let in_rect = |min: Point2<T>, max: Point2<T>| p.x > min.x && p.x < max.x && p.y > min.y && p.y < max.y;
        match *self {
            Region::Rect { min, max } => in_rect(min, max),
            Region::Sector {
                center,
                radius,
                start_angle,
                sweep,
            } => {
                let d = p - center;
                let r = d.norm();
                if r <= T::zero() || r >= radius {
                    return false;
                }
                let mut rel = (d.angle() - start_angle) % T::TAU();
                if rel < T::zero() {
                    rel += T::TAU();
                }
                rel > T::zero() && rel < sweep
            }
            Region::RectWedge { min, max, omega } => {
                if !in_rect(min, max) || p.norm() <= T::zero() {
                    return false;
                }
                let phi = p.angle_2pi();
                phi > T::zero() && phi < omega
            }
        }
    }
}

/// Boundary segments ordered into chains.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    pub segments: Range<usize>,
    /// Closed loops bound the region; open chains are two-sided slits.
    pub closed: bool,
}

/// A boundary location: segment id and parameter on that segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryLocation<T> {
    pub segment: usize,
    pub t: T,
}

/// A distinct segment endpoint and all segment ends meeting there.
#[derive(Clone, Debug, PartialEq)]
pub struct Vertex<T> {
    pub point: Point2<T>,
    pub incidences: Vec<BoundaryLocation<T>>,
}

/// Planar region bounded by closed loops of segments, optionally cut by slits.
#[derive(Clone, Debug)]
pub struct Domain<T> {
    segments: Vec<Segment<T>>,
    chains: Vec<Chain>,
    region: Option<Region<T>>,
    vertices: Vec<Vertex<T>>,
    min: Point2<T>,
    max: Point2<T>,
    tol: T,
}

impl<T: Real> Domain<T> {
    /// Builds a domain from closed loops (outer loop counterclockwise, holes
    /// clockwise) and open slit chains.
    pub fn new(loops: Vec<Vec<Segment<T>>>, slits: Vec<Vec<Segment<T>>>) -> Result<Self, GeometryError> {
        if loops.is_empty() {
            return Err(GeometryError::NoLoops);
        }
        let mut segments = Vec::new();
        let mut chains = Vec::new();
        for (closed, list) in loops.into_iter().map(|l| (true, l)).chain(slits.into_iter().map(|s| (false, s))) {
            if list.is_empty() {
                return Err(GeometryError::EmptyChain);
            }
            let start = segments.len();
            segments.extend(list);
            chains.push(Chain {
                segments: start..segments.len(),
                closed,
            });
        }

        let mut min = Point2::new(T::infinity(), T::infinity());
        let mut max = Point2::new(T::neg_infinity(), T::neg_infinity());
        for s in &segments {
            for i in 0..=64 {
                let q = s.point_at(T::from_count(i) / T::lit(64.0));
                min = Point2::new(min.x.min(q.x), min.y.min(q.y));
                max = Point2::new(max.x.max(q.x), max.y.max(q.y));
            }
        }
        let scale = (max - min).norm().max(T::one());
        let tol = T::geom_eps() * scale;

        for chain in &chains {
            let r = chain.segments.clone();
            for i in r.clone() {
                let next = if i + 1 < r.end {
                    i + 1
                } else if chain.closed {
                    r.start
                } else {
                    break;
                };
                if segments[i].end().dist(segments[next].start()) > tol {
                    return Err(GeometryError::OpenLoop { segment: i });
                }
            }
        }

        for (index, chain) in chains.iter().enumerate().filter(|(_, c)| c.closed) {
            let mut area = T::zero();
            for s in &segments[chain.segments.clone()] {
                for i in 0..64 {
                    let a = s.point_at(T::from_count(i) / T::lit(64.0));
                    let b = s.point_at(T::from_count(i + 1) / T::lit(64.0));
                    area += a.cross(b);
                }
            }
            if area.abs() <= tol * scale {
                return Err(GeometryError::ZeroArea { chain: index });
            }
        }

        let mut vertices: Vec<Vertex<T>> = Vec::new();
        for (id, s) in segments.iter().enumerate() {
            for (t, q) in [(T::zero(), s.start()), (T::one(), s.end())] {
                let loc = BoundaryLocation { segment: id, t };
                match vertices.iter_mut().find(|v| v.point.dist(q) <= tol) {
                    Some(v) => v.incidences.push(loc),
                    None => vertices.push(Vertex {
                        point: q,
                        incidences: vec![loc],
                    }),
                }
            }
        }

        let domain = Self {
            segments,
            chains,
            region: None,
            vertices,
            min,
            max,
            tol,
        };
        domain.check_simple()?;
        Ok(domain)
    }

    /// Attaches a closed-form membership test.
    pub fn with_region(mut self, region: Region<T>) -> Self {
        self.region = Some(region);
        self
    }

    // Segments may only touch at shared vertices. Arcs are checked through a
    // fine polyline.
    fn check_simple(&self) -> Result<(), GeometryError> {
        let pieces = |s: &Segment<T>| -> Vec<(Point2<T>, Point2<T>)> {
            match s {
                Segment::Line { start, end } => vec![(*start, *end)],
                Segment::Arc { .. } => {
                    let n = 64;
                    (0..n)
                        .map(|i| {
                            (
                                s.point_at(T::from_count(i) / T::from_count(n)),
                                s.point_at(T::from_count(i + 1) / T::from_count(n)),
                            )
                        })
                        .collect()
                }
            }
        };
        let near_vertex = |q: Point2<T>| self.vertices.iter().any(|v| v.point.dist(q) <= T::lit(1e-9) * self.scale());
        for i in 0..self.segments.len() {
            for j in 0..self.segments.len() {
                if i == j {
                    continue;
                }
                for (a, b) in pieces(&self.segments[i]) {
                    if !self.segments[j].meets_open_segment(a, b, self.tol) {
                        continue;
                    }
                    // contacts next to a shared vertex are allowed
                    let (da, _) = self.segments[j].closest(a);
                    let (db, _) = self.segments[j].closest(b);
                    let touching_vertex = (da <= self.tol && near_vertex(a)) || (db <= self.tol && near_vertex(b));
                    if !touching_vertex {
                        return Err(GeometryError::SelfIntersection { first: i, second: j });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    pub fn segment(&self, id: usize) -> &Segment<T> {
        &self.segments[id]
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    pub fn vertices(&self) -> &[Vertex<T>] {
        &self.vertices
    }

    pub fn region(&self) -> Option<&Region<T>> {
        self.region.as_ref()
    }

    pub fn is_slit_segment(&self, id: usize) -> bool {
        self.chains.iter().any(|c| !c.closed && c.segments.contains(&id))
    }

    pub fn bounding_box(&self) -> (Point2<T>, Point2<T>) {
        (self.min, self.max)
    }

    /// Length of the bounding box diagonal.
    pub fn diameter(&self) -> T {
        (self.max - self.min).norm()
    }

    fn scale(&self) -> T {
        self.diameter().max(T::one())
    }

    /// Absolute length below which points count as lying on the boundary.
    pub fn tolerance(&self) -> T {
        self.tol
    }

    /// Winding number of the closed loops around `p`.
    pub fn winding_number(&self, p: Point2<T>) -> i32 {
        let total: T = self
            .chains
            .iter()
            .filter(|c| c.closed)
            .flat_map(|c| c.segments.clone())
            .map(|i| self.segments[i].subtended_angle(p))
            .sum();
        (total / T::TAU()).round().to_i32().unwrap_or(0)
    }

    /// True iff `p` lies strictly inside; points on loops or slits are outside.
    pub fn contains(&self, p: Point2<T>) -> bool {
        if !p.is_finite() || p.x <= self.min.x || p.x >= self.max.x || p.y <= self.min.y || p.y >= self.max.y {
            return false;
        }
        let inside = match &self.region {
            Some(r) => r.contains(p),
            None => self.winding_number(p) != 0,
        };
        inside && self.dist_to_boundary(p) > self.tol
    }

    /// True iff the open segment `ab` meets the boundary, slits included.
    pub fn segment_blocked(&self, a: Point2<T>, b: Point2<T>) -> bool {
        if a.dist(b) <= self.tol {
            return false;
        }
        self.segments.iter().any(|s| s.meets_open_segment(a, b, self.tol))
    }

    pub fn dist_to_boundary(&self, p: Point2<T>) -> T {
        self.segments.iter().map(|s| s.distance(p)).fold(T::infinity(), T::min)
    }

    /// Every segment location within `tol` of `p`; several for vertices.
    pub fn locate_on_boundary(&self, p: Point2<T>, tol: T) -> Vec<BoundaryLocation<T>> {
        if let Some(v) = self.vertices.iter().find(|v| v.point.dist(p) <= tol) {
            return v.incidences.clone();
        }
        self.segments
            .iter()
            .enumerate()
            .filter_map(|(segment, s)| {
                let (d, t) = s.closest(p);
                (d <= tol).then_some(BoundaryLocation { segment, t })
            })
            .collect()
    }

    /// Point on segment `segment` halfway (in parameter) between `t1` and `t2`.
    pub fn boundary_midpoint(&self, segment: usize, t1: T, t2: T) -> Point2<T> {
        self.segments[segment].midpoint_between(t1, t2)
    }
}
