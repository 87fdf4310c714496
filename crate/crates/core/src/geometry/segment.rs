use super::{GeometryError, Point2};
use crate::Real;

/// One piece of a domain boundary, parameterized over `t` in `[0, 1]`.
///
/// Arcs are parameterized by angle, so `t` is proportional to arc length for
/// both kinds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Segment<T> {
    Line {
        start: Point2<T>,
        end: Point2<T>,
    },
    /// Circular arc from `start_angle` sweeping by `sweep` radians (negative
    /// sweep runs clockwise).
    Arc {
        center: Point2<T>,
        radius: T,
        start_angle: T,
        sweep: T,
    },
}

impl<T: Real> Segment<T> {
    pub fn line(start: Point2<T>, end: Point2<T>) -> Result<Self, GeometryError> {
        if !start.is_finite() || !end.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if start.dist(end) <= T::geom_eps() {
            return Err(GeometryError::DegenerateSegment);
        }
        Ok(Segment::Line { start, end })
    }

    pub fn arc(center: Point2<T>, radius: T, start_angle: T, sweep: T) -> Result<Self, GeometryError> {
        if !center.is_finite() || !radius.is_finite() || !start_angle.is_finite() || !sweep.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if radius <= T::zero() || sweep.abs() <= T::geom_eps() || sweep.abs() > T::TAU() {
            return Err(GeometryError::DegenerateSegment);
        }
        Ok(Segment::Arc {
            center,
            radius,
            start_angle,
            sweep,
        })
    }

    /// Arc around `center` from `from` to `to`, turning counterclockwise when
    /// `ccw` is set. Both endpoints must be equidistant from the center.
    pub fn arc_between(center: Point2<T>, from: Point2<T>, to: Point2<T>, ccw: bool) -> Result<Self, GeometryError> {
        let radius = from.dist(center);
        if (to.dist(center) - radius).abs() > T::lit(1e-9).max(T::geom_eps()) * radius.max(T::one()) {
            return Err(GeometryError::ArcEndpoints);
        }
        let a0 = (from - center).angle();
        let a1 = (to - center).angle();
        let mut sweep = a1 - a0;
        if ccw {
            while sweep <= T::zero() {
                sweep += T::TAU();
            }
        } else {
            while sweep >= T::zero() {
                sweep -= T::TAU();
            }
        }
        Self::arc(center, radius, a0, sweep)
    }

    #[inline]
    pub fn is_straight(&self) -> bool {
        matches!(self, Segment::Line { .. })
    }

    pub fn point_at(&self, t: T) -> Point2<T> {
        match *self {
            Segment::Line { start, end } => start.lerp(end, t),
            Segment::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => center + Point2::from_angle(start_angle + sweep * t) * radius,
        }
    }

    pub fn start(&self) -> Point2<T> {
        match *self {
            Segment::Line { start, .. } => start,
            _ => self.point_at(T::zero()),
        }
    }

    pub fn end(&self) -> Point2<T> {
        match *self {
            Segment::Line { end, .. } => end,
            _ => self.point_at(T::one()),
        }
    }

    pub fn length(&self) -> T {
        match *self {
            Segment::Line { start, end } => start.dist(end),
            Segment::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    /// Point halfway between parameters `t1` and `t2`.
    pub fn midpoint_between(&self, t1: T, t2: T) -> Point2<T> {
        self.point_at((t1 + t2) * T::lit(0.5))
    }

    /// Parameter of the angular position of `p` measured along the sweep,
    /// in `[0, 2pi / |sweep|)`. Values above one lie outside the arc.
    fn arc_param(&self, p: Point2<T>) -> T {
        match *self {
            Segment::Arc {
                center,
                start_angle,
                sweep,
                ..
            } => {
                let mut rel = (p - center).angle() - start_angle;
                if sweep < T::zero() {
                    rel = -rel;
                }
                rel = rel % T::TAU();
                if rel < T::zero() {
                    rel += T::TAU();
                }
                rel / sweep.abs()
            }
            Segment::Line { .. } => unreachable!("arc_param on a line"),
        }
    }

    /// Distance from `p` to the segment together with the parameter of the
    /// closest point.
    pub fn closest(&self, p: Point2<T>) -> (T, T) {
        match *self {
            Segment::Line { start, end } => {
                let d = end - start;
                let t = ((p - start).dot(d) / d.norm_sq()).max(T::zero()).min(T::one());
                (p.dist(start.lerp(end, t)), t)
            }
            Segment::Arc { center, radius, .. } => {
                let r = p.dist(center);
                if r <= T::epsilon() * radius {
                    return (radius, T::zero());
                }
                let t = self.arc_param(p);
                if t <= T::one() {
                    return ((r - radius).abs(), t);
                }
                let ds = p.dist(self.start());
                let de = p.dist(self.end());
                if ds <= de {
                    (ds, T::zero())
                } else {
                    (de, T::one())
                }
            }
        }
    }

    #[inline]
    pub fn distance(&self, p: Point2<T>) -> T {
        self.closest(p).0
    }

    /// True when the segment from `a` to `b`, without its endpoints, meets
    /// this boundary piece. `tol` is an absolute length below which a contact
    /// at `a` or `b` is treated as the endpoint itself.
    pub fn meets_open_segment(&self, a: Point2<T>, b: Point2<T>, tol: T) -> bool {
        let d1 = b - a;
        let len = d1.norm();
        if len <= tol {
            return false;
        }
        let ts = tol / len;
        match *self {
            Segment::Line { start, end } => {
                let d2 = end - start;
                let len2 = d2.norm();
                let denom = d1.cross(d2);
                let ac = start - a;
                if denom.abs() > T::lit(1e-12) * len * len2 {
                    let s = ac.cross(d2) / denom;
                    let u = ac.cross(d1) / denom;
                    let tu = tol / len2;
                    s > ts && s < T::one() - ts && u >= -tu && u <= T::one() + tu
                } else {
                    // parallel; only a collinear overlap of positive length counts
                    if ac.cross(d1).abs() > tol * len {
                        return false;
                    }
                    let sc = ac.dot(d1) / (len * len);
                    let sd = (end - a).dot(d1) / (len * len);
                    let lo = sc.min(sd).max(ts);
                    let hi = sc.max(sd).min(T::one() - ts);
                    hi > lo
                }
            }
            Segment::Arc { center, radius, sweep, .. } => {
                let f = a - center;
                let qa = d1.norm_sq();
                let qb = T::lit(2.0) * d1.dot(f);
                let qc = f.norm_sq() - radius * radius;
                let disc = qb * qb - T::lit(4.0) * qa * qc;
                if disc < T::zero() {
                    return false;
                }
                let sq = disc.sqrt();
                let ang_tol = tol / radius / sweep.abs();
                [(-qb - sq) / (T::lit(2.0) * qa), (-qb + sq) / (T::lit(2.0) * qa)]
                    .into_iter()
                    .filter(|&s| s > ts && s < T::one() - ts)
                    .any(|s| {
                        let t = self.arc_param(a + d1 * s);
                        t <= T::one() + ang_tol || t >= T::TAU() / sweep.abs() - ang_tol
                    })
            }
        }
    }

    /// Signed angle subtended at `p` while traversing the segment. Summing
    /// over a closed loop gives `2pi` times the winding number.
    pub fn subtended_angle(&self, p: Point2<T>) -> T {
        let chord = |s: Point2<T>, e: Point2<T>| {
            let u = s - p;
            let v = e - p;
            u.cross(v).atan2(u.dot(v))
        };
        match *self {
            Segment::Line { start, end } => chord(start, end),
            Segment::Arc {
                center, radius, sweep, ..
            } => {
                let s = self.start();
                let e = self.end();
                let inside_circle = p.dist(center) < radius;
                if sweep.abs() >= T::TAU() - T::geom_eps() {
                    return if inside_circle { T::TAU() * sweep.signum() } else { T::zero() };
                }
                let base = chord(s, e);
                if !inside_circle {
                    return base;
                }
                // p inside the region bounded by the arc and its chord?
                let mid = self.point_at(T::lit(0.5));
                let side_p = (e - s).cross(p - s);
                let side_m = (e - s).cross(mid - s);
                if side_p * side_m > T::zero() {
                    base + T::TAU() * sweep.signum()
                } else {
                    base
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    #[test]
    fn straight_midpoint() {
        let s = Segment::line(p(0.0, 0.0), p(1.0, 0.0)).unwrap();
        assert_eq!(s.midpoint_between(0.0, 1.0), p(0.5, 0.0));
        assert_eq!(s.midpoint_between(0.3, 0.3), s.point_at(0.3));
    }

    #[test]
    fn curved_slit_arc_midpoint_stays_on_circle() {
        let c = p(1.0, -0.75);
        let arc = Segment::arc_between(c, p(0.0, 0.0), p(1.0, 0.5), false).unwrap();
        assert!((arc.radius_check(c) - 1.25).abs() < 1e-15);
        let m = arc.midpoint_between(0.0, 1.0);
        assert!((m.dist(c) - 1.25).abs() < 1e-12);
        // bisecting angle of the two endpoint directions
        let a0 = (p(0.0, 0.0) - c).angle();
        let a1 = (p(1.0, 0.5) - c).angle();
        assert!(((m - c).angle() - 0.5 * (a0 + a1)).abs() < 1e-12);
        assert!(arc.start().dist(p(0.0, 0.0)) < 1e-12);
        assert!(arc.end().dist(p(1.0, 0.5)) < 1e-12);
    }

    impl Segment<f64> {
        fn radius_check(&self, c: Point2<f64>) -> f64 {
            self.point_at(0.37).dist(c)
        }
    }

    #[test]
    fn arc_distance() {
        let arc = Segment::arc(p(0.0, 0.0), 1.0, -0.75 * PI, 1.5 * PI).unwrap();
        assert!((arc.distance(p(0.5, 0.0)) - 0.5).abs() < 1e-15);
        // behind the arc opening: nearest is an endpoint
        let q = p(-0.9, 0.0);
        let expected = q.dist(arc.start()).min(q.dist(arc.end()));
        assert!((arc.distance(q) - expected).abs() < 1e-15);
        assert_eq!(arc.distance(p(0.0, 0.0)), 1.0);
    }

    #[test]
    fn line_crossing() {
        let s = Segment::line(p(0.0, 0.0), p(1.0, 0.0)).unwrap();
        assert!(s.meets_open_segment(p(0.5, 0.1), p(0.5, -0.1), 1e-12));
        assert!(!s.meets_open_segment(p(0.5, 0.1), p(0.5, 0.0), 1e-12));
        assert!(!s.meets_open_segment(p(1.5, 0.1), p(1.5, -0.1), 1e-12));
        // through the endpoint of the boundary piece
        assert!(s.meets_open_segment(p(1.0, 0.1), p(1.0, -0.1), 1e-12));
        // collinear overlap
        assert!(s.meets_open_segment(p(-0.5, 0.0), p(0.5, 0.0), 1e-12));
        assert!(!s.meets_open_segment(p(-0.5, 0.0), p(0.0, 0.0), 1e-12));
    }

    #[test]
    fn arc_crossing() {
        let arc = Segment::arc(p(0.0, 0.0), 1.0, 0.0, 0.5 * PI).unwrap();
        let c = (0.25 * PI).cos();
        assert!(arc.meets_open_segment(p(0.0, 0.0), p(2.0 * c, 2.0 * c), 1e-12));
        assert!(!arc.meets_open_segment(p(0.0, 0.0), p(-2.0, 0.1), 1e-12));
        assert!(!arc.meets_open_segment(p(0.0, 0.0), p(c, c), 1e-12));
    }

    #[test]
    fn winding_of_circle_pieces() {
        let upper = Segment::arc(p(0.0, 0.0), 1.0, 0.0, PI).unwrap();
        let lower = Segment::arc(p(0.0, 0.0), 1.0, PI, PI).unwrap();
        for q in [p(0.0, 0.5), p(0.3, -0.6), p(0.0, 0.0), p(0.99, 0.0)] {
            let w = upper.subtended_angle(q) + lower.subtended_angle(q);
            assert!((w - 2.0 * PI).abs() < 1e-12, "{q:?} {w}");
        }
        let w = upper.subtended_angle(p(1.5, 0.2)) + lower.subtended_angle(p(1.5, 0.2));
        assert!(w.abs() < 1e-12);
    }
}
