//! Planar domains with parameterized boundaries: containment, visibility,
//! distance and boundary-midpoint queries.

mod domain;
mod point;
mod segment;

pub use domain::{BoundaryLocation, Chain, Domain, Region, Vertex};
pub use point::Point2;
pub use segment::Segment;

use crate::Real;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite coordinate in boundary description")]
    NonFinite,
    #[error("boundary segment has zero length or zero angular extent")]
    DegenerateSegment,
    #[error("arc endpoints are not equidistant from the center")]
    ArcEndpoints,
    #[error("domain needs at least one closed loop")]
    NoLoops,
    #[error("empty boundary chain")]
    EmptyChain,
    #[error("boundary chain does not close after segment {segment}")]
    OpenLoop { segment: usize },
    #[error("closed boundary chain {chain} encloses no area")]
    ZeroArea { chain: usize },
    #[error("boundary segments {first} and {second} intersect away from a shared vertex")]
    SelfIntersection { first: usize, second: usize },
    #[error("cannot parse domain description: {0}")]
    Parse(String),
}

/// Parses a textual boundary description.
///
/// Chains are separated by `;` and start with `loop` or `slit`, followed by
/// vertices `x,y`. Consecutive vertices are joined by straight segments
/// unless an `arc:cx,cy,ccw` (or `cw`) token sits between them. Loops close
/// back to their first vertex with a straight segment unless the last token
/// is an arc.
///
/// ```
/// use rbffd::geometry::parse_domain;
/// let d = parse_domain::<f64>("loop 0,0 1,0 1,1 0,1").unwrap();
/// assert!(d.contains(rbffd::Point2::new(0.5, 0.5)));
/// ```
pub fn parse_domain<T: Real>(text: &str) -> Result<Domain<T>, GeometryError> {
    let err = |m: &str| GeometryError::Parse(m.to_string());
    let num = |s: &str| -> Result<T, GeometryError> {
        s.trim()
            .parse::<f64>()
            .map(T::lit)
            .map_err(|_| GeometryError::Parse(format!("bad number `{s}`")))
    };
    let pair = |s: &str| -> Result<Point2<T>, GeometryError> {
        let (a, b) = s.split_once(',').ok_or_else(|| err(&format!("bad vertex `{s}`")))?;
        Ok(Point2::new(num(a)?, num(b)?))
    };

    let mut loops = Vec::new();
    let mut slits = Vec::new();
    for chain in text.split(';').map(str::trim).filter(|c| !c.is_empty()) {
        let mut tokens = chain.split_whitespace();
        let closed = match tokens.next() {
            Some("loop") => true,
            Some("slit") => false,
            other => return Err(err(&format!("chain must start with loop or slit, got {other:?}"))),
        };
        let mut vertices: Vec<Point2<T>> = Vec::new();
        // arcs[i] describes the piece leaving vertices[i]
        let mut arcs: Vec<Option<(Point2<T>, bool)>> = Vec::new();
        for tok in tokens {
            if let Some(rest) = tok.strip_prefix("arc:") {
                let parts: Vec<&str> = rest.split(',').collect();
                if parts.len() != 3 || vertices.is_empty() {
                    return Err(err(&format!("bad arc token `{tok}`")));
                }
                let ccw = match parts[2] {
                    "ccw" => true,
                    "cw" => false,
                    o => return Err(err(&format!("arc orientation must be ccw or cw, got `{o}`"))),
                };
                *arcs.last_mut().expect("vertex before arc") = Some((Point2::new(num(parts[0])?, num(parts[1])?), ccw));
            } else {
                vertices.push(pair(tok)?);
                arcs.push(None);
            }
        }
        if vertices.len() < 2 {
            return Err(err("chain needs at least two vertices"));
        }
        let n = vertices.len();
        let pieces = if closed { n } else { n - 1 };
        let mut segs = Vec::with_capacity(pieces);
        for i in 0..pieces {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            segs.push(match arcs[i] {
                Some((c, ccw)) => Segment::arc_between(c, a, b, ccw)?,
                None => Segment::line(a, b)?,
            });
        }
        if closed {
            loops.push(segs);
        } else {
            slits.push(segs);
        }
    }
    Domain::new(loops, slits)
}
