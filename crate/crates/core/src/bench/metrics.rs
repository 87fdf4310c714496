use crate::centers::CenterSet;
use crate::geometry::Domain;
use crate::system::DiscreteSolution;
use crate::{Point2, Real};
use spade::{DelaunayTriangulation, HasPosition, Triangulation};

/// Root mean square error over the interior centers.
pub fn e_c<T: Real>(set: &CenterSet<T>, u_hat: &DiscreteSolution<T>, u: impl Fn(Point2<T>) -> T) -> T {
    let (sum, n) = set
        .interior_ids()
        .map(|id| {
            let e = u_hat.value(id) - u(set.point(id));
            e * e
        })
        .fold((T::zero(), 0usize), |(s, n), e| (s + e, n + 1));
    if n == 0 {
        return T::zero();
    }
    (sum / T::from_count(n)).sqrt()
}

/// Grid error of the piecewise linear interpolant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridError<T> {
    pub rms: T,
    /// Grid points inside the domain that were interpolated.
    pub covered: usize,
    /// Grid points inside the domain outside every kept triangle.
    pub uncovered: usize,
}

struct Vertex {
    pos: spade::Point2<f64>,
    id: usize,
}

impl HasPosition for Vertex {
    type Scalar = f64;
    fn position(&self) -> spade::Point2<f64> {
        self.pos
    }
}

/// Kept triangles of the Delaunay triangulation of `set` as center id
/// triples: those whose centroid lies in the domain.
pub(crate) fn kept_triangles<T: Real>(set: &CenterSet<T>, domain: &Domain<T>) -> Vec<[usize; 3]> {
    let vertices: Vec<Vertex> = set
        .points()
        .iter()
        .enumerate()
        .map(|(id, q)| Vertex {
            pos: spade::Point2::new(q.x.as_f64(), q.y.as_f64()),
            id,
        })
        .collect();
    let Ok(tri) = DelaunayTriangulation::<Vertex>::bulk_load_stable(vertices) else {
        return Vec::new();
    };
    let mut out: Vec<[usize; 3]> = tri
        .inner_faces()
        .map(|f| f.vertices().map(|v| v.data().id))
        .filter(|ids| {
            let c = (set.point(ids[0]) + set.point(ids[1]) + set.point(ids[2])) * (T::one() / T::lit(3.0));
            domain.contains(c)
        })
        .collect();
    out.sort_unstable();
    out
}

/// Uniform grid of step `h` over the bounding box of `domain`, keeping the
/// points inside.
pub(crate) fn grid_points<T: Real>(domain: &Domain<T>, h: T) -> Vec<Point2<T>> {
    let (lo, hi) = domain.bounding_box();
    let nx = ((hi.x - lo.x) / h).floor().to_usize().unwrap_or(0);
    let ny = ((hi.y - lo.y) / h).floor().to_usize().unwrap_or(0);
    let mut pts = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let q = Point2::new(lo.x + T::from_count(i) * h, lo.y + T::from_count(j) * h);
            if domain.contains(q) {
                pts.push(q);
            }
        }
    }
    pts
}

fn barycentric(a: Point2<f64>, b: Point2<f64>, c: Point2<f64>, q: Point2<f64>) -> [f64; 3] {
    let det = (b - a).cross(c - a);
    let l1 = (q - a).cross(c - a) / det;
    let l2 = (b - a).cross(q - a) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Root mean square error of the piecewise linear interpolant of `û` on a
/// uniform grid of step `h`. The interpolant lives on the Delaunay triangles
/// of all centers whose centroid is inside the domain; grid points outside
/// those triangles are counted but not included.
pub fn e_g<T: Real>(
    set: &CenterSet<T>,
    u_hat: &DiscreteSolution<T>,
    domain: &Domain<T>,
    u: impl Fn(Point2<T>) -> T + Sync,
    h: T,
) -> GridError<T> {
    let grid = grid_points(domain, h);
    let (lo, _) = domain.bounding_box();
    let lo = lo.cast::<f64>();
    let hf = h.as_f64();
    let (_, hi) = domain.bounding_box();
    let nx = ((hi.x.as_f64() - lo.x) / hf).floor() as usize + 1;
    // index grid points by lattice coordinates
    let mut slot = std::collections::HashMap::with_capacity(grid.len());
    for (k, q) in grid.iter().enumerate() {
        let i = ((q.x.as_f64() - lo.x) / hf).round() as usize;
        let j = ((q.y.as_f64() - lo.y) / hf).round() as usize;
        slot.insert(j * nx + i, k);
    }
    let mut value: Vec<Option<f64>> = vec![None; grid.len()];
    for t in kept_triangles(set, domain) {
        let v = t.map(|id| set.point(id).cast::<f64>());
        let (xmin, xmax) = (v[0].x.min(v[1].x).min(v[2].x), v[0].x.max(v[1].x).max(v[2].x));
        let (ymin, ymax) = (v[0].y.min(v[1].y).min(v[2].y), v[0].y.max(v[1].y).max(v[2].y));
        let i0 = ((xmin - lo.x) / hf).ceil().max(0.0) as usize;
        let i1 = ((xmax - lo.x) / hf).floor().max(0.0) as usize;
        let j0 = ((ymin - lo.y) / hf).ceil().max(0.0) as usize;
        let j1 = ((ymax - lo.y) / hf).floor().max(0.0) as usize;
        for j in j0..=j1 {
            for i in i0..=i1 {
                let Some(&k) = slot.get(&(j * nx + i)) else { continue };
                if value[k].is_some() {
                    continue;
                }
                let q = grid[k].cast::<f64>();
                let l = barycentric(v[0], v[1], v[2], q);
                if l.iter().all(|&x| x >= -1e-12) {
                    let s: f64 = (0..3).map(|m| l[m] * u_hat.value(t[m]).as_f64()).sum();
                    value[k] = Some(s);
                }
            }
        }
    }
    let mut sum = 0.0;
    let mut covered = 0;
    for (q, v) in grid.iter().zip(&value) {
        if let Some(v) = v {
            let e = v - u(*q).as_f64();
            sum += e * e;
            covered += 1;
        }
    }
    let rms = if covered > 0 { (sum / covered as f64).sqrt() } else { 0.0 };
    GridError {
        rms: T::lit(rms),
        covered,
        uncovered: grid.len() - covered,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::parse_domain;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square() -> Domain<f64> {
        parse_domain("loop 0,0 1,0 1,1 0,1").unwrap()
    }

    fn solution(set: &CenterSet<f64>, u: impl Fn(Point2<f64>) -> f64) -> DiscreteSolution<f64> {
        DiscreteSolution {
            values: set.points().iter().map(|&q| u(q)).collect(),
            residual: 0.0,
        }
    }

    #[test]
    fn rms_on_centers() {
        let domain = square();
        let set = CenterSet::from_points(&domain, &[Point2::new(0.3, 0.3), Point2::new(0.6, 0.6), Point2::new(0.0, 0.0)]).unwrap();
        let exact = |_: Point2<f64>| 1.0;
        let sol = DiscreteSolution {
            values: vec![4.0, 5.0, 100.0],
            residual: 0.0,
        };
        assert!((e_c(&set, &sol, exact) - 5.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(e_c(&set, &solution(&set, exact), exact), 0.0);
        let shifted = solution(&set, |_| 1.25);
        assert!((e_c(&set, &shifted, exact) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn linear_data_is_interpolated_exactly() {
        let domain = square();
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5)].map(|(x, y)| Point2::new(x, y));
        let set = CenterSet::from_points(&domain, &pts).unwrap();
        let u = |q: Point2<f64>| q.x;
        let err = e_g(&set, &solution(&set, u), &domain, u, 0.01);
        assert!(err.rms < 1e-15);
        assert_eq!(err.uncovered, 0);
        assert_eq!(err.covered, 99 * 99);
    }

    /// O(n⁴) Delaunay by the empty circumcircle test.
    fn brute_delaunay(pts: &[Point2<f64>]) -> Vec<[usize; 3]> {
        let n = pts.len();
        let mut tris = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let (pa, pb, pc) = (pts[a], pts[b], pts[c]);
                    let det = (pb - pa).cross(pc - pa);
                    if det.abs() < 1e-14 {
                        continue;
                    }
                    let empty = (0..n).filter(|&d| d != a && d != b && d != c).all(|d| {
                        let m = |q: Point2<f64>| {
                            let r = q - pts[d];
                            [r.x, r.y, r.norm_sq()]
                        };
                        let (x, y, z) = (m(pa), m(pb), m(pc));
                        let incircle = x[0] * (y[1] * z[2] - y[2] * z[1]) - x[1] * (y[0] * z[2] - y[2] * z[0]) + x[2] * (y[0] * z[1] - y[1] * z[0]);
                        incircle * det.signum() <= 0.0
                    });
                    if empty {
                        tris.push([a, b, c]);
                    }
                }
            }
        }
        tris
    }

    #[test]
    fn matches_brute_force_interpolation() {
        let domain = square();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut pts: Vec<Point2<f64>> = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)].iter().map(|&(x, y)| Point2::new(x, y)).collect();
        while pts.len() < 100 {
            pts.push(Point2::new(rng.gen_range(0.02..0.98), rng.gen_range(0.02..0.98)));
        }
        let set = CenterSet::from_points(&domain, &pts).unwrap();
        let u = |q: Point2<f64>| q.x * q.x - 2.0 * q.x * q.y + 0.5 * q.y;
        let h = 0.01;
        let got = e_g(&set, &solution(&set, u), &domain, u, h);

        let tris = brute_delaunay(&pts);
        let mut mine = kept_triangles(&set, &domain);
        let mut theirs: Vec<[usize; 3]> = tris.clone();
        for t in mine.iter_mut().chain(theirs.iter_mut()) {
            t.sort_unstable();
        }
        mine.sort_unstable();
        theirs.sort_unstable();
        assert_eq!(mine, theirs);

        let mut sum = 0.0;
        let mut count = 0;
        for j in 0..=100 {
            for i in 0..=100 {
                let q = Point2::new(i as f64 * h, j as f64 * h);
                if !domain.contains(q) {
                    continue;
                }
                let hit = tris.iter().find_map(|t| {
                    let l = barycentric(pts[t[0]], pts[t[1]], pts[t[2]], q);
                    l.iter().all(|&x| x >= -1e-12).then(|| (0..3).map(|m| l[m] * u(pts[t[m]])).sum::<f64>())
                });
                let v = hit.expect("square is covered");
                sum += (v - u(q)).powi(2);
                count += 1;
            }
        }
        assert_eq!(got.covered, count);
        assert!((got.rms - (sum / count as f64).sqrt()).abs() < 1e-12);
        assert!(got.rms > 0.0);
    }

    #[test]
    fn nonconvex_domain_drops_outside_triangles() {
        // L-shape: the hull triangle spanning the notch is discarded
        let domain = parse_domain("loop 0,0 2,0 2,1 1,1 1,2 0,2").unwrap();
        let pts = [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0), (1.0, 0.0), (0.0, 1.0)]
            .map(|(x, y)| Point2::new(x, y));
        let set = CenterSet::from_points(&domain, &pts).unwrap();
        let kept = kept_triangles(&set, &domain);
        assert!(kept.iter().all(|t| !t.contains(&2) || !t.contains(&4)));
        let u = |q: Point2<f64>| 2.0 * q.x - q.y;
        let err = e_g(&set, &solution(&set, u), &domain, u, 0.05);
        assert!(err.rms < 1e-14);
    }
}
