use crate::geometry::{parse_domain, Domain, GeometryError, Region, Segment};
use crate::{Point2, Real};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("unknown problem `{0}` (expected tp1, tp2, tp3@omega=.., tp4, tp5@alpha=.., tp6a, tp6b or linear)")]
    UnknownProblem(String),
    #[error("bad parameter in `{id}`: {message}")]
    Parameter { id: String, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProblemKind<T> {
    /// Sector `r < 1, |φ| < 3π/4`, `u = r^{2/3} cos(2φ/3)`.
    Tp1,
    /// `(0.01, 1.01)²`, `u = log(x² + y²)`.
    Tp2,
    /// `(−1,1)² ∩ {0 < φ < ω}`, `u = r^α sin(αφ)` with `α = π/ω`.
    Tp3 { omega: T },
    /// `(−1,1)²` cut along a circular arc, `u = Re √((3−4i)z/(z−2))`.
    Tp4,
    /// `(0,1)²`, `u = sin(1/(α + r))`, `c = 1/(α + r)⁴`.
    Tp5 { alpha: T },
    /// `(0,1)²`, `u = exp(−α|x − x₀|²)`.
    Tp6 { alpha: T, x0: Point2<T> },
    /// `(0,1)²`, `u = x + y`.
    Linear,
}

/// A Dirichlet problem `Δu + c u = f` in a domain, `u = g` on its boundary,
/// with known solution `u`.
#[derive(Clone, Debug)]
pub struct TestProblem<T> {
    pub id: String,
    pub kind: ProblemKind<T>,
    pub domain: Domain<T>,
}

fn p<T: Real>(x: f64, y: f64) -> Point2<T> {
    Point2::new(T::lit(x), T::lit(y))
}

fn unit_square<T: Real>() -> Result<Domain<T>, GeometryError> {
    Ok(parse_domain::<T>("loop 0,0 1,0 1,1 0,1")?.with_region(Region::Rect {
        min: p(0.0, 0.0),
        max: p(1.0, 1.0),
    }))
}

fn sector<T: Real>() -> Result<Domain<T>, GeometryError> {
    let half = T::lit(0.75) * T::PI();
    let a = Point2::from_angle(-half);
    let b = Point2::from_angle(half);
    let o = Point2::origin();
    let loops = vec![vec![
        Segment::line(o, a)?,
        Segment::arc(o, T::one(), -half, half + half)?,
        Segment::line(b, o)?,
    ]];
    Ok(Domain::new(loops, vec![])?.with_region(Region::Sector {
        center: o,
        radius: T::one(),
        start_angle: -half,
        sweep: half + half,
    }))
}

/// `(−1,1)² ∩ {0 < φ < ω}` for `ω ∈ (π, 2π]`.
fn wedge<T: Real>(omega: T) -> Result<Domain<T>, GeometryError> {
    let o = Point2::origin();
    let corners = [p(1.0, 0.0), p(1.0, 1.0), p(-1.0, 1.0), p(-1.0, -1.0), p(1.0, -1.0)];
    let eps = T::lit(1e-12);
    let mut domain = if (omega - T::TAU()).abs() <= eps {
        let outer = [p(-1.0, -1.0), p(1.0, -1.0), p(1.0, 0.0), p(1.0, 1.0), p(-1.0, 1.0)];
        let mut segs = Vec::new();
        for i in 0..outer.len() {
            segs.push(Segment::line(outer[i], outer[(i + 1) % outer.len()])?);
        }
        Domain::new(vec![segs], vec![vec![Segment::line(o, p(1.0, 0.0))?]])?
    } else {
        // where the ray at angle ω leaves the square, snapped onto its side
        let dir = Point2::from_angle(omega);
        let tx = if dir.x.abs() > eps { T::one() / dir.x.abs() } else { T::infinity() };
        let ty = if dir.y.abs() > eps { T::one() / dir.y.abs() } else { T::infinity() };
        let mut exit = dir * tx.min(ty);
        if tx <= ty {
            exit.x = dir.x.signum();
        }
        if ty <= tx {
            exit.y = dir.y.signum();
        }
        if let Some(&c) = corners.iter().find(|c| c.dist(exit) <= T::lit(1e-9)) {
            exit = c;
        }
        let mut verts = vec![o, corners[0]];
        for &c in &corners[1..] {
            let phi = c.angle_2pi();
            if phi < omega && c.dist(exit) > eps {
                verts.push(c);
            }
        }
        verts.dedup_by(|a, b| a.dist(*b) <= eps);
        verts.push(exit);
        let mut segs = Vec::new();
        for i in 0..verts.len() {
            segs.push(Segment::line(verts[i], verts[(i + 1) % verts.len()])?);
        }
        Domain::new(vec![segs], vec![])?
    };
    domain = domain.with_region(Region::RectWedge {
        min: p(-1.0, -1.0),
        max: p(1.0, 1.0),
        omega,
    });
    Ok(domain)
}

fn curved_slit<T: Real>() -> Result<Domain<T>, GeometryError> {
    parse_domain("loop -1,-1 1,-1 1,0.5 1,1 -1,1; slit 0,0 arc:1,-0.75,cw 1,0.5")
}

/// Evaluates a constant expression with `pi`, `+ - * /`, parentheses and
/// implicit multiplication (`5pi/4`, `1/(10pi)`).
pub fn parse_expr(text: &str) -> Result<f64, String> {
    struct Parser<'a> {
        s: &'a [u8],
        i: usize,
    }
    impl Parser<'_> {
        fn ws(&mut self) {
            while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
                self.i += 1;
            }
        }
        fn peek(&mut self) -> Option<u8> {
            self.ws();
            self.s.get(self.i).copied()
        }
        fn expr(&mut self) -> Result<f64, String> {
            let mut v = self.term()?;
            while let Some(c @ (b'+' | b'-')) = self.peek() {
                self.i += 1;
                let r = self.term()?;
                v = if c == b'+' { v + r } else { v - r };
            }
            Ok(v)
        }
        fn term(&mut self) -> Result<f64, String> {
            let mut v = self.unary()?;
            loop {
                match self.peek() {
                    Some(b'*') => {
                        self.i += 1;
                        v *= self.unary()?;
                    }
                    Some(b'/') => {
                        self.i += 1;
                        v /= self.unary()?;
                    }
                    Some(c) if c == b'(' || c == b'.' || c.is_ascii_alphanumeric() => v *= self.unary()?,
                    _ => return Ok(v),
                }
            }
        }
        fn unary(&mut self) -> Result<f64, String> {
            if self.peek() == Some(b'-') {
                self.i += 1;
                return Ok(-self.unary()?);
            }
            self.atom()
        }
        fn atom(&mut self) -> Result<f64, String> {
            match self.peek() {
                Some(b'(') => {
                    self.i += 1;
                    let v = self.expr()?;
                    if self.peek() != Some(b')') {
                        return Err("missing `)`".into());
                    }
                    self.i += 1;
                    Ok(v)
                }
                Some(c) if c.is_ascii_digit() || c == b'.' => {
                    let start = self.i;
                    while self.i < self.s.len() && (self.s[self.i].is_ascii_digit() || self.s[self.i] == b'.') {
                        self.i += 1;
                    }
                    if self.i < self.s.len() && (self.s[self.i] == b'e' || self.s[self.i] == b'E') {
                        let save = self.i;
                        self.i += 1;
                        if self.i < self.s.len() && (self.s[self.i] == b'-' || self.s[self.i] == b'+') {
                            self.i += 1;
                        }
                        if self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                            while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                                self.i += 1;
                            }
                        } else {
                            self.i = save;
                        }
                    }
                    let lit = std::str::from_utf8(&self.s[start..self.i]).expect("ascii");
                    lit.parse::<f64>().map_err(|_| format!("bad number `{lit}`"))
                }
                Some(c) if c.is_ascii_alphabetic() => {
                    let start = self.i;
                    while self.i < self.s.len() && self.s[self.i].is_ascii_alphabetic() {
                        self.i += 1;
                    }
                    match &self.s[start..self.i] {
                        b"pi" => Ok(std::f64::consts::PI),
                        other => Err(format!("unknown name `{}`", String::from_utf8_lossy(other))),
                    }
                }
                Some(c) => Err(format!("unexpected `{}`", c as char)),
                None => Err("unexpected end of expression".into()),
            }
        }
    }
    let mut parser = Parser { s: text.as_bytes(), i: 0 };
    let v = parser.expr()?;
    if parser.peek().is_some() {
        return Err(format!("trailing input in `{text}`"));
    }
    if !v.is_finite() {
        return Err(format!("`{text}` is not finite"));
    }
    Ok(v)
}

impl<T: Real> TestProblem<T> {
    /// Parses a problem id such as `tp1`, `tp3@omega=5pi/4` or
    /// `tp5@alpha=1/(10pi)`.
    pub fn from_id(id: &str) -> Result<Self, BenchError> {
        let id = id.trim();
        let (name, params) = match id.split_once('@') {
            Some((n, rest)) => (n, Some(rest)),
            None => (id, None),
        };
        let bad = |message: String| BenchError::Parameter {
            id: id.to_string(),
            message,
        };
        let param = |key: &str| -> Result<T, BenchError> {
            let rest = params.ok_or_else(|| bad(format!("missing `@{key}=<value>`")))?;
            let (k, v) = rest.split_once('=').ok_or_else(|| bad(format!("expected `{key}=<value>`")))?;
            if k.trim() != key {
                return Err(bad(format!("unknown parameter `{}`", k.trim())));
            }
            parse_expr(v).map(T::lit).map_err(bad)
        };
        let no_params = || match params {
            Some(_) => Err(bad("takes no parameters".into())),
            None => Ok(()),
        };
        let kind = match name {
            "tp1" => no_params().map(|_| ProblemKind::Tp1)?,
            "tp2" => no_params().map(|_| ProblemKind::Tp2)?,
            "tp3" => {
                let omega = param("omega")?;
                if !(omega > T::PI() && omega <= T::TAU() + T::lit(1e-12)) {
                    return Err(bad(format!("omega must lie in (pi, 2pi], got {omega}")));
                }
                ProblemKind::Tp3 { omega: omega.min(T::TAU()) }
            }
            "tp4" => no_params().map(|_| ProblemKind::Tp4)?,
            "tp5" => {
                let alpha = param("alpha")?;
                if !(alpha > T::zero()) {
                    return Err(bad(format!("alpha must be positive, got {alpha}")));
                }
                ProblemKind::Tp5 { alpha }
            }
            "tp6a" => no_params().map(|_| ProblemKind::Tp6 {
                alpha: T::lit(1000.0),
                x0: p(0.5, 0.5),
            })?,
            "tp6b" => no_params().map(|_| ProblemKind::Tp6 {
                alpha: T::lit(1e5),
                x0: p(0.51, 0.117),
            })?,
            "linear" => no_params().map(|_| ProblemKind::Linear)?,
            _ => return Err(BenchError::UnknownProblem(id.to_string())),
        };
        Self::new(id, kind)
    }

    pub fn new(id: &str, kind: ProblemKind<T>) -> Result<Self, BenchError> {
        let domain = match kind {
            ProblemKind::Tp1 => sector()?,
            ProblemKind::Tp2 => parse_domain::<T>("loop 0.01,0.01 1.01,0.01 1.01,1.01 0.01,1.01")?.with_region(Region::Rect {
                min: p(0.01, 0.01),
                max: p(1.01, 1.01),
            }),
            ProblemKind::Tp3 { omega } => wedge(omega)?,
            ProblemKind::Tp4 => curved_slit()?,
            ProblemKind::Tp5 { .. } | ProblemKind::Tp6 { .. } | ProblemKind::Linear => unit_square()?,
        };
        Ok(Self {
            id: id.to_string(),
            kind,
            domain,
        })
    }

    /// Replaces the domain (for problems whose solution is defined
    /// everywhere, such as `linear`).
    pub fn with_domain(mut self, domain: Domain<T>) -> Self {
        self.domain = domain;
        self
    }

    pub fn exact_u(&self, q: Point2<T>) -> T {
        match self.kind {
            ProblemKind::Tp1 => {
                let two_thirds = T::lit(2.0) / T::lit(3.0);
                q.norm().powf(two_thirds) * (two_thirds * q.angle()).cos()
            }
            ProblemKind::Tp2 => q.norm_sq().ln(),
            ProblemKind::Tp3 { omega } => {
                let alpha = T::PI() / omega;
                q.norm().powf(alpha) * (alpha * q.angle_2pi()).sin()
            }
            ProblemKind::Tp4 => {
                // w = (3 − 4i) z / (z − 2); Re √w = √((|w| + Re w) / 2)
                let (x, y) = (q.x, q.y);
                let (nx, ny) = (T::lit(3.0) * x + T::lit(4.0) * y, T::lit(3.0) * y - T::lit(4.0) * x);
                let (dx, dy) = (x - T::lit(2.0), y);
                let den = dx * dx + dy * dy;
                let wr = (nx * dx + ny * dy) / den;
                let wi = (ny * dx - nx * dy) / den;
                ((wr.hypot(wi) + wr) / T::lit(2.0)).max(T::zero()).sqrt()
            }
            ProblemKind::Tp5 { alpha } => (T::one() / (alpha + q.norm())).sin(),
            ProblemKind::Tp6 { alpha, x0 } => (-alpha * q.dist_sq(x0)).exp(),
            ProblemKind::Linear => q.x + q.y,
        }
    }

    /// Dirichlet data.
    pub fn g(&self, q: Point2<T>) -> T {
        self.exact_u(q)
    }

    /// Reaction coefficient `c` of `Δu + c u`.
    pub fn coeff_c(&self, q: Point2<T>) -> T {
        match self.kind {
            ProblemKind::Tp5 { alpha } => (alpha + q.norm()).powi(-4),
            _ => T::zero(),
        }
    }

    /// `f = Δu + c u`. For TP5 this is unbounded at the origin, which is a
    /// corner of the domain.
    pub fn rhs_f(&self, q: Point2<T>) -> T {
        match self.kind {
            ProblemKind::Tp5 { alpha } => {
                let r = q.norm();
                let a = alpha + r;
                let cs = (T::one() / a).cos();
                T::lit(2.0) * cs / (a * a * a) - cs / (r * a * a)
            }
            ProblemKind::Tp6 { alpha, x0 } => {
                let rho2 = q.dist_sq(x0);
                (-alpha * rho2).exp() * (T::lit(4.0) * alpha * alpha * rho2 - T::lit(4.0) * alpha)
            }
            _ => T::zero(),
        }
    }

    /// Points where the solution or its data are not smooth.
    pub fn singular_points(&self) -> Vec<Point2<T>> {
        match self.kind {
            ProblemKind::Tp6 { x0, .. } => vec![x0],
            ProblemKind::Linear => vec![],
            _ => vec![Point2::origin()],
        }
    }

    /// Default percentage of new interior centers per refinement and whether
    /// the threshold reduction regime applies.
    pub fn refine_defaults(&self) -> (T, bool) {
        let five = T::lit(5.0);
        match self.kind {
            ProblemKind::Tp1 | ProblemKind::Tp2 => (five, true),
            ProblemKind::Tp3 { omega } if omega < T::TAU() => (five, true),
            ProblemKind::Tp3 { .. } | ProblemKind::Tp4 => (five, false),
            _ => (T::lit(15.0), false),
        }
    }
}
