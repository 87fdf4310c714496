//! RBF-FD weights for `L = Δ + c(x)` on a single stencil.
//!
//! Two backends are provided. The Gaussian backend solves the plain
//! interpolation system `Φ w = [Δφᵢ(ζ)]` in coordinates centered at ζ and
//! scaled by the stencil radius, raising the effective shape parameter just
//! enough to keep the system condition below a threshold. The polyharmonic
//! spline backend (`r^q`, odd `q`) augments the kernel with polynomials up to
//! a fixed degree and solves the resulting saddle-point system; its weights
//! differentiate those polynomials exactly.

use crate::dense::{Lu, Matrix};
use crate::{Point2, Real};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RbfError {
    #[error("invalid RBF configuration: {0}")]
    Config(String),
    #[error("stencil has {got} points, at least {need} are needed")]
    TooFewPoints { got: usize, need: usize },
    #[error("local interpolation matrix is singular (degenerate stencil)")]
    Singular,
    #[error("local interpolation matrix too ill-conditioned (estimate {condition:e})")]
    IllConditioned { condition: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kernel {
    Gaussian,
    Phs,
}

impl std::str::FromStr for Kernel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gaussian" => Ok(Kernel::Gaussian),
            "phs" | "polyharmonic-spline" => Ok(Kernel::Phs),
            other => Err(format!("unknown kernel `{other}` (expected gaussian or phs)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RbfConfig<T> {
    pub kernel: Kernel,
    /// Gaussian shape parameter, applied in stencil-scaled coordinates.
    pub epsilon: T,
    /// Odd exponent of the polyharmonic spline.
    pub phs_exponent: u32,
    /// Degree of the polynomial augmentation of the spline backend.
    pub poly_degree: u32,
    /// Largest acceptable condition estimate; `None` selects
    /// `1 / (100 * machine epsilon)`.
    pub cond_threshold: Option<T>,
}

impl<T: Real> Default for RbfConfig<T> {
    fn default() -> Self {
        Self {
            kernel: Kernel::Phs,
            epsilon: T::lit(1e-5),
            phs_exponent: 3,
            poly_degree: 2,
            cond_threshold: None,
        }
    }
}

impl<T: Real> RbfConfig<T> {
    pub fn gaussian(epsilon: T) -> Self {
        Self {
            kernel: Kernel::Gaussian,
            epsilon,
            ..Self::default()
        }
    }

    pub fn phs(exponent: u32, degree: u32) -> Self {
        Self {
            kernel: Kernel::Phs,
            phs_exponent: exponent,
            poly_degree: degree,
            ..Self::default()
        }
    }

    pub fn threshold(&self) -> T {
        self.cond_threshold
            .unwrap_or_else(|| T::one() / (T::lit(100.0) * T::epsilon()))
    }

    pub fn validate(&self) -> Result<(), RbfError> {
        match self.kernel {
            Kernel::Gaussian => {
                if !(self.epsilon > T::zero()) || !self.epsilon.is_finite() {
                    return Err(RbfError::Config(format!("gaussian needs epsilon > 0, got {}", self.epsilon)));
                }
            }
            Kernel::Phs => {
                let q = self.phs_exponent;
                if q.is_multiple_of(2) || q < 3 {
                    return Err(RbfError::Config(format!("phs exponent must be odd and >= 3, got {q}")));
                }
                if self.poly_degree < (q - 1) / 2 {
                    return Err(RbfError::Config(format!(
                        "r^{q} needs polynomial degree >= {}, got {}",
                        (q - 1) / 2,
                        self.poly_degree
                    )));
                }
            }
        }
        if let Some(t) = self.cond_threshold {
            if !(t > T::one()) {
                return Err(RbfError::Config(format!("cond_threshold must exceed 1, got {t}")));
            }
        }
        Ok(())
    }
}

/// Weights aligned with `(ζ, ζ₁, …, ζₖ)`; the first already includes `c(ζ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StencilWeights<T> {
    pub weights: Vec<T>,
    /// One-norm condition estimate of the local system.
    pub condition: T,
    /// Effective Gaussian shape parameter in scaled coordinates.
    pub shape: Option<T>,
}

/// `e^{-ε²r²}`
#[inline]
pub fn gaussian_phi<T: Real>(r: T, eps: T) -> T {
    (-(eps * eps * r * r)).exp()
}

/// Laplacian of `x ↦ e^{-ε²|x - ζᵢ|²}` at a point at distance `d` from ζᵢ:
/// `4ε² e^{-ε²d²}(ε²d² - 1)`.
#[inline]
pub fn gaussian_lap<T: Real>(d: T, eps: T) -> T {
    let e2d2 = eps * eps * d * d;
    T::lit(4.0) * eps * eps * (-e2d2).exp() * (e2d2 - T::one())
}

/// `r^q`
#[inline]
pub fn phs_phi<T: Real>(r: T, q: u32) -> T {
    r.powi(q as i32)
}

/// Laplacian of `r^q` in the plane, `q² r^{q-2}`.
#[inline]
pub fn phs_lap<T: Real>(r: T, q: u32) -> T {
    T::from_count((q * q) as usize) * r.powi(q as i32 - 2)
}

/// Exponents `(a, b)` of the monomials `x^a y^b` with `a + b <= degree`,
/// ordered by total degree.
pub fn monomials(degree: u32) -> Vec<(u32, u32)> {
    (0..=degree)
        .flat_map(|d| (0..=d).rev().map(move |a| (a, d - a)))
        .collect()
}

/// Laplacian of `x^a y^b` at the origin.
fn monomial_lap_at_origin<T: Real>((a, b): (u32, u32)) -> T {
    if (a, b) == (2, 0) || (a, b) == (0, 2) {
        T::lit(2.0)
    } else {
        T::zero()
    }
}

fn monomial<T: Real>(p: Point2<T>, (a, b): (u32, u32)) -> T {
    p.x.powi(a as i32) * p.y.powi(b as i32)
}

/// Weights `w` with `Σ wᵢ u(ζᵢ) ≈ Δu(ζ) + c(ζ)u(ζ)` on the stencil
/// `{ζ} ∪ neighbors`.
pub fn compute_weights<T: Real>(
    zeta: Point2<T>,
    neighbors: &[Point2<T>],
    c_at_zeta: T,
    config: &RbfConfig<T>,
) -> Result<StencilWeights<T>, RbfError> {
    config.validate()?;
    let rho = neighbors.iter().map(|p| p.dist(zeta)).fold(T::zero(), T::max);
    if neighbors.is_empty() || !(rho > T::zero()) {
        return Err(RbfError::TooFewPoints {
            got: neighbors.len() + 1,
            need: 2,
        });
    }
    let scaled: Vec<Point2<T>> = std::iter::once(Point2::origin())
        .chain(neighbors.iter().map(|&p| (p - zeta) * (T::one() / rho)))
        .collect();
    let mut out = match config.kernel {
        Kernel::Gaussian => gaussian_weights(&scaled, config)?,
        Kernel::Phs => phs_weights(&scaled, config)?,
    };
    let inv_rho2 = T::one() / (rho * rho);
    out.weights.iter_mut().for_each(|w| *w *= inv_rho2);
    out.weights[0] += c_at_zeta;
    Ok(out)
}

fn gaussian_system<T: Real>(pts: &[Point2<T>], eps: T) -> Result<(Lu<T>, T), RbfError> {
    let n = pts.len();
    let a = Matrix::from_fn(n, |i, j| gaussian_phi(pts[i].dist(pts[j]), eps));
    let lu = Lu::factor(&a).map_err(|_| RbfError::Singular)?;
    let cond = lu.condition();
    Ok((lu, cond))
}

fn gaussian_weights<T: Real>(pts: &[Point2<T>], config: &RbfConfig<T>) -> Result<StencilWeights<T>, RbfError> {
    let threshold = config.threshold();
    let acceptable = |eps: T| -> Option<(Lu<T>, T)> {
        match gaussian_system(pts, eps) {
            Ok((lu, cond)) if cond <= threshold => Some((lu, cond)),
            _ => None,
        }
    };
    let requested = config.epsilon;
    let (eps, lu, cond) = match acceptable(requested) {
        Some((lu, cond)) => (requested, lu, cond),
        None => {
            // condition falls as ε grows: bracket, then bisect in log scale
            let mut lo = requested;
            let mut hi = requested * T::lit(2.0);
            let ceiling = T::lit(1e4);
            let mut best = loop {
                if hi > ceiling {
                    return Err(RbfError::IllConditioned { condition: f64::INFINITY });
                }
                match acceptable(hi) {
                    Some(found) => break found,
                    None => {
                        lo = hi;
                        hi *= T::lit(2.0);
                    }
                }
            };
            for _ in 0..64 {
                if hi / lo < T::one() + T::lit(1e-6) {
                    break;
                }
                let mid = (lo * hi).sqrt();
                match acceptable(mid) {
                    Some(found) => {
                        hi = mid;
                        best = found;
                    }
                    None => lo = mid,
                }
            }
            (hi, best.0, best.1)
        }
    };
    let rhs: Vec<T> = pts.iter().map(|p| gaussian_lap(p.norm(), eps)).collect();
    let weights = lu.solve(&rhs);
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(RbfError::Singular);
    }
    Ok(StencilWeights {
        weights,
        condition: cond,
        shape: Some(eps),
    })
}

/// Greedy selection of monomials whose sample columns on `pts` are linearly
/// independent (modified Gram-Schmidt).
fn independent_monomials<T: Real>(pts: &[Point2<T>], monos: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let mut basis: Vec<Vec<T>> = Vec::new();
    let mut kept = Vec::new();
    for &e in monos {
        let col: Vec<T> = pts.iter().map(|&p| monomial(p, e)).collect();
        let norm0 = col.iter().map(|&v| v * v).sum::<T>().sqrt();
        let mut v = col;
        for b in &basis {
            let proj: T = v.iter().zip(b).map(|(&x, &y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, &y)| *x -= proj * y);
        }
        let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm0 > T::zero() && norm > T::lit(1e-8) * norm0.max(T::one()) {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
            kept.push(e);
        }
    }
    kept
}

fn phs_weights<T: Real>(pts: &[Point2<T>], config: &RbfConfig<T>) -> Result<StencilWeights<T>, RbfError> {
    let q = config.phs_exponent;
    let n = pts.len();
    if n < 3 {
        return Err(RbfError::TooFewPoints { got: n, need: 3 });
    }
    let all = monomials(config.poly_degree);
    let monos = independent_monomials(pts, &all);
    if !all.iter().take(3).all(|e| monos.contains(e)) {
        return Err(RbfError::Singular);
    }
    let m = monos.len();
    let a = Matrix::from_fn(n + m, |i, j| match (i < n, j < n) {
        (true, true) => phs_phi(pts[i].dist(pts[j]), q),
        (true, false) => monomial(pts[i], monos[j - n]),
        (false, true) => monomial(pts[j], monos[i - n]),
        (false, false) => T::zero(),
    });
    let lu = Lu::factor(&a).map_err(|_| RbfError::Singular)?;
    let cond = lu.condition();
    if !(cond <= config.threshold()) {
        return Err(RbfError::IllConditioned {
            condition: cond.as_f64(),
        });
    }
    let rhs: Vec<T> = pts
        .iter()
        .map(|p| phs_lap(p.norm(), q))
        .chain(monos.iter().map(|&e| monomial_lap_at_origin(e)))
        .collect();
    let mut weights = lu.solve(&rhs);
    weights.truncate(n);
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(RbfError::Singular);
    }
    Ok(StencilWeights {
        weights,
        condition: cond,
        shape: None,
    })
}
