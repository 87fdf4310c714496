//! CSV artifacts: center dumps, error tables and refinement logs.

use crate::bench::ErrorReport;
use crate::centers::{CenterError, CenterKind, CenterSet};
use crate::geometry::Domain;
use crate::refine::RoundLog;
use crate::system::DiscreteSolution;
use crate::{Point2, Real};
use std::io::{self, BufRead, Write};

pub const CENTERS_HEADER: &str = "x,y,kind,u_hat,u_exact";
pub const ERRORS_HEADER: &str = "step,n_interior,e_c,e_g,eps_bar,v_max,v_aver,c_max,c_aver,uncovered_grid_points";
pub const REFINE_HEADER: &str = "step,eps_bar,edges_marked,interior_added,boundary_added,reduction_rounds";

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Centers(#[from] CenterError),
}

fn opt<T: Real>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes one row per center. `u_exact` is left empty when unknown.
pub fn write_centers<T: Real, W: Write>(
    mut out: W,
    set: &CenterSet<T>,
    u_hat: &DiscreteSolution<T>,
    exact: Option<&dyn Fn(Point2<T>) -> T>,
) -> io::Result<()> {
    writeln!(out, "{CENTERS_HEADER}")?;
    for (id, p) in set.points().iter().enumerate() {
        let u = exact.map(|f| f(*p));
        writeln!(out, "{},{},{},{},{}", p.x, p.y, set.kind(id).as_str(), u_hat.value(id), opt(u))?;
    }
    Ok(())
}

/// Reads a center dump back into a set on `domain`, keeping the recorded
/// kinds, together with the `u_hat` column.
pub fn read_centers<T: Real, R: BufRead>(input: R, domain: &Domain<T>) -> Result<(CenterSet<T>, Vec<T>), ReadError> {
    let mut points = Vec::new();
    let mut kinds = Vec::new();
    let mut values = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let bad = |message: String| ReadError::Format { line: i + 1, message };
        if i == 0 {
            if line.trim() != CENTERS_HEADER {
                return Err(bad(format!("expected header `{CENTERS_HEADER}`")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad(format!("expected 5 fields, got {}", fields.len())));
        }
        let num = |s: &str| s.trim().parse::<f64>().map(T::lit).map_err(|e| bad(format!("`{s}`: {e}")));
        points.push(Point2::new(num(fields[0])?, num(fields[1])?));
        kinds.push(match fields[2].trim() {
            "interior" => CenterKind::Interior,
            "boundary" => CenterKind::Boundary,
            other => return Err(bad(format!("unknown kind `{other}`"))),
        });
        values.push(num(fields[3])?);
    }
    Ok((CenterSet::from_classified(domain, &points, &kinds)?, values))
}

pub fn write_errors<T: Real, W: Write>(mut out: W, reports: &[ErrorReport<T>]) -> io::Result<()> {
    writeln!(out, "{ERRORS_HEADER}")?;
    for r in reports {
        let s = r.stats;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.step,
            r.n_interior,
            r.e_c,
            r.e_g,
            opt(r.eps_bar),
            opt(s.map(|s| s.v_max)),
            opt(s.map(|s| s.v_aver)),
            opt(s.map(|s| s.c_max)),
            opt(s.map(|s| s.c_aver)),
            r.uncovered
        )?;
    }
    Ok(())
}

/// One row per marking pass; `reduction_rounds` counts the threshold
/// reductions made before the pass.
pub fn write_refine_log<T: Real, W: Write>(mut out: W, step: usize, rounds: &[RoundLog<T>]) -> io::Result<()> {
    writeln!(out, "{REFINE_HEADER}")?;
    for r in rounds {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            step, r.threshold, r.edges_marked, r.interior_added, r.boundary_added, r.round
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::parse_domain;
    use crate::stencil::UniformityStats;

    #[test]
    fn centers_round_trip() {
        let domain = parse_domain::<f64>("loop 0,0 1,0 1,1 0,1").unwrap();
        let pts = [(0.0, 0.0), (0.5, 0.0), (1.0 / 3.0, 0.1 + 0.2), (1.0, 1.0)].map(|(x, y)| Point2::new(x, y));
        let set = CenterSet::from_points(&domain, &pts).unwrap();
        let sol = DiscreteSolution {
            values: vec![0.1, -2.5e-17, std::f64::consts::PI, 1.0],
            residual: 0.0,
        };
        let exact = |q: Point2<f64>| q.x + q.y;
        let mut buf = Vec::new();
        write_centers(&mut buf, &set, &sol, Some(&exact)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next(), Some(CENTERS_HEADER));
        assert_eq!(text.lines().nth(3), Some("0.3333333333333333,0.30000000000000004,interior,3.141592653589793,0.6333333333333333"));
        let (back, values) = read_centers(buf.as_slice(), &domain).unwrap();
        assert_eq!(back.points(), set.points());
        assert_eq!(back.kinds(), set.kinds());
        assert_eq!(values, sol.values);
    }

    #[test]
    fn rejects_malformed_dumps() {
        let domain = parse_domain::<f64>("loop 0,0 1,0 1,1 0,1").unwrap();
        let read = |s: &str| read_centers(s.as_bytes(), &domain);
        assert!(matches!(read("x,y\n"), Err(ReadError::Format { line: 1, .. })));
        let h = CENTERS_HEADER;
        assert!(matches!(read(&format!("{h}\n0.5,0.5,interior,1\n")), Err(ReadError::Format { line: 2, .. })));
        assert!(matches!(read(&format!("{h}\n0.5,0.5,corner,1,\n")), Err(ReadError::Format { line: 2, .. })));
        assert!(matches!(read(&format!("{h}\n0.5,zz,interior,1,\n")), Err(ReadError::Format { line: 2, .. })));
        assert!(matches!(read(&format!("{h}\n0.5,0.5,boundary,1,\n")), Err(ReadError::Centers(_))));
    }

    #[test]
    fn error_table() {
        let reports = [
            ErrorReport {
                step: 0,
                n_interior: 10,
                e_c: 0.5,
                e_g: 0.25,
                uncovered: 3,
                eps_bar: Some(1e-3),
                stats: Some(UniformityStats {
                    v_max: 3.0,
                    v_aver: 2.0,
                    c_max: 2.5,
                    c_aver: 1.25,
                }),
            },
            ErrorReport {
                step: 1,
                n_interior: 12,
                e_c: 0.125,
                e_g: 0.0625,
                uncovered: 0,
                eps_bar: None,
                stats: None,
            },
        ];
        let mut buf = Vec::new();
        write_errors(&mut buf, &reports).unwrap();
        let expected = format!("{ERRORS_HEADER}\n0,10,0.5,0.25,0.001,3,2,2.5,1.25,3\n1,12,0.125,0.0625,,,,,,0\n");
        assert_eq!(String::from_utf8(buf).unwrap(), expected);
    }

    #[test]
    fn refine_log() {
        let rounds = [
            RoundLog {
                round: 0,
                threshold: 0.5,
                edges_marked: 4,
                interior_added: 2,
                boundary_added: 1,
            },
            RoundLog {
                round: 1,
                threshold: 0.25,
                edges_marked: 9,
                interior_added: 5,
                boundary_added: 0,
            },
        ];
        let mut buf = Vec::new();
        write_refine_log(&mut buf, 7, &rounds).unwrap();
        let expected = format!("{REFINE_HEADER}\n7,0.5,4,2,1,0\n7,0.25,9,5,0,1\n");
        assert_eq!(String::from_utf8(buf).unwrap(), expected);
    }
}
