//! Flat `key=value` run configuration.

use anyhow::{anyhow, bail, Context, Result};
use rbffd::bench::parse_expr;
use rbffd::rbf::Kernel;
use rbffd::RunConfig64;
use std::path::PathBuf;

/// Keys accepted in config files and `--set`, with a short description.
pub const KEYS: &[(&str, &str)] = &[
    ("problem", "problem id: tp1, tp2, tp3@omega=.., tp4, tp5@alpha=.., tp6a, tp6b, linear"),
    ("domain", "domain description replacing the problem's domain"),
    ("k", "neighbors per stencil"),
    ("v", "angle uniformity tolerance"),
    ("c", "distance tolerance"),
    ("m", "initial candidate cloud size"),
    ("kernel", "phs or gaussian"),
    ("epsilon", "gaussian shape parameter floor"),
    ("phs_exponent", "odd exponent of the polyharmonic spline"),
    ("poly_degree", "degree of the polynomial augmentation"),
    ("cond_threshold", "condition number limit of the gaussian safeguard"),
    ("gamma", "marking tolerance"),
    ("mu", "separation tolerance"),
    ("percent", "minimum growth of the interior per refinement, in percent"),
    ("indicator", "eps0 or eps1"),
    ("reduction_regime", "halve the previous threshold when it is smaller"),
    ("max_rounds", "threshold reductions per refinement"),
    ("h0", "initial spacing"),
    ("jitter", "initial lattice jitter as a fraction of h0"),
    ("clearance", "initial boundary clearance as a fraction of h0"),
    ("seed", "jitter seed"),
    ("max_steps", "number of refinements"),
    ("max_interior", "stop once the interior reaches this size"),
    ("grid_step", "step of the evaluation grid"),
    ("output", "output directory"),
    ("dump_centers", "write centers_<step>.csv"),
    ("dump_matrix", "write matrix_<step>.mtx"),
];

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| parse_pair(l).with_context(|| format!("line {}", i + 1)))
        .collect()
}

pub fn parse_pair(text: &str) -> Result<(String, String)> {
    let (k, v) = text.split_once('=').ok_or_else(|| anyhow!("expected key=value, got `{text}`"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn number(key: &str, v: &str) -> Result<f64> {
    parse_expr(v).map_err(|e| anyhow!("{key}: {e}"))
}

fn count(key: &str, v: &str) -> Result<usize> {
    v.parse().with_context(|| format!("{key}: expected a non-negative integer, got `{v}`"))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => bail!("{key}: expected true or false, got `{v}`"),
    }
}

/// Builds a configuration: the last `problem` sets the defaults, then every
/// other pair is applied in order.
pub fn build(pairs: &[(String, String)]) -> Result<RunConfig64> {
    let problem = pairs
        .iter()
        .rev()
        .find(|(k, _)| k == "problem")
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| anyhow!("no problem given"))?;
    let mut c = RunConfig64::for_problem(problem)?;
    for (k, v) in pairs {
        apply(&mut c, k, v)?;
    }
    Ok(c)
}

fn apply(c: &mut RunConfig64, key: &str, v: &str) -> Result<()> {
    match key {
        "problem" => {}
        "domain" => c.domain = Some(v.to_string()),
        "k" => c.stencil.k = count(key, v)?,
        "v" => c.stencil.v = number(key, v)?,
        "c" => c.stencil.c = number(key, v)?,
        "m" => c.stencil.m = count(key, v)?,
        "kernel" => c.rbf.kernel = v.parse::<Kernel>().map_err(|e| anyhow!("{key}: {e}"))?,
        "epsilon" => c.rbf.epsilon = number(key, v)?,
        "phs_exponent" => c.rbf.phs_exponent = count(key, v)? as u32,
        "poly_degree" => c.rbf.poly_degree = count(key, v)? as u32,
        "cond_threshold" => c.rbf.cond_threshold = Some(number(key, v)?),
        "gamma" => c.refine.gamma = number(key, v)?,
        "mu" => c.refine.mu = number(key, v)?,
        "percent" => c.refine.percent = number(key, v)?,
        "indicator" => c.refine.indicator = v.parse().map_err(|e| anyhow!("{key}: {e}"))?,
        "reduction_regime" => c.refine.reduction_regime = flag(key, v)?,
        "max_rounds" => c.refine.max_rounds = count(key, v)?,
        "h0" => c.h0 = Some(number(key, v)?),
        "jitter" => c.initial.jitter = number(key, v)?,
        "clearance" => c.initial.clearance = number(key, v)?,
        "seed" => c.initial.seed = v.parse().with_context(|| format!("{key}: expected an integer, got `{v}`"))?,
        "max_steps" => c.max_steps = count(key, v)?,
        "max_interior" => c.max_interior = count(key, v)?,
        "grid_step" => c.grid_step = number(key, v)?,
        "output" => c.output = Some(PathBuf::from(v)),
        "dump_centers" => c.dump_centers = flag(key, v)?,
        "dump_matrix" => c.dump_matrix = flag(key, v)?,
        _ => bail!("unknown key `{key}`"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rbffd::refine::Indicator;

    fn pairs(text: &str) -> Vec<(String, String)> {
        parse_pairs(text).unwrap()
    }

    #[test]
    fn problem_sets_defaults_before_overrides() {
        let c = build(&pairs("percent = 7\nproblem = tp1\n")).unwrap();
        assert_eq!(c.refine.percent, 7.0);
        assert!(c.refine.reduction_regime);
        let c = build(&pairs("problem=tp5@alpha=1/(10pi)")).unwrap();
        assert_eq!(c.refine.percent, 15.0);
        assert!(!c.refine.reduction_regime);
    }

    #[test]
    fn values() {
        let c = build(&pairs(
            "# comment\nproblem=tp2\nh0=1/20 # trailing\nindicator=eps0\nkernel=gaussian\nseed=9\ndump_matrix=yes\noutput=out/x\n",
        ))
        .unwrap();
        assert_eq!(c.h0, Some(0.05));
        assert_eq!(c.refine.indicator, Indicator::Eps0);
        assert_eq!(c.rbf.kernel, Kernel::Gaussian);
        assert_eq!(c.initial.seed, 9);
        assert!(c.dump_matrix);
        assert_eq!(c.output, Some(PathBuf::from("out/x")));
    }

    #[test]
    fn errors_name_the_key() {
        assert!(build(&pairs("k=6")).unwrap_err().to_string().contains("no problem"));
        let e = build(&pairs("problem=tp1\nfoo=1")).unwrap_err();
        assert!(e.to_string().contains("`foo`"));
        let e = build(&pairs("problem=tp1\nk=-1")).unwrap_err();
        assert!(e.to_string().starts_with("k:"));
        let e = parse_pairs("problem=tp1\njunk").unwrap_err();
        assert_eq!(e.to_string(), "line 2");
    }

    #[test]
    fn every_key_is_applied() {
        let mut c = RunConfig64::for_problem("tp1").unwrap();
        let samples = [("kernel", "phs"), ("indicator", "eps1"), ("output", "o"), ("domain", "loop 0,0 1,0 0,1"), ("seed", "1")];
        for (k, _) in KEYS {
            let v = samples.iter().find(|(s, _)| s == k).map(|(_, v)| *v);
            let v = v.unwrap_or(if k.starts_with("dump") || *k == "reduction_regime" { "true" } else { "3" });
            apply(&mut c, k, v).unwrap();
        }
    }
}
