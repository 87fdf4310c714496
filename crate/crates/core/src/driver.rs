//! Solve, estimate and refine loop over a benchmark problem.

use crate::bench::{e_c, e_g, BenchError, ErrorReport, TestProblem};
use crate::centers::{initial_centers, CenterError, CenterSet, InitialOptions};
use crate::geometry::{parse_domain, GeometryError};
use crate::io;
use crate::rbf::{compute_weights, RbfConfig, RbfError, StencilWeights};
use crate::refine::{refine, Indicator, RefineError, RefineOutcome, RefineParams};
use crate::stencil::{select_all, uniformity_stats, Stencil, StencilParams, UniformityStats};
use crate::system::{assemble, solve, DiscreteSolution, SystemError};
use crate::Real;
use rayon::prelude::*;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig<T> {
    /// Problem id such as `tp1` or `tp3@omega=5pi/4`.
    pub problem: String,
    /// Domain description replacing the problem's own domain.
    pub domain: Option<String>,
    pub stencil: StencilParams<T>,
    pub rbf: RbfConfig<T>,
    pub refine: RefineParams<T>,
    /// Initial spacing; a tenth of the bounding box diagonal when unset.
    pub h0: Option<T>,
    pub initial: InitialOptions<T>,
    /// Number of refinements; the loop solves `max_steps + 1` times at most.
    pub max_steps: usize,
    /// Stop once the interior count reaches this value.
    pub max_interior: usize,
    pub grid_step: T,
    pub output: Option<PathBuf>,
    pub dump_centers: bool,
    pub dump_matrix: bool,
}

impl<T: Real> RunConfig<T> {
    /// Default configuration for `problem`, with the problem's refinement
    /// percentage and threshold regime.
    pub fn for_problem(problem: &str) -> Result<Self, RunError> {
        let tp = TestProblem::<T>::from_id(problem)?;
        let (percent, reduction_regime) = tp.refine_defaults();
        Ok(Self {
            problem: problem.to_string(),
            domain: None,
            stencil: StencilParams::default(),
            rbf: RbfConfig::default(),
            refine: RefineParams {
                percent,
                reduction_regime,
                ..RefineParams::default()
            },
            h0: None,
            initial: InitialOptions::default(),
            max_steps: 20,
            max_interior: 3000,
            grid_step: T::lit(0.005),
            output: None,
            dump_centers: true,
            dump_matrix: false,
        })
    }

    pub fn test_problem(&self) -> Result<TestProblem<T>, RunError> {
        let tp = TestProblem::from_id(&self.problem)?;
        Ok(match &self.domain {
            Some(text) => tp.with_domain(parse_domain(text)?),
            None => tp,
        })
    }

    pub fn validate(&self) -> Result<(), RunError> {
        self.stencil.validate().map_err(RunError::Config)?;
        self.rbf.validate().map_err(|e| RunError::Config(e.to_string()))?;
        self.refine.validate().map_err(|e| RunError::Config(e.to_string()))?;
        if let Some(h0) = self.h0 {
            if !(h0 > T::zero()) || !h0.is_finite() {
                return Err(RunError::Config(format!("h0 must be positive, got {h0}")));
            }
        }
        if !(self.grid_step > T::zero()) || !self.grid_step.is_finite() {
            return Err(RunError::Config(format!("grid_step must be positive, got {}", self.grid_step)));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Problem(#[from] BenchError),
    #[error("domain: {0}")]
    Domain(#[from] GeometryError),
    #[error("initial centers: {0}")]
    Initial(#[from] CenterError),
    #[error("step {step}: weights at center {center}: {source}")]
    Weights { step: usize, center: usize, source: RbfError },
    #[error("step {step}: {source}")]
    System { step: usize, source: SystemError },
    #[error("step {step}: {source}")]
    Refine { step: usize, source: RefineError },
    #[error("writing {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl RunError {
    /// Pipeline stage that failed.
    pub fn stage(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Problem(_) | RunError::Domain(_) => "problem",
            RunError::Initial(_) => "initial-centers",
            RunError::Weights { .. } => "weights",
            RunError::System {
                source: SystemError::Factorization(_) | SystemError::Residual { .. },
                ..
            } => "solve",
            RunError::System { .. } => "assemble",
            RunError::Refine { .. } => "refine",
            RunError::Output { .. } => "output",
        }
    }

    pub fn step(&self) -> Option<usize> {
        match self {
            RunError::Weights { step, .. } | RunError::System { step, .. } | RunError::Refine { step, .. } => Some(*step),
            _ => None,
        }
    }
}

/// State of one step, handed to an observer after the solve and again after
/// the refinement.
pub struct StepView<'a, T> {
    pub step: usize,
    pub centers: &'a CenterSet<T>,
    pub stencils: &'a [Stencil<T>],
    pub solution: &'a DiscreteSolution<T>,
    pub report: &'a ErrorReport<T>,
    pub refinement: Option<&'a RefineOutcome<T>>,
}

pub fn default_h0<T: Real>(tp: &TestProblem<T>) -> T {
    tp.domain.diameter() / T::lit(10.0)
}

pub fn stencil_weights<T: Real>(
    set: &CenterSet<T>,
    stencils: &[Stencil<T>],
    tp: &TestProblem<T>,
    config: &RbfConfig<T>,
) -> Result<Vec<StencilWeights<T>>, (usize, RbfError)> {
    stencils
        .par_iter()
        .map(|s| {
            let zeta = set.point(s.center);
            let pts: Vec<_> = s.neighbors.iter().map(|&i| set.point(i)).collect();
            compute_weights(zeta, &pts, tp.coeff_c(zeta), config).map_err(|e| (s.center, e))
        })
        .collect()
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), RunError> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|source| RunError::Output { path: path.clone(), source })?;
    Ok((path, BufWriter::new(file)))
}

fn write_with<F>(dir: Option<&Path>, name: &str, f: F) -> Result<(), RunError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let Some(dir) = dir else { return Ok(()) };
    let (path, mut w) = create(dir, name)?;
    f(&mut w)
        .and_then(|_| std::io::Write::flush(&mut w))
        .map_err(|source| RunError::Output { path, source })
}

pub fn run<T: Real>(config: &RunConfig<T>) -> Result<Vec<ErrorReport<T>>, RunError> {
    run_observed(config, |_| {})
}

/// Runs the adaptive loop from `config`'s initial centers.
pub fn run_observed<T: Real>(config: &RunConfig<T>, observe: impl FnMut(&StepView<'_, T>)) -> Result<Vec<ErrorReport<T>>, RunError> {
    config.validate()?;
    let tp = config.test_problem()?;
    let h0 = config.h0.unwrap_or_else(|| default_h0(&tp));
    let set = initial_centers(&tp.domain, h0, &config.initial)?;
    run_from(config, &tp, set, observe)
}

/// Runs the adaptive loop from a given center set.
pub fn run_from<T: Real>(
    config: &RunConfig<T>,
    tp: &TestProblem<T>,
    mut set: CenterSet<T>,
    mut observe: impl FnMut(&StepView<'_, T>),
) -> Result<Vec<ErrorReport<T>>, RunError> {
    config.validate()?;
    let out = config.output.as_deref();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|source| RunError::Output {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let domain = &tp.domain;
    let exact = |q| tp.exact_u(q);
    let mut reports = Vec::new();
    let mut prev_threshold = None;
    for step in 0..=config.max_steps {
        let stencils = select_all(&set, &config.stencil, domain);
        let weights = stencil_weights(&set, &stencils, tp, &config.rbf).map_err(|(center, source)| RunError::Weights { step, center, source })?;
        let system = assemble(&set, &stencils, &weights, |q| tp.rhs_f(q), |q| tp.g(q)).map_err(|source| RunError::System { step, source })?;
        if config.dump_matrix {
            write_with(out, &format!("matrix_{step}.mtx"), |w| system.write_coordinate(w))?;
        }
        let solution = solve(&system).map_err(|source| RunError::System { step, source })?;
        let grid = e_g(&set, &solution, domain, exact, config.grid_step);
        let mut report = ErrorReport {
            step,
            n_interior: set.n_interior(),
            e_c: e_c(&set, &solution, exact),
            e_g: grid.rms,
            uncovered: grid.uncovered,
            eps_bar: None,
            stats: uniformity_stats(&set, &stencils),
        };
        log::info!(
            "step {step}: {} interior, e_c {:.3e}, e_g {:.3e}",
            report.n_interior,
            report.e_c.as_f64(),
            report.e_g.as_f64()
        );
        if config.dump_centers {
            write_with(out, &format!("centers_{step}.csv"), |w| io::write_centers(w, &set, &solution, Some(&exact)))?;
        }
        let last = step == config.max_steps || set.n_interior() >= config.max_interior;
        if last {
            observe(&StepView {
                step,
                centers: &set,
                stencils: &stencils,
                solution: &solution,
                report: &report,
                refinement: None,
            });
            reports.push(report);
            write_with(out, "errors.csv", |w| io::write_errors(w, &reports))?;
            break;
        }
        let outcome = match refine(&set, &stencils, &solution, &config.refine, domain, prev_threshold) {
            Ok(o) => o,
            Err(source) => {
                reports.push(report);
                write_with(out, "errors.csv", |w| io::write_errors(w, &reports))?;
                return Err(RunError::Refine { step, source });
            }
        };
        report.eps_bar = Some(outcome.threshold);
        write_with(out, &format!("refine_{step}.csv"), |w| io::write_refine_log(w, step, &outcome.rounds))?;
        observe(&StepView {
            step,
            centers: &set,
            stencils: &stencils,
            solution: &solution,
            report: &report,
            refinement: Some(&outcome),
        });
        reports.push(report);
        write_with(out, "errors.csv", |w| io::write_errors(w, &reports))?;
        prev_threshold = Some(outcome.threshold);
        set = outcome.centers;
    }
    Ok(reports)
}

/// Reports of the same run with `ε₀` and with `ε₁`.
#[derive(Clone, Debug)]
pub struct IndicatorComparison<T> {
    pub eps0: Vec<ErrorReport<T>>,
    pub eps1: Vec<ErrorReport<T>>,
}

/// Runs `config` once per indicator, writing into `eps0/` and `eps1/` under
/// the output directory.
pub fn indicator_compare<T: Real>(config: &RunConfig<T>) -> Result<IndicatorComparison<T>, RunError> {
    let arm = |indicator: Indicator| {
        let mut c = config.clone();
        c.refine.indicator = indicator;
        c.output = config.output.as_ref().map(|d| d.join(indicator.as_str()));
        run(&c)
    };
    Ok(IndicatorComparison {
        eps0: arm(Indicator::Eps0)?,
        eps1: arm(Indicator::Eps1)?,
    })
}

/// Stencil uniformity of `set`, or of the initial centers of `config`.
pub fn stencil_stats<T: Real>(config: &RunConfig<T>, set: Option<&CenterSet<T>>) -> Result<(usize, Option<UniformityStats<T>>), RunError> {
    config.validate()?;
    let tp = config.test_problem()?;
    let owned;
    let set = match set {
        Some(s) => s,
        None => {
            owned = initial_centers(&tp.domain, config.h0.unwrap_or_else(|| default_h0(&tp)), &config.initial)?;
            &owned
        }
    };
    let stencils = select_all(set, &config.stencil, &tp.domain);
    Ok((set.n_interior(), uniformity_stats(set, &stencils)))
}
