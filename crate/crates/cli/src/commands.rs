use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use spinv_core::experiments::{
    baseline_comparison, ensemble_sweep, output, radon_matrix, records_csv, run_concentration, tomo_ratio_experiment,
    BaselineConfig, ConcentrationConfig, EnsembleConfig, RadonSpec, TomoConfig,
};
use spinv_core::ginv::check_generalized_inverse;
use spinv_core::theory::{alpha_star_limit, solve_t_star_finite, SaddleOptions};
use spinv_core::{lp_min_ginv, Backend, DenseMatrix, RngStream, SolverOptions};

use crate::args::*;

/// Exit status 1: the command line itself is wrong.
/// Exit status 2: valid flags, but the computation or I/O failed.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Run(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Run(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Run(m) => m,
        }
    }
}

impl From<spinv_core::Error> for Failure {
    fn from(e: spinv_core::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn bad(flag: &str, msg: impl std::fmt::Display) -> Failure {
    Failure::Run(format!("{flag}: {msg}"))
}

fn open_unit(flag: &str, v: f64) -> Outcome {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(bad(flag, format!("{v} is outside (0, 1)")))
    }
}

fn p_range(v: f64) -> Outcome {
    if (1.0..=2.0).contains(&v) {
        Ok(())
    } else {
        Err(bad("--p", format!("{v} is outside [1, 2]")))
    }
}

fn at_least(flag: &str, v: usize, min: usize) -> Outcome {
    if v >= min {
        Ok(())
    } else {
        Err(bad(flag, format!("{v} must be at least {min}")))
    }
}

fn positive(flag: &str, v: f64) -> Outcome {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(flag, format!("{v} must be positive")))
    }
}

fn json_text<T: Serialize + ?Sized>(v: &T) -> Result<String, Failure> {
    Ok(output::json_string(v)?)
}

/// Writes `body` to `out` and `meta` to its sidecar, or `body` to stdout
/// and `meta` to stderr.
fn emit(out: Option<&Path>, body: &str, meta: &Value) -> Outcome {
    match out {
        Some(path) => {
            output::write_file(path, body.as_bytes())?;
            output::write_json_file(&output::sidecar_path(path), meta)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Run(format!("stdout: {e}")))?;
            eprint!("{}", json_text(meta)?);
        }
    }
    Ok(())
}

fn meta(command: &str, threads: usize, config: Value, extra: Value) -> Value {
    let mut m = json!({ "command": command, "threads": threads, "config": config });
    if let (Value::Object(target), Value::Object(more)) = (&mut m, extra) {
        target.extend(more);
    }
    m
}

pub fn run(cli: Cli) -> Outcome {
    if let Some(t) = cli.threads {
        at_least("--threads", t, 1)?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Run(format!("--threads: {e}")))?;
    }
    let threads = rayon::current_num_threads();
    match cli.command {
        Command::Predict(a) => predict(a, threads),
        Command::Invert(a) => invert(a, threads),
        Command::Check(a) => check(a, threads),
        Command::Experiment(a) => experiment(a, threads),
        Command::Baseline(a) => baseline(a, threads),
        Command::Radon(a) => radon(a, threads),
        Command::TomoTable(a) => tomo(a, threads),
        Command::Ensembles(a) => ensembles(a, threads),
    }
}

fn predict(a: PredictArgs, threads: usize) -> Outcome {
    p_range(a.p)?;
    open_unit("--delta", a.delta)?;
    let regime = a.regime.unwrap_or(if a.n.is_some() { RegimeArg::Finite } else { RegimeArg::Limit });
    let prediction = match regime {
        RegimeArg::Limit => {
            if a.n.is_some() {
                return Err(Failure::Usage("--n applies only to --regime finite".into()));
            }
            if a.p != 1.0 && a.p != 2.0 {
                return Err(bad("--p", format!("{} has no closed-form limit; use p = 1 or 2, or give --n", a.p)));
            }
            alpha_star_limit(a.p, a.delta)?
        }
        RegimeArg::Finite => {
            let Some(n) = a.n else {
                return Err(Failure::Usage("--regime finite requires --n".into()));
            };
            at_least("--n", n, 2)?;
            at_least("--samples", a.samples, 2)?;
            let opts = SaddleOptions { samples: a.samples, seed: a.seed, ..SaddleOptions::default() };
            solve_t_star_finite(a.p, a.delta, n, &opts)?
        }
    };
    let config = json!({
        "p": a.p, "delta": a.delta, "n": a.n, "regime": regime,
        "samples": a.samples, "seed": a.seed, "out": a.out,
    });
    emit(a.out.as_deref(), &json_text(&prediction)?, &meta("predict", threads, config, json!({})))
}

fn invert(a: InvertArgs, threads: usize) -> Outcome {
    p_range(a.p)?;
    positive("--tol", a.tol)?;
    at_least("--max-iter", a.max_iter, 1)?;
    let backend = match a.backend {
        BackendArg::Admm => Backend::Admm,
        BackendArg::Lp => Backend::Lp,
    };
    if backend == Backend::Lp && a.p != 1.0 {
        return Err(bad("--backend", format!("lp solves p = 1 only, got --p {}", a.p)));
    }
    let opts = SolverOptions { eps_abs: a.tol, max_iter: a.max_iter, backend, ..SolverOptions::with_p(a.p) };
    let matrix = DenseMatrix::read_csv(&a.input)?;
    let res = lp_min_ginv(&matrix, &opts)?;
    let config = json!({ "input": a.input, "out": a.out, "solver": opts });
    let diagnostics = json!({
        "shape": matrix.shape(),
        "p": res.p,
        "constraint_residual": res.constraint_residual,
        "normalized_frob": res.normalized_frob,
        "per_column_iterations": res.per_column_iterations,
        "per_column_nnz": res.per_column_nnz,
    });
    emit(
        a.out.as_deref(),
        &res.x.to_csv_string(),
        &meta("invert", threads, config, json!({ "diagnostics": diagnostics })),
    )
}

fn check(a: CheckArgs, threads: usize) -> Outcome {
    positive("--tol", a.tol)?;
    let matrix = DenseMatrix::read_csv(&a.matrix)?;
    let inverse = DenseMatrix::read_csv(&a.inverse)?;
    let report = check_generalized_inverse(&matrix, &inverse, a.tol)?;
    let config = json!({ "matrix": a.matrix, "inverse": a.inverse, "tol": a.tol, "out": a.out });
    emit(a.out.as_deref(), &json_text(&report)?, &meta("check", threads, config, json!({})))?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Run(format!(
            "not a generalized inverse at tol {:e}: |AXA - A| = {:e}, |AX - I| = {:e}",
            a.tol, report.axa_residual, report.ax_residual
        )))
    }
}

fn experiment(a: ExperimentArgs, threads: usize) -> Outcome {
    at_least("--n", a.n, 2)?;
    open_unit("--delta", a.delta)?;
    p_range(a.p)?;
    at_least("--trials", a.trials, 1)?;
    let cfg = ConcentrationConfig::new(a.n, a.delta, a.p, a.trials, a.ensemble, a.seed);
    if cfg.m() > a.n {
        return Err(bad("--delta", format!("m = round(delta n) + 1 = {} exceeds --n {}", cfg.m(), a.n)));
    }
    let run = run_concentration(&cfg)?;
    let config = json!({ "experiment": cfg, "out": a.out, "timing": a.timing });
    emit(
        a.out.as_deref(),
        &records_csv(&run.records, a.timing)?,
        &meta("experiment", threads, config, json!({ "report": run.report })),
    )
}

fn baseline(a: BaselineArgs, threads: usize) -> Outcome {
    at_least("--m", a.m, 2)?;
    if a.n <= a.m {
        return Err(bad("--n", format!("{} must exceed --m {}", a.n, a.m)));
    }
    at_least("--experiments", a.experiments, 1)?;
    at_least("--trials", a.trials, 1)?;
    let cfg = BaselineConfig::new(a.m, a.n, a.experiments, a.trials, a.seed);
    let report = baseline_comparison(&cfg)?;
    let config = json!({ "baseline": cfg, "out": a.out });
    let extra = json!({ "theory_alpha_star_sq": report.theory_alpha_star_sq });
    emit(a.out.as_deref(), &output::csv_string(&report.rows)?, &meta("baseline", threads, config, extra))
}

fn radon(a: RadonArgs, threads: usize) -> Outcome {
    at_least("--panel", a.panel, 2)?;
    if !(a.delta > 0.0 && a.delta <= 1.0) {
        return Err(bad("--delta", format!("{} is outside (0, 1]", a.delta)));
    }
    let spec = RadonSpec::new(a.panel, a.delta)?;
    let matrix = radon_matrix(&spec, RngStream::new(a.seed, 0))?;
    let config = json!({ "panel": a.panel, "delta": a.delta, "seed": a.seed, "out": a.out });
    let extra = json!({ "geometry": spec, "shape": matrix.shape() });
    emit(a.out.as_deref(), &matrix.to_csv_string(), &meta("radon", threads, config, extra))
}

fn tomo(a: TomoArgs, threads: usize) -> Outcome {
    for &d in &a.deltas {
        open_unit("--deltas", d)?;
    }
    at_least("--trials", a.trials, 1)?;
    at_least("--panel", a.panel, 2)?;
    let mut cfg = TomoConfig::new(a.deltas.clone(), a.trials, a.seed);
    cfg.panel = a.panel;
    let report = tomo_ratio_experiment(&cfg)?;
    let config = json!({ "tomo": cfg, "out": a.out });
    let extra = json!({ "orientation": report.orientation, "geometry": report.geometry });
    emit(a.out.as_deref(), &output::csv_string(&report.rows)?, &meta("tomo-table", threads, config, extra))
}

fn ensembles(a: EnsembleArgs, threads: usize) -> Outcome {
    at_least("--n", a.n, 2)?;
    for &d in &a.deltas {
        open_unit("--deltas", d)?;
    }
    at_least("--trials", a.trials, 1)?;
    let cfg = EnsembleConfig { n: a.n, deltas: a.deltas.clone(), trials: a.trials, seed: a.seed };
    let report = ensemble_sweep(&cfg)?;
    let config = json!({ "ensembles": cfg, "out": a.out });
    emit(a.out.as_deref(), &output::csv_string(&report.rows)?, &meta("ensembles", threads, config, json!({})))
}
