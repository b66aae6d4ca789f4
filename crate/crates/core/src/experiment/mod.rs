//! Batch experiments driven by a JSON config: single runs and parameter sweeps.
//!
//! Output files (column order is fixed):
//! - `solution.csv`: `n,t,i,x,u,v`
//! - `convergence.csv`: `steps,cells,linf_error,final_l2_error,linf_ratio,l2_ratio`
//! - `contraction.csv`: `trial,lhs,rhs,margin,pass`
//! - `kernel.csv`: `j,t,k,l,kl`
//! - `aggregate.csv` (sweeps): `param,value,metric,result`

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;

pub use config::{
    ContractionOptions, ConvergenceOptions, ExperimentConfig, Format, KernelConfig, KernelLabOptions, Mode,
    OutputConfig, PhiConfig, ProblemConfig, Profile,
};

use crate::error::{Error, Result};
use crate::kernels::{kernel_convolve, pc_defects, pc_pair_report};
use crate::report::Report;
use crate::solver::solve;
use crate::verify::{exact_linear_benchmark, l1_contraction_check, perturbed_problem, resolvent_report, verify_suite};

/// Environment variable naming the output directory when neither `--out` nor the config sets one.
pub const OUT_DIR_ENV: &str = "NLDIFF_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "nldiff-out";

/// Command-line overrides applied on top of the config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Failed-check count for `verify_suite` and `contraction_pair`, otherwise 0.
    pub exit_code: i32,
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    /// Headline numbers, in a fixed order per mode.
    pub metrics: Vec<(String, f64)>,
    pub text: String,
}

#[derive(Debug)]
pub struct SweepOutcome {
    /// Number of children that errored or returned a nonzero code.
    pub exit_code: i32,
    pub dir: PathBuf,
    pub aggregate: PathBuf,
    pub children: Vec<(String, std::result::Result<RunOutcome, String>)>,
}

/// `--out`, then the config, then the environment, then [`DEFAULT_OUT_DIR`].
pub fn resolve_out_dir(cli: Option<&Path>, config: Option<&Path>) -> PathBuf {
    cli.or(config)
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

pub fn run(config_path: &Path, options: &RunOptions) -> Result<RunOutcome> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(seed) = options.seed {
        cfg.seed = seed;
    }
    let dir = resolve_out_dir(options.out.as_deref(), cfg.output.dir.as_deref());
    run_config(&cfg, &dir)
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }
}

/// Runs one experiment and writes its files into `dir`.
pub fn run_config(cfg: &ExperimentConfig, dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    fs::create_dir_all(dir)?;
    let mut w = Writer { dir, files: Vec::new() };
    let (exit_code, metrics, text) = match cfg.mode {
        Mode::Solve => run_solve(cfg, &mut w)?,
        Mode::VerifySuite => run_suite(cfg, &mut w)?,
        Mode::Convergence => run_convergence(cfg, &mut w)?,
        Mode::ContractionPair => run_contraction(cfg, &mut w)?,
        Mode::KernelLab => run_kernel_lab(cfg, &mut w)?,
    };
    w.write("summary.txt", &text)?;
    Ok(RunOutcome {
        exit_code,
        dir: dir.to_path_buf(),
        files: w.files,
        metrics,
        text,
    })
}

type ModeResult = Result<(i32, Vec<(String, f64)>, String)>;

fn metric(name: &str, value: f64) -> (String, f64) {
    (name.to_string(), value)
}

fn json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn report_outputs(cfg: &ExperimentConfig, w: &mut Writer, report: &Report) -> Result<()> {
    if cfg.wants(Format::Json) {
        w.write("report.json", &report.to_json()?)?;
    }
    Ok(())
}

fn run_solve(cfg: &ExperimentConfig, w: &mut Writer) -> ModeResult {
    let spec = cfg.problem.build()?;
    let sol = solve(&spec, &cfg.solver)?;
    let summary = sol.summary()?;
    if cfg.wants(Format::Csv) {
        w.write("solution.csv", &sol.to_csv())?;
    }
    if cfg.wants(Format::Json) {
        w.write("summary.json", &json(&summary)?)?;
    }
    let metrics = vec![
        metric("sup", summary.norms.linf),
        metric("l2", summary.norms.l2),
        metric("grad_l2", summary.norms.grad_l2),
        metric("total_iterations", summary.total_iterations as f64),
        metric("max_iterations", summary.max_iterations as f64),
        metric("eps", summary.eps),
    ];
    let mut text = format!(
        "solve: N = {}, Nx = {}, T = {}, L = {}\n",
        summary.steps, summary.cells, summary.horizon, summary.length
    );
    for (k, v) in &metrics {
        let _ = writeln!(text, "{k:>18} {v:.6e}");
    }
    let _ = writeln!(
        text,
        "{:>18} {} (bound {:.4}, escalations {})",
        "truncation",
        if summary.truncation_active { "active" } else { "inactive" },
        summary.truncation_bound,
        summary.escalations
    );
    Ok((0, metrics, text))
}

fn run_suite(cfg: &ExperimentConfig, w: &mut Writer) -> ModeResult {
    let spec = cfg.problem.build()?;
    let mut options = cfg.suite.clone();
    options.seed = cfg.seed;
    let report = verify_suite(&spec, &cfg.solver, &options)?;
    report_outputs(cfg, w, &report)?;
    let failed = report.failed_count();
    let metrics = vec![
        metric("checks", report.checks.len() as f64),
        metric("failed_checks", failed as f64),
    ];
    Ok((failed as i32, metrics, report.to_text()))
}

fn run_convergence(cfg: &ExperimentConfig, w: &mut Writer) -> ModeResult {
    let KernelConfig::Fractional { alpha } = cfg.problem.kernel else {
        return Err(Error::Config("problem.kernel: convergence mode needs the fractional family".into()));
    };
    let p = &cfg.problem;
    let resolutions: Vec<(usize, usize)> = (0..cfg.convergence.levels)
        .map(|i| {
            let cells = if cfg.convergence.refine_space { p.cells << i } else { p.cells };
            (p.steps << i, cells)
        })
        .collect();
    let rows = exact_linear_benchmark(alpha, p.length, p.horizon, &resolutions)?;
    let opt = |r: Option<f64>| r.map(|x| x.to_string()).unwrap_or_default();
    let mut csv = String::from("steps,cells,linf_error,final_l2_error,linf_ratio,l2_ratio\n");
    let mut text = format!("exact benchmark, alpha = {alpha}, phi = id, u0 = sin(pi x / L), f = 0, a = 1\n");
    let _ = writeln!(text, "{:>8} {:>8} {:>14} {:>14} {:>8} {:>8}", "N", "Nx", "linf", "l2(T)", "ratio", "ratio");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.steps,
            r.cells,
            r.linf_error,
            r.final_l2_error,
            opt(r.linf_ratio),
            opt(r.l2_ratio)
        );
        let _ = writeln!(
            text,
            "{:>8} {:>8} {:>14.6e} {:>14.6e} {:>8} {:>8}",
            r.steps,
            r.cells,
            r.linf_error,
            r.final_l2_error,
            r.linf_ratio.map(|x| format!("{x:.3}")).unwrap_or_default(),
            r.l2_ratio.map(|x| format!("{x:.3}")).unwrap_or_default()
        );
    }
    if cfg.wants(Format::Csv) {
        w.write("convergence.csv", &csv)?;
    }
    if cfg.wants(Format::Json) {
        w.write("convergence.json", &json(&rows)?)?;
    }
    let last = rows.last().expect("at least one level");
    let mut metrics = vec![
        metric("linf_error", last.linf_error),
        metric("final_l2_error", last.final_l2_error),
    ];
    if let (Some(a), Some(b)) = (last.linf_ratio, last.l2_ratio) {
        metrics.push(metric("linf_ratio", a));
        metrics.push(metric("l2_ratio", b));
    }
    Ok((0, metrics, text))
}

fn run_contraction(cfg: &ExperimentConfig, w: &mut Writer) -> ModeResult {
    let spec = cfg.problem.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let others = (0..cfg.contraction.trials)
        .map(|_| perturbed_problem(&spec, &mut rng, cfg.contraction.delta))
        .collect::<Result<Vec<_>>>()?;
    let base = solve(&spec, &cfg.solver)?;
    let f1 = spec.forcing.rows(&spec.mesh, &spec.grid);
    let entries = others
        .par_iter()
        .enumerate()
        .map(|(trial, other)| {
            let sol = solve(other, &cfg.solver)?;
            let f2 = other.forcing.rows(&other.mesh, &other.grid);
            let mut e = l1_contraction_check(&base, &sol, &spec.kernels.l, &f1, &f2, &spec.u0, &other.u0)?;
            e.name = format!("l1_contraction_{trial}");
            Ok(e)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = Report::new();
    let mut csv = String::from("trial,lhs,rhs,margin,pass\n");
    for (trial, e) in entries.into_iter().enumerate() {
        let _ = writeln!(csv, "{trial},{},{},{},{}", e.lhs, e.rhs, e.margin, e.pass);
        report.push(e);
    }
    if cfg.wants(Format::Csv) {
        w.write("contraction.csv", &csv)?;
    }
    report_outputs(cfg, w, &report)?;
    let failed = report.failed_count();
    let min_margin = report.checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
    let metrics = vec![
        metric("trials", report.checks.len() as f64),
        metric("failed_checks", failed as f64),
        metric("min_margin", min_margin),
    ];
    Ok((failed as i32, metrics, report.to_text()))
}

fn run_kernel_lab(cfg: &ExperimentConfig, w: &mut Writer) -> ModeResult {
    let grid = crate::kernels::TimeGrid::new(cfg.problem.horizon, cfg.problem.steps)?;
    let kernels = cfg.problem.kernel.kernels(grid)?;
    let (k, l) = (&kernels.k, &kernels.l);
    let kl = kernel_convolve(k, l)?;
    let defects = pc_defects(k, l)?;
    let mut report = pc_pair_report(k, l, cfg.suite.pc_tol)?;
    report.extend(resolvent_report(k, l, cfg.kernel_lab.gamma)?);
    if cfg.wants(Format::Csv) {
        let mut csv = String::from("j,t,k,l,kl\n");
        for j in 1..=grid.steps() {
            let _ = writeln!(csv, "{j},{},{},{},{}", grid.node(j), k.cell(j), l.cell(j), kl.cell(j));
        }
        w.write("kernel.csv", &csv)?;
    }
    report_outputs(cfg, w, &report)?;
    let metrics = vec![
        metric("max_defect", defects.max),
        metric("mean_defect", defects.mean),
        metric("terminal_defect", defects.terminal),
        metric("k_l1", k.l1_norm()),
        metric("l_l1", l.l1_norm()),
    ];
    let mut text = report.to_text();
    for (name, v) in &metrics {
        let _ = writeln!(text, "{name:>18} {v:.6e}");
    }
    Ok((0, metrics, text))
}

/// Sets `value` at a dotted path, creating missing objects along the way.
pub fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("parameter path '{path}' is malformed")));
    }
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (depth, key) in keys.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| {
            Error::Config(format!("parameter '{path}': '{}' is not an object", keys[..depth].join(".")))
        })?;
        if depth + 1 == keys.len() {
            obj.insert((*key).to_string(), value);
            return Ok(());
        }
        node = obj.entry(*key).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("path has at least one key")
}

/// Parses a command-line value as JSON, falling back to a string.
pub fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn child_dir_name(param: &str, value: &str) -> String {
    let leaf = param.rsplit('.').next().unwrap_or(param);
    let clean: String = value
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect();
    format!("{leaf}_{clean}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Runs one experiment per value concurrently, each in its own subdirectory,
/// and writes `aggregate.csv` at the sweep root.
pub fn sweep(config_path: &Path, param: &str, values: &[String], options: &RunOptions) -> Result<SweepOutcome> {
    if values.is_empty() || values.iter().any(|v| v.trim().is_empty()) {
        return Err(Error::Config("sweep needs a nonempty list of nonempty values".into()));
    }
    let text = fs::read_to_string(config_path)?;
    let base: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", config_path.display())))?;
    let parsed = ExperimentConfig::from_json(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", config_path.display())))?;
    let root = resolve_out_dir(options.out.as_deref(), parsed.output.dir.as_deref());

    let mut names: Vec<String> = values.iter().map(|v| child_dir_name(param, v)).collect();
    names.sort();
    if names.windows(2).any(|p| p[0] == p[1]) {
        return Err(Error::Config(format!("sweep values for '{param}' are not distinct")));
    }
    let mut configs = Vec::with_capacity(values.len());
    for raw in values {
        let mut v = base.clone();
        set_path(&mut v, param, parse_value(raw))?;
        if let Some(seed) = options.seed {
            set_path(&mut v, "seed", Value::from(seed))?;
        }
        configs.push(v);
    }
    fs::create_dir_all(&root)?;

    let children: Vec<(String, std::result::Result<RunOutcome, String>)> = values
        .par_iter()
        .zip(configs)
        .map(|(raw, v)| {
            let dir = root.join(child_dir_name(param, raw));
            let outcome = fs::create_dir_all(&dir)
                .map_err(Error::from)
                .and_then(|_| fs::write(dir.join("config.json"), json(&v)?).map_err(Error::from))
                .and_then(|_| ExperimentConfig::from_value(v))
                .and_then(|cfg| run_config(&cfg, &dir))
                .map_err(|e| {
                    let msg = e.to_string();
                    let _ = fs::write(dir.join("error.txt"), format!("{msg}\n"));
                    msg
                });
            (raw.clone(), outcome)
        })
        .collect();

    let convergence = parsed.mode == Mode::Convergence;
    let mut csv = String::from("param,value,metric,result\n");
    let mut prev: Option<&RunOutcome> = None;
    let mut failures = 0;
    for (raw, outcome) in &children {
        let (p, v) = (csv_field(param), csv_field(raw));
        match outcome {
            Ok(o) => {
                if o.exit_code != 0 {
                    failures += 1;
                }
                let _ = writeln!(csv, "{p},{v},exit_code,{}", o.exit_code);
                for (m, x) in &o.metrics {
                    let _ = writeln!(csv, "{p},{v},{m},{x}");
                }
                if convergence {
                    if let Some(q) = prev {
                        for (m, ratio) in [("linf_error", "linf_ratio"), ("final_l2_error", "l2_ratio")] {
                            if let (Some(a), Some(b)) = (lookup(q, m), lookup(o, m)) {
                                let _ = writeln!(csv, "{p},{v},{ratio},{}", a / b);
                            }
                        }
                    }
                    prev = Some(o);
                }
            }
            Err(msg) => {
                failures += 1;
                let _ = writeln!(csv, "{p},{v},error,{}", csv_field(msg));
                prev = None;
            }
        }
    }
    let aggregate = root.join("aggregate.csv");
    fs::write(&aggregate, csv)?;
    Ok(SweepOutcome {
        exit_code: failures,
        dir: root,
        aggregate,
        children,
    })
}

fn lookup(o: &RunOutcome, name: &str) -> Option<f64> {
    o.metrics.iter().find(|(m, _)| m == name).map(|(_, v)| *v)
}
