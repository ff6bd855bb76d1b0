//! Command-line front end for the sequential surrogate reliability method:
//! resolve a problem (built-in name or JSON file), run the driver or the
//! direct Monte Carlo oracle, and emit machine-readable results.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use ssrm::{
    estimate_pf_direct, run_ssrm, ConvergedBy, KernelKind, Marginal, PfEstimate, ProblemDefinition,
    SsrmConfig, SsrmOverrides, SsrmRunResult,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_KMAX: i32 = 2;

/// One input variable in a problem file: a name plus its marginal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    #[serde(flatten)]
    pub marginal: Marginal,
}

/// On-disk problem definition.
///
/// ```json
/// {
///   "name": "my_problem",
///   "variables": [{"name": "x1", "kind": "normal", "mean": 0.5, "std": 0.2}],
///   "lsf_expression": "1 - x1^3",
///   "constants": {"k": 2.0},
///   "ssrm_overrides": {"d_min": 0.3}
/// }
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub variables: Vec<VariableSpec>,
    pub lsf_expression: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssrm_overrides: Option<SsrmOverrides>,
    /// Start from 2m+1 points instead of m+1.
    #[serde(default)]
    pub large_std: bool,
}

impl ProblemSpec {
    pub fn to_problem(&self) -> Result<ProblemDefinition> {
        let names: Vec<String> = self.variables.iter().map(|v| v.name.clone()).collect();
        let expr = ssrm::CompiledExpr::compile(&self.lsf_expression, &names, &self.constants)
            .with_context(|| format!("compiling LSF expression for '{}'", self.name))?;
        let marginals = self.variables.iter().map(|v| v.marginal).collect();
        let mut p = ProblemDefinition::new(
            self.name.clone(),
            ssrm::Lsf::Expression(expr),
            marginals,
            self.large_std,
        )?
        .with_constants(self.constants.clone());
        if let Some(ov) = &self.ssrm_overrides {
            p = p.with_overrides(ov.clone());
        }
        Ok(p)
    }
}

/// Where a resolved problem came from, echoed into the run record so a run
/// can be reproduced without the original file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum ProblemEcho {
    Builtin {
        name: String,
    },
    File {
        path: String,
        spec: Box<ProblemSpec>,
    },
}

impl ProblemEcho {
    pub fn name(&self) -> &str {
        match self {
            ProblemEcho::Builtin { name } => name,
            ProblemEcho::File { spec, .. } => &spec.name,
        }
    }

    pub fn to_problem(&self) -> Result<ProblemDefinition> {
        match self {
            ProblemEcho::Builtin { name } => Ok(ssrm::get_problem(name)?),
            ProblemEcho::File { spec, .. } => spec.to_problem(),
        }
    }
}

/// Resolve a problem argument: a built-in name, else a path to a JSON spec.
pub fn resolve_problem(arg: &str) -> Result<(ProblemDefinition, ProblemEcho)> {
    if ssrm::problem_names().contains(&arg) {
        let p = ssrm::get_problem(arg)?;
        return Ok((
            p,
            ProblemEcho::Builtin {
                name: arg.to_string(),
            },
        ));
    }
    let path = Path::new(arg);
    if path.exists() {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading problem file {}", path.display()))?;
        let spec: ProblemSpec = serde_json::from_str(&text)
            .with_context(|| format!("parsing problem file {}", path.display()))?;
        let p = spec.to_problem()?;
        return Ok((
            p,
            ProblemEcho::File {
                path: arg.to_string(),
                spec: Box::new(spec),
            },
        ));
    }
    bail!("unknown problem '{arg}': not a built-in name and no such file");
}

/// Wall-clock phase timings in seconds. Excluded from reproducibility
/// comparisons; everything else in a record is a pure function of its
/// configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timings {
    pub ssrm_s: f64,
    pub oracle_s: f64,
    pub total_s: f64,
}

/// Full machine-readable record of one `run` invocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub artifact_version: String,
    pub problem: ProblemEcho,
    pub config: SsrmConfig,
    pub result: SsrmRunResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<PfEstimate>,
    pub timings: Timings,
}

pub fn parse_kernel(s: &str) -> Result<KernelKind> {
    Ok(match s {
        "gaussian" => KernelKind::Gaussian,
        "inverse_multiquadric" => KernelKind::InverseMultiquadric,
        "thin_plate_spline" => KernelKind::ThinPlateSpline,
        other => bail!(
            "unknown kernel '{other}' (expected gaussian, inverse_multiquadric, thin_plate_spline)"
        ),
    })
}

/// Options for `run`, mirroring the CLI flags.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed_lhs: u64,
    pub seed_mcs: u64,
    pub seed_ga: u64,
    pub n_mcs: Option<usize>,
    pub d_min: Option<f64>,
    pub eps_a: Option<f64>,
    pub eps_r: Option<f64>,
    pub k_max: Option<usize>,
    pub kernel: Option<KernelKind>,
    pub with_oracle: Option<usize>,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed_lhs: 1,
            seed_mcs: 2,
            seed_ga: 3,
            n_mcs: None,
            d_min: None,
            eps_a: None,
            eps_r: None,
            k_max: None,
            kernel: None,
            with_oracle: None,
            out: None,
            trace: None,
        }
    }
}

pub fn build_config(problem: &ProblemDefinition, opts: &RunOptions) -> SsrmConfig {
    let mut cfg = SsrmConfig::for_problem(problem);
    cfg.lhs_seed = opts.seed_lhs;
    cfg.mcs_seed = opts.seed_mcs;
    cfg.ga.seed = opts.seed_ga;
    if let Some(v) = opts.n_mcs {
        cfg.n_mcs = v;
    }
    if let Some(v) = opts.d_min {
        cfg.d_min = v;
    }
    if let Some(v) = opts.eps_a {
        cfg.eps_a = v;
    }
    if let Some(v) = opts.eps_r {
        cfg.eps_r = v;
    }
    if let Some(v) = opts.k_max {
        cfg.k_max = v;
    }
    if let Some(v) = opts.kernel {
        cfg.kernel = v;
    }
    cfg
}

fn format_cell(v: f64) -> String {
    format!("{v}")
}

/// Render the iteration trace as CSV: one row per sample, the layout of the
/// published iteration tables extended with the true output, feasibility
/// flag, shape parameter, and probability estimate.
pub fn trace_csv(result: &SsrmRunResult, m: usize) -> String {
    let mut out = String::new();
    out.push_str("iteration");
    for j in 1..=m {
        out.push_str(&format!(",u_{j}"));
    }
    out.push_str(",g,feasible,shape_c,pf\n");
    let points = result.samples.points();
    let outputs = result.samples.outputs();
    let n0 = result.samples.len() - result.iterations;
    for i in 0..n0 {
        out.push('0');
        for x in &points[i] {
            out.push(',');
            out.push_str(&format_cell(*x));
        }
        out.push(',');
        out.push_str(&format_cell(outputs[i]));
        // Initial rows carry the first fit's diagnostics on the first row.
        if i == 0 {
            out.push_str(&format!(
                ",,{},{}\n",
                format_cell(result.initial_shape_c),
                format_cell(result.pf_history[0])
            ));
        } else {
            out.push_str(",,,\n");
        }
    }
    for rec in &result.per_iteration {
        out.push_str(&rec.iteration.to_string());
        for x in &rec.added_u {
            out.push(',');
            out.push_str(&format_cell(*x));
        }
        out.push(',');
        out.push_str(&format_cell(rec.added_g));
        out.push(',');
        out.push_str(if rec.feasible { "true" } else { "false" });
        out.push(',');
        out.push_str(&format_cell(rec.shape_c));
        out.push(',');
        out.push_str(&format_cell(rec.pf));
        out.push('\n');
    }
    out
}

pub struct RunOutcome {
    pub record: RunRecord,
    pub out_path: PathBuf,
    pub trace_path: PathBuf,
    pub exit_code: i32,
}

/// Execute `run`: drive the engine, optionally run the oracle, and write the
/// JSON record and CSV trace.
pub fn cmd_run(problem_arg: &str, opts: &RunOptions) -> Result<RunOutcome> {
    let total = Instant::now();
    let (problem, echo) = resolve_problem(problem_arg)?;
    let cfg = build_config(&problem, opts);

    let t = Instant::now();
    let result = run_ssrm(&problem, &cfg).map_err(|e| anyhow::anyhow!("SSRM run failed: {e}"))?;
    let ssrm_s = t.elapsed().as_secs_f64();

    let mut timings = Timings {
        ssrm_s,
        ..Timings::default()
    };
    let oracle = match opts.with_oracle {
        Some(n) => {
            let t = Instant::now();
            let est = estimate_pf_direct(&problem, n, cfg.mcs_seed)?;
            timings.oracle_s = t.elapsed().as_secs_f64();
            Some(est)
        }
        None => None,
    };

    let exit_code = match result.converged_by {
        ConvergedBy::AbsoluteAndRelative => EXIT_OK,
        ConvergedBy::KMax => EXIT_KMAX,
    };
    timings.total_s = total.elapsed().as_secs_f64();

    let record = RunRecord {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        problem: echo,
        config: cfg,
        result,
        oracle,
        timings,
    };

    let out_path = opts
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.run.json", record.problem.name())));
    let trace_path = opts
        .trace
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.trace.csv", record.problem.name())));
    fs::write(&out_path, serde_json::to_string_pretty(&record)? + "\n")
        .with_context(|| format!("writing {}", out_path.display()))?;
    fs::write(&trace_path, trace_csv(&record.result, problem.dim()))
        .with_context(|| format!("writing {}", trace_path.display()))?;

    Ok(RunOutcome {
        record,
        out_path,
        trace_path,
        exit_code,
    })
}

/// Execute `oracle`: direct Monte Carlo on the true LSF.
pub fn cmd_oracle(problem_arg: &str, n: usize, seed: u64) -> Result<PfEstimate> {
    let (problem, _) = resolve_problem(problem_arg)?;
    Ok(estimate_pf_direct(&problem, n, seed)?)
}

/// One row of the problem listing.
#[derive(Debug, Clone, Serialize)]
pub struct ListEntry {
    pub name: &'static str,
    pub dim: usize,
    pub variables: String,
    pub reference_pf: f64,
    pub reference_n: usize,
}

/// Stable, sorted listing of the built-in problems.
pub fn cmd_list() -> Vec<ListEntry> {
    ssrm::problem_names()
        .iter()
        .map(|name| {
            let p = ssrm::get_problem(name).expect("registry");
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for m in p.marginals() {
                *counts.entry(m.kind_name()).or_insert(0) += 1;
            }
            let variables = counts
                .iter()
                .map(|(k, v)| format!("{v} {k}"))
                .collect::<Vec<_>>()
                .join(", ");
            let reference = p.reference().expect("built-ins carry references");
            ListEntry {
                name,
                dim: p.dim(),
                variables,
                reference_pf: reference.pf,
                reference_n: reference.n,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolve_builtin_and_unknown() {
        assert!(resolve_problem("cubic").is_ok());
        assert!(resolve_problem("nosuch").is_err());
    }

    #[test]
    fn problem_spec_round_trip() {
        let text = r#"{
            "name": "toy",
            "variables": [
                {"name": "x1", "kind": "normal", "mean": 0.5, "std": 0.2},
                {"name": "x2", "kind": "uniform", "low": 0.0, "high": 1.0}
            ],
            "lsf_expression": "1 - x1^3 - x2",
            "constants": {},
            "ssrm_overrides": {"k_max": 5}
        }"#;
        let spec: ProblemSpec = serde_json::from_str(text).unwrap();
        let p = spec.to_problem().unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.overrides().k_max, Some(5));
        let g = p.eval(&[0.5, 0.25]).unwrap();
        assert!((g - (1.0 - 0.125 - 0.25)).abs() < 1e-12);
    }

    #[test]
    fn list_is_sorted_and_complete() {
        let rows = cmd_list();
        assert_eq!(rows.len(), 6);
        let names: Vec<&str> = rows.iter().map(|r| r.name).collect();
        let mut sorted = names.clone();
        sorted.sort_unstable();
        assert_eq!(names, sorted);
        let pipe = rows.iter().find(|r| r.name == "pipe").unwrap();
        assert_eq!(pipe.reference_pf, 0.034353);
        assert_eq!(pipe.variables, "2 normal");
    }

    #[test]
    fn kernel_parsing() {
        assert_eq!(parse_kernel("gaussian").unwrap(), KernelKind::Gaussian);
        assert!(parse_kernel("spline").is_err());
    }
}
