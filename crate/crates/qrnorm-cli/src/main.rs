//! Batch front end to the `qrnorm` library.
//!
//! Exit codes: 0 success, 1 check failure, 2 input error, 3 solver failure.

mod output;
mod reports;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qrnorm::conic::{Certificate, ConicProblem, SolveStatus, SolverOptions};
use qrnorm::dhtest::{self, NormTag};
use qrnorm::{entanglement, log2, rates, stab, states, wigner, Error, Operator};
use serde_json::{json, Value};

use output::{finite_or_str, render, Format};

const SAMPLE_LP: &str = include_str!("../samples/lp.dump");
const SAMPLE_OMEGA3: &str = include_str!("../samples/omega3_tempered.dump");
const SAMPLE_INFEASIBLE: &str = include_str!("../samples/infeasible.dump");

const MONOTONES: &[(&str, &str)] = &[
    ("negativity", "||rho^Gamma||_1"),
    ("log-negativity", "log2 ||rho^Gamma||_1"),
    ("reshuffled-negativity", "||rho^R||_1"),
    ("sep-base-norm", "SEP base norm (exact for pure states, else a lower bound)"),
    ("ppt-robustness", "1 + R^g over PPT states, a lower bound on 1 + R^g_SEP"),
    ("wigner-trace-norm", "sum of |W_rho(u)|"),
    ("mana", "log2 of the Wigner trace norm"),
    ("fw-base-norm", "base norm over Wigner-positive states (SDP)"),
    ("fw-dual-overlap", "max overlap with Wigner-positive states (SDP)"),
    ("fw-robustness", "1 + R^g over Wigner-positive states (SDP)"),
    ("stab-norm", "stabiliser norm ||.||_P"),
    ("stab-base-norm", "base norm over stabiliser states (LP)"),
    ("stab-one-plus-rs", "1 + R^s over stabiliser states"),
    ("stab-robustness", "1 + R^g over stabiliser states"),
    ("stab-dual-overlap", "max overlap with stabiliser states"),
    ("tempered", "tempered monotone over the --norm ball, log2"),
    ("ball-entropy", "inf over the --norm ball of D_hbar^eps(rho||Z)"),
    ("smoothed-log-norm", "min log2 ||X|| over the eps trace-norm ball around rho"),
    ("eps-delta", "checks the smoothed norm against the ball entropy at --eps and --delta"),
    ("norm", "||rho||_mu for --norm"),
    ("dual-norm", "||rho||°_mu for --norm"),
    ("positive-norm", "p_mu(rho) = inf{||Z||_mu : rho <= Z} for --norm"),
];

#[derive(Parser, Debug)]
#[command(name = "qrnorm", version, about = "Norm-based monotones and rate bounds for small quantum systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// zoo:NAME or a path to a matrix JSON file.
    #[arg(long, global = true)]
    state: Option<String>,
    #[arg(long, global = true)]
    norm: Option<String>,
    /// Evaluate on this many copies of the state.
    #[arg(long, global = true, default_value_t = 1)]
    copies: usize,
    #[arg(long, global = true, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, global = true, default_value_t = 0.0)]
    delta: f64,
    /// Overrides both the gap and feasibility tolerances.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// key=value file overriding gap_tol, feas_tol and max_iter.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evaluate one monotone on a state.
    Compute { monotone: String },
    /// norm-table, norrell-split or irreversibility:<scenario>.
    Report { target: String },
    /// Solve a conic dump: a path, or sample:lp, sample:omega3, sample:infeasible.
    Solve { problem: String },
    /// Wigner representation of --state.
    WignerTable,
    /// Enumerated stabiliser states as JSON.
    StabExport {
        #[arg(long)]
        qubits: usize,
    },
    /// Write the tempered program for --state and --norm as a conic dump.
    Dump { program: String },
    /// Monotones, zoo states, norms and scenarios.
    List,
}

enum Failure {
    Check(Value),
    Input(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Solver(m) => Failure::Solver(m),
            other => Failure::Input(other.to_string()),
        }
    }
}

type Outcome = std::result::Result<Value, Failure>;

fn solver_options(c: &Common) -> std::result::Result<SolverOptions, Failure> {
    let mut o = SolverOptions::default();
    if let Some(p) = &c.config {
        let text = std::fs::read_to_string(p).map_err(|e| Failure::Input(format!("config {}: {e}", p.display())))?;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |m: &str| Failure::Input(format!("config line {}: {m}", ln + 1));
            let (k, v) = line.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            let v = v.trim();
            match k.trim() {
                "gap_tol" => o.gap_tol = v.parse().map_err(|_| bad("gap_tol must be a number"))?,
                "feas_tol" => o.feas_tol = v.parse().map_err(|_| bad("feas_tol must be a number"))?,
                "max_iter" => o.max_iter = v.parse().map_err(|_| bad("max_iter must be an integer"))?,
                other => return Err(bad(&format!("unknown key '{other}'"))),
            }
        }
    }
    if let Some(t) = c.tol {
        o.gap_tol = t;
        o.feas_tol = t;
    }
    if !(o.gap_tol > 0.0 && o.feas_tol > 0.0) || !o.gap_tol.is_finite() || !o.feas_tol.is_finite() {
        return Err(Failure::Input("tolerances must be positive".into()));
    }
    if o.max_iter == 0 {
        return Err(Failure::Input("max_iter must be positive".into()));
    }
    Ok(o)
}

fn load_state(c: &Common) -> std::result::Result<(String, Operator), Failure> {
    let spec = c.state.as_deref().ok_or_else(|| Failure::Input("--state is required".into()))?;
    let op = if let Some(name) = spec.strip_prefix("zoo:") {
        states::zoo(name)?.operator
    } else {
        Operator::read_json(Path::new(spec))?
    };
    if c.copies == 0 {
        return Err(Failure::Input("--copies must be >= 1".into()));
    }
    if c.copies == 1 {
        return Ok((spec.to_string(), op));
    }
    let grouped = match op.dims() {
        [_, _] => {
            let p = op.tensor_power(c.copies);
            let mask: Vec<bool> = (0..2 * c.copies).map(|s| s % 2 == 0).collect();
            p.regroup(&mask)?
        }
        _ => op.tensor_power(c.copies),
    };
    Ok((format!("{spec}^{}", c.copies), grouped))
}

fn norm_tag(c: &Common) -> std::result::Result<NormTag, Failure> {
    let n = c.norm.as_deref().ok_or_else(|| Failure::Input("--norm is required".into()))?;
    Ok(NormTag::parse(n)?)
}

fn compute(monotone: &str, c: &Common, opts: &SolverOptions) -> Outcome {
    let (name, rho) = load_state(c)?;
    let base = |value: f64, provenance: &str| json!({ "monotone": monotone, "state": name, "value": finite_or_str(value), "provenance": provenance });
    let v = match monotone {
        "negativity" => base(entanglement::negativity(&rho)?, "trace norm of the partial transpose"),
        "log-negativity" => {
            let mut v = base(entanglement::log_negativity(&rho)?, "log2 of the negativity");
            v["linear"] = json!(entanglement::negativity(&rho)?);
            v
        }
        "reshuffled-negativity" => base(entanglement::reshuffled_negativity(&rho)?, "trace norm of the realignment"),
        "sep-base-norm" => {
            let s = entanglement::sep_base_norm(&rho)?;
            let mut v = base(s.value, s.method);
            v["exact"] = json!(s.exact);
            v
        }
        "ppt-robustness" => base(entanglement::ppt_gen_robustness_lower(&rho, opts)?, "SDP, lower bound on 1 + R^g_SEP"),
        "wigner-trace-norm" => base(wigner::wigner_trace_norm(&rho)?, "closed form"),
        "mana" => {
            let mut v = base(wigner::mana(&rho)?, "log2 of the Wigner trace norm");
            v["linear"] = json!(wigner::wigner_trace_norm(&rho)?);
            v
        }
        "fw-base-norm" => base(wigner::fw_base_norm(&rho, opts)?.value, "SDP"),
        "fw-dual-overlap" => base(wigner::fw_dual_overlap(&rho, opts)?.value, "SDP"),
        "fw-robustness" => base(wigner::fw_gen_robustness(&rho, opts)?.value, "SDP"),
        "stab-norm" => base(stab::stab_norm(&rho)?, "closed form"),
        "stab-base-norm" => base(stab::stab_base_norm(&rho, opts)?.value, "LP over enumerated stabiliser states"),
        "stab-one-plus-rs" => base(stab::stab_one_plus_rs(&rho, opts)?, "LP over enumerated stabiliser states"),
        "stab-robustness" => base(stab::stab_gen_robustness(&rho, opts)?.value, "LP + PSD over enumerated stabiliser states"),
        "stab-dual-overlap" => base(stab::stab_dual_overlap(&rho)?, "maximum over enumerated stabiliser states"),
        "tempered" => {
            let ball = norm_tag(c)?.ball(&rho)?;
            let t = dhtest::tempered(&rho, ball, opts)?;
            let mut v = base(log2(t.value), "SDP, log2");
            v["linear"] = json!(t.value);
            v["iterations"] = json!(t.iterations);
            v
        }
        "ball-entropy" => {
            let ball = norm_tag(c)?.ball(&rho)?;
            let b = dhtest::d_emancipated_min_over_ball(&rho, ball, c.eps, opts)?;
            let mut v = base(b.entropy, "SDP");
            v["min_dual_norm"] = json!(b.min_dual_norm);
            v["eps"] = json!(c.eps);
            v
        }
        "smoothed-log-norm" => {
            let ball = norm_tag(c)?.ball(&rho)?;
            let mut v = base(dhtest::smoothed_log_norm(&rho, ball, c.eps, opts)?, "SDP, log2");
            v["eps"] = json!(c.eps);
            v
        }
        "eps-delta" => {
            let ball = norm_tag(c)?.ball(&rho)?;
            let r = dhtest::check_eps_delta(&rho, ball, c.eps, c.delta, opts)?;
            let v = json!({ "monotone": monotone, "state": name, "lhs": r.lhs, "rhs": finite_or_str(r.rhs), "holds": r.holds, "eps": c.eps, "delta": c.delta });
            if !r.holds {
                return Err(Failure::Check(v));
            }
            v
        }
        "norm" => {
            let (x, p) = rates::norm_value(&rho, norm_tag(c)?, opts)?;
            base(x, &p)
        }
        "dual-norm" => {
            let (x, p) = rates::dual_value(&rho, norm_tag(c)?, opts)?;
            base(x, &p)
        }
        "positive-norm" => {
            let (x, p) = rates::positive_norm(&rho, norm_tag(c)?, opts)?;
            base(x, &p)
        }
        other => return Err(Failure::Input(format!("unknown monotone '{other}' (see `qrnorm list`)"))),
    };
    Ok(v)
}

fn report(target: &str, opts: &SolverOptions) -> Outcome {
    let (v, ok) = match target {
        "norm-table" => reports::norm_table(opts)?,
        "norrell-split" => reports::norrell_split(opts)?,
        t => match t.strip_prefix("irreversibility:") {
            Some(s) => reports::irreversibility(s, opts)?,
            None => return Err(Failure::Input(format!("unknown report '{t}' (norm-table, norrell-split, irreversibility:<scenario>)"))),
        },
    };
    if ok {
        Ok(v)
    } else {
        Err(Failure::Check(v))
    }
}

fn solve(problem: &str, opts: &SolverOptions) -> Outcome {
    let text = match problem {
        "sample:lp" => SAMPLE_LP.to_string(),
        "sample:omega3" => SAMPLE_OMEGA3.to_string(),
        "sample:infeasible" => SAMPLE_INFEASIBLE.to_string(),
        path => std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{path}: {e}")))?,
    };
    let p = ConicProblem::from_dump(&text)?;
    let s = p.solve(opts)?;
    let certificate = match &s.certificate {
        Some(Certificate::PrimalInfeasible { .. }) => Some("primal-infeasible"),
        Some(Certificate::DualInfeasible { .. }) => Some("dual-infeasible"),
        None => None,
    };
    let v = json!({
        "problem": problem,
        "status": s.status.as_str(),
        "primal_value": finite_or_str(s.primal_value),
        "dual_value": finite_or_str(s.dual_value),
        "gap": finite_or_str(s.gap),
        "primal_residual": finite_or_str(s.primal_residual),
        "dual_residual": finite_or_str(s.dual_residual),
        "iterations": s.iterations,
        "certificate": certificate,
        "note": s.note,
    });
    match s.status {
        SolveStatus::Optimal => Ok(v),
        SolveStatus::Infeasible | SolveStatus::Unbounded if certificate.is_some() => Ok(v),
        _ => Err(Failure::Solver(format!("solver stopped with status {}", s.status.as_str()))),
    }
}

fn wigner_table(c: &Common) -> std::result::Result<String, Failure> {
    let (name, rho) = load_state(c)?;
    let rep = wigner::wigner_rep(&rho)?;
    Ok(match c.format {
        Format::Csv => rep.to_csv(),
        f => render(&json!({ "state": name, "n": rep.n, "table": rep.table(), "sum": rep.sum(), "l1": rep.l1() }), f),
    })
}

fn dump(program: &str, c: &Common) -> std::result::Result<String, Failure> {
    if program != "tempered" {
        return Err(Failure::Input(format!("unknown program '{program}' (tempered)")));
    }
    let (_, rho) = load_state(c)?;
    let ball = norm_tag(c)?.ball(&rho)?;
    Ok(dhtest::tempered_problem(&rho, ball)?.to_dump())
}

fn list() -> Value {
    json!({
        "monotones": MONOTONES.iter().map(|(n, d)| json!({ "name": n, "description": d })).collect::<Vec<_>>(),
        "zoo": states::ZOO_NAMES,
        "norms": NormTag::ALL.iter().map(|t| t.name()).collect::<Vec<_>>(),
        "scenarios": rates::Scenario::NAMES,
    })
}

fn emit(text: &str, out: &Option<PathBuf>) -> std::result::Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> std::result::Result<(), Failure> {
    let c = &cli.common;
    let opts = solver_options(c)?;
    match &cli.cmd {
        Cmd::WignerTable => return emit(&wigner_table(c)?, &c.out),
        Cmd::Dump { program } => return emit(&dump(program, c)?, &c.out),
        Cmd::StabExport { qubits } => return emit(&render(&stab::enumerate_stabiliser_states(*qubits)?.to_json(), Format::Json), &c.out),
        _ => {}
    }
    let result = match &cli.cmd {
        Cmd::Compute { monotone } => compute(monotone, c, &opts),
        Cmd::Report { target } => report(target, &opts),
        Cmd::Solve { problem } => solve(problem, &opts),
        Cmd::List => Ok(list()),
        _ => unreachable!("handled above"),
    };
    match result {
        Ok(v) => emit(&render(&v, c.format), &c.out),
        Err(Failure::Check(v)) => {
            emit(&render(&v, c.format), &c.out)?;
            Err(Failure::Check(v))
        }
        Err(e) => Err(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(_)) => {
            eprintln!("qrnorm: check failed");
            ExitCode::from(1)
        }
        Err(Failure::Input(m)) => {
            eprintln!("qrnorm: input error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("qrnorm: solver failure: {m}");
            ExitCode::from(3)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qrnorm::dhtest::bipartite_dims;

    #[test]
    fn bipartite_copies_regroup() {
        let c = Common { state: Some("zoo:phi2".into()), norm: None, copies: 2, eps: 0.0, delta: 0.0, tol: None, format: Format::Json, out: None, config: None };
        let (_, op) = load_state(&c).ok().unwrap();
        assert_eq!(bipartite_dims(&op).unwrap(), (4, 4));
        assert!((entanglement::negativity(&op).unwrap() - 4.0).abs() < 1e-9);
    }
}
