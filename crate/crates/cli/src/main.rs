//! `skewgen`: command-line front end for the skew-symmetric pencil toolkit.
//!
//! Exit codes: 0 on success or match, 1 on mismatch, non-dominance or a
//! tolerance inconsistency, 2 on usage errors and malformed input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use skewgen::canon::{build_block, build_skew_block, realize_kcf, realize_skew_kcf};
use skewgen::closure::{
    dominates, enumerate_skew_kcfs, skew_dominates, strata_dag, strata_dot, Dominance, SearchOptions,
};
use skewgen::generic::{
    codim_closed_form, codim_poly, codim_sum_formula, generic_skew_pencil, generic_skew_poly,
    GenericPencilParams, GenericPolyParams,
};
use skewgen::io::{
    canonical_form_from_json, certificate_to_json, eigstruct_to_json, matpoly_from_json,
    matpoly_to_json, parse_block, skew_kcf_from_json, skew_kcf_to_json, CanonicalForm, NamedBlock,
};
use skewgen::linearize::linearize;
use skewgen::numeric::{recover, NumericError, ToleranceModel};
use skewgen::sampling::{run_experiment, Experiment};
use skewgen::verify::{run_criterion, VerifyOptions, CRITERIA};

#[derive(Parser)]
#[command(name = "skewgen", version, about = "Generic skew-symmetric pencils and odd-grade polynomials of bounded rank")]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GlobalOpts {
    /// Relative singular-value threshold for rank decisions
    #[arg(long, global = true, env = "SKEWGEN_TOL", default_value_t = 1e-10)]
    tol: f64,
    /// Master seed for probes and sampling
    #[arg(long, global = true, env = "SKEWGEN_SEED", default_value_t = 2024)]
    seed: u64,
    /// Number of Monte-Carlo trials
    #[arg(long, global = true, env = "SKEWGEN_TRIALS", default_value_t = 100)]
    trials: usize,
    #[arg(long, global = true, env = "SKEWGEN_FORMAT", value_enum)]
    format: Option<Format>,
    /// Write output to this file instead of stdout
    #[arg(long, global = true, env = "SKEWGEN_OUT")]
    out: Option<PathBuf>,
    /// Fresh eigenvalue labels a closure search may use at once
    #[arg(long, global = true, env = "SKEWGEN_EIG_BUDGET")]
    eig_budget: Option<usize>,
    /// Maximum closure certificate length
    #[arg(long, global = true, env = "SKEWGEN_DEPTH_CAP")]
    depth_cap: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Dot,
}

#[derive(Subcommand)]
enum Command {
    /// Realize one canonical block given by name, e.g. M_2, H_1(3), E_2(inf), LT_1
    Block { name: String },
    /// Realize a canonical form read from JSON as a pencil
    Realize { form: PathBuf },
    /// Generic skew form of size n and rank at most 2w
    GenericPencil { n: usize, w: usize },
    /// Generic eigenstructure of skew polynomials of size m, rank at most 2r, odd grade d
    GenericPoly { m: usize, r: usize, d: usize },
    /// Orbit codimensions
    Codim {
        #[command(subcommand)]
        which: CodimCommand,
    },
    /// Search for a closure certificate showing `source` lies in the closure of `target`
    ClosureCheck { target: PathBuf, source: PathBuf },
    /// All skew forms of size n and rank at most maxrank
    Enumerate {
        n: usize,
        maxrank: usize,
        #[arg(long, default_value_t = 3)]
        labels: usize,
    },
    /// Hasse diagram of skew dominance among the enumerated forms
    StrataDag {
        n: usize,
        maxrank: usize,
        #[arg(long, default_value_t = 1)]
        labels: usize,
    },
    /// Skew linearization of a skew polynomial of odd grade
    Linearize { poly: PathBuf },
    /// Numerically recover rank, minimal indices and divisor degree
    Analyze { poly: PathBuf },
    /// Monte-Carlo experiments
    Experiment {
        #[command(subcommand)]
        which: ExperimentCommand,
    },
    /// Run the acceptance checks
    Verify {
        /// Run only these criteria
        #[arg(long = "criterion")]
        criteria: Vec<u8>,
    },
}

#[derive(Subcommand)]
enum CodimCommand {
    Pencil { n: usize, w: usize },
    Poly { m: usize, r: usize, d: usize },
    /// Pairwise sum formula for an M-only skew form read from JSON
    Sum { form: PathBuf },
}

#[derive(Subcommand)]
enum ExperimentCommand {
    Pencil { n: usize, w: usize },
    Poly { m: usize, r: usize, d: usize },
    Linearization { m: usize, r: usize, d: usize },
}

enum Failure {
    Usage(String),
    Check(String, Option<Value>),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

struct Output {
    json: Value,
    text: String,
    dot: Option<String>,
    code: u8,
}

impl Output {
    fn new(json: Value, text: impl Into<String>) -> Self {
        Output { json, text: text.into(), dot: None, code: 0 }
    }

    fn with_code(mut self, code: u8) -> Self {
        self.code = code;
        self
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn tolerance(o: &GlobalOpts) -> Result<ToleranceModel, Failure> {
    if !(o.tol > 0.0 && o.tol < 1.0) {
        return Err(Failure::Usage(format!("--tol must lie in (0, 1), got {}", o.tol)));
    }
    Ok(ToleranceModel { rel_tol: o.tol, seed: o.seed, ..ToleranceModel::default() })
}

fn search(o: &GlobalOpts) -> SearchOptions {
    SearchOptions { eig_budget: o.eig_budget, depth_cap: o.depth_cap }
}

fn numeric_failure(e: NumericError) -> Failure {
    let audit = serde_json::to_value(e.audit()).unwrap_or(Value::Null);
    Failure::Check(e.to_string(), Some(json!({ "error": e.to_string(), "audit": audit })))
}

fn dominance_output(d: &Dominance) -> Output {
    match d {
        Dominance::Certified { certificate, stats } => {
            let steps: Vec<String> = certificate.steps.iter().map(ToString::to_string).collect();
            let text = if steps.is_empty() {
                format!("dominated: {} is {}", certificate.source, certificate.target)
            } else {
                format!("dominated in {} steps:\n  {}", steps.len(), steps.join("\n  "))
            };
            let mut j = certificate_to_json(certificate, *stats);
            j["dominated"] = json!(true);
            Output::new(j, text)
        }
        Dominance::NotDominated(stats) => {
            let mut text = format!("not dominated ({} states searched)", stats.states);
            if stats.budget_bound || stats.depth_bound {
                text.push_str("; the search hit its eigenvalue budget or depth cap");
            }
            Output::new(json!({ "dominated": false, "stats": stats }), text).with_code(1)
        }
    }
}

fn run(cli: Cli) -> Result<Output, Failure> {
    let o = &cli.opts;
    Ok(match cli.command {
        Command::Block { name } => {
            let pencil = match parse_block(&name)? {
                NamedBlock::General(b) => build_block(&b)?,
                NamedBlock::Skew(b) => build_skew_block(&b)?,
            };
            let p = pencil.to_poly();
            Output::new(matpoly_to_json(&p), format!("lambda * {} - {}", pencil.a, pencil.b))
        }
        Command::Realize { form } => {
            let pencil = match canonical_form_from_json(&read(&form)?)? {
                CanonicalForm::Skew(s) => realize_skew_kcf(&s)?,
                CanonicalForm::General(k) => realize_kcf(&k)?,
            };
            Output::new(matpoly_to_json(&pencil.to_poly()), format!("lambda * {} - {}", pencil.a, pencil.b))
        }
        Command::GenericPencil { n, w } => {
            let s = generic_skew_pencil(GenericPencilParams::new(n, w)?);
            Output::new(skew_kcf_to_json(&s), s.to_string())
        }
        Command::GenericPoly { m, r, d } => {
            let e = generic_skew_poly(GenericPolyParams::new(m, r, d)?);
            let text = format!("right = left = {:?}, no elementary divisors", e.right);
            Output::new(eigstruct_to_json(&e), text)
        }
        Command::Codim { which } => {
            let c = match which {
                CodimCommand::Pencil { n, w } => codim_closed_form(n, w)?,
                CodimCommand::Poly { m, r, d } => codim_poly(m, r, d)?,
                CodimCommand::Sum { form } => codim_sum_formula(&skew_kcf_from_json(&read(&form)?)?)?,
            };
            Output::new(json!(c), c.to_string())
        }
        Command::ClosureCheck { target, source } => {
            let t = canonical_form_from_json(&read(&target)?)?;
            let s = canonical_form_from_json(&read(&source)?)?;
            let d = match (&t, &s) {
                (CanonicalForm::Skew(t), CanonicalForm::Skew(s)) => skew_dominates(t, s, search(o))?,
                _ => dominates(&t.to_kcf(), &s.to_kcf(), search(o))?,
            };
            dominance_output(&d)
        }
        Command::Enumerate { n, maxrank, labels } => {
            let strata = enumerate_skew_kcfs(n, maxrank, labels);
            let text = strata.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n");
            Output::new(Value::Array(strata.iter().map(skew_kcf_to_json).collect()), text)
        }
        Command::StrataDag { n, maxrank, labels } => {
            let strata = enumerate_skew_kcfs(n, maxrank, labels);
            let edges = strata_dag(&strata, search(o))?;
            let text = edges
                .iter()
                .map(|&(i, j)| format!("{} -> {}", strata[i], strata[j]))
                .collect::<Vec<_>>()
                .join("\n");
            let j = json!({
                "strata": strata.iter().map(skew_kcf_to_json).collect::<Vec<_>>(),
                "edges": edges,
            });
            let mut out = Output::new(j, text);
            out.dot = Some(strata_dot(&strata, &edges));
            out
        }
        Command::Linearize { poly } => {
            let g = linearize(&matpoly_from_json(&read(&poly)?)?)?;
            let text = format!("lambda * {} - {}", g.pencil.a, g.pencil.b);
            Output::new(matpoly_to_json(&g.pencil.to_poly()), text)
        }
        Command::Analyze { poly } => {
            let p = matpoly_from_json(&read(&poly)?)?;
            let rec = recover(&p, &tolerance(o)?).map_err(numeric_failure)?;
            let text = format!(
                "normal rank {}\nright minimal indices {:?}\nleft minimal indices {:?}\ndivisor degree sum {}\nlow-confidence decisions {}",
                rec.normal_rank,
                rec.right,
                rec.left,
                rec.divisor_degree_sum,
                rec.low_confidence()
            );
            Output::new(serde_json::to_value(&rec)?, text)
        }
        Command::Experiment { which } => {
            let exp = match which {
                ExperimentCommand::Pencil { n, w } => Experiment::Pencil { n, w },
                ExperimentCommand::Poly { m, r, d } => Experiment::Poly { m, r, d },
                ExperimentCommand::Linearization { m, r, d } => Experiment::Linearization { m, r, d },
            };
            let report = run_experiment(exp, o.trials, &tolerance(o)?, o.seed)?;
            let mut text = format!(
                "{} ({}): {}/{} trials match, {} low-confidence decisions",
                serde_json::to_string(&report.experiment)?,
                report.label,
                report.matches,
                report.trials,
                report.audit.low_confidence_decisions
            );
            for m in &report.mismatches {
                text.push_str(&format!(
                    "\n  trial {} (seed {}): expected {:?}, got {}",
                    m.trial,
                    m.seed,
                    m.expected,
                    m.error.clone().unwrap_or_else(|| format!("{:?}", m.recovered))
                ));
            }
            let code = u8::from(report.matches < report.trials);
            Output::new(serde_json::to_value(&report)?, text).with_code(code)
        }
        Command::Verify { criteria } => {
            let opts = VerifyOptions { tol: tolerance(o)?, seed: o.seed, search: search(o) };
            let ids: Vec<u8> = if criteria.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { criteria };
            let reports: Vec<_> = ids.iter().map(|&id| run_criterion(id, &opts)).collect();
            let text = reports
                .iter()
                .map(|r| {
                    format!(
                        "criterion {} {}: {} ({}; {:.1}s)",
                        r.id,
                        if r.passed { "PASS" } else { "FAIL" },
                        r.name,
                        r.detail,
                        r.seconds
                    )
                })
                .collect::<Vec<_>>()
                .join("\n");
            let code = u8::from(reports.iter().any(|r| !r.passed));
            Output::new(serde_json::to_value(&reports)?, text).with_code(code)
        }
    })
}

fn emit(o: &GlobalOpts, body: &str) -> Result<(), String> {
    match &o.out {
        Some(path) => fs::write(path, format!("{body}\n")).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            use std::io::Write;
            match writeln!(std::io::stdout().lock(), "{body}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.to_string()),
                _ => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = cli.opts.clone();
    let is_dag = matches!(cli.command, Command::StrataDag { .. });
    let format = opts.format.unwrap_or(if is_dag { Format::Dot } else { Format::Json });
    match run(cli) {
        Ok(out) => {
            let body = match format {
                Format::Json => serde_json::to_string_pretty(&out.json).expect("serializable"),
                Format::Text => out.text,
                Format::Dot => match out.dot {
                    Some(d) => d,
                    None => {
                        eprintln!("error: --format dot is only available for strata-dag");
                        return ExitCode::from(2);
                    }
                },
            };
            if let Err(e) = emit(&opts, &body) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            ExitCode::from(out.code)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Check(msg, detail)) => {
            eprintln!("error: {msg}");
            if let Some(d) = detail {
                let _ = emit(&opts, &serde_json::to_string_pretty(&d).expect("serializable"));
            }
            ExitCode::from(1)
        }
    }
}
