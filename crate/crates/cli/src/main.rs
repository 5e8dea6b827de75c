use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use entroprover::balance::balance_with_report;
use entroprover::engine::ScriptError;
use entroprover::expr::{format_rat, parse, render};
use entroprover::rules::{self, Partition};
use entroprover::semantics::{copy_distribution, evaluate, format_pmf, parse_pmf, JointPmf, INEQ_TOL};
use entroprover::shannon::{
    check_shannon_capped, elementals, verify_certificate, verify_witness, ShannonVerdict, VerdictDoc,
    VerdictReport, MAX_LP_VARS,
};
use entroprover::{run_script, Inequality, LinForm, Relation, VarContext};

const EXIT_OK: u8 = 0;
const EXIT_NEGATIVE: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "entroprover", version, about = "Exact prover for linear information inequalities")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Report::Text, global = true)]
    report: Report,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Report {
    Text,
    Structured,
}

#[derive(Args)]
struct Input {
    /// Inequality, e.g. "I(A;B|C) >= 0".
    #[arg(allow_hyphen_values = true)]
    ineq: Option<String>,
    /// Read the inequality from a file instead.
    #[arg(long, conflicts_with = "ineq")]
    file: Option<PathBuf>,
    /// Comma-separated variable context (default: the variables used, sorted).
    #[arg(long, value_delimiter = ',')]
    vars: Option<Vec<String>>,
}

#[derive(Args)]
struct RuleArgs {
    #[command(flatten)]
    input: Input,
    /// The copied (or residual) variable.
    #[arg(long)]
    z: String,
    /// Comma-separated X group.
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<String>,
    /// Comma-separated Y group; may be empty.
    #[arg(long, value_delimiter = ',', default_value = "")]
    y: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the canonical joint-entropy form.
    Canon(Input),
    /// Balance the inequality.
    Balance(Input),
    /// Decide whether the inequality is Shannon-type.
    Check(Input),
    /// Apply the copy rule.
    Zy(RuleArgs),
    /// Apply the residual-subtraction rule.
    Mmrv(RuleArgs),
    /// Substitute variables, e.g. --map Z=A.
    Subst {
        #[command(flatten)]
        input: Input,
        #[arg(long, required = true)]
        map: Vec<String>,
    },
    /// Evaluate the inequality on the entropy vector of a distribution.
    Eval {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        pmf: PathBuf,
    },
    /// Append a C-copy of A over B to a distribution.
    Copy {
        #[arg(long)]
        pmf: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long, value_delimiter = ',', default_value = "")]
        b: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        c: Vec<String>,
    },
    /// Run a derivation script.
    Run { script: PathBuf },
    /// List the elemental inequalities on n variables.
    Elementals {
        #[arg(long)]
        n: usize,
        /// Comma-separated variable names (default X1..Xn).
        #[arg(long, value_delimiter = ',')]
        vars: Option<Vec<String>>,
    },
}

/// A failure carrying its exit code.
struct Failure {
    code: u8,
    msg: String,
}

fn usage(msg: impl ToString) -> Failure {
    Failure {
        code: EXIT_USAGE,
        msg: msg.to_string(),
    }
}

/// Command result: text output, structured output, exit code.
struct Outcome {
    text: String,
    doc: Value,
    code: u8,
}

impl Outcome {
    fn ok(text: String, doc: Value) -> Self {
        Outcome { text, doc, code: EXIT_OK }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            // A closed pipe is not an error for a batch tool.
            let _ = match cli.report {
                Report::Text => write!(stdout, "{}", out.text),
                Report::Structured => writeln!(stdout, "{}", serde_json::to_string_pretty(&out.doc).expect("json")),
            };
            ExitCode::from(out.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn max_vars() -> Result<usize, Failure> {
    match std::env::var("ENTROPROVER_MAX_N") {
        Err(_) => Ok(MAX_LP_VARS),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if (1..=MAX_LP_VARS).contains(&n) => Ok(n),
            _ => Err(usage(format!(
                "ENTROPROVER_MAX_N must be an integer in 1..={MAX_LP_VARS}, got `{s}`"
            ))),
        },
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn input_text(input: &Input) -> Result<String, Failure> {
    match (&input.ineq, &input.file) {
        (Some(s), None) => Ok(s.clone()),
        (None, Some(path)) => Ok(read(path)?.trim().to_string()),
        _ => Err(usage("give an inequality or --file")),
    }
}

fn input_ineq(input: &Input) -> Result<Inequality, Failure> {
    let text = input_text(input)?;
    let ctx = match &input.vars {
        Some(v) => Some(Arc::new(VarContext::new(v).map_err(usage)?)),
        None => None,
    };
    parse(&text, ctx.as_ref()).map_err(usage)
}

fn input_form(input: &Input) -> Result<LinForm, Failure> {
    Ok(input_ineq(input)?.canonicalize())
}

fn form_outcome(f: &LinForm) -> Outcome {
    let r = render(f);
    Outcome::ok(format!("{r}\n"), json!({ "form": r }))
}

fn dispatch(cmd: Command) -> Result<Outcome, Failure> {
    match cmd {
        Command::Canon(input) => Ok(form_outcome(&input_form(&input)?)),
        Command::Balance(input) => balance_cmd(&input),
        Command::Check(input) => check_cmd(&input),
        Command::Zy(args) => rule_cmd(&args, true),
        Command::Mmrv(args) => rule_cmd(&args, false),
        Command::Subst { input, map } => {
            let mut f = input_form(&input)?;
            for m in &map {
                let (from, to) = m
                    .split_once('=')
                    .ok_or_else(|| usage(format!("--map expects FROM=TO, got `{m}`")))?;
                f = rules::substitute_or_rename(&f, from.trim(), to.trim()).map_err(usage)?;
            }
            Ok(form_outcome(&f))
        }
        Command::Eval { input, pmf } => eval_cmd(&input, &pmf),
        Command::Copy { pmf, a, b, c } => {
            let p = parse_pmf(&read(&pmf)?).map_err(usage)?;
            let b: Vec<&str> = b.iter().map(String::as_str).filter(|s| !s.is_empty()).collect();
            let c: Vec<&str> = c.iter().map(String::as_str).filter(|s| !s.is_empty()).collect();
            let q = copy_distribution(&p, &a, &b, &c).map_err(usage)?;
            Ok(Outcome::ok(format_pmf(&q), pmf_doc(&q)))
        }
        Command::Run { script } => run_cmd(&script),
        Command::Elementals { n, vars } => elementals_cmd(n, vars),
    }
}

fn balance_cmd(input: &Input) -> Result<Outcome, Failure> {
    let f = input_form(input)?;
    let report = balance_with_report(&f);
    let rendered = render(&report.form);
    let mut text = format!("{rendered}\n");
    let negative = report.negative_residuals();
    for (v, r) in &negative {
        text.push_str(&format!("# residual r_{v} = {} is negative\n", format_rat(r)));
    }
    let residuals: BTreeMap<&str, String> = f
        .ctx()
        .names()
        .iter()
        .map(String::as_str)
        .zip(report.residuals.iter().map(format_rat))
        .collect();
    let doc = json!({
        "form": rendered,
        "residuals": residuals,
        "negative_residuals": negative.iter().map(|(v, _)| v).collect::<Vec<_>>(),
    });
    Ok(Outcome::ok(text, doc))
}

#[derive(Serialize)]
struct CheckDoc {
    form: String,
    verified: bool,
    #[serde(flatten)]
    verdict: VerdictDoc,
}

fn check_cmd(input: &Input) -> Result<Outcome, Failure> {
    let max_n = max_vars()?;
    let ineq = input_ineq(input)?;
    let mut out = String::new();
    let mut docs = Vec::new();
    let mut all_shannon = true;
    for f in ineq.to_forms() {
        let verdict = check_shannon_capped(&f, max_n).map_err(usage)?;
        let elems = elementals(f.ctx()).map_err(usage)?;
        let verified = match &verdict {
            ShannonVerdict::Certificate(c) => verify_certificate(&f, c),
            ShannonVerdict::Witness(w) => verify_witness(&f, w),
        };
        all_shannon &= verdict.is_shannon();
        out.push_str(&format!("{}\n", render(&f)));
        out.push_str(&VerdictReport {
            verdict: &verdict,
            elementals: &elems,
        }
        .to_string());
        docs.push(CheckDoc {
            form: render(&f),
            verified,
            verdict: VerdictDoc::new(&verdict, &elems),
        });
    }
    Ok(Outcome {
        text: out,
        doc: json!({ "shannon_type": all_shannon, "checks": docs }),
        code: if all_shannon { EXIT_OK } else { EXIT_NEGATIVE },
    })
}

fn rule_cmd(args: &RuleArgs, copy_rule: bool) -> Result<Outcome, Failure> {
    let f = input_form(&args.input)?;
    let x: Vec<&str> = args.x.iter().map(String::as_str).collect();
    let y: Vec<&str> = args.y.iter().map(String::as_str).filter(|s| !s.is_empty()).collect();
    let p = Partition::from_names(f.ctx(), &args.z, &x, &y).map_err(usage)?;
    let (out, label, value) = if copy_rule {
        let d = rules::decompose_zy(&f, &p).map_err(usage)?;
        (d.f.add(&d.g).map_err(usage)?, "alpha", d.alpha)
    } else {
        let r = rules::mmrv_residual(&f, &p).map_err(usage)?;
        (rules::apply_mmrv(&f, &p).map_err(usage)?, "r_z", r)
    };
    let rendered = render(&out);
    Ok(Outcome::ok(
        format!("# {label} = {}\n{rendered}\n", format_rat(&value)),
        json!({ "form": rendered, label: format_rat(&value) }),
    ))
}

fn eval_cmd(input: &Input, pmf: &PathBuf) -> Result<Outcome, Failure> {
    if input.vars.is_some() {
        return Err(usage("eval takes its variables from the --pmf header"));
    }
    let p = parse_pmf(&read(pmf)?).map_err(usage)?;
    let text = input_text(input)?;
    let ineq = parse(&text, Some(p.ctx())).map_err(usage)?;
    let h = p.entropy_vector();
    let f = ineq.canonicalize();
    let value = evaluate(&f, &h).map_err(usage)?;
    // An equation must hold in both directions.
    let holds = match ineq.relation {
        Relation::Eq => value.abs() <= INEQ_TOL,
        _ => value >= -INEQ_TOL,
    };
    Ok(Outcome {
        text: format!(
            "{}\nvalue = {value:.12}\n{}\n",
            render(&f),
            if holds { "holds" } else { "violated" }
        ),
        doc: json!({ "form": render(&f), "value": value, "holds": holds }),
        code: if holds { EXIT_OK } else { EXIT_NEGATIVE },
    })
}

fn pmf_doc(p: &JointPmf) -> Value {
    let cells: Vec<Value> = p
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, &pr)| pr != 0.0)
        .map(|(i, &pr)| json!({ "values": p.values_of(i), "p": pr }))
        .collect();
    json!({ "variables": p.ctx().names(), "sizes": p.sizes(), "cells": cells })
}

fn run_cmd(path: &PathBuf) -> Result<Outcome, Failure> {
    let text = read(path)?;
    match run_script(&text) {
        Ok(t) => Ok(Outcome::ok(
            t.to_string(),
            json!({ "status": "ok", "transcript": t }),
        )),
        Err(ScriptError::Parse { line, msg }) => Err(usage(format!("{}:{line}: {msg}", path.display()))),
        Err(e) => {
            let code = match e {
                ScriptError::Assertion { .. } => EXIT_NEGATIVE,
                _ => EXIT_USAGE,
            };
            eprintln!("error: {}: {e}", path.display());
            let t = e.transcript().cloned().unwrap_or_default();
            Ok(Outcome {
                text: t.to_string(),
                doc: json!({ "status": "failed", "error": e.to_string(), "transcript": t }),
                code,
            })
        }
    }
}

fn elementals_cmd(n: usize, vars: Option<Vec<String>>) -> Result<Outcome, Failure> {
    let ctx = match vars {
        Some(v) if v.len() != n => {
            return Err(usage(format!("--vars lists {} names for n = {n}", v.len())))
        }
        Some(v) => VarContext::new(v),
        None => VarContext::numbered(n),
    }
    .map_err(usage)?;
    if n == 0 || n > max_vars()? {
        return Err(usage(format!("n must be in 1..={}", max_vars()?)));
    }
    let elems = elementals(&Arc::new(ctx)).map_err(usage)?;
    let mut text = String::new();
    let mut docs = Vec::new();
    for e in &elems {
        let r = render(&e.form);
        text.push_str(&format!("{:>4}  {:<24} {r}\n", e.id, e.describe()));
        docs.push(json!({ "id": e.id, "elemental": e.describe(), "form": r }));
    }
    Ok(Outcome::ok(text, json!({ "count": elems.len(), "elementals": docs })))
}
