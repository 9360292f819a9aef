//! Command-line front end exposing the library workflows with
//! machine-readable output.
//!
//! Exit codes: 0 on success, 1 on a mathematical failure (an invalid bound,
//! a proof table that fails verification, a code with undecodable demands),
//! 2 on usage errors.
//!
//! Instances are described by `--n`/`--k` plus at most one of
//! `--demand-type` (comma-separated non-increasing request counts, e.g.
//! `2,1,0`) and `--demands` (comma-separated delivery names, e.g.
//! `X1112,X1122`). The environment variable `ENTROPLEX_MAX_UNIVERSE`
//! overrides the default universe-size cap. Rationals are always rendered
//! `p/q`, never floating point.

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::{One, Zero};

use crate::codes::{
    code_to_json, constraint_violations, man_scheme, paper_code, verify_code, LinearCode,
    PaperCodeId,
};
use crate::lpbuild::LpContext;
use crate::model::{
    all_demands, demand_types, elemental_count, parse_var, DemandFilter, DemandType,
    ProblemInstance, RandomVar, DEFAULT_UNIVERSE_CAP,
};
use crate::prooftab::{extract, parse_table, render_text, serialize_table, verify};
use crate::ratsolve::{format_rational, parse_rational, Rational, SolverOptions};
use crate::symmetry::Canonicalizer;
use crate::tradeoff::{
    corner_points, facets, stable_range_objective, StableMode, StableReport, TradeoffPoint,
};

#[derive(Parser)]
#[command(
    name = "entroplex",
    version,
    about = "Exact-rational memory-rate bounds, proof tables, and code checks for coded caching"
)]
struct Cli {
    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    output: OutputFormat,
    /// Number of worker threads for LP solves (outputs are identical for any
    /// value; solves currently run sequentially).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Args)]
struct InstanceArgs {
    /// Number of files (N).
    #[arg(long)]
    n: usize,
    /// Number of users/caches (K).
    #[arg(long)]
    k: usize,
    /// Restrict deliveries to one demand type, e.g. `2,1,0`.
    #[arg(long, value_name = "COUNTS", conflicts_with = "demands")]
    demand_type: Option<String>,
    /// Restrict deliveries to an explicit list, e.g. `X1112,X1122`.
    #[arg(long, value_name = "NAMES")]
    demands: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Show demand types, universe size, and the raw elemental count.
    Info(InstanceArgs),
    /// Compute the corner points and facets of the (M,R) lower hull.
    Bound(InstanceArgs),
    /// Produce a proof table certifying `a*M + b*R >= rhs`.
    Prove {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Coefficient of M (rational, `p/q` or integer).
        #[arg(long)]
        a: String,
        /// Coefficient of R.
        #[arg(long)]
        b: String,
        /// Right-hand side of the certified bound.
        #[arg(long)]
        rhs: String,
        /// Write the table here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<String>,
    },
    /// Check a proof table file; exit 0 iff it verifies.
    VerifyProof {
        /// Path of the proof-table JSON file.
        file: String,
        #[command(flatten)]
        instance: InstanceArgs,
        /// Also print the step-by-step reading of the table.
        #[arg(long)]
        render: bool,
    },
    /// Probe the range of a joint entropy over the LP optima at a corner.
    Stable {
        #[command(flatten)]
        instance: InstanceArgs,
        /// The corner, as two rationals: M R.
        #[arg(long, num_args = 2, value_names = ["M", "R"])]
        corner: Vec<String>,
        /// Variable set whose entropy is probed, e.g. `Z1,Z2`.
        #[arg(long)]
        target: String,
        /// Optional conditioning set (probes `H(target | given)`).
        #[arg(long)]
        given: Option<String>,
        /// `lex` pins H(Z1) and R at the corner; `gamma:G` perturbs the
        /// objective by the rational weight G instead.
        #[arg(long, default_value = "lex")]
        mode: String,
    },
    /// Verify a shipped code construction and print its (M,R) point.
    Code {
        /// `table2`, `table16`, `table17`, `table18`, or `man:N,K,t`.
        #[arg(long)]
        scheme: String,
        /// `all` for every demand the scheme serves, or an explicit
        /// comma-separated list of delivery names.
        #[arg(long, default_value = "all")]
        verify: String,
        /// Also check the code's entropy vector against every LP constraint.
        #[arg(long)]
        check_lp: bool,
        /// Print the code listing as JSON instead of verifying.
        #[arg(long)]
        dump: bool,
    },
    /// Export the symmetry-reduced LP as JSON.
    ExportLp {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Coefficient of M in the attached objective.
        #[arg(long, default_value = "1")]
        a: String,
        /// Coefficient of R in the attached objective.
        #[arg(long, default_value = "1")]
        b: String,
    },
}

/// A non-usage failure: exit code 1 with the message on stderr.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn universe_cap() -> usize {
    std::env::var("ENTROPLEX_MAX_UNIVERSE")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(DEFAULT_UNIVERSE_CAP)
}

fn parse_demand_type(text: &str) -> Result<DemandType, String> {
    let counts: Result<Vec<u8>, _> = text.split(',').map(|p| p.trim().parse::<u8>()).collect();
    match counts {
        Ok(c) if !c.is_empty() => Ok(DemandType(c)),
        _ => Err(format!("cannot parse demand type `{text}`")),
    }
}

fn parse_demand_list(text: &str, n: usize, k: usize) -> Result<Vec<Vec<u8>>, String> {
    let mut out = Vec::new();
    for name in text.split(',') {
        let name = name.trim();
        match parse_var(name, n, k) {
            Ok(RandomVar::Delivery(d)) => out.push(d),
            Ok(other) => return Err(format!("`{other}` is not a delivery variable")),
            Err(e) => return Err(format!("cannot parse `{name}`: {e}")),
        }
    }
    Ok(out)
}

impl InstanceArgs {
    fn filter(&self) -> Result<DemandFilter, String> {
        if let Some(t) = &self.demand_type {
            return Ok(DemandFilter::OfType(parse_demand_type(t)?));
        }
        if let Some(d) = &self.demands {
            return Ok(DemandFilter::Explicit(parse_demand_list(d, self.n, self.k)?));
        }
        Ok(DemandFilter::All)
    }

    fn build(&self) -> Result<ProblemInstance, String> {
        let filter = self.filter()?;
        ProblemInstance::with_cap(self.n, self.k, filter, None, universe_cap())
            .map_err(|e| e.to_string())
    }
}

fn parse_rat_arg(text: &str, what: &str) -> Result<Rational, String> {
    parse_rational(text).ok_or_else(|| format!("cannot parse {what} `{text}` as a rational"))
}

fn point_json(p: &TradeoffPoint) -> serde_json::Value {
    serde_json::json!({ "m": format_rational(&p.m), "r": format_rational(&p.r) })
}

fn cmd_info(args: &InstanceArgs, output: OutputFormat) -> Result<(), Failure> {
    let n = args.n;
    let k = args.k;
    if n < 1 || k < 1 {
        return Err(Failure("need at least one file and one user".into()));
    }
    let filter = args.filter().map_err(Failure)?;
    let admitted = all_demands(n, k)
        .into_iter()
        .filter(|d| filter.admits(d, n))
        .count();
    let universe = n + k + admitted;
    let types = demand_types(n, k);
    let elementals = elemental_count(universe).map_err(|e| Failure(e.to_string()))?;
    match output {
        OutputFormat::Json => {
            let v = serde_json::json!({
                "n": n,
                "k": k,
                "demand_types": types.iter().map(|t| t.0.clone()).collect::<Vec<_>>(),
                "admitted_demands": admitted,
                "universe_size": universe,
                "elemental_count": elementals.to_string(),
            });
            println!("{}", serde_json::to_string_pretty(&v).unwrap());
        }
        OutputFormat::Csv => {
            println!("n,k,demand_types,admitted_demands,universe_size,elemental_count");
            println!("{n},{k},{},{admitted},{universe},{elementals}", types.len());
        }
        OutputFormat::Text => {
            println!("instance: N={n} files, K={k} users");
            println!("demand types ({}):", types.len());
            for t in &types {
                println!("  {t}");
            }
            println!("admitted demands: {admitted}");
            println!("universe size: {universe}");
            println!("elemental inequalities (unreduced): {elementals}");
        }
    }
    Ok(())
}

fn cmd_bound(args: &InstanceArgs, output: OutputFormat) -> Result<(), Failure> {
    let inst = args.build().map_err(Failure)?;
    let ctx = LpContext::new(&inst)?;
    let corners = corner_points(&ctx, &SolverOptions::default())?;
    let facet_list = facets(&corners);
    match output {
        OutputFormat::Json => {
            let v = serde_json::json!({
                "corners": corners.iter().map(point_json).collect::<Vec<_>>(),
                "facets": facet_list
                    .iter()
                    .map(|f| serde_json::json!({
                        "a": f.a.to_string(),
                        "b": f.b.to_string(),
                        "c": f.c.to_string(),
                        "text": f.to_string(),
                    }))
                    .collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&v).unwrap());
        }
        OutputFormat::Csv => {
            println!("m,r");
            for p in &corners {
                println!("{},{}", format_rational(&p.m), format_rational(&p.r));
            }
        }
        OutputFormat::Text => {
            println!("corners ({}):", corners.len());
            for p in &corners {
                println!("  ({}, {})", format_rational(&p.m), format_rational(&p.r));
            }
            println!("facets ({}):", facet_list.len());
            for f in &facet_list {
                println!("  {f}");
            }
        }
    }
    Ok(())
}

fn cmd_prove(
    args: &InstanceArgs,
    a: &str,
    b: &str,
    rhs: &str,
    out: Option<&str>,
) -> Result<(), Failure> {
    let inst = args.build().map_err(Failure)?;
    let ctx = LpContext::new(&inst)?;
    let a = parse_rat_arg(a, "--a").map_err(Failure)?;
    let b = parse_rat_arg(b, "--b").map_err(Failure)?;
    let rhs = parse_rat_arg(rhs, "--rhs").map_err(Failure)?;
    let table = extract(&ctx, &a, &b, &rhs, &SolverOptions::default())?;
    let text = serialize_table(&table);
    match out {
        Some(path) => fs::write(path, &text).map_err(|e| Failure(e.to_string()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_verify_proof(file: &str, args: &InstanceArgs, render: bool) -> Result<(), Failure> {
    let text = fs::read_to_string(file).map_err(|e| Failure(format!("{file}: {e}")))?;
    let inst = args.build().map_err(Failure)?;
    let table = parse_table(&text, inst.n_files(), inst.n_users())?;
    let canon = Canonicalizer::new(&inst)?;
    if render {
        print!("{}", render_text(&table, &canon)?);
    }
    let report = verify(&table, &canon)?;
    if report.ok {
        println!("ok");
        Ok(())
    } else {
        for f in &report.failures {
            eprintln!("{f}");
        }
        Err(Failure(format!("{file}: verification failed")))
    }
}

fn print_stable(report: &StableReport, output: OutputFormat) {
    match output {
        OutputFormat::Json => {
            let v = serde_json::json!({
                "corner": point_json(&report.corner),
                "min": format_rational(&report.min_value),
                "max": format_rational(&report.max_value),
                "stable": report.stable,
            });
            println!("{}", serde_json::to_string_pretty(&v).unwrap());
        }
        OutputFormat::Csv => {
            println!("min,max,stable");
            println!(
                "{},{},{}",
                format_rational(&report.min_value),
                format_rational(&report.max_value),
                report.stable
            );
        }
        OutputFormat::Text => {
            println!(
                "min {}  max {}  {}",
                format_rational(&report.min_value),
                format_rational(&report.max_value),
                if report.stable { "stable" } else { "unstable" }
            );
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_stable(
    args: &InstanceArgs,
    corner: &[String],
    target: &str,
    given: Option<&str>,
    mode: &str,
    output: OutputFormat,
) -> Result<(), Failure> {
    let inst = args.build().map_err(Failure)?;
    let ctx = LpContext::new(&inst)?;
    let m = parse_rat_arg(&corner[0], "corner M").map_err(Failure)?;
    let r = parse_rat_arg(&corner[1], "corner R").map_err(Failure)?;
    let corner = TradeoffPoint::new(m, r);
    let target_set = inst.parse_set(target)?;
    let mode = match mode {
        "lex" => StableMode::Lexicographic,
        other => match other.strip_prefix("gamma:") {
            Some(g) => StableMode::Gamma(parse_rat_arg(g, "gamma").map_err(Failure)?),
            None => return Err(Failure(format!("unknown mode `{other}`"))),
        },
    };
    let mut objective = Vec::new();
    match given {
        Some(g) => {
            let given_set = inst.parse_set(g)?;
            let joint = ctx.term_id(target_set.union(given_set));
            let cond = ctx.term_id(given_set);
            if joint != cond {
                objective.push((joint, Rational::one()));
                objective.push((cond, -Rational::one()));
            }
        }
        None => objective.push((ctx.term_id(target_set), Rational::one())),
    }
    let report = if objective.is_empty() {
        StableReport {
            corner,
            min_value: Rational::zero(),
            max_value: Rational::zero(),
            stable: true,
        }
    } else {
        stable_range_objective(&ctx, &corner, &objective, &mode, &SolverOptions::default())?
    };
    print_stable(&report, output);
    Ok(())
}

fn scheme_code(scheme: &str) -> Result<(LinearCode, ProblemInstance), Failure> {
    if let Some(spec) = scheme.strip_prefix("man:") {
        let parts: Vec<usize> = spec
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| Failure(format!("cannot parse scheme `{scheme}`")))?;
        let [n, k, t] = parts[..] else {
            return Err(Failure("man scheme needs `man:N,K,t`".into()));
        };
        let code = man_scheme(n, k, t)?;
        let inst = ProblemInstance::with_cap(n, k, DemandFilter::All, None, universe_cap())?;
        return Ok((code, inst));
    }
    let id = PaperCodeId::parse(scheme)
        .ok_or_else(|| Failure(format!("unknown scheme `{scheme}`")))?;
    let code = paper_code(id)?;
    let inst = ProblemInstance::with_cap(2, 4, id.demand_filter(), None, universe_cap())?;
    Ok((code, inst))
}

fn cmd_code(
    scheme: &str,
    which: &str,
    check_lp: bool,
    dump: bool,
    output: OutputFormat,
) -> Result<(), Failure> {
    let (code, inst) = scheme_code(scheme)?;
    if dump {
        println!("{}", code_to_json(&code));
        return Ok(());
    }
    let demands: Vec<Vec<u8>> = if which == "all" {
        all_demands(inst.n_files(), inst.n_users())
            .into_iter()
            .filter(|d| inst.demand_filter().admits(d, inst.n_files()))
            .collect()
    } else {
        parse_demand_list(which, inst.n_files(), inst.n_users()).map_err(Failure)?
    };
    let report = verify_code(&code, &demands)?;
    let point = code.code_point();
    let mut lp_violations: Option<usize> = None;
    if check_lp {
        let ctx = LpContext::new(&inst)?;
        lp_violations = Some(constraint_violations(&code, &ctx)?.len());
    }
    match output {
        OutputFormat::Json => {
            let v = serde_json::json!({
                "scheme": scheme,
                "point": point_json(&point),
                "demands_checked": demands.len(),
                "decodable": report.ok,
                "failures": report.failures,
                "lp_violations": lp_violations,
            });
            println!("{}", serde_json::to_string_pretty(&v).unwrap());
        }
        _ => {
            println!(
                "point ({}, {})  demands checked: {}  {}",
                format_rational(&point.m),
                format_rational(&point.r),
                demands.len(),
                if report.ok { "all decodable" } else { "FAILURES" }
            );
            for f in &report.failures {
                println!("  {f}");
            }
            if let Some(v) = lp_violations {
                println!("LP constraint violations: {v}");
            }
        }
    }
    let lp_ok = lp_violations.map_or(true, |v| v == 0);
    if report.ok && lp_ok {
        Ok(())
    } else {
        Err(Failure(format!("scheme `{scheme}` failed verification")))
    }
}

fn cmd_export_lp(args: &InstanceArgs, a: &str, b: &str) -> Result<(), Failure> {
    let inst = args.build().map_err(Failure)?;
    let ctx = LpContext::new(&inst)?;
    let a = parse_rat_arg(a, "--a").map_err(Failure)?;
    let b = parse_rat_arg(b, "--b").map_err(Failure)?;
    let objective = ctx.objective_mr(a, b);
    let v = ctx.export_json(&objective);
    println!("{}", serde_json::to_string_pretty(&v).unwrap());
    Ok(())
}

/// Run the CLI against the process arguments and return the exit code.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads < 1 {
        return usage_error("--threads must be at least 1");
    }
    let output = cli.output;
    let result = match &cli.command {
        Command::Info(args) => cmd_info(args, output),
        Command::Bound(args) => cmd_bound(args, output),
        Command::Prove { instance, a, b, rhs, out } => {
            cmd_prove(instance, a, b, rhs, out.as_deref())
        }
        Command::VerifyProof { file, instance, render } => {
            cmd_verify_proof(file, instance, *render)
        }
        Command::Stable { instance, corner, target, given, mode } => {
            cmd_stable(instance, corner, target, given.as_deref(), mode, output)
        }
        Command::Code { scheme, verify, check_lp, dump } => {
            cmd_code(scheme, verify, *check_lp, *dump, output)
        }
        Command::ExportLp { instance, a, b } => cmd_export_lp(instance, a, b),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
