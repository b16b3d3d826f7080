//! Command-line front end. Every report is wrapped in an envelope carrying
//! the schema version and an echo of the run configuration.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::adjointfields::{compare_with_golden_sl3, emit_tables, render_tables_text, GeneratorId};
use crate::error::Error;
use crate::flows::{
    apply_word, char_poly, spectral_radius, AutomorphismWord, ComplexMatrix,
};
use crate::kernelgrowth::{
    brute_force_records, chain_kernel_dims, growth_csv, growth_table, jet_inequality, weight_kernel_dim,
    LinearDerivation,
};
use crate::liegen::{
    build_seeds, catalog, closure, closure_report, verify_identity, Budget, ClosureConfig, CoeffRing, LieContext,
    IDENTITY_IDS,
};
use crate::linalg::RankPolicy;

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_PRECONDITION: i32 = 4;
pub const EXIT_VERIFY: i32 = 5;

/// Largest tolerated `π` drift for fibre-preserving words.
pub const FIBRE_DRIFT_TOL: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(name = "specball", version, about = "Adjoint vector fields, bracket generation, kernel growth and spectral-ball flows")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct GlobalOpts {
    /// Matrix size.
    #[arg(long, global = true, default_value_t = 2)]
    n: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Wall-clock budget for the bracket closure.
    #[arg(long = "budget-ms", global = true)]
    budget_ms: Option<u64>,
    /// Number of random primes for modular rank certificates.
    #[arg(long, global = true, default_value_t = 3)]
    primes: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Text,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum RingArg {
    Sl,
    Gl,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "lowercase", tag = "subcommand")]
enum Command {
    /// Generator fields and their action on linear monomials.
    Tables,
    /// Check the bracket identities used in the generation argument.
    Verify {
        /// Run the whole catalog (default when no --id is given).
        #[arg(long)]
        all: bool,
        /// Identity selector; repeatable.
        #[arg(long = "id")]
        ids: Vec<String>,
        /// Number of random cross-term instances.
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
    /// Bracket closure of the seed fields, degree by degree.
    Generate {
        #[arg(long = "max-degree", default_value_t = 3)]
        max_degree: u32,
        #[arg(long, value_enum, default_value_t = RingArg::Sl)]
        ring: RingArg,
        /// Missing basis fields listed per incomplete degree.
        #[arg(long, default_value_t = 5)]
        witnesses: usize,
    },
    /// Kernel dimensions of a generator on homogeneous slices, weight count against brute force.
    Kernels {
        /// Generator label such as theta12 or xi1.
        #[arg(long, default_value = "xi1")]
        field: String,
        /// Inclusive degree range `a..b` or a single degree.
        #[arg(long, default_value = "0..6")]
        m: String,
    },
    /// Kernel growth tables.
    Growth {
        /// The chain derivation x∂w + y∂x on three variables.
        #[arg(long, conflicts_with = "field")]
        chain: bool,
        #[arg(long)]
        field: Option<String>,
        #[arg(long, default_value = "1..12")]
        m: String,
    },
    /// Dimension inequality for jets of flow compositions.
    Jets {
        #[arg(long, default_value_t = 5)]
        k: u64,
        #[arg(long, default_value = "0..10")]
        m: String,
    },
    /// Apply an automorphism word to a matrix and record the trajectory.
    Orbit {
        /// JSON list of atoms.
        #[arg(long)]
        word: PathBuf,
        /// JSON matrix (rows of `[re, im]` pairs).
        #[arg(long)]
        matrix: PathBuf,
        /// Compare characteristic polynomials of input and output.
        #[arg(long = "fibre-check")]
        fibre_check: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Tables => "tables",
            Command::Verify { .. } => "verify",
            Command::Generate { .. } => "generate",
            Command::Kernels { .. } => "kernels",
            Command::Growth { .. } => "growth",
            Command::Jets { .. } => "jets",
            Command::Orbit { .. } => "orbit",
        }
    }
}

/// What a subcommand produced.
struct Outcome {
    code: i32,
    status: &'static str,
    result: Value,
    text: Option<String>,
    csv: Option<String>,
}

impl Outcome {
    fn new(code: i32, result: Value) -> Self {
        let status = match code {
            EXIT_OK => "ok",
            EXIT_RESOURCE => "incomplete",
            EXIT_PRECONDITION => "precondition_failed",
            EXIT_VERIFY => "verification_failed",
            _ => "error",
        };
        Self { code, status, result, text: None, csv: None }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Precondition(_) => EXIT_PRECONDITION,
        Error::Resource(_) => EXIT_RESOURCE,
        Error::Numeric(_) => EXIT_VERIFY,
        Error::DimensionMismatch { .. }
        | Error::Parse { .. }
        | Error::VarOutOfRange { .. }
        | Error::InvalidGenerator(_)
        | Error::Grading(_) => EXIT_USAGE,
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match dispatch(&cli) {
        Ok(o) => o,
        Err(e) => {
            let code = exit_code_for(&e);
            let mut o = Outcome::new(code, json!({ "error": e.to_string() }));
            o.text = Some(format!("error: {e}\n"));
            o
        }
    };
    match emit(&cli, &outcome) {
        Ok(()) => outcome.code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn envelope(cli: &Cli, o: &Outcome) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": cli.command.name(),
        "config": { "global": &cli.global, "command": &cli.command },
        "status": o.status,
        "exit_code": o.code,
        "result": o.result,
    })
}

fn emit(cli: &Cli, o: &Outcome) -> std::io::Result<()> {
    let body = match cli.global.format {
        Format::Json => serde_json::to_string_pretty(&envelope(cli, o)).expect("json") + "\n",
        Format::Text => {
            let head = format!(
                "# schema_version={} command={} status={} n={} seed={}\n",
                SCHEMA_VERSION,
                cli.command.name(),
                o.status,
                cli.global.n,
                cli.global.seed
            );
            head + o.text.as_deref().unwrap_or(&(serde_json::to_string_pretty(&o.result).expect("json") + "\n"))
        }
        Format::Csv => match &o.csv {
            Some(csv) => format!("# schema_version={} command={} status={}\n{csv}", SCHEMA_VERSION, cli.command.name(), o.status),
            None => serde_json::to_string_pretty(&envelope(cli, o)).expect("json") + "\n",
        },
    };
    match &cli.global.out {
        Some(path) => write_atomically(path, &body),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            out.flush()
        }
    }
}

fn write_atomically(path: &Path, body: &str) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, body)?;
    std::fs::rename(&tmp, path)
}

fn dispatch(cli: &Cli) -> crate::Result<Outcome> {
    let g = &cli.global;
    if g.n < 2 {
        return Err(Error::Precondition(format!("n must be at least 2, got {}", g.n)));
    }
    match &cli.command {
        Command::Tables => cmd_tables(g.n),
        Command::Verify { all, ids, samples } => cmd_verify(g, *all, ids, *samples),
        Command::Generate { max_degree, ring, witnesses } => cmd_generate(g, *max_degree, *ring, *witnesses),
        Command::Kernels { field, m } => cmd_kernels(g, field, m),
        Command::Growth { chain, field, m } => cmd_growth(g, *chain, field.as_deref(), m),
        Command::Jets { k, m } => cmd_jets(g, *k, m),
        Command::Orbit { word, matrix, fibre_check } => cmd_orbit(word, matrix, *fibre_check),
    }
}

fn policy(g: &GlobalOpts) -> RankPolicy {
    let mut rng = crate::flows::rng_from_seed(g.seed);
    RankPolicy::with_random_primes(400, g.primes, &mut rng)
}

/// Parses `a..b` (inclusive) or a single number.
fn parse_range(s: &str) -> crate::Result<(u32, u32)> {
    let bad = |msg: &str| Error::Parse { pos: 0, msg: format!("range '{s}': {msg}") };
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => {
            let b = b.strip_prefix('=').unwrap_or(b);
            (a.trim().parse().map_err(|_| bad("bad lower bound"))?, b.trim().parse().map_err(|_| bad("bad upper bound"))?)
        }
        None => {
            let v = s.trim().parse().map_err(|_| bad("not a number"))?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(bad("empty range"));
    }
    Ok((lo, hi))
}

fn cmd_tables(n: usize) -> crate::Result<Outcome> {
    let report = emit_tables(n)?;
    let text = render_tables_text(&report)?;
    let golden = if n == 3 { Some(compare_with_golden_sl3()?) } else { None };
    let code = match &golden {
        Some(g) if !g.passed() => EXIT_VERIFY,
        _ => EXIT_OK,
    };
    let mut o = Outcome::new(
        code,
        json!({ "generators": report.fields.len(), "tables": report, "golden": golden }),
    );
    let mut t = text;
    if let Some(g) = &golden {
        t.push_str(&format!(
            "\ngolden: fields {} / 8, action entries {} / 72, mismatches {}\n",
            g.fields_checked,
            g.action_entries_checked,
            g.mismatches.len()
        ));
    }
    o.text = Some(t);
    Ok(o)
}

fn cmd_verify(g: &GlobalOpts, all: bool, ids: &[String], samples: usize) -> crate::Result<Outcome> {
    for id in ids {
        if !IDENTITY_IDS.contains(&id.as_str()) {
            return Err(Error::Parse { pos: 0, msg: format!("unknown identity '{id}'; known: {}", IDENTITY_IDS.join(", ")) });
        }
    }
    let select_all = all || ids.is_empty();
    let reports = catalog(g.n, samples, g.seed)
        .iter()
        .filter(|id| select_all || ids.contains(&id.id()))
        .map(|id| verify_identity(id, g.n))
        .collect::<crate::Result<Vec<_>>>()?;
    let passed = reports.iter().filter(|r| r.passed).count();
    let code = if passed == reports.len() { EXIT_OK } else { EXIT_VERIFY };
    let mut text = String::new();
    for r in &reports {
        text.push_str(&format!(
            "{} [{}] {}{}\n",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            match (&r.passed, &r.lhs_over_rhs) {
                (false, Some(q)) => format!("  (lhs = {q} * rhs)"),
                _ => String::new(),
            }
        ));
    }
    text.push_str(&format!("{passed} / {} identities hold\n", reports.len()));
    let mut o = Outcome::new(code, json!({ "passed": passed, "total": reports.len(), "identities": reports }));
    o.text = Some(text);
    Ok(o)
}

fn cmd_generate(g: &GlobalOpts, max_degree: u32, ring: RingArg, witnesses: usize) -> crate::Result<Outcome> {
    let ring = match ring {
        RingArg::Sl => CoeffRing::Sl,
        RingArg::Gl => CoeffRing::Gl,
    };
    let ctx = LieContext::new(g.n, ring)?;
    let seeds = build_seeds(&ctx);
    let mut config = ClosureConfig::new(max_degree);
    if let Some(ms) = g.budget_ms {
        config.budget = Budget::with_millis(ms);
    }
    let start = std::time::Instant::now();
    let result = closure(&ctx, &seeds, &config)?;
    let elapsed = start.elapsed().as_secs_f64();
    let degrees = closure_report(&ctx, &result, witnesses)?;
    let all_full = degrees.iter().all(|d| d.full) && degrees.len() == max_degree as usize + 1;
    let code = if !result.complete {
        EXIT_RESOURCE
    } else if all_full {
        EXIT_OK
    } else {
        EXIT_VERIFY
    };
    let mut text = String::new();
    for d in &degrees {
        text.push_str(&format!(
            "d={} rank {}/{} ({:?}){}\n",
            d.degree,
            d.achieved_rank,
            d.target_rank,
            d.method,
            if d.full { "" } else { " INCOMPLETE" }
        ));
        for w in &d.missing_witnesses {
            text.push_str(&format!("    missing: {} * {}\n", w.coefficient, w.generator));
        }
    }
    if !result.complete {
        text.push_str("budget exhausted: partial report\n");
    }
    let mut o = Outcome::new(
        code,
        json!({
            "complete": result.complete,
            "partial": !result.complete,
            "seeds": seeds.seeds.len(),
            "brackets_evaluated": result.brackets_evaluated,
            "elapsed_s": elapsed,
            "degrees": degrees,
        }),
    );
    o.text = Some(text);
    Ok(o)
}

fn derivation_for(label: &str, n: usize) -> crate::Result<(GeneratorId, LinearDerivation)> {
    let gen = GeneratorId::parse(label, n)?;
    Ok((gen, LinearDerivation::from_field(&gen.field(n)?)?))
}

#[derive(Serialize)]
struct KernelRow {
    m: u32,
    slice_dim: usize,
    dim_ker: usize,
    dim_ker_sq: usize,
    weight_count: Option<u128>,
    agree: Option<bool>,
    method: String,
}

fn cmd_kernels(g: &GlobalOpts, field: &str, m: &str) -> crate::Result<Outcome> {
    let (lo, hi) = parse_range(m)?;
    let (gen, d) = derivation_for(field, g.n)?;
    let records = brute_force_records(&d, hi, &policy(g))?;
    let ws = d.weights();
    let rows: Vec<KernelRow> = records
        .into_iter()
        .filter(|r| r.m >= lo)
        .map(|r| {
            let wc = ws.as_ref().map(|w| weight_kernel_dim(w, r.m));
            KernelRow {
                m: r.m,
                slice_dim: r.slice_dim,
                dim_ker: r.dim_ker,
                dim_ker_sq: r.dim_ker_sq,
                weight_count: wc,
                agree: wc.map(|c| c == r.dim_ker as u128),
                method: r.method.to_string(),
            }
        })
        .collect();
    let ok = rows.iter().all(|r| r.agree != Some(false));
    let mut csv = String::from("n,field,m,slice_dim,dim_ker,dim_ker_sq,weight_count,agree,method\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            g.n,
            gen.label(g.n),
            r.m,
            r.slice_dim,
            r.dim_ker,
            r.dim_ker_sq,
            r.weight_count.map(|c| c.to_string()).unwrap_or_default(),
            r.agree.map(|a| a.to_string()).unwrap_or_default(),
            r.method
        ));
    }
    let mut o = Outcome::new(
        if ok { EXIT_OK } else { EXIT_VERIFY },
        json!({ "field": gen.label(g.n), "diagonal": ws.is_some(), "rows": rows }),
    );
    o.text = Some(csv.clone());
    o.csv = Some(csv);
    Ok(o)
}

fn cmd_growth(g: &GlobalOpts, chain: bool, field: Option<&str>, m: &str) -> crate::Result<Outcome> {
    let (lo, hi) = parse_range(m)?;
    let policy = policy(g);
    if chain || field.is_none() {
        let records: Vec<_> = chain_kernel_dims(hi.max(1), &policy)?.into_iter().filter(|r| r.m >= lo).collect();
        let within: Vec<bool> = records.iter().map(|r| r.dim_ker <= 3 * r.m as usize).collect();
        let ok = within.iter().all(|&b| b);
        let mut csv = String::from("field,m,slice_dim,dim_ker,dim_ker_sq,bound_3m,within_bound,method\n");
        for (r, w) in records.iter().zip(&within) {
            csv.push_str(&format!(
                "chain,{},{},{},{},{},{},{}\n",
                r.m,
                r.slice_dim,
                r.dim_ker,
                r.dim_ker_sq,
                3 * r.m,
                w,
                r.method
            ));
        }
        let mut o = Outcome::new(
            if ok { EXIT_OK } else { EXIT_VERIFY },
            json!({ "field": "chain", "bound": "3m", "all_within_bound": ok, "records": records }),
        );
        o.text = Some(csv.clone());
        o.csv = Some(csv);
        return Ok(o);
    }
    let (gen, d) = derivation_for(field.expect("checked"), g.n)?;
    let mut table = growth_table(&gen.label(g.n), &d, hi, &policy)?;
    table.records.retain(|r| r.m >= lo);
    let csv = growth_csv(g.n, &table);
    let mut o = Outcome::new(EXIT_OK, json!({ "table": table }));
    o.text = Some(csv.clone());
    o.csv = Some(csv);
    Ok(o)
}

fn cmd_jets(g: &GlobalOpts, k: u64, m: &str) -> crate::Result<Outcome> {
    let (lo, hi) = parse_range(m)?;
    let mut table = jet_inequality(g.n, k, hi, &policy(g))?;
    table.rows.retain(|r| r.m >= lo);
    let mut csv = String::from("n,k,m,lhs,rhs,ker_theta12_sq,ker_xi1_sq,holds\n");
    for r in &table.rows {
        csv.push_str(&format!("{},{},{},{},{},{},{},{}\n", g.n, k, r.m, r.lhs, r.rhs, r.ker_theta_sq, r.ker_xi_sq, r.holds));
    }
    let threshold = table.threshold;
    let text = format!(
        "{csv}threshold m0 = {}\n",
        threshold.map(|t| t.to_string()).unwrap_or_else(|| "none in window".into())
    );
    let mut o = Outcome::new(if threshold.is_some() { EXIT_OK } else { EXIT_VERIFY }, json!({ "table": table }));
    o.text = Some(text);
    o.csv = Some(csv);
    Ok(o)
}

fn read_file(p: &Path) -> crate::Result<String> {
    std::fs::read_to_string(p).map_err(|e| Error::Parse { pos: 0, msg: format!("cannot read {}: {e}", p.display()) })
}

fn cmd_orbit(word: &Path, matrix: &Path, fibre_check: bool) -> crate::Result<Outcome> {
    let a = ComplexMatrix::from_json(&read_file(matrix)?)?;
    let w = AutomorphismWord::from_json(&read_file(word)?, a.n())?;
    let rho0 = spectral_radius(&a)?;
    if rho0 >= 1.0 {
        return Err(Error::Precondition(format!("input matrix is not in spectral ball (rho = {rho0})")));
    }
    let mut traj = vec![a.clone()];
    let mut radii = vec![rho0];
    let mut cur = a.clone();
    for atom in &w.atoms {
        cur = atom.apply(&cur)?;
        radii.push(spectral_radius(&cur)?);
        traj.push(cur.clone());
    }
    let final_out = apply_word(&w, &a)?;
    let stays_in_ball = radii.iter().all(|&r| r < 1.0);
    let drift = if fibre_check && w.is_fibre_preserving() {
        Some(char_poly(&final_out).max_distance(&char_poly(&a))?)
    } else {
        None
    };
    let fibre_ok = drift.is_none_or(|d| d < FIBRE_DRIFT_TOL);
    let code = if stays_in_ball && fibre_ok { EXIT_OK } else { EXIT_VERIFY };
    let mut text = String::new();
    for (i, (m, r)) in traj.iter().zip(&radii).enumerate() {
        text.push_str(&format!("step {i}: rho = {r:.12} matrix = {}\n", m.to_json()));
    }
    if fibre_check {
        text.push_str(&match drift {
            Some(d) => format!("fibre drift = {d:e}\n"),
            None => "fibre check skipped: word contains Moebius atoms\n".into(),
        });
    }
    let mut o = Outcome::new(
        code,
        json!({
            "atoms": w.atoms.len(),
            "input": a.to_json_value(),
            "output": final_out.to_json_value(),
            "trajectory": traj.iter().map(|m| m.to_json_value()).collect::<Vec<_>>(),
            "spectral_radii": radii,
            "stays_in_ball": stays_in_ball,
            "fibre_check": fibre_check,
            "fibre_preserving_word": w.is_fibre_preserving(),
            "fibre_drift": drift,
            "fibre_drift_tolerance": FIBRE_DRIFT_TOL,
        }),
    );
    o.text = Some(text);
    Ok(o)
}
