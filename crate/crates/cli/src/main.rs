//! `qboson`: build quasiboson realizations, verify the deformed-oscillator
//! conditions, and compute entanglement measures for single- and
//! multi-quasiboson states, with closed forms cross-checked against explicit
//! Fock-space construction.
//!
//! Exit codes: 0 success, 1 failed check or convergence problem, 2 usage or
//! parameter error.

mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use output::{emit, fcell, fnum, CsvTable, Format};
use quasiboson::algebra::QuasibosonSystem;
use quasiboson::entanglement::SchmidtSpectrum;
use quasiboson::multi::{
    coherent_entropy, coherent_k, coherent_normalization, coherent_wavefunction,
    distinct_modes_measures, fock_state_measures, general_state_measures, multiplicity,
    oracle_measures_with, CoherentParams, OracleMeasures, Wavefunction, COHERENT_TAIL_TOLERANCE,
};
use quasiboson::phi::{PhiFamily, UnitarySpec};
use quasiboson::{DeformationSpec, Statistics};

#[derive(Parser)]
#[command(name = "qboson", version, about = "Quasiboson realizations and entanglement measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,

    /// Write the report to a file instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Residual tolerance for verification checks
    #[arg(long, global = true, default_value_t = 1e-10)]
    tolerance: f64,

    /// Allowed closed-form vs oracle disagreement
    #[arg(long, global = true, default_value_t = 1e-8)]
    delta_tolerance: f64,

    /// Also report entropies in bits
    #[arg(long, global = true)]
    bits: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or load) a coefficient family and verify the realization
    Verify(VerifyArgs),
    /// Single-quasiboson measures for block size m
    Single(SingleArgs),
    /// Fock-state measures for (A†)^occupation |0⟩
    Fock(FockArgs),
    /// Measures for n quasibosons in distinct modes
    Modes(ModesArgs),
    /// Coherent-state measures (bosonic constituents)
    Coherent(CoherentArgs),
    /// Measures of a wavefunction loaded from JSON
    State(StateArgs),
    /// Closed form vs explicit-construction oracle for a state family
    Oracle(OracleArgs),
    /// Sweep a parameter grid and emit one row per point
    Scan(ScanArgs),
}

fn parse_epsilon(s: &str) -> Result<i32, String> {
    match s {
        "+1" | "1" | "fermionic" => Ok(1),
        "-1" | "bosonic" => Ok(-1),
        other => Err(format!("epsilon must be +1 or -1, got `{other}`")),
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Constituent statistics: +1 fermions, -1 bosons
    #[arg(long, value_parser = parse_epsilon, allow_hyphen_values = true, default_value = "+1")]
    epsilon: i32,
    /// Block size m (deformation strength f = 2/m)
    #[arg(long)]
    m: Option<u32>,
    /// Constituent mode counts
    #[arg(long)]
    da: Option<usize>,
    #[arg(long)]
    db: Option<usize>,
    /// Number of quasiboson modes
    #[arg(long)]
    modes: Option<usize>,
    /// Seed for Haar-random unitaries (identity unitaries when omitted)
    #[arg(long)]
    seed: Option<u64>,
    /// Load the family from a JSON file instead of constructing it
    #[arg(long)]
    family: Option<PathBuf>,
    /// Total-quanta cutoffs for the verification spaces
    #[arg(long)]
    cutoff_a: Option<u32>,
    #[arg(long)]
    cutoff_b: Option<u32>,
    /// Highest total monomial degree of the verified span
    #[arg(long, default_value_t = 3)]
    degree: u32,
    /// Write the family (matrices and provenance) to a JSON file
    #[arg(long)]
    dump_family: Option<PathBuf>,
}

#[derive(Args)]
struct SingleArgs {
    #[arg(long)]
    m: u32,
    #[arg(long, value_parser = parse_epsilon, allow_hyphen_values = true, default_value = "+1")]
    epsilon: i32,
}

#[derive(Args)]
struct FockArgs {
    #[arg(long, value_parser = parse_epsilon, allow_hyphen_values = true, default_value = "+1")]
    epsilon: i32,
    #[arg(long)]
    m: u32,
    #[arg(long)]
    occupation: u32,
}

#[derive(Args)]
struct ModesArgs {
    #[arg(long)]
    m: u32,
    /// Number of occupied modes
    #[arg(long)]
    n: u32,
    #[arg(long, value_parser = parse_epsilon, allow_hyphen_values = true, default_value = "+1")]
    epsilon: i32,
}

#[derive(Args)]
struct CoherentArgs {
    #[arg(long)]
    m: u32,
    /// Coherent amplitude modulus |A|
    #[arg(long)]
    amp: f64,
    /// Also build the truncated state explicitly and report deltas
    #[arg(long)]
    with_oracle: bool,
    #[arg(long)]
    da: Option<usize>,
    #[arg(long)]
    db: Option<usize>,
}

#[derive(Args)]
struct StateArgs {
    /// Wavefunction JSON file
    #[arg(long)]
    input: PathBuf,
    /// Rescale to unit norm before measuring
    #[arg(long)]
    renormalize: bool,
    #[arg(long)]
    with_oracle: bool,
    #[arg(long)]
    da: Option<usize>,
    #[arg(long)]
    db: Option<usize>,
    #[arg(long)]
    cutoff_a: Option<u32>,
    #[arg(long)]
    cutoff_b: Option<u32>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum StateKind {
    Single,
    Fock,
    Modes,
    Coherent,
}

impl StateKind {
    fn name(self) -> &'static str {
        match self {
            StateKind::Single => "single",
            StateKind::Fock => "fock",
            StateKind::Modes => "modes",
            StateKind::Coherent => "coherent",
        }
    }
}

#[derive(Args)]
struct OracleArgs {
    /// Which state family to rebuild explicitly
    #[arg(long, value_enum)]
    kind: StateKind,
    #[arg(long, value_parser = parse_epsilon, allow_hyphen_values = true, default_value = "+1")]
    epsilon: i32,
    #[arg(long)]
    m: u32,
    #[arg(long)]
    occupation: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    amp: Option<f64>,
    #[arg(long)]
    da: Option<usize>,
    #[arg(long)]
    db: Option<usize>,
    #[arg(long)]
    cutoff_a: Option<u32>,
    #[arg(long)]
    cutoff_b: Option<u32>,
    /// Seed for the oracle's unitaries (identity when omitted)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ScanArgs {
    /// Which measures to sweep
    #[arg(long, value_enum)]
    target: StateKind,
    #[arg(long, value_parser = parse_epsilon, allow_hyphen_values = true, default_value = "+1")]
    epsilon: i32,
    #[arg(long)]
    m: Option<u32>,
    /// Inclusive integer range `start:end`
    #[arg(long)]
    m_range: Option<String>,
    #[arg(long)]
    occupation: Option<u32>,
    #[arg(long)]
    occupation_range: Option<String>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    n_range: Option<String>,
    #[arg(long)]
    amp: Option<f64>,
    /// Inclusive float range `start:end:step`
    #[arg(long)]
    amp_range: Option<String>,
}

/// An error carrying the process exit code.
struct CliError {
    code: i32,
    message: String,
}

impl From<quasiboson::Error> for CliError {
    fn from(e: quasiboson::Error) -> Self {
        let code = match e {
            quasiboson::Error::Parameter(_) | quasiboson::Error::Json(_) => 2,
            _ => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            code: 2,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: message.into(),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {}", err.message);
            err.code
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    let ctx = Context {
        format: cli.format,
        output: cli.output.clone(),
        tolerance: cli.tolerance,
        delta_tolerance: cli.delta_tolerance,
        bits: cli.bits,
    };
    match cli.command {
        Command::Verify(args) => cmd_verify(&ctx, args),
        Command::Single(args) => cmd_single(&ctx, args),
        Command::Fock(args) => cmd_fock(&ctx, args),
        Command::Modes(args) => cmd_modes(&ctx, args),
        Command::Coherent(args) => cmd_coherent(&ctx, args),
        Command::State(args) => cmd_state(&ctx, args),
        Command::Oracle(args) => cmd_oracle(&ctx, args),
        Command::Scan(args) => cmd_scan(&ctx, args),
    }
}

struct Context {
    format: Format,
    output: Option<PathBuf>,
    tolerance: f64,
    delta_tolerance: f64,
    bits: bool,
}

impl Context {
    fn emit(&self, json: &Value, csv: &CsvTable) -> Result<(), CliError> {
        emit(json, csv, self.format, self.output.as_deref())?;
        Ok(())
    }
}

fn unitary_specs(seed: Option<u64>) -> (UnitarySpec, UnitarySpec, UnitarySpec) {
    match seed {
        Some(s) => (
            UnitarySpec::Seeded(s),
            UnitarySpec::Seeded(s.wrapping_add(1)),
            UnitarySpec::Seeded(s.wrapping_add(2)),
        ),
        None => (
            UnitarySpec::Identity,
            UnitarySpec::Identity,
            UnitarySpec::Identity,
        ),
    }
}

fn entropy_fields(target: &mut serde_json::Map<String, Value>, s_nats: f64, bits: bool) {
    target.insert("entropy_nats".into(), fnum(s_nats));
    if bits {
        target.insert("entropy_bits".into(), fnum(s_nats / std::f64::consts::LN_2));
    }
}

fn cmd_verify(ctx: &Context, args: VerifyArgs) -> Result<i32, CliError> {
    let (family, seed_label) = match &args.family {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let value: Value =
                serde_json::from_str(&text).map_err(quasiboson::Error::from)?;
            (PhiFamily::from_json(&value)?, json!("file"))
        }
        None => {
            let m = args.m.ok_or_else(|| usage("--m is required without --family"))? as usize;
            let da = args.da.ok_or_else(|| usage("--da is required without --family"))?;
            let db = args.db.ok_or_else(|| usage("--db is required without --family"))?;
            let modes = args
                .modes
                .ok_or_else(|| usage("--modes is required without --family"))?;
            let (u1, u2, blocks) = unitary_specs(args.seed);
            (
                PhiFamily::build(da, db, m, modes, args.epsilon, &u1, &u2, &blocks)?,
                args.seed.map_or(json!(null), |s| json!(s)),
            )
        }
    };

    if let Some(path) = &args.dump_family {
        let mut text =
            serde_json::to_string_pretty(&family.to_json()).map_err(quasiboson::Error::from)?;
        text.push('\n');
        std::fs::write(path, text)?;
    }

    let statistics = Statistics::from_epsilon(family.epsilon())?;
    let default_cutoff = |d: usize| match statistics {
        Statistics::Fermionic => d as u32,
        Statistics::Bosonic => args.degree + 1,
    };
    let cutoff_a = args.cutoff_a.unwrap_or_else(|| default_cutoff(family.d_a()));
    let cutoff_b = args.cutoff_b.unwrap_or_else(|| default_cutoff(family.d_b()));

    let validation = family.validate_with_tolerance(ctx.tolerance);
    let validation_json = json!({
        "orthonormality_residual": fnum(validation.orthonormality_residual),
        "cross_mode_residual": fnum(validation.cross_mode_residual),
        "cubic_residual": fnum(validation.cubic_residual),
        "f_extracted": validation.f_extracted.iter().map(|&f| fnum(f)).collect::<Vec<_>>(),
        "f_target": fnum(validation.f_target),
        "f_deviation": fnum(validation.f_deviation),
        "pass": validation.pass,
        "failed_checks": validation.failed_checks,
    });

    let config = json!({
        "epsilon": family.epsilon(),
        "m": family.m(),
        "d_a": family.d_a(),
        "d_b": family.d_b(),
        "n_modes": family.n_modes(),
        "cutoff_a": cutoff_a,
        "cutoff_b": cutoff_b,
        "degree": args.degree,
        "seed": seed_label,
        "tolerance": fnum(ctx.tolerance),
    });

    let (realization_json, realization_pass, csv_extra) = if validation.pass {
        let system = QuasibosonSystem::new(family, cutoff_a, cutoff_b)?;
        let report = system.verify_with_tolerance(args.degree, ctx.tolerance)?;
        let nilpotency: Vec<Value> = report
            .nilpotency_order
            .iter()
            .map(|o| o.map_or(json!(null), |p| json!(p)))
            .collect();
        let value = json!({
            "span_dim": report.span_dim,
            "dropped_monomials": report.dropped_monomials,
            "cross_mode_residual": fnum(report.cross_mode_residual),
            "structure_residual": fnum(report.structure_residual),
            "ladder_residual": fnum(report.ladder_residual),
            "nilpotency_order": nilpotency,
            "pass": report.pass,
        });
        let extra = vec![
            fcell(report.cross_mode_residual),
            fcell(report.structure_residual),
            fcell(report.ladder_residual),
        ];
        (value, report.pass, extra)
    } else {
        (Value::Null, false, vec![String::new(); 3])
    };

    let pass = validation.pass && realization_pass;
    let report = json!({
        "command": "verify",
        "config": config,
        "family_validation": validation_json,
        "realization": realization_json,
        "pass": pass,
    });

    let mut csv = CsvTable {
        header: [
            "orthonormality_residual",
            "family_cross_mode_residual",
            "cubic_residual",
            "f_deviation",
            "span_cross_mode_residual",
            "structure_residual",
            "ladder_residual",
            "pass",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
        rows: vec![],
    };
    let mut row = vec![
        fcell(validation.orthonormality_residual),
        fcell(validation.cross_mode_residual),
        fcell(validation.cubic_residual),
        fcell(validation.f_deviation),
    ];
    row.extend(csv_extra);
    row.push(pass.to_string());
    csv.rows.push(row);

    ctx.emit(&report, &csv)?;
    Ok(if pass { 0 } else { 1 })
}

fn single_measures_json(m: u32, bits: bool) -> (Value, Vec<String>) {
    let report = SchmidtSpectrum::uniform(m as usize).report();
    let mut map = serde_json::Map::new();
    map.insert("rank".into(), json!(report.rank));
    map.insert("schmidt_number".into(), fnum(report.schmidt_number));
    map.insert("purity".into(), fnum(report.purity));
    entropy_fields(&mut map, report.entropy_nats, bits);
    map.insert("concurrence".into(), fnum(report.concurrence));
    let row = vec![
        report.rank.to_string(),
        fcell(report.schmidt_number),
        fcell(report.purity),
        fcell(report.entropy_nats),
        fcell(report.concurrence),
    ];
    (Value::Object(map), row)
}

fn cmd_single(ctx: &Context, args: SingleArgs) -> Result<i32, CliError> {
    DeformationSpec::new(args.epsilon, args.m)?;
    let (measures, row) = single_measures_json(args.m, ctx.bits);
    let report = json!({
        "command": "single",
        "config": { "epsilon": args.epsilon, "m": args.m },
        "measures": measures,
    });
    let mut header = vec!["rank", "schmidt_number", "purity", "entropy_nats", "concurrence"];
    header.insert(0, "m");
    let mut full_row = vec![args.m.to_string()];
    full_row.extend(row);
    let csv = CsvTable {
        header: header.into_iter().map(String::from).collect(),
        rows: vec![full_row],
    };
    ctx.emit(&report, &csv)?;
    Ok(0)
}

fn cmd_fock(ctx: &Context, args: FockArgs) -> Result<i32, CliError> {
    let (k, s) = fock_state_measures(args.m, args.occupation, args.epsilon)?;
    let mult = multiplicity(args.m, args.occupation, args.epsilon)?;
    let mut measures = serde_json::Map::new();
    measures.insert("multiplicity".into(), json!(mult as u64));
    measures.insert("schmidt_number".into(), fnum(k));
    entropy_fields(&mut measures, s, ctx.bits);
    let report = json!({
        "command": "fock",
        "config": { "epsilon": args.epsilon, "m": args.m, "occupation": args.occupation },
        "measures": Value::Object(measures),
    });
    let csv = CsvTable {
        header: ["epsilon", "m", "occupation", "schmidt_number", "entropy_nats"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows: vec![vec![
            args.epsilon.to_string(),
            args.m.to_string(),
            args.occupation.to_string(),
            fcell(k),
            fcell(s),
        ]],
    };
    ctx.emit(&report, &csv)?;
    Ok(0)
}

fn cmd_modes(ctx: &Context, args: ModesArgs) -> Result<i32, CliError> {
    DeformationSpec::new(args.epsilon, args.m)?;
    let (k, s) = distinct_modes_measures(args.m, args.n)?;
    let mut measures = serde_json::Map::new();
    measures.insert("schmidt_number".into(), fnum(k));
    entropy_fields(&mut measures, s, ctx.bits);
    let report = json!({
        "command": "modes",
        "config": { "epsilon": args.epsilon, "m": args.m, "n": args.n },
        "measures": Value::Object(measures),
    });
    let csv = CsvTable {
        header: ["m", "n", "schmidt_number", "entropy_nats"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows: vec![vec![
            args.m.to_string(),
            args.n.to_string(),
            fcell(k),
            fcell(s),
        ]],
    };
    ctx.emit(&report, &csv)?;
    Ok(0)
}

struct CoherentValues {
    c_tilde: f64,
    k: f64,
    s: f64,
    c_route_deviation: f64,
    k_route_deviation: f64,
    series_terms: usize,
}

fn coherent_values(m: u32, amp: f64) -> Result<CoherentValues, CliError> {
    let p = CoherentParams::new(Complex64::new(amp, 0.0), m)?;
    let norm = coherent_normalization(&p)?;
    let k = coherent_k(&p)?;
    let s = coherent_entropy(&p)?;
    Ok(CoherentValues {
        c_tilde: norm.value,
        k: k.value,
        s: s.value,
        c_route_deviation: norm.route_deviation,
        k_route_deviation: k.route_deviation,
        series_terms: norm.series_terms.max(s.series_terms),
    })
}

fn oracle_json(oracle: &OracleMeasures) -> Value {
    json!({
        "schmidt_number": fnum(oracle.schmidt_number),
        "entropy_nats": fnum(oracle.entropy_nats),
        "state_norm": fnum(oracle.state_norm),
        "spectrum_rank": oracle.spectrum.rank(),
    })
}

fn delta_json(k_closed: f64, s_closed: f64, oracle: &OracleMeasures) -> (Value, f64) {
    let dk = (oracle.schmidt_number - k_closed).abs();
    let ds = (oracle.entropy_nats - s_closed).abs();
    (
        json!({ "schmidt_number": fnum(dk), "entropy_nats": fnum(ds) }),
        dk.max(ds),
    )
}

fn cmd_coherent(ctx: &Context, args: CoherentArgs) -> Result<i32, CliError> {
    let values = coherent_values(args.m, args.amp)?;
    let mut measures = serde_json::Map::new();
    measures.insert("c_tilde".into(), fnum(values.c_tilde));
    measures.insert("schmidt_number".into(), fnum(values.k));
    entropy_fields(&mut measures, values.s, ctx.bits);

    let mut report = serde_json::Map::new();
    report.insert("command".into(), json!("coherent"));
    report.insert(
        "config".into(),
        json!({ "epsilon": -1, "m": args.m, "amp": fnum(args.amp) }),
    );
    report.insert("measures".into(), Value::Object(measures));
    report.insert(
        "provenance".into(),
        json!({
            "normalization_route_deviation": fnum(values.c_route_deviation),
            "schmidt_number_route_deviation": fnum(values.k_route_deviation),
            "series_terms": values.series_terms,
        }),
    );

    let mut exit = 0;
    if args.with_oracle {
        let p = CoherentParams::new(Complex64::new(args.amp, 0.0), args.m)?;
        let (psi, n_star) = coherent_wavefunction(&p, COHERENT_TAIL_TOLERANCE)?;
        let d_a = args.da.unwrap_or(args.m as usize);
        let d_b = args.db.unwrap_or(args.m as usize);
        let oracle = oracle_measures_with(
            &psi,
            d_a,
            d_b,
            n_star,
            n_star,
            &UnitarySpec::Identity,
            &UnitarySpec::Identity,
            &UnitarySpec::Identity,
        )?;
        let (delta, worst) = delta_json(values.k, values.s, &oracle);
        let mut oracle_value = oracle_json(&oracle);
        oracle_value
            .as_object_mut()
            .expect("object")
            .insert("truncation_level".into(), json!(n_star));
        report.insert("oracle".into(), oracle_value);
        report.insert("delta".into(), delta);
        if worst > ctx.delta_tolerance {
            exit = 1;
        }
    }

    let csv = CsvTable {
        header: ["m", "amp", "c_tilde", "schmidt_number", "entropy_nats"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows: vec![vec![
            args.m.to_string(),
            fcell(args.amp),
            fcell(values.c_tilde),
            fcell(values.k),
            fcell(values.s),
        ]],
    };
    ctx.emit(&Value::Object(report), &csv)?;
    Ok(exit)
}

fn cmd_state(ctx: &Context, args: StateArgs) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&args.input)?;
    let value: Value = serde_json::from_str(&text).map_err(quasiboson::Error::from)?;
    let mut psi = Wavefunction::from_json(&value)?;
    if args.renormalize {
        psi = psi.renormalized()?;
    }
    let (k, s) = general_state_measures(&psi)?;

    let spec = psi.spec();
    let mut measures = serde_json::Map::new();
    measures.insert("schmidt_number".into(), fnum(k));
    entropy_fields(&mut measures, s, ctx.bits);

    let mut report = serde_json::Map::new();
    report.insert("command".into(), json!("state"));
    report.insert(
        "config".into(),
        json!({
            "epsilon": spec.epsilon,
            "m": spec.m,
            "modes": psi.modes(),
            "configurations": psi.amplitudes().len(),
            "norm_residual": fnum(psi.norm_residual()),
            "renormalized": args.renormalize,
        }),
    );
    report.insert("measures".into(), Value::Object(measures));

    let mut exit = 0;
    if args.with_oracle {
        let d_default = psi.modes().len() * spec.m as usize;
        let d_a = args.da.unwrap_or(d_default);
        let d_b = args.db.unwrap_or(d_default);
        let needed = psi.max_total_quanta();
        let cutoff_a = args.cutoff_a.unwrap_or(needed);
        let cutoff_b = args.cutoff_b.unwrap_or(needed);
        let oracle = oracle_measures_with(
            &psi,
            d_a,
            d_b,
            cutoff_a,
            cutoff_b,
            &UnitarySpec::Identity,
            &UnitarySpec::Identity,
            &UnitarySpec::Identity,
        )?;
        let (delta, worst) = delta_json(k, s, &oracle);
        report.insert("oracle".into(), oracle_json(&oracle));
        report.insert("delta".into(), delta);
        if worst > ctx.delta_tolerance {
            exit = 1;
        }
    }

    let csv = CsvTable {
        header: ["epsilon", "m", "schmidt_number", "entropy_nats"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows: vec![vec![
            spec.epsilon.to_string(),
            spec.m.to_string(),
            fcell(k),
            fcell(s),
        ]],
    };
    ctx.emit(&Value::Object(report), &csv)?;
    Ok(exit)
}

fn cmd_oracle(ctx: &Context, args: OracleArgs) -> Result<i32, CliError> {
    let spec = DeformationSpec::new(args.epsilon, args.m)?;
    let (psi, k_closed, s_closed, config) = match args.kind {
        StateKind::Single => {
            let psi = Wavefunction::fock(spec, 1)?;
            let report = SchmidtSpectrum::uniform(args.m as usize).report();
            (
                psi,
                report.schmidt_number,
                report.entropy_nats,
                json!({ "epsilon": args.epsilon, "m": args.m }),
            )
        }
        StateKind::Fock => {
            let occupation = args
                .occupation
                .ok_or_else(|| usage("--occupation is required for --kind fock"))?;
            let psi = Wavefunction::fock(spec, occupation)?;
            let (k, s) = fock_state_measures(args.m, occupation, args.epsilon)?;
            (
                psi,
                k,
                s,
                json!({ "epsilon": args.epsilon, "m": args.m, "occupation": occupation }),
            )
        }
        StateKind::Modes => {
            let n = args.n.ok_or_else(|| usage("--n is required for --kind modes"))?;
            let psi = Wavefunction::distinct_modes(spec, n)?;
            let (k, s) = distinct_modes_measures(args.m, n)?;
            (
                psi,
                k,
                s,
                json!({ "epsilon": args.epsilon, "m": args.m, "n": n }),
            )
        }
        StateKind::Coherent => {
            let amp = args.amp.ok_or_else(|| usage("--amp is required for --kind coherent"))?;
            if args.epsilon != -1 {
                return Err(usage("coherent states require --epsilon -1"));
            }
            let p = CoherentParams::new(Complex64::new(amp, 0.0), args.m)?;
            let (psi, _) = coherent_wavefunction(&p, COHERENT_TAIL_TOLERANCE)?;
            let values = coherent_values(args.m, amp)?;
            (
                psi,
                values.k,
                values.s,
                json!({ "epsilon": -1, "m": args.m, "amp": fnum(amp) }),
            )
        }
    };

    let d_default = psi.modes().len() * args.m as usize;
    let d_a = args.da.unwrap_or(d_default);
    let d_b = args.db.unwrap_or(d_default);
    let needed = psi.max_total_quanta();
    let cutoff_a = args.cutoff_a.unwrap_or(needed);
    let cutoff_b = args.cutoff_b.unwrap_or(needed);
    let (u1, u2, blocks) = unitary_specs(args.seed);
    let oracle = oracle_measures_with(&psi, d_a, d_b, cutoff_a, cutoff_b, &u1, &u2, &blocks)?;
    let (delta, worst) = delta_json(k_closed, s_closed, &oracle);

    let report = json!({
        "command": "oracle",
        "kind": args.kind.name(),
        "config": config,
        "closed_form": {
            "schmidt_number": fnum(k_closed),
            "entropy_nats": fnum(s_closed),
        },
        "oracle": oracle_json(&oracle),
        "delta": delta,
        "delta_tolerance": fnum(ctx.delta_tolerance),
        "pass": worst <= ctx.delta_tolerance,
    });
    let csv = CsvTable {
        header: [
            "kind",
            "closed_schmidt_number",
            "oracle_schmidt_number",
            "closed_entropy_nats",
            "oracle_entropy_nats",
            "max_delta",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
        rows: vec![vec![
            args.kind.name().to_string(),
            fcell(k_closed),
            fcell(oracle.schmidt_number),
            fcell(s_closed),
            fcell(oracle.entropy_nats),
            fcell(worst),
        ]],
    };
    ctx.emit(&report, &csv)?;
    Ok(if worst <= ctx.delta_tolerance { 0 } else { 1 })
}

fn parse_int_range(text: &str) -> Result<Vec<u32>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 {
        return Err(usage(format!("integer range must be `start:end`, got `{text}`")));
    }
    let start: u32 = parts[0].parse().map_err(|_| usage("bad range start"))?;
    let end: u32 = parts[1].parse().map_err(|_| usage("bad range end"))?;
    Ok((start..=end).collect())
}

fn parse_float_range(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(usage(format!("float range must be `start:end:step`, got `{text}`")));
    }
    let start: f64 = parts[0].parse().map_err(|_| usage("bad range start"))?;
    let end: f64 = parts[1].parse().map_err(|_| usage("bad range end"))?;
    let step: f64 = parts[2].parse().map_err(|_| usage("bad range step"))?;
    if step <= 0.0 {
        return Err(usage("range step must be positive"));
    }
    let mut values = Vec::new();
    let mut i = 0u32;
    loop {
        let v = start + f64::from(i) * step;
        if v > end + 1e-9 * step.max(1.0) {
            break;
        }
        values.push(v);
        i += 1;
    }
    Ok(values)
}

fn int_axis(fixed: Option<u32>, range: &Option<String>, default: u32) -> Result<Vec<u32>, CliError> {
    match (fixed, range) {
        (_, Some(text)) => parse_int_range(text),
        (Some(v), None) => Ok(vec![v]),
        (None, None) => Ok(vec![default]),
    }
}

fn cmd_scan(ctx: &Context, args: ScanArgs) -> Result<i32, CliError> {
    let ms = int_axis(args.m, &args.m_range, 2)?;
    let mut header: Vec<String>;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut json_rows: Vec<Value> = Vec::new();
    let mut any_error = false;

    match args.target {
        StateKind::Single => {
            header = vec![
                "m".into(),
                "rank".into(),
                "schmidt_number".into(),
                "purity".into(),
                "entropy_nats".into(),
                "concurrence".into(),
            ];
            for &m in &ms {
                let report = SchmidtSpectrum::uniform(m as usize).report();
                rows.push(vec![
                    m.to_string(),
                    report.rank.to_string(),
                    fcell(report.schmidt_number),
                    fcell(report.purity),
                    fcell(report.entropy_nats),
                    fcell(report.concurrence),
                    String::new(),
                ]);
                json_rows.push(json!({
                    "m": m,
                    "rank": report.rank,
                    "schmidt_number": fnum(report.schmidt_number),
                    "purity": fnum(report.purity),
                    "entropy_nats": fnum(report.entropy_nats),
                    "concurrence": fnum(report.concurrence),
                }));
            }
        }
        StateKind::Fock => {
            header = vec![
                "epsilon".into(),
                "m".into(),
                "occupation".into(),
                "schmidt_number".into(),
                "entropy_nats".into(),
            ];
            let occupations = int_axis(args.occupation, &args.occupation_range, 1)?;
            for &m in &ms {
                for &occ in &occupations {
                    match fock_state_measures(m, occ, args.epsilon) {
                        Ok((k, s)) => {
                            rows.push(vec![
                                args.epsilon.to_string(),
                                m.to_string(),
                                occ.to_string(),
                                fcell(k),
                                fcell(s),
                                String::new(),
                            ]);
                            json_rows.push(json!({
                                "epsilon": args.epsilon,
                                "m": m,
                                "occupation": occ,
                                "schmidt_number": fnum(k),
                                "entropy_nats": fnum(s),
                            }));
                        }
                        Err(e) => {
                            any_error = true;
                            rows.push(vec![
                                args.epsilon.to_string(),
                                m.to_string(),
                                occ.to_string(),
                                String::new(),
                                String::new(),
                                e.to_string().replace(',', ";"),
                            ]);
                            json_rows.push(json!({
                                "epsilon": args.epsilon,
                                "m": m,
                                "occupation": occ,
                                "error": e.to_string(),
                            }));
                        }
                    }
                }
            }
        }
        StateKind::Modes => {
            header = vec![
                "m".into(),
                "n".into(),
                "schmidt_number".into(),
                "entropy_nats".into(),
            ];
            let counts = int_axis(args.n, &args.n_range, 1)?;
            for &m in &ms {
                for &n in &counts {
                    match distinct_modes_measures(m, n) {
                        Ok((k, s)) => {
                            rows.push(vec![
                                m.to_string(),
                                n.to_string(),
                                fcell(k),
                                fcell(s),
                                String::new(),
                            ]);
                            json_rows.push(json!({
                                "m": m,
                                "n": n,
                                "schmidt_number": fnum(k),
                                "entropy_nats": fnum(s),
                            }));
                        }
                        Err(e) => {
                            any_error = true;
                            rows.push(vec![
                                m.to_string(),
                                n.to_string(),
                                String::new(),
                                String::new(),
                                e.to_string().replace(',', ";"),
                            ]);
                            json_rows.push(json!({ "m": m, "n": n, "error": e.to_string() }));
                        }
                    }
                }
            }
        }
        StateKind::Coherent => {
            header = vec![
                "m".into(),
                "amp".into(),
                "c_tilde".into(),
                "schmidt_number".into(),
                "entropy_nats".into(),
            ];
            let amps = match (&args.amp_range, args.amp) {
                (Some(text), _) => parse_float_range(text)?,
                (None, Some(a)) => vec![a],
                (None, None) => return Err(usage("coherent scans need --amp or --amp-range")),
            };
            for &m in &ms {
                for &amp in &amps {
                    match coherent_values(m, amp) {
                        Ok(v) => {
                            rows.push(vec![
                                m.to_string(),
                                fcell(amp),
                                fcell(v.c_tilde),
                                fcell(v.k),
                                fcell(v.s),
                                String::new(),
                            ]);
                            json_rows.push(json!({
                                "m": m,
                                "amp": fnum(amp),
                                "c_tilde": fnum(v.c_tilde),
                                "schmidt_number": fnum(v.k),
                                "entropy_nats": fnum(v.s),
                            }));
                        }
                        Err(e) => {
                            any_error = true;
                            rows.push(vec![
                                m.to_string(),
                                fcell(amp),
                                String::new(),
                                String::new(),
                                String::new(),
                                e.message.replace(',', ";"),
                            ]);
                            json_rows.push(json!({
                                "m": m,
                                "amp": fnum(amp),
                                "error": e.message,
                            }));
                        }
                    }
                }
            }
        }
    }
    header.push("error".into());

    let report = json!({
        "command": "scan",
        "target": args.target.name(),
        "rows": json_rows,
    });
    let csv = CsvTable { header, rows };
    ctx.emit(&report, &csv)?;
    Ok(if any_error { 1 } else { 0 })
}
