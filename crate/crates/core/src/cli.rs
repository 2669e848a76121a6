//! Command-line front end. Results are JSON on stdout, diagnostics on stderr.
//!
//! Exit codes: 0 on success, 2 on usage errors and unreadable inputs, 1 when a
//! solver or protocol step fails.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::blockenc::encode_polynomial;
use crate::compiled::{
    acceptance_rate, adversary_battery, chsh_strategy, exact_value, magic_square_strategy, message_width, run_sessions,
    BlackBoxProver, CircuitProver, EchoProver, GarbageProver, GuessingProver, IgnoringProver, KeyStealer, ProverFactory,
    SampledProver, WhiteBox,
};
use crate::error::{Error, Result};
use crate::games::{self, check_nonsignaling, Game};
use crate::numerics::random;
use crate::qhe::{self, BackendKind, QheBackend};
use crate::sequential::{
    block_reduce, chsh_selftest_residual, convert_purify, correlation_of, monomials, strong_nonsig_residual, NCPolynomial,
    SequentialQuantumStrategy,
};
use crate::values::{classical_value, nonsignaling_value, npa_upper_bound, seesaw_lower_bound, QuantumStrategy};

#[derive(Debug, Parser)]
#[command(name = "nonlocal", version, about = "Nonlocal games, compiled protocols and sequential strategies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Value of a game.
    Value(ValueArgs),
    /// Compiled single-prover protocol.
    #[command(subcommand)]
    Compile(CompileCommand),
    /// Sequential strategies.
    #[command(subcommand)]
    Seq(SeqCommand),
    /// Self-test residuals.
    #[command(subcommand)]
    Selftest(SelftestCommand),
    /// Block encodings.
    #[command(subcommand)]
    Blockenc(BlockencCommand),
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum ValueKind {
    Classical,
    Ns,
    Q,
    Qc,
}

#[derive(Debug, Serialize, Args)]
struct ValueArgs {
    /// Game JSON file or catalog name.
    game: String,
    #[arg(long, value_enum)]
    kind: ValueKind,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=3))]
    npa_level: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=16))]
    dim: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 300)]
    iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum CompileCommand {
    /// Run the protocol against one prover.
    Run(CompileRunArgs),
    /// Exact values of the adversary battery.
    Battery(BatteryArgs),
}

#[derive(Debug, Serialize, Args)]
struct CompileRunArgs {
    game: String,
    /// honest, black-box, echo, garbage, guess, key-stealer or constant-<a>.
    #[arg(long)]
    prover: String,
    #[arg(long, value_enum, default_value_t = BackendArg::Ideal)]
    backend: BackendArg,
    #[arg(long, default_value_t = 8)]
    lambda: usize,
    #[arg(long, conflicts_with = "exact", required_unless_present = "exact")]
    trials: Option<usize>,
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    insecure: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Write one JSON line per session here.
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Serialize, Args)]
struct BatteryArgs {
    game: String,
    #[arg(long, value_enum, default_value_t = BackendArg::Ideal)]
    backend: BackendArg,
    #[arg(long, default_value_t = 8)]
    lambda: usize,
    #[arg(long)]
    insecure: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=3))]
    npa_level: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum BackendArg {
    Ideal,
    Clifford,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Ideal => BackendKind::Ideal,
            BackendArg::Clifford => BackendKind::Clifford,
        }
    }
}

#[derive(Debug, Subcommand)]
enum SeqCommand {
    /// Strong non-signaling residual up to a monomial degree.
    Check(SeqCheckArgs),
    /// Convert to a tensor-product strategy.
    Convert(SeqConvertArgs),
}

#[derive(Debug, Serialize, Args)]
struct SeqCheckArgs {
    strategy: PathBuf,
    #[arg(long, default_value_t = 2)]
    degree: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
enum ConvertMethod {
    Purify,
    BlockPurify,
}

#[derive(Debug, Serialize, Args)]
struct SeqConvertArgs {
    strategy: PathBuf,
    #[arg(long, value_enum, default_value_t = ConvertMethod::Purify)]
    method: ConvertMethod,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Write the tensor strategy here.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum SelftestCommand {
    /// `max_x tr(sigma_x {B_0, B_1}^2)`.
    ChshResidual(ChshResidualArgs),
}

#[derive(Debug, Serialize, Args)]
struct ChshResidualArgs {
    /// Sequential strategy JSON; without it, the honest compiled CHSH prover is extracted.
    strategy: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    lambda: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum BlockencCommand {
    /// Compare block-encoded monomials with direct evaluation on random POVMs.
    Verify(BlockencVerifyArgs),
}

#[derive(Debug, Serialize, Args)]
struct BlockencVerifyArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 3)]
    degree: usize,
    #[arg(long, default_value_t = 10)]
    families: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Parse `args` (including the program name), run, print, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_)
        | Error::Json(_)
        | Error::UnknownGame(_)
        | Error::InvalidGame(_)
        | Error::InvalidInput(_)
        | Error::DimensionMismatch(_)
        | Error::ShapeMismatch(_) => 2,
        _ => 1,
    }
}

fn emit(command: &str, config: &impl Serialize, result: Value, output: Option<&Path>) -> Result<()> {
    let mut obj = match result {
        Value::Object(m) => m,
        other => {
            let mut m = serde_json::Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    obj.insert("command".into(), json!(command));
    obj.insert("config".into(), serde_json::to_value(config)?);
    obj.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    let text = serde_json::to_string_pretty(&Value::Object(obj))?;
    if let Some(p) = output {
        fs::write(p, format!("{text}\n"))?;
    }
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn dispatch(c: &Command) -> Result<()> {
    match c {
        Command::Value(a) => value(a),
        Command::Compile(CompileCommand::Run(a)) => compile_run(a),
        Command::Compile(CompileCommand::Battery(a)) => battery(a),
        Command::Seq(SeqCommand::Check(a)) => seq_check(a),
        Command::Seq(SeqCommand::Convert(a)) => seq_convert(a),
        Command::Selftest(SelftestCommand::ChshResidual(a)) => chsh_residual(a),
        Command::Blockenc(BlockencCommand::Verify(a)) => blockenc_verify(a),
    }
}

fn value(a: &ValueArgs) -> Result<()> {
    let g = games::load(&a.game)?;
    let result = match a.kind {
        ValueKind::Classical => {
            let (v, s) = classical_value(&g)?;
            json!({ "game": g.name, "value": v, "strategy": s })
        }
        ValueKind::Ns => json!({ "game": g.name, "value": nonsignaling_value(&g, a.tol)? }),
        ValueKind::Q => {
            let (v, s) = seesaw_lower_bound(&g, a.dim as usize, a.restarts, a.iters, a.seed);
            json!({ "game": g.name, "value": v, "bound": "lower", "strategy": s })
        }
        ValueKind::Qc => {
            let (v, cert) = npa_upper_bound(&g, a.npa_level as usize, a.tol)?;
            json!({ "game": g.name, "value": v, "bound": "upper", "primal_objective": cert.primal_objective,
                    "dual_objective": cert.dual_objective, "iterations": cert.iterations })
        }
    };
    emit("value", a, result, a.output.as_deref())
}

/// The honest strategy the CLI compiles: the best of a qubit see-saw optimum and the built-in
/// CHSH and magic-square strategies that fit the game's shape.
fn honest_strategy(g: &Game, seed: u64) -> QuantumStrategy {
    let (mut best_v, mut best) = seesaw_lower_bound(g, 2, 4, 200, seed);
    for s in [magic_square_strategy(), chsh_strategy()] {
        if s.shape() != g.shape() {
            continue;
        }
        if let Ok(v) = s.value(g) {
            if v > best_v + 1e-9 {
                best_v = v;
                best = s;
            }
        }
    }
    best
}

fn white_box_prover(name: &str, g: &Game, backend: &dyn QheBackend, seed: u64) -> Result<Arc<dyn WhiteBox>> {
    let (_, n_b, k_a, k_b) = g.shape();
    let l = backend.message_bits();
    Ok(match name {
        "honest" => Arc::new(CircuitProver::honest(&honest_strategy(g, seed), backend)?),
        "echo" => Arc::new(EchoProver::new(n_b, k_b)),
        "garbage" => Arc::new(GarbageProver::new(vec![false; l], 7, k_b)),
        "guess" => Arc::new(GuessingProver::new(g)),
        "key-stealer" => Arc::new(KeyStealer::new(g)),
        other => {
            let a = other
                .strip_prefix("constant-")
                .and_then(|s| s.parse::<usize>().ok())
                .filter(|&a| a < k_a)
                .ok_or_else(|| Error::InvalidInput(format!("unknown prover `{other}`")))?;
            Arc::new(IgnoringProver::constant(a, k_a, n_b, k_b, l)?)
        }
    })
}

fn compile_run(a: &CompileRunArgs) -> Result<()> {
    let g = games::load(&a.game)?;
    let be = qhe::backend(a.backend.into(), message_width(g.shape()));
    let result = if a.exact {
        if a.prover == "black-box" {
            return Err(Error::NotWhiteBox);
        }
        let w = white_box_prover(&a.prover, &g, be.as_ref(), a.seed)?;
        let r = exact_value(&g, &SampledProver::new(w), be.as_ref(), a.lambda, a.insecure)?;
        let seq = r.data.to_sequential()?;
        let rejected: Vec<f64> = (0..g.n_a).map(|x| r.data.rejected_mass(x)).collect();
        json!({
            "game": g.name,
            "mode": "exact",
            "value": r.value,
            "rejected_mass": rejected,
            "strong_nonsig_residual_degree3": strong_nonsig_residual(&seq, 3).0,
            "bob_to_alice_violation": check_nonsignaling(&r.correlation).bob_to_alice_max_violation,
        })
    } else {
        let trials = a.trials.expect("clap requires --trials without --exact");
        let make: ProverFactory = if a.prover == "black-box" {
            let honest = CircuitProver::honest(&honest_strategy(&g, a.seed), be.as_ref())?;
            BlackBoxProver::new(&honest)?;
            Arc::new(move || Box::new(BlackBoxProver::new(&honest).expect("validated above")))
        } else {
            let w = white_box_prover(&a.prover, &g, be.as_ref(), a.seed)?;
            Arc::new(move || Box::new(SampledProver::new(w.clone())))
        };
        let ts = run_sessions(&g, &make, be.as_ref(), a.lambda, trials, a.seed, a.insecure, a.threads)?;
        if let Some(p) = &a.transcript {
            let mut f = std::io::BufWriter::new(fs::File::create(p)?);
            for t in &ts {
                writeln!(f, "{}", serde_json::to_string(t)?)?;
            }
            f.flush()?;
        }
        let (rate, se) = acceptance_rate(&ts);
        json!({
            "game": g.name,
            "mode": "monte-carlo",
            "value": rate,
            "std_err": se,
            "accepted": ts.iter().filter(|t| t.accept).count(),
            "trials": ts.len(),
        })
    };
    emit("compile run", a, result, a.output.as_deref())
}

fn battery(a: &BatteryArgs) -> Result<()> {
    let g = games::load(&a.game)?;
    let be = qhe::backend(a.backend.into(), message_width(g.shape()));
    let report = adversary_battery(&g, be.as_ref(), a.lambda, a.insecure, a.seed)?;
    let (npa, _) = npa_upper_bound(&g, a.npa_level as usize, 1e-9)?;
    let mut result = serde_json::to_value(&report)?;
    result["npa_upper_bound"] = json!(npa);
    result["max"] = json!(report.secure_max);
    result["within_bound"] = json!(report.secure_max <= npa + 1e-6);
    emit("compile battery", a, result, a.output.as_deref())
}

fn seq_check(a: &SeqCheckArgs) -> Result<()> {
    let s = SequentialQuantumStrategy::from_json_file(&a.strategy)?;
    let (residual, witness) = strong_nonsig_residual(&s, a.degree);
    let word: Vec<[usize; 2]> = witness.terms.first().map(|(_, w)| w.iter().map(|&(y, b)| [y, b]).collect()).unwrap_or_default();
    emit("seq check", a, json!({ "degree": a.degree, "residual": residual, "witness_word": word }), a.output.as_deref())
}

fn seq_convert(a: &SeqConvertArgs) -> Result<()> {
    let s = SequentialQuantumStrategy::from_json_file(&a.strategy)?;
    let target = correlation_of(&s);
    let mut result = json!({});
    let source = match a.method {
        ConvertMethod::Purify => s,
        ConvertMethod::BlockPurify => {
            let (dec, reduced) = block_reduce(&s, a.tol)?;
            let blocks: Vec<[usize; 2]> = dec.blocks.iter().map(|b| [b.n, b.m]).collect();
            result["blocks"] = json!(blocks);
            result["algebra_dim"] = json!(dec.algebra_dim);
            result["block_residual"] = json!(dec.residual);
            reduced
        }
    };
    let q = convert_purify(&source, a.tol)?;
    result["d_a"] = json!(q.d_a);
    result["d_b"] = json!(q.d_b);
    result["correlation_deviation"] = json!(q.correlation().max_abs_diff(&target));
    if let Some(p) = &a.output {
        fs::write(p, serde_json::to_string(&q)?)?;
    }
    emit("seq convert", a, result, None)
}

fn chsh_residual(a: &ChshResidualArgs) -> Result<()> {
    let (source, s) = match &a.strategy {
        Some(p) => (p.display().to_string(), SequentialQuantumStrategy::from_json_file(p)?),
        None => {
            let g = games::chsh();
            let be = qhe::backend(BackendKind::Ideal, message_width(g.shape()));
            let p = CircuitProver::honest(&chsh_strategy(), be.as_ref())?;
            let r = exact_value(&g, &SampledProver::new(Arc::new(p)), be.as_ref(), a.lambda, false)?;
            ("honest compiled chsh".to_string(), r.data.to_sequential()?)
        }
    };
    let residual = chsh_selftest_residual(&s)?;
    emit("selftest chsh-residual", a, json!({ "source": source, "residual": residual }), a.output.as_deref())
}

fn blockenc_verify(a: &BlockencVerifyArgs) -> Result<()> {
    if !a.dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(a.dim));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    let mut chsh_worst = 0.0f64;
    for _ in 0..a.families {
        let b = vec![random::random_povm(&mut rng, a.dim, 2), random::random_povm(&mut rng, a.dim, 2)];
        for w in monomials(&b, a.degree) {
            let p = NCPolynomial::monomial(w);
            worst = worst.max(encode_polynomial(&b, &p)?.extract().max_abs_diff(&p.evaluate(&b)?));
            checked += 1;
        }
        let p = NCPolynomial::chsh_anticommutator_squared();
        chsh_worst = chsh_worst.max(encode_polynomial(&b, &p)?.extract().max_abs_diff(&p.evaluate(&b)?));
    }
    let result = json!({ "monomials_checked": checked, "max_deviation": worst, "chsh_polynomial_max_deviation": chsh_worst });
    emit("blockenc verify", a, result, a.output.as_deref())
}
