use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use limavg_core::approx::{self, Backend, OracleConfig};
use limavg_core::chain;
use limavg_core::formula::{self, ExportFormat};
use limavg_core::game::{self, StochasticGame};
use limavg_core::ratio::{self, Rational};
use limavg_core::strategy::{Role, StationaryStrategy};

/// Value approximation for zero-sum stochastic games with limit-average payoff.
#[derive(Parser)]
#[command(name = "limavg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Approximate the value of a state to within epsilon.
    Value(ValueArgs),
    /// Decide whether the value of a state exceeds alpha (exit 3 when uncertain).
    Decide(DecideArgs),
    /// Write the sentence stating that the value exceeds alpha.
    Sentence(SentenceArgs),
    /// Report size metrics of the sentence.
    Census(CensusArgs),
    /// Evaluate a pair of stationary strategies.
    Eval(EvalArgs),
    /// Bound the value difference between two games.
    Perturb(PerturbArgs),
}

#[derive(Args)]
struct GameArgs {
    /// Game description (JSON).
    #[arg(long)]
    game: PathBuf,
    /// State, numbered from 1.
    #[arg(long)]
    state: usize,
}

#[derive(Args)]
struct OracleArgs {
    /// Comma-separated decreasing discount factors, e.g. "1/2,1/4,1/8".
    #[arg(long)]
    beta_schedule: Option<String>,
    #[arg(long)]
    discount_tol: Option<String>,
    /// Number of trailing schedule values that must agree within the tolerance.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    margin: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Numeric,
    Export,
}

#[derive(Args)]
struct ValueArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long)]
    epsilon: String,
    #[arg(long, value_enum, default_value = "numeric")]
    backend: BackendArg,
    #[command(flatten)]
    oracle: OracleArgs,
    /// Where the export backend writes its query script (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DecideArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, allow_hyphen_values = true)]
    alpha: String,
    #[command(flatten)]
    oracle: OracleArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Smtlib,
    Json,
}

#[derive(Args)]
struct SentenceArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, allow_hyphen_values = true)]
    alpha: String,
    #[arg(long)]
    out: PathBuf,
    /// Replace rational coefficients by integer-defined variables.
    #[arg(long)]
    rationalize: bool,
    #[arg(long, value_enum, default_value = "smtlib")]
    format: FormatArg,
}

#[derive(Args)]
struct CensusArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, allow_hyphen_values = true)]
    alpha: String,
    #[arg(long)]
    rationalize: bool,
    /// Census of the discounted sentence (discount factor left free).
    #[arg(long)]
    discounted: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long)]
    strategy1: PathBuf,
    #[arg(long)]
    strategy2: PathBuf,
    /// Also report the discounted payoff at this discount factor.
    #[arg(long)]
    beta: Option<String>,
    /// Simulate a play of this many steps.
    #[arg(long)]
    simulate: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV trace of the simulated play.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PerturbArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    game2: PathBuf,
    #[arg(long)]
    json: bool,
}

const EXIT_INVALID: u8 = 2;
const EXIT_UNCERTAIN: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Value(a) => value(a),
        Command::Decide(a) => decide(a),
        Command::Sentence(a) => sentence(a),
        Command::Census(a) => census(a),
        Command::Eval(a) => eval(a),
        Command::Perturb(a) => perturb(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}

fn rational(text: &str, what: &str) -> Result<Rational> {
    ratio::parse_rational(text.trim()).with_context(|| format!("--{what}"))
}

fn fmt(q: &Rational) -> String {
    ratio::format_rational(q)
}

fn load_game(path: &Path) -> Result<StochasticGame> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    StochasticGame::from_json(&text).with_context(|| format!("loading {}", path.display()))
}

fn load(args: &GameArgs) -> Result<(StochasticGame, usize)> {
    let g = load_game(&args.game)?;
    if args.state == 0 || args.state > g.num_states() {
        bail!("state {} out of range 1..={}", args.state, g.num_states());
    }
    Ok((g, args.state - 1))
}

fn oracle_config(args: &OracleArgs, backend: Backend) -> Result<OracleConfig> {
    let mut cfg = OracleConfig { backend, ..OracleConfig::default() };
    if let Some(s) = &args.beta_schedule {
        cfg.beta_schedule = s.split(',').map(|b| rational(b, "beta-schedule")).collect::<Result<_>>()?;
    }
    if let Some(t) = &args.discount_tol {
        cfg.discount_tol = rational(t, "discount-tol")?;
    }
    if let Some(w) = args.window {
        cfg.stabilization_window = w;
    }
    if let Some(m) = &args.margin {
        cfg.margin = rational(m, "margin")?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(json: bool, value: serde_json::Value, text: String) {
    if json {
        println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
    } else {
        print!("{text}");
    }
}

fn value(a: ValueArgs) -> Result<u8> {
    let (g, s) = load(&a.game)?;
    let epsilon = rational(&a.epsilon, "epsilon")?;
    if let BackendArg::Export = a.backend {
        let script = approx::export_query(&g, s, &epsilon)?;
        match &a.out {
            Some(path) => fs::write(path, script).with_context(|| format!("writing {}", path.display()))?,
            None => print!("{script}"),
        }
        return Ok(0);
    }
    let cfg = oracle_config(&a.oracle, Backend::Numeric)?;
    let r = approx::approximate_value_unnormalized(&g, s, &epsilon, &cfg)?;
    let transcript: Vec<_> = r
        .normalized
        .iter()
        .flat_map(|n| &n.transcript)
        .map(|q| json!([fmt(&q.midpoint), q.verdict, q.certain]))
        .collect();
    let iterations = r.normalized.as_ref().map_or(0, |n| n.iterations);
    let heuristic = r.normalized.as_ref().is_some_and(|n| n.heuristic);
    let estimate = r.normalized.as_ref().and_then(|n| n.estimate.clone());
    let body = json!({
        "interval": [fmt(&r.lower), fmt(&r.upper)],
        "iterations": iterations,
        "transcript": transcript,
        "diagnostics": {
            "heuristic": heuristic,
            "enclosure": [fmt(&r.enclosure.0), fmt(&r.enclosure.1)],
            "m_scale": fmt(&r.m_scale),
            "dyadic_denominator": r.normalized.as_ref().map(|n| n.dyadic_denominator.to_string()),
            "estimate": estimate,
        },
    });
    let mut text = format!("interval [{}, {}]\n", fmt(&r.lower), fmt(&r.upper));
    text += &format!("iterations {iterations}\n");
    if heuristic {
        text += &format!(
            "heuristic: some verdicts were within tolerance; enclosure [{}, {}]\n",
            fmt(&r.enclosure.0),
            fmt(&r.enclosure.1)
        );
    }
    if let Some(e) = &estimate {
        if !e.stabilized {
            text += "warning: discounted values did not stabilize along the schedule\n";
        }
        if e.non_monotone_tail {
            text += "warning: discounted values are not monotone along the schedule tail\n";
        }
    }
    emit(a.json, body, text);
    Ok(0)
}

fn decide(a: DecideArgs) -> Result<u8> {
    let (g, s) = load(&a.game)?;
    let alpha = rational(&a.alpha, "alpha")?;
    let cfg = oracle_config(&a.oracle, Backend::Numeric)?;
    let (normalized, rec) = game::normalize(&g);
    let (holds, certain, estimate) = if rec.degenerate {
        // Every payoff is 0.
        (alpha < Rational::from_integer(0.into()), true, None)
    } else {
        let (v, est) = approx::decide_threshold(&normalized, s, &rec.normalize_value(&alpha)?, &cfg)?;
        (v.holds, v.certain, Some(est))
    };
    let body = json!({
        "verdict": holds,
        "certain": certain,
        "estimate": estimate.as_ref().map(|e| fmt(&rec.denormalize_value(&e.value).unwrap_or_else(|_| e.value.clone()))),
        "diagnostics": estimate,
    });
    let text = format!(
        "{}{}\n",
        if holds { "true" } else { "false" },
        if certain { "" } else { " (uncertain)" }
    );
    emit(a.json, body, text);
    Ok(if certain { 0 } else { EXIT_UNCERTAIN })
}

fn build_sentence(args: &GameArgs, alpha: &str, rationalize: bool, discounted: bool) -> Result<formula::Formula> {
    let (g, s) = load(args)?;
    let alpha = rational(alpha, "alpha")?;
    let f = if discounted {
        formula::build_discounted_sentence(&g, s, &alpha)?
    } else {
        formula::build_value_sentence(&g, s, &alpha)?
    };
    Ok(if rationalize { formula::rationalize(&f)? } else { f })
}

fn sentence(a: SentenceArgs) -> Result<u8> {
    let f = build_sentence(&a.game, &a.alpha, a.rationalize, false)?;
    let format = match a.format {
        FormatArg::Smtlib => ExportFormat::SmtLib,
        FormatArg::Json => ExportFormat::Json,
    };
    let text = formula::export_sentence(&f, format)?;
    fs::write(&a.out, text).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(0)
}

fn census(a: CensusArgs) -> Result<u8> {
    let f = build_sentence(&a.game, &a.alpha, a.rationalize, a.discounted)?;
    let c = formula::census(&f);
    let blocks: Vec<String> = c.blocks.iter().map(|b| format!("{}{}", b.kind, b.size)).collect();
    let text = format!(
        "atoms {}\ndistinct atoms {}\nquantified variables {}\nblocks {}\ndegree {}\nlength {}\nsize bits {}\ncoefficients {}\n",
        c.m,
        c.distinct_atoms,
        c.k,
        blocks.join(" "),
        c.d,
        c.len,
        c.size_bits.map_or("undefined".to_string(), |b| b.to_string()),
        c.coeff_ring,
    );
    emit(a.json, serde_json::to_value(&c)?, text);
    Ok(0)
}

fn eval(a: EvalArgs) -> Result<u8> {
    let (g, s) = load(&a.game)?;
    let read = |p: &Path| fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
    let x = StationaryStrategy::from_json(&g, Role::Max, &read(&a.strategy1)?)?;
    let y = StationaryStrategy::from_json(&g, Role::Min, &read(&a.strategy2)?)?;
    let c = chain::induced_chain(&g, &x, &y)?;
    let average = chain::long_run_average(&c, s)?;
    let mut body = json!({ "state": s + 1, "long_run_average": fmt(&average) });
    let mut text = format!("long-run average {} (≈ {:.6})\n", fmt(&average), ratio::to_f64(&average));
    if let Some(b) = &a.beta {
        let beta = rational(b, "beta")?;
        if beta <= Rational::from_integer(0.into()) || beta >= Rational::from_integer(1.into()) {
            bail!("--beta must lie strictly between 0 and 1");
        }
        let w = &c.discounted_payoff(&beta)[s];
        body["discounted_payoff"] = json!(fmt(w));
        text += &format!("discounted payoff {} (≈ {:.6})\n", fmt(w), ratio::to_f64(w));
    }
    if let Some(horizon) = a.simulate {
        let trace = chain::simulate_play(&g, &x, &y, s, horizon, a.seed)?;
        let mean = trace.last().map_or(0.0, |t| ratio::to_f64(&t.running_average));
        let se = chain::batch_means_standard_error(&trace, 20);
        body["simulation"] = json!({ "horizon": horizon, "seed": a.seed, "mean": mean, "standard_error": se });
        text += &format!("simulated mean {mean:.6} ± {se:.6} over {horizon} steps\n");
        if let Some(path) = &a.trace {
            let file = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
            let mut out = io::BufWriter::new(file);
            chain::write_trace_csv(&g, &trace, &mut out)?;
            out.flush()?;
        }
    } else if a.trace.is_some() {
        bail!("--trace requires --simulate");
    }
    emit(a.json, body, text);
    Ok(0)
}

fn perturb(a: PerturbArgs) -> Result<u8> {
    let g = load_game(&a.game)?;
    let g2 = load_game(&a.game2)?;
    let b = game::perturbation_bound(&g, &g2)?;
    let show = |q: &Option<Rational>| q.as_ref().map_or("unbounded".to_string(), fmt);
    let body = json!({ "eta": show(&b.eta), "gamma": fmt(&b.gamma), "rho": show(&b.rho) });
    let text = format!("eta {}\ngamma {}\nrho {}\n", show(&b.eta), fmt(&b.gamma), show(&b.rho));
    emit(a.json, body, text);
    Ok(0)
}
