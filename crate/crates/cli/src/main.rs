use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use robust_beta::decoder::decode_with_uncertainty;
use robust_beta::encoders::EncodeResult;
use robust_beta::invariant_geometry::{alpha_bounds, uniform_alpha_range};
use robust_beta::{
    beta_encode, beta_encode_leaky, gre_encode, gre_encode_leaky, leak_for_gamma,
    recover_gamma_from_pair, recover_gamma_from_zero, recovery::recover_gamma, Bit, FlakyPolicy,
    LeakParams, QuantizerSpec, RecoveryResult, TernaryPolynomial, TransversalityContext, INV_PHI,
    TRANSVERSALITY_CEILING,
};
use robust_beta_cli::experiments::float;
use robust_beta_cli::{run_experiment, BitFile, ExperimentConfig};

#[derive(Parser)]
#[command(name = "robust-beta", version, about = "Beta and golden ratio encoders with imperfect quantizers")]
struct Cli {
    /// Seed for random flaky policies and experiment trials.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Encode inputs into a bitstream file, one stream per input.
    Encode(EncodeArgs),
    /// Reconstruct the inputs of a bitstream file in a given base.
    Decode(DecodeArgs),
    /// Estimate the base from a pair (x, -x) or from an expansion of zero.
    Recover(RecoverArgs),
    /// Print the certified amplifier range for a flaky-band tolerance.
    VerifyRange(VerifyArgs),
    /// Run the experiment described by --config.
    Experiment,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Beta,
    LeakyBeta,
    Gre,
    LeakyGre,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long, value_enum, default_value_t = SchemeArg::LeakyGre)]
    scheme: SchemeArg,
    /// Inputs in [-1, 1].
    #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
    x: Vec<f64>,
    #[arg(long, default_value_t = 32)]
    bits: usize,
    /// Base of the beta encoders.
    #[arg(long)]
    beta: Option<f64>,
    /// Leak of the leaky beta encoder.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    /// Target base of the leaky golden ratio encoder (sets lambda1 = lambda2).
    #[arg(long, conflicts_with_all = ["lambda1", "lambda2"])]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    nu: f64,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    /// always-minus, always-plus, toggle, random or random:<seed>.
    #[arg(long, default_value = "random")]
    policy: String,
}

#[derive(Args)]
struct DecodeArgs {
    file: PathBuf,
    #[arg(long)]
    gamma: f64,
    /// Bits to use; all of them when absent.
    #[arg(long)]
    n: Option<usize>,
    /// Bound on |gamma_true - gamma|.
    #[arg(long, default_value_t = 0.0)]
    uncertainty: f64,
}

#[derive(Args)]
struct RecoverArgs {
    /// Expansions of x and -x.
    #[arg(long, num_args = 2, value_names = ["B", "C"], conflicts_with = "zero")]
    pair: Option<Vec<PathBuf>>,
    /// An expansion of zero.
    #[arg(long, required_unless_present = "pair")]
    zero: Option<PathBuf>,
    #[arg(long, default_value_t = INV_PHI)]
    gamma_low: f64,
    #[arg(long, default_value_t = TRANSVERSALITY_CEILING)]
    gamma_high: f64,
    /// Right end of the root search, for bases above 0.6491.
    #[arg(long)]
    search_high: Option<f64>,
    /// Truncate the polynomial to this degree.
    #[arg(long)]
    degree: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    delta: f64,
    #[arg(long, requires = "lambda2")]
    lambda1: Option<f64>,
    #[arg(long, requires = "lambda1")]
    lambda2: Option<f64>,
}

enum Failure {
    Input(String),
    Numerical(String),
    Write(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Write(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Numerical(m) | Failure::Write(m) => m,
        }
    }
}

impl From<robust_beta::Error> for Failure {
    fn from(e: robust_beta::Error) -> Self {
        use robust_beta::Error;
        match e {
            Error::InvalidParameter { .. } | Error::NonFinite { .. } => Failure::Input(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Encode(a) => encode(cli, a),
        Command::Decode(a) => decode(cli, a),
        Command::Recover(a) => recover(cli, a),
        Command::VerifyRange(a) => verify_range(cli, a),
        Command::Experiment => experiment(cli),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_bits(path: &Path) -> Result<BitFile, Failure> {
    BitFile::parse(&read(path)?).map_err(|e| Failure::Input(format!("{}:{e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Write(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_policy(text: &str, seed: Option<u64>) -> Result<FlakyPolicy, Failure> {
    if text == "random" {
        return Ok(FlakyPolicy::SeededRandom(seed.unwrap_or(0)));
    }
    text.parse().map_err(Failure::Input)
}

fn missing(flag: &str, scheme: &str) -> Failure {
    Failure::Input(format!("--{flag} is required for --scheme {scheme}"))
}

fn encode(cli: &Cli, a: &EncodeArgs) -> Outcome {
    let policy = parse_policy(&a.policy, cli.seed)?;
    let q = QuantizerSpec::new(a.nu, a.alpha, policy)?;
    let run_one = |x: f64| -> Result<EncodeResult, Failure> {
        Ok(match a.scheme {
            SchemeArg::Beta => beta_encode(x, a.beta.ok_or(missing("beta", "beta"))?, a.bits, &q)?,
            SchemeArg::LeakyBeta => beta_encode_leaky(
                x,
                a.beta.ok_or(missing("beta", "leaky-beta"))?,
                a.lambda.ok_or(missing("lambda", "leaky-beta"))?,
                a.bits,
                &q,
            )?,
            SchemeArg::Gre => gre_encode(x, a.bits, &q)?,
            SchemeArg::LeakyGre => {
                let leak = match (a.gamma, a.lambda1, a.lambda2) {
                    (Some(g), _, _) => leak_for_gamma(g)?,
                    (None, Some(l1), Some(l2)) => LeakParams::new(l1, l2)?,
                    _ => return Err(missing("gamma or --lambda1/--lambda2", "leaky-gre")),
                };
                gre_encode_leaky(x, leak, a.bits, &q)?
            }
        })
    };
    let mut file = BitFile::default();
    for &x in &a.x {
        file.streams.push(run_one(x)?.bits);
    }
    let runs_scheme = match a.scheme {
        SchemeArg::Beta => "beta",
        SchemeArg::LeakyBeta => "leaky_beta",
        SchemeArg::Gre => "gre",
        SchemeArg::LeakyGre => "leaky_gre",
    };
    // The base is deliberately left out: the receiver does not know it.
    for (k, v) in [
        ("scheme", json!(runs_scheme)),
        ("bits", json!(a.bits)),
        ("inputs", json!(a.x)),
        ("nu", json!(a.nu)),
        ("alpha", json!(a.alpha)),
        ("policy", json!(policy.to_string())),
    ] {
        file.header.insert(k.into(), v);
    }
    emit(cli.out.as_deref(), &file.render())
}

fn decode(cli: &Cli, a: &DecodeArgs) -> Outcome {
    let file = read_bits(&a.file)?;
    let mut rows = Vec::new();
    for (i, s) in file.streams.iter().enumerate() {
        let n = a.n.unwrap_or(s.len());
        rows.push((i, decode_with_uncertainty(s, a.gamma, n, a.uncertainty)?));
    }
    let text = match cli.format {
        Format::Json => {
            let v: Vec<Value> = rows
                .iter()
                .map(|(i, r)| json!({"stream": i, "report": r}))
                .collect();
            serde_json::to_string_pretty(&v).expect("reports serialize") + "\n"
        }
        Format::Csv => {
            let mut s = String::from("stream,bits_used,base,estimate,bound\n");
            for (i, r) in &rows {
                let _ = writeln!(
                    s,
                    "{i},{},{},{},{}",
                    r.bits_used,
                    float(r.base_used),
                    float(r.estimate),
                    float(r.bound)
                );
            }
            s
        }
    };
    emit(cli.out.as_deref(), &text)
}

fn stream_of(path: &Path) -> Result<Vec<Bit>, Failure> {
    let file = read_bits(path)?;
    file.only_stream()
        .map(<[Bit]>::to_vec)
        .map_err(|e| Failure::Input(format!("{}:{e}", path.display())))
}

fn recover(cli: &Cli, a: &RecoverArgs) -> Outcome {
    let mut ctx = TransversalityContext::new(a.gamma_low, a.gamma_high)?;
    if let Some(s) = a.search_high {
        ctx = ctx.with_search_high(s)?;
    }
    let result: RecoveryResult = match (&a.pair, &a.zero, a.degree) {
        (Some(files), _, degree) => {
            let b = stream_of(&files[0])?;
            let c = stream_of(&files[1])?;
            match degree {
                None => recover_gamma_from_pair(&b, &c, &ctx)?,
                Some(d) => {
                    let (p, k) = robust_beta::difference_stream(&b, &c)?;
                    let mut r = recover_gamma(&p.truncated(d), &ctx)?;
                    r.shift_k = Some(k);
                    r
                }
            }
        }
        (None, Some(zero), degree) => {
            let bits = stream_of(zero)?;
            match degree {
                None => recover_gamma_from_zero(&bits, &ctx)?,
                Some(d) => recover_gamma(&TernaryPolynomial::from_bits(&bits)?.truncated(d), &ctx)?,
            }
        }
        (None, None, _) => return Err(Failure::Input("give --pair B C or --zero F".into())),
    };
    let guarantee = match result.guarantee {
        robust_beta::Guarantee::Proven => "proven",
        robust_beta::Guarantee::EmpiricalOnly => "empirical_only",
    };
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(&result).expect("result serializes") + "\n",
        Format::Csv => format!(
            "gamma_estimate,residual,tolerance,degree,shift_k,guarantee\n{},{},{},{},{},{}\n",
            float(result.gamma_estimate),
            float(result.residual),
            float(result.tolerance),
            result.poly_degree_used,
            result.shift_k.map(|k| k.to_string()).unwrap_or_default(),
            guarantee
        ),
    };
    emit(cli.out.as_deref(), &text)
}

fn verify_range(cli: &Cli, a: &VerifyArgs) -> Outcome {
    let (lo, hi) = uniform_alpha_range(a.delta).map_err(|e| Failure::Input(e.to_string()))?;
    let leak = match (a.lambda1, a.lambda2) {
        (Some(l1), Some(l2)) => Some((l1, l2, alpha_bounds(LeakParams::new(l1, l2)?, a.delta)?)),
        _ => None,
    };
    let text = match cli.format {
        Format::Json => {
            let mut v = json!({"delta": a.delta, "uniform": [lo, hi]});
            if let Some((l1, l2, (l, u))) = leak {
                v["leak"] = json!({"lambda1": l1, "lambda2": l2, "range": [l, u]});
            }
            serde_json::to_string_pretty(&v).expect("values serialize") + "\n"
        }
        Format::Csv => {
            let mut s = format!("[{lo:.4}, {hi:.4}]\n");
            if let Some((l1, l2, (l, u))) = leak {
                let _ = writeln!(s, "lambda = ({l1}, {l2}): [{l:.4}, {u:.4}]");
            }
            s
        }
    };
    emit(cli.out.as_deref(), &text)
}

fn experiment(cli: &Cli) -> Outcome {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Failure::Input("experiment needs --config <path>".into()))?;
    let mut cfg = ExperimentConfig::parse(&read(path)?)
        .map_err(|e| Failure::Input(format!("{}:{}: {}", path.display(), e.line, e.message)))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = run_experiment(&cfg)?;
    let text = match cli.format {
        Format::Csv => out.to_csv(),
        Format::Json => out.to_json(),
    };
    eprintln!("{}", out.summary());
    emit(cli.out.as_deref().or(cfg.output_path.as_deref()), &text)
}
