use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dslab::channel::{build_h_dt, case_config, sample_paths, DopplerRange};
use dslab::domains::{impulse_pattern, SignalDomain};
use dslab::equalize::{recommend_domain, ChannelMode, RecommendMode, RecommendThresholds};
use dslab::harness::{run_ber, run_sparsity, write_ber_csv, write_pattern_csv, write_sparsity_csv, Scenario, Setup};
use dslab::modem::Modulation;
use dslab::spectral::Factorization;

#[derive(Parser)]
#[command(name = "dslab", version, about = "Doubly selective channel sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// LPR/SPR versus window half-width, averaged over channel draws.
    Sparsity(SparsityArgs),
    /// Monte Carlo BER curves.
    Ber(BerArgs),
    /// Received magnitude pattern for a single transmitted impulse.
    Pattern(PatternArgs),
    /// Suggest an equalization domain for a case.
    Recommend(RecommendArgs),
}

#[derive(Args)]
struct FrameArgs {
    /// Frame length; must equal M·N when given.
    #[arg(long = "P", alias = "p")]
    p: Option<usize>,
    #[arg(long = "M", alias = "m", default_value_t = 16)]
    m: usize,
    #[arg(long = "N", alias = "n", default_value_t = 16)]
    n: usize,
    /// Doppler sampling interval: two-sided [-F_d, F_d] or one-sided [0, F_d].
    #[arg(long, default_value = "two-sided", value_parser = parse_doppler_range)]
    doppler_range: DopplerRange,
}

impl FrameArgs {
    fn fact(&self) -> Result<Factorization> {
        let f = match self.p {
            Some(p) => Factorization::with_total(p, self.m, self.n)?,
            None => Factorization::new(self.m, self.n)?,
        };
        Ok(f)
    }
}

#[derive(Args)]
struct SparsityArgs {
    /// Cases, e.g. `1,3` or `1:1:4`.
    #[arg(long, default_value = "1,2,3,4")]
    case: String,
    #[command(flatten)]
    frame: FrameArgs,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Window half-widths as `start:step:end` or a comma list.
    #[arg(long, default_value = "0:1:32")]
    lc: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BerArgs {
    #[arg(long, default_value = "1")]
    case: String,
    /// Read every sweep parameter from a JSON scenario file instead.
    #[arg(long, conflicts_with = "case")]
    scenario: Option<PathBuf>,
    #[command(flatten)]
    frame: FrameArgs,
    #[arg(long, default_value = "sc,ofdm,otfs-dd,otfs-dt,otfs-fd")]
    schemes: String,
    /// SNR grid in dB as `start:step:end` or a comma list.
    #[arg(long, default_value = "0:2:20")]
    snr: String,
    /// `full`, `band:L_c` or `topk:L_c`.
    #[arg(long, default_value = "full")]
    channel: String,
    #[arg(long = "mod", default_value = "qpsk")]
    modulation: String,
    /// Maximum trials per SNR point.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Trials required before a point may stop early.
    #[arg(long, default_value_t = 10)]
    min_trials: usize,
    /// Bit errors required before a point may stop early.
    #[arg(long, default_value_t = 200)]
    min_errors: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PatternArgs {
    #[arg(long)]
    case: u8,
    #[command(flatten)]
    frame: FrameArgs,
    /// Domain the impulse is placed in: `dd`, `time` or `freq`.
    #[arg(long)]
    domain_in: String,
    /// Domain the response is observed in; defaults to `--domain-in`.
    #[arg(long)]
    domain_out: Option<String>,
    #[arg(long, default_value_t = 0)]
    probe: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RecommendArgs {
    #[arg(long)]
    case: u8,
    #[command(flatten)]
    frame: FrameArgs,
    #[arg(long, default_value = "rule")]
    mode: String,
    /// Window half-width for LPR; defaults to the case's T_d.
    #[arg(long)]
    lc: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8.0)]
    theta_td: f64,
    #[arg(long, default_value_t = 0.5)]
    theta_fd: f64,
    #[arg(long, default_value_t = 0.9)]
    theta_dd: f64,
}

fn parse_doppler_range(s: &str) -> Result<DopplerRange, String> {
    match s {
        "two-sided" => Ok(DopplerRange::TwoSided),
        "one-sided" => Ok(DopplerRange::OneSided),
        other => Err(format!("unknown Doppler range `{other}` (two-sided|one-sided)")),
    }
}

/// `start:step:end` (inclusive) or `a,b,c`.
fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parse = |v: &str| v.trim().parse::<f64>().with_context(|| format!("bad grid value `{v}`"));
    let parts: Vec<&str> = s.split(':').collect();
    let out: Vec<f64> = match parts.as_slice() {
        [start, step, end] => {
            let (start, step, end) = (parse(start)?, parse(step)?, parse(end)?);
            if step.is_nan() || step <= 0.0 || !start.is_finite() || !end.is_finite() {
                bail!("grid `{s}` needs finite bounds and a positive step");
            }
            let count = ((end - start) / step + 1e-9).floor();
            if !(0.0..=1e6).contains(&count) {
                bail!("grid `{s}` is empty or too long");
            }
            (0..=count as usize).map(|k| start + k as f64 * step).collect()
        }
        [_] => s.split(',').map(parse).collect::<Result<_>>()?,
        _ => bail!("grid `{s}` must be `start:step:end` or a comma list"),
    };
    if out.is_empty() {
        bail!("grid `{s}` is empty");
    }
    Ok(out)
}

fn parse_int_grid<T: TryFrom<u64>>(s: &str) -> Result<Vec<T>> {
    parse_grid(s)?
        .into_iter()
        .map(|v| {
            if v < 0.0 || v.fract() != 0.0 {
                bail!("`{v}` in `{s}` is not a non-negative integer");
            }
            T::try_from(v as u64).map_err(|_| anyhow::anyhow!("`{v}` in `{s}` is out of range"))
        })
        .collect()
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn cases(s: &str) -> Result<Vec<u8>> {
    parse_int_grid(s)
}

fn sparsity(a: SparsityArgs) -> Result<()> {
    let fact = a.frame.fact()?;
    let lc: Vec<usize> = parse_int_grid(&a.lc)?;
    let mut records = Vec::new();
    for case in cases(&a.case)? {
        let mut sc = Scenario::for_case(case);
        sc.fact = fact;
        sc.doppler_range = a.frame.doppler_range;
        sc.trials = a.trials;
        sc.seed = a.seed;
        records.extend(run_sparsity(&sc, &lc)?);
    }
    write_sparsity_csv(&records, output(&a.out)?)?;
    Ok(())
}

fn ber(a: BerArgs) -> Result<()> {
    let scenarios = match &a.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            vec![Scenario::from_json(&text)?]
        }
        None => {
            let setups = a.schemes.split(',').map(|s| s.trim().parse::<Setup>()).collect::<Result<Vec<_>, _>>()?;
            let base = Scenario {
                fact: a.frame.fact()?,
                doppler_range: a.frame.doppler_range,
                setups,
                channel_mode: a.channel.parse::<ChannelMode>()?,
                snr_db: parse_grid(&a.snr)?,
                modulation: a.modulation.parse::<Modulation>()?,
                trials: a.trials,
                min_trials: a.min_trials,
                min_bit_errors: a.min_errors,
                seed: a.seed,
                ..Scenario::for_case(1)
            };
            cases(&a.case)?.into_iter().map(|c| Scenario { channel: dslab::harness::ChannelSource::Case(c), ..base.clone() }).collect()
        }
    };
    let mut records = Vec::new();
    for sc in &scenarios {
        records.extend(run_ber(sc)?);
    }
    write_ber_csv(&records, output(&a.out)?)?;
    Ok(())
}

fn pattern(a: PatternArgs) -> Result<()> {
    let fact = a.frame.fact()?;
    let cfg = case_config(a.case, fact.p(), fact.m(), fact.n())?.with_doppler_range(a.frame.doppler_range);
    let input = a.domain_in.parse::<SignalDomain>()?;
    let observe = match &a.domain_out {
        Some(d) => d.parse::<SignalDomain>()?,
        None => input,
    };
    let paths = sample_paths(&cfg, a.seed)?;
    let pat = impulse_pattern(&paths, input, observe, a.probe, fact)?;
    let mut header = format!("domain={} probe={} case={} seed={}", input.tag(), a.probe, a.case, a.seed);
    if observe != input {
        header.push_str(&format!(" observe={}", observe.tag()));
    }
    write_pattern_csv(&pat, &header, output(&a.out)?)?;
    Ok(())
}

fn recommend(a: RecommendArgs) -> Result<()> {
    let fact = a.frame.fact()?;
    let cfg = case_config(a.case, fact.p(), fact.m(), fact.n())?.with_doppler_range(a.frame.doppler_range);
    let mode = a.mode.parse::<RecommendMode>()?;
    let h = build_h_dt(&sample_paths(&cfg, a.seed)?, fact.p())?.with_factorization(fact);
    let lc = a.lc.unwrap_or(cfg.max_delay.round() as usize);
    let thresholds = RecommendThresholds { max_delay: a.theta_td, max_doppler: a.theta_fd, dd_lpr: a.theta_dd };
    let rec = recommend_domain(Some(&cfg), Some(&h), mode, Some(lc), &thresholds)?;
    println!("{}", serde_json::to_string(&rec)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("error: invalid arguments"));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Sparsity(a) => sparsity(a),
        Command::Ber(a) => ber(a),
        Command::Pattern(a) => pattern(a),
        Command::Recommend(a) => recommend(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
