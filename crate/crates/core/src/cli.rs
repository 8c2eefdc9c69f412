//! Command-line front end. The `rsbc` binary only forwards to [`run`].
//!
//! Every command prints a JSON document carrying `"schema": 1`, or CSV with
//! a header row and floats written with 17 significant digits. Exit codes:
//! 0 success, 2 configuration error, 3 numerical failure. Monte Carlo
//! trials run on a rayon pool (capped by `RSBC_THREADS`) and are emitted in
//! trial order, so output bytes do not depend on the thread count.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::channel::{
    load_channel, one_ring, pathological_matrix, random_groups, rayleigh, triangular_two_user, Channel, OneRingParams,
};
use crate::error::{Error, Result};
use crate::numerics::c;
use crate::regions::{constraints_to_json, exact_constraints, rs_constraints, PowerSplit, UserSet};
use crate::streams::{eliminate, order_streams, sum_rate_with_streams, DEFAULT_SPLIT_TOL};
use crate::sumrate::{
    dpc_sum_capacity, full_report, gdof_slope, k_user_upper_bound, lp_only_sum_rate_bound, rs_sum_rate,
    three_user_closed_form,
};
use crate::db_to_linear;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "rsbc", version, about = "Rate-splitting sum rates, bounds and stream selection for MIMO broadcast channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// RS sum rate (best user subset), closed form, K-user bound and DPC capacity.
    Sumrate(SumrateArgs),
    /// Dump the reduced (or exact) constraint system.
    Region(RegionArgs),
    /// Stream ordering and elimination.
    Streams {
        #[command(subcommand)]
        action: StreamsCommand,
    },
    /// Mean RS sum rate against the K-user upper bound, Rayleigh and one-ring.
    FigGap(FigGapArgs),
    /// Mean sum rate against the number of active ordered streams.
    FigOrdering(FigOrderingArgs),
    /// High-SNR slopes on the pathological channel families.
    Gdof(GdofArgs),
    /// Generate or inspect a channel.
    Channel {
        #[command(subcommand)]
        action: ChannelCommand,
    },
}

#[derive(Subcommand, Debug)]
enum StreamsCommand {
    Order(OrderArgs),
    Eliminate(EliminateArgs),
}

#[derive(Subcommand, Debug)]
enum ChannelCommand {
    Gen(ChannelOutArgs),
    Show(ChannelOutArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum ChannelKind {
    Rayleigh,
    Onering,
    Pathological,
    File,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Family {
    Pathological,
    Triangular,
}

#[derive(Args, Debug, Clone)]
struct ChannelArgs {
    #[arg(long, value_enum, default_value = "rayleigh")]
    channel: ChannelKind,
    /// Users.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Transmit antennas (defaults to K).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Exponent of the pathological channel.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// One-ring group count.
    #[arg(long, default_value_t = 2)]
    groups: usize,
    /// Channel CSV for `--channel file`.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SumrateArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// SNR values in dB (comma separated or repeated).
    #[arg(long = "p-db", required = true, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    p_db: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct RegionArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long = "p-db", required = true, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    p_db: Vec<f64>,
    /// Exact constraints with the equal per-stream power split (K <= 4).
    #[arg(long)]
    exact: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct OrderArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Randomization scale (default 1e-6 times the median finite threshold).
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SPLIT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// SNR for the pathological channel.
    #[arg(long = "p-db", default_value_t = 30.0, allow_negative_numbers = true)]
    p_db: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct EliminateArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long, required = true)]
    threshold: f64,
    #[arg(long, default_value_t = DEFAULT_SPLIT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// SNR for the sum-rate loss (and the pathological channel).
    #[arg(long = "p-db", default_value_t = 30.0, allow_negative_numbers = true)]
    p_db: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct FigGapArgs {
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 6)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long = "p-db", value_delimiter = ',', num_args = 1.., default_values_t = vec![0.0, 10.0, 20.0, 30.0], allow_negative_numbers = true)]
    p_db: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct FigOrderingArgs {
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long = "p-db", default_value_t = 30.0, allow_negative_numbers = true)]
    p_db: f64,
    #[arg(long, default_value_t = 2)]
    groups: usize,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SPLIT_TOL)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct GdofArgs {
    #[arg(long, value_enum, default_value = "pathological")]
    family: Family,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long = "alpha-f", default_value_t = 0.6)]
    alpha_f: f64,
    #[arg(long = "alpha-g", default_value_t = 0.35)]
    alpha_g: f64,
    /// Sweep in dB (default 0 to 90 in steps of 2.5).
    #[arg(long = "p-db", value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    p_db: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ChannelOutArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// SNR for the pathological channel.
    #[arg(long = "p-db", default_value_t = 30.0, allow_negative_numbers = true)]
    p_db: f64,
    #[command(flatten)]
    output: OutputArgs,
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code. Output goes to stdout or `--out`; diagnostics to
/// stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let pool = match thread_pool() {
        Ok(pool) => pool,
        Err(e) => return report(err, &e),
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok((doc, output)) => match emit(&doc, &output, out) {
            Ok(()) => EXIT_OK,
            Err(e) => report(err, &e),
        },
        Err(e) => report(err, &e),
    }
}

fn report(err: &mut dyn Write, e: &Error) -> i32 {
    let code = exit_code(e);
    let _ = writeln!(err, "rsbc: {e}");
    code
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Contract(_) | Error::Precondition(_) | Error::Capacity(_) | Error::Parse { .. } | Error::Io(_) => {
            EXIT_CONFIG
        }
        Error::NegativeEigenvalue { .. } | Error::Lp(_) | Error::NegativeRate { .. } | Error::Numerical(_) => EXIT_NUMERIC,
    }
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("RSBC_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Precondition(format!("RSBC_THREADS must be a positive integer, got `{v}`")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Numerical(format!("thread pool: {e}")))
}

/// A command result: the JSON document and the same data as CSV.
struct Doc {
    json: Value,
    csv_header: Vec<String>,
    csv_rows: Vec<Vec<String>>,
}

fn emit(doc: &Doc, output: &OutputArgs, stdout: &mut dyn Write) -> Result<()> {
    let text = match output.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&doc.json).expect("json values serialize");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = doc.csv_header.join(",");
            s.push('\n');
            for row in &doc.csv_rows {
                s.push_str(&row.join(","));
                s.push('\n');
            }
            s
        }
    };
    match &output.out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn json_num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(num(v))
    }
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::Precondition("--trials must be at least 1".into()));
    }
    Ok(())
}

fn check_p_list(p_db: &[f64]) -> Result<()> {
    if p_db.is_empty() || p_db.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("--p-db needs at least one finite value".into()));
    }
    Ok(())
}

impl ChannelArgs {
    fn m(&self) -> usize {
        self.m.unwrap_or(self.k)
    }

    /// Channel for trial `t`; seeds advance with the trial index.
    fn build(&self, trial: usize, p: f64) -> Result<Channel> {
        let seed = self.seed.wrapping_add(trial as u64);
        match self.channel {
            ChannelKind::Rayleigh => {
                check_shape(self.k, self.m())?;
                rayleigh(self.k, self.m(), seed)
            }
            ChannelKind::Onering => {
                check_shape(self.k, self.m())?;
                onering_trial(self.k, self.m(), self.groups, seed)
            }
            ChannelKind::Pathological => {
                if !(self.alpha >= 0.0 && self.alpha < 1.0) {
                    return Err(Error::Precondition(format!("alpha must lie in [0,1), got {}", self.alpha)));
                }
                Channel::miso(pathological_matrix(p, self.alpha))
            }
            ChannelKind::File => {
                let path = self
                    .file
                    .as_ref()
                    .ok_or_else(|| Error::Precondition("--channel file requires --file".into()))?;
                load_channel(path)
            }
        }
    }
}

fn check_shape(k: usize, m: usize) -> Result<()> {
    if k == 0 || m == 0 {
        return Err(Error::Precondition("--k and --m must be positive".into()));
    }
    if k > UserSet::MAX_USERS {
        return Err(Error::Capacity(format!("--k above {}", UserSet::MAX_USERS)));
    }
    Ok(())
}

/// One-ring channel with the standard parameters and a seeded random group
/// assignment.
pub fn onering_trial(k: usize, m: usize, groups: usize, seed: u64) -> Result<Channel> {
    if groups == 0 {
        return Err(Error::Precondition("--groups must be positive".into()));
    }
    let labels = random_groups(k, groups, seed ^ 0x5bd1_e995_9e37_79b9);
    one_ring(k, m, &OneRingParams::standard(groups), &labels, seed)
}

fn dispatch(cmd: Command) -> Result<(Doc, OutputArgs)> {
    match cmd {
        Command::Sumrate(a) => Ok((cmd_sumrate(&a)?, a.output)),
        Command::Region(a) => Ok((cmd_region(&a)?, a.output)),
        Command::Streams { action: StreamsCommand::Order(a) } => Ok((cmd_order(&a)?, a.output)),
        Command::Streams { action: StreamsCommand::Eliminate(a) } => Ok((cmd_eliminate(&a)?, a.output)),
        Command::FigGap(a) => Ok((cmd_fig_gap(&a)?, a.output)),
        Command::FigOrdering(a) => Ok((cmd_fig_ordering(&a)?, a.output)),
        Command::Gdof(a) => Ok((cmd_gdof(&a)?, a.output)),
        Command::Channel { action: ChannelCommand::Gen(a) } => Ok((cmd_channel(&a, false)?, a.output)),
        Command::Channel { action: ChannelCommand::Show(a) } => Ok((cmd_channel(&a, true)?, a.output)),
    }
}

fn cmd_sumrate(a: &SumrateArgs) -> Result<Doc> {
    check_trials(a.trials)?;
    check_p_list(&a.p_db)?;
    let jobs: Vec<(usize, f64)> =
        (0..a.trials).flat_map(|t| a.p_db.iter().map(move |&p| (t, p))).collect();
    let results = jobs
        .par_iter()
        .map(|&(t, p_db)| {
            let p = db_to_linear(p_db);
            let ch = a.channel.build(t, p)?;
            Ok((t, p_db, full_report(&ch, p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for (t, p_db, r) in results {
        let mut rec = r.to_json();
        rec["trial"] = json!(t);
        rec["p_db"] = json!(p_db);
        records.push(rec);
        rows.push(vec![
            t.to_string(),
            num(p_db),
            r.channel_digest.clone(),
            num(r.rs_lp_value),
            opt_num(r.closed_form_value),
            opt_num(r.upper_bound_value),
            opt_num(r.dpc_value),
            r.active_subset.bits().to_string(),
        ]);
    }
    Ok(Doc {
        json: json!({"schema": 1, "command": "sumrate", "records": records}),
        csv_header: header(&["trial", "p_db", "channel_digest", "rs_lp", "closed_form", "upper_bound", "dpc", "active_subset"]),
        csv_rows: rows,
    })
}

fn cmd_region(a: &RegionArgs) -> Result<Doc> {
    check_p_list(&a.p_db)?;
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for &p_db in &a.p_db {
        let p = db_to_linear(p_db);
        let ch = a.channel.build(0, p)?;
        let cons = if a.exact { exact_constraints(&ch, p, &PowerSplit::Equal)? } else { rs_constraints(&ch, p)? };
        for r in &cons {
            rows.push(vec![
                num(p_db),
                (r.pivot + 1).to_string(),
                r.streams.iter().map(|s| s.bits().to_string()).collect::<Vec<_>>().join(";"),
                num(r.rhs),
                r.provenance.to_string(),
            ]);
        }
        records.push(json!({
            "p_db": p_db,
            "channel_digest": ch.digest(),
            "system": if a.exact { "exact" } else { "reduced" },
            "constraints": constraints_to_json(&cons),
        }));
    }
    Ok(Doc {
        json: json!({"schema": 1, "command": "region", "records": records}),
        csv_header: header(&["p_db", "pivot", "streams", "rhs_bits", "provenance"]),
        csv_rows: rows,
    })
}

fn cmd_order(a: &OrderArgs) -> Result<Doc> {
    check_trials(a.trials)?;
    let p = db_to_linear(a.p_db);
    let results = (0..a.trials)
        .into_par_iter()
        .map(|t| {
            let ch = a.channel.build(t, p)?;
            let seed = a.channel.seed.wrapping_add(t as u64);
            Ok((t, ch.digest(), order_streams(&ch, a.sigma, seed, a.tol)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for (t, digest, ord) in results {
        let mut rec = ord.to_json();
        rec.as_object_mut().expect("object").remove("schema");
        rec["trial"] = json!(t);
        rec["channel_digest"] = json!(digest);
        for (i, e) in ord.entries.iter().enumerate() {
            rows.push(vec![t.to_string(), (i + 1).to_string(), e.stream.bits().to_string(), num(e.c_value)]);
        }
        records.push(rec);
    }
    Ok(Doc {
        json: json!({"schema": 1, "command": "streams order", "records": records}),
        csv_header: header(&["trial", "rank", "stream_bitmask", "c_value"]),
        csv_rows: rows,
    })
}

fn cmd_eliminate(a: &EliminateArgs) -> Result<Doc> {
    check_trials(a.trials)?;
    let p = db_to_linear(a.p_db);
    let results = (0..a.trials)
        .into_par_iter()
        .map(|t| {
            let ch = a.channel.build(t, p)?;
            let e = eliminate(&ch, a.threshold, a.tol)?;
            let all = rs_sum_rate(&ch, p)?.rs_lp_value;
            let kept = sum_rate_with_streams(&ch, p, &e.surviving)?;
            Ok((t, ch.digest(), e, all, kept))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for (t, digest, e, all, kept) in results {
        let mut rec = e.to_json();
        rec.as_object_mut().expect("object").remove("schema");
        rec["trial"] = json!(t);
        rec["channel_digest"] = json!(digest);
        rec["examined"] = json!(e.examined);
        rec["p_db"] = json!(a.p_db);
        rec["rs_all_streams"] = json!(all);
        rec["rs_surviving"] = json!(kept);
        rec["loss_bits"] = json!(all - kept);
        rows.push(vec![
            t.to_string(),
            num(e.threshold),
            e.surviving.iter().map(|s| s.bits().to_string()).collect::<Vec<_>>().join(";"),
            num(all),
            num(kept),
            num(all - kept),
        ]);
        records.push(rec);
    }
    Ok(Doc {
        json: json!({"schema": 1, "command": "streams eliminate", "records": records}),
        csv_header: header(&["trial", "threshold", "surviving", "rs_all_streams", "rs_surviving", "loss_bits"]),
        csv_rows: rows,
    })
}

fn cmd_fig_gap(a: &FigGapArgs) -> Result<Doc> {
    if !(a.k == 4 || a.k == 5) {
        return Err(Error::Capacity(format!("fig-gap supports K = 4 or 5, got {}", a.k)));
    }
    check_shape(a.k, a.m)?;
    check_trials(a.trials)?;
    check_p_list(&a.p_db)?;
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for model in ["rayleigh", "onering"] {
        // per trial: (rs, bound) for every P
        let per_trial = (0..a.trials)
            .into_par_iter()
            .map(|t| {
                let seed = a.seed.wrapping_add(t as u64);
                let ch = if model == "rayleigh" { rayleigh(a.k, a.m, seed)? } else { onering_trial(a.k, a.m, 2, seed)? };
                a.p_db
                    .iter()
                    .map(|&p_db| {
                        let p = db_to_linear(p_db);
                        Ok((rs_sum_rate(&ch, p)?.rs_lp_value, k_user_upper_bound(&ch, p)?))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (i, &p_db) in a.p_db.iter().enumerate() {
            let n = a.trials as f64;
            let mean_rs = per_trial.iter().map(|v| v[i].0).sum::<f64>() / n;
            let mean_bound = per_trial.iter().map(|v| v[i].1).sum::<f64>() / n;
            let min_gap = per_trial.iter().map(|v| v[i].1 - v[i].0).fold(f64::INFINITY, f64::min);
            records.push(json!({
                "model": model, "p_db": p_db, "trials": a.trials,
                "mean_rs": mean_rs, "mean_bound": mean_bound,
                "mean_gap": mean_bound - mean_rs, "min_gap": min_gap,
            }));
            rows.push(vec![
                model.to_string(),
                num(p_db),
                a.trials.to_string(),
                num(mean_rs),
                num(mean_bound),
                num(mean_bound - mean_rs),
                num(min_gap),
            ]);
        }
    }
    Ok(Doc {
        json: json!({"schema": 1, "command": "fig-gap", "k": a.k, "m": a.m, "seed": a.seed, "records": records}),
        csv_header: header(&["model", "p_db", "trials", "mean_rs", "mean_bound", "mean_gap", "min_gap"]),
        csv_rows: rows,
    })
}

/// Per-trial sum rates with the top-`N` ordered streams for
/// `N = K..2^K-1`, and the 1-layer baseline (privates plus the all-user
/// stream).
pub fn ordering_trial(ch: &Channel, p: f64, sigma: Option<f64>, seed: u64, tol: f64) -> Result<(Vec<f64>, f64)> {
    let k = ch.users();
    let ord = order_streams(ch, sigma, seed, tol)?;
    let curve = (k..(1usize << k))
        .map(|n| sum_rate_with_streams(ch, p, &ord.top(n)))
        .collect::<Result<Vec<_>>>()?;
    let mut one_layer: Vec<UserSet> = (0..k).map(UserSet::singleton).collect();
    if k > 1 {
        one_layer.push(ch.all_users());
    }
    Ok((curve, sum_rate_with_streams(ch, p, &one_layer)?))
}

fn cmd_fig_ordering(a: &FigOrderingArgs) -> Result<Doc> {
    check_shape(a.k, a.m)?;
    if a.k > crate::regions::MAX_ENUMERATION_USERS {
        return Err(Error::Capacity(format!("fig-ordering supports K <= {}", crate::regions::MAX_ENUMERATION_USERS)));
    }
    check_trials(a.trials)?;
    let p = db_to_linear(a.p_db);
    let per_trial = (0..a.trials)
        .into_par_iter()
        .map(|t| {
            let seed = a.seed.wrapping_add(t as u64);
            let ch = onering_trial(a.k, a.m, a.groups, seed)?;
            ordering_trial(&ch, p, a.sigma, seed, a.tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let n_trials = a.trials as f64;
    let baseline = per_trial.iter().map(|v| v.1).sum::<f64>() / n_trials;
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for (i, n) in (a.k..(1usize << a.k)).enumerate() {
        let mean = per_trial.iter().map(|v| v.0[i]).sum::<f64>() / n_trials;
        records.push(json!({"active_streams": n, "mean_sum_rate": mean}));
        rows.push(vec![n.to_string(), num(mean), num(baseline)]);
    }
    Ok(Doc {
        json: json!({
            "schema": 1, "command": "fig-ordering", "k": a.k, "m": a.m, "p_db": a.p_db,
            "trials": a.trials, "seed": a.seed, "one_layer_mean": baseline, "records": records,
        }),
        csv_header: header(&["active_streams", "mean_sum_rate", "one_layer_mean"]),
        csv_rows: rows,
    })
}

fn cmd_gdof(a: &GdofArgs) -> Result<Doc> {
    let sweep: Vec<f64> = if a.p_db.is_empty() { (0..=36).map(|i| 2.5 * i as f64).collect() } else { a.p_db.clone() };
    check_p_list(&sweep)?;
    let exponents_ok = |x: f64| (0.0..1.0).contains(&x);
    let mut points_cap = Vec::new();
    let mut points_scheme = Vec::new();
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for &p_db in &sweep {
        let p = db_to_linear(p_db);
        let (cap, scheme) = match a.family {
            Family::Pathological => {
                if !exponents_ok(a.alpha) {
                    return Err(Error::Precondition(format!("alpha must lie in [0,1), got {}", a.alpha)));
                }
                let ch = Channel::miso(pathological_matrix(p, a.alpha))?;
                (dpc_sum_capacity(&ch, p)?, three_user_closed_form(&ch, p)?)
            }
            Family::Triangular => {
                if !(a.alpha_f >= 0.0 && a.alpha_g >= 0.0) {
                    return Err(Error::Precondition("alpha-f and alpha-g must be nonnegative".into()));
                }
                let ch = triangular_two_user(c(p.powf(a.alpha_f), 0.0), c(p.powf(a.alpha_g), 0.0))?;
                (dpc_sum_capacity(&ch, p)?, lp_only_sum_rate_bound(&ch, p)?)
            }
        };
        points_cap.push((p, cap));
        points_scheme.push((p, scheme));
        records.push(json!({"p_db": p_db, "capacity": cap, "scheme": scheme}));
        rows.push(vec![num(p_db), num(cap), num(scheme)]);
    }
    let cap_slope = gdof_slope(&points_cap)?;
    let scheme_slope = gdof_slope(&points_scheme)?;
    let (family, scheme) = match a.family {
        Family::Pathological => ("pathological", "rs_closed_form"),
        Family::Triangular => ("triangular", "linear_precoding_bound"),
    };
    Ok(Doc {
        json: json!({
            "schema": 1, "command": "gdof", "family": family, "scheme": scheme,
            "alpha": a.alpha, "alpha_f": a.alpha_f, "alpha_g": a.alpha_g,
            "capacity_slope": cap_slope, "scheme_slope": scheme_slope, "records": records,
        }),
        csv_header: header(&["p_db", "capacity", "scheme"]),
        csv_rows: rows,
    })
}

fn cmd_channel(a: &ChannelOutArgs, show: bool) -> Result<Doc> {
    let ch = a.channel.build(0, db_to_linear(a.p_db))?;
    let h = ch.matrix();
    let entries: Vec<Vec<String>> = (0..h.nrows())
        .map(|i| (0..h.ncols()).map(|j| format!("{:.16e}:{:.16e}", h[(i, j)].re, h[(i, j)].im)).collect())
        .collect();
    let mut json = json!({
        "schema": 1, "command": if show { "channel show" } else { "channel gen" },
        "k": ch.users(), "m": ch.tx_antennas(), "rx": ch.rx_antennas(),
        "channel_digest": ch.digest(), "rows": entries,
    });
    if show {
        let norms: Vec<Value> = (0..ch.users())
            .map(|k| json_num(crate::numerics::frobenius(&ch.user_block(k))))
            .collect();
        json["row_norms"] = json!(norms);
    }
    // CSV output is the channel file format itself.
    let csv = ch.to_csv();
    let mut lines = csv.lines().map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>());
    let csv_header = lines.next().unwrap_or_default();
    Ok(Doc { json, csv_header, csv_rows: lines.collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(std::iter::once("rsbc").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn sumrate_json_record() {
        let (code, out, err) = run_capture(&["sumrate", "--channel", "rayleigh", "--k", "3", "--m", "3", "--seed", "1", "--p-db", "20"]);
        assert_eq!(code, 0, "{err}");
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["schema"], 1);
        let rec = &v["records"][0];
        let rs = rec["values"]["rs_lp"].as_f64().unwrap();
        let closed = rec["values"]["closed_form"].as_f64().unwrap();
        let bound = rec["values"]["upper_bound"].as_f64().unwrap();
        assert!(rs <= closed + 1e-7 && rs > 0.0);
        assert!(bound > 0.0);
    }

    #[test]
    fn missing_power_is_config_error() {
        let (code, _, err) = run_capture(&["sumrate", "--k", "3"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("--p-db"));
    }

    #[test]
    fn csv_has_header_and_full_precision() {
        let (code, out, _) = run_capture(&["sumrate", "--k", "2", "--p-db", "10,20", "--format", "csv"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("trial,p_db"));
        let rs = lines[1].split(',').nth(3).unwrap();
        let mantissa = rs.split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
    }

    #[test]
    fn fig_gap_guard() {
        let (code, _, _) = run_capture(&["fig-gap", "--k", "6", "--trials", "1"]);
        assert_eq!(code, EXIT_CONFIG);
    }

    #[test]
    fn pathological_alpha_out_of_range() {
        let (code, _, _) = run_capture(&["sumrate", "--channel", "pathological", "--alpha", "1.5", "--p-db", "10"]);
        assert_eq!(code, EXIT_CONFIG);
    }

    #[test]
    fn file_channel_requires_path() {
        let (code, _, err) = run_capture(&["channel", "show", "--channel", "file"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("--file"));
    }

    #[test]
    fn zero_trials_rejected() {
        let (code, _, _) = run_capture(&["streams", "order", "--trials", "0"]);
        assert_eq!(code, EXIT_CONFIG);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Numerical("x".into())), EXIT_NUMERIC);
        assert_eq!(exit_code(&Error::Lp(crate::lp::LpStatus::Unbounded)), EXIT_NUMERIC);
        assert_eq!(exit_code(&Error::Parse { line: 1, message: String::new() }), EXIT_CONFIG);
    }

    #[test]
    fn help_exits_cleanly() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        for sub in ["sumrate", "region", "streams", "fig-gap", "fig-ordering", "gdof", "channel"] {
            assert!(out.contains(sub), "{sub}");
        }
    }
}
