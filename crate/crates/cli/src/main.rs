//! `ergsq`: command-line driver for square functions on step signals.
//!
//! Every output starts with the full run configuration (a `# config=` line in
//! CSV, a `config` key in JSON). Exit codes: 0 success, 1 contract violation
//! or failed certificate, 2 usage error.

mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ergsq_core::adversary::adversarial_bmo;
use ergsq_core::certificate::certify_sweep;
use ergsq_core::constructions::{bmo_escape_example, halfline_example, integer_example, HalflineExample};
use ergsq_core::norms::{bmo_over, intervals_inside, lp_norm, window_level};
use ergsq_core::sample::random_steps;
use ergsq_core::square::{s_inf_with, s_selector_with, s_sup_with};
use ergsq_core::{
    tail_bound, window_extrema, window_extrema_naive, Error, EvalOptions, GridSpec, ScaleRange, Selector, Signal,
    SquareFunctionResult,
};
use serde::Serialize;
use serde_json::json;

use output::{Emitter, Format};

#[derive(Debug, Parser, Serialize)]
#[command(name = "ergsq", version, about = "Square functions of moving averages against dyadic averages")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized steps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

/// `lo:hi`, inclusive scale range.
#[derive(Debug, Clone, Copy, Serialize)]
struct IntRange {
    lo: i32,
    hi: i32,
}

impl FromStr for IntRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s.split_once(':').ok_or("expected lo:hi")?;
        let lo = lo.trim().parse().map_err(|e| format!("bad lower end: {e}"))?;
        let hi = hi.trim().parse().map_err(|e| format!("bad upper end: {e}"))?;
        if lo > hi {
            return Err("need lo <= hi".into());
        }
        Ok(IntRange { lo, hi })
    }
}

/// `lo:hi`, half-open interval of the line.
#[derive(Debug, Clone, Copy, Serialize)]
struct SpanArg {
    lo: f64,
    hi: f64,
}

impl FromStr for SpanArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s.split_once(':').ok_or("expected lo:hi")?;
        let lo: f64 = lo.trim().parse().map_err(|e| format!("bad lower end: {e}"))?;
        let hi: f64 = hi.trim().parse().map_err(|e| format!("bad upper end: {e}"))?;
        if !(lo < hi) {
            return Err("need lo < hi".into());
        }
        Ok(SpanArg { lo, hi })
    }
}

#[derive(Debug, Args, Serialize)]
struct SignalArgs {
    /// Signal file (.json or .csv).
    #[arg(long)]
    signal: PathBuf,
    /// Scale range `k_lo:k_hi` (default: `k_min:k_min+20`).
    #[arg(long, allow_hyphen_values = true)]
    scales: Option<IntRange>,
}

impl SignalArgs {
    fn load(&self) -> Result<(Signal, ScaleRange), Error> {
        let signal = Signal::read(&self.signal)?;
        let k_min = signal.grid().k_min;
        let range = match self.scales {
            Some(r) => ScaleRange::new(r.lo, r.hi)?,
            None => ScaleRange::new(k_min, k_min + 20)?,
        };
        Ok((signal, range))
    }
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    /// Only evaluate at points in `[lo, hi)`.
    #[arg(long, allow_hyphen_values = true)]
    eval: Option<SpanArg>,
    /// Include the per-scale terms.
    #[arg(long)]
    dump_terms: bool,
}

impl EvalArgs {
    fn options(&self, grid: &GridSpec) -> EvalOptions {
        let mut opts = EvalOptions::default();
        if let Some(SpanArg { lo, hi }) = self.eval {
            let points = grid.eval_points();
            let first = points.partition_point(|&x| x < lo);
            let last = points.partition_point(|&x| x < hi);
            opts = EvalOptions::cells(first..last);
        }
        if self.dump_terms {
            opts = opts.with_terms();
        }
        opts
    }
}

#[derive(Debug, Subcommand, Serialize)]
enum Command {
    /// Square function for a given selector.
    Compute {
        #[command(flatten)]
        input: SignalArgs,
        /// left | right | centered | random:<seed> | file:<path>
        #[arg(long, default_value = "left")]
        selector: String,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Supremal square function (or its pointwise least companion).
    Sup {
        #[command(flatten)]
        input: SignalArgs,
        /// Compute the pointwise least value over all selectors instead.
        #[arg(long)]
        inf: bool,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Dyadic BMO norm over intervals inside the window.
    Bmo {
        #[command(flatten)]
        input: SignalArgs,
        /// Square function to measure (default: the supremal one).
        #[arg(long)]
        selector: Option<String>,
        /// Measure the signal itself instead of a square function.
        #[arg(long)]
        raw: bool,
        /// Interval levels `lo:hi` (default: grid level to window level).
        #[arg(long, allow_hyphen_values = true)]
        levels: Option<IntRange>,
    },
    /// `L^p` norm of a square function and of the signal.
    Pnorm {
        #[command(flatten)]
        input: SignalArgs,
        #[arg(long)]
        p: f64,
        /// Square function to measure (default: the supremal one).
        #[arg(long)]
        selector: Option<String>,
    },
    /// Write the signal and selector of a construction.
    Construct {
        #[command(subcommand)]
        which: Construction,
        /// Directory for the generated files.
        #[arg(long, global = true, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Translation certificates for every dyadic interval whose triple fits
    /// in the window; fails if any certificate fails.
    Certify {
        #[command(flatten)]
        input: SignalArgs,
    },
    /// Search for a selector with large dyadic BMO norm.
    Adversary {
        #[command(flatten)]
        input: SignalArgs,
        /// Only consider intervals inside `[lo, hi)`.
        #[arg(long, allow_hyphen_values = true)]
        window: Option<SpanArg>,
        /// Where to write the tabulated selector.
        #[arg(long)]
        selector_out: Option<PathBuf>,
    },
    /// Time sliding-window extrema against the offset scan.
    Bench {
        /// Signal length is `2^log_length` cells.
        #[arg(long, default_value_t = 16)]
        log_length: u32,
        /// Window span is `2^span` cells.
        #[arg(long, default_value_t = 12)]
        span: u32,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
    /// Bound on the contribution of scales above `k_hi`.
    Tail {
        #[arg(long)]
        signal: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        k_hi: i32,
    },
}

#[derive(Debug, Subcommand, Serialize)]
enum Construction {
    /// Indicator of `[0, 2^W)` with left-sided intervals.
    Halfline {
        #[arg(long = "W", visible_alias = "width")]
        w: u32,
    },
    /// Indicator of `[1/2, 1)` with the right/left membership selector.
    #[command(alias = "theorem1ii")]
    Escape {
        #[arg(long, default_value_t = 10)]
        ell_max: u32,
        #[arg(long, default_value_t = 14)]
        resolution: u32,
    },
    /// The half-line example on the integers.
    Integer {
        #[arg(long = "W", visible_alias = "width")]
        w: u32,
    },
}

enum Failure {
    Usage(String),
    Contract(Error),
    /// Output was written, but a check inside it failed.
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Contract(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let reason = e.to_string();
            let first = reason.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: kind=usage reason={first}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: kind=usage reason=thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(reason)) => {
            eprintln!("error: kind=usage reason={reason}");
            ExitCode::from(2)
        }
        Err(Failure::Contract(e)) => {
            eprintln!("error: kind={} reason={}", e.kind(), one_line(&e.to_string()));
            ExitCode::from(1)
        }
        Err(Failure::Check(reason)) => {
            eprintln!("error: kind=check-failed reason={reason}");
            ExitCode::from(1)
        }
    }
}

fn one_line(s: &str) -> String {
    s.replace('\n', " ")
}

fn selector_from(spec: &str) -> Result<Selector, Failure> {
    match Selector::from_spec(spec) {
        Ok(s) => Ok(s),
        Err(Error::Parse(msg)) => Err(Failure::Usage(msg)),
        Err(e) => Err(e.into()),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let config = serde_json::to_value(cli).expect("config serializes");
    let out = Emitter::new(cli.format, cli.out.clone(), config);
    match &cli.command {
        Command::Compute { input, selector, eval } => {
            let (signal, range) = input.load()?;
            let selector = selector_from(selector)?;
            let result = s_selector_with(&signal, &selector, range, &eval.options(signal.grid()))?;
            emit_square(&out, &result)
        }
        Command::Sup { input, inf, eval } => {
            let (signal, range) = input.load()?;
            let opts = eval.options(signal.grid());
            let result = if *inf {
                s_inf_with(&signal, range, &opts)?
            } else {
                s_sup_with(&signal, range, &opts)?
            };
            emit_square(&out, &result)
        }
        Command::Bmo {
            input,
            selector,
            raw,
            levels,
        } => {
            let (signal, range) = input.load()?;
            let grid = *signal.grid();
            let values = if *raw {
                signal.values().to_vec()
            } else {
                square_values(&signal, selector.as_deref(), range)?
            };
            let (lo, hi) = levels.map_or((grid.k_min, window_level(&grid)), |l| (l.lo, l.hi));
            let intervals = intervals_inside(&grid, lo, hi)?;
            if intervals.is_empty() {
                return Err(Failure::Usage(format!("no dyadic interval of levels {lo}:{hi} fits in the window")));
            }
            let (value, report) = bmo_over(&grid, &values, &intervals)?;
            let mut csv = String::from("bmo,k,m,lo,hi,minimizer,sample_count\n");
            let i = report.interval;
            let _ = writeln!(
                csv,
                "{value},{},{},{},{},{},{}",
                i.k,
                i.m,
                i.lo(),
                i.hi(),
                report.minimizer,
                report.sample_count
            );
            out.emit(&csv, json!({ "bmo": value, "witness": report }))
        }
        Command::Pnorm { input, p, selector } => {
            let (signal, range) = input.load()?;
            let grid = *signal.grid();
            let values = square_values(&signal, selector.as_deref(), range)?;
            let square = lp_norm(&grid, &values, *p)?;
            let base = lp_norm(&grid, signal.values(), *p)?;
            let ratio = square / base;
            let csv = format!("p,signal_norm,square_norm,ratio\n{p},{base},{square},{ratio}\n");
            out.emit(
                &csv,
                json!({ "p": p, "signal_norm": base, "square_norm": square, "ratio": ratio }),
            )
        }
        Command::Construct { which, out_dir } => construct(&out, cli.format, which, out_dir),
        Command::Certify { input } => {
            let (signal, range) = input.load()?;
            let certs = certify_sweep(&signal, range)?;
            let failures = certs.iter().filter(|c| !c.passed).count();
            let worst = certs.iter().map(|c| c.ratio).fold(0.0, f64::max);
            let mut csv = String::from("k,m,mean_deviation,ratio,constant,snap_distance,small_scale_residual,passed\n");
            for c in &certs {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{}",
                    c.interval.k,
                    c.interval.m,
                    c.mean_deviation,
                    c.ratio,
                    c.constant,
                    c.snap_distance,
                    c.small_scale_residual,
                    c.passed
                );
            }
            out.emit(
                &csv,
                json!({
                    "count": certs.len(),
                    "failures": failures,
                    "largest_ratio": worst,
                    "certificates": certs,
                }),
            )?;
            if failures > 0 {
                return Err(Failure::Check(format!("{failures} of {} certificates failed", certs.len())));
            }
            Ok(())
        }
        Command::Adversary {
            input,
            window,
            selector_out,
        } => {
            let (signal, range) = input.load()?;
            let report = adversarial_bmo(&signal, range, window.map(|w| (w.lo, w.hi)), cli.seed)?;
            if let Some(path) = selector_out {
                Selector::Tabulated(report.selector.clone()).write(path)?;
            }
            let w = report.witness;
            let csv = format!(
                "k,m,planned,achieved,baseline,realization_error\n{},{},{},{},{},{}\n",
                w.k, w.m, report.planned, report.achieved, report.baseline, report.realization_error
            );
            let mut value = serde_json::to_value(&report).expect("report serializes");
            if selector_out.is_some() {
                value.as_object_mut().expect("object").remove("selector");
            }
            out.emit(&csv, value)
        }
        Command::Bench {
            log_length,
            span,
            repeats,
        } => bench(&out, *log_length, *span, *repeats, cli.seed),
        Command::Tail { signal, k_hi } => {
            let signal = Signal::read(signal)?;
            let bound = tail_bound(&signal, *k_hi);
            let l1 = signal.l1_norm();
            out.emit(
                &format!("k_hi,l1_norm,tail_bound\n{k_hi},{l1},{bound}\n"),
                json!({ "k_hi": k_hi, "l1_norm": l1, "tail_bound": bound }),
            )
        }
    }
}

fn square_values(signal: &Signal, selector: Option<&str>, range: ScaleRange) -> Result<Vec<f64>, Failure> {
    let opts = EvalOptions::default();
    Ok(match selector {
        None | Some("sup") => s_sup_with(signal, range, &opts)?.values,
        Some(spec) => s_selector_with(signal, &selector_from(spec)?, range, &opts)?.values,
    })
}

fn emit_square(out: &Emitter, result: &SquareFunctionResult) -> Result<(), Failure> {
    let mut csv = String::from("x,value,tail_bound");
    let terms = result.per_scale_terms.as_deref().unwrap_or(&[]);
    for t in terms {
        let _ = write!(csv, ",term_{}", t.k);
    }
    csv.push('\n');
    for (i, (x, v)) in result.eval_points.iter().zip(&result.values).enumerate() {
        let _ = write!(csv, "{x},{v},{}", result.tail_bound);
        for t in terms {
            let _ = write!(csv, ",{}", t.terms[i]);
        }
        csv.push('\n');
    }
    out.emit(&csv, serde_json::to_value(result).expect("result serializes"))
}

fn write_signal(signal: &Signal, dir: &Path, format: Format) -> Result<PathBuf, Failure> {
    let path = dir.join(match format {
        Format::Csv => "signal.csv",
        Format::Json => "signal.json",
    });
    signal.write(&path)?;
    Ok(path)
}

fn construct(out: &Emitter, format: Format, which: &Construction, dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(Error::from)?;
    let selector_path = dir.join("selector.json");
    let halfline = |ex: HalflineExample| -> Result<(), Failure> {
        let signal_path = write_signal(&ex.signal, dir, format)?;
        ex.selector.write(&selector_path)?;
        let first = ex.first_scale();
        let mut csv = format!(
            "# signal={}\n# selector={}\nk_hi,predicted_lower_bound\n",
            signal_path.display(),
            selector_path.display()
        );
        let mut rows = Vec::new();
        for count in 1..=ex.w {
            let k_hi = first + count as i32 - 1;
            let _ = writeln!(csv, "{k_hi},{}", ex.predicted(count));
            rows.push(json!({ "scales": [first, k_hi], "predicted_lower_bound": ex.predicted(count) }));
        }
        out.emit(
            &csv,
            json!({ "signal": signal_path, "selector": selector_path, "predictions": rows }),
        )
    };
    match which {
        Construction::Halfline { w } => halfline(halfline_example(*w)?),
        Construction::Integer { w } => halfline(integer_example(*w)?),
        Construction::Escape { ell_max, resolution } => {
            let ex = bmo_escape_example(*ell_max, *resolution)?;
            let signal_path = write_signal(&ex.signal, dir, format)?;
            ex.selector.write(&selector_path)?;
            let table_path = dir.join("pn_table.json");
            let table = serde_json::to_string_pretty(&ex.table).map_err(Error::from)?;
            std::fs::write(&table_path, table).map_err(Error::from)?;
            let mut csv = format!(
                "# signal={}\n# selector={}\n# pn_table={}\n# scales={}:{}\nell,p_upper,n_lower,oscillation_lower\n",
                signal_path.display(),
                selector_path.display(),
                table_path.display(),
                ex.range.k_lo,
                ex.range.k_hi
            );
            let predictions: Vec<_> = (3..=*ell_max).map(|l| ex.prediction(l)).collect();
            for p in &predictions {
                let _ = writeln!(csv, "{},{},{},{}", p.ell, p.p_upper, p.n_lower, p.oscillation_lower);
            }
            out.emit(
                &csv,
                json!({
                    "signal": signal_path,
                    "selector": selector_path,
                    "pn_table": table_path,
                    "scales": ex.range,
                    "predictions": predictions,
                }),
            )
        }
    }
}

fn bench(out: &Emitter, log_length: u32, span: u32, repeats: usize, seed: u64) -> Result<(), Failure> {
    if log_length > 24 || span > log_length + 1 || repeats == 0 {
        return Err(Failure::Usage("need log_length <= 24, span <= log_length + 1, repeats >= 1".into()));
    }
    let grid = GridSpec::real(0, 0, 1 << log_length)?;
    let signal = random_steps(grid, seed)?;
    let k = span as i32;
    let time = |f: &dyn Fn() -> Result<(), Error>| -> Result<f64, Failure> {
        let mut best = f64::INFINITY;
        for _ in 0..repeats {
            let t = Instant::now();
            f()?;
            best = best.min(t.elapsed().as_secs_f64());
        }
        Ok(best)
    };
    let deque = time(&|| window_extrema(&signal, k).map(drop))?;
    let naive = time(&|| window_extrema_naive(&signal, k).map(drop))?;
    if window_extrema(&signal, k)?.max_sum != window_extrema_naive(&signal, k)?.max_sum {
        return Err(Failure::Check("deque and scan disagree".into()));
    }
    let speedup = naive / deque.max(1e-12);
    let n = 1u64 << log_length;
    let cells = 1u64 << span;
    let csv = format!(
        "method,length,span_cells,seconds\ndeque,{n},{cells},{deque:.6}\nnaive,{n},{cells},{naive:.6}\n# speedup={speedup:.1}\n"
    );
    out.emit(
        &csv,
        json!({
            "length": n,
            "span_cells": cells,
            "deque_seconds": deque,
            "naive_seconds": naive,
            "speedup": speedup,
        }),
    )
}
