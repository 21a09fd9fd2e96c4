use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use wfex::datagen::{
    build_wparen_dataset, from_jsonl, random_wfa, sample_block, sample_block_fixed,
    sample_uniform_excluding, to_jsonl,
};
use wfex::harness::{bench, exhaustive_eval, mse};
use wfex::learner::extract_with_trace;
use wfex::oracle::wparen_alphabet;
use wfex::regression::RegressorSettings;
use wfex::search::TraceEvent;
use wfex::table::ObservationTable;
use wfex::{
    Alphabet, CachedOracle, EqEngine, ExtractionConfig, LstmOracle, Oracle, RnnWeights, Wfa, WfaOracle,
    WparenOracle, Word,
};

#[derive(Parser)]
#[command(name = "wfex", version, about = "Extract weighted finite automata from stateful scorers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random WFA with outputs in [0, 1].
    GenWfa {
        #[arg(long)]
        alphabet_size: usize,
        #[arg(long)]
        states: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample words into a JSONL dataset.
    GenData(GenData),
    /// Write the weighted-parentheses train and test splits.
    GenWparen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_train: PathBuf,
        #[arg(long)]
        out_test: PathBuf,
    },
    /// Run weighted L* against an oracle.
    Extract(Box<ExtractArgs>),
    /// Compare an extracted WFA with its oracle.
    Eval {
        #[arg(long)]
        oracle: String,
        #[arg(long)]
        wfa: PathBuf,
        #[arg(long, conflicts_with = "exhaustive_len", required_unless_present = "exhaustive_len")]
        data: Option<PathBuf>,
        #[arg(long)]
        exhaustive_len: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time oracle and WFA inference on a dataset.
    Bench {
        #[arg(long)]
        oracle: String,
        #[arg(long)]
        wfa: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a WFA as Graphviz DOT.
    ExportDot {
        #[arg(long)]
        wfa: PathBuf,
        /// Transition entries at or below this magnitude are omitted.
        #[arg(long, default_value_t = 0.01)]
        threshold: f64,
        /// Values at least this large are tagged for emphasis.
        #[arg(long, default_value_t = 0.1)]
        emphasis: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Sampler {
    Uniform,
    Block,
}

#[derive(Args)]
struct GenData {
    #[arg(long, value_enum)]
    sampler: Sampler,
    #[arg(long)]
    alphabet_size: usize,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 20)]
    max_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fixed number of blocks per word (block sampler only).
    #[arg(long)]
    blocks: Option<usize>,
    /// Oracle used for labels; labels are 0 without one.
    #[arg(long)]
    label: Option<String>,
    /// JSONL dataset whose words must not be drawn again.
    #[arg(long)]
    exclude: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    Regr,
    Bfs,
}

#[derive(Args)]
struct ExtractArgs {
    /// `wfa:PATH`, `rnn:PATH` or `wparen`.
    #[arg(long)]
    oracle: String,
    #[arg(long, value_enum, default_value = "regr")]
    eq: Engine,
    /// Concentration threshold of the best-first search.
    #[arg(long = "M", default_value_t = 5)]
    concentration: usize,
    /// Words scanned per bfs query.
    #[arg(long = "n", default_value_t = 500)]
    n: u64,
    #[arg(long = "e", default_value_t = 0.05)]
    e: f64,
    /// Length heuristic.
    #[arg(long = "L", default_value_t = 20)]
    max_len: usize,
    #[arg(long, default_value_t = 1e-2)]
    tau0: f64,
    #[arg(long, default_value_t = 0.5)]
    decay: f64,
    #[arg(long, default_value_t = 50)]
    max_rounds: usize,
    #[arg(long, default_value_t = 100_000)]
    max_pops: usize,
    #[arg(long, default_value_t = 1.0)]
    length_scale: f64,
    #[arg(long, default_value_t = 1e-10)]
    ridge: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Search trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Final observation table as CSV.
    #[arg(long)]
    dump_table: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_wfa(path: &Path) -> Result<Wfa> {
    Wfa::from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_oracle(source: &str) -> Result<Box<dyn Oracle>> {
    if source == "wparen" {
        return Ok(Box::new(WparenOracle::new()));
    }
    match source.split_once(':') {
        Some(("wfa", path)) => Ok(Box::new(WfaOracle::new(load_wfa(Path::new(path))?))),
        Some(("rnn", path)) => {
            let weights = RnnWeights::from_json(&read(Path::new(path))?).with_context(|| format!("parsing {path}"))?;
            let alphabet = Alphabet::new(weights.alphabet.iter().cloned())?;
            Ok(Box::new(LstmOracle::new(&weights, alphabet)?))
        }
        _ => bail!("unknown oracle {source:?}; expected wfa:PATH, rnn:PATH or wparen"),
    }
}

fn load_words(alphabet: &Alphabet, path: &Path) -> Result<Vec<Word>> {
    let items = from_jsonl(alphabet, &read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Ok(items.into_iter().map(|(w, _)| w).collect())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn gen_data(args: GenData) -> Result<()> {
    let labeler = args.label.as_deref().map(load_oracle).transpose()?;
    let alphabet = match &labeler {
        Some(o) => {
            if o.alphabet().len() != args.alphabet_size {
                bail!("labelling oracle has {} symbols, expected {}", o.alphabet().len(), args.alphabet_size);
            }
            o.alphabet().clone()
        }
        None => Alphabet::letters(args.alphabet_size)?,
    };
    let exclude: HashSet<Word> = match &args.exclude {
        Some(p) => load_words(&alphabet, p)?.into_iter().collect(),
        None => HashSet::new(),
    };
    let words = match (args.sampler, args.blocks) {
        (Sampler::Uniform, Some(_)) => bail!("--blocks only applies to the block sampler"),
        (Sampler::Uniform, None) => {
            sample_uniform_excluding(&alphabet, args.max_len, args.count, args.seed, &exclude)?
        }
        (Sampler::Block, blocks) => {
            // draw batches from successive seeds until enough fresh words remain
            let mut out = Vec::with_capacity(args.count);
            let mut seed = args.seed;
            let mut stalled = 0;
            while out.len() < args.count {
                let batch = match blocks {
                    Some(b) => sample_block_fixed(&alphabet, b, args.max_len, args.count, seed)?,
                    None => sample_block(&alphabet, args.max_len, args.count, seed),
                };
                let before = out.len();
                out.extend(batch.into_iter().filter(|w| !exclude.contains(w)).take(args.count - before));
                stalled = if out.len() == before { stalled + 1 } else { 0 };
                if stalled > 100 {
                    bail!("too few block words outside the excluded set");
                }
                seed = seed.wrapping_add(1);
            }
            out
        }
    };
    let items: Vec<(Word, f64)> = words
        .into_iter()
        .map(|w| {
            let y = labeler.as_ref().map_or(0.0, |o| o.output(&w));
            (w, y)
        })
        .collect();
    write(&args.out, &to_jsonl(&alphabet, &items))
}

fn run_extract(args: &ExtractArgs) -> Result<()> {
    let oracle = load_oracle(&args.oracle)?;
    let engine = match args.eq {
        Engine::Regr => EqEngine::Regression { concentration: args.concentration },
        Engine::Bfs => EqEngine::Bfs { n: args.n },
    };
    let cfg = ExtractionConfig {
        e: args.e,
        max_len: args.max_len,
        tau0: args.tau0,
        decay: args.decay,
        engine,
        max_eq_rounds: args.max_rounds,
        max_pops: args.max_pops,
        regressor: RegressorSettings { length_scale: args.length_scale, ridge: args.ridge },
        seed: args.seed,
    };
    let mut trace_out = match &args.trace {
        Some(p) => Some(std::io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => None,
    };
    let mut trace_err = None;
    let report = extract_with_trace(&*oracle, &cfg, &mut |ev: TraceEvent| {
        if let Some(w) = trace_out.as_mut() {
            let line = serde_json::to_string(&ev).expect("trace serialization");
            if let Err(e) = writeln!(w, "{line}") {
                trace_err.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = trace_err {
        return Err(e).context("writing trace");
    }
    if let Some(mut w) = trace_out {
        w.flush().context("writing trace")?;
    }
    write(&args.out, &report.wfa.to_json())?;
    if let Some(p) = &args.report {
        write(p, &report.to_json())?;
    }
    if let Some(p) = &args.dump_table {
        let cached = CachedOracle::new(&*oracle);
        let table = ObservationTable::from_words(&cached, &report.state.access, &report.state.tests)?;
        write(p, &table.to_csv())?;
    }
    eprintln!(
        "{} states after {} rounds ({:?}), {} membership queries",
        report.wfa.n_states(),
        report.n_rounds(),
        report.status,
        report.queries.membership_queries
    );
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenWfa { alphabet_size, states, seed, out } => {
            let wfa = random_wfa(&Alphabet::letters(alphabet_size)?, states, seed)?;
            write(&out, &wfa.to_json())
        }
        Command::GenData(args) => gen_data(args),
        Command::GenWparen { seed, out_train, out_test } => {
            let (train, test) = build_wparen_dataset(seed);
            let ab = wparen_alphabet();
            write(&out_train, &to_jsonl(&ab, &train))?;
            write(&out_test, &to_jsonl(&ab, &test))
        }
        Command::Extract(args) => run_extract(&args),
        Command::Eval { oracle, wfa, data, exhaustive_len, out } => {
            let oracle = load_oracle(&oracle)?;
            let wfa = load_wfa(&wfa)?;
            if wfa.alphabet() != oracle.alphabet() {
                bail!("WFA and oracle alphabets differ");
            }
            let result = match (data, exhaustive_len) {
                (Some(p), _) => mse(&*oracle, &wfa, &load_words(oracle.alphabet(), &p)?)?,
                (None, Some(len)) => exhaustive_eval(&*oracle, &wfa, len)?,
                (None, None) => unreachable!("clap requires one of --data and --exhaustive-len"),
            };
            emit(out.as_deref(), &serde_json::to_string_pretty(&result)?)
        }
        Command::Bench { oracle, wfa, data, reps, out } => {
            let oracle = load_oracle(&oracle)?;
            let wfa = load_wfa(&wfa)?;
            if wfa.alphabet() != oracle.alphabet() {
                bail!("WFA and oracle alphabets differ");
            }
            let words = load_words(oracle.alphabet(), &data)?;
            let result = bench(&*oracle, &wfa, &words, reps)?;
            emit(out.as_deref(), &serde_json::to_string_pretty(&result)?)
        }
        Command::ExportDot { wfa, threshold, emphasis, out } => {
            let dot = load_wfa(&wfa)?.export_dot(threshold, emphasis);
            match out {
                Some(p) => write(&p, &dot),
                None => {
                    print!("{dot}");
                    Ok(())
                }
            }
        }
    }
}
