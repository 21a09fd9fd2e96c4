//! Evaluation against an oracle and inference benchmarking.

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{Oracle, RunState};
use crate::wfa::{Wfa, Word};

/// Exhaustive scans refuse to enumerate more words than this.
pub const EXHAUSTIVE_WORD_LIMIT: u128 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthError {
    pub len: usize,
    pub count: usize,
    pub mse: f64,
    pub max_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub mse: f64,
    /// Present for exhaustive evaluations.
    pub sup_error: Option<f64>,
    pub n_eval: usize,
    pub per_length: Vec<LengthError>,
}

#[derive(Default)]
struct Accumulator {
    // (count, sum of squares, max abs) per length
    by_len: Vec<(usize, f64, f64)>,
}

impl Accumulator {
    fn add(&mut self, len: usize, gap: f64) {
        if self.by_len.len() <= len {
            self.by_len.resize(len + 1, (0, 0.0, 0.0));
        }
        let slot = &mut self.by_len[len];
        slot.0 += 1;
        slot.1 += gap * gap;
        slot.2 = slot.2.max(gap.abs());
    }

    fn finish(self, exhaustive: bool) -> EvalResult {
        let n: usize = self.by_len.iter().map(|s| s.0).sum();
        let total: f64 = self.by_len.iter().map(|s| s.1).sum();
        let sup = self.by_len.iter().map(|s| s.2).fold(0.0, f64::max);
        let per_length = self
            .by_len
            .into_iter()
            .enumerate()
            .filter(|(_, s)| s.0 > 0)
            .map(|(len, (count, sq, max_abs))| LengthError { len, count, mse: sq / count as f64, max_abs })
            .collect();
        EvalResult { mse: total / n as f64, sup_error: exhaustive.then_some(sup), n_eval: n, per_length }
    }
}

/// Mean of `(f_A(w) − f_R(w))²` over `words`.
pub fn mse<O: Oracle + ?Sized>(oracle: &O, wfa: &Wfa, words: &[Word]) -> Result<EvalResult> {
    if words.is_empty() {
        return Err(Error::EmptyWordList);
    }
    let mut acc = Accumulator::default();
    for w in words {
        wfa.alphabet().check(w)?;
        acc.add(w.len(), wfa.weight_unchecked(w) - oracle.output(w));
    }
    Ok(acc.finish(false))
}

/// Number of words of length at most `max_len` over `k` symbols.
pub fn count_words(k: usize, max_len: usize) -> u128 {
    let mut total: u128 = 0;
    let mut layer: u128 = 1;
    for _ in 0..=max_len {
        total = total.saturating_add(layer);
        layer = layer.saturating_mul(k as u128);
    }
    total
}

/// Evaluates every word of length at most `max_len`.
pub fn exhaustive_eval<O: Oracle + ?Sized>(oracle: &O, wfa: &Wfa, max_len: usize) -> Result<EvalResult> {
    let k = oracle.alphabet().len();
    if oracle.alphabet() != wfa.alphabet() {
        return Err(Error::Alphabet("oracle and WFA alphabets differ".into()));
    }
    let total = count_words(k, max_len);
    if total > EXHAUSTIVE_WORD_LIMIT {
        return Err(Error::TooManyWords(total));
    }
    let mut acc = Accumulator::default();
    let mut stack: Vec<(usize, RunState, Vec<f64>)> = vec![(0, oracle.start(), wfa.alpha().to_vec())];
    while let Some((len, run, config)) = stack.pop() {
        acc.add(len, wfa.output_of(&config) - oracle.read_output(&run));
        if len < max_len {
            for s in 0..k {
                stack.push((len + 1, oracle.advance(&run, s), wfa.transition(s).left_mul(&config)));
            }
        }
    }
    Ok(acc.finish(true))
}

/// `max |f_A(w) − f_R(w)|` over every word of length at most `max_len`.
pub fn sup_error_exhaustive<O: Oracle + ?Sized>(oracle: &O, wfa: &Wfa, max_len: usize) -> Result<f64> {
    Ok(exhaustive_eval(oracle, wfa, max_len)?.sup_error.unwrap_or(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub oracle_ns_per_word: f64,
    pub wfa_ns_per_word: f64,
    pub speedup_ratio: f64,
    pub oracle_ns_std: f64,
    pub wfa_ns_std: f64,
    pub repetitions: usize,
    pub n_words: usize,
    pub mean_len: f64,
    /// Number of benchmark words of each length.
    pub length_histogram: Vec<usize>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn time_per_word(words: &[Word], mut f: impl FnMut(&Word) -> f64) -> f64 {
    let start = Instant::now();
    let mut sink = 0.0;
    for w in words {
        sink += f(black_box(w));
    }
    black_box(sink);
    (start.elapsed().as_nanos().max(1)) as f64 / words.len() as f64
}

/// Times pure inference of the oracle and the WFA over `words`. One warmup
/// pass of each precedes the `repetitions` timed passes.
pub fn bench<O: Oracle + ?Sized>(oracle: &O, wfa: &Wfa, words: &[Word], repetitions: usize) -> Result<BenchResult> {
    if words.is_empty() {
        return Err(Error::EmptyWordList);
    }
    if repetitions == 0 {
        return Err(Error::InvalidParameter("at least one repetition".into()));
    }
    for w in words {
        wfa.alphabet().check(w)?;
    }
    time_per_word(words, |w| oracle.output(w));
    time_per_word(words, |w| wfa.weight_unchecked(w));
    let mut oracle_ns = Vec::with_capacity(repetitions);
    let mut wfa_ns = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        oracle_ns.push(time_per_word(words, |w| oracle.output(w)));
        wfa_ns.push(time_per_word(words, |w| wfa.weight_unchecked(w)));
    }
    let (o_mean, o_std) = mean_std(&oracle_ns);
    let (w_mean, w_std) = mean_std(&wfa_ns);
    let max_len = words.iter().map(Vec::len).max().unwrap_or(0);
    let mut length_histogram = vec![0; max_len + 1];
    for w in words {
        length_histogram[w.len()] += 1;
    }
    Ok(BenchResult {
        oracle_ns_per_word: o_mean,
        wfa_ns_per_word: w_mean,
        speedup_ratio: o_mean / w_mean,
        oracle_ns_std: o_std,
        wfa_ns_std: w_std,
        repetitions,
        n_words: words.len(),
        mean_len: words.iter().map(Vec::len).sum::<usize>() as f64 / words.len() as f64,
        length_histogram,
    })
}
