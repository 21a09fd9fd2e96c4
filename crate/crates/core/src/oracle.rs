//! Black-box stateful scorers.
//!
//! An [`Oracle`] exposes an output `f(w)` and an internal configuration
//! `δ(w) ∈ ℝ^d` for every word. Scorers are driven through opaque run
//! handles ([`RunState`]) so callers can resume a run from any prefix.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, Matrix};
use crate::wfa::{Alphabet, Wfa, Word};

/// Opaque state of a single run. Only the oracle that produced it knows how
/// to interpret the numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct RunState(pub(crate) Vec<f64>);

pub trait Oracle: Send + Sync {
    fn alphabet(&self) -> &Alphabet;

    /// Dimension of the configuration vectors.
    fn dim(&self) -> usize;

    fn start(&self) -> RunState;

    fn advance(&self, state: &RunState, symbol: usize) -> RunState;

    fn read_output(&self, state: &RunState) -> f64;

    fn read_config(&self, state: &RunState) -> Vec<f64>;

    fn run(&self, word: &[usize]) -> RunState {
        word.iter().fold(self.start(), |s, &c| self.advance(&s, c))
    }

    fn output(&self, word: &[usize]) -> f64 {
        self.read_output(&self.run(word))
    }

    fn config(&self, word: &[usize]) -> Vec<f64> {
        self.read_config(&self.run(word))
    }
}

impl<O: Oracle + ?Sized> Oracle for &O {
    fn alphabet(&self) -> &Alphabet {
        (**self).alphabet()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn start(&self) -> RunState {
        (**self).start()
    }
    fn advance(&self, state: &RunState, symbol: usize) -> RunState {
        (**self).advance(state, symbol)
    }
    fn read_output(&self, state: &RunState) -> f64 {
        (**self).read_output(state)
    }
    fn read_config(&self, state: &RunState) -> Vec<f64> {
        (**self).read_config(state)
    }
    fn output(&self, word: &[usize]) -> f64 {
        (**self).output(word)
    }
    fn config(&self, word: &[usize]) -> Vec<f64> {
        (**self).config(word)
    }
}

impl<O: Oracle + ?Sized> Oracle for Box<O> {
    fn alphabet(&self) -> &Alphabet {
        (**self).alphabet()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn start(&self) -> RunState {
        (**self).start()
    }
    fn advance(&self, state: &RunState, symbol: usize) -> RunState {
        (**self).advance(state, symbol)
    }
    fn read_output(&self, state: &RunState) -> f64 {
        (**self).read_output(state)
    }
    fn read_config(&self, state: &RunState) -> Vec<f64> {
        (**self).read_config(state)
    }
    fn output(&self, word: &[usize]) -> f64 {
        (**self).output(word)
    }
    fn config(&self, word: &[usize]) -> Vec<f64> {
        (**self).config(word)
    }
}

// ---------------------------------------------------------------------------
// WFA-backed oracle

/// Uses a WFA as an exact scorer: the configuration is the WFA configuration.
#[derive(Clone, Debug)]
pub struct WfaOracle {
    wfa: Wfa,
}

impl WfaOracle {
    pub fn new(wfa: Wfa) -> Self {
        WfaOracle { wfa }
    }

    pub fn wfa(&self) -> &Wfa {
        &self.wfa
    }
}

impl Oracle for WfaOracle {
    fn alphabet(&self) -> &Alphabet {
        self.wfa.alphabet()
    }
    fn dim(&self) -> usize {
        self.wfa.n_states()
    }
    fn start(&self) -> RunState {
        RunState(self.wfa.alpha().to_vec())
    }
    fn advance(&self, state: &RunState, symbol: usize) -> RunState {
        RunState(self.wfa.transition(symbol).left_mul(&state.0))
    }
    fn read_output(&self, state: &RunState) -> f64 {
        self.wfa.output_of(&state.0)
    }
    fn read_config(&self, state: &RunState) -> Vec<f64> {
        state.0.clone()
    }
}

// ---------------------------------------------------------------------------
// Two-layer LSTM

/// Weights of one LSTM layer. Gate blocks are stacked in the order
/// input, forget, cell candidate, output.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LstmLayer {
    /// `4h × in`
    pub w_x: Vec<Vec<f64>>,
    /// `4h × h`
    pub w_h: Vec<Vec<f64>>,
    /// `4h`
    pub b: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputHead {
    pub w: Vec<f64>,
    pub b: f64,
}

/// Serialized two-layer LSTM with one-hot inputs and a sigmoid head.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RnnWeights {
    pub hidden: usize,
    pub alphabet: Vec<String>,
    pub layers: Vec<LstmLayer>,
    pub head: OutputHead,
}

impl RnnWeights {
    pub fn zeros(hidden: usize, alphabet: &Alphabet) -> Self {
        let layer = |input: usize| LstmLayer {
            w_x: vec![vec![0.0; input]; 4 * hidden],
            w_h: vec![vec![0.0; hidden]; 4 * hidden],
            b: vec![0.0; 4 * hidden],
        };
        RnnWeights {
            hidden,
            alphabet: alphabet.symbols().to_vec(),
            layers: vec![layer(alphabet.len()), layer(hidden)],
            head: OutputHead { w: vec![0.0; hidden], b: 0.0 },
        }
    }

    /// Weights drawn uniformly from `±1/√h`, the usual LSTM initialisation.
    pub fn random(hidden: usize, alphabet: &Alphabet, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.random_range(-bound..bound)).collect()
        };
        let mut layer = |input: usize| LstmLayer {
            w_x: (0..4 * hidden).map(|_| draw(input)).collect(),
            w_h: (0..4 * hidden).map(|_| draw(hidden)).collect(),
            b: draw(4 * hidden),
        };
        let layers = vec![layer(alphabet.len()), layer(hidden)];
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let head = OutputHead {
            w: (0..hidden).map(|_| rng.random_range(-bound..bound)).collect(),
            b: rng.random_range(-bound..bound),
        };
        RnnWeights { hidden, alphabet: alphabet.symbols().to_vec(), layers, head }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("weights serialization")
    }
}

/// Which hidden quantities form the exposed configuration vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LstmConfigMode {
    /// `(h₁, h₂)`, dimension `2h`.
    #[default]
    Hidden,
    /// `(h₁, c₁, h₂, c₂)`, dimension `4h`.
    HiddenAndCell,
}

#[derive(Clone, Debug)]
struct DenseLayer {
    w_x: Matrix,
    w_h: Matrix,
    b: Vec<f64>,
}

/// Two-layer LSTM scorer. Run states hold `(h₁, c₁, h₂, c₂)`; all start at 0.
#[derive(Clone, Debug)]
pub struct LstmOracle {
    alphabet: Alphabet,
    hidden: usize,
    layers: [DenseLayer; 2],
    head_w: Vec<f64>,
    head_b: f64,
    mode: LstmConfigMode,
}

impl LstmOracle {
    pub fn new(weights: &RnnWeights, alphabet: Alphabet) -> Result<Self> {
        Self::with_mode(weights, alphabet, LstmConfigMode::Hidden)
    }

    pub fn with_mode(weights: &RnnWeights, alphabet: Alphabet, mode: LstmConfigMode) -> Result<Self> {
        let h = weights.hidden;
        if h == 0 {
            return Err(Error::Schema("hidden size must be positive".into()));
        }
        if weights.alphabet != alphabet.symbols() {
            return Err(Error::Schema("weights were exported for a different alphabet".into()));
        }
        if weights.layers.len() != 2 {
            return Err(Error::Schema(format!("expected 2 layers, got {}", weights.layers.len())));
        }
        let mut dense = Vec::with_capacity(2);
        for (l, layer) in weights.layers.iter().enumerate() {
            let input = if l == 0 { alphabet.len() } else { h };
            let w_x = shaped(&layer.w_x, 4 * h, input, &format!("layers[{l}].w_x"))?;
            let w_h = shaped(&layer.w_h, 4 * h, h, &format!("layers[{l}].w_h"))?;
            if layer.b.len() != 4 * h {
                return Err(Error::Schema(format!("layers[{l}].b must have {} entries", 4 * h)));
            }
            if layer.b.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("layers[{l}].b")));
            }
            dense.push(DenseLayer { w_x, w_h, b: layer.b.clone() });
        }
        if weights.head.w.len() != h {
            return Err(Error::Schema(format!("head.w must have {h} entries")));
        }
        if weights.head.w.iter().any(|v| !v.is_finite()) || !weights.head.b.is_finite() {
            return Err(Error::NonFinite("head".into()));
        }
        let second = dense.pop().unwrap();
        let first = dense.pop().unwrap();
        Ok(LstmOracle {
            alphabet,
            hidden: h,
            layers: [first, second],
            head_w: weights.head.w.clone(),
            head_b: weights.head.b,
            mode,
        })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// One LSTM cell update; `input` is the gate pre-activation contribution
    /// from the layer input.
    fn cell(&self, layer: &DenseLayer, input_gates: Vec<f64>, h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.hidden;
        let mut gates = input_gates;
        for (g, b) in gates.iter_mut().zip(&layer.b) {
            *g += b;
        }
        for (r, g) in gates.iter_mut().enumerate() {
            *g += dot(layer.w_h.row(r), h);
        }
        let mut h_new = vec![0.0; n];
        let mut c_new = vec![0.0; n];
        for k in 0..n {
            let i = sigmoid(gates[k]);
            let f = sigmoid(gates[n + k]);
            let g = gates[2 * n + k].tanh();
            let o = sigmoid(gates[3 * n + k]);
            c_new[k] = f * c[k] + i * g;
            h_new[k] = o * c_new[k].tanh();
        }
        (h_new, c_new)
    }
}

fn shaped(rows: &[Vec<f64>], r: usize, c: usize, what: &str) -> Result<Matrix> {
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Schema(format!("{what} must be {r}x{c}")));
    }
    Matrix::from_rows(rows).map_err(|e| match e {
        Error::NonFinite(_) => Error::NonFinite(what.to_string()),
        other => other,
    })
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Oracle for LstmOracle {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn dim(&self) -> usize {
        match self.mode {
            LstmConfigMode::Hidden => 2 * self.hidden,
            LstmConfigMode::HiddenAndCell => 4 * self.hidden,
        }
    }

    fn start(&self) -> RunState {
        RunState(vec![0.0; 4 * self.hidden])
    }

    fn advance(&self, state: &RunState, symbol: usize) -> RunState {
        let n = self.hidden;
        let s = &state.0;
        let (h1, c1, h2, c2) = (&s[..n], &s[n..2 * n], &s[2 * n..3 * n], &s[3 * n..]);

        // one-hot input selects a column of w_x
        let l1 = &self.layers[0];
        let in1: Vec<f64> = (0..4 * n).map(|r| l1.w_x[(r, symbol)]).collect();
        let (h1n, c1n) = self.cell(l1, in1, h1, c1);

        let l2 = &self.layers[1];
        let in2: Vec<f64> = (0..4 * n).map(|r| dot(l2.w_x.row(r), &h1n)).collect();
        let (h2n, c2n) = self.cell(l2, in2, h2, c2);

        let mut next = Vec::with_capacity(4 * n);
        next.extend(h1n);
        next.extend(c1n);
        next.extend(h2n);
        next.extend(c2n);
        RunState(next)
    }

    fn read_output(&self, state: &RunState) -> f64 {
        let n = self.hidden;
        sigmoid(dot(&self.head_w, &state.0[2 * n..3 * n]) + self.head_b)
    }

    fn read_config(&self, state: &RunState) -> Vec<f64> {
        let n = self.hidden;
        match self.mode {
            LstmConfigMode::Hidden => {
                let mut v = state.0[..n].to_vec();
                v.extend_from_slice(&state.0[2 * n..3 * n]);
                v
            }
            LstmConfigMode::HiddenAndCell => state.0.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// Weighted balanced parentheses

pub const WPAREN_SYMBOLS: [&str; 12] = ["(", ")", "0", "1", "2", "3", "4", "5", "6", "7", "8", "9"];

pub fn wparen_alphabet() -> Alphabet {
    Alphabet::new(WPAREN_SYMBOLS).expect("static alphabet")
}

/// `1 − (1/2)^N` when every parenthesis in `word` is matched, where `N` is
/// the maximum nesting depth; `0` otherwise. Digits are ignored.
pub fn wparen_value(word: &str) -> Result<f64> {
    let mut stack = Vec::new();
    let mut deepest = 0usize;
    for c in word.chars() {
        match c {
            '(' => {
                stack.push(c);
                deepest = deepest.max(stack.len());
            }
            ')' => {
                if stack.pop().is_none() {
                    return Ok(0.0);
                }
            }
            '0'..='9' => {}
            other => return Err(Error::UnknownSymbol(other.to_string())),
        }
    }
    if !stack.is_empty() {
        return Ok(0.0);
    }
    Ok(1.0 - 0.5f64.powi(deepest as i32))
}

/// Hand-built state encoder for the weighted balanced-parentheses function.
///
/// Configuration: `(open depth, deepest completed pair, valid)`. An unmatched
/// closing parenthesis sends the run to the absorbing state `(0, 0, 0)`.
#[derive(Clone, Debug)]
pub struct WparenOracle {
    alphabet: Alphabet,
}

impl Default for WparenOracle {
    fn default() -> Self {
        WparenOracle { alphabet: wparen_alphabet() }
    }
}

impl WparenOracle {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Oracle for WparenOracle {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }
    fn dim(&self) -> usize {
        3
    }
    fn start(&self) -> RunState {
        RunState(vec![0.0, 0.0, 1.0])
    }
    fn advance(&self, state: &RunState, symbol: usize) -> RunState {
        let [depth, deepest, valid] = [state.0[0], state.0[1], state.0[2]];
        if valid == 0.0 {
            return state.clone();
        }
        match symbol {
            0 => RunState(vec![depth + 1.0, deepest, 1.0]),
            1 if depth == 0.0 => RunState(vec![0.0, 0.0, 0.0]),
            1 => RunState(vec![depth - 1.0, deepest.max(depth), 1.0]),
            _ => state.clone(),
        }
    }
    fn read_output(&self, state: &RunState) -> f64 {
        let [depth, deepest, valid] = [state.0[0], state.0[1], state.0[2]];
        if valid == 1.0 && depth == 0.0 {
            1.0 - 0.5f64.powi(deepest as i32)
        } else {
            0.0
        }
    }
    fn read_config(&self, state: &RunState) -> Vec<f64> {
        state.0.clone()
    }
}

// ---------------------------------------------------------------------------
// Constant scorer

/// Scorer with the same output for every word and a one-dimensional
/// configuration holding the word length.
#[derive(Clone, Debug)]
pub struct ConstantOracle {
    alphabet: Alphabet,
    value: f64,
}

impl ConstantOracle {
    pub fn new(alphabet: Alphabet, value: f64) -> Self {
        ConstantOracle { alphabet, value }
    }
}

impl Oracle for ConstantOracle {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }
    fn dim(&self) -> usize {
        1
    }
    fn start(&self) -> RunState {
        RunState(vec![0.0])
    }
    fn advance(&self, state: &RunState, _symbol: usize) -> RunState {
        RunState(vec![state.0[0] + 1.0])
    }
    fn read_output(&self, _state: &RunState) -> f64 {
        self.value
    }
    fn read_config(&self, state: &RunState) -> Vec<f64> {
        state.0.clone()
    }
}

// ---------------------------------------------------------------------------
// Memoization

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryStats {
    pub membership_queries: u64,
    pub distinct_words: u64,
    pub config_queries: u64,
}

/// Memoizing wrapper. Outputs and configurations are cached per word;
/// run-handle reads pass through but are still counted.
pub struct CachedOracle<O> {
    inner: O,
    outputs: Mutex<HashMap<Word, f64>>,
    configs: Mutex<HashMap<Word, Vec<f64>>>,
    membership: AtomicU64,
    config_queries: AtomicU64,
}

impl<O: Oracle> CachedOracle<O> {
    pub fn new(inner: O) -> Self {
        CachedOracle {
            inner,
            outputs: Mutex::new(HashMap::new()),
            configs: Mutex::new(HashMap::new()),
            membership: AtomicU64::new(0),
            config_queries: AtomicU64::new(0),
        }
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    pub fn stats(&self) -> QueryStats {
        QueryStats {
            membership_queries: self.membership.load(Ordering::Relaxed),
            distinct_words: self.outputs.lock().unwrap().len() as u64,
            config_queries: self.config_queries.load(Ordering::Relaxed),
        }
    }

    /// Drops every memoized value; counters are kept.
    pub fn clear(&self) {
        self.outputs.lock().unwrap().clear();
        self.configs.lock().unwrap().clear();
    }
}

impl<O: Oracle> Oracle for CachedOracle<O> {
    fn alphabet(&self) -> &Alphabet {
        self.inner.alphabet()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn start(&self) -> RunState {
        self.inner.start()
    }
    fn advance(&self, state: &RunState, symbol: usize) -> RunState {
        self.inner.advance(state, symbol)
    }
    fn read_output(&self, state: &RunState) -> f64 {
        self.membership.fetch_add(1, Ordering::Relaxed);
        self.inner.read_output(state)
    }
    fn read_config(&self, state: &RunState) -> Vec<f64> {
        self.config_queries.fetch_add(1, Ordering::Relaxed);
        self.inner.read_config(state)
    }

    fn output(&self, word: &[usize]) -> f64 {
        self.membership.fetch_add(1, Ordering::Relaxed);
        if let Some(v) = self.outputs.lock().unwrap().get(word) {
            return *v;
        }
        // computed outside the lock; concurrent misses compute the same value
        let v = self.inner.output(word);
        self.outputs.lock().unwrap().insert(word.to_vec(), v);
        v
    }

    fn config(&self, word: &[usize]) -> Vec<f64> {
        self.config_queries.fetch_add(1, Ordering::Relaxed);
        if let Some(v) = self.configs.lock().unwrap().get(word) {
            return v.clone();
        }
        let v = self.inner.config(word);
        self.configs.lock().unwrap().insert(word.to_vec(), v.clone());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wfa::example_wfa;

    #[test]
    fn wfa_oracle_matches_example() {
        let o = WfaOracle::new(example_wfa());
        let ba = o.alphabet().parse("ba").unwrap();
        assert_eq!(o.output(&ba), 21.0);
        assert_eq!(o.config(&[]), vec![1.0, 2.0, 3.0]);
        assert_eq!(o.dim(), 3);
    }

    #[test]
    fn zero_lstm_is_constant_one_half_with_zero_config() {
        let ab = Alphabet::new(["a", "b"]).unwrap();
        let o = LstmOracle::new(&RnnWeights::zeros(4, &ab), ab).unwrap();
        for w in [vec![], vec![0], vec![1, 0, 1, 1]] {
            assert_eq!(o.output(&w), 0.5);
            assert_eq!(o.config(&w), vec![0.0; 8]);
        }
        assert_eq!(o.dim(), 8);
    }

    #[test]
    fn lstm_config_modes() {
        let ab = Alphabet::new(["a", "b"]).unwrap();
        let w = RnnWeights::random(3, &ab, 7);
        let h = LstmOracle::new(&w, ab.clone()).unwrap();
        let hc = LstmOracle::with_mode(&w, ab, LstmConfigMode::HiddenAndCell).unwrap();
        assert_eq!(h.dim(), 6);
        assert_eq!(hc.dim(), 12);
        let word = [0, 1, 1];
        let full = hc.config(&word);
        let hidden = h.config(&word);
        assert_eq!(&hidden[..3], &full[..3]);
        assert_eq!(&hidden[3..], &full[6..9]);
        assert_eq!(h.output(&word), hc.output(&word));
    }

    #[test]
    fn lstm_single_step_hand_trace() {
        // h = 1, input gate bias only on the candidate: the first step gives
        // c = σ(0)·tanh(1), h = σ(0)·tanh(c)
        let ab = Alphabet::new(["a"]).unwrap();
        let mut w = RnnWeights::zeros(1, &ab);
        w.layers[0].b = vec![0.0, 0.0, 1.0, 0.0];
        let o = LstmOracle::new(&w, ab).unwrap();
        let c1 = 0.5 * 1f64.tanh();
        let h1 = 0.5 * c1.tanh();
        let cfg = o.config(&[0]);
        assert!((cfg[0] - h1).abs() < 1e-15);
        assert_eq!(cfg[1], 0.0);
    }

    #[test]
    fn lstm_shape_errors() {
        let ab = Alphabet::new(["a", "b"]).unwrap();
        let mut w = RnnWeights::zeros(2, &ab);
        w.layers[1].w_h.pop();
        assert!(matches!(LstmOracle::new(&w, ab.clone()), Err(Error::Schema(_))));

        let mut w = RnnWeights::zeros(2, &ab);
        w.head.b = f64::NAN;
        assert!(matches!(LstmOracle::new(&w, ab.clone()), Err(Error::NonFinite(_))));

        let w = RnnWeights::zeros(2, &ab);
        let other = Alphabet::new(["a", "c"]).unwrap();
        assert!(LstmOracle::new(&w, other).is_err());
    }

    #[test]
    fn weights_json_round_trip() {
        let ab = Alphabet::new(["x", "y", "z"]).unwrap();
        let w = RnnWeights::random(5, &ab, 3);
        let back = RnnWeights::from_json(&w.to_json()).unwrap();
        let o1 = LstmOracle::new(&w, ab.clone()).unwrap();
        let o2 = LstmOracle::new(&back, ab).unwrap();
        assert_eq!(o1.output(&[0, 2, 1]).to_bits(), o2.output(&[0, 2, 1]).to_bits());
    }

    #[test]
    fn wparen_values() {
        assert_eq!(wparen_value("((3)(7))))").unwrap(), 0.0);
        assert_eq!(wparen_value("((3)(7))").unwrap(), 0.75);
        assert_eq!(wparen_value("(0)(1)(2)").unwrap(), 0.5);
        assert_eq!(wparen_value("").unwrap(), 0.0);
        assert!(wparen_value("(a)").is_err());
    }

    #[test]
    fn wparen_encoder_traces() {
        let o = WparenOracle::new();
        let ab = o.alphabet().clone();
        assert_eq!(o.config(&ab.parse("((").unwrap()), vec![2.0, 0.0, 1.0]);
        assert_eq!(o.config(&ab.parse(")").unwrap()), vec![0.0, 0.0, 0.0]);
        assert_eq!(o.config(&ab.parse("(()))(").unwrap()), vec![0.0, 0.0, 0.0]);
        assert_eq!(o.config(&ab.parse("((3)(7))").unwrap()), vec![0.0, 2.0, 1.0]);
        assert_eq!(o.output(&ab.parse("((3)(7))").unwrap()), 0.75);
    }

    #[test]
    fn cache_counts_and_transparency() {
        let c = CachedOracle::new(WfaOracle::new(example_wfa()));
        let w = vec![1, 0];
        assert_eq!(c.output(&w), 21.0);
        assert_eq!(c.output(&w), 21.0);
        let s = c.stats();
        assert_eq!(s.membership_queries, 2);
        assert_eq!(s.distinct_words, 1);
        assert_eq!(c.config(&w), c.inner().config(&w));
        assert_eq!(c.stats().config_queries, 1);
        c.clear();
        assert_eq!(c.output(&w), 21.0);
        assert_eq!(c.stats().distinct_words, 1);
    }
}
