//! Weighted finite automata over the real semiring.
//!
//! Configurations are row vectors: reading a word multiplies the initial
//! vector on the right by one transition matrix per symbol, and the weight
//! of a word is the final configuration dotted with the final vector.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, Matrix};

/// A word, stored as indices into its [`Alphabet`].
pub type Word = Vec<usize>;

/// Finite, ordered set of symbols. A symbol's index is its position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::Alphabet("alphabet must be nonempty".into()));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::Alphabet(format!("duplicate symbol {s:?}")));
            }
        }
        Ok(Alphabet { symbols, index })
    }

    /// `a, b, c, …` for sizes up to 26, `s0, s1, …` beyond.
    pub fn letters(size: usize) -> Result<Self> {
        if size <= 26 {
            Alphabet::new((0..size).map(|i| ((b'a' + i as u8) as char).to_string()))
        } else {
            Alphabet::new((0..size).map(|i| format!("s{i}")))
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, i: usize) -> &str {
        &self.symbols[i]
    }

    pub fn index_of(&self, symbol: &str) -> Result<usize> {
        self.index
            .get(symbol)
            .copied()
            .ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))
    }

    /// Maps a sequence of symbol strings to a word.
    pub fn encode<S: AsRef<str>>(&self, symbols: &[S]) -> Result<Word> {
        symbols.iter().map(|s| self.index_of(s.as_ref())).collect()
    }

    /// Parses a string in which every character is one symbol.
    pub fn parse(&self, text: &str) -> Result<Word> {
        text.chars().map(|c| self.index_of(c.encode_utf8(&mut [0; 4]))).collect()
    }

    pub fn decode(&self, word: &[usize]) -> Vec<String> {
        word.iter().map(|&i| self.symbols[i].clone()).collect()
    }

    /// Human-readable rendering: plain concatenation when every symbol is a
    /// single character, space-separated otherwise; `ε` for the empty word.
    pub fn render(&self, word: &[usize]) -> String {
        if word.is_empty() {
            return "ε".to_string();
        }
        let single = self.symbols.iter().all(|s| s.chars().count() == 1);
        let sep = if single { "" } else { " " };
        self.decode(word).join(sep)
    }

    pub fn check(&self, word: &[usize]) -> Result<()> {
        match word.iter().find(|&&s| s >= self.len()) {
            Some(s) => Err(Error::UnknownSymbol(format!("#{s}"))),
            None => Ok(()),
        }
    }
}

impl Serialize for Alphabet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.symbols.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Alphabet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let symbols = Vec::<String>::deserialize(d)?;
        Alphabet::new(symbols).map_err(serde::de::Error::custom)
    }
}

/// A configuration of a WFA: one weight per state.
pub type WfaConfig = Vec<f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct Wfa {
    alphabet: Alphabet,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    transitions: Vec<Matrix>,
}

impl Wfa {
    pub fn new(
        alphabet: Alphabet,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        transitions: Vec<Matrix>,
    ) -> Result<Self> {
        let n = alpha.len();
        if n == 0 {
            return Err(Error::Schema("a WFA needs at least one state".into()));
        }
        if beta.len() != n {
            return Err(Error::Dimension(format!("alpha has {n} entries, beta {}", beta.len())));
        }
        if transitions.len() != alphabet.len() {
            return Err(Error::Dimension(format!(
                "{} transition matrices for {} symbols",
                transitions.len(),
                alphabet.len()
            )));
        }
        for (sym, t) in alphabet.symbols().iter().zip(&transitions) {
            if t.rows() != n || t.cols() != n {
                return Err(Error::Dimension(format!(
                    "transition matrix of {sym:?} is {}x{}, expected {n}x{n}",
                    t.rows(),
                    t.cols()
                )));
            }
            if t.as_slice().iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("transition matrix of {sym:?}")));
            }
        }
        if alpha.iter().chain(&beta).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial or final vector".into()));
        }
        Ok(Wfa { alphabet, alpha, beta, transitions })
    }

    /// Single-state WFA that assigns weight 0 to every word.
    pub fn zero(alphabet: Alphabet) -> Self {
        let transitions = vec![Matrix::zeros(1, 1); alphabet.len()];
        Wfa { alphabet, alpha: vec![0.0], beta: vec![0.0], transitions }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn n_states(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn transition(&self, symbol: usize) -> &Matrix {
        &self.transitions[symbol]
    }

    pub fn transitions(&self) -> &[Matrix] {
        &self.transitions
    }

    /// `αᵀ · A_{σ₁} ⋯ A_{σₙ}`.
    pub fn configuration(&self, word: &[usize]) -> Result<WfaConfig> {
        self.alphabet.check(word)?;
        Ok(self.configuration_unchecked(word))
    }

    pub(crate) fn configuration_unchecked(&self, word: &[usize]) -> WfaConfig {
        word.iter().fold(self.alpha.clone(), |x, &s| self.transitions[s].left_mul(&x))
    }

    pub fn weight(&self, word: &[usize]) -> Result<f64> {
        Ok(self.output_of(&self.configuration(word)?))
    }

    pub(crate) fn weight_unchecked(&self, word: &[usize]) -> f64 {
        self.output_of(&self.configuration_unchecked(word))
    }

    /// Output value of a configuration: `x · β`.
    #[inline]
    pub fn output_of(&self, config: &[f64]) -> f64 {
        dot(config, &self.beta)
    }

    /// One transition: `config · A_σ`.
    pub fn step(&self, config: &[f64], symbol: usize) -> Result<WfaConfig> {
        if symbol >= self.alphabet.len() {
            return Err(Error::UnknownSymbol(format!("#{symbol}")));
        }
        if config.len() != self.n_states() {
            return Err(Error::Dimension(format!(
                "configuration of length {} for {} states",
                config.len(),
                self.n_states()
            )));
        }
        Ok(self.transitions[symbol].left_mul(config))
    }

    /// The `≃_A` relation: `Σᵢ βᵢ²(xᵢ − yᵢ)² < e² / |Q|`.
    pub fn close_rel(&self, x: &[f64], y: &[f64], e: f64) -> Result<bool> {
        let n = self.n_states();
        if x.len() != n || y.len() != n {
            return Err(Error::Dimension(format!(
                "close_rel on vectors of length {} and {} for {n} states",
                x.len(),
                y.len()
            )));
        }
        Ok(self.close_rel_unchecked(x, y, e))
    }

    #[inline]
    pub(crate) fn close_rel_unchecked(&self, x: &[f64], y: &[f64], e: f64) -> bool {
        let n = self.n_states() as f64;
        let s: f64 = self
            .beta
            .iter()
            .zip(x.iter().zip(y))
            .map(|(b, (xi, yi))| b * b * (xi - yi) * (xi - yi))
            .sum();
        s < e * e / n
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&WfaJson::from(self)).expect("WFA serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: WfaJson = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        raw.try_into()
    }

    /// Graphviz rendering. States are labelled `q/α/β`; a transition entry
    /// becomes an edge when its magnitude exceeds `weight_threshold`. Values
    /// with magnitude at least `emphasis_threshold` are tagged with
    /// `class="big"`.
    pub fn export_dot(&self, weight_threshold: f64, emphasis_threshold: f64) -> String {
        let mut out = String::from("digraph wfa {\n  rankdir=LR;\n  node [shape=circle];\n");
        for q in 0..self.n_states() {
            let (a, b) = (self.alpha[q], self.beta[q]);
            let mut tags = Vec::new();
            if a.abs() >= emphasis_threshold {
                tags.push("big-initial");
            }
            if b.abs() >= emphasis_threshold {
                tags.push("big-final");
            }
            let class = if tags.is_empty() {
                String::new()
            } else {
                format!(", class=\"{}\"", tags.join(" "))
            };
            let _ = writeln!(
                out,
                "  q{} [label=\"q{}/{}/{}\"{}];",
                q + 1,
                q + 1,
                fmt_weight(a),
                fmt_weight(b),
                class
            );
        }
        for (s, t) in self.transitions.iter().enumerate() {
            let sym = escape_dot(self.alphabet.symbol(s));
            for i in 0..t.rows() {
                for j in 0..t.cols() {
                    let w = t[(i, j)];
                    if w.abs() <= weight_threshold {
                        continue;
                    }
                    let class =
                        if w.abs() >= emphasis_threshold { ", class=\"big\"" } else { "" };
                    let _ = writeln!(
                        out,
                        "  q{} -> q{} [label=\"{}, {}\"{}];",
                        i + 1,
                        j + 1,
                        sym,
                        fmt_weight(w),
                        class
                    );
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

fn fmt_weight(w: f64) -> String {
    if w == w.trunc() && w.abs() < 1e15 {
        format!("{}", w as i64)
    } else {
        format!("{w:.4}")
    }
}

fn escape_dot(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WfaJson {
    alphabet: Vec<String>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    transitions: BTreeMap<String, Vec<Vec<f64>>>,
}

impl From<&Wfa> for WfaJson {
    fn from(w: &Wfa) -> Self {
        WfaJson {
            alphabet: w.alphabet.symbols().to_vec(),
            alpha: w.alpha.clone(),
            beta: w.beta.clone(),
            transitions: w
                .alphabet
                .symbols()
                .iter()
                .zip(&w.transitions)
                .map(|(s, m)| (s.clone(), m.to_rows()))
                .collect(),
        }
    }
}

impl TryFrom<WfaJson> for Wfa {
    type Error = Error;

    fn try_from(raw: WfaJson) -> Result<Wfa> {
        let alphabet = Alphabet::new(raw.alphabet)?;
        let n = raw.alpha.len();
        if raw.transitions.len() != alphabet.len() {
            return Err(Error::Schema(format!(
                "{} transition matrices for {} symbols",
                raw.transitions.len(),
                alphabet.len()
            )));
        }
        let mut transitions = Vec::with_capacity(alphabet.len());
        for sym in alphabet.symbols() {
            let rows = raw
                .transitions
                .get(sym)
                .ok_or_else(|| Error::Schema(format!("missing transition matrix for {sym:?}")))?;
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Schema(format!(
                    "transition matrix for {sym:?} must be {n}x{n}"
                )));
            }
            transitions.push(Matrix::from_rows(rows)?);
        }
        Wfa::new(alphabet, raw.alpha, raw.beta, transitions)
    }
}

impl Serialize for Wfa {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WfaJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Wfa {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        WfaJson::deserialize(d)?.try_into().map_err(serde::de::Error::custom)
    }
}

/// The three-state WFA over `{a, b}` used throughout the tests and docs.
pub fn example_wfa() -> Wfa {
    let alphabet = Alphabet::new(["a", "b"]).unwrap();
    let a = Matrix::from_rows(&[[1.0, 2.0, -1.0], [3.0, 0.0, 0.0], [0.0, 4.0, 0.0]]).unwrap();
    let b = Matrix::from_rows(&[[-1.0, 1.0, 0.0], [0.0, 3.0, 0.0], [-2.0, 4.0, 0.0]]).unwrap();
    Wfa::new(alphabet, vec![1.0, 2.0, 3.0], vec![0.0, -1.0, 1.0], vec![a, b]).unwrap()
}
