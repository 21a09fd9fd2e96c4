//! Observation table of weighted L*: a Hankel block `f(u·v)` indexed by
//! access words `u` and test words `v`, plus the rows of every one-symbol
//! extension `u·σ`.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numerics::{lstsq_cutoff, numeric_rank, svd, Matrix};
use crate::oracle::Oracle;
use crate::wfa::{Alphabet, Wfa, Word};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Closedness {
    Closed,
    /// First extension `u·σ` (in access order, then alphabet order) whose
    /// row raises the numeric rank.
    Defect(Word),
}

#[derive(Clone, Debug)]
pub struct ObservationTable {
    alphabet: Alphabet,
    access: Vec<Word>,
    tests: Vec<Word>,
    access_set: HashSet<Word>,
    test_set: HashSet<Word>,
    rows: HashMap<Word, Vec<f64>>,
}

impl ObservationTable {
    /// `𝒜 = 𝒯 = {ε}`.
    pub fn new<O: Oracle + ?Sized>(oracle: &O) -> Self {
        let mut t = ObservationTable {
            alphabet: oracle.alphabet().clone(),
            access: vec![Vec::new()],
            tests: vec![Vec::new()],
            access_set: HashSet::from([Vec::new()]),
            test_set: HashSet::from([Vec::new()]),
            rows: HashMap::new(),
        };
        t.fill_rows_for(oracle, &[Vec::new()]);
        t
    }

    /// Rebuilds a table over the given words. `ε` is inserted first in both
    /// lists if missing; duplicates are dropped.
    pub fn from_words<O: Oracle + ?Sized>(oracle: &O, access: &[Word], tests: &[Word]) -> Result<Self> {
        for w in access.iter().chain(tests) {
            oracle.alphabet().check(w)?;
        }
        let mut t = ObservationTable::new(oracle);
        let tests: Vec<Word> = tests.iter().filter(|w| !w.is_empty()).cloned().collect();
        t.add_tests(oracle, &tests);
        for u in access.iter().filter(|w| !w.is_empty()) {
            t.promote(oracle, u.clone());
        }
        Ok(t)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn access(&self) -> &[Word] {
        &self.access
    }

    pub fn tests(&self) -> &[Word] {
        &self.tests
    }

    /// Row `(f(u·v))_v` of an access word or extension, if tracked.
    pub fn row(&self, word: &[usize]) -> Option<&[f64]> {
        self.rows.get(word).map(|r| r.as_slice())
    }

    pub fn entry(&self, access_index: usize, test_index: usize) -> f64 {
        self.rows[&self.access[access_index]][test_index]
    }

    /// Access rows as a matrix (the Hankel block `H_B`).
    pub fn hankel(&self) -> Matrix {
        let rows: Vec<&[f64]> = self.access.iter().map(|u| self.rows[u].as_slice()).collect();
        Matrix::from_rows(&rows).expect("table rows are rectangular")
    }

    pub fn size(&self) -> (usize, usize) {
        (self.access.len(), self.tests.len())
    }

    fn extensions_of(&self, u: &[usize]) -> impl Iterator<Item = Word> + '_ {
        let u = u.to_vec();
        (0..self.alphabet.len()).map(move |s| {
            let mut w = u.clone();
            w.push(s);
            w
        })
    }

    fn compute_row<O: Oracle + ?Sized>(&self, oracle: &O, u: &[usize]) -> Vec<f64> {
        let mut buf = Vec::with_capacity(u.len() + 8);
        self.tests
            .iter()
            .map(|v| {
                buf.clear();
                buf.extend_from_slice(u);
                buf.extend_from_slice(v);
                oracle.output(&buf)
            })
            .collect()
    }

    /// Ensures rows for `words` and all of their one-symbol extensions.
    fn fill_rows_for<O: Oracle + ?Sized>(&mut self, oracle: &O, words: &[Word]) {
        let mut needed = Vec::new();
        for u in words {
            if !self.rows.contains_key(u) {
                needed.push(u.clone());
            }
            for ext in self.extensions_of(u) {
                if !self.rows.contains_key(&ext) {
                    needed.push(ext);
                }
            }
        }
        for w in needed {
            let row = self.compute_row(oracle, &w);
            self.rows.insert(w, row);
        }
    }

    /// Adds an access word (no-op if present).
    pub fn promote<O: Oracle + ?Sized>(&mut self, oracle: &O, word: Word) -> bool {
        if self.access_set.contains(&word) {
            return false;
        }
        self.access_set.insert(word.clone());
        self.access.push(word.clone());
        self.fill_rows_for(oracle, &[word]);
        true
    }

    /// Adds test words, skipping those already present. Returns how many
    /// were new.
    pub fn add_tests<O: Oracle + ?Sized>(&mut self, oracle: &O, suffixes: &[Word]) -> usize {
        let fresh: Vec<Word> = suffixes
            .iter()
            .filter(|v| !self.test_set.contains(*v))
            .cloned()
            .collect::<Vec<_>>();
        let mut added = Vec::new();
        for v in fresh {
            if self.test_set.insert(v.clone()) {
                added.push(v);
            }
        }
        if added.is_empty() {
            return 0;
        }
        let mut buf = Vec::new();
        for (u, row) in self.rows.iter_mut() {
            for v in &added {
                buf.clear();
                buf.extend_from_slice(u);
                buf.extend_from_slice(v);
                row.push(oracle.output(&buf));
            }
        }
        self.tests.extend(added.iter().cloned());
        added.len()
    }

    /// Adds every prefix of `word` as an access word and every suffix as a
    /// test word. Returns whether the table grew.
    pub fn add_counterexample<O: Oracle + ?Sized>(&mut self, oracle: &O, word: &[usize]) -> bool {
        let suffixes: Vec<Word> = (0..word.len()).map(|i| word[i..].to_vec()).collect();
        let mut grew = self.add_tests(oracle, &suffixes) > 0;
        for i in 1..=word.len() {
            grew |= self.promote(oracle, word[..i].to_vec());
        }
        grew
    }

    pub fn closedness_defect(&self, tau: f64) -> Result<Closedness> {
        let h = self.hankel();
        let base = numeric_rank(&svd(&h)?.singular_values, tau);
        for u in &self.access {
            for ext in self.extensions_of(u) {
                if self.access_set.contains(&ext) {
                    continue;
                }
                let stacked = h.with_row(&self.rows[&ext])?;
                if numeric_rank(&svd(&stacked)?.singular_values, tau) > base {
                    return Ok(Closedness::Defect(ext));
                }
            }
        }
        Ok(Closedness::Closed)
    }

    /// Promotes defects until the table is closed at `tau`. Returns the
    /// number of promotions.
    pub fn close<O: Oracle + ?Sized>(&mut self, oracle: &O, tau: f64) -> Result<usize> {
        let mut promoted = 0;
        while let Closedness::Defect(w) = self.closedness_defect(tau)? {
            self.promote(oracle, w);
            promoted += 1;
        }
        Ok(promoted)
    }

    /// Builds the WFA induced by a closed table.
    pub fn synthesize(&self, tau: f64) -> Result<Wfa> {
        if self.closedness_defect(tau)? != Closedness::Closed {
            return Err(Error::NotClosed(tau));
        }
        self.synthesize_unchecked(tau)
    }

    /// Construction on the numeric row space of `H_B`.
    ///
    /// With `V_r` the top-`r` right singular vectors of `H_B` (`r` the
    /// numeric rank at `tau`), a word's configuration is its row projected
    /// on `V_r`: `α = row(ε)·V_r`, `β = V_rᵀ·e_ε`, and `A_σ` solves
    /// `(H_B·V_r)·A_σ = H_σ·V_r` in the least-squares sense. When the access
    /// rows are independent this is a change of basis of the access-word
    /// construction.
    pub(crate) fn synthesize_unchecked(&self, tau: f64) -> Result<Wfa> {
        let h = self.hankel();
        let dec = svd(&h)?;
        let r = numeric_rank(&dec.singular_values, tau);
        if r == 0 {
            return Ok(Wfa::zero(self.alphabet.clone()));
        }
        let n_tests = self.tests.len();
        let eps_test = self.tests.iter().position(|v| v.is_empty()).expect("ε is a test word");
        let eps_access = 0;

        // V_r as |T|×r, with a deterministic sign per component
        let mut v = Matrix::zeros(n_tests, r);
        for k in 0..r {
            let col: Vec<f64> = (0..n_tests).map(|j| dec.vt[(k, j)]).collect();
            let a_k: f64 = h.row(eps_access).iter().zip(&col).map(|(x, y)| x * y).sum();
            let flip = if a_k.abs() > 1e-12 * dec.singular_values[0] {
                a_k < 0.0
            } else {
                let big = col.iter().copied().max_by(|x, y| x.abs().total_cmp(&y.abs())).unwrap_or(0.0);
                big < 0.0
            };
            for (j, c) in col.iter().enumerate() {
                v[(j, k)] = if flip { -c } else { *c };
            }
        }

        let p = h.matmul(&v)?;
        let alpha = p.row(eps_access).to_vec();
        let beta = v.row(eps_test).to_vec();

        let mut transitions = Vec::with_capacity(self.alphabet.len());
        for s in 0..self.alphabet.len() {
            let ext_rows: Vec<&[f64]> = self
                .access
                .iter()
                .map(|u| {
                    let mut w = u.clone();
                    w.push(s);
                    self.rows[&w].as_slice()
                })
                .collect();
            let h_sigma = Matrix::from_rows(&ext_rows)?;
            let rhs = h_sigma.matmul(&v)?;
            transitions.push(lstsq_cutoff(&p, &rhs, tau)?.x);
        }
        Wfa::new(self.alphabet.clone(), alpha, beta, transitions)
    }

    /// Access words × test words as CSV, words rendered with the alphabet.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("access");
        for v in &self.tests {
            let _ = write!(out, ",{}", csv_field(&self.alphabet.render(v)));
        }
        out.push('\n');
        for u in &self.access {
            out.push_str(&csv_field(&self.alphabet.render(u)));
            for x in &self.rows[u] {
                let _ = write!(out, ",{x}");
            }
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
