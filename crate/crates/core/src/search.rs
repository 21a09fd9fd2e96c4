//! Equivalence-query engines.
//!
//! [`bfs_eq`] scans words in shortlex order up to a budget. [`regression_eq`]
//! is a best-first search over the scorer's configuration space: a
//! regression model `p` maps scorer configurations to WFA configurations,
//! candidates far from everything already visited are explored first, and
//! regions that already hold more than `M` visited points stop expanding.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::squared_distance;
use crate::oracle::{Oracle, RunState};
use crate::regression::{RbfKernel, Regressor, RegressorSettings};
use crate::wfa::{Wfa, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquivalentReason {
    QueueExhausted,
    LengthHeuristic,
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EqResult {
    Counterexample { word: Word, oracle_value: f64, wfa_value: f64 },
    Equivalent(EquivalentReason),
}

impl EqResult {
    pub fn counterexample(&self) -> Option<&Word> {
        match self {
            EqResult::Counterexample { word, .. } => Some(word),
            EqResult::Equivalent(_) => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Max-priority queue with FIFO tie-breaking

struct Entry<T> {
    priority: f64,
    ordinal: u64,
    item: T,
}

impl<T> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T> Eq for Entry<T> {}

impl<T> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Entry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| other.ordinal.cmp(&self.ordinal))
    }
}

/// Pops the highest priority first; equal priorities come out in insertion
/// order.
pub struct PrioritizedQueue<T> {
    heap: BinaryHeap<Entry<T>>,
    next_ordinal: u64,
}

impl<T> Default for PrioritizedQueue<T> {
    fn default() -> Self {
        PrioritizedQueue { heap: BinaryHeap::new(), next_ordinal: 0 }
    }
}

impl<T> PrioritizedQueue<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, item: T, priority: f64) {
        self.heap.push(Entry { priority, ordinal: self.next_ordinal, item });
        self.next_ordinal += 1;
    }

    pub fn pop(&mut self) -> Option<(T, f64)> {
        self.heap.pop().map(|e| (e.item, e.priority))
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Breadth-first baseline

/// Word at position `index` of the shortlex enumeration of `Σ*`.
pub fn shortlex_word(alphabet_size: usize, mut index: u64) -> Word {
    let k = alphabet_size as u64;
    let mut len = 0u32;
    let mut block = 1u64;
    while index >= block {
        index -= block;
        len += 1;
        block = block.saturating_mul(k);
    }
    let mut word = vec![0usize; len as usize];
    for slot in word.iter_mut().rev() {
        *slot = (index % k) as usize;
        index /= k;
    }
    word
}

fn shortlex_next(word: &mut Word, alphabet_size: usize) {
    for slot in word.iter_mut().rev() {
        if *slot + 1 < alphabet_size {
            *slot += 1;
            return;
        }
        *slot = 0;
    }
    word.push(0);
}

#[derive(Clone, Debug, PartialEq)]
pub struct BfsOutcome {
    pub result: EqResult,
    /// Shortlex index of the counterexample, or the end of the scanned range
    /// when none was found.
    pub index: u64,
    pub examined: u64,
}

/// Tests the first `prev_index + n` words of the shortlex enumeration and
/// returns the first `w` with `|f_A(w) − f_R(w)| > e`.
pub fn bfs_eq<O: Oracle + ?Sized>(oracle: &O, wfa: &Wfa, e: f64, n: u64, prev_index: u64) -> BfsOutcome {
    let k = oracle.alphabet().len();
    let limit = prev_index.saturating_add(n);
    let mut word: Word = Vec::new();
    for index in 0..limit {
        let fr = oracle.output(&word);
        let fa = wfa.weight_unchecked(&word);
        if (fa - fr).abs() > e {
            return BfsOutcome {
                result: EqResult::Counterexample { word, oracle_value: fr, wfa_value: fa },
                index,
                examined: index + 1,
            };
        }
        shortlex_next(&mut word, k);
    }
    BfsOutcome { result: EqResult::Equivalent(EquivalentReason::BudgetExhausted), index: limit, examined: limit }
}

// ---------------------------------------------------------------------------
// Regression-guided best-first search

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Error tolerance `e > 0`.
    pub e: f64,
    /// Concentration threshold `M ≥ 1`.
    pub concentration: usize,
    /// Maximum plausible word length `L ≥ 1`.
    pub max_len: usize,
    pub max_pops: usize,
    pub regressor: RegressorSettings,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            e: 0.05,
            concentration: 5,
            max_len: 20,
            max_pops: 100_000,
            regressor: RegressorSettings::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Consistency {
    Ok,
    Ng,
}

/// A visited word: scorer configuration `δ_R(h')` and WFA configuration
/// `δ_A(h')`.
#[derive(Clone, Debug)]
pub struct VisitedPoint {
    pub oracle_config: Vec<f64>,
    pub wfa_config: Vec<f64>,
}

/// `NG` iff some visited `h'` has `δ_A(h') ≄ p(δ_R(h'))` while
/// `p(δ_R(h')) ≃ p(δ_R(h))`.
pub fn consistent(
    h_oracle_config: &[f64],
    visited: &[VisitedPoint],
    p: &Regressor,
    wfa: &Wfa,
    e: f64,
) -> Result<Consistency> {
    let h_image = p.predict(h_oracle_config)?;
    for v in visited {
        let image = p.predict(&v.oracle_config)?;
        if !wfa.close_rel(&v.wfa_config, &image, e)? && wfa.close_rel(&image, &h_image, e)? {
            return Ok(Consistency::Ng);
        }
    }
    Ok(Consistency::Ok)
}

/// Minimum Euclidean distance from `h_image` to `others`; `+∞` when there
/// are none.
pub fn priority_of(h_image: &[f64], others: &[Vec<f64>]) -> f64 {
    others
        .iter()
        .map(|x| squared_distance(h_image, x))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// One line of the search trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceEvent {
    /// Equivalence round; filled in by the learner.
    pub round: usize,
    pub pop: usize,
    pub word: String,
    /// `None` encodes `+∞`.
    pub priority: Option<f64>,
    pub refit: bool,
    pub vn: Option<usize>,
    pub expanded: bool,
    pub outcome: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub result: EqResult,
    pub pops: usize,
    pub refits: usize,
    pub visited: usize,
}

struct Candidate {
    word: Word,
    run: RunState,
    wfa_config: Vec<f64>,
}

/// Best-first counterexample search guided by a regressed configuration
/// abstraction.
pub fn regression_eq<O: Oracle + ?Sized>(
    oracle: &O,
    wfa: &Wfa,
    params: &SearchParams,
    trace: &mut dyn FnMut(TraceEvent),
) -> Result<SearchOutcome> {
    let e = params.e;
    let kernel = RbfKernel::new(params.regressor.length_scale)?;
    let ridge = params.regressor.ridge;
    let alphabet = oracle.alphabet();

    let mut p = Regressor::constant(wfa.alpha().to_vec());
    let mut queue = PrioritizedQueue::new();
    queue.push(
        Candidate { word: Vec::new(), run: oracle.start(), wfa_config: wfa.alpha().to_vec() },
        f64::INFINITY,
    );

    let mut visited: Vec<VisitedPoint> = Vec::new();
    // p(δ_R(h')) and whether δ_A(h') ≄ p(δ_R(h')), kept in step with `visited`
    let mut images: Vec<Vec<f64>> = Vec::new();
    let mut off: Vec<bool> = Vec::new();
    let mut pops = 0usize;
    let mut refits = 0usize;

    let finish = |result: EqResult, pops, refits, visited: usize| SearchOutcome { result, pops, refits, visited };

    while let Some((h, priority)) = queue.pop() {
        pops += 1;
        let mut event = TraceEvent {
            round: 0,
            pop: pops,
            word: alphabet.render(&h.word),
            priority: priority.is_finite().then_some(priority),
            refit: false,
            vn: None,
            expanded: false,
            outcome: None,
        };
        if pops > params.max_pops {
            event.outcome = Some("budget-exhausted".into());
            trace(event);
            return Ok(finish(EqResult::Equivalent(EquivalentReason::BudgetExhausted), pops - 1, refits, visited.len()));
        }
        if h.word.len() > params.max_len {
            event.outcome = Some("length-heuristic".into());
            trace(event);
            return Ok(finish(EqResult::Equivalent(EquivalentReason::LengthHeuristic), pops, refits, visited.len()));
        }
        let fr = oracle.read_output(&h.run);
        let fa = wfa.output_of(&h.wfa_config);
        if (fr - fa).abs() >= e {
            event.outcome = Some("counterexample".into());
            trace(event);
            return Ok(finish(
                EqResult::Counterexample { word: h.word, oracle_value: fr, wfa_value: fa },
                pops,
                refits,
                visited.len(),
            ));
        }

        let rconf = oracle.read_config(&h.run);
        let mut h_image = p.predict(&rconf)?;
        let ng = images
            .iter()
            .zip(&off)
            .any(|(img, &bad)| bad && wfa.close_rel_unchecked(img, &h_image, e));
        if ng {
            let mut xs: Vec<Vec<f64>> = visited.iter().map(|v| v.oracle_config.clone()).collect();
            let mut ys: Vec<Vec<f64>> = visited.iter().map(|v| v.wfa_config.clone()).collect();
            xs.push(rconf.clone());
            ys.push(h.wfa_config.clone());
            p = Regressor::fit(&xs, &ys, kernel, ridge)?;
            refits += 1;
            event.refit = true;
            for (img, v) in images.iter_mut().zip(&visited) {
                *img = p.predict(&v.oracle_config)?;
            }
            for (flag, (img, v)) in off.iter_mut().zip(images.iter().zip(&visited)) {
                *flag = !wfa.close_rel_unchecked(&v.wfa_config, img, e);
            }
            h_image = p.predict(&rconf)?;
        }

        off.push(!wfa.close_rel_unchecked(&h.wfa_config, &h_image, e));
        images.push(h_image.clone());
        visited.push(VisitedPoint { oracle_config: rconf, wfa_config: h.wfa_config.clone() });

        let vn = images.iter().filter(|x| wfa.close_rel_unchecked(x, &h_image, e)).count();
        debug_assert!(vn >= 1, "h itself is counted");
        event.vn = Some(vn);
        if vn <= params.concentration {
            let pr = priority_of(&h_image, &images[..images.len() - 1]);
            for s in 0..alphabet.len() {
                let mut word = h.word.clone();
                word.push(s);
                let run = oracle.advance(&h.run, s);
                let wfa_config = wfa.transition(s).left_mul(&h.wfa_config);
                queue.push(Candidate { word, run, wfa_config }, pr);
            }
            event.expanded = true;
        }
        trace(event);
    }
    Ok(finish(EqResult::Equivalent(EquivalentReason::QueueExhausted), pops, refits, visited.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;
    use crate::oracle::{ConstantOracle, WfaOracle};
    use crate::wfa::{example_wfa, Alphabet};

    fn no_trace() -> impl FnMut(TraceEvent) {
        |_| {}
    }

    #[test]
    fn queue_is_max_first_and_fifo_on_ties() {
        let mut q = PrioritizedQueue::new();
        q.push("a", 1.0);
        q.push("b", 3.0);
        q.push("c", 3.0);
        q.push("d", f64::INFINITY);
        q.push("e", 0.0);
        let order: Vec<_> = std::iter::from_fn(|| q.pop().map(|(x, _)| x)).collect();
        assert_eq!(order, vec!["d", "b", "c", "a", "e"]);
    }

    #[test]
    fn shortlex_unranking() {
        let words: Vec<Word> = (0..8).map(|i| shortlex_word(2, i)).collect();
        assert_eq!(
            words,
            vec![vec![], vec![0], vec![1], vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1], vec![0, 0, 0]]
        );
        assert_eq!(shortlex_word(1, 3), vec![0, 0, 0]);
    }

    #[test]
    fn bfs_enumeration_matches_unranking() {
        // a WFA that is wrong only on the word at shortlex position i
        for k in 1..=3usize {
            let ab = Alphabet::letters(k).unwrap();
            let zero = Wfa::zero(ab.clone());
            for i in 0..40u64 {
                let target = shortlex_word(k, i);
                let o = PlantedOracle { alphabet: ab.clone(), word: target.clone(), gap: 1.0 };
                let out = bfs_eq(&o, &zero, 0.5, 100, 0);
                assert_eq!(out.result.counterexample(), Some(&target));
                assert_eq!(out.index, i);
            }
        }
    }

    /// Zero everywhere except one planted word.
    struct PlantedOracle {
        alphabet: Alphabet,
        word: Word,
        gap: f64,
    }

    impl Oracle for PlantedOracle {
        fn alphabet(&self) -> &Alphabet {
            &self.alphabet
        }
        fn dim(&self) -> usize {
            1
        }
        fn start(&self) -> RunState {
            RunState(vec![])
        }
        fn advance(&self, state: &RunState, symbol: usize) -> RunState {
            let mut v = state.0.clone();
            v.push(symbol as f64);
            RunState(v)
        }
        fn read_output(&self, state: &RunState) -> f64 {
            let w: Word = state.0.iter().map(|&x| x as usize).collect();
            if w == self.word {
                self.gap
            } else {
                0.0
            }
        }
        fn read_config(&self, state: &RunState) -> Vec<f64> {
            vec![state.0.len() as f64]
        }
    }

    #[test]
    fn bfs_examples() {
        let a = example_wfa();
        let same = WfaOracle::new(a.clone());
        let out = bfs_eq(&same, &a, 0.05, 200, 0);
        assert_eq!(out.result, EqResult::Equivalent(EquivalentReason::BudgetExhausted));

        let ab = Alphabet::new(["a", "b"]).unwrap();
        let one = ConstantOracle::new(ab.clone(), 1.0);
        let out = bfs_eq(&one, &Wfa::zero(ab.clone()), 0.05, 10, 0);
        assert_eq!(out.result.counterexample(), Some(&vec![]));
        assert_eq!(out.index, 0);

        let planted = PlantedOracle { alphabet: ab.clone(), word: vec![1], gap: 1.0 };
        let out = bfs_eq(&planted, &Wfa::zero(ab), 0.01, 10, 0);
        assert_eq!(out.result.counterexample(), Some(&vec![1]));
        assert_eq!(out.index, 2);
    }

    #[test]
    fn bfs_budget_is_relative_to_previous_index() {
        let ab = Alphabet::new(["a", "b"]).unwrap();
        let planted = PlantedOracle { alphabet: ab.clone(), word: shortlex_word(2, 12), gap: 1.0 };
        let zero = Wfa::zero(ab);
        assert!(bfs_eq(&planted, &zero, 0.1, 5, 0).result.counterexample().is_none());
        assert_eq!(bfs_eq(&planted, &zero, 0.1, 5, 8).index, 12);
    }

    #[test]
    fn bfs_uses_strict_inequality() {
        let ab = Alphabet::new(["a"]).unwrap();
        let half = ConstantOracle::new(ab.clone(), 0.5);
        let out = bfs_eq(&half, &Wfa::zero(ab), 0.5, 10, 0);
        assert!(out.result.counterexample().is_none());
    }

    #[test]
    fn regression_eq_on_identical_automata() {
        let a = example_wfa();
        // the example WFA blows up quickly; keep the search short
        let params = SearchParams { max_len: 4, ..SearchParams::default() };
        let out = regression_eq(&WfaOracle::new(a.clone()), &a, &params, &mut no_trace()).unwrap();
        assert!(matches!(out.result, EqResult::Equivalent(_)));
    }

    #[test]
    fn regression_eq_checks_empty_word_first() {
        let ab = Alphabet::new(["a", "b"]).unwrap();
        let one = ConstantOracle::new(ab.clone(), 1.0);
        let out = regression_eq(&one, &Wfa::zero(ab), &SearchParams::default(), &mut no_trace()).unwrap();
        assert_eq!(out.result.counterexample(), Some(&vec![]));
        assert_eq!(out.pops, 1);
    }

    #[test]
    fn regression_eq_uses_non_strict_inequality() {
        let ab = Alphabet::new(["a"]).unwrap();
        let o = ConstantOracle::new(ab.clone(), 0.05);
        let out = regression_eq(&o, &Wfa::zero(ab), &SearchParams::default(), &mut no_trace()).unwrap();
        assert!(out.result.counterexample().is_some());
    }

    #[test]
    fn budget_exhaustion() {
        let ab = Alphabet::new(["a", "b"]).unwrap();
        let o = ConstantOracle::new(ab.clone(), 0.0);
        let params = SearchParams { max_pops: 3, concentration: 1000, ..SearchParams::default() };
        let out = regression_eq(&o, &Wfa::zero(ab), &params, &mut no_trace()).unwrap();
        assert_eq!(out.result, EqResult::Equivalent(EquivalentReason::BudgetExhausted));
        assert_eq!(out.pops, 3);
    }

    #[test]
    fn consistency_examples() {
        let a = example_wfa();
        let p = Regressor::constant(vec![1.0, 2.0, 3.0]);
        assert_eq!(consistent(&[0.0], &[], &p, &a, 0.05).unwrap(), Consistency::Ok);

        // p exact on the visited point
        let exact = VisitedPoint { oracle_config: vec![0.0], wfa_config: vec![1.0, 2.0, 3.0] };
        assert_eq!(consistent(&[5.0], &[exact], &p, &a, 0.05).unwrap(), Consistency::Ok);

        // p is far off at h' (second coordinate differs by 1) but maps h' and
        // h to the same point
        let wrong = VisitedPoint { oracle_config: vec![0.0], wfa_config: vec![1.0, 3.0, 3.0] };
        assert_eq!(consistent(&[5.0], &[wrong], &p, &a, 0.05).unwrap(), Consistency::Ng);
    }

    #[test]
    fn priority_examples() {
        assert_eq!(priority_of(&[0.0, 0.0], &[]), f64::INFINITY);
        assert_eq!(priority_of(&[1.0, 2.0], &[vec![1.0, 2.0]]), 0.0);
        assert_eq!(priority_of(&[0.0, 0.0], &[vec![0.0, 2.0], vec![1.0, 0.0]]), 1.0);
    }

    #[test]
    fn trace_reports_every_pop() {
        let ab = Alphabet::new(["a"]).unwrap();
        let half = Matrix::from_rows(&[[0.5]]).unwrap();
        let a = Wfa::new(ab, vec![1.0], vec![1.0], vec![half]).unwrap();
        let mut events = Vec::new();
        let out = regression_eq(&WfaOracle::new(a.clone()), &a, &SearchParams::default(), &mut |ev| events.push(ev)).unwrap();
        assert_eq!(events.len(), out.pops);
        assert_eq!(events[0].word, "ε");
        assert_eq!(events[0].priority, None);
        assert!(events.iter().filter_map(|e| e.vn).all(|vn| vn >= 1));
    }
}
