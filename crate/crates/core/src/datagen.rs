//! Seeded generators for experiment inputs: random WFAs with outputs in
//! `[0, 1]`, word samplers, and the weighted-parenthesis dataset.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::oracle::{Oracle, WparenOracle};
use crate::wfa::{Alphabet, Wfa, Word};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Point drawn uniformly from the probability simplex.
fn simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    } else {
        v = vec![1.0 / n as f64; n];
    }
    v
}

/// Random WFA whose weights all lie in `[0, 1]`: `α` on the simplex, each
/// transition row a Dirichlet(1) sample scaled by `U[0.8, 1]`, `β ∈ [0, 1]ⁿ`.
pub fn random_wfa(alphabet: &Alphabet, n_states: usize, seed: u64) -> Result<Wfa> {
    if n_states == 0 {
        return Err(Error::InvalidParameter("a WFA needs at least one state".into()));
    }
    let mut rng = rng_from_seed(seed);
    let alpha = simplex(n_states, &mut rng);
    let mut transitions = Vec::with_capacity(alphabet.len());
    for _ in 0..alphabet.len() {
        let mut data = Vec::with_capacity(n_states * n_states);
        for _ in 0..n_states {
            let scale = rng.random_range(0.8..=1.0);
            data.extend(simplex(n_states, &mut rng).into_iter().map(|x| x * scale));
        }
        transitions.push(Matrix::from_vec(n_states, n_states, data)?);
    }
    let beta = (0..n_states).map(|_| rng.random::<f64>()).collect();
    Wfa::new(alphabet.clone(), alpha, beta, transitions)
}

pub fn uniform_word<R: Rng + ?Sized>(alphabet_size: usize, max_len: usize, rng: &mut R) -> Word {
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| rng.random_range(0..alphabet_size)).collect()
}

/// `count` words with length uniform on `0..=max_len` and i.i.d. uniform
/// symbols.
pub fn sample_uniform(alphabet: &Alphabet, max_len: usize, count: usize, seed: u64) -> Vec<Word> {
    let mut rng = rng_from_seed(seed);
    (0..count).map(|_| uniform_word(alphabet.len(), max_len, &mut rng)).collect()
}

/// Like [`sample_uniform`] but rejecting anything in `exclude`. Gives up
/// with an error when rejection stalls.
pub fn sample_uniform_excluding(
    alphabet: &Alphabet,
    max_len: usize,
    count: usize,
    seed: u64,
    exclude: &HashSet<Word>,
) -> Result<Vec<Word>> {
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(count);
    let mut misses = 0usize;
    while out.len() < count {
        let w = uniform_word(alphabet.len(), max_len, &mut rng);
        if exclude.contains(&w) {
            misses += 1;
            if misses > 100 * count.max(1000) {
                return Err(Error::InvalidParameter("too few words outside the excluded set".into()));
            }
            continue;
        }
        out.push(w);
    }
    Ok(out)
}

/// True when every symbol's occurrences form one contiguous run.
pub fn is_block_word(word: &[usize]) -> bool {
    let mut finished = HashSet::new();
    for (i, &s) in word.iter().enumerate() {
        if i > 0 && word[i - 1] != s && !finished.insert(word[i - 1]) {
            return false;
        }
        if finished.contains(&s) {
            return false;
        }
    }
    true
}

/// One block word with exactly `blocks` runs (or fewer when `len` is
/// shorter), each run a distinct symbol.
fn block_word<R: Rng + ?Sized>(alphabet_size: usize, len: usize, blocks: usize, rng: &mut R) -> Word {
    let blocks = blocks.min(len);
    if blocks == 0 {
        return Vec::new();
    }
    let mut symbols: Vec<usize> = (0..alphabet_size).collect();
    symbols.shuffle(rng);
    // random composition of `len` into `blocks` positive parts
    let mut cuts: Vec<usize> = rand::seq::index::sample(rng, len - 1, blocks - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    cuts.push(len);
    let mut word = Vec::with_capacity(len);
    let mut start = 0;
    for (k, &end) in cuts.iter().enumerate() {
        word.extend(std::iter::repeat_n(symbols[k], end - start));
        start = end;
    }
    word
}

/// Words in which each symbol occupies a single contiguous block. Lengths
/// are uniform on `0..=max_len`; the number of blocks is uniform on
/// `1..=min(|Σ|, length)`.
pub fn sample_block(alphabet: &Alphabet, max_len: usize, count: usize, seed: u64) -> Vec<Word> {
    let mut rng = rng_from_seed(seed);
    let k = alphabet.len();
    (0..count)
        .map(|_| {
            let len = rng.random_range(0..=max_len);
            let blocks = if len == 0 { 0 } else { rng.random_range(1..=k.min(len)) };
            block_word(k, len, blocks, &mut rng)
        })
        .collect()
}

/// [`sample_block`] with a fixed number of blocks per word.
pub fn sample_block_fixed(
    alphabet: &Alphabet,
    blocks: usize,
    max_len: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Word>> {
    if blocks > alphabet.len() {
        return Err(Error::Alphabet(format!("{blocks} blocks need at least {blocks} symbols, got {}", alphabet.len())));
    }
    if blocks > max_len {
        return Err(Error::InvalidParameter(format!("{blocks} blocks do not fit in length {max_len}")));
    }
    let mut rng = rng_from_seed(seed);
    Ok((0..count)
        .map(|_| {
            let len = rng.random_range(blocks..=max_len);
            block_word(alphabet.len(), len, blocks, &mut rng)
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Weighted parentheses

const OPEN: usize = 0;
const CLOSE: usize = 1;
const FIRST_DIGIT: usize = 2;

/// Number of ways to finish a Dyck path with `remaining` steps left at
/// height `height`.
fn completions(remaining: usize, height: usize) -> f64 {
    if height > remaining || (remaining - height) % 2 == 1 {
        return 0.0;
    }
    // ballot number: C(r, k) − C(r, k − 1) with k = (r − h) / 2 down-steps
    let k = (remaining - height) / 2;
    let binom = |n: usize, k: usize| -> f64 { (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64) };
    let lower = if k == 0 { 0.0 } else { binom(remaining, k - 1) };
    (binom(remaining, k) - lower).round()
}

/// Uniformly random balanced word with `half_len` pairs over the wparen
/// alphabet (`(` = 0, `)` = 1).
pub fn balanced_word<R: Rng + ?Sized>(half_len: usize, rng: &mut R) -> Word {
    let total = 2 * half_len;
    let mut word = Vec::with_capacity(total);
    let mut height = 0usize;
    for i in 0..total {
        let remaining = total - i;
        let up = completions(remaining - 1, height + 1);
        let down = if height > 0 { completions(remaining - 1, height - 1) } else { 0.0 };
        if rng.random::<f64>() * (up + down) < up {
            word.push(OPEN);
            height += 1;
        } else {
            word.push(CLOSE);
            height -= 1;
        }
    }
    word
}

/// `count` balanced words with half-length uniform on `1..=10`.
pub fn gen_balanced(count: usize, seed: u64) -> Vec<Word> {
    let mut rng = rng_from_seed(seed);
    (0..count).map(|_| gen_balanced_one(&mut rng)).collect()
}

fn gen_balanced_one<R: Rng + ?Sized>(rng: &mut R) -> Word {
    let half = rng.random_range(1..=10);
    balanced_word(half, rng)
}

/// Inserts a Geometric(1/2) number of uniform digits (capped at the word
/// length) at uniform positions.
pub fn insert_digits_with<R: Rng + ?Sized>(word: &[usize], rng: &mut R) -> Word {
    let geometric = Geometric::new(0.5).expect("valid probability");
    let n = (geometric.sample(rng) as usize).min(word.len());
    let mut out = word.to_vec();
    for _ in 0..n {
        let pos = rng.random_range(0..=out.len());
        out.insert(pos, FIRST_DIGIT + rng.random_range(0..10));
    }
    out
}

pub fn insert_digits(word: &[usize], seed: u64) -> Word {
    insert_digits_with(word, &mut rng_from_seed(seed))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mutation {
    Duplicate,
    Delete,
    Swap,
}

/// Applies duplicate / delete / adjacent-swap mutations, one uniformly chosen
/// rule at a time, until a fair coin comes up heads. Rules that cannot apply
/// are re-drawn; the empty word is returned unchanged.
pub fn mutate_with<R: Rng + ?Sized>(word: &[usize], rng: &mut R) -> Word {
    let mut w = word.to_vec();
    if w.is_empty() {
        return w;
    }
    loop {
        let rule = loop {
            let r = [Mutation::Duplicate, Mutation::Delete, Mutation::Swap][rng.random_range(0..3)];
            let possible = match r {
                Mutation::Duplicate => !w.is_empty(),
                Mutation::Delete => !w.is_empty(),
                Mutation::Swap => w.len() >= 2,
            };
            if possible {
                break r;
            }
            if w.is_empty() {
                return w;
            }
        };
        match rule {
            Mutation::Duplicate => {
                let i = rng.random_range(0..w.len());
                w.insert(i, w[i]);
            }
            Mutation::Delete => {
                let i = rng.random_range(0..w.len());
                w.remove(i);
            }
            Mutation::Swap => {
                let i = rng.random_range(0..w.len() - 1);
                w.swap(i, i + 1);
            }
        }
        if rng.random_bool(0.5) || w.is_empty() {
            return w;
        }
    }
}

pub fn mutate(word: &[usize], seed: u64) -> Word {
    mutate_with(word, &mut rng_from_seed(seed))
}

pub type Labelled = Vec<(Word, f64)>;

/// 5000 balanced and 5000 mutated words, all with digits inserted, labelled
/// by the wparen function, shuffled and split 9000 / 1000.
pub fn build_wparen_dataset(seed: u64) -> (Labelled, Labelled) {
    let mut rng = rng_from_seed(seed);
    let oracle = WparenOracle::new();
    let mut words = Vec::with_capacity(10_000);
    for _ in 0..5000 {
        let w = gen_balanced_one(&mut rng);
        words.push(insert_digits_with(&w, &mut rng));
    }
    for _ in 0..5000 {
        let w = gen_balanced_one(&mut rng);
        let m = mutate_with(&w, &mut rng);
        words.push(insert_digits_with(&m, &mut rng));
    }
    words.shuffle(&mut rng);
    let mut items: Labelled = words.into_iter().map(|w| {
        let y = oracle.output(&w);
        (w, y)
    }).collect();
    let test = items.split_off(9000);
    (items, test)
}

// ---------------------------------------------------------------------------
// JSON lines

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    w: Vec<String>,
    y: f64,
}

pub fn to_jsonl(alphabet: &Alphabet, items: &[(Word, f64)]) -> String {
    let mut out = String::new();
    for (w, y) in items {
        let row = Row { w: alphabet.decode(w), y: *y };
        out.push_str(&serde_json::to_string(&row).expect("row serialization"));
        out.push('\n');
    }
    out
}

pub fn from_jsonl(alphabet: &Alphabet, text: &str) -> Result<Labelled> {
    let mut items = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(line).map_err(|e| Error::Schema(format!("line {}: {e}", n + 1)))?;
        if !row.y.is_finite() {
            return Err(Error::NonFinite(format!("label on line {}", n + 1)));
        }
        items.push((alphabet.encode(&row.w)?, row.y));
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{wparen_alphabet, wparen_value};
    use std::collections::HashMap;

    fn paren(text: &str) -> Word {
        wparen_alphabet().parse(text).unwrap()
    }

    fn show(w: &[usize]) -> String {
        wparen_alphabet().decode(w).concat()
    }

    fn balanced(w: &[usize]) -> bool {
        let mut depth = 0i64;
        for &s in w {
            match s {
                OPEN => depth += 1,
                CLOSE => depth -= 1,
                _ => {}
            }
            if depth < 0 {
                return false;
            }
        }
        depth == 0
    }

    #[test]
    fn random_wfa_is_bounded_and_reproducible() {
        let ab = Alphabet::letters(3).unwrap();
        let a = random_wfa(&ab, 4, 7).unwrap();
        assert_eq!(a, random_wfa(&ab, 4, 7).unwrap());
        assert_ne!(a, random_wfa(&ab, 4, 8).unwrap());
        let eps = a.weight(&[]).unwrap();
        assert!((0.0..=1.0).contains(&eps));
        for t in a.transitions() {
            for i in 0..4 {
                let row: f64 = t.row(i).iter().sum();
                assert!(t.row(i).iter().all(|&x| x >= 0.0));
                assert!((0.8 - 1e-12..=1.0 + 1e-12).contains(&row), "row sum {row}");
            }
        }
        assert!(matches!(random_wfa(&ab, 0, 1), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn uniform_sampler() {
        let ab = Alphabet::letters(4).unwrap();
        let words = sample_uniform(&ab, 20, 1234, 3);
        assert_eq!(words.len(), 1234);
        assert!(words.iter().all(|w| w.len() <= 20 && w.iter().all(|&s| s < 4)));
        assert_eq!(words, sample_uniform(&ab, 20, 1234, 3));
    }

    #[test]
    fn uniform_symbol_frequencies_within_three_sigma() {
        let mut rng = rng_from_seed(11);
        let mut counts = [0u64; 4];
        let mut total = 0u64;
        while total < 100_000 {
            for s in uniform_word(4, 20, &mut rng) {
                counts[s] += 1;
                total += 1;
            }
        }
        let p = 0.25;
        let sigma = (total as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - total as f64 * p).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn block_predicate_examples() {
        let ab = Alphabet::new(["a", "b", "c"]).unwrap();
        assert!(is_block_word(&ab.parse("aabccc").unwrap()));
        assert!(is_block_word(&ab.parse("baaccc").unwrap()));
        assert!(!is_block_word(&ab.parse("aaba").unwrap()));
        assert!(is_block_word(&[]));
        assert!(!is_block_word(&ab.parse("abcb").unwrap()));
    }

    #[test]
    fn block_sampler_is_sound() {
        let ab = Alphabet::letters(5).unwrap();
        let words = sample_block(&ab, 20, 5000, 9);
        assert_eq!(words.len(), 5000);
        assert!(words.iter().all(|w| w.len() <= 20 && is_block_word(w)));
        let fixed = sample_block_fixed(&ab, 3, 12, 500, 1).unwrap();
        for w in &fixed {
            assert!(is_block_word(w));
            let mut runs = 1;
            for i in 1..w.len() {
                runs += usize::from(w[i] != w[i - 1]);
            }
            assert_eq!(runs, 3);
        }
        assert!(matches!(sample_block_fixed(&ab, 6, 20, 1, 0), Err(Error::Alphabet(_))));
    }

    #[test]
    fn ballot_numbers() {
        // Catalan numbers from the empty height
        let catalan: Vec<f64> = (0..8).map(|n| completions(2 * n, 0)).collect();
        assert_eq!(catalan, vec![1.0, 1.0, 2.0, 5.0, 14.0, 42.0, 132.0, 429.0]);
        assert_eq!(completions(3, 1), 2.0);
        assert_eq!(completions(3, 0), 0.0);
    }

    #[test]
    fn balanced_words_are_balanced() {
        for w in gen_balanced(2000, 5) {
            assert!(balanced(&w));
            assert_eq!(w.len() % 2, 0);
            assert!((2..=20).contains(&w.len()));
        }
        let shapes: HashSet<String> = gen_balanced(5000, 6).iter().map(|w| show(w)).collect();
        assert!(shapes.contains("(())"));
        assert!(shapes.contains("(()())"));
    }

    #[test]
    fn catalan_shapes_are_uniform() {
        let mut rng = rng_from_seed(2024);
        let mut counts: HashMap<Word, usize> = HashMap::new();
        let n = 100_000;
        for _ in 0..n {
            *counts.entry(balanced_word(3, &mut rng)).or_default() += 1;
        }
        assert_eq!(counts.len(), 5);
        for c in counts.values() {
            let f = *c as f64 / n as f64;
            assert!((f - 0.2).abs() < 0.02, "{f}");
        }
    }

    #[test]
    fn digit_insertion() {
        let base = paren("(())");
        let mut seen_digit = false;
        for seed in 0..200 {
            let w = insert_digits(&base, seed);
            let stripped: Word = w.iter().copied().filter(|&s| s < FIRST_DIGIT).collect();
            assert_eq!(stripped, base);
            assert!(w.len() <= 2 * base.len());
            assert!(balanced(&w));
            seen_digit |= w.len() > base.len();
        }
        assert!(seen_digit);
        assert_eq!(insert_digits(&[], 3), Vec::<usize>::new());
        // "(0(1))" is reachable from "(())"
        let target = paren("(0(1))");
        assert!((0..20_000).any(|s| insert_digits(&base, s) == target));
    }

    #[test]
    fn mutation_examples() {
        let base = paren("(())");
        assert_eq!(mutate(&[], 1), Vec::<usize>::new());
        let outcomes: HashSet<String> = (0..3000).map(|s| show(&mutate(&base, s))).collect();
        assert!(outcomes.contains("(()"));
        assert!(outcomes.contains("((((") || outcomes.contains("((()))") || outcomes.contains("()()"));
        assert!(outcomes.iter().any(|w| w != "(())"));
        // a single-symbol word can never be swapped; the rule is re-drawn
        for s in 0..200 {
            let _ = mutate(&paren("("), s);
        }
    }

    #[test]
    fn wparen_dataset_shape() {
        let (train, test) = build_wparen_dataset(42);
        assert_eq!((train.len(), test.len()), (9000, 1000));
        let zeros = train.iter().chain(&test).filter(|(_, y)| *y == 0.0).count();
        let frac = zeros as f64 / 10_000.0;
        assert!((0.35..=0.65).contains(&frac), "{frac}");
        for (w, y) in train.iter().take(300) {
            assert_eq!(*y, wparen_value(&show(w)).unwrap());
        }
        assert_eq!(build_wparen_dataset(42).0[..10], train[..10]);
    }

    #[test]
    fn jsonl_round_trip() {
        let ab = wparen_alphabet();
        let items = vec![(paren("(0)"), 0.5), (vec![], 0.0)];
        let text = to_jsonl(&ab, &items);
        assert_eq!(text.lines().next().unwrap(), r#"{"w":["(","0",")"],"y":0.5}"#);
        assert_eq!(from_jsonl(&ab, &text).unwrap(), items);
        assert!(matches!(from_jsonl(&ab, r#"{"w":["x"],"y":1}"#), Err(Error::UnknownSymbol(_))));
        assert!(matches!(from_jsonl(&ab, r#"{"w":[],"z":1}"#), Err(Error::Schema(_))));
    }
}
