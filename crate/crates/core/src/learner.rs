//! The extraction loop: close the observation table, synthesize a WFA, ask an
//! equivalence query, and either add the counterexample or, when the same
//! counterexample comes back twice in a row, shrink the rank tolerance.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{CachedOracle, Oracle, QueryStats};
use crate::regression::RegressorSettings;
use crate::search::{bfs_eq, regression_eq, EqResult, EquivalentReason, SearchParams, TraceEvent};
use crate::table::ObservationTable;
use crate::wfa::{Wfa, Word};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EqEngine {
    /// Regression-guided best-first search with concentration threshold `M`.
    Regression { concentration: usize },
    /// Shortlex scan of `n` more words per query.
    Bfs { n: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub e: f64,
    /// Length heuristic `L`.
    pub max_len: usize,
    pub tau0: f64,
    /// Decay rate `r` applied to `τ` on a repeated counterexample.
    pub decay: f64,
    pub engine: EqEngine,
    pub max_eq_rounds: usize,
    pub max_pops: usize,
    pub regressor: RegressorSettings,
    pub seed: u64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            e: 0.05,
            max_len: 20,
            tau0: 1e-2,
            decay: 0.5,
            engine: EqEngine::Regression { concentration: 5 },
            max_eq_rounds: 50,
            max_pops: 100_000,
            regressor: RegressorSettings::default(),
            seed: 0,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.e > 0.0 && self.e.is_finite()) {
            return bad("e must be positive");
        }
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return bad("tau0 must be positive");
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return bad("decay rate must lie in (0, 1)");
        }
        if self.max_len == 0 {
            return bad("L must be at least 1");
        }
        if let EqEngine::Regression { concentration: 0 } = self.engine {
            return bad("M must be at least 1");
        }
        if let EqEngine::Bfs { n: 0 } = self.engine {
            return bad("bfs budget must be at least 1");
        }
        let RegressorSettings { length_scale, ridge } = self.regressor;
        if length_scale.is_nan() || length_scale <= 0.0 || ridge.is_nan() || ridge < 0.0 {
            return bad("regressor length scale must be positive and ridge nonnegative");
        }
        Ok(())
    }

    fn search_params(&self, concentration: usize) -> SearchParams {
        SearchParams {
            e: self.e,
            concentration,
            max_len: self.max_len,
            max_pops: self.max_pops,
            regressor: self.regressor,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractionStatus {
    Equivalent(EquivalentReason),
    MaxRounds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub tau: f64,
    pub states: usize,
    pub access_words: usize,
    pub test_words: usize,
    pub promotions: usize,
    pub result: EqResult,
    /// The counterexample repeated the previous one and `τ` was decayed.
    pub decayed: bool,
    pub pops: usize,
    pub refits: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub table_secs: f64,
    pub synthesis_secs: f64,
    pub equivalence_secs: f64,
}

/// Everything needed to continue a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerState {
    pub access: Vec<Word>,
    pub tests: Vec<Word>,
    pub tau: f64,
    pub last_counterexample: Option<Word>,
    pub bfs_index: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub config: ExtractionConfig,
    pub wfa: Wfa,
    pub status: ExtractionStatus,
    pub rounds: Vec<RoundRecord>,
    pub counterexamples: Vec<Word>,
    /// `τ` used for each round's hypothesis.
    pub tau_trajectory: Vec<f64>,
    pub queries: QueryStats,
    pub timings: PhaseTimings,
    pub state: LearnerState,
}

impl ExtractionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn n_rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_finished(&self) -> bool {
        matches!(
            self.status,
            ExtractionStatus::Equivalent(EquivalentReason::QueueExhausted | EquivalentReason::LengthHeuristic)
        )
    }
}

pub fn extract<O: Oracle + ?Sized>(oracle: &O, cfg: &ExtractionConfig) -> Result<ExtractionReport> {
    extract_with_trace(oracle, cfg, &mut |_| {})
}

/// [`extract`], forwarding every search pop to `trace`.
pub fn extract_with_trace<O: Oracle + ?Sized>(
    oracle: &O,
    cfg: &ExtractionConfig,
    trace: &mut dyn FnMut(TraceEvent),
) -> Result<ExtractionReport> {
    cfg.validate()?;
    let cached = CachedOracle::new(oracle);
    let table = ObservationTable::new(&cached);
    let state = LearnerState {
        access: table.access().to_vec(),
        tests: table.tests().to_vec(),
        tau: cfg.tau0,
        last_counterexample: None,
        bfs_index: 0,
    };
    let report = ExtractionReport {
        config: *cfg,
        wfa: Wfa::zero(oracle.alphabet().clone()),
        status: ExtractionStatus::MaxRounds,
        rounds: Vec::new(),
        counterexamples: Vec::new(),
        tau_trajectory: Vec::new(),
        queries: QueryStats::default(),
        timings: PhaseTimings::default(),
        state,
    };
    run(&cached, table, report, cfg.max_eq_rounds, trace)
}

/// Continues a run for up to `more_rounds` equivalence rounds. Runs that
/// ended with a genuine equivalence verdict are returned unchanged; runs that
/// hit a round or pop budget pick up from the stored table and `τ`.
pub fn resume<O: Oracle + ?Sized>(oracle: &O, report: &ExtractionReport, more_rounds: usize) -> Result<ExtractionReport> {
    resume_with_trace(oracle, report, more_rounds, &mut |_| {})
}

pub fn resume_with_trace<O: Oracle + ?Sized>(
    oracle: &O,
    report: &ExtractionReport,
    more_rounds: usize,
    trace: &mut dyn FnMut(TraceEvent),
) -> Result<ExtractionReport> {
    if oracle.alphabet() != report.wfa.alphabet() {
        return Err(Error::OracleMismatch(format!(
            "report alphabet {:?} differs from oracle alphabet {:?}",
            report.wfa.alphabet().symbols(),
            oracle.alphabet().symbols()
        )));
    }
    report.config.validate()?;
    if report.is_finished() || more_rounds == 0 {
        return Ok(report.clone());
    }
    let cached = CachedOracle::new(oracle);
    let table = ObservationTable::from_words(&cached, &report.state.access, &report.state.tests)?;
    let previous_queries = report.queries;
    let mut out = run(&cached, table, report.clone(), more_rounds, trace)?;
    out.queries.membership_queries += previous_queries.membership_queries;
    out.queries.config_queries += previous_queries.config_queries;
    out.queries.distinct_words = out.queries.distinct_words.max(previous_queries.distinct_words);
    Ok(out)
}

fn run<O: Oracle>(
    oracle: &CachedOracle<O>,
    mut table: ObservationTable,
    mut report: ExtractionReport,
    max_rounds: usize,
    trace: &mut dyn FnMut(TraceEvent),
) -> Result<ExtractionReport> {
    let cfg = report.config;
    let mut tau = report.state.tau;
    let mut last = report.state.last_counterexample.clone();
    let mut bfs_index = report.state.bfs_index;
    report.status = ExtractionStatus::MaxRounds;

    for _ in 0..max_rounds {
        let round = report.rounds.len();

        let t = Instant::now();
        let promotions = table.close(oracle, tau)?;
        report.timings.table_secs += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let hypothesis = table.synthesize(tau)?;
        report.timings.synthesis_secs += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let (result, pops, refits) = match cfg.engine {
            EqEngine::Bfs { n } => {
                let out = bfs_eq(oracle, &hypothesis, cfg.e, n, bfs_index);
                bfs_index = out.index;
                (out.result, 0, 0)
            }
            EqEngine::Regression { concentration } => {
                let params = cfg.search_params(concentration);
                let out = regression_eq(oracle, &hypothesis, &params, &mut |mut ev| {
                    ev.round = round;
                    trace(ev)
                })?;
                (out.result, out.pops, out.refits)
            }
        };
        report.timings.equivalence_secs += t.elapsed().as_secs_f64();

        let (access_words, test_words) = table.size();
        let mut record = RoundRecord {
            round,
            tau,
            states: hypothesis.n_states(),
            access_words,
            test_words,
            promotions,
            result: result.clone(),
            decayed: false,
            pops,
            refits,
        };
        report.tau_trajectory.push(tau);
        report.wfa = hypothesis;

        match result {
            EqResult::Equivalent(reason) => {
                report.status = ExtractionStatus::Equivalent(reason);
                report.rounds.push(record);
                break;
            }
            EqResult::Counterexample { word, .. } => {
                if last.as_ref() == Some(&word) {
                    tau *= cfg.decay;
                    record.decayed = true;
                } else {
                    let t = Instant::now();
                    table.add_counterexample(oracle, &word);
                    report.timings.table_secs += t.elapsed().as_secs_f64();
                }
                report.counterexamples.push(word.clone());
                last = Some(word);
                report.rounds.push(record);
            }
        }
    }

    report.queries = oracle.stats();
    report.state = LearnerState {
        access: table.access().to_vec(),
        tests: table.tests().to_vec(),
        tau,
        last_counterexample: last,
        bfs_index,
    };
    Ok(report)
}
