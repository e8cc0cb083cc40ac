//! Teacher/student curriculum orchestration.
//!
//! Data level: a teacher trained for `e0` epochs on the full corpus scores
//! every sentence, and the ascending ranking seeds the student's pool.
//!
//! Model level: for each student epoch, while the pacing value is below 1
//! the student trains on the selected pool, re-scores the remaining sentences
//! with its current parameters, and admits the easiest of them until the pool
//! reaches the next epoch's target size. Once everything is admitted, training
//! continues on the full corpus without further scoring.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::clock::Stopwatch;
use crate::corpus::{Dataset, Instance, Scheme};
use crate::difficulty::{self, DifficultyScore, MetricConfig};
use crate::eval::{evaluate_tagger, EvalReport};
use crate::rng::{self, tag};
use crate::scheduler::{lambda_at, target_size, ScheduleConfig};
use crate::tagger::{TaggerConfig, TaggerParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Teacher epochs.
    pub e0: usize,
    /// Student epochs.
    pub es: usize,
    pub schedule: ScheduleConfig,
    pub metric: MetricConfig,
    pub tagger: TaggerConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            e0: 5,
            es: 50,
            schedule: ScheduleConfig::default(),
            metric: MetricConfig::default(),
            tagger: TaggerConfig::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.e0 < 1 {
            return Err(Error::Config("teacher epochs e0 must be >= 1".into()));
        }
        if self.es < 1 {
            return Err(Error::Config("student epochs es must be >= 1".into()));
        }
        if self.e0 >= self.es {
            return Err(Error::Config(format!(
                "teacher epochs ({}) must be fewer than student epochs ({})",
                self.e0, self.es
            )));
        }
        self.schedule.validate()?;
        self.metric.validate()?;
        self.tagger.validate()
    }

    /// Sets the run seed and the tagger/metric seeds it governs.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.tagger.seed = seed;
        self.metric.seed = seed;
        self
    }
}

/// The selected pool and the ranked remainder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumState {
    pub selected: Vec<usize>,
    pub remaining: Vec<usize>,
    pub epoch: usize,
    pub lambda: f64,
    pub corpus_size: usize,
}

impl CurriculumState {
    /// `selected` and `remaining` must partition `0..corpus_size`.
    pub fn check_partition(&self) -> Result<()> {
        let violation = |message: String| Error::Invariant {
            epoch: self.epoch,
            message,
        };
        if self.selected.len() + self.remaining.len() != self.corpus_size {
            return Err(violation(format!(
                "{} selected + {} remaining != {}",
                self.selected.len(),
                self.remaining.len(),
                self.corpus_size
            )));
        }
        let mut seen = vec![false; self.corpus_size];
        for &id in self.selected.iter().chain(&self.remaining) {
            if id >= self.corpus_size || std::mem::replace(&mut seen[id], true) {
                return Err(violation(format!("sentence {id} is out of range or duplicated")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherRecord {
    pub epochs: usize,
    pub train_loss: f64,
    pub dev_f1_cws: f64,
    pub dev_f1_joint: Option<f64>,
    pub cumulative_sentence_visits: u64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Pacing value the epoch trained under.
    pub lambda: f64,
    /// Sentences trained on this epoch.
    pub selected_size: usize,
    /// Sentences admitted after this epoch.
    pub newly_added: usize,
    pub train_loss: f64,
    pub dev_f1_cws: f64,
    pub dev_f1_joint: Option<f64>,
    pub cumulative_sentence_visits: u64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub total_wall_ms: u64,
    pub total_visits: u64,
    pub best_dev_f1: f64,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LogRecord {
    Teacher(TeacherRecord),
    Epoch(EpochRecord),
    Summary(SummaryRecord),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    pub records: Vec<LogRecord>,
}

impl RunLog {
    pub fn teacher(&self) -> Option<&TeacherRecord> {
        self.records.iter().find_map(|r| match r {
            LogRecord::Teacher(t) => Some(t),
            _ => None,
        })
    }

    pub fn epochs(&self) -> impl Iterator<Item = &EpochRecord> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Epoch(e) => Some(e),
            _ => None,
        })
    }

    pub fn summary(&self) -> Option<&SummaryRecord> {
        self.records.iter().find_map(|r| match r {
            LogRecord::Summary(s) => Some(s),
            _ => None,
        })
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses JSON lines; `source` names the input in error messages.
    pub fn from_jsonl(text: &str, source: &std::path::Path) -> Result<RunLog> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record = serde_json::from_str(line).map_err(|e| Error::RunLog {
                path: source.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            records.push(record);
        }
        Ok(RunLog { records })
    }
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub student: TaggerParams,
    /// Student parameters at the epoch with the best dev segmentation F1.
    pub best: TaggerParams,
    pub teacher: Option<TaggerParams>,
    pub log: RunLog,
}

fn check_ids(instances: &[Instance]) -> Result<()> {
    for (i, s) in instances.iter().enumerate() {
        if s.id != i {
            return Err(Error::Config(format!("sentence ids must be 0..n, found {} at {i}", s.id)));
        }
    }
    if instances.is_empty() {
        return Err(Error::Empty("training set is empty".into()));
    }
    Ok(())
}

fn check_compatible(train: &Dataset, dev: &Dataset) -> Result<()> {
    if train.label_set != dev.label_set || train.vocab != dev.vocab {
        return Err(Error::Config("train and dev must share label set and vocabulary".into()));
    }
    Ok(())
}

fn dev_scores(report: &EvalReport) -> (f64, Option<f64>) {
    (report.cws.f1, report.joint.map(|j| j.f1))
}

fn init_params(train: &Dataset, cfg: &RunConfig, stage: u64) -> TaggerParams {
    TaggerParams::init(
        &cfg.tagger,
        train.vocab.len(),
        train.label_set.len(),
        &mut rng::stream(cfg.seed, &[stage]),
    )
}

/// Trains a fresh teacher on all of `train` for exactly `cfg.e0` epochs.
pub fn train_teacher(train: &Dataset, cfg: &RunConfig) -> Result<TaggerParams> {
    cfg.validate()?;
    let instances = train.instances();
    check_ids(&instances)?;
    let refs: Vec<&Instance> = instances.iter().collect();
    let mut params = init_params(train, cfg, tag::TEACHER_INIT);
    for e in 0..cfg.e0 {
        params.train_one_epoch(&refs, &cfg.tagger, &mut rng::stream(cfg.seed, &[tag::TEACHER_EPOCH, e as u64]))?;
    }
    Ok(params)
}

/// Sentence ids by ascending score; equal scores keep ascending id order.
pub fn rank_ascending(scores: &[DifficultyScore]) -> Result<Vec<usize>> {
    let mut seen = HashSet::with_capacity(scores.len());
    for s in scores {
        if !seen.insert(s.sentence_id) {
            return Err(Error::DuplicateId(s.sentence_id));
        }
    }
    let mut sorted: Vec<&DifficultyScore> = scores.iter().collect();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.sentence_id.cmp(&b.sentence_id)));
    Ok(sorted.into_iter().map(|s| s.sentence_id).collect())
}

fn score(
    params: Option<&TaggerParams>,
    sentences: &[&Instance],
    metric: &MetricConfig,
    dropout_rate: f64,
    round: u64,
) -> Result<Vec<DifficultyScore>> {
    #[cfg(feature = "parallel")]
    {
        difficulty::score_dataset_parallel(params, sentences, metric, dropout_rate, round)
    }
    #[cfg(not(feature = "parallel"))]
    {
        difficulty::score_dataset(params, sentences, metric, dropout_rate, round)
    }
}

struct BestTracker {
    f1: f64,
    epoch: usize,
    params: Option<TaggerParams>,
}

impl BestTracker {
    fn new() -> Self {
        BestTracker {
            f1: f64::NEG_INFINITY,
            epoch: 0,
            params: None,
        }
    }

    fn offer(&mut self, epoch: usize, f1: f64, params: &TaggerParams) {
        if f1 > self.f1 {
            self.f1 = f1;
            self.epoch = epoch;
            self.params = Some(params.clone());
        }
    }
}

/// Full two-stage curriculum run.
pub fn run_tcl(train: &Dataset, dev: &Dataset, cfg: &RunConfig) -> Result<RunOutcome> {
    run_tcl_observed(train, dev, cfg, &mut |_| {})
}

/// [`run_tcl`] with a callback receiving the curriculum state after every
/// student epoch's update.
pub fn run_tcl_observed(
    train: &Dataset,
    dev: &Dataset,
    cfg: &RunConfig,
    observer: &mut dyn FnMut(&CurriculumState),
) -> Result<RunOutcome> {
    cfg.validate()?;
    check_compatible(train, dev)?;
    let total = Stopwatch::start();
    let instances = train.instances();
    check_ids(&instances)?;
    let dev_instances = dev.instances();
    let n = instances.len();
    let all: Vec<&Instance> = instances.iter().collect();
    let metric = MetricConfig {
        seed: cfg.seed,
        ..cfg.metric.clone()
    };
    let mut records = Vec::with_capacity(cfg.es + 2);

    // Data level.
    let clock = Stopwatch::start();
    let mut teacher = init_params(train, cfg, tag::TEACHER_INIT);
    let mut teacher_loss = 0.0;
    for e in 0..cfg.e0 {
        teacher_loss =
            teacher.train_one_epoch(&all, &cfg.tagger, &mut rng::stream(cfg.seed, &[tag::TEACHER_EPOCH, e as u64]))?;
    }
    let mut visits = (cfg.e0 * n) as u64;
    let (f1_cws, f1_joint) = dev_scores(&evaluate_tagger(&teacher, &dev_instances, &dev.label_set)?);
    let teacher_scores = score(Some(&teacher), &all, &metric, cfg.tagger.dropout_rate, 0)?;
    let ranked = rank_ascending(&teacher_scores)?;
    records.push(LogRecord::Teacher(TeacherRecord {
        epochs: cfg.e0,
        train_loss: teacher_loss,
        dev_f1_cws: f1_cws,
        dev_f1_joint: f1_joint,
        cumulative_sentence_visits: visits,
        wall_ms: clock.elapsed_ms(),
    }));

    // Model level.
    let m0 = target_size(&cfg.schedule, 0, n);
    let mut state = CurriculumState {
        selected: ranked[..m0].to_vec(),
        remaining: ranked[m0..].to_vec(),
        epoch: 0,
        lambda: lambda_at(&cfg.schedule, 0),
        corpus_size: n,
    };
    let mut student = init_params(train, cfg, tag::STUDENT_INIT);
    let mut best = BestTracker::new();

    for e in 0..cfg.es {
        let clock = Stopwatch::start();
        let lambda = state.lambda;
        let trained_on = state.selected.len();
        let pool: Vec<&Instance> = state.selected.iter().map(|&id| &instances[id]).collect();
        let loss =
            student.train_one_epoch(&pool, &cfg.tagger, &mut rng::stream(cfg.seed, &[tag::STUDENT_EPOCH, e as u64]))?;
        visits += trained_on as u64;

        let mut added = 0;
        if lambda < 1.0 {
            let rest: Vec<&Instance> = state.remaining.iter().map(|&id| &instances[id]).collect();
            let scores = score(Some(&student), &rest, &metric, cfg.tagger.dropout_rate, e as u64 + 1)?;
            let reranked = rank_ascending(&scores)?;
            state.lambda = lambda_at(&cfg.schedule, e + 1);
            let target = target_size(&cfg.schedule, e + 1, n);
            added = target.saturating_sub(state.selected.len()).min(reranked.len());
            state.selected.extend_from_slice(&reranked[..added]);
            state.remaining = reranked[added..].to_vec();
            if state.selected.len() != target {
                return Err(Error::Invariant {
                    epoch: e,
                    message: format!("selected {} sentences, schedule target is {target}", state.selected.len()),
                });
            }
        }
        state.epoch = e + 1;
        state.check_partition()?;
        observer(&state);

        let (f1_cws, f1_joint) = dev_scores(&evaluate_tagger(&student, &dev_instances, &dev.label_set)?);
        best.offer(e, f1_cws, &student);
        records.push(LogRecord::Epoch(EpochRecord {
            epoch: e,
            lambda,
            selected_size: trained_on,
            newly_added: added,
            train_loss: loss,
            dev_f1_cws: f1_cws,
            dev_f1_joint: f1_joint,
            cumulative_sentence_visits: visits,
            wall_ms: clock.elapsed_ms(),
        }));
        log::info!(
            "tcl epoch {e}: lambda {lambda:.4}, trained on {trained_on}, added {added}, loss {loss:.4}, dev F1 {f1_cws:.4}"
        );
    }

    records.push(LogRecord::Summary(SummaryRecord {
        total_wall_ms: total.elapsed_ms(),
        total_visits: visits,
        best_dev_f1: best.f1,
        best_epoch: best.epoch,
    }));
    Ok(RunOutcome {
        best: best.params.unwrap_or_else(|| student.clone()),
        student,
        teacher: Some(teacher),
        log: RunLog { records },
    })
}

/// Control arm: a fresh student on the whole corpus for `es` epochs.
pub fn run_baseline(train: &Dataset, dev: &Dataset, cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    check_compatible(train, dev)?;
    let total = Stopwatch::start();
    let instances = train.instances();
    check_ids(&instances)?;
    let dev_instances = dev.instances();
    let all: Vec<&Instance> = instances.iter().collect();
    let mut student = init_params(train, cfg, tag::STUDENT_INIT);
    let mut best = BestTracker::new();
    let mut records = Vec::with_capacity(cfg.es + 1);
    let mut visits = 0u64;
    for e in 0..cfg.es {
        let clock = Stopwatch::start();
        let loss =
            student.train_one_epoch(&all, &cfg.tagger, &mut rng::stream(cfg.seed, &[tag::STUDENT_EPOCH, e as u64]))?;
        visits += all.len() as u64;
        let (f1_cws, f1_joint) = dev_scores(&evaluate_tagger(&student, &dev_instances, &dev.label_set)?);
        best.offer(e, f1_cws, &student);
        records.push(LogRecord::Epoch(EpochRecord {
            epoch: e,
            lambda: 1.0,
            selected_size: all.len(),
            newly_added: 0,
            train_loss: loss,
            dev_f1_cws: f1_cws,
            dev_f1_joint: f1_joint,
            cumulative_sentence_visits: visits,
            wall_ms: clock.elapsed_ms(),
        }));
        log::info!("baseline epoch {e}: loss {loss:.4}, dev F1 {f1_cws:.4}");
    }
    records.push(LogRecord::Summary(SummaryRecord {
        total_wall_ms: total.elapsed_ms(),
        total_visits: visits,
        best_dev_f1: best.f1,
        best_epoch: best.epoch,
    }));
    Ok(RunOutcome {
        best: best.params.unwrap_or_else(|| student.clone()),
        student,
        teacher: None,
        log: RunLog { records },
    })
}

/// Whether a dataset carries joint labels.
pub fn is_joint(ds: &Dataset) -> bool {
    ds.label_set.scheme() == Scheme::Joint
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SynthConfig};
    use crate::difficulty::MetricKind;

    fn score_of(id: usize, score: f64) -> DifficultyScore {
        DifficultyScore {
            sentence_id: id,
            score,
            metric: MetricKind::Length,
        }
    }

    #[test]
    fn ranking_ties_by_id() {
        let order = rank_ascending(&[score_of(0, 0.5), score_of(1, 0.1), score_of(2, 0.5)]).unwrap();
        assert_eq!(order, [1, 0, 2]);
        let sorted = [score_of(3, 0.1), score_of(1, 0.2), score_of(2, 0.3)];
        assert_eq!(rank_ascending(&sorted).unwrap(), [3, 1, 2]);
        assert!(matches!(
            rank_ascending(&[score_of(1, 0.0), score_of(1, 1.0)]),
            Err(Error::DuplicateId(1))
        ));
    }

    #[test]
    fn config_validation() {
        let bad = RunConfig {
            e0: 0,
            ..RunConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = RunConfig {
            e0: 50,
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }

    #[test]
    fn partition_check_catches_duplicates() {
        let state = CurriculumState {
            selected: vec![0, 1],
            remaining: vec![1, 2],
            epoch: 3,
            lambda: 0.5,
            corpus_size: 4,
        };
        assert!(state.check_partition().is_err());
    }

    fn tiny_corpus() -> (Dataset, Dataset) {
        let cfg = SynthConfig {
            vocab_a: 40,
            vocab_b: 40,
            chars_per_domain: 60,
            train_size: 60,
            dev_size: 20,
            test_size: 20,
            population: 150,
            ..SynthConfig::default()
        };
        let c = generate_synthetic(&cfg, 1).unwrap();
        (c.train, c.dev)
    }

    fn tiny_run(kind: MetricKind) -> RunConfig {
        RunConfig {
            e0: 1,
            es: 6,
            schedule: ScheduleConfig {
                lambda0: 0.3,
                e_grow: 3,
            },
            metric: MetricConfig::new(kind),
            tagger: TaggerConfig {
                embed_dim: 8,
                hidden_dim: 16,
                ..TaggerConfig::default()
            },
            ..RunConfig::default()
        }
        .with_seed(5)
    }

    #[test]
    fn full_lambda_trains_everything_from_the_start() {
        let (train, dev) = tiny_corpus();
        let mut cfg = tiny_run(MetricKind::Length);
        cfg.schedule.lambda0 = 1.0;
        let out = run_tcl(&train, &dev, &cfg).unwrap();
        assert!(out.log.epochs().all(|e| e.selected_size == train.len()));
    }

    #[test]
    fn growth_follows_schedule() {
        let (train, dev) = tiny_corpus();
        let cfg = tiny_run(MetricKind::Tlc);
        let mut sizes = Vec::new();
        let out = run_tcl_observed(&train, &dev, &cfg, &mut |s| sizes.push(s.selected.len())).unwrap();
        let trained: Vec<usize> = out.log.epochs().map(|e| e.selected_size).collect();
        let expected: Vec<usize> = (0..6).map(|e| target_size(&cfg.schedule, e, 60)).collect();
        assert_eq!(trained, expected);
        assert_eq!(sizes.last(), Some(&60));
        let teacher = out.log.teacher().unwrap().cumulative_sentence_visits;
        assert_eq!(out.log.summary().unwrap().total_visits, teacher + expected.iter().sum::<usize>() as u64);
    }

    #[test]
    fn baseline_counts_visits() {
        let (train, dev) = tiny_corpus();
        let out = run_baseline(&train, &dev, &tiny_run(MetricKind::Bu)).unwrap();
        assert_eq!(out.log.summary().unwrap().total_visits, 6 * 60);
        assert!(out.log.teacher().is_none());
    }

    #[test]
    fn jsonl_roundtrip_and_line_numbers() {
        let (train, dev) = tiny_corpus();
        let out = run_baseline(&train, &dev, &tiny_run(MetricKind::Bu)).unwrap();
        let text = out.log.to_jsonl().unwrap();
        let back = RunLog::from_jsonl(&text, "x.jsonl".as_ref()).unwrap();
        assert_eq!(back, out.log);
        let broken = format!("{}{{oops\n", text);
        match RunLog::from_jsonl(&broken, "x.jsonl".as_ref()) {
            Err(Error::RunLog { line, .. }) => assert_eq!(line, 8),
            other => panic!("expected run log error, got {other:?}"),
        }
    }
}
