//! Class-incremental training: disjoint sessions, shape-model replay with
//! distillation, evaluation, and the fine-tune / joint / raw-exemplar
//! reference runs.

mod metrics;
mod schedule;

pub use metrics::MetricsReport;
pub use schedule::{split_tasks, TaskSchedule};

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::data::{ClassData, Dataset};
use crate::error::{Error, Result};
use crate::geometry::{CorrespondedSet, Point, PointCloud};
use crate::losses::{total_loss, LossConfig, ReplaySample, Sample};
use crate::network::{self, expand_head, forward, init_params, ClassifierParams};
use crate::optim::{Adam, AdamConfig};
use crate::rng;
use crate::shapemodel::{
    build_shape_model, generate_replay_batch_with, memory_footprint, ShapeModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Shape-model replay with distillation, focal loss and GMR.
    Replay,
    /// New data only: no memory, no distillation.
    Finetune,
    /// Every session trains on all data of every class seen so far.
    Joint,
    /// `k + 1` stored training clouds per class, replayed verbatim.
    RawExemplar,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Replay => "replay",
            Mode::Finetune => "finetune",
            Mode::Joint => "joint",
            Mode::RawExemplar => "raw_exemplar",
        }
    }

    pub fn from_name(s: &str) -> Option<Mode> {
        [Mode::Replay, Mode::Finetune, Mode::Joint, Mode::RawExemplar]
            .into_iter()
            .find(|m| m.name() == s)
    }

    fn distills(self) -> bool {
        matches!(self, Mode::Replay | Mode::RawExemplar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplayRefresh {
    /// Fresh coefficients every epoch.
    Epoch,
    /// One replay set per session, reused by every epoch.
    Session,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    pub h1: usize,
    pub h2: usize,
    pub h3: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            h1: network::DEFAULT_H1,
            h2: network::DEFAULT_H2,
            h3: network::DEFAULT_H3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub n_s: usize,
    pub alpha: f64,
    pub k: usize,
    pub loss: LossConfig,
    pub net: NetConfig,
    pub replay_refresh: ReplayRefresh,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 32,
            adam: AdamConfig::default(),
            n_s: crate::shapemodel::DEFAULT_NS,
            alpha: crate::shapemodel::DEFAULT_ALPHA,
            k: crate::shapemodel::DEFAULT_K,
            loss: LossConfig::default(),
            net: NetConfig::default(),
            replay_refresh: ReplayRefresh::Epoch,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.epochs == 0 || self.batch_size == 0 || self.n_s == 0 {
            return bad("epochs, batch_size and n_s must be >= 1");
        }
        if self.k > crate::shapemodel::MAX_K {
            return bad("k must be in 0..=8");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be >= 0");
        }
        let a = &self.adam;
        if !(a.learning_rate > 0.0
            && (0.0..1.0).contains(&a.beta1)
            && (0.0..1.0).contains(&a.beta2)
            && a.eps > 0.0)
        {
            return bad("invalid Adam settings");
        }
        if self.net.h1 == 0 || self.net.h2 == 0 || self.net.h3 == 0 {
            return bad("hidden widths must be >= 1");
        }
        Ok(())
    }
}

/// Raw clouds kept for one class (raw-exemplar and joint runs).
#[derive(Debug, Clone, PartialEq)]
pub struct StoredClass {
    pub class_id: String,
    pub clouds: Vec<PointCloud>,
}

#[derive(Debug, Clone)]
pub struct SessionState {
    pub params: ClassifierParams,
    /// Model at the end of the previous session; present from session 2 on.
    pub teacher: Option<ClassifierParams>,
    pub memory: Vec<ShapeModel>,
    pub stored: Vec<StoredClass>,
    pub seen_classes: Vec<String>,
    pub history: Vec<f64>,
}

impl SessionState {
    pub fn new(cfg: &TrainConfig) -> Self {
        Self {
            params: init_params(cfg.net.h1, cfg.net.h2, cfg.net.h3, 0, cfg.seed),
            teacher: None,
            memory: Vec::new(),
            stored: Vec::new(),
            seen_classes: Vec::new(),
            history: Vec::new(),
        }
    }

    fn label_of(&self, class_id: &str) -> Result<usize> {
        self.seen_classes
            .iter()
            .position(|c| c == class_id)
            .ok_or_else(|| Error::UnseenLabel(class_id.to_string()))
    }

    pub fn memory_units(&self, mode: Mode) -> usize {
        match mode {
            Mode::Replay => memory_footprint(&self.memory).units,
            _ => self.stored.iter().map(|s| s.clouds.len()).sum(),
        }
    }
}

/// Shape model of one class from its training clouds, corresponded by nearest
/// neighbour against the first cloud.
pub fn class_shape_model(class: &ClassData, k: usize) -> Result<ShapeModel> {
    let reference = class.train.first().ok_or(Error::EmptySet)?;
    let set = CorrespondedSet::from_clouds(class.class_id.clone(), reference, &class.train)?;
    build_shape_model(&set, k)
}

struct ReplayItem {
    points: Vec<Point>,
    label: usize,
    /// index into `SessionState::memory`, `None` for stored clouds
    model: Option<usize>,
}

fn draw_replay(
    state: &SessionState,
    cfg: &TrainConfig,
    mode: Mode,
    rng: &mut rng::Rng,
) -> Result<Vec<ReplayItem>> {
    let mut items = Vec::new();
    match mode {
        Mode::Replay => {
            for (mi, model) in state.memory.iter().enumerate() {
                let label = state.label_of(&model.class_id)?;
                for s in generate_replay_batch_with(model, cfg.n_s, cfg.alpha, rng)? {
                    items.push(ReplayItem {
                        points: s.points,
                        label,
                        model: Some(mi),
                    });
                }
            }
        }
        Mode::RawExemplar => {
            for stored in &state.stored {
                let label = state.label_of(&stored.class_id)?;
                for i in 0..cfg.n_s {
                    items.push(ReplayItem {
                        points: stored.clouds[i % stored.clouds.len()].points.clone(),
                        label,
                        model: None,
                    });
                }
            }
        }
        Mode::Finetune | Mode::Joint => {}
    }
    Ok(items)
}

fn step(
    params: &mut ClassifierParams,
    opt: &mut Adam,
    teacher: Option<&ClassifierParams>,
    batch: &[Sample<'_>],
    replay: &[ReplaySample<'_>],
    loss: &LossConfig,
) -> Result<()> {
    let count = batch.len() + replay.len();
    if count == 0 {
        return Ok(());
    }
    let mut out = total_loss(params, teacher, batch, replay, loss)?;
    out.d_params.scale(1.0 / count as f64);
    opt.step(params, &out.d_params);
    if !params.is_finite() {
        return Err(Error::NonFinite("parameters after optimizer step"));
    }
    Ok(())
}

/// Train one session on the classes in `new_classes` and update the memory.
pub fn run_session(
    mut state: SessionState,
    new_classes: &[ClassData],
    cfg: &TrainConfig,
    mode: Mode,
) -> Result<SessionState> {
    cfg.validate()?;
    if new_classes.is_empty() {
        return Err(Error::EmptyClasses);
    }
    for c in new_classes {
        if state.seen_classes.contains(&c.class_id)
            || new_classes
                .iter()
                .filter(|o| o.class_id == c.class_id)
                .count()
                > 1
        {
            return Err(Error::DisjointnessViolated(c.class_id.clone()));
        }
        if c.train.is_empty() {
            return Err(Error::EmptySet);
        }
    }
    let session = state.history.len() as u64;
    let had_old = !state.seen_classes.is_empty();
    let snapshot = had_old.then(|| state.params.clone());
    let teacher = if mode.distills() {
        snapshot.clone()
    } else {
        None
    };

    state
        .seen_classes
        .extend(new_classes.iter().map(|c| c.class_id.clone()));
    state.params = expand_head(&state.params, state.seen_classes.len(), cfg.seed)?;

    let mut train: Vec<(&[Point], usize)> = Vec::new();
    for c in new_classes {
        let label = state.label_of(&c.class_id)?;
        train.extend(c.train.iter().map(|pc| (pc.points.as_slice(), label)));
    }
    if mode == Mode::Joint {
        for s in &state.stored {
            let label = state.label_of(&s.class_id)?;
            train.extend(s.clouds.iter().map(|pc| (pc.points.as_slice(), label)));
        }
    }

    let mut rng = rng::stream(cfg.seed, "session", session);
    let mut opt = Adam::new(cfg.adam, &state.params);
    let mut params = state.params.clone();
    let mut fixed_replay = None;
    let mut order: Vec<usize> = (0..train.len()).collect();

    for _epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut replay = match (cfg.replay_refresh, fixed_replay.take()) {
            (ReplayRefresh::Session, Some(r)) => r,
            _ => draw_replay(&state, cfg, mode, &mut rng)?,
        };
        replay.shuffle(&mut rng);

        let batches: Vec<&[usize]> = order.chunks(cfg.batch_size).collect();
        let nb = batches.len();
        for (bi, idx) in batches.iter().enumerate() {
            let batch: Vec<Sample<'_>> = idx
                .iter()
                .map(|&i| Sample {
                    points: train[i].0,
                    label: train[i].1,
                })
                .collect();
            let lo = bi * replay.len() / nb;
            let hi = (bi + 1) * replay.len() / nb;
            let chunk: Vec<ReplaySample<'_>> = replay[lo..hi]
                .iter()
                .map(|r| ReplaySample {
                    points: &r.points,
                    label: r.label,
                    modes: r
                        .model
                        .map(|m| state.memory[m].modes.as_slice())
                        .unwrap_or(&[]),
                })
                .collect();
            step(
                &mut params,
                &mut opt,
                teacher.as_ref(),
                &batch,
                &chunk,
                &cfg.loss,
            )?;
        }
        if cfg.replay_refresh == ReplayRefresh::Session {
            fixed_replay = Some(replay);
        }
    }
    state.params = params;

    match mode {
        Mode::Replay => {
            for c in new_classes {
                state.memory.push(class_shape_model(c, cfg.k)?);
            }
        }
        Mode::RawExemplar => {
            for c in new_classes {
                let ci = state.label_of(&c.class_id)? as u64;
                let mut pick = rng::stream(cfg.seed, "exemplar", ci);
                let keep = (cfg.k + 1).min(c.train.len());
                let mut chosen = index::sample(&mut pick, c.train.len(), keep).into_vec();
                chosen.sort_unstable();
                state.stored.push(StoredClass {
                    class_id: c.class_id.clone(),
                    clouds: chosen.into_iter().map(|i| c.train[i].clone()).collect(),
                });
            }
        }
        Mode::Joint => {
            for c in new_classes {
                state.stored.push(StoredClass {
                    class_id: c.class_id.clone(),
                    clouds: c.train.clone(),
                });
            }
        }
        Mode::Finetune => {}
    }
    state.teacher = snapshot;
    Ok(state)
}

/// Index of the largest of the first `classes` logits (lowest index on ties).
pub fn predict(params: &ClassifierParams, points: &[Point], classes: usize) -> Result<usize> {
    let rec = forward(params, points)?;
    let mut best = 0;
    for (j, z) in rec.logits.iter().enumerate().take(classes) {
        if *z > rec.logits[best] {
            best = j;
        }
    }
    Ok(best)
}

/// Top-1 accuracy over `test`, whose labels must all be in `seen_classes`.
pub fn evaluate(
    params: &ClassifierParams,
    test: &[PointCloud],
    seen_classes: &[String],
) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut correct = 0usize;
    for pc in test {
        let label = pc.label.as_deref().unwrap_or("<unlabeled>");
        let target = seen_classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::UnseenLabel(label.to_string()))?;
        if predict(params, &pc.points, seen_classes.len())? == target {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

fn test_set(dataset: &Dataset, seen: &[String]) -> Result<Vec<PointCloud>> {
    let mut out = Vec::new();
    for id in seen {
        let class = dataset
            .class(id)
            .ok_or_else(|| Error::UnseenLabel(id.clone()))?;
        out.extend(class.test.iter().map(|pc| {
            let mut pc = pc.clone();
            pc.label = Some(id.clone());
            pc
        }));
    }
    Ok(out)
}

/// Run every session of `schedule`, evaluating on all seen classes after each.
pub fn run_protocol_with_state(
    dataset: &Dataset,
    schedule: &TaskSchedule,
    cfg: &TrainConfig,
    mode: Mode,
) -> Result<(MetricsReport, SessionState)> {
    schedule.validate()?;
    let mut state = SessionState::new(cfg);
    let mut seen_counts = Vec::with_capacity(schedule.len());
    for classes in &schedule.sessions {
        let data = classes
            .iter()
            .map(|id| {
                dataset
                    .class(id)
                    .cloned()
                    .ok_or_else(|| Error::UnseenLabel(id.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        state = run_session(state, &data, cfg, mode)?;
        let test = test_set(dataset, &state.seen_classes)?;
        let acc = evaluate(&state.params, &test, &state.seen_classes)?;
        state.history.push(acc);
        seen_counts.push(state.seen_classes.len());
    }
    let units = state.memory_units(mode);
    Ok((
        MetricsReport::from_sessions(state.history.clone(), seen_counts, units),
        state,
    ))
}

pub fn run_protocol(
    dataset: &Dataset,
    schedule: &TaskSchedule,
    cfg: &TrainConfig,
    mode: Mode,
) -> Result<MetricsReport> {
    run_protocol_with_state(dataset, schedule, cfg, mode).map(|(r, _)| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::build_benchmark;

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            epochs: 2,
            net: NetConfig {
                h1: 8,
                h2: 16,
                h3: 8,
            },
            seed: 5,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn first_session_has_no_teacher_and_fills_memory() {
        let b = build_benchmark(4, 4, 2, 32, 1).unwrap();
        let cfg = small_cfg();
        let state = run_session(
            SessionState::new(&cfg),
            &b.dataset.classes[..2],
            &cfg,
            Mode::Replay,
        )
        .unwrap();
        assert!(state.teacher.is_none());
        assert_eq!(state.memory.len(), 2);
        assert_eq!(state.params.classes(), 2);
        let state = run_session(state, &b.dataset.classes[2..], &cfg, Mode::Replay).unwrap();
        assert!(state.teacher.is_some());
        assert_eq!(state.teacher.as_ref().unwrap().classes(), 2);
        assert_eq!(state.memory_units(Mode::Replay), (cfg.k + 1) * 4);
    }

    #[test]
    fn repeated_class_is_rejected() {
        let b = build_benchmark(2, 3, 1, 16, 1).unwrap();
        let cfg = small_cfg();
        let state = run_session(
            SessionState::new(&cfg),
            &b.dataset.classes[..1],
            &cfg,
            Mode::Finetune,
        )
        .unwrap();
        assert!(matches!(
            run_session(state, &b.dataset.classes[..1], &cfg, Mode::Finetune),
            Err(Error::DisjointnessViolated(_))
        ));
    }

    #[test]
    fn evaluate_guards_and_constant_predictor() {
        let mut p = init_params(4, 4, 4, 2, 0);
        p.scale(0.0);
        p.head.b = vec![0.0, 1.0];
        let seen = vec!["a".to_string(), "b".to_string()];
        let pts = vec![[0.1, 0.2, 0.3]];
        let b_only = vec![PointCloud::labeled(pts.clone(), "b"); 5];
        assert_eq!(evaluate(&p, &b_only, &seen).unwrap(), 1.0);
        let mut balanced = b_only.clone();
        balanced.extend(vec![PointCloud::labeled(pts.clone(), "a"); 5]);
        assert_eq!(evaluate(&p, &balanced, &seen).unwrap(), 0.5);
        assert!(matches!(evaluate(&p, &[], &seen), Err(Error::EmptySet)));
        assert!(matches!(
            evaluate(&p, &[PointCloud::labeled(pts, "z")], &seen),
            Err(Error::UnseenLabel(_))
        ));
    }

    #[test]
    fn raw_exemplar_keeps_k_plus_one() {
        let b = build_benchmark(2, 6, 1, 16, 2).unwrap();
        let cfg = small_cfg();
        let schedule = split_tasks(&b.dataset.class_ids(), 1).unwrap();
        let (report, state) =
            run_protocol_with_state(&b.dataset, &schedule, &cfg, Mode::RawExemplar).unwrap();
        assert!(state.stored.iter().all(|s| s.clouds.len() == cfg.k + 1));
        assert_eq!(report.memory_units, 2 * (cfg.k + 1));
    }

    #[test]
    fn modes_round_trip_names() {
        for m in [Mode::Replay, Mode::Finetune, Mode::Joint, Mode::RawExemplar] {
            assert_eq!(Mode::from_name(m.name()), Some(m));
        }
    }
}
