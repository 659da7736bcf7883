//! Synthetic task-graph learner and the treatment runner.
//!
//! The learner carries one skill value per task. Effort spent on a task
//! raises its skill in proportion to how learnable it currently is (the
//! product of its prerequisites' skills), while groups of tasks that receive
//! too little combined effort decay together — the mechanism behind
//! correlated forgetting. Success measurements are binomial draws against the
//! capped true success probability, which feed the learning-progress
//! estimator driving curriculum samplers.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::distributions::WeightedIndex;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explore::{BonusMode, ExplorationSet};
use crate::graph::{TaskGraph, TaskId};
use crate::lp::{self, LpState};
use crate::{Real, DISCOVERY_THRESHOLD};

/// Bonus effort is capped so the sampler always keeps some say.
pub const MAX_BONUS_BUDGET: f64 = 0.9;

/// Which distribution proposes tasks each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    Uniform,
    LpBidirectional,
    LpUnidirectional,
}

impl std::fmt::Display for Sampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Sampler::Uniform => "uniform",
            Sampler::LpBidirectional => "lp_bidirectional",
            Sampler::LpUnidirectional => "lp_unidirectional",
        };
        write!(f, "{s}")
    }
}

/// One experimental condition: a sampler plus a bonus mode and coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Treatment {
    pub sampler: Sampler,
    pub bonus_mode: BonusMode,
    #[serde(default)]
    pub bonus_coefficient: f64,
}

impl Treatment {
    pub fn uniform_off() -> Self {
        Self {
            sampler: Sampler::Uniform,
            bonus_mode: BonusMode::Off,
            bonus_coefficient: 0.0,
        }
    }

    pub fn uniform_fixed() -> Self {
        Self {
            sampler: Sampler::Uniform,
            bonus_mode: BonusMode::Fixed,
            bonus_coefficient: crate::explore::FIXED_BONUS_COEFFICIENT,
        }
    }

    pub fn uniform_dynamic() -> Self {
        Self {
            sampler: Sampler::Uniform,
            bonus_mode: BonusMode::Dynamic,
            bonus_coefficient: crate::explore::DYNAMIC_BONUS_COEFFICIENT,
        }
    }

    pub fn lp_bidirectional_dynamic() -> Self {
        Self {
            sampler: Sampler::LpBidirectional,
            bonus_mode: BonusMode::Dynamic,
            bonus_coefficient: crate::explore::DYNAMIC_BONUS_COEFFICIENT,
        }
    }

    pub fn lp_unidirectional_dynamic() -> Self {
        Self {
            sampler: Sampler::LpUnidirectional,
            bonus_mode: BonusMode::Dynamic,
            bonus_coefficient: crate::explore::DYNAMIC_BONUS_COEFFICIENT,
        }
    }

    /// All five named treatments, in the order they are usually compared.
    pub fn named_treatments() -> [(&'static str, Treatment); 5] {
        [
            ("uniform-off", Self::uniform_off()),
            ("uniform-fixed", Self::uniform_fixed()),
            ("uniform-dynamic", Self::uniform_dynamic()),
            ("lp-bidirectional-dynamic", Self::lp_bidirectional_dynamic()),
            ("lp-unidirectional-dynamic", Self::lp_unidirectional_dynamic()),
        ]
    }

    pub fn from_name(name: &str) -> Option<Treatment> {
        Self::named_treatments()
            .into_iter()
            .find_map(|(n, t)| (n == name).then_some(t))
    }

    pub fn canonical_name(&self) -> Option<&'static str> {
        Self::named_treatments()
            .into_iter()
            .find_map(|(n, t)| (t == *self).then_some(n))
    }

    pub fn label(&self) -> String {
        self.canonical_name().map(str::to_string).unwrap_or_else(|| {
            format!(
                "{}+{:?}({})",
                self.sampler, self.bonus_mode, self.bonus_coefficient
            )
            .to_lowercase()
        })
    }
}

/// All tunable parameters of a run, with the defaults the harness uses.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<F> {
    pub ema_time_scale: F,
    pub reweight_theta: F,
    pub sigmoid_slope: F,
    pub exploration_threshold: F,
    pub exploration_hysteresis: F,
    pub max_rewarded_collections: Option<u32>,
    pub learning_rate: F,
    pub forget_rate: F,
    pub group_effort_ref: F,
    pub collectable_threshold: F,
    pub rollouts_per_round: u32,
    /// Evaluate discovery on the EMA estimate instead of the true probability.
    pub discovery_on_estimates: bool,
}

impl<F: Real> Default for Params<F> {
    fn default() -> Self {
        Self {
            ema_time_scale: F::of(lp::DEFAULT_TIME_SCALE),
            reweight_theta: F::of(lp::DEFAULT_REWEIGHT_THETA),
            sigmoid_slope: F::of(lp::DEFAULT_SIGMOID_SLOPE),
            exploration_threshold: F::of(crate::explore::DEFAULT_EXPLORATION_THRESHOLD),
            exploration_hysteresis: F::zero(),
            max_rewarded_collections: None,
            learning_rate: F::of(0.15),
            forget_rate: F::of(0.02),
            group_effort_ref: F::of(0.15),
            collectable_threshold: F::of(0.5),
            rollouts_per_round: 256,
            discovery_on_estimates: false,
        }
    }
}

/// Per-task skill values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState<F> {
    skill: Vec<F>,
}

impl<F: Real> LearnerState<F> {
    pub fn new(task_count: usize) -> Self {
        Self {
            skill: vec![F::zero(); task_count],
        }
    }

    pub fn skill(&self) -> &[F] {
        &self.skill
    }

    /// True conditional success probability of a task: `cap * skill`.
    pub fn p_true(&self, graph: &TaskGraph, task: TaskId) -> F {
        F::of(graph.cap(task)) * self.skill[task.index()]
    }

    pub fn p_true_all(&self, graph: &TaskGraph) -> Vec<F> {
        (0..self.skill.len())
            .map(|i| self.p_true(graph, TaskId(i)))
            .collect()
    }
}

/// Product of the prerequisites' skills; 1 for tasks without prerequisites.
pub fn learnability<F: Real>(graph: &TaskGraph, skills: &[F], task: TaskId) -> F {
    graph
        .prerequisites(task)
        .iter()
        .fold(F::one(), |acc, &p| acc * skills[p])
}

/// Blend the sampling distribution with the exploration-bonus effort channel.
///
/// Collectable tasks are bonus-set members whose learnability clears the
/// collectable threshold. A budget `B = min(coefficient, 0.9)` of the round's
/// effort is split evenly over them; the rest follows `pi`. With no
/// collectable tasks all effort follows `pi`. Fixed mode keeps mastered tasks
/// collectable forever, which is exactly how the bonus ends up distracting
/// from the frontier.
pub fn allocate_effort<F: Real>(
    pi: &[F],
    set: &ExplorationSet<F>,
    graph: &TaskGraph,
    state: &LearnerState<F>,
    params: &Params<F>,
) -> Vec<F> {
    let collectable: Vec<usize> = (0..pi.len())
        .filter(|&i| {
            set.contains(TaskId(i))
                && learnability(graph, state.skill(), TaskId(i)) >= params.collectable_threshold
        })
        .collect();
    if collectable.is_empty() {
        return pi.to_vec();
    }
    let budget = set
        .coefficient()
        .to_f64()
        .expect("finite coefficient")
        .min(MAX_BONUS_BUDGET);
    let budget = F::of(budget);
    let share = budget / F::of(collectable.len() as f64);
    let keep = F::one() - budget;
    let mut effort: Vec<F> = pi.iter().map(|&p| keep * p).collect();
    for i in collectable {
        effort[i] += share;
    }
    effort
}

/// Advance every skill one round, synchronously.
///
/// Learnability is evaluated on the pre-round skills for every task, group
/// effort is the summed effort of the group's tasks, and the forgetting
/// pressure is how far that falls short of the reference share. Skills stay
/// clipped to [0, 1].
pub fn step_skills<F: Real>(
    graph: &TaskGraph,
    state: &mut LearnerState<F>,
    effort: &[F],
    params: &Params<F>,
) {
    let n = state.skill.len();
    let mut group_effort = vec![F::zero(); graph.group_count()];
    for i in 0..n {
        group_effort[graph.group_of(TaskId(i))] += effort[i];
    }
    let before = state.skill.clone();
    for i in 0..n {
        let learn = learnability(graph, &before, TaskId(i));
        let g = group_effort[graph.group_of(TaskId(i))];
        let deficit = (F::one() - g / params.group_effort_ref).max(F::zero());
        let s = before[i];
        let next = s + params.learning_rate * effort[i] * learn * (F::one() - s)
            - params.forget_rate * deficit * s;
        state.skill[i] = next.max(F::zero()).min(F::one());
    }
}

/// Sample `R` rollouts from the task distribution `pi` and count binomial
/// successes per task at its true probability.
///
/// Each rollout picks its task from `pi`, so a task receives
/// `n_i ~ Binomial(R, pi_i)` attempts — on average `R * pi_i`, but a
/// low-probability task still gets the occasional rollout instead of being
/// rounded down to permanent silence, which is what keeps its estimator and
/// the exploration-set bookkeeping alive. Tasks with zero rollouts this
/// round report no measurement.
pub fn measure_successes<F: Real>(
    state: &LearnerState<F>,
    graph: &TaskGraph,
    pi: &[F],
    rollouts_per_round: u32,
    rng: &mut ChaCha8Rng,
) -> Vec<(u64, u64)> {
    let weights: Vec<f64> = pi.iter().map(|p| p.to_f64().expect("finite pi")).collect();
    let picker = WeightedIndex::new(&weights).expect("pi is a distribution");
    let mut counts = vec![0u64; pi.len()];
    for _ in 0..rollouts_per_round {
        counts[picker.sample(rng)] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, n)| {
            if n == 0 {
                return (0, 0);
            }
            let p_true = state
                .p_true(graph, TaskId(i))
                .to_f64()
                .expect("finite probability")
                .clamp(0.0, 1.0);
            let k = Binomial::new(n, p_true)
                .expect("probability in [0, 1]")
                .sample(rng);
            (n, k)
        })
        .collect()
}

/// Number of tasks whose true success probability exceeds the discovery
/// threshold (strictly).
pub fn discovered_count<F: Real>(p_true: &[F]) -> usize {
    let thr = F::of(DISCOVERY_THRESHOLD);
    p_true.iter().filter(|&&p| p > thr).count()
}

/// Everything observable about one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundSnapshot<F> {
    pub round: u64,
    pub skill: Vec<F>,
    pub p_true: Vec<F>,
    pub p_fast: Vec<F>,
    pub p_slow: Vec<F>,
    pub lp_bi: Vec<F>,
    pub lp_uni: Vec<F>,
    pub pi: Vec<F>,
    pub in_exploration_set: Vec<bool>,
    pub discovered: usize,
}

/// Seeded, per-round time series of a treatment run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord<F> {
    pub treatment: Treatment,
    pub rounds: u64,
    pub seed: u64,
    pub task_count: usize,
    pub warnings: Vec<String>,
    pub snapshots: Vec<RoundSnapshot<F>>,
}

impl<F: Real> RunRecord<F> {
    pub fn discovered_series(&self) -> Vec<usize> {
        self.snapshots.iter().map(|s| s.discovered).collect()
    }

    pub fn final_snapshot(&self) -> &RoundSnapshot<F> {
        self.snapshots.last().expect("rounds >= 1")
    }

    /// Which tasks are discovered at the end of the run.
    pub fn final_discovered_set(&self) -> Vec<bool> {
        let thr = F::of(DISCOVERY_THRESHOLD);
        self.final_snapshot()
            .p_true
            .iter()
            .map(|&p| p > thr)
            .collect()
    }
}

/// Execute one treatment for `rounds` rounds. Deterministic for a fixed seed.
pub fn run_treatment<F: Real>(
    graph: &TaskGraph,
    treatment: Treatment,
    params: &Params<F>,
    rounds: u64,
    seed: u64,
) -> Result<RunRecord<F>> {
    if rounds == 0 {
        return Err(Error::domain("rounds must be >= 1".to_string()));
    }
    let mut warnings = Vec::new();
    if treatment.canonical_name().is_none() {
        warnings.push(format!(
            "treatment {:?} does not match any named treatment; running as configured",
            treatment
        ));
    }
    let n = graph.task_count();
    let mut lp_state = LpState::new(n, params.ema_time_scale, params.reweight_theta)?;
    let mut set = ExplorationSet::new(
        n,
        treatment.bonus_mode,
        params.exploration_threshold,
        F::of(treatment.bonus_coefficient),
    )?
    .with_hysteresis(params.exploration_hysteresis)?
    .with_max_rewarded_collections(params.max_rewarded_collections);
    let mut learner = LearnerState::new(n);
    let mut rng = crate::rng::stream(seed, "measure");
    let uniform = vec![F::one() / F::of(n as f64); n];
    let mut snapshots = Vec::with_capacity(rounds as usize);

    for round in 0..rounds {
        let pi = match treatment.sampler {
            Sampler::Uniform => uniform.clone(),
            Sampler::LpBidirectional => {
                let (bi, _) = lp_state.learning_progress();
                lp::sampling_distribution(&bi, params.sigmoid_slope)?
            }
            Sampler::LpUnidirectional => {
                let (_, uni) = lp_state.learning_progress();
                lp::sampling_distribution(&uni, params.sigmoid_slope)?
            }
        };
        if treatment.bonus_mode == BonusMode::Dynamic {
            set.refresh(&lp_state)?;
        }
        let effort = allocate_effort(&pi, &set, graph, &learner, params);
        step_skills(graph, &mut learner, &effort, params);
        let measurements = measure_successes(
            &learner,
            graph,
            &pi,
            params.rollouts_per_round,
            &mut rng,
        );
        for (i, &(n_i, k_i)) in measurements.iter().enumerate() {
            if n_i > 0 {
                let rate = F::of(k_i as f64 / n_i as f64);
                lp_state.update(TaskId(i), rate)?;
            }
        }
        let (lp_bi, lp_uni) = lp_state.learning_progress();
        let p_true = learner.p_true_all(graph);
        let discovered = if params.discovery_on_estimates {
            discovered_count(lp_state.p_fast())
        } else {
            discovered_count(&p_true)
        };
        snapshots.push(RoundSnapshot {
            round,
            skill: learner.skill().to_vec(),
            p_true,
            p_fast: lp_state.p_fast().to_vec(),
            p_slow: lp_state.p_slow().to_vec(),
            lp_bi,
            lp_uni,
            pi,
            in_exploration_set: set.members().to_vec(),
            discovered,
        });
    }

    Ok(RunRecord {
        treatment,
        rounds,
        seed,
        task_count: n,
        warnings,
        snapshots,
    })
}

/// Run independent jobs on up to `threads` workers and return results in job
/// order, independent of scheduling.
pub fn run_parallel<J, T, F>(jobs: Vec<J>, threads: usize, f: F) -> Vec<T>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> T + Sync,
{
    let threads = threads.max(1).min(jobs.len().max(1));
    let results: Mutex<Vec<Option<T>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= jobs.len() {
                    break;
                }
                let out = f(&jobs[i]);
                if let Some(slot) = results.lock().expect("no poisoned worker").get_mut(i) {
                    *slot = Some(out);
                }
            });
        }
    });
    results
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}
