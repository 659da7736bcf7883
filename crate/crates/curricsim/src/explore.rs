//! Goal-independent exploration bonus and the dynamic exploration set.
//!
//! Within an episode, collecting an item is rewarded with `coefficient *
//! 0.5^N` where `N` is the new inventory count, but only when `N` exceeds the
//! episode's historical maximum for that item — dropping and re-collecting
//! earns nothing. Across training, the dynamic variant restricts the bonus to
//! tasks whose estimated success probability is still below a threshold, so
//! the bonus stops paying for things the agent already does reliably.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::TaskId;
use crate::lp::LpState;
use crate::Real;

/// Default success-probability threshold for exploration-set membership.
pub const DEFAULT_EXPLORATION_THRESHOLD: f64 = 0.1;
/// Bonus coefficient tuned for the fixed-bonus treatment.
pub const FIXED_BONUS_COEFFICIENT: f64 = 0.05;
/// Bonus coefficient tuned for the dynamic-bonus treatments.
pub const DYNAMIC_BONUS_COEFFICIENT: f64 = 0.5;

/// How the exploration bonus is applied over training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BonusMode {
    /// No bonus; the set is always empty.
    Off,
    /// Every task is bonus-eligible for the whole run.
    Fixed,
    /// Only tasks with `p_fast < threshold` are bonus-eligible; membership is
    /// recomputed between rounds.
    Dynamic,
}

/// One paid bonus, in the shape used for JSON-lines event logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BonusEvent {
    pub round: u64,
    pub item: usize,
    #[serde(rename = "N")]
    pub inventory_count: u32,
    pub reward: f64,
}

/// Per-episode collection bookkeeping. Both counters reset at episode start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeLedger {
    collection_count: Vec<u32>,
    max_inventory: Vec<u32>,
}

impl EpisodeLedger {
    pub fn new(item_count: usize) -> Self {
        Self {
            collection_count: vec![0; item_count],
            max_inventory: vec![0; item_count],
        }
    }

    /// Start a fresh episode.
    pub fn reset(&mut self) {
        self.collection_count.fill(0);
        self.max_inventory.fill(0);
    }

    pub fn collection_count(&self, item: TaskId) -> u32 {
        self.collection_count[item.index()]
    }

    pub fn max_inventory(&self, item: TaskId) -> u32 {
        self.max_inventory[item.index()]
    }
}

/// The set of bonus-rewarded tasks plus its threshold bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationSet<F> {
    members: Vec<bool>,
    mode: BonusMode,
    threshold: F,
    coefficient: F,
    /// Extra margin above `threshold` required before a member is dropped;
    /// zero by default (no hysteresis).
    hysteresis: F,
    /// Optional cutoff: collections beyond this count earn nothing.
    max_rewarded_collections: Option<u32>,
}

impl<F: Real> ExplorationSet<F> {
    pub fn new(task_count: usize, mode: BonusMode, threshold: F, coefficient: F) -> Result<Self> {
        if !(threshold > F::zero() && threshold < F::one()) {
            return Err(Error::domain(format!(
                "exploration threshold {threshold} outside (0, 1)"
            )));
        }
        if coefficient < F::zero() {
            return Err(Error::domain(format!(
                "bonus coefficient {coefficient} must be >= 0"
            )));
        }
        let members = match mode {
            BonusMode::Off => vec![false; task_count],
            // fixed mode rewards every task, always
            BonusMode::Fixed => vec![true; task_count],
            // dynamic mode starts all-in: nothing has been measured yet
            BonusMode::Dynamic => vec![true; task_count],
        };
        Ok(Self {
            members,
            mode,
            threshold,
            coefficient,
            hysteresis: F::zero(),
            max_rewarded_collections: None,
        })
    }

    pub fn with_hysteresis(mut self, hysteresis: F) -> Result<Self> {
        if hysteresis < F::zero() {
            return Err(Error::domain("hysteresis must be >= 0".to_string()));
        }
        self.hysteresis = hysteresis;
        Ok(self)
    }

    pub fn with_max_rewarded_collections(mut self, cutoff: Option<u32>) -> Self {
        self.max_rewarded_collections = cutoff;
        self
    }

    pub fn mode(&self) -> BonusMode {
        self.mode
    }

    pub fn coefficient(&self) -> F {
        self.coefficient
    }

    pub fn threshold(&self) -> F {
        self.threshold
    }

    pub fn contains(&self, task: TaskId) -> bool {
        self.members[task.index()]
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn member_ids(&self) -> Vec<TaskId> {
        self.members
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(TaskId(i)))
            .collect()
    }

    /// Recompute membership from the current success-probability estimates:
    /// tasks with `p_fast < threshold` are in, the rest are out. Removal and
    /// re-addition use the same threshold unless hysteresis was configured.
    pub fn refresh(&mut self, lp_state: &LpState<F>) -> Result<()> {
        if self.mode != BonusMode::Dynamic {
            return Err(Error::contract(format!(
                "refresh only applies to dynamic mode, set is {:?}",
                self.mode
            )));
        }
        if lp_state.task_count() != self.members.len() {
            return Err(Error::contract(format!(
                "set tracks {} tasks but state has {}",
                self.members.len(),
                lp_state.task_count()
            )));
        }
        let drop_at = self.threshold + self.hysteresis;
        for (i, p) in lp_state.p_fast().iter().enumerate() {
            self.members[i] = if self.members[i] {
                *p < drop_at
            } else {
                *p < self.threshold
            };
        }
        Ok(())
    }

    /// Reward for collecting `item` with post-collection inventory count `n`.
    ///
    /// Pays `coefficient * 0.5^n` if the item is bonus-eligible and `n`
    /// exceeds the episode's historical maximum inventory for it (updating
    /// the ledger); otherwise pays 0 and leaves the ledger untouched.
    pub fn bonus_for_collection(
        &self,
        ledger: &mut EpisodeLedger,
        item: TaskId,
        new_inventory_count: u32,
    ) -> F {
        if !self.contains(item) {
            return F::zero();
        }
        let i = item.index();
        let n = new_inventory_count;
        if n <= ledger.max_inventory[i] {
            return F::zero();
        }
        ledger.max_inventory[i] = n;
        ledger.collection_count[i] += 1;
        if let Some(cutoff) = self.max_rewarded_collections {
            if n > cutoff {
                return F::zero();
            }
        }
        self.coefficient * F::of(0.5).powi(n as i32)
    }
}
