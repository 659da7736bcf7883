//! Shipped task worlds and their calibrated dynamics.
//!
//! Two study configurations are bundled with the crate (and mirrored as JSON
//! files under `configs/`):
//!
//! - [`reference40`]: a 40-task, 4-group world built around one deep
//!   dependency chain. Group sizes keep every group decay-free under uniform
//!   sampling, so the uniform baselines are throttled purely by how fast
//!   their frontier wave travels the chain, while bonus- and
//!   curriculum-driven treatments race ahead. This world separates the
//!   treatments cleanly at 50k rounds.
//! - [`forgetting24`]: a 24-task, 2-context world (surface/underground) with
//!   fast estimators and strong forgetting, where the unidirectional
//!   curriculum goes through collapse-and-rediscovery cycles that the
//!   bidirectional curriculum avoids by resampling whatever starts slipping.
//!
//! The parameter blocks are calibration points, not library defaults: the
//! slow world runs a low learning rate so 50k rounds cut mid-chain through
//! the uniform wave, and the forgetting world runs a fast EMA so drops are
//! detectable before skills bottom out.

use crate::config::{ParamsConfig, RunConfig};
use crate::graph::{TaskGraph, TaskSpec};
use crate::sim::Treatment;

fn spec(id: usize, prereqs: &[usize], group: &str, cap: f64) -> TaskSpec {
    TaskSpec {
        id,
        prerequisites: prereqs.to_vec(),
        group: group.to_string(),
        cap,
    }
}

/// The 40-task reference world: four groups of ten along a single dependency
/// backbone (8-9 chain tasks per group plus 1-2 leaves), with two capped
/// leaves standing in for environment-limited tasks.
pub fn reference40() -> TaskGraph {
    let bands = ["surface", "stone", "iron", "deep"];
    let mut tasks: Vec<TaskSpec> = Vec::new();
    let mut backbone_end = 0usize;
    let mut id = 0usize;
    for (b, band) in bands.iter().enumerate() {
        let backbone_len = if b % 2 == 0 { 9 } else { 8 };
        let leaves = 10 - backbone_len;
        let band_start = id;
        for k in 0..backbone_len {
            let prereqs: Vec<usize> = if id == 0 {
                vec![]
            } else if k == 0 {
                vec![backbone_end]
            } else {
                vec![id - 1]
            };
            tasks.push(spec(id, &prereqs, band, 1.0));
            id += 1;
        }
        backbone_end = id - 1;
        for k in 0..leaves {
            tasks.push(spec(id, &[band_start + 2 + k * 3], band, 1.0));
            id += 1;
        }
    }
    tasks[18].cap = 0.2;
    tasks[28].cap = 0.2;
    TaskGraph::new(tasks).expect("reference graph is valid")
}

/// Calibrated run configuration for the reference world.
pub fn reference40_config() -> RunConfig {
    RunConfig {
        tasks: reference40(),
        treatment: Treatment::lp_bidirectional_dynamic(),
        params: ParamsConfig {
            learning_rate: Some(0.006),
            forget_rate: Some(0.0001),
            group_effort_ref: Some(0.035),
            ..ParamsConfig::default()
        },
        rounds: 50_000,
        seed: 7,
    }
}

/// The 24-task forgetting-study world: a shallow surface context (8 tasks)
/// and a deeper underground context (16 tasks) rooted at the surface
/// backbone end. Every task is capped at 0.5 so measured success stays in
/// the steep region of the reweighting curve, which keeps the progress
/// signal responsive on both the way up and the way down.
pub fn forgetting24() -> TaskGraph {
    let cap = 0.5;
    let mut t = Vec::new();
    t.push(spec(0, &[], "surface", cap));
    for i in 1..=3 {
        t.push(spec(i, &[i - 1], "surface", cap));
    }
    for (i, p) in (4..=7).zip([1, 2, 3, 3]) {
        t.push(spec(i, &[p], "surface", cap));
    }
    t.push(spec(8, &[3], "underground", cap));
    for i in 9..=17 {
        t.push(spec(i, &[i - 1], "underground", cap));
    }
    for (i, p) in (18..=23).zip([9, 10, 11, 13, 15, 17]) {
        t.push(spec(i, &[p], "underground", cap));
    }
    TaskGraph::new(t).expect("forgetting graph is valid")
}

/// Calibrated run configuration for the forgetting study: strong forgetting
/// pressure, fast EMAs, a soft sampling sigmoid, and a large rollout budget
/// so even rarely-sampled tasks stay measured.
pub fn forgetting24_config() -> RunConfig {
    RunConfig {
        tasks: forgetting24(),
        treatment: Treatment::lp_unidirectional_dynamic(),
        params: ParamsConfig {
            ema_time_scale: Some(30.0),
            sigmoid_slope: Some(2.0),
            rollouts_per_round: Some(1024),
            forget_rate: Some(0.05),
            ..ParamsConfig::default()
        },
        rounds: 40_000,
        seed: 7,
    }
}
