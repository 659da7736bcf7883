//! Task-dependency graph: the task set, prerequisite edges, context groups,
//! and per-task success ceilings that define the synthetic world.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense task index, stable for the lifetime of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub usize);

impl TaskId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for TaskId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One task: its prerequisites, context group, and environment-imposed
/// success ceiling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: usize,
    #[serde(default)]
    pub prerequisites: Vec<usize>,
    pub group: String,
    /// Success ceiling in (0, 1]; the true success probability of the task is
    /// `cap * skill` no matter how well the task is learned.
    #[serde(default = "default_cap")]
    pub cap: f64,
}

fn default_cap() -> f64 {
    1.0
}

/// Validated task graph. Prerequisites form a DAG and every group label is
/// shared by at least one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TaskSpec>", into = "Vec<TaskSpec>")]
pub struct TaskGraph {
    tasks: Vec<TaskSpec>,
    /// Group label interned to a dense index, per task.
    group_index: Vec<usize>,
    group_names: Vec<String>,
    topo_order: Vec<TaskId>,
}

impl TryFrom<Vec<TaskSpec>> for TaskGraph {
    type Error = Error;
    fn try_from(tasks: Vec<TaskSpec>) -> Result<Self> {
        TaskGraph::new(tasks)
    }
}

impl From<TaskGraph> for Vec<TaskSpec> {
    fn from(g: TaskGraph) -> Self {
        g.tasks
    }
}

impl TaskGraph {
    pub fn new(tasks: Vec<TaskSpec>) -> Result<Self> {
        if tasks.len() < 2 {
            return Err(Error::config(format!(
                "task graph needs at least 2 tasks, got {}",
                tasks.len()
            )));
        }
        for (i, t) in tasks.iter().enumerate() {
            if t.id != i {
                return Err(Error::config(format!(
                    "task ids must be dense and in order: position {i} has id {}",
                    t.id
                )));
            }
            if !(t.cap > 0.0 && t.cap <= 1.0) {
                return Err(Error::config(format!(
                    "task {i}: cap {} outside (0, 1]",
                    t.cap
                )));
            }
            for &p in &t.prerequisites {
                if p >= tasks.len() {
                    return Err(Error::config(format!(
                        "task {i}: prerequisite {p} out of range"
                    )));
                }
                if p == i {
                    return Err(Error::config(format!("task {i} depends on itself")));
                }
            }
        }
        let topo_order = topological_order(&tasks)?;
        let mut group_names: Vec<String> = Vec::new();
        let mut by_name: HashMap<&str, usize> = HashMap::new();
        let mut group_index = Vec::with_capacity(tasks.len());
        for t in &tasks {
            let idx = *by_name.entry(t.group.as_str()).or_insert_with(|| {
                group_names.push(t.group.clone());
                group_names.len() - 1
            });
            group_index.push(idx);
        }
        Ok(Self {
            tasks,
            group_index,
            group_names,
            topo_order,
        })
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    pub fn prerequisites(&self, task: TaskId) -> &[usize] {
        &self.tasks[task.index()].prerequisites
    }

    pub fn cap(&self, task: TaskId) -> f64 {
        self.tasks[task.index()].cap
    }

    pub fn caps(&self) -> Vec<f64> {
        self.tasks.iter().map(|t| t.cap).collect()
    }

    /// Dense group index of a task.
    pub fn group_of(&self, task: TaskId) -> usize {
        self.group_index[task.index()]
    }

    pub fn group_count(&self) -> usize {
        self.group_names.len()
    }

    pub fn group_name(&self, group: usize) -> &str {
        &self.group_names[group]
    }

    /// Tasks in topological order (prerequisites before dependents).
    pub fn topo_order(&self) -> &[TaskId] {
        &self.topo_order
    }
}

fn topological_order(tasks: &[TaskSpec]) -> Result<Vec<TaskId>> {
    let n = tasks.len();
    let mut in_degree = vec![0usize; n];
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, t) in tasks.iter().enumerate() {
        in_degree[i] = t.prerequisites.len();
        for &p in &t.prerequisites {
            dependents[p].push(i);
        }
    }
    let mut queue: Vec<usize> = (0..n).filter(|&i| in_degree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    let mut head = 0;
    while head < queue.len() {
        let i = queue[head];
        head += 1;
        order.push(TaskId(i));
        for &d in &dependents[i] {
            in_degree[d] -= 1;
            if in_degree[d] == 0 {
                queue.push(d);
            }
        }
    }
    if order.len() != n {
        return Err(Error::config(
            "prerequisite relation contains a cycle".to_string(),
        ));
    }
    Ok(order)
}

/// Convenience builder for tests and examples: a linear chain where each task
/// is the prerequisite of the next, one group per `group_of` mapping.
pub fn chain(task_count: usize, group_fn: impl Fn(usize) -> String) -> Result<TaskGraph> {
    let tasks = (0..task_count)
        .map(|i| TaskSpec {
            id: i,
            prerequisites: if i == 0 { vec![] } else { vec![i - 1] },
            group: group_fn(i),
            cap: 1.0,
        })
        .collect();
    TaskGraph::new(tasks)
}
