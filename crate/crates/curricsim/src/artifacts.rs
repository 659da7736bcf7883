//! Run artifacts: manifest.json, series.csv, summary.csv, the cross-run
//! comparison files, and the lag-study outputs.
//!
//! All series are plain CSV with documented headers so they can be plotted or
//! diffed with standard tools; manifests are JSON and embed the fully
//! resolved config, which makes any run reproducible from its manifest alone.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::estimator::LagErrorRow;
use crate::sim::RunRecord;
use crate::Real;

/// Version stamp written into every manifest.
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Metadata written next to each run's series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub name: String,
    /// Fully resolved configuration; feeding this manifest back to the run
    /// command reproduces series.csv bit for bit.
    pub config: RunConfig,
    pub seed: u64,
    pub code_version: String,
    pub started_at_unix: u64,
    pub finished_at_unix: u64,
    pub artifacts: ArtifactPaths,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactPaths {
    pub series: String,
    pub summary: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SeriesRow {
    round: u64,
    task_id: usize,
    skill: f64,
    p_true: f64,
    p_fast: f64,
    p_slow: f64,
    lp_bi: f64,
    lp_uni: f64,
    pi: f64,
    in_exploration_set: u8,
}

#[derive(Debug, Serialize, Deserialize)]
struct SummaryRow {
    round: u64,
    discovered_count: u64,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Write manifest.json, series.csv and summary.csv for one finished run.
pub fn write_run<F: Real>(
    out_dir: &Path,
    name: &str,
    config: &RunConfig,
    record: &RunRecord<F>,
    started_at_unix: u64,
) -> Result<RunManifest> {
    fs::create_dir_all(out_dir)?;
    let series_path = out_dir.join("series.csv");
    let summary_path = out_dir.join("summary.csv");

    let mut series = csv::Writer::from_path(&series_path)?;
    for snap in &record.snapshots {
        for task in 0..record.task_count {
            series.serialize(SeriesRow {
                round: snap.round,
                task_id: task,
                skill: to_f64(snap.skill[task]),
                p_true: to_f64(snap.p_true[task]),
                p_fast: to_f64(snap.p_fast[task]),
                p_slow: to_f64(snap.p_slow[task]),
                lp_bi: to_f64(snap.lp_bi[task]),
                lp_uni: to_f64(snap.lp_uni[task]),
                pi: to_f64(snap.pi[task]),
                in_exploration_set: u8::from(snap.in_exploration_set[task]),
            })?;
        }
    }
    series.flush()?;

    let mut summary = csv::Writer::from_path(&summary_path)?;
    for snap in &record.snapshots {
        summary.serialize(SummaryRow {
            round: snap.round,
            discovered_count: snap.discovered as u64,
        })?;
    }
    summary.flush()?;

    let manifest = RunManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        name: name.to_string(),
        config: config.resolved(),
        seed: record.seed,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        started_at_unix,
        finished_at_unix: unix_now(),
        artifacts: ArtifactPaths {
            series: "series.csv".to_string(),
            summary: "summary.csv".to_string(),
        },
        warnings: record.warnings.clone(),
    };
    fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(manifest)
}

fn to_f64<F: Real>(v: F) -> f64 {
    v.to_f64().expect("finite value")
}

pub fn read_manifest(run_dir: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(run_dir.join("manifest.json"))?;
    Ok(serde_json::from_str(&text)?)
}

fn read_summary(run_dir: &Path, manifest: &RunManifest) -> Result<Vec<(u64, u64)>> {
    let mut reader = csv::Reader::from_path(run_dir.join(&manifest.artifacts.summary))?;
    let mut rows = Vec::new();
    for row in reader.deserialize::<SummaryRow>() {
        let row = row?;
        rows.push((row.round, row.discovered_count));
    }
    Ok(rows)
}

/// Full series of one run, reshaped into per-round task vectors.
struct SeriesData {
    rounds: Vec<u64>,
    /// pi[round][task]
    pi: Vec<Vec<f64>>,
    /// final true success probability per task
    final_p_true: Vec<f64>,
}

fn read_series(run_dir: &Path, manifest: &RunManifest, task_count: usize) -> Result<SeriesData> {
    let mut reader = csv::Reader::from_path(run_dir.join(&manifest.artifacts.series))?;
    let mut rounds = Vec::new();
    let mut pi: Vec<Vec<f64>> = Vec::new();
    let mut final_p_true = vec![0.0; task_count];
    for row in reader.deserialize::<SeriesRow>() {
        let row = row?;
        if row.task_id == 0 {
            rounds.push(row.round);
            pi.push(vec![0.0; task_count]);
        }
        let current = pi.last_mut().ok_or_else(|| {
            Error::Mismatch("series.csv does not start at task_id 0".to_string())
        })?;
        if row.task_id >= task_count {
            return Err(Error::Mismatch(format!(
                "series.csv row has task_id {} but the graph has {task_count} tasks",
                row.task_id
            )));
        }
        current[row.task_id] = row.pi;
        final_p_true[row.task_id] = row.p_true;
    }
    Ok(SeriesData {
        rounds,
        pi,
        final_p_true,
    })
}

/// Outcome of a comparison, as written to disk.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub names: Vec<String>,
    pub final_counts: Vec<u64>,
    pub report_text: String,
    pub files: Vec<PathBuf>,
}

/// Compare two or more finished runs over the same task graph.
///
/// Writes `compare.csv` (round x run discovered-count matrix),
/// `final_success.csv` (task x run final true success probability),
/// one `sampling_<run>.csv` per run (round x task sampling probability), and
/// `report.txt` with the final counts and their ordering.
pub fn compare_runs(run_dirs: &[PathBuf], out_dir: &Path) -> Result<CompareReport> {
    if run_dirs.len() < 2 {
        return Err(Error::Mismatch(format!(
            "compare needs at least 2 runs, got {}",
            run_dirs.len()
        )));
    }
    let manifests: Vec<RunManifest> = run_dirs
        .iter()
        .map(|d| read_manifest(d))
        .collect::<Result<_>>()?;
    let reference = &manifests[0];
    for m in &manifests[1..] {
        if m.config.tasks != reference.config.tasks {
            return Err(Error::Mismatch(format!(
                "run '{}' uses a different task graph than '{}'",
                m.name, reference.name
            )));
        }
    }
    let task_count = reference.config.tasks.task_count();
    fs::create_dir_all(out_dir)?;

    let summaries: Vec<Vec<(u64, u64)>> = run_dirs
        .iter()
        .zip(&manifests)
        .map(|(d, m)| read_summary(d, m))
        .collect::<Result<_>>()?;

    let names: Vec<String> = manifests.iter().map(|m| m.name.clone()).collect();
    let mut files = Vec::new();

    // round x run discovered-count matrix, up to the shortest run
    let min_rounds = summaries.iter().map(Vec::len).min().unwrap_or(0);
    let compare_path = out_dir.join("compare.csv");
    {
        let mut w = csv::Writer::from_path(&compare_path)?;
        let mut header = vec!["round".to_string()];
        header.extend(names.iter().cloned());
        w.write_record(&header)?;
        for r in 0..min_rounds {
            let mut rec = vec![summaries[0][r].0.to_string()];
            for s in &summaries {
                rec.push(s[r].1.to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    files.push(compare_path);

    // per-task final success probabilities and sampling matrices
    let series: Vec<SeriesData> = run_dirs
        .iter()
        .zip(&manifests)
        .map(|(d, m)| read_series(d, m, task_count))
        .collect::<Result<_>>()?;

    let final_path = out_dir.join("final_success.csv");
    {
        let mut w = csv::Writer::from_path(&final_path)?;
        let mut header = vec!["task_id".to_string()];
        header.extend(names.iter().cloned());
        w.write_record(&header)?;
        for task in 0..task_count {
            let mut rec = vec![task.to_string()];
            for s in &series {
                rec.push(format!("{}", s.final_p_true[task]));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    files.push(final_path);

    for (i, s) in series.iter().enumerate() {
        let path = out_dir.join(format!("sampling_{}.csv", names[i]));
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = vec!["round".to_string()];
        header.extend((0..task_count).map(|t| format!("task_{t}")));
        w.write_record(&header)?;
        for (ri, round) in s.rounds.iter().enumerate() {
            let mut rec = vec![round.to_string()];
            rec.extend(s.pi[ri].iter().map(|p| format!("{p}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        files.push(path);
    }

    let final_counts: Vec<u64> = summaries
        .iter()
        .map(|s| s.last().map(|r| r.1).unwrap_or(0))
        .collect();
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| final_counts[b].cmp(&final_counts[a]).then(a.cmp(&b)));
    let mut report_text = String::from("final discovered counts\n");
    for &i in &order {
        report_text.push_str(&format!("  {}: {}\n", names[i], final_counts[i]));
    }
    report_text.push_str("ordering (best first): ");
    report_text.push_str(
        &order
            .iter()
            .map(|&i| names[i].as_str())
            .collect::<Vec<_>>()
            .join(" >= "),
    );
    report_text.push('\n');
    let report_path = out_dir.join("report.txt");
    fs::write(&report_path, &report_text)?;
    files.push(report_path);

    Ok(CompareReport {
        names,
        final_counts,
        report_text,
        files,
    })
}

/// JSON summary of a lag study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagStudySummary {
    pub delta_t_opt_closed_form: f64,
    pub delta_t_opt_numeric: f64,
    pub empirical_argmin: f64,
}

/// Write the lag-study CSV (`dt_study.csv`) and JSON summary
/// (`dt_summary.json`).
pub fn write_lag_study<F: Real>(
    out_dir: &Path,
    rows: &[LagErrorRow<F>],
    summary: &LagStudySummary,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join("dt_study.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["delta_t", "analytic_err2", "empirical_err2", "empirical_stderr"])?;
    for row in rows {
        w.write_record(&[
            format!("{}", to_f64(row.delta_t)),
            format!("{}", to_f64(row.analytic_err2)),
            format!("{}", to_f64(row.empirical_err2)),
            format!("{}", to_f64(row.empirical_stderr)),
        ])?;
    }
    w.flush()?;
    let json_path = out_dir.join("dt_summary.json");
    fs::write(&json_path, serde_json::to_string_pretty(summary)? + "\n")?;
    Ok(vec![csv_path, json_path])
}

/// Convenience wrapper: run a config and write all artifacts into
/// `out_dir/<name>`.
pub fn execute_run(config: &RunConfig, out_dir: &Path, name: &str) -> Result<RunManifest> {
    let started = unix_now();
    let params = config.resolved_params();
    let record = crate::sim::run_treatment::<f64>(
        &config.tasks,
        config.treatment,
        &params,
        config.rounds,
        config.seed,
    )?;
    write_run(&out_dir.join(name), name, config, &record, started)
}
