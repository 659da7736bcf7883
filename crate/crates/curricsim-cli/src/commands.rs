//! Subcommand implementations.

use std::path::{Path, PathBuf};

use curricsim::artifacts::{self, LagStudySummary};
use curricsim::config::RunConfig;
use curricsim::estimator::{self, SuccessCurve};
use curricsim::sim::{self, Treatment};
use curricsim::{Error, Result};

use crate::{CompareArgs, DtoptArgs, RunArgs, SweepArgs};

/// Output root resolution: explicit flag, then $CURRICSIM_OUT, then a
/// subcommand-specific default.
fn out_root(flag: Option<PathBuf>, fallback: &str) -> PathBuf {
    flag.unwrap_or_else(|| {
        std::env::var_os("CURRICSIM_OUT")
            .map(PathBuf::from)
            .unwrap_or_default()
            .join(fallback)
    })
}

fn apply_overrides(
    config: &mut RunConfig,
    seed: Option<u64>,
    rounds: Option<u64>,
    treatment: Option<&str>,
) -> Result<()> {
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(rounds) = rounds {
        config.rounds = rounds;
    }
    if let Some(name) = treatment {
        config.treatment = Treatment::from_name(name).ok_or_else(|| {
            Error::config(format!(
                "unknown treatment '{name}'; expected one of {}",
                Treatment::named_treatments()
                    .map(|(n, _)| n)
                    .join(", ")
            ))
        })?;
    }
    config.validate()
}

pub fn run(args: RunArgs) -> Result<()> {
    let mut config = RunConfig::from_path(&args.config)?;
    apply_overrides(
        &mut config,
        args.seed,
        args.rounds,
        args.treatment.as_deref(),
    )?;
    let name = args.name.unwrap_or_else(|| match &args.treatment {
        Some(t) => t.clone(),
        None => args
            .config
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".to_string()),
    });
    let out = out_root(args.out, "runs");
    let manifest = artifacts::execute_run(&config, &out, &name)?;
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    let summary_path = out.join(&name).join("summary.csv");
    let final_count = last_discovered_count(&summary_path)?;
    println!(
        "run '{name}' finished: {} rounds, {} tasks discovered, artifacts in {}",
        config.rounds,
        final_count,
        out.join(&name).display()
    );
    Ok(())
}

fn last_discovered_count(summary_path: &Path) -> Result<u64> {
    let text = std::fs::read_to_string(summary_path)?;
    let last = text.lines().last().unwrap_or_default();
    Ok(last
        .rsplit(',')
        .next()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0))
}

pub fn compare(args: CompareArgs) -> Result<()> {
    let out = out_root(args.out, "compare");
    let report = artifacts::compare_runs(&args.run_dirs, &out)?;
    print!("{}", report.report_text);
    println!("artifacts in {}", out.display());
    Ok(())
}

fn build_curve(args: &DtoptArgs) -> Result<(SuccessCurve<f64>, f64)> {
    match args.curve.as_str() {
        "logistic" => {
            let curve = SuccessCurve::logistic(args.midpoint, args.scale, args.t0, args.t1)?;
            let t = match args.eval_time {
                Some(t) => t,
                None => curve.time_at_level(args.eval_level)?,
            };
            Ok((curve, t))
        }
        "linear" => {
            let curve = SuccessCurve::new(
                estimator::CurveFamily::Linear {
                    intercept: args.intercept,
                    slope: args.slope,
                },
                args.t0,
                args.t1,
            )?;
            let t = args.eval_time.unwrap_or((args.t0 + args.t1) / 2.0);
            Ok((curve, t))
        }
        other => Err(Error::config(format!(
            "unknown curve family '{other}'; expected logistic or linear"
        ))),
    }
}

fn parse_grid_spec(spec: &str) -> Result<(u32, u32)> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse = |s: &str| -> Result<u32> {
        s.parse()
            .map_err(|_| Error::config(format!("bad grid spec '{spec}'; expected D:P")))
    };
    match parts.as_slice() {
        [d, p] => {
            let (d, p) = (parse(d)?, parse(p)?);
            if d == 0 || p == 0 {
                return Err(Error::config(
                    "grid spec needs at least one decade and one point per decade".to_string(),
                ));
            }
            Ok((d, p))
        }
        _ => Err(Error::config(format!(
            "bad grid spec '{spec}'; expected DECADES:POINTS_PER_DECADE"
        ))),
    }
}

pub fn dtopt(args: DtoptArgs) -> Result<()> {
    if args.n == 0 {
        return Err(Error::config("--n must be >= 1".to_string()));
    }
    if args.trials == 0 {
        return Err(Error::config("--trials must be >= 1".to_string()));
    }
    let (curve, t) = build_curve(&args)?;
    let closed_form = estimator::optimal_lag_for_curve(&curve, t, args.n)?;
    if args.closed_form {
        println!("delta_t_opt_closed_form: {closed_form}");
        return Ok(());
    }
    if args.trials == 1 {
        eprintln!("warning: trials = 1 gives an unusable standard error estimate");
    }
    let (decades, per_decade) = parse_grid_spec(&args.grid)?;
    let grid = estimator::log_grid(closed_form, decades, per_decade);
    // keep the whole grid inside the curve domain
    let (t0, _) = curve.domain();
    let grid: Vec<f64> = grid.into_iter().filter(|dt| t - dt >= t0).collect();
    if grid.is_empty() {
        return Err(Error::domain(
            "no grid point leaves room for the earlier snapshot; widen the domain".to_string(),
        ));
    }
    let rows = estimator::empirical_err2_curve(&curve, t, args.n, &grid, args.trials, args.seed)?;
    let numeric = estimator::optimal_lag_numeric(&curve, t, args.n)?;
    let argmin = estimator::empirical_argmin(&rows);
    let summary = LagStudySummary {
        delta_t_opt_closed_form: closed_form,
        delta_t_opt_numeric: numeric,
        empirical_argmin: rows[argmin].delta_t,
    };
    let out = out_root(args.out, "dtopt");
    let files = artifacts::write_lag_study(&out, &rows, &summary)?;
    println!(
        "closed-form {closed_form}, numeric {numeric}, empirical argmin {}",
        summary.empirical_argmin
    );
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    let mut base = RunConfig::from_path(&args.config)?;
    if let Some(rounds) = args.rounds {
        base.rounds = rounds;
    }
    base.validate()?;
    let seeds: Vec<u64> = args
        .seeds
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::config(format!("bad seed '{s}'")))
        })
        .collect::<Result<_>>()?;
    if seeds.is_empty() {
        return Err(Error::config("need at least one seed".to_string()));
    }
    let treatments: Vec<(String, Treatment)> = match &args.treatments {
        None => Treatment::named_treatments()
            .into_iter()
            .map(|(n, t)| (n.to_string(), t))
            .collect(),
        Some(list) => list
            .split(',')
            .map(|name| {
                let name = name.trim();
                Treatment::from_name(name)
                    .map(|t| (name.to_string(), t))
                    .ok_or_else(|| Error::config(format!("unknown treatment '{name}'")))
            })
            .collect::<Result<_>>()?,
    };

    // jobs in fixed (treatment, seed) order; each writes its own directory
    let out = out_root(args.out, "sweep");
    let mut jobs = Vec::new();
    for (name, treatment) in &treatments {
        for &seed in &seeds {
            let mut config = base.clone();
            config.treatment = *treatment;
            config.seed = seed;
            jobs.push((format!("{name}-seed{seed}"), config));
        }
    }
    let results = sim::run_parallel(jobs, args.jobs, |(name, config)| {
        artifacts::execute_run(config, &out, name).map(|m| (name.clone(), m))
    });

    let mut rows = Vec::new();
    for result in results {
        let (name, _manifest) = result?;
        let count = last_discovered_count(&out.join(&name).join("summary.csv"))?;
        rows.push((name, count));
    }
    let mut text = String::from("run,final_discovered\n");
    for (name, count) in &rows {
        text.push_str(&format!("{name},{count}\n"));
        println!("{name}: {count} discovered");
    }
    std::fs::write(out.join("sweep_summary.csv"), text)?;
    println!("sweep artifacts in {}", out.display());
    Ok(())
}
