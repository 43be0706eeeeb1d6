//! Experiment runners: benchmark grids, gamma sweeps, and the
//! random-vs-priced deployment comparison.
//!
//! Runs in a grid are independent (instances and configs are immutable, one
//! search owns its mutable state), so they execute on a rayon pool; records
//! come back in deterministic task order regardless of completion order.
//! Aggregation is pure: every summary is recomputable from the raw records.

use crate::csp::Instance;
use crate::error::Result;
use crate::search::{search, Heuristic, RunConfig, SearchResult, StatsRecord};
use rayon::prelude::*;
use std::io::Write;

/// An instance with the identifier used in reports.
#[derive(Clone, Debug)]
pub struct NamedInstance {
    pub id: String,
    pub instance: Instance,
}

impl NamedInstance {
    pub fn new(id: impl Into<String>, instance: Instance) -> Self {
        NamedInstance { id: id.into(), instance }
    }
}

/// Mean, median, and sample standard deviation of one metric.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
}

/// Summary over `values`; empty input yields zeros.
pub fn summarize(values: &[f64]) -> MetricSummary {
    if values.is_empty() {
        return MetricSummary::default();
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MetricSummary { mean, median, sd }
}

/// Aggregates for one configuration across a benchmark.
#[derive(Clone, Debug)]
pub struct GroupSummary {
    pub label: String,
    pub runs: usize,
    pub solved: usize,
    pub timed_out: usize,
    pub search_time: MetricSummary,
    pub heuristic_time: MetricSummary,
    pub backtracks: MetricSummary,
    pub nodes: MetricSummary,
    pub sc_estimations: MetricSummary,
}

/// Mean of per-instance ratios between two configurations, per metric.
/// Instances where the denominator is zero are skipped.
#[derive(Clone, Debug)]
pub struct RatioEntry {
    pub numerator: String,
    pub denominator: String,
    pub search_time: f64,
    pub backtracks: f64,
    pub sc_estimations: f64,
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub records: Vec<StatsRecord>,
    pub groups: Vec<GroupSummary>,
    pub ratios: Vec<RatioEntry>,
}

fn group_summary(label: &str, records: &[&StatsRecord]) -> GroupSummary {
    let metric = |f: &dyn Fn(&StatsRecord) -> f64| -> MetricSummary {
        summarize(&records.iter().map(|r| f(r)).collect::<Vec<_>>())
    };
    GroupSummary {
        label: label.to_string(),
        runs: records.len(),
        solved: records.iter().filter(|r| r.solved).count(),
        timed_out: records.iter().filter(|r| r.timed_out).count(),
        search_time: metric(&|r| r.search_time),
        heuristic_time: metric(&|r| r.heuristic_time),
        backtracks: metric(&|r| r.backtracks as f64),
        nodes: metric(&|r| r.nodes as f64),
        sc_estimations: metric(&|r| r.sc_estimations as f64),
    }
}

/// Mean over instances of the per-instance metric ratio a/b; `None` when no
/// instance has a nonzero denominator.
fn mean_ratio(
    instances: &[NamedInstance],
    a: &[&StatsRecord],
    b: &[&StatsRecord],
    f: &dyn Fn(&StatsRecord) -> f64,
) -> Option<f64> {
    let per_instance = |records: &[&StatsRecord], id: &str| -> Option<f64> {
        let vals: Vec<f64> = records.iter().filter(|r| r.instance == id).map(|r| f(r)).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    };
    let mut ratios = Vec::new();
    for inst in instances {
        if let (Some(x), Some(y)) = (per_instance(a, &inst.id), per_instance(b, &inst.id)) {
            if y > 0.0 {
                ratios.push(x / y);
            }
        }
    }
    if ratios.is_empty() {
        None
    } else {
        Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
    }
}

/// Runs the cross-product instances x configs x repeats. Repeat `r` of a
/// config runs with `seed + r`, so deterministic heuristics repeat exactly
/// and randomized ones vary reproducibly.
pub fn run_benchmark(instances: &[NamedInstance], configs: &[RunConfig]) -> BenchReport {
    let mut tasks: Vec<(usize, usize, u64)> = Vec::new();
    for (ci, config) in configs.iter().enumerate() {
        for (ii, _) in instances.iter().enumerate() {
            for rep in 0..config.repeat.max(1) {
                tasks.push((ci, ii, rep as u64));
            }
        }
    }
    let records: Vec<StatsRecord> = tasks
        .par_iter()
        .map(|&(ci, ii, rep)| {
            let config = RunConfig {
                seed: configs[ci].seed.wrapping_add(rep),
                ..configs[ci].clone()
            };
            let result = search(&instances[ii].instance, &config);
            StatsRecord::from_run(instances[ii].id.clone(), &config, &result)
        })
        .collect();

    let labels: Vec<String> = configs.iter().map(|c| c.label()).collect();
    let by_config: Vec<Vec<&StatsRecord>> = configs
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let reps = c.repeat.max(1);
            let per_config = instances.len() * reps;
            records[ci * per_config..(ci + 1) * per_config].iter().collect()
        })
        .collect();
    let groups: Vec<GroupSummary> = labels
        .iter()
        .zip(&by_config)
        .map(|(label, recs)| group_summary(label, recs))
        .collect();

    let mut ratios = Vec::new();
    for i in 0..configs.len() {
        for j in 0..configs.len() {
            if i == j {
                continue;
            }
            let time = mean_ratio(instances, &by_config[i], &by_config[j], &|r| r.search_time);
            let bts = mean_ratio(instances, &by_config[i], &by_config[j], &|r| r.backtracks as f64);
            let est = mean_ratio(instances, &by_config[i], &by_config[j], &|r| {
                r.sc_estimations as f64
            });
            ratios.push(RatioEntry {
                numerator: labels[i].clone(),
                denominator: labels[j].clone(),
                search_time: time.unwrap_or(f64::NAN),
                backtracks: bts.unwrap_or(f64::NAN),
                sc_estimations: est.unwrap_or(f64::NAN),
            });
        }
    }
    BenchReport { records, groups, ratios }
}

/// One gamma setting of a sweep, with means normalized by the exhaustive
/// baseline.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SweepRow {
    pub heuristic: String,
    pub gamma: f64,
    pub mean_search_time: f64,
    pub norm_search_time: f64,
    pub mean_backtracks: f64,
    pub norm_backtracks: f64,
    pub mean_sc_estimations: f64,
    pub norm_sc_estimations: f64,
    pub solved: usize,
    pub timed_out: usize,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub records: Vec<StatsRecord>,
}

/// Runs `vsc` at each gamma plus the exhaustive `sc` baseline, and reports
/// per-gamma means normalized by the baseline.
pub fn sweep_gamma(instances: &[NamedInstance], gammas: &[f64], base: &RunConfig) -> SweepReport {
    let mut configs = vec![RunConfig {
        heuristic: Heuristic::Sc,
        ..base.clone()
    }];
    for &gamma in gammas {
        configs.push(RunConfig {
            heuristic: Heuristic::Vsc,
            gamma,
            ..base.clone()
        });
    }
    let report = run_benchmark(instances, &configs);
    let baseline = &report.groups[0];
    let norm = |x: f64, base: f64| if base > 0.0 { x / base } else { f64::NAN };
    let rows = report
        .groups
        .iter()
        .enumerate()
        .map(|(i, g)| SweepRow {
            heuristic: if i == 0 { "sc".into() } else { "vsc".into() },
            gamma: if i == 0 { 0.0 } else { gammas[i - 1] },
            mean_search_time: g.search_time.mean,
            norm_search_time: norm(g.search_time.mean, baseline.search_time.mean),
            mean_backtracks: g.backtracks.mean,
            norm_backtracks: norm(g.backtracks.mean, baseline.backtracks.mean),
            mean_sc_estimations: g.sc_estimations.mean,
            norm_sc_estimations: norm(g.sc_estimations.mean, baseline.sc_estimations.mean),
            solved: g.solved,
            timed_out: g.timed_out,
        })
        .collect();
    SweepReport { rows, records: report.records }
}

/// Outcome of the random-vs-priced deployment comparison on one instance.
#[derive(Clone, Debug)]
pub struct DeploymentComparison {
    pub voi_records: Vec<StatsRecord>,
    pub random_records: Vec<StatsRecord>,
    pub voi_time: MetricSummary,
    pub random_time: MetricSummary,
    /// Per-value estimation probability handed to rand-sc so its expected
    /// estimation count matches the priced run.
    pub deploy_prob: f64,
}

/// Runs `vsc` at `gamma` on `instance`, then `runs` seeded rand-sc searches
/// with the same total number of estimations: the priced run estimated `E`
/// counts out of `O` opportunities, so rand-sc estimates each value with
/// probability E/O, hard-capped at `E` estimations over the whole run.
pub fn compare_random_deployment(
    instance: &NamedInstance,
    gamma: f64,
    runs: usize,
    seed: u64,
) -> Result<DeploymentComparison> {
    let voi_config = RunConfig {
        heuristic: Heuristic::Vsc,
        gamma,
        seed,
        ..RunConfig::default()
    };
    let probe = search(&instance.instance, &voi_config);
    let opportunities = probe.stats.sc_opportunities;
    let deploy_prob = if opportunities > 0 {
        probe.stats.sc_estimations as f64 / opportunities as f64
    } else {
        0.0
    };

    let run_config = |heuristic, run_seed| RunConfig {
        heuristic,
        gamma,
        seed: run_seed,
        sc_deploy_prob: deploy_prob,
        sc_total_budget: Some(probe.stats.sc_estimations),
        ..RunConfig::default()
    };
    let voi_records: Vec<StatsRecord> = (0..runs)
        .into_par_iter()
        .map(|_| {
            let result: SearchResult = search(&instance.instance, &voi_config);
            StatsRecord::from_run(instance.id.clone(), &voi_config, &result)
        })
        .collect();
    let random_records: Vec<StatsRecord> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let config = run_config(Heuristic::RandSc, seed.wrapping_add(1000 + r as u64));
            let result = search(&instance.instance, &config);
            StatsRecord::from_run(instance.id.clone(), &config, &result)
        })
        .collect();

    let times = |records: &[StatsRecord]| -> MetricSummary {
        summarize(&records.iter().map(|r| r.search_time).collect::<Vec<_>>())
    };
    Ok(DeploymentComparison {
        voi_time: times(&voi_records),
        random_time: times(&random_records),
        voi_records,
        random_records,
        deploy_prob,
    })
}

/// Writes records as CSV with a header, columns in `StatsRecord` field order.
pub fn write_csv<W: Write>(records: &[StatsRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r).map_err(|e| crate::Error::Internal(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes records as JSON lines.
pub fn write_jsonl<W: Write>(records: &[StatsRecord], mut writer: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r).map_err(|e| crate::Error::Internal(e.to_string()))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes sweep rows as CSV.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(|e| crate::Error::Internal(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
