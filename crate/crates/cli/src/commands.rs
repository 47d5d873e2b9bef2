//! One function per subcommand. Each takes the validated config plus its
//! flags, writes its artifacts, prints a short summary to stdout, and maps
//! failures onto the process error split.

use std::path::Path;

use confmerge::conformal::{
    build_table, evaluate_coverage, load_table, save_table, ConformalTable, CoverageReport,
};
use confmerge::hdv::sample_scenario;
use confmerge::predictor::{save_checkpoint, train};
use confmerge::runner::{
    batch_evaluate, oracle_arrivals, run_closed_loop, BatchReport, PlannerMode, RunResult,
};
use serde::Serialize;

use crate::config::{reference, PredictorKind, RunConfig};
use crate::dataset;
use crate::fail::{reject_input, runtime, validation, write_failed, Fail};
use crate::model::{load_predictor, save_physics_marker};

/// Input-shape complaints from the core become validation failures; the
/// rest (I/O, divergence) stay runtime errors.
fn core_fail(err: confmerge::Error) -> Fail {
    use confmerge::Error::*;
    match err {
        InvalidConfig(_) | InvalidTemplate(_) | TableMismatch(_) | EmptyDataset(_) => {
            validation(err.to_string())
        }
        _ => runtime(err.to_string()),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Fail> {
    std::fs::create_dir_all(dir).map_err(|e| write_failed(dir, e))
}

pub fn cmd_config(out: Option<&Path>) -> Result<(), Fail> {
    print!("{}", reference());
    if let Some(path) = out {
        std::fs::write(path, RunConfig::default_json()).map_err(|e| write_failed(path, e))?;
        println!("\nwrote default config to {}", path.display());
    }
    Ok(())
}

const MANIFEST_VERSION: u32 = 1;

#[derive(Serialize)]
struct Manifest {
    version: u32,
    dt: f64,
    horizon_steps: usize,
    num_candidates: usize,
    splits: Vec<dataset::SplitSummary>,
}

pub fn cmd_gen_data(mut config: RunConfig, count: Option<usize>, out: &Path) -> Result<(), Fail> {
    if let Some(n) = count {
        config.seeds.train_count = n;
        config.validate()?;
    }
    ensure_dir(out)?;
    let mut splits = Vec::new();
    for (name, base, count) in config.seeds.splits() {
        let summary =
            dataset::generate_split(out, name, base, count, &config.zone, &config.template)?;
        println!(
            "{name}: {} trajectories over {} scenarios (seeds from {base}, {} collided) -> {}",
            summary.trajectories,
            summary.scenarios,
            summary.collisions_skipped,
            dataset::csv_path(out, name).display()
        );
        splits.push(summary);
    }
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        dt: config.zone.dt,
        horizon_steps: config.zone.horizon_steps,
        num_candidates: config.zone.num_candidates(),
        splits,
    };
    let path = out.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| write_failed(&path, e))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| write_failed(&path, e))
}

const LOSS_HEADER: [&str; 2] = ["epoch", "mse"];

fn write_loss_curve(path: &Path, curve: &[f64]) -> Result<(), Fail> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    wtr.write_record(LOSS_HEADER)
        .map_err(|e| write_failed(path, e))?;
    for (epoch, mse) in curve.iter().enumerate() {
        wtr.serialize((epoch, mse))
            .map_err(|e| write_failed(path, e))?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| write_failed(path, e.error()))?;
    std::fs::write(path, bytes).map_err(|e| write_failed(path, e))
}

pub fn cmd_train(config: &RunConfig, data: &Path, out: &Path) -> Result<(), Fail> {
    ensure_dir(out)?;
    let model_path = out.join("model.json");
    let curve_path = out.join("loss_curve.csv");
    match config.predictor {
        PredictorKind::Oracle => Err(validation(
            "predictor: \"oracle\" has nothing to train; choose \"network\" or \"physics\"",
        )),
        PredictorKind::Physics => {
            save_physics_marker(&model_path)?;
            write_loss_curve(&curve_path, &[])?;
            println!(
                "physics predictor has no parameters; wrote marker to {}",
                model_path.display()
            );
            Ok(())
        }
        PredictorKind::Network => {
            let trajs = dataset::load_split(data, "train", &config.zone)?;
            let trained = train(&trajs, &config.zone, &config.train).map_err(core_fail)?;
            save_checkpoint(&model_path, &trained.params)
                .map_err(|e| write_failed(&model_path, e))?;
            write_loss_curve(&curve_path, &trained.loss_curve)?;
            let first = trained.loss_curve.first().copied().unwrap_or(f64::NAN);
            let last = trained.loss_curve.last().copied().unwrap_or(f64::NAN);
            println!(
                "trained on {} trajectories for {} epochs: mse {first:.4} -> {last:.4}",
                trajs.len(),
                config.train.epochs
            );
            println!("checkpoint: {}", model_path.display());
            Ok(())
        }
    }
}

fn table_stats(table: &ConformalTable) -> (usize, usize, f64) {
    let total: usize = table.bounds.iter().map(Vec::len).sum();
    let finite = table
        .bounds
        .iter()
        .flatten()
        .filter(|b| b.is_finite())
        .count();
    let max = table
        .bounds
        .iter()
        .flatten()
        .filter(|b| b.is_finite())
        .fold(0.0f64, |a, &b| a.max(b));
    (finite, total, max)
}

pub fn cmd_calibrate(
    mut config: RunConfig,
    data: &Path,
    model: Option<&Path>,
    epsilon: Option<f64>,
    out: &Path,
) -> Result<(), Fail> {
    if let Some(eps) = epsilon {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(validation(format!(
                "--epsilon: must be in (0,1), got {eps}"
            )));
        }
        config.zone.epsilon = eps;
    }
    let trajs = dataset::load_split(data, "calib", &config.zone)?;
    let predictor = load_predictor(config.predictor, model, &config.zone, Some(&trajs))?;
    let table = build_table(&trajs, predictor.as_ref(), &config.zone).map_err(core_fail)?;
    save_table(&table, out).map_err(|e| write_failed(out, e))?;
    let (finite, total, max) = table_stats(&table);
    println!(
        "calibrated {} cells from {} trajectories at epsilon {}: {finite}/{total} bounded, \
         largest bound {max:.3} s",
        total,
        trajs.len(),
        table.epsilon
    );
    println!("table: {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct CoverageFile<'a> {
    epsilon: f64,
    pooled_rate: f64,
    pooled_ci95: f64,
    report: &'a CoverageReport,
}

pub fn cmd_coverage(
    config: &RunConfig,
    data: &Path,
    model: Option<&Path>,
    table_path: &Path,
    out: Option<&Path>,
) -> Result<(), Fail> {
    let trajs = dataset::load_split(data, "test", &config.zone)?;
    let predictor = load_predictor(config.predictor, model, &config.zone, Some(&trajs))?;
    let table = load_table(table_path).map_err(|e| reject_input(table_path, e))?;
    let report =
        evaluate_coverage(&trajs, predictor.as_ref(), &table, &config.zone).map_err(core_fail)?;
    let per_l: Vec<f64> = report.per_l.iter().map(|r| r.rate()).collect();
    let lo = per_l.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = per_l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!(
        "coverage on {} trajectories: {:.4} +/- {:.4} (target >= {}, {} triples)",
        trajs.len(),
        report.pooled.rate(),
        report.pooled_ci95,
        1.0 - table.epsilon,
        report.pooled.total
    );
    println!("per-candidate range: {lo:.4} .. {hi:.4}");
    if let Some(path) = out {
        let file = CoverageFile {
            epsilon: table.epsilon,
            pooled_rate: report.pooled.rate(),
            pooled_ci95: report.pooled_ci95,
            report: &report,
        };
        let mut text = serde_json::to_string_pretty(&file).map_err(|e| write_failed(path, e))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| write_failed(path, e))?;
        println!("report: {}", path.display());
    }
    Ok(())
}

const PLAN_HEADER: [&str; 7] = [
    "step",
    "time_s",
    "feasible",
    "candidate",
    "merge_time_s",
    "merge_speed_mps",
    "margin",
];

#[derive(Serialize)]
struct PlanRow {
    step: usize,
    time_s: f64,
    feasible: bool,
    candidate: Option<usize>,
    /// Planned merge instant in absolute episode seconds.
    merge_time_s: Option<f64>,
    merge_speed_mps: Option<f64>,
    margin: Option<f64>,
}

fn write_plans_csv(path: &Path, result: &RunResult, dt: f64) -> Result<(), Fail> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    wtr.write_record(PLAN_HEADER)
        .map_err(|e| write_failed(path, e))?;
    for (step, plan) in result.plans.iter().enumerate() {
        let now = step as f64 * dt;
        wtr.serialize(PlanRow {
            step,
            time_s: now,
            feasible: plan.is_some(),
            candidate: plan.as_ref().map(|p| p.candidate),
            merge_time_s: plan.as_ref().map(|p| now + p.merge_time),
            merge_speed_mps: plan.as_ref().map(|p| p.merge_speed),
            margin: plan.as_ref().map(|p| p.margin),
        })
        .map_err(|e| write_failed(path, e))?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| write_failed(path, e.error()))?;
    std::fs::write(path, bytes).map_err(|e| write_failed(path, e))
}

#[derive(Serialize)]
struct RunFile<'a> {
    seed: u64,
    predictor: &'a str,
    merged: bool,
    merge_step: Option<usize>,
    candidate: Option<usize>,
    merge_time_s: Option<f64>,
    merge_speed_mps: Option<f64>,
    violation: bool,
    min_margin: Option<f64>,
    realized_headways_s: &'a [Option<f64>],
    infeasible_steps: usize,
    planning_steps: usize,
    collision: bool,
}

pub fn cmd_simulate(
    config: &RunConfig,
    model: Option<&Path>,
    table_path: Option<&Path>,
    seed: u64,
    out: &Path,
) -> Result<(), Fail> {
    let scenario = sample_scenario(seed, &config.template)
        .map_err(|e| validation(format!("template: {e}")))?;
    let result = match config.predictor {
        PredictorKind::Oracle => {
            if table_path.is_some() {
                return Err(validation(
                    "--table: the oracle planner uses ground truth, not a calibrated table",
                ));
            }
            let arrivals = oracle_arrivals(&scenario, &config.zone);
            run_closed_loop(
                &scenario,
                PlannerMode::Oracle {
                    arrivals: &arrivals,
                },
                &config.zone,
            )
            .map_err(core_fail)?
        }
        kind => {
            let table_path = table_path.ok_or_else(|| {
                validation("--table: required when planning with a calibrated predictor")
            })?;
            let table = load_table(table_path).map_err(|e| reject_input(table_path, e))?;
            let predictor = load_predictor(kind, model, &config.zone, None)?;
            run_closed_loop(
                &scenario,
                PlannerMode::Conformal {
                    predictor: predictor.as_ref(),
                    table: &table,
                },
                &config.zone,
            )
            .map_err(core_fail)?
        }
    };

    ensure_dir(out)?;
    let n_hdvs = result.trace.hdv_states.len();
    let pair = [(result.trace.clone(), n_hdvs)];
    dataset::write_traces_csv(&out.join("states.csv"), &pair)?;
    dataset::write_arrivals_json(&out.join("arrivals.json"), &pair)?;
    write_plans_csv(&out.join("plans.csv"), &result, config.zone.dt)?;

    let run_path = out.join("run.json");
    let file = RunFile {
        seed,
        predictor: config.predictor.name(),
        merged: result.merged,
        merge_step: result.merge_step,
        candidate: result.candidate,
        merge_time_s: result.merge_time,
        merge_speed_mps: result.merge_speed,
        violation: result.violation,
        min_margin: result.min_margin(),
        realized_headways_s: &result.realized_headways,
        infeasible_steps: result.infeasible_steps(),
        planning_steps: result.plans.len(),
        collision: result.collision,
    };
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| write_failed(&run_path, e))?;
    text.push('\n');
    std::fs::write(&run_path, text).map_err(|e| write_failed(&run_path, e))?;

    match (result.merged, result.merge_time, result.candidate) {
        (true, Some(t), Some(l)) => {
            println!(
                "seed {seed}: merged at t = {t:.2} s into slot {l} (violation: {})",
                result.violation
            )
        }
        _ => println!(
            "seed {seed}: no merge within the horizon ({} of {} planning steps infeasible)",
            result.infeasible_steps(),
            result.plans.len()
        ),
    }
    println!("artifacts: {}", out.display());
    Ok(())
}

pub fn cmd_batch(
    config: &RunConfig,
    model: Option<&Path>,
    table_path: &Path,
    seed: u64,
    runs: usize,
    out: &Path,
) -> Result<BatchReport, Fail> {
    if runs == 0 {
        return Err(validation("--runs: must be >= 1"));
    }
    if config.predictor == PredictorKind::Oracle {
        return Err(validation(
            "predictor: every batch already includes the clairvoyant baseline; \
             choose \"network\" or \"physics\"",
        ));
    }
    seed.checked_add(runs as u64 - 1)
        .ok_or_else(|| validation("--seed: seed range overflows past u64::MAX"))?;
    let seeds: Vec<u64> = (0..runs as u64).map(|i| seed + i).collect();
    let table = load_table(table_path).map_err(|e| reject_input(table_path, e))?;
    let predictor = load_predictor(config.predictor, model, &config.zone, None)?;
    let report = batch_evaluate(
        &config.template,
        &seeds,
        predictor.as_ref(),
        &table,
        &config.zone,
    )
    .map_err(core_fail)?;

    ensure_dir(out)?;
    let report_path = out.join("report.json");
    let mut text =
        serde_json::to_string_pretty(&report).map_err(|e| write_failed(&report_path, e))?;
    text.push('\n');
    std::fs::write(&report_path, text).map_err(|e| write_failed(&report_path, e))?;

    let runs_path = out.join("runs.csv");
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for run in &report.runs {
        wtr.serialize(run)
            .map_err(|e| write_failed(&runs_path, e))?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| write_failed(&runs_path, e.error()))?;
    std::fs::write(&runs_path, bytes).map_err(|e| write_failed(&runs_path, e))?;

    println!(
        "{} runs: {} merged ({:.1}%), violation rate {:.3} (epsilon {}), mean merge {:.2} s",
        report.num_runs,
        report.merged_count,
        100.0 * report.merge_rate,
        report.violation_rate,
        config.zone.epsilon,
        report.mean_merge_time
    );
    println!(
        "oracle baseline: {} merged; on the {} seeds where both merged, \
         oracle mean {:.2} s vs conformal {:.2} s",
        report.oracle_merged_count,
        report.matched_count,
        report.matched_oracle_mean,
        report.matched_conformal_mean
    );
    println!("report: {}", report_path.display());
    Ok(report)
}
