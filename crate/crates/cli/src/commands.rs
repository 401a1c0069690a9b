//! Command implementations. Each returns its result value and writes its
//! files; the binary maps errors to exit codes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use fairlag::audit::{
    self, bound_csv, bound_sweep, di_counterexample, hundred_row_demo, BoundInputs, MetricsReport,
    RadiusDivisor,
};
use fairlag::data::{kfold, load_csv, Encoder, RawTable, SchemaConfig};
use fairlag::lagrange::{fit, FitOutput, TrainConfig};
use fairlag::model::Checkpoint;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::report::{
    log_entries, tradeoff_csv, Aggregate, FoldReport, Mode, RunMetadata, RunReport, TradeoffRow,
    REPORT_FORMAT,
};

/// Holdout used by `train`: one fold of a stratified five-way split, 80/20.
const HOLDOUT_FOLDS: usize = 5;

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

struct FoldRun {
    report: FoldReport,
    fit: FitOutput,
    encoder: Encoder,
    wall_ms: u64,
}

fn run_fold(
    table: &RawTable,
    schema: &SchemaConfig,
    fold: usize,
    train_rows: &[usize],
    test_rows: &[usize],
    train: &TrainConfig,
    eval_s: usize,
) -> Result<FoldRun> {
    let start = Instant::now();
    let encoder = Encoder::fit(table, schema, train_rows)?;
    let train_set = encoder.transform(table, train_rows)?;
    let test_set = encoder.transform(table, test_rows)?;
    let out = fit(&train_set, train)?;
    let metrics = audit::evaluate(&out.params, &test_set, eval_s)?;
    let last = out.log.last().map(|r| r.epoch).unwrap_or(0);
    Ok(FoldRun {
        report: FoldReport {
            fold,
            n_train: train_rows.len(),
            n_test: test_rows.len(),
            epochs: last,
            stop: out.log.stop,
            final_lambda: out.lambda,
            metrics,
            log: log_entries(&out.log),
        },
        fit: out,
        encoder,
        wall_ms: start.elapsed().as_millis() as u64,
    })
}

fn load_table(cfg: &RunConfig) -> Result<(RawTable, SchemaConfig)> {
    cfg.validate()?;
    let schema = cfg.schema_config()?;
    let table = load_csv(&cfg.dataset, &schema)?;
    if table.is_empty() {
        return Err(fairlag::Error::Data("dataset has no usable rows".into()).into());
    }
    Ok((table, schema))
}

fn labels(table: &RawTable, schema: &SchemaConfig) -> Result<(Vec<bool>, Vec<bool>)> {
    let sc = table.column_index(&schema.sensitive.column)?;
    let lc = table.column_index(&schema.label.column)?;
    let a = table
        .rows
        .iter()
        .map(|r| r[sc] == schema.sensitive.protected)
        .collect();
    let y = table
        .rows
        .iter()
        .map(|r| r[lc] == schema.label.positive)
        .collect();
    Ok((a, y))
}

fn assemble(
    cfg: &RunConfig,
    command: &str,
    rows_dropped: usize,
    runs: &[FoldRun],
    started: u64,
    total: Instant,
) -> RunReport {
    let folds: Vec<FoldReport> = runs.iter().map(|r| r.report.clone()).collect();
    RunReport {
        format: REPORT_FORMAT.into(),
        command: command.into(),
        mode: Mode::of(cfg),
        config: cfg.clone(),
        rows_dropped,
        aggregate: Aggregate::of(&folds),
        folds,
        metadata: RunMetadata {
            started_unix_ms: started,
            fold_wall_ms: runs.iter().map(|r| r.wall_ms).collect(),
            total_wall_ms: total.elapsed().as_millis() as u64,
            version: env!("CARGO_PKG_VERSION").into(),
        },
    }
}

fn write(path: impl AsRef<Path>, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

/// Single stratified 80/20 split. Writes `model.json`, `train_log.csv`,
/// `report.json` and the raw held-out rows as `test.csv`.
pub fn cmd_train(cfg: &RunConfig) -> Result<RunReport> {
    let started = now_ms();
    let total = Instant::now();
    let (table, schema) = load_table(cfg)?;
    let (a, y) = labels(&table, &schema)?;
    let split = kfold(&a, &y, HOLDOUT_FOLDS, cfg.train.seed)?;
    let (train_rows, test_rows) = split.split(0);
    let train = cfg.effective_train();
    let run = run_fold(
        &table,
        &schema,
        0,
        &train_rows,
        &test_rows,
        &train,
        cfg.eval_batch_size(),
    )?;

    fs::create_dir_all(&cfg.out)?;
    let ckpt = Checkpoint::new(&run.fit.params, train.seed, Some(run.encoder.clone()));
    write(cfg.out.join("model.json"), &ckpt.to_json()?)?;
    write(cfg.out.join("train_log.csv"), &run.fit.log.to_csv())?;
    table
        .select(&test_rows)
        .write_csv(fs::File::create(cfg.out.join("test.csv"))?)?;
    let report = assemble(cfg, "train", table.dropped, &[run], started, total);
    write(cfg.out.join("report.json"), &report.to_json()?)?;
    Ok(report)
}

fn crossval_report(cfg: &RunConfig, train: &TrainConfig) -> Result<(RunReport, Vec<FoldRun>)> {
    let started = now_ms();
    let total = Instant::now();
    if cfg.folds < 2 {
        return Err(CliError::Config("cross-validation needs folds >= 2".into()));
    }
    let (table, schema) = load_table(cfg)?;
    let (a, y) = labels(&table, &schema)?;
    let split = kfold(&a, &y, cfg.folds, train.seed)?;
    let mut runs = Vec::with_capacity(cfg.folds);
    for f in 0..split.k() {
        let (tr, te) = split.split(f);
        runs.push(run_fold(
            &table,
            &schema,
            f,
            &tr,
            &te,
            train,
            cfg.eval_batch_size(),
        )?);
    }
    let mut echo = cfg.clone();
    echo.train = train.clone();
    let report = assemble(&echo, "crossval", table.dropped, &runs, started, total);
    Ok((report, runs))
}

/// `folds` independent fits. Writes `report.json` and one
/// `train_log_fold{i}.csv` per fold.
pub fn cmd_crossval(cfg: &RunConfig) -> Result<RunReport> {
    let (report, runs) = crossval_report(cfg, &cfg.effective_train())?;
    fs::create_dir_all(&cfg.out)?;
    for r in &runs {
        write(
            cfg.out.join(format!("train_log_fold{}.csv", r.report.fold)),
            &r.fit.log.to_csv(),
        )?;
    }
    write(cfg.out.join("report.json"), &report.to_json()?)?;
    Ok(report)
}

/// One cross-validation per sweep value. Writes `tradeoff.csv` and
/// `sweep.json` (the per-value reports).
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Vec<TradeoffRow>> {
    cfg.validate()?;
    let values = cfg
        .sweep
        .as_ref()
        .filter(|v| !v.is_empty())
        .ok_or_else(|| CliError::Config("sweep list is empty".into()))?;
    let kind = cfg
        .train
        .constraint
        .ok_or_else(|| CliError::Config("a sweep needs a constraint".into()))?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &v in values {
        let mut train = cfg.effective_train();
        let k = kind.with_tolerance(v);
        train.constraint = Some(k);
        let (report, _) = crossval_report(cfg, &train)?;
        let accs: Vec<f64> = report.folds.iter().map(|f| f.metrics.accuracy).collect();
        let cons: Vec<f64> = report
            .folds
            .iter()
            .map(|f| f.metrics.constraint_value(&k))
            .collect();
        let (ma, sa) = crate::report::mean_std(&accs);
        let (mc, sc) = crate::report::mean_std(&cons);
        rows.push(TradeoffRow {
            epsilon_or_p: v,
            mean_accuracy: ma,
            std_accuracy: sa,
            mean_constraint_value: mc,
            std_constraint_value: sc,
        });
        reports.push(report);
    }
    fs::create_dir_all(&cfg.out)?;
    write(cfg.out.join("tradeoff.csv"), &tradeoff_csv(&rows))?;
    write(
        cfg.out.join("sweep.json"),
        &serde_json::to_string_pretty(&reports)?,
    )?;
    Ok(rows)
}

/// Scores a checkpoint on a CSV. The checkpoint's own encoder is used when
/// present; otherwise `schema` is required and an encoder is fitted on the file.
pub fn cmd_audit(
    model: &Path,
    dataset: &Path,
    schema: Option<&SchemaConfig>,
    batch_size: usize,
) -> Result<MetricsReport> {
    let ckpt = Checkpoint::from_json(&fs::read_to_string(model)?)?;
    let params = ckpt.params()?;
    let encoder = match (&ckpt.encoder, schema) {
        (Some(e), _) => e.clone(),
        (None, Some(s)) => {
            let table = load_csv(dataset, s)?;
            let all: Vec<usize> = (0..table.len()).collect();
            Encoder::fit(&table, s, &all)?
        }
        (None, None) => {
            return Err(CliError::Usage(
                "checkpoint has no encoder; pass --schema or --preset".into(),
            ))
        }
    };
    let schema = schema.unwrap_or(&encoder.schema);
    let table = load_csv(dataset, schema)?;
    let all: Vec<usize> = (0..table.len()).collect();
    let ds = encoder.transform(&table, &all)?;
    Ok(audit::evaluate(&params, &ds, batch_size)?)
}

/// Decades `10^lo ..= 10^hi`.
pub fn decades(lo: i32, hi: i32) -> Result<Vec<f64>> {
    if lo > hi {
        return Err(CliError::Usage(format!("empty B range 1e{lo}..1e{hi}")));
    }
    Ok((lo..=hi).map(|e| 10f64.powi(e)).collect())
}

pub fn cmd_bounds(inputs: &BoundInputs, bs: &[f64], empirical_mean: f64) -> Result<String> {
    inputs.validate()?;
    Ok(bound_csv(&bound_sweep(inputs, bs, empirical_mean)?))
}

pub const COUNTEREXAMPLE_HEADER: &str = "mu,t,sup_distance,const_h,const_h_hat,gap,gap_floored";

/// Table of DI witness pairs; `hundred_row` adds the hundred-row construction
/// with `δ = μ/2` for each `μ ≤ 1`.
pub fn cmd_counterexample(mus: &[f64], hundred_row: bool) -> Result<String> {
    if mus.is_empty() {
        return Err(CliError::Usage("give at least one --mu value".into()));
    }
    let mut s = format!("{COUNTEREXAMPLE_HEADER}\n");
    for &mu in mus {
        let c = di_counterexample(mu)?;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            mu, c.h[0], c.sup_distance, c.const_h, c.const_h_hat, c.gap, c.gap_floored
        );
    }
    if hundred_row {
        s.push_str("\nhundred_row_mu,delta,sup_distance,const_h,const_h_hat,gap\n");
        for &mu in mus.iter().filter(|&&m| m <= 1.0) {
            let d = hundred_row_demo(mu, mu / 2.0)?;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                mu,
                mu / 2.0,
                d.sup_distance,
                d.const_h,
                d.const_h_hat,
                d.gap
            );
        }
    }
    Ok(s)
}

pub fn parse_divisor(s: &str) -> Result<RadiusDivisor> {
    match s {
        "s" | "S" => Ok(RadiusDivisor::S),
        "2s" | "2S" => Ok(RadiusDivisor::TwoS),
        other => Err(CliError::Usage(format!(
            "radius divisor must be s or 2s, got {other}"
        ))),
    }
}
