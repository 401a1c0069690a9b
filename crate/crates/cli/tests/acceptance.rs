//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion.
//!
//! Failures are reported but do not fail `cargo test` unless
//! `FAIRLAG_ACCEPTANCE_STRICT=1` is set, in which case any failure exits 1.
//! `FAIRLAG_ACCEPTANCE_ONLY=4,7` runs a subset.

#[path = "../../core/tests/common/mod.rs"]
#[allow(dead_code)]
mod common;

use std::path::PathBuf;
use std::time::Instant;

use fairlag::audit::{di_counterexample, omega, BoundInputs, RadiusDivisor};
use fairlag::fairloss::{
    const_di, const_dp, const_eo, fnr_gap, fpr_gap, q_mean, Batch, ConstraintKind, EoVariant,
};
use fairlag::gradcheck::{check, kink_margin};
use fairlag::lagrange::{Objective, TrainBatch, TrainConfig};
use fairlag::model::{Dims, MlpParams};
use fairlag::numcore::{Matrix, Rng};
use fairlag_cli::commands::{cmd_crossval, cmd_sweep};
use fairlag_cli::config::{RunConfig, SchemaSource};
use fairlag_cli::report::{parse_tradeoff_csv, RunReport};

type Criterion = (&'static str, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn adult_path() -> PathBuf {
    PathBuf::from(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../data/adult/adult.csv"
    ))
}

fn adult_config(train: TrainConfig, out: &std::path::Path) -> RunConfig {
    let mut cfg = RunConfig::new(adult_path(), SchemaSource::Preset("adult".into()), train);
    cfg.out = out.to_path_buf();
    cfg
}

fn crossval(train: TrainConfig) -> fairlag_cli::Result<RunReport> {
    let dir = tempfile::tempdir()?;
    cmd_crossval(&adult_config(train, dir.path()))
}

fn adult_train(constraint: ConstraintKind, epochs: usize) -> TrainConfig {
    TrainConfig {
        lr_theta: 0.001,
        lr_lambda: Some(0.1),
        batch_size: 500,
        max_epochs: epochs,
        constraint: Some(constraint),
        ..Default::default()
    }
}

fn gradient_check() -> Outcome {
    const MARGIN: f64 = 1e-4;
    let kinds = [
        None,
        Some(ConstraintKind::Dp { epsilon: 0.05 }),
        Some(ConstraintKind::EoSum { epsilon: 0.05 }),
        Some(ConstraintKind::EoMax { epsilon: 0.05 }),
        Some(ConstraintKind::Di { p_percent: 80.0 }),
        Some(ConstraintKind::DpMulti { epsilon: 0.05 }),
    ];
    let mut rng = Rng::new(2024);
    let mut worst = 0.0f64;
    let mut instances = 0;
    for constraint in kinds {
        for objective in [Objective::Ce, Objective::Qmean] {
            let cfg = TrainConfig {
                constraint,
                objective,
                ..Default::default()
            };
            let mut done = 0;
            while done < 20 {
                let s = 4 + rng.below(29);
                let (_, a, y) = common::random_batch(&mut rng, s);
                let (g, m) = if constraint.is_some_and(|c| c.is_multi_group()) {
                    (common::random_groups(&mut rng, s, 3), 3)
                } else {
                    (a.iter().map(|&v| v as usize).collect(), 2)
                };
                let x = Matrix::from_vec(s, 3, rng.normal(0.0, 1.0, s * 3).unwrap()).unwrap();
                let params = MlpParams::init(Dims { d: 3, h1: 6, h2: 5 }, &mut rng).unwrap();
                let tb = TrainBatch::new(&x, &a, &y, &g, m).unwrap();
                if kink_margin(&params, &tb, &cfg).unwrap() < MARGIN {
                    continue;
                }
                let r = check(&params, 0.5 + rng.uniform(), &tb, &cfg, 1e-5, 1e-6).unwrap();
                worst = worst.max(r.max_rel_err);
                done += 1;
                instances += 1;
            }
        }
    }
    outcome(
        worst <= 1e-4,
        format!("max rel err {worst:.2e} over {instances} instances (limit 1e-4)"),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = Rng::new(99);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let s = 2 + rng.below(200);
        let (p, a, y) = common::random_batch(&mut rng, s);
        let b = Batch::new(&p, &a, &y).unwrap();
        let pairs = [
            (const_dp(&b).unwrap(), common::dp(&p, &a)),
            (
                const_eo(&b, EoVariant::Sum).unwrap(),
                common::eo_sum(&p, &a, &y),
            ),
            (
                const_eo(&b, EoVariant::Max).unwrap(),
                common::eo_max(&p, &a, &y),
            ),
            (const_di(&b).unwrap(), common::di(&p, &a)),
            (q_mean(&b, false).unwrap(), common::q_mean(&p, &y, false)),
            (q_mean(&b, true).unwrap(), common::q_mean(&p, &y, true)),
        ];
        for (u, v) in pairs {
            worst = worst.max((u - v).abs());
        }
    }
    outcome(
        worst <= 1e-12,
        format!("max abs diff {worst:.2e} over 1000 batches (limit 1e-12)"),
    )
}

fn hand_values() -> Outcome {
    let a = [true, true, false, false];
    let p = [0.8, 0.6, 0.2, 0.4];
    let none = [false; 4];
    let b = Batch::new(&p, &a, &none).unwrap();
    let eo_p = [0.9, 0.8, 0.1, 0.6];
    let eo_y = [false, true, false, true];
    let eb = Batch::new(&eo_p, &a, &eo_y).unwrap();
    let q_y = [true, true, false, false];
    let q_p = [0.9, 0.7, 0.2, 0.4];
    let qb = Batch::new(&q_p, &a, &q_y).unwrap();
    let checks = [
        ("dp", const_dp(&b).unwrap(), 0.4),
        ("fpr", fpr_gap(&eb).unwrap(), 0.4),
        ("fnr", fnr_gap(&eb).unwrap(), 0.1),
        ("eo_sum", const_eo(&eb, EoVariant::Sum).unwrap(), 0.5),
        ("eo_max", const_eo(&eb, EoVariant::Max).unwrap(), 0.4),
        ("di", const_di(&b).unwrap(), -3.0 / 7.0),
        ("q_mean", q_mean(&qb, false).unwrap(), 0.13f64.sqrt()),
    ];
    let bad: Vec<String> = checks
        .iter()
        .filter(|(_, got, want)| (got - want).abs() > 1e-9)
        .map(|(n, got, want)| format!("{n}={got} want {want}"))
        .collect();
    let shown: Vec<String> = checks
        .iter()
        .map(|(n, v, _)| format!("{n}={v:.6}"))
        .collect();
    outcome(
        bad.is_empty(),
        format!("{} {}", shown.join(" "), bad.join("; ")),
    )
}

fn adult_dp() -> Outcome {
    match crossval(adult_train(ConstraintKind::Dp { epsilon: 0.05 }, 60)) {
        Ok(r) => {
            let (acc, dp) = (r.aggregate.mean["accuracy"], r.aggregate.mean["dp_soft"]);
            outcome(
                acc >= 0.80 && dp <= 0.07,
                format!("mean accuracy {acc:.4} (>= 0.80), mean soft DP {dp:.4} (<= 0.07)"),
            )
        }
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

fn adult_eo() -> Outcome {
    let train = TrainConfig {
        lr_theta: 0.01,
        lr_lambda: Some(0.01),
        batch_size: 1000,
        max_epochs: 60,
        constraint: Some(ConstraintKind::EoSum { epsilon: 0.05 }),
        ..Default::default()
    };
    match crossval(train) {
        Ok(r) => {
            let m = &r.aggregate.mean;
            let (acc, fpr, fnr) = (m["accuracy"], m["fpr_gap"], m["fnr_gap"]);
            outcome(
                acc >= 0.82 && fpr <= 0.03 && fnr <= 0.03,
                format!(
                    "mean accuracy {acc:.4} (>= 0.82), FPR gap {fpr:.4} (<= 0.03), FNR gap {fnr:.4} (<= 0.03); \
                     class-conditional gaps {:.4}/{:.4}, soft EO_SUM {:.4}",
                    m["fpr_cond_gap"], m["fnr_cond_gap"], m["eo_sum_soft"]
                ),
            )
        }
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

fn adult_di() -> Outcome {
    match crossval(adult_train(ConstraintKind::Di { p_percent: 80.0 }, 30)) {
        Ok(r) => {
            let (acc, pp) = (r.aggregate.mean["accuracy"], r.aggregate.mean["p_percent"]);
            outcome(
                acc >= 0.80 && pp >= 75.0,
                format!("mean p%-rule {pp:.2} (>= 75), mean accuracy {acc:.4} (>= 0.80)"),
            )
        }
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

fn adult_qmean() -> Outcome {
    let train = TrainConfig {
        objective: Objective::Qmean,
        ..adult_train(ConstraintKind::Dp { epsilon: 0.05 }, 30)
    };
    match crossval(train) {
        Ok(r) => {
            let (q, dp) = (r.aggregate.mean["q_mean"], r.aggregate.mean["dp_soft"]);
            outcome(
                q <= 0.33 && dp <= 0.06,
                format!("mean Q-mean {q:.4} (<= 0.33), mean soft DP {dp:.4} (<= 0.06)"),
            )
        }
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

fn bound_behaviour() -> Outcome {
    let base = BoundInputs {
        r: 2,
        d: 3,
        w: 0.5,
        l: 1.0,
        s: 10,
        b: 1e4,
        delta: 0.1,
        c: 4.0,
        radius_divisor: RadiusDivisor::S,
    };
    let series: Vec<f64> = (2..=8)
        .map(|e| {
            omega(&BoundInputs {
                b: 10f64.powi(e),
                ..base
            })
            .unwrap()
            .closed
        })
        .collect();
    let decreasing = series.windows(2).all(|w| w[1] < w[0]);
    let example = omega(&base).unwrap().closed;
    let grows = omega(&BoundInputs { s: 20, ..base }).unwrap().closed > example;
    outcome(
        decreasing && (example - 0.079309).abs() <= 1e-6 && grows,
        format!(
            "strictly decreasing over 1e2..1e8: {decreasing}; example {example:.7} (0.079309 ± 1e-6); grows with S: {grows}"
        ),
    )
}

fn counterexample() -> Outcome {
    let mut ok = true;
    let mut worst = 0.0f64;
    for e in 1..=8 {
        let mu = 10f64.powi(-e);
        let c = di_counterexample(mu).unwrap();
        worst = worst.max((c.gap - 0.5).abs());
        ok &= c.sup_distance <= mu && (c.gap - 0.5).abs() <= 1e-9;
    }
    outcome(
        ok,
        format!("mu 1e-1..1e-8: max |gap - 0.5| = {worst:.2e}, sup-distance <= mu"),
    )
}

fn determinism() -> Outcome {
    let train = adult_train(ConstraintKind::EoSum { epsilon: 0.05 }, 3);
    match (crossval(train.clone()), crossval(train)) {
        (Ok(a), Ok(b)) => {
            let same = a.payload_json().unwrap() == b.payload_json().unwrap();
            outcome(same, format!("report payloads byte-identical: {same}"))
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, format!("error: {e}")),
    }
}

fn sweep_shape() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let mut cfg = adult_config(
        adult_train(ConstraintKind::Dp { epsilon: 0.05 }, 30),
        dir.path(),
    );
    cfg.sweep = Some(vec![0.2, 0.05, 0.01]);
    if let Err(e) = cmd_sweep(&cfg) {
        return outcome(false, format!("error: {e}"));
    }
    let text = std::fs::read_to_string(dir.path().join("tradeoff.csv")).unwrap_or_default();
    match parse_tradeoff_csv(&text) {
        Some(rows) => {
            let acc: Vec<f64> = rows.iter().map(|r| r.mean_accuracy).collect();
            let ok = acc.windows(2).all(|w| w[1] <= w[0]);
            let shown: Vec<String> = rows
                .iter()
                .map(|r| format!("eps {} acc {:.4}", r.epsilon_or_p, r.mean_accuracy))
                .collect();
            outcome(
                ok,
                format!(
                    "accuracy non-increasing as eps shrinks: {}",
                    shown.join(", ")
                ),
            )
        }
        None => outcome(false, "tradeoff.csv did not parse"),
    }
}

fn main() {
    let only: Option<Vec<String>> = std::env::var("FAIRLAG_ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').map(|s| s.trim().to_string()).collect());
    let criteria: [Criterion; 11] = [
        ("1", "gradient finite differences", gradient_check),
        ("2", "constraint oracle equivalence", oracle_equivalence),
        ("3", "hand-value fixtures", hand_values),
        ("4", "Adult DP eps=0.05", adult_dp),
        ("5", "Adult EO_SUM eps=0.05", adult_eo),
        ("6", "Adult DI p=80", adult_di),
        ("7", "Adult Q-mean with DP eps=0.05", adult_qmean),
        ("8", "bound behaviour", bound_behaviour),
        ("9", "DI counterexample", counterexample),
        ("10", "crossval determinism", determinism),
        ("sweep", "tradeoff shape", sweep_shape),
    ];
    let mut failed = Vec::new();
    for (id, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.iter().any(|x| x == id)) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {id:>5} {name}: {} ({:.1}s)",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed.push(id);
        }
    }
    println!("acceptance: {} failed {:?}", failed.len(), failed);
    if !failed.is_empty() && std::env::var("FAIRLAG_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
