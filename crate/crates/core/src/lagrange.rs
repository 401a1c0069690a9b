//! Two-step min-max training: Adam descent on the network weights, then
//! projected ascent on the multiplier, once per mini-batch.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{batch_iter, BatchNeeds, Dataset};
use crate::error::{param, shape, Error, Result};
use crate::fairloss::{
    self, const_dp_multi, const_dp_multi_grad, constraint_grad, constraint_value, Batch,
    ConstraintKind, LossKind, MultiGroupBatch,
};
use crate::model::{backward, forward, Dims, MlpParams};
use crate::numcore::{AdamState, Matrix, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    #[default]
    Ce,
    Qmean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaOptimizer {
    #[default]
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub h1: usize,
    pub h2: usize,
    pub lr_theta: f64,
    /// Falls back to `lr_theta` when absent.
    pub lr_lambda: Option<f64>,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub constraint: Option<ConstraintKind>,
    pub objective: Objective,
    /// Halve the squared-error sum inside Q-mean.
    pub qmean_class_factor: bool,
    pub seed: u64,
    pub lambda_init: f64,
    pub lambda_optimizer: LambdaOptimizer,
    /// Keep λ at `lambda_init` (the λ = 0 baseline when that is 0).
    pub freeze_lambda: bool,
    pub window: usize,
    pub tol: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            h1: 100,
            h2: 50,
            lr_theta: 0.001,
            lr_lambda: None,
            batch_size: 500,
            max_epochs: 5000,
            constraint: None,
            objective: Objective::Ce,
            qmean_class_factor: false,
            seed: 0,
            lambda_init: 0.0,
            lambda_optimizer: LambdaOptimizer::Adam,
            freeze_lambda: false,
            window: 50,
            tol: 1e-5,
        }
    }
}

impl TrainConfig {
    pub fn lr_lambda(&self) -> f64 {
        self.lr_lambda.unwrap_or(self.lr_theta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(param(format!(
                "batch size must be >= 2, got {}",
                self.batch_size
            )));
        }
        if self.lr_theta.is_nan()
            || self.lr_theta <= 0.0
            || self.lr_lambda().is_nan()
            || self.lr_lambda() <= 0.0
        {
            return Err(param("learning rates must be > 0"));
        }
        if self.max_epochs < 1 {
            return Err(param("max_epochs must be >= 1"));
        }
        if self.lambda_init.is_nan() || self.lambda_init < 0.0 {
            return Err(param(format!(
                "lambda_init must be >= 0, got {}",
                self.lambda_init
            )));
        }
        if self.h1 == 0 || self.h2 == 0 {
            return Err(param("hidden sizes must be positive"));
        }
        if self.window == 0 || self.tol.is_nan() || self.tol < 0.0 {
            return Err(param("convergence window must be positive and tol >= 0"));
        }
        if let Some(c) = &self.constraint {
            c.validate()?;
        }
        Ok(())
    }

    pub fn dims(&self, d: usize) -> Dims {
        Dims {
            d,
            h1: self.h1,
            h2: self.h2,
        }
    }

    fn objective_kind(&self) -> LossKind {
        match self.objective {
            Objective::Ce => LossKind::CrossEntropy,
            Objective::Qmean => LossKind::QMean {
                class_factor: self.qmean_class_factor,
            },
        }
    }

    pub fn batch_needs(&self) -> BatchNeeds {
        BatchNeeds::for_training(self.constraint.as_ref(), self.objective == Objective::Qmean)
    }
}

/// `L_NN = l_θ + λ·l_k`.
pub fn total_loss(objective_value: f64, lambda: f64, constraint_loss_value: f64) -> f64 {
    objective_value + lambda * constraint_loss_value
}

/// Rows of one mini-batch before the forward pass.
#[derive(Debug, Clone, Copy)]
pub struct TrainBatch<'a> {
    pub x: &'a Matrix,
    pub a: &'a [bool],
    pub y: &'a [bool],
    pub group: &'a [usize],
    pub n_groups: usize,
}

impl<'a> TrainBatch<'a> {
    pub fn new(
        x: &'a Matrix,
        a: &'a [bool],
        y: &'a [bool],
        group: &'a [usize],
        n_groups: usize,
    ) -> Result<Self> {
        let n = x.rows();
        if a.len() != n || y.len() != n || group.len() != n {
            return Err(shape("batch columns disagree on length"));
        }
        Ok(Self {
            x,
            a,
            y,
            group,
            n_groups,
        })
    }
}

/// Per-step scalars, all computed from the pre-update probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub objective: f64,
    /// `None` when training without a constraint.
    pub constraint_value: Option<f64>,
    pub constraint_loss: f64,
    pub total: f64,
}

fn objective_eval(kind: LossKind, b: &Batch) -> Result<(f64, Vec<f64>)> {
    let v = match kind {
        LossKind::CrossEntropy => fairloss::cross_entropy(b.p, b.y)?,
        LossKind::QMean { class_factor } => fairloss::q_mean(b, class_factor)?,
        _ => return Err(param("objective must be cross-entropy or Q-mean")),
    };
    Ok((v, fairloss::grad_wrt_p(kind, b)?))
}

fn constraint_eval(
    kind: &ConstraintKind,
    p: &[f64],
    batch: &TrainBatch,
) -> Result<(f64, Vec<f64>)> {
    if kind.is_multi_group() {
        let mb = MultiGroupBatch::new(p, batch.group, batch.n_groups)?;
        Ok((const_dp_multi(&mb)?, const_dp_multi_grad(&mb)?))
    } else {
        let b = Batch::new(p, batch.a, batch.y)?;
        Ok((constraint_value(kind, &b)?, constraint_grad(kind, &b)?))
    }
}

/// Loss statistics and the flat gradient of `L_NN` with respect to θ at a
/// fixed λ.
pub fn loss_and_grad(
    params: &MlpParams,
    lambda: f64,
    batch: &TrainBatch,
    cfg: &TrainConfig,
) -> Result<(StepStats, Vec<f64>)> {
    let trace = forward(params, batch.x)?;
    let p = &trace.p;
    let b = Batch::new(p, batch.a, batch.y)?;
    let (objective, mut dl_dp) = objective_eval(cfg.objective_kind(), &b)?;
    let (constraint_value, constraint_loss) = match &cfg.constraint {
        Some(kind) => {
            let (c, g) = constraint_eval(kind, p, batch)?;
            // a single batch, so the batch average is the batch value
            let lk = c - kind.slack();
            if lambda != 0.0 {
                for (d, g) in dl_dp.iter_mut().zip(g) {
                    *d += lambda * g;
                }
            }
            (Some(c), lk)
        }
        None => (None, 0.0),
    };
    let grads = backward(params, &trace, &dl_dp)?.to_flat();
    let stats = StepStats {
        objective,
        constraint_value,
        constraint_loss,
        total: total_loss(objective, lambda, constraint_loss),
    };
    Ok((stats, grads))
}

/// Joint primal-dual state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub params: MlpParams,
    pub lambda: f64,
    pub adam_theta: AdamState,
    pub adam_lambda: AdamState,
    pub epoch: usize,
    /// Epoch-mean `L_NN`, one entry per finished epoch.
    pub history: Vec<f64>,
}

impl TrainState {
    pub fn new(params: MlpParams, lambda_init: f64) -> Result<Self> {
        if lambda_init.is_nan() || lambda_init < 0.0 {
            return Err(param(format!("lambda must be >= 0, got {lambda_init}")));
        }
        let n = params.dims().param_count();
        Ok(Self {
            params,
            lambda: lambda_init,
            adam_theta: AdamState::new(n),
            adam_lambda: AdamState::new(1),
            epoch: 0,
            history: Vec::new(),
        })
    }

    pub fn init(d: usize, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = Rng::new(cfg.seed);
        Self::new(MlpParams::init(cfg.dims(d), &mut rng)?, cfg.lambda_init)
    }
}

/// One descent step on θ followed by one projected ascent step on λ.
pub fn train_step(
    state: &mut TrainState,
    batch: &TrainBatch,
    cfg: &TrainConfig,
) -> Result<StepStats> {
    let (stats, grads) = loss_and_grad(&state.params, state.lambda, batch, cfg)?;
    let mut flat = state.params.to_flat();
    state.adam_theta.step(&mut flat, &grads, cfg.lr_theta)?;
    state.params.set_flat(&flat)?;
    if !state.params.is_finite() {
        return Err(Error::Numeric("network weights became non-finite".into()));
    }

    if cfg.constraint.is_some() && !cfg.freeze_lambda {
        let lk = stats.constraint_loss;
        let mut lam = [state.lambda];
        match cfg.lambda_optimizer {
            // ascent on L is descent on −L
            LambdaOptimizer::Adam => state.adam_lambda.step(&mut lam, &[-lk], cfg.lr_lambda())?,
            LambdaOptimizer::Sgd => lam[0] += cfg.lr_lambda() * lk,
        }
        if !lam[0].is_finite() {
            return Err(Error::Numeric("multiplier became non-finite".into()));
        }
        state.lambda = lam[0].max(0.0);
    }
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub epoch: usize,
    /// Epoch mean of the per-batch objective.
    pub objective: f64,
    /// Epoch mean of the per-batch constraint value.
    pub constraint_value: Option<f64>,
    /// Multiplier at the end of the epoch.
    pub lambda: f64,
    /// Epoch mean of `L_NN`.
    pub total: f64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
    pub stop: StopReason,
}

impl TrainLog {
    pub const HEADER: &'static str = "epoch,objective,constraint_value,lambda,wall_ms";

    /// Full CSV including wall-clock times.
    pub fn to_csv(&self) -> String {
        self.render(true)
    }

    /// CSV without the `wall_ms` column; reproducible for a fixed seed.
    pub fn to_csv_reproducible(&self) -> String {
        self.render(false)
    }

    fn render(&self, wall: bool) -> String {
        let mut s = String::new();
        if wall {
            s.push_str(Self::HEADER);
        } else {
            s.push_str("epoch,objective,constraint_value,lambda");
        }
        s.push('\n');
        for r in &self.rows {
            let c = r
                .constraint_value
                .map(|c| c.to_string())
                .unwrap_or_default();
            let _ = write!(s, "{},{},{},{}", r.epoch, r.objective, c, r.lambda);
            if wall {
                let _ = write!(s, ",{}", r.wall_ms);
            }
            s.push('\n');
        }
        s
    }

    pub fn last(&self) -> Option<&LogRow> {
        self.rows.last()
    }
}

#[derive(Debug, Clone)]
pub struct FitOutput {
    pub params: MlpParams,
    pub lambda: f64,
    pub log: TrainLog,
}

/// Whether the moving average over the last `window` epochs moved by less
/// than `tol` since the previous epoch.
fn converged(history: &[f64], window: usize, tol: f64) -> bool {
    let t = history.len();
    if t <= window {
        return false;
    }
    // consecutive window means differ by (newest − dropped) / window
    ((history[t - 1] - history[t - 1 - window]) / window as f64).abs() < tol
}

pub fn fit(dataset: &Dataset, cfg: &TrainConfig) -> Result<FitOutput> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::Data("cannot train on an empty dataset".into()));
    }
    dataset.check_groups_and_classes()?;
    let mut state = TrainState::init(dataset.dim(), cfg)?;
    let mut sampler = batch_iter(
        dataset,
        cfg.batch_size,
        cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
        cfg.batch_needs(),
    )?;
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut stop = StopReason::MaxEpochs;
    for epoch in 1..=cfg.max_epochs {
        let batches = sampler.next_epoch();
        let (mut obj, mut cons, mut total) = (0.0, 0.0, 0.0);
        for idx in &batches {
            let x = dataset.x.gather_rows(idx);
            let a: Vec<bool> = idx.iter().map(|&i| dataset.a[i]).collect();
            let y: Vec<bool> = idx.iter().map(|&i| dataset.y[i]).collect();
            let g: Vec<usize> = idx.iter().map(|&i| dataset.group[i]).collect();
            let tb = TrainBatch::new(&x, &a, &y, &g, dataset.n_groups)?;
            let st = train_step(&mut state, &tb, cfg)?;
            obj += st.objective;
            cons += st.constraint_value.unwrap_or(0.0);
            total += st.total;
        }
        let nb = batches.len() as f64;
        state.epoch = epoch;
        state.history.push(total / nb);
        rows.push(LogRow {
            epoch,
            objective: obj / nb,
            constraint_value: cfg.constraint.map(|_| cons / nb),
            lambda: state.lambda,
            total: total / nb,
            wall_ms: start.elapsed().as_millis() as u64,
        });
        if converged(&state.history, cfg.window, cfg.tol) {
            stop = StopReason::Converged;
            break;
        }
    }
    Ok(FitOutput {
        params: state.params,
        lambda: state.lambda,
        log: TrainLog { rows, stop },
    })
}
