//! Post-hoc fairness and accuracy metrics, the covering-number based
//! generalization bound, and the disparate-impact non-coverability witness.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{BatchNeeds, BatchSampler, Dataset};
use crate::error::{param, shape, Error, Result};
use crate::fairloss::{
    const_di, const_dp, const_dp_multi, const_eo, q_mean, Batch, ConstraintKind, EoVariant,
    MultiGroupBatch, DI_MEAN_FLOOR,
};
use crate::model::{forward, predict_hard, MlpParams};

/// Seed for the batch split used by soft metrics; fixed so audits repeat.
pub const AUDIT_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    /// Rows per group, `[unprotected, protected]`.
    pub group_counts: [usize; 2],
    /// Rows per class, `[negative, positive]`.
    pub class_counts: [usize; 2],
    pub n_batches: usize,
    pub accuracy: f64,
    pub dp_soft: f64,
    pub dp_hard: f64,
    /// Hard false positives over the whole group size, the normalization the
    /// training constraint uses. `[unprotected, protected]`.
    pub fpr_by_group: [f64; 2],
    /// Hard false negatives over the whole group size.
    pub fnr_by_group: [f64; 2],
    /// `P(ŷ=1 | y=0, a)` from hard predictions.
    pub fpr_cond_by_group: [f64; 2],
    /// `P(ŷ=0 | y=1, a)` from hard predictions.
    pub fnr_cond_by_group: [f64; 2],
    pub eo_sum_soft: f64,
    pub eo_max_soft: f64,
    pub di_soft: f64,
    pub di_ratio: f64,
    pub p_percent: f64,
    /// Whole-set Q-mean from probabilities.
    pub q_mean: f64,
    /// Whole-set Q-mean from hard predictions.
    pub q_mean_hard: f64,
    pub dp_multi_soft: Option<f64>,
}

impl MetricsReport {
    pub fn fpr_gap(&self) -> f64 {
        (self.fpr_by_group[1] - self.fpr_by_group[0]).abs()
    }

    pub fn fnr_gap(&self) -> f64 {
        (self.fnr_by_group[1] - self.fnr_by_group[0]).abs()
    }

    pub fn fpr_cond_gap(&self) -> f64 {
        (self.fpr_cond_by_group[1] - self.fpr_cond_by_group[0]).abs()
    }

    pub fn fnr_cond_gap(&self) -> f64 {
        (self.fnr_cond_by_group[1] - self.fnr_cond_by_group[0]).abs()
    }

    /// Soft value of the metric matching a training constraint.
    pub fn constraint_value(&self, kind: &ConstraintKind) -> f64 {
        match kind {
            ConstraintKind::Dp { .. } => self.dp_soft,
            ConstraintKind::EoSum { .. } => self.eo_sum_soft,
            ConstraintKind::EoMax { .. } => self.eo_max_soft,
            ConstraintKind::Di { .. } => self.p_percent,
            ConstraintKind::DpMulti { .. } => self.dp_multi_soft.unwrap_or(f64::NAN),
        }
    }
}

/// Runs the network over the dataset and scores its probabilities.
pub fn evaluate(params: &MlpParams, dataset: &Dataset, s: usize) -> Result<MetricsReport> {
    if params.dims().d != dataset.dim() {
        return Err(Error::Schema(format!(
            "model expects {} features, dataset has {}",
            params.dims().d,
            dataset.dim()
        )));
    }
    let p = forward(params, &dataset.x)?.p;
    evaluate_probs(&p, dataset, s)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn evaluate_probs(p: &[f64], dataset: &Dataset, s: usize) -> Result<MetricsReport> {
    let n = dataset.len();
    if p.len() != n {
        return Err(shape(format!("{} probabilities for {} rows", p.len(), n)));
    }
    let (group_counts, class_counts) = dataset.group_class_counts();
    if group_counts.contains(&0) {
        return Err(Error::Data(format!(
            "evaluation needs both groups, counts {group_counts:?}"
        )));
    }
    if s < 2 {
        return Err(param(format!("batch size must be >= 2, got {s}")));
    }
    let (a, y) = (&dataset.a, &dataset.y);
    let hard = predict_hard(p, 0.5);

    let mut correct = 0;
    let mut pos = [0usize; 2];
    let mut fp = [0usize; 2];
    let mut fnn = [0usize; 2];
    let mut neg_in = [0usize; 2];
    let mut pos_in = [0usize; 2];
    for i in 0..n {
        let g = a[i] as usize;
        correct += (hard[i] == y[i]) as usize;
        pos[g] += hard[i] as usize;
        if y[i] {
            pos_in[g] += 1;
            fnn[g] += (!hard[i]) as usize;
        } else {
            neg_in[g] += 1;
            fp[g] += hard[i] as usize;
        }
    }
    let rate = [
        ratio(pos[0], group_counts[0]),
        ratio(pos[1], group_counts[1]),
    ];
    let dp_hard = (rate[1] - rate[0]).abs();
    let m1 = rate[1].max(DI_MEAN_FLOOR);
    let m0 = rate[0].max(DI_MEAN_FLOOR);
    let di_ratio = (m1 / m0).min(m0 / m1);

    // Soft metrics: mean over one pass of stratified batches.
    let size = s.min(n);
    let audit_classes = !class_counts.contains(&0);
    let needs = BatchNeeds {
        groups: true,
        all_groups: false,
        classes: audit_classes,
    };
    let mut sampler = BatchSampler::new(
        a.clone(),
        y.clone(),
        dataset.group.clone(),
        dataset.n_groups,
        size,
        AUDIT_SEED,
        needs,
    )?;
    let batches = sampler.next_epoch();
    let multi = dataset.n_groups > 2;
    let (mut dp, mut eos, mut eom, mut di, mut dpm) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for idx in &batches {
        let bp: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
        let ba: Vec<bool> = idx.iter().map(|&i| a[i]).collect();
        let by: Vec<bool> = idx.iter().map(|&i| y[i]).collect();
        let b = Batch::new(&bp, &ba, &by)?;
        dp += const_dp(&b)?;
        eos += const_eo(&b, EoVariant::Sum)?;
        eom += const_eo(&b, EoVariant::Max)?;
        di += const_di(&b)?;
        if multi {
            let bg: Vec<usize> = idx.iter().map(|&i| dataset.group[i]).collect();
            // a batch may miss a small group; its parity term is skipped then
            if let Ok(v) = const_dp_multi(&MultiGroupBatch::new(&bp, &bg, dataset.n_groups)?) {
                dpm += v;
            }
        }
    }
    let nb = batches.len() as f64;

    let (q_soft, q_hard) = if audit_classes {
        let b = Batch::new(p, a, y)?;
        let hp: Vec<f64> = hard.iter().map(|&h| h as u8 as f64).collect();
        let hb = Batch::new(&hp, a, y)?;
        (q_mean(&b, false)?, q_mean(&hb, false)?)
    } else {
        (f64::NAN, f64::NAN)
    };

    Ok(MetricsReport {
        n,
        group_counts,
        class_counts,
        n_batches: batches.len(),
        accuracy: ratio(correct, n),
        dp_soft: dp / nb,
        dp_hard,
        fpr_by_group: [ratio(fp[0], group_counts[0]), ratio(fp[1], group_counts[1])],
        fnr_by_group: [
            ratio(fnn[0], group_counts[0]),
            ratio(fnn[1], group_counts[1]),
        ],
        fpr_cond_by_group: [ratio(fp[0], neg_in[0]), ratio(fp[1], neg_in[1])],
        fnr_cond_by_group: [ratio(fnn[0], pos_in[0]), ratio(fnn[1], pos_in[1])],
        eo_sum_soft: eos / nb,
        eo_max_soft: eom / nb,
        di_soft: di / nb,
        di_ratio,
        p_percent: 100.0 * di_ratio,
        q_mean: q_soft,
        q_mean_hard: q_hard,
        dp_multi_soft: multi.then_some(dpm / nb),
    })
}

/// Denominator applied to μ when forming the covering radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusDivisor {
    S,
    TwoS,
}

impl RadiusDivisor {
    /// `S` for parity, `2S` for the odds constraints.
    pub fn for_constraint(kind: &ConstraintKind) -> Self {
        match kind {
            ConstraintKind::EoSum { .. } | ConstraintKind::EoMax { .. } => RadiusDivisor::TwoS,
            _ => RadiusDivisor::S,
        }
    }

    fn factor(self) -> f64 {
        match self {
            RadiusDivisor::S => 1.0,
            RadiusDivisor::TwoS => 2.0,
        }
    }
}

pub const DEFAULT_C: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Hidden-layer count.
    pub r: u32,
    /// Total parameter count.
    pub d: u64,
    /// Per-layer ℓ₁ weight bound.
    pub w: f64,
    /// Output bound.
    pub l: f64,
    /// Batch size.
    pub s: u64,
    /// Batch count.
    pub b: f64,
    pub delta: f64,
    pub c: f64,
    pub radius_divisor: RadiusDivisor,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.d == 0 || self.s == 0 {
            return Err(param("R, D and S must be positive"));
        }
        for (name, v) in [("W", self.w), ("L", self.l), ("B", self.b), ("C", self.c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(param(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(param(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// Inputs read off a trained two-hidden-layer network: `W` is the
    /// largest per-layer ℓ₁ norm and outputs are probabilities (`L = 1`).
    pub fn for_model(
        params: &MlpParams,
        s: u64,
        b: f64,
        delta: f64,
        divisor: RadiusDivisor,
    ) -> Self {
        let w = params
            .weight_l1_per_layer()
            .into_iter()
            .fold(0.0_f64, f64::max);
        Self {
            r: 2,
            d: params.dims().param_count() as u64,
            w,
            l: 1.0,
            s,
            b,
            delta,
            c: DEFAULT_C,
            radius_divisor: divisor,
        }
    }
}

/// Ceiling that ignores float noise just above an integer.
fn ceil_tol(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Log of the covering-number bound, `D·ln⌈D·L·S·(2W)^{R+1}/μ⌉` (with the
/// numerator doubled for a `2S` radius divisor).
pub fn covering_number(inputs: &BoundInputs, mu: f64) -> Result<f64> {
    if mu.is_nan() || mu <= 0.0 {
        return Err(param(format!("mu must be > 0, got {mu}")));
    }
    let i = inputs;
    let num = i.d as f64
        * i.l
        * i.s as f64
        * i.radius_divisor.factor()
        * (2.0 * i.w).powi(i.r as i32 + 1);
    let count = ceil_tol(num / mu).max(1.0);
    Ok(i.d as f64 * count.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaValues {
    /// At `μ = 1/√B`.
    pub closed: f64,
    /// Minimum over the log-spaced grid (which also contains `1/√B`).
    pub grid: f64,
    pub mu_grid: f64,
}

const GRID_POINTS: usize = 601;

fn omega_at(inputs: &BoundInputs, mu: f64) -> Result<f64> {
    Ok(mu + (2.0 * covering_number(inputs, mu)? / inputs.b).sqrt())
}

pub fn omega(inputs: &BoundInputs) -> Result<OmegaValues> {
    inputs.validate()?;
    let mu_c = 1.0 / inputs.b.sqrt();
    let closed = omega_at(inputs, mu_c)?;
    let (mut grid, mut mu_grid) = (closed, mu_c);
    for k in 0..GRID_POINTS {
        let mu = 10f64.powf(-6.0 + 6.0 * k as f64 / (GRID_POINTS - 1) as f64);
        let v = omega_at(inputs, mu)?;
        if v < grid {
            grid = v;
            mu_grid = mu;
        }
    }
    Ok(OmegaValues {
        closed,
        grid,
        mu_grid,
    })
}

/// `empirical_mean + 2Ω + C·√(ln(1/δ)/B)` using the closed-form Ω.
pub fn full_bound(empirical_mean: f64, inputs: &BoundInputs) -> Result<f64> {
    let om = omega(inputs)?;
    Ok(empirical_mean + 2.0 * om.closed + inputs.c * ((1.0 / inputs.delta).ln() / inputs.b).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub b: f64,
    pub omega_closed: f64,
    pub omega_grid: f64,
    pub full_bound: f64,
}

pub fn bound_sweep(inputs: &BoundInputs, bs: &[f64], empirical_mean: f64) -> Result<Vec<BoundRow>> {
    bs.iter()
        .map(|&b| {
            let i = BoundInputs { b, ..*inputs };
            let om = omega(&i)?;
            Ok(BoundRow {
                b,
                omega_closed: om.closed,
                omega_grid: om.grid,
                full_bound: full_bound(empirical_mean, &i)?,
            })
        })
        .collect()
}

pub fn bound_csv(rows: &[BoundRow]) -> String {
    let mut s = String::from("B,omega_closed,omega_grid,full_bound\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.b, r.omega_closed, r.omega_grid, r.full_bound
        );
    }
    s
}

/// Two functions within sup-distance `mu` whose DI values differ by 0.5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexamplePair {
    pub a: Vec<bool>,
    pub h: Vec<f64>,
    pub h_hat: Vec<f64>,
    pub mu: f64,
    pub sup_distance: f64,
    pub const_h: f64,
    pub const_h_hat: f64,
    pub gap: f64,
    /// Gap under the training loss, whose group means are floored at
    /// `DI_MEAN_FLOOR`. It collapses to 0 once both means sit below the floor.
    pub gap_floored: f64,
}

fn sup_distance(h: &[f64], g: &[f64]) -> f64 {
    h.iter()
        .zip(g)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max)
}

/// `−min(r, 1/r)` on the raw group means, without the training floor.
fn raw_di(p: &[f64], a: &[bool]) -> f64 {
    let mean = |grp: bool| {
        let v: Vec<f64> = p
            .iter()
            .zip(a)
            .filter(|(_, &g)| g == grp)
            .map(|(x, _)| *x)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let r = mean(true) / mean(false);
    -r.min(1.0 / r)
}

fn pair(a: Vec<bool>, h: Vec<f64>, h_hat: Vec<f64>, mu: f64) -> Result<CounterexamplePair> {
    let y = vec![false; a.len()];
    let floored_h = const_di(&Batch::new(&h, &a, &y)?)?;
    let floored_h_hat = const_di(&Batch::new(&h_hat, &a, &y)?)?;
    let const_h = raw_di(&h, &a);
    let const_h_hat = raw_di(&h_hat, &a);
    Ok(CounterexamplePair {
        sup_distance: sup_distance(&h, &h_hat),
        gap: (const_h - const_h_hat).abs(),
        gap_floored: (floored_h - floored_h_hat).abs(),
        a,
        h,
        h_hat,
        mu,
        const_h,
        const_h_hat,
    })
}

/// Both group means equal `t` under `h`; `ĥ` doubles the unprotected one.
pub fn di_counterexample(mu: f64) -> Result<CounterexamplePair> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(param(format!("mu must be > 0, got {mu}")));
    }
    let t = mu.min(0.25);
    pair(vec![true, false], vec![t, t], vec![t, 2.0 * t], mu)
}

/// The hundred-row construction: protected rows score 1 under both
/// functions, unprotected rows score `δ` under `h` and `μ` under `ĥ`.
/// Requires `0 < δ < 1` and `|μ − δ| ≤ μ`.
pub fn hundred_row_demo(mu: f64, delta: f64) -> Result<CounterexamplePair> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(param(format!("mu must lie in (0, 1], got {mu}")));
    }
    if !(delta > 0.0 && delta < 1.0) || (mu - delta).abs() > mu {
        return Err(param(format!("delta {delta} incompatible with mu {mu}")));
    }
    let a: Vec<bool> = (0..100).map(|i| i < 50).collect();
    let h = a.iter().map(|&g| if g { 1.0 } else { delta }).collect();
    let h_hat = a.iter().map(|&g| if g { 1.0 } else { mu }).collect();
    pair(a, h, h_hat, mu)
}
