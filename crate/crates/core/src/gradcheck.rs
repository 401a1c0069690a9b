//! Central finite-difference checks of the composite training gradient.

use crate::error::Result;
use crate::fairloss::ConstraintKind;
use crate::lagrange::{loss_and_grad, TrainBatch, TrainConfig};
use crate::model::{forward, MlpParams, P_MAX, P_MIN};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// Largest `|analytic − numeric| / max(|analytic|, |numeric|, floor)`.
    pub max_rel_err: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Compares the analytic gradient of `L_NN` at fixed λ with central
/// differences of step `h` over every parameter.
pub fn check(
    params: &MlpParams,
    lambda: f64,
    batch: &TrainBatch,
    cfg: &TrainConfig,
    h: f64,
    floor: f64,
) -> Result<GradCheck> {
    let (_, grad) = loss_and_grad(params, lambda, batch, cfg)?;
    let flat = params.to_flat();
    let mut probe = params.clone();
    let mut worst = GradCheck {
        max_rel_err: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
    };
    let mut shifted = flat.clone();
    for j in 0..flat.len() {
        shifted[j] = flat[j] + h;
        probe.set_flat(&shifted)?;
        let up = loss_and_grad(&probe, lambda, batch, cfg)?.0.total;
        shifted[j] = flat[j] - h;
        probe.set_flat(&shifted)?;
        let down = loss_and_grad(&probe, lambda, batch, cfg)?.0.total;
        shifted[j] = flat[j];
        let numeric = (up - down) / (2.0 * h);
        let rel = (grad[j] - numeric).abs() / grad[j].abs().max(numeric.abs()).max(floor);
        if rel > worst.max_rel_err {
            worst = GradCheck {
                max_rel_err: rel,
                worst_index: j,
                analytic: grad[j],
                numeric,
            };
        }
    }
    Ok(worst)
}

/// Distance from the nearest point where the loss is not differentiable:
/// ReLU pre-activations at zero, probabilities at the clamp, and the
/// arguments of `|·|`, `max` and `min` inside the active constraint.
pub fn kink_margin(params: &MlpParams, batch: &TrainBatch, cfg: &TrainConfig) -> Result<f64> {
    let trace = forward(params, batch.x)?;
    let mut m = f64::INFINITY;
    for z in trace.z1.as_slice().iter().chain(trace.z2.as_slice()) {
        m = m.min(z.abs());
    }
    for &p in &trace.p_raw {
        m = m.min((p - P_MIN).abs()).min((P_MAX - p).abs());
    }
    let p = &trace.p;
    let (a, y) = (batch.a, batch.y);
    let mean = |f: &dyn Fn(usize) -> f64, grp: bool| {
        let idx: Vec<usize> = (0..p.len()).filter(|&i| a[i] == grp).collect();
        idx.iter().map(|&i| f(i)).sum::<f64>() / idx.len() as f64
    };
    let fp = |i: usize| if y[i] { 0.0 } else { p[i] };
    let fnn = |i: usize| if y[i] { 1.0 - p[i] } else { 0.0 };
    let fpr = mean(&fp, true) - mean(&fp, false);
    let fnr = mean(&fnn, true) - mean(&fnn, false);
    match cfg.constraint {
        Some(ConstraintKind::Dp { .. }) => {
            m = m.min((mean(&|i| p[i], true) - mean(&|i| p[i], false)).abs());
        }
        Some(ConstraintKind::EoSum { .. }) => m = m.min(fpr.abs()).min(fnr.abs()),
        Some(ConstraintKind::EoMax { .. }) => {
            m = m
                .min(fpr.abs())
                .min(fnr.abs())
                .min((fpr.abs() - fnr.abs()).abs());
        }
        Some(ConstraintKind::Di { .. }) => {
            let r = mean(&|i| p[i], true) / mean(&|i| p[i], false);
            m = m.min((r - 1.0).abs());
        }
        Some(ConstraintKind::DpMulti { .. }) => {
            for j in 0..batch.n_groups {
                let (mut si, mut ni, mut so, mut no) = (0.0, 0.0, 0.0, 0.0);
                for (i, &g) in batch.group.iter().enumerate() {
                    if g == j {
                        si += p[i];
                        ni += 1.0;
                    } else {
                        so += p[i];
                        no += 1.0;
                    }
                }
                m = m.min((si / ni - so / no).abs());
            }
        }
        None => {}
    }
    Ok(m)
}
