//! Batch-level fairness constraints and objectives, with their exact
//! (sub)gradients with respect to the probability vector `p`.
//!
//! Every quantity here is defined on a whole batch `(p, a, y)`: none of them
//! decomposes into a per-example sum, which is why training has to work on
//! stratified mini-batches. Group 1 (`a = true`) is the protected group.
//!
//! Subgradient conventions: at an absolute-value kink (inner expression
//! exactly zero) the zero subgradient is used; at a `min`/`max` tie the first
//! argument's branch is taken.

use serde::{Deserialize, Serialize};

use crate::error::{degenerate, param, shape, Result};

/// Floor applied to group means inside the disparate-impact ratio.
pub const DI_MEAN_FLOOR: f64 = 1e-7;

/// One mini-batch of predictions with its sensitive attribute and label.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub p: &'a [f64],
    pub a: &'a [bool],
    pub y: &'a [bool],
}

impl<'a> Batch<'a> {
    pub fn new(p: &'a [f64], a: &'a [bool], y: &'a [bool]) -> Result<Self> {
        if p.len() != a.len() || p.len() != y.len() {
            return Err(shape(format!(
                "batch lengths differ: p {}, a {}, y {}",
                p.len(),
                a.len(),
                y.len()
            )));
        }
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(param("probabilities must lie in [0, 1]"));
        }
        Ok(Self { p, a, y })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Sizes of the protected and unprotected groups; errors if either is empty.
    fn group_sizes(&self) -> Result<(f64, f64)> {
        let n1 = self.a.iter().filter(|&&a| a).count();
        let n0 = self.a.len() - n1;
        if n1 == 0 || n0 == 0 {
            return Err(degenerate(format!(
                "both groups must be present (protected {n1}, unprotected {n0})"
            )));
        }
        Ok((n1 as f64, n0 as f64))
    }

    fn class_sizes(&self) -> Result<(f64, f64)> {
        let pos = self.y.iter().filter(|&&y| y).count();
        let neg = self.y.len() - pos;
        if pos == 0 || neg == 0 {
            return Err(degenerate(format!(
                "both classes must be present (positive {pos}, negative {neg})"
            )));
        }
        Ok((pos as f64, neg as f64))
    }

    /// Per-example weight `a_i/Σa − (1−a_i)/Σ(1−a)`.
    fn group_contrast(&self) -> Result<Vec<f64>> {
        let (n1, n0) = self.group_sizes()?;
        Ok(self
            .a
            .iter()
            .map(|&a| if a { 1.0 / n1 } else { -1.0 / n0 })
            .collect())
    }
}

/// A batch whose sensitive attribute takes `m` values.
#[derive(Debug, Clone, Copy)]
pub struct MultiGroupBatch<'a> {
    pub p: &'a [f64],
    pub group: &'a [usize],
    pub m: usize,
}

impl<'a> MultiGroupBatch<'a> {
    pub fn new(p: &'a [f64], group: &'a [usize], m: usize) -> Result<Self> {
        if p.len() != group.len() {
            return Err(shape(format!(
                "batch lengths differ: p {}, group {}",
                p.len(),
                group.len()
            )));
        }
        if m < 2 {
            return Err(param(format!("need at least two groups, got {m}")));
        }
        if let Some(&g) = group.iter().find(|&&g| g >= m) {
            return Err(param(format!("group index {g} out of range for m = {m}")));
        }
        Ok(Self { p, group, m })
    }

    fn counts(&self) -> Result<Vec<f64>> {
        let mut c = vec![0.0; self.m];
        for &g in self.group {
            c[g] += 1.0;
        }
        if let Some(j) = c.iter().position(|&n| n == 0.0) {
            return Err(degenerate(format!("group {j} is absent from the batch")));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EoVariant {
    Sum,
    Max,
}

/// A fairness constraint together with its slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConstraintKind {
    Dp { epsilon: f64 },
    EoSum { epsilon: f64 },
    EoMax { epsilon: f64 },
    Di { p_percent: f64 },
    DpMulti { epsilon: f64 },
}

impl ConstraintKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ConstraintKind::Di { p_percent } => {
                if !(p_percent > 0.0 && p_percent <= 100.0) {
                    return Err(param(format!(
                        "p_percent must be in (0, 100], got {p_percent}"
                    )));
                }
            }
            ConstraintKind::Dp { epsilon }
            | ConstraintKind::EoSum { epsilon }
            | ConstraintKind::EoMax { epsilon }
            | ConstraintKind::DpMulti { epsilon } => {
                if !(epsilon.is_finite() && epsilon >= 0.0) {
                    return Err(param(format!("epsilon must be >= 0, got {epsilon}")));
                }
            }
        }
        Ok(())
    }

    /// Slack subtracted from the batch average; `−p/100` for disparate impact.
    pub fn slack(&self) -> f64 {
        match *self {
            ConstraintKind::Di { p_percent } => -p_percent / 100.0,
            ConstraintKind::Dp { epsilon }
            | ConstraintKind::EoSum { epsilon }
            | ConstraintKind::EoMax { epsilon }
            | ConstraintKind::DpMulti { epsilon } => epsilon,
        }
    }

    /// The tolerance value as written in configs (ε, or p for DI).
    pub fn tolerance(&self) -> f64 {
        match *self {
            ConstraintKind::Di { p_percent } => p_percent,
            ConstraintKind::Dp { epsilon }
            | ConstraintKind::EoSum { epsilon }
            | ConstraintKind::EoMax { epsilon }
            | ConstraintKind::DpMulti { epsilon } => epsilon,
        }
    }

    /// Same kind with a different tolerance.
    pub fn with_tolerance(&self, t: f64) -> Self {
        match self {
            ConstraintKind::Dp { .. } => ConstraintKind::Dp { epsilon: t },
            ConstraintKind::EoSum { .. } => ConstraintKind::EoSum { epsilon: t },
            ConstraintKind::EoMax { .. } => ConstraintKind::EoMax { epsilon: t },
            ConstraintKind::Di { .. } => ConstraintKind::Di { p_percent: t },
            ConstraintKind::DpMulti { .. } => ConstraintKind::DpMulti { epsilon: t },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ConstraintKind::Dp { .. } => "dp",
            ConstraintKind::EoSum { .. } => "eo-sum",
            ConstraintKind::EoMax { .. } => "eo-max",
            ConstraintKind::Di { .. } => "di",
            ConstraintKind::DpMulti { .. } => "dp-multi",
        }
    }

    /// Whether the constraint needs per-example group indices rather than `a`.
    pub fn is_multi_group(&self) -> bool {
        matches!(self, ConstraintKind::DpMulti { .. })
    }
}

/// Quantities whose gradient with respect to `p` can be requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Dp,
    EoSum,
    EoMax,
    Di,
    CrossEntropy,
    QMean { class_factor: bool },
}

fn signum0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn weighted_sum(p: &[f64], w: &[f64]) -> f64 {
    p.iter().zip(w).map(|(p, w)| p * w).sum()
}

/// Signed difference of group means of `p`.
fn dp_inner(b: &Batch) -> Result<(f64, Vec<f64>)> {
    let w = b.group_contrast()?;
    Ok((weighted_sum(b.p, &w), w))
}

pub fn const_dp(b: &Batch) -> Result<f64> {
    Ok(dp_inner(b)?.0.abs())
}

/// Signed false-positive contrast `Σp(1−y)a/Σa − Σp(1−y)(1−a)/Σ(1−a)` and its
/// gradient in `p`. Denominators are the full group sizes.
fn fpr_inner(b: &Batch) -> Result<(f64, Vec<f64>)> {
    let w = b.group_contrast()?;
    let g: Vec<f64> = w
        .iter()
        .zip(b.y)
        .map(|(&w, &y)| if y { 0.0 } else { w })
        .collect();
    Ok((weighted_sum(b.p, &g), g))
}

/// Signed false-negative contrast `Σ(1−p)ya/Σa − Σ(1−p)y(1−a)/Σ(1−a)`.
fn fnr_inner(b: &Batch) -> Result<(f64, Vec<f64>)> {
    let w = b.group_contrast()?;
    let mut value = 0.0;
    let mut g = Vec::with_capacity(w.len());
    for ((&w, &y), &p) in w.iter().zip(b.y).zip(b.p) {
        if y {
            value += (1.0 - p) * w;
            g.push(-w);
        } else {
            g.push(0.0);
        }
    }
    Ok((value, g))
}

pub fn fpr_gap(b: &Batch) -> Result<f64> {
    Ok(fpr_inner(b)?.0.abs())
}

pub fn fnr_gap(b: &Batch) -> Result<f64> {
    Ok(fnr_inner(b)?.0.abs())
}

pub fn const_eo(b: &Batch, variant: EoVariant) -> Result<f64> {
    let fpr = fpr_gap(b)?;
    let fnr = fnr_gap(b)?;
    Ok(match variant {
        EoVariant::Sum => fpr + fnr,
        EoVariant::Max => fpr.max(fnr),
    })
}

/// Group means of `p` floored at `DI_MEAN_FLOOR`, with flags telling whether
/// the floor was active.
fn di_means(b: &Batch) -> Result<(f64, f64, bool, bool)> {
    let (n1, n0) = b.group_sizes()?;
    let (mut s1, mut s0) = (0.0, 0.0);
    for (&p, &a) in b.p.iter().zip(b.a) {
        if a {
            s1 += p;
        } else {
            s0 += p;
        }
    }
    let (m1, m0) = (s1 / n1, s0 / n0);
    Ok((
        m1.max(DI_MEAN_FLOOR),
        m0.max(DI_MEAN_FLOOR),
        m1 < DI_MEAN_FLOOR,
        m0 < DI_MEAN_FLOOR,
    ))
}

/// `−min(r, 1/r)` with `r` the ratio of protected to unprotected mean `p`.
pub fn const_di(b: &Batch) -> Result<f64> {
    let (m1, m0, _, _) = di_means(b)?;
    let r = m1 / m0;
    Ok(-r.min(1.0 / r))
}

fn const_di_grad(b: &Batch) -> Result<Vec<f64>> {
    let (n1, n0) = b.group_sizes()?;
    let (m1, m0, f1, f0) = di_means(b)?;
    let dm1 = if f1 { 0.0 } else { 1.0 / n1 };
    let dm0 = if f0 { 0.0 } else { 1.0 / n0 };
    let r = m1 / m0;
    // first branch of min(r, 1/r) on ties
    let (num, den, dnum, dden, num_is_protected) = if r <= 1.0 / r {
        (m1, m0, dm1, dm0, true)
    } else {
        (m0, m1, dm0, dm1, false)
    };
    Ok(b.a
        .iter()
        .map(|&a| {
            let in_num = a == num_is_protected;
            // d(num/den) = dnum/den − num·dden/den²
            let d = if in_num {
                dnum / den
            } else {
                -num * dden / (den * den)
            };
            -d
        })
        .collect())
}

pub fn const_dp_multi(b: &MultiGroupBatch) -> Result<f64> {
    let counts = b.counts()?;
    let n = b.p.len() as f64;
    let total: f64 = b.p.iter().sum();
    let mut sums = vec![0.0; b.m];
    for (&p, &g) in b.p.iter().zip(b.group) {
        sums[g] += p;
    }
    Ok((0..b.m)
        .map(|j| one_vs_rest(sums[j], counts[j], total, n).abs())
        .sum())
}

/// Mean of group `j` minus mean of its complement.
fn one_vs_rest(sum_j: f64, n_j: f64, total: f64, n: f64) -> f64 {
    sum_j / n_j - (total - sum_j) / (n - n_j)
}

/// Subgradient of `const_dp_multi` with respect to `p`.
pub fn const_dp_multi_grad(b: &MultiGroupBatch) -> Result<Vec<f64>> {
    let counts = b.counts()?;
    let n = b.p.len() as f64;
    let total: f64 = b.p.iter().sum();
    let mut sums = vec![0.0; b.m];
    for (&p, &g) in b.p.iter().zip(b.group) {
        sums[g] += p;
    }
    let signs: Vec<f64> = (0..b.m)
        .map(|j| signum0(one_vs_rest(sums[j], counts[j], total, n)))
        .collect();
    // ∂/∂p_i of term j is sign_j/n_j when i ∈ j, −sign_j/(n−n_j) otherwise.
    let rest: f64 = (0..b.m).map(|j| signs[j] / (n - counts[j])).sum();
    Ok(b.group
        .iter()
        .map(|&g| signs[g] / counts[g] + signs[g] / (n - counts[g]) - rest)
        .collect())
}

/// Averaged constraint over `B` batch values, minus its slack.
pub fn constraint_loss(values: &[f64], kind: ConstraintKind) -> Result<f64> {
    if values.is_empty() {
        return Err(param("constraint loss needs at least one batch value"));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok(mean - kind.slack())
}

/// Mean binary cross-entropy.
pub fn cross_entropy(p: &[f64], y: &[bool]) -> Result<f64> {
    if p.len() != y.len() {
        return Err(shape(format!(
            "p has {} entries, y has {}",
            p.len(),
            y.len()
        )));
    }
    if p.is_empty() {
        return Err(param("cross-entropy of an empty batch"));
    }
    let total: f64 = p
        .iter()
        .zip(y)
        .map(|(&p, &y)| if y { -p.ln() } else { -(1.0 - p).ln() })
        .sum();
    Ok(total / p.len() as f64)
}

fn q_terms(b: &Batch) -> Result<(f64, f64, f64, f64)> {
    let (npos, nneg) = b.class_sizes()?;
    let (mut tp, mut tn) = (0.0, 0.0);
    for (&p, &y) in b.p.iter().zip(b.y) {
        if y {
            tp += p;
        } else {
            tn += 1.0 - p;
        }
    }
    Ok((1.0 - tp / npos, 1.0 - tn / nneg, npos, nneg))
}

/// Root of the summed squared per-class soft error rates. With
/// `class_factor` the sum is halved (mean over the two classes).
pub fn q_mean(b: &Batch, class_factor: bool) -> Result<f64> {
    let (u, v, _, _) = q_terms(b)?;
    let c = if class_factor { 0.5 } else { 1.0 };
    Ok((c * (u * u + v * v)).sqrt())
}

/// Exact (sub)gradient of the requested quantity with respect to `p`.
pub fn grad_wrt_p(kind: LossKind, b: &Batch) -> Result<Vec<f64>> {
    match kind {
        LossKind::Dp => {
            let (d, w) = dp_inner(b)?;
            let s = signum0(d);
            Ok(w.into_iter().map(|w| s * w).collect())
        }
        LossKind::EoSum => {
            let (f, gf) = fpr_inner(b)?;
            let (g, gg) = fnr_inner(b)?;
            let (sf, sg) = (signum0(f), signum0(g));
            Ok(gf.iter().zip(&gg).map(|(a, c)| sf * a + sg * c).collect())
        }
        LossKind::EoMax => {
            let (f, gf) = fpr_inner(b)?;
            let (g, gg) = fnr_inner(b)?;
            if f.abs() >= g.abs() {
                let s = signum0(f);
                Ok(gf.into_iter().map(|v| s * v).collect())
            } else {
                let s = signum0(g);
                Ok(gg.into_iter().map(|v| s * v).collect())
            }
        }
        LossKind::Di => const_di_grad(b),
        LossKind::CrossEntropy => {
            if b.is_empty() {
                return Err(param("cross-entropy of an empty batch"));
            }
            let n = b.len() as f64;
            Ok(b.p
                .iter()
                .zip(b.y)
                .map(|(&p, &y)| {
                    if y {
                        -1.0 / (p * n)
                    } else {
                        1.0 / ((1.0 - p) * n)
                    }
                })
                .collect())
        }
        LossKind::QMean { class_factor } => {
            let (u, v, npos, nneg) = q_terms(b)?;
            let c = if class_factor { 0.5 } else { 1.0 };
            let q = (c * (u * u + v * v)).sqrt();
            if q == 0.0 {
                return Ok(vec![0.0; b.len()]);
            }
            // ∂u/∂p_i = −y_i/npos, ∂v/∂p_i = (1−y_i)/nneg
            Ok(b.y
                .iter()
                .map(|&y| {
                    if y {
                        -c * u / (npos * q)
                    } else {
                        c * v / (nneg * q)
                    }
                })
                .collect())
        }
    }
}

/// Value of the constraint `kind` on a binary-group batch.
pub fn constraint_value(kind: &ConstraintKind, b: &Batch) -> Result<f64> {
    match kind {
        ConstraintKind::Dp { .. } => const_dp(b),
        ConstraintKind::EoSum { .. } => const_eo(b, EoVariant::Sum),
        ConstraintKind::EoMax { .. } => const_eo(b, EoVariant::Max),
        ConstraintKind::Di { .. } => const_di(b),
        ConstraintKind::DpMulti { .. } => Err(param(
            "multi-group parity needs group indices, use const_dp_multi",
        )),
    }
}

/// Gradient counterpart of [`constraint_value`].
pub fn constraint_grad(kind: &ConstraintKind, b: &Batch) -> Result<Vec<f64>> {
    let lk = match kind {
        ConstraintKind::Dp { .. } => LossKind::Dp,
        ConstraintKind::EoSum { .. } => LossKind::EoSum,
        ConstraintKind::EoMax { .. } => LossKind::EoMax,
        ConstraintKind::Di { .. } => LossKind::Di,
        ConstraintKind::DpMulti { .. } => {
            return Err(param(
                "multi-group parity needs group indices, use const_dp_multi_grad",
            ))
        }
    };
    grad_wrt_p(lk, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    const A: [bool; 4] = [true, true, false, false];

    #[test]
    fn dp_hand_value() {
        let p = [0.8, 0.6, 0.2, 0.4];
        let y = [true; 4];
        let b = Batch::new(&p, &A, &y).unwrap();
        assert!((const_dp(&b).unwrap() - 0.4).abs() <= 1e-12);
    }

    #[test]
    fn dp_constant_p_is_zero_with_zero_subgradient() {
        let p = [0.3; 4];
        let y = [true, false, true, false];
        let b = Batch::new(&p, &A, &y).unwrap();
        assert_eq!(const_dp(&b).unwrap(), 0.0);
        assert!(grad_wrt_p(LossKind::Dp, &b)
            .unwrap()
            .iter()
            .all(|&g| g == 0.0));
    }

    #[test]
    fn dp_symbolic_gradient() {
        let p = [0.8, 0.6, 0.2, 0.4];
        let y = [true; 4];
        let b = Batch::new(&p, &A, &y).unwrap();
        let g = grad_wrt_p(LossKind::Dp, &b).unwrap();
        assert_eq!(g, vec![0.5, 0.5, -0.5, -0.5]);
    }

    #[test]
    fn single_group_is_degenerate() {
        let p = [0.1, 0.2];
        let a = [true, true];
        let y = [true, false];
        let b = Batch::new(&p, &a, &y).unwrap();
        assert!(matches!(const_dp(&b), Err(Error::DegenerateBatch(_))));
        assert!(matches!(const_di(&b), Err(Error::DegenerateBatch(_))));
        assert!(matches!(
            const_eo(&b, EoVariant::Sum),
            Err(Error::DegenerateBatch(_))
        ));
    }

    #[test]
    fn length_mismatch_is_shape_error() {
        assert!(matches!(
            Batch::new(&[0.1, 0.2], &[true], &[true, false]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn eo_hand_values() {
        let p = [0.9, 0.8, 0.1, 0.6];
        let y = [false, true, false, true];
        let b = Batch::new(&p, &A, &y).unwrap();
        assert!((fpr_gap(&b).unwrap() - 0.4).abs() <= 1e-12);
        assert!((fnr_gap(&b).unwrap() - 0.1).abs() <= 1e-12);
        assert!((const_eo(&b, EoVariant::Sum).unwrap() - 0.5).abs() <= 1e-12);
        assert!((const_eo(&b, EoVariant::Max).unwrap() - 0.4).abs() <= 1e-12);
    }

    #[test]
    fn all_positive_labels_have_no_fpr() {
        let p = [0.9, 0.2, 0.4, 0.7];
        let y = [true; 4];
        let b = Batch::new(&p, &A, &y).unwrap();
        assert_eq!(fpr_gap(&b).unwrap(), 0.0);
    }

    #[test]
    fn di_hand_value_and_equal_means() {
        let p = [0.8, 0.6, 0.2, 0.4];
        let y = [true; 4];
        let b = Batch::new(&p, &A, &y).unwrap();
        assert!((const_di(&b).unwrap() + 3.0 / 7.0).abs() <= 1e-12);
        let q = [0.5, 0.3, 0.4, 0.4];
        let b = Batch::new(&q, &A, &y).unwrap();
        assert!((const_di(&b).unwrap() + 1.0).abs() <= 1e-12);
    }

    #[test]
    fn dp_multi_two_groups_doubles_dp() {
        let p = [0.8, 0.6, 0.2, 0.4];
        let g = [1, 1, 0, 0];
        let b = MultiGroupBatch::new(&p, &g, 2).unwrap();
        assert!((const_dp_multi(&b).unwrap() - 0.8).abs() <= 1e-12);
    }

    #[test]
    fn dp_multi_equal_means_and_missing_group() {
        let p = [0.5; 3];
        let g = [0, 1, 2];
        let b = MultiGroupBatch::new(&p, &g, 3).unwrap();
        assert_eq!(const_dp_multi(&b).unwrap(), 0.0);
        let g = [0, 0, 2];
        let b = MultiGroupBatch::new(&p, &g, 3).unwrap();
        assert!(matches!(const_dp_multi(&b), Err(Error::DegenerateBatch(_))));
    }

    #[test]
    fn constraint_loss_examples() {
        let dp = ConstraintKind::Dp { epsilon: 0.05 };
        assert!((constraint_loss(&[0.4, 0.2], dp).unwrap() - 0.25).abs() <= 1e-12);
        let di = ConstraintKind::Di { p_percent: 80.0 };
        assert!((constraint_loss(&[-0.9], di).unwrap() + 0.1).abs() <= 1e-12);
        assert_eq!(constraint_loss(&[0.05], dp).unwrap(), 0.0);
        assert!(matches!(constraint_loss(&[], dp), Err(Error::Parameter(_))));
    }

    #[test]
    fn cross_entropy_values() {
        let ce = cross_entropy(&[0.5, 0.5], &[true, false]).unwrap();
        assert!((ce - std::f64::consts::LN_2).abs() <= 1e-12);
        let ce = cross_entropy(&[1.0 - 1e-7], &[true]).unwrap();
        assert!((ce - 1e-7).abs() <= 1e-12);
        let ce = cross_entropy(&[1e-7], &[true]).unwrap();
        assert!((ce - 16.118_095_650_958_32).abs() <= 1e-9);
        assert!(matches!(
            cross_entropy(&[0.5], &[true, false]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn q_mean_values() {
        let p = [0.9, 0.7, 0.2, 0.4];
        let y = [true, true, false, false];
        let b = Batch::new(&p, &A, &y).unwrap();
        assert!((q_mean(&b, false).unwrap() - 0.13f64.sqrt()).abs() <= 1e-12);
        assert!((q_mean(&b, true).unwrap() - 0.065f64.sqrt()).abs() <= 1e-12);
        let perfect = [1.0 - 1e-7, 1.0 - 1e-7, 1e-7, 1e-7];
        let b = Batch::new(&perfect, &A, &y).unwrap();
        assert!(q_mean(&b, false).unwrap() < 1e-6);
    }

    #[test]
    fn q_mean_single_class_is_degenerate() {
        let p = [0.9, 0.7];
        let b = Batch::new(&p, &[true, false], &[true, true]).unwrap();
        assert!(matches!(q_mean(&b, false), Err(Error::DegenerateBatch(_))));
    }

    #[test]
    fn constraint_kind_serde_shape() {
        let k: ConstraintKind =
            serde_json::from_str(r#"{"kind":"eo-sum","epsilon":0.05}"#).unwrap();
        assert_eq!(k, ConstraintKind::EoSum { epsilon: 0.05 });
        assert!(ConstraintKind::Di { p_percent: 0.0 }.validate().is_err());
        assert!(ConstraintKind::Dp { epsilon: -0.1 }.validate().is_err());
    }
}
