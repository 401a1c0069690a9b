#[allow(dead_code)]
mod common;

use fairlag::fairloss::{grad_wrt_p, Batch, ConstraintKind, LossKind};
use fairlag::gradcheck::{check, kink_margin};
use fairlag::lagrange::{Objective, TrainBatch, TrainConfig};
use fairlag::model::{Dims, MlpParams};
use fairlag::numcore::{Matrix, Rng};

const STEP: f64 = 1e-5;
const FLOOR: f64 = 1e-6;
const MARGIN: f64 = 1e-4;

fn kinds() -> Vec<Option<ConstraintKind>> {
    vec![
        None,
        Some(ConstraintKind::Dp { epsilon: 0.05 }),
        Some(ConstraintKind::EoSum { epsilon: 0.05 }),
        Some(ConstraintKind::EoMax { epsilon: 0.05 }),
        Some(ConstraintKind::Di { p_percent: 80.0 }),
        Some(ConstraintKind::DpMulti { epsilon: 0.05 }),
    ]
}

struct Instance {
    params: MlpParams,
    x: Matrix,
    a: Vec<bool>,
    y: Vec<bool>,
    g: Vec<usize>,
    lambda: f64,
}

fn instance(rng: &mut Rng, d: usize) -> Instance {
    let m = 3;
    let (a, y, g) = loop {
        let s = 4 + rng.below(29);
        let (_, a, y) = common::random_batch(rng, s);
        let g: Vec<usize> = a
            .iter()
            .map(|&v| if v { 0 } else { 1 + rng.below(m - 1) })
            .collect();
        if (0..m).all(|j| g.contains(&j)) {
            break (a, y, g);
        }
    };
    let s = a.len();
    let x = Matrix::from_vec(s, d, rng.normal(0.0, 1.0, s * d).unwrap()).unwrap();
    let params = MlpParams::init(Dims { d, h1: 6, h2: 5 }, rng).unwrap();
    Instance {
        params,
        x,
        a,
        y,
        g,
        lambda: 3.0 * rng.uniform(),
    }
}

#[test]
fn composite_gradient_matches_central_differences() {
    let mut rng = Rng::new(11);
    for constraint in kinds() {
        for (objective, halve) in [
            (Objective::Ce, false),
            (Objective::Qmean, false),
            (Objective::Qmean, true),
        ] {
            let cfg = TrainConfig {
                constraint,
                objective,
                qmean_class_factor: halve,
                ..Default::default()
            };
            let mut done = 0;
            let mut tries = 0;
            while done < 20 {
                tries += 1;
                assert!(tries < 2000, "could not draw kink-free instances");
                let inst = instance(&mut rng, 3);
                let groups = if constraint.is_some_and(|c| c.is_multi_group()) {
                    3
                } else {
                    2
                };
                let g: Vec<usize> = if groups == 3 {
                    inst.g.clone()
                } else {
                    inst.a.iter().map(|&v| v as usize).collect()
                };
                let tb = TrainBatch::new(&inst.x, &inst.a, &inst.y, &g, groups).unwrap();
                if kink_margin(&inst.params, &tb, &cfg).unwrap() < MARGIN {
                    continue;
                }
                let r = check(&inst.params, inst.lambda, &tb, &cfg, STEP, FLOOR).unwrap();
                assert!(
                    r.max_rel_err <= 1e-4,
                    "{constraint:?} {objective:?}: rel err {} at {} ({} vs {})",
                    r.max_rel_err,
                    r.worst_index,
                    r.analytic,
                    r.numeric
                );
                done += 1;
            }
        }
    }
}

type Oracle<'a> = Box<dyn Fn(&[f64]) -> f64 + 'a>;

/// Central differences of a scalar function of `p`, with the step scaled
/// to the distance from 0 and 1 so log terms stay well resolved.
fn numeric_grad(p: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut q = p.to_vec();
    (0..p.len())
        .map(|i| {
            let h = STEP.min(1e-3 * p[i].min(1.0 - p[i]));
            q[i] = p[i] + h;
            let up = f(&q);
            q[i] = p[i] - h;
            let down = f(&q);
            q[i] = p[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

#[test]
fn per_probability_gradients_match_oracles() {
    let mut rng = Rng::new(5);
    let mut checked = 0;
    while checked < 200 {
        let s = 4 + rng.below(29);
        let (p, a, y) = common::random_batch(&mut rng, s);
        let b = Batch::new(&p, &a, &y).unwrap();
        let cases: Vec<(LossKind, Oracle)> = vec![
            (LossKind::Dp, Box::new(|q: &[f64]| common::dp(q, &a))),
            (
                LossKind::EoSum,
                Box::new(|q: &[f64]| common::eo_sum(q, &a, &y)),
            ),
            (
                LossKind::EoMax,
                Box::new(|q: &[f64]| common::eo_max(q, &a, &y)),
            ),
            (LossKind::Di, Box::new(|q: &[f64]| common::di(q, &a))),
            (
                LossKind::CrossEntropy,
                Box::new(|q: &[f64]| common::cross_entropy(q, &y)),
            ),
            (
                LossKind::QMean {
                    class_factor: false,
                },
                Box::new(|q: &[f64]| common::q_mean(q, &y, false)),
            ),
        ];
        // skip draws near a kink of any of the constraints
        let fpr_s = common::fpr(&p, &a, &y);
        let fnr_s = common::fnr(&p, &a, &y);
        let r = common::group_mean(&p, &a, true) / common::group_mean(&p, &a, false);
        if common::dp(&p, &a) < MARGIN
            || fpr_s < MARGIN
            || fnr_s < MARGIN
            || (fpr_s - fnr_s).abs() < MARGIN
            || (r - 1.0).abs() < MARGIN
        {
            continue;
        }
        for (kind, f) in cases {
            let analytic = grad_wrt_p(kind, &b).unwrap();
            let numeric = numeric_grad(&p, f);
            for (u, v) in analytic.iter().zip(&numeric) {
                let rel = (u - v).abs() / u.abs().max(v.abs()).max(FLOOR);
                assert!(rel <= 1e-5, "{kind:?}: {u} vs {v}");
            }
        }
        checked += 1;
    }
}
