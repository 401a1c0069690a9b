//! Small synthetic tables for tests and demos.

use crate::data::{RawTable, SchemaConfig};
use crate::error::Result;
use crate::numcore::Rng;

fn table(rows: Vec<[f64; 2]>, a: Vec<bool>, y: Vec<bool>) -> (RawTable, SchemaConfig) {
    let rows = rows
        .into_iter()
        .zip(a.into_iter().zip(y))
        .map(|(x, (a, y))| {
            vec![
                x[0].to_string(),
                x[1].to_string(),
                (a as u8).to_string(),
                (y as u8).to_string(),
            ]
        })
        .collect();
    let t = RawTable {
        columns: ["x1", "x2", "a", "y"].map(String::from).to_vec(),
        rows,
        dropped: 0,
    };
    (t, SchemaConfig::generic(&["x1", "x2"]))
}

/// Two Gaussian blobs at ±(1.5, 1.5); the attribute is an independent coin.
pub fn separable(n: usize, seed: u64) -> Result<(RawTable, SchemaConfig)> {
    let mut rng = Rng::new(seed);
    let (mut xs, mut a, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let label = rng.uniform() < 0.5;
        let c = if label { 1.5 } else { -1.5 };
        let z = rng.normal(0.0, 0.5, 2)?;
        xs.push([c + z[0], c + z[1]]);
        a.push(rng.uniform() < 0.5);
        y.push(label);
    }
    Ok(table(xs, a, y))
}

/// Labels driven by `x1` plus a group shift; `x2` is a noisy proxy for the
/// attribute. Positive rates are roughly 0.9 for `a = 1` and 0.1 otherwise.
pub fn biased(n: usize, seed: u64) -> Result<(RawTable, SchemaConfig)> {
    let mut rng = Rng::new(seed);
    let (mut xs, mut a, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let g = rng.uniform() < 0.5;
        let z = rng.normal(0.0, 1.0, 3)?;
        let shift = if g { 1.5 } else { -1.5 };
        let x1 = z[0];
        let x2 = if g { 1.0 } else { 0.0 } + 0.3 * z[1];
        xs.push([x1, x2]);
        a.push(g);
        y.push(x1 + shift + 0.5 * z[2] > 0.0);
    }
    Ok(table(xs, a, y))
}
