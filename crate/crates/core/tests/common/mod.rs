//! Loop-based reference implementations and fixture generators shared by
//! the integration tests. Written without reference to the library code.

use fairlag::numcore::Rng;

pub fn group_mean(p: &[f64], a: &[bool], want: bool) -> f64 {
    let mut s = 0.0;
    let mut n = 0.0;
    for i in 0..p.len() {
        if a[i] == want {
            s += p[i];
            n += 1.0;
        }
    }
    s / n
}

pub fn dp(p: &[f64], a: &[bool]) -> f64 {
    (group_mean(p, a, true) - group_mean(p, a, false)).abs()
}

fn count(a: &[bool], want: bool) -> f64 {
    a.iter().filter(|&&v| v == want).count() as f64
}

pub fn fpr(p: &[f64], a: &[bool], y: &[bool]) -> f64 {
    let (mut s1, mut s0) = (0.0, 0.0);
    for i in 0..p.len() {
        if !y[i] {
            if a[i] {
                s1 += p[i];
            } else {
                s0 += p[i];
            }
        }
    }
    (s1 / count(a, true) - s0 / count(a, false)).abs()
}

pub fn fnr(p: &[f64], a: &[bool], y: &[bool]) -> f64 {
    let (mut s1, mut s0) = (0.0, 0.0);
    for i in 0..p.len() {
        if y[i] {
            if a[i] {
                s1 += 1.0 - p[i];
            } else {
                s0 += 1.0 - p[i];
            }
        }
    }
    (s1 / count(a, true) - s0 / count(a, false)).abs()
}

pub fn eo_sum(p: &[f64], a: &[bool], y: &[bool]) -> f64 {
    fpr(p, a, y) + fnr(p, a, y)
}

pub fn eo_max(p: &[f64], a: &[bool], y: &[bool]) -> f64 {
    fpr(p, a, y).max(fnr(p, a, y))
}

pub fn di(p: &[f64], a: &[bool]) -> f64 {
    let m1 = group_mean(p, a, true).max(1e-7);
    let m0 = group_mean(p, a, false).max(1e-7);
    -(m1 / m0).min(m0 / m1)
}

pub fn q_mean(p: &[f64], y: &[bool], halve: bool) -> f64 {
    let (mut tp, mut pos, mut tn, mut neg) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..p.len() {
        if y[i] {
            tp += p[i];
            pos += 1.0;
        } else {
            tn += 1.0 - p[i];
            neg += 1.0;
        }
    }
    let e = (1.0 - tp / pos).powi(2) + (1.0 - tn / neg).powi(2);
    if halve {
        (e / 2.0).sqrt()
    } else {
        e.sqrt()
    }
}

pub fn cross_entropy(p: &[f64], y: &[bool]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        s -= if y[i] { p[i].ln() } else { (1.0 - p[i]).ln() };
    }
    s / p.len() as f64
}

pub fn dp_multi(p: &[f64], g: &[usize], m: usize) -> f64 {
    let mut total = 0.0;
    for j in 0..m {
        let (mut sin, mut nin, mut sout, mut nout) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..p.len() {
            if g[i] == j {
                sin += p[i];
                nin += 1.0;
            } else {
                sout += p[i];
                nout += 1.0;
            }
        }
        total += (sin / nin - sout / nout).abs();
    }
    total
}

/// Random batch of size `s` with both groups and both classes present.
pub fn random_batch(rng: &mut Rng, s: usize) -> (Vec<f64>, Vec<bool>, Vec<bool>) {
    loop {
        let p: Vec<f64> = (0..s).map(|_| 0.001 + 0.998 * rng.uniform()).collect();
        let a: Vec<bool> = (0..s).map(|_| rng.uniform() < 0.5).collect();
        let y: Vec<bool> = (0..s).map(|_| rng.uniform() < 0.5).collect();
        let ok = a.iter().any(|&v| v)
            && a.iter().any(|&v| !v)
            && y.iter().any(|&v| v)
            && y.iter().any(|&v| !v);
        if ok {
            return (p, a, y);
        }
    }
}

/// Random multi-group assignment with every group present.
pub fn random_groups(rng: &mut Rng, s: usize, m: usize) -> Vec<usize> {
    loop {
        let g: Vec<usize> = (0..s).map(|_| rng.below(m)).collect();
        if (0..m).all(|j| g.contains(&j)) {
            return g;
        }
    }
}
