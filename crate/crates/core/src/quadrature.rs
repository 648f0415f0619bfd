//! Gauss–Legendre rules, single and composite.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
///
/// Newton iteration on P_n from the Tricomi initial guesses; nodes are
/// returned in increasing order and are exactly antisymmetric.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = (n + 1) / 2;
    for i in 0..half {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Composite rule: `order`-point Gauss–Legendre on each panel `[edges[k], edges[k+1]]`.
pub fn composite(edges: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let mut nodes = Vec::with_capacity(order * edges.len());
    let mut weights = Vec::with_capacity(order * edges.len());
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + half * xi);
            weights.push(half * wi);
        }
    }
    (nodes, weights)
}

/// Rule on [-l, l] with `n` nodes: panels of 16 when `n` is a multiple of 16
/// larger than 16, otherwise a single `n`-point rule.
pub fn symmetric_rule(n: usize, l: f64) -> (Vec<f64>, Vec<f64>) {
    const PANEL: usize = 16;
    if n > PANEL && n % PANEL == 0 {
        let panels = n / PANEL;
        let edges: Vec<f64> = (0..=panels)
            .map(|k| -l + 2.0 * l * k as f64 / panels as f64)
            .collect();
        let (mut x, w) = composite(&edges, PANEL);
        symmetrize(&mut x);
        (x, w)
    } else {
        let (x, w) = gauss_legendre(n);
        (x.iter().map(|t| t * l).collect(), w.iter().map(|t| t * l).collect())
    }
}

/// Force exact antisymmetry x[i] = -x[n-1-i] that rounding in the panel maps breaks.
pub(crate) fn symmetrize(x: &mut [f64]) {
    let n = x.len();
    for i in 0..n / 2 {
        let v = 0.5 * (x[n - 1 - i] - x[i]);
        x[i] = -v;
        x[n - 1 - i] = v;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
}
