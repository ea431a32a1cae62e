//! One-dimensional quadrature rules and polynomial interpolation helpers.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[a, b]`, nodes ascending.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = mid + half * x;
        nodes[i] = mid - half * x;
        weights[i] = half * w;
        weights[n - 1 - i] = half * w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = if (1.0 - x * x).abs() < 1e-300 {
        // Endpoint limit P_n'(±1) = (±1)^{n+1} n(n+1)/2.
        let s = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * nf * (nf + 1.0) / 2.0
    } else {
        nf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, d)
}

/// Values, first and second derivatives of `P_0..=P_m` at `x` in `[-1, 1]`.
pub fn legendre_table(m: usize, x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; m + 1];
    let mut dp = vec![0.0; m + 1];
    let mut ddp = vec![0.0; m + 1];
    p[0] = 1.0;
    if m >= 1 {
        p[1] = x;
        dp[1] = 1.0;
    }
    for k in 1..m {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
        dp[k + 1] = dp[k - 1] + (2.0 * kf + 1.0) * p[k];
        ddp[k + 1] = ddp[k - 1] + (2.0 * kf + 1.0) * dp[k];
    }
    (p, dp, ddp)
}

/// Chebyshev–Gauss–Lobatto nodes on `[0, h]`, ascending, `count = levels`.
pub fn chebyshev_lobatto(levels: usize, h: f64) -> Vec<f64> {
    assert!(levels >= 2, "need at least two collocation levels");
    let l = (levels - 1) as f64;
    (0..levels)
        .map(|i| {
            let z = 0.5 * h * (1.0 - (PI * i as f64 / l).cos());
            // Pin the endpoints exactly.
            if i == 0 {
                0.0
            } else if i == levels - 1 {
                h
            } else {
                z
            }
        })
        .collect()
}

/// Barycentric interpolation on an arbitrary node set.
#[derive(Debug, Clone)]
pub struct Barycentric {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Barycentric {
    pub fn new(nodes: &[f64]) -> Self {
        let n = nodes.len();
        let mut weights = vec![1.0; n];
        for j in 0..n {
            for k in 0..n {
                if k != j {
                    weights[j] /= nodes[j] - nodes[k];
                }
            }
        }
        // Rescale to avoid under/overflow for larger node counts.
        let scale = weights.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
        for w in &mut weights {
            *w /= scale;
        }
        Self {
            nodes: nodes.to_vec(),
            weights,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Cardinal functions `ℓ_k(x)` for every node.
    pub fn cardinals(&self, x: f64) -> Vec<f64> {
        let n = self.nodes.len();
        let mut out = vec![0.0; n];
        for (k, &xk) in self.nodes.iter().enumerate() {
            if x == xk {
                out[k] = 1.0;
                return out;
            }
        }
        let mut denom = 0.0;
        for k in 0..n {
            let t = self.weights[k] / (x - self.nodes[k]);
            out[k] = t;
            denom += t;
        }
        for v in &mut out {
            *v /= denom;
        }
        out
    }

    pub fn eval(&self, values: &[f64], x: f64) -> f64 {
        self.cardinals(x)
            .iter()
            .zip(values)
            .map(|(c, v)| c * v)
            .sum()
    }
}

/// Integrate `f` over `[a, b]` with composite Gauss–Legendre on `pieces` panels.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize, order: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (xs, ws) = gauss_legendre(order, 0.0, 1.0);
    let width = (b - a) / pieces as f64;
    let mut total = 0.0;
    for p in 0..pieces {
        let left = a + p as f64 * width;
        for (x, w) in xs.iter().zip(&ws) {
            total += w * width * f(left + x * width);
        }
    }
    total
}

/// Four-point Lagrange weights for `x` given nodes `xs` (any spacing).
#[inline]
pub fn cubic_weights(xs: [f64; 4], x: f64) -> [f64; 4] {
    let mut w = [1.0; 4];
    for j in 0..4 {
        for k in 0..4 {
            if k != j {
                w[j] *= (x - xs[k]) / (xs[j] - xs[k]);
            }
        }
    }
    w
}

/// Four-point Lagrange weights on a uniform grid, `s` measured from node 1 in cells.
#[inline]
pub fn uniform_cubic_weights(s: f64) -> [f64; 4] {
    let sp1 = s + 1.0;
    let sm1 = s - 1.0;
    let sm2 = s - 2.0;
    [
        -s * sm1 * sm2 / 6.0,
        sp1 * sm1 * sm2 / 2.0,
        -sp1 * s * sm2 / 2.0,
        sp1 * s * sm1 / 6.0,
    ]
}
