//! Gauss-Legendre rules on `[-1, 1]` and panel helpers.

use std::sync::OnceLock;

use crate::sum::Neumaier;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are the roots of `P_n`, found by Newton's method from the
    /// Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = Neumaier::new();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mid + half * x));
        }
        half * acc.value()
    }

    /// Mapped nodes and weights on `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

pub fn gl8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

pub fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// Rule of the requested order, sharing the cached 8 and 16 point rules.
pub fn rule(order: usize) -> std::borrow::Cow<'static, GaussLegendre> {
    match order {
        8 => std::borrow::Cow::Borrowed(gl8()),
        16 => std::borrow::Cow::Borrowed(gl16()),
        n => std::borrow::Cow::Owned(GaussLegendre::new(n)),
    }
}

/// Composite rule over `panels` equal pieces of `[a, b]`.
pub fn composite<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    panels: usize,
    mut f: F,
) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut acc = Neumaier::new();
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let hi = if k + 1 == panels { b } else { lo + h };
        acc.add(rule.integrate(lo, hi, &mut f));
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 8, 16, 31] {
            let r = GaussLegendre::new(n);
            let s: f64 = r.weights.iter().sum();
            assert_relative_eq!(s, 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let r = gl8();
        for k in 0..16 {
            let got = r.integrate(0.0, 1.0, |x| x.powi(k));
            assert_relative_eq!(got, 1.0 / (k as f64 + 1.0), max_relative = 1e-13);
        }
    }

    #[test]
    fn known_nodes() {
        let r = GaussLegendre::new(2);
        assert_relative_eq!(r.nodes[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        let r16 = gl16();
        assert_relative_eq!(r16.nodes[15], 0.989_400_934_991_649_9, epsilon = 1e-15);
    }

    #[test]
    fn composite_oscillatory() {
        let got = composite(gl16(), 0.0, 100.0, 40, |x| x.sin());
        assert_relative_eq!(got, 1.0 - 100f64.cos(), epsilon = 1e-12);
    }
}
