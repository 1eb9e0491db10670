//! Alternating sine and cosine sums over the vertices of the unit cube.
//!
//! For angles `a_1..a_k`,
//! `SI_k = sum_{j in {0,1}^k} (-1)^{|j|} sin(j . a)` and `CO_k` likewise
//! with cosine. Both are the imaginary and real parts of
//! `prod (1 - e^{i a_m}) = (-2i)^k prod sin(a_m / 2) e^{i (sum a) / 2}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `k` for which the `2^k`-term definition is evaluated.
pub const MAX_DEFINITIONAL_K: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigArgs {
    alphas: Vec<f64>,
}

impl TrigArgs {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidArgument("need at least one angle".into()));
        }
        Ok(Self { alphas })
    }

    pub fn k(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }
}

/// `(SI_k, CO_k)` by summing all `2^k` signed terms.
pub fn si_co_definitional(args: &TrigArgs) -> Result<(f64, f64)> {
    let k = args.k();
    if k > MAX_DEFINITIONAL_K {
        return Err(Error::InvalidArgument(format!(
            "definitional sum limited to k <= {MAX_DEFINITIONAL_K}, got {k}"
        )));
    }
    let (mut si, mut co) = (0.0, 0.0);
    for mask in 0u32..(1 << k) {
        let angle: f64 = args
            .alphas
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, a)| a)
            .sum();
        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        si += sign * angle.sin();
        co += sign * angle.cos();
    }
    Ok((si, co))
}

/// `(SI_k, CO_k)` from the product form. For long vectors the magnitude of
/// the sine product is carried as a logarithm to avoid underflow.
pub fn si_co_closed(args: &TrigArgs) -> (f64, f64) {
    let k = args.k();
    let half_sum = 0.5 * args.alphas.iter().sum::<f64>();
    let scaled = if k > 20 {
        let mut log_mag = k as f64 * std::f64::consts::LN_2;
        let mut negative = false;
        for a in &args.alphas {
            let s = (0.5 * a).sin();
            if s == 0.0 {
                return (0.0, 0.0);
            }
            negative ^= s < 0.0;
            log_mag += s.abs().ln();
        }
        let m = log_mag.exp();
        if negative {
            -m
        } else {
            m
        }
    } else {
        let p: f64 = args.alphas.iter().map(|a| (0.5 * a).sin()).product();
        p * (k as f64).exp2()
    };
    let (s, c) = half_sum.sin_cos();
    // (-i)^k e^{i h} for k mod 4 = 0, 1, 2, 3.
    let (co, si) = match k % 4 {
        0 => (c, s),
        1 => (s, -c),
        2 => (-c, -s),
        _ => (-s, c),
    };
    (scaled * si, scaled * co)
}

/// `(SI, CO)` of a concatenated angle vector from the values of its two
/// parts: the products `prod (1 - e^{i a})` multiply.
pub fn si_co_join(left: (f64, f64), right: (f64, f64)) -> (f64, f64) {
    let ((si_a, co_a), (si_b, co_b)) = (left, right);
    (si_a * co_b + co_a * si_b, co_a * co_b - si_a * si_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn args(v: &[f64]) -> TrigArgs {
        TrigArgs::new(v.to_vec()).unwrap()
    }

    #[test]
    fn definitional_examples() {
        let (si, co) = si_co_definitional(&args(&[PI])).unwrap();
        assert_abs_diff_eq!(si, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(co, 2.0, epsilon = 1e-15);
        let (si2, _) = si_co_definitional(&args(&[PI / 2.0, PI / 2.0])).unwrap();
        assert_abs_diff_eq!(si2, -2.0, epsilon = 1e-15);
        let a = 0.731;
        let (_, co1) = si_co_definitional(&args(&[a])).unwrap();
        assert_abs_diff_eq!(co1, 2.0 * (a / 2.0).sin().powi(2), epsilon = 1e-15);
        assert!(si_co_definitional(&args(&[0.1; 17])).is_err());
        assert!(TrigArgs::new(vec![]).is_err());
    }

    #[test]
    fn closed_examples() {
        let (si2, _) = si_co_closed(&args(&[PI / 2.0, PI / 2.0]));
        assert_abs_diff_eq!(si2, -2.0, epsilon = 1e-14);
        let (si3, co3) = si_co_closed(&args(&[0.0, 1.3, -0.4]));
        assert_eq!((si3, co3), (0.0, 0.0));
        let (a, b) = (0.3, 1.1);
        let (_, co4) = si_co_closed(&args(&[a, b, -a, -b]));
        let prod = 16.0 * (a / 2.0).sin() * (b / 2.0).sin() * (-a / 2.0).sin() * (-b / 2.0).sin();
        assert_abs_diff_eq!(co4, prod, epsilon = 1e-14);
    }

    #[test]
    fn long_vectors_use_log_magnitude() {
        let v = vec![0.5; 40];
        let (si, co) = si_co_closed(&args(&v));
        let mag = (2.0 * 0.25f64.sin()).powi(40);
        assert!((si * si + co * co).sqrt() / mag - 1.0 < 1e-12);
    }

    #[test]
    fn join_matches_concatenation() {
        let v = [0.3, -1.7, 2.2, 0.05, 4.0];
        let whole = si_co_definitional(&args(&v)).unwrap();
        for m in 1..v.len() {
            let left = si_co_definitional(&args(&v[..m])).unwrap();
            let right = si_co_definitional(&args(&v[m..])).unwrap();
            let (si, co) = si_co_join(left, right);
            assert_abs_diff_eq!(si, whole.0, epsilon = 1e-12);
            assert_abs_diff_eq!(co, whole.1, epsilon = 1e-12);
        }
    }
}
