//! Summation of slowly convergent or alternating series from their terms.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Acceleration {
    None,
    #[default]
    Euler,
    Cesaro,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    /// Magnitude of the last change of the accelerated estimate.
    pub tail: f64,
}

impl SeriesSum {
    /// Cauchy-type test: the estimate stopped moving relative to its size.
    pub fn converged(&self, rel_tol: f64) -> bool {
        self.value.is_finite() && self.tail <= rel_tol * self.value.abs().max(f64::MIN_POSITIVE)
    }
}

fn partial_sums(terms: &[f64]) -> Vec<f64> {
    terms
        .iter()
        .scan(0.0, |s, t| {
            *s += t;
            Some(*s)
        })
        .collect()
}

/// Sum `terms` with the chosen acceleration.
///
/// Euler: repeated averaging of neighbouring partial sums (the (E,1)
/// transform applied to the partial-sum sequence). Cesàro: arithmetic mean
/// of the partial sums.
pub fn sum_series(terms: &[f64], accel: Acceleration) -> SeriesSum {
    if terms.is_empty() {
        return SeriesSum { value: 0.0, tail: 0.0 };
    }
    let s = partial_sums(terms);
    match accel {
        Acceleration::None => {
            let n = s.len();
            let tail = if n > 1 { (s[n - 1] - s[n - 2]).abs() } else { s[0].abs() };
            SeriesSum { value: s[n - 1], tail }
        }
        Acceleration::Cesaro => {
            let mean = |k: usize| s[..k].iter().sum::<f64>() / k as f64;
            let n = s.len();
            let v = mean(n);
            let prev = if n > 1 { mean(n - 1) } else { 0.0 };
            SeriesSum { value: v, tail: (v - prev).abs() }
        }
        Acceleration::Euler => {
            let mut row = s;
            let mut diag = Vec::with_capacity(row.len());
            diag.push(*row.last().unwrap());
            while row.len() > 1 {
                row = row.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
                diag.push(*row.last().unwrap());
            }
            // pick the most stable point along the diagonal
            let mut best = diag.len() - 1;
            let mut best_delta = f64::INFINITY;
            for i in 1..diag.len() {
                let d = (diag[i] - diag[i - 1]).abs();
                if d < best_delta {
                    best_delta = d;
                    best = i;
                }
            }
            SeriesSum { value: diag[best], tail: best_delta }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_harmonic_with_euler() {
        let terms: Vec<f64> = (1..=30).map(|k| if k % 2 == 1 { 1.0 / k as f64 } else { -1.0 / k as f64 }).collect();
        let plain = sum_series(&terms, Acceleration::None);
        let euler = sum_series(&terms, Acceleration::Euler);
        let ln2 = std::f64::consts::LN_2;
        assert!((plain.value - ln2).abs() > 1e-2);
        assert!((euler.value - ln2).abs() < 1e-8, "{}", euler.value);
        assert!(euler.converged(1e-6));
    }

    #[test]
    fn grandi_series_cesaro_mean() {
        let terms: Vec<f64> = (0..1000).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let c = sum_series(&terms, Acceleration::Cesaro);
        assert!((c.value - 0.5).abs() < 1e-3);
    }

    #[test]
    fn divergent_series_is_not_converged() {
        let terms: Vec<f64> = (1..40).map(|k| k as f64).collect();
        assert!(!sum_series(&terms, Acceleration::Euler).converged(1e-6));
        assert!(!sum_series(&terms, Acceleration::None).converged(1e-6));
    }
}
