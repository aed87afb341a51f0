//! Replication statistics and closed-form single-queue results.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("need at least 2 samples for a confidence interval, got {0}")]
    InsufficientSamples(usize),
    #[error("queue is unstable: lambda {lambda} >= mu {mu}")]
    UnstableQueue { lambda: f64, mu: f64 },
}

// t_{0.975, df} for df = 1..=120
#[rustfmt::skip]
const T975: [f64; 120] = [
    12.706205, 4.302653, 3.182446, 2.776445, 2.570582, 2.446912,
    2.364624, 2.306004, 2.262157, 2.228139, 2.200985, 2.178813,
    2.160369, 2.144787, 2.131450, 2.119905, 2.109816, 2.100922,
    2.093024, 2.085963, 2.079614, 2.073873, 2.068658, 2.063899,
    2.059539, 2.055529, 2.051831, 2.048407, 2.045230, 2.042272,
    2.039513, 2.036933, 2.034515, 2.032245, 2.030108, 2.028094,
    2.026192, 2.024394, 2.022691, 2.021075, 2.019541, 2.018082,
    2.016692, 2.015368, 2.014103, 2.012896, 2.011741, 2.010635,
    2.009575, 2.008559, 2.007584, 2.006647, 2.005746, 2.004879,
    2.004045, 2.003241, 2.002465, 2.001717, 2.000995, 2.000298,
    1.999624, 1.998972, 1.998341, 1.997730, 1.997138, 1.996564,
    1.996008, 1.995469, 1.994945, 1.994437, 1.993943, 1.993464,
    1.992997, 1.992543, 1.992102, 1.991673, 1.991254, 1.990847,
    1.990450, 1.990063, 1.989686, 1.989319, 1.988960, 1.988610,
    1.988268, 1.987934, 1.987608, 1.987290, 1.986979, 1.986675,
    1.986377, 1.986086, 1.985802, 1.985523, 1.985251, 1.984984,
    1.984723, 1.984467, 1.984217, 1.983972, 1.983731, 1.983495,
    1.983264, 1.983038, 1.982815, 1.982597, 1.982383, 1.982173,
    1.981967, 1.981765, 1.981567, 1.981372, 1.981180, 1.980992,
    1.980808, 1.980626, 1.980448, 1.980272, 1.980100, 1.979930,
];

/// Two-sided 95% Student-t quantile; 1.96 beyond 120 degrees of freedom.
pub fn t_quantile_975(df: usize) -> f64 {
    match df {
        0 => f64::INFINITY,
        1..=120 => T975[df - 1],
        _ => 1.96,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub half_width: f64,
}

impl SampleStats {
    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }

    pub fn contains(&self, value: f64) -> bool {
        (self.lower()..=self.upper()).contains(&value)
    }

    pub fn overlaps(&self, other: &SampleStats) -> bool {
        self.lower() <= other.upper() && other.lower() <= self.upper()
    }
}

pub fn confidence_interval(samples: &[f64]) -> Result<SampleStats, MetricsError> {
    let n = samples.len();
    if n < 2 {
        return Err(MetricsError::InsufficientSamples(n));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    let std_dev = (ss / (n - 1) as f64).sqrt();
    Ok(SampleStats { n, mean, std_dev, half_width: t_quantile_975(n - 1) * std_dev / (n as f64).sqrt() })
}

/// Blocking probability of an M/M/1/K queue (K counts the job in service).
pub fn mm1k_blocking(rho: f64, k: u64) -> f64 {
    if (rho - 1.0).abs() < 1e-12 {
        return 1.0 / (k as f64 + 1.0);
    }
    // powi would overflow for large K and rho > 1; work with logs
    let log_rho = rho.ln();
    if rho > 1.0 {
        // divide through by rho^(K+1)
        let inv = (-(k as f64 + 1.0) * log_rho).exp();
        (1.0 - 1.0 / rho) / (1.0 - inv)
    } else {
        let rk = (k as f64 * log_rho).exp();
        (1.0 - rho) * rk / (1.0 - rk * rho)
    }
}

/// Mean sojourn time of an M/M/1 queue, seconds.
pub fn mm1_mean_sojourn(lambda: f64, mu: f64) -> Result<f64, MetricsError> {
    if lambda >= mu {
        return Err(MetricsError::UnstableQueue { lambda, mu });
    }
    Ok(1.0 / (mu - lambda))
}

/// Mean sojourn time of an M/D/1 queue (Pollaczek-Khinchine), seconds.
pub fn md1_mean_sojourn(lambda: f64, mu: f64) -> Result<f64, MetricsError> {
    if lambda >= mu {
        return Err(MetricsError::UnstableQueue { lambda, mu });
    }
    let rho = lambda / mu;
    Ok((1.0 + rho / (2.0 * (1.0 - rho))) / mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ci_examples() {
        let s = confidence_interval(&[5.0, 5.0, 5.0, 5.0]).unwrap();
        assert_eq!(s.mean, 5.0);
        assert_eq!(s.half_width, 0.0);

        let s = confidence_interval(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_relative_eq!(s.std_dev, 1.0);
        assert_relative_eq!(s.half_width, 4.302653 / 3f64.sqrt(), max_relative = 1e-12);
        assert!((s.half_width - 2.484).abs() < 1e-3);

        assert_eq!(confidence_interval(&[1.0]), Err(MetricsError::InsufficientSamples(1)));
    }

    #[test]
    fn t_table_edges() {
        assert_eq!(t_quantile_975(2), 4.302653);
        assert_eq!(t_quantile_975(9), 2.262157);
        assert_eq!(t_quantile_975(121), 1.96);
    }

    #[test]
    fn blocking_examples() {
        assert_relative_eq!(mm1k_blocking(1.0, 9), 0.1);
        assert_relative_eq!(mm1k_blocking(0.9, 20), 0.01365138635417442, max_relative = 1e-12);
        assert!(mm1k_blocking(1e-9, 5) < 1e-40);
        // heavy overload tends to the fluid loss 1 - 1/rho
        assert_relative_eq!(mm1k_blocking(3.6, 1_000_000), 1.0 - 1.0 / 3.6, max_relative = 1e-12);
        assert_relative_eq!(mm1k_blocking(2.0, 3), (1.0 - 2.0) * 8.0 / (1.0 - 16.0), max_relative = 1e-12);
    }

    #[test]
    fn sojourn_examples() {
        assert_relative_eq!(md1_mean_sojourn(50e3, 100e3).unwrap(), 15e-6, max_relative = 1e-12);
        assert_relative_eq!(md1_mean_sojourn(1e-9, 100e3).unwrap(), 1e-5, max_relative = 1e-9);
        assert!(matches!(md1_mean_sojourn(100e3, 100e3), Err(MetricsError::UnstableQueue { .. })));
        assert_relative_eq!(mm1_mean_sojourn(50e3, 100e3).unwrap(), 20e-6, max_relative = 1e-12);
    }
}
