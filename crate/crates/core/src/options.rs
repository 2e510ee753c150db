use std::fmt;

use crate::error::{invalid, Result};

/// Norm order used by the L^p normalization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormOrder {
    Finite(u32),
    Infinity,
}

impl NormOrder {
    /// Exponent applied to `det(M)` inside the normalization, `-1/(2p+d)`.
    pub fn det_exponent(self, dim: usize) -> f64 {
        match self {
            NormOrder::Finite(p) => -1.0 / (2.0 * f64::from(p) + dim as f64),
            NormOrder::Infinity => 0.0,
        }
    }

    /// Exponent of `det(M)` in the global complexity integral, `p/(2p+d)`.
    pub fn integral_exponent(self, dim: usize) -> f64 {
        match self {
            NormOrder::Finite(p) => f64::from(p) / (2.0 * f64::from(p) + dim as f64),
            NormOrder::Infinity => 0.5,
        }
    }
}

impl fmt::Display for NormOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormOrder::Finite(p) => write!(f, "{p}"),
            NormOrder::Infinity => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for NormOrder {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "inf" | "infinity" => Ok(NormOrder::Infinity),
            _ => match s.parse::<u32>() {
                Ok(p) if p > 0 => Ok(NormOrder::Finite(p)),
                _ => Err(format!("norm order must be a positive integer or 'inf', got '{s}'")),
            },
        }
    }
}

/// Parameters of the metric construction and adaptation pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptOptions {
    pub target_complexity: f64,
    pub p: NormOrder,
    pub h_min: f64,
    pub h_max: f64,
    /// Maximum ratio between the largest and smallest prescribed size.
    pub a_max: Option<f64>,
    pub gradation: f64,
    pub fixed_point_iters: usize,
    pub parallel_iters: usize,
    pub num_parts: usize,
    /// First bisection axis of the partitioner; iteration `i` uses `seed + i`.
    pub seed: u64,
}

impl Default for AdaptOptions {
    fn default() -> Self {
        Self {
            target_complexity: 1000.0,
            p: NormOrder::Finite(1),
            h_min: 1e-8,
            h_max: 0.5,
            a_max: None,
            gradation: 1.3,
            fixed_point_iters: 3,
            parallel_iters: 3,
            num_parts: 1,
            seed: 0,
        }
    }
}

impl AdaptOptions {
    pub fn with_target(target_complexity: f64) -> Self {
        Self {
            target_complexity,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_complexity > 0.0) || !self.target_complexity.is_finite() {
            return invalid(format!(
                "target complexity must be positive, got {}",
                self.target_complexity
            ));
        }
        if !(self.h_min > 0.0 && self.h_min < self.h_max) {
            return invalid(format!(
                "need 0 < h_min < h_max, got h_min={} h_max={}",
                self.h_min, self.h_max
            ));
        }
        if let Some(a) = self.a_max {
            if !(a >= 1.0) {
                return invalid(format!("a_max must be >= 1, got {a}"));
            }
        }
        if !(self.gradation > 1.0) {
            return invalid(format!("gradation factor must exceed 1, got {}", self.gradation));
        }
        if self.fixed_point_iters == 0 || self.parallel_iters == 0 || self.num_parts == 0 {
            return invalid("iteration and part counts must be at least 1");
        }
        Ok(())
    }

    /// Smallest admissible eigenvalue, `1/h_max²`.
    pub fn lambda_min(&self) -> f64 {
        1.0 / (self.h_max * self.h_max)
    }

    /// Largest admissible eigenvalue, `1/h_min²`.
    pub fn lambda_max(&self) -> f64 {
        1.0 / (self.h_min * self.h_min)
    }
}

impl fmt::Display for AdaptOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "target={} p={} h_min={} h_max={} a_max={} gradation={} iters={} parallel_iters={} parts={} seed={} degree=1",
            self.target_complexity,
            self.p,
            self.h_min,
            self.h_max,
            self.a_max.map_or_else(|| "none".to_string(), |a| a.to_string()),
            self.gradation,
            self.fixed_point_iters,
            self.parallel_iters,
            self.num_parts,
            self.seed,
        )
    }
}
