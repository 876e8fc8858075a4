//! Derived constants of the tournament, cover and layered stages.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(config(format!("{name} must lie in (0, 1), got {x}")));
    }
    Ok(())
}

/// Split-compare ratio `1 + 2 r / (1 - r)` with `r = (1 - eps)^(1/4)`.
pub fn lambda(epsilon: f64) -> f64 {
    let r = (1.0 - epsilon).powf(0.25);
    1.0 + 2.0 * r / (1.0 - r)
}

/// Which rounds the tournament output is the minimum of.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundMinimum {
    /// Every round, so a single round without a winner yields 0.
    #[default]
    All,
    /// Only the rounds that produced a winner.
    Positive,
}

impl std::str::FromStr for RoundMinimum {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(RoundMinimum::All),
            "positive" => Ok(RoundMinimum::Positive),
            _ => Err(config(format!("round minimum must be 'all' or 'positive', got '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TournamentConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Approximation factor of the coarse sub-estimator.
    pub beta: f64,
    /// Multiplies the number of rounds.
    pub round_multiplier: f64,
    pub minimum: RoundMinimum,
}

impl TournamentConfig {
    pub fn new(epsilon: f64, delta: f64, beta: f64) -> Result<Self> {
        let cfg = TournamentConfig {
            epsilon,
            delta,
            beta,
            round_multiplier: 1.0,
            minimum: RoundMinimum::All,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("tournament epsilon", self.epsilon)?;
        check_unit("tournament delta", self.delta)?;
        if !(self.beta >= 1.0) {
            return Err(config(format!("beta must be at least 1, got {}", self.beta)));
        }
        if !(self.round_multiplier > 0.0) {
            return Err(config("round multiplier must be positive"));
        }
        Ok(())
    }

    /// Probability that a round isolates a `(1 - eps/2)`-significant entry.
    pub fn p(&self) -> f64 {
        1.0 - (1.0 - self.epsilon / 2.0).sqrt()
    }

    pub fn rounds(&self) -> u32 {
        let r = self.round_multiplier / self.p() * (1.0 / self.delta).ln();
        (r.ceil() as u32).max(1)
    }

    /// Failure probability each sub-estimate may have.
    pub fn delta_prime(&self) -> f64 {
        self.p() * self.epsilon / (4.0 * (1.0 / self.delta).ln())
    }

    pub fn lambda(&self) -> f64 {
        lambda(self.epsilon)
    }

    pub fn lambda_prime(&self) -> f64 {
        (1.0 + self.epsilon) * self.lambda()
    }

    /// Significance level below which no guarantee is made.
    pub fn alpha(&self) -> f64 {
        self.epsilon / (64.0 * self.beta * self.beta)
    }
}

/// Upper limit on the bucket count, keeping the map from the hash field to
/// buckets fine-grained.
pub const MAX_BUCKETS: u64 = 1 << 40;

/// Cover stage: one threshold-max instance per bucket.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverConfig {
    /// Precision of each reported value.
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
    pub round_multiplier: f64,
    pub minimum: RoundMinimum,
    pub buckets_override: Option<u64>,
}

impl CoverConfig {
    pub fn new(epsilon: f64, delta: f64, beta: f64) -> Result<Self> {
        let cfg = CoverConfig {
            epsilon,
            delta,
            beta,
            round_multiplier: 1.0,
            minimum: RoundMinimum::All,
            buckets_override: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("cover epsilon", self.epsilon)?;
        check_unit("cover delta", self.delta)?;
        self.tournament().validate()
    }

    /// The tournament run in each bucket. A tournament at precision `e`
    /// reports `3e`-approximations, hence the division.
    pub fn tournament(&self) -> TournamentConfig {
        TournamentConfig {
            epsilon: self.epsilon / 3.0,
            delta: self.delta / self.buckets() as f64,
            beta: self.beta,
            round_multiplier: self.round_multiplier,
            minimum: self.minimum,
        }
    }

    pub fn alpha(&self) -> f64 {
        (self.epsilon / 3.0) / (64.0 * self.beta * self.beta)
    }

    pub fn epsilon_prime(&self) -> f64 {
        self.epsilon * self.epsilon * self.delta / 3.0
    }

    pub fn buckets(&self) -> u64 {
        if let Some(b) = self.buckets_override {
            return b.max(1);
        }
        let rho = (1.0 / (self.epsilon_prime() * self.alpha())).ceil();
        if rho >= MAX_BUCKETS as f64 {
            MAX_BUCKETS
        } else {
            rho as u64
        }
    }
}

/// Upper bound of the two-sided error of the layered estimator at internal
/// precision `eps`.
pub fn layered_error(epsilon: f64) -> f64 {
    let upper = (1.0 + epsilon).powi(7) * (1.0 + 20.0 * epsilon) - 1.0;
    let lower = 1.0 - (1.0 - epsilon) / (1.0 + epsilon).powi(2);
    upper.max(lower)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerConfig {
    /// Internal precision.
    pub epsilon: f64,
    pub n: u64,
    /// Upper bound on any coordinate of the vector being estimated.
    pub max_entry: f64,
    /// Multiplies the sample-size constants; 1 keeps them unscaled.
    pub chi_scale: f64,
    /// Count values just below the shifted unit in layer `-1`.
    pub include_lowest_layer: bool,
}

impl LayerConfig {
    pub fn new(epsilon: f64, n: u64, max_entry: f64) -> Result<Self> {
        let cfg = LayerConfig {
            epsilon,
            n,
            max_entry,
            chi_scale: 1.0,
            include_lowest_layer: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Largest internal precision whose error bound stays within `target`.
    pub fn for_target(target: f64, n: u64, max_entry: f64) -> Result<Self> {
        check_unit("target epsilon", target)?;
        let (mut lo, mut hi) = (0.0f64, target);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if layered_error(mid) <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        LayerConfig::new(lo, n, max_entry)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("layer epsilon", self.epsilon)?;
        if self.n == 0 {
            return Err(config("domain size must be positive"));
        }
        if !(self.max_entry >= 1.0) {
            return Err(config("entry bound must be at least 1"));
        }
        if !(self.chi_scale > 0.0) {
            return Err(config("chi scale must be positive"));
        }
        Ok(())
    }

    fn log_base(&self, x: f64) -> f64 {
        x.ln() / (1.0 + self.epsilon).ln()
    }

    /// Number of sampling levels above level 0.
    pub fn levels(&self) -> u32 {
        self.log_base(self.n as f64).ceil().max(0.0) as u32
    }

    /// Highest layer index.
    pub fn layers(&self) -> i64 {
        self.log_base(self.max_entry).ceil().max(0.0) as i64 + 1
    }

    pub fn chi_prime(&self) -> f64 {
        10.0 * (self.levels() as f64 + self.layers() as f64)
    }

    /// Target per-layer sample size.
    pub fn chi(&self) -> f64 {
        let e = self.epsilon;
        (16.0 / (e * e * e) * self.chi_prime() * self.chi_scale).ceil().max(1.0)
    }

    /// Range of the random shift.
    pub fn shift_range(&self) -> u64 {
        let e = self.epsilon;
        (20.0 * self.chi_prime() / (e * e) * self.chi_scale).ceil().max(1.0) as u64
    }

    pub fn zeta(&self) -> f64 {
        (1.0 + self.epsilon).powf(1.0 / self.shift_range() as f64) - 1.0
    }

    /// Precision the cover stage would need for the full guarantee.
    pub fn cover_precision(&self) -> f64 {
        let z = self.zeta();
        let cp = self.chi_prime();
        (z / (2.0 * (1.0 + z))).min(self.epsilon / (4.0 * self.chi() * cp * cp))
    }

    /// Highest level that can matter. When the whole domain fits under the
    /// lower sample threshold, level 0 alone decides every layer.
    pub fn top_level(&self) -> u32 {
        if self.n as f64 <= self.chi() / (1.0 + self.epsilon).powi(2) {
            0
        } else {
            self.levels()
        }
    }

    pub fn level_probability(&self, j: u32) -> f64 {
        (1.0 + self.epsilon).powi(-(j as i32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_at_half() {
        let l = lambda(0.5);
        assert!((l - 11.57).abs() < 0.01, "{l}");
        assert!((lambda(0.1) - 75.9).abs() < 0.1);
    }

    #[test]
    fn tournament_constants() {
        let c = TournamentConfig::new(0.1, 0.1, 2.0).unwrap();
        assert!((c.p() - 0.02532).abs() < 1e-4);
        assert_eq!(c.rounds(), 91);
        assert!((c.alpha() - 0.1 / 256.0).abs() < 1e-15);
        assert!(TournamentConfig::new(1.5, 0.1, 2.0).is_err());
        assert!(TournamentConfig::new(0.1, 0.1, 0.5).is_err());
    }

    #[test]
    fn cover_bucket_count() {
        let c = CoverConfig::new(0.3, 0.1, 2.0).unwrap();
        let expect = (1.0f64 / (0.003 * (0.1 / 256.0))).ceil() as u64;
        assert!(c.buckets().abs_diff(expect) <= 1);
        assert!((c.tournament().epsilon - 0.1).abs() < 1e-12);
    }

    #[test]
    fn layered_target_inverts_error_bound() {
        let l = LayerConfig::for_target(0.3, 8, 1e6).unwrap();
        assert!(layered_error(l.epsilon) <= 0.3);
        assert!(layered_error(l.epsilon * 1.01) > 0.3);
    }

    #[test]
    fn small_domains_use_level_zero_only() {
        let l = LayerConfig::new(0.1, 8, 100.0).unwrap();
        assert_eq!(l.top_level(), 0);
        let mut big = LayerConfig::new(0.3, 1024, 1.0).unwrap();
        big.chi_scale = 1e-4;
        assert!(big.top_level() > 0);
    }
}
