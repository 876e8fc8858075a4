//! Layered L1 estimation from a cover oracle.
//!
//! Values are grouped into geometric layers after a random shift. Each layer
//! is counted at the deepest sampling level where its sample is still about
//! `chi` strong, and the count is scaled back up by the inverse sampling rate.

use std::collections::BTreeMap;

use crate::error::{domain, Result};
use crate::estimator::config::LayerConfig;

/// Reports approximations of the heavy coordinates surviving a sampling level.
pub trait CoverOracle {
    fn cover(&self, level: u32) -> Result<Vec<f64>>;
}

/// `ceil(log_{1+eps}(x / chi))` for `x > chi`.
pub fn f_chi(x: f64, chi: f64, epsilon: f64) -> Result<i64> {
    if !(chi > 0.0 && epsilon > 0.0) {
        return Err(domain("chi and epsilon must be positive"));
    }
    if !(x > chi) || !x.is_finite() {
        return Err(domain(format!("f_chi needs x > chi, got x = {x}, chi = {chi}")));
    }
    let base = 1.0 + epsilon;
    let mut f = ((x / chi).ln() / base.ln()).ceil() as i64;
    while f > 1 && chi * base.powi(f as i32 - 1) >= x {
        f -= 1;
    }
    while chi * base.powi(f as i32) < x {
        f += 1;
    }
    Ok(f)
}

/// Index `l` with `unit * (1+eps)^l <= value < unit * (1+eps)^(l+1)`.
pub fn layer_index(value: f64, unit: f64, epsilon: f64) -> i64 {
    let base = 1.0 + epsilon;
    let mut l = ((value / unit).ln() / base.ln()).floor() as i64;
    while unit * base.powi(l as i32) > value {
        l -= 1;
    }
    while unit * base.powi(l as i32 + 1) <= value {
        l += 1;
    }
    l
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayeredEstimate {
    pub estimate: f64,
    pub shift: u64,
    /// `(layer, level used, count at that level)` for every non-empty layer.
    pub layers: Vec<(i64, u32, u64)>,
}

pub fn layered_l1_estimate<C: CoverOracle + ?Sized>(
    cfg: &LayerConfig,
    shift: u64,
    cover: &C,
) -> Result<LayeredEstimate> {
    cfg.validate()?;
    let eps = cfg.epsilon;
    let base = 1.0 + eps;
    let range = cfg.shift_range();
    if shift >= range {
        return Err(domain(format!("shift {shift} outside [0, {range})")));
    }
    let unit = base.powf(shift as f64 / range as f64);
    let lowest = if cfg.include_lowest_layer { -1 } else { 0 };
    let highest = cfg.layers();
    let top = cfg.top_level();

    // counts[l][j] = number of level-j outputs in layer l
    let mut counts: BTreeMap<i64, Vec<u64>> = BTreeMap::new();
    for j in 0..=top {
        let values = cover.cover(j).map_err(|e| e.context(format!("level {j}")))?;
        for v in values.into_iter().filter(|v| *v > 0.0) {
            let l = layer_index(v, unit, eps);
            if (lowest..=highest).contains(&l) {
                counts.entry(l).or_insert_with(|| vec![0; top as usize + 1])[j as usize] += 1;
            }
        }
    }

    let chi = cfg.chi();
    let low = chi / (base * base);
    let high = (1.0 + 3.0 * eps) * chi;
    let mut estimate = 0.0;
    let mut layers = Vec::new();
    for (&l, row) in &counts {
        let z = (1..=top)
            .rev()
            .find(|&j| {
                let y = row[j as usize] as f64;
                y > low && y <= high
            })
            .unwrap_or(0);
        let y = row[z as usize];
        estimate += unit * base.powi((z as i64 + l) as i32) * y as f64;
        layers.push((l, z, y));
    }
    Ok(LayeredEstimate {
        estimate,
        shift,
        layers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_chi_at_exact_powers() {
        let chi = 50.0;
        assert_eq!(f_chi(2.0 * chi, chi, 0.1).unwrap(), 8);
        let x = chi * 1.1f64.powi(5);
        assert_eq!(f_chi(x, chi, 0.1).unwrap(), 5);
        assert!(f_chi(chi, chi, 0.1).is_err());
    }

    #[test]
    fn layer_index_brackets_value() {
        for &v in &[0.3, 1.0, 7.5, 1e9] {
            let l = layer_index(v, 1.02, 0.1);
            assert!(1.02 * 1.1f64.powi(l as i32) <= v && v < 1.02 * 1.1f64.powi(l as i32 + 1));
        }
    }

    struct Fixed(Vec<f64>);

    impl CoverOracle for Fixed {
        fn cover(&self, level: u32) -> Result<Vec<f64>> {
            Ok(if level == 0 { self.0.clone() } else { vec![] })
        }
    }

    #[test]
    fn level_zero_rounds_each_value_down_by_at_most_one_layer() {
        let cfg = LayerConfig::new(0.1, 16, 1e6).unwrap();
        let v = vec![3.0, 40.0, 0.5, 1000.0];
        let total: f64 = v.iter().sum();
        for shift in [0, 7, cfg.shift_range() - 1] {
            let est = layered_l1_estimate(&cfg, shift, &Fixed(v.clone())).unwrap();
            assert!(est.estimate <= total && est.estimate >= total / 1.1, "{est:?}");
        }
        assert!(layered_l1_estimate(&cfg, cfg.shift_range(), &Fixed(v)).is_err());
    }
}
