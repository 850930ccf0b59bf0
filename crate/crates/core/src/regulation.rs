//! Controller state carried across steps: delay history, dynamic
//! normalisation constants, objective weights and the improvement rate.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::CheckpointError;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default, deny_unknown_fields))]
pub struct RegulationConfig {
    pub t_norm_init_s: f64,
    pub l_norm_init: f64,
    pub lambda1_init: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub history_capacity: usize,
    /// Reference fluctuation; `beta = clamp(sigma / sigma_ref, beta_min, beta_max)`.
    pub sigma_ref_s: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub gamma: f64,
    pub delta_lambda: f64,
    pub q_urgent_th: f64,
}

impl Default for RegulationConfig {
    fn default() -> Self {
        RegulationConfig {
            t_norm_init_s: 0.05,
            l_norm_init: 10.0,
            lambda1_init: 0.5,
            lambda_min: 0.1,
            lambda_max: 0.9,
            history_capacity: 200,
            sigma_ref_s: 0.01,
            beta_min: 0.2,
            beta_max: 0.8,
            gamma: 1.2,
            delta_lambda: 0.05,
            q_urgent_th: 0.5,
        }
    }
}

impl RegulationConfig {
    pub fn validate(&self) -> Result<(), String> {
        let ok = self.t_norm_init_s > 0.0
            && self.l_norm_init >= 1.0
            && 0.0 <= self.lambda_min
            && self.lambda_min <= self.lambda1_init
            && self.lambda1_init <= self.lambda_max
            && self.lambda_max <= 1.0
            && self.history_capacity > 0
            && self.sigma_ref_s > 0.0
            && 0.0 < self.beta_min
            && self.beta_min <= self.beta_max
            && self.beta_max < 1.0
            && self.gamma >= 1.0
            && self.delta_lambda >= 0.0
            && (0.0..=1.0).contains(&self.q_urgent_th);
        if ok {
            Ok(())
        } else {
            Err("regulation parameters out of range".to_string())
        }
    }
}

/// A topology's path and delay performance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Performance {
    pub l_avg: f64,
    pub mean_delay_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Improvement {
    pub delta: f64,
    /// Set when a baseline metric was zero and its term was dropped.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegulationState {
    pub config: RegulationConfig,
    pub t_norm: f64,
    pub l_norm: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub beta: f64,
    history: VecDeque<f64>,
}

/// Drops samples farther than three population standard deviations from
/// the mean. Fewer than three samples pass through unchanged.
pub fn filter_3sigma(samples: &[f64]) -> Vec<f64> {
    if samples.len() < 3 {
        return samples.to_vec();
    }
    let (mean, sd) = mean_sd(samples.iter().copied());
    samples.iter().copied().filter(|x| libm::fabs(x - mean) <= 3.0 * sd).collect()
}

fn mean_sd(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    (mean, libm::sqrt(var))
}

/// One EWMA step of the delay normaliser.
pub fn ewma(previous: f64, observed_max: f64, beta: f64) -> f64 {
    previous + beta * (observed_max - previous)
}

impl RegulationState {
    pub fn new(config: RegulationConfig) -> Self {
        let lambda1 = config.lambda1_init;
        RegulationState {
            t_norm: config.t_norm_init_s,
            l_norm: config.l_norm_init,
            lambda1,
            lambda2: 1.0 - lambda1,
            beta: config.beta_min,
            history: VecDeque::with_capacity(config.history_capacity),
            config,
        }
    }

    pub fn history(&self) -> impl Iterator<Item = &f64> {
        self.history.iter()
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    /// Appends new delay samples and moves `t_norm` toward the filtered
    /// window maximum. Without any history `t_norm` keeps its value.
    pub fn update_t_norm(&mut self, samples: &[f64]) {
        for &s in samples.iter().filter(|s| s.is_finite() && **s >= 0.0) {
            if self.history.len() == self.config.history_capacity {
                self.history.pop_front();
            }
            self.history.push_back(s);
        }
        if self.history.is_empty() {
            return;
        }
        let window: Vec<f64> = self.history.iter().copied().collect();
        let filtered = filter_3sigma(&window);
        let t_max = filtered.iter().copied().fold(0.0, f64::max);
        let (_, sigma) = mean_sd(filtered.iter().copied());
        self.beta = (sigma / self.config.sigma_ref_s).clamp(self.config.beta_min, self.config.beta_max);
        let next = ewma(self.t_norm, t_max, self.beta);
        if next > 0.0 {
            self.t_norm = next;
        }
    }

    /// `L_norm = max(L_max_real, gamma * Z)`, floored at one hop.
    pub fn update_l_norm(&mut self, l_max_real: f64, diameter: f64) {
        self.l_norm = l_max_real.max(self.config.gamma * diameter).max(1.0);
    }

    pub fn update_weights(&mut self, q_urgent: f64) {
        let diff = q_urgent - self.config.q_urgent_th;
        let sign = if diff > 0.0 {
            1.0
        } else if diff < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.lambda1 =
            (self.lambda1 + self.config.delta_lambda * sign).clamp(self.config.lambda_min, self.config.lambda_max);
        self.lambda2 = 1.0 - self.lambda1;
    }

    /// Weighted normalised score; lower is better.
    pub fn composite_objective(&self, l_avg: f64, mean_delay_s: f64) -> f64 {
        self.lambda1 * (l_avg / self.l_norm) + self.lambda2 * (mean_delay_s / self.t_norm)
    }

    /// Joint improvement rate of `after` over `before`.
    pub fn improvement_rate(&self, before: Performance, after: Performance) -> Improvement {
        let mut delta = 0.0;
        let mut degenerate = false;
        if before.l_avg > 0.0 {
            delta += self.lambda1 * (before.l_avg - after.l_avg) / (before.l_avg * self.l_norm);
        } else {
            degenerate = true;
        }
        if before.mean_delay_s > 0.0 {
            delta += self.lambda2 * (before.mean_delay_s - after.mean_delay_s) / (before.mean_delay_s * self.t_norm);
        } else {
            degenerate = true;
        }
        Improvement { delta, degenerate }
    }

    /// Key-value text form, one field per line.
    pub fn to_checkpoint(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let fields: [(&str, f64); 16] = [
            ("t_norm", self.t_norm),
            ("l_norm", self.l_norm),
            ("lambda1", self.lambda1),
            ("beta", self.beta),
            ("t_norm_init_s", c.t_norm_init_s),
            ("l_norm_init", c.l_norm_init),
            ("lambda1_init", c.lambda1_init),
            ("lambda_min", c.lambda_min),
            ("lambda_max", c.lambda_max),
            ("sigma_ref_s", c.sigma_ref_s),
            ("beta_min", c.beta_min),
            ("beta_max", c.beta_max),
            ("gamma", c.gamma),
            ("delta_lambda", c.delta_lambda),
            ("q_urgent_th", c.q_urgent_th),
            ("history_capacity", c.history_capacity as f64),
        ];
        for (k, v) in fields {
            let _ = writeln!(out, "{k}={v}");
        }
        let _ = write!(out, "history=");
        for (i, h) in self.history.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{h}");
        }
        out.push('\n');
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self, CheckpointError> {
        let mut kv: Vec<(&str, &str)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CheckpointError::Syntax { line: i + 1, message: "expected key=value".to_string() })?;
            kv.push((k.trim(), v.trim()));
        }
        let get = |key: &'static str| -> Result<&str, CheckpointError> {
            kv.iter().rev().find(|(k, _)| *k == key).map(|(_, v)| *v).ok_or(CheckpointError::MissingField(key))
        };
        let num = |key: &'static str| -> Result<f64, CheckpointError> {
            let v = get(key)?;
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CheckpointError::Invalid { field: key, message: format!("not a finite number: {v}") })
        };
        let cap = num("history_capacity")?;
        if cap < 1.0 || cap != libm::trunc(cap) {
            return Err(CheckpointError::Invalid { field: "history_capacity", message: "must be a positive integer".into() });
        }
        let config = RegulationConfig {
            t_norm_init_s: num("t_norm_init_s")?,
            l_norm_init: num("l_norm_init")?,
            lambda1_init: num("lambda1_init")?,
            lambda_min: num("lambda_min")?,
            lambda_max: num("lambda_max")?,
            history_capacity: cap as usize,
            sigma_ref_s: num("sigma_ref_s")?,
            beta_min: num("beta_min")?,
            beta_max: num("beta_max")?,
            gamma: num("gamma")?,
            delta_lambda: num("delta_lambda")?,
            q_urgent_th: num("q_urgent_th")?,
        };
        config.validate().map_err(|m| CheckpointError::Invalid { field: "config", message: m })?;
        let mut state = RegulationState::new(config);
        state.t_norm = num("t_norm")?;
        state.l_norm = num("l_norm")?;
        state.lambda1 = num("lambda1")?;
        state.lambda2 = 1.0 - state.lambda1;
        state.beta = num("beta")?;
        if !(state.t_norm > 0.0) {
            return Err(CheckpointError::Invalid { field: "t_norm", message: "must be positive".into() });
        }
        if !(state.config.lambda_min..=state.config.lambda_max).contains(&state.lambda1) {
            return Err(CheckpointError::Invalid { field: "lambda1", message: "outside weight bounds".into() });
        }
        let hist = get("history")?;
        if !hist.is_empty() {
            for part in hist.split(',') {
                let x = part.trim().parse::<f64>().map_err(|_| CheckpointError::Invalid {
                    field: "history",
                    message: format!("bad sample {part}"),
                })?;
                if state.history.len() == state.config.history_capacity {
                    state.history.pop_front();
                }
                state.history.push_back(x);
            }
        }
        Ok(state)
    }
}

impl Default for RegulationState {
    fn default() -> Self {
        RegulationState::new(RegulationConfig::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

    #[test]
    fn filter_examples() {
        assert_eq!(filter_3sigma(&[1.0, 1.0, 1.0]), vec![1.0, 1.0, 1.0]);
        assert!(filter_3sigma(&[]).is_empty());
        assert_eq!(filter_3sigma(&[1.0, 50.0]), vec![1.0, 50.0]);

        let mut xs: Vec<f64> = (0..100).map(|i| 0.01 + 1e-4 * ((i % 7) as f64 - 3.0)).collect();
        xs.push(10.0);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
        assert!(10.0 > mean + 3.0 * sd);
        let kept = filter_3sigma(&xs);
        assert_eq!(kept.len(), 100);
        assert!(kept.iter().all(|&x| x < 1.0));
    }

    #[test]
    fn t_norm_updates() {
        assert!(close(ewma(0.02, 0.04, 0.5), 0.03));
        assert_eq!(ewma(0.02, 0.02, 0.3), 0.02);

        let mut s = RegulationState::default();
        s.update_t_norm(&[]);
        assert_eq!(s.t_norm, 0.05);

        s.update_t_norm(&[0.01, 0.01, 0.01]);
        // zero spread pins beta at its floor
        assert_eq!(s.beta, 0.2);
        assert!(close(s.t_norm, 0.2 * 0.01 + 0.8 * 0.05));
    }

    #[test]
    fn history_is_bounded() {
        let mut s = RegulationState::new(RegulationConfig { history_capacity: 4, ..Default::default() });
        s.update_t_norm(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(s.history().copied().collect::<Vec<_>>(), vec![3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn l_norm_updates() {
        let mut s = RegulationState::default();
        s.update_l_norm(9.0, 6.0);
        assert!(close(s.l_norm, 9.0));
        s.update_l_norm(4.0, 10.0);
        assert!(close(s.l_norm, 12.0));
        s.update_l_norm(0.0, 0.0);
        assert_eq!(s.l_norm, 1.0);
    }

    #[test]
    fn weight_steps() {
        let mut s = RegulationState::default();
        s.update_weights(0.8);
        assert!(close(s.lambda1, 0.55));
        assert!(close(s.lambda2, 0.45));
        let before = s.clone();
        s.update_weights(0.5);
        assert_eq!(s, before);
        for _ in 0..20 {
            s.update_weights(1.0);
        }
        assert_eq!(s.lambda1, 0.9);
        assert_eq!(s.lambda1 + s.lambda2, 1.0);
    }

    #[test]
    fn objective_examples() {
        let mut s = RegulationState::default();
        assert_eq!(s.composite_objective(0.0, 0.0), 0.0);
        s.l_norm = 8.0;
        s.t_norm = 0.02;
        assert!(close(s.composite_objective(4.0, 0.01), 0.5));
        s.lambda1 = 1.0;
        s.lambda2 = 0.0;
        assert_eq!(s.composite_objective(4.0, 0.01), s.composite_objective(4.0, 99.0));
    }

    #[test]
    fn improvement_examples() {
        let mut s = RegulationState::default();
        s.l_norm = 10.0;
        s.t_norm = 0.05;
        let before = Performance { l_avg: 8.0, mean_delay_s: 0.02 };
        let same = s.improvement_rate(before, before);
        assert_eq!(same.delta, 0.0);
        assert!(!same.degenerate);
        let better = s.improvement_rate(before, Performance { l_avg: 4.0, mean_delay_s: 0.01 });
        assert!(close(better.delta, 5.025));
        assert!(s.improvement_rate(before, Performance { l_avg: 9.0, mean_delay_s: 0.03 }).delta < 0.0);

        let zero = s.improvement_rate(Performance::default(), Performance { l_avg: 1.0, mean_delay_s: 0.001 });
        assert!(zero.degenerate);
        assert_eq!(zero.delta, 0.0);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut s = RegulationState::default();
        s.update_t_norm(&[0.013, 0.0071, 0.02, 0.0095]);
        s.update_l_norm(5.0, 7.0);
        s.update_weights(0.9);
        let text = s.to_checkpoint();
        assert_eq!(RegulationState::from_checkpoint(&text).unwrap(), s);

        let empty = RegulationState::default();
        assert_eq!(RegulationState::from_checkpoint(&empty.to_checkpoint()).unwrap(), empty);

        assert!(matches!(RegulationState::from_checkpoint("t_norm"), Err(CheckpointError::Syntax { line: 1, .. })));
        assert!(matches!(RegulationState::from_checkpoint("t_norm=1"), Err(CheckpointError::MissingField(_))));
        let broken = text.replace("lambda1=0.55", "lambda1=0.95");
        assert!(RegulationState::from_checkpoint(&broken).is_err());
    }
}
