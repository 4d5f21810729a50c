//! Per-sample sensor-failure injection.
//!
//! During fusion training each sample draws exactly one failure mode:
//! blank depth 30% of the time, a mismatched RGB image (wrong embedding)
//! 30% of the time, and both sensors intact the remaining 40%. The two
//! failures are mutually exclusive, so at least one sensor always carries
//! the true scene.

use crate::numerics::Tensor;
use crate::rng::Rng;
use crate::synthworld::Sample;

/// The 30/30/40 injection distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailurePolicy {
    pub p_depth_blank: f32,
    pub p_rgb_wrong: f32,
    pub p_both_ok: f32,
}

impl Default for FailurePolicy {
    fn default() -> Self {
        FailurePolicy {
            p_depth_blank: 0.30,
            p_rgb_wrong: 0.30,
            p_both_ok: 0.40,
        }
    }
}

impl FailurePolicy {
    pub fn validate(&self) {
        let sum = self.p_depth_blank + self.p_rgb_wrong + self.p_both_ok;
        assert!(
            (sum - 1.0).abs() < 1e-6,
            "failure probabilities must sum to 1, got {}",
            sum
        );
        assert!(self.p_depth_blank >= 0.0 && self.p_rgb_wrong >= 0.0 && self.p_both_ok >= 0.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailureMode {
    BothOk,
    DepthBlank,
    RgbWrong,
}

impl FailureMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            FailureMode::BothOk => "both_ok",
            FailureMode::DepthBlank => "depth_blank",
            FailureMode::RgbWrong => "rgb_wrong",
        }
    }
}

/// One independent draw from the policy.
pub fn sample_failure_mode(policy: &FailurePolicy, rng: &mut Rng) -> FailureMode {
    let u = rng.next_f32();
    if u < policy.p_depth_blank {
        FailureMode::DepthBlank
    } else if u < policy.p_depth_blank + policy.p_rgb_wrong {
        FailureMode::RgbWrong
    } else {
        FailureMode::BothOk
    }
}

/// Index of a uniformly random *other* sample, for the RgbWrong mode.
pub fn substitute_index(own: usize, len: usize, rng: &mut Rng) -> usize {
    assert!(len >= 2, "RgbWrong substitution needs at least 2 samples");
    let pick = rng.below(len - 1);
    if pick >= own {
        pick + 1
    } else {
        pick
    }
}

/// Applies a failure mode to one sample's sensor inputs at image level.
pub fn apply_failure(
    index: usize,
    mode: FailureMode,
    dataset: &[Sample],
    rng: &mut Rng,
) -> (Tensor, Tensor) {
    let sample = &dataset[index];
    match mode {
        FailureMode::BothOk => (sample.depth.clone(), sample.rgb.clone()),
        FailureMode::DepthBlank => (Tensor::zeros(vec![1, 128, 128]), sample.rgb.clone()),
        FailureMode::RgbWrong => {
            let other = substitute_index(index, dataset.len(), rng);
            (sample.depth.clone(), dataset[other].rgb.clone())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthworld::{generate_dataset, Weather};

    #[test]
    fn frequencies_match_policy_within_tolerance() {
        let policy = FailurePolicy::default();
        policy.validate();
        let mut rng = Rng::new(77);
        let mut counts = [0usize; 3];
        let n = 10_000;
        for _ in 0..n {
            match sample_failure_mode(&policy, &mut rng) {
                FailureMode::DepthBlank => counts[0] += 1,
                FailureMode::RgbWrong => counts[1] += 1,
                FailureMode::BothOk => counts[2] += 1,
            }
        }
        let freq = |c: usize| c as f32 / n as f32;
        assert!((freq(counts[0]) - 0.30).abs() < 0.02, "depth blank {}", freq(counts[0]));
        assert!((freq(counts[1]) - 0.30).abs() < 0.02, "rgb wrong {}", freq(counts[1]));
        assert!((freq(counts[2]) - 0.40).abs() < 0.02, "both ok {}", freq(counts[2]));
    }

    #[test]
    fn replay_is_identical() {
        let policy = FailurePolicy::default();
        let draw = |seed: u64| -> Vec<FailureMode> {
            let mut rng = Rng::new(seed);
            (0..500).map(|_| sample_failure_mode(&policy, &mut rng)).collect()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn substitute_never_returns_own_index() {
        let mut rng = Rng::new(3);
        for own in 0..10 {
            for _ in 0..200 {
                assert_ne!(substitute_index(own, 10, &mut rng), own);
            }
        }
    }

    #[test]
    #[should_panic(expected = "at least 2 samples")]
    fn substitution_requires_two_samples() {
        substitute_index(0, 1, &mut Rng::new(0));
    }

    #[test]
    fn apply_failure_modes_behave() {
        let (samples, _) = generate_dataset(2, 4, &Weather::train_clear());
        let mut rng = Rng::new(9);

        let (depth, rgb) = apply_failure(1, FailureMode::BothOk, &samples, &mut rng);
        assert_eq!(depth.data(), samples[1].depth.data());
        assert_eq!(rgb.data(), samples[1].rgb.data());

        let (depth, _) = apply_failure(1, FailureMode::DepthBlank, &samples, &mut rng);
        assert_eq!(depth.data().iter().map(|v| v.abs()).sum::<f32>(), 0.0);

        let (_, rgb) = apply_failure(1, FailureMode::RgbWrong, &samples, &mut rng);
        assert_ne!(rgb.data(), samples[1].rgb.data());
    }
}
