//! MOBIL lane-change decision: incentive plus safety criterion.

use serde::{Deserialize, Serialize};

use super::MobilityError;
use crate::num::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobilParams<S> {
    /// Politeness factor p.
    pub politeness: S,
    /// Changing threshold Δa_th, m/s².
    pub threshold: S,
    /// Maximum deceleration imposed on the new follower, m/s² (positive).
    pub b_safe: S,
}

impl<S: Scalar> Default for MobilParams<S> {
    fn default() -> Self {
        Self {
            politeness: S::lit(0.5),
            threshold: S::lit(0.2),
            b_safe: S::lit(4.0),
        }
    }
}

impl<S: Scalar> MobilParams<S> {
    pub fn validate(&self) -> Result<(), MobilityError> {
        let bad = |name, value: S| MobilityError::InvalidParameter {
            name,
            value: value.to_f64().unwrap_or(f64::NAN),
        };
        if !(self.politeness.is_finite() && self.politeness >= S::zero()) {
            return Err(bad("politeness", self.politeness));
        }
        if !(self.threshold.is_finite() && self.threshold > S::zero()) {
            return Err(bad("threshold", self.threshold));
        }
        if !(self.b_safe.is_finite() && self.b_safe > S::zero()) {
            return Err(bad("b_safe", self.b_safe));
        }
        Ok(())
    }
}

/// Accelerations before ("now") and after a hypothetical lane change.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaneChangeCandidate<S> {
    pub ego_now: S,
    pub ego_after: S,
    /// Vehicle that would end up directly behind the ego in the target lane.
    pub new_follower: Option<FollowerAccelerations<S>>,
    /// Vehicle currently directly behind the ego.
    pub old_follower: Option<FollowerAccelerations<S>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FollowerAccelerations<S> {
    pub now: S,
    pub after: S,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaneDecision {
    Stay,
    ChangeLeft,
    ChangeRight,
}

impl<S: Scalar> LaneChangeCandidate<S> {
    /// The new follower would not need to brake harder than `b_safe`.
    pub fn is_safe(&self, params: &MobilParams<S>) -> bool {
        self.new_follower.is_none_or(|f| f.after >= -params.b_safe)
    }

    /// Ego gain minus the politeness-weighted loss of both followers minus
    /// the threshold. Positive means the incentive criterion holds.
    pub fn incentive_margin(&self, params: &MobilParams<S>) -> S {
        let loss = |f: Option<FollowerAccelerations<S>>| f.map_or(S::zero(), |f| f.now - f.after);
        let gain = self.ego_after - self.ego_now;
        gain - params.politeness * (loss(self.new_follower) + loss(self.old_follower)) - params.threshold
    }

    pub fn accepted(&self, params: &MobilParams<S>) -> bool {
        self.is_safe(params) && self.incentive_margin(params) > S::zero()
    }
}

/// Picks the admissible side with the larger incentive margin; ties go right.
pub fn mobil_decide<S: Scalar>(
    params: &MobilParams<S>,
    left: Option<&LaneChangeCandidate<S>>,
    right: Option<&LaneChangeCandidate<S>>,
) -> LaneDecision {
    let margin = |c: Option<&LaneChangeCandidate<S>>| c.filter(|c| c.accepted(params)).map(|c| c.incentive_margin(params));
    match (margin(left), margin(right)) {
        (None, None) => LaneDecision::Stay,
        (Some(_), None) => LaneDecision::ChangeLeft,
        (None, Some(_)) => LaneDecision::ChangeRight,
        (Some(l), Some(r)) if l > r => LaneDecision::ChangeLeft,
        (Some(_), Some(_)) => LaneDecision::ChangeRight,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::IdmParams;

    #[test]
    fn blocked_lane_with_empty_neighbour_triggers_change() {
        // Ego at 10 m/s, leader stopped 10 m ahead, target lane empty, p = 0.
        let idm = IdmParams::<f64>::default();
        let mobil = MobilParams {
            politeness: 0.0,
            ..MobilParams::default()
        };
        let now = idm.acceleration(10.0, 13.89, 10.0, 10.0).unwrap();
        let after = idm.acceleration(10.0, 13.89, 0.0, f64::INFINITY).unwrap();
        let c = LaneChangeCandidate {
            ego_now: now,
            ego_after: after,
            new_follower: None,
            old_follower: None,
        };
        // Evaluated by hand: now = -29.745, after = 1.0239.
        assert!((now + 29.745_334).abs() < 1e-5);
        assert!((after - 1.023_886).abs() < 1e-5);
        assert!((c.incentive_margin(&mobil) - (after - now - 0.2)).abs() < 1e-12);
        assert_eq!(mobil_decide(&mobil, Some(&c), None), LaneDecision::ChangeLeft);
    }

    #[test]
    fn safety_vetoes_any_incentive() {
        let mobil = MobilParams::<f64>::default();
        let c = LaneChangeCandidate {
            ego_now: -8.0,
            ego_after: 1.0,
            new_follower: Some(FollowerAccelerations { now: 0.0, after: -4.01 }),
            old_follower: None,
        };
        assert!(!c.is_safe(&mobil));
        assert_eq!(mobil_decide(&mobil, Some(&c), Some(&c)), LaneDecision::Stay);
    }

    #[test]
    fn identical_lanes_stay() {
        let mobil = MobilParams::<f64>::default();
        let c = LaneChangeCandidate {
            ego_now: 0.3,
            ego_after: 0.3,
            new_follower: Some(FollowerAccelerations { now: 0.1, after: 0.1 }),
            old_follower: Some(FollowerAccelerations { now: 0.1, after: 0.1 }),
        };
        assert_eq!(c.incentive_margin(&mobil), -0.2);
        assert_eq!(mobil_decide(&mobil, Some(&c), Some(&c)), LaneDecision::Stay);
    }

    #[test]
    fn politeness_weighs_follower_losses() {
        let c = LaneChangeCandidate {
            ego_now: 0.0f64,
            ego_after: 1.0,
            new_follower: Some(FollowerAccelerations { now: 0.5, after: -0.5 }),
            old_follower: Some(FollowerAccelerations { now: -0.2, after: 0.0 }),
        };
        let selfish = MobilParams { politeness: 0.0, ..MobilParams::default() };
        let polite = MobilParams { politeness: 1.0, ..MobilParams::default() };
        // gain 1.0; follower net loss 1.0 - 0.2 = 0.8
        assert!((c.incentive_margin(&selfish) - 0.8).abs() < 1e-12);
        assert!((c.incentive_margin(&polite) - 0.0).abs() < 1e-12);
        assert!(c.accepted(&selfish));
        assert!(!c.accepted(&polite));
    }

    #[test]
    fn better_side_wins_and_ties_go_right() {
        let mobil = MobilParams::<f64>::default();
        let mk = |after| LaneChangeCandidate {
            ego_now: 0.0,
            ego_after: after,
            new_follower: None,
            old_follower: None,
        };
        assert_eq!(mobil_decide(&mobil, Some(&mk(1.0)), Some(&mk(0.5))), LaneDecision::ChangeLeft);
        assert_eq!(mobil_decide(&mobil, Some(&mk(0.5)), Some(&mk(1.0))), LaneDecision::ChangeRight);
        assert_eq!(mobil_decide(&mobil, Some(&mk(1.0)), Some(&mk(1.0))), LaneDecision::ChangeRight);
    }

    #[test]
    fn validate_requires_positive_threshold() {
        let mut m = MobilParams::<f64>::default();
        assert!(m.validate().is_ok());
        m.threshold = 0.0;
        assert!(m.validate().is_err());
    }
}
