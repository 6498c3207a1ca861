//! Intelligent Driver Model car-following law.

use serde::{Deserialize, Serialize};

use super::MobilityError;
use crate::num::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdmParams<S> {
    /// Desired speed, m/s, before the driver's speed factor.
    pub v0: S,
    /// Safe time headway, s.
    pub time_headway: S,
    /// Maximum acceleration, m/s².
    pub a_max: S,
    /// Comfortable deceleration, m/s² (positive).
    pub b_comf: S,
    /// Acceleration exponent.
    pub delta: S,
    /// Minimum bumper-to-bumper gap at standstill, m.
    pub s0: S,
}

impl<S: Scalar> Default for IdmParams<S> {
    fn default() -> Self {
        Self {
            v0: S::lit(13.89),
            time_headway: S::lit(1.5),
            a_max: S::lit(1.4),
            b_comf: S::lit(2.0),
            delta: S::lit(4.0),
            s0: S::lit(2.0),
        }
    }
}

impl<S: Scalar> IdmParams<S> {
    pub fn validate(&self) -> Result<(), MobilityError> {
        let fields = [
            ("v0", self.v0),
            ("time_headway", self.time_headway),
            ("a_max", self.a_max),
            ("b_comf", self.b_comf),
            ("delta", self.delta),
            ("s0", self.s0),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > S::zero()) {
                return Err(MobilityError::InvalidParameter {
                    name,
                    value: value.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(())
    }

    /// Desired dynamic gap s*(v, Δv). The dynamic part is floored at zero so
    /// a fast-receding leader never demands braking.
    pub fn desired_gap(&self, v: S, delta_v: S) -> S {
        let dynamic = v * self.time_headway + v * delta_v / (S::two() * (self.a_max * self.b_comf).sqrt());
        self.s0 + dynamic.max(S::zero())
    }

    /// Acceleration with no leader.
    pub fn free_acceleration(&self, v: S, v0_eff: S) -> S {
        self.a_max * (S::one() - (v / v0_eff).powf(self.delta))
    }

    /// IDM acceleration for own speed `v`, effective desired speed `v0_eff`,
    /// approach rate `delta_v` (own minus leader) and bumper-to-bumper `gap`.
    /// Pass `S::infinity()` as the gap for a free road.
    pub fn acceleration(&self, v: S, v0_eff: S, delta_v: S, gap: S) -> Result<S, MobilityError> {
        if gap.is_nan() || gap <= S::zero() {
            return Err(MobilityError::NonPositiveGap(gap.to_f64().unwrap_or(f64::NAN)));
        }
        let interaction = if gap.is_infinite() {
            S::zero()
        } else {
            let r = self.desired_gap(v, delta_v) / gap;
            r * r
        };
        Ok(self.free_acceleration(v, v0_eff) - self.a_max * interaction)
    }

    /// Gap at which a follower at speed `v` behind an equally fast leader
    /// neither accelerates nor brakes. Defined for `0 <= v < v0_eff`.
    pub fn equilibrium_gap(&self, v: S, v0_eff: S) -> S {
        self.desired_gap(v, S::zero()) / (S::one() - (v / v0_eff).powf(self.delta)).sqrt()
    }
}

/// Free-function form of [`IdmParams::acceleration`].
pub fn idm_acceleration<S: Scalar>(params: &IdmParams<S>, v: S, v0_eff: S, delta_v: S, gap: S) -> Result<S, MobilityError> {
    params.acceleration(v, v0_eff, delta_v, gap)
}
