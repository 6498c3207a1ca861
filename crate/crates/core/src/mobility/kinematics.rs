use crate::num::Scalar;

/// Ballistic position/speed update over one step.
///
/// Returns `(displacement, new_speed)`. When the speed would turn negative
/// within the step, the vehicle stops at `v² / (2 |acc|)` instead of rolling
/// backwards.
pub fn ballistic_update<S: Scalar>(v: S, acc: S, dt: S) -> (S, S) {
    let v_next = v + acc * dt;
    if v_next < S::zero() {
        // Only reachable with acc < 0.
        (-(v * v) / (S::two() * acc), S::zero())
    } else {
        (v * dt + S::half() * acc * dt * dt, v_next)
    }
}
