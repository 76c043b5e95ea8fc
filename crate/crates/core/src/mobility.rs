//! Agent motion: uncorrelated random walk for point agents, pivot-then-go
//! differential drive with multiplicative speed noise for embodied robots.
//!
//! Both models share the same reorientation schedule (a fresh uniform
//! direction every `turn_steps` steps). Point agents realign instantly and
//! move noise-free; embodied robots spend steps turning in place at angular
//! speed omega before they advance, which is what lowers their diffusion.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::seed::{self, STREAM_WALKER};
use crate::vec2::Vec2;

/// Position (meters) plus heading, kept in `[0, 2*pi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub position: Vec2,
    pub heading: f64,
}

/// Kinematic parameters: forward speed `v`, angular speed `omega`,
/// multiplicative noise sigma, step size `dt` and the reorientation period
/// `turn_steps` (`n_m`, so `tau_m = n_m * dt`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotionParams {
    pub speed: f64,
    pub angular_speed: f64,
    pub noise_sigma: f64,
    pub dt: f64,
    pub turn_steps: u32,
}

impl MotionParams {
    pub fn tau_m(&self) -> f64 {
        self.turn_steps as f64 * self.dt
    }
}

/// Noise gain floor: the multiplicative speed noise never reverses motion.
pub const NOISE_GAIN_FLOOR: f64 = -0.99;

/// Wraps an angle into `[0, 2*pi)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Signed shortest rotation from `from` to `to`, in `(-pi, pi]`.
pub fn angle_diff(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Draws a motion direction, uniform on `[0, 2*pi)`.
pub fn sample_heading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>() * TAU
}

/// One point-agent step: redraw the heading when `step` hits the
/// reorientation schedule, then advance `v * dt` along it. The returned
/// position is unwrapped; periodic boundary handling belongs to the arena.
pub fn point_step<R: Rng + ?Sized>(
    pose: Pose,
    params: &MotionParams,
    step: u64,
    rng: &mut R,
) -> Pose {
    let heading = if step % params.turn_steps as u64 == 0 {
        sample_heading(rng)
    } else {
        pose.heading
    };
    Pose {
        position: pose.position + Vec2::from_angle(heading) * (params.speed * params.dt),
        heading,
    }
}

/// One differential-drive step toward `target`.
///
/// While the heading is off by more than `omega * dt` the robot pivots in
/// place along the shorter arc and does not advance (`reached = false`).
/// Once alignable it snaps to the target heading and advances
/// `v * dt * (1 + g)` with `g ~ Normal(0, sigma^2)` clamped at
/// [`NOISE_GAIN_FLOOR`] (`reached = true`).
pub fn embodied_step<R: Rng + ?Sized>(
    pose: Pose,
    target: f64,
    params: &MotionParams,
    rng: &mut R,
) -> (Pose, bool) {
    let diff = angle_diff(pose.heading, target);
    let max_turn = params.angular_speed * params.dt;
    if diff.abs() > max_turn {
        let heading = normalize_angle(pose.heading + max_turn.copysign(diff));
        (Pose { heading, ..pose }, false)
    } else {
        let gain = if params.noise_sigma > 0.0 {
            let g = Normal::new(0.0, params.noise_sigma)
                .expect("sigma validated non-negative")
                .sample(rng);
            g.max(NOISE_GAIN_FLOOR)
        } else {
            0.0
        };
        let step = params.speed * params.dt * (1.0 + gain);
        let position = pose.position + Vec2::from_angle(target) * step;
        (Pose { position, heading: normalize_angle(target) }, true)
    }
}

/// Target heading held between reorientations of the random walk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkState {
    pub target: f64,
}

/// Random-walk controller: emits a fresh uniform target every `turn_steps`
/// steps and holds it otherwise. Point agents apply the target instantly;
/// embodied robots keep pivoting toward it across steps.
pub fn walk_target<R: Rng + ?Sized>(
    state: &mut WalkState,
    step: u64,
    turn_steps: u32,
    rng: &mut R,
) -> f64 {
    if step % turn_steps as u64 == 0 {
        state.target = sample_heading(rng);
    }
    state.target
}

/// Which movement model a free walker follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WalkerModel {
    Point,
    Embodied,
}

/// Simulates `count` independent walkers on an unbounded plane, all starting
/// at the origin with uniform headings, and returns their positions sampled
/// every `sample_every` steps (initial position included).
///
/// This is the measurement ensemble for diffusion estimates: no arena, no
/// interactions, just the motion model.
pub fn walker_ensemble(
    model: WalkerModel,
    params: &MotionParams,
    count: usize,
    steps: u64,
    sample_every: u64,
    seed: u64,
) -> Vec<Vec<Vec2>> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(seed, STREAM_WALKER, i as u64));
            let heading = sample_heading(&mut rng);
            let mut pose = Pose { position: Vec2::ZERO, heading };
            let mut walk = WalkState { target: heading };
            let mut trajectory = Vec::with_capacity((steps / sample_every) as usize + 1);
            trajectory.push(pose.position);
            for step in 1..=steps {
                match model {
                    WalkerModel::Point => {
                        pose = point_step(pose, params, step, &mut rng);
                    }
                    WalkerModel::Embodied => {
                        let target = walk_target(&mut walk, step, params.turn_steps, &mut rng);
                        pose = embodied_step(pose, target, params, &mut rng).0;
                    }
                }
                if step % sample_every == 0 {
                    trajectory.push(pose.position);
                }
            }
            trajectory
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(speed: f64, sigma: f64, turn_steps: u32) -> MotionParams {
        MotionParams {
            speed,
            angular_speed: PI / 5.0,
            noise_sigma: sigma,
            dt: 0.1,
            turn_steps,
        }
    }

    #[test]
    fn sampled_headings_stay_in_range_and_average_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let (mut sum_cos, mut sum_sin) = (0.0, 0.0);
        for _ in 0..n {
            let h = sample_heading(&mut rng);
            assert!((0.0..TAU).contains(&h));
            sum_cos += h.cos();
            sum_sin += h.sin();
        }
        assert!((sum_cos / n as f64).abs() <= 0.01);
        assert!((sum_sin / n as f64).abs() <= 0.01);
    }

    #[test]
    fn sampling_is_reproducible_under_a_seed() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            assert_eq!(sample_heading(&mut a), sample_heading(&mut b));
        }
    }

    #[test]
    fn point_step_moves_straight_between_turns() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pose = Pose { position: Vec2::new(0.5, 0.5), heading: 0.0 };
        // step 1 with turn_steps 100: no turn due
        let next = point_step(pose, &params(0.01, 0.0, 100), 1, &mut rng);
        assert_abs_diff_eq!(next.position.x, 0.501, epsilon = 1e-12);
        assert_abs_diff_eq!(next.position.y, 0.5, epsilon = 1e-12);
        assert_eq!(next.heading, 0.0);
    }

    #[test]
    fn zero_speed_point_agent_never_moves() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut pose = Pose { position: Vec2::new(0.3, 0.7), heading: 1.0 };
        for step in 1..=500 {
            pose = point_step(pose, &params(0.0, 0.0, 10), step, &mut rng);
            assert_eq!(pose.position, Vec2::new(0.3, 0.7));
        }
    }

    #[test]
    fn point_displacement_norm_is_exactly_v_dt() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = params(0.01, 0.0, 7);
        let mut pose = Pose { position: Vec2::ZERO, heading: 0.0 };
        for step in 1..=200 {
            let next = point_step(pose, &p, step, &mut rng);
            assert_abs_diff_eq!((next.position - pose.position).norm(), 0.001, epsilon = 1e-15);
            pose = next;
        }
    }

    #[test]
    fn pivot_turn_advances_pi_over_50_per_step() {
        // omega = pi/5, dt = 0.1: a half-turn takes 50 steps, position fixed
        // while pivoting.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = params(0.01, 0.0, 1000);
        let per_step = p.angular_speed * p.dt;
        assert_abs_diff_eq!(per_step, PI / 50.0, epsilon = 1e-15);

        let mut pose = Pose { position: Vec2::new(0.2, 0.2), heading: 0.0 };
        let mut steps_to_align = 0;
        for step in 1..=60 {
            let before = pose;
            let (next, reached) = embodied_step(pose, PI, &p, &mut rng);
            if !reached {
                assert_eq!(next.position, before.position);
                assert_abs_diff_eq!(
                    angle_diff(before.heading, next.heading).abs(),
                    per_step,
                    epsilon = 1e-12
                );
                assert!(step < 51, "alignment overdue at step {step}");
            } else {
                steps_to_align = step;
                assert_eq!(next.heading, normalize_angle(PI));
                break;
            }
            pose = next;
        }
        assert!(
            (49..=51).contains(&steps_to_align),
            "took {steps_to_align} steps"
        );
    }

    #[test]
    fn rotation_never_overshoots() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = params(0.01, 0.0, 1000);
        let target = 2.5;
        let mut pose = Pose { position: Vec2::ZERO, heading: 5.9 };
        let mut last = angle_diff(pose.heading, target).abs();
        let mut reached_target = false;
        for _ in 0..200 {
            let (next, reached) = embodied_step(pose, target, &p, &mut rng);
            if reached {
                assert_eq!(angle_diff(next.heading, target), 0.0);
                reached_target = true;
                break;
            }
            let remaining = angle_diff(next.heading, target).abs();
            assert!(remaining < last);
            last = remaining;
            pose = next;
        }
        assert!(reached_target);
    }

    #[test]
    fn aligned_noiseless_step_matches_point_kinematics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = params(0.01, 0.0, 1000);
        let pose = Pose { position: Vec2::new(1.0, 1.0), heading: 0.7 };
        let (next, reached) = embodied_step(pose, 0.7, &p, &mut rng);
        assert!(reached);
        assert_abs_diff_eq!((next.position - pose.position).norm(), 0.001, epsilon = 1e-15);
        let expected = pose.position + Vec2::from_angle(0.7) * 0.001;
        assert_eq!(next.position, expected);
    }

    #[test]
    fn noisy_step_moments_match_sigma() {
        // 10^5 aligned steps at sigma = 0.4: mean displacement v*dt +- 1%,
        // std-dev 0.4 * v * dt +- 3%.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = params(0.01, 0.4, 1000);
        let pose = Pose { position: Vec2::ZERO, heading: 0.0 };
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let (next, reached) = embodied_step(pose, 0.0, &p, &mut rng);
            assert!(reached);
            let d = (next.position - pose.position).x;
            assert!(d > 0.0, "clamped noise never reverses motion");
            sum += d;
            sum_sq += d * d;
        }
        let base = p.speed * p.dt;
        let mean = sum / n as f64;
        let std = (sum_sq / n as f64 - mean * mean).sqrt();
        assert!((mean - base).abs() <= 0.01 * base, "mean = {mean}");
        assert!((std - 0.4 * base).abs() <= 0.03 * 0.4 * base, "std = {std}");
    }

    #[test]
    fn walk_targets_change_exactly_on_schedule() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut state = WalkState { target: 0.25 };
        let mut changes = Vec::new();
        let mut last = state.target;
        for step in 1..=500u64 {
            let t = walk_target(&mut state, step, 100, &mut rng);
            if t != last {
                changes.push(step);
                last = t;
            }
        }
        assert_eq!(changes, vec![100, 200, 300, 400, 500]);
    }

    #[test]
    fn turn_period_of_one_redraws_every_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut state = WalkState { target: 0.0 };
        let mut previous = f64::NAN;
        for step in 1..=50u64 {
            let t = walk_target(&mut state, step, 1, &mut rng);
            assert_ne!(t, previous);
            previous = t;
        }
    }

    #[test]
    fn walker_ensemble_is_deterministic() {
        let p = params(0.01, 0.4, 20);
        let a = walker_ensemble(WalkerModel::Embodied, &p, 3, 200, 10, 99);
        let b = walker_ensemble(WalkerModel::Embodied, &p, 3, 200, 10, 99);
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert_eq!(a[0].len(), 21);
    }
}
