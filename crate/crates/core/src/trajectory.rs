//! Piecewise-linear space-time trajectories.

use serde::{Deserialize, Serialize};

use crate::geom::{Segment, State};

/// Ordered states with strictly increasing time; the robot moves at constant
/// velocity between consecutive states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<State>,
}

impl Trajectory {
    pub fn new(states: Vec<State>) -> Self {
        Trajectory { states }
    }

    pub fn first(&self) -> &State {
        &self.states[0]
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory is nonempty")
    }

    pub fn arrival_time(&self) -> f64 {
        self.last().t
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.states
            .windows(2)
            .map(|w| Segment::new(w[0].clone(), w[1].clone()))
    }

    /// Position at time `t`, holding the first/last position outside the
    /// trajectory's own time span.
    pub fn position_at(&self, t: f64) -> Vec<f64> {
        let first = self.first();
        if t <= first.t {
            return first.p.clone();
        }
        let last = self.last();
        if t >= last.t {
            return last.p.clone();
        }
        // first index whose time is >= t
        let k = self.states.partition_point(|s| s.t < t);
        let (a, b) = (&self.states[k - 1], &self.states[k]);
        let s = (t - a.t) / (b.t - a.t);
        a.p.iter().zip(&b.p).map(|(u, v)| u + s * (v - u)).collect()
    }

    /// Shifts every time stamp by `dt`.
    pub fn shifted(&self, dt: f64) -> Trajectory {
        Trajectory::new(
            self.states
                .iter()
                .map(|s| State::new(s.p.clone(), s.t + dt))
                .collect(),
        )
    }

    /// Minimum step between consecutive time stamps (infinite for one state).
    pub fn min_step(&self) -> f64 {
        self.states
            .windows(2)
            .map(|w| w[1].t - w[0].t)
            .fold(f64::INFINITY, f64::min)
    }
}
