//! Reference trajectory of the pushed object: timed planar pose and twist
//! samples with linear interpolation.

use alloc::vec::Vec;

use nalgebra::Vector2;

use crate::math::wrap_angle;

/// One interpolated query result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefPoint {
    pub psi: f64,
    pub pos: Vector2<f64>,
    pub omega: f64,
    pub vel: Vector2<f64>,
}

/// A sample of the desired object trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefSample {
    pub t: f64,
    pub psi: f64,
    pub pos: Vector2<f64>,
    pub omega: f64,
    pub vel: Vector2<f64>,
}

/// Piecewise-linear object reference. Times are strictly increasing; queries
/// outside the sampled range clamp to the first/last sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    samples: Vec<RefSample>,
}

impl ReferenceTrajectory {
    /// Panics if `samples` is empty or times are not strictly increasing.
    pub fn new(samples: Vec<RefSample>) -> Self {
        assert!(!samples.is_empty(), "reference needs at least one sample");
        for w in samples.windows(2) {
            assert!(w[1].t > w[0].t, "reference times must be strictly increasing");
        }
        Self { samples }
    }

    pub fn samples(&self) -> &[RefSample] {
        &self.samples
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    /// Final sample, i.e. the target state at the end of the task.
    pub fn endpoint(&self) -> RefPoint {
        let s = self.samples[self.samples.len() - 1];
        RefPoint { psi: s.psi, pos: s.pos, omega: s.omega, vel: s.vel }
    }

    /// Interpolated reference at time `t`; exact at sample points. Heading is
    /// interpolated through the wrapped difference so a path crossing +-pi
    /// stays continuous.
    pub fn sample(&self, t: f64) -> RefPoint {
        let s = &self.samples;
        if t <= s[0].t {
            let a = s[0];
            return RefPoint { psi: a.psi, pos: a.pos, omega: a.omega, vel: a.vel };
        }
        if t >= s[s.len() - 1].t {
            return self.endpoint();
        }
        // first sample with time > t; partition_point keeps this O(log n)
        let hi = s.partition_point(|x| x.t <= t);
        let (a, b) = (s[hi - 1], s[hi]);
        let u = (t - a.t) / (b.t - a.t);
        RefPoint {
            psi: wrap_angle(a.psi + u * wrap_angle(b.psi - a.psi)),
            pos: a.pos + (b.pos - a.pos) * u,
            omega: a.omega + (b.omega - a.omega) * u,
            vel: a.vel + (b.vel - a.vel) * u,
        }
    }
}
