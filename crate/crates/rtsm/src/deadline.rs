use std::time::{Duration, Instant};

use rtsm_core::StopCondition;

/// Wall-clock stop condition: asks the solver to wind down once the
/// deadline passes. Solvers keep their anytime contract, so a hit deadline
/// truncates search, never correctness.
#[derive(Debug, Clone, Copy)]
pub struct Deadline {
    end: Instant,
}

impl Deadline {
    pub fn after(duration: Duration) -> Self {
        Deadline {
            end: Instant::now() + duration,
        }
    }

    pub fn after_seconds(seconds: f64) -> Self {
        Deadline::after(Duration::from_secs_f64(seconds))
    }

    /// Whether the deadline has passed (same answer `should_stop` gives).
    pub fn expired(&self) -> bool {
        Instant::now() >= self.end
    }
}

impl StopCondition for Deadline {
    fn should_stop(&self) -> bool {
        self.expired()
    }
}
