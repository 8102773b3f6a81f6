//! Anytime-search stop conditions.
//!
//! The core is `no_std`, so wall-clock deadlines are injected from outside
//! through this trait; the companion crate provides an `Instant`-based one.

/// Polled between oracle calls; once it reports true the solvers stop
/// opening new work and return the best feasible answer found so far.
pub trait StopCondition: Sync {
    fn should_stop(&self) -> bool;
}

/// Never stops; used when no deadline is configured and in tests.
#[derive(Debug, Clone, Copy, Default)]
pub struct Never;

impl StopCondition for Never {
    fn should_stop(&self) -> bool {
        false
    }
}

impl<T: StopCondition + ?Sized> StopCondition for &T {
    fn should_stop(&self) -> bool {
        (**self).should_stop()
    }
}
