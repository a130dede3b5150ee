/// Source of wall-clock time, in seconds from an arbitrary epoch.
///
/// Only used for compute-time metrics and solver time budgets; simulated time
/// never reads it.
pub trait Clock {
    fn now(&self) -> f64;
}

/// A clock that never advances. Makes every run independent of machine speed.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn now(&self) -> f64 {
        0.0
    }
}

impl<C: Clock + ?Sized> Clock for &C {
    fn now(&self) -> f64 {
        (**self).now()
    }
}
