//! Injectable monotonic clocks.
//!
//! Every timestamp the pipeline records goes through a [`Clock`], so rate
//! limiting and completion telemetry can be driven by a mock in tests and by
//! a recorded schedule when replaying fixture runs.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

pub trait Clock: Send + Sync {
    /// Time elapsed since the run started.
    fn elapsed(&self) -> Duration;

    fn sleep(&self, d: Duration);

    /// Completion offset in seconds to record for `database`.
    fn completion_seconds(&self, _database: &str) -> f64 {
        self.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SystemClock {
    start: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        Self {
            start: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d)
    }
}

/// A clock that only moves when told to. `sleep` advances it instantly.
#[derive(Debug, Default)]
pub struct ManualClock {
    now: Mutex<Duration>,
}

impl ManualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn advance(&self, d: Duration) {
        *self.now.lock().unwrap() += d;
    }
}

impl Clock for ManualClock {
    fn elapsed(&self) -> Duration {
        *self.now.lock().unwrap()
    }

    fn sleep(&self, d: Duration) {
        self.advance(d)
    }
}

/// Recorded per-database completion offsets, in seconds since run start.
pub type TimingSchedule = BTreeMap<String, f64>;

/// Wraps another clock and reports scheduled completion offsets for the
/// databases named in the schedule. Unscheduled databases fall through to
/// the inner clock.
pub struct ReplayClock<C> {
    inner: C,
    schedule: TimingSchedule,
}

impl<C: Clock> ReplayClock<C> {
    pub fn new(inner: C, schedule: TimingSchedule) -> Self {
        Self { inner, schedule }
    }

    pub fn schedule(&self) -> &TimingSchedule {
        &self.schedule
    }
}

impl<C: Clock> Clock for ReplayClock<C> {
    fn elapsed(&self) -> Duration {
        self.inner.elapsed()
    }

    fn sleep(&self, d: Duration) {
        self.inner.sleep(d)
    }

    fn completion_seconds(&self, database: &str) -> f64 {
        match self.schedule.get(database) {
            Some(t) => *t,
            None => self.inner.completion_seconds(database),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manual_clock_moves_on_sleep() {
        let c = ManualClock::new();
        assert_eq!(c.elapsed(), Duration::ZERO);
        c.sleep(Duration::from_millis(250));
        c.advance(Duration::from_millis(750));
        assert_eq!(c.completion_seconds("any"), 1.0);
    }

    #[test]
    fn replay_overrides_scheduled_names_only() {
        let inner = ManualClock::new();
        inner.advance(Duration::from_secs(9));
        let clock = ReplayClock::new(inner, [("ew".to_string(), 2.88)].into_iter().collect());
        assert_eq!(clock.completion_seconds("ew"), 2.88);
        assert_eq!(clock.completion_seconds("ya"), 9.0);
    }
}
