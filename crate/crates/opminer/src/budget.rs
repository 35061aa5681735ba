//! Wall-clock mining budgets.

use std::time::{Duration, Instant};

use opminer_core::Budget;

pub const BUDGET_ENV: &str = "OPMINER_TIME_BUDGET_S";

/// Expires a fixed time after creation; unlimited without a limit.
#[derive(Clone, Copy, Debug)]
pub struct WallClock {
    deadline: Option<Instant>,
}

impl WallClock {
    pub fn new(limit: Option<Duration>) -> Self {
        WallClock { deadline: limit.map(|d| Instant::now() + d) }
    }

    pub fn unlimited() -> Self {
        WallClock { deadline: None }
    }
}

impl Budget for WallClock {
    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// Seconds from the environment when set, else `fallback`.
pub fn budget_seconds(fallback: Option<f64>) -> Result<Option<f64>, String> {
    match std::env::var(BUDGET_ENV) {
        Ok(v) => match v.trim().parse::<f64>() {
            Ok(s) if s.is_finite() && s >= 0.0 => Ok(Some(s)),
            _ => Err(format!("{BUDGET_ENV}={v:?} is not a non-negative number of seconds")),
        },
        Err(_) => Ok(fallback),
    }
}

pub fn from_seconds(s: Option<f64>) -> WallClock {
    WallClock::new(s.map(Duration::from_secs_f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_budget_expires_at_once() {
        assert!(from_seconds(Some(0.0)).expired());
        assert!(!from_seconds(Some(3600.0)).expired());
        assert!(!WallClock::unlimited().expired());
    }
}
