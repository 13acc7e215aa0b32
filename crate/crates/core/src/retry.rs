//! Exponential-backoff retry policy.

use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Total attempts, including the first one. At least 1.
    pub max_attempts: u32,
    #[serde(with = "millis")]
    pub initial_backoff: Duration,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3, initial_backoff: Duration::from_millis(50), multiplier: 2.0 }
    }
}

/// Outcome of [`RetryPolicy::run`]: the value or last error, and how many retries were spent.
#[derive(Debug)]
pub struct Attempted<T> {
    pub result: T,
    pub retries: u32,
}

impl RetryPolicy {
    /// A policy that makes `1 + retries` attempts.
    pub fn with_retries(retries: u32, initial_backoff: Duration) -> Self {
        RetryPolicy { max_attempts: retries + 1, initial_backoff, ..Default::default() }
    }

    /// Delay before retry number `retry` (1-based). Non-decreasing in `retry`.
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = self.multiplier.max(1.0).powi(retry.saturating_sub(1) as i32);
        self.initial_backoff.mul_f64(factor.min(1e6))
    }

    /// Runs `op` until it succeeds, fails with a non-retryable error, or attempts run out.
    ///
    /// `op` receives the 0-based attempt number.
    pub fn run<T, E>(
        &self,
        mut op: impl FnMut(u32) -> Result<T, E>,
        retryable: impl Fn(&E) -> bool,
    ) -> Attempted<Result<T, E>> {
        let attempts = self.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            match op(attempt) {
                Ok(v) => return Attempted { result: Ok(v), retries: attempt },
                Err(e) if attempt + 1 < attempts && retryable(&e) => {
                    attempt += 1;
                    std::thread::sleep(self.backoff(attempt));
                }
                Err(e) => return Attempted { result: Err(e), retries: attempt },
            }
        }
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles() {
        let p = RetryPolicy::default();
        assert_eq!(p.backoff(1), Duration::from_millis(50));
        assert_eq!(p.backoff(2), Duration::from_millis(100));
        assert_eq!(p.backoff(3), Duration::from_millis(200));
    }

    #[test]
    fn stops_after_max_attempts() {
        let p = RetryPolicy { initial_backoff: Duration::ZERO, ..Default::default() };
        let mut calls = 0;
        let out = p.run(
            |_| {
                calls += 1;
                Err::<(), _>("boom")
            },
            |_| true,
        );
        assert_eq!(calls, 3);
        assert_eq!(out.retries, 2);
        assert!(out.result.is_err());
    }

    #[test]
    fn terminal_errors_are_not_retried() {
        let p = RetryPolicy { initial_backoff: Duration::ZERO, ..Default::default() };
        let out = p.run(|_| Err::<(), _>(404), |e| *e != 404);
        assert_eq!(out.retries, 0);
    }

    #[test]
    fn succeeds_on_later_attempt() {
        let p = RetryPolicy { initial_backoff: Duration::ZERO, ..Default::default() };
        let out = p.run(|a| if a < 2 { Err("transient") } else { Ok(a) }, |_| true);
        assert_eq!(out.result, Ok(2));
        assert_eq!(out.retries, 2);
    }
}
