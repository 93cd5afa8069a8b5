use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use super::{annotate, AnnotationRequest, Backend, GatewayError, RawResponse};

/// Exponential backoff for transient failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Total attempts per request, including the first.
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 5, base_delay: Duration::from_millis(500), max_delay: Duration::from_secs(30) }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        RetryPolicy { max_attempts: 1, base_delay: Duration::ZERO, max_delay: Duration::ZERO }
    }

    /// Delay before retry number `attempt` (1-based). A server-provided
    /// Retry-After wins when present, capped at `max_delay`.
    pub fn delay(&self, attempt: u32, err: &GatewayError) -> Duration {
        if let GatewayError::RateLimited { retry_after: Some(secs) } = err {
            return Duration::from_secs(*secs).min(self.max_delay);
        }
        let factor = 1u32.checked_shl(attempt.saturating_sub(1)).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

pub type BatchItem = Result<RawResponse, GatewayError>;

fn annotate_with_retry(req: &AnnotationRequest, backend: &dyn Backend, policy: &RetryPolicy) -> BatchItem {
    let mut attempt = 1;
    loop {
        match annotate(req, backend) {
            Err(e) if e.is_retryable() && attempt < policy.max_attempts => {
                thread::sleep(policy.delay(attempt, &e));
                attempt += 1;
            }
            other => return other,
        }
    }
}

/// Runs every request with at most `concurrency_limit` in flight.
///
/// Per-request failures are returned in place; the outer error is reserved
/// for batch-level failures reported by [`Backend::finish`].
pub fn run_batch(
    reqs: &[AnnotationRequest],
    backend: &dyn Backend,
    concurrency_limit: usize,
    policy: &RetryPolicy,
) -> Result<Vec<BatchItem>, GatewayError> {
    let workers = concurrency_limit.max(1).min(reqs.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<BatchItem>>> = Mutex::new((0..reqs.len()).map(|_| None).collect());

    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(req) = reqs.get(i) else { break };
                let item = annotate_with_retry(req, backend, policy);
                slots.lock().unwrap_or_else(|p| p.into_inner())[i] = Some(item);
            });
        }
    });

    backend.finish()?;
    Ok(slots
        .into_inner()
        .unwrap_or_else(|p| p.into_inner())
        .into_iter()
        .map(|s| s.expect("every slot filled"))
        .collect())
}
