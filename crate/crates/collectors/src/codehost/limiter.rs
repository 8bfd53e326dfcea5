use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

/// Token bucket shared by every collector talking to one host. A host-wide
/// block (after a rate-limit response) stalls all holders until it expires.
#[derive(Debug, Clone)]
pub struct HostLimiter {
    inner: Arc<Mutex<Bucket>>,
}

#[derive(Debug)]
struct Bucket {
    rate: f64,
    burst: f64,
    tokens: f64,
    refilled: Instant,
    blocked_until: Option<Instant>,
}

impl HostLimiter {
    /// `rate` requests per second on average, bursts of up to `burst`.
    pub fn new(rate: f64, burst: u32) -> Self {
        let burst = f64::from(burst.max(1));
        HostLimiter {
            inner: Arc::new(Mutex::new(Bucket {
                rate: if rate.is_finite() && rate > 0.0 { rate } else { f64::INFINITY },
                burst,
                tokens: burst,
                refilled: Instant::now(),
                blocked_until: None,
            })),
        }
    }

    pub fn unlimited() -> Self {
        Self::new(f64::INFINITY, 1)
    }

    /// Waits until a request may be sent.
    pub async fn acquire(&self) {
        loop {
            let wait = {
                let mut b = self.inner.lock().expect("limiter poisoned");
                let now = Instant::now();
                match b.blocked_until {
                    Some(until) if until > now => until - now,
                    _ => {
                        b.blocked_until = None;
                        if b.rate.is_infinite() {
                            return;
                        }
                        let elapsed = now.duration_since(b.refilled).as_secs_f64();
                        b.tokens = (b.tokens + elapsed * b.rate).min(b.burst);
                        b.refilled = now;
                        if b.tokens >= 1.0 {
                            b.tokens -= 1.0;
                            return;
                        }
                        Duration::from_secs_f64((1.0 - b.tokens) / b.rate)
                    }
                }
            };
            tokio::time::sleep(wait).await;
        }
    }

    /// Blocks the host until `until` (never shortens an existing block).
    pub fn block_until(&self, until: Instant) {
        let mut b = self.inner.lock().expect("limiter poisoned");
        b.blocked_until = Some(b.blocked_until.map_or(until, |cur| cur.max(until)));
    }

    pub fn blocked_until(&self) -> Option<Instant> {
        self.inner.lock().expect("limiter poisoned").blocked_until
    }
}
