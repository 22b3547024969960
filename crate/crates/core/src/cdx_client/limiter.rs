use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::time::Clock;

/// Spaces requests at least `1/rate` apart. Callers block inside
/// [`RateLimiter::acquire`], which serializes them.
pub struct RateLimiter {
    interval: Duration,
    clock: Arc<dyn Clock>,
    state: Mutex<LimiterState>,
}

#[derive(Default)]
struct LimiterState {
    next_slot: Option<Duration>,
    waited: Duration,
    granted: u64,
}

impl RateLimiter {
    pub fn new(requests_per_second: f64, clock: Arc<dyn Clock>) -> Self {
        let interval = if requests_per_second.is_finite() && requests_per_second > 0.0 {
            Duration::from_secs_f64(1.0 / requests_per_second)
        } else {
            Duration::ZERO
        };
        RateLimiter {
            interval,
            clock,
            state: Mutex::new(LimiterState::default()),
        }
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    pub fn acquire(&self) {
        let mut st = self.state.lock().unwrap();
        let now = self.clock.elapsed();
        let slot = match st.next_slot {
            Some(next) if next > now => {
                let wait = next - now;
                self.clock.sleep(wait);
                st.waited += wait;
                next
            }
            _ => now,
        };
        st.next_slot = Some(slot + self.interval);
        st.granted += 1;
    }

    /// Total time callers spent blocked.
    pub fn waited(&self) -> Duration {
        self.state.lock().unwrap().waited
    }

    pub fn granted(&self) -> u64 {
        self.state.lock().unwrap().granted
    }
}

/// One limiter per host, created on first use.
pub struct RateLimiters {
    rate: f64,
    clock: Arc<dyn Clock>,
    by_host: Mutex<HashMap<String, Arc<RateLimiter>>>,
}

impl RateLimiters {
    pub fn new(requests_per_second: f64, clock: Arc<dyn Clock>) -> Self {
        RateLimiters {
            rate: requests_per_second,
            clock,
            by_host: Mutex::new(HashMap::new()),
        }
    }

    pub fn for_host(&self, host: &str) -> Arc<RateLimiter> {
        self.by_host
            .lock()
            .unwrap()
            .entry(host.to_string())
            .or_insert_with(|| Arc::new(RateLimiter::new(self.rate, self.clock.clone())))
            .clone()
    }

    pub fn total_waited(&self) -> Duration {
        self.by_host.lock().unwrap().values().map(|l| l.waited()).sum()
    }
}
