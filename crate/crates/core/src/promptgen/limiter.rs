use std::collections::VecDeque;
use std::time::{Duration, Instant};

use parking_lot::Mutex;

/// Shared request limiter: at most `capacity` permits in any rolling window.
///
/// A rate of `r ≥ 1` requests per second gives `⌊r⌋` permits per second; a
/// rate below one gives a single permit every `1/r` seconds. Each window is
/// padded by a few milliseconds so that timestamps taken by the caller just
/// after the permit still respect the limit.
#[derive(Debug)]
pub struct RateLimiter {
    capacity: usize,
    window: Duration,
    granted: Mutex<VecDeque<Instant>>,
}

const GUARD: Duration = Duration::from_millis(5);

impl RateLimiter {
    pub fn per_second(rate: f64) -> Self {
        assert!(
            rate.is_finite() && rate > 0.0,
            "rate must be positive, got {rate}"
        );
        let (capacity, window) = if rate >= 1.0 {
            (rate.floor() as usize, Duration::from_secs(1))
        } else {
            (1, Duration::from_secs_f64(1.0 / rate))
        };
        RateLimiter {
            capacity,
            window: window + GUARD,
            granted: Mutex::new(VecDeque::with_capacity(capacity)),
        }
    }

    /// Blocks until a permit is available.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut granted = self.granted.lock();
                let now = Instant::now();
                while granted
                    .front()
                    .is_some_and(|t| now.duration_since(*t) >= self.window)
                {
                    granted.pop_front();
                }
                if granted.len() < self.capacity {
                    granted.push_back(now);
                    return;
                }
                self.window - now.duration_since(granted[0])
            };
            std::thread::sleep(wait);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn never_more_than_rate_in_a_second() {
        let limiter = RateLimiter::per_second(20.0);
        let start = Instant::now();
        let stamps: Vec<Instant> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..4)
                .map(|_| {
                    s.spawn(|| {
                        (0..10)
                            .map(|_| {
                                limiter.acquire();
                                Instant::now()
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().unwrap())
                .collect()
        });
        let mut stamps = stamps;
        stamps.sort();
        for (i, t) in stamps.iter().enumerate() {
            let in_window = stamps[i..]
                .iter()
                .take_while(|u| u.duration_since(*t) < Duration::from_secs(1))
                .count();
            assert!(in_window <= 20, "{in_window} requests within one second");
        }
        // 40 requests at 20/s need at least one full extra window
        assert!(start.elapsed() >= Duration::from_secs(1));
    }

    #[test]
    fn slow_rates_space_requests() {
        let limiter = RateLimiter::per_second(0.5);
        assert_eq!(limiter.capacity, 1);
        assert!(limiter.window >= Duration::from_secs(2));
    }
}
