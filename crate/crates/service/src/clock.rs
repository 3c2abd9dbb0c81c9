use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

/// Server time in microseconds. Grids and deadlines are expressed in it.
pub trait Clock: Send + Sync {
    fn now_us(&self) -> u64;
}

/// Wall-clock start, monotonic afterwards.
#[derive(Debug)]
pub struct SystemClock {
    base_us: u64,
    started: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        let base_us = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_micros() as u64);
        SystemClock { base_us, started: Instant::now() }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_us(&self) -> u64 {
        self.base_us + self.started.elapsed().as_micros() as u64
    }
}

/// A clock that only moves when told to.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start_us: u64) -> Self {
        ManualClock(AtomicU64::new(start_us))
    }

    pub fn set(&self, us: u64) {
        self.0.store(us, Ordering::SeqCst);
    }

    pub fn advance(&self, us: u64) {
        self.0.fetch_add(us, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_us(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

/// One ping: client send time, the server's reply stamp, client receive time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PingSample {
    pub client_sent_us: u64,
    pub server_us: u64,
    pub client_received_us: u64,
}

impl PingSample {
    /// Client minus server, assuming a symmetric round trip.
    pub fn offset_us(&self) -> i64 {
        let midpoint = (self.client_sent_us + self.client_received_us) / 2;
        midpoint as i64 - self.server_us as i64
    }
}

/// Median of the per-ping offsets (lower middle for even counts).
pub fn median_offset(samples: &[PingSample]) -> Option<i64> {
    let mut offsets: Vec<i64> = samples.iter().map(PingSample::offset_us).collect();
    offsets.sort_unstable();
    offsets.get(offsets.len().checked_sub(1)? / 2).copied()
}
