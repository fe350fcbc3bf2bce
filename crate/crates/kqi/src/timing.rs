//! Wall-clock measurements.

use std::time::Instant;

use kqi_core::pipeline::ModelChain;
use kqi_core::selection::Clock;
use kqi_core::Matrix;

use crate::error::Result;

pub struct StdClock {
    origin: Instant,
}

impl StdClock {
    pub fn new() -> StdClock {
        StdClock { origin: Instant::now() }
    }
}

impl Default for StdClock {
    fn default() -> Self {
        StdClock::new()
    }
}

impl Clock for StdClock {
    fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }
}

/// Mean prediction time per sample in microseconds, after one warm-up pass.
pub fn ptime_us(chain: &ModelChain, x: &Matrix, repeats: usize) -> Result<f64> {
    chain.predict(x)?;
    let repeats = repeats.max(1);
    let start = Instant::now();
    for _ in 0..repeats {
        std::hint::black_box(chain.predict(std::hint::black_box(x))?);
    }
    let total = start.elapsed().as_secs_f64();
    Ok(total * 1e6 / (repeats * x.rows().max(1)) as f64)
}
