use std::time::Instant;

/// Wall-clock access that can be switched off for reproducible output.
#[derive(Debug, Clone, Copy)]
pub struct Clock {
    enabled: bool,
}

impl Clock {
    pub fn new(enabled: bool) -> Self {
        Clock { enabled }
    }

    /// RFC 3339 UTC timestamp, or `None` when disabled.
    pub fn timestamp(&self) -> Option<String> {
        self.enabled
            .then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true))
    }

    pub fn seconds(&self, measured: f64) -> f64 {
        if self.enabled {
            measured
        } else {
            0.0
        }
    }

    pub fn since(&self, start: Instant) -> f64 {
        self.seconds(start.elapsed().as_secs_f64())
    }
}
