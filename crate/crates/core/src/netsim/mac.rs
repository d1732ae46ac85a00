//! Abstract contention model for the RTS-CTS-DATA-ACK handshake.
//!
//! A handshake has two stages, RTS/CTS and DATA/ACK. Each stage fails
//! independently with probability
//!
//! ```text
//! p(k) = 1 - (1 - base_failure) * (1 - per_contender)^k
//! ```
//!
//! where `k` is the number of backlogged nodes within two hops of the
//! sender. A failed stage costs a retry; the sender backs off for a uniform
//! time in `[0, backoff_base * 2^retries]` and restarts from RTS. When a
//! stage's retry counter exceeds `retry_cap`, the frame is dropped.

use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MacParams {
    /// Per-stage failure probability with no contenders.
    pub base_failure: f64,
    /// Extra per-stage failure contributed by each backlogged contender.
    pub per_contender: f64,
    /// Retries allowed per stage before the frame is dropped.
    pub retry_cap: u32,
    /// Initial contention window, seconds; doubles on every failure.
    pub backoff_base: f64,
    /// Channel bit rate, bits per second.
    pub bitrate: f64,
    pub sifs: f64,
    pub difs: f64,
    /// Upper bound of the random deferral before a fresh frame, seconds.
    pub initial_window: f64,
}

impl Default for MacParams {
    fn default() -> Self {
        MacParams {
            base_failure: 0.002,
            per_contender: 0.05,
            retry_cap: 4,
            backoff_base: 0.020,
            bitrate: 250_000.0,
            sifs: 10e-6,
            difs: 50e-6,
            initial_window: 320e-6,
        }
    }
}

pub const RTS_BYTES: u32 = 20;
pub const CTS_BYTES: u32 = 14;
pub const ACK_BYTES: u32 = 14;
pub const MAC_HEADER_BYTES: u32 = 34;

impl MacParams {
    pub fn stage_failure(&self, contenders: usize) -> f64 {
        let keep = (1.0 - self.base_failure) * (1.0 - self.per_contender).powi(contenders as i32);
        (1.0 - keep).clamp(0.0, 1.0)
    }

    /// Airtime of `bytes` on the channel, microseconds (at least 1).
    pub fn airtime_us(&self, bytes: u32) -> u64 {
        ((bytes as f64 * 8.0 / self.bitrate) * 1e6).ceil().max(1.0) as u64
    }

    pub fn sifs_us(&self) -> u64 {
        (self.sifs * 1e6).round() as u64
    }

    pub fn difs_us(&self) -> u64 {
        (self.difs * 1e6).round() as u64
    }

    /// DIFS plus a random deferral, before the first attempt of a frame.
    pub fn access_delay_us<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.difs_us() + (rng.random_range(0.0..=self.initial_window) * 1e6) as u64
    }

    /// Random backoff after `retries` failures, microseconds.
    pub fn backoff_us<R: Rng + ?Sized>(&self, retries: u32, rng: &mut R) -> u64 {
        let window = self.backoff_base * f64::from(1u32 << retries.min(16));
        (rng.random_range(0.0..=window) * 1e6) as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HandshakeOutcome {
    pub complete: bool,
    /// RTS frames sent, including retries.
    pub rts_sent: u32,
}

/// Run one handshake, retries included, at a fixed contender count.
/// This is the timing-free core of what the simulator does per frame.
pub fn mac_handshake<R: Rng + ?Sized>(
    params: &MacParams,
    contenders: usize,
    rng: &mut R,
) -> HandshakeOutcome {
    let p = params.stage_failure(contenders);
    let (mut short_retries, mut long_retries, mut rts_sent) = (0, 0, 0);
    loop {
        rts_sent += 1;
        if rng.random::<f64>() < p {
            short_retries += 1;
            if short_retries > params.retry_cap {
                return HandshakeOutcome { complete: false, rts_sent };
            }
            continue;
        }
        if rng.random::<f64>() < p {
            long_retries += 1;
            if long_retries > params.retry_cap {
                return HandshakeOutcome { complete: false, rts_sent };
            }
            continue;
        }
        return HandshakeOutcome { complete: true, rts_sent };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    /// Completed handshakes per RTS sent, the quantity the handshake gene tracks.
    fn completion_ratio(params: &MacParams, contenders: usize, trials: usize, s: u64) -> f64 {
        let mut rng = seed::rng(s);
        let (mut done, mut rts) = (0u64, 0u64);
        for _ in 0..trials {
            let o = mac_handshake(params, contenders, &mut rng);
            done += o.complete as u64;
            rts += o.rts_sent as u64;
        }
        done as f64 / rts as f64
    }

    #[test]
    fn idle_medium_completes() {
        let p = MacParams::default();
        let mut rng = seed::rng(1);
        let complete = (0..20_000)
            .filter(|_| mac_handshake(&p, 0, &mut rng).complete)
            .count();
        assert!(complete as f64 / 20_000.0 >= 0.99);
        assert!(completion_ratio(&p, 0, 20_000, 2) >= 0.99);
    }

    #[test]
    fn forced_failure_without_retries_is_incomplete() {
        let p = MacParams {
            base_failure: 1.0,
            retry_cap: 0,
            ..MacParams::default()
        };
        let o = mac_handshake(&p, 0, &mut seed::rng(0));
        assert_eq!(o, HandshakeOutcome { complete: false, rts_sent: 1 });
    }

    #[test]
    fn more_contenders_lower_completion() {
        let p = MacParams::default();
        let ratios: Vec<f64> = [1, 2, 4, 8]
            .iter()
            .map(|&k| completion_ratio(&p, k, 50_000, 3))
            .collect();
        for w in ratios.windows(2) {
            assert!(w[1] < w[0], "{ratios:?}");
        }
    }

    #[test]
    fn stage_failure_shape() {
        let p = MacParams::default();
        assert!((p.stage_failure(0) - 0.002).abs() < 1e-12);
        assert!(p.stage_failure(3) > p.stage_failure(2));
        assert!(p.stage_failure(10_000) <= 1.0);
        assert_eq!(p.airtime_us(0), 1);
        assert_eq!(p.airtime_us(250_000 / 8), 1_000_000);
    }
}
