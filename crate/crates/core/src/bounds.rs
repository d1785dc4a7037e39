//! The tail bound `exp(-2 N^2 t^2 / C)` on the upper probability of a mean
//! deviation, the optimal hedge exponent `h = 4 N t / C`, and a seeded Monte
//! Carlo harness for comparing empirical event frequency against the bound.
//!
//! Everything is reported in both linear and log scale so that tiny bounds
//! stay meaningful.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::GameConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("C (sum of squared widths) must be positive, got {0}")]
    NonpositiveC(f64),
    #[error("deviation threshold must be positive, got {0}")]
    NonpositiveThreshold(f64),
    #[error("widths list has {got} entries but horizon is {horizon}")]
    LengthMismatch { got: usize, horizon: usize },
    #[error("Monte Carlo needs at least one replicate")]
    ZeroReplicates,
    #[error("Monte Carlo requires a stochastic reality policy")]
    DeterministicReality,
    #[error("game setup: {0}")]
    Game(String),
}

/// The event `(1/N) sum (x_n - mu_n) >= t` with `t > 0`. Ties count as
/// occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationEvent {
    pub horizon: usize,
    pub threshold: f64,
}

impl DeviationEvent {
    pub fn new(horizon: usize, threshold: f64) -> Result<Self, BoundError> {
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(BoundError::NonpositiveThreshold(threshold));
        }
        Ok(DeviationEvent { horizon, threshold })
    }

    /// Whether a centered sum over the full horizon lands in the event.
    pub fn occurs(&self, deviation_sum: f64) -> bool {
        deviation_sum >= self.horizon as f64 * self.threshold
    }
}

/// Tail bound evaluation for one event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    /// `C = sum (b_n - a_n)^2`.
    pub c_total: f64,
    /// `4 N t / C`, the exponent maximizing the guaranteed growth.
    pub optimal_h: f64,
    /// `-2 N^2 t^2 / C`; finite even when `bound` underflows to zero.
    pub log_bound: f64,
    /// `exp(log_bound)`, in [0, 1].
    pub bound: f64,
}

/// Computes the tail bound `exp(-2 N^2 t^2 / C)` and the exponent achieving it.
pub fn hoeffding_bound(event: &DeviationEvent, c_total: f64) -> Result<BoundReport, BoundError> {
    if !(c_total > 0.0) || !c_total.is_finite() {
        return Err(BoundError::NonpositiveC(c_total));
    }
    let n = event.horizon as f64;
    let t = event.threshold;
    let log_bound = -2.0 * n * n * t * t / c_total;
    Ok(BoundReport {
        c_total,
        optimal_h: 4.0 * n * t / c_total,
        log_bound,
        bound: log_bound.exp(),
    })
}

/// The exponent `h = 4 N t / C` maximizing `h N t - h^2 C / 8`.
pub fn optimal_h(event: &DeviationEvent, c_total: f64) -> Result<f64, BoundError> {
    if !(c_total > 0.0) || !c_total.is_finite() {
        return Err(BoundError::NonpositiveC(c_total));
    }
    Ok(4.0 * event.horizon as f64 * event.threshold / c_total)
}

/// Log of the wealth the hedge is guaranteed to reach on the event:
/// `h N t - h^2 C / 8` with `C = sum widths^2`. The wealth process dominates
/// this on every trace in the event, with equality when the centered sum
/// equals `N t` exactly.
pub fn guaranteed_growth_on_event(
    event: &DeviationEvent,
    per_round_widths: &[f64],
    h: f64,
) -> Result<f64, BoundError> {
    if per_round_widths.len() != event.horizon {
        return Err(BoundError::LengthMismatch {
            got: per_round_widths.len(),
            horizon: event.horizon,
        });
    }
    let c: f64 = per_round_widths.iter().map(|w| w * w).sum();
    Ok(h * event.horizon as f64 * event.threshold - h * h * c / 8.0)
}

/// Monte Carlo estimate of the event frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyEstimate {
    pub frequency: f64,
    /// Normal-approximation standard error `sqrt(f (1 - f) / R)`.
    pub stderr: f64,
    pub replicates: u64,
    pub occurrences: u64,
}

/// Estimates the event frequency over seeded replicates of the configured
/// game. Replicate `i` uses seed `master_seed + i`, so the result is
/// independent of the parallel schedule: occurrences are counted as integers.
pub fn monte_carlo_frequency(
    game: &GameConfig,
    event: &DeviationEvent,
    replicates: u64,
    master_seed: u64,
) -> Result<FrequencyEstimate, BoundError> {
    if replicates == 0 {
        return Err(BoundError::ZeroReplicates);
    }
    if !game.reality.is_stochastic() {
        return Err(BoundError::DeterministicReality);
    }
    let threshold_sum = event.horizon as f64 * event.threshold;
    let occurrences: u64 = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::config::seeded_rng(master_seed.wrapping_add(i));
            let mut trace = crate::protocol::Trace::new();
            let mut sum = 0.0;
            for n in 0..game.horizon {
                let forecast = game
                    .forecasts
                    .forecast(n)
                    .expect("schedule shorter than horizon");
                let x = game
                    .reality
                    .outcome(&trace, &forecast, &mut rng)
                    .expect("stochastic policy cannot exhaust");
                sum += x - forecast.mean();
                trace.push(
                    crate::protocol::Round::new(forecast, x).expect("sampled outcome in range"),
                );
            }
            u64::from(sum >= threshold_sum)
        })
        .sum();
    let f = occurrences as f64 / replicates as f64;
    Ok(FrequencyEstimate {
        frequency: f,
        stderr: (f * (1.0 - f) / replicates as f64).sqrt(),
        replicates,
        occurrences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ForecastSchedule;
    use crate::protocol::Forecast;
    use crate::strategies::RealityPolicy;

    fn close(x: f64, y: f64, tol: f64) -> bool {
        (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0)
    }

    #[test]
    fn bound_closed_form() {
        let e = DeviationEvent::new(1, 1.0).unwrap();
        let r = hoeffding_bound(&e, 4.0).unwrap();
        assert!(close(r.bound, (-0.5f64).exp(), 1e-15));
        assert_eq!(r.optimal_h, 1.0);

        let e = DeviationEvent::new(10, 0.1).unwrap();
        let r = hoeffding_bound(&e, 10.0).unwrap();
        assert!(close(r.bound, (-0.2f64).exp(), 1e-15));
        assert!(close(r.optimal_h, 0.4, 1e-15));

        let e = DeviationEvent::new(1, 1e-12).unwrap();
        let r = hoeffding_bound(&e, 1.0).unwrap();
        assert!(close(r.bound, 1.0, 1e-12));
    }

    #[test]
    fn log_bound_survives_extreme_exponents() {
        let e = DeviationEvent::new(1000, 1.0).unwrap();
        let r = hoeffding_bound(&e, 2.0).unwrap();
        assert_eq!(r.log_bound, -1e6);
        assert_eq!(r.bound, 0.0); // underflow is fine; log_bound carries the value
    }

    #[test]
    fn threshold_must_be_positive() {
        assert!(DeviationEvent::new(3, 0.0).is_err());
        assert!(DeviationEvent::new(3, -1.0).is_err());
    }

    #[test]
    fn nonpositive_c_rejected() {
        let e = DeviationEvent::new(1, 1.0).unwrap();
        assert!(matches!(hoeffding_bound(&e, 0.0), Err(BoundError::NonpositiveC(_))));
        assert!(matches!(optimal_h(&e, -1.0), Err(BoundError::NonpositiveC(_))));
    }

    #[test]
    fn optimal_h_beats_grid() {
        let cases = [(1usize, 0.5, 1.0), (7, 0.2, 3.5), (50, 0.05, 12.0)];
        for &(n, t, c) in &cases {
            let e = DeviationEvent::new(n, t).unwrap();
            let h_star = optimal_h(&e, c).unwrap();
            let g = |h: f64| h * n as f64 * t - h * h * c / 8.0;
            // completing the square: g(h*) = 2 N^2 t^2 / C
            let expected = 2.0 * (n as f64 * t).powi(2) / c;
            assert!(close(g(h_star), expected, 1e-12));
            for i in 0..=1000 {
                let h = h_star * 2.0 * i as f64 / 1000.0;
                assert!(g(h_star) >= g(h) - 1e-12);
            }
        }
    }

    #[test]
    fn growth_matches_negative_log_bound() {
        let e = DeviationEvent::new(10, 0.1).unwrap();
        let widths = vec![1.0; 10];
        let h = optimal_h(&e, 10.0).unwrap();
        let g = guaranteed_growth_on_event(&e, &widths, h).unwrap();
        let r = hoeffding_bound(&e, 10.0).unwrap();
        assert!(close(g, -r.log_bound, 1e-12));
        assert_eq!(guaranteed_growth_on_event(&e, &widths, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn growth_length_mismatch() {
        let e = DeviationEvent::new(3, 0.1).unwrap();
        assert!(matches!(
            guaranteed_growth_on_event(&e, &[1.0, 1.0], 1.0),
            Err(BoundError::LengthMismatch { got: 2, horizon: 3 })
        ));
    }

    #[test]
    fn single_term_growth() {
        let e = DeviationEvent::new(1, 1.0).unwrap();
        let g = guaranteed_growth_on_event(&e, &[2.0], 1.0).unwrap();
        assert!(close(g, 0.5, 1e-15));
    }

    #[test]
    fn bound_monotonicity() {
        let c = 5.0;
        let mut prev = f64::INFINITY;
        for i in 1..=10 {
            let t = 0.05 * i as f64;
            let b = hoeffding_bound(&DeviationEvent::new(4, t).unwrap(), c).unwrap().bound;
            assert!(b < prev);
            prev = b;
        }
        // increasing in C for fixed N, t
        let mut prev = 0.0;
        for i in 1..=10 {
            let b = hoeffding_bound(&DeviationEvent::new(4, 0.3).unwrap(), i as f64).unwrap().bound;
            assert!(b > prev);
            prev = b;
        }
    }

    fn uniform_game(horizon: usize, seed: u64) -> GameConfig {
        GameConfig::new(
            horizon,
            ForecastSchedule::Repeat { forecast: Forecast::new(-1.0, 1.0, 0.0).unwrap() },
            RealityPolicy::IidUniform,
            seed,
        )
    }

    #[test]
    fn impossible_event_frequency_zero() {
        // max mean deviation is 1, so t = 1.5 never occurs
        let game = uniform_game(4, 11);
        let e = DeviationEvent::new(4, 1.5).unwrap();
        let est = monte_carlo_frequency(&game, &e, 2000, 11).unwrap();
        assert_eq!(est.frequency, 0.0);
    }

    #[test]
    fn uniform_single_round_tail() {
        // P(U[-1,1] >= 0.5) = 0.25
        let game = uniform_game(1, 5);
        let e = DeviationEvent::new(1, 0.5).unwrap();
        let est = monte_carlo_frequency(&game, &e, 100_000, 5).unwrap();
        assert!((est.frequency - 0.25).abs() <= 3.0 * est.stderr.max(1e-4), "{}", est.frequency);
        let bound = hoeffding_bound(&e, 4.0).unwrap().bound;
        assert!(est.frequency <= bound + 3.0 * est.stderr);
    }

    #[test]
    fn frequency_deterministic_across_runs() {
        let game = uniform_game(5, 99);
        let e = DeviationEvent::new(5, 0.2).unwrap();
        let a = monte_carlo_frequency(&game, &e, 10_000, 99).unwrap();
        let b = monte_carlo_frequency(&game, &e, 10_000, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn equality_trace_growth_is_tight() {
        // x_n - mu_n = t every round with equal widths: the log process
        // equals h N t - h^2 C / 8 exactly
        use crate::protocol::{new_game, play_round, Forecast};
        use crate::supermartingale::hoeffding_log_process;
        let t = 0.25;
        let n = 6;
        let fc = Forecast::new(-1.0, 1.0, 0.0).unwrap();
        let mut s = new_game(1.0);
        for _ in 0..n {
            s = play_round(s, fc, 0.0, t, 0.0).unwrap();
        }
        let e = DeviationEvent::new(n, t).unwrap();
        for &h in &[0.3, 1.0, -0.7] {
            let growth = guaranteed_growth_on_event(&e, &vec![2.0; n], h).unwrap();
            let process = hoeffding_log_process(s.trace(), h);
            assert!(close(growth, process, 1e-12), "{growth} vs {process}");
        }
    }

    #[test]
    fn adversarial_event_capital_certifies_bound() {
        // against an endpoint-playing Reality the event occurs, and the hedge
        // at the optimal h turns capital 1 into at least exp(2 N^2 t^2 / C)
        use crate::strategies::run_hoeffding_sceptic;
        for &(n, t) in &[(5usize, 1.0), (5, 0.5), (8, 0.25)] {
            let fc = Forecast::new(-1.0, 1.0, 0.0).unwrap();
            let game = GameConfig::new(
                n,
                ForecastSchedule::Repeat { forecast: fc },
                RealityPolicy::AdversarialMaxSum,
                0,
            );
            let event = DeviationEvent::new(n, t).unwrap();
            let c = 4.0 * n as f64;
            let h = optimal_h(&event, c).unwrap();
            let (trace, ledger) = run_hoeffding_sceptic(&game, h).unwrap();
            assert!(event.occurs(trace.deviation_sum()));
            let target = (2.0 * (n as f64 * t).powi(2) / c).exp();
            assert!(
                ledger.capital() >= target - 1e-9 * target,
                "N={n} t={t}: capital {} < {target}",
                ledger.capital()
            );
        }
    }

    #[test]
    fn zero_replicates_rejected() {
        let game = uniform_game(1, 0);
        let e = DeviationEvent::new(1, 0.5).unwrap();
        assert!(matches!(
            monte_carlo_frequency(&game, &e, 0, 0),
            Err(BoundError::ZeroReplicates)
        ));
    }
}
