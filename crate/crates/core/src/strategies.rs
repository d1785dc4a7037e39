//! Policies for all three players.
//!
//! Sceptic's side is the constructive content of the supermartingale argument:
//! [`hedge_tickets`] computes the ticket count that turns capital `K` into at
//! least `K exp(h(x - mu) - h^2 (b-a)^2 / 8)` whatever Reality plays. The
//! strategy centers internally; callers never pre-center their forecasts.
//!
//! Reality policies cover the cases the artifact needs: seeded iid sampling,
//! endpoint-playing adversaries, and verbatim replay of a fixed outcome list.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::DeviationEvent;
use crate::config::GameConfig;
use crate::protocol::{
    new_game, play_round, CapitalLedger, Forecast, ProtocolError, Trace,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("interval width must be positive")]
    NonpositiveWidth,
    #[error("hedge requires nonnegative capital, got {0}")]
    NegativeCapital(f64),
    #[error("replay policy exhausted after {0} outcomes")]
    ReplayExhausted(usize),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Parameters of the exponential hedge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HedgeParams {
    /// Exponent parameter of the wealth process.
    pub h: f64,
    /// Total `C = sum (b_n - a_n)^2` when only `C` is known in advance; the
    /// per-round intervals are then read reactively from Forecaster's moves.
    pub known_c: Option<f64>,
}

impl HedgeParams {
    pub fn new(h: f64) -> Self {
        HedgeParams { h, known_c: None }
    }

    /// The only-C variant: picks the fixed `h = 4 N t / C` that optimizes the
    /// tail bound, without knowing the individual intervals.
    pub fn from_known_c(event: &DeviationEvent, c_total: f64) -> Self {
        let h = 4.0 * event.horizon as f64 * event.threshold / c_total;
        HedgeParams { h, known_c: Some(c_total) }
    }
}

/// Ticket count for one round of the exponential hedge.
///
/// With centered endpoints `a' = lower - mean`, `b' = upper - mean` and width
/// `w = upper - lower`:
///
/// ```text
/// M = capital * exp(-h^2 w^2 / 8) * (e^{h b'} - e^{h a'}) / w
/// ```
///
/// For every `x` in `[lower, upper]` the resulting capital
/// `capital + M (x - mean)` is at least
/// `capital * exp(h (x - mean) - h^2 w^2 / 8)`.
pub fn hedge_tickets(capital: f64, forecast: &Forecast, h: f64) -> Result<f64, StrategyError> {
    if capital < 0.0 {
        return Err(StrategyError::NegativeCapital(capital));
    }
    let w = forecast.width();
    if !(w > 0.0) {
        return Err(StrategyError::NonpositiveWidth);
    }
    let a = forecast.lower() - forecast.mean();
    let b = forecast.upper() - forecast.mean();
    let damp = h * h * w * w / 8.0;
    // folding the damping factor into each exponent keeps intermediate
    // values on the scale of the result
    Ok(capital * ((h * b - damp).exp() - (h * a - damp).exp()) / w)
}

/// Reality's policy, as a declarative spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RealityPolicy {
    /// Sample outcomes iid uniform on the current round's interval.
    IidUniform,
    /// Always play the outcome that maximally advances the centered sum
    /// toward a >= threshold event: the upper endpoint.
    AdversarialMaxSum,
    /// Play a fixed outcome list verbatim.
    Replay { outcomes: Vec<f64> },
}

impl RealityPolicy {
    /// True when outcomes depend on the seed.
    pub fn is_stochastic(&self) -> bool {
        matches!(self, RealityPolicy::IidUniform)
    }

    /// Reality's move for the round after `prefix`. Only already-announced
    /// moves reach this point: the prefix and the current forecast.
    pub fn outcome(
        &self,
        prefix: &Trace,
        forecast: &Forecast,
        rng: &mut ChaCha8Rng,
    ) -> Result<f64, StrategyError> {
        match self {
            RealityPolicy::IidUniform => {
                Ok(rng.gen_range(forecast.lower()..=forecast.upper()))
            }
            RealityPolicy::AdversarialMaxSum => Ok(forecast.upper()),
            RealityPolicy::Replay { outcomes } => outcomes
                .get(prefix.len())
                .copied()
                .ok_or(StrategyError::ReplayExhausted(outcomes.len())),
        }
    }
}

/// The outcome in `{lower, upper}` that maximally advances the centered sum
/// toward the event threshold. For a `>= t` event this is always the upper
/// endpoint, since the event statistic is increasing in each outcome.
pub fn adversarial_reality(_prefix: &Trace, forecast: &Forecast, _target: &DeviationEvent) -> f64 {
    forecast.upper()
}

/// A Sceptic policy: sees only the prefix, its own capital, and the current
/// forecast. No lookahead is possible through this interface.
pub trait ScepticStrategy {
    fn tickets(
        &self,
        prefix: &Trace,
        capital: f64,
        forecast: &Forecast,
    ) -> Result<f64, StrategyError>;
}

/// The exponential hedge with a fixed `h`.
pub struct HoeffdingHedge {
    pub params: HedgeParams,
}

impl ScepticStrategy for HoeffdingHedge {
    fn tickets(
        &self,
        _prefix: &Trace,
        capital: f64,
        forecast: &Forecast,
    ) -> Result<f64, StrategyError> {
        hedge_tickets(capital, forecast, self.params.h)
    }
}

/// Never bets.
pub struct NoBet;

impl ScepticStrategy for NoBet {
    fn tickets(&self, _: &Trace, _: f64, _: &Forecast) -> Result<f64, StrategyError> {
        Ok(0.0)
    }
}

/// Plays a full game: forecasts from the config's schedule, tickets from the
/// given strategy, outcomes from the config's Reality policy, zero discard.
pub fn run_game(
    config: &GameConfig,
    sceptic: &dyn ScepticStrategy,
) -> Result<(Trace, CapitalLedger), StrategyError> {
    let mut rng = config.rng();
    let mut state = new_game(1.0);
    for n in 0..config.horizon {
        let forecast = config.forecasts.forecast(n)?;
        let tickets = sceptic.tickets(state.trace(), state.capital(), &forecast)?;
        let outcome = config.reality.outcome(state.trace(), &forecast, &mut rng)?;
        state = play_round(state, forecast, tickets, outcome, 0.0)?;
    }
    let (trace, ledger) = state.into_parts();
    Ok((trace, ledger))
}

/// Runs the exponential hedge from initial capital 1 over the configured game.
/// The surplus over the wealth-process floor is kept, never discarded.
pub fn run_hoeffding_sceptic(
    config: &GameConfig,
    h: f64,
) -> Result<(Trace, CapitalLedger), StrategyError> {
    run_game(config, &HoeffdingHedge { params: HedgeParams::new(h) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ForecastSchedule;
    use crate::supermartingale::hoeffding_log_process;

    fn f(a: f64, b: f64, mu: f64) -> Forecast {
        Forecast::new(a, b, mu).unwrap()
    }

    fn close(x: f64, y: f64, tol: f64) -> bool {
        (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0)
    }

    #[test]
    fn hedge_closed_form() {
        assert_eq!(hedge_tickets(1.0, &f(-1.0, 1.0, 0.0), 0.0).unwrap(), 0.0);
        let m = hedge_tickets(1.0, &f(-1.0, 1.0, 0.0), 1.0).unwrap();
        let expected = (-0.5f64).exp() * (1.0f64.exp() - (-1.0f64).exp()) / 2.0;
        assert!(close(m, expected, 1e-12), "{m} vs {expected}");
        assert!(close(m, 0.712795555275849, 1e-12));
        let m2 = hedge_tickets(2.0, &f(-1.0, 1.0, 0.0), 1.0).unwrap();
        assert!(close(m2, 2.0 * m, 1e-15));
    }

    #[test]
    fn hedge_rejects_negative_capital() {
        assert!(matches!(
            hedge_tickets(-0.5, &f(-1.0, 1.0, 0.0), 1.0),
            Err(StrategyError::NegativeCapital(_))
        ));
    }

    #[test]
    fn hedge_translation_invariant() {
        // centering is internal: shifting lower, upper, mean together changes nothing
        for &(a, b, mu, h) in &[(-1.0, 1.0, 0.3, 1.5), (0.0, 4.0, 1.0, -2.0), (-3.0, -0.5, -1.0, 0.7)] {
            let base = hedge_tickets(1.3, &f(a, b, mu), h).unwrap();
            for &shift in &[0.5, -10.0, 123.25] {
                let shifted = hedge_tickets(1.3, &f(a + shift, b + shift, mu + shift), h).unwrap();
                assert!(close(base, shifted, 1e-12), "{base} vs {shifted} shift {shift}");
            }
        }
    }

    #[test]
    fn hedge_pointwise_dominance() {
        // capital + M (x - mu) >= capital * exp(h (x - mu) - h^2 w^2 / 8)
        for &(a, b, mu) in &[(-1.0, 1.0, 0.0), (0.0, 4.0, 1.0), (-2.0, 0.5, -0.3)] {
            let fc = f(a, b, mu);
            for i in 0..=20 {
                let h = -5.0 + 0.5 * i as f64;
                let m = hedge_tickets(1.0, &fc, h).unwrap();
                for j in 0..=32 {
                    let x = a + (b - a) * j as f64 / 32.0;
                    let lhs = 1.0 + m * (x - mu);
                    let w = b - a;
                    let rhs = (h * (x - mu) - h * h * w * w / 8.0).exp();
                    assert!(
                        lhs >= rhs - 1e-9 * rhs.abs().max(1.0),
                        "dominance fails at {a} {b} {mu} h={h} x={x}: {lhs} < {rhs}"
                    );
                }
            }
        }
    }

    #[test]
    fn adversarial_reality_plays_upper() {
        let event = DeviationEvent::new(3, 0.5).unwrap();
        assert_eq!(adversarial_reality(&Trace::new(), &f(-1.0, 1.0, 0.0), &event), 1.0);
        assert_eq!(adversarial_reality(&Trace::new(), &f(0.0, 4.0, 1.0), &event), 4.0);
    }

    #[test]
    fn replay_policy_verbatim() {
        let policy = RealityPolicy::Replay { outcomes: vec![0.25, -0.5] };
        let mut rng = crate::config::seeded_rng(0);
        let fc = f(-1.0, 1.0, 0.0);
        assert_eq!(policy.outcome(&Trace::new(), &fc, &mut rng).unwrap(), 0.25);
    }

    #[test]
    fn run_empty_game() {
        let config = GameConfig::replay(0, f(-1.0, 1.0, 0.0), vec![]);
        let (trace, ledger) = run_hoeffding_sceptic(&config, 1.0).unwrap();
        assert!(trace.is_empty());
        assert_eq!(ledger.capital(), 1.0);
    }

    #[test]
    fn h_zero_never_bets() {
        let config = GameConfig::new(
            5,
            ForecastSchedule::Repeat { forecast: f(-1.0, 1.0, 0.0) },
            RealityPolicy::IidUniform,
            42,
        );
        let (_, ledger) = run_hoeffding_sceptic(&config, 0.0).unwrap();
        for e in ledger.entries() {
            assert_eq!(e.tickets, 0.0);
            assert_eq!(e.capital_after, 1.0);
        }
    }

    #[test]
    fn one_round_beats_exponential_floor() {
        let config = GameConfig::replay(1, f(-1.0, 1.0, 0.0), vec![1.0]);
        let (trace, ledger) = run_hoeffding_sceptic(&config, 1.0).unwrap();
        let capital = ledger.capital();
        assert!(close(capital, 1.712795555275849, 1e-12), "{capital}");
        let floor = hoeffding_log_process(&trace, 1.0).exp();
        assert!(close(floor, 0.5f64.exp(), 1e-12));
        assert!(capital >= floor);
    }

    #[test]
    fn capital_stays_positive() {
        for seed in 0..20 {
            let config = GameConfig::new(
                30,
                ForecastSchedule::Repeat { forecast: f(-1.0, 1.0, 0.2) },
                RealityPolicy::IidUniform,
                seed,
            );
            let (_, ledger) = run_hoeffding_sceptic(&config, 2.5).unwrap();
            for e in ledger.entries() {
                assert!(e.capital_after > 0.0);
            }
        }
    }

    #[test]
    fn sceptic_sees_only_prefix() {
        use std::cell::RefCell;
        struct Probe {
            seen: RefCell<Vec<usize>>,
        }
        impl ScepticStrategy for Probe {
            fn tickets(&self, prefix: &Trace, _: f64, _: &Forecast) -> Result<f64, StrategyError> {
                self.seen.borrow_mut().push(prefix.len());
                Ok(0.0)
            }
        }
        let config = GameConfig::replay(4, f(-1.0, 1.0, 0.0), vec![0.1, 0.2, 0.3, 0.4]);
        let probe = Probe { seen: RefCell::new(Vec::new()) };
        run_game(&config, &probe).unwrap();
        // strictly growing prefixes: round n sees exactly n completed rounds
        assert_eq!(*probe.seen.borrow(), vec![0, 1, 2, 3]);
    }
}
