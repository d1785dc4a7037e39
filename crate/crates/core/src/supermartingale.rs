//! The exponential wealth process in log domain, and each inequality from the
//! argument that it is a supermartingale as a standalone checkable predicate.
//!
//! All checks return a *slack* (right-hand side minus left-hand side). A
//! correct implementation keeps every slack above `-tol`; the checks exist so
//! that a test harness can sweep them over grids and fuzzed inputs.
//!
//! The centered checks require `a < 0 < b`, the form the hedging argument
//! reduces to. Public strategy code centers internally before calling them.

use serde::Serialize;
use thiserror::Error;

use crate::protocol::{CapitalLedger, Trace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckError {
    #[error("centered form requires a < 0 < b, got a={a}, b={b}")]
    BadCentering { a: f64, b: f64 },
    #[error("interval width must be positive, got a={a}, b={b}")]
    NonpositiveWidth { a: f64, b: f64 },
    #[error("ledger has {ledger} entries but trace has {trace} rounds")]
    LengthMismatch { ledger: usize, trace: usize },
}

/// Default relative tolerance for slack checks.
pub const SLACK_REL_TOL: f64 = 1e-9;
/// Absolute floor under the relative tolerance.
pub const SLACK_ABS_TOL: f64 = 1e-12;

fn require_centered(a: f64, b: f64) -> Result<(), CheckError> {
    if a < 0.0 && 0.0 < b {
        Ok(())
    } else {
        Err(CheckError::BadCentering { a, b })
    }
}

/// Natural log of the wealth process value on a trace:
/// `sum_n [h (x_n - mu_n) - h^2 (b_n - a_n)^2 / 8]`. The empty trace gives 0.
pub fn hoeffding_log_process(trace: &Trace, h: f64) -> f64 {
    trace
        .rounds()
        .iter()
        .map(|r| {
            let w = r.forecast().width();
            h * r.deviation() - h * h * w * w / 8.0
        })
        .sum()
}

/// Slack of the hedging inequality in centered form:
/// `exp(h x) <= exp(h^2 (b-a)^2 / 8) + x (e^{hb} - e^{ha}) / (b - a)`.
///
/// Returns RHS - LHS; nonnegative for all `x` in `[a, b]`.
pub fn check_goal_inequality(a: f64, b: f64, h: f64, x: f64) -> Result<f64, CheckError> {
    require_centered(a, b)?;
    let w = b - a;
    let rhs = (h * h * w * w / 8.0).exp() + x * ((h * b).exp() - (h * a).exp()) / w;
    Ok(rhs - (h * x).exp())
}

/// Slack of the convexity step: the chord of `exp(h .)` over `[a, b]` sits
/// above the curve. Returns `chord(x) - exp(h x)`.
pub fn check_chord_dominance(a: f64, b: f64, h: f64, x: f64) -> Result<f64, CheckError> {
    if !(a < b) {
        return Err(CheckError::NonpositiveWidth { a, b });
    }
    let w = b - a;
    let chord = ((x - a) * (h * b).exp() + (b - x) * (h * a).exp()) / w;
    Ok(chord - (h * x).exp())
}

/// Slack of the reduced scalar inequality:
/// `ln(b e^{ha} - a e^{hb}) <= h^2 (b-a)^2 / 8 + ln(b - a)`.
///
/// Exactly zero at `h = 0`.
pub fn check_simpler_inequality(a: f64, b: f64, h: f64) -> Result<f64, CheckError> {
    require_centered(a, b)?;
    let w = b - a;
    let lhs = (b * (h * a).exp() - a * (h * b).exp()).ln();
    Ok(h * h * w * w / 8.0 + w.ln() - lhs)
}

/// Output of [`check_quarter_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuarterBound {
    /// `u = b e^{ha} / (b e^{ha} - a e^{hb})`, always in (0, 1).
    pub u: f64,
    /// Second derivative of the reduced inequality's left side:
    /// `(b-a)^2 u (1-u)`, bounded by `(b-a)^2 / 4`.
    pub second_derivative: f64,
}

/// The curvature bound closing the argument: the second derivative of the
/// reduced inequality's left side is `(b-a)^2 u(1-u)` with `u` in (0, 1),
/// hence at most `(b-a)^2 / 4`.
pub fn check_quarter_bound(a: f64, b: f64, h: f64) -> Result<QuarterBound, CheckError> {
    require_centered(a, b)?;
    let w = b - a;
    let p = b * (h * a).exp();
    let q = -a * (h * b).exp();
    // both summands positive, so u in (0, 1)
    let u = p / (p + q);
    Ok(QuarterBound { u, second_derivative: w * w * u * (1.0 - u) })
}

/// Per-round comparison of a capital path against the wealth-process floor
/// `K_0 * exp(log process through round n)`.
#[derive(Debug, Clone, Serialize)]
pub struct DominanceReport {
    /// `K_n - K_0 exp(L_n)` for each round n.
    pub per_round_slack: Vec<f64>,
    /// Minimum slack across rounds (0 for an empty trace).
    pub min_slack: f64,
    /// Relative tolerance the slacks are meant to satisfy.
    pub rel_tol: f64,
}

impl DominanceReport {
    /// True when every round satisfies `K_n >= floor_n - rel_tol * |K_n|`.
    pub fn passes(&self, ledger: &CapitalLedger) -> bool {
        self.per_round_slack
            .iter()
            .zip(ledger.entries())
            .all(|(s, e)| *s >= -self.rel_tol * e.capital_after.abs().max(1.0))
    }
}

/// Verifies `K_n >= K_0 * exp(hoeffding_log_process through round n)` for
/// every round of the ledger.
pub fn dominance_audit(
    trace: &Trace,
    ledger: &CapitalLedger,
    h: f64,
) -> Result<DominanceReport, CheckError> {
    if ledger.entries().len() != trace.len() {
        return Err(CheckError::LengthMismatch {
            ledger: ledger.entries().len(),
            trace: trace.len(),
        });
    }
    let mut log_process = 0.0;
    let mut per_round_slack = Vec::with_capacity(trace.len());
    for (round, entry) in trace.rounds().iter().zip(ledger.entries()) {
        let w = round.forecast().width();
        log_process += h * round.deviation() - h * h * w * w / 8.0;
        let floor = ledger.initial() * log_process.exp();
        per_round_slack.push(entry.capital_after - floor);
    }
    let min_slack = per_round_slack.iter().copied().fold(f64::INFINITY, f64::min);
    let min_slack = if per_round_slack.is_empty() { 0.0 } else { min_slack };
    Ok(DominanceReport { per_round_slack, min_slack, rel_tol: SLACK_REL_TOL })
}

/// Worst observed slack of one check over a sweep, with the input attaining it.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WorstSlack {
    pub slack: f64,
    pub a: f64,
    pub b: f64,
    pub h: f64,
    /// Outcome, for the pointwise checks; `b` is reported for the scalar ones.
    pub x: f64,
}

impl WorstSlack {
    fn start() -> Self {
        WorstSlack { slack: f64::INFINITY, a: 0.0, b: 0.0, h: 0.0, x: 0.0 }
    }

    fn update(&mut self, slack: f64, a: f64, b: f64, h: f64, x: f64) {
        if slack < self.slack {
            *self = WorstSlack { slack, a, b, h, x };
        }
    }
}

/// Result of sweeping every proof inequality over the documented grid plus
/// fuzzed tuples.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub chord: WorstSlack,
    pub goal: WorstSlack,
    pub simpler: WorstSlack,
    /// Worst margin of `1/4 - u(1-u)`.
    pub quarter: WorstSlack,
    /// Worst slack of `goal - chord` (the implication order of the argument).
    pub chain: WorstSlack,
    /// Largest `|slack|` seen on `h = 0` rows across all checks.
    pub h_zero_max_abs: f64,
    pub tuples_checked: u64,
    pub rel_tol: f64,
}

impl VerificationReport {
    pub fn passes(&self) -> bool {
        let ok = |w: &WorstSlack| w.slack >= -self.rel_tol;
        ok(&self.chord)
            && ok(&self.goal)
            && ok(&self.simpler)
            && ok(&self.quarter)
            && ok(&self.chain)
            && self.h_zero_max_abs <= 1e-15
    }
}

/// The documented sweep: `a` in {-3, -1, -0.1}, `b` in {0.1, 1, 2}, 41 values
/// of `h` in [-5, 5], 33 values of `x` in [a, b], plus `fuzz` random tuples
/// drawn from the seeded generator.
pub fn grid_verification(fuzz: u64, seed: u64) -> VerificationReport {
    use rand::Rng;

    let mut report = VerificationReport {
        chord: WorstSlack::start(),
        goal: WorstSlack::start(),
        simpler: WorstSlack::start(),
        quarter: WorstSlack::start(),
        chain: WorstSlack::start(),
        h_zero_max_abs: 0.0,
        tuples_checked: 0,
        rel_tol: SLACK_REL_TOL,
    };

    let visit = |a: f64, b: f64, h: f64, xs: &[f64], report: &mut VerificationReport| {
        let simpler = check_simpler_inequality(a, b, h).expect("centered");
        let scale = simpler.abs().max(1.0);
        report.simpler.update(simpler / scale, a, b, h, b);
        let qb = check_quarter_bound(a, b, h).expect("centered");
        report.quarter.update(0.25 - qb.u * (1.0 - qb.u), a, b, h, b);
        if h == 0.0 {
            report.h_zero_max_abs = report.h_zero_max_abs.max(simpler.abs());
        }
        for &x in xs {
            let chord = check_chord_dominance(a, b, h, x).expect("valid width");
            let goal = check_goal_inequality(a, b, h, x).expect("centered");
            let scale = chord.abs().max(goal.abs()).max(1.0);
            report.chord.update(chord / scale, a, b, h, x);
            report.goal.update(goal / scale, a, b, h, x);
            report.chain.update((goal - chord) / scale, a, b, h, x);
            if h == 0.0 {
                report.h_zero_max_abs = report.h_zero_max_abs.max(chord.abs()).max(goal.abs());
            }
            report.tuples_checked += 1;
        }
    };

    for &a in &[-3.0, -1.0, -0.1] {
        for &b in &[0.1, 1.0, 2.0] {
            let xs: Vec<f64> = (0..33).map(|j| a + (b - a) * j as f64 / 32.0).collect();
            for i in 0..41 {
                let h = -5.0 + 10.0 * i as f64 / 40.0;
                visit(a, b, h, &xs, &mut report);
            }
        }
    }

    let mut rng = crate::config::seeded_rng(seed);
    for _ in 0..fuzz {
        let a = -rng.gen_range(1e-3..4.0f64);
        let b = rng.gen_range(1e-3..4.0f64);
        let h = rng.gen_range(-5.0..5.0f64);
        let x = rng.gen_range(a..=b);
        visit(a, b, h, &[x], &mut report);
    }

    report
}
