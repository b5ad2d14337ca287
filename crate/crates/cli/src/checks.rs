//! Randomized truthfulness, monotonicity and individual-rationality checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectrum_auction::num::{ratio, to_f64};
use spectrum_auction::payments::audit::{ir_violations, monotone_sweep, utility_when_reporting};
use spectrum_auction::{
    allocate_basic, validate_basic, Allocation, AllocationRule, AuctionBid, AuctionError, Bid,
    DualSnapshot, PaymentParams, Rational, SlotConfig,
};

/// Prices swept per winner in the monotonicity check.
pub const SWEEP_SAMPLES: usize = 50;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TruthReport {
    pub trials: usize,
    /// Misreports that beat truthful reporting by more than the payment
    /// tolerance.
    pub misreport_violations: usize,
    /// Bidders whose outcome is not a single lose-to-win step over the
    /// price sweep.
    pub monotone_violations: usize,
    pub ir_violations: usize,
    pub bidders_swept: usize,
    /// Bidders among them that win when truthful.
    pub winners_swept: usize,
    /// Largest gain from misreporting seen, relative to the bidder's true
    /// value of the better of its two allocations. Non-positive means no
    /// misreport helped.
    pub worst_relative_gain: f64,
    /// A few violation descriptions for diagnostics.
    pub examples: Vec<String>,
}

impl TruthReport {
    pub fn violations(&self) -> usize {
        self.misreport_violations + self.monotone_violations + self.ir_violations
    }

    fn note(&mut self, message: String) {
        if self.examples.len() < 5 {
            self.examples.push(message);
        }
    }
}

/// Misreport drawn for a bidder with true price `truth`: a multiple in
/// `[0, 3]` on a 1/100 grid, never the truth itself.
fn draw_misreport<R: Rng>(rng: &mut R, truth: &Rational) -> Rational {
    loop {
        let m = rng.random_range(0..=300);
        let report = if truth == &Rational::from_integer(0.into()) {
            ratio(m, 100)
        } else {
            truth * ratio(m, 100)
        };
        if &report != truth {
            return report;
        }
    }
}

/// Runs `trials` random (instance, bidder, misreport) checks against `rule`.
///
/// Per trial: the chosen bidder's utility from a misreport may exceed its
/// truthful utility by at most twice the payment tolerance (the gross value
/// of its allocation at price `epsilon * truth`); every truthful winner's
/// sweep over `SWEEP_SAMPLES` prices in `(0, v_i]` must change from losing
/// to winning at most once and never back; and the truthful auction must
/// charge winners between zero and their bid and losers nothing.
pub fn check_rule<R, G>(
    rule: &R,
    mut generate: G,
    trials: usize,
    seed: u64,
    params: &PaymentParams,
) -> Result<TruthReport, AuctionError>
where
    R: AllocationRule,
    G: FnMut(&mut ChaCha8Rng) -> (SlotConfig, Vec<R::Bid>),
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = TruthReport {
        trials,
        worst_relative_gain: f64::NEG_INFINITY,
        ..TruthReport::default()
    };
    for trial in 0..trials {
        let (config, bids) = generate(&mut rng);
        let pick = rng.random_range(0..bids.len());
        let bid = &bids[pick];
        let truth = bid.price().clone();
        let misreport = draw_misreport(&mut rng, &truth);

        let (honest, honest_alloc) =
            utility_when_reporting(rule, &config, &bids, bid.id(), &truth, params)?;
        let (lying, lying_alloc) =
            utility_when_reporting(rule, &config, &bids, bid.id(), &misreport, params)?;
        let slack_price = bid.with_price(params.epsilon_rel() * &truth);
        let tolerance = Rational::from_integer(2.into())
            * core::cmp::max(
                rule.gross_value(&config, &slack_price, &honest_alloc),
                rule.gross_value(&config, &slack_price, &lying_alloc),
            );
        let gain = &lying - &honest;
        let at_stake = core::cmp::max(
            rule.gross_value(&config, bid, &honest_alloc),
            rule.gross_value(&config, bid, &lying_alloc),
        );
        if at_stake > Rational::from_integer(0.into()) {
            report.worst_relative_gain =
                report.worst_relative_gain.max(to_f64(&(&gain / &at_stake)));
        }
        if gain > tolerance {
            report.misreport_violations += 1;
            report.note(format!(
                "trial {trial}: bidder {} gains {} by reporting {} instead of {}",
                bid.id(),
                to_f64(&gain),
                to_f64(&misreport),
                to_f64(&truth)
            ));
        }

        let result = spectrum_auction::run_auction(rule, &config, &bids, params)?;
        let bad_ir = ir_violations(rule, &config, &bids, &result);
        let zero = Rational::from_integer(0.into());
        let negative_or_loser_pays = bids.iter().filter(|b| {
            let p = &result.payments[&b.id()];
            *p < zero || (!result.allocation.is_winner(b.id()) && *p != zero)
        });
        let ir_count = bad_ir.len() + negative_or_loser_pays.count();
        if ir_count > 0 {
            report.ir_violations += ir_count;
            report.note(format!(
                "trial {trial}: {ir_count} individual-rationality violations"
            ));
        }

        for b in &bids {
            let won = result.allocation.is_winner(b.id());
            report.bidders_swept += 1;
            report.winners_swept += usize::from(won);
            let sweep = monotone_sweep(rule, &config, &bids, b.id(), SWEEP_SAMPLES)?;
            if !sweep.is_monotone() || sweep.flips > 1 || (!won && sweep.flips > 0) {
                report.monotone_violations += 1;
                report.note(format!(
                    "trial {trial}: bidder {} changes outcome {} times over the sweep",
                    b.id(),
                    sweep.flips
                ));
            }
        }
    }
    if report.worst_relative_gain == f64::NEG_INFINITY {
        report.worst_relative_gain = 0.0;
    }
    Ok(report)
}

/// Deliberately broken rule for testing the checker: runs the basic greedy
/// on mirrored values, so raising a bid makes it less likely to win.
#[derive(Debug, Clone, Copy, Default)]
pub struct MirroredRule;

impl MirroredRule {
    fn mirrored(bids: &[Bid]) -> Vec<Bid> {
        // v -> (r * 100) - v keeps values non-negative for v <= 100 per RB
        bids.iter()
            .map(|b| {
                let ceiling = Rational::from_integer((b.demand as i64 * 100).into());
                let flipped = &ceiling - &b.value;
                Bid {
                    value: if flipped < Rational::from_integer(0.into()) {
                        Rational::from_integer(0.into())
                    } else {
                        flipped
                    },
                    ..b.clone()
                }
            })
            .collect()
    }
}

impl AllocationRule for MirroredRule {
    type Bid = Bid;

    fn validate(&self, config: &SlotConfig, bids: &[Bid]) -> Result<(), AuctionError> {
        validate_basic(config, bids)
    }

    fn allocate(
        &self,
        config: &SlotConfig,
        bids: &[Bid],
    ) -> Result<(Allocation, DualSnapshot), AuctionError> {
        let (alloc, state) = allocate_basic(config, &Self::mirrored(bids))?;
        Ok((alloc, DualSnapshot::Basic(state)))
    }

    fn gross_value(&self, _config: &SlotConfig, bid: &Bid, alloc: &Allocation) -> Rational {
        if alloc.is_winner(bid.id) {
            bid.value.clone()
        } else {
            Rational::from_integer(0.into())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::random_basic_instance;
    use spectrum_auction::BasicRule;

    #[test]
    fn basic_rule_passes_a_short_run() {
        let report = check_rule(
            &BasicRule,
            random_basic_instance,
            20,
            1,
            &PaymentParams::default(),
        )
        .unwrap();
        assert_eq!(report.violations(), 0, "{:?}", report.examples);
        assert!(report.winners_swept > 0);
    }

    #[test]
    fn zero_trials_pass() {
        let report = check_rule(
            &BasicRule,
            random_basic_instance,
            0,
            1,
            &PaymentParams::default(),
        )
        .unwrap();
        assert_eq!(report.violations(), 0);
        assert_eq!(report.worst_relative_gain, 0.0);
    }

    #[test]
    fn mirrored_rule_is_caught() {
        let report = check_rule(
            &MirroredRule,
            random_basic_instance,
            20,
            1,
            &PaymentParams::default(),
        )
        .unwrap();
        assert!(report.monotone_violations > 0);
    }
}
