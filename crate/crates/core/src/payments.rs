//! Critical-price payments and the auction driver.
//!
//! A winner pays the lowest price at which it would still have won, all
//! other bids fixed. The price is located by bisection on `[0, v_i]` using
//! the allocation rule as a membership oracle, which is valid whenever the
//! rule is monotone in the bidder's own price.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::AuctionError;
use crate::model::{Allocation, AuctionBid, AuctionResult, BidderId, DualSnapshot, SlotConfig};
use crate::num::Rational;

/// A winner-determination rule the payment engine can query.
pub trait AllocationRule {
    type Bid: AuctionBid;

    fn validate(&self, config: &SlotConfig, bids: &[Self::Bid]) -> Result<(), AuctionError>;

    fn allocate(
        &self,
        config: &SlotConfig,
        bids: &[Self::Bid],
    ) -> Result<(Allocation, DualSnapshot), AuctionError>;

    /// Whether `id` wins. Rules may answer faster than a full allocation.
    fn wins(
        &self,
        config: &SlotConfig,
        bids: &[Self::Bid],
        id: BidderId,
    ) -> Result<bool, AuctionError> {
        Ok(self.allocate(config, bids)?.0.is_winner(id))
    }

    /// Value of `alloc` to `bid` at the bid's price.
    fn gross_value(&self, config: &SlotConfig, bid: &Self::Bid, alloc: &Allocation) -> Rational;

    fn welfare(&self, config: &SlotConfig, bids: &[Self::Bid], alloc: &Allocation) -> Rational {
        bids.iter().fold(Rational::zero(), |acc, b| {
            acc + self.gross_value(config, b, alloc)
        })
    }
}

/// Bisection stops once the bracket is at most `epsilon_rel * v_i` wide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaymentParams {
    epsilon_rel: Rational,
}

impl PaymentParams {
    pub fn new(epsilon_rel: Rational) -> Result<Self, AuctionError> {
        if epsilon_rel <= Rational::zero() || epsilon_rel >= Rational::one() {
            return Err(AuctionError::InvalidEpsilon);
        }
        Ok(Self { epsilon_rel })
    }

    pub fn epsilon_rel(&self) -> &Rational {
        &self.epsilon_rel
    }
}

impl Default for PaymentParams {
    fn default() -> Self {
        Self {
            epsilon_rel: Rational::new(BigInt::one(), BigInt::from(1_000_000)),
        }
    }
}

/// Critical price of winner `id`: the midpoint of the final bisection
/// bracket, within `epsilon_rel * v_i / 2` of the true threshold for a
/// monotone rule. Returns exactly zero if the bidder wins even at price zero.
pub fn critical_payment<R: AllocationRule>(
    rule: &R,
    config: &SlotConfig,
    bids: &[R::Bid],
    id: BidderId,
    params: &PaymentParams,
) -> Result<Rational, AuctionError> {
    let pos = bids
        .iter()
        .position(|b| b.id() == id)
        .ok_or(AuctionError::UnknownBidder(id))?;
    if !rule.wins(config, bids, id)? {
        return Err(AuctionError::NotAWinner(id));
    }
    let value = bids[pos].price().clone();
    let mut probe: Vec<R::Bid> = bids.to_vec();
    let mut wins_at = |price: &Rational| {
        probe[pos] = bids[pos].with_price(price.clone());
        rule.wins(config, &probe, id)
    };
    if value.is_zero() || wins_at(&Rational::zero())? {
        return Ok(Rational::zero());
    }
    let tolerance = params.epsilon_rel() * &value;
    let two = Rational::from_integer(BigInt::from(2));
    let (mut lo, mut hi) = (Rational::zero(), value);
    while &hi - &lo > tolerance {
        let mid = (&lo + &hi) / &two;
        if wins_at(&mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo + hi) / two)
}

/// Allocates and prices one slot.
///
/// `payments` holds critical prices (zero for losers); `charges` holds the
/// money collected, i.e. the gross value of the allocation at the critical
/// price.
pub fn run_auction<R: AllocationRule>(
    rule: &R,
    config: &SlotConfig,
    bids: &[R::Bid],
    params: &PaymentParams,
) -> Result<AuctionResult, AuctionError> {
    rule.validate(config, bids)?;
    let (allocation, dual_snapshot) = if bids.is_empty() {
        (Allocation::default(), DualSnapshot::None)
    } else {
        rule.allocate(config, bids)?
    };
    let mut payments = BTreeMap::new();
    let mut charges = BTreeMap::new();
    for bid in bids {
        let (payment, charge) = if allocation.is_winner(bid.id()) {
            let p = critical_payment(rule, config, bids, bid.id(), params)?;
            let c = rule.gross_value(config, &bid.with_price(p.clone()), &allocation);
            (p, c)
        } else {
            (Rational::zero(), Rational::zero())
        };
        payments.insert(bid.id(), payment);
        charges.insert(bid.id(), charge);
    }
    let social_welfare = rule.welfare(config, bids, &allocation);
    Ok(AuctionResult {
        allocation,
        payments,
        charges,
        social_welfare,
        dual_snapshot,
    })
}

/// Utility of bidder `id` with private value `true_value` in `result`:
/// its true value for what it received minus its charge.
pub fn utility<R: AllocationRule>(
    rule: &R,
    config: &SlotConfig,
    bids: &[R::Bid],
    result: &AuctionResult,
    id: BidderId,
    true_value: &Rational,
) -> Result<Rational, AuctionError> {
    let bid = bids
        .iter()
        .find(|b| b.id() == id)
        .ok_or(AuctionError::UnknownBidder(id))?;
    if !result.allocation.is_winner(id) {
        return Ok(Rational::zero());
    }
    let gross = rule.gross_value(
        config,
        &bid.with_price(true_value.clone()),
        &result.allocation,
    );
    let charge = result
        .charges
        .get(&id)
        .cloned()
        .unwrap_or_else(Rational::zero);
    Ok(gross - charge)
}

/// Empirical checks of the incentive properties of a rule.
pub mod audit {
    use super::*;

    /// Outcome of sweeping one bidder's price over `(0, v_i]`.
    #[derive(Debug, Clone, PartialEq, Eq)]
    pub struct MonotoneSweep {
        /// Outcome at each swept price, lowest price first.
        pub wins: Vec<bool>,
        /// Sweep indices `k` where the bidder won at price `k` and lost at
        /// price `k + 1`.
        pub win_to_lose: Vec<usize>,
        /// Number of outcome changes between consecutive prices.
        pub flips: usize,
    }

    impl MonotoneSweep {
        pub fn is_monotone(&self) -> bool {
            self.win_to_lose.is_empty()
        }
    }

    /// Evaluates whether `id` wins at prices `v_i * k / samples` for
    /// `k = 1..=samples`.
    pub fn monotone_sweep<R: AllocationRule>(
        rule: &R,
        config: &SlotConfig,
        bids: &[R::Bid],
        id: BidderId,
        samples: usize,
    ) -> Result<MonotoneSweep, AuctionError> {
        let pos = bids
            .iter()
            .position(|b| b.id() == id)
            .ok_or(AuctionError::UnknownBidder(id))?;
        let value = bids[pos].price().clone();
        let mut probe: Vec<R::Bid> = bids.to_vec();
        let mut wins = Vec::with_capacity(samples);
        for k in 1..=samples {
            let price = &value * Rational::new(BigInt::from(k), BigInt::from(samples));
            probe[pos] = bids[pos].with_price(price);
            wins.push(rule.wins(config, &probe, id)?);
        }
        let win_to_lose = wins
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0] && !w[1])
            .map(|(k, _)| k)
            .collect();
        let flips = wins.windows(2).filter(|w| w[0] != w[1]).count();
        Ok(MonotoneSweep {
            wins,
            win_to_lose,
            flips,
        })
    }

    /// Bidders whose charge exceeds their gross value or whose critical
    /// price exceeds their bid price. Empty when individually rational.
    pub fn ir_violations<R: AllocationRule>(
        rule: &R,
        config: &SlotConfig,
        bids: &[R::Bid],
        result: &AuctionResult,
    ) -> Vec<BidderId> {
        bids.iter()
            .filter(|b| {
                let payment = result
                    .payments
                    .get(&b.id())
                    .cloned()
                    .unwrap_or_else(Rational::zero);
                let charge = result
                    .charges
                    .get(&b.id())
                    .cloned()
                    .unwrap_or_else(Rational::zero);
                let gross = rule.gross_value(config, b, &result.allocation);
                payment > *b.price() || charge > gross
            })
            .map(AuctionBid::id)
            .collect()
    }

    /// Utility of `id` (true value = its price in `bids`) when it reports
    /// `report` instead, all other bids fixed, together with the resulting
    /// allocation. Only this bidder's payment is computed.
    pub fn utility_when_reporting<R: AllocationRule>(
        rule: &R,
        config: &SlotConfig,
        bids: &[R::Bid],
        id: BidderId,
        report: &Rational,
        params: &PaymentParams,
    ) -> Result<(Rational, Allocation), AuctionError> {
        let pos = bids
            .iter()
            .position(|b| b.id() == id)
            .ok_or(AuctionError::UnknownBidder(id))?;
        let truth = bids[pos].price().clone();
        let mut reported: Vec<R::Bid> = bids.to_vec();
        reported[pos] = bids[pos].with_price(report.clone());
        let (alloc, _) = rule.allocate(config, &reported)?;
        if !alloc.is_winner(id) {
            return Ok((Rational::zero(), alloc));
        }
        let payment = critical_payment(rule, config, &reported, id, params)?;
        let gross = rule.gross_value(config, &bids[pos].with_price(truth), &alloc);
        let charge = rule.gross_value(config, &bids[pos].with_price(payment), &alloc);
        Ok((gross - charge, alloc))
    }

    /// Largest utility gain of `id` over truthful reporting among the
    /// `reports`; non-positive when no listed misreport helps.
    pub fn max_misreport_gain<R: AllocationRule>(
        rule: &R,
        config: &SlotConfig,
        bids: &[R::Bid],
        id: BidderId,
        reports: &[Rational],
        params: &PaymentParams,
    ) -> Result<Rational, AuctionError> {
        let truth = bids
            .iter()
            .find(|b| b.id() == id)
            .ok_or(AuctionError::UnknownBidder(id))?
            .price()
            .clone();
        let (honest, _) = utility_when_reporting(rule, config, bids, id, &truth, params)?;
        let mut best: Option<Rational> = None;
        for report in reports {
            let gain = utility_when_reporting(rule, config, bids, id, report, params)?.0 - &honest;
            if best.as_ref().is_none_or(|b| gain > *b) {
                best = Some(gain);
            }
        }
        Ok(best.unwrap_or_else(Rational::zero))
    }
}

#[cfg(test)]
mod tests {
    use super::audit::*;
    use super::*;
    use crate::alloc_basic::BasicRule;
    use crate::model::{Bid, BidderKind, CqiRateTable};
    use crate::num::{int, ratio};
    use alloc::vec;

    fn cfg(n: usize) -> SlotConfig {
        SlotConfig::new(n, 1, CqiRateTable::flat(int(1)).unwrap()).unwrap()
    }

    fn canonical() -> Vec<Bid> {
        vec![
            Bid::new(1, BidderKind::DirectUe, 3, int(9)),
            Bid::new(2, BidderKind::DirectUe, 4, int(8)),
            Bid::new(3, BidderKind::RelayNode, 3, int(3)),
        ]
    }

    #[test]
    fn epsilon_must_be_a_proper_fraction() {
        assert_eq!(
            PaymentParams::new(int(0)),
            Err(AuctionError::InvalidEpsilon)
        );
        assert_eq!(
            PaymentParams::new(int(1)),
            Err(AuctionError::InvalidEpsilon)
        );
        assert!(PaymentParams::new(ratio(1, 100)).is_ok());
        assert_eq!(PaymentParams::default().epsilon_rel(), &ratio(1, 1_000_000));
    }

    #[test]
    fn canonical_payments() {
        // Budget 12 - 2*4 = 4. Bidder 1 stays admitted while its density is
        // at least bidder 3's (1 per RB, ties to the lower id): threshold 3.
        // Bidder 2 must outrank bidder 3 too: threshold 4.
        let bids = canonical();
        let result = run_auction(&BasicRule, &cfg(12), &bids, &PaymentParams::default()).unwrap();
        assert_eq!(result.social_welfare, int(17));
        assert_eq!(result.payments[&BidderId(3)], int(0));
        for (id, threshold, value) in [(1u32, 3i64, 9.0), (2, 4, 8.0)] {
            let p = &result.payments[&BidderId(id)];
            let err = crate::num::to_f64(&(p - int(threshold))).abs();
            assert!(err <= value * 1e-6 / 2.0 + 1e-12, "bidder {id} pays {p}");
            assert_eq!(p, &result.charges[&BidderId(id)]);
        }
        assert!(ir_violations(&BasicRule, &cfg(12), &bids, &result).is_empty());
    }

    #[test]
    fn payment_is_zero_when_price_is_irrelevant() {
        // N = 14, budget 6: bidder 3 is admitted even at price zero.
        let bids = vec![
            Bid::new(1, BidderKind::DirectUe, 2, int(100)),
            Bid::new(2, BidderKind::DirectUe, 4, int(8)),
            Bid::new(3, BidderKind::DirectUe, 2, int(6)),
        ];
        let p = critical_payment(
            &BasicRule,
            &cfg(14),
            &bids,
            BidderId(3),
            &PaymentParams::default(),
        )
        .unwrap();
        assert_eq!(p, int(0));
    }

    #[test]
    fn losers_have_no_payment() {
        let bids = canonical();
        assert_eq!(
            critical_payment(
                &BasicRule,
                &cfg(12),
                &bids,
                BidderId(3),
                &PaymentParams::default()
            ),
            Err(AuctionError::NotAWinner(BidderId(3)))
        );
        assert_eq!(
            critical_payment(
                &BasicRule,
                &cfg(12),
                &bids,
                BidderId(9),
                &PaymentParams::default()
            ),
            Err(AuctionError::UnknownBidder(BidderId(9)))
        );
    }

    #[test]
    fn bisection_converges_to_known_threshold() {
        // N = 10, max r = 2, budget 6: the first four bidders in density
        // order win.
        let bids = vec![
            Bid::new(1, BidderKind::DirectUe, 2, int(10)),
            Bid::new(2, BidderKind::DirectUe, 2, int(9)),
            Bid::new(3, BidderKind::DirectUe, 2, int(8)),
            Bid::new(4, BidderKind::DirectUe, 2, int(7)),
            Bid::new(5, BidderKind::DirectUe, 2, int(5)),
        ];
        let result = run_auction(&BasicRule, &cfg(10), &bids, &PaymentParams::default()).unwrap();
        assert!(result.allocation.is_winner(BidderId(4)));
        assert!(!result.allocation.is_winner(BidderId(5)));
        // bidder 4 must outrank bidder 5 (ties go to the lower id, 4 < 5)
        let p = &result.payments[&BidderId(4)];
        let err = crate::num::to_f64(&(p - int(5))).abs();
        assert!(err <= 7.0 * 1e-6 / 2.0 + 1e-12, "payment {p}");
    }

    #[test]
    fn utility_of_truthful_winner_is_non_negative() {
        let bids = canonical();
        let result = run_auction(&BasicRule, &cfg(12), &bids, &PaymentParams::default()).unwrap();
        for b in &bids {
            let u = utility(&BasicRule, &cfg(12), &bids, &result, b.id, &b.value).unwrap();
            assert!(u >= int(0));
        }
    }

    /// Wins only inside a price window: breaks monotonicity on purpose.
    struct WindowRule;

    impl AllocationRule for WindowRule {
        type Bid = Bid;
        fn validate(&self, _: &SlotConfig, _: &[Bid]) -> Result<(), AuctionError> {
            Ok(())
        }
        fn allocate(
            &self,
            _: &SlotConfig,
            bids: &[Bid],
        ) -> Result<(Allocation, DualSnapshot), AuctionError> {
            let mut alloc = Allocation::empty(bids.iter().map(|b| b.id));
            for b in bids {
                if b.value >= int(2) && b.value <= int(5) {
                    alloc.winners.insert(b.id, true);
                }
            }
            Ok((alloc, DualSnapshot::None))
        }
        fn gross_value(&self, _: &SlotConfig, bid: &Bid, alloc: &Allocation) -> Rational {
            if alloc.is_winner(bid.id) {
                bid.value.clone()
            } else {
                Rational::zero()
            }
        }
    }

    #[test]
    fn sweep_flags_non_monotone_rule() {
        let bids = vec![Bid::new(1, BidderKind::DirectUe, 1, int(10))];
        let sweep = monotone_sweep(&WindowRule, &cfg(4), &bids, BidderId(1), 10).unwrap();
        assert!(!sweep.is_monotone());
        assert_eq!(sweep.win_to_lose, vec![4]);
        assert_eq!(sweep.flips, 2);

        let sweep = monotone_sweep(&BasicRule, &cfg(12), &canonical(), BidderId(3), 50).unwrap();
        assert!(sweep.is_monotone());
    }

    #[test]
    fn audit_detects_profitable_misreport_in_bad_rule() {
        // With value 10 the bidder loses; reporting 3 wins at price 2.
        let bids = vec![Bid::new(1, BidderKind::DirectUe, 1, int(10))];
        let gain = max_misreport_gain(
            &WindowRule,
            &cfg(4),
            &bids,
            BidderId(1),
            &[int(3)],
            &PaymentParams::default(),
        )
        .unwrap();
        assert!(gain > int(7));
    }
}
