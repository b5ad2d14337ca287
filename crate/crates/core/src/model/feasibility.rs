use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::{Allocation, AuctionBid, BidderId, SlotConfig};

/// A broken allocation constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// The allocation mentions a bidder that did not bid.
    UnknownBidder(BidderId),
    /// A winner received a number of RBs different from its demand.
    DemandMismatch {
        id: BidderId,
        demand: usize,
        assigned: usize,
    },
    /// A losing bidder holds RBs.
    LoserAssigned { id: BidderId, assigned: usize },
    /// RB index outside `1..=N`.
    RbOutOfRange { rb: usize },
    /// An RB is held by two parties (two bidders, or a bidder and the
    /// reservation).
    RbConflict { rb: usize },
    /// A winning relay node holds more RBs than are reserved.
    ReservationTooSmall {
        id: BidderId,
        assigned: usize,
        reserved: usize,
    },
}

/// How winners' RB counts are checked against their demands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemandRule {
    /// Every winner receives exactly its demand.
    Exact,
    /// Demands are not checked. Used for the baseline schedulers, which hand
    /// out RBs irrespective of demand.
    Ignore,
}

/// Checks the allocation constraints with exact demands. Returns every
/// violation found; an empty vector means feasible.
pub fn check_feasibility<B: AuctionBid>(
    config: &SlotConfig,
    bids: &[B],
    alloc: &Allocation,
) -> Vec<Violation> {
    check_feasibility_with(config, bids, alloc, DemandRule::Exact)
}

pub fn check_feasibility_with<B: AuctionBid>(
    config: &SlotConfig,
    bids: &[B],
    alloc: &Allocation,
    rule: DemandRule,
) -> Vec<Violation> {
    let mut violations = Vec::new();
    let by_id: BTreeMap<BidderId, &B> = bids.iter().map(|b| (b.id(), b)).collect();

    for id in alloc.winners.keys().chain(alloc.assignment.keys()) {
        if !by_id.contains_key(id) && !violations.contains(&Violation::UnknownBidder(*id)) {
            violations.push(Violation::UnknownBidder(*id));
        }
    }

    for (id, bid) in &by_id {
        let assigned = alloc.num_assigned(*id);
        if alloc.is_winner(*id) {
            if rule == DemandRule::Exact && assigned != bid.demand() {
                violations.push(Violation::DemandMismatch {
                    id: *id,
                    demand: bid.demand(),
                    assigned,
                });
            }
        } else if assigned > 0 {
            violations.push(Violation::LoserAssigned { id: *id, assigned });
        }
    }

    let mut used = BTreeSet::new();
    let rows = alloc
        .assignment
        .values()
        .chain(core::iter::once(&alloc.reserved));
    for row in rows {
        for &rb in row {
            if rb == 0 || rb > config.num_rbs() {
                violations.push(Violation::RbOutOfRange { rb });
            } else if !used.insert(rb) {
                violations.push(Violation::RbConflict { rb });
            }
        }
    }

    let reserved = alloc.reserved.len();
    for (id, bid) in &by_id {
        let assigned = alloc.num_assigned(*id);
        if bid.kind().is_relay() && alloc.is_winner(*id) && assigned > reserved {
            violations.push(Violation::ReservationTooSmall {
                id: *id,
                assigned,
                reserved,
            });
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Bid, BidderKind, CqiRateTable};
    use crate::num::int;
    use alloc::vec;

    fn cfg() -> SlotConfig {
        SlotConfig::new(12, 2, CqiRateTable::flat(int(1)).unwrap()).unwrap()
    }

    fn alloc_of(rows: &[(u32, &[usize])], reserved: &[usize]) -> Allocation {
        let mut alloc = Allocation::default();
        for (id, rbs) in rows {
            alloc.winners.insert(BidderId(*id), true);
            alloc
                .assignment
                .insert(BidderId(*id), rbs.iter().copied().collect());
        }
        alloc.reserved = reserved.iter().copied().collect();
        alloc
    }

    #[test]
    fn two_ue_winners_are_feasible() {
        let bids = vec![
            Bid::new(1, BidderKind::DirectUe, 3, int(9)),
            Bid::new(2, BidderKind::DirectUe, 4, int(8)),
            Bid::new(3, BidderKind::RelayNode, 3, int(3)),
        ];
        let mut alloc = alloc_of(&[(1, &[1, 2, 3]), (2, &[4, 5, 6, 7])], &[]);
        alloc.winners.insert(BidderId(3), false);
        assert!(check_feasibility(&cfg(), &bids, &alloc).is_empty());
    }

    #[test]
    fn small_reservation_is_reported() {
        let bids = vec![Bid::new(3, BidderKind::RelayNode, 3, int(3))];
        let alloc = alloc_of(&[(3, &[1, 2, 3])], &[4, 5]);
        assert_eq!(
            check_feasibility(&cfg(), &bids, &alloc),
            vec![Violation::ReservationTooSmall {
                id: BidderId(3),
                assigned: 3,
                reserved: 2
            }]
        );
    }

    #[test]
    fn shared_rb_is_reported() {
        let bids = vec![
            Bid::new(1, BidderKind::DirectUe, 2, int(1)),
            Bid::new(2, BidderKind::DirectUe, 2, int(1)),
        ];
        let alloc = alloc_of(&[(1, &[4, 5]), (2, &[5, 6])], &[]);
        assert_eq!(
            check_feasibility(&cfg(), &bids, &alloc),
            vec![Violation::RbConflict { rb: 5 }]
        );
    }

    #[test]
    fn demand_range_and_loser_checks() {
        let bids = vec![
            Bid::new(1, BidderKind::DirectUe, 2, int(1)),
            Bid::new(2, BidderKind::DirectUe, 2, int(1)),
        ];
        let mut alloc = alloc_of(&[(1, &[1, 13])], &[]);
        alloc.winners.insert(BidderId(2), false);
        alloc
            .assignment
            .insert(BidderId(2), [3].into_iter().collect());
        alloc.winners.insert(BidderId(9), true);
        let v = check_feasibility(&cfg(), &bids, &alloc);
        assert!(v.contains(&Violation::UnknownBidder(BidderId(9))));
        assert!(v.contains(&Violation::LoserAssigned {
            id: BidderId(2),
            assigned: 1
        }));
        assert!(v.contains(&Violation::RbOutOfRange { rb: 13 }));

        let short = alloc_of(&[(1, &[1])], &[]);
        assert_eq!(
            check_feasibility(&cfg(), &bids[..1], &short),
            vec![Violation::DemandMismatch {
                id: BidderId(1),
                demand: 2,
                assigned: 1
            }]
        );
        assert!(check_feasibility_with(&cfg(), &bids[..1], &short, DemandRule::Ignore).is_empty());
    }
}
