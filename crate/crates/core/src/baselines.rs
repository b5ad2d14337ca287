//! Non-auction schedulers used as comparison points: Round Robin and Best
//! CQI. Both hand out every RB and ignore demands; winning relay nodes then
//! get their reservation by trimming RBs from the top of the band.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::model::{Allocation, BidderId, ExtendedBid, SlotConfig};
use crate::num::Rational;

fn sorted_ids(bids: &[ExtendedBid]) -> Vec<BidderId> {
    let mut ids: Vec<BidderId> = bids.iter().map(|b| b.id).collect();
    ids.sort_unstable();
    ids
}

fn from_owners(
    bids: &[ExtendedBid],
    owners: impl Iterator<Item = (usize, BidderId)>,
) -> Allocation {
    let mut alloc = Allocation::empty(bids.iter().map(|b| b.id));
    for (rb, id) in owners {
        alloc.winners.insert(id, true);
        alloc.assignment.entry(id).or_default().insert(rb);
    }
    reserve_for_relays(bids, &mut alloc);
    alloc
}

/// Moves the highest-indexed assigned RBs into the reservation until it
/// covers every winning relay's holding. Bidders left without RBs lose.
fn reserve_for_relays(bids: &[ExtendedBid], alloc: &mut Allocation) {
    let relays: Vec<BidderId> = bids
        .iter()
        .filter(|b| b.kind.is_relay())
        .map(|b| b.id)
        .collect();
    loop {
        let needed = relays
            .iter()
            .map(|&id| alloc.num_assigned(id))
            .max()
            .unwrap_or(0);
        if alloc.reserved.len() >= needed {
            break;
        }
        let top = alloc
            .assignment
            .iter()
            .filter_map(|(id, rbs)| rbs.last().map(|&rb| (rb, *id)))
            .max();
        let Some((rb, id)) = top else { break };
        let rbs = alloc.assignment.get_mut(&id).expect("owner present");
        rbs.remove(&rb);
        if rbs.is_empty() {
            alloc.assignment.remove(&id);
            alloc.winners.insert(id, false);
        }
        alloc.reserved.insert(rb);
    }
}

/// Round Robin: RB `k` goes to the bidder at position `(cursor + k - 1) mod B`
/// in id order. Returns the allocation and the cursor for the next slot,
/// `(cursor + N) mod B`, so the rotation carries over between slots.
pub fn round_robin(
    config: &SlotConfig,
    bids: &[ExtendedBid],
    cursor: usize,
) -> (Allocation, usize) {
    let ids = sorted_ids(bids);
    if ids.is_empty() {
        return (Allocation::default(), 0);
    }
    let b = ids.len();
    let n = config.num_rbs();
    let owners = (1..=n).map(|k| (k, ids[(cursor + k - 1) % b]));
    (from_owners(bids, owners), (cursor + n) % b)
}

/// Best CQI: every RB goes to the bidder with the highest CQI in its
/// sub-band, ties to the lower id.
pub fn best_cqi(config: &SlotConfig, bids: &[ExtendedBid]) -> Allocation {
    let mut order: Vec<&ExtendedBid> = bids.iter().collect();
    order.sort_unstable_by_key(|b| b.id);
    if order.is_empty() {
        return Allocation::default();
    }
    let owner_of_subband: Vec<BidderId> = (0..config.num_subbands())
        .map(|s| {
            let mut best = order[0];
            for &b in &order[1..] {
                if b.cqi[s] > best.cqi[s] {
                    best = b;
                }
            }
            best.id
        })
        .collect();
    let owners = (1..=config.num_rbs()).map(|k| (k, owner_of_subband[config.subband_of(k)]));
    from_owners(bids, owners)
}

/// Information bits delivered to each bidder.
pub fn throughput(
    config: &SlotConfig,
    bids: &[ExtendedBid],
    alloc: &Allocation,
) -> BTreeMap<BidderId, Rational> {
    bids.iter()
        .map(|b| (b.id, crate::model::delivered_bits(config, b, alloc)))
        .collect()
}

/// Welfare with values capped at demand: each bidder values only its best
/// `min(r_i, |RBs received|)` RBs, at its unit price per bit.
///
/// This makes schedulers that ignore demand comparable with the auction,
/// whose winners receive exactly their demand.
pub fn capped_welfare(config: &SlotConfig, bids: &[ExtendedBid], alloc: &Allocation) -> Rational {
    let table = config.rate_table();
    bids.iter()
        .filter_map(|b| alloc.rbs(b.id).map(|rbs| (b, rbs)))
        .fold(Rational::zero(), |acc, (b, rbs)| {
            let mut units: Vec<u128> = rbs
                .iter()
                .map(|&rb| table.units(b.cqi[config.subband_of(rb)]))
                .collect();
            units.sort_unstable_by(|x, y| y.cmp(x));
            let kept: u128 = units.iter().take(b.demand).sum();
            acc + &b.unit_value * table.units_to_bits(kept)
        })
}
