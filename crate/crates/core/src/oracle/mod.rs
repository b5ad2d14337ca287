//! Exact solvers for small instances, used to measure the greedy
//! allocators against the optimum, and a grid search for critical prices.
//!
//! An allocation is feasible iff the winners' demands plus the largest
//! winning relay demand fit into the `N` RBs.

mod flow;

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::AuctionError;
use crate::model::{
    validate_basic, validate_extended, Allocation, AuctionBid, Bid, ExtendedBid, SlotConfig,
};
use crate::num::Rational;
use crate::payments::AllocationRule;

pub use flow::MinCostFlow;

/// Largest bid set [`optimal_basic`] accepts.
pub const MAX_BASIC_BIDS: usize = 22;
/// Largest bid set [`optimal_extended`] accepts.
pub const MAX_EXTENDED_BIDS: usize = 14;
/// Largest RB count [`optimal_extended`] accepts.
pub const MAX_EXTENDED_RBS: usize = 32;

fn feasible<B: AuctionBid>(bids: &[B], chosen: &[usize], n: usize) -> bool {
    let total: usize = chosen.iter().map(|&i| bids[i].demand()).sum();
    let relay = chosen
        .iter()
        .filter(|&&i| bids[i].kind().is_relay())
        .map(|&i| bids[i].demand())
        .max()
        .unwrap_or(0);
    total + relay <= n
}

/// Depth-first search over winner sets in increasing id order. `bound(i)`
/// is an upper bound on what bidder `i` can add, `value(set)` the exact
/// value of a feasible set, or `None` to abort.
struct SubsetSearch<'a, B, F> {
    bids: &'a [B],
    n: usize,
    order: Vec<usize>,
    /// suffix_bound[k] bounds the value of bidders `order[k..]`.
    suffix_bound: Vec<BigInt>,
    value: F,
    best: Option<(BigInt, Vec<usize>)>,
    error: Option<AuctionError>,
}

impl<'a, B, F> SubsetSearch<'a, B, F>
where
    B: AuctionBid,
    F: FnMut(&[usize]) -> Result<BigInt, AuctionError>,
{
    fn new(bids: &'a [B], n: usize, bound: impl Fn(usize) -> BigInt, value: F) -> Self {
        let mut order: Vec<usize> = (0..bids.len()).collect();
        order.sort_by_key(|&i| bids[i].id());
        let mut suffix_bound = vec![BigInt::zero(); order.len() + 1];
        for k in (0..order.len()).rev() {
            suffix_bound[k] = &suffix_bound[k + 1] + bound(order[k]);
        }
        Self {
            bids,
            n,
            order,
            suffix_bound,
            value,
            best: None,
            error: None,
        }
    }

    fn solve(mut self) -> Result<(BigInt, Vec<usize>), AuctionError> {
        let mut chosen = Vec::new();
        self.visit(0, &mut chosen, BigInt::zero());
        if let Some(e) = self.error {
            return Err(e);
        }
        Ok(self.best.unwrap_or((BigInt::zero(), Vec::new())))
    }

    fn visit(&mut self, k: usize, chosen: &mut Vec<usize>, bound_so_far: BigInt) {
        if self.error.is_some() {
            return;
        }
        if let Some((best, _)) = &self.best {
            if &bound_so_far + &self.suffix_bound[k] < *best {
                return;
            }
        }
        if k == self.order.len() {
            let value = match (self.value)(chosen) {
                Ok(v) => v,
                Err(e) => {
                    self.error = Some(e);
                    return;
                }
            };
            // chosen is sorted by id, so vector order is the id order
            let better = match &self.best {
                None => true,
                Some((best, ids)) => {
                    value > *best || (value == *best && self.ids(chosen) < self.ids(ids))
                }
            };
            if better {
                self.best = Some((value, chosen.clone()));
            }
            return;
        }
        let i = self.order[k];
        chosen.push(i);
        if feasible(self.bids, chosen, self.n) {
            let b = &bound_so_far + (&self.suffix_bound[k] - &self.suffix_bound[k + 1]);
            self.visit(k + 1, chosen, b);
        }
        chosen.pop();
        self.visit(k + 1, chosen, bound_so_far);
    }

    fn ids(&self, set: &[usize]) -> Vec<u32> {
        set.iter().map(|&i| self.bids[i].id().0).collect()
    }
}

/// Common denominator of `values` and the integer numerators over it.
fn integer_image<'a, I: Iterator<Item = &'a Rational> + Clone>(values: I) -> (BigInt, Vec<BigInt>) {
    let denom = values
        .clone()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let numers = values.map(|v| v.numer() * (&denom / v.denom())).collect();
    (denom, numers)
}

/// Welfare-maximizing allocation of the basic model, by exhaustive search
/// with value-sum pruning. Winners get consecutive RBs in id order and the
/// reservation follows them. Among optimal winner sets the one whose sorted
/// id list is lexicographically smallest is returned.
pub fn optimal_basic(
    config: &SlotConfig,
    bids: &[Bid],
) -> Result<(Allocation, Rational), AuctionError> {
    validate_basic(config, bids)?;
    if bids.len() > MAX_BASIC_BIDS {
        return Err(AuctionError::TooLarge(
            "basic oracle handles at most 22 bids",
        ));
    }
    let (denom, values) = integer_image(bids.iter().map(|b| &b.value));
    let search = SubsetSearch::new(
        bids,
        config.num_rbs(),
        |i| values[i].clone(),
        |set: &[usize]| Ok(set.iter().map(|&i| &values[i]).sum()),
    );
    let (best, set) = search.solve()?;

    let mut alloc = Allocation::empty(bids.iter().map(|b| b.id));
    let mut next = 1usize;
    let mut reservation = 0usize;
    for &i in &set {
        let bid = &bids[i];
        alloc.winners.insert(bid.id, true);
        alloc
            .assignment
            .insert(bid.id, (next..next + bid.demand).collect());
        next += bid.demand;
        if bid.kind.is_relay() {
            reservation = reservation.max(bid.demand);
        }
    }
    alloc.reserved = (next..next + reservation).collect();
    Ok((alloc, Rational::new(best, denom)))
}

/// Per-RB weights of the extended model as integers: `weight[i][s]` is the
/// value of one RB of sub-band `s` to bidder `i`, times a common scale.
struct ExtendedWeights {
    weight: Vec<Vec<i128>>,
    /// Value = weight / scale.
    scale: BigInt,
}

impl ExtendedWeights {
    fn new(config: &SlotConfig, bids: &[ExtendedBid]) -> Result<Self, AuctionError> {
        let table = config.rate_table();
        let (denom, numers) = integer_image(bids.iter().map(|b| &b.unit_value));
        let too_large = AuctionError::TooLarge("extended oracle weights overflow i128");
        let mut weight = Vec::with_capacity(bids.len());
        for (bid, v) in bids.iter().zip(&numers) {
            let v = v.to_i128().ok_or(too_large.clone())?;
            let row = bid
                .cqi
                .iter()
                .map(|&c| {
                    i128::try_from(table.units(c))
                        .ok()
                        .and_then(|u| v.checked_mul(u))
                        .ok_or(too_large.clone())
                })
                .collect::<Result<Vec<_>, _>>()?;
            weight.push(row);
        }
        Ok(Self {
            weight,
            scale: denom * BigInt::from(table.scale()),
        })
    }

    /// Best value of bidder `i` alone: its `r_i` best RBs.
    fn solo(&self, config: &SlotConfig, bid: &ExtendedBid, i: usize) -> i128 {
        let mut row = self.weight[i].clone();
        row.sort_unstable_by(|a, b| b.cmp(a));
        let mut left = bid.demand;
        let mut total = 0i128;
        for w in row {
            let take = left.min(config.subband_size());
            total = total.saturating_add(w.saturating_mul(take as i128));
            left -= take;
            if left == 0 {
                break;
            }
        }
        total
    }
}

/// Optimal RB-to-bidder counts per sub-band for a fixed winner set.
fn transport(
    config: &SlotConfig,
    bids: &[ExtendedBid],
    weights: &ExtendedWeights,
    set: &[usize],
) -> Result<(i128, Vec<Vec<i64>>), AuctionError> {
    let subbands = config.num_subbands();
    let (source, sink) = (set.len() + subbands, set.len() + subbands + 1);
    let mut g = MinCostFlow::new(set.len() + subbands + 2);
    let mut arcs = vec![Vec::with_capacity(subbands); set.len()];
    let mut total_demand = 0i64;
    for (row, &i) in set.iter().enumerate() {
        let r = bids[i].demand as i64;
        total_demand += r;
        g.add_edge(source, row, r, 0);
        for s in 0..subbands {
            let cap = r.min(config.subband_size() as i64);
            arcs[row].push(g.add_edge(row, set.len() + s, cap, -weights.weight[i][s]));
        }
    }
    for s in 0..subbands {
        g.add_edge(set.len() + s, sink, config.subband_size() as i64, 0);
    }
    let (sent, cost) = g
        .run(source, sink, total_demand)
        .ok_or(AuctionError::TooLarge("extended oracle cost overflow"))?;
    debug_assert_eq!(sent, total_demand);
    let counts = arcs
        .iter()
        .map(|row| row.iter().map(|&a| g.flow_on(a)).collect())
        .collect();
    Ok((-cost, counts))
}

/// Welfare-maximizing allocation of the extended model.
///
/// Searches winner sets with upper-bound pruning and solves the RB
/// assignment of each candidate set as a transportation problem. Within a
/// sub-band, RBs go to winners in id order from the lowest index; the
/// reservation takes the lowest RBs left over.
pub fn optimal_extended(
    config: &SlotConfig,
    bids: &[ExtendedBid],
) -> Result<(Allocation, Rational), AuctionError> {
    validate_extended(config, bids)?;
    if bids.len() > MAX_EXTENDED_BIDS {
        return Err(AuctionError::TooLarge(
            "extended oracle handles at most 14 bids",
        ));
    }
    if config.num_rbs() > MAX_EXTENDED_RBS {
        return Err(AuctionError::TooLarge(
            "extended oracle handles at most 32 RBs",
        ));
    }
    let weights = ExtendedWeights::new(config, bids)?;
    let solo: Vec<i128> = bids
        .iter()
        .enumerate()
        .map(|(i, b)| weights.solo(config, b, i))
        .collect();
    let search = SubsetSearch::new(
        bids,
        config.num_rbs(),
        |i| BigInt::from(solo[i]),
        |set: &[usize]| transport(config, bids, &weights, set).map(|(v, _)| BigInt::from(v)),
    );
    let (best, set) = search.solve()?;
    let (_, counts) = transport(config, bids, &weights, &set)?;

    let mut alloc = Allocation::empty(bids.iter().map(|b| b.id));
    let mut taken: BTreeSet<usize> = BTreeSet::new();
    let mut reservation = 0usize;
    for (row, &i) in set.iter().enumerate() {
        let bid = &bids[i];
        let mut rbs = BTreeSet::new();
        for (s, &count) in counts[row].iter().enumerate() {
            let free = config.rbs_of_subband(s).filter(|rb| !taken.contains(rb));
            let picked: Vec<usize> = free.take(count as usize).collect();
            taken.extend(picked.iter().copied());
            rbs.extend(picked);
        }
        alloc.winners.insert(bid.id, true);
        alloc.assignment.insert(bid.id, rbs);
        if bid.kind.is_relay() {
            reservation = reservation.max(bid.demand);
        }
    }
    alloc.reserved = (1..=config.num_rbs())
        .filter(|rb| !taken.contains(rb))
        .take(reservation)
        .collect();
    Ok((alloc, Rational::new(best, weights.scale)))
}

/// Smallest price on the grid `0, step, 2 step, ...` (capped at, and
/// always including, the bid's own price) at which `id` wins, or `None` if
/// it wins nowhere on the grid. For a monotone rule the true critical price
/// lies within `step` below the returned value.
pub fn sweep_critical_price<R: AllocationRule>(
    rule: &R,
    config: &SlotConfig,
    bids: &[R::Bid],
    id: crate::model::BidderId,
    step: &Rational,
) -> Result<Option<Rational>, AuctionError> {
    if *step <= Rational::zero() {
        return Err(AuctionError::InvalidEpsilon);
    }
    let pos = bids
        .iter()
        .position(|b| b.id() == id)
        .ok_or(AuctionError::UnknownBidder(id))?;
    let value = bids[pos].price().clone();
    let mut probe = bids.to_vec();
    let mut price = Rational::zero();
    loop {
        let capped = if price > value {
            value.clone()
        } else {
            price.clone()
        };
        probe[pos] = bids[pos].with_price(capped.clone());
        if rule.wins(config, &probe, id)? {
            return Ok(Some(capped));
        }
        if capped == value {
            return Ok(None);
        }
        price += step;
    }
}
