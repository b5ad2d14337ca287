//! Greedy primal-dual winner determination for the extended model, where
//! the value of an RB depends on the bidder's CQI in the RB's sub-band.
//!
//! Each iteration offers every remaining bidder its most valuable set of
//! `r_i` free RBs and admits the bidder whose set is worth the most. The dual
//! update and the loop guard are those of [`crate::alloc_basic`]; since every
//! per-RB `lambda_k` is scaled by the same factor, `sum_k lambda_k` equals
//! `N lambda` and the guard again reduces to the admitted demand staying
//! within `N - 2 max r`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::Add;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::alloc_basic::delta;
use crate::error::AuctionError;
use crate::model::{
    delivered_bits, validate_extended, Allocation, BidderId, DualScalar, DualSnapshot, ExtendedBid,
    SlotConfig,
};
use crate::num::{from_usize, Rational};
use crate::payments::AllocationRule;

/// Best `r`-subset of `values` by partial sorting: the `r` largest values,
/// equal values resolved towards lower indices. Returns the indices in
/// ascending order and their sum.
pub fn top_r_subset<T>(values: &[T], r: usize) -> Result<(Vec<usize>, T), AuctionError>
where
    T: Ord + Clone + Zero + Add<Output = T>,
{
    if r > values.len() {
        return Err(AuctionError::RTooLarge {
            r,
            len: values.len(),
        });
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let by_value = |a: &usize, b: &usize| values[*b].cmp(&values[*a]).then(a.cmp(b));
    if r > 0 && r < idx.len() {
        idx.select_nth_unstable_by(r - 1, by_value);
    }
    idx.truncate(r);
    idx.sort_unstable();
    let total = idx
        .iter()
        .fold(T::zero(), |acc, &i| acc + values[i].clone());
    Ok((idx, total))
}

/// Best `r`-subset of `values` by dynamic programming over prefixes:
///
/// ```text
/// f(k, j) = max(f(k-1, j-1) + e_k, f(k-1, j))   for k > j >= 1
/// f(k, k) = e_1 + ... + e_k
/// f(k, 0) = 0
/// ```
///
/// Runs in `O(len * r)`. Among optimal subsets the one using lower indices
/// is returned, so the result matches [`top_r_subset`].
pub fn top_r_subset_dp<T>(values: &[T], r: usize) -> Result<(Vec<usize>, T), AuctionError>
where
    T: Ord + Clone + Zero + Add<Output = T>,
{
    let len = values.len();
    if r > len {
        return Err(AuctionError::RTooLarge { r, len });
    }
    // table[k][j] = f(k, j) for j <= k
    let mut table: Vec<Vec<T>> = Vec::with_capacity(len + 1);
    table.push(vec![T::zero()]);
    for k in 1..=len {
        let width = k.min(r);
        let mut row = Vec::with_capacity(width + 1);
        row.push(T::zero());
        for j in 1..=width {
            let take = table[k - 1][j - 1].clone() + values[k - 1].clone();
            let value = if j == k {
                take
            } else {
                core::cmp::max(take, table[k - 1][j].clone())
            };
            row.push(value);
        }
        table.push(row);
    }
    let total = table[len][r].clone();

    let mut chosen = Vec::with_capacity(r);
    let mut j = r;
    for k in (1..=len).rev() {
        if j == 0 {
            break;
        }
        // skip e_k whenever that keeps the optimum: prefers lower indices
        let can_skip = k > j && table[k - 1][j] == table[k][j];
        if !can_skip {
            chosen.push(k - 1);
            j -= 1;
        }
    }
    chosen.reverse();
    Ok((chosen, total))
}

/// How each bidder's best RB set is computed inside the allocator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Selection {
    /// Walks the bidder's sub-bands from best to worst rate, taking the
    /// lowest free RBs of each. Equivalent to [`top_r_subset`] on the RB
    /// values and linear in the number of sub-bands.
    #[default]
    SubbandWalk,
    /// [`top_r_subset`] over the values of the free RBs.
    PartialSort,
    /// [`top_r_subset_dp`] over the values of the free RBs.
    Dp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExtendedOptions {
    pub selection: Selection,
    /// Rank candidates by value per demanded RB instead of total value.
    /// Experimental; not the default rule.
    pub normalized: bool,
}

/// Final dual state of [`allocate_extended`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualStateExtended {
    pub delta: Option<Rational>,
    /// One entry per RB; all entries are equal at every iteration.
    pub lambda: Vec<DualScalar>,
    pub rho: BTreeMap<BidderId, DualScalar>,
    pub xi: BTreeMap<BidderId, Rational>,
    pub iterations: usize,
}

/// Free-RB bookkeeping of one allocation run.
struct FreeRbs {
    free: Vec<bool>,
    per_subband: Vec<usize>,
    total: usize,
}

impl FreeRbs {
    fn new(config: &SlotConfig) -> Self {
        let mut free = vec![true; config.num_rbs() + 1];
        free[0] = false;
        Self {
            free,
            per_subband: vec![config.subband_size(); config.num_subbands()],
            total: config.num_rbs(),
        }
    }

    fn take(&mut self, config: &SlotConfig, rb: usize) {
        debug_assert!(self.free[rb]);
        self.free[rb] = false;
        self.per_subband[config.subband_of(rb)] -= 1;
        self.total -= 1;
    }

    fn lowest_free(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        (1..self.free.len()).filter(|&rb| self.free[rb]).take(n)
    }
}

/// A candidate's best set and its worth.
struct Offer {
    rbs: Vec<usize>,
    /// Comparison key; its scale depends on the selection method.
    score: Rational,
}

struct Extended<'a> {
    config: &'a SlotConfig,
    bids: &'a [ExtendedBid],
    options: ExtendedOptions,
    /// Sub-bands of each bidder from most to least valuable.
    walk_order: Vec<Vec<usize>>,
}

impl<'a> Extended<'a> {
    fn new(config: &'a SlotConfig, bids: &'a [ExtendedBid], options: ExtendedOptions) -> Self {
        let table = config.rate_table();
        let walk_order = if options.selection == Selection::SubbandWalk {
            bids.iter()
                .map(|bid| {
                    let mut order: Vec<usize> = (0..config.num_subbands()).collect();
                    if !bid.unit_value.is_zero() {
                        order.sort_by(|&a, &b| {
                            table
                                .units(bid.cqi[b])
                                .cmp(&table.units(bid.cqi[a]))
                                .then(a.cmp(&b))
                        });
                    }
                    order
                })
                .collect()
        } else {
            Vec::new()
        };
        Self {
            config,
            bids,
            options,
            walk_order,
        }
    }

    fn offer(&self, idx: usize, free: &FreeRbs) -> Offer {
        let bid = &self.bids[idx];
        let mut offer = match self.options.selection {
            Selection::SubbandWalk => self.walk_offer(idx, free),
            Selection::PartialSort | Selection::Dp => {
                let rbs: Vec<usize> = (1..=self.config.num_rbs())
                    .filter(|&k| free.free[k])
                    .collect();
                let values: Vec<Rational> = rbs
                    .iter()
                    .map(|&k| crate::model::rb_value(bid, k, self.config))
                    .collect();
                let (picked, total) = if self.options.selection == Selection::Dp {
                    top_r_subset_dp(&values, bid.demand)
                } else {
                    top_r_subset(&values, bid.demand)
                }
                .expect("caller checks that enough RBs are free");
                Offer {
                    rbs: picked.into_iter().map(|i| rbs[i]).collect(),
                    score: total,
                }
            }
        };
        if self.options.normalized {
            offer.score /= from_usize(bid.demand);
        }
        offer
    }

    fn walk_offer(&self, idx: usize, free: &FreeRbs) -> Offer {
        let bid = &self.bids[idx];
        let table = self.config.rate_table();
        let mut remaining = bid.demand;
        let mut units: u128 = 0;
        let mut rbs = Vec::with_capacity(bid.demand);
        for &sub in &self.walk_order[idx] {
            if remaining == 0 {
                break;
            }
            let take = free.per_subband[sub].min(remaining);
            if take == 0 {
                continue;
            }
            units += take as u128 * table.units(bid.cqi[sub]);
            remaining -= take;
            rbs.extend(
                self.config
                    .rbs_of_subband(sub)
                    .filter(|&k| free.free[k])
                    .take(take),
            );
        }
        rbs.sort_unstable();
        // v * units is the set's value times the table scale
        Offer {
            rbs,
            score: &bid.unit_value * Rational::from_integer(BigInt::from(units)),
        }
    }

    /// Runs the greedy loop. With `stop_at`, returns as soon as that bidder
    /// is admitted.
    fn run(&self, stop_at: Option<BidderId>) -> Vec<(usize, Vec<usize>)> {
        let mut admitted = Vec::new();
        if self.bids.is_empty() {
            return admitted;
        }
        let max_demand = self.bids.iter().map(|b| b.demand).max().unwrap_or(0);
        let budget = self.config.num_rbs() - 2 * max_demand;
        let mut free = FreeRbs::new(self.config);
        let mut remaining: Vec<usize> = (0..self.bids.len()).collect();
        let mut used = 0usize;

        while !remaining.is_empty() && used <= budget {
            let mut best: Option<(usize, Offer)> = None;
            for (pos, &idx) in remaining.iter().enumerate() {
                if free.total < self.bids[idx].demand {
                    continue;
                }
                let offer = self.offer(idx, &free);
                let better = match &best {
                    None => true,
                    Some((best_pos, best_offer)) => match offer.score.cmp(&best_offer.score) {
                        Ordering::Greater => true,
                        Ordering::Less => false,
                        Ordering::Equal => self.bids[idx].id < self.bids[remaining[*best_pos]].id,
                    },
                };
                if better {
                    best = Some((pos, offer));
                }
            }
            let Some((pos, offer)) = best else { break };
            let idx = remaining.swap_remove(pos);
            for &rb in &offer.rbs {
                free.take(self.config, rb);
            }
            used += self.bids[idx].demand;
            let id = self.bids[idx].id;
            admitted.push((idx, offer.rbs));
            if stop_at == Some(id) {
                break;
            }
        }
        admitted
    }
}

/// Runs the extended greedy allocation with default options.
pub fn allocate_extended(
    config: &SlotConfig,
    bids: &[ExtendedBid],
) -> Result<(Allocation, DualStateExtended), AuctionError> {
    allocate_extended_with(config, bids, ExtendedOptions::default())
}

pub fn allocate_extended_with(
    config: &SlotConfig,
    bids: &[ExtendedBid],
    options: ExtendedOptions,
) -> Result<(Allocation, DualStateExtended), AuctionError> {
    validate_extended(config, bids)?;
    let n = config.num_rbs();
    let inv_n = Rational::new(BigInt::from(1), BigInt::from(n));
    let relay_count = bids.iter().filter(|b| b.kind.is_relay()).count();
    let mut alloc = Allocation::empty(bids.iter().map(|b| b.id));
    let mut lambda = DualScalar {
        coeff: inv_n.clone(),
        exponent: Rational::zero(),
    };
    let mut rho: BTreeMap<BidderId, DualScalar> = bids
        .iter()
        .filter(|b| b.kind.is_relay())
        .map(|b| (b.id, DualScalar::zero()))
        .collect();
    let mut xi: BTreeMap<BidderId, Rational> =
        bids.iter().map(|b| (b.id, Rational::zero())).collect();

    let admitted = Extended::new(config, bids, options).run(None);
    let max_demand = bids.iter().map(|b| b.demand).max().unwrap_or(0);
    let mut reservation = 0usize;
    let mut free = FreeRbs::new(config);
    for (idx, rbs) in &admitted {
        let bid = &bids[*idx];
        for &rb in rbs {
            free.take(config, rb);
        }
        alloc.winners.insert(bid.id, true);
        alloc
            .assignment
            .insert(bid.id, rbs.iter().copied().collect());
        xi.insert(
            bid.id,
            &bid.unit_value * delivered_bits(config, bid, &alloc),
        );
        if bid.kind.is_relay() {
            reservation = reservation.max(bid.demand);
            rho.insert(
                bid.id,
                DualScalar {
                    coeff: &inv_n / from_usize(relay_count),
                    exponent: lambda.exponent.clone(),
                },
            );
        }
        lambda.exponent += from_usize(bid.demand) / from_usize(n - 2 * max_demand);
    }
    alloc.reserved = free.lowest_free(reservation).collect();

    let state = DualStateExtended {
        delta: delta(config, bids),
        lambda: vec![lambda; n],
        rho,
        xi,
        iterations: admitted.len(),
    };
    Ok((alloc, state))
}

/// [`allocate_extended_with`] as an [`AllocationRule`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ExtendedRule {
    pub options: ExtendedOptions,
}

impl AllocationRule for ExtendedRule {
    type Bid = ExtendedBid;

    fn validate(&self, config: &SlotConfig, bids: &[ExtendedBid]) -> Result<(), AuctionError> {
        validate_extended(config, bids)
    }

    fn allocate(
        &self,
        config: &SlotConfig,
        bids: &[ExtendedBid],
    ) -> Result<(Allocation, DualSnapshot), AuctionError> {
        let (alloc, state) = allocate_extended_with(config, bids, self.options)?;
        Ok((alloc, DualSnapshot::Extended(state)))
    }

    fn wins(
        &self,
        config: &SlotConfig,
        bids: &[ExtendedBid],
        id: BidderId,
    ) -> Result<bool, AuctionError> {
        validate_extended(config, bids)?;
        let admitted = Extended::new(config, bids, self.options).run(Some(id));
        Ok(admitted.iter().any(|(idx, _)| bids[*idx].id == id))
    }

    fn gross_value(&self, config: &SlotConfig, bid: &ExtendedBid, alloc: &Allocation) -> Rational {
        if alloc.is_winner(bid.id) {
            &bid.unit_value * delivered_bits(config, bid, alloc)
        } else {
            Rational::zero()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alloc_basic::allocate_basic;
    use crate::model::{
        check_feasibility, welfare_basic, welfare_extended, Bid, BidderKind, CqiRateTable,
    };
    use crate::num::int;

    /// Rate at CQI c is c bits, so CQI values double as rates.
    fn identity_table() -> CqiRateTable {
        CqiRateTable::new(core::array::from_fn(|c| int(c as i64))).unwrap()
    }

    fn canonical() -> (SlotConfig, Vec<ExtendedBid>) {
        let cfg = SlotConfig::new(8, 2, identity_table()).unwrap();
        let bids = vec![
            ExtendedBid::new(1, BidderKind::DirectUe, 2, int(2), vec![3, 1, 1, 1]),
            ExtendedBid::new(2, BidderKind::DirectUe, 2, int(1), vec![2, 4, 1, 1]),
        ];
        (cfg, bids)
    }

    #[test]
    fn top_r_examples() {
        let values = [5i64, 1, 3];
        assert_eq!(top_r_subset(&values, 2).unwrap(), (vec![0, 2], 8));
        assert_eq!(top_r_subset_dp(&values, 2).unwrap(), (vec![0, 2], 8));
        assert_eq!(top_r_subset(&values, 0).unwrap(), (vec![], 0));
        assert_eq!(top_r_subset_dp(&values, 0).unwrap(), (vec![], 0));
        assert_eq!(top_r_subset(&values, 3).unwrap(), (vec![0, 1, 2], 9));
        assert_eq!(top_r_subset_dp(&values, 3).unwrap(), (vec![0, 1, 2], 9));
        assert_eq!(
            top_r_subset(&values, 4),
            Err(AuctionError::RTooLarge { r: 4, len: 3 })
        );
        assert!(top_r_subset_dp(&values, 4).is_err());
    }

    #[test]
    fn top_r_ties_prefer_low_indices() {
        let values = [2i64, 7, 2, 2, 7];
        assert_eq!(top_r_subset(&values, 3).unwrap(), (vec![0, 1, 4], 16));
        assert_eq!(top_r_subset_dp(&values, 3).unwrap(), (vec![0, 1, 4], 16));
    }

    #[test]
    fn canonical_trace() {
        let (cfg, bids) = canonical();
        let (alloc, state) = allocate_extended(&cfg, &bids).unwrap();
        let rbs = |id| {
            alloc
                .rbs(BidderId(id))
                .unwrap()
                .iter()
                .copied()
                .collect::<Vec<_>>()
        };
        assert_eq!(rbs(1), vec![1, 2]);
        assert_eq!(rbs(2), vec![3, 4]);
        assert_eq!(welfare_extended(&bids, &alloc, &cfg), int(20));
        assert_eq!(state.xi[&BidderId(1)], int(12));
        assert_eq!(state.xi[&BidderId(2)], int(8));
        assert_eq!(state.iterations, 2);
        assert_eq!(state.lambda.len(), 8);
        assert!(state.lambda.windows(2).all(|w| w[0] == w[1]));
        // after one admission sum_k lambda_k = e (budget 4, demand 2, delta 4)
        assert_eq!(state.lambda[0].exponent, int(1));
        assert!(check_feasibility(&cfg, &bids, &alloc).is_empty());
    }

    #[test]
    fn selection_methods_agree_on_canonical() {
        let (cfg, bids) = canonical();
        let base = allocate_extended(&cfg, &bids).unwrap().0;
        for selection in [Selection::PartialSort, Selection::Dp] {
            let opts = ExtendedOptions {
                selection,
                normalized: false,
            };
            assert_eq!(allocate_extended_with(&cfg, &bids, opts).unwrap().0, base);
        }
    }

    #[test]
    fn single_bidder_takes_its_best_rbs() {
        let cfg = SlotConfig::new(12, 2, identity_table()).unwrap();
        let bid = ExtendedBid::new(4, BidderKind::DirectUe, 5, int(1), vec![1, 9, 2, 9, 3, 8]);
        let (alloc, _) = allocate_extended(&cfg, &[bid]).unwrap();
        let rbs: Vec<usize> = alloc.rbs(BidderId(4)).unwrap().iter().copied().collect();
        assert_eq!(rbs, vec![3, 4, 7, 8, 11]);
    }

    #[test]
    fn relay_reservation_uses_lowest_free_rbs() {
        let cfg = SlotConfig::new(12, 2, identity_table()).unwrap();
        let bids = vec![
            ExtendedBid::new(1, BidderKind::RelayNode, 2, int(1), vec![1, 1, 9, 1, 1, 1]),
            ExtendedBid::new(2, BidderKind::DirectUe, 1, int(1), vec![5, 1, 1, 1, 1, 1]),
        ];
        let (alloc, _) = allocate_extended(&cfg, &bids).unwrap();
        assert!(alloc.is_winner(BidderId(1)));
        assert_eq!(
            alloc
                .rbs(BidderId(1))
                .unwrap()
                .iter()
                .copied()
                .collect::<Vec<_>>(),
            vec![5, 6]
        );
        assert_eq!(
            alloc
                .rbs(BidderId(2))
                .unwrap()
                .iter()
                .copied()
                .collect::<Vec<_>>(),
            vec![1]
        );
        assert_eq!(
            alloc.reserved.iter().copied().collect::<Vec<_>>(),
            vec![2, 3]
        );
        assert!(check_feasibility(&cfg, &bids, &alloc).is_empty());
    }

    #[test]
    fn zero_price_bidder_takes_lowest_rbs() {
        let cfg = SlotConfig::new(8, 2, identity_table()).unwrap();
        let bids = vec![ExtendedBid::new(
            1,
            BidderKind::DirectUe,
            2,
            int(0),
            vec![1, 9, 9, 9],
        )];
        let (alloc, _) = allocate_extended(&cfg, &bids).unwrap();
        assert_eq!(
            alloc
                .rbs(BidderId(1))
                .unwrap()
                .iter()
                .copied()
                .collect::<Vec<_>>(),
            vec![1, 2]
        );
    }

    #[test]
    fn uniform_rates_reduce_to_basic_under_normalized_ranking() {
        let cfg = SlotConfig::new(12, 2, CqiRateTable::flat(int(3)).unwrap()).unwrap();
        let ext = vec![
            ExtendedBid::new(1, BidderKind::DirectUe, 4, int(2), vec![7; 6]),
            ExtendedBid::new(2, BidderKind::DirectUe, 3, int(3), vec![7; 6]),
            ExtendedBid::new(
                3,
                BidderKind::RelayNode,
                3,
                crate::num::ratio(5, 2),
                vec![7; 6],
            ),
        ];
        let basic: Vec<Bid> = ext
            .iter()
            .map(|b| Bid {
                id: b.id,
                kind: b.kind,
                demand: b.demand,
                value: &b.unit_value * int(b.demand as i64) * int(3),
            })
            .collect();
        let opts = ExtendedOptions {
            normalized: true,
            ..Default::default()
        };
        let (e_alloc, _) = allocate_extended_with(&cfg, &ext, opts).unwrap();
        let (b_alloc, _) = allocate_basic(&cfg, &basic).unwrap();
        assert_eq!(e_alloc.winners, b_alloc.winners);
        assert_eq!(
            welfare_extended(&ext, &e_alloc, &cfg),
            welfare_basic(&basic, &b_alloc)
        );

        // the default ranking by total value admits bidder 1 before bidder 3
        let (literal, _) = allocate_extended(&cfg, &ext).unwrap();
        assert!(literal.is_winner(BidderId(1)));
        assert!(!b_alloc.is_winner(BidderId(1)));
    }
}
