//! Greedy primal-dual winner determination for the relaying base station
//! model, where RBs are homogeneous.
//!
//! Bids are admitted in descending order of value per RB while the dual
//! price `lambda` stays within its budget. `lambda` starts at `1/N` and is
//! multiplied by `exp(delta - 2)^(r / (N - 2 max r))` for every admitted bid
//! of demand `r`. After admitting bids of total demand `S` we therefore have
//!
//! ```text
//! N * lambda = exp(delta - 2)^(S / (N - 2 max r))
//! ```
//!
//! and the loop guard `N * lambda <= exp(delta - 2)` is equivalent to
//! `S <= N - 2 max r` (as `delta > 2`). The allocator evaluates the guard in
//! that integer form and keeps the dual trajectory symbolic ([`DualScalar`]),
//! so no floating point enters the allocation decision.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::AuctionError;
use crate::model::{
    validate_basic, Allocation, AuctionBid, Bid, BidderId, DualScalar, DualSnapshot, SlotConfig,
};
use crate::num::{self, from_usize, Rational};
use crate::payments::AllocationRule;

/// Final dual state of [`allocate_basic`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualStateBasic {
    /// `N / max r`; `None` for an empty bid set.
    pub delta: Option<Rational>,
    pub lambda: DualScalar,
    /// `rho_i` for every relay node; zero for relays that were not admitted.
    pub rho: BTreeMap<BidderId, DualScalar>,
    /// `xi_i` for every bidder: its value if admitted, zero otherwise.
    pub xi: BTreeMap<BidderId, Rational>,
    /// Number of loop iterations, i.e. admitted bids.
    pub iterations: usize,
}

impl DualStateBasic {
    pub fn lambda_f64(&self) -> f64 {
        match &self.delta {
            Some(d) => self.lambda.to_f64(d),
            None => num::to_f64(&self.lambda.coeff),
        }
    }
}

/// `N / max_i r_i`, or `None` when there are no bids.
pub fn delta<B: AuctionBid>(config: &SlotConfig, bids: &[B]) -> Option<Rational> {
    let max_demand = bids.iter().map(AuctionBid::demand).max()?;
    Some(Rational::new(
        BigInt::from(config.num_rbs()),
        BigInt::from(max_demand),
    ))
}

/// Worst-case welfare ratio `(delta - 2) / (delta e - 2)` of the greedy
/// allocator, as a float. Tends to `1/e` as `delta` grows.
pub fn approx_ratio_bound(delta: &Rational) -> f64 {
    let d = num::to_f64(delta);
    (d - 2.0) / (d * core::f64::consts::E - 2.0)
}

/// Exact test of `alg / opt >= (delta - 2) / (delta e - 2)` for `delta > 2`,
/// i.e. `e * delta * alg >= (delta - 2) * opt + 2 * alg`.
pub fn meets_approx_bound(alg: &Rational, opt: &Rational, delta: &Rational) -> bool {
    let two = from_usize(2);
    let lhs = delta * alg;
    let rhs = (delta - &two) * opt + &two * alg;
    num::e_times_at_least(&lhs, &rhs)
}

/// Compares two bids by value per RB, highest first; ties go to the lower
/// bidder id.
fn cmp_density(a: &Bid, b: &Bid) -> Ordering {
    // v_a / r_a  vs  v_b / r_b   <=>   v_a r_b  vs  v_b r_a
    let lhs = a.value.numer() * b.value.denom() * BigInt::from(b.demand);
    let rhs = b.value.numer() * a.value.denom() * BigInt::from(a.demand);
    rhs.cmp(&lhs).then(a.id.cmp(&b.id))
}

/// Indices of `bids` in greedy order.
pub(crate) fn greedy_order(bids: &[Bid]) -> Vec<usize> {
    // Float keys settle almost every comparison; near-ties fall back to exact
    // cross-multiplication.
    let approx: Vec<f64> = bids
        .iter()
        .map(|b| num::to_f64(&b.value) / b.demand as f64)
        .collect();
    let mut order: Vec<usize> = (0..bids.len()).collect();
    order.sort_unstable_by(|&i, &j| {
        let (x, y) = (approx[i], approx[j]);
        let scale = x.abs().max(y.abs());
        if x.is_finite() && y.is_finite() && (x - y).abs() > scale * 1e-9 {
            y.partial_cmp(&x).unwrap_or(Ordering::Equal)
        } else {
            cmp_density(&bids[i], &bids[j])
        }
    });
    order
}

/// Admitted bids, in admission order. `bids` must be valid and non-empty.
fn admitted(config: &SlotConfig, bids: &[Bid]) -> Vec<usize> {
    let max_demand = bids.iter().map(|b| b.demand).max().unwrap_or(0);
    let budget = config.num_rbs() - 2 * max_demand;
    let mut selected = Vec::new();
    let mut used = 0usize;
    for idx in greedy_order(bids) {
        // N lambda <= exp(delta - 2)
        if used > budget {
            break;
        }
        used += bids[idx].demand;
        selected.push(idx);
    }
    selected
}

/// Runs the greedy primal-dual allocation.
///
/// Winners get consecutive RB blocks in admission order starting at RB 1;
/// the next `max { r_j : j winning relay }` RBs are reserved.
pub fn allocate_basic(
    config: &SlotConfig,
    bids: &[Bid],
) -> Result<(Allocation, DualStateBasic), AuctionError> {
    validate_basic(config, bids)?;
    let n = config.num_rbs();
    let inv_n = Rational::new(BigInt::from(1), BigInt::from(n));
    let mut state = DualStateBasic {
        delta: delta(config, bids),
        lambda: DualScalar {
            coeff: inv_n.clone(),
            exponent: Rational::zero(),
        },
        rho: BTreeMap::new(),
        xi: BTreeMap::new(),
        iterations: 0,
    };
    if bids.is_empty() {
        return Ok((Allocation::default(), state));
    }

    let max_demand = bids.iter().map(|b| b.demand).max().unwrap_or(0);
    let budget = from_usize(n - 2 * max_demand);
    let relay_count = bids.iter().filter(|b| b.kind.is_relay()).count();
    let rho_coeff = &inv_n / from_usize(relay_count.max(1));

    // first RB of each admitted bid; lambda's exponent before admitting it
    // is (first - 1) / budget
    let mut first_rb: Vec<Option<usize>> = vec![None; bids.len()];
    let mut next_rb = 1usize;
    let mut reservation = 0usize;
    let admitted = admitted(config, bids);
    for &idx in &admitted {
        first_rb[idx] = Some(next_rb);
        next_rb += bids[idx].demand;
        if bids[idx].kind.is_relay() {
            reservation = reservation.max(bids[idx].demand);
        }
    }
    state.iterations = admitted.len();
    state.lambda.exponent = from_usize(next_rb - 1) / &budget;
    // maps are bulk-built from iterators; inserting one by one is markedly
    // slower on large bid sets
    state.xi = bids
        .iter()
        .zip(&first_rb)
        .map(|(b, f)| {
            (
                b.id,
                if f.is_some() {
                    b.value.clone()
                } else {
                    Rational::zero()
                },
            )
        })
        .collect();
    state.rho = bids
        .iter()
        .zip(&first_rb)
        .filter(|(b, _)| b.kind.is_relay())
        .map(|(b, f)| {
            let dual = match f {
                Some(first) => DualScalar {
                    coeff: rho_coeff.clone(),
                    exponent: from_usize(first - 1) / &budget,
                },
                None => DualScalar::zero(),
            };
            (b.id, dual)
        })
        .collect();
    let alloc = Allocation {
        winners: bids
            .iter()
            .zip(&first_rb)
            .map(|(b, f)| (b.id, f.is_some()))
            .collect(),
        assignment: bids
            .iter()
            .zip(&first_rb)
            .filter_map(|(b, f)| f.map(|first| (b.id, (first..first + b.demand).collect())))
            .collect(),
        reserved: (next_rb..next_rb + reservation).collect::<BTreeSet<_>>(),
    };
    Ok((alloc, state))
}

/// [`allocate_basic`] as an [`AllocationRule`].
#[derive(Debug, Clone, Copy, Default)]
pub struct BasicRule;

impl AllocationRule for BasicRule {
    type Bid = Bid;

    fn validate(&self, config: &SlotConfig, bids: &[Bid]) -> Result<(), AuctionError> {
        validate_basic(config, bids)
    }

    fn allocate(
        &self,
        config: &SlotConfig,
        bids: &[Bid],
    ) -> Result<(Allocation, DualSnapshot), AuctionError> {
        let (alloc, state) = allocate_basic(config, bids)?;
        Ok((alloc, DualSnapshot::Basic(state)))
    }

    fn wins(&self, config: &SlotConfig, bids: &[Bid], id: BidderId) -> Result<bool, AuctionError> {
        validate_basic(config, bids)?;
        if bids.is_empty() {
            return Ok(false);
        }
        Ok(admitted(config, bids).iter().any(|&i| bids[i].id == id))
    }

    fn gross_value(&self, _config: &SlotConfig, bid: &Bid, alloc: &Allocation) -> Rational {
        if alloc.is_winner(bid.id) {
            bid.value.clone()
        } else {
            Rational::zero()
        }
    }
}
