//! Truthful spectrum auctions for relay-augmented LTE downlinks.
//!
//! The donor base station sells the resource blocks (RBs) of one time slot to
//! directly served UEs and to relay nodes (RNs). Two mechanisms are provided:
//!
//! - [`alloc_basic`]: RBs are homogeneous; a bid is a demand and a total value.
//! - [`alloc_extended`]: RBs are heterogeneous through per-sub-band CQI; a bid
//!   is a demand, a unit price per information bit and a CQI report.
//!
//! Both allocation rules are greedy primal-dual algorithms. Winners pay their
//! critical price, found by binary search in [`payments`]. The [`oracle`]
//! module solves small instances exactly, [`baselines`] holds the Round Robin
//! and Best CQI schedulers, and [`sim`] drives slot-by-slot simulations.
//!
//! All values are exact rationals ([`Rational`]). The crate is `no_std` and
//! only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod alloc_basic;
pub mod alloc_extended;
pub mod baselines;
pub mod error;
pub mod model;
pub mod num;
pub mod oracle;
pub mod payments;
pub mod sim;

pub use alloc_basic::{allocate_basic, approx_ratio_bound, delta, meets_approx_bound, BasicRule};
pub use alloc_extended::{
    allocate_extended, top_r_subset, top_r_subset_dp, ExtendedOptions, ExtendedRule, Selection,
};
pub use error::AuctionError;
pub use model::{
    check_feasibility, check_feasibility_with, rb_value, validate_basic, validate_extended,
    welfare_basic, welfare_extended, Allocation, AuctionBid, AuctionResult, Bid, BidderId,
    BidderKind, CqiRateTable, DemandRule, DualScalar, DualSnapshot, ExtendedBid, SlotConfig,
    Violation,
};
pub use num::Rational;
pub use payments::{critical_payment, run_auction, utility, AllocationRule, PaymentParams};
