use num_bigint::BigInt;
use num_traits::Zero;

use super::{Allocation, Bid, ExtendedBid, SlotConfig};
use crate::num::Rational;

/// Sum of the winners' submitted values.
pub fn welfare_basic(bids: &[Bid], alloc: &Allocation) -> Rational {
    bids.iter()
        .filter(|b| alloc.is_winner(b.id))
        .fold(Rational::zero(), |acc, b| acc + &b.value)
}

/// Value of RB `rb` (one-based) to `bid`: unit price times the rate of the
/// bidder's CQI in the RB's sub-band.
pub fn rb_value(bid: &ExtendedBid, rb: usize, config: &SlotConfig) -> Rational {
    let cqi = bid.cqi[config.subband_of(rb)];
    &bid.unit_value * config.rate_table().rate(cqi)
}

/// Information bits `bid` receives over the RBs assigned to it.
pub fn delivered_bits(config: &SlotConfig, bid: &ExtendedBid, alloc: &Allocation) -> Rational {
    let table = config.rate_table();
    let units: u128 = alloc.rbs(bid.id).map_or(0, |rbs| {
        rbs.iter()
            .map(|&rb| table.units(bid.cqi[config.subband_of(rb)]))
            .sum()
    });
    Rational::new(BigInt::from(units), BigInt::from(table.scale()))
}

/// Sum over winners of the value of their assigned RBs. Reserved RBs carry
/// no value.
pub fn welfare_extended(bids: &[ExtendedBid], alloc: &Allocation, config: &SlotConfig) -> Rational {
    bids.iter()
        .filter(|b| alloc.is_winner(b.id))
        .fold(Rational::zero(), |acc, b| {
            acc + &b.unit_value * delivered_bits(config, b, alloc)
        })
}
