use alloc::collections::BTreeSet;

use num_traits::Signed;

use super::{AuctionBid, Bid, ExtendedBid, SlotConfig, MAX_CQI};
use crate::error::AuctionError;

fn validate_common<B: AuctionBid>(config: &SlotConfig, bids: &[B]) -> Result<(), AuctionError> {
    let mut seen = BTreeSet::new();
    for bid in bids {
        if !seen.insert(bid.id()) {
            return Err(AuctionError::DuplicateBidder(bid.id()));
        }
        if bid.demand() == 0 {
            return Err(AuctionError::ZeroDemand(bid.id()));
        }
        if bid.price().is_negative() {
            return Err(AuctionError::NegativeValue(bid.id()));
        }
    }
    // delta = N / max r > 2  <=>  N > 2 max r
    if let Some(max_demand) = bids.iter().map(AuctionBid::demand).max() {
        if config.num_rbs() <= 2 * max_demand {
            return Err(AuctionError::DeltaTooSmall {
                num_rbs: config.num_rbs(),
                max_demand,
            });
        }
    }
    Ok(())
}

/// Checks a basic-model bid set: unique ids, positive demands, non-negative
/// values and `delta > 2`. An empty bid set is valid.
pub fn validate_basic(config: &SlotConfig, bids: &[Bid]) -> Result<(), AuctionError> {
    validate_common(config, bids)
}

/// As [`validate_basic`], plus one in-range CQI report per sub-band.
pub fn validate_extended(config: &SlotConfig, bids: &[ExtendedBid]) -> Result<(), AuctionError> {
    for bid in bids {
        if bid.cqi.len() != config.num_subbands() {
            return Err(AuctionError::CqiLengthMismatch {
                id: bid.id,
                expected: config.num_subbands(),
                got: bid.cqi.len(),
            });
        }
        if let Some(&value) = bid.cqi.iter().find(|&&c| c > MAX_CQI) {
            return Err(AuctionError::CqiOutOfRange { value });
        }
    }
    validate_common(config, bids)
}
