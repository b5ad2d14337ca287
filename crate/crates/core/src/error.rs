use crate::model::BidderId;

/// Errors raised by validation and by the mechanisms.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AuctionError {
    #[error("bidder {0} appears more than once")]
    DuplicateBidder(BidderId),
    #[error("bidder {id} reports {got} CQI values, the slot has {expected} sub-bands")]
    CqiLengthMismatch {
        id: BidderId,
        expected: usize,
        got: usize,
    },
    #[error("CQI value {value} is outside [0, 15]")]
    CqiOutOfRange { value: u8 },
    #[error("delta = N / max demand must exceed 2 (N = {num_rbs}, max demand = {max_demand})")]
    DeltaTooSmall { num_rbs: usize, max_demand: usize },
    #[error("bidder {0} has zero demand")]
    ZeroDemand(BidderId),
    #[error("bidder {0} submitted a negative value")]
    NegativeValue(BidderId),
    #[error("invalid slot configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid rate table: {0}")]
    InvalidRateTable(&'static str),
    #[error("requested {r} elements from a set of {len}")]
    RTooLarge { r: usize, len: usize },
    #[error("bidder {0} is not a winner")]
    NotAWinner(BidderId),
    #[error("bidder {0} is not in the bid set")]
    UnknownBidder(BidderId),
    #[error("instance exceeds the exact solver budget: {0}")]
    TooLarge(&'static str),
    #[error("payment parameter epsilon must lie in (0, 1)")]
    InvalidEpsilon,
    #[error("invalid scenario: {0}")]
    InvalidScenario(&'static str),
    #[error("slot {slot}: {source}")]
    Slot {
        slot: usize,
        #[source]
        source: alloc::boxed::Box<AuctionError>,
    },
}
