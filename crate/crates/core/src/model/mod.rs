//! Domain types shared by every mechanism: bids, slot configuration,
//! allocations and auction results, plus validation, feasibility checking
//! and welfare accounting.

mod feasibility;
mod validate;
mod welfare;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::alloc_basic::DualStateBasic;
use crate::alloc_extended::DualStateExtended;
use crate::error::AuctionError;
use crate::num::Rational;

pub use feasibility::{check_feasibility, check_feasibility_with, DemandRule, Violation};
pub use validate::{validate_basic, validate_extended};
pub use welfare::{delivered_bits, rb_value, welfare_basic, welfare_extended};

/// Highest CQI index; CQI reports live in `0..=MAX_CQI`.
pub const MAX_CQI: u8 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BidderId(pub u32);

impl fmt::Display for BidderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BidderKind {
    /// In-band relay node; winning RNs force an intra-cell reservation.
    RelayNode,
    /// UE served directly by the donor base station.
    DirectUe,
}

impl BidderKind {
    pub fn is_relay(self) -> bool {
        matches!(self, BidderKind::RelayNode)
    }
}

/// Bid of the relaying base station model: `demand` homogeneous RBs for a
/// total of `value`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bid {
    pub id: BidderId,
    pub kind: BidderKind,
    pub demand: usize,
    pub value: Rational,
}

impl Bid {
    pub fn new(id: u32, kind: BidderKind, demand: usize, value: Rational) -> Self {
        Self {
            id: BidderId(id),
            kind,
            demand,
            value,
        }
    }
}

/// Bid of the extended model: `demand` RBs at `unit_value` per information
/// bit, with one CQI report per sub-band.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedBid {
    pub id: BidderId,
    pub kind: BidderKind,
    pub demand: usize,
    pub unit_value: Rational,
    pub cqi: Vec<u8>,
}

impl ExtendedBid {
    pub fn new(
        id: u32,
        kind: BidderKind,
        demand: usize,
        unit_value: Rational,
        cqi: Vec<u8>,
    ) -> Self {
        Self {
            id: BidderId(id),
            kind,
            demand,
            unit_value,
            cqi,
        }
    }
}

/// Common view of both bid types, used by the generic payment engine.
pub trait AuctionBid: Clone {
    fn id(&self) -> BidderId;
    fn kind(&self) -> BidderKind;
    fn demand(&self) -> usize;
    /// The price the payment search varies: total value or unit value.
    fn price(&self) -> &Rational;
    fn with_price(&self, price: Rational) -> Self;
}

impl AuctionBid for Bid {
    fn id(&self) -> BidderId {
        self.id
    }
    fn kind(&self) -> BidderKind {
        self.kind
    }
    fn demand(&self) -> usize {
        self.demand
    }
    fn price(&self) -> &Rational {
        &self.value
    }
    fn with_price(&self, price: Rational) -> Self {
        Self {
            value: price,
            ..self.clone()
        }
    }
}

impl AuctionBid for ExtendedBid {
    fn id(&self) -> BidderId {
        self.id
    }
    fn kind(&self) -> BidderKind {
        self.kind
    }
    fn demand(&self) -> usize {
        self.demand
    }
    fn price(&self) -> &Rational {
        &self.unit_value
    }
    fn with_price(&self, price: Rational) -> Self {
        Self {
            unit_value: price,
            ..self.clone()
        }
    }
}

/// Information bits carried by one RB at each CQI value.
///
/// Besides the exact rates the table keeps an integer image of them
/// (`units[c] = rates[c] * scale` with `scale` the common denominator), which
/// the extended allocator uses to rank and sum RBs without rational
/// arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CqiRateTable {
    rates: [Rational; 16],
    units: [u128; 16],
    scale: u128,
}

impl CqiRateTable {
    pub fn new(rates: [Rational; 16]) -> Result<Self, AuctionError> {
        if !rates[0].is_zero() {
            return Err(AuctionError::InvalidRateTable("rate at CQI 0 must be 0"));
        }
        if rates.windows(2).any(|w| w[1] < w[0]) {
            return Err(AuctionError::InvalidRateTable(
                "rates must be non-decreasing in CQI",
            ));
        }
        let mut lcm = BigInt::one();
        for rate in &rates {
            lcm = lcm.lcm(rate.denom());
        }
        let scale = lcm.to_u128().ok_or(AuctionError::InvalidRateTable(
            "common denominator too large",
        ))?;
        let mut units = [0u128; 16];
        for (unit, rate) in units.iter_mut().zip(&rates) {
            let scaled = rate.numer() * (&lcm / rate.denom());
            *unit = scaled
                .to_u128()
                .ok_or(AuctionError::InvalidRateTable("rate too large"))?;
        }
        Ok(Self {
            rates,
            units,
            scale,
        })
    }

    pub fn from_integers(rates: [u64; 16]) -> Result<Self, AuctionError> {
        Self::new(rates.map(|r| Rational::from_integer(BigInt::from(r))))
    }

    /// `rate` bits at every CQI from 1 to 15 (CQI 0 still carries nothing).
    pub fn flat(rate: Rational) -> Result<Self, AuctionError> {
        let mut rates: [Rational; 16] = core::array::from_fn(|_| rate.clone());
        rates[0] = Rational::zero();
        Self::new(rates)
    }

    pub fn rate(&self, cqi: u8) -> &Rational {
        &self.rates[usize::from(cqi)]
    }

    pub fn rates(&self) -> &[Rational; 16] {
        &self.rates
    }

    /// Rate at `cqi` times [`Self::scale`], as an integer.
    pub fn units(&self, cqi: u8) -> u128 {
        self.units[usize::from(cqi)]
    }

    pub fn scale(&self) -> u128 {
        self.scale
    }

    /// Converts an integer number of rate units back to bits.
    pub fn units_to_bits(&self, units: u128) -> Rational {
        Rational::new(BigInt::from(units), BigInt::from(self.scale))
    }
}

/// RB grid of one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotConfig {
    num_rbs: usize,
    subband_size: usize,
    rate_table: CqiRateTable,
}

impl SlotConfig {
    pub const DEFAULT_SUBBAND_SIZE: usize = 2;

    pub fn new(
        num_rbs: usize,
        subband_size: usize,
        rate_table: CqiRateTable,
    ) -> Result<Self, AuctionError> {
        if num_rbs == 0 {
            return Err(AuctionError::InvalidConfig("num_rbs must be at least 1"));
        }
        if subband_size == 0 {
            return Err(AuctionError::InvalidConfig(
                "subband_size must be at least 1",
            ));
        }
        if !num_rbs.is_multiple_of(subband_size) {
            return Err(AuctionError::InvalidConfig(
                "num_rbs must be divisible by subband_size",
            ));
        }
        Ok(Self {
            num_rbs,
            subband_size,
            rate_table,
        })
    }

    pub fn num_rbs(&self) -> usize {
        self.num_rbs
    }

    pub fn subband_size(&self) -> usize {
        self.subband_size
    }

    pub fn num_subbands(&self) -> usize {
        self.num_rbs / self.subband_size
    }

    pub fn rate_table(&self) -> &CqiRateTable {
        &self.rate_table
    }

    /// Zero-based sub-band of the one-based RB index `rb`.
    pub fn subband_of(&self, rb: usize) -> usize {
        debug_assert!(rb >= 1 && rb <= self.num_rbs);
        (rb - 1) / self.subband_size
    }

    /// One-based RB indices of sub-band `subband`.
    pub fn rbs_of_subband(&self, subband: usize) -> core::ops::RangeInclusive<usize> {
        let first = subband * self.subband_size + 1;
        first..=first + self.subband_size - 1
    }
}

/// Outcome of winner determination: the `x_i` flags, the rows of the RB
/// assignment matrix and the RBs reserved for intra-RN transmission.
///
/// RB indices are one-based. Bidders without an entry in `assignment`
/// received nothing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Allocation {
    pub winners: BTreeMap<BidderId, bool>,
    pub assignment: BTreeMap<BidderId, BTreeSet<usize>>,
    pub reserved: BTreeSet<usize>,
}

impl Allocation {
    /// Allocation in which every listed bidder loses.
    pub fn empty<I: IntoIterator<Item = BidderId>>(ids: I) -> Self {
        Self {
            winners: ids.into_iter().map(|id| (id, false)).collect(),
            ..Self::default()
        }
    }

    pub fn is_winner(&self, id: BidderId) -> bool {
        self.winners.get(&id).copied().unwrap_or(false)
    }

    pub fn winner_ids(&self) -> impl Iterator<Item = BidderId> + '_ {
        self.winners.iter().filter(|(_, w)| **w).map(|(id, _)| *id)
    }

    pub fn num_winners(&self) -> usize {
        self.winners.values().filter(|w| **w).count()
    }

    pub fn rbs(&self, id: BidderId) -> Option<&BTreeSet<usize>> {
        self.assignment.get(&id)
    }

    pub fn num_assigned(&self, id: BidderId) -> usize {
        self.assignment.get(&id).map_or(0, BTreeSet::len)
    }

    pub fn total_assigned(&self) -> usize {
        self.assignment.values().map(BTreeSet::len).sum()
    }
}

/// A dual variable of the form `coeff * exp(delta - 2)^exponent`.
///
/// The greedy allocators scale lambda by irrational factors; keeping the
/// exponent symbolic leaves the whole dual trajectory exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualScalar {
    pub coeff: Rational,
    pub exponent: Rational,
}

impl DualScalar {
    pub fn zero() -> Self {
        Self {
            coeff: Rational::zero(),
            exponent: Rational::zero(),
        }
    }

    pub fn to_f64(&self, delta: &Rational) -> f64 {
        let growth = crate::num::to_f64(delta) - 2.0;
        crate::num::to_f64(&self.coeff) * libm::exp(growth * crate::num::to_f64(&self.exponent))
    }
}

/// Final dual variables of the allocation run, for diagnostics. `beta` is
/// not stored: it is determined by `lambda`, `rho` and `xi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DualSnapshot {
    Basic(DualStateBasic),
    Extended(DualStateExtended),
    /// Empty bid set: no allocation was run.
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuctionResult {
    pub allocation: Allocation,
    /// Critical price per bidder: total value in the basic model, unit price
    /// per bit in the extended model. Losers map to zero.
    pub payments: BTreeMap<BidderId, Rational>,
    /// Money actually charged: equals the payment in the basic model and
    /// unit price times delivered bits in the extended model.
    pub charges: BTreeMap<BidderId, Rational>,
    pub social_welfare: Rational,
    pub dual_snapshot: DualSnapshot,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, ratio};

    #[test]
    fn rate_table_rejects_bad_tables() {
        let mut rates: [Rational; 16] = core::array::from_fn(|c| int(c as i64));
        assert!(CqiRateTable::new(rates.clone()).is_ok());
        rates[0] = int(1);
        assert!(CqiRateTable::new(rates.clone()).is_err());
        rates[0] = int(0);
        rates[5] = int(1);
        assert!(CqiRateTable::new(rates).is_err());
    }

    #[test]
    fn rate_table_integer_image() {
        let mut rates: [Rational; 16] = core::array::from_fn(|c| int(c as i64));
        rates[1] = ratio(1, 2);
        rates[2] = ratio(4, 3);
        let table = CqiRateTable::new(rates).unwrap();
        assert_eq!(table.scale(), 6);
        assert_eq!(table.units(1), 3);
        assert_eq!(table.units(2), 8);
        assert_eq!(table.units(15), 90);
        assert_eq!(table.units_to_bits(8), ratio(4, 3));
    }

    #[test]
    fn subband_map_is_floor_based() {
        let cfg = SlotConfig::new(12, 2, CqiRateTable::flat(int(1)).unwrap()).unwrap();
        assert_eq!(cfg.num_subbands(), 6);
        assert_eq!(cfg.subband_of(1), 0);
        assert_eq!(cfg.subband_of(2), 0);
        assert_eq!(cfg.subband_of(3), 1);
        assert_eq!(cfg.subband_of(12), 5);
        assert_eq!(cfg.rbs_of_subband(2), 5..=6);
    }

    #[test]
    fn config_validation() {
        let t = CqiRateTable::flat(int(1)).unwrap();
        assert!(SlotConfig::new(0, 1, t.clone()).is_err());
        assert!(SlotConfig::new(10, 0, t.clone()).is_err());
        assert!(SlotConfig::new(10, 3, t).is_err());
    }
}
