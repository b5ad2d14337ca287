use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::AuctionError;
use crate::model::{Bid, BidderId, BidderKind, CqiRateTable, ExtendedBid, SlotConfig, MAX_CQI};
use crate::num::{from_usize, Rational};

/// CQI reports of one bidder in one slot, one entry per sub-band.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub slot: usize,
    pub bidder: BidderId,
    pub cqi: Vec<u8>,
}

/// One roster entry: direct UEs serve themselves, relays serve one or more
/// UEs and scale their demand accordingly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RosterEntry {
    pub id: BidderId,
    pub kind: BidderKind,
    pub served_ues: usize,
}

/// Parameters of a simulated cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioSpec {
    pub num_slots: usize,
    pub slot_ms: u32,
    pub num_rbs: usize,
    pub subband_size: usize,
    pub direct_ues: usize,
    /// UEs behind each relay node; one relay per entry.
    pub relay_served: Vec<usize>,
    /// Inclusive range of a single UE's demand in RBs.
    pub demand: (usize, usize),
    /// Mean price per information bit.
    pub base_price: Rational,
    /// Inclusive range of the price multiplier in thousandths.
    pub price_permille: (u32, u32),
    /// Inclusive range of the initial CQI of each synthetic walk.
    pub initial_cqi: (u8, u8),
    /// Largest CQI change per slot of the synthetic walk.
    pub cqi_step: u8,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    /// 40 direct UEs and 5 relays serving 7 UEs between them; demands of
    /// 10 to 40 RBs; $15 per 300 MB with +-50 % noise; 1000 slots of 10 ms.
    ///
    /// The grid is one 10 ms auction over 20 half-millisecond scheduling
    /// slots of 100 RBs each, grouped into sub-bands of 40.
    fn default() -> Self {
        Self {
            num_slots: 1000,
            slot_ms: 10,
            num_rbs: 2000,
            subband_size: 40,
            direct_ues: 40,
            relay_served: vec![2, 2, 1, 1, 1],
            demand: (10, 40),
            base_price: Rational::new(BigInt::from(15), BigInt::from(300u64 * 8 * 1_000_000)),
            price_permille: (500, 1500),
            initial_cqi: (6, 12),
            cqi_step: 1,
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    /// Reduced cell within the exact solvers' budget: 10 UEs and 2 relays,
    /// 32 RBs in sub-bands of 4, demands of 1 to 3 RBs.
    pub fn small() -> Self {
        Self {
            num_slots: 10,
            num_rbs: 32,
            subband_size: 4,
            direct_ues: 10,
            relay_served: vec![1, 1],
            demand: (1, 3),
            ..Self::default()
        }
    }

    /// Bidders in id order: UEs `1..=direct_ues`, then the relays.
    pub fn roster(&self) -> Vec<RosterEntry> {
        let ues = (1..=self.direct_ues).map(|i| RosterEntry {
            id: BidderId(i as u32),
            kind: BidderKind::DirectUe,
            served_ues: 1,
        });
        let relays = self
            .relay_served
            .iter()
            .enumerate()
            .map(|(j, &served)| RosterEntry {
                id: BidderId((self.direct_ues + j + 1) as u32),
                kind: BidderKind::RelayNode,
                served_ues: served,
            });
        ues.chain(relays).collect()
    }

    pub fn num_bidders(&self) -> usize {
        self.direct_ues + self.relay_served.len()
    }

    pub fn slot_config(&self, table: CqiRateTable) -> Result<SlotConfig, AuctionError> {
        SlotConfig::new(self.num_rbs, self.subband_size, table)
    }

    /// Checks internal consistency and that every possible bid set keeps
    /// `delta > 2` on `config`.
    pub fn validate(&self, config: &SlotConfig) -> Result<(), AuctionError> {
        let (lo, hi) = self.demand;
        if lo == 0 || lo > hi {
            return Err(AuctionError::InvalidScenario(
                "demand range must satisfy 1 <= min <= max",
            ));
        }
        let (plo, phi) = self.price_permille;
        if plo > phi {
            return Err(AuctionError::InvalidScenario("price range is empty"));
        }
        if self.initial_cqi.0 > self.initial_cqi.1 || self.initial_cqi.1 > MAX_CQI {
            return Err(AuctionError::InvalidScenario(
                "initial CQI range must lie in [0, 15]",
            ));
        }
        if self.base_price < Rational::from_integer(BigInt::from(0)) {
            return Err(AuctionError::InvalidScenario(
                "base price must be non-negative",
            ));
        }
        if self.relay_served.contains(&0) {
            return Err(AuctionError::InvalidScenario(
                "a relay must serve at least one UE",
            ));
        }
        let max_served = self.relay_served.iter().copied().max().unwrap_or(1).max(1);
        if 2 * hi * max_served >= config.num_rbs() {
            return Err(AuctionError::InvalidScenario(
                "largest possible demand leaves delta <= 2",
            ));
        }
        Ok(())
    }
}

/// Generator for slot `slot` of the bid stream seeded with `seed`.
/// Slots draw from disjoint streams, so they can be produced in any order.
pub fn slot_rng(seed: u64, slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(slot as u64 + 1);
    rng
}

/// Synthetic CQI trace: for every (bidder, sub-band) a walk starting
/// uniformly in the initial range that moves by a uniform step in
/// `[-cqi_step, cqi_step]` per slot, clamped to `[0, 15]`. Records are
/// ordered by slot, then by bidder id.
pub fn synth_trace(scenario: &ScenarioSpec, config: &SlotConfig) -> Vec<TraceRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let roster = scenario.roster();
    let subbands = config.num_subbands();
    let (lo, hi) = scenario.initial_cqi;
    let mut state: Vec<Vec<i16>> = roster
        .iter()
        .map(|_| {
            (0..subbands)
                .map(|_| i16::from(rng.random_range(lo..=hi)))
                .collect()
        })
        .collect();
    let step = i16::from(scenario.cqi_step);
    let mut records = Vec::with_capacity(scenario.num_slots * roster.len());
    for slot in 0..scenario.num_slots {
        for (entry, walk) in roster.iter().zip(state.iter_mut()) {
            if slot > 0 {
                for c in walk.iter_mut() {
                    let delta = if step == 0 {
                        0
                    } else {
                        rng.random_range(-step..=step)
                    };
                    *c = (*c + delta).clamp(0, i16::from(MAX_CQI));
                }
            }
            records.push(TraceRecord {
                slot,
                bidder: entry.id,
                cqi: walk.iter().map(|&c| c as u8).collect(),
            });
        }
    }
    records
}

/// Extended bids for one slot from that slot's trace records. Demands are
/// uniform in the scenario range (times the served-UE count for relays),
/// unit prices are `base_price * u` with `u` uniform on the permille grid.
/// Bidders missing from the roster bid as direct UEs.
pub fn generate_bids<R: Rng>(
    scenario: &ScenarioSpec,
    records: &[TraceRecord],
    rng: &mut R,
) -> Vec<ExtendedBid> {
    let roster = scenario.roster();
    let (dlo, dhi) = scenario.demand;
    let (plo, phi) = scenario.price_permille;
    let mut ordered: Vec<&TraceRecord> = records.iter().collect();
    ordered.sort_by_key(|r| r.bidder);
    ordered
        .into_iter()
        .map(|record| {
            let entry = roster.iter().find(|e| e.id == record.bidder);
            let (kind, served) =
                entry.map_or((BidderKind::DirectUe, 1), |e| (e.kind, e.served_ues));
            let demand = rng.random_range(dlo..=dhi) * served;
            let permille = rng.random_range(plo..=phi);
            let unit_value =
                &scenario.base_price * Rational::new(BigInt::from(permille), BigInt::from(1000));
            ExtendedBid {
                id: record.bidder,
                kind,
                demand,
                unit_value,
                cqi: record.cqi.clone(),
            }
        })
        .collect()
}

/// Basic-model view of an extended bid: total value `v r CR(c)` with `c`
/// the floor of the bidder's mean CQI.
pub fn to_basic_bid(config: &SlotConfig, bid: &ExtendedBid) -> Bid {
    let mean = if bid.cqi.is_empty() {
        0
    } else {
        bid.cqi.iter().map(|&c| usize::from(c)).sum::<usize>() / bid.cqi.len()
    };
    let rate = config.rate_table().rate(mean as u8);
    Bid {
        id: bid.id,
        kind: bid.kind,
        demand: bid.demand,
        value: &bid.unit_value * from_usize(bid.demand) * rate,
    }
}

/// Checks trace records against the slot geometry.
pub fn validate_trace(config: &SlotConfig, records: &[TraceRecord]) -> Result<(), AuctionError> {
    for record in records {
        if record.cqi.len() != config.num_subbands() {
            return Err(AuctionError::CqiLengthMismatch {
                id: record.bidder,
                expected: config.num_subbands(),
                got: record.cqi.len(),
            });
        }
        if let Some(&value) = record.cqi.iter().find(|&&c| c > MAX_CQI) {
            return Err(AuctionError::CqiOutOfRange { value });
        }
    }
    Ok(())
}
