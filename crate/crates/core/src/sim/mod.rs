//! Slot-by-slot simulation: CQI traces in, bids generated per slot, one
//! scheduler run per slot, metrics out.
//!
//! Slot inputs (bids and the Round Robin cursor) are produced up front and
//! sequentially, after which every slot can be evaluated independently with
//! [`run_slot`]. [`run_simulation`] does both in order.

mod metrics;
mod scenario;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_traits::Zero;

use crate::alloc_basic::{approx_ratio_bound, delta, meets_approx_bound, BasicRule};
use crate::alloc_extended::ExtendedRule;
use crate::baselines::{best_cqi, capped_welfare, round_robin, throughput};
use crate::error::AuctionError;
use crate::model::{
    check_feasibility, check_feasibility_with, Allocation, Bid, BidderId, DemandRule, ExtendedBid,
    SlotConfig,
};
use crate::num::Rational;
use crate::oracle::{
    optimal_basic, optimal_extended, MAX_BASIC_BIDS, MAX_EXTENDED_BIDS, MAX_EXTENDED_RBS,
};
use crate::payments::{run_auction, AllocationRule, PaymentParams};

pub use metrics::{metrics_csv, summarize, SimSummary, SlotMetrics, METRICS_HEADER};
pub use scenario::{
    generate_bids, slot_rng, synth_trace, to_basic_bid, validate_trace, RosterEntry, ScenarioSpec,
    TraceRecord,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheduler {
    AuctionBasic,
    AuctionExtended,
    RoundRobin,
    BestCqi,
}

impl Scheduler {
    pub const ALL: [Scheduler; 4] = [
        Scheduler::AuctionBasic,
        Scheduler::AuctionExtended,
        Scheduler::RoundRobin,
        Scheduler::BestCqi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheduler::AuctionBasic => "auction-basic",
            Scheduler::AuctionExtended => "auction-extended",
            Scheduler::RoundRobin => "round-robin",
            Scheduler::BestCqi => "best-cqi",
        }
    }

    pub fn is_auction(self) -> bool {
        matches!(self, Scheduler::AuctionBasic | Scheduler::AuctionExtended)
    }
}

impl fmt::Display for Scheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheduler {
    type Err = AuctionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheduler::ALL
            .into_iter()
            .find(|sch| sch.name() == s)
            .ok_or(AuctionError::InvalidScenario("unknown scheduler"))
    }
}

/// Source of wall-clock time for the per-slot runtime column.
pub trait Clock {
    fn now_us(&self) -> u64;
}

/// Clock for environments without time: runtimes are not recorded.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_us(&self) -> u64 {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOptions {
    /// Compute critical payments for the auction schedulers.
    pub payments: bool,
    /// Compare with the exact optimum where the instance fits the solver.
    pub oracle: bool,
    pub payment_params: PaymentParams,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            payments: true,
            oracle: false,
            payment_params: PaymentParams::default(),
        }
    }
}

/// Everything one slot needs, independent of other slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotInput {
    pub slot: usize,
    pub bids: Vec<ExtendedBid>,
    pub rr_cursor: usize,
}

/// Builds the per-slot inputs from a trace (synthesized when `None`).
pub fn prepare_slots(
    scenario: &ScenarioSpec,
    config: &SlotConfig,
    trace: Option<&[TraceRecord]>,
) -> Result<Vec<SlotInput>, AuctionError> {
    scenario.validate(config)?;
    let synthesized;
    let trace = match trace {
        Some(t) => {
            validate_trace(config, t)?;
            t
        }
        None => {
            synthesized = synth_trace(scenario, config);
            &synthesized[..]
        }
    };
    let mut by_slot: BTreeMap<usize, Vec<TraceRecord>> = BTreeMap::new();
    for record in trace {
        if record.slot < scenario.num_slots {
            by_slot.entry(record.slot).or_default().push(record.clone());
        }
    }
    let mut inputs = Vec::with_capacity(scenario.num_slots);
    let mut cursor = 0usize;
    for slot in 0..scenario.num_slots {
        let records = by_slot.remove(&slot).unwrap_or_default();
        let bids = generate_bids(scenario, &records, &mut slot_rng(scenario.seed, slot));
        let rr_cursor = cursor;
        if !bids.is_empty() {
            cursor = (cursor + config.num_rbs()) % bids.len();
        }
        inputs.push(SlotInput {
            slot,
            bids,
            rr_cursor,
        });
    }
    Ok(inputs)
}

fn wrap(slot: usize) -> impl Fn(AuctionError) -> AuctionError {
    move |e| AuctionError::Slot {
        slot,
        source: alloc::boxed::Box::new(e),
    }
}

/// Outcome of an auction scheduler: allocation, charges and welfare.
fn auction<R: AllocationRule>(
    rule: &R,
    config: &SlotConfig,
    bids: &[R::Bid],
    options: &SimOptions,
) -> Result<(Allocation, BTreeMap<BidderId, Rational>, Rational), AuctionError> {
    if options.payments {
        let result = run_auction(rule, config, bids, &options.payment_params)?;
        Ok((result.allocation, result.charges, result.social_welfare))
    } else {
        rule.validate(config, bids)?;
        let alloc = if bids.is_empty() {
            Allocation::default()
        } else {
            rule.allocate(config, bids)?.0
        };
        let welfare = rule.welfare(config, bids, &alloc);
        Ok((alloc, BTreeMap::new(), welfare))
    }
}

/// Runs one slot with `scheduler`.
pub fn run_slot<C: Clock>(
    config: &SlotConfig,
    scheduler: Scheduler,
    input: &SlotInput,
    options: &SimOptions,
    clock: &C,
) -> Result<SlotMetrics, AuctionError> {
    let bids = &input.bids;
    let start = clock.now_us();
    let mut welfare_opt = None;
    let mut bound_ok = None;
    let (alloc, charges, welfare, violations) = match scheduler {
        Scheduler::AuctionBasic => {
            let basic: Vec<Bid> = bids.iter().map(|b| to_basic_bid(config, b)).collect();
            let (alloc, charges, welfare) = auction(&BasicRule, config, &basic, options)?;
            let violations = check_feasibility(config, &basic, &alloc).len();
            if options.oracle && !basic.is_empty() && basic.len() <= MAX_BASIC_BIDS {
                let (_, opt) = optimal_basic(config, &basic)?;
                let d = delta(config, &basic).expect("non-empty bid set");
                bound_ok = Some(meets_approx_bound(&welfare, &opt, &d));
                welfare_opt = Some(opt);
            }
            (alloc, charges, welfare, violations)
        }
        Scheduler::AuctionExtended => {
            let rule = ExtendedRule::default();
            let (alloc, charges, welfare) = auction(&rule, config, bids, options)?;
            let violations = check_feasibility(config, bids, &alloc).len();
            if options.oracle
                && !bids.is_empty()
                && bids.len() <= MAX_EXTENDED_BIDS
                && config.num_rbs() <= MAX_EXTENDED_RBS
            {
                let (_, opt) = optimal_extended(config, bids)?;
                let d = delta(config, bids).expect("non-empty bid set");
                bound_ok = Some(meets_approx_bound(&welfare, &opt, &d));
                welfare_opt = Some(opt);
            }
            (alloc, charges, welfare, violations)
        }
        Scheduler::RoundRobin | Scheduler::BestCqi => {
            crate::model::validate_extended(config, bids)?;
            let alloc = if scheduler == Scheduler::RoundRobin {
                round_robin(config, bids, input.rr_cursor).0
            } else {
                best_cqi(config, bids)
            };
            let violations = check_feasibility_with(config, bids, &alloc, DemandRule::Ignore).len();
            let welfare = capped_welfare(config, bids, &alloc);
            (alloc, BTreeMap::new(), welfare, violations)
        }
    };
    let per_bidder_throughput = throughput(config, bids, &alloc);
    let total_throughput_bits = per_bidder_throughput
        .values()
        .fold(Rational::zero(), |acc, v| acc + v);
    let per_bidder_payment = bids
        .iter()
        .map(|b| {
            (
                b.id,
                charges.get(&b.id).cloned().unwrap_or_else(Rational::zero),
            )
        })
        .collect();
    let ratio = welfare_opt.as_ref().map(|opt: &Rational| {
        if opt.is_zero() {
            Rational::from_integer(1.into())
        } else {
            &welfare / opt
        }
    });
    let alpha = delta(config, bids).map(|d| approx_ratio_bound(&d));
    let end = clock.now_us();
    Ok(SlotMetrics {
        slot: input.slot,
        num_bidders: bids.len(),
        num_winners: alloc.num_winners(),
        welfare_alg: welfare,
        welfare_opt,
        ratio,
        alpha,
        bound_ok,
        total_throughput_bits,
        per_bidder_throughput,
        per_bidder_payment,
        violations,
        runtime_us: end.saturating_sub(start),
    })
}

/// Per-slot metrics and their summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub metrics: Vec<SlotMetrics>,
    pub summary: SimSummary,
}

/// Runs every prepared slot in order. A failing slot aborts the run with
/// its index.
pub fn run_slots<C: Clock>(
    config: &SlotConfig,
    scheduler: Scheduler,
    inputs: &[SlotInput],
    options: &SimOptions,
    clock: &C,
) -> Result<SimOutput, AuctionError> {
    let metrics = inputs
        .iter()
        .map(|input| run_slot(config, scheduler, input, options, clock).map_err(wrap(input.slot)))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = summarize(scheduler, &metrics);
    Ok(SimOutput { metrics, summary })
}

/// Generates the slots of `scenario` (from `trace` or a synthetic trace)
/// and runs `scheduler` on each.
pub fn run_simulation(
    scenario: &ScenarioSpec,
    config: &SlotConfig,
    scheduler: Scheduler,
    trace: Option<&[TraceRecord]>,
    options: &SimOptions,
) -> Result<SimOutput, AuctionError> {
    let inputs = prepare_slots(scenario, config, trace)?;
    run_slots(config, scheduler, &inputs, options, &NoClock)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CqiRateTable;
    use alloc::vec;

    fn table() -> CqiRateTable {
        CqiRateTable::from_integers([
            0, 13, 20, 32, 51, 74, 99, 124, 161, 202, 229, 279, 328, 380, 430, 467,
        ])
        .unwrap()
    }

    #[test]
    fn scheduler_names_round_trip() {
        for s in Scheduler::ALL {
            assert_eq!(s.name().parse::<Scheduler>(), Ok(s));
        }
        assert!("fifo".parse::<Scheduler>().is_err());
    }

    #[test]
    fn zero_slots_give_empty_metrics() {
        let s = ScenarioSpec {
            num_slots: 0,
            ..ScenarioSpec::small()
        };
        let cfg = s.slot_config(table()).unwrap();
        let out = run_simulation(
            &s,
            &cfg,
            Scheduler::AuctionExtended,
            None,
            &SimOptions::default(),
        )
        .unwrap();
        assert!(out.metrics.is_empty());
        assert_eq!(out.summary.slots, 0);
    }

    #[test]
    fn small_oracle_run_respects_the_bound() {
        let s = ScenarioSpec::small();
        let cfg = s.slot_config(table()).unwrap();
        let opts = SimOptions {
            oracle: true,
            ..SimOptions::default()
        };
        for sch in [Scheduler::AuctionBasic, Scheduler::AuctionExtended] {
            let out = run_simulation(&s, &cfg, sch, None, &opts).unwrap();
            assert_eq!(out.metrics.len(), 10);
            for m in &out.metrics {
                assert_eq!(m.violations, 0);
                assert_eq!(m.bound_ok, Some(true));
                let r = m.ratio.as_ref().unwrap();
                assert!(*r <= Rational::from_integer(1.into()));
            }
        }
    }

    #[test]
    fn baselines_run_feasibly() {
        let s = ScenarioSpec::small();
        let cfg = s.slot_config(table()).unwrap();
        for sch in [Scheduler::RoundRobin, Scheduler::BestCqi] {
            let out = run_simulation(&s, &cfg, sch, None, &SimOptions::default()).unwrap();
            assert!(out
                .metrics
                .iter()
                .all(|m| m.violations == 0 && m.welfare_opt.is_none()));
        }
    }

    #[test]
    fn rr_cursor_advances_between_slots() {
        let s = ScenarioSpec {
            num_slots: 3,
            ..ScenarioSpec::small()
        };
        let cfg = s.slot_config(table()).unwrap();
        let inputs = prepare_slots(&s, &cfg, None).unwrap();
        // 32 RBs over 12 bidders: the cursor moves by 8 each slot
        assert_eq!(
            inputs.iter().map(|i| i.rr_cursor).collect::<Vec<_>>(),
            vec![0, 8, 4]
        );
    }

    #[test]
    fn bad_trace_reports_the_slot_geometry() {
        let s = ScenarioSpec::small();
        let cfg = s.slot_config(table()).unwrap();
        let trace = [TraceRecord {
            slot: 0,
            bidder: BidderId(1),
            cqi: alloc::vec![1; 3],
        }];
        assert!(matches!(
            prepare_slots(&s, &cfg, Some(&trace)),
            Err(AuctionError::CqiLengthMismatch { .. })
        ));
    }
}
