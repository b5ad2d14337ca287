use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use num_traits::Zero;

use super::Scheduler;
use crate::model::BidderId;
use crate::num::{from_usize, to_f64, Rational};

/// What one slot produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotMetrics {
    pub slot: usize,
    pub num_bidders: usize,
    pub num_winners: usize,
    /// Welfare of the scheduler's allocation. Baselines are scored with
    /// values capped at each bidder's demand.
    pub welfare_alg: Rational,
    pub welfare_opt: Option<Rational>,
    /// `welfare_alg / welfare_opt`, or 1 if the optimum is zero.
    pub ratio: Option<Rational>,
    /// Worst-case ratio guaranteed for this slot's delta.
    pub alpha: Option<f64>,
    /// Exact check of `ratio >= alpha`, when the optimum is known.
    pub bound_ok: Option<bool>,
    pub total_throughput_bits: Rational,
    pub per_bidder_throughput: BTreeMap<BidderId, Rational>,
    /// Money charged to each bidder; zero when payments are off.
    pub per_bidder_payment: BTreeMap<BidderId, Rational>,
    /// Feasibility violations of the slot's allocation.
    pub violations: usize,
    /// Wall-clock time of the slot; zero without a clock. Not written to
    /// the metrics CSV, which must be reproducible byte for byte.
    pub runtime_us: u64,
}

pub const METRICS_HEADER: &str = "slot,num_bidders,num_winners,welfare_alg,welfare_opt,ratio,alpha,bound_ok,total_throughput_bits,violations,per_bidder_throughput,per_bidder_payment";

fn opt_f64(value: Option<f64>) -> String {
    value.map(|v| format!("{v}")).unwrap_or_default()
}

fn packed(table: &BTreeMap<BidderId, Rational>) -> String {
    let mut out = String::new();
    for (i, (id, v)) in table.iter().enumerate() {
        if i > 0 {
            out.push(';');
        }
        let _ = write!(out, "{id}={}", to_f64(v));
    }
    out
}

/// Metrics as CSV, header included. Per-bidder tables are packed as
/// `id=value` pairs separated by `;`.
pub fn metrics_csv(metrics: &[SlotMetrics]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for m in metrics {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            m.slot,
            m.num_bidders,
            m.num_winners,
            to_f64(&m.welfare_alg),
            opt_f64(m.welfare_opt.as_ref().map(to_f64)),
            opt_f64(m.ratio.as_ref().map(to_f64)),
            opt_f64(m.alpha),
            m.bound_ok
                .map(|b| if b { "true" } else { "false" })
                .unwrap_or(""),
            to_f64(&m.total_throughput_bits),
            m.violations,
            packed(&m.per_bidder_throughput),
            packed(&m.per_bidder_payment),
        );
    }
    out
}

/// Aggregates over a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub scheduler: Scheduler,
    pub slots: usize,
    pub total_welfare: Rational,
    pub total_throughput_bits: Rational,
    pub mean_welfare: f64,
    pub mean_throughput_bits: f64,
    /// Over slots with a known optimum.
    pub min_ratio: Option<f64>,
    pub mean_ratio: Option<f64>,
    pub bound_violations: usize,
    pub feasibility_violations: usize,
    pub mean_throughput_per_bidder: BTreeMap<BidderId, f64>,
    pub mean_payment_per_bidder: BTreeMap<BidderId, f64>,
    pub mean_runtime_us: f64,
}

fn mean_of(table: &BTreeMap<BidderId, Rational>, slots: usize) -> BTreeMap<BidderId, f64> {
    table
        .iter()
        .map(|(id, v)| (*id, to_f64(&(v / from_usize(slots)))))
        .collect()
}

pub fn summarize(scheduler: Scheduler, metrics: &[SlotMetrics]) -> SimSummary {
    let slots = metrics.len();
    let sum = |f: &dyn Fn(&SlotMetrics) -> &Rational| {
        metrics.iter().fold(Rational::zero(), |acc, m| acc + f(m))
    };
    let total_welfare = sum(&|m| &m.welfare_alg);
    let total_throughput_bits = sum(&|m| &m.total_throughput_bits);
    let ratios: Vec<&Rational> = metrics.iter().filter_map(|m| m.ratio.as_ref()).collect();
    let min_ratio = ratios.iter().min().map(|r| to_f64(r));
    let mean_ratio = (!ratios.is_empty()).then(|| {
        let total = ratios.iter().fold(Rational::zero(), |acc, r| acc + *r);
        to_f64(&(total / from_usize(ratios.len())))
    });
    let mut throughput: BTreeMap<BidderId, Rational> = BTreeMap::new();
    let mut payment: BTreeMap<BidderId, Rational> = BTreeMap::new();
    for m in metrics {
        for (id, v) in &m.per_bidder_throughput {
            *throughput.entry(*id).or_insert_with(Rational::zero) += v;
        }
        for (id, v) in &m.per_bidder_payment {
            *payment.entry(*id).or_insert_with(Rational::zero) += v;
        }
    }
    let mean = |total: &Rational| {
        if slots == 0 {
            0.0
        } else {
            to_f64(&(total / from_usize(slots)))
        }
    };
    SimSummary {
        scheduler,
        slots,
        mean_welfare: mean(&total_welfare),
        mean_throughput_bits: mean(&total_throughput_bits),
        total_welfare,
        total_throughput_bits,
        min_ratio,
        mean_ratio,
        bound_violations: metrics.iter().filter(|m| m.bound_ok == Some(false)).count(),
        feasibility_violations: metrics.iter().map(|m| m.violations).sum(),
        mean_throughput_per_bidder: if slots == 0 {
            BTreeMap::new()
        } else {
            mean_of(&throughput, slots)
        },
        mean_payment_per_bidder: if slots == 0 {
            BTreeMap::new()
        } else {
            mean_of(&payment, slots)
        },
        mean_runtime_us: if slots == 0 {
            0.0
        } else {
            metrics.iter().map(|m| m.runtime_us as f64).sum::<f64>() / slots as f64
        },
    }
}
