//! Subcommand implementations. Each writes its report to `out` and returns
//! an error carrying the exit status on failure.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};
use spectrum_auction::alloc_basic::approx_ratio_bound;
use spectrum_auction::num::{parse_rational, to_f64};
use spectrum_auction::oracle::{optimal_basic, optimal_extended};
use spectrum_auction::sim::{
    metrics_csv, prepare_slots, run_slot, summarize, Clock, ScenarioSpec, Scheduler, SimOptions,
    SimSummary, SlotInput, SlotMetrics,
};
use spectrum_auction::{
    allocate_basic, allocate_extended, delta, meets_approx_bound, run_auction, welfare_basic,
    welfare_extended, BasicRule, CqiRateTable, ExtendedRule, PaymentParams, Rational, SlotConfig,
};

use crate::checks::{check_rule, MirroredRule, TruthReport};
use crate::error::CliError;
use crate::formats::{
    auction_result_json, default_rate_table, exact, json_rational, load_config, parse_basic_bids,
    parse_extended_bids, parse_trace, rate_table_from_json, read_file,
};
use crate::instances::{random_basic_instance, random_extended_instance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Model {
    Basic,
    Extended,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Basic => "basic",
            Model::Extended => "extended",
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(path.display().to_string(), e)
}

fn write_json(out: &mut dyn Write, value: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    writeln!(out, "{text}").map_err(|e| CliError::Io("stdout".into(), e))
}

pub fn parse_epsilon(text: Option<&str>) -> Result<PaymentParams, CliError> {
    match text {
        None => Ok(PaymentParams::default()),
        Some(t) => {
            let eps = parse_rational(t)
                .ok_or_else(|| CliError::Input(format!("--epsilon: cannot parse {t:?}")))?;
            Ok(PaymentParams::new(eps)?)
        }
    }
}

/// Runs one auction on a bids file and prints the result as JSON.
pub fn auction(
    model: Model,
    config_path: &Path,
    bids_path: &Path,
    epsilon: Option<&str>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let config = load_config(config_path)?;
    let params = parse_epsilon(epsilon)?;
    let text = read_file(bids_path)?;
    let source = bids_path.display().to_string();
    let result = match model {
        Model::Basic => run_auction(
            &BasicRule,
            &config,
            &parse_basic_bids(&text, &source)?,
            &params,
        )?,
        Model::Extended => run_auction(
            &ExtendedRule::default(),
            &config,
            &parse_extended_bids(&text, &source)?,
            &params,
        )?,
    };
    write_json(out, &auction_result_json(model.name(), &result))
}

/// Greedy and optimal welfare of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub num_bids: usize,
    pub welfare_alg: Rational,
    pub welfare_opt: Rational,
    /// `None` for an empty bid set.
    pub alpha: Option<f64>,
    pub bound_ok: bool,
}

impl Comparison {
    /// `alg / opt`; 1 when both are zero.
    pub fn ratio(&self) -> f64 {
        if self.welfare_opt == Rational::from_integer(0.into()) {
            1.0
        } else {
            to_f64(&(&self.welfare_alg / &self.welfare_opt))
        }
    }
}

pub fn compare(
    model: Model,
    config: &SlotConfig,
    bids_text: &str,
    source: &str,
) -> Result<Comparison, CliError> {
    let (alg, opt, d, n) = match model {
        Model::Basic => {
            let bids = parse_basic_bids(bids_text, source)?;
            let (alloc, _) = allocate_basic(config, &bids)?;
            let (_, opt) = optimal_basic(config, &bids)?;
            (
                welfare_basic(&bids, &alloc),
                opt,
                delta(config, &bids),
                bids.len(),
            )
        }
        Model::Extended => {
            let bids = parse_extended_bids(bids_text, source)?;
            let (alloc, _) = allocate_extended(config, &bids)?;
            let (_, opt) = optimal_extended(config, &bids)?;
            (
                welfare_extended(&bids, &alloc, config),
                opt,
                delta(config, &bids),
                bids.len(),
            )
        }
    };
    let bound_ok = d.as_ref().is_none_or(|d| meets_approx_bound(&alg, &opt, d));
    Ok(Comparison {
        num_bids: n,
        welfare_alg: alg,
        welfare_opt: opt,
        alpha: d.as_ref().map(approx_ratio_bound),
        bound_ok,
    })
}

/// Prints greedy versus optimal welfare as CSV; fails with a violation if
/// the greedy falls below the approximation bound.
pub fn oracle_compare(
    model: Model,
    config_path: &Path,
    bids_path: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let config = load_config(config_path)?;
    let text = read_file(bids_path)?;
    let c = compare(model, &config, &text, &bids_path.display().to_string())?;
    let alpha = c.alpha.map(|a| a.to_string()).unwrap_or_default();
    let io = |e| CliError::Io("stdout".into(), e);
    writeln!(
        out,
        "model,num_bids,welfare_alg,welfare_opt,ratio,alpha,bound_ok"
    )
    .map_err(io)?;
    writeln!(
        out,
        "{},{},{},{},{},{},{}",
        model.name(),
        c.num_bids,
        to_f64(&c.welfare_alg),
        to_f64(&c.welfare_opt),
        c.ratio(),
        alpha,
        c.bound_ok
    )
    .map_err(io)?;
    if !c.bound_ok {
        return Err(CliError::Violation(format!(
            "greedy welfare {} is below the bound {alpha} of the optimum {}",
            c.welfare_alg, c.welfare_opt
        )));
    }
    Ok(())
}

/// Wall clock for per-slot runtimes.
pub struct StdClock(Instant);

impl Default for StdClock {
    fn default() -> Self {
        StdClock(Instant::now())
    }
}

impl Clock for StdClock {
    fn now_us(&self) -> u64 {
        self.0.elapsed().as_micros() as u64
    }
}

/// Runs every slot, spreading contiguous slot ranges over `jobs` threads.
/// Metrics come back in slot order regardless of `jobs`.
pub fn run_slots_parallel(
    config: &SlotConfig,
    scheduler: Scheduler,
    inputs: &[SlotInput],
    options: &SimOptions,
    jobs: usize,
) -> Result<Vec<SlotMetrics>, CliError> {
    let jobs = jobs.max(1).min(inputs.len().max(1));
    let chunk = inputs.len().div_ceil(jobs).max(1);
    let results: Vec<Result<Vec<SlotMetrics>, spectrum_auction::AuctionError>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = inputs
                .chunks(chunk)
                .map(|part| {
                    scope.spawn(move || {
                        let clock = StdClock::default();
                        part.iter()
                            .map(|input| {
                                run_slot(config, scheduler, input, options, &clock).map_err(|e| {
                                    spectrum_auction::AuctionError::Slot {
                                        slot: input.slot,
                                        source: Box::new(e),
                                    }
                                })
                            })
                            .collect()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("slot worker panicked"))
                .collect()
        });
    let mut metrics = Vec::with_capacity(inputs.len());
    for part in results {
        metrics.extend(part?);
    }
    Ok(metrics)
}

/// Optional overrides of a scenario, as read from `--scenario`.
#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub num_slots: Option<usize>,
    pub slot_ms: Option<u32>,
    pub num_rbs: Option<usize>,
    pub subband_size: Option<usize>,
    pub direct_ues: Option<usize>,
    pub relay_served: Option<Vec<usize>>,
    pub demand_min: Option<usize>,
    pub demand_max: Option<usize>,
    pub base_price: Option<Value>,
    pub price_permille_min: Option<u32>,
    pub price_permille_max: Option<u32>,
    pub initial_cqi_min: Option<u8>,
    pub initial_cqi_max: Option<u8>,
    pub cqi_step: Option<u8>,
    pub rate_table: Option<Value>,
}

impl ScenarioFile {
    pub fn apply(self, base: ScenarioSpec) -> Result<(ScenarioSpec, CqiRateTable), CliError> {
        let mut s = base;
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = self.$field {
                    s.$field = v;
                }
            };
        }
        set!(num_slots);
        set!(slot_ms);
        set!(num_rbs);
        set!(subband_size);
        set!(direct_ues);
        set!(relay_served);
        set!(cqi_step);
        if let Some(v) = self.demand_min {
            s.demand.0 = v;
        }
        if let Some(v) = self.demand_max {
            s.demand.1 = v;
        }
        if let Some(v) = self.price_permille_min {
            s.price_permille.0 = v;
        }
        if let Some(v) = self.price_permille_max {
            s.price_permille.1 = v;
        }
        if let Some(v) = self.initial_cqi_min {
            s.initial_cqi.0 = v;
        }
        if let Some(v) = self.initial_cqi_max {
            s.initial_cqi.1 = v;
        }
        if let Some(v) = &self.base_price {
            s.base_price = json_rational(v, "base_price")?;
        }
        let table = match &self.rate_table {
            Some(v) => rate_table_from_json(v)?,
            None => default_rate_table(),
        };
        Ok((s, table))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// Full cell: 45 bidders on 2000 RBs.
    Default,
    /// Reduced cell within the exact solvers' budget.
    Small,
}

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub preset: Preset,
    pub scenario: Option<PathBuf>,
    pub schedulers: Vec<Scheduler>,
    pub seed: u64,
    pub slots: Option<usize>,
    pub trace: Option<PathBuf>,
    pub synth: bool,
    pub oracle: bool,
    pub payments: bool,
    pub epsilon: Option<String>,
    pub jobs: usize,
    pub out_dir: PathBuf,
}

fn summary_json(s: &SimSummary) -> Value {
    let per_bidder = |m: &BTreeMap<spectrum_auction::BidderId, f64>| {
        Value::Object(m.iter().map(|(id, v)| (id.to_string(), json!(v))).collect())
    };
    json!({
        "slots": s.slots,
        "mean_welfare": s.mean_welfare,
        "total_welfare": exact(&s.total_welfare),
        "mean_throughput_bits": s.mean_throughput_bits,
        "total_throughput_bits": exact(&s.total_throughput_bits),
        "min_ratio": s.min_ratio,
        "mean_ratio": s.mean_ratio,
        "bound_violations": s.bound_violations,
        "feasibility_violations": s.feasibility_violations,
        "mean_runtime_us": s.mean_runtime_us,
        "per_bidder": {
            "mean_throughput_bits": per_bidder(&s.mean_throughput_per_bidder),
            "mean_payment": per_bidder(&s.mean_payment_per_bidder),
        },
    })
}

/// Runs the simulation for each scheduler. Writes `metrics_<scheduler>.csv`
/// and `summary.json` into the output directory and prints the summary.
pub fn simulate(
    args: &SimulateArgs,
    out: &mut dyn Write,
) -> Result<BTreeMap<Scheduler, SimSummary>, CliError> {
    let base = match args.preset {
        Preset::Default => ScenarioSpec::default(),
        Preset::Small => ScenarioSpec::small(),
    };
    let file = match &args.scenario {
        Some(path) => serde_json::from_str(&read_file(path)?)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
        None => ScenarioFile::default(),
    };
    let (mut scenario, table) = file.apply(base)?;
    scenario.seed = args.seed;
    if let Some(n) = args.slots {
        scenario.num_slots = n;
    }
    let config = scenario.slot_config(table)?;
    let trace = match (&args.trace, args.synth) {
        (Some(path), _) => Some(parse_trace(&read_file(path)?, &path.display().to_string())?),
        (None, true) => None,
        (None, false) => {
            return Err(CliError::Input(
                "no CQI trace: pass --trace PATH or --synth".into(),
            ))
        }
    };
    let inputs = prepare_slots(&scenario, &config, trace.as_deref())?;
    let options = SimOptions {
        payments: args.payments,
        oracle: args.oracle,
        payment_params: parse_epsilon(args.epsilon.as_deref())?,
    };
    std::fs::create_dir_all(&args.out_dir).map_err(io_err(&args.out_dir))?;

    let mut summaries = BTreeMap::new();
    let mut summary_doc = serde_json::Map::new();
    for &scheduler in &args.schedulers {
        let metrics = run_slots_parallel(&config, scheduler, &inputs, &options, args.jobs)?;
        let path = args
            .out_dir
            .join(format!("metrics_{}.csv", scheduler.name()));
        std::fs::write(&path, metrics_csv(&metrics)).map_err(io_err(&path))?;
        let summary = summarize(scheduler, &metrics);
        summary_doc.insert(scheduler.name().to_string(), summary_json(&summary));
        summaries.insert(scheduler, summary);
    }
    let mut doc = json!({
        "seed": args.seed,
        "num_slots": scenario.num_slots,
        "num_rbs": config.num_rbs(),
        "subband_size": config.subband_size(),
        "schedulers": Value::Object(summary_doc),
    });
    if let (Some(auc), Some(rr), Some(bc)) = (
        summaries.get(&Scheduler::AuctionExtended),
        summaries.get(&Scheduler::RoundRobin),
        summaries.get(&Scheduler::BestCqi),
    ) {
        doc["comparison"] = json!({
            "auction_welfare_above_round_robin": auc.total_welfare > rr.total_welfare,
            "auction_welfare_above_best_cqi": auc.total_welfare > bc.total_welfare,
            "best_cqi_throughput_at_least_auction": bc.total_throughput_bits >= auc.total_throughput_bits,
            "auction_throughput_at_least_round_robin": auc.total_throughput_bits >= rr.total_throughput_bits,
        });
    }
    let path = args.out_dir.join("summary.json");
    let text = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
    std::fs::write(&path, text + "\n").map_err(io_err(&path))?;
    write_json(out, &doc)?;
    let violations: usize = summaries
        .values()
        .map(|s| s.feasibility_violations + s.bound_violations)
        .sum();
    if violations > 0 {
        return Err(CliError::Violation(format!(
            "{violations} slots broke feasibility or the approximation bound"
        )));
    }
    Ok(summaries)
}

fn report_json(model: &str, r: &TruthReport) -> Value {
    json!({
        "model": model,
        "trials": r.trials,
        "bidders_swept": r.bidders_swept,
        "winners_swept": r.winners_swept,
        "misreport_violations": r.misreport_violations,
        "monotone_violations": r.monotone_violations,
        "ir_violations": r.ir_violations,
        "worst_relative_gain": r.worst_relative_gain,
        "examples": r.examples,
    })
}

/// Randomized truthfulness, monotonicity and IR suite. With `faulty`, the
/// basic rule is replaced by a deliberately non-monotone one, which the
/// suite is expected to reject.
pub fn truthfulness_check(
    model: Model,
    trials: usize,
    seed: u64,
    epsilon: Option<&str>,
    faulty: bool,
    out: &mut dyn Write,
) -> Result<TruthReport, CliError> {
    let params = parse_epsilon(epsilon)?;
    let (name, report) = match (model, faulty) {
        (Model::Basic, false) => (
            "basic",
            check_rule(&BasicRule, random_basic_instance, trials, seed, &params)?,
        ),
        (Model::Basic, true) => (
            "basic-mirrored",
            check_rule(&MirroredRule, random_basic_instance, trials, seed, &params)?,
        ),
        (Model::Extended, false) => (
            "extended",
            check_rule(
                &ExtendedRule::default(),
                random_extended_instance,
                trials,
                seed,
                &params,
            )?,
        ),
        (Model::Extended, true) => {
            return Err(CliError::Input(
                "--faulty-rule is only available for the basic model".into(),
            ))
        }
    };
    write_json(out, &report_json(name, &report))?;
    if report.violations() > 0 {
        return Err(CliError::Violation(format!(
            "{} violations in {} trials",
            report.violations(),
            report.trials
        )));
    }
    Ok(report)
}
