//! Input and output file formats: slot configuration (JSON), bids and CQI
//! traces (CSV), auction results (JSON).

use std::path::Path;

use serde_json::{json, Map, Value};
use spectrum_auction::model::MAX_CQI;
use spectrum_auction::num::{parse_rational, to_f64};
use spectrum_auction::sim::TraceRecord;
use spectrum_auction::{
    AuctionError, AuctionResult, Bid, BidderId, BidderKind, CqiRateTable, DualScalar, DualSnapshot,
    ExtendedBid, Rational, SlotConfig,
};

use crate::error::CliError;

const DEFAULT_RATE_TABLE: &str = include_str!("../data/rate_table.json");

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))
}

/// Exact value of a JSON number or numeric string.
pub fn json_rational(value: &Value, what: &str) -> Result<Rational, CliError> {
    let text = match value {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        _ => return Err(CliError::Input(format!("{what} must be a number"))),
    };
    parse_rational(&text).ok_or_else(|| CliError::Input(format!("{what}: cannot parse {text:?}")))
}

pub fn rate_table_from_json(value: &Value) -> Result<CqiRateTable, CliError> {
    let items = value
        .as_array()
        .ok_or_else(|| CliError::Input("rate_table must be an array of 16 numbers".into()))?;
    if items.len() != 16 {
        return Err(CliError::Input(format!(
            "rate_table must have 16 entries, found {}",
            items.len()
        )));
    }
    let mut rates: [Rational; 16] = Default::default();
    for (c, (slot, item)) in rates.iter_mut().zip(items).enumerate() {
        *slot = json_rational(item, &format!("rate_table[{c}]"))?;
    }
    Ok(CqiRateTable::new(rates)?)
}

/// Rate table shipped with the tool.
pub fn default_rate_table() -> CqiRateTable {
    let value: Value =
        serde_json::from_str(DEFAULT_RATE_TABLE).expect("bundled table is valid JSON");
    rate_table_from_json(&value["rate_table"]).expect("bundled table is valid")
}

fn json_usize(obj: &Map<String, Value>, key: &str) -> Result<Option<usize>, CliError> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|n| Some(n as usize))
            .ok_or_else(|| CliError::Input(format!("{key} must be a non-negative integer"))),
    }
}

/// Parses `{"num_rbs": N, "subband_size": S, "rate_table": [16 numbers]}`.
/// `subband_size` defaults to 2 and `rate_table` to the bundled table.
pub fn parse_config(text: &str) -> Result<SlotConfig, CliError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| CliError::Input("config must be a JSON object".into()))?;
    let num_rbs = json_usize(obj, "num_rbs")?
        .ok_or_else(|| CliError::Input("config: missing num_rbs".into()))?;
    let subband_size = json_usize(obj, "subband_size")?.unwrap_or(SlotConfig::DEFAULT_SUBBAND_SIZE);
    let table = match obj.get("rate_table") {
        Some(v) => rate_table_from_json(v)?,
        None => default_rate_table(),
    };
    Ok(SlotConfig::new(num_rbs, subband_size, table)?)
}

pub fn load_config(path: &Path) -> Result<SlotConfig, CliError> {
    parse_config(&read_file(path)?)
}

/// Rows of a headerless-or-headed CSV file with their one-based line
/// numbers. A first row whose first field is not an integer is a header.
fn csv_rows(text: &str, source: &str) -> Result<Vec<(u64, Vec<String>)>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Parse {
            file: source.to_string(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let fields: Vec<String> = record.iter().map(str::to_string).collect();
        if fields.iter().all(String::is_empty) {
            continue;
        }
        if i == 0 && fields[0].parse::<u64>().is_err() {
            continue;
        }
        rows.push((line, fields));
    }
    Ok(rows)
}

struct Row<'a> {
    source: &'a str,
    line: u64,
    fields: &'a [String],
}

impl Row<'_> {
    fn err(&self, message: impl Into<String>) -> CliError {
        CliError::Parse {
            file: self.source.to_string(),
            line: self.line,
            message: message.into(),
        }
    }

    fn field(&self, i: usize, name: &str) -> Result<&str, CliError> {
        self.fields
            .get(i)
            .map(String::as_str)
            .ok_or_else(|| self.err(format!("missing field {name}")))
    }

    fn int<T: std::str::FromStr>(&self, i: usize, name: &str) -> Result<T, CliError> {
        let text = self.field(i, name)?;
        text.parse()
            .map_err(|_| self.err(format!("{name}: {text:?} is not a valid integer")))
    }

    fn rational(&self, i: usize, name: &str) -> Result<Rational, CliError> {
        let text = self.field(i, name)?;
        parse_rational(text).ok_or_else(|| self.err(format!("{name}: {text:?} is not a number")))
    }

    fn kind(&self, i: usize) -> Result<BidderKind, CliError> {
        let text = self.field(i, "kind")?;
        match text.to_ascii_uppercase().as_str() {
            "RN" => Ok(BidderKind::RelayNode),
            "UE" => Ok(BidderKind::DirectUe),
            _ => Err(self.err(format!("kind: expected RN or UE, got {text:?}"))),
        }
    }

    fn cqis(&self, from: usize) -> Result<Vec<u8>, CliError> {
        (from..self.fields.len())
            .map(|i| {
                let c: u8 = self.int(i, &format!("cqi_{}", i - from))?;
                if c > MAX_CQI {
                    return Err(self.err(AuctionError::CqiOutOfRange { value: c }.to_string()));
                }
                Ok(c)
            })
            .collect()
    }
}

/// Basic bids: `bidder_id,kind,demand_r,value`.
pub fn parse_basic_bids(text: &str, source: &str) -> Result<Vec<Bid>, CliError> {
    csv_rows(text, source)?
        .iter()
        .map(|(line, fields)| {
            let row = Row {
                source,
                line: *line,
                fields,
            };
            if fields.len() != 4 {
                return Err(row.err(format!("expected 4 fields, found {}", fields.len())));
            }
            Ok(Bid {
                id: BidderId(row.int(0, "bidder_id")?),
                kind: row.kind(1)?,
                demand: row.int(2, "demand_r")?,
                value: row.rational(3, "value")?,
            })
        })
        .collect()
}

/// Extended bids: `bidder_id,kind,demand_r,unit_value,cqi_0,...`.
pub fn parse_extended_bids(text: &str, source: &str) -> Result<Vec<ExtendedBid>, CliError> {
    csv_rows(text, source)?
        .iter()
        .map(|(line, fields)| {
            let row = Row {
                source,
                line: *line,
                fields,
            };
            if fields.len() < 5 {
                return Err(row.err("expected bidder_id,kind,demand_r,unit_value and CQI values"));
            }
            Ok(ExtendedBid {
                id: BidderId(row.int(0, "bidder_id")?),
                kind: row.kind(1)?,
                demand: row.int(2, "demand_r")?,
                unit_value: row.rational(3, "unit_value")?,
                cqi: row.cqis(4)?,
            })
        })
        .collect()
}

/// CQI trace: `slot,bidder_id,cqi_0,...`. Each (slot, bidder) pair may
/// appear once.
pub fn parse_trace(text: &str, source: &str) -> Result<Vec<TraceRecord>, CliError> {
    let mut seen = std::collections::BTreeSet::new();
    csv_rows(text, source)?
        .iter()
        .map(|(line, fields)| {
            let row = Row {
                source,
                line: *line,
                fields,
            };
            if fields.len() < 3 {
                return Err(row.err("expected slot,bidder_id and CQI values"));
            }
            let record = TraceRecord {
                slot: row.int(0, "slot")?,
                bidder: BidderId(row.int(1, "bidder_id")?),
                cqi: row.cqis(2)?,
            };
            if !seen.insert((record.slot, record.bidder)) {
                return Err(row.err(format!(
                    "duplicate record for slot {} bidder {}",
                    record.slot, record.bidder
                )));
            }
            Ok(record)
        })
        .collect()
}

pub fn trace_csv(records: &[TraceRecord]) -> String {
    let width = records.first().map_or(0, |r| r.cqi.len());
    let mut out = String::from("slot,bidder_id");
    for s in 0..width {
        out.push_str(&format!(",cqi_{s}"));
    }
    out.push('\n');
    for r in records {
        out.push_str(&format!("{},{}", r.slot, r.bidder));
        for c in &r.cqi {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
    }
    out
}

pub fn exact(value: &Rational) -> Value {
    Value::String(value.to_string())
}

fn dual_scalar(d: &DualScalar, delta: Option<&Rational>) -> Value {
    let mut obj = json!({"coeff": exact(&d.coeff), "exponent": exact(&d.exponent)});
    if let Some(delta) = delta {
        obj["value"] = json!(d.to_f64(delta));
    }
    obj
}

fn id_map<T>(map: &std::collections::BTreeMap<BidderId, T>, f: impl Fn(&T) -> Value) -> Value {
    Value::Object(map.iter().map(|(id, v)| (id.to_string(), f(v))).collect())
}

pub fn dual_snapshot_json(snapshot: &DualSnapshot) -> Value {
    match snapshot {
        DualSnapshot::Basic(s) => json!({
            "delta": s.delta.as_ref().map(exact),
            "lambda": dual_scalar(&s.lambda, s.delta.as_ref()),
            "rho": id_map(&s.rho, |d| dual_scalar(d, s.delta.as_ref())),
            "xi": id_map(&s.xi, exact),
            "iterations": s.iterations,
        }),
        DualSnapshot::Extended(s) => json!({
            "delta": s.delta.as_ref().map(exact),
            "lambda_per_rb": s.lambda.first().map(|d| dual_scalar(d, s.delta.as_ref())),
            "num_rbs": s.lambda.len(),
            "rho": id_map(&s.rho, |d| dual_scalar(d, s.delta.as_ref())),
            "xi": id_map(&s.xi, exact),
            "iterations": s.iterations,
        }),
        DualSnapshot::None => Value::Null,
    }
}

/// Auction result as JSON. Exact quantities are rational strings such as
/// `"17"` or `"299999/100000"`; `*_f64` fields carry float approximations.
pub fn auction_result_json(model: &str, result: &AuctionResult) -> Value {
    let alloc = &result.allocation;
    json!({
        "model": model,
        "winners": alloc.winner_ids().map(|id| id.0).collect::<Vec<_>>(),
        "assignments": id_map(&alloc.assignment, |rbs| json!(rbs.iter().collect::<Vec<_>>())),
        "reserved": alloc.reserved.iter().collect::<Vec<_>>(),
        "payments": id_map(&result.payments, exact),
        "payments_f64": id_map(&result.payments, |p| json!(to_f64(p))),
        "charges": id_map(&result.charges, exact),
        "social_welfare": exact(&result.social_welfare),
        "social_welfare_f64": to_f64(&result.social_welfare),
        "dual_snapshot": dual_snapshot_json(&result.dual_snapshot),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use spectrum_auction::num::{int, ratio};

    #[test]
    fn config_parses_exactly() {
        let cfg = parse_config(
            r#"{"num_rbs": 12, "subband_size": 3,
                "rate_table": [0, 0.1, "1/3", 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 2e1]}"#,
        )
        .unwrap();
        assert_eq!(cfg.num_rbs(), 12);
        assert_eq!(cfg.num_subbands(), 4);
        assert_eq!(cfg.rate_table().rate(1), &ratio(1, 10));
        assert_eq!(cfg.rate_table().rate(2), &ratio(1, 3));
        assert_eq!(cfg.rate_table().rate(15), &int(20));
    }

    #[test]
    fn config_defaults_and_errors() {
        let cfg = parse_config(r#"{"num_rbs": 8}"#).unwrap();
        assert_eq!(cfg.subband_size(), 2);
        assert_eq!(cfg.rate_table().rate(15), &int(467));
        assert!(parse_config(r#"{"subband_size": 2}"#).is_err());
        assert!(parse_config(r#"{"num_rbs": 8, "rate_table": [1, 2]}"#).is_err());
        assert!(parse_config("not json").is_err());
    }

    #[test]
    fn basic_bids_with_and_without_header() {
        let with = "bidder_id,kind,demand_r,value\n1,UE,3,9\n2,ue,4,8.5\n3,RN,3,3/2\n";
        let bids = parse_basic_bids(with, "bids.csv").unwrap();
        assert_eq!(bids.len(), 3);
        assert_eq!(bids[1].value, ratio(17, 2));
        assert_eq!(bids[2].kind, BidderKind::RelayNode);
        let without = "1,UE,3,9\n";
        assert_eq!(parse_basic_bids(without, "b").unwrap().len(), 1);
    }

    #[test]
    fn malformed_rows_report_their_line() {
        let text = "bidder_id,kind,demand_r,value\n1,UE,3,9\n2,XX,4,8\n";
        match parse_basic_bids(text, "bids.csv") {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match parse_basic_bids("1,UE,3\n", "bids.csv") {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn extended_bids_and_cqi_range() {
        let bids = parse_extended_bids("1,UE,2,2,3,1,1,1\n", "b").unwrap();
        assert_eq!(bids[0].cqi, vec![3, 1, 1, 1]);
        assert!(matches!(
            parse_extended_bids("1,UE,2,2,3,16\n", "b"),
            Err(CliError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn trace_round_trip() {
        let text = "slot,bidder_id,cqi_0,cqi_1,cqi_2\n0,5,12,11,9\n1,5,12,10,9\n";
        let records = parse_trace(text, "t").unwrap();
        assert_eq!(
            records[0],
            TraceRecord {
                slot: 0,
                bidder: BidderId(5),
                cqi: vec![12, 11, 9]
            }
        );
        assert_eq!(trace_csv(&records), text);
        assert!(parse_trace("", "t").unwrap().is_empty());
        let err = parse_trace("0,5,16\n", "t").unwrap_err();
        assert!(err.to_string().contains("outside [0, 15]"), "{err}");
        assert!(parse_trace("0,5,1\n0,5,2\n", "t").is_err());
    }
}
