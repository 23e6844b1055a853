//! Parameter sweeps: one run per value of a scenario field.

use rayon::prelude::*;
use toml::{Table, Value};

use super::run::{run_scenario, HarnessError, RunReport};
use super::scenario::Scenario;

/// One run of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub index: usize,
    pub value: String,
    pub report: RunReport,
}

/// Parses a `--values` item as a TOML value, falling back to a plain string
/// so `set1` works as well as `"set1"`.
pub fn parse_value(text: &str) -> Value {
    let text = text.trim();
    match format!("v = {text}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("key just written"),
        Err(_) => Value::String(text.to_string()),
    }
}

/// Splits a comma-separated value list, keeping commas inside brackets and quotes.
pub fn split_values(list: &str) -> Vec<String> {
    let mut out = Vec::new();
    let (mut depth, mut quoted, mut cur) = (0i32, false, String::new());
    for c in list.chars() {
        match c {
            '"' => quoted = !quoted,
            '[' | '{' if !quoted => depth += 1,
            ']' | '}' if !quoted => depth -= 1,
            ',' if !quoted && depth == 0 => {
                out.push(std::mem::take(&mut cur).trim().to_string());
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

/// Sets `path` to `value`. Paths are dot-separated; numbers index arrays and
/// `*` matches every element or entry that can hold the rest of the path.
/// Several paths may be given separated by commas. Missing table keys are
/// created unless they sit below a `*`.
pub fn set_path(doc: &mut Value, path: &str, value: &Value) -> Result<usize, String> {
    let mut total = 0;
    for one in path.split(',').map(str::trim) {
        let parts: Vec<&str> = one.split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(format!("malformed parameter path {one:?}"));
        }
        let n = set_at(doc, &parts, value, one, false)?;
        if n == 0 {
            return Err(format!("parameter path {one:?} matches nothing"));
        }
        total += n;
    }
    Ok(total)
}

fn set_at(node: &mut Value, parts: &[&str], value: &Value, path: &str, wild: bool) -> Result<usize, String> {
    let Some((head, rest)) = parts.split_first() else {
        *node = value.clone();
        return Ok(1);
    };
    // entries of a table are unrelated, so a `*` over a table only follows
    // those that already have the rest of the path; array elements share a
    // schema and get missing keys created like an explicit index would
    let descend_all = |items: &mut dyn Iterator<Item = &mut Value>, table: bool| -> Result<usize, String> {
        let mut n = 0;
        for item in items {
            if !table || rest.is_empty() {
                n += set_at(item, rest, value, path, false)?;
            } else if matches!(item, Value::Table(_) | Value::Array(_)) {
                n += set_at(item, rest, value, path, true).unwrap_or(0);
            }
        }
        Ok(n)
    };
    match node {
        Value::Array(items) if *head == "*" => descend_all(&mut items.iter_mut(), false),
        Value::Table(t) if *head == "*" => descend_all(&mut t.iter_mut().map(|(_, v)| v), true),
        Value::Array(items) => {
            let i: usize = head.parse().map_err(|_| format!("{path:?}: {head:?} is not an array index"))?;
            let len = items.len();
            let item = items.get_mut(i).ok_or_else(|| format!("{path:?}: index {i} out of range (len {len})"))?;
            set_at(item, rest, value, path, wild)
        }
        Value::Table(t) => {
            if wild && !t.contains_key(*head) {
                return Ok(0);
            }
            let entry = t.entry(head.to_string()).or_insert_with(|| {
                if rest.is_empty() {
                    value.clone()
                } else {
                    Value::Table(Table::new())
                }
            });
            set_at(entry, rest, value, path, wild)
        }
        _ => Err(format!("{path:?}: cannot descend into {head:?}, the value there is not a table or array")),
    }
}

/// Builds the scenario for each value, with seed `base + index`.
pub fn expand(template: &Value, param: &str, values: &[String]) -> Result<Vec<Scenario>, HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::Sweep("sweep needs at least one value".into()));
    }
    let base_seed = match template.get("seed") {
        None => 1,
        Some(Value::Integer(s)) if *s >= 0 => *s as u64,
        Some(_) => return Err(HarnessError::Sweep("seed must be a non-negative integer".into())),
    };
    values
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let mut doc = template.clone();
            set_path(&mut doc, param, &parse_value(text)).map_err(HarnessError::Sweep)?;
            set_path(&mut doc, "seed", &Value::Integer((base_seed + i as u64) as i64)).map_err(HarnessError::Sweep)?;
            let scenario: Scenario = doc
                .try_into()
                .map_err(|e: toml::de::Error| HarnessError::Sweep(format!("{param} = {text}: {e}")))?;
            scenario.validate()?;
            Ok(scenario)
        })
        .collect()
}

/// Runs every point of the sweep in parallel; results come back in value order.
pub fn sweep(template: &Value, param: &str, values: &[String]) -> Result<Vec<SweepRun>, HarnessError> {
    let scenarios = expand(template, param, values)?;
    scenarios
        .par_iter()
        .zip(values.par_iter())
        .enumerate()
        .map(|(index, (s, v))| Ok(SweepRun { index, value: v.clone(), report: run_scenario(s, None)? }))
        .collect()
}

/// One flat row per run.
pub fn summary_csv(param: &str, runs: &[SweepRun]) -> Result<String, HarnessError> {
    let n_senders = runs.iter().map(|r| r.report.senders.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "index",
        "param",
        "value",
        "seed",
        "integrity",
        "throughput_bps",
        "bytes_delivered",
        "frames_sent",
        "frames_resent",
        "resend_ratio",
        "switch_drops",
        "link_drops",
    ]
    .map(String::from)
    .to_vec();
    for i in 0..n_senders {
        for f in ["throughput_bps", "resend_ratio", "final_delay_us", "ack_latency_mean_ns"] {
            header.push(format!("s{i}_{f}"));
        }
    }
    let csv_err = |e: csv::Error| HarnessError::Io(e.into());
    w.write_record(&header).map_err(csv_err)?;
    for run in runs {
        let r = &run.report;
        let sent: u64 = r.senders.iter().map(|s| s.frames_sent).sum();
        let resent: u64 = r.senders.iter().map(|s| s.frames_resent).sum();
        let mut row = vec![
            run.index.to_string(),
            param.to_string(),
            run.value.clone(),
            r.seed.to_string(),
            r.integrity.to_string(),
            format!("{:.0}", r.throughput_bps),
            r.senders.iter().map(|s| s.bytes_delivered).sum::<u64>().to_string(),
            sent.to_string(),
            resent.to_string(),
            format!("{:.6}", if sent == 0 { 0.0 } else { resent as f64 / sent as f64 }),
            r.switch_drops.to_string(),
            r.link_drops.to_string(),
        ];
        for i in 0..n_senders {
            match r.senders.get(i) {
                Some(s) => row.extend([
                    format!("{:.0}", s.throughput_bps),
                    format!("{:.6}", s.resend_ratio),
                    s.final_delay_us.to_string(),
                    format!("{:.1}", s.ack_latency.mean_ns),
                ]),
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}
