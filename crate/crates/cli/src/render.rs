//! Text, CSV and JSON rendering. Numbers always use a dot separator.

use std::collections::{BTreeMap, BTreeSet};

use clap::ValueEnum;
use serde_json::Value;

use clustervote::analytics::{sig4, OptionsRow, Table2Row, Table5Row};
use clustervote::bulletin::{AuditReport, BoardCensus};
use clustervote::crypto::ShadowId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

fn csv_of(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn text_of(header: &[&str], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|i| rows.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    for r in rows {
        out += &line(r.iter().map(String::as_str).collect());
    }
    out
}

fn render<T: serde::Serialize>(header: &[&str], rows: Vec<Vec<String>>, items: &T, format: Format) -> String {
    match format {
        Format::Text => text_of(header, &rows),
        Format::Csv => csv_of(header, &rows),
        Format::Json => serde_json::to_string_pretty(items).expect("rows serialize") + "\n",
    }
}

pub fn table2(rows: &[Table2Row], format: Format) -> String {
    let cells = rows
        .iter()
        .map(|r| vec![r.sc.to_string(), r.ao.to_string(), sig4(r.p_cheat), r.display.clone()])
        .collect();
    render(&["sc", "ao", "p_cheat", "display"], cells, &rows, format)
}

pub fn options(rows: &[OptionsRow], name: &str, format: Format) -> String {
    let cells = rows
        .iter()
        .map(|r| vec![r.ao.to_string(), r.nt.to_string(), sig4(r.value), r.display.clone()])
        .collect();
    render(&["ao", "nt", name, "display"], cells, &rows, format)
}

pub fn table5(rows: &[Table5Row], format: Format) -> String {
    let cells = rows
        .iter()
        .map(|r| {
            vec![
                r.ao.to_string(),
                r.nt.to_string(),
                r.cs.to_string(),
                r.attackers.to_string(),
                sig4(r.p_reveal),
                format!("{:.2}", r.discovered),
            ]
        })
        .collect();
    render(&["ao", "nt", "cs", "attackers", "p_reveal", "discovered"], cells, &rows, format)
}

fn pairs(rows: &[(String, String)]) -> Vec<Vec<String>> {
    rows.iter().map(|(k, v)| vec![k.clone(), v.clone()]).collect()
}

pub fn metric_csv(rows: &[(String, String)]) -> String {
    csv_of(&["metric", "value"], &pairs(rows))
}

pub fn metric_text(rows: &[(String, String)]) -> String {
    let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:<w$}  {v}\n")).collect()
}

fn finding_cells(report: &AuditReport) -> Vec<Vec<String>> {
    let opt = |o: Option<String>| o.unwrap_or_default();
    report
        .findings
        .iter()
        .map(|f| {
            vec![
                serde_json::to_value(f.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                opt(f.cluster.map(|c| c.to_string())),
                opt(f.line.map(|l| l.to_string())),
                f.detail.clone(),
            ]
        })
        .collect()
}

pub fn findings_csv(report: &AuditReport) -> String {
    csv_of(&["kind", "cluster", "line", "detail"], &finding_cells(report))
}

pub fn findings_text(report: &AuditReport) -> String {
    let mut out = format!(
        "entries {}  clusters {}  voters {}  global tally {:?}\n",
        report.entries, report.clusters_published, report.voters_counted, report.global_tally
    );
    if report.findings.is_empty() {
        out += "no findings\n";
    } else {
        out += &text_of(&["kind", "cluster", "line", "detail"], &finding_cells(report));
    }
    out
}

/// Census read off the board itself: the signers of each cluster's first
/// parseable entry. Unparseable lines contribute nothing.
pub fn census_from_board(text: &str) -> BoardCensus {
    let mut clusters: BTreeMap<u64, BTreeSet<ShadowId>> = BTreeMap::new();
    for line in text.lines() {
        let Ok(v) = serde_json::from_str::<Value>(line) else {
            continue;
        };
        let Some(id) = v.get("cluster_id").and_then(Value::as_u64) else {
            continue;
        };
        if clusters.contains_key(&id) {
            continue;
        }
        let signers = v
            .get("signatures")
            .and_then(Value::as_array)
            .map(|a| {
                a.iter()
                    .filter_map(|s| serde_json::from_value::<ShadowId>(s.get("signer")?.clone()).ok())
                    .collect()
            })
            .unwrap_or_default();
        clusters.insert(id, signers);
    }
    BoardCensus { clusters }
}
