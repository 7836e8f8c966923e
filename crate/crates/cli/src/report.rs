use std::collections::BTreeMap;
use std::path::Path;

use fairdiv::metrics::envy_scale;

use crate::error::CliError;

/// One parsed row of a summary CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub trial: u64,
    pub t: usize,
    pub max_envy: f64,
    pub peak_envy: f64,
    pub ef: bool,
    pub ef1: bool,
    pub utilities: Vec<f64>,
    pub po_verdict: String,
}

pub fn parse_summary(text: &str, origin: &Path) -> Result<Vec<SummaryRow>, CliError> {
    let bad = |what: String| CliError::Input(format!("{}: {what}", origin.display()));
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let n = header.iter().filter(|h| h.starts_with("utility_")).count();
    if header.len() != 7 + n || &header[0] != "trial" || &header[header.len() - 1] != "po_verdict" {
        return Err(bad("not a summary CSV".into()));
    }
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let num = |k: usize| {
            field(k)
                .parse::<f64>()
                .map_err(|e| bad(format!("row {}: {e}", line + 1)))
        };
        let flag = |k: usize| {
            field(k)
                .parse::<bool>()
                .map_err(|e| bad(format!("row {}: {e}", line + 1)))
        };
        rows.push(SummaryRow {
            trial: field(0)
                .parse()
                .map_err(|e| bad(format!("row {}: {e}", line + 1)))?,
            t: field(1)
                .parse()
                .map_err(|e| bad(format!("row {}: {e}", line + 1)))?,
            max_envy: num(2)?,
            peak_envy: num(3)?,
            ef: flag(4)?,
            ef1: flag(5)?,
            utilities: (0..n).map(|i| num(6 + i)).collect::<Result<_, _>>()?,
            po_verdict: field(6 + n).to_string(),
        });
    }
    Ok(rows)
}

/// Aggregate of all rows at one checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub t: usize,
    pub runs: usize,
    pub mean_max_envy: f64,
    pub median_max_envy: f64,
    pub p90_max_envy: f64,
    pub worst_max_envy: f64,
    pub mean_peak_envy: f64,
    pub p_ef: f64,
    pub p_ef1: f64,
    /// Mean max envy over `sqrt(t ln t)`.
    pub envy_ratio: f64,
    pub mean_utilities: Vec<f64>,
    /// Count of each `po_verdict` value.
    pub po: BTreeMap<String, usize>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

pub fn aggregate(rows: &[SummaryRow]) -> Result<Vec<ReportRow>, CliError> {
    let n = rows.first().map_or(0, |r| r.utilities.len());
    if rows.iter().any(|r| r.utilities.len() != n) {
        return Err(CliError::Input(
            "summaries disagree on the number of agents".into(),
        ));
    }
    let mut by_t: BTreeMap<usize, Vec<&SummaryRow>> = BTreeMap::new();
    for r in rows {
        by_t.entry(r.t).or_default().push(r);
    }
    Ok(by_t
        .into_iter()
        .map(|(t, group)| {
            let runs = group.len();
            let count = runs as f64;
            let mut envies: Vec<f64> = group.iter().map(|r| r.max_envy).collect();
            envies.sort_by(f64::total_cmp);
            let mean = envies.iter().sum::<f64>() / count;
            let scale = envy_scale(t);
            let mut po = BTreeMap::new();
            for r in &group {
                *po.entry(r.po_verdict.clone()).or_insert(0) += 1;
            }
            ReportRow {
                t,
                runs,
                mean_max_envy: mean,
                median_max_envy: quantile(&envies, 0.5),
                p90_max_envy: quantile(&envies, 0.9),
                worst_max_envy: envies[runs - 1],
                mean_peak_envy: group.iter().map(|r| r.peak_envy).sum::<f64>() / count,
                p_ef: group.iter().filter(|r| r.ef).count() as f64 / count,
                p_ef1: group.iter().filter(|r| r.ef1).count() as f64 / count,
                envy_ratio: if scale > 0.0 { mean / scale } else { 0.0 },
                mean_utilities: (0..n)
                    .map(|i| group.iter().map(|r| r.utilities[i]).sum::<f64>() / count)
                    .collect(),
                po,
            }
        })
        .collect())
}

/// Report CSV: one row per checkpoint.
pub fn report_csv(report: &[ReportRow]) -> String {
    let n = report.first().map_or(0, |r| r.mean_utilities.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "checkpoint_t",
        "runs",
        "mean_max_envy",
        "median_max_envy",
        "p90_max_envy",
        "worst_max_envy",
        "mean_peak_envy",
        "p_ef",
        "p_ef1",
        "envy_ratio",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((0..n).map(|i| format!("mean_utility_{i}")));
    header.extend(["po_efficient", "po_dominated", "po_unknown", "po_na"].map(String::from));
    w.write_record(&header).expect("writing to memory");
    for r in report {
        let mut rec = vec![r.t.to_string(), r.runs.to_string()];
        rec.extend(
            [
                r.mean_max_envy,
                r.median_max_envy,
                r.p90_max_envy,
                r.worst_max_envy,
                r.mean_peak_envy,
                r.p_ef,
                r.p_ef1,
                r.envy_ratio,
            ]
            .iter()
            .map(f64::to_string),
        );
        rec.extend(r.mean_utilities.iter().map(f64::to_string));
        for key in ["efficient", "dominated", "unknown", "n/a"] {
            rec.push(r.po.get(key).copied().unwrap_or(0).to_string());
        }
        w.write_record(&rec).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str =
        "trial,checkpoint_t,max_envy,peak_envy,ef,ef1,utility_0,utility_1,po_verdict\n\
                          0,4,1,2,false,true,1,2,efficient\n\
                          1,4,0,1,true,true,3,2,n/a\n\
                          0,8,2,2,false,false,4,4,dominated\n";

    #[test]
    fn aggregates_by_checkpoint() {
        let rows = parse_summary(SAMPLE, Path::new("sample")).unwrap();
        assert_eq!(rows.len(), 3);
        let report = aggregate(&rows).unwrap();
        assert_eq!(report.len(), 2);
        let first = &report[0];
        assert_eq!((first.t, first.runs), (4, 2));
        assert_eq!(first.mean_max_envy, 0.5);
        assert_eq!(first.p_ef, 0.5);
        assert_eq!(first.mean_utilities, vec![2.0, 2.0]);
        let csv = report_csv(&report);
        assert!(csv.lines().nth(1).unwrap().ends_with(",1,0,0,1"), "{csv}");
    }

    #[test]
    fn rejects_other_csv() {
        assert!(parse_summary("a,b\n1,2\n", Path::new("x")).is_err());
    }
}
