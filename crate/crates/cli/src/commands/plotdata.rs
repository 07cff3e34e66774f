//! `hot plotdata`: long-format CSV of a report's series.

use std::path::Path;

use serde_json::Value;

use crate::report::Series;
use crate::{CliError, PlotArgs};

/// Suffix of report files written by the check commands.
pub const REPORT_SUFFIX: &str = "_report.json";

pub(super) fn run(args: &PlotArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.report).map_err(|e| {
        CliError::Usage(format!("cannot read report {}: {e}", args.report.display()))
    })?;
    let csv = plot_csv(&text)?;
    let out_dir = match &args.out {
        Some(d) => d.clone(),
        None => args
            .report
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default(),
    };
    let stem = args
        .report
        .file_name()
        .and_then(|n| n.to_str())
        .map(|n| {
            n.strip_suffix(REPORT_SUFFIX)
                .or(n.strip_suffix(".json"))
                .unwrap_or(n)
        })
        .unwrap_or("report");
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Output(format!("cannot create {}: {e}", out_dir.display())))?;
    let file = out_dir.join(format!("{stem}_plotdata.csv"));
    std::fs::write(&file, csv)
        .map_err(|e| CliError::Output(format!("cannot write {}: {e}", file.display())))?;
    println!("{}", file.display());
    Ok(())
}

/// `series,x,y` rows for every point of every series in the report JSON.
pub fn plot_csv(report_json: &str) -> Result<String, CliError> {
    let report: Value = serde_json::from_str(report_json)
        .map_err(|e| CliError::Usage(format!("report is not JSON: {e}")))?;
    let series: Vec<Series> = match report.get("series") {
        None | Some(Value::Null) => Vec::new(),
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| CliError::Usage(format!("malformed series section: {e}")))?,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Output(format!("csv: {e}"));
    w.write_record(["series", "x", "y"]).map_err(err)?;
    for s in &series {
        for [x, y] in &s.points {
            w.write_record([
                s.name.as_str(),
                &hot_core::io::format_number(*x),
                &hot_core::io::format_number(*y),
            ])
            .map_err(err)?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Output(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
