//! Output files and the terminal summary.

use std::fs;
use std::io;
use std::path::Path;

use crate::runner::{PlotData, ResultRecord, RunOutput};

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x}"))
}

fn pass_label(p: Option<bool>) -> &'static str {
    match p {
        Some(true) => "pass",
        Some(false) => "FAIL",
        None => "-",
    }
}

/// One JSON object per line. Wall times are left out so that equal
/// configurations give byte-identical files.
pub fn records_jsonl(records: &[ResultRecord]) -> String {
    records.iter().map(|r| serde_json::to_string(r).expect("records serialize") + "\n").collect()
}

pub fn summary_csv(records: &[ResultRecord]) -> String {
    let mut out = String::from("experiment_id,config_hash,seed,scope,metric,value,std_error,reference,p_value,pass,wall_time_s\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{:.3}\n",
            r.experiment_id,
            r.config_hash,
            r.seed,
            r.scope,
            r.metric,
            r.value,
            opt(r.std_error),
            opt(r.reference),
            opt(r.p_value),
            r.pass.map_or("", |p| if p { "true" } else { "false" }),
            r.wall_time
        ));
    }
    out
}

/// Whitespace-separated columns under a `#` header line.
pub fn plot_file(plot: &PlotData) -> String {
    let mut out = format!("# {}\n", plot.columns.join(" "));
    for row in &plot.rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

/// Aligned text table, one row per record.
pub fn summary_table(records: &[ResultRecord]) -> String {
    let header = ["scope", "metric", "value", "std_error", "reference", "p_value", "status", "time_s"];
    let rows: Vec<[String; 8]> = records
        .iter()
        .map(|r| {
            [
                r.scope.clone(),
                r.metric.clone(),
                format!("{:.6}", r.value),
                r.std_error.map_or_else(String::new, |v| format!("{v:.6}")),
                r.reference.map_or_else(String::new, |v| format!("{v:.6}")),
                r.p_value.map_or_else(String::new, |v| format!("{v:.4}")),
                pass_label(r.pass).to_string(),
                format!("{:.2}", r.wall_time),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    for row in &rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

/// Writes `records.jsonl`, `summary.csv`, the `*.dat` plot files and any
/// dumps under `dir`, and returns the summary table.
pub fn emit_summary(output: &RunOutput, dir: &Path) -> io::Result<String> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("records.jsonl"), records_jsonl(&output.records))?;
    fs::write(dir.join("summary.csv"), summary_csv(&output.records))?;
    for plot in &output.plots {
        fs::write(dir.join(format!("{}.dat", plot.name)), plot_file(plot))?;
    }
    for (path, contents) in &output.dumps {
        let target = dir.join("dump").join(path);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(target, contents)?;
    }
    Ok(summary_table(&output.records))
}
