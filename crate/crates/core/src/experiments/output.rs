//! CSV series and JSON summaries.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;

use super::config::ExperimentConfig;
use super::scenarios::ResultBundle;
use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};

/// Header line of every `*.series.csv` file.
pub const SERIES_HEADER: &str =
    "t,l2_v,grad_v,h2_v,l4_v4,l2_phi,grad_phi,hminus1_phi,ups1,ups2,e1,e2,e3,res_phi_l2,res_phi_h1,res_v_l2,nvt,nphit,nvt_h1";

fn write_rows<'a>(path: &Path, header: &str, rows: impl Iterator<Item = Vec<f64>> + 'a) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{header}")?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes diagnostics rows with 17 significant digits.
pub fn write_series(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    write_rows(path, SERIES_HEADER, records.iter().map(|r| r.columns().to_vec()))
}

/// Writes every file of a bundle into `dir` and returns the paths.
pub fn write_bundle(bundle: &ResultBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let name = &bundle.config.name;
    let mut written = Vec::new();

    let series = dir.join(format!("{name}.series.csv"));
    write_series(&series, &bundle.series)?;
    written.push(series);

    for (k, m) in bundle.members.iter().enumerate() {
        let p = dir.join(format!("{name}.member{k}.series.csv"));
        write_series(&p, m)?;
        written.push(p);
    }

    if let Some(split) = &bundle.decomposition {
        let p = dir.join(format!("{name}.decomposition.csv"));
        let rows = (0..split.times.len()).map(|k| {
            vec![
                split.times[k],
                split.phid_h1_exact[k],
                split.phid_h1_stepped[k],
                split.expected[k],
                split.phic_h1[k],
                split.phic_h2[k],
                split.route_gap_h1[k],
            ]
        });
        write_rows(
            &p,
            "t,phid_h1_exact,phid_h1_stepped,expected,phic_h1,phic_h2,route_gap_h1",
            rows,
        )?;
        written.push(p);
    }

    if !bundle.gap_series.is_empty() {
        let p = dir.join(format!("{name}.gaps.csv"));
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain(bundle.gap_series.iter().map(|g| format!("D_gap_{:e}", g.gap)))
            .collect();
        let times = &bundle.gap_series[0].times;
        let rows = (0..times.len()).map(|k| {
            std::iter::once(times[k])
                .chain(bundle.gap_series.iter().map(|g| g.values[k]))
                .collect()
        });
        write_rows(&p, &header.join(","), rows)?;
        written.push(p);
    }

    let summary = dir.join(format!("{name}.summary.json"));
    let value = json!({
        "name": name,
        "scenario": bundle.config.scenario,
        "passed": bundle.passed(),
        "exit_code": bundle.exit_code(),
        "wall_clock_seconds": bundle.wall_clock_seconds,
        "samples": bundle.series.len(),
        "certificates": bundle.certificates,
        "contraction": bundle.contraction,
        "notes": bundle.notes,
        "config": bundle.config,
    });
    std::fs::write(&summary, serde_json::to_string_pretty(&value)?)?;
    written.push(summary);
    Ok(written)
}

/// Summary for a run that stopped with an error.
pub fn write_failure(config: &ExperimentConfig, error: &Error, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let failure_time = match error {
        Error::BlowUp { t, .. } => Some(*t),
        _ => None,
    };
    let value = json!({
        "name": config.name,
        "scenario": config.scenario,
        "passed": false,
        "exit_code": 2,
        "error": error.to_string(),
        "failure_time": failure_time,
        "config": config,
    });
    let path = dir.join(format!("{}.summary.json", config.name));
    std::fs::write(&path, serde_json::to_string_pretty(&value)?)?;
    Ok(path)
}
