use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;

use nmfa::emergence::{degree_of_emergence, emergence_series, Baseline, EpochRecord};
use nmfa::io::{emit_emergence, read_json, write_json, write_rows, RunMetadata};
use nmfa::Result;

use crate::args::AnalysisArgs;
use crate::commands::analyze::{analyse_inputs, check_unique_stems, file_name, write_analysed, MetricsReport};
use crate::commands::ensure_dir;

#[derive(Serialize)]
struct EmergenceMeta {
    library_version: String,
    inputs: Vec<String>,
    baseline_epoch: u64,
    log_base: &'static str,
    /// Present when at least one input was analysed in this run.
    analysis: Option<RunMetadata>,
}

fn is_json(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

pub fn run(inputs: &[PathBuf], baseline_epoch: Option<u64>, args: &AnalysisArgs, out: &Path) -> Result<()> {
    let config = args.config()?;
    let to_analyse: Vec<PathBuf> = inputs.iter().filter(|p| !is_json(p)).cloned().collect();
    check_unique_stems(&to_analyse)?;

    let mut analysed = analyse_inputs(&to_analyse, &config)?.into_iter();
    let mut reports = Vec::with_capacity(inputs.len());
    let mut fresh = Vec::new();
    for p in inputs {
        if is_json(p) {
            reports.push(read_json::<MetricsReport>(p)?);
        } else {
            let a = analysed.next().expect("one analysis per manifest");
            reports.push(MetricsReport::new(&a.input, a.epoch, &a.analysis));
            fresh.push(a);
        }
    }

    let records: Vec<EpochRecord> = reports
        .iter()
        .map(|r| EpochRecord {
            alpha0_var: Some(r.alpha0_var),
            width_var: Some(r.width_var),
            ..EpochRecord::new(r.epoch, r.alpha0, r.width)
        })
        .collect();
    let baseline = baseline_epoch.map_or(Baseline::Earliest, Baseline::Epoch);
    let series = emergence_series(&records, baseline)?;
    let base_idx = records
        .iter()
        .position(|r| r.epoch == series.baseline.epoch)
        .expect("baseline comes from the records");

    ensure_dir(out)?;
    for a in &fresh {
        write_analysed(a, &config, out)?;
    }
    emit_emergence(&series, &out.join("emergence.csv"))?;

    let mut rows = Vec::new();
    for r in &reports {
        for (k, s) in r.samples.iter().enumerate() {
            let Some(b) = reports[base_idx].samples.get(k) else { continue };
            let e = degree_of_emergence(
                &EpochRecord::new(reports[base_idx].epoch, b.alpha0, b.width),
                &EpochRecord::new(r.epoch, s.alpha0, s.width),
            )
            .unwrap_or_else(|e| {
                warn!("epoch {} sample {k}: {e}", r.epoch);
                f64::NAN
            });
            rows.push(vec![
                r.epoch.to_string(),
                k.to_string(),
                s.alpha0.to_string(),
                s.width.to_string(),
                e.to_string(),
            ]);
        }
    }
    write_rows(
        &out.join("emergence_samples.csv"),
        &["epoch", "sample", "alpha0", "width", "E"],
        &rows,
    )?;
    write_json(
        &out.join("emergence.meta.json"),
        &EmergenceMeta {
            library_version: env!("CARGO_PKG_VERSION").into(),
            inputs: inputs.iter().map(|p| file_name(p)).collect(),
            baseline_epoch: series.baseline.epoch,
            log_base: "e",
            analysis: (!fresh.is_empty()).then(|| RunMetadata::from_config(&config)),
        },
    )?;
    if let Some(last) = series.points.last() {
        info!("E at epoch {}: {:.4}", last.record.epoch, last.emergence);
    }
    Ok(())
}
