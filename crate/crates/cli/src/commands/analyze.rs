use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use nmfa::analysis::{analyze_network, Analysis, AnalysisConfig, SampleDiagnostics};
use nmfa::io::{emit_spectrum, load_checkpoint, write_json, RunMetadata, SpectrumView};
use nmfa::{Error, Result};

use crate::args::AnalysisArgs;
use crate::commands::ensure_dir;

/// Contents of `<stem>.metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub input: String,
    pub epoch: u64,
    /// Metrics of the mean spectrum.
    pub alpha0: f64,
    pub width: f64,
    pub q_at_alpha0: f64,
    /// Mean and population variance of the per-sample metrics.
    pub alpha0_mean: f64,
    pub alpha0_var: f64,
    pub width_mean: f64,
    pub width_var: f64,
    pub samples: Vec<SampleReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub alpha0: f64,
    pub width: f64,
    pub diagnostics: SampleDiagnostics,
}

impl MetricsReport {
    pub fn new(input: &Path, epoch: u64, a: &Analysis) -> Self {
        MetricsReport {
            input: file_name(input),
            epoch,
            alpha0: a.metrics.alpha0,
            width: a.metrics.width,
            q_at_alpha0: a.metrics.q_at_alpha0,
            alpha0_mean: a.aggregate.alpha0_mean,
            alpha0_var: a.aggregate.alpha0_var,
            width_mean: a.aggregate.width_mean,
            width_var: a.aggregate.width_var,
            samples: a
                .aggregate
                .samples
                .iter()
                .zip(&a.diagnostics)
                .map(|(m, d)| SampleReport {
                    alpha0: m.alpha0,
                    width: m.width,
                    diagnostics: d.clone(),
                })
                .collect(),
        }
    }
}

pub(crate) fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub(crate) fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "checkpoint".into())
}

/// One analysed checkpoint, not yet written.
pub struct Analysed {
    pub input: PathBuf,
    pub epoch: u64,
    pub analysis: Analysis,
}

pub fn analyse_inputs(inputs: &[PathBuf], config: &AnalysisConfig) -> Result<Vec<Analysed>> {
    inputs
        .iter()
        .map(|path| {
            info!("analysing {}", path.display());
            let ck = load_checkpoint(path)?;
            let analysis = analyze_network(&ck.network, config).map_err(|e| match e {
                Error::Degenerate(m) => Error::Degenerate(format!("{}: {m}", path.display())),
                other => other,
            })?;
            Ok(Analysed {
                input: path.clone(),
                epoch: ck.epoch,
                analysis,
            })
        })
        .collect()
}

pub fn write_analysed(a: &Analysed, config: &AnalysisConfig, out: &Path) -> Result<()> {
    let stem = stem(&a.input);
    let mut meta = RunMetadata::from_config(config);
    meta.epoch = Some(a.epoch);
    meta.input = Some(file_name(&a.input));
    emit_spectrum(
        SpectrumView::Aggregate(&a.analysis.aggregate),
        &out.join(format!("{stem}.spectrum.csv")),
        &meta,
    )?;
    write_json(
        &out.join(format!("{stem}.metrics.json")),
        &MetricsReport::new(&a.input, a.epoch, &a.analysis),
    )
}

pub(crate) fn check_unique_stems(inputs: &[PathBuf]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for p in inputs {
        if !seen.insert(stem(p)) {
            return Err(Error::InvalidParameter(format!(
                "two inputs share the file stem {:?}; their outputs would collide",
                stem(p)
            )));
        }
    }
    Ok(())
}

pub fn run(inputs: &[PathBuf], args: &AnalysisArgs, out: &Path) -> Result<()> {
    let config = args.config()?;
    check_unique_stems(inputs)?;
    let analysed = analyse_inputs(inputs, &config)?;
    ensure_dir(out)?;
    for a in &analysed {
        write_analysed(a, &config, out)?;
        info!(
            "{}: alpha0 {:.4}, width {:.4}",
            file_name(&a.input),
            a.analysis.metrics.alpha0,
            a.analysis.metrics.width
        );
    }
    Ok(())
}
