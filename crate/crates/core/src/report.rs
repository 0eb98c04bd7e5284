//! CSV outputs for external plotting.

use std::fs::File;
use std::path::Path;

use crate::dataset::FeatureId;
use crate::efs::EfsReport;
use crate::error::{Error, Result};
use crate::lda::DecisionGrid;
use crate::pca::{PcaModel, ScoreTable};

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Format(format!("{}: {e}", path.display()))
}

/// `pc,ratio,cumulative`, one row per component.
pub fn write_scree(model: &PcaModel, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_error(path);
    w.write_record(["pc", "ratio", "cumulative"])
        .map_err(&err)?;
    for (i, (r, c)) in model
        .explained_variance_ratio
        .iter()
        .zip(&model.cumulative_ratio)
        .enumerate()
    {
        w.write_record([(i + 1).to_string(), r.to_string(), c.to_string()])
            .map_err(&err)?;
    }
    finish(w, path)
}

/// Absolute loadings in report row order: `feature,PC1,...,PC7`.
pub fn write_loadings(model: &PcaModel, path: &Path) -> Result<()> {
    let report = model.loading_report()?;
    let mut w = writer(path)?;
    let err = csv_error(path);
    let mut head = vec!["feature".to_string()];
    head.extend((1..=report.values[0].len()).map(|i| format!("PC{i}")));
    w.write_record(&head).map_err(&err)?;
    for (f, row) in report.features.iter().zip(&report.values) {
        let mut rec = vec![f.name().to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(&err)?;
    }
    finish(w, path)
}

/// `pc<i>,pc<j>,...,label`.
pub fn write_scores(table: &ScoreTable, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_error(path);
    let mut head: Vec<String> = table.components.iter().map(|c| format!("pc{c}")).collect();
    head.push("label".into());
    w.write_record(&head).map_err(&err)?;
    for (scores, label) in table.scores.iter().zip(&table.labels) {
        let mut rec: Vec<String> = scores.iter().map(|v| v.to_string()).collect();
        rec.push(label.map(|l| l.name().to_string()).unwrap_or_default());
        w.write_record(&rec).map_err(&err)?;
    }
    finish(w, path)
}

/// `x,y,label`, x varying fastest.
pub fn write_decision_grid(grid: &DecisionGrid, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_error(path);
    w.write_record(["x", "y", "label"]).map_err(&err)?;
    for (y, row) in grid.ys.iter().zip(&grid.labels) {
        for (x, label) in grid.xs.iter().zip(row) {
            w.write_record([x.to_string(), y.to_string(), label.name().to_string()])
                .map_err(&err)?;
        }
    }
    finish(w, path)
}

pub fn subset_name(subset: &[usize]) -> String {
    subset
        .iter()
        .map(|&i| {
            FeatureId::from_index(i)
                .map(|f| f.name().to_string())
                .unwrap_or_else(|| format!("f{i}"))
        })
        .collect::<Vec<_>>()
        .join("+")
}

/// `subset,size,metric,flag` with `flag` one of `ok`, `fit_failed`.
pub fn write_efs(report: &EfsReport, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_error(path);
    write_efs_records(report, &mut w).map_err(&err)?;
    finish(w, path)
}

pub fn write_efs_records<W: std::io::Write>(
    report: &EfsReport,
    w: &mut csv::Writer<W>,
) -> csv::Result<()> {
    w.write_record(["subset", "size", "metric", "flag"])?;
    for r in &report.all_results {
        w.write_record([
            subset_name(&r.subset),
            r.size.to_string(),
            r.metric_value.to_string(),
            if r.fit_failed { "fit_failed" } else { "ok" }.to_string(),
        ])?;
    }
    Ok(())
}

/// The EFS table as bytes, as written by [`write_efs`].
pub fn efs_csv_bytes(report: &EfsReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write_efs_records(report, &mut w).map_err(|e| Error::Format(e.to_string()))?;
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}
