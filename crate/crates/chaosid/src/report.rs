//! CSV emitters for metric tables and figure series. Absent models leave
//! their cells empty.

use std::path::Path;

use chaosid_core::analysis::{ErrorGrowthSeries, PdfComparison, UncertaintyReport};
use chaosid_core::dynsys::Trajectory;
use chaosid_core::metrics::MetricRow;
use chaosid_core::pipeline::{ExperimentResult, ModelKind};

use crate::error::Result;
use crate::io::{csv_error, fmt_f64};

pub const METRICS_HEADER: [&str; 6] = ["model", "mse", "mae", "r2", "bhattacharyya", "pearson"];
pub const PDF_HEADER: [&str; 5] = ["bin_center", "density_true", "density_gp", "density_mlp", "density_lr"];
pub const GROWTH_HEADER: [&str; 4] = ["mtu", "err_gp", "err_mlp", "err_lr"];
pub const UNCERTAINTY_HEADER: [&str; 5] = ["index", "true_h", "mean", "lower95", "upper95"];
pub const SUMMARY_HEADER: [&str; 12] =
    ["experiment", "model", "k", "j", "forcing", "regime", "mse", "mae", "r2", "bhattacharyya", "pearson", "status"];

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub(crate) fn metric_cells(row: &MetricRow) -> [String; 5] {
    [row.mse, row.mae, row.r2, row.bhattacharyya, row.pearson].map(fmt_f64)
}

fn write_rows<H, I, R>(path: &Path, header: H, rows: I) -> Result<()>
where
    H: IntoIterator,
    H::Item: AsRef<[u8]>,
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(crate::error::Error::io(path))
}

pub fn write_metrics(path: &Path, result: &ExperimentResult) -> Result<()> {
    let rows = result.metrics.iter().map(|m| {
        let mut r = vec![m.model.name().to_string()];
        r.extend(metric_cells(&m.row));
        r
    });
    write_rows(path, METRICS_HEADER, rows)
}

pub fn write_pdf(path: &Path, pdf: &PdfComparison) -> Result<()> {
    let centers = pdf.centers();
    let cell = |m: &Option<chaosid_core::analysis::ModelDensity>, i: usize| opt(m.as_ref().map(|d| d.density[i]));
    let rows = centers.iter().enumerate().map(|(i, c)| {
        [fmt_f64(*c), fmt_f64(pdf.density_true[i]), cell(&pdf.gp, i), cell(&pdf.mlp, i), cell(&pdf.lr, i)]
    });
    write_rows(path, PDF_HEADER, rows)
}

pub fn write_growth(path: &Path, g: &ErrorGrowthSeries) -> Result<()> {
    let cell = |c: &Option<Vec<f64>>, i: usize| opt(c.as_ref().map(|v| v[i]));
    let rows = g.mtu.iter().enumerate().map(|(i, t)| [fmt_f64(*t), cell(&g.gp, i), cell(&g.mlp, i), cell(&g.lr, i)]);
    write_rows(path, GROWTH_HEADER, rows)
}

/// Writes the header alone when no GP was fitted.
pub fn write_uncertainty(path: &Path, u: Option<&UncertaintyReport>) -> Result<()> {
    let rows = u.map(|u| u.rows.as_slice()).unwrap_or_default().iter().enumerate().map(|(i, r)| {
        [i.to_string(), fmt_f64(r.true_h), fmt_f64(r.mean), fmt_f64(r.lower95), fmt_f64(r.upper95)]
    });
    write_rows(path, UNCERTAINTY_HEADER, rows)
}

pub fn write_loss_curve(path: &Path, curve: &[f64]) -> Result<()> {
    let rows = curve.iter().enumerate().map(|(i, l)| [(i + 1).to_string(), fmt_f64(*l)]);
    write_rows(path, ["epoch", "loss"], rows)
}

/// Columns `time, X1..XK`, one row per retained state.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let (k, _) = traj.dims();
    let header: Vec<String> = std::iter::once("time".to_string()).chain((1..=k).map(|i| format!("X{i}"))).collect();
    let rows = (0..traj.len()).map(|i| {
        let s = traj.flat_state(i);
        std::iter::once(fmt_f64(traj.time(i))).chain(s[..k].iter().map(|v| fmt_f64(*v))).collect::<Vec<_>>()
    });
    write_rows(path, header, rows)
}

/// One row of the reproduce-all summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub experiment: u8,
    pub model: ModelKind,
    pub k: usize,
    pub j: usize,
    pub forcing: f64,
    pub regime: String,
    pub metrics: Option<MetricRow>,
    pub status: String,
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        let mut out =
            vec![r.experiment.to_string(), r.model.name().to_string(), r.k.to_string(), r.j.to_string(), fmt_f64(r.forcing), r.regime.clone()];
        match &r.metrics {
            Some(m) => out.extend(metric_cells(m)),
            None => out.extend(vec![String::new(); 5]),
        }
        out.push(r.status.clone());
        out
    });
    write_rows(path, SUMMARY_HEADER, rows)
}
