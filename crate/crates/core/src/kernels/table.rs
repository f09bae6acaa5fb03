//! Kernel tables: CSV rows and a JSON manifest of the quadrature run.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{frac_resolvent_kernel_estimate, massless_halfres_kernel_estimate, KernelQuadratureConfig};
use crate::error::{Error, Result};
use crate::spectral::{Flavor, OperatorSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelRow {
    pub n: usize,
    pub s: f64,
    pub m: f64,
    pub flavor: Flavor,
    pub beta: String,
    pub r: f64,
    pub value: f64,
    pub est_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelManifest {
    pub config: KernelQuadratureConfig,
    pub operator: OperatorSpec,
    pub rows: usize,
    /// Every row passed the doubling check.
    pub converged: bool,
    pub max_relative_change: f64,
}

/// Kernel values at `radii`. Rows that fail the doubling check are kept with
/// their last estimate and mark the manifest unconverged.
pub fn kernel_table(op: &OperatorSpec, radii: &[f64], cfg: &KernelQuadratureConfig) -> Result<(Vec<KernelRow>, KernelManifest)> {
    op.validate()?;
    let loose = KernelQuadratureConfig { rel_tol: f64::INFINITY, ..*cfg };
    let mut rows = Vec::with_capacity(radii.len());
    let mut converged = true;
    let mut worst: f64 = 0.0;
    for &r in radii {
        let est = match op.flavor {
            Flavor::Massive => frac_resolvent_kernel_estimate(op, r, &loose)?,
            Flavor::MasslessShifted => massless_halfres_kernel_estimate(op.dim, r, &loose)?,
        };
        let change = if est.value == 0.0 { 0.0 } else { est.est_error / est.value.abs() };
        worst = worst.max(change);
        converged &= change <= cfg.rel_tol;
        rows.push(KernelRow {
            n: op.dim,
            s: op.order,
            m: op.mass,
            flavor: op.flavor,
            beta: "0".repeat(op.dim),
            r,
            value: est.value,
            est_error: est.est_error,
        });
    }
    let manifest = KernelManifest { config: *cfg, operator: *op, rows: rows.len(), converged, max_relative_change: worst };
    Ok((rows, manifest))
}

pub fn write_kernel_csv(path: &Path, rows: &[KernelRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_manifest(path: &Path, manifest: &KernelManifest) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(manifest)?)?;
    Ok(())
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}
