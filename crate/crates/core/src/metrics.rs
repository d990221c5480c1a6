//! Geometric seam-pucker (SP) indicators from physical measurements.
//!
//! Values are percentages and are returned unclamped; negative readings come
//! from measurement noise and are left for the caller to judge.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("fabric thickness must be > 0, got {0}")]
    NonPositiveThickness(f64),
    #[error("sewn length must be > 0, got {0}")]
    NonPositiveLength(f64),
}

/// Physical measurements in millimetres. Either pair may be supplied alone.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PuckerMeasurement {
    pub seam_thickness: Option<f64>,
    pub fabric_thickness: Option<f64>,
    pub unraveled_length: Option<f64>,
    pub sewn_length: Option<f64>,
}

impl PuckerMeasurement {
    pub fn thickness_indicator(&self) -> Option<Result<f64, MetricsError>> {
        Some(sp_thickness(self.seam_thickness?, self.fabric_thickness?))
    }

    pub fn length_indicator(&self) -> Option<Result<f64, MetricsError>> {
        Some(sp_length(self.unraveled_length?, self.sewn_length?))
    }
}

/// Thickness growth of a two-ply seam over two plies of fabric, in percent.
pub fn sp_thickness(seam_thickness: f64, fabric_thickness: f64) -> Result<f64, MetricsError> {
    if fabric_thickness.is_nan() || fabric_thickness <= 0.0 {
        return Err(MetricsError::NonPositiveThickness(fabric_thickness));
    }
    let plies = 2.0 * fabric_thickness;
    Ok((seam_thickness - plies) / plies * 100.0)
}

/// Length lost by the sewn assembly relative to its own length, in percent.
pub fn sp_length(unraveled_length: f64, sewn_length: f64) -> Result<f64, MetricsError> {
    if sewn_length.is_nan() || sewn_length <= 0.0 {
        return Err(MetricsError::NonPositiveLength(sewn_length));
    }
    Ok((unraveled_length - sewn_length) / sewn_length * 100.0)
}
