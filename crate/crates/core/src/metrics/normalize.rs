use super::DomainError;
use crate::domain::{NormalizationMethod, NormalizationSpec};

/// Maps a raw non-negative value into [0, 1].
pub fn normalize_metric(value: f64, spec: &NormalizationSpec) -> Result<f64, DomainError> {
    if !value.is_finite() {
        return Err(DomainError::NonFinite);
    }
    if value < 0.0 {
        return Err(DomainError::Negative(value));
    }
    if !(spec.cap.is_finite() && spec.cap > 0.0) {
        return Err(DomainError::BadCap);
    }
    match spec.method {
        NormalizationMethod::SaturatingLog => Ok((value.ln_1p() / spec.cap.ln_1p()).min(1.0)),
        NormalizationMethod::LinearClamp => Ok((value / spec.cap).min(1.0)),
        NormalizationMethod::Identity => {
            if value > 1.0 {
                Err(DomainError::OutsideUnitInterval(value))
            } else {
                Ok(value)
            }
        }
    }
}
