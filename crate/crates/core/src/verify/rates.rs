use super::VerifyError;

/// Placeholder printed for a rate that is not claimed.
pub const NO_RATE: &str = "---";

/// `rate_i = log2(e_i / e_{i+1})` for successive halvings. A rate is `None`
/// when either error lies below `noise_floor`.
pub fn fit_rates(errors: &[f64], noise_floor: f64) -> Result<Vec<Option<f64>>, VerifyError> {
    for (index, &e) in errors.iter().enumerate() {
        if !(e > 0.0) || !e.is_finite() {
            return Err(VerifyError::NonPositiveError { index, value: e });
        }
    }
    Ok(errors
        .windows(2)
        .map(|w| if w[0] < noise_floor || w[1] < noise_floor { None } else { Some((w[0] / w[1]).log2()) })
        .collect())
}

/// Rate formatted for tables: four decimals or [`NO_RATE`].
pub fn format_rate(rate: Option<f64>) -> String {
    match rate {
        Some(r) => format!("{r:.4}"),
        None => NO_RATE.to_string(),
    }
}
