//! Regression and summary statistics shared by the experiment drivers.

use crate::error::{Error, Result};

/// Coefficient of determination `1 − SS_res / SS_tot`. Negative when the
/// predictions are worse than the mean of the truths.
pub fn r_squared(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::Dimension {
            expected: truths.len(),
            got: predictions.len(),
        });
    }
    if truths.len() < 2 {
        return Err(Error::UndefinedMetric("R² needs at least two samples".into()));
    }
    let mean = mean(truths);
    let ss_tot: f64 = truths.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::UndefinedMetric("truths have zero variance".into()));
    }
    let ss_res: f64 = predictions
        .iter()
        .zip(truths)
        .map(|(p, y)| (y - p).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Sum in a fixed pairwise order, independent of how the caller produced
/// the values.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    // constant inputs give their value back exactly, so their spread is exactly 0
    if values.iter().all(|v| *v == values[0]) {
        return values[0];
    }
    pairwise_sum(values) / values.len() as f64
}

/// Sample standard deviation with the (n − 1) normalisation; 0 for a single
/// value.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let squares: Vec<f64> = values.iter().map(|v| (v - m).powi(2)).collect();
    (pairwise_sum(&squares) / (values.len() - 1) as f64).sqrt()
}

/// Population variance.
pub fn variance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let m = mean(values);
    let squares: Vec<f64> = values.iter().map(|v| (v - m).powi(2)).collect();
    pairwise_sum(&squares) / values.len() as f64
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (ma, mb) = (mean(a), mean(b));
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::UndefinedMetric("correlation of a constant series".into()));
    }
    Ok(cov / (va * vb).sqrt())
}

/// Percentage error `|est − ref| / |ref| · 100`.
pub fn error_percent(estimate: f64, reference: f64) -> f64 {
    (estimate - reference).abs() / reference.abs() * 100.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_squared_examples() {
        let y = [1.0, 2.0, 4.0, 7.0];
        assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
        let m = mean(&y);
        assert!(r_squared(&[m; 4], &y).unwrap().abs() < 1e-15);
        assert!(r_squared(&[10.0, -3.0, 0.0, 1.0], &y).unwrap() < 0.0);
        assert!(matches!(r_squared(&[1.0, 1.0], &[2.0, 2.0]), Err(Error::UndefinedMetric(_))));
        assert!(r_squared(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn reported_table_values_parse() {
        // R² figures as they appear in the comparison table.
        let parsed: Vec<f64> = ["0.977", "-22291.787"].iter().map(|s| s.parse().unwrap()).collect();
        assert!(parsed[0] > parsed[1]);
    }

    #[test]
    fn std_conventions() {
        assert_eq!(std_dev(&[3.0]), 0.0);
        assert!((std_dev(&[1.0, 3.0]) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(std_dev(&[2.5; 10]), 0.0);
    }

    #[test]
    fn pearson_signs() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&a, &[2.0, 4.0, 6.0, 8.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&a, &[-1.0, -2.0, -3.0, -4.0]).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn error_percent_of_identical_values_is_zero() {
        assert_eq!(error_percent(12.6592, 12.6592), 0.0);
    }
}
