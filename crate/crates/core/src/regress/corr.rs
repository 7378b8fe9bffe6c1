use statrs::distribution::{ContinuousCDF, StudentsT};

use super::RegressError;

fn check_pair(a: &[f64], b: &[f64]) -> Result<(), RegressError> {
    if a.len() != b.len() {
        return Err(RegressError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(RegressError::TooFewSamples {
            needed: 2,
            got: a.len(),
        });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(RegressError::NonFinite);
    }
    Ok(())
}

/// Product-moment correlation. A constant input is an error.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, RegressError> {
    check_pair(a, b)?;
    let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if constant(a) || constant(b) {
        return Err(RegressError::ConstantInput);
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(RegressError::ConstantInput);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn ranks(a: &[f64]) -> Result<Vec<f64>, RegressError> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(RegressError::NonFinite);
    }
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| a[i].total_cmp(&a[j]));
    let mut out = vec![0.0; a.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && a[order[end]] == a[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end share their mean
        let mid = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            out[i] = mid;
        }
        start = end;
    }
    Ok(out)
}

/// Pearson correlation of mid-ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64, RegressError> {
    check_pair(a, b)?;
    pearson(&ranks(a)?, &ranks(b)?)
}

/// Two-sided p-value of a correlation of `n` pairs under the t approximation.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    if n < 3 || !r.is_finite() {
        return f64::NAN;
    }
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r.abs() * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * (1.0 - dist.cdf(t))).clamp(0.0, 1.0)
}

/// Pairwise Pearson matrix; undefined entries are NaN.
pub fn pearson_matrix(columns: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = columns.len();
    let mut m = vec![vec![f64::NAN; k]; k];
    for i in 0..k {
        for j in i..k {
            let r = pearson(&columns[i], &columns[j]).unwrap_or(f64::NAN);
            m[i][j] = r;
            m[j][i] = r;
        }
    }
    m
}
