use crate::error::{Error, Result};

/// Ordinary least-squares line `y = a + b x`; returns `(a, b, rss)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Argument(format!(
            "fit needs equal lengths >= 2, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("fit abscissae are all equal".into()));
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    Ok((a, b, rss))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if let Some(bad) = xs.iter().chain(ys).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!("log-log fit needs positive finite values, got {bad}")));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    Ok(linear_fit(&lx, &ly)?.1)
}

/// `n` points logarithmically spaced over `[lo, hi]`, endpoints included.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_laws() {
        let xs = logspace(1e-8, 1e-4, 9);
        let s = fit_loglog_slope(&xs, &xs).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        let q: Vec<f64> = xs.iter().map(|x| x.powf(0.25)).collect();
        assert!((fit_loglog_slope(&xs, &q).unwrap() - 0.25).abs() < 1e-12);
        let h: Vec<f64> = xs.iter().map(|x| 3.0 * x.sqrt()).collect();
        assert!((fit_loglog_slope(&xs, &h).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(matches!(fit_loglog_slope(&[1.0, 0.0], &[1.0, 2.0]), Err(Error::Domain(_))));
        assert!(matches!(fit_loglog_slope(&[1.0, 2.0], &[-1.0, 2.0]), Err(Error::Domain(_))));
        assert!(matches!(fit_loglog_slope(&[1.0], &[1.0]), Err(Error::Argument(_))));
    }

    #[test]
    fn logspace_endpoints() {
        let v = logspace(1e-8, 1e-4, 9);
        assert_eq!(v.len(), 9);
        assert!((v[0] - 1e-8).abs() < 1e-22 && (v[8] - 1e-4).abs() < 1e-18);
        assert!((v[4] - 1e-6).abs() < 1e-20);
    }
}
