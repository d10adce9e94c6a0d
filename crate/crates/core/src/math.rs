//! Log-domain helpers.

/// `log(sum(exp(x)))` with max-shifting. Empty input or all `-inf` gives `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// `log(1 + exp(x))`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Accumulates `x` into an optional log-domain cell; `None` is an empty sum.
pub(crate) fn log_add(acc: Option<f64>, x: f64) -> Option<f64> {
    match acc {
        None => Some(x),
        Some(a) => {
            let (hi, lo) = if a >= x { (a, x) } else { (x, a) };
            Some(hi + (lo - hi).exp().ln_1p())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_is_stable() {
        let x = log_sum_exp(&[1234.0, 1232.0]);
        assert!((x - 1_234.126_928_011_043).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0, 0.0]) - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn softplus_and_sigmoid() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn log_add_matches_direct_sum() {
        let cell = [0.3f64, -1.2, 2.0]
            .iter()
            .fold(None, |acc, &x| log_add(acc, x))
            .unwrap();
        assert!((cell - log_sum_exp(&[0.3, -1.2, 2.0])).abs() < 1e-14);
    }
}
