//! Chain diagnostics: effective sample size and Monte Carlo standard errors.

/// Effective sample size of a scalar chain via Geyer's initial positive
/// sequence estimator: `n / (1 + 2 * sum of paired autocorrelations)`,
/// truncated at the first non-positive pair sum.
pub fn ess(chain: &[f64]) -> f64 {
    let n = chain.len();
    if n < 4 {
        return n as f64;
    }
    let mean = chain.iter().sum::<f64>() / n as f64;
    let var: f64 = chain.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return n as f64;
    }
    let autocorr = |lag: usize| -> f64 {
        let mut acc = 0.0;
        for t in 0..n - lag {
            acc += (chain[t] - mean) * (chain[t + lag] - mean);
        }
        acc / (n as f64 * var)
    };

    let mut sum_rho = 0.0;
    let mut lag = 1;
    while lag + 1 < n {
        let pair = autocorr(lag) + autocorr(lag + 1);
        if pair <= 0.0 {
            break;
        }
        sum_rho += pair;
        lag += 2;
    }
    (n as f64 / (1.0 + 2.0 * sum_rho)).min(n as f64)
}

/// Monte Carlo standard error of the chain mean by non-overlapping batch
/// means.
pub fn mcse_batch(chain: &[f64], n_batches: usize) -> f64 {
    let n = chain.len();
    assert!(n_batches >= 2 && n >= n_batches, "need at least 2 batches");
    let batch_len = n / n_batches;
    let means: Vec<f64> = (0..n_batches)
        .map(|b| {
            let slice = &chain[b * batch_len..(b + 1) * batch_len];
            slice.iter().sum::<f64>() / batch_len as f64
        })
        .collect();
    let grand = means.iter().sum::<f64>() / n_batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (n_batches as f64 - 1.0);
    (var / n_batches as f64).sqrt()
}
