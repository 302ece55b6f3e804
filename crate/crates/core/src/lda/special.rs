use statrs::function::gamma;

/// Inputs to digamma and log-gamma are clamped here to keep degenerate
/// parameters finite.
pub const MIN_ARG: f64 = 1e-12;

pub fn digamma(x: f64) -> f64 {
    gamma::digamma(x.max(MIN_ARG))
}

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x.max(MIN_ARG))
}

/// `E[log x_i]` for `x ~ Dirichlet(params)`.
pub fn dirichlet_expectation(params: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let total = digamma(params.iter().sum());
    params.iter().map(move |&p| digamma(p) - total)
}

/// `log Σ exp(x_i)` without overflow.
pub fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}
