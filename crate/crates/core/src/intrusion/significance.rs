//! One-sided tests of `H₁: DR_b > DR_a` with per-topic correctness treated
//! as independent Bernoulli outcomes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::factorial::ln_binomial;

use super::score::DetectionReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestMethod {
    /// Permutation test over reassignments of the pooled indicators,
    /// counted exactly through the hypergeometric distribution.
    #[default]
    ExactPermutation,
    /// Two-proportion z-test with a pooled variance estimate.
    NormalApprox,
}

impl fmt::Display for TestMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestMethod::ExactPermutation => "exact-permutation",
            TestMethod::NormalApprox => "normal-approx",
        })
    }
}

impl FromStr for TestMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-permutation" => Ok(TestMethod::ExactPermutation),
            "normal-approx" => Ok(TestMethod::NormalApprox),
            _ => Err(Error::InvalidArgument(format!("unknown test method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Alternative hypothesis `DR_b > DR_a`.
    BGreater,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceTestResult {
    pub label_a: String,
    pub label_b: String,
    pub dr_a: f64,
    pub dr_b: f64,
    pub p_value: f64,
    pub method: TestMethod,
    pub direction: Direction,
}

pub fn dr_difference_test(
    a: &DetectionReport,
    b: &DetectionReport,
    method: TestMethod,
) -> Result<DifferenceTestResult> {
    if a.num_topics() == 0 || b.num_topics() == 0 {
        return Err(Error::InvalidArgument("cannot test an empty report".into()));
    }
    let (na, sa) = (a.num_topics() as u64, a.num_correct() as u64);
    let (nb, sb) = (b.num_topics() as u64, b.num_correct() as u64);
    let p_value = match method {
        TestMethod::ExactPermutation => exact_permutation_p(na, sa, nb, sb),
        TestMethod::NormalApprox => normal_approx_p(na, sa, nb, sb),
    };
    Ok(DifferenceTestResult {
        label_a: a.model_label.clone(),
        label_b: b.model_label.clone(),
        dr_a: a.detection_rate,
        dr_b: b.detection_rate,
        p_value,
        method,
        direction: Direction::BGreater,
    })
}

/// Fraction of the `C(na+nb, nb)` reassignments of the pooled outcomes
/// whose `DR_b - DR_a` is at least the observed one. With fixed totals the
/// difference increases with the successes landing in `b`, so this is the
/// upper tail of a hypergeometric distribution.
pub fn exact_permutation_p(na: u64, sa: u64, nb: u64, sb: u64) -> f64 {
    let n = na + nb;
    let s = sa + sb;
    let hi = s.min(nb);
    let lo = sb.max(s.saturating_sub(na));
    if lo > hi {
        return 0.0;
    }
    let exact = || -> Option<f64> {
        let total = binomial(n, nb)?;
        let mut tail: u128 = 0;
        for x in lo..=hi {
            tail = tail.checked_add(binomial(s, x)?.checked_mul(binomial(n - s, nb - x)?)?)?;
        }
        Some(tail as f64 / total as f64)
    };
    exact().unwrap_or_else(|| {
        let log_total = ln_binomial(n, nb);
        (lo..=hi)
            .map(|x| (ln_binomial(s, x) + ln_binomial(n - s, nb - x) - log_total).exp())
            .sum::<f64>()
            .min(1.0)
    })
}

/// `1 - Φ(z)` for the pooled two-proportion statistic. Equal proportions
/// give exactly one half.
pub fn normal_approx_p(na: u64, sa: u64, nb: u64, sb: u64) -> f64 {
    let (na_f, nb_f) = (na as f64, nb as f64);
    let diff = sb as f64 / nb_f - sa as f64 / na_f;
    let pooled = (sa + sb) as f64 / (na_f + nb_f);
    let se = (pooled * (1.0 - pooled) * (1.0 / na_f + 1.0 / nb_f)).sqrt();
    let z = if se > 0.0 { diff / se } else { 0.0 };
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.checked_mul((n - i) as u128)? / (i + 1) as u128;
    }
    Some(c)
}
