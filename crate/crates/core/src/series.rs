//! Log-domain summation of positive power series with a certified geometric tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stopping rule for series evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    /// Largest number of terms summed before giving up.
    pub max_terms: usize,
    /// Accepted bound on `tail / partial_sum`.
    pub reltol: f64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            max_terms: 100_000,
            reltol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LnSum {
    /// Log of the partial sum.
    pub ln_value: f64,
    /// Log of the certified bound on the omitted tail.
    pub ln_tail: f64,
    pub terms: usize,
}

/// Sums `Σ_{k≥0} t_k` given `ln t_k` and a bound `ρ_k ≥ t_{j+1}/t_j` valid for
/// every `j ≥ k` (supplied as `ln ρ_k`).
///
/// Stops at the first `k` with `ρ_k ≤ ½` and `2 ρ_k t_k ≤ reltol · S_k`; the
/// omitted tail is then at most `t_k ρ_k / (1 − ρ_k) ≤ 2 ρ_k t_k`.
/// `argument` only labels the error.
pub fn ln_sum_certified(
    mut ln_term: impl FnMut(usize) -> f64,
    mut ln_ratio_bound: impl FnMut(usize) -> f64,
    control: &SeriesControl,
    argument: f64,
) -> Result<LnSum> {
    let ln_tol = control.reltol.ln();
    let ln_half = -std::f64::consts::LN_2;
    let mut acc = LogAccumulator::default();
    for k in 0..control.max_terms {
        let lt = ln_term(k);
        acc.add(lt);
        let lr = ln_ratio_bound(k);
        if lr == f64::NEG_INFINITY {
            return Ok(LnSum {
                ln_value: acc.value(),
                ln_tail: f64::NEG_INFINITY,
                terms: k + 1,
            });
        }
        if lr <= ln_half {
            let ln_tail = std::f64::consts::LN_2 + lr + lt;
            if ln_tail <= ln_tol + acc.value() {
                return Ok(LnSum {
                    ln_value: acc.value(),
                    ln_tail,
                    terms: k + 1,
                });
            }
        }
    }
    Err(Error::TailNotConverged {
        terms: control.max_terms,
        argument,
    })
}

/// Running `ln Σ exp(x_i)` that never overflows.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogAccumulator {
    max: f64,
    scaled: f64,
}

impl Default for LogAccumulator {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }
}

impl LogAccumulator {
    pub(crate) fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.scaled += (x - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub(crate) fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}
