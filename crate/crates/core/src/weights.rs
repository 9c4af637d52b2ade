//! MIDAS lag polynomials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lag-weighting scheme of a MIDAS filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightScheme {
    /// Beta lag polynomial. With `restricted` set, `omega1` is held at 1 and
    /// only `omega2` is estimated.
    Beta {
        omega1: f64,
        omega2: f64,
        restricted: bool,
    },
    /// Normalised geometric decay `ω^k`.
    ExpWeighted { omega: f64 },
}

impl WeightScheme {
    /// Restricted beta scheme (`ω₁ = 1`).
    pub fn restricted_beta(omega2: f64) -> Self {
        WeightScheme::Beta {
            omega1: 1.0,
            omega2,
            restricted: true,
        }
    }

    pub fn beta(omega1: f64, omega2: f64) -> Self {
        WeightScheme::Beta {
            omega1,
            omega2,
            restricted: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightScheme::Beta {
                omega1,
                omega2,
                restricted,
            } => {
                if !(omega1 >= 1.0 && omega1.is_finite()) || !(omega2 >= 1.0 && omega2.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "beta weights need omega1, omega2 >= 1 (got {omega1}, {omega2})"
                    )));
                }
                if restricted && omega1 != 1.0 {
                    return Err(Error::InvalidParameter(
                        "restricted beta scheme requires omega1 = 1".into(),
                    ));
                }
                Ok(())
            }
            WeightScheme::ExpWeighted { omega } => {
                if omega > 0.0 && omega < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "exponential weights need 0 < omega < 1 (got {omega})"
                    )))
                }
            }
        }
    }

    /// The `K` lag weights, most recent lag first.
    pub fn weights(&self, lags: usize) -> Result<Vec<f64>> {
        if lags < 1 {
            return Err(Error::InvalidParameter("lag count K must be >= 1".into()));
        }
        self.validate()?;
        let mut w = Vec::with_capacity(lags);
        self.weights_into(lags, &mut w);
        Ok(w)
    }

    /// Unchecked variant for hot loops; parameters must already be valid.
    pub(crate) fn weights_into(&self, lags: usize, out: &mut Vec<f64>) {
        out.clear();
        // log-space keeps large ω₂ (e.g. 140) or small ω from underflowing
        // before normalisation
        let log_weight = |k: usize| match *self {
            WeightScheme::Beta { omega1, omega2, .. } => {
                let x = k as f64 / (lags + 1) as f64;
                (omega1 - 1.0) * x.ln() + (omega2 - 1.0) * (1.0 - x).ln()
            }
            WeightScheme::ExpWeighted { omega } => k as f64 * omega.ln(),
        };
        out.extend((1..=lags).map(log_weight));
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for v in out.iter_mut() {
            // floor keeps far lags strictly positive
            *v = (*v - max).max(-700.0).exp();
        }
        let total: f64 = out.iter().sum();
        for v in out.iter_mut() {
            *v /= total;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flat_beta() {
        let w = WeightScheme::beta(1.0, 1.0).weights(5).unwrap();
        for v in w {
            assert!((v - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn exp_half() {
        let w = WeightScheme::ExpWeighted { omega: 0.5 }.weights(3).unwrap();
        let expected = [4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn restricted_beta_matches_direct_formula() {
        // direct evaluation of (1 - k/(K+1))^(ω₂-1) normalised
        let k_max = 12;
        let omega2 = 3.0;
        let raw: Vec<f64> = (1..=k_max)
            .map(|k| (1.0 - k as f64 / 13.0).powf(omega2 - 1.0))
            .collect();
        let s: f64 = raw.iter().sum();
        let w = WeightScheme::restricted_beta(omega2).weights(k_max).unwrap();
        for (a, b) in w.iter().zip(raw.iter().map(|r| r / s)) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(w.windows(2).all(|p| p[0] > p[1]));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(WeightScheme::beta(0.5, 2.0).weights(3).is_err());
        assert!(WeightScheme::beta(1.0, 0.9).weights(3).is_err());
        assert!(WeightScheme::ExpWeighted { omega: 1.0 }.weights(3).is_err());
        assert!(WeightScheme::ExpWeighted { omega: 0.0 }.weights(3).is_err());
        assert!(WeightScheme::beta(1.0, 1.0).weights(0).is_err());
        let bad = WeightScheme::Beta {
            omega1: 2.0,
            omega2: 2.0,
            restricted: true,
        };
        assert!(bad.weights(3).is_err());
    }

    #[test]
    fn extreme_parameters_stay_positive() {
        for s in [
            WeightScheme::restricted_beta(500.0),
            WeightScheme::ExpWeighted { omega: 0.01 },
        ] {
            let w = s.weights(250).unwrap();
            assert!(w.iter().all(|v| v.is_finite() && *v > 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    fn scheme() -> impl Strategy<Value = WeightScheme> {
        prop_oneof![
            (1.0f64..20.0, 1.0f64..60.0).prop_map(|(a, b)| WeightScheme::beta(a, b)),
            (1.0f64..60.0).prop_map(WeightScheme::restricted_beta),
            (0.01f64..0.99).prop_map(|omega| WeightScheme::ExpWeighted { omega }),
        ]
    }

    proptest! {
        #[test]
        fn normalised_and_positive(s in scheme(), k in 1usize..=250) {
            let w = s.weights(k).unwrap();
            prop_assert_eq!(w.len(), k);
            prop_assert!(w.iter().all(|v| *v > 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn restricted_decays(omega2 in 1.001f64..50.0, k in 2usize..=250) {
            let w = WeightScheme::restricted_beta(omega2).weights(k).unwrap();
            prop_assert!(w.windows(2).all(|p| p[0] > p[1]));
        }

        #[test]
        fn continuous_in_omega2(omega2 in 1.0f64..50.0, k in 1usize..=250) {
            let a = WeightScheme::restricted_beta(omega2).weights(k).unwrap();
            let b = WeightScheme::restricted_beta(omega2 + 1e-6).weights(k).unwrap();
            let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            prop_assert!(diff < 1e-5);
        }
    }
}
