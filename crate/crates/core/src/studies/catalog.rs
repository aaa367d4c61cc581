use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;

use crate::approxop::FunctionOracle;
use crate::error::{Error, Result};
use crate::multiindex::{box_indices, factorial};
use crate::polyblossom::Polynomial;

/// The named test functions used by the studies. All derivatives are closed form.
///
/// - `sin_prod`: ∏ sin(π xᵢ)
/// - `exp_sum`: exp(Σ xᵢ)
/// - `runge`: ∏ 1/(1 + 25 xᵢ²)
/// - `poly:k`: Σ_{|α| ≤ k} x^α / (1 + |α|)
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    SinProd { dim: usize },
    ExpSum { dim: usize },
    Runge { dim: usize },
    Poly { degree: usize, poly: Polynomial },
}

impl TestFunction {
    pub fn parse(id: &str, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        match id {
            "sin_prod" => Ok(TestFunction::SinProd { dim }),
            "exp_sum" => Ok(TestFunction::ExpSum { dim }),
            "runge" => Ok(TestFunction::Runge { dim }),
            _ => {
                let k = id
                    .strip_prefix("poly:")
                    .and_then(|s| usize::from_str(s).ok())
                    .ok_or_else(|| Error::Config(format!("unknown test function `{id}`")))?;
                Ok(TestFunction::Poly { degree: k, poly: total_degree_poly(dim, k)? })
            }
        }
    }

    pub fn id(&self) -> String {
        match self {
            TestFunction::SinProd { .. } => "sin_prod".into(),
            TestFunction::ExpSum { .. } => "exp_sum".into(),
            TestFunction::Runge { .. } => "runge".into(),
            TestFunction::Poly { degree, .. } => format!("poly:{degree}"),
        }
    }
}

fn total_degree_poly(dim: usize, k: usize) -> Result<Polynomial> {
    let terms = box_indices(&vec![k; dim])
        .into_iter()
        .filter(|a| a.order() <= k)
        .map(|a| {
            let c = 1.0 / (1.0 + a.order() as f64);
            (a, c)
        });
    Polynomial::from_terms(dim, terms)
}

/// k-th derivative of 1/(1 + 25x²) = Re (1 − 5ix)⁻¹.
fn runge_1d(k: usize, x: f64) -> f64 {
    let z = Complex64::new(1.0, -5.0 * x);
    let c = Complex64::new(0.0, 5.0).powu(k as u32) * factorial(k);
    (c * z.powi(-(k as i32) - 1)).re
}

impl FunctionOracle for TestFunction {
    fn dim(&self) -> usize {
        match self {
            TestFunction::SinProd { dim } | TestFunction::ExpSum { dim } | TestFunction::Runge { dim } => *dim,
            TestFunction::Poly { poly, .. } => poly.dim(),
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::SinProd { .. } => x.iter().map(|&xi| (PI * xi).sin()).product(),
            TestFunction::ExpSum { .. } => x.iter().sum::<f64>().exp(),
            TestFunction::Runge { .. } => x.iter().map(|&xi| 1.0 / (1.0 + 25.0 * xi * xi)).product(),
            TestFunction::Poly { poly, .. } => poly.eval(x),
        }
    }

    fn derivative(&self, alpha: &[usize], x: &[f64]) -> Result<f64> {
        let n = FunctionOracle::dim(self);
        if alpha.len() != n || x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: alpha.len().min(x.len()) });
        }
        Ok(match self {
            TestFunction::SinProd { .. } => alpha
                .iter()
                .zip(x)
                .map(|(&a, &xi)| PI.powi(a as i32) * (PI * xi + a as f64 * PI / 2.0).sin())
                .product(),
            TestFunction::ExpSum { .. } => self.eval(x),
            TestFunction::Runge { .. } => alpha.iter().zip(x).map(|(&a, &xi)| runge_1d(a, xi)).product(),
            TestFunction::Poly { poly, .. } => poly.derivative(alpha).eval(x),
        })
    }

    fn derivative_order(&self) -> usize {
        usize::MAX
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approxop::derivative_consistency;

    #[test]
    fn parse_ids() {
        assert_eq!(TestFunction::parse("sin_prod", 2).unwrap().id(), "sin_prod");
        assert_eq!(TestFunction::parse("poly:3", 2).unwrap().id(), "poly:3");
        assert!(TestFunction::parse("poly:x", 2).is_err());
        assert!(TestFunction::parse("cosh", 2).is_err());
    }

    #[test]
    fn closed_forms() {
        let s = TestFunction::parse("sin_prod", 2).unwrap();
        assert!((s.eval(&[0.5, 0.5]) - 1.0).abs() < 1e-15);
        assert!((s.derivative(&[2, 0], &[0.5, 0.5]).unwrap() + PI * PI).abs() < 1e-12);
        let r = TestFunction::parse("runge", 1).unwrap();
        assert!((r.derivative(&[1], &[0.2]).unwrap() - (-50.0 * 0.2 / 4.0)).abs() < 1e-12);
        assert!((r.derivative(&[2], &[0.0]).unwrap() + 50.0).abs() < 1e-12);
        let p = TestFunction::parse("poly:2", 2).unwrap();
        // 1 + (x + y)/2 + (x² + xy + y²)/3
        assert!((p.eval(&[1.0, 2.0]) - (1.0 + 1.5 + 7.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn derivatives_match_differences() {
        let pts = vec![vec![0.13, 0.71], vec![0.52, 0.33], vec![0.9, 0.05]];
        for id in ["sin_prod", "exp_sum", "runge", "poly:4"] {
            let f = TestFunction::parse(id, 2).unwrap();
            assert!(derivative_consistency(&f, &pts, 1e-5).unwrap() < 1e-4, "{id}");
        }
    }

    #[test]
    fn high_order_runge_by_recursion() {
        // f' (1 + 25x²) + 50x f = 0 differentiated k times gives a three-term recurrence.
        let x = 0.3;
        let d: Vec<f64> = (0..=12).map(|k| runge_1d(k, x)).collect();
        for k in 1..12 {
            let kf = k as f64;
            let lhs = d[k + 1] * (1.0 + 25.0 * x * x) + 50.0 * x * (kf + 1.0) * d[k] + 25.0 * kf * (kf + 1.0) * d[k - 1];
            assert!(lhs.abs() <= 1e-9 * d[k + 1].abs().max(1.0), "k = {k}");
        }
    }
}
