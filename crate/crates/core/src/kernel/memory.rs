use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::{SampledFunction, TimeGrid};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::transform::{Poly, Rational};

/// One term `c e^{-b t}` of an exponential-sum kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub c: f64,
    pub b: f64,
}

/// Memory kernel `M(t)` of the heat equation with memory.
///
/// Every family is smooth on `[0, ∞)` with an analytic derivative and a
/// rational Laplace transform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MemoryKernel {
    Zero,
    Constant { c: f64 },
    ExpSum { terms: Vec<ExpTerm> },
    /// `Σ coeffs[k] t^k`.
    Polynomial { coeffs: Vec<f64> },
}

impl MemoryKernel {
    pub fn exponential(c: f64, b: f64) -> Self {
        MemoryKernel::ExpSum {
            terms: vec![ExpTerm { c, b }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match self {
            MemoryKernel::Zero => true,
            MemoryKernel::Constant { c } => c.is_finite(),
            MemoryKernel::ExpSum { terms } => terms.iter().all(|t| t.c.is_finite() && t.b.is_finite()),
            MemoryKernel::Polynomial { coeffs } => coeffs.iter().all(|c| c.is_finite()),
        };
        if finite {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "memory kernel parameters must be finite".into(),
            ))
        }
    }

    /// True when the kernel vanishes identically.
    pub fn is_zero(&self) -> bool {
        match self {
            MemoryKernel::Zero => true,
            MemoryKernel::Constant { c } => *c == 0.0,
            MemoryKernel::ExpSum { terms } => terms.iter().all(|t| t.c == 0.0),
            MemoryKernel::Polynomial { coeffs } => coeffs.iter().all(|&c| c == 0.0),
        }
    }

    pub fn eval<T: Real>(&self, t: &T) -> T {
        match self {
            MemoryKernel::Zero => T::zero(),
            MemoryKernel::Constant { c } => T::of(*c),
            MemoryKernel::ExpSum { terms } => terms.iter().fold(T::zero(), |acc, term| {
                acc + T::of(term.c) * (-(T::of(term.b) * t.clone())).exp()
            }),
            MemoryKernel::Polynomial { coeffs } => horner(coeffs.iter().map(|&c| T::of(c)), t),
        }
    }

    pub fn derivative<T: Real>(&self, t: &T) -> T {
        match self {
            MemoryKernel::Zero | MemoryKernel::Constant { .. } => T::zero(),
            MemoryKernel::ExpSum { terms } => terms.iter().fold(T::zero(), |acc, term| {
                acc - T::of(term.c * term.b) * (-(T::of(term.b) * t.clone())).exp()
            }),
            MemoryKernel::Polynomial { coeffs } => horner(
                coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, &c)| T::of(c) * T::of_usize(k)),
                t,
            ),
        }
    }

    /// `a = M(0)`.
    pub fn at_zero<T: Real>(&self) -> T {
        self.eval(&T::zero())
    }

    pub fn sample<T: Real>(&self, grid: &Arc<TimeGrid<T>>) -> SampledFunction<T> {
        SampledFunction::from_parts(grid.clone(), grid.times().map(|t| self.eval(&t)).collect())
    }

    pub fn sample_derivative<T: Real>(&self, grid: &Arc<TimeGrid<T>>) -> SampledFunction<T> {
        SampledFunction::from_parts(
            grid.clone(),
            grid.times().map(|t| self.derivative(&t)).collect(),
        )
    }

    /// Laplace transform `M̂(s) = N(s)/D(s)` with a monic denominator.
    pub fn transfer<T: Real>(&self) -> Rational<T> {
        match self {
            MemoryKernel::Zero => Rational::new(Poly::zero(), Poly::one()),
            MemoryKernel::Constant { c } => {
                Rational::new(Poly::constant(T::of(*c)), Poly::new(vec![T::zero(), T::one()]))
            }
            MemoryKernel::ExpSum { terms } => {
                // merge equal rates and drop vanishing terms so the denominator stays minimal
                let mut merged: Vec<ExpTerm> = Vec::new();
                for term in terms.iter().filter(|t| t.c != 0.0) {
                    match merged.iter_mut().find(|m| m.b == term.b) {
                        Some(m) => m.c += term.c,
                        None => merged.push(*term),
                    }
                }
                merged.retain(|t| t.c != 0.0);
                let factors: Vec<Poly<T>> = merged
                    .iter()
                    .map(|t| Poly::new(vec![T::of(t.b), T::one()]))
                    .collect();
                let den = factors.iter().fold(Poly::one(), |acc, f| acc.mul(f));
                let mut num = Poly::zero();
                for (i, term) in merged.iter().enumerate() {
                    let others = factors
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .fold(Poly::one(), |acc, (_, f)| acc.mul(f));
                    num = num.add(&others.scale(&T::of(term.c)));
                }
                Rational::new(num, den)
            }
            MemoryKernel::Polynomial { coeffs } => {
                let p = coeffs.iter().rposition(|&c| c != 0.0);
                let Some(p) = p else {
                    return Rational::new(Poly::zero(), Poly::one());
                };
                // Σ c_k k!/s^{k+1} = (Σ c_k k! s^{p-k}) / s^{p+1}
                let mut num = vec![T::zero(); p + 1];
                let mut fact = T::one();
                for (k, &c) in coeffs.iter().enumerate().take(p + 1) {
                    if k > 0 {
                        fact *= T::of_usize(k);
                    }
                    num[p - k] = T::of(c) * fact.clone();
                }
                let mut den = vec![T::zero(); p + 2];
                den[p + 1] = T::one();
                Rational::new(Poly::new(num), Poly::new(den))
            }
        }
    }
}

fn horner<T: Real>(coeffs: impl DoubleEndedIterator<Item = T>, t: &T) -> T {
    coeffs.rev().fold(T::zero(), |acc, c| acc * t.clone() + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_and_derivatives() {
        let k = MemoryKernel::ExpSum {
            terms: vec![ExpTerm { c: 2.0, b: 1.0 }, ExpTerm { c: -1.0, b: 3.0 }],
        };
        let t = 0.7f64;
        let m = 2.0 * (-t).exp() - (-3.0 * t).exp();
        let dm = -2.0 * (-t).exp() + 3.0 * (-3.0 * t).exp();
        assert!((k.eval(&t) - m).abs() < 1e-15);
        assert!((k.derivative(&t) - dm).abs() < 1e-15);
        assert_eq!(k.at_zero::<f64>(), 1.0);

        let p = MemoryKernel::Polynomial {
            coeffs: vec![1.0, -2.0, 0.5],
        };
        assert!((p.eval(&2.0f64) - (1.0 - 4.0 + 2.0)).abs() < 1e-15);
        assert!((p.derivative(&2.0f64) - (-2.0 + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn transfer_functions() {
        // 1/(s+b) for a single exponential
        let r = MemoryKernel::exponential(3.0, 2.0).transfer::<f64>();
        assert_eq!(r.num().coeffs(), &[3.0]);
        assert_eq!(r.den().coeffs(), &[2.0, 1.0]);
        // 1 - t + t^2 -> 1/s - 1/s^2 + 2/s^3 = (s^2 - s + 2)/s^3
        let p = MemoryKernel::Polynomial {
            coeffs: vec![1.0, -1.0, 1.0],
        }
        .transfer::<f64>();
        assert_eq!(p.num().coeffs(), &[2.0, -1.0, 1.0]);
        assert_eq!(p.den().coeffs(), &[0.0, 0.0, 0.0, 1.0]);
        let z = MemoryKernel::Zero.transfer::<f64>();
        assert!(z.num().is_zero());
    }

    #[test]
    fn duplicate_rates_merge() {
        let k = MemoryKernel::ExpSum {
            terms: vec![ExpTerm { c: 1.0, b: 1.0 }, ExpTerm { c: 1.0, b: 1.0 }],
        };
        let r = k.transfer::<f64>();
        assert_eq!(r.den().degree(), Some(1));
        assert_eq!(r.num().coeffs(), &[2.0]);
    }

    #[test]
    fn serde_tagged_records() {
        let k: MemoryKernel =
            serde_json::from_str(r#"{"type":"exp_sum","terms":[{"c":1.0,"b":1.0}]}"#).unwrap();
        assert_eq!(k, MemoryKernel::exponential(1.0, 1.0));
        let z: MemoryKernel = serde_json::from_str(r#"{"type":"zero"}"#).unwrap();
        assert!(z.is_zero());
    }
}
