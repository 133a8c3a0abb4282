//! Exact route through the Laplace domain.
//!
//! All kernel families have rational transforms, so the resolvent, the modal
//! free response and the moment profiles are rational functions of `s` whose
//! inverse transforms are finite exponential sums. Computing those sums at
//! extended precision gives Gram matrices that are exact up to the working
//! precision, independent of any time-stepping.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::kernel::{MemoryKernel, SampledFunction, TimeGrid};
use crate::scalar::{cabs, cexp, Real};
use std::sync::Arc;

/// Real polynomial, coefficients in ascending powers.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<T> {
    coeffs: Vec<T>,
}

impl<T: Real> Poly<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(T::one())
    }

    pub fn constant(c: T) -> Self {
        Poly::new(vec![c])
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let c = (0..n)
            .map(|i| {
                let a = self.coeffs.get(i).cloned().unwrap_or_else(T::zero);
                let b = other.coeffs.get(i).cloned().unwrap_or_else(T::zero);
                a + b
            })
            .collect();
        Poly::new(c)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![T::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] += a.clone() * b.clone();
            }
        }
        Poly::new(c)
    }

    pub fn scale(&self, k: &T) -> Self {
        Poly::new(self.coeffs.iter().map(|c| c.clone() * k.clone()).collect())
    }

    /// Multiplication by `s`.
    pub fn shift(&self) -> Self {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut c = Vec::with_capacity(self.coeffs.len() + 1);
        c.push(T::zero());
        c.extend(self.coeffs.iter().cloned());
        Poly::new(c)
    }

    pub fn derivative(&self) -> Self {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c.clone() * T::of_usize(k))
                .collect(),
        )
    }

    pub fn eval(&self, x: &T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn eval_complex(&self, z: &Complex<T>) -> Complex<T> {
        self.coeffs.iter().rev().fold(Complex::zero(), |acc, c| {
            acc * z.clone() + Complex::new(c.clone(), T::zero())
        })
    }

    fn to_f64(&self) -> Poly<f64> {
        Poly::new(self.coeffs.iter().map(Real::to_f64_lossy).collect())
    }
}

/// Ratio of two polynomials.
#[derive(Clone, Debug, PartialEq)]
pub struct Rational<T> {
    num: Poly<T>,
    den: Poly<T>,
}

impl<T: Real> Rational<T> {
    pub fn new(num: Poly<T>, den: Poly<T>) -> Self {
        assert!(!den.is_zero(), "rational function with zero denominator");
        Rational { num, den }
    }

    pub fn num(&self) -> &Poly<T> {
        &self.num
    }

    pub fn den(&self) -> &Poly<T> {
        &self.den
    }

    /// Inverse Laplace transform of a strictly proper rational function with
    /// simple poles: `Σ_j N(r_j)/D'(r_j) e^{r_j t}`.
    pub fn inverse_laplace(&self) -> Result<ExpSum<T>> {
        if self.num.is_zero() {
            return Ok(ExpSum::zero());
        }
        let (dn, dd) = (self.num.degree().unwrap_or(0), self.den.degree().unwrap_or(0));
        if dn >= dd {
            return Err(Error::InvalidArgument(format!(
                "inverse transform needs a strictly proper function (deg N = {dn}, deg D = {dd})"
            )));
        }
        let poles = poly_roots(&self.den)?;
        let dprime = self.den.derivative();
        let terms = poles
            .into_iter()
            .map(|r| {
                let coef = self.num.eval_complex(&r) / dprime.eval_complex(&r);
                Exponential { coef, rate: r }
            })
            .collect();
        Ok(ExpSum { terms })
    }
}

/// Roots of a real polynomial by the Aberth–Ehrlich iteration.
///
/// Starting points come from an `f64` run; the same iteration then polishes
/// them at the precision of `T`. Fails on (numerically) repeated roots.
pub fn poly_roots<T: Real>(p: &Poly<T>) -> Result<Vec<Complex<T>>> {
    let Some(deg) = p.degree() else {
        return Err(Error::InvalidArgument("roots of the zero polynomial".into()));
    };
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = p.coeffs[deg].clone();
    let monic = p.scale(&(T::one() / lead));
    if deg == 1 {
        return Ok(vec![Complex::new(-monic.coeffs[0].clone(), T::zero())]);
    }

    let pf = monic.to_f64();
    let start = circle_start(&pf);
    let rough = aberth(&pf, start, 4.0 * f64::EPSILON, 800)?;
    let init: Vec<Complex<T>> = rough
        .iter()
        .map(|z| Complex::new(T::of(z.re), T::of(z.im)))
        .collect();
    let tol = T::epsilon() * T::of(16.0);
    let mut roots = aberth(&monic, init, tol.clone(), 200)?;

    // real polynomial: snap nearly-real roots onto the axis
    let scale = roots
        .iter()
        .fold(T::one(), |m, z| T::max_of(m, cabs(z)));
    let snap = tol * T::of(1e3) * scale.clone();
    for z in roots.iter_mut() {
        if z.im.abs() <= snap {
            z.im = T::zero();
        }
    }
    let sep = T::epsilon().sqrt() * scale;
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            if cabs(&(roots[i].clone() - roots[j].clone())) <= sep {
                return Err(Error::RepeatedPole {
                    pole: format!("{:.6e}", roots[i].re.to_f64_lossy()),
                });
            }
        }
    }
    roots.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(roots)
}

fn circle_start(p: &Poly<f64>) -> Vec<Complex<f64>> {
    let deg = p.degree().unwrap_or(0);
    // Fujiwara bound on the root moduli
    let radius = (1..=deg)
        .map(|k| (p.coeffs[deg - k].abs()).powf(1.0 / k as f64))
        .fold(0.0f64, f64::max)
        * 2.0;
    let radius = radius.max(1e-3);
    (0..deg)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / deg as f64 + 0.4;
            Complex::new(radius * theta.cos(), radius * theta.sin())
        })
        .collect()
}

fn aberth<T: Real>(
    p: &Poly<T>,
    mut z: Vec<Complex<T>>,
    tol: T,
    max_iter: usize,
) -> Result<Vec<Complex<T>>> {
    let dp = p.derivative();
    let n = z.len();
    let tiny = tol.clone() * tol.clone();
    for _ in 0..max_iter {
        let mut converged = true;
        for i in 0..n {
            let pv = p.eval_complex(&z[i]);
            if pv.is_zero() {
                continue;
            }
            let ratio = pv / dp.eval_complex(&z[i]);
            let mut sum: Complex<T> = Complex::zero();
            for j in 0..n {
                if j != i {
                    sum = sum + Complex::<T>::one() / (z[i].clone() - z[j].clone());
                }
            }
            let step = ratio.clone() / (Complex::<T>::one() - ratio * sum);
            let size = cabs(&step);
            if !size.is_finite() {
                return Err(Error::RootsNotConverged {
                    iterations: max_iter,
                });
            }
            if size > tol.clone() * cabs(&z[i]) + tiny.clone() {
                converged = false;
            }
            z[i] = z[i].clone() - step;
        }
        if converged {
            return Ok(z);
        }
    }
    Err(Error::RootsNotConverged {
        iterations: max_iter,
    })
}

/// Integration interval for inner products of exponential sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    Finite(f64),
    Infinite,
}

/// `coef · e^{rate t}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Exponential<T> {
    pub coef: Complex<T>,
    pub rate: Complex<T>,
}

/// Real-valued finite sum of (complex) exponentials; conjugate terms pair up.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpSum<T> {
    terms: Vec<Exponential<T>>,
}

impl<T: Real> ExpSum<T> {
    pub fn zero() -> Self {
        ExpSum { terms: Vec::new() }
    }

    /// Real exponential `c e^{r t}`.
    pub fn real(c: T, r: T) -> Self {
        ExpSum {
            terms: vec![Exponential {
                coef: Complex::new(c, T::zero()),
                rate: Complex::new(r, T::zero()),
            }],
        }
    }

    pub fn terms(&self) -> &[Exponential<T>] {
        &self.terms
    }

    pub fn eval(&self, t: &T) -> T {
        let tz = Complex::new(t.clone(), T::zero());
        self.terms.iter().fold(T::zero(), |acc, e| {
            acc + (e.coef.clone() * cexp(&(e.rate.clone() * tz.clone()))).re
        })
    }

    pub fn derivative(&self) -> Self {
        ExpSum {
            terms: self
                .terms
                .iter()
                .map(|e| Exponential {
                    coef: e.coef.clone() * e.rate.clone(),
                    rate: e.rate.clone(),
                })
                .collect(),
        }
    }

    pub fn scaled(&self, k: &T) -> Self {
        ExpSum {
            terms: self
                .terms
                .iter()
                .map(|e| Exponential {
                    coef: e.coef.clone() * k.clone(),
                    rate: e.rate.clone(),
                })
                .collect(),
        }
    }

    pub fn sample(&self, grid: &Arc<TimeGrid<T>>) -> SampledFunction<T> {
        SampledFunction::from_parts(grid.clone(), grid.times().map(|t| self.eval(&t)).collect())
    }

    /// `∫ self·other` over `(0, T)` or `(0, ∞)`.
    pub fn inner(&self, other: &Self, horizon: Horizon) -> T {
        let mut acc: Complex<T> = Complex::zero();
        for a in &self.terms {
            for b in &other.terms {
                let z = a.rate.clone() + b.rate.clone();
                acc = acc + a.coef.clone() * b.coef.clone() * exp_integral(&z, horizon);
            }
        }
        acc.re
    }
}

/// `∫_0^T e^{z t} dt`, with the `T = ∞` limit `-1/z` for `Re z < 0`.
pub fn exp_integral<T: Real>(z: &Complex<T>, horizon: Horizon) -> Complex<T> {
    match horizon {
        Horizon::Infinite => -(Complex::<T>::one() / z.clone()),
        Horizon::Finite(h) => {
            let t = T::of(h);
            let zt = z.clone() * t.clone();
            if cabs(&zt) < T::of(0.5) {
                // T Σ (zT)^k/(k+1)!
                let mut term: Complex<T> = Complex::one();
                let mut sum: Complex<T> = Complex::one();
                let mut k = 1usize;
                loop {
                    term = term * zt.clone() / T::of_usize(k + 1);
                    sum = sum + term.clone();
                    if cabs(&term) <= T::epsilon() * cabs(&sum) || k > 10_000 {
                        break;
                    }
                    k += 1;
                }
                sum * t
            } else {
                (cexp(&zt) - Complex::<T>::one()) / z.clone()
            }
        }
    }
}

/// Laplace-domain description of the modal dynamics for one memory kernel.
///
/// With `M̂ = N/D`, mode `n` obeys `(s + λ²(1 + M̂)) ŵ = ξ - (1 + M̂) ĝ`, so
/// the free response is `D/Q` and the response to boundary forcing is
/// `-(D+N)/Q · ĝ`, where `Q = sD + λ²(D+N)`.
#[derive(Clone, Debug)]
pub struct RationalModel<T> {
    num: Poly<T>,
    den: Poly<T>,
}

impl<T: Real> RationalModel<T> {
    pub fn new(kernel: &MemoryKernel) -> Self {
        let m = kernel.transfer::<T>();
        RationalModel {
            num: m.num().clone(),
            den: m.den().clone(),
        }
    }

    /// Resolvent kernel `R` with `R̂ = N/(D+N)`.
    pub fn resolvent(&self) -> Result<ExpSum<T>> {
        Rational::new(self.num.clone(), self.den.add(&self.num)).inverse_laplace()
    }

    /// `Q(s) = sD + λ²(D+N)`.
    pub fn characteristic(&self, lambda2: &T) -> Poly<T> {
        self.den
            .shift()
            .add(&self.den.add(&self.num).scale(lambda2))
    }

    /// Time profile `P_n = e₀ - H_n⋆e₀` of the moment kernels.
    pub fn profile(&self, lambda2: &T) -> Result<ExpSum<T>> {
        Rational::new(self.den.add(&self.num), self.characteristic(lambda2)).inverse_laplace()
    }

    /// Uncontrolled modal response per unit initial coefficient.
    pub fn free_response(&self, lambda2: &T) -> Result<ExpSum<T>> {
        Rational::new(self.den.clone(), self.characteristic(lambda2)).inverse_laplace()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Mp;
    use num_traits::Signed;

    #[test]
    fn roots_of_quadratic_and_cubic() {
        // (s+1)(s+2)(s+5)
        let p = Poly::new(vec![10.0f64, 17.0, 8.0, 1.0]);
        let r = poly_roots(&p).unwrap();
        let re: Vec<f64> = r.iter().map(|z| z.re).collect();
        assert!((re[0] + 1.0).abs() < 1e-13);
        assert!((re[1] + 2.0).abs() < 1e-13);
        assert!((re[2] + 5.0).abs() < 1e-13);
        // s^2 + 1: conjugate pair
        let r = poly_roots(&Poly::new(vec![1.0f64, 0.0, 1.0])).unwrap();
        assert!(r.iter().all(|z| z.re.abs() < 1e-14 && (z.im.abs() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn roots_polish_to_extended_precision() {
        type M = Mp<256>;
        // s^2 - 2
        let p = Poly::new(vec![M::of(-2.0), M::zero(), M::one()]);
        let r = poly_roots(&p).unwrap();
        let s2 = M::of(2.0).sqrt();
        assert!((r[0].re.clone() - s2).abs() < M::of(1e-70));
    }

    #[test]
    fn repeated_roots_are_reported() {
        let p = Poly::new(vec![1.0f64, 2.0, 1.0]);
        assert!(matches!(
            poly_roots(&p),
            Err(Error::RepeatedPole { .. }) | Err(Error::RootsNotConverged { .. })
        ));
    }

    #[test]
    fn inverse_laplace_of_damped_sine() {
        // 1/((s+1)^2 + 1) -> e^{-t} sin t
        let f = Rational::new(Poly::one(), Poly::new(vec![2.0f64, 2.0, 1.0]))
            .inverse_laplace()
            .unwrap();
        for &t in &[0.0, 0.3, 1.0, 2.5] {
            let exact = (-t as f64).exp() * (t as f64).sin();
            assert!((f.eval(&t) - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn inner_products_match_closed_forms() {
        let a = ExpSum::real(1.0f64, -1.0);
        let b = ExpSum::real(1.0f64, -2.0);
        assert!((a.inner(&b, Horizon::Infinite) - 1.0 / 3.0).abs() < 1e-15);
        let fin = a.inner(&b, Horizon::Finite(1.0));
        assert!((fin - (1.0 - (-3.0f64).exp()) / 3.0).abs() < 1e-15);
        // small exponent sum goes through the series branch
        let c = ExpSum::real(1.0f64, -1e-9);
        let d = ExpSum::real(1.0f64, 1e-9);
        assert!((c.inner(&d, Horizon::Finite(2.0)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn resolvent_of_constant_kernel() {
        let model = RationalModel::<f64>::new(&MemoryKernel::Constant { c: 1.0 });
        let r = model.resolvent().unwrap();
        for &t in &[0.0, 0.5, 1.0] {
            assert!((r.eval(&t) - (-t as f64).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn memoryless_profile_is_heat_exponential() {
        let model = RationalModel::<f64>::new(&MemoryKernel::Zero);
        let l2 = std::f64::consts::PI.powi(2);
        let p = model.profile(&l2).unwrap();
        let w = model.free_response(&l2).unwrap();
        for &t in &[0.0, 0.1, 0.4] {
            assert!((p.eval(&t) - (-l2 * t).exp()).abs() < 1e-15);
            assert!((w.eval(&t) - (-l2 * t).exp()).abs() < 1e-15);
        }
    }
}
