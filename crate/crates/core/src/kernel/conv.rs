use rayon::prelude::*;

use super::grid::SampledFunction;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Trapezoidal convolution `(f⋆g)(t) = ∫_0^t f(t-s) g(s) ds` at every node.
///
/// Pairs `(j, k-j)` are summed symmetrically, so `convolve(f, g)` and
/// `convolve(g, f)` are bitwise identical.
pub fn convolve<T: Real>(f: &SampledFunction<T>, g: &SampledFunction<T>) -> Result<SampledFunction<T>> {
    f.ensure_same_grid(g)?;
    let values = conv_values(f.values(), g.values(), f.grid().dt());
    Ok(SampledFunction::from_parts(f.grid().clone(), values))
}

pub(crate) fn conv_values<T: Real>(f: &[T], g: &[T], dt: &T) -> Vec<T> {
    (0..f.len())
        .into_par_iter()
        .map(|k| conv_at(f, g, k, dt))
        .collect()
}

/// Trapezoidal `(f⋆g)(t_k)`.
pub(crate) fn conv_at<T: Real>(f: &[T], g: &[T], k: usize, dt: &T) -> T {
    if k == 0 {
        return T::zero();
    }
    let pair = |j: usize| f[k - j].clone() * g[j].clone() + f[j].clone() * g[k - j].clone();
    let mut s = T::of(0.5) * pair(0);
    // four independent partial sums over j = 1..ceil(k/2)
    let upper = (k + 1) / 2;
    let mut lanes = [T::zero(), T::zero(), T::zero(), T::zero()];
    let mut j = 1;
    while j + 3 < upper {
        for (l, lane) in lanes.iter_mut().enumerate() {
            *lane += pair(j + l);
        }
        j += 4;
    }
    while j < upper {
        lanes[0] += pair(j);
        j += 1;
    }
    let [a, b, c, d] = lanes;
    s += (a + b) + (c + d);
    if k % 2 == 0 {
        s += f[k / 2].clone() * g[k / 2].clone();
    }
    s * dt.clone()
}

/// `Σ_i a[i] b[len-1-i]` with four partial sums.
pub(crate) fn dot_rev<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [T::zero(), T::zero(), T::zero(), T::zero()];
    let ca = a.chunks_exact(4);
    let cb = b.rchunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            lanes[l] += x[l].clone() * y[3 - l].clone();
        }
    }
    let [p, q, r, s] = lanes;
    let mut tail = T::zero();
    for (x, y) in ra.iter().zip(rb.iter().rev()) {
        tail += x.clone() * y.clone();
    }
    (p + q) + (r + s) + tail
}

/// `f^{⋆k}`, with `f^{⋆1} = f`.
pub fn conv_power<T: Real>(f: &SampledFunction<T>, k: usize) -> Result<SampledFunction<T>> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "convolution power needs k >= 1 (there is no unit sample on a grid)".into(),
        ));
    }
    let mut acc = f.clone();
    for _ in 1..k {
        acc = convolve(f, &acc)?;
    }
    Ok(acc)
}

/// `e_k(t) = t^k/k! e^{-μ² t}` at every node.
pub fn e_k<T: Real>(grid: &std::sync::Arc<super::TimeGrid<T>>, mu2: &T, k: usize) -> SampledFunction<T> {
    let values = grid
        .times()
        .map(|t| {
            let mut p = T::one();
            for i in 1..=k {
                p *= t.clone() / T::of_usize(i);
            }
            p * (-(mu2.clone() * t)).exp()
        })
        .collect();
    SampledFunction::from_parts(grid.clone(), values)
}

/// Product integration of `f⋆e_k`.
///
/// `f` is interpolated linearly between nodes and integrated exactly against
/// `e_k`, so the error is `O(dt²)` uniformly in `μ²`; plain trapezoid weights
/// lose accuracy once `μ² dt` is not small.
pub fn convolve_with_ek<T: Real>(f: &SampledFunction<T>, mu2: &T, k: usize) -> SampledFunction<T> {
    let grid = f.grid();
    let (alpha, beta) = ek_weights(grid.dt(), mu2, k, grid.steps());
    // c_n = Σ_{m<n} α_m f_{n-m} + β_m f_{n-m-1} = Σ_{i=1}^n γ_{n-i} f_i + β_{n-1} f_0
    let gamma: Vec<T> = (0..alpha.len())
        .map(|j| {
            if j == 0 {
                alpha[0].clone()
            } else {
                alpha[j].clone() + beta[j - 1].clone()
            }
        })
        .collect();
    let fv = f.values();
    let values = (0..fv.len())
        .into_par_iter()
        .map(|n| {
            if n == 0 {
                return T::zero();
            }
            dot_rev(&fv[1..=n], &gamma[..n]) + beta[n - 1].clone() * fv[0].clone()
        })
        .collect();
    SampledFunction::from_parts(grid.clone(), values)
}

/// `e^{-μ²t}⋆f`, the case `k = 0`.
pub fn convolve_exp<T: Real>(f: &SampledFunction<T>, mu2: &T) -> SampledFunction<T> {
    convolve_with_ek(f, mu2, 0)
}

/// Interval weights `α_m = ∫(1-θ) e_k`, `β_m = ∫θ e_k` over `[t_m, t_{m+1}]`.
fn ek_weights<T: Real>(h: &T, mu2: &T, k: usize, steps: usize) -> (Vec<T>, Vec<T>) {
    let x = mu2.clone() * h.clone();
    let jm = exp_moments(&x, k + 1);
    // b_j = h^j/j!
    let mut b = Vec::with_capacity(k + 1);
    let mut bj = T::one();
    for j in 0..=k {
        if j > 0 {
            bj *= h.clone() / T::of_usize(j);
        }
        b.push(bj.clone());
    }
    let decay = (-x).exp();
    let mut scale = T::one();
    let mut alpha = Vec::with_capacity(steps);
    let mut beta = Vec::with_capacity(steps);
    for m in 0..steps {
        let tm = h.clone() * T::of_usize(m);
        // a_i = t_m^i/i!
        let mut a = Vec::with_capacity(k + 1);
        let mut ai = T::one();
        for i in 0..=k {
            if i > 0 {
                ai *= tm.clone() / T::of_usize(i);
            }
            a.push(ai.clone());
        }
        let mut i0 = T::zero();
        let mut i1 = T::zero();
        for j in 0..=k {
            let c = a[k - j].clone() * b[j].clone();
            i0 += c.clone() * (jm[j].clone() - jm[j + 1].clone());
            i1 += c * jm[j + 1].clone();
        }
        alpha.push(h.clone() * scale.clone() * i0);
        beta.push(h.clone() * scale.clone() * i1);
        scale *= decay.clone();
    }
    (alpha, beta)
}

/// `J(p, x) = ∫_0^1 θ^p e^{-xθ} dθ` for `p = 0..=pmax`.
pub(crate) fn exp_moments<T: Real>(x: &T, pmax: usize) -> Vec<T> {
    (0..=pmax).map(|p| exp_moment(p, x)).collect()
}

fn exp_moment<T: Real>(p: usize, x: &T) -> T {
    let eps = T::epsilon();
    let pf = T::of_usize(p);
    if x.is_zero() {
        return T::one() / (pf + T::one());
    }
    if x.is_negative() {
        // Σ (-x)^q / (q! (p+q+1)), all terms positive
        let y = -x.clone();
        let mut term = T::one();
        let mut sum = T::one() / (pf.clone() + T::one());
        let mut q = 1usize;
        loop {
            term *= y.clone() / T::of_usize(q);
            let add = term.clone() / (pf.clone() + T::of_usize(q + 1));
            sum += add.clone();
            if add <= eps.clone() * sum.clone() {
                return sum;
            }
            q += 1;
        }
    }
    if *x > T::of_usize(2 * (p + 1)) {
        // p!/x^{p+1} (1 - e^{-x} Σ_{q≤p} x^q/q!); the bracket is at least 1/2 here
        let mut partial = T::zero();
        let mut term = T::one();
        for q in 0..=p {
            if q > 0 {
                term *= x.clone() / T::of_usize(q);
            }
            partial += term.clone();
        }
        let mut lead = T::one() / x.clone();
        for q in 1..=p {
            lead *= T::of_usize(q) / x.clone();
        }
        return lead * (T::one() - (-x.clone()).exp() * partial);
    }
    // e^{-x} Σ_{q>p} p! x^{q-p-1}/q!
    let mut term = T::one() / (pf + T::one());
    let mut sum = term.clone();
    let mut q = p + 1;
    loop {
        term *= x.clone() / T::of_usize(q + 1);
        sum += term.clone();
        if term <= eps.clone() * sum.clone() {
            break;
        }
        q += 1;
    }
    (-x.clone()).exp() * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::TimeGrid;

    #[test]
    fn moments_agree_across_branches() {
        // J(p, x) by brute-force Simpson
        for &x in &[-3.0f64, -0.2, 0.0, 0.4, 3.0, 9.0, 40.0] {
            for p in 0..6 {
                let n = 20000;
                let h = 1.0 / n as f64;
                let f = |t: f64| t.powi(p as i32) * (-x * t).exp();
                let mut s = f(0.0) + f(1.0);
                for i in 1..n {
                    s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
                }
                let simpson = s * h / 3.0;
                let j = exp_moment(p, &x);
                assert!((j - simpson).abs() < 1e-12 * simpson.abs().max(1e-3), "p={p} x={x}: {j} vs {simpson}");
            }
        }
    }

    #[test]
    fn constants_convolve_to_ramp() {
        let g = TimeGrid::new(1.0f64, 50).unwrap();
        let one = SampledFunction::constant(&g, 1.0);
        let c = convolve(&one, &one).unwrap();
        for (t, v) in g.times().zip(c.values()) {
            assert!((t - v).abs() < 1e-14);
        }
    }

    #[test]
    fn power_of_constant() {
        let g = TimeGrid::new(1.0f64, 40).unwrap();
        let f = SampledFunction::constant(&g, 2.0);
        let p3 = conv_power(&f, 3).unwrap();
        let t = 1.0;
        // c^k t^{k-1}/(k-1)!
        assert!((p3.last() - 8.0 * t * t / 2.0).abs() < 1e-2);
        assert!(conv_power(&f, 0).is_err());
        assert_eq!(conv_power(&f, 1).unwrap().values(), f.values());
    }

    #[test]
    fn product_integration_is_exact_for_linear_data() {
        // (1 ⋆ e_0)(t) = (1 - e^{-μ² t})/μ² for any step
        let g = TimeGrid::new(1.0f64, 10).unwrap();
        let one = SampledFunction::constant(&g, 1.0);
        for &mu2 in &[0.5, 50.0, 5000.0] {
            let c = convolve_exp(&one, &mu2);
            for (t, v) in g.times().zip(c.values()) {
                let exact = (1.0 - (-mu2 * t).exp()) / mu2;
                assert!((v - exact).abs() < 1e-15, "mu2={mu2}");
            }
        }
        // (t ⋆ e_1) at μ² = 0 is t³/6
        let ramp = SampledFunction::from_fn(&g, |t| t).unwrap();
        let c = convolve_with_ek(&ramp, &0.0, 1);
        assert!((c.last() - 1.0 / 6.0).abs() < 1e-15);
    }
}
