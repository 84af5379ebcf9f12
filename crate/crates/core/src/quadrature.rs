//! Gauss rules, adaptive Gauss–Kronrod integration, and a Halton sequence.

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_interval(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter().zip(&w).map(|(xi, wi)| (c + h * xi, h * wi)).collect()
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600258695815,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// One 21-point Kronrod panel: (integral, error estimate).
pub fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = WGK[10] * fc;
    let mut rg = 0.0;
    for j in 0..10 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    let res = rk * h;
    let err = ((rk - rg) * h).abs();
    (res, err)
}

/// Adaptive Gauss–Kronrod integration on a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let mut panels = vec![{
        let (r, e) = gk21(f, a, b);
        (a, b, r, e)
    }];
    for _ in 0..2000 {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if !total.is_finite() {
            return Err(Error::QuadratureFailure("non-finite integrand".into()));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok((total, err));
        }
        let (k, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (pa, pb, _, _) = panels.swap_remove(k);
        let m = 0.5 * (pa + pb);
        if m <= pa || m >= pb {
            let total: f64 = panels.iter().map(|p| p.2).sum();
            return Err(Error::QuadratureFailure(format!("interval collapsed near {m}; partial sum {total}")));
        }
        let (r1, e1) = gk21(f, pa, m);
        let (r2, e2) = gk21(f, m, pb);
        panels.push((pa, m, r1, e1));
        panels.push((m, pb, r2, e2));
    }
    let total: f64 = panels.iter().map(|p| p.2).sum();
    let err: f64 = panels.iter().map(|p| p.3).sum();
    if err <= 1e3 * abs_tol.max(rel_tol * total.abs()) {
        Ok((total, err))
    } else {
        Err(Error::QuadratureFailure(format!("panel budget exhausted, error {err:.3e}")))
    }
}

/// Integral over (0, b] of a function that may be singular at 0, summed over
/// dyadic intervals [b 2^{-k-1}, b 2^{-k}]. Fails with
/// `DivergentInnerIntegral` when the dyadic contributions stop shrinking.
pub fn integrate_from_zero<F: Fn(f64) -> f64>(f: &F, b: f64, rel_tol: f64) -> Result<f64> {
    if b == 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut hi = b;
    let mut prev = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..1100 {
        let lo = 0.5 * hi;
        let (piece, _) = integrate(f, lo, hi, 1e-300, rel_tol * 1e-2)?;
        total += piece;
        let mag = piece.abs();
        if mag <= rel_tol * 1e-3 * total.abs() || mag < 1e-300 {
            return Ok(total);
        }
        if mag >= prev * 0.999 {
            stalled += 1;
            if stalled >= 8 {
                return Err(Error::DivergentInnerIntegral);
            }
        } else {
            stalled = 0;
        }
        prev = mag;
        hi = lo;
        if hi < 1e-300 {
            break;
        }
    }
    Err(Error::DivergentInnerIntegral)
}

/// Radical-inverse Halton point in [0,1)^d (index starts at 1).
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
    (0..dim)
        .map(|d| {
            let b = PRIMES[d % PRIMES.len()];
            let mut f = 1.0;
            let mut r = 0.0;
            let mut i = index;
            while i > 0 {
                f /= b as f64;
                r += f * (i % b) as f64;
                i /= b;
            }
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn adaptive_handles_peaks() {
        let f = |x: f64| 1.0 / (1e-4 + (x - 0.3) * (x - 0.3));
        let (v, _) = integrate(&f, 0.0, 1.0, 1e-12, 1e-12).unwrap();
        let exact = 100.0 * ((0.7f64 / 0.01).atan() + (0.3f64 / 0.01).atan());
        assert!((v - exact).abs() / exact < 1e-10);
    }

    #[test]
    fn singular_at_zero() {
        let f = |x: f64| x.powf(-0.5);
        let v = integrate_from_zero(&f, 1.0, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
        let g = |x: f64| 1.0 / x;
        assert_eq!(integrate_from_zero(&g, 1.0, 1e-10), Err(Error::DivergentInnerIntegral));
    }

    #[test]
    fn halton_is_in_unit_cube() {
        for i in 1..100 {
            assert!(halton(i, 5).iter().all(|&v| (0.0..1.0).contains(&v)));
        }
        assert_eq!(halton(1, 2), vec![0.5, 1.0 / 3.0]);
    }
}
