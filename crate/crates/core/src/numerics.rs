//! Small numerical toolbox: GF(2) spans, normal-tail functions in log
//! space, adaptive quadrature and one-dimensional searches.

use std::cmp::Ordering;

use libm::erfc;

use crate::{Error, Result};

/// `f64` with a total order, for heaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrdF64(pub f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Row-reduced basis of a GF(2) row space, rows stored as packed bits.
#[derive(Debug, Clone)]
pub struct Gf2Basis {
    words: usize,
    rows: Vec<(usize, Vec<u64>)>,
}

impl Gf2Basis {
    pub fn from_rows<'a>(n: usize, rows: impl IntoIterator<Item = &'a [usize]>) -> Self {
        let mut b = Gf2Basis { words: n.div_ceil(64).max(1), rows: Vec::new() };
        for r in rows {
            b.insert(r);
        }
        b
    }

    fn pack(&self, support: &[usize]) -> Vec<u64> {
        let mut v = vec![0u64; self.words];
        for &i in support {
            v[i / 64] ^= 1 << (i % 64);
        }
        v
    }

    fn reduce(&self, v: &mut [u64]) {
        for (pivot, row) in &self.rows {
            if v[pivot / 64] >> (pivot % 64) & 1 == 1 {
                v.iter_mut().zip(row).for_each(|(a, b)| *a ^= b);
            }
        }
    }

    /// Adds a row; returns false when it was already in the span.
    pub fn insert(&mut self, support: &[usize]) -> bool {
        let mut v = self.pack(support);
        self.reduce(&mut v);
        let Some(w) = v.iter().position(|&x| x != 0) else { return false };
        let pivot = w * 64 + v[w].trailing_zeros() as usize;
        for (_, row) in self.rows.iter_mut() {
            if row[pivot / 64] >> (pivot % 64) & 1 == 1 {
                row.iter_mut().zip(&v).for_each(|(a, b)| *a ^= b);
            }
        }
        self.rows.push((pivot, v));
        true
    }

    pub fn contains(&self, support: &[usize]) -> bool {
        let mut v = self.pack(support);
        self.reduce(&mut v);
        v.iter().all(|&x| x == 0)
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `log(exp(a) + exp(b))`.
pub fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `log(1 - exp(x))` for `x <= 0`.
pub fn log1mexp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Log density of the standard normal.
pub fn log_phi(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Upper tail `Q(x) = 1 - Phi(x)`.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `log Q(x)`, accurate far into the upper tail.
pub fn log_norm_sf(x: f64) -> f64 {
    let y = x / SQRT_2;
    if y < 25.0 {
        return (0.5 * erfc(y)).ln();
    }
    // erfc(y) = exp(-y^2) / (y sqrt(pi)) * (1 - 1/(2y^2) + 3/(4y^4) - ...)
    let u = 1.0 / (2.0 * y * y);
    let series = 1.0 - u * (1.0 - 3.0 * u * (1.0 - 5.0 * u * (1.0 - 7.0 * u)));
    -y * y - (y * std::f64::consts::PI.sqrt()).ln() + series.ln() - std::f64::consts::LN_2
}

/// `log Phi(x)`.
pub fn log_norm_cdf(x: f64) -> f64 {
    log_norm_sf(-x)
}

/// `log(Phi(b) - Phi(a))` for `a <= b`, without cancellation in either tail.
pub fn log_norm_diff(a: f64, b: f64) -> f64 {
    if a >= b {
        return f64::NEG_INFINITY;
    }
    if a >= 0.0 {
        let (la, lb) = (log_norm_sf(a), log_norm_sf(b));
        la + log1mexp(lb - la)
    } else if b <= 0.0 {
        let (la, lb) = (log_norm_cdf(a), log_norm_cdf(b));
        lb + log1mexp(la - lb)
    } else {
        (-(norm_cdf(a) + norm_sf(b))).ln_1p()
    }
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK_WK[7];
    let mut g = fc * GK_WG[3];
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]`; either bound may
/// be infinite, in which case the interval is mapped onto a finite one by
/// `x = t / (1 - t^2)` (both infinite) or `x = a + t / (1 - t)` (one infinite).
/// `breaks` are interior points where the integrand changes character.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<f64> {
    let mut pts: Vec<f64> = Vec::new();
    let map_inf = a.is_infinite() || b.is_infinite();
    let (to_t, lo, hi): (Box<dyn Fn(f64) -> f64>, f64, f64) = match (a.is_infinite(), b.is_infinite()) {
        (true, true) => (Box::new(|x: f64| if x == 0.0 { 0.0 } else { (-1.0 + (1.0 + 4.0 * x * x).sqrt()) / (2.0 * x) }), -1.0, 1.0),
        (false, true) => (Box::new(move |x: f64| (x - a) / (1.0 + x - a)), 0.0, 1.0),
        (true, false) => (Box::new(move |x: f64| (b - x) / (1.0 + b - x)), 0.0, 1.0),
        (false, false) => (Box::new(|x| x), a, b),
    };
    pts.push(lo);
    for &x in breaks {
        let t = to_t(x);
        if t > lo && t < hi {
            pts.push(t);
        }
    }
    pts.push(hi);
    pts.sort_by(|x, y| x.total_cmp(y));
    let mut g = |t: f64| -> f64 {
        if !map_inf {
            return f(t);
        }
        match (a.is_infinite(), b.is_infinite()) {
            (true, true) => {
                let s = 1.0 - t * t;
                if s <= 0.0 {
                    return 0.0;
                }
                let v = f(t / s) * (1.0 + t * t) / (s * s);
                if v.is_finite() { v } else { 0.0 }
            }
            (false, true) => {
                let s = 1.0 - t;
                if s <= 0.0 {
                    return 0.0;
                }
                let v = f(a + t / s) / (s * s);
                if v.is_finite() { v } else { 0.0 }
            }
            _ => {
                let s = 1.0 - t;
                if s <= 0.0 {
                    return 0.0;
                }
                let v = f(b - t / s) / (s * s);
                if v.is_finite() { v } else { 0.0 }
            }
        }
    };
    let mut intervals: Vec<(f64, f64, f64, f64)> = Vec::new();
    for w in pts.windows(2) {
        let (v, e) = gk15(&mut g, w[0], w[1]);
        intervals.push((w[0], w[1], v, e));
    }
    for _ in 0..5000 {
        let total_err: f64 = intervals.iter().map(|i| i.3).sum();
        if total_err <= tol {
            return Ok(intervals.iter().map(|i| i.2).sum());
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (l, r, _, _) = intervals.swap_remove(idx);
        let m = 0.5 * (l + r);
        if m <= l || m >= r {
            return Err(Error::Quadrature(total_err));
        }
        let (v1, e1) = gk15(&mut g, l, m);
        let (v2, e2) = gk15(&mut g, m, r);
        intervals.push((l, m, v1, e1));
        intervals.push((m, r, v2, e2));
    }
    Err(Error::Quadrature(intervals.iter().map(|i| i.3).sum()))
}

/// Golden-section minimisation of a unimodal function on `[a, b]`.
/// Returns `(argmin, min)`.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    while (b - a).abs() > tol * (1.0 + c.abs() + d.abs()) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        for (x, fx) in [(c, fc), (d, fd)] {
            if fx < best.1 {
                best = (x, fx);
            }
        }
    }
    best
}

/// Bisection for a root of `f` on `[a, b]` where `f(a)` and `f(b)` have
/// opposite signs.
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidParameter(format!("root not bracketed in [{a}, {b}]")));
    }
    for _ in 0..300 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol || m == a || m == b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Nelder-Mead simplex minimisation in `n` dimensions.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], step: &[f64], iters: usize, tol: f64) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step[i];
        let fx = f(&x);
        simplex.push((x, fx));
    }
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[n].1 - simplex[0].1).abs() <= tol * (1e-300 + simplex[0].1.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|p| p.0[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64, worst: &[f64]| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (worst[j] - centroid[j])).collect() };
        let worst = simplex[n].0.clone();
        let xr = along(-1.0, &worst);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0, &worst);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let xc = if fr < simplex[n].1 { along(-0.5, &worst) } else { along(0.5, &worst) };
            let fc = f(&xc);
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = (0..n).map(|j| best[j] + 0.5 * (p.0[j] - best[j])).collect();
                    let fx = f(&x);
                    *p = (x, fx);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normal_tails() {
        assert_relative_eq!(norm_cdf(-2.0), 0.022_750_131_948_179_2, max_relative = 1e-12);
        assert_relative_eq!(log_norm_sf(2.0), 0.022_750_131_948_179_2f64.ln(), max_relative = 1e-12);
        // continuity across the asymptotic switch
        let x = 25.0 * SQRT_2;
        let below = (0.5 * erfc(x / SQRT_2 - 1e-9)).ln();
        assert_relative_eq!(log_norm_sf(x), below, max_relative = 1e-9);
        // large-x leading behaviour
        let big = 1e3;
        assert_relative_eq!(log_norm_sf(big), -0.5 * big * big - (big * (2.0 * std::f64::consts::PI).sqrt()).ln(), max_relative = 1e-9);
    }

    #[test]
    fn norm_diff_regions() {
        for (a, b) in [(-1.0, 2.0), (3.0, 4.0), (-9.0, -8.5), (40.0, 41.0), (-0.1, 0.1)] {
            let direct = (norm_cdf(b) - norm_cdf(a)).ln();
            let val = log_norm_diff(a, b);
            if direct.is_finite() && direct > -700.0 && (norm_cdf(b) - norm_cdf(a)) > 1e-12 {
                assert_relative_eq!(val, direct, max_relative = 1e-9);
            }
            assert!(val.is_finite());
        }
    }

    #[test]
    fn quadrature_gaussian() {
        let v = integrate(|x| (log_phi(x)).exp(), f64::NEG_INFINITY, f64::INFINITY, &[], 1e-12).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-11);
        let v = integrate(|x| (log_phi(x)).exp(), 1.0, f64::INFINITY, &[], 1e-13).unwrap();
        assert_relative_eq!(v, norm_sf(1.0), epsilon = 1e-12);
        let v = integrate(|x| (log_phi(x)).exp(), f64::NEG_INFINITY, -2.0, &[], 1e-13).unwrap();
        assert_relative_eq!(v, norm_cdf(-2.0), epsilon = 1e-12);
        let v = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, &[1.0], 1e-13).unwrap();
        assert_relative_eq!(v, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn gf2_span() {
        let mut b = Gf2Basis::from_rows(70, [[0usize, 1].as_slice(), &[1, 69], &[0, 69]]);
        assert_eq!(b.rank(), 2);
        assert!(b.contains(&[0, 69]));
        assert!(!b.contains(&[0]));
        assert!(b.contains(&[]));
        assert!(b.insert(&[5]));
        assert!(b.contains(&[5, 0, 1]));
    }

    #[test]
    fn searches() {
        let (x, _) = golden_section(|x| (x - 1.3) * (x - 1.3), -5.0, 5.0, 1e-10);
        assert!((x - 1.3).abs() < 1e-6);
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert_relative_eq!(r, 2f64.sqrt(), epsilon = 1e-13);
        let (p, v) = nelder_mead(|x| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2), &[0.0, 0.0], &[0.5, 0.5], 2000, 1e-15);
        assert!((p[0] - 1.0).abs() < 1e-5 && (p[1] + 2.0).abs() < 1e-5 && v < 1e-9);
    }
}
