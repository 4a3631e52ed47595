//! Quadrature building blocks: Gauss-Legendre rules, adaptive Gauss-Kronrod
//! for complex integrands, Filon-Legendre panels for `exp(-iθx)` weights and
//! thread-count independent parallel sums.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, LazyLock, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Legendre `P_n(x)` and its derivative by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d.is_finite() { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared, cached rule of order `n`.
    pub fn cached(n: usize) -> Arc<Self> {
        static CACHE: LazyLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> =
            LazyLock::new(|| Mutex::new(HashMap::new()));
        let mut cache = CACHE.lock().unwrap_or_else(|e| e.into_inner());
        cache
            .entry(n)
            .or_insert_with(|| Arc::new(Self::new(n)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (hi + lo);
        let h = 0.5 * (hi - lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        self.mapped(lo, hi).map(|(x, w)| w * f(x)).sum()
    }

    pub fn integrate_complex<F: FnMut(f64) -> Complex64>(
        &self,
        lo: f64,
        hi: f64,
        mut f: F,
    ) -> Complex64 {
        self.mapped(lo, hi).map(|(x, w)| w * f(x)).sum()
    }
}

/// Integrates `f` over `[lo, hi]` with Gauss-Legendre, doubling the order
/// from `start` until two successive values differ by at most `tol`.
pub fn gauss_legendre_converged<F: Fn(f64) -> Complex64>(
    what: &'static str,
    lo: f64,
    hi: f64,
    start: usize,
    tol: f64,
    f: F,
) -> Result<Complex64> {
    let mut n = start.max(4);
    let mut prev = GaussLegendre::cached(n).integrate_complex(lo, hi, &f);
    let mut change = f64::INFINITY;
    for _ in 0..8 {
        n *= 2;
        let next = GaussLegendre::cached(n).integrate_complex(lo, hi, &f);
        change = (next - prev).norm();
        if change <= tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureNotConverged { what, change })
}

const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_KRONROD: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK15_GAUSS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, lo: f64, hi: f64) -> (Complex64, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut kronrod = fc * GK15_KRONROD[7];
    let mut gauss = fc * GK15_GAUSS[3];
    for j in 0..7 {
        let dx = h * GK15_NODES[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += pair * GK15_KRONROD[j];
        if j % 2 == 1 {
            gauss += pair * GK15_GAUSS[j / 2];
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).norm())
}

/// Globally adaptive 15-point Gauss-Kronrod quadrature of a complex integrand.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate drops below `max(abs_tol, rel_tol |I|)`.
pub fn adaptive_gk15<F: Fn(f64) -> Complex64>(
    f: F,
    lo: f64,
    hi: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Complex64> {
    const MAX_INTERVALS: usize = 20_000;
    let (v, e) = gk15(&f, lo, hi);
    let mut parts = vec![(lo, hi, v, e)];
    loop {
        let total: Complex64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok(total);
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::QuadratureNotConverged {
                what: "adaptive Gauss-Kronrod",
                change: err,
            });
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .3.total_cmp(&b.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (a, b, _, _) = parts.swap_remove(worst);
        let m = 0.5 * (a + b);
        let (v1, e1) = gk15(&f, a, m);
        let (v2, e2) = gk15(&f, m, b);
        parts.push((a, m, v1, e1));
        parts.push((m, b, v2, e2));
    }
}

/// Spherical Bessel functions `j_0(θ) .. j_m(θ)` for `θ ≥ 0`.
///
/// Upward recurrence is used where it is stable (`θ > m`), Miller's backward
/// recurrence otherwise, normalized with `Σ (2l+1) j_l² = 1`.
pub fn spherical_bessel_j(m: usize, theta: f64) -> Vec<f64> {
    let mut j = vec![0.0; m + 1];
    if theta == 0.0 {
        j[0] = 1.0;
        return j;
    }
    if theta > m as f64 {
        j[0] = theta.sin() / theta;
        if m >= 1 {
            j[1] = theta.sin() / (theta * theta) - theta.cos() / theta;
        }
        for l in 1..m {
            j[l + 1] = (2 * l + 1) as f64 / theta * j[l] - j[l - 1];
        }
        return j;
    }
    let start = m + 20 + (4.0 * (m as f64 + theta).sqrt()) as usize + theta as usize;
    let (mut hi, mut cur) = (0.0_f64, 1.0_f64);
    let mut norm = 0.0;
    for l in (0..=start).rev() {
        // cur holds j_l, hi holds j_{l+1} (unnormalized)
        if l <= m {
            j[l] = cur;
        }
        norm += (2 * l + 1) as f64 * cur * cur;
        if l == 0 {
            break;
        }
        let lo = (2 * l + 1) as f64 / theta * cur - hi;
        hi = cur;
        cur = lo;
        if cur.abs() > 1e100 {
            let s = 1e-100;
            cur *= s;
            hi *= s;
            norm *= s * s;
            for v in j.iter_mut() {
                *v *= s;
            }
        }
    }
    let mut scale = 1.0 / norm.sqrt();
    let j0 = theta.sin() / theta;
    let j1 = theta.sin() / (theta * theta) - theta.cos() / theta;
    let sign_ref = if j0.abs() >= j1.abs() {
        j0 * j[0]
    } else {
        j1 * j.get(1).copied().unwrap_or(j1)
    };
    if sign_ref < 0.0 {
        scale = -scale;
    }
    for v in j.iter_mut() {
        *v *= scale;
    }
    j
}

/// Filon-Legendre panel rule for `∫_{lo}^{hi} g(x) e^{-iωx} dx`.
///
/// `g` is projected on Legendre polynomials up to degree `degree` and the
/// oscillatory moments `∫ P_j(s) e^{-iθs} ds = 2(-i)^j j_j(θ)` are exact.
pub struct FilonLegendre {
    degree: usize,
    rule: Arc<GaussLegendre>,
    /// `P_j(x_i)` for the sampling nodes, row per degree.
    legendre: Vec<Vec<f64>>,
}

impl FilonLegendre {
    pub fn new(degree: usize) -> Self {
        let rule = GaussLegendre::cached(degree + 1);
        let mut legendre = vec![vec![0.0; rule.len()]; degree + 1];
        for (i, &x) in rule.nodes.iter().enumerate() {
            let (mut p0, mut p1) = (1.0, x);
            legendre[0][i] = 1.0;
            if degree >= 1 {
                legendre[1][i] = x;
            }
            for k in 2..=degree {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                legendre[k][i] = p2;
                p0 = p1;
                p1 = p2;
            }
        }
        Self {
            degree,
            rule,
            legendre,
        }
    }

    pub fn integrate<F: FnMut(f64) -> Complex64>(
        &self,
        lo: f64,
        hi: f64,
        omega: f64,
        mut g: F,
    ) -> Complex64 {
        let c = 0.5 * (hi + lo);
        let h = 0.5 * (hi - lo);
        let samples: Vec<Complex64> = self.rule.nodes.iter().map(|&x| g(c + h * x)).collect();
        let theta = h * omega;
        let bessel = spherical_bessel_j(self.degree, theta.abs());
        let mut acc = Complex64::new(0.0, 0.0);
        // (-i)^j for θ > 0; for θ < 0 the moments are conjugated.
        let mut phase = Complex64::new(1.0, 0.0);
        let step = if theta >= 0.0 {
            Complex64::new(0.0, -1.0)
        } else {
            Complex64::new(0.0, 1.0)
        };
        for j in 0..=self.degree {
            let coeff: Complex64 = samples
                .iter()
                .zip(&self.rule.weights)
                .zip(&self.legendre[j])
                .map(|((s, w), p)| s * (w * p))
                .sum::<Complex64>()
                * (0.5 * (2 * j + 1) as f64);
            acc += coeff * phase * (2.0 * bessel[j]);
            phase *= step;
        }
        acc * h * Complex64::from_polar(1.0, -omega * c)
    }
}

/// Sum of `f(0) + .. + f(n-1)` evaluated in parallel over fixed-size chunks.
///
/// Chunk boundaries do not depend on the thread count and partial sums are
/// combined left to right, so the result is bitwise reproducible.
pub fn ordered_sum<F>(n: usize, chunk: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync,
{
    let chunk = chunk.max(1);
    let partials: Vec<Complex64> = (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let start = c * chunk;
            let end = (start + chunk).min(n);
            let mut s = Complex64::new(0.0, 0.0);
            for i in start..end {
                s += f(i);
            }
            s
        })
        .collect();
    partials.into_iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b)
}
