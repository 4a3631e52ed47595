//! Faddeeva function `w(z) = exp(-z²) erfc(-iz)` and the Moshinsky function
//! built on top of it.
//!
//! `w` is evaluated in the closed upper half plane by one of three kernels,
//! picked by `|z|`:
//!
//! * `|z| < 0.5`: Maclaurin series,
//! * `|z| < 8`: Weideman's rational expansion with 40 terms,
//! * otherwise: the Laplace continued fraction.
//!
//! The lower half plane follows from `w(z) = 2 exp(-z²) - w(-z)`.
//!
//! Units follow `ħ = 2m = 1`, so the free dispersion is `exp(-i k² t)`.

use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::LazyLock;

use num_complex::Complex64;

use crate::error::{check_domain, Result};

const INV_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const SERIES_RADIUS: f64 = 0.5;
const RATIONAL_RADIUS: f64 = 8.0;
const RATIONAL_TERMS: usize = 40;

struct Weideman {
    l: f64,
    /// Polynomial coefficients, highest degree first.
    coeffs: [f64; RATIONAL_TERMS],
}

impl Weideman {
    fn new() -> Self {
        let n = RATIONAL_TERMS;
        let m = 2 * n;
        let m2 = 2 * m;
        let l = (n as f64 / std::f64::consts::SQRT_2).sqrt();

        // f sampled on k = -m+1 .. m-1, with a leading zero, then fftshift-ed.
        let mut f = vec![0.0; m2];
        for (j, k) in (-(m as i64) + 1..m as i64).enumerate() {
            let theta = k as f64 * PI / m as f64;
            let t = l * (0.5 * theta).tan();
            f[j + 1] = (-t * t).exp() * (l * l + t * t);
        }
        let shifted: Vec<f64> = (0..m2).map(|i| f[(i + m2 / 2) % m2]).collect();

        // Real part of the DFT, only the n lowest nonzero frequencies are used.
        let mut a = [0.0; RATIONAL_TERMS];
        for (idx, freq) in (1..=n).enumerate() {
            let mut acc = 0.0;
            for (j, v) in shifted.iter().enumerate() {
                let phase = -2.0 * PI * ((j * freq) % m2) as f64 / m2 as f64;
                acc += v * phase.cos();
            }
            a[n - 1 - idx] = acc / m2 as f64;
        }
        Self { l, coeffs: a }
    }

    fn eval(&self, z: Complex64) -> Complex64 {
        let iz = Complex64::i() * z;
        let lm = self.l - iz;
        let zz = (self.l + iz) / lm;
        let mut p = Complex64::new(0.0, 0.0);
        for &c in &self.coeffs {
            p = p * zz + c;
        }
        2.0 * p / (lm * lm) + INV_SQRT_PI / lm
    }
}

static WEIDEMAN: LazyLock<Weideman> = LazyLock::new(Weideman::new);

fn series(z: Complex64) -> Complex64 {
    // w(z) = exp(-z²) + i z Σ (-z²)^m / Γ(m + 3/2)
    let mz2 = -z * z;
    let mut term = Complex64::new(2.0 * INV_SQRT_PI, 0.0);
    let mut sum = term;
    for m in 0..40 {
        term *= mz2 / (m as f64 + 1.5);
        sum += term;
        if term.norm() < 1e-17 * sum.norm() {
            break;
        }
    }
    mz2.exp() + Complex64::i() * z * sum
}

/// Laplace continued fraction `w(z) = (i/√π) / (z - q)` with
/// `q = (1/2) / (z - 1/(z - (3/2)/(z - ...)))`. Returns `(z - q, q)`.
fn continued_fraction_parts(z: Complex64) -> (Complex64, Complex64) {
    let r = z.norm();
    let depth = if r < 12.0 {
        20
    } else if r < 50.0 {
        12
    } else if r < 500.0 {
        6
    } else {
        4
    };
    let mut d = z;
    for k in (2..=depth).rev() {
        d = z - (0.5 * k as f64) / d;
    }
    let q = 0.5 / d;
    (z - q, q)
}

fn continued_fraction(z: Complex64) -> Complex64 {
    Complex64::new(0.0, INV_SQRT_PI) / continued_fraction_parts(z).0
}

/// `w(z) - i/(√π z)` in the upper half plane. For large `|z|` the leading
/// term is removed inside the continued fraction, so nothing cancels.
fn upper_half_tail(z: Complex64) -> Complex64 {
    if z.norm() < RATIONAL_RADIUS {
        upper_half(z) - Complex64::new(0.0, INV_SQRT_PI) / z
    } else {
        let (d, q) = continued_fraction_parts(z);
        Complex64::new(0.0, INV_SQRT_PI) * q / (z * d)
    }
}

fn upper_half(z: Complex64) -> Complex64 {
    let r = z.norm();
    let w = if r < SERIES_RADIUS {
        series(z)
    } else if r < RATIONAL_RADIUS {
        WEIDEMAN.eval(z)
    } else {
        continued_fraction(z)
    };
    if z.im == 0.0 {
        Complex64::new((-z.re * z.re).exp(), w.im)
    } else {
        w
    }
}

/// Faddeeva function `w(z) = exp(-z²) erfc(-iz)` for any finite `z`.
///
/// Relative accuracy is a few 1e-14 over the plane. In the lower half plane
/// `|w|` grows like `exp(y² - x²)` and overflows only where the true value
/// does.
pub fn faddeeva_w(z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        2.0 * (-z * z).exp() - upper_half(-z)
    } else {
        upper_half(z)
    }
}

/// Arguments of the Moshinsky function.
///
/// `x` is the position offset `r - a` (zero inside the interaction region),
/// `kappa` the complex pole and `t` the time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoshinskyArgs {
    pub x: f64,
    pub kappa: Complex64,
    pub t: f64,
}

impl MoshinskyArgs {
    pub fn new(x: f64, kappa: Complex64, t: f64) -> Self {
        Self { x, kappa, t }
    }

    /// Arguments at `r = a`, the form that enters the interior propagator.
    pub fn at_boundary(kappa: Complex64, t: f64) -> Self {
        Self { x: 0.0, kappa, t }
    }

    /// `y = e^{-iπ/4} (x - 2κt) / (2√t)`.
    pub fn y(&self) -> Complex64 {
        Complex64::from_polar(1.0, -FRAC_PI_4) * (self.x - 2.0 * self.kappa * self.t)
            / (2.0 * self.t.sqrt())
    }
}

/// `M(y) = (i/2π) ∫ e^{ikx} e^{-ik²t} / (k - κ) dk = ½ e^{ix²/4t} w(iy)`.
pub fn moshinsky_m(args: MoshinskyArgs) -> Result<Complex64> {
    check_t(args.t)?;
    Ok(moshinsky_unchecked(args.x, args.kappa, args.t, false))
}

/// `M(-y) = ½ e^{ix²/4t} w(-iy)`, the mirror that appears in the
/// exponential / non-exponential split `M(y) = e^{iκx - iκ²t} - M(-y)`.
pub fn moshinsky_m_mirror(args: MoshinskyArgs) -> Result<Complex64> {
    check_t(args.t)?;
    Ok(moshinsky_unchecked(args.x, args.kappa, args.t, true))
}

/// `M(y) - e^{ix²/4t} / (2√π y)`: the Moshinsky function with its leading
/// large-`|y|` term removed.
///
/// At `x = 0` the removed term is `c/(κ√t)` with `c = -i e^{-iπ/4}/(2√π)`
/// for every pole, so a resonant sum of these terms vanishes whenever the
/// weights obey `Σ w_n/κ_n = 0`.
pub fn moshinsky_m_subtracted(args: MoshinskyArgs) -> Result<Complex64> {
    check_t(args.t)?;
    Ok(moshinsky_kernel(args.x, args.kappa, args.t, false, true))
}

/// `M(-y) + e^{ix²/4t} / (2√π y)`, so that the subtracted pair still obeys
/// `M̃(y) = e^{iκx - iκ²t} - M̃(-y)`.
pub fn moshinsky_m_mirror_subtracted(args: MoshinskyArgs) -> Result<Complex64> {
    check_t(args.t)?;
    Ok(moshinsky_kernel(args.x, args.kappa, args.t, true, true))
}

fn check_t(t: f64) -> Result<()> {
    check_domain("t", t, t > 0.0 && t.is_finite(), "t > 0")
}

/// Core evaluation; `t > 0` is assumed.
pub(crate) fn moshinsky_unchecked(x: f64, kappa: Complex64, t: f64, mirror: bool) -> Complex64 {
    moshinsky_kernel(x, kappa, t, mirror, false)
}

/// Whichever of `±iy` lies in the lower half plane is rewritten through the
/// reflection identity, where `½ e^{ix²/4t} · 2e^{y²}` collapses to
/// `e^{iκx - iκ²t}`. The leading term `i/(√π z)` is odd in `z`, so the
/// same rewrite holds for the subtracted kernel.
pub(crate) fn moshinsky_kernel(
    x: f64,
    kappa: Complex64,
    t: f64,
    mirror: bool,
    subtract: bool,
) -> Complex64 {
    let sqrt_t = t.sqrt();
    let iy = Complex64::from_polar(1.0, FRAC_PI_4) * (x - 2.0 * kappa * t) / (2.0 * sqrt_t);
    let z = if mirror { -iy } else { iy };
    let gauss = if x == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::from_polar(1.0, x * x / (4.0 * t))
    };
    let w = |z: Complex64| {
        if subtract {
            upper_half_tail(z)
        } else {
            upper_half(z)
        }
    };
    if z.im >= 0.0 {
        0.5 * gauss * w(z)
    } else {
        let plane = (Complex64::i() * kappa * x - Complex64::i() * kappa * kappa * t).exp();
        plane - 0.5 * gauss * w(-z)
    }
}
