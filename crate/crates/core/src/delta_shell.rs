//! The delta-shell potential `V(r) = λ δ(r - a)` for s-waves.
//!
//! Resonant states solve `-u'' = κ² u` inside the shell with `u(0) = 0`, are
//! purely outgoing outside, and satisfy the jump `u'(a+) - u'(a-) = λ u(a)`.
//! This gives the pole equation
//!
//! ```text
//! f(κ) = λ (e^{2iκa} - 1) + 2iκ = 0
//! ```
//!
//! whose roots with `Re κ > 0` lie in the fourth quadrant for `λ > 0`.
//! Their third-quadrant partners `-κ*` are generated on demand.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_domain, Error, Result};
use crate::output::{row, sci};
use crate::quadrature::{gauss_legendre_converged, ordered_sum};

const NEWTON_MAX_ITER: usize = 50;
const NEWTON_TOL: f64 = 1e-14;
const RESIDUAL_TOL: f64 = 1e-10;
const CONTINUATION_START: f64 = 1e6;

/// Repulsive delta shell of strength `lambda` at radius `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellPotential {
    lambda: f64,
    a: f64,
}

impl ShellPotential {
    pub fn new(lambda: f64, a: f64) -> Result<Self> {
        check_domain("lambda", lambda, lambda > 0.0 && lambda.is_finite(), "(0, inf)")?;
        check_domain("a", a, a > 0.0 && a.is_finite(), "(0, inf)")?;
        Ok(Self { lambda, a })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Large-`n` asymptotic root, used as the Newton starting point.
    pub fn initial_guess(&self, n: i64) -> Complex64 {
        let nf = n as f64;
        let a = self.a;
        Complex64::new(
            nf * PI / a,
            -(1.0 + 2.0 * nf * PI / (self.lambda * a)).ln() / (2.0 * a),
        )
    }

    /// Accepted size of `|f(κ)|` at a converged root: the fixed tolerance plus
    /// the rounding floor of `λ e^{2iκa}`, whose phase `2κa` carries an
    /// absolute error growing with `|κ|`.
    pub fn residual_tolerance(&self, kappa: Complex64) -> f64 {
        let i = Complex64::i();
        let big = self.lambda * (2.0 * i * kappa * self.a).exp().norm();
        let floor = 16.0
            * f64::EPSILON
            * (self.lambda + big * (1.0 + 2.0 * kappa.norm() * self.a) + 2.0 * kappa.norm());
        self.lambda * RESIDUAL_TOL + floor
    }

    /// Index of the logarithmic branch a root belongs to:
    /// `2κa = arg(1 - 2iκ/λ) + 2πn - i ln|1 - 2iκ/λ|`.
    pub fn branch_index(&self, kappa: Complex64) -> i64 {
        let rhs = 1.0 - 2.0 * Complex64::i() * kappa / self.lambda;
        ((2.0 * kappa.re * self.a - rhs.arg()) / (2.0 * PI)).round() as i64
    }
}

/// `λ (e^{2iκa} - 1) + 2iκ`; zero exactly at the poles (and at `κ = 0`).
pub fn pole_equation_residual(p: &ShellPotential, kappa: Complex64) -> Complex64 {
    let i = Complex64::i();
    p.lambda * ((2.0 * i * kappa * p.a).exp() - 1.0) + 2.0 * i * kappa
}

fn pole_equation_derivative(p: &ShellPotential, kappa: Complex64) -> Complex64 {
    let i = Complex64::i();
    2.0 * i * p.a * p.lambda * (2.0 * i * kappa * p.a).exp() + 2.0 * i
}

/// `f(κ)/κ`, analytic at the origin, nonzero on the imaginary axis.
fn reduced_pole_function(p: &ShellPotential, kappa: Complex64) -> Complex64 {
    let i = Complex64::i();
    let z = 2.0 * i * kappa * p.a;
    if z.norm() < 0.5 {
        // (e^z - 1)/z = Σ z^k/(k+1)!
        let mut term = Complex64::new(1.0, 0.0);
        let mut s = term;
        for k in 1..20 {
            term *= z / (k as f64 + 1.0);
            s += term;
        }
        p.lambda * 2.0 * i * p.a * s + 2.0 * i
    } else {
        p.lambda * (z.exp() - 1.0) / kappa + 2.0 * i
    }
}

/// A fourth-quadrant pole `κ_n = a_n - i b_n` (or, for negative index, its
/// mirror `κ_{-n} = -κ_n*`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pole {
    pub index: i64,
    pub kappa: Complex64,
}

impl Pole {
    /// `E_n = κ_n² = 𝓔_n - iΓ_n/2`.
    pub fn energy(&self) -> Complex64 {
        self.kappa * self.kappa
    }

    pub fn width(&self) -> f64 {
        -2.0 * self.energy().im
    }

    pub fn resonance_energy(&self) -> f64 {
        self.energy().re
    }

    /// The time-reversed partner `-κ*` with index `-n`.
    pub fn mirror(&self) -> Pole {
        Pole {
            index: -self.index,
            kappa: -self.kappa.conj(),
        }
    }

    /// Lifetime `1/Γ`.
    pub fn lifetime(&self) -> f64 {
        1.0 / self.width()
    }
}

/// Result of the argument-principle count on `[0, X] × [-depth, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoleAudit {
    pub count: i64,
    /// Winding number before rounding; should be within a hair of `count`.
    pub winding: f64,
    pub x_max: f64,
    pub depth: f64,
    pub height: f64,
}

/// Poles `n = 1..N` of one potential, ordered by `Re κ`.
#[derive(Debug, Clone)]
pub struct PoleSet {
    potential: ShellPotential,
    poles: Vec<Pole>,
    audit: PoleAudit,
}

impl PoleSet {
    pub fn potential(&self) -> &ShellPotential {
        &self.potential
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    /// Pole with index `n` (1-based).
    pub fn get(&self, n: usize) -> Option<&Pole> {
        n.checked_sub(1).and_then(|i| self.poles.get(i))
    }

    pub fn audit(&self) -> &PoleAudit {
        &self.audit
    }

    pub fn max_residual(&self) -> f64 {
        self.poles
            .iter()
            .map(|p| pole_equation_residual(&self.potential, p.kappa).norm())
            .fold(0.0, f64::max)
    }

    /// CSV with columns `n, re_kappa, im_kappa, resonance_energy, width`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(b"n,re_kappa,im_kappa,resonance_energy,width\n")?;
        for p in &self.poles {
            out.write_all(
                row([
                    p.index.to_string(),
                    sci(p.kappa.re),
                    sci(p.kappa.im),
                    sci(p.resonance_energy()),
                    sci(p.width()),
                ])
                .as_bytes(),
            )?;
        }
        Ok(())
    }
}

enum NewtonOutcome {
    Converged(Complex64),
    Failed(Complex64),
}

fn newton(p: &ShellPotential, mut kappa: Complex64) -> NewtonOutcome {
    for _ in 0..NEWTON_MAX_ITER {
        let step = pole_equation_residual(p, kappa) / pole_equation_derivative(p, kappa);
        if !step.is_finite() {
            return NewtonOutcome::Failed(kappa);
        }
        kappa -= step;
        if step.norm() <= NEWTON_TOL * (1.0 + kappa.norm()) {
            return NewtonOutcome::Converged(kappa);
        }
    }
    NewtonOutcome::Failed(kappa)
}

fn accept(p: &ShellPotential, n: i64, kappa: Complex64) -> bool {
    kappa.re > 0.0
        && kappa.im < 0.0
        && p.branch_index(kappa) == n
        && pole_equation_residual(p, kappa).norm() <= p.residual_tolerance(kappa)
}

/// Follows root `n` from the nearly impenetrable shell `λ = 10⁶` down (or up)
/// to the requested strength, one Newton solve per step, shrinking the step
/// whenever the root jumps branch.
pub(crate) fn continue_pole(p: &ShellPotential, n: i64) -> Result<Complex64> {
    let target = p.lambda.ln();
    let mut log_lam = CONTINUATION_START.ln();
    let start = ShellPotential {
        lambda: CONTINUATION_START,
        a: p.a,
    };
    let mut kappa = match newton(&start, start.initial_guess(n)) {
        NewtonOutcome::Converged(k) if accept(&start, n, k) => k,
        NewtonOutcome::Converged(k) | NewtonOutcome::Failed(k) => {
            return Err(Error::NonConvergence { index: n, last: k })
        }
    };
    let mut step = 0.5_f64;
    for _ in 0..10_000 {
        if log_lam == target {
            return Ok(kappa);
        }
        let next = if target < log_lam {
            (log_lam - step).max(target)
        } else {
            (log_lam + step).min(target)
        };
        // Land exactly on the requested λ at the last step.
        let trial = if next == target {
            *p
        } else {
            ShellPotential {
                lambda: next.exp(),
                a: p.a,
            }
        };
        match newton(&trial, kappa) {
            NewtonOutcome::Converged(k) if accept(&trial, n, k) => {
                kappa = k;
                log_lam = next;
                step = (step * 1.5).min(1.0);
            }
            _ => {
                step *= 0.5;
                if step < 1e-8 {
                    break;
                }
            }
        }
    }
    Err(Error::NonConvergence {
        index: n,
        last: kappa,
    })
}

fn solve_pole(p: &ShellPotential, n: i64) -> Result<Complex64> {
    match newton(p, p.initial_guess(n)) {
        NewtonOutcome::Converged(k) if accept(p, n, k) => Ok(k),
        _ => continue_pole(p, n),
    }
}

/// Phase change of `g` from `z0` to `z1`, tracked in steps of at most
/// `max_step` and bisected until each increment is below π/4.
fn phase_along<G: Fn(Complex64) -> Complex64>(
    g: &G,
    z0: Complex64,
    z1: Complex64,
    max_step: f64,
) -> f64 {
    let length = (z1 - z0).norm();
    if length == 0.0 {
        return 0.0;
    }
    let dir = (z1 - z0) / length;
    let mut s = 0.0;
    let mut gs = g(z0);
    let mut h = max_step;
    let mut total = 0.0;
    while s < length {
        let s_next = (s + h).min(length);
        let z = if s_next == length { z1 } else { z0 + dir * s_next };
        let g_next = g(z);
        let d = (g_next / gs).arg();
        if d.abs() > PI / 4.0 && h > 1e-12 * (1.0 + length) {
            h *= 0.5;
            continue;
        }
        total += d;
        s = s_next;
        gs = g_next;
        h = (h * 2.0).min(max_step);
    }
    total
}

/// Winding number of `f(κ)/κ` around `[0, x_max] × [-depth, height]`,
/// counterclockwise; equals the number of poles inside.
pub fn argument_principle_count(
    p: &ShellPotential,
    x_max: f64,
    depth: f64,
    height: f64,
) -> PoleAudit {
    let g = |k: Complex64| reduced_pole_function(p, k);
    let step = PI / (10.0 * p.a);
    let corners = [
        Complex64::new(0.0, -depth),
        Complex64::new(x_max, -depth),
        Complex64::new(x_max, height),
        Complex64::new(0.0, height),
    ];
    // Each edge is cut into fixed pieces tracked independently, so long
    // contours parallelize without changing the result.
    let piece = 4096.0 * step;
    let mut segments = Vec::new();
    for e in 0..4 {
        let (z0, z1) = (corners[e], corners[(e + 1) % 4]);
        let len = (z1 - z0).norm();
        let pieces = (len / piece).ceil().max(1.0) as usize;
        for j in 0..pieces {
            let a = z0 + (z1 - z0) * (j as f64 / pieces as f64);
            let b = if j + 1 == pieces {
                z1
            } else {
                z0 + (z1 - z0) * ((j + 1) as f64 / pieces as f64)
            };
            segments.push((a, b));
        }
    }
    let total = ordered_sum(segments.len(), 1, |i| {
        let (a, b) = segments[i];
        Complex64::new(phase_along(&g, a, b, step), 0.0)
    })
    .re;
    let winding = total / (2.0 * PI);
    PoleAudit {
        count: winding.round() as i64,
        winding,
        x_max,
        depth,
        height,
    }
}

/// Poles `n = 1..n_max` by Newton iteration from the asymptotic guess, with
/// λ-continuation as fallback, certified by the argument principle.
pub fn find_poles(p: &ShellPotential, n_max: usize) -> Result<PoleSet> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    // One extra root places the right edge of the counting contour.
    let roots: Vec<Result<Complex64>> = (1..=n_max as i64 + 1)
        .into_par_iter()
        .map(|n| solve_pole(p, n))
        .collect();
    let mut kappas = Vec::with_capacity(n_max + 1);
    for r in roots {
        kappas.push(r?);
    }
    for w in kappas.windows(2) {
        if !(w[1].re > w[0].re) {
            return Err(Error::InvalidParameter(format!(
                "poles not strictly ordered: {} then {}",
                w[0], w[1]
            )));
        }
    }
    let deepest = kappas[..n_max].iter().map(|k| -k.im).fold(0.0, f64::max);
    let x_max = 0.5 * (kappas[n_max - 1].re + kappas[n_max].re);
    let audit = argument_principle_count(p, x_max, 1.5 * deepest + 1.0 / p.a, 1.0 / p.a);
    if audit.count != n_max as i64 {
        return Err(Error::MissedPole {
            expected: n_max,
            found: audit.count,
        });
    }
    let poles = kappas[..n_max]
        .iter()
        .enumerate()
        .map(|(i, &kappa)| Pole {
            index: i as i64 + 1,
            kappa,
        })
        .collect();
    Ok(PoleSet {
        potential: *p,
        poles,
        audit,
    })
}

/// Normalized resonant state `u_n(r) = A_n sin(κ_n r)` on `[0, a]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonantState {
    pole: Pole,
    norm_const: Complex64,
    potential: ShellPotential,
}

/// Fixes `A_n` from `∫₀ᵃ u² dr + i u(a)²/(2κ) = 1`.
///
/// `Re A > 0` for fourth-quadrant poles. Mirror poles take `A_{-n} = -A_n*`
/// so that `u_{-n}(r) = u_n(r)*`.
pub fn normalize(pole: &Pole, p: &ShellPotential) -> Result<ResonantState> {
    let k = pole.kappa;
    let a = p.a;
    let s = (k * a).sin();
    let inv = a / 2.0 - (2.0 * k * a).sin() / (4.0 * k) + Complex64::i() * s * s / (2.0 * k);
    if !(inv.norm() >= 1e-14) {
        return Err(Error::DegenerateNorm { index: pole.index });
    }
    let mut norm_const = (1.0 / inv).sqrt();
    let want_positive = pole.index >= 0;
    if (norm_const.re > 0.0) != want_positive {
        norm_const = -norm_const;
    }
    Ok(ResonantState {
        pole: *pole,
        norm_const,
        potential: *p,
    })
}

impl ResonantState {
    pub fn pole(&self) -> &Pole {
        &self.pole
    }

    pub fn kappa(&self) -> Complex64 {
        self.pole.kappa
    }

    pub fn norm_const(&self) -> Complex64 {
        self.norm_const
    }

    fn check_interior(&self, r: f64) -> Result<()> {
        check_domain("r", r, (0.0..=self.potential.a).contains(&r), "[0, a]")
    }

    /// `u_n(r)` for `0 ≤ r ≤ a`.
    pub fn eval(&self, r: f64) -> Result<Complex64> {
        self.check_interior(r)?;
        Ok(self.value(r))
    }

    /// `u_n(r)` without the domain check.
    #[inline]
    pub fn value(&self, r: f64) -> Complex64 {
        self.norm_const * (self.pole.kappa * r).sin()
    }

    /// `u_n'(r)` from the inside, `0 ≤ r ≤ a`.
    pub fn derivative(&self, r: f64) -> Result<Complex64> {
        self.check_interior(r)?;
        Ok(self.norm_const * self.pole.kappa * (self.pole.kappa * r).cos())
    }

    /// Outgoing continuation `u(a) e^{iκ(r-a)}` for `r ≥ a`.
    pub fn exterior(&self, r: f64) -> Result<Complex64> {
        let a = self.potential.a;
        check_domain("r", r, r >= a && r.is_finite(), "[a, inf)")?;
        Ok(self.value(a) * (Complex64::i() * self.pole.kappa * (r - a)).exp())
    }

    /// `|∫₀ᵃ u² dr + i u(a)²/(2κ) - 1|` with the integral done by quadrature.
    pub fn normalization_residual(&self) -> Result<f64> {
        let a = self.potential.a;
        let k = self.pole.kappa;
        let start = 16 + (k.norm() * a).ceil() as usize;
        let ua = self.value(a);
        // Both terms grow like e^{2|Im κ| a}; the cutoff is relative to that.
        let scale = 1.0 + (ua * ua / (2.0 * k)).norm();
        let integral = gauss_legendre_converged("normalization integral", 0.0, a, start, 1e-12 * scale, |r| {
            let u = self.value(r);
            u * u
        })?;
        Ok((integral + Complex64::i() * ua * ua / (2.0 * k) - 1.0).norm())
    }

    /// State of the mirror pole, `u_{-n}(r) = u_n(r)*`.
    pub fn mirror(&self) -> ResonantState {
        ResonantState {
            pole: self.pole.mirror(),
            norm_const: -self.norm_const.conj(),
            potential: self.potential,
        }
    }
}
