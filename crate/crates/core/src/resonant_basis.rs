//! Resonant expansion of an initial state confined to `0 ≤ r ≤ a`.
//!
//! `C_n = ∫ ψ(r) u_n(r) dr` and `C̄_n = ∫ ψ*(r) u_n(r) dr`; the mirror poles
//! contribute `C_{-n} = C̄_n*` and `C̄_{-n} = C_n*`. For real `ψ` the two
//! coefficients coincide.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::delta_shell::{find_poles, normalize, PoleSet, ResonantState, ShellPotential};
use crate::error::{check_domain, Error, Result};
use crate::output::{row, sci};
use crate::quadrature::GaussLegendre;

/// Default hard limit for [`choose_truncation`].
pub const DEFAULT_TRUNCATION_CAP: usize = 500;

const OVERLAP_TOL: f64 = 1e-10;

/// Poles `1..N` with their normalized states.
#[derive(Debug, Clone)]
pub struct ResonantBasis {
    poles: PoleSet,
    states: Vec<ResonantState>,
}

impl ResonantBasis {
    pub fn new(p: &ShellPotential, n: usize) -> Result<Self> {
        let poles = find_poles(p, n)?;
        let states = poles
            .poles()
            .par_iter()
            .map(|pole| normalize(pole, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { poles, states })
    }

    pub fn potential(&self) -> &ShellPotential {
        self.poles.potential()
    }

    pub fn poles(&self) -> &PoleSet {
        &self.poles
    }

    pub fn states(&self) -> &[ResonantState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `τ₁ = 1/Γ₁`, the lifetime of the narrowest resonance.
    pub fn lifetime(&self) -> f64 {
        self.poles.poles()[0].lifetime()
    }
}

/// Natural cubic spline through complex samples on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
struct ComplexSpline {
    h: f64,
    y: Vec<Complex64>,
    m: Vec<Complex64>,
}

impl ComplexSpline {
    fn new(a: f64, y: Vec<Complex64>) -> Self {
        let n = y.len();
        let h = a / (n - 1) as f64;
        let mut m = vec![Complex64::new(0.0, 0.0); n];
        if n > 2 {
            // Thomas algorithm for M_{j-1} + 4M_j + M_{j+1} = 6Δ²y_j/h².
            let k = n - 2;
            let mut c = vec![0.0; k];
            let mut d = vec![Complex64::new(0.0, 0.0); k];
            for i in 0..k {
                let rhs = (y[i + 2] - 2.0 * y[i + 1] + y[i]) * (6.0 / (h * h));
                let denom = 4.0 - if i > 0 { c[i - 1] } else { 0.0 };
                c[i] = 1.0 / denom;
                d[i] = (rhs - if i > 0 { d[i - 1] } else { Complex64::new(0.0, 0.0) }) / denom;
            }
            m[k] = d[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = d[i] - c[i] * m[i + 2];
            }
        }
        Self { h, y, m }
    }

    fn segments(&self) -> usize {
        self.y.len() - 1
    }

    fn eval(&self, r: f64) -> Complex64 {
        let j = ((r / self.h).floor().max(0.0) as usize).min(self.segments() - 1);
        self.eval_in(j, r)
    }

    fn eval_in(&self, j: usize, r: f64) -> Complex64 {
        let h = self.h;
        let a = ((j + 1) as f64 * h - r) / h;
        let b = 1.0 - a;
        a * self.y[j]
            + b * self.y[j + 1]
            + ((a * a * a - a) * self.m[j] + (b * b * b - b) * self.m[j + 1]) * (h * h / 6.0)
    }

    fn scale(&mut self, s: f64) {
        for v in self.y.iter_mut().chain(self.m.iter_mut()) {
            *v *= s;
        }
    }

    /// `∫ g(r, ψ(r)) dr` with an `order`-point rule on every segment.
    fn integrate<G: Fn(f64, Complex64) -> Complex64>(&self, order: usize, g: G) -> Complex64 {
        let rule = GaussLegendre::cached(order);
        let mut total = Complex64::new(0.0, 0.0);
        for j in 0..self.segments() {
            let lo = j as f64 * self.h;
            let hi = lo + self.h;
            for (r, w) in rule.mapped(lo, hi) {
                total += w * g(r, self.eval_in(j, r));
            }
        }
        total
    }

    /// As [`integrate`] with the per-segment order doubled until the result
    /// moves by less than `tol`.
    fn integrate_converged<G: Fn(f64, Complex64) -> Complex64>(
        &self,
        what: &'static str,
        start: usize,
        tol: f64,
        g: G,
    ) -> Result<Complex64> {
        let mut order = start.max(4);
        let mut prev = self.integrate(order, &g);
        let mut change = f64::INFINITY;
        for _ in 0..8 {
            order *= 2;
            let next = self.integrate(order, &g);
            change = (next - prev).norm();
            if change <= tol {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::QuadratureNotConverged { what, change })
    }
}

/// Which family an [`InitialState`] comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// `√(2/a) sin(απr/a)`.
    BoxEigenstate { alpha: u32 },
    /// Natural cubic spline through uniform samples.
    Tabulated,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Box { alpha: u32, q: f64 },
    Spline(ComplexSpline),
}

/// Normalized one-particle state on `[0, a]` with `ψ(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    a: f64,
    shape: Shape,
    real: bool,
}

/// `sin(z a)/z`, continuous through `z = 0`.
fn sin_ratio(z: Complex64, a: f64) -> Complex64 {
    let za = z * a;
    if za.norm() < 1e-4 {
        a * (1.0 - za * za / 6.0 + za * za * za * za / 120.0)
    } else {
        za.sin() / z
    }
}

/// `∫₀ᵃ sin(q r) sin(k r) dr` for real `q` and complex `k`.
pub fn sine_sine_overlap(q: f64, k: Complex64, a: f64) -> Complex64 {
    0.5 * (sin_ratio(k - q, a) - sin_ratio(k + q, a))
}

impl InitialState {
    /// Infinite-box eigenstate `√(2/a) sin(απr/a)`, `α ≥ 1`.
    pub fn box_eigenstate(alpha: u32, a: f64) -> Result<Self> {
        if alpha == 0 {
            return Err(Error::InvalidParameter("box index alpha must be >= 1".into()));
        }
        check_domain("a", a, a > 0.0 && a.is_finite(), "(0, inf)")?;
        Ok(Self {
            a,
            shape: Shape::Box {
                alpha,
                q: alpha as f64 * PI / a,
            },
            real: true,
        })
    }

    /// State through samples at `r_j = j a/(M-1)`, `j = 0..M-1`, rescaled to
    /// unit norm. The first sample must vanish.
    pub fn tabulated(a: f64, samples: &[Complex64]) -> Result<Self> {
        check_domain("a", a, a > 0.0 && a.is_finite(), "(0, inf)")?;
        if samples.len() < 4 {
            return Err(Error::InvalidParameter(
                "tabulated state needs at least 4 samples".into(),
            ));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter("tabulated state has non-finite samples".into()));
        }
        let peak = samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return Err(Error::InvalidParameter("tabulated state is identically zero".into()));
        }
        if samples[0].norm() > 1e-12 * peak {
            return Err(Error::InvalidParameter(
                "tabulated state must vanish at r = 0".into(),
            ));
        }
        let mut y = samples.to_vec();
        y[0] = Complex64::new(0.0, 0.0);
        let real = y.iter().all(|v| v.im == 0.0);
        let mut spline = ComplexSpline::new(a, y);
        // |ψ|² is a degree-6 polynomial per segment: 4 nodes are exact.
        let norm_sq = spline.integrate(4, |_, v| Complex64::new(v.norm_sqr(), 0.0)).re;
        spline.scale(1.0 / norm_sq.sqrt());
        Ok(Self {
            a,
            shape: Shape::Spline(spline),
            real,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn kind(&self) -> InitialKind {
        match self.shape {
            Shape::Box { alpha, .. } => InitialKind::BoxEigenstate { alpha },
            Shape::Spline(_) => InitialKind::Tabulated,
        }
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// `ψ(r)` for `0 ≤ r ≤ a`.
    pub fn eval(&self, r: f64) -> Result<Complex64> {
        check_domain("r", r, (0.0..=self.a).contains(&r), "[0, a]")?;
        Ok(self.value(r))
    }

    /// `ψ(r)` without the domain check.
    pub fn value(&self, r: f64) -> Complex64 {
        match &self.shape {
            Shape::Box { q, .. } => Complex64::new((2.0 / self.a).sqrt() * (q * r).sin(), 0.0),
            Shape::Spline(s) => s.eval(r),
        }
    }

    /// `∫₀ᵃ |ψ|² dr`; exactly 1 for box states.
    pub fn norm_sq(&self) -> f64 {
        match &self.shape {
            Shape::Box { .. } => 1.0,
            Shape::Spline(s) => s.integrate(4, |_, v| Complex64::new(v.norm_sqr(), 0.0)).re,
        }
    }

    /// Intervals on which `ψ` is smooth.
    pub(crate) fn panels(&self) -> Vec<(f64, f64)> {
        match &self.shape {
            Shape::Box { .. } => vec![(0.0, self.a)],
            Shape::Spline(s) => (0..s.segments())
                .map(|j| (j as f64 * s.h, (j + 1) as f64 * s.h))
                .collect(),
        }
    }

    /// `(∫ ψ sin(kr) dr, ∫ ψ* sin(kr) dr)` over `[0, a]`.
    pub fn sine_overlaps(&self, k: Complex64) -> Result<(Complex64, Complex64)> {
        match &self.shape {
            Shape::Box { q, .. } => {
                let v = (2.0 / self.a).sqrt() * sine_sine_overlap(*q, k, self.a);
                Ok((v, v))
            }
            Shape::Spline(s) => {
                let start = 8 + (k.norm() * s.h).ceil() as usize;
                let direct = s.integrate_converged("overlap", start, OVERLAP_TOL, |r, v| {
                    v * (k * r).sin()
                })?;
                if self.real {
                    return Ok((direct, direct));
                }
                let conj = s.integrate_converged("overlap", start, OVERLAP_TOL, |r, v| {
                    v.conj() * (k * r).sin()
                })?;
                Ok((direct, conj))
            }
        }
    }

    /// `⟨self|other⟩ = ∫ self* other dr`.
    pub fn inner(&self, other: &InitialState) -> Result<Complex64> {
        if (self.a - other.a).abs() > 1e-15 * self.a {
            return Err(Error::InvalidParameter("states live on different intervals".into()));
        }
        match (&self.shape, &other.shape) {
            (Shape::Box { alpha: x, .. }, Shape::Box { alpha: y, .. }) => {
                Ok(Complex64::new(if x == y { 1.0 } else { 0.0 }, 0.0))
            }
            (Shape::Spline(s), _) => s.integrate_converged("inner product", 8, 1e-13, |r, v| {
                v.conj() * other.value(r)
            }),
            (_, Shape::Spline(s)) => s.integrate_converged("inner product", 8, 1e-13, |r, v| {
                self.value(r).conj() * v
            }),
        }
    }
}

/// `(C_n, C̄_n)` for one resonant state.
pub fn coefficient(state: &ResonantState, psi: &InitialState) -> Result<(Complex64, Complex64)> {
    let (c, c_bar) = psi.sine_overlaps(state.kappa())?;
    Ok((state.norm_const() * c, state.norm_const() * c_bar))
}

/// One row of a [`CoefficientSet`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientEntry {
    pub n: i64,
    pub c: Complex64,
    pub c_bar: Complex64,
    /// `Re(C_n C̄_n)`.
    pub strength: f64,
}

/// Coefficients for `n = 1..N_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    entries: Vec<CoefficientEntry>,
}

impl CoefficientSet {
    pub fn compute(basis: &ResonantBasis, psi: &InitialState) -> Result<Self> {
        if (psi.a() - basis.potential().a()).abs() > 1e-15 * psi.a() {
            return Err(Error::InvalidParameter(
                "initial state and potential use different radii".into(),
            ));
        }
        let entries = basis
            .states()
            .par_iter()
            .map(|s| {
                let (c, c_bar) = coefficient(s, psi)?;
                Ok(CoefficientEntry {
                    n: s.pole().index,
                    c,
                    c_bar,
                    strength: (c * c_bar).re,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[CoefficientEntry] {
        &self.entries
    }

    /// Truncation order `N_max`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// First `n` entries.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            entries: self.entries[..n.min(self.entries.len())].to_vec(),
        }
    }

    /// Running sums of `Re(C_n C̄_n)`.
    pub fn cumulative_strength(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.entries
            .iter()
            .map(|e| {
                acc += e.strength;
                acc
            })
            .collect()
    }

    /// CSV with columns `n, re_c, im_c, strength, cumulative_strength`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(b"n,re_c,im_c,strength,cumulative_strength\n")?;
        for (e, cum) in self.entries.iter().zip(self.cumulative_strength()) {
            out.write_all(
                row([
                    e.n.to_string(),
                    sci(e.c.re),
                    sci(e.c.im),
                    sci(e.strength),
                    sci(cum),
                ])
                .as_bytes(),
            )?;
        }
        Ok(())
    }
}

/// `Re Σ_{n=1}^{N} C_n C̄_n`.
pub fn strength_sum(coeffs: &CoefficientSet) -> f64 {
    coeffs.entries.iter().map(|e| e.strength).sum()
}

/// Smallest `N ≤ 500` with `|1 - strength_sum(N)| ≤ tol`.
pub fn choose_truncation(p: &ShellPotential, psi: &InitialState, tol: f64) -> Result<usize> {
    choose_truncation_capped(p, psi, tol, DEFAULT_TRUNCATION_CAP)
}

/// [`choose_truncation`] with an explicit cap.
pub fn choose_truncation_capped(
    p: &ShellPotential,
    psi: &InitialState,
    tol: f64,
    cap: usize,
) -> Result<usize> {
    check_domain("tol", tol, tol > 0.0 && tol < 1.0, "(0, 1)")?;
    if cap == 0 {
        return Err(Error::InvalidParameter("truncation cap must be >= 1".into()));
    }
    let basis = ResonantBasis::new(p, cap)?;
    let coeffs = CoefficientSet::compute(&basis, psi)?;
    let cumulative = coeffs.cumulative_strength();
    match cumulative.iter().position(|s| (1.0 - s).abs() <= tol) {
        Some(i) => Ok(i + 1),
        None => Err(Error::TruncationCapReached {
            cap,
            deficit: 1.0 - cumulative[cap - 1],
        }),
    }
}

/// Partial sums over `|n| ≤ N` (mirror poles included) of the closure
/// relation and the two sum rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumRules {
    pub n: usize,
    /// `Σ w_n`
    pub closure: Complex64,
    /// `Σ w_n / κ_n`
    pub inverse_kappa: Complex64,
    /// `Σ w_n κ_n`
    pub kappa: Complex64,
}

/// Sum rules with weights `w_n = u_n(r) u_n(r')`.
pub fn pointwise_sum_rules(basis: &ResonantBasis, r: f64, r_prime: f64, n: usize) -> SumRules {
    paired_sums(basis, n, |s| (s.value(r) * s.value(r_prime), None))
}

/// Sum rules with weights `w_n = C_{n,s} C_{n,t}`, i.e. the pointwise rules
/// integrated against `ψ_s(r) ψ_t(r')`.
pub fn smeared_sum_rules(
    basis: &ResonantBasis,
    cs: &CoefficientSet,
    ct: &CoefficientSet,
    n: usize,
) -> SumRules {
    let es = cs.entries();
    let et = ct.entries();
    paired_sums(basis, n.min(es.len()).min(et.len()), |st| {
        let i = (st.pole().index - 1) as usize;
        (
            es[i].c * et[i].c,
            Some((es[i].c_bar * et[i].c_bar).conj()),
        )
    })
}

/// Adds each pole and its mirror. `weight` returns `w_n` and optionally
/// `w_{-n}`; by default `w_{-n} = w_n*`.
fn paired_sums<F>(basis: &ResonantBasis, n: usize, weight: F) -> SumRules
where
    F: Fn(&ResonantState) -> (Complex64, Option<Complex64>),
{
    let zero = Complex64::new(0.0, 0.0);
    let mut out = SumRules {
        n,
        closure: zero,
        inverse_kappa: zero,
        kappa: zero,
    };
    for s in &basis.states()[..n.min(basis.len())] {
        let k = s.kappa();
        let km = -k.conj();
        let (w, wm) = weight(s);
        let wm = wm.unwrap_or(w.conj());
        out.closure += w + wm;
        out.inverse_kappa += w / k + wm / km;
        out.kappa += w * k + wm * km;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin_ratio_is_smooth_through_zero() {
        let a = 1.3;
        let at0 = sin_ratio(Complex64::new(0.0, 0.0), a);
        assert_eq!(at0, Complex64::new(a, 0.0));
        for &th in &[0.0, 0.7, 2.0] {
            let z = Complex64::from_polar(1e-4 / a * 0.999, th);
            let direct = (z * a).sin() / z;
            assert!((sin_ratio(z, a) - direct).norm() < 1e-15);
        }
    }

    #[test]
    fn natural_spline_is_exact_for_linear_data() {
        let a = 2.0;
        let y: Vec<Complex64> = (0..9)
            .map(|j| Complex64::new(0.25 * j as f64, -0.5 * j as f64))
            .collect();
        let s = ComplexSpline::new(a, y);
        for &r in &[0.0, 0.3, 1.1, 2.0] {
            let want = Complex64::new(r, -2.0 * r);
            assert!((s.eval(r) - want).norm() < 1e-14, "r={r}");
        }
    }
}
