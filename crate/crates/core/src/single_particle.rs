//! One particle released from the interaction region at `t = 0`.
//!
//! Inside the shell
//! `Ψ(r,t) = Σ_{n=1}^{N} [C_n u_n(r) M(y°_n) + C_{-n} u_{-n}(r) M(y°_{-n})]`,
//! where `y°` is the Moshinsky argument at `r = a` and the mirror terms use
//! `u_{-n} = u_n*`, `κ_{-n} = -κ_n*` and `C_{-n} = C̄_n*`.

use std::io::{self, Write};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delta_shell::ResonantState;
use crate::error::{check_domain, Error, Result};
use crate::output::{row, sci};
use crate::quadrature::{ordered_sum, GaussLegendre};
use crate::resonant_basis::{CoefficientEntry, CoefficientSet, InitialState, ResonantBasis};
use crate::specfun::moshinsky_kernel;

/// Fixed chunk for pole sums, so results do not depend on the thread count.
pub(crate) const CHUNK: usize = 4096;

/// Largest node-by-pole table kept in memory for grid integrals.
const TABLE_LIMIT: usize = 1 << 22;

pub(crate) fn check_time(t: f64) -> Result<()> {
    check_domain("t", t, t >= 0.0 && t.is_finite(), "[0, inf)")
}

fn check_positive_time(t: f64) -> Result<()> {
    check_domain("t", t, t > 0.0 && t.is_finite(), "(0, inf)")
}

/// How the Moshinsky factors enter a truncated resonant sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Summation {
    /// `Σ w_n M(y°_n)` term by term.
    Plain,
    /// `Σ w_n [M(y°_n) - c/(κ_n√t)]`. Equal to the plain series when all
    /// poles are kept, because `Σ_n C_n u_n(r)/κ_n = 0` inside the shell.
    /// Truncating it leaves no `t^{-1/2}` remainder.
    #[default]
    Subtracted,
}

impl Summation {
    fn subtract(self) -> bool {
        self == Summation::Subtracted
    }
}

/// `M(y°_n)` and `M(y°_{-n})` for `n = 1..N` at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeKernel {
    t: f64,
    plus: Vec<Complex64>,
    minus: Vec<Complex64>,
}

impl TimeKernel {
    pub fn new(states: &[ResonantState], t: f64, summation: Summation) -> Result<Self> {
        check_positive_time(t)?;
        let sub = summation.subtract();
        let (plus, minus) = states
            .par_iter()
            .map(|s| {
                let k = s.kappa();
                (
                    moshinsky_kernel(0.0, k, t, false, sub),
                    moshinsky_kernel(0.0, -k.conj(), t, false, sub),
                )
            })
            .unzip();
        Ok(Self { t, plus, minus })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn plus(&self) -> &[Complex64] {
        &self.plus
    }

    pub fn minus(&self) -> &[Complex64] {
        &self.minus
    }
}

/// Rows for the split `M(y°) = e^{-iκ²t} - M(-y°)`. With
/// [`Summation::Subtracted`] both sides carry the subtraction.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitKernel {
    t: f64,
    plane: Vec<Complex64>,
    reflected: Vec<Complex64>,
    minus: Vec<Complex64>,
}

impl SplitKernel {
    pub fn new(states: &[ResonantState], t: f64, summation: Summation) -> Result<Self> {
        check_positive_time(t)?;
        let sub = summation.subtract();
        let rows: Vec<[Complex64; 3]> = states
            .par_iter()
            .map(|s| {
                let k = s.kappa();
                [
                    (-Complex64::i() * k * k * t).exp(),
                    moshinsky_kernel(0.0, k, t, true, sub),
                    moshinsky_kernel(0.0, -k.conj(), t, false, sub),
                ]
            })
            .collect();
        Ok(Self {
            t,
            plane: rows.iter().map(|r| r[0]).collect(),
            reflected: rows.iter().map(|r| r[1]).collect(),
            minus: rows.iter().map(|r| r[2]).collect(),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }
}

/// Exponential and non-exponential parts of a resonant sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Split {
    /// `Σ_{n≥1} w_n e^{-iκ_n²t}`
    pub exponential: Complex64,
    /// `-Σ_{n≥1} [w_n M(-y°_n) - w_{-n} M(y°_{-n})]`
    pub nonexponential: Complex64,
}

impl Split {
    pub fn total(&self) -> Complex64 {
        self.exponential + self.nonexponential
    }

    /// `|exponential| / |total|`.
    pub fn exponential_fraction(&self) -> f64 {
        self.exponential.norm() / self.total().norm()
    }
}

/// Weights `w_n`, `w_{-n}` of a resonant sum `Σ w_n M(y°_n) + w_{-n} M(y°_{-n})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    direct: Vec<Complex64>,
    mirrored: Vec<Complex64>,
}

impl Probe {
    /// `w_n = C_n u_n(r)`, `w_{-n} = (C̄_n u_n(r))*`.
    pub fn at(states: &[ResonantState], coeffs: &[CoefficientEntry], r: f64) -> Self {
        let (direct, mirrored) = states
            .iter()
            .zip(coeffs)
            .map(|(s, e)| {
                let u = s.value(r);
                (e.c * u, (e.c_bar * u).conj())
            })
            .unzip();
        Self { direct, mirrored }
    }

    /// `w_n = C̄_n C_n`, `w_{-n} = (C_n C̄_n)*`: the survival amplitude.
    pub fn overlap(coeffs: &[CoefficientEntry]) -> Self {
        let (direct, mirrored) = coeffs
            .iter()
            .map(|e| (e.c_bar * e.c, (e.c * e.c_bar).conj()))
            .unzip();
        Self { direct, mirrored }
    }

    /// `w_n = C_{n,s} C̄_{n,t}`-type weights from two coefficient sets:
    /// `⟨ψ_t|Ψ_s(t)⟩ = Σ C̄_{n,t} C_{n,s} M⁺ + (C_{n,t} C̄_{n,s})* M⁻`.
    pub fn cross_overlap(cs: &[CoefficientEntry], ct: &[CoefficientEntry]) -> Self {
        let (direct, mirrored) = cs
            .iter()
            .zip(ct)
            .map(|(s, t)| (t.c_bar * s.c, (t.c * s.c_bar).conj()))
            .unzip();
        Self { direct, mirrored }
    }

    pub fn len(&self) -> usize {
        self.direct.len()
    }

    pub fn is_empty(&self) -> bool {
        self.direct.is_empty()
    }

    pub fn amplitude(&self, k: &TimeKernel) -> Complex64 {
        let n = self.len().min(k.plus.len());
        ordered_sum(n, CHUNK, |i| {
            self.direct[i] * k.plus[i] + self.mirrored[i] * k.minus[i]
        })
    }

    pub fn split(&self, k: &SplitKernel) -> Split {
        let n = self.len().min(k.plane.len());
        let exponential = ordered_sum(n, CHUNK, |i| self.direct[i] * k.plane[i]);
        let rest = ordered_sum(n, CHUNK, |i| {
            self.direct[i] * k.reflected[i] - self.mirrored[i] * k.minus[i]
        });
        Split {
            exponential,
            nonexponential: -rest,
        }
    }

    /// `½ Σ (w_n + w_{-n})`, the `t → 0⁺` limit of the plain sum, since
    /// `M(y°) → 1/2` there.
    pub fn closure(&self) -> Complex64 {
        0.5 * ordered_sum(self.len(), CHUNK, |i| self.direct[i] + self.mirrored[i])
    }
}

/// Gauss-Legendre nodes on `[0, a]` that resolve `N` resonant terms.
///
/// One panel of `2N + 64` nodes for a box state, otherwise `4 + ⌈2N/M⌉`
/// nodes on each of the `M` spline segments.
pub(crate) fn spatial_rule(psi: &InitialState, n: usize) -> Vec<(f64, f64)> {
    let panels = psi.panels();
    let order = if panels.len() == 1 {
        2 * n + 64
    } else {
        4 + (2 * n).div_ceil(panels.len())
    };
    let rule = GaussLegendre::cached(order);
    panels
        .iter()
        .flat_map(|&(lo, hi)| rule.mapped(lo, hi).collect::<Vec<_>>())
        .collect()
}

/// Resonant expansion of one initial state, truncated at `N` poles.
#[derive(Debug)]
pub struct SingleParticle {
    basis: Arc<ResonantBasis>,
    psi: InitialState,
    coeffs: CoefficientSet,
    overlap: Probe,
    rule: Vec<(f64, f64)>,
    table: OnceLock<Option<Vec<Probe>>>,
    summation: Summation,
}

impl SingleParticle {
    /// Uses every pole of `basis`.
    pub fn new(basis: Arc<ResonantBasis>, psi: InitialState) -> Result<Self> {
        let coeffs = CoefficientSet::compute(&basis, &psi)?;
        let overlap = Probe::overlap(coeffs.entries());
        let rule = spatial_rule(&psi, basis.len());
        Ok(Self {
            basis,
            psi,
            coeffs,
            overlap,
            rule,
            table: OnceLock::new(),
            summation: Summation::default(),
        })
    }

    pub fn with_summation(mut self, summation: Summation) -> Self {
        self.summation = summation;
        self
    }

    pub fn summation(&self) -> Summation {
        self.summation
    }

    pub fn basis(&self) -> &Arc<ResonantBasis> {
        &self.basis
    }

    pub fn initial(&self) -> &InitialState {
        &self.psi
    }

    pub fn coefficients(&self) -> &CoefficientSet {
        &self.coeffs
    }

    /// Truncation order `N`.
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn kernel(&self, t: f64) -> Result<TimeKernel> {
        TimeKernel::new(self.basis.states(), t, self.summation)
    }

    pub fn split_kernel(&self, t: f64) -> Result<SplitKernel> {
        SplitKernel::new(self.basis.states(), t, self.summation)
    }

    fn check_r(&self, r: f64) -> Result<()> {
        check_domain("r", r, r >= 0.0 && r < self.psi.a(), "[0, a)")
    }

    /// Weights for evaluating `Ψ(r, ·)` at many times.
    pub fn probe(&self, r: f64) -> Result<Probe> {
        self.check_r(r)?;
        Ok(Probe::at(self.basis.states(), self.coeffs.entries(), r))
    }

    /// `Ψ(r, t)` for `0 ≤ r < a`. At `t = 0` this is `ψ(r)`.
    pub fn evolve(&self, r: f64, t: f64) -> Result<Complex64> {
        self.check_r(r)?;
        check_time(t)?;
        if t == 0.0 {
            return Ok(self.psi.value(r));
        }
        Ok(self.probe(r)?.amplitude(&self.kernel(t)?))
    }

    /// Exponential and non-exponential parts of `Ψ(r, t)`, `t > 0`.
    pub fn evolve_split(&self, r: f64, t: f64) -> Result<Split> {
        self.check_r(r)?;
        Ok(self.probe(r)?.split(&self.split_kernel(t)?))
    }

    /// `A(t) = Σ C̄_n C_n M(y°_n)` over `|n| ≤ N`; `A(0) = 1`.
    pub fn survival_amplitude(&self, t: f64) -> Result<Complex64> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        Ok(self.overlap.amplitude(&self.kernel(t)?))
    }

    pub(crate) fn survival_amplitude_with(&self, k: &TimeKernel) -> Complex64 {
        self.overlap.amplitude(k)
    }

    /// Exponential and non-exponential parts of `A(t)`, `t > 0`.
    pub fn survival_split(&self, t: f64) -> Result<Split> {
        Ok(self.overlap.split(&self.split_kernel(t)?))
    }

    /// `A(t) = ∫₀ᵃ ψ*(r) Ψ(r,t) dr` by Gauss-Legendre quadrature of the
    /// expansion.
    pub fn survival_amplitude_quadrature(&self, t: f64) -> Result<Complex64> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(Complex64::new(self.psi.norm_sq(), 0.0));
        }
        let values = self.node_values(&self.kernel(t)?);
        Ok(self
            .rule
            .iter()
            .zip(&values)
            .fold(Complex64::new(0.0, 0.0), |acc, (&(r, w), v)| {
                acc + w * self.psi.value(r).conj() * v
            }))
    }

    /// `S(t) = |A(t)|²`.
    pub fn survival_probability(&self, t: f64) -> Result<f64> {
        Ok(self.survival_amplitude(t)?.norm_sqr())
    }

    /// `P(t) = ∫₀ᵃ |Ψ(r,t)|² dr`; `P(0) = 1`.
    pub fn nonescape_probability(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(1.0);
        }
        Ok(self.nonescape_with(&self.kernel(t)?))
    }

    fn nonescape_with(&self, k: &TimeKernel) -> f64 {
        let values = self.node_values(k);
        self.rule
            .iter()
            .zip(&values)
            .map(|(&(_, w), v)| w * v.norm_sqr())
            .sum()
    }

    pub(crate) fn rule(&self) -> &[(f64, f64)] {
        &self.rule
    }

    /// `Ψ(r_j, t)` at the quadrature nodes.
    pub(crate) fn node_values(&self, k: &TimeKernel) -> Vec<Complex64> {
        let states = self.basis.states();
        let entries = self.coeffs.entries();
        let table = self.table.get_or_init(|| {
            (self.rule.len() * states.len() <= TABLE_LIMIT).then(|| {
                self.rule
                    .par_iter()
                    .map(|&(r, _)| Probe::at(states, entries, r))
                    .collect()
            })
        });
        match table {
            Some(probes) => probes.par_iter().map(|p| p.amplitude(k)).collect(),
            None => self
                .rule
                .par_iter()
                .map(|&(r, _)| Probe::at(states, entries, r).amplitude(k))
                .collect(),
        }
    }

    /// `S`, `P` and `A` on `times`. Entries with `t = 0` take the exact
    /// initial values.
    pub fn curves(&self, times: &[f64]) -> Result<DecayCurves> {
        for &t in times {
            check_time(t)?;
        }
        let rows: Vec<(Complex64, f64)> = times
            .par_iter()
            .map(|&t| {
                if t == 0.0 {
                    return Ok((Complex64::new(1.0, 0.0), 1.0));
                }
                let k = self.kernel(t)?;
                Ok((self.overlap.amplitude(&k), self.nonescape_with(&k)))
            })
            .collect::<Result<_>>()?;
        Ok(DecayCurves {
            times: times.to_vec(),
            survival: rows.iter().map(|(a, _)| a.norm_sqr()).collect(),
            nonescape: rows.iter().map(|&(_, p)| p).collect(),
            amplitude: rows.iter().map(|&(a, _)| a).collect(),
        })
    }

    /// `Ψ(r, t)` on `points` uniform radii in `[0, a)` for every time.
    pub fn frames(&self, times: &[f64], points: usize) -> Result<Vec<WaveFunctionFrame>> {
        let radii = uniform_grid(self.psi.a(), points)?;
        let probes: Vec<Probe> = radii
            .par_iter()
            .map(|&r| Probe::at(self.basis.states(), self.coeffs.entries(), r))
            .collect();
        times
            .iter()
            .map(|&t| {
                check_time(t)?;
                let values: Vec<Complex64> = if t == 0.0 {
                    radii.iter().map(|&r| self.psi.value(r)).collect()
                } else {
                    let k = self.kernel(t)?;
                    probes.par_iter().map(|p| p.amplitude(&k)).collect()
                };
                Ok(WaveFunctionFrame {
                    t,
                    samples: radii.iter().copied().zip(values).collect(),
                })
            })
            .collect()
    }
}

/// `r_j = j a / points`, `j = 0..points`.
pub fn uniform_grid(a: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::InvalidParameter("grid needs at least one point".into()));
    }
    Ok((0..points).map(|j| j as f64 * a / points as f64).collect())
}

/// `points` times spaced evenly in `log t` from `t_min` to `t_max`.
pub fn log_time_grid(t_min: f64, t_max: f64, points: usize) -> Result<Vec<f64>> {
    check_domain("t_min", t_min, t_min > 0.0 && t_min.is_finite(), "(0, inf)")?;
    check_domain("t_max", t_max, t_max > t_min && t_max.is_finite(), "(t_min, inf)")?;
    if points < 2 {
        return Err(Error::InvalidParameter("time grid needs at least 2 points".into()));
    }
    let (lo, hi) = (t_min.ln(), t_max.ln());
    let last = (points - 1) as f64;
    let mut grid: Vec<f64> = (0..points)
        .map(|j| (lo + (hi - lo) * j as f64 / last).exp())
        .collect();
    grid[0] = t_min;
    grid[points - 1] = t_max;
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCurves {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub nonescape: Vec<f64>,
    pub amplitude: Vec<Complex64>,
}

impl DecayCurves {
    /// CSV with columns `t, S, P, re_A, im_A`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(b"t,S,P,re_A,im_A\n")?;
        for i in 0..self.times.len() {
            out.write_all(
                row([
                    sci(self.times[i]),
                    sci(self.survival[i]),
                    sci(self.nonescape[i]),
                    sci(self.amplitude[i].re),
                    sci(self.amplitude[i].im),
                ])
                .as_bytes(),
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveFunctionFrame {
    pub t: f64,
    pub samples: Vec<(f64, Complex64)>,
}

/// CSV with columns `t, r, re_psi, im_psi, abs_psi_sq`.
pub fn write_frames_csv<W: Write>(frames: &[WaveFunctionFrame], mut out: W) -> io::Result<()> {
    out.write_all(b"t,r,re_psi,im_psi,abs_psi_sq\n")?;
    for f in frames {
        for &(r, v) in &f.samples {
            out.write_all(
                row([sci(f.t), sci(r), sci(v.re), sci(v.im), sci(v.norm_sqr())]).as_bytes(),
            )?;
        }
    }
    Ok(())
}
