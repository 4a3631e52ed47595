//! Continuum-spectral evolution, an independent check on the resonant
//! expansion.
//!
//! The delta shell has real scattering states `φ_k(r) = A(k) sin(kr)` inside
//! and `√(2/π) sin(kr + δ)` outside, normalized as `⟨φ_k|φ_k'⟩ = δ(k - k')`.
//! For `λ > 0` there are no bound states, so
//! `⟨ψ|Ψ(t)⟩ = ∫₀^∞ |⟨φ_k|ψ⟩|² e^{-ik²t} dk`.
//!
//! The k axis is cut into panels. A panel whose phase `k²t` changes by at
//! most π is integrated with Gauss-Legendre in k. Otherwise it is mapped to
//! `E = k²` and integrated with Filon-Legendre, which is exact for the
//! oscillatory factor.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::delta_shell::ShellPotential;
use crate::error::{check_domain, Error, Result};
use crate::quadrature::{FilonLegendre, GaussLegendre};
use crate::resonant_basis::InitialState;

const PANEL_ORDER: usize = 24;
const TAIL_WEIGHT: f64 = 1e-10;
const MAX_DOUBLINGS: usize = 6;
/// Geometric refinement of the first panel towards `k = 0`.
const ORIGIN_LEVELS: i32 = 40;

/// Scattering state at wave number `k > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumState {
    k: f64,
    a: f64,
    amplitude: f64,
    phase: f64,
}

impl ContinuumState {
    pub fn new(p: &ShellPotential, k: f64) -> Result<Self> {
        check_domain("k", k, k > 0.0 && k.is_finite(), "(0, inf)")?;
        let a = p.a();
        let (s, c) = (k * a).sin_cos();
        let inner_cos = c + p.lambda() * s / k;
        Ok(Self {
            k,
            a,
            amplitude: (2.0 / std::f64::consts::PI / (s * s + inner_cos * inner_cos)).sqrt(),
            phase: s.atan2(inner_cos) - k * a,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `A(k)` with `A(k)² = (2/π) / (1 + 2λ sin(ka)cos(ka)/k + λ² sin²(ka)/k²)`.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Phase shift `δ(k)`.
    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// `φ_k(r)` for `r ≥ 0`.
    pub fn value(&self, r: f64) -> f64 {
        if r <= self.a {
            self.amplitude * (self.k * r).sin()
        } else {
            (2.0 / std::f64::consts::PI).sqrt() * (self.k * r + self.phase).sin()
        }
    }
}

/// Spectral integrals for one initial state.
#[derive(Debug, Clone)]
pub struct SpectralOracle {
    potential: ShellPotential,
    psi: InitialState,
    k_max: f64,
    panels: usize,
    abs_tol: f64,
    rel_tol: f64,
}

impl SpectralOracle {
    /// Uses [`default_k_max`], panels of width about `π/(8a)` and an absolute
    /// self-convergence tolerance of `1e-8`.
    pub fn new(p: &ShellPotential, psi: &InitialState) -> Result<Self> {
        Self::with_cutoff(p, psi, default_k_max(p, psi)?)
    }

    /// As [`SpectralOracle::new`] with an explicit cut-off.
    pub fn with_cutoff(p: &ShellPotential, psi: &InitialState, k_max: f64) -> Result<Self> {
        check_domain("k_max", k_max, k_max > 0.0 && k_max.is_finite(), "(0, inf)")?;
        let panels = (k_max * 8.0 * p.a() / std::f64::consts::PI).ceil() as usize;
        Ok(Self {
            potential: *p,
            psi: psi.clone(),
            k_max,
            panels: panels.max(1),
            abs_tol: 1e-8,
            rel_tol: 0.0,
        })
    }

    /// Starting panel count `n_k`.
    pub fn with_panels(mut self, panels: usize) -> Result<Self> {
        if panels == 0 {
            return Err(Error::InvalidParameter("panel count must be >= 1".into()));
        }
        self.panels = panels;
        Ok(self)
    }

    /// Stop doubling once the change is below `abs_tol + rel_tol·|value|`.
    pub fn with_tolerance(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    /// `⟨φ_k|ψ⟩`.
    pub fn projection(&self, k: f64) -> Complex64 {
        if k <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let state = ContinuumState::new(&self.potential, k).expect("k > 0");
        // φ_k is real, so ⟨φ_k|ψ⟩ = A ∫ sin(kr) ψ(r) dr.
        let (direct, _) = self
            .psi
            .sine_overlaps(Complex64::new(k, 0.0))
            .expect("overlap of a validated state");
        state.amplitude() * direct
    }

    /// `|⟨φ_k|ψ⟩|²`.
    pub fn weight(&self, k: f64) -> f64 {
        self.projection(k).norm_sqr()
    }

    /// `A(t) = ∫₀^{k_max} |⟨φ_k|ψ⟩|² e^{-ik²t} dk`.
    pub fn amplitude(&self, t: f64) -> Result<Complex64> {
        check_domain("t", t, t >= 0.0 && t.is_finite(), "[0, inf)")?;
        self.converged("spectral survival amplitude", t, |k| {
            Complex64::new(self.weight(k), 0.0)
        })
    }

    /// `Ψ(r,t) = ∫₀^{k_max} φ_k(r) ⟨φ_k|ψ⟩ e^{-ik²t} dk`.
    ///
    /// The integrand only decays like `k^{-2}`, so this is meant for `t`
    /// well away from zero, where the phase suppresses the cut-off tail.
    pub fn wavefunction(&self, r: f64, t: f64) -> Result<Complex64> {
        check_domain("r", r, r >= 0.0 && r.is_finite(), "[0, inf)")?;
        check_domain("t", t, t > 0.0 && t.is_finite(), "(0, inf)")?;
        self.converged("spectral wavefunction", t, |k| {
            if k <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let state = ContinuumState::new(&self.potential, k).expect("k > 0");
            state.value(r) * self.projection(k)
        })
    }

    fn converged<F>(&self, what: &'static str, t: f64, f: F) -> Result<Complex64>
    where
        F: Fn(f64) -> Complex64 + Sync,
    {
        let mut panels = self.panels;
        let mut prev = self.integrate(t, panels, &f);
        let mut change = f64::INFINITY;
        for _ in 0..MAX_DOUBLINGS {
            panels *= 2;
            let next = self.integrate(t, panels, &f);
            change = (next - prev).norm();
            if change <= self.abs_tol + self.rel_tol * next.norm() {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::QuadratureNotConverged { what, change })
    }

    /// `∫₀^{k_max} f(k) e^{-ik²t} dk` on `panels` equal panels.
    fn integrate<F>(&self, t: f64, panels: usize, f: &F) -> Complex64
    where
        F: Fn(f64) -> Complex64 + Sync,
    {
        let h = self.k_max / panels as f64;
        let mut pieces: Vec<(f64, f64)> = (0..ORIGIN_LEVELS)
            .rev()
            .map(|j| (h * 0.5f64.powi(j + 1), h * 0.5f64.powi(j)))
            .collect();
        pieces.extend((1..panels).map(|j| (j as f64 * h, (j + 1) as f64 * h)));
        let gauss = GaussLegendre::cached(PANEL_ORDER);
        let filon = FilonLegendre::new(PANEL_ORDER);
        let parts: Vec<Complex64> = pieces
            .par_iter()
            .map(|&(lo, hi)| {
                if (hi * hi - lo * lo) * t <= std::f64::consts::PI {
                    gauss.integrate_complex(lo, hi, |k| {
                        f(k) * Complex64::from_polar(1.0, -k * k * t)
                    })
                } else {
                    filon.integrate(lo * lo, hi * hi, t, |e| {
                        let k = e.sqrt();
                        f(k) / (2.0 * k)
                    })
                }
            })
            .collect();
        parts.into_iter().sum()
    }
}

/// Smallest `K = 2^j K₀` with `(8/7) ∫_K^{2K} |⟨φ_k|ψ⟩|² dk < 1e-10`.
///
/// The weight falls off like `k^{-4}` for a state that vanishes at both
/// ends, and then `∫_K^∞ = (8/7) ∫_K^{2K}`. The band integral uses the same
/// panels as the spectral integrals.
pub fn default_k_max(p: &ShellPotential, psi: &InitialState) -> Result<f64> {
    let probe = SpectralOracle::with_cutoff(p, psi, 1.0)?;
    let rule = GaussLegendre::cached(PANEL_ORDER);
    let width = std::f64::consts::PI / (8.0 * p.a());
    let mut k = 16.0 / p.a();
    for _ in 0..40 {
        let panels = (k / width).ceil() as usize;
        let h = k / panels as f64;
        let tail: f64 = (0..panels)
            .into_par_iter()
            .map(|j| {
                let lo = k + j as f64 * h;
                rule.integrate(lo, lo + h, |x| probe.weight(x))
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum();
        if tail * 8.0 / 7.0 < TAIL_WEIGHT {
            return Ok(k);
        }
        k *= 2.0;
    }
    Err(Error::QuadratureNotConverged {
        what: "spectral cut-off",
        change: k,
    })
}

/// `A(t)` from the continuum spectrum with an explicit cut-off and starting
/// panel count.
pub fn spectral_amplitude(
    p: &ShellPotential,
    psi: &InitialState,
    t: f64,
    k_max: f64,
    n_k: usize,
) -> Result<Complex64> {
    SpectralOracle::with_cutoff(p, psi, k_max)?
        .with_panels(n_k)?
        .amplitude(t)
}
