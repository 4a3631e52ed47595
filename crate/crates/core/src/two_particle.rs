//! Two non-interacting identical particles released from the shell.
//!
//! Each particle evolves with the one-body propagator, so the two-body
//! wavefunction is built from single-particle solutions:
//! `Ψ(r₁,r₂,t) = [Ψ_α(r₁,t)Ψ_β(r₂,t) ± Ψ_β(r₁,t)Ψ_α(r₂,t)]/√2` for an
//! entangled pair and `Ψ_α(r₁,t)Ψ_α(r₂,t)` for the factorized state.

use std::io::{self, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_domain, Error, Result};
use crate::output::{row, sci};
use crate::resonant_basis::{InitialState, ResonantBasis};
use crate::single_particle::{
    check_time, uniform_grid, Probe, SingleParticle, Split, Summation, TimeKernel,
};

/// Largest `|⟨ψ_α|ψ_β⟩|` accepted for an entangled pair.
const OVERLAP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exchange {
    Symmetric,
    Antisymmetric,
}

impl Exchange {
    pub fn sign(self) -> f64 {
        match self {
            Exchange::Symmetric => 1.0,
            Exchange::Antisymmetric => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoBodyKind {
    /// `ψ_α(r₁) ψ_α(r₂)`
    FactorizedSymmetric,
    /// `[ψ_α(r₁) ψ_β(r₂) ± ψ_β(r₁) ψ_α(r₂)]/√2`
    Entangled(Exchange),
}

/// Survival amplitudes `A_{st} = ⟨ψ_t|Ψ_s(t)⟩` of the two orbitals.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Overlaps<T> {
    aa: T,
    bb: T,
    ab: T,
    ba: T,
}

#[derive(Debug)]
pub struct TwoBodyState {
    kind: TwoBodyKind,
    a: SingleParticle,
    b: Option<SingleParticle>,
    overlaps: Option<Overlaps<Probe>>,
}

impl TwoBodyState {
    /// Both particles in `psi`.
    pub fn factorized(basis: Arc<ResonantBasis>, psi: InitialState) -> Result<Self> {
        Ok(Self {
            kind: TwoBodyKind::FactorizedSymmetric,
            a: SingleParticle::new(basis, psi)?,
            b: None,
            overlaps: None,
        })
    }

    /// Fails with [`Error::DegenerateState`] unless the orbitals are
    /// orthogonal, which covers `α = β` for box states.
    pub fn entangled(
        basis: Arc<ResonantBasis>,
        psi_a: InitialState,
        psi_b: InitialState,
        exchange: Exchange,
    ) -> Result<Self> {
        let overlap = psi_a.inner(&psi_b)?.norm();
        if overlap > OVERLAP_TOL {
            return Err(Error::DegenerateState(format!(
                "orbitals overlap with |<a|b>| = {overlap:e}"
            )));
        }
        let a = SingleParticle::new(basis.clone(), psi_a)?;
        let b = SingleParticle::new(basis, psi_b)?;
        let (ca, cb) = (a.coefficients().entries(), b.coefficients().entries());
        let overlaps = Overlaps {
            aa: Probe::overlap(ca),
            bb: Probe::overlap(cb),
            ab: Probe::cross_overlap(cb, ca),
            ba: Probe::cross_overlap(ca, cb),
        };
        Ok(Self {
            kind: TwoBodyKind::Entangled(exchange),
            a,
            b: Some(b),
            overlaps: Some(overlaps),
        })
    }

    /// Box eigenstates `α` and `β` of the shell radius.
    pub fn box_states(
        basis: Arc<ResonantBasis>,
        alpha: u32,
        beta: Option<(u32, Exchange)>,
    ) -> Result<Self> {
        let a = basis.potential().a();
        let psi_a = InitialState::box_eigenstate(alpha, a)?;
        match beta {
            None => Self::factorized(basis, psi_a),
            Some((beta, exchange)) => {
                if beta == alpha {
                    return Err(Error::DegenerateState(format!(
                        "entangled state needs alpha != beta, got {alpha} twice"
                    )));
                }
                let psi_b = InitialState::box_eigenstate(beta, a)?;
                Self::entangled(basis, psi_a, psi_b, exchange)
            }
        }
    }

    pub fn with_summation(mut self, summation: Summation) -> Self {
        self.a = self.a.with_summation(summation);
        self.b = self.b.map(|b| b.with_summation(summation));
        self
    }

    pub fn kind(&self) -> TwoBodyKind {
        self.kind
    }

    /// `+1` for symmetric states, `-1` for antisymmetric ones.
    pub fn sign(&self) -> f64 {
        match self.kind {
            TwoBodyKind::FactorizedSymmetric => 1.0,
            TwoBodyKind::Entangled(e) => e.sign(),
        }
    }

    pub fn first(&self) -> &SingleParticle {
        &self.a
    }

    /// The second orbital; the first one again for a factorized state.
    pub fn second(&self) -> &SingleParticle {
        self.b.as_ref().unwrap_or(&self.a)
    }

    fn check_r(&self, r: f64) -> Result<()> {
        check_domain("r", r, r >= 0.0 && r < self.a.initial().a(), "[0, a)")
    }

    fn combine(&self, a1: Complex64, a2: Complex64, b1: Complex64, b2: Complex64) -> Complex64 {
        match self.kind {
            TwoBodyKind::FactorizedSymmetric => a1 * a2,
            TwoBodyKind::Entangled(e) => {
                let (x, y) = (a1 * b2, b1 * a2);
                let v = match e {
                    Exchange::Symmetric => x + y,
                    Exchange::Antisymmetric => x - y,
                };
                v * std::f64::consts::FRAC_1_SQRT_2
            }
        }
    }

    /// `Ψ(r₁, r₂, t)`; at `t = 0` the initial state.
    pub fn evolve(&self, r1: f64, r2: f64, t: f64) -> Result<Complex64> {
        self.check_r(r1)?;
        self.check_r(r2)?;
        check_time(t)?;
        let (a, b) = (&self.a, self.second());
        if t == 0.0 {
            let (pa, pb) = (a.initial(), b.initial());
            return Ok(self.combine(pa.value(r1), pa.value(r2), pb.value(r1), pb.value(r2)));
        }
        let ka = a.kernel(t)?;
        let kb = if self.b.is_some() { b.kernel(t)? } else { ka.clone() };
        let pa = |r| a.probe(r).map(|p| p.amplitude(&ka));
        let pb = |r| b.probe(r).map(|p| p.amplitude(&kb));
        Ok(self.combine(pa(r1)?, pa(r2)?, pb(r1)?, pb(r2)?))
    }

    /// `Ψ(r₁, r₂, t)` as the explicit double resonant sum over `p, q`,
    /// `|p|, |q| ≤ N`. Costs `O(N²)`; meant as a cross-check of
    /// [`TwoBodyState::evolve`].
    pub fn evolve_double_sum(&self, r1: f64, r2: f64, t: f64) -> Result<Complex64> {
        self.check_r(r1)?;
        self.check_r(r2)?;
        if t == 0.0 {
            return self.evolve(r1, r2, t);
        }
        let (a, b) = (&self.a, self.second());
        // Terms of one orbital at one radius, mirrors included.
        let terms = |sp: &SingleParticle, r: f64| -> Result<Vec<Complex64>> {
            let k = sp.kernel(t)?;
            let states = sp.basis().states();
            let mut out = Vec::with_capacity(2 * states.len());
            for ((s, e), (mp, mm)) in states
                .iter()
                .zip(sp.coefficients().entries())
                .zip(k.plus().iter().zip(k.minus()))
            {
                let u = s.value(r);
                out.push(e.c * u * mp);
                out.push((e.c_bar * u).conj() * mm);
            }
            Ok(out)
        };
        let (a1, a2, b1, b2) = (terms(a, r1)?, terms(a, r2)?, terms(b, r1)?, terms(b, r2)?);
        let sign = self.sign();
        let rows: Vec<Complex64> = (0..a1.len())
            .into_par_iter()
            .map(|p| {
                (0..a2.len()).fold(Complex64::new(0.0, 0.0), |acc, q| {
                    acc + match self.kind {
                        TwoBodyKind::FactorizedSymmetric => a1[p] * a2[q],
                        TwoBodyKind::Entangled(_) => a1[p] * b2[q] + sign * b1[p] * a2[q],
                    }
                })
            })
            .collect();
        let total: Complex64 = rows.iter().sum();
        Ok(match self.kind {
            TwoBodyKind::FactorizedSymmetric => total,
            TwoBodyKind::Entangled(_) => total * std::f64::consts::FRAC_1_SQRT_2,
        })
    }

    /// Exponential and non-exponential parts of `Ψ(r₁, r₂, t)`. The
    /// non-exponential part keeps only products of single-particle
    /// non-exponential parts; every other term carries at least one
    /// `e^{-iκ²t}`.
    pub fn evolve_split(&self, r1: f64, r2: f64, t: f64) -> Result<Split> {
        let (a, b) = (&self.a, self.second());
        let (sa1, sa2) = (a.evolve_split(r1, t)?, a.evolve_split(r2, t)?);
        let (sb1, sb2) = (b.evolve_split(r1, t)?, b.evolve_split(r2, t)?);
        let total = self.combine(sa1.total(), sa2.total(), sb1.total(), sb2.total());
        let slow = self.combine(
            sa1.nonexponential,
            sa2.nonexponential,
            sb1.nonexponential,
            sb2.nonexponential,
        );
        Ok(Split {
            exponential: total - slow,
            nonexponential: slow,
        })
    }

    fn amplitude_from(&self, o: Overlaps<Complex64>) -> Complex64 {
        match self.kind {
            TwoBodyKind::FactorizedSymmetric => o.aa * o.aa,
            TwoBodyKind::Entangled(e) => o.aa * o.bb + e.sign() * o.ab * o.ba,
        }
    }

    fn overlaps_at(&self, ka: &TimeKernel, kb: &TimeKernel) -> Overlaps<Complex64> {
        match &self.overlaps {
            None => {
                let aa = self.a.survival_amplitude_with(ka);
                Overlaps {
                    aa,
                    bb: aa,
                    ab: Complex64::new(0.0, 0.0),
                    ba: Complex64::new(0.0, 0.0),
                }
            }
            Some(p) => Overlaps {
                aa: p.aa.amplitude(ka),
                bb: p.bb.amplitude(kb),
                ab: p.ab.amplitude(kb),
                ba: p.ba.amplitude(ka),
            },
        }
    }

    fn kernels(&self, t: f64) -> Result<(TimeKernel, TimeKernel)> {
        let ka = self.a.kernel(t)?;
        let kb = match &self.b {
            Some(b) if b.summation() != self.a.summation() => b.kernel(t)?,
            _ => ka.clone(),
        };
        Ok((ka, kb))
    }

    /// `A(t) = ⟨Ψ(0)|Ψ(t)⟩`. The double resonant sum factorizes into
    /// single-particle overlaps: `A_αα²`, or `A_αα A_ββ ± A_αβ A_βα`.
    pub fn survival_amplitude(&self, t: f64) -> Result<Complex64> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let (ka, kb) = self.kernels(t)?;
        Ok(self.amplitude_from(self.overlaps_at(&ka, &kb)))
    }

    /// Exponential and non-exponential parts of `A(t)`, split as in
    /// [`TwoBodyState::evolve_split`].
    pub fn survival_split(&self, t: f64) -> Result<Split> {
        let sa = self.a.survival_split(t)?;
        let parts = match &self.overlaps {
            None => [sa; 4],
            Some(p) => {
                let ka = self.a.split_kernel(t)?;
                let kb = self.second().split_kernel(t)?;
                [sa, p.bb.split(&kb), p.ab.split(&kb), p.ba.split(&ka)]
            }
        };
        let pick = |f: fn(&Split) -> Complex64| Overlaps {
            aa: f(&parts[0]),
            bb: f(&parts[1]),
            ab: f(&parts[2]),
            ba: f(&parts[3]),
        };
        let total = self.amplitude_from(pick(|s| s.total()));
        let slow = self.amplitude_from(pick(|s| s.nonexponential));
        Ok(Split {
            exponential: total - slow,
            nonexponential: slow,
        })
    }

    /// `A(t)` by Gauss-Legendre quadrature of `Ψ*(r₁,r₂,0) Ψ(r₁,r₂,t)` on the
    /// product grid. Costs `O(m²)` in the node count `m`.
    pub fn survival_amplitude_quadrature(&self, t: f64) -> Result<Complex64> {
        self.product_grid(t, |init, now| init.conj() * now)
    }

    /// `S(t) = |A(t)|²`.
    pub fn survival_probability(&self, t: f64) -> Result<f64> {
        Ok(self.survival_amplitude(t)?.norm_sqr())
    }

    /// `P(t) = ∫₀ᵃ∫₀ᵃ |Ψ(r₁,r₂,t)|²`. On the product grid this reduces to
    /// `P_α²` or `‖Ψ_α‖²‖Ψ_β‖² ± |⟨Ψ_α|Ψ_β⟩|²`.
    pub fn nonescape_probability(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(1.0);
        }
        let (ka, kb) = self.kernels(t)?;
        Ok(self.nonescape_with(&ka, &kb))
    }

    fn nonescape_with(&self, ka: &TimeKernel, kb: &TimeKernel) -> f64 {
        let rule = self.a.rule();
        let va = self.a.node_values(ka);
        match &self.b {
            None => {
                let p: f64 = rule.iter().zip(&va).map(|(&(_, w), v)| w * v.norm_sqr()).sum();
                p * p
            }
            Some(b) => {
                let vb = b.node_values(kb);
                let (mut na, mut nb) = (0.0, 0.0);
                let mut cross = Complex64::new(0.0, 0.0);
                for ((&(_, w), x), y) in rule.iter().zip(&va).zip(&vb) {
                    na += w * x.norm_sqr();
                    nb += w * y.norm_sqr();
                    cross += w * x.conj() * y;
                }
                na * nb + self.sign() * cross.norm_sqr()
            }
        }
    }

    /// `P(t)` summed over the full product grid, `O(m²)`.
    pub fn nonescape_probability_grid(&self, t: f64) -> Result<f64> {
        Ok(self.product_grid(t, |_, now| Complex64::new(now.norm_sqr(), 0.0))?.re)
    }

    fn product_grid<F>(&self, t: f64, f: F) -> Result<Complex64>
    where
        F: Fn(Complex64, Complex64) -> Complex64 + Sync,
    {
        check_time(t)?;
        let rule = self.a.rule();
        let init = |sp: &SingleParticle| -> Vec<Complex64> {
            rule.iter().map(|&(r, _)| sp.initial().value(r)).collect()
        };
        let (ia, ib) = (init(&self.a), init(self.second()));
        let (va, vb) = if t == 0.0 {
            (ia.clone(), ib.clone())
        } else {
            let (ka, kb) = self.kernels(t)?;
            (self.a.node_values(&ka), self.second().node_values(&kb))
        };
        let rows: Vec<Complex64> = (0..rule.len())
            .into_par_iter()
            .map(|i| {
                (0..rule.len()).fold(Complex64::new(0.0, 0.0), |acc, j| {
                    let w = rule[i].1 * rule[j].1;
                    let before = self.combine(ia[i], ia[j], ib[i], ib[j]);
                    let now = self.combine(va[i], va[j], vb[i], vb[j]);
                    acc + w * f(before, now)
                })
            })
            .collect();
        Ok(rows.iter().sum())
    }

    /// `S`, `P` and `A` on `times`.
    pub fn curves(&self, times: &[f64]) -> Result<TwoBodyCurves> {
        for &t in times {
            check_time(t)?;
        }
        let rows: Vec<(Complex64, f64)> = times
            .par_iter()
            .map(|&t| {
                if t == 0.0 {
                    return Ok((Complex64::new(1.0, 0.0), 1.0));
                }
                let (ka, kb) = self.kernels(t)?;
                Ok((
                    self.amplitude_from(self.overlaps_at(&ka, &kb)),
                    self.nonescape_with(&ka, &kb),
                ))
            })
            .collect::<Result<_>>()?;
        Ok(TwoBodyCurves {
            times: times.to_vec(),
            survival: rows.iter().map(|(a, _)| a.norm_sqr()).collect(),
            nonescape: rows.iter().map(|&(_, p)| p).collect(),
            amplitude: rows.iter().map(|&(a, _)| a).collect(),
        })
    }

    /// `Ψ(r₁, r₂, t)` on the product of `points` uniform radii in `[0, a)`.
    pub fn frames(&self, times: &[f64], points: usize) -> Result<Vec<TwoBodyFrame>> {
        let radii = uniform_grid(self.a.initial().a(), points)?;
        let probes = |sp: &SingleParticle| -> Result<Vec<Probe>> {
            radii.iter().map(|&r| sp.probe(r)).collect()
        };
        let (pa, pb) = (probes(&self.a)?, probes(self.second())?);
        times
            .iter()
            .map(|&t| {
                check_time(t)?;
                let (va, vb): (Vec<Complex64>, Vec<Complex64>) = if t == 0.0 {
                    let init = |sp: &SingleParticle| -> Vec<Complex64> {
                        radii.iter().map(|&r| sp.initial().value(r)).collect()
                    };
                    (init(&self.a), init(self.second()))
                } else {
                    let (ka, kb) = self.kernels(t)?;
                    (
                        pa.par_iter().map(|p| p.amplitude(&ka)).collect(),
                        pb.par_iter().map(|p| p.amplitude(&kb)).collect(),
                    )
                };
                let mut samples = Vec::with_capacity(points * points);
                for i in 0..points {
                    for j in 0..points {
                        let v = self.combine(va[i], va[j], vb[i], vb[j]);
                        samples.push((radii[i], radii[j], v));
                    }
                }
                Ok(TwoBodyFrame { t, samples })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoBodyCurves {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub nonescape: Vec<f64>,
    pub amplitude: Vec<Complex64>,
}

impl TwoBodyCurves {
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
pub struct TwoBodyFrame {
    pub t: f64,
    pub samples: Vec<(f64, f64, Complex64)>,
}

/// CSV with columns `t, r1, r2, re_psi, im_psi, abs_psi_sq`.
pub fn write_two_body_frames_csv<W: Write>(frames: &[TwoBodyFrame], mut out: W) -> io::Result<()> {
    out.write_all(b"t,r1,r2,re_psi,im_psi,abs_psi_sq\n")?;
    for f in frames {
        for &(r1, r2, v) in &f.samples {
            out.write_all(
                row([
                    sci(f.t),
                    sci(r1),
                    sci(r2),
                    sci(v.re),
                    sci(v.im),
                    sci(v.norm_sqr()),
                ])
                .as_bytes(),
            )?;
        }
    }
    Ok(())
}
