//! The five subcommands. Each one writes its files plus a `.meta.json`
//! sidecar and returns the paths it wrote.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use resdecay::delta_shell::ShellPotential;
use resdecay::fit::{post_exponential_onset, tail_fit};
use resdecay::resonant_basis::{
    choose_truncation_capped, pointwise_sum_rules, smeared_sum_rules, strength_sum,
    CoefficientSet, InitialState, ResonantBasis, SumRules,
};
use resdecay::single_particle::{log_time_grid, write_frames_csv, SingleParticle};
use resdecay::two_particle::{write_two_body_frames_csv, TwoBodyState};

use crate::config::{FitQuantity, RunConfig, StateKind, TimeUnit, TruncationConfig};
use crate::error::CliError;

/// Largest admissible deviation of S and P from `[0, 1]`.
const PROBABILITY_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Poles,
    Evolve1,
    Evolve2,
    Audit,
    Tailfit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Poles => "poles",
            Command::Evolve1 => "evolve1",
            Command::Evolve2 => "evolve2",
            Command::Audit => "audit",
            Command::Tailfit => "tailfit",
        }
    }
}

/// Runs `cmd` and returns the files written, sidecars included.
pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate()?;
    let run = Run::new(cmd, cfg)?;
    fs::create_dir_all(&cfg.outputs.directory)
        .map_err(|e| CliError::io(&cfg.outputs.directory, e))?;
    match cmd {
        Command::Poles => run.poles(),
        Command::Evolve1 => run.evolve1(),
        Command::Evolve2 => run.evolve2(),
        Command::Audit => run.audit(),
        Command::Tailfit => run.tailfit(),
    }
}

/// SHA-256 of the canonical config JSON, output directory excluded.
pub fn config_hash(cfg: &RunConfig) -> String {
    hex::encode(Sha256::digest(hashed_config(cfg).canonical_json().as_bytes()))
}

fn hashed_config(cfg: &RunConfig) -> RunConfig {
    let mut c = cfg.clone();
    c.outputs.directory = PathBuf::new();
    c
}

struct Run<'a> {
    cmd: Command,
    cfg: &'a RunConfig,
    potential: ShellPotential,
    states: Vec<InitialState>,
    basis: Arc<ResonantBasis>,
    tau: f64,
}

impl<'a> Run<'a> {
    fn new(cmd: Command, cfg: &'a RunConfig) -> Result<Self, CliError> {
        let potential = ShellPotential::new(cfg.potential.lambda, cfg.potential.a)?;
        let states = initial_states(cmd, cfg)?;
        let n = truncation(&potential, &states, &cfg.truncation)?;
        let basis = Arc::new(ResonantBasis::new(&potential, n)?);
        let tau = basis.lifetime();
        Ok(Self {
            cmd,
            cfg,
            potential,
            states,
            basis,
            tau,
        })
    }

    fn dir(&self) -> &Path {
        &self.cfg.outputs.directory
    }

    fn scale(&self) -> f64 {
        match self.cfg.time_grid.unit {
            TimeUnit::Lifetime => self.tau,
            TimeUnit::Absolute => 1.0,
        }
    }

    fn times(&self) -> Result<Vec<f64>, CliError> {
        let g = &self.cfg.time_grid;
        let s = self.scale();
        Ok(log_time_grid(g.t_min * s, g.t_max * s, g.points)?)
    }

    fn frame_times(&self, times: &[f64]) -> Vec<f64> {
        let m = self.cfg.outputs.frame_times;
        if m >= times.len() {
            return times.to_vec();
        }
        let last = times.len() - 1;
        let mut idx: Vec<usize> = (0..m)
            .map(|j| if m == 1 { last } else { (j * last + (m - 1) / 2) / (m - 1) })
            .collect();
        idx.dedup();
        idx.into_iter().map(|i| times[i]).collect()
    }

    fn single(&self, psi: &InitialState) -> Result<SingleParticle, CliError> {
        Ok(SingleParticle::new(self.basis.clone(), psi.clone())?.with_summation(self.cfg.summation))
    }

    fn two_body(&self) -> Result<TwoBodyState, CliError> {
        let init = &self.cfg.initial;
        let beta = match effective_kind(self.cfg) {
            StateKind::FactorizedSymmetric => None,
            StateKind::Entangled => {
                let beta = init
                    .beta
                    .ok_or_else(|| CliError::field("initial.beta", "entangled state needs beta"))?;
                Some((beta, init.exchange()?))
            }
        };
        Ok(TwoBodyState::box_states(self.basis.clone(), init.alpha, beta)?
            .with_summation(self.cfg.summation))
    }

    fn write(&self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>, extra: Value) -> Result<Vec<PathBuf>, CliError> {
        let path = self.dir().join(name);
        let mut buf = Vec::new();
        body(&mut buf).map_err(|e| CliError::io(&path, e))?;
        fs::write(&path, &buf).map_err(|e| CliError::io(&path, e))?;
        let meta_path = self.dir().join(format!("{name}.meta.json"));
        let mut meta = self.metadata(name);
        if let (Value::Object(m), Value::Object(x)) = (&mut meta, extra) {
            m.extend(x);
        }
        let mut text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        text.push('\n');
        fs::write(&meta_path, text).map_err(|e| CliError::io(&meta_path, e))?;
        Ok(vec![path, meta_path])
    }

    fn write_json(&self, name: &str, report: &Value) -> Result<Vec<PathBuf>, CliError> {
        self.write(
            name,
            |buf| {
                serde_json::to_writer_pretty(&mut *buf, report)?;
                buf.write_all(b"\n")
            },
            json!({}),
        )
    }

    fn metadata(&self, file: &str) -> Value {
        let hashed = hashed_config(self.cfg);
        let tr = &self.cfg.truncation;
        let strengths: Vec<f64> = self
            .states
            .iter()
            .filter_map(|psi| CoefficientSet::compute(&self.basis, psi).ok())
            .map(|c| strength_sum(&c))
            .collect();
        json!({
            "file": file,
            "command": self.cmd.name(),
            "engine": "resdecay",
            "version": env!("CARGO_PKG_VERSION"),
            "config_hash": config_hash(self.cfg),
            "config": hashed,
            "truncation": {
                "n": self.basis.len(),
                "mode": if tr.n.is_some() { "fixed" } else { "strength_tolerance" },
                "strength_sums": strengths,
            },
            "lifetime": self.tau,
            "tolerances": {
                "pole_residual": 1e-10 * self.potential.lambda(),
                "truncation_tol": if tr.n.is_some() { Value::Null } else { json!(tr.tol()) },
                "probability_slack": PROBABILITY_SLACK,
                "split_identity": 1e-12,
                "exchange_symmetry": 1e-12,
                "onset_threshold": self.cfg.fit.onset_threshold,
            },
        })
    }

    fn poles(&self) -> Result<Vec<PathBuf>, CliError> {
        let set = self.basis.poles();
        let audit = set.audit();
        let extra = json!({
            "audit": {
                "count": audit.count,
                "winding": audit.winding,
                "max_residual": set.max_residual(),
            }
        });
        self.write("poles.csv", |buf| set.write_csv(buf), extra)
    }

    fn evolve1(&self) -> Result<Vec<PathBuf>, CliError> {
        let sp = self.single(&self.states[0])?;
        let times = self.times()?;
        let mut written = Vec::new();
        if self.cfg.outputs.curves {
            let curves = sp.curves(&times)?;
            check_probabilities(&curves.survival, &curves.nonescape)?;
            written.extend(self.write("curves.csv", |buf| curves.write_csv(buf), json!({}))?);
        }
        if self.cfg.outputs.frames {
            let frames = sp.frames(&self.frame_times(&times), self.cfg.spatial_grid.points)?;
            written.extend(self.write("frames.csv", |buf| write_frames_csv(&frames, buf), json!({}))?);
        }
        if self.cfg.outputs.coefficients {
            let coeffs = sp.coefficients();
            written.extend(self.write("coefficients.csv", |buf| coeffs.write_csv(buf), json!({}))?);
        }
        Ok(written)
    }

    fn evolve2(&self) -> Result<Vec<PathBuf>, CliError> {
        let state = self.two_body()?;
        let times = self.times()?;
        let mut written = Vec::new();
        let extra = json!({ "state": state.kind(), "sign": state.sign() });
        if self.cfg.outputs.curves {
            let curves = state.curves(&times)?;
            check_probabilities(&curves.survival, &curves.nonescape)?;
            written.extend(self.write("two_body_curves.csv", |buf| curves.write_csv(buf), extra.clone())?);
        }
        if self.cfg.outputs.frames {
            let frames = state.frames(&self.frame_times(&times), self.cfg.spatial_grid.points)?;
            written.extend(self.write(
                "two_body_frames.csv",
                |buf| write_two_body_frames_csv(&frames, buf),
                extra,
            )?);
        }
        Ok(written)
    }

    fn audit(&self) -> Result<Vec<PathBuf>, CliError> {
        let set = self.basis.poles();
        let lambda = self.potential.lambda();
        let norm_residual = self
            .basis
            .states()
            .iter()
            .map(|s| s.normalization_residual())
            .collect::<Result<Vec<f64>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let tol = self.cfg.truncation.tol();
        let coeffs: Vec<CoefficientSet> = self
            .states
            .iter()
            .map(|psi| CoefficientSet::compute(&self.basis, psi))
            .collect::<Result<_, _>>()?;
        let strength: Vec<Value> = self
            .states
            .iter()
            .zip(&coeffs)
            .map(|(psi, c)| {
                let s = strength_sum(c);
                json!({
                    "state": psi.kind(),
                    "strength_sum": s,
                    "deficit": 1.0 - s,
                    "tolerance": tol,
                    "within_tolerance": (1.0 - s).abs() <= tol,
                })
            })
            .collect();
        let n = self.basis.len();
        let mut smeared = Vec::new();
        for i in 0..coeffs.len() {
            for j in i..coeffs.len() {
                smeared.push(json!({
                    "pair": [i, j],
                    "rules": rules_json(&smeared_sum_rules(&self.basis, &coeffs[i], &coeffs[j], n)),
                }));
            }
        }
        let a = self.potential.a();
        let report = json!({
            "potential": { "lambda": lambda, "a": a },
            "n": n,
            "lifetime": self.tau,
            "poles": {
                "count": set.audit().count,
                "winding": set.audit().winding,
                "max_residual": set.max_residual(),
                "residual_bound": 1e-10 * lambda,
                "residual_ok": set.max_residual() <= 1e-10 * lambda,
                "argument_principle_ok": set.audit().count == n as i64,
            },
            "normalization": { "max_residual": norm_residual },
            "strength": strength,
            "strength_sum": strength_sum(&coeffs[0]),
            "smeared_sum_rules": smeared,
            "pointwise_sum_rules": rules_json(&pointwise_sum_rules(&self.basis, 0.5 * a, 0.5 * a, n)),
        });
        self.write_json("audit.json", &report)
    }

    fn tailfit(&self) -> Result<Vec<PathBuf>, CliError> {
        let fit = &self.cfg.fit;
        let times = self.times()?;
        let a = self.potential.a();
        let (values, fractions): (Vec<f64>, Vec<f64>) = if fit.two_body {
            let state = self.two_body()?;
            let [x, y] = fit.point.unwrap_or([0.3, 0.6]);
            let (r1, r2) = (x * a, y * a);
            let rows = times
                .iter()
                .map(|&t| -> Result<(f64, f64), CliError> {
                    Ok(match fit.quantity {
                        FitQuantity::Survival => {
                            let s = state.survival_split(t)?;
                            (s.total().norm_sqr(), s.exponential_fraction())
                        }
                        FitQuantity::Nonescape => (
                            state.nonescape_probability(t)?,
                            state.survival_split(t)?.exponential_fraction(),
                        ),
                        FitQuantity::Wavefunction => {
                            let s = state.evolve_split(r1, r2, t)?;
                            (s.total().norm(), s.exponential_fraction())
                        }
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.into_iter().unzip()
        } else {
            let sp = self.single(&self.states[0])?;
            let r = fit.point.map_or(0.5, |p| p[0]) * a;
            let rows = times
                .iter()
                .map(|&t| -> Result<(f64, f64), CliError> {
                    Ok(match fit.quantity {
                        FitQuantity::Survival => {
                            let s = sp.survival_split(t)?;
                            (s.total().norm_sqr(), s.exponential_fraction())
                        }
                        FitQuantity::Nonescape => (
                            sp.nonescape_probability(t)?,
                            sp.survival_split(t)?.exponential_fraction(),
                        ),
                        FitQuantity::Wavefunction => {
                            let s = sp.evolve_split(r, t)?;
                            (s.total().norm(), s.exponential_fraction())
                        }
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.into_iter().unzip()
        };
        let onset = post_exponential_onset(&times, &fractions, fit.onset_threshold);
        let scale = self.scale();
        let (lo, hi) = match fit.window {
            Some([lo, hi]) => (lo * scale, hi * scale),
            None => {
                let lo = onset.ok_or_else(|| {
                    CliError::Numerical("exponential part never drops below the onset threshold".into())
                })?;
                (lo, *times.last().expect("grid has points"))
            }
        };
        let f = tail_fit(&times, &values, lo, hi)?;
        let report = TailReport {
            quantity: fit.quantity,
            two_body: fit.two_body,
            window: [lo / scale, hi / scale],
            onset: onset.map(|t| t / scale),
            unit: self.cfg.time_grid.unit,
            slope: f.slope,
            stderr: f.stderr,
            intercept: f.intercept,
            points: f.points,
            decades: f.decades,
        };
        self.write_json("tailfit.json", &serde_json::to_value(report).expect("report serializes"))
    }
}

#[derive(Serialize)]
struct TailReport {
    quantity: FitQuantity,
    two_body: bool,
    window: [f64; 2],
    onset: Option<f64>,
    unit: TimeUnit,
    slope: f64,
    stderr: f64,
    intercept: f64,
    points: usize,
    decades: f64,
}

/// Complex sums as `[re, im]`.
fn rules_json(r: &SumRules) -> Value {
    serde_json::to_value(r).expect("sum rules serialize")
}

fn effective_kind(cfg: &RunConfig) -> StateKind {
    if cfg.initial.beta.is_some() {
        StateKind::Entangled
    } else {
        cfg.initial.kind
    }
}

fn initial_states(cmd: Command, cfg: &RunConfig) -> Result<Vec<InitialState>, CliError> {
    let init = &cfg.initial;
    let a = cfg.potential.a;
    if init.kind == StateKind::FactorizedSymmetric && init.beta.is_some() {
        return Err(CliError::field("initial.beta", "factorized state takes no beta"));
    }
    let mut states = vec![InitialState::box_eigenstate(init.alpha, a)?];
    let two_body = matches!(cmd, Command::Evolve2)
        || (cmd == Command::Tailfit && cfg.fit.two_body)
        || cmd == Command::Audit;
    if two_body && effective_kind(cfg) == StateKind::Entangled {
        let beta = init
            .beta
            .ok_or_else(|| CliError::field("initial.beta", "entangled state needs beta"))?;
        if beta == init.alpha && cmd != Command::Audit {
            return Err(resdecay::Error::DegenerateState(format!(
                "entangled state needs alpha != beta, got {beta} twice"
            ))
            .into());
        }
        if cmd != Command::Audit {
            init.exchange()?;
        }
        states.push(InitialState::box_eigenstate(beta, a)?);
    }
    Ok(states)
}

/// Fixed `n`, or the largest count any constituent needs for its strength
/// deficit to drop below `tol`.
fn truncation(
    p: &ShellPotential,
    states: &[InitialState],
    tr: &TruncationConfig,
) -> Result<usize, CliError> {
    if let Some(n) = tr.n {
        return Ok(n);
    }
    let mut n = 1;
    for psi in states {
        n = n.max(choose_truncation_capped(p, psi, tr.tol(), tr.cap)?);
    }
    Ok(n)
}

fn check_probabilities(s: &[f64], p: &[f64]) -> Result<(), CliError> {
    let bad = s
        .iter()
        .chain(p)
        .find(|&&x| !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&x));
    match bad {
        Some(&x) => Err(CliError::Numerical(format!(
            "probability {x} outside [0, 1] beyond the truncation slack; raise the truncation"
        ))),
        None => Ok(()),
    }
}
