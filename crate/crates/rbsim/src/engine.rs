//! Time-domain propagation under compiled schedules and Monte Carlo
//! orchestration of benchmarking and coherence experiments.
//!
//! Within each integration step the Hamiltonian is
//! (1 + eps) omega_1 (cos phi S_x + sin phi S_y) + b S_z, so the step
//! propagator is the closed-form rotation about the summed field. Delays
//! with relaxation disabled collapse exactly to a single z-rotation by the
//! accumulated phase.
//!
//! Determinism contract: every shot draws from its own counter-derived
//! RNG stream and partial results are reduced in fixed index order, so the
//! output is byte-identical for any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::clifford::sample_rb_sequence;
use crate::error::{Error, Result};
use crate::noise::{
    sample_epsilon, AmplitudeErrorModel, NoiseTrajectory, OUParams, OUStream, RelaxationParams,
};
use crate::pulse::{
    compile_gate, compile_sequence, dd_cycle, nominal_gate_period, DdKind, GateParams,
    PulseSchedule, PulseStyle, SchemeId, SegmentKind,
};
use crate::clifford::{GGate, PGate};
use crate::su2::{rotate_bloch, QubitState};

/// Full description of a Monte Carlo run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Integration step, seconds.
    pub dt: f64,
    /// Noise trajectories per sequence.
    pub n_noise: usize,
    /// Random sequences per length.
    pub n_sequences: usize,
    /// Sequence lengths.
    pub m_values: Vec<usize>,
    pub scheme: SchemeId,
    pub gate_params: GateParams,
    /// Dephasing noise; `None` switches it off.
    pub noise: Option<OUParams>,
    pub eps_model: AmplitudeErrorModel,
    pub relaxation: RelaxationParams,
    pub master_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1.0e-7,
            n_noise: 100,
            n_sequences: 32,
            m_values: vec![1, 2, 4, 8, 16, 32, 48, 64, 80],
            scheme: SchemeId::BareBb1,
            gate_params: GateParams::default(),
            noise: None,
            eps_model: AmplitudeErrorModel::Off,
            relaxation: RelaxationParams::off(),
            master_seed: 0,
        }
    }
}

impl SimConfig {
    fn validate_common(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidInput(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.n_sequences == 0 {
            return Err(Error::InvalidInput("n_sequences must be >= 1".into()));
        }
        if self.n_noise == 0 {
            return Err(Error::InvalidInput("n_noise must be >= 1".into()));
        }
        self.eps_model.validate()?;
        self.gate_params.validate()
    }

    fn validate_rb(&self) -> Result<()> {
        self.validate_common()?;
        if self.m_values.is_empty() {
            return Err(Error::InvalidInput("m_values must not be empty".into()));
        }
        if self.m_values.windows(2).any(|w| w[1] <= w[0]) || self.m_values[0] == 0 {
            return Err(Error::InvalidInput(
                "m_values must be strictly increasing and >= 1".into(),
            ));
        }
        let probe = compile_gate(PGate::XPlus, GGate::X90Plus, self.scheme, self.gate_params)?;
        let shortest = probe.shortest_segment();
        if self.dt > shortest / 10.0 + 1e-15 {
            return Err(Error::InvalidInput(format!(
                "dt = {} s must not exceed a tenth of the shortest segment ({} s)",
                self.dt,
                shortest / 10.0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub mean: f64,
    pub stderr: f64,
}

/// Survival or coherence versus sequence length or time.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve {
    pub points: Vec<CurvePoint>,
    /// Gate period (beginning of one P gate to the beginning of the next)
    /// for benchmarking curves.
    pub tau_gate: Option<f64>,
    pub scheme: Option<SchemeId>,
    pub label: String,
}

/// Coherence experiments: free induction, single echo, or repeated
/// decoupling cycles with the coherence recorded after each cycle.
#[derive(Debug, Clone, PartialEq)]
pub enum CoherenceKind {
    Fid { t_max: f64, points: usize },
    Hahn { t_max: f64, points: usize },
    Dd { kind: DdKind, style: PulseStyle, tau_delay: f64, n_cycles: usize },
}

// Seed-stream purposes.
const PURPOSE_SEQUENCE: u8 = 1;
const PURPOSE_SHOT: u8 = 2;
const PURPOSE_COHERENCE: u8 = 3;

/// Independent, reproducible RNG stream addressed by purpose and indices.
fn stream_rng(master: u64, purpose: u8, a: usize, b: usize, c: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    let stream = ((purpose as u64) << 56)
        | (((a as u64) & 0xffff) << 40)
        | (((b as u64) & 0xffff) << 24)
        | ((c as u64) & 0xff_ffff);
    rng.set_stream(stream);
    rng
}

enum NoiseSource<'a> {
    Off,
    Stream(OUStream),
    Trajectory(&'a NoiseTrajectory),
}

impl NoiseSource<'_> {
    /// Field value for the step centered at `t_mid`. Stream sources advance
    /// sequentially; trajectory sources are indexed by absolute time so the
    /// same realization can be re-integrated at a different step size.
    #[inline]
    fn value(&mut self, t_mid: f64, dt: f64) -> f64 {
        match self {
            NoiseSource::Off => 0.0,
            NoiseSource::Stream(s) => s.step(dt),
            NoiseSource::Trajectory(traj) => {
                let idx = (t_mid / traj.dt) as usize;
                traj.samples[idx.min(traj.samples.len() - 1)]
            }
        }
    }
}

struct Stepper<'a> {
    dt: f64,
    eps: f64,
    t1: Option<f64>,
    source: NoiseSource<'a>,
    /// Absolute time cursor.
    t: f64,
    r: [f64; 3],
}

impl Stepper<'_> {
    #[inline]
    fn damp(&mut self, p: f64) {
        let s = (1.0 - p).sqrt();
        self.r[0] *= s;
        self.r[1] *= s;
        self.r[2] = self.r[2] * (1.0 - p) + p;
    }

    #[inline]
    fn rotate_z(&mut self, angle: f64) {
        let (s, c) = angle.sin_cos();
        let (x, y) = (self.r[0], self.r[1]);
        self.r[0] = x * c - y * s;
        self.r[1] = x * s + y * c;
    }

    fn run_segment(&mut self, seg: &crate::pulse::PulseSegment) {
        let n = (seg.duration / self.dt).round().max(1.0) as usize;
        let dt_k = seg.duration / n as f64;
        match seg.kind {
            SegmentKind::Delay => {
                if self.t1.is_none() {
                    // z-rotations commute: accumulate the whole segment's
                    // phase and apply it once. Exact given the noise grid.
                    let mut phase = 0.0;
                    for k in 0..n {
                        let t_mid = self.t + (k as f64 + 0.5) * dt_k;
                        phase += self.source.value(t_mid, dt_k) * dt_k;
                    }
                    self.rotate_z(phase);
                } else {
                    let p_step = 1.0 - (-dt_k / self.t1.unwrap()).exp();
                    for k in 0..n {
                        let t_mid = self.t + (k as f64 + 0.5) * dt_k;
                        let b = self.source.value(t_mid, dt_k);
                        self.rotate_z(b * dt_k);
                        self.damp(p_step);
                    }
                }
            }
            SegmentKind::Drive => {
                let w = (1.0 + self.eps) * seg.amplitude;
                let (sp, cp) = seg.phase.sin_cos();
                let (wx, wy) = (w * cp, w * sp);
                let p_step = self.t1.map(|t1| 1.0 - (-dt_k / t1).exp());
                for k in 0..n {
                    let t_mid = self.t + (k as f64 + 0.5) * dt_k;
                    let b = self.source.value(t_mid, dt_k);
                    let omega = (w * w + b * b).sqrt();
                    if omega > 0.0 {
                        let inv = 1.0 / omega;
                        self.r = rotate_bloch(
                            self.r,
                            [wx * inv, wy * inv, b * inv],
                            omega * dt_k,
                        );
                    }
                    if let Some(p) = p_step {
                        self.damp(p);
                    }
                }
            }
        }
        self.t += seg.duration;
        debug_assert!(
            self.r[0] * self.r[0] + self.r[1] * self.r[1] + self.r[2] * self.r[2]
                <= 1.0 + 1e-9,
            "Bloch norm left the unit ball"
        );
    }

    fn run_schedule(&mut self, sched: &PulseSchedule) {
        for seg in &sched.segments {
            self.run_segment(seg);
        }
    }
}

/// Closed-form propagation when noise and relaxation are off: each drive
/// segment is a single exact rotation.
fn propagate_ideal(r: [f64; 3], sched: &PulseSchedule, eps: f64) -> [f64; 3] {
    let mut r = r;
    for seg in &sched.segments {
        if let SegmentKind::Drive = seg.kind {
            let angle = (1.0 + eps) * seg.nutation();
            let (sp, cp) = seg.phase.sin_cos();
            r = rotate_bloch(r, [cp, sp, 0.0], angle);
        }
    }
    r
}

/// Propagates a state through a schedule against a sampled noise
/// realization (stepped at the trajectory's dt, relaxation off).
pub fn propagate(
    state: &QubitState,
    sched: &PulseSchedule,
    traj: &NoiseTrajectory,
    eps: f64,
) -> Result<QubitState> {
    propagate_with(state, sched, Some(traj), eps, traj.dt, RelaxationParams::off())
}

/// Propagation with explicit step size and relaxation. The trajectory, when
/// present, is indexed by absolute time, so `dt` may be finer than the
/// trajectory grid.
pub fn propagate_with(
    state: &QubitState,
    sched: &PulseSchedule,
    traj: Option<&NoiseTrajectory>,
    eps: f64,
    dt: f64,
    relaxation: RelaxationParams,
) -> Result<QubitState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!("dt must be > 0, got {dt}")));
    }
    let source = match traj {
        Some(traj) => {
            let needed = ((sched.total_duration() / traj.dt) - 1e-9).ceil() as usize;
            if traj.samples.len() < needed {
                return Err(Error::TrajectoryTooShort {
                    needed,
                    got: traj.samples.len(),
                });
            }
            NoiseSource::Trajectory(traj)
        }
        None => NoiseSource::Off,
    };
    if matches!(source, NoiseSource::Off) && relaxation.t1().is_none() {
        return Ok(QubitState::from_bloch_unchecked(propagate_ideal(
            state.bloch(),
            sched,
            eps,
        )));
    }
    let mut stepper = Stepper {
        dt,
        eps,
        t1: relaxation.t1(),
        source,
        t: 0.0,
        r: state.bloch(),
    };
    stepper.run_schedule(sched);
    Ok(QubitState::from_bloch_unchecked(stepper.r))
}

/// Single benchmarking shot: survival = ideal sign times final <S_z>.
fn rb_shot(
    compiled: &crate::pulse::CompiledSequence,
    eps: f64,
    noise: Option<(OUParams, ChaCha8Rng)>,
    dt: f64,
    relaxation: RelaxationParams,
) -> f64 {
    let start = [0.0, 0.0, 1.0];
    let r = match noise {
        None if relaxation.t1().is_none() => propagate_ideal(start, &compiled.schedule, eps),
        _ => {
            let source = match noise {
                Some((params, rng)) => NoiseSource::Stream(OUStream::new(params, rng)),
                None => NoiseSource::Off,
            };
            let mut stepper = Stepper {
                dt,
                eps,
                t1: relaxation.t1(),
                source,
                t: 0.0,
                r: start,
            };
            stepper.run_schedule(&compiled.schedule);
            stepper.r
        }
    };
    compiled.sign as f64 * r[2]
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs the benchmarking protocol: for each sequence length, the
/// sign-corrected survival averaged over random sequences and noise
/// trajectories. Sequence draws and shots are indexed RNG streams, so the
/// result is independent of scheduling.
pub fn run_rb(cfg: &SimConfig) -> Result<DecayCurve> {
    cfg.validate_rb()?;
    let tau = nominal_gate_period(cfg.scheme, cfg.gate_params)?;

    let jobs: Vec<(usize, usize)> = (0..cfg.m_values.len())
        .flat_map(|mi| (0..cfg.n_sequences).map(move |si| (mi, si)))
        .collect();

    let per_sequence: Vec<f64> = jobs
        .par_iter()
        .map(|&(mi, si)| {
            let m = cfg.m_values[mi];
            let mut seq_rng = stream_rng(cfg.master_seed, PURPOSE_SEQUENCE, mi, si, 0);
            let seq = sample_rb_sequence(m, &mut seq_rng);
            let compiled = compile_sequence(&seq, cfg.scheme, cfg.gate_params)
                .expect("gate params validated");
            let mut acc = 0.0;
            for ti in 0..cfg.n_noise {
                let mut shot_rng = stream_rng(cfg.master_seed, PURPOSE_SHOT, mi, si, ti);
                let eps = sample_epsilon(&cfg.eps_model, &mut shot_rng);
                let noise = cfg.noise.map(|p| (p, shot_rng));
                acc += rb_shot(&compiled, eps, noise, cfg.dt, cfg.relaxation);
            }
            acc / cfg.n_noise as f64
        })
        .collect();

    let mut points = Vec::with_capacity(cfg.m_values.len());
    for (mi, &m) in cfg.m_values.iter().enumerate() {
        let slice = &per_sequence[mi * cfg.n_sequences..(mi + 1) * cfg.n_sequences];
        let (mean, stderr) = mean_and_stderr(slice);
        points.push(CurvePoint { x: m as f64, mean, stderr });
    }
    Ok(DecayCurve {
        points,
        tau_gate: Some(tau),
        scheme: Some(cfg.scheme),
        label: format!("rb_{}", cfg.scheme),
    })
}

/// Runs a coherence experiment from the +x superposition state; the curve
/// is <S_x> versus time.
pub fn run_coherence(kind: &CoherenceKind, cfg: &SimConfig) -> Result<DecayCurve> {
    cfg.validate_common()?;
    match kind {
        CoherenceKind::Fid { t_max, points } => run_fid_like(cfg, *t_max, *points, false),
        CoherenceKind::Hahn { t_max, points } => run_fid_like(cfg, *t_max, *points, true),
        CoherenceKind::Dd { kind, style, tau_delay, n_cycles } => {
            run_dd(cfg, *kind, *style, *tau_delay, *n_cycles)
        }
    }
}

/// Free-induction and single-echo decays share one trajectory per shot:
/// delay phases come from prefix sums of the sampled field, and the echo's
/// finite refocusing pulse is integrated step by step on the same
/// realization.
fn run_fid_like(cfg: &SimConfig, t_max: f64, points: usize, echo: bool) -> Result<DecayCurve> {
    if !(t_max > 0.0) || points < 2 {
        return Err(Error::InvalidInput(
            "coherence runs need t_max > 0 and at least 2 points".into(),
        ));
    }
    let dt = cfg.dt;
    let t_pi = cfg.gate_params.t_pi();
    if echo && dt > t_pi / 10.0 + 1e-15 {
        return Err(Error::InvalidInput(format!(
            "dt = {dt} s must not exceed a tenth of the refocusing pulse ({} s)",
            t_pi / 10.0
        )));
    }
    // Snap sample times to the step grid (halves must be grid-aligned).
    let steps_max = ((t_max / dt).ceil() as usize).max(2);
    let grid: Vec<usize> = (0..=points)
        .map(|i| ((steps_max * i) as f64 / points as f64).round() as usize)
        .map(|n| if echo { n / 2 * 2 } else { n })
        .collect();
    let pulse_steps = (t_pi / dt).round().max(1.0) as usize;
    let total_steps = steps_max + if echo { pulse_steps } else { 0 };

    let per_traj: Vec<Vec<f64>> = (0..cfg.n_noise)
        .into_par_iter()
        .map(|ti| {
            let mut rng = stream_rng(cfg.master_seed, PURPOSE_COHERENCE, 0, 0, ti);
            let eps = sample_epsilon(&cfg.eps_model, &mut rng);
            // Sampled field and its phase prefix sums on the step grid.
            let (samples, prefix) = match cfg.noise {
                Some(params) => {
                    let mut stream = OUStream::new(params, rng);
                    let mut samples = Vec::with_capacity(total_steps);
                    let mut prefix = Vec::with_capacity(total_steps + 1);
                    prefix.push(0.0);
                    let mut acc = 0.0;
                    for _ in 0..total_steps {
                        let b = stream.step(dt);
                        samples.push(b);
                        acc += b * dt;
                        prefix.push(acc);
                    }
                    (samples, prefix)
                }
                None => (vec![0.0; total_steps], vec![0.0; total_steps + 1]),
            };
            grid.iter()
                .map(|&n| {
                    if !echo {
                        return (prefix[n]).cos();
                    }
                    let half = n / 2;
                    // First free half: pure z-precession from +x.
                    let phi1 = prefix[half];
                    let mut r = [phi1.cos(), phi1.sin(), 0.0];
                    // Finite-width pi pulse about +y on the same timeline.
                    let w = (1.0 + eps) * cfg.gate_params.omega1;
                    for k in 0..pulse_steps {
                        let b = samples[half + k];
                        let omega = (w * w + b * b).sqrt();
                        let inv = 1.0 / omega;
                        r = rotate_bloch(r, [0.0, w * inv, b * inv], omega * dt);
                    }
                    // Second free half. The +y refocusing pulse forms the
                    // echo along -x; report the sign-corrected amplitude.
                    let phi2 = prefix[half + pulse_steps + half] - prefix[half + pulse_steps];
                    let (s, c) = phi2.sin_cos();
                    -(r[0] * c - r[1] * s)
                })
                .collect()
        })
        .collect();

    let mut points_out = Vec::with_capacity(grid.len());
    for (gi, &n) in grid.iter().enumerate() {
        let values: Vec<f64> = per_traj.iter().map(|v| v[gi]).collect();
        let (mean, stderr) = mean_and_stderr(&values);
        points_out.push(CurvePoint { x: n as f64 * dt, mean, stderr });
    }
    // Snapping can collide adjacent grid points; keep the first of each x.
    points_out.dedup_by(|a, b| a.x == b.x);
    Ok(DecayCurve {
        points: points_out,
        tau_gate: None,
        scheme: None,
        label: if echo { "hahn".into() } else { "fid".into() },
    })
}

fn run_dd(
    cfg: &SimConfig,
    kind: DdKind,
    style: PulseStyle,
    tau_delay: f64,
    n_cycles: usize,
) -> Result<DecayCurve> {
    if n_cycles == 0 {
        return Err(Error::InvalidInput("n_cycles must be >= 1".into()));
    }
    let cycle = dd_cycle(kind, style, tau_delay, cfg.gate_params.omega1)?;
    let shortest = cycle.shortest_segment();
    if cfg.dt > shortest / 10.0 + 1e-15 {
        return Err(Error::InvalidInput(format!(
            "dt = {} s must not exceed a tenth of the shortest cycle segment ({} s)",
            cfg.dt,
            shortest / 10.0
        )));
    }
    let cycle_duration = cycle.total_duration();

    let per_traj: Vec<Vec<f64>> = (0..cfg.n_noise)
        .into_par_iter()
        .map(|ti| {
            let mut rng = stream_rng(cfg.master_seed, PURPOSE_COHERENCE, 1, 0, ti);
            let eps = sample_epsilon(&cfg.eps_model, &mut rng);
            let source = match cfg.noise {
                Some(params) => NoiseSource::Stream(OUStream::new(params, rng)),
                None => NoiseSource::Off,
            };
            let mut stepper = Stepper {
                dt: cfg.dt,
                eps,
                t1: cfg.relaxation.t1(),
                source,
                t: 0.0,
                r: [1.0, 0.0, 0.0],
            };
            (0..n_cycles)
                .map(|_| {
                    stepper.run_schedule(&cycle);
                    stepper.r[0]
                })
                .collect()
        })
        .collect();

    let mut points = Vec::with_capacity(n_cycles);
    for ci in 0..n_cycles {
        let values: Vec<f64> = per_traj.iter().map(|v| v[ci]).collect();
        let (mean, stderr) = mean_and_stderr(&values);
        points.push(CurvePoint {
            x: (ci + 1) as f64 * cycle_duration,
            mean,
            stderr,
        });
    }
    Ok(DecayCurve {
        points,
        tau_gate: None,
        scheme: None,
        label: format!("dd_{kind:?}").to_lowercase(),
    })
}
