//! Timed pulse schedules: rectangular pulses, BB1 and KDD-5 composites,
//! XY-4/8/16 decoupling cycles, and the protected-gate scheme layouts.
//!
//! Schedules are piecewise-constant control descriptions: every segment is
//! either a resonant drive of fixed amplitude and phase or a delay. Phases
//! are emitted with the software-frame offset already folded in, so the
//! engine never needs frame state.

use std::f64::consts::PI;
use std::fmt;

use crate::clifford::{CliffordElement, GGate, PGate, PauliFrame, PhysKind, PulseAngle, Recovery, RBSequence};
use crate::error::{Error, Result};
use crate::su2::{rotation_from_bloch_matrix, Rotation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Drive,
    Delay,
}

/// One piecewise-constant control interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSegment {
    pub kind: SegmentKind,
    /// Seconds; always > 0.
    pub duration: f64,
    /// Drive amplitude omega_1 in rad/s; 0 for delays.
    pub amplitude: f64,
    /// Drive phase in radians (frame offset already applied).
    pub phase: f64,
}

impl PulseSegment {
    /// Nominal rotation angle of a drive segment, omega_1 * duration.
    pub fn nutation(&self) -> f64 {
        self.amplitude * self.duration
    }
}

/// An immutable pulse schedule with its intended net rotation.
///
/// The ideal SO(3) action of the emitted segments equals
/// R_z(frame_shift) composed after `ideal_rotation`; the trailing
/// z-rotation, when nonzero, is absorbed by the caller's frame tracker.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    pub segments: Vec<PulseSegment>,
    pub ideal_rotation: Rotation,
    /// Trailing z-rotation (radians) left by the segments beyond the ideal
    /// rotation; -pi/3 for KDD-5, 0 elsewhere.
    pub frame_shift: f64,
}

impl PulseSchedule {
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn shortest_segment(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.duration)
            .fold(f64::INFINITY, f64::min)
    }

    /// Drive time spent in pi-rotation segments divided by total drive time.
    pub fn pi_pulse_fraction(&self) -> f64 {
        let mut pi_time = 0.0;
        let mut drive_time = 0.0;
        for s in &self.segments {
            if let SegmentKind::Drive = s.kind {
                drive_time += s.duration;
                if (s.nutation() - PI).abs() < 1e-9 {
                    pi_time += s.duration;
                }
            }
        }
        if drive_time == 0.0 {
            0.0
        } else {
            pi_time / drive_time
        }
    }

    /// Plain-text timing table, one segment per line:
    /// start_time, duration, amplitude, phase, kind.
    pub fn timing_table(&self) -> String {
        let mut out = String::from("start_time,duration,amplitude,phase,kind\n");
        let mut t = 0.0;
        for s in &self.segments {
            let kind = match s.kind {
                SegmentKind::Drive => "drive",
                SegmentKind::Delay => "delay",
            };
            out.push_str(&format!(
                "{:.9e},{:.9e},{:.9e},{:.9e},{}\n",
                t, s.duration, s.amplitude, s.phase, kind
            ));
            t += s.duration;
        }
        out
    }
}

/// The gate layouts compared by the benchmarking study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeId {
    /// Plain rectangular P and G pulses, back to back.
    BareRect,
    /// BB1 composite P and G pulses, back to back.
    BareBb1,
    /// KDD-5 for P; G as a BB1 with its correction pi-pulses spread out by
    /// delays so they decouple while computing.
    SchemeA,
    /// BB1 PG gates riding a decoupling train: one BB1 pi pulse per gate,
    /// phases following the XY-16 progression, no extra delays.
    SchemeB,
    /// Compute-then-decouple: BB1 PG gate, then a padded BB1 decoupling
    /// pulse (XY-16 phase progression).
    SchemeC,
    /// PG gate embedded mid-cycle in a rectangular-pulse decoupling block
    /// (four pulses per gate; XY-16 completes every four gates).
    SchemeD,
    /// PG gate followed by an appended rectangular-pulse decoupling block
    /// (four pulses per gate).
    SchemeE,
}

impl SchemeId {
    pub const ALL: [SchemeId; 7] = [
        SchemeId::BareRect,
        SchemeId::BareBb1,
        SchemeId::SchemeA,
        SchemeId::SchemeB,
        SchemeId::SchemeC,
        SchemeId::SchemeD,
        SchemeId::SchemeE,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SchemeId::BareRect => "bare_rect",
            SchemeId::BareBb1 => "bare_bb1",
            SchemeId::SchemeA => "scheme_a",
            SchemeId::SchemeB => "scheme_b",
            SchemeId::SchemeC => "scheme_c",
            SchemeId::SchemeD => "scheme_d",
            SchemeId::SchemeE => "scheme_e",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        SchemeId::ALL
            .iter()
            .copied()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown scheme '{s}'")))
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseStyle {
    Rect,
    Bb1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdKind {
    Xy4,
    Xy8,
    Xy16,
}

impl DdKind {
    pub fn pulse_count(&self) -> usize {
        match self {
            DdKind::Xy4 => 4,
            DdKind::Xy8 => 8,
            DdKind::Xy16 => 16,
        }
    }
}

/// XY-16 phase progression in units of pi/6: XY-4, its time reverse, then
/// the phase-inverted copies of both.
const XY16_PHASES: [i32; 16] = [0, 3, 0, 3, 3, 0, 3, 0, 6, 9, 6, 9, 9, 6, 9, 6];

/// Amplitude calibration and per-scheme layout delays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateParams {
    /// Drive amplitude omega_1 in rad/s.
    pub omega1: f64,
    /// Delay preceding each correction pi-unit in scheme (a)'s spread gate.
    pub scheme_a_delay: f64,
    /// Whether a delay also separates the initial theta pulse from the
    /// first correction unit in scheme (a).
    pub scheme_a_lead_delay: bool,
    /// Delay on each side of the decoupling pulse in scheme (c).
    pub scheme_c_pad: f64,
    /// Base inter-pulse delay of the embedded decoupling block, scheme (d).
    pub scheme_d_delay: f64,
    /// Base inter-pulse delay of the appended decoupling block, scheme (e).
    pub scheme_e_delay: f64,
}

impl Default for GateParams {
    fn default() -> Self {
        // t_pi = 8 us; layout delays chosen so the nominal gate periods
        // come out at 76/88/116/152/336/384 us for the bb1/a-e presets.
        Self {
            omega1: PI / 8.0e-6,
            scheme_a_delay: 3.0e-6,
            scheme_a_lead_delay: true,
            scheme_c_pad: 18.0e-6,
            scheme_d_delay: 57.0e-6,
            scheme_e_delay: 69.0e-6,
        }
    }
}

impl GateParams {
    pub fn t_pi(&self) -> f64 {
        PI / self.omega1
    }

    pub fn with_t_pi(mut self, t_pi: f64) -> Self {
        self.omega1 = PI / t_pi;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega1 > 0.0) || !self.omega1.is_finite() {
            return Err(Error::InvalidInput(format!(
                "omega1 must be > 0, got {}",
                self.omega1
            )));
        }
        for (name, v) in [
            ("scheme_a_delay", self.scheme_a_delay),
            ("scheme_c_pad", self.scheme_c_pad),
            ("scheme_d_delay", self.scheme_d_delay),
            ("scheme_e_delay", self.scheme_e_delay),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

fn push_drive(segments: &mut Vec<PulseSegment>, angle: f64, phase: f64, omega1: f64) {
    segments.push(PulseSegment {
        kind: SegmentKind::Drive,
        duration: angle / omega1,
        amplitude: omega1,
        phase,
    });
}

fn push_delay(segments: &mut Vec<PulseSegment>, duration: f64) {
    if duration > 0.0 {
        segments.push(PulseSegment {
            kind: SegmentKind::Delay,
            duration,
            amplitude: 0.0,
            phase: 0.0,
        });
    }
}

fn bb1_beta(theta: f64) -> f64 {
    (-theta / (4.0 * PI)).acos()
}

fn rect_block(segments: &mut Vec<PulseSegment>, theta: f64, base: f64, omega1: f64) {
    push_drive(segments, theta, base, omega1);
}

/// theta pulse followed by the pi / 2pi / pi correction; `offset_sign`
/// mirrors the internal beta offsets (used when the block is emitted
/// conjugated by an x- or y-type toggling Pauli).
fn bb1_block(segments: &mut Vec<PulseSegment>, theta: f64, base: f64, omega1: f64, offset_sign: f64) {
    let beta = offset_sign * bb1_beta(theta);
    push_drive(segments, theta, base, omega1);
    push_drive(segments, PI, base + beta, omega1);
    push_drive(segments, 2.0 * PI, base + 3.0 * beta, omega1);
    push_drive(segments, PI, base + beta, omega1);
}

/// BB1 with the 2pi segment split into two pi segments and a delay before
/// each of the four pi-units, so the correction doubles as decoupling.
fn spread_bb1_block(
    segments: &mut Vec<PulseSegment>,
    theta: f64,
    base: f64,
    omega1: f64,
    offset_sign: f64,
    unit_delay: f64,
    lead_delay: bool,
) {
    let beta = offset_sign * bb1_beta(theta);
    push_drive(segments, theta, base, omega1);
    let phases = [base + beta, base + 3.0 * beta, base + 3.0 * beta, base + beta];
    for (i, &phase) in phases.iter().enumerate() {
        if i > 0 || lead_delay {
            push_delay(segments, unit_delay);
        }
        push_drive(segments, PI, phase, omega1);
    }
}

/// Five contiguous pi pulses at offsets pi/6, 0, pi/2, 0, pi/6 from the
/// base phase. The ideal product is the base-phase inversion times a
/// trailing z-rotation of -offset_sign * pi/3.
fn kdd5_block(segments: &mut Vec<PulseSegment>, base: f64, omega1: f64, offset_sign: f64) {
    for off in [PI / 6.0, 0.0, PI / 2.0, 0.0, PI / 6.0] {
        push_drive(segments, PI, base + offset_sign * off, omega1);
    }
}

fn dd_pulse_block(segments: &mut Vec<PulseSegment>, style: PulseStyle, base: f64, omega1: f64, offset_sign: f64) {
    match style {
        PulseStyle::Rect => rect_block(segments, PI, base, omega1),
        PulseStyle::Bb1 => bb1_block(segments, PI, base, omega1, offset_sign),
    }
}

/// Single rectangular pulse R_phi(theta).
pub fn rectangular(theta: f64, phi: f64, omega1: f64) -> Result<PulseSchedule> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::InvalidInput(format!("theta must be > 0, got {theta}")));
    }
    if !(omega1 > 0.0) || !omega1.is_finite() {
        return Err(Error::InvalidInput(format!("omega1 must be > 0, got {omega1}")));
    }
    let mut segments = Vec::with_capacity(1);
    rect_block(&mut segments, theta, phi, omega1);
    Ok(PulseSchedule {
        segments,
        ideal_rotation: Rotation::about_xy(phi, theta),
        frame_shift: 0.0,
    })
}

/// BB1 composite rotation: the theta pulse followed by pi, 2pi, pi
/// correction pulses at phases beta, 3 beta, beta relative to it, with
/// beta = acos(-theta / 4 pi).
pub fn bb1(theta: f64, phi: f64, omega1: f64) -> Result<PulseSchedule> {
    if !(theta > 0.0) || theta > 4.0 * PI || !theta.is_finite() {
        return Err(Error::InvalidInput(format!(
            "theta must be in (0, 4 pi] for the correction phase to exist, got {theta}"
        )));
    }
    if !(omega1 > 0.0) || !omega1.is_finite() {
        return Err(Error::InvalidInput(format!("omega1 must be > 0, got {omega1}")));
    }
    let mut segments = Vec::with_capacity(4);
    bb1_block(&mut segments, theta, phi, omega1, 1.0);
    Ok(PulseSchedule {
        segments,
        ideal_rotation: Rotation::about_xy(phi, theta),
        frame_shift: 0.0,
    })
}

/// BB1 with its correction expressed as four separated pi-units, each
/// preceded by a delay of twice the theta-pulse duration.
pub fn bb1_spread(theta: f64, phi: f64, omega1: f64) -> Result<PulseSchedule> {
    if !((theta - PI / 2.0).abs() < 1e-12 || (theta - PI).abs() < 1e-12) {
        return Err(Error::InvalidInput(format!(
            "spread BB1 is defined for theta = pi/2 or pi, got {theta}"
        )));
    }
    if !(omega1 > 0.0) || !omega1.is_finite() {
        return Err(Error::InvalidInput(format!("omega1 must be > 0, got {omega1}")));
    }
    let t_theta = theta / omega1;
    let mut segments = Vec::new();
    spread_bb1_block(&mut segments, theta, phi, omega1, 1.0, 2.0 * t_theta, true);
    Ok(PulseSchedule {
        segments,
        ideal_rotation: Rotation::about_xy(phi, theta),
        frame_shift: 0.0,
    })
}

/// KDD-5 composite inversion about the axis at azimuth phi. The schedule's
/// trailing -pi/3 z-rotation is reported in `frame_shift` for the caller's
/// frame tracker to absorb.
pub fn kdd5(phi: f64, omega1: f64) -> Result<PulseSchedule> {
    if !(omega1 > 0.0) || !omega1.is_finite() {
        return Err(Error::InvalidInput(format!("omega1 must be > 0, got {omega1}")));
    }
    let mut segments = Vec::with_capacity(5);
    kdd5_block(&mut segments, phi, omega1, 1.0);
    Ok(PulseSchedule {
        segments,
        ideal_rotation: Rotation::about_xy(phi, PI),
        frame_shift: -PI / 3.0,
    })
}

/// One decoupling cycle. XY-4 is [tau/2 X tau Y tau X tau Y tau/2]; XY-8
/// appends the time-reversed pulse order; XY-16 appends the phase-inverted
/// copy of XY-8. The net ideal action is the identity.
pub fn dd_cycle(kind: DdKind, style: PulseStyle, tau_delay: f64, omega1: f64) -> Result<PulseSchedule> {
    if !(tau_delay >= 0.0) || !tau_delay.is_finite() {
        return Err(Error::InvalidInput(format!(
            "tau_delay must be >= 0, got {tau_delay}"
        )));
    }
    if !(omega1 > 0.0) || !omega1.is_finite() {
        return Err(Error::InvalidInput(format!("omega1 must be > 0, got {omega1}")));
    }
    let n = kind.pulse_count();
    let mut segments = Vec::new();
    for (i, &sixths) in XY16_PHASES[..n].iter().enumerate() {
        push_delay(&mut segments, if i == 0 { tau_delay / 2.0 } else { tau_delay });
        dd_pulse_block(&mut segments, style, sixths as f64 * PI / 6.0, omega1, 1.0);
    }
    push_delay(&mut segments, tau_delay / 2.0);
    Ok(PulseSchedule {
        segments,
        ideal_rotation: Rotation::identity(),
        frame_shift: 0.0,
    })
}

/// Toggling Pauli tracked by the sequence compiler: decoupling pi pulses
/// are not part of the logical circuit, so later pulses are emitted
/// conjugated by the product of the decoupling Paulis seen so far.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TogglingPauli {
    I,
    X,
    Y,
    Z,
}

impl TogglingPauli {
    /// Phase of an equatorial rotation conjugated by this Pauli (pi/6 units).
    fn conj_phase(&self, sixths: i32) -> i32 {
        match self {
            TogglingPauli::I => sixths,
            TogglingPauli::X => -sixths,
            TogglingPauli::Y => 6 - sixths,
            TogglingPauli::Z => sixths + 6,
        }
        .rem_euclid(12)
    }

    /// Sign that internal (irrational) phase offsets pick up under
    /// conjugation: x/y Paulis mirror the phase axis.
    fn offset_sign(&self) -> f64 {
        match self {
            TogglingPauli::I | TogglingPauli::Z => 1.0,
            TogglingPauli::X | TogglingPauli::Y => -1.0,
        }
    }

    /// Whether conjugation flips the sign of z-rotations.
    fn z_flips(&self) -> bool {
        matches!(self, TogglingPauli::X | TogglingPauli::Y)
    }

    /// Action on the readout axis: x/y Paulis invert z.
    pub fn z_sign(&self) -> i8 {
        if self.z_flips() {
            -1
        } else {
            1
        }
    }

    /// Left-composition with an x-type half turn.
    fn after_x(&self) -> TogglingPauli {
        match self {
            TogglingPauli::I => TogglingPauli::X,
            TogglingPauli::X => TogglingPauli::I,
            TogglingPauli::Y => TogglingPauli::Z,
            TogglingPauli::Z => TogglingPauli::Y,
        }
    }

    pub fn clifford(&self) -> CliffordElement {
        match self {
            TogglingPauli::I => CliffordElement::identity(),
            TogglingPauli::X => CliffordElement::half_turn(0),
            TogglingPauli::Y => CliffordElement::half_turn(1),
            TogglingPauli::Z => CliffordElement::half_turn(2),
        }
    }
}

/// Compiles (P, G) gate units into one contiguous schedule for a scheme,
/// maintaining the software frame, the toggling Pauli introduced by
/// decoupling pulses, and the exact logical Clifford product.
///
/// Invariant: the ideal action of the emitted segments always equals
/// R_z(frame offset) * toggling * logical.
#[derive(Debug, Clone)]
pub struct GateCompiler {
    scheme: SchemeId,
    params: GateParams,
    frame: PauliFrame,
    toggling: TogglingPauli,
    dd_index: usize,
    segments: Vec<PulseSegment>,
    logical: CliffordElement,
}

impl GateCompiler {
    pub fn new(scheme: SchemeId, params: GateParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            scheme,
            params,
            frame: PauliFrame::new(),
            toggling: TogglingPauli::I,
            dd_index: 0,
            segments: Vec::new(),
            logical: CliffordElement::identity(),
        })
    }

    pub fn frame(&self) -> PauliFrame {
        self.frame
    }

    pub fn toggling(&self) -> TogglingPauli {
        self.toggling
    }

    pub fn logical(&self) -> CliffordElement {
        self.logical
    }

    fn emitted_base(&self, nominal_sixths: i32) -> f64 {
        let s = self.frame.emitted_phase_sixths(self.toggling.conj_phase(nominal_sixths));
        s as f64 * PI / 6.0
    }

    /// Right-multiplies the pending frame correction by R_z(delta):
    /// moving the z-rotation through the toggling Pauli flips its sign for
    /// x/y Paulis.
    fn frame_mul_right_z(&mut self, delta_sixths: i32) {
        let eff = if self.toggling.z_flips() { -delta_sixths } else { delta_sixths };
        self.frame.absorb_trailing_z(eff);
    }

    /// Absorbs an emitted decoupling pi pulse at phase chi (pi/6 units):
    /// R_chi(pi) R_z(gamma) T = R_z(2 chi - gamma) (X T).
    fn absorb_dd_pulse(&mut self, chi_sixths: i32) {
        let gamma = self.frame.offset_sixths();
        let new_gamma = (2 * chi_sixths - gamma).rem_euclid(12);
        self.frame.absorb_trailing_z(new_gamma - gamma);
        self.toggling = self.toggling.after_x();
    }

    fn emit_dd_pulse(&mut self, style: PulseStyle) {
        let nominal = XY16_PHASES[self.dd_index % 16];
        self.dd_index += 1;
        let chi = self
            .frame
            .emitted_phase_sixths(self.toggling.conj_phase(nominal));
        dd_pulse_block(
            &mut self.segments,
            style,
            chi as f64 * PI / 6.0,
            self.params.omega1,
            self.toggling.offset_sign(),
        );
        self.absorb_dd_pulse(chi);
    }

    fn pg_style(&self) -> PulseStyle {
        match self.scheme {
            SchemeId::BareRect => PulseStyle::Rect,
            _ => PulseStyle::Bb1,
        }
    }

    fn emit_p(&mut self, p: PGate) {
        match p.physical() {
            PhysKind::None => {}
            PhysKind::VirtualZ { sixths } => {
                self.frame_mul_right_z(-sixths);
            }
            PhysKind::Pulse { phase_sixths, theta } => {
                debug_assert_eq!(theta, PulseAngle::Pi);
                let base = self.emitted_base(phase_sixths);
                let sign = self.toggling.offset_sign();
                match self.scheme {
                    SchemeId::BareRect => rect_block(&mut self.segments, PI, base, self.params.omega1),
                    SchemeId::SchemeA => {
                        kdd5_block(&mut self.segments, base, self.params.omega1, sign);
                        // KDD-5 leaves a trailing R_z(-pi/3).
                        self.frame_mul_right_z(-2);
                    }
                    _ => bb1_block(&mut self.segments, PI, base, self.params.omega1, sign),
                }
            }
        }
        self.logical = p.clifford().compose(&self.logical);
    }

    fn emit_g(&mut self, g: GGate) {
        match g.physical() {
            PhysKind::None => unreachable!("G gates are never trivial"),
            PhysKind::VirtualZ { sixths } => {
                self.frame_mul_right_z(-sixths);
            }
            PhysKind::Pulse { phase_sixths, theta } => {
                let base = self.emitted_base(phase_sixths);
                let sign = self.toggling.offset_sign();
                let angle = theta.radians();
                match self.scheme {
                    SchemeId::BareRect => rect_block(&mut self.segments, angle, base, self.params.omega1),
                    SchemeId::SchemeA => spread_bb1_block(
                        &mut self.segments,
                        angle,
                        base,
                        self.params.omega1,
                        sign,
                        self.params.scheme_a_delay,
                        self.params.scheme_a_lead_delay,
                    ),
                    _ => bb1_block(&mut self.segments, angle, base, self.params.omega1, sign),
                }
            }
        }
        self.logical = g.clifford().compose(&self.logical);
    }

    /// Emits one full gate unit: the scheme's decoupling wrapper around the
    /// G-then-P pulse pair.
    pub fn emit_gate(&mut self, p: PGate, g: GGate) {
        match self.scheme {
            SchemeId::BareRect | SchemeId::BareBb1 | SchemeId::SchemeA => {
                self.emit_g(g);
                self.emit_p(p);
            }
            SchemeId::SchemeB => {
                self.emit_g(g);
                self.emit_p(p);
                self.emit_dd_pulse(PulseStyle::Bb1);
            }
            SchemeId::SchemeC => {
                self.emit_g(g);
                self.emit_p(p);
                push_delay(&mut self.segments, self.params.scheme_c_pad);
                self.emit_dd_pulse(PulseStyle::Bb1);
                push_delay(&mut self.segments, self.params.scheme_c_pad);
            }
            SchemeId::SchemeD => {
                let d = self.params.scheme_d_delay;
                self.emit_half_dd_block(d);
                self.emit_g(g);
                self.emit_p(p);
                self.emit_half_dd_block(d);
            }
            SchemeId::SchemeE => {
                self.emit_g(g);
                self.emit_p(p);
                let d = self.params.scheme_e_delay;
                self.emit_half_dd_block(d);
                self.emit_half_dd_block(d);
            }
        }
    }

    /// [d/2, pulse, d, pulse, d/2] with rectangular decoupling pulses.
    fn emit_half_dd_block(&mut self, d: f64) {
        push_delay(&mut self.segments, d / 2.0);
        self.emit_dd_pulse(PulseStyle::Rect);
        push_delay(&mut self.segments, d);
        self.emit_dd_pulse(PulseStyle::Rect);
        push_delay(&mut self.segments, d / 2.0);
    }

    /// Emits the recovery block: P1, the complement compiled as a G-then-P
    /// unit in the scheme's pulse style, then P2. No decoupling wrapper;
    /// readout follows immediately.
    pub fn emit_recovery(&mut self, rec: &Recovery) {
        self.emit_recovery_p(rec.p1);
        self.emit_g(rec.complement_g);
        self.emit_recovery_p(rec.complement_p);
        self.emit_recovery_p(rec.p2);
    }

    /// Recovery P pulses use the scheme's composite style but never the
    /// scheme-A spread/KDD layout shortcuts' decoupling delays.
    fn emit_recovery_p(&mut self, p: PGate) {
        match p.physical() {
            PhysKind::None => {}
            PhysKind::VirtualZ { sixths } => self.frame_mul_right_z(-sixths),
            PhysKind::Pulse { phase_sixths, .. } => {
                let base = self.emitted_base(phase_sixths);
                let sign = self.toggling.offset_sign();
                match self.pg_style() {
                    PulseStyle::Rect => rect_block(&mut self.segments, PI, base, self.params.omega1),
                    PulseStyle::Bb1 => bb1_block(&mut self.segments, PI, base, self.params.omega1, sign),
                }
            }
        }
        self.logical = p.clifford().compose(&self.logical);
    }

    /// Exact ideal Bloch action of everything emitted so far:
    /// R_z(frame offset) * toggling * logical.
    pub fn net_bloch_matrix(&self) -> [[f64; 3]; 3] {
        let gamma = self.frame.offset();
        let (s, c) = gamma.sin_cos();
        let rz = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
        let td = self.toggling.clifford().compose(&self.logical).matrix_f64();
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| rz[i][k] * td[k][j]).sum();
            }
        }
        out
    }

    /// Sign of the ideal final z projection, including the toggling Pauli.
    pub fn readout_sign(&self) -> i8 {
        let z = self.toggling.clifford().compose(&self.logical).z_image();
        assert!(z[0] == 0 && z[1] == 0, "sequence does not restore the z axis");
        z[2]
    }

    pub fn finish(self) -> PulseSchedule {
        let ideal_rotation = rotation_from_bloch_matrix(&self.net_bloch_matrix());
        PulseSchedule {
            segments: self.segments,
            ideal_rotation,
            frame_shift: 0.0,
        }
    }
}

/// Compiles a single PG gate unit with a fresh frame. The schedule's
/// `ideal_rotation` is the exact net action of the emitted segments
/// (including any decoupling pulse and trailing z-rotation).
pub fn compile_gate(p: PGate, g: GGate, scheme: SchemeId, params: GateParams) -> Result<PulseSchedule> {
    let mut compiler = GateCompiler::new(scheme, params)?;
    compiler.emit_gate(p, g);
    Ok(compiler.finish())
}

/// Compiled benchmarking sequence: the full schedule plus the ideal
/// readout sign used for survival correction.
#[derive(Debug, Clone)]
pub struct CompiledSequence {
    pub schedule: PulseSchedule,
    pub sign: i8,
}

/// Compiles an entire benchmarking sequence (gates plus recovery).
pub fn compile_sequence(seq: &RBSequence, scheme: SchemeId, params: GateParams) -> Result<CompiledSequence> {
    let mut compiler = GateCompiler::new(scheme, params)?;
    for &(p, g) in &seq.gates {
        compiler.emit_gate(p, g);
    }
    compiler.emit_recovery(&seq.recovery);
    let sign = compiler.readout_sign();
    Ok(CompiledSequence {
        schedule: compiler.finish(),
        sign,
    })
}

/// Gate period from the beginning of one P gate to the beginning of the
/// next: the duration of one densest (x-type P and G) gate unit.
pub fn nominal_gate_period(scheme: SchemeId, params: GateParams) -> Result<f64> {
    Ok(compile_gate(PGate::XPlus, GGate::X90Plus, scheme, params)?.total_duration())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2::{rotation_unitary, Unitary2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const US: f64 = 1e-6;

    fn default_omega1() -> f64 {
        GateParams::default().omega1
    }

    /// Test oracle: compose the segments' unitaries directly, with the
    /// drive angle scaled by (1 + eps). Delays are ideal (identity).
    fn segment_product(sched: &PulseSchedule, eps: f64) -> Unitary2 {
        let mut u = Unitary2::identity();
        for s in &sched.segments {
            if let SegmentKind::Drive = s.kind {
                let r = Rotation::about_xy(s.phase, (1.0 + eps) * s.nutation());
                u = rotation_unitary(&r).mul(&u);
            }
        }
        u
    }

    fn ideal_with_frame_shift(sched: &PulseSchedule) -> Unitary2 {
        let shift = rotation_unitary(&Rotation::about_z(sched.frame_shift));
        shift.mul(&rotation_unitary(&sched.ideal_rotation))
    }

    #[test]
    fn rectangular_durations() {
        let w = default_omega1();
        let pi_pulse = rectangular(PI, 0.0, w).unwrap();
        assert_eq!(pi_pulse.segments.len(), 1);
        assert!((pi_pulse.total_duration() - 8.0 * US).abs() < 1e-18);
        let half = rectangular(PI / 2.0, 0.0, w).unwrap();
        assert!((half.total_duration() - pi_pulse.total_duration() / 2.0).abs() < 1e-18);
        assert!(rectangular(0.0, 0.0, w).is_err());
        assert!(rectangular(PI, 0.0, 0.0).is_err());
    }

    #[test]
    fn bb1_correction_phases() {
        // beta(pi/2) = acos(-1/8) ~ 1.696, beta(pi) = acos(-1/4) ~ 1.823.
        assert_eq!(bb1_beta(PI / 2.0), (-0.125f64).acos());
        assert_eq!(bb1_beta(PI), (-0.25f64).acos());
        assert!((bb1_beta(PI / 2.0) - 1.696).abs() < 0.01);
        assert!((bb1_beta(PI) - 1.823).abs() < 0.01);
        assert!((bb1_beta(1e-12) - PI / 2.0).abs() < 1e-9);
        assert!(bb1(5.0 * PI, 0.0, default_omega1()).is_err());
        assert!(bb1(-1.0, 0.0, default_omega1()).is_err());
    }

    #[test]
    fn bb1_is_flip_angle_robust() {
        let w = default_omega1();
        let eps = 0.05;
        let rect = rectangular(PI, 0.0, w).unwrap();
        let comp = bb1(PI, 0.0, w).unwrap();
        let infid = |sched: &PulseSchedule| {
            let u = segment_product(sched, eps);
            let tr = u.dagger().mul(&segment_product(sched, 0.0));
            let t = tr.m[0][0] + tr.m[1][1];
            1.0 - (t.norm() / 2.0).powi(2)
        };
        let rect_err = infid(&rect);
        let bb1_err = infid(&comp);
        assert!((rect_err - (PI * eps / 2.0).sin().powi(2)).abs() < 1e-12);
        assert!(bb1_err <= 1e-4, "bb1 infidelity {bb1_err}");
        assert!(bb1_err * 50.0 <= rect_err, "bb1 {bb1_err} vs rect {rect_err}");
    }

    #[test]
    fn robustness_order_slopes() {
        // log-log slope of infidelity vs eps over [0.01, 0.1]: 2 for a
        // rectangular pulse, at least 4 for BB1.
        let w = default_omega1();
        let slope = |make: &dyn Fn() -> PulseSchedule| {
            let grid: Vec<f64> = (0..10).map(|i| 0.01 * 10f64.powf(i as f64 / 9.0)).collect();
            let sched = make();
            let ideal = segment_product(&sched, 0.0);
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for &e in &grid {
                let u = segment_product(&sched, e);
                let tr = u.dagger().mul(&ideal);
                let t = tr.m[0][0] + tr.m[1][1];
                let infid = (1.0 - (t.norm() / 2.0).powi(2)).max(1e-300);
                xs.push(e.ln());
                ys.push(infid.ln());
            }
            let n = xs.len() as f64;
            let mx = xs.iter().sum::<f64>() / n;
            let my = ys.iter().sum::<f64>() / n;
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
            sxy / sxx
        };
        let rect_slope = slope(&|| rectangular(PI, 0.0, w).unwrap());
        let bb1_slope = slope(&|| bb1(PI, 0.0, w).unwrap());
        assert!((rect_slope - 2.0).abs() < 0.05, "rect slope {rect_slope}");
        assert!(bb1_slope >= 4.0, "bb1 slope {bb1_slope}");
    }

    #[test]
    fn kdd5_identity_and_duration() {
        let w = default_omega1();
        let sched = kdd5(0.0, w).unwrap();
        assert_eq!(sched.segments.len(), 5);
        assert!((sched.total_duration() - 40.0 * US).abs() < 1e-15);
        // Ideal product equals R_z(-pi/3) R_x(pi) up to global phase.
        let product = segment_product(&sched, 0.0);
        let expected = rotation_unitary(&Rotation::about_z(-PI / 3.0))
            .mul(&rotation_unitary(&Rotation::about_x(PI)));
        assert!(product.phase_distance(&expected) < 1e-9);
    }

    #[test]
    fn kdd5_inversion_robustness() {
        let w = default_omega1();
        let eps = 0.05;
        let invert_err = |sched: &PulseSchedule| {
            let u = segment_product(sched, eps);
            // z-component of the image of +z; ideal is -1.
            let z = u.bloch_matrix()[2][2];
            (1.0 + z) / 2.0
        };
        let kdd_err = invert_err(&kdd5(0.0, w).unwrap());
        let rect_err = invert_err(&rectangular(PI, 0.0, w).unwrap());
        assert!(
            kdd_err * 10.0 <= rect_err,
            "kdd {kdd_err} vs rect {rect_err}"
        );
    }

    #[test]
    fn bb1_spread_layout() {
        let w = default_omega1();
        let sched = bb1_spread(PI / 2.0, 0.0, w).unwrap();
        // theta pulse + 4 * (delay + pi pulse).
        assert_eq!(sched.segments.len(), 9);
        let delays: Vec<f64> = sched
            .segments
            .iter()
            .filter(|s| s.kind == SegmentKind::Delay)
            .map(|s| s.duration)
            .collect();
        assert_eq!(delays.len(), 4);
        for d in delays {
            assert!((d - 8.0 * US).abs() < 1e-15, "delay should be 2 t_theta");
        }
        assert!((sched.total_duration() - 68.0 * US).abs() < 1e-12);
        // Net action with delays ideal is still R_0(pi/2).
        let u = segment_product(&sched, 0.0);
        assert!(u.phase_distance(&rotation_unitary(&sched.ideal_rotation)) < 1e-8);
        assert!(bb1_spread(PI / 3.0, 0.0, w).is_err());
    }

    #[test]
    fn dd_cycle_structure() {
        let w = default_omega1();
        for (kind, n) in [(DdKind::Xy4, 4), (DdKind::Xy8, 8), (DdKind::Xy16, 16)] {
            let sched = dd_cycle(kind, PulseStyle::Rect, 2.0 * US, w).unwrap();
            let drives = sched.segments.iter().filter(|s| s.kind == SegmentKind::Drive).count();
            assert_eq!(drives, n);
            let delay_total: f64 = sched
                .segments
                .iter()
                .filter(|s| s.kind == SegmentKind::Delay)
                .map(|s| s.duration)
                .sum();
            assert!((delay_total - n as f64 * 2.0 * US).abs() < 1e-15);
            // Ideal action is the identity.
            let u = segment_product(&sched, 0.0);
            assert!(u.phase_distance(&Unitary2::identity()) < 1e-9, "{kind:?}");
            assert_eq!(sched.pi_pulse_fraction(), 1.0);
        }
        // Zero delay emits no delay segments.
        let tight = dd_cycle(DdKind::Xy4, PulseStyle::Rect, 0.0, w).unwrap();
        assert!(tight.segments.iter().all(|s| s.kind == SegmentKind::Drive));
        // BB1-style pulses keep the identity action.
        let sched = dd_cycle(DdKind::Xy16, PulseStyle::Bb1, US, w).unwrap();
        let u = segment_product(&sched, 0.0);
        assert!(u.phase_distance(&Unitary2::identity()) < 1e-9);
    }

    #[test]
    fn nominal_gate_periods_match_presets() {
        let params = GateParams::default();
        let cases = [
            (SchemeId::BareRect, 12.0),
            (SchemeId::BareBb1, 76.0),
            (SchemeId::SchemeA, 88.0),
            (SchemeId::SchemeB, 116.0),
            (SchemeId::SchemeC, 152.0),
            (SchemeId::SchemeD, 336.0),
            (SchemeId::SchemeE, 384.0),
        ];
        for (scheme, tau_us) in cases {
            let tau = nominal_gate_period(scheme, params).unwrap();
            assert!(
                (tau - tau_us * US).abs() < 1e-12,
                "{scheme}: {} us vs {tau_us} us",
                tau / US
            );
        }
        // Disabling the lead delay shortens scheme (a) by one unit delay.
        let no_lead = GateParams { scheme_a_lead_delay: false, ..params };
        let tau = nominal_gate_period(SchemeId::SchemeA, no_lead).unwrap();
        assert!((tau - 85.0 * US).abs() < 1e-12);
    }

    #[test]
    fn compiled_gates_match_exact_net_action() {
        // The schedule's ideal_rotation comes from exact frame/Pauli
        // algebra; the numeric product of the emitted segments must agree,
        // for every scheme and every gate combination.
        let params = GateParams::default();
        for scheme in SchemeId::ALL {
            for p in PGate::ALL {
                for g in GGate::ALL {
                    let sched = compile_gate(p, g, scheme, params).unwrap();
                    let u = segment_product(&sched, 0.0);
                    let expected = ideal_with_frame_shift(&sched);
                    let d = u.phase_distance(&expected);
                    assert!(
                        d < 1e-8,
                        "{scheme} {}:{} distance {d}",
                        p.mnemonic(),
                        g.mnemonic()
                    );
                }
            }
        }
    }

    #[test]
    fn compiled_sequences_match_exact_net_action() {
        use crate::clifford::sample_rb_sequence;
        let params = GateParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for scheme in SchemeId::ALL {
            for _ in 0..8 {
                let m = rng.gen_range(1..=12);
                let seq = sample_rb_sequence(m, &mut rng);
                let mut compiler = GateCompiler::new(scheme, params).unwrap();
                for &(p, g) in &seq.gates {
                    compiler.emit_gate(p, g);
                }
                compiler.emit_recovery(&seq.recovery);
                let expected = compiler.net_bloch_matrix();
                let sign = compiler.readout_sign();
                let sched = compiler.finish();
                let got = segment_product(&sched, 0.0).bloch_matrix();
                for i in 0..3 {
                    for j in 0..3 {
                        assert!(
                            (expected[i][j] - got[i][j]).abs() < 1e-8,
                            "{scheme} m={m} entry ({i},{j})"
                        );
                    }
                }
                // The net z column is the signed readout axis.
                assert!((got[2][2] - sign as f64).abs() < 1e-8);
                assert!(got[0][2].abs() < 1e-8 && got[1][2].abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rb_sequences_are_half_pi_pulses() {
        use crate::clifford::sample_rb_sequence;
        let params = GateParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let seq = sample_rb_sequence(200, &mut rng);
        for scheme in [SchemeId::BareRect, SchemeId::BareBb1] {
            let compiled = compile_sequence(&seq, scheme, params).unwrap();
            let frac = compiled.schedule.pi_pulse_fraction();
            assert!(frac >= 0.5, "{scheme}: pi fraction {frac}");
        }
    }

    #[test]
    fn timing_table_format() {
        let sched = bb1_spread(PI / 2.0, 0.0, default_omega1()).unwrap();
        let table = sched.timing_table();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], "start_time,duration,amplitude,phase,kind");
        assert_eq!(lines.len(), 1 + sched.segments.len());
        // Start times strictly increase.
        let starts: Vec<f64> = lines[1..]
            .iter()
            .map(|l| l.split(',').next().unwrap().parse().unwrap())
            .collect();
        for w in starts.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn scheme_parse_roundtrip() {
        for scheme in SchemeId::ALL {
            assert_eq!(SchemeId::parse(scheme.name()).unwrap(), scheme);
        }
        assert!(SchemeId::parse("nope").is_err());
    }
}
