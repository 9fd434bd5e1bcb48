//! Exact bookkeeping for the 24-element single-qubit Clifford group,
//! random benchmarking sequences, recovery construction, and the software
//! rotating frame.
//!
//! Group elements are stored as signed axis permutations: integer 3x3
//! rotation matrices with entries in {0, +-1}. Composition and inversion
//! are exact, so sequence accounting never accumulates float error.

use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use rand::Rng;

use crate::error::{Error, Result};
use crate::su2::Rotation;

/// One of the 24 rotations of the chiral octahedral group, as a signed
/// permutation matrix acting on Bloch axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CliffordElement {
    m: [[i8; 3]; 3],
}

impl CliffordElement {
    pub fn identity() -> Self {
        Self { m: [[1, 0, 0], [0, 1, 0], [0, 0, 1]] }
    }

    /// Builds from a raw matrix, checking it is a proper signed permutation.
    pub fn from_matrix(m: [[i8; 3]; 3]) -> Result<Self> {
        let c = Self { m };
        if !c.is_valid() {
            return Err(Error::InvalidInput(format!(
                "not a determinant-+1 signed permutation: {m:?}"
            )));
        }
        Ok(c)
    }

    fn is_valid(&self) -> bool {
        for i in 0..3 {
            let row_nonzero = self.m[i].iter().filter(|&&v| v != 0).count();
            let col_nonzero = (0..3).filter(|&j| self.m[j][i] != 0).count();
            if row_nonzero != 1 || col_nonzero != 1 {
                return false;
            }
            if self.m[i].iter().any(|&v| v.abs() > 1) {
                return false;
            }
        }
        self.det() == 1
    }

    pub fn det(&self) -> i8 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Exact group law: self after other (matrix product self * other).
    pub fn compose(&self, other: &CliffordElement) -> CliffordElement {
        let mut out = [[0i8; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        CliffordElement { m: out }
    }

    /// Inverse = transpose for rotation matrices.
    pub fn invert(&self) -> CliffordElement {
        let mut out = [[0i8; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.m[j][i];
            }
        }
        CliffordElement { m: out }
    }

    pub fn apply_axis(&self, v: [i8; 3]) -> [i8; 3] {
        let mut out = [0i8; 3];
        for i in 0..3 {
            out[i] = (0..3).map(|k| self.m[i][k] * v[k]).sum();
        }
        out
    }

    /// Image of the +z axis (the readout axis).
    pub fn z_image(&self) -> [i8; 3] {
        [self.m[0][2], self.m[1][2], self.m[2][2]]
    }

    pub fn matrix(&self) -> [[i8; 3]; 3] {
        self.m
    }

    pub fn matrix_f64(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.m[i][j] as f64;
            }
        }
        out
    }

    /// Quarter-turn generator about a coordinate axis (0=x, 1=y, 2=z);
    /// `sign` +1 rotates by +pi/2, -1 by -pi/2.
    pub fn quarter_turn(axis: usize, sign: i8) -> Self {
        let (a, b) = match axis {
            0 => (1, 2),
            1 => (2, 0),
            2 => (0, 1),
            _ => panic!("axis out of range"),
        };
        let mut m = [[0i8; 3]; 3];
        m[axis][axis] = 1;
        // Right-handed +pi/2 about axis maps a -> b, b -> -a.
        m[b][a] = sign;
        m[a][b] = -sign;
        CliffordElement { m }
    }

    /// Half-turn (pi rotation) about a coordinate axis.
    pub fn half_turn(axis: usize) -> Self {
        let mut m = [[0i8; 3]; 3];
        for i in 0..3 {
            m[i][i] = if i == axis { 1 } else { -1 };
        }
        CliffordElement { m }
    }

    /// Enumerates the full 24-element group.
    pub fn all() -> &'static [CliffordElement] {
        static ALL: OnceLock<Vec<CliffordElement>> = OnceLock::new();
        ALL.get_or_init(|| {
            let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let mut out = Vec::with_capacity(24);
            for perm in perms {
                for signs in 0..8u8 {
                    let mut m = [[0i8; 3]; 3];
                    for (col, &row) in perm.iter().enumerate() {
                        m[row][col] = if signs >> col & 1 == 1 { -1 } else { 1 };
                    }
                    let c = CliffordElement { m };
                    if c.det() == 1 {
                        out.push(c);
                    }
                }
            }
            assert_eq!(out.len(), 24);
            out
        })
    }

    /// Axis-angle form of this rotation. Exact case analysis on the trace:
    /// 3 -> identity, 1 -> quarter turn, 0 -> three-fold, -1 -> half turn.
    pub fn to_rotation(&self) -> Rotation {
        let m = &self.m;
        let tr: i8 = m[0][0] + m[1][1] + m[2][2];
        match tr {
            3 => Rotation::identity(),
            1 | 0 => {
                let angle = if tr == 1 { PI / 2.0 } else { 2.0 * PI / 3.0 };
                let raw = [
                    (m[2][1] - m[1][2]) as f64,
                    (m[0][2] - m[2][0]) as f64,
                    (m[1][0] - m[0][1]) as f64,
                ];
                let n = (raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2]).sqrt();
                Rotation::new([raw[0] / n, raw[1] / n, raw[2] / n], angle)
                    .expect("antisymmetric part of a rotation is a valid axis")
            }
            -1 => {
                // M = 2 u u^T - 1; recover u up to overall sign.
                let u2 = [
                    (m[0][0] + 1) as f64 / 2.0,
                    (m[1][1] + 1) as f64 / 2.0,
                    (m[2][2] + 1) as f64 / 2.0,
                ];
                let lead = (0..3).find(|&i| u2[i] > 1e-12).expect("half turn has an axis");
                let mut u = [0.0; 3];
                u[lead] = u2[lead].sqrt();
                for i in lead + 1..3 {
                    if u2[i] > 1e-12 {
                        u[i] = m[lead][i] as f64 / (2.0 * u[lead]);
                    }
                }
                Rotation::new(u, PI).expect("half-turn axis is unit length")
            }
            _ => unreachable!("trace of a 24-group element is one of 3, 1, 0, -1"),
        }
    }
}

impl fmt::Display for CliffordElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.m)
    }
}

/// Pauli-type randomizing gate: a unit operation or a pi rotation about a
/// coordinate axis, each in two physical variants (8 draws total).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PGate {
    IdPlus,
    IdMinus,
    XPlus,
    XMinus,
    YPlus,
    YMinus,
    ZPlus,
    ZMinus,
}

/// Computational gate: a pi/2 rotation about +-x, +-y or +-z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GGate {
    X90Plus,
    X90Minus,
    Y90Plus,
    Y90Minus,
    Z90Plus,
    Z90Minus,
}

/// What a gate means physically: nothing, an equatorial drive pulse, or a
/// virtual z-rotation handled by the frame tracker. Phases and z-angles
/// are integer multiples of pi/6.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhysKind {
    None,
    Pulse { phase_sixths: i32, theta: PulseAngle },
    VirtualZ { sixths: i32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseAngle {
    HalfPi,
    Pi,
}

impl PulseAngle {
    pub fn radians(&self) -> f64 {
        match self {
            PulseAngle::HalfPi => PI / 2.0,
            PulseAngle::Pi => PI,
        }
    }
}

impl PGate {
    pub const ALL: [PGate; 8] = [
        PGate::IdPlus,
        PGate::IdMinus,
        PGate::XPlus,
        PGate::XMinus,
        PGate::YPlus,
        PGate::YMinus,
        PGate::ZPlus,
        PGate::ZMinus,
    ];

    /// SO(3) image (the physical sign does not affect it).
    pub fn clifford(&self) -> CliffordElement {
        match self {
            PGate::IdPlus | PGate::IdMinus => CliffordElement::identity(),
            PGate::XPlus | PGate::XMinus => CliffordElement::half_turn(0),
            PGate::YPlus | PGate::YMinus => CliffordElement::half_turn(1),
            PGate::ZPlus | PGate::ZMinus => CliffordElement::half_turn(2),
        }
    }

    pub fn physical(&self) -> PhysKind {
        match self {
            PGate::IdPlus | PGate::IdMinus => PhysKind::None,
            PGate::XPlus => PhysKind::Pulse { phase_sixths: 0, theta: PulseAngle::Pi },
            PGate::XMinus => PhysKind::Pulse { phase_sixths: 6, theta: PulseAngle::Pi },
            PGate::YPlus => PhysKind::Pulse { phase_sixths: 3, theta: PulseAngle::Pi },
            PGate::YMinus => PhysKind::Pulse { phase_sixths: 9, theta: PulseAngle::Pi },
            PGate::ZPlus => PhysKind::VirtualZ { sixths: 6 },
            PGate::ZMinus => PhysKind::VirtualZ { sixths: -6 },
        }
    }

    pub fn mnemonic(&self) -> &'static str {
        match self {
            PGate::IdPlus => "I+",
            PGate::IdMinus => "I-",
            PGate::XPlus => "X+",
            PGate::XMinus => "X-",
            PGate::YPlus => "Y+",
            PGate::YMinus => "Y-",
            PGate::ZPlus => "Z+",
            PGate::ZMinus => "Z-",
        }
    }

    pub fn from_mnemonic(s: &str) -> Result<Self> {
        PGate::ALL
            .iter()
            .copied()
            .find(|p| p.mnemonic() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown P gate mnemonic '{s}'")))
    }

    /// The two physical variants sharing a logical Pauli.
    fn variants_of_logical(idx: usize) -> [PGate; 2] {
        match idx {
            0 => [PGate::IdPlus, PGate::IdMinus],
            1 => [PGate::XPlus, PGate::XMinus],
            2 => [PGate::YPlus, PGate::YMinus],
            3 => [PGate::ZPlus, PGate::ZMinus],
            _ => panic!("logical Pauli index out of range"),
        }
    }
}

impl GGate {
    pub const ALL: [GGate; 6] = [
        GGate::X90Plus,
        GGate::X90Minus,
        GGate::Y90Plus,
        GGate::Y90Minus,
        GGate::Z90Plus,
        GGate::Z90Minus,
    ];

    pub fn clifford(&self) -> CliffordElement {
        match self {
            GGate::X90Plus => CliffordElement::quarter_turn(0, 1),
            GGate::X90Minus => CliffordElement::quarter_turn(0, -1),
            GGate::Y90Plus => CliffordElement::quarter_turn(1, 1),
            GGate::Y90Minus => CliffordElement::quarter_turn(1, -1),
            GGate::Z90Plus => CliffordElement::quarter_turn(2, 1),
            GGate::Z90Minus => CliffordElement::quarter_turn(2, -1),
        }
    }

    pub fn physical(&self) -> PhysKind {
        match self {
            GGate::X90Plus => PhysKind::Pulse { phase_sixths: 0, theta: PulseAngle::HalfPi },
            GGate::X90Minus => PhysKind::Pulse { phase_sixths: 6, theta: PulseAngle::HalfPi },
            GGate::Y90Plus => PhysKind::Pulse { phase_sixths: 3, theta: PulseAngle::HalfPi },
            GGate::Y90Minus => PhysKind::Pulse { phase_sixths: 9, theta: PulseAngle::HalfPi },
            GGate::Z90Plus => PhysKind::VirtualZ { sixths: 3 },
            GGate::Z90Minus => PhysKind::VirtualZ { sixths: -3 },
        }
    }

    pub fn mnemonic(&self) -> &'static str {
        match self {
            GGate::X90Plus => "x+",
            GGate::X90Minus => "x-",
            GGate::Y90Plus => "y+",
            GGate::Y90Minus => "y-",
            GGate::Z90Plus => "z+",
            GGate::Z90Minus => "z-",
        }
    }

    pub fn from_mnemonic(s: &str) -> Result<Self> {
        GGate::ALL
            .iter()
            .copied()
            .find(|g| g.mnemonic() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown G gate mnemonic '{s}'")))
    }
}

/// Software rotating-frame tracker. The stored offset, an exact multiple
/// of pi/6, is added to every emitted pulse phase; z-rotations become
/// bookkeeping instead of pulses.
///
/// With the phase convention U = exp(-i theta (n.sigma)/2) and emitted
/// phase = nominal + offset, the compiled physical product always equals
/// R_z(offset) * (ideal product), and the trailing z-rotation is invisible
/// to a z-axis readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PauliFrame {
    sixths: i32,
}

impl PauliFrame {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current phase offset in units of pi/6, reduced mod 12.
    pub fn offset_sixths(&self) -> i32 {
        self.sixths
    }

    /// Current phase offset in radians.
    pub fn offset(&self) -> f64 {
        self.sixths as f64 * PI / 6.0
    }

    /// Phase to emit for a pulse of the given nominal phase (pi/6 units).
    pub fn emitted_phase_sixths(&self, nominal_sixths: i32) -> i32 {
        (nominal_sixths + self.sixths).rem_euclid(12)
    }

    /// Implements a virtual z-rotation by `sixths` * pi/6: under the
    /// conventions above the offset moves by -sixths.
    pub fn rotate_z(&mut self, sixths: i32) {
        self.sixths = (self.sixths - sixths).rem_euclid(12);
    }

    /// Absorbs a trailing physical z-rotation by `sixths` * pi/6 left over
    /// by an emitted composite (KDD-5 leaves -pi/3, i.e. sixths = -2).
    pub fn absorb_trailing_z(&mut self, sixths: i32) {
        self.sixths = (self.sixths + sixths).rem_euclid(12);
    }
}

/// A randomized-benchmarking sequence: m random (P, G) gates plus the
/// recovery block P1 - R - P2 that restores the readout axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RBSequence {
    pub gates: Vec<(PGate, GGate)>,
    pub recovery: Recovery,
}

/// Recovery block. `complement` is the Clifford implemented by the
/// (complement_p, complement_g) pair; it maps the pre-recovery Bloch axis
/// back onto +-z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recovery {
    pub p1: PGate,
    pub complement: CliffordElement,
    pub complement_p: PGate,
    pub complement_g: GGate,
    pub p2: PGate,
}

/// The set of Cliffords expressible as a single P*G product, with their
/// logical decompositions. There are 12 such elements (the quarter turns
/// and the edge-diagonal half turns); each has exactly two logical
/// decompositions, hence the 48 physical (P, G) pairs cover the set four
/// times over. The identity-like and three-fold elements are not
/// single-step reachable, so the recovery restores the readout axis
/// rather than inverting the full accumulated Clifford.
pub fn pg_reachable() -> &'static Vec<(CliffordElement, Vec<(usize, GGate)>)> {
    static TABLE: OnceLock<Vec<(CliffordElement, Vec<(usize, GGate)>)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out: Vec<(CliffordElement, Vec<(usize, GGate)>)> = Vec::new();
        for p_idx in 0..4 {
            let p = PGate::variants_of_logical(p_idx)[0].clifford();
            for g in GGate::ALL {
                let elem = p.compose(&g.clifford());
                match out.iter_mut().find(|(e, _)| *e == elem) {
                    Some((_, decomps)) => decomps.push((p_idx, g)),
                    None => out.push((elem, vec![(p_idx, g)])),
                }
            }
        }
        out
    })
}

/// Draws a uniform m-gate sequence and constructs its recovery block.
///
/// The recovery is built from the exact accumulated Clifford: a random P1,
/// then a complement R drawn uniformly from the PG-reachable elements that
/// return the current axis to +-z (there are always four), compiled as a
/// uniformly chosen (P, G) decomposition, then a random P2. The ideal net
/// action therefore maps z to +-z; the residual sign is reported by
/// [`readout_sign`].
pub fn sample_rb_sequence<R: Rng>(m: usize, rng: &mut R) -> RBSequence {
    assert!(m >= 1, "sequence length must be at least 1");
    let mut gates = Vec::with_capacity(m);
    let mut accumulated = CliffordElement::identity();
    for _ in 0..m {
        let p = PGate::ALL[rng.gen_range(0..PGate::ALL.len())];
        let g = GGate::ALL[rng.gen_range(0..GGate::ALL.len())];
        accumulated = p.clifford().compose(&g.clifford()).compose(&accumulated);
        gates.push((p, g));
    }
    let recovery = sample_recovery(&accumulated, rng);
    RBSequence { gates, recovery }
}

fn sample_recovery<R: Rng>(accumulated: &CliffordElement, rng: &mut R) -> Recovery {
    let p1 = PGate::ALL[rng.gen_range(0..PGate::ALL.len())];
    let p2 = PGate::ALL[rng.gen_range(0..PGate::ALL.len())];
    let axis = p1.clifford().compose(accumulated).z_image();
    let candidates: Vec<&(CliffordElement, Vec<(usize, GGate)>)> = pg_reachable()
        .iter()
        .filter(|(elem, _)| {
            let img = elem.apply_axis(axis);
            img[0] == 0 && img[1] == 0
        })
        .collect();
    debug_assert_eq!(candidates.len(), 4);
    let (complement, decomps) = candidates[rng.gen_range(0..candidates.len())];
    let (p_idx, g) = decomps[rng.gen_range(0..decomps.len())];
    let p_phys = PGate::variants_of_logical(p_idx)[rng.gen_range(0..2)];
    Recovery {
        p1,
        complement: *complement,
        complement_p: p_phys,
        complement_g: g,
        p2,
    }
}

/// Exact net Clifford of gates followed by recovery.
pub fn net_clifford(seq: &RBSequence) -> CliffordElement {
    let mut acc = CliffordElement::identity();
    for (p, g) in &seq.gates {
        acc = p.clifford().compose(&g.clifford()).compose(&acc);
    }
    let r = &seq.recovery;
    acc = r.p1.clifford().compose(&acc);
    acc = r.complement.compose(&acc);
    r.p2.clifford().compose(&acc)
}

/// Sign of the ideal final z projection: the full sequence maps z to
/// sign * z, and the survival probability is the sign-corrected <S_z>.
pub fn readout_sign(seq: &RBSequence) -> i8 {
    let z = net_clifford(seq).z_image();
    assert!(z[0] == 0 && z[1] == 0, "recovery must restore the z axis");
    z[2]
}

impl RBSequence {
    /// One-line mnemonic form, e.g. "X+:y- I+:z+ | Y- R=X+:x- Z+".
    pub fn to_line(&self) -> String {
        let mut parts: Vec<String> = self
            .gates
            .iter()
            .map(|(p, g)| format!("{}:{}", p.mnemonic(), g.mnemonic()))
            .collect();
        let r = &self.recovery;
        parts.push(format!(
            "| {} R={}:{} {}",
            r.p1.mnemonic(),
            r.complement_p.mnemonic(),
            r.complement_g.mnemonic(),
            r.p2.mnemonic()
        ));
        parts.join(" ")
    }

    /// Parses the [`to_line`] format back into a sequence (replay).
    pub fn from_line(line: &str) -> Result<Self> {
        let (gate_part, rec_part) = line
            .split_once('|')
            .ok_or_else(|| Error::InvalidInput("sequence line missing '|' separator".into()))?;
        let mut gates = Vec::new();
        for token in gate_part.split_whitespace() {
            let (p, g) = token
                .split_once(':')
                .ok_or_else(|| Error::InvalidInput(format!("bad gate token '{token}'")))?;
            gates.push((PGate::from_mnemonic(p)?, GGate::from_mnemonic(g)?));
        }
        if gates.is_empty() {
            return Err(Error::InvalidInput("sequence has no gates".into()));
        }
        let tokens: Vec<&str> = rec_part.split_whitespace().collect();
        if tokens.len() != 3 || !tokens[1].starts_with("R=") {
            return Err(Error::InvalidInput(format!(
                "bad recovery clause '{}'",
                rec_part.trim()
            )));
        }
        let p1 = PGate::from_mnemonic(tokens[0])?;
        let (rp, rg) = tokens[1][2..]
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("bad complement token '{}'", tokens[1])))?;
        let complement_p = PGate::from_mnemonic(rp)?;
        let complement_g = GGate::from_mnemonic(rg)?;
        let p2 = PGate::from_mnemonic(tokens[2])?;
        let complement = complement_p.clifford().compose(&complement_g.clifford());
        let seq = RBSequence {
            gates,
            recovery: Recovery { p1, complement, complement_p, complement_g, p2 },
        };
        let z = net_clifford(&seq).z_image();
        if z[0] != 0 || z[1] != 0 {
            return Err(Error::InvalidInput(
                "recovery in the parsed sequence does not restore the z axis".into(),
            ));
        }
        Ok(seq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2::{rotation_unitary, Unitary2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    #[test]
    fn identity_composition() {
        let id = CliffordElement::identity();
        for c in CliffordElement::all() {
            assert_eq!(id.compose(c), *c);
            assert_eq!(c.compose(&id), *c);
        }
    }

    #[test]
    fn inverse_is_two_sided() {
        for c in CliffordElement::all() {
            assert_eq!(c.compose(&c.invert()), CliffordElement::identity());
            assert_eq!(c.invert().compose(c), CliffordElement::identity());
        }
    }

    #[test]
    fn half_turns_self_inverse_and_quarter_turns_square() {
        for axis in 0..3 {
            let h = CliffordElement::half_turn(axis);
            assert_eq!(h.invert(), h);
            let q = CliffordElement::quarter_turn(axis, 1);
            assert_eq!(q.compose(&q), h);
            assert_eq!(q.invert(), CliffordElement::quarter_turn(axis, -1));
        }
    }

    #[test]
    fn group_is_closed() {
        let all = CliffordElement::all();
        for a in all {
            for b in all {
                let c = a.compose(b);
                assert!(all.contains(&c));
            }
        }
    }

    #[test]
    fn to_rotation_reproduces_matrix() {
        for c in CliffordElement::all() {
            let u = rotation_unitary(&c.to_rotation());
            let bl = u.bloch_matrix();
            let m = c.matrix_f64();
            for i in 0..3 {
                for j in 0..3 {
                    assert!(
                        (bl[i][j] - m[i][j]).abs() < 1e-12,
                        "axis-angle mismatch for {c}"
                    );
                }
            }
        }
    }

    #[test]
    fn pg_products_cover_single_step_set() {
        // The 48 physical (P, G) products realize 12 distinct rotations,
        // four physical pairs each (two logical decompositions times two
        // physical P signs); the single-step set generates the whole group
        // under composition.
        let mut counts: HashMap<CliffordElement, usize> = HashMap::new();
        for p in PGate::ALL {
            for g in GGate::ALL {
                *counts.entry(p.clifford().compose(&g.clifford())).or_default() += 1;
            }
        }
        assert_eq!(counts.len(), 12);
        assert!(counts.values().all(|&n| n == 4));

        let mut generated: Vec<CliffordElement> = counts.keys().copied().collect();
        loop {
            let mut added = false;
            let snapshot = generated.clone();
            for a in &snapshot {
                for b in &snapshot {
                    let c = a.compose(b);
                    if !generated.contains(&c) {
                        generated.push(c);
                        added = true;
                    }
                }
            }
            if !added {
                break;
            }
        }
        assert_eq!(generated.len(), 24);
    }

    #[test]
    fn pg_reachable_decompositions_are_consistent() {
        for (elem, decomps) in pg_reachable() {
            assert_eq!(decomps.len(), 2);
            for (p_idx, g) in decomps {
                let p = PGate::variants_of_logical(*p_idx)[0];
                assert_eq!(p.clifford().compose(&g.clifford()), *elem);
            }
        }
    }

    #[test]
    fn recovery_restores_axis_small_m_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(314);
        for m in 1..=5 {
            for _ in 0..2000 {
                let seq = sample_rb_sequence(m, &mut rng);
                let z = net_clifford(&seq).z_image();
                assert_eq!([z[0], z[1]], [0, 0]);
                assert_eq!(z[2].abs(), 1);
            }
        }
    }

    #[test]
    fn recovery_restores_axis_long_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2718);
        for _ in 0..500 {
            let m = rng.gen_range(1..=80);
            let seq = sample_rb_sequence(m, &mut rng);
            let sign = readout_sign(&seq);
            assert_eq!(sign.abs(), 1);
        }
    }

    #[test]
    fn readout_sign_matches_su2_brute_force() {
        // Oracle: compose the ideal unitaries of every gate in the sequence
        // and read the (z, z) entry of the Bloch action.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let m = rng.gen_range(1..=80);
            let seq = sample_rb_sequence(m, &mut rng);
            let mut u = Unitary2::identity();
            let push = |c: CliffordElement, u: &mut Unitary2| {
                *u = rotation_unitary(&c.to_rotation()).mul(u);
            };
            for (p, g) in &seq.gates {
                push(g.clifford(), &mut u);
                push(p.clifford(), &mut u);
            }
            push(seq.recovery.p1.clifford(), &mut u);
            push(seq.recovery.complement_g.clifford(), &mut u);
            push(seq.recovery.complement_p.clifford(), &mut u);
            push(seq.recovery.p2.clifford(), &mut u);
            let zz = u.bloch_matrix()[2][2];
            assert!((zz - readout_sign(&seq) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn gate_draws_are_uniform() {
        // Chi-square style check: every (P, G) combination appears with
        // frequency 1/48 within five multinomial standard deviations.
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        let n = 100_000usize;
        let mut counts: HashMap<(PGate, GGate), usize> = HashMap::new();
        let mut drawn = 0usize;
        while drawn < n {
            let seq = sample_rb_sequence(5, &mut rng);
            for &(p, g) in &seq.gates {
                if drawn == n {
                    break;
                }
                *counts.entry((p, g)).or_default() += 1;
                drawn += 1;
            }
        }
        let p = 1.0 / 48.0;
        let expected = n as f64 * p;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert_eq!(counts.len(), 48);
        for (&(pg, gg), &c) in &counts {
            assert!(
                (c as f64 - expected).abs() < 5.0 * sd,
                "({}, {}) drawn {c} times, expected {expected:.0} +- {sd:.0}",
                pg.mnemonic(),
                gg.mnemonic()
            );
        }
    }

    #[test]
    fn frame_offset_arithmetic() {
        let mut f = PauliFrame::new();
        f.rotate_z(6); // z pi gate
        assert_eq!(f.offset_sixths(), 6);
        f.rotate_z(6);
        assert_eq!(f.offset_sixths(), 0, "two z-pi gates cancel mod 2 pi");
        f.rotate_z(3); // z pi/2
        assert_eq!(f.emitted_phase_sixths(0), 9);
        f.absorb_trailing_z(-2); // KDD-5 residue
        assert_eq!(f.offset_sixths(), 7);
    }

    #[test]
    fn sequence_line_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let seq = sample_rb_sequence(rng.gen_range(1..=20), &mut rng);
            let line = seq.to_line();
            let back = RBSequence::from_line(&line).unwrap();
            assert_eq!(seq, back);
        }
    }

    #[test]
    fn sequence_line_golden() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seq = sample_rb_sequence(3, &mut rng);
        let line = seq.to_line();
        let back = RBSequence::from_line(&line).unwrap();
        assert_eq!(back.to_line(), line);
        assert!(line.contains(" | "), "line format: {line}");
        assert!(RBSequence::from_line("X+:y-").is_err());
        assert!(RBSequence::from_line("Q?:y- | I+ R=X+:x+ I+").is_err());
    }
}
