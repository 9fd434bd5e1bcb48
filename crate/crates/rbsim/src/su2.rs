//! Exact 2x2 complex algebra for single-qubit states and rotations.
//!
//! States are kept in Bloch form (the canonical internal representation):
//! a vector `r` with |r| <= 1 stands for the density operator
//! rho = (1 + r.sigma)/2, which is Hermitian with unit trace by
//! construction. Unitaries are kept as explicit 2x2 complex matrices with
//! the global phase convention U = exp(-i theta (n.sigma)/2).

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Tolerance for algebraic identities (unitarity, axis normalization).
pub const ALGEBRA_TOL: f64 = 1e-10;

/// Single-qubit state as a Bloch vector; rho = (1 + r.sigma)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    r: [f64; 3],
}

impl QubitState {
    /// |0><0|, the +z pure state.
    pub fn z_plus() -> Self {
        Self { r: [0.0, 0.0, 1.0] }
    }

    /// |1><1|, the -z pure state.
    pub fn z_minus() -> Self {
        Self { r: [0.0, 0.0, -1.0] }
    }

    /// (|0>+|1>)/sqrt(2), the +x pure state used for coherence experiments.
    pub fn x_plus() -> Self {
        Self { r: [1.0, 0.0, 0.0] }
    }

    /// The maximally mixed state 1/2.
    pub fn maximally_mixed() -> Self {
        Self { r: [0.0, 0.0, 0.0] }
    }

    /// Builds a state from a Bloch vector. Errors if |r| > 1 + 1e-12
    /// (which would mean negative eigenvalues).
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let n = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if !n.is_finite() || n > 1.0 + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "Bloch vector norm {n} exceeds 1"
            )));
        }
        Ok(Self { r })
    }

    /// Bloch-vector components (x, y, z).
    pub fn bloch(&self) -> [f64; 3] {
        self.r
    }

    pub fn bloch_norm(&self) -> f64 {
        let r = self.r;
        (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
    }

    /// The density matrix [[rho00, rho01], [rho10, rho11]].
    pub fn density_matrix(&self) -> [[C64; 2]; 2] {
        let [x, y, z] = self.r;
        [
            [
                C64::new((1.0 + z) / 2.0, 0.0),
                C64::new(x / 2.0, -y / 2.0),
            ],
            [C64::new(x / 2.0, y / 2.0), C64::new((1.0 - z) / 2.0, 0.0)],
        ]
    }

    pub(crate) fn from_bloch_unchecked(r: [f64; 3]) -> Self {
        Self { r }
    }
}

/// Axis-angle rotation. The axis must be a unit vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    axis: [f64; 3],
    angle: f64,
}

impl Rotation {
    /// Builds a rotation, rejecting non-unit axes and non-finite angles.
    pub fn new(axis: [f64; 3], angle: f64) -> Result<Self> {
        let n2 = axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2];
        if !n2.is_finite() || (n2.sqrt() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "rotation axis must be a unit vector, got norm {}",
                n2.sqrt()
            )));
        }
        if !angle.is_finite() {
            return Err(Error::InvalidInput("rotation angle must be finite".into()));
        }
        Ok(Self { axis, angle })
    }

    pub fn identity() -> Self {
        Self { axis: [0.0, 0.0, 1.0], angle: 0.0 }
    }

    pub fn about_x(angle: f64) -> Self {
        Self { axis: [1.0, 0.0, 0.0], angle }
    }

    pub fn about_y(angle: f64) -> Self {
        Self { axis: [0.0, 1.0, 0.0], angle }
    }

    pub fn about_z(angle: f64) -> Self {
        Self { axis: [0.0, 0.0, 1.0], angle }
    }

    /// Rotation about the equatorial axis at azimuth `phi`: the action of a
    /// resonant drive pulse with phase `phi`.
    pub fn about_xy(phi: f64, angle: f64) -> Self {
        Self { axis: [phi.cos(), phi.sin(), 0.0], angle }
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }
}

/// A 2x2 complex matrix, unitary for all values this crate constructs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    pub m: [[C64; 2]; 2],
}

impl Unitary2 {
    pub fn identity() -> Self {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        Self { m: [[l, o], [o, l]] }
    }

    /// Matrix product self * other (other acts first).
    pub fn mul(&self, other: &Unitary2) -> Unitary2 {
        let a = &self.m;
        let b = &other.m;
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Unitary2 { m: out }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Unitary2 {
        Unitary2 {
            m: [
                [self.m[0][0].conj(), self.m[1][0].conj()],
                [self.m[0][1].conj(), self.m[1][1].conj()],
            ],
        }
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Frobenius deviation of U U-dagger from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.mul(&self.dagger());
        let mut d2 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                d2 += (p.m[i][j] - target).norm_sqr();
            }
        }
        d2.sqrt()
    }

    /// Phase-insensitive comparison: 1 - |tr(U-dagger V)|/2, which is zero
    /// exactly when the two unitaries differ only by a global phase.
    pub fn phase_distance(&self, other: &Unitary2) -> f64 {
        let p = self.dagger().mul(other);
        let tr = p.m[0][0] + p.m[1][1];
        1.0 - tr.norm() / 2.0
    }

    /// The SO(3) matrix describing this unitary's action on Bloch vectors.
    pub fn bloch_matrix(&self) -> [[f64; 3]; 3] {
        // Column j is the image of the j-th axis.
        let mut out = [[0.0; 3]; 3];
        for (j, axis) in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
            .into_iter()
            .enumerate()
        {
            let img = apply(self, &QubitState::from_bloch_unchecked(axis)).bloch();
            for i in 0..3 {
                out[i][j] = img[i];
            }
        }
        out
    }
}

/// Closed-form axis-angle exponential: exp(-i theta (n.sigma)/2).
pub fn rotation_unitary(r: &Rotation) -> Unitary2 {
    let [nx, ny, nz] = r.axis();
    let half = r.angle() / 2.0;
    let c = half.cos();
    let s = half.sin();
    Unitary2 {
        m: [
            [C64::new(c, -nz * s), C64::new(-ny * s, -nx * s)],
            [C64::new(ny * s, -nx * s), C64::new(c, nz * s)],
        ],
    }
}

/// U rho U-dagger in Bloch form.
pub fn apply(u: &Unitary2, s: &QubitState) -> QubitState {
    // rho = (1 + r.sigma)/2 conjugates to (1 + (R r).sigma)/2 where R is the
    // adjoint action; computed directly from the matrix entries.
    let [x, y, z] = s.bloch();
    let m = &u.m;
    // Pauli expectation of U (r.sigma) U-dagger via two matrix products.
    let rho = [
        [C64::new(z, 0.0), C64::new(x, -y)],
        [C64::new(x, y), C64::new(-z, 0.0)],
    ];
    let mut urho = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            urho[i][j] = m[i][0] * rho[0][j] + m[i][1] * rho[1][j];
        }
    }
    let ud = u.dagger();
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = urho[i][0] * ud.m[0][j] + urho[i][1] * ud.m[1][j];
        }
    }
    let nx = out[0][1].re;
    let ny = -out[0][1].im;
    let nz = out[0][0].re;
    QubitState::from_bloch_unchecked([nx, ny, nz])
}

/// tr(rho sigma_z): +1 for |0><0|, -1 for |1><1|.
pub fn expect_sz(s: &QubitState) -> f64 {
    s.bloch()[2]
}

/// tr(rho sigma_x).
pub fn expect_sx(s: &QubitState) -> f64 {
    s.bloch()[0]
}

/// Trace overlap tr(rho_a rho_b) = (1 + r_a . r_b)/2; equals 1 for
/// identical pure states and 0 for orthogonal pure states.
pub fn trace_fidelity(a: &QubitState, b: &QubitState) -> f64 {
    let ra = a.bloch();
    let rb = b.bloch();
    (1.0 + ra[0] * rb[0] + ra[1] * rb[1] + ra[2] * rb[2]) / 2.0
}

/// Recovers axis-angle form from an SO(3) matrix. Inputs must be proper
/// rotations; near-pi rotations take the symmetric-part branch.
pub fn rotation_from_bloch_matrix(m: &[[f64; 3]; 3]) -> Rotation {
    let tr = m[0][0] + m[1][1] + m[2][2];
    let angle = ((tr - 1.0) / 2.0).clamp(-1.0, 1.0).acos();
    if angle < 1e-9 {
        return Rotation::identity();
    }
    if std::f64::consts::PI - angle < 1e-6 {
        // M ~ 2 u u^T - 1.
        let diag = [
            ((m[0][0] + 1.0) / 2.0).max(0.0),
            ((m[1][1] + 1.0) / 2.0).max(0.0),
            ((m[2][2] + 1.0) / 2.0).max(0.0),
        ];
        let p = (0..3).max_by(|&a, &b| diag[a].total_cmp(&diag[b])).unwrap();
        let mut u = [0.0; 3];
        u[p] = diag[p].sqrt();
        for i in 0..3 {
            if i != p {
                u[i] = (m[p][i] + m[i][p]) / (4.0 * u[p]);
            }
        }
        let n = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        return Rotation::new([u[0] / n, u[1] / n, u[2] / n], std::f64::consts::PI)
            .expect("normalized axis");
    }
    let s = 2.0 * angle.sin();
    let raw = [
        (m[2][1] - m[1][2]) / s,
        (m[0][2] - m[2][0]) / s,
        (m[1][0] - m[0][1]) / s,
    ];
    let n = (raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2]).sqrt();
    Rotation::new([raw[0] / n, raw[1] / n, raw[2] / n], angle).expect("normalized axis")
}

/// Rotates a Bloch vector by axis-angle (Rodrigues formula). The engine's
/// hot loop; equivalent to `apply(rotation_unitary(r), s)`.
pub fn rotate_bloch(v: [f64; 3], axis: [f64; 3], angle: f64) -> [f64; 3] {
    let (s, c) = angle.sin_cos();
    let [kx, ky, kz] = axis;
    let [vx, vy, vz] = v;
    let dot = kx * vx + ky * vy + kz * vz;
    let cx = ky * vz - kz * vy;
    let cy = kz * vx - kx * vz;
    let cz = kx * vy - ky * vx;
    let t = 1.0 - c;
    [
        vx * c + cx * s + kx * dot * t,
        vy * c + cy * s + ky * dot * t,
        vz * c + cz * s + kz * dot * t,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn zero_angle_is_identity() {
        let u = rotation_unitary(&Rotation::about_z(0.0));
        assert!(u.phase_distance(&Unitary2::identity()) < 1e-15);
    }

    #[test]
    fn x_pi_inverts_sz() {
        let u = rotation_unitary(&Rotation::about_x(PI));
        // exp(-i pi sigma_x / 2) = -i sigma_x
        assert!((u.m[0][1] - C64::new(0.0, -1.0)).norm() < 1e-15);
        let s = apply(&u, &QubitState::z_plus());
        assert!(approx(expect_sz(&s), -1.0, 1e-12));
    }

    #[test]
    fn four_x_pi_is_identity_up_to_phase() {
        let u = rotation_unitary(&Rotation::about_x(PI));
        let u4 = u.mul(&u).mul(&u).mul(&u);
        assert!(u4.phase_distance(&Unitary2::identity()) < 1e-12);
    }

    #[test]
    fn non_unit_axis_rejected() {
        assert!(Rotation::new([1.0, 1.0, 0.0], PI).is_err());
        assert!(Rotation::new([1.0, 0.0, 0.0], f64::NAN).is_err());
    }

    #[test]
    fn apply_identity_fixes_state() {
        let s = QubitState::from_bloch([0.3, -0.2, 0.4]).unwrap();
        let out = apply(&Unitary2::identity(), &s);
        let (a, b) = (s.bloch(), out.bloch());
        for i in 0..3 {
            assert!(approx(a[i], b[i], 1e-15));
        }
    }

    #[test]
    fn y_half_pi_maps_z_to_x() {
        let u = rotation_unitary(&Rotation::about_y(PI / 2.0));
        let s = apply(&u, &QubitState::z_plus());
        let r = s.bloch();
        assert!(approx(r[0], 1.0, 1e-12) && approx(r[2], 0.0, 1e-12));
    }

    #[test]
    fn expect_sz_cases() {
        assert!(approx(expect_sz(&QubitState::z_plus()), 1.0, 0.0));
        assert!(approx(expect_sz(&QubitState::maximally_mixed()), 0.0, 0.0));
        let flipped = apply(
            &rotation_unitary(&Rotation::about_x(PI)),
            &QubitState::z_plus(),
        );
        assert!(approx(expect_sz(&flipped), -1.0, 1e-12));
    }

    #[test]
    fn trace_fidelity_cases() {
        let zp = QubitState::z_plus();
        let zm = QubitState::z_minus();
        assert!(approx(trace_fidelity(&zp, &zp), 1.0, 0.0));
        assert!(approx(trace_fidelity(&zp, &zm), 0.0, 0.0));
        // Depolarized overlap: (1-d) rho + (d/2) 1 against pure rho gives 1 - d/2.
        let d = 0.1;
        let depol = QubitState::from_bloch([0.0, 0.0, 1.0 - d]).unwrap();
        assert!(approx(trace_fidelity(&zp, &depol), 0.95, 1e-15));
    }

    #[test]
    fn random_rotations_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let r = random_rotation(&mut rng);
            let u = rotation_unitary(&r);
            assert!(u.unitarity_defect() < ALGEBRA_TOL);
            assert!((u.det().norm() - 1.0).abs() < ALGEBRA_TOL);
        }
    }

    fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation {
        // Uniform axis on the sphere, angle in [0, 2 pi).
        let z: f64 = rng.gen_range(-1.0..1.0);
        let phi: f64 = rng.gen_range(0.0..2.0 * PI);
        let s = (1.0 - z * z).sqrt();
        let axis = [s * phi.cos(), s * phi.sin(), z];
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        Rotation::new([axis[0] / n, axis[1] / n, axis[2] / n], rng.gen_range(0.0..2.0 * PI))
            .unwrap()
    }

    #[test]
    fn composition_matches_bloch_action() {
        // Product of unitaries acts on Bloch vectors as the composition of
        // the individual SO(3) actions.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let ra = random_rotation(&mut rng);
            let rb = random_rotation(&mut rng);
            let ua = rotation_unitary(&ra);
            let ub = rotation_unitary(&rb);
            let uab = ua.mul(&ub);
            let v = {
                let z: f64 = rng.gen_range(-1.0..1.0);
                let phi: f64 = rng.gen_range(0.0..2.0 * PI);
                let s = (1.0 - z * z).sqrt();
                [s * phi.cos(), s * phi.sin(), z]
            };
            let st = QubitState::from_bloch(v).unwrap();
            let via_product = apply(&uab, &st).bloch();
            let via_steps = apply(&ua, &apply(&ub, &st)).bloch();
            for i in 0..3 {
                assert!(approx(via_product[i], via_steps[i], 1e-9));
            }
        }
    }

    #[test]
    fn apply_preserves_state_validity() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut s = QubitState::z_plus();
        for _ in 0..1000 {
            let u = rotation_unitary(&random_rotation(&mut rng));
            s = apply(&u, &s);
            assert!(s.bloch_norm() <= 1.0 + 1e-12);
            // Hermiticity and unit trace are structural in Bloch form; check
            // the reconstructed matrix anyway.
            let rho = s.density_matrix();
            assert!((rho[0][0].im).abs() < 1e-15 && (rho[1][1].im).abs() < 1e-15);
            assert!(((rho[0][0] + rho[1][1]).re - 1.0).abs() < 1e-15);
            assert!((rho[0][1] - rho[1][0].conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn axis_angle_roundtrip_from_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..500 {
            let r = random_rotation(&mut rng);
            let m = rotation_unitary(&r).bloch_matrix();
            let back = rotation_from_bloch_matrix(&m);
            let m2 = rotation_unitary(&back).bloch_matrix();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((m[i][j] - m2[i][j]).abs() < 1e-7);
                }
            }
        }
        // Exact pi rotation about an oblique axis.
        let axis = [0.6, 0.0, 0.8];
        let m = rotation_unitary(&Rotation::new(axis, PI).unwrap()).bloch_matrix();
        let back = rotation_from_bloch_matrix(&m);
        assert!((back.angle() - PI).abs() < 1e-9);
        let a = back.axis();
        assert!((a[0].abs() - 0.6).abs() < 1e-9 && (a[2].abs() - 0.8).abs() < 1e-9);
    }

    #[test]
    fn rotate_bloch_matches_unitary_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..500 {
            let r = random_rotation(&mut rng);
            let u = rotation_unitary(&r);
            let v = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
            let st = QubitState::from_bloch(v).unwrap();
            let a = apply(&u, &st).bloch();
            let b = rotate_bloch(v, r.axis(), r.angle());
            for i in 0..3 {
                assert!(approx(a[i], b[i], 1e-12));
            }
        }
    }
}
