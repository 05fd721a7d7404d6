//! Exact statevector simulation: circuit evolution, expectation values,
//! adjoint-mode analytic gradients, measurement sampling, and stochastic
//! Pauli-insertion noise trajectories.
//!
//! Amplitudes are indexed little-endian (qubit `q` is bit `q` of the basis
//! index); bitstrings are printed most-significant qubit first. Givens
//! excitation gates and Pauli rotations are applied natively (touching only
//! the amplitude pairs their small matrices couple); noisy sampling runs on
//! the decomposed circuit so that noise attaches to physical gates.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{decompose, Basis, Circuit, Gate, GateKind, GateParam};
use crate::pauli::{PauliString, PauliSum};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("circuit expects {expected} parameters, got {got}")]
    ParamMismatch { expected: usize, got: usize },
    #[error("operator acts on {operator} qubits but the state has {state}")]
    DimensionMismatch { operator: usize, state: usize },
    #[error("operator is not Hermitian: coefficient imaginary part {0:e} exceeds 1e-10")]
    NonHermitian(f64),
    #[error("sampling requires at least one shot")]
    ZeroShots,
    #[error("noise probability {name}={value} outside [0, 1]")]
    BadProbability { name: &'static str, value: f64 },
}

/// A pure state of `n_qubits` qubits, `2^n` complex amplitudes.
#[derive(Debug, Clone)]
pub struct Statevector {
    pub n_qubits: usize,
    pub amps: Vec<Complex64>,
}

impl Statevector {
    pub fn zero_state(n_qubits: usize) -> Self {
        Self::basis_state(n_qubits, 0)
    }

    pub fn basis_state(n_qubits: usize, index: u64) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[index as usize] = Complex64::new(1.0, 0.0);
        Statevector { n_qubits, amps }
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Probability weight inside the fixed particle sector: `n_alpha`
    /// electrons on qubits `0..m` and `n_beta` on `m..2m`.
    pub fn sector_weight(&self, m: usize, n_alpha: usize, n_beta: usize) -> f64 {
        debug_assert_eq!(self.n_qubits, 2 * m);
        let low = (1u64 << m) - 1;
        self.amps
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let k = *k as u64;
                (k & low).count_ones() as usize == n_alpha
                    && (k >> m).count_ones() as usize == n_beta
            })
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Apply one gate with resolved parameters.
    pub fn apply_gate(&mut self, gate: &Gate, params: &[f64]) {
        apply_resolved(&mut self.amps, &resolve_gate(gate, params));
    }
}

/// A gate with its angle already bound, ready for repeated application.
#[derive(Debug, Clone)]
enum ResolvedOp {
    X(usize),
    H(usize),
    Sx(usize),
    Rz(usize, f64),
    Ry(usize, f64),
    Cx(usize, usize),
    SingleExc { occ: usize, vir: usize, theta: f64 },
    DoubleExc { occ: u64, all: u64, theta: f64 },
    PauliRot { string: PauliString, angle: f64 },
}

impl ResolvedOp {
    fn n_targets(&self) -> usize {
        match self {
            ResolvedOp::X(_) | ResolvedOp::H(_) | ResolvedOp::Sx(_) => 1,
            ResolvedOp::Rz(..) | ResolvedOp::Ry(..) => 1,
            ResolvedOp::Cx(..) => 2,
            ResolvedOp::SingleExc { .. } => 2,
            ResolvedOp::DoubleExc { .. } => 4,
            ResolvedOp::PauliRot { string, .. } => string.weight() as usize,
        }
    }

    fn support(&self) -> u64 {
        match self {
            ResolvedOp::X(q) | ResolvedOp::H(q) | ResolvedOp::Sx(q) => 1 << q,
            ResolvedOp::Rz(q, _) | ResolvedOp::Ry(q, _) => 1 << q,
            ResolvedOp::Cx(c, t) => (1 << c) | (1 << t),
            ResolvedOp::SingleExc { occ, vir, .. } => (1 << occ) | (1 << vir),
            ResolvedOp::DoubleExc { all, .. } => *all,
            ResolvedOp::PauliRot { string, .. } => string.support_mask(),
        }
    }
}

fn resolve_gate(gate: &Gate, params: &[f64]) -> ResolvedOp {
    let angle = gate.param.angle(params);
    match &gate.kind {
        GateKind::X => ResolvedOp::X(gate.qubits[0]),
        GateKind::H => ResolvedOp::H(gate.qubits[0]),
        GateKind::Sx => ResolvedOp::Sx(gate.qubits[0]),
        GateKind::Rz => ResolvedOp::Rz(gate.qubits[0], angle),
        GateKind::Ry => ResolvedOp::Ry(gate.qubits[0], angle),
        GateKind::Cx => ResolvedOp::Cx(gate.qubits[0], gate.qubits[1]),
        GateKind::SingleExc => ResolvedOp::SingleExc {
            occ: gate.qubits[0],
            vir: gate.qubits[1],
            theta: angle,
        },
        GateKind::DoubleExc => {
            // Support order [b, j, a, i]: i, j occupied; a, b virtual.
            let (b, j, a, i) = (
                gate.qubits[0],
                gate.qubits[1],
                gate.qubits[2],
                gate.qubits[3],
            );
            ResolvedOp::DoubleExc {
                occ: (1 << i) | (1 << j),
                all: (1 << i) | (1 << j) | (1 << a) | (1 << b),
                theta: angle,
            }
        }
        GateKind::PauliRot(string) => ResolvedOp::PauliRot {
            string: *string,
            angle,
        },
    }
}

fn apply_one_qubit(amps: &mut [Complex64], q: usize, m: &[Complex64; 4]) {
    let bit = 1usize << q;
    for k in 0..amps.len() {
        if k & bit == 0 {
            let a0 = amps[k];
            let a1 = amps[k | bit];
            amps[k] = m[0] * a0 + m[1] * a1;
            amps[k | bit] = m[2] * a0 + m[3] * a1;
        }
    }
}

fn apply_x(amps: &mut [Complex64], q: usize) {
    let bit = 1usize << q;
    for k in 0..amps.len() {
        if k & bit == 0 {
            amps.swap(k, k | bit);
        }
    }
}

fn apply_cx(amps: &mut [Complex64], control: usize, target: usize) {
    let (cb, tb) = (1usize << control, 1usize << target);
    for k in 0..amps.len() {
        if k & cb != 0 && k & tb == 0 {
            amps.swap(k, k | tb);
        }
    }
}

fn apply_rz(amps: &mut [Complex64], q: usize, angle: f64) {
    let bit = 1usize << q;
    let e0 = Complex64::from_polar(1.0, -angle / 2.0);
    let e1 = e0.conj();
    for (k, a) in amps.iter_mut().enumerate() {
        *a *= if k & bit == 0 { e0 } else { e1 };
    }
}

fn h_matrix() -> [Complex64; 4] {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [h, h, h, -h]
}

fn sx_matrix() -> [Complex64; 4] {
    let p = Complex64::new(0.5, 0.5);
    let m = Complex64::new(0.5, -0.5);
    [p, m, m, p]
}

fn ry_matrix(angle: f64) -> [Complex64; 4] {
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    [
        Complex64::new(c, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(c, 0.0),
    ]
}

/// Givens rotation between (occupied set) and (virtual set) configurations:
/// on each amplitude pair, `y_occ = cos·x_occ + sin·x_vir`,
/// `y_vir = -sin·x_occ + cos·x_vir`.
fn apply_single_exc(amps: &mut [Complex64], occ: usize, vir: usize, theta: f64) {
    let (c, s) = (theta.cos(), theta.sin());
    let (ob, vb) = (1usize << occ, 1usize << vir);
    let flip = ob | vb;
    for k in 0..amps.len() {
        if k & ob != 0 && k & vb == 0 {
            let x_occ = amps[k];
            let x_vir = amps[k ^ flip];
            amps[k] = c * x_occ + s * x_vir;
            amps[k ^ flip] = -s * x_occ + c * x_vir;
        }
    }
}

/// Paired-double Givens rotation: reference components (i, j occupied;
/// a, b empty) rotate toward the excited components (a, b occupied) with
/// `y_exc = cos·x_exc - sin·x_ref`, `y_ref = sin·x_exc + cos·x_ref`.
fn apply_double_exc(amps: &mut [Complex64], occ: u64, all: u64, theta: f64) {
    let (c, s) = (theta.cos(), theta.sin());
    let (occ, all) = (occ as usize, all as usize);
    for k in 0..amps.len() {
        if k & all == occ {
            let x_ref = amps[k];
            let x_exc = amps[k ^ all];
            amps[k ^ all] = c * x_exc - s * x_ref;
            amps[k] = s * x_exc + c * x_ref;
        }
    }
}

/// `exp(-i angle/2 P)` applied in place via the pair coupling
/// `P|k> = phase(k) |k ^ x_mask>`.
fn apply_pauli_rot(amps: &mut [Complex64], string: &PauliString, angle: f64) {
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let mis = Complex64::new(0.0, -s);
    let x = string.x;
    if x == 0 {
        for (k, a) in amps.iter_mut().enumerate() {
            let phase = string.phase_on_basis_state(k as u64);
            *a *= Complex64::new(c, 0.0) + mis * phase;
        }
    } else {
        for k in 0..amps.len() {
            let partner = k ^ x as usize;
            if k < partner {
                let ak = amps[k];
                let ap = amps[partner];
                amps[k] = c * ak + mis * string.phase_on_basis_state(partner as u64) * ap;
                amps[partner] = c * ap + mis * string.phase_on_basis_state(k as u64) * ak;
            }
        }
    }
}

fn apply_resolved(amps: &mut [Complex64], op: &ResolvedOp) {
    match op {
        ResolvedOp::X(q) => apply_x(amps, *q),
        ResolvedOp::H(q) => apply_one_qubit(amps, *q, &h_matrix()),
        ResolvedOp::Sx(q) => apply_one_qubit(amps, *q, &sx_matrix()),
        ResolvedOp::Rz(q, a) => apply_rz(amps, *q, *a),
        ResolvedOp::Ry(q, a) => apply_one_qubit(amps, *q, &ry_matrix(*a)),
        ResolvedOp::Cx(c, t) => apply_cx(amps, *c, *t),
        ResolvedOp::SingleExc { occ, vir, theta } => apply_single_exc(amps, *occ, *vir, *theta),
        ResolvedOp::DoubleExc { occ, all, theta } => apply_double_exc(amps, *occ, *all, *theta),
        ResolvedOp::PauliRot { string, angle } => apply_pauli_rot(amps, string, *angle),
    }
}

fn apply_resolved_inverse(amps: &mut [Complex64], op: &ResolvedOp) {
    match op {
        ResolvedOp::X(q) => apply_x(amps, *q),
        ResolvedOp::H(q) => apply_one_qubit(amps, *q, &h_matrix()),
        ResolvedOp::Cx(c, t) => apply_cx(amps, *c, *t),
        ResolvedOp::Sx(q) => {
            let p = Complex64::new(0.5, -0.5);
            let m = Complex64::new(0.5, 0.5);
            apply_one_qubit(amps, *q, &[p, m, m, p]);
        }
        ResolvedOp::Rz(q, a) => apply_rz(amps, *q, -a),
        ResolvedOp::Ry(q, a) => apply_one_qubit(amps, *q, &ry_matrix(-a)),
        ResolvedOp::SingleExc { occ, vir, theta } => apply_single_exc(amps, *occ, *vir, -theta),
        ResolvedOp::DoubleExc { occ, all, theta } => apply_double_exc(amps, *occ, *all, -theta),
        ResolvedOp::PauliRot { string, angle } => apply_pauli_rot(amps, string, -angle),
    }
}

/// Apply `dU/d(angle)` to a copy of the state (zero on components the
/// rotation leaves untouched). Only parameter-bearing kinds are supported.
fn derivative_state(amps: &[Complex64], op: &ResolvedOp) -> Vec<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    match op {
        ResolvedOp::SingleExc { occ, vir, theta } => {
            let (c, s) = (theta.cos(), theta.sin());
            let (ob, vb) = (1usize << occ, 1usize << vir);
            let flip = ob | vb;
            let mut out = vec![zero; amps.len()];
            for k in 0..amps.len() {
                if k & ob != 0 && k & vb == 0 {
                    let x_occ = amps[k];
                    let x_vir = amps[k ^ flip];
                    out[k] = -s * x_occ + c * x_vir;
                    out[k ^ flip] = -c * x_occ - s * x_vir;
                }
            }
            out
        }
        ResolvedOp::DoubleExc { occ, all, theta } => {
            let (c, s) = (theta.cos(), theta.sin());
            let (occ, all) = (*occ as usize, *all as usize);
            let mut out = vec![zero; amps.len()];
            for k in 0..amps.len() {
                if k & all == occ {
                    let x_ref = amps[k];
                    let x_exc = amps[k ^ all];
                    out[k ^ all] = -s * x_exc - c * x_ref;
                    out[k] = c * x_exc - s * x_ref;
                }
            }
            out
        }
        ResolvedOp::PauliRot { string, angle } => {
            // dU = -1/2 (sin(a/2) I + i cos(a/2) P).
            let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
            let hs = Complex64::new(-0.5 * s, 0.0);
            let hic = Complex64::new(0.0, -0.5 * c);
            let x = string.x as usize;
            let mut out = vec![zero; amps.len()];
            for k in 0..amps.len() {
                let partner = k ^ x;
                out[k] = hs * amps[k]
                    + hic * string.phase_on_basis_state(partner as u64) * amps[partner];
            }
            out
        }
        ResolvedOp::Ry(q, a) => {
            let (c, s) = ((a / 2.0).cos(), (a / 2.0).sin());
            let dm = [
                Complex64::new(-0.5 * s, 0.0),
                Complex64::new(-0.5 * c, 0.0),
                Complex64::new(0.5 * c, 0.0),
                Complex64::new(-0.5 * s, 0.0),
            ];
            let mut out = amps.to_vec();
            apply_one_qubit(&mut out, *q, &dm);
            out
        }
        ResolvedOp::Rz(q, a) => {
            let e0 = Complex64::from_polar(0.5, -a / 2.0) * Complex64::new(0.0, -1.0);
            let dm = [e0, zero, zero, e0.conj()];
            let mut out = amps.to_vec();
            apply_one_qubit(&mut out, *q, &dm);
            out
        }
        _ => unreachable!("derivative requested for a non-parametrized gate kind"),
    }
}

fn check_params(c: &Circuit, params: &[f64]) -> Result<(), SimError> {
    if params.len() != c.n_params() {
        return Err(SimError::ParamMismatch {
            expected: c.n_params(),
            got: params.len(),
        });
    }
    Ok(())
}

fn check_hermitian(h: &PauliSum) -> Result<(), SimError> {
    for (_, coeff) in h.terms() {
        if coeff.im.abs() > 1e-10 {
            return Err(SimError::NonHermitian(coeff.im.abs()));
        }
    }
    Ok(())
}

/// Run the circuit on `|0...0>`, applying layers in order.
pub fn evolve(c: &Circuit, params: &[f64]) -> Result<Statevector, SimError> {
    check_params(c, params)?;
    let mut state = Statevector::zero_state(c.n_qubits);
    for gate in c.gates() {
        state.apply_gate(gate, params);
    }
    debug_assert!((state.norm() - 1.0).abs() < 1e-10);
    Ok(state)
}

/// `<v|H|v>`; the imaginary residue must vanish (Hermitian `h`).
pub fn expectation(v: &Statevector, h: &PauliSum) -> Result<f64, SimError> {
    if h.n_qubits != v.n_qubits {
        return Err(SimError::DimensionMismatch {
            operator: h.n_qubits,
            state: v.n_qubits,
        });
    }
    check_hermitian(h)?;
    Ok(h.expectation(&v.amps))
}

/// Energy and analytic gradient of `<psi(params)|H|psi(params)>` via one
/// reverse (adjoint) sweep: cost is a small constant times one evolution,
/// independent of the parameter count.
pub fn gradient(c: &Circuit, params: &[f64], h: &PauliSum) -> Result<(f64, Vec<f64>), SimError> {
    check_params(c, params)?;
    if h.n_qubits != c.n_qubits {
        return Err(SimError::DimensionMismatch {
            operator: h.n_qubits,
            state: c.n_qubits,
        });
    }
    check_hermitian(h)?;
    let mut psi = evolve(c, params)?;
    let mut lam = Statevector {
        n_qubits: c.n_qubits,
        amps: h.matvec(&psi.amps),
    };
    let energy = psi.inner(&lam).re;
    let mut grad = vec![0.0; c.n_params()];
    let gates: Vec<&Gate> = c.gates().collect();
    for gate in gates.into_iter().rev() {
        let op = resolve_gate(gate, params);
        apply_resolved_inverse(&mut psi.amps, &op);
        if let Some(j) = gate.param.param_index() {
            let dpsi = derivative_state(&psi.amps, &op);
            let overlap: Complex64 = lam.amps.iter().zip(&dpsi).map(|(l, d)| l.conj() * d).sum();
            grad[j] += 2.0 * gate.param.coeff() * overlap.re;
        }
        apply_resolved_inverse(&mut lam.amps, &op);
    }
    Ok((energy, grad))
}

/// Dense unitary of the circuit (column `j` is the image of basis state
/// `j`); intended for small test instances.
pub fn circuit_unitary(c: &Circuit, params: &[f64]) -> Result<DMatrix<Complex64>, SimError> {
    check_params(c, params)?;
    let dim = 1usize << c.n_qubits;
    let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for col in 0..dim {
        let mut state = Statevector::basis_state(c.n_qubits, col as u64);
        for gate in c.gates() {
            state.apply_gate(gate, params);
        }
        for row in 0..dim {
            m[(row, col)] = state.amps[row];
        }
    }
    Ok(m)
}

/// Max-entry distance between `a` and `b` after aligning `b`'s global phase
/// to `a` at `b`'s largest entry.
pub fn phase_aligned_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let mut best = (0usize, 0usize);
    let mut best_norm = -1.0;
    for j in 0..b.ncols() {
        for i in 0..b.nrows() {
            let n = b[(i, j)].norm();
            if n > best_norm {
                best_norm = n;
                best = (i, j);
            }
        }
    }
    if best_norm < 1e-300 {
        return f64::INFINITY;
    }
    let phase = a[best] / b[best];
    let phase = phase / Complex64::new(phase.norm(), 0.0);
    let mut dist: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            dist = dist.max((a[(i, j)] - phase * b[(i, j)]).norm());
        }
    }
    dist
}

/// Depolarizing + readout-flip noise parameters, with the RNG seed that
/// makes a run reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    /// Per-one-qubit-gate depolarizing probability.
    pub p1: f64,
    /// Per-two-qubit-gate depolarizing probability.
    pub p2: f64,
    /// Per-bit readout flip probability.
    pub p_readout: f64,
    pub seed: u64,
}

impl NoiseModel {
    /// The default representative rates: p1 = 0.001, p2 = 0.01,
    /// p_readout = 0.01.
    pub fn with_default_rates(seed: u64) -> Self {
        NoiseModel {
            p1: 0.001,
            p2: 0.01,
            p_readout: 0.01,
            seed,
        }
    }

    /// All rates zero: sampling reduces exactly to the noiseless path.
    pub fn noiseless(seed: u64) -> Self {
        NoiseModel {
            p1: 0.0,
            p2: 0.0,
            p_readout: 0.0,
            seed,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0 && self.p_readout == 0.0
    }

    fn validate(&self) -> Result<(), SimError> {
        for (name, value) in [
            ("p1", self.p1),
            ("p2", self.p2),
            ("p_readout", self.p_readout),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SimError::BadProbability { name, value });
            }
        }
        Ok(())
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::with_default_rates(0)
    }
}

/// Measurement outcome counts keyed by bitstring (most-significant qubit
/// first).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleHistogram {
    pub n_qubits: usize,
    pub shots: u64,
    pub counts: BTreeMap<String, u64>,
}

impl SampleHistogram {
    fn from_indices(n_qubits: usize, indices: impl IntoIterator<Item = u64>) -> Self {
        let mut counts = BTreeMap::new();
        let mut shots = 0;
        for idx in indices {
            *counts.entry(bitstring(idx, n_qubits)).or_insert(0) += 1;
            shots += 1;
        }
        SampleHistogram {
            n_qubits,
            shots,
            counts,
        }
    }

    /// Relative frequency of one bitstring.
    pub fn frequency(&self, bits: &str) -> f64 {
        *self.counts.get(bits).unwrap_or(&0) as f64 / self.shots as f64
    }

    /// CSV dump, `bitstring,count`, keys sorted.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bitstring,count\n");
        for (bits, count) in &self.counts {
            out.push_str(&format!("{bits},{count}\n"));
        }
        out
    }
}

/// Render a basis index as a bitstring, most-significant qubit first.
pub fn bitstring(index: u64, n_qubits: usize) -> String {
    (0..n_qubits)
        .rev()
        .map(|q| if (index >> q) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Per-shot RNGs: independent ChaCha streams for noise insertion and
/// measurement, both derived from the master seed.
fn shot_rngs(seed: u64, global_shot: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
    noise_rng.set_stream(2 * global_shot);
    let mut meas_rng = ChaCha8Rng::seed_from_u64(seed);
    meas_rng.set_stream(2 * global_shot + 1);
    (noise_rng, meas_rng)
}

fn cdf_invert(probs: &[f64], u: f64) -> u64 {
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k as u64;
        }
    }
    (probs.len() - 1) as u64
}

fn apply_pauli_index(amps: &mut [Complex64], q: usize, which: usize) {
    match which {
        0 => apply_x(amps, q),
        1 => {
            // Y = [[0, -i], [i, 0]].
            let bit = 1usize << q;
            for k in 0..amps.len() {
                if k & bit == 0 {
                    let a0 = amps[k];
                    let a1 = amps[k | bit];
                    amps[k] = Complex64::new(0.0, -1.0) * a1;
                    amps[k | bit] = Complex64::new(0.0, 1.0) * a0;
                }
            }
        }
        _ => {
            let bit = 1usize << q;
            for (k, a) in amps.iter_mut().enumerate() {
                if k & bit != 0 {
                    *a = -*a;
                }
            }
        }
    }
}

/// One stochastic trajectory: evolve through the resolved ops, inserting a
/// uniformly random non-identity Pauli on a gate's support with probability
/// p1 (one-qubit gates) or p2 (two-qubit gates).
fn run_trajectory(
    n_qubits: usize,
    ops: &[ResolvedOp],
    noise: &NoiseModel,
    rng: &mut ChaCha8Rng,
) -> Vec<Complex64> {
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
    amps[0] = Complex64::new(1.0, 0.0);
    for op in ops {
        apply_resolved(&mut amps, op);
        let p = if op.n_targets() == 1 {
            noise.p1
        } else {
            noise.p2
        };
        if p > 0.0 && rng.gen::<f64>() < p {
            let support: Vec<usize> = (0..n_qubits)
                .filter(|q| op.support() >> q & 1 == 1)
                .collect();
            if support.len() == 1 {
                let which = rng.gen_range(0..3usize);
                apply_pauli_index(&mut amps, support[0], which);
            } else {
                // 15 non-identity two-qubit Paulis, encoded base 4 skipping II.
                let code = rng.gen_range(1..16usize);
                let (w0, w1) = (code % 4, code / 4);
                if w0 > 0 {
                    apply_pauli_index(&mut amps, support[0], w0 - 1);
                }
                if w1 > 0 {
                    apply_pauli_index(&mut amps, support[1], w1 - 1);
                }
            }
        }
    }
    amps
}

/// Measure one shot: sample a basis index from the state, then apply
/// independent readout flips.
fn measure_shot(amps: &[Complex64], n_qubits: usize, p_readout: f64, rng: &mut ChaCha8Rng) -> u64 {
    let u = rng.gen::<f64>();
    let mut acc = 0.0;
    let mut index = (amps.len() - 1) as u64;
    for (k, a) in amps.iter().enumerate() {
        acc += a.norm_sqr();
        if u < acc {
            index = k as u64;
            break;
        }
    }
    if p_readout > 0.0 {
        for q in 0..n_qubits {
            if rng.gen::<f64>() < p_readout {
                index ^= 1 << q;
            }
        }
    }
    index
}

fn resolved_ops(c: &Circuit, params: &[f64]) -> Vec<ResolvedOp> {
    c.gates().map(|g| resolve_gate(g, params)).collect()
}

/// Sample measurement bitstrings from the circuit's output state. Noiseless
/// runs (zero rates) sample the exact native-state distribution; noisy runs
/// evolve per-shot stochastic trajectories of the decomposed circuit and
/// then apply readout flips. Identical seeds give identical histograms.
pub fn sample(
    c: &Circuit,
    params: &[f64],
    shots: u64,
    noise: &NoiseModel,
) -> Result<SampleHistogram, SimError> {
    let indices = sample_indices(c, params, shots, noise, 0)?;
    Ok(SampleHistogram::from_indices(c.n_qubits, indices))
}

fn sample_indices(
    c: &Circuit,
    params: &[f64],
    shots: u64,
    noise: &NoiseModel,
    shot_offset: u64,
) -> Result<Vec<u64>, SimError> {
    check_params(c, params)?;
    noise.validate()?;
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    if noise.is_noiseless() {
        let probs = evolve(c, params)?.probabilities();
        Ok((0..shots)
            .map(|s| {
                let (_, mut meas_rng) = shot_rngs(noise.seed, shot_offset + s);
                cdf_invert(&probs, meas_rng.gen::<f64>())
            })
            .collect())
    } else {
        let ops = resolved_ops(&decompose(c, Basis::CxRy), params);
        Ok((0..shots)
            .into_par_iter()
            .map(|s| {
                let (mut noise_rng, mut meas_rng) = shot_rngs(noise.seed, shot_offset + s);
                let amps = run_trajectory(c.n_qubits, &ops, noise, &mut noise_rng);
                measure_shot(&amps, c.n_qubits, noise.p_readout, &mut meas_rng)
            })
            .collect())
    }
}

/// One qubit-wise commuting measurement group: the union Pauli axes
/// (`x`/`z` masks) and the member terms with their real coefficients.
#[derive(Debug, Clone)]
pub struct MeasurementGroup {
    pub x: u64,
    pub z: u64,
    pub terms: Vec<(PauliString, f64)>,
}

/// Greedy first-fit partition of the non-identity terms into qubit-wise
/// commuting groups (deterministic: terms visited in canonical order).
/// Returns the identity offset separately.
pub fn group_qubitwise_commuting(h: &PauliSum) -> Result<(f64, Vec<MeasurementGroup>), SimError> {
    check_hermitian(h)?;
    let mut offset = 0.0;
    let mut groups: Vec<MeasurementGroup> = Vec::new();
    for (string, coeff) in h.terms() {
        if string.weight() == 0 {
            offset += coeff.re;
            continue;
        }
        let support = string.support_mask();
        let slot = groups.iter_mut().find(|g| {
            let shared = support & (g.x | g.z);
            ((string.x ^ g.x) | (string.z ^ g.z)) & shared == 0
        });
        match slot {
            Some(g) => {
                g.x |= string.x;
                g.z |= string.z;
                g.terms.push((*string, coeff.re));
            }
            None => groups.push(MeasurementGroup {
                x: string.x,
                z: string.z,
                terms: vec![(*string, coeff.re)],
            }),
        }
    }
    Ok((offset, groups))
}

/// Basis-change gates mapping every member of the group onto Z-type
/// strings: H for X axes, S-dagger then H for Y axes.
pub fn measurement_basis_gates(group: &MeasurementGroup, n_qubits: usize) -> Vec<Gate> {
    let mut gates = Vec::new();
    for q in 0..n_qubits {
        let (xb, zb) = ((group.x >> q) & 1 == 1, (group.z >> q) & 1 == 1);
        if xb && zb {
            gates.push(Gate::rz(q, GateParam::Fixed(-std::f64::consts::FRAC_PI_2)));
            gates.push(Gate::h(q));
        } else if xb {
            gates.push(Gate::h(q));
        }
    }
    gates
}

/// A sampled energy estimate with its shot-noise standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyEstimate {
    pub energy: f64,
    pub std_error: f64,
    pub n_groups: usize,
    pub shots_per_group: u64,
}

/// Estimate `<H>` on the circuit's output by measuring each qubit-wise
/// commuting group with `shots` shots (noise handled as in [`sample`]).
/// Group means are combined with the identity offset; the standard error
/// adds the per-group standard errors of the mean in quadrature.
pub fn noisy_expectation(
    c: &Circuit,
    params: &[f64],
    h: &PauliSum,
    shots: u64,
    noise: &NoiseModel,
) -> Result<NoisyEstimate, SimError> {
    check_params(c, params)?;
    noise.validate()?;
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    if h.n_qubits != c.n_qubits {
        return Err(SimError::DimensionMismatch {
            operator: h.n_qubits,
            state: c.n_qubits,
        });
    }
    let (offset, groups) = group_qubitwise_commuting(h)?;
    let base_state = if noise.is_noiseless() {
        Some(evolve(c, params)?)
    } else {
        None
    };
    let mut energy = offset;
    let mut variance = 0.0;
    for (gi, group) in groups.iter().enumerate() {
        let basis_gates = measurement_basis_gates(group, c.n_qubits);
        let shot_offset = gi as u64 * shots;
        let indices: Vec<u64> = match &base_state {
            Some(state) => {
                let mut rotated = state.clone();
                for gate in &basis_gates {
                    rotated.apply_gate(gate, params);
                }
                let probs = rotated.probabilities();
                (0..shots)
                    .map(|s| {
                        let (_, mut meas_rng) = shot_rngs(noise.seed, shot_offset + s);
                        cdf_invert(&probs, meas_rng.gen::<f64>())
                    })
                    .collect()
            }
            None => {
                let gates: Vec<Gate> = c.gates().cloned().chain(basis_gates).collect();
                let meas_circuit =
                    Circuit::from_gates_asap(c.n_qubits, c.param_names.clone(), gates);
                let ops = resolved_ops(&decompose(&meas_circuit, Basis::CxRy), params);
                (0..shots)
                    .into_par_iter()
                    .map(|s| {
                        let (mut noise_rng, mut meas_rng) = shot_rngs(noise.seed, shot_offset + s);
                        let amps = run_trajectory(c.n_qubits, &ops, noise, &mut noise_rng);
                        measure_shot(&amps, c.n_qubits, noise.p_readout, &mut meas_rng)
                    })
                    .collect()
            }
        };
        // After the basis change every member string is Z-type on its
        // support; its value on outcome k is the support parity.
        let values: Vec<f64> = indices
            .iter()
            .map(|&k| {
                group
                    .terms
                    .iter()
                    .map(|(string, coeff)| {
                        let parity = (k & string.support_mask()).count_ones() & 1;
                        if parity == 1 {
                            -coeff
                        } else {
                            *coeff
                        }
                    })
                    .sum::<f64>()
            })
            .collect();
        let mean = values.iter().sum::<f64>() / shots as f64;
        energy += mean;
        if shots > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            variance += ss / ((shots - 1) as f64 * shots as f64);
        }
    }
    Ok(NoisyEstimate {
        energy,
        std_error: variance.sqrt(),
        n_groups: groups.len(),
        shots_per_group: shots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{
        build_pgsd, build_uccsd, enumerate_excitations, hf_reference, UccsdConfig,
    };
    use crate::circuit::{double_exc_matrix, kind_matrix, single_exc_matrix};
    use crate::pauli::{
        jw_double_generator, jw_map_hamiltonian, jw_single_generator, ActiveSpaceSpec, PauliAxis,
    };
    use rand::rngs::StdRng;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Independent embedding of a small row-major matrix at the given qubit
    /// positions (little-endian local index: bit t of the local index is
    /// qubit `qubits[t]`), built column by column without the simulator.
    fn embed(n_qubits: usize, qubits: &[usize], m: &[Complex64]) -> DMatrix<Complex64> {
        let dim = 1usize << n_qubits;
        let ldim = 1usize << qubits.len();
        assert_eq!(m.len(), ldim * ldim);
        let mut out = DMatrix::from_element(dim, dim, c64(0.0, 0.0));
        for col in 0..dim {
            let mut local_col = 0usize;
            for (t, &q) in qubits.iter().enumerate() {
                local_col |= ((col >> q) & 1) << t;
            }
            let cleared = qubits.iter().fold(col, |acc, &q| acc & !(1usize << q));
            for local_row in 0..ldim {
                let mut row = cleared;
                for (t, &q) in qubits.iter().enumerate() {
                    row |= ((local_row >> t) & 1) << q;
                }
                out[(row, col)] = m[local_row * ldim + local_col];
            }
        }
        out
    }

    fn single_gate_circuit(n_qubits: usize, gate: Gate) -> Circuit {
        Circuit::from_gates_asap(n_qubits, vec!["t".into()], vec![gate])
    }

    #[test]
    fn x_gate_flips_the_zero_state() {
        let c = single_gate_circuit(1, Gate::x(0));
        let v = evolve(&c, &[0.0]).unwrap();
        assert!((v.amps[1] - c64(1.0, 0.0)).norm() < 1e-15);
        assert!(matches!(
            evolve(&c, &[]),
            Err(SimError::ParamMismatch {
                expected: 1,
                got: 0
            })
        ));
    }

    #[test]
    fn two_singles_leave_cos_cos_on_the_reference() {
        // Four qubits, X prep on 0 and 2, singles 0->1 and 2->3.
        let gates = vec![
            Gate::x(0),
            Gate::x(2),
            Gate::single_exc(
                0,
                1,
                GateParam::Linear {
                    index: 0,
                    coeff: 1.0,
                    offset: 0.0,
                },
            ),
            Gate::single_exc(
                2,
                3,
                GateParam::Linear {
                    index: 1,
                    coeff: 1.0,
                    offset: 0.0,
                },
            ),
        ];
        let c = Circuit::from_gates_asap(4, vec!["t0".into(), "t1".into()], gates);
        let (t0, t1) = (0.37, -0.81);
        let v = evolve(&c, &[t0, t1]).unwrap();
        // |0101> printed MSB-first = index 0b0101 = 5.
        assert!((v.amps[5].re - t0.cos() * t1.cos()).abs() < 1e-12);
        assert!(v.amps[5].im.abs() < 1e-15);
    }

    #[test]
    fn singles_and_double_reference_amplitude_matches_closed_form() {
        let spec = ActiveSpaceSpec::new(2, vec![0, 1], 0);
        let c = build_pgsd(&spec).unwrap();
        let th = [0.31, -0.52, 0.77];
        let v = evolve(&c, &th).unwrap();
        let want =
            th[0].cos() * th[1].cos() * th[2].cos() + th[0].sin() * th[1].sin() * th[2].sin();
        assert!((v.amps[5].re - want).abs() < 1e-12, "got {}", v.amps[5]);
    }

    #[test]
    fn norm_is_preserved_through_a_deep_random_circuit() {
        use rand::SeedableRng;
        let mut rng = StdRng::seed_from_u64(11);
        let spec = ActiveSpaceSpec::new(4, vec![0, 1, 2, 3], 0);
        let c = build_pgsd(&spec).unwrap();
        let params: Vec<f64> = (0..c.n_params())
            .map(|_| rng.gen_range(-1.5..1.5))
            .collect();
        let v = evolve(&c, &params).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn native_gates_match_their_defining_matrices_under_embedding() {
        for &theta in &[0.0, 0.4, -1.3, 2.9] {
            let p = GateParam::Fixed(theta);
            let c = single_gate_circuit(3, Gate::single_exc(2, 0, p));
            let got = circuit_unitary(&c, &[0.0]).unwrap();
            let want = embed(3, &[2, 0], &single_exc_matrix(theta));
            assert!((got - want).iter().all(|d| d.norm() < 1e-12));

            let c = single_gate_circuit(5, Gate::double_exc(0, 2, 1, 4, p));
            let got = circuit_unitary(&c, &[0.0]).unwrap();
            // Gate::double_exc(i, j, a, b) orders its support [b, j, a, i].
            let want = embed(5, &[4, 2, 1, 0], &double_exc_matrix(theta));
            assert!((got - want).iter().all(|d| d.norm() < 1e-12));

            let string = PauliString::from_label("X0 Y1 Z2").unwrap();
            let c = single_gate_circuit(3, Gate::pauli_rot(string, p));
            let got = circuit_unitary(&c, &[0.0]).unwrap();
            let want = embed(
                3,
                &[0, 1, 2],
                &kind_matrix(&GateKind::PauliRot(string), theta),
            );
            assert!((got - want).iter().all(|d| d.norm() < 1e-12));
        }
    }

    #[test]
    fn decompositions_reproduce_the_gate_unitaries_up_to_global_phase() {
        use rand::SeedableRng;
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..6 {
            let theta: f64 = rng.gen_range(-3.0..3.0);
            let p = GateParam::Fixed(theta);
            for basis in [Basis::CxRy, Basis::CxSx] {
                let c = single_gate_circuit(2, Gate::single_exc(0, 1, p));
                let want = circuit_unitary(&c, &[0.0]).unwrap();
                let got = circuit_unitary(&decompose(&c, basis), &[0.0]).unwrap();
                assert!(
                    phase_aligned_distance(&want, &got) < 1e-10,
                    "single {basis:?}"
                );

                let c = single_gate_circuit(4, Gate::double_exc(0, 1, 2, 3, p));
                let want = circuit_unitary(&c, &[0.0]).unwrap();
                let got = circuit_unitary(&decompose(&c, basis), &[0.0]).unwrap();
                assert!(
                    phase_aligned_distance(&want, &got) < 1e-10,
                    "double {basis:?}"
                );

                let string = PauliString::from_label("Y0 X2 Z3").unwrap();
                let c = single_gate_circuit(4, Gate::pauli_rot(string, p));
                let want = circuit_unitary(&c, &[0.0]).unwrap();
                let got = circuit_unitary(&decompose(&c, basis), &[0.0]).unwrap();
                assert!(
                    phase_aligned_distance(&want, &got) < 1e-10,
                    "pauli {basis:?}"
                );
            }
        }
    }

    #[test]
    fn uccsd_circuit_equals_sequential_generator_exponentials() {
        // Independent oracle: apply exp(theta_k G_k) to the HF vector by a
        // Taylor series in the Jordan-Wigner generator (matvec only).
        let spec = ActiveSpaceSpec::new(2, vec![0, 1], 0);
        let n = 4;
        let circuit = build_uccsd(&spec, &UccsdConfig::default()).unwrap();
        let thetas = [0.43, -0.27, 0.61];
        let got = evolve(&circuit, &thetas).unwrap();

        let hf = hf_reference(&spec).unwrap();
        let mut want = Statevector::basis_state(n, hf).amps;
        for (exc, &theta) in enumerate_excitations(&spec).iter().zip(&thetas) {
            let gen = match exc.order {
                1 => jw_single_generator(n, exc.from_spinorbs[0], exc.to_spinorbs[0]),
                _ => jw_double_generator(
                    n,
                    (exc.from_spinorbs[0], exc.from_spinorbs[1]),
                    (exc.to_spinorbs[0], exc.to_spinorbs[1]),
                ),
            };
            let mut term = want.clone();
            for order in 1..60 {
                let scaled: Vec<Complex64> = gen
                    .matvec(&term)
                    .iter()
                    .map(|v| v * theta / order as f64)
                    .collect();
                for (w, t) in want.iter_mut().zip(&scaled) {
                    *w += t;
                }
                let nrm: f64 = scaled.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                term = scaled;
                if nrm < 1e-15 {
                    break;
                }
            }
        }
        for (g, w) in got.amps.iter().zip(&want) {
            assert!((g - w).norm() < 1e-10, "{g} vs {w}");
        }
    }

    #[test]
    fn expectation_of_z_on_excited_qubit_is_minus_one() {
        let c = single_gate_circuit(1, Gate::x(0));
        let v = evolve(&c, &[0.0]).unwrap();
        let mut h = PauliSum::zero(1);
        h.add_term(PauliString::single(PauliAxis::Z, 0), c64(1.0, 0.0));
        assert!((expectation(&v, &h).unwrap() + 1.0).abs() < 1e-14);
        // Non-Hermitian rejection.
        let mut bad = PauliSum::zero(1);
        bad.add_term(PauliString::single(PauliAxis::Z, 0), c64(0.0, 1.0));
        assert!(matches!(
            expectation(&v, &bad),
            Err(SimError::NonHermitian(_))
        ));
    }

    #[test]
    fn hf_expectation_matches_the_determinant_energy_formula() {
        // Independent oracle: the closed-shell HF determinant energy is
        //   e_core + 2 sum_i h_ii + sum_ij (2 (ii|jj) - (ij|ji))
        // over occupied spatial orbitals.
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../fixtures/h2/r0.7350.fcidump"
        ))
        .unwrap();
        let data = crate::fcidump::parse_fcidump(&text).unwrap();
        let spec = ActiveSpaceSpec::new(data.nelec, (0..data.norb).collect(), 0);
        let h = jw_map_hamiltonian(&data);
        let hf = hf_reference(&spec).unwrap();
        let v = Statevector::basis_state(2 * data.norb, hf);
        let got = expectation(&v, &h).unwrap();

        let nocc = data.nelec / 2;
        let mut want = data.e_core;
        for i in 0..nocc {
            want += 2.0 * data.h1(i, i);
            for j in 0..nocc {
                want += 2.0 * data.g2(i, i, j, j) - data.g2(i, j, j, i);
            }
        }
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn eigenvector_expectation_returns_its_eigenvalue() {
        use rand::SeedableRng;
        let mut rng = StdRng::seed_from_u64(3);
        let mut h = PauliSum::zero(2);
        for label in ["Z0", "Z1", "X0 X1", "Y0 Y1", "Z0 Z1", "X0"] {
            h.add_term(
                PauliString::from_label(label).unwrap(),
                c64(rng.gen_range(-1.0..1.0), 0.0),
            );
        }
        // Dense matrix from matvec columns.
        let dim = 4;
        let mut m = DMatrix::from_element(dim, dim, c64(0.0, 0.0));
        for col in 0..dim {
            let mut e = vec![c64(0.0, 0.0); dim];
            e[col] = c64(1.0, 0.0);
            let y = h.matvec(&e);
            for row in 0..dim {
                m[(row, col)] = y[row];
            }
        }
        let eig = m.symmetric_eigen();
        let idx = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let v = Statevector {
            n_qubits: 2,
            amps: eig.eigenvectors.column(idx).iter().copied().collect(),
        };
        let got = expectation(&v, &h).unwrap();
        assert!((got - eig.eigenvalues[idx]).abs() < 1e-10);
    }

    fn central_fd(c: &Circuit, params: &[f64], h: &PauliSum, step: f64) -> Vec<f64> {
        (0..params.len())
            .map(|j| {
                let mut plus = params.to_vec();
                plus[j] += step;
                let mut minus = params.to_vec();
                minus[j] -= step;
                let ep = expectation(&evolve(c, &plus).unwrap(), h).unwrap();
                let em = expectation(&evolve(c, &minus).unwrap(), h).unwrap();
                (ep - em) / (2.0 * step)
            })
            .collect()
    }

    #[test]
    fn adjoint_gradient_matches_central_finite_differences() {
        use rand::SeedableRng;
        let mut rng = StdRng::seed_from_u64(17);
        let spec = ActiveSpaceSpec::new(2, vec![0, 1, 2], 0);
        for ansatz in 0..2 {
            let c = if ansatz == 0 {
                build_pgsd(&spec).unwrap()
            } else {
                build_uccsd(&spec, &UccsdConfig::default()).unwrap()
            };
            let mut h = PauliSum::zero(6);
            for label in ["Z0", "Z3", "X0 X1", "Y2 Z3 Y4", "Z1 Z4", "X2 X5"] {
                h.add_term(
                    PauliString::from_label(label).unwrap(),
                    c64(rng.gen_range(-1.0..1.0), 0.0),
                );
            }
            let params: Vec<f64> = (0..c.n_params())
                .map(|_| rng.gen_range(-0.8..0.8))
                .collect();
            let (energy, grad) = gradient(&c, &params, &h).unwrap();
            assert!(
                (energy - expectation(&evolve(&c, &params).unwrap(), &h).unwrap()).abs() < 1e-12
            );
            let fd = central_fd(&c, &params, &h, 1e-5);
            for (g, f) in grad.iter().zip(&fd) {
                let scale = f.abs().max(1e-6);
                assert!((g - f).abs() / scale < 1e-6, "adjoint {g} vs fd {f}");
            }
        }
    }

    #[test]
    fn gradient_at_zero_equals_twice_the_hf_coupling() {
        // With all angles zero, dE/dtheta of a single-excitation parameter is
        // 2 Re <HF|H|excited>.
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../fixtures/h2/r0.7350.fcidump"
        ))
        .unwrap();
        let data = crate::fcidump::parse_fcidump(&text).unwrap();
        let spec = ActiveSpaceSpec::new(2, vec![0, 1], 0);
        let h = jw_map_hamiltonian(&data);
        let c = build_pgsd(&spec).unwrap();
        let (_, grad) = gradient(&c, &vec![0.0; c.n_params()], &h).unwrap();
        let hf = hf_reference(&spec).unwrap();
        let hf_vec = Statevector::basis_state(4, hf);
        let h_hf = h.matvec(&hf_vec.amps);
        for (k, exc) in enumerate_excitations(&spec).iter().enumerate() {
            if exc.order != 1 {
                continue;
            }
            // d/dtheta moves the occupied amplitude onto the excited
            // determinant with weight -1 at theta = 0... the coupling sign
            // follows the gate's -sin convention.
            let excited = hf ^ (1 << exc.from_spinorbs[0]) ^ (1 << exc.to_spinorbs[0]);
            let coupling = h_hf[excited as usize].re;
            assert!(
                (grad[k] + 2.0 * coupling).abs() < 1e-10,
                "param {k}: grad {} vs coupling {}",
                grad[k],
                coupling
            );
        }
        // Identity Hamiltonian: zero gradient everywhere.
        let ident = PauliSum::scalar(4, c64(2.5, 0.0));
        let (e, g) = gradient(&c, &vec![0.1; c.n_params()], &ident).unwrap();
        assert!((e - 2.5).abs() < 1e-12);
        assert!(g.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn pgsd_layers_commute_within_each_layer() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = StdRng::seed_from_u64(23);
        let spec = ActiveSpaceSpec::new(4, vec![0, 1, 2, 3], 0);
        let c = build_pgsd(&spec).unwrap();
        let params: Vec<f64> = (0..c.n_params())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let reference = evolve(&c, &params).unwrap();
        let mut shuffled = c.clone();
        for layer in &mut shuffled.layers {
            layer.shuffle(&mut rng);
        }
        let permuted = evolve(&shuffled, &params).unwrap();
        for (a, b) in reference.amps.iter().zip(&permuted.amps) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn ansatz_states_stay_in_the_particle_sector() {
        use rand::SeedableRng;
        let mut rng = StdRng::seed_from_u64(41);
        for (n_e, m, ms2) in [(2usize, 2usize, 0i32), (4, 4, 0), (3, 3, 1)] {
            let spec = ActiveSpaceSpec::new(n_e, (0..m).collect(), ms2);
            for kind in 0..2 {
                let c = if kind == 0 {
                    build_pgsd(&spec).unwrap()
                } else {
                    build_uccsd(&spec, &UccsdConfig::default()).unwrap()
                };
                let params: Vec<f64> = (0..c.n_params())
                    .map(|_| rng.gen_range(-1.2..1.2))
                    .collect();
                let v = evolve(&c, &params).unwrap();
                let inside = v.sector_weight(m, spec.n_alpha(), spec.n_beta());
                assert!(
                    (1.0 - inside).abs() < 1e-12,
                    "out-of-sector {}",
                    1.0 - inside
                );
            }
        }
    }

    #[test]
    fn bell_pair_sampling_sees_only_correlated_outcomes() {
        let gates = vec![Gate::h(0), Gate::cx(0, 1)];
        let c = Circuit::from_gates_asap(2, vec![], gates);
        let hist = sample(&c, &[], 10_000, &NoiseModel::noiseless(7)).unwrap();
        assert_eq!(hist.shots, 10_000);
        assert_eq!(hist.counts.len(), 2);
        assert!(hist.counts.contains_key("00"));
        assert!(hist.counts.contains_key("11"));
        let p00 = hist.frequency("00");
        assert!((p00 - 0.5).abs() < 0.05);
        // Determinism under the seed; variation across seeds.
        let again = sample(&c, &[], 10_000, &NoiseModel::noiseless(7)).unwrap();
        assert_eq!(hist, again);
        let other = sample(&c, &[], 10_000, &NoiseModel::noiseless(8)).unwrap();
        assert_ne!(hist.counts, other.counts);
        assert!(matches!(
            sample(&c, &[], 0, &NoiseModel::noiseless(7)),
            Err(SimError::ZeroShots)
        ));
    }

    #[test]
    fn certain_readout_flip_inverts_a_deterministic_outcome() {
        let c = single_gate_circuit(1, Gate::x(0));
        let noise = NoiseModel {
            p1: 0.0,
            p2: 0.0,
            p_readout: 1.0,
            seed: 3,
        };
        let hist = sample(&c, &[0.0], 200, &noise).unwrap();
        assert_eq!(hist.counts.get("0"), Some(&200));
    }

    #[test]
    fn zero_rate_noise_reproduces_the_noiseless_histogram_exactly() {
        let spec = ActiveSpaceSpec::new(2, vec![0, 1], 0);
        let c = build_pgsd(&spec).unwrap();
        let params = [0.2, -0.4, 0.9];
        let clean = sample(&c, &params, 3000, &NoiseModel::noiseless(19)).unwrap();
        let zero_rates = NoiseModel {
            p1: 0.0,
            p2: 0.0,
            p_readout: 0.0,
            seed: 19,
        };
        let routed = sample(&c, &params, 3000, &zero_rates).unwrap();
        assert_eq!(clean, routed);
    }

    #[test]
    fn noise_shifts_the_sampled_distribution() {
        let spec = ActiveSpaceSpec::new(2, vec![0, 1], 0);
        let c = build_pgsd(&spec).unwrap();
        let params = [0.0, 0.0, 0.0];
        // Noiseless: the HF bitstring 0101 comes out every time.
        let clean = sample(&c, &params, 2000, &NoiseModel::noiseless(2)).unwrap();
        assert_eq!(clean.counts.get("0101"), Some(&2000));
        let noisy = sample(&c, &params, 2000, &NoiseModel::with_default_rates(2)).unwrap();
        let hf_freq = noisy.frequency("0101");
        assert!(hf_freq < 1.0, "noise must disturb some shots");
        assert!(hf_freq > 0.5, "rates are small; HF stays modal");
        // Reproducible under the same seed.
        let again = sample(&c, &params, 2000, &NoiseModel::with_default_rates(2)).unwrap();
        assert_eq!(noisy, again);
    }

    #[test]
    fn qubit_wise_commuting_grouping_is_greedy_and_deterministic() {
        let mut h = PauliSum::zero(2);
        h.add_term(PauliString::identity(), c64(0.5, 0.0));
        h.add_term(PauliString::from_label("Z0").unwrap(), c64(1.0, 0.0));
        h.add_term(PauliString::from_label("Z0 Z1").unwrap(), c64(2.0, 0.0));
        let (offset, groups) = group_qubitwise_commuting(&h).unwrap();
        assert_eq!(offset, 0.5);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].terms.len(), 2);

        let mut h2 = PauliSum::zero(2);
        h2.add_term(PauliString::from_label("X0 X1").unwrap(), c64(1.0, 0.0));
        h2.add_term(PauliString::from_label("Z0 Z1").unwrap(), c64(1.0, 0.0));
        let (_, groups) = group_qubitwise_commuting(&h2).unwrap();
        assert_eq!(groups.len(), 2, "commuting but not qubit-wise commuting");
    }

    #[test]
    fn deterministic_outcome_estimates_exactly() {
        let c = single_gate_circuit(1, Gate::x(0));
        let mut h = PauliSum::zero(1);
        h.add_term(PauliString::single(PauliAxis::Z, 0), c64(1.0, 0.0));
        let est = noisy_expectation(&c, &[0.0], &h, 500, &NoiseModel::noiseless(5)).unwrap();
        assert_eq!(est.energy, -1.0);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.n_groups, 1);
    }

    #[test]
    fn shot_estimate_agrees_with_exact_expectation_within_five_sigma() {
        use rand::SeedableRng;
        let mut rng = StdRng::seed_from_u64(29);
        let spec = ActiveSpaceSpec::new(2, vec![0, 1], 0);
        let c = build_pgsd(&spec).unwrap();
        let params: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut h = PauliSum::zero(4);
        for label in ["Z0", "Z2", "X0 X1", "Y1 Y3", "Z0 Z2", "X0 Y1 Z2"] {
            h.add_term(
                PauliString::from_label(label).unwrap(),
                c64(rng.gen_range(-1.0..1.0), 0.0),
            );
        }
        let exact = expectation(&evolve(&c, &params).unwrap(), &h).unwrap();
        let est = noisy_expectation(&c, &params, &h, 4000, &NoiseModel::noiseless(31)).unwrap();
        assert!(est.std_error > 0.0);
        assert!(
            (est.energy - exact).abs() < 5.0 * est.std_error,
            "estimate {} vs exact {} (se {})",
            est.energy,
            exact,
            est.std_error
        );
    }

    #[test]
    fn bitstrings_print_most_significant_qubit_first() {
        assert_eq!(bitstring(0b0101, 4), "0101");
        assert_eq!(bitstring(0b001001, 6), "001001");
        assert_eq!(bitstring(1, 3), "001");
    }
}
