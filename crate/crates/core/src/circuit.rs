//! Gate primitives, circuit layering, basis decompositions, and resource
//! accounting.
//!
//! Circuits are sequences of layers; gates within one layer act on pairwise
//! disjoint qubit sets, so a layer is one parallel moment. Gate supports are
//! ordered lists of qubit indices: local basis index bit `t` of a gate's
//! matrix corresponds to `qubits[t]` (little-endian within the support).
//!
//! Two hardware-style target bases are supported for decomposition and
//! resource counting, both with all-to-all connectivity and CX as the only
//! entangler:
//!
//! * [`Basis::CxRy`] — `{Rz, Ry, H, X, CX}`,
//! * [`Basis::CxSx`] — `{Rz, Sx, X, CX}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::pauli::{PauliAxis, PauliString};

/// Parameter binding of a gate's rotation angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateParam {
    /// The gate takes no angle (X, H, Sx, CX).
    None,
    /// A constant angle.
    Fixed(f64),
    /// `angle = coeff * params[index] + offset` — rotation angles stay linear
    /// in the named circuit parameters through every decomposition stage.
    Linear {
        index: usize,
        coeff: f64,
        offset: f64,
    },
}

impl GateParam {
    /// Resolve the angle against a parameter vector.
    pub fn angle(&self, params: &[f64]) -> f64 {
        match *self {
            GateParam::None => 0.0,
            GateParam::Fixed(a) => a,
            GateParam::Linear {
                index,
                coeff,
                offset,
            } => coeff * params[index] + offset,
        }
    }

    /// The parameter index this angle depends on, if any.
    pub fn param_index(&self) -> Option<usize> {
        match *self {
            GateParam::Linear { index, .. } => Some(index),
            _ => None,
        }
    }

    /// `d angle / d params[index]`.
    pub fn coeff(&self) -> f64 {
        match *self {
            GateParam::Linear { coeff, .. } => coeff,
            _ => 0.0,
        }
    }

    fn scaled(&self, factor: f64, extra_offset: f64) -> GateParam {
        match *self {
            GateParam::None => GateParam::Fixed(extra_offset),
            GateParam::Fixed(a) => GateParam::Fixed(factor * a + extra_offset),
            GateParam::Linear {
                index,
                coeff,
                offset,
            } => GateParam::Linear {
                index,
                coeff: factor * coeff,
                offset: factor * offset + extra_offset,
            },
        }
    }
}

/// The gate alphabet.
#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    /// Pauli-X.
    X,
    /// Hadamard.
    H,
    /// Square root of X, `½ [[1+i, 1-i], [1-i, 1+i]]`.
    Sx,
    /// `Rz(θ) = diag(e^{-iθ/2}, e^{+iθ/2})`.
    Rz,
    /// `Ry(θ) = [[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]]`.
    Ry,
    /// Controlled-X; `qubits[0]` is the control, `qubits[1]` the target.
    Cx,
    /// Two-qubit Givens rotation between `|01>` and `|10>` on the ordered
    /// support `[occupied, virtual]`; see [`single_exc_matrix`].
    SingleExc,
    /// Four-qubit Givens rotation between `|0101>` and `|1010>` on the
    /// ordered support `[b, j, a, i]`; see [`double_exc_matrix`].
    DoubleExc,
    /// `exp(-i angle/2 · P)` for the given Pauli string; the gate's support
    /// is the string's support in ascending qubit order.
    PauliRot(PauliString),
}

impl GateKind {
    /// Short lowercase mnemonic used in resource tables.
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::X => "x",
            GateKind::H => "h",
            GateKind::Sx => "sx",
            GateKind::Rz => "rz",
            GateKind::Ry => "ry",
            GateKind::Cx => "cx",
            GateKind::SingleExc => "single_exc",
            GateKind::DoubleExc => "double_exc",
            GateKind::PauliRot(_) => "pauli_rot",
        }
    }
}

/// One gate instance: a kind, an ordered qubit support, and an angle binding.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub param: GateParam,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>, param: GateParam) -> Self {
        Gate {
            kind,
            qubits,
            param,
        }
    }

    pub fn x(q: usize) -> Self {
        Gate::new(GateKind::X, vec![q], GateParam::None)
    }

    pub fn h(q: usize) -> Self {
        Gate::new(GateKind::H, vec![q], GateParam::None)
    }

    pub fn sx(q: usize) -> Self {
        Gate::new(GateKind::Sx, vec![q], GateParam::None)
    }

    pub fn rz(q: usize, param: GateParam) -> Self {
        Gate::new(GateKind::Rz, vec![q], param)
    }

    pub fn ry(q: usize, param: GateParam) -> Self {
        Gate::new(GateKind::Ry, vec![q], param)
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Gate::new(GateKind::Cx, vec![control, target], GateParam::None)
    }

    pub fn single_exc(occupied: usize, virtual_: usize, param: GateParam) -> Self {
        Gate::new(GateKind::SingleExc, vec![occupied, virtual_], param)
    }

    /// The four-qubit Givens rotation for the excitation `(i, j) -> (a, b)`.
    /// The support order `[b, j, a, i]` places the doubly occupied reference
    /// at the local state `|1010>` (see [`double_exc_matrix`]).
    pub fn double_exc(i: usize, j: usize, a: usize, b: usize, param: GateParam) -> Self {
        Gate::new(GateKind::DoubleExc, vec![b, j, a, i], param)
    }

    pub fn pauli_rot(string: PauliString, param: GateParam) -> Self {
        let qubits = string.axes().iter().map(|&(q, _)| q).collect();
        Gate::new(GateKind::PauliRot(string), qubits, param)
    }

    /// Bitmask of the qubits this gate touches.
    pub fn support_mask(&self) -> u64 {
        self.qubits.iter().fold(0u64, |m, &q| m | (1 << q))
    }

    /// Is this a prep/bookkeeping gate rather than an excitation-level gate?
    pub fn is_prep(&self) -> bool {
        matches!(self.kind, GateKind::X)
    }
}

/// Target gate alphabet for decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// `{Rz, Ry, H, X, CX}`.
    CxRy,
    /// `{Rz, Sx, X, CX}`.
    CxSx,
}

impl Basis {
    pub fn name(&self) -> &'static str {
        match self {
            Basis::CxRy => "cx_ry",
            Basis::CxSx => "cx_sx",
        }
    }
}

/// A layered quantum circuit with named parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    /// Layers in application order; within a layer, gate supports are
    /// pairwise disjoint.
    pub layers: Vec<Vec<Gate>>,
    /// Names of the variational parameters, indexed by `GateParam::Linear`.
    pub param_names: Vec<String>,
}

impl Circuit {
    pub fn new(n_qubits: usize, param_names: Vec<String>) -> Self {
        Circuit {
            n_qubits,
            layers: Vec::new(),
            param_names,
        }
    }

    pub fn n_params(&self) -> usize {
        self.param_names.len()
    }

    pub fn n_gates(&self) -> usize {
        self.layers.iter().map(|l| l.len()).sum()
    }

    /// All gates in application order.
    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.layers.iter().flatten()
    }

    /// Append a whole layer (caller guarantees disjoint supports).
    pub fn push_layer(&mut self, gates: Vec<Gate>) {
        debug_assert!(Self::supports_disjoint(&gates));
        self.layers.push(gates);
    }

    fn supports_disjoint(gates: &[Gate]) -> bool {
        let mut seen = 0u64;
        for g in gates {
            let m = g.support_mask();
            if seen & m != 0 {
                return false;
            }
            seen |= m;
        }
        true
    }

    /// Greedy first-fit placement: the gate joins the earliest layer at index
    /// `>= from_layer` whose existing supports are disjoint from its own,
    /// opening a new layer if none fits.
    pub fn place_first_fit(&mut self, gate: Gate, from_layer: usize) {
        let mask = gate.support_mask();
        for layer in self.layers.iter_mut().skip(from_layer) {
            let used: u64 = layer.iter().map(|g| g.support_mask()).fold(0, |a, b| a | b);
            if used & mask == 0 {
                layer.push(gate);
                return;
            }
        }
        self.layers.push(vec![gate]);
    }

    /// Order-preserving as-soon-as-possible schedule: each gate lands in the
    /// moment right after the latest previous gate touching any of its
    /// qubits.
    pub fn from_gates_asap(
        n_qubits: usize,
        param_names: Vec<String>,
        gates: impl IntoIterator<Item = Gate>,
    ) -> Circuit {
        let mut circ = Circuit::new(n_qubits, param_names);
        let mut next_free = vec![0usize; n_qubits];
        for gate in gates {
            let layer = gate.qubits.iter().map(|&q| next_free[q]).max().unwrap_or(0);
            if layer == circ.layers.len() {
                circ.layers.push(Vec::new());
            }
            for &q in &gate.qubits {
                next_free[q] = layer + 1;
            }
            circ.layers[layer].push(gate);
        }
        circ
    }

    /// Check the layer invariant (disjoint supports, in-range qubits).
    pub fn validate(&self) -> bool {
        self.layers.iter().all(|layer| {
            Self::supports_disjoint(layer)
                && layer
                    .iter()
                    .all(|g| g.qubits.iter().all(|&q| q < self.n_qubits))
        })
    }

    /// Number of layers containing at least one non-prep gate (the state
    /// preparation X layer is excluded from excitation-level depth).
    pub fn depth_excitation(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| l.iter().any(|g| !g.is_prep()))
            .count()
    }
}

/// The two-qubit Givens rotation matrix on the ordered support
/// `[occupied, virtual]`, row-major over local states `|00>..|11>`
/// (little-endian: `|01>` means the occupied qubit is set):
///
/// * `U|01> = cos θ |01> - sin θ |10>`
/// * `U|10> = sin θ |01> + cos θ |10>`
/// * `|00>` and `|11>` are left unchanged.
pub fn single_exc_matrix(theta: f64) -> Vec<Complex64> {
    let (c, s) = (theta.cos(), theta.sin());
    let mut m = vec![Complex64::new(0.0, 0.0); 16];
    let mut put = |row: usize, col: usize, v: f64| m[row * 4 + col] = Complex64::new(v, 0.0);
    put(0, 0, 1.0);
    put(1, 1, c);
    put(1, 2, s);
    put(2, 1, -s);
    put(2, 2, c);
    put(3, 3, 1.0);
    m
}

/// The four-qubit Givens rotation between the paired double-excitation
/// states, identity on the other 14 basis states, row-major over local
/// states `|0000>..|1111>`:
///
/// * `U|0101> = cos θ |0101> + sin θ |1010>`
/// * `U|1010> = cos θ |1010> - sin θ |0101>`
///
/// Local labels are little-endian over the gate's ordered support
/// `[q_b, q_j, q_a, q_i]` for the excitation `(i, j) -> (a, b)` (written
/// most-significant bit first, so `|1010>` has `q_i` and `q_j` set). With
/// that support order the doubly occupied reference determinant sits at
/// `|1010>` and rotates with `-sin θ` toward the excited configuration,
/// matching the sign convention of [`single_exc_matrix`].
pub fn double_exc_matrix(theta: f64) -> Vec<Complex64> {
    let (c, s) = (theta.cos(), theta.sin());
    let mut m = vec![Complex64::new(0.0, 0.0); 256];
    for k in 0..16 {
        m[k * 16 + k] = Complex64::new(1.0, 0.0);
    }
    m[5 * 16 + 5] = Complex64::new(c, 0.0);
    m[5 * 16 + 10] = Complex64::new(-s, 0.0);
    m[10 * 16 + 5] = Complex64::new(s, 0.0);
    m[10 * 16 + 10] = Complex64::new(c, 0.0);
    m
}

/// Dense local matrix of a gate kind at a resolved angle, row-major,
/// dimension `2^k` for a `k`-qubit gate.
pub fn kind_matrix(kind: &GateKind, angle: f64) -> Vec<Complex64> {
    let c0 = Complex64::new(0.0, 0.0);
    match kind {
        GateKind::X => vec![c0, Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), c0],
        GateKind::H => {
            let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            vec![h, h, h, -h]
        }
        GateKind::Sx => {
            let p = Complex64::new(0.5, 0.5);
            let m = Complex64::new(0.5, -0.5);
            vec![p, m, m, p]
        }
        GateKind::Rz => {
            let e = Complex64::from_polar(1.0, -angle / 2.0);
            vec![e, c0, c0, e.conj()]
        }
        GateKind::Ry => {
            let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
            vec![
                Complex64::new(c, 0.0),
                Complex64::new(-s, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(c, 0.0),
            ]
        }
        GateKind::Cx => {
            // Support order [control, target]: local bit 0 is the control.
            let one = Complex64::new(1.0, 0.0);
            let mut m = vec![c0; 16];
            // Columns with the control bit set flip the target bit.
            for (row, col) in [(0, 0), (3, 1), (2, 2), (1, 3)] {
                m[row * 4 + col] = one;
            }
            m
        }
        GateKind::SingleExc => single_exc_matrix(angle),
        GateKind::DoubleExc => double_exc_matrix(angle),
        GateKind::PauliRot(string) => {
            // exp(-i angle/2 P) = cos(angle/2) I - i sin(angle/2) P, with P
            // compressed onto the support in ascending qubit order.
            let axes = string.axes();
            let k = axes.len();
            let dim = 1usize << k;
            let local = {
                let mut s = PauliString::identity();
                for (t, &(_, axis)) in axes.iter().enumerate() {
                    let single = PauliString::single(axis, t);
                    s.x |= single.x;
                    s.z |= single.z;
                }
                s
            };
            let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
            let mi_sin = Complex64::new(0.0, -s);
            let mut m = vec![c0; dim * dim];
            for col in 0..dim as u64 {
                m[col as usize * dim + col as usize] += Complex64::new(c, 0.0);
                let row = col ^ local.x;
                m[row as usize * dim + col as usize] += mi_sin * local.phase_on_basis_state(col);
            }
            m
        }
    }
}

/// Expand one gate into the `{Rz, Ry, H, X, CX}` alphabet, in application
/// order. Equality is exact (no global phase) for every kind except `Sx`,
/// which is reproduced up to a global phase.
fn decompose_to_cx_ry(gate: &Gate) -> Vec<Gate> {
    match &gate.kind {
        GateKind::X | GateKind::H | GateKind::Rz | GateKind::Ry | GateKind::Cx => {
            vec![gate.clone()]
        }
        GateKind::Sx => {
            // Sx = e^{iπ/4} Rx(π/2) and Rx = H Rz H.
            let q = gate.qubits[0];
            vec![
                Gate::h(q),
                Gate::rz(q, GateParam::Fixed(PI / 2.0)),
                Gate::h(q),
            ]
        }
        GateKind::SingleExc => {
            // Compress the rotation onto the virtual qubit with a CX
            // conjugation, then apply a controlled Ry(-2θ) written as the
            // standard two-CX alternating-rotation form. Exact (phase-free).
            let (i, a) = (gate.qubits[0], gate.qubits[1]);
            let p = &gate.param;
            vec![
                Gate::cx(a, i),
                Gate::cx(i, a),
                Gate::ry(a, p.scaled(1.0, 0.0)),
                Gate::cx(i, a),
                Gate::ry(a, p.scaled(-1.0, 0.0)),
                Gate::cx(a, i),
            ]
        }
        GateKind::DoubleExc => {
            // Map the two paired determinants onto a single qubit (a) with a
            // three-CX ladder, then rotate `a` by -2θ controlled on the
            // pattern i=1, j=1, b=0 (negative control via an X wrap) using a
            // Gray-code multiplexed-Ry, and undo the ladder: 14 CX total.
            let (b, j, a, i) = (
                gate.qubits[0],
                gate.qubits[1],
                gate.qubits[2],
                gate.qubits[3],
            );
            let mut out = vec![Gate::cx(a, i), Gate::cx(b, j), Gate::cx(a, b), Gate::x(b)];
            out.extend(multiplexed_multicontrol_ry(
                &[i, j, b],
                a,
                &gate.param,
                -2.0,
            ));
            out.extend([Gate::x(b), Gate::cx(a, b), Gate::cx(b, j), Gate::cx(a, i)]);
            out
        }
        GateKind::PauliRot(string) => pauli_rotation_circuit(string, gate.param),
    }
}

/// Gray-code multiplexed rotation implementing a multi-controlled
/// `Ry(angle_scale * θ)` on `target` (all controls positive), as `2^m`
/// alternating `Ry`/`CX` pairs. The per-segment angles are
/// `±(angle_scale·θ)/2^m` with signs `(-1)^{popcount(gray(k-1))}`; Walsh
/// orthogonality makes every control pattern except all-ones rotate by zero.
fn multiplexed_multicontrol_ry(
    controls: &[usize],
    target: usize,
    param: &GateParam,
    angle_scale: f64,
) -> Vec<Gate> {
    let m = controls.len();
    assert!(m >= 1);
    let segments = 1usize << m;
    let mut out = Vec::with_capacity(2 * segments);
    for k in 1..=segments {
        let gray_prev = (k - 1) ^ ((k - 1) >> 1);
        let sign = if (gray_prev as u32).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        let factor = sign * angle_scale / segments as f64;
        out.push(Gate::ry(target, param.scaled(factor, 0.0)));
        let ctrl_bit = if k == segments {
            m - 1
        } else {
            k.trailing_zeros() as usize
        };
        out.push(Gate::cx(controls[ctrl_bit], target));
    }
    out
}

/// The standard ladder circuit for `exp(-i angle/2 · P)` in the
/// `{Rz, Ry, H, X, CX}` alphabet, in application order: per-qubit basis
/// changes into Z, a CX parity chain onto the last support qubit, the `Rz`
/// core rotation, and the mirrored chain and basis changes. Uses exactly
/// `2 (w - 1)` CX gates for a weight-`w` string. The identity string yields
/// an empty circuit (a global phase).
pub fn pauli_rotation_circuit(string: &PauliString, param: GateParam) -> Vec<Gate> {
    let axes = string.axes();
    if axes.is_empty() {
        return Vec::new();
    }
    let mut gates = Vec::new();
    // Basis changes: X -> H; Y -> S† then H (so that V P V† = Z).
    for &(q, axis) in &axes {
        match axis {
            PauliAxis::X => gates.push(Gate::h(q)),
            PauliAxis::Y => {
                gates.push(Gate::rz(q, GateParam::Fixed(-PI / 2.0)));
                gates.push(Gate::h(q));
            }
            PauliAxis::Z => {}
        }
    }
    let qubits: Vec<usize> = axes.iter().map(|&(q, _)| q).collect();
    for w in qubits.windows(2) {
        gates.push(Gate::cx(w[0], w[1]));
    }
    gates.push(Gate::rz(*qubits.last().unwrap(), param));
    for w in qubits.windows(2).rev() {
        gates.push(Gate::cx(w[0], w[1]));
    }
    for &(q, axis) in axes.iter().rev() {
        match axis {
            PauliAxis::X => gates.push(Gate::h(q)),
            PauliAxis::Y => {
                gates.push(Gate::h(q));
                gates.push(Gate::rz(q, GateParam::Fixed(PI / 2.0)));
            }
            PauliAxis::Z => {}
        }
    }
    gates
}

/// Rewrite a `{Rz, Ry, H, X, CX}` gate into `{Rz, Sx, X, CX}`, in
/// application order, up to a global phase. Rotation angles remain linear in
/// the circuit parameters.
fn rewrite_to_cx_sx(gate: &Gate) -> Vec<Gate> {
    match gate.kind {
        GateKind::Rz | GateKind::X | GateKind::Cx | GateKind::Sx => vec![gate.clone()],
        GateKind::Ry => {
            // Ry(θ) ≃ Rz(π) · Sx · Rz(θ + π) · Sx (global phase -i).
            let q = gate.qubits[0];
            vec![
                Gate::sx(q),
                Gate::rz(q, gate.param.scaled(1.0, PI)),
                Gate::sx(q),
                Gate::rz(q, GateParam::Fixed(PI)),
            ]
        }
        GateKind::H => {
            // H ≃ Rz(π/2) · Sx · Rz(π/2) (global phase e^{-iπ/4}).
            let q = gate.qubits[0];
            vec![
                Gate::rz(q, GateParam::Fixed(PI / 2.0)),
                Gate::sx(q),
                Gate::rz(q, GateParam::Fixed(PI / 2.0)),
            ]
        }
        _ => unreachable!("first-stage decomposition only emits basis gates"),
    }
}

/// Decompose every high-level gate into the target basis and re-schedule the
/// result into ASAP moments. The output circuit is equivalent to the input
/// up to a global phase, with identical parameter names and bindings kept
/// linear in those parameters.
pub fn decompose(circuit: &Circuit, basis: Basis) -> Circuit {
    let mut gates = Vec::new();
    for gate in circuit.gates() {
        for g in decompose_to_cx_ry(gate) {
            match basis {
                Basis::CxRy => gates.push(g),
                Basis::CxSx => gates.extend(rewrite_to_cx_sx(&g)),
            }
        }
    }
    Circuit::from_gates_asap(circuit.n_qubits, circuit.param_names.clone(), gates)
}

/// Gate and depth accounting for a circuit lowered to a target basis, on
/// all-to-all connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceReport {
    pub n_qubits: usize,
    pub n_params: usize,
    /// Two-qubit Givens rotations in the high-level circuit.
    pub n_single_exc: usize,
    /// Four-qubit Givens rotations in the high-level circuit.
    pub n_double_exc: usize,
    /// Pauli-rotation gates in the high-level circuit.
    pub n_pauli_rot: usize,
    /// Layers containing excitation-level gates (state-prep X layer excluded).
    pub depth_excitation: usize,
    /// Target basis of the lowered counts below.
    pub basis: Basis,
    /// Assumed qubit connectivity (always all-to-all here).
    pub connectivity: &'static str,
    /// Total basis-gate count.
    pub n_gates_basis: usize,
    /// CX count in the lowered circuit.
    pub n_two_qubit: usize,
    /// Single-qubit basis-gate count.
    pub n_single_qubit: usize,
    /// ASAP moment depth of the lowered circuit (prep layer included).
    pub depth_basis: usize,
    /// Per-kind gate counts in the lowered circuit.
    pub gate_counts: BTreeMap<&'static str, usize>,
}

/// Count gates and depths for `circuit` lowered to `basis`.
pub fn resource_report(circuit: &Circuit, basis: Basis) -> ResourceReport {
    let mut n_single_exc = 0;
    let mut n_double_exc = 0;
    let mut n_pauli_rot = 0;
    for g in circuit.gates() {
        match g.kind {
            GateKind::SingleExc => n_single_exc += 1,
            GateKind::DoubleExc => n_double_exc += 1,
            GateKind::PauliRot(_) => n_pauli_rot += 1,
            _ => {}
        }
    }
    let lowered = decompose(circuit, basis);
    let mut gate_counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut n_two_qubit = 0;
    let mut n_single_qubit = 0;
    for g in lowered.gates() {
        *gate_counts.entry(g.kind.name()).or_insert(0) += 1;
        if matches!(g.kind, GateKind::Cx) {
            n_two_qubit += 1;
        } else {
            n_single_qubit += 1;
        }
    }
    ResourceReport {
        n_qubits: circuit.n_qubits,
        n_params: circuit.n_params(),
        n_single_exc,
        n_double_exc,
        n_pauli_rot,
        depth_excitation: circuit.depth_excitation(),
        basis,
        connectivity: "all-to-all",
        n_gates_basis: lowered.n_gates(),
        n_two_qubit,
        n_single_qubit,
        depth_basis: lowered.layers.len(),
        gate_counts,
    }
}
