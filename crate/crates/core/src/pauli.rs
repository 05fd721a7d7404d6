//! Pauli-string algebra, core folding, and the Jordan-Wigner fermion map.
//!
//! A [`PauliString`] is a tensor product of single-qubit Pauli operators,
//! stored as a pair of bitmasks `(x, z)`: qubit `q` carries `X` when only
//! `x` has bit `q`, `Z` when only `z` does, `Y` when both do, and identity
//! otherwise. Products, commutation checks, and state application all reduce
//! to mask arithmetic. A [`PauliSum`] is a complex-weighted sum of strings,
//! kept in a sorted map so iteration order (and thus serialization and
//! measurement grouping) is deterministic.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::fcidump::FcidumpData;

/// Coefficients with magnitude below this are dropped during simplification.
pub const COEFF_CUTOFF: f64 = 1e-14;

const I_POWERS: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

/// Single-qubit Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

/// A tensor product of single-qubit Paulis over up to 64 qubits.
///
/// The derived ordering (lexicographic in `(z, x)`) fixes a deterministic
/// term order for sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    /// Bit `q` set when qubit `q` carries `X` or `Y`.
    pub z: u64,
    /// Bit `q` set when qubit `q` carries `Z` or `Y`.
    pub x: u64,
}

impl PauliString {
    /// The identity string.
    pub fn identity() -> Self {
        PauliString { x: 0, z: 0 }
    }

    /// A single Pauli on one qubit.
    pub fn single(axis: PauliAxis, qubit: usize) -> Self {
        let bit = 1u64 << qubit;
        match axis {
            PauliAxis::X => PauliString { x: bit, z: 0 },
            PauliAxis::Y => PauliString { x: bit, z: bit },
            PauliAxis::Z => PauliString { x: 0, z: bit },
        }
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Mask of qubits acted on non-trivially.
    pub fn support_mask(&self) -> u64 {
        self.x | self.z
    }

    /// Number of non-identity tensor factors.
    pub fn weight(&self) -> u32 {
        self.support_mask().count_ones()
    }

    /// The axis on `qubit`, or `None` for identity.
    pub fn axis(&self, qubit: usize) -> Option<PauliAxis> {
        let x = (self.x >> qubit) & 1 != 0;
        let z = (self.z >> qubit) & 1 != 0;
        match (x, z) {
            (false, false) => None,
            (true, false) => Some(PauliAxis::X),
            (true, true) => Some(PauliAxis::Y),
            (false, true) => Some(PauliAxis::Z),
        }
    }

    /// Non-identity factors as `(qubit, axis)` in ascending qubit order.
    pub fn axes(&self) -> Vec<(usize, PauliAxis)> {
        let mut out = Vec::with_capacity(self.weight() as usize);
        let mut mask = self.support_mask();
        while mask != 0 {
            let q = mask.trailing_zeros() as usize;
            out.push((q, self.axis(q).unwrap()));
            mask &= mask - 1;
        }
        out
    }

    /// Operator product `self * other` as `(phase, string)` with
    /// `phase ∈ {1, i, -1, -i}`.
    pub fn mul(&self, other: &PauliString) -> (Complex64, PauliString) {
        let result = PauliString {
            x: self.x ^ other.x,
            z: self.z ^ other.z,
        };
        // Accumulate the i-power per qubit: products follow the cyclic rule
        // XY = iZ, YZ = iX, ZX = iY (and 3 mod 4 for the reversed order).
        let mut power = 0u32;
        let mut mask = (self.support_mask()) & (other.support_mask());
        while mask != 0 {
            let q = mask.trailing_zeros() as usize;
            let a = ((self.x >> q) & 1) | (((self.z >> q) & 1) << 1);
            let b = ((other.x >> q) & 1) | (((other.z >> q) & 1) << 1);
            if a != b {
                // Cyclic (X=1, Z=2, Y=3): X*Y, Y*Z, Z*X give +i.
                let plus_i = matches!((a, b), (1, 3) | (3, 2) | (2, 1));
                power += if plus_i { 1 } else { 3 };
            }
            mask &= mask - 1;
        }
        (I_POWERS[(power % 4) as usize], result)
    }

    /// Do the two strings commute as operators?
    pub fn commutes(&self, other: &PauliString) -> bool {
        let anti = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        anti.is_multiple_of(2)
    }

    /// Qubit-wise commutation: on every shared qubit the factors are equal.
    pub fn qubit_wise_commutes(&self, other: &PauliString) -> bool {
        let shared = self.support_mask() & other.support_mask();
        let differs = (self.x ^ other.x) | (self.z ^ other.z);
        shared & differs == 0
    }

    /// `P|k> = phase(k) |k ^ x>`; this returns `phase(k)`.
    pub fn phase_on_basis_state(&self, k: u64) -> Complex64 {
        let ny = (self.x & self.z).count_ones();
        let sign_flips = (k & self.z).count_ones();
        I_POWERS[((ny + 2 * sign_flips) % 4) as usize]
    }

    /// Text label like `X0 Z2 Y5`, or `I` for the identity.
    pub fn label(&self) -> String {
        if self.is_identity() {
            return "I".to_string();
        }
        self.axes()
            .iter()
            .map(|(q, a)| format!("{:?}{}", a, q))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parse a label in the `label()` format.
    pub fn from_label(label: &str) -> Result<Self, PauliParseError> {
        let label = label.trim();
        if label == "I" || label.is_empty() {
            return Ok(PauliString::identity());
        }
        let mut out = PauliString::identity();
        for tok in label.split_whitespace() {
            let mut chars = tok.chars();
            let axis = match chars.next() {
                Some('X') | Some('x') => PauliAxis::X,
                Some('Y') | Some('y') => PauliAxis::Y,
                Some('Z') | Some('z') => PauliAxis::Z,
                other => {
                    return Err(PauliParseError::BadToken {
                        token: tok.to_string(),
                        reason: format!("unknown axis {:?}", other),
                    })
                }
            };
            let qubit: usize = chars
                .as_str()
                .parse()
                .map_err(|e| PauliParseError::BadToken {
                    token: tok.to_string(),
                    reason: format!("bad qubit index: {e}"),
                })?;
            if qubit >= 64 {
                return Err(PauliParseError::BadToken {
                    token: tok.to_string(),
                    reason: "qubit index must be < 64".to_string(),
                });
            }
            if out.axis(qubit).is_some() {
                return Err(PauliParseError::BadToken {
                    token: tok.to_string(),
                    reason: format!("qubit {qubit} listed twice"),
                });
            }
            let single = PauliString::single(axis, qubit);
            out.x |= single.x;
            out.z |= single.z;
        }
        Ok(out)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Error)]
pub enum PauliParseError {
    #[error("bad Pauli token {token:?}: {reason}")]
    BadToken { token: String, reason: String },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<PauliParseError>,
    },
    #[error("line {line}: could not parse coefficient {token:?}")]
    BadCoefficient { line: usize, token: String },
}

/// A complex-weighted sum of Pauli strings on a fixed qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    pub n_qubits: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    /// The identity operator scaled by `c`.
    pub fn scalar(n_qubits: usize, c: Complex64) -> Self {
        let mut s = PauliSum::zero(n_qubits);
        s.add_term(PauliString::identity(), c);
        s
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, string: &PauliString) -> Complex64 {
        self.terms
            .get(string)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Terms in deterministic (sorted) order.
    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    /// Add `c * string`, pruning the slot if it cancels below the cutoff.
    pub fn add_term(&mut self, string: PauliString, c: Complex64) {
        let entry = self.terms.entry(string).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if entry.norm() < COEFF_CUTOFF {
            self.terms.remove(&string);
        }
    }

    pub fn add_assign(&mut self, other: &PauliSum) {
        for (s, c) in other.terms() {
            self.add_term(*s, *c);
        }
    }

    pub fn scale(&mut self, c: Complex64) {
        for v in self.terms.values_mut() {
            *v *= c;
        }
        self.simplify();
    }

    /// Drop terms with negligible coefficients.
    pub fn simplify(&mut self) {
        self.terms.retain(|_, c| c.norm() >= COEFF_CUTOFF);
    }

    /// Operator product, with Pauli phases folded into the coefficients.
    pub fn mul(&self, other: &PauliSum) -> PauliSum {
        let mut out = PauliSum::zero(self.n_qubits.max(other.n_qubits));
        for (sa, ca) in self.terms() {
            for (sb, cb) in other.terms() {
                let (phase, s) = sa.mul(sb);
                out.add_term(s, ca * cb * phase);
            }
        }
        out
    }

    /// Largest coefficient magnitude (0 for the zero operator).
    pub fn max_coeff_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// One term per line: `coefficient  label`. Real coefficients print as a
    /// bare float; complex ones as `re+imi` (no spaces).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (s, c) in self.terms() {
            let coeff = if c.im == 0.0 {
                format!("{:e}", c.re)
            } else {
                format!("{:e}{:+e}i", c.re, c.im)
            };
            out.push_str(&coeff);
            out.push(' ');
            out.push_str(&s.label());
            out.push('\n');
        }
        out
    }

    /// Parse the `to_text` format. Blank lines and `#` comments are skipped.
    pub fn from_text(text: &str, n_qubits: usize) -> Result<PauliSum, PauliParseError> {
        let mut sum = PauliSum::zero(n_qubits);
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (coeff_tok, label) = line.split_once(char::is_whitespace).unwrap_or((line, "I"));
            let coeff =
                parse_complex(coeff_tok).ok_or_else(|| PauliParseError::BadCoefficient {
                    line: line_no,
                    token: coeff_tok.to_string(),
                })?;
            let string = PauliString::from_label(label).map_err(|e| PauliParseError::AtLine {
                line: line_no,
                source: Box::new(e),
            })?;
            sum.add_term(string, coeff);
        }
        Ok(sum)
    }

    /// Apply the operator to a dense statevector: `y = H x`.
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
        self.matvec_into(x, &mut y);
        y
    }

    /// `y += H x` accumulated in place (`y` must be zeroed by the caller if a
    /// plain product is wanted).
    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), y.len());
        assert_eq!(x.len(), 1usize << self.n_qubits);
        for (s, c) in self.terms() {
            let xm = s.x;
            for k in 0..x.len() as u64 {
                let amp = x[k as usize];
                if amp.re != 0.0 || amp.im != 0.0 {
                    y[(k ^ xm) as usize] += *c * s.phase_on_basis_state(k) * amp;
                }
            }
        }
    }

    /// Real expectation value `<x|H|x>` (imaginary part discarded; it is zero
    /// for Hermitian sums).
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (s, c) in self.terms() {
            let xm = s.x;
            let mut term = Complex64::new(0.0, 0.0);
            for k in 0..x.len() as u64 {
                let amp = x[k as usize];
                if amp.re != 0.0 || amp.im != 0.0 {
                    term += x[(k ^ xm) as usize].conj() * s.phase_on_basis_state(k) * amp;
                }
            }
            acc += *c * term;
        }
        acc.re
    }
}

fn parse_complex(tok: &str) -> Option<Complex64> {
    if let Some(body) = tok.strip_suffix('i') {
        // Split re and im at the last +/- that is not part of an exponent.
        let bytes = body.as_bytes();
        for pos in (1..bytes.len()).rev() {
            let c = bytes[pos] as char;
            if (c == '+' || c == '-') && !matches!(bytes[pos - 1] as char, 'e' | 'E') {
                let re = body[..pos].parse::<f64>().ok()?;
                let im = body[pos..].parse::<f64>().ok()?;
                return Some(Complex64::new(re, im));
            }
        }
        None
    } else {
        tok.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0))
    }
}

/// Choice of active orbitals and electron count for an embedded problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSpaceSpec {
    /// Electrons kept in the active space.
    pub n_electrons: usize,
    /// Spatial orbital indices (into the parent problem), ascending.
    pub orbitals: Vec<usize>,
    /// Twice the spin projection of the active electrons.
    pub ms2: i32,
}

impl ActiveSpaceSpec {
    pub fn new(n_electrons: usize, orbitals: Vec<usize>, ms2: i32) -> Self {
        ActiveSpaceSpec {
            n_electrons,
            orbitals,
            ms2,
        }
    }

    pub fn n_orbitals(&self) -> usize {
        self.orbitals.len()
    }

    pub fn n_alpha(&self) -> usize {
        (self.n_electrons as i32 + self.ms2) as usize / 2
    }

    pub fn n_beta(&self) -> usize {
        (self.n_electrons as i32 - self.ms2) as usize / 2
    }
}

#[derive(Debug, Error)]
pub enum FoldError {
    #[error("active space lists orbital {orbital} but the problem has only {norb} orbitals")]
    OrbitalOutOfRange { orbital: usize, norb: usize },
    #[error("active orbital list contains duplicates or is not ascending: {0:?}")]
    NotAscending(Vec<usize>),
    #[error(
        "active space keeps {kept} of {total} electrons, but the {n_excluded} \
         excluded occupied orbitals hold {excluded} electrons (core must be doubly occupied)"
    )]
    ElectronCountMismatch {
        kept: usize,
        total: usize,
        n_excluded: usize,
        excluded: usize,
    },
    #[error("singly occupied orbital {orbital} cannot be folded into the core")]
    OpenShellCore { orbital: usize },
    #[error("active-space ms2={spec} disagrees with the open-shell orbitals retained ({implied})")]
    SpinMismatch { spec: i32, implied: i32 },
}

/// Fold doubly occupied non-active orbitals into an effective core.
///
/// Orbitals outside `spec.orbitals` must be either doubly occupied in the
/// mean-field reference (they join the core: a scalar energy shift plus a
/// one-body correction) or empty (they are discarded). The result is a
/// self-contained integral set over the active orbitals, relabeled `0..n`:
///
/// * `e_core' = e_core + Σ_c 2 h[c,c] + Σ_{c,d} (2 (cc|dd) - (cd|dc))`,
/// * `h'[p,q] = h[p,q] + Σ_c (2 (pq|cc) - (pc|cq))`,
/// * `(pq|rs)' = (pq|rs)` restricted to active indices.
pub fn fold_core(data: &FcidumpData, spec: &ActiveSpaceSpec) -> Result<FcidumpData, FoldError> {
    let norb = data.norb;
    for w in spec.orbitals.windows(2) {
        if w[1] <= w[0] {
            return Err(FoldError::NotAscending(spec.orbitals.clone()));
        }
    }
    for &p in &spec.orbitals {
        if p >= norb {
            return Err(FoldError::OrbitalOutOfRange { orbital: p, norb });
        }
    }

    // Mean-field occupation of the parent problem.
    let na = data.n_alpha();
    let nb = data.n_beta();
    let mut core = Vec::new();
    let mut excluded_electrons = 0usize;
    for p in 0..norb {
        if spec.orbitals.contains(&p) {
            continue;
        }
        let occ = (p < na) as usize + (p < nb) as usize;
        if occ == 1 {
            return Err(FoldError::OpenShellCore { orbital: p });
        }
        if occ == 2 {
            core.push(p);
            excluded_electrons += 2;
        }
    }
    if spec.n_electrons + excluded_electrons != data.nelec {
        return Err(FoldError::ElectronCountMismatch {
            kept: spec.n_electrons,
            total: data.nelec,
            n_excluded: core.len(),
            excluded: excluded_electrons,
        });
    }
    // Open-shell orbitals all live in the active space, so ms2 carries over.
    if spec.ms2 != data.ms2 {
        return Err(FoldError::SpinMismatch {
            spec: spec.ms2,
            implied: data.ms2,
        });
    }

    let mut e_shift = 0.0;
    for &c in &core {
        e_shift += 2.0 * data.h1(c, c);
        for &d in &core {
            e_shift += 2.0 * data.g2(c, c, d, d) - data.g2(c, d, d, c);
        }
    }

    let n_act = spec.orbitals.len();
    let mut out = FcidumpData::new(n_act, spec.n_electrons, spec.ms2);
    out.e_core = data.e_core + e_shift;
    out.orbsym = data
        .orbsym
        .as_ref()
        .map(|sym| spec.orbitals.iter().map(|&p| sym[p]).collect());
    for (pi, &p) in spec.orbitals.iter().enumerate() {
        for (qi, &q) in spec.orbitals.iter().enumerate() {
            if qi > pi {
                continue;
            }
            let mut v = data.h1(p, q);
            for &c in &core {
                v += 2.0 * data.g2(p, q, c, c) - data.g2(p, c, c, q);
            }
            out.set_h1(pi, qi, v);
        }
    }
    for (pi, &p) in spec.orbitals.iter().enumerate() {
        for (qi, &q) in spec.orbitals.iter().enumerate().take(pi + 1) {
            for (ri, &r) in spec.orbitals.iter().enumerate().take(pi + 1) {
                let s_top = if ri == pi { qi } else { ri };
                for (si, &s) in spec.orbitals.iter().enumerate().take(s_top + 1) {
                    out.set_g2(pi, qi, ri, si, data.g2(p, q, r, s));
                }
            }
        }
    }
    Ok(out)
}

/// Jordan-Wigner image of the fermionic ladder operator on spin orbital
/// `q`: `a = Z_{<q} (X + iY)/2`, `a† = Z_{<q} (X - iY)/2`.
fn jw_ladder(n_qubits: usize, qubit: usize, dagger: bool) -> PauliSum {
    let zstring = (1u64 << qubit) - 1;
    let mut sum = PauliSum::zero(n_qubits);
    sum.add_term(
        PauliString {
            x: 1 << qubit,
            z: zstring,
        },
        Complex64::new(0.5, 0.0),
    );
    let im = if dagger { -0.5 } else { 0.5 };
    sum.add_term(
        PauliString {
            x: 1 << qubit,
            z: zstring | (1 << qubit),
        },
        Complex64::new(0.0, im),
    );
    sum
}

/// Qubit index of spin orbital `(p, spin)`: the `m` spin-up orbitals map to
/// qubits `0..m` and the spin-down orbitals to `m..2m`.
pub fn spin_orbital_qubit(n_spatial: usize, p: usize, spin: usize) -> usize {
    debug_assert!(spin < 2);
    p + spin * n_spatial
}

/// Jordan-Wigner image of a single excitation generator
/// `a†_target a_source - a†_source a_target` (anti-Hermitian; all
/// coefficients come out purely imaginary).
pub fn jw_single_generator(n_qubits: usize, source: usize, target: usize) -> PauliSum {
    let hop = jw_ladder(n_qubits, target, true).mul(&jw_ladder(n_qubits, source, false));
    let mut gen = hop.clone();
    let mut dag = jw_ladder(n_qubits, source, true).mul(&jw_ladder(n_qubits, target, false));
    dag.scale(Complex64::new(-1.0, 0.0));
    gen.add_assign(&dag);
    gen
}

/// Jordan-Wigner image of a double excitation generator
/// `a†_t1 a†_t2 a_s2 a_s1 - h.c.` (anti-Hermitian).
pub fn jw_double_generator(
    n_qubits: usize,
    sources: (usize, usize),
    targets: (usize, usize),
) -> PauliSum {
    let fwd = jw_ladder(n_qubits, targets.0, true)
        .mul(&jw_ladder(n_qubits, targets.1, true))
        .mul(&jw_ladder(n_qubits, sources.1, false))
        .mul(&jw_ladder(n_qubits, sources.0, false));
    let mut dag = jw_ladder(n_qubits, sources.0, true)
        .mul(&jw_ladder(n_qubits, sources.1, true))
        .mul(&jw_ladder(n_qubits, targets.1, false))
        .mul(&jw_ladder(n_qubits, targets.0, false));
    dag.scale(Complex64::new(-1.0, 0.0));
    let mut gen = fwd;
    gen.add_assign(&dag);
    gen
}

/// Map an integral set to a qubit Hamiltonian under the Jordan-Wigner
/// transformation:
///
/// `H = e_core + Σ_{pq,σ} h[p,q] a†_pσ a_qσ
///      + ½ Σ_{pqrs,στ} (pq|rs) a†_pσ a†_rτ a_sτ a_qσ`
///
/// with chemists'-notation integrals. The result acts on `2 * norb` qubits.
pub fn jw_map_hamiltonian(data: &FcidumpData) -> PauliSum {
    let m = data.norb;
    let n_qubits = 2 * m;
    let mut h = PauliSum::scalar(n_qubits, Complex64::new(data.e_core, 0.0));

    for p in 0..m {
        for q in 0..m {
            let v = data.h1(p, q);
            if v == 0.0 {
                continue;
            }
            for spin in 0..2 {
                let term = jw_ladder(n_qubits, spin_orbital_qubit(m, p, spin), true)
                    .mul(&jw_ladder(n_qubits, spin_orbital_qubit(m, q, spin), false));
                for (s, c) in term.terms() {
                    h.add_term(*s, *c * v);
                }
            }
        }
    }

    for p in 0..m {
        for q in 0..m {
            for r in 0..m {
                for s in 0..m {
                    let v = data.g2(p, q, r, s);
                    if v == 0.0 {
                        continue;
                    }
                    let half_v = Complex64::new(0.5 * v, 0.0);
                    for sigma in 0..2 {
                        for tau in 0..2 {
                            let qp = spin_orbital_qubit(m, p, sigma);
                            let qq = spin_orbital_qubit(m, q, sigma);
                            let qr = spin_orbital_qubit(m, r, tau);
                            let qs = spin_orbital_qubit(m, s, tau);
                            let term = jw_ladder(n_qubits, qp, true)
                                .mul(&jw_ladder(n_qubits, qr, true))
                                .mul(&jw_ladder(n_qubits, qs, false))
                                .mul(&jw_ladder(n_qubits, qq, false));
                            for (st, c) in term.terms() {
                                h.add_term(*st, *c * half_v);
                            }
                        }
                    }
                }
            }
        }
    }
    h.simplify();
    h
}
