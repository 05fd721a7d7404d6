//! Exact diagonalization in the Slater-determinant basis (the FCI/CASCI
//! reference oracle), CI amplitude extraction in intermediate normalization,
//! correlation-factor computation, and active-space candidate ranking.
//!
//! Determinants are carried as per-spin orbital-occupation bitmasks. The
//! phase convention fills spin orbitals ascending with the whole spin-up
//! block before the spin-down block, exactly mirroring the Jordan-Wigner
//! qubit ordering, so CI energies can be cross-checked against the qubit
//! Hamiltonian without any sign translation.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::fcidump::FcidumpData;
use crate::pauli::{fold_core, ActiveSpaceSpec, FoldError, PauliSum};

/// Hard cap on the determinant-space dimension accepted by the eigensolver.
pub const MAX_CI_DIMENSION: usize = 20_000;
/// Dense diagonalization is used up to this dimension, the iterative
/// subspace solver beyond it.
const DENSE_CUTOFF: usize = 2_000;
const DAVIDSON_TOL: f64 = 1e-9;
const DAVIDSON_MAX_ITER: usize = 500;
const DAVIDSON_MAX_BASIS: usize = 40;

#[derive(Debug, Error)]
pub enum CasciError {
    #[error("determinant space has dimension {dim}, above the supported {max}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("eigensolver did not converge within {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error(
        "the reference determinant carries negligible weight (|c0| = {c0:e}); \
         amplitude extraction assumes a single-reference state and \
         multi-reference cases are out of scope"
    )]
    VanishingReference { c0: f64 },
    #[error("active-space request is infeasible: {0}")]
    Infeasible(String),
    #[error("amplitude file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Fold(#[from] FoldError),
}

/// One Slater determinant: which spatial orbitals each spin occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Determinant {
    pub alpha_mask: u64,
    pub beta_mask: u64,
}

impl Determinant {
    /// Combined spin-orbital mask: spin-up on bits `0..m`, spin-down on
    /// `m..2m` (the Jordan-Wigner qubit layout).
    pub fn combined(&self, m: usize) -> u64 {
        self.alpha_mask | (self.beta_mask << m)
    }
}

/// Apply an annihilation operator on spin orbital `g` of a combined mask;
/// the sign is the parity of the occupied orbitals below `g`.
fn annihilate(mask: u64, g: usize) -> Option<(u64, f64)> {
    if (mask >> g) & 1 == 0 {
        return None;
    }
    let below = (mask & ((1u64 << g) - 1)).count_ones();
    let sign = if below & 1 == 1 { -1.0 } else { 1.0 };
    Some((mask & !(1u64 << g), sign))
}

fn create(mask: u64, g: usize) -> Option<(u64, f64)> {
    if (mask >> g) & 1 == 1 {
        return None;
    }
    let below = (mask & ((1u64 << g) - 1)).count_ones();
    let sign = if below & 1 == 1 { -1.0 } else { 1.0 };
    Some((mask | (1u64 << g), sign))
}

fn bits(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |&b| (mask >> b) & 1 == 1)
}

/// Slater-Condon matrix element `<d1|H|d2>` with chemists'-notation
/// integrals; zero unless the determinants differ in at most two spin
/// orbitals.
pub fn slater_condon(data: &FcidumpData, d1: &Determinant, d2: &Determinant) -> f64 {
    let m = data.norb;
    let da = d1.alpha_mask ^ d2.alpha_mask;
    let db = d1.beta_mask ^ d2.beta_mask;
    match (da.count_ones(), db.count_ones()) {
        (0, 0) => diagonal_element(data, d1),
        (2, 0) => single_element(data, d1, d1.alpha_mask & da, d2.alpha_mask & da, 0, m),
        (0, 2) => single_element(data, d1, d1.beta_mask & db, d2.beta_mask & db, 1, m),
        (4, 0) => double_same_spin(data, d1, da, d2.alpha_mask & da, 0, m),
        (0, 4) => double_same_spin(data, d1, db, d2.beta_mask & db, 1, m),
        (2, 2) => double_mixed_spin(data, d1, da, db, d2, m),
        _ => 0.0,
    }
}

fn diagonal_element(data: &FcidumpData, d: &Determinant) -> f64 {
    let occ: Vec<(usize, usize)> = bits(d.alpha_mask)
        .map(|p| (p, 0))
        .chain(bits(d.beta_mask).map(|p| (p, 1)))
        .collect();
    let mut e = 0.0;
    for &(p, _) in &occ {
        e += data.h1(p, p);
    }
    for &(p, sp) in &occ {
        for &(q, sq) in &occ {
            e += 0.5 * data.g2(p, p, q, q);
            if sp == sq {
                e -= 0.5 * data.g2(p, q, q, p);
            }
        }
    }
    e
}

/// `<d1|H|d1 with (spin sigma) p -> r>`.
fn single_element(
    data: &FcidumpData,
    d1: &Determinant,
    from_bit: u64,
    to_bit: u64,
    sigma: usize,
    m: usize,
) -> f64 {
    let p = from_bit.trailing_zeros() as usize;
    let r = to_bit.trailing_zeros() as usize;
    let mut value = data.h1(p, r);
    for (q, sq) in bits(d1.alpha_mask)
        .map(|q| (q, 0))
        .chain(bits(d1.beta_mask).map(|q| (q, 1)))
    {
        value += data.g2(p, r, q, q);
        if sq == sigma {
            value -= data.g2(p, q, q, r);
        }
    }
    let comb = d1.combined(m);
    let off = sigma * m;
    let (mask, s1) = annihilate(comb, p + off).expect("from orbital occupied");
    let (_, s2) = create(mask, r + off).expect("to orbital empty");
    s1 * s2 * value
}

/// `<d1|H|d2>` where both replaced spin orbitals share the spin `sigma`:
/// removed p < q, added r < s, element = sign * [(pr|qs) - (ps|qr)].
fn double_same_spin(
    data: &FcidumpData,
    d1: &Determinant,
    diff: u64,
    added: u64,
    sigma: usize,
    m: usize,
) -> f64 {
    let removed = diff & !added;
    let mut rem = bits(removed);
    let (p, q) = (rem.next().unwrap(), rem.next().unwrap());
    let mut add = bits(added);
    let (r, s) = (add.next().unwrap(), add.next().unwrap());
    let off = sigma * m;
    let comb = d1.combined(m);
    let (mask, s1) = annihilate(comb, p + off).unwrap();
    let (mask, s2) = annihilate(mask, q + off).unwrap();
    let (mask, s3) = create(mask, s + off).unwrap();
    let (_, s4) = create(mask, r + off).unwrap();
    s1 * s2 * s3 * s4 * (data.g2(p, r, q, s) - data.g2(p, s, q, r))
}

/// `<d1|H|d2>` with one spin-up replacement p -> r and one spin-down
/// replacement q -> s: element = sign * (pr|qs).
fn double_mixed_spin(
    data: &FcidumpData,
    d1: &Determinant,
    da: u64,
    db: u64,
    d2: &Determinant,
    m: usize,
) -> f64 {
    let p = (d1.alpha_mask & da).trailing_zeros() as usize;
    let r = (d2.alpha_mask & da).trailing_zeros() as usize;
    let q = (d1.beta_mask & db).trailing_zeros() as usize;
    let s = (d2.beta_mask & db).trailing_zeros() as usize;
    let comb = d1.combined(m);
    let (mask, s1) = annihilate(comb, p).unwrap();
    let (mask, s2) = annihilate(mask, q + m).unwrap();
    let (mask, s3) = create(mask, s + m).unwrap();
    let (_, s4) = create(mask, r).unwrap();
    s1 * s2 * s3 * s4 * data.g2(p, r, q, s)
}

/// Energy of a molecule's Hartree-Fock determinant (lowest orbitals filled
/// per spin) from the raw integrals, including the core constant.
pub fn hf_determinant_energy(data: &FcidumpData) -> f64 {
    let hf = Determinant {
        alpha_mask: (1u64 << data.n_alpha()) - 1,
        beta_mask: (1u64 << data.n_beta()) - 1,
    };
    data.e_core + diagonal_element(data, &hf)
}

fn strings_with_popcount(m: usize, n: usize) -> Vec<u64> {
    (0u64..(1u64 << m))
        .filter(|s| s.count_ones() as usize == n)
        .collect()
}

/// The lowest eigenpair of the electronic Hamiltonian in the fixed
/// `(n_alpha, n_beta)` determinant sector.
#[derive(Debug, Clone)]
pub struct CiWavefunction {
    pub n_orbitals: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    /// Total energy, including the integrals' core constant.
    pub energy: f64,
    pub alpha_strings: Vec<u64>,
    pub beta_strings: Vec<u64>,
    /// Normalized coefficients, indexed `alpha_index * n_beta_strings +
    /// beta_index`; the global phase makes the HF coefficient >= 0.
    pub coefficients: Vec<f64>,
}

impl CiWavefunction {
    pub fn dim(&self) -> usize {
        self.alpha_strings.len() * self.beta_strings.len()
    }

    pub fn determinant(&self, index: usize) -> Determinant {
        let nb = self.beta_strings.len();
        Determinant {
            alpha_mask: self.alpha_strings[index / nb],
            beta_mask: self.beta_strings[index % nb],
        }
    }

    pub fn hf_determinant(&self) -> Determinant {
        Determinant {
            alpha_mask: (1u64 << self.n_alpha) - 1,
            beta_mask: (1u64 << self.n_beta) - 1,
        }
    }

    pub fn coefficient(&self, det: &Determinant) -> Option<f64> {
        let ai = self.alpha_strings.binary_search(&det.alpha_mask).ok()?;
        let bi = self.beta_strings.binary_search(&det.beta_mask).ok()?;
        Some(self.coefficients[ai * self.beta_strings.len() + bi])
    }
}

struct SectorBasis<'a> {
    data: &'a FcidumpData,
    alpha_strings: Vec<u64>,
    beta_strings: Vec<u64>,
}

impl<'a> SectorBasis<'a> {
    fn new(data: &'a FcidumpData) -> Self {
        SectorBasis {
            data,
            alpha_strings: strings_with_popcount(data.norb, data.n_alpha()),
            beta_strings: strings_with_popcount(data.norb, data.n_beta()),
        }
    }

    fn dim(&self) -> usize {
        self.alpha_strings.len() * self.beta_strings.len()
    }

    fn determinant(&self, index: usize) -> Determinant {
        let nb = self.beta_strings.len();
        Determinant {
            alpha_mask: self.alpha_strings[index / nb],
            beta_mask: self.beta_strings[index % nb],
        }
    }

    fn index_of(&self, det: &Determinant) -> usize {
        let ai = self.alpha_strings.binary_search(&det.alpha_mask).unwrap();
        let bi = self.beta_strings.binary_search(&det.beta_mask).unwrap();
        ai * self.beta_strings.len() + bi
    }

    /// All determinants connected to `det` by one or two replacements,
    /// paired with their matrix elements.
    fn connections(&self, det: &Determinant) -> Vec<(usize, f64)> {
        let m = self.data.norb;
        let aocc: Vec<usize> = bits(det.alpha_mask).take_while(|&b| b < m).collect();
        let avir: Vec<usize> = (0..m).filter(|&b| (det.alpha_mask >> b) & 1 == 0).collect();
        let bocc: Vec<usize> = bits(det.beta_mask).take_while(|&b| b < m).collect();
        let bvir: Vec<usize> = (0..m).filter(|&b| (det.beta_mask >> b) & 1 == 0).collect();
        let mut out = Vec::new();
        let mut push = |other: Determinant| {
            let element = slater_condon(self.data, det, &other);
            if element != 0.0 {
                out.push((self.index_of(&other), element));
            }
        };
        // Spin-up singles and same-spin doubles.
        for (oi, &i) in aocc.iter().enumerate() {
            for (ai, &a) in avir.iter().enumerate() {
                let single = det.alpha_mask ^ (1 << i) ^ (1 << a);
                push(Determinant {
                    alpha_mask: single,
                    beta_mask: det.beta_mask,
                });
                for &j in &aocc[oi + 1..] {
                    for &b in &avir[ai + 1..] {
                        push(Determinant {
                            alpha_mask: single ^ (1 << j) ^ (1 << b),
                            beta_mask: det.beta_mask,
                        });
                    }
                }
            }
        }
        // Spin-down singles and same-spin doubles.
        for (oi, &i) in bocc.iter().enumerate() {
            for (ai, &a) in bvir.iter().enumerate() {
                let single = det.beta_mask ^ (1 << i) ^ (1 << a);
                push(Determinant {
                    alpha_mask: det.alpha_mask,
                    beta_mask: single,
                });
                for &j in &bocc[oi + 1..] {
                    for &b in &bvir[ai + 1..] {
                        push(Determinant {
                            alpha_mask: det.alpha_mask,
                            beta_mask: single ^ (1 << j) ^ (1 << b),
                        });
                    }
                }
            }
        }
        // Opposite-spin doubles.
        for &i in &aocc {
            for &a in &avir {
                let amask = det.alpha_mask ^ (1 << i) ^ (1 << a);
                for &j in &bocc {
                    for &b in &bvir {
                        push(Determinant {
                            alpha_mask: amask,
                            beta_mask: det.beta_mask ^ (1 << j) ^ (1 << b),
                        });
                    }
                }
            }
        }
        out
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.dim())
            .into_par_iter()
            .map(|i| diagonal_element(self.data, &self.determinant(i)))
            .collect()
    }

    fn matvec(&self, diag: &[f64], v: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .into_par_iter()
            .map(|i| {
                let det = self.determinant(i);
                let mut acc = diag[i] * v[i];
                for (j, element) in self.connections(&det) {
                    acc += element * v[j];
                }
                acc
            })
            .collect()
    }
}

/// Ground state of the given (already active-space) integrals by exact
/// diagonalization over all determinants with the integrals' electron and
/// spin counts: dense up to dimension 2000, Davidson-style subspace
/// iteration beyond.
pub fn ci_ground_state(data: &FcidumpData) -> Result<CiWavefunction, CasciError> {
    let basis = SectorBasis::new(data);
    let dim = basis.dim();
    if dim > MAX_CI_DIMENSION {
        return Err(CasciError::DimensionTooLarge {
            dim,
            max: MAX_CI_DIMENSION,
        });
    }
    let (electronic, mut coefficients) = if dim <= DENSE_CUTOFF {
        dense_lowest(&basis)
    } else {
        davidson_lowest(&basis)?
    };
    // Phase: the HF determinant (index 0: both lowest strings) non-negative.
    if coefficients[0] < 0.0 {
        for c in coefficients.iter_mut() {
            *c = -*c;
        }
    }
    Ok(CiWavefunction {
        n_orbitals: data.norb,
        n_alpha: data.n_alpha(),
        n_beta: data.n_beta(),
        energy: electronic + data.e_core,
        alpha_strings: basis.alpha_strings,
        beta_strings: basis.beta_strings,
        coefficients,
    })
}

fn dense_lowest(basis: &SectorBasis) -> (f64, Vec<f64>) {
    let dim = basis.dim();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        let det = basis.determinant(i);
        h[(i, i)] = diagonal_element(basis.data, &det);
        for (j, element) in basis.connections(&det) {
            h[(i, j)] = element;
        }
    }
    debug_assert!({
        let mut max_asym: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                max_asym = max_asym.max((h[(i, j)] - h[(j, i)]).abs());
            }
        }
        max_asym < 1e-12
    });
    let eig = h.symmetric_eigen();
    let (idx, &energy) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let mut vec: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
    let norm: f64 = vec.iter().map(|c| c * c).sum::<f64>().sqrt();
    for c in vec.iter_mut() {
        *c /= norm;
    }
    (energy, vec)
}

/// Normalize `v`, project out `basis`, and renormalize. Returns the norm
/// that survived the projection (1.0 = already orthogonal, ~0 = linearly
/// dependent); `v` is unit length afterwards unless dependent.
fn orthonormalize_against(v: &mut [f64], basis: &[Vec<f64>]) -> f64 {
    let scale: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return 0.0;
    }
    for x in v.iter_mut() {
        *x /= scale;
    }
    for _ in 0..2 {
        for b in basis {
            let overlap: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= overlap * y;
            }
        }
    }
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 1e-8 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

fn davidson_lowest(basis: &SectorBasis) -> Result<(f64, Vec<f64>), CasciError> {
    let dim = basis.dim();
    let diag = basis.diagonal();
    // Start on the determinant with the lowest diagonal energy.
    let start_idx = diag
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    let mut start = vec![0.0; dim];
    start[start_idx] = 1.0;

    let mut basis_vecs: Vec<Vec<f64>> = vec![start];
    let mut w_vecs: Vec<Vec<f64>> = vec![basis.matvec(&diag, &basis_vecs[0])];
    let mut last_residual = f64::INFINITY;

    for iteration in 0..DAVIDSON_MAX_ITER {
        let k = basis_vecs.len();
        let mut s = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                s[(i, j)] = basis_vecs[i]
                    .iter()
                    .zip(&w_vecs[j])
                    .map(|(x, y)| x * y)
                    .sum();
            }
        }
        // Symmetrize against round-off before diagonalizing.
        let s = (s.clone() + s.transpose()) * 0.5;
        let eig = s.symmetric_eigen();
        let (idx, &lambda) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let y = eig.eigenvectors.column(idx);
        let mut x = vec![0.0; dim];
        let mut hx = vec![0.0; dim];
        for (i, &yi) in y.iter().enumerate() {
            for d in 0..dim {
                x[d] += yi * basis_vecs[i][d];
                hx[d] += yi * w_vecs[i][d];
            }
        }
        let residual: Vec<f64> = hx.iter().zip(&x).map(|(h, x)| h - lambda * x).collect();
        let rnorm: f64 = residual.iter().map(|r| r * r).sum::<f64>().sqrt();
        last_residual = rnorm;
        if rnorm < DAVIDSON_TOL {
            let norm: f64 = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            for c in x.iter_mut() {
                *c /= norm;
            }
            return Ok((lambda, x));
        }
        if k >= DAVIDSON_MAX_BASIS {
            // Restart from the current best vector.
            let norm: f64 = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            let x: Vec<f64> = x.iter().map(|c| c / norm).collect();
            w_vecs = vec![basis.matvec(&diag, &x)];
            basis_vecs = vec![x];
            continue;
        }
        let mut correction: Vec<f64> = residual
            .iter()
            .zip(&diag)
            .map(|(r, d)| {
                let denom = lambda - d;
                let denom = if denom.abs() < 1e-8 {
                    1e-8_f64.copysign(denom + f64::MIN_POSITIVE)
                } else {
                    denom
                };
                r / denom
            })
            .collect();
        let mut norm = orthonormalize_against(&mut correction, &basis_vecs);
        if norm <= 1e-8 {
            // The preconditioned residual collapsed into the subspace; the
            // raw residual still carries the missing direction.
            correction.copy_from_slice(&residual);
            norm = orthonormalize_against(&mut correction, &basis_vecs);
        }
        if norm <= 1e-8 {
            return Err(CasciError::NonConvergence {
                iterations: iteration,
                residual: rnorm,
            });
        }
        w_vecs.push(basis.matvec(&diag, &correction));
        basis_vecs.push(correction);
    }
    Err(CasciError::NonConvergence {
        iterations: DAVIDSON_MAX_ITER,
        residual: last_residual,
    })
}

/// Fold the inactive core and diagonalize within the active space.
pub fn casci_ground_state(
    parent: &FcidumpData,
    spec: &ActiveSpaceSpec,
) -> Result<CiWavefunction, CasciError> {
    let folded = fold_core(parent, spec)?;
    ci_ground_state(&folded)
}

/// Minimum eigenvalue of a qubit Hamiltonian restricted to the fixed
/// particle sector (`n_alpha` excitations on qubits `0..m`, `n_beta` on
/// `m..2m`), via dense diagonalization of the sector block. This is the
/// independent cross-check oracle for [`ci_ground_state`].
pub fn jw_sector_min_eigenvalue(h: &PauliSum, m: usize, n_alpha: usize, n_beta: usize) -> f64 {
    assert_eq!(h.n_qubits, 2 * m);
    let full_dim = 1usize << (2 * m);
    let low = (1u64 << m) - 1;
    let sector: Vec<u64> = (0..full_dim as u64)
        .filter(|k| {
            (k & low).count_ones() as usize == n_alpha && (k >> m).count_ones() as usize == n_beta
        })
        .collect();
    let dim = sector.len();
    let mut block = DMatrix::<Complex64>::zeros(dim, dim);
    for (col, &kc) in sector.iter().enumerate() {
        let mut e = vec![Complex64::new(0.0, 0.0); full_dim];
        e[kc as usize] = Complex64::new(1.0, 0.0);
        let y = h.matvec(&e);
        for (row, &kr) in sector.iter().enumerate() {
            block[(row, col)] = y[kr as usize];
        }
    }
    let eig = block.symmetric_eigen();
    eig.eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Where a set of amplitudes came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplitudeSource {
    InternalCi,
    ExternalFile,
}

/// Spin patterns for double-excitation amplitudes.
pub const PATTERN_AA: u8 = 0;
pub const PATTERN_BB: u8 = 1;
pub const PATTERN_AB: u8 = 2;

/// Key of a single amplitude: `(spin, occupied, virtual)` spatial indices.
pub type SingleKey = (u8, usize, usize);
/// Key of a double amplitude: `(pattern, i, j, a, b)` spatial indices.
pub type DoubleKey = (u8, usize, usize, usize, usize);

/// Single and double excitation amplitudes in intermediate normalization,
/// keyed by spatial orbital indices of the parent space. Singles are keyed
/// `(spin, occupied, virtual)`; doubles `(pattern, i, j, a, b)` where
/// same-spin keys have `i < j`, `a < b`, and the mixed pattern pairs the
/// spin-up replacement `(i, a)` with the spin-down replacement `(j, b)`.
#[derive(Debug, Clone)]
pub struct AmplitudeSet {
    pub singles: BTreeMap<SingleKey, f64>,
    pub doubles: BTreeMap<DoubleKey, f64>,
    pub source: AmplitudeSource,
}

impl AmplitudeSet {
    pub fn empty(source: AmplitudeSource) -> Self {
        AmplitudeSet {
            singles: BTreeMap::new(),
            doubles: BTreeMap::new(),
            source,
        }
    }

    pub fn n_amplitudes(&self) -> usize {
        self.singles.len() + self.doubles.len()
    }

    /// Largest |t| over all amplitudes, with its double key if it is a
    /// double excitation.
    pub fn dominant(&self) -> Option<(f64, Option<DoubleKey>)> {
        let best_single = self
            .singles
            .values()
            .map(|t| t.abs())
            .fold(f64::NEG_INFINITY, f64::max);
        let best_double = self
            .doubles
            .iter()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())?;
        if best_single > best_double.1.abs() {
            Some((best_single, None))
        } else {
            Some((best_double.1.abs(), Some(*best_double.0)))
        }
    }
}

/// Extract all single and double excitation amplitudes `t = c_excited / c0`
/// relative to the HF determinant, with signs fixed by the ascending-fill
/// determinant phase convention.
pub fn extract_amplitudes(wf: &CiWavefunction) -> Result<AmplitudeSet, CasciError> {
    let hf = wf.hf_determinant();
    let c0 = wf.coefficient(&hf).unwrap_or(0.0);
    if c0.abs() <= 1e-6 {
        return Err(CasciError::VanishingReference { c0: c0.abs() });
    }
    let m = wf.n_orbitals;
    let occ = [wf.n_alpha, wf.n_beta];
    let mut set = AmplitudeSet::empty(AmplitudeSource::InternalCi);
    let hf_comb = hf.combined(m);

    let det_from_comb = |comb: u64| Determinant {
        alpha_mask: comb & ((1 << m) - 1),
        beta_mask: comb >> m,
    };
    // t * gamma = c(det), with gamma the phase of the ordered operator
    // string applied to HF.
    let amplitude = |ops: &[(usize, bool)]| -> f64 {
        let mut mask = hf_comb;
        let mut gamma = 1.0;
        for &(g, is_create) in ops {
            let step = if is_create {
                create(mask, g)
            } else {
                annihilate(mask, g)
            };
            let (next, sign) = step.expect("excitation moves occupied to empty");
            mask = next;
            gamma *= sign;
        }
        let c = wf.coefficient(&det_from_comb(mask)).unwrap_or(0.0);
        gamma * c / c0
    };

    for (spin, &n_occ) in occ.iter().enumerate() {
        let off = spin * m;
        for i in 0..n_occ {
            for a in n_occ..m {
                let t = amplitude(&[(i + off, false), (a + off, true)]);
                set.singles.insert((spin as u8, i, a), t);
            }
        }
        // Same-spin doubles: a+_a a+_b a_j a_i with i < j, a < b.
        let pattern = if spin == 0 { PATTERN_AA } else { PATTERN_BB };
        for i in 0..n_occ {
            for j in (i + 1)..n_occ {
                for a in n_occ..m {
                    for b in (a + 1)..m {
                        let t = amplitude(&[
                            (i + off, false),
                            (j + off, false),
                            (b + off, true),
                            (a + off, true),
                        ]);
                        set.doubles.insert((pattern, i, j, a, b), t);
                    }
                }
            }
        }
    }
    // Mixed-spin doubles: spin-up (i -> a) with spin-down (j -> b).
    for i in 0..occ[0] {
        for j in 0..occ[1] {
            for a in occ[0]..m {
                for b in occ[1]..m {
                    let t = amplitude(&[(i, false), (j + m, false), (b + m, true), (a, true)]);
                    set.doubles.insert((PATTERN_AB, i, j, a, b), t);
                }
            }
        }
    }
    Ok(set)
}

/// Correlation factor of a candidate orbital set: the sum of squared
/// amplitudes over exactly those excitations whose occupied and virtual
/// orbitals all lie inside the candidate.
pub fn correlation_factor(amps: &AmplitudeSet, orbitals: &[usize]) -> f64 {
    let inside = |p: usize| orbitals.contains(&p);
    let mut eps = 0.0;
    for (&(_, i, a), &t) in &amps.singles {
        if inside(i) && inside(a) {
            eps += t * t;
        }
    }
    for (&(_, i, j, a, b), &t) in &amps.doubles {
        if inside(i) && inside(j) && inside(a) && inside(b) {
            eps += t * t;
        }
    }
    eps
}

/// Parse an amplitude CSV: `kind,i,a,t` for singles, `kind,i,j,a,b,t` for
/// doubles, with 0-based spatial orbital indices. Kinds `sa`/`sb` are
/// spin-resolved singles, `s` duplicates one value to both spins;
/// `daa`/`dbb`/`dab` are spin-resolved doubles and `d` is shorthand for the
/// mixed pattern. Blank lines and `#` comments are skipped.
pub fn ingest_amplitudes(text: &str) -> Result<AmplitudeSet, CasciError> {
    let mut set = AmplitudeSet::empty(AmplitudeSource::ExternalFile);
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let parse_usize = |s: &str| -> Result<usize, CasciError> {
            s.parse().map_err(|_| CasciError::Parse {
                line,
                message: format!("bad orbital index {s:?}"),
            })
        };
        let parse_f64 = |s: &str| -> Result<f64, CasciError> {
            s.parse().map_err(|_| CasciError::Parse {
                line,
                message: format!("bad amplitude {s:?}"),
            })
        };
        let kind = fields[0];
        match kind {
            "s" | "sa" | "sb" => {
                if fields.len() != 4 {
                    return Err(CasciError::Parse {
                        line,
                        message: format!("singles take 4 fields, got {}", fields.len()),
                    });
                }
                let (i, a) = (parse_usize(fields[1])?, parse_usize(fields[2])?);
                let t = parse_f64(fields[3])?;
                match kind {
                    "sa" => {
                        set.singles.insert((0, i, a), t);
                    }
                    "sb" => {
                        set.singles.insert((1, i, a), t);
                    }
                    _ => {
                        set.singles.insert((0, i, a), t);
                        set.singles.insert((1, i, a), t);
                    }
                }
            }
            "d" | "daa" | "dbb" | "dab" => {
                if fields.len() != 6 {
                    return Err(CasciError::Parse {
                        line,
                        message: format!("doubles take 6 fields, got {}", fields.len()),
                    });
                }
                let (i, j) = (parse_usize(fields[1])?, parse_usize(fields[2])?);
                let (a, b) = (parse_usize(fields[3])?, parse_usize(fields[4])?);
                let t = parse_f64(fields[5])?;
                let pattern = match kind {
                    "daa" => PATTERN_AA,
                    "dbb" => PATTERN_BB,
                    _ => PATTERN_AB,
                };
                set.doubles.insert((pattern, i, j, a, b), t);
            }
            _ => {
                return Err(CasciError::Parse {
                    line,
                    message: format!("unknown amplitude kind {kind:?}"),
                });
            }
        }
    }
    Ok(set)
}

/// A candidate active space with its ranking metric and optional oracle
/// energies.
#[derive(Debug, Clone)]
pub struct AsCandidate {
    /// Sorted spatial orbitals of the candidate.
    pub orbitals: Vec<usize>,
    /// Correlation factor (sum of squared internal amplitudes).
    pub epsilon: f64,
    /// Active-space ground energy (Hartree), when requested.
    pub e_tot: Option<f64>,
    /// Correlation energy vs the parent HF determinant (milli-Hartree).
    pub e_corr_mha: Option<f64>,
}

/// All candidate orbital sets for `(n_active_electrons, n_active_orbitals)`:
/// closed-shell candidates hold `n/2` HF-occupied orbitals plus virtuals;
/// open-shell candidates force the singly occupied orbitals active and split
/// the rest between doubly occupied and virtual orbitals.
pub fn enumerate_active_spaces(
    data: &FcidumpData,
    n_active_electrons: usize,
    n_active_orbitals: usize,
) -> Result<Vec<Vec<usize>>, CasciError> {
    if n_active_electrons > 2 * n_active_orbitals {
        return Err(CasciError::Infeasible(format!(
            "{n_active_electrons} electrons cannot occupy {n_active_orbitals} orbitals"
        )));
    }
    if n_active_orbitals > data.norb {
        return Err(CasciError::Infeasible(format!(
            "{n_active_orbitals} active orbitals requested from {}",
            data.norb
        )));
    }
    let n_alpha = data.n_alpha();
    let n_beta = data.n_beta();
    let socc: Vec<usize> = (n_beta..n_alpha).collect();
    let docc: Vec<usize> = (0..n_beta).collect();
    let virt: Vec<usize> = (n_alpha..data.norb).collect();
    if n_active_electrons < socc.len() || !(n_active_electrons - socc.len()).is_multiple_of(2) {
        return Err(CasciError::Infeasible(format!(
            "{} singly occupied orbitals cannot combine with {} active electrons",
            socc.len(),
            n_active_electrons
        )));
    }
    let n_docc_active = (n_active_electrons - socc.len()) / 2;
    if n_active_orbitals < socc.len() + n_docc_active {
        return Err(CasciError::Infeasible(format!(
            "{n_active_orbitals} orbitals cannot hold {n_docc_active} doubly and {} singly occupied orbitals",
            socc.len()
        )));
    }
    let n_virt_active = n_active_orbitals - socc.len() - n_docc_active;
    if n_docc_active > docc.len() || n_virt_active > virt.len() {
        return Err(CasciError::Infeasible(format!(
            "need {n_docc_active} doubly occupied and {n_virt_active} virtual orbitals, \
             have {} and {}",
            docc.len(),
            virt.len()
        )));
    }
    let mut out = Vec::new();
    for docc_choice in combinations(&docc, n_docc_active) {
        for virt_choice in combinations(&virt, n_virt_active) {
            let mut orbitals = docc_choice.clone();
            orbitals.extend_from_slice(&socc);
            orbitals.extend_from_slice(&virt_choice);
            orbitals.sort_unstable();
            out.push(orbitals);
        }
    }
    Ok(out)
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if k > items.len() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        for mut rest in combinations(&items[i + 1..], k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Rank all candidate active spaces by correlation factor (descending; ties
/// broken by lexicographic orbital order). When `attach_energies` is set,
/// each candidate also gets its exact active-space energy and correlation
/// energy versus the parent HF determinant.
pub fn rank_active_spaces(
    data: &FcidumpData,
    n_active_electrons: usize,
    n_active_orbitals: usize,
    amps: &AmplitudeSet,
    attach_energies: bool,
) -> Result<Vec<AsCandidate>, CasciError> {
    let sets = enumerate_active_spaces(data, n_active_electrons, n_active_orbitals)?;
    let e_hf = hf_determinant_energy(data);
    let mut candidates = Vec::with_capacity(sets.len());
    for orbitals in sets {
        let epsilon = correlation_factor(amps, &orbitals);
        let (e_tot, e_corr_mha) = if attach_energies {
            let spec = ActiveSpaceSpec::new(n_active_electrons, orbitals.clone(), data.ms2);
            let wf = casci_ground_state(data, &spec)?;
            (Some(wf.energy), Some((wf.energy - e_hf) * 1000.0))
        } else {
            (None, None)
        };
        candidates.push(AsCandidate {
            orbitals,
            epsilon,
            e_tot,
            e_corr_mha,
        });
    }
    candidates.sort_by(|a, b| {
        b.epsilon
            .partial_cmp(&a.epsilon)
            .unwrap()
            .then_with(|| a.orbitals.cmp(&b.orbitals))
    });
    Ok(candidates)
}

/// Amplitudes of the parent molecule's full-orbital-space ground state,
/// the internal source for active-space ranking.
pub fn internal_amplitudes(data: &FcidumpData) -> Result<AmplitudeSet, CasciError> {
    let wf = ci_ground_state(data)?;
    extract_amplitudes(&wf)
}
