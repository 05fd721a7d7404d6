//! Excitation enumeration relative to the Hartree-Fock reference, the
//! closed-form excitation counting formulas, and the PGSD / UCCSD circuit
//! builders.
//!
//! Both ansatzes share the same parameter space: one named angle per single
//! or double excitation, in the same canonical order. They differ in how an
//! excitation becomes gates. PGSD applies a particle-conserving Givens
//! rotation directly on the excitation's qubits and packs the gates into
//! support-disjoint layers (first-fit). UCCSD exponentiates the
//! Jordan-Wigner image of the anti-Hermitian excitation generator with a
//! single Trotter step, emitting one Pauli-rotation ladder per string.

use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateParam};
use crate::pauli::{jw_double_generator, jw_single_generator, spin_orbital_qubit, ActiveSpaceSpec};

/// Spin structure of an excitation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SpinPattern {
    Alpha,
    Beta,
    AlphaAlpha,
    BetaBeta,
    AlphaBeta,
}

/// A single or double excitation out of the HF reference, in spin-orbital
/// qubit indices (spin-up orbitals on qubits `0..m`, spin-down on `m..2m`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Excitation {
    /// 1 for singles, 2 for doubles.
    pub order: usize,
    /// HF-occupied spin-orbital qubits the electrons leave.
    pub from_spinorbs: Vec<usize>,
    /// HF-virtual spin-orbital qubits the electrons enter.
    pub to_spinorbs: Vec<usize>,
    pub spin_pattern: SpinPattern,
}

impl Excitation {
    /// Compact deterministic name, used for circuit parameters: spatial
    /// indices with a spin letter, e.g. `s:0a>2a` or `d:0a.1b>2a.3b`.
    pub fn label(&self, n_spatial: usize) -> String {
        let fmt = |q: usize| {
            let (p, spin) = if q < n_spatial {
                (q, 'a')
            } else {
                (q - n_spatial, 'b')
            };
            format!("{p}{spin}")
        };
        let from: Vec<String> = self.from_spinorbs.iter().map(|&q| fmt(q)).collect();
        let to: Vec<String> = self.to_spinorbs.iter().map(|&q| fmt(q)).collect();
        let tag = if self.order == 1 { 's' } else { 'd' };
        format!("{}:{}>{}", tag, from.join("."), to.join("."))
    }
}

/// Closed-form excitation-space sizes for a given per-spin occupation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExcitationCount {
    /// Total configurations in the particle-number sector.
    pub k: u64,
    /// Singly excited determinants.
    pub s: u64,
    /// Doubly excited determinants.
    pub d: u64,
    /// Triply excited determinants.
    pub t: u64,
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Count configurations and excited determinants for per-spin occupied /
/// virtual orbital counts `(m_occ_a, m_vir_a)` and `(m_occ_b, m_vir_b)`
/// (both spins must share the same total orbital count):
///
/// * `K = C(M, N_α) · C(M, N_β)`
/// * `S = Σ_σ  M_occ^σ M_vir^σ`
/// * `D = Σ_σ  C(M_occ^σ, 2) C(M_vir^σ, 2)  +  Π_σ M_occ^σ M_vir^σ`
/// * `T = Σ_σ  C(M_occ^σ, 3) C(M_vir^σ, 3)
///        + Σ_{σ≠τ} M_occ^σ M_vir^σ · C(M_occ^τ, 2) C(M_vir^τ, 2)`
pub fn counting_formulas(
    m_occ_a: usize,
    m_vir_a: usize,
    m_occ_b: usize,
    m_vir_b: usize,
) -> ExcitationCount {
    assert_eq!(
        m_occ_a + m_vir_a,
        m_occ_b + m_vir_b,
        "both spins act in the same orbital set"
    );
    let m = (m_occ_a + m_vir_a) as u64;
    let (oa, va, ob, vb) = (
        m_occ_a as u64,
        m_vir_a as u64,
        m_occ_b as u64,
        m_vir_b as u64,
    );
    let k = binomial(m, oa) * binomial(m, ob);
    let s = oa * va + ob * vb;
    let d =
        binomial(oa, 2) * binomial(va, 2) + binomial(ob, 2) * binomial(vb, 2) + oa * va * ob * vb;
    let t = binomial(oa, 3) * binomial(va, 3)
        + binomial(ob, 3) * binomial(vb, 3)
        + oa * va * binomial(ob, 2) * binomial(vb, 2)
        + ob * vb * binomial(oa, 2) * binomial(va, 2);
    ExcitationCount { k, s, d, t }
}

#[derive(Debug, Error)]
pub enum AnsatzError {
    #[error("{n_electrons} electrons with ms2={ms2} cannot occupy {n_orbitals} spatial orbitals")]
    TooManyElectrons {
        n_electrons: usize,
        ms2: i32,
        n_orbitals: usize,
    },
}

/// Basis-state index of the Hartree-Fock reference: the lowest `n_alpha`
/// spin-up qubits and lowest `n_beta` spin-down qubits set.
pub fn hf_reference(spec: &ActiveSpaceSpec) -> Result<u64, AnsatzError> {
    let m = spec.n_orbitals();
    let (na, nb) = (spec.n_alpha(), spec.n_beta());
    if na > m || nb > m {
        return Err(AnsatzError::TooManyElectrons {
            n_electrons: spec.n_electrons,
            ms2: spec.ms2,
            n_orbitals: m,
        });
    }
    let alpha = (1u64 << na) - 1;
    let beta = ((1u64 << nb) - 1) << m;
    Ok(alpha | beta)
}

/// All single and double excitations out of the HF reference, in canonical
/// order: singles sorted by (spin, occupied, virtual) with spin-up first;
/// then doubles grouped αα, ββ, αβ, each sorted lexicographically by their
/// spatial index tuple (i, j, a, b).
pub fn enumerate_excitations(spec: &ActiveSpaceSpec) -> Vec<Excitation> {
    let m = spec.n_orbitals();
    let occ = [spec.n_alpha(), spec.n_beta()];
    let mut out = Vec::new();

    for (spin, &n_occ) in occ.iter().enumerate() {
        let pattern = if spin == 0 {
            SpinPattern::Alpha
        } else {
            SpinPattern::Beta
        };
        for i in 0..n_occ {
            for a in n_occ..m {
                out.push(Excitation {
                    order: 1,
                    from_spinorbs: vec![spin_orbital_qubit(m, i, spin)],
                    to_spinorbs: vec![spin_orbital_qubit(m, a, spin)],
                    spin_pattern: pattern,
                });
            }
        }
    }

    for (spin, &n_occ) in occ.iter().enumerate() {
        let pattern = if spin == 0 {
            SpinPattern::AlphaAlpha
        } else {
            SpinPattern::BetaBeta
        };
        for i in 0..n_occ {
            for j in (i + 1)..n_occ {
                for a in n_occ..m {
                    for b in (a + 1)..m {
                        out.push(Excitation {
                            order: 2,
                            from_spinorbs: vec![
                                spin_orbital_qubit(m, i, spin),
                                spin_orbital_qubit(m, j, spin),
                            ],
                            to_spinorbs: vec![
                                spin_orbital_qubit(m, a, spin),
                                spin_orbital_qubit(m, b, spin),
                            ],
                            spin_pattern: pattern,
                        });
                    }
                }
            }
        }
    }
    for i in 0..occ[0] {
        for j in 0..occ[1] {
            for a in occ[0]..m {
                for b in occ[1]..m {
                    out.push(Excitation {
                        order: 2,
                        from_spinorbs: vec![
                            spin_orbital_qubit(m, i, 0),
                            spin_orbital_qubit(m, j, 1),
                        ],
                        to_spinorbs: vec![spin_orbital_qubit(m, a, 0), spin_orbital_qubit(m, b, 1)],
                        spin_pattern: SpinPattern::AlphaBeta,
                    });
                }
            }
        }
    }
    out
}

fn prep_layer(spec: &ActiveSpaceSpec) -> Result<Vec<Gate>, AnsatzError> {
    let hf = hf_reference(spec)?;
    let mut gates = Vec::new();
    for q in 0..2 * spec.n_orbitals() {
        if (hf >> q) & 1 == 1 {
            gates.push(Gate::x(q));
        }
    }
    Ok(gates)
}

fn param_names(spec: &ActiveSpaceSpec, excitations: &[Excitation]) -> Vec<String> {
    excitations
        .iter()
        .map(|e| e.label(spec.n_orbitals()))
        .collect()
}

/// Build the parallelized Givens singles-and-doubles circuit: the HF X layer,
/// then one Givens rotation per excitation in canonical order, each packed
/// greedily into the earliest support-disjoint excitation layer (singles
/// first, then doubles). One named parameter per gate.
pub fn build_pgsd(spec: &ActiveSpaceSpec) -> Result<Circuit, AnsatzError> {
    let excitations = enumerate_excitations(spec);
    let mut circuit = Circuit::new(2 * spec.n_orbitals(), param_names(spec, &excitations));
    circuit.push_layer(prep_layer(spec)?);
    for (index, exc) in excitations.iter().enumerate() {
        let param = GateParam::Linear {
            index,
            coeff: 1.0,
            offset: 0.0,
        };
        let gate = match exc.order {
            1 => Gate::single_exc(exc.from_spinorbs[0], exc.to_spinorbs[0], param),
            _ => Gate::double_exc(
                exc.from_spinorbs[0],
                exc.from_spinorbs[1],
                exc.to_spinorbs[0],
                exc.to_spinorbs[1],
                param,
            ),
        };
        circuit.place_first_fit(gate, 1);
    }
    debug_assert!(circuit.validate());
    Ok(circuit)
}

/// Configuration of the UCCSD builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UccsdConfig {
    /// Trotter steps for the exponential; only a single step is supported.
    pub trotter_steps: usize,
}

impl Default for UccsdConfig {
    fn default() -> Self {
        UccsdConfig { trotter_steps: 1 }
    }
}

/// Build the single-Trotter-step UCCSD circuit: the HF X layer, then for
/// each excitation in canonical order the Jordan-Wigner image of its
/// anti-Hermitian generator `G = Σ_P i c_P P`, emitted as one Pauli-rotation
/// gate `exp(i θ c_P P)` per string with the angle tied linearly
/// (`coefficient -2 c_P`) to the excitation's named parameter. Gates are
/// scheduled into as-soon-as-possible moments.
pub fn build_uccsd(spec: &ActiveSpaceSpec, cfg: &UccsdConfig) -> Result<Circuit, AnsatzError> {
    assert_eq!(
        cfg.trotter_steps, 1,
        "only a single Trotter step is supported"
    );
    let n_qubits = 2 * spec.n_orbitals();
    let excitations = enumerate_excitations(spec);
    let mut gates = prep_layer(spec)?;
    for (index, exc) in excitations.iter().enumerate() {
        let generator = match exc.order {
            1 => jw_single_generator(n_qubits, exc.from_spinorbs[0], exc.to_spinorbs[0]),
            _ => jw_double_generator(
                n_qubits,
                (exc.from_spinorbs[0], exc.from_spinorbs[1]),
                (exc.to_spinorbs[0], exc.to_spinorbs[1]),
            ),
        };
        for (string, coeff) in generator.terms() {
            debug_assert!(coeff.re.abs() < 1e-14, "generator must be anti-Hermitian");
            let param = GateParam::Linear {
                index,
                coeff: -2.0 * coeff.im,
                offset: 0.0,
            };
            gates.push(Gate::pauli_rot(*string, param));
        }
    }
    let circuit = Circuit::from_gates_asap(n_qubits, param_names(spec, &excitations), gates);
    debug_assert!(circuit.validate());
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateKind;

    /// Independent oracle: classify every determinant in the sector by its
    /// Hamming distance from HF (number of electrons outside HF positions).
    fn brute_force_counts(oa: usize, va: usize, ob: usize, vb: usize) -> ExcitationCount {
        let m = oa + va;
        assert_eq!(m, ob + vb);
        let sector = |n_occ: usize| -> Vec<u32> {
            (0u32..1 << m)
                .filter(|mask| mask.count_ones() as usize == n_occ)
                .collect()
        };
        let (alphas, betas) = (sector(oa), sector(ob));
        let hf_a = (1u32 << oa) - 1;
        let hf_b = (1u32 << ob) - 1;
        let mut count = [0u64; 4];
        let mut k = 0u64;
        for &am in &alphas {
            for &bm in &betas {
                let degree = (am & !hf_a).count_ones() + (bm & !hf_b).count_ones();
                k += 1;
                if (degree as usize) < 4 {
                    count[degree as usize] += 1;
                }
            }
        }
        ExcitationCount {
            k,
            s: count[1],
            d: count[2],
            t: count[3],
        }
    }

    #[test]
    fn counting_formulas_match_brute_force_for_all_small_spaces() {
        for oa in 0..5usize {
            for va in 0..5usize {
                let m = oa + va;
                // Closed shell plus every open-shell β split over the same M.
                for ob in 0..=m {
                    let vb = m - ob;
                    let got = counting_formulas(oa, va, ob, vb);
                    let want = brute_force_counts(oa, va, ob, vb);
                    assert_eq!(
                        got, want,
                        "(occ_a={oa}, vir_a={va}, occ_b={ob}, vir_b={vb})"
                    );
                }
            }
        }
    }

    #[test]
    fn counting_matches_published_active_space_sizes() {
        // H2O (6e,5o): 12 singles, 42 doubles.
        let c = counting_formulas(3, 2, 3, 2);
        assert_eq!((c.s, c.d), (12, 42));
        assert_eq!(c.k, 100);
        assert_eq!(c.t, 36);
        // N2 (4e,4o): 8 + 18 = 26.
        let c = counting_formulas(2, 2, 2, 2);
        assert_eq!((c.s, c.d), (8, 18));
        // O2 (8e,6o), open shell: α (5 occ, 1 vir), β (3 occ, 3 vir).
        let c = counting_formulas(5, 1, 3, 3);
        assert_eq!((c.s, c.d), (14, 54));
        // H2O (2e,3o): 4 + 4 = 8.
        let c = counting_formulas(1, 2, 1, 2);
        assert_eq!((c.s, c.d), (4, 4));
    }

    #[test]
    fn hf_reference_bit_patterns() {
        // M=2, one electron per spin: qubits 0 and 2 -> |0101>.
        let spec = ActiveSpaceSpec::new(2, vec![0, 1], 0);
        assert_eq!(hf_reference(&spec).unwrap(), 0b0101);
        // M=6, 5 α and 3 β electrons (O2-like).
        let spec = ActiveSpaceSpec::new(8, (0..6).collect(), 2);
        let hf = hf_reference(&spec).unwrap();
        assert_eq!(hf, 0b000111_011111);
        // Zero electrons -> vacuum.
        let spec = ActiveSpaceSpec::new(0, vec![0, 1, 2], 0);
        assert_eq!(hf_reference(&spec).unwrap(), 0);
        // Too many electrons is an error.
        let spec = ActiveSpaceSpec::new(6, vec![0, 1], 0);
        assert!(hf_reference(&spec).is_err());
    }

    #[test]
    fn enumeration_length_matches_counting_everywhere() {
        for m in 1..6usize {
            for na in 0..=m {
                for nb in 0..=na {
                    let spec = ActiveSpaceSpec::new(na + nb, (0..m).collect(), (na - nb) as i32);
                    let excs = enumerate_excitations(&spec);
                    let c = counting_formulas(na, m - na, nb, m - nb);
                    let singles = excs.iter().filter(|e| e.order == 1).count() as u64;
                    let doubles = excs.iter().filter(|e| e.order == 2).count() as u64;
                    assert_eq!(singles, c.s, "singles for M={m}, n_a={na}, n_b={nb}");
                    assert_eq!(doubles, c.d, "doubles for M={m}, n_a={na}, n_b={nb}");
                }
            }
        }
    }

    #[test]
    fn excitations_respect_occupation_and_order_invariants() {
        let spec = ActiveSpaceSpec::new(4, vec![0, 1, 2, 3], 0);
        let hf = hf_reference(&spec).unwrap();
        let excs = enumerate_excitations(&spec);
        for e in &excs {
            assert_eq!(e.from_spinorbs.len(), e.order);
            assert_eq!(e.to_spinorbs.len(), e.order);
            for &q in &e.from_spinorbs {
                assert_eq!((hf >> q) & 1, 1, "from-spinorb {q} must be HF-occupied");
            }
            for &q in &e.to_spinorbs {
                assert_eq!((hf >> q) & 1, 0, "to-spinorb {q} must be HF-virtual");
            }
        }
        // Canonical order: all singles precede all doubles; spin-up singles
        // come first.
        let first_double = excs.iter().position(|e| e.order == 2).unwrap();
        assert!(excs[..first_double].iter().all(|e| e.order == 1));
        assert!(excs[first_double..].iter().all(|e| e.order == 2));
        // Deterministic: two calls agree.
        assert_eq!(excs, enumerate_excitations(&spec));
    }

    #[test]
    fn pgsd_minimal_space_reproduces_the_four_qubit_shape() {
        // (2e, 2o): 2 singles + 1 double on 4 qubits.
        let spec = ActiveSpaceSpec::new(2, vec![0, 1], 0);
        let c = build_pgsd(&spec).unwrap();
        assert_eq!(c.n_qubits, 4);
        assert_eq!(c.n_params(), 3);
        let singles: Vec<&Gate> = c
            .gates()
            .filter(|g| g.kind == GateKind::SingleExc)
            .collect();
        let doubles: Vec<&Gate> = c
            .gates()
            .filter(|g| g.kind == GateKind::DoubleExc)
            .collect();
        assert_eq!(singles.len(), 2);
        assert_eq!(doubles.len(), 1);
        // The two singles are support-disjoint, so they share one layer; the
        // double overlaps both and opens its own.
        assert_eq!(c.depth_excitation(), 2);
        // X prep on qubits 0 and 2.
        assert_eq!(c.layers[0].len(), 2);
        // Double-excitation support order is [b, j, a, i] = [3, 2, 1, 0].
        assert_eq!(doubles[0].qubits, vec![3, 2, 1, 0]);
    }

    #[test]
    fn pgsd_layers_are_disjoint_and_depth_is_bounded() {
        // N2-like (4e, 4o): 26 parameters, excitation depth ≤ 12.
        let spec = ActiveSpaceSpec::new(4, vec![0, 1, 2, 3], 0);
        let c = build_pgsd(&spec).unwrap();
        assert_eq!(c.n_params(), 26);
        assert!(c.validate());
        let depth = c.depth_excitation();
        assert!(depth <= 12, "excitation depth {depth} exceeds 12");
        // Strictly below the serial bound S+D because disjoint pairs exist.
        assert!(depth < 26);
    }

    #[test]
    fn pgsd_parameter_count_matches_counting_for_published_spaces() {
        let cases: [(usize, usize, i32, usize); 3] = [(6, 5, 0, 54), (4, 4, 0, 26), (8, 6, 2, 68)];
        for (n_e, m, ms2, want) in cases {
            let spec = ActiveSpaceSpec::new(n_e, (0..m).collect(), ms2);
            let c = build_pgsd(&spec).unwrap();
            assert_eq!(c.n_params(), want, "({n_e}e,{m}o)");
            let uccsd = build_uccsd(&spec, &UccsdConfig::default()).unwrap();
            assert_eq!(uccsd.n_params(), want, "UCCSD ({n_e}e,{m}o)");
        }
    }

    #[test]
    fn uccsd_emits_pauli_rotations_with_linear_parameters() {
        let spec = ActiveSpaceSpec::new(2, vec![0, 1], 0);
        let c = build_uccsd(&spec, &UccsdConfig::default()).unwrap();
        assert_eq!(c.n_params(), 3);
        let rots: Vec<&Gate> = c
            .gates()
            .filter(|g| matches!(g.kind, GateKind::PauliRot(_)))
            .collect();
        // Each single yields 2 strings, the double 8.
        assert_eq!(rots.len(), 2 * 2 + 8);
        for g in &rots {
            match g.param {
                GateParam::Linear { coeff, offset, .. } => {
                    assert!(coeff != 0.0);
                    assert_eq!(offset, 0.0);
                }
                _ => panic!("rotation must be parameter-linked"),
            }
        }
        // Every parameter index is referenced.
        for idx in 0..3 {
            assert!(rots.iter().any(|g| g.param.param_index() == Some(idx)));
        }
    }

    #[test]
    fn param_names_are_unique_and_descriptive() {
        let spec = ActiveSpaceSpec::new(4, vec![0, 1, 2, 3], 0);
        let c = build_pgsd(&spec).unwrap();
        let mut names = c.param_names.clone();
        assert!(names.contains(&"s:0a>2a".to_string()));
        assert!(names.iter().any(|n| n.starts_with("d:")));
        names.sort();
        names.dedup();
        assert_eq!(names.len(), c.n_params());
    }
}
