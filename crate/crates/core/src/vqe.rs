//! Variational ground-state optimization: a quasi-Newton driver over the
//! adjoint gradient for noiseless circuits, a derivative-free simplex driver
//! for shot-sampled noisy objectives, dissociation-scan orchestration with
//! warm starts, and curve-quality error metrics.

use std::collections::VecDeque;

use thiserror::Error;

use crate::ansatz::{build_pgsd, build_uccsd, AnsatzError, UccsdConfig};
use crate::casci::{casci_ground_state, internal_amplitudes, rank_active_spaces, CasciError};
use crate::circuit::Circuit;
use crate::fcidump::FcidumpData;
use crate::pauli::{fold_core, jw_map_hamiltonian, ActiveSpaceSpec, FoldError, PauliSum};
use crate::sim::{gradient, noisy_expectation, NoiseModel, SimError};

#[derive(Debug, Error)]
pub enum VqeError {
    #[error("objective returned a non-finite value")]
    NonFinite,
    #[error("initial parameter vector has {got} entries, circuit takes {expected}")]
    ParamMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error(transparent)]
    Casci(#[from] CasciError),
    #[error(transparent)]
    Fold(#[from] FoldError),
}

/// Stopping rules shared by both optimizers.
#[derive(Debug, Clone, Copy)]
pub struct OptimizerConfig {
    /// Converged when the accepted energy improves by less than this
    /// (Hartree), or for the simplex driver when the vertex energies span
    /// less than this.
    pub energy_tol: f64,
    /// Converged when the gradient infinity norm falls below this.
    pub grad_tol: f64,
    /// Iteration cap; zero means "evaluate the start point only".
    pub max_iter: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            energy_tol: 1e-9,
            grad_tol: 1e-7,
            max_iter: 2000,
        }
    }
}

/// Outcome of a single variational minimization.
#[derive(Debug, Clone)]
pub struct VqeResult {
    pub energy: f64,
    pub params: Vec<f64>,
    pub n_iterations: usize,
    pub n_evaluations: usize,
    pub converged: bool,
    /// Best energy seen after each iteration, starting with the initial
    /// point; non-increasing by construction.
    pub trace: Vec<f64>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Limited-memory BFGS with a strong-Wolfe line search, evaluating energy
/// and gradient together through the adjoint differentiation pass.
pub fn minimize_gradient(
    circuit: &Circuit,
    hamiltonian: &PauliSum,
    theta0: &[f64],
    config: &OptimizerConfig,
) -> Result<VqeResult, VqeError> {
    let n_params = circuit.param_names.len();
    if theta0.len() != n_params {
        return Err(VqeError::ParamMismatch {
            expected: n_params,
            got: theta0.len(),
        });
    }
    let mut n_evaluations = 0usize;
    let mut eval = |theta: &[f64]| -> Result<(f64, Vec<f64>), VqeError> {
        n_evaluations += 1;
        let (e, g) = gradient(circuit, theta, hamiltonian)?;
        if !e.is_finite() || g.iter().any(|x| !x.is_finite()) {
            return Err(VqeError::NonFinite);
        }
        Ok((e, g))
    };

    let mut theta = theta0.to_vec();
    let (mut f, mut g) = eval(&theta)?;
    let mut trace = vec![f];
    let mut best_f = f;
    let mut best_theta = theta.clone();
    let mut converged = false;
    let mut n_iterations = 0;

    // Curvature pairs (s, y, 1/(y.s)) for the two-loop recursion.
    const MEMORY: usize = 10;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();

    for iteration in 1..=config.max_iter {
        if inf_norm(&g) < config.grad_tol {
            converged = true;
            break;
        }
        n_iterations = iteration;

        let mut direction = two_loop_direction(&history, &g);
        if dot(&direction, &g) >= 0.0 {
            // Not a descent direction (stale curvature); restart steepest.
            history.clear();
            direction = g.iter().map(|x| -x).collect();
        }

        match wolfe_line_search(&mut eval, &theta, &direction, f, &g)? {
            Some((alpha, f_new, g_new)) => {
                let s: Vec<f64> = direction.iter().map(|d| alpha * d).collect();
                let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                let ys = dot(&y, &s);
                if ys > 1e-12 {
                    if history.len() == MEMORY {
                        history.pop_front();
                    }
                    history.push_back((s.clone(), y, 1.0 / ys));
                }
                for (t, si) in theta.iter_mut().zip(&s) {
                    *t += si;
                }
                let gain = f - f_new;
                f = f_new;
                g = g_new;
                if f < best_f {
                    best_f = f;
                    best_theta = theta.clone();
                }
                trace.push(best_f);
                if gain.abs() < config.energy_tol {
                    converged = true;
                    break;
                }
            }
            None => break, // Line search exhausted; keep the best point.
        }
    }
    if config.max_iter > 0 && !converged && inf_norm(&g) < config.grad_tol {
        converged = true;
    }

    Ok(VqeResult {
        energy: best_f,
        params: best_theta,
        n_iterations,
        n_evaluations,
        converged,
        trace,
    })
}

fn two_loop_direction(history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, g: &[f64]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    // Initial inverse-Hessian scale from the most recent pair.
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    for qi in q.iter_mut() {
        *qi = -*qi;
    }
    q
}

const WOLFE_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;
const LINE_SEARCH_MAX_EVALS: usize = 25;

type EvalFn<'a> = dyn FnMut(&[f64]) -> Result<(f64, Vec<f64>), VqeError> + 'a;
/// One line-search probe: `(energy, directional slope, gradient)` at a step.
type ProbeOutcome = Result<(f64, f64, Vec<f64>), VqeError>;

/// Bracketing strong-Wolfe line search; returns the accepted step and its
/// energy/gradient, or `None` when no acceptable step exists within budget.
fn wolfe_line_search(
    eval: &mut EvalFn,
    theta: &[f64],
    direction: &[f64],
    f0: f64,
    g0: &[f64],
) -> Result<Option<(f64, f64, Vec<f64>)>, VqeError> {
    let d0 = dot(g0, direction);
    debug_assert!(d0 < 0.0);
    let probe = |eval: &mut EvalFn, alpha: f64| -> Result<(f64, f64, Vec<f64>), VqeError> {
        let point: Vec<f64> = theta
            .iter()
            .zip(direction)
            .map(|(t, d)| t + alpha * d)
            .collect();
        let (f, g) = eval(&point)?;
        let slope = dot(&g, direction);
        Ok((f, slope, g))
    };

    let mut alpha_prev = 0.0;
    let mut f_prev = f0;
    let mut alpha = 1.0;
    let mut used = 0usize;
    while used < LINE_SEARCH_MAX_EVALS {
        let (fa, slope, ga) = probe(eval, alpha)?;
        used += 1;
        if fa > f0 + WOLFE_C1 * alpha * d0 || (used > 1 && fa >= f_prev) {
            return zoom(eval, &probe, f0, d0, alpha_prev, f_prev, alpha, used);
        }
        if slope.abs() <= -WOLFE_C2 * d0 {
            return Ok(Some((alpha, fa, ga)));
        }
        if slope >= 0.0 {
            return zoom(eval, &probe, f0, d0, alpha, fa, alpha_prev, used);
        }
        alpha_prev = alpha;
        f_prev = fa;
        alpha *= 2.0;
    }
    Ok(None)
}

/// Refine a bracket `[lo, hi]` (lo has the lower energy) by bisection until
/// the strong Wolfe conditions hold.
#[allow(clippy::too_many_arguments)]
fn zoom(
    eval: &mut EvalFn,
    probe: &dyn Fn(&mut EvalFn, f64) -> ProbeOutcome,
    f0: f64,
    d0: f64,
    mut alpha_lo: f64,
    mut f_lo: f64,
    mut alpha_hi: f64,
    mut used: usize,
) -> Result<Option<(f64, f64, Vec<f64>)>, VqeError> {
    while used < LINE_SEARCH_MAX_EVALS {
        let alpha = 0.5 * (alpha_lo + alpha_hi);
        let (fa, slope, ga) = probe(eval, alpha)?;
        used += 1;
        if fa > f0 + WOLFE_C1 * alpha * d0 || fa >= f_lo {
            alpha_hi = alpha;
        } else {
            if slope.abs() <= -WOLFE_C2 * d0 {
                return Ok(Some((alpha, fa, ga)));
            }
            if slope * (alpha_hi - alpha_lo) >= 0.0 {
                alpha_hi = alpha_lo;
            }
            alpha_lo = alpha;
            f_lo = fa;
        }
        if (alpha_hi - alpha_lo).abs() < 1e-14 {
            break;
        }
    }
    // Accept a plain-decrease point even without the curvature condition:
    // better than abandoning the whole step.
    if f_lo < f0 {
        let (fa, _, ga) = probe(eval, alpha_lo)?;
        return Ok(Some((alpha_lo, fa, ga)));
    }
    Ok(None)
}

/// Nelder-Mead simplex minimization of an arbitrary (typically noisy)
/// objective. `max_iter == 0` evaluates the start point and returns.
pub fn minimize_derivative_free<F>(
    mut objective: F,
    theta0: &[f64],
    config: &OptimizerConfig,
) -> Result<VqeResult, VqeError>
where
    F: FnMut(&[f64]) -> Result<f64, VqeError>,
{
    let n = theta0.len();
    let mut n_evaluations = 0usize;
    let mut eval = |theta: &[f64], n_evaluations: &mut usize| -> Result<f64, VqeError> {
        *n_evaluations += 1;
        let f = objective(theta)?;
        if !f.is_finite() {
            return Err(VqeError::NonFinite);
        }
        Ok(f)
    };

    let f0 = eval(theta0, &mut n_evaluations)?;
    if config.max_iter == 0 || n == 0 {
        return Ok(VqeResult {
            energy: f0,
            params: theta0.to_vec(),
            n_iterations: 0,
            n_evaluations,
            converged: false,
            trace: vec![f0],
        });
    }

    const STEP: f64 = 0.1;
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((theta0.to_vec(), f0));
    for i in 0..n {
        let mut v = theta0.to_vec();
        v[i] += STEP;
        let fv = eval(&v, &mut n_evaluations)?;
        simplex.push((v, fv));
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let mut trace = vec![f0.min(simplex[0].1)];
    let mut n_iterations = 0;
    let mut converged = false;

    for iteration in 1..=config.max_iter {
        n_iterations = iteration;
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() < config.energy_tol {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(v, _)| v[k]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let at = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let xr = at(REFLECT);
        let fr = eval(&xr, &mut n_evaluations)?;
        if fr < simplex[0].1 {
            let xe = at(EXPAND);
            let fe = eval(&xe, &mut n_evaluations)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = at(CONTRACT);
                (xc.clone(), eval(&xc, &mut n_evaluations)?)
            } else {
                let xc: Vec<f64> = centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c - CONTRACT * (c - w))
                    .collect();
                (xc.clone(), eval(&xc, &mut n_evaluations)?)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let v: Vec<f64> = best
                        .iter()
                        .zip(&entry.0)
                        .map(|(b, x)| b + SHRINK * (x - b))
                        .collect();
                    let fv = eval(&v, &mut n_evaluations)?;
                    *entry = (v, fv);
                }
            }
        }
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        trace.push(trace.last().copied().unwrap().min(simplex[0].1));
    }

    let (params, energy) = simplex.swap_remove(0);
    Ok(VqeResult {
        energy,
        params,
        n_iterations,
        n_evaluations,
        converged,
        trace,
    })
}

/// Simplex minimization of the shot-sampled energy. Each evaluation draws a
/// fresh noise/measurement stream by offsetting the model seed with the
/// running evaluation index, so repeated calls at the same point stay
/// statistically independent while the whole optimization remains
/// reproducible.
pub fn minimize_noisy(
    circuit: &Circuit,
    hamiltonian: &PauliSum,
    theta0: &[f64],
    shots: u64,
    noise: &NoiseModel,
    config: &OptimizerConfig,
) -> Result<VqeResult, VqeError> {
    let n_params = circuit.param_names.len();
    if theta0.len() != n_params {
        return Err(VqeError::ParamMismatch {
            expected: n_params,
            got: theta0.len(),
        });
    }
    let mut eval_index = 0u64;
    minimize_derivative_free(
        |theta| {
            let stream = NoiseModel {
                seed: noise.seed.wrapping_add(eval_index),
                ..*noise
            };
            eval_index += 1;
            let estimate = noisy_expectation(circuit, theta, hamiltonian, shots, &stream)?;
            Ok(estimate.energy)
        },
        theta0,
        config,
    )
}

/// Which ansatz family a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnsatzKind {
    Pgsd,
    Uccsd,
}

impl AnsatzKind {
    pub fn name(&self) -> &'static str {
        match self {
            AnsatzKind::Pgsd => "pgsd",
            AnsatzKind::Uccsd => "uccsd",
        }
    }

    pub fn build(&self, spec: &ActiveSpaceSpec) -> Result<Circuit, AnsatzError> {
        match self {
            AnsatzKind::Pgsd => build_pgsd(spec),
            AnsatzKind::Uccsd => build_uccsd(spec, &UccsdConfig::default()),
        }
    }
}

/// How the active space is chosen at each scan point.
#[derive(Debug, Clone)]
pub enum AsPolicy {
    /// The same orbital set everywhere.
    Fixed {
        n_electrons: usize,
        orbitals: Vec<usize>,
    },
    /// Re-rank candidates by correlation factor at every geometry and take
    /// the winner.
    Dynamic {
        n_electrons: usize,
        n_orbitals: usize,
    },
}

impl AsPolicy {
    pub fn select(&self, data: &FcidumpData) -> Result<ActiveSpaceSpec, CasciError> {
        match self {
            AsPolicy::Fixed {
                n_electrons,
                orbitals,
            } => Ok(ActiveSpaceSpec::new(
                *n_electrons,
                orbitals.clone(),
                data.ms2,
            )),
            AsPolicy::Dynamic {
                n_electrons,
                n_orbitals,
            } => {
                let amps = internal_amplitudes(data)?;
                let ranked = rank_active_spaces(data, *n_electrons, *n_orbitals, &amps, false)?;
                Ok(ActiveSpaceSpec::new(
                    *n_electrons,
                    ranked[0].orbitals.clone(),
                    data.ms2,
                ))
            }
        }
    }
}

/// One geometry on a dissociation curve.
#[derive(Debug, Clone)]
pub struct GeometryInput {
    pub label: String,
    pub bond_length: f64,
    pub data: FcidumpData,
    /// Marks the scan's starting point; otherwise the geometry with the
    /// lowest reference energy starts.
    pub is_equilibrium: bool,
}

/// Per-geometry scan outcome.
#[derive(Debug, Clone)]
pub struct ScanPoint {
    pub label: String,
    pub bond_length: f64,
    pub active_orbitals: Vec<usize>,
    /// Exact ground energy within the selected active space.
    pub reference_energy: f64,
    pub vqe_energy: Option<f64>,
    pub deviation_mha: Option<f64>,
    pub n_iterations: usize,
    pub n_evaluations: usize,
    pub converged: bool,
    pub params: Vec<f64>,
    pub error: Option<String>,
}

/// Curve-quality summary over the signed deviations (milli-Hartree).
#[derive(Debug, Clone, Copy)]
pub struct ErrorMetrics {
    pub n_points: usize,
    pub rmse_mha: f64,
    /// Non-parallelity error: spread between the largest and smallest
    /// signed deviation; invariant under a constant energy offset.
    pub npe_mha: f64,
    pub max_dev_mha: f64,
    pub min_dev_mha: f64,
}

/// Metrics over signed deviations; `None` for an empty list.
pub fn error_metrics(deviations_mha: &[f64]) -> Option<ErrorMetrics> {
    if deviations_mha.is_empty() {
        return None;
    }
    let n = deviations_mha.len();
    let rmse = (deviations_mha.iter().map(|d| d * d).sum::<f64>() / n as f64).sqrt();
    let max = deviations_mha
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let min = deviations_mha.iter().copied().fold(f64::INFINITY, f64::min);
    Some(ErrorMetrics {
        n_points: n,
        rmse_mha: rmse,
        npe_mha: max - min,
        max_dev_mha: max,
        min_dev_mha: min,
    })
}

/// Full dissociation-curve result.
#[derive(Debug, Clone)]
pub struct ScanResult {
    pub ansatz: AnsatzKind,
    /// Points in ascending bond-length order.
    pub points: Vec<ScanPoint>,
    pub metrics: Option<ErrorMetrics>,
}

/// Which minimizer a scan point runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerMode {
    /// Quasi-Newton over the adjoint gradient.
    Gradient,
    /// Simplex search over exact (noiseless) energy evaluations.
    DerivativeFree,
}

/// Run the noiseless variational scan over a dissociation curve with the
/// gradient-based optimizer. See [`scan_with_mode`].
pub fn scan(
    geometries: Vec<GeometryInput>,
    ansatz: AnsatzKind,
    policy: &AsPolicy,
    config: &OptimizerConfig,
) -> Result<ScanResult, VqeError> {
    scan_with_mode(geometries, ansatz, policy, config, OptimizerMode::Gradient)
}

/// Run the noiseless variational scan over a dissociation curve.
///
/// Every geometry first gets its active space and exact reference energy.
/// Optimization starts at the equilibrium-labeled geometry (or, failing
/// that, the one with the lowest reference energy) from zero parameters,
/// then walks outward in both directions, warm-starting each point from its
/// optimized neighbor — the parameter count is geometry-independent, so the
/// handoff stays valid even when the dynamic policy switches orbital sets
/// mid-curve. Per-point failures are recorded and the scan continues.
pub fn scan_with_mode(
    geometries: Vec<GeometryInput>,
    ansatz: AnsatzKind,
    policy: &AsPolicy,
    config: &OptimizerConfig,
    mode: OptimizerMode,
) -> Result<ScanResult, VqeError> {
    struct Staged {
        point: ScanPoint,
        problem: Option<(Circuit, PauliSum)>,
    }

    let mut inputs = geometries;
    inputs.sort_by(|a, b| a.bond_length.partial_cmp(&b.bond_length).unwrap());

    let mut staged: Vec<Staged> = Vec::with_capacity(inputs.len());
    let mut start_index: Option<usize> = None;
    for (k, geom) in inputs.iter().enumerate() {
        let prepared: Result<(ActiveSpaceSpec, f64, Circuit, PauliSum), VqeError> = (|| {
            let spec = policy.select(&geom.data)?;
            let reference = casci_ground_state(&geom.data, &spec)?.energy;
            let circuit = ansatz.build(&spec)?;
            let folded = fold_core(&geom.data, &spec)?;
            let hamiltonian = jw_map_hamiltonian(&folded);
            Ok((spec, reference, circuit, hamiltonian))
        })();
        match prepared {
            Ok((spec, reference, circuit, hamiltonian)) => {
                if geom.is_equilibrium && start_index.is_none() {
                    start_index = Some(k);
                }
                staged.push(Staged {
                    point: ScanPoint {
                        label: geom.label.clone(),
                        bond_length: geom.bond_length,
                        active_orbitals: spec.orbitals,
                        reference_energy: reference,
                        vqe_energy: None,
                        deviation_mha: None,
                        n_iterations: 0,
                        n_evaluations: 0,
                        converged: false,
                        params: Vec::new(),
                        error: None,
                    },
                    problem: Some((circuit, hamiltonian)),
                });
            }
            Err(err) => staged.push(Staged {
                point: ScanPoint {
                    label: geom.label.clone(),
                    bond_length: geom.bond_length,
                    active_orbitals: Vec::new(),
                    reference_energy: f64::NAN,
                    vqe_energy: None,
                    deviation_mha: None,
                    n_iterations: 0,
                    n_evaluations: 0,
                    converged: false,
                    params: Vec::new(),
                    error: Some(err.to_string()),
                },
                problem: None,
            }),
        }
    }

    let start = start_index.unwrap_or_else(|| {
        staged
            .iter()
            .enumerate()
            .filter(|(_, s)| s.problem.is_some())
            .min_by(|a, b| {
                a.1.point
                    .reference_energy
                    .partial_cmp(&b.1.point.reference_energy)
                    .unwrap()
            })
            .map(|(k, _)| k)
            .unwrap_or(0)
    });

    let optimize_at = |staged: &mut Vec<Staged>, k: usize, warm: &Option<Vec<f64>>| {
        let (circuit, hamiltonian) = staged[k].problem.as_ref()?;
        let theta0 = warm
            .clone()
            .unwrap_or_else(|| vec![0.0; circuit.param_names.len()]);
        let outcome = match mode {
            OptimizerMode::Gradient => minimize_gradient(circuit, hamiltonian, &theta0, config),
            OptimizerMode::DerivativeFree => minimize_derivative_free(
                |theta| {
                    let state = crate::sim::evolve(circuit, theta)?;
                    Ok(crate::sim::expectation(&state, hamiltonian)?)
                },
                &theta0,
                config,
            ),
        };
        match outcome {
            Ok(result) => {
                let point = &mut staged[k].point;
                point.vqe_energy = Some(result.energy);
                point.deviation_mha = Some((result.energy - point.reference_energy) * 1000.0);
                point.n_iterations = result.n_iterations;
                point.n_evaluations = result.n_evaluations;
                point.converged = result.converged;
                point.params = result.params.clone();
                Some(result.params)
            }
            Err(err) => {
                staged[k].point.error = Some(err.to_string());
                None
            }
        }
    };

    let center = optimize_at(&mut staged, start, &None);
    let mut warm = center.clone();
    for k in (0..start).rev() {
        if let Some(params) = optimize_at(&mut staged, k, &warm) {
            warm = Some(params);
        }
    }
    warm = center;
    for k in start + 1..staged.len() {
        if let Some(params) = optimize_at(&mut staged, k, &warm) {
            warm = Some(params);
        }
    }

    let points: Vec<ScanPoint> = staged.into_iter().map(|s| s.point).collect();
    let deviations: Vec<f64> = points.iter().filter_map(|p| p.deviation_mha).collect();
    Ok(ScanResult {
        ansatz,
        metrics: error_metrics(&deviations),
        points,
    })
}
