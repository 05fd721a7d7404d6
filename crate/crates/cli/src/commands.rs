//! The four subcommands: dissociation scans, active-space ranking, circuit
//! resource reports, and noisy ansatz comparisons. Every command writes CSV
//! with `#`-prefixed metadata (tool version, config echo, seed) and returns
//! a process exit code: 0 success, 2 partial failure (per-geometry errors
//! recorded in the output). Configuration errors surface as `Err` and exit 1.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pgsd_core::casci::{
    casci_ground_state, ingest_amplitudes, internal_amplitudes, rank_active_spaces,
};
use pgsd_core::circuit::{resource_report, Basis, Circuit, ResourceReport};
use pgsd_core::fcidump::parse_fcidump;
use pgsd_core::pauli::{fold_core, jw_map_hamiltonian, ActiveSpaceSpec, PauliSum};
use pgsd_core::sim::{bitstring, noisy_expectation, sample, NoiseModel};
use pgsd_core::vqe::{
    minimize_gradient, minimize_noisy, scan_with_mode, AsPolicy, GeometryInput, OptimizerConfig,
    ScanPoint,
};
use pgsd_core::FcidumpData;

use crate::config::{GeometrySpec, Policy, RunConfig};

const REFERENCE_BASIS: Basis = Basis::CxRy;
/// Spacing between independent noisy repetitions in seed space, wide enough
/// that the per-evaluation offsets inside one repetition never collide with
/// the next repetition's stream.
const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

fn load_fcidump(path: &Path) -> Result<FcidumpData> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read FCIDUMP file {}", path.display()))?;
    parse_fcidump(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn metadata_header(command: &str, cfg: &RunConfig) -> String {
    format!(
        "# pgsd {}\n# command: {}\n# seed: {}\n# config: {}\n",
        env!("CARGO_PKG_VERSION"),
        command,
        cfg.seed,
        cfg.echo()
    )
}

fn write_output(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content)
        .with_context(|| format!("cannot write output file {}", path.display()))
}

fn out_path(cfg: &RunConfig) -> Result<&PathBuf> {
    cfg.out
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("no output path; pass --out or set out in the config"))
}

fn as_policy(cfg: &RunConfig) -> Result<AsPolicy> {
    let n_electrons = cfg
        .electrons
        .ok_or_else(|| anyhow::anyhow!("active electron count required; pass --electrons"))?;
    match cfg.effective_policy() {
        Policy::Fixed => {
            let orbitals = cfg.orbital_set.clone().ok_or_else(|| {
                anyhow::anyhow!("fixed policy needs an orbital list; pass --orbital-set")
            })?;
            Ok(AsPolicy::Fixed {
                n_electrons,
                orbitals,
            })
        }
        Policy::Auto => {
            let n_orbitals = cfg.orbitals.ok_or_else(|| {
                anyhow::anyhow!("auto policy needs an orbital count; pass --orbitals")
            })?;
            Ok(AsPolicy::Dynamic {
                n_electrons,
                n_orbitals,
            })
        }
    }
}

fn load_geometries(cfg: &RunConfig) -> Result<Vec<(GeometrySpec, FcidumpData)>> {
    if cfg.geometries.is_empty() {
        bail!("no geometries configured; add geometry lines to the config or pass --fcidump");
    }
    cfg.geometries
        .iter()
        .map(|g| Ok((g.clone(), load_fcidump(&g.path)?)))
        .collect()
}

/// Cheap feasibility check of the active-space request against one
/// molecule, so a uniformly impossible configuration fails up front (exit
/// 1) instead of surfacing as per-geometry failures (exit 2).
fn validate_policy(policy: &AsPolicy, data: &FcidumpData) -> Result<()> {
    match policy {
        AsPolicy::Fixed {
            n_electrons,
            orbitals,
        } => {
            let spec = ActiveSpaceSpec::new(*n_electrons, orbitals.clone(), data.ms2);
            fold_core(data, &spec)?;
            pgsd_core::ansatz::hf_reference(&spec)?;
        }
        AsPolicy::Dynamic {
            n_electrons,
            n_orbitals,
        } => {
            pgsd_core::casci::enumerate_active_spaces(data, *n_electrons, *n_orbitals)?;
        }
    }
    Ok(())
}

fn dash_joined(orbitals: &[usize]) -> String {
    orbitals
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

fn csv_safe(message: &str) -> String {
    message.replace(',', ";").replace('\n', " ")
}

fn fmt_opt(value: Option<f64>, precision: usize) -> String {
    value
        .filter(|v| v.is_finite())
        .map(|v| format!("{v:.precision$}"))
        .unwrap_or_default()
}

/// Resource accounting for the scan's ansatz circuit. The counts depend
/// only on the electron/orbital numbers, not on which orbitals were
/// picked, so one report covers every scan point.
fn scan_resources(
    cfg: &RunConfig,
    points: &[ScanPoint],
    ms2: i32,
) -> Result<Option<ResourceReport>> {
    let Some(point) = points.iter().find(|p| !p.active_orbitals.is_empty()) else {
        return Ok(None);
    };
    let n_electrons = cfg.electrons.expect("validated by as_policy");
    let spec = ActiveSpaceSpec::new(n_electrons, point.active_orbitals.clone(), ms2);
    let circuit = cfg.ansatz.build(&spec)?;
    Ok(Some(resource_report(&circuit, REFERENCE_BASIS)))
}

pub fn cmd_scan(cfg: &RunConfig) -> Result<i32> {
    let out = out_path(cfg)?.clone();
    let loaded = load_geometries(cfg)?;
    let ms2 = loaded[0].1.ms2;
    let policy = as_policy(cfg)?;
    validate_policy(&policy, &loaded[0].1)?;
    let optimizer = OptimizerConfig {
        energy_tol: cfg.tol,
        max_iter: cfg.max_iter.unwrap_or(2000),
        ..OptimizerConfig::default()
    };
    let geometries: Vec<GeometryInput> = loaded
        .into_iter()
        .map(|(g, data)| GeometryInput {
            label: g.label,
            bond_length: g.bond_length,
            data,
            is_equilibrium: g.is_equilibrium,
        })
        .collect();

    let result = scan_with_mode(geometries, cfg.ansatz, &policy, &optimizer, cfg.optimizer)?;
    let resources = scan_resources(cfg, &result.points, ms2)?;

    let mut csv = metadata_header("scan", cfg);
    csv.push_str(
        "label,bond_length,method,energy,reference,deviation_mha,iterations,evaluations,\
         depth_basis,n_two_qubit,n_params,active_orbitals,error\n",
    );
    let mut n_failed = 0usize;
    for point in &result.points {
        let (depth_basis, n_two_qubit, n_params) = match (&resources, &point.error) {
            (Some(r), None) => (
                r.depth_basis.to_string(),
                r.n_two_qubit.to_string(),
                r.n_params.to_string(),
            ),
            _ => (String::new(), String::new(), String::new()),
        };
        if point.error.is_some() {
            n_failed += 1;
        }
        let reference = if point.reference_energy.is_finite() {
            Some(point.reference_energy)
        } else {
            None
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            point.label,
            point.bond_length,
            cfg.ansatz.name(),
            fmt_opt(point.vqe_energy, 9),
            fmt_opt(reference, 9),
            fmt_opt(point.deviation_mha, 6),
            point.n_iterations,
            point.n_evaluations,
            depth_basis,
            n_two_qubit,
            n_params,
            dash_joined(&point.active_orbitals),
            point.error.as_deref().map(csv_safe).unwrap_or_default(),
        );
    }
    if let Some(m) = result.metrics {
        let _ = writeln!(
            csv,
            "# summary: n_points={} rmse_mha={:.6} npe_mha={:.6} max_dev_mha={:.6} min_dev_mha={:.6}",
            m.n_points, m.rmse_mha, m.npe_mha, m.max_dev_mha, m.min_dev_mha
        );
    } else {
        csv.push_str("# summary: no successful points\n");
    }
    write_output(&out, &csv)?;
    if n_failed > 0 {
        eprintln!(
            "scan: {n_failed} geometr{} failed; see the error column",
            if n_failed == 1 { "y" } else { "ies" }
        );
        return Ok(2);
    }
    Ok(0)
}

pub fn cmd_select_as(cfg: &RunConfig) -> Result<i32> {
    let out = out_path(cfg)?.clone();
    let loaded = load_geometries(cfg)?;
    if loaded.len() != 1 {
        bail!(
            "select-as ranks one molecule at a time; got {} geometries",
            loaded.len()
        );
    }
    let data = &loaded[0].1;
    let n_electrons = cfg
        .electrons
        .ok_or_else(|| anyhow::anyhow!("active electron count required; pass --electrons"))?;
    let n_orbitals = cfg
        .orbital_count()
        .ok_or_else(|| anyhow::anyhow!("active orbital count required; pass --orbitals"))?;

    let (amps, source) = match &cfg.amplitudes {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read amplitude file {}", path.display()))?;
            (
                ingest_amplitudes(&text)?,
                format!("external:{}", path.display()),
            )
        }
        None => (internal_amplitudes(data)?, "internal-ci".to_string()),
    };
    let ranked = rank_active_spaces(data, n_electrons, n_orbitals, &amps, true)?;

    let mut csv = metadata_header("select-as", cfg);
    let _ = writeln!(csv, "# amplitudes: {source}");
    csv.push_str("orbitals,epsilon,e_tot,e_corr_mha\n");
    for candidate in &ranked {
        let _ = writeln!(
            csv,
            "{},{:.7},{},{}",
            dash_joined(&candidate.orbitals),
            candidate.epsilon,
            fmt_opt(candidate.e_tot, 9),
            fmt_opt(candidate.e_corr_mha, 6),
        );
    }
    write_output(&out, &csv)?;
    Ok(0)
}

pub fn cmd_resources(cfg: &RunConfig) -> Result<i32> {
    let out = out_path(cfg)?.clone();
    let n_electrons = cfg
        .electrons
        .ok_or_else(|| anyhow::anyhow!("active electron count required; pass --electrons"))?;
    let n_orbitals = cfg
        .orbital_count()
        .ok_or_else(|| anyhow::anyhow!("active orbital count required; pass --orbitals"))?;
    // Gate counts depend only on the electron/orbital numbers; a molecule
    // is needed only to pick up the spin projection.
    let ms2 = match cfg.geometries.first() {
        Some(g) => load_fcidump(&g.path)?.ms2,
        None => (n_electrons % 2) as i32,
    };
    let orbitals = cfg
        .orbital_set
        .clone()
        .unwrap_or_else(|| (0..n_orbitals).collect());
    let spec = ActiveSpaceSpec::new(n_electrons, orbitals, ms2);

    let pgsd = resource_report(&pgsd_core::ansatz::build_pgsd(&spec)?, REFERENCE_BASIS);
    let uccsd = resource_report(
        &pgsd_core::ansatz::build_uccsd(&spec, &Default::default())?,
        REFERENCE_BASIS,
    );

    let mut csv = metadata_header("resources", cfg);
    let _ = writeln!(csv, "# layout: all-to-all, CX basis");
    csv.push_str("metric,pgsd,uccsd,reduction_pct\n");
    let rows: [(&str, usize, usize); 7] = [
        ("n_qubits", pgsd.n_qubits, uccsd.n_qubits),
        ("n_params", pgsd.n_params, uccsd.n_params),
        (
            "depth_excitation",
            pgsd.depth_excitation,
            uccsd.depth_excitation,
        ),
        ("n_gates_basis", pgsd.n_gates_basis, uccsd.n_gates_basis),
        ("n_single_qubit", pgsd.n_single_qubit, uccsd.n_single_qubit),
        ("n_two_qubit", pgsd.n_two_qubit, uccsd.n_two_qubit),
        ("depth_basis", pgsd.depth_basis, uccsd.depth_basis),
    ];
    for (metric, p, u) in rows {
        let reduction = if u > 0 {
            format!("{:.1}", 100.0 * (1.0 - p as f64 / u as f64))
        } else {
            String::new()
        };
        let _ = writeln!(csv, "{metric},{p},{u},{reduction}");
    }
    write_output(&out, &csv)?;
    Ok(0)
}

struct NoiseRow {
    label: String,
    bond_length: f64,
    method: &'static str,
    rep: u64,
    seed: u64,
    reference: Option<f64>,
    energy_noiseless: Option<f64>,
    energy_single: Option<f64>,
    energy_converged: Option<f64>,
    hf_frequency: Option<f64>,
    histogram: String,
    error: Option<String>,
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Noiseless optimum, then per-seed noisy single evaluations, converged
/// noisy reoptimizations, and sampled histograms, for one (geometry,
/// ansatz) pair.
#[allow(clippy::too_many_arguments)]
fn noisy_rows_for(
    cfg: &RunConfig,
    geom: &GeometrySpec,
    method: &'static str,
    circuit: &Circuit,
    hamiltonian: &PauliSum,
    reference: f64,
    hf_bits: &str,
    out: &Path,
) -> Result<Vec<NoiseRow>> {
    let noiseless_cfg = OptimizerConfig {
        energy_tol: cfg.tol,
        ..OptimizerConfig::default()
    };
    let theta0 = vec![0.0; circuit.param_names.len()];
    let noiseless = minimize_gradient(circuit, hamiltonian, &theta0, &noiseless_cfg)?;

    let noisy_cfg = OptimizerConfig {
        energy_tol: cfg.tol,
        max_iter: cfg.max_iter.unwrap_or(30),
        ..OptimizerConfig::default()
    };
    let (p1, p2, p_readout) = cfg.noise_rates;
    let mut rows = Vec::new();
    for rep in 0..cfg.n_seeds {
        let seed = cfg.seed.wrapping_add(rep.wrapping_mul(SEED_STRIDE));
        let noise = NoiseModel {
            p1,
            p2,
            p_readout,
            seed,
        };
        let single = noisy_expectation(circuit, &noiseless.params, hamiltonian, cfg.shots, &noise)?;
        let converged = minimize_noisy(
            circuit,
            hamiltonian,
            &noiseless.params,
            cfg.shots,
            &noise,
            &noisy_cfg,
        )?;
        let histogram = sample(circuit, &noiseless.params, cfg.shots, &noise)?;
        let hist_name = format!(
            "{}_hist_{}_{}_rep{}.csv",
            out.file_stem().unwrap_or_default().to_string_lossy(),
            geom.label,
            method,
            rep
        );
        let hist_path = out.with_file_name(&hist_name);
        let mut hist_csv = metadata_header("noise-compare:histogram", cfg);
        let _ = writeln!(
            hist_csv,
            "# subject: label={} method={method} rep={rep} stream_seed={seed}",
            geom.label
        );
        hist_csv.push_str(&histogram.to_csv());
        write_output(&hist_path, &hist_csv)?;

        rows.push(NoiseRow {
            label: geom.label.clone(),
            bond_length: geom.bond_length,
            method,
            rep,
            seed,
            reference: Some(reference),
            energy_noiseless: Some(noiseless.energy),
            energy_single: Some(single.energy),
            energy_converged: Some(converged.energy),
            hf_frequency: Some(histogram.frequency(hf_bits)),
            histogram: hist_name,
            error: None,
        });
    }
    Ok(rows)
}

pub fn cmd_noise_compare(cfg: &RunConfig) -> Result<i32> {
    let out = out_path(cfg)?.clone();
    let loaded = load_geometries(cfg)?;
    let policy = as_policy(cfg)?;
    validate_policy(&policy, &loaded[0].1)?;

    let mut rows: Vec<NoiseRow> = Vec::new();
    let mut n_failed = 0usize;
    for (geom, data) in &loaded {
        let staged: Result<Vec<NoiseRow>> = (|| {
            let spec = policy.select(data)?;
            let reference = casci_ground_state(data, &spec)?.energy;
            let folded = fold_core(data, &spec)?;
            let hamiltonian = jw_map_hamiltonian(&folded);
            let hf_bits = bitstring(
                pgsd_core::ansatz::hf_reference(&spec)?,
                2 * spec.n_orbitals(),
            );
            let mut out_rows = Vec::new();
            for method in [
                pgsd_core::vqe::AnsatzKind::Pgsd,
                pgsd_core::vqe::AnsatzKind::Uccsd,
            ] {
                let circuit = method.build(&spec)?;
                out_rows.extend(noisy_rows_for(
                    cfg,
                    geom,
                    method.name(),
                    &circuit,
                    &hamiltonian,
                    reference,
                    &hf_bits,
                    &out,
                )?);
            }
            Ok(out_rows)
        })();
        match staged {
            Ok(mut r) => rows.append(&mut r),
            Err(err) => {
                n_failed += 1;
                rows.push(NoiseRow {
                    label: geom.label.clone(),
                    bond_length: geom.bond_length,
                    method: "",
                    rep: 0,
                    seed: cfg.seed,
                    reference: None,
                    energy_noiseless: None,
                    energy_single: None,
                    energy_converged: None,
                    hf_frequency: None,
                    histogram: String::new(),
                    error: Some(err.to_string()),
                });
            }
        }
    }

    let mut csv = metadata_header("noise-compare", cfg);
    csv.push_str(
        "label,bond_length,method,rep,seed,reference,energy_noiseless,energy_single,\
         energy_converged,dev_single_mha,dev_converged_mha,hf_frequency,histogram,error\n",
    );
    for row in &rows {
        let dev = |e: Option<f64>| {
            e.zip(row.reference)
                .map(|(energy, reference)| (energy - reference).abs() * 1000.0)
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.label,
            row.bond_length,
            row.method,
            row.rep,
            row.seed,
            fmt_opt(row.reference, 9),
            fmt_opt(row.energy_noiseless, 9),
            fmt_opt(row.energy_single, 9),
            fmt_opt(row.energy_converged, 9),
            fmt_opt(dev(row.energy_single), 6),
            fmt_opt(dev(row.energy_converged), 6),
            fmt_opt(row.hf_frequency, 6),
            row.histogram,
            row.error.as_deref().map(csv_safe).unwrap_or_default(),
        );
    }
    // Per (geometry, ansatz) medians across repetitions.
    for (geom, _) in &loaded {
        for method in ["pgsd", "uccsd"] {
            let subset: Vec<&NoiseRow> = rows
                .iter()
                .filter(|r| r.label == geom.label && r.method == method && r.error.is_none())
                .collect();
            if subset.is_empty() {
                continue;
            }
            let reference = subset[0].reference.unwrap();
            let mut single: Vec<f64> = subset
                .iter()
                .filter_map(|r| r.energy_single)
                .map(|e| (e - reference).abs() * 1000.0)
                .collect();
            let mut converged: Vec<f64> = subset
                .iter()
                .filter_map(|r| r.energy_converged)
                .map(|e| (e - reference).abs() * 1000.0)
                .collect();
            let mut freq: Vec<f64> = subset.iter().filter_map(|r| r.hf_frequency).collect();
            let _ = writeln!(
                csv,
                "# median: label={} method={} dev_single_mha={:.6} dev_converged_mha={:.6} hf_frequency={:.6}",
                geom.label,
                method,
                median(&mut single).unwrap(),
                median(&mut converged).unwrap(),
                median(&mut freq).unwrap(),
            );
        }
    }
    write_output(&out, &csv)?;
    if n_failed > 0 {
        eprintln!(
            "noise-compare: {n_failed} geometr{} failed; see the error column",
            if n_failed == 1 { "y" } else { "ies" }
        );
        return Ok(2);
    }
    Ok(0)
}
