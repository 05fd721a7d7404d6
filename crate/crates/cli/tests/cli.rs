//! End-to-end checks of the `pgsd` binary: exit-code contract, CSV shape,
//! and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pgsd"))
}

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

/// Data rows only: no `#` metadata, no header line.
fn data_rows(csv: &str) -> Vec<String> {
    csv.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1)
        .map(str::to_string)
        .collect()
}

fn header_line(csv: &str) -> String {
    csv.lines()
        .find(|l| !l.starts_with('#'))
        .expect("has a header")
        .to_string()
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let out = run(&[]);
    assert_eq!(code(&out), 1);
}

#[test]
fn scan_without_geometries_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("scan.csv");
    let out = run(&[
        "scan",
        "--electrons",
        "2",
        "--orbital-set",
        "0,1",
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("geometr"), "stderr: {stderr}");
}

#[test]
fn missing_fcidump_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("scan.csv");
    let out = run(&[
        "scan",
        "--fcidump",
        "/nonexistent/file.fcidump",
        "--electrons",
        "2",
        "--orbital-set",
        "0,1",
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn infeasible_active_space_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("scan.csv");
    let dump = fixture("h2/r0.7350.fcidump");
    let out = run(&[
        "scan",
        "--fcidump",
        dump.to_str().unwrap(),
        "--electrons",
        "6",
        "--orbital-set",
        "0,1",
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
}

fn write_h2_config(dir: &Path) -> PathBuf {
    let conf = dir.join("h2.conf");
    let mut text = String::from("electrons = 2\norbital-set = 0,1\npolicy = fixed\nseed = 9\n");
    for (r, tail) in [("0.7350", " equilibrium"), ("1.5000", ""), ("2.5000", "")] {
        text.push_str(&format!(
            "geometry = {} {}{}\n",
            r.parse::<f64>().unwrap(),
            fixture(&format!("h2/r{r}.fcidump")).display(),
            tail
        ));
    }
    std::fs::write(&conf, text).unwrap();
    conf
}

#[test]
fn scan_csv_shape_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_h2_config(dir.path());
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for out_csv in [&out_a, &out_b] {
        let out = run(&[
            "scan",
            "--config",
            conf.to_str().unwrap(),
            "--out",
            out_csv.to_str().unwrap(),
        ]);
        assert_eq!(
            code(&out),
            0,
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let a = read(&out_a);
    assert_eq!(
        a,
        read(&out_b),
        "identical config + seed must give identical bytes"
    );

    assert_eq!(
        header_line(&a),
        "label,bond_length,method,energy,reference,deviation_mha,iterations,evaluations,\
         depth_basis,n_two_qubit,n_params,active_orbitals,error"
    );
    let rows = data_rows(&a);
    assert_eq!(rows.len(), 3);
    for row in &rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 13);
        assert_eq!(fields[2], "pgsd");
        assert_eq!(fields[11], "0-1");
        assert!(fields[12].is_empty(), "unexpected error: {row}");
        let dev: f64 = fields[5].parse().unwrap();
        assert!(dev.abs() <= 1.6, "H2 deviation {dev} mHa");
    }
    assert!(a.contains("# summary: n_points=3 rmse_mha="));
    assert!(a.contains("# seed: 9"));
    assert!(
        !a.to_lowercase().contains("time"),
        "no timestamps in output"
    );
}

#[test]
fn scan_partial_failure_exits_two_and_records_the_error() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("mixed.conf");
    // Orbitals {0, 6} exist in the 7-orbital molecule but not in the
    // 2-orbital one, so the first geometry stages and the second fails.
    std::fs::write(
        &conf,
        format!(
            "electrons = 2\norbital-set = 0,6\npolicy = fixed\n\
             geometry = 0.958 {}\ngeometry = 2.0 {}\n",
            fixture("h2o/r0.9580.fcidump").display(),
            fixture("h2/r2.0000.fcidump").display(),
        ),
    )
    .unwrap();
    let out_csv = dir.path().join("scan.csv");
    let out = run(&[
        "scan",
        "--config",
        conf.to_str().unwrap(),
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    let rows = data_rows(&read(&out_csv));
    assert_eq!(rows.len(), 2);
    let ok_row: Vec<&str> = rows[0].split(',').collect();
    let bad_row: Vec<&str> = rows[1].split(',').collect();
    assert!(ok_row[12].is_empty());
    assert!(!bad_row[12].is_empty());
    assert!(bad_row[3].is_empty(), "failed point has no energy");
}

#[test]
fn select_as_ranks_h2o_and_supports_external_amplitudes() {
    let dir = tempfile::tempdir().unwrap();
    let dump = fixture("h2o/r0.9580.fcidump");
    let out_internal = dir.path().join("internal.csv");
    let out = run(&[
        "select-as",
        "--fcidump",
        dump.to_str().unwrap(),
        "--electrons",
        "6",
        "--orbitals",
        "5",
        "--out",
        out_internal.to_str().unwrap(),
    ]);
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let internal = read(&out_internal);
    assert_eq!(header_line(&internal), "orbitals,epsilon,e_tot,e_corr_mha");
    assert!(internal.contains("# amplitudes: internal-ci"));
    let rows = data_rows(&internal);
    assert_eq!(rows.len(), 10);
    assert!(rows[0].starts_with("1-2-3-5-6,"));

    let out_external = dir.path().join("external.csv");
    let amps = fixture("amplitudes/h2o_r0.9580_ccsd.csv");
    let out = run(&[
        "select-as",
        "--fcidump",
        dump.to_str().unwrap(),
        "--electrons",
        "6",
        "--orbitals",
        "5",
        "--amplitudes",
        amps.to_str().unwrap(),
        "--out",
        out_external.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let external = read(&out_external);
    assert!(external.contains("# amplitudes: external:"));
    let ext_rows = data_rows(&external);
    assert!(ext_rows[0].starts_with("1-2-3-5-6,0.0257932"));
    // Same winner, different epsilon source.
    assert_ne!(rows[0], ext_rows[0]);
}

#[test]
fn resources_compares_both_ansatzes() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("res.csv");
    let out = run(&[
        "resources",
        "--electrons",
        "6",
        "--orbital-set",
        "1,2,3,5,6",
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = read(&out_csv);
    assert!(csv.contains("# layout: all-to-all, CX basis"));
    assert_eq!(header_line(&csv), "metric,pgsd,uccsd,reduction_pct");
    let mut n_params = (0usize, 0usize);
    let mut depth = (0usize, 0usize);
    let mut tqg = (0usize, 0usize);
    for row in data_rows(&csv) {
        let fields: Vec<&str> = row.split(',').collect();
        let p: usize = fields[1].parse().unwrap();
        let u: usize = fields[2].parse().unwrap();
        match fields[0] {
            "n_params" => n_params = (p, u),
            "depth_basis" => depth = (p, u),
            "n_two_qubit" => tqg = (p, u),
            _ => {}
        }
    }
    assert_eq!(n_params, (54, 54));
    assert!(
        depth.0 < depth.1,
        "PGSD depth {} vs UCCSD {}",
        depth.0,
        depth.1
    );
    assert!(tqg.0 < tqg.1, "PGSD TQG {} vs UCCSD {}", tqg.0, tqg.1);
}

#[test]
fn noise_compare_is_deterministic_including_histograms() {
    let dump = fixture("h2/r0.7350.fcidump");
    // Same file names in two directories, so every emitted byte (including
    // the histogram-file references) must coincide.
    let run_once = |dir: &Path| -> (String, String, String) {
        let out_csv = dir.join("noise.csv");
        let out = run(&[
            "noise-compare",
            "--fcidump",
            dump.to_str().unwrap(),
            "--electrons",
            "2",
            "--orbital-set",
            "0,1",
            "--shots",
            "100",
            "--seeds",
            "2",
            "--max-iter",
            "2",
            "--seed",
            "13",
            "--out",
            out_csv.to_str().unwrap(),
        ]);
        assert_eq!(
            code(&out),
            0,
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let hist_pgsd = dir.join("noise_hist_r0.7350_pgsd_rep0.csv");
        let hist_uccsd = dir.join("noise_hist_r0.7350_uccsd_rep1.csv");
        (read(&out_csv), read(&hist_pgsd), read(&hist_uccsd))
    };
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let (csv_a, pgsd_a, uccsd_a) = run_once(dir_a.path());
    let (csv_b, pgsd_b, uccsd_b) = run_once(dir_b.path());
    assert_eq!(csv_a, csv_b);
    assert_eq!(pgsd_a, pgsd_b);
    assert_eq!(uccsd_a, uccsd_b);

    assert_eq!(
        header_line(&csv_a),
        "label,bond_length,method,rep,seed,reference,energy_noiseless,energy_single,\
         energy_converged,dev_single_mha,dev_converged_mha,hf_frequency,histogram,error"
    );
    let rows = data_rows(&csv_a);
    assert_eq!(rows.len(), 4, "2 ansatzes x 2 reps");
    assert!(csv_a.contains("# median: label=r0.7350 method=pgsd"));
    assert!(csv_a.contains("# median: label=r0.7350 method=uccsd"));
    assert_eq!(header_line(&pgsd_a), "bitstring,count");
}
