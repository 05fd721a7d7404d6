//! Run configuration: a simple key-value config file, command-line flag
//! overrides, and a deterministic echo for CSV metadata headers.
//!
//! Config file schema (one `key = value` per line, `#` comments):
//!
//! ```text
//! ansatz      = pgsd              # pgsd | uccsd
//! electrons   = 6                 # active electrons
//! orbitals    = 5                 # active orbital count (auto policy)
//! orbital-set = 1,2,3,5,6         # fixed orbital list (fixed policy)
//! policy      = auto              # auto | fixed
//! optimizer   = gradient          # gradient | derivative-free
//! tol         = 1e-9
//! max-iter    = 2000
//! shots       = 10000
//! noise       = 0.001,0.01,0.01   # p1,p2,p_readout
//! seeds       = 5                 # independent noisy repetitions
//! seed        = 7
//! amplitudes  = path/to/ccsd.csv  # external amplitude source (select-as)
//! out         = scan.csv
//! geometry    = 0.958 path/to/r0.9580.fcidump equilibrium
//! geometry    = 1.200 path/to/r1.2000.fcidump
//! ```
//!
//! Relative paths inside the file resolve against the file's directory.
//! Every flag overrides its config key; `--fcidump` appends one geometry.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use pgsd_core::vqe::{AnsatzKind, OptimizerMode};

#[derive(Debug, Clone)]
pub struct GeometrySpec {
    pub label: String,
    pub bond_length: f64,
    pub path: PathBuf,
    pub is_equilibrium: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    Auto,
    Fixed,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub geometries: Vec<GeometrySpec>,
    pub ansatz: AnsatzKind,
    pub electrons: Option<usize>,
    pub orbitals: Option<usize>,
    pub orbital_set: Option<Vec<usize>>,
    pub policy: Option<Policy>,
    pub optimizer: OptimizerMode,
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub shots: u64,
    pub noise_rates: (f64, f64, f64),
    pub n_seeds: u64,
    pub seed: u64,
    pub amplitudes: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            geometries: Vec::new(),
            ansatz: AnsatzKind::Pgsd,
            electrons: None,
            orbitals: None,
            orbital_set: None,
            policy: None,
            optimizer: OptimizerMode::Gradient,
            tol: 1e-9,
            max_iter: None,
            shots: 10_000,
            noise_rates: (0.001, 0.01, 0.01),
            n_seeds: 5,
            seed: 7,
            amplitudes: None,
            out: None,
        }
    }
}

pub fn parse_ansatz(s: &str) -> Result<AnsatzKind> {
    match s {
        "pgsd" => Ok(AnsatzKind::Pgsd),
        "uccsd" => Ok(AnsatzKind::Uccsd),
        other => bail!("unknown ansatz {other:?} (expected pgsd or uccsd)"),
    }
}

pub fn parse_policy(s: &str) -> Result<Policy> {
    match s {
        "auto" => Ok(Policy::Auto),
        "fixed" => Ok(Policy::Fixed),
        other => bail!("unknown policy {other:?} (expected auto or fixed)"),
    }
}

pub fn parse_optimizer(s: &str) -> Result<OptimizerMode> {
    match s {
        "gradient" => Ok(OptimizerMode::Gradient),
        "derivative-free" => Ok(OptimizerMode::DerivativeFree),
        other => bail!("unknown optimizer {other:?} (expected gradient or derivative-free)"),
    }
}

pub fn parse_orbital_set(s: &str) -> Result<Vec<usize>> {
    let mut orbitals = s
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| anyhow!("bad orbital index {tok:?} in {s:?}"))
        })
        .collect::<Result<Vec<_>>>()?;
    orbitals.sort_unstable();
    orbitals.dedup();
    if orbitals.is_empty() {
        bail!("empty orbital set");
    }
    Ok(orbitals)
}

pub fn parse_noise_rates(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        bail!("noise takes three comma-separated rates p1,p2,p_readout, got {s:?}");
    }
    let mut vals = [0.0; 3];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = p
            .parse()
            .map_err(|_| anyhow!("bad noise rate {p:?} in {s:?}"))?;
        if !(0.0..=1.0).contains(v) {
            bail!("noise rate {p} outside [0, 1]");
        }
    }
    Ok((vals[0], vals[1], vals[2]))
}

/// Derive a geometry entry from a bare FCIDUMP path: label is the file
/// stem, bond length is parsed from a stem like `r1.2000` when possible.
pub fn geometry_from_path(path: &Path) -> GeometrySpec {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "geometry".into());
    let bond_length = stem
        .strip_prefix('r')
        .and_then(|rest| rest.parse::<f64>().ok())
        .unwrap_or(0.0);
    GeometrySpec {
        label: stem,
        bond_length,
        path: path.to_path_buf(),
        is_equilibrium: false,
    }
}

impl RunConfig {
    /// Merge a config file into the defaults. Later duplicate keys win;
    /// geometry lines accumulate.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                anyhow!("{}:{}: expected key = value", path.display(), lineno + 1)
            })?;
            let (key, value) = (key.trim(), value.trim());
            self.apply(key, value, base)
                .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        }
        Ok(())
    }

    fn apply(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let resolve = |p: &str| -> PathBuf {
            let path = Path::new(p);
            if path.is_absolute() {
                path.to_path_buf()
            } else {
                base.join(path)
            }
        };
        match key {
            "ansatz" => self.ansatz = parse_ansatz(value)?,
            "electrons" => self.electrons = Some(value.parse().context("bad electrons")?),
            "orbitals" => self.orbitals = Some(value.parse().context("bad orbitals")?),
            "orbital-set" => self.orbital_set = Some(parse_orbital_set(value)?),
            "policy" => self.policy = Some(parse_policy(value)?),
            "optimizer" => self.optimizer = parse_optimizer(value)?,
            "tol" => self.tol = value.parse().context("bad tol")?,
            "max-iter" => self.max_iter = Some(value.parse().context("bad max-iter")?),
            "shots" => self.shots = value.parse().context("bad shots")?,
            "noise" => self.noise_rates = parse_noise_rates(value)?,
            "seeds" => self.n_seeds = value.parse().context("bad seeds")?,
            "seed" => self.seed = value.parse().context("bad seed")?,
            "amplitudes" => self.amplitudes = Some(resolve(value)),
            "out" => self.out = Some(resolve(value)),
            "geometry" => {
                let mut parts = value.split_whitespace();
                let r: f64 = parts
                    .next()
                    .ok_or_else(|| anyhow!("geometry needs: <bond length> <path> [equilibrium]"))?
                    .parse()
                    .context("bad geometry bond length")?;
                let p = parts
                    .next()
                    .ok_or_else(|| anyhow!("geometry needs a file path after the bond length"))?;
                let is_equilibrium = match parts.next() {
                    None => false,
                    Some("equilibrium") => true,
                    Some(other) => bail!("unexpected geometry token {other:?}"),
                };
                let path = resolve(p);
                let mut geom = geometry_from_path(&path);
                geom.bond_length = r;
                geom.is_equilibrium = is_equilibrium;
                self.geometries.push(geom);
            }
            other => bail!("unknown config key {other:?}"),
        }
        Ok(())
    }

    /// Resolve the policy: explicit key wins, otherwise fixed when an
    /// orbital set is given, auto otherwise.
    pub fn effective_policy(&self) -> Policy {
        self.policy.unwrap_or(if self.orbital_set.is_some() {
            Policy::Fixed
        } else {
            Policy::Auto
        })
    }

    /// Active orbital count implied by the configuration.
    pub fn orbital_count(&self) -> Option<usize> {
        self.orbitals
            .or_else(|| self.orbital_set.as_ref().map(|s| s.len()))
    }

    /// Deterministic one-line echo of the effective configuration (sorted
    /// keys, geometries in declaration order) for CSV headers.
    pub fn echo(&self) -> String {
        let policy = match self.effective_policy() {
            Policy::Auto => "auto",
            Policy::Fixed => "fixed",
        };
        let optimizer = match self.optimizer {
            OptimizerMode::Gradient => "gradient",
            OptimizerMode::DerivativeFree => "derivative-free",
        };
        let mut pairs: Vec<(String, String)> = vec![
            ("ansatz".into(), self.ansatz.name().into()),
            ("policy".into(), policy.into()),
            ("optimizer".into(), optimizer.into()),
            ("tol".into(), format!("{:e}", self.tol)),
            ("shots".into(), self.shots.to_string()),
            (
                "noise".into(),
                format!(
                    "{},{},{}",
                    self.noise_rates.0, self.noise_rates.1, self.noise_rates.2
                ),
            ),
            ("seeds".into(), self.n_seeds.to_string()),
        ];
        if let Some(e) = self.electrons {
            pairs.push(("electrons".into(), e.to_string()));
        }
        if let Some(o) = self.orbitals {
            pairs.push(("orbitals".into(), o.to_string()));
        }
        if let Some(set) = &self.orbital_set {
            let joined = set
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",");
            pairs.push(("orbital-set".into(), joined));
        }
        if let Some(m) = self.max_iter {
            pairs.push(("max-iter".into(), m.to_string()));
        }
        if let Some(a) = &self.amplitudes {
            pairs.push(("amplitudes".into(), a.display().to_string()));
        }
        pairs.sort();
        let mut line = pairs
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ");
        for g in &self.geometries {
            let _ = write!(
                line,
                " geometry={}:{}:{}{}",
                g.label,
                g.bond_length,
                g.path.display(),
                if g.is_equilibrium { ":equilibrium" } else { "" }
            );
        }
        line
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn config_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "# comment").unwrap();
        writeln!(f, "ansatz = uccsd").unwrap();
        writeln!(f, "electrons = 6   # trailing comment").unwrap();
        writeln!(f, "orbitals = 5").unwrap();
        writeln!(f, "noise = 0.002,0.02,0.015").unwrap();
        writeln!(f, "geometry = 0.958 dumps/r0.9580.fcidump equilibrium").unwrap();
        writeln!(f, "geometry = 1.2 dumps/r1.2000.fcidump").unwrap();
        drop(f);

        let mut cfg = RunConfig::default();
        cfg.load_file(&path).unwrap();
        assert_eq!(cfg.ansatz, AnsatzKind::Uccsd);
        assert_eq!(cfg.electrons, Some(6));
        assert_eq!(cfg.noise_rates, (0.002, 0.02, 0.015));
        assert_eq!(cfg.geometries.len(), 2);
        assert!(cfg.geometries[0].is_equilibrium);
        assert!(!cfg.geometries[1].is_equilibrium);
        // Relative paths resolve against the config file's directory.
        assert_eq!(
            cfg.geometries[0].path,
            dir.path().join("dumps/r0.9580.fcidump")
        );
        assert_eq!(cfg.effective_policy(), Policy::Auto);

        let echo = cfg.echo();
        assert!(echo.contains("ansatz=uccsd"));
        assert!(echo.contains("geometry=r0.9580:0.958:"));
        assert!(!echo.contains('\n'));
    }

    #[test]
    fn bad_keys_and_values_are_rejected_with_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.conf");
        std::fs::write(&path, "ansatz = pgsd\nbogus = 1\n").unwrap();
        let err = RunConfig::default().load_file(&path).unwrap_err();
        assert!(format!("{err:#}").contains(":2"), "{err:#}");

        std::fs::write(&path, "noise = 0.1,0.2\n").unwrap();
        assert!(RunConfig::default().load_file(&path).is_err());
        std::fs::write(&path, "noise = 0.1,0.2,1.5\n").unwrap();
        assert!(RunConfig::default().load_file(&path).is_err());
    }

    #[test]
    fn orbital_sets_are_sorted_and_deduplicated() {
        assert_eq!(parse_orbital_set("5, 1,3,1").unwrap(), vec![1, 3, 5]);
        assert!(parse_orbital_set("1,x").is_err());
    }

    #[test]
    fn geometry_labels_derive_from_file_stems() {
        let g = geometry_from_path(Path::new("/tmp/fixtures/r1.2000.fcidump"));
        assert_eq!(g.label, "r1.2000");
        assert!((g.bond_length - 1.2).abs() < 1e-12);
        let other = geometry_from_path(Path::new("/tmp/molecule.fcidump"));
        assert_eq!(other.label, "molecule");
        assert_eq!(other.bond_length, 0.0);
    }
}
