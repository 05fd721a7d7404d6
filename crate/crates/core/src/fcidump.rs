//! FCIDUMP electronic-integral file ingestion and serialization.
//!
//! The FCIDUMP format stores molecular integrals in chemists' notation: a
//! `&FCI` namelist header carrying `NORB`, `NELEC`, and `MS2` (with optional
//! `ORBSYM`/`ISYM`), terminated by `/` or `&END`, followed by records of the
//! form `value i j k l` with 1-based orbital indices:
//!
//! * `i j k l` all nonzero — two-electron integral `(ij|kl)`,
//! * `k = l = 0` — one-electron integral `h[i,j]`,
//! * all indices zero — the scalar core energy.
//!
//! Two-electron integrals are stored under the 8-fold permutational symmetry
//! of real orbitals, `(ij|kl) = (ji|kl) = (ij|lk) = (kl|ij) = ...`, so any
//! index permutation in that orbit reads back the same value. Later records
//! for the same canonical slot overwrite earlier ones.

use std::fmt::Write as _;

use thiserror::Error;

/// Error produced while parsing an FCIDUMP file. Every variant carries the
/// 1-based line number where the problem was found.
#[derive(Debug, Error)]
pub enum FcidumpError {
    #[error("line {line}: expected '&FCI' namelist header, found {found:?}")]
    MissingHeader { line: usize, found: String },
    #[error("line {line}: namelist ended before required key {key} was set")]
    MissingKey { line: usize, key: &'static str },
    #[error("line {line}: malformed namelist entry {entry:?}: {reason}")]
    BadNamelist {
        line: usize,
        entry: String,
        reason: String,
    },
    #[error("line {line}: expected `value i j k l`, found {n} fields")]
    BadFieldCount { line: usize, n: usize },
    #[error("line {line}: could not parse {token:?} as {what}")]
    BadNumber {
        line: usize,
        token: String,
        what: &'static str,
    },
    #[error("line {line}: orbital index {index} outside 1..={norb}")]
    IndexOutOfRange {
        line: usize,
        index: usize,
        norb: usize,
    },
    #[error("line {line}: one-electron record must have k = l = 0 or k,l both nonzero (got k={k}, l={l})")]
    MixedZeroIndices { line: usize, k: usize, l: usize },
    #[error("header: NELEC={nelec} cannot occupy NORB={norb} spatial orbitals")]
    TooManyElectrons { nelec: usize, norb: usize },
    #[error("header: MS2={ms2} is inconsistent with NELEC={nelec} (parity or magnitude)")]
    BadSpin { ms2: i32, nelec: usize },
    #[error("file contains no integral records after the header")]
    NoRecords,
}

/// Number of distinct ordered pairs `(p, q)` with `p >= q` among `n` items.
fn n_pairs(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Triangular pair index for `p >= q`.
fn pair_index(p: usize, q: usize) -> usize {
    debug_assert!(p >= q);
    p * (p + 1) / 2 + q
}

/// Parsed FCIDUMP contents: sizes, spin, and integrals in chemists' notation.
#[derive(Debug, Clone, PartialEq)]
pub struct FcidumpData {
    /// Number of spatial orbitals.
    pub norb: usize,
    /// Number of electrons.
    pub nelec: usize,
    /// Twice the spin projection, `n_alpha - n_beta`.
    pub ms2: i32,
    /// Scalar core energy (nuclear repulsion plus any frozen-core shift).
    pub e_core: f64,
    /// Orbital symmetry labels from `ORBSYM`, if present (one per orbital).
    pub orbsym: Option<Vec<usize>>,
    /// One-electron integrals, dense symmetric `norb x norb`, row-major.
    h1: Vec<f64>,
    /// Two-electron integrals `(pq|rs)` under 8-fold symmetry: indexed by the
    /// canonical compound index of the pair indices of `(p,q)` and `(r,s)`.
    g2: Vec<f64>,
}

impl FcidumpData {
    /// An empty integral set for `norb` orbitals.
    pub fn new(norb: usize, nelec: usize, ms2: i32) -> Self {
        FcidumpData {
            norb,
            nelec,
            ms2,
            e_core: 0.0,
            orbsym: None,
            h1: vec![0.0; norb * norb],
            g2: vec![0.0; n_pairs(n_pairs(norb))],
        }
    }

    /// Number of spin-up electrons implied by `nelec` and `ms2`.
    pub fn n_alpha(&self) -> usize {
        (self.nelec as i32 + self.ms2) as usize / 2
    }

    /// Number of spin-down electrons implied by `nelec` and `ms2`.
    pub fn n_beta(&self) -> usize {
        (self.nelec as i32 - self.ms2) as usize / 2
    }

    /// One-electron integral `h[p, q]` (0-based, symmetric).
    pub fn h1(&self, p: usize, q: usize) -> f64 {
        self.h1[p * self.norb + q]
    }

    /// Set `h[p, q] = h[q, p] = value` (0-based).
    pub fn set_h1(&mut self, p: usize, q: usize, value: f64) {
        self.h1[p * self.norb + q] = value;
        self.h1[q * self.norb + p] = value;
    }

    fn g2_slot(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        let ij = pair_index(p.max(q), p.min(q));
        let kl = pair_index(r.max(s), r.min(s));
        pair_index(ij.max(kl), ij.min(kl))
    }

    /// Two-electron integral `(pq|rs)` in chemists' notation (0-based); any
    /// of the 8 symmetry-equivalent index orders returns the same value.
    pub fn g2(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.g2[self.g2_slot(p, q, r, s)]
    }

    /// Set `(pq|rs)` and its 7 symmetry images (0-based).
    pub fn set_g2(&mut self, p: usize, q: usize, r: usize, s: usize, value: f64) {
        let slot = self.g2_slot(p, q, r, s);
        self.g2[slot] = value;
    }

    /// Render as FCIDUMP text. Two-electron records come first in canonical
    /// index order, then one-electron records, then the core-energy record;
    /// exact zeros are omitted. Floats use Rust's shortest round-trip
    /// representation, so `parse_fcidump(serialize(d)) == d`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = write!(
            out,
            "&FCI NORB={},NELEC={},MS2={},",
            self.norb, self.nelec, self.ms2
        );
        out.push('\n');
        if let Some(sym) = &self.orbsym {
            let labels: Vec<String> = sym.iter().map(|s| s.to_string()).collect();
            let _ = writeln!(out, " ORBSYM={},", labels.join(","));
        }
        out.push_str("&END\n");
        for p in 0..self.norb {
            for q in 0..=p {
                for r in 0..=p {
                    let s_max = if r == p { q } else { r };
                    for s in 0..=s_max {
                        let v = self.g2(p, q, r, s);
                        if v != 0.0 {
                            let _ =
                                writeln!(out, "{:e} {} {} {} {}", v, p + 1, q + 1, r + 1, s + 1);
                        }
                    }
                }
            }
        }
        for p in 0..self.norb {
            for q in 0..=p {
                let v = self.h1(p, q);
                if v != 0.0 {
                    let _ = writeln!(out, "{:e} {} {} 0 0", v, p + 1, q + 1);
                }
            }
        }
        let _ = writeln!(out, "{:e} 0 0 0 0", self.e_core);
        out
    }
}

/// Parse a float that may use Fortran `D` exponents (`1.5D-03`).
fn parse_float(token: &str, line: usize, what: &'static str) -> Result<f64, FcidumpError> {
    let normalized = token.replace(['D', 'd'], "E");
    normalized
        .parse::<f64>()
        .map_err(|_| FcidumpError::BadNumber {
            line,
            token: token.to_string(),
            what,
        })
}

fn parse_index(token: &str, line: usize) -> Result<usize, FcidumpError> {
    token.parse::<usize>().map_err(|_| FcidumpError::BadNumber {
        line,
        token: token.to_string(),
        what: "an orbital index",
    })
}

/// Parse FCIDUMP text into [`FcidumpData`].
///
/// The namelist may span multiple lines and ends at a line containing `/` or
/// `&END`. `NORB`, `NELEC`, and `MS2` are required; `ORBSYM` is kept and
/// `ISYM` is accepted but ignored. All errors carry 1-based line numbers.
pub fn parse_fcidump(text: &str) -> Result<FcidumpData, FcidumpError> {
    let mut lines = text.lines().enumerate();

    // Locate the header line, skipping leading blanks.
    let (header_line_no, header_line) = loop {
        match lines.next() {
            Some((idx, line)) if line.trim().is_empty() => {
                let _ = idx;
            }
            Some((idx, line)) => break (idx + 1, line),
            None => {
                return Err(FcidumpError::MissingHeader {
                    line: 1,
                    found: String::new(),
                })
            }
        }
    };
    let trimmed = header_line.trim_start();
    if !trimmed.to_ascii_uppercase().starts_with("&FCI") {
        return Err(FcidumpError::MissingHeader {
            line: header_line_no,
            found: trimmed.chars().take(16).collect(),
        });
    }

    // Accumulate namelist text until the terminator.
    let mut namelist = trimmed[4..].to_string();
    let mut last_line_no = header_line_no;
    let mut terminated = namelist.contains('/') || namelist.to_ascii_uppercase().contains("&END");
    while !terminated {
        match lines.next() {
            Some((idx, line)) => {
                last_line_no = idx + 1;
                let upper = line.to_ascii_uppercase();
                if upper.contains("&END") || line.contains('/') {
                    let cut = upper
                        .find("&END")
                        .or_else(|| line.find('/'))
                        .unwrap_or(line.len());
                    namelist.push(' ');
                    namelist.push_str(&line[..cut]);
                    terminated = true;
                } else {
                    namelist.push(' ');
                    namelist.push_str(line);
                }
            }
            None => {
                return Err(FcidumpError::MissingKey {
                    line: last_line_no,
                    key: "&END",
                })
            }
        }
    }
    let namelist = namelist.replace('/', " ");

    // Namelist entries are KEY=VALUE and KEY=v1,v2,... separated by commas
    // and whitespace. Split on '=' positions: each key is the token before
    // an '=', its value runs to the next key.
    let mut norb: Option<usize> = None;
    let mut nelec: Option<usize> = None;
    let mut ms2: Option<i32> = None;
    let mut orbsym: Option<Vec<usize>> = None;

    let squashed: String = namelist.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut rest = squashed.as_str();
    while let Some(eq) = rest.find('=') {
        let key: String = rest[..eq]
            .rsplit(|c: char| c == ',' || c.is_whitespace())
            .next()
            .unwrap_or("")
            .trim()
            .to_ascii_uppercase();
        let after = &rest[eq + 1..];
        let value_end = after.find('=').map_or(after.len(), |next_eq| {
            // Back up across the next key token to find where this value ends.
            after[..next_eq]
                .rfind(|c: char| c == ',' || c.is_whitespace())
                .unwrap_or(0)
        });
        let value = after[..value_end].trim().trim_matches(',');
        let entry = || format!("{}={}", key, value);
        match key.as_str() {
            "NORB" | "NELEC" => {
                let v = value
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| FcidumpError::BadNamelist {
                        line: header_line_no,
                        entry: entry(),
                        reason: e.to_string(),
                    })?;
                if key == "NORB" {
                    norb = Some(v);
                } else {
                    nelec = Some(v);
                }
            }
            "MS2" => {
                ms2 = Some(
                    value
                        .trim()
                        .parse::<i32>()
                        .map_err(|e| FcidumpError::BadNamelist {
                            line: header_line_no,
                            entry: entry(),
                            reason: e.to_string(),
                        })?,
                );
            }
            "ORBSYM" => {
                let mut labels = Vec::new();
                for tok in value.split(',') {
                    let tok = tok.trim();
                    if tok.is_empty() {
                        continue;
                    }
                    labels.push(
                        tok.parse::<usize>()
                            .map_err(|e| FcidumpError::BadNamelist {
                                line: header_line_no,
                                entry: entry(),
                                reason: e.to_string(),
                            })?,
                    );
                }
                orbsym = Some(labels);
            }
            // ISYM and any other keys are accepted and ignored.
            _ => {}
        }
        rest = &after[value_end..];
    }

    let norb = norb.ok_or(FcidumpError::MissingKey {
        line: last_line_no,
        key: "NORB",
    })?;
    let nelec = nelec.ok_or(FcidumpError::MissingKey {
        line: last_line_no,
        key: "NELEC",
    })?;
    let ms2 = ms2.ok_or(FcidumpError::MissingKey {
        line: last_line_no,
        key: "MS2",
    })?;

    if nelec > 2 * norb {
        return Err(FcidumpError::TooManyElectrons { nelec, norb });
    }
    if ms2.unsigned_abs() as usize > nelec || (nelec as i32 + ms2) % 2 != 0 {
        return Err(FcidumpError::BadSpin { ms2, nelec });
    }

    let mut data = FcidumpData::new(norb, nelec, ms2);
    data.orbsym = orbsym;

    let mut n_records = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 5 {
            return Err(FcidumpError::BadFieldCount {
                line: line_no,
                n: fields.len(),
            });
        }
        let value = parse_float(fields[0], line_no, "an integral value")?;
        let mut ix = [0usize; 4];
        for (slot, tok) in ix.iter_mut().zip(&fields[1..]) {
            *slot = parse_index(tok, line_no)?;
        }
        for &i in &ix {
            if i > norb {
                return Err(FcidumpError::IndexOutOfRange {
                    line: line_no,
                    index: i,
                    norb,
                });
            }
        }
        let [i, j, k, l] = ix;
        match (i, j, k, l) {
            (0, 0, 0, 0) => data.e_core = value,
            (i, j, 0, 0) if i > 0 && j > 0 => data.set_h1(i - 1, j - 1, value),
            (i, j, k, l) if i > 0 && j > 0 && k > 0 && l > 0 => {
                data.set_g2(i - 1, j - 1, k - 1, l - 1, value);
            }
            _ => {
                if i == 0 || j == 0 {
                    // A zero among i,j with nonzero k,l (or mixed) is not a
                    // valid record shape.
                    return Err(FcidumpError::IndexOutOfRange {
                        line: line_no,
                        index: 0,
                        norb,
                    });
                }
                return Err(FcidumpError::MixedZeroIndices {
                    line: line_no,
                    k,
                    l,
                });
            }
        }
        n_records += 1;
    }
    if n_records == 0 {
        return Err(FcidumpError::NoRecords);
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n";

    #[test]
    fn two_electron_record_lands_in_g2() {
        let text = format!("{MINIMAL}0.5 1 1 1 1\n");
        let d = parse_fcidump(&text).unwrap();
        assert_eq!(d.g2(0, 0, 0, 0), 0.5);
        assert_eq!(d.h1(0, 0), 0.0);
        assert_eq!(d.e_core, 0.0);
    }

    #[test]
    fn all_zero_indices_set_core_energy() {
        let text = format!("{MINIMAL}-1.0 0 0 0 0\n");
        let d = parse_fcidump(&text).unwrap();
        assert_eq!(d.e_core, -1.0);
    }

    #[test]
    fn one_electron_record_is_stored_symmetrically() {
        let text = format!("{MINIMAL}0.3 2 1 0 0\n");
        let d = parse_fcidump(&text).unwrap();
        assert_eq!(d.h1(1, 0), 0.3);
        assert_eq!(d.h1(0, 1), 0.3);
    }

    #[test]
    fn eightfold_symmetry_reads_back_from_any_permutation() {
        let text = format!("{MINIMAL}0.25 2 1 2 2\n");
        let d = parse_fcidump(&text).unwrap();
        // (pq|rs) with p=1,q=0,r=1,s=1 (0-based): all 8 images agree.
        for (p, q, r, s) in [(1, 0, 1, 1), (0, 1, 1, 1), (1, 1, 1, 0), (1, 1, 0, 1)] {
            assert_eq!(d.g2(p, q, r, s), 0.25, "({p}{q}|{r}{s})");
        }
        assert_eq!(d.g2(0, 0, 1, 1), 0.0);
    }

    #[test]
    fn later_duplicate_records_overwrite() {
        let text = format!("{MINIMAL}0.5 1 1 1 1\n0.75 1 1 1 1\n");
        let d = parse_fcidump(&text).unwrap();
        assert_eq!(d.g2(0, 0, 0, 0), 0.75);
    }

    #[test]
    fn fortran_d_exponents_are_accepted() {
        let text = format!("{MINIMAL}1.5D-03 1 1 0 0\n");
        let d = parse_fcidump(&text).unwrap();
        assert_eq!(d.h1(0, 0), 1.5e-3);
    }

    #[test]
    fn orbsym_is_parsed_and_isym_ignored() {
        let text = "&FCI NORB= 3,NELEC= 2,MS2= 0,\n ORBSYM=1,1,2,\n ISYM=1,\n&END\n0.5 1 1 1 1\n";
        let d = parse_fcidump(text).unwrap();
        assert_eq!(d.norb, 3);
        assert_eq!(d.orbsym.as_deref(), Some(&[1, 1, 2][..]));
    }

    #[test]
    fn slash_terminates_the_namelist() {
        let text = "&FCI NORB=2,NELEC=2,MS2=0 /\n0.5 1 1 1 1\n";
        let d = parse_fcidump(text).unwrap();
        assert_eq!(d.norb, 2);
    }

    #[test]
    fn field_count_error_reports_line_number() {
        let text = format!("{MINIMAL}0.5 1 1 1\n");
        match parse_fcidump(&text) {
            Err(FcidumpError::BadFieldCount { line, n }) => {
                assert_eq!(line, 3);
                assert_eq!(n, 4);
            }
            other => panic!("expected BadFieldCount, got {other:?}"),
        }
    }

    #[test]
    fn index_out_of_range_reports_line_number() {
        let text = format!("{MINIMAL}0.5 3 1 1 1\n");
        match parse_fcidump(&text) {
            Err(FcidumpError::IndexOutOfRange { line, index, norb }) => {
                assert_eq!((line, index, norb), (3, 3, 2));
            }
            other => panic!("expected IndexOutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn bad_value_reports_line_number() {
        let text = format!("{MINIMAL}zap 1 1 1 1\n");
        match parse_fcidump(&text) {
            Err(FcidumpError::BadNumber { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected BadNumber, got {other:?}"),
        }
    }

    #[test]
    fn missing_required_key_is_an_error() {
        let text = "&FCI NORB=2,MS2=0,\n&END\n0.5 1 1 1 1\n";
        match parse_fcidump(text) {
            Err(FcidumpError::MissingKey { key, .. }) => assert_eq!(key, "NELEC"),
            other => panic!("expected MissingKey, got {other:?}"),
        }
    }

    #[test]
    fn inconsistent_spin_is_rejected() {
        let text = "&FCI NORB=2,NELEC=2,MS2=1,\n&END\n0.5 1 1 1 1\n";
        assert!(matches!(
            parse_fcidump(text),
            Err(FcidumpError::BadSpin { .. })
        ));
    }

    #[test]
    fn serialize_then_parse_round_trips() {
        let mut d = FcidumpData::new(3, 4, 0);
        d.e_core = 9.187;
        d.orbsym = Some(vec![1, 2, 1]);
        d.set_h1(0, 0, -1.25);
        d.set_h1(2, 1, 0.003);
        d.set_g2(0, 0, 0, 0, 0.625);
        d.set_g2(2, 1, 1, 0, -0.044);
        d.set_g2(2, 2, 1, 1, 0.517);
        let text = d.serialize();
        let back = parse_fcidump(&text).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn parses_a_checked_in_fixture_and_round_trips() {
        let path = concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../fixtures/h2o/r0.9580.fcidump"
        );
        let text = std::fs::read_to_string(path).unwrap();
        let d = parse_fcidump(&text).unwrap();
        assert_eq!((d.norb, d.nelec, d.ms2), (7, 10, 0));
        assert_eq!(d.n_alpha(), 5);
        // Spot values from the file.
        assert!((d.e_core - 9.187_385_517_335_51).abs() < 1e-15);
        assert!((d.g2(0, 0, 0, 0) - 4.761_628_321_808_739).abs() < 1e-15);
        let back = parse_fcidump(&d.serialize()).unwrap();
        assert_eq!(back, d);
    }
}
