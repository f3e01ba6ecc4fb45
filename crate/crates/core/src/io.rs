//! Text formats: round counts, energy matrices, peaks, exclusion regions,
//! fit results and `key = value` configuration.
//!
//! Every reader rejects malformed input with the offending line number.
//! Blank lines and lines starting with `#` are skipped.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::chipeval::{Genome, Peak, Region};
use crate::energy::EnergyMatrix;
use crate::error::{Error, Result};
use crate::fit::{FitResult, RoundCounts};
use crate::seq::{Sequence, ALPHABET};

/// Fixed 6-decimal formatting; negative zero prints as `0.000000`.
pub fn fmt6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn fields(line: &str) -> Vec<&str> {
    line.split_whitespace().collect()
}

fn parse_num<T: std::str::FromStr>(line: usize, what: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("{what} '{s}' is not a valid number")))
}

fn parse_f64(line: usize, what: &str, s: &str) -> Result<f64> {
    let v: f64 = parse_num(line, what, s)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::parse(line, format!("{what} '{s}' is not finite")))
    }
}

fn parse_sequence(line: usize, s: &str) -> Result<Sequence> {
    Sequence::parse(s).map_err(|e| Error::parse(line, e.to_string()))
}

/// `sequence<TAB>count<TAB>round` per line.
pub fn parse_round_counts(text: &str) -> Result<RoundCounts> {
    let mut records = Vec::new();
    let mut k = None;
    for (line, l) in data_lines(text) {
        let f = fields(l);
        if f.len() != 3 {
            return Err(Error::parse(line, format!("expected 3 fields, found {}", f.len())));
        }
        let seq = parse_sequence(line, f[0])?;
        match k {
            None => k = Some(seq.len()),
            Some(k) if k != seq.len() => {
                return Err(Error::parse(
                    line,
                    format!("sequence length {} differs from {k}", seq.len()),
                ))
            }
            _ => {}
        }
        let count: u64 = parse_num(line, "count", f[1])?;
        if count < 1 {
            return Err(Error::parse(line, "count must be at least 1"));
        }
        let round: usize = parse_num(line, "round", f[2])?;
        if round < 1 {
            return Err(Error::parse(line, "rounds are numbered from 1"));
        }
        records.push((seq, count, round));
    }
    RoundCounts::from_records(records)
}

pub fn read_round_counts(path: &Path) -> Result<RoundCounts> {
    parse_round_counts(&read_text(path)?).map_err(|e| e.in_file(path))
}

pub fn format_round_counts(counts: &RoundCounts) -> String {
    let mut out = String::new();
    for (s, c, r) in counts.records() {
        let _ = writeln!(out, "{s}\t{c}\t{r}");
    }
    out
}

const MATRIX_HEADER: &str = "pos\tA\tC\tG\tT";

/// Header `pos A C G T`, then one row per position numbered from 1.
pub fn parse_energy_matrix(text: &str) -> Result<EnergyMatrix> {
    let mut lines = data_lines(text);
    let (line, header) = lines.next().ok_or_else(|| Error::invalid("matrix file is empty"))?;
    let h = fields(header);
    let expected: Vec<String> = std::iter::once("pos".to_string())
        .chain(ALPHABET.iter().map(|c| c.to_string()))
        .collect();
    if h.len() != 5 || h.iter().zip(&expected).any(|(a, b)| !a.eq_ignore_ascii_case(b)) {
        return Err(Error::parse(line, format!("expected header '{}'", expected.join(" "))));
    }
    let mut rows = Vec::new();
    for (line, l) in lines {
        let f = fields(l);
        if f.len() != 5 {
            return Err(Error::parse(line, format!("expected 5 columns, found {}", f.len())));
        }
        let pos: usize = parse_num(line, "position", f[0])?;
        if pos != rows.len() + 1 {
            return Err(Error::parse(
                line,
                format!("expected position {}, found {pos}", rows.len() + 1),
            ));
        }
        let mut row = [0.0; 4];
        for (b, cell) in row.iter_mut().zip(&f[1..]) {
            *b = parse_f64(line, "entry", cell)?;
        }
        rows.push(row);
    }
    EnergyMatrix::new(rows)
}

pub fn read_energy_matrix(path: &Path) -> Result<EnergyMatrix> {
    parse_energy_matrix(&read_text(path)?).map_err(|e| e.in_file(path))
}

pub fn format_energy_matrix(m: &EnergyMatrix) -> String {
    let mut out = format!("{MATRIX_HEADER}\n");
    for (i, row) in m.rows().iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|&v| fmt6(v)).collect();
        let _ = writeln!(out, "{}\t{}", i + 1, cells.join("\t"));
    }
    out
}

pub fn write_energy_matrix(m: &EnergyMatrix, path: &Path) -> Result<()> {
    write_text(path, &format_energy_matrix(m))
}

/// `contig<TAB>position<TAB>score`, positions 0-based.
pub fn parse_peaks(text: &str) -> Result<Vec<Peak>> {
    data_lines(text)
        .map(|(line, l)| {
            let f = fields(l);
            if f.len() != 3 {
                return Err(Error::parse(line, format!("expected 3 fields, found {}", f.len())));
            }
            Ok(Peak {
                contig: f[0].to_string(),
                position: parse_num(line, "position", f[1])?,
                score: parse_f64(line, "score", f[2])?,
            })
        })
        .collect()
}

/// `contig<TAB>start<TAB>end<TAB>label`, half-open and 0-based.
pub fn parse_regions(text: &str) -> Result<Vec<Region>> {
    data_lines(text)
        .map(|(line, l)| {
            let f = fields(l);
            if f.len() != 4 {
                return Err(Error::parse(line, format!("expected 4 fields, found {}", f.len())));
            }
            let start = parse_num(line, "start", f[1])?;
            let end = parse_num(line, "end", f[2])?;
            if start >= end {
                return Err(Error::parse(line, "region start must be below its end"));
            }
            Ok(Region {
                contig: f[0].to_string(),
                start,
                end,
                label: f[3].to_string(),
            })
        })
        .collect()
}

pub fn read_genome(path: &Path) -> Result<Genome> {
    Genome::from_fasta(&read_text(path)?).map_err(|e| e.in_file(path))
}

/// One sequence per line.
pub fn parse_sequences(text: &str) -> Result<Vec<Sequence>> {
    data_lines(text).map(|(line, l)| parse_sequence(line, l)).collect()
}

/// `key = value` lines. Keys may repeat; order is kept.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    data_lines(text)
        .map(|(line, l)| {
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| Error::parse(line, "expected 'key = value'"))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(Error::parse(line, format!("invalid key '{k}'")));
            }
            Ok((k.to_string(), v.to_string()))
        })
        .collect()
}

/// Fit summary as `key = value` lines followed by a `[matrix]` block.
/// `config` is echoed verbatim ahead of the results.
pub fn format_fit_result(fit: &FitResult, config: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in config {
        let _ = writeln!(out, "{k} = {v}");
    }
    let log_tf: Vec<String> = fit.model.log_tf().iter().map(|&v| fmt6(v)).collect();
    let _ = writeln!(out, "log_tf = {}", log_tf.join(", "));
    let _ = writeln!(out, "c_junk = {}", fmt6(fit.model.c_junk()));
    if let Some(e) = fit.consensus_energy {
        let _ = writeln!(out, "consensus_energy = {}", fmt6(e));
    }
    let _ = writeln!(out, "log_likelihood = {}", fmt6(fit.log_likelihood));
    let _ = writeln!(out, "consensus = {}", fit.model.matrix().consensus());
    let _ = writeln!(out, "orientation = {}", fit.orientation);
    let _ = writeln!(out, "best_restart = {}", fit.best_restart);
    let converged = fit.traces.iter().filter(|t| t.converged).count();
    let _ = writeln!(out, "restarts_converged = {converged}/{}", fit.traces.len());
    out.push_str("[matrix]\n");
    out.push_str(&format_energy_matrix(fit.model.matrix()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::tests::table3;

    #[test]
    fn fmt6_examples() {
        assert_eq!(fmt6(-4.722516), "-4.722516");
        assert_eq!(fmt6(-0.0), "0.000000");
        assert_eq!(fmt6(-1e-9), "0.000000");
        assert_eq!(fmt6(2.5), "2.500000");
    }

    #[test]
    fn round_counts_examples() {
        let c = parse_round_counts("TCCCATTAATCCCACC\t2\t3\n").unwrap();
        assert_eq!(c.rounds(), 3);
        assert_eq!(c.round(3).len(), 1);
        assert_eq!(c.round(3)[0].1, 2);
        let merged = parse_round_counts("# reads\nAACG\t2\t1\n\nCGTT\t3\t1\n").unwrap();
        assert_eq!(merged.round(1), &[(Sequence::parse("AACG").unwrap(), 5)]);
        let err = parse_round_counts("ACGT\t1\t1\nACGT\t0\t1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(parse_round_counts("ACGT\t1\n").is_err());
        assert!(parse_round_counts("ACGT\t1\t0\n").is_err());
        assert!(parse_round_counts("ACGT\t1\t1\nACG\t1\t1\n").is_err());
        assert!(parse_round_counts("ACNT\t1\t1\n").is_err());
        assert!(parse_round_counts("ACGT\t1.5\t1\n").is_err());
    }

    #[test]
    fn round_counts_round_trip() {
        let c = parse_round_counts("AACG\t2\t1\nGGGG\t1\t2\n").unwrap();
        assert_eq!(parse_round_counts(&format_round_counts(&c)).unwrap(), c);
    }

    #[test]
    fn matrix_round_trip() {
        let text = format_energy_matrix(&table3());
        assert!(text.starts_with("pos\tA\tC\tG\tT\n1\t-4.722516\t-5.729347\t0.000000\t-6.251779\n"));
        let m = parse_energy_matrix(&text).unwrap();
        assert_eq!(m, table3());
        assert_eq!(m.get(0, 0), -4.722516);
        assert_eq!(format_energy_matrix(&m), text);
    }

    #[test]
    fn matrix_rejects_bad_files() {
        assert!(parse_energy_matrix("pos A C G\n1 0 0 0\n").is_err());
        assert!(matches!(
            parse_energy_matrix("pos A C G T\n1 0 0 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(parse_energy_matrix("pos A C G T\n1 0 x 0 0\n").is_err());
        assert!(parse_energy_matrix("pos A C G T\n2 0 0 0 0\n").is_err());
        assert!(parse_energy_matrix("pos A C G T\n1 0 nan 0 0\n").is_err());
        assert!(parse_energy_matrix("").is_err());
        assert!(parse_energy_matrix("pos A C G T\n").is_err());
    }

    #[test]
    fn peaks_and_regions() {
        let p = parse_peaks("chr1\t100\t5.5\nchr2\t7\t1\n").unwrap();
        assert_eq!(
            p[1],
            Peak {
                contig: "chr2".into(),
                position: 7,
                score: 1.0
            }
        );
        assert!(parse_peaks("chr1\t-3\t1\n").is_err());
        let r = parse_regions("chr1\t10\t20\tcoding\n").unwrap();
        assert_eq!((r[0].start, r[0].end), (10, 20));
        assert!(parse_regions("chr1\t20\t10\tx\n").is_err());
        assert!(parse_regions("chr1\t1\t2\n").is_err());
    }

    #[test]
    fn key_values() {
        let kv = parse_key_values("# c\nseed = 4\nrestarts=50\n").unwrap();
        assert_eq!(kv, vec![("seed".into(), "4".into()), ("restarts".into(), "50".into())]);
        assert!(matches!(
            parse_key_values("seed 4\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_key_values("bad key = 1\n").is_err());
    }
}
