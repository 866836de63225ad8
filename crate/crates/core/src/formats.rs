//! Text file formats for classes and distributions.
//!
//! Class files: first line is the domain size `N`, then one 0/1 string of
//! length `N` per line. Distribution files: first line is the domain size,
//! then one `point label probability` triple per line. Probabilities use
//! Rust's shortest round-trip float formatting, so both formats round-trip
//! bit-exactly. Lines starting with `#` and blank lines are ignored.

use crate::model::{Example, FiniteDistribution, Hypothesis, HypothesisClass};
use crate::{Error, Result};

pub fn write_class(class: &HypothesisClass) -> String {
    let mut out = String::new();
    out.push_str(&class.domain_size().to_string());
    out.push('\n');
    for h in class.members() {
        out.push_str(&h.to_string());
        out.push('\n');
    }
    out
}

pub fn parse_class(text: &str) -> Result<HypothesisClass> {
    let mut lines = content_lines(text);
    let (line_no, first) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "missing domain-size header".into(),
    })?;
    let domain_size: usize = first.parse().map_err(|_| Error::Parse {
        line: line_no,
        msg: format!("invalid domain size `{first}`"),
    })?;
    let mut members = Vec::new();
    for (line_no, line) in lines {
        let h = Hypothesis::parse(line).map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        if h.len() != domain_size {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("bit string length {} != domain size {domain_size}", h.len()),
            });
        }
        members.push(h);
    }
    HypothesisClass::new(domain_size, members)
}

pub fn write_distribution(d: &FiniteDistribution) -> String {
    let mut out = String::new();
    out.push_str(&d.domain_size().to_string());
    out.push('\n');
    for &(e, p) in d.atoms() {
        out.push_str(&format!("{} {} {}\n", e.point.0, e.label as u8, p));
    }
    out
}

pub fn parse_distribution(text: &str) -> Result<FiniteDistribution> {
    let mut lines = content_lines(text);
    let (line_no, first) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "missing domain-size header".into(),
    })?;
    let domain_size: usize = first.parse().map_err(|_| Error::Parse {
        line: line_no,
        msg: format!("invalid domain size `{first}`"),
    })?;
    let mut atoms = Vec::new();
    for (line_no, line) in lines {
        let mut parts = line.split_whitespace();
        let bad = |what: &str| Error::Parse {
            line: line_no,
            msg: format!("expected `point label probability`, bad {what}: `{line}`"),
        };
        let point: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("point"))?;
        let label: u8 = parts
            .next()
            .and_then(|t| t.parse().ok())
            .filter(|&b| b <= 1)
            .ok_or_else(|| bad("label"))?;
        let prob: f64 = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("probability"))?;
        if parts.next().is_some() {
            return Err(bad("trailing field"));
        }
        atoms.push((Example::new(point, label == 1), prob));
    }
    FiniteDistribution::new(domain_size, atoms)
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{median_threshold_distribution, threshold_class};

    #[test]
    fn class_round_trip() {
        let class = threshold_class(5).unwrap();
        let text = write_class(&class);
        assert_eq!(parse_class(&text).unwrap(), class);
        assert_eq!(write_class(&parse_class(&text).unwrap()), text);
    }

    #[test]
    fn distribution_round_trip_is_bit_exact() {
        let d = median_threshold_distribution(7).unwrap();
        let text = write_distribution(&d);
        let back = parse_distribution(&text).unwrap();
        for (&(e, p), &(ee, pp)) in d.atoms().iter().zip(back.atoms()) {
            assert_eq!(e, ee);
            assert_eq!(p.to_bits(), pp.to_bits());
        }
        assert_eq!(write_distribution(&back), text);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_class("3\n01\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_distribution("2\n0 2 0.5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }
}
