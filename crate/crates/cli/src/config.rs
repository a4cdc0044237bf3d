//! `key = value` config files that expand into command-line flags.
//!
//! Flags given on the actual command line override file entries; this is
//! implemented by injecting the file's entries as synthetic arguments right
//! after the subcommand token, with last-one-wins parsing.

use anyhow::{bail, Context, Result};
use std::path::Path;

/// Parses a flat config file into (key, value) pairs. Lines are
/// `key = value`; `#` starts a comment; blank lines are skipped.
pub fn parse_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected 'key = value', got {:?}", i + 1, line);
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            bail!("config line {}: empty key or value", i + 1);
        }
        pairs.push((key.to_string(), value.to_string()));
    }
    Ok(pairs)
}

/// Expands `--config <path>` in an argument list by splicing the file's
/// entries in right after the subcommand, so explicit flags (which come
/// later) take precedence under last-one-wins parsing.
pub fn inject_config(args: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = args.iter().position(|a| a == "--config") else {
        return Ok(args);
    };
    let Some(path) = args.get(pos + 1) else {
        bail!("--config requires a path argument");
    };
    let pairs = parse_config_file(Path::new(path))?;
    // the subcommand is the first non-flag token after the program name
    let sub_pos = args
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, a)| !a.starts_with('-'))
        .map(|(i, _)| i)
        .unwrap_or(args.len().saturating_sub(1));
    let mut out: Vec<String> = args[..=sub_pos].to_vec();
    for (key, value) in pairs {
        out.push(format!("--{key}"));
        out.push(value);
    }
    out.extend_from_slice(&args[sub_pos + 1..]);
    Ok(out)
}

/// Parses a comma-separated list of values.
pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for tok in text.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        match tok.parse::<T>() {
            Ok(v) => out.push(v),
            Err(_) => bail!("cannot parse {what} entry {tok:?}"),
        }
    }
    if out.is_empty() {
        bail!("{what} list is empty");
    }
    Ok(out)
}

/// Parses `lo:hi` into an inclusive range.
pub fn parse_range(text: &str) -> Result<(usize, usize)> {
    let Some((lo, hi)) = text.split_once(':') else {
        bail!("expected lo:hi, got {text:?}");
    };
    let lo: usize = lo.trim().parse().context("range start")?;
    let hi: usize = hi.trim().parse().context("range end")?;
    if lo == 0 || hi < lo {
        bail!("invalid range {lo}:{hi}");
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn file_entries_expand_before_explicit_flags() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# comment\nn = 100\ntrials = 5  # inline").unwrap();
        let args: Vec<String> = [
            "rankbench",
            "gap-vs-m",
            "--config",
            f.path().to_str().unwrap(),
            "--n",
            "200",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let out = inject_config(args).unwrap();
        // injected entries sit between the subcommand and the explicit flags
        let n_positions: Vec<usize> =
            out.iter().enumerate().filter(|(_, a)| *a == "--n").map(|(i, _)| i).collect();
        assert_eq!(n_positions.len(), 2);
        assert_eq!(out[n_positions[0] + 1], "100");
        assert_eq!(out[n_positions[1] + 1], "200");
        assert!(n_positions[0] < n_positions[1]);
    }

    #[test]
    fn list_and_range_parsing() {
        assert_eq!(parse_list::<usize>("5,25,125", "m").unwrap(), vec![5, 25, 125]);
        assert!(parse_list::<usize>("", "m").is_err());
        assert_eq!(parse_range("2:64").unwrap(), (2, 64));
        assert!(parse_range("8:2").is_err());
    }
}
