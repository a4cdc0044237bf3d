//! SVMlight/LETOR-style ranking file ingestion and serialization.
//!
//! Line format: `<rel> qid:<id> <idx>:<val> ... [# comment]` with 1-based
//! feature indices. Documents are grouped by query id (queries ordered by
//! first appearance); the dense dimension is the largest index seen anywhere
//! in the file, with missing indices filled as zero.

use crate::data::{Dataset, QueryInstance};
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::io::{BufRead, Write};

/// One parsed document line.
#[derive(Debug, Clone, PartialEq)]
pub struct LetorRecord {
    pub relevance: i64,
    pub query_id: String,
    /// 1-based sparse features.
    pub features: Vec<(usize, f64)>,
}

/// A parsed corpus: the dense dataset plus the query id of each instance.
#[derive(Debug, Clone, PartialEq)]
pub struct LetorData {
    pub dataset: Dataset,
    pub query_ids: Vec<String>,
}

fn parse_line(line_no: usize, raw: &str) -> Result<Option<LetorRecord>> {
    let line = match raw.find('#') {
        Some(pos) => &raw[..pos],
        None => raw,
    };
    let line = line.trim();
    if line.is_empty() {
        return Ok(None);
    }
    let mut tokens = line.split_whitespace();
    let rel_tok = tokens.next().unwrap();
    let relevance: i64 = rel_tok.parse().map_err(|_| Error::Parse {
        line: line_no,
        msg: format!("relevance must be an integer, got {rel_tok:?}"),
    })?;
    if relevance < 0 {
        return Err(Error::Parse {
            line: line_no,
            msg: format!("relevance must be >= 0, got {relevance}"),
        });
    }
    let qid_tok = tokens.next().ok_or(Error::Parse {
        line: line_no,
        msg: "missing qid token".into(),
    })?;
    let query_id = qid_tok
        .strip_prefix("qid:")
        .filter(|id| !id.is_empty())
        .ok_or(Error::Parse {
            line: line_no,
            msg: format!("expected qid:<id>, got {qid_tok:?}"),
        })?
        .to_string();
    let mut features = Vec::new();
    let mut seen = HashMap::new();
    for tok in tokens {
        let (idx_str, val_str) = tok.split_once(':').ok_or(Error::Parse {
            line: line_no,
            msg: format!("expected <index>:<value>, got {tok:?}"),
        })?;
        let idx: usize = idx_str.parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("feature index must be a positive integer, got {idx_str:?}"),
        })?;
        if idx == 0 {
            return Err(Error::Parse {
                line: line_no,
                msg: "feature indices are 1-based".into(),
            });
        }
        let val: f64 = val_str.parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("feature value must be a number, got {val_str:?}"),
        })?;
        if !val.is_finite() {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("feature value must be finite, got {val}"),
            });
        }
        if seen.insert(idx, ()).is_some() {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("duplicate feature index {idx}"),
            });
        }
        features.push((idx, val));
    }
    Ok(Some(LetorRecord { relevance, query_id, features }))
}

/// Parses a LETOR stream into a dense dataset with query grouping.
pub fn parse_letor<R: BufRead>(reader: R) -> Result<LetorData> {
    // pass 1: records + global dimension
    let mut records = Vec::new();
    let mut d = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        if let Some(rec) = parse_line(i + 1, &line)? {
            for (idx, _) in &rec.features {
                d = d.max(*idx);
            }
            records.push(rec);
        }
    }
    if records.is_empty() {
        return Err(Error::Empty("no document lines found".into()));
    }
    if d == 0 {
        return Err(Error::Empty("no feature indices found".into()));
    }

    // pass 2: group by qid in first-appearance order
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<&LetorRecord>> = HashMap::new();
    for rec in &records {
        groups.entry(rec.query_id.clone()).or_insert_with(|| {
            order.push(rec.query_id.clone());
            Vec::new()
        });
        groups.get_mut(&rec.query_id).unwrap().push(rec);
    }

    let mut instances = Vec::with_capacity(order.len());
    for qid in &order {
        let docs = &groups[qid];
        let mut rows = Vec::with_capacity(docs.len());
        let mut labels = Vec::with_capacity(docs.len());
        for rec in docs {
            let mut row = vec![0.0; d];
            for (idx, val) in &rec.features {
                row[idx - 1] = *val;
            }
            rows.push(row);
            labels.push(rec.relevance as f64);
        }
        instances.push(QueryInstance::from_rows(rows, labels)?);
    }
    Ok(LetorData { dataset: Dataset::new(instances)?, query_ids: order })
}

/// Serializes a dataset in the same format: integer relevance, features in
/// ascending index order at 9 fractional digits of scientific notation.
/// Query ids default to 1-based instance numbers when not supplied.
pub fn serialize_letor<W: Write>(
    dataset: &Dataset,
    query_ids: Option<&[String]>,
    out: &mut W,
) -> Result<()> {
    if let Some(ids) = query_ids {
        if ids.len() != dataset.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} query ids for {} instances",
                ids.len(),
                dataset.len()
            )));
        }
    }
    for (i, inst) in dataset.iter().enumerate() {
        let qid = match query_ids {
            Some(ids) => ids[i].clone(),
            None => (i + 1).to_string(),
        };
        for (row, label) in inst.rows().zip(inst.labels()) {
            let rel = label.round();
            if (rel - label).abs() > 1e-9 || rel < 0.0 {
                return Err(Error::InvalidParam(format!(
                    "relevance {label} is not a nonnegative integer"
                )));
            }
            let mut line = format!("{} qid:{qid}", rel as i64);
            for (j, val) in row.iter().enumerate() {
                line.push_str(&format!(" {}:{:.9e}", j + 1, val));
            }
            line.push('\n');
            out.write_all(line.as_bytes())
                .map_err(|e| Error::InvalidParam(format!("write failed: {e}")))?;
        }
    }
    Ok(())
}
