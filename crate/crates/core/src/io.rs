//! Dataset ingestion and export: headered CSV and a small ARFF subset.
//!
//! CSV: comma separated, first row is the header, one column holds class
//! names. ARFF: `@relation`, `@attribute <name> numeric`, exactly one nominal
//! `@attribute <name> {a,b,...}` holding the class, then `@data`. Lines
//! starting with `%` and blank lines are ignored.
//!
//! Loader errors carry 1-based line and column coordinates.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dataset::{infer_task_mode, TaskMode, TraceDataset};
use crate::error::{Error, Result};
use crate::label::ClassLabel;

pub const DEFAULT_LABEL_COLUMN: &str = "class";

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<TraceDataset> {
    parse_csv(&read_to_string(path.as_ref())?, label_column)
}

pub fn load_arff(path: impl AsRef<Path>) -> Result<TraceDataset> {
    parse_arff(&read_to_string(path.as_ref())?)
}

/// Loads by extension: `.arff` is ARFF, anything else CSV with a `class` column.
pub fn load_any(path: impl AsRef<Path>) -> Result<TraceDataset> {
    let path = path.as_ref();
    if is_arff(path) {
        load_arff(path)
    } else {
        load_csv(path, DEFAULT_LABEL_COLUMN)
    }
}

pub fn save_any(data: &TraceDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = if is_arff(path) {
        write_arff(data, "hpc_traces")
    } else {
        write_csv(data)
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn is_arff(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("arff"))
}

fn valid_feature_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn parse_value(cell: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, column, format!("not a number: {cell:?}")))?;
    if !v.is_finite() || v < 0.0 {
        return Err(Error::parse(
            line,
            column,
            format!("value {cell:?} is not a finite non-negative number"),
        ));
    }
    Ok(v)
}

fn parse_label(cell: &str, line: usize, column: usize) -> Result<ClassLabel> {
    cell.parse()
        .map_err(|_| Error::parse(line, column, format!("unknown label {:?}", cell.trim())))
}

pub fn parse_csv(text: &str, label_column: &str) -> Result<TraceDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let header = reader
        .headers()
        .map_err(|e| Error::parse(1, 1, e.to_string()))?
        .clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::parse(1, 1, "missing header row"));
    }
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::LabelColumnNotFound(label_column.to_string()))?;

    let mut feature_names = Vec::with_capacity(header.len() - 1);
    for (c, name) in header.iter().enumerate() {
        if c == label_idx {
            continue;
        }
        if !valid_feature_name(name) {
            return Err(Error::parse(1, c + 1, format!("invalid feature name {name:?}")));
        }
        if feature_names.iter().any(|n| n == name) {
            return Err(Error::parse(1, c + 1, format!("duplicate feature name {name:?}")));
        }
        feature_names.push(name.to_string());
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(line, 1, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != header.len() {
            return Err(Error::parse(
                line,
                record.len().min(header.len()) + 1,
                format!("ragged row: {} cells, header has {}", record.len(), header.len()),
            ));
        }
        for (c, cell) in record.iter().enumerate() {
            if c == label_idx {
                labels.push(parse_label(cell, line, c + 1)?);
            } else {
                values.push(parse_value(cell, line, c + 1)?);
            }
        }
    }

    let mode = infer_task_mode(&labels)?;
    TraceDataset::from_parts(feature_names, values, labels, mode)
}

pub fn write_csv(data: &TraceDataset) -> String {
    let mut out = String::new();
    for name in data.feature_names() {
        out.push_str(name);
        out.push(',');
    }
    out.push_str(DEFAULT_LABEL_COLUMN);
    out.push('\n');
    for (row, label) in data.rows().zip(data.labels()) {
        for v in row {
            let _ = write!(out, "{v},");
        }
        out.push_str(label.name());
        out.push('\n');
    }
    out
}

enum AttrType {
    Numeric,
    Nominal(Vec<ClassLabel>),
}

fn strip_quotes(s: &str) -> &str {
    let s = s.trim();
    if s.len() >= 2
        && ((s.starts_with('\'') && s.ends_with('\'')) || (s.starts_with('"') && s.ends_with('"')))
    {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

fn directive<'a>(line: &'a str, keyword: &str) -> Option<&'a str> {
    let head = line.get(..keyword.len())?;
    if !head.eq_ignore_ascii_case(keyword) {
        return None;
    }
    let rest = &line[keyword.len()..];
    if rest.is_empty() || rest.starts_with(char::is_whitespace) {
        Some(rest.trim())
    } else {
        None
    }
}

fn parse_attribute(rest: &str, line_no: usize) -> Result<(String, AttrType)> {
    let (name, ty) = if let Some(stripped) = rest.strip_prefix('\'') {
        let end = stripped
            .find('\'')
            .ok_or_else(|| Error::parse(line_no, 1, "unterminated quoted attribute name"))?;
        (&stripped[..end], stripped[end + 1..].trim())
    } else {
        let mut parts = rest.splitn(2, char::is_whitespace);
        let name = parts.next().unwrap_or("");
        (name, parts.next().unwrap_or("").trim())
    };
    if name.is_empty() || ty.is_empty() {
        return Err(Error::parse(line_no, 1, "malformed @attribute directive"));
    }
    let ty_lower = ty.to_ascii_lowercase();
    let attr = if matches!(ty_lower.as_str(), "numeric" | "real" | "integer") {
        AttrType::Numeric
    } else if ty.starts_with('{') && ty.ends_with('}') {
        let mut declared = Vec::new();
        for v in ty[1..ty.len() - 1].split(',') {
            let v = strip_quotes(v);
            let label = v
                .parse::<ClassLabel>()
                .map_err(|_| Error::parse(line_no, 1, format!("unknown class value {v:?}")))?;
            declared.push(label);
        }
        AttrType::Nominal(declared)
    } else {
        return Err(Error::parse(
            line_no,
            1,
            format!("unsupported attribute type {ty:?}"),
        ));
    };
    Ok((name.to_string(), attr))
}

pub fn parse_arff(text: &str) -> Result<TraceDataset> {
    let mut relation = false;
    let mut attrs: Vec<(String, AttrType)> = Vec::new();
    let mut data_start = None;
    let mut last_line = 0;

    let mut lines = text.lines().enumerate();
    for (i, raw) in lines.by_ref() {
        let line_no = i + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if let Some(rest) = directive(line, "@relation") {
            if rest.is_empty() {
                return Err(Error::parse(line_no, 1, "@relation without a name"));
            }
            relation = true;
        } else if let Some(rest) = directive(line, "@attribute") {
            if !relation {
                return Err(Error::parse(line_no, 1, "@attribute before @relation"));
            }
            attrs.push(parse_attribute(rest, line_no)?);
        } else if directive(line, "@data").is_some() {
            data_start = Some(line_no);
            break;
        } else {
            return Err(Error::parse(line_no, 1, format!("malformed directive {line:?}")));
        }
    }

    if !relation {
        return Err(Error::parse(last_line.max(1), 1, "missing @relation section"));
    }
    if data_start.is_none() {
        return Err(Error::parse(last_line.max(1), 1, "missing @data section"));
    }
    let nominal: Vec<usize> = attrs
        .iter()
        .enumerate()
        .filter(|(_, (_, t))| matches!(t, AttrType::Nominal(_)))
        .map(|(i, _)| i)
        .collect();
    let class_idx = match nominal.as_slice() {
        [i] => *i,
        [] => return Err(Error::parse(last_line, 1, "no nominal class attribute declared")),
        _ => {
            return Err(Error::parse(
                last_line,
                1,
                "more than one nominal attribute declared",
            ))
        }
    };
    let declared = match &attrs[class_idx].1 {
        AttrType::Nominal(v) => v.clone(),
        AttrType::Numeric => unreachable!(),
    };
    let mut feature_names = Vec::new();
    for (i, (name, _)) in attrs.iter().enumerate() {
        if i == class_idx {
            continue;
        }
        if feature_names.contains(name) {
            return Err(Error::parse(1, 1, format!("duplicate attribute {name:?}")));
        }
        if name.is_empty() {
            return Err(Error::parse(1, 1, "empty attribute name"));
        }
        feature_names.push(name.clone());
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, raw) in lines {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != attrs.len() {
            return Err(Error::parse(
                line_no,
                cells.len().min(attrs.len()) + 1,
                format!("expected {} values, found {}", attrs.len(), cells.len()),
            ));
        }
        for (c, cell) in cells.iter().enumerate() {
            if c == class_idx {
                let label = parse_label(strip_quotes(cell), line_no, c + 1)?;
                if !declared.contains(&label) {
                    return Err(Error::parse(
                        line_no,
                        c + 1,
                        format!("nominal value {:?} outside declared set", cell.trim()),
                    ));
                }
                labels.push(label);
            } else {
                values.push(parse_value(cell, line_no, c + 1)?);
            }
        }
    }

    let mode = infer_task_mode(&labels)?;
    TraceDataset::from_parts(feature_names, values, labels, mode)
}

pub fn write_arff(data: &TraceDataset, relation: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "@relation {relation}");
    out.push('\n');
    for name in data.feature_names() {
        let _ = writeln!(out, "@attribute {name} numeric");
    }
    let declared: &[ClassLabel] = match data.task_mode() {
        TaskMode::Binary => &ClassLabel::BINARY,
        TaskMode::Multiclass => &ClassLabel::MULTICLASS,
    };
    let names: Vec<&str> = declared.iter().map(|l| l.name()).collect();
    let _ = writeln!(out, "@attribute class {{{}}}", names.join(","));
    out.push_str("\n@data\n");
    for (row, label) in data.rows().zip(data.labels()) {
        for v in row {
            let _ = write!(out, "{v},");
        }
        out.push_str(label.name());
        out.push('\n');
    }
    out
}
