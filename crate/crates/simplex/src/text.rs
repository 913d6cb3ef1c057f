//! A small MPS-like text format for inspecting and exchanging LPs.
//!
//! Numbers are written in fixed-point decimal using the shortest digits that
//! round-trip, so reading an exported file reproduces the LP bit for bit.
//!
//! ```text
//! NAME example
//! ROWS
//!  N obj
//!  E e0
//!  L l0
//! COLUMNS
//!  x0 obj -1
//!  x0 e0 1
//! RHS
//!  e0 1
//! ENDATA
//! ```

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::{LpError, Row, SparseLp};

pub fn write_lp(lp: &SparseLp, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME {name}");
    out.push_str("ROWS\n N obj\n");
    for i in 0..lp.n_eq() {
        let _ = writeln!(out, " E e{i}");
    }
    for i in 0..lp.n_le() {
        let _ = writeln!(out, " L l{i}");
    }
    let mut columns: Vec<Vec<(String, f64)>> = vec![Vec::new(); lp.n_vars()];
    for (j, &c) in lp.objective().iter().enumerate() {
        if c != 0.0 {
            columns[j].push(("obj".into(), c));
        }
    }
    for (i, row) in lp.eq_rows().iter().enumerate() {
        for &(j, v) in &row.entries {
            columns[j].push((format!("e{i}"), v));
        }
    }
    for (i, row) in lp.le_rows().iter().enumerate() {
        for &(j, v) in &row.entries {
            columns[j].push((format!("l{i}"), v));
        }
    }
    out.push_str("COLUMNS\n");
    let _ = writeln!(out, " VARS {}", lp.n_vars());
    for (j, col) in columns.iter().enumerate() {
        for (row, v) in col {
            let _ = writeln!(out, " x{j} {row} {v}");
        }
    }
    out.push_str("RHS\n");
    for (i, row) in lp.eq_rows().iter().enumerate() {
        if row.rhs != 0.0 {
            let _ = writeln!(out, " e{i} {}", row.rhs);
        }
    }
    for (i, row) in lp.le_rows().iter().enumerate() {
        if row.rhs != 0.0 {
            let _ = writeln!(out, " l{i} {}", row.rhs);
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[derive(PartialEq)]
enum Section {
    Head,
    Rows,
    Columns,
    Rhs,
    Done,
}

pub fn read_lp(text: &str) -> Result<SparseLp, LpError> {
    let err = |line: usize, msg: &str| LpError::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut section = Section::Head;
    let mut n_eq = 0usize;
    let mut n_le = 0usize;
    let mut n_vars: Option<usize> = None;
    let mut cost: BTreeMap<usize, f64> = BTreeMap::new();
    let mut eq: Vec<BTreeMap<usize, f64>> = Vec::new();
    let mut le: Vec<BTreeMap<usize, f64>> = Vec::new();
    let mut eq_rhs: Vec<f64> = Vec::new();
    let mut le_rhs: Vec<f64> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') {
            section = match tokens[0] {
                "NAME" => Section::Head,
                "ROWS" => Section::Rows,
                "COLUMNS" => {
                    eq = vec![BTreeMap::new(); n_eq];
                    le = vec![BTreeMap::new(); n_le];
                    eq_rhs = vec![0.0; n_eq];
                    le_rhs = vec![0.0; n_le];
                    Section::Columns
                }
                "RHS" => Section::Rhs,
                "ENDATA" => Section::Done,
                other => return Err(err(line, &format!("unknown section {other}"))),
            };
            continue;
        }
        let parse_num = |s: &str| s.parse::<f64>().map_err(|_| err(line, "bad number"));
        let row_ref = |s: &str| -> Result<(char, usize), LpError> {
            let (kind, idx) = s.split_at(1);
            let idx = idx.parse::<usize>().map_err(|_| err(line, "bad row name"))?;
            Ok((kind.chars().next().unwrap_or(' '), idx))
        };
        match section {
            Section::Rows => match tokens.as_slice() {
                ["N", "obj"] => {}
                ["E", _] => n_eq += 1,
                ["L", _] => n_le += 1,
                _ => return Err(err(line, "bad row declaration")),
            },
            Section::Columns => match tokens.as_slice() {
                ["VARS", n] => {
                    n_vars = Some(n.parse().map_err(|_| err(line, "bad variable count"))?)
                }
                [col, row, v] => {
                    let j = col
                        .strip_prefix('x')
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| err(line, "bad column name"))?;
                    let v = parse_num(v)?;
                    let target = if *row == "obj" {
                        &mut cost
                    } else {
                        match row_ref(row)? {
                            ('e', i) if i < n_eq => &mut eq[i],
                            ('l', i) if i < n_le => &mut le[i],
                            _ => return Err(err(line, "unknown row")),
                        }
                    };
                    if target.insert(j, v).is_some() {
                        return Err(err(line, "duplicate entry"));
                    }
                }
                _ => return Err(err(line, "bad column entry")),
            },
            Section::Rhs => match tokens.as_slice() {
                [row, v] => {
                    let v = parse_num(v)?;
                    match row_ref(row)? {
                        ('e', i) if i < n_eq => eq_rhs[i] = v,
                        ('l', i) if i < n_le => le_rhs[i] = v,
                        _ => return Err(err(line, "unknown row")),
                    }
                }
                _ => return Err(err(line, "bad rhs entry")),
            },
            Section::Head | Section::Done => return Err(err(line, "unexpected entry")),
        }
    }
    let n = n_vars.ok_or_else(|| err(0, "missing VARS count"))?;
    let mut lp = SparseLp::new(n);
    for (j, c) in cost {
        lp.set_cost(j, c)?;
    }
    for (row, rhs) in eq.into_iter().zip(eq_rhs) {
        lp.add_eq(Row {
            entries: row.into_iter().collect(),
            rhs,
        })?;
    }
    for (row, rhs) in le.into_iter().zip(le_rhs) {
        lp.add_le(Row {
            entries: row.into_iter().collect(),
            rhs,
        })?;
    }
    Ok(lp)
}
