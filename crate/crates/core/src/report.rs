//! CSV and Markdown renderings of an [`ErpTable`].
//!
//! CSV rows are one `(cell, level)` pair each. Real numbers are written with
//! 17 significant digits so that reading a file back reproduces the table
//! exactly.

use std::io::{self, Read, Write};

use crate::montecarlo::{ErpCell, ErpKey, ErpTable};
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 12] = [
    "dist", "regressor", "n", "theta0_1", "theta0_2", "scheme", "kappa", "level", "erp", "mc_se", "reps", "failures",
];

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(table: &ErpTable, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for c in &table.cells {
        let k = &c.key;
        w.write_record([
            k.dist.clone(),
            k.regressor.clone(),
            k.n.to_string(),
            real(k.theta0[0]),
            real(k.theta0[1]),
            k.scheme.clone(),
            k.kappa.map(real).unwrap_or_default(),
            real(k.level),
            real(c.erp),
            real(c.mc_se),
            c.reps_completed.to_string(),
            c.failures.to_string(),
        ])?;
    }
    w.flush()
}

pub fn read_csv<R: Read>(input: R) -> Result<ErpTable> {
    let mut r = csv::Reader::from_reader(input);
    let parse_err = |line: usize, message: String| Error::Parse {
        path: "<csv>".into(),
        line,
        message,
    };
    let header = r.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(parse_err(1, format!("unexpected header {header:?}")));
    }
    let mut table = ErpTable::default();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        let field = |j: usize| rec.get(j).unwrap_or_default();
        let num = |j: usize| -> Result<f64> {
            field(j)
                .parse::<f64>()
                .map_err(|_| parse_err(line, format!("column `{}`: `{}` is not a number", CSV_HEADER[j], field(j))))
        };
        let count = |j: usize| -> Result<usize> {
            field(j)
                .parse::<usize>()
                .map_err(|_| parse_err(line, format!("column `{}`: `{}` is not a count", CSV_HEADER[j], field(j))))
        };
        table.cells.push(ErpCell {
            key: ErpKey {
                dist: field(0).to_string(),
                regressor: field(1).to_string(),
                n: count(2)?,
                theta0: [num(3)?, num(4)?],
                scheme: field(5).to_string(),
                kappa: if field(6).is_empty() { None } else { Some(num(6)?) },
                level: num(7)?,
            },
            erp: num(8)?,
            mc_se: num(9)?,
            reps_completed: count(10)?,
            failures: count(11)?,
        });
    }
    Ok(table)
}

fn dist_label(dist: &str) -> &str {
    match dist {
        "iid" => "ξ1",
        "arch(0.7,0.3)" => "ξ2",
        "correlated(0.5)" => "ξ3",
        other => other,
    }
}

fn column_label(scheme: &str, kappa: Option<f64>) -> String {
    match (scheme, kappa) {
        (s, Some(k)) => format!("{s} κ={k:?}"),
        (s, None) => s.into(),
    }
}

fn push_unique<T: PartialEq + Clone>(v: &mut Vec<T>, x: &T) {
    if !v.contains(x) {
        v.push(x.clone());
    }
}

/// One table per (level, regressor, true value): rows are `(dist, n)`,
/// columns the schemes, entries ERPs in percent.
pub fn write_markdown<W: Write>(table: &ErpTable, include_se: bool, mut out: W) -> io::Result<()> {
    let mut levels = Vec::new();
    let mut truths = Vec::new();
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    for c in &table.cells {
        let k = &c.key;
        push_unique(&mut levels, &k.level);
        push_unique(&mut truths, &(k.regressor.clone(), k.theta0));
        push_unique(&mut rows, &(k.dist.clone(), k.n));
        push_unique(&mut cols, &(k.scheme.clone(), k.kappa));
    }
    let mut flagged = false;
    for level in &levels {
        for (regressor, theta0) in &truths {
            let in_block = |k: &ErpKey| k.level == *level && k.regressor == *regressor && k.theta0 == *theta0;
            if !table.cells.iter().any(|c| in_block(&c.key)) {
                continue;
            }
            writeln!(out, "### Level {level:?}, {regressor}, true value ({:?}, {:?})\n", theta0[0], theta0[1])?;
            let header: Vec<String> = cols.iter().map(|(s, k)| column_label(s, *k)).collect();
            writeln!(out, "| dist | n | {} |", header.join(" | "))?;
            writeln!(out, "|---|---|{}", "---|".repeat(cols.len()))?;
            for (dist, n) in &rows {
                let mut line = format!("| {} | {n} |", dist_label(dist));
                let mut any = false;
                for (scheme, kappa) in &cols {
                    let found = table.cells.iter().find(|c| {
                        in_block(&c.key) && c.key.dist == *dist && c.key.n == *n && c.key.scheme == *scheme && c.key.kappa == *kappa
                    });
                    let entry = match found {
                        None => String::new(),
                        Some(c) => {
                            any = true;
                            let mut s = if c.erp.is_nan() { "n/a".to_string() } else { format!("{:.1}", 100.0 * c.erp) };
                            if include_se {
                                s += &format!(" ({:.2})", 100.0 * c.mc_se);
                            }
                            if !c.is_valid() {
                                flagged = true;
                                s.push('*');
                            }
                            s
                        }
                    };
                    line += &format!(" {entry} |");
                }
                if any {
                    writeln!(out, "{line}")?;
                }
            }
            writeln!(out)?;
        }
    }
    if flagged {
        writeln!(out, "\\* more than 0.1% of the replications failed; the entry is unreliable.")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(dist: &str, kappa: Option<f64>, erp: f64) -> ErpCell {
        ErpCell {
            key: ErpKey {
                dist: dist.into(),
                regressor: "unit_root".into(),
                n: 100,
                theta0: [-0.75, 0.75],
                scheme: if kappa.is_some() { "power".into() } else { "standard".into() },
                kappa,
                level: 0.05,
            },
            erp,
            mc_se: (erp * (1.0 - erp) / 2000.0).sqrt(),
            reps_completed: 2000,
            failures: 0,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let table = ErpTable {
            cells: vec![
                cell("arch(0.7,0.3)", None, 0.0415),
                cell("iid", Some(0.1), 1.0 / 3.0),
                cell("iid", Some(2.0), 0.062_000_000_000_000_01),
            ],
        };
        let mut buf = Vec::new();
        write_csv(&table, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dist,regressor,n,theta0_1,theta0_2,scheme,kappa,level,erp,mc_se,reps,failures\n"));
        assert!(text.contains("\"arch(0.7,0.3)\""));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), table);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let bad = "dist,regressor,n,theta0_1,theta0_2,scheme,kappa,level,erp,mc_se,reps,failures\niid,unit_root,x,0,0,standard,,0.05,0.1,0.01,10,0\n";
        match read_csv(bad.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn markdown_layout() {
        let table = ErpTable {
            cells: vec![cell("iid", None, 0.042), cell("iid", Some(0.25), 0.047), cell("iid", Some(1.0), 0.053)],
        };
        let mut buf = Vec::new();
        write_markdown(&table, false, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("| dist | n | standard | power κ=0.25 | power κ=1.0 |"));
        assert!(text.contains("| ξ1 | 100 | 4.2 | 4.7 | 5.3 |"));
    }
}
