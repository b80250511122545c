use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub name: String,
    pub objective: Option<i64>,
    pub seconds: f64,
    /// `(objective − optimum) / optimum`.
    pub gap: Option<f64>,
    pub error: Option<String>,
}

/// Per-instance results of one strategy plus aggregates over the rows that
/// succeeded.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub strategy: String,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn new(strategy: String, rows: Vec<Row>) -> Self {
        Self { strategy, rows }
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn mean_objective(&self) -> Option<f64> {
        mean(self.rows.iter().filter_map(|r| r.objective.map(|o| o as f64)))
    }

    pub fn mean_seconds(&self) -> Option<f64> {
        mean(self.rows.iter().filter(|r| r.error.is_none()).map(|r| r.seconds))
    }

    pub fn mean_gap(&self) -> Option<f64> {
        mean(self.rows.iter().filter_map(|r| r.gap))
    }

    /// Comma-separated table, one line per instance. Gaps are percentages
    /// with two decimals.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("instance,objective,time_s,gap_pct,error\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{:.6},{},{}",
                csv_field(&r.name),
                r.objective.map(|o| o.to_string()).unwrap_or_default(),
                r.seconds,
                r.gap.map(pct).unwrap_or_default(),
                r.error.as_deref().map(csv_field).unwrap_or_default(),
            );
        }
        s
    }

    /// Human-readable aligned table with a summary line.
    pub fn to_text(&self) -> String {
        let header = ["instance", "objective", "time (s)", "gap (%)", "error"];
        let mut cells: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.name.clone(),
                    r.objective.map(|o| o.to_string()).unwrap_or_else(|| "-".into()),
                    format!("{:.4}", r.seconds),
                    r.gap.map(pct).unwrap_or_else(|| "-".into()),
                    r.error.clone().unwrap_or_default(),
                ]
            })
            .collect();
        let opt = |x: Option<f64>, f: &dyn Fn(f64) -> String| x.map(f).unwrap_or_else(|| "-".into());
        cells.push([
            format!("mean ({} ok, {} failed)", self.rows.len() - self.failures(), self.failures()),
            opt(self.mean_objective(), &|v| format!("{v:.2}")),
            opt(self.mean_seconds(), &|v| format!("{v:.4}")),
            opt(self.mean_gap(), &pct),
            String::new(),
        ]);
        let mut width = header.map(str::len);
        for row in &cells {
            for (w, c) in width.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut s = format!("strategy: {}\n", self.strategy);
        let line = |s: &mut String, row: [&str; 5]| {
            let mut l = format!("{:<w0$}  {:>w1$}  {:>w2$}  {:>w3$}  {}", row[0], row[1], row[2], row[3], row[4], w0 = width[0], w1 = width[1], w2 = width[2], w3 = width[3]);
            l.truncate(l.trim_end().len());
            s.push_str(&l);
            s.push('\n');
        };
        line(&mut s, header);
        let rule: Vec<String> = width.iter().map(|&w| "-".repeat(w)).collect();
        line(&mut s, [&rule[0], &rule[1], &rule[2], &rule[3], &rule[4]]);
        let n = cells.len();
        for (i, row) in cells.iter().enumerate() {
            if i + 1 == n {
                line(&mut s, [&rule[0], &rule[1], &rule[2], &rule[3], ""]);
            }
            line(&mut s, [&row[0], &row[1], &row[2], &row[3], &row[4]]);
        }
        s
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for x in xs {
        sum += x;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

fn pct(g: f64) -> String {
    format!("{:.2}", 100.0 * g)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_owned()
    }
}

/// Known optima, one `NAME VALUE` pair per line (whitespace or comma
/// separated). Blank lines and `#` comments are skipped, as is a first
/// line whose value is not a number.
pub fn read_reference_file<R: BufRead>(input: R) -> Result<BTreeMap<String, i64>> {
    let mut out = BTreeMap::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        let parse_err = |message: String| Error::Parse { line: i + 1, message };
        if fields.len() != 2 {
            return Err(parse_err(format!("expected `NAME VALUE`, got {} fields", fields.len())));
        }
        match fields[1].parse::<i64>() {
            Ok(v) if v > 0 => {
                if out.insert(fields[0].to_owned(), v).is_some() {
                    return Err(parse_err(format!("duplicate reference for `{}`", fields[0])));
                }
            }
            Ok(v) => return Err(parse_err(format!("reference objective {v} is not positive"))),
            Err(_) if out.is_empty() && i == 0 => {}
            Err(_) => return Err(parse_err(format!("`{}` is not an integer objective", fields[1]))),
        }
    }
    Ok(out)
}
