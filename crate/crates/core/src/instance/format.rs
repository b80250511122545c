//! Canonical line-oriented instance format.
//!
//! ```text
//! TPP 1
//! VARIANT U|R
//! MARKETS <m>
//! PRODUCTS <k>
//! LAMBDA <x>               (restricted instances with a known lambda)
//! ROUNDING NEAREST         (only when distances are not floored)
//! DEPOT <x> <y>
//! MARKET <i> <x> <y>       (i = 1..m, in order)
//! DEMAND <k> <d>           (k = 0..k-1, in order)
//! OFFER <i> <k> <p> <q>    (ascending by (i, k))
//! EOF
//! ```
//!
//! Fields are separated by single spaces and lines end in `\n`. Market
//! indices are node indices (the depot is node 0), product indices start at
//! 0. The reader accepts any run of spaces or tabs between fields.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::model::{Offer, Point, Rounding, TppInstance, Variant};

pub const MAGIC: &str = "TPP";
pub const VERSION: u32 = 1;

pub fn write_instance<W: Write>(inst: &TppInstance, mut out: W) -> Result<()> {
    writeln!(out, "{MAGIC} {VERSION}")?;
    writeln!(out, "VARIANT {}", inst.variant().code())?;
    writeln!(out, "MARKETS {}", inst.num_markets())?;
    writeln!(out, "PRODUCTS {}", inst.num_products())?;
    if let Some(l) = inst.lambda() {
        writeln!(out, "LAMBDA {l}")?;
    }
    if inst.rounding() == Rounding::Nearest {
        writeln!(out, "ROUNDING NEAREST")?;
    }
    let d = inst.depot();
    writeln!(out, "DEPOT {} {}", d.x, d.y)?;
    for (i, p) in inst.markets().iter().enumerate() {
        writeln!(out, "MARKET {} {} {}", i + 1, p.x, p.y)?;
    }
    for (k, d) in inst.demands().iter().enumerate() {
        writeln!(out, "DEMAND {k} {d}")?;
    }
    for (&(i, k), o) in inst.offers() {
        writeln!(out, "OFFER {i} {k} {} {}", o.price, o.quantity)?;
    }
    writeln!(out, "EOF")?;
    Ok(())
}

pub fn to_string(inst: &TppInstance) -> String {
    let mut buf = Vec::new();
    write_instance(inst, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub fn read_instance<R: BufRead>(input: R) -> Result<TppInstance> {
    let mut lines = Lines { inner: input.lines(), line: 0 };

    let head = lines.expect_record("header")?;
    if head.fields != [MAGIC, &VERSION.to_string()] {
        return Err(Error::Parse { line: head.line, message: format!("expected `{MAGIC} {VERSION}`") });
    }
    let variant = match lines.expect_keyword("VARIANT")?.one()? {
        "U" => Variant::Unrestricted,
        "R" => Variant::Restricted,
        other => return Err(Error::Parse { line: lines.line, message: format!("unknown variant `{other}`") }),
    };
    let m: usize = lines.expect_keyword("MARKETS")?.parse_one()?;
    let k: usize = lines.expect_keyword("PRODUCTS")?.parse_one()?;

    let mut rec = lines.expect_record("DEPOT")?;
    let mut lambda = None;
    if rec.keyword() == "LAMBDA" {
        lambda = Some(rec.parse_one::<f64>()?);
        rec = lines.expect_record("DEPOT")?;
    }
    let mut rounding = Rounding::Floor;
    if rec.keyword() == "ROUNDING" {
        rounding = match rec.one()? {
            "NEAREST" => Rounding::Nearest,
            "FLOOR" => Rounding::Floor,
            other => return Err(Error::Parse { line: rec.line, message: format!("unknown rounding `{other}`") }),
        };
        rec = lines.expect_record("DEPOT")?;
    }
    rec.require("DEPOT")?;
    let [x, y] = rec.parse_n::<i64, 2>()?;
    let depot = Point::new(x, y);

    let mut markets = Vec::with_capacity(m);
    for expect in 1..=m {
        let rec = lines.expect_keyword("MARKET")?;
        let [i, x, y] = rec.parse_n::<i64, 3>()?;
        if i != expect as i64 {
            return Err(Error::Structure(format!("line {}: market {i} out of order, expected {expect}", rec.line)));
        }
        markets.push(Point::new(x, y));
    }
    let mut demands = Vec::with_capacity(k);
    for expect in 0..k {
        let rec = lines.expect_keyword("DEMAND")?;
        let [p, d] = rec.parse_n::<i64, 2>()?;
        if p != expect as i64 {
            return Err(Error::Structure(format!("line {}: demand for product {p} out of order, expected {expect}", rec.line)));
        }
        demands.push(d);
    }
    let mut offers = BTreeMap::new();
    loop {
        let rec = lines.expect_record("OFFER or EOF")?;
        match rec.keyword() {
            "EOF" => break,
            "OFFER" => {
                let [i, p, price, q] = rec.parse_n::<i64, 4>()?;
                if i < 1 || i as usize > m || p < 0 || p as usize >= k {
                    return Err(Error::Structure(format!("line {}: offer ({i},{p}) outside {m} markets / {k} products", rec.line)));
                }
                if offers.insert((i as usize, p as usize), Offer::new(price, q)).is_some() {
                    return Err(Error::Structure(format!("line {}: duplicate offer ({i},{p})", rec.line)));
                }
            }
            other => return Err(Error::Parse { line: rec.line, message: format!("unexpected `{other}`") }),
        }
    }
    if let Some(extra) = lines.next_record()? {
        return Err(Error::Parse { line: extra.line, message: "content after EOF".into() });
    }
    Ok(TppInstance::with_rounding(depot, markets, demands, offers, variant, lambda, rounding))
}

pub fn from_str(text: &str) -> Result<TppInstance> {
    read_instance(text.as_bytes())
}

struct Lines<I> {
    inner: I,
    line: usize,
}

struct Record {
    line: usize,
    fields: Vec<String>,
}

impl Record {
    fn keyword(&self) -> &str {
        &self.fields[0]
    }

    fn require(&self, kw: &str) -> Result<()> {
        if self.keyword() == kw {
            Ok(())
        } else {
            Err(Error::Parse { line: self.line, message: format!("expected `{kw}`, found `{}`", self.keyword()) })
        }
    }

    fn one(&self) -> Result<&str> {
        match self.fields.len() {
            2 => Ok(&self.fields[1]),
            n => Err(Error::Parse { line: self.line, message: format!("`{}` takes 1 value, found {}", self.keyword(), n - 1) }),
        }
    }

    fn parse_one<T: std::str::FromStr>(&self) -> Result<T> {
        let s = self.one()?;
        s.parse().map_err(|_| Error::Parse { line: self.line, message: format!("bad number `{s}`") })
    }

    fn parse_n<T: std::str::FromStr + Copy + Default, const N: usize>(&self) -> Result<[T; N]> {
        if self.fields.len() != N + 1 {
            return Err(Error::Parse {
                line: self.line,
                message: format!("`{}` takes {N} values, found {}", self.keyword(), self.fields.len() - 1),
            });
        }
        let mut out = [T::default(); N];
        for (slot, s) in out.iter_mut().zip(&self.fields[1..]) {
            *slot = s.parse().map_err(|_| Error::Parse { line: self.line, message: format!("bad number `{s}`") })?;
        }
        Ok(out)
    }
}

impl<I: Iterator<Item = std::io::Result<String>>> Lines<I> {
    fn next_record(&mut self) -> Result<Option<Record>> {
        for text in self.inner.by_ref() {
            let text = text?;
            self.line += 1;
            let fields: Vec<String> = text.split_whitespace().map(str::to_owned).collect();
            if !fields.is_empty() {
                return Ok(Some(Record { line: self.line, fields }));
            }
        }
        Ok(None)
    }

    fn expect_record(&mut self, what: &str) -> Result<Record> {
        let last = self.line;
        self.next_record()?.ok_or_else(|| Error::Parse {
            line: last,
            message: format!("input ends after line {last}, expected {what}"),
        })
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<Record> {
        let rec = self.expect_record(kw)?;
        rec.require(kw)?;
        Ok(rec)
    }
}
