//! Best-effort reader for TPPLIB Euclidean instance files.
//!
//! The reader understands the TSPLIB-style layout used by the `EEuclideo`
//! (uncapacitated) and `CapEuclideo` (capacitated) classes:
//!
//! ```text
//! NAME : CapEuclideo.50.100.95.1
//! TYPE : TPP
//! DIMENSION : 51
//! EDGE_WEIGHT_TYPE : EUC_2D
//! NODE_COORD_SECTION
//! 1 x y                      (node 1 is the depot)
//! ...
//! DEMAND_SECTION
//! <number of products>
//! <product> <demand>
//! ...
//! OFFER_SECTION
//! <node> <count> [<product> <price> <quantity>]*count
//! ...
//! EOF
//! ```
//!
//! Tolerances: `#` and `COMMENT` lines are skipped, keys may use `:` with or
//! without spaces, fields may be separated by spaces or tabs, offers may be
//! `(product, price)` pairs (quantity then equals the demand), and a missing
//! `DEMAND_SECTION` means unit demands. Product numbering is detected: if no
//! product `0` appears anywhere the file is taken as 1-based. The choices
//! made are returned in an [`ImportReport`].

use std::collections::BTreeMap;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::model::{Offer, Point, Rounding, TppInstance, Variant};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductIndexing {
    ZeroBased,
    OneBased,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OfferLayout {
    /// `product price quantity`
    Triples,
    /// `product price`; quantity set to the demand
    Pairs,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImportReport {
    pub name: Option<String>,
    pub product_indexing: ProductIndexing,
    pub offer_layout: OfferLayout,
    /// Unrestricted offers whose listed quantity differed from the demand.
    pub quantities_overridden: usize,
    pub lambda_from_name: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ImportOptions {
    pub rounding: Rounding,
}

pub fn import_tpplib<R: BufRead>(source: R) -> Result<TppInstance> {
    import_tpplib_with(source, ImportOptions::default()).map(|(inst, _)| inst)
}

pub fn import_tpplib_with<R: BufRead>(source: R, opts: ImportOptions) -> Result<(TppInstance, ImportReport)> {
    let mut name = None;
    let mut dimension: Option<usize> = None;
    let mut coords: Vec<(usize, f64, f64)> = Vec::new();
    let mut demand_rows: Vec<(usize, Vec<i64>)> = Vec::new();
    let mut offer_rows: Vec<(usize, Vec<i64>)> = Vec::new();
    let mut section = Section::Header;
    let mut saw_anything = false;

    for (lineno, line) in source.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let upper = trimmed.to_ascii_uppercase();
        if upper.starts_with("COMMENT") {
            continue;
        }
        saw_anything = true;
        // a missing EOF marker is tolerated
        if upper == "EOF" {
            break;
        }
        // a keyword line starts with a letter; data lines with a digit or sign
        let first = trimmed.chars().next().unwrap();
        if first.is_ascii_alphabetic() {
            let (key, value) = match trimmed.split_once(':') {
                Some((k, v)) => (k.trim().to_ascii_uppercase(), v.trim().to_string()),
                None => {
                    let mut it = trimmed.splitn(2, char::is_whitespace);
                    (it.next().unwrap().to_ascii_uppercase(), it.next().unwrap_or("").trim().to_string())
                }
            };
            section = match key.as_str() {
                "NAME" => {
                    name = Some(value);
                    Section::Header
                }
                "TYPE" | "DISPLAY_DATA_TYPE" | "EDGE_WEIGHT_TYPE" | "CAPACITY" => Section::Header,
                "DIMENSION" => {
                    dimension = Some(value.parse().map_err(|_| Error::Parse {
                        line: lineno,
                        message: format!("bad DIMENSION `{value}`"),
                    })?);
                    Section::Header
                }
                "NODE_COORD_SECTION" => Section::Coords,
                "DEMAND_SECTION" => Section::Demands,
                "OFFER_SECTION" => Section::Offers,
                other => return Err(Error::UnsupportedFormat(format!("line {lineno}: unknown keyword `{other}`"))),
            };
            continue;
        }
        let nums = parse_numbers(trimmed, lineno)?;
        match section {
            Section::Header => {
                return Err(Error::Parse { line: lineno, message: "data outside of a section".into() });
            }
            Section::Coords => {
                if nums.len() < 3 {
                    return Err(Error::Parse { line: lineno, message: "coordinate line needs `id x y`".into() });
                }
                coords.push((nums[0] as usize, nums[1], nums[2]));
            }
            Section::Demands => demand_rows.push((lineno, to_ints(&nums, lineno)?)),
            Section::Offers => offer_rows.push((lineno, to_ints(&nums, lineno)?)),
        }
    }
    if !saw_anything {
        return Err(Error::UnsupportedFormat("empty file".into()));
    }
    if coords.is_empty() {
        return Err(Error::UnsupportedFormat("no NODE_COORD_SECTION".into()));
    }
    if let Some(d) = dimension {
        if d != coords.len() {
            return Err(Error::Structure(format!("DIMENSION {d} but {} coordinates", coords.len())));
        }
    }
    coords.sort_by_key(|c| c.0);
    let base_node = coords[0].0;
    for (j, c) in coords.iter().enumerate() {
        if c.0 != base_node + j {
            return Err(Error::Structure(format!("node ids not consecutive at {}", c.0)));
        }
    }
    let to_point = |c: &(usize, f64, f64)| Point::new(c.1.round() as i64, c.2.round() as i64);
    let depot = to_point(&coords[0]);
    let markets: Vec<Point> = coords[1..].iter().map(to_point).collect();
    let m = markets.len();

    // demand rows: optional leading count line, then `product demand`
    let mut demand_pairs: Vec<(i64, i64, usize)> = Vec::new();
    let mut declared_products = None;
    for (lineno, row) in &demand_rows {
        match row.len() {
            1 if declared_products.is_none() && demand_pairs.is_empty() => declared_products = Some(row[0] as usize),
            2 => demand_pairs.push((row[0], row[1], *lineno)),
            _ => return Err(Error::Parse { line: *lineno, message: "demand line needs `product demand`".into() }),
        }
    }

    // offers: `node count (...)*count`
    let mut raw_offers: Vec<(usize, i64, i64, Option<i64>, usize)> = Vec::new();
    let mut layout = None;
    for (lineno, row) in &offer_rows {
        if row.len() < 2 {
            return Err(Error::Parse { line: *lineno, message: "offer line needs `node count ...`".into() });
        }
        let node = row[0];
        let count = row[1] as usize;
        let rest = &row[2..];
        let this = if rest.len() == 3 * count {
            OfferLayout::Triples
        } else if rest.len() == 2 * count {
            OfferLayout::Pairs
        } else {
            return Err(Error::Parse { line: *lineno, message: format!("{} values for {count} offers", rest.len()) });
        };
        if count > 0 {
            match layout {
                None => layout = Some(this),
                Some(l) if l != this => {
                    return Err(Error::Parse { line: *lineno, message: "offer layout changes within the file".into() })
                }
                _ => {}
            }
        }
        let market = node - base_node as i64;
        if market == 0 {
            if count > 0 {
                return Err(Error::Structure(format!("line {lineno}: the depot cannot sell products")));
            }
            continue;
        }
        if market < 1 || market as usize > m {
            return Err(Error::Structure(format!("line {lineno}: offer at unknown node {node}")));
        }
        let width = if this == OfferLayout::Triples { 3 } else { 2 };
        for chunk in rest.chunks(width) {
            let q = (width == 3).then(|| chunk[2]);
            raw_offers.push((market as usize, chunk[0], chunk[1], q, *lineno));
        }
    }
    let layout = layout.unwrap_or(OfferLayout::Triples);

    let zero_based = demand_pairs.iter().any(|d| d.0 == 0) || raw_offers.iter().any(|o| o.1 == 0);
    let indexing = if zero_based { ProductIndexing::ZeroBased } else { ProductIndexing::OneBased };
    let shift = if zero_based { 0 } else { 1 };

    let num_products = declared_products
        .or_else(|| (!demand_pairs.is_empty()).then_some(demand_pairs.len()))
        .unwrap_or_else(|| raw_offers.iter().map(|o| (o.1 - shift + 1) as usize).max().unwrap_or(0));
    let mut demands = vec![if demand_pairs.is_empty() { 1 } else { 0 }; num_products];
    for &(p, d, lineno) in &demand_pairs {
        let k = p - shift;
        if k < 0 || k as usize >= num_products {
            return Err(Error::Structure(format!("line {lineno}: demand for unknown product {p}")));
        }
        demands[k as usize] = d;
    }

    let lambda_from_name = name.as_deref().and_then(lambda_from_name);
    let capacitated_name = name.as_deref().map(|n| n.to_ascii_lowercase().starts_with("cap")).unwrap_or(false);
    let all_full = raw_offers.iter().all(|o| {
        let k = (o.1 - shift) as usize;
        o.3.map_or(true, |q| k < num_products && q == demands[k])
    });
    let variant = if capacitated_name || !all_full { Variant::Restricted } else { Variant::Unrestricted };

    let mut offers = BTreeMap::new();
    let mut overridden = 0;
    for (market, p, price, q, lineno) in raw_offers {
        let k = p - shift;
        if k < 0 || k as usize >= num_products {
            return Err(Error::Structure(format!("line {lineno}: offer of unknown product {p}")));
        }
        let k = k as usize;
        let quantity = match (variant, q) {
            (Variant::Unrestricted, Some(q)) if q != demands[k] => {
                overridden += 1;
                demands[k]
            }
            (_, Some(q)) => q,
            (_, None) => demands[k],
        };
        if offers.insert((market, k), Offer::new(price, quantity)).is_some() {
            return Err(Error::Structure(format!("line {lineno}: duplicate offer of product {p} at market {market}")));
        }
    }

    let lambda = match variant {
        Variant::Restricted => lambda_from_name,
        Variant::Unrestricted => None,
    };
    let inst = TppInstance::with_rounding(depot, markets, demands, offers, variant, lambda, opts.rounding);
    inst.ensure_valid()?;
    Ok((
        inst,
        ImportReport {
            name,
            product_indexing: indexing,
            offer_layout: layout,
            quantities_overridden: overridden,
            lambda_from_name,
        },
    ))
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Header,
    Coords,
    Demands,
    Offers,
}

fn parse_numbers(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| Error::Parse { line: lineno, message: format!("bad number `{t}`") }))
        .collect()
}

fn to_ints(nums: &[f64], lineno: usize) -> Result<Vec<i64>> {
    nums.iter()
        .map(|&v| {
            if v.fract() == 0.0 {
                Ok(v as i64)
            } else {
                Err(Error::Parse { line: lineno, message: format!("expected an integer, found {v}") })
            }
        })
        .collect()
}

/// `CapEuclideo.<m>.<k>.<code>[.<n>]` → `0.<code>` (e.g. `95` → 0.95, `9` → 0.9).
fn lambda_from_name(name: &str) -> Option<f64> {
    let parts: Vec<&str> = name.split('.').collect();
    if !parts.first()?.to_ascii_lowercase().starts_with("cap") || parts.len() < 4 {
        return None;
    }
    let code = parts[3];
    if code.is_empty() || !code.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    format!("0.{code}").parse().ok()
}
