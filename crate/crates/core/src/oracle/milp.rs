//! Export of the arc-based MILP in CPLEX LP text format.
//!
//! Variables: `x_i_j` arcs, `y_i` node selection (with `y_0` fixed to 1),
//! `z_i_k` purchased quantities, `u_i` order labels. Subtours are excluded
//! with Miller–Tucker–Zemlin constraints over the markets,
//! `u_i - u_j + m x_i_j <= m - 1`, which is polynomial in size and needs no
//! separation callbacks.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;
use crate::instance::format;
use crate::model::TppInstance;

/// Counts of what [`export_milp`] wrote.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MilpStats {
    pub arc_vars: usize,
    pub node_vars: usize,
    pub purchase_vars: usize,
    pub order_vars: usize,
    pub constraints: usize,
}

impl MilpStats {
    pub fn variables(&self) -> usize {
        self.arc_vars + self.node_vars + self.purchase_vars + self.order_vars
    }
}

/// FNV-1a over the canonical text of the instance.
pub fn instance_hash(inst: &TppInstance) -> u64 {
    format::to_string(inst).bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

// LP readers limit line length, so long sums are wrapped
fn push_sum(out: &mut String, terms: &[(i64, String)]) {
    for (n, (coef, var)) in terms.iter().enumerate() {
        if n > 0 && n % 8 == 0 {
            out.push_str("\n   ");
        }
        let sign = if *coef < 0 { '-' } else { '+' };
        if n == 0 && sign == '+' {
            write!(out, " {} {var}", coef.abs()).unwrap();
        } else {
            write!(out, " {sign} {} {var}", coef.abs()).unwrap();
        }
    }
}

pub fn export_milp<W: Write>(inst: &TppInstance, mut sink: W) -> Result<MilpStats> {
    inst.ensure_valid()?;
    let m = inst.num_markets();
    let mm = m as i64;
    let dist = inst.dist();
    let x = |i: usize, j: usize| format!("x_{i}_{j}");
    let mut out = String::new();
    let mut constraints = 0;

    writeln!(out, "\\ travelling purchaser instance fnv1a64={:016x}", instance_hash(inst)).unwrap();
    writeln!(out, "\\ {} markets, {} products, variant {}", m, inst.num_products(), inst.variant().code()).unwrap();

    out.push_str("Minimize\n obj:");
    let mut obj = Vec::new();
    for i in 0..=m {
        for j in (0..=m).filter(|&j| j != i) {
            obj.push((dist.get(i, j), x(i, j)));
        }
    }
    for (&(i, k), o) in inst.offers() {
        obj.push((o.price, format!("z_{i}_{k}")));
    }
    push_sum(&mut out, &obj);
    out.push_str("\nSubject To\n");

    for k in 0..inst.num_products() {
        write!(out, " demand_{k}:").unwrap();
        let terms: Vec<_> = inst.sellers(k).iter().map(|&(i, _)| (1, format!("z_{i}_{k}"))).collect();
        push_sum(&mut out, &terms);
        writeln!(out, " = {}", inst.demand(k)).unwrap();
        constraints += 1;
    }
    for (&(i, k), o) in inst.offers() {
        writeln!(out, " supply_{i}_{k}: z_{i}_{k} - {} y_{i} <= 0", o.quantity).unwrap();
        constraints += 1;
    }
    for h in 0..=m {
        for (name, arc) in [("out", true), ("in", false)] {
            write!(out, " {name}_{h}:").unwrap();
            let mut terms: Vec<_> =
                (0..=m).filter(|&j| j != h).map(|j| (1, if arc { x(h, j) } else { x(j, h) })).collect();
            terms.push((-1, format!("y_{h}")));
            push_sum(&mut out, &terms);
            out.push_str(" = 0\n");
            constraints += 1;
        }
    }
    writeln!(out, " depot: y_0 = 1").unwrap();
    constraints += 1;
    for i in 1..=m {
        for j in (1..=m).filter(|&j| j != i) {
            writeln!(out, " order_{i}_{j}: u_{i} - u_{j} + {mm} x_{i}_{j} <= {}", mm - 1).unwrap();
            constraints += 1;
        }
    }

    out.push_str("Bounds\n");
    for (&(i, k), o) in inst.offers() {
        writeln!(out, " 0 <= z_{i}_{k} <= {}", o.quantity).unwrap();
    }
    for i in 1..=m {
        writeln!(out, " 1 <= u_{i} <= {mm}").unwrap();
    }

    out.push_str("Binaries\n");
    let mut line = 0;
    let binaries = (0..=m).flat_map(|i| (0..=m).filter(move |&j| j != i).map(move |j| x(i, j))).chain((0..=m).map(|i| format!("y_{i}")));
    for var in binaries {
        out.push(' ');
        out.push_str(&var);
        line += 1;
        if line % 10 == 0 {
            out.push('\n');
        }
    }
    out.push_str("\nEnd\n");
    sink.write_all(out.as_bytes())?;

    Ok(MilpStats {
        arc_vars: m * (m + 1),
        node_vars: m + 1,
        purchase_vars: inst.offers().len(),
        order_vars: m,
        constraints,
    })
}
