use std::fmt::Write;

use psikit_core::out_of_ssa::PassStats;
use psikit_core::pipeline::STATS_VARIANTS;

pub const ROWS: [&str; 4] = ["psi-normalize", "psi-congruence", "phi-congruence", "total copies"];

fn row(s: &PassStats, i: usize) -> usize {
    match i {
        0 => s.copies_normalize,
        1 => s.copies_psi_congruence,
        2 => s.copies_phi_congruence,
        _ => s.total_copies,
    }
}

/// Aligned table, one column per statistics variant.
pub fn text_table(title: &str, cols: &[PassStats]) -> String {
    let first = ROWS.iter().map(|r| r.len()).max().unwrap().max(title.len());
    let widths: Vec<usize> = STATS_VARIANTS.iter().map(|v| v.name.len().max(6)).collect();
    let mut out = String::new();
    let _ = write!(out, "{title:<first$}");
    for (v, w) in STATS_VARIANTS.iter().zip(&widths) {
        let _ = write!(out, "  {:>w$}", v.name);
    }
    out.push('\n');
    for (i, name) in ROWS.iter().enumerate() {
        let _ = write!(out, "{name:<first$}");
        for (s, w) in cols.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$}", row(s, i));
        }
        out.push('\n');
    }
    out
}

pub fn csv_header() -> String {
    let mut out = String::from("file,row");
    for v in STATS_VARIANTS {
        out.push(',');
        out.push_str(v.name);
    }
    out.push('\n');
    out
}

pub fn csv_rows(file: &str, cols: &[PassStats]) -> String {
    let mut out = String::new();
    for (i, name) in ROWS.iter().enumerate() {
        let _ = write!(out, "{file},{name}");
        for s in cols {
            let _ = write!(out, ",{}", row(s, i));
        }
        out.push('\n');
    }
    out
}
