//! Reference charts: factorizable charts obtained from bi-Darboux charts by
//! known F3 maps and Casimir reparametrizations, and non-factorizable ones.

use std::sync::Arc;

use crate::error::Result;
use crate::homotopy::DEFAULT_DEGREE;
use crate::superalgebra::{parse_expression, Matrix, SuperPoly, VarTable};

use super::{
    apply_f3, canonical_on, reparametrize_casimirs, triplectic_table, F3Generator, TriplecticChart,
};

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: String,
    pub chart: TriplecticChart,
    pub factorizable: bool,
}

fn parse_all(table: &Arc<VarTable>, texts: &[&str]) -> Result<Vec<SuperPoly>> {
    texts.iter().map(|t| parse_expression(t, table)).collect()
}

/// Bi-Darboux chart moved by `-F3 = A_j q'^j + B` and then `c' = gamma(c)`.
pub fn generated(
    name: &str,
    parities: &[u8],
    epsilon: u8,
    a: &[&str],
    gamma: &[&str],
    b: &str,
) -> Result<CorpusEntry> {
    let table = triplectic_table(parities, epsilon);
    let start = canonical_on(&table, epsilon);
    let gen = F3Generator {
        a: parse_all(&table, a)?,
        b: parse_expression(b, &table)?,
    };
    let moved = apply_f3(&start, &gen, DEFAULT_DEGREE)?.chart;
    let chart = reparametrize_casimirs(&moved, &parse_all(&table, gamma)?, DEFAULT_DEGREE)?.chart;
    Ok(CorpusEntry {
        name: name.into(),
        chart,
        factorizable: true,
    })
}

/// Semi-canonical chart with the given `E` and upper triangle of `F`.
pub fn direct(
    name: &str,
    parities: &[u8],
    epsilon: u8,
    e: &[&[&str]],
    f: &[&[&str]],
    factorizable: bool,
) -> Result<CorpusEntry> {
    let table = triplectic_table(parities, epsilon);
    let n = parities.len();
    let e: Matrix<SuperPoly> = e
        .iter()
        .map(|r| parse_all(&table, r))
        .collect::<Result<_>>()?;
    let mut fm: Matrix<SuperPoly> = vec![vec![SuperPoly::zero(&table); n]; n];
    for (i, row) in f.iter().enumerate() {
        for (j, t) in row.iter().enumerate() {
            fm[i][j] = parse_expression(t, &table)?;
        }
    }
    let chart = TriplecticChart::semi_canonical(&table, epsilon, &e, &fm)?;
    Ok(CorpusEntry {
        name: name.into(),
        chart,
        factorizable,
    })
}

/// Factorizable charts with `n` in 1..=3, both parities of the brackets,
/// and both vanishing and nonvanishing `F`.
pub fn factorizable() -> Vec<CorpusEntry> {
    let entries = [
        direct("canonical-1", &[0], 0, &[&["1"]], &[], true),
        direct(
            "canonical-2-odd",
            &[0, 0],
            1,
            &[&["1", "0"], &["0", "1"]],
            &[],
            true,
        ),
        generated("affine-1", &[0], 0, &["2*p1"], &["3*c1"], "p1^2*c1"),
        generated("odd-momentum-1", &[1], 0, &["2*p1"], &["-c1"], "p1*c1"),
        direct("separable-1", &[0], 0, &[&["(1 + p1)*(2 + c1)"]], &[], true),
        generated(
            "triangular-2",
            &[0, 0],
            0,
            &["p1", "p2 + p1^2"],
            &["c1 + c2^2", "c2"],
            "p1*c2 + p2*c1^2",
        ),
        generated(
            "antibracket-2",
            &[0, 0],
            1,
            &["p1 + p2", "p2"],
            &["c1", "c2 - c1"],
            "p1*c1*c2",
        ),
        generated(
            "mixed-3",
            &[0, 1, 1],
            0,
            &["p1 + p2*p3", "p2", "2*p3"],
            &["c1 + c2*c3", "c2", "c3 + c1*c2"],
            "p1*c1 + p2*c3",
        ),
        generated(
            "mixed-antibracket-3",
            &[0, 0, 1],
            1,
            &["p1 + p2*p3", "p2", "p3 + p1*p2"],
            &["c1", "c2 + c1*c3", "c3"],
            "p3*c1 + p1*c3",
        ),
        generated(
            "triangular-3",
            &[0, 0, 0],
            0,
            &["p1", "p2 + p1^2", "p3 + p1*p2"],
            &["c1 + c3^2", "c2", "c3"],
            "p1*c2*c3 + p3*c1",
        ),
        direct("separable-momentum-1", &[0], 0, &[&["2 + 2*p1"]], &[], true),
        direct(
            "gauge-only-2",
            &[0, 0],
            0,
            &[&["1", "0"], &["0", "1"]],
            &[&["0", "p1"]],
            true,
        ),
    ];
    entries
        .into_iter()
        .map(|e| e.expect("corpus chart"))
        .collect()
}

/// Closed charts whose `E` does not separate.
pub fn non_factorizable() -> Vec<CorpusEntry> {
    let entries = [
        direct("sum-1", &[0], 0, &[&["p1 + c1"]], &[], false),
        direct("product-1", &[0], 0, &[&["1 + p1*c1"]], &[], false),
        direct(
            "product-2",
            &[0, 0],
            0,
            &[&["1 + p1*c1", "0"], &["0", "1"]],
            &[],
            false,
        ),
    ];
    entries
        .into_iter()
        .map(|e| e.expect("corpus chart"))
        .collect()
}

pub fn all() -> Vec<CorpusEntry> {
    let mut v = factorizable();
    v.extend(non_factorizable());
    v
}
