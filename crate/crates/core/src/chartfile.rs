//! JSON chart files: declared generators, bracket parity, the two sparse
//! fundamental bracket matrices and an optional base point.
//!
//! Bracket expressions use the expression grammar of [`parse_expression`].
//! Chart coordinates are the declared generators of form degree 0, in
//! declaration order. An entry `(A, B)` whose mirror `(B, A)` is not listed
//! is completed by graded antisymmetry.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poisson::{antisym_sign, Chart, PoissonPencil, PoissonStructure};
use crate::superalgebra::{fmt_q, parse_expression, GradedVariable, SuperPoly, VarId, VarTable, Q};
use crate::triplectic::TriplecticChart;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BracketEntry {
    #[serde(rename = "A")]
    pub a: String,
    #[serde(rename = "B")]
    pub b: String,
    pub expression: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ChartFile {
    pub variables: Vec<GradedVariable>,
    pub epsilon: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_degree: Option<u32>,
    #[serde(default)]
    pub bracket1: Vec<BracketEntry>,
    #[serde(default)]
    pub bracket2: Vec<BracketEntry>,
    /// Coordinate name to rational value, e.g. `"p1": "-1/2"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_point: Option<BTreeMap<String, String>>,
}

/// Chart file contents resolved against their variable table.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedChart {
    pub pencil: PoissonPencil,
    pub truncation: Option<u32>,
    pub base_point: Option<Vec<(VarId, Q)>>,
}

impl LoadedChart {
    pub fn table(&self) -> &Arc<VarTable> {
        &self.pencil.first.chart.table
    }

    pub fn triplectic(&self) -> Result<TriplecticChart> {
        TriplecticChart::from_pencil(self.pencil.clone(), self.truncation)
    }
}

fn invalid(msg: String) -> Error {
    Error::ChartFile(msg)
}

pub fn parse_rational(text: &str) -> Result<Q> {
    let t = text.trim();
    Q::from_str(t).map_err(|_| invalid(format!("`{t}` is not a rational number")))
}

/// Parses `name=value,name=value` against `table`.
pub fn parse_point(text: &str, table: &VarTable) -> Result<Vec<(VarId, Q)>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| invalid(format!("`{part}` is not of the form name=value")))?;
        let v = table
            .lookup(name.trim())
            .ok_or_else(|| invalid(format!("unknown coordinate `{}`", name.trim())))?;
        out.push((v, parse_rational(value)?));
    }
    out.sort_by_key(|(v, _)| *v);
    Ok(out)
}

impl ChartFile {
    pub fn from_json(text: &str) -> Result<ChartFile> {
        serde_json::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chart file serializes") + "\n"
    }

    pub fn table(&self) -> Result<Arc<VarTable>> {
        for v in &self.variables {
            if v.parity > 1 {
                return Err(invalid(format!(
                    "variable `{}` has parity {}",
                    v.name, v.parity
                )));
            }
        }
        VarTable::new(self.variables.clone())
    }

    /// Resolves names and expressions and checks graded antisymmetry.
    pub fn load(&self) -> Result<LoadedChart> {
        if self.epsilon > 1 {
            return Err(invalid(format!(
                "epsilon must be 0 or 1, found {}",
                self.epsilon
            )));
        }
        let table = self.table()?;
        let coords: Vec<VarId> = (0..table.len())
            .filter(|&v| table.form_degree(v) == 0)
            .collect();
        let chart = Chart::new(table.clone(), coords.clone(), self.epsilon);
        let slot = |name: &str, at: &str| -> Result<usize> {
            let v = table
                .lookup(name)
                .ok_or_else(|| invalid(format!("{at}: unknown coordinate `{name}`")))?;
            coords
                .iter()
                .position(|&w| w == v)
                .ok_or_else(|| invalid(format!("{at}: `{name}` is not a coordinate")))
        };
        let mut structures = Vec::new();
        for (k, entries) in [(1, &self.bracket1), (2, &self.bracket2)] {
            let mut pi = PoissonStructure::zero(&chart);
            let mut declared = BTreeMap::new();
            for (i, e) in entries.iter().enumerate() {
                let at = format!("bracket{k}[{i}]");
                let a = slot(&e.a, &at)?;
                let b = slot(&e.b, &at)?;
                let value = parse_expression(&e.expression, &table)
                    .map_err(|err| invalid(format!("{at}.expression: {err}")))?;
                if declared.insert((a, b), value).is_some() {
                    return Err(invalid(format!(
                        "{at}: entry ({}, {}) declared twice",
                        e.a, e.b
                    )));
                }
            }
            for ((a, b), value) in &declared {
                if declared.contains_key(&(*b, *a)) {
                    pi.pi[*a][*b] = value.clone();
                } else {
                    pi.set(*a, *b, value.clone());
                }
            }
            let report = pi.check_antisymmetry();
            if let Some(v) = report.violations.first() {
                return Err(invalid(format!(
                    "bracket{k} violates graded antisymmetry at {}: {}",
                    v.location, v.residual
                )));
            }
            structures.push(pi);
        }
        let second = structures.pop().expect("two brackets");
        let first = structures.pop().expect("two brackets");
        let base_point = match &self.base_point {
            None => None,
            Some(m) => {
                let mut point = Vec::new();
                for (name, value) in m {
                    let v = table.lookup(name).ok_or_else(|| {
                        invalid(format!("basePoint: unknown coordinate `{name}`"))
                    })?;
                    point.push((v, parse_rational(value)?));
                }
                point.sort_by_key(|(v, _)| *v);
                Some(point)
            }
        };
        Ok(LoadedChart {
            pencil: PoissonPencil::new(first, second)?,
            truncation: self.truncation_degree,
            base_point,
        })
    }

    /// File listing the nonzero entries on and above the diagonal.
    pub fn from_pencil(
        pencil: &PoissonPencil,
        truncation: Option<u32>,
        base_point: Option<&[(VarId, Q)]>,
    ) -> ChartFile {
        let chart = &pencil.first.chart;
        let table = &chart.table;
        let entries = |s: &PoissonStructure| -> Vec<BracketEntry> {
            let n = chart.dim();
            let mut out = Vec::new();
            for a in 0..n {
                for b in a..n {
                    let x = &s.pi[a][b];
                    let mirror = &s.pi[b][a];
                    let sign =
                        antisym_sign(chart.coord_parity(a), chart.coord_parity(b), chart.epsilon);
                    let completes = if sign { mirror == x } else { *mirror == -x };
                    if !x.is_zero() || !completes {
                        out.push(entry(chart.name(a), chart.name(b), x));
                    }
                    if !completes {
                        out.push(entry(chart.name(b), chart.name(a), mirror));
                    }
                }
            }
            out
        };
        ChartFile {
            variables: table.vars().to_vec(),
            epsilon: chart.epsilon,
            truncation_degree: truncation,
            bracket1: entries(&pencil.first),
            bracket2: entries(&pencil.second),
            base_point: base_point.map(|pt| {
                pt.iter()
                    .map(|(v, x)| (table.var(*v).name.clone(), fmt_q(x)))
                    .collect()
            }),
        }
    }

    pub fn from_chart(chart: &TriplecticChart, base_point: Option<&[(VarId, Q)]>) -> ChartFile {
        ChartFile::from_pencil(&chart.pencil, chart.truncation, base_point)
    }
}

fn entry(a: &str, b: &str, x: &SuperPoly) -> BracketEntry {
    BracketEntry {
        a: a.into(),
        b: b.into(),
        expression: x.render(),
    }
}

pub fn load_str(text: &str) -> Result<LoadedChart> {
    ChartFile::from_json(text)?.load()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triplectic::corpus;

    const SUM: &str = r#"{
      "variables": [
        {"name": "q1", "parity": 0, "formDegree": 0, "role": "position", "index": 1},
        {"name": "p1", "parity": 0, "formDegree": 0, "role": "momentum", "index": 1},
        {"name": "c1", "parity": 0, "formDegree": 0, "role": "casimir", "index": 1}
      ],
      "epsilon": 0,
      "bracket1": [{"A": "q1", "B": "p1", "expression": "1"}],
      "bracket2": [{"A": "q1", "B": "c1", "expression": "p1 + c1"}],
      "basePoint": {"p1": "1", "c1": "1/2"}
    }"#;

    #[test]
    fn loads_and_completes_by_antisymmetry() {
        let loaded = load_str(SUM).unwrap();
        let t = loaded.table().clone();
        let second = &loaded.pencil.second;
        assert_eq!(second.pi[2][0], parse_expression("-p1 - c1", &t).unwrap());
        assert_eq!(
            loaded.base_point,
            Some(vec![
                (1, Q::from_integer(1.into())),
                (2, Q::new(1.into(), 2.into()))
            ])
        );
        let chart = loaded.triplectic().unwrap();
        assert_eq!(chart.n(), 1);
    }

    #[test]
    fn rejects_bad_input_with_locations() {
        let bad = SUM.replace("p1 + c1", "p1 + ");
        assert!(
            matches!(load_str(&bad), Err(Error::ChartFile(m)) if m.starts_with("bracket2[0].expression"))
        );
        let bad = SUM.replace(r#""B": "c1""#, r#""B": "z9""#);
        assert!(matches!(load_str(&bad), Err(Error::ChartFile(m)) if m.contains("z9")));
        let bad = SUM.replace(
            r#"[{"A": "q1", "B": "c1", "expression": "p1 + c1"}]"#,
            r#"[{"A": "q1", "B": "c1", "expression": "1"}, {"A": "c1", "B": "q1", "expression": "1"}]"#,
        );
        assert!(matches!(load_str(&bad), Err(Error::ChartFile(m)) if m.contains("antisymmetry")));
        assert!(matches!(load_str("{"), Err(Error::ChartFile(_))));
    }

    #[test]
    fn parses_points() {
        let t = load_str(SUM).unwrap().table().clone();
        let pt = parse_point("c1=-3/4, p1=2", &t).unwrap();
        assert_eq!(
            pt,
            vec![
                (1, Q::from_integer(2.into())),
                (2, Q::new((-3).into(), 4.into()))
            ]
        );
        assert!(parse_point("x=1", &t).is_err());
        assert!(parse_point("p1=a", &t).is_err());
    }

    #[test]
    fn corpus_round_trips() {
        for e in corpus::all() {
            let file = ChartFile::from_chart(&e.chart, None);
            let text = file.to_json();
            let again = ChartFile::from_json(&text).unwrap();
            assert_eq!(again, file, "{}", e.name);
            let chart = again.load().unwrap().triplectic().unwrap();
            assert_eq!(chart, e.chart, "{}", e.name);
            assert_eq!(
                ChartFile::from_chart(&chart, None).to_json(),
                text,
                "{}",
                e.name
            );
        }
    }
}
