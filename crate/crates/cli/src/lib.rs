//! Command-line front end: chart files in, deterministic reports out.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use bidarboux_core::chartfile::{parse_point, parse_rational, ChartFile, LoadedChart};
use bidarboux_core::homotopy::{TriGradedAlgebra, DEFAULT_DEGREE};
use bidarboux_core::liegroup::{self, Mat2};
use bidarboux_core::parahyper::{self, Base, Endomorphism};
use bidarboux_core::poisson::PoissonPencil;
use bidarboux_core::superalgebra::{det_poly, fmt_q, parse_expression, Matrix};
use bidarboux_core::triplectic::{
    bidarboux_pipeline, default_base_point, differential_factorization_report,
    factorization_candidate, render_list, render_matrix, render_point, to_rational,
    PipelineOutcome, StageRecord, TriplecticChart,
};
use bidarboux_core::{CheckReport, RationalFn, SuperPoly, VarId, Violation, Q};

/// Environment variable holding the default truncation degree.
pub const DEGREE_ENV: &str = "BIDARBOUX_DEGREE";

#[derive(Debug, Parser)]
#[command(
    name = "bidarboux",
    version,
    about = "Bi-Darboux analysis of triplectic charts"
)]
pub struct Cli {
    /// Truncation degree for power series
    #[arg(long, global = true, env = DEGREE_ENV, default_value_t = DEFAULT_DEGREE)]
    pub degree: u32,
    /// Base point, e.g. `p1=0,c1=1/2`
    #[arg(long, global = true)]
    pub base_point: Option<String>,
    /// Output file: the bi-Darboux chart for `darbouxify`, the report otherwise
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the pencil axioms and joint nondegeneracy
    Verify { file: PathBuf },
    /// Construct bi-Darboux coordinates or report the obstruction
    Darbouxify { file: PathBuf },
    /// Decide whether E separates as P(p) C(c)
    Factorize { file: PathBuf },
    /// Bi-Poincare homotopy of a closed form in the variables `x{alpha}_{i}`
    Homotopy {
        omega: String,
        /// Parities of `x1_i`, e.g. `0,1`; all even by default
        #[arg(long)]
        parities: Option<String>,
    },
    /// Nijenhuis tensor of the parity structure built from E
    Nijenhuis { file: PathBuf },
    /// Obata connection, its defining identities and its curvature
    Obata { file: PathBuf },
    /// Adjoint image of a unit-determinant 2x2 matrix, e.g. `[[2,0],[0,1/2]]`
    Lorentz { matrix: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Obstructed,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Fail | Status::Obstructed => 1,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Obstructed => "obstructed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub checks: Vec<CheckReport>,
    pub stages: Vec<StageRecord>,
    pub certificates: BTreeMap<String, String>,
}

impl Report {
    fn new(command: &str) -> Self {
        Report {
            command: command.into(),
            status: Status::Pass,
            error: None,
            checks: Vec::new(),
            stages: Vec::new(),
            certificates: BTreeMap::new(),
        }
    }

    fn check(&mut self, report: CheckReport) {
        if !report.passed {
            self.status = Status::Fail;
        }
        self.checks.push(report);
    }

    fn cert(&mut self, key: &str, value: impl Into<String>) {
        self.certificates.insert(key.into(), value.into());
    }

    fn failed(&mut self, err: impl std::fmt::Display) {
        self.status = Status::Fail;
        self.error = Some(err.to_string());
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn check_named(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.check == name)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(self).expect("report serializes") + "\n",
            Format::Text => self.render_text(),
        }
    }

    fn render_text(&self) -> String {
        let mut s = format!("{}: {}\n", self.command, self.status.label());
        if let Some(e) = &self.error {
            let _ = writeln!(s, "error: {e}");
        }
        for c in &self.checks {
            let _ = writeln!(
                s,
                "[{}] {}",
                if c.passed { "pass" } else { "FAIL" },
                c.check
            );
            for v in &c.violations {
                let _ = writeln!(s, "    {} = {}", v.location, v.residual);
            }
        }
        for st in &self.stages {
            let data: Vec<String> = st.data.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(s, "stage {}: {}", st.stage, data.join("; "));
        }
        for (k, v) in &self.certificates {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

/// Report plus the chart file produced by `darbouxify`, if any.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Report,
    pub chart: Option<ChartFile>,
}

pub fn load_chart(path: &Path) -> anyhow::Result<LoadedChart> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    ChartFile::from_json(&text)
        .and_then(|f| f.load())
        .with_context(|| format!("{}", path.display()))
}

fn triplectic(loaded: &LoadedChart, path: &Path) -> anyhow::Result<TriplecticChart> {
    loaded
        .triplectic()
        .with_context(|| format!("{}", path.display()))
}

/// `--base-point`, then the file's base point, then the default search.
fn choose_point(
    chart: &TriplecticChart,
    e: &Matrix<SuperPoly>,
    flag: Option<&str>,
    file: Option<&[(VarId, Q)]>,
) -> anyhow::Result<Option<Vec<(VarId, Q)>>> {
    if let Some(text) = flag {
        return Ok(Some(
            parse_point(text, chart.table()).context("--base-point")?,
        ));
    }
    if let Some(p) = file {
        return Ok(Some(p.to_vec()));
    }
    Ok(default_base_point(&chart.base(), e).ok())
}

/// `E^i_j = {q^i, c_j}^2` read off the brackets as given.
fn e_matrix(chart: &TriplecticChart) -> Matrix<SuperPoly> {
    chart
        .q
        .iter()
        .map(|&qi| {
            chart
                .c
                .iter()
                .map(|&cj| chart.bracket(2, qi, cj).clone())
                .collect()
        })
        .collect()
}

pub fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let flag = cli.base_point.as_deref();
    let report_only = |report: Report| Outcome {
        report,
        chart: None,
    };
    match &cli.command {
        Command::Verify { file } => {
            let loaded = load_chart(file)?;
            let chart = triplectic(&loaded, file)?;
            let e = e_matrix(&chart);
            let point = choose_point(&chart, &e, flag, loaded.base_point.as_deref())?;
            Ok(report_only(verify(&chart, point.as_deref())))
        }
        Command::Darbouxify { file } => {
            let loaded = load_chart(file)?;
            let chart = triplectic(&loaded, file)?;
            let e = e_matrix(&chart);
            let point = match flag {
                Some(text) => Some(parse_point(text, chart.table()).context("--base-point")?),
                None => loaded.base_point.clone(),
            };
            let verify_point = choose_point(&chart, &e, None, point.as_deref())?;
            Ok(darbouxify(
                &chart,
                point.as_deref(),
                verify_point.as_deref(),
                cli.degree,
            ))
        }
        Command::Factorize { file } => {
            let loaded = load_chart(file)?;
            let chart = triplectic(&loaded, file)?;
            let e = e_matrix(&chart);
            let point = choose_point(&chart, &e, flag, loaded.base_point.as_deref())?;
            Ok(report_only(factorize(&chart, point.as_deref())))
        }
        Command::Homotopy { omega, parities } => {
            let parities = match parities {
                Some(text) => text
                    .split(',')
                    .map(|s| s.trim().parse::<u8>().map(|x| x % 2))
                    .collect::<Result<Vec<u8>, _>>()
                    .context("--parities")?,
                None => vec![0; infer_n(omega)],
            };
            if parities.is_empty() {
                bail!("cannot infer the number of variables from `{omega}`; pass --parities");
            }
            let alg = TriGradedAlgebra::new(&parities)?.with_degree(cli.degree);
            let w = parse_expression(omega, alg.table()).context("omega")?;
            Ok(report_only(homotopy(&alg, &w)))
        }
        Command::Nijenhuis { file } => {
            let loaded = load_chart(file)?;
            Ok(report_only(nijenhuis(&triplectic(&loaded, file)?)))
        }
        Command::Obata { file } => {
            let loaded = load_chart(file)?;
            Ok(report_only(obata(&triplectic(&loaded, file)?)))
        }
        Command::Lorentz { matrix } => Ok(report_only(lorentz(&parse_mat2(matrix)?))),
    }
}

/// Largest `i` among identifiers `x{alpha}_{i}`.
fn infer_n(text: &str) -> usize {
    let bytes = text.as_bytes();
    let mut n = 0;
    for (k, _) in text.match_indices('x') {
        let rest = &bytes[k + 1..];
        if rest.len() >= 3 && (b'1'..=b'3').contains(&rest[0]) && rest[1] == b'_' {
            let digits: String = rest[2..]
                .iter()
                .take_while(|b| b.is_ascii_digit())
                .map(|&b| b as char)
                .collect();
            n = n.max(digits.parse().unwrap_or(0));
        }
    }
    n
}

pub fn parse_mat2(text: &str) -> anyhow::Result<Mat2> {
    let cleaned: String = text
        .chars()
        .filter(|c| !matches!(c, '[' | ']' | ' '))
        .collect();
    let entries: Vec<Q> = cleaned
        .split(',')
        .map(parse_rational)
        .collect::<Result<_, _>>()
        .context("matrix")?;
    if entries.len() != 4 {
        bail!("expected four entries in `{text}`, found {}", entries.len());
    }
    let e = |i: usize| entries[i].clone();
    Ok([[e(0), e(1)], [e(2), e(3)]])
}

fn point_violation(check: &str, location: &str, residual: String) -> CheckReport {
    CheckReport::new(
        check,
        vec![Violation {
            location: location.into(),
            residual,
        }],
    )
}

fn casimir_report(pencil: &PoissonPencil, chart: &TriplecticChart) -> CheckReport {
    let mut v = Vec::new();
    for (k, ids) in [(2, &chart.p), (1, &chart.c)] {
        let structure = pencil.get(k);
        for &x in ids {
            for &z in chart.coords() {
                let r = structure
                    .bracket(&chart.var(x), &chart.var(z))
                    .expect("same chart");
                if !r.is_zero() {
                    v.push(Violation {
                        location: format!("{{{},{}}}^{k}", chart.name(x), chart.name(z)),
                        residual: r.render(),
                    });
                }
            }
        }
    }
    CheckReport::new("casimir", v)
}

pub fn verify(chart: &TriplecticChart, point: Option<&[(VarId, Q)]>) -> Report {
    let mut report = Report::new("verify");
    let pencil = &chart.pencil;
    for k in 1..=2 {
        let mut r = pencil.get(k).check_antisymmetry();
        r.check = format!("antisymmetry-{k}");
        report.check(r);
    }
    for k in 1..=2 {
        let mut r = pencil.get(k).check_jacobi();
        r.check = format!("jacobi-{k}");
        report.check(r);
    }
    report.check(pencil.check_symmetrized_jacobi());
    report.check(casimir_report(pencil, chart));
    let casimirs = |ids: &[VarId]| ids.iter().map(|&v| chart.var(v)).collect::<Vec<_>>();
    report.check(pencil.involutivity_brackets(&casimirs(&chart.c), &casimirs(&chart.p)));

    let e = e_matrix(chart);
    let n = chart.n();
    match point {
        None => report.check(point_violation(
            "body-rank",
            "base point",
            "no point with invertible E found".into(),
        )),
        Some(pt) => {
            report.cert("base-point", render_point(chart.table(), pt));
            let mut v = Vec::new();
            for k in 1..=2 {
                match pencil.get(k).body_rank(pt) {
                    Ok(r) if r == 2 * n => {}
                    Ok(r) => v.push(Violation {
                        location: format!("bracket {k}"),
                        residual: format!("rank {r}, expected {}", 2 * n),
                    }),
                    Err(err) => v.push(Violation {
                        location: format!("bracket {k}"),
                        residual: err.to_string(),
                    }),
                }
            }
            report.check(CheckReport::new("body-rank", v));
            let det = det_poly(&e);
            report.cert("det-E", det.render());
            let body = RationalFn::from(det).eval_body(pt);
            let v = match body {
                Ok(x) if x != Q::from_integer(0.into()) => {
                    report.cert("det-E-at-base-point", fmt_q(&x));
                    Vec::new()
                }
                Ok(_) => vec![Violation {
                    location: "det E at base point".into(),
                    residual: "0".into(),
                }],
                Err(err) => vec![Violation {
                    location: "det E at base point".into(),
                    residual: err.to_string(),
                }],
            };
            report.check(CheckReport::new("joint-nondegeneracy", v));
        }
    }
    report
}

pub fn darbouxify(
    chart: &TriplecticChart,
    point: Option<&[(VarId, Q)]>,
    verify_point: Option<&[(VarId, Q)]>,
    degree: u32,
) -> Outcome {
    let pre = verify(chart, verify_point);
    let mut report = Report::new("darbouxify");
    let passed = pre.passed();
    report.checks = pre.checks;
    if !passed {
        report.failed("verify failed");
        return Outcome {
            report,
            chart: None,
        };
    }
    match bidarboux_pipeline(chart, point, degree) {
        Err(err) => {
            report.failed(err);
            Outcome {
                report,
                chart: None,
            }
        }
        Ok(PipelineOutcome::Obstructed(ob)) => {
            report.status = Status::Obstructed;
            report.cert("base-point", render_point(chart.table(), &ob.base_point));
            report.stages = ob.stages;
            report
                .checks
                .extend([ob.factorization, ob.differential, ob.curvature]);
            Outcome {
                report,
                chart: None,
            }
        }
        Ok(PipelineOutcome::BiDarboux(res)) => {
            report.stages = res.stages;
            report.cert("base-point", render_point(chart.table(), &res.base_point));
            report.cert("P", render_matrix(&res.factorization.p_factor));
            report.cert("C", render_matrix(&res.factorization.c_factor));
            report.cert("A", render_list(&res.momenta));
            report.cert("gamma", render_list(&res.casimirs));
            report.cert("B", res.gauge.render());
            if let Some(d) = res.verified_to {
                report.cert("verified-to", d.to_string());
            }
            report.check(res.report);
            let file = ChartFile::from_chart(&res.chart, None);
            Outcome {
                report,
                chart: Some(file),
            }
        }
    }
}

pub fn factorize(chart: &TriplecticChart, point: Option<&[(VarId, Q)]>) -> Report {
    let mut report = Report::new("factorize");
    let base = chart.base();
    let e = e_matrix(chart);
    report.cert("E", render_matrix(&e));
    let Some(pt) = point else {
        report.failed("no base point with invertible E found");
        return report;
    };
    report.cert("base-point", render_point(chart.table(), pt));
    match factorization_candidate(&base, &e, pt) {
        Err(err) => report.failed(err),
        Ok((f, residual)) => {
            let ok = residual.passed;
            report.check(residual);
            if ok {
                report.cert("P", render_matrix(&f.p_factor));
                report.cert("C", render_matrix(&f.c_factor));
            }
            report.cert(
                "verdict",
                if ok {
                    "factorizable"
                } else {
                    "not factorizable"
                },
            );
        }
    }
    match differential_factorization_report(&base, &e) {
        Ok(r) => report.check(r),
        Err(err) => report.failed(err),
    }
    report
}

pub fn homotopy(alg: &TriGradedAlgebra, omega: &SuperPoly) -> Report {
    let mut report = Report::new("homotopy");
    report.cert("omega", omega.render());
    match alg.homotopy(omega) {
        Err(err) => report.failed(err),
        Ok(h) => {
            report.cert("eta", h.eta.render());
            for b in &h.blocks {
                report.cert(
                    &format!("block({},{})", b.n12, b.n3),
                    format!("dimension {}, determinant {}", b.dimension, b.determinant),
                );
            }
            let back = alg.d_op(&h.eta);
            let diff = &back - omega;
            let v = if diff.is_zero() {
                Vec::new()
            } else {
                vec![Violation {
                    location: "d eta - omega".into(),
                    residual: diff.render(),
                }]
            };
            report.check(CheckReport::new("homotopy-inverts", v));
        }
    }
    report
}

fn render_components(m: &Endomorphism) -> String {
    let rows: Vec<String> = m
        .components()
        .iter()
        .map(|r| {
            format!(
                "[{}]",
                r.iter().map(|x| x.render()).collect::<Vec<_>>().join(", ")
            )
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

/// `Sigma`, `P` and `J = P Sigma` on the base of a chart.
pub fn structures(chart: &TriplecticChart) -> bidarboux_core::Result<(Base, [Endomorphism; 3])> {
    let base = chart.base();
    let sigma = parahyper::build_sigma(&base);
    let p = parahyper::build_p(&base, &to_rational(&e_matrix(chart)))?;
    let j = parahyper::build_j(&sigma, &p);
    Ok((base, [sigma, p, j]))
}

pub fn nijenhuis(chart: &TriplecticChart) -> Report {
    let mut report = Report::new("nijenhuis");
    match structures(chart) {
        Err(err) => report.failed(err),
        Ok((base, [sigma, p, j])) => {
            report.cert("Sigma", render_components(&sigma));
            report.cert("P", render_components(&p));
            report.cert("J", render_components(&j));
            report.check(parahyper::nijenhuis(&p).report(&base));
        }
    }
    report
}

pub fn obata(chart: &TriplecticChart) -> Report {
    let mut report = Report::new("obata");
    let base = chart.base();
    match parahyper::obata_connection(&base, &to_rational(&e_matrix(chart))) {
        Err(err) => report.failed(err),
        Ok(conn) => {
            let d = base.dim();
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        let g = &conn.christoffel[i][j][k];
                        if !g.is_zero() {
                            let key =
                                format!("Gamma_{}{}^{}", base.name(i), base.name(j), base.name(k));
                            report.cert(&key, g.render());
                        }
                    }
                }
            }
            report.check(conn.verify());
            report.check(conn.curvature().report(&base));
        }
    }
    report
}

pub fn lorentz(g: &Mat2) -> Report {
    let mut report = Report::new("lorentz");
    report.cert("g", liegroup::render2(g));
    match liegroup::adjoint_map(g) {
        Err(err) => report.failed(err),
        Ok(l) => {
            report.cert("Lambda", liegroup::render3(&l));
            let v = if liegroup::is_restricted_lorentz(&l) {
                Vec::new()
            } else {
                vec![Violation {
                    location: "Lambda".into(),
                    residual: "not in SO+(2,1)".into(),
                }]
            };
            report.check(CheckReport::new("restricted-lorentz", v));
        }
    }
    report
}

/// Runs a command and writes its outputs; returns the exit code.
pub fn execute(cli: &Cli) -> anyhow::Result<u8> {
    let outcome = run(cli)?;
    let text = outcome.report.render(cli.format);
    match (&cli.output, &outcome.chart) {
        (Some(path), Some(chart)) => {
            std::fs::write(path, chart.to_json())
                .with_context(|| format!("cannot write {}", path.display()))?;
            print!("{text}");
        }
        (Some(path), None) if !matches!(cli.command, Command::Darbouxify { .. }) => {
            std::fs::write(path, &text)
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
        _ => print!("{text}"),
    }
    Ok(outcome.report.status.exit_code())
}
