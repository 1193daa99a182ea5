//! Command-line front end: metric and tensor files, subcommands and exit codes.
//!
//! Metric files are JSON. A chart file carries `name`, `coordinates`,
//! an optional `domain` note, the lower triangle of the metric as expression
//! strings and optional named `tensors`. A product file replaces the metric
//! by `factors`, two chart file paths relative to the product file. A tensor
//! entry holds exactly one of `polynomial` (a momentum polynomial in
//! `p_<coord>`), `covector` (one expression per coordinate) or `components`
//! (keys are comma-separated coordinate names); `factor: 1|2` places it on a
//! factor of a product.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{parse_expression, AlgebraError, MultiPoly, Rational, RationalFunction, Variables};
use crate::flow::{
    hamiltonian, iterate_h, ladder_degree, poisson_bracket, FlowError, LadderDegree, LadderElement, MomentumPolynomial,
};
use crate::geometry::{
    sectional_curvature_degeneracy, tensor_to_poly, Chart, GeometryError, MetricChart, SymmetricCotensor,
};
use crate::numeric::{
    quantity_records, sample_trajectories, write_csv, BatchConfig, GeodesicField, NumericError, DEFAULT_FIT_TOL,
};
use crate::product::{
    bihomogeneous_split, chain_check, compose_integral, decompose_integral, product_metric, reducibility_classify,
    split_ansatz, Classification, ProductError, ProductMetric,
};
use crate::spaces::{solve_ladder, AnsatzFamily, SpacesError};

/// Largest ladder degree searched when certifying inputs.
const LADDER_BUDGET: u32 = 12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{0}")]
    AnsatzIncomplete(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Domain(_) => 3,
            CliError::AnsatzIncomplete(_) => 4,
        }
    }
}

impl From<AlgebraError> for CliError {
    fn from(e: AlgebraError) -> Self {
        match e {
            AlgebraError::Parse(_) | AlgebraError::UnknownVariable(_) => CliError::Parse(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::Algebra(a) => a.into(),
            FlowError::NotPolynomialInMomenta(_) => CliError::Parse(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::Algebra(a) => a.into(),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<SpacesError> for CliError {
    fn from(e: SpacesError) -> Self {
        match e {
            SpacesError::Geometry(g) => g.into(),
            SpacesError::Algebra(a) => a.into(),
            SpacesError::ZeroLadder => CliError::Usage(e.to_string()),
            SpacesError::ZeroDenominator => CliError::Domain(e.to_string()),
        }
    }
}

impl From<ProductError> for CliError {
    fn from(e: ProductError) -> Self {
        match e {
            ProductError::AnsatzIncomplete { .. } => CliError::AnsatzIncomplete(e.to_string()),
            ProductError::Flow(f) => f.into(),
            ProductError::Geometry(g) => g.into(),
            ProductError::Spaces(s) => s.into(),
            ProductError::Algebra(a) => a.into(),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<NumericError> for CliError {
    fn from(e: NumericError) -> Self {
        match e {
            NumericError::BadStep | NumericError::Csv(_) => CliError::Usage(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "killing", version, about = "Exact Killing tensors, geodesic-flow ladders and product decompositions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a metric file and check its invariants
    Validate(JobArgs),
    /// Nonzero Christoffel symbols
    Christoffel(JobArgs),
    /// Geodesic Hamiltonian ½ g^ij p_i p_j
    Hamiltonian(JobArgs),
    /// Killing tensors of a given degree within an ansatz
    KillingSolve(JobArgs),
    /// Ladder space {f : H^k f = 0} within an ansatz
    LadderSolve(JobArgs),
    /// {H, f}, or {f, g} for two tensors
    Bracket(JobArgs),
    /// H^k f and the ladder degree of f
    Hk(JobArgs),
    /// Product of two charts
    Product(JobArgs),
    /// Integral of a product built from two ladder elements
    Compose(JobArgs),
    /// Ladder-term decomposition of an integral of a product
    Decompose(JobArgs),
    /// Reducible or irreducible with a witness
    Classify(JobArgs),
    /// Conservation and polynomial-in-s checks along random geodesics
    VerifyNumeric(JobArgs),
    /// Directions with vanishing sectional curvature at a point
    CurvatureDegeneracy(JobArgs),
}

#[derive(Args, Debug, Clone)]
pub struct JobArgs {
    /// Metric file; give two chart files to form their product
    #[arg(long = "metric", value_name = "PATH")]
    pub metric: Vec<PathBuf>,
    /// Tensor file, or the name of a tensor in the metric file (`NAME@1`,
    /// `NAME@2` pick tensors of the factor files of a product)
    #[arg(long = "tensor", value_name = "PATH|NAME")]
    pub tensor: Vec<String>,
    #[arg(long, value_name = "D")]
    pub degree: Option<u32>,
    #[arg(long, value_name = "K")]
    pub ladder: Option<u32>,
    #[arg(long = "coeff-degree", value_name = "N", default_value_t = 2)]
    pub coeff_degree: u32,
    #[arg(long, value_name = "EXPR")]
    pub denominator: Option<String>,
    #[arg(long, value_name = "F", default_value_t = 10.0)]
    pub smax: f64,
    #[arg(long, value_name = "F", default_value_t = 1e-3)]
    pub step: f64,
    #[arg(long, value_name = "U64", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "F", default_value_t = DEFAULT_FIT_TOL)]
    pub tol: f64,
    /// Number of random trajectories
    #[arg(long, value_name = "N", default_value_t = 100)]
    pub count: usize,
    /// Reject initial data with |p_NAME| below VALUE
    #[arg(long = "min-momentum", value_name = "NAME=VALUE")]
    pub min_momentum: Vec<String>,
    /// Comma-separated rational coordinates
    #[arg(long, value_name = "X1,X2,..")]
    pub point: Option<String>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polynomial: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covector: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<BTreeMap<String, String>>,
}

#[derive(Serialize, Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields)]
pub struct MetricFile {
    pub name: String,
    #[serde(default)]
    pub coordinates: Vec<String>,
    #[serde(default)]
    pub domain: String,
    #[serde(default)]
    pub metric: Vec<Vec<String>>,
    #[serde(default)]
    pub factors: Vec<PathBuf>,
    #[serde(default)]
    pub tensors: Vec<TensorEntry>,
}

pub enum Space {
    Chart(Chart),
    Product(ProductMetric),
}

impl Space {
    pub fn chart(&self) -> &Chart {
        match self {
            Space::Chart(c) => c,
            Space::Product(pm) => pm.joint(),
        }
    }

    fn product(&self) -> Result<&ProductMetric, CliError> {
        match self {
            Space::Product(pm) => Ok(pm),
            Space::Chart(_) => {
                Err(CliError::Usage("this command needs a product (a product file or two --metric files)".into()))
            }
        }
    }
}

/// A metric file together with everything it references.
pub struct Loaded {
    pub name: String,
    pub space: Space,
    pub tensors: Vec<TensorEntry>,
    /// Tensors of the factor files with the chart they were written on.
    pub factor_tensors: [Vec<(TensorEntry, Chart)>; 2],
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn parse_rf(text: &str, vars: &Variables) -> Result<RationalFunction, CliError> {
    let e = parse_expression(text, vars.names()).map_err(AlgebraError::from)?;
    Ok(e.to_rational_function(vars)?)
}

/// Chart described by a chart file.
pub fn chart_from_file(file: &MetricFile) -> Result<Chart, CliError> {
    let n = file.coordinates.len();
    if n == 0 {
        return Err(CliError::Parse(format!("{}: no coordinates", file.name)));
    }
    if file.metric.len() != n || file.metric.iter().enumerate().any(|(i, row)| row.len() != i + 1) {
        return Err(CliError::Parse(format!(
            "{}: metric must be the lower triangle, row i holding i+1 entries",
            file.name
        )));
    }
    let vars = Variables::new(&file.coordinates);
    let mut g = vec![vec![RationalFunction::zero(&vars); n]; n];
    for (i, row) in file.metric.iter().enumerate() {
        for (j, text) in row.iter().enumerate() {
            let v = parse_rf(text, &vars)?;
            g[i][j] = v.clone();
            g[j][i] = v;
        }
    }
    Ok(MetricChart::new(file.name.clone(), vars, g, file.domain.clone())?)
}

pub fn load_metric_file(path: &Path) -> Result<Loaded, CliError> {
    let file: MetricFile = read_json(path)?;
    if file.factors.is_empty() {
        let chart = chart_from_file(&file)?;
        return Ok(Loaded {
            name: file.name,
            space: Space::Chart(chart),
            tensors: file.tensors,
            factor_tensors: Default::default(),
        });
    }
    if file.factors.len() != 2 || !file.metric.is_empty() || !file.coordinates.is_empty() {
        return Err(CliError::Parse(format!(
            "{}: a product file lists exactly two factors and no metric",
            path.display()
        )));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let f1 = load_metric_file(&base.join(&file.factors[0]))?;
    let f2 = load_metric_file(&base.join(&file.factors[1]))?;
    let mut loaded = product_of(f1, f2)?;
    loaded.name = file.name;
    loaded.tensors = file.tensors;
    Ok(loaded)
}

fn product_of(f1: Loaded, f2: Loaded) -> Result<Loaded, CliError> {
    let (Space::Chart(c1), Space::Chart(c2)) = (&f1.space, &f2.space) else {
        return Err(CliError::Usage("factors must be chart files".into()));
    };
    let pm = product_metric(c1, c2, true)?;
    let name = pm.joint().name().to_string();
    let t1 = f1.tensors.into_iter().map(|t| (t, c1.clone())).collect();
    let t2 = f2.tensors.into_iter().map(|t| (t, c2.clone())).collect();
    Ok(Loaded { name, space: Space::Product(pm), tensors: Vec::new(), factor_tensors: [t1, t2] })
}

pub fn load_metric(args: &JobArgs) -> Result<Loaded, CliError> {
    match args.metric.as_slice() {
        [one] => load_metric_file(one),
        [a, b] => product_of(load_metric_file(a)?, load_metric_file(b)?),
        _ => Err(CliError::Usage("give one --metric file, or two chart files for a product".into())),
    }
}

/// Momentum polynomial described by a tensor entry on `chart`.
pub fn tensor_poly(entry: &TensorEntry, chart: &Chart) -> Result<MomentumPolynomial, CliError> {
    let label = entry.name.as_deref().unwrap_or("tensor");
    let given = [entry.polynomial.is_some(), entry.covector.is_some(), entry.components.is_some()];
    if given.iter().filter(|&&b| b).count() != 1 {
        return Err(CliError::Parse(format!("{label}: give exactly one of polynomial, covector, components")));
    }
    let f = if let Some(text) = &entry.polynomial {
        MomentumPolynomial::parse(chart, text)?
    } else if let Some(list) = &entry.covector {
        let refs: Vec<&str> = list.iter().map(String::as_str).collect();
        tensor_to_poly(&SymmetricCotensor::covector(chart, &refs)?)
    } else {
        let comps = entry.components.as_ref().expect("checked above");
        let mut rank = entry.rank;
        let mut items = Vec::new();
        for (key, text) in comps {
            let mut idx = Vec::new();
            for name in key.split(',').map(str::trim) {
                idx.push(
                    chart
                        .coords()
                        .index_of(name)
                        .ok_or_else(|| CliError::Parse(format!("{label}: unknown coordinate `{name}` in `{key}`")))?,
                );
            }
            if *rank.get_or_insert(idx.len()) != idx.len() {
                return Err(CliError::Parse(format!("{label}: component `{key}` has the wrong rank")));
            }
            items.push((idx, parse_rf(text, chart.coords())?));
        }
        tensor_to_poly(&SymmetricCotensor::from_components(chart, rank.unwrap_or(0), items)?)
    };
    if let Some(r) = entry.rank {
        if !f.is_zero() && f.homogeneous_degree() != Some(r as u32) {
            return Err(CliError::Parse(format!("{label}: declared rank {r} does not match")));
        }
    }
    Ok(f)
}

/// Same polynomial on a chart with identically ordered, renamed coordinates.
fn relabel(f: &MomentumPolynomial, chart: &Chart) -> Result<MomentumPolynomial, CliError> {
    let vars = chart.coords();
    let mut terms = Vec::new();
    for (m, c) in f.terms() {
        let num = MultiPoly::from_terms(vars, c.num().terms().map(|(a, b)| (a.clone(), b.clone())));
        let den = MultiPoly::from_terms(vars, c.den().terms().map(|(a, b)| (a.clone(), b.clone())));
        terms.push((m.clone(), RationalFunction::new(num, den)?));
    }
    Ok(MomentumPolynomial::from_terms(chart, terms))
}

/// A named momentum polynomial resolved from `--tensor`.
pub struct Resolved {
    pub name: String,
    pub poly: MomentumPolynomial,
}

fn entry_chart(loaded: &Loaded, entry: &TensorEntry) -> Result<Chart, CliError> {
    match (entry.factor, &loaded.space) {
        (None, space) => Ok(space.chart().clone()),
        (Some(1), Space::Product(pm)) => Ok(pm.factor1().clone()),
        (Some(2), Space::Product(pm)) => Ok(pm.factor2().clone()),
        (Some(k), _) => Err(CliError::Parse(format!("tensor factor {k} needs a product metric with factors 1 and 2"))),
    }
}

pub fn resolve_tensor(loaded: &Loaded, family: &str) -> Result<Resolved, CliError> {
    let path = Path::new(family);
    if path.is_file() {
        let mut entry: TensorEntry = read_json(path)?;
        let name = entry
            .name
            .take()
            .unwrap_or_else(|| path.file_stem().map_or(family.to_string(), |s| s.to_string_lossy().into_owned()));
        let chart = entry_chart(loaded, &entry)?;
        return Ok(Resolved { poly: tensor_poly(&entry, &chart)?, name });
    }
    if let Some((name, k)) = family.rsplit_once('@') {
        let slot = match k {
            "1" => 0,
            "2" => 1,
            _ => return Err(CliError::Usage(format!("`{family}`: factor suffix must be @1 or @2"))),
        };
        let Space::Product(pm) = &loaded.space else {
            return Err(CliError::Usage(format!("`{family}` needs a product metric")));
        };
        let (entry, origin) = loaded.factor_tensors[slot]
            .iter()
            .find(|(t, _)| t.name.as_deref() == Some(name))
            .ok_or_else(|| CliError::Usage(format!("no tensor `{name}` in factor {k}")))?;
        let target = if slot == 0 { pm.factor1() } else { pm.factor2() };
        let poly = relabel(&tensor_poly(entry, origin)?, target)?;
        return Ok(Resolved { name: family.to_string(), poly });
    }
    let entry = loaded
        .tensors
        .iter()
        .find(|t| t.name.as_deref() == Some(family))
        .ok_or_else(|| CliError::Usage(format!("`{family}` is neither a file nor a tensor of {}", loaded.name)))?;
    Ok(Resolved { name: family.to_string(), poly: tensor_poly(entry, &entry_chart(loaded, entry)?)? })
}

fn tensors(loaded: &Loaded, args: &JobArgs, want: usize) -> Result<Vec<Resolved>, CliError> {
    if args.tensor.len() != want {
        return Err(CliError::Usage(format!("expected {want} --tensor argument(s), got {}", args.tensor.len())));
    }
    args.tensor.iter().map(|t| resolve_tensor(loaded, t)).collect()
}

fn parse_point(text: &str) -> Result<Vec<Rational>, CliError> {
    text.split(',')
        .map(|s| s.trim().parse::<Rational>().map_err(|e| CliError::Parse(format!("point entry `{s}`: {e}"))))
        .collect()
}

fn denominator(args: &JobArgs, chart: &Chart) -> Result<Option<MultiPoly>, CliError> {
    let Some(text) = &args.denominator else { return Ok(None) };
    let rf = parse_rf(text, chart.coords())?;
    if !rf.is_polynomial() {
        return Err(CliError::Parse(format!("denominator `{text}` must be a polynomial")));
    }
    Ok(Some(rf.num().clone()))
}

fn ansatz(args: &JobArgs, chart: &Chart) -> Result<AnsatzFamily, CliError> {
    let d = args.degree.ok_or_else(|| CliError::Usage("--degree is required".into()))?;
    Ok(match denominator(args, chart)? {
        None => AnsatzFamily::polynomial(d, args.coeff_degree),
        Some(den) => AnsatzFamily::with_denominator(d, args.coeff_degree, den)?,
    })
}

fn check_config(args: &JobArgs) -> Result<(), CliError> {
    if !(args.step > 0.0 && args.step.is_finite()) {
        return Err(CliError::Usage("--step must be positive".into()));
    }
    if !(args.tol > 0.0) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    if !(args.smax.is_finite() && args.smax > 0.0) {
        return Err(CliError::Usage("--smax must be positive".into()));
    }
    Ok(())
}

fn describe_chart(out: &mut String, label: &str, chart: &Chart) {
    let names = chart.coords().names().join(", ");
    let _ = writeln!(out, "{label}: {} (dimension {}: {names})", chart.name(), chart.dim());
    if !chart.domain_note().is_empty() {
        let _ = writeln!(out, "domain: {}", chart.domain_note());
    }
    let _ = writeln!(out, "det g = {}", chart.determinant());
}

fn ladder_text(f: &MomentumPolynomial) -> String {
    match ladder_degree(f, LADDER_BUDGET) {
        LadderDegree::Exact(k) => k.to_string(),
        LadderDegree::ExceedsBudget => format!("> {LADDER_BUDGET}"),
    }
}

fn cmd_validate(args: &JobArgs) -> Result<String, CliError> {
    let loaded = load_metric(args)?;
    let mut out = String::new();
    let _ = writeln!(out, "OK: {}", loaded.name);
    describe_chart(&mut out, "chart", loaded.space.chart());
    if let Space::Product(pm) = &loaded.space {
        describe_chart(&mut out, "factor 1", pm.factor1());
        describe_chart(&mut out, "factor 2", pm.factor2());
    }
    for t in &loaded.tensors {
        let name = t.name.clone().ok_or_else(|| CliError::Parse("tensor without a name".into()))?;
        let f = tensor_poly(t, &entry_chart(&loaded, t)?)?;
        let deg = f.homogeneous_degree().map_or("inhomogeneous".to_string(), |d| format!("degree {d}"));
        let _ = writeln!(out, "tensor {name}: {deg}, ladder degree {}", ladder_text(&f));
    }
    for (slot, list) in loaded.factor_tensors.iter().enumerate() {
        for (t, chart) in list {
            tensor_poly(t, chart)?;
            let _ = writeln!(out, "tensor {}@{}: ok", t.name.as_deref().unwrap_or("?"), slot + 1);
        }
    }
    Ok(out)
}

fn cmd_christoffel(args: &JobArgs) -> Result<String, CliError> {
    let loaded = load_metric(args)?;
    let chart = loaded.space.chart();
    let names = chart.coords().names();
    let gamma = chart.christoffel();
    let mut out = String::new();
    let mut any = false;
    for (k, i, j, v) in gamma.nonzero() {
        any = true;
        let _ = writeln!(out, "Gamma^{}_{{{} {}}} = {v}", names[k], names[i], names[j]);
    }
    if !any {
        out.push_str("all Christoffel symbols vanish\n");
    }
    Ok(out)
}

fn cmd_hamiltonian(args: &JobArgs) -> Result<String, CliError> {
    let loaded = load_metric(args)?;
    Ok(format!("H = {}\n", hamiltonian(loaded.space.chart())))
}

fn cmd_solve(args: &JobArgs, k: u32) -> Result<String, CliError> {
    let loaded = load_metric(args)?;
    let chart = loaded.space.chart();
    let family = ansatz(args, chart)?;
    let basis = solve_ladder(chart, family.momentum_degree, k, &family)?;
    let mut out = String::new();
    let den = family.denominator.as_ref().map_or("1".to_string(), |d| d.to_string());
    let _ = writeln!(
        out,
        "ansatz: degree {}, coefficient degree {}, denominator {den}",
        family.momentum_degree, family.coeff_degree
    );
    let _ = writeln!(out, "ladder index k = {k}");
    let _ = writeln!(out, "dimension: {}", basis.dim());
    for (i, f) in basis.basis.iter().enumerate() {
        let _ = writeln!(out, "[{i}] {f}");
    }
    Ok(out)
}

fn cmd_bracket(args: &JobArgs) -> Result<String, CliError> {
    let loaded = load_metric(args)?;
    let chart = loaded.space.chart();
    let (label, value) = match args.tensor.len() {
        1 => {
            let f = resolve_tensor(&loaded, &args.tensor[0])?;
            (format!("{{H, {}}}", f.name), poisson_bracket(&hamiltonian(chart), &f.poly.embed(chart)?)?)
        }
        2 => {
            let f = resolve_tensor(&loaded, &args.tensor[0])?;
            let g = resolve_tensor(&loaded, &args.tensor[1])?;
            (format!("{{{}, {}}}", f.name, g.name), poisson_bracket(&f.poly.embed(chart)?, &g.poly.embed(chart)?)?)
        }
        _ => return Err(CliError::Usage("bracket takes one or two --tensor arguments".into())),
    };
    Ok(format!("{label} = {value}\n"))
}

fn cmd_hk(args: &JobArgs) -> Result<String, CliError> {
    let loaded = load_metric(args)?;
    let f = tensors(&loaded, args, 1)?.remove(0);
    let k = args.ladder.unwrap_or(1);
    let chart = loaded.space.chart();
    let poly = f.poly.embed(chart)?;
    let mut out = String::new();
    let _ = writeln!(out, "H^{k}({}) = {}", f.name, iterate_h(&poly, k));
    let _ = writeln!(out, "ladder degree: {}", ladder_text(&poly));
    Ok(out)
}

fn cmd_product(args: &JobArgs) -> Result<String, CliError> {
    let loaded = load_metric(args)?;
    let pm = loaded.space.product()?;
    let mut out = String::new();
    describe_chart(&mut out, "product", pm.joint());
    let names = pm.joint().coords().names();
    for i in 0..pm.joint().dim() {
        for j in 0..=i {
            let g = pm.joint().g(i, j);
            if !g.is_zero() {
                let _ = writeln!(out, "g[{}, {}] = {g}", names[i], names[j]);
            }
        }
    }
    let _ = writeln!(out, "H1 = {}", pm.h1());
    let _ = writeln!(out, "H2 = {}", pm.h2());
    let _ = writeln!(out, "H = {}", hamiltonian(pm.joint()));
    Ok(out)
}

fn cmd_compose(args: &JobArgs) -> Result<(String, Option<String>), CliError> {
    let loaded = load_metric(args)?;
    let pm = loaded.space.product()?;
    let ts = tensors(&loaded, args, 2)?;
    let k = args.ladder.ok_or_else(|| CliError::Usage("--ladder is required".into()))?;
    let f1 = LadderElement::certify(ts[0].poly.embed(pm.factor1())?, LADDER_BUDGET)?;
    let f2 = LadderElement::certify(ts[1].poly.embed(pm.factor2())?, LADDER_BUDGET)?;
    let f = compose_integral(&f1, &f2, k, pm)?;
    let mut out = String::new();
    let _ = writeln!(out, "f1 = {} (degree {}, ladder degree {})", f1.poly(), f1.degree(), f1.k());
    let _ = writeln!(out, "f2 = {} (degree {}, ladder degree {})", f2.poly(), f2.degree(), f2.k());
    let _ = writeln!(out, "F = {f}");
    let deg = f.homogeneous_degree().map_or("-".to_string(), |d| d.to_string());
    let _ = writeln!(out, "degree: {deg}");
    let entry = TensorEntry {
        name: Some(format!("compose_{}_{}_k{k}", ts[0].name.replace('@', "_"), ts[1].name.replace('@', "_"))),
        polynomial: Some(f.to_string()),
        ..Default::default()
    };
    let json = serde_json::to_string_pretty(&entry).expect("tensor entries serialize") + "\n";
    Ok((out, Some(json)))
}

fn decompose_job(args: &JobArgs) -> Result<(Loaded, Resolved, crate::product::ReducibleForm), CliError> {
    let loaded = load_metric(args)?;
    let pm = loaded.space.product()?;
    let f = tensors(&loaded, args, 1)?.remove(0);
    let den = denominator(args, pm.joint())?;
    let (s1, s2) = split_ansatz(pm, args.coeff_degree, den.as_ref())?;
    let rf = decompose_integral(&f.poly, pm, &s1, &s2)?;
    Ok((loaded, f, rf))
}

fn cmd_decompose(args: &JobArgs) -> Result<String, CliError> {
    let (loaded, f, rf) = decompose_job(args)?;
    let pm = loaded.space.product()?;
    let split = bihomogeneous_split(&f.poly, pm)?;
    let mut out = String::new();
    let _ = writeln!(out, "input {}: {}", f.name, f.poly);
    let _ = writeln!(out, "bi-degree parts: {}", split.parts.iter().filter(|p| !p.is_zero()).count());
    let _ = writeln!(out, "{rf}");
    let back = rf.expand(pm)?;
    let _ = writeln!(out, "re-expansion matches input: {}", back == f.poly.embed(pm.joint())?);
    Ok(out)
}

fn cmd_classify(args: &JobArgs) -> Result<String, CliError> {
    let (loaded, f, rf) = decompose_job(args)?;
    let pm = loaded.space.product()?;
    let class = reducibility_classify(&rf, pm)?;
    let mut out = String::new();
    let _ = writeln!(out, "{}: {}", f.name, class.label());
    if let Classification::IrreducibleWitnessed { witness, bidegree } = &class {
        let _ = writeln!(out, "witness: component of {{H1, F}} of bi-degree ({}, {})", bidegree.0, bidegree.1);
        let _ = writeln!(out, "  {witness}");
    }
    let split = bihomogeneous_split(&f.poly, pm)?;
    let chain = chain_check(&split, pm)?;
    let _ = writeln!(out, "chain equations: {}", if chain.is_none() { "all hold" } else { "violated" });
    Ok(out)
}

fn cmd_verify_numeric(args: &JobArgs) -> Result<(String, Option<String>), CliError> {
    check_config(args)?;
    let loaded = load_metric(args)?;
    let chart = loaded.space.chart().clone();
    let mut quantities = vec![Resolved { name: "H".into(), poly: hamiltonian(&chart) }];
    let names: Vec<String> = if args.tensor.is_empty() {
        loaded.tensors.iter().filter_map(|t| t.name.clone()).collect()
    } else {
        args.tensor.clone()
    };
    for n in &names {
        let r = resolve_tensor(&loaded, n)?;
        quantities.push(Resolved { poly: r.poly.embed(&chart)?, name: r.name });
    }
    let mut thresholds = Vec::new();
    for family in &args.min_momentum {
        let (name, value) =
            family.split_once('=').ok_or_else(|| CliError::Usage(format!("`{family}`: expected NAME=VALUE")))?;
        let idx = (0..chart.dim())
            .find(|&i| chart.momentum_name(i) == name || chart.coords().names()[i] == name)
            .ok_or_else(|| CliError::Usage(format!("unknown momentum `{name}`")))?;
        let v: f64 = value.parse().map_err(|_| CliError::Usage(format!("`{family}`: bad value")))?;
        thresholds.push((idx, v));
    }
    let field = GeodesicField::new(&chart);
    let cfg = BatchConfig {
        ranges: vec![(0.5, 1.5); chart.dim()],
        count: args.count,
        seed: args.seed,
        s_max: args.smax,
        step: args.step,
    };
    let watch: Vec<MomentumPolynomial> = quantities.iter().map(|q| q.poly.clone()).collect();
    let batch = sample_trajectories(&field, &cfg, |st| thresholds.iter().all(|&(i, v)| st.p[i].abs() >= v), &watch)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "chart: {} ({} trajectories, seed {}, s in [0, {}], step {})",
        chart.name(),
        args.count,
        args.seed,
        args.smax,
        args.step
    );
    let _ = writeln!(out, "rejected initial data (pole on trajectory): {}", batch.rejected);
    let mut rows = Vec::new();
    for q in &quantities {
        let k = ladder_degree(&q.poly, LADDER_BUDGET);
        let k_fit = match k {
            LadderDegree::Exact(k) => k.max(1) as usize,
            LadderDegree::ExceedsBudget => LADDER_BUDGET as usize,
        };
        let recs = quantity_records(&q.name, &q.poly, &batch.trajectories, k_fit, args.tol)?;
        let drift = recs.iter().map(|r| r.rel_drift).fold(0.0, f64::max);
        let fdeg = recs.iter().map(|r| r.fitted_degree).max().unwrap_or(0);
        let rms = recs.iter().map(|r| r.residual_rms).fold(0.0, f64::max);
        let verdict = match k {
            LadderDegree::Exact(0) => "zero".to_string(),
            LadderDegree::Exact(1) => {
                let bound = if q.name == "H" { 1e-9 } else { 1e-8 };
                format!("integral, max relative variation {drift:.3e} {}", if drift < bound { "PASS" } else { "FAIL" })
            }
            LadderDegree::Exact(k) => format!(
                "ladder degree {k}, max fitted degree {fdeg}, max rms {rms:.3e} {}",
                if fdeg < k as usize && rms < args.tol { "PASS" } else { "FAIL" }
            ),
            LadderDegree::ExceedsBudget => format!("no ladder degree up to {LADDER_BUDGET}, max fitted degree {fdeg}"),
        };
        let _ = writeln!(out, "{}: {verdict}", q.name);
        rows.extend(recs);
    }
    let mut csv = Vec::new();
    write_csv(&rows, &mut csv)?;
    Ok((out, Some(String::from_utf8(csv).expect("csv output is utf-8"))))
}

fn cmd_curvature(args: &JobArgs) -> Result<String, CliError> {
    let loaded = load_metric(args)?;
    let text = args.point.as_deref().ok_or_else(|| CliError::Usage("--point is required".into()))?;
    let point = parse_point(text)?;
    let chart = loaded.space.chart();
    if point.len() != chart.dim() {
        return Err(CliError::Usage(format!(
            "point has {} entries, chart has {} coordinates",
            point.len(),
            chart.dim()
        )));
    }
    Ok(sectional_curvature_degeneracy(chart, &point)?.to_string())
}

fn emit(text: &str, artifact: Option<String>, out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let body = artifact.unwrap_or_else(|| text.to_string());
            fs::write(path, body).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            print!("{text}");
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// Runs one command; the report goes to stdout and, with `--out`, the
/// command's artifact (tensor file, CSV table or the report) to that path.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let (text, artifact, args) = match &cli.command {
        Command::Validate(a) => (cmd_validate(a)?, None, a),
        Command::Christoffel(a) => (cmd_christoffel(a)?, None, a),
        Command::Hamiltonian(a) => (cmd_hamiltonian(a)?, None, a),
        Command::KillingSolve(a) => (cmd_solve(a, 1)?, None, a),
        Command::LadderSolve(a) => {
            let k = a.ladder.ok_or_else(|| CliError::Usage("--ladder is required".into()))?;
            (cmd_solve(a, k)?, None, a)
        }
        Command::Bracket(a) => (cmd_bracket(a)?, None, a),
        Command::Hk(a) => (cmd_hk(a)?, None, a),
        Command::Product(a) => (cmd_product(a)?, None, a),
        Command::Compose(a) => {
            let (t, j) = cmd_compose(a)?;
            (t, j, a)
        }
        Command::Decompose(a) => (cmd_decompose(a)?, None, a),
        Command::Classify(a) => (cmd_classify(a)?, None, a),
        Command::VerifyNumeric(a) => {
            let (t, c) = cmd_verify_numeric(a)?;
            (t, c, a)
        }
        Command::CurvatureDegeneracy(a) => (cmd_curvature(a)?, None, a),
    };
    emit(&text, artifact, &args.out)
}

/// Entry point returning the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests;
