//! Coordinate charts, Levi-Civita connection, the Killing operator and the
//! correspondence between symmetric covariant tensors and homogeneous
//! momentum polynomials.

mod curvature;

pub use curvature::{riemann_at, sectional_curvature_degeneracy, BlockSolution, DegeneracyReport, RiemannAtPoint};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_traits::One;
use thiserror::Error;

use crate::algebra::{parse_expression, AlgebraError, Monomial, Rational, RationalFunction, Variables};
use crate::flow::MomentumPolynomial;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("metric is symbolically singular (det g = 0)")]
    SingularMetric,
    #[error("metric matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("metric must have at least one coordinate and a square matrix")]
    BadShape,
    #[error("objects live on different charts")]
    ChartMismatch,
    #[error("momentum polynomial is not homogeneous")]
    NotHomogeneous,
    #[error("index {0} out of range for the chart dimension")]
    IndexOutOfRange(usize),
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Coordinate chart with a symmetric, symbolically invertible metric.
pub struct MetricChart {
    name: String,
    coords: Variables,
    g: Vec<Vec<RationalFunction>>,
    domain_note: String,
    inverse: Vec<Vec<RationalFunction>>,
    christoffel: OnceLock<Arc<ChristoffelSymbols>>,
    hamiltonian: OnceLock<BTreeMap<Monomial, RationalFunction>>,
}

pub type Chart = Arc<MetricChart>;

impl fmt::Debug for MetricChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricChart").field("name", &self.name).field("coords", &self.coords.names()).finish()
    }
}

impl MetricChart {
    pub fn new(
        name: impl Into<String>,
        coords: Variables,
        g: Vec<Vec<RationalFunction>>,
        domain_note: impl Into<String>,
    ) -> Result<Chart, GeometryError> {
        let n = coords.len();
        if n == 0 || g.len() != n || g.iter().any(|row| row.len() != n) {
            return Err(GeometryError::BadShape);
        }
        for i in 0..n {
            for j in 0..i {
                if g[i][j] != g[j][i] {
                    return Err(GeometryError::NotSymmetric(i, j));
                }
            }
        }
        let inverse = inverse_metric(&g)?;
        Ok(Arc::new(MetricChart {
            name: name.into(),
            coords,
            g,
            domain_note: domain_note.into(),
            inverse,
            christoffel: OnceLock::new(),
            hamiltonian: OnceLock::new(),
        }))
    }

    /// Diagonal metric from coefficient expressions.
    pub fn diagonal(name: &str, coords: &[&str], diag: &[&str], domain_note: &str) -> Result<Chart, GeometryError> {
        let vars = Variables::new(coords);
        let n = coords.len();
        if diag.len() != n {
            return Err(GeometryError::BadShape);
        }
        let mut g = vec![vec![RationalFunction::zero(&vars); n]; n];
        for (i, text) in diag.iter().enumerate() {
            g[i][i] = parse_expression(text, coords).map_err(AlgebraError::from)?.to_rational_function(&vars)?;
        }
        Self::new(name, vars, g, domain_note)
    }

    /// Flat metric `Σ dx_i²` on the given coordinates.
    pub fn euclidean(name: &str, coords: &[&str]) -> Chart {
        let ones = vec!["1"; coords.len()];
        Self::diagonal(name, coords, &ones, "").expect("identity metric is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coords(&self) -> &Variables {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn domain_note(&self) -> &str {
        &self.domain_note
    }

    pub fn metric(&self) -> &[Vec<RationalFunction>] {
        &self.g
    }

    pub fn g(&self, i: usize, j: usize) -> &RationalFunction {
        &self.g[i][j]
    }

    pub fn inverse(&self) -> &[Vec<RationalFunction>] {
        &self.inverse
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim()).all(|i| (0..self.dim()).all(|j| i == j || self.g[i][j].is_zero()))
    }

    /// Name of the momentum conjugate to coordinate `i`.
    pub fn momentum_name(&self, i: usize) -> String {
        format!("p_{}", self.coords.names()[i])
    }

    pub fn christoffel(&self) -> Arc<ChristoffelSymbols> {
        self.christoffel.get_or_init(|| Arc::new(compute_christoffel(self))).clone()
    }

    pub(crate) fn hamiltonian_terms(&self) -> &BTreeMap<Monomial, RationalFunction> {
        self.hamiltonian.get_or_init(|| {
            let n = self.dim();
            let half = Rational::new(BigInt::one(), BigInt::from(2));
            let mut terms = BTreeMap::new();
            for i in 0..n {
                for j in i..n {
                    let c = &self.inverse[i][j];
                    if c.is_zero() {
                        continue;
                    }
                    let mut exps = vec![0u32; n];
                    exps[i] += 1;
                    exps[j] += 1;
                    let coef = if i == j { c.scale(&half) } else { c.clone() };
                    terms.insert(Monomial::from_exponents(&exps), coef);
                }
            }
            terms
        })
    }

    /// Same metric under new coordinate names (positional).
    pub fn renamed(&self, name: &str, coords: &[String]) -> Result<Chart, GeometryError> {
        if coords.len() != self.dim() {
            return Err(GeometryError::BadShape);
        }
        let vars = Variables::new(coords);
        let move_poly = |p: &crate::algebra::MultiPoly| {
            crate::algebra::MultiPoly::from_terms(&vars, p.terms().map(|(m, c)| (m.clone(), c.clone())))
        };
        let g = self
            .g
            .iter()
            .map(|row| {
                row.iter()
                    .map(|f| RationalFunction::new(move_poly(f.num()), move_poly(f.den())))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let note = rename_identifiers(&self.domain_note, self.coords.names(), coords);
        Self::new(name, vars, g, note)
    }

    pub fn same_chart(a: &Chart, b: &Chart) -> bool {
        Arc::ptr_eq(a, b) || (a.coords == b.coords && a.g == b.g)
    }

    /// Determinant of the metric as a rational function.
    pub fn determinant(&self) -> RationalFunction {
        rf_determinant(&self.g)
    }
}

fn rf_determinant(m: &[Vec<RationalFunction>]) -> RationalFunction {
    let n = m.len();
    let vars = m[0][0].vars().clone();
    let mut a: Vec<Vec<RationalFunction>> = m.to_vec();
    let mut det = RationalFunction::one(&vars);
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[i][k].is_zero()) else {
            return RationalFunction::zero(&vars);
        };
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        det = &det * &a[k][k];
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let factor = &a[i][k] / &a[k][k];
            for j in k..n {
                let t = &factor * &a[k][j];
                a[i][j] = &a[i][j] - &t;
            }
        }
    }
    det
}

/// Inverse of a symmetric matrix of rational functions by Gauss-Jordan elimination.
/// Replaces whole identifiers `old[i]` by `new[i]` in free text.
fn rename_identifiers(text: &str, old: &[String], new: &[String]) -> String {
    let mut out = String::with_capacity(text.len());
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        match old.iter().position(|o| o == word) {
            Some(i) => out.push_str(&new[i]),
            None => out.push_str(word),
        }
        word.clear();
    };
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '_' {
            word.push(ch);
        } else {
            flush(&mut word, &mut out);
            out.push(ch);
        }
    }
    flush(&mut word, &mut out);
    out
}

pub fn inverse_metric(g: &[Vec<RationalFunction>]) -> Result<Vec<Vec<RationalFunction>>, GeometryError> {
    let n = g.len();
    if n == 0 {
        return Err(GeometryError::BadShape);
    }
    let vars = g[0][0].vars().clone();
    let zero = RationalFunction::zero(&vars);
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || g[i][j].is_zero()));
    if diagonal {
        let mut inv = vec![vec![zero.clone(); n]; n];
        for i in 0..n {
            inv[i][i] = g[i][i].recip().map_err(|_| GeometryError::SingularMetric)?;
        }
        return Ok(inv);
    }
    let mut a: Vec<Vec<RationalFunction>> = g.to_vec();
    let mut inv: Vec<Vec<RationalFunction>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { RationalFunction::one(&vars) } else { zero.clone() }).collect())
        .collect();
    for k in 0..n {
        let p = (k..n).find(|&i| !a[i][k].is_zero()).ok_or(GeometryError::SingularMetric)?;
        a.swap(p, k);
        inv.swap(p, k);
        let piv = a[k][k].recip()?;
        for j in 0..n {
            a[k][j] = &a[k][j] * &piv;
            inv[k][j] = &inv[k][j] * &piv;
        }
        for i in 0..n {
            if i == k || a[i][k].is_zero() {
                continue;
            }
            let factor = a[i][k].clone();
            for j in 0..n {
                let t = &factor * &a[k][j];
                a[i][j] = &a[i][j] - &t;
                let t = &factor * &inv[k][j];
                inv[i][j] = &inv[i][j] - &t;
            }
        }
    }
    Ok(inv)
}

/// Γ^k_{ij}, stored for `i <= j`.
#[derive(Debug, Clone)]
pub struct ChristoffelSymbols {
    dim: usize,
    values: Vec<BTreeMap<(usize, usize), RationalFunction>>,
    zero: RationalFunction,
}

impl ChristoffelSymbols {
    pub fn get(&self, k: usize, i: usize, j: usize) -> &RationalFunction {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.values[k].get(&key).unwrap_or(&self.zero)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|m| m.is_empty())
    }

    /// Nonzero entries as `(k, i, j, Γ^k_{ij})` with `i <= j`.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, usize, &RationalFunction)> {
        self.values.iter().enumerate().flat_map(|(k, m)| m.iter().map(move |(&(i, j), v)| (k, i, j, v)))
    }
}

pub fn christoffel(chart: &MetricChart) -> Arc<ChristoffelSymbols> {
    chart.christoffel()
}

fn compute_christoffel(chart: &MetricChart) -> ChristoffelSymbols {
    let n = chart.dim();
    let vars = chart.coords.clone();
    // dg[l][i][j] = ∂_l g_ij
    let dg: Vec<Vec<Vec<RationalFunction>>> =
        (0..n).map(|l| (0..n).map(|i| (0..n).map(|j| chart.g[i][j].partial(l)).collect()).collect()).collect();
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let mut values = vec![BTreeMap::new(); n];
    for i in 0..n {
        for j in i..n {
            // first-kind symbols Γ_{lij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
            let first: Vec<RationalFunction> =
                (0..n).map(|l| (&(&dg[i][j][l] + &dg[j][i][l]) - &dg[l][i][j]).scale(&half)).collect();
            for (k, slot) in values.iter_mut().enumerate() {
                let mut acc = RationalFunction::zero(&vars);
                for (l, fl) in first.iter().enumerate() {
                    if fl.is_zero() || chart.inverse[k][l].is_zero() {
                        continue;
                    }
                    acc = &acc + &(&chart.inverse[k][l] * fl);
                }
                if !acc.is_zero() {
                    slot.insert((i, j), acc);
                }
            }
        }
    }
    ChristoffelSymbols { dim: n, values, zero: RationalFunction::zero(&vars) }
}

/// Symmetric covariant tensor of rank `d`, stored on sorted index tuples.
#[derive(Clone, Debug)]
pub struct SymmetricCotensor {
    chart: Chart,
    rank: usize,
    components: BTreeMap<Vec<usize>, RationalFunction>,
}

impl PartialEq for SymmetricCotensor {
    fn eq(&self, other: &Self) -> bool {
        MetricChart::same_chart(&self.chart, &other.chart)
            && self.rank == other.rank
            && self.components == other.components
    }
}

impl SymmetricCotensor {
    pub fn zero(chart: &Chart, rank: usize) -> Self {
        SymmetricCotensor { chart: chart.clone(), rank, components: BTreeMap::new() }
    }

    /// Builds a tensor from `(indices, value)` pairs; index order is irrelevant,
    /// repeated tuples are summed.
    pub fn from_components<I>(chart: &Chart, rank: usize, comps: I) -> Result<Self, GeometryError>
    where
        I: IntoIterator<Item = (Vec<usize>, RationalFunction)>,
    {
        let mut t = Self::zero(chart, rank);
        for (mut idx, v) in comps {
            if idx.len() != rank {
                return Err(GeometryError::BadShape);
            }
            if let Some(&bad) = idx.iter().find(|&&i| i >= chart.dim()) {
                return Err(GeometryError::IndexOutOfRange(bad));
            }
            idx.sort_unstable();
            t.add_component(idx, v);
        }
        Ok(t)
    }

    /// Covector `Σ c_i dx^i` from coefficient expressions.
    pub fn covector(chart: &Chart, coeffs: &[&str]) -> Result<Self, GeometryError> {
        if coeffs.len() != chart.dim() {
            return Err(GeometryError::BadShape);
        }
        let names = chart.coords().names().to_vec();
        let mut comps = Vec::new();
        for (i, text) in coeffs.iter().enumerate() {
            let v = parse_expression(text, &names).map_err(AlgebraError::from)?.to_rational_function(chart.coords())?;
            comps.push((vec![i], v));
        }
        Self::from_components(chart, 1, comps)
    }

    /// The metric itself as a rank-2 tensor.
    pub fn metric(chart: &Chart) -> Self {
        let n = chart.dim();
        let mut comps = Vec::new();
        for i in 0..n {
            for j in i..n {
                comps.push((vec![i, j], chart.g(i, j).clone()));
            }
        }
        Self::from_components(chart, 2, comps).expect("metric indices are valid")
    }

    fn add_component(&mut self, idx: Vec<usize>, v: RationalFunction) {
        if v.is_zero() {
            return;
        }
        match self.components.entry(idx) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(v);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get() + &v;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &BTreeMap<Vec<usize>, RationalFunction> {
        &self.components
    }

    pub fn component(&self, idx: &[usize]) -> RationalFunction {
        let mut key = idx.to_vec();
        key.sort_unstable();
        self.components.get(&key).cloned().unwrap_or_else(|| RationalFunction::zero(self.chart.coords()))
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, GeometryError> {
        if !MetricChart::same_chart(&self.chart, &other.chart) || self.rank != other.rank {
            return Err(GeometryError::ChartMismatch);
        }
        let mut out = self.clone();
        for (k, v) in &other.components {
            out.add_component(k.clone(), v.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = Self::zero(&self.chart, self.rank);
        for (k, v) in &self.components {
            out.add_component(k.clone(), v.scale(c));
        }
        out
    }

    /// Symmetrised tensor product (projector normalisation), so that
    /// `tensor_to_poly(a ⊙ b) = tensor_to_poly(a) · tensor_to_poly(b)`.
    pub fn sym_product(&self, other: &Self) -> Result<Self, GeometryError> {
        let fa = tensor_to_poly(self);
        let fb = tensor_to_poly(other);
        poly_to_tensor(&fa.checked_mul(&fb).map_err(|_| GeometryError::ChartMismatch)?)
    }
}

impl fmt::Display for SymmetricCotensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return write!(f, "0");
        }
        let names = self.chart.coords().names();
        let mut first = true;
        for (idx, v) in &self.components {
            if !first {
                writeln!(f)?;
            }
            first = false;
            let label: Vec<&str> = idx.iter().map(|&i| names[i].as_str()).collect();
            write!(f, "[{}] {}", label.join(","), v)?;
        }
        Ok(())
    }
}

/// Sorted multiset of indices → exponent vector.
fn exponent_of(idx: &[usize], n: usize) -> Vec<u32> {
    let mut e = vec![0u32; n];
    for &i in idx {
        e[i] += 1;
    }
    e
}

/// Number of distinct orderings of a multiset with exponent vector `e`.
fn multinomial(e: &[u32]) -> BigInt {
    let total: u32 = e.iter().sum();
    let fact = |k: u32| (1..=k).fold(BigInt::one(), |acc, v| acc * BigInt::from(v));
    e.iter().fold(fact(total), |acc, &k| acc / fact(k))
}

/// Symmetrised covariant derivative `K_{(i1…id, j)}` averaged over all
/// `(d+1)!` index permutations. Vanishes exactly for Killing tensors.
pub fn killing_operator(k: &SymmetricCotensor) -> SymmetricCotensor {
    let chart = k.chart.clone();
    let n = chart.dim();
    let d = k.rank;
    let gamma = chart.christoffel();
    let vars = chart.coords().clone();
    let weight = Rational::new(BigInt::one(), BigInt::from(d as u64 + 1));
    let mut out = SymmetricCotensor::zero(&chart, d + 1);
    for tuple in sorted_tuples(n, d + 1) {
        let mut acc = RationalFunction::zero(&vars);
        for t in 0..=d {
            let j = tuple[t];
            let rest: Vec<usize> = tuple.iter().enumerate().filter(|(s, _)| *s != t).map(|(_, &v)| v).collect();
            let mut term = k.component(&rest).partial(j);
            for a in 0..d {
                for l in 0..n {
                    let g = gamma.get(l, j, rest[a]);
                    if g.is_zero() {
                        continue;
                    }
                    let mut replaced = rest.clone();
                    replaced[a] = l;
                    let c = k.component(&replaced);
                    if c.is_zero() {
                        continue;
                    }
                    term = &term - &(g * &c);
                }
            }
            acc = &acc + &term;
        }
        out.add_component(tuple, acc.scale(&weight));
    }
    out
}

/// All non-decreasing index tuples of the given length.
pub fn sorted_tuples(n: usize, len: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, len: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, len, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, len, 0, &mut Vec::new(), &mut out);
    out
}

/// Substitutes the linear forms `forms[i]` (degree-1 momentum polynomials)
/// for the formal variables of `Σ mult(J) K_J v^J`.
fn contract_with_forms(k: &SymmetricCotensor, forms: &[MomentumPolynomial]) -> MomentumPolynomial {
    let chart = k.chart.clone();
    let n = chart.dim();
    let mut total = MomentumPolynomial::zero(&chart);
    for (idx, v) in &k.components {
        let e = exponent_of(idx, n);
        let mut prod = MomentumPolynomial::constant(&chart, v.scale(&Rational::from_integer(multinomial(&e))));
        for &i in idx {
            prod = prod.checked_mul(&forms[i]).expect("same chart");
        }
        total = total.checked_add(&prod).expect("same chart");
    }
    total
}

/// `F = K^{i1…id} p_{i1}…p_{id}` with indices raised by the inverse metric.
pub fn tensor_to_poly(k: &SymmetricCotensor) -> MomentumPolynomial {
    let chart = k.chart.clone();
    let n = chart.dim();
    if k.rank == 0 {
        return MomentumPolynomial::constant(&chart, k.component(&[]));
    }
    // v^j = g^{ij} p_i
    let forms: Vec<MomentumPolynomial> = (0..n)
        .map(|j| {
            let terms = (0..n)
                .filter(|&i| !chart.inverse()[i][j].is_zero())
                .map(|i| (Monomial::unit(n, i), chart.inverse()[i][j].clone()));
            MomentumPolynomial::from_terms(&chart, terms)
        })
        .collect();
    contract_with_forms(k, &forms)
}

/// Inverse of [`tensor_to_poly`] for homogeneous polynomials.
pub fn poly_to_tensor(f: &MomentumPolynomial) -> Result<SymmetricCotensor, GeometryError> {
    let chart = f.chart().clone();
    let n = chart.dim();
    let d = match f.homogeneous_degree() {
        Some(d) => d as usize,
        None if f.is_zero() => 0,
        None => return Err(GeometryError::NotHomogeneous),
    };
    // p_i = g_{ij} v^j; substitute and read off Σ mult(J) K_J v^J
    let forms: Vec<MomentumPolynomial> = (0..n)
        .map(|i| {
            let terms =
                (0..n).filter(|&j| !chart.g(i, j).is_zero()).map(|j| (Monomial::unit(n, j), chart.g(i, j).clone()));
            MomentumPolynomial::from_terms(&chart, terms)
        })
        .collect();
    let lowered = f.substitute_momenta(&forms);
    let mut comps = Vec::new();
    for (m, c) in lowered.terms() {
        let idx: Vec<usize> =
            m.exponents().iter().enumerate().flat_map(|(i, &e)| std::iter::repeat_n(i, e as usize)).collect();
        let mult = Rational::from_integer(multinomial(m.exponents()));
        comps.push((idx, c.scale(&mult.recip())));
    }
    SymmetricCotensor::from_components(&chart, d, comps)
}

/// Parses a coefficient expression over the chart coordinates.
pub fn parse_coefficient(chart: &Chart, text: &str) -> Result<RationalFunction, GeometryError> {
    let names = chart.coords().names().to_vec();
    Ok(parse_expression(text, &names).map_err(AlgebraError::from)?.to_rational_function(chart.coords())?)
}

/// Symmetric square `ω ⊙ ω` of a covector (coefficient 1 on each `ω_i ω_j`).
pub fn covector_square(w: &SymmetricCotensor) -> Result<SymmetricCotensor, GeometryError> {
    w.sym_product(w)
}

#[cfg(test)]
mod tests;
