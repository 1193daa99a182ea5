//! Momentum polynomials, the geodesic Hamiltonian, the canonical Poisson
//! bracket and the iterated operator `H^k f = {𝓗, {𝓗, … {𝓗, f}}}`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::algebra::{parse_expression, AlgebraError, Monomial, MultiPoly, Rational, RationalFunction, Variables};
use crate::geometry::{Chart, MetricChart};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("operands live on different charts")]
    ChartMismatch,
    #[error("momentum polynomial is not homogeneous")]
    NotHomogeneous,
    #[error("expression is not polynomial in the momenta: {0}")]
    NotPolynomialInMomenta(String),
    #[error("ladder certificate failed: H^{k} f is nonzero")]
    NotInLadder { k: u32 },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Polynomial in the momenta with rational-function coefficients in the
/// chart coordinates.
#[derive(Clone, Debug)]
pub struct MomentumPolynomial {
    chart: Chart,
    terms: BTreeMap<Monomial, RationalFunction>,
}

impl PartialEq for MomentumPolynomial {
    fn eq(&self, other: &Self) -> bool {
        MetricChart::same_chart(&self.chart, &other.chart) && self.terms == other.terms
    }
}

impl MomentumPolynomial {
    pub fn zero(chart: &Chart) -> Self {
        MomentumPolynomial { chart: chart.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(chart: &Chart, c: RationalFunction) -> Self {
        Self::from_terms(chart, [(Monomial::one(chart.dim()), c)])
    }

    pub fn from_terms<I>(chart: &Chart, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, RationalFunction)>,
    {
        let mut grouped: BTreeMap<Monomial, Vec<RationalFunction>> = BTreeMap::new();
        for (m, c) in terms {
            if !c.is_zero() {
                grouped.entry(m).or_default().push(c);
            }
        }
        Self::from_grouped(chart, grouped)
    }

    fn from_grouped(chart: &Chart, grouped: BTreeMap<Monomial, Vec<RationalFunction>>) -> Self {
        let vars = chart.coords();
        let terms = grouped
            .into_iter()
            .filter_map(|(m, cs)| {
                let s =
                    if cs.len() == 1 { cs.into_iter().next().unwrap() } else { RationalFunction::sum(vars, cs.iter()) };
                (!s.is_zero()).then_some((m, s))
            })
            .collect();
        MomentumPolynomial { chart: chart.clone(), terms }
    }

    /// The momentum `p_i`.
    pub fn momentum(chart: &Chart, i: usize) -> Self {
        Self::from_terms(chart, [(Monomial::unit(chart.dim(), i), RationalFunction::one(chart.coords()))])
    }

    /// The coordinate function `x^i` (momentum degree 0).
    pub fn coordinate(chart: &Chart, i: usize) -> Self {
        Self::constant(chart, RationalFunction::var(chart.coords(), i))
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &RationalFunction)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> RationalFunction {
        self.terms.get(m).cloned().unwrap_or_else(|| RationalFunction::zero(self.chart.coords()))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Common momentum degree of all terms; `None` for zero or mixed degree.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut degs = self.terms.keys().map(|m| m.degree());
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.is_zero() || self.homogeneous_degree().is_some()
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn homogeneous_part(&self, d: u32) -> Self {
        MomentumPolynomial {
            chart: self.chart.clone(),
            terms: self.terms.iter().filter(|(m, _)| m.degree() == d).map(|(m, c)| (m.clone(), c.clone())).collect(),
        }
    }

    fn check_chart(&self, other: &Self) -> Result<(), FlowError> {
        if MetricChart::same_chart(&self.chart, &other.chart) {
            Ok(())
        } else {
            Err(FlowError::ChartMismatch)
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, FlowError> {
        self.check_chart(other)?;
        let mut grouped: BTreeMap<Monomial, Vec<RationalFunction>> = BTreeMap::new();
        for (m, c) in self.terms.iter().chain(other.terms.iter()) {
            grouped.entry(m.clone()).or_default().push(c.clone());
        }
        Ok(Self::from_grouped(&self.chart, grouped))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, FlowError> {
        self.checked_add(&other.neg())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, FlowError> {
        self.check_chart(other)?;
        let mut grouped: BTreeMap<Monomial, Vec<RationalFunction>> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                grouped.entry(ma.mul(mb)).or_default().push(ca * cb);
            }
        }
        Ok(Self::from_grouped(&self.chart, grouped))
    }

    pub fn neg(&self) -> Self {
        MomentumPolynomial {
            chart: self.chart.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(&self.chart);
        }
        MomentumPolynomial {
            chart: self.chart.clone(),
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v.scale(c))).collect(),
        }
    }

    pub fn mul_coefficient(&self, c: &RationalFunction) -> Self {
        Self::from_terms(&self.chart, self.terms.iter().map(|(m, v)| (m.clone(), v * c)))
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::constant(&self.chart, RationalFunction::one(self.chart.coords()));
        for _ in 0..e {
            out = out.checked_mul(self).expect("same chart");
        }
        out
    }

    /// `∂/∂x^i`.
    pub fn partial_x(&self, i: usize) -> Self {
        Self::from_terms(&self.chart, self.terms.iter().map(|(m, c)| (m.clone(), c.partial(i))))
    }

    /// `∂/∂p_i`.
    pub fn partial_p(&self, i: usize) -> Self {
        Self::from_terms(
            &self.chart,
            self.terms.iter().filter(|(m, _)| m.exponents()[i] > 0).map(|(m, c)| {
                let e = m.exponents()[i];
                (m.with_exponent(i, e - 1), c.scale(&Rational::from_integer(BigInt::from(e))))
            }),
        )
    }

    /// Replaces every momentum `p_i` by the polynomial `forms[i]`.
    pub fn substitute_momenta(&self, forms: &[MomentumPolynomial]) -> Self {
        let mut out = Self::zero(&self.chart);
        // cache powers of each form
        let mut powers: Vec<Vec<MomentumPolynomial>> = forms
            .iter()
            .map(|f| vec![Self::constant(&self.chart, RationalFunction::one(self.chart.coords())), f.clone()])
            .collect();
        for (m, c) in &self.terms {
            let mut prod = Self::constant(&self.chart, c.clone());
            for (i, &e) in m.exponents().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = powers[i].last().unwrap().checked_mul(&forms[i]).expect("same chart");
                    powers[i].push(next);
                }
                prod = prod.checked_mul(&powers[i][e as usize]).expect("same chart");
            }
            out = out.checked_add(&prod).expect("same chart");
        }
        out
    }

    /// Floating evaluation at `(x, p)`.
    pub fn eval(&self, x: &[f64], p: &[f64]) -> Result<f64, AlgebraError> {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut mono = 1.0;
            for (pi, &e) in p.iter().zip(m.exponents()) {
                if e > 0 {
                    mono *= pi.powi(e as i32);
                }
            }
            acc += c.eval(x)? * mono;
        }
        Ok(acc)
    }

    /// Parses an expression in the chart coordinates and momenta `p_<coord>`.
    pub fn parse(chart: &Chart, text: &str) -> Result<Self, FlowError> {
        let n = chart.dim();
        let mut names: Vec<String> = chart.coords().names().to_vec();
        names.extend((0..n).map(|i| chart.momentum_name(i)));
        let joint = Variables::new(&names);
        let f = parse_expression(text, &names).map_err(AlgebraError::from)?.to_rational_function(&joint)?;
        if (n..2 * n).any(|v| f.den().degree_in(v) > 0) {
            return Err(FlowError::NotPolynomialInMomenta(text.to_string()));
        }
        let coords = chart.coords();
        let mut den_terms = Vec::new();
        for (m, c) in f.den().terms() {
            den_terms.push((Monomial::from_exponents(&m.exponents()[..n]), c.clone()));
        }
        let den = MultiPoly::from_terms(coords, den_terms);
        let mut grouped: BTreeMap<Monomial, Vec<(Monomial, Rational)>> = BTreeMap::new();
        for (m, c) in f.num().terms() {
            let e = m.exponents();
            grouped
                .entry(Monomial::from_exponents(&e[n..]))
                .or_default()
                .push((Monomial::from_exponents(&e[..n]), c.clone()));
        }
        let mut terms = Vec::new();
        for (pm, xs) in grouped {
            let num = MultiPoly::from_terms(coords, xs);
            terms.push((pm, RationalFunction::new(num, den.clone())?));
        }
        Ok(Self::from_terms(chart, terms))
    }

    /// Moves the polynomial to another chart, matching coordinates by name.
    /// Coordinates absent from `target` must not occur, neither in the
    /// coefficients nor through their momenta.
    pub fn embed(&self, target: &Chart) -> Result<Self, FlowError> {
        if MetricChart::same_chart(&self.chart, target) {
            return Ok(MomentumPolynomial { chart: target.clone(), terms: self.terms.clone() });
        }
        let map: Vec<Option<usize>> = self.chart.coords().names().iter().map(|n| target.coords().index_of(n)).collect();
        let mut terms = Vec::new();
        for (m, c) in &self.terms {
            let mut e = vec![0u32; target.dim()];
            for (i, &k) in m.exponents().iter().enumerate() {
                match map[i] {
                    Some(j) => e[j] += k,
                    None if k == 0 => {}
                    None => return Err(AlgebraError::UnknownVariable(self.chart.momentum_name(i)).into()),
                }
            }
            terms.push((Monomial::from_exponents(&e), c.embed(target.coords())?));
        }
        Ok(Self::from_terms(target, terms))
    }
}

impl fmt::Display for MomentumPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let n = self.chart.dim();
        let mom: Vec<String> = (0..n).map(|i| self.chart.momentum_name(i)).collect();
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let mono: Vec<String> = m
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| if e == 1 { mom[i].clone() } else { format!("{}^{e}", mom[i]) })
                .collect();
            let mono = mono.join("*");
            let simple = c.is_polynomial() && c.num().num_terms() == 1;
            let negative = simple && c.num().leading_coefficient().is_negative();
            let shown = if negative { -c } else { c.clone() };
            if first {
                if negative {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if negative { '-' } else { '+' })?;
            }
            first = false;
            let coef = shown.to_string();
            if mono.is_empty() {
                if simple {
                    write!(f, "{coef}")?
                } else {
                    write!(f, "({coef})")?
                }
            } else if shown.constant_value().is_some_and(|v| v.is_one()) {
                write!(f, "{mono}")?;
            } else if simple {
                write!(f, "{coef}*{mono}")?;
            } else {
                write!(f, "({coef})*{mono}")?;
            }
        }
        Ok(())
    }
}

/// `𝓗 = ½ g^{ij} p_i p_j`.
pub fn hamiltonian(chart: &Chart) -> MomentumPolynomial {
    MomentumPolynomial { chart: chart.clone(), terms: chart.hamiltonian_terms().clone() }
}

/// Canonical bracket `{f,g} = Σ ∂f/∂p_i ∂g/∂x^i − ∂f/∂x^i ∂g/∂p_i`.
pub fn poisson_bracket(f: &MomentumPolynomial, g: &MomentumPolynomial) -> Result<MomentumPolynomial, FlowError> {
    f.check_chart(g)?;
    let chart = &f.chart;
    let n = chart.dim();
    let df: Vec<Vec<RationalFunction>> = f.terms.values().map(|c| (0..n).map(|i| c.partial(i)).collect()).collect();
    let dg: Vec<Vec<RationalFunction>> = g.terms.values().map(|c| (0..n).map(|i| c.partial(i)).collect()).collect();
    let mut grouped: BTreeMap<Monomial, Vec<RationalFunction>> = BTreeMap::new();
    for (ia, (ma, ca)) in f.terms.iter().enumerate() {
        for (ib, (mb, cb)) in g.terms.iter().enumerate() {
            let m = ma.mul(mb);
            for i in 0..n {
                let ea = ma.exponents()[i];
                let eb = mb.exponents()[i];
                if ea == 0 && eb == 0 {
                    continue;
                }
                let target = m.with_exponent(i, m.exponents()[i] - 1);
                if ea > 0 && !dg[ib][i].is_zero() {
                    let t = (ca * &dg[ib][i]).scale(&Rational::from_integer(BigInt::from(ea)));
                    grouped.entry(target.clone()).or_default().push(t);
                }
                if eb > 0 && !df[ia][i].is_zero() {
                    let t = (&df[ia][i] * cb).scale(&Rational::from_integer(BigInt::from(-(eb as i64))));
                    grouped.entry(target).or_default().push(t);
                }
            }
        }
    }
    Ok(MomentumPolynomial::from_grouped(chart, grouped))
}

/// `{𝓗, f}`.
pub fn h_apply(f: &MomentumPolynomial) -> MomentumPolynomial {
    poisson_bracket(&hamiltonian(&f.chart), f).expect("hamiltonian lives on the same chart")
}

/// `H^k f`, the k-fold nested bracket with the Hamiltonian.
pub fn iterate_h(f: &MomentumPolynomial, k: u32) -> MomentumPolynomial {
    let mut cur = f.clone();
    for _ in 0..k {
        if cur.is_zero() {
            break;
        }
        cur = h_apply(&cur);
    }
    cur
}

pub fn is_integral(f: &MomentumPolynomial) -> bool {
    h_apply(f).is_zero()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderDegree {
    /// Smallest `k` with `H^k f = 0`.
    Exact(u32),
    ExceedsBudget,
}

/// Smallest `k <= k_max` with `H^k f = 0`. The zero polynomial has degree 0.
pub fn ladder_degree(f: &MomentumPolynomial, k_max: u32) -> LadderDegree {
    let mut cur = f.clone();
    for k in 0..=k_max {
        if cur.is_zero() {
            return LadderDegree::Exact(k);
        }
        if k < k_max {
            cur = h_apply(&cur);
        }
    }
    LadderDegree::ExceedsBudget
}

/// Homogeneous `f` together with its certified ladder degree `k`:
/// `H^k f = 0` and `H^{k−1} f ≠ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderElement {
    f: MomentumPolynomial,
    k: u32,
    d: u32,
}

impl LadderElement {
    pub fn certify(f: MomentumPolynomial, k_max: u32) -> Result<Self, FlowError> {
        if f.is_zero() {
            return Err(FlowError::NotHomogeneous);
        }
        let d = f.homogeneous_degree().ok_or(FlowError::NotHomogeneous)?;
        match ladder_degree(&f, k_max) {
            LadderDegree::Exact(k) => Ok(LadderElement { f, k, d }),
            LadderDegree::ExceedsBudget => Err(FlowError::NotInLadder { k: k_max }),
        }
    }

    pub fn poly(&self) -> &MomentumPolynomial {
        &self.f
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn degree(&self) -> u32 {
        self.d
    }
}
