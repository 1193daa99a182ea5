//! Product metrics, the bi-homogeneous split of an integral, ladder
//! composition and the decomposition of product integrals into ladder terms.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::algebra::{gcd, AlgebraError, Monomial, MultiPoly, Rational, RationalFunction};
use crate::flow::{h_apply, hamiltonian, iterate_h, poisson_bracket, FlowError, LadderElement, MomentumPolynomial};
use crate::geometry::{Chart, GeometryError, MetricChart};
use crate::linalg::{independent_subset, nullspace, solve_combination, RowReducer};
use crate::spaces::{coordinate_vectors, h_closure, AnsatzFamily, LadderBasis, SpacesError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProductError {
    #[error("coordinate `{0}` occurs in both factors")]
    NameCollision(String),
    #[error("input is not homogeneous in the momenta")]
    NotHomogeneous,
    #[error("input is not an integral of the product metric")]
    NotIntegral,
    #[error("component S_{0} does not separate into factor functions")]
    NotSeparable(usize),
    #[error("denominator does not split into a factor-1 part times a factor-2 part")]
    DenominatorNotSplit,
    #[error("ansatz-incomplete: component S_{part} has a factor-{factor} element outside the ansatz: {element}")]
    AnsatzIncomplete { part: usize, factor: u8, element: String },
    #[error("ladder certificate violated: factor-{factor} element has ladder degree above {k}")]
    LadderViolation { factor: u8, k: u32 },
    #[error("cannot classify: residual is nonzero")]
    NonzeroResidual,
    #[error("internal consistency failure: {0}")]
    Internal(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Spaces(#[from] SpacesError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// `(M₁ × M₂, g₁ + g₂)` on a joint chart whose coordinates are those of
/// factor 1 followed by those of factor 2.
#[derive(Clone, Debug)]
pub struct ProductMetric {
    factor1: Chart,
    factor2: Chart,
    joint: Chart,
    h1: MomentumPolynomial,
    h2: MomentumPolynomial,
}

impl ProductMetric {
    pub fn factor1(&self) -> &Chart {
        &self.factor1
    }

    pub fn factor2(&self) -> &Chart {
        &self.factor2
    }

    pub fn joint(&self) -> &Chart {
        &self.joint
    }

    pub fn n1(&self) -> usize {
        self.factor1.dim()
    }

    /// `𝓗₁` on the joint chart.
    pub fn h1(&self) -> &MomentumPolynomial {
        &self.h1
    }

    pub fn h2(&self) -> &MomentumPolynomial {
        &self.h2
    }

    pub fn lift1(&self, f: &MomentumPolynomial) -> Result<MomentumPolynomial, ProductError> {
        Ok(f.embed(&self.joint)?)
    }

    pub fn lift2(&self, f: &MomentumPolynomial) -> Result<MomentumPolynomial, ProductError> {
        Ok(f.embed(&self.joint)?)
    }

    /// `{𝓗₁, F}` on the joint chart.
    pub fn bracket1(&self, f: &MomentumPolynomial) -> Result<MomentumPolynomial, ProductError> {
        Ok(poisson_bracket(&self.h1, f)?)
    }

    pub fn bracket2(&self, f: &MomentumPolynomial) -> Result<MomentumPolynomial, ProductError> {
        Ok(poisson_bracket(&self.h2, f)?)
    }

    /// Degree in the factor-1 momenta of a joint momentum monomial.
    fn p_degree(&self, m: &Monomial) -> u32 {
        m.exponents()[..self.n1()].iter().sum()
    }
}

/// Product of two charts. With `auto_rename`, colliding coordinate names get
/// the suffixes `1` and `2`.
pub fn product_metric(m1: &Chart, m2: &Chart, auto_rename: bool) -> Result<ProductMetric, ProductError> {
    let names1 = m1.coords().names();
    let names2 = m2.coords().names();
    let collision = names1.iter().find(|n| names2.contains(n)).cloned();
    let (f1, f2) = match collision {
        None => (m1.clone(), m2.clone()),
        Some(name) if !auto_rename => return Err(ProductError::NameCollision(name)),
        Some(_) => {
            let r1: Vec<String> = names1.iter().map(|n| format!("{n}1")).collect();
            let r2: Vec<String> = names2.iter().map(|n| format!("{n}2")).collect();
            if let Some(n) = r1.iter().find(|n| r2.contains(n)) {
                return Err(ProductError::NameCollision(n.clone()));
            }
            (m1.renamed(&format!("{}_1", m1.name()), &r1)?, m2.renamed(&format!("{}_2", m2.name()), &r2)?)
        }
    };
    let mut names: Vec<String> = f1.coords().names().to_vec();
    names.extend(f2.coords().names().iter().cloned());
    let vars = crate::algebra::Variables::new(&names);
    let n1 = f1.dim();
    let n = names.len();
    let mut g = vec![vec![RationalFunction::zero(&vars); n]; n];
    for i in 0..n1 {
        for j in 0..n1 {
            g[i][j] = f1.g(i, j).embed(&vars)?;
        }
    }
    for i in 0..f2.dim() {
        for j in 0..f2.dim() {
            g[n1 + i][n1 + j] = f2.g(i, j).embed(&vars)?;
        }
    }
    let note =
        [f1.domain_note(), f2.domain_note()].iter().filter(|s| !s.is_empty()).cloned().collect::<Vec<_>>().join("; ");
    let joint = MetricChart::new(format!("{} x {}", f1.name(), f2.name()), vars, g, note)?;
    let h1 = hamiltonian(&f1).embed(&joint)?;
    let h2 = hamiltonian(&f2).embed(&joint)?;
    Ok(ProductMetric { factor1: f1, factor2: f2, joint, h1, h2 })
}

/// `F = Σ_ℓ S_ℓ` with `S_ℓ` of degree `ℓ` in the factor-1 momenta and
/// `d − ℓ` in the factor-2 momenta.
#[derive(Clone, Debug, PartialEq)]
pub struct BiHomogeneousSplit {
    pub parts: Vec<MomentumPolynomial>,
}

impl BiHomogeneousSplit {
    pub fn degree(&self) -> usize {
        self.parts.len() - 1
    }

    pub fn sum(&self) -> MomentumPolynomial {
        let chart = self.parts[0].chart().clone();
        self.parts.iter().fold(MomentumPolynomial::zero(&chart), |acc, s| acc.checked_add(s).expect("same chart"))
    }

    /// The split with `S_ℓ` replaced by zero.
    pub fn without(&self, l: usize) -> Self {
        let mut parts = self.parts.clone();
        parts[l] = MomentumPolynomial::zero(parts[l].chart());
        BiHomogeneousSplit { parts }
    }
}

pub fn bihomogeneous_split(f: &MomentumPolynomial, pm: &ProductMetric) -> Result<BiHomogeneousSplit, ProductError> {
    let d = if f.is_zero() { 0 } else { f.homogeneous_degree().ok_or(ProductError::NotHomogeneous)? };
    let f = f.embed(&pm.joint)?;
    let mut buckets: Vec<Vec<(Monomial, RationalFunction)>> = vec![Vec::new(); d as usize + 1];
    for (m, c) in f.terms() {
        buckets[pm.p_degree(m) as usize].push((m.clone(), c.clone()));
    }
    Ok(BiHomogeneousSplit {
        parts: buckets.into_iter().map(|t| MomentumPolynomial::from_terms(&pm.joint, t)).collect(),
    })
}

/// First equation of the chain system that fails.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainFailure {
    /// Degree in the factor-1 momenta of the failing component of `{𝓗̄, F}`.
    pub index: usize,
    pub equation: String,
    pub value: MomentumPolynomial,
}

/// Checks `{𝓗₂,S₀} = 0`, `{𝓗₁,S_ℓ} + {𝓗₂,S_{ℓ+1}} = 0` and `{𝓗₁,S_d} = 0`.
pub fn chain_check(split: &BiHomogeneousSplit, pm: &ProductMetric) -> Result<Option<ChainFailure>, ProductError> {
    let d = split.degree();
    let zero = MomentumPolynomial::zero(&pm.joint);
    for j in 0..=d + 1 {
        let left = if j >= 1 { pm.bracket1(&split.parts[j - 1])? } else { zero.clone() };
        let right = if j <= d { pm.bracket2(&split.parts[j])? } else { zero.clone() };
        let value = left.checked_add(&right)?;
        if !value.is_zero() {
            let equation = match j {
                0 => "{H2, S_0} = 0".to_string(),
                j if j == d + 1 => format!("{{H1, S_{d}}} = 0"),
                j => format!("{{H1, S_{}}} + {{H2, S_{j}}} = 0", j - 1),
            };
            return Ok(Some(ChainFailure { index: j, equation, value }));
        }
    }
    Ok(None)
}

/// `Σ_{ℓ=0}^{k−1} (−1)^ℓ (H₁^ℓ f₁)(H₂^{k−ℓ−1} f₂)` on the joint chart.
pub fn compose_integral(
    f1: &LadderElement,
    f2: &LadderElement,
    k: u32,
    pm: &ProductMetric,
) -> Result<MomentumPolynomial, ProductError> {
    if k == 0 {
        return Err(ProductError::LadderViolation { factor: 1, k });
    }
    if f1.k() > k {
        return Err(ProductError::LadderViolation { factor: 1, k });
    }
    if f2.k() > k {
        return Err(ProductError::LadderViolation { factor: 2, k });
    }
    let a = f1.poly().embed(&pm.factor1)?;
    let b = f2.poly().embed(&pm.factor2)?;
    let mut left = vec![a];
    let mut right = vec![b];
    for _ in 1..k {
        left.push(h_apply(left.last().unwrap()));
        right.push(h_apply(right.last().unwrap()));
    }
    let mut out = MomentumPolynomial::zero(&pm.joint);
    for l in 0..k as usize {
        let term = pm.lift1(&left[l])?.checked_mul(&pm.lift2(&right[k as usize - l - 1])?)?;
        out = if l % 2 == 0 { out.checked_add(&term)? } else { out.checked_sub(&term)? };
    }
    Ok(out)
}

/// Cyclic ladder `(g, Hg, …, H^{m−1}g)` with `H^m g = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ladder {
    pub chain: Vec<MomentumPolynomial>,
}

impl Ladder {
    pub fn generator(&self) -> &MomentumPolynomial {
        &self.chain[0]
    }

    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }
}

/// Jordan ladders of `{𝓗, ·}` on the smallest invariant space containing the
/// family. Generators are homogeneous; longer ladders are chosen first.
pub fn jordan_ladders(family: &[MomentumPolynomial]) -> Result<Vec<Ladder>, ProductError> {
    let mut gens = Vec::new();
    for f in family {
        for d in 0..=f.max_degree() {
            let part = f.homogeneous_part(d);
            if !part.is_zero() {
                gens.push(part);
            }
        }
    }
    let mut basis = h_closure(&gens);
    if basis.is_empty() {
        return Ok(Vec::new());
    }
    basis.sort_by_key(|f| f.homogeneous_degree().unwrap_or(0));
    let dim = basis.len();
    let chart = basis[0].chart().clone();
    // matrix of H: column i = coordinates of H basis[i]
    let mut all: Vec<&MomentumPolynomial> = basis.iter().collect();
    let images: Vec<MomentumPolynomial> = basis.iter().map(h_apply).collect();
    all.extend(images.iter());
    let coords = coordinate_vectors(&all);
    let (bcoords, icoords) = coords.split_at(dim);
    let mut action = vec![vec![Rational::zero(); dim]; dim];
    for (i, img) in icoords.iter().enumerate() {
        let c = solve_combination(bcoords, img)
            .ok_or_else(|| ProductError::Internal("family is not closed under the bracket".into()))?;
        for (j, v) in c.into_iter().enumerate() {
            action[j][i] = v;
        }
    }
    let apply =
        |v: &[Rational]| -> Vec<Rational> { (0..dim).map(|r| (0..dim).map(|c| &action[r][c] * &v[c]).sum()).collect() };
    // nilpotency index and kernels of N^m restricted to each degree
    let mut height = 0;
    let mut probe: Vec<Vec<Rational>> = (0..dim).map(|i| unit(dim, i)).collect();
    while probe.iter().any(|v| v.iter().any(|c| !c.is_zero())) {
        height += 1;
        if height > dim {
            return Err(ProductError::Internal("bracket action is not nilpotent".into()));
        }
        probe = probe.iter().map(|v| apply(v)).collect();
    }
    let degrees: Vec<u32> = basis.iter().map(|f| f.homogeneous_degree().unwrap_or(0)).collect();
    let mut distinct = degrees.clone();
    distinct.dedup();
    let power = |v: &[Rational], m: usize| -> Vec<Rational> {
        let mut cur = v.to_vec();
        for _ in 0..m {
            cur = apply(&cur);
        }
        cur
    };
    let kernel_in_degree = |m: usize, deg: u32| -> Vec<Vec<Rational>> {
        let cols: Vec<usize> = (0..dim).filter(|&i| degrees[i] == deg).collect();
        // rows of the map N^m restricted to the degree-deg coordinates
        let images: Vec<Vec<Rational>> = cols.iter().map(|&c| power(&unit(dim, c), m)).collect();
        let rows: Vec<Vec<Rational>> = (0..dim).map(|r| images.iter().map(|img| img[r].clone()).collect()).collect();
        nullspace(&rows, cols.len())
            .into_iter()
            .map(|k| {
                let mut v = vec![Rational::zero(); dim];
                for (slot, c) in cols.iter().zip(k) {
                    v[*slot] = c;
                }
                v
            })
            .collect()
    };
    let mut chosen: Vec<(usize, Vec<Rational>)> = Vec::new();
    for m in (1..=height).rev() {
        for &deg in &distinct {
            let mut red = RowReducer::new(dim);
            for v in kernel_in_degree(m - 1, deg) {
                red.add_dense_row(&v);
            }
            for (len, g) in &chosen {
                // chain vectors of earlier generators that live in degree deg and ker N^m
                for j in len - m..*len {
                    let v = power(g, j);
                    if v.iter().enumerate().any(|(i, c)| !c.is_zero() && degrees[i] == deg) {
                        red.add_dense_row(&v);
                    }
                }
            }
            for cand in kernel_in_degree(m, deg) {
                if red.add_dense_row(&cand) {
                    chosen.push((m, cand));
                }
            }
        }
    }
    let total: usize = chosen.iter().map(|(m, _)| m).sum();
    if total != dim {
        return Err(ProductError::Internal(format!("ladders cover {total} of {dim} dimensions")));
    }
    let mut ladders = Vec::new();
    for (m, g) in chosen {
        let gen = crate::spaces::combine(&chart, &basis, &g);
        let mut chain = vec![gen];
        for _ in 1..m {
            chain.push(h_apply(chain.last().unwrap()));
        }
        if !h_apply(chain.last().unwrap()).is_zero() {
            return Err(ProductError::Internal("ladder does not terminate".into()));
        }
        ladders.push(Ladder { chain });
    }
    Ok(ladders)
}

/// Jordan ladders generated by a solver basis and its bracket images.
pub fn jordan_ladders_of(basis: &LadderBasis) -> Result<Vec<Ladder>, ProductError> {
    jordan_ladders(&basis.basis)
}

fn unit(n: usize, i: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); n];
    v[i] = Rational::one();
    v
}

/// One ladder term `α · Σ (−1)^ℓ (H₁^ℓ f₁)(H₂^{k−ℓ−1} f₂)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderTerm {
    pub f1: LadderElement,
    pub f2: LadderElement,
    pub k: u32,
    pub coefficient: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Classification {
    Reducible,
    /// A nonzero bi-degree component of `{𝓗₁, F}`.
    IrreducibleWitnessed {
        witness: MomentumPolynomial,
        bidegree: (u32, u32),
    },
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::Reducible => "reducible",
            Classification::IrreducibleWitnessed { .. } => "irreducible-witnessed",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReducibleForm {
    pub input: MomentumPolynomial,
    pub terms: Vec<LadderTerm>,
    pub residual: MomentumPolynomial,
    /// `reducible` iff every term has `k = 1`.
    pub reducible: bool,
    pub ladders1: Vec<Ladder>,
    pub ladders2: Vec<Ladder>,
    /// Coefficient matrix of the input in the ladder bases (rows: factor 1).
    pub matrix: Vec<Vec<Rational>>,
}

impl ReducibleForm {
    /// `Σ α_j · compose(f1_j, f2_j, k_j)`.
    pub fn expand(&self, pm: &ProductMetric) -> Result<MomentumPolynomial, ProductError> {
        let mut out = MomentumPolynomial::zero(&pm.joint);
        for t in &self.terms {
            out = out.checked_add(&compose_integral(&t.f1, &t.f2, t.k, pm)?.scale(&t.coefficient))?;
        }
        Ok(out)
    }
}

impl fmt::Display for ReducibleForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "terms: {}", self.terms.len())?;
        for (i, t) in self.terms.iter().enumerate() {
            writeln!(f, "term {i}: k = {}, coefficient = {}", t.k, t.coefficient)?;
            writeln!(f, "  f1 = {}", t.f1.poly())?;
            writeln!(f, "  f2 = {}", t.f2.poly())?;
        }
        writeln!(f, "residual: {}", self.residual)?;
        write!(f, "form: {}", if self.reducible { "all k = 1" } else { "contains k > 1" })
    }
}

/// `(p-monomial, x-monomial, coefficient)` of one separated group.
type Cell = (Monomial, Monomial, Rational);

/// Splits `S = Σ u_i(x,p) v_i(y,q)` with both families linearly independent.
fn separate(
    s: &MomentumPolynomial,
    part: usize,
    pm: &ProductMetric,
) -> Result<Vec<(MomentumPolynomial, MomentumPolynomial)>, ProductError> {
    if s.is_zero() {
        return Ok(Vec::new());
    }
    let joint = &pm.joint;
    let n1 = pm.n1();
    let vars = joint.coords().clone();
    let mut common = MultiPoly::one(&vars);
    for (_, c) in s.terms() {
        common = crate::algebra::lcm(&common, c.den());
    }
    let (d1, d2) = split_denominator(&common, n1).ok_or(ProductError::NotSeparable(part))?;
    // L·S = Σ N_{μν}(x,y) p^μ q^ν ; group by (ν, y^γ)
    let mut groups: BTreeMap<(Monomial, Monomial), Vec<Cell>> = BTreeMap::new();
    for (m, c) in s.terms() {
        let cof = common.div_exact(c.den()).expect("lcm is a multiple");
        let num = c.num() * &cof;
        let (mu, nu) = m.exponents().split_at(n1);
        for (xm, v) in num.terms() {
            let (xa, ya) = xm.exponents().split_at(n1);
            groups.entry((Monomial::from_exponents(nu), Monomial::from_exponents(ya))).or_default().push((
                Monomial::from_exponents(mu),
                Monomial::from_exponents(xa),
                v.clone(),
            ));
        }
    }
    let c1 = pm.factor1.coords();
    let c2 = pm.factor2.coords();
    let d1f = d1.embed(c1)?;
    let d2f = d2.embed(c2)?;
    let mut pairs = Vec::new();
    for ((nu, ya), entries) in groups {
        let mut by_mu: BTreeMap<Monomial, Vec<(Monomial, Rational)>> = BTreeMap::new();
        for (mu, xa, v) in entries {
            by_mu.entry(mu).or_default().push((xa, v));
        }
        let mut uterms = Vec::new();
        for (mu, xs) in by_mu {
            uterms.push((mu, RationalFunction::new(MultiPoly::from_terms(c1, xs), d1f.clone())?));
        }
        let u = MomentumPolynomial::from_terms(&pm.factor1, uterms);
        let vnum = MultiPoly::monomial(c2, ya, Rational::one());
        let v = MomentumPolynomial::from_terms(&pm.factor2, [(nu, RationalFunction::new(vnum, d2f.clone())?)]);
        pairs.push((u, v));
    }
    minimal_pairs(&pairs)
}

/// Rewrites `Σ u_i ⊗ v_i` with independent left and right families.
fn minimal_pairs(
    pairs: &[(MomentumPolynomial, MomentumPolynomial)],
) -> Result<Vec<(MomentumPolynomial, MomentumPolynomial)>, ProductError> {
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let lefts: Vec<&MomentumPolynomial> = pairs.iter().map(|(u, _)| u).collect();
    let rights: Vec<&MomentumPolynomial> = pairs.iter().map(|(_, v)| v).collect();
    let lc = coordinate_vectors(&lefts);
    let rc = coordinate_vectors(&rights);
    // M = Σ lc_i rc_i^T, then a rank factorisation M = A B^T
    let (nl, nr) = (lc[0].len(), rc[0].len());
    let mut m = vec![vec![Rational::zero(); nr]; nl];
    for (a, b) in lc.iter().zip(&rc) {
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if !y.is_zero() {
                    m[i][j] += x * y;
                }
            }
        }
    }
    // left span: independent columns of M, as combinations of the given lefts
    let columns: Vec<Vec<Rational>> = (0..nr).map(|j| (0..nl).map(|i| m[i][j].clone()).collect()).collect();
    let keep = independent_subset(&columns);
    let chart_l = lefts[0].chart().clone();
    let chart_r = rights[0].chart().clone();
    let left_polys: Vec<MomentumPolynomial> = lefts.iter().map(|f| (*f).clone()).collect();
    let right_polys: Vec<MomentumPolynomial> = rights.iter().map(|f| (*f).clone()).collect();
    let mut out = Vec::new();
    let basis_cols: Vec<Vec<Rational>> = keep.iter().map(|&j| columns[j].clone()).collect();
    // every column j of M is Σ_b β_{bj} basis_col_b, so M = Σ_b basis_col_b ⊗ row_b
    let mut rows = vec![vec![Rational::zero(); nr]; keep.len()];
    for (j, col) in columns.iter().enumerate() {
        let beta =
            solve_combination(&basis_cols, col).ok_or_else(|| ProductError::Internal("rank factorisation".into()))?;
        for (b, v) in beta.into_iter().enumerate() {
            rows[b][j] = v;
        }
    }
    for b in 0..keep.len() {
        let u = express_vector(&lc, &basis_cols[b], &chart_l, &left_polys)?;
        let v = express_vector(&rc, &rows[b], &chart_r, &right_polys)?;
        out.push((u, v));
    }
    Ok(out)
}

/// The polynomial with coordinate vector `target`, written as a combination
/// of polynomials with coordinate vectors `coords`.
fn express_vector(
    coords: &[Vec<Rational>],
    target: &[Rational],
    chart: &Chart,
    polys: &[MomentumPolynomial],
) -> Result<MomentumPolynomial, ProductError> {
    let c = solve_combination(coords, target).ok_or_else(|| ProductError::Internal("vector outside span".into()))?;
    Ok(crate::spaces::combine(chart, polys, &c))
}

/// `D(x,y) = D₁(x)·D₂(y)`, if such a factorisation exists.
fn split_denominator(d: &MultiPoly, n1: usize) -> Option<(MultiPoly, MultiPoly)> {
    let vars = d.vars().clone();
    // content with respect to the y-variables: gcd of the x-polynomial coefficients
    let mut by_y: BTreeMap<Monomial, Vec<(Monomial, Rational)>> = BTreeMap::new();
    for (m, c) in d.terms() {
        let (xa, ya) = m.exponents().split_at(n1);
        let mut xe = xa.to_vec();
        xe.extend(std::iter::repeat_n(0, ya.len()));
        by_y.entry(Monomial::from_exponents(ya)).or_default().push((Monomial::from_exponents(&xe), c.clone()));
    }
    let mut d1 = MultiPoly::zero(&vars);
    for (_, terms) in by_y {
        d1 = gcd(&d1, &MultiPoly::from_terms(&vars, terms));
    }
    let d2 = d.div_exact(&d1)?;
    if (0..n1).any(|i| d2.degree_in(i) > 0) {
        return None;
    }
    Some((d1, d2))
}

/// Factor ansatz families from a joint denominator `D = D₁(x)·D₂(y)`.
pub fn split_ansatz(
    pm: &ProductMetric,
    coeff_degree: u32,
    denominator: Option<&MultiPoly>,
) -> Result<(AnsatzFamily, AnsatzFamily), ProductError> {
    let Some(d) = denominator else {
        return Ok((AnsatzFamily::polynomial(0, coeff_degree), AnsatzFamily::polynomial(0, coeff_degree)));
    };
    let d = d.embed(pm.joint.coords())?;
    let (d1, d2) = split_denominator(&d, pm.n1()).ok_or(ProductError::DenominatorNotSplit)?;
    let s1 = AnsatzFamily::with_denominator(0, coeff_degree, d1.embed(pm.factor1.coords())?)?;
    let s2 = AnsatzFamily::with_denominator(0, coeff_degree, d2.embed(pm.factor2.coords())?)?;
    Ok((s1, s2))
}

/// Decomposes an integral of the product into ladder terms.
///
/// Each `S_ℓ` is separated as `Σ u ⊗ v`; the factors are certified by
/// `H₁^{d−ℓ+1} u = 0`, `H₂^{ℓ+1} v = 0` and must lie in the respective
/// ansatz coefficient families.
pub fn decompose_integral(
    f: &MomentumPolynomial,
    pm: &ProductMetric,
    family1: &AnsatzFamily,
    family2: &AnsatzFamily,
) -> Result<ReducibleForm, ProductError> {
    let f = f.embed(&pm.joint)?;
    if !f.is_homogeneous() {
        return Err(ProductError::NotHomogeneous);
    }
    if !h_apply(&f).is_zero() {
        return Err(ProductError::NotIntegral);
    }
    let split = bihomogeneous_split(&f, pm)?;
    let d = split.degree() as u32;
    let mut lefts = Vec::new();
    let mut rights = Vec::new();
    let mut pairs = Vec::new();
    for (l, s) in split.parts.iter().enumerate() {
        for (u, v) in separate(s, l, pm)? {
            if !iterate_h(&u, d - l as u32 + 1).is_zero() || !iterate_h(&v, l as u32 + 1).is_zero() {
                return Err(ProductError::NotIntegral);
            }
            if !family1.covers(&u)? {
                return Err(ProductError::AnsatzIncomplete { part: l, factor: 1, element: u.to_string() });
            }
            if !family2.covers(&v)? {
                return Err(ProductError::AnsatzIncomplete { part: l, factor: 2, element: v.to_string() });
            }
            lefts.push(u.clone());
            rights.push(v.clone());
            pairs.push((u, v));
        }
    }
    let ladders1 = jordan_ladders(&lefts)?;
    let ladders2 = jordan_ladders(&rights)?;
    let ubasis: Vec<MomentumPolynomial> = ladders1.iter().flat_map(|l| l.chain.iter().cloned()).collect();
    let vbasis: Vec<MomentumPolynomial> = ladders2.iter().flat_map(|l| l.chain.iter().cloned()).collect();
    let matrix = tensor_coordinates(&pairs, &ubasis, &vbasis)?;

    let mut terms = Vec::new();
    let mut row0 = 0;
    for la in &ladders1 {
        let m = la.len();
        let mut col0 = 0;
        for lb in &ladders2 {
            let n = lb.len();
            let block: Vec<Vec<Rational>> = (0..m).map(|i| matrix[row0 + i][col0..col0 + n].to_vec()).collect();
            // T_k has entry (−1)^ℓ at (m−k+ℓ, n−1−ℓ)
            for k in 1..=m.min(n) {
                let alpha = block[m - k][n - 1].clone();
                for l in 0..k {
                    let sign = if l % 2 == 0 { alpha.clone() } else { -alpha.clone() };
                    if block[m - k + l][n - 1 - l] != sign {
                        return Err(ProductError::Internal("block component is not in the kernel of H1 + H2".into()));
                    }
                }
                if alpha.is_zero() {
                    continue;
                }
                let f1 = LadderElement::certify(la.chain[m - k].clone(), k as u32)?;
                let f2 = LadderElement::certify(lb.chain[n - k].clone(), k as u32)?;
                terms.push(LadderTerm { f1, f2, k: k as u32, coefficient: alpha });
            }
            // kernel vectors fill the anti-diagonals i + j ≥ m + n − 1 − min(m, n)
            let lowest = m + n - 1 - m.min(n);
            for (i, row) in block.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    if i + j < lowest && !v.is_zero() {
                        return Err(ProductError::Internal("block component is not in the kernel of H1 + H2".into()));
                    }
                }
            }
            col0 += n;
        }
        row0 += m;
    }
    let mut form = ReducibleForm {
        input: f.clone(),
        reducible: terms.iter().all(|t| t.k == 1),
        terms,
        residual: MomentumPolynomial::zero(&pm.joint),
        ladders1,
        ladders2,
        matrix,
    };
    form.residual = f.checked_sub(&form.expand(pm)?)?;
    Ok(form)
}

/// Coefficients `M_ij` with `Σ u ⊗ v = Σ M_ij U_i ⊗ V_j`.
fn tensor_coordinates(
    pairs: &[(MomentumPolynomial, MomentumPolynomial)],
    ubasis: &[MomentumPolynomial],
    vbasis: &[MomentumPolynomial],
) -> Result<Vec<Vec<Rational>>, ProductError> {
    let mut m = vec![vec![Rational::zero(); vbasis.len()]; ubasis.len()];
    if pairs.is_empty() {
        return Ok(m);
    }
    let mut lall: Vec<&MomentumPolynomial> = ubasis.iter().collect();
    lall.extend(pairs.iter().map(|(u, _)| u));
    let mut rall: Vec<&MomentumPolynomial> = vbasis.iter().collect();
    rall.extend(pairs.iter().map(|(_, v)| v));
    let lc = coordinate_vectors(&lall);
    let rc = coordinate_vectors(&rall);
    let (lb, lp) = lc.split_at(ubasis.len());
    let (rb, rp) = rc.split_at(vbasis.len());
    for (a, b) in lp.iter().zip(rp) {
        let x =
            solve_combination(lb, a).ok_or_else(|| ProductError::Internal("left factor outside ladder span".into()))?;
        let y = solve_combination(rb, b)
            .ok_or_else(|| ProductError::Internal("right factor outside ladder span".into()))?;
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (j, yj) in y.iter().enumerate() {
                if !yj.is_zero() {
                    m[i][j] += xi * yj;
                }
            }
        }
    }
    Ok(m)
}

/// Reducible iff the coefficient matrix has every column in `ker H₁` and every
/// row in `ker H₂`; otherwise the witness is a nonzero bi-degree component
/// of `{𝓗₁, F}`.
pub fn reducibility_classify(rf: &ReducibleForm, pm: &ProductMetric) -> Result<Classification, ProductError> {
    if !rf.residual.is_zero() {
        return Err(ProductError::NonzeroResidual);
    }
    // kernel of H on a ladder basis: the last vector of every chain
    let ends = |ladders: &[Ladder]| -> Vec<bool> {
        ladders.iter().flat_map(|l| (0..l.len()).map(move |j| j + 1 == l.len())).collect()
    };
    let e1 = ends(&rf.ladders1);
    let e2 = ends(&rf.ladders2);
    let feasible = rf
        .matrix
        .iter()
        .enumerate()
        .all(|(i, row)| row.iter().enumerate().all(|(j, v)| v.is_zero() || (e1[i] && e2[j])));
    let bracket = pm.bracket1(&rf.input)?;
    if feasible {
        if !bracket.is_zero() {
            return Err(ProductError::Internal("feasible k = 1 form but {H1, F} is nonzero".into()));
        }
        return Ok(Classification::Reducible);
    }
    let split = bihomogeneous_split(&bracket, pm)?;
    let total = split.degree() as u32;
    for (l, part) in split.parts.iter().enumerate() {
        if !part.is_zero() {
            return Ok(Classification::IrreducibleWitnessed {
                witness: part.clone(),
                bidegree: (l as u32, total - l as u32),
            });
        }
    }
    Err(ProductError::Internal("infeasible k = 1 form but {H1, F} vanishes".into()))
}
