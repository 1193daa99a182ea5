//! Exact bases of Killing spaces `𝒦^d` and ladder spaces `𝓛^d_k` inside a
//! finite ansatz of covariant tensor coefficients.

use std::collections::BTreeMap;

use num_traits::Zero;
use thiserror::Error;

use crate::algebra::{lcm, parse_expression, AlgebraError, Monomial, MultiPoly, Rational, RationalFunction};
use crate::flow::{h_apply, iterate_h, MomentumPolynomial};
use crate::geometry::{poly_to_tensor, sorted_tuples, tensor_to_poly, Chart, GeometryError, SymmetricCotensor};
use crate::linalg::{independent_subset, solve_combination, RowReducer};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpacesError {
    #[error("ansatz denominator must be nonzero")]
    ZeroDenominator,
    #[error("ladder index k must be at least 1")]
    ZeroLadder,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Covariant components `K_J = N_J / D` with `deg N_J ≤ coeff_degree + deg D`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzFamily {
    pub momentum_degree: u32,
    pub coeff_degree: u32,
    pub denominator: Option<MultiPoly>,
}

impl AnsatzFamily {
    pub fn polynomial(momentum_degree: u32, coeff_degree: u32) -> Self {
        AnsatzFamily { momentum_degree, coeff_degree, denominator: None }
    }

    pub fn with_denominator(
        momentum_degree: u32,
        coeff_degree: u32,
        denominator: MultiPoly,
    ) -> Result<Self, SpacesError> {
        if denominator.is_zero() {
            return Err(SpacesError::ZeroDenominator);
        }
        Ok(AnsatzFamily { momentum_degree, coeff_degree, denominator: Some(denominator.monic()) })
    }

    /// Denominator given as an expression in the chart coordinates.
    pub fn parse(
        chart: &Chart,
        momentum_degree: u32,
        coeff_degree: u32,
        denominator: &str,
    ) -> Result<Self, SpacesError> {
        let names = chart.coords().names().to_vec();
        let f =
            parse_expression(denominator, &names).map_err(AlgebraError::from)?.to_rational_function(chart.coords())?;
        if f.is_zero() {
            return Err(SpacesError::ZeroDenominator);
        }
        if !f.is_polynomial() {
            return Err(SpacesError::Algebra(AlgebraError::ZeroDenominator));
        }
        Self::with_denominator(momentum_degree, coeff_degree, f.num().clone())
    }

    pub fn with_degree(&self, d: u32) -> Self {
        AnsatzFamily { momentum_degree: d, ..self.clone() }
    }

    fn denominator_on(&self, chart: &Chart) -> Result<MultiPoly, SpacesError> {
        match &self.denominator {
            None => Ok(MultiPoly::one(chart.coords())),
            Some(d) => Ok(d.embed(chart.coords())?),
        }
    }

    fn numerator_bound(&self, chart: &Chart) -> Result<u32, SpacesError> {
        Ok(self.coeff_degree + self.denominator_on(chart)?.total_degree())
    }

    /// Unknowns `(J, x^β)`, ordered by index tuple then monomial.
    pub fn unknowns(&self, chart: &Chart, d: u32) -> Result<Vec<(Vec<usize>, Monomial)>, SpacesError> {
        let monos = monomials_up_to(chart.dim(), self.numerator_bound(chart)?);
        Ok(sorted_tuples(chart.dim(), d as usize)
            .into_iter()
            .flat_map(|j| monos.iter().map(move |m| (j.clone(), m.clone())))
            .collect())
    }

    /// Momentum polynomial of the tensor with the single component `K_J = x^β / D`.
    pub fn element(&self, chart: &Chart, tuple: &[usize], mono: &Monomial) -> Result<MomentumPolynomial, SpacesError> {
        let den = self.denominator_on(chart)?;
        let coeff = RationalFunction::new(
            MultiPoly::monomial(chart.coords(), mono.clone(), Rational::from_integer(1.into())),
            den,
        )?;
        let t = SymmetricCotensor::from_components(chart, tuple.len(), [(tuple.to_vec(), coeff)])?;
        Ok(tensor_to_poly(&t))
    }

    /// Whether every covariant coefficient of the homogeneous `f` lies in the
    /// coefficient family (the momentum degree is not checked).
    pub fn covers(&self, f: &MomentumPolynomial) -> Result<bool, SpacesError> {
        let chart = f.chart();
        let den = self.denominator_on(chart)?;
        let bound = self.numerator_bound(chart)?;
        let t = poly_to_tensor(f)?;
        for c in t.components().values() {
            let scaled = c * &RationalFunction::from_poly(den.clone());
            if !scaled.is_polynomial() || scaled.num().total_degree() > bound {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// All monomials of total degree `≤ max` in `n` variables, ascending grlex.
pub fn monomials_up_to(n: usize, max: u32) -> Vec<Monomial> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if cur.len() == n {
            out.push(Monomial::from_exponents(cur));
            return;
        }
        for e in 0..=left {
            cur.push(e);
            rec(n, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, max, &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// Basis of an ansatz-relative ladder space with the action of `{𝓗, ·}`.
#[derive(Clone, Debug)]
pub struct LadderBasis {
    pub chart: Chart,
    pub d: u32,
    pub k: u32,
    pub family: AnsatzFamily,
    pub basis: Vec<MomentumPolynomial>,
    /// `{𝓗, f}` for every basis element.
    pub h_images: Vec<MomentumPolynomial>,
    /// Coordinates of `{𝓗, f}` in `basis` when it lies in its span.
    pub h_action: Vec<Option<Vec<Rational>>>,
}

impl LadderBasis {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Integrals of degree `family.momentum_degree` in the ansatz.
pub fn solve_killing(chart: &Chart, family: &AnsatzFamily) -> Result<LadderBasis, SpacesError> {
    solve_ladder(chart, family.momentum_degree, 1, family)
}

/// Basis of `{f in the ansatz : f homogeneous of degree d, H^k f = 0}`,
/// computed as the kernel of `H^k` on the ansatz.
pub fn solve_ladder(chart: &Chart, d: u32, k: u32, family: &AnsatzFamily) -> Result<LadderBasis, SpacesError> {
    if k == 0 {
        return Err(SpacesError::ZeroLadder);
    }
    let unknowns = family.unknowns(chart, d)?;
    let elements: Vec<MomentumPolynomial> =
        unknowns.iter().map(|(j, m)| family.element(chart, j, m)).collect::<Result<_, _>>()?;
    let images: Vec<MomentumPolynomial> = elements.iter().map(|e| iterate_h(e, k)).collect();
    let (nkeys, cols) = sparse_coordinates(&images.iter().collect::<Vec<_>>());
    let mut rows: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); nkeys];
    for (i, col) in cols.into_iter().enumerate() {
        for (key, v) in col {
            rows[key].push((i, v));
        }
    }
    let mut red = RowReducer::new(elements.len());
    for row in rows {
        red.add_row(&row);
    }
    let basis: Vec<MomentumPolynomial> = red.nullspace().iter().map(|v| combine(chart, &elements, v)).collect();
    let h_images: Vec<MomentumPolynomial> = basis.iter().map(h_apply).collect();
    let h_action = h_images.iter().map(|img| express_in(&basis, img)).collect();
    Ok(LadderBasis { chart: chart.clone(), d, k, family: family.clone(), basis, h_images, h_action })
}

/// `Σ c_i f_i`.
pub fn combine(chart: &Chart, polys: &[MomentumPolynomial], coeffs: &[Rational]) -> MomentumPolynomial {
    let terms = polys
        .iter()
        .zip(coeffs)
        .filter(|(_, c)| !c.is_zero())
        .flat_map(|(f, c)| f.terms().map(move |(m, v)| (m.clone(), v.scale(c))).collect::<Vec<_>>());
    MomentumPolynomial::from_terms(chart, terms)
}

/// Coordinates of `target` in the span of `basis`, if it lies there.
pub fn express_in(basis: &[MomentumPolynomial], target: &MomentumPolynomial) -> Option<Vec<Rational>> {
    if target.is_zero() {
        return Some(vec![Rational::zero(); basis.len()]);
    }
    let mut all: Vec<&MomentumPolynomial> = basis.iter().collect();
    all.push(target);
    let mut vecs = coordinate_vectors(&all);
    let t = vecs.pop().expect("target present");
    solve_combination(&vecs, &t)
}

/// Sparse coordinates of the polynomials: over a common denominator `L` of
/// every coefficient, `f ↦` the rational coefficients of `x^β p^α` in `L·f`.
/// Returns the number of distinct keys and one sparse column per input.
pub fn sparse_coordinates(polys: &[&MomentumPolynomial]) -> (usize, Vec<BTreeMap<usize, Rational>>) {
    let Some(first) = polys.first() else { return (0, Vec::new()) };
    let vars = first.chart().coords().clone();
    let mut seen: Vec<MultiPoly> = Vec::new();
    let mut common = MultiPoly::one(&vars);
    for f in polys {
        for (_, c) in f.terms() {
            if c.den().is_one() || seen.contains(c.den()) {
                continue;
            }
            seen.push(c.den().clone());
            common = lcm(&common, c.den());
        }
    }
    let mut keys: BTreeMap<(Monomial, Monomial), usize> = BTreeMap::new();
    let mut raw: Vec<Vec<((Monomial, Monomial), Rational)>> = Vec::with_capacity(polys.len());
    let mut cofactors: Vec<(MultiPoly, MultiPoly)> = Vec::new();
    for f in polys {
        let mut entries = Vec::new();
        for (pm, c) in f.terms() {
            let cof = if c.den() == &common {
                MultiPoly::one(&vars)
            } else if let Some((_, q)) = cofactors.iter().find(|(d, _)| d == c.den()) {
                q.clone()
            } else {
                let q = common.div_exact(c.den()).expect("common denominator is a multiple");
                cofactors.push((c.den().clone(), q.clone()));
                q
            };
            let scaled = c.num() * &cof;
            for (xm, v) in scaled.terms() {
                let key = (pm.clone(), xm.clone());
                keys.entry(key.clone()).or_insert(0);
                entries.push((key, v.clone()));
            }
        }
        raw.push(entries);
    }
    for (i, v) in keys.values_mut().enumerate() {
        *v = i;
    }
    let cols = raw.into_iter().map(|entries| entries.into_iter().map(|(key, v)| (keys[&key], v)).collect()).collect();
    (keys.len(), cols)
}

/// Dense version of [`sparse_coordinates`].
pub fn coordinate_vectors(polys: &[&MomentumPolynomial]) -> Vec<Vec<Rational>> {
    let (n, cols) = sparse_coordinates(polys);
    cols.into_iter()
        .map(|col| {
            let mut v = vec![Rational::zero(); n];
            for (i, c) in col {
                v[i] = c;
            }
            v
        })
        .collect()
}

/// Indices of a maximal independent subfamily, chosen greedily in order.
pub fn independent_polys(polys: &[MomentumPolynomial]) -> Vec<usize> {
    if polys.is_empty() {
        return Vec::new();
    }
    independent_subset(&coordinate_vectors(&polys.iter().collect::<Vec<_>>()))
}

/// Independent spanning set of the smallest `{𝓗, ·}`-invariant space
/// containing the generators, listed generator by generator.
pub fn h_closure(gens: &[MomentumPolynomial]) -> Vec<MomentumPolynomial> {
    let mut all = Vec::new();
    for g in gens {
        let mut cur = g.clone();
        while !cur.is_zero() {
            let next = h_apply(&cur);
            all.push(cur);
            cur = next;
        }
    }
    let keep = independent_polys(&all);
    keep.into_iter().map(|i| all[i].clone()).collect()
}
