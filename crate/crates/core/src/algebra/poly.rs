//! Sparse multivariate polynomials over the rationals.
//!
//! Terms are kept in a `BTreeMap` ordered by graded lexicographic order, so
//! the leading term is always the last entry. Zero coefficients are never
//! stored, which makes structural equality coincide with mathematical
//! equality.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use smallvec::SmallVec;

use super::{AlgebraError, Rational};

/// Ordered list of symbol names shared between polynomials of the same ring.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Variables(Arc<Vec<String>>);

impl Variables {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Self {
        Variables(Arc::new(names.iter().map(|s| s.as_ref().to_string()).collect()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|v| v == name)
    }
}

/// Exponent vector with graded lexicographic ordering.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(SmallVec<[u32; 8]>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(SmallVec::from_elem(0, nvars))
    }

    pub fn from_exponents(exps: &[u32]) -> Self {
        Monomial(SmallVec::from_slice(exps))
    }

    pub fn unit(nvars: usize, var: usize) -> Self {
        let mut m = Self::one(nvars);
        m.0[var] = 1;
        m
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect())
    }

    /// `self / other` when every exponent of `other` is at most the one in `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = SmallVec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            if b > a {
                return None;
            }
            out.push(a - b);
        }
        Some(Monomial(out))
    }

    pub fn gcd(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(other.0.iter()).map(|(a, b)| *a.min(b)).collect())
    }

    pub fn with_exponent(&self, var: usize, e: u32) -> Monomial {
        let mut m = self.clone();
        m.0[var] = e;
        m
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    vars: Variables,
    terms: BTreeMap<Monomial, Rational>,
}

impl MultiPoly {
    pub fn zero(vars: &Variables) -> Self {
        MultiPoly { vars: vars.clone(), terms: BTreeMap::new() }
    }

    pub fn one(vars: &Variables) -> Self {
        Self::constant(vars, Rational::one())
    }

    pub fn constant(vars: &Variables, c: Rational) -> Self {
        let mut p = Self::zero(vars);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(vars.len()), c);
        }
        p
    }

    pub fn from_int(vars: &Variables, c: i64) -> Self {
        Self::constant(vars, Rational::from_integer(BigInt::from(c)))
    }

    pub fn var(vars: &Variables, index: usize) -> Self {
        Self::monomial(vars, Monomial::unit(vars.len(), index), Rational::one())
    }

    pub fn var_named(vars: &Variables, name: &str) -> Result<Self, AlgebraError> {
        let idx = vars.index_of(name).ok_or_else(|| AlgebraError::UnknownVariable(name.to_string()))?;
        Ok(Self::var(vars, idx))
    }

    pub fn monomial(vars: &Variables, m: Monomial, c: Rational) -> Self {
        debug_assert_eq!(m.len(), vars.len());
        let mut p = Self::zero(vars);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    /// Builds a polynomial from arbitrary terms, merging duplicates and dropping zeros.
    pub fn from_terms<I>(vars: &Variables, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, Rational)>,
    {
        let mut p = Self::zero(vars);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn vars(&self) -> &Variables {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> + ExactSizeIterator {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms.keys().next().unwrap().is_one())
    }

    pub fn constant_value(&self) -> Option<Rational> {
        if self.is_zero() {
            Some(Rational::zero())
        } else if self.is_constant() {
            self.terms.values().next().cloned()
        } else {
            None
        }
    }

    pub fn is_one(&self) -> bool {
        self.constant_value().is_some_and(|c| c.is_one())
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn leading_coefficient(&self) -> Rational {
        self.leading_term().map(|(_, c)| c.clone()).unwrap_or_else(Rational::zero)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m.0[var]).max().unwrap_or(0)
    }

    /// Indices of variables with a positive exponent somewhere.
    pub fn support(&self) -> Vec<usize> {
        (0..self.nvars()).filter(|&v| self.degree_in(v) > 0).collect()
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    fn check_aligned(&self, other: &MultiPoly) -> Result<(), AlgebraError> {
        if self.vars != other.vars {
            return Err(AlgebraError::Alignment {
                left: self.vars.names().to_vec(),
                right: other.vars.names().to_vec(),
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &MultiPoly) -> Result<MultiPoly, AlgebraError> {
        self.check_aligned(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &MultiPoly) -> Result<MultiPoly, AlgebraError> {
        self.check_aligned(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &MultiPoly) -> Result<MultiPoly, AlgebraError> {
        self.check_aligned(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(MultiPoly::zero(&self.vars));
        }
        let mut out = MultiPoly::zero(&self.vars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero(&self.vars);
        }
        MultiPoly { vars: self.vars.clone(), terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect() }
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &Rational) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero(&self.vars);
        }
        MultiPoly { vars: self.vars.clone(), terms: self.terms.iter().map(|(k, v)| (k.mul(m), v * c)).collect() }
    }

    pub fn pow(&self, e: u32) -> MultiPoly {
        let mut result = MultiPoly::one(&self.vars);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    pub fn partial(&self, var: usize) -> MultiPoly {
        let mut out = MultiPoly::zero(&self.vars);
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e > 0 {
                let mut nm = m.clone();
                nm.0[var] = e - 1;
                out.add_term(nm, c * Rational::from_integer(BigInt::from(e)));
            }
        }
        out
    }

    pub fn partial_named(&self, name: &str) -> Result<MultiPoly, AlgebraError> {
        let idx = self.vars.index_of(name).ok_or_else(|| AlgebraError::UnknownVariable(name.to_string()))?;
        Ok(self.partial(idx))
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut v = rational_to_f64(c);
                for (x, &e) in point.iter().zip(m.0.iter()) {
                    if e > 0 {
                        v *= x.powi(e as i32);
                    }
                }
                v
            })
            .sum()
    }

    pub fn eval_exact(&self, point: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (x, &e) in point.iter().zip(m.0.iter()) {
                if e > 0 {
                    v *= num_traits::pow::pow(x.clone(), e as usize);
                }
            }
            acc += v;
        }
        acc
    }

    /// Substitutes a rational value for one variable; the ring is unchanged.
    pub fn substitute(&self, var: usize, value: &Rational) -> MultiPoly {
        let mut out = MultiPoly::zero(&self.vars);
        for (m, c) in &self.terms {
            let e = m.0[var];
            let v = if e == 0 { c.clone() } else { c * num_traits::pow::pow(value.clone(), e as usize) };
            out.add_term(m.with_exponent(var, 0), v);
        }
        out
    }

    /// Re-expresses the polynomial over another variable list, matching by name.
    pub fn embed(&self, target: &Variables) -> Result<MultiPoly, AlgebraError> {
        if &self.vars == target {
            return Ok(self.clone());
        }
        let mut map = Vec::with_capacity(self.nvars());
        for (i, name) in self.vars.names().iter().enumerate() {
            match target.index_of(name) {
                Some(j) => map.push(Some(j)),
                None if self.degree_in(i) == 0 => map.push(None),
                None => return Err(AlgebraError::UnknownVariable(name.clone())),
            }
        }
        let mut out = MultiPoly::zero(target);
        for (m, c) in &self.terms {
            let mut nm = Monomial::one(target.len());
            for (i, slot) in map.iter().enumerate() {
                if let Some(j) = slot {
                    nm.0[*j] += m.0[i];
                }
            }
            out.add_term(nm, c.clone());
        }
        Ok(out)
    }

    /// Leading coefficient made 1; zero stays zero.
    pub fn monic(&self) -> MultiPoly {
        match self.leading_term() {
            None => self.clone(),
            Some((_, c)) if c.is_one() => self.clone(),
            Some((_, c)) => self.scale(&c.recip()),
        }
    }

    /// Exact quotient when `divisor` divides `self`, otherwise `None`.
    pub fn div_exact(&self, divisor: &MultiPoly) -> Option<MultiPoly> {
        assert!(!divisor.is_zero(), "division by zero polynomial");
        if self.is_zero() {
            return Some(self.clone());
        }
        if let Some(c) = divisor.constant_value() {
            return Some(self.scale(&c.recip()));
        }
        let (lm, lc) = divisor.leading_term().map(|(m, c)| (m.clone(), c.clone()))?;
        if divisor.terms.len() == 1 {
            let inv = lc.recip();
            let mut out = MultiPoly::zero(&self.vars);
            for (m, c) in &self.terms {
                out.terms.insert(m.div(&lm)?, c * &inv);
            }
            return Some(out);
        }
        let mut rem = self.clone();
        let mut quot = MultiPoly::zero(&self.vars);
        while let Some((rm, rc)) = rem.leading_term() {
            let qm = rm.div(&lm)?;
            let qc = rc / &lc;
            for (m, c) in &divisor.terms {
                rem.add_term(m.mul(&qm), -(c * &qc));
            }
            quot.add_term(qm, qc);
        }
        Some(quot)
    }

    /// Coefficients in powers of `var`; each coefficient has `var` exponent 0.
    pub(crate) fn to_univariate(&self, var: usize) -> Vec<MultiPoly> {
        let deg = self.degree_in(var) as usize;
        let mut coeffs = vec![MultiPoly::zero(&self.vars); deg + 1];
        for (m, c) in &self.terms {
            let e = m.0[var] as usize;
            coeffs[e].terms.insert(m.with_exponent(var, 0), c.clone());
        }
        coeffs
    }

    pub(crate) fn from_univariate(vars: &Variables, var: usize, coeffs: &[MultiPoly]) -> MultiPoly {
        let mut out = MultiPoly::zero(vars);
        for (e, c) in coeffs.iter().enumerate() {
            for (m, v) in &c.terms {
                let mut nm = m.clone();
                nm.0[var] += e as u32;
                out.add_term(nm, v.clone());
            }
        }
        out
    }

    /// Product of all denominators' lcm and the numerators' gcd, used to clear fractions.
    pub fn integer_content(&self) -> Rational {
        use num_integer::Integer;
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for c in self.terms.values() {
            num_gcd = num_gcd.gcd(c.numer());
            den_lcm = den_lcm.lcm(c.denom());
        }
        if num_gcd.is_zero() {
            return Rational::one();
        }
        Rational::new(num_gcd, den_lcm)
    }
}

pub(crate) fn rational_to_f64(c: &Rational) -> f64 {
    match (c.numer().to_f64(), c.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // huge numerator or denominator: scale both down by the same power of two
            let nb = c.numer().bits() as i64;
            let db = c.denom().bits() as i64;
            let shift = (nb.max(db) - 1000).max(0) as usize;
            let n = (c.numer() >> shift).to_f64().unwrap_or(f64::INFINITY);
            let d = (c.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
            if d == 0.0 {
                if c.is_negative() {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                }
            } else {
                n / d
            }
        }
    }
}

/// Greatest common divisor over Q, normalised to be monic. `gcd(0, 0) = 0`.
pub fn gcd(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    gcd_inner(a, b).monic()
}

fn gcd_inner(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    let vars = a.vars();
    if a.is_constant() || b.is_constant() {
        return MultiPoly::one(vars);
    }
    if a.num_terms() == 1 || b.num_terms() == 1 {
        let mut m = a.terms.keys().next().unwrap().clone();
        for k in a.terms.keys().chain(b.terms.keys()) {
            m = m.gcd(k);
        }
        return MultiPoly::monomial(vars, m, Rational::one());
    }
    if a == b {
        return a.clone();
    }
    let sa = a.support();
    let sb = b.support();
    // a variable present in only one argument cannot occur in the gcd
    if let Some(&v) = sa.iter().find(|v| !sb.contains(v)) {
        return gcd_with_coefficients(b, a, v);
    }
    if let Some(&v) = sb.iter().find(|v| !sa.contains(v)) {
        return gcd_with_coefficients(a, b, v);
    }
    // main variable: the common one with the smallest combined degree
    let v = *sa
        .iter()
        .min_by_key(|&&v| (a.degree_in(v) + b.degree_in(v), v))
        .expect("non-constant polynomials have support");
    let ua = a.to_univariate(v);
    let ub = b.to_univariate(v);
    let ca = content_of(&ua);
    let cb = content_of(&ub);
    let content = gcd_inner(&ca, &cb);
    let pa: Vec<MultiPoly> = ua.iter().map(|c| c.div_exact(&ca).expect("content divides")).collect();
    let pb: Vec<MultiPoly> = ub.iter().map(|c| c.div_exact(&cb).expect("content divides")).collect();
    let g = subresultant_gcd(pa, pb);
    let gc = content_of(&g);
    let g: Vec<MultiPoly> = g.iter().map(|c| c.div_exact(&gc).expect("content divides")).collect();
    let g = MultiPoly::from_univariate(vars, v, &g);
    &g * &content
}

fn gcd_with_coefficients(g0: &MultiPoly, other: &MultiPoly, var: usize) -> MultiPoly {
    let mut g = g0.clone();
    for c in other.to_univariate(var) {
        if c.is_zero() {
            continue;
        }
        g = gcd_inner(&g, &c);
        if g.is_constant() {
            return MultiPoly::one(g0.vars());
        }
    }
    g
}

fn content_of(coeffs: &[MultiPoly]) -> MultiPoly {
    let mut g = MultiPoly::zero(coeffs[0].vars());
    for c in coeffs {
        if c.is_zero() {
            continue;
        }
        g = if g.is_zero() { c.clone() } else { gcd_inner(&g, c) };
        if g.is_constant() {
            return MultiPoly::one(c.vars());
        }
    }
    g.monic()
}

fn trim(p: &mut Vec<MultiPoly>) {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn upoly_is_zero(p: &[MultiPoly]) -> bool {
    p.iter().all(|c| c.is_zero())
}

/// Pseudo-remainder `lc(b)^(deg a - deg b + 1) * a mod b`.
fn pseudo_remainder(a: &[MultiPoly], b: &[MultiPoly]) -> Vec<MultiPoly> {
    let db = b.len() - 1;
    let lcb = &b[db];
    let mut r = a.to_vec();
    trim(&mut r);
    let mut e = (a.len() - 1) as i64 - db as i64 + 1;
    while r.len() > db && !upoly_is_zero(&r) {
        let dr = r.len() - 1;
        let lcr = r[dr].clone();
        let shift = dr - db;
        for c in r.iter_mut() {
            *c = &*c * lcb;
        }
        for (i, bc) in b.iter().enumerate() {
            let t = &lcr * bc;
            r[i + shift] = &r[i + shift] - &t;
        }
        r.pop();
        trim(&mut r);
        e -= 1;
    }
    if e > 0 {
        let f = lcb.pow(e as u32);
        for c in r.iter_mut() {
            *c = &*c * &f;
        }
    }
    r
}

/// Last nonzero subresultant of two univariate polynomials over a polynomial ring.
fn subresultant_gcd(mut a: Vec<MultiPoly>, mut b: Vec<MultiPoly>) -> Vec<MultiPoly> {
    trim(&mut a);
    trim(&mut b);
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    let vars = a[0].vars().clone();
    let mut g = MultiPoly::one(&vars);
    let mut h = MultiPoly::one(&vars);
    loop {
        let delta = (a.len() - b.len()) as u32;
        let r = pseudo_remainder(&a, &b);
        if upoly_is_zero(&r) {
            return b;
        }
        if r.len() == 1 {
            return vec![MultiPoly::one(&vars)];
        }
        let divisor = &g * &h.pow(delta);
        let next: Vec<MultiPoly> =
            r.iter().map(|c| c.div_exact(&divisor).expect("subresultant division is exact")).collect();
        a = b;
        b = next;
        g = a.last().unwrap().clone();
        h = if delta == 0 {
            h
        } else {
            let num = g.pow(delta);
            num.div_exact(&h.pow(delta - 1)).expect("subresultant h update is exact")
        };
    }
}

/// Least common multiple, monic.
pub fn lcm(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    if a.is_zero() || b.is_zero() {
        return MultiPoly::zero(a.vars());
    }
    if a == b {
        return a.monic();
    }
    let g = gcd(a, b);
    (a * &b.div_exact(&g).expect("gcd divides")).monic()
}

/// Resultant with respect to `var`, via the Sylvester determinant (fraction-free).
pub fn resultant(a: &MultiPoly, b: &MultiPoly, var: usize) -> MultiPoly {
    let ua = a.to_univariate(var);
    let ub = b.to_univariate(var);
    let m = ua.len() - 1;
    let n = ub.len() - 1;
    let vars = a.vars().clone();
    if a.is_zero() || b.is_zero() {
        return MultiPoly::zero(&vars);
    }
    if m == 0 {
        return ua[0].pow(n as u32);
    }
    if n == 0 {
        return ub[0].pow(m as u32);
    }
    let size = m + n;
    let mut mat = vec![vec![MultiPoly::zero(&vars); size]; size];
    for i in 0..n {
        for (j, c) in ua.iter().rev().enumerate() {
            mat[i][i + j] = c.clone();
        }
    }
    for i in 0..m {
        for (j, c) in ub.iter().rev().enumerate() {
            mat[n + i][i + j] = c.clone();
        }
    }
    poly_bareiss_det(mat)
}

/// Determinant of a square matrix of polynomials by Bareiss elimination.
pub(crate) fn poly_bareiss_det(mut mat: Vec<Vec<MultiPoly>>) -> MultiPoly {
    let n = mat.len();
    let vars = mat[0][0].vars().clone();
    let mut sign = false;
    let mut prev = MultiPoly::one(&vars);
    for k in 0..n {
        if mat[k][k].is_zero() {
            match (k + 1..n).find(|&i| !mat[i][k].is_zero()) {
                Some(i) => {
                    mat.swap(k, i);
                    sign = !sign;
                }
                None => return MultiPoly::zero(&vars),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = &(&mat[i][j] * &mat[k][k]) - &(&mat[i][k] * &mat[k][j]);
                mat[i][j] = t.div_exact(&prev).expect("Bareiss division is exact");
            }
            mat[i][k] = MultiPoly::zero(&vars);
        }
        prev = mat[k][k].clone();
    }
    let det = mat[n - 1][n - 1].clone();
    if sign {
        -det
    } else {
        det
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        self.checked_add(rhs).expect("polynomial variable lists must match")
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self.checked_sub(rhs).expect("polynomial variable lists must match")
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        self.checked_mul(rhs).expect("polynomial variable lists must match")
    }
}

impl Neg for MultiPoly {
    type Output = MultiPoly;
    fn neg(mut self) -> MultiPoly {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        -self.clone()
    }
}

pub(crate) fn format_rational(c: &Rational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

pub(crate) fn format_monomial(vars: &Variables, m: &Monomial) -> String {
    let mut parts = Vec::new();
    for (name, &e) in vars.names().iter().zip(m.exponents()) {
        match e {
            0 => {}
            1 => parts.push(name.clone()),
            _ => parts.push(format!("{name}^{e}")),
        }
    }
    parts.join("*")
}

/// Writes `Σ c·m` in descending graded-lex order using the given monomial printer.
pub(crate) fn write_sum<'a, I, F>(f: &mut fmt::Formatter<'_>, terms: I, mono: F) -> fmt::Result
where
    I: Iterator<Item = (String, &'a Rational)>,
    F: Fn(&str) -> bool,
{
    let mut first = true;
    for (m, c) in terms {
        let neg = c.is_negative();
        let abs = c.abs();
        if first {
            if neg {
                write!(f, "-")?;
            }
        } else {
            write!(f, " {} ", if neg { '-' } else { '+' })?;
        }
        first = false;
        let is_unit_monomial = mono(&m);
        if is_unit_monomial {
            write!(f, "{}", format_rational(&abs))?;
        } else if abs.is_one() {
            write!(f, "{m}")?;
        } else {
            write!(f, "{}*{m}", format_rational(&abs))?;
        }
    }
    if first {
        write!(f, "0")?;
    }
    Ok(())
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars = &self.vars;
        write_sum(f, self.terms.iter().rev().map(|(m, c)| (format_monomial(vars, m), c)), |s| s.is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rational {
        Rational::from_integer(BigInt::from(n))
    }

    fn ring() -> Variables {
        Variables::new(&["r", "theta", "z"])
    }

    #[test]
    fn difference_of_squares() {
        let v = ring();
        let r = MultiPoly::var(&v, 0);
        let one = MultiPoly::one(&v);
        let prod = &(&r + &one) * &(&r - &one);
        assert_eq!(prod, &(&r * &r) - &one);
    }

    #[test]
    fn additive_inverse_is_empty() {
        let v = ring();
        let p = &MultiPoly::var(&v, 0) + &MultiPoly::var(&v, 2);
        let s = &p + &(-&p);
        assert!(s.is_zero());
        assert_eq!(s.num_terms(), 0);
    }

    #[test]
    fn square_of_one_plus_r2() {
        let v = ring();
        let r = MultiPoly::var(&v, 0);
        let a = &MultiPoly::one(&v) + &(&r * &r);
        let sq = &a * &a;
        // hand expansion: 1 + 2r^2 + r^4
        let expected = MultiPoly::from_terms(
            &v,
            [
                (Monomial::from_exponents(&[0, 0, 0]), q(1)),
                (Monomial::from_exponents(&[2, 0, 0]), q(2)),
                (Monomial::from_exponents(&[4, 0, 0]), q(1)),
            ],
        );
        assert_eq!(sq, expected);
        assert_eq!(sq.partial(0).to_string(), "4*r^3 + 4*r");
    }

    #[test]
    fn partial_in_absent_variable_is_zero() {
        let v = ring();
        let r = MultiPoly::var(&v, 0);
        assert!((&r * &r).partial_named("z").unwrap().is_zero());
        assert_eq!((&r * &r).partial_named("r").unwrap().to_string(), "2*r");
        assert!(matches!(r.partial_named("w"), Err(AlgebraError::UnknownVariable(_))));
    }

    #[test]
    fn mismatched_rings_are_rejected() {
        let a = MultiPoly::var(&ring(), 0);
        let b = MultiPoly::var(&Variables::new(&["x"]), 0);
        assert!(matches!(a.checked_add(&b), Err(AlgebraError::Alignment { .. })));
    }

    #[test]
    fn grlex_leading_term() {
        let v = Variables::new(&["x", "y"]);
        let p = MultiPoly::from_terms(
            &v,
            [
                (Monomial::from_exponents(&[3, 0]), q(1)),
                (Monomial::from_exponents(&[1, 2]), q(5)),
                (Monomial::from_exponents(&[0, 4]), q(-2)),
            ],
        );
        assert_eq!(p.leading_term().unwrap().0.exponents(), &[0, 4]);
        assert_eq!(p.to_string(), "-2*y^4 + x^3 + 5*x*y^2");
    }

    #[test]
    fn gcd_of_univariate_and_multivariate() {
        let v = ring();
        let r = MultiPoly::var(&v, 0);
        let z = MultiPoly::var(&v, 2);
        let one = MultiPoly::one(&v);
        let d = &one + &(&r * &r);
        let a = &d * &(&r + &z);
        let b = &d * &(&z - &one);
        assert_eq!(gcd(&a, &b), d);
        let coprime = gcd(&(&r + &z), &(&z - &one));
        assert!(coprime.is_one());
    }

    #[test]
    fn exact_division_detects_non_divisibility() {
        let v = ring();
        let r = MultiPoly::var(&v, 0);
        let one = MultiPoly::one(&v);
        let d = &one + &(&r * &r);
        assert_eq!((&d * &r).div_exact(&d).unwrap(), r);
        assert!(r.div_exact(&d).is_none());
    }

    #[test]
    fn resultant_detects_common_roots() {
        let v = Variables::new(&["s", "t"]);
        let s = MultiPoly::var(&v, 0);
        let t = MultiPoly::var(&v, 1);
        // t - s and t + s - 2 meet at s = 1
        let res = resultant(&(&t - &s), &(&(&t + &s) - &MultiPoly::from_int(&v, 2)), 1);
        assert_eq!(res.monic(), &s - &MultiPoly::one(&v));
    }
}
