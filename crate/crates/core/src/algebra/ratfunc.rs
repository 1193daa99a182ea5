use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::poly::gcd;
use super::{AlgebraError, MultiPoly, Rational, Variables};

/// Default relative guard used by [`RationalFunction::eval`] to reject poles.
pub const DEFAULT_POLE_GUARD: f64 = 1e-12;

/// Quotient of two polynomials in canonical form: coprime numerator and
/// denominator, denominator monic under graded-lex order. Two rational
/// functions are equal iff their canonical forms are structurally equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    num: MultiPoly,
    den: MultiPoly,
}

impl RationalFunction {
    pub fn new(num: MultiPoly, den: MultiPoly) -> Result<Self, AlgebraError> {
        if den.is_zero() {
            return Err(AlgebraError::ZeroDenominator);
        }
        if num.vars() != den.vars() {
            return Err(AlgebraError::Alignment {
                left: num.vars().names().to_vec(),
                right: den.vars().names().to_vec(),
            });
        }
        Ok(Self::normalize(num, den))
    }

    fn normalize(num: MultiPoly, den: MultiPoly) -> Self {
        let vars = num.vars().clone();
        if num.is_zero() {
            return Self::zero(&vars);
        }
        if let Some(c) = den.constant_value() {
            return RationalFunction { num: num.scale(&c.recip()), den: MultiPoly::one(&vars) };
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.div_exact(&g).expect("gcd divides"), den.div_exact(&g).expect("gcd divides"))
        };
        let lc = den.leading_coefficient();
        if lc.is_one() {
            RationalFunction { num, den }
        } else {
            let inv = lc.recip();
            RationalFunction { num: num.scale(&inv), den: den.scale(&inv) }
        }
    }

    pub fn zero(vars: &Variables) -> Self {
        RationalFunction { num: MultiPoly::zero(vars), den: MultiPoly::one(vars) }
    }

    pub fn one(vars: &Variables) -> Self {
        Self::from_poly(MultiPoly::one(vars))
    }

    pub fn constant(vars: &Variables, c: Rational) -> Self {
        Self::from_poly(MultiPoly::constant(vars, c))
    }

    pub fn from_poly(p: MultiPoly) -> Self {
        let vars = p.vars().clone();
        RationalFunction { num: p, den: MultiPoly::one(&vars) }
    }

    pub fn var(vars: &Variables, index: usize) -> Self {
        Self::from_poly(MultiPoly::var(vars, index))
    }

    pub fn num(&self) -> &MultiPoly {
        &self.num
    }

    pub fn den(&self) -> &MultiPoly {
        &self.den
    }

    pub fn vars(&self) -> &Variables {
        self.num.vars()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn constant_value(&self) -> Option<Rational> {
        if self.den.is_one() {
            self.num.constant_value()
        } else {
            None
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, AlgebraError> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.den == other.den {
            let num = self.num.checked_add(&other.num)?;
            if self.den.is_one() {
                return Ok(RationalFunction { num, den: self.den.clone() });
            }
            return Ok(Self::normalize(num, self.den.clone()));
        }
        let g = gcd(&self.den, &other.den);
        let a_cof = other.den.div_exact(&g).expect("gcd divides");
        let b_cof = self.den.div_exact(&g).expect("gcd divides");
        let num = &(&self.num * &a_cof) + &(&other.num * &b_cof);
        let den = &self.den * &a_cof;
        Ok(Self::normalize(num, den))
    }

    /// Sum of many terms over their least common denominator, normalised once.
    pub fn sum<'a, I>(vars: &Variables, items: I) -> Self
    where
        I: IntoIterator<Item = &'a RationalFunction>,
    {
        let items: Vec<&RationalFunction> = items.into_iter().filter(|f| !f.is_zero()).collect();
        match items.len() {
            0 => return Self::zero(vars),
            1 => return items[0].clone(),
            _ => {}
        }
        let mut lcm = MultiPoly::one(vars);
        for f in &items {
            if f.den.is_one() || f.den == lcm {
                continue;
            }
            let g = gcd(&lcm, &f.den);
            lcm = &lcm * &f.den.div_exact(&g).expect("gcd divides");
        }
        let mut num = MultiPoly::zero(vars);
        for f in &items {
            let cof =
                if f.den == lcm { MultiPoly::one(vars) } else { lcm.div_exact(&f.den).expect("lcm is a multiple") };
            num = &num + &(&f.num * &cof);
        }
        if lcm.is_one() {
            return Self::from_poly(num);
        }
        Self::normalize(num, lcm)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, AlgebraError> {
        if self.num.vars() != other.num.vars() {
            return Err(AlgebraError::Alignment {
                left: self.vars().names().to_vec(),
                right: other.vars().names().to_vec(),
            });
        }
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(self.vars()));
        }
        if self.den.is_one() && other.den.is_one() {
            return Ok(Self::from_poly(&self.num * &other.num));
        }
        // cross-cancel so the result is already coprime
        let g1 = gcd(&self.num, &other.den);
        let g2 = gcd(&other.num, &self.den);
        let n1 = self.num.div_exact(&g1).expect("gcd divides");
        let d2 = other.den.div_exact(&g1).expect("gcd divides");
        let n2 = other.num.div_exact(&g2).expect("gcd divides");
        let d1 = self.den.div_exact(&g2).expect("gcd divides");
        let num = &n1 * &n2;
        let den = &d1 * &d2;
        let lc = den.leading_coefficient();
        if lc.is_one() {
            Ok(RationalFunction { num, den })
        } else {
            let inv = lc.recip();
            Ok(RationalFunction { num: num.scale(&inv), den: den.scale(&inv) })
        }
    }

    pub fn recip(&self) -> Result<Self, AlgebraError> {
        if self.is_zero() {
            return Err(AlgebraError::ZeroDenominator);
        }
        Ok(Self::normalize(self.den.clone(), self.num.clone()))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.checked_mul(&other.recip()?)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.vars());
        }
        RationalFunction { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn pow(&self, e: u32) -> Self {
        RationalFunction { num: self.num.pow(e), den: self.den.pow(e) }
    }

    pub fn partial(&self, var: usize) -> Self {
        let dn = self.num.partial(var);
        if self.den.is_one() {
            return Self::from_poly(dn);
        }
        let dd = self.den.partial(var);
        if dd.is_zero() {
            return Self::normalize(dn, self.den.clone());
        }
        let num = &(&dn * &self.den) - &(&self.num * &dd);
        Self::normalize(num, &self.den * &self.den)
    }

    pub fn partial_named(&self, name: &str) -> Result<Self, AlgebraError> {
        let idx = self.vars().index_of(name).ok_or_else(|| AlgebraError::UnknownVariable(name.to_string()))?;
        Ok(self.partial(idx))
    }

    /// Floating evaluation; fails when `|den| <= guard * max(1, |num|)`.
    pub fn eval_guarded(&self, point: &[f64], guard: f64) -> Result<f64, AlgebraError> {
        let n = self.num.eval_f64(point);
        if self.den.is_one() {
            return Ok(n);
        }
        let d = self.den.eval_f64(point);
        if !d.is_finite() || d.abs() <= guard * n.abs().max(1.0) {
            return Err(AlgebraError::Pole { value: d });
        }
        Ok(n / d)
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, AlgebraError> {
        self.eval_guarded(point, DEFAULT_POLE_GUARD)
    }

    /// Evaluates at named coordinates; missing names are an error.
    pub fn eval_named(&self, point: &[(&str, f64)]) -> Result<f64, AlgebraError> {
        let mut values = vec![0.0; self.vars().len()];
        for (i, name) in self.vars().names().iter().enumerate() {
            values[i] = point
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| AlgebraError::UnknownVariable(name.clone()))?;
        }
        self.eval(&values)
    }

    pub fn eval_exact(&self, point: &[Rational]) -> Result<Rational, AlgebraError> {
        let d = self.den.eval_exact(point);
        if d.is_zero() {
            return Err(AlgebraError::Pole { value: 0.0 });
        }
        Ok(self.num.eval_exact(point) / d)
    }

    /// Re-expresses over another variable list, matching by name. Variables
    /// that do not occur may be missing from `target`.
    pub fn embed(&self, target: &Variables) -> Result<Self, AlgebraError> {
        let num = self.num.embed(target)?;
        let den = self.den.embed(target)?;
        // a reordering of variables can change which term leads
        let lc = den.leading_coefficient();
        if lc.is_one() {
            Ok(RationalFunction { num, den })
        } else {
            let inv = lc.recip();
            Ok(RationalFunction { num: num.scale(&inv), den: den.scale(&inv) })
        }
    }
}

impl Add for &RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: &RationalFunction) -> RationalFunction {
        self.checked_add(rhs).expect("rational function variable lists must match")
    }
}

impl Sub for &RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: &RationalFunction) -> RationalFunction {
        self.checked_add(&-rhs).expect("rational function variable lists must match")
    }
}

impl Mul for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: &RationalFunction) -> RationalFunction {
        self.checked_mul(rhs).expect("rational function variable lists must match")
    }
}

impl Div for &RationalFunction {
    type Output = RationalFunction;
    fn div(self, rhs: &RationalFunction) -> RationalFunction {
        self.checked_div(rhs).expect("division by zero rational function")
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction { num: -&self.num, den: self.den.clone() }
    }
}

impl Neg for RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction { num: -self.num, den: self.den }
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return write!(f, "{}", self.num);
        }
        let wrap = |p: &MultiPoly| {
            if p.num_terms() > 1 || p.leading_coefficient() < Rational::zero() {
                format!("({p})")
            } else {
                p.to_string()
            }
        };
        write!(f, "{}/{}", wrap(&self.num), wrap(&self.den))
    }
}
