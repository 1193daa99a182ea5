//! Riemann tensor at a rational point and the directions along which every
//! sectional curvature vanishes.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{GeometryError, MetricChart};
use crate::algebra::{gcd, rational_to_f64, resultant, MultiPoly, Rational, Variables};
use crate::linalg::{bareiss_determinant, RowReducer};

/// Fully covariant `R_{abcd}` at one point, with
/// `R(X,Y,X,Y) = R_{abcd} X^a Y^b X^c Y^d` the unnormalised sectional curvature.
#[derive(Clone, Debug)]
pub struct RiemannAtPoint {
    dim: usize,
    point: Vec<Rational>,
    metric: Vec<Vec<Rational>>,
    values: Vec<Rational>,
}

impl RiemannAtPoint {
    fn index(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.dim + b) * self.dim + c) * self.dim + d
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self) -> &[Rational] {
        &self.point
    }

    pub fn metric(&self) -> &[Vec<Rational>] {
        &self.metric
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> &Rational {
        &self.values[self.index(a, b, c, d)]
    }

    pub fn is_flat(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    /// `R(X,Y,X,Y)`.
    pub fn curvature_form(&self, x: &[Rational], y: &[Rational]) -> Rational {
        let n = self.dim;
        let mut acc = Rational::zero();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let r = self.get(a, b, c, d);
                        if !r.is_zero() {
                            acc += r * &x[a] * &y[b] * &x[c] * &y[d];
                        }
                    }
                }
            }
        }
        acc
    }

    /// Sectional curvature of the plane spanned by `x` and `y`.
    pub fn sectional(&self, x: &[Rational], y: &[Rational]) -> Option<Rational> {
        let g = |u: &[Rational], v: &[Rational]| -> Rational {
            let mut acc = Rational::zero();
            for i in 0..self.dim {
                for j in 0..self.dim {
                    acc += &self.metric[i][j] * &u[i] * &v[j];
                }
            }
            acc
        };
        let area = g(x, x) * g(y, y) - g(x, y) * g(x, y);
        (!area.is_zero()).then(|| self.curvature_form(x, y) / area)
    }
}

/// Exact Riemann tensor of the chart at a rational point.
pub fn riemann_at(chart: &MetricChart, point: &[Rational]) -> Result<RiemannAtPoint, GeometryError> {
    let n = chart.dim();
    if point.len() != n {
        return Err(GeometryError::BadShape);
    }
    let at = |f: &crate::algebra::RationalFunction| {
        f.eval_exact(point).map_err(|_| GeometryError::Domain("point lies on a pole of the metric data".into()))
    };
    let mut metric = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            metric[i][j] = at(chart.g(i, j))?;
        }
    }
    if bareiss_determinant(&metric).is_zero() {
        return Err(GeometryError::Domain("metric is degenerate at the point".into()));
    }
    let gamma = chart.christoffel();
    let mut gam = vec![vec![vec![Rational::zero(); n]; n]; n];
    let mut dgam = vec![vec![vec![vec![Rational::zero(); n]; n]; n]; n];
    for (k, i, j, v) in gamma.nonzero() {
        let value = at(v)?;
        gam[k][i][j] = value.clone();
        gam[k][j][i] = value;
        for l in 0..n {
            let dv = at(&v.partial(l))?;
            dgam[l][k][i][j] = dv.clone();
            dgam[l][k][j][i] = dv;
        }
    }
    // R^a_{bcd} = ∂_c Γ^a_{db} − ∂_d Γ^a_{cb} + Γ^a_{ce}Γ^e_{db} − Γ^a_{de}Γ^e_{cb}
    let mut up = vec![Rational::zero(); n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut v = &dgam[c][a][d][b] - &dgam[d][a][c][b];
                    for e in 0..n {
                        v += &gam[a][c][e] * &gam[e][d][b] - &gam[a][d][e] * &gam[e][c][b];
                    }
                    up[((a * n + b) * n + c) * n + d] = v;
                }
            }
        }
    }
    let mut values = vec![Rational::zero(); n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut v = Rational::zero();
                    for e in 0..n {
                        if !metric[a][e].is_zero() {
                            v += &metric[a][e] * &up[((e * n + b) * n + c) * n + d];
                        }
                    }
                    values[((a * n + b) * n + c) * n + d] = v;
                }
            }
        }
    }
    Ok(RiemannAtPoint { dim: n, point: point.to_vec(), metric, values })
}

/// A direction `X` (first nonzero coordinate 1). `exact` is present when the
/// direction was confirmed with exact arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub struct Direction {
    pub approx: Vec<f64>,
    pub exact: Option<Vec<Rational>>,
}

/// Solution set restricted to one curvature block of coordinate indices.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockSolution {
    /// The curvature vanishes on the block: every direction is degenerate.
    All { indices: Vec<usize> },
    /// Only `X = 0` solves the block equations.
    OnlyZero { indices: Vec<usize> },
    /// Finitely many degenerate lines.
    Lines { indices: Vec<usize>, directions: Vec<Direction> },
}

impl BlockSolution {
    pub fn indices(&self) -> &[usize] {
        match self {
            BlockSolution::All { indices }
            | BlockSolution::OnlyZero { indices }
            | BlockSolution::Lines { indices, .. } => indices,
        }
    }

    pub fn has_nonzero(&self) -> bool {
        match self {
            BlockSolution::All { .. } => true,
            BlockSolution::OnlyZero { .. } => false,
            BlockSolution::Lines { directions, .. } => !directions.is_empty(),
        }
    }
}

/// The degenerate set is the set of `X = Σ X_B ≠ 0` where each block
/// component `X_B` lies in that block's solution cone.
#[derive(Clone, Debug, PartialEq)]
pub struct DegeneracyReport {
    pub chart: String,
    pub coords: Vec<String>,
    pub point: Vec<Rational>,
    pub blocks: Vec<BlockSolution>,
}

impl DegeneracyReport {
    /// No nonzero degenerate direction exists.
    pub fn is_empty(&self) -> bool {
        !self.blocks.iter().any(BlockSolution::has_nonzero)
    }

    /// Every direction is degenerate.
    pub fn is_full(&self) -> bool {
        self.blocks.iter().all(|b| matches!(b, BlockSolution::All { .. }))
    }
}

impl fmt::Display for DegeneracyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pt: Vec<String> = self.coords.iter().zip(&self.point).map(|(c, v)| format!("{c}={v}")).collect();
        writeln!(f, "chart {} at ({})", self.chart, pt.join(", "))?;
        let status = if self.is_full() {
            "all directions"
        } else if self.is_empty() {
            "empty"
        } else {
            "nonempty"
        };
        writeln!(f, "degenerate set: {status}")?;
        for b in &self.blocks {
            let names: Vec<&str> = b.indices().iter().map(|&i| self.coords[i].as_str()).collect();
            let names = names.join(",");
            match b {
                BlockSolution::All { .. } => writeln!(f, "block [{names}]: flat, all directions")?,
                BlockSolution::OnlyZero { .. } => writeln!(f, "block [{names}]: only X = 0")?,
                BlockSolution::Lines { directions, .. } => {
                    writeln!(f, "block [{names}]: {} line(s)", directions.len())?;
                    for d in directions {
                        match &d.exact {
                            Some(x) => {
                                let s: Vec<String> = x.iter().map(|v| v.to_string()).collect();
                                writeln!(f, "  X = ({}) exact", s.join(", "))?;
                            }
                            None => {
                                let s: Vec<String> = d.approx.iter().map(|v| format!("{v:.12}")).collect();
                                writeln!(f, "  X = ({}) approx", s.join(", "))?;
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Directions `X` with `R(X,Y,X,Y) = 0` for every `Y`, i.e. the zero set of
/// the quadratic system `Σ_{a,c} R_{abcd} X^a X^c = 0`.
pub fn sectional_curvature_degeneracy(
    chart: &MetricChart,
    point: &[Rational],
) -> Result<DegeneracyReport, GeometryError> {
    if chart.dim() < 3 {
        return Err(GeometryError::Domain("curvature degeneracy needs dimension at least 3".into()));
    }
    let riem = riemann_at(chart, point)?;
    let n = riem.dim();
    // indices coupled by some nonzero component share a block
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    if !riem.get(a, b, c, d).is_zero() {
                        for x in [b, c, d] {
                            let (ra, rx) = (find(&mut parent, a), find(&mut parent, x));
                            parent[rx] = ra;
                        }
                    }
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut flat: Vec<usize> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let coupled = (0..n).any(|j| j != i && find(&mut parent, j) == root);
        if !coupled {
            flat.push(i);
        } else if let Some(g) = groups.iter_mut().find(|g| find(&mut parent, g[0]) == root) {
            g.push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    let mut blocks = Vec::new();
    if !flat.is_empty() {
        blocks.push(BlockSolution::All { indices: flat });
    }
    for g in groups {
        blocks.push(solve_block(&riem, g)?);
    }
    blocks.sort_by(|a, b| a.indices()[0].cmp(&b.indices()[0]));
    Ok(DegeneracyReport {
        chart: chart.name().to_string(),
        coords: chart.coords().names().to_vec(),
        point: point.to_vec(),
        blocks,
    })
}

fn solve_block(riem: &RiemannAtPoint, indices: Vec<usize>) -> Result<BlockSolution, GeometryError> {
    let m = indices.len();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    // Φ(S)_{bd} = Σ S^{ac} R_{abcd}, one row per (b ≤ d), one column per (a ≤ c)
    let mut reducer = RowReducer::new(pairs.len());
    let mut quadrics: Vec<Vec<Rational>> = Vec::new();
    for &(b, d) in &pairs {
        let row: Vec<Rational> = pairs
            .iter()
            .map(|&(a, c)| {
                let (ia, ib, ic, id) = (indices[a], indices[b], indices[c], indices[d]);
                if a == c {
                    riem.get(ia, ib, ic, id).clone()
                } else {
                    riem.get(ia, ib, ic, id) + riem.get(ic, ib, ia, id)
                }
            })
            .collect();
        if reducer.add_dense_row(&row) {
            quadrics.push(row);
        }
    }
    if reducer.rank() == 0 {
        return Ok(BlockSolution::All { indices });
    }
    if reducer.rank() == pairs.len() {
        return Ok(BlockSolution::OnlyZero { indices });
    }
    if m > 3 {
        return Err(GeometryError::Domain(format!(
            "rank-one search in a curvature block of size {m} is not supported"
        )));
    }
    let directions = rank_one_search(m, &pairs, &quadrics)?;
    if directions.is_empty() {
        Ok(BlockSolution::OnlyZero { indices })
    } else {
        Ok(BlockSolution::Lines { indices, directions })
    }
}

/// Real projective solutions of the quadrics, searched chart by chart:
/// `X = (0,…,0,1,u,v)`.
fn rank_one_search(
    m: usize,
    pairs: &[(usize, usize)],
    quadrics: &[Vec<Rational>],
) -> Result<Vec<Direction>, GeometryError> {
    let mut out = Vec::new();
    for lead in 0..m {
        let free = m - lead - 1;
        let names: Vec<String> = (0..free).map(|i| format!("t{i}")).collect();
        let vars = Variables::new(&names);
        // coordinate polynomials of X on this chart
        let x: Vec<MultiPoly> = (0..m)
            .map(|i| match i.cmp(&lead) {
                std::cmp::Ordering::Less => MultiPoly::zero(&vars),
                std::cmp::Ordering::Equal => MultiPoly::one(&vars),
                std::cmp::Ordering::Greater => MultiPoly::var(&vars, i - lead - 1),
            })
            .collect();
        let eqs: Vec<MultiPoly> = quadrics
            .iter()
            .map(|row| {
                let mut acc = MultiPoly::zero(&vars);
                for (&(a, c), coef) in pairs.iter().zip(row) {
                    if !coef.is_zero() {
                        acc = &acc + &(&x[a] * &x[c]).scale(coef);
                    }
                }
                acc
            })
            .filter(|p| !p.is_zero())
            .collect();
        let prefix = |tail: &[Rational]| -> Vec<Rational> {
            let mut v = vec![Rational::zero(); lead];
            v.push(Rational::one());
            v.extend_from_slice(tail);
            v
        };
        match free {
            0 => {
                if eqs.is_empty() {
                    let ex = prefix(&[]);
                    out.push(Direction { approx: ex.iter().map(rational_to_f64).collect(), exact: Some(ex) });
                }
            }
            1 => {
                if eqs.is_empty() {
                    return Err(positive_dimensional());
                }
                let g = eqs.iter().skip(1).fold(eqs[0].clone(), |acc, e| gcd(&acc, e));
                for root in real_roots(&univariate(&g, 0)) {
                    let ex = root.exact.as_ref().map(|r| prefix(std::slice::from_ref(r)));
                    let mut approx = vec![0.0; lead];
                    approx.extend([1.0, root.approx]);
                    out.push(Direction { approx, exact: ex });
                }
            }
            _ => out.extend(two_variable_chart(&eqs, lead)?),
        }
    }
    Ok(out)
}

fn positive_dimensional() -> GeometryError {
    GeometryError::Domain("degenerate set has a positive-dimensional component".into())
}

fn two_variable_chart(eqs: &[MultiPoly], lead: usize) -> Result<Vec<Direction>, GeometryError> {
    if eqs.is_empty() {
        return Err(positive_dimensional());
    }
    let all_gcd = eqs.iter().skip(1).fold(eqs[0].clone(), |acc, e| gcd(&acc, e));
    if !all_gcd.is_constant() {
        return Err(positive_dimensional());
    }
    let f = &eqs[0];
    let mut partner = None;
    for attempt in 1..=8i64 {
        let mut g = MultiPoly::zero(f.vars());
        for (i, e) in eqs.iter().enumerate().skip(1) {
            let w = Rational::from_integer(BigInt::from(attempt).pow(i as u32) + BigInt::from(i as i64));
            g = &g + &e.scale(&w);
        }
        if !g.is_zero() && gcd(f, &g).is_constant() {
            partner = Some(g);
            break;
        }
    }
    let g = partner.ok_or_else(positive_dimensional)?;
    let us = real_roots(&univariate(&resultant(f, &g, 1), 0));
    let vs = real_roots(&univariate(&resultant(f, &g, 0), 1));
    let mut out = Vec::new();
    for u in &us {
        for v in &vs {
            let accept = match (&u.exact, &v.exact) {
                (Some(a), Some(b)) => {
                    let pt = [a.clone(), b.clone()];
                    eqs.iter().all(|e| e.eval_exact(&pt).is_zero())
                }
                _ => {
                    let pt = [u.approx, v.approx];
                    eqs.iter().all(|e| {
                        let scale: f64 = e.terms().map(|(_, c)| rational_to_f64(c).abs()).sum::<f64>().max(1.0);
                        e.eval_f64(&pt).abs() <= 1e-8 * scale * (1.0 + u.approx.abs() + v.approx.abs()).powi(2)
                    })
                }
            };
            if accept {
                let mut approx = vec![0.0; lead];
                approx.extend([1.0, u.approx, v.approx]);
                let exact = match (&u.exact, &v.exact) {
                    (Some(a), Some(b)) => {
                        let mut x = vec![Rational::zero(); lead];
                        x.extend([Rational::one(), a.clone(), b.clone()]);
                        Some(x)
                    }
                    _ => None,
                };
                out.push(Direction { approx, exact });
            }
        }
    }
    Ok(out)
}

/// Coefficients (ascending) of a polynomial involving only variable `var`.
fn univariate(p: &MultiPoly, var: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); p.degree_in(var) as usize + 1];
    for (m, c) in p.terms() {
        out[m.exponents()[var] as usize] += c;
    }
    out
}

struct RealRoot {
    approx: f64,
    exact: Option<Rational>,
}

fn trim(mut p: Vec<Rational>) -> Vec<Rational> {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn eval_upoly(p: &[Rational], x: &Rational) -> Rational {
    p.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
}

fn rem_upoly(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut r = trim(a.to_vec());
    let db = b.len() - 1;
    let lb = &b[db];
    while r.len() > db && !r.is_empty() {
        let shift = r.len() - 1 - db;
        let q = r.last().unwrap() / lb;
        for (i, c) in b.iter().enumerate() {
            r[shift + i] -= &q * c;
        }
        r.pop();
        r = trim(r);
    }
    r
}

fn gcd_upoly(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
    while !b.is_empty() {
        let r = rem_upoly(&a, &b);
        a = b;
        b = r;
    }
    a
}

fn div_upoly(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut r = trim(a.to_vec());
    let db = b.len() - 1;
    let mut q = vec![Rational::zero(); r.len().saturating_sub(db)];
    while r.len() > db {
        let shift = r.len() - 1 - db;
        let c = r.last().unwrap() / &b[db];
        for (i, bc) in b.iter().enumerate() {
            r[shift + i] -= &c * bc;
        }
        q[shift] = c;
        r.pop();
    }
    q
}

fn sign_changes(seq: &[Vec<Rational>], x: &Rational) -> usize {
    let signs: Vec<bool> =
        seq.iter().map(|p| eval_upoly(p, x)).filter(|v| !v.is_zero()).map(|v| v.is_positive()).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Isolated real roots of a nonzero univariate polynomial.
fn real_roots(p: &[Rational]) -> Vec<RealRoot> {
    let p = trim(p.to_vec());
    if p.len() <= 1 {
        return Vec::new();
    }
    let dp: Vec<Rational> =
        p.iter().enumerate().skip(1).map(|(i, c)| c * Rational::from_integer(BigInt::from(i))).collect();
    let sq = div_upoly(&p, &gcd_upoly(&p, &dp));
    if sq.len() <= 1 {
        return Vec::new();
    }
    let dsq: Vec<Rational> =
        sq.iter().enumerate().skip(1).map(|(i, c)| c * Rational::from_integer(BigInt::from(i))).collect();
    let mut sturm = vec![sq.clone(), dsq];
    loop {
        let k = sturm.len();
        let r = rem_upoly(&sturm[k - 2], &sturm[k - 1]);
        if r.is_empty() {
            break;
        }
        sturm.push(r.into_iter().map(|c| -c).collect());
    }
    let lead = sq.last().unwrap().abs();
    let bound =
        sq.iter().map(|c| c.abs() / &lead).fold(Rational::zero(), |a, b| if b > a { b } else { a }) + Rational::one();
    let count = |lo: &Rational, hi: &Rational| sign_changes(&sturm, lo) - sign_changes(&sturm, hi);
    let mut stack = vec![(-bound.clone(), bound)];
    let mut intervals = Vec::new();
    while let Some((lo, hi)) = stack.pop() {
        let c = count(&lo, &hi);
        if c == 0 {
            continue;
        }
        if c == 1 {
            intervals.push((lo, hi));
            continue;
        }
        let mid = (&lo + &hi) / Rational::from_integer(BigInt::from(2));
        stack.push((mid.clone(), hi));
        stack.push((lo, mid));
    }
    let tol = Rational::new(BigInt::one(), BigInt::from(1u64) << 64);
    let mut roots: Vec<RealRoot> = intervals
        .into_iter()
        .map(|(mut lo, mut hi)| {
            // root lies in (lo, hi]
            if eval_upoly(&sq, &hi).is_zero() {
                return RealRoot { approx: rational_to_f64(&hi), exact: Some(hi) };
            }
            while &hi - &lo > tol {
                let mid = (&lo + &hi) / Rational::from_integer(BigInt::from(2));
                let v = eval_upoly(&sq, &mid);
                if v.is_zero() {
                    return RealRoot { approx: rational_to_f64(&mid), exact: Some(mid) };
                }
                if count(&lo, &mid) == 1 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let mid = (&lo + &hi) / Rational::from_integer(BigInt::from(2));
            let simple = simplest_between(&lo, &hi);
            if eval_upoly(&sq, &simple).is_zero() {
                return RealRoot { approx: rational_to_f64(&simple), exact: Some(simple) };
            }
            RealRoot { approx: rational_to_f64(&mid), exact: None }
        })
        .collect();
    roots.sort_by(|a, b| a.approx.total_cmp(&b.approx));
    roots
}

/// Rational with the smallest denominator in `[lo, hi]` (continued fractions).
fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    let fl = lo.floor();
    if &fl == lo {
        return fl;
    }
    if &(&fl + Rational::one()) <= hi {
        return fl + Rational::one();
    }
    // both in (fl, fl + 1): recurse on the reciprocals of the fractional parts
    let a = (hi - &fl).recip();
    let b = (lo - &fl).recip();
    fl + simplest_between(&a, &b).recip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{rat, ratio};

    #[test]
    fn sturm_isolates_roots() {
        // (x − 1/2)(x + 3)(x² − 2)
        let a = vec![ratio(-1, 2), rat(1)];
        let b = vec![rat(3), rat(1)];
        let c = vec![rat(-2), rat(0), rat(1)];
        let mul = |x: &[Rational], y: &[Rational]| {
            let mut out = vec![Rational::zero(); x.len() + y.len() - 1];
            for (i, u) in x.iter().enumerate() {
                for (j, v) in y.iter().enumerate() {
                    out[i + j] += u * v;
                }
            }
            out
        };
        let p = mul(&mul(&a, &b), &c);
        let roots = real_roots(&p);
        let approx: Vec<f64> = roots.iter().map(|r| r.approx).collect();
        assert_eq!(roots.len(), 4);
        for (got, want) in approx.iter().zip([-3.0, -std::f64::consts::SQRT_2, 0.5, std::f64::consts::SQRT_2]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert_eq!(roots[0].exact, Some(rat(-3)));
        assert_eq!(roots[2].exact, Some(ratio(1, 2)));
        assert!(roots[1].exact.is_none());
        // x² + 1 has none
        assert!(real_roots(&[rat(1), rat(0), rat(1)]).is_empty());
    }
}
