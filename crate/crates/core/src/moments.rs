//! Exact moments of polynomials in independent Gaussian variables.
//!
//! Every nullifier handled by this crate is built in the Heisenberg picture
//! as a polynomial in the input quadratures of Gaussian states and in the
//! quadratures of fresh environment modes. All of those inputs have Gaussian
//! Wigner functions with independent `q` and `p`, so each quadrature is
//! modelled here as an independent classical Gaussian variable.
//!
//! That substitution is exact for the expressions the scenario builders
//! produce. Each of them is linear in every momentum variable, and the only
//! other factors are positions of other modes or independent ancilla
//! quadratures. For an operator of the form `p + f(q)` the square
//! `p^2 + p f(q) + f(q) p + f(q)^2` has Weyl symbol `p^2 + 2 p f(q) + f(q)^2`,
//! so symmetric-ordered operator moments coincide with phase-space moments of
//! the Wigner function. The engine itself accepts any polynomial; results for
//! expressions that are nonlinear in a momentum conjugate to a position in the
//! same term have no operator meaning.
//!
//! Moments are computed with [`gaussian_moment`] and factorized over
//! independent variables, `E[prod x_j^m_j] = prod E[x_j^m_j]`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identity of a Gaussian variable inside an expression environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub u32);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// An independent Gaussian phase-space variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianVar {
    id: VarId,
    mean: f64,
    variance: f64,
}

impl GaussianVar {
    pub fn new(id: VarId, mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::invalid("mean", format!("{mean} is not finite")));
        }
        if !variance.is_finite() || variance < 0.0 {
            return Err(Error::NegativeVariance(variance));
        }
        Ok(Self { id, mean, variance })
    }

    pub fn id(&self) -> VarId {
        self.id
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// Hands out fresh variable ids so that builders never reuse one.
#[derive(Debug, Default, Clone)]
pub struct VarAllocator {
    next: u32,
}

impl VarAllocator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self, mean: f64, variance: f64) -> Result<GaussianVar> {
        let id = VarId(self.next);
        self.next += 1;
        GaussianVar::new(id, mean, variance)
    }
}

/// Product of variable powers, sorted by id, powers at least one.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(VarId, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(id: VarId) -> Self {
        Monomial(vec![(id, 1)])
    }

    /// Builds a monomial from a multiset of ids (repeats raise the power).
    pub fn from_ids(ids: &[VarId]) -> Self {
        let mut powers: BTreeMap<VarId, u32> = BTreeMap::new();
        for id in ids {
            *powers.entry(*id).or_default() += 1;
        }
        Monomial(powers.into_iter().collect())
    }

    pub fn factors(&self) -> &[(VarId, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, p)| p).sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.is_empty()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (n, (id, p)) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, "*")?;
            }
            if *p == 1 {
                write!(f, "{id}")?;
            } else {
                write!(f, "{id}^{p}")?;
            }
        }
        Ok(())
    }
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// A polynomial over independent Gaussian variables, kept in canonical form:
/// monomials sorted, duplicates merged, zero coefficients dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadExpr {
    terms: Vec<(Monomial, f64)>,
    env: BTreeMap<VarId, GaussianVar>,
}

impl QuadExpr {
    pub fn zero() -> Self {
        Self {
            terms: Vec::new(),
            env: BTreeMap::new(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::canonical(vec![(Monomial::one(), c)], BTreeMap::new())
    }

    pub fn var(v: &GaussianVar) -> Self {
        let mut env = BTreeMap::new();
        env.insert(v.id, *v);
        Self::canonical(vec![(Monomial::var(v.id), 1.0)], env)
    }

    /// Assembles an expression from raw terms, checking that every id used
    /// has an entry in `vars`.
    pub fn from_terms(terms: Vec<(Monomial, f64)>, vars: &[GaussianVar]) -> Result<Self> {
        let mut env = BTreeMap::new();
        for v in vars {
            if let Some(prev) = env.insert(v.id, *v) {
                if prev != *v {
                    return Err(Error::EnvironmentMismatch(v.id.0));
                }
            }
        }
        for (m, _) in &terms {
            for (id, _) in m.factors() {
                if !env.contains_key(id) {
                    return Err(Error::invalid(
                        "terms",
                        format!("variable {id} has no environment entry"),
                    ));
                }
            }
        }
        Ok(Self::canonical(terms, env))
    }

    fn canonical(terms: Vec<(Monomial, f64)>, env: BTreeMap<VarId, GaussianVar>) -> Self {
        let mut grouped: BTreeMap<Monomial, CompensatedSum> = BTreeMap::new();
        for (m, c) in terms {
            grouped.entry(m).or_default().add(c);
        }
        let terms = grouped
            .into_iter()
            .map(|(m, s)| (m, s.value()))
            .filter(|(_, c)| *c != 0.0)
            .collect();
        Self { terms, env }
    }

    pub fn terms(&self) -> &[(Monomial, f64)] {
        &self.terms
    }

    pub fn env(&self) -> &BTreeMap<VarId, GaussianVar> {
        &self.env
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(m, _)| m.is_constant())
    }

    /// Copy of this expression with one variable's parameters replaced.
    pub fn with_var(&self, v: GaussianVar) -> Self {
        let mut out = self.clone();
        out.env.insert(v.id, v);
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::canonical(
            self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
            self.env.clone(),
        )
    }

    pub fn try_add(&self, other: &QuadExpr) -> Result<Self> {
        let env = merge_env(&self.env, &other.env)?;
        let terms = self.terms.iter().chain(other.terms.iter()).cloned().collect();
        Ok(Self::canonical(terms, env))
    }

    pub fn try_mul(&self, other: &QuadExpr) -> Result<Self> {
        let env = merge_env(&self.env, &other.env)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                terms.push((ma.mul(mb), ca * cb));
            }
        }
        Ok(Self::canonical(terms, env))
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = QuadExpr::constant(1.0);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Product of a list of expressions; the empty product is one.
    pub fn product<'a>(factors: impl IntoIterator<Item = &'a QuadExpr>) -> Self {
        factors
            .into_iter()
            .fold(QuadExpr::constant(1.0), |acc, f| &acc * f)
    }
}

impl fmt::Display for QuadExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (m, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*{m}")?;
        }
        Ok(())
    }
}

fn merge_env(
    a: &BTreeMap<VarId, GaussianVar>,
    b: &BTreeMap<VarId, GaussianVar>,
) -> Result<BTreeMap<VarId, GaussianVar>> {
    let mut out = a.clone();
    for (id, v) in b {
        match out.get(id) {
            Some(prev) if prev != v => return Err(Error::EnvironmentMismatch(id.0)),
            Some(_) => {}
            None => {
                out.insert(*id, *v);
            }
        }
    }
    Ok(out)
}

// Operator sugar for builders that allocate every variable from one
// `VarAllocator`. Mixing environments with clashing ids panics; use
// `try_add`/`try_mul` when that can happen.
impl Add for &QuadExpr {
    type Output = QuadExpr;
    fn add(self, rhs: &QuadExpr) -> QuadExpr {
        self.try_add(rhs).expect("conflicting expression environments")
    }
}

impl Add for QuadExpr {
    type Output = QuadExpr;
    fn add(self, rhs: QuadExpr) -> QuadExpr {
        &self + &rhs
    }
}

impl Sub for &QuadExpr {
    type Output = QuadExpr;
    fn sub(self, rhs: &QuadExpr) -> QuadExpr {
        self + &rhs.scale(-1.0)
    }
}

impl Sub for QuadExpr {
    type Output = QuadExpr;
    fn sub(self, rhs: QuadExpr) -> QuadExpr {
        &self - &rhs
    }
}

impl Mul for &QuadExpr {
    type Output = QuadExpr;
    fn mul(self, rhs: &QuadExpr) -> QuadExpr {
        self.try_mul(rhs).expect("conflicting expression environments")
    }
}

impl Mul for QuadExpr {
    type Output = QuadExpr;
    fn mul(self, rhs: QuadExpr) -> QuadExpr {
        &self * &rhs
    }
}

impl Mul<f64> for &QuadExpr {
    type Output = QuadExpr;
    fn mul(self, rhs: f64) -> QuadExpr {
        self.scale(rhs)
    }
}

impl Mul<f64> for QuadExpr {
    type Output = QuadExpr;
    fn mul(self, rhs: f64) -> QuadExpr {
        self.scale(rhs)
    }
}

impl Neg for QuadExpr {
    type Output = QuadExpr;
    fn neg(self) -> QuadExpr {
        self.scale(-1.0)
    }
}

fn double_factorial_odd(n: u32) -> f64 {
    // (2m-1)!! for n = 2m - 1; (-1)!! = 1
    let mut acc = 1.0;
    let mut k = n as i64;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * f64::from(n - i) / f64::from(i + 1);
    }
    acc.round()
}

/// Raw moment `E[x^order]` of `x ~ Normal(mean, variance)`.
///
/// Expands `(mean + z)^order` over the central moments
/// `E[z^(2m)] = (2m-1)!! variance^m`.
pub fn gaussian_moment(order: u32, mean: f64, variance: f64) -> Result<f64> {
    if !variance.is_finite() || variance < 0.0 {
        return Err(Error::NegativeVariance(variance));
    }
    let mut acc = CompensatedSum::default();
    for j in (0..=order).step_by(2) {
        let central = double_factorial_odd(j.saturating_sub(1)) * variance.powi((j / 2) as i32);
        acc.add(binomial(order, j) * mean.powi((order - j) as i32) * central);
    }
    Ok(acc.value())
}

/// Exact expectation of `expr`.
pub fn expr_mean(expr: &QuadExpr) -> Result<f64> {
    let mut max_power: BTreeMap<VarId, u32> = BTreeMap::new();
    for (m, _) in expr.terms() {
        for (id, p) in m.factors() {
            let e = max_power.entry(*id).or_default();
            *e = (*e).max(*p);
        }
    }
    let mut tables: BTreeMap<VarId, Vec<f64>> = BTreeMap::new();
    for (id, top) in max_power {
        let v = expr
            .env
            .get(&id)
            .ok_or_else(|| Error::invalid("expr", format!("variable {id} missing from environment")))?;
        let table = (0..=top)
            .map(|n| gaussian_moment(n, v.mean, v.variance))
            .collect::<Result<Vec<_>>>()?;
        tables.insert(id, table);
    }
    Ok(compensated_sum(expr.terms().iter().map(|(m, c)| {
        m.factors()
            .iter()
            .fold(*c, |acc, (id, p)| acc * tables[id][*p as usize])
    })))
}

/// Exact variance `E[expr^2] - E[expr]^2`.
pub fn expr_variance(expr: &QuadExpr) -> Result<f64> {
    expr_covariance(expr, expr)
}

/// Exact covariance `E[ab] - E[a]E[b]`. Fails if a variable id carries
/// different parameters in the two expressions.
pub fn expr_covariance(a: &QuadExpr, b: &QuadExpr) -> Result<f64> {
    let product = a.try_mul(b)?;
    let mut acc = CompensatedSum::default();
    acc.add(expr_mean(&product)?);
    acc.add(-(expr_mean(a)? * expr_mean(b)?));
    Ok(acc.value())
}
