use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use super::rat::{fmt_rat, parse_rat, to_f64, Rat};
use super::vartable::{VarId, VarTable};
use crate::error::{Error, Result};

/// Power product stored sparsely as `(variable, exponent)` pairs sorted by
/// variable, with no zero exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(VarId, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: VarId) -> Self {
        Monomial(vec![(v, 1)])
    }

    pub fn pow(v: VarId, e: u32) -> Self {
        if e == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(v, e)])
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, u32)>) -> Self {
        let mut m = Monomial::one();
        for (v, e) in pairs {
            m = m.mul(&Monomial::pow(v, e));
        }
        m
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, v: VarId) -> u32 {
        self.0
            .binary_search_by_key(&v, |&(w, _)| w)
            .map(|k| self.0[k].1)
            .unwrap_or(0)
    }

    pub fn pairs(&self) -> &[(VarId, u32)] {
        &self.0
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0.iter().map(|&(v, _)| v)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
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

    /// Lowers the exponent of `v` by one; `None` if `v` is absent.
    fn reduce_var(&self, v: VarId) -> Option<(u32, Monomial)> {
        let k = self.0.binary_search_by_key(&v, |&(w, _)| w).ok()?;
        let e = self.0[k].1;
        let mut out = self.0.clone();
        if e == 1 {
            out.remove(k);
        } else {
            out[k].1 -= 1;
        }
        Some((e, Monomial(out)))
    }

    /// Splits into the factor over variables satisfying `pred` and the rest.
    pub fn split(&self, pred: impl Fn(VarId) -> bool) -> (Monomial, Monomial) {
        let (inside, outside): (Vec<_>, Vec<_>) = self.0.iter().partition(|&&(v, _)| pred(v));
        (Monomial(inside), Monomial(outside))
    }

    pub fn render(&self, table: &VarTable) -> String {
        if self.is_one() {
            return "1".to_string();
        }
        self.0
            .iter()
            .map(|&(v, e)| {
                if e == 1 {
                    table.name(v).to_string()
                } else {
                    format!("{}^{}", table.name(v), e)
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

/// Graded lexicographic order with variable 0 most significant.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        let (a, b) = (&self.0, &other.0);
        for k in 0..a.len().min(b.len()) {
            let ((va, ea), (vb, eb)) = (a[k], b[k]);
            if va != vb {
                // the side holding the earlier variable has the larger exponent there
                return if va < vb {
                    Ordering::Greater
                } else {
                    Ordering::Less
                };
            }
            if ea != eb {
                return ea.cmp(&eb);
            }
        }
        a.len().cmp(&b.len())
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse multivariate polynomial with exact rational coefficients over a
/// shared variable table. No zero coefficient is ever stored.
#[derive(Clone)]
pub struct MPoly {
    table: Arc<VarTable>,
    terms: BTreeMap<Monomial, Rat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

pub fn mpoly_arith(a: &MPoly, b: &MPoly, op: ArithOp) -> Result<MPoly> {
    a.check_table(b)?;
    Ok(match op {
        ArithOp::Add => a.add_impl(b),
        ArithOp::Sub => a.add_impl(&-b),
        ArithOp::Mul => a.mul_impl(b),
    })
}

impl MPoly {
    pub fn zero(table: &Arc<VarTable>) -> Self {
        MPoly {
            table: Arc::clone(table),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(table: &Arc<VarTable>, c: Rat) -> Self {
        Self::term(table, c, Monomial::one())
    }

    pub fn one(table: &Arc<VarTable>) -> Self {
        Self::constant(table, Rat::one())
    }

    pub fn var(table: &Arc<VarTable>, v: VarId) -> Self {
        Self::term(table, Rat::one(), Monomial::var(v))
    }

    pub fn term(table: &Arc<VarTable>, c: Rat, m: Monomial) -> Self {
        let mut p = Self::zero(table);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn from_terms(
        table: &Arc<VarTable>,
        terms: impl IntoIterator<Item = (Monomial, Rat)>,
    ) -> Self {
        let mut p = Self::zero(table);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    /// Parses expressions such as `"x1^2*u - 3/2*x2 + 1"` against the table's names.
    pub fn parse(table: &Arc<VarTable>, src: &str) -> Result<Self> {
        let perr = |msg: &str| Error::Parse(format!("{msg} in {src:?}"));
        let compact: String = src.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(perr("empty expression"));
        }
        let mut out = Self::zero(table);
        let mut chunks: Vec<(bool, String)> = Vec::new();
        let mut cur = String::new();
        let mut neg = false;
        for (k, ch) in compact.char_indices() {
            let prev = compact[..k].chars().last();
            let is_sign =
                (ch == '+' || ch == '-') && !matches!(prev, Some('e') | Some('E') | Some('^'));
            if is_sign && k > 0 && !cur.is_empty() {
                chunks.push((neg, std::mem::take(&mut cur)));
                neg = ch == '-';
            } else if is_sign && cur.is_empty() {
                neg ^= ch == '-';
            } else {
                cur.push(ch);
            }
        }
        if cur.is_empty() {
            return Err(perr("dangling sign"));
        }
        chunks.push((neg, cur));
        for (neg, chunk) in chunks {
            let mut coeff = Rat::one();
            let mut mono = Monomial::one();
            for factor in chunk.split('*') {
                if factor.is_empty() {
                    return Err(perr("empty factor"));
                }
                if factor.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
                    coeff *= parse_rat(factor)?;
                    continue;
                }
                let (name, exp) = match factor.split_once('^') {
                    Some((n, e)) => (n, e.parse::<u32>().map_err(|_| perr("bad exponent"))?),
                    None => (factor, 1),
                };
                let v = table.by_name(name)?;
                mono = mono.mul(&Monomial::pow(v, exp));
            }
            if neg {
                coeff = -coeff;
            }
            out.add_term(mono, coeff);
        }
        Ok(out)
    }

    pub fn table(&self) -> &Arc<VarTable> {
        &self.table
    }

    pub fn same_table(&self, other: &MPoly) -> bool {
        Arc::ptr_eq(&self.table, &other.table) || *self.table == *other.table
    }

    fn check_table(&self, other: &MPoly) -> Result<()> {
        if self.same_table(other) {
            Ok(())
        } else {
            Err(Error::IncompatibleTables)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in descending monomial order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter().rev()
    }

    pub fn coeff(&self, m: &Monomial) -> Rat {
        self.terms.get(m).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Degree in the variables selected by `pred`.
    pub fn degree_in(&self, pred: impl Fn(VarId) -> bool) -> u32 {
        self.terms
            .keys()
            .map(|m| {
                m.pairs()
                    .iter()
                    .filter(|(v, _)| pred(*v))
                    .map(|(_, e)| e)
                    .sum()
            })
            .max()
            .unwrap_or(0)
    }

    pub fn variables(&self) -> BTreeSet<VarId> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    pub fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn add_impl(&self, other: &MPoly) -> MPoly {
        let (mut acc, src) = if self.len() >= other.len() {
            (self.clone(), other)
        } else {
            (other.clone(), self)
        };
        for (m, c) in &src.terms {
            acc.add_term(m.clone(), c.clone());
        }
        acc
    }

    fn mul_impl(&self, other: &MPoly) -> MPoly {
        let mut out = MPoly::zero(&self.table);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> MPoly {
        if c.is_zero() {
            return MPoly::zero(&self.table);
        }
        MPoly {
            table: Arc::clone(&self.table),
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> MPoly {
        MPoly {
            table: Arc::clone(&self.table),
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.mul(m), c.clone()))
                .collect(),
        }
    }

    pub fn mul_var(&self, v: VarId) -> MPoly {
        self.mul_monomial(&Monomial::var(v))
    }

    /// Formal partial derivative with respect to `v`.
    pub fn diff(&self, v: VarId) -> Result<MPoly> {
        if !self.table.contains(v) {
            return Err(Error::UnknownVariable(format!("#{}", v.0)));
        }
        let mut out = MPoly::zero(&self.table);
        for (m, c) in &self.terms {
            if let Some((e, rest)) = m.reduce_var(v) {
                out.add_term(rest, c * Rat::from_integer(e.into()));
            }
        }
        Ok(out)
    }

    /// Groups terms by their factor over the `over` variables. Each value is
    /// the cofactor polynomial in the remaining variables; summing
    /// `key * value` reconstructs `self`.
    pub fn coefficient_split(&self, over: &[VarId]) -> BTreeMap<Monomial, MPoly> {
        let set: BTreeSet<VarId> = over.iter().copied().collect();
        let mut out: BTreeMap<Monomial, MPoly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (inside, outside) = m.split(|v| set.contains(&v));
            out.entry(inside)
                .or_insert_with(|| MPoly::zero(&self.table))
                .add_term(outside, c.clone());
        }
        out
    }

    /// Replaces the listed variables by rational values.
    pub fn substitute(&self, values: &BTreeMap<VarId, Rat>) -> MPoly {
        let mut out = MPoly::zero(&self.table);
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut rest = Vec::new();
            for &(v, e) in m.pairs() {
                match values.get(&v) {
                    Some(val) => coeff *= num_traits::pow(val.clone(), e as usize),
                    None => rest.push((v, e)),
                }
            }
            out.add_term(Monomial(rest), coeff);
        }
        out
    }

    /// Re-expresses `self` over another table, matching variables by name.
    pub fn rebase(&self, table: &Arc<VarTable>) -> Result<MPoly> {
        if Arc::ptr_eq(&self.table, table) {
            return Ok(self.clone());
        }
        let mut out = MPoly::zero(table);
        for (m, c) in &self.terms {
            let mut pairs = Vec::with_capacity(m.pairs().len());
            for &(v, e) in m.pairs() {
                pairs.push((table.by_name(self.table.name(v))?, e));
            }
            out.add_term(Monomial::from_pairs(pairs), c.clone());
        }
        Ok(out)
    }

    /// Exact evaluation at a rational point given for every variable that occurs.
    pub fn eval_rat(&self, value: impl Fn(VarId) -> Rat) -> Rat {
        self.terms.iter().fold(Rat::zero(), |acc, (m, c)| {
            let t = m.pairs().iter().fold(c.clone(), |p, &(v, e)| {
                p * num_traits::pow(value(v), e as usize)
            });
            acc + t
        })
    }

    /// Floating-point evaluation; `values` is indexed by variable id.
    pub fn eval_f64(&self, values: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                m.pairs()
                    .iter()
                    .fold(to_f64(c), |p, &(v, e)| p * values[v.index()].powi(e as i32))
            })
            .sum()
    }
}

impl PartialEq for MPoly {
    fn eq(&self, other: &Self) -> bool {
        self.same_table(other) && self.terms == other.terms
    }
}

impl fmt::Debug for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MPoly({self})")
    }
}

impl fmt::Display for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            if m.is_one() {
                write!(f, "{}", fmt_rat(&mag))?;
            } else if mag.is_one() {
                write!(f, "{}", m.render(&self.table))?;
            } else {
                write!(f, "{}*{}", fmt_rat(&mag), m.render(&self.table))?;
            }
        }
        Ok(())
    }
}

// Operator sugar for polynomials known to share a table. Panics otherwise;
// use `mpoly_arith` when the tables come from untrusted input.
impl Add for &MPoly {
    type Output = MPoly;
    fn add(self, rhs: &MPoly) -> MPoly {
        mpoly_arith(self, rhs, ArithOp::Add).expect("incompatible variable tables")
    }
}

impl Sub for &MPoly {
    type Output = MPoly;
    fn sub(self, rhs: &MPoly) -> MPoly {
        mpoly_arith(self, rhs, ArithOp::Sub).expect("incompatible variable tables")
    }
}

impl Mul for &MPoly {
    type Output = MPoly;
    fn mul(self, rhs: &MPoly) -> MPoly {
        mpoly_arith(self, rhs, ArithOp::Mul).expect("incompatible variable tables")
    }
}

impl Neg for &MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        MPoly {
            table: Arc::clone(&self.table),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Add for MPoly {
    type Output = MPoly;
    fn add(self, rhs: MPoly) -> MPoly {
        &self + &rhs
    }
}

impl Sub for MPoly {
    type Output = MPoly;
    fn sub(self, rhs: MPoly) -> MPoly {
        &self - &rhs
    }
}

impl Mul for MPoly {
    type Output = MPoly;
    fn mul(self, rhs: MPoly) -> MPoly {
        &self * &rhs
    }
}

impl Neg for MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat::{int, rat};
    use crate::exact::vartable::VarTable;

    fn table(n: usize) -> Arc<VarTable> {
        Arc::new(VarTable::jet_space(n, 2).unwrap())
    }

    fn p(t: &Arc<VarTable>, s: &str) -> MPoly {
        MPoly::parse(t, s).unwrap()
    }

    #[test]
    fn difference_of_squares() {
        let t = table(1);
        let lhs = &p(&t, "x1 + u") * &p(&t, "x1 - u");
        assert_eq!(lhs, p(&t, "x1^2 - u^2"));
    }

    #[test]
    fn annihilator() {
        let t = table(2);
        let a = p(&t, "x1^3*u - 7/3*x2 + 5");
        assert!((&a * &MPoly::zero(&t)).is_zero());
    }

    #[test]
    fn binomial_expansion() {
        let t = table(2);
        let w = p(&t, "1 + x1^2 + x2^2");
        assert_eq!(
            &w * &w,
            p(&t, "1 + 2*x1^2 + 2*x2^2 + x1^4 + 2*x1^2*x2^2 + x2^4")
        );
    }

    #[test]
    fn mismatched_tables_rejected() {
        let a = p(&table(1), "x1");
        let b = p(&table(2), "x1");
        assert_eq!(
            mpoly_arith(&a, &b, ArithOp::Add).unwrap_err(),
            Error::IncompatibleTables
        );
    }

    #[test]
    fn derivatives() {
        let t = table(1);
        let f = p(&t, "x1^2*u");
        assert_eq!(f.diff(t.x(0)).unwrap(), p(&t, "2*x1*u"));
        assert_eq!(f.diff(t.u()).unwrap(), p(&t, "x1^2"));
        assert!(p(&t, "17/3").diff(t.x(0)).unwrap().is_zero());
        assert!(f.diff(VarId(9999)).is_err());
    }

    #[test]
    fn splits() {
        let t = table(2);
        let f = p(&t, "x1*u_1 + x2*u_1 + u_2");
        let s = f.coefficient_split(&[t.du(0), t.du(1)]);
        assert_eq!(s.len(), 2);
        assert_eq!(s[&Monomial::var(t.du(0))], p(&t, "x1 + x2"));
        assert_eq!(s[&Monomial::var(t.du(1))], p(&t, "1"));
        assert!(MPoly::zero(&t).coefficient_split(&[t.u()]).is_empty());

        let g = p(&t, "c0*x1*u + c1*u");
        let s = g.coefficient_split(&[t.u()]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[&Monomial::var(t.u())], p(&t, "c0*x1 + c1"));
    }

    #[test]
    fn grlex_order() {
        let t = table(2);
        let (x1, x2) = (t.x(0), t.x(1));
        let a = Monomial::pow(x1, 2);
        let b = Monomial::from_pairs([(x1, 1), (x2, 1)]);
        let c = Monomial::pow(x2, 2);
        let d = Monomial::pow(x1, 1);
        assert!(a > b && b > c && c > d && d > Monomial::one());
        assert_eq!(
            p(&t, "x2^2 + x1*x2 + x1^2").to_string(),
            "x1^2 + x1*x2 + x2^2"
        );
    }

    #[test]
    fn display_and_parse_agree() {
        let t = table(2);
        let f = p(&t, "-1/2*x1^2*u + 3*x2 - 1");
        assert_eq!(f.to_string(), "-1/2*x1^2*u + 3*x2 - 1");
        assert_eq!(p(&t, &f.to_string()), f);
    }

    #[test]
    fn substitution_and_eval() {
        let t = table(1);
        let f = p(&t, "c0*x1 + c1*u + c0*c1");
        let mut vals = BTreeMap::new();
        vals.insert(t.unknown(0), int(2));
        vals.insert(t.unknown(1), rat(-1, 2));
        assert_eq!(f.substitute(&vals), p(&t, "2*x1 - 1/2*u - 1"));
        let v = f.eval_rat(|v| {
            if v == t.x(0) {
                int(1)
            } else if v == t.u() {
                int(4)
            } else {
                vals[&v].clone()
            }
        });
        assert_eq!(v, int(2 - 2 - 1));
    }
}
