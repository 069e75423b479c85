//! Second prolongation of point vector fields on (x, u) and the determining
//! system of `det D^2u = (1+|x|^2)^{-(p+n+1)/2} u^{p-1}`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exact::{to_f64, MPoly, Monomial, Rat, RatMatrix, VarId, VarRole, VarTable};
use crate::geometry::{plane_rhs, weight, Jet2};

/// Candidate generator `xi^i d/dx^i + phi d/du`. Coefficients are
/// polynomials in `x` and `u`, possibly linear in unknown coefficient symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldAnsatz {
    n: usize,
    table: Arc<VarTable>,
    xi: Vec<MPoly>,
    phi: MPoly,
}

/// Which unknown multiplies which monomial. Slot `k` belongs to unknown `c{k}`;
/// component `i < n` is `xi^{i+1}` and component `n` is `phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzLayout {
    n: usize,
    degree: usize,
    slots: Vec<(usize, Monomial)>,
}

/// Monomials in `x1..xn, u` of total degree at most `degree`, ascending by degree.
fn point_monomials(table: &VarTable, degree: usize) -> Vec<Monomial> {
    let n = table.n();
    let vars: Vec<VarId> = (0..n).map(|i| table.x(i)).chain([table.u()]).collect();
    let mut out = vec![Monomial::one()];
    let mut frontier = vec![(Monomial::one(), 0usize)];
    for _ in 0..degree {
        let mut next = Vec::new();
        for (m, start) in &frontier {
            for (k, &v) in vars.iter().enumerate().skip(*start) {
                let mm = m.mul(&Monomial::var(v));
                out.push(mm.clone());
                next.push((mm, k));
            }
        }
        frontier = next;
    }
    out.sort_by(|a, b| a.degree().cmp(&b.degree()).then_with(|| b.cmp(a)));
    out
}

impl AnsatzLayout {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slot(&self, k: usize) -> (usize, &Monomial) {
        (self.slots[k].0, &self.slots[k].1)
    }

    /// Builds the concrete field `sum_k coeffs[k] * slot_k` over `table`.
    pub fn instantiate(&self, table: &Arc<VarTable>, coeffs: &[Rat]) -> Result<VectorFieldAnsatz> {
        if coeffs.len() != self.slots.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} slots",
                coeffs.len(),
                self.slots.len()
            )));
        }
        let mut comps = vec![MPoly::zero(table); self.n + 1];
        for ((comp, m), c) in self.slots.iter().zip(coeffs) {
            comps[*comp].add_term(m.clone(), c.clone());
        }
        let phi = comps.pop().expect("phi component");
        VectorFieldAnsatz::new(table, comps, phi)
    }

    /// Coordinates of a concrete field in this layout, or `None` when the
    /// field has a monomial outside the ansatz.
    pub fn coordinates(&self, v: &VectorFieldAnsatz) -> Option<Vec<Rat>> {
        if v.n != self.n {
            return None;
        }
        let mut index: BTreeMap<(usize, Vec<(String, u32)>), usize> = BTreeMap::new();
        let key = |t: &VarTable, m: &Monomial| -> Vec<(String, u32)> {
            m.pairs()
                .iter()
                .map(|&(v, e)| (t.name(v).to_string(), e))
                .collect()
        };
        let names = VarTable::jet_space(self.n, 0).ok()?;
        for (k, (comp, m)) in self.slots.iter().enumerate() {
            index.insert((*comp, key(&names, m)), k);
        }
        let mut out = vec![Rat::zero(); self.slots.len()];
        for (comp, poly) in v.components().enumerate() {
            for (m, c) in poly.terms() {
                let k = index.get(&(comp, key(v.table(), m)))?;
                out[*k] = c.clone();
            }
        }
        Some(out)
    }
}

impl VectorFieldAnsatz {
    /// Validates that every coefficient depends only on `x`, `u` and unknowns.
    pub fn new(table: &Arc<VarTable>, xi: Vec<MPoly>, phi: MPoly) -> Result<Self> {
        let n = table.n();
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if xi.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} xi components for n = {n}",
                xi.len()
            )));
        }
        for c in xi.iter().chain([&phi]) {
            if !Arc::ptr_eq(c.table(), table) && **c.table() != **table {
                return Err(Error::IncompatibleTables);
            }
            for v in c.variables() {
                match table.role(v) {
                    VarRole::Base(_) | VarRole::Dependent | VarRole::Unknown(_) => {}
                    _ => {
                        return Err(Error::Parse(format!(
                            "coefficient depends on jet variable {}",
                            table.name(v)
                        )))
                    }
                }
            }
        }
        Ok(VectorFieldAnsatz {
            n,
            table: Arc::clone(table),
            xi,
            phi,
        })
    }

    /// Parses component strings over a fresh table without unknowns.
    pub fn parse(n: usize, xi: &[&str], phi: &str) -> Result<Self> {
        let table = Arc::new(VarTable::jet_space(n, 0)?);
        Self::parse_in(&table, xi, phi)
    }

    pub fn parse_in(table: &Arc<VarTable>, xi: &[&str], phi: &str) -> Result<Self> {
        let xi = xi
            .iter()
            .map(|s| MPoly::parse(table, s))
            .collect::<Result<Vec<_>>>()?;
        let phi = MPoly::parse(table, phi)?;
        Self::new(table, xi, phi)
    }

    pub fn zero(table: &Arc<VarTable>) -> Self {
        let n = table.n();
        VectorFieldAnsatz {
            n,
            table: Arc::clone(table),
            xi: vec![MPoly::zero(table); n],
            phi: MPoly::zero(table),
        }
    }

    /// Generic field whose every coefficient is an unknown, with total degree
    /// at most `degree` in `(x, u)`.
    pub fn generic(n: usize, degree: usize) -> Result<(Self, AnsatzLayout)> {
        let names = VarTable::jet_space(n, 0)?;
        let monos = point_monomials(&names, degree);
        let count = monos.len() * (n + 1);
        let table = Arc::new(VarTable::jet_space(n, count)?);
        let mut slots = Vec::with_capacity(count);
        let mut comps = vec![MPoly::zero(&table); n + 1];
        for (comp, poly) in comps.iter_mut().enumerate() {
            for m in &monos {
                let k = slots.len();
                poly.add_term(m.mul(&Monomial::var(table.unknown(k))), Rat::one());
                slots.push((comp, m.clone()));
            }
        }
        let phi = comps.pop().expect("phi component");
        let layout = AnsatzLayout { n, degree, slots };
        Ok((Self::new(&table, comps, phi)?, layout))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &Arc<VarTable> {
        &self.table
    }

    pub fn xi(&self) -> &[MPoly] {
        &self.xi
    }

    pub fn phi(&self) -> &MPoly {
        &self.phi
    }

    /// `xi^1, ..., xi^n, phi`.
    pub fn components(&self) -> impl Iterator<Item = &MPoly> {
        self.xi.iter().chain([&self.phi])
    }

    pub fn is_zero(&self) -> bool {
        self.components().all(MPoly::is_zero)
    }

    pub fn has_unknowns(&self) -> bool {
        self.components()
            .any(|c| c.variables().into_iter().any(|v| self.table.is_unknown(v)))
    }

    pub fn rebase(&self, table: &Arc<VarTable>) -> Result<Self> {
        let xi = self
            .xi
            .iter()
            .map(|c| c.rebase(table))
            .collect::<Result<Vec<_>>>()?;
        Self::new(table, xi, self.phi.rebase(table)?)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&MPoly, &MPoly) -> MPoly) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "n = {} vs n = {}",
                self.n, other.n
            )));
        }
        if !self.phi.same_table(&other.phi) {
            return Err(Error::IncompatibleTables);
        }
        let xi = self
            .xi
            .iter()
            .zip(&other.xi)
            .map(|(a, b)| f(a, b))
            .collect();
        Self::new(&self.table, xi, f(&self.phi, &other.phi))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, c: &Rat) -> Self {
        VectorFieldAnsatz {
            n: self.n,
            table: Arc::clone(&self.table),
            xi: self.xi.iter().map(|p| p.scale(c)).collect(),
            phi: self.phi.scale(c),
        }
    }

    /// The derivation `xi^i d/dx^i + phi d/du` applied to `f`.
    pub fn apply_to(&self, f: &MPoly) -> Result<MPoly> {
        let t = &self.table;
        let mut out = &self.phi * &f.diff(t.u())?;
        for (i, xi) in self.xi.iter().enumerate() {
            out = &out + &(xi * &f.diff(t.x(i))?);
        }
        Ok(out)
    }

    /// Lie bracket `[self, other]` of first-order vector fields.
    pub fn bracket(&self, other: &Self) -> Result<Self> {
        if !self.phi.same_table(&other.phi) {
            return Err(Error::IncompatibleTables);
        }
        let mut comps = Vec::with_capacity(self.n + 1);
        for (a, b) in self.components().zip(other.components()) {
            comps.push(&self.apply_to(b)? - &other.apply_to(a)?);
        }
        let phi = comps.pop().expect("phi component");
        Self::new(&self.table, comps, phi)
    }

    /// Human-readable form such as `x1*x2 d/dx2 + d/dx1 + x1*u d/du`.
    pub fn render(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        let labels = (0..self.n)
            .map(|i| format!("d/dx{}", i + 1))
            .chain(["d/du".to_string()]);
        for (c, label) in self.components().zip(labels) {
            if c.is_zero() {
                continue;
            }
            let body = c.to_string();
            parts.push(if c.len() > 1 {
                format!("({body}) {label}")
            } else if body == "1" {
                label
            } else if body == "-1" {
                format!("-{label}")
            } else {
                format!("{body} {label}")
            });
        }
        if parts.is_empty() {
            return "0".to_string();
        }
        let mut out = parts[0].clone();
        for p in &parts[1..] {
            match p.strip_prefix('-') {
                Some(rest) => {
                    out.push_str(" - ");
                    out.push_str(rest);
                }
                None => {
                    out.push_str(" + ");
                    out.push_str(p);
                }
            }
        }
        out
    }
}

impl fmt::Display for VectorFieldAnsatz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Prolonged coefficients `phi^i` and the symmetric matrix `phi^{ij}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProlongedCoeffs {
    pub first: Vec<MPoly>,
    pub second: Vec<Vec<MPoly>>,
}

/// Total derivative `D_i` on second-order jet expressions.
fn total_derivative(f: &MPoly, i: usize) -> Result<MPoly> {
    let t = f.table().clone();
    let n = t.n();
    let mut out = &f.diff(t.x(i))? + &f.diff(t.u())?.mul_var(t.du(i));
    for j in 0..n {
        out = &out + &f.diff(t.du(j))?.mul_var(t.d2u(i, j));
    }
    for j in 0..n {
        for k in j..n {
            out = &out + &f.diff(t.d2u(j, k))?.mul_var(t.d3u(i, j, k));
        }
    }
    Ok(out)
}

pub fn prolong2(v: &VectorFieldAnsatz) -> Result<ProlongedCoeffs> {
    let t = v.table.clone();
    let n = v.n;
    let mut q = v.phi.clone();
    for (a, xi) in v.xi.iter().enumerate() {
        q = &q - &xi.mul_var(t.du(a));
    }
    let mut dq = Vec::with_capacity(n);
    let mut first = Vec::with_capacity(n);
    for i in 0..n {
        let di = total_derivative(&q, i)?;
        let mut fi = di.clone();
        for (a, xi) in v.xi.iter().enumerate() {
            fi = &fi + &xi.mul_var(t.d2u(i, a));
        }
        first.push(fi);
        dq.push(di);
    }
    let mut second = vec![vec![MPoly::zero(&t); n]; n];
    for i in 0..n {
        for j in i..n {
            let mut fij = total_derivative(&dq[i], j)?;
            for (a, xi) in v.xi.iter().enumerate() {
                fij = &fij + &xi.mul_var(t.d3u(i, j, a));
            }
            second[i][j] = fij.clone();
            second[j][i] = fij;
        }
    }
    Ok(ProlongedCoeffs { first, second })
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = (i.min(j), i.max(j));
    i * n - i * (i + 1) / 2 + j
}

/// Linear solve of `sum_b u_{ab} U^{bc} = delta_{ac} det` for the bilinear
/// part of an expression in the symmetric storage of `u_{kl}` and `U^{ij}`.
struct CofactorReducer {
    n: usize,
    np: usize,
    /// `mu_c = sum_t solve[c][t] * lambda_t` for each relation `c = a*n + c'`.
    solve: Vec<Vec<(usize, Rat)>>,
    /// Each row must annihilate `lambda`.
    consistency: Vec<Vec<(usize, Rat)>>,
}

impl CofactorReducer {
    fn new(n: usize) -> Self {
        let np = n * (n + 1) / 2;
        let m = np * np;
        let r = n * n;
        let mut k = RatMatrix::zeros(m, r + m);
        for a in 0..n {
            for c in 0..n {
                for b in 0..n {
                    let t = pair_index(n, a, b) * np + pair_index(n, b, c);
                    k[(t, a * n + c)] += Rat::one();
                }
            }
        }
        for t in 0..m {
            k[(t, r + t)] = Rat::one();
        }
        let (red, pivots) = k.rref();
        let mut solve = vec![Vec::new(); r];
        let mut consistency = Vec::new();
        for (row, &pc) in pivots.iter().enumerate() {
            let tail: Vec<(usize, Rat)> = (0..m)
                .filter(|&t| !red[(row, r + t)].is_zero())
                .map(|t| (t, red[(row, r + t)].clone()))
                .collect();
            if pc < r {
                // relation vectors are independent, so every relation owns a pivot
                debug_assert!((0..r).filter(|&c| c != pc).all(|c| red[(row, c)].is_zero()));
                solve[pc] = tail;
            } else {
                consistency.push(tail);
            }
        }
        CofactorReducer {
            n,
            np,
            solve,
            consistency,
        }
    }

    fn combine(rows: &[(usize, Rat)], lambda: &[MPoly], zero: &MPoly) -> MPoly {
        rows.iter()
            .fold(zero.clone(), |acc, (t, c)| &acc + &lambda[*t].scale(c))
    }

    /// Returns the coefficient of `det` equivalent to the bilinear part `lambda`.
    fn det_coefficient(&self, lambda: &[MPoly], zero: &MPoly) -> Result<MPoly> {
        debug_assert_eq!(lambda.len(), self.np * self.np);
        for row in &self.consistency {
            if !Self::combine(row, lambda, zero).is_zero() {
                return Err(Error::ReductionIncomplete);
            }
        }
        let mut out = zero.clone();
        for a in 0..self.n {
            out = &out + &Self::combine(&self.solve[a * self.n + a], lambda, zero);
        }
        Ok(out)
    }
}

/// Determining constraints of one (possibly unsolved) generator. The full
/// condition reads
/// `sum_{i<=j} u_group[ij] * U^{ij} + s_group * s / ((1+|x|^2) u) = 0`
/// with `s` the right-hand side of the equation.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterminingSystem {
    pub n: usize,
    pub p: Rat,
    table: Arc<VarTable>,
    /// Nonzero coefficients of the cofactor symbols `U^{ij}`, `i <= j`.
    pub u_group: Vec<((usize, usize), MPoly)>,
    pub s_group: MPoly,
    /// Linear system over the unknowns: `matrix * c + constants = 0`.
    pub matrix: RatMatrix,
    pub constants: Vec<Rat>,
}

impl DeterminingSystem {
    pub fn table(&self) -> &Arc<VarTable> {
        &self.table
    }

    /// True when every constraint is the zero polynomial.
    pub fn is_satisfied(&self) -> bool {
        self.u_group.is_empty() && self.s_group.is_zero()
    }

    pub fn constraints(&self) -> impl Iterator<Item = &MPoly> {
        self.u_group.iter().map(|(_, c)| c).chain([&self.s_group])
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn rank(&self) -> usize {
        self.matrix.rank()
    }

    /// Entrywise sum of two systems over the same table.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n || self.p != other.p || !self.s_group.same_table(&other.s_group) {
            return Err(Error::IncompatibleTables);
        }
        let mut groups: BTreeMap<(usize, usize), MPoly> = self.u_group.iter().cloned().collect();
        for (k, c) in &other.u_group {
            let e = groups.entry(*k).or_insert_with(|| MPoly::zero(&self.table));
            *e = &*e + c;
        }
        let u_group = groups.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        let s_group = &self.s_group + &other.s_group;
        assemble(self.n, self.p.clone(), &self.table, u_group, s_group)
    }

    /// Numeric value of the full condition at a jet sample. Requires a field
    /// without unknowns.
    pub fn evaluate(&self, x: &[f64], u: f64, grad: &[f64], hess: &[Vec<f64>]) -> Result<f64> {
        check_sample(self.n, x, grad, hess)?;
        let t = &self.table;
        if self
            .constraints()
            .any(|c| c.variables().into_iter().any(|v| t.is_unknown(v)))
        {
            return Err(Error::InvalidParameter(
                "system has unresolved coefficients".into(),
            ));
        }
        let mut vals = vec![0.0; t.len()];
        for i in 0..self.n {
            vals[t.x(i).index()] = x[i];
            vals[t.du(i).index()] = grad[i];
        }
        vals[t.u().index()] = u;
        let cof = cofactor_matrix(hess)?;
        let s = plane_rhs(to_f64(&self.p), x, u)?;
        let mut total = self.s_group.eval_f64(&vals) * s / (weight(x) * u);
        for ((i, j), c) in &self.u_group {
            total += c.eval_f64(&vals) * cof[*i][*j];
        }
        Ok(total)
    }
}

fn assemble(
    n: usize,
    p: Rat,
    table: &Arc<VarTable>,
    u_group: Vec<((usize, usize), MPoly)>,
    s_group: MPoly,
) -> Result<DeterminingSystem> {
    let unknowns = table.unknowns();
    let col_of: BTreeMap<VarId, usize> =
        unknowns.iter().enumerate().map(|(k, v)| (*v, k)).collect();
    let point_vars: Vec<VarId> = table
        .vars()
        .filter(|(_, r)| !matches!(r, VarRole::Unknown(_)))
        .map(|(v, _)| v)
        .collect();
    let mut matrix = RatMatrix::zeros(0, unknowns.len());
    let mut constants = Vec::new();
    for c in u_group.iter().map(|(_, c)| c).chain([&s_group]) {
        for coeff in c.coefficient_split(&point_vars).values() {
            let mut row = vec![Rat::zero(); unknowns.len()];
            let mut constant = Rat::zero();
            for (m, r) in coeff.terms() {
                match m.pairs() {
                    [] => constant += r,
                    [(v, 1)] => row[col_of[v]] += r,
                    _ => return Err(Error::NonlinearInUnknowns),
                }
            }
            matrix.push_row(row);
            constants.push(constant);
        }
    }
    Ok(DeterminingSystem {
        n,
        p,
        table: Arc::clone(table),
        u_group,
        s_group,
        matrix,
        constants,
    })
}

/// Applies the prolongation to the equation, reduces `u_{kl} U^{ij}` products
/// through the cofactor identity and normalizes the scalar part into a
/// polynomial identity.
pub fn determining_system(v: &VectorFieldAnsatz, n: usize, p: &Rat) -> Result<DeterminingSystem> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if v.n != n {
        return Err(Error::DimensionMismatch(format!(
            "field has n = {}, requested n = {n}",
            v.n
        )));
    }
    let t = v.table.clone();
    let zero = MPoly::zero(&t);
    let pro = prolong2(v)?;

    let mut e = zero.clone();
    for i in 0..n {
        for j in 0..n {
            e = &e + &pro.second[i][j].mul_var(t.cofactor(i, j));
        }
    }

    let np = n * (n + 1) / 2;
    let mut split_vars = Vec::new();
    let mut d2_index = BTreeMap::new();
    let mut cof_index = BTreeMap::new();
    for i in 0..n {
        for j in i..n {
            d2_index.insert(t.d2u(i, j), pair_index(n, i, j));
            cof_index.insert(t.cofactor(i, j), (i, j));
            split_vars.push(t.d2u(i, j));
            split_vars.push(t.cofactor(i, j));
        }
    }
    let mut lambda = vec![zero.clone(); np * np];
    let mut groups: BTreeMap<(usize, usize), MPoly> = BTreeMap::new();
    for (key, coeff) in e.coefficient_split(&split_vars) {
        match key.pairs() {
            [(a, 1)] if cof_index.contains_key(a) => {
                groups.insert(cof_index[a], coeff);
            }
            [(a, 1), (b, 1)] => {
                let (d, c) = if d2_index.contains_key(a) {
                    (a, b)
                } else {
                    (b, a)
                };
                match (d2_index.get(d), cof_index.get(c)) {
                    (Some(&kl), Some(&(i, j))) => lambda[kl * np + pair_index(n, i, j)] = coeff,
                    _ => return Err(Error::ReductionIncomplete),
                }
            }
            _ => return Err(Error::ReductionIncomplete),
        }
    }
    let det_part = CofactorReducer::new(n).det_coefficient(&lambda, &zero)?;

    // s-group: (p+n+1)(xi . x) u + (1-p)(1+|x|^2) phi + (1+|x|^2) u * det_part
    let nr = Rat::from_integer((n as i64).into());
    let mut w = MPoly::one(&t);
    let mut xi_dot_x = zero.clone();
    for i in 0..n {
        w = &w + &MPoly::var(&t, t.x(i)).mul_var(t.x(i));
        xi_dot_x = &xi_dot_x + &v.xi[i].mul_var(t.x(i));
    }
    let s_group = &(&xi_dot_x.mul_var(t.u()).scale(&(p + &nr + Rat::one()))
        + &(&w * &v.phi).scale(&(Rat::one() - p)))
        + &(&w * &det_part).mul_var(t.u());

    let u_group = groups.into_iter().filter(|(_, c)| !c.is_zero()).collect();
    assemble(n, p.clone(), &t, u_group, s_group)
}

fn check_sample(n: usize, x: &[f64], grad: &[f64], hess: &[Vec<f64>]) -> Result<()> {
    if x.len() != n || grad.len() != n || hess.len() != n || hess.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "sample does not match n = {n}"
        )));
    }
    for i in 0..n {
        for j in 0..i {
            if (hess[i][j] - hess[j][i]).abs() > 1e-12 * (1.0 + hess[i][j].abs()) {
                return Err(Error::NotSymmetric);
            }
        }
    }
    Ok(())
}

fn to_dmatrix(m: &[Vec<f64>]) -> DMatrix<f64> {
    let n = m.len();
    DMatrix::from_fn(n, n, |i, j| m[i][j])
}

/// Cofactor matrix `U^{ij}` of a symmetric matrix, so that `H U = det(H) I`.
pub fn cofactor_matrix(h: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = h.len();
    if n == 1 {
        return Ok(vec![vec![1.0]]);
    }
    let m = to_dmatrix(h);
    let det = m.determinant();
    let inv = m.try_inverse().ok_or(Error::Singular)?;
    Ok((0..n)
        .map(|i| (0..n).map(|j| det * inv[(j, i)]).collect())
        .collect())
}

/// Evaluates a polynomial in `x`, `u` on jets seeded at `(x, u)`.
fn eval_point_jet(c: &MPoly, seeds: &[Jet2]) -> Result<Jet2> {
    let t = c.table();
    let dim = seeds.len();
    let mut out = Jet2::constant(dim, 0.0);
    for (m, coeff) in c.terms() {
        let mut term = Jet2::constant(dim, to_f64(coeff));
        for &(v, e) in m.pairs() {
            let s = match t.role(v) {
                VarRole::Base(i) => &seeds[*i],
                VarRole::Dependent => &seeds[dim - 1],
                _ => {
                    return Err(Error::InvalidParameter(
                        "field has unresolved coefficients".into(),
                    ))
                }
            };
            for _ in 0..e {
                term = &term * s;
            }
        }
        out = out + term;
    }
    Ok(out)
}

/// Direct floating-point value of `xi^i X^i + phi U + phi^{ij} U^{ij}` at an
/// on-manifold jet sample, from the expanded prolongation formula.
pub fn numeric_prolong_eval(
    v: &VectorFieldAnsatz,
    n: usize,
    p: &Rat,
    x: &[f64],
    u: f64,
    grad: &[f64],
    hess: &[Vec<f64>],
) -> Result<f64> {
    if v.n != n {
        return Err(Error::DimensionMismatch(format!(
            "field has n = {}, requested n = {n}",
            v.n
        )));
    }
    check_sample(n, x, grad, hess)?;
    let pf = to_f64(p);
    let s = plane_rhs(pf, x, u)?;
    let det = to_dmatrix(hess).determinant();
    if (det - s).abs() > 1e-8 * s.abs() {
        return Err(Error::OffManifold { det, expected: s });
    }
    let mut at = x.to_vec();
    at.push(u);
    let seeds = Jet2::seed(&at);
    let xi =
        v.xi.iter()
            .map(|c| eval_point_jet(c, &seeds))
            .collect::<Result<Vec<_>>>()?;
    let phi = eval_point_jet(&v.phi, &seeds)?;
    let ud = n;
    let g = grad;
    let h = hess;

    let mut second = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut val = phi.hess(i, j)
                + phi.hess(i, ud) * g[j]
                + (phi.hess(ud, j) + phi.hess(ud, ud) * g[j]) * g[i]
                + phi.gradient[ud] * h[i][j];
            for (a, xa) in xi.iter().enumerate() {
                val -= (xa.hess(i, j)
                    + xa.hess(i, ud) * g[j]
                    + (xa.hess(ud, j) + xa.hess(ud, ud) * g[j]) * g[i]
                    + xa.gradient[ud] * h[i][j])
                    * g[a];
                val -= (xa.gradient[i] + xa.gradient[ud] * g[i]) * h[j][a];
                val -= (xa.gradient[j] + xa.gradient[ud] * g[j]) * h[i][a];
            }
            second[i][j] = val;
        }
    }
    let cof = cofactor_matrix(hess)?;
    let w = weight(x);
    let mut total = phi.value * (1.0 - pf) * s / u;
    for i in 0..n {
        total += xi[i].value * (pf + n as f64 + 1.0) * s * x[i] / w;
        for j in 0..n {
            total += second[i][j] * cof[i][j];
        }
    }
    Ok(total)
}

/// A point of the second-order jet space lying on the equation.
#[derive(Debug, Clone, PartialEq)]
pub struct JetSample {
    pub x: Vec<f64>,
    pub u: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<Vec<f64>>,
}

/// Draws a random symmetric positive definite Hessian and rescales it so that
/// its determinant equals the right-hand side at `(x, u)`.
pub fn on_manifold_sample<R: Rng + ?Sized>(
    n: usize,
    p: &Rat,
    radius: f64,
    rng: &mut R,
) -> Result<JetSample> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let x: Vec<f64> = (0..n)
        .map(|_| rng.random_range(-radius..=radius) / (n as f64).sqrt())
        .collect();
    let u = rng.random_range(0.5..2.0);
    let grad: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let m = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let spd = m.transpose() * &m + DMatrix::<f64>::identity(n, n) * 0.5;
    let target = plane_rhs(to_f64(p), &x, u)?;
    let c = (target / spd.determinant()).powf(1.0 / n as f64);
    let hess = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| c * 0.5 * (spd[(i, j)] + spd[(j, i)]))
                .collect()
        })
        .collect();
    Ok(JetSample { x, u, grad, hess })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn field(n: usize, xi: &[&str], phi: &str) -> VectorFieldAnsatz {
        VectorFieldAnsatz::parse(n, xi, phi).unwrap()
    }

    fn poly(v: &VectorFieldAnsatz, s: &str) -> MPoly {
        MPoly::parse(v.table(), s).unwrap()
    }

    #[test]
    fn identity_scaling_prolongs_to_itself() {
        let v = field(2, &["0", "0"], "u");
        let pr = prolong2(&v).unwrap();
        assert_eq!(pr.first[0], poly(&v, "u_1"));
        assert_eq!(pr.first[1], poly(&v, "u_2"));
        assert_eq!(pr.second[0][1], poly(&v, "u_1_2"));
        assert_eq!(pr.second[1][1], poly(&v, "u_2_2"));
    }

    #[test]
    fn projective_generator_first_prolongation() {
        // hand expansion: phi_1 + phi_u u_1 - xi^j_1 u_j = u + x1 u_1 - 2 x1 u_1 - x2 u_2
        let v = field(2, &["x1^2", "x1*x2"], "x1*u");
        let pr = prolong2(&v).unwrap();
        assert_eq!(pr.first[0], poly(&v, "u - x1*u_1 - x2*u_2"));
    }

    #[test]
    fn constant_field_prolongs_trivially() {
        let v = field(3, &["1", "0", "2"], "5");
        let pr = prolong2(&v).unwrap();
        assert!(pr.first.iter().all(MPoly::is_zero));
        assert!(pr.second.iter().flatten().all(MPoly::is_zero));
    }

    #[test]
    fn third_derivatives_cancel() {
        let v = field(2, &["x1*u + x2^2", "u^2"], "x1*x2*u + u^3");
        let pr = prolong2(&v).unwrap();
        let t = v.table();
        for c in pr.first.iter().chain(pr.second.iter().flatten()) {
            assert!(c
                .variables()
                .iter()
                .all(|v| !matches!(t.role(*v), VarRole::ThirdDerivative(..))));
        }
        assert_eq!(pr.second[0][1], pr.second[1][0]);
    }

    #[test]
    fn u_scaling_system() {
        for n in 1..=3 {
            for p in [int(-2), rat(1, 2), int(3), int(n as i64 + 1)] {
                let xi = vec!["0"; n];
                let v = field(n, &xi, "u");
                let sys = determining_system(&v, n, &p).unwrap();
                assert!(sys.u_group.is_empty());
                let w: Vec<String> = (1..=n).map(|i| format!("x{i}^2*u")).collect();
                let expected =
                    poly(&v, &format!("u + {}", w.join(" + "))).scale(&(int(n as i64 + 1) - &p));
                assert_eq!(sys.s_group, expected, "n = {n}, p = {p}");
                assert_eq!(sys.is_satisfied(), p == int(n as i64 + 1));
            }
        }
    }

    #[test]
    fn x_translation_system() {
        let n = 2;
        for p in [int(1), int(-3), int(4)] {
            let v = field(n, &["1", "0"], "0");
            let sys = determining_system(&v, n, &p).unwrap();
            assert!(sys.u_group.is_empty());
            assert_eq!(sys.s_group, poly(&v, "x1*u").scale(&(&p + int(3))));
        }
    }

    #[test]
    fn zero_field_has_empty_system() {
        let v = field(2, &["0", "0"], "0");
        let sys = determining_system(&v, 2, &int(5)).unwrap();
        assert!(sys.is_satisfied());
        assert_eq!(sys.matrix.cols(), 0);
    }

    #[test]
    fn rejects_bad_dimension() {
        let v = field(2, &["0", "0"], "u");
        assert!(matches!(
            determining_system(&v, 0, &int(1)),
            Err(Error::InvalidDimension(0))
        ));
        assert!(determining_system(&v, 3, &int(1)).is_err());
    }

    #[test]
    fn numeric_u_scaling() {
        let v = field(2, &["0", "0"], "u");
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let val = numeric_prolong_eval(&v, 2, &int(2), &[0.0, 0.0], 1.0, &[0.0, 0.0], &id).unwrap();
        assert!((val - 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = on_manifold_sample(2, &int(3), 2.0, &mut rng).unwrap();
        let val = numeric_prolong_eval(&v, 2, &int(3), &s.x, s.u, &s.grad, &s.hess).unwrap();
        assert!(val.abs() < 1e-10);

        let z = field(2, &["0", "0"], "0");
        assert_eq!(
            numeric_prolong_eval(&z, 2, &int(3), &s.x, s.u, &s.grad, &s.hess).unwrap(),
            0.0
        );
    }

    #[test]
    fn off_manifold_rejected() {
        let v = field(2, &["0", "0"], "u");
        let h = vec![vec![2.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(
            numeric_prolong_eval(&v, 2, &int(2), &[0.0, 0.0], 1.0, &[0.0, 0.0], &h),
            Err(Error::OffManifold { .. })
        ));
    }

    #[test]
    fn generic_layout_roundtrip() {
        let (g, layout) = VectorFieldAnsatz::generic(2, 2).unwrap();
        assert_eq!(layout.len(), 3 * 10);
        assert!(g.has_unknowns());
        let v = field(2, &["x1^2 + 1", "x1*x2"], "x1*u - 3");
        let c = layout.coordinates(&v).unwrap();
        let back = layout.instantiate(v.table(), &c).unwrap();
        assert_eq!(back, v);
        let cubic = field(2, &["x1^3", "0"], "0");
        assert!(layout.coordinates(&cubic).is_none());
    }

    #[test]
    fn render_and_bracket() {
        let v = field(2, &["x1^2", "x1*x2"], "x1*u");
        let xi = field(2, &["1", "0"], "0");
        let b = xi.bracket(&v).unwrap();
        assert_eq!(b, field(2, &["2*x1", "x2"], "u"));
        assert_eq!(
            field(2, &["x2", "-x1"], "0").render(),
            "x2 d/dx1 - x1 d/dx2"
        );
        assert_eq!(v.render(), "x1^2 d/dx1 + x1*x2 d/dx2 + x1*u d/du");
        assert_eq!(field(1, &["x1^2 + 1"], "0").render(), "(x1^2 + 1) d/dx1");
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::exact::rat;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_field(n: usize, degree: usize) -> impl Strategy<Value = VectorFieldAnsatz> {
        let (_, layout) = VectorFieldAnsatz::generic(n, degree).unwrap();
        let len = layout.len();
        prop::collection::vec(prop_oneof![3 => Just(0i64), 1 => -3i64..4], len).prop_map(move |c| {
            let table = Arc::new(VarTable::jet_space(n, 0).unwrap());
            let coeffs: Vec<Rat> = c.into_iter().map(|v| rat(v, 1)).collect();
            layout.instantiate(&table, &coeffs).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn symbolic_matches_numeric(v in random_field(2, 2), seed in 0u64..1000, pn in -4i64..5) {
            let p = rat(pn, 2);
            let sys = determining_system(&v, 2, &p).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..8 {
                let s = on_manifold_sample(2, &p, 3.0, &mut rng).unwrap();
                let a = sys.evaluate(&s.x, s.u, &s.grad, &s.hess).unwrap();
                let b = numeric_prolong_eval(&v, 2, &p, &s.x, s.u, &s.grad, &s.hess).unwrap();
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs())), "{a} vs {b}");
            }
        }

        #[test]
        fn cofactor_identity(seed in 0u64..10_000, n in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = on_manifold_sample(n, &rat(1, 1), 2.0, &mut rng).unwrap();
            let cof = cofactor_matrix(&s.hess).unwrap();
            let det = to_dmatrix(&s.hess).determinant();
            for a in 0..n {
                for i in 0..n {
                    let v: f64 = (0..n).map(|j| s.hess[a][j] * cof[j][i]).sum();
                    let want = if a == i { det } else { 0.0 };
                    prop_assert!((v - want).abs() <= 1e-12 * det.abs().max(1.0));
                }
            }
        }

        #[test]
        fn system_is_linear(a in random_field(2, 2), b in random_field(2, 2), pn in -4i64..5) {
            let p = rat(pn, 1);
            let b = b.rebase(a.table()).unwrap();
            let sum = determining_system(&a.add(&b).unwrap(), 2, &p).unwrap();
            let parts = determining_system(&a, 2, &p).unwrap().add(&determining_system(&b, 2, &p).unwrap()).unwrap();
            prop_assert_eq!(sum.u_group, parts.u_group);
            prop_assert_eq!(sum.s_group, parts.s_group);
        }
    }
}
