//! Symmetry classification: generic ansatz, exact nullspace, canonical basis
//! and structural identification of the generator families.

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{int, primitive_integer_vector, MPoly, Monomial, Rat, RatMatrix, VarTable};
use crate::prolongation::{determining_system, AnsatzLayout, VectorFieldAnsatz};

pub const DEFAULT_ANSATZ_DEGREE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    Rotation,
    UScaling,
    UTranslation,
    ULinearTranslation,
    Projective,
    XTranslation,
    TraceScaling,
    OffDiagonalAffine,
    Mixed,
}

impl FamilyTag {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyTag::Rotation => "rotation",
            FamilyTag::UScaling => "u-scaling",
            FamilyTag::UTranslation => "u-translation",
            FamilyTag::ULinearTranslation => "u-linear-translation",
            FamilyTag::Projective => "projective",
            FamilyTag::XTranslation => "x-translation",
            FamilyTag::TraceScaling => "trace-scaling",
            FamilyTag::OffDiagonalAffine => "off-diagonal-affine",
            FamilyTag::Mixed => "mixed",
        }
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Size of the exact linear system behind a classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SystemStats {
    pub unknowns: usize,
    pub rows: usize,
    pub rank: usize,
}

#[derive(Debug, Clone)]
pub struct LieAlgebraBasis {
    pub n: usize,
    pub p: Rat,
    pub ansatz_degree: usize,
    pub generators: Vec<VectorFieldAnsatz>,
    pub tags: Vec<FamilyTag>,
    pub stats: SystemStats,
    layout: AnsatzLayout,
    /// Primitive integer coordinate rows in the layout, in echelon order.
    rows: Vec<Vec<Rat>>,
    pivots: Vec<usize>,
    table: Arc<VarTable>,
}

impl LieAlgebraBasis {
    pub fn dimension(&self) -> usize {
        self.generators.len()
    }

    pub fn layout(&self) -> &AnsatzLayout {
        &self.layout
    }

    /// Coordinate rows of the generators in the ansatz layout.
    pub fn coordinates(&self) -> &[Vec<Rat>] {
        &self.rows
    }

    /// Table shared by all generators.
    pub fn table(&self) -> &Arc<VarTable> {
        &self.table
    }

    /// Exact membership of a concrete field in the span of the basis.
    pub fn contains(&self, v: &VectorFieldAnsatz) -> bool {
        match self.layout.coordinates(v) {
            Some(c) => self.reduce(c).iter().all(Zero::is_zero),
            None => false,
        }
    }

    fn reduce(&self, mut c: Vec<Rat>) -> Vec<Rat> {
        for (row, &pc) in self.rows.iter().zip(&self.pivots) {
            if c[pc].is_zero() {
                continue;
            }
            let f = &c[pc] / &row[pc];
            for (x, r) in c.iter_mut().zip(row) {
                if !r.is_zero() {
                    *x -= &f * r;
                }
            }
        }
        c
    }

    /// Every generator substituted back gives the zero system.
    pub fn closure_holds(&self) -> Result<bool> {
        for g in &self.generators {
            if !determining_system(g, self.n, &self.p)?.is_satisfied() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Every pairwise commutator lies in the span.
    pub fn bracket_closed(&self) -> Result<bool> {
        for (a, va) in self.generators.iter().enumerate() {
            for vb in &self.generators[a + 1..] {
                if !self.contains(&va.bracket(vb)?) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// `(n+1) b = tr A` for every generator, where `b u` is the `u`-linear
    /// part of `phi` and `A` the linear part of `xi`.
    pub fn trace_balance_holds(&self) -> bool {
        let n1 = int(self.n as i64 + 1);
        self.generators.iter().all(|g| {
            let pc = Pieces::of(g);
            &n1 * &pc.phi_u == pc.trace()
        })
    }
}

/// Computes the symmetry algebra within the polynomial ansatz of the given degree.
pub fn classify(n: usize, p: &Rat, ansatz_degree: usize) -> Result<LieAlgebraBasis> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if ansatz_degree < 2 {
        return Err(Error::AnsatzTooSmall(ansatz_degree));
    }
    let (generic, layout) = VectorFieldAnsatz::generic(n, ansatz_degree)?;
    let sys = determining_system(&generic, n, p)?;
    debug_assert!(sys.constants.iter().all(Zero::is_zero));
    let ns = sys.matrix.nullspace();
    let stats = SystemStats {
        unknowns: layout.len(),
        rows: sys.rows(),
        rank: layout.len() - ns.len(),
    };
    let (rows, pivots) = if ns.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        let (rref, pivots) = RatMatrix::from_rows(layout.len(), ns).rref();
        let rows: Vec<Vec<Rat>> = (0..rref.rows())
            .map(|i| {
                primitive_integer_vector(rref.row(i))
                    .into_iter()
                    .map(Rat::from_integer)
                    .collect()
            })
            .collect();
        (rows, pivots)
    };
    let table = Arc::new(VarTable::jet_space(n, 0)?);
    let generators = rows
        .iter()
        .map(|r| layout.instantiate(&table, r))
        .collect::<Result<Vec<_>>>()?;
    let tags = generators.iter().map(tag_generator).collect();
    Ok(LieAlgebraBasis {
        n,
        p: p.clone(),
        ansatz_degree,
        generators,
        tags,
        stats,
        layout,
        rows,
        pivots,
        table,
    })
}

/// Which exceptional exponent, if any, `p` is for dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpecialCase {
    #[serde(rename = "p=n+1")]
    NPlusOne,
    #[serde(rename = "p=1")]
    One,
    #[serde(rename = "p=-n-1")]
    MinusNMinusOne,
    #[serde(rename = "generic")]
    Generic,
}

impl SpecialCase {
    pub fn of(n: usize, p: &Rat) -> Self {
        let n = n as i64;
        if *p == int(n + 1) {
            SpecialCase::NPlusOne
        } else if p.is_one() {
            SpecialCase::One
        } else if *p == int(-n - 1) {
            SpecialCase::MinusNMinusOne
        } else {
            SpecialCase::Generic
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SpecialCase::NPlusOne => "p=n+1",
            SpecialCase::One => "p=1",
            SpecialCase::MinusNMinusOne => "p=-n-1",
            SpecialCase::Generic => "generic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub p: Rat,
    pub dimension: usize,
    pub case: SpecialCase,
    pub stats: SystemStats,
}

/// One classification per exponent, evaluated in parallel and sorted by `p`.
pub fn scan(n: usize, p_values: &[Rat], ansatz_degree: usize) -> Result<Vec<ScanRow>> {
    if p_values.is_empty() {
        return Err(Error::InvalidParameter("empty exponent list".into()));
    }
    let mut rows = p_values
        .par_iter()
        .map(|p| {
            let b = classify(n, p, ansatz_degree)?;
            Ok(ScanRow {
                p: p.clone(),
                dimension: b.dimension(),
                case: SpecialCase::of(n, p),
                stats: b.stats,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.p.cmp(&b.p));
    Ok(rows)
}

/// Expected dimension from the closed-form counts.
pub fn expected_dimension(n: usize, p: &Rat) -> usize {
    let base = n * (n + 1) / 2;
    match SpecialCase::of(n, p) {
        SpecialCase::NPlusOne => base + 1,
        SpecialCase::One => base + n + 1,
        SpecialCase::MinusNMinusOne => n * n + 2 * n,
        SpecialCase::Generic => base,
    }
}

/// Tags every generator of the basis.
pub fn match_families(basis: &LieAlgebraBasis) -> Vec<(VectorFieldAnsatz, FamilyTag)> {
    basis
        .generators
        .iter()
        .map(|g| (g.clone(), tag_generator(g)))
        .collect()
}

/// Coefficients of a field sorted into the shapes
/// `xi^i = a_k x^k x^i + A^i_k x^k + B^i`, `phi = (a'_k x^k + b) u + c_k x^k + d`.
struct Pieces {
    translation: Vec<Rat>,
    linear: Vec<Vec<Rat>>,
    quadratic: Vec<Rat>,
    phi_u: Rat,
    phi_ux: Vec<Rat>,
    phi_x: Vec<Rat>,
    phi_const: Rat,
    irregular: bool,
}

impl Pieces {
    fn of(v: &VectorFieldAnsatz) -> Self {
        let n = v.n();
        let t = v.table();
        let xs: Vec<_> = (0..n).map(|i| t.x(i)).collect();
        let u = t.u();
        let zeros = || vec![Rat::zero(); n];
        let mut pc = Pieces {
            translation: zeros(),
            linear: vec![zeros(); n],
            quadratic: zeros(),
            phi_u: Rat::zero(),
            phi_ux: zeros(),
            phi_x: zeros(),
            phi_const: Rat::zero(),
            irregular: false,
        };
        let pos = |m: &Monomial| xs.iter().position(|x| *m == Monomial::var(*x));
        let mut quad_terms: Vec<(usize, Monomial, Rat)> = Vec::new();
        for (i, xi) in v.xi().iter().enumerate() {
            for (m, c) in xi.terms() {
                if m.is_one() {
                    pc.translation[i] = c.clone();
                } else if let Some(k) = pos(m) {
                    pc.linear[i][k] = c.clone();
                } else if m.degree() == 2 && m.exponent(u) == 0 {
                    quad_terms.push((i, m.clone(), c.clone()));
                } else {
                    pc.irregular = true;
                }
            }
        }
        // a_k is read off the coefficient of x^k x^i in xi^i, then checked
        for (i, m, c) in &quad_terms {
            if m.exponent(xs[*i]) == 0 {
                continue;
            }
            let rest = m.vars().find(|v| *v != xs[*i] || m.exponent(xs[*i]) == 2);
            if let Some(k) = rest.and_then(|r| xs.iter().position(|x| *x == r)) {
                pc.quadratic[k] = c.clone();
            }
        }
        let mut rebuilt: Vec<MPoly> = vec![MPoly::zero(t); n];
        for (i, r) in rebuilt.iter_mut().enumerate() {
            for (k, a) in pc.quadratic.iter().enumerate() {
                r.add_term(Monomial::var(xs[k]).mul(&Monomial::var(xs[i])), a.clone());
            }
        }
        for (i, r) in rebuilt.iter().enumerate() {
            let actual = MPoly::from_terms(
                t,
                quad_terms
                    .iter()
                    .filter(|(j, _, _)| *j == i)
                    .map(|(_, m, c)| (m.clone(), c.clone())),
            );
            if *r != actual {
                pc.irregular = true;
            }
        }
        for (m, c) in v.phi().terms() {
            if m.is_one() {
                pc.phi_const = c.clone();
            } else if let Some(k) = pos(m) {
                pc.phi_x[k] = c.clone();
            } else if *m == Monomial::var(u) {
                pc.phi_u = c.clone();
            } else if m.degree() == 2 && m.exponent(u) == 1 {
                match m
                    .vars()
                    .find(|v| *v != u)
                    .and_then(|r| xs.iter().position(|x| *x == r))
                {
                    Some(k) => pc.phi_ux[k] = c.clone(),
                    None => pc.irregular = true,
                }
            } else {
                pc.irregular = true;
            }
        }
        pc
    }

    fn trace(&self) -> Rat {
        (0..self.linear.len()).fold(Rat::zero(), |acc, i| acc + &self.linear[i][i])
    }
}

fn all_zero(v: &[Rat]) -> bool {
    v.iter().all(Zero::is_zero)
}

fn single_axis(v: &[Rat]) -> Option<usize> {
    let nz: Vec<usize> = (0..v.len()).filter(|&k| !v[k].is_zero()).collect();
    (nz.len() == 1).then(|| nz[0])
}

/// Exact structural tag of a concrete generator.
pub fn tag_generator(v: &VectorFieldAnsatz) -> FamilyTag {
    let pc = Pieces::of(v);
    if pc.irregular {
        return FamilyTag::Mixed;
    }
    let n = v.n();
    let lin_zero = pc.linear.iter().all(|r| all_zero(r));
    let phi_rest_zero = pc.phi_const.is_zero() && all_zero(&pc.phi_x);
    let no_x_part = lin_zero && all_zero(&pc.translation) && all_zero(&pc.quadratic);
    let no_phi = phi_rest_zero && pc.phi_u.is_zero() && all_zero(&pc.phi_ux);

    if let Some(i) = single_axis(&pc.quadratic) {
        let c = &pc.quadratic[i];
        let translation_ok = all_zero(&pc.translation)
            || (single_axis(&pc.translation) == Some(i) && pc.translation[i] == *c);
        if lin_zero
            && phi_rest_zero
            && pc.phi_u.is_zero()
            && pc.phi_ux == pc.quadratic
            && translation_ok
        {
            return FamilyTag::Projective;
        }
        return FamilyTag::Mixed;
    }
    if !all_zero(&pc.quadratic) || !all_zero(&pc.phi_ux) {
        return FamilyTag::Mixed;
    }
    if no_x_part {
        return match (
            pc.phi_u.is_zero(),
            pc.phi_const.is_zero(),
            all_zero(&pc.phi_x),
        ) {
            (false, true, true) => FamilyTag::UScaling,
            (true, false, true) => FamilyTag::UTranslation,
            (true, true, false) => FamilyTag::ULinearTranslation,
            _ => FamilyTag::Mixed,
        };
    }
    if lin_zero {
        return if no_phi {
            FamilyTag::XTranslation
        } else {
            FamilyTag::Mixed
        };
    }
    if !all_zero(&pc.translation) || !phi_rest_zero {
        return FamilyTag::Mixed;
    }
    let antisymmetric = (0..n).all(|i| (0..n).all(|k| pc.linear[i][k] == -pc.linear[k][i].clone()));
    let diagonal = (0..n).all(|i| (0..n).all(|k| i == k || pc.linear[i][k].is_zero()));
    if pc.phi_u.is_zero() {
        if antisymmetric {
            return FamilyTag::Rotation;
        }
        if pc.trace().is_zero() {
            return FamilyTag::OffDiagonalAffine;
        }
        return FamilyTag::Mixed;
    }
    if diagonal && int(n as i64 + 1) * &pc.phi_u == pc.trace() {
        return FamilyTag::TraceScaling;
    }
    FamilyTag::Mixed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn field(n: usize, xi: &[&str], phi: &str) -> VectorFieldAnsatz {
        VectorFieldAnsatz::parse(n, xi, phi).unwrap()
    }

    #[test]
    fn dimensions_n2() {
        for (p, d) in [
            (int(-3), 8),
            (int(3), 4),
            (int(1), 6),
            (int(7), 3),
            (rat(1, 2), 3),
        ] {
            let b = classify(2, &p, 3).unwrap();
            assert_eq!(b.dimension(), d, "p = {p}");
            assert_eq!(d, expected_dimension(2, &p));
        }
    }

    #[test]
    fn dimension_n1_projective() {
        assert_eq!(classify(1, &int(-2), 3).unwrap().dimension(), 3);
    }

    #[test]
    fn too_small_ansatz() {
        assert!(matches!(
            classify(2, &int(3), 1),
            Err(Error::AnsatzTooSmall(1))
        ));
        assert!(matches!(
            classify(0, &int(3), 3),
            Err(Error::InvalidDimension(0))
        ));
    }

    #[test]
    fn scan_examples() {
        let ps: Vec<Rat> = [-4, -3, -2, 0, 1, 2, 3, 4]
            .iter()
            .map(|&v| int(v))
            .collect();
        let dims: Vec<usize> = scan(2, &ps, 3)
            .unwrap()
            .iter()
            .map(|r| r.dimension)
            .collect();
        assert_eq!(dims, vec![3, 8, 3, 3, 6, 3, 4, 3]);
        let ps: Vec<Rat> = [1, 2, -2, 5].iter().map(|&v| int(v)).collect();
        let rows = scan(1, &ps, 3).unwrap();
        let got: Vec<(Rat, usize)> = rows.iter().map(|r| (r.p.clone(), r.dimension)).collect();
        assert_eq!(
            got,
            vec![(int(-2), 3), (int(1), 3), (int(2), 2), (int(5), 1)]
        );
        assert_eq!(scan(2, &[int(1)], 3).unwrap()[0].dimension, 6);
        assert!(scan(2, &[], 3).is_err());
    }

    #[test]
    fn tags() {
        assert_eq!(
            tag_generator(&field(2, &["0", "0"], "u")),
            FamilyTag::UScaling
        );
        assert_eq!(
            tag_generator(&field(2, &["0", "0"], "1")),
            FamilyTag::UTranslation
        );
        assert_eq!(
            tag_generator(&field(2, &["x2", "-x1"], "0")),
            FamilyTag::Rotation
        );
        assert_eq!(
            tag_generator(&field(2, &["0", "0"], "x2")),
            FamilyTag::ULinearTranslation
        );
        assert_eq!(
            tag_generator(&field(2, &["x1^2 + 1", "x1*x2"], "x1*u")),
            FamilyTag::Projective
        );
        assert_eq!(
            tag_generator(&field(2, &["x1*x2", "x2^2"], "x2*u")),
            FamilyTag::Projective
        );
        assert_eq!(
            tag_generator(&field(2, &["x1*x2", "x2^2 + 1"], "x2*u")),
            FamilyTag::Projective
        );
        assert_eq!(
            tag_generator(&field(2, &["x1*x2 + 1", "x2^2"], "x2*u")),
            FamilyTag::Mixed
        );
        assert_eq!(
            tag_generator(&field(2, &["3", "-1"], "0")),
            FamilyTag::XTranslation
        );
        assert_eq!(
            tag_generator(&field(2, &["3*x1", "0"], "u")),
            FamilyTag::TraceScaling
        );
        assert_eq!(
            tag_generator(&field(2, &["x2", "0"], "0")),
            FamilyTag::OffDiagonalAffine
        );
        assert_eq!(
            tag_generator(&field(2, &["x1", "-x2"], "0")),
            FamilyTag::OffDiagonalAffine
        );
        assert_eq!(
            tag_generator(&field(2, &["x1", "0"], "0")),
            FamilyTag::Mixed
        );
    }

    #[test]
    fn basis_properties() {
        let b = classify(2, &int(-3), 3).unwrap();
        assert!(b.closure_holds().unwrap());
        assert!(b.bracket_closed().unwrap());
        assert!(b.trace_balance_holds());
        assert!(b.contains(&field(2, &["x2", "0"], "0")));
        assert!(!b.contains(&field(2, &["0", "0"], "u")));
    }
}
