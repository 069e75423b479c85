use std::collections::HashMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// What a symbol stands for in the jet space. Derivative and cofactor
/// indices are zero-based and stored sorted, so `u_{ji}` and `u_{ij}` are the
/// same symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum VarRole {
    Base(usize),
    Dependent,
    FirstDerivative(usize),
    SecondDerivative(usize, usize),
    ThirdDerivative(usize, usize, usize),
    Cofactor(usize, usize),
    Determinant,
    Unknown(usize),
}

impl VarRole {
    pub fn canonical(self) -> Self {
        match self {
            VarRole::SecondDerivative(i, j) => VarRole::SecondDerivative(i.min(j), i.max(j)),
            VarRole::Cofactor(i, j) => VarRole::Cofactor(i.min(j), i.max(j)),
            VarRole::ThirdDerivative(i, j, k) => {
                let mut t = [i, j, k];
                t.sort_unstable();
                VarRole::ThirdDerivative(t[0], t[1], t[2])
            }
            r => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarTable {
    n: usize,
    names: Vec<String>,
    roles: Vec<VarRole>,
    by_name: HashMap<String, VarId>,
    by_role: HashMap<VarRole, VarId>,
}

impl VarTable {
    pub fn empty(n: usize) -> Self {
        VarTable {
            n,
            names: Vec::new(),
            roles: Vec::new(),
            by_name: HashMap::new(),
            by_role: HashMap::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, role: VarRole) -> Result<VarId> {
        let name = name.into();
        let role = role.canonical();
        if self.by_name.contains_key(&name) || self.by_role.contains_key(&role) {
            return Err(Error::DuplicateVariable(name));
        }
        let id = VarId(self.names.len() as u32);
        self.by_name.insert(name.clone(), id);
        self.by_role.insert(role.clone(), id);
        self.names.push(name);
        self.roles.push(role);
        Ok(id)
    }

    /// The second-order jet space over `n` base variables with cofactor
    /// symbols, the determinant symbol, and `unknowns` coefficient symbols
    /// named `c0, c1, ...`. Third-derivative symbols are included because
    /// total derivatives of first-order expressions produce them.
    pub fn jet_space(n: usize, unknowns: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        let mut t = VarTable::empty(n);
        for i in 0..n {
            t.push(format!("x{}", i + 1), VarRole::Base(i))?;
        }
        t.push("u", VarRole::Dependent)?;
        for i in 0..n {
            t.push(format!("u_{}", i + 1), VarRole::FirstDerivative(i))?;
        }
        for i in 0..n {
            for j in i..n {
                t.push(
                    format!("u_{}_{}", i + 1, j + 1),
                    VarRole::SecondDerivative(i, j),
                )?;
            }
        }
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    t.push(
                        format!("u_{}_{}_{}", i + 1, j + 1, k + 1),
                        VarRole::ThirdDerivative(i, j, k),
                    )?;
                }
            }
        }
        for i in 0..n {
            for j in i..n {
                t.push(format!("U_{}_{}", i + 1, j + 1), VarRole::Cofactor(i, j))?;
            }
        }
        t.push("det", VarRole::Determinant)?;
        for k in 0..unknowns {
            t.push(format!("c{k}"), VarRole::Unknown(k))?;
        }
        Ok(t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v.index()]
    }

    pub fn role(&self, v: VarId) -> &VarRole {
        &self.roles[v.index()]
    }

    pub fn contains(&self, v: VarId) -> bool {
        v.index() < self.names.len()
    }

    pub fn by_name(&self, name: &str) -> Result<VarId> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn find(&self, role: VarRole) -> Option<VarId> {
        self.by_role.get(&role.canonical()).copied()
    }

    fn require(&self, role: VarRole) -> VarId {
        self.find(role.clone())
            .unwrap_or_else(|| panic!("variable table has no symbol for {role:?}"))
    }

    /// Base variable `x^{i+1}`. Panics if the table has no such symbol.
    pub fn x(&self, i: usize) -> VarId {
        self.require(VarRole::Base(i))
    }

    pub fn u(&self) -> VarId {
        self.require(VarRole::Dependent)
    }

    pub fn du(&self, i: usize) -> VarId {
        self.require(VarRole::FirstDerivative(i))
    }

    pub fn d2u(&self, i: usize, j: usize) -> VarId {
        self.require(VarRole::SecondDerivative(i, j))
    }

    pub fn d3u(&self, i: usize, j: usize, k: usize) -> VarId {
        self.require(VarRole::ThirdDerivative(i, j, k))
    }

    pub fn cofactor(&self, i: usize, j: usize) -> VarId {
        self.require(VarRole::Cofactor(i, j))
    }

    pub fn det(&self) -> VarId {
        self.require(VarRole::Determinant)
    }

    pub fn unknown(&self, k: usize) -> VarId {
        self.require(VarRole::Unknown(k))
    }

    pub fn vars(&self) -> impl Iterator<Item = (VarId, &VarRole)> + '_ {
        self.roles
            .iter()
            .enumerate()
            .map(|(k, r)| (VarId(k as u32), r))
    }

    pub fn unknowns(&self) -> Vec<VarId> {
        let mut u: Vec<(usize, VarId)> = self
            .vars()
            .filter_map(|(v, r)| match r {
                VarRole::Unknown(k) => Some((*k, v)),
                _ => None,
            })
            .collect();
        u.sort_unstable();
        u.into_iter().map(|(_, v)| v).collect()
    }

    pub fn is_unknown(&self, v: VarId) -> bool {
        matches!(self.role(v), VarRole::Unknown(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_space_layout() {
        let t = VarTable::jet_space(2, 3).unwrap();
        // x1 x2 u u_1 u_2 u_11 u_12 u_22 u_111 u_112 u_122 u_222 U11 U12 U22 det c0 c1 c2
        assert_eq!(t.len(), 2 + 1 + 2 + 3 + 4 + 3 + 1 + 3);
        assert_eq!(t.d2u(1, 0), t.d2u(0, 1));
        assert_eq!(t.cofactor(1, 0), t.cofactor(0, 1));
        assert_eq!(t.d3u(1, 0, 1), t.d3u(0, 1, 1));
        assert_eq!(t.name(t.cofactor(1, 0)), "U_1_2");
        assert_eq!(t.unknowns().len(), 3);
    }

    #[test]
    fn names_unique() {
        let mut t = VarTable::empty(1);
        t.push("a", VarRole::Base(0)).unwrap();
        assert!(matches!(
            t.push("a", VarRole::Dependent),
            Err(Error::DuplicateVariable(_))
        ));
        assert!(t.by_name("zz").is_err());
        assert!(VarTable::jet_space(0, 0).is_err());
    }
}
