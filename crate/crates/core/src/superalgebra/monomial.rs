use super::variable::{VarId, VarTable};

/// Product of generators in canonical (table) order, stored as sorted
/// `(variable, exponent)` pairs with positive exponents.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial(Vec<(VarId, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: VarId) -> Self {
        Monomial(vec![(v, 1)])
    }

    /// Builds from pairs already in canonical order; zero exponents dropped.
    pub fn from_sorted(pairs: Vec<(VarId, u32)>) -> Self {
        debug_assert!(pairs.windows(2).all(|w| w[0].0 < w[1].0));
        Monomial(pairs.into_iter().filter(|&(_, e)| e > 0).collect())
    }

    pub fn factors(&self) -> &[(VarId, u32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, v: VarId) -> u32 {
        match self.0.binary_search_by_key(&v, |&(w, _)| w) {
            Ok(i) => self.0[i].1,
            Err(_) => 0,
        }
    }

    /// Sum of exponents over the given variables.
    pub fn degree_in(&self, vars: &[VarId]) -> u32 {
        self.0
            .iter()
            .filter(|(v, _)| vars.contains(v))
            .map(|&(_, e)| e)
            .sum()
    }

    pub fn parity(&self, t: &VarTable) -> u8 {
        (self
            .0
            .iter()
            .map(|&(v, e)| t.parity(v) as u32 * e)
            .sum::<u32>()
            & 1) as u8
    }

    pub fn form_degree(&self, t: &VarTable) -> u32 {
        self.0.iter().map(|&(v, e)| t.form_degree(v) * e).sum()
    }

    /// Product `self * other` normalized to canonical order, with the sign
    /// (`true` = negative). `None` when a nilpotent generator repeats.
    pub fn mul(&self, other: &Monomial, t: &VarTable) -> Option<(Monomial, bool)> {
        let mut sign = 0u32;
        // Each generator of `other` moves left past the larger generators of `self`.
        for &(v, eb) in &other.0 {
            for &(w, ea) in self.0.iter().rev() {
                if w <= v {
                    break;
                }
                sign ^= (ea * eb * t.swap_sign(w, v)) & 1;
            }
        }
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            if j == other.0.len() || (i < self.0.len() && self.0[i].0 < other.0[j].0) {
                out.push(self.0[i]);
                i += 1;
            } else if i == self.0.len() || other.0[j].0 < self.0[i].0 {
                out.push(other.0[j]);
                j += 1;
            } else {
                let v = self.0[i].0;
                if t.is_nilpotent(v) {
                    return None;
                }
                out.push((v, self.0[i].1 + other.0[j].1));
                i += 1;
                j += 1;
            }
        }
        Some((Monomial(out), sign == 1))
    }

    /// Removes one factor of `v` after moving it to the far left (`left`) or
    /// far right. Returns the remaining monomial, the exponent of `v`, and the
    /// sign of the move.
    pub fn extract(&self, v: VarId, left: bool, t: &VarTable) -> Option<(Monomial, u32, bool)> {
        let pos = self.0.iter().position(|&(w, _)| w == v)?;
        let e = self.0[pos].1;
        let mut sign = 0u32;
        let others: Box<dyn Iterator<Item = &(VarId, u32)>> = if left {
            Box::new(self.0[..pos].iter())
        } else {
            Box::new(self.0[pos + 1..].iter())
        };
        for &(w, ew) in others {
            sign ^= (ew * t.swap_sign(w, v)) & 1;
        }
        // The remaining e-1 copies of v commute with v itself (e>1 only for
        // generators with even self-sign).
        let mut rest = self.0.clone();
        if e == 1 {
            rest.remove(pos);
        } else {
            rest[pos].1 -= 1;
        }
        Some((Monomial(rest), e, sign == 1))
    }

    /// Divides by a monomial built from commuting generators.
    pub fn div_commuting(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = self.0.clone();
        for &(v, e) in &other.0 {
            let i = out.iter().position(|&(w, _)| w == v)?;
            if out[i].1 < e {
                return None;
            }
            out[i].1 -= e;
        }
        out.retain(|&(_, e)| e > 0);
        Some(Monomial(out))
    }

    /// Splits into the factor on body variables and the rest.
    pub fn split_body(&self, t: &VarTable) -> (Monomial, Monomial) {
        let (b, s): (Vec<_>, Vec<_>) = self.0.iter().partition(|&&(v, _)| t.var(v).is_body());
        (Monomial(b), Monomial(s))
    }

    /// Lexicographic monomial order: the smallest variable with differing
    /// exponents decides, higher exponent being larger.
    pub fn lex_cmp(&self, other: &Monomial) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Equal,
                (Some(_), None) => return Greater,
                (None, Some(_)) => return Less,
                (Some(&(va, ea)), Some(&(vb, eb))) => {
                    if va < vb {
                        return Greater;
                    }
                    if vb < va {
                        return Less;
                    }
                    if ea != eb {
                        return ea.cmp(&eb);
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0.iter().map(|&(v, _)| v)
    }

    pub fn render(&self, t: &VarTable) -> String {
        self.0
            .iter()
            .map(|&(v, e)| {
                if e == 1 {
                    t.var(v).name.clone()
                } else {
                    format!("{}^{}", t.var(v).name, e)
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}
