use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a variable inside its [`VarTable`]; also its position in the
/// canonical generator order.
pub type VarId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Role {
    Position,
    Momentum,
    Casimir,
    FormGenerator,
    Auxiliary,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GradedVariable {
    pub name: String,
    pub parity: u8,
    pub form_degree: u32,
    pub role: Role,
    pub index: u32,
}

impl GradedVariable {
    pub fn new(name: &str, parity: u8, form_degree: u32, role: Role, index: u32) -> Self {
        GradedVariable {
            name: name.to_string(),
            parity: parity & 1,
            form_degree,
            role,
            index,
        }
    }

    /// Even, form-degree 0: allowed in denominators and evaluated on the body.
    pub fn is_body(&self) -> bool {
        self.parity == 0 && self.form_degree == 0
    }
}

/// Ordered set of generators with unique names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarTable {
    vars: Vec<GradedVariable>,
    by_name: HashMap<String, VarId>,
}

impl VarTable {
    pub fn new(vars: Vec<GradedVariable>) -> Result<Arc<VarTable>> {
        let mut by_name = HashMap::new();
        for (i, v) in vars.iter().enumerate() {
            if by_name.insert(v.name.clone(), i).is_some() {
                return Err(Error::DuplicateVariable(v.name.clone()));
            }
        }
        Ok(Arc::new(VarTable { vars, by_name }))
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn var(&self, id: VarId) -> &GradedVariable {
        &self.vars[id]
    }

    pub fn vars(&self) -> &[GradedVariable] {
        &self.vars
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn id(&self, name: &str) -> VarId {
        self.lookup(name)
            .unwrap_or_else(|| panic!("unknown variable `{name}`"))
    }

    pub fn parity(&self, id: VarId) -> u8 {
        self.vars[id].parity
    }

    pub fn form_degree(&self, id: VarId) -> u32 {
        self.vars[id].form_degree
    }

    /// Exponent of `(-1)` picked up when generators `a` and `b` are swapped.
    pub fn swap_sign(&self, a: VarId, b: VarId) -> u32 {
        let (x, y) = (&self.vars[a], &self.vars[b]);
        ((x.parity as u32 * y.parity as u32) + (x.form_degree * y.form_degree)) & 1
    }

    /// True when the generator anticommutes with itself and squares to zero.
    pub fn is_nilpotent(&self, id: VarId) -> bool {
        self.swap_sign(id, id) == 1
    }

    pub fn same(a: &Arc<VarTable>, b: &Arc<VarTable>) -> bool {
        Arc::ptr_eq(a, b) || a.vars == b.vars
    }

    pub fn ids_with_role(&self, role: Role) -> Vec<VarId> {
        let mut ids: Vec<VarId> = (0..self.vars.len())
            .filter(|&i| self.vars[i].role == role)
            .collect();
        ids.sort_by_key(|&i| self.vars[i].index);
        ids
    }
}
