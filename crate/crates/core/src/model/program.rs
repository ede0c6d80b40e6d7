//! Generic minimization program container.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Symbolic name of a decision variable. Vertex fields are indices into the
/// `BanGraph` vertex list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VariableKey {
    /// y_r, keyed by relay vertex.
    Relay(usize),
    /// x^{bs}_{ij}.
    Flow { b: usize, s: usize, tail: usize, head: usize },
    /// The robust energy bound E.
    EnergyBound,
    /// Free-standing variable of a program not tied to a BAN graph.
    Aux(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub key: VariableKey,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Amount by which `values` violates this row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ProgramError {
    #[error("variable {0:?} declared twice")]
    DuplicateKey(VariableKey),
    #[error("unknown variable {0:?}")]
    UnknownKey(VariableKey),
    #[error("variable {0:?} fixed to conflicting values")]
    ConflictingFixing(VariableKey),
    #[error("constraint {name} references undeclared variable index {index}")]
    DanglingReference { name: String, index: usize },
    #[error("variable {0:?} has lower bound above upper bound")]
    InvertedBounds(VariableKey),
}

/// Minimize `objective · x + objective_offset` subject to the rows and bounds.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(usize, f64)>,
    pub objective_offset: f64,
    index: HashMap<VariableKey, usize>,
}

impl PartialEq for LinearProgram {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables
            && self.constraints == other.constraints
            && self.objective == other.objective
            && self.objective_offset == other.objective_offset
    }
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, key: VariableKey, lower: f64, upper: f64, integer: bool) -> Result<usize, ProgramError> {
        if self.index.contains_key(&key) {
            return Err(ProgramError::DuplicateKey(key));
        }
        if lower > upper {
            return Err(ProgramError::InvertedBounds(key));
        }
        let j = self.variables.len();
        self.variables.push(Variable { key, lower, upper, integer });
        self.index.insert(key, j);
        Ok(j)
    }

    pub fn add_binary(&mut self, key: VariableKey) -> Result<usize, ProgramError> {
        self.add_variable(key, 0.0, 1.0, true)
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.constraints.push(Constraint { name: name.into(), coeffs, sense, rhs });
        self.constraints.len() - 1
    }

    pub fn index_of(&self, key: &VariableKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn n_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().map(|&(j, c)| c * values[j]).sum::<f64>()
    }

    /// Checks the structural invariants of the container.
    pub fn validate(&self) -> Result<(), ProgramError> {
        for v in &self.variables {
            if v.lower > v.upper {
                return Err(ProgramError::InvertedBounds(v.key));
            }
        }
        let n = self.variables.len();
        for c in &self.constraints {
            if let Some(&(index, _)) = c.coeffs.iter().find(|&&(j, _)| j >= n) {
                return Err(ProgramError::DanglingReference { name: c.name.clone(), index });
            }
        }
        Ok(())
    }

    /// Largest row or bound violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(values));
        let bounds = self
            .variables
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    /// Whether `values` satisfies every row and bound within `tol` and every
    /// integer variable is integral within `int_tol`.
    pub fn is_feasible(&self, values: &[f64], tol: f64, int_tol: f64) -> bool {
        values.len() == self.variables.len()
            && self.max_violation(values) <= tol
            && self
                .variables
                .iter()
                .zip(values)
                .all(|(v, &x)| !v.integer || (x - x.round()).abs() <= int_tol)
    }

    /// Same program with every integrality flag cleared.
    pub fn relax(&self) -> LinearProgram {
        let mut lp = self.clone();
        for v in &mut lp.variables {
            v.integer = false;
        }
        lp
    }

    /// Tightens the bounds of each listed variable to `[v, v]`.
    pub fn fix_variables(&self, fixings: &[(VariableKey, f64)]) -> Result<LinearProgram, ProgramError> {
        let mut lp = self.clone();
        let mut seen: HashMap<VariableKey, f64> = HashMap::new();
        for &(key, value) in fixings {
            if let Some(&prev) = seen.get(&key) {
                if prev != value {
                    return Err(ProgramError::ConflictingFixing(key));
                }
            }
            seen.insert(key, value);
            let j = lp.index_of(&key).ok_or(ProgramError::UnknownKey(key))?;
            lp.variables[j].lower = value;
            lp.variables[j].upper = value;
        }
        Ok(lp)
    }
}
