//! Linear objective, linear constraints and second-order cones over named
//! real variables.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub usize);

/// `Σ coef·var + constant`. Repeated variables are allowed and summed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Affine {
    pub terms: Vec<(Var, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Affine { terms: Vec::new(), constant: c }
    }

    pub fn term(v: Var, coef: f64) -> Self {
        Affine {
            terms: vec![(v, coef)],
            constant: 0.0,
        }
    }

    pub fn add_term(&mut self, v: Var, coef: f64) -> &mut Self {
        self.terms.push((v, coef));
        self
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v.0]).sum::<f64>() + self.constant
    }

    /// True when no variable has a nonzero net coefficient.
    pub fn is_constant(&self) -> bool {
        let mut merged = self.terms.clone();
        merged.sort_by_key(|t| t.0);
        let mut i = 0;
        while i < merged.len() {
            let mut sum = 0.0;
            let v = merged[i].0;
            while i < merged.len() && merged[i].0 == v {
                sum += merged[i].1;
                i += 1;
            }
            if sum != 0.0 {
                return false;
            }
        }
        true
    }

    pub fn scaled(mut self, k: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= k;
        }
        self.constant *= k;
        self
    }

    fn is_finite(&self) -> bool {
        self.constant.is_finite() && self.terms.iter().all(|t| t.1.is_finite())
    }
}

impl From<Var> for Affine {
    fn from(v: Var) -> Self {
        Affine::term(v, 1.0)
    }
}

impl From<f64> for Affine {
    fn from(c: f64) -> Self {
        Affine::constant(c)
    }
}

impl<T: Into<Affine>> Add<T> for Affine {
    type Output = Affine;
    fn add(mut self, rhs: T) -> Affine {
        let rhs = rhs.into();
        self.terms.extend(rhs.terms);
        self.constant += rhs.constant;
        self
    }
}

impl<T: Into<Affine>> Sub<T> for Affine {
    type Output = Affine;
    fn sub(self, rhs: T) -> Affine {
        self + rhs.into().scaled(-1.0)
    }
}

impl Neg for Affine {
    type Output = Affine;
    fn neg(self) -> Affine {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for Affine {
    type Output = Affine;
    fn mul(self, k: f64) -> Affine {
        self.scaled(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone)]
pub struct Labeled<T> {
    pub label: String,
    pub item: T,
}

/// A second-order cone program in modelling form.
///
/// Inequalities are stored as `expr ≤ 0`, equalities as `expr = 0`, and each
/// cone as a list `[e₀, e₁, …]` meaning `e₀ ≥ ‖(e₁, …)‖`.
#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub sense: Sense,
    pub objective: Affine,
    pub names: Vec<String>,
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
    pub inequalities: Vec<Labeled<Affine>>,
    pub equalities: Vec<Labeled<Affine>>,
    pub cones: Vec<Labeled<Vec<Affine>>>,
}

impl ConicProblem {
    pub fn new(sense: Sense) -> Self {
        ConicProblem {
            sense,
            objective: Affine::default(),
            names: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            inequalities: Vec::new(),
            equalities: Vec::new(),
            cones: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> Var {
        self.names.push(name.into());
        self.lower.push(None);
        self.upper.push(None);
        Var(self.names.len() - 1)
    }

    pub fn add_nonneg(&mut self, name: impl Into<String>) -> Var {
        let v = self.add_var(name);
        self.lower[v.0] = Some(0.0);
        v
    }

    pub fn set_bounds(&mut self, v: Var, lower: Option<f64>, upper: Option<f64>) {
        self.lower[v.0] = lower;
        self.upper[v.0] = upper;
    }

    pub fn set_objective(&mut self, objective: impl Into<Affine>) {
        self.objective = objective.into();
    }

    pub fn le(&mut self, lhs: impl Into<Affine>, rhs: impl Into<Affine>, label: impl Into<String>) {
        self.inequalities.push(Labeled {
            label: label.into(),
            item: lhs.into() - rhs.into(),
        });
    }

    pub fn ge(&mut self, lhs: impl Into<Affine>, rhs: impl Into<Affine>, label: impl Into<String>) {
        self.le(rhs, lhs, label);
    }

    pub fn eq(&mut self, lhs: impl Into<Affine>, rhs: impl Into<Affine>, label: impl Into<String>) {
        self.equalities.push(Labeled {
            label: label.into(),
            item: lhs.into() - rhs.into(),
        });
    }

    /// `entries[0] ≥ ‖entries[1..]‖`.
    pub fn cone(&mut self, entries: Vec<Affine>, label: impl Into<String>) {
        self.cones.push(Labeled {
            label: label.into(),
            item: entries,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn num_cones(&self) -> usize {
        self.cones.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let check = |a: &Affine, what: &str| -> Result<()> {
            if !a.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite coefficient in {what}")));
            }
            if let Some(&(v, _)) = a.terms.iter().find(|t| t.0 .0 >= n) {
                return Err(Error::InvalidParameter(format!("{what} references unknown variable {}", v.0)));
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for c in self.inequalities.iter().chain(&self.equalities) {
            check(&c.item, &c.label)?;
        }
        for c in &self.cones {
            if c.item.len() < 2 {
                return Err(Error::InvalidParameter(format!("cone {} has fewer than 2 entries", c.label)));
            }
            for e in &c.item {
                check(e, &c.label)?;
            }
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo.is_some_and(|v| !v.is_finite()) || hi.is_some_and(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("non-finite bound on {}", self.names[i])));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.evaluate(x)
    }

    /// Largest constraint violation at `x` and the label of the worst one.
    pub fn max_violation(&self, x: &[f64]) -> (f64, String) {
        self.violation(x, false)
    }

    /// Like [`Self::max_violation`], with each violation divided by
    /// `1 + magnitude` of the terms in that constraint.
    pub fn max_scaled_violation(&self, x: &[f64]) -> (f64, String) {
        self.violation(x, true)
    }

    fn violation(&self, x: &[f64], scaled: bool) -> (f64, String) {
        let size = |a: &Affine| {
            if scaled {
                1.0 + a.terms.iter().map(|&(v, c)| (c * x[v.0]).abs()).fold(a.constant.abs(), f64::max)
            } else {
                1.0
            }
        };
        let mut worst = (0.0, String::new());
        let mut note = |v: f64, label: &str| {
            if v > worst.0 {
                worst = (v, label.to_string());
            }
        };
        for (i, name) in self.names.iter().enumerate() {
            let s = if scaled { 1.0 + x[i].abs() } else { 1.0 };
            if let Some(lo) = self.lower[i] {
                note((lo - x[i]) / s, name);
            }
            if let Some(hi) = self.upper[i] {
                note((x[i] - hi) / s, name);
            }
        }
        for c in &self.inequalities {
            note(c.item.evaluate(x) / size(&c.item), &c.label);
        }
        for c in &self.equalities {
            note(c.item.evaluate(x).abs() / size(&c.item), &c.label);
        }
        for c in &self.cones {
            let head = c.item[0].evaluate(x);
            let tail = c.item[1..].iter().map(|e| e.evaluate(x).powi(2)).sum::<f64>().sqrt();
            let s = c.item.iter().map(size).fold(1.0, f64::max);
            note((tail - head) / s, &c.label);
        }
        worst
    }
}
