//! Item-type distributions, offline (divisible) instances and allocations.

use crate::error::{Error, Result};
use crate::scalar::{rational_from_f64, Rational, Scalar, Tol};

/// Largest denominator accepted when lifting float inputs to exact rationals.
pub const MAX_INPUT_DENOMINATOR: u64 = 1_000_000;

/// Finite-support distribution over item types together with every agent's
/// value for every type.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeDistribution {
    n: usize,
    probs: Vec<f64>,
    /// `values[i][j]`: agent `i`'s value for type `j`.
    values: Vec<Vec<f64>>,
    exact: Option<ExactParts>,
}

/// Exact copies of the inputs, kept when they are known as rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactParts {
    pub probs: Vec<Rational>,
    pub values: Vec<Vec<Rational>>,
}

impl TypeDistribution {
    /// `values` is agent-major: `values[i][j]` is agent `i`'s value for type `j`.
    pub fn new(probs: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::InvalidDistribution("no agents".into()));
        }
        let m = probs.len();
        if m == 0 {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Dimension(format!(
                    "agent {i} has {} values for {m} types",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::InvalidDistribution(format!(
                    "agent {i} has invalid value {v}"
                )));
            }
        }
        if let Some((j, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(**p > 0.0 && **p <= 1.0))
        {
            return Err(Error::InvalidDistribution(format!(
                "type {j} has probability {p}; zero-probability types must be removed"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(TypeDistribution {
            n,
            probs,
            values,
            exact: None,
        })
    }

    /// Builds from exact rationals; float copies are derived from them.
    pub fn from_exact(probs: Vec<Rational>, values: Vec<Vec<Rational>>) -> Result<Self> {
        let total: Rational = probs.iter().cloned().sum();
        if total != <Rational as Scalar>::one() {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let mut dist = TypeDistribution::new(
            probs.iter().map(Scalar::to_f64).collect(),
            values
                .iter()
                .map(|row| row.iter().map(Scalar::to_f64).collect())
                .collect(),
        )
        .map_err(|e| match e {
            // float rounding of an exactly-normalized distribution
            Error::InvalidDistribution(msg) if msg.contains("sum to") => {
                Error::InvalidDistribution(msg)
            }
            other => other,
        })?;
        dist.exact = Some(ExactParts { probs, values });
        Ok(dist)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, j: usize) -> f64 {
        self.probs[j]
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn value(&self, agent: usize, ty: usize) -> f64 {
        self.values[agent][ty]
    }

    /// Values of type `ty` to every agent.
    pub fn type_values(&self, ty: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[ty]).collect()
    }

    pub fn exact(&self) -> Option<&ExactParts> {
        self.exact.as_ref()
    }

    /// All values in `[0, 1]`, the normalization the online model assumes.
    pub fn is_normalized(&self) -> bool {
        self.values.iter().flatten().all(|v| *v <= 1.0)
    }

    /// Same distribution with every agent's values divided by its maximum.
    pub fn normalized(&self) -> TypeDistribution {
        let values = self
            .values
            .iter()
            .map(|row| {
                let max = row.iter().cloned().fold(0.0, f64::max);
                row.iter()
                    .map(|v| if max > 0.0 { v / max } else { 0.0 })
                    .collect()
            })
            .collect();
        TypeDistribution {
            n: self.n,
            probs: self.probs.clone(),
            values,
            exact: None,
        }
    }

    /// True when every agent values every type identically.
    pub fn is_point_mass(&self, tol: f64) -> bool {
        let first = self.values[0][0];
        self.values
            .iter()
            .flatten()
            .all(|v| (v - first).abs() <= tol)
    }

    pub(crate) fn lift_prob<S: Scalar + Lift>(&self, j: usize) -> Result<S> {
        S::lift(self.probs[j], self.exact.as_ref().map(|e| &e.probs[j]))
    }

    pub(crate) fn lift_value<S: Scalar + Lift>(&self, i: usize, j: usize) -> Result<S> {
        S::lift(
            self.values[i][j],
            self.exact.as_ref().map(|e| &e.values[i][j]),
        )
    }
}

/// Conversion of float inputs (with optional exact companions) into a scalar.
pub trait Lift: Sized {
    fn lift(x: f64, exact: Option<&Rational>) -> Result<Self>;
}

impl Lift for f64 {
    fn lift(x: f64, _exact: Option<&Rational>) -> Result<Self> {
        Ok(x)
    }
}

impl Lift for Rational {
    fn lift(x: f64, exact: Option<&Rational>) -> Result<Self> {
        if let Some(q) = exact {
            return Ok(q.clone());
        }
        rational_from_f64(x, MAX_INPUT_DENOMINATOR).ok_or_else(|| {
            Error::Exact(format!(
                "{x} is not a rational with denominator <= {MAX_INPUT_DENOMINATOR}"
            ))
        })
    }
}

/// Divisible-item instance for the Eisenberg-Gale program.
#[derive(Clone, Debug, PartialEq)]
pub struct OfflineInstance<S = f64> {
    values: Vec<Vec<S>>,
    budgets: Vec<S>,
    /// Original type index of every surviving item.
    kept: Vec<usize>,
    m_full: usize,
}

impl<S: Scalar> OfflineInstance<S> {
    /// Drops items nobody values; rejects agents who value nothing and
    /// nonpositive budgets.
    pub fn new(values: Vec<Vec<S>>, budgets: Vec<S>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::InvalidInstance("no agents".into()));
        }
        if budgets.len() != n {
            return Err(Error::Dimension(format!(
                "{} budgets for {n} agents",
                budgets.len()
            )));
        }
        let m_full = values[0].len();
        if values.iter().any(|r| r.len() != m_full) {
            return Err(Error::Dimension("ragged value matrix".into()));
        }
        if let Some(i) = budgets.iter().position(|e| !e.is_positive()) {
            return Err(Error::InvalidInstance(format!(
                "agent {i} has nonpositive budget"
            )));
        }
        if values.iter().flatten().any(|v| *v < S::zero()) {
            return Err(Error::InvalidInstance("negative value".into()));
        }
        let kept: Vec<usize> = (0..m_full)
            .filter(|&j| values.iter().any(|row| row[j].is_positive()))
            .collect();
        if kept.is_empty() {
            return Err(Error::InvalidInstance(
                "every agent values every item at 0; nothing to allocate".into(),
            ));
        }
        let values: Vec<Vec<S>> = values
            .into_iter()
            .map(|row| kept.iter().map(|&j| row[j].clone()).collect())
            .collect();
        if let Some(i) = values
            .iter()
            .position(|row| row.iter().all(|v| v.is_zero()))
        {
            return Err(Error::InvalidInstance(format!(
                "agent {i} values every item at 0; its log-utility is undefined"
            )));
        }
        Ok(OfflineInstance {
            values,
            budgets,
            kept,
            m_full,
        })
    }

    /// Equal budgets of 1.
    pub fn with_unit_budgets(values: Vec<Vec<S>>) -> Result<Self> {
        let n = values.len();
        Self::new(values, vec![S::one(); n])
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn m(&self) -> usize {
        self.kept.len()
    }

    /// Number of item types before zero-valued ones were dropped.
    pub fn m_full(&self) -> usize {
        self.m_full
    }

    pub fn values(&self) -> &[Vec<S>] {
        &self.values
    }

    pub fn value(&self, agent: usize, item: usize) -> &S {
        &self.values[agent][item]
    }

    pub fn budgets(&self) -> &[S] {
        &self.budgets
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    /// Item index of original type `ty`, if it survived.
    pub fn item_of_type(&self, ty: usize) -> Option<usize> {
        self.kept.binary_search(&ty).ok()
    }

    pub fn with_budgets(&self, budgets: Vec<S>) -> Result<Self> {
        if budgets.len() != self.n() {
            return Err(Error::Dimension("budget length".into()));
        }
        if budgets.iter().any(|e| !e.is_positive()) {
            return Err(Error::InvalidInstance("nonpositive budget".into()));
        }
        Ok(OfflineInstance {
            budgets,
            ..self.clone()
        })
    }

    /// Widens an allocation over surviving items to all original types;
    /// dropped columns are zero.
    pub fn expand(&self, alloc: &FractionalAllocation<S>) -> FractionalAllocation<S> {
        let shares = alloc
            .shares
            .iter()
            .map(|row| {
                let mut full = vec![S::zero(); self.m_full];
                for (k, &ty) in self.kept.iter().enumerate() {
                    full[ty] = row[k].clone();
                }
                full
            })
            .collect();
        FractionalAllocation { shares }
    }

    /// Inverse of [`expand`](Self::expand).
    pub fn restrict(&self, full: &FractionalAllocation<S>) -> FractionalAllocation<S> {
        let shares = full
            .shares
            .iter()
            .map(|row| self.kept.iter().map(|&ty| row[ty].clone()).collect())
            .collect();
        FractionalAllocation { shares }
    }

    /// Converts to another scalar through `f64`. Meant for float views of
    /// exact instances.
    pub fn to_f64(&self) -> OfflineInstance<f64> {
        OfflineInstance {
            values: self
                .values
                .iter()
                .map(|r| r.iter().map(Scalar::to_f64).collect())
                .collect(),
            budgets: self.budgets.iter().map(Scalar::to_f64).collect(),
            kept: self.kept.clone(),
            m_full: self.m_full,
        }
    }

    /// Whether all budgets are equal.
    pub fn equal_budgets(&self, tol: Tol) -> bool {
        self.budgets.iter().all(|e| tol.eq(e, &self.budgets[0]))
    }
}

/// Scales every agent's value for a type by the type's probability:
/// `v'_i(j) = v_i(j) * f(j)`. Types valued zero by everybody are dropped; the
/// returned instance keeps the map back to original type indices.
pub fn scale_values<S: Scalar + Lift>(
    dist: &TypeDistribution,
    budgets: &[S],
) -> Result<OfflineInstance<S>> {
    if budgets.len() != dist.n() {
        return Err(Error::Dimension(format!(
            "{} budgets for {} agents",
            budgets.len(),
            dist.n()
        )));
    }
    let mut values = Vec::with_capacity(dist.n());
    for i in 0..dist.n() {
        let mut row = Vec::with_capacity(dist.m());
        for j in 0..dist.m() {
            row.push(dist.lift_value::<S>(i, j)? * dist.lift_prob::<S>(j)?);
        }
        values.push(row);
    }
    OfflineInstance::new(values, budgets.to_vec())
}

/// `n x m` matrix of shares.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalAllocation<S = f64> {
    pub shares: Vec<Vec<S>>,
}

impl<S: Scalar> FractionalAllocation<S> {
    pub fn new(shares: Vec<Vec<S>>) -> Result<Self> {
        let alloc = FractionalAllocation { shares };
        alloc.validate()?;
        Ok(alloc)
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        FractionalAllocation {
            shares: vec![vec![S::zero(); m]; n],
        }
    }

    pub fn n(&self) -> usize {
        self.shares.len()
    }

    pub fn m(&self) -> usize {
        self.shares.first().map_or(0, Vec::len)
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.shares[i]
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.shares[i][j]
    }

    pub fn column_sum(&self, j: usize) -> S {
        self.shares.iter().map(|r| r[j].clone()).sum()
    }

    /// Entries within `[-1e-12, 1 + 1e-12]`, columns sum to at most `1 + 1e-9`.
    pub fn validate(&self) -> Result<()> {
        let m = self.m();
        if self.shares.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("ragged allocation".into()));
        }
        let lo = S::from_ratio(-1, 1_000_000_000_000);
        let hi = S::one() - lo.clone();
        for (i, row) in self.shares.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                if *x < lo || *x > hi {
                    return Err(Error::InvalidInstance(format!(
                        "share x[{i}][{j}] = {x} out of [0,1]"
                    )));
                }
            }
        }
        let col_hi = S::one() + S::from_ratio(1, 1_000_000_000);
        for j in 0..m {
            let s = self.column_sum(j);
            if s > col_hi {
                return Err(Error::InvalidInstance(format!("column {j} sums to {s}")));
            }
        }
        Ok(())
    }

    /// Clamps entries into `[0, 1]`.
    pub fn clamped(mut self) -> Self {
        for x in self.shares.iter_mut().flatten() {
            if *x < S::zero() {
                *x = S::zero();
            } else if *x > S::one() {
                *x = S::one();
            }
        }
        self
    }

    pub fn to_f64(&self) -> FractionalAllocation<f64> {
        FractionalAllocation {
            shares: self
                .shares
                .iter()
                .map(|r| r.iter().map(Scalar::to_f64).collect())
                .collect(),
        }
    }
}

/// Linear value of a fractional bundle: `sum_k v_ik * row_k`.
pub fn fractional_value<S: Scalar>(agent: usize, row: &[S], instance: &OfflineInstance<S>) -> S {
    dot(&instance.values[agent], row)
}

pub(crate) fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(x, y)| x.clone() * y.clone()).sum()
}

/// Additive value of an integral bundle; `item_values[t][i]` is agent `i`'s
/// value for item `t`.
pub fn bundle_value(agent: usize, bundle: &[usize], item_values: &[Vec<f64>]) -> f64 {
    bundle.iter().map(|&t| item_values[t][agent]).sum()
}

/// A partition of arrived items into bundles, with the realized values.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegralAllocation {
    pub bundles: Vec<Vec<usize>>,
    /// `item_values[t][i]`: agent `i`'s value for item `t`.
    pub item_values: Vec<Vec<f64>>,
}

impl IntegralAllocation {
    pub fn empty(n: usize) -> Self {
        IntegralAllocation {
            bundles: vec![Vec::new(); n],
            item_values: Vec::new(),
        }
    }

    /// Builds from per-item owners.
    pub fn from_assignments(
        n: usize,
        owners: &[usize],
        item_values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if owners.len() != item_values.len() {
            return Err(Error::Dimension("owners vs items".into()));
        }
        let mut bundles = vec![Vec::new(); n];
        for (t, &i) in owners.iter().enumerate() {
            if i >= n {
                return Err(Error::Dimension(format!(
                    "item {t} assigned to agent {i} of {n}"
                )));
            }
            bundles[i].push(t);
        }
        Ok(IntegralAllocation {
            bundles,
            item_values,
        })
    }

    pub fn n(&self) -> usize {
        self.bundles.len()
    }

    pub fn items(&self) -> usize {
        self.item_values.len()
    }

    pub fn value(&self, agent: usize, owner: usize) -> f64 {
        bundle_value(agent, &self.bundles[owner], &self.item_values)
    }

    pub fn utilities(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.value(i, i)).collect()
    }

    /// Owner of every item, `None` when some item is unassigned or assigned twice.
    pub fn owners(&self) -> Option<Vec<usize>> {
        let mut owners = vec![usize::MAX; self.items()];
        for (i, bundle) in self.bundles.iter().enumerate() {
            for &t in bundle {
                if t >= owners.len() || owners[t] != usize::MAX {
                    return None;
                }
                owners[t] = i;
            }
        }
        owners.iter().all(|&o| o != usize::MAX).then_some(owners)
    }
}
