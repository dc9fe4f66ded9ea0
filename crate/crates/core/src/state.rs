//! Sparse pure states over an occupation-number basis.
//!
//! Terms store the coefficient of the creation-operator monomial
//! `prod_m (a_m^dag)^(n_m) |0>`, not the normalized Fock amplitude; the two
//! differ by `sqrt(prod_m n_m!)`. The monomial convention keeps transform
//! algebra integer-friendly for the exact scalar. All probability queries
//! divide by the state norm, so exact states may be held unnormalized (for
//! instance when the normalization constant is irrational).

use std::collections::BTreeMap;

use crate::amp::{Amp, Cf64, Prob};
use crate::comb::occupancy_factorial;
use crate::error::{CoreError, Result};
use crate::fock::{FockState, LossOrigin, ModeRegistry};

#[derive(Clone, Debug)]
pub struct PureState<A: Amp> {
    registry: ModeRegistry,
    pub(crate) terms: BTreeMap<FockState, A>,
}

impl<A: Amp> PureState<A> {
    pub fn vacuum(registry: ModeRegistry) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(FockState::vacuum(registry.mode_count()), A::one());
        PureState { registry, terms }
    }

    pub fn empty(registry: ModeRegistry) -> Self {
        PureState { registry, terms: BTreeMap::new() }
    }

    pub fn registry(&self) -> &ModeRegistry {
        &self.registry
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FockState, &A)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, state: &FockState) -> A {
        self.terms.get(state).cloned().unwrap_or_else(A::zero)
    }

    /// Adds `coeff * |monomial>` into the state.
    pub fn accumulate(&mut self, state: FockState, coeff: A) -> Result<()> {
        debug_assert_eq!(state.mode_count(), self.registry.mode_count());
        match self.terms.entry(state) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().add(&coeff)?;
                if sum.is_zero() {
                    e.remove();
                } else {
                    e.insert(sum);
                }
            }
        }
        Ok(())
    }

    /// Drops terms whose squared magnitude is negligible for the scalar type.
    pub fn prune(&mut self) {
        self.terms.retain(|_, c| !c.should_prune());
    }

    /// `<state|state>`, including the occupancy factorials.
    pub fn norm_sqr(&self) -> Result<A::Prob> {
        let mut acc = A::Prob::zero();
        for (s, c) in &self.terms {
            let f = occupancy_factorial(s.occupations())?;
            acc = acc.add(&c.norm_sqr().mul(&A::Prob::from_integer(f)));
        }
        Ok(acc)
    }

    /// Basis-state probabilities `|<n|state>|^2 / <state|state>`.
    pub fn probabilities(&self) -> Result<Vec<(FockState, A::Prob)>> {
        let norm = self.norm_sqr()?;
        let mut out = Vec::with_capacity(self.terms.len());
        for (s, c) in &self.terms {
            let f = occupancy_factorial(s.occupations())?;
            let p = c.norm_sqr().mul(&A::Prob::from_integer(f)).div(&norm);
            out.push((s.clone(), p));
        }
        Ok(out)
    }

    /// Total photon number if every term agrees, else `None`.
    pub fn definite_photon_number(&self) -> Option<u32> {
        let mut it = self.terms.keys().map(|s| s.total());
        let first = it.next()?;
        it.all(|t| t == first).then_some(first)
    }

    /// Tensor product of two states over the same registry occupying disjoint
    /// mode sets.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.registry != other.registry {
            return Err(CoreError::RegistryMismatch);
        }
        let mode_count = self.registry.mode_count();
        let mut occupied = vec![false; mode_count];
        for s in self.terms.keys() {
            for (m, &n) in s.occupations().iter().enumerate() {
                if n > 0 {
                    occupied[m] = true;
                }
            }
        }
        for s in other.terms.keys() {
            for (m, &n) in s.occupations().iter().enumerate() {
                if n > 0 && occupied[m] {
                    return Err(CoreError::OverlappingSupport);
                }
            }
        }
        let mut out = PureState::empty(self.registry.clone());
        for (sa, ca) in &self.terms {
            for (sb, cb) in &other.terms {
                let mut occ = sa.clone();
                for m in 0..mode_count {
                    occ.set(m, sa.get(m) + sb.get(m));
                }
                out.accumulate(occ, ca.mul(cb)?)?;
            }
        }
        Ok(out)
    }

    /// `<self|other>` for states over the same registry. Both states should
    /// be normalized for the textbook inner product.
    pub fn inner(&self, other: &Self) -> Result<A> {
        if self.registry != other.registry {
            return Err(CoreError::RegistryMismatch);
        }
        let mut acc = A::zero();
        for (s, ca) in &self.terms {
            if let Some(cb) = other.terms.get(s) {
                let f = occupancy_factorial(s.occupations())?;
                acc = acc.add(&ca.conj().mul(cb)?.scale_int(f)?)?;
            }
        }
        Ok(acc)
    }

    /// Returns the same state over a registry extended with one fresh loss
    /// mode, along with the new mode's index.
    pub fn with_new_loss_mode(&self, origin: LossOrigin, shadows: usize) -> Result<(Self, usize)> {
        let mut registry = self.registry.clone();
        let idx = registry.push_loss(origin, shadows)?;
        let terms = self
            .terms
            .iter()
            .map(|(s, c)| (s.extended(1), c.clone()))
            .collect();
        Ok((PureState { registry, terms }, idx))
    }
}

impl PureState<Cf64> {
    /// Normalized Fock amplitude `<n|state>` (includes occupancy factorials).
    pub fn fock_amplitude(&self, state: &FockState) -> Result<Cf64> {
        let c = self.coefficient(state);
        let f = occupancy_factorial(state.occupations())? as f64;
        Ok(c * f.sqrt())
    }

    /// Rescales so that the norm is exactly 1.
    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm_sqr()?;
        if norm <= 0.0 {
            return Err(CoreError::Invalid("cannot normalize the zero state".into()));
        }
        let inv = 1.0 / norm.sqrt();
        for c in self.terms.values_mut() {
            *c *= inv;
        }
        Ok(())
    }
}
