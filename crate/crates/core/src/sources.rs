//! Source-state constructors: Bell pairs, parametric pair-number terms, and
//! the pair-number weight function of a down-conversion source.

use crate::amp::{Amp, Cf64};
use crate::error::{CoreError, Result};
use crate::fock::{FockState, ModeRegistry};
use crate::state::PureState;

/// The four maximally entangled two-photon states.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum BellState {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PsiPlus,
        BellState::PsiMinus,
        BellState::PhiPlus,
        BellState::PhiMinus,
    ];

    pub fn index(self) -> usize {
        match self {
            BellState::PsiPlus => 0,
            BellState::PsiMinus => 1,
            BellState::PhiPlus => 2,
            BellState::PhiMinus => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
        }
    }
}

impl std::fmt::Display for BellState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// What to place on a pair of detector units.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SourceKind {
    Bell(BellState),
    /// `n`-pair term of a down-conversion source (2n photons).
    SpdcPair(u32),
    Vacuum,
}

/// A source and the two detector units it occupies.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub units: (usize, usize),
}

/// Builds the source state over `registry`, leaving all other modes in
/// vacuum. Bell states come out normalized; `SpdcPair(n)` has norm `n + 1`
/// (its normalization constant `1/sqrt(n + 1)` is irrational for most `n`,
/// and probability queries divide by the norm anyway).
pub fn make_source_state<A: Amp>(spec: SourceSpec, registry: &ModeRegistry) -> Result<PureState<A>> {
    let (u1, u2) = spec.units;
    if u1 >= registry.unit_count() || u2 >= registry.unit_count() || u1 == u2 {
        return Err(CoreError::ModeOutOfRange {
            index: u1.max(u2),
            count: registry.unit_count(),
        });
    }
    let modes = registry.mode_count();
    let (a1, b1) = (registry.a_bin(u1), registry.b_bin(u1));
    let (a2, b2) = (registry.a_bin(u2), registry.b_bin(u2));
    let mut state = PureState::empty(registry.clone());
    let term = |pairs: &[(usize, u8)]| {
        let mut occ = FockState::vacuum(modes);
        for &(m, n) in pairs {
            occ.set(m, n);
        }
        occ
    };
    match spec.kind {
        SourceKind::Vacuum => {
            state.accumulate(FockState::vacuum(modes), A::one())?;
        }
        SourceKind::Bell(which) => {
            let half = A::from_parts(1, 0, 1);
            let (first, second, negate) = match which {
                BellState::PsiPlus => ((a1, b2), (b1, a2), false),
                BellState::PsiMinus => ((a1, b2), (b1, a2), true),
                BellState::PhiPlus => ((a1, a2), (b1, b2), false),
                BellState::PhiMinus => ((a1, a2), (b1, b2), true),
            };
            state.accumulate(term(&[(first.0, 1), (first.1, 1)]), half.clone())?;
            let amp = if negate { half.neg() } else { half };
            state.accumulate(term(&[(second.0, 1), (second.1, 1)]), amp)?;
        }
        SourceKind::SpdcPair(n) => {
            // (a1 a2 + b1 b2)^n |0> = sum_k C(n,k) (a1 a2)^k (b1 b2)^(n-k) |0>.
            // The state is stored scaled by n! relative to the textbook
            // normalization so that coefficients stay integral; probability
            // queries divide by the norm, which is (n+1) * (n!)^2.
            let n = u8::try_from(n).map_err(|_| CoreError::Overflow("pair number"))?;
            for k in 0..=n {
                let c = A::one().scale_int(crate::comb::binomial(n as u64, k as u64)?)?;
                state.accumulate(term(&[(a1, k), (a2, k), (b1, n - k), (b2, n - k)]), c)?;
            }
        }
    }
    Ok(state)
}

/// Float-engine convenience: same as [`make_source_state`] but normalized.
pub fn make_source_state_normalized(
    spec: SourceSpec,
    registry: &ModeRegistry,
) -> Result<PureState<Cf64>> {
    let mut s = make_source_state::<Cf64>(spec, registry)?;
    s.normalize()?;
    Ok(s)
}

/// Pair-number amplitude weight `w(n, tau) = sqrt(n + 1) sech^2(tau) tanh^n(tau)`
/// of a down-conversion source; `sum_n w^2 = 1`.
pub fn spdc_weight(n: u32, tau: f64) -> f64 {
    let sech2 = 1.0 / tau.cosh().powi(2);
    let t = tau.tanh();
    ((n as f64) + 1.0).sqrt() * sech2 * t.powi(n as i32)
}

/// Mean photon-pair number `sum_n n w^2(n, tau) = 2 sinh^2(tau)`.
pub fn mean_pair_number(tau: f64) -> f64 {
    2.0 * tau.sinh().powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amp::ExactAmp;

    fn registry() -> ModeRegistry {
        ModeRegistry::new(2)
    }

    fn spec(kind: SourceKind) -> SourceSpec {
        SourceSpec { kind, units: (0, 1) }
    }

    #[test]
    fn bell_states_have_two_normalized_terms() {
        for which in BellState::ALL {
            let s = make_source_state::<Cf64>(spec(SourceKind::Bell(which)), &registry()).unwrap();
            assert_eq!(s.term_count(), 2);
            assert!((s.norm_sqr().unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn psi_plus_amplitudes() {
        let s = make_source_state::<Cf64>(spec(SourceKind::Bell(BellState::PsiPlus)), &registry())
            .unwrap();
        // (a1 b2 + b1 a2)/sqrt(2): modes ordered a1,b1,a2,b2
        let t1 = FockState::from_occupations(&[1, 0, 0, 1]);
        let t2 = FockState::from_occupations(&[0, 1, 1, 0]);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.fock_amplitude(&t1).unwrap().re - r).abs() < 1e-12);
        assert!((s.fock_amplitude(&t2).unwrap().re - r).abs() < 1e-12);
    }

    #[test]
    fn bell_states_are_orthonormal() {
        let states: Vec<_> = BellState::ALL
            .iter()
            .map(|&b| make_source_state::<Cf64>(spec(SourceKind::Bell(b)), &registry()).unwrap())
            .collect();
        for (i, si) in states.iter().enumerate() {
            for (j, sj) in states.iter().enumerate() {
                let ip = si.inner(sj).unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip.re - expect).abs() < 1e-12, "inner({i},{j}) = {ip}");
                assert!(ip.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spdc_pair_zero_is_vacuum() {
        let s = make_source_state::<ExactAmp>(spec(SourceKind::SpdcPair(0)), &registry()).unwrap();
        assert_eq!(s.term_count(), 1);
        assert_eq!(s.norm_sqr().unwrap(), num_rational::Ratio::new(1, 1));
    }

    #[test]
    fn spdc_pair_term_counts_and_norm() {
        for n in 0..=6u32 {
            let s =
                make_source_state::<ExactAmp>(spec(SourceKind::SpdcPair(n)), &registry()).unwrap();
            assert_eq!(s.term_count(), (n + 1) as usize);
            let nf = crate::comb::factorial(n as u8).unwrap() as i128;
            assert_eq!(
                s.norm_sqr().unwrap(),
                num_rational::Ratio::new((n as i128 + 1) * nf * nf, 1),
                "norm of {n}-pair term"
            );
            assert_eq!(s.definite_photon_number(), Some(2 * n));
            // Pair configurations are equally likely.
            for (_, p) in s.probabilities().unwrap() {
                assert_eq!(p, num_rational::Ratio::new(1, (n as i128) + 1));
            }
        }
    }

    #[test]
    fn spdc_pair_two_matches_polynomial_expansion_oracle() {
        // Independent oracle: expand (a1 a2 + b1 b2)^n by repeated
        // multiplication of monomial maps, then compare probabilities.
        fn oracle(n: usize) -> std::collections::BTreeMap<[u8; 4], u128> {
            let mut poly = std::collections::BTreeMap::new();
            poly.insert([0u8, 0, 0, 0], 1u128);
            for _ in 0..n {
                let mut next = std::collections::BTreeMap::new();
                for (occ, coef) in &poly {
                    for add in [[1u8, 0, 1, 0], [0, 1, 0, 1]] {
                        let mut o = *occ;
                        for i in 0..4 {
                            o[i] += add[i];
                        }
                        *next.entry(o).or_insert(0) += coef;
                    }
                }
                poly = next;
            }
            poly
        }
        let n = 2;
        let s = make_source_state::<ExactAmp>(spec(SourceKind::SpdcPair(n)), &registry()).unwrap();
        let poly = oracle(n as usize);
        assert_eq!(poly.len(), s.term_count());
        for (occ, coef) in &poly {
            let fock = FockState::from_occupations(occ);
            let got = s.coefficient(&fock);
            assert_eq!(
                got.gaussian_parts(),
                (*coef as i128, 0, 0),
                "coefficient of {fock}"
            );
        }
        // Probabilities are uniform 1/(n+1) = 1/3.
        for (_, p) in s.probabilities().unwrap() {
            assert_eq!(p, num_rational::Ratio::new(1, 3));
        }
    }

    #[test]
    fn spdc_terms_with_distinct_pair_number_are_orthogonal() {
        let s2 = make_source_state_normalized(spec(SourceKind::SpdcPair(2)), &registry()).unwrap();
        let s3 = make_source_state_normalized(spec(SourceKind::SpdcPair(3)), &registry()).unwrap();
        let ip = s2.inner(&s3).unwrap();
        assert_eq!(ip.re, 0.0);
        assert_eq!(ip.im, 0.0);
    }

    #[test]
    fn weight_function_normalization_and_mean() {
        assert_eq!(spdc_weight(0, 0.0), 1.0);
        for n in 1..6 {
            assert_eq!(spdc_weight(n, 0.0), 0.0);
        }
        for &tau in &[0.3, 0.67, 1.1] {
            let sum: f64 = (0..200).map(|n| spdc_weight(n, tau).powi(2)).sum();
            assert!((sum - 1.0).abs() < 1e-10, "sum w^2 at tau={tau}: {sum}");
            let mean_series: f64 = (0..500)
                .map(|n| n as f64 * spdc_weight(n, tau).powi(2))
                .sum();
            assert!(
                (mean_series - mean_pair_number(tau)).abs() < 1e-9,
                "mean pair number at tau={tau}"
            );
        }
        assert_eq!(mean_pair_number(0.0), 0.0);
        // tau = 0.67 corresponds to roughly one pair on average.
        assert!((mean_pair_number(0.67) - 1.04).abs() < 0.005);
    }
}
