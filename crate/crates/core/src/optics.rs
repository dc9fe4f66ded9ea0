//! Linear mode transforms and their action on pure states.
//!
//! A [`LinearTransform`] substitutes creation operators: for each input mode
//! `m` in its mode list, `a_m^dag -> sum_j M[m][j] a_j^dag`. Applying one to
//! a state expands each monomial term through per-mode multinomial
//! compositions and re-collects terms, which conserves photon number and
//! (for unitary matrices) the norm.

use smallvec::SmallVec;

use crate::amp::{Amp, Cf64, Prob};
use crate::comb::multinomial;
use crate::error::{CoreError, Result};
use crate::fock::LossOrigin;
use crate::state::PureState;

#[derive(Clone, Debug)]
pub struct LinearTransform<A: Amp> {
    /// Registry mode indices the transform acts on (rows and columns).
    modes: Vec<usize>,
    /// `matrix[i][j]`: coefficient of output mode `modes[j]` in the
    /// substitution of input mode `modes[i]`.
    matrix: Vec<Vec<A>>,
}

impl<A: Amp> LinearTransform<A> {
    pub fn new(modes: Vec<usize>, matrix: Vec<Vec<A>>) -> Result<Self> {
        let n = modes.len();
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(CoreError::Invalid("transform matrix must be square".into()));
        }
        let mut sorted = modes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != n {
            return Err(CoreError::Invalid("transform modes must be distinct".into()));
        }
        Ok(LinearTransform { modes, matrix })
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn matrix(&self) -> &[Vec<A>] {
        &self.matrix
    }

    /// Identity on the given modes.
    pub fn identity(modes: Vec<usize>) -> Self {
        let n = modes.len();
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| if i == j { A::one() } else { A::zero() }).collect())
            .collect();
        LinearTransform { modes, matrix }
    }

    /// Checks `M M^dag = I`; the tolerance only matters for the float scalar.
    pub fn validate_unitary(&self) -> Result<()> {
        let n = self.modes.len();
        for i in 0..n {
            for k in 0..n {
                let mut acc = A::zero();
                for j in 0..n {
                    acc = acc.add(&self.matrix[i][j].mul(&self.matrix[k][j].conj())?)?;
                }
                let expected = if i == k { A::one() } else { A::zero() };
                let diff = acc.add(&expected.neg())?;
                if diff.norm_sqr().to_f64() > 1e-24 {
                    return Err(CoreError::NotUnitary);
                }
            }
        }
        Ok(())
    }

    /// Matrix of applying `self` first and `then` second, over the union of
    /// their mode sets.
    pub fn compose(&self, then: &Self) -> Result<Self> {
        let mut modes: Vec<usize> = self.modes.iter().chain(then.modes.iter()).copied().collect();
        modes.sort_unstable();
        modes.dedup();
        let n = modes.len();
        let pos = |m: usize| modes.iter().position(|&x| x == m).unwrap();
        let embed = |t: &Self| -> Vec<Vec<A>> {
            let mut full: Vec<Vec<A>> = (0..n)
                .map(|i| (0..n).map(|j| if i == j { A::one() } else { A::zero() }).collect())
                .collect();
            for (ti, &mi) in t.modes.iter().enumerate() {
                let row = pos(mi);
                full[row].fill(A::zero());
                for (tj, &mj) in t.modes.iter().enumerate() {
                    full[row][pos(mj)] = t.matrix[ti][tj].clone();
                }
            }
            full
        };
        let a = embed(self);
        let b = embed(then);
        let mut matrix = vec![vec![A::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = A::zero();
                for k in 0..n {
                    acc = acc.add(&a[i][k].mul(&b[k][j])?)?;
                }
                matrix[i][j] = acc;
            }
        }
        Ok(LinearTransform { modes, matrix })
    }

    /// Applies the substitution to every term of `state`.
    pub fn apply(&self, state: &PureState<A>) -> Result<PureState<A>> {
        let registry = state.registry().clone();
        let mode_count = registry.mode_count();
        for &m in &self.modes {
            if m >= mode_count {
                return Err(CoreError::ModeOutOfRange { index: m, count: mode_count });
            }
        }
        let span = self.modes.len();
        let mut out = PureState::empty(registry);

        // Entry powers are computed lazily per (row, col, exponent).
        let max_photons: u8 = state
            .terms()
            .flat_map(|(s, _)| self.modes.iter().map(|&m| s.get(m)))
            .max()
            .unwrap_or(0);
        let mut powers: Vec<Vec<Vec<A>>> = vec![vec![Vec::new(); span]; span];
        for (i, row) in powers.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let mut acc = A::one();
                cell.push(acc.clone());
                for _ in 0..max_photons {
                    acc = acc.mul(&self.matrix[i][j])?;
                    cell.push(acc.clone());
                }
            }
        }

        // delta over the transform's modes, paired with the running coefficient
        type Partial<A> = (SmallVec<[u8; 8]>, A);
        let mut compositions_buf: Vec<SmallVec<[u8; 8]>> = Vec::new();

        for (occ, coeff) in state.terms() {
            let mut partials: Vec<Partial<A>> = vec![(smallvec::smallvec![0; span], coeff.clone())];
            for (i, &mode) in self.modes.iter().enumerate() {
                let p = occ.get(mode);
                if p == 0 {
                    continue;
                }
                compositions_buf.clear();
                compositions(p, span, &mut compositions_buf);
                let mut next: Vec<Partial<A>> = Vec::with_capacity(partials.len() * compositions_buf.len());
                for comp in &compositions_buf {
                    // Skip compositions routed through zero matrix entries.
                    if comp
                        .iter()
                        .enumerate()
                        .any(|(j, &k)| k > 0 && self.matrix[i][j].is_zero())
                    {
                        continue;
                    }
                    let mult = multinomial(comp)?;
                    for (delta, c) in &partials {
                        let mut c2 = c.scale_int(mult)?;
                        for (j, &k) in comp.iter().enumerate() {
                            if k > 0 {
                                c2 = c2.mul(&powers[i][j][k as usize])?;
                            }
                        }
                        if c2.is_zero() {
                            continue;
                        }
                        let mut d2 = delta.clone();
                        for (j, &k) in comp.iter().enumerate() {
                            d2[j] += k;
                        }
                        next.push((d2, c2));
                    }
                }
                partials = next;
            }
            for (delta, c) in partials {
                let mut new_occ = occ.clone();
                for &m in &self.modes {
                    new_occ.set(m, 0);
                }
                for (j, &k) in delta.iter().enumerate() {
                    let m = self.modes[j];
                    new_occ.set(m, new_occ.get(m) + k);
                }
                out.accumulate(new_occ, c)?;
            }
        }
        out.prune();
        Ok(out)
    }
}

/// All ways to split `p` photons over `parts` output slots.
fn compositions(p: u8, parts: usize, out: &mut Vec<SmallVec<[u8; 8]>>) {
    fn rec(remaining: u8, slot: usize, parts: usize, cur: &mut SmallVec<[u8; 8]>, out: &mut Vec<SmallVec<[u8; 8]>>) {
        if slot == parts - 1 {
            cur.push(remaining);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=remaining {
            cur.push(k);
            rec(remaining - k, slot + 1, parts, cur, out);
            cur.pop();
        }
    }
    let mut cur = SmallVec::new();
    rec(p, 0, parts, &mut cur, out);
}

/// Balanced (50/50) beam splitter `(1, i; i, 1)/sqrt(2)` on two modes.
pub fn balanced_beam_splitter<A: Amp>(m1: usize, m2: usize) -> LinearTransform<A> {
    let one = || A::from_parts(1, 0, 1);
    let i = || A::from_parts(0, 1, 1);
    LinearTransform::new(vec![m1, m2], vec![vec![one(), i()], vec![i(), one()]])
        .expect("valid 2x2 transform")
}

/// The four-mode network of the enhanced analyzer:
/// `(1, i, i, -1; i, 1, -1, i; i, -1, 1, i; -1, i, i, 1)/2`.
pub fn enhanced_four_mode_transform<A: Amp>(modes: [usize; 4]) -> LinearTransform<A> {
    let e = |re: i64, im: i64| A::from_parts(re, im, 2);
    let matrix = vec![
        vec![e(1, 0), e(0, 1), e(0, 1), e(-1, 0)],
        vec![e(0, 1), e(1, 0), e(-1, 0), e(0, 1)],
        vec![e(0, 1), e(-1, 0), e(1, 0), e(0, 1)],
        vec![e(-1, 0), e(0, 1), e(0, 1), e(1, 0)],
    ];
    LinearTransform::new(modes.to_vec(), matrix).expect("valid 4x4 transform")
}

/// The enhanced network as a sequence of four balanced beam splitters:
/// pairs (1,3) and (2,4), then pairs (1,2) and (3,4). Composing them in
/// order reproduces [`enhanced_four_mode_transform`] exactly.
pub fn enhanced_network_decomposition<A: Amp>(modes: [usize; 4]) -> Vec<LinearTransform<A>> {
    vec![
        balanced_beam_splitter(modes[0], modes[2]),
        balanced_beam_splitter(modes[1], modes[3]),
        balanced_beam_splitter(modes[0], modes[1]),
        balanced_beam_splitter(modes[2], modes[3]),
    ]
}

/// Loss coupling with transmission `eta` between a detected mode and its
/// loss mode: `(sqrt(eta), sqrt(1-eta); -sqrt(1-eta), sqrt(eta))`.
pub fn loss_coupling(eta: f64, detected: usize, loss: usize) -> Result<LinearTransform<Cf64>> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(CoreError::ParameterRange {
            name: "eta",
            value: eta,
            range: "[0, 1]",
        });
    }
    let t = eta.sqrt();
    let r = (1.0 - eta).sqrt();
    LinearTransform::new(
        vec![detected, loss],
        vec![
            vec![Cf64::new(t, 0.0), Cf64::new(r, 0.0)],
            vec![Cf64::new(-r, 0.0), Cf64::new(t, 0.0)],
        ],
    )
}

/// Exact loss coupling for transmission 1/2 (both weights are `1/sqrt(2)`).
pub fn loss_coupling_half<A: Amp>(detected: usize, loss: usize) -> LinearTransform<A> {
    let h = || A::from_parts(1, 0, 1);
    LinearTransform::new(
        vec![detected, loss],
        vec![vec![h(), h()], vec![h().neg(), h()]],
    )
    .expect("valid 2x2 transform")
}

/// Appends a fresh loss mode and couples `detected` to it with transmission
/// `eta`. `eta = 1` leaves the state untouched (no loss mode is added).
pub fn attach_loss(
    state: &PureState<Cf64>,
    detected: usize,
    eta: f64,
    origin: LossOrigin,
) -> Result<PureState<Cf64>> {
    if eta == 1.0 {
        return Ok(state.clone());
    }
    let (extended, loss_mode) = state.with_new_loss_mode(origin, detected)?;
    loss_coupling(eta, detected, loss_mode)?.apply(&extended)
}

/// Exact variant of [`attach_loss`] for transmission 1/2.
pub fn attach_loss_half<A: Amp>(
    state: &PureState<A>,
    detected: usize,
    origin: LossOrigin,
) -> Result<PureState<A>> {
    let (extended, loss_mode) = state.with_new_loss_mode(origin, detected)?;
    loss_coupling_half(detected, loss_mode).apply(&extended)
}

/// Uniform 1-to-N splitter: a unitary on `sub_modes` whose first row is
/// `1/sqrt(N)` everywhere, so a photon entering `sub_modes[0]` (the others
/// being vacuum) exits each sub-mode with equal probability. The remaining
/// rows are an arbitrary completion; they never see photons.
///
/// For `N` a power of two the completion is the real Hadamard tensor power
/// (exactly representable); other sizes use a Householder reflection and are
/// only available for the float scalar via [`splitter_unitary_f64`].
pub fn splitter_unitary<A: Amp>(sub_modes: &[usize]) -> Result<LinearTransform<A>> {
    let n = sub_modes.len();
    if n == 0 {
        return Err(CoreError::Invalid("splitter needs at least one mode".into()));
    }
    if !n.is_power_of_two() {
        return Err(CoreError::ExactUnrepresentable(
            "uniform splitter for a size that is not a power of two",
        ));
    }
    let logn = n.trailing_zeros();
    let matrix: Vec<Vec<A>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let sign = if (i & j).count_ones() % 2 == 0 { 1 } else { -1 };
                    A::from_parts(sign, 0, logn)
                })
                .collect()
        })
        .collect();
    LinearTransform::new(sub_modes.to_vec(), matrix)
}

/// Float-scalar uniform splitter for arbitrary `N >= 1`.
pub fn splitter_unitary_f64(sub_modes: &[usize]) -> Result<LinearTransform<Cf64>> {
    let n = sub_modes.len();
    if n == 0 {
        return Err(CoreError::Invalid("splitter needs at least one mode".into()));
    }
    if n.is_power_of_two() {
        return splitter_unitary::<Cf64>(sub_modes);
    }
    // Householder reflection H = I - 2 v v^T / |v|^2 with v = e_1 - u,
    // u = (1, 1, ..., 1)/sqrt(N); then H e_1 = u and H is real orthogonal.
    let u = 1.0 / (n as f64).sqrt();
    let mut v = vec![-u; n];
    v[0] += 1.0;
    let norm2: f64 = v.iter().map(|x| x * x).sum();
    let matrix: Vec<Vec<Cf64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let id = if i == j { 1.0 } else { 0.0 };
                    Cf64::new(id - 2.0 * v[i] * v[j] / norm2, 0.0)
                })
                .collect()
        })
        .collect();
    LinearTransform::new(sub_modes.to_vec(), matrix)
}
