//! Mode bookkeeping and occupation-number states.
//!
//! Every run works over a [`ModeRegistry`]: an ordered list of detection
//! modes (two qubit bins, `a` then `b`, per detector unit) followed by loss
//! modes appended in creation order. Loss modes record which channel created
//! them so that surviving probability can later be attributed to input loss,
//! auxiliary loss, or detection loss.

use smallvec::SmallVec;

use crate::error::{CoreError, Result};

/// Which physical channel a loss mode models.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum LossOrigin {
    /// Transmission loss on the incoming state to be measured.
    Input,
    /// Transmission/generation loss on the auxiliary state.
    Auxiliary,
    /// Detector inefficiency and coupling loss.
    Detector,
}

/// A loss mode: its origin tag and the detection mode it shadows.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct LossMode {
    pub origin: LossOrigin,
    pub shadows: usize,
}

/// Ordered mode registry: `unit_count` detector units with bins `a` and `b`
/// (modes `2u` and `2u + 1`), then loss modes.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ModeRegistry {
    unit_count: usize,
    loss: Vec<LossMode>,
}

impl ModeRegistry {
    pub fn new(unit_count: usize) -> Self {
        ModeRegistry { unit_count, loss: Vec::new() }
    }

    /// Number of detector units (spatial modes, or spatial modes times the
    /// array size when outputs are split over sub-detectors).
    pub fn unit_count(&self) -> usize {
        self.unit_count
    }

    /// Number of detection modes (`unit_count * 2`).
    pub fn detected_count(&self) -> usize {
        self.unit_count * 2
    }

    /// Total number of modes including loss modes.
    pub fn mode_count(&self) -> usize {
        self.detected_count() + self.loss.len()
    }

    /// Early/`a` bin of a detector unit.
    pub fn a_bin(&self, unit: usize) -> usize {
        debug_assert!(unit < self.unit_count);
        2 * unit
    }

    /// Late/`b` bin of a detector unit.
    pub fn b_bin(&self, unit: usize) -> usize {
        debug_assert!(unit < self.unit_count);
        2 * unit + 1
    }

    pub fn is_detected(&self, mode: usize) -> bool {
        mode < self.detected_count()
    }

    pub fn loss_modes(&self) -> &[LossMode] {
        &self.loss
    }

    /// Origin of the loss mode at absolute index `mode`.
    pub fn loss_origin(&self, mode: usize) -> Option<LossOrigin> {
        mode.checked_sub(self.detected_count())
            .and_then(|i| self.loss.get(i))
            .map(|l| l.origin)
    }

    /// Appends a fresh loss mode shadowing `shadows` and returns its index.
    pub fn push_loss(&mut self, origin: LossOrigin, shadows: usize) -> Result<usize> {
        if shadows >= self.detected_count() {
            return Err(CoreError::ModeOutOfRange {
                index: shadows,
                count: self.detected_count(),
            });
        }
        self.loss.push(LossMode { origin, shadows });
        Ok(self.mode_count() - 1)
    }

    /// Human-readable mode label, e.g. `a1`, `b3`, `Li(a1)`.
    pub fn mode_name(&self, mode: usize) -> String {
        if mode < self.detected_count() {
            let unit = mode / 2 + 1;
            if mode.is_multiple_of(2) {
                format!("a{unit}")
            } else {
                format!("b{unit}")
            }
        } else {
            let l = self.loss[mode - self.detected_count()];
            let tag = match l.origin {
                LossOrigin::Input => "Li",
                LossOrigin::Auxiliary => "La",
                LossOrigin::Detector => "Ld",
            };
            format!("{tag}({})", self.mode_name(l.shadows))
        }
    }
}

/// An occupation-number basis state over a registry's modes.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct FockState(SmallVec<[u8; 24]>);

impl FockState {
    pub fn vacuum(mode_count: usize) -> Self {
        FockState(smallvec::smallvec![0; mode_count])
    }

    pub fn from_occupations(occ: &[u8]) -> Self {
        FockState(SmallVec::from_slice(occ))
    }

    pub fn occupations(&self) -> &[u8] {
        &self.0
    }

    pub fn mode_count(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, mode: usize) -> u8 {
        self.0[mode]
    }

    pub fn set(&mut self, mode: usize, n: u8) {
        self.0[mode] = n;
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&n| n as u32).sum()
    }

    /// Occupations restricted to the first `detected` modes.
    pub fn detected_part(&self, detected: usize) -> FockState {
        FockState(SmallVec::from_slice(&self.0[..detected]))
    }

    /// Extends the state with `extra` vacuum modes.
    pub fn extended(&self, extra: usize) -> FockState {
        let mut v = self.0.clone();
        v.extend(std::iter::repeat_n(0, extra));
        FockState(v)
    }
}

impl std::fmt::Display for FockState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ">")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_layout_orders_detected_before_loss() {
        let mut reg = ModeRegistry::new(2);
        assert_eq!(reg.detected_count(), 4);
        assert_eq!(reg.a_bin(0), 0);
        assert_eq!(reg.b_bin(0), 1);
        assert_eq!(reg.a_bin(1), 2);
        let l = reg.push_loss(LossOrigin::Input, 0).unwrap();
        assert_eq!(l, 4);
        assert_eq!(reg.loss_origin(4), Some(LossOrigin::Input));
        assert_eq!(reg.mode_name(0), "a1");
        assert_eq!(reg.mode_name(3), "b2");
        assert_eq!(reg.mode_name(4), "Li(a1)");
    }

    #[test]
    fn push_loss_rejects_bad_shadow_index() {
        let mut reg = ModeRegistry::new(2);
        assert!(reg.push_loss(LossOrigin::Detector, 9).is_err());
    }

    #[test]
    fn fock_state_total_and_parts() {
        let s = FockState::from_occupations(&[2, 0, 1, 1, 3]);
        assert_eq!(s.total(), 7);
        assert_eq!(s.detected_part(4), FockState::from_occupations(&[2, 0, 1, 1]));
        assert_eq!(s.extended(2).mode_count(), 7);
        assert_eq!(s.to_string(), "|2,0,1,1,3>");
    }
}
