//! Control-channel layout and Hamiltonian assembly.
//!
//! The n-qubit control Hamiltonian is a sum of pairwise XX couplings and
//! single-qubit Y/Z drives, one bounded amplitude per channel:
//!
//! `H(f) = sum_{i<j} f_xx(i,j) X_i X_j + sum_i f_y(i) Y_i + f_z(i) Z_i`
//!
//! The channel ordering is canonical and frozen (all XX pairs in
//! lexicographic order, then Y for i = 1..n, then Z for i = 1..n) so that
//! checkpoints remain portable: the network's output slots are identified
//! with channels purely by this ordering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pauli_product, Axis, CMat};

/// One control channel of the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    /// XX coupling between qubits `(i, j)`, `i < j`, 1-based.
    Xx(usize, usize),
    /// Y drive on one qubit.
    Y(usize),
    /// Z drive on one qubit.
    Z(usize),
}

impl Channel {
    pub fn label(&self) -> String {
        match self {
            Channel::Xx(i, j) => format!("xx:{i},{j}"),
            Channel::Y(i) => format!("y:{i}"),
            Channel::Z(i) => format!("z:{i}"),
        }
    }

    /// CSV-safe column name, e.g. `f_xx_1_2`.
    pub fn column_name(&self) -> String {
        match self {
            Channel::Xx(i, j) => format!("f_xx_{i}_{j}"),
            Channel::Y(i) => format!("f_y_{i}"),
            Channel::Z(i) => format!("f_z_{i}"),
        }
    }

    /// Parse a channel name such as `xx:1,2`, `y:1` or `z:3`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidMask(format!("malformed channel name `{s}`"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind.trim() {
            "xx" => {
                let (a, b) = rest.split_once(',').ok_or_else(bad)?;
                let i: usize = a.trim().parse().map_err(|_| bad())?;
                let j: usize = b.trim().parse().map_err(|_| bad())?;
                if i == 0 || j == 0 || i == j {
                    return Err(bad());
                }
                Ok(Channel::Xx(i.min(j), i.max(j)))
            }
            "y" => Ok(Channel::Y(rest.trim().parse().map_err(|_| bad())?)),
            "z" => Ok(Channel::Z(rest.trim().parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }

    fn generator(&self, n: usize) -> Result<CMat> {
        match *self {
            Channel::Xx(i, j) => pauli_product(n, &[(i, Axis::X), (j, Axis::X)]),
            Channel::Y(i) => pauli_product(n, &[(i, Axis::Y)]),
            Channel::Z(i) => pauli_product(n, &[(i, Axis::Z)]),
        }
    }
}

/// Canonical ordering of the `C = n(n-1)/2 + 2n` control channels, with the
/// per-channel Pauli generators precomputed (each generator is also the
/// partial derivative of the Hamiltonian with respect to its amplitude).
#[derive(Debug, Clone)]
pub struct ControlLayout {
    n: usize,
    channels: Vec<Channel>,
    generators: Vec<CMat>,
}

impl ControlLayout {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > 3 {
            return Err(Error::InvalidConfig(format!(
                "qubit count {n} outside supported range 1..=3"
            )));
        }
        let mut channels = Vec::new();
        for i in 1..=n {
            for j in (i + 1)..=n {
                channels.push(Channel::Xx(i, j));
            }
        }
        for i in 1..=n {
            channels.push(Channel::Y(i));
        }
        for i in 1..=n {
            channels.push(Channel::Z(i));
        }
        let generators = channels
            .iter()
            .map(|c| c.generator(n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, channels, generators })
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Number of control channels `C`.
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// Pauli generator of channel `c`; equals `dH/df_c`.
    pub fn generator(&self, c: usize) -> &CMat {
        &self.generators[c]
    }

    pub fn channel_index(&self, channel: &Channel) -> Option<usize> {
        self.channels.iter().position(|c| c == channel)
    }
}

/// Control amplitudes for every channel at one instant, all in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlVector(pub Vec<f64>);

impl ControlVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Assemble the control Hamiltonian for amplitudes `f`; linear in `f`.
pub fn build_hamiltonian(layout: &ControlLayout, f: &ControlVector) -> Result<CMat> {
    if f.0.len() != layout.channel_count() {
        return Err(Error::DimensionMismatch(format!(
            "expected {} control amplitudes, got {}",
            layout.channel_count(),
            f.0.len()
        )));
    }
    let dim = layout.dim();
    let mut h = CMat::zeros(dim, dim);
    for (c, &value) in f.0.iter().enumerate() {
        if !(-1.0..=1.0).contains(&value) {
            return Err(Error::AmplitudeOutOfBounds {
                channel: layout.channels[c].label(),
                value,
            });
        }
        if value != 0.0 {
            h += layout.generator(c) * num_complex::Complex64::from(value);
        }
    }
    Ok(h)
}

/// Mask specification as it appears in configuration files: channels forced
/// to zero and groups of channels tied to one shared value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskSpec {
    #[serde(default)]
    pub zero: Vec<String>,
    #[serde(default)]
    pub tie: Vec<Vec<String>>,
}

/// Mapping from the network's independent output slots to the full channel
/// vector. `assignment[c]` is `None` for zeroed channels, otherwise the
/// index of the group the channel takes its value from. Group indices are
/// ordered by the first channel (in canonical order) they cover.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMask {
    assignment: Vec<Option<usize>>,
    group_count: usize,
}

impl ChannelMask {
    /// All channels active and independent.
    pub fn full(layout: &ControlLayout) -> Self {
        let c = layout.channel_count();
        Self {
            assignment: (0..c).map(Some).collect(),
            group_count: c,
        }
    }

    pub fn from_spec(layout: &ControlLayout, spec: &MaskSpec) -> Result<Self> {
        let c = layout.channel_count();
        let find = |name: &str| -> Result<usize> {
            let channel = Channel::parse(name)?;
            layout.channel_index(&channel).ok_or_else(|| {
                Error::InvalidMask(format!(
                    "channel `{name}` does not exist for n = {}",
                    layout.qubits()
                ))
            })
        };

        let mut zeroed = vec![false; c];
        for name in &spec.zero {
            let idx = find(name)?;
            if zeroed[idx] {
                return Err(Error::InvalidMask(format!("channel `{name}` zeroed twice")));
            }
            zeroed[idx] = true;
        }

        // tie_id[c] = which tie group the channel belongs to, if any
        let mut tie_id: Vec<Option<usize>> = vec![None; c];
        for (t, group) in spec.tie.iter().enumerate() {
            if group.len() < 2 {
                return Err(Error::InvalidMask(
                    "tie groups need at least two channels".into(),
                ));
            }
            for name in group {
                let idx = find(name)?;
                if zeroed[idx] {
                    return Err(Error::InvalidMask(format!(
                        "channel `{name}` is both zeroed and tied"
                    )));
                }
                if tie_id[idx].is_some() {
                    return Err(Error::InvalidMask(format!(
                        "channel `{name}` appears in more than one tie group"
                    )));
                }
                tie_id[idx] = Some(t);
            }
        }

        let mut assignment = vec![None; c];
        let mut tie_to_group: Vec<Option<usize>> = vec![None; spec.tie.len()];
        let mut group_count = 0;
        for idx in 0..c {
            if zeroed[idx] {
                continue;
            }
            let group = match tie_id[idx] {
                Some(t) => *tie_to_group[t].get_or_insert_with(|| {
                    let g = group_count;
                    group_count += 1;
                    g
                }),
                None => {
                    let g = group_count;
                    group_count += 1;
                    g
                }
            };
            assignment[idx] = Some(group);
        }
        Ok(Self { assignment, group_count })
    }

    /// Number of independent control groups; the control net's output size.
    pub fn group_count(&self) -> usize {
        self.group_count
    }

    pub fn channel_count(&self) -> usize {
        self.assignment.len()
    }

    /// Expand the reduced (per-group) values into the full channel vector.
    pub fn expand(&self, raw: &[f64]) -> Result<ControlVector> {
        if raw.len() != self.group_count {
            return Err(Error::DimensionMismatch(format!(
                "mask expects {} group values, got {}",
                self.group_count,
                raw.len()
            )));
        }
        Ok(ControlVector(
            self.assignment
                .iter()
                .map(|slot| slot.map_or(0.0, |g| raw[g]))
                .collect(),
        ))
    }

    /// Pull per-channel loss gradients back onto the group values
    /// (transpose of [`ChannelMask::expand`]).
    pub fn pullback(&self, channel_grads: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.group_count];
        for (slot, &g) in self.assignment.iter().zip(channel_grads) {
            if let Some(group) = slot {
                out[*group] += g;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, pauli};
    use num_complex::Complex64 as C64;

    #[test]
    fn channel_counts_match_formula() {
        for (n, expect) in [(1usize, 2usize), (2, 5), (3, 9)] {
            let layout = ControlLayout::new(n).unwrap();
            assert_eq!(layout.channel_count(), expect);
            assert_eq!(layout.channel_count(), n * (n - 1) / 2 + 2 * n);
        }
    }

    #[test]
    fn canonical_ordering_is_frozen() {
        let layout = ControlLayout::new(3).unwrap();
        let labels: Vec<String> = layout.channels().iter().map(|c| c.label()).collect();
        assert_eq!(
            labels,
            ["xx:1,2", "xx:1,3", "xx:2,3", "y:1", "y:2", "y:3", "z:1", "z:2", "z:3"]
        );
    }

    #[test]
    fn single_qubit_z_drive() {
        let layout = ControlLayout::new(1).unwrap();
        let h = build_hamiltonian(&layout, &ControlVector(vec![0.0, 1.0])).unwrap();
        assert_eq!(max_abs_diff(&h, &pauli(Axis::Z)), 0.0);
    }

    #[test]
    fn zero_controls_give_zero_matrix() {
        let layout = ControlLayout::new(2).unwrap();
        let h = build_hamiltonian(&layout, &ControlVector(vec![0.0; 5])).unwrap();
        assert_eq!(h.iter().map(|c| c.norm()).sum::<f64>(), 0.0);
    }

    #[test]
    fn first_channel_is_xx_pair() {
        let layout = ControlLayout::new(2).unwrap();
        let h = build_hamiltonian(&layout, &ControlVector(vec![1.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
        let xx = pauli_product(2, &[(1, Axis::X), (2, Axis::X)]).unwrap();
        assert_eq!(max_abs_diff(&h, &xx), 0.0);
    }

    #[test]
    fn rejects_out_of_bounds_and_length_mismatch() {
        let layout = ControlLayout::new(1).unwrap();
        assert!(matches!(
            build_hamiltonian(&layout, &ControlVector(vec![0.0, 1.5])),
            Err(Error::AmplitudeOutOfBounds { .. })
        ));
        assert!(matches!(
            build_hamiltonian(&layout, &ControlVector(vec![0.0])),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn hamiltonian_is_linear_in_controls() {
        let layout = ControlLayout::new(2).unwrap();
        let f1 = vec![0.3, -0.5, 0.1, 0.9, -0.2];
        let f2 = vec![-0.4, 0.2, 0.7, -0.8, 0.6];
        let (a, b) = (0.35, -0.6);
        let combo: Vec<f64> = f1.iter().zip(&f2).map(|(x, y)| a * x + b * y).collect();
        let h = build_hamiltonian(&layout, &ControlVector(combo)).unwrap();
        let h1 = build_hamiltonian(&layout, &ControlVector(f1)).unwrap();
        let h2 = build_hamiltonian(&layout, &ControlVector(f2)).unwrap();
        let expect = h1 * C64::from(a) + h2 * C64::from(b);
        assert!(max_abs_diff(&h, &expect) <= 1e-14);
    }

    #[test]
    fn generator_is_channel_partial_derivative() {
        let layout = ControlLayout::new(2).unwrap();
        for c in 0..layout.channel_count() {
            let mut f = vec![0.0; 5];
            f[c] = 1.0;
            let h = build_hamiltonian(&layout, &ControlVector(f)).unwrap();
            assert_eq!(max_abs_diff(&h, layout.generator(c)), 0.0);
        }
    }

    #[test]
    fn full_mask_is_identity() {
        let layout = ControlLayout::new(2).unwrap();
        let mask = ChannelMask::full(&layout);
        let raw = vec![0.1, -0.2, 0.3, -0.4, 0.5];
        assert_eq!(mask.expand(&raw).unwrap().values(), raw.as_slice());
        assert_eq!(mask.pullback(&raw), raw);
    }

    #[test]
    fn zeroed_channels_mask() {
        // vanishing channels observed for the three-qubit XXX+YYY+ZZZ family
        let layout = ControlLayout::new(3).unwrap();
        let spec = MaskSpec {
            zero: vec!["xx:1,3".into(), "z:1".into(), "z:3".into()],
            tie: vec![],
        };
        let mask = ChannelMask::from_spec(&layout, &spec).unwrap();
        assert_eq!(mask.group_count(), 6);
        let raw = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let full = mask.expand(&raw).unwrap();
        // canonical order: xx12 xx13 xx23 y1 y2 y3 z1 z2 z3
        assert_eq!(full.values(), &[1.0, 0.0, 2.0, 3.0, 4.0, 5.0, 0.0, 6.0, 0.0]);
    }

    #[test]
    fn tied_channels_mask() {
        // reduced controls for the doubly-controlled rotation family
        let layout = ControlLayout::new(3).unwrap();
        let spec = MaskSpec {
            zero: vec!["z:1".into(), "z:2".into()],
            tie: vec![
                vec!["y:1".into(), "y:2".into()],
                vec!["xx:1,3".into(), "xx:2,3".into()],
            ],
        };
        let mask = ChannelMask::from_spec(&layout, &spec).unwrap();
        assert_eq!(mask.group_count(), 5);
        let raw = vec![10.0, 20.0, 30.0, 40.0, 50.0];
        let full = mask.expand(&raw).unwrap();
        // groups by first occurrence: xx12=g0, xx13=xx23=g1, y1=y2=g2, y3=g3, z3=g4
        assert_eq!(
            full.values(),
            &[10.0, 20.0, 20.0, 30.0, 30.0, 40.0, 0.0, 0.0, 50.0]
        );
        // pullback sums tied channels and drops zeros
        let grads = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0];
        assert_eq!(mask.pullback(&grads), vec![1.0, 5.0, 9.0, 6.0, 9.0]);
    }

    #[test]
    fn mask_validation_errors() {
        let layout = ControlLayout::new(2).unwrap();
        let overlap = MaskSpec {
            zero: vec![],
            tie: vec![
                vec!["y:1".into(), "y:2".into()],
                vec!["y:1".into(), "z:1".into()],
            ],
        };
        assert!(matches!(
            ChannelMask::from_spec(&layout, &overlap),
            Err(Error::InvalidMask(_))
        ));
        let zero_tied = MaskSpec {
            zero: vec!["y:1".into()],
            tie: vec![vec!["y:1".into(), "y:2".into()]],
        };
        assert!(ChannelMask::from_spec(&layout, &zero_tied).is_err());
        let missing = MaskSpec {
            zero: vec!["xx:1,3".into()],
            tie: vec![],
        };
        assert!(ChannelMask::from_spec(&layout, &missing).is_err());
        assert!(Channel::parse("w:1").is_err());
        assert!(Channel::parse("xx:1").is_err());
    }

    #[test]
    fn expand_length_mismatch() {
        let layout = ControlLayout::new(1).unwrap();
        let mask = ChannelMask::full(&layout);
        assert!(mask.expand(&[0.1]).is_err());
    }
}
