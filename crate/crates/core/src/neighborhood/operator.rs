use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::NeighborhoodError;

/// One action of the operator-selection policy: an operator family together
/// with its parameter values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperatorId {
    /// Reverse a contiguous sub-route.
    TwoOptIntra,
    /// Move a segment of `len` nodes to another position in its route.
    RelocateIntra { len: usize },
    /// Exchange two nodes of the same route.
    SwapIntra,
    /// Move a segment of 1–3 nodes within its route, in either orientation.
    OrOptIntra,
    /// Exchange the tails of two routes after a cut point in each.
    Cross,
    /// Exchange segments of equal length `len` between two routes.
    SymmetricSwap { len: usize },
    /// Exchange a segment of `first` nodes with one of `second` nodes.
    AsymmetricSwap { first: usize, second: usize },
    /// Move a segment of `len` nodes into another route.
    RelocateInter { len: usize },
    /// Cut two routes and join head to reversed head, tail to reversed tail.
    TwoOptInter,
    /// Move a segment of 1–3 nodes into another route, in either orientation.
    OrOptInter,
    /// Rotate one customer each through three routes.
    CyclicExchange3,
}

impl OperatorId {
    /// Every operator row and parameter value; 29 actions.
    pub fn default_set() -> Vec<OperatorId> {
        use OperatorId::*;
        let mut set = vec![TwoOptIntra];
        set.extend((1..=3).map(|len| RelocateIntra { len }));
        set.extend([SwapIntra, OrOptIntra, Cross]);
        set.extend((1..=4).map(|len| SymmetricSwap { len }));
        for first in 1..=4 {
            for second in 1..=4 {
                if first != second {
                    set.push(AsymmetricSwap { first, second });
                }
            }
        }
        set.extend((1..=3).map(|len| RelocateInter { len }));
        set.extend([TwoOptInter, OrOptInter, CyclicExchange3]);
        set
    }

    /// Family name used in configuration files.
    pub fn family(&self) -> &'static str {
        match self {
            OperatorId::TwoOptIntra => "two_opt_intra",
            OperatorId::RelocateIntra { .. } => "relocate_intra",
            OperatorId::SwapIntra => "swap_intra",
            OperatorId::OrOptIntra => "or_opt_intra",
            OperatorId::Cross => "cross",
            OperatorId::SymmetricSwap { .. } => "symmetric_swap",
            OperatorId::AsymmetricSwap { .. } => "asymmetric_swap",
            OperatorId::RelocateInter { .. } => "relocate_inter",
            OperatorId::TwoOptInter => "two_opt_inter",
            OperatorId::OrOptInter => "or_opt_inter",
            OperatorId::CyclicExchange3 => "cyclic_exchange_3",
        }
    }

    pub fn params(&self) -> Vec<usize> {
        match *self {
            OperatorId::RelocateIntra { len }
            | OperatorId::SymmetricSwap { len }
            | OperatorId::RelocateInter { len } => vec![len],
            OperatorId::AsymmetricSwap { first, second } => vec![first, second],
            _ => Vec::new(),
        }
    }

    pub fn is_intra_route(&self) -> bool {
        matches!(
            self,
            OperatorId::TwoOptIntra
                | OperatorId::RelocateIntra { .. }
                | OperatorId::SwapIntra
                | OperatorId::OrOptIntra
        )
    }
}

impl fmt::Display for OperatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.family())?;
        for p in self.params() {
            write!(f, ":{p}")?;
        }
        Ok(())
    }
}

impl FromStr for OperatorId {
    type Err = NeighborhoodError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.trim().split(':');
        let family = parts.next().unwrap_or_default();
        let params = parts
            .map(|p| p.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| NeighborhoodError::UnknownOperator(s.to_string()))?;
        super::registry::OperatorRegistry::standard().resolve(family, &params)
    }
}

impl Serialize for OperatorId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OperatorId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
