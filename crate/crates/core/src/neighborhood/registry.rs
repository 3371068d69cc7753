use std::collections::BTreeMap;
use std::sync::OnceLock;

use super::inter::{Cross, CyclicExchange3, SegmentExchange, SegmentTransfer, TwoOptInter};
use super::intra::{SegmentRelocateIntra, SwapIntra, TwoOptIntra};
use super::{Neighborhood, NeighborhoodError, OperatorId};

type Resolver = fn(&[usize]) -> Option<OperatorId>;

fn no_params(id: OperatorId) -> impl Fn(&[usize]) -> Option<OperatorId> {
    move |p| p.is_empty().then_some(id)
}

fn one_len(p: &[usize], max: usize) -> Option<usize> {
    match p {
        [len] if (1..=max).contains(len) => Some(*len),
        _ => None,
    }
}

/// Operator families keyed by their configuration name.
pub struct OperatorRegistry {
    families: BTreeMap<&'static str, Resolver>,
}

impl OperatorRegistry {
    pub fn standard() -> &'static OperatorRegistry {
        static REGISTRY: OnceLock<OperatorRegistry> = OnceLock::new();
        REGISTRY.get_or_init(|| {
            let mut families: BTreeMap<&'static str, Resolver> = BTreeMap::new();
            families.insert("two_opt_intra", |p| no_params(OperatorId::TwoOptIntra)(p));
            families.insert("relocate_intra", |p| one_len(p, 3).map(|len| OperatorId::RelocateIntra { len }));
            families.insert("swap_intra", |p| no_params(OperatorId::SwapIntra)(p));
            families.insert("or_opt_intra", |p| no_params(OperatorId::OrOptIntra)(p));
            families.insert("cross", |p| no_params(OperatorId::Cross)(p));
            families.insert("symmetric_swap", |p| one_len(p, 4).map(|len| OperatorId::SymmetricSwap { len }));
            families.insert("asymmetric_swap", |p| match *p {
                [first, second] if first != second && (1..=4).contains(&first) && (1..=4).contains(&second) => {
                    Some(OperatorId::AsymmetricSwap { first, second })
                }
                _ => None,
            });
            families.insert("relocate_inter", |p| one_len(p, 3).map(|len| OperatorId::RelocateInter { len }));
            families.insert("two_opt_inter", |p| no_params(OperatorId::TwoOptInter)(p));
            families.insert("or_opt_inter", |p| no_params(OperatorId::OrOptInter)(p));
            families.insert("cyclic_exchange_3", |p| no_params(OperatorId::CyclicExchange3)(p));
            OperatorRegistry { families }
        })
    }

    pub fn family_names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.families.keys().copied()
    }

    /// Looks up a family and validates its parameters.
    pub fn resolve(&self, family: &str, params: &[usize]) -> Result<OperatorId, NeighborhoodError> {
        let unknown = || {
            let mut name = family.to_string();
            for p in params {
                name.push_str(&format!(":{p}"));
            }
            NeighborhoodError::UnknownOperator(name)
        };
        let resolver = self.families.get(family).ok_or_else(unknown)?;
        resolver(params).ok_or_else(unknown)
    }

    /// Instantiates the neighborhood for an operator.
    pub fn build(&self, id: OperatorId) -> Box<dyn Neighborhood> {
        match id {
            OperatorId::TwoOptIntra => Box::new(TwoOptIntra),
            OperatorId::RelocateIntra { len } => Box::new(SegmentRelocateIntra::relocate(len)),
            OperatorId::SwapIntra => Box::new(SwapIntra),
            OperatorId::OrOptIntra => Box::new(SegmentRelocateIntra::or_opt()),
            OperatorId::Cross => Box::new(Cross),
            OperatorId::SymmetricSwap { len } => Box::new(SegmentExchange::symmetric(len)),
            OperatorId::AsymmetricSwap { first, second } => Box::new(SegmentExchange::asymmetric(first, second)),
            OperatorId::RelocateInter { len } => Box::new(SegmentTransfer::relocate(len)),
            OperatorId::TwoOptInter => Box::new(TwoOptInter),
            OperatorId::OrOptInter => Box::new(SegmentTransfer::or_opt()),
            OperatorId::CyclicExchange3 => Box::new(CyclicExchange3),
        }
    }
}

/// The ordered action set 𝒜 seen by a policy.
pub struct ActionSet {
    ops: Vec<Box<dyn Neighborhood>>,
}

impl ActionSet {
    pub fn new(ids: &[OperatorId]) -> Result<Self, NeighborhoodError> {
        if ids.is_empty() {
            return Err(NeighborhoodError::EmptyActionSet);
        }
        for (i, id) in ids.iter().enumerate() {
            if ids[..i].contains(id) {
                return Err(NeighborhoodError::DuplicateOperator(id.to_string()));
            }
        }
        let reg = OperatorRegistry::standard();
        Ok(ActionSet {
            ops: ids.iter().map(|&id| reg.build(id)).collect(),
        })
    }

    /// Parses operator names such as `"relocate_inter:2"`.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self, NeighborhoodError> {
        let ids = names
            .iter()
            .map(|n| n.as_ref().parse())
            .collect::<Result<Vec<OperatorId>, _>>()?;
        Self::new(&ids)
    }

    pub fn default_set() -> Self {
        Self::new(&OperatorId::default_set()).expect("default set is valid")
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn get(&self, action: usize) -> &dyn Neighborhood {
        self.ops[action].as_ref()
    }

    pub fn ids(&self) -> Vec<OperatorId> {
        self.ops.iter().map(|op| op.id()).collect()
    }

    pub fn index_of(&self, id: OperatorId) -> Option<usize> {
        self.ops.iter().position(|op| op.id() == id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Neighborhood> {
        self.ops.iter().map(|op| op.as_ref())
    }
}

impl std::fmt::Debug for ActionSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.ids().iter().map(|id| id.to_string())).finish()
    }
}
