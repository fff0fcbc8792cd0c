//! Probability objects: discrete joint triples, stochastic channels, jointly
//! Gaussian triples, and the information measures defined on them.

pub mod channel;
pub mod discrete;
pub mod gaussian;
pub mod info;

pub use channel::Channel;
pub use discrete::{ConditionalChannel, DiscreteTriple, Marginal};
pub use gaussian::{gaussian_mi, GaussianTriple};
pub use info::{
    expected_kl, interaction_information, mutual_information, InfoValue, KlValue,
};

/// Entries below this are treated as exact zeros when deciding support.
pub const ZERO_EPS: f64 = 1e-15;
/// Conditioning events with less mass than this are degenerate.
pub const DEGENERATE_EPS: f64 = 1e-12;
/// Probability vectors must sum to one within this tolerance.
pub const PROB_TOL: f64 = 1e-9;

/// One of the three coordinates of a triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    M,
    X,
    Y,
}

impl Var {
    pub const ALL: [Var; 3] = [Var::M, Var::X, Var::Y];

    fn bit(self) -> u8 {
        match self {
            Var::M => 1,
            Var::X => 2,
            Var::Y => 4,
        }
    }
}

/// A subset of {M, X, Y}, kept in canonical M-then-X-then-Y order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarSet(u8);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);
    pub const M: VarSet = VarSet(1);
    pub const X: VarSet = VarSet(2);
    pub const Y: VarSet = VarSet(4);
    pub const XY: VarSet = VarSet(6);
    pub const ALL: VarSet = VarSet(7);

    pub fn single(v: Var) -> VarSet {
        VarSet(v.bit())
    }

    pub fn contains(self, v: Var) -> bool {
        self.0 & v.bit() != 0
    }

    pub fn union(self, other: VarSet) -> VarSet {
        VarSet(self.0 | other.0)
    }

    pub fn intersects(self, other: VarSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Members in canonical order.
    pub fn vars(self) -> impl Iterator<Item = Var> {
        Var::ALL.into_iter().filter(move |v| self.contains(*v))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }
}

impl std::fmt::Display for VarSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_empty() {
            return write!(f, "{{}}");
        }
        for v in self.vars() {
            write!(f, "{v:?}")?;
        }
        Ok(())
    }
}
