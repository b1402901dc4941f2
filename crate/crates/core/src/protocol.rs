//! Four-state opinions and the pairwise update rules.

use std::fmt;
use std::ops::Neg;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A node's opinion. The discriminant is the integer encoding used in traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(i8)]
pub enum Opinion {
    StrongPos = 2,
    WeakPos = 1,
    WeakNeg = -1,
    StrongNeg = -2,
}

impl Opinion {
    pub const ALL: [Opinion; 4] = [
        Opinion::StrongPos,
        Opinion::WeakPos,
        Opinion::WeakNeg,
        Opinion::StrongNeg,
    ];

    pub fn value(self) -> i8 {
        self as i8
    }

    pub fn from_value(v: i8) -> Option<Self> {
        match v {
            2 => Some(Opinion::StrongPos),
            1 => Some(Opinion::WeakPos),
            -1 => Some(Opinion::WeakNeg),
            -2 => Some(Opinion::StrongNeg),
            _ => None,
        }
    }

    /// The two-bit wire form: bit 1 is strength, bit 0 is the negative sign.
    pub fn to_bits(self) -> u8 {
        match self {
            Opinion::WeakPos => 0b00,
            Opinion::WeakNeg => 0b01,
            Opinion::StrongPos => 0b10,
            Opinion::StrongNeg => 0b11,
        }
    }

    pub fn from_bits(bits: u8) -> Option<Self> {
        match bits {
            0b00 => Some(Opinion::WeakPos),
            0b01 => Some(Opinion::WeakNeg),
            0b10 => Some(Opinion::StrongPos),
            0b11 => Some(Opinion::StrongNeg),
            _ => None,
        }
    }

    pub fn sign(self) -> i8 {
        self.value().signum()
    }

    pub fn is_positive(self) -> bool {
        self.value() > 0
    }

    pub fn is_strong(self) -> bool {
        matches!(self, Opinion::StrongPos | Opinion::StrongNeg)
    }

    pub fn magnitude(self) -> u8 {
        self.value().unsigned_abs()
    }

    /// The weak opinion carrying this opinion's sign.
    pub fn weakened(self) -> Self {
        if self.is_positive() {
            Opinion::WeakPos
        } else {
            Opinion::WeakNeg
        }
    }

    /// Slot in [`Counts`] order `(S+, W+, W-, S-)`.
    fn slot(self) -> usize {
        match self {
            Opinion::StrongPos => 0,
            Opinion::WeakPos => 1,
            Opinion::WeakNeg => 2,
            Opinion::StrongNeg => 3,
        }
    }
}

impl Neg for Opinion {
    type Output = Opinion;

    fn neg(self) -> Opinion {
        match self {
            Opinion::StrongPos => Opinion::StrongNeg,
            Opinion::WeakPos => Opinion::WeakNeg,
            Opinion::WeakNeg => Opinion::WeakPos,
            Opinion::StrongNeg => Opinion::StrongPos,
        }
    }
}

impl fmt::Display for Opinion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Opinion::StrongPos => "S+",
            Opinion::WeakPos => "W+",
            Opinion::WeakNeg => "W-",
            Opinion::StrongNeg => "S-",
        })
    }
}

/// New states of the activated pair `(a, b)`.
///
/// Equal states are kept. Exact opposites both weaken and trade signs. Otherwise
/// the stronger opinion moves across the edge; if the signs differ it leaves
/// behind a weak opinion of its own sign, if they agree the pair simply swaps.
pub fn apply_update(a: Opinion, b: Opinion) -> (Opinion, Opinion) {
    if a == b {
        (a, b)
    } else if a == -b {
        (b.weakened(), a.weakened())
    } else if a.magnitude() > b.magnitude() {
        if a.sign() != b.sign() {
            (-b, a)
        } else {
            (b, a)
        }
    } else {
        let (nb, na) = apply_update(b, a);
        (na, nb)
    }
}

/// Opinion counts in the order `(|S+|, |W+|, |W-|, |S-|)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Counts {
    pub strong_pos: usize,
    pub weak_pos: usize,
    pub weak_neg: usize,
    pub strong_neg: usize,
}

impl Counts {
    pub fn total(&self) -> usize {
        self.strong_pos + self.weak_pos + self.weak_neg + self.strong_neg
    }

    /// `|S+| - |S-|`, the conserved voting margin.
    pub fn margin(&self) -> i64 {
        self.strong_pos as i64 - self.strong_neg as i64
    }

    pub fn strong(&self) -> usize {
        self.strong_pos + self.strong_neg
    }

    pub fn as_array(&self) -> [usize; 4] {
        [self.strong_pos, self.weak_pos, self.weak_neg, self.strong_neg]
    }

    fn slot_mut(&mut self, op: Opinion) -> &mut usize {
        match op.slot() {
            0 => &mut self.strong_pos,
            1 => &mut self.weak_pos,
            2 => &mut self.weak_neg,
            _ => &mut self.strong_neg,
        }
    }

    fn swap_one(&mut self, from: Opinion, to: Opinion) {
        if from != to {
            *self.slot_mut(from) -= 1;
            *self.slot_mut(to) += 1;
        }
    }
}

/// Per-node opinions with incrementally maintained counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkState {
    opinions: Vec<Opinion>,
    counts: Counts,
}

impl NetworkState {
    pub fn new(opinions: Vec<Opinion>) -> Result<Self> {
        if opinions.is_empty() {
            return Err(Error::InvalidArgument("state needs at least one node".into()));
        }
        let counts = tally(&opinions);
        Ok(Self { opinions, counts })
    }

    pub fn opinions(&self) -> &[Opinion] {
        &self.opinions
    }

    pub fn opinion(&self, i: usize) -> Opinion {
        self.opinions[i]
    }

    pub fn len(&self) -> usize {
        self.opinions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.opinions.is_empty()
    }

    pub fn counts(&self) -> Counts {
        self.counts
    }

    /// All opinions positive or all negative.
    pub fn is_converged(&self) -> bool {
        self.converged_sign().is_some()
    }

    /// `Some(+1)` / `Some(-1)` once every opinion shares that sign.
    pub fn converged_sign(&self) -> Option<i8> {
        let c = &self.counts;
        if c.weak_neg + c.strong_neg == 0 {
            Some(1)
        } else if c.strong_pos + c.weak_pos == 0 {
            Some(-1)
        } else {
            None
        }
    }

    /// Applies the update rules to the activated edge `(i, j)`.
    pub fn update_pair(&mut self, i: usize, j: usize) {
        let (a, b) = (self.opinions[i], self.opinions[j]);
        let (na, nb) = apply_update(a, b);
        self.counts.swap_one(a, na);
        self.counts.swap_one(b, nb);
        self.opinions[i] = na;
        self.opinions[j] = nb;
    }

    /// Opinions as integers in `{+2, +1, -1, -2}`.
    pub fn encoded(&self) -> Vec<i8> {
        self.opinions.iter().map(|o| o.value()).collect()
    }
}

/// Fresh count over an opinion sequence.
pub fn tally(opinions: &[Opinion]) -> Counts {
    let mut c = Counts::default();
    for &op in opinions {
        *c.slot_mut(op) += 1;
    }
    c
}

/// Shuffles the requested counts of each opinion onto `n` node positions.
pub fn init_state_with<R: Rng + ?Sized>(n: usize, counts: Counts, rng: &mut R) -> Result<NetworkState> {
    if counts.total() != n {
        return Err(Error::CountMismatch {
            n,
            got: counts.total(),
        });
    }
    let mut opinions = Vec::with_capacity(n);
    for (op, k) in Opinion::ALL.into_iter().zip(counts.as_array()) {
        opinions.extend(std::iter::repeat_n(op, k));
    }
    opinions.shuffle(rng);
    NetworkState::new(opinions)
}

/// All-strong initial voting: `strong_pos` S+ and `strong_neg` S- at random
/// positions.
pub fn init_state<R: Rng + ?Sized>(
    n: usize,
    strong_pos: usize,
    strong_neg: usize,
    rng: &mut R,
) -> Result<NetworkState> {
    init_state_with(
        n,
        Counts {
            strong_pos,
            strong_neg,
            ..Counts::default()
        },
        rng,
    )
}

/// `(|S+|, |S-|)` for an all-strong start with the given positive margin:
/// `((n + margin) / 2, (n - margin) / 2)`. Needs `margin <= n` and matching
/// parity.
pub fn strong_split(n: usize, margin: usize) -> Result<(usize, usize)> {
    if margin > n || !(n - margin).is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "margin {margin} incompatible with n = {n} (needs margin <= n and equal parity)"
        )));
    }
    Ok(((n + margin) / 2, (n - margin) / 2))
}
