//! Binary paint shop instances, colourings and the classical greedy
//! baselines.
//!
//! An instance is a sequence of `2N` car slots labelled by `N` body types,
//! each body appearing exactly twice. A colouring paints each slot red or
//! blue such that the two cars of a body differ; its cost is the number of
//! adjacent slots with different colours.
//!
//! Colour convention used throughout the crate: red is `0` and corresponds to
//! spin `+1`, blue is `1` and corresponds to spin `-1`.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{self, Stream};

/// A paint colour. Serialised as `0` (red) or `1` (blue).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Colour {
    Red,
    Blue,
}

impl Colour {
    pub fn flipped(self) -> Self {
        match self {
            Colour::Red => Colour::Blue,
            Colour::Blue => Colour::Red,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Colour::Red => 0,
            Colour::Blue => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Colour::Red
        } else {
            Colour::Blue
        }
    }
}

impl Serialize for Colour {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.bit())
    }
}

impl<'de> Deserialize<'de> for Colour {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(Colour::Red),
            1 => Ok(Colour::Blue),
            other => Err(serde::de::Error::custom(format!("colour must be 0 or 1, got {other}"))),
        }
    }
}

/// Which of the two cars of a body a slot holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Occurrence {
    First,
    Second,
}

/// A validated paint shop instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BpspInstance {
    n_bodies: usize,
    sequence: Vec<usize>,
}

#[derive(Deserialize)]
struct RawInstance {
    n_bodies: usize,
    sequence: Vec<usize>,
}

impl<'de> Deserialize<'de> for BpspInstance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawInstance::deserialize(d)?;
        BpspInstance::new(raw.n_bodies, raw.sequence).map_err(serde::de::Error::custom)
    }
}

impl BpspInstance {
    /// Validates that every body in `0..n_bodies` occurs exactly twice.
    pub fn new(n_bodies: usize, sequence: Vec<usize>) -> Result<Self> {
        if n_bodies == 0 {
            return Err(invalid("an instance needs at least one body"));
        }
        if sequence.len() != 2 * n_bodies {
            return Err(Error::ConstraintViolation(format!(
                "sequence length {} must equal 2 * n_bodies = {}",
                sequence.len(),
                2 * n_bodies
            )));
        }
        let mut seen = vec![0u8; n_bodies];
        for &body in &sequence {
            if body >= n_bodies {
                return Err(Error::ConstraintViolation(format!(
                    "body index {body} out of range for {n_bodies} bodies"
                )));
            }
            seen[body] += 1;
        }
        if let Some(body) = seen.iter().position(|&c| c != 2) {
            return Err(Error::ConstraintViolation(format!(
                "body {body} occurs {} times, expected 2",
                seen[body]
            )));
        }
        Ok(Self { n_bodies, sequence })
    }

    /// Builds an instance from arbitrary labels, renumbering bodies by first
    /// appearance.
    pub fn from_labels<T: PartialEq>(labels: &[T]) -> Result<Self> {
        let mut distinct: Vec<&T> = Vec::new();
        let sequence = labels
            .iter()
            .map(|l| match distinct.iter().position(|d| *d == l) {
                Some(i) => i,
                None => {
                    distinct.push(l);
                    distinct.len() - 1
                }
            })
            .collect();
        Self::new(distinct.len(), sequence)
    }

    /// Uniformly random arrangement of `{0,0,1,1,...,N-1,N-1}` (Fisher-Yates
    /// over the seeded instance stream).
    pub fn random(n_bodies: usize, seed: u64) -> Result<Self> {
        if n_bodies == 0 {
            return Err(invalid("n_bodies must be at least 1"));
        }
        let mut sequence: Vec<usize> = (0..n_bodies).flat_map(|b| [b, b]).collect();
        let mut rng = rng::stream(seed, Stream::Instances, n_bodies as u64);
        sequence.shuffle(&mut rng);
        Self::new(n_bodies, sequence)
    }

    pub fn n_bodies(&self) -> usize {
        self.n_bodies
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    pub fn sequence(&self) -> &[usize] {
        &self.sequence
    }

    /// Occurrence parity of every slot.
    pub fn occurrences(&self) -> Vec<Occurrence> {
        let mut seen = vec![false; self.n_bodies];
        self.sequence
            .iter()
            .map(|&b| {
                if std::mem::replace(&mut seen[b], true) {
                    Occurrence::Second
                } else {
                    Occurrence::First
                }
            })
            .collect()
    }

    /// For each slot, the slot holding the other car of the same body.
    pub fn partners(&self) -> Vec<usize> {
        let mut first = vec![usize::MAX; self.n_bodies];
        let mut partner = vec![0; self.sequence.len()];
        for (pos, &b) in self.sequence.iter().enumerate() {
            if first[b] == usize::MAX {
                first[b] = pos;
            } else {
                partner[pos] = first[b];
                partner[first[b]] = pos;
            }
        }
        partner
    }

    /// Bodies listed in order of first appearance.
    pub fn bodies_by_first_appearance(&self) -> Vec<usize> {
        self.sequence
            .iter()
            .zip(self.occurrences())
            .filter(|(_, o)| *o == Occurrence::First)
            .map(|(&b, _)| b)
            .collect()
    }
}

/// A colour per slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Colouring {
    pub colours: Vec<Colour>,
}

impl Colouring {
    pub fn new(colours: Vec<Colour>) -> Self {
        Self { colours }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        Self::new(bits.iter().map(|&b| Colour::from_bit(b)).collect())
    }

    /// Checks the length and that both cars of each body differ.
    pub fn validate(&self, instance: &BpspInstance) -> Result<()> {
        if self.colours.len() != instance.len() {
            return Err(Error::ConstraintViolation(format!(
                "colouring has {} entries, instance has {} slots",
                self.colours.len(),
                instance.len()
            )));
        }
        for (pos, &partner) in instance.partners().iter().enumerate() {
            if pos < partner && self.colours[pos] == self.colours[partner] {
                return Err(Error::ConstraintViolation(format!(
                    "slots {pos} and {partner} hold body {} but share a colour",
                    instance.sequence()[pos]
                )));
            }
        }
        Ok(())
    }

    pub fn flipped(&self) -> Self {
        Self::new(self.colours.iter().map(|c| c.flipped()).collect())
    }
}

/// Number of adjacent slots painted differently. Rejects invalid colourings.
pub fn colour_changes(instance: &BpspInstance, colouring: &Colouring) -> Result<u32> {
    colouring.validate(instance)?;
    Ok(count_changes(&colouring.colours))
}

fn count_changes(colours: &[Colour]) -> u32 {
    colours.windows(2).filter(|w| w[0] != w[1]).count() as u32
}

/// Red-first greedy: the first car is red, every unforced car copies its
/// predecessor, and a car whose partner is already painted takes the
/// opposite colour.
pub fn greedy_solve(instance: &BpspInstance) -> Colouring {
    let partners = instance.partners();
    let mut colours: Vec<Option<Colour>> = vec![None; instance.len()];
    for pos in 0..instance.len() {
        if colours[pos].is_some() {
            continue;
        }
        let colour = if pos == 0 {
            Colour::Red
        } else {
            colours[pos - 1].expect("every earlier slot is painted")
        };
        colours[pos] = Some(colour);
        colours[partners[pos]] = Some(colour.flipped());
    }
    Colouring::new(colours.into_iter().map(Option::unwrap).collect())
}

/// Recursive greedy: body pairs are inserted in order of first appearance,
/// each oriented to minimise the colour changes of the partial sequence
/// right after insertion. Ties go to red-first.
pub fn recursive_greedy_solve(instance: &BpspInstance) -> Colouring {
    let partners = instance.partners();
    let mut colours: Vec<Option<Colour>> = vec![None; instance.len()];
    let first_slots: Vec<usize> = instance
        .occurrences()
        .iter()
        .enumerate()
        .filter(|(_, o)| **o == Occurrence::First)
        .map(|(p, _)| p)
        .collect();

    for first in first_slots {
        let second = partners[first];
        let mut best: Option<(u32, Colour)> = None;
        for orientation in [Colour::Red, Colour::Blue] {
            colours[first] = Some(orientation);
            colours[second] = Some(orientation.flipped());
            let partial: Vec<Colour> = colours.iter().flatten().copied().collect();
            let changes = count_changes(&partial);
            if best.is_none_or(|(c, _)| changes < c) {
                best = Some((changes, orientation));
            }
        }
        let (_, orientation) = best.expect("two orientations tried");
        colours[first] = Some(orientation);
        colours[second] = Some(orientation.flipped());
    }
    Colouring::new(colours.into_iter().map(Option::unwrap).collect())
}
