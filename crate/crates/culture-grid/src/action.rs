//! The action space: six body parts, three postures each.
//!
//! An action assigns every part one of `Left`, `Stationary`, `Right`, giving
//! 3^6 = 729 distinct actions. Actions are the unit of cultural transmission:
//! agents invent variations of their own action and imitate their neighbours'.

use std::fmt;

/// Position of one body part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Posture {
    Left,
    Stationary,
    Right,
}

impl Posture {
    pub const ALL: [Posture; 3] = [Posture::Left, Posture::Stationary, Posture::Right];

    pub fn is_moving(self) -> bool {
        !matches!(self, Posture::Stationary)
    }

    /// The mirrored posture; `Stationary` is its own mirror image.
    pub fn opposite(self) -> Posture {
        match self {
            Posture::Left => Posture::Right,
            Posture::Stationary => Posture::Stationary,
            Posture::Right => Posture::Left,
        }
    }

    /// -1 / 0 / +1 encoding used by the oracle table and the action index.
    pub fn signum(self) -> i8 {
        match self {
            Posture::Left => -1,
            Posture::Stationary => 0,
            Posture::Right => 1,
        }
    }

    pub fn from_signum(v: i8) -> Option<Posture> {
        match v {
            -1 => Some(Posture::Left),
            0 => Some(Posture::Stationary),
            1 => Some(Posture::Right),
            _ => None,
        }
    }
}

/// The six controllable body parts, in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BodyPart {
    LeftArm = 0,
    RightArm = 1,
    LeftLeg = 2,
    RightLeg = 3,
    Head = 4,
    Hips = 5,
}

impl BodyPart {
    pub const ALL: [BodyPart; 6] = [
        BodyPart::LeftArm,
        BodyPart::RightArm,
        BodyPart::LeftLeg,
        BodyPart::RightLeg,
        BodyPart::Head,
        BodyPart::Hips,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// The other limb of a left/right pair; `None` for head and hips.
    pub fn pair_counterpart(self) -> Option<BodyPart> {
        match self {
            BodyPart::LeftArm => Some(BodyPart::RightArm),
            BodyPart::RightArm => Some(BodyPart::LeftArm),
            BodyPart::LeftLeg => Some(BodyPart::RightLeg),
            BodyPart::RightLeg => Some(BodyPart::LeftLeg),
            BodyPart::Head | BodyPart::Hips => None,
        }
    }
}

pub const PART_COUNT: usize = 6;
pub const ACTION_COUNT: usize = 729;

/// Movement and symmetry levels of an action, each in [0, 1].
///
/// `movement` is the fraction of parts that are non-stationary. `symmetry` is
/// the fraction of limb pairs (arms, legs) whose members move in opposite
/// directions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrendActivations {
    pub movement: f64,
    pub symmetry: f64,
}

/// A full-body action: one posture per body part.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Action {
    parts: [Posture; PART_COUNT],
}

/// True when the two members of a limb pair move in opposite directions.
fn pair_opposed(a: Posture, b: Posture) -> bool {
    a.is_moving() && b.is_moving() && a != b
}

impl Action {
    pub fn new(parts: [Posture; PART_COUNT]) -> Action {
        Action { parts }
    }

    /// The resting action: every part stationary.
    pub fn stationary() -> Action {
        Action { parts: [Posture::Stationary; PART_COUNT] }
    }

    pub fn part(&self, p: BodyPart) -> Posture {
        self.parts[p.index()]
    }

    pub fn set_part(&mut self, p: BodyPart, v: Posture) {
        self.parts[p.index()] = v;
    }

    pub fn with_part(mut self, p: BodyPart, v: Posture) -> Action {
        self.set_part(p, v);
        self
    }

    pub fn parts(&self) -> [Posture; PART_COUNT] {
        self.parts
    }

    /// Canonical index in [0, 728]: little-endian base 3 with digit
    /// `signum + 1` per part, so all-`Left` is 0 and all-`Stationary` is 364.
    pub fn index(&self) -> u16 {
        let mut idx = 0u16;
        let mut scale = 1u16;
        for p in self.parts {
            idx += (p.signum() + 1) as u16 * scale;
            scale *= 3;
        }
        idx
    }

    /// Inverse of [`Action::index`]; `None` outside [0, 728].
    pub fn from_index(index: u16) -> Option<Action> {
        if index as usize >= ACTION_COUNT {
            return None;
        }
        let mut rest = index;
        let mut parts = [Posture::Stationary; PART_COUNT];
        for slot in parts.iter_mut() {
            *slot = Posture::from_signum((rest % 3) as i8 - 1).expect("digit in 0..3");
            rest /= 3;
        }
        Some(Action { parts })
    }

    /// All 729 actions in index order.
    pub fn iter_all() -> impl Iterator<Item = Action> {
        (0..ACTION_COUNT as u16).map(|i| Action::from_index(i).expect("index in range"))
    }

    /// Number of parts on which the two actions differ (0..=6).
    pub fn hamming_distance(&self, other: &Action) -> u32 {
        self.parts
            .iter()
            .zip(other.parts.iter())
            .filter(|(a, b)| a != b)
            .count() as u32
    }

    /// Swap every `Left` and `Right` posture.
    pub fn mirrored(&self) -> Action {
        let mut parts = self.parts;
        for p in parts.iter_mut() {
            *p = p.opposite();
        }
        Action { parts }
    }

    pub fn moving_part_count(&self) -> u32 {
        self.parts.iter().filter(|p| p.is_moving()).count() as u32
    }

    pub fn arms_opposed(&self) -> bool {
        pair_opposed(self.part(BodyPart::LeftArm), self.part(BodyPart::RightArm))
    }

    pub fn legs_opposed(&self) -> bool {
        pair_opposed(self.part(BodyPart::LeftLeg), self.part(BodyPart::RightLeg))
    }

    pub fn trend_activations(&self) -> TrendActivations {
        let opposed_pairs = self.arms_opposed() as u32 + self.legs_opposed() as u32;
        TrendActivations {
            movement: self.moving_part_count() as f64 / PART_COUNT as f64,
            symmetry: opposed_pairs as f64 / 2.0,
        }
    }
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Action[")?;
        for (i, p) in self.parts.iter().enumerate() {
            let c = match p {
                Posture::Left => 'L',
                Posture::Stationary => '.',
                Posture::Right => 'R',
            };
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]#{}", self.index())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Posture::{Left as L, Right as R, Stationary as S};

    #[test]
    fn index_of_reference_actions() {
        assert_eq!(Action::stationary().index(), 364);
        assert_eq!(Action::new([L; 6]).index(), 0);
        assert_eq!(Action::new([R, S, S, S, S, S]).index(), 365);
    }

    #[test]
    fn from_index_round_trips_all_actions() {
        for i in 0..ACTION_COUNT as u16 {
            let a = Action::from_index(i).expect("valid index");
            assert_eq!(a.index(), i);
        }
        assert_eq!(Action::from_index(729), None);
        assert_eq!(Action::from_index(u16::MAX), None);
    }

    #[test]
    fn index_matches_positional_formula() {
        // Independent recomputation: index = sum over parts of (signum+1)*3^i.
        for a in Action::iter_all() {
            let expected: u16 = a
                .parts()
                .iter()
                .enumerate()
                .map(|(i, p)| (p.signum() + 1) as u16 * 3u16.pow(i as u32))
                .sum();
            assert_eq!(a.index(), expected);
        }
    }

    #[test]
    fn trend_activations_reference_values() {
        let rest = Action::stationary();
        assert_eq!(rest.trend_activations(), TrendActivations { movement: 0.0, symmetry: 0.0 });

        let arms_opposed = Action::new([L, R, S, S, S, S]);
        let t = arms_opposed.trend_activations();
        assert_eq!(t.movement, 2.0 / 6.0);
        assert_eq!(t.symmetry, 0.5);

        let arms_parallel = Action::new([L, L, S, S, S, S]);
        let t = arms_parallel.trend_activations();
        assert_eq!(t.movement, 2.0 / 6.0);
        assert_eq!(t.symmetry, 0.0);
    }

    #[test]
    fn trend_activations_stay_in_unit_interval() {
        for a in Action::iter_all() {
            let t = a.trend_activations();
            assert!((0.0..=1.0).contains(&t.movement), "{a:?}");
            assert!((0.0..=1.0).contains(&t.symmetry), "{a:?}");
        }
    }

    #[test]
    fn hamming_distance_bounds_and_identity() {
        let rest = Action::stationary();
        assert_eq!(rest.hamming_distance(&rest), 0);
        assert_eq!(rest.hamming_distance(&Action::new([L; 6])), 6);
        assert_eq!(rest.hamming_distance(&Action::new([R, S, S, S, S, S])), 1);
    }

    #[test]
    fn mirroring_is_an_involution() {
        for a in Action::iter_all() {
            assert_eq!(a.mirrored().mirrored(), a);
        }
    }
}
