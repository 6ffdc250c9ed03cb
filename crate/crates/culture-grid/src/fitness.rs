//! Fitness functions over the action space.
//!
//! Two hand-designed needs score an action, and a weighted combination of the
//! two is available for mixed-need runs. Both functions reward coordinated
//! movement and both contain an epistatic term, i.e. a bonus whose value
//! depends on the joint state of two parts rather than either one alone.

use crate::action::{Action, BodyPart, Posture};
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum FitnessSpecError {
    #[error("fitness weights must be non-negative")]
    NegativeWeight,
    #[error("weighted fitness requires weight_f1 + weight_f2 > 0")]
    ZeroWeightSum,
}

/// Which need an action is scored against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FitnessSpec {
    F1,
    F2,
    Weighted { weight_f1: f64, weight_f2: f64 },
}

impl Default for FitnessSpec {
    fn default() -> Self {
        FitnessSpec::F1
    }
}

impl FitnessSpec {
    /// Build a weighted spec, rejecting weight pairs that cannot normalise.
    pub fn weighted(weight_f1: f64, weight_f2: f64) -> Result<FitnessSpec, FitnessSpecError> {
        let spec = FitnessSpec::Weighted { weight_f1, weight_f2 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), FitnessSpecError> {
        if let FitnessSpec::Weighted { weight_f1, weight_f2 } = *self {
            if weight_f1 < 0.0 || weight_f2 < 0.0 {
                return Err(FitnessSpecError::NegativeWeight);
            }
            if weight_f1 + weight_f2 <= 0.0 {
                return Err(FitnessSpecError::ZeroWeightSum);
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, a: &Action) -> f64 {
        match *self {
            FitnessSpec::F1 => fitness_f1(a),
            FitnessSpec::F2 => fitness_f2(a),
            FitnessSpec::Weighted { weight_f1, weight_f2 } => {
                self.validate().expect("weighted fitness spec must be normalisable");
                (weight_f1 * fitness_f1(a) + weight_f2 * fitness_f2(a)) / (weight_f1 + weight_f2)
            }
        }
    }
}

/// First need: movement plus limb-pair symmetry, with an epistatic bonus for
/// a still head over moving hips.
///
/// `F1 = moving parts + 3*[arms opposed] + 3*[legs opposed] + 2*[head still and hips moving]`
pub fn fitness_f1(a: &Action) -> f64 {
    let movement = a.moving_part_count() as f64;
    let arm_symmetry = if a.arms_opposed() { 3.0 } else { 0.0 };
    let leg_symmetry = if a.legs_opposed() { 3.0 } else { 0.0 };
    let head_still = a.part(BodyPart::Head) == Posture::Stationary;
    let epistatic = if head_still && a.part(BodyPart::Hips).is_moving() { 2.0 } else { 0.0 };
    movement + arm_symmetry + leg_symmetry + epistatic
}

/// Second need: parallel arm swing with still legs and head, and hips pushing
/// in the arms' shared direction.
///
/// `F2 = moving arms + 3*[arms parallel] + 2*[legs still] + [head still] + 2*[hips push]`
pub fn fitness_f2(a: &Action) -> f64 {
    let left = a.part(BodyPart::LeftArm);
    let right = a.part(BodyPart::RightArm);
    let moving_arms = left.is_moving() as u32 + right.is_moving() as u32;
    let arms_parallel = left.is_moving() && left == right;
    let legs_still = !a.part(BodyPart::LeftLeg).is_moving() && !a.part(BodyPart::RightLeg).is_moving();
    let head_still = !a.part(BodyPart::Head).is_moving();
    let hips = a.part(BodyPart::Hips);
    let hips_push = arms_parallel && hips.is_moving() && hips == left;
    moving_arms as f64
        + if arms_parallel { 3.0 } else { 0.0 }
        + if legs_still { 2.0 } else { 0.0 }
        + if head_still { 1.0 } else { 0.0 }
        + if hips_push { 2.0 } else { 0.0 }
}

/// Exhaustive fitness table over all 729 actions, with the global extrema.
#[derive(Clone, Debug)]
pub struct Landscape {
    values: Vec<f64>,
    max_fitness: f64,
    maximizers: Vec<u16>,
    min_fitness: f64,
    minimizers: Vec<u16>,
}

impl Landscape {
    pub fn enumerate(spec: &FitnessSpec) -> Landscape {
        let values: Vec<f64> = Action::iter_all().map(|a| spec.evaluate(&a)).collect();
        let max_fitness = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min_fitness = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let collect_at = |target: f64| -> Vec<u16> {
            values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v == target)
                .map(|(i, _)| i as u16)
                .collect()
        };
        Landscape {
            max_fitness,
            maximizers: collect_at(max_fitness),
            min_fitness,
            minimizers: collect_at(min_fitness),
            values,
        }
    }

    pub fn value(&self, index: u16) -> f64 {
        self.values[index as usize]
    }

    /// `(action, fitness)` for every action, sorted by action index.
    pub fn entries(&self) -> impl Iterator<Item = (Action, f64)> + '_ {
        Action::iter_all().zip(self.values.iter().copied())
    }

    pub fn max_fitness(&self) -> f64 {
        self.max_fitness
    }

    /// Indices of the globally optimal actions, ascending.
    pub fn maximizers(&self) -> &[u16] {
        &self.maximizers
    }

    pub fn min_fitness(&self) -> f64 {
        self.min_fitness
    }

    pub fn minimizers(&self) -> &[u16] {
        &self.minimizers
    }

    pub fn is_maximizer(&self, index: u16) -> bool {
        self.maximizers.binary_search(&index).is_ok()
    }
}
