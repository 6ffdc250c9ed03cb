//! Agents: learned invention biases and the adopt/imitate decision rules.
//!
//! Each agent owns one action, a cached fitness, and a small learned state
//! that biases future inventions: a per-part probability of keeping a moving
//! part in motion, and a single probability of choosing mirror-symmetric limb
//! directions. Both drift in 0.1 steps as the agent compares each newly
//! learned action against the one it replaced.

use crate::action::{Action, BodyPart, Posture, TrendActivations, PART_COUNT};
use crate::fitness::FitnessSpec;
use crate::world::Cell;
use rand::Rng;

pub type AgentId = usize;

const KBO_STEP: f64 = 0.1;

/// Learned invention biases ("knowledge of own body").
#[derive(Clone, Debug, PartialEq)]
pub struct KboState {
    /// Per-part probability that a mutating moving part stays in motion.
    pub p_im: [f64; PART_COUNT],
    /// Probability that a limb entering motion opposes its moving pair
    /// counterpart.
    pub p_sym: f64,
}

impl Default for KboState {
    fn default() -> Self {
        KboState { p_im: [0.5; PART_COUNT], p_sym: 0.5 }
    }
}

impl KboState {
    /// Probability that a mutating moving part comes to rest.
    pub fn p_dm(&self, part: usize) -> f64 {
        1.0 - self.p_im[part]
    }

    /// Shift the biases by comparing the activations of a replaced action
    /// against the newly learned one: more movement nudges every `p_im` up by
    /// 0.1, less nudges them down, and `p_sym` follows symmetry the same way.
    /// Values are clamped to [0, 1]; equal activations leave the bias alone.
    pub fn updated(&self, old: TrendActivations, new: TrendActivations) -> KboState {
        let shift = |p: f64, was: f64, now: f64| -> f64 {
            if now > was {
                (p + KBO_STEP).clamp(0.0, 1.0)
            } else if now < was {
                (p - KBO_STEP).clamp(0.0, 1.0)
            } else {
                p
            }
        };
        KboState {
            p_im: self.p_im.map(|p| shift(p, old.movement, new.movement)),
            p_sym: shift(self.p_sym, old.symmetry, new.symmetry),
        }
    }
}

/// One grid inhabitant.
#[derive(Clone, Debug)]
pub struct AgentState {
    pub id: AgentId,
    pub position: Cell,
    pub current_action: Action,
    pub current_fitness: f64,
    pub kbo: KboState,
    /// Probability of attempting invention rather than imitation, after any
    /// regional override has been applied.
    pub invention_prob: f64,
}

impl AgentState {
    /// A fresh agent at rest.
    pub fn new(id: AgentId, position: Cell, spec: &FitnessSpec, invention_prob: f64) -> AgentState {
        let action = Action::stationary();
        AgentState {
            id,
            position,
            current_fitness: spec.evaluate(&action),
            current_action: action,
            kbo: KboState::default(),
            invention_prob,
        }
    }

    /// Mental simulation: adopt only what scores strictly higher than the
    /// action currently held.
    pub fn would_adopt(&self, candidate: &Action, spec: &FitnessSpec) -> bool {
        spec.evaluate(candidate) > self.current_fitness
    }

    /// Scan candidates in the given order and return the first strictly
    /// fitter action, if any. Callers pass the list pre-shuffled, so "first"
    /// is a uniformly random fitter candidate rather than a best-of.
    pub fn scan_candidates(&self, candidates: &[(AgentId, Action)], spec: &FitnessSpec) -> Option<Action> {
        candidates
            .iter()
            .map(|(_, action)| action)
            .find(|action| self.would_adopt(action, spec))
            .copied()
    }

    /// Replace the held action with a strictly fitter one, updating the
    /// learned biases from the old/new activation comparison first.
    ///
    /// Panics if the replacement is not strictly fitter; the engine only
    /// commits candidates that passed [`AgentState::would_adopt`].
    pub fn learn_and_implement(&mut self, new_action: Action, spec: &FitnessSpec) {
        assert!(
            self.would_adopt(&new_action, spec),
            "agent {} may only learn a strictly fitter action",
            self.id
        );
        self.adopt_unchecked(new_action, spec);
    }

    /// Adoption without the fitness gate, for runs with mental simulation
    /// disabled. The bias update and fitness cache behave exactly as in
    /// [`AgentState::learn_and_implement`].
    pub(crate) fn adopt_unchecked(&mut self, new_action: Action, spec: &FitnessSpec) {
        let old = self.current_action.trend_activations();
        let new = new_action.trend_activations();
        self.kbo = self.kbo.updated(old, new);
        self.current_action = new_action;
        self.current_fitness = spec.evaluate(&new_action);
    }
}

/// Generate a variation of `base`: each part independently mutates with
/// probability `rate`, always to a posture different from its current one.
///
/// A stationary part always enters motion; its direction follows the
/// symmetry bias when its pair counterpart is already moving (opposite with
/// probability `p_sym`, parallel otherwise) and is uniform for the head, the
/// hips, or a limb with a resting counterpart. A moving part comes to rest
/// with probability `1 - p_im` and otherwise flips direction. Counterpart
/// postures are read from `base`, so simultaneous mutations stay independent.
///
/// The result may equal `base` when no part mutates.
pub fn invent(base: &Action, kbo: &KboState, rate: f64, rng: &mut impl Rng) -> Action {
    assert!((0.0..=1.0).contains(&rate), "rate of conceptual change must lie in [0, 1], got {rate}");
    let mut out = *base;
    for part in BodyPart::ALL {
        if rng.random::<f64>() >= rate {
            continue;
        }
        let current = base.part(part);
        let next = if current == Posture::Stationary {
            enter_motion(base, part, kbo.p_sym, rng)
        } else if rng.random::<f64>() < kbo.p_dm(part.index()) {
            Posture::Stationary
        } else {
            current.opposite()
        };
        out.set_part(part, next);
    }
    out
}

/// Direction for a part leaving `Stationary`.
fn enter_motion(base: &Action, part: BodyPart, p_sym: f64, rng: &mut impl Rng) -> Posture {
    if let Some(counterpart) = part.pair_counterpart() {
        let other = base.part(counterpart);
        if other.is_moving() {
            return if rng.random::<f64>() < p_sym { other.opposite() } else { other };
        }
    }
    if rng.random::<f64>() < 0.5 {
        Posture::Left
    } else {
        Posture::Right
    }
}
