//! Per-iteration population statistics and their CSV rendering.
//!
//! Diversity (distinct actions), mean fitness, the modal action and its
//! share, and the population share sitting on each globally optimal action
//! are the normative statistics; Shannon entropy of the action distribution
//! is emitted alongside them as an auxiliary column only.

use crate::action::Action;
use crate::fitness::{FitnessSpec, Landscape};
use std::collections::BTreeMap;

/// Share of the population that must hold a globally optimal action for a
/// run to count as converged.
pub const CONVERGENCE_SHARE: f64 = 0.9;

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub iteration: u32,
    pub mean_fitness: f64,
    /// Number of distinct actions present.
    pub diversity: usize,
    /// Most common action; ties resolve toward the lowest action index.
    pub top_action_index: u16,
    pub top_fraction: f64,
    /// Auxiliary Shannon entropy (nats) of the action distribution.
    pub entropy: f64,
    /// `(action index, population share)` for every global optimum,
    /// ascending by index.
    pub optimum_shares: Vec<(u16, f64)>,
}

fn counts(actions: &[Action]) -> BTreeMap<u16, usize> {
    assert!(!actions.is_empty(), "metrics need at least one agent");
    let mut map = BTreeMap::new();
    for a in actions {
        *map.entry(a.index()).or_insert(0usize) += 1;
    }
    map
}

pub fn diversity(actions: &[Action]) -> usize {
    counts(actions).len()
}

pub fn mean_fitness(actions: &[Action], spec: &FitnessSpec) -> f64 {
    assert!(!actions.is_empty(), "metrics need at least one agent");
    actions.iter().map(|a| spec.evaluate(a)).sum::<f64>() / actions.len() as f64
}

/// `(index, share)` of the modal action; ties toward the lowest index.
pub fn top_action(actions: &[Action]) -> (u16, f64) {
    let counts = counts(actions);
    let (&index, &count) = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .expect("non-empty");
    (index, count as f64 / actions.len() as f64)
}

/// Shannon entropy (nats) of the action distribution.
pub fn entropy(actions: &[Action]) -> f64 {
    let n = actions.len() as f64;
    let sum: f64 = counts(actions)
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    // A single-action population yields -0.0; + 0.0 makes it render as `0`.
    sum + 0.0
}

/// Population share on each globally optimal action, ascending by index.
pub fn optimum_shares(actions: &[Action], landscape: &Landscape) -> Vec<(u16, f64)> {
    let counts = counts(actions);
    let n = actions.len() as f64;
    landscape
        .maximizers()
        .iter()
        .map(|&idx| (idx, counts.get(&idx).copied().unwrap_or(0) as f64 / n))
        .collect()
}

pub fn collect(iteration: u32, actions: &[Action], spec: &FitnessSpec, landscape: &Landscape) -> MetricsRow {
    let (top_action_index, top_fraction) = top_action(actions);
    MetricsRow {
        iteration,
        mean_fitness: mean_fitness(actions, spec),
        diversity: diversity(actions),
        top_action_index,
        top_fraction,
        entropy: entropy(actions),
        optimum_shares: optimum_shares(actions, landscape),
    }
}

/// First iteration at which the combined optimum share reaches
/// [`CONVERGENCE_SHARE`]; `None` when the run never converges. A small
/// tolerance absorbs the rounding in summed per-optimum shares.
pub fn convergence_iteration(rows: &[MetricsRow]) -> Option<u32> {
    rows.iter()
        .find(|row| row.optimum_shares.iter().map(|(_, s)| s).sum::<f64>() + 1e-9 >= CONVERGENCE_SHARE)
        .map(|row| row.iteration)
}

/// Header matching [`to_csv_row`]: fixed statistics first, then one
/// `opt_<action index>` column per global optimum.
pub fn csv_header(landscape: &Landscape) -> String {
    let mut out = String::from("iteration,mean_fitness,diversity,top_action_index,top_fraction,entropy");
    for idx in landscape.maximizers() {
        out.push_str(&format!(",opt_{idx}"));
    }
    out
}

pub fn to_csv_row(row: &MetricsRow) -> String {
    let mut out = format!(
        "{},{},{},{},{},{}",
        row.iteration, row.mean_fitness, row.diversity, row.top_action_index, row.top_fraction, row.entropy
    );
    for (_, share) in &row.optimum_shares {
        out.push_str(&format!(",{share}"));
    }
    out
}

/// Full metrics CSV for one run, newline-terminated.
pub fn write_csv(rows: &[MetricsRow], landscape: &Landscape) -> String {
    let mut out = csv_header(landscape);
    out.push('\n');
    for row in rows {
        out.push_str(&to_csv_row(row));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::Posture::{Left as L, Right as R, Stationary as S};

    fn acts(list: &[Action]) -> Vec<Action> {
        list.to_vec()
    }

    #[test]
    fn diversity_counts_distinct_actions() {
        let a = Action::stationary();
        let b = Action::new([L, R, S, S, S, S]);
        assert_eq!(diversity(&acts(&[a, a, a])), 1);
        assert_eq!(diversity(&acts(&[a, b, a, b])), 2);
    }

    #[test]
    fn single_action_population_is_fully_top() {
        let a = Action::new([L, R, S, S, S, S]);
        let (idx, frac) = top_action(&acts(&[a, a, a, a]));
        assert_eq!(idx, a.index());
        assert_eq!(frac, 1.0);
    }

    #[test]
    fn top_action_tie_resolves_to_lowest_index() {
        let a = Action::new([L, R, S, S, S, S]);
        let b = Action::new([R, L, S, S, S, S]);
        let (low, high) = if a.index() < b.index() { (a, b) } else { (b, a) };
        let (idx, frac) = top_action(&acts(&[high, low, high, low]));
        assert_eq!(idx, low.index());
        assert_eq!(frac, 0.5);
    }

    #[test]
    fn mean_fitness_of_rest_is_zero_under_f1() {
        let rest = acts(&[Action::stationary(); 5]);
        assert_eq!(mean_fitness(&rest, &FitnessSpec::F1), 0.0);
    }

    #[test]
    fn optimum_shares_track_each_optimum() {
        let landscape = Landscape::enumerate(&FitnessSpec::F1);
        let rest = Action::stationary();
        let shares = optimum_shares(&acts(&[rest; 4]), &landscape);
        assert_eq!(shares.len(), 8);
        assert!(shares.iter().all(|(_, s)| *s == 0.0));

        let top = Action::new([L, R, L, R, S, R]);
        let shares = optimum_shares(&acts(&[top; 3]), &landscape);
        let at_top: Vec<f64> = shares.iter().filter(|(i, _)| *i == top.index()).map(|(_, s)| *s).collect();
        assert_eq!(at_top, vec![1.0]);
        assert_eq!(shares.iter().map(|(_, s)| s).sum::<f64>(), 1.0);

        let mixed = acts(&[top, top, rest, rest]);
        let shares = optimum_shares(&mixed, &landscape);
        assert_eq!(shares.iter().map(|(_, s)| s).sum::<f64>(), 0.5);
    }

    #[test]
    fn entropy_is_zero_for_uniformity_and_ln_n_for_spread() {
        let a = Action::stationary();
        assert_eq!(entropy(&acts(&[a; 6])), 0.0);
        let distinct: Vec<Action> = (0..8).map(|i| Action::from_index(i).unwrap()).collect();
        let h = entropy(&distinct);
        assert!((h - (8.0f64).ln()).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "at least one agent")]
    fn metrics_reject_an_empty_population() {
        diversity(&[]);
    }

    #[test]
    fn convergence_uses_combined_optimum_share() {
        let landscape = Landscape::enumerate(&FitnessSpec::F1);
        let spec = FitnessSpec::F1;
        let top_a = Action::new([L, R, L, R, S, R]);
        let top_b = Action::new([R, L, L, R, S, R]);
        let rest = Action::stationary();

        // 8 of 10 on optima: not converged.
        let mut population = vec![top_a; 5];
        population.extend(vec![top_b; 3]);
        population.extend(vec![rest; 2]);
        let row_low = collect(4, &population, &spec, &landscape);

        // 9 of 10 spread across two optima: converged.
        let mut population = vec![top_a; 5];
        population.extend(vec![top_b; 4]);
        population.push(rest);
        let row_high = collect(5, &population, &spec, &landscape);

        assert_eq!(convergence_iteration(&[row_low.clone()]), None);
        assert_eq!(convergence_iteration(&[row_low, row_high]), Some(5));
    }

    #[test]
    fn csv_layout_matches_specification() {
        let landscape = Landscape::enumerate(&FitnessSpec::F1);
        let header = csv_header(&landscape);
        assert_eq!(
            header,
            "iteration,mean_fitness,diversity,top_action_index,top_fraction,entropy,\
             opt_101,opt_105,opt_137,opt_141,opt_587,opt_591,opt_623,opt_627"
        );
        let rest = acts(&[Action::stationary(); 4]);
        let row = collect(0, &rest, &FitnessSpec::F1, &landscape);
        assert_eq!(to_csv_row(&row), "0,0,1,364,1,0,0,0,0,0,0,0,0,0");
        let csv = write_csv(&[row], &landscape);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn csv_floats_round_trip_exactly() {
        let landscape = Landscape::enumerate(&FitnessSpec::F1);
        let mut population = vec![Action::new([L, R, L, R, S, R]); 3];
        population.push(Action::stationary());
        let row = collect(7, &population, &FitnessSpec::F1, &landscape);
        let line = to_csv_row(&row);
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1].parse::<f64>().unwrap(), row.mean_fitness);
        assert_eq!(fields[4].parse::<f64>().unwrap(), row.top_fraction);
        assert_eq!(fields[5].parse::<f64>().unwrap(), row.entropy);
    }
}
