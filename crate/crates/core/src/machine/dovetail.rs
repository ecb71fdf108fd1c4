use super::{decode_program, Execution, MachineError, ProgramIndex, RunOutcome};
use crate::oracle::HaltingSurrogate;

/// Round-robin execution of programs `0..=x_max` (each on its own index),
/// continuing from `prior`.
///
/// The schedule works in levels: level `L` gives one step to every program
/// that has taken `L - 1` steps and has not halted. A level is only started
/// if its full cost fits in the remaining budget, so the result always has a
/// single common bound (the last completed level) and satisfies the
/// surrogate invariant.
///
/// Programs beyond `prior.x_max()` first catch up to the prior bound. If the
/// budget cannot cover that catch-up, `prior` is returned unchanged.
pub fn dovetail(
    x_max: ProgramIndex,
    budget: u64,
    prior: &HaltingSurrogate,
) -> Result<HaltingSurrogate, MachineError> {
    dovetail_counted(x_max, budget, prior).map(|(s, _)| s)
}

/// [`dovetail`], also returning the number of steps charged to the budget.
pub fn dovetail_counted(
    x_max: ProgramIndex,
    budget: u64,
    prior: &HaltingSurrogate,
) -> Result<(HaltingSurrogate, u64), MachineError> {
    let prior_len = prior.len() as u64;
    let last = prior.x_max().map_or(x_max, |p| p.max(x_max));
    let count = usize::try_from(last)
        .ok()
        .and_then(|n| n.checked_add(1))
        .ok_or(MachineError::Overflow("dovetail range"))?;

    let mut outcomes: Vec<Option<u64>> = vec![None; count];
    let mut runs: Vec<(usize, Execution)> = Vec::new();
    let mut fresh: Vec<(usize, Execution)> = Vec::new();

    for x in 0..=last {
        let slot = x as usize;
        match prior.record(x) {
            Some(RunOutcome::Halted { steps }) => outcomes[slot] = Some(steps),
            Some(RunOutcome::Exhausted { bound }) => {
                // Replaying work already reflected in `prior` is not charged.
                let mut exec = Execution::new(&decode_program(x), x);
                exec.run_to(bound)?;
                runs.push((slot, exec));
            }
            None => {
                let exec = Execution::new(&decode_program(x), x);
                if exec.is_halted() {
                    outcomes[slot] = Some(0);
                } else {
                    fresh.push((slot, exec));
                }
            }
        }
    }

    let mut used = 0u64;
    let mut level = 0u64;
    let prior_bound = if prior_len == 0 { 0 } else { prior.bound() };

    // Catch-up: only the new programs step until they reach the prior bound.
    while level < prior_bound && !fresh.is_empty() {
        let cost = fresh.len() as u64;
        if used + cost > budget {
            return Ok((prior.clone(), 0));
        }
        level += 1;
        used += cost;
        sweep(&mut fresh, &mut outcomes, level)?;
    }
    level = level.max(prior_bound);
    runs.append(&mut fresh);
    runs.sort_by_key(|(slot, _)| *slot);

    loop {
        let cost = runs.len() as u64;
        if cost == 0 || used + cost > budget {
            break;
        }
        level += 1;
        used += cost;
        sweep(&mut runs, &mut outcomes, level)?;
    }

    let records = outcomes
        .into_iter()
        .map(|o| match o {
            Some(steps) => RunOutcome::Halted { steps },
            None => RunOutcome::Exhausted { bound: level },
        })
        .collect();
    Ok((HaltingSurrogate::from_records(level, records), used))
}

fn sweep(
    runs: &mut Vec<(usize, Execution)>,
    outcomes: &mut [Option<u64>],
    level: u64,
) -> Result<(), MachineError> {
    let mut err = None;
    runs.retain_mut(|(slot, exec)| {
        if err.is_some() {
            return true;
        }
        match exec.step() {
            Ok(true) => {
                debug_assert_eq!(exec.steps(), level);
                outcomes[*slot] = Some(level);
                false
            }
            Ok(false) => true,
            Err(e) => {
                err = Some(e);
                true
            }
        }
    });
    err.map_or(Ok(()), Err)
}
