//! Propositional entailment over 0/1 valuations, by enumeration.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{Conclusion, VecId};

/// Enumeration is capped at this many distinct vectors.
pub const MAX_ENTAILMENT_VARS: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("entailment over {0} vectors exceeds the cap of {MAX_ENTAILMENT_VARS}")]
    TooManyVariables(usize),
}

pub type Assignment = BTreeMap<VecId, u8>;

fn holds(c: &Conclusion, val: &impl Fn(VecId) -> u8) -> bool {
    match c {
        Conclusion::Facts(fs) => fs.iter().all(|&(v, b)| val(v) == b),
        Conclusion::Linear { terms, rhs } => {
            terms.iter().map(|&(v, k)| k * val(v) as i64).sum::<i64>() == *rhs
        }
        Conclusion::Le { lo, hi } => val(*lo) <= val(*hi),
        Conclusion::Contradiction => false,
    }
}

/// True iff every 0/1 assignment satisfying all `premises` and giving equal
/// values to each pair in `equal` also satisfies `claim`. A `Contradiction`
/// claim holds iff the premises are unsatisfiable.
pub fn entails(
    premises: &[&Conclusion],
    equal: &[(VecId, VecId)],
    claim: &Conclusion,
) -> Result<bool, LogicError> {
    let mut vars: Vec<VecId> = premises.iter().flat_map(|c| c.vectors()).collect();
    vars.extend(claim.vectors());
    vars.extend(equal.iter().flat_map(|&(a, b)| [a, b]));
    vars.sort_unstable();
    vars.dedup();
    if vars.len() > MAX_ENTAILMENT_VARS {
        return Err(LogicError::TooManyVariables(vars.len()));
    }
    let index: BTreeMap<VecId, usize> = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    for bits in 0u32..(1u32 << vars.len()) {
        let val = |v: VecId| ((bits >> index[&v]) & 1) as u8;
        if equal.iter().any(|&(a, b)| val(a) != val(b)) {
            continue;
        }
        if premises.iter().all(|c| holds(c, &val)) && !holds(claim, &val) {
            return Ok(false);
        }
    }
    Ok(true)
}
