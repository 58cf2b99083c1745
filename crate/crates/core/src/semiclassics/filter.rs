//! Selection of contributing members in secondary families.
//!
//! A secondary member at `x_f` is removed when `Im F_s < 0` (it would grow
//! without bound as `hbar -> 0`) or when `0 <= Im F_s < Im F_m` (it would
//! dominate the main family). Where a family runs from the allowed region
//! into the removed one, the members removed only by the second rule form a
//! band; the cut is placed inside that band, or at its edge, where the total
//! wavefunction jumps least.

use num_complex::Complex64;

use super::formulas::psi_ct;
use crate::model::CoherentState;
use crate::rootsearch::{FamilyLabel, MemberStatus, TrajectoryFamily};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesCut {
    pub family: FamilyLabel,
    /// Last contributing member before the cut.
    pub kept_x_f: f64,
    /// First removed member.
    pub removed_x_f: f64,
    pub jump: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rule {
    Allowed,
    /// `0 <= Im F_s < Im F_m`.
    Subdominant,
    /// `Im F_s < 0`.
    Growing,
}

fn classify(im_s: f64, im_m: Option<f64>) -> Rule {
    if im_s < 0.0 {
        Rule::Growing
    } else if im_m.is_some_and(|m| im_s < m) {
        Rule::Subdominant
    } else {
        Rule::Allowed
    }
}

fn psi_or_nan(family: &TrajectoryFamily, k: usize, state: &CoherentState) -> Complex64 {
    let member = &family.members[k];
    psi_ct(&member.trajectory, state).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
}

/// Marks every member `Contributing` or `Cut`. Main members are never cut;
/// secondary members duplicating a main member are cut.
pub fn filter_families(families: &mut [TrajectoryFamily], state: &CoherentState) -> Result<Vec<StokesCut>, super::SemiclassicalError> {
    let main_pos = families
        .iter()
        .position(|f| f.label == FamilyLabel::Main)
        .ok_or(super::SemiclassicalError::MissingMain)?;
    let (before, rest) = families.split_at_mut(main_pos);
    let (main, after) = rest.split_first_mut().expect("main family present");
    for m in &mut main.members {
        m.status = MemberStatus::Contributing;
    }
    let main: &TrajectoryFamily = main;
    let mut cuts = Vec::new();
    for family in before.iter_mut().chain(after.iter_mut()) {
        cuts.extend(filter_secondary(family, main, state));
    }
    Ok(cuts)
}

fn filter_secondary(family: &mut TrajectoryFamily, main: &TrajectoryFamily, state: &CoherentState) -> Vec<StokesCut> {
    let n = family.members.len();
    let main_psi = |grid_index: usize| {
        main.member_at(grid_index)
            .map(|m| psi_ct(&m.trajectory, state).unwrap_or(Complex64::new(f64::NAN, f64::NAN)))
            .unwrap_or_default()
    };
    let rules: Vec<Rule> = family
        .members
        .iter()
        .map(|m| {
            let main_member = main.member_at(m.grid_index);
            if main_member.is_some_and(|mm| (mm.w - m.w).norm() < 1e-6 * state.b()) {
                return Rule::Growing;
            }
            classify(m.f.im, main_member.map(|mm| mm.f.im))
        })
        .collect();
    let mut keep: Vec<bool> = rules.iter().map(|&r| r == Rule::Allowed).collect();
    let mut cuts = Vec::new();

    // Walk away from each allowed -> removed transition in both directions.
    for dir in [1i64, -1] {
        for start in 0..n {
            if rules[start] != Rule::Allowed {
                continue;
            }
            let next = start as i64 + dir;
            if next < 0 || next >= n as i64 || rules[next as usize] == Rule::Allowed {
                continue;
            }
            // Candidate "last kept" positions: the allowed edge, then each
            // subdominant member in the band.
            let mut candidates = vec![start];
            let mut k = next;
            while k >= 0 && (k as usize) < n && rules[k as usize] == Rule::Subdominant {
                candidates.push(k as usize);
                k += dir;
            }
            let mut best: Option<(usize, usize, f64)> = None;
            for &last in &candidates {
                let removed = last as i64 + dir;
                if removed < 0 || removed >= n as i64 {
                    continue;
                }
                let removed = removed as usize;
                let with = main_psi(family.members[last].grid_index) + psi_or_nan(family, last, state);
                let without = main_psi(family.members[removed].grid_index);
                let jump = (with - without).norm();
                if jump.is_finite() && best.is_none_or(|b| jump < b.2) {
                    best = Some((last, removed, jump));
                }
            }
            if let Some((last, removed, jump)) = best {
                let (lo, hi) = if dir > 0 { (start, last) } else { (last, start) };
                for flag in &mut keep[lo..=hi] {
                    *flag = true;
                }
                cuts.push(StokesCut {
                    family: family.label,
                    kept_x_f: family.members[last].x_f,
                    removed_x_f: family.members[removed].x_f,
                    jump,
                });
            }
        }
    }
    for (m, k) in family.members.iter_mut().zip(keep) {
        m.status = if k { MemberStatus::Contributing } else { MemberStatus::Cut };
    }
    cuts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        assert_eq!(classify(-0.1, Some(0.0)), Rule::Growing);
        assert_eq!(classify(-0.1, None), Rule::Growing);
        assert_eq!(classify(0.2, Some(0.5)), Rule::Subdominant);
        assert_eq!(classify(0.5, Some(0.2)), Rule::Allowed);
        assert_eq!(classify(0.0, None), Rule::Allowed);
    }
}
