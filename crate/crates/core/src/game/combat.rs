use serde::{Deserialize, Serialize};

use super::RuleError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombatOutcome {
    pub attacker_losses: u32,
    pub defender_losses: u32,
    pub conquered: bool,
    pub moved_in: u32,
}

/// One exchange of dice. Both slices are sorted descending in place and
/// compared pairwise; ties go to the defender. Returns
/// `(attacker_losses, defender_losses)`.
pub fn dice_round(attack: &mut [u8], defend: &mut [u8]) -> (u32, u32) {
    attack.sort_unstable_by(|a, b| b.cmp(a));
    defend.sort_unstable_by(|a, b| b.cmp(a));
    let mut losses = (0, 0);
    for (a, d) in attack.iter().zip(defend.iter()) {
        if a > d {
            losses.1 += 1;
        } else {
            losses.0 += 1;
        }
    }
    losses
}

/// Fights until either the committed attackers or the defenders are gone.
///
/// The attacker rolls `min(3, committed left)` dice and the defender
/// `min(2, defenders left)` each round; attacker dice are drawn before
/// defender dice. `roll` must yield values in `1..=6`.
pub fn resolve_combat(
    committed: u32,
    defenders: u32,
    mut roll: impl FnMut() -> u8,
) -> Result<CombatOutcome, RuleError> {
    if committed == 0 {
        return Err(RuleError::NoAttackers);
    }
    if defenders == 0 {
        return Err(RuleError::NoDefenders);
    }
    let (mut att, mut def) = (committed, defenders);
    let mut a_dice = [0u8; 3];
    let mut d_dice = [0u8; 2];
    while att > 0 && def > 0 {
        let na = att.min(3) as usize;
        let nd = def.min(2) as usize;
        for d in a_dice.iter_mut().take(na) {
            *d = roll();
        }
        for d in d_dice.iter_mut().take(nd) {
            *d = roll();
        }
        let (la, ld) = dice_round(&mut a_dice[..na], &mut d_dice[..nd]);
        att -= la;
        def -= ld;
    }
    let conquered = def == 0;
    Ok(CombatOutcome {
        attacker_losses: committed - att,
        defender_losses: defenders - def,
        conquered,
        moved_in: if conquered { att } else { 0 },
    })
}
