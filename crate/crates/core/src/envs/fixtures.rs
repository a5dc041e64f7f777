//! Hand-written reference machines and the scripted cookie policy.

use super::layout::UP;
use super::{Domain, ObjectKind, Observation, BUTTON, COOKIE_CELLS};
use crate::rm::{RewardMachine, StateId};

/// The four-state cookie machine.
///
/// * `u0`: no cookie exists.
/// * `u1`: a cookie exists somewhere, location unknown.
/// * `u2`: the cookie is in the green room.
/// * `u3`: the cookie is in the blue room.
///
/// Pressing the button leads to `u1` from every other state. It satisfies
/// self-loop closure, so it can be scored on compressed corpora.
pub fn perfect_cookie_rm() -> RewardMachine {
    let ab = Domain::Cookie.alphabet();
    let o = |names: &[&str]| ab.obs(names.iter().copied()).expect("cookie propositions");
    let press = o(&["R3", "BP"]);
    let edges = [
        (0, press.clone(), 1),
        (1, o(&["R2"]), 2),
        (1, o(&["R2", "C"]), 3),
        (1, o(&["R0"]), 3),
        (1, o(&["R0", "C"]), 2),
        (2, o(&["R0", "CE"]), 0),
        (2, press.clone(), 1),
        (3, o(&["R2", "CE"]), 0),
        (3, press, 1),
    ];
    let mut rm = RewardMachine::new(4).expect("four states");
    for (from, obs, to) in edges {
        rm.set_transition(from, obs, to).expect("targets in range");
    }
    rm
}

/// Two-state gravity machine tracking whether the force is on (`u0`) or
/// off (`u1`); every button press toggles it. Toggling breaks self-loop
/// closure, so it only applies to uncompressed corpora.
pub fn perfect_gravity_rm() -> RewardMachine {
    let ab = Domain::Gravity.alphabet();
    let bp = ab.obs(["BP"]).expect("gravity propositions");
    let mut rm = RewardMachine::new(2).expect("two states");
    rm.set_transition(0, bp.clone(), 1).expect("in range");
    rm.set_transition(1, bp, 0).expect("in range");
    rm
}

/// Near-optimal cookie policy given the state `u` of [`perfect_cookie_rm`].
///
/// In `u0` it heads for the button, in `u1` it tries the blue room first,
/// and in `u2`/`u3` it walks to the known cookie cell. A visible cookie is
/// always taken directly.
pub fn scripted_cookie_action(
    layout: &super::layout::Layout,
    obs: &Observation,
    u: StateId,
) -> usize {
    let visible_cookie = obs
        .visible
        .iter()
        .find(|v| v.kind == ObjectKind::Cookie)
        .map(|v| v.cell);
    let target = match (visible_cookie, u) {
        (Some(c), _) => c,
        (None, 0) => BUTTON,
        (None, 2) => COOKIE_CELLS[1],
        (None, _) => COOKIE_CELLS[0],
    };
    layout.step_towards(obs.pos, target).unwrap_or(UP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::Env;

    #[test]
    fn closure_holds_for_cookie_but_not_gravity() {
        assert!(perfect_cookie_rm().closure_violations().is_empty());
        // Pressing twice toggles back, so this one is for uncompressed corpora.
        assert_eq!(perfect_gravity_rm().closure_violations().len(), 2);
    }

    #[test]
    fn scripted_policy_collects_cookies() {
        let mut env = Env::new(Domain::Cookie);
        let rm = perfect_cookie_rm();
        let mut obs = env.reset(5);
        let mut u = 0;
        let mut total = 0.0;
        loop {
            let a = scripted_cookie_action(env.layout(), &obs, u);
            let step = env.step(a).unwrap();
            u = rm.transition(u, &env.label(None, &step.obs)).unwrap();
            total += step.reward;
            obs = step.obs;
            if step.done {
                break;
            }
        }
        assert!(total > 100.0, "{total}");
    }
}
