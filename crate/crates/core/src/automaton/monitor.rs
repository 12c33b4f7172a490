use super::dfa::{Dfa, StateId};
use super::letter::Letter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MonitorStatus {
    Progressing,
    Accepting,
    Violated,
}

impl MonitorStatus {
    pub fn name(self) -> &'static str {
        match self {
            MonitorStatus::Progressing => "progressing",
            MonitorStatus::Accepting => "accepting",
            MonitorStatus::Violated => "violated",
        }
    }
}

/// Position of a running trace in an automaton.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonitorState {
    pub current: StateId,
    /// Consecutive steps spent in `current`; 0 before the first letter.
    pub steps_in_state: u32,
    pub status: MonitorStatus,
}

impl MonitorState {
    pub fn start(dfa: &Dfa) -> Self {
        Self { current: dfa.initial(), steps_in_state: 0, status: status_of(dfa, dfa.initial()) }
    }
}

fn status_of(dfa: &Dfa, s: StateId) -> MonitorStatus {
    if dfa.is_dead(s) {
        MonitorStatus::Violated
    } else if dfa.is_accepting(s) {
        MonitorStatus::Accepting
    } else {
        MonitorStatus::Progressing
    }
}

/// Advances the monitor by one letter.
pub fn monitor_step(m: MonitorState, dfa: &Dfa, letter: Letter) -> MonitorState {
    let next = dfa.step(m.current, letter);
    let steps_in_state = if next == m.current && m.steps_in_state > 0 { m.steps_in_state + 1 } else { 1 };
    MonitorState { current: next, steps_in_state, status: status_of(dfa, next) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{compile, LetterSpace};
    use crate::ltl::{parse, Alphabet};

    fn dfa(text: &str) -> Dfa {
        let alpha = Alphabet::symbols(2);
        compile(&parse(text, &alpha).unwrap(), LetterSpace::one_hot(2)).unwrap()
    }

    #[test]
    fn eventually_counts_repeats() {
        let d = dfa("F b");
        let a = Letter(1);
        let mut m = MonitorState::start(&d);
        m = monitor_step(m, &d, a);
        assert_eq!((m.status, m.steps_in_state), (MonitorStatus::Progressing, 1));
        m = monitor_step(m, &d, a);
        assert_eq!((m.status, m.steps_in_state), (MonitorStatus::Progressing, 2));
        m = monitor_step(m, &d, Letter(2));
        assert_eq!((m.status, m.steps_in_state), (MonitorStatus::Accepting, 1));
    }

    #[test]
    fn always_violated() {
        let d = dfa("G a");
        let m = monitor_step(MonitorState::start(&d), &d, Letter(2));
        assert_eq!(m.status, MonitorStatus::Violated);
    }
}
